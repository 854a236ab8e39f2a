//! Batch experiment runner: config parsing, campaign execution and report
//! rendering, plus the oracle verification matrix behind `homtest verify`.

pub mod campaign;
pub mod config;
pub mod verify;

pub use campaign::{run_campaign, RunReport};
pub use config::{cap_from_env, parse_config, parse_space, ExperimentConfig, GenSpec, Mode};
pub use verify::{run_verify, verify_csv, verify_json, VerifyRow};
