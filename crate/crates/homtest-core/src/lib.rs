//! Exact-arithmetic kernels for homomorphism testing over finite groups:
//! group/field arithmetic, codeword spaces, evaluation-map constants,
//! test-defining samplers, the test procedures, and brute-force oracles.

pub mod error;
pub mod exact;
pub mod evalmap;
pub mod field;
pub mod group;
pub mod hom;
pub mod oracle;
pub mod sampler;
pub mod testing;

pub use error::{Error, Result};
pub use evalmap::{CodewordSpace, ConstantsReport, EvalMapCtx};
pub use field::FieldCtx;
pub use group::{Elem, Enumeration, GroupDescriptor};
pub use hom::{Hom, HomKind, ProjectionSpec, QueryFunction};
pub use oracle::{
    FunctionGenerator, LiftReport, ListDecodeReport, SandwichReport, SandwichRow,
};
pub use sampler::{FiberSampler, RngStream, WeightedTupleTable};
pub use testing::{DeltaEstimate, SoundnessBounds, TestKind, TestSpec};
