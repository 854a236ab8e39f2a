//! Campaign execution: one row per arity k, rows on a rayon pool with a
//! split RNG stream per row, single-threaded report assembly.

use crate::config::{ExperimentConfig, GenSpec, Mode};
use homtest_core::evalmap::CodewordSpace;
use homtest_core::hom::agreement_nonzero;
use homtest_core::oracle::{self, FunctionGenerator};
use homtest_core::testing::{estimate_record, soundness_bounds};
use homtest_core::{
    Error, EvalMapCtx, QueryFunction, Result, RngStream, TestKind, TestSpec,
};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde_json::{json, Value};

pub struct RunReport {
    pub json: Value,
    /// Counterexample dumps, one per failed assertion.
    pub failures: Vec<String>,
    pub wall_ms: u128,
}

fn find_codeword(ctx: &EvalMapCtx, name: &str) -> Result<usize> {
    if let Some(idx) = name.strip_prefix('#') {
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::InvalidDescriptor(format!("bad codeword index {name:?}")))?;
        if idx >= ctx.codewords.len() {
            return Err(Error::InvalidDescriptor(format!(
                "codeword index {idx} out of range (space has {})",
                ctx.codewords.len()
            )));
        }
        return Ok(idx);
    }
    ctx.codewords
        .iter()
        .position(|h| h.to_string() == name)
        .ok_or_else(|| Error::InvalidDescriptor(format!("no codeword {name:?} in {}", ctx.space)))
}

fn build_generator(ctx: &EvalMapCtx, gen: &GenSpec) -> Result<FunctionGenerator> {
    Ok(match gen {
        GenSpec::Random => FunctionGenerator::UniformRandom,
        GenSpec::Exact(cw) => FunctionGenerator::ExactCodeword { index: find_codeword(ctx, cw)? },
        GenSpec::Corrupt(cw, alpha) => FunctionGenerator::CorruptedCodeword {
            index: find_codeword(ctx, cw)?,
            alpha: alpha.clone(),
        },
        GenSpec::Mix(parts) => FunctionGenerator::PlantedMixture {
            parts: parts
                .iter()
                .map(|(cw, w)| Ok((find_codeword(ctx, cw)?, *w)))
                .collect::<Result<Vec<_>>>()?,
        },
    })
}

/// Exact maximum agreement with any codeword; the field-to-vector test
/// measures agreement over nonzero points only.
fn exact_max_agreement(spec: &TestSpec, f: &QueryFunction) -> Result<BigRational> {
    if spec.kind == TestKind::NonZero {
        return spec
            .ctx
            .codewords
            .iter()
            .map(|h| agreement_nonzero(f, h))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .ok_or_else(|| Error::Unsupported("empty codeword space".into()));
    }
    oracle::max_agreement(&spec.ctx, f)
}

fn rat_json(x: &BigRational) -> Value {
    json!({ "num": x.numer().to_string(), "den": x.denom().to_string() })
}

struct RowOut {
    json: Value,
    failures: Vec<String>,
}

fn run_row(cfg: &ExperimentConfig, row: usize, k: u32) -> Result<RowOut> {
    let ctx = EvalMapCtx::new(cfg.space.clone(), k, cfg.cap)?;
    let spec = TestSpec::new(cfg.kind, ctx, true)?;
    let generator = build_generator(&spec.ctx, &cfg.gen)?;
    let mut rng = RngStream::substream(cfg.seed, row as u64);
    let f = generator.generate(&spec.ctx, &mut rng)?;
    let est = match cfg.mode {
        Mode::Exact => spec.delta_exact(&f)?,
        Mode::Mc(trials) => spec.delta_mc(&f, trials, &mut rng)?,
    };
    let (bounds, bounds_note) = match soundness_bounds(&spec, &est.value) {
        Ok(b) => (Some(b), None),
        Err(Error::OutOfTheoremRange { k, family, reason }) => (
            None,
            Some(format!("k={k} outside theorem range for {family}: {reason}")),
        ),
        Err(Error::Unsupported(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let mut failures = Vec::new();
    let mut assertions = Vec::new();
    let mut record = estimate_record(&spec, &est, cfg.seed, bounds.as_ref());
    let obj = record.as_object_mut().unwrap();
    obj.insert("row".into(), json!(row));
    obj.insert("generator".into(), json!(format!("{:?}", cfg.gen)));
    obj.insert("bounds_note".into(), json!(bounds_note));
    obj.insert(
        "delta_tag".into(),
        json!(if est.is_exact() { "exact" } else { "estimated" }),
    );

    let max_agr = if est.is_exact() {
        let m = exact_max_agreement(&spec, &f)?;
        obj.insert("max_agreement".into(), rat_json(&m));
        obj.insert("max_agreement_tag".into(), json!("exact"));
        Some(m)
    } else {
        None
    };

    if let (Some(b), Some(m)) = (&bounds, &max_agr) {
        let pass = b.lower <= *m && *m <= b.upper;
        assertions.push(json!({ "name": "bounds-containment", "pass": pass }));
        if !pass {
            failures.push(format!(
                "bounds-containment failed: space={} test={} k={k} gen={:?} seed={} \
                 delta={}/{} max_agr={}/{} lower~{} upper~{}",
                spec.ctx.space,
                spec.kind,
                cfg.gen,
                cfg.seed,
                est.value.numer(),
                est.value.denom(),
                m.numer(),
                m.denom(),
                b.lower.to_f64().unwrap_or(f64::NAN),
                b.upper.to_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    if matches!(cfg.gen, GenSpec::Exact(_)) && est.is_exact() {
        let pass = est.value == BigRational::one();
        assertions.push(json!({ "name": "completeness", "pass": pass }));
        if !pass {
            failures.push(format!(
                "completeness failed: space={} test={} k={k} delta={}/{}",
                spec.ctx.space,
                spec.kind,
                est.value.numer(),
                est.value.denom(),
            ));
        }
    }
    if !cfg.eps.is_empty() {
        let listable = matches!(
            &spec.ctx.space,
            CodewordSpace::Hom { domain: homtest_core::GroupDescriptor::Cyclic(_), .. }
        );
        if listable {
            let mut list_rows = Vec::new();
            for eps in &cfg.eps {
                let rep = oracle::list_decode(&spec.ctx, &f, eps)?;
                if !rep.satisfied {
                    failures.push(format!(
                        "list-bound failed: space={} eps={}/{} size={} bound~{}",
                        spec.ctx.space,
                        eps.numer(),
                        eps.denom(),
                        rep.list_size,
                        rep.bound.to_f64().unwrap_or(f64::NAN),
                    ));
                }
                list_rows.push(json!({
                    "eps": rat_json(eps),
                    "size": rep.list_size,
                    "bound": rep.bound.to_f64(),
                    "pass": rep.satisfied,
                }));
            }
            assertions.push(json!({
                "name": "list-bound",
                "pass": list_rows.iter().all(|r| r["pass"] == json!(true)),
            }));
            obj.insert("list".into(), json!(list_rows));
        } else {
            obj.insert(
                "list_note".into(),
                json!("list bounds are stated for cyclic hom spaces; grid ignored"),
            );
        }
    }
    obj.insert("assertions".into(), json!(assertions));
    Ok(RowOut { json: record, failures })
}

/// Runs one row per k on a pool of `workers` threads. The report JSON is a
/// pure function of (config, seed): timing lives outside it, row RNG streams
/// are split from (seed, row), and assembly is ordered by row index.
pub fn run_campaign(cfg: &ExperimentConfig, workers: usize) -> Result<RunReport> {
    let start = std::time::Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Unsupported(format!("worker pool: {e}")))?;
    let rows: Vec<Result<RowOut>> = pool.install(|| {
        cfg.ks
            .par_iter()
            .enumerate()
            .map(|(row, &k)| run_row(cfg, row, k))
            .collect()
    });
    let mut row_jsons = Vec::new();
    let mut failures = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok(out) => {
                failures.extend(out.failures);
                row_jsons.push(out.json);
            }
            // resource-cap aborts are per-row, not fatal to the campaign
            Err(Error::TooLarge { needed, cap }) => row_jsons.push(json!({
                "row": i,
                "k": cfg.ks[i],
                "error": format!("enumeration cap exceeded: needed {needed}, cap {cap}"),
            })),
            Err(e) => return Err(e),
        }
    }
    let json = json!({
        "config": cfg.text.trim(),
        "space": cfg.space.to_string(),
        "test": cfg.kind.to_string(),
        "seed": cfg.seed,
        "cap": cfg.cap.to_string(),
        "warnings": cfg.warnings,
        "rows": row_jsons,
        "failures": failures,
    });
    Ok(RunReport { json, failures, wall_ms: start.elapsed().as_millis() })
}

impl RunReport {
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(&self.json).unwrap();
        s.push('\n');
        s.into_bytes()
    }

    /// Aligned text table, one line per row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let warnings = self.json["warnings"].as_array().unwrap();
        for w in warnings {
            out.push_str(&format!("warning: {}\n", w.as_str().unwrap_or("")));
        }
        out.push_str(&format!(
            "{:<4} {:<10} {:<26} {:<9} {:>12} {:>12} {:>12} {:>12} {:>6}\n",
            "k", "test", "space", "mode", "delta", "lower", "upper", "max_agr", "ok"
        ));
        for row in self.json["rows"].as_array().unwrap() {
            if let Some(err) = row.get("error").and_then(|e| e.as_str()) {
                out.push_str(&format!("{:<4} {}\n", row["k"], err));
                continue;
            }
            let num = |v: &Value| -> String {
                if v.is_null() {
                    "-".into()
                } else if let (Some(n), Some(d)) = (
                    v.get("num").and_then(|x| x.as_str()),
                    v.get("den").and_then(|x| x.as_str()),
                ) {
                    let fv = n.parse::<f64>().unwrap_or(f64::NAN)
                        / d.parse::<f64>().unwrap_or(f64::NAN);
                    format!("{fv:.6}")
                } else {
                    format!("{:.6}", v.as_f64().unwrap_or(f64::NAN))
                }
            };
            let bounds = &row["theorem_bounds"];
            let ok = row["assertions"]
                .as_array()
                .map(|a| a.iter().all(|x| x["pass"] == json!(true)))
                .unwrap_or(true);
            out.push_str(&format!(
                "{:<4} {:<10} {:<26} {:<9} {:>12} {:>12} {:>12} {:>12} {:>6}\n",
                row["k"].to_string(),
                row["test"].as_str().unwrap_or(""),
                row["space"].as_str().unwrap_or(""),
                row["mode"].as_str().unwrap_or(""),
                num(&row["delta"]),
                num(&bounds["lower"]),
                num(&bounds["upper"]),
                num(row.get("max_agreement").unwrap_or(&Value::Null)),
                if ok { "pass" } else { "FAIL" },
            ));
        }
        out.push_str(&format!("wall-clock: {} ms (estimated)\n", self.wall_ms));
        out
    }

    /// One CSV line per row, plot-ready.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,test,space,mode,delta,lower,upper,max_agreement,pass\n");
        for row in self.json["rows"].as_array().unwrap() {
            if row.get("error").is_some() {
                continue;
            }
            let num = |v: &Value| -> String {
                if v.is_null() {
                    String::new()
                } else if let (Some(n), Some(d)) = (
                    v.get("num").and_then(|x| x.as_str()),
                    v.get("den").and_then(|x| x.as_str()),
                ) {
                    format!("{n}/{d}")
                } else {
                    format!("{}", v.as_f64().unwrap_or(f64::NAN))
                }
            };
            let bounds = &row["theorem_bounds"];
            let ok = row["assertions"]
                .as_array()
                .map(|a| a.iter().all(|x| x["pass"] == json!(true)))
                .unwrap_or(true);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                row["k"],
                row["test"].as_str().unwrap_or(""),
                row["space"].as_str().unwrap_or(""),
                row["mode"].as_str().unwrap_or(""),
                num(&row["delta"]),
                num(&bounds["lower"]),
                num(&bounds["upper"]),
                num(row.get("max_agreement").unwrap_or(&Value::Null)),
                if ok { "pass" } else { "fail" },
            ));
        }
        out
    }
}
