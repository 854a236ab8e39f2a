//! Flat key-value experiment configs: one `key=value` token per whitespace
//! separated field, `#` starts a comment. Diagnostics carry line and column.

use homtest_core::evalmap::CodewordSpace;
use homtest_core::group::parse_descriptor;
use homtest_core::{Error, GroupDescriptor, ProjectionSpec, Result, TestKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::str::FromStr;

/// Default enumeration cap, overridable by the HOMTEST_CAP environment
/// variable and by a `cap=` config key (config wins).
pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum GenSpec {
    /// The codeword itself (completeness runs).
    Exact(String),
    /// Codeword with agreement forced down to exactly ceil(alpha |G|)/|G|.
    Corrupt(String, BigRational),
    Random,
    /// Contiguous domain blocks answered by different codewords.
    Mix(Vec<(String, u64)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Mc(u64),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Original text, echoed into reports.
    pub text: String,
    pub space: CodewordSpace,
    pub kind: TestKind,
    pub ks: Vec<u32>,
    pub gen: GenSpec,
    pub mode: Mode,
    pub seed: u64,
    pub cap: u128,
    /// Agreement thresholds for list-size reporting, empty to skip.
    pub eps: Vec<BigRational>,
    pub out_json: Option<String>,
    pub out_csv: Option<String>,
    /// Theorem-precondition violations: the run proceeds, bounds are absent.
    pub warnings: Vec<String>,
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

/// `Z/27->Z/9`, `V(2,5)->F2`, `D(5)`, `inn:S(5)`,
/// `lift(det):GL(2,3)->Z/2`, `lift(tr):gl(2,3)->Z/3`,
/// `lift(abmod):ES(3,3)->V(3,1)`, `lift(mod9):Z/27->Z/9`.
pub fn parse_space(s: &str) -> Result<CodewordSpace> {
    if let Some(rest) = s.strip_prefix("inn:") {
        return Ok(CodewordSpace::Inner { group: parse_descriptor(rest)? });
    }
    if let Some(rest) = s.strip_prefix("aut:") {
        match parse_descriptor(rest)? {
            GroupDescriptor::Dihedral { p } => return Ok(CodewordSpace::DihedralAut { p }),
            other => {
                return Err(Error::InvalidDescriptor(format!(
                    "automorphism spaces are built in for dihedral groups only, got {other}"
                )))
            }
        }
    }
    if let Some(rest) = s.strip_prefix("lift(") {
        let (tag, rest) = rest
            .split_once("):")
            .ok_or_else(|| Error::InvalidDescriptor(format!("expected lift(tag):G->H in {s:?}")))?;
        let proj = match tag {
            "det" => ProjectionSpec::Det,
            "tr" => ProjectionSpec::Trace,
            "abmod" => ProjectionSpec::AbelianizeModP,
            m if m.starts_with("mod") => ProjectionSpec::Mod {
                to: m[3..]
                    .parse()
                    .map_err(|_| Error::InvalidDescriptor(format!("bad modulus in {tag:?}")))?,
            },
            other => {
                return Err(Error::InvalidDescriptor(format!("unknown projection {other:?}")))
            }
        };
        let (big, cod) = rest
            .split_once("->")
            .ok_or_else(|| Error::InvalidDescriptor(format!("expected G->H in {s:?}")))?;
        return Ok(CodewordSpace::Lifted {
            big: parse_descriptor(big)?,
            proj,
            base_codomain: parse_descriptor(cod)?,
        });
    }
    if let Some((dom, cod)) = s.split_once("->") {
        return Ok(CodewordSpace::Hom {
            domain: parse_descriptor(dom)?,
            codomain: parse_descriptor(cod)?,
        });
    }
    match parse_descriptor(s)? {
        GroupDescriptor::Dihedral { p } => Ok(CodewordSpace::DihedralAut { p }),
        g if !g.is_abelian() => Ok(CodewordSpace::Inner { group: g }),
        _ => Err(Error::InvalidDescriptor(format!(
            "space {s:?} needs a codomain: G->H, D(p), inn:G or lift(tag):G->H"
        ))),
    }
}

fn default_kind(space: &CodewordSpace) -> TestKind {
    match space {
        CodewordSpace::DihedralAut { .. } => TestKind::Dihedral,
        CodewordSpace::Inner { .. } => TestKind::Inner,
        CodewordSpace::Hom { .. } | CodewordSpace::Lifted { .. } => TestKind::Ker,
    }
}

/// `1/3`, `0.25`, or an integer.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        let scale = BigInt::from(10u32).pow(digits);
        let whole: BigInt = if int.is_empty() { BigInt::zero() } else { int.parse().ok()? };
        let frac: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().ok()? };
        let neg = s.trim_start().starts_with('-');
        let mag = whole.magnitude().clone() * scale.magnitude() + frac.magnitude();
        let num = BigInt::from_biguint(
            if neg { num_bigint::Sign::Minus } else { num_bigint::Sign::Plus },
            mag,
        );
        return Some(BigRational::new(num, scale));
    }
    let n: BigInt = s.trim().parse().ok()?;
    Some(BigRational::new(n, BigInt::one()))
}

fn parse_gen(s: &str) -> Option<GenSpec> {
    if s == "random" {
        return Some(GenSpec::Random);
    }
    if let Some(inner) = s.strip_prefix("exact(").and_then(|r| r.strip_suffix(')')) {
        return Some(GenSpec::Exact(inner.to_string()));
    }
    if let Some(inner) = s.strip_prefix("corrupt(").and_then(|r| r.strip_suffix(')')) {
        let (cw, alpha) = inner.rsplit_once(',')?;
        let alpha = parse_rational(alpha)?;
        if alpha < BigRational::zero() || alpha > BigRational::one() {
            return None;
        }
        return Some(GenSpec::Corrupt(cw.to_string(), alpha));
    }
    if let Some(inner) = s.strip_prefix("mix(").and_then(|r| r.strip_suffix(')')) {
        let mut parts = Vec::new();
        for piece in inner.split(',') {
            let (cw, w) = piece.rsplit_once('=')?;
            parts.push((cw.to_string(), w.parse().ok()?));
        }
        if parts.is_empty() {
            return None;
        }
        return Some(GenSpec::Mix(parts));
    }
    None
}

fn parse_ks(s: &str) -> Option<Vec<u32>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.parse().ok()?;
        let b: u32 = b.parse().ok()?;
        if a == 0 || b < a {
            return None;
        }
        return Some((a..=b).collect());
    }
    let k: u32 = s.parse().ok()?;
    if k == 0 {
        None
    } else {
        Some(vec![k])
    }
}

pub fn cap_from_env() -> u128 {
    std::env::var("HOMTEST_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_CAP)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut space = None;
    let mut kind = None;
    let mut ks = None;
    let mut gen = GenSpec::Random;
    let mut mode = Mode::Exact;
    let mut seed = 0u64;
    let mut cap = cap_from_env();
    let mut eps = Vec::new();
    let mut out_json = None;
    let mut out_csv = None;
    for (li, raw_line) in text.lines().enumerate() {
        let line = li + 1;
        // a comment starts at a '#' that opens the line or follows
        // whitespace; '#' inside a token is data (codeword indices)
        let cut = raw_line
            .char_indices()
            .find(|&(i, c)| {
                c == '#' && (i == 0 || raw_line[..i].ends_with(char::is_whitespace))
            })
            .map(|(i, _)| i)
            .unwrap_or(raw_line.len());
        let content = &raw_line[..cut];
        let mut rest = content;
        let mut offset = 0usize;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
            let token = &tail[..end];
            let col = offset + start + 1;
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| parse_err(line, col, format!("expected key=value, got {token:?}")))?;
            let at_value = |msg: String| parse_err(line, col + key.len() + 1, msg);
            match key {
                "space" => {
                    space = Some(parse_space(value).map_err(|e| at_value(e.to_string()))?)
                }
                "test" => {
                    kind = Some(
                        TestKind::from_str(value).map_err(|e| at_value(e.to_string()))?,
                    )
                }
                "k" => {
                    ks = Some(parse_ks(value).ok_or_else(|| {
                        at_value(format!("expected k=<n> or k=<a>..<b>, got {value:?}"))
                    })?)
                }
                "gen" => {
                    gen = parse_gen(value).ok_or_else(|| {
                        at_value(format!(
                            "expected random, exact(cw), corrupt(cw,alpha) or mix(cw=w,...), got {value:?}"
                        ))
                    })?
                }
                "mode" => {
                    mode = if value == "exact" {
                        Mode::Exact
                    } else if let Some(t) =
                        value.strip_prefix("mc(").and_then(|r| r.strip_suffix(')'))
                    {
                        Mode::Mc(t.parse().map_err(|_| {
                            at_value(format!("bad trial count {t:?}"))
                        })?)
                    } else {
                        return Err(at_value(format!(
                            "expected exact or mc(trials), got {value:?}"
                        )));
                    }
                }
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| at_value(format!("bad seed {value:?}")))?
                }
                "cap" => {
                    cap = value
                        .parse()
                        .map_err(|_| at_value(format!("bad cap {value:?}")))?
                }
                "eps" => {
                    eps = value
                        .split(',')
                        .map(|e| {
                            parse_rational(e)
                                .filter(|r| r > &BigRational::zero())
                                .ok_or_else(|| at_value(format!("bad threshold {e:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                "out" => out_json = Some(value.to_string()),
                "csv" => out_csv = Some(value.to_string()),
                other => {
                    return Err(parse_err(line, col, format!("unknown key {other:?}")))
                }
            }
            offset += start + end;
            rest = &rest[start + end..];
        }
    }
    let space = space.ok_or_else(|| parse_err(1, 1, "missing required key 'space'"))?;
    let kind = kind.unwrap_or_else(|| default_kind(&space));
    let ks = ks.ok_or_else(|| parse_err(1, 1, "missing required key 'k'"))?;
    let mut cfg = ExperimentConfig {
        text: text.to_string(),
        space,
        kind,
        ks,
        gen,
        mode,
        seed,
        cap,
        eps,
        out_json,
        out_csv,
        warnings: Vec::new(),
    };
    validate(&mut cfg)?;
    Ok(cfg)
}

/// Construction failures are errors; theorem-precondition violations are
/// warnings and the run proceeds with bounds absent.
fn validate(cfg: &mut ExperimentConfig) -> Result<()> {
    use homtest_core::{EvalMapCtx, TestSpec};
    for &k in &cfg.ks {
        let ctx = EvalMapCtx::new(cfg.space.clone(), k, cfg.cap)?;
        let spec = TestSpec::new(cfg.kind, ctx, true)?;
        match homtest_core::testing::soundness_bounds(&spec, &BigRational::one()) {
            Ok(_) => {}
            Err(Error::OutOfTheoremRange { k, family, reason }) => cfg.warnings.push(format!(
                "k={k} is outside the theorem range for {family} ({reason}); bounds absent"
            )),
            Err(Error::Unsupported(msg)) => cfg
                .warnings
                .push(format!("no theorem bounds at k={k}: {msg}; bounds absent")),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
