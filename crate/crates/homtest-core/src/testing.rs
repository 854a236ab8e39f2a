//! The six test procedures as single-trial predicates, plus exact and
//! Monte-Carlo estimators of the pass probability and the per-family
//! agreement bounds implied by a measured pass probability.

use crate::error::{Error, Result};
use crate::evalmap::{
    advance, checked_pow, rho_k_dihedral, trho_k_extraspecial, trho_k_symmetric, CodewordSpace,
    EvalMapCtx,
};
use crate::exact::{nth_root_bounds, rat_u128, zeta2_squared_bounds, zeta_bounds};
use crate::field::{field, prime_power};
use crate::group::{Elem, GroupDescriptor};
use crate::hom::{agreement, QueryFunction};
use crate::sampler::{
    build_dker_table, build_stab_table, sample_lifted_rk, sample_nonzero,
    sample_vspace_test_tuple, CyclicKernelSampler, FiberSampler, RngStream, WeightedTupleTable,
};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;
use std::fmt;
use std::str::FromStr;

/// 99% two-sided normal quantile, for Wilson intervals.
pub const Z_99: f64 = 2.5758293035489004;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestKind {
    Ker,
    VSpace,
    NonZero,
    Dihedral,
    Inner,
    LiftedVSpace,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TestKind::Ker => "ker",
            TestKind::VSpace => "vspace",
            TestKind::NonZero => "nonzero",
            TestKind::Dihedral => "dihedral",
            TestKind::Inner => "inner",
            TestKind::LiftedVSpace => "liftvspace",
        };
        write!(f, "{s}")
    }
}

impl FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<TestKind> {
        match s {
            "ker" => Ok(TestKind::Ker),
            "vspace" => Ok(TestKind::VSpace),
            "nonzero" => Ok(TestKind::NonZero),
            "dihedral" => Ok(TestKind::Dihedral),
            "inner" => Ok(TestKind::Inner),
            "liftvspace" => Ok(TestKind::LiftedVSpace),
            other => Err(Error::InvalidDescriptor(format!("unknown test kind '{other}'"))),
        }
    }
}

/// A test procedure bound to a codeword space: the trial predicate plus the
/// sampler state it needs.
pub struct TestSpec {
    pub kind: TestKind,
    pub ctx: EvalMapCtx,
    /// VSpace/LiftedVSpace front end: resample until the free vectors are
    /// independent (true) or accept them as drawn (false).
    pub exact_rk: bool,
    table: Option<WeightedTupleTable>,
    cyclic_sampler: Option<CyclicKernelSampler>,
    fibers: Option<FiberSampler>,
}

impl TestSpec {
    pub fn new(kind: TestKind, ctx: EvalMapCtx, exact_rk: bool) -> Result<TestSpec> {
        let compatible = match kind {
            TestKind::Ker => matches!(
                ctx.space,
                CodewordSpace::Hom { .. } | CodewordSpace::Lifted { .. }
            ),
            TestKind::VSpace => matches!(
                &ctx.space,
                CodewordSpace::Hom {
                    domain: GroupDescriptor::VectorSpace { .. },
                    codomain: GroupDescriptor::VectorSpace { n: 1, .. },
                }
            ),
            TestKind::NonZero => matches!(
                &ctx.space,
                CodewordSpace::Hom {
                    domain: GroupDescriptor::VectorSpace { n: 1, .. },
                    codomain: GroupDescriptor::VectorSpace { .. },
                }
            ),
            TestKind::Dihedral => matches!(ctx.space, CodewordSpace::DihedralAut { .. }),
            TestKind::Inner => matches!(ctx.space, CodewordSpace::Inner { .. }),
            TestKind::LiftedVSpace => matches!(
                &ctx.space,
                CodewordSpace::Lifted { base_codomain: GroupDescriptor::VectorSpace { n: 1, .. }, .. }
            ),
        };
        if !compatible {
            return Err(Error::InvalidDescriptor(format!(
                "test '{kind}' does not apply to space {}",
                ctx.space
            )));
        }
        let tuple_space = checked_pow(ctx.dom.len() as u128, ctx.k)?;
        let mut table = None;
        let mut cyclic_sampler = None;
        let mut fibers = None;
        match kind {
            TestKind::Ker if matches!(ctx.space, CodewordSpace::Hom { .. }) => {
                if tuple_space <= ctx.cap {
                    table = Some(build_dker_table(&ctx)?);
                } else if let CodewordSpace::Hom { domain, codomain } = &ctx.space {
                    cyclic_sampler = Some(CyclicKernelSampler::new(domain, codomain, ctx.k)?);
                }
            }
            TestKind::Ker => {
                // lifted kernel test: sample in the big group, weight via the
                // projected tuple
                if tuple_space <= ctx.cap {
                    table = Some(build_lifted_ker_table(&ctx)?);
                }
            }
            TestKind::Dihedral | TestKind::Inner => {
                if tuple_space <= ctx.cap {
                    table = Some(build_stab_table(&ctx)?);
                }
            }
            TestKind::LiftedVSpace => {
                let CodewordSpace::Lifted { proj, .. } = &ctx.space else { unreachable!() };
                fibers = Some(FiberSampler::new(ctx.dom.clone(), proj.clone())?);
            }
            _ => {}
        }
        Ok(TestSpec { kind, ctx, exact_rk, table, cyclic_sampler, fibers })
    }

    /// (q, n) of the vector-space side relevant to the test.
    fn vspace_params(&self) -> Result<(u64, usize)> {
        match (&self.kind, &self.ctx.space) {
            (
                TestKind::VSpace,
                CodewordSpace::Hom { domain: GroupDescriptor::VectorSpace { q, n }, .. },
            ) => Ok((*q, *n)),
            (
                TestKind::NonZero,
                CodewordSpace::Hom { codomain: GroupDescriptor::VectorSpace { q, n }, .. },
            ) => Ok((*q, *n)),
            (TestKind::LiftedVSpace, CodewordSpace::Lifted { .. }) => {
                let fs = self.fibers.as_ref().unwrap();
                match &fs.base {
                    GroupDescriptor::VectorSpace { q, n } => Ok((*q, *n)),
                    GroupDescriptor::Cyclic(p) => Ok((*p, 1)),
                    other => Err(Error::Unsupported(format!("non-vector base {other}"))),
                }
            }
            _ => Err(Error::Unsupported("no vector-space parameters for this test".into())),
        }
    }

    fn tuple_from_indices(&self, idx: &[usize]) -> Vec<Elem> {
        idx.iter().map(|&i| self.ctx.dom.elems[i].clone()).collect()
    }

    fn membership(&self, xs: &[Elem], f: &QueryFunction) -> Result<bool> {
        let ys: Vec<Elem> = xs.iter().map(|x| f.at(x).clone()).collect();
        if let Some(ans) = self.ctx.image_membership_linear(xs, &ys)? {
            return Ok(ans);
        }
        Ok(self.ctx.image_membership(xs, &ys)?.is_some())
    }

    /// One sampled tuple, one pass/fail decision.
    pub fn run_trial(&self, f: &QueryFunction, rng: &mut RngStream) -> Result<bool> {
        match self.kind {
            TestKind::Ker | TestKind::Dihedral | TestKind::Inner => {
                let xs = if let Some(table) = &self.table {
                    self.tuple_from_indices(table.sample(rng))
                } else if let Some(cs) = &self.cyclic_sampler {
                    cs.sample(rng)
                } else {
                    return Err(Error::TooLarge {
                        needed: checked_pow(self.ctx.dom.len() as u128, self.ctx.k)?,
                        cap: self.ctx.cap,
                    });
                };
                self.membership(&xs, f)
            }
            TestKind::VSpace => {
                let (q, n) = self.vspace_params()?;
                let (xs, coeffs) =
                    sample_vspace_test_tuple(q, n, self.ctx.k, self.exact_rk, rng)?;
                pass_linear_relation(q, &xs, &coeffs, f)
            }
            TestKind::NonZero => {
                let (q, _) = self.vspace_params()?;
                let xs = sample_nonzero(q, self.ctx.k, rng);
                pass_nonzero(q, &xs, f)
            }
            TestKind::LiftedVSpace => {
                let fs = self.fibers.as_ref().unwrap();
                let xs = sample_lifted_rk(fs, self.ctx.k, rng)?;
                self.membership(&xs, f)
            }
        }
    }

    /// Exact pass probability by weighted enumeration of the full sample
    /// space, falling back to the moment identity where the tuple space is
    /// beyond the cap but the codewords are not.
    pub fn delta_exact(&self, f: &QueryFunction) -> Result<DeltaEstimate> {
        let value = match self.kind {
            TestKind::Ker | TestKind::Dihedral | TestKind::Inner => {
                if let Some(table) = &self.table {
                    let mut mass = BigRational::zero();
                    for (idx, w) in table.tuples.iter().zip(&table.weights) {
                        let xs = self.tuple_from_indices(idx);
                        if self.membership(&xs, f)? {
                            mass += rat_u128(*w);
                        }
                    }
                    mass / rat_u128(table.total_weight)
                } else {
                    self.delta_by_moments(f)?
                }
            }
            TestKind::VSpace => {
                let (q, n) = self.vspace_params()?;
                delta_exact_vspace(q, n, self.ctx.k, self.exact_rk, f)?
            }
            TestKind::NonZero => {
                let (q, _) = self.vspace_params()?;
                let mut passes = 0u128;
                let mut total = 0u128;
                let mut idx = vec![0usize; self.ctx.k as usize];
                loop {
                    let xs: Vec<Elem> =
                        idx.iter().map(|&i| Elem::Vector(vec![(i + 1) as u8])).collect();
                    if pass_nonzero(q, &xs, f)? {
                        passes += 1;
                    }
                    total += 1;
                    if !advance(&mut idx, (q - 1) as usize) {
                        break;
                    }
                }
                rat_u128(passes) / rat_u128(total)
            }
            TestKind::LiftedVSpace => self.delta_exact_lifted(f)?,
        };
        Ok(DeltaEstimate { value, ci: None, trials: None })
    }

    /// Moment-identity back-solve: the codeword mass (gamma_k, rho_k or
    /// trho_k) relates the exact pass probability to the k-th agreement
    /// moment. Valid for the kernel test on cyclic domains (where no tuple is
    /// excluded) and for the automorphism tests (which sample all of G^k).
    pub fn delta_by_moments(&self, f: &QueryFunction) -> Result<BigRational> {
        if matches!(self.kind, TestKind::Ker)
            && !matches!(
                self.ctx.space,
                CodewordSpace::Hom { domain: GroupDescriptor::Cyclic(_), .. }
                    | CodewordSpace::Lifted { .. }
            )
        {
            return Err(Error::Unsupported(
                "moment back-solve needs a cyclic domain or a lifted space".into(),
            ));
        }
        let mut moment = BigRational::zero();
        for h in &self.ctx.codewords {
            let a = agreement(f, h)?;
            let mut term = BigRational::one();
            for _ in 0..self.ctx.k {
                term *= &a;
            }
            moment += term;
        }
        let gk = checked_pow(self.ctx.dom.len() as u128, self.ctx.k)?;
        Ok(moment * rat_u128(gk) / rat_u128(self.ctx.codeword_mass()?))
    }

    fn delta_exact_lifted(&self, f: &QueryFunction) -> Result<BigRational> {
        let fs = self.fibers.as_ref().unwrap();
        let (q, n) = self.vspace_params()?;
        let fld = field(q)?;
        let k = self.ctx.k as usize;
        let base_elems = GroupDescriptor::VectorSpace { q, n }.enumerate(self.ctx.cap)?;
        let m = base_elems.len();
        let mut passes: u128 = 0;
        let mut total: u128 = 0;
        // constructive enumeration of R_k: independent free vectors plus
        // nonzero coefficients; each combination then fans out over fibers
        let mut vec_idx = vec![0usize; k - 1];
        loop {
            let free: Vec<&Elem> = vec_idx.iter().map(|&i| &base_elems[i]).collect();
            let mut mat = Vec::with_capacity((k - 1) * n);
            for x in &free {
                let Elem::Vector(v) = x else { unreachable!() };
                mat.extend_from_slice(v);
            }
            if crate::group::mat_rank(&mat, k - 1, n, q)? == k - 1 {
                let mut coef_idx = vec![0usize; k - 1];
                loop {
                    let coeffs: Vec<u8> = coef_idx.iter().map(|&c| (c + 1) as u8).collect();
                    let mut last = vec![0u8; n];
                    for (a, x) in coeffs.iter().zip(&free) {
                        let Elem::Vector(v) = x else { unreachable!() };
                        for (li, &vi) in last.iter_mut().zip(v) {
                            *li = fld.add(*li, fld.mul(*a, vi));
                        }
                    }
                    let mut base_tuple: Vec<Elem> = free.iter().map(|&x| x.clone()).collect();
                    base_tuple.push(Elem::Vector(last));
                    let (p, t) = self.count_fiber_passes(fs, &base_tuple, &coeffs, q, f)?;
                    passes += p;
                    total += t;
                    if !advance(&mut coef_idx, (q - 1) as usize) {
                        break;
                    }
                }
            }
            if !advance(&mut vec_idx, m) {
                break;
            }
        }
        Ok(rat_u128(passes) / rat_u128(total))
    }

    fn count_fiber_passes(
        &self,
        fs: &FiberSampler,
        base_tuple: &[Elem],
        coeffs: &[u8],
        q: u64,
        f: &QueryFunction,
    ) -> Result<(u128, u128)> {
        let fld = field(q)?;
        let k = base_tuple.len();
        let fiber_lists: Vec<Vec<Elem>> = base_tuple
            .iter()
            .map(|b| {
                let enc = fiber_encode(&fs.base, b);
                let idxs = fs.fiber(&enc).ok_or_else(|| {
                    Error::InvalidElement("base element outside the projection image".into())
                })?;
                Ok(idxs.iter().map(|&i| fs.big.elems[i].clone()).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let sizes: Vec<usize> = fiber_lists.iter().map(|l| l.len()).collect();
        let mut passes = 0u128;
        let mut total = 0u128;
        let mut idx = vec![0usize; k];
        loop {
            // codomain values are 1-dim vectors; the unique relation of the
            // base tuple must hold on the f-values
            let mut rhs = 0u8;
            for (i, a) in coeffs.iter().enumerate() {
                let Elem::Vector(v) = f.at(&fiber_lists[i][idx[i]]) else {
                    return Err(Error::InvalidElement("scalar codomain expected".into()));
                };
                rhs = fld.add(rhs, fld.mul(*a, v[0]));
            }
            let Elem::Vector(v) = f.at(&fiber_lists[k - 1][idx[k - 1]]) else {
                return Err(Error::InvalidElement("scalar codomain expected".into()));
            };
            if v[0] == rhs {
                passes += 1;
            }
            total += 1;
            let mut done = true;
            for d in (0..k).rev() {
                idx[d] += 1;
                if idx[d] < sizes[d] {
                    done = false;
                    break;
                }
                idx[d] = 0;
            }
            if done {
                break;
            }
        }
        Ok((passes, total))
    }

    /// Monte-Carlo estimate with a Wilson 99% interval.
    pub fn delta_mc(
        &self,
        f: &QueryFunction,
        trials: u64,
        rng: &mut RngStream,
    ) -> Result<DeltaEstimate> {
        if trials == 0 {
            return Err(Error::InvalidDescriptor("trials must be >= 1".into()));
        }
        let mut successes = 0u64;
        for _ in 0..trials {
            if self.run_trial(f, rng)? {
                successes += 1;
            }
        }
        Ok(DeltaEstimate {
            value: BigRational::new(successes.into(), trials.into()),
            ci: Some(wilson_ci(successes, trials)),
            trials: Some(trials),
        })
    }
}

/// Pass probability estimate: exact rational, or a point estimate with a
/// Wilson 99% interval when Monte-Carlo.
#[derive(Clone, Debug)]
pub struct DeltaEstimate {
    pub value: BigRational,
    pub ci: Option<(f64, f64)>,
    pub trials: Option<u64>,
}

impl DeltaEstimate {
    pub fn is_exact(&self) -> bool {
        self.trials.is_none()
    }

    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

pub fn wilson_ci(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = Z_99;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn fiber_encode(base: &GroupDescriptor, v: &Elem) -> Elem {
    match (base, v) {
        (GroupDescriptor::Cyclic(_), Elem::Vector(w)) if w.len() == 1 => {
            Elem::Residues(vec![w[0] as u64])
        }
        _ => v.clone(),
    }
}

/// f(x_k) = sum a_i f(x_i) over the scalar codomain.
fn pass_linear_relation(
    q: u64,
    xs: &[Elem],
    coeffs: &[u8],
    f: &QueryFunction,
) -> Result<bool> {
    let fld = field(q)?;
    let mut rhs = 0u8;
    for (a, x) in coeffs.iter().zip(xs) {
        let Elem::Vector(v) = f.at(x) else {
            return Err(Error::InvalidElement("scalar codomain expected".into()));
        };
        rhs = fld.add(rhs, fld.mul(*a, v[0]));
    }
    let Elem::Vector(v) = f.at(xs.last().unwrap()) else {
        return Err(Error::InvalidElement("scalar codomain expected".into()));
    };
    Ok(v[0] == rhs)
}

/// x_i^{-1} f(x_i) identical across coordinates.
fn pass_nonzero(q: u64, xs: &[Elem], f: &QueryFunction) -> Result<bool> {
    let fld = field(q)?;
    let mut seen: Option<Vec<u8>> = None;
    for x in xs {
        let Elem::Vector(c) = x else {
            return Err(Error::InvalidElement("scalar domain expected".into()));
        };
        let inv = fld.inv(c[0]);
        let Elem::Vector(v) = f.at(x) else {
            return Err(Error::InvalidElement("vector codomain expected".into()));
        };
        let scaled: Vec<u8> = v.iter().map(|&vi| fld.mul(inv, vi)).collect();
        match &seen {
            None => seen = Some(scaled),
            Some(prev) if prev != &scaled => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

fn delta_exact_vspace(
    q: u64,
    n: usize,
    k: u32,
    exact: bool,
    f: &QueryFunction,
) -> Result<BigRational> {
    let fld = field(q)?;
    let k = k as usize;
    let elems = GroupDescriptor::VectorSpace { q, n }.enumerate(1 << 24)?;
    let m = elems.len();
    let mut passes = 0u128;
    let mut total = 0u128;
    let mut vec_idx = vec![0usize; k - 1];
    loop {
        let free: Vec<&Elem> = vec_idx.iter().map(|&i| &elems[i]).collect();
        let admissible = if exact {
            let mut mat = Vec::with_capacity((k - 1) * n);
            for x in &free {
                let Elem::Vector(v) = x else { unreachable!() };
                mat.extend_from_slice(v);
            }
            crate::group::mat_rank(&mat, k - 1, n, q)? == k - 1
        } else {
            true
        };
        if admissible {
            let mut coef_idx = vec![0usize; k - 1];
            loop {
                let coeffs: Vec<u8> = coef_idx.iter().map(|&c| (c + 1) as u8).collect();
                let mut last = vec![0u8; n];
                for (a, x) in coeffs.iter().zip(&free) {
                    let Elem::Vector(v) = x else { unreachable!() };
                    for (li, &vi) in last.iter_mut().zip(v) {
                        *li = fld.add(*li, fld.mul(*a, vi));
                    }
                }
                let mut xs: Vec<Elem> = free.iter().map(|&x| x.clone()).collect();
                xs.push(Elem::Vector(last));
                if pass_linear_relation(q, &xs, &coeffs, f)? {
                    passes += 1;
                }
                total += 1;
                if !advance(&mut coef_idx, (q - 1) as usize) {
                    break;
                }
            }
        }
        if !advance(&mut vec_idx, m) {
            break;
        }
    }
    Ok(rat_u128(passes) / rat_u128(total))
}

// ---- soundness bounds ---------------------------------------------------------

/// Agreement interval implied by a pass probability, per the family's
/// theorem. Endpoints are rounded outward, so containment claims made from
/// them are conservative.
#[derive(Clone, Debug)]
pub struct SoundnessBounds {
    pub lower: BigRational,
    pub upper: BigRational,
    pub theorem: String,
}

fn root_lo(x: &BigRational, n: u32) -> BigRational {
    nth_root_bounds(x, n, 128).0
}

fn root_hi(x: &BigRational, n: u32) -> BigRational {
    nth_root_bounds(x, n, 128).1
}

/// High side of a rational enclosure of zeta(s)^2.
fn zeta_sq_hi(s: u32) -> BigRational {
    if s == 2 {
        zeta2_squared_bounds().1
    } else {
        let (_, hi) = zeta_bounds(s, 1000);
        &hi * &hi
    }
}

fn out_of_range(k: u32, family: &str, reason: &str) -> Error {
    Error::OutOfTheoremRange { k, family: family.to_string(), reason: reason.to_string() }
}

/// Number of cyclic components of an abelian group with order divisible by p.
fn p_rank(h: &GroupDescriptor, p: u64) -> Option<u32> {
    let comps = h.cyclic_components()?;
    Some(comps.iter().filter(|&&c| c % p == 0).count() as u32)
}

pub fn soundness_bounds(spec: &TestSpec, delta: &BigRational) -> Result<SoundnessBounds> {
    let k = spec.ctx.k;
    let one = BigRational::one();
    match (&spec.kind, &spec.ctx.space) {
        (TestKind::Ker, CodewordSpace::Hom { domain: GroupDescriptor::Cyclic(n), codomain }) => {
            match prime_power(*n) {
                Some((p, _)) => {
                    let t = p_rank(codomain, p).ok_or_else(|| {
                        Error::Unsupported("kernel-test bounds need an abelian codomain".into())
                    })?;
                    if t == 0 {
                        // only trivial p-local homomorphisms: no theorem applies
                        return Err(Error::Unsupported(
                            "codomain has no p-torsion for the domain prime".into(),
                        ));
                    }
                    if k < t + 2 {
                        return Err(out_of_range(k, "cyclic-bounded-rank", "requires k >= t+2"));
                    }
                    let p2 = rat_u128((p * p) as u128);
                    let shrink = rat_u128(((p - 1) * (p - 1)) as u128) / &p2;
                    let grow = &p2 / (&p2 - &one);
                    Ok(SoundnessBounds {
                        lower: root_lo(&(shrink * delta), k - t - 1),
                        upper: root_hi(&(grow * delta), k),
                        theorem: "cyclic-bounded-rank".into(),
                    })
                }
                None => {
                    // composite modulus: general cyclic-to-cyclic bound
                    if codomain.cyclic_components().map(|c| c.len()) != Some(1) {
                        return Err(Error::Unsupported(
                            "general cyclic bounds need a cyclic codomain".into(),
                        ));
                    }
                    if k < 4 {
                        return Err(out_of_range(k, "cyclic-general", "requires k >= 4"));
                    }
                    Ok(SoundnessBounds {
                        lower: root_lo(&(delta / zeta_sq_hi(2)), k - 3),
                        upper: root_hi(&(zeta_sq_hi(k - 1) * delta), k),
                        theorem: "cyclic-general".into(),
                    })
                }
            }
        }
        (TestKind::VSpace, CodewordSpace::Hom { domain: GroupDescriptor::VectorSpace { q, n }, .. }) => {
            vspace_style_bounds(*q, checked_pow(*q as u128, *n as u32)?, k, delta, "vector-space", k - 2)
        }
        (TestKind::LiftedVSpace, CodewordSpace::Lifted { .. }) => {
            let (q, n) = spec.vspace_params()?;
            vspace_style_bounds(
                q,
                checked_pow(q as u128, n as u32)?,
                k,
                delta,
                "lifted-vector-space",
                k - 2,
            )
        }
        (TestKind::NonZero, CodewordSpace::Hom { domain: GroupDescriptor::VectorSpace { q, .. }, .. }) => {
            if k < 2 {
                return Err(out_of_range(k, "field-to-space", "requires k >= 2"));
            }
            let qr = rat_u128(*q as u128);
            let frac = (&qr - &one) / &qr;
            Ok(SoundnessBounds {
                lower: &frac * root_lo(delta, k - 1),
                upper: one / &qr + frac * root_hi(delta, k),
                theorem: "field-to-space".into(),
            })
        }
        (TestKind::Dihedral, CodewordSpace::DihedralAut { p }) => {
            if k < 3 {
                return Err(out_of_range(k, "dihedral-aut", "requires k >= 3"));
            }
            let order = (2 * p) as u128;
            let mass_ratio = rat_u128(rho_k_dihedral(*p, k)?) / rat_u128(checked_pow(order, k)?);
            Ok(SoundnessBounds {
                lower: BigRational::new(1.into(), 2.into()) * root_lo(delta, k - 2),
                upper: root_hi(&(mass_ratio * delta), k),
                theorem: "dihedral-aut".into(),
            })
        }
        (TestKind::Inner, CodewordSpace::Inner { group }) => {
            let (tau, family) = match group {
                GroupDescriptor::Symmetric { .. } => (3, "inner-symmetric"),
                GroupDescriptor::Extraspecial { r, .. } => (r + 1, "inner-extraspecial"),
                _ => (2, "inner-generic"),
            };
            if k < tau {
                return Err(out_of_range(k, family, "requires k >= tau for the family"));
            }
            let order = group.order() as u128;
            let trho = |i: u32| -> Result<u128> {
                match group {
                    GroupDescriptor::Symmetric { n } => trho_k_symmetric(*n, i),
                    GroupDescriptor::Extraspecial { p, r } => trho_k_extraspecial(*p, *r, i),
                    _ => {
                        let sizes = crate::evalmap::conjugacy_class_sizes(&spec.ctx.dom)?;
                        crate::evalmap::trho_k_class_formula(
                            &sizes,
                            order,
                            group.center_order() as u128,
                            i,
                        )
                    }
                }
            };
            // exact telescoping constant: min ratio trho_i / (|G| trho_{i-1})
            let mut c: Option<BigRational> = None;
            let mut prev = trho(tau - 1)?;
            for i in tau..=k {
                let cur = trho(i)?;
                let ratio = rat_u128(cur) / (rat_u128(order) * rat_u128(prev));
                c = Some(match c {
                    Some(old) => old.min(ratio),
                    None => ratio,
                });
                prev = cur;
            }
            let c = c.unwrap();
            let mass_ratio = rat_u128(trho(k)?) / rat_u128(checked_pow(order, k)?);
            Ok(SoundnessBounds {
                lower: c * root_lo(delta, k - tau + 1),
                upper: root_hi(&(mass_ratio * delta), k),
                theorem: family.into(),
            })
        }
        (TestKind::Ker, CodewordSpace::Lifted { big, .. }) => match big {
            GroupDescriptor::GeneralLinear { q, .. } => {
                if *q <= 2 {
                    return Err(Error::Unsupported(
                        "determinant characters are trivial for q = 2".into(),
                    ));
                }
                if k < 4 {
                    return Err(out_of_range(k, "gl-characters", "requires k >= 4"));
                }
                Ok(SoundnessBounds {
                    lower: root_lo(&(delta / zeta_sq_hi(2)), k - 3),
                    upper: root_hi(&(zeta_sq_hi(k - 1) * delta), k),
                    theorem: "gl-characters".into(),
                })
            }
            GroupDescriptor::LieGl { q, .. } => {
                if k < 3 {
                    return Err(out_of_range(k, "lie-gl-characters", "requires k >= 3"));
                }
                let (p, _) = prime_power(*q)
                    .ok_or_else(|| Error::InvalidDescriptor(format!("{q} is not a prime power")))?;
                let p2 = rat_u128((p * p) as u128);
                let shrink = rat_u128(((p - 1) * (p - 1)) as u128) / &p2;
                let grow = &p2 / (&p2 - &one);
                Ok(SoundnessBounds {
                    lower: root_lo(&(shrink * delta), k - 1),
                    upper: root_hi(&(grow * delta), k),
                    theorem: "lie-gl-characters".into(),
                })
            }
            other => Err(Error::Unsupported(format!("no kernel-test theorem lifts from {other}"))),
        },
        _ => Err(Error::Unsupported(format!(
            "no theorem covers test '{}' on space {}",
            spec.kind, spec.ctx.space
        ))),
    }
}

/// Shared shape of the vector-space bounds: 1/q + ((q-1)/q) s^{1/e} with
/// s = (q delta - 1)/(q - 1), lower exponent e and upper exponent k. Odd k
/// only. The underlying identity between the test pass rate and the shifted
/// power sum only holds up to a q^{-n} approximation term, so the upper
/// endpoint is widened by an explicit 4 q^{-n} on the power-sum scale (the
/// same explicit constant as the sampler TV bound). When the shifted pass
/// rate is nonpositive the statement carries no information and both
/// endpoints are vacuous.
fn vspace_style_bounds(
    q: u64,
    dom_order: u128,
    k: u32,
    delta: &BigRational,
    family: &str,
    lower_exp: u32,
) -> Result<SoundnessBounds> {
    if k < 3 || k % 2 == 0 {
        return Err(out_of_range(k, family, "requires odd k >= 3"));
    }
    let one = BigRational::one();
    let qr = rat_u128(q as u128);
    let frac = (&qr - &one) / &qr;
    let shifted = (&qr * delta - &one) / (&qr - &one);
    if !shifted.is_positive() {
        return Ok(SoundnessBounds {
            lower: BigRational::zero(),
            upper: one,
            theorem: family.into(),
        });
    }
    let slack = rat_u128(4) / rat_u128(dom_order);
    let upper = &one / &qr + &frac * root_hi(&(&shifted + &slack), k);
    Ok(SoundnessBounds {
        lower: &one / &qr + &frac * root_lo(&shifted, lower_exp),
        upper: upper.min(one),
        theorem: family.into(),
    })
}

/// Kernel-weighted table over the big group for a lifted kernel test: the
/// weight of a tuple is the kernel size of the evaluation map at its
/// projection.
fn build_lifted_ker_table(ctx: &EvalMapCtx) -> Result<WeightedTupleTable> {
    let n = ctx.dom.len();
    let total_tuples = checked_pow(n as u128, ctx.k)?;
    if total_tuples > ctx.cap {
        return Err(Error::TooLarge { needed: total_tuples, cap: ctx.cap });
    }
    let mut tuples = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; ctx.k as usize];
    loop {
        let xs: Vec<Elem> = idx.iter().map(|&i| ctx.dom.elems[i].clone()).collect();
        tuples.push(idx.clone());
        weights.push(ctx.kernel_size_at(&xs)?);
        if !advance(&mut idx, n) {
            break;
        }
    }
    Ok(WeightedTupleTable::from_rows(tuples, weights, false))
}

/// One JSON record per estimate, shared between the CLI and the verification
/// suite.
pub fn estimate_record(
    spec: &TestSpec,
    est: &DeltaEstimate,
    seed: u64,
    bounds: Option<&SoundnessBounds>,
) -> serde_json::Value {
    let delta = if est.is_exact() {
        json!({ "num": est.value.numer().to_string(), "den": est.value.denom().to_string() })
    } else {
        json!(est.value_f64())
    };
    json!({
        "test": spec.kind.to_string(),
        "space": spec.ctx.space.to_string(),
        "k": spec.ctx.k,
        "mode": if est.is_exact() { "exact" } else { "mc" },
        "delta": delta,
        "ci": est.ci.map(|(lo, hi)| json!([lo, hi])),
        "trials": est.trials,
        "seed": seed,
        "theorem_bounds": bounds.map(|b| json!({
            "lower": b.lower.to_f64(),
            "upper": b.upper.to_f64(),
            "theorem_id": b.theorem,
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_ENUM_CAP;
    use crate::hom::ratio;
    use num_bigint::BigInt;

    /// |x - y| < 10^-d, for bound tests.
    fn close(x: &BigRational, y: &BigRational, d: u32) -> bool {
        (x - y).abs() < BigRational::new(BigInt::one(), BigInt::from(10u32).pow(d))
    }

    fn ctx(space: CodewordSpace, k: u32) -> EvalMapCtx {
        EvalMapCtx::new(space, k, DEFAULT_ENUM_CAP).unwrap()
    }

    fn hom_space(g: GroupDescriptor, h: GroupDescriptor) -> CodewordSpace {
        CodewordSpace::Hom { domain: g, codomain: h }
    }

    fn codeword_fn(c: &EvalMapCtx, which: usize) -> QueryFunction {
        QueryFunction::from_hom(c.dom.clone(), &c.codewords[which]).unwrap()
    }

    fn all_specs() -> Vec<TestSpec> {
        vec![
            TestSpec::new(
                TestKind::Ker,
                ctx(hom_space(GroupDescriptor::Cyclic(9), GroupDescriptor::Cyclic(3)), 3),
                true,
            )
            .unwrap(),
            TestSpec::new(
                TestKind::VSpace,
                ctx(
                    hom_space(
                        GroupDescriptor::VectorSpace { q: 3, n: 3 },
                        GroupDescriptor::VectorSpace { q: 3, n: 1 },
                    ),
                    3,
                ),
                true,
            )
            .unwrap(),
            TestSpec::new(
                TestKind::NonZero,
                ctx(
                    hom_space(
                        GroupDescriptor::VectorSpace { q: 5, n: 1 },
                        GroupDescriptor::VectorSpace { q: 5, n: 2 },
                    ),
                    3,
                ),
                true,
            )
            .unwrap(),
            TestSpec::new(TestKind::Dihedral, ctx(CodewordSpace::DihedralAut { p: 5 }, 3), true)
                .unwrap(),
            TestSpec::new(
                TestKind::Inner,
                ctx(CodewordSpace::Inner { group: GroupDescriptor::Symmetric { n: 4 } }, 3),
                true,
            )
            .unwrap(),
            TestSpec::new(
                TestKind::LiftedVSpace,
                ctx(
                    CodewordSpace::Lifted {
                        big: GroupDescriptor::Extraspecial { p: 3, r: 3 },
                        proj: crate::hom::ProjectionSpec::AbelianizeModP,
                        base_codomain: GroupDescriptor::VectorSpace { q: 3, n: 1 },
                    },
                    3,
                ),
                true,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn completeness_all_kinds() {
        let mut rng = RngStream::new(3);
        for spec in all_specs() {
            let f = codeword_fn(&spec.ctx, spec.ctx.codewords.len() / 2);
            for _ in 0..50 {
                assert!(spec.run_trial(&f, &mut rng).unwrap(), "{} trial", spec.kind);
            }
            let d = spec.delta_exact(&f).unwrap();
            assert_eq!(d.value, BigRational::one(), "{} exact", spec.kind);
        }
    }

    #[test]
    fn exact_delta_matches_moment_backsolve() {
        let spec = TestSpec::new(
            TestKind::Ker,
            ctx(hom_space(GroupDescriptor::Cyclic(9), GroupDescriptor::Cyclic(3)), 2),
            true,
        )
        .unwrap();
        // multiplier-1 hom corrupted at one point
        let base = &spec.ctx.codewords[1];
        let mut f = QueryFunction::from_hom(spec.ctx.dom.clone(), base).unwrap();
        let old = f.table[4].clone();
        let Elem::Residues(r) = &old else { panic!() };
        f.table[4] = Elem::Residues(vec![(r[0] + 1) % 3]);
        let direct = spec.delta_exact(&f).unwrap().value;
        let back = spec.delta_by_moments(&f).unwrap();
        assert_eq!(direct, back);
        assert!(direct < BigRational::one());
    }

    #[test]
    fn mc_estimate_brackets_exact() {
        let spec = TestSpec::new(
            TestKind::Ker,
            ctx(hom_space(GroupDescriptor::Cyclic(8), GroupDescriptor::Cyclic(4)), 2),
            true,
        )
        .unwrap();
        let mut f = codeword_fn(&spec.ctx, 2);
        f.table[3] = Elem::Residues(vec![(0u64)]);
        f.table[5] = Elem::Residues(vec![(1u64)]);
        let exact = spec.delta_exact(&f).unwrap().value.to_f64().unwrap();
        let mut rng = RngStream::new(17);
        let est = spec.delta_mc(&f, 20_000, &mut rng).unwrap();
        let (lo, hi) = est.ci.unwrap();
        assert!(lo <= exact && exact <= hi, "exact {exact} outside [{lo}, {hi}]");
    }

    #[test]
    fn wilson_interval_at_full_success() {
        let (lo, hi) = wilson_ci(10_000, 10_000);
        assert!(lo > 0.999 && hi == 1.0);
        let (lo, _) = wilson_ci(0, 10);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn vspace_shortcut_agrees_with_membership() {
        let space = hom_space(
            GroupDescriptor::VectorSpace { q: 3, n: 3 },
            GroupDescriptor::VectorSpace { q: 3, n: 1 },
        );
        let c = ctx(space, 3);
        let spec = TestSpec::new(TestKind::VSpace, c, true).unwrap();
        // random-ish function: value = product of coordinates
        let f3 = field(3).unwrap();
        let table: Vec<Elem> = spec
            .ctx
            .dom
            .elems
            .iter()
            .map(|x| {
                let Elem::Vector(v) = x else { panic!() };
                Elem::Vector(vec![f3.mul(f3.mul(v[0], v[1]), f3.add(v[2], 1))])
            })
            .collect();
        let f = QueryFunction {
            dom: spec.ctx.dom.clone(),
            codomain: GroupDescriptor::VectorSpace { q: 3, n: 1 },
            table,
        };
        let mut rng = RngStream::new(8);
        for _ in 0..300 {
            let (xs, coeffs) = sample_vspace_test_tuple(3, 3, 3, true, &mut rng).unwrap();
            let quick = pass_linear_relation(3, &xs, &coeffs, &f).unwrap();
            let ys: Vec<Elem> = xs.iter().map(|x| f.at(x).clone()).collect();
            let full = spec.ctx.image_membership_linear(&xs, &ys).unwrap().unwrap();
            assert_eq!(quick, full);
        }
    }

    #[test]
    fn nonzero_linear_function_always_passes() {
        let spec = TestSpec::new(
            TestKind::NonZero,
            ctx(
                hom_space(
                    GroupDescriptor::VectorSpace { q: 5, n: 1 },
                    GroupDescriptor::VectorSpace { q: 5, n: 2 },
                ),
                4,
            ),
            true,
        )
        .unwrap();
        // f(x) = x * (2, 3)
        let f5 = field(5).unwrap();
        let table: Vec<Elem> = spec
            .ctx
            .dom
            .elems
            .iter()
            .map(|x| {
                let Elem::Vector(v) = x else { panic!() };
                Elem::Vector(vec![f5.mul(v[0], 2), f5.mul(v[0], 3)])
            })
            .collect();
        let f = QueryFunction {
            dom: spec.ctx.dom.clone(),
            codomain: GroupDescriptor::VectorSpace { q: 5, n: 2 },
            table,
        };
        assert_eq!(spec.delta_exact(&f).unwrap().value, BigRational::one());
    }

    #[test]
    fn bounds_reference_values() {
        // Z_27 -> Z_9, t = 1, k = 4, delta = 1: lower = 2/3
        let spec = TestSpec::new(
            TestKind::Ker,
            ctx(hom_space(GroupDescriptor::Cyclic(27), GroupDescriptor::Cyclic(9)), 4),
            true,
        )
        .unwrap();
        let b = soundness_bounds(&spec, &BigRational::one()).unwrap();
        let two_thirds = ratio(2, 3);
        assert!(b.lower <= two_thirds && close(&b.lower, &two_thirds, 30));
        assert!(b.upper >= BigRational::one());

        // vector space, delta = 1, odd k: lower = 1 (up to rounding)
        let vspec = TestSpec::new(
            TestKind::VSpace,
            ctx(
                hom_space(
                    GroupDescriptor::VectorSpace { q: 3, n: 3 },
                    GroupDescriptor::VectorSpace { q: 3, n: 1 },
                ),
                3,
            ),
            true,
        )
        .unwrap();
        let b = soundness_bounds(&vspec, &BigRational::one()).unwrap();
        assert!(b.lower <= BigRational::one() && close(&b.lower, &BigRational::one(), 30));

        // dihedral delta = 1, k = 3: lower exactly 1/2 (exponent 1 root is exact)
        let dspec =
            TestSpec::new(TestKind::Dihedral, ctx(CodewordSpace::DihedralAut { p: 5 }, 3), true)
                .unwrap();
        let b = soundness_bounds(&dspec, &BigRational::one()).unwrap();
        assert_eq!(b.lower, ratio(1, 2));
    }

    #[test]
    fn theorem_range_enforcement() {
        // even k rejected for the vector-space theorem
        let vspec = TestSpec::new(
            TestKind::VSpace,
            ctx(
                hom_space(
                    GroupDescriptor::VectorSpace { q: 2, n: 4 },
                    GroupDescriptor::VectorSpace { q: 2, n: 1 },
                ),
                4,
            ),
            true,
        )
        .unwrap();
        assert!(matches!(
            soundness_bounds(&vspec, &ratio(1, 2)),
            Err(Error::OutOfTheoremRange { .. })
        ));
        // k below t+2 rejected for the cyclic theorem
        let kspec = TestSpec::new(
            TestKind::Ker,
            ctx(hom_space(GroupDescriptor::Cyclic(27), GroupDescriptor::Cyclic(9)), 2),
            true,
        )
        .unwrap();
        assert!(matches!(
            soundness_bounds(&kspec, &ratio(1, 2)),
            Err(Error::OutOfTheoremRange { .. })
        ));
        // dihedral k = 2 rejected
        let dspec =
            TestSpec::new(TestKind::Dihedral, ctx(CodewordSpace::DihedralAut { p: 5 }, 2), true)
                .unwrap();
        assert!(matches!(
            soundness_bounds(&dspec, &ratio(1, 2)),
            Err(Error::OutOfTheoremRange { .. })
        ));
    }

    #[test]
    fn vspace_below_floor_reports_zero() {
        let vspec = TestSpec::new(
            TestKind::VSpace,
            ctx(
                hom_space(
                    GroupDescriptor::VectorSpace { q: 3, n: 3 },
                    GroupDescriptor::VectorSpace { q: 3, n: 1 },
                ),
                3,
            ),
            true,
        )
        .unwrap();
        // below the trivial-pass floor the theorem is uninformative
        let b = soundness_bounds(&vspec, &ratio(1, 4)).unwrap();
        assert_eq!(b.lower, BigRational::zero());
        assert_eq!(b.upper, BigRational::one());
    }

    #[test]
    fn inner_extraspecial_constant() {
        // H_3, k = 4, tau = 4: c = trho_4 / (27 trho_3) = 89/105
        let spec = TestSpec::new(
            TestKind::Inner,
            ctx(CodewordSpace::Inner { group: GroupDescriptor::Extraspecial { p: 3, r: 3 } }, 4),
            true,
        )
        .unwrap();
        let b = soundness_bounds(&spec, &BigRational::one()).unwrap();
        assert_eq!(b.lower, ratio(89, 105));
        // k = 3 < tau
        let spec3 = TestSpec::new(
            TestKind::Inner,
            ctx(CodewordSpace::Inner { group: GroupDescriptor::Extraspecial { p: 3, r: 3 } }, 3),
            true,
        )
        .unwrap();
        assert!(matches!(
            soundness_bounds(&spec3, &BigRational::one()),
            Err(Error::OutOfTheoremRange { .. })
        ));
    }

    #[test]
    fn lifted_vspace_delta_of_lift_matches_base() {
        // f = g compose pi for a base linear map g: delta'_k = base delta_k = 1
        let space = CodewordSpace::Lifted {
            big: GroupDescriptor::Extraspecial { p: 3, r: 3 },
            proj: crate::hom::ProjectionSpec::AbelianizeModP,
            base_codomain: GroupDescriptor::VectorSpace { q: 3, n: 1 },
        };
        let c = ctx(space, 3);
        assert_eq!(c.codewords.len(), 9);
        let spec = TestSpec::new(TestKind::LiftedVSpace, c, true).unwrap();
        let f = codeword_fn(&spec.ctx, 4);
        assert_eq!(spec.delta_exact(&f).unwrap().value, BigRational::one());
        // a corrupted lift drops strictly below 1
        let mut g = codeword_fn(&spec.ctx, 4);
        let Elem::Vector(v) = &g.table[7] else { panic!() };
        g.table[7] = Elem::Vector(vec![(v[0] + 1) % 3]);
        let d = spec.delta_exact(&g).unwrap().value;
        assert!(d < BigRational::one());
        // and the MC estimator brackets it
        let mut rng = RngStream::new(12);
        let est = spec.delta_mc(&g, 20_000, &mut rng).unwrap();
        let (lo, hi) = est.ci.unwrap();
        let exact = d.to_f64().unwrap();
        assert!(lo <= exact && exact <= hi);
    }

    #[test]
    fn lifted_kernel_test_gl() {
        // determinant characters of GL_2(3): kernel test over the lifted space
        let space = CodewordSpace::Lifted {
            big: GroupDescriptor::GeneralLinear { n: 2, q: 3 },
            proj: crate::hom::ProjectionSpec::Det,
            base_codomain: GroupDescriptor::Cyclic(2),
        };
        let c = ctx(space, 2);
        let spec = TestSpec::new(TestKind::Ker, c, true).unwrap();
        let f = codeword_fn(&spec.ctx, 1);
        assert_eq!(spec.delta_exact(&f).unwrap().value, BigRational::one());
        assert_eq!(spec.delta_by_moments(&f).unwrap(), BigRational::one());
    }

    #[test]
    fn estimate_records_shape() {
        let spec = TestSpec::new(
            TestKind::Ker,
            ctx(hom_space(GroupDescriptor::Cyclic(27), GroupDescriptor::Cyclic(9)), 4),
            true,
        )
        .unwrap();
        let f = codeword_fn(&spec.ctx, 2);
        let est = spec.delta_exact(&f).unwrap();
        let bounds = soundness_bounds(&spec, &est.value).unwrap();
        let rec = estimate_record(&spec, &est, 7, Some(&bounds));
        assert_eq!(rec["mode"], "exact");
        assert_eq!(rec["delta"]["num"], "1");
        assert_eq!(rec["theorem_bounds"]["theorem_id"], "cyclic-bounded-rank");
    }

    #[test]
    fn delta_backsolve_beyond_table_cap() {
        // Z_27 -> Z_9 at k = 6 has 27^6 tuples; the moment path stays exact
        let c = EvalMapCtx::new(
            hom_space(GroupDescriptor::Cyclic(27), GroupDescriptor::Cyclic(9)),
            6,
            200_000,
        )
        .unwrap();
        let spec = TestSpec::new(TestKind::Ker, c, true).unwrap();
        assert!(spec.table.is_none());
        assert!(spec.cyclic_sampler.is_some());
        let mut f = codeword_fn(&spec.ctx, 3);
        f.table[11] = Elem::Residues(vec![0]);
        let d = spec.delta_exact(&f).unwrap();
        assert!(d.is_exact());
        assert!(d.value > BigRational::zero() && d.value < BigRational::one());
        // sampled trials agree with the exact value within the Wilson interval
        let mut rng = RngStream::new(5);
        let est = spec.delta_mc(&f, 20_000, &mut rng).unwrap();
        let (lo, hi) = est.ci.unwrap();
        let exact = d.value.to_f64().unwrap();
        assert!(lo <= exact && exact <= hi, "exact {exact} outside [{lo}, {hi}]");
    }

    #[test]
    fn kind_text_roundtrip() {
        for kind in
            [TestKind::Ker, TestKind::VSpace, TestKind::NonZero, TestKind::Dihedral, TestKind::Inner, TestKind::LiftedVSpace]
        {
            assert_eq!(kind.to_string().parse::<TestKind>().unwrap(), kind);
        }
        assert!("blr".parse::<TestKind>().is_err());
    }

    #[test]
    fn incompatible_kind_rejected() {
        let c = ctx(hom_space(GroupDescriptor::Cyclic(9), GroupDescriptor::Cyclic(3)), 2);
        assert!(TestSpec::new(TestKind::Dihedral, c, true).is_err());
    }
}
