//! Test-defining distributions: kernel-weighted tuples, the level-j relation
//! distributions over vector spaces, nonzero tuples, stabilizer-weighted
//! tuples, and lifted preimage sampling.

use crate::error::{Error, Result};
use crate::evalmap::{advance, checked_pow, CodewordSpace, EvalMapCtx};
use crate::exact::{binomial, rat_u128};
use crate::field::field;
use crate::group::{Elem, Enumeration, GroupDescriptor};
use crate::hom::ProjectionSpec;
use num_rational::BigRational;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::Arc;

/// Deterministic, splittable random stream. Identical (seed, stream index)
/// pairs give identical draw sequences on every platform.
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> RngStream {
        RngStream { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream for worker/row `index` under the same seed.
    pub fn substream(seed: u64, index: u64) -> RngStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RngStream { rng }
    }

    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.gen_range(0..n)
    }

    pub fn below_u128(&mut self, n: u128) -> u128 {
        debug_assert!(n > 0);
        // rejection from the largest multiple of n
        let zone = u128::MAX - (u128::MAX % n);
        loop {
            let hi = self.rng.next_u64() as u128;
            let lo = self.rng.next_u64() as u128;
            let x = (hi << 64) | lo;
            if x < zone {
                return x % n;
            }
        }
    }
}

/// Exact weighted table over k-tuples of domain indices.
pub struct WeightedTupleTable {
    pub tuples: Vec<Vec<usize>>,
    pub weights: Vec<u128>,
    cumulative: Vec<u128>,
    pub total_weight: u128,
    /// True when tuples outside the non-surjective set were excluded.
    pub restricted: bool,
}

impl WeightedTupleTable {
    pub fn from_rows(tuples: Vec<Vec<usize>>, weights: Vec<u128>, restricted: bool) -> Self {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0u128;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        WeightedTupleTable { tuples, weights, cumulative, total_weight: acc, restricted }
    }

    pub fn sample(&self, rng: &mut RngStream) -> &[usize] {
        let r = rng.below_u128(self.total_weight);
        let i = self.cumulative.partition_point(|&c| c <= r);
        &self.tuples[i]
    }

    pub fn probability_of(&self, tuple: &[usize]) -> BigRational {
        let w: u128 = self
            .tuples
            .iter()
            .zip(&self.weights)
            .filter(|(t, _)| t.as_slice() == tuple)
            .map(|(_, &w)| w)
            .sum();
        rat_u128(w) / rat_u128(self.total_weight)
    }
}

/// Kernel-weighted table over the non-surjective tuple set: the sampling
/// distribution of the kernel test.
pub fn build_dker_table(ctx: &EvalMapCtx) -> Result<WeightedTupleTable> {
    let CodewordSpace::Hom { codomain, .. } = &ctx.space else {
        return Err(Error::Unsupported("kernel-weighted table needs a hom space".into()));
    };
    let n = ctx.dom.len();
    let total_tuples = checked_pow(n as u128, ctx.k)?;
    if total_tuples > ctx.cap {
        return Err(Error::TooLarge { needed: total_tuples, cap: ctx.cap });
    }
    let hom_count = ctx.codewords.len() as u128;
    let hk = checked_pow(codomain.order(), ctx.k)?;
    let mut tuples = Vec::new();
    let mut weights = Vec::new();
    let mut restricted = false;
    let mut idx = vec![0usize; ctx.k as usize];
    loop {
        let xs: Vec<Elem> = idx.iter().map(|&i| ctx.dom.elems[i].clone()).collect();
        let ker = ctx.kernel_size_at(&xs)?;
        if hom_count / ker == hk {
            // evaluation map surjective: outside the sample space
            restricted = true;
        } else {
            tuples.push(idx.clone());
            weights.push(ker);
        }
        if !advance(&mut idx, n) {
            break;
        }
    }
    if tuples.is_empty() {
        return Err(Error::Unsupported("empty sample space: every tuple is surjective".into()));
    }
    Ok(WeightedTupleTable::from_rows(tuples, weights, restricted))
}

/// Stabilizer-weighted table over all of G^k for automorphism spaces; the
/// total weight is rho_k (dihedral) or trho_k (inner).
pub fn build_stab_table(ctx: &EvalMapCtx) -> Result<WeightedTupleTable> {
    if !matches!(ctx.space, CodewordSpace::DihedralAut { .. } | CodewordSpace::Inner { .. }) {
        return Err(Error::Unsupported("stabilizer table needs an automorphism space".into()));
    }
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

// ---- two-stage kernel-weighted sampling for large cyclic domains --------------

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort();
    out
}

fn moebius(n: u64) -> i64 {
    let mut n = n;
    let mut mu = 1i64;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// Kernel-weighted sampler for Z_n -> H that never materializes the tuple
/// space: a k-tuple with gcd(n, x_1..x_k) = d has kernel weight
/// prod_j gcd(d, m_j), so stage one draws the divisor class by its exact
/// total mass and stage two draws a uniform tuple within the class.
pub struct CyclicKernelSampler {
    n: u64,
    k: u32,
    /// (d, per-tuple weight, exact tuple count with gcd exactly d)
    classes: Vec<(u64, u128, u128)>,
    class_cum: Vec<u128>,
    pub total_weight: u128,
}

impl CyclicKernelSampler {
    pub fn new(g: &GroupDescriptor, h: &GroupDescriptor, k: u32) -> Result<CyclicKernelSampler> {
        let GroupDescriptor::Cyclic(n) = g else {
            return Err(Error::Unsupported("two-stage sampler needs a cyclic domain".into()));
        };
        let cod = h
            .cyclic_components()
            .ok_or_else(|| Error::Unsupported("two-stage sampler needs a cyclic codomain".into()))?;
        let mut classes = Vec::new();
        let mut class_cum = Vec::new();
        let mut acc = 0u128;
        for d in divisors(*n) {
            // tuples with every coordinate divisible by d and quotient gcd 1
            let mut count = 0i128;
            for e in divisors(n / d) {
                count += moebius(e) as i128 * checked_pow((n / d / e) as u128, k)? as i128;
            }
            if count <= 0 {
                continue;
            }
            let weight: u128 = cod.iter().map(|&m| num_integer::gcd(d, m) as u128).product();
            classes.push((d, weight, count as u128));
            acc += weight * count as u128;
            class_cum.push(acc);
        }
        Ok(CyclicKernelSampler { n: *n, k, classes, class_cum, total_weight: acc })
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<Elem> {
        let r = rng.below_u128(self.total_weight);
        let ci = self.class_cum.partition_point(|&c| c <= r);
        let (d, _, _) = self.classes[ci];
        let q = self.n / d;
        // uniform tuple of multiples of d whose quotients are jointly coprime to q
        loop {
            let quotients: Vec<u64> = (0..self.k).map(|_| rng.below(q)).collect();
            let mut g = q;
            for &u in &quotients {
                g = num_integer::gcd(g, u);
            }
            if g == 1 {
                return quotients.iter().map(|&u| Elem::Residues(vec![u * d])).collect();
            }
        }
    }
}

// ---- level-j relation distributions over vector spaces ------------------------

/// Nullspace basis of the n x k matrix with the tuple vectors as columns.
fn relation_space(q: u64, n: usize, xs: &[Elem]) -> Result<Vec<Vec<u8>>> {
    let f = field(q)?;
    let k = xs.len();
    // row-reduce the k x n matrix of rows x_i, tracking row operations on an
    // identity block: left-nullspace rows of the stacked matrix are relations
    let mut a = vec![0u8; k * (n + k)];
    for (i, x) in xs.iter().enumerate() {
        let Elem::Vector(v) = x else {
            return Err(Error::InvalidElement("vector tuple expected".into()));
        };
        a[i * (n + k)..i * (n + k) + n].copy_from_slice(v);
        a[i * (n + k) + n + i] = 1;
    }
    let cols = n + k;
    let mut rank = 0usize;
    for col in 0..n {
        let pivot = (rank..k).find(|&r| a[r * cols + col] != 0);
        let Some(p) = pivot else { continue };
        for j in 0..cols {
            a.swap(rank * cols + j, p * cols + j);
        }
        let inv = f.inv(a[rank * cols + col]);
        for j in 0..cols {
            a[rank * cols + j] = f.mul(a[rank * cols + j], inv);
        }
        for r in 0..k {
            if r != rank && a[r * cols + col] != 0 {
                let c = a[r * cols + col];
                for j in 0..cols {
                    let s = f.mul(c, a[rank * cols + j]);
                    a[r * cols + j] = f.sub(a[r * cols + j], s);
                }
            }
        }
        rank += 1;
    }
    Ok((rank..k).map(|r| a[r * cols + n..(r + 1) * cols].to_vec()).collect())
}

/// Level of the unique linear relation of a tuple over F_q^n: Some(j) when the
/// tuple has rank exactly k-1 and its single relation has support size j;
/// None for full-rank tuples and for tuples with two or more relations.
pub fn classify_relation_level(q: u64, n: usize, xs: &[Elem]) -> Result<Option<usize>> {
    let relations = relation_space(q, n, xs)?;
    if relations.len() != 1 {
        return Ok(None);
    }
    Ok(Some(relations[0].iter().filter(|&&c| c != 0).count()))
}

/// Closed-form |R_j|: C(k,j) (q-1)^{j-1} prod_{t=0}^{k-2} (q^n - q^t).
pub fn rj_count(q: u64, n: usize, k: u32, j: u32) -> Result<u128> {
    if j == 0 || j > k {
        return Err(Error::InvalidDescriptor("level j must satisfy 1 <= j <= k".into()));
    }
    let qn = checked_pow(q as u128, n as u32)?;
    let mut acc = binomial(k as u64, j as u64);
    acc = acc
        .checked_mul(checked_pow((q - 1) as u128, j - 1)?)
        .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })?;
    for t in 0..k - 1 {
        let factor = qn.saturating_sub(checked_pow(q as u128, t)?);
        acc = acc
            .checked_mul(factor)
            .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })?;
    }
    Ok(acc)
}

fn sample_vector(q: u64, n: usize, rng: &mut RngStream) -> Elem {
    Elem::Vector((0..n).map(|_| rng.below(q) as u8).collect())
}

/// k-1 vectors sampled uniformly subject to joint linear independence.
fn sample_independent(q: u64, n: usize, count: usize, rng: &mut RngStream) -> Result<Vec<Elem>> {
    loop {
        let xs: Vec<Elem> = (0..count).map(|_| sample_vector(q, n, rng)).collect();
        let mut mat = Vec::with_capacity(count * n);
        for x in &xs {
            let Elem::Vector(v) = x else { unreachable!() };
            mat.extend_from_slice(v);
        }
        if crate::group::mat_rank(&mat, count, n, q)? == count {
            return Ok(xs);
        }
    }
}

/// Uniform draw from R_j by the constructive form, verified by
/// classification before returning.
pub fn sample_rj(q: u64, n: usize, k: u32, j: u32, rng: &mut RngStream) -> Result<Vec<Elem>> {
    if j == 0 || j > k || n + 1 < k as usize {
        return Err(Error::InvalidDescriptor(format!(
            "R_{j} over V({q},{n})^{k} is empty or ill-formed"
        )));
    }
    let f = field(q)?;
    loop {
        // support of the relation
        let mut support: Vec<u32> = (0..k).collect();
        for i in (1..k as usize).rev() {
            let t = rng.below((i + 1) as u64) as usize;
            support.swap(i, t);
        }
        let mut support: Vec<u32> = support[..j as usize].to_vec();
        support.sort();
        let determined = *support.last().unwrap() as usize;
        // the other k-1 coordinates: jointly independent
        let free = sample_independent(q, n, k as usize - 1, rng)?;
        let mut tuple: Vec<Elem> = Vec::with_capacity(k as usize);
        let mut fi = free.into_iter();
        for i in 0..k as usize {
            if i == determined {
                tuple.push(Elem::Vector(vec![0; n]));
            } else {
                tuple.push(fi.next().unwrap());
            }
        }
        // nonzero coefficients on the support, normalized at the determined slot
        let mut acc = vec![0u8; n];
        for &s in &support[..j as usize - 1] {
            let a = (1 + rng.below(q - 1)) as u8;
            let Elem::Vector(v) = &tuple[s as usize] else { unreachable!() };
            for (ai, &vi) in acc.iter_mut().zip(v) {
                *ai = f.add(*ai, f.mul(a, vi));
            }
        }
        tuple[determined] = Elem::Vector(acc);
        if classify_relation_level(q, n, &tuple)? == Some(j as usize) {
            return Ok(tuple);
        }
    }
}

/// The vector-space test's front end: k-1 vectors, nonzero coefficients, and
/// the forced completion x_k = sum a_i x_i. Returns (tuple, coefficients).
/// The exact variant resamples until the first k-1 vectors are independent;
/// the relaxed variant takes them as drawn.
pub fn sample_vspace_test_tuple(
    q: u64,
    n: usize,
    k: u32,
    exact: bool,
    rng: &mut RngStream,
) -> Result<(Vec<Elem>, Vec<u8>)> {
    if k < 2 {
        return Err(Error::InvalidDescriptor("vector-space tuples need k >= 2".into()));
    }
    let f = field(q)?;
    let mut xs = if exact {
        sample_independent(q, n, k as usize - 1, rng)?
    } else {
        (0..k - 1).map(|_| sample_vector(q, n, rng)).collect()
    };
    let coeffs: Vec<u8> = (0..k - 1).map(|_| (1 + rng.below(q - 1)) as u8).collect();
    let mut last = vec![0u8; n];
    for (a, x) in coeffs.iter().zip(&xs) {
        let Elem::Vector(v) = x else { unreachable!() };
        for (li, &vi) in last.iter_mut().zip(v) {
            *li = f.add(*li, f.mul(*a, vi));
        }
    }
    xs.push(Elem::Vector(last));
    Ok((xs, coeffs))
}

/// Exact output distribution of the vector-space tuple sampler, as a map from
/// tuple to probability, by enumerating every (vectors, coefficients) input.
pub fn vspace_tuple_distribution(
    q: u64,
    n: usize,
    k: u32,
    exact: bool,
) -> Result<HashMap<Vec<Elem>, BigRational>> {
    let f = field(q)?;
    let desc = GroupDescriptor::VectorSpace { q, n };
    let elems = desc.enumerate(1 << 20)?;
    let m = elems.len();
    let km1 = k as usize - 1;
    let mut outcomes: HashMap<Vec<Elem>, u128> = HashMap::new();
    let mut total: u128 = 0;
    let mut vec_idx = vec![0usize; km1];
    loop {
        let xs: Vec<&Elem> = vec_idx.iter().map(|&i| &elems[i]).collect();
        let mut mat = Vec::with_capacity(km1 * n);
        for x in &xs {
            let Elem::Vector(v) = x else { unreachable!() };
            mat.extend_from_slice(v);
        }
        let independent = crate::group::mat_rank(&mat, km1, n, q)? == km1;
        if !exact || independent {
            let mut coef_idx = vec![0usize; km1];
            loop {
                let mut last = vec![0u8; n];
                for (ci, x) in coef_idx.iter().zip(&xs) {
                    let a = (*ci + 1) as u8;
                    let Elem::Vector(v) = x else { unreachable!() };
                    for (li, &vi) in last.iter_mut().zip(v) {
                        *li = f.add(*li, f.mul(a, vi));
                    }
                }
                let mut tuple: Vec<Elem> = xs.iter().map(|&x| x.clone()).collect();
                tuple.push(Elem::Vector(last));
                *outcomes.entry(tuple).or_insert(0) += 1;
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
    Ok(outcomes
        .into_iter()
        .map(|(t, c)| (t, rat_u128(c) / rat_u128(total)))
        .collect())
}

/// Exact total-variation distance between two tuple distributions.
pub fn tv_distance(
    p: &HashMap<Vec<Elem>, BigRational>,
    r: &HashMap<Vec<Elem>, BigRational>,
) -> BigRational {
    let zero = BigRational::from_integer(0.into());
    let mut acc = BigRational::from_integer(0.into());
    let keys: std::collections::HashSet<&Vec<Elem>> = p.keys().chain(r.keys()).collect();
    for key in keys {
        let a = p.get(key).unwrap_or(&zero);
        let b = r.get(key).unwrap_or(&zero);
        let d = a - b;
        acc += if d < zero { -d } else { d };
    }
    acc / BigRational::from_integer(2.into())
}

/// Uniform tuple over the nonzero field elements.
pub fn sample_nonzero(q: u64, k: u32, rng: &mut RngStream) -> Vec<Elem> {
    (0..k).map(|_| Elem::Vector(vec![(1 + rng.below(q - 1)) as u8])).collect()
}

// ---- lifted preimage sampling --------------------------------------------------

/// Uniform fiber sampling for a built-in projection out of an enumerated
/// group.
pub struct FiberSampler {
    pub big: Arc<Enumeration>,
    pub proj: ProjectionSpec,
    pub base: GroupDescriptor,
    fibers: HashMap<Elem, Vec<usize>>,
}

impl FiberSampler {
    pub fn new(big: Arc<Enumeration>, proj: ProjectionSpec) -> Result<FiberSampler> {
        let base = proj.base_domain(&big.desc)?;
        let mut fibers: HashMap<Elem, Vec<usize>> = HashMap::new();
        for (i, x) in big.elems.iter().enumerate() {
            fibers.entry(proj.apply(&big.desc, x)?).or_default().push(i);
        }
        Ok(FiberSampler { big, proj, base, fibers })
    }

    pub fn fiber_size(&self, base_elem: &Elem) -> usize {
        self.fibers.get(base_elem).map(|v| v.len()).unwrap_or(0)
    }

    /// Indices into the big enumeration of the preimage of a base element.
    pub fn fiber(&self, base_elem: &Elem) -> Option<&[usize]> {
        self.fibers.get(base_elem).map(|v| v.as_slice())
    }

    pub fn preimage_uniform(&self, base_elem: &Elem, rng: &mut RngStream) -> Result<Elem> {
        let fiber = self
            .fibers
            .get(base_elem)
            .ok_or_else(|| Error::InvalidElement("element outside the projection image".into()))?;
        let i = rng.below(fiber.len() as u64) as usize;
        Ok(self.big.elems[fiber[i]].clone())
    }
}

/// Base element in whatever encoding the projection's quotient uses, from a
/// level-k tuple coordinate drawn over V(q,n).
fn base_encode(base: &GroupDescriptor, v: &Elem) -> Elem {
    match (base, v) {
        (GroupDescriptor::Cyclic(_), Elem::Vector(w)) if w.len() == 1 => {
            Elem::Residues(vec![w[0] as u64])
        }
        _ => v.clone(),
    }
}

/// Tuple from pi^{-1}(R_k): base tuple uniform on R_k over the projection's
/// quotient (viewed as a vector space over its prime field), lifted by
/// uniform fiber draws.
pub fn sample_lifted_rk(fs: &FiberSampler, k: u32, rng: &mut RngStream) -> Result<Vec<Elem>> {
    let (q, n) = match &fs.base {
        GroupDescriptor::VectorSpace { q, n } => (*q, *n),
        GroupDescriptor::Cyclic(p) if crate::field::is_prime_u64(*p) => (*p, 1usize),
        other => {
            return Err(Error::Unsupported(format!(
                "lifted relation sampling needs a prime-field quotient, got {other}"
            )))
        }
    };
    let base_tuple = sample_rj(q, n, k, k, rng)?;
    base_tuple
        .iter()
        .map(|v| fs.preimage_uniform(&base_encode(&fs.base, v), rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_ENUM_CAP;

    fn hom_ctx(g: GroupDescriptor, h: GroupDescriptor, k: u32) -> EvalMapCtx {
        EvalMapCtx::new(CodewordSpace::Hom { domain: g, codomain: h }, k, DEFAULT_ENUM_CAP).unwrap()
    }

    #[test]
    fn dker_table_reference_probability() {
        let ctx = hom_ctx(GroupDescriptor::Cyclic(4), GroupDescriptor::Cyclic(4), 2);
        let table = build_dker_table(&ctx).unwrap();
        assert_eq!(table.total_weight, 22);
        assert!(!table.restricted, "cyclic domains keep every tuple");
        assert_eq!(
            table.probability_of(&[0, 0]),
            BigRational::new(4.into(), 22.into())
        );
    }

    #[test]
    fn dker_empirical_frequencies() {
        let ctx = hom_ctx(GroupDescriptor::Cyclic(9), GroupDescriptor::Cyclic(3), 3);
        let table = build_dker_table(&ctx).unwrap();
        let mut rng = RngStream::new(42);
        let trials = 100_000u64;
        let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
        for _ in 0..trials {
            *counts.entry(table.sample(&mut rng).to_vec()).or_insert(0) += 1;
        }
        for (t, w) in table.tuples.iter().zip(&table.weights) {
            let p = *w as f64 / table.total_weight as f64;
            let sigma = (p * (1.0 - p) * trials as f64).sqrt();
            let observed = *counts.get(t).unwrap_or(&0) as f64;
            assert!(
                (observed - p * trials as f64).abs() <= 4.0 * sigma + 1.0,
                "tuple {t:?}: observed {observed}, expected {}",
                p * trials as f64
            );
        }
    }

    #[test]
    fn stab_table_totals() {
        let ctx = EvalMapCtx::new(CodewordSpace::DihedralAut { p: 5 }, 2, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(build_stab_table(&ctx).unwrap().total_weight, 260);
        let inn = EvalMapCtx::new(
            CodewordSpace::Inner { group: GroupDescriptor::Symmetric { n: 3 } },
            2,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        assert_eq!(build_stab_table(&inn).unwrap().total_weight, 66);
        let h3 = EvalMapCtx::new(
            CodewordSpace::Inner { group: GroupDescriptor::Extraspecial { p: 3, r: 3 } },
            2,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        assert_eq!(build_stab_table(&h3).unwrap().total_weight, 1377);
    }

    #[test]
    fn two_stage_cyclic_matches_table_masses() {
        let g = GroupDescriptor::Cyclic(8);
        let h = GroupDescriptor::Cyclic(4);
        let ctx = hom_ctx(g.clone(), h.clone(), 2);
        let table = build_dker_table(&ctx).unwrap();
        let two_stage = CyclicKernelSampler::new(&g, &h, 2).unwrap();
        assert_eq!(two_stage.total_weight, table.total_weight);
        // per-class mass agreement
        for (d, w, count) in &two_stage.classes {
            let table_mass: u128 = table
                .tuples
                .iter()
                .zip(&table.weights)
                .filter(|(t, _)| {
                    let mut gg = 8u64;
                    for &i in t.iter() {
                        let Elem::Residues(r) = &ctx.dom.elems[i] else { panic!() };
                        gg = num_integer::gcd(gg, r[0]);
                    }
                    gg == *d
                })
                .map(|(_, &w)| w)
                .sum();
            assert_eq!(w * count, table_mass, "divisor {d}");
        }
        // draws land in the right classes deterministically
        let mut rng = RngStream::new(7);
        for _ in 0..200 {
            let xs = two_stage.sample(&mut rng);
            assert_eq!(xs.len(), 2);
            for x in &xs {
                let Elem::Residues(r) = x else { panic!() };
                assert!(r[0] < 8);
            }
        }
    }

    #[test]
    fn classification_partitions_the_tuple_space() {
        let (q, n, k) = (2u64, 3usize, 3u32);
        let desc = GroupDescriptor::VectorSpace { q, n };
        let elems = desc.enumerate(1000).unwrap();
        let m = elems.len();
        let mut level_counts = vec![0u128; k as usize + 1];
        let mut full_rank = 0u128;
        let mut degenerate = 0u128;
        let mut idx = vec![0usize; k as usize];
        loop {
            let xs: Vec<Elem> = idx.iter().map(|&i| elems[i].clone()).collect();
            match classify_relation_level(q, n, &xs).unwrap() {
                Some(j) => level_counts[j] += 1,
                None => {
                    let mut mat = Vec::new();
                    for x in &xs {
                        let Elem::Vector(v) = x else { panic!() };
                        mat.extend_from_slice(v);
                    }
                    if crate::group::mat_rank(&mat, k as usize, n, q).unwrap() == k as usize {
                        full_rank += 1;
                    } else {
                        degenerate += 1;
                    }
                }
            }
            if !advance(&mut idx, m) {
                break;
            }
        }
        let total: u128 = level_counts.iter().sum::<u128>() + full_rank + degenerate;
        assert_eq!(total, (m as u128).pow(k));
        // census against the closed form
        for j in 1..=k {
            assert_eq!(level_counts[j as usize], rj_count(q, n, k, j).unwrap(), "j={j}");
        }
    }

    #[test]
    fn classify_duplicate_pair() {
        let v = Elem::Vector(vec![1, 0, 1]);
        let w = Elem::Vector(vec![0, 1, 1]);
        let xs = vec![v.clone(), v.clone(), w];
        assert_eq!(classify_relation_level(2, 3, &xs).unwrap(), Some(2));
    }

    #[test]
    fn rj_sampler_lands_in_level() {
        let mut rng = RngStream::new(11);
        for j in 1..=3u32 {
            for _ in 0..100 {
                let xs = sample_rj(3, 3, 3, j, &mut rng).unwrap();
                assert_eq!(classify_relation_level(3, 3, &xs).unwrap(), Some(j as usize));
            }
        }
    }

    #[test]
    fn vspace_tuple_invariants() {
        let mut rng = RngStream::new(5);
        let f = field(3).unwrap();
        for _ in 0..200 {
            let (xs, coeffs) = sample_vspace_test_tuple(3, 4, 3, true, &mut rng).unwrap();
            assert!(coeffs.iter().all(|&a| a != 0));
            let Elem::Vector(last) = &xs[2] else { panic!() };
            let mut acc = vec![0u8; 4];
            for (a, x) in coeffs.iter().zip(&xs[..2]) {
                let Elem::Vector(v) = x else { panic!() };
                for (ai, &vi) in acc.iter_mut().zip(v) {
                    *ai = f.add(*ai, f.mul(*a, vi));
                }
            }
            assert_eq!(&acc, last);
        }
    }

    #[test]
    fn exact_sampler_is_uniform_on_rk() {
        // q=2, n=3, k=3: the exact sampler's support is R_3 with equal mass
        let dist = vspace_tuple_distribution(2, 3, 3, true).unwrap();
        let expected = rj_count(2, 3, 3, 3).unwrap();
        assert_eq!(dist.len() as u128, expected);
        let uniform = BigRational::new(1.into(), expected.to_string().parse().unwrap());
        for (t, p) in &dist {
            assert_eq!(p, &uniform, "{t:?}");
            assert_eq!(classify_relation_level(2, 3, t).unwrap(), Some(3));
        }
    }

    #[test]
    fn tv_between_exact_and_relaxed_shrinks() {
        let mut prev: Option<BigRational> = None;
        for n in 3..=5usize {
            let p = vspace_tuple_distribution(2, n, 3, true).unwrap();
            let r = vspace_tuple_distribution(2, n, 3, false).unwrap();
            let tv = tv_distance(&p, &r);
            let bound = BigRational::new(4.into(), (1u64 << n).into());
            assert!(tv <= bound, "n={n}: tv {tv} > bound {bound}");
            if let Some(prev) = &prev {
                assert!(&tv < prev, "n={n}");
            }
            prev = Some(tv);
        }
    }

    #[test]
    fn nonzero_sampler_frequencies() {
        let mut rng = RngStream::new(9);
        let trials = 100_000;
        let mut counts = vec![0u64; 5];
        for _ in 0..trials {
            let xs = sample_nonzero(5, 2, &mut rng);
            for x in xs {
                let Elem::Vector(v) = x else { panic!() };
                assert!(v[0] != 0);
                counts[v[0] as usize] += 1;
            }
        }
        let p = 0.25f64;
        let total = (2 * trials) as f64;
        let sigma = (p * (1.0 - p) * total).sqrt();
        for c in &counts[1..] {
            assert!((*c as f64 - p * total).abs() <= 4.0 * sigma);
        }
    }

    #[test]
    fn fiber_sampling_mod3() {
        let big = Arc::new(Enumeration::new(&GroupDescriptor::Cyclic(9), 100).unwrap());
        let fs = FiberSampler::new(big, ProjectionSpec::Mod { to: 3 }).unwrap();
        for b in 0..3u64 {
            assert_eq!(fs.fiber_size(&Elem::Residues(vec![b])), 3);
        }
        let mut rng = RngStream::new(21);
        let mut counts = vec![0u64; 9];
        for _ in 0..9000 {
            let x = fs.preimage_uniform(&Elem::Residues(vec![1]), &mut rng).unwrap();
            let Elem::Residues(r) = x else { panic!() };
            assert_eq!(r[0] % 3, 1);
            counts[r[0] as usize] += 1;
        }
        for &v in [1usize, 4, 7].iter() {
            assert!((counts[v] as f64 - 3000.0).abs() < 4.0 * (3000.0f64 * (2.0 / 3.0)).sqrt());
        }
    }

    #[test]
    fn lifted_rk_projects_to_relations() {
        let big = Arc::new(
            Enumeration::new(&GroupDescriptor::LieGl { n: 2, q: 3 }, DEFAULT_ENUM_CAP).unwrap(),
        );
        let fs = FiberSampler::new(big.clone(), ProjectionSpec::Trace).unwrap();
        let mut rng = RngStream::new(33);
        for _ in 0..50 {
            let xs = sample_lifted_rk(&fs, 2, &mut rng).unwrap();
            let proj: Vec<Elem> = xs
                .iter()
                .map(|x| {
                    let Elem::Residues(r) =
                        ProjectionSpec::Trace.apply(&big.desc, x).unwrap()
                    else {
                        panic!()
                    };
                    Elem::Vector(vec![r[0] as u8])
                })
                .collect();
            assert_eq!(classify_relation_level(3, 1, &proj).unwrap(), Some(2));
        }
    }

    #[test]
    fn deterministic_replay() {
        let mut a = RngStream::new(123);
        let mut b = RngStream::new(123);
        for _ in 0..1000 {
            assert_eq!(a.below(1000), b.below(1000));
        }
        let mut s1 = RngStream::substream(5, 1);
        let mut s2 = RngStream::substream(5, 2);
        let seq1: Vec<u64> = (0..10).map(|_| s1.below(100)).collect();
        let seq2: Vec<u64> = (0..10).map(|_| s2.below(100)).collect();
        assert_ne!(seq1, seq2);
    }
}
