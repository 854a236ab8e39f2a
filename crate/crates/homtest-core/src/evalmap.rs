//! The evaluation map on codeword spaces and the constants derived from it:
//! gamma_k, eta_k, rho_k, trho_k, by closed formula and by brute force.

use crate::error::{Error, Result};
use crate::exact::{pow_rat, rat_u128};
use crate::group::{cycle_type, Elem, Enumeration, GroupDescriptor, DEFAULT_ENUM_CAP};
use crate::hom::{
    enumerate_aut_dihedral, enumerate_homs, enumerate_inner, enumerate_lifthom,
    Hom, HomKind, ProjectionSpec,
};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodewordSpace {
    /// Hom(G,H) for an abelian pair.
    Hom { domain: GroupDescriptor, codomain: GroupDescriptor },
    /// Aut(D_2p).
    DihedralAut { p: u64 },
    /// Inn(G).
    Inner { group: GroupDescriptor },
    /// Lifts of Hom(G,H) along a projection out of the big group.
    Lifted {
        big: GroupDescriptor,
        proj: ProjectionSpec,
        base_codomain: GroupDescriptor,
    },
}

impl CodewordSpace {
    pub fn domain(&self) -> GroupDescriptor {
        match self {
            CodewordSpace::Hom { domain, .. } => domain.clone(),
            CodewordSpace::DihedralAut { p } => GroupDescriptor::Dihedral { p: *p },
            CodewordSpace::Inner { group } => group.clone(),
            CodewordSpace::Lifted { big, .. } => big.clone(),
        }
    }

    pub fn codomain(&self) -> GroupDescriptor {
        match self {
            CodewordSpace::Hom { codomain, .. } => codomain.clone(),
            CodewordSpace::DihedralAut { p } => GroupDescriptor::Dihedral { p: *p },
            CodewordSpace::Inner { group } => group.clone(),
            CodewordSpace::Lifted { base_codomain, .. } => base_codomain.clone(),
        }
    }

    pub fn enumerate_codewords(&self, cap: u128) -> Result<Vec<Hom>> {
        match self {
            CodewordSpace::Hom { domain, codomain } => enumerate_homs(domain, codomain),
            CodewordSpace::DihedralAut { p } => enumerate_aut_dihedral(*p),
            CodewordSpace::Inner { group } => {
                let dom = Enumeration::new(group, cap)?;
                enumerate_inner(&dom)
            }
            CodewordSpace::Lifted { big, proj, base_codomain } => {
                let base_dom = proj.base_domain(big)?;
                let base = enumerate_homs(&base_dom, base_codomain)?;
                enumerate_lifthom(big, proj, &base)
            }
        }
    }
}

impl fmt::Display for CodewordSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodewordSpace::Hom { domain, codomain } => write!(f, "{domain}->{codomain}"),
            CodewordSpace::DihedralAut { p } => write!(f, "aut:D({p})"),
            CodewordSpace::Inner { group } => write!(f, "inn:{group}"),
            CodewordSpace::Lifted { big, proj, base_codomain } => {
                let tag = match proj {
                    ProjectionSpec::Det => "det".to_string(),
                    ProjectionSpec::Trace => "tr".to_string(),
                    ProjectionSpec::Mod { to } => format!("mod{to}"),
                    ProjectionSpec::AbelianizeModP => "abmod".to_string(),
                };
                write!(f, "lift({tag}):{big}->{base_codomain}")
            }
        }
    }
}

/// Evaluation-map context: the codeword space, its enumerated codewords, the
/// enumerated domain, and the tuple arity.
pub struct EvalMapCtx {
    pub space: CodewordSpace,
    pub k: u32,
    pub dom: Arc<Enumeration>,
    pub codomain: GroupDescriptor,
    pub codewords: Vec<Hom>,
    pub cap: u128,
    /// Cycle-type index for inner spaces over symmetric groups (membership
    /// pre-filtering).
    is_symmetric_inner: bool,
}

impl EvalMapCtx {
    pub fn new(space: CodewordSpace, k: u32, cap: u128) -> Result<EvalMapCtx> {
        if k == 0 {
            return Err(Error::InvalidDescriptor("arity k must be >= 1".into()));
        }
        let domain = space.domain();
        domain.validate()?;
        let dom = Arc::new(Enumeration::new(&domain, cap)?);
        let codewords = space.enumerate_codewords(cap)?;
        let is_symmetric_inner = matches!(
            (&space, &domain),
            (CodewordSpace::Inner { .. }, GroupDescriptor::Symmetric { .. })
        );
        let codomain = space_codomain(&codewords, &space);
        Ok(EvalMapCtx { space, k, dom, codomain, codewords, cap, is_symmetric_inner })
    }

    /// Codewords agreeing with the identity pattern on xs: |ker(Gamma_xs)| for
    /// hom spaces, |Stab(xs)| for Aut(D_2p), |InnStab(xs)| for Inn.
    pub fn kernel_size_at(&self, xs: &[Elem]) -> Result<u128> {
        match &self.space {
            CodewordSpace::Hom { domain: GroupDescriptor::Cyclic(n), codomain } => {
                // ker Gamma_xs = Hom(G/<xs>, H); for cyclic G the quotient is Z_g
                let mut g = *n;
                for x in xs {
                    let Elem::Residues(r) = x else {
                        return Err(Error::InvalidElement("cyclic tuple expected".into()));
                    };
                    g = num_integer::gcd(g, r[0]);
                }
                let cod = codomain.cyclic_components().ok_or_else(|| {
                    Error::Unsupported("cyclic kernel shortcut needs a cyclic codomain".into())
                })?;
                Ok(cod.iter().map(|&m| num_integer::gcd(g, m) as u128).product())
            }
            CodewordSpace::Inner { group } => {
                // InnStab(xs) = (∩ C_G(x_i)) / Z(G): the intersection always
                // contains the center, and central conjugations are trivial
                let mut count = 0u128;
                'outer: for g in &self.dom.elems {
                    for x in xs {
                        if group.op(g, x)? != group.op(x, g)? {
                            continue 'outer;
                        }
                    }
                    count += 1;
                }
                Ok(count / group.center_order() as u128)
            }
            CodewordSpace::Lifted { proj, .. } => {
                // |ker Gamma~_xs| = |ker Gamma_{pi(xs)}| over the base space
                let base = self.base_ctx()?;
                let pxs: Vec<Elem> = xs
                    .iter()
                    .map(|x| proj.apply(&self.dom.desc, x))
                    .collect::<Result<Vec<_>>>()?;
                base.kernel_size_at(&pxs)
            }
            _ => self.kernel_size_by_scan(xs),
        }
    }

    /// Count codewords fixing (hom spaces: killing) every coordinate, by scan.
    pub fn kernel_size_by_scan(&self, xs: &[Elem]) -> Result<u128> {
        let pointwise_identity = !matches!(
            self.space,
            CodewordSpace::DihedralAut { .. } | CodewordSpace::Inner { .. }
        );
        let id = self.codomain.identity();
        let mut count = 0u128;
        'outer: for h in &self.codewords {
            for x in xs {
                let y = h.apply(x)?;
                let target = if pointwise_identity { &id } else { x };
                if &y != target {
                    continue 'outer;
                }
            }
            count += 1;
        }
        Ok(count)
    }

    /// First codeword (in enumeration order) mapping xs to ys, if any.
    pub fn image_membership(&self, xs: &[Elem], ys: &[Elem]) -> Result<Option<&Hom>> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidElement("tuple length mismatch".into()));
        }
        if self.is_symmetric_inner {
            // necessary condition: conjugation preserves cycle type
            for (x, y) in xs.iter().zip(ys) {
                let (Elem::Perm(a), Elem::Perm(b)) = (x, y) else {
                    return Ok(None);
                };
                if cycle_type(a) != cycle_type(b) {
                    return Ok(None);
                }
            }
        }
        'outer: for h in &self.codewords {
            for (x, y) in xs.iter().zip(ys) {
                if &h.apply(x)? != y {
                    continue 'outer;
                }
            }
            return Ok(Some(h));
        }
        Ok(None)
    }

    /// Linear-system membership for vector-space hom spaces: consistent iff
    /// every linear relation among xs also holds among ys. Agrees with the
    /// scan but does not produce a witness ordering.
    pub fn image_membership_linear(&self, xs: &[Elem], ys: &[Elem]) -> Result<Option<bool>> {
        let CodewordSpace::Hom {
            domain: GroupDescriptor::VectorSpace { q, n },
            codomain: GroupDescriptor::VectorSpace { n: m, .. },
        } = &self.space
        else {
            return Ok(None);
        };
        // stack [x_i | y_i] rows; solvable iff rank of the x-block equals the
        // rank of the full block
        let k = xs.len();
        let mut xblock = vec![0u8; k * n];
        let mut full = vec![0u8; k * (n + m)];
        for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
            let (Elem::Vector(xv), Elem::Vector(yv)) = (x, y) else {
                return Err(Error::InvalidElement("vector tuple expected".into()));
            };
            xblock[i * n..(i + 1) * n].copy_from_slice(xv);
            full[i * (n + m)..i * (n + m) + n].copy_from_slice(xv);
            full[i * (n + m) + n..(i + 1) * (n + m)].copy_from_slice(yv);
        }
        let r1 = crate::group::mat_rank(&xblock, k, *n, *q)?;
        let r2 = crate::group::mat_rank(&full, k, n + m, *q)?;
        Ok(Some(r1 == r2))
    }

    /// Total codeword mass: gamma_k for hom/lifted spaces, rho_k for
    /// Aut(D_2p), trho_k for Inn.
    pub fn codeword_mass(&self) -> Result<u128> {
        let mut total: u128 = 0;
        for h in &self.codewords {
            let base: u128 = match &self.space {
                CodewordSpace::DihedralAut { .. } | CodewordSpace::Inner { .. } => {
                    h.fix_count(&self.dom)?
                }
                _ => h.kernel_size(self.cap)?,
            };
            let term = checked_pow(base, self.k)?;
            total = total
                .checked_add(term)
                .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })?;
        }
        Ok(total)
    }

    /// Context for the base space of a lifted space.
    pub fn base_ctx(&self) -> Result<EvalMapCtx> {
        let CodewordSpace::Lifted { big, proj, base_codomain } = &self.space else {
            return Err(Error::Unsupported("base_ctx needs a lifted space".into()));
        };
        EvalMapCtx::new(
            CodewordSpace::Hom {
                domain: proj.base_domain(big)?,
                codomain: base_codomain.clone(),
            },
            self.k,
            self.cap,
        )
    }
}

fn space_codomain(codewords: &[Hom], space: &CodewordSpace) -> GroupDescriptor {
    codewords
        .first()
        .map(|h| h.codomain.clone())
        .unwrap_or_else(|| space.codomain())
}

pub fn checked_pow(base: u128, k: u32) -> Result<u128> {
    base.checked_pow(k).ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })
}

// ---- gamma ------------------------------------------------------------------

/// gamma_k = sum over Hom(G,H) of |ker phi|^k.
pub fn gamma_k_bruteforce(g: &GroupDescriptor, h: &GroupDescriptor, k: u32) -> Result<u128> {
    let homs = enumerate_homs(g, h)?;
    let mut total: u128 = 0;
    for hm in &homs {
        total += checked_pow(hm.kernel_size(DEFAULT_ENUM_CAP)?, k)?;
    }
    Ok(total)
}

/// gamma_k by the tuple-sum form: sum over G^k of |ker Gamma_xs|.
pub fn gamma_k_tuple_sum(ctx: &EvalMapCtx) -> Result<u128> {
    let n = ctx.dom.len();
    let total_tuples = checked_pow(n as u128, ctx.k)?;
    if total_tuples > ctx.cap {
        return Err(Error::TooLarge { needed: total_tuples, cap: ctx.cap });
    }
    let mut total: u128 = 0;
    let mut idx = vec![0usize; ctx.k as usize];
    loop {
        let xs: Vec<Elem> = idx.iter().map(|&i| ctx.dom.elems[i].clone()).collect();
        total += ctx.kernel_size_by_scan(&xs)?;
        if !advance(&mut idx, n) {
            return Ok(total);
        }
    }
}

pub fn advance(idx: &mut [usize], n: usize) -> bool {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < n {
            return true;
        }
        idx[d] = 0;
    }
    false
}

/// Closed form for gamma_k(Z_{p^r}, H) where H has p-component exponents
/// `ranks` (H_p = direct sum of Z_{p^{b_i}}).
pub fn gamma_k_closed_cyclic(p: u64, r: u32, ranks: &[u32], k: u32) -> Result<u128> {
    let hom = |m: u32| -> Result<u128> {
        let mut acc: u128 = 1;
        for &b in ranks {
            acc = acc
                .checked_mul(checked_pow(p as u128, m.min(b))?)
                .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })?;
        }
        Ok(acc)
    };
    // hom(r) + (1 - p^{-k}) * sum_{a=1}^{r} p^{ak} hom(r-a), with the rational
    // factor distributed to keep everything integral
    let mut total = hom(r)?;
    for a in 1..=r {
        let scale = checked_pow(p as u128, a * k)? - checked_pow(p as u128, (a - 1) * k)?;
        total += scale
            .checked_mul(hom(r - a)?)
            .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })?;
    }
    Ok(total)
}

/// p-component of an abelian descriptor (trivial group encoded as Z/1).
pub fn p_component(desc: &GroupDescriptor, p: u64) -> Result<GroupDescriptor> {
    let comps = desc
        .cyclic_components()
        .ok_or_else(|| Error::Unsupported(format!("{desc} is not a cyclic direct sum")))?;
    let mut parts = Vec::new();
    for n in comps {
        let mut pp = 1u64;
        let mut m = n;
        while m % p == 0 {
            pp *= p;
            m /= p;
        }
        if pp > 1 {
            parts.push(GroupDescriptor::Cyclic(pp));
        }
    }
    Ok(match parts.len() {
        0 => GroupDescriptor::Cyclic(1),
        1 => parts.pop().unwrap(),
        _ => GroupDescriptor::DirectSum(parts),
    })
}

/// gamma_k(G,H) = prod over primes p | |G| of gamma_k(G_p, H_p).
pub fn gamma_k_multiplicative(g: &GroupDescriptor, h: &GroupDescriptor, k: u32) -> Result<u128> {
    let primes = crate::exact::primes_dividing(g.order());
    let mut acc: u128 = 1;
    for p in primes {
        let gp = p_component(g, p)?;
        let hp = p_component(h, p)?;
        acc = acc
            .checked_mul(gamma_k_bruteforce(&gp, &hp, k)?)
            .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })?;
    }
    Ok(acc)
}

/// gamma_k(lifted) = |ker pi|^k * gamma_k(base).
pub fn lift_gamma(ker_pi_size: u128, base_gamma: u128, k: u32) -> Result<u128> {
    checked_pow(ker_pi_size, k)?
        .checked_mul(base_gamma)
        .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })
}

// ---- eta --------------------------------------------------------------------

/// eta_k = fraction of k-tuples where the evaluation map is not surjective
/// onto H^k.
pub fn eta_k(g: &GroupDescriptor, h: &GroupDescriptor, k: u32, cap: u128) -> Result<BigRational> {
    let homs = enumerate_homs(g, h)?;
    let hom_count = homs.len() as u128;
    let hk = checked_pow(h.order(), k)?;
    if h.order() == 1 {
        // every map is surjective onto the trivial target
        return Ok(BigRational::zero());
    }
    if hom_count < hk {
        return Ok(BigRational::one());
    }
    // exact scan: surjective iff |Hom| / |ker Gamma_xs| = |H|^k
    let ctx = EvalMapCtx::new(
        CodewordSpace::Hom { domain: g.clone(), codomain: h.clone() },
        k,
        cap,
    )?;
    let n = ctx.dom.len();
    let total_tuples = checked_pow(n as u128, k)?;
    if total_tuples > cap {
        return Err(Error::TooLarge { needed: total_tuples, cap });
    }
    let mut not_surjective: u128 = 0;
    let mut idx = vec![0usize; k as usize];
    loop {
        let xs: Vec<Elem> = idx.iter().map(|&i| ctx.dom.elems[i].clone()).collect();
        let ker = ctx.kernel_size_by_scan(&xs)?;
        if hom_count / ker != hk {
            not_surjective += 1;
        }
        if !advance(&mut idx, n) {
            break;
        }
    }
    Ok(BigRational::new(
        rat_u128(not_surjective).to_integer(),
        rat_u128(total_tuples).to_integer(),
    ))
}

// ---- rho (dihedral automorphisms) --------------------------------------------

/// Exact four-term closed form for rho_k over Aut(D_2p).
pub fn rho_k_dihedral(p: u64, k: u32) -> Result<u128> {
    let p128 = p as u128;
    let two_k = checked_pow(2, k)?;
    let p_k = checked_pow(p128, k)?;
    let term1 = (p128 - 1) * (p128 - 2) * two_k;
    let term2 = (p128 - 2) * two_k;
    let term3 = (p128 - 1) * p_k;
    let term4 = checked_pow(2 * p128, k)?;
    Ok(term1 + term2 + term3 + term4)
}

/// rho_k (resp. trho_k) by codeword scan: sum of |Fix(phi)|^k.
pub fn rho_k_bruteforce(ctx: &EvalMapCtx) -> Result<u128> {
    match &ctx.space {
        CodewordSpace::DihedralAut { .. } | CodewordSpace::Inner { .. } => ctx.codeword_mass(),
        _ => Err(Error::Unsupported("rho is defined for automorphism spaces".into())),
    }
}

// ---- trho (inner automorphisms) -----------------------------------------------

/// Conjugacy class sizes by orbit scan, in first-appearance order.
pub fn conjugacy_class_sizes(dom: &Enumeration) -> Result<Vec<u128>> {
    let mut assigned = vec![false; dom.len()];
    let mut out = Vec::new();
    for i in 0..dom.len() {
        if assigned[i] {
            continue;
        }
        let x = &dom.elems[i];
        let mut size = 0u128;
        for g in &dom.elems {
            let gi = dom.desc.inv(g)?;
            let conj = dom.desc.op(&dom.desc.op(g, x)?, &gi)?;
            let j = dom.index_of(&conj);
            if !assigned[j] {
                assigned[j] = true;
                size += 1;
            }
        }
        out.push(size);
    }
    Ok(out)
}

/// trho_k from class data: (|G|^k / |Z|) * sum over classes of |C|^{1-k}.
pub fn trho_k_class_formula(
    class_sizes: &[u128],
    order: u128,
    center: u128,
    k: u32,
) -> Result<u128> {
    let gk = pow_rat(&rat_u128(order), k);
    let mut sum = BigRational::zero();
    for &c in class_sizes {
        sum += BigRational::one() / pow_rat(&rat_u128(c), k - 1);
    }
    let val = gk * sum / rat_u128(center);
    if !val.is_integer() {
        return Err(Error::InvalidDescriptor("trho class formula did not yield an integer".into()));
    }
    val.to_integer()
        .to_u128()
        .ok_or(Error::TooLarge { needed: u128::MAX, cap: u128::MAX })
}

/// trho_k by centralizer scan: sum over Inn(G) representatives of |C_G(g)|^k.
pub fn trho_k_scan(dom: &Enumeration, k: u32) -> Result<u128> {
    let inner = enumerate_inner(dom)?;
    let mut total = 0u128;
    for h in &inner {
        let HomKind::Inner { g } = &h.kind else { unreachable!() };
        let mut cent = 0u128;
        for x in &dom.elems {
            if dom.desc.op(g, x)? == dom.desc.op(x, g)? {
                cent += 1;
            }
        }
        total += checked_pow(cent, k)?;
    }
    Ok(total)
}

/// Partitions of n as cycle-type count vectors a (a[i] = number of (i+1)-cycles).
pub fn partitions_as_cycle_counts(n: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, max_part: usize, counts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(counts.clone());
            return;
        }
        for part in (1..=max_part.min(remaining)).rev() {
            counts[part - 1] += 1;
            rec(remaining - part, part, counts, out);
            counts[part - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut vec![0; n], &mut out);
    out
}

/// trho_k(S_n) from the cycle-type class census (no element scan).
pub fn trho_k_symmetric(n: usize, k: u32) -> Result<u128> {
    let order: u128 = (1..=n as u128).product();
    let mut class_sizes = Vec::new();
    for counts in partitions_as_cycle_counts(n) {
        // centralizer size prod i^{a_i} a_i!
        let mut z: u128 = 1;
        for (i, &a) in counts.iter().enumerate() {
            z *= checked_pow((i + 1) as u128, a as u32)?;
            z *= (1..=a as u128).product::<u128>().max(1);
        }
        class_sizes.push(order / z);
    }
    let center: u128 = if n <= 2 { order } else { 1 };
    trho_k_class_formula(&class_sizes, order, center, k)
}

/// Closed form for extraspecial groups of order p^r:
/// trho_k = |G|^k * (1 + (p^{r-1}-1) p^{-k}).
pub fn trho_k_extraspecial(p: u64, r: u32, k: u32) -> Result<u128> {
    let order = checked_pow(p as u128, r)?;
    let gk = checked_pow(order, k)?;
    let pk = checked_pow(p as u128, k)?;
    Ok(gk + (checked_pow(p as u128, r - 1)? - 1) * (gk / pk))
}

// ---- misc ---------------------------------------------------------------------

/// Alternating binomial collapse sum_{i=j}^{k} (-1)^{k-i} C(k,i) C(i,j);
/// zero for 0 <= j < k, one at j = k.
pub fn binom_collapse_check(k: u64, j: u64) -> i128 {
    let mut acc: i128 = 0;
    for i in j..=k {
        let sign = if (k - i) % 2 == 0 { 1 } else { -1 };
        acc += sign * (crate::exact::binomial(k, i) * crate::exact::binomial(i, j)) as i128;
    }
    acc
}

#[derive(Serialize, Clone, Debug)]
pub struct ConstantsReport {
    pub space: String,
    pub k: u32,
    pub gamma_k: Option<u128>,
    pub rho_k: Option<u128>,
    pub trho_k: Option<u128>,
    pub eta_k_num: Option<String>,
    pub eta_k_den: Option<String>,
    pub method: String,
    pub elapsed_ms: u128,
}

/// All constants for a space at one arity, with every available path
/// cross-asserted.
pub fn constants_report(space: &CodewordSpace, k: u32, cap: u128) -> Result<ConstantsReport> {
    let start = std::time::Instant::now();
    let ctx = EvalMapCtx::new(space.clone(), k, cap)?;
    let mass = ctx.codeword_mass()?;
    let mut report = ConstantsReport {
        space: space.to_string(),
        k,
        gamma_k: None,
        rho_k: None,
        trho_k: None,
        eta_k_num: None,
        eta_k_den: None,
        method: "brute-force".into(),
        elapsed_ms: 0,
    };
    match space {
        CodewordSpace::Hom { domain, codomain } => {
            report.gamma_k = Some(mass);
            if let (GroupDescriptor::Cyclic(n), Some(_)) =
                (domain, codomain.cyclic_components())
            {
                if let Some((p, r)) = crate::field::prime_power(*n) {
                    let hp = p_component(codomain, p)?;
                    let ranks = hom_p_ranks(&hp, p);
                    let closed = gamma_k_closed_cyclic(p, r, &ranks, k)?;
                    if closed != mass {
                        return Err(Error::InvalidDescriptor(format!(
                            "closed-form gamma {closed} disagrees with scan {mass} for {space} k={k}"
                        )));
                    }
                    report.method = "closed-form+brute-force".into();
                }
            }
            if checked_pow(domain.order(), k).map(|t| t <= cap).unwrap_or(false) {
                let eta = eta_k(domain, codomain, k, cap)?;
                report.eta_k_num = Some(eta.numer().to_string());
                report.eta_k_den = Some(eta.denom().to_string());
            }
        }
        CodewordSpace::DihedralAut { p } => {
            let closed = rho_k_dihedral(*p, k)?;
            if closed != mass {
                return Err(Error::InvalidDescriptor(format!(
                    "closed-form rho {closed} disagrees with scan {mass} for {space} k={k}"
                )));
            }
            report.rho_k = Some(mass);
            report.method = "closed-form+brute-force".into();
        }
        CodewordSpace::Inner { group } => {
            let classes = conjugacy_class_sizes(&ctx.dom)?;
            let via_classes =
                trho_k_class_formula(&classes, group.order(), group.center_order(), k)?;
            if via_classes != mass {
                return Err(Error::InvalidDescriptor(format!(
                    "class-formula trho {via_classes} disagrees with scan {mass} for {space} k={k}"
                )));
            }
            report.trho_k = Some(mass);
            report.method = "class-formula+brute-force".into();
        }
        CodewordSpace::Lifted { big, proj, base_codomain } => {
            let base_dom = proj.base_domain(big)?;
            let base_gamma = gamma_k_bruteforce(&base_dom, base_codomain, k)?;
            let via_rule = lift_gamma(proj.kernel_size(big)?, base_gamma, k)?;
            if via_rule != mass {
                return Err(Error::InvalidDescriptor(format!(
                    "lifted gamma {via_rule} disagrees with scan {mass} for {space} k={k}"
                )));
            }
            report.gamma_k = Some(mass);
            report.method = "lift-rule+brute-force".into();
        }
    }
    report.elapsed_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Exponents b_i of the p-component of an abelian descriptor.
pub fn hom_p_ranks(hp: &GroupDescriptor, p: u64) -> Vec<u32> {
    let comps = hp.cyclic_components().unwrap_or_default();
    comps
        .iter()
        .map(|&c| {
            let mut b = 0;
            let mut m = c;
            while m % p == 0 {
                b += 1;
                m /= p;
            }
            b
        })
        .collect()
}

/// Cached index from cycle type to class id, for symmetric-group prefilters.
pub fn cycle_type_index(dom: &Enumeration) -> HashMap<Vec<usize>, usize> {
    let mut map = HashMap::new();
    for e in &dom.elems {
        if let Elem::Perm(w) = e {
            let next = map.len();
            map.entry(cycle_type(w)).or_insert(next);
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: u64) -> GroupDescriptor {
        GroupDescriptor::Cyclic(n)
    }

    #[test]
    fn gamma_reference_values() {
        assert_eq!(gamma_k_bruteforce(&z(4), &z(4), 2).unwrap(), 22);
        assert_eq!(gamma_k_bruteforce(&z(6), &z(6), 2).unwrap(), 55);
        assert_eq!(gamma_k_closed_cyclic(2, 2, &[2], 2).unwrap(), 22);
        assert_eq!(gamma_k_closed_cyclic(3, 1, &[1], 2).unwrap(), 11);
        // trivial codomain: only the zero hom, kernel G
        assert_eq!(gamma_k_bruteforce(&z(6), &z(1), 3).unwrap(), 216);
    }

    #[test]
    fn gamma_multiplicative() {
        assert_eq!(gamma_k_multiplicative(&z(6), &z(6), 2).unwrap(), 55);
        assert_eq!(
            gamma_k_multiplicative(&z(12), &z(12), 3).unwrap(),
            gamma_k_bruteforce(&z(12), &z(12), 3).unwrap()
        );
        // coprime pair: only the trivial hom, so gamma_k = n^k
        assert_eq!(gamma_k_bruteforce(&z(4), &z(9), 2).unwrap(), 16);
        assert_eq!(gamma_k_bruteforce(&z(4), &z(9), 4).unwrap(), 256);
    }

    #[test]
    fn gamma_tuple_sum_matches_codeword_sum() {
        for (g, h, k) in [(z(4), z(4), 2), (z(6), z(6), 2), (z(9), z(3), 3)] {
            let ctx = EvalMapCtx::new(
                CodewordSpace::Hom { domain: g.clone(), codomain: h.clone() },
                k,
                DEFAULT_ENUM_CAP,
            )
            .unwrap();
            assert_eq!(gamma_k_tuple_sum(&ctx).unwrap(), gamma_k_bruteforce(&g, &h, k).unwrap());
        }
    }

    #[test]
    fn kernel_shortcut_matches_scan() {
        let ctx = EvalMapCtx::new(
            CodewordSpace::Hom { domain: z(12), codomain: z(18) },
            3,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        for a in 0..12u64 {
            for b in 0..12u64 {
                let xs = vec![Elem::Residues(vec![a]), Elem::Residues(vec![b])];
                assert_eq!(
                    ctx.kernel_size_at(&xs).unwrap(),
                    ctx.kernel_size_by_scan(&xs).unwrap(),
                    "({a},{b})"
                );
            }
        }
    }

    #[test]
    fn vector_space_kernel_rank_law() {
        // F_q^n -> F_q: |ker Gamma_xs| = q^{n - rank(xs)}
        let q = 2u64;
        let n = 3usize;
        let dom = GroupDescriptor::VectorSpace { q, n };
        let cod = GroupDescriptor::VectorSpace { q, n: 1 };
        let ctx = EvalMapCtx::new(
            CodewordSpace::Hom { domain: dom.clone(), codomain: cod },
            2,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        let elems = dom.enumerate(1000).unwrap();
        for x in &elems {
            for y in &elems {
                let xs = vec![x.clone(), y.clone()];
                let (Elem::Vector(xv), Elem::Vector(yv)) = (x, y) else { panic!() };
                let mut mat = xv.clone();
                mat.extend_from_slice(yv);
                let rank = crate::group::mat_rank(&mat, 2, n, q).unwrap();
                assert_eq!(
                    ctx.kernel_size_by_scan(&xs).unwrap(),
                    (q as u128).pow((n - rank) as u32)
                );
            }
        }
    }

    #[test]
    fn eta_values() {
        // cyclic domain, k >= 2
        assert!(eta_k(&z(9), &z(3), 2, DEFAULT_ENUM_CAP).unwrap().is_one());
        // F_2^2 -> F_2, k = 2: 10 of the 16 pairs are linearly dependent
        let g = GroupDescriptor::VectorSpace { q: 2, n: 2 };
        let h = GroupDescriptor::VectorSpace { q: 2, n: 1 };
        assert_eq!(
            eta_k(&g, &h, 2, DEFAULT_ENUM_CAP).unwrap(),
            BigRational::new(10.into(), 16.into())
        );
        // trivial codomain
        assert!(eta_k(&z(6), &z(1), 2, DEFAULT_ENUM_CAP).unwrap().is_zero());
    }

    #[test]
    fn rho_reference_values() {
        assert_eq!(rho_k_dihedral(5, 2).unwrap(), 260);
        let ctx = EvalMapCtx::new(CodewordSpace::DihedralAut { p: 5 }, 2, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(rho_k_bruteforce(&ctx).unwrap(), 260);
    }

    #[test]
    fn rho_tuple_sum_matches() {
        // sum over tuples of |Stab| equals sum over codewords of |Fix|^k
        let ctx = EvalMapCtx::new(CodewordSpace::DihedralAut { p: 5 }, 2, DEFAULT_ENUM_CAP).unwrap();
        let n = ctx.dom.len();
        let mut total = 0u128;
        let mut idx = vec![0usize; 2];
        loop {
            let xs: Vec<Elem> = idx.iter().map(|&i| ctx.dom.elems[i].clone()).collect();
            total += ctx.kernel_size_by_scan(&xs).unwrap();
            if !advance(&mut idx, n) {
                break;
            }
        }
        assert_eq!(total, 260);
    }

    #[test]
    fn trho_reference_values() {
        let s3 = Enumeration::new(&GroupDescriptor::Symmetric { n: 3 }, 1000).unwrap();
        assert_eq!(trho_k_scan(&s3, 2).unwrap(), 66);
        assert_eq!(trho_k_symmetric(3, 2).unwrap(), 66);
        let h3 = Enumeration::new(&GroupDescriptor::Extraspecial { p: 3, r: 3 }, 1000).unwrap();
        assert_eq!(trho_k_scan(&h3, 2).unwrap(), 1377);
        assert_eq!(trho_k_extraspecial(3, 3, 2).unwrap(), 1377);
        let classes = conjugacy_class_sizes(&h3).unwrap();
        assert_eq!(trho_k_class_formula(&classes, 27, 3, 2).unwrap(), 1377);
    }

    #[test]
    fn binom_collapse() {
        for k in 1..=12u64 {
            for j in 0..k {
                assert_eq!(binom_collapse_check(k, j), 0, "k={k} j={j}");
            }
            assert_eq!(binom_collapse_check(k, k), 1);
        }
    }

    #[test]
    fn lifted_kernel_matches_base() {
        let space = CodewordSpace::Lifted {
            big: GroupDescriptor::Cyclic(9),
            proj: ProjectionSpec::Mod { to: 3 },
            base_codomain: z(3),
        };
        let ctx = EvalMapCtx::new(space, 2, DEFAULT_ENUM_CAP).unwrap();
        for a in 0..9u64 {
            for b in 0..9u64 {
                let xs = vec![Elem::Residues(vec![a]), Elem::Residues(vec![b])];
                assert_eq!(
                    ctx.kernel_size_at(&xs).unwrap(),
                    ctx.kernel_size_by_scan(&xs).unwrap()
                );
            }
        }
    }

    #[test]
    fn constants_report_cross_asserts() {
        let r = constants_report(
            &CodewordSpace::Hom { domain: z(4), codomain: z(4) },
            2,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        assert_eq!(r.gamma_k, Some(22));
        assert_eq!(r.eta_k_num.as_deref(), Some("1"));
        let r = constants_report(&CodewordSpace::DihedralAut { p: 5 }, 2, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(r.rho_k, Some(260));
        let r = constants_report(
            &CodewordSpace::Inner { group: GroupDescriptor::Extraspecial { p: 3, r: 3 } },
            2,
            DEFAULT_ENUM_CAP,
        )
        .unwrap();
        assert_eq!(r.trho_k, Some(1377));
    }

    #[test]
    fn image_membership_paths() {
        // linearity violated: no witness
        let space = CodewordSpace::Hom {
            domain: GroupDescriptor::VectorSpace { q: 2, n: 3 },
            codomain: GroupDescriptor::VectorSpace { q: 2, n: 1 },
        };
        let ctx = EvalMapCtx::new(space, 3, DEFAULT_ENUM_CAP).unwrap();
        let xs = vec![
            Elem::Vector(vec![1, 0, 0]),
            Elem::Vector(vec![0, 1, 0]),
            Elem::Vector(vec![1, 1, 0]),
        ];
        let ys = vec![Elem::Vector(vec![1]), Elem::Vector(vec![1]), Elem::Vector(vec![1])];
        assert!(ctx.image_membership(&xs, &ys).unwrap().is_none());
        assert_eq!(ctx.image_membership_linear(&xs, &ys).unwrap(), Some(false));
        let ys_ok = vec![Elem::Vector(vec![1]), Elem::Vector(vec![1]), Elem::Vector(vec![0])];
        assert!(ctx.image_membership(&xs, &ys_ok).unwrap().is_some());
        assert_eq!(ctx.image_membership_linear(&xs, &ys_ok).unwrap(), Some(true));
    }

    #[test]
    fn inner_membership_conjugate_pairs() {
        let s4 = GroupDescriptor::Symmetric { n: 4 };
        let ctx =
            EvalMapCtx::new(CodewordSpace::Inner { group: s4.clone() }, 2, DEFAULT_ENUM_CAP).unwrap();
        // (1 2) and (3 4), conjugated by (1 3)
        let x1 = Elem::Perm(vec![1, 0, 2, 3]);
        let x2 = Elem::Perm(vec![0, 1, 3, 2]);
        let c = Elem::Perm(vec![2, 1, 0, 3]);
        let ci = s4.inv(&c).unwrap();
        let y1 = s4.op(&s4.op(&c, &x1).unwrap(), &ci).unwrap();
        let y2 = s4.op(&s4.op(&c, &x2).unwrap(), &ci).unwrap();
        assert!(ctx
            .image_membership(&[x1.clone(), x2.clone()], &[y1, y2])
            .unwrap()
            .is_some());
        // mismatched cycle types: prefilter rejects
        let bad = Elem::Perm(vec![1, 2, 0, 3]);
        assert!(ctx.image_membership(&[x1], &[bad]).unwrap().is_none());
    }
}
