//! Codeword spaces: homomorphisms between abelian groups, dihedral and inner
//! automorphisms, and lifted homomorphisms, together with per-codeword
//! constants (kernel size, fixed points, agreement).

use crate::error::{Error, Result};
use crate::field::field;
use crate::group::{Elem, Enumeration, GroupDescriptor};
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProjectionSpec {
    /// GL(n,q) -> Z_{q-1} via discrete log of the determinant.
    Det,
    /// gl(n,q) -> Z_q via the trace (prime q only).
    Trace,
    /// Z_s -> Z_d for d | s.
    Mod { to: u64 },
    /// Per-component reduction mod p onto V(p, n): direct sums of cyclic
    /// p-power groups, or the abelianization of an extraspecial group
    /// (drop the central coordinate).
    AbelianizeModP,
}

impl ProjectionSpec {
    /// Quotient group the projection maps onto.
    pub fn base_domain(&self, big: &GroupDescriptor) -> Result<GroupDescriptor> {
        match (self, big) {
            (ProjectionSpec::Det, GroupDescriptor::GeneralLinear { q, .. }) => {
                Ok(GroupDescriptor::Cyclic(*q - 1))
            }
            (ProjectionSpec::Trace, GroupDescriptor::LieGl { q, .. }) => {
                if !crate::field::is_prime_u64(*q) {
                    return Err(Error::Unsupported(
                        "trace projection onto a cyclic group needs prime q".into(),
                    ));
                }
                Ok(GroupDescriptor::Cyclic(*q))
            }
            (ProjectionSpec::Mod { to }, GroupDescriptor::Cyclic(s)) => {
                if *to == 0 || s % to != 0 {
                    return Err(Error::InvalidDescriptor(format!(
                        "mod-{to} is not a quotient of Z/{s}"
                    )));
                }
                Ok(GroupDescriptor::Cyclic(*to))
            }
            (ProjectionSpec::AbelianizeModP, GroupDescriptor::Extraspecial { p, r }) => {
                Ok(GroupDescriptor::VectorSpace { q: *p, n: *r as usize - 1 })
            }
            (ProjectionSpec::AbelianizeModP, _) => {
                let comps = big.cyclic_components().ok_or_else(|| {
                    Error::Unsupported("component-wise mod needs a cyclic direct sum".into())
                })?;
                let p = smallest_prime_factor(comps[0]);
                if comps.iter().any(|&c| c % p != 0) {
                    return Err(Error::Unsupported(
                        "component-wise mod needs a common prime divisor".into(),
                    ));
                }
                Ok(GroupDescriptor::VectorSpace { q: p, n: comps.len() })
            }
            _ => Err(Error::Unsupported(format!(
                "projection {self:?} is not defined on {big}"
            ))),
        }
    }

    pub fn apply(&self, big: &GroupDescriptor, x: &Elem) -> Result<Elem> {
        match (self, big, x) {
            (ProjectionSpec::Det, GroupDescriptor::GeneralLinear { q, .. }, _) => {
                let d = big.det(x)?;
                let f = field(*q)?;
                let e = if *q == 2 { 0 } else { f.dlog(d) };
                Ok(Elem::Residues(vec![e % (*q - 1)]))
            }
            (ProjectionSpec::Trace, GroupDescriptor::LieGl { .. }, _) => {
                Ok(Elem::Residues(vec![big.trace(x)? as u64]))
            }
            (ProjectionSpec::Mod { to }, GroupDescriptor::Cyclic(_), Elem::Residues(r)) => {
                Ok(Elem::Residues(vec![r[0] % to]))
            }
            (
                ProjectionSpec::AbelianizeModP,
                GroupDescriptor::Extraspecial { p, r },
                Elem::EsWord(w),
            ) => Ok(Elem::Vector(
                w[..*r as usize - 1].iter().map(|&c| (c as u64 % p) as u8).collect(),
            )),
            (ProjectionSpec::AbelianizeModP, _, Elem::Residues(r)) => {
                let GroupDescriptor::VectorSpace { q: p, .. } = self.base_domain(big)? else {
                    unreachable!()
                };
                Ok(Elem::Vector(r.iter().map(|&c| (c % p) as u8).collect()))
            }
            _ => Err(Error::Unsupported(format!(
                "projection {self:?} is not defined on {big}"
            ))),
        }
    }

    pub fn kernel_size(&self, big: &GroupDescriptor) -> Result<u128> {
        let base = self.base_domain(big)?;
        Ok(big.order() / base.order())
    }
}

fn smallest_prime_factor(n: u64) -> u64 {
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HomKind {
    /// Abelian hom determined by generator images: `mults[i][j]` is the image
    /// of the i-th domain generator in the j-th codomain component.
    Abelian { mults: Vec<Vec<u64>> },
    /// F_q-linear map, row-major (codomain dim) x (domain dim) matrix.
    Linear { mat: Vec<u8> },
    /// phi(r) = r^l, phi(s) = s r^m on the dihedral group of order 2p.
    DihedralAut { l: u64, m: u64 },
    /// Conjugation by a canonical coset representative modulo the center.
    Inner { g: Elem },
    /// base composed with a built-in projection out of the big domain.
    Lifted { base: Box<Hom>, proj: ProjectionSpec },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hom {
    pub domain: GroupDescriptor,
    pub codomain: GroupDescriptor,
    pub kind: HomKind,
}

impl Hom {
    pub fn apply(&self, x: &Elem) -> Result<Elem> {
        match &self.kind {
            HomKind::Abelian { mults } => {
                let Elem::Residues(xs) = x else {
                    return Err(Error::InvalidElement(format!("{x:?} for abelian hom")));
                };
                let cod = self.codomain.cyclic_components().unwrap();
                if xs.len() != mults.len() {
                    return Err(Error::InvalidElement("component count mismatch".into()));
                }
                let mut y = vec![0u64; cod.len()];
                for (i, &xi) in xs.iter().enumerate() {
                    for (j, &m) in cod.iter().enumerate() {
                        y[j] = (y[j] + xi % m * (mults[i][j] % m)) % m;
                    }
                }
                Ok(Elem::Residues(y))
            }
            HomKind::Linear { mat } => {
                let (GroupDescriptor::VectorSpace { q, n: nd }, GroupDescriptor::VectorSpace { n: nc, .. }) =
                    (&self.domain, &self.codomain)
                else {
                    return Err(Error::Unsupported("linear hom needs vector spaces".into()));
                };
                let Elem::Vector(v) = x else {
                    return Err(Error::InvalidElement(format!("{x:?} for linear hom")));
                };
                let f = field(*q)?;
                let mut y = vec![0u8; *nc];
                for (r, yr) in y.iter_mut().enumerate() {
                    for c in 0..*nd {
                        *yr = f.add(*yr, f.mul(mat[r * nd + c], v[c]));
                    }
                }
                Ok(Elem::Vector(y))
            }
            HomKind::DihedralAut { l, m } => {
                let GroupDescriptor::Dihedral { p } = &self.domain else {
                    return Err(Error::Unsupported("dihedral aut needs a dihedral group".into()));
                };
                let Elem::DihedralElem { refl, rot } = x else {
                    return Err(Error::InvalidElement(format!("{x:?} for dihedral aut")));
                };
                let base = rot % p * (l % p) % p;
                let rot = if *refl { (base + m) % p } else { base };
                Ok(Elem::DihedralElem { refl: *refl, rot })
            }
            HomKind::Inner { g } => {
                let gi = self.domain.inv(g)?;
                self.domain.op(&self.domain.op(g, x)?, &gi)
            }
            HomKind::Lifted { base, proj } => base.apply(&proj.apply(&self.domain, x)?),
        }
    }

    /// |ker| for homs whose domain is enumerable; closed forms for the cheap
    /// cases, scan otherwise.
    pub fn kernel_size(&self, cap: u128) -> Result<u128> {
        match &self.kind {
            HomKind::Abelian { mults } => {
                if let (GroupDescriptor::Cyclic(n), Some(cod)) =
                    (&self.domain, self.codomain.cyclic_components())
                {
                    // |ker| = n / ord(phi(1))
                    let mut ord = 1u64;
                    for (j, &m) in cod.iter().enumerate() {
                        let c = mults[0][j] % m;
                        let o = if m == 1 { 1 } else { m / num_integer::gcd(m, c).max(1) };
                        ord = num_integer::lcm(ord, o.max(1));
                    }
                    return Ok((n / ord) as u128);
                }
                self.kernel_size_by_scan(cap)
            }
            HomKind::Linear { mat } => {
                let (GroupDescriptor::VectorSpace { q, n: nd }, GroupDescriptor::VectorSpace { n: nc, .. }) =
                    (&self.domain, &self.codomain)
                else {
                    return Err(Error::Unsupported("linear hom needs vector spaces".into()));
                };
                let rank = crate::group::mat_rank(mat, *nc, *nd, *q)?;
                Ok((*q as u128).pow((*nd - rank) as u32))
            }
            HomKind::DihedralAut { .. } | HomKind::Inner { .. } => Ok(1),
            HomKind::Lifted { base, proj } => {
                Ok(proj.kernel_size(&self.domain)? * base.kernel_size(cap)?)
            }
        }
    }

    fn kernel_size_by_scan(&self, cap: u128) -> Result<u128> {
        let id = self.codomain.identity();
        let mut count = 0u128;
        for x in self.domain.enumerate(cap)? {
            if self.apply(&x)? == id {
                count += 1;
            }
        }
        Ok(count)
    }

    /// |Fix(phi)| by scan over an enumerated domain.
    pub fn fix_count(&self, dom: &Enumeration) -> Result<u128> {
        let mut count = 0u128;
        for x in &dom.elems {
            if &self.apply(x)? == x {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Closed-form fixed-point count for dihedral automorphisms.
    pub fn fix_count_dihedral_closed(&self) -> Result<u128> {
        let (GroupDescriptor::Dihedral { p }, HomKind::DihedralAut { l, m }) =
            (&self.domain, &self.kind)
        else {
            return Err(Error::Unsupported("needs a dihedral automorphism".into()));
        };
        Ok(if *l == 1 && *m == 0 {
            2 * *p as u128
        } else if *l != 1 {
            // one fixed rotation (identity) and one fixed reflection
            2
        } else {
            // l = 1, m != 0: all rotations fixed, no reflection fixed
            *p as u128
        })
    }

    pub fn is_identity(&self) -> bool {
        match &self.kind {
            HomKind::DihedralAut { l, m } => *l == 1 && *m == 0,
            _ => false,
        }
    }
}

/// All homomorphisms between abelian descriptors: multiplier tuples for
/// cyclic direct sums, matrices for vector-space pairs.
pub fn enumerate_homs(g: &GroupDescriptor, h: &GroupDescriptor) -> Result<Vec<Hom>> {
    g.validate()?;
    h.validate()?;
    if let (Some(dom), Some(cod)) = (g.cyclic_components(), h.cyclic_components()) {
        // choices for the image of generator i in component j
        let mut choices: Vec<Vec<u64>> = Vec::new();
        for &ni in &dom {
            for &mj in &cod {
                let gcd = num_integer::gcd(ni, mj);
                let step = mj / gcd;
                choices.push((0..gcd).map(|t| t * step % mj.max(1)).collect());
            }
        }
        use itertools::Itertools;
        let ncod = cod.len();
        return Ok(choices
            .iter()
            .map(|v| v.iter().copied())
            .multi_cartesian_product()
            .map(|entries| {
                let mults = entries.chunks(ncod).map(|c| c.to_vec()).collect();
                Hom { domain: g.clone(), codomain: h.clone(), kind: HomKind::Abelian { mults } }
            })
            .collect());
    }
    if let (
        GroupDescriptor::VectorSpace { q: q1, n: nd },
        GroupDescriptor::VectorSpace { q: q2, n: nc },
    ) = (g, h)
    {
        if q1 != q2 {
            return Err(Error::Unsupported("linear maps need a common field".into()));
        }
        let cells = nd * nc;
        let total = (*q1 as u128).pow(cells as u32);
        if total > crate::group::DEFAULT_ENUM_CAP {
            return Err(Error::TooLarge { needed: total, cap: crate::group::DEFAULT_ENUM_CAP });
        }
        let mut out = Vec::with_capacity(total as usize);
        let mut digits = vec![0u8; cells];
        loop {
            out.push(Hom {
                domain: g.clone(),
                codomain: h.clone(),
                kind: HomKind::Linear { mat: digits.clone() },
            });
            let mut i = cells;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                digits[i] += 1;
                if (digits[i] as u64) < *q1 {
                    break;
                }
                digits[i] = 0;
            }
        }
    }
    Err(Error::Unsupported(format!(
        "hom enumeration is defined for abelian pairs only, got {g} -> {h}"
    )))
}

pub fn enumerate_aut_dihedral(p: u64) -> Result<Vec<Hom>> {
    let d = GroupDescriptor::Dihedral { p };
    d.validate()?;
    let mut out = Vec::with_capacity((p * (p - 1)) as usize);
    for l in 1..p {
        for m in 0..p {
            out.push(Hom { domain: d.clone(), codomain: d.clone(), kind: HomKind::DihedralAut { l, m } });
        }
    }
    Ok(out)
}

/// Elements of the center, in enumeration order.
pub fn center_elements(dom: &Enumeration) -> Result<Vec<Elem>> {
    let mut out = Vec::new();
    'outer: for z in &dom.elems {
        for x in &dom.elems {
            if dom.desc.op(z, x)? != dom.desc.op(x, z)? {
                continue 'outer;
            }
        }
        out.push(z.clone());
    }
    Ok(out)
}

/// One inner automorphism per coset of the center; representatives are the
/// first member of each coset in enumeration order.
pub fn enumerate_inner(dom: &Enumeration) -> Result<Vec<Hom>> {
    let center = center_elements(dom)?;
    let mut covered: HashSet<Elem> = HashSet::new();
    let mut out = Vec::new();
    for g in &dom.elems {
        if covered.contains(g) {
            continue;
        }
        for z in &center {
            covered.insert(dom.desc.op(g, z)?);
        }
        out.push(Hom {
            domain: dom.desc.clone(),
            codomain: dom.desc.clone(),
            kind: HomKind::Inner { g: g.clone() },
        });
    }
    Ok(out)
}

/// Lifts of every base codeword along the projection (inclusion = identity).
pub fn enumerate_lifthom(
    big: &GroupDescriptor,
    proj: &ProjectionSpec,
    base_homs: &[Hom],
) -> Result<Vec<Hom>> {
    let base_dom = proj.base_domain(big)?;
    base_homs
        .iter()
        .map(|b| {
            if b.domain != base_dom {
                return Err(Error::InvalidDescriptor(format!(
                    "base hom domain {} does not match projection target {base_dom}",
                    b.domain
                )));
            }
            Ok(Hom {
                domain: big.clone(),
                codomain: b.codomain.clone(),
                kind: HomKind::Lifted { base: Box::new(b.clone()), proj: proj.clone() },
            })
        })
        .collect()
}

/// Total function under test, tabulated over a fixed domain enumeration.
#[derive(Clone)]
pub struct QueryFunction {
    pub dom: Arc<Enumeration>,
    pub codomain: GroupDescriptor,
    pub table: Vec<Elem>,
}

impl QueryFunction {
    pub fn from_hom(dom: Arc<Enumeration>, h: &Hom) -> Result<QueryFunction> {
        let table = dom.elems.iter().map(|x| h.apply(x)).collect::<Result<Vec<_>>>()?;
        Ok(QueryFunction { dom, codomain: h.codomain.clone(), table })
    }

    #[inline]
    pub fn at(&self, x: &Elem) -> &Elem {
        &self.table[self.dom.index_of(x)]
    }
}

/// Fraction of domain points where f and the codeword agree.
pub fn agreement(f: &QueryFunction, h: &Hom) -> Result<BigRational> {
    let mut hits = 0u64;
    for (x, fx) in f.dom.elems.iter().zip(&f.table) {
        if &h.apply(x)? == fx {
            hits += 1;
        }
    }
    Ok(ratio(hits, f.dom.len() as u64))
}

/// (q * agr - 1) / (q - 1): advantage over the trivial 1/q baseline.
pub fn shifted_agreement(f: &QueryFunction, h: &Hom, q: u64) -> Result<BigRational> {
    let a = agreement(f, h)?;
    let q = BigRational::from_integer(q.into());
    Ok((q.clone() * a - BigRational::one()) / (q - BigRational::one()))
}

/// Agreement restricted to the nonzero domain points.
pub fn agreement_nonzero(f: &QueryFunction, h: &Hom) -> Result<BigRational> {
    let id = f.dom.desc.identity();
    let mut hits = 0u64;
    let mut total = 0u64;
    for (x, fx) in f.dom.elems.iter().zip(&f.table) {
        if x == &id {
            continue;
        }
        total += 1;
        if &h.apply(x)? == fx {
            hits += 1;
        }
    }
    if total == 0 {
        return Ok(BigRational::zero());
    }
    Ok(ratio(hits, total))
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

// ---- compact text form ----------------------------------------------------

impl fmt::Display for Hom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            HomKind::Abelian { mults } => {
                if mults.len() == 1 && mults[0].len() == 1 {
                    write!(f, "mul:{}", mults[0][0])
                } else {
                    let rows: Vec<String> = mults
                        .iter()
                        .map(|r| {
                            let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
                            format!("[{}]", cells.join(","))
                        })
                        .collect();
                    write!(f, "mul:[{}]", rows.join(","))
                }
            }
            HomKind::Linear { mat } => {
                let GroupDescriptor::VectorSpace { n: nd, .. } = &self.domain else {
                    return write!(f, "mat:?");
                };
                let rows: Vec<String> = mat
                    .chunks(*nd)
                    .map(|r| {
                        let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
                        format!("[{}]", cells.join(","))
                    })
                    .collect();
                write!(f, "mat:[{}]", rows.join(","))
            }
            HomKind::DihedralAut { l, m } => write!(f, "dih:({l},{m})"),
            HomKind::Inner { g } => write!(f, "inn:{}", elem_text(g)),
            HomKind::Lifted { base, proj } => {
                let tag = match proj {
                    ProjectionSpec::Det => "det".to_string(),
                    ProjectionSpec::Trace => "tr".to_string(),
                    ProjectionSpec::Mod { to } => format!("mod{to}"),
                    ProjectionSpec::AbelianizeModP => "abmod".to_string(),
                };
                write!(f, "lift({tag})∘{base}")
            }
        }
    }
}

/// Compact stable text form of an element, for reports.
pub fn elem_text(e: &Elem) -> String {
    match e {
        Elem::Residues(r) => {
            let parts: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            parts.join(",")
        }
        Elem::Vector(v) => {
            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("v[{}]", parts.join(","))
        }
        Elem::DihedralElem { refl, rot } => {
            if *refl {
                format!("s.r{rot}")
            } else {
                format!("r{rot}")
            }
        }
        Elem::Perm(w) => {
            let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
            format!("p[{}]", parts.join(","))
        }
        Elem::EsWord(w) => {
            let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
            format!("w[{}]", parts.join(","))
        }
        Elem::Matrix(m) => {
            let parts: Vec<String> = m.iter().map(|x| x.to_string()).collect();
            format!("m[{}]", parts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_ENUM_CAP;
    use num_traits::ToPrimitive;

    fn enumr(d: &GroupDescriptor) -> Arc<Enumeration> {
        Arc::new(Enumeration::new(d, DEFAULT_ENUM_CAP).unwrap())
    }

    #[test]
    fn hom_counts_cyclic() {
        let z4 = GroupDescriptor::Cyclic(4);
        assert_eq!(enumerate_homs(&z4, &z4).unwrap().len(), 4);
        // |Hom(Z_{p^3}, Z_{p^2})| = p^2 for p = 3
        let z27 = GroupDescriptor::Cyclic(27);
        let z9 = GroupDescriptor::Cyclic(9);
        assert_eq!(enumerate_homs(&z27, &z9).unwrap().len(), 9);
        let z6 = GroupDescriptor::Cyclic(6);
        assert_eq!(enumerate_homs(&z6, &z6).unwrap().len(), 6);
    }

    #[test]
    fn homs_are_homomorphisms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pairs = [
            (GroupDescriptor::Cyclic(12), GroupDescriptor::Cyclic(18)),
            (
                GroupDescriptor::DirectSum(vec![GroupDescriptor::Cyclic(4), GroupDescriptor::Cyclic(2)]),
                GroupDescriptor::Cyclic(8),
            ),
            (GroupDescriptor::VectorSpace { q: 3, n: 2 }, GroupDescriptor::VectorSpace { q: 3, n: 1 }),
        ];
        for (g, h) in pairs {
            let homs = enumerate_homs(&g, &h).unwrap();
            let elems = g.enumerate(DEFAULT_ENUM_CAP).unwrap();
            for hm in &homs {
                for _ in 0..50 {
                    let x = &elems[rng.gen_range(0..elems.len())];
                    let y = &elems[rng.gen_range(0..elems.len())];
                    let lhs = hm.apply(&g.op(x, y).unwrap()).unwrap();
                    let rhs = h.op(&hm.apply(x).unwrap(), &hm.apply(y).unwrap()).unwrap();
                    assert_eq!(lhs, rhs, "{g} -> {h}: {hm}");
                }
            }
        }
    }

    #[test]
    fn dihedral_auts_bijective() {
        let auts = enumerate_aut_dihedral(5).unwrap();
        assert_eq!(auts.len(), 20);
        let dom = enumr(&GroupDescriptor::Dihedral { p: 5 });
        for a in &auts {
            let image: HashSet<Elem> =
                dom.elems.iter().map(|x| a.apply(x).unwrap()).collect();
            assert_eq!(image.len(), 10, "{a}");
            // multiplicative on all pairs
            for x in &dom.elems {
                for y in &dom.elems {
                    let lhs = a.apply(&dom.desc.op(x, y).unwrap()).unwrap();
                    let rhs = dom
                        .desc
                        .op(&a.apply(x).unwrap(), &a.apply(y).unwrap())
                        .unwrap();
                    assert_eq!(lhs, rhs, "{a}");
                }
            }
        }
        // phi_{1,0} is the identity map
        let id = &auts.iter().find(|a| a.is_identity()).unwrap();
        for x in &dom.elems {
            assert_eq!(&id.apply(x).unwrap(), x);
        }
    }

    #[test]
    fn dihedral_aut_action_on_generators() {
        let d = GroupDescriptor::Dihedral { p: 5 };
        let a = Hom { domain: d.clone(), codomain: d, kind: HomKind::DihedralAut { l: 2, m: 1 } };
        let r = Elem::DihedralElem { refl: false, rot: 1 };
        let s = Elem::DihedralElem { refl: true, rot: 0 };
        assert_eq!(a.apply(&r).unwrap(), Elem::DihedralElem { refl: false, rot: 2 });
        assert_eq!(a.apply(&s).unwrap(), Elem::DihedralElem { refl: true, rot: 1 });
    }

    #[test]
    fn dihedral_fix_counts_match_scan() {
        let dom = enumr(&GroupDescriptor::Dihedral { p: 5 });
        for a in enumerate_aut_dihedral(5).unwrap() {
            assert_eq!(a.fix_count(&dom).unwrap(), a.fix_count_dihedral_closed().unwrap(), "{a}");
        }
    }

    #[test]
    fn inner_counts() {
        let s3 = enumr(&GroupDescriptor::Symmetric { n: 3 });
        assert_eq!(enumerate_inner(&s3).unwrap().len(), 6);
        let h3 = enumr(&GroupDescriptor::Extraspecial { p: 3, r: 3 });
        assert_eq!(enumerate_inner(&h3).unwrap().len(), 9);
        let z5 = enumr(&GroupDescriptor::Cyclic(5));
        assert_eq!(enumerate_inner(&z5).unwrap().len(), 1);
    }

    #[test]
    fn inner_preserves_cycle_type() {
        let s4 = enumr(&GroupDescriptor::Symmetric { n: 4 });
        for h in enumerate_inner(&s4).unwrap() {
            for x in &s4.elems {
                let (Elem::Perm(a), Elem::Perm(b)) = (x, &h.apply(x).unwrap()) else { panic!() };
                assert_eq!(crate::group::cycle_type(a), crate::group::cycle_type(b));
            }
        }
    }

    #[test]
    fn sn_centralizer_formula_vs_scan() {
        // |C_{S_n}(g)| = prod_i i^{a_i} a_i! over the cycle type of g
        let s5 = enumr(&GroupDescriptor::Symmetric { n: 5 });
        for g in &s5.elems {
            let Elem::Perm(w) = g else { panic!() };
            let ct = crate::group::cycle_type(w);
            let mut formula = 1u128;
            for (i, &a) in ct.iter().enumerate() {
                formula *= (i as u128 + 1).pow(a as u32);
                formula *= (1..=a as u128).product::<u128>().max(1);
            }
            let scan = s5
                .elems
                .iter()
                .filter(|x| s5.desc.op(g, x).unwrap() == s5.desc.op(x, g).unwrap())
                .count() as u128;
            assert_eq!(formula, scan);
        }
    }

    #[test]
    fn lifted_cyclic_matches_full_hom_space() {
        // Z_9 --mod 3--> Z_3 lifts of Hom(Z_3,Z_3) give all of Hom(Z_9,Z_3)
        let z9 = GroupDescriptor::Cyclic(9);
        let z3 = GroupDescriptor::Cyclic(3);
        let base = enumerate_homs(&z3, &z3).unwrap();
        let lifted = enumerate_lifthom(&z9, &ProjectionSpec::Mod { to: 3 }, &base).unwrap();
        let full = enumerate_homs(&z9, &z3).unwrap();
        assert_eq!(lifted.len(), full.len());
        let elems = z9.enumerate(100).unwrap();
        for l in &lifted {
            assert!(
                full.iter().any(|h| elems
                    .iter()
                    .all(|x| h.apply(x).unwrap() == l.apply(x).unwrap())),
                "{l}"
            );
        }
    }

    #[test]
    fn lifted_character_counts() {
        let gl = GroupDescriptor::GeneralLinear { n: 2, q: 3 };
        let z2 = GroupDescriptor::Cyclic(2);
        let base = enumerate_homs(&z2, &z2).unwrap();
        let chars = enumerate_lifthom(&gl, &ProjectionSpec::Det, &base).unwrap();
        assert_eq!(chars.len(), 2);
        // kernels 48 (trivial) and 24 (det character)
        let mut kers: Vec<u128> =
            chars.iter().map(|c| c.kernel_size(10_000).unwrap()).collect();
        kers.sort();
        assert_eq!(kers, vec![24, 48]);

        let gl3 = GroupDescriptor::LieGl { n: 2, q: 3 };
        let z3 = GroupDescriptor::Cyclic(3);
        let base = enumerate_homs(&z3, &z3).unwrap();
        let chars = enumerate_lifthom(&gl3, &ProjectionSpec::Trace, &base).unwrap();
        assert_eq!(chars.len(), 3);
        let mut kers: Vec<u128> =
            chars.iter().map(|c| c.kernel_size(10_000).unwrap()).collect();
        kers.sort();
        assert_eq!(kers, vec![27, 27, 81]);
    }

    #[test]
    fn kernel_sizes_cyclic() {
        let z4 = GroupDescriptor::Cyclic(4);
        let h = Hom {
            domain: z4.clone(),
            codomain: z4,
            kind: HomKind::Abelian { mults: vec![vec![2]] },
        };
        assert_eq!(h.kernel_size(100).unwrap(), 2);
        assert_eq!(h.kernel_size_by_scan(100).unwrap(), 2);
    }

    #[test]
    fn agreement_basics() {
        let z4 = GroupDescriptor::Cyclic(4);
        let dom = enumr(&z4);
        let homs = enumerate_homs(&z4, &z4).unwrap();
        let f = QueryFunction::from_hom(dom, &homs[2]).unwrap();
        assert!(agreement(&f, &homs[2]).unwrap().is_one());
        for h in &homs {
            let a = agreement(&f, h).unwrap();
            assert!(a >= BigRational::zero() && a <= BigRational::one());
            // denominator divides |G|
            assert_eq!(4 % a.denom().to_u64().unwrap(), 0);
        }
    }

    #[test]
    fn agreement_nonzero_scaling_map() {
        // f(x) = x * v on F_5 -> F_5^2 agrees with its hom on every nonzero x
        let dom = enumr(&GroupDescriptor::VectorSpace { q: 5, n: 1 });
        let cod = GroupDescriptor::VectorSpace { q: 5, n: 2 };
        let h = Hom {
            domain: dom.desc.clone(),
            codomain: cod,
            kind: HomKind::Linear { mat: vec![2, 3] },
        };
        let f = QueryFunction::from_hom(dom, &h).unwrap();
        assert!(agreement_nonzero(&f, &h).unwrap().is_one());
    }

    #[test]
    fn hom_text_forms() {
        let z4 = GroupDescriptor::Cyclic(4);
        let h = Hom {
            domain: z4.clone(),
            codomain: z4,
            kind: HomKind::Abelian { mults: vec![vec![2]] },
        };
        assert_eq!(h.to_string(), "mul:2");
        let d = GroupDescriptor::Dihedral { p: 5 };
        let a = Hom { domain: d.clone(), codomain: d, kind: HomKind::DihedralAut { l: 2, m: 1 } };
        assert_eq!(a.to_string(), "dih:(2,1)");
    }
}
