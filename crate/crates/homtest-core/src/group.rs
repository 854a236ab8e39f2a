//! Group descriptors, canonical element encodings, and exact arithmetic for
//! every supported family.

use crate::error::{Error, Result};
use crate::field::{field, is_prime_u64};
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

/// Default cap on full element enumeration.
pub const DEFAULT_ENUM_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupDescriptor {
    /// Z_n under addition.
    Cyclic(u64),
    /// Direct sum of cyclic groups.
    DirectSum(Vec<GroupDescriptor>),
    /// F_q^n under addition.
    VectorSpace { q: u64, n: usize },
    /// Dihedral group of order 2p, p prime > 3.
    Dihedral { p: u64 },
    /// Symmetric group on n points.
    Symmetric { n: usize },
    /// Extraspecial p-group of exponent p and order p^r (r odd).
    /// ES(p,3) is the Heisenberg group of 3x3 unitriangular matrices.
    Extraspecial { p: u64, r: u32 },
    /// Invertible n x n matrices over F_q.
    GeneralLinear { n: usize, q: u64 },
    /// The Lie algebra gl_n(q) of all n x n matrices over F_q; the group
    /// structure used for agreement/enumeration is the additive one, and
    /// the bracket is [x,y] = xy - yx.
    LieGl { n: usize, q: u64 },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Elem {
    /// One residue per cyclic component, each reduced mod its modulus.
    Residues(Vec<u64>),
    /// Coordinates over F_q (field element indices).
    Vector(Vec<u8>),
    /// Normal form s^refl r^rot.
    DihedralElem { refl: bool, rot: u64 },
    /// One-line permutation word.
    Perm(Vec<u8>),
    /// Extraspecial normal-form word (a_1..a_m, b_1..b_m, c) over Z_p.
    EsWord(Vec<u8>),
    /// Row-major n x n matrix over F_q.
    Matrix(Vec<u8>),
}

impl GroupDescriptor {
    /// Validates the family-specific invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            GroupDescriptor::Cyclic(n) => {
                if *n == 0 {
                    return Err(Error::InvalidDescriptor("Z/0 is not a finite group".into()));
                }
            }
            GroupDescriptor::DirectSum(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidDescriptor("empty direct sum".into()));
                }
                for p in parts {
                    match p {
                        GroupDescriptor::Cyclic(_) => p.validate()?,
                        _ => {
                            return Err(Error::Unsupported(
                                "direct sums are supported for cyclic components only".into(),
                            ))
                        }
                    }
                }
            }
            GroupDescriptor::VectorSpace { q, n } => {
                field(*q)?;
                if *n == 0 {
                    return Err(Error::InvalidDescriptor("V(q,0) not supported".into()));
                }
            }
            GroupDescriptor::Dihedral { p } => {
                if !is_prime_u64(*p) || *p <= 3 {
                    return Err(Error::InvalidDescriptor(format!(
                        "dihedral parameter must be a prime > 3, got {p}"
                    )));
                }
            }
            GroupDescriptor::Symmetric { n } => {
                if *n == 0 || *n > 12 {
                    return Err(Error::InvalidDescriptor(format!(
                        "symmetric group degree must be 1..=12, got {n}"
                    )));
                }
            }
            GroupDescriptor::Extraspecial { p, r } => {
                if !is_prime_u64(*p) || *p == 2 {
                    return Err(Error::InvalidDescriptor(format!(
                        "extraspecial groups need an odd prime, got {p}"
                    )));
                }
                if *r < 3 || *r % 2 == 0 {
                    return Err(Error::InvalidDescriptor(format!(
                        "extraspecial order exponent must be odd and >= 3, got {r}"
                    )));
                }
            }
            GroupDescriptor::GeneralLinear { n, q } | GroupDescriptor::LieGl { n, q } => {
                field(*q)?;
                if *n == 0 {
                    return Err(Error::InvalidDescriptor("0x0 matrices not supported".into()));
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> u128 {
        match self {
            GroupDescriptor::Cyclic(n) => *n as u128,
            GroupDescriptor::DirectSum(parts) => parts.iter().map(|p| p.order()).product(),
            GroupDescriptor::VectorSpace { q, n } => (*q as u128).pow(*n as u32),
            GroupDescriptor::Dihedral { p } => 2 * *p as u128,
            GroupDescriptor::Symmetric { n } => (1..=*n as u128).product(),
            GroupDescriptor::Extraspecial { p, r } => (*p as u128).pow(*r),
            GroupDescriptor::GeneralLinear { n, q } => {
                let qn = (*q as u128).pow(*n as u32);
                (0..*n as u32).map(|j| qn - (*q as u128).pow(j)).product()
            }
            GroupDescriptor::LieGl { n, q } => (*q as u128).pow((*n * *n) as u32),
        }
    }

    pub fn center_order(&self) -> u128 {
        match self {
            GroupDescriptor::Cyclic(_)
            | GroupDescriptor::DirectSum(_)
            | GroupDescriptor::VectorSpace { .. }
            | GroupDescriptor::LieGl { .. } => self.order(),
            GroupDescriptor::Dihedral { .. } => 1,
            GroupDescriptor::Symmetric { n } => {
                if *n <= 2 {
                    self.order()
                } else {
                    1
                }
            }
            GroupDescriptor::Extraspecial { p, .. } => *p as u128,
            GroupDescriptor::GeneralLinear { q, .. } => *q as u128 - 1,
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(
            self,
            GroupDescriptor::Cyclic(_)
                | GroupDescriptor::DirectSum(_)
                | GroupDescriptor::VectorSpace { .. }
                | GroupDescriptor::LieGl { .. }
        )
    }

    /// Moduli of the cyclic components, for Cyclic and DirectSum descriptors.
    pub fn cyclic_components(&self) -> Option<Vec<u64>> {
        match self {
            GroupDescriptor::Cyclic(n) => Some(vec![*n]),
            GroupDescriptor::DirectSum(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.cyclic_components()?);
                }
                Some(out)
            }
            _ => None,
        }
    }

    pub fn identity(&self) -> Elem {
        match self {
            GroupDescriptor::Cyclic(_) => Elem::Residues(vec![0]),
            GroupDescriptor::DirectSum(_) => {
                Elem::Residues(vec![0; self.cyclic_components().unwrap().len()])
            }
            GroupDescriptor::VectorSpace { n, .. } => Elem::Vector(vec![0; *n]),
            GroupDescriptor::Dihedral { .. } => Elem::DihedralElem { refl: false, rot: 0 },
            GroupDescriptor::Symmetric { n } => Elem::Perm((0..*n as u8).collect()),
            GroupDescriptor::Extraspecial { r, .. } => Elem::EsWord(vec![0; *r as usize]),
            GroupDescriptor::GeneralLinear { n, .. } => {
                let mut m = vec![0u8; n * n];
                for i in 0..*n {
                    m[i * n + i] = 1;
                }
                Elem::Matrix(m)
            }
            GroupDescriptor::LieGl { n, .. } => Elem::Matrix(vec![0; n * n]),
        }
    }

    fn check_elem(&self, e: &Elem) -> Result<()> {
        let ok = match (self, e) {
            (GroupDescriptor::Cyclic(n), Elem::Residues(r)) => r.len() == 1 && r[0] < *n,
            (GroupDescriptor::DirectSum(_), Elem::Residues(r)) => {
                let comps = self.cyclic_components().unwrap();
                r.len() == comps.len() && r.iter().zip(&comps).all(|(x, m)| x < m)
            }
            (GroupDescriptor::VectorSpace { q, n }, Elem::Vector(v)) => {
                v.len() == *n && v.iter().all(|&c| (c as u64) < *q)
            }
            (GroupDescriptor::Dihedral { p }, Elem::DihedralElem { rot, .. }) => rot < p,
            (GroupDescriptor::Symmetric { n }, Elem::Perm(w)) => {
                w.len() == *n && {
                    let mut seen = vec![false; *n];
                    w.iter().all(|&i| {
                        let i = i as usize;
                        i < *n && !std::mem::replace(&mut seen[i], true)
                    })
                }
            }
            (GroupDescriptor::Extraspecial { p, r }, Elem::EsWord(w)) => {
                w.len() == *r as usize && w.iter().all(|&c| (c as u64) < *p)
            }
            (GroupDescriptor::GeneralLinear { n, q }, Elem::Matrix(m))
            | (GroupDescriptor::LieGl { n, q }, Elem::Matrix(m)) => {
                m.len() == n * n && m.iter().all(|&c| (c as u64) < *q)
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidElement(format!("{e:?} does not belong to {self}")))
        }
    }

    pub fn op(&self, a: &Elem, b: &Elem) -> Result<Elem> {
        self.check_elem(a)?;
        self.check_elem(b)?;
        Ok(match (self, a, b) {
            (GroupDescriptor::Cyclic(_) | GroupDescriptor::DirectSum(_), Elem::Residues(x), Elem::Residues(y)) => {
                let comps = self.cyclic_components().unwrap();
                Elem::Residues(
                    x.iter().zip(y).zip(&comps).map(|((u, v), m)| (u + v) % m).collect(),
                )
            }
            (GroupDescriptor::VectorSpace { q, .. }, Elem::Vector(x), Elem::Vector(y)) => {
                let f = field(*q)?;
                Elem::Vector(x.iter().zip(y).map(|(&u, &v)| f.add(u, v)).collect())
            }
            (
                GroupDescriptor::Dihedral { p },
                Elem::DihedralElem { refl: e1, rot: a1 },
                Elem::DihedralElem { refl: e2, rot: a2 },
            ) => {
                // s^e1 r^a1 * s^e2 r^a2 = s^(e1 xor e2) r^(a2 - a1) if e2, else r^(a1 + a2)
                let rot = if *e2 { (p + a2 - a1 % p) % p } else { (a1 + a2) % p };
                Elem::DihedralElem { refl: e1 ^ e2, rot }
            }
            (GroupDescriptor::Symmetric { .. }, Elem::Perm(x), Elem::Perm(y)) => {
                // (x*y)(i) = x(y(i)): apply y first
                Elem::Perm(y.iter().map(|&i| x[i as usize]).collect())
            }
            (GroupDescriptor::Extraspecial { p, r }, Elem::EsWord(x), Elem::EsWord(y)) => {
                let m = (*r as usize - 1) / 2;
                let p = *p;
                let mut w = vec![0u8; *r as usize];
                for i in 0..2 * m {
                    w[i] = ((x[i] as u64 + y[i] as u64) % p) as u8;
                }
                // cocycle term a_x . b_y
                let mut dot = 0u64;
                for i in 0..m {
                    dot = (dot + x[i] as u64 * y[m + i] as u64) % p;
                }
                w[2 * m] = ((x[2 * m] as u64 + y[2 * m] as u64 + dot) % p) as u8;
                Elem::EsWord(w)
            }
            (GroupDescriptor::GeneralLinear { n, q }, Elem::Matrix(x), Elem::Matrix(y)) => {
                Elem::Matrix(mat_mul(x, y, *n, *q)?)
            }
            (GroupDescriptor::LieGl { q, .. }, Elem::Matrix(x), Elem::Matrix(y)) => {
                let f = field(*q)?;
                Elem::Matrix(x.iter().zip(y).map(|(&u, &v)| f.add(u, v)).collect())
            }
            _ => unreachable!("check_elem guards the shapes"),
        })
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem> {
        self.check_elem(a)?;
        Ok(match (self, a) {
            (GroupDescriptor::Cyclic(_) | GroupDescriptor::DirectSum(_), Elem::Residues(x)) => {
                let comps = self.cyclic_components().unwrap();
                Elem::Residues(x.iter().zip(&comps).map(|(u, m)| (m - u) % m).collect())
            }
            (GroupDescriptor::VectorSpace { q, .. }, Elem::Vector(x)) => {
                let f = field(*q)?;
                Elem::Vector(x.iter().map(|&u| f.neg(u)).collect())
            }
            (GroupDescriptor::Dihedral { p }, Elem::DihedralElem { refl, rot }) => {
                if *refl {
                    Elem::DihedralElem { refl: true, rot: *rot }
                } else {
                    Elem::DihedralElem { refl: false, rot: (p - rot) % p }
                }
            }
            (GroupDescriptor::Symmetric { n }, Elem::Perm(w)) => {
                let mut r = vec![0u8; *n];
                for (i, &wi) in w.iter().enumerate() {
                    r[wi as usize] = i as u8;
                }
                Elem::Perm(r)
            }
            (GroupDescriptor::Extraspecial { p, r }, Elem::EsWord(x)) => {
                let m = (*r as usize - 1) / 2;
                let p = *p;
                let mut w = vec![0u8; *r as usize];
                for i in 0..2 * m {
                    w[i] = ((p - x[i] as u64) % p) as u8;
                }
                // (a,b,c)^-1 = (-a,-b,-c + a.b)
                let mut dot = 0u64;
                for i in 0..m {
                    dot = (dot + x[i] as u64 * x[m + i] as u64) % p;
                }
                w[2 * m] = (((p - x[2 * m] as u64) % p + dot) % p) as u8;
                Elem::EsWord(w)
            }
            (GroupDescriptor::GeneralLinear { n, q }, Elem::Matrix(x)) => Elem::Matrix(
                mat_inv(x, *n, *q)?
                    .ok_or_else(|| Error::InvalidElement("singular matrix in GL".into()))?,
            ),
            (GroupDescriptor::LieGl { q, .. }, Elem::Matrix(x)) => {
                let f = field(*q)?;
                Elem::Matrix(x.iter().map(|&u| f.neg(u)).collect())
            }
            _ => unreachable!(),
        })
    }

    /// Deterministic full enumeration, failing if the order exceeds `cap`.
    pub fn enumerate(&self, cap: u128) -> Result<Vec<Elem>> {
        self.validate()?;
        let order = self.order();
        if order > cap {
            return Err(Error::TooLarge { needed: order, cap });
        }
        Ok(match self {
            GroupDescriptor::Cyclic(_) | GroupDescriptor::DirectSum(_) => {
                let comps = self.cyclic_components().unwrap();
                mixed_radix(&comps).into_iter().map(Elem::Residues).collect()
            }
            GroupDescriptor::VectorSpace { q, n } => {
                let moduli = vec![*q; *n];
                mixed_radix(&moduli)
                    .into_iter()
                    .map(|d| Elem::Vector(d.into_iter().map(|x| x as u8).collect()))
                    .collect()
            }
            GroupDescriptor::Dihedral { p } => {
                let mut out = Vec::with_capacity(2 * *p as usize);
                for refl in [false, true] {
                    for rot in 0..*p {
                        out.push(Elem::DihedralElem { refl, rot });
                    }
                }
                out
            }
            GroupDescriptor::Symmetric { n } => {
                let mut out = Vec::new();
                let mut word: Vec<u8> = (0..*n as u8).collect();
                loop {
                    out.push(Elem::Perm(word.clone()));
                    if !next_permutation(&mut word) {
                        break;
                    }
                }
                out
            }
            GroupDescriptor::Extraspecial { p, r } => {
                let moduli = vec![*p; *r as usize];
                mixed_radix(&moduli)
                    .into_iter()
                    .map(|d| Elem::EsWord(d.into_iter().map(|x| x as u8).collect()))
                    .collect()
            }
            GroupDescriptor::GeneralLinear { n, q } => {
                let moduli = vec![*q; n * n];
                mixed_radix(&moduli)
                    .into_iter()
                    .map(|d| d.into_iter().map(|x| x as u8).collect::<Vec<u8>>())
                    .filter(|m| mat_rank(m, *n, *n, *q).unwrap() == *n)
                    .map(Elem::Matrix)
                    .collect()
            }
            GroupDescriptor::LieGl { n, q } => {
                let moduli = vec![*q; n * n];
                mixed_radix(&moduli)
                    .into_iter()
                    .map(|d| Elem::Matrix(d.into_iter().map(|x| x as u8).collect()))
                    .collect()
            }
        })
    }

    /// Order of the subgroup generated by `xs`, by gcd for cyclic groups and
    /// breadth-first closure otherwise.
    pub fn generated_subgroup_size(&self, xs: &[Elem], cap: u128) -> Result<u128> {
        if xs.is_empty() {
            return Err(Error::InvalidElement("empty generator tuple".into()));
        }
        if let GroupDescriptor::Cyclic(n) = self {
            let mut g = *n;
            for x in xs {
                self.check_elem(x)?;
                if let Elem::Residues(r) = x {
                    g = num_integer::gcd(g, r[0]);
                }
            }
            return Ok((*n / g.max(1)).max(1) as u128);
        }
        // BFS closure over products with the generators
        let mut seen: HashSet<Elem> = HashSet::new();
        let mut queue: VecDeque<Elem> = VecDeque::new();
        let id = self.identity();
        seen.insert(id.clone());
        queue.push_back(id);
        while let Some(cur) = queue.pop_front() {
            for x in xs {
                for cand in [self.op(&cur, x)?, self.op(&cur, &self.inv(x)?)?] {
                    if seen.insert(cand.clone()) {
                        if seen.len() as u128 > cap {
                            return Err(Error::TooLarge { needed: seen.len() as u128, cap });
                        }
                        queue.push_back(cand);
                    }
                }
            }
        }
        Ok(seen.len() as u128)
    }

    /// Lie bracket xy - yx for LieGl descriptors.
    pub fn lie_bracket(&self, x: &Elem, y: &Elem) -> Result<Elem> {
        let GroupDescriptor::LieGl { n, q } = self else {
            return Err(Error::Unsupported("lie_bracket needs a gl(n,q) descriptor".into()));
        };
        self.check_elem(x)?;
        self.check_elem(y)?;
        let (Elem::Matrix(a), Elem::Matrix(b)) = (x, y) else { unreachable!() };
        let f = field(*q)?;
        let xy = mat_mul(a, b, *n, *q)?;
        let yx = mat_mul(b, a, *n, *q)?;
        Ok(Elem::Matrix(xy.iter().zip(&yx).map(|(&u, &v)| f.sub(u, v)).collect()))
    }

    /// Trace of a matrix element, as a field element index.
    pub fn trace(&self, x: &Elem) -> Result<u8> {
        let (n, q) = match self {
            GroupDescriptor::LieGl { n, q } | GroupDescriptor::GeneralLinear { n, q } => (*n, *q),
            _ => return Err(Error::Unsupported("trace needs a matrix descriptor".into())),
        };
        self.check_elem(x)?;
        let Elem::Matrix(m) = x else { unreachable!() };
        let f = field(q)?;
        let mut t = 0u8;
        for i in 0..n {
            t = f.add(t, m[i * n + i]);
        }
        Ok(t)
    }

    /// Determinant over F_q.
    pub fn det(&self, x: &Elem) -> Result<u8> {
        let (n, q) = match self {
            GroupDescriptor::LieGl { n, q } | GroupDescriptor::GeneralLinear { n, q } => (*n, *q),
            _ => return Err(Error::Unsupported("det needs a matrix descriptor".into())),
        };
        self.check_elem(x)?;
        let Elem::Matrix(m) = x else { unreachable!() };
        mat_det(m, n, q)
    }
}

/// All digit vectors for the given moduli, first digit most significant.
fn mixed_radix(moduli: &[u64]) -> Vec<Vec<u64>> {
    let total: u128 = moduli.iter().map(|&m| m as u128).product();
    let mut out = Vec::with_capacity(total as usize);
    let mut digits = vec![0u64; moduli.len()];
    loop {
        out.push(digits.clone());
        let mut i = moduli.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < moduli[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

fn next_permutation(w: &mut [u8]) -> bool {
    let n = w.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && w[i - 1] >= w[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while w[j] <= w[i - 1] {
        j -= 1;
    }
    w.swap(i - 1, j);
    w[i..].reverse();
    true
}

pub fn mat_mul(a: &[u8], b: &[u8], n: usize, q: u64) -> Result<Vec<u8>> {
    let f = field(q)?;
    let mut out = vec![0u8; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = f.add(out[i * n + j], f.mul(aik, b[k * n + j]));
            }
        }
    }
    Ok(out)
}

/// Rank of a rows x cols matrix over F_q by Gaussian elimination.
pub fn mat_rank(m: &[u8], rows: usize, cols: usize, q: u64) -> Result<usize> {
    let f = field(q)?;
    let mut a = m.to_vec();
    let mut rank = 0;
    for col in 0..cols {
        if rank >= rows {
            break;
        }
        let pivot = (rank..rows).find(|&r| a[r * cols + col] != 0);
        let Some(p) = pivot else { continue };
        for j in 0..cols {
            a.swap(rank * cols + j, p * cols + j);
        }
        let inv = f.inv(a[rank * cols + col]);
        for j in 0..cols {
            a[rank * cols + j] = f.mul(a[rank * cols + j], inv);
        }
        for r in 0..rows {
            if r != rank && a[r * cols + col] != 0 {
                let c = a[r * cols + col];
                for j in 0..cols {
                    let sub = f.mul(c, a[rank * cols + j]);
                    a[r * cols + j] = f.sub(a[r * cols + j], sub);
                }
            }
        }
        rank += 1;
    }
    Ok(rank)
}

pub fn mat_det(m: &[u8], n: usize, q: u64) -> Result<u8> {
    let f = field(q)?;
    let mut a = m.to_vec();
    let mut det = 1u8;
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r * n + col] != 0);
        let Some(p) = pivot else { return Ok(0) };
        if p != col {
            for j in 0..n {
                a.swap(col * n + j, p * n + j);
            }
            det = f.neg(det);
        }
        det = f.mul(det, a[col * n + col]);
        let inv = f.inv(a[col * n + col]);
        for r in col + 1..n {
            if a[r * n + col] != 0 {
                let c = f.mul(a[r * n + col], inv);
                for j in col..n {
                    let sub = f.mul(c, a[col * n + j]);
                    a[r * n + j] = f.sub(a[r * n + j], sub);
                }
            }
        }
    }
    Ok(det)
}

pub fn mat_inv(m: &[u8], n: usize, q: u64) -> Result<Option<Vec<u8>>> {
    let f = field(q)?;
    let mut a = m.to_vec();
    let mut inv = vec![0u8; n * n];
    for i in 0..n {
        inv[i * n + i] = 1;
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r * n + col] != 0);
        let Some(p) = pivot else { return Ok(None) };
        if p != col {
            for j in 0..n {
                a.swap(col * n + j, p * n + j);
                inv.swap(col * n + j, p * n + j);
            }
        }
        let pinv = f.inv(a[col * n + col]);
        for j in 0..n {
            a[col * n + j] = f.mul(a[col * n + j], pinv);
            inv[col * n + j] = f.mul(inv[col * n + j], pinv);
        }
        for r in 0..n {
            if r != col && a[r * n + col] != 0 {
                let c = a[r * n + col];
                for j in 0..n {
                    let s = f.mul(c, a[col * n + j]);
                    a[r * n + j] = f.sub(a[r * n + j], s);
                    let s = f.mul(c, inv[col * n + j]);
                    inv[r * n + j] = f.sub(inv[r * n + j], s);
                }
            }
        }
    }
    Ok(Some(inv))
}

/// Enumeration of a group with constant-time element indexing.
pub struct Enumeration {
    pub desc: GroupDescriptor,
    pub elems: Vec<Elem>,
    index: HashMap<Elem, usize>,
}

impl Enumeration {
    pub fn new(desc: &GroupDescriptor, cap: u128) -> Result<Enumeration> {
        let elems = desc.enumerate(cap)?;
        let index = elems.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        Ok(Enumeration { desc: desc.clone(), elems, index })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    #[inline]
    pub fn index_of(&self, e: &Elem) -> usize {
        self.index[e]
    }

    pub fn try_index_of(&self, e: &Elem) -> Option<usize> {
        self.index.get(e).copied()
    }
}

// ---- compact text form ----------------------------------------------------

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupDescriptor::Cyclic(n) => write!(f, "Z/{n}"),
            GroupDescriptor::DirectSum(parts) => {
                let strs: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", strs.join("+"))
            }
            GroupDescriptor::VectorSpace { q, n } => {
                if *n == 1 {
                    write!(f, "F{q}")
                } else {
                    write!(f, "V({q},{n})")
                }
            }
            GroupDescriptor::Dihedral { p } => write!(f, "D({p})"),
            GroupDescriptor::Symmetric { n } => write!(f, "S({n})"),
            GroupDescriptor::Extraspecial { p, r } => write!(f, "ES({p},{r})"),
            GroupDescriptor::GeneralLinear { n, q } => write!(f, "GL({n},{q})"),
            GroupDescriptor::LieGl { n, q } => write!(f, "gl({n},{q})"),
        }
    }
}

/// Parses the compact text form: `Z/9`, `Z/4+Z/2`, `V(3,2)`, `F2`, `D(5)`,
/// `S(5)`, `ES(3,3)`, `GL(2,3)`, `gl(2,3)`.
pub fn parse_descriptor(s: &str) -> Result<GroupDescriptor> {
    let s = s.trim();
    if s.contains('+') {
        let parts: Result<Vec<GroupDescriptor>> = s.split('+').map(parse_descriptor).collect();
        let d = GroupDescriptor::DirectSum(parts?);
        d.validate()?;
        return Ok(d);
    }
    let parse_err = |msg: &str| Error::Parse { line: 1, col: 1, msg: format!("{msg}: {s:?}") };
    let d = if let Some(rest) = s.strip_prefix("Z/") {
        GroupDescriptor::Cyclic(rest.parse().map_err(|_| parse_err("bad modulus"))?)
    } else if let Some(rest) = s.strip_prefix("V(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| parse_err("missing )"))?;
        let (q, n) = inner.split_once(',').ok_or_else(|| parse_err("expected V(q,n)"))?;
        GroupDescriptor::VectorSpace {
            q: q.trim().parse().map_err(|_| parse_err("bad q"))?,
            n: n.trim().parse().map_err(|_| parse_err("bad n"))?,
        }
    } else if let Some(rest) = s.strip_prefix('F').filter(|r| r.chars().all(|c| c.is_ascii_digit())) {
        GroupDescriptor::VectorSpace { q: rest.parse().map_err(|_| parse_err("bad q"))?, n: 1 }
    } else if let Some(rest) = s.strip_prefix("D(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| parse_err("missing )"))?;
        GroupDescriptor::Dihedral { p: inner.trim().parse().map_err(|_| parse_err("bad p"))? }
    } else if let Some(rest) = s.strip_prefix("S(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| parse_err("missing )"))?;
        GroupDescriptor::Symmetric { n: inner.trim().parse().map_err(|_| parse_err("bad n"))? }
    } else if let Some(rest) = s.strip_prefix("ES(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| parse_err("missing )"))?;
        let (p, r) = inner.split_once(',').ok_or_else(|| parse_err("expected ES(p,r)"))?;
        GroupDescriptor::Extraspecial {
            p: p.trim().parse().map_err(|_| parse_err("bad p"))?,
            r: r.trim().parse().map_err(|_| parse_err("bad r"))?,
        }
    } else if let Some(rest) = s.strip_prefix("GL(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| parse_err("missing )"))?;
        let (n, q) = inner.split_once(',').ok_or_else(|| parse_err("expected GL(n,q)"))?;
        GroupDescriptor::GeneralLinear {
            n: n.trim().parse().map_err(|_| parse_err("bad n"))?,
            q: q.trim().parse().map_err(|_| parse_err("bad q"))?,
        }
    } else if let Some(rest) = s.strip_prefix("gl(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| parse_err("missing )"))?;
        let (n, q) = inner.split_once(',').ok_or_else(|| parse_err("expected gl(n,q)"))?;
        GroupDescriptor::LieGl {
            n: n.trim().parse().map_err(|_| parse_err("bad n"))?,
            q: q.trim().parse().map_err(|_| parse_err("bad q"))?,
        }
    } else {
        return Err(parse_err("unknown family"));
    };
    d.validate()?;
    Ok(d)
}

/// Cycle type of a permutation, as counts a[i] of cycles of length i+1.
pub fn cycle_type(w: &[u8]) -> Vec<usize> {
    let n = w.len();
    let mut counts = vec![0usize; n];
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = w[cur] as usize;
            len += 1;
        }
        counts[len - 1] += 1;
    }
    counts
}
