//! Finite field arithmetic with full lookup tables for q <= 64.
//!
//! Prime fields are plain modular arithmetic. Extension fields use a fixed
//! irreducible polynomial per supported order, so element encodings are
//! stable across runs and platforms. Elements are indices `0..q`, where the
//! index is the base-p packing of the polynomial coefficients.

use crate::error::{Error, Result};
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub const FIELD_TABLE_CAP: u64 = 64;

/// Irreducible polynomials for the supported extension orders, as coefficient
/// vectors (constant term first, monic leading coefficient omitted).
fn irreducible_poly(q: u64) -> Option<(u64, Vec<u64>)> {
    // q -> (p, lower coefficients of a monic degree-a irreducible over F_p)
    match q {
        4 => Some((2, vec![1, 1])),          // x^2 + x + 1
        8 => Some((2, vec![1, 1, 0])),       // x^3 + x + 1
        9 => Some((3, vec![1, 0])),          // x^2 + 1
        16 => Some((2, vec![1, 1, 0, 0])),   // x^4 + x + 1
        25 => Some((5, vec![1, 1])),         // x^2 + x + 1
        27 => Some((3, vec![1, 2, 0])),      // x^3 + 2x + 1
        32 => Some((2, vec![1, 0, 1, 0, 0])), // x^5 + x^2 + 1
        49 => Some((7, vec![3, 1])),         // x^2 + x + 3
        64 => Some((2, vec![1, 1, 0, 0, 0, 0])), // x^6 + x + 1
        _ => None,
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Debug)]
pub struct FieldCtx {
    pub q: u64,
    pub p: u64,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    /// Smallest multiplicative generator, and the discrete-log table with
    /// respect to it (`dlog[x]` defined for x != 0).
    pub generator: u8,
    dlog: Vec<u64>,
}

impl FieldCtx {
    pub fn new(q: u64) -> Result<FieldCtx> {
        if q < 2 || q > FIELD_TABLE_CAP {
            return Err(Error::Unsupported(format!(
                "field order {q} outside supported range 2..={FIELD_TABLE_CAP}"
            )));
        }
        let (p, poly) = if is_prime(q) {
            (q, vec![])
        } else {
            irreducible_poly(q).ok_or_else(|| {
                Error::Unsupported(format!("no irreducible polynomial registered for q={q}"))
            })?
        };
        let a = poly.len(); // extension degree minus 1 == 0 for prime fields
        let qs = q as usize;

        // polynomial coefficient views of an index
        let ncoef = a.max(1);
        let unpack = move |x: u64| -> Vec<u64> {
            let mut c = Vec::with_capacity(ncoef);
            let mut x = x;
            for _ in 0..ncoef {
                c.push(x % p);
                x /= p;
            }
            c
        };
        let pack = |c: &[u64]| -> u64 {
            let mut x = 0;
            for (i, &ci) in c.iter().enumerate() {
                x += ci % p * p.pow(i as u32);
            }
            x
        };

        let mut add = vec![0u8; qs * qs];
        let mut mul = vec![0u8; qs * qs];
        let mut neg = vec![0u8; qs];
        let mut inv = vec![0u8; qs];

        for x in 0..q {
            let cx = unpack(x);
            let nc: Vec<u64> = cx.iter().map(|&c| (p - c) % p).collect();
            neg[x as usize] = pack(&nc) as u8;
            for y in 0..q {
                let cy = unpack(y);
                let sum: Vec<u64> = cx.iter().zip(&cy).map(|(&u, &v)| (u + v) % p).collect();
                add[(x * q + y) as usize] = pack(&sum) as u8;

                if a == 0 {
                    mul[(x * q + y) as usize] = (x * y % p) as u8;
                } else {
                    // schoolbook product then reduction by the monic modulus
                    let deg = a; // modulus degree
                    let mut prod = vec![0u64; 2 * deg];
                    for (i, &u) in cx.iter().enumerate() {
                        for (j, &v) in cy.iter().enumerate() {
                            prod[i + j] = (prod[i + j] + u * v) % p;
                        }
                    }
                    for i in (deg..2 * deg).rev() {
                        let c = prod[i];
                        if c != 0 {
                            prod[i] = 0;
                            for (j, &mj) in poly.iter().enumerate() {
                                let idx = i - deg + j;
                                prod[idx] = (prod[idx] + (p - mj % p) % p * c) % p;
                            }
                        }
                    }
                    mul[(x * q + y) as usize] = pack(&prod[..deg]) as u8;
                }
            }
        }
        for x in 1..q {
            for y in 1..q {
                if mul[(x * q + y) as usize] == 1 {
                    inv[x as usize] = y as u8;
                    break;
                }
            }
            if inv[x as usize] == 0 {
                return Err(Error::InvalidDescriptor(format!(
                    "element {x} has no inverse; modulus for q={q} is not irreducible"
                )));
            }
        }

        // multiplicative generator and discrete logs
        let mut generator = 0u8;
        let mut dlog = vec![0u64; qs];
        'outer: for g in 2..q {
            let mut seen = vec![false; qs];
            let mut x = 1u64;
            for _ in 0..q - 1 {
                if seen[x as usize] {
                    continue 'outer;
                }
                seen[x as usize] = true;
                x = mul[(x * q + g) as usize] as u64;
            }
            generator = g as u8;
            let mut x = 1u64;
            for e in 0..q - 1 {
                dlog[x as usize] = e;
                x = mul[(x * q + g) as usize] as u64;
            }
            break;
        }
        if generator == 0 && q > 2 {
            return Err(Error::InvalidDescriptor(format!("no generator found for q={q}")));
        }
        if q == 2 {
            generator = 1;
        }

        let ctx = FieldCtx { q, p, add, mul, neg, inv, generator, dlog };
        ctx.spot_check()?;
        Ok(ctx)
    }

    fn spot_check(&self) -> Result<()> {
        let q = self.q;
        for x in 0..q {
            for y in 0..q {
                if self.mul(x as u8, y as u8) != self.mul(y as u8, x as u8) {
                    return Err(Error::InvalidDescriptor(format!("q={q}: mul not commutative")));
                }
                for z in 0..q {
                    let lhs = self.mul(x as u8, self.add(y as u8, z as u8));
                    let rhs = self.add(self.mul(x as u8, y as u8), self.mul(x as u8, z as u8));
                    if lhs != rhs {
                        return Err(Error::InvalidDescriptor(format!("q={q}: not distributive")));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn add(&self, x: u8, y: u8) -> u8 {
        self.add[x as usize * self.q as usize + y as usize]
    }
    #[inline]
    pub fn mul(&self, x: u8, y: u8) -> u8 {
        self.mul[x as usize * self.q as usize + y as usize]
    }
    #[inline]
    pub fn neg(&self, x: u8) -> u8 {
        self.neg[x as usize]
    }
    #[inline]
    pub fn sub(&self, x: u8, y: u8) -> u8 {
        self.add(x, self.neg(y))
    }
    #[inline]
    pub fn inv(&self, x: u8) -> u8 {
        debug_assert!(x != 0);
        self.inv[x as usize]
    }
    /// Discrete log of a nonzero element with respect to the fixed generator.
    #[inline]
    pub fn dlog(&self, x: u8) -> u64 {
        debug_assert!(x != 0);
        self.dlog[x as usize]
    }
    /// generator^e.
    pub fn exp(&self, e: u64) -> u8 {
        let mut x = 1u8;
        for _ in 0..e % (self.q - 1).max(1) {
            x = self.mul(x, self.generator);
        }
        x
    }
}

static FIELD_CACHE: Lazy<Mutex<HashMap<u64, Arc<FieldCtx>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared field context for a given order. Contexts are immutable; the cache
/// only avoids rebuilding the tables.
pub fn field(q: u64) -> Result<Arc<FieldCtx>> {
    let mut cache = FIELD_CACHE.lock().unwrap();
    if let Some(ctx) = cache.get(&q) {
        return Ok(ctx.clone());
    }
    let ctx = Arc::new(FieldCtx::new(q)?);
    cache.insert(q, ctx.clone());
    Ok(ctx)
}

pub fn is_prime_u64(n: u64) -> bool {
    is_prime(n)
}

/// Factor q as p^a, if it is a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            let mut m = q;
            let mut a = 0;
            while m % p == 0 {
                m /= p;
                a += 1;
            }
            return if m == 1 { Some((p, a)) } else { None };
        }
        p += 1;
    }
    Some((q, 1))
}
