//! Exact rational helpers: directed-rounding roots, zeta-function enclosures,
//! and the small integer utilities the constant formulas need.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn rat_u128(x: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

pub fn rat_i64(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

pub fn pow_rat(x: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = x.clone();
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        n >>= 1;
    }
    acc
}

/// Rational enclosure (lo, hi) of x^(1/n) with lo^n <= x <= hi^n, obtained by
/// bisection. Roughly `iters` bits of accuracy; 128 is ample for every bound
/// check in this crate.
pub fn nth_root_bounds(x: &BigRational, n: u32, iters: u32) -> (BigRational, BigRational) {
    assert!(n >= 1 && !x.is_negative());
    if x.is_zero() {
        return (BigRational::zero(), BigRational::zero());
    }
    if n == 1 {
        return (x.clone(), x.clone());
    }
    let one = BigRational::one();
    let mut lo = BigRational::zero();
    let mut hi = if x >= &one { x.clone().max(one) } else { one };
    let two = rat_i64(2);
    for _ in 0..iters {
        let mid = (&lo + &hi) / &two;
        if &pow_rat(&mid, n) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Distinct primes dividing n.
pub fn primes_dividing(n: u128) -> Vec<u64> {
    let mut n = n;
    let mut out = Vec::new();
    let mut d: u128 = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d as u64);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n as u64);
    }
    out
}

/// Exact partial Euler product prod_{p in primes} (1 - p^{-s})^{-1}.
pub fn euler_factor_product(s: u32, primes: &[u64]) -> BigRational {
    let mut acc = BigRational::one();
    for &p in primes {
        let ps = pow_rat(&rat_u128(p as u128), s);
        acc *= &ps / (&ps - BigRational::one());
    }
    acc
}

/// Rational enclosure of zeta(s) for integer s >= 2: partial sum of the first
/// `terms` terms, plus the integral tail bound terms^{1-s}/(s-1) on the high
/// side.
pub fn zeta_bounds(s: u32, terms: u64) -> (BigRational, BigRational) {
    assert!(s >= 2 && terms >= 1);
    let mut lo = BigRational::zero();
    for m in 1..=terms {
        lo += BigRational::one() / pow_rat(&rat_u128(m as u128), s);
    }
    let tail = BigRational::one()
        / (pow_rat(&rat_u128(terms as u128), s - 1) * rat_u128((s - 1) as u128));
    let hi = &lo + tail;
    (lo, hi)
}

/// Rational enclosure of zeta(2)^2 = pi^4/36 from a fixed-precision enclosure
/// of pi.
pub fn zeta2_squared_bounds() -> (BigRational, BigRational) {
    // pi to 35 decimal places, rounded down; one ulp above for the high side
    let scale = pow_rat(&rat_u128(10), 35);
    let digits: u128 = 314159265358979323846264338327950288;
    let pi_lo = rat_u128(digits) / &scale;
    let pi_hi = rat_u128(digits + 1) / &scale;
    let thirty_six = rat_u128(36);
    (pow_rat(&pi_lo, 4) / &thirty_six, pow_rat(&pi_hi, 4) / &thirty_six)
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_bounds_bracket() {
        let x = BigRational::new(22.into(), 7.into());
        let (lo, hi) = nth_root_bounds(&x, 3, 128);
        assert!(pow_rat(&lo, 3) <= x && x <= pow_rat(&hi, 3));
        assert!(&hi - &lo < BigRational::new(1.into(), BigInt::from(10u8).pow(30)));
        // exact roots are bracketed tightly
        let (lo, hi) = nth_root_bounds(&rat_u128(64), 3, 128);
        assert!(lo <= rat_u128(4) && rat_u128(4) <= hi);
    }

    #[test]
    fn zeta_enclosures() {
        // zeta(2) = pi^2/6 ~ 1.6449340668
        let (lo, hi) = zeta_bounds(2, 1000);
        let approx = BigRational::new(16449340668u64.into(), 10_000_000_000u64.into());
        assert!(lo < approx && approx < hi);
        let (lo2, hi2) = zeta2_squared_bounds();
        // zeta(2)^2 ~ 2.70580808...
        assert!(lo2 > BigRational::new(270580808u64.into(), 100_000_000u64.into()));
        assert!(hi2 < BigRational::new(270580809u64.into(), 100_000_000u64.into()));
        assert!(&hi2 - &lo2 < BigRational::new(1.into(), BigInt::from(10u8).pow(20)));
    }

    #[test]
    fn euler_products_below_zeta() {
        let (_, zeta3_hi) = zeta_bounds(3, 1000);
        let partial = euler_factor_product(3, &[2, 3, 5]);
        assert!(partial < zeta3_hi);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 5), 792);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(4, 6), 0);
    }
}
