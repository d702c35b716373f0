//! Checked integer helpers shared by the other modules.
//!
//! All value arithmetic runs in `i128` with explicit overflow detection;
//! inputs are small enough that this comfortably covers desk-scale runs
//! without big integers on the hot paths.

use crate::{Error, Result};

/// Checked product of two `i128`s.
pub fn mul(a: i128, b: i128, ctx: &'static str) -> Result<i128> {
    a.checked_mul(b).ok_or(Error::Overflow(ctx))
}

/// Checked sum of two `i128`s.
pub fn add(a: i128, b: i128, ctx: &'static str) -> Result<i128> {
    a.checked_add(b).ok_or(Error::Overflow(ctx))
}

/// Checked difference.
pub fn sub(a: i128, b: i128, ctx: &'static str) -> Result<i128> {
    a.checked_sub(b).ok_or(Error::Overflow(ctx))
}

/// Floor of the square root of a nonnegative `i128`.
pub fn isqrt(n: i128) -> i128 {
    assert!(n >= 0, "isqrt of negative");
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x > 0 && x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Greatest common divisor (always nonnegative).
pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(mut n: i128, p: i64) -> u32 {
    assert!(n != 0, "valuation of zero");
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Unit part `n / p^v` of a nonzero integer.
pub fn unit_part(mut n: i128, p: i64) -> i128 {
    assert!(n != 0, "unit part of zero");
    let p = p as i128;
    while n % p == 0 {
        n /= p;
    }
    n
}

/// Legendre symbol (a|p) for an odd prime p; 0 when p | a.
pub fn legendre(a: i128, p: i64) -> i32 {
    let p = p as i128;
    let mut a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    // Euler's criterion by fast exponentiation mod p (p is small here).
    let mut e = (p - 1) / 2;
    let mut acc: i128 = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * a % p;
        }
        a = a * a % p;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

/// Modular inverse of `a` modulo `m` for gcd(a, m) = 1.
pub fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        let t = old_r - q * r;
        old_r = r;
        r = t;
        let t = old_s - q * s;
        old_s = s;
        s = t;
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m))
}

/// Deterministic Miller–Rabin for u64-sized inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u128(a as u128, d as u128, n as u128);
        if x == 1 || x == (n - 1) as u128 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod_u128(x, x, n as u128);
            if x == (n - 1) as u128 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod_u128(a: u128, b: u128, m: u128) -> u128 {
    // m fits in u64 here, so the product fits in u128.
    a % m * (b % m) % m
}

fn pow_mod_u128(mut a: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1u128;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u128(acc, a, m);
        }
        a = mul_mod_u128(a, a, m);
        e >>= 1;
    }
    acc
}

/// Odd prime factors of `n` (n ≥ 1), smallest first, without multiplicity.
///
/// Trial division up to 10^6, then Pollard rho on the u64-sized cofactor.
/// Desk-scale determinants stay well inside this range.
pub fn odd_prime_factors(n: u128) -> Vec<i64> {
    let mut n = n;
    let mut out = Vec::new();
    while n % 2 == 0 {
        n /= 2;
    }
    let mut d = 3u128;
    while d * d <= n && d < 1_000_000 {
        if n % d == 0 {
            out.push(d as i64);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 2;
    }
    if n > 1 {
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if m <= u64::MAX as u128 && is_prime_u64(m as u64) {
                if !out.contains(&(m as i64).max(0)) && m <= i64::MAX as u128 {
                    out.push(m as i64);
                }
                continue;
            }
            let f = pollard_rho(m);
            stack.push(f);
            stack.push(m / f);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn pollard_rho(n: u128) -> u128 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u128;
    loop {
        let mut x = 2u128;
        let mut y = 2u128;
        let mut d = 1u128;
        while d == 1 {
            x = (mul_mod_wide(x, x, n) + c) % n;
            y = (mul_mod_wide(y, y, n) + c) % n;
            y = (mul_mod_wide(y, y, n) + c) % n;
            d = gcd_u128(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn mul_mod_wide(a: u128, b: u128, m: u128) -> u128 {
    // Schoolbook 64-bit limb product mod m; good enough for factoring
    // the occasional determinant cofactor.
    let (mut acc, mut a, mut b) = (0u128, a % m, b % m);
    while b > 0 {
        if b & 1 == 1 {
            acc = acc.wrapping_add(a) % m.max(1);
            if acc >= m {
                acc -= m;
            }
        }
        a = a.wrapping_shl(1) % m;
        b >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_exact_and_between() {
        for n in 0..2000i128 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "n={n} r={r}");
        }
        assert_eq!(isqrt((1i128 << 80) - 1), (1i128 << 40) - 1);
    }

    #[test]
    fn legendre_matches_square_table() {
        for p in [3i64, 5, 7, 11, 13] {
            let squares: Vec<i128> = (1..p as i128).map(|x| x * x % p as i128).collect();
            for a in 1..p as i128 {
                let expect = if squares.contains(&a) { 1 } else { -1 };
                assert_eq!(legendre(a, p), expect, "a={a} p={p}");
            }
            assert_eq!(legendre(0, p), 0);
        }
    }

    #[test]
    fn factoring_smoke() {
        assert_eq!(odd_prime_factors(2u128.pow(10) * 3 * 5 * 97), vec![3, 5, 97]);
        assert_eq!(odd_prime_factors(1), Vec::<i64>::new());
        // product of two 10-digit primes
        let p = 1_000_000_007u128;
        let q = 1_000_000_009u128;
        assert_eq!(odd_prime_factors(p * q), vec![p as i64, q as i64]);
    }

    #[test]
    fn mod_inverse_basics() {
        assert_eq!(mod_inverse(3, 7), Some(5));
        assert_eq!(mod_inverse(2, 4), None);
        let m = 3i128.pow(20);
        let inv = mod_inverse(97, m).unwrap();
        assert_eq!(97 * inv % m, 1);
    }
}
