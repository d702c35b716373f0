//! Generalized m-gonal numbers and weighted m-gonal forms.
//!
//! A form is a weighted sum `sum_i a_i * P_m(x_i)` over integer variables,
//! where `P_m(x) = ((m-2)x^2 - (m-4)x) / 2` and the `x_i` may be negative.
//! Representation search is exact: per-coordinate bounds come from
//! inverting `P_m`, and the forward-enumeration bitmap agrees with the
//! per-target search everywhere.

use crate::arith;
use crate::{Error, Result};
use serde::Serialize;

/// The x-th generalized m-gonal number, computed exactly.
///
/// The numerator `(m-2)x^2 - (m-4)x` is always even.
pub fn polygonal_number(m: i64, x: i64) -> Result<i128> {
    if m < 3 {
        return Err(Error::Invalid(format!("order m={m} must be >= 3")));
    }
    let (m, x) = (m as i128, x as i128);
    let q = arith::mul(m - 2, arith::mul(x, x, "P_m")?, "P_m")?;
    let l = arith::mul(m - 4, x, "P_m")?;
    let num = arith::sub(q, l, "P_m")?;
    debug_assert!(num % 2 == 0);
    Ok(num / 2)
}

/// Largest `x >= 0` with `P_m(x) <= bound` (`bound >= 0`).
///
/// Inverts the quadratic with an integer square root; the result is then
/// nudged so the inequality is tight on both sides.
pub fn max_arg(m: i64, bound: i128) -> i64 {
    debug_assert!(bound >= 0);
    let (mm, m4) = ((m - 2) as i128, (m - 4) as i128);
    // P_m(x) <= b  <=>  (m-2)x^2 - (m-4)x - 2b <= 0
    let disc = m4 * m4 + 8 * mm * bound;
    let mut x = (m4 + arith::isqrt(disc)) / (2 * mm);
    while polygonal_number(m, (x + 1) as i64).map(|v| v <= bound).unwrap_or(false) {
        x += 1;
    }
    while x > 0 && polygonal_number(m, x as i64).map(|v| v > bound).unwrap_or(true) {
        x -= 1;
    }
    x as i64
}

/// A weighted m-gonal form with nondecreasing positive coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MGonalForm {
    pub m: i64,
    pub coeffs: Vec<i64>,
}

/// An explicit representation `value = sum a_i P_m(x_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepresentationWitness {
    pub x: Vec<i64>,
    pub value: i128,
}

/// Result of a bounded truant search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruantRecord {
    pub form: MGonalForm,
    /// Smallest positive integer not represented, or `None` if everything
    /// up to `bound` is represented.
    pub truant: Option<i64>,
    pub bound: i64,
}

impl MGonalForm {
    pub fn new(m: i64, coeffs: Vec<i64>) -> Result<Self> {
        if m < 3 {
            return Err(Error::Invalid(format!("order m={m} must be >= 3")));
        }
        if coeffs.is_empty() {
            return Err(Error::Invalid("empty coefficient tuple".into()));
        }
        if coeffs.iter().any(|&a| a < 1) {
            return Err(Error::Invalid("coefficients must be positive".into()));
        }
        if coeffs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invalid("coefficients must be nondecreasing".into()));
        }
        Ok(MGonalForm { m, coeffs })
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    /// Exact evaluation `sum a_i P_m(x_i)`.
    pub fn eval(&self, x: &[i64]) -> Result<i128> {
        if x.len() != self.coeffs.len() {
            return Err(Error::Invalid(format!(
                "variable vector length {} != rank {}",
                x.len(),
                self.coeffs.len()
            )));
        }
        let mut acc: i128 = 0;
        for (&a, &xi) in self.coeffs.iter().zip(x) {
            let term = arith::mul(a as i128, polygonal_number(self.m, xi)?, "eval")?;
            acc = arith::add(acc, term, "eval")?;
        }
        Ok(acc)
    }

    /// Exhaustive representation test for a fixed target.
    ///
    /// Searches coordinates in descending coefficient order with the last
    /// coordinate solved directly by inverting `P_m`; the first witness in
    /// that canonical order is returned, re-expressed in the original
    /// coordinate order.
    pub fn is_represented(&self, target: i128) -> Result<Option<RepresentationWitness>> {
        if target < 0 {
            return Err(Error::Invalid("target must be nonnegative".into()));
        }
        let mut order: Vec<usize> = (0..self.coeffs.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.coeffs[i]));
        let mut assignment = vec![0i64; self.coeffs.len()];
        if self.search(&order, 0, target, &mut assignment)? {
            let value = self.eval(&assignment)?;
            debug_assert_eq!(value, target);
            Ok(Some(RepresentationWitness { x: assignment, value }))
        } else {
            Ok(None)
        }
    }

    fn search(
        &self,
        order: &[usize],
        depth: usize,
        remaining: i128,
        assignment: &mut Vec<i64>,
    ) -> Result<bool> {
        let idx = order[depth];
        let a = self.coeffs[idx] as i128;
        if depth + 1 == order.len() {
            if remaining % a != 0 {
                return Ok(false);
            }
            if let Some(x) = invert_polygonal(self.m, remaining / a) {
                assignment[idx] = x;
                return Ok(true);
            }
            return Ok(false);
        }
        for x in ArgSweep::new(self.m, remaining / a) {
            let used = a * polygonal_number(self.m, x)?;
            if used > remaining {
                continue;
            }
            assignment[idx] = x;
            if self.search(order, depth + 1, remaining - used, assignment)? {
                return Ok(true);
            }
        }
        assignment[idx] = 0;
        Ok(false)
    }

    /// Smallest positive integer `<= cap` that the form misses.
    pub fn truant(&self, cap: i64) -> Result<TruantRecord> {
        if cap < 1 {
            return Err(Error::Invalid("cap must be >= 1".into()));
        }
        let bits = self.represented_bitmap(cap)?;
        let truant = (1..=cap).find(|&k| !bits.get(k as usize));
        Ok(TruantRecord { form: self.clone(), truant, bound: cap })
    }

    /// Bitmap of all represented values in `[0, cap]` by forward
    /// enumeration, one coordinate at a time, largest coefficient first.
    pub fn represented_bitmap(&self, cap: i64) -> Result<Bitset> {
        if cap < 0 {
            return Err(Error::Invalid("cap must be >= 0".into()));
        }
        let mut bits = Bitset::new(cap as usize + 1);
        bits.set(0);
        let mut coeffs = self.coeffs.clone();
        coeffs.sort_unstable_by_key(|&a| std::cmp::Reverse(a));
        let mut scratch = Bitset::new(cap as usize + 1);
        for &a in &coeffs {
            extend_bitmap(&mut bits, &mut scratch, self.m, a, cap)?;
        }
        Ok(bits)
    }
}

/// Adds one coordinate with coefficient `a` to a represented-value bitmap.
///
/// `out` receives the union over all shifts `a * P_m(x) <= cap`; this is
/// the single pass the escalation tree performs per node.
pub fn extend_bitmap(bits: &mut Bitset, scratch: &mut Bitset, m: i64, a: i64, cap: i64) -> Result<()> {
    scratch.clear();
    let mut shifts = contributions(m, a, cap as i128)?;
    shifts.sort_unstable();
    shifts.dedup();
    for s in shifts {
        scratch.or_shifted(bits, s as usize);
    }
    std::mem::swap(bits, scratch);
    Ok(())
}

/// All distinct values `a * P_m(x) <= cap` (including 0), unordered.
pub fn contributions(m: i64, a: i64, cap: i128) -> Result<Vec<i128>> {
    let a = a as i128;
    let mut vals = Vec::new();
    let mut x = 0i64;
    loop {
        let v = arith::mul(a, polygonal_number(m, x)?, "contributions")?;
        if v > cap {
            break;
        }
        vals.push(v);
        x += 1;
    }
    let mut x = -1i64;
    loop {
        let v = arith::mul(a, polygonal_number(m, x)?, "contributions")?;
        if v > cap {
            break;
        }
        vals.push(v);
        x -= 1;
    }
    Ok(vals)
}

/// Solves `P_m(x) = v` exactly, preferring the canonical root.
///
/// Tries the nonnegative branch first, then the negative one; both are
/// recovered from the quadratic formula and re-checked.
pub fn invert_polygonal(m: i64, v: i128) -> Option<i64> {
    if v < 0 {
        return None;
    }
    if v == 0 {
        return Some(0);
    }
    let (mm, m4) = ((m - 2) as i128, (m - 4) as i128);
    let disc = m4 * m4 + 8 * mm * v;
    let s = arith::isqrt(disc);
    if s * s != disc {
        return None;
    }
    for num in [m4 + s, m4 - s] {
        if num % (2 * mm) == 0 {
            let x = num / (2 * mm);
            if let Ok(x64) = i64::try_from(x) {
                if polygonal_number(m, x64).map_or(false, |got| got == v) {
                    return Some(x64);
                }
            }
        }
    }
    None
}

/// Candidate arguments in the canonical order 0, 1, -1, 2, -2, ... with
/// each sign direction stopping once `P_m` exceeds the bound.
struct ArgSweep {
    m: i64,
    bound: i128,
    next_pos: Option<i64>,
    next_neg: Option<i64>,
    emit_pos: bool,
}

impl ArgSweep {
    fn new(m: i64, bound: i128) -> Self {
        ArgSweep { m, bound, next_pos: Some(0), next_neg: Some(-1), emit_pos: true }
    }
}

impl Iterator for ArgSweep {
    type Item = i64;
    fn next(&mut self) -> Option<i64> {
        for _ in 0..2 {
            let slot = if self.emit_pos { &mut self.next_pos } else { &mut self.next_neg };
            self.emit_pos = !self.emit_pos;
            if let Some(x) = *slot {
                if polygonal_number(self.m, x).map(|v| v <= self.bound).unwrap_or(false) {
                    *slot = Some(if x >= 0 { x + 1 } else { x - 1 });
                    return Some(x);
                }
                *slot = None;
            }
        }
        None
    }
}

/// Fixed-size bitset over `[0, len)` with word-level shifted unions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        if i >= self.len {
            return false;
        }
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// `self |= other << shift`, truncated at `self.len`.
    pub fn or_shifted(&mut self, other: &Bitset, shift: usize) {
        if shift >= self.len {
            return;
        }
        let (word_shift, bit_shift) = (shift / 64, shift % 64);
        let n = self.words.len();
        if bit_shift == 0 {
            for i in word_shift..n {
                self.words[i] |= other.words[i - word_shift];
            }
        } else {
            for i in word_shift..n {
                let lo = other.words[i - word_shift] << bit_shift;
                let hi = if i > word_shift {
                    other.words[i - word_shift - 1] >> (64 - bit_shift)
                } else {
                    0
                };
                self.words[i] |= lo | hi;
            }
        }
        self.mask_tail();
    }

    fn mask_tail(&mut self) {
        let extra = self.words.len() * 64 - self.len;
        if extra > 0 {
            let last = self.words.len() - 1;
            self.words[last] &= u64::MAX >> extra;
        }
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// First unset index in `[from, len)`.
    pub fn first_zero_from(&self, from: usize) -> Option<usize> {
        (from..self.len).find(|&i| !self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dot-count oracle: the n-th pentagonal number as a sum of rows.
    fn pentagonal_by_dots(n: i64) -> i128 {
        (1..=n as i128).map(|k| 3 * k - 2).sum()
    }

    #[test]
    fn polygonal_basics() {
        assert_eq!(polygonal_number(5, 1).unwrap(), 1);
        assert_eq!(polygonal_number(7, -1).unwrap(), 4);
        assert_eq!(polygonal_number(5, 3).unwrap(), 12);
        for n in 1..40 {
            assert_eq!(polygonal_number(5, n).unwrap(), pentagonal_by_dots(n));
        }
        assert!(polygonal_number(2, 1).is_err());
    }

    #[test]
    fn smallest_nonzero_values() {
        // For every order, the two smallest nonzero single-variable values
        // are 1 = P_m(1) and m-3 = P_m(-1).
        for m in 3..=200i64 {
            let mut vals: Vec<i128> = Vec::new();
            for x in -4..=4i64 {
                let v = polygonal_number(m, x).unwrap();
                if v != 0 && v < (m as i128) - 2 {
                    vals.push(v);
                }
            }
            vals.sort_unstable();
            vals.dedup();
            if m == 3 {
                continue; // P_3(-1) = 0, second-smallest claim starts at m >= 4
            }
            assert_eq!(vals[0], 1, "m={m}");
            if m > 4 {
                assert_eq!(polygonal_number(m, -1).unwrap(), (m as i128) - 3);
            }
        }
    }

    #[test]
    fn eval_examples() {
        let f = MGonalForm::new(3, vec![1]).unwrap();
        assert_eq!(f.eval(&[2]).unwrap(), 3);
        let f = MGonalForm::new(4, vec![1, 2]).unwrap();
        assert_eq!(f.eval(&[1, 1]).unwrap(), 3);
        let f = MGonalForm::new(6, vec![1, 1]).unwrap();
        assert_eq!(f.eval(&[-1, 2]).unwrap(), 9);
    }

    #[test]
    fn representation_examples() {
        let f = MGonalForm::new(3, vec![1]).unwrap();
        assert!(f.is_represented(2).unwrap().is_none());
        let f = MGonalForm::new(3, vec![1, 2, 2, 4]).unwrap();
        let w = f.is_represented(8).unwrap().expect("8 is represented");
        assert_eq!(w.value, 8);
        assert_eq!(f.eval(&w.x).unwrap(), 8);
        let f = MGonalForm::new(9, vec![2, 3, 5]).unwrap();
        let w = f.is_represented(0).unwrap().unwrap();
        assert_eq!(w.x, vec![0, 0, 0]);
    }

    #[test]
    fn truant_examples() {
        let f = MGonalForm::new(3, vec![1]).unwrap();
        assert_eq!(f.truant(100).unwrap().truant, Some(2));
        let f = MGonalForm::new(7, vec![1]).unwrap();
        assert_eq!(f.truant(100).unwrap().truant, Some(2));
        let f = MGonalForm::new(4, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(f.truant(100).unwrap().truant, None);
    }

    /// Independent four-square oracle for the Lagrange case.
    #[test]
    fn four_squares_oracle() {
        let f = MGonalForm::new(4, vec![1, 1, 1, 1]).unwrap();
        let bits = f.represented_bitmap(200).unwrap();
        for n in 0..=200i64 {
            let mut found = false;
            'outer: for a in 0..=14i64 {
                for b in a..=14 {
                    for c in b..=14 {
                        for d in c..=14 {
                            if a * a + b * b + c * c + d * d == n {
                                found = true;
                                break 'outer;
                            }
                        }
                    }
                }
            }
            assert_eq!(bits.get(n as usize), found, "n={n}");
        }
    }

    #[test]
    fn bitmap_examples() {
        let f = MGonalForm::new(3, vec![1, 1]).unwrap();
        let bits = f.represented_bitmap(10).unwrap();
        let got: Vec<usize> = bits.iter_ones().collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 6, 7, 9, 10]);

        let f = MGonalForm::new(4, vec![1]).unwrap();
        let got: Vec<usize> = f.represented_bitmap(10).unwrap().iter_ones().collect();
        assert_eq!(got, vec![0, 1, 4, 9]);

        // P_10 takes the values 0, 1, 7, 10, ... so only {0, 1, 7} fall in [0, 8].
        let f = MGonalForm::new(10, vec![1]).unwrap();
        let got: Vec<usize> = f.represented_bitmap(8).unwrap().iter_ones().collect();
        assert_eq!(got, vec![0, 1, 7]);
    }

    #[test]
    fn bitmap_agrees_with_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xB17);
        for _ in 0..40 {
            let m = rng.gen_range(3..=12);
            let rank = rng.gen_range(1..=3);
            let mut coeffs: Vec<i64> = (0..rank).map(|_| rng.gen_range(1..=6)).collect();
            coeffs.sort_unstable();
            let f = MGonalForm::new(m, coeffs).unwrap();
            let cap = 60;
            let bits = f.represented_bitmap(cap).unwrap();
            for n in 0..=cap {
                let w = f.is_represented(n as i128).unwrap();
                assert_eq!(bits.get(n as usize), w.is_some(), "form {f:?} n={n}");
                if let Some(w) = w {
                    assert_eq!(f.eval(&w.x).unwrap(), n as i128);
                }
            }
        }
    }

    #[test]
    fn hexagonal_equals_triangular() {
        let tri = MGonalForm::new(3, vec![1]).unwrap().represented_bitmap(10_000).unwrap();
        let hex = MGonalForm::new(6, vec![1]).unwrap().represented_bitmap(10_000).unwrap();
        assert_eq!(tri, hex);
    }

    #[test]
    fn bitset_shift_or() {
        let mut a = Bitset::new(130);
        a.set(0);
        a.set(63);
        a.set(64);
        let mut b = Bitset::new(130);
        b.or_shifted(&a, 65);
        let got: Vec<usize> = b.iter_ones().collect();
        assert_eq!(got, vec![65, 128, 129]);
    }

    #[test]
    fn invert_polygonal_roundtrip() {
        for m in [3i64, 4, 5, 8, 10, 50] {
            for x in -30..=30i64 {
                let v = polygonal_number(m, x).unwrap();
                let got = invert_polygonal(m, v).expect("invertible");
                assert_eq!(polygonal_number(m, got).unwrap(), v);
            }
            assert_eq!(invert_polygonal(m, 2 + (m as i128 - 2) * 1000), None);
        }
    }
}
