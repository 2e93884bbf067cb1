//! Exact cell sets on the unit torus.
//!
//! A point of the torus is identified with its two-sided digit sequence in
//! base `p`:
//!
//! ```text
//!     ... y3 y2 y1 | x1 x2 x3 ...
//! pos     -3 -2 -1    0  1  2
//! ```
//!
//! where `x = 0.x1x2x3...` and `y = 0.y1y2y3...`. A [`CellSet`] is a set
//! whose membership depends only on the digits in a finite window of
//! positions `[lo, hi)`, stored as a bitset over all `p^(hi-lo)` digit
//! assignments. The square grid of `p^k x p^k` cells is the window
//! `[-k, k)`. Shift maps move the window; the cat map permutes cells of a
//! square window. Both are exact.

use crate::error::{Error, Result};

/// Largest number of digit assignments a single set may enumerate.
pub const MAX_ASSIGNMENTS: u64 = 1 << 26;

/// Fixed-length bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.clear_tail();
        b
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn and(&self, other: &Bits) -> Bits {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Bits) -> Bits {
        self.zip(other, |a, b| a | b)
    }

    pub fn and_not(&self, other: &Bits) -> Bits {
        self.zip(other, |a, b| a & !b)
    }

    pub fn not(&self) -> Bits {
        let mut b = Bits {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        b.clear_tail();
        b
    }

    fn zip(&self, other: &Bits, f: impl Fn(u64, u64) -> u64) -> Bits {
        assert_eq!(self.len, other.len, "bitset length mismatch");
        Bits {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    /// Little-endian bytes: bit `i` is bit `i % 8` of byte `i / 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for i in 0..nbytes {
            out.push((self.words[i / 8] >> (8 * (i % 8))) as u8);
        }
        out
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Bits> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut b = Bits::zeros(len);
        for (i, &byte) in bytes.iter().enumerate() {
            b.words[i / 8] |= (byte as u64) << (8 * (i % 8));
        }
        let before = b.words.clone();
        b.clear_tail();
        (before == b.words).then_some(b)
    }
}

fn checked_pow(base: u32, exp: u32) -> Result<u64> {
    (base as u64)
        .checked_pow(exp)
        .filter(|&n| n <= MAX_ASSIGNMENTS)
        .ok_or_else(|| {
            Error::InvalidSet(format!(
                "window of {exp} base-{base} digits exceeds {MAX_ASSIGNMENTS} assignments"
            ))
        })
}

/// Measurable set determined by finitely many base-`p` digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    base: u32,
    lo: i32,
    hi: i32,
    bits: Bits,
}

impl CellSet {
    fn with_window(base: u32, lo: i32, hi: i32, bits: Bits) -> Self {
        debug_assert!(lo <= hi);
        Self { base, lo, hi, bits }
    }

    fn check_base(base: u32) -> Result<()> {
        if base < 2 {
            return Err(Error::InvalidSet(format!("digit base must be >= 2, got {base}")));
        }
        Ok(())
    }

    /// Empty set on the dyadic `2^k x 2^k` grid.
    pub fn empty(k: u32) -> Result<Self> {
        Self::empty_with_base(2, k)
    }

    /// Whole torus on the dyadic `2^k x 2^k` grid.
    pub fn full(k: u32) -> Result<Self> {
        Ok(Self::empty(k)?.complement())
    }

    pub fn empty_with_base(base: u32, k: u32) -> Result<Self> {
        Self::check_base(base)?;
        let n = checked_pow(base, 2 * k)?;
        Ok(Self::with_window(base, -(k as i32), k as i32, Bits::zeros(n as usize)))
    }

    /// Cells `(ix, iy)` of the `p^k x p^k` grid for which `pred` holds.
    /// `ix` indexes the horizontal coordinate, `iy` the vertical one.
    pub fn from_predicate(
        base: u32,
        k: u32,
        mut pred: impl FnMut(u64, u64) -> bool,
    ) -> Result<Self> {
        let mut s = Self::empty_with_base(base, k)?;
        let side = (base as u64).pow(k);
        for iy in 0..side {
            for ix in 0..side {
                if pred(ix, iy) {
                    let idx = s.cell_to_index(ix, iy);
                    s.bits.set(idx, true);
                }
            }
        }
        Ok(s)
    }

    /// Dyadic grid set from a list of cells.
    pub fn from_cells(k: u32, cells: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut s = Self::empty(k)?;
        let side = 1u64 << k;
        for (ix, iy) in cells {
            if ix >= side || iy >= side {
                return Err(Error::InvalidSet(format!(
                    "cell ({ix}, {iy}) outside the {side}x{side} grid"
                )));
            }
            let idx = s.cell_to_index(ix, iy);
            s.bits.set(idx, true);
        }
        Ok(s)
    }

    /// Cylinder fixing `x1..x_d` (when `horizontal`) or `y1..y_d` to the
    /// base-`p` digits of `word` (most significant first).
    pub fn cylinder(base: u32, digits: &[u32], horizontal: bool) -> Result<Self> {
        Self::check_base(base)?;
        if digits.iter().any(|&d| d >= base) {
            return Err(Error::InvalidSet(format!("digit out of range for base {base}")));
        }
        let d = digits.len() as i32;
        let (lo, hi) = if horizontal { (0, d) } else { (-d, 0) };
        let n = checked_pow(base, d as u32)?;
        let mut bits = Bits::zeros(n as usize);
        let mut idx = 0u64;
        for (i, &digit) in digits.iter().enumerate() {
            let pos = if horizontal { i as i32 } else { -(i as i32) - 1 };
            idx += digit as u64 * (base as u64).pow((pos - lo) as u32);
        }
        bits.set(idx as usize, true);
        Ok(Self::with_window(base, lo, hi, bits))
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Digit window `[lo, hi)`.
    pub fn window(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    /// `k` when the window is the square grid `[-k, k)`.
    pub fn resolution(&self) -> Option<u32> {
        (self.lo == -self.hi && self.hi >= 0).then_some(self.hi as u32)
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    /// Number of digit assignments in the set.
    pub fn count(&self) -> u64 {
        self.bits.count_ones()
    }

    /// Total number of digit assignments in the window.
    pub fn total(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 / self.total() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn complement(&self) -> CellSet {
        Self::with_window(self.base, self.lo, self.hi, self.bits.not())
    }

    fn digit_power(&self, offset: u32) -> u64 {
        (self.base as u64).pow(offset)
    }

    fn reverse_digits(&self, mut v: u64, k: u32) -> u64 {
        let b = self.base as u64;
        let mut r = 0;
        for _ in 0..k {
            r = r * b + v % b;
            v /= b;
        }
        r
    }

    /// Bit index of grid cell `(ix, iy)` in a square window.
    fn cell_to_index(&self, ix: u64, iy: u64) -> usize {
        let k = self.resolution().expect("square window");
        let side = self.digit_power(k);
        (iy + side * self.reverse_digits(ix, k)) as usize
    }

    fn index_to_cell(&self, idx: u64) -> (u64, u64) {
        let k = self.resolution().expect("square window");
        let side = self.digit_power(k);
        (self.reverse_digits(idx / side, k), idx % side)
    }

    /// Membership of grid cell `(ix, iy)`; the set must have a square window.
    pub fn contains_cell(&self, ix: u64, iy: u64) -> bool {
        self.bits.get(self.cell_to_index(ix, iy))
    }

    /// Grid cells contained in the set (square window only).
    pub fn cells(&self) -> Vec<(u64, u64)> {
        self.bits
            .iter_ones()
            .map(|i| self.index_to_cell(i as u64))
            .collect()
    }

    /// Membership of the point `(x, y)` of the torus.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let b = self.base as f64;
        let mut idx = 0u64;
        for pos in self.lo..self.hi {
            let digit = if pos >= 0 {
                ((x * b.powi(pos + 1)).floor() as u64) % self.base as u64
            } else {
                ((y * b.powi(-pos)).floor() as u64) % self.base as u64
            };
            idx += digit * self.digit_power((pos - self.lo) as u32);
        }
        self.bits.get(idx as usize)
    }

    /// Same set on a wider window.
    pub fn refine(&self, lo: i32, hi: i32) -> Result<CellSet> {
        if lo > self.lo || hi < self.hi {
            return Err(Error::InvalidSet(format!(
                "cannot refine window [{}, {}) to [{lo}, {hi})",
                self.lo, self.hi
            )));
        }
        if lo == self.lo && hi == self.hi {
            return Ok(self.clone());
        }
        let n = checked_pow(self.base, (hi - lo) as u32)?;
        let below = self.digit_power((self.lo - lo) as u32);
        let span = self.total();
        let mut bits = Bits::zeros(n as usize);
        for idx in 0..n {
            if self.bits.get(((idx / below) % span) as usize) {
                bits.set(idx as usize, true);
            }
        }
        Ok(Self::with_window(self.base, lo, hi, bits))
    }

    /// Same set on the smallest square window containing the current one.
    pub fn to_square(&self) -> Result<CellSet> {
        let k = (-self.lo).max(self.hi).max(0);
        self.refine(-k, k)
    }

    /// Drops boundary digits the set does not depend on.
    pub fn trimmed(&self) -> CellSet {
        let mut s = self.clone();
        let b = s.base as u64;
        // low end: groups of `b` consecutive indices must agree
        while s.lo < s.hi {
            let n = s.total();
            let independent = (0..n / b).all(|g| {
                let first = s.bits.get((g * b) as usize);
                (1..b).all(|d| s.bits.get((g * b + d) as usize) == first)
            });
            if !independent {
                break;
            }
            let mut bits = Bits::zeros((n / b) as usize);
            for g in 0..n / b {
                bits.set(g as usize, s.bits.get((g * b) as usize));
            }
            s = Self::with_window(s.base, s.lo + 1, s.hi, bits);
        }
        // high end: stride b^(w-1)
        while s.lo < s.hi {
            let n = s.total();
            let stride = n / b;
            let independent = (0..stride).all(|r| {
                let first = s.bits.get(r as usize);
                (1..b).all(|d| s.bits.get((r + d * stride) as usize) == first)
            });
            if !independent {
                break;
            }
            let mut bits = Bits::zeros(stride as usize);
            for r in 0..stride {
                bits.set(r as usize, s.bits.get(r as usize));
            }
            s = Self::with_window(s.base, s.lo, s.hi - 1, bits);
        }
        s
    }

    fn aligned(&self, other: &CellSet) -> Result<(CellSet, CellSet)> {
        if self.base != other.base {
            return Err(Error::InvalidSet(format!(
                "digit bases differ: {} vs {}",
                self.base, other.base
            )));
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi.max(other.hi);
        Ok((self.refine(lo, hi)?, other.refine(lo, hi)?))
    }

    pub fn intersection(&self, other: &CellSet) -> Result<CellSet> {
        let (a, b) = self.aligned(other)?;
        Ok(Self::with_window(a.base, a.lo, a.hi, a.bits.and(&b.bits)))
    }

    pub fn union(&self, other: &CellSet) -> Result<CellSet> {
        let (a, b) = self.aligned(other)?;
        Ok(Self::with_window(a.base, a.lo, a.hi, a.bits.or(&b.bits)))
    }

    pub fn difference(&self, other: &CellSet) -> Result<CellSet> {
        let (a, b) = self.aligned(other)?;
        Ok(Self::with_window(a.base, a.lo, a.hi, a.bits.and_not(&b.bits)))
    }

    /// Conditional counts: for every assignment `z` of the digits in
    /// `[olo, ohi)` the number of members whose digits there equal `z`.
    fn marginal_counts(&self, olo: i32, ohi: i32) -> Vec<u64> {
        let below = self.digit_power((olo - self.lo) as u32);
        let span = self.digit_power((ohi - olo) as u32);
        let mut counts = vec![0u64; span as usize];
        for idx in self.bits.iter_ones() {
            counts[((idx as u64 / below) % span) as usize] += 1;
        }
        counts
    }

    /// `mu(self ∩ other)` without materializing the union window. Digits
    /// outside the overlap of the two windows are independent under the
    /// uniform measure, so only the overlap needs enumerating.
    pub fn intersection_measure(&self, other: &CellSet) -> Result<f64> {
        if self.base != other.base {
            return Err(Error::InvalidSet(format!(
                "digit bases differ: {} vs {}",
                self.base, other.base
            )));
        }
        let olo = self.lo.max(other.lo);
        let ohi = self.hi.min(other.hi);
        if olo >= ohi {
            return Ok(self.measure() * other.measure());
        }
        let a = self.marginal_counts(olo, ohi);
        let b = other.marginal_counts(olo, ohi);
        let free_a = self.total() / a.len() as u64;
        let free_b = other.total() / b.len() as u64;
        let dot: u128 = a.iter().zip(&b).map(|(&x, &y)| x as u128 * y as u128).sum();
        let denom = free_a as f64 * free_b as f64 * a.len() as f64;
        Ok(dot as f64 / denom)
    }

    /// Image under `n` steps of a base-`p` shift: every digit moves one
    /// position towards the `y` side per step.
    pub(crate) fn shifted(&self, n: i64) -> Result<CellSet> {
        let n = i32::try_from(n)
            .ok()
            .filter(|n| self.lo.checked_sub(*n).is_some() && self.hi.checked_sub(*n).is_some())
            .ok_or_else(|| Error::InvalidSet("shift offset out of range".into()))?;
        Ok(Self::with_window(self.base, self.lo - n, self.hi - n, self.bits.clone()))
    }

    /// Image of a square-window set under a lattice automorphism of the
    /// `p^k x p^k` grid given by `cell -> map(cell)`.
    pub(crate) fn permuted(&self, map: impl Fn(u64, u64) -> (u64, u64)) -> Result<CellSet> {
        let sq = self.to_square()?;
        let mut out = Bits::zeros(sq.bits.len());
        for idx in sq.bits.iter_ones() {
            let (ix, iy) = sq.index_to_cell(idx as u64);
            let (jx, jy) = map(ix, iy);
            out.set(sq.cell_to_index(jx, jy), true);
        }
        Ok(Self::with_window(sq.base, sq.lo, sq.hi, out))
    }

    /// Hex encoding of a square-window set: bit `iy * side + ix` of the
    /// little-endian byte string.
    pub fn to_hex(&self) -> Result<String> {
        let sq = self.to_square()?;
        let side = sq.digit_power(sq.resolution().unwrap());
        let mut grid = Bits::zeros(sq.bits.len());
        for idx in sq.bits.iter_ones() {
            let (ix, iy) = sq.index_to_cell(idx as u64);
            grid.set((iy * side + ix) as usize, true);
        }
        Ok(hex::encode(grid.to_bytes()))
    }

    /// Inverse of [`CellSet::to_hex`].
    pub fn from_hex(base: u32, k: u32, text: &str) -> Result<CellSet> {
        Self::check_base(base)?;
        let n = checked_pow(base, 2 * k)? as usize;
        let bytes = hex::decode(text.trim())
            .map_err(|e| Error::InvalidSet(format!("bad hex bitset: {e}")))?;
        let grid = Bits::from_bytes(n, &bytes).ok_or_else(|| {
            Error::InvalidSet(format!(
                "hex bitset has {} bytes, expected {} for {n} cells",
                bytes.len(),
                n.div_ceil(8)
            ))
        })?;
        let side = (base as u64).pow(k);
        let mut s = Self::empty_with_base(base, k)?;
        for i in grid.iter_ones() {
            let (iy, ix) = (i as u64 / side, i as u64 % side);
            let idx = s.cell_to_index(ix, iy);
            s.bits.set(idx, true);
        }
        Ok(s)
    }

    /// Same set, compared after trimming both windows.
    pub fn same_set(&self, other: &CellSet) -> bool {
        let a = self.trimmed();
        let b = other.trimmed();
        match a.aligned(&b) {
            Ok((a, b)) => a.bits == b.bits,
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn left_half(k: u32) -> CellSet {
        CellSet::from_predicate(2, k, |ix, _| ix < 1 << (k - 1)).unwrap()
    }

    #[test]
    fn bits_roundtrip_and_ops() {
        let mut a = Bits::zeros(70);
        a.set(3, true);
        a.set(69, true);
        assert_eq!(a.count_ones(), 2);
        assert_eq!(a.not().count_ones(), 68);
        let b = Bits::from_bytes(70, &a.to_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter_ones().collect::<Vec<_>>(), vec![3, 69]);
        assert!(Bits::from_bytes(70, &[0xff; 9]).is_none());
    }

    #[test]
    fn grid_cells_roundtrip() {
        let s = CellSet::from_cells(3, [(1, 2), (7, 0), (0, 7)]).unwrap();
        let mut cells = s.cells();
        cells.sort();
        assert_eq!(cells, vec![(0, 7), (1, 2), (7, 0)]);
        assert_eq!(s.count(), 3);
        assert_eq!(s.total(), 64);
    }

    #[test]
    fn point_membership_matches_cells() {
        let s = CellSet::from_cells(3, [(5, 2)]).unwrap();
        assert!(s.contains_point(5.5 / 8.0, 2.5 / 8.0));
        assert!(!s.contains_point(4.5 / 8.0, 2.5 / 8.0));
    }

    #[test]
    fn refine_and_trim_are_inverse() {
        let h = left_half(4);
        let t = h.trimmed();
        assert_eq!(t.window(), (0, 1));
        assert_eq!(t.count(), 1);
        let back = t.to_square().unwrap().refine(-4, 4).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn intersection_measure_matches_materialized() {
        let a = CellSet::from_predicate(2, 3, |ix, iy| (ix * 3 + iy * 5) % 7 < 3).unwrap();
        let b = CellSet::from_predicate(2, 3, |ix, iy| (ix ^ iy) & 1 == 0).unwrap();
        let direct = a.intersection(&b).unwrap().measure();
        assert_eq!(a.intersection_measure(&b).unwrap(), direct);
        let far = b.shifted(9).unwrap();
        assert_eq!(
            a.intersection_measure(&far).unwrap(),
            a.measure() * b.measure()
        );
        let near = b.shifted(2).unwrap();
        assert_eq!(
            a.intersection_measure(&near).unwrap(),
            a.intersection(&near).unwrap().measure()
        );
    }

    #[test]
    fn hex_roundtrip() {
        let s = CellSet::from_cells(2, [(0, 0), (3, 1), (2, 3)]).unwrap();
        let h = s.to_hex().unwrap();
        assert_eq!(h, "8140");
        assert_eq!(CellSet::from_hex(2, 2, &h).unwrap(), s);
        assert!(CellSet::from_hex(2, 2, "01").is_err());
    }

    #[test]
    fn cylinders() {
        let c = CellSet::cylinder(2, &[1, 0, 1], true).unwrap();
        assert_eq!(c.measure(), 0.125);
        // x in [5/8, 6/8)
        assert!(c.contains_point(0.65, 0.3));
        assert!(!c.contains_point(0.6, 0.3));
        let y = CellSet::cylinder(2, &[1], false).unwrap();
        assert!(y.contains_point(0.1, 0.7));
        assert!(!y.contains_point(0.1, 0.2));
    }
}
