//! Finite unions of half-open arcs on the circle `[0, 1)`.

use crate::error::{Error, Result};

/// Union of disjoint half-open arcs `[a, b)`, kept sorted and merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArcSet {
    arcs: Vec<(f64, f64)>,
}

impl ArcSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            arcs: vec![(0.0, 1.0)],
        }
    }

    /// Builds a set from arbitrary (possibly overlapping) arcs inside `[0, 1]`.
    pub fn new(arcs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut v = Vec::new();
        for (a, b) in arcs {
            if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b && b <= 1.0) {
                return Err(Error::InvalidSet(format!("arc [{a}, {b}) not inside [0, 1)")));
            }
            if a < b {
                v.push((a, b));
            }
        }
        Ok(Self::normalized(v))
    }

    /// Single arc starting at `start` of length `len`, wrapping around 1.
    pub fn wrapped(start: f64, len: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&len) || !start.is_finite() {
            return Err(Error::InvalidSet(format!("bad arc start {start}, length {len}")));
        }
        if len == 1.0 {
            return Ok(Self::full());
        }
        let a = start.rem_euclid(1.0);
        let b = a + len;
        if b <= 1.0 {
            Self::new([(a, b)])
        } else {
            Self::new([(a, 1.0), (0.0, b - 1.0)])
        }
    }

    fn normalized(mut v: Vec<(f64, f64)>) -> Self {
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { arcs: out }
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(|(a, b)| b - a).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = x.rem_euclid(1.0);
        self.arcs.iter().any(|&(a, b)| a <= x && x < b)
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.arcs.len() + 1);
        let mut cursor = 0.0;
        for &(a, b) in &self.arcs {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < 1.0 {
            out.push((cursor, 1.0));
        }
        Self { arcs: out }
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        Self::normalized(self.arcs.iter().chain(&other.arcs).copied().collect())
    }

    pub fn intersection(&self, other: &ArcSet) -> ArcSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.arcs.len() && j < other.arcs.len() {
            let (a0, a1) = self.arcs[i];
            let (b0, b1) = other.arcs[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { arcs: out }
    }

    pub fn difference(&self, other: &ArcSet) -> ArcSet {
        self.intersection(&other.complement())
    }

    pub fn intersection_measure(&self, other: &ArcSet) -> f64 {
        self.intersection(other).measure()
    }

    /// Image under the rotation `x -> x + shift (mod 1)`.
    pub fn rotated(&self, shift: f64) -> ArcSet {
        let s = shift.rem_euclid(1.0);
        if s == 0.0 || s == 1.0 {
            return self.clone();
        }
        let mut v = Vec::with_capacity(self.arcs.len() + 1);
        for &(a, b) in &self.arcs {
            let (a, b) = (a + s, b + s);
            if b <= 1.0 {
                v.push((a, b));
            } else if a >= 1.0 {
                v.push((a - 1.0, b - 1.0));
            } else {
                v.push((a, 1.0));
                v.push((0.0, b - 1.0));
            }
        }
        Self::normalized(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_merges() {
        let s = ArcSet::new([(0.5, 0.7), (0.1, 0.2), (0.15, 0.3), (0.7, 0.8)]).unwrap();
        assert_eq!(s.arcs(), &[(0.1, 0.3), (0.5, 0.8)]);
        assert!((s.measure() - 0.5).abs() < 1e-15);
        assert!(ArcSet::new([(0.2, 0.1)]).is_err());
        assert!(ArcSet::new([(-0.1, 0.1)]).is_err());
    }

    #[test]
    fn set_algebra() {
        let a = ArcSet::new([(0.0, 0.5)]).unwrap();
        let b = ArcSet::new([(0.25, 0.75)]).unwrap();
        assert_eq!(a.intersection(&b).arcs(), &[(0.25, 0.5)]);
        assert_eq!(a.union(&b).arcs(), &[(0.0, 0.75)]);
        assert_eq!(a.difference(&b).arcs(), &[(0.0, 0.25)]);
        assert_eq!(a.complement().arcs(), &[(0.5, 1.0)]);
        assert_eq!(ArcSet::empty().complement(), ArcSet::full());
    }

    #[test]
    fn rotation_wraps() {
        let a = ArcSet::new([(0.0, 0.5)]).unwrap();
        let r = a.rotated(0.75);
        assert_eq!(r.arcs(), &[(0.0, 0.25), (0.75, 1.0)]);
        assert_eq!(ArcSet::full().rotated(0.3).measure(), 1.0);
        assert!(r.contains(0.8) && !r.contains(0.5));
        let w = ArcSet::wrapped(0.9, 0.2).unwrap();
        assert_eq!(w.arcs().len(), 2);
        assert!((w.measure() - 0.2).abs() < 1e-15);
    }
}
