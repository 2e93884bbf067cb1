//! Classical measure-preserving maps, exact set and density correlations,
//! and the four level-tests of the classical hierarchy.
//!
//! Rotations act on [`ArcSet`]s. The cat map, the baker map and the
//! Bernoulli shifts act on [`CellSet`]s, where every image is exact.
//!
//! ```
//! use qeh::classical::{set_correlation, CellSet, MapSpec};
//!
//! let left = CellSet::from_predicate(2, 3, |ix, _| ix < 4).unwrap();
//! let bottom = CellSet::from_predicate(2, 3, |_, iy| iy < 4).unwrap();
//! let img = qeh::classical::apply_map(&MapSpec::Baker, &left, 1).unwrap();
//! assert!(img.same_set(&bottom));
//! assert_eq!(set_correlation(&MapSpec::Baker, &left, &left, 5).unwrap(), 0.0);
//! ```

mod arcs;
mod cells;
mod classify;
mod density;
mod sigma;

pub use arcs::ArcSet;
pub use cells::{Bits, CellSet, MAX_ASSIGNMENTS};
pub use classify::{classify_set_level, ClassifyParams};
pub use density::{density_correlation, frobenius_perron, koopman, GridDensity, GridFunction};
pub use sigma::{generate_sigma_sample, SigmaKind, SigmaSample, SigmaTerm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discrete-time measure-preserving automorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// `x -> x + alpha (mod 1)` on the circle.
    Rotation { alpha: f64 },
    /// `(x, y) -> (2x + y, x + y) (mod 1)` on the torus.
    Cat,
    /// `(x, y) -> (2x mod 1, (y + floor(2x)) / 2)`.
    Baker,
    /// Two-sided shift on base-`p` digits, realized as the generalized
    /// baker map `(x, y) -> (px mod 1, (y + floor(px)) / p)`.
    BernoulliShift { p: u32 },
}

impl MapSpec {
    pub fn name(&self) -> String {
        match self {
            MapSpec::Rotation { alpha } => format!("rotation({alpha})"),
            MapSpec::Cat => "cat".into(),
            MapSpec::Baker => "baker".into(),
            MapSpec::BernoulliShift { p } => format!("bernoulli_shift({p})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MapSpec::Rotation { alpha } if !alpha.is_finite() => Err(Error::InvalidParameter(
                format!("rotation angle must be finite, got {alpha}"),
            )),
            MapSpec::BernoulliShift { p } if p < 2 => Err(Error::InvalidParameter(format!(
                "bernoulli shift needs p >= 2, got {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// Digit base of the shift maps.
    fn shift_base(&self) -> Option<u32> {
        match *self {
            MapSpec::Baker => Some(2),
            MapSpec::BernoulliShift { p } => Some(p),
            _ => None,
        }
    }

    fn unsupported(&self, set: impl Into<String>) -> Error {
        Error::UnsupportedCombination {
            map: self.name(),
            set: set.into(),
        }
    }
}

/// Set representations the maps act on.
pub trait MeasurableSet: Clone + Sized {
    fn measure(&self) -> f64;
    fn meet(&self, other: &Self) -> Result<Self>;
    fn join(&self, other: &Self) -> Result<Self>;
    fn minus(&self, other: &Self) -> Result<Self>;
    /// `mu(self ∩ other)`, possibly without building the intersection.
    fn meet_measure(&self, other: &Self) -> Result<f64>;
    /// Image under `n` iterates of `map` (negative `n` uses the inverse).
    fn image(&self, map: &MapSpec, n: i64) -> Result<Self>;
}

impl MeasurableSet for ArcSet {
    fn measure(&self) -> f64 {
        ArcSet::measure(self)
    }

    fn meet(&self, other: &Self) -> Result<Self> {
        Ok(self.intersection(other))
    }

    fn join(&self, other: &Self) -> Result<Self> {
        Ok(self.union(other))
    }

    fn minus(&self, other: &Self) -> Result<Self> {
        Ok(self.difference(other))
    }

    fn meet_measure(&self, other: &Self) -> Result<f64> {
        Ok(self.intersection_measure(other))
    }

    fn image(&self, map: &MapSpec, n: i64) -> Result<Self> {
        map.validate()?;
        match *map {
            // n * alpha is reduced once, so long orbits do not accumulate error
            MapSpec::Rotation { alpha } => Ok(self.rotated((n as f64 * alpha).rem_euclid(1.0))),
            _ => Err(map.unsupported("arc set")),
        }
    }
}

impl MeasurableSet for CellSet {
    fn measure(&self) -> f64 {
        CellSet::measure(self)
    }

    fn meet(&self, other: &Self) -> Result<Self> {
        self.intersection(other)
    }

    fn join(&self, other: &Self) -> Result<Self> {
        self.union(other)
    }

    fn minus(&self, other: &Self) -> Result<Self> {
        self.difference(other)
    }

    fn meet_measure(&self, other: &Self) -> Result<f64> {
        self.intersection_measure(other)
    }

    fn image(&self, map: &MapSpec, n: i64) -> Result<Self> {
        map.validate()?;
        if n == 0 && !matches!(map, MapSpec::Rotation { .. }) {
            return Ok(self.clone());
        }
        match map {
            MapSpec::Rotation { .. } => Err(map.unsupported("cell set")),
            MapSpec::Cat => {
                let k = self.to_square()?.resolution().unwrap_or(0);
                let side = (self.base() as u64).pow(k);
                let m = cat_power(n, side);
                self.permuted(|x, y| {
                    (
                        (m[0] * x + m[1] * y) % side,
                        (m[2] * x + m[3] * y) % side,
                    )
                })
            }
            _ => {
                let base = map.shift_base().expect("shift map");
                if base != self.base() {
                    return Err(map.unsupported(format!("base-{} cell set", self.base())));
                }
                self.shifted(n)
            }
        }
    }
}

/// `[[2, 1], [1, 1]]^n` reduced modulo `modulus`, row-major. Negative
/// powers use the inverse `[[1, -1], [-1, 2]]`.
pub(crate) fn cat_power(n: i64, modulus: u64) -> [u64; 4] {
    let md = modulus.max(1) as u128;
    let mul = |a: [u64; 4], b: [u64; 4]| -> [u64; 4] {
        let e = |i: usize, j: usize| {
            ((a[2 * i] as u128 * b[j] as u128 + a[2 * i + 1] as u128 * b[2 + j] as u128) % md)
                as u64
        };
        [e(0, 0), e(0, 1), e(1, 0), e(1, 1)]
    };
    let neg = |v: u64| ((md - v as u128 % md) % md) as u64;
    let base = if n >= 0 {
        [2, 1, 1, 1].map(|v| v % md as u64)
    } else {
        [1, neg(1), neg(1), 2 % md as u64]
    };
    let mut acc = [1 % md as u64, 0, 0, 1 % md as u64];
    let mut b = base;
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(acc, b);
        }
        b = mul(b, b);
        e >>= 1;
    }
    acc
}

/// `T^n` applied to a set.
pub fn apply_map<S: MeasurableSet>(map: &MapSpec, set: &S, n: i64) -> Result<S> {
    set.image(map, n)
}

/// `mu(T^n B ∩ A) - mu(A) mu(B)`.
pub fn set_correlation<S: MeasurableSet>(map: &MapSpec, a: &S, b: &S, n: i64) -> Result<f64> {
    let tb = b.image(map, n)?;
    Ok(a.meet_measure(&tb)? - a.measure() * b.measure())
}

/// Cesàro mean `(1/N) sum_{k<N} C(T^k B, A)`.
pub fn cesaro_correlation<S: MeasurableSet>(
    map: &MapSpec,
    a: &S,
    b: &S,
    horizon: u64,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("Cesàro horizon must be >= 1".into()));
    }
    let mut sum = 0.0;
    for k in 0..horizon {
        sum += set_correlation(map, a, b, k as i64)?;
    }
    Ok(sum / horizon as f64)
}
