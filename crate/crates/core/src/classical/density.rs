//! Piecewise-constant functions on digit-window cells, with the
//! Frobenius–Perron and Koopman operators of the exact maps.

use super::{cat_power, CellSet, MapSpec};
use crate::error::{Error, Result};

/// Real function that is constant on the cells of a digit window.
/// Cell indexing matches [`CellSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    base: u32,
    lo: i32,
    hi: i32,
    values: Vec<f64>,
}

impl AsRef<GridFunction> for GridFunction {
    fn as_ref(&self) -> &GridFunction {
        self
    }
}

impl GridFunction {
    /// Function on the `2^k x 2^k` grid, `f(ix, iy)` per cell.
    pub fn from_cells(k: u32, f: impl FnMut(u64, u64) -> f64) -> Result<Self> {
        Self::from_cells_with_base(2, k, f)
    }

    pub fn from_cells_with_base(base: u32, k: u32, mut f: impl FnMut(u64, u64) -> f64) -> Result<Self> {
        let grid = CellSet::empty_with_base(base, k)?;
        let side = (base as u64).pow(k);
        let mut values = vec![0.0; grid.total() as usize];
        for iy in 0..side {
            for ix in 0..side {
                let idx = cell_index(base, k, ix, iy);
                values[idx] = f(ix, iy);
            }
        }
        Ok(Self {
            base,
            lo: -(k as i32),
            hi: k as i32,
            values,
        })
    }

    pub fn constant(k: u32, value: f64) -> Result<Self> {
        Self::from_cells(k, |_, _| value)
    }

    /// Characteristic function of a set, on the set's own window.
    pub fn indicator(set: &CellSet) -> Self {
        let (lo, hi) = set.window();
        let mut values = vec![0.0; set.total() as usize];
        for i in set.bits().iter_ones() {
            values[i] = 1.0;
        }
        Self {
            base: set.base(),
            lo,
            hi,
            values,
        }
    }

    pub fn window(&self) -> (i32, i32) {
        (self.lo, self.hi)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on grid cell `(ix, iy)` of a square window.
    pub fn at_cell(&self, ix: u64, iy: u64) -> f64 {
        assert_eq!(self.lo, -self.hi, "square window required");
        self.values[cell_index(self.base, self.hi as u32, ix, iy)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// Same function on a wider window.
    pub fn refine(&self, lo: i32, hi: i32) -> Result<Self> {
        if lo > self.lo || hi < self.hi {
            return Err(Error::InvalidParameter(format!(
                "cannot refine window [{}, {}) to [{lo}, {hi})",
                self.lo, self.hi
            )));
        }
        let n = (self.base as u64)
            .checked_pow((hi - lo) as u32)
            .filter(|&n| n <= super::MAX_ASSIGNMENTS)
            .ok_or_else(|| Error::InvalidParameter("refined window too large".into()))?;
        let below = (self.base as u64).pow((self.lo - lo) as u32);
        let span = self.values.len() as u64;
        let values = (0..n)
            .map(|i| self.values[((i / below) % span) as usize])
            .collect();
        Ok(Self {
            base: self.base,
            lo,
            hi,
            values,
        })
    }

    fn to_square(&self) -> Result<Self> {
        let k = (-self.lo).max(self.hi).max(0);
        self.refine(-k, k)
    }

    fn describe(&self) -> String {
        format!("base-{} window [{}, {})", self.base, self.lo, self.hi)
    }

    /// Push-forward by `n` steps: `(P^n f)(x) = f(T^{-n} x)`.
    pub fn transported(&self, map: &MapSpec, n: i64) -> Result<Self> {
        map.validate()?;
        match map {
            MapSpec::Rotation { .. } => Err(Error::UnsupportedCombination {
                map: map.name(),
                set: "grid function".into(),
            }),
            MapSpec::Cat => {
                let sq = self.to_square()?;
                let k = sq.hi as u32;
                let side = (sq.base as u64).pow(k);
                let m = cat_power(n, side);
                let mut values = vec![0.0; sq.values.len()];
                for iy in 0..side {
                    for ix in 0..side {
                        let jx = (m[0] * ix + m[1] * iy) % side;
                        let jy = (m[2] * ix + m[3] * iy) % side;
                        values[cell_index(sq.base, k, jx, jy)] =
                            sq.values[cell_index(sq.base, k, ix, iy)];
                    }
                }
                Ok(Self { values, ..sq })
            }
            MapSpec::Baker | MapSpec::BernoulliShift { .. } => {
                let p = if let MapSpec::BernoulliShift { p } = map { *p } else { 2 };
                if p != self.base {
                    return Err(Error::UnsupportedCombination {
                        map: map.name(),
                        set: format!("base-{} grid function", self.base),
                    });
                }
                let n = i32::try_from(n)
                    .map_err(|_| Error::InvalidParameter("shift offset out of range".into()))?;
                Ok(Self {
                    lo: self.lo - n,
                    hi: self.hi - n,
                    ..self.clone()
                })
            }
        }
    }
}

/// Bit index of grid cell `(ix, iy)` in the square window `[-k, k)`.
fn cell_index(base: u32, k: u32, ix: u64, iy: u64) -> usize {
    let b = base as u64;
    let side = b.pow(k);
    let mut rev = 0;
    let mut v = ix;
    for _ in 0..k {
        rev = rev * b + v % b;
        v /= b;
    }
    (iy + side * rev) as usize
}

/// Probability density with respect to the uniform measure: nonnegative
/// cell values with mean 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity(GridFunction);

impl AsRef<GridFunction> for GridDensity {
    fn as_ref(&self) -> &GridFunction {
        &self.0
    }
}

impl GridDensity {
    pub fn new(f: GridFunction) -> Result<Self> {
        if let Some(v) = f.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("cell value {v} is not a nonnegative number")));
        }
        let mean = f.mean();
        if (mean - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDensity(format!("mean {mean} differs from 1")));
        }
        Ok(Self(f))
    }

    /// Uniform density on the `2^k x 2^k` grid.
    pub fn uniform(k: u32) -> Result<Self> {
        Self::new(GridFunction::constant(k, 1.0)?)
    }

    /// `indicator(set) / mu(set)`.
    pub fn normalized_indicator(set: &CellSet) -> Result<Self> {
        let m = set.measure();
        if m == 0.0 {
            return Err(Error::InvalidDensity("set has measure zero".into()));
        }
        Self::new(GridFunction::indicator(set).scaled(1.0 / m))
    }

    pub fn function(&self) -> &GridFunction {
        &self.0
    }

    pub fn into_function(self) -> GridFunction {
        self.0
    }
}

/// One step of the Frobenius–Perron operator: `(Pf)(x) = f(T^{-1} x)`.
pub fn frobenius_perron(map: &MapSpec, f: &GridDensity) -> Result<GridDensity> {
    // measure preservation makes P a permutation of cell values, so the
    // mean and positivity carry over unchanged
    Ok(GridDensity(f.0.transported(map, 1)?))
}

/// One step of the Koopman operator: `(Ug)(x) = g(T x)`.
pub fn koopman(map: &MapSpec, g: &GridDensity) -> Result<GridDensity> {
    Ok(GridDensity(g.0.transported(map, -1)?))
}

/// `<f, g> - <f, 1><1, g>` under the uniform cell measure.
pub fn density_correlation<F, G>(f: &F, g: &G) -> Result<f64>
where
    F: AsRef<GridFunction>,
    G: AsRef<GridFunction>,
{
    let (f, g) = (f.as_ref(), g.as_ref());
    if f.base != g.base || f.lo != g.lo || f.hi != g.hi {
        return Err(Error::ResolutionMismatch {
            left: f.describe(),
            right: g.describe(),
        });
    }
    let n = f.values.len() as f64;
    let fg = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>() / n;
    Ok(fg - f.mean() * g.mean())
}
