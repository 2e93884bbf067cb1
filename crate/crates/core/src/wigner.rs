//! Discrete Weyl-Wigner calculus on the `N x N` phase-space torus, `N` odd.
//!
//! Phase-point operators `A(q, p) = sum_s w^(2ps) |q+s><q-s|` with
//! `w = exp(2 pi i / N)` are Hermitian, have unit trace and satisfy
//! `Tr(A(x) A(y)) = N delta_xy`. The symbol of `O` is
//! `W_O(q, p) = Tr(O A(q, p))`, so that
//!
//! ```text
//! Tr(a b) = (1/N) sum_{q,p} W_a(q, p) W_b(q, p)
//! O       = (1/N) sum_{q,p} W_O(q, p) A(q, p)
//! ```
//!
//! hold exactly.
//!
//! ```
//! use qeh::hilbert::{DensityState, Observable};
//! use qeh::wigner::{pairing_check, wigner_transform};
//!
//! let id = Observable::identity(5);
//! let w = wigner_transform(&id).unwrap();
//! assert!(w.values().iter().all(|z| (z.re - 1.0).abs() < 1e-12));
//! assert!(pairing_check(&id, &id).unwrap() < 1e-12);
//! ```

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::hilbert::{hermitize, CMatrix, DensityState, Observable, C64};

/// Largest imaginary part (relative) tolerated in a Hermitian symbol.
pub const REALITY_TOL: f64 = 1e-10;

/// Anything with an operator matrix.
pub trait Operator {
    fn operator(&self) -> &CMatrix;
}

impl Operator for CMatrix {
    fn operator(&self) -> &CMatrix {
        self
    }
}

impl Operator for Observable {
    fn operator(&self) -> &CMatrix {
        self.matrix()
    }
}

impl Operator for DensityState {
    fn operator(&self) -> &CMatrix {
        self.matrix()
    }
}

/// Symbol values `W(q, p)`, stored row-major in `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSymbol {
    dim: usize,
    values: Vec<C64>,
}

impl WeylSymbol {
    pub fn new(dim: usize, values: Vec<C64>) -> Result<Self> {
        check_odd(dim)?;
        if values.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                found: values.len(),
            });
        }
        Ok(Self { dim, values })
    }

    /// Real symbol from `f(q, p)`.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_odd(dim)?;
        let values = (0..dim * dim)
            .map(|i| C64::from(f(i / dim, i % dim)))
            .collect();
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, q: usize, p: usize) -> C64 {
        self.values[q * self.dim + p]
    }

    /// Phase-space average.
    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / (self.values.len() as f64)
    }

    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

fn check_odd(dim: usize) -> Result<()> {
    if dim % 2 == 0 {
        return Err(Error::EvenDimension(dim));
    }
    Ok(())
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    check_odd(m.nrows())?;
    Ok(m.nrows())
}

fn inverse_fft(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// `W(q, p) = Tr(op A(q, p))`.
pub fn wigner_transform<O: Operator + ?Sized>(op: &O) -> Result<WeylSymbol> {
    let m = op.operator();
    let n = check_square(m)?;
    let fft = inverse_fft(n);
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    let mut g = vec![C64::new(0.0, 0.0); n];
    for q in 0..n {
        // g(s) = <q-s|O|q+s>; W(q, p) = sum_s g(s) w^(2ps)
        for (s, gs) in g.iter_mut().enumerate() {
            *gs = m[((q + n - s) % n, (q + s) % n)];
        }
        fft.process(&mut g);
        for p in 0..n {
            values[q * n + p] = g[(2 * p) % n];
        }
    }
    Ok(WeylSymbol { dim: n, values })
}

/// `(1/N) sum_{q,p} W(q, p) A(q, p)` for a general symbol.
pub fn inverse_weyl_matrix(symbol: &WeylSymbol) -> CMatrix {
    let n = symbol.dim;
    let fft = inverse_fft(n);
    let mut m = CMatrix::zeros(n, n);
    let mut row = vec![C64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    for q in 0..n {
        row.copy_from_slice(&symbol.values[q * n..(q + 1) * n]);
        fft.process(&mut row);
        // <q+s|O|q-s> = (1/N) sum_p W(q, p) w^(2ps)
        for s in 0..n {
            m[((q + s) % n, (q + n - s) % n)] = row[(2 * s) % n] * scale;
        }
    }
    m
}

/// Inverse transform of a real symbol.
pub fn inverse_weyl(symbol: &WeylSymbol) -> Result<Observable> {
    let scale = symbol.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let im = symbol.max_imaginary();
    if im > REALITY_TOL * scale {
        return Err(Error::NotHermitian { residual: im });
    }
    let real = WeylSymbol {
        dim: symbol.dim,
        values: symbol.values.iter().map(|z| C64::from(z.re)).collect(),
    };
    Observable::new(hermitize(&inverse_weyl_matrix(&real)))
}

/// `|Tr(a b) - (1/N) sum W_a W_b|`.
pub fn pairing_check<A: Operator + ?Sized, B: Operator + ?Sized>(a: &A, b: &B) -> Result<f64> {
    let (ma, mb) = (a.operator(), b.operator());
    let n = check_square(ma)?;
    if mb.nrows() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: mb.nrows(),
        });
    }
    let (wa, wb) = (wigner_transform(ma)?, wigner_transform(mb)?);
    let phase: C64 = wa.values.iter().zip(&wb.values).map(|(x, y)| x * y).sum();
    let trace = (ma * mb).trace();
    Ok((trace - phase / n as f64).norm())
}

/// `max |W_ab - W_a W_b|`: the finite-`N` gap between operator and
/// function products.
pub fn product_symbol_discrepancy<A: Operator + ?Sized, B: Operator + ?Sized>(a: &A, b: &B) -> Result<f64> {
    let (ma, mb) = (a.operator(), b.operator());
    let n = check_square(ma)?;
    if mb.nrows() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: mb.nrows(),
        });
    }
    let wab = wigner_transform(&(ma * mb))?;
    let (wa, wb) = (wigner_transform(ma)?, wigner_transform(mb)?);
    Ok(wab
        .values
        .iter()
        .zip(wa.values.iter().zip(&wb.values))
        .map(|(z, (x, y))| (z - x * y).norm())
        .fold(0.0, f64::max))
}

/// Quantization of a phase-space indicator.
#[derive(Debug, Clone)]
pub struct QuasiProjector {
    pub operator: Observable,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `max_i |l_i^2 - l_i|`, the operator norm of `P^2 - P`.
    pub idempotency_residual: f64,
    /// Number of phase points in the set.
    pub cells: usize,
}

/// Inverse transform of the indicator of `{(q, p) : member(q, p)}`.
pub fn quantize_indicator(dim: usize, member: impl Fn(usize, usize) -> bool) -> Result<QuasiProjector> {
    let symbol = WeylSymbol::from_fn(dim, |q, p| if member(q, p) { 1.0 } else { 0.0 })?;
    let cells = symbol.values.iter().filter(|z| z.re == 1.0).count();
    let operator = inverse_weyl(&symbol)?;
    let mut eigenvalues: Vec<f64> = operator
        .matrix()
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(f64::total_cmp);
    let idempotency_residual = eigenvalues
        .iter()
        .map(|l| (l * l - l).abs())
        .fold(0.0, f64::max);
    Ok(QuasiProjector {
        operator,
        eigenvalues,
        idempotency_residual,
        cells,
    })
}

/// `(1/N) Tr(f g) - (1/N^2) Tr f Tr g`: the correlation of the symbols in
/// the phase-space measure of total mass 1.
pub fn normalized_correlation(f: &Observable, g: &Observable) -> Result<f64> {
    let n = check_square(f.matrix())?;
    if g.dim() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: g.dim(),
        });
    }
    let nf = n as f64;
    let pair = (f.matrix() * g.matrix()).trace().re;
    Ok(pair / nf - f.trace() * g.trace() / (nf * nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `A(q, p)` assembled entry by entry.
    fn phase_point(n: usize, q: usize, p: usize) -> CMatrix {
        let mut a = CMatrix::zeros(n, n);
        for s in 0..n {
            let phase = 2.0 * std::f64::consts::PI * (2 * p * s) as f64 / n as f64;
            a[((q + s) % n, (q + n - s) % n)] += C64::from_polar(1.0, phase);
        }
        a
    }

    #[test]
    fn fft_transform_matches_direct_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 7;
        let m = random::complex_gaussian(&mut rng, n, n);
        let w = wigner_transform(&m).unwrap();
        for q in 0..n {
            for p in 0..n {
                let direct = (&m * phase_point(n, q, p)).trace();
                assert!((w.at(q, p) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_point_algebra() {
        let n = 5;
        let mut total = CMatrix::zeros(n, n);
        for q in 0..n {
            for p in 0..n {
                let a = phase_point(n, q, p);
                assert!((a.trace() - C64::from(1.0)).norm() < 1e-12);
                assert!((&a - a.adjoint()).norm() < 1e-12);
                let b = phase_point(n, (q + 2) % n, (p + 1) % n);
                assert!((&a * &b).trace().norm() < 1e-10);
                assert!(((&a * &a).trace() - C64::from(n as f64)).norm() < 1e-10);
                total += a;
            }
        }
        assert!((total - CMatrix::identity(n, n) * C64::from(n as f64)).norm() < 1e-10);
    }

    #[test]
    fn position_projector_lives_on_its_column() {
        let n = 9;
        let w = wigner_transform(&Observable::projector(n, [4])).unwrap();
        for q in 0..n {
            for p in 0..n {
                let expect = if q == 4 { 1.0 } else { 0.0 };
                assert!((w.at(q, p) - C64::from(expect)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn even_dimension_rejected() {
        assert_eq!(
            wigner_transform(&Observable::identity(4)).unwrap_err(),
            Error::EvenDimension(4)
        );
        assert!(WeylSymbol::from_fn(6, |_, _| 1.0).is_err());
        assert!(pairing_check(&Observable::identity(3), &Observable::identity(5)).is_err());
    }

    #[test]
    fn constant_symbol_is_multiple_of_identity() {
        let o = inverse_weyl(&WeylSymbol::from_fn(7, |_, _| 2.5).unwrap()).unwrap();
        assert!((o.matrix() - CMatrix::identity(7, 7) * C64::from(2.5)).norm() < 1e-12);
    }

    #[test]
    fn density_symbol_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [3, 11] {
            let rho = random::density(&mut rng, n);
            let w = wigner_transform(&rho).unwrap();
            assert!((w.mean() - C64::from(1.0 / n as f64)).norm() < 1e-12);
            assert!(w.max_imaginary() < 1e-12);
        }
    }

    #[test]
    fn pure_state_pairs_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random::pure(&mut rng, 9);
        let r = pairing_check(&rho, &rho).unwrap();
        assert!(r < 1e-12);
        let w = wigner_transform(&rho).unwrap();
        let s: f64 = w.real_values().iter().map(|x| x * x).sum::<f64>() / 9.0;
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_grid_quasi_projector() {
        let qp = quantize_indicator(15, |q, _| q < 7).unwrap();
        assert_eq!(qp.cells, 7 * 15);
        assert!((qp.operator.trace() - 7.0).abs() < 1e-12);
        // a column band is a function of q only, so it quantizes exactly
        assert!(qp.idempotency_residual < 1e-12);
        let disk = quantize_indicator(15, |q, p| {
            let (x, y) = (q as f64 - 7.0, p as f64 - 7.0);
            x * x + y * y < 20.0
        })
        .unwrap();
        assert!(disk.idempotency_residual > 1e-3);
        assert_eq!(disk.eigenvalues.len(), 15);
    }
}
