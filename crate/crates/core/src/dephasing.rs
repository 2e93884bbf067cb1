//! Interference cancellation for a discrete spectrum.
//!
//! With `rho` written in the energy basis and a rank-one projector `P`, the
//! amplitude `(rho(t)|P) = sum_ab rho_ab P_ba exp(-i (w_a - w_b) t)` splits
//! into a constant diagonal part and an interference part. For a
//! nondegenerate spectrum the time average of the interference part decays
//! like `1/T`; a degenerate coherent pair leaves a constant behind.
//!
//! ```
//! use qeh::dephasing::{amplitude_series, cesaro_average, SpectrumSpec};
//! use qeh::hilbert::{CMatrix, DensityState, Observable, C64};
//!
//! let spec = SpectrumSpec::new(vec![0.0, 1.0]).unwrap();
//! let rho = DensityState::new(CMatrix::from_element(2, 2, C64::new(0.5, 0.0))).unwrap();
//! let plus = Observable::new(CMatrix::from_element(2, 2, C64::new(0.5, 0.0))).unwrap();
//! let split = amplitude_series(&spec, &rho, &plus, &[0.0]).unwrap();
//! assert!((split.amplitude(0) - 1.0).abs() < 1e-12);
//! let avg = cesaro_average(&split, 1e4).unwrap();
//! assert!(avg.residual < 1e-3);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityState, Observable, C64};
use crate::stats::window_rms;

/// Energies closer than this count as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-12;

/// Fewest samples of a generated spectral envelope.
pub const MIN_PROFILE_SAMPLES: usize = 4096;

/// Half-width of a generated envelope, in envelope widths.
pub const PROFILE_HALF_SPAN: f64 = 6.0;

/// Sorted energy levels (phases are `w t`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    energies: Vec<f64>,
    min_gap: f64,
    degenerate: bool,
}

impl SpectrumSpec {
    /// Sorts `energies`; basis index `a` below refers to the sorted order.
    pub fn new(mut energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidParameter("spectrum is empty".into()));
        }
        if energies.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("energies must be finite".into()));
        }
        energies.sort_by(f64::total_cmp);
        let min_gap = energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            degenerate: min_gap < DEGENERACY_GAP,
            energies,
            min_gap,
        })
    }

    /// Whitespace- or newline-separated energies; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut energies = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                let w = tok
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("energy `{tok}`: {e}")))?;
                energies.push(w);
            }
        }
        Self::new(energies)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Smallest spacing; infinite for a single level.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// One off-diagonal contribution `c exp(-i delta t)` with
/// `c = rho_ab P_ba`, `delta = w_a - w_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceTerm {
    pub a: usize,
    pub b: usize,
    pub coefficient: C64,
    pub delta: f64,
}

/// Diagonal and interference parts of the amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSplit {
    pub p_diag: f64,
    /// Nonzero off-diagonal terms in row-major `(a, b)` order.
    pub terms: Vec<InterferenceTerm>,
    pub times: Vec<f64>,
    pub p_int: Vec<C64>,
}

impl AmplitudeSplit {
    /// `p_diag + Re p_int(t_i)`.
    pub fn amplitude(&self, i: usize) -> f64 {
        self.p_diag + self.p_int[i].re
    }

    /// Interference part at an arbitrary time.
    pub fn interference_at(&self, t: f64) -> C64 {
        self.terms
            .iter()
            .map(|term| term.coefficient * C64::from_polar(1.0, -term.delta * t))
            .sum()
    }
}

fn check_rank_one(p: &Observable) -> Result<()> {
    let m = p.matrix();
    let sq = m * m;
    let idem = (sq - m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if (p.trace() - 1.0).abs() > 1e-8 || idem > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "observable is not a rank-one projector (trace {}, |P^2 - P| = {idem:e})",
            p.trace()
        )));
    }
    Ok(())
}

/// Splits `(rho(t)|P)` at the given times. `rho` and `projector` are in
/// the sorted energy basis of `spec`.
pub fn amplitude_series(
    spec: &SpectrumSpec,
    rho: &DensityState,
    projector: &Observable,
    times: &[f64],
) -> Result<AmplitudeSplit> {
    let d = spec.len();
    for found in [rho.dim(), projector.dim()] {
        if found != d {
            return Err(Error::DimMismatch { expected: d, found });
        }
    }
    check_rank_one(projector)?;
    let (r, p) = (rho.matrix(), projector.matrix());
    let w = spec.energies();
    let p_diag = (0..d).map(|a| (r[(a, a)] * p[(a, a)]).re).sum();
    let mut terms = Vec::new();
    for a in 0..d {
        for b in 0..d {
            let c = r[(a, b)] * p[(b, a)];
            if a != b && c != C64::new(0.0, 0.0) {
                terms.push(InterferenceTerm {
                    a,
                    b,
                    coefficient: c,
                    delta: w[a] - w[b],
                });
            }
        }
    }
    let mut split = AmplitudeSplit {
        p_diag,
        terms,
        times: times.to_vec(),
        p_int: Vec::new(),
    };
    split.p_int = times.iter().map(|&t| split.interference_at(t)).collect();
    Ok(split)
}

/// Closed-form time average over `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroAverage {
    pub horizon: f64,
    pub average: f64,
    /// `|average - p_diag|`.
    pub residual: f64,
    /// `(2/T) sum |c| / |delta|` over the nondegenerate terms.
    pub bound: f64,
    /// Part of the average carried by degenerate pairs; it does not decay.
    pub plateau: f64,
    pub degenerate_pairs: Vec<(usize, usize)>,
}

impl CesaroAverage {
    pub fn flagged(&self) -> bool {
        !self.degenerate_pairs.is_empty()
    }
}

/// `(1/T) int_0^T exp(-i delta t) dt`.
fn mean_phase(delta: f64, horizon: f64) -> C64 {
    let x = delta * horizon;
    if x.abs() < 1e-8 {
        return C64::new(1.0, -x / 2.0);
    }
    C64::new(0.0, 1.0) * (C64::from_polar(1.0, -x) - 1.0) / x
}

/// Time average for a nondegenerate spectrum; coherent degenerate pairs
/// are an error.
pub fn cesaro_average(split: &AmplitudeSplit, horizon: f64) -> Result<CesaroAverage> {
    let avg = cesaro_average_with_plateau(split, horizon)?;
    if avg.flagged() {
        return Err(Error::DegenerateSpectrum {
            pairs: avg.degenerate_pairs,
        });
    }
    Ok(avg)
}

/// Time average that keeps degenerate pairs as a constant plateau and
/// lists them.
pub fn cesaro_average_with_plateau(split: &AmplitudeSplit, horizon: f64) -> Result<CesaroAverage> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let mut oscillating = C64::new(0.0, 0.0);
    let mut plateau = C64::new(0.0, 0.0);
    let mut bound = 0.0;
    let mut degenerate_pairs = Vec::new();
    for t in &split.terms {
        if t.delta.abs() < DEGENERACY_GAP {
            plateau += t.coefficient;
            degenerate_pairs.push((t.a, t.b));
        } else {
            oscillating += t.coefficient * mean_phase(t.delta, horizon);
            bound += 2.0 * t.coefficient.norm() / (t.delta.abs() * horizon);
        }
    }
    let average = split.p_diag + (oscillating + plateau).re;
    Ok(CesaroAverage {
        horizon,
        average,
        residual: (average - split.p_diag).abs(),
        bound,
        plateau: plateau.re,
        degenerate_pairs,
    })
}

/// RMS of the residual over `[2T, 4T)` divided by its RMS over `[T, 2T)`;
/// `0.5` in the `1/T` regime.
pub fn cesaro_rate(split: &AmplitudeSplit, horizon: f64) -> Result<f64> {
    let residual = |t: f64| {
        cesaro_average_with_plateau(split, t)
            .map(|a| a.residual)
            .unwrap_or(f64::NAN)
    };
    let first = window_rms(residual, horizon, 2.0 * horizon, RATE_SAMPLES);
    let second = window_rms(residual, 2.0 * horizon, 4.0 * horizon, RATE_SAMPLES);
    if !(first > 0.0) || !second.is_finite() {
        return Err(Error::InvalidParameter("residual vanishes on the window".into()));
    }
    Ok(second / first)
}

const RATE_SAMPLES: usize = 4096;

/// A sampled spectral envelope `f(k)` with trapezoid weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    k: Vec<f64>,
    weights: Vec<f64>,
}

impl SampledProfile {
    /// `k` strictly increasing; `values` finite.
    pub fn new(k: Vec<f64>, values: &[f64]) -> Result<Self> {
        if k.len() < 2 || values.len() != k.len() {
            return Err(Error::NonIntegrableProfile(format!(
                "need matching grids of at least 2 points, got {} and {}",
                k.len(),
                values.len()
            )));
        }
        if k.iter().chain(values).any(|x| !x.is_finite()) {
            return Err(Error::NonIntegrableProfile("non-finite sample".into()));
        }
        if k.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonIntegrableProfile("k grid must increase strictly".into()));
        }
        let n = k.len();
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i > 0 { k[i] - k[i - 1] } else { 0.0 };
                let right = if i + 1 < n { k[i + 1] - k[i] } else { 0.0 };
                values[i] * (left + right) / 2.0
            })
            .collect();
        let mass: f64 = weights.iter().map(|w| w.abs()).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::NonIntegrableProfile(format!("total mass {mass}")));
        }
        Ok(Self { k, weights })
    }

    /// Normalized Gaussian of standard deviation `width` around `centre`,
    /// sampled over `centre +- 6 width` with at least 4096 points.
    pub fn gaussian(centre: f64, width: f64, samples: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && centre.is_finite()) {
            return Err(Error::NonIntegrableProfile(format!("Gaussian width {width}")));
        }
        let n = samples.max(MIN_PROFILE_SAMPLES);
        let lo = centre - PROFILE_HALF_SPAN * width;
        let step = 2.0 * PROFILE_HALF_SPAN * width / (n - 1) as f64;
        let norm = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
        let k: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let values: Vec<f64> = k
            .iter()
            .map(|&x| norm * (-0.5 * ((x - centre) / width).powi(2)).exp())
            .collect();
        Self::new(k, &values)
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn samples(&self) -> usize {
        self.k.len()
    }

    /// `sum f(k) dk`.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `|sum_k f(k) exp(-i k x) dk|` over the sampled envelope.
pub fn quasi_continuous_interference(profile: &SampledProfile, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x must be finite and >= 0, got {x}")));
    }
    let s: C64 = profile
        .k
        .iter()
        .zip(&profile.weights)
        .map(|(&k, &w)| C64::from_polar(w, -k * x))
        .sum();
    Ok(s.norm())
}
