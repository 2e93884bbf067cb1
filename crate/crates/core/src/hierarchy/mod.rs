//! The four quantum level-tests on a stroboscopic trajectory.
//!
//! Every test compares `(rho(n)|O)` with `(rho*|O)`, where `rho*` is the
//! weak limit of the trajectory. They differ only in how time enters:
//!
//! | level      | residual                                                    |
//! |------------|-------------------------------------------------------------|
//! | ergodic    | Cesàro mean over `[0, N)`                                   |
//! | mixing     | max over the tail `[N/2, N]`                                |
//! | Kolmogorov | multi-time products `O_1 O_2(n+m_2) ...`, tail of the grid |
//! | Bernoulli  | max over all of `[0, N]`                                    |
//!
//! ```
//! use qeh::hierarchy::{estimate_equilibrium, test_quantum_mixing, EquilibriumMethod, Trajectory};
//! use qeh::hilbert::{DensityState, Observable, Unitary};
//!
//! let step = Unitary::from_phases(&[0.0, 0.3, 1.1]);
//! let traj = Trajectory::new(DensityState::diagonal(&[0.5, 0.3, 0.2]).unwrap(), step).unwrap();
//! let eq = estimate_equilibrium(&traj, EquilibriumMethod::EigenbasisDiagonal).unwrap();
//! let r = test_quantum_mixing(&traj, &eq, &[Observable::diagonal(&[1.0, -1.0, 2.0])], 100, 1e-2).unwrap();
//! assert!(r.passed && r.residual < 1e-12);
//! ```

mod trajectory;

pub use trajectory::{HeisenbergFactor, StepOperator, Trajectory};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    hermitize, trace_pair, CMatrix, DensityState, Observable, C64, DEGENERACY_TOL,
};
use crate::verdict::{HierarchyVerdict, Level, LevelResult};

/// How `rho*` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EquilibriumMethod {
    /// Block-diagonal part of `rho` in the step's eigenbasis.
    EigenbasisDiagonal,
    /// `(1/N) sum_{n<N} rho(n)`.
    Cesaro { horizon: usize },
}

#[derive(Debug, Clone)]
pub struct EquilibriumState {
    pub state: DensityState,
    pub method: EquilibriumMethod,
    /// `max |U rho* U^dag - rho*|`.
    pub residual: f64,
    /// Eigenphase clusters of size > 1 (eigenbasis method only).
    pub degenerate_blocks: Vec<Vec<usize>>,
}

impl EquilibriumState {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_blocks.is_empty()
    }

    /// `(rho*|O)`.
    pub fn pair(&self, obs: &Observable) -> Result<f64> {
        trace_pair(&self.state, obs)
    }
}

fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Estimates the weak limit `rho*` of a trajectory.
///
/// The eigenbasis method keeps `<k|rho|k'>` for every pair of eigenvectors
/// whose phases coincide within [`DEGENERACY_TOL`], which is exactly the
/// infinite-time Cesàro mean. For a nondegenerate step this is the
/// diagonal `sum_k rho_kk |k><k|`; when degenerate clusters exist they are
/// listed in the result so callers can mark their verdicts.
pub fn estimate_equilibrium(traj: &Trajectory, method: EquilibriumMethod) -> Result<EquilibriumState> {
    let (state, blocks) = match method {
        EquilibriumMethod::EigenbasisDiagonal => {
            let eig = traj.eigensystem()?;
            let blocks = eig.degenerate_blocks(DEGENERACY_TOL);
            let mut label = vec![0usize; eig.dim()];
            for (b, block) in blocks.iter().enumerate() {
                for &k in block {
                    label[k] = b;
                }
            }
            let mut tilde = eig.to_eigenbasis(traj.initial().matrix());
            let d = eig.dim();
            for a in 0..d {
                for b in 0..d {
                    if label[a] != label[b] {
                        tilde[(a, b)] = C64::new(0.0, 0.0);
                    }
                }
            }
            let m = hermitize(&eig.from_eigenbasis(&tilde));
            let degenerate: Vec<_> = blocks.into_iter().filter(|b| b.len() > 1).collect();
            (DensityState::from_trusted(m), degenerate)
        }
        EquilibriumMethod::Cesaro { horizon } => (traj.cesaro_state(horizon)?, Vec::new()),
    };
    let u = traj.step().matrix();
    let moved = u * state.matrix() * u.adjoint();
    let residual = max_entry_diff(&moved, state.matrix());
    Ok(EquilibriumState {
        state,
        method,
        residual,
        degenerate_blocks: blocks,
    })
}

/// Entrywise distance between the eigenbasis and Cesàro estimates.
pub fn equilibrium_method_distance(traj: &Trajectory, horizon: usize) -> Result<f64> {
    let a = estimate_equilibrium(traj, EquilibriumMethod::EigenbasisDiagonal)?;
    let b = estimate_equilibrium(traj, EquilibriumMethod::Cesaro { horizon })?;
    Ok(max_entry_diff(a.state.matrix(), b.state.matrix()))
}

fn check_observables(traj: &Trajectory, observables: &[Observable]) -> Result<()> {
    for o in observables {
        if o.dim() != traj.dim() {
            return Err(Error::DimMismatch {
                expected: traj.dim(),
                found: o.dim(),
            });
        }
    }
    Ok(())
}

/// `|(1/N) sum_{k<N} (rho(k)|O) - (rho*|O)|` for `N = 1..=n_max`, one
/// series per observable.
pub fn cesaro_residual_series(
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    n_max: usize,
) -> Result<Vec<Vec<f64>>> {
    check_observables(traj, observables)?;
    if n_max == 0 {
        return Ok(vec![Vec::new(); observables.len()]);
    }
    let series = traj.expectation_series(observables, n_max - 1)?;
    observables
        .iter()
        .zip(series)
        .map(|(o, s)| {
            let target = eq.pair(o)?;
            let mut sum = 0.0;
            Ok(s.iter()
                .enumerate()
                .map(|(k, v)| {
                    sum += v;
                    (sum / (k + 1) as f64 - target).abs()
                })
                .collect())
        })
        .collect()
}

/// Ergodic level: `max_O |(1/N) sum_{k<N} (rho(k)|O) - (rho*|O)|`.
pub fn test_quantum_ergodic(
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    horizon: usize,
    epsilon: f64,
) -> Result<LevelResult> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    check_observables(traj, observables)?;
    let series = traj.expectation_series(observables, horizon - 1)?;
    let mut residual = 0.0f64;
    for (o, s) in observables.iter().zip(&series) {
        let mean = s.iter().sum::<f64>() / horizon as f64;
        residual = residual.max((mean - eq.pair(o)?).abs());
    }
    Ok(LevelResult::new(Level::Ergodic, residual, epsilon).with_param("horizon", horizon as f64))
}

fn max_deviation(
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    from: usize,
    to: usize,
) -> Result<f64> {
    check_observables(traj, observables)?;
    let series = traj.expectation_series(observables, to)?;
    let mut residual = 0.0f64;
    for (o, s) in observables.iter().zip(&series) {
        let target = eq.pair(o)?;
        for v in &s[from..=to] {
            residual = residual.max((v - target).abs());
        }
    }
    Ok(residual)
}

/// Mixing level: max over the tail window `[N/2, N]` of `|(rho(n)|O) - (rho*|O)|`.
pub fn test_quantum_mixing(
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    horizon: usize,
    epsilon: f64,
) -> Result<LevelResult> {
    let residual = max_deviation(traj, eq, observables, horizon / 2, horizon)?;
    Ok(LevelResult::new(Level::Mixing, residual, epsilon)
        .with_param("window_start", (horizon / 2) as f64)
        .with_param("window_end", horizon as f64))
}

/// Bernoulli level: max over every `n` in `[0, N]`.
pub fn test_quantum_bernoulli(
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    horizon: usize,
    epsilon: f64,
) -> Result<LevelResult> {
    let residual = max_deviation(traj, eq, observables, 0, horizon)?;
    Ok(LevelResult::new(Level::Bernoulli, residual, epsilon).with_param("n_max", horizon as f64))
}

/// Observables `O_1..O_J` with time offsets `m_1..m_J` for the
/// Kolmogorov test.
#[derive(Debug, Clone)]
pub struct KolmogorovFamily {
    pub observables: Vec<Observable>,
    pub offsets: Vec<u64>,
}

impl KolmogorovFamily {
    pub fn new(observables: Vec<Observable>, offsets: Vec<u64>) -> Result<Self> {
        if observables.len() < 2 {
            return Err(Error::EmptyProduct {
                found: observables.len(),
            });
        }
        if offsets.len() != observables.len() {
            return Err(Error::DimMismatch {
                expected: observables.len(),
                found: offsets.len(),
            });
        }
        Ok(Self { observables, offsets })
    }

    /// `O_1 = O`, `O_j = I` for `j >= 2`, `m_1 = 0`: the product collapses
    /// to `O` and `D(n)` to the mixing deviation.
    pub fn mixing_reduction(obs: &Observable, j: usize) -> Result<Self> {
        let mut observables = vec![obs.clone()];
        observables.extend((1..j.max(2)).map(|_| Observable::identity(obs.dim())));
        let offsets = vec![0; observables.len()];
        Self::new(observables, offsets)
    }

    /// `O` followed by `j - 1` seeded random Hermitian observables with
    /// offsets in `[0, max_offset]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, obs: &Observable, j: usize, max_offset: u64) -> Result<Self> {
        let mut observables = vec![obs.clone()];
        let mut offsets = vec![0];
        for _ in 1..j.max(2) {
            let h = crate::hilbert::random::hermitian(rng, obs.dim());
            // unit operator norm keeps the product bounded
            let scale = h.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max) * obs.dim() as f64;
            observables.push(Observable::new(h.matrix() / C64::from(scale.max(1e-300)))?);
            offsets.push(rng.random_range(0..=max_offset));
        }
        Self::new(observables, offsets)
    }
}

/// `D(n)` for one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovTerm {
    pub n: u64,
    pub value: f64,
    /// `|Im Tr(rho O_1 prod O_j)|`, nonzero for non-commuting factors.
    pub imaginary: f64,
}

/// `D(n) = (rho(n+m_1)|O_1 prod_{j>=2} O_j(n+m_j)) - prod_{j>=2} (rho(n+m_1)|O_j(n+m_j)) (rho*|O_1)`
/// for every `n` in `n_grid`, products taken left to right.
pub fn kolmogorov_terms(
    traj: &Trajectory,
    eq: &EquilibriumState,
    family: &KolmogorovFamily,
    n_grid: &[u64],
) -> Result<Vec<KolmogorovTerm>> {
    check_observables(traj, &family.observables)?;
    let target = eq.pair(&family.observables[0])?;
    let first = family.observables[0].matrix();
    let factors = family.observables[1..]
        .iter()
        .map(|o| traj.heisenberg_factor(o.matrix()))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let t1 = (n + family.offsets[0]) as usize;
        let comps = traj.components(t1);
        let mut paired = C64::new(0.0, 0.0);
        let mut singles = vec![0.0; factors.len()];
        for (w, psi) in traj.weights().iter().zip(&comps) {
            // right to left: O_J(t_J) first
            let mut chain = psi.clone();
            for (f, &m) in factors.iter().zip(&family.offsets[1..]).rev() {
                chain = traj.apply_heisenberg(f, n + m, &chain);
            }
            paired += psi.dotc(&(first * chain)) * *w;
            for ((f, &m), s) in factors.iter().zip(&family.offsets[1..]).zip(singles.iter_mut()) {
                *s += w * psi.dotc(&traj.apply_heisenberg(f, n + m, psi)).re;
            }
        }
        let scalar: f64 = singles.iter().product();
        out.push(KolmogorovTerm {
            n,
            value: paired.re - scalar * target,
            imaginary: paired.im.abs(),
        });
    }
    Ok(out)
}

/// Entries of `n_grid` with `n >= max(n_grid) / 2`.
fn tail_half(n_grid: &[u64]) -> impl Iterator<Item = usize> + '_ {
    let top = n_grid.iter().copied().max().unwrap_or(0);
    n_grid.iter().enumerate().filter(move |(_, &n)| n >= top / 2).map(|(i, _)| i)
}

/// Kolmogorov level: `max |D(n)|` over the tail half of `n_grid` (the
/// entries with `n >= max(n_grid)/2`) and over all families.
pub fn test_quantum_kolmogorov(
    traj: &Trajectory,
    eq: &EquilibriumState,
    families: &[KolmogorovFamily],
    n_grid: &[u64],
    epsilon: f64,
) -> Result<LevelResult> {
    let (residual, imaginary) = kolmogorov_residual(traj, eq, families, n_grid, true)?;
    let j = families.iter().map(|f| f.observables.len()).max().unwrap_or(0);
    Ok(LevelResult::new(Level::Kolmogorov, residual, epsilon)
        .with_param("J", j as f64)
        .with_param("families", families.len() as f64)
        .with_param("grid_points", n_grid.len() as f64)
        .with_param("max_imaginary", imaginary))
}

fn kolmogorov_residual(
    traj: &Trajectory,
    eq: &EquilibriumState,
    families: &[KolmogorovFamily],
    n_grid: &[u64],
    tail_only: bool,
) -> Result<(f64, f64)> {
    let mut residual = 0.0f64;
    let mut imaginary = 0.0f64;
    for f in families {
        let terms = kolmogorov_terms(traj, eq, f, n_grid)?;
        let idx: Vec<usize> = if tail_only {
            tail_half(n_grid).collect()
        } else {
            (0..n_grid.len()).collect()
        };
        for i in idx {
            residual = residual.max(terms[i].value.abs());
            imaginary = imaginary.max(terms[i].imaginary);
        }
    }
    Ok((residual, imaginary))
}

/// Residual of the factorization `(rho|g_1 ... g_m) = prod (rho|g_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorization {
    pub residual: f64,
    pub imaginary: f64,
}

pub fn independence_factorization_residual(rho: &DensityState, gs: &[Observable]) -> Result<Factorization> {
    if gs.len() < 2 {
        return Err(Error::EmptyProduct { found: gs.len() });
    }
    let mut product = CMatrix::identity(rho.dim(), rho.dim());
    let mut scalar = 1.0;
    for g in gs {
        if g.dim() != rho.dim() {
            return Err(Error::DimMismatch {
                expected: rho.dim(),
                found: g.dim(),
            });
        }
        scalar *= trace_pair(rho, g)?;
        product *= g.matrix();
    }
    let paired = crate::hilbert::pair_complex(rho, &product)?;
    Ok(Factorization {
        residual: (paired.re - scalar).abs(),
        imaginary: paired.im.abs(),
    })
}

/// Horizons for [`classify_quantum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantumClassifyParams {
    pub n_cesaro: usize,
    pub n_mix: usize,
    /// Points of the Kolmogorov grid spread over `[0, n_mix]`.
    pub grid_points: usize,
    pub epsilon: f64,
}

impl Default for QuantumClassifyParams {
    fn default() -> Self {
        Self {
            n_cesaro: 2000,
            n_mix: 400,
            grid_points: 21,
            epsilon: 1e-2,
        }
    }
}

/// Evenly spaced integer grid on `[0, n_max]` including both ends.
pub fn uniform_grid(n_max: usize, points: usize) -> Vec<u64> {
    let points = points.max(2);
    let mut g: Vec<u64> = (0..points)
        .map(|i| ((i as f64) * n_max as f64 / (points - 1) as f64).round() as u64)
        .collect();
    g.dedup();
    g
}

/// Runs all four levels with nested definitions.
///
/// Each observable contributes its mixing-reduction family to the
/// Kolmogorov test, so the Kolmogorov residual is never below the mixing
/// one. Bernoulli demands time independence at every `n`, so its residual
/// is the larger of the full-range deviation and the full-range Kolmogorov
/// terms. With these families the emitted booleans respect the hierarchy
/// inclusions by construction at equal epsilon, apart from
/// mixing ⟹ ergodic, which compares different time averages.
pub fn classify_quantum(
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    families: &[KolmogorovFamily],
    params: &QuantumClassifyParams,
) -> Result<HierarchyVerdict> {
    if observables.is_empty() {
        return Err(Error::InvalidParameter("at least one observable is required".into()));
    }
    let eps = params.epsilon;
    let ergodic = test_quantum_ergodic(traj, eq, observables, params.n_cesaro, eps)?;
    let mixing = test_quantum_mixing(traj, eq, observables, params.n_mix, eps)?;

    let mut all = Vec::with_capacity(observables.len() + families.len());
    for o in observables {
        all.push(KolmogorovFamily::mixing_reduction(o, 2)?);
    }
    all.extend_from_slice(families);
    let grid = uniform_grid(params.n_mix, params.grid_points);
    let kol = test_quantum_kolmogorov(traj, eq, &all, &grid, eps)?;
    // the reduction families reproduce the mixing deviation on the grid;
    // the mixing test covers every n of its window
    let k_res = kol.residual.max(mixing.residual);
    let kol = LevelResult {
        passed: k_res < eps,
        residual: k_res,
        ..kol
    };

    let bern = test_quantum_bernoulli(traj, eq, observables, params.n_mix, eps)?;
    let (full_k, _) = kolmogorov_residual(traj, eq, &all, &grid, false)?;
    let b_res = bern.residual.max(full_k).max(k_res);
    let bern = LevelResult {
        passed: b_res < eps,
        residual: b_res,
        ..bern
    }
    .with_param("kolmogorov_full_range", full_k);

    let mut v = HierarchyVerdict::new("quantum trajectory", eps, [ergodic, mixing, kol, bern]);
    if eq.is_degenerate() {
        v.notes.push(format!(
            "step spectrum has {} degenerate cluster(s); rho* keeps the intra-cluster coherences",
            eq.degenerate_blocks.len()
        ));
    }
    let outcome = if v.passed(Level::Kolmogorov) { "not falsified" } else { "falsified" };
    v.notes.push(format!(
        "kolmogorov: {outcome} on {} families over {} grid points",
        all.len(),
        grid.len()
    ));
    Ok(v)
}

/// `|K - M|` where `K` is the Kolmogorov residual of the mixing-reduction
/// families (`O` followed by identities) and `M` the mixing residual, both
/// over every `n` of the window `[horizon/2, horizon]`. Zero up to rounding.
pub fn mixing_reduction_gap(
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    horizon: usize,
) -> Result<f64> {
    let mixing = test_quantum_mixing(traj, eq, observables, horizon, 1.0)?;
    let families = observables
        .iter()
        .map(|o| KolmogorovFamily::mixing_reduction(o, 3))
        .collect::<Result<Vec<_>>>()?;
    let window: Vec<u64> = ((horizon / 2) as u64..=horizon as u64).collect();
    let kol = test_quantum_kolmogorov(traj, eq, &families, &window, 1.0)?;
    Ok((kol.residual - mixing.residual).abs())
}
