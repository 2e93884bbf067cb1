//! The quantum kicked rotator on a truncated momentum basis.
//!
//! One period is `F = K · E`: free rotation `E = exp(-i tau hbar n^2 / 2)`
//! followed by the kick `K = exp(-i (lambda / hbar) cos theta)`, which is
//! diagonal on an `N`-point angle grid and is carried to the momentum basis
//! by a discrete Fourier transform. Momenta run over
//! `n = -(N-1)/2 ..= (N-1)/2` with `N` odd.
//!
//! ```
//! use qeh::rotator::{build_floquet, RotatorSpec};
//!
//! let spec = RotatorSpec { lambda: 1.0, tau: 1.0, hbar_eff: 1.0, n: 31 };
//! let f = build_floquet(&spec).unwrap();
//! assert!(f.unitarity_residual() < 1e-12);
//! ```

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{
    classify_quantum, estimate_equilibrium, EquilibriumMethod, EquilibriumState,
    KolmogorovFamily, QuantumClassifyParams, StepOperator, Trajectory,
};
use crate::hilbert::{trace_pair, CMatrix, CVector, DensityState, Observable, Unitary, C64, DEGENERACY_TOL};
use crate::stats::{dyadic_rate, linear_fit, rms};
use crate::verdict::{HierarchyVerdict, Level};

/// Kick strength, period, effective Planck constant and basis size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatorSpec {
    pub lambda: f64,
    pub tau: f64,
    #[serde(default = "one")]
    pub hbar_eff: f64,
    /// Number of momentum states; odd.
    pub n: usize,
}

fn one() -> f64 {
    1.0
}

impl RotatorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n % 2 == 0 {
            return Err(Error::InvalidSpec(format!("basis size must be odd and >= 3, got {}", self.n)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidSpec(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidSpec(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.hbar_eff > 0.0 && self.hbar_eff.is_finite()) {
            return Err(Error::InvalidSpec(format!("hbar_eff must be > 0, got {}", self.hbar_eff)));
        }
        Ok(())
    }

    /// Momentum quantum numbers in basis order.
    pub fn momenta(&self) -> Vec<i64> {
        let h = (self.n as i64 - 1) / 2;
        (-h..=h).collect()
    }

    /// Basis index of momentum `m`.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let h = (self.n as i64 - 1) / 2;
        (-h..=h).contains(&m).then(|| (m + h) as usize)
    }

    /// Momentum eigenstate `|m>`.
    pub fn momentum_state(&self, m: i64) -> Result<CVector> {
        let i = self
            .index_of(m)
            .ok_or_else(|| Error::InvalidParameter(format!("momentum {m} outside the basis")))?;
        let mut v = CVector::zeros(self.n);
        v[i] = C64::from(1.0);
        Ok(v)
    }

    fn free_phases(&self) -> Vec<C64> {
        self.momenta()
            .into_iter()
            .map(|m| C64::from_polar(1.0, -self.tau * self.hbar_eff * (m * m) as f64 / 2.0))
            .collect()
    }

    fn kick_phases(&self) -> Vec<C64> {
        let k = self.lambda / self.hbar_eff;
        (0..self.n)
            .map(|j| {
                let theta = std::f64::consts::TAU * j as f64 / self.n as f64;
                C64::from_polar(1.0, -k * theta.cos())
            })
            .collect()
    }
}

/// Kick operator in the momentum basis:
/// `<n|K|m> = (1/N) sum_j exp(-i (n - m) theta_j) exp(-i (lambda/hbar) cos theta_j)`.
pub fn kick_matrix(spec: &RotatorSpec) -> Result<CMatrix> {
    spec.validate()?;
    let n = spec.n;
    let mut c = spec.kick_phases();
    FftPlanner::new().plan_fft_forward(n).process(&mut c);
    let scale = 1.0 / n as f64;
    // K depends on n - m only (mod N)
    Ok(CMatrix::from_fn(n, n, |a, b| c[(a + n - b) % n] * scale))
}

/// Floquet operator `F = K E`.
pub fn build_floquet(spec: &RotatorSpec) -> Result<Unitary> {
    let k = kick_matrix(spec)?;
    let free = spec.free_phases();
    let f = CMatrix::from_fn(spec.n, spec.n, |a, b| k[(a, b)] * free[b]);
    Unitary::new(f)
}

/// Applies `F` to state vectors in `O(N log N)`.
pub struct FloquetPropagator {
    free: Vec<C64>,
    kick: Vec<C64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl FloquetPropagator {
    pub fn new(spec: &RotatorSpec) -> Result<Self> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.n);
        let inverse = planner.plan_fft_inverse(spec.n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let scale = 1.0 / spec.n as f64;
        Ok(Self {
            free: spec.free_phases(),
            kick: spec.kick_phases().into_iter().map(|g| g * scale).collect(),
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); len],
        })
    }

    /// One period, in place.
    pub fn apply_in_place(&mut self, psi: &mut [C64]) {
        let mut scratch = std::mem::take(&mut self.scratch);
        self.apply_with(psi, &mut scratch);
        self.scratch = scratch;
    }

    fn apply_with(&self, psi: &mut [C64], scratch: &mut [C64]) {
        for (p, f) in psi.iter_mut().zip(&self.free) {
            *p *= f;
        }
        // K is circulant in the momentum index, so it is diagonalized by the
        // plain DFT pair; the momentum offset phases cancel
        self.inverse.process_with_scratch(psi, scratch);
        for (p, g) in psi.iter_mut().zip(&self.kick) {
            *p *= g;
        }
        self.forward.process_with_scratch(psi, scratch);
    }
}

impl StepOperator for FloquetPropagator {
    fn apply(&self, v: &CVector) -> CVector {
        let mut out = v.clone();
        let mut scratch = vec![C64::new(0.0, 0.0); self.scratch.len()];
        self.apply_with(out.as_mut_slice(), &mut scratch);
        out
    }
}

/// Trajectory of `rho0` under the Floquet operator.
pub fn rotator_trajectory(spec: &RotatorSpec, rho0: DensityState) -> Result<Trajectory> {
    if rho0.dim() != spec.n {
        return Err(Error::DimMismatch {
            expected: spec.n,
            found: rho0.dim(),
        });
    }
    let stepper = Arc::new(FloquetPropagator::new(spec)?);
    Ok(Trajectory::new(rho0, build_floquet(spec)?)?.with_stepper(stepper))
}

/// First dyadic window of the rate check.
pub const RATE_START: usize = 500;

/// Windows whose residual is already at roundoff level carry no rate.
pub const RATE_FLOOR: f64 = 1e-9;

/// Outcome of comparing the running time average with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroCheck {
    pub horizon: usize,
    pub cesaro_value: f64,
    pub closed_form_value: f64,
    pub residual: f64,
    /// `(n, rate)`: RMS residual over `[2n, 4n)` divided by the RMS over
    /// `[n, 2n)`, for `n = 500, 1000, ...` while `4n` fits in the horizon.
    /// Windows below [`RATE_FLOOR`] are omitted.
    pub rates: Vec<(usize, f64)>,
    pub min_phase_gap: f64,
    /// Eigenphase clusters closer than the degeneracy tolerance; the
    /// closed form then averages within each cluster.
    pub degenerate_clusters: usize,
    /// Largest `|rho_kl|`, `k != l`, inside a cluster (eigenbasis). When it
    /// vanishes the closed form reduces to `sum_k rho_kk O_kk`.
    pub cluster_coherence: f64,
}

/// `(1/N) sum_{j<N} (rho(j)|O)` against `sum over eigenphase clusters of
/// Tr(P_b rho P_b O)` (which is `sum_k rho_kk O_kk` for a nondegenerate
/// spectrum).
pub fn cesaro_limit_check(traj: &Trajectory, obs: &Observable, horizon: usize) -> Result<CesaroCheck> {
    let eq = estimate_equilibrium(traj, EquilibriumMethod::EigenbasisDiagonal)?;
    cesaro_limit_check_with(traj, &eq, obs, horizon)
}

pub fn cesaro_limit_check_with(
    traj: &Trajectory,
    eq: &EquilibriumState,
    obs: &Observable,
    horizon: usize,
) -> Result<CesaroCheck> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let closed = eq.pair(obs)?;
    let values = traj.expectation_series(std::slice::from_ref(obs), horizon - 1)?.remove(0);
    let mut sum = 0.0;
    let series: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            sum += v;
            (sum / (k + 1) as f64 - closed).abs()
        })
        .collect();
    let mut rates = Vec::new();
    let mut n = RATE_START;
    while let Some(r) = dyadic_rate(&series, n) {
        if rms(&series[n - 1..2 * n - 1]) > RATE_FLOOR {
            rates.push((n, r));
        }
        n *= 2;
    }
    let eig = traj.eigensystem()?;
    let clusters: Vec<Vec<usize>> = eig
        .degenerate_blocks(DEGENERACY_TOL)
        .into_iter()
        .filter(|b| b.len() > 1)
        .collect();
    let mut cluster_coherence = 0.0f64;
    if !clusters.is_empty() {
        let rho = eig.to_eigenbasis(traj.initial().matrix());
        for b in &clusters {
            for &k in b {
                for &l in b {
                    if k != l {
                        cluster_coherence = cluster_coherence.max(rho[(k, l)].norm());
                    }
                }
            }
        }
    }
    Ok(CesaroCheck {
        horizon,
        cesaro_value: sum / horizon as f64,
        closed_form_value: closed,
        residual: series[horizon - 1],
        rates,
        min_phase_gap: eig.min_phase_gap(),
        degenerate_clusters: clusters.len(),
        cluster_coherence,
    })
}

/// Momentum probabilities with a fitted exponential profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumDistribution {
    pub kicks: usize,
    pub momenta: Vec<i64>,
    pub probabilities: Vec<f64>,
    /// `2 / |slope|` of `log f` against `|n|`; `NaN` when no fit is possible.
    pub l_s: f64,
    pub fit_r2: f64,
    /// Largest `|n|` used by the fit.
    pub fit_extent: i64,
    /// Momenta per averaging bin of the fit.
    pub fit_bin: usize,
    /// `l_s > N/8`: the basis edge is likely to distort the profile.
    pub truncation_flagged: bool,
}

/// Weighted pure components of a density matrix (the basis itself when
/// the matrix is diagonal).
fn components(rho: &DensityState) -> Vec<(f64, Vec<C64>)> {
    let m = rho.matrix();
    let d = rho.dim();
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || m[(i, j)].norm() == 0.0));
    if diagonal {
        return (0..d)
            .filter(|&i| m[(i, i)].re > 0.0)
            .map(|i| {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[i] = C64::from(1.0);
                (m[(i, i)].re, v)
            })
            .collect();
    }
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 1e-15 * top)
        .map(|(k, &w)| (w, eig.eigenvectors.column(k).iter().copied().collect()))
        .collect()
}

/// Momentum bin width used by [`momentum_distribution`].
pub const FIT_BIN: usize = 11;

/// `f(n) = <n|rho(kicks)|n>` with an exponential fit over the central 60%
/// of the momentum window.
pub fn momentum_distribution(spec: &RotatorSpec, rho0: &DensityState, kicks: usize) -> Result<MomentumDistribution> {
    momentum_distribution_binned(spec, rho0, kicks, FIT_BIN)
}

/// As [`momentum_distribution`], fitting `log` of `f` averaged over bins of
/// `bin` momenta (folded over `n -> -n`). Pointwise `f` fluctuates by about
/// a decade around its envelope; `bin = 1` fits it unsmoothed.
pub fn momentum_distribution_binned(
    spec: &RotatorSpec,
    rho0: &DensityState,
    kicks: usize,
    bin: usize,
) -> Result<MomentumDistribution> {
    if rho0.dim() != spec.n {
        return Err(Error::DimMismatch {
            expected: spec.n,
            found: rho0.dim(),
        });
    }
    let mut prop = FloquetPropagator::new(spec)?;
    let mut f = vec![0.0; spec.n];
    for (w, mut psi) in components(rho0) {
        for _ in 0..kicks {
            prop.apply_in_place(&mut psi);
        }
        for (fi, p) in f.iter_mut().zip(&psi) {
            *fi += w * p.norm_sqr();
        }
    }
    let total: f64 = f.iter().sum();
    for fi in &mut f {
        *fi /= total;
    }
    Ok(fit_distribution(spec, kicks, f, bin))
}

fn fit_distribution(spec: &RotatorSpec, kicks: usize, f: Vec<f64>, bin: usize) -> MomentumDistribution {
    let momenta = spec.momenta();
    let h = (spec.n as i64 - 1) / 2;
    let extent = (0.6 * h as f64).round() as i64;
    let bin = bin.max(1) as i64;
    let at = |m: i64| f[(m + h) as usize];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut centre = 0;
    while centre + bin / 2 <= extent {
        let lo = (centre - bin / 2).max(0);
        let hi = centre + bin / 2;
        let mean = (lo..=hi).map(|m| at(m) + at(-m)).sum::<f64>() / (2 * (hi - lo + 1)) as f64;
        if mean > f64::MIN_POSITIVE {
            xs.push(centre as f64);
            ys.push(mean.ln());
        }
        centre += bin;
    }
    let fit = linear_fit(&xs, &ys).filter(|fit| fit.slope != 0.0);
    let (l_s, r2) = match fit {
        Some(fit) => (2.0 / fit.slope.abs(), fit.r2),
        None => (f64::NAN, f64::NAN),
    };
    MomentumDistribution {
        kicks,
        momenta,
        probabilities: f,
        l_s,
        fit_r2: r2,
        fit_extent: extent,
        fit_bin: bin as usize,
        truncation_flagged: l_s.is_finite() && l_s > spec.n as f64 / 8.0,
    }
}

/// Horizons used by [`regime_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeHorizons {
    pub n_cesaro: usize,
    pub n_mix: usize,
    pub grid_points: usize,
    pub localization_kicks: usize,
    pub epsilon: f64,
}

impl Default for RegimeHorizons {
    fn default() -> Self {
        Self {
            n_cesaro: 10_000,
            n_mix: 2_000,
            grid_points: 21,
            localization_kicks: 2_000,
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub verdict: HierarchyVerdict,
    pub localization: MomentumDistribution,
    /// `tau * l_s`.
    pub decoherence_time: f64,
    /// `max |(rho(n)|O) - (rho*|O)|` over `ceil(l_s) <= n <= n_mix`.
    pub residual_after_td: f64,
    pub bernoulli_after_td: bool,
}

/// Runs the four level-tests on the rotator and measures the deviation
/// profile beyond the decoherence time `t_D = tau l_s`.
pub fn regime_report(
    spec: &RotatorSpec,
    rho0: DensityState,
    observables: &[Observable],
    families: &[KolmogorovFamily],
    horizons: &RegimeHorizons,
) -> Result<RegimeReport> {
    let traj = rotator_trajectory(spec, rho0)?;
    let eq = estimate_equilibrium(&traj, EquilibriumMethod::EigenbasisDiagonal)?;
    regime_report_for(spec, &traj, &eq, observables, families, horizons)
}

/// [`regime_report`] on an existing rotator trajectory.
pub fn regime_report_for(
    spec: &RotatorSpec,
    traj: &Trajectory,
    eq: &EquilibriumState,
    observables: &[Observable],
    families: &[KolmogorovFamily],
    horizons: &RegimeHorizons,
) -> Result<RegimeReport> {
    let localization = momentum_distribution(spec, traj.initial(), horizons.localization_kicks)?;
    let params = QuantumClassifyParams {
        n_cesaro: horizons.n_cesaro,
        n_mix: horizons.n_mix,
        grid_points: horizons.grid_points,
        epsilon: horizons.epsilon,
    };
    let mut verdict = classify_quantum(traj, eq, observables, families, &params)?;
    verdict.system = format!(
        "kicked rotator (lambda = {}, tau = {}, hbar = {}, N = {})",
        spec.lambda, spec.tau, spec.hbar_eff, spec.n
    );

    let start = if localization.l_s.is_finite() {
        (localization.l_s.ceil() as usize).min(horizons.n_mix)
    } else {
        horizons.n_mix
    };
    let series = traj.expectation_series(observables, horizons.n_mix)?;
    let mut after = 0.0f64;
    for (o, s) in observables.iter().zip(&series) {
        let target = trace_pair(&eq.state, o)?;
        for v in &s[start..] {
            after = after.max((v - target).abs());
        }
    }
    verdict.notes.push(format!(
        "fitted l_s = {:.3} (R^2 = {:.3}); max deviation for n >= {start}: {after:.3e}",
        localization.l_s, localization.fit_r2
    ));
    if localization.truncation_flagged {
        verdict.notes.push("l_s exceeds N/8: profile may be distorted by the basis edge".into());
    }
    debug_assert!(verdict.get(Level::Ergodic).is_some());
    Ok(RegimeReport {
        decoherence_time: spec.tau * localization.l_s,
        residual_after_td: after,
        bernoulli_after_td: after < horizons.epsilon,
        verdict,
        localization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::evolve;

    fn spec(lambda: f64, n: usize) -> RotatorSpec {
        RotatorSpec {
            lambda,
            tau: 1.0,
            hbar_eff: 1.0,
            n,
        }
    }

    /// `J_k(x)` from its power series; adequate for `|x| <= 20`.
    fn bessel_j(k: i64, x: f64) -> f64 {
        let m = k.unsigned_abs();
        let sign = if k < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
        let half = x / 2.0;
        let mut term = half.powi(m as i32) / (1..=m).map(|i| i as f64).product::<f64>();
        let mut sum = term;
        for s in 1..200u64 {
            term *= -half * half / (s as f64 * (s + m) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sign * sum
    }

    #[test]
    fn spec_validation() {
        assert!(spec(1.0, 4).validate().is_err());
        assert!(spec(1.0, 1).validate().is_err());
        assert!(spec(-1.0, 5).validate().is_err());
        assert!(RotatorSpec { tau: 0.0, ..spec(1.0, 5) }.validate().is_err());
        assert!(matches!(build_floquet(&spec(1.0, 6)), Err(Error::InvalidSpec(_))));
        assert_eq!(spec(0.0, 5).momenta(), vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn no_kick_is_free_rotation() {
        let s = spec(0.0, 9);
        let f = build_floquet(&s).unwrap();
        for (i, m) in s.momenta().into_iter().enumerate() {
            for j in 0..9 {
                let expect = if i == j { C64::from_polar(1.0, -(m * m) as f64 / 2.0) } else { C64::from(0.0) };
                assert!((f.matrix()[(i, j)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn kick_matches_bessel_series() {
        for lambda in [0.5, 1.0, 5.0, 10.0] {
            let s = spec(lambda, 255);
            let k = kick_matrix(&s).unwrap();
            let c = s.index_of(0).unwrap();
            for d in -10i64..=10 {
                let row = (c as i64 + d) as usize;
                let phase = C64::new(0.0, -1.0).powi(d.rem_euclid(4) as i32);
                let expect = phase * bessel_j(d, lambda);
                assert!((k[(row, c)] - expect).norm() < 1e-8, "lambda {lambda} d {d}");
            }
        }
    }

    #[test]
    fn propagator_matches_matrix() {
        let s = RotatorSpec { lambda: 3.0, tau: 0.7, hbar_eff: 0.9, n: 33 };
        let f = build_floquet(&s).unwrap();
        assert!(f.unitarity_residual() < 1e-12);
        let mut prop = FloquetPropagator::new(&s).unwrap();
        let mut psi: Vec<C64> = (0..33).map(|i| C64::new((i as f64).sin(), (0.3 * i as f64).cos())).collect();
        let mut v = CVector::from_vec(psi.clone());
        for _ in 0..5 {
            prop.apply_in_place(&mut psi);
            v = f.matrix() * v;
        }
        let err = psi.iter().zip(v.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn momentum_eigenstate_is_stationary_without_kick() {
        let s = spec(0.0, 11);
        let rho = DensityState::pure(&s.momentum_state(0).unwrap()).unwrap();
        let traj = rotator_trajectory(&s, rho.clone()).unwrap();
        for n in [1usize, 10, 100] {
            let d = (traj.state(n).matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
        assert!(rotator_trajectory(&s, DensityState::maximally_mixed(5)).is_err());
    }

    #[test]
    fn eigenbasis_phases_rotate() {
        let s = spec(2.0, 15);
        let rho = crate::hilbert::random::density(&mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9), 15);
        let traj = rotator_trajectory(&s, rho.clone()).unwrap();
        let eig = traj.eigensystem().unwrap();
        let r0 = eig.to_eigenbasis(rho.matrix());
        let n = 7usize;
        let rn = eig.to_eigenbasis(evolve(&rho, &traj.step().pow(n as u64)).unwrap().matrix());
        for a in 0..15 {
            for b in 0..15 {
                let expect = r0[(a, b)] * C64::from_polar(1.0, n as f64 * (eig.phases[a] - eig.phases[b]));
                assert!((rn[(a, b)] - expect).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn cesaro_trivial_cases() {
        let s = spec(1.0, 21);
        let psi = (s.momentum_state(0).unwrap() + s.momentum_state(1).unwrap()) / C64::from(2f64.sqrt());
        let traj = rotator_trajectory(&s, DensityState::pure(&psi).unwrap()).unwrap();
        let c = cesaro_limit_check(&traj, &Observable::identity(21), 50).unwrap();
        assert!((c.cesaro_value - 1.0).abs() < 1e-12 && (c.closed_form_value - 1.0).abs() < 1e-12);
        assert!(c.residual < 1e-12);
        let eq = estimate_equilibrium(&traj, EquilibriumMethod::EigenbasisDiagonal).unwrap();
        let stat = Trajectory::new(eq.state.clone(), traj.step().clone()).unwrap();
        let o = Observable::coherence(21, 10, 11);
        assert!(cesaro_limit_check(&stat, &o, 50).unwrap().residual < 1e-10);
    }

    #[test]
    fn distribution_trivial_cases() {
        let s = spec(0.0, 21);
        let rho = DensityState::pure(&s.momentum_state(3).unwrap()).unwrap();
        let d = momentum_distribution(&s, &rho, 0).unwrap();
        assert_eq!(d.probabilities[s.index_of(3).unwrap()], 1.0);
        assert!(d.l_s.is_nan());
        let d = momentum_distribution(&s, &rho, 40).unwrap();
        assert!((d.probabilities[s.index_of(3).unwrap()] - 1.0).abs() < 1e-12);
        let kicked = momentum_distribution(&spec(4.0, 21), &rho, 25).unwrap();
        assert!((kicked.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
