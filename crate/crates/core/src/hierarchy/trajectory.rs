use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::{
    eig_unitary, hermitize, CMatrix, CVector, DensityState, EigenSystem, Observable, Unitary, C64,
};

/// Components lighter than this (relative to the heaviest) are dropped.
const WEIGHT_CUTOFF: f64 = 1e-15;

/// Number of steps kept in memory; later steps are streamed.
const CACHE_STEPS: usize = 1 << 12;

/// Fast application of the step unitary to a state vector.
pub trait StepOperator: Send + Sync {
    fn apply(&self, v: &CVector) -> CVector;
}

/// Stroboscopic trajectory `rho(n) = U^n rho U^-n`.
///
/// The initial state is stored as `sum_i p_i |psi_i><psi_i|` so one step
/// costs `O(r N^2)` for rank `r` (less with a [`StepOperator`]). Evolved
/// vectors are cached append-only up to a fixed number of steps.
pub struct Trajectory {
    initial: DensityState,
    step: Unitary,
    stepper: Option<Arc<dyn StepOperator>>,
    weights: Vec<f64>,
    cache: RwLock<Vec<Vec<CVector>>>,
    eigen: OnceLock<std::result::Result<EigenSystem, Error>>,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("dim", &self.dim())
            .field("rank", &self.rank())
            .field("cached_steps", &self.cache.read().map(|c| c.len()).unwrap_or(0))
            .finish()
    }
}

impl Clone for Trajectory {
    fn clone(&self) -> Self {
        Self {
            initial: self.initial.clone(),
            step: self.step.clone(),
            stepper: self.stepper.clone(),
            weights: self.weights.clone(),
            cache: RwLock::new(self.cache.read().expect("cache lock").clone()),
            eigen: self.eigen.clone(),
        }
    }
}

/// Operator prepared for repeated Heisenberg-picture application.
pub enum HeisenbergFactor {
    Identity,
    /// Matrix elements in the step's eigenbasis.
    Spectral(CMatrix),
    Dense(CMatrix),
}

fn is_identity(m: &CMatrix) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| {
            (0..m.ncols()).all(|j| m[(i, j)] == if i == j { C64::from(1.0) } else { C64::from(0.0) })
        })
}

/// Pairing strategy for one operator: sparse operators skip the zeros.
enum Pairing<'a> {
    Sparse(Vec<(usize, usize, C64)>),
    Dense(&'a CMatrix),
}

impl<'a> Pairing<'a> {
    fn new(m: &'a CMatrix) -> Self {
        let nnz = m.iter().filter(|z| **z != C64::from(0.0)).count();
        if nnz * 8 <= m.len() {
            let mut entries = Vec::with_capacity(nnz);
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    if m[(i, j)] != C64::from(0.0) {
                        entries.push((i, j, m[(i, j)]));
                    }
                }
            }
            Pairing::Sparse(entries)
        } else {
            Pairing::Dense(m)
        }
    }

    /// `<v|M|v>`.
    fn expect(&self, v: &CVector) -> C64 {
        match self {
            Pairing::Sparse(e) => e.iter().map(|&(i, j, z)| v[i].conj() * z * v[j]).sum(),
            Pairing::Dense(m) => v.dotc(&(*m * v)),
        }
    }
}

impl Trajectory {
    pub fn new(initial: DensityState, step: Unitary) -> Result<Self> {
        if initial.dim() != step.dim() {
            return Err(Error::DimMismatch {
                expected: step.dim(),
                found: initial.dim(),
            });
        }
        let eig = initial.matrix().clone().symmetric_eigen();
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mut weights = Vec::new();
        let mut vectors = Vec::new();
        for (k, &w) in eig.eigenvalues.iter().enumerate() {
            if w > WEIGHT_CUTOFF * top {
                weights.push(w);
                vectors.push(eig.eigenvectors.column(k).into_owned());
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self {
            initial,
            step,
            stepper: None,
            weights,
            cache: RwLock::new(vec![vectors]),
            eigen: OnceLock::new(),
        })
    }

    /// Trajectory of a pure state, avoiding the initial decomposition.
    pub fn pure(psi: &CVector, step: Unitary) -> Result<Self> {
        let rho = DensityState::pure(psi)?;
        if psi.len() != step.dim() {
            return Err(Error::DimMismatch {
                expected: step.dim(),
                found: psi.len(),
            });
        }
        let v = psi / C64::from(psi.norm());
        Ok(Self {
            initial: rho,
            step,
            stepper: None,
            weights: vec![1.0],
            cache: RwLock::new(vec![vec![v]]),
            eigen: OnceLock::new(),
        })
    }

    /// Uses `stepper` instead of the dense matrix for time stepping. It
    /// must implement the same unitary as `step`.
    pub fn with_stepper(mut self, stepper: Arc<dyn StepOperator>) -> Self {
        self.stepper = Some(stepper);
        self
    }

    pub fn dim(&self) -> usize {
        self.step.dim()
    }

    /// Weights `p_i` of the stored decomposition.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn initial(&self) -> &DensityState {
        &self.initial
    }

    pub fn step(&self) -> &Unitary {
        &self.step
    }

    /// Rank of the stored decomposition.
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    /// Eigen-decomposition of the step, computed once.
    pub fn eigensystem(&self) -> Result<&EigenSystem> {
        self.eigen
            .get_or_init(|| eig_unitary(&self.step))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn advance(&self, vs: &[CVector]) -> Vec<CVector> {
        match &self.stepper {
            Some(s) => vs.iter().map(|v| s.apply(v)).collect(),
            None => vs.iter().map(|v| self.step.matrix() * v).collect(),
        }
    }

    /// Evolved components at step `n`.
    pub fn components(&self, n: usize) -> Vec<CVector> {
        {
            let c = self.cache.read().expect("cache lock");
            if n < c.len() {
                return c[n].clone();
            }
        }
        let mut c = self.cache.write().expect("cache lock");
        while c.len() <= n.min(CACHE_STEPS) {
            let next = self.advance(c.last().expect("nonempty cache"));
            c.push(next);
        }
        if n < c.len() {
            return c[n].clone();
        }
        let mut v = c.last().expect("nonempty cache").clone();
        let start = c.len() - 1;
        drop(c);
        for _ in start..n {
            v = self.advance(&v);
        }
        v
    }

    /// `rho(n)`.
    pub fn state(&self, n: usize) -> DensityState {
        DensityState::from_trusted(self.assemble(&self.components(n)))
    }

    fn assemble(&self, vs: &[CVector]) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (w, v) in self.weights.iter().zip(vs) {
            m += v * v.adjoint() * C64::from(*w);
        }
        hermitize(&m)
    }

    fn pair_components(&self, vs: &[CVector], m: &CMatrix) -> C64 {
        self.pair_with(vs, &Pairing::new(m))
    }

    fn pair_with(&self, vs: &[CVector], p: &Pairing) -> C64 {
        self.weights.iter().zip(vs).map(|(w, v)| p.expect(v) * *w).sum()
    }

    /// `(rho(n)|O)`.
    pub fn expectation(&self, obs: &Observable, n: usize) -> Result<f64> {
        self.check(obs.dim())?;
        Ok(self.pair_components(&self.components(n), obs.matrix()).re)
    }

    /// `Tr(rho(n) M)` for any operator `M`.
    pub fn pair_operator(&self, m: &CMatrix, n: usize) -> Result<C64> {
        self.check(m.nrows())?;
        Ok(self.pair_components(&self.components(n), m))
    }

    /// `(rho(n)|O_j)` for `n = 0..=n_max`, indexed `[j][n]`.
    pub fn expectation_series(&self, observables: &[Observable], n_max: usize) -> Result<Vec<Vec<f64>>> {
        for o in observables {
            self.check(o.dim())?;
        }
        let pairings: Vec<Pairing> = observables.iter().map(|o| Pairing::new(o.matrix())).collect();
        let mut out = vec![Vec::with_capacity(n_max + 1); observables.len()];
        let cached = self.cache.read().expect("cache lock").len();
        let mut v = self.components(0);
        for n in 0..=n_max {
            if n > 0 {
                v = if n < cached {
                    self.components(n)
                } else {
                    self.advance(&v)
                };
            }
            for (p, row) in pairings.iter().zip(out.iter_mut()) {
                row.push(self.pair_with(&v, p).re);
            }
        }
        Ok(out)
    }

    /// `(1/N) sum_{n<N} rho(n)`.
    pub fn cesaro_state(&self, horizon: usize) -> Result<DensityState> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("Cesàro horizon must be >= 1".into()));
        }
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        let mut v = self.components(0);
        for n in 0..horizon {
            if n > 0 {
                v = self.advance(&v);
            }
            acc += self.assemble(&v);
        }
        Ok(DensityState::from_trusted(acc / C64::from(horizon as f64)))
    }

    /// Heisenberg operator `U^-t M U^t`, through the spectral decomposition
    /// when it is available.
    pub fn heisenberg_matrix(&self, m: &CMatrix, t: u64) -> Result<CMatrix> {
        self.check(m.nrows())?;
        if t == 0 {
            return Ok(m.clone());
        }
        match self.eigensystem() {
            Ok(eig) => {
                let tilde = eig.to_eigenbasis(m);
                let d = self.dim();
                let tf = t as f64;
                let rot = DVector::from_iterator(
                    d,
                    eig.phases.iter().map(|&p| C64::from_polar(1.0, tf * p)),
                );
                let rotated = CMatrix::from_fn(d, d, |a, b| rot[a].conj() * tilde[(a, b)] * rot[b]);
                Ok(eig.from_eigenbasis(&rotated))
            }
            Err(_) => {
                let p = self.step.pow(t);
                Ok(p.matrix().adjoint() * m * p.matrix())
            }
        }
    }

    /// Prepares `m` for [`Trajectory::apply_heisenberg`].
    pub fn heisenberg_factor(&self, m: &CMatrix) -> Result<HeisenbergFactor> {
        self.check(m.nrows())?;
        if is_identity(m) {
            return Ok(HeisenbergFactor::Identity);
        }
        Ok(match self.eigensystem() {
            Ok(eig) => HeisenbergFactor::Spectral(eig.to_eigenbasis(m)),
            Err(_) => HeisenbergFactor::Dense(m.clone()),
        })
    }

    /// `U^-t M U^t v` in `O(N^2)` through the eigenbasis.
    pub fn apply_heisenberg(&self, f: &HeisenbergFactor, t: u64, v: &CVector) -> CVector {
        match f {
            HeisenbergFactor::Identity => v.clone(),
            HeisenbergFactor::Spectral(tilde) => {
                let eig = self.eigensystem().expect("spectral factor implies an eigensystem");
                let tf = t as f64;
                let mut w = eig.vectors.adjoint() * v;
                for (x, &p) in w.iter_mut().zip(&eig.phases) {
                    *x *= C64::from_polar(1.0, tf * p);
                }
                let mut w = tilde * w;
                for (x, &p) in w.iter_mut().zip(&eig.phases) {
                    *x *= C64::from_polar(1.0, -tf * p);
                }
                &eig.vectors * w
            }
            HeisenbergFactor::Dense(m) => {
                let p = self.step.pow(t);
                p.matrix().adjoint() * (m * (p.matrix() * v))
            }
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{evolve, random, trace_pair};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn cached_states_match_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random::unitary(&mut rng, 8);
        let rho = random::density(&mut rng, 8);
        let traj = Trajectory::new(rho.clone(), u.clone()).unwrap();
        for n in [0usize, 1, 5, 17] {
            let direct = evolve(&rho, &u.pow(n as u64)).unwrap();
            assert!(max_diff(traj.state(n).matrix(), direct.matrix()) < 1e-12);
        }
        // second read comes from the cache
        let again = traj.state(17);
        let direct = evolve(&rho, &u.pow(17)).unwrap();
        assert!(max_diff(again.matrix(), direct.matrix()) < 1e-12);
    }

    #[test]
    fn series_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random::unitary(&mut rng, 6);
        let traj = Trajectory::new(random::pure(&mut rng, 6), u.clone()).unwrap();
        assert_eq!(traj.rank(), 1);
        let o = random::hermitian(&mut rng, 6);
        let s = traj.expectation_series(std::slice::from_ref(&o), 20).unwrap();
        for n in [0usize, 7, 20] {
            let e = trace_pair(&traj.state(n), &o).unwrap();
            assert!((s[0][n] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn heisenberg_spectral_matches_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random::unitary(&mut rng, 5);
        let traj = Trajectory::new(DensityState::maximally_mixed(5), u.clone()).unwrap();
        let o = random::hermitian(&mut rng, 5);
        let a = traj.heisenberg_matrix(o.matrix(), 9).unwrap();
        let p = u.pow(9);
        let b = p.matrix().adjoint() * o.matrix() * p.matrix();
        assert!(max_diff(&a, &b) < 1e-11);
    }

    #[test]
    fn dimension_checks() {
        let u = Unitary::identity(3);
        assert!(Trajectory::new(DensityState::maximally_mixed(2), u.clone()).is_err());
        let traj = Trajectory::new(DensityState::maximally_mixed(3), u).unwrap();
        assert!(traj.expectation(&Observable::identity(4), 0).is_err());
    }
}
