//! Finite-dimensional states, observables and unitary steps.
//!
//! Every type here validates its invariant once at construction and is
//! immutable afterwards. The pairing `(rho|O) = Re Tr(rho O)` is the only
//! bridge between states and observables used by the level-tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for Hermiticity and trace checks at construction.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = -1e-10;
/// Trace window inside which a candidate density is renormalized.
pub const TRACE_RENORMALIZE_TOL: f64 = 1e-6;
/// Tolerance for unitarity.
pub const UNITARY_TOL: f64 = 1e-10;
/// Phases closer than this (mod 2pi) are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Largest dimension accepted by [`eig_unitary`].
pub const MAX_EIG_DIM: usize = 4096;

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimMismatch { expected, found });
    }
    Ok(())
}

/// Largest entry of `m - m^dag`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m^dag) / 2`, removing round-off anti-Hermitian parts.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: CMatrix,
}

impl DensityState {
    /// Validates `matrix` as a density matrix. A trace within 1e-6 of one is
    /// renormalized; anything further away is rejected.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let scale = max_entry(&matrix).max(1.0);
        let residual = hermiticity_residual(&matrix);
        if residual > CONSTRUCTION_TOL * scale {
            return Err(Error::NotHermitian { residual });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_RENORMALIZE_TOL || trace.im.abs() > TRACE_RENORMALIZE_TOL
        {
            return Err(Error::BadTrace { trace: trace.re });
        }
        let matrix = hermitize(&matrix).unscale(trace.re);
        let min_eigenvalue = hermitian_eigenvalues(&matrix)[0];
        if min_eigenvalue < POSITIVITY_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::BadTrace { trace: norm * norm });
        }
        let psi = psi.unscale(norm);
        Ok(Self {
            matrix: &psi * psi.adjoint(),
        })
    }

    /// Basis projector `|index><index|`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self { matrix: m })
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    /// Diagonal state from a probability vector (renormalized).
    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        let m = CMatrix::from_diagonal(&DVector::from_iterator(
            probabilities.len(),
            probabilities.iter().map(|&p| C64::new(p, 0.0)),
        ));
        Self::new(m)
    }

    /// Wraps a matrix already known to be a density matrix up to round-off.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self {
            matrix: hermitize(&matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let scale = max_entry(&matrix).max(1.0);
        let residual = hermiticity_residual(&matrix);
        if residual > CONSTRUCTION_TOL * scale {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self {
            matrix: hermitize(&matrix),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self {
            matrix: CMatrix::from_diagonal(&DVector::from_iterator(
                values.len(),
                values.iter().map(|&v| C64::new(v, 0.0)),
            )),
        }
    }

    /// `|i><j| + |j><i|` (or `|i><i|` when `i == j`).
    pub fn coherence(dim: usize, i: usize, j: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, j)] = C64::new(1.0, 0.0);
        m[(j, i)] = C64::new(1.0, 0.0);
        Self { matrix: m }
    }

    /// Projector onto the basis vectors in `indices`.
    pub fn projector(dim: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for i in indices {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        Self { matrix: m }
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn ket_projector(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if psi.is_empty() || !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("projector vector must be nonzero and finite".into()));
        }
        let v = psi / C64::from(norm);
        Ok(Self::from_trusted(&v * v.adjoint()))
    }

    /// Sets Hermiticity by averaging with the adjoint; for matrices produced
    /// by unitary conjugation of an already Hermitian operator.
    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self {
            matrix: hermitize(&matrix),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `a*self + b*other`.
    pub fn combine(&self, a: f64, other: &Observable, b: f64) -> Result<Observable> {
        check_dims(self.dim(), other.dim())?;
        Ok(Observable {
            matrix: self.matrix.scale(a) + other.matrix.scale(b),
        })
    }
}

/// Unitary one-step propagator.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    matrix: CMatrix,
}

impl Unitary {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = check_square(&matrix)?;
        let residual = unitarity_residual(&matrix);
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        debug_assert_eq!(matrix.nrows(), n);
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    /// `diag(e^{i phi_k})`.
    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            matrix: CMatrix::from_diagonal(&DVector::from_iterator(
                phases.len(),
                phases.iter().map(|&p| C64::from_polar(1.0, p)),
            )),
        }
    }

    pub(crate) fn from_trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `U^steps` by repeated squaring.
    pub fn pow(&self, steps: u64) -> Unitary {
        let n = self.dim();
        let mut result = CMatrix::identity(n, n);
        let mut base = self.matrix.clone();
        let mut e = steps;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Unitary { matrix: result }
    }

    pub fn compose(&self, after: &Unitary) -> Result<Unitary> {
        check_dims(self.dim(), after.dim())?;
        Ok(Unitary {
            matrix: &after.matrix * &self.matrix,
        })
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix)
    }
}

/// `max |U^dag U - I|` entrywise.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let g = m.adjoint() * m;
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `(rho|O) = Re Tr(rho O)`.
pub fn trace_pair(rho: &DensityState, obs: &Observable) -> Result<f64> {
    check_dims(rho.dim(), obs.dim())?;
    let t = trace_of_product(&rho.matrix, &obs.matrix);
    debug_assert!(
        t.im.abs() < 1e-10 * max_entry(&obs.matrix).max(1.0),
        "Tr(rho O) has imaginary part {}",
        t.im
    );
    Ok(t.re)
}

/// `Tr(rho M)` for an arbitrary (possibly non-Hermitian) operator.
pub fn pair_complex(rho: &DensityState, m: &CMatrix) -> Result<C64> {
    check_dims(rho.dim(), m.nrows())?;
    check_square(m)?;
    Ok(trace_of_product(&rho.matrix, m))
}

/// `C(O, rho) = (rho|O) - (rho|I)(I|O) = Tr(rho O) - Tr(O)`.
pub fn quantum_correlation(rho: &DensityState, obs: &Observable) -> Result<f64> {
    Ok(trace_pair(rho, obs)? - obs.trace())
}

/// Schrodinger step `U rho U^dag`.
pub fn evolve(rho: &DensityState, u: &Unitary) -> Result<DensityState> {
    check_dims(rho.dim(), u.dim())?;
    let m = &u.matrix * &rho.matrix * u.matrix.adjoint();
    Ok(DensityState::from_trusted(m))
}

/// Heisenberg picture `(U^dag)^steps O U^steps`.
pub fn heisenberg(obs: &Observable, u: &Unitary, steps: u64) -> Result<Observable> {
    check_dims(obs.dim(), u.dim())?;
    if steps == 0 {
        return Ok(obs.clone());
    }
    let p = u.pow(steps);
    let m = p.matrix.adjoint() * &obs.matrix * &p.matrix;
    Ok(Observable::from_trusted(m))
}

/// Eigen-decomposition of a unitary: `U v_k = e^{i phi_k} v_k`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Phases in (-pi, pi], ascending.
    pub phases: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `phases`.
    pub vectors: CMatrix,
    /// Any two phases closer than [`DEGENERACY_TOL`] on the circle.
    pub degeneracy_flag: bool,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `V^dag M V`: matrix elements in the eigenbasis.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * m * &self.vectors
    }

    /// `V M V^dag`: back from the eigenbasis.
    pub fn from_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        &self.vectors * m * self.vectors.adjoint()
    }

    /// `sum_k e^{i phi_k} |k><k|`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.phases.iter().map(|&p| C64::from_polar(1.0, p)),
        ));
        self.from_eigenbasis(&d)
    }

    /// Smallest circular distance between two phases.
    pub fn min_phase_gap(&self) -> f64 {
        min_circular_gap(&self.phases)
    }

    /// Groups eigen-indices whose phases chain together within `tol`
    /// (circularly). Singletons for a nondegenerate spectrum.
    pub fn degenerate_blocks(&self, tol: f64) -> Vec<Vec<usize>> {
        phase_clusters(&self.phases, tol)
    }
}

pub(crate) fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

fn min_circular_gap(sorted: &[f64]) -> f64 {
    if sorted.len() < 2 {
        return f64::INFINITY;
    }
    let mut gap = f64::INFINITY;
    for w in sorted.windows(2) {
        gap = gap.min(circular_distance(w[0], w[1]));
    }
    gap.min(circular_distance(sorted[0], sorted[sorted.len() - 1]))
}

/// Clusters of ascending phases whose neighbours are within `tol`; the first
/// and last cluster merge when they touch across the branch cut.
pub(crate) fn phase_clusters(sorted: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..n {
        if circular_distance(sorted[k - 1], sorted[k]) < tol {
            clusters.last_mut().unwrap().push(k);
        } else {
            clusters.push(vec![k]);
        }
    }
    if clusters.len() > 1 && circular_distance(sorted[0], sorted[n - 1]) < tol {
        let last = clusters.pop().unwrap();
        clusters[0].extend(last);
    }
    clusters
}

/// Full eigensystem of a unitary via complex Schur decomposition (Hessenberg
/// reduction followed by shifted QR). A normal matrix has diagonal Schur form,
/// so the Schur vectors are the eigenvectors.
pub fn eig_unitary(u: &Unitary) -> Result<EigenSystem> {
    let n = u.dim();
    if n > MAX_EIG_DIM {
        return Err(Error::TooLarge {
            dim: n,
            max: MAX_EIG_DIM,
        });
    }
    let max_iterations = 100 * n.max(10);
    let schur = nalgebra::linalg::Schur::try_new(u.matrix.clone(), f64::EPSILON, max_iterations)
        .ok_or(Error::ConvergenceFailure {
            iterations: max_iterations,
        })?;
    let (q, t) = schur.unpack();

    let mut order: Vec<(f64, usize)> = (0..n).map(|k| (t[(k, k)].arg(), k)).collect();
    // arg() lands in [-pi, pi]; fold -pi onto pi.
    for p in order.iter_mut() {
        if p.0 <= -std::f64::consts::PI {
            p.0 += std::f64::consts::TAU;
        }
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let phases: Vec<f64> = order.iter().map(|p| p.0).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &(_, src)) in order.iter().enumerate() {
        vectors.set_column(dst, &q.column(src));
    }
    let degeneracy_flag = min_circular_gap(&phases) < DEGENERACY_TOL;
    Ok(EigenSystem {
        phases,
        vectors,
        degeneracy_flag,
    })
}

/// Seeded random matrices for tests and experiments.
pub mod random {
    use super::*;
    use rand::Rng;

    /// Box-Muller.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                let v: f64 = rng.random();
                return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
            }
        }
    }

    pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            C64::new(standard_normal(rng), standard_normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
        })
    }

    /// GUE-like Hermitian matrix with unit-variance entries.
    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Observable {
        let g = complex_gaussian(rng, dim, dim);
        Observable::from_trusted(&g + g.adjoint())
    }

    /// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Unitary {
        let g = complex_gaussian(rng, dim, dim);
        let qr = g.qr();
        let (mut q, r) = qr.unpack();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
            let mut col = q.column_mut(j);
            col *= phase;
        }
        Unitary::from_trusted(q)
    }

    /// Full-rank random density matrix `G G^dag / Tr`.
    pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityState {
        let g = complex_gaussian(rng, dim, dim);
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        DensityState::from_trusted(m.unscale(tr))
    }

    /// Random pure state.
    pub fn pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityState {
        let g = complex_gaussian(rng, dim, 1);
        DensityState::pure(&g.column(0).into_owned()).expect("gaussian vector is nonzero")
    }

    /// Hermitian matrix `V diag(spectrum) V^dag` with a Haar `V`.
    pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, spectrum: &[f64]) -> CMatrix {
        let v = unitary(rng, spectrum.len());
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            spectrum.len(),
            spectrum.iter().map(|&x| C64::new(x, 0.0)),
        ));
        hermitize(&(v.matrix() * d * v.matrix().adjoint()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = DensityState::new(CMatrix::identity(4, 4).unscale(4.0)).unwrap();
        for ev in rho.eigenvalues() {
            assert!((ev - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn pure_basis_state_is_valid() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = C64::new(1.0, 0.0);
        let rho = DensityState::new(m).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        // spectral synthesis with one eigenvalue -0.1, trace 1
        let spectrum = [-0.1, 0.3, 0.8];
        let m = random::with_spectrum(&mut rng(1), &spectrum);
        match DensityState::new(m) {
            Err(Error::NotPositive { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.1).abs() < 1e-10)
            }
            other => panic!("expected NotPositive, got {other:?}"),
        }
    }

    #[test]
    fn bad_trace_and_non_hermitian_are_rejected() {
        let m = CMatrix::identity(2, 2);
        assert!(matches!(DensityState::new(m), Err(Error::BadTrace { .. })));
        let mut m = CMatrix::identity(2, 2).unscale(2.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityState::new(m), Err(Error::NotHermitian { .. })));
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(DensityState::new(m), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn near_unit_trace_is_renormalized() {
        let m = CMatrix::identity(2, 2).scale(0.5 * (1.0 + 5e-7));
        let rho = DensityState::new(m).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_pair_examples() {
        let n = 4;
        let rho = DensityState::maximally_mixed(n);
        assert!((trace_pair(&rho, &Observable::identity(n)).unwrap() - 1.0).abs() < 1e-14);

        let rho = DensityState::basis(n, 0).unwrap();
        let o = Observable::diagonal(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(trace_pair(&rho, &o).unwrap(), 0.0);

        let err = trace_pair(&rho, &Observable::identity(3)).unwrap_err();
        assert_eq!(err, Error::DimMismatch { expected: 4, found: 3 });
    }

    #[test]
    fn trace_pair_matches_entrywise_double_sum() {
        let mut r = rng(7);
        let rho = random::density(&mut r, 5);
        let o = random::hermitian(&mut r, 5);
        let mut oracle = C64::new(0.0, 0.0);
        for i in 0..5 {
            for j in 0..5 {
                oracle += rho.matrix()[(i, j)] * o.matrix()[(j, i)];
            }
        }
        assert!((trace_pair(&rho, &o).unwrap() - oracle.re).abs() < 1e-12);
        assert!(oracle.im.abs() < 1e-12);
    }

    #[test]
    fn quantum_correlation_examples() {
        let rho = DensityState::basis(2, 0).unwrap();
        let o = Observable::diagonal(&[1.0, -1.0]);
        assert!((quantum_correlation(&rho, &o).unwrap() - 1.0).abs() < 1e-15);

        let rho = random::density(&mut rng(3), 4);
        let c = quantum_correlation(&rho, &Observable::identity(4)).unwrap();
        assert!((c - (1.0 - 4.0)).abs() < 1e-12);

        let mut r = rng(11);
        let rho = random::density(&mut r, 6);
        let o = random::hermitian(&mut r, 6);
        let mut pair = 0.0;
        let mut tr = 0.0;
        for i in 0..6 {
            tr += o.matrix()[(i, i)].re;
            for j in 0..6 {
                pair += (rho.matrix()[(i, j)] * o.matrix()[(j, i)]).re;
            }
        }
        assert!((quantum_correlation(&rho, &o).unwrap() - (pair - tr)).abs() < 1e-12);
    }

    #[test]
    fn evolve_examples() {
        let mut r = rng(5);
        let rho = random::density(&mut r, 5);
        let same = evolve(&rho, &Unitary::identity(5)).unwrap();
        assert!(max_abs_diff(same.matrix(), rho.matrix()) < 1e-15);

        let diag_rho = DensityState::diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let diag_u = Unitary::from_phases(&[0.3, -1.0, 2.0, 0.1]);
        let out = evolve(&diag_rho, &diag_u).unwrap();
        assert!(max_abs_diff(out.matrix(), diag_rho.matrix()) < 1e-15);

        let u = random::unitary(&mut r, 5);
        let out = evolve(&rho, &u).unwrap();
        let before = rho.eigenvalues();
        let after = out.eigenvalues();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn heisenberg_examples_and_duality() {
        let mut r = rng(9);
        let o = random::hermitian(&mut r, 5);
        let u = random::unitary(&mut r, 5);
        assert_eq!(heisenberg(&o, &u, 0).unwrap(), o);

        let id = heisenberg(&Observable::identity(5), &u, 7).unwrap();
        assert!(max_abs_diff(id.matrix(), &CMatrix::identity(5, 5)) < 1e-12);

        let rho = random::density(&mut r, 5);
        let mut evolved = rho.clone();
        for _ in 0..3 {
            evolved = evolve(&evolved, &u).unwrap();
        }
        let schrodinger = trace_pair(&evolved, &o).unwrap();
        let heis = trace_pair(&rho, &heisenberg(&o, &u, 3).unwrap()).unwrap();
        assert!((schrodinger - heis).abs() < 1e-10);
    }

    #[test]
    fn eig_of_diagonal_unitary() {
        let phases = [-2.0, -0.5, 0.25, 1.5, 3.0];
        let es = eig_unitary(&Unitary::from_phases(&phases)).unwrap();
        for (a, b) in es.phases.iter().zip(&phases) {
            assert!((a - b).abs() < 1e-12);
        }
        for k in 0..5 {
            // standard basis up to a phase
            assert!((es.vectors[(k, k)].norm() - 1.0).abs() < 1e-12);
        }
        assert!(!es.degeneracy_flag);
    }

    #[test]
    fn eig_of_identity_is_degenerate() {
        let es = eig_unitary(&Unitary::identity(6)).unwrap();
        assert!(es.phases.iter().all(|p| p.abs() < 1e-14));
        assert!(es.degeneracy_flag);
        assert_eq!(es.degenerate_blocks(DEGENERACY_TOL), vec![(0..6).collect::<Vec<_>>()]);
    }

    #[test]
    fn eig_reconstructs_random_unitary() {
        let u = random::unitary(&mut rng(64), 64);
        let es = eig_unitary(&u).unwrap();
        assert!(max_abs_diff(&es.reconstruct(), u.matrix()) < 1e-8);
        let gram = es.vectors.adjoint() * &es.vectors;
        assert!(max_abs_diff(&gram, &CMatrix::identity(64, 64)) < 1e-10);
        for k in 0..64 {
            let v = es.vectors.column(k);
            let lhs = u.matrix() * v;
            let rhs = v * C64::from_polar(1.0, es.phases[k]);
            let err = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn phase_clusters_wrap_across_branch_cut() {
        let phases = [-std::f64::consts::PI + 1e-12, 0.0, std::f64::consts::PI];
        let c = phase_clusters(&phases, 1e-9);
        assert_eq!(c, vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn unitary_validation() {
        let mut m = CMatrix::identity(3, 3);
        m[(0, 0)] = C64::new(1.1, 0.0);
        assert!(matches!(Unitary::new(m), Err(Error::NotUnitary { .. })));
        let u = random::unitary(&mut rng(2), 8);
        assert!(Unitary::new(u.matrix().clone()).is_ok());
        let p = u.pow(5);
        let mut q = Unitary::identity(8);
        for _ in 0..5 {
            q = q.compose(&u).unwrap();
        }
        assert!(max_abs_diff(p.matrix(), q.matrix()) < 1e-12);
    }
}
