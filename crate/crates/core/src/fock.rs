//! Truncated Fock-space algebra: mode spaces, ladder operators, states and
//! density operators.
//!
//! Multi-mode bases are tensor products with mode 0 as the slowest-varying
//! index, so the basis vector for occupations `(n0, n1, ..)` sits at
//! `n0 * D1 * D2 * .. + n1 * D2 * .. + ..`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the dense matrix dimension of a [`ModeSpace`].
pub const DIM_CAP: usize = 4096;
pub const DEFAULT_TRUNCATION: usize = 32;
/// Largest probability a coherent state may leak past the top Fock level.
pub const COHERENT_TAIL_TOLERANCE: f64 = 1e-8;
/// Largest `||(a - alpha)|alpha>||` a truncated coherent state may carry.
pub const COHERENT_RESIDUAL_TOLERANCE: f64 = 1e-7;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// One bosonic degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Number of retained Fock levels (`0..truncation`).
    pub truncation: usize,
    pub mass: f64,
    pub omega: f64,
}

impl Mode {
    pub fn new(truncation: usize) -> Self {
        Mode {
            truncation,
            mass: 1.0,
            omega: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpace {
    hbar: f64,
    modes: Vec<Mode>,
}

impl ModeSpace {
    /// `modes` identical modes with unit constants.
    pub fn new(modes: usize, truncation: usize) -> Result<Self> {
        Self::with_units(modes, truncation, 1.0, 1.0, 1.0)
    }

    pub fn single(truncation: usize) -> Result<Self> {
        Self::new(1, truncation)
    }

    pub fn with_units(
        modes: usize,
        truncation: usize,
        hbar: f64,
        mass: f64,
        omega: f64,
    ) -> Result<Self> {
        Self::from_modes(
            hbar,
            vec![
                Mode {
                    truncation,
                    mass,
                    omega
                };
                modes
            ],
        )
    }

    pub fn from_modes(hbar: f64, modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Domain("a mode space needs at least one mode".into()));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        let mut dim: usize = 1;
        for (k, m) in modes.iter().enumerate() {
            if m.truncation < 2 {
                return Err(Error::Domain(format!(
                    "mode {k}: truncation must be at least 2, got {}",
                    m.truncation
                )));
            }
            if !(m.mass.is_finite() && m.mass > 0.0 && m.omega.is_finite() && m.omega > 0.0) {
                return Err(Error::Domain(format!(
                    "mode {k}: mass and omega must be positive (mass={}, omega={})",
                    m.mass, m.omega
                )));
            }
            dim = dim.saturating_mul(m.truncation);
        }
        if dim > DIM_CAP {
            return Err(Error::Scale { dim, cap: DIM_CAP });
        }
        Ok(ModeSpace { hbar, modes })
    }

    /// Joint space `self ⊗ other`; modes of `self` come first.
    pub fn tensor(&self, other: &ModeSpace) -> Result<ModeSpace> {
        if (self.hbar - other.hbar).abs() > 1e-15 * self.hbar.max(other.hbar) {
            return Err(Error::Domain("cannot combine spaces with different hbar".into()));
        }
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        ModeSpace::from_modes(self.hbar, modes)
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, k: usize) -> Result<&Mode> {
        self.modes.get(k).ok_or(Error::ModeIndex {
            mode: k,
            modes: self.modes.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.truncation).product()
    }

    /// Distance between adjacent basis indices that differ by one quantum in mode `k`.
    pub fn stride(&self, k: usize) -> usize {
        self.modes[k + 1..].iter().map(|m| m.truncation).product()
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes.len() {
            return Err(Error::Dimension {
                expected: self.modes.len(),
                got: occupations.len(),
            });
        }
        let mut idx = 0;
        for (k, (&n, m)) in occupations.iter().zip(&self.modes).enumerate() {
            if n >= m.truncation {
                return Err(Error::Occupation {
                    mode: k,
                    level: n,
                    truncation: m.truncation,
                });
            }
            idx = idx * m.truncation + n;
        }
        Ok(idx)
    }

    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes.len()];
        for (k, m) in self.modes.iter().enumerate().rev() {
            occ[k] = index % m.truncation;
            index /= m.truncation;
        }
        occ
    }

    /// `sqrt(hbar / (2 m omega))`, so that `q = q_scale (alpha + alpha*)`.
    pub fn q_scale(&self, k: usize) -> f64 {
        let m = &self.modes[k];
        (self.hbar / (2.0 * m.mass * m.omega)).sqrt()
    }

    /// `sqrt(hbar m omega / 2)`; `p = i p_scale (alpha* - alpha)`.
    pub fn p_scale(&self, k: usize) -> f64 {
        let m = &self.modes[k];
        (self.hbar * m.mass * m.omega / 2.0).sqrt()
    }

    /// Oscillator length `sqrt(hbar / (m omega))`.
    pub fn length_scale(&self, k: usize) -> f64 {
        let m = &self.modes[k];
        (self.hbar / (m.mass * m.omega)).sqrt()
    }

    pub(crate) fn check_same(&self, other: &ModeSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: ModeSpace,
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; a zero vector is rejected.
    pub fn new(space: ModeSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState(format!(
                "cannot normalize a vector of norm {norm}"
            )));
        }
        Ok(StateVector {
            space,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_slice(space: ModeSpace, amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(space, DVector::from_column_slice(amplitudes))
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let space = self.space.tensor(&other.space)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(StateVector { space, amplitudes })
    }

    /// Unnormalized image `A|psi>`.
    pub fn apply(&self, op: &OperatorMatrix) -> Result<DVector<Complex64>> {
        self.space.check_same(&op.space)?;
        Ok(&op.matrix * &self.amplitudes)
    }

    pub(crate) fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < NORM_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: ModeSpace,
    matrix: DMatrix<Complex64>,
    label: String,
}

impl OperatorMatrix {
    pub fn new(space: ModeSpace, matrix: DMatrix<Complex64>, label: impl Into<String>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(OperatorMatrix {
            space,
            matrix,
            label: label.into(),
        })
    }

    pub fn identity(space: &ModeSpace) -> Self {
        let d = space.dim();
        OperatorMatrix {
            space: space.clone(),
            matrix: DMatrix::identity(d, d),
            label: "1".into(),
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            label: format!("({})'", self.label),
        }
    }

    pub fn product(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.space.check_same(&rhs.space)?;
        Ok(OperatorMatrix {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
            label: format!("{} {}", self.label, rhs.label),
        })
    }

    pub fn sum(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.space.check_same(&rhs.space)?;
        Ok(OperatorMatrix {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
            label: format!("{} + {}", self.label, rhs.label),
        })
    }

    pub fn scaled(&self, factor: Complex64) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space.clone(),
            matrix: self.matrix.map(|z| z * factor),
            label: format!("{factor} {}", self.label),
        }
    }

    /// `[self, rhs]`
    pub fn commutator(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.space.check_same(&rhs.space)?;
        Ok(OperatorMatrix {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix,
            label: format!("[{}, {}]", self.label, rhs.label),
        })
    }

    /// Largest elementwise `|A - A^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }
}

/// A validated density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    space: ModeSpace,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    pub fn new(space: ModeSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let rho = DensityOperator { space, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Skips the eigenvalue check; used where positivity holds by construction
    /// (unitary conjugation, convex sums, partial traces).
    pub(crate) fn from_parts(space: ModeSpace, matrix: DMatrix<Complex64>) -> Self {
        DensityOperator { space, matrix }
    }

    pub fn pure(state: &StateVector) -> Self {
        let v = state.amplitudes();
        DensityOperator {
            space: state.space().clone(),
            matrix: v * v.adjoint(),
        }
    }

    /// Convex combination; weights must be non-negative and sum to one.
    pub fn mixture(components: &[(f64, DensityOperator)]) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::InvalidState("empty mixture".into()));
        };
        let mut total = 0.0;
        let d = first.space.dim();
        let mut matrix = DMatrix::zeros(d, d);
        for (w, rho) in components {
            first.space.check_same(&rho.space)?;
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidState(format!("negative mixture weight {w}")));
            }
            total += w;
            matrix += rho.matrix.map(|z| z * *w);
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(DensityOperator {
            space: first.space.clone(),
            matrix,
        })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `tr(rho^2)`, computed as the Frobenius norm squared.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = nalgebra::SymmetricEigen::new(hermitian_part(&self.matrix));
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "density operator is not Hermitian (defect {herm:.2e})"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "density operator has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// `tr(rho A)`
    pub fn expectation(&self, op: &OperatorMatrix) -> Result<Complex64> {
        self.space.check_same(op.space())?;
        Ok(trace_of_product(&self.matrix, op.matrix()))
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let space = self.space.tensor(&other.space)?;
        Ok(DensityOperator {
            space,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Reduced state on the listed modes (in increasing mode order).
    pub fn reduce_to(&self, keep: &[usize]) -> Result<DensityOperator> {
        let m = self.space.mode_count();
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() {
            return Err(Error::Domain("partial trace must keep at least one mode".into()));
        }
        if let Some(&bad) = keep.iter().find(|&&k| k >= m) {
            return Err(Error::ModeIndex { mode: bad, modes: m });
        }
        let kept_modes: Vec<Mode> = keep.iter().map(|&k| self.space.modes[k]).collect();
        let reduced = ModeSpace::from_modes(self.space.hbar, kept_modes)?;
        let d = self.space.dim();
        let dr = reduced.dim();
        let mut out = DMatrix::<Complex64>::zeros(dr, dr);
        let occs: Vec<Vec<usize>> = (0..d).map(|i| self.space.occupations(i)).collect();
        let kept_index = |occ: &[usize]| -> usize {
            keep.iter()
                .fold(0, |acc, &k| acc * self.space.modes[k].truncation + occ[k])
        };
        for i in 0..d {
            for j in 0..d {
                let (oi, oj) = (&occs[i], &occs[j]);
                let traced_match = (0..m)
                    .filter(|k| !keep.contains(k))
                    .all(|k| oi[k] == oj[k]);
                if traced_match {
                    out[(kept_index(oi), kept_index(oj))] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityOperator {
            space: reduced,
            matrix: out,
        })
    }
}

pub(crate) fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).map(|z| z * 0.5)
}

pub(crate) fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn single_mode_ladder(space: &ModeSpace, mode: usize, raise: bool) -> Result<DMatrix<Complex64>> {
    space.mode(mode)?;
    let d = space.dim();
    let stride = space.stride(mode);
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let n = space.occupations(j)[mode];
        if n > 0 {
            // <n-1| a |n> = sqrt(n)
            let i = j - stride;
            let v = Complex64::new((n as f64).sqrt(), 0.0);
            if raise {
                m[(j, i)] = v;
            } else {
                m[(i, j)] = v;
            }
        }
    }
    Ok(m)
}

pub fn annihilation(space: &ModeSpace, mode: usize) -> Result<OperatorMatrix> {
    let m = single_mode_ladder(space, mode, false)?;
    OperatorMatrix::new(space.clone(), m, format!("a{mode}"))
}

pub fn creation(space: &ModeSpace, mode: usize) -> Result<OperatorMatrix> {
    let m = single_mode_ladder(space, mode, true)?;
    OperatorMatrix::new(space.clone(), m, format!("a{mode}'"))
}

/// `q = sqrt(hbar / 2 m omega) (a + a')`
pub fn position(space: &ModeSpace, mode: usize) -> Result<OperatorMatrix> {
    let a = single_mode_ladder(space, mode, false)?;
    let s = space.q_scale(mode);
    let m = (&a + a.adjoint()).map(|z| z * s);
    OperatorMatrix::new(space.clone(), m, format!("q{mode}"))
}

/// `p = i sqrt(hbar m omega / 2) (a' - a)`
pub fn momentum(space: &ModeSpace, mode: usize) -> Result<OperatorMatrix> {
    let a = single_mode_ladder(space, mode, false)?;
    let s = Complex64::new(0.0, space.p_scale(mode));
    let m = (a.adjoint() - &a).map(|z| z * s);
    OperatorMatrix::new(space.clone(), m, format!("p{mode}"))
}

pub fn number_operator(space: &ModeSpace, mode: usize) -> Result<OperatorMatrix> {
    space.mode(mode)?;
    let d = space.dim();
    let diag = DVector::from_fn(d, |i, _| Complex64::new(space.occupations(i)[mode] as f64, 0.0));
    OperatorMatrix::new(space.clone(), DMatrix::from_diagonal(&diag), format!("n{mode}"))
}

/// `sum_k hbar omega_k (n_k + 1/2)`
pub fn harmonic_hamiltonian(space: &ModeSpace) -> OperatorMatrix {
    let d = space.dim();
    let diag = DVector::from_fn(d, |i, _| {
        let e: f64 = space
            .occupations(i)
            .iter()
            .zip(space.modes())
            .map(|(&n, m)| space.hbar() * m.omega * (n as f64 + 0.5))
            .sum();
        Complex64::new(e, 0.0)
    });
    OperatorMatrix {
        space: space.clone(),
        matrix: DMatrix::from_diagonal(&diag),
        label: "H_harmonic".into(),
    }
}

/// `sum_k hbar (omega_k n_k + chi n_k^2)`, the quartic (Kerr) oscillator.
pub fn kerr_hamiltonian(space: &ModeSpace, chi: f64) -> OperatorMatrix {
    let d = space.dim();
    let diag = DVector::from_fn(d, |i, _| {
        let e: f64 = space
            .occupations(i)
            .iter()
            .zip(space.modes())
            .map(|(&n, m)| {
                let n = n as f64;
                space.hbar() * (m.omega * n + chi * n * n)
            })
            .sum();
        Complex64::new(e, 0.0)
    });
    OperatorMatrix {
        space: space.clone(),
        matrix: DMatrix::from_diagonal(&diag),
        label: format!("H_kerr(chi={chi})"),
    }
}

pub fn number_state(space: &ModeSpace, occupations: &[usize]) -> Result<StateVector> {
    let idx = space.index_of(occupations)?;
    let mut v = DVector::zeros(space.dim());
    v[idx] = ONE;
    Ok(StateVector {
        space: space.clone(),
        amplitudes: v,
    })
}

/// Exact Fock-basis projections `<n|alpha> = exp(-|alpha|^2/2) alpha^n / sqrt(n!)`
/// for `n < levels`, without renormalization.
pub fn coherent_amplitudes(alpha: Complex64, levels: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(levels);
    let mut cur = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..levels {
        if n > 0 {
            cur = cur * alpha / (n as f64).sqrt();
        }
        c.push(cur);
    }
    c
}

/// Probability a coherent state of amplitude `|alpha|` places on levels `>= levels`.
pub fn coherent_tail(abs_alpha: f64, levels: usize) -> f64 {
    let kept: f64 = coherent_amplitudes(Complex64::new(abs_alpha, 0.0), levels)
        .iter()
        .map(|c| c.norm_sqr())
        .sum();
    (1.0 - kept).max(0.0)
}

/// Eigenvalue residual `||(a - alpha)|alpha>||` of the renormalized truncated
/// coherent state; only the top level contributes.
pub fn coherent_residual(abs_alpha: f64, levels: usize) -> f64 {
    let c = coherent_amplitudes(Complex64::new(abs_alpha, 0.0), levels);
    let kept: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    abs_alpha * c[levels - 1].norm() / kept.sqrt()
}

/// Smallest truncation whose coherent tail at `|alpha|` is below `tol` and
/// whose eigenvalue residual is below [`COHERENT_RESIDUAL_TOLERANCE`].
pub fn required_truncation(abs_alpha: f64, tol: f64) -> usize {
    let x = abs_alpha * abs_alpha;
    let mut term = (-x).exp();
    let mut kept = term;
    let mut n = 1;
    let residual_sq = COHERENT_RESIDUAL_TOLERANCE * COHERENT_RESIDUAL_TOLERANCE;
    // `term` is the weight of level n - 1
    while (1.0 - kept >= tol || x * term >= residual_sq * kept) && n < 100_000 {
        term *= x / n as f64;
        kept += term;
        n += 1;
    }
    n.max(2)
}

/// Tensor product of coherent states, truncated and renormalized.
///
/// Fails when any mode would lose more than [`COHERENT_TAIL_TOLERANCE`] of its
/// probability to the truncation, or when the top level is occupied enough to
/// break the eigenvalue relation by [`COHERENT_RESIDUAL_TOLERANCE`].
pub fn coherent_state(space: &ModeSpace, alphas: &[Complex64]) -> Result<StateVector> {
    if alphas.len() != space.mode_count() {
        return Err(Error::Dimension {
            expected: space.mode_count(),
            got: alphas.len(),
        });
    }
    let mut amps = DVector::from_element(1, ONE);
    for (alpha, mode) in alphas.iter().zip(space.modes()) {
        let d = mode.truncation;
        let c = coherent_amplitudes(*alpha, d);
        let kept: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let tail = (1.0 - kept).max(0.0);
        let residual = alpha.norm() * c[d - 1].norm() / kept.sqrt();
        if tail >= COHERENT_TAIL_TOLERANCE || residual >= COHERENT_RESIDUAL_TOLERANCE {
            return Err(Error::CoherentTail {
                abs_alpha: alpha.norm(),
                tail,
                truncation_minus_one: d - 1,
                required: required_truncation(alpha.norm(), COHERENT_TAIL_TOLERANCE),
            });
        }
        let v = DVector::from_vec(c).unscale(kept.sqrt());
        amps = amps.kronecker(&v);
    }
    Ok(StateVector {
        space: space.clone(),
        amplitudes: amps,
    })
}

pub fn pure_density(state: &StateVector) -> DensityOperator {
    debug_assert!(state.is_normalized());
    DensityOperator::pure(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn annihilation_matrix_d3() {
        let s = ModeSpace::single(3).unwrap();
        let a = annihilation(&s, 0).unwrap();
        let want = [[0.0, 1.0, 0.0], [0.0, 0.0, 2f64.sqrt()], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(a.matrix()[(i, j)].re, want[i][j], epsilon = 1e-15);
                assert_eq!(a.matrix()[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn annihilation_kills_vacuum() {
        let s = ModeSpace::single(5).unwrap();
        let a = annihilation(&s, 0).unwrap();
        let out = number_state(&s, &[0]).unwrap().apply(&a).unwrap();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn coherent_state_is_annihilation_eigenvector() {
        let s = ModeSpace::single(32).unwrap();
        let alpha = c(0.5, 0.0);
        let psi = coherent_state(&s, &[alpha]).unwrap();
        let a = annihilation(&s, 0).unwrap();
        let resid = psi.apply(&a).unwrap() - psi.amplitudes().map(|z| z * alpha);
        assert!(resid.norm() < 1e-8);
    }

    #[test]
    fn creation_is_adjoint_and_raises() {
        let s = ModeSpace::single(4).unwrap();
        let a = annihilation(&s, 0).unwrap();
        let ad = creation(&s, 0).unwrap();
        assert_eq!(ad.matrix(), &a.matrix().adjoint());
        let out = number_state(&s, &[1]).unwrap().apply(&ad).unwrap();
        assert_abs_diff_eq!(out[2].re, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn commutator_is_identity_below_top_level() {
        let d = 8;
        let s = ModeSpace::single(d).unwrap();
        let a = annihilation(&s, 0).unwrap();
        let ad = creation(&s, 0).unwrap();
        let comm = a.commutator(&ad).unwrap();
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm.matrix()[(i, j)].re, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn position_momentum_moments() {
        let s = ModeSpace::single(6).unwrap();
        let q = position(&s, 0).unwrap();
        let p = momentum(&s, 0).unwrap();
        assert!(q.is_hermitian(1e-12) && p.is_hermitian(1e-12));
        let vac = pure_density(&number_state(&s, &[0]).unwrap());
        let q2 = q.product(&q).unwrap();
        assert_abs_diff_eq!(vac.expectation(&q2).unwrap().re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(vac.expectation(&q).unwrap().norm(), 0.0, epsilon = 1e-15);
        let comm = q.commutator(&p).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(comm.matrix()[(i, i)].im, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(comm.matrix()[(i, i)].re, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn position_scales_with_units() {
        let s = ModeSpace::with_units(1, 6, 2.0, 1.0, 1.0).unwrap();
        let q = position(&s, 0).unwrap();
        let p = momentum(&s, 0).unwrap();
        let comm = q.commutator(&p).unwrap();
        assert_abs_diff_eq!(comm.matrix()[(2, 2)].im, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn number_states_and_energy() {
        let s = ModeSpace::single(4).unwrap();
        let v = number_state(&s, &[2]).unwrap();
        assert_eq!(v.amplitudes()[2], ONE);
        assert_eq!(v.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let h = harmonic_hamiltonian(&s);
        let rho = pure_density(&number_state(&s, &[1]).unwrap());
        assert_abs_diff_eq!(rho.expectation(&h).unwrap().re, 1.5, epsilon = 1e-15);
        assert!(matches!(
            number_state(&s, &[4]),
            Err(Error::Occupation { level: 4, .. })
        ));
    }

    #[test]
    fn coherent_state_values() {
        let s = ModeSpace::single(32).unwrap();
        let vac = coherent_state(&s, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(vac, number_state(&s, &[0]).unwrap());
        let one = coherent_state(&s, &[c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(one.amplitudes()[0].re, (-0.5f64).exp(), epsilon = 1e-12);

        let a = coherent_state(&s, &[c(0.3, 0.0)]).unwrap();
        let b = coherent_state(&s, &[c(0.0, -0.2)]).unwrap();
        let want = (-(c(0.3, 0.2)).norm_sqr()).exp();
        assert_abs_diff_eq!(a.inner(&b).norm_sqr(), want, epsilon = 1e-8);
    }

    #[test]
    fn coherent_guard_names_required_truncation() {
        let s = ModeSpace::single(8).unwrap();
        match coherent_state(&s, &[c(3.0, 0.0)]) {
            Err(Error::CoherentTail { required, .. }) => {
                assert!(required > 8);
                let ok = ModeSpace::single(required).unwrap();
                assert!(coherent_state(&ok, &[c(3.0, 0.0)]).is_ok());
            }
            other => panic!("expected tail error, got {other:?}"),
        }
    }

    #[test]
    fn pure_density_examples() {
        let s = ModeSpace::single(3).unwrap();
        let vac = pure_density(&number_state(&s, &[0]).unwrap());
        assert_eq!(vac.matrix()[(0, 0)], ONE);
        assert_eq!(vac.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);

        let plus = StateVector::from_slice(s.clone(), &[ONE, ONE, ZERO]).unwrap();
        let rho = pure_density(&plus);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_abs_diff_eq!(rho.matrix()[(i, j)].re, 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-9);
        rho.validate().unwrap();

        let one = pure_density(&number_state(&s, &[1]).unwrap());
        let mix = DensityOperator::mixture(&[(0.5, vac), (0.5, one)]).unwrap();
        assert_abs_diff_eq!(mix.purity(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn multimode_ordering_and_partial_trace() {
        let s = ModeSpace::new(2, 3).unwrap();
        assert_eq!(s.index_of(&[1, 2]).unwrap(), 5);
        assert_eq!(s.occupations(5), vec![1, 2]);
        let a1 = annihilation(&s, 1).unwrap();
        let v = number_state(&s, &[1, 2]).unwrap().apply(&a1).unwrap();
        assert_abs_diff_eq!(v[s.index_of(&[1, 1]).unwrap()].re, 2f64.sqrt(), epsilon = 1e-15);

        let single = ModeSpace::single(3).unwrap();
        let r0 = pure_density(&number_state(&single, &[1]).unwrap());
        let r1 = pure_density(&coherent_state(&ModeSpace::single(3).unwrap(), &[c(0.0, 0.0)]).unwrap());
        let joint = r0.tensor(&r1).unwrap();
        assert_eq!(joint.reduce_to(&[0]).unwrap().matrix(), r0.matrix());
        assert_eq!(joint.reduce_to(&[1]).unwrap().matrix(), r1.matrix());
    }

    #[test]
    fn space_validation() {
        assert!(ModeSpace::single(1).is_err());
        assert!(ModeSpace::with_units(1, 4, 0.0, 1.0, 1.0).is_err());
        assert!(matches!(ModeSpace::new(3, 17), Err(Error::Scale { .. })));
        assert!(ModeSpace::new(2, 64).is_ok());
        let s = ModeSpace::single(4).unwrap();
        assert!(matches!(annihilation(&s, 1), Err(Error::ModeIndex { .. })));
    }

    #[test]
    fn invalid_density_rejected() {
        let s = ModeSpace::single(2).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), ZERO, ZERO, c(-0.5, 0.0)]);
        assert!(DensityOperator::new(s.clone(), m).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), ZERO, c(0.5, 0.0)]);
        assert!(DensityOperator::new(s, m).is_err());
    }
}
