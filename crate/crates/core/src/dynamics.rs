//! Unitary time evolution and the induced Q-function dynamics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, OperatorMatrix};
use crate::par::map_indices;
use crate::phasespace::eval::{coherent_projection, q_at, sandwich};
use crate::phasespace::{q_grid, Measure, PhaseDistribution, PhaseGrid, PhasePoint};

/// Hermiticity tolerance for Hamiltonians.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// States `rho(t_k)` on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|r| (r.trace() - 1.0).norm())
            .fold(0.0, f64::max)
    }

    pub fn purities(&self) -> Vec<f64> {
        self.states.iter().map(DensityOperator::purity).collect()
    }

    pub fn expectations(&self, op: &OperatorMatrix) -> Result<Vec<Complex64>> {
        self.states.iter().map(|r| r.expectation(op)).collect()
    }

    pub fn q_grids(&self, grid: &PhaseGrid) -> Result<Vec<PhaseDistribution>> {
        self.states.iter().map(|r| q_grid(r, grid)).collect()
    }
}

/// Exact propagator `exp(-i H t / hbar)` from the eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct Propagator {
    hamiltonian: OperatorMatrix,
    energies: DVector<f64>,
    basis: DMatrix<Complex64>,
}

impl Propagator {
    pub fn new(hamiltonian: &OperatorMatrix) -> Result<Self> {
        let defect = hamiltonian.hermiticity_defect();
        if defect > HERMITIAN_TOLERANCE {
            return Err(Error::Domain(format!(
                "Hamiltonian is not Hermitian (defect {defect:.3e})"
            )));
        }
        let eig = SymmetricEigen::new(hamiltonian.matrix().clone());
        Ok(Propagator {
            hamiltonian: hamiltonian.clone(),
            energies: eig.eigenvalues,
            basis: eig.eigenvectors,
        })
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `U rho U'` at time `t`.
    pub fn evolve(&self, rho: &DensityOperator, t: f64) -> Result<DensityOperator> {
        rho.space().check_same(self.hamiltonian.space())?;
        let hbar = rho.space().hbar();
        let v = &self.basis;
        let mut tilde = v.adjoint() * rho.matrix() * v;
        let phase: Vec<Complex64> = self
            .energies
            .iter()
            .map(|e| Complex64::from_polar(1.0, -e * t / hbar))
            .collect();
        for j in 0..tilde.nrows() {
            for k in 0..tilde.ncols() {
                tilde[(j, k)] *= phase[j] * phase[k].conj();
            }
        }
        let m = v * tilde * v.adjoint();
        Ok(DensityOperator::from_parts(
            rho.space().clone(),
            crate::fock::hermitian_part(&m),
        ))
    }
}

/// Propagates `rho0` to the `steps + 1` times `k t_final / steps`.
pub fn evolve(
    rho0: &DensityOperator,
    hamiltonian: &OperatorMatrix,
    t_final: f64,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Sampling("evolution needs at least one step".into()));
    }
    if !t_final.is_finite() {
        return Err(Error::Domain(format!("final time must be finite, got {t_final}")));
    }
    let prop = Propagator::new(hamiltonian)?;
    let times: Vec<f64> = (0..=steps)
        .map(|k| t_final * k as f64 / steps as f64)
        .collect();
    let states = times
        .iter()
        .map(|&t| prop.evolve(rho0, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times, states })
}

fn rate_matrix(rho: &DensityOperator, hamiltonian: &OperatorMatrix) -> Result<DMatrix<Complex64>> {
    rho.space().check_same(hamiltonian.space())?;
    let h = hamiltonian.matrix();
    let r = rho.matrix();
    Ok(h * r - r * h)
}

/// `dQ/dt = -(i / pi^M hbar) <alpha|[H, rho]|alpha>`, per `d^2 alpha`.
pub fn q_time_derivative(
    rho: &DensityOperator,
    hamiltonian: &OperatorMatrix,
    point: &PhasePoint,
) -> Result<f64> {
    let space = rho.space();
    if point.mode_count() != space.mode_count() {
        return Err(Error::Dimension {
            expected: space.mode_count(),
            got: point.mode_count(),
        });
    }
    let comm = rate_matrix(rho, hamiltonian)?;
    Ok(rate_at(&comm, space, point.alphas()))
}

fn rate_at(comm: &DMatrix<Complex64>, space: &crate::fock::ModeSpace, alphas: &[Complex64]) -> f64 {
    let c = coherent_projection(space, alphas);
    let v = sandwich(comm, &c) * Complex64::new(0.0, -1.0);
    v.re / (PI.powi(space.mode_count() as i32) * space.hbar())
}

/// `dQ/dt` on every grid point, in the grid's measure.
pub fn q_time_derivative_grid(
    rho: &DensityOperator,
    hamiltonian: &OperatorMatrix,
    grid: &PhaseGrid,
) -> Result<Vec<f64>> {
    let space = rho.space();
    space.check_same(grid.space())?;
    let comm = rate_matrix(rho, hamiltonian)?;
    let f = Measure::Alpha.conversion(grid.measure(), space);
    Ok(map_indices(grid.len(), |i| rate_at(&comm, space, &grid.alphas_at(i)) * f))
}

/// `Some(omega)` when `H` is diagonal with level spacing `hbar omega`.
fn harmonic_frequency(hamiltonian: &OperatorMatrix) -> Option<f64> {
    let space = hamiltonian.space();
    if space.mode_count() != 1 {
        return None;
    }
    let h = hamiltonian.matrix();
    let d = h.nrows();
    let scale = h.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
    for i in 0..d {
        for j in 0..d {
            if i != j && h[(i, j)].norm() > 1e-10 * scale {
                return None;
            }
        }
    }
    let spacing = (h[(1, 1)].re - h[(0, 0)].re) / space.hbar();
    let omega = space.modes()[0].omega;
    let regular = (1..d).all(|n| {
        ((h[(n, n)].re - h[(n - 1, n - 1)].re) / space.hbar() - spacing).abs() <= 1e-10 * scale
    });
    (regular && (spacing - omega).abs() <= 1e-10 * omega.max(1.0)).then_some(omega)
}

/// `max |dQ/dt - omega dQ/dphi|` over the grid, the deviation of the exact Q
/// dynamics from the rigid phase-space rotation generated by a harmonic `H`.
///
/// The angular derivative uses a fourth-order central difference with an
/// angular step equal to the grid's smallest spacing, so the residual falls
/// by about 16 when the grid step is halved.
pub fn fokker_planck_residual(
    rho: &DensityOperator,
    hamiltonian: &OperatorMatrix,
    grid: &PhaseGrid,
) -> Result<f64> {
    let space = rho.space();
    space.check_same(grid.space())?;
    let omega = harmonic_frequency(hamiltonian).ok_or_else(|| {
        Error::Unsupported(
            "the drift check needs a single-mode harmonic Hamiltonian hbar omega (n + c)".into(),
        )
    })?;
    let comm = rate_matrix(rho, hamiltonian)?;
    let dphi = grid.smallest_step();
    let rotated = |a: Complex64, k: f64| q_at(rho, &[a * Complex64::from_polar(1.0, k * dphi)]);
    let deviations = map_indices(grid.len(), |i| {
        let a = grid.alphas_at(i)[0];
        let rate = rate_at(&comm, space, &[a]);
        let d_phi = (8.0 * (rotated(a, 1.0) - rotated(a, -1.0)) - (rotated(a, 2.0) - rotated(a, -2.0)))
            / (12.0 * dphi);
        (rate - omega * d_phi).abs()
    });
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        coherent_state, harmonic_hamiltonian, kerr_hamiltonian, number_operator, number_state,
        pure_density, ModeSpace,
    };
    use crate::random::{random_density, seeded};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn coherent(d: usize, a: Complex64) -> DensityOperator {
        let s = ModeSpace::single(d).unwrap();
        pure_density(&coherent_state(&s, &[a]).unwrap())
    }

    #[test]
    fn number_state_is_stationary() {
        let s = ModeSpace::single(10).unwrap();
        let rho = pure_density(&number_state(&s, &[4]).unwrap());
        let traj = evolve(&rho, &harmonic_hamiltonian(&s), 3.0, 6).unwrap();
        for st in &traj.states {
            assert!((st.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn coherent_centroid_rotates() {
        let rho = coherent(32, c(1.0, 0.0));
        let h = harmonic_hamiltonian(rho.space());
        let traj = evolve(&rho, &h, PI / 2.0, 4).unwrap();
        let grid = PhaseGrid::default_for(rho.space()).unwrap();
        for (t, q) in traj.times.iter().zip(traj.q_grids(&grid).unwrap()) {
            let want = Complex64::from_polar(1.0, -t);
            assert!((q.mean_alpha(0) - want).norm() < 1e-6, "t={t}");
        }
        let end = traj.q_grids(&grid).unwrap().pop().unwrap().mean_alpha(0);
        assert_abs_diff_eq!(end.im, -1.0, epsilon = 1e-6);
    }

    #[test]
    fn unitary_invariants_hold() {
        let s = ModeSpace::single(12).unwrap();
        let rho = random_density(&s, &mut seeded(2)).unwrap();
        let traj = evolve(&rho, &kerr_hamiltonian(&s, 0.3), 5.0, 10).unwrap();
        assert!(traj.max_trace_drift() < 1e-9);
        for p in traj.purities() {
            assert_abs_diff_eq!(p, rho.purity(), epsilon = 1e-9);
        }
        for st in &traj.states {
            st.validate().unwrap();
        }
    }

    #[test]
    fn kerr_conserves_number() {
        let s = ModeSpace::single(32).unwrap();
        let rho = coherent(32, c(1.5, 0.5));
        let n = number_operator(&s, 0).unwrap();
        let traj = evolve(&rho, &kerr_hamiltonian(&s, 0.2), 4.0, 8).unwrap();
        let n0 = rho.expectation(&n).unwrap().re;
        for v in traj.expectations(&n).unwrap() {
            assert_abs_diff_eq!(v.re, n0, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let s = ModeSpace::single(4).unwrap();
        let a = crate::fock::annihilation(&s, 0).unwrap();
        let rho = pure_density(&number_state(&s, &[0]).unwrap());
        assert!(matches!(evolve(&rho, &a, 1.0, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn stationary_rate_vanishes() {
        let s = ModeSpace::single(8).unwrap();
        let rho = pure_density(&number_state(&s, &[2]).unwrap());
        let h = harmonic_hamiltonian(&s);
        for a in [c(0.0, 0.0), c(1.0, -0.5), c(-2.0, 1.0)] {
            let r = q_time_derivative(&rho, &h, &PhasePoint::single(a)).unwrap();
            assert!(r.abs() < 1e-15);
        }
    }

    #[test]
    fn rate_matches_central_difference() {
        let s = ModeSpace::single(16).unwrap();
        let rho = random_density(&s, &mut seeded(8)).unwrap();
        let h = kerr_hamiltonian(&s, 0.1);
        let prop = Propagator::new(&h).unwrap();
        let point = PhasePoint::single(c(0.7, -0.4));
        let exact = q_time_derivative(&rho, &h, &point).unwrap();
        let fd = |dt: f64| {
            let plus = crate::phasespace::q_value(&prop.evolve(&rho, dt).unwrap(), &point).unwrap();
            let minus = crate::phasespace::q_value(&prop.evolve(&rho, -dt).unwrap(), &point).unwrap();
            (plus - minus) / (2.0 * dt)
        };
        let e1 = (fd(0.02) - exact).abs();
        let e2 = (fd(0.01) - exact).abs();
        assert!(e1 < 1e-3);
        assert!((e1 / e2 - 4.0).abs() < 0.8, "ratio {}", e1 / e2);
    }

    #[test]
    fn rate_integrates_to_zero() {
        let s = ModeSpace::single(12).unwrap();
        let rho = random_density(&s, &mut seeded(6)).unwrap();
        let grid = PhaseGrid::square(&s, 8.0, 161, Measure::Alpha).unwrap();
        let rates = q_time_derivative_grid(&rho, &kerr_hamiltonian(&s, 0.4), &grid).unwrap();
        let total: f64 = rates.iter().zip(grid.weights()).map(|(r, w)| r * w).sum();
        assert!(total.abs() < 1e-6);
    }

    #[test]
    fn drift_residual_examples() {
        let grid_for = |rho: &DensityOperator| PhaseGrid::default_for(rho.space()).unwrap();
        let vac = coherent(32, c(0.0, 0.0));
        let h = harmonic_hamiltonian(vac.space());
        assert!(fokker_planck_residual(&vac, &h, &grid_for(&vac)).unwrap() < 1e-10);
        let rho = coherent(32, c(1.0, 0.0));
        assert!(fokker_planck_residual(&rho, &h, &grid_for(&rho)).unwrap() < 1e-4);
    }

    #[test]
    fn drift_residual_falls_with_step() {
        let rho = coherent(32, c(0.5, 0.0));
        let h = harmonic_hamiltonian(rho.space());
        let coarse = PhaseGrid::square(rho.space(), 3.0, 31, Measure::Alpha).unwrap();
        let fine = PhaseGrid::square(rho.space(), 3.0, 61, Measure::Alpha).unwrap();
        let r1 = fokker_planck_residual(&rho, &h, &coarse).unwrap();
        let r2 = fokker_planck_residual(&rho, &h, &fine).unwrap();
        let ratio = r1 / r2;
        assert!((ratio - 16.0).abs() < 3.2, "ratio {ratio}");
    }

    #[test]
    fn drift_check_needs_harmonic_hamiltonian() {
        let rho = coherent(8, c(0.0, 0.0));
        let grid = PhaseGrid::square(rho.space(), 3.0, 11, Measure::Alpha).unwrap();
        let kerr = kerr_hamiltonian(rho.space(), 0.1);
        assert!(matches!(
            fokker_planck_residual(&rho, &kerr, &grid),
            Err(Error::Unsupported(_))
        ));
    }
}
