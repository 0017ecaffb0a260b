//! Position-space densities and currents from wave functions, Wigner grids
//! and Q grids, and the finite-difference continuity check.
//!
//! Currents are momentum-weighted marginals `j(q) = int p F(q, p) dp`, so the
//! continuity equation reads `d rho/dt + (1/m) dj/dq = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, ModeSpace, StateVector};
use crate::hermite::hermite_functions_with_derivative;
use crate::par::map_indices;
use crate::phasespace::{q_grid, Axis, DistributionKind, Measure, PhaseDistribution, PhaseGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialProfile {
    /// Position samples.
    pub axis: Axis,
    pub density: Vec<f64>,
    pub current: Vec<f64>,
}

impl SpatialProfile {
    pub fn positions(&self) -> Vec<f64> {
        self.axis.values()
    }

    /// `int density dq`
    pub fn norm(&self) -> f64 {
        self.axis
            .weights()
            .iter()
            .zip(&self.density)
            .map(|(w, d)| w * d)
            .sum()
    }

    pub fn density_at(&self, q: f64) -> Option<f64> {
        self.index_of(q).map(|i| self.density[i])
    }

    pub fn current_at(&self, q: f64) -> Option<f64> {
        self.index_of(q).map(|i| self.current[i])
    }

    fn index_of(&self, q: f64) -> Option<usize> {
        let i = ((q - self.axis.min) / self.axis.step()).round();
        if i < 0.0 || i as usize >= self.axis.samples {
            return None;
        }
        let i = i as usize;
        ((self.axis.value(i) - q).abs() < 1e-9 * self.axis.step().max(1.0)).then_some(i)
    }
}

/// Position axis covering the default phase-space grid of `space`.
pub fn default_position_axis(space: &ModeSpace) -> Result<Axis> {
    let reach = 2.0 * space.q_scale(0) * crate::phasespace::DEFAULT_GRID_RADIUS;
    Axis::symmetric(reach, 241)
}

fn single_mode(space: &ModeSpace) -> Result<()> {
    if space.mode_count() != 1 {
        return Err(Error::Unsupported(format!(
            "spatial profiles are implemented for a single mode, got {}",
            space.mode_count()
        )));
    }
    Ok(())
}

/// `<q|rho|q>` and `hbar Im <q|rho d/dq|q>` on `axis`.
pub fn density_profile(rho: &DensityOperator, axis: &Axis) -> Result<SpatialProfile> {
    let space = rho.space();
    single_mode(space)?;
    let d = space.dim();
    let ell = space.length_scale(0);
    let hbar = space.hbar();
    let m = rho.matrix();
    let xs = axis.values();
    let rows = map_indices(xs.len(), |i| {
        let (phi, dphi) = hermite_functions_with_derivative(d, xs[i] / ell);
        let mut dens = Complex64::new(0.0, 0.0);
        let mut flux = Complex64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                // psi* psi' = sum rho_ba phi_a phi_b'
                let r = m[(b, a)];
                dens += r * (phi[a] * phi[b]);
                flux += r * (phi[a] * dphi[b]);
            }
        }
        (dens.re / ell, hbar * flux.im / (ell * ell))
    });
    let (density, current) = rows.into_iter().unzip();
    Ok(SpatialProfile {
        axis: *axis,
        density,
        current,
    })
}

/// `|psi(q)|^2` and `hbar Im(psi* dpsi/dq)`.
pub fn psi_profile(state: &StateVector, axis: &Axis) -> Result<SpatialProfile> {
    density_profile(&crate::fock::pure_density(state), axis)
}

fn marginals(dist: &PhaseDistribution) -> Result<SpatialProfile> {
    let grid = dist.grid();
    let space = grid.space();
    single_mode(space)?;
    if dist.measure() != Measure::Qp {
        return Err(Error::Measure(
            "position marginals need a distribution per dq dp".into(),
        ));
    }
    let [re, im] = [grid.axes()[0], grid.axes()[1]];
    let (qs, ps) = (2.0 * space.q_scale(0), 2.0 * space.p_scale(0));
    let p_axis = Axis::new(ps * im.min, ps * im.max, im.samples)?;
    let p = p_axis.values();
    let w = p_axis.weights();
    let v = dist.values();
    let ni = im.samples;
    let mut density = Vec::with_capacity(re.samples);
    let mut current = Vec::with_capacity(re.samples);
    for r in 0..re.samples {
        let row = &v[r * ni..(r + 1) * ni];
        density.push(row.iter().zip(&w).map(|(f, w)| f * w).sum());
        current.push(row.iter().zip(&w).zip(&p).map(|((f, w), p)| f * w * p).sum());
    }
    Ok(SpatialProfile {
        axis: Axis::new(qs * re.min, qs * re.max, re.samples)?,
        density,
        current,
    })
}

/// `int W dp` and `int p W dp`; these reproduce the wave-function profile.
pub fn wigner_marginals(wigner: &PhaseDistribution) -> Result<SpatialProfile> {
    if wigner.kind() != DistributionKind::Wigner {
        return Err(Error::Domain(format!(
            "expected a Wigner grid, got {}",
            wigner.kind().name()
        )));
    }
    marginals(wigner)
}

/// `int Q dp` and `int p Q dp` by direct quadrature; broader than the
/// wave-function profile by a Gaussian of variance `hbar / (2 m omega)`.
pub fn q_marginals(q: &PhaseDistribution) -> Result<SpatialProfile> {
    if !q.kind().is_q_like(q.grid().space()) {
        return Err(Error::Domain(format!(
            "expected a Q grid, got {}",
            q.kind().name()
        )));
    }
    marginals(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// `max |d rho_Q/dt + (1/m) d j_Q/dq|` over interior samples.
    pub residual: f64,
    /// `max |d rho_Q/dt|`, the scale the residual is judged against.
    pub rate_scale: f64,
}

/// Central-difference continuity check on the Q marginals of equally spaced
/// states `states[k]` at times `k dt`. `grid` fixes the position step and the
/// momentum quadrature; it is used with the per-`dq dp` measure.
pub fn continuity_residual(
    states: &[DensityOperator],
    dt: f64,
    grid: &PhaseGrid,
) -> Result<ContinuityReport> {
    if states.len() < 3 {
        return Err(Error::Sampling(format!(
            "the continuity check needs at least 3 time samples, got {}",
            states.len()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Sampling(format!("time step must be positive, got {dt}")));
    }
    let grid = grid.with_measure(Measure::Qp);
    let profiles = states
        .iter()
        .map(|rho| q_marginals(&q_grid(rho, &grid)?))
        .collect::<Result<Vec<_>>>()?;
    let mass = grid.space().modes()[0].mass;
    let axis = profiles[0].axis;
    let dq = axis.step();
    let mut residual = 0.0f64;
    let mut rate_scale = 0.0f64;
    for t in 1..profiles.len() - 1 {
        let (prev, here, next) = (&profiles[t - 1], &profiles[t], &profiles[t + 1]);
        for i in 1..axis.samples - 1 {
            let rate = (next.density[i] - prev.density[i]) / (2.0 * dt);
            let flux = (here.current[i + 1] - here.current[i - 1]) / (2.0 * dq);
            residual = residual.max((rate + flux / mass).abs());
            rate_scale = rate_scale.max(rate.abs());
        }
    }
    Ok(ContinuityReport {
        residual,
        rate_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, harmonic_hamiltonian, number_state, pure_density};
    use crate::phasespace::wigner_grid;
    use crate::random::{random_pure_state, seeded};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn qp_grid(space: &ModeSpace, radius: f64, samples: usize) -> PhaseGrid {
        PhaseGrid::square(space, radius, samples, Measure::Qp).unwrap()
    }

    #[test]
    fn vacuum_wave_function_density() {
        let s = ModeSpace::single(8).unwrap();
        let psi = number_state(&s, &[0]).unwrap();
        let prof = psi_profile(&psi, &default_position_axis(&s).unwrap()).unwrap();
        assert_abs_diff_eq!(prof.density_at(0.0).unwrap(), 1.0 / PI.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(prof.norm(), 1.0, epsilon = 1e-10);
        assert!(prof.current.iter().all(|j| j.abs() < 1e-14));
    }

    #[test]
    fn real_amplitudes_carry_no_current() {
        let s = ModeSpace::single(6).unwrap();
        let amps: Vec<Complex64> = [0.3, -0.5, 0.2, 0.7, -0.1, 0.35]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let psi = StateVector::from_slice(s.clone(), &amps).unwrap();
        let prof = psi_profile(&psi, &default_position_axis(&s).unwrap()).unwrap();
        assert!(prof.current.iter().all(|j| j.abs() < 1e-14));
    }

    #[test]
    fn momentum_kick_current() {
        // alpha = i / sqrt 2 has p0 = 1 at unit constants
        let s = ModeSpace::single(32).unwrap();
        let psi = coherent_state(&s, &[Complex64::new(0.0, 0.5f64.sqrt())]).unwrap();
        let prof = psi_profile(&psi, &default_position_axis(&s).unwrap()).unwrap();
        for (d, j) in prof.density.iter().zip(&prof.current) {
            assert_abs_diff_eq!(*j, *d, epsilon = 1e-9);
        }
    }

    #[test]
    fn mass_and_hbar_enter_the_current() {
        let s = ModeSpace::with_units(1, 40, 0.5, 2.0, 1.5).unwrap();
        let alpha = Complex64::new(0.4, 1.1);
        let psi = coherent_state(&s, &[alpha]).unwrap();
        let p0 = 2.0 * s.p_scale(0) * alpha.im;
        let prof = psi_profile(&psi, &default_position_axis(&s).unwrap()).unwrap();
        for (d, j) in prof.density.iter().zip(&prof.current) {
            assert_abs_diff_eq!(*j, p0 * d, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(prof.norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn wigner_marginal_examples() {
        let s = ModeSpace::single(8).unwrap();
        let grid = qp_grid(&s, 6.0, 121);
        let vac = pure_density(&number_state(&s, &[0]).unwrap());
        let prof = wigner_marginals(&wigner_grid(&vac, &grid).unwrap()).unwrap();
        assert_abs_diff_eq!(prof.density_at(0.0).unwrap(), 1.0 / PI.sqrt(), epsilon = 1e-10);
        let one = pure_density(&number_state(&s, &[1]).unwrap());
        let prof = wigner_marginals(&wigner_grid(&one, &grid).unwrap()).unwrap();
        assert_abs_diff_eq!(prof.density_at(0.0).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(prof.norm(), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn wigner_marginals_need_qp_measure() {
        let s = ModeSpace::single(4).unwrap();
        let vac = pure_density(&number_state(&s, &[0]).unwrap());
        let grid = PhaseGrid::square(&s, 6.0, 41, Measure::Alpha).unwrap();
        assert!(matches!(
            wigner_marginals(&wigner_grid(&vac, &grid).unwrap()),
            Err(Error::Measure(_))
        ));
    }

    #[test]
    fn wigner_marginals_match_wave_function() {
        let s = ModeSpace::single(16).unwrap();
        let grid = qp_grid(&s, 9.0, 241);
        let mut rng = seeded(21);
        for _ in 0..2 {
            let psi = random_pure_state(&s, &mut rng).unwrap();
            let w = wigner_marginals(&wigner_grid(&pure_density(&psi), &grid).unwrap()).unwrap();
            let direct = psi_profile(&psi, &w.axis).unwrap();
            for i in 0..w.density.len() {
                assert_abs_diff_eq!(w.density[i], direct.density[i], epsilon = 1e-5);
                assert_abs_diff_eq!(w.current[i], direct.current[i], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn vacuum_q_marginal_is_broadened() {
        let s = ModeSpace::single(8).unwrap();
        let vac = pure_density(&number_state(&s, &[0]).unwrap());
        let prof = q_marginals(&q_grid(&vac, &qp_grid(&s, 6.0, 121)).unwrap()).unwrap();
        let at0 = prof.density_at(0.0).unwrap();
        assert_abs_diff_eq!(at0, 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-10);
        assert!(at0 < 1.0 / PI.sqrt());
        assert_abs_diff_eq!(prof.norm(), 1.0, epsilon = 1e-5);
        assert!(prof.current.iter().all(|j| j.abs() < 1e-14));
    }

    #[test]
    fn q_marginal_is_smoothed_wave_function_density() {
        let s = ModeSpace::with_units(1, 16, 1.0, 0.7, 1.3).unwrap();
        let psi = random_pure_state(&s, &mut seeded(4)).unwrap();
        let prof = q_marginals(&q_grid(&pure_density(&psi), &qp_grid(&s, 9.0, 181)).unwrap()).unwrap();
        // smoothing kernel: Gaussian of variance hbar / (2 m omega)
        let var = s.q_scale(0).powi(2);
        let fine = Axis::symmetric(prof.axis.max + 10.0 * var.sqrt(), 2001).unwrap();
        let base = psi_profile(&psi, &fine).unwrap();
        let (xs, ws) = (fine.values(), fine.weights());
        for (i, q) in prof.positions().iter().enumerate().step_by(7) {
            let smooth: f64 = xs
                .iter()
                .zip(&ws)
                .zip(&base.density)
                .map(|((x, w), d)| w * d * (-(q - x).powi(2) / (2.0 * var)).exp())
                .sum::<f64>()
                / (2.0 * PI * var).sqrt();
            assert_abs_diff_eq!(prof.density[i], smooth, epsilon = 1e-4);
        }
    }

    fn harmonic_states(rho0: &DensityOperator, dt: f64) -> Vec<DensityOperator> {
        let h = harmonic_hamiltonian(rho0.space());
        let (vals, vecs) = {
            let e = nalgebra::SymmetricEigen::new(h.matrix().clone());
            (e.eigenvalues, e.eigenvectors)
        };
        (0..3)
            .map(|k| {
                let t = k as f64 * dt;
                let phases = nalgebra::DMatrix::from_diagonal(&vals.map(|e| Complex64::from_polar(1.0, -e * t)));
                let u = &vecs * phases * vecs.adjoint();
                DensityOperator::new(rho0.space().clone(), &u * rho0.matrix() * u.adjoint()).unwrap()
            })
            .collect()
    }

    #[test]
    fn stationary_state_has_no_residual() {
        let s = ModeSpace::single(8).unwrap();
        let rho = pure_density(&number_state(&s, &[3]).unwrap());
        let states = vec![rho.clone(), rho.clone(), rho];
        let r = continuity_residual(&states, 1e-3, &qp_grid(&s, 6.0, 121)).unwrap();
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn continuity_converges_at_second_order() {
        let s = ModeSpace::single(32).unwrap();
        let alpha = Complex64::from_polar(1.0, -PI / 4.0);
        let rho = pure_density(&coherent_state(&s, &[alpha]).unwrap());
        let run = |dt: f64, dq: f64| {
            let step = dq / (2.0 * s.q_scale(0));
            let re = Axis::with_step(-6.0, 6.0, step).unwrap();
            let im = Axis::symmetric(6.0, 121).unwrap();
            let grid = PhaseGrid::new(s.clone(), vec![re, im], Measure::Qp).unwrap();
            continuity_residual(&harmonic_states(&rho, dt), dt, &grid).unwrap()
        };
        let coarse = run(1e-3, 0.05);
        assert!(coarse.residual < 1e-3 * coarse.rate_scale, "{coarse:?}");
        let fine = run(5e-4, 0.025);
        let ratio = coarse.residual / fine.residual;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn continuity_needs_three_samples() {
        let s = ModeSpace::single(4).unwrap();
        let rho = pure_density(&number_state(&s, &[0]).unwrap());
        assert!(matches!(
            continuity_residual(&[rho.clone(), rho], 1e-3, &qp_grid(&s, 6.0, 41)),
            Err(Error::Sampling(_))
        ));
    }
}
