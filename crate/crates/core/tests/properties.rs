//! Randomized invariants across modules.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qphase::dynamics::evolve;
use qphase::fock::{
    annihilation, coherent_state, creation, kerr_hamiltonian, harmonic_hamiltonian, number_operator,
    number_state, pure_density, COHERENT_RESIDUAL_TOLERANCE,
};
use qphase::marginals::{psi_profile, q_marginals, wigner_marginals};
use qphase::measurement::{pointer_probabilities, MeasurementModel};
use qphase::ordering::{berezin_quantize, expectation_trace};
use qphase::phasespace::{phase_expectation, q_grid, wigner_grid, Axis};
use qphase::random::{random_density, random_pure_state, seeded};
use qphase::{DensityOperator, Measure, ModeSpace, PhaseGrid, PhasePolynomial};

fn single(d: usize) -> ModeSpace {
    ModeSpace::single(d).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_density(rho: &DensityOperator) -> Result<(), TestCaseError> {
    prop_assert!(rho.hermiticity_defect() < 1e-10);
    prop_assert!((rho.trace() - 1.0).norm() < 1e-10);
    prop_assert!(rho.eigenvalues().iter().all(|&l| l >= -1e-9));
    Ok(())
}

proptest! {
    #[test]
    fn ladder_operators_are_adjoint(seed in any::<u64>()) {
        let s = single(32);
        let mut rng = seeded(seed);
        let psi = random_pure_state(&s, &mut rng).unwrap();
        let phi = random_pure_state(&s, &mut rng).unwrap();
        let a = annihilation(&s, 0).unwrap();
        let ad = creation(&s, 0).unwrap();
        let lhs = psi.amplitudes().dotc(&phi.apply(&a).unwrap());
        let rhs = psi.apply(&ad).unwrap().dotc(phi.amplitudes());
        prop_assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn accepted_coherent_states_are_eigenvectors(
        re in -6.0f64..6.0,
        im in -6.0f64..6.0,
        d in 2usize..96,
    ) {
        let s = single(d);
        let alpha = Complex64::new(re, im);
        if let Ok(psi) = coherent_state(&s, &[alpha]) {
            prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
            let a = annihilation(&s, 0).unwrap();
            let resid = (psi.apply(&a).unwrap() - psi.amplitudes() * alpha).norm();
            prop_assert!(resid < COHERENT_RESIDUAL_TOLERANCE, "alpha {alpha}, D {d}: {resid:e}");
        }
    }

    #[test]
    fn constructors_meet_their_invariants(seed in any::<u64>(), d in 2usize..10, n in 0usize..10) {
        let s = single(d);
        let mut rng = seeded(seed);
        let psi = random_pure_state(&s, &mut rng).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
        let pure = pure_density(&psi);
        check_density(&pure)?;
        prop_assert!((pure.purity() - 1.0).abs() < 1e-9);
        let mixed = random_density(&s, &mut rng).unwrap();
        check_density(&mixed)?;
        check_density(&DensityOperator::mixture(&[(0.3, pure), (0.7, mixed)]).unwrap())?;
        match number_state(&s, &[n]) {
            Ok(v) => prop_assert!(n < d && v.amplitudes()[n] == Complex64::new(1.0, 0.0)),
            Err(_) => prop_assert!(n >= d),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn q_moments_are_antinormal_expectations(seed in any::<u64>(), a in 0i32..=2, b in 0i32..=2) {
        let s = ModeSpace::with_units(1, 8, 0.7, 1.3, 0.9).unwrap();
        let rho = random_density(&s, &mut seeded(seed)).unwrap();
        let grid = PhaseGrid::square(&s, 9.0, 181, Measure::Qp).unwrap();
        let q = q_grid(&rho, &grid).unwrap();
        let f = PhasePolynomial::parse(&format!("q^{a}*p^{b}")).unwrap();
        let via_q = phase_expectation(&q, &f).unwrap().value;
        let trace = expectation_trace(&rho, &berezin_quantize(&f).unwrap()).unwrap();
        prop_assert!((via_q - trace).norm() < 1e-5, "q^{a} p^{b}: {via_q} vs {trace}");
    }

    #[test]
    fn integrals_do_not_depend_on_the_measure(seed in any::<u64>(), hbar in 0.2f64..3.0) {
        let s = ModeSpace::with_units(1, 8, hbar, 1.0, 1.0).unwrap();
        let rho = random_density(&s, &mut seeded(seed)).unwrap();
        let q = q_grid(&rho, &PhaseGrid::default_for(&s).unwrap()).unwrap();
        prop_assert!((q.integrate() - q.to_measure(Measure::Qp).integrate()).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn position_marginals_of_pure_states(seed in any::<u64>()) {
        let s = single(16);
        let psi = random_pure_state(&s, &mut seeded(seed)).unwrap();
        let rho = pure_density(&psi);
        let grid = PhaseGrid::square(&s, 9.0, 181, Measure::Qp).unwrap();

        let w = wigner_marginals(&wigner_grid(&rho, &grid).unwrap()).unwrap();
        let direct = psi_profile(&psi, &w.axis).unwrap();
        prop_assert!(max_abs_diff(&w.density, &direct.density) < 1e-5);

        let qm = q_marginals(&q_grid(&rho, &grid).unwrap()).unwrap();
        let var = s.q_scale(0).powi(2);
        let fine = Axis::symmetric(qm.axis.max + 10.0 * var.sqrt(), 2001).unwrap();
        let base = psi_profile(&psi, &fine).unwrap();
        let (xs, ws) = (fine.values(), fine.weights());
        let smoothed: Vec<f64> = qm
            .positions()
            .iter()
            .map(|q| {
                xs.iter()
                    .zip(&ws)
                    .zip(&base.density)
                    .map(|((x, w), d)| w * d * (-(q - x).powi(2) / (2.0 * var)).exp())
                    .sum::<f64>()
                    / (2.0 * PI * var).sqrt()
            })
            .collect();
        prop_assert!(max_abs_diff(&qm.density, &smoothed) < 1e-4);

        for norm in [w.norm(), direct.norm(), qm.norm()] {
            prop_assert!((norm - 1.0).abs() < 1e-5, "norm {norm}");
        }
    }

    #[test]
    fn q_stays_a_distribution_along_trajectories(seed in any::<u64>(), chi in 0.0f64..0.5) {
        let s = single(12);
        let rho = random_density(&s, &mut seeded(seed)).unwrap();
        let traj = evolve(&rho, &kerr_hamiltonian(&s, chi), 3.0, 6).unwrap();
        let grid = PhaseGrid::default_for(&s).unwrap();
        for q in traj.q_grids(&grid).unwrap() {
            prop_assert!(q.min() >= -1e-12);
            prop_assert!((q.integrate() - 1.0).abs() < 1e-6);
        }
        let n = number_operator(&s, 0).unwrap();
        let n0 = rho.expectation(&n).unwrap().re;
        for v in traj.expectations(&n).unwrap() {
            prop_assert!((v.re - n0).abs() < 1e-8);
        }
    }

    #[test]
    fn harmonic_motion_rotates_coherent_q(r in 0.0f64..2.0, phase in 0.0f64..(2.0 * PI)) {
        let s = single(32);
        let alpha0 = Complex64::from_polar(r, phase);
        let rho = pure_density(&coherent_state(&s, &[alpha0]).unwrap());
        let traj = evolve(&rho, &harmonic_hamiltonian(&s), 2.0, 4).unwrap();
        let grid = PhaseGrid::square(&s, 5.0, 41, Measure::Alpha).unwrap();
        for (t, q) in traj.times.iter().zip(traj.q_grids(&grid).unwrap()) {
            let centre = alpha0 * Complex64::from_polar(1.0, -t);
            let worst = (0..grid.len())
                .map(|i| {
                    let beta = grid.alphas_at(i)[0];
                    (q.values()[i] - (-(beta - centre).norm_sqr()).exp() / PI).abs()
                })
                .fold(0.0, f64::max);
            prop_assert!(worst < 1e-5, "t {t}: {worst:e}");
        }
    }

    #[test]
    fn basis_preparation_is_read_out_with_certainty(outcomes in 2usize..=4, pick in 0usize..4) {
        let j = pick % outcomes;
        let amps: Vec<Complex64> = (0..outcomes)
            .map(|k| Complex64::new(if k == j { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let model = MeasurementModel::polygon(&amps, 8.0, 3.0).unwrap();
        let p = pointer_probabilities(&model).unwrap();
        prop_assert!(p[j] > 1.0 - 2e-3, "P({j}) = {}", p[j]);
        prop_assert!(p.iter().enumerate().all(|(k, &pk)| k == j || pk < 2e-3));
    }
}
