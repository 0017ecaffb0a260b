//! Seeded random states for tests and experiments.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::fock::{DensityOperator, ModeSpace, StateVector};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// `n` complex amplitudes, uniformly distributed on the unit sphere.
pub fn random_amplitudes<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

/// Haar-random pure state on the whole truncated space.
pub fn random_pure_state<R: Rng + ?Sized>(space: &ModeSpace, rng: &mut R) -> Result<StateVector> {
    let v = random_amplitudes(space.dim(), rng);
    StateVector::new(space.clone(), DVector::from_vec(v))
}

/// Hilbert-Schmidt random density operator: `G G' / tr(G G')` for a complex
/// Gaussian matrix `G`.
pub fn random_density<R: Rng + ?Sized>(space: &ModeSpace, rng: &mut R) -> Result<DensityOperator> {
    let d = space.dim();
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m.map(|c| c / tr);
    // exact hermiticity against round-off in the product
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    DensityOperator::new(space.clone(), m)
}
