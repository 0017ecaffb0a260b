//! Harmonic-oscillator eigenfunctions in position space.
//!
//! Values come from the normalized three-term recurrence
//! `phi_{n+1} = sqrt(2/(n+1)) xi phi_n - sqrt(n/(n+1)) phi_{n-1}`,
//! which never forms `H_n` or `n!` and so stays finite for large `n`.

use std::f64::consts::PI;

/// `phi_0..=phi_{n_max}` at dimensionless position `xi`, normalized so that
/// `int phi_n^2 dxi = 1`.
pub fn hermite_functions(n_max: usize, xi: f64) -> Vec<f64> {
    let mut phi = Vec::with_capacity(n_max + 1);
    phi.push(PI.powf(-0.25) * (-0.5 * xi * xi).exp());
    if n_max >= 1 {
        phi.push(2f64.sqrt() * xi * phi[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xi * phi[n] - (nf / (nf + 1.0)).sqrt() * phi[n - 1];
        phi.push(next);
    }
    phi
}

/// Values and `d/dxi` derivatives of `phi_0..phi_{levels-1}`.
pub fn hermite_functions_with_derivative(levels: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
    let phi = hermite_functions(levels, xi);
    let dphi = (0..levels)
        .map(|n| {
            let nf = n as f64;
            let down = if n > 0 { (nf / 2.0).sqrt() * phi[n - 1] } else { 0.0 };
            down - ((nf + 1.0) / 2.0).sqrt() * phi[n + 1]
        })
        .collect();
    (phi[..levels].to_vec(), dphi)
}
