use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use super::{DistributionKind, Measure, PhaseDistribution, PhaseGrid, PhasePoint};
use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, DensityOperator, ModeSpace};
use crate::hermite::hermite_functions;
use crate::par::map_indices;
use crate::special::{ln_factorial, poisson_cdf};

fn check_point(space: &ModeSpace, point: &PhasePoint) -> Result<()> {
    if point.mode_count() != space.mode_count() {
        return Err(Error::Dimension {
            expected: space.mode_count(),
            got: point.mode_count(),
        });
    }
    if point.alphas().iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::Domain("phase point is not finite".into()));
    }
    Ok(())
}

fn single_mode(space: &ModeSpace, what: &str) -> Result<()> {
    if space.mode_count() != 1 {
        return Err(Error::Unsupported(format!(
            "{what} is implemented for a single mode, got {} modes",
            space.mode_count()
        )));
    }
    Ok(())
}

/// Projection of the coherent state `|alpha_0, alpha_1, ..>` onto the retained
/// Fock levels. No renormalization: `rho` has no weight above the truncation,
/// so `<alpha|rho|alpha>` is exact with these components.
pub(crate) fn coherent_projection(space: &ModeSpace, alphas: &[Complex64]) -> DVector<Complex64> {
    let mut v = DVector::from_element(1, Complex64::new(1.0, 0.0));
    for (a, m) in alphas.iter().zip(space.modes()) {
        v = v.kronecker(&DVector::from_vec(coherent_amplitudes(*a, m.truncation)));
    }
    v
}

/// `<c| A |c>`
pub(crate) fn sandwich(matrix: &nalgebra::DMatrix<Complex64>, c: &DVector<Complex64>) -> Complex64 {
    let n = c.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let cj = c[j];
        if cj.re == 0.0 && cj.im == 0.0 {
            continue;
        }
        let mut col = Complex64::new(0.0, 0.0);
        for i in 0..n {
            col += c[i].conj() * matrix[(i, j)];
        }
        acc += col * cj;
    }
    acc
}

pub(crate) fn q_at(rho: &DensityOperator, alphas: &[Complex64]) -> f64 {
    let space = rho.space();
    let c = coherent_projection(space, alphas);
    sandwich(rho.matrix(), &c).re / PI.powi(space.mode_count() as i32)
}

/// `Q(alpha) = <alpha|rho|alpha> / pi^M`, a density per `d^2 alpha` of each mode.
pub fn q_value(rho: &DensityOperator, point: &PhasePoint) -> Result<f64> {
    check_point(rho.space(), point)?;
    Ok(q_at(rho, point.alphas()))
}

/// Q-function sampled on `grid`, expressed in the grid's measure.
pub fn q_grid(rho: &DensityOperator, grid: &PhaseGrid) -> Result<PhaseDistribution> {
    rho.space().check_same(grid.space())?;
    let f = Measure::Alpha.conversion(grid.measure(), grid.space());
    let values = map_indices(grid.len(), |i| q_at(rho, &grid.alphas_at(i)) * f);
    PhaseDistribution::new(grid.clone(), DistributionKind::Q, values)
}

/// Laguerre-series evaluation of the single-mode Wigner function.
struct WignerSeries {
    ln_fact: Vec<f64>,
}

impl WignerSeries {
    fn new(levels: usize) -> Self {
        WignerSeries {
            ln_fact: (0..=2 * levels).map(ln_factorial).collect(),
        }
    }

    /// Density per `d^2 alpha`:
    /// `W = sum_{mn} rho_mn W[|m><n|]` with, for `m = n + k >= n`,
    /// `W[|m><n|] = (2/pi) (-1)^n sqrt(n!/m!) (2 alpha*)^k e^{-2|alpha|^2} L_n^(k)(4|alpha|^2)`.
    fn value(&self, rho: &nalgebra::DMatrix<Complex64>, alpha: Complex64) -> f64 {
        let d = rho.nrows();
        let x = 4.0 * alpha.norm_sqr();
        let theta = alpha.arg();
        let ln_x = x.ln();
        let mut total = 0.0;
        for k in 0..d {
            if k > 0 && x == 0.0 {
                break;
            }
            let kf = k as f64;
            let phase = Complex64::from_polar(1.0, -kf * theta);
            let mut sum = Complex64::new(0.0, 0.0);
            // L_n^(k)(x) by upward recurrence in n
            let (mut l_prev, mut l_cur) = (0.0, 1.0);
            for n in 0..d - k {
                if n == 1 {
                    l_prev = 1.0;
                    l_cur = 1.0 + kf - x;
                } else if n > 1 {
                    let nf = (n - 1) as f64;
                    let next = ((2.0 * nf + 1.0 + kf - x) * l_cur - (nf + kf) * l_prev) / (nf + 1.0);
                    l_prev = l_cur;
                    l_cur = next;
                }
                if l_cur == 0.0 {
                    continue;
                }
                let ln_pref = 0.5 * (self.ln_fact[n] - self.ln_fact[n + k])
                    + if k > 0 { 0.5 * kf * ln_x } else { 0.0 }
                    - 0.5 * x;
                let mag = (ln_pref + l_cur.abs().ln()).exp();
                let sign = if (n % 2 == 1) != (l_cur < 0.0) { -1.0 } else { 1.0 };
                sum += rho[(n + k, n)] * (sign * mag);
            }
            let contrib = (sum * phase).re;
            total += if k == 0 { contrib } else { 2.0 * contrib };
        }
        2.0 / PI * total
    }
}

/// Wigner function `W(q, p)` per `dq dp`. Single mode only.
pub fn wigner_value(rho: &DensityOperator, point: &PhasePoint) -> Result<f64> {
    let space = rho.space();
    single_mode(space, "the Wigner function")?;
    check_point(space, point)?;
    let series = WignerSeries::new(space.dim());
    Ok(series.value(rho.matrix(), point.alpha(0)) / (2.0 * space.hbar()))
}

pub fn wigner_grid(rho: &DensityOperator, grid: &PhaseGrid) -> Result<PhaseDistribution> {
    let space = rho.space();
    single_mode(space, "the Wigner function")?;
    space.check_same(grid.space())?;
    let series = WignerSeries::new(space.dim());
    let f = Measure::Alpha.conversion(grid.measure(), space);
    let values = map_indices(grid.len(), |i| series.value(rho.matrix(), grid.alphas_at(i)[0]) * f);
    PhaseDistribution::new(grid.clone(), DistributionKind::Wigner, values)
}

/// Fock components of the minimum-uncertainty packet
/// `(m kappa / pi hbar)^(1/4) exp(-m kappa (x - q)^2 / 2 hbar + i p x / hbar)`,
/// by trapezoidal quadrature against the oscillator eigenfunctions.
fn squeezed_packet(space: &ModeSpace, alpha: Complex64, kappa: f64) -> DVector<Complex64> {
    let mode = space.modes()[0];
    let d = mode.truncation;
    let r = kappa / mode.omega;
    // dimensionless centre and wavenumber in units of the oscillator length
    let xi0 = 2f64.sqrt() * alpha.re;
    let k = 2f64.sqrt() * alpha.im;
    let width = r.sqrt().recip();
    let reach = (2.0 * d as f64 + 1.0).sqrt();
    let lo = (-reach - 8.0).min(xi0 - 10.0 * width);
    let hi = (reach + 8.0).max(xi0 + 10.0 * width);
    let kmax = k.abs() + reach + 6.0 * r.sqrt().max(1.0) + 6.0;
    let h = (PI / (2.0 * kmax)).min(width / 4.0);
    let steps = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / steps as f64;
    let norm = (r / PI).powf(0.25);
    let mut c = DVector::zeros(d);
    for s in 0..=steps {
        let xi = lo + s as f64 * h;
        let env = norm * (-0.5 * r * (xi - xi0).powi(2)).exp();
        if env < 1e-300 {
            continue;
        }
        let g = Complex64::from_polar(env * h, k * xi);
        let phi = hermite_functions(d - 1, xi);
        for n in 0..d {
            c[n] += g * phi[n];
        }
    }
    c
}

/// Husimi function with smoothing parameter `kappa`, per `dq dp`. Single mode.
///
/// Evaluated as `<g|rho|g> / (2 pi hbar)` for the minimum-uncertainty packet
/// `g` centred at the point with position width set by `kappa`; this equals
/// the Gaussian smoothing of the Wigner function with
/// `exp(-m kappa dq^2 / hbar - dp^2 / (hbar m kappa))`.
pub fn husimi_value(rho: &DensityOperator, point: &PhasePoint, kappa: f64) -> Result<f64> {
    let space = rho.space();
    single_mode(space, "the Husimi function")?;
    check_point(space, point)?;
    check_kappa(kappa)?;
    let g = squeezed_packet(space, point.alpha(0), kappa);
    Ok(sandwich(rho.matrix(), &g).re / (2.0 * PI * space.hbar()))
}

pub fn husimi_grid(rho: &DensityOperator, grid: &PhaseGrid, kappa: f64) -> Result<PhaseDistribution> {
    let space = rho.space();
    single_mode(space, "the Husimi function")?;
    space.check_same(grid.space())?;
    check_kappa(kappa)?;
    let f = Measure::Qp.conversion(grid.measure(), space);
    let values = map_indices(grid.len(), |i| {
        let g = squeezed_packet(space, grid.alphas_at(i)[0], kappa);
        sandwich(rho.matrix(), &g).re / (2.0 * PI * space.hbar()) * f
    });
    PhaseDistribution::new(grid.clone(), DistributionKind::Husimi { kappa }, values)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("kappa must be positive, got {kappa}")))
    }
}

/// Upper bound on the Q-function mass of `rho` lying outside `grid`.
///
/// The Q-function of `|n><n|` puts `P(Poisson(R^2) <= n)` outside the disk of
/// radius `R`, and angular integration removes off-diagonal terms, so each
/// mode contributes `sum_n rho_nn P(Poisson(R^2) <= n)` for the inscribed disk.
pub fn extent_leakage_bound(rho: &DensityOperator, grid: &PhaseGrid) -> f64 {
    let space = rho.space();
    let m = space.mode_count();
    let d = space.dim();
    (0..m)
        .map(|k| {
            let re = grid.axes()[2 * k];
            let im = grid.axes()[2 * k + 1];
            let r = [re.min, re.max, im.min, im.max]
                .iter()
                .map(|v| v.abs())
                .fold(f64::INFINITY, f64::min);
            let r = if re.min < 0.0 && re.max > 0.0 && im.min < 0.0 && im.max > 0.0 {
                r
            } else {
                0.0
            };
            let levels = space.modes()[k].truncation;
            let mut pop = vec![0.0; levels];
            for i in 0..d {
                pop[space.occupations(i)[k]] += rho.matrix()[(i, i)].re;
            }
            pop.iter()
                .enumerate()
                .map(|(n, p)| p.max(0.0) * poisson_cdf(n, r * r))
                .sum::<f64>()
        })
        .sum()
}
