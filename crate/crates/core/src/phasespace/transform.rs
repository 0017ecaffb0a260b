use std::f64::consts::PI;

use super::{Axis, DistributionKind, PhaseDistribution};
use crate::error::{Error, Result};

/// Values below this fraction of the peak count as outside the support.
const SUPPORT_THRESHOLD: f64 = 1e-8;
/// Required margin between support and grid edge, in kernel standard deviations.
const MARGIN_WIDTHS: f64 = 5.0;

/// Gaussian smoothing of a single-mode Wigner grid into a Husimi grid.
///
/// In `alpha` coordinates the kernel is
/// `(2/pi) exp(-2 (kappa/omega) dRe^2 - 2 (omega/kappa) dIm^2)`, which has
/// unit mass, so the output keeps the input's measure and normalization.
/// The convolution is applied axis by axis with the grid's Simpson weights.
pub fn weierstrass_transform(wigner: &PhaseDistribution, kappa: f64) -> Result<PhaseDistribution> {
    if wigner.kind() != DistributionKind::Wigner {
        return Err(Error::Domain(format!(
            "the Weierstrass transform takes a Wigner grid, got {}",
            wigner.kind().name()
        )));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let grid = wigner.grid();
    let space = grid.space();
    if space.mode_count() != 1 {
        return Err(Error::Unsupported(
            "the Weierstrass transform is implemented for a single mode".into(),
        ));
    }
    let ratio = kappa / space.modes()[0].omega;
    // per-axis kernel exponents: exp(-a dx^2)
    let a_re = 2.0 * ratio;
    let a_im = 2.0 / ratio;
    let sigma = [(2.0 * a_re).sqrt().recip(), (2.0 * a_im).sqrt().recip()];
    check_margin(wigner, sigma)?;

    let [re, im] = [grid.axes()[0], grid.axes()[1]];
    let (nr, ni) = (re.samples, im.samples);
    let v = wigner.values();

    // along Im (fastest axis)
    let k_im = kernel_matrix(&im, a_im);
    let mut tmp = vec![0.0; nr * ni];
    for r in 0..nr {
        let row = &v[r * ni..(r + 1) * ni];
        for i in 0..ni {
            tmp[r * ni + i] = k_im[i].iter().zip(row).map(|(k, x)| k * x).sum();
        }
    }
    // along Re
    let k_re = kernel_matrix(&re, a_re);
    let mut out = vec![0.0; nr * ni];
    for r in 0..nr {
        for (s, &k) in k_re[r].iter().enumerate() {
            if k == 0.0 {
                continue;
            }
            for i in 0..ni {
                out[r * ni + i] += k * tmp[s * ni + i];
            }
        }
    }
    PhaseDistribution::new(grid.clone(), DistributionKind::Husimi { kappa }, out)
}

/// `K[i][j] = sqrt(a/pi) exp(-a (x_i - x_j)^2) w_j`
fn kernel_matrix(axis: &Axis, a: f64) -> Vec<Vec<f64>> {
    let x = axis.values();
    let w = axis.weights();
    let norm = (a / PI).sqrt();
    x.iter()
        .map(|xi| {
            x.iter()
                .zip(&w)
                .map(|(xj, wj)| norm * (-a * (xi - xj).powi(2)).exp() * wj)
                .collect()
        })
        .collect()
}

fn check_margin(dist: &PhaseDistribution, sigma: [f64; 2]) -> Result<()> {
    let grid = dist.grid();
    let peak = dist.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(());
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (i, v) in dist.values().iter().enumerate() {
        if v.abs() > SUPPORT_THRESHOLD * peak {
            let a = grid.alphas_at(i)[0];
            for (c, x) in [a.re, a.im].into_iter().enumerate() {
                lo[c] = lo[c].min(x);
                hi[c] = hi[c].max(x);
            }
        }
    }
    for c in 0..2 {
        let axis = grid.axes()[c];
        let margin = MARGIN_WIDTHS * sigma[c];
        if lo[c] - margin < axis.min - 1e-12 || hi[c] + margin > axis.max + 1e-12 {
            return Err(Error::Extent(format!(
                "support [{:.3}, {:.3}] on axis {} needs {:.3} of margin inside [{:.3}, {:.3}]",
                lo[c],
                hi[c],
                if c == 0 { "Re" } else { "Im" },
                margin,
                axis.min,
                axis.max
            )));
        }
    }
    Ok(())
}
