use num_complex::Complex64;

use super::{
    apply_word, berezin_quantize, weyl_quantize, LadderPolynomial, OrderingTag, PhasePolynomial,
};
use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::phasespace::{q_grid, Axis, Measure, PhaseDistribution, PhaseGrid};

/// `tr(rho W)` for the ladder polynomial `W`.
///
/// Words act on number states exactly, so levels above the truncation that
/// appear mid-word are handled without error; the result is the
/// infinite-dimensional trace for any `rho` supported on the retained levels.
pub fn expectation_trace(rho: &DensityOperator, op: &LadderPolynomial) -> Result<Complex64> {
    let space = rho.space();
    let terms = op.numeric_terms(space)?;
    let m = rho.matrix();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..space.dim() {
        let occ = space.occupations(i);
        for (w, c) in &terms {
            if let Some((target, amp)) = apply_word(w, &occ) {
                if let Ok(j) = space.index_of(&target) {
                    // <i| rho |j><j| W |i>
                    total += m[(i, j)] * c * amp;
                }
            }
        }
    }
    Ok(total)
}

/// Grid wide enough that `rho`'s Q-function and moments up to `degree` are
/// negligible outside it.
pub fn auto_q_grid(rho: &DensityOperator, degree: usize) -> Result<PhaseGrid> {
    let space = rho.space();
    let step = if space.mode_count() == 1 { 0.1 } else { 0.25 };
    let axes = space
        .modes()
        .iter()
        .flat_map(|mode| {
            let r = (6.0 + degree as f64 / 2.0).max((mode.truncation as f64).sqrt() + 6.0);
            let r = (r / (2.0 * step)).ceil() * 2.0 * step;
            [Axis::with_step(-r, r, step), Axis::with_step(-r, r, step)]
        })
        .collect::<Result<Vec<_>>>()?;
    PhaseGrid::new(space.clone(), axes, Measure::Alpha)
}

/// Anti-normal expectation by integrating against Q on an automatic grid.
pub fn expectation_via_q(rho: &DensityOperator, op: &LadderPolynomial) -> Result<Complex64> {
    require_antinormal(op)?;
    let grid = auto_q_grid(rho, op.degree())?;
    expectation_via_q_on(&q_grid(rho, &grid)?, op)
}

/// Anti-normal expectation against a precomputed Q grid: every word
/// `a^j a'^k` is replaced by `alpha^j conj(alpha)^k`.
pub fn expectation_via_q_on(q: &PhaseDistribution, op: &LadderPolynomial) -> Result<Complex64> {
    require_antinormal(op)?;
    let grid = q.grid();
    let space = grid.space();
    if !q.kind().is_q_like(space) {
        return Err(Error::Domain(format!(
            "anti-normal moments need a Q-function, got {}",
            q.kind().name()
        )));
    }
    let terms = op.numeric_terms(space)?;
    let q = q.to_measure(Measure::Alpha);
    let weights = grid.alpha_weights();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, (v, w)) in q.values().iter().zip(&weights).enumerate() {
        if *v == 0.0 {
            continue;
        }
        let alphas = grid.alphas_at(i);
        let f: Complex64 = terms
            .iter()
            .map(|(word, c)| {
                word.iter().fold(*c, |acc, l| {
                    let a = alphas[l.mode];
                    acc * if l.dagger { a.conj() } else { a }
                })
            })
            .sum();
        total += f * (v * w);
    }
    Ok(total)
}

fn require_antinormal(op: &LadderPolynomial) -> Result<()> {
    if op.tag() != OrderingTag::Antinormal {
        return Err(Error::Ordering(format!(
            "Q-function moments require an anti-normally ordered operator, got {:?}",
            op.tag()
        )));
    }
    Ok(())
}

/// `tr(rho weyl(f)) - integral of berezin(f) against Q`. For `f = q^2` this is
/// `-hbar / (2 m omega)` regardless of `rho`.
pub fn ordering_discrepancy(f: &PhasePolynomial, rho: &DensityOperator) -> Result<f64> {
    let trace = expectation_trace(rho, &weyl_quantize(f)?)?;
    let phase = expectation_via_q(rho, &berezin_quantize(f)?)?;
    Ok((trace - phase).re)
}
