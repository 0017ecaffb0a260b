//! Phase-space grids and quasi-probability distributions.
//!
//! Densities are stored per `d^2 alpha` (one factor per mode) unless the grid
//! says otherwise; the `dq dp` view differs by exactly `(2 hbar)^M`.
//! Grid values are laid out row-major over the axes in mode order with the
//! real axis of each mode before its imaginary axis (the last axis varies
//! fastest).

pub(crate) mod eval;
mod transform;

pub use eval::{
    extent_leakage_bound, husimi_grid, husimi_value, q_grid, q_value, wigner_grid, wigner_value,
};
pub use transform::weierstrass_transform;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ModeSpace;
use crate::ordering::PhasePolynomial;
use crate::quadrature::simpson_weights;

pub const DEFAULT_GRID_RADIUS: f64 = 6.0;
pub const DEFAULT_GRID_SAMPLES: usize = 121;

/// A point of the `M`-mode phase space, `alpha_k = Re + i Im` per mode with
/// `alpha = sqrt(m omega / 2 hbar) q + i p / sqrt(2 hbar m omega)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    alphas: Vec<Complex64>,
}

impl PhasePoint {
    pub fn new(alphas: Vec<Complex64>) -> Self {
        PhasePoint { alphas }
    }

    pub fn single(alpha: Complex64) -> Self {
        PhasePoint {
            alphas: vec![alpha],
        }
    }

    /// Builds a point from `(q, p)` pairs, one per mode.
    pub fn from_qp(space: &ModeSpace, qp: &[(f64, f64)]) -> Result<Self> {
        if qp.len() != space.mode_count() {
            return Err(Error::Dimension {
                expected: space.mode_count(),
                got: qp.len(),
            });
        }
        let alphas = qp
            .iter()
            .enumerate()
            .map(|(k, &(q, p))| {
                Complex64::new(q / (2.0 * space.q_scale(k)), p / (2.0 * space.p_scale(k)))
            })
            .collect();
        Ok(PhasePoint { alphas })
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn alpha(&self, mode: usize) -> Complex64 {
        self.alphas[mode]
    }

    pub fn mode_count(&self) -> usize {
        self.alphas.len()
    }

    /// `(q, p)` of one mode.
    pub fn qp(&self, space: &ModeSpace, mode: usize) -> (f64, f64) {
        let a = self.alphas[mode];
        (2.0 * space.q_scale(mode) * a.re, 2.0 * space.p_scale(mode) * a.im)
    }
}

/// Which area element a density refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// per `d^2 alpha = dRe(alpha) dIm(alpha)` and mode
    Alpha,
    /// per `dq dp` and mode
    Qp,
}

impl Measure {
    /// Factor converting a density in `self` to a density in `to`.
    pub fn conversion(self, to: Measure, space: &ModeSpace) -> f64 {
        let f = (2.0 * space.hbar()).powi(space.mode_count() as i32);
        match (self, to) {
            (Measure::Alpha, Measure::Qp) => 1.0 / f,
            (Measure::Qp, Measure::Alpha) => f,
            _ => 1.0,
        }
    }
}

/// Uniform samples `min, min + step, .., max` with an odd count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, samples: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::Domain(format!("bad axis range [{min}, {max}]")));
        }
        if samples < 3 || samples.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "axis needs an odd sample count >= 3, got {samples}"
            )));
        }
        Ok(Axis { min, max, samples })
    }

    pub fn symmetric(radius: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("grid radius must be positive, got {radius}")));
        }
        Axis::new(-radius, radius, samples)
    }

    /// Axis with spacing as close to `step` as an odd sample count allows.
    pub fn with_step(min: f64, max: f64, step: f64) -> Result<Self> {
        let intervals = ((max - min) / step).round().max(2.0) as usize;
        let intervals = intervals + intervals % 2;
        Axis::new(min, max, intervals + 1)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.samples - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.samples {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.value(i)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        simpson_weights(self.samples, self.step()).expect("axis invariants")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    space: ModeSpace,
    axes: Vec<Axis>,
    measure: Measure,
}

impl PhaseGrid {
    /// `axes` holds `Re` then `Im` for each mode in order.
    pub fn new(space: ModeSpace, axes: Vec<Axis>, measure: Measure) -> Result<Self> {
        if axes.len() != 2 * space.mode_count() {
            return Err(Error::Dimension {
                expected: 2 * space.mode_count(),
                got: axes.len(),
            });
        }
        for a in &axes {
            Axis::new(a.min, a.max, a.samples)?;
        }
        Ok(PhaseGrid {
            space,
            axes,
            measure,
        })
    }

    /// `[-radius, radius]` with `samples` points on every axis.
    pub fn square(space: &ModeSpace, radius: f64, samples: usize, measure: Measure) -> Result<Self> {
        let axis = Axis::symmetric(radius, samples)?;
        PhaseGrid::new(space.clone(), vec![axis; 2 * space.mode_count()], measure)
    }

    pub fn default_for(space: &ModeSpace) -> Result<Self> {
        PhaseGrid::square(space, DEFAULT_GRID_RADIUS, DEFAULT_GRID_SAMPLES, Measure::Alpha)
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn with_measure(&self, measure: Measure) -> PhaseGrid {
        PhaseGrid {
            measure,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.samples).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis sample indices of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % a.samples;
            flat /= a.samples;
        }
        idx
    }

    pub fn alphas_at(&self, flat: usize) -> Vec<Complex64> {
        let idx = self.multi_index(flat);
        idx.chunks(2)
            .zip(self.axes.chunks(2))
            .map(|(i, a)| Complex64::new(a[0].value(i[0]), a[1].value(i[1])))
            .collect()
    }

    pub fn point(&self, flat: usize) -> PhasePoint {
        PhasePoint::new(self.alphas_at(flat))
    }

    /// Simpson product weights in units of `(d^2 alpha)^M`.
    pub fn alpha_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self.axes.iter().map(Axis::weights).collect();
        (0..self.len())
            .map(|flat| {
                self.multi_index(flat)
                    .iter()
                    .zip(&per_axis)
                    .map(|(&i, w)| w[i])
                    .product()
            })
            .collect()
    }

    /// Integration weights matching densities in this grid's measure.
    pub fn weights(&self) -> Vec<f64> {
        let f = Measure::Alpha.conversion(self.measure, &self.space).recip();
        self.alpha_weights().into_iter().map(|w| w * f).collect()
    }

    /// Distance from the origin to the nearest grid edge, over all axes.
    pub fn inner_radius(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| if a.min < 0.0 && a.max > 0.0 { a.max.min(-a.min) } else { 0.0 })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn smallest_step(&self) -> f64 {
        self.axes.iter().map(Axis::step).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionKind {
    Q,
    Husimi { kappa: f64 },
    Wigner,
}

impl DistributionKind {
    /// True for the Q-function, including a Husimi function at `kappa = omega`.
    pub fn is_q_like(&self, space: &ModeSpace) -> bool {
        match *self {
            DistributionKind::Q => true,
            DistributionKind::Husimi { kappa } => space
                .modes()
                .iter()
                .all(|m| (kappa - m.omega).abs() <= 1e-12 * m.omega),
            DistributionKind::Wigner => false,
        }
    }

    pub fn name(&self) -> String {
        match self {
            DistributionKind::Q => "q".into(),
            DistributionKind::Husimi { kappa } => format!("husimi(kappa={kappa})"),
            DistributionKind::Wigner => "wigner".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    grid: PhaseGrid,
    kind: DistributionKind,
    values: Vec<f64>,
}

impl PhaseDistribution {
    pub fn new(grid: PhaseGrid, kind: DistributionKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(PhaseDistribution { grid, kind, values })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn measure(&self) -> Measure {
        self.grid.measure
    }

    /// Simpson-weighted total, honoring the measure convention.
    pub fn integrate(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn to_measure(&self, measure: Measure) -> PhaseDistribution {
        let f = self.grid.measure.conversion(measure, &self.grid.space);
        PhaseDistribution {
            grid: self.grid.with_measure(measure),
            kind: self.kind,
            values: self.values.iter().map(|v| v * f).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> PhaseDistribution {
        PhaseDistribution {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> PhasePoint {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        self.grid.point(i)
    }

    /// Largest absolute pointwise difference, after converting `other` to this
    /// distribution's measure. Grids must share their axes.
    pub fn sup_distance(&self, other: &PhaseDistribution) -> Result<f64> {
        if self.grid.axes != other.grid.axes || self.grid.space != other.grid.space {
            return Err(Error::Domain("distributions live on different grids".into()));
        }
        let other = other.to_measure(self.measure());
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Mean of `alpha_mode` under this distribution.
    pub fn mean_alpha(&self, mode: usize) -> Complex64 {
        let w = self.grid.weights();
        (0..self.values.len())
            .map(|i| self.grid.alphas_at(i)[mode] * (w[i] * self.values[i]))
            .sum()
    }

    /// Integrates out every mode not listed in `keep`.
    pub fn marginal(&self, keep: &[usize]) -> Result<PhaseDistribution> {
        let m = self.grid.space.mode_count();
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() {
            return Err(Error::Domain("marginal must keep at least one mode".into()));
        }
        if let Some(&bad) = keep.iter().find(|&&k| k >= m) {
            return Err(Error::ModeIndex { mode: bad, modes: m });
        }
        let kept_modes = keep.iter().map(|&k| self.grid.space.modes()[k]).collect();
        let space = ModeSpace::from_modes(self.grid.space.hbar(), kept_modes)?;
        let axes: Vec<Axis> = keep
            .iter()
            .flat_map(|&k| [self.grid.axes[2 * k], self.grid.axes[2 * k + 1]])
            .collect();
        let out_grid = PhaseGrid::new(space, axes, self.grid.measure)?;
        let per_axis: Vec<Vec<f64>> = self.grid.axes.iter().map(Axis::weights).collect();
        // dq dp of the integrated modes, when the measure is Qp
        let dropped = (m - keep.len()) as i32;
        let factor = match self.grid.measure {
            Measure::Alpha => 1.0,
            Measure::Qp => (2.0 * self.grid.space.hbar()).powi(dropped),
        };
        let mut out = vec![0.0; out_grid.len()];
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.grid.multi_index(flat);
            let mut w = factor;
            let mut target = 0;
            for k in 0..m {
                for c in 0..2 {
                    let ax = 2 * k + c;
                    if keep.contains(&k) {
                        target = target * self.grid.axes[ax].samples + idx[ax];
                    } else {
                        w *= per_axis[ax][idx[ax]];
                    }
                }
            }
            out[target] += w * v;
        }
        PhaseDistribution::new(out_grid, self.kind, out)
    }
}

/// Result carrying an optional advisory warning.
#[derive(Debug, Clone, PartialEq)]
pub struct Checked<T> {
    pub value: T,
    pub warning: Option<String>,
}

/// `integral f(q, p) dist` over the grid.
///
/// Warns when the grid's inner radius is below `6 + degree / 2`, where
/// polynomial weights start to feel the grid edge.
pub fn phase_expectation(dist: &PhaseDistribution, f: &PhasePolynomial) -> Result<Checked<Complex64>> {
    let degree = f.degree();
    if degree > crate::ordering::MAX_DEGREE {
        return Err(Error::Domain(format!(
            "polynomial degree {degree} exceeds {}",
            crate::ordering::MAX_DEGREE
        )));
    }
    let grid = dist.grid();
    let space = grid.space();
    if f.mode_count() > space.mode_count() {
        return Err(Error::ModeIndex {
            mode: f.mode_count() - 1,
            modes: space.mode_count(),
        });
    }
    let needed = 6.0 + degree as f64 / 2.0;
    let warning = (grid.inner_radius() < needed).then(|| {
        format!(
            "grid inner radius {:.3} is below {needed} for a degree-{degree} polynomial",
            grid.inner_radius()
        )
    });
    let w = grid.weights();
    let terms = crate::par::map_indices(dist.values.len(), |i| {
        let p = grid.point(i);
        f.evaluate(space, &p) * (w[i] * dist.values[i])
    });
    Ok(Checked {
        value: terms.into_iter().sum(),
        warning,
    })
}

/// Probability mass of the grid points satisfying `region`.
pub fn region_probability<F>(dist: &PhaseDistribution, region: F) -> Result<f64>
where
    F: Fn(&PhasePoint) -> bool,
{
    if !dist.kind.is_q_like(dist.grid.space()) {
        return Err(Error::Domain(format!(
            "region probabilities need a Q distribution, got {}",
            dist.kind.name()
        )));
    }
    let w = dist.grid.weights();
    Ok((0..dist.values.len())
        .filter(|&i| region(&dist.grid.point(i)))
        .map(|i| w[i] * dist.values[i])
        .sum())
}
