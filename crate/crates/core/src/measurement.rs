//! Pointer measurements: a system prepared in `sum_i c_i |B_i>` drives a
//! single-mode apparatus into states confined to disjoint phase-space disks.
//! Region probabilities of the apparatus Q-function reproduce `|c_j|^2`, and
//! restricting the joint Q-function to one region collapses the system
//! marginal onto `Q_{|B_j>}`.
//!
//! Conditioning is only ever on apparatus regions; there is deliberately no
//! way to condition on a system phase point.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    coherent_state, number_state, pure_density, required_truncation, DensityOperator, ModeSpace,
    StateVector, COHERENT_TAIL_TOLERANCE,
};
use crate::par::map_indices;
use crate::phasespace::eval::q_at;
use crate::phasespace::{Axis, DistributionKind, Measure, PhaseDistribution, PhaseGrid};
use crate::quadrature::{gauss_legendre_on, simpson_weights};
use crate::special::{poisson_cdf, poisson_sf};

/// Smallest pointer radius for which a pointer state keeps 99.9% of its Q mass.
pub const MIN_POINTER_RADIUS: f64 = 3.0;
/// Minimum gap between neighbouring regions, in coherent widths.
pub const MIN_REGION_GAP: f64 = 2.0;
pub const DEFAULT_POINTER_SIGMA: f64 = 0.3;
/// Quadrature nodes per axis for the pointer weight.
pub const POINTER_NODES: usize = 17;

const RADIAL_NODES: usize = 40;
const ANGULAR_NODES: usize = 64;

/// Disk `|alpha - centre| <= radius` in the apparatus plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerRegion {
    pub label: usize,
    pub centre: Complex64,
    pub radius: f64,
}

impl PointerRegion {
    pub fn contains(&self, alpha: Complex64) -> bool {
        (alpha - self.centre).norm() <= self.radius
    }
}

/// Weight `mu_j` over coherent-state labels inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointerWeight {
    /// Isotropic Gaussian of standard deviation `sigma` per quadrature, cut
    /// off at distance `min(1, radius)` from the centre.
    Gaussian { sigma: f64 },
    /// All weight on the centre.
    PointMass,
}

impl Default for PointerWeight {
    fn default() -> Self {
        PointerWeight::Gaussian {
            sigma: DEFAULT_POINTER_SIGMA,
        }
    }
}

impl PointerWeight {
    /// Radius of the weight's support.
    pub fn reach(&self, region: &PointerRegion) -> f64 {
        match self {
            PointerWeight::Gaussian { .. } => region.radius.min(1.0),
            PointerWeight::PointMass => 0.0,
        }
    }

    /// Quadrature nodes `(alpha, weight)` with weights summing to one.
    pub fn nodes(&self, region: &PointerRegion) -> Result<Vec<(Complex64, f64)>> {
        match *self {
            PointerWeight::PointMass => Ok(vec![(region.centre, 1.0)]),
            PointerWeight::Gaussian { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::Domain(format!("pointer width must be positive, got {sigma}")));
                }
                let reach = self.reach(region);
                let n = POINTER_NODES;
                let h = 2.0 * reach / (n - 1) as f64;
                let w = simpson_weights(n, h)?;
                let mut nodes = Vec::new();
                for (i, wi) in w.iter().enumerate() {
                    for (k, wk) in w.iter().enumerate() {
                        let d = Complex64::new(-reach + i as f64 * h, -reach + k as f64 * h);
                        if d.norm() <= reach + 1e-12 {
                            let g = (-d.norm_sqr() / (2.0 * sigma * sigma)).exp();
                            nodes.push((region.centre + d, wi * wk * g));
                        }
                    }
                }
                let total: f64 = nodes.iter().map(|(_, w)| w).sum();
                Ok(nodes.into_iter().map(|(a, w)| (a, w / total)).collect())
            }
        }
    }
}

/// Centres on a regular polygon with neighbouring centres `separation` apart.
pub fn polygon_centres(count: usize, separation: f64) -> Vec<Complex64> {
    if count == 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let r = separation / (2.0 * (PI / count as f64).sin());
    (0..count)
        .map(|k| Complex64::from_polar(r, PI + 2.0 * PI * k as f64 / count as f64))
        .collect()
}

#[derive(Debug, Clone)]
pub struct MeasurementModel {
    system: ModeSpace,
    apparatus: ModeSpace,
    basis: Vec<StateVector>,
    amplitudes: Vec<Complex64>,
    regions: Vec<PointerRegion>,
    weight: PointerWeight,
    min_radius: f64,
}

impl MeasurementModel {
    pub fn new(
        system: ModeSpace,
        apparatus: ModeSpace,
        basis: Vec<StateVector>,
        amplitudes: Vec<Complex64>,
        regions: Vec<PointerRegion>,
        weight: PointerWeight,
    ) -> Result<Self> {
        if system.mode_count() != 1 || apparatus.mode_count() != 1 {
            return Err(Error::Unsupported(
                "system and apparatus are single modes".into(),
            ));
        }
        let n = amplitudes.len();
        if n == 0 || basis.len() != n || regions.len() != n {
            return Err(Error::InvalidState(format!(
                "need one basis state and one region per amplitude ({} amplitudes, {} basis states, {} regions)",
                n,
                basis.len(),
                regions.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "amplitudes have squared norm {norm}, expected 1"
            )));
        }
        for (i, b) in basis.iter().enumerate() {
            if b.space() != &system {
                return Err(Error::InvalidState(format!("basis state {i} lives in another space")));
            }
            for (k, other) in basis.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                if (b.inner(other) - want).norm() > 1e-10 {
                    return Err(Error::InvalidState(format!(
                        "basis states {i} and {k} are not orthonormal"
                    )));
                }
            }
        }
        for (i, a) in regions.iter().enumerate() {
            if !(a.radius.is_finite() && a.radius > 0.0) {
                return Err(Error::Geometry(format!("region {i} has radius {}", a.radius)));
            }
            for b in &regions[i + 1..] {
                let gap = (a.centre - b.centre).norm() - a.radius - b.radius;
                if gap < MIN_REGION_GAP - 1e-12 {
                    return Err(Error::Geometry(format!(
                        "regions {} and {} are {gap:.3} apart, need at least {MIN_REGION_GAP}",
                        a.label, b.label
                    )));
                }
            }
        }
        let model = MeasurementModel {
            system,
            apparatus,
            basis,
            amplitudes,
            regions,
            weight,
            min_radius: MIN_POINTER_RADIUS,
        };
        // every pointer node must be representable in the apparatus space
        for j in 0..n {
            for (a, _) in model.weight.nodes(&model.regions[j])? {
                coherent_state(&model.apparatus, &[a])?;
            }
        }
        Ok(model)
    }

    /// Fock-basis system states `|0>..|n-1>`, regions on a regular polygon,
    /// default pointer weight, and an apparatus truncation large enough for
    /// every pointer node.
    pub fn polygon(amplitudes: &[Complex64], separation: f64, radius: f64) -> Result<Self> {
        Self::polygon_with(amplitudes, separation, radius, PointerWeight::default())
    }

    pub fn polygon_with(
        amplitudes: &[Complex64],
        separation: f64,
        radius: f64,
        weight: PointerWeight,
    ) -> Result<Self> {
        let n = amplitudes.len();
        let system = ModeSpace::single(n.max(2))?;
        let basis = (0..n)
            .map(|i| number_state(&system, &[i]))
            .collect::<Result<Vec<_>>>()?;
        let regions: Vec<PointerRegion> = polygon_centres(n, separation)
            .into_iter()
            .enumerate()
            .map(|(label, centre)| PointerRegion {
                label,
                centre,
                radius,
            })
            .collect();
        let apparatus = apparatus_space_for(&regions, &weight)?;
        Self::new(system, apparatus, basis, amplitudes.to_vec(), regions, weight)
    }

    /// Lowers (or raises) the pointer-radius guard.
    pub fn with_min_radius(mut self, min_radius: f64) -> Self {
        self.min_radius = min_radius;
        self
    }

    pub fn system(&self) -> &ModeSpace {
        &self.system
    }

    pub fn apparatus(&self) -> &ModeSpace {
        &self.apparatus
    }

    pub fn basis(&self) -> &[StateVector] {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn regions(&self) -> &[PointerRegion] {
        &self.regions
    }

    pub fn weight(&self) -> PointerWeight {
        self.weight
    }

    pub fn outcomes(&self) -> usize {
        self.amplitudes.len()
    }

    /// `|c_j|^2`
    pub fn born_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    fn region(&self, j: usize) -> Result<&PointerRegion> {
        self.regions.get(j).ok_or_else(|| {
            Error::Domain(format!("no region {j}; the model has {}", self.regions.len()))
        })
    }
}

/// Apparatus space whose truncation holds every pointer node to the coherent
/// tail tolerance.
pub fn apparatus_space_for(regions: &[PointerRegion], weight: &PointerWeight) -> Result<ModeSpace> {
    let reach = regions
        .iter()
        .map(|r| r.centre.norm() + weight.reach(r))
        .fold(0.0, f64::max);
    ModeSpace::single(required_truncation(reach, COHERENT_TAIL_TOLERANCE / 10.0))
}

/// `rho_j = sum_k mu_k |alpha_k><alpha_k|` over the region's weight nodes.
pub fn pointer_state(model: &MeasurementModel, j: usize) -> Result<DensityOperator> {
    let region = model.region(j)?;
    if region.radius < model.min_radius {
        return Err(Error::Geometry(format!(
            "region {} has radius {} below the pointer guard {}",
            region.label, region.radius, model.min_radius
        )));
    }
    let d = model.apparatus.dim();
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    for (alpha, w) in model.weight.nodes(region)? {
        let v = coherent_state(&model.apparatus, &[alpha])?;
        let a = v.amplitudes();
        m += a * a.adjoint() * Complex64::new(w, 0.0);
    }
    let tr = m.trace().re;
    DensityOperator::new(model.apparatus.clone(), m.map(|z| z / tr))
}

fn pointer_states(model: &MeasurementModel) -> Result<Vec<DensityOperator>> {
    (0..model.outcomes()).map(|j| pointer_state(model, j)).collect()
}

/// Dephased joint state `sum_i |c_i|^2 |B_i><B_i| (x) rho_i`.
pub fn post_measurement_state(model: &MeasurementModel) -> Result<DensityOperator> {
    let pointers = pointer_states(model)?;
    let mut parts = Vec::with_capacity(model.outcomes());
    for ((c, b), rho) in model.amplitudes.iter().zip(&model.basis).zip(&pointers) {
        let w = c.norm_sqr();
        if w == 0.0 {
            continue;
        }
        parts.push((w, pure_density(b).tensor(rho)?));
    }
    DensityOperator::mixture(&parts)
}

/// Q mass of a single-mode `rho` inside `region`, by Gauss-Legendre radial
/// and trapezoidal angular quadrature.
pub fn region_mass(rho: &DensityOperator, region: &PointerRegion) -> Result<f64> {
    if rho.space().mode_count() != 1 {
        return Err(Error::Unsupported("region masses are single-mode".into()));
    }
    let radial = gauss_legendre_on(RADIAL_NODES, 0.0, region.radius);
    let dtheta = 2.0 * PI / ANGULAR_NODES as f64;
    let values = map_indices(RADIAL_NODES * ANGULAR_NODES, |i| {
        let (r, w) = radial[i / ANGULAR_NODES];
        let theta = (i % ANGULAR_NODES) as f64 * dtheta;
        let alpha = region.centre + Complex64::from_polar(r, theta);
        w * r * dtheta * q_at(rho, &[alpha])
    });
    Ok(values.iter().sum())
}

/// `P(j)`: Q mass of the apparatus reduced state inside region `j`.
pub fn pointer_probability(model: &MeasurementModel, j: usize) -> Result<f64> {
    let reduced = post_measurement_state(model)?.reduce_to(&[1])?;
    region_mass(&reduced, model.region(j)?)
}

/// `P(j)` for every region, sharing one reduced state.
pub fn pointer_probabilities(model: &MeasurementModel) -> Result<Vec<f64>> {
    let reduced = post_measurement_state(model)?.reduce_to(&[1])?;
    model
        .regions
        .iter()
        .map(|r| region_mass(&reduced, r))
        .collect()
}

/// Joint grid: a square of half-width `system_radius` for the system and a
/// box around all regions (plus a margin where pointer Q-functions have
/// decayed) for the apparatus, both with spacing close to `step`.
pub fn joint_grid(model: &MeasurementModel, system_radius: f64, step: f64) -> Result<PhaseGrid> {
    let space = model.system.tensor(&model.apparatus)?;
    let margin = |r: &PointerRegion| r.radius.max(model.weight.reach(r) + 4.5) + step;
    let lo_re = model.regions.iter().map(|r| r.centre.re - margin(r)).fold(f64::INFINITY, f64::min);
    let hi_re = model.regions.iter().map(|r| r.centre.re + margin(r)).fold(f64::NEG_INFINITY, f64::max);
    let lo_im = model.regions.iter().map(|r| r.centre.im - margin(r)).fold(f64::INFINITY, f64::min);
    let hi_im = model.regions.iter().map(|r| r.centre.im + margin(r)).fold(f64::NEG_INFINITY, f64::max);
    let sys = Axis::with_step(-system_radius, system_radius, step)?;
    PhaseGrid::new(
        space,
        vec![
            sys,
            sys,
            Axis::with_step(lo_re, hi_re, step)?,
            Axis::with_step(lo_im, hi_im, step)?,
        ],
        Measure::Alpha,
    )
}

fn sub_grid(space: &ModeSpace, axes: &[Axis]) -> Result<PhaseGrid> {
    PhaseGrid::new(space.clone(), axes.to_vec(), Measure::Alpha)
}

/// Joint Q-function `Q(beta, alpha) = sum_i |c_i|^2 Q_{B_i}(beta) Q_{rho_i}(alpha)`
/// of the post-measurement state, per `d^2 beta d^2 alpha`.
pub fn joint_q(model: &MeasurementModel, grid: &PhaseGrid) -> Result<PhaseDistribution> {
    let space = model.system.tensor(&model.apparatus)?;
    space.check_same(grid.space())?;
    let axes = grid.axes();
    let sys_grid = sub_grid(&model.system, &axes[0..2])?;
    let app_grid = sub_grid(&model.apparatus, &axes[2..4])?;
    let pointers = pointer_states(model)?;
    let mut sys_tables = Vec::new();
    let mut app_tables = Vec::new();
    for ((c, b), rho) in model.amplitudes.iter().zip(&model.basis).zip(&pointers) {
        let w = c.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let bd = pure_density(b);
        sys_tables.push(map_indices(sys_grid.len(), |i| w * q_at(&bd, &sys_grid.alphas_at(i))));
        app_tables.push(map_indices(app_grid.len(), |i| q_at(rho, &app_grid.alphas_at(i))));
    }
    let na = app_grid.len();
    let values = map_indices(grid.len(), |flat| {
        let (s, a) = (flat / na, flat % na);
        sys_tables
            .iter()
            .zip(&app_tables)
            .map(|(st, at)| st[s] * at[a])
            .sum()
    });
    let f = Measure::Alpha.conversion(grid.measure(), &space);
    let values = if f == 1.0 {
        values
    } else {
        values.into_iter().map(|v| v * f).collect()
    };
    PhaseDistribution::new(grid.clone(), DistributionKind::Q, values)
}

/// Conditions the joint Q-function on the pointer lying in region `j`:
/// zero outside `alpha in Gamma_j`, then renormalize by the retained mass.
pub fn bayesian_update(
    model: &MeasurementModel,
    joint: &PhaseDistribution,
    j: usize,
) -> Result<PhaseDistribution> {
    let region = *model.region(j)?;
    let grid = joint.grid();
    if grid.space().mode_count() != 2 || joint.kind() != DistributionKind::Q {
        return Err(Error::Domain(
            "updates act on a two-mode joint Q-function".into(),
        ));
    }
    let w = grid.weights();
    let mut values = joint.values().to_vec();
    let mut mass = 0.0;
    for (i, v) in values.iter_mut().enumerate() {
        if region.contains(grid.alphas_at(i)[1]) {
            mass += w[i] * *v;
        } else {
            *v = 0.0;
        }
    }
    if !(mass > 1e-9) {
        return Err(Error::Conditioning(format!(
            "region {} carries probability {mass:.3e}; cannot condition on it",
            region.label
        )));
    }
    for v in &mut values {
        *v /= mass;
    }
    PhaseDistribution::new(grid.clone(), joint.kind(), values)
}

/// Sup-norm distance between the system marginal of `updated` and `Q_{B_j}`.
pub fn collapse_distance(
    model: &MeasurementModel,
    updated: &PhaseDistribution,
    j: usize,
) -> Result<f64> {
    let marginal = updated.marginal(&[0])?;
    let b = model
        .basis
        .get(j)
        .ok_or_else(|| Error::Domain(format!("no basis state {j}")))?;
    let target = crate::phasespace::q_grid(&pure_density(b), marginal.grid())?;
    marginal.sup_distance(&target)
}

/// `int min(Q_n, Q_m) d^2 alpha` for number states `n != m`.
///
/// Both Q-functions are radial, `exp(-u) u^k / (pi k!)` with `u = |alpha|^2`,
/// and cross once at `u* = (m!/n!)^(1/(m-n))`, which gives the closed form
/// `P(Poisson(u*) > m) + P(Poisson(u*) <= n)` for `n < m`.
pub fn eigenstate_q_overlap(space: &ModeSpace, n: usize, m: usize) -> Result<f64> {
    if n == m {
        return Err(Error::Domain("overlap needs two different levels".into()));
    }
    let levels = space.modes()[0].truncation;
    if space.mode_count() != 1 || n.max(m) >= levels {
        return Err(Error::Occupation {
            mode: 0,
            level: n.max(m),
            truncation: levels,
        });
    }
    let (lo, hi) = (n.min(m), n.max(m));
    let ln_ratio = crate::special::ln_factorial(hi) - crate::special::ln_factorial(lo);
    let crossing = (ln_ratio / (hi - lo) as f64).exp();
    Ok(poisson_sf(hi, crossing) + poisson_cdf(lo, crossing))
}

/// Measurement experiment as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    /// Outcome amplitudes: numbers or `[re, im]` pairs.
    pub amplitudes: Vec<Amplitude>,
    /// Distance between neighbouring region centres (regular polygon layout).
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Explicit centres `[re, im]`; overrides the polygon layout.
    #[serde(default)]
    pub centres: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub weight: PointerWeight,
    /// Joint-grid spacing for the collapse check.
    #[serde(default = "default_step")]
    pub grid_step: f64,
    #[serde(default = "default_system_radius")]
    pub system_radius: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> Complex64 {
        match self {
            Amplitude::Real(x) => Complex64::new(x, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

fn default_separation() -> f64 {
    8.0
}

fn default_radius() -> f64 {
    3.0
}

fn default_step() -> f64 {
    0.25
}

fn default_system_radius() -> f64 {
    5.0
}

impl Experiment {
    pub fn model(&self) -> Result<MeasurementModel> {
        let amps: Vec<Complex64> = self.amplitudes.iter().map(|a| a.value()).collect();
        match &self.centres {
            None => MeasurementModel::polygon_with(&amps, self.separation, self.radius, self.weight),
            Some(centres) => {
                if centres.len() != amps.len() {
                    return Err(Error::InvalidState(format!(
                        "{} centres for {} amplitudes",
                        centres.len(),
                        amps.len()
                    )));
                }
                let regions: Vec<PointerRegion> = centres
                    .iter()
                    .enumerate()
                    .map(|(label, c)| PointerRegion {
                        label,
                        centre: Complex64::new(c[0], c[1]),
                        radius: self.radius,
                    })
                    .collect();
                let system = ModeSpace::single(amps.len().max(2))?;
                let basis = (0..amps.len())
                    .map(|i| number_state(&system, &[i]))
                    .collect::<Result<Vec<_>>>()?;
                let apparatus = apparatus_space_for(&regions, &self.weight)?;
                MeasurementModel::new(system, apparatus, basis, amps, regions, self.weight)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    pub region: usize,
    pub probability: f64,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub probabilities: Vec<f64>,
    pub born: Vec<f64>,
    pub max_error: f64,
    pub leakage: f64,
    pub apparatus_truncation: usize,
    pub collapse: Option<CollapseReport>,
}

/// Pointer probabilities against `|c_j|^2`, plus the collapse check on
/// region `condition` when given.
pub fn run_experiment(exp: &Experiment, condition: Option<usize>) -> Result<ExperimentReport> {
    let model = exp.model()?;
    let probabilities = pointer_probabilities(&model)?;
    let born = model.born_probabilities();
    let max_error = probabilities
        .iter()
        .zip(&born)
        .map(|(p, b)| (p - b).abs())
        .fold(0.0, f64::max);
    let leakage = 1.0 - probabilities.iter().sum::<f64>();
    let collapse = match condition {
        None => None,
        Some(j) => {
            let grid = joint_grid(&model, exp.system_radius, exp.grid_step)?;
            let joint = joint_q(&model, &grid)?;
            let updated = bayesian_update(&model, &joint, j)?;
            Some(CollapseReport {
                region: j,
                probability: probabilities.get(j).copied().unwrap_or(0.0),
                sup_distance: collapse_distance(&model, &updated, j)?,
            })
        }
    };
    Ok(ExperimentReport {
        probabilities,
        born,
        max_error,
        leakage,
        apparatus_truncation: model.apparatus.dim(),
        collapse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::q_grid;
    use crate::random::{random_amplitudes, seeded};
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_way(c1: f64, c2: f64) -> MeasurementModel {
        MeasurementModel::polygon(&[c(c1), c(c2)], 8.0, 3.0).unwrap()
    }

    #[test]
    fn polygon_layout_has_requested_separation() {
        for n in 2..=5 {
            let cs = polygon_centres(n, 8.0);
            assert_abs_diff_eq!((cs[0] - cs[1]).norm(), 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pointer_state_is_confined() {
        let model = two_way(0.6, 0.8);
        for j in 0..2 {
            let rho = pointer_state(&model, j).unwrap();
            rho.validate().unwrap();
            let mass = region_mass(&rho, &model.regions()[j]).unwrap();
            assert!(mass >= 0.999, "{mass}");
        }
    }

    #[test]
    fn point_mass_pointer_is_coherent() {
        let model = MeasurementModel::polygon_with(&[c(1.0), c(0.0)], 8.0, 3.0, PointerWeight::PointMass).unwrap();
        let rho = pointer_state(&model, 0).unwrap();
        let centre = model.regions()[0].centre;
        let want = pure_density(&coherent_state(model.apparatus(), &[centre]).unwrap());
        assert!((rho.matrix() - want.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn radius_guard() {
        let model = MeasurementModel::polygon(&[c(0.6), c(0.8)], 6.0, 2.0).unwrap();
        assert!(matches!(pointer_state(&model, 0), Err(Error::Geometry(_))));
        let relaxed = model.with_min_radius(2.0);
        assert!(pointer_state(&relaxed, 0).is_ok());
    }

    #[test]
    fn overlapping_regions_rejected() {
        assert!(matches!(
            MeasurementModel::polygon(&[c(0.6), c(0.8)], 7.0, 3.0),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn amplitudes_must_be_normalized() {
        assert!(matches!(
            MeasurementModel::polygon(&[c(0.6), c(0.7)], 8.0, 3.0),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn post_measurement_block_structure() {
        let model = two_way(0.6, 0.8);
        let joint = post_measurement_state(&model).unwrap();
        let p: Vec<f64> = (0..2).map(|j| pointer_state(&model, j).unwrap().purity()).collect();
        assert_abs_diff_eq!(joint.purity(), 0.36f64.powi(2) * p[0] + 0.64f64.powi(2) * p[1], epsilon = 1e-10);
        let sys = joint.reduce_to(&[0]).unwrap();
        assert_abs_diff_eq!(sys.matrix()[(0, 0)].re, 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.matrix()[(1, 1)].re, 0.64, epsilon = 1e-12);
        assert!(sys.matrix()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn single_branch_joint_state() {
        let model = two_way(1.0, 0.0);
        let joint = post_measurement_state(&model).unwrap();
        let b = pure_density(&model.basis()[0]);
        let want = b.tensor(&pointer_state(&model, 0).unwrap()).unwrap();
        assert!((joint.matrix() - want.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn born_rule_examples() {
        let p = pointer_probabilities(&two_way(0.5f64.sqrt(), 0.5f64.sqrt())).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-3);
        let p = pointer_probabilities(&two_way(0.6, 0.8)).unwrap();
        assert_abs_diff_eq!(p[0], 0.36, epsilon = 1e-3);
        assert_abs_diff_eq!(p[1], 0.64, epsilon = 1e-3);
        let leak = 1.0 - p.iter().sum::<f64>();
        assert!((0.0..1e-3).contains(&leak), "{leak}");
        let p = pointer_probabilities(&two_way(1.0, 0.0)).unwrap();
        assert!(p[0] >= 0.999);
        assert!(p[1] <= 1e-6);
        assert_abs_diff_eq!(pointer_probability(&two_way(1.0, 0.0), 0).unwrap(), p[0], epsilon = 1e-14);
    }

    #[test]
    fn born_rule_for_random_amplitudes() {
        let mut rng = seeded(17);
        for n in 2..=4 {
            let amps = random_amplitudes(n, &mut rng);
            let model = MeasurementModel::polygon(&amps, 8.0, 3.0).unwrap();
            let p = pointer_probabilities(&model).unwrap();
            for (pj, bj) in p.iter().zip(model.born_probabilities()) {
                assert!((pj - bj).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn joint_q_marginals() {
        let model = two_way(0.6, 0.8);
        let grid = joint_grid(&model, 5.0, 0.25).unwrap();
        let joint = joint_q(&model, &grid).unwrap();
        assert_abs_diff_eq!(joint.integrate(), 1.0, epsilon = 1e-4);
        assert!(joint.min() >= -1e-12);
        // over the apparatus: the dephased system Q
        let sys = joint.marginal(&[0]).unwrap();
        let sys_rho = post_measurement_state(&model).unwrap().reduce_to(&[0]).unwrap();
        let want = q_grid(&sys_rho, sys.grid()).unwrap();
        assert!(sys.sup_distance(&want).unwrap() < 1e-4);
        // over the system: the apparatus reduced Q
        let app = joint.marginal(&[1]).unwrap();
        let app_rho = post_measurement_state(&model).unwrap().reduce_to(&[1]).unwrap();
        let want = q_grid(&app_rho, app.grid()).unwrap();
        assert!(app.sup_distance(&want).unwrap() < 1e-4);
    }

    #[test]
    fn joint_q_agrees_with_two_mode_q() {
        let model = MeasurementModel::polygon(&[c(0.6), c(0.8)], 8.0, 3.0).unwrap();
        let full = post_measurement_state(&model).unwrap();
        let grid = joint_grid(&model, 3.0, 1.0).unwrap();
        let joint = joint_q(&model, &grid).unwrap();
        for i in (0..grid.len()).step_by(97) {
            let direct = q_at(&full, &grid.alphas_at(i));
            assert_abs_diff_eq!(joint.values()[i], direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn update_collapses_system_marginal() {
        let model = two_way(0.6, 0.8);
        let grid = joint_grid(&model, 5.0, 0.25).unwrap();
        let joint = joint_q(&model, &grid).unwrap();
        let updated = bayesian_update(&model, &joint, 1).unwrap();
        assert_abs_diff_eq!(updated.integrate(), 1.0, epsilon = 1e-6);
        assert!(collapse_distance(&model, &updated, 1).unwrap() < 1e-3);
    }

    #[test]
    fn single_branch_update_is_trivial() {
        // wide regions keep essentially all pointer mass inside
        let model = MeasurementModel::polygon(&[c(1.0), c(0.0)], 12.0, 5.0).unwrap();
        let grid = joint_grid(&model, 5.0, 0.25).unwrap();
        let joint = joint_q(&model, &grid).unwrap();
        let updated = bayesian_update(&model, &joint, 0).unwrap();
        assert!(updated.sup_distance(&joint).unwrap() < 1e-6);
    }

    #[test]
    fn conditioning_on_empty_region_fails() {
        let model = two_way(1.0, 0.0);
        let grid = joint_grid(&model, 4.0, 0.5).unwrap();
        let joint = joint_q(&model, &grid).unwrap();
        assert!(matches!(bayesian_update(&model, &joint, 1), Err(Error::Conditioning(_))));
    }

    #[test]
    fn overlap_closed_form() {
        let s = ModeSpace::single(32).unwrap();
        let v = eigenstate_q_overlap(&s, 0, 1).unwrap();
        assert_abs_diff_eq!(v, 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(eigenstate_q_overlap(&s, 1, 0).unwrap(), v, epsilon = 1e-15);
        assert!(eigenstate_q_overlap(&s, 0, 31).unwrap() < 1e-3);
        assert!(matches!(eigenstate_q_overlap(&s, 2, 2), Err(Error::Domain(_))));
        assert!(eigenstate_q_overlap(&s, 0, 32).is_err());
    }

    #[test]
    fn overlap_matches_radial_quadrature() {
        let s = ModeSpace::single(32).unwrap();
        let ln_f = |k: usize| crate::special::ln_factorial(k);
        for (n, m) in [(0, 31), (2, 5), (7, 8)] {
            // int_0^inf min(f_n, f_m) du with f_k = exp(-u) u^k / k!
            let h = 1e-3;
            let mut acc = 0.0;
            for i in 0..200_000 {
                let u = (i as f64 + 0.5) * h;
                let f = |k: usize| (-u + k as f64 * u.ln() - ln_f(k)).exp();
                acc += f(n).min(f(m)) * h;
            }
            assert_abs_diff_eq!(eigenstate_q_overlap(&s, n, m).unwrap(), acc, epsilon = 1e-6);
        }
    }

    #[test]
    fn experiment_descriptor_roundtrip() {
        let text = r#"{"amplitudes": [0.6, [0.0, 0.8]], "separation": 8, "radius": 3}"#;
        let exp: Experiment = serde_json::from_str(text).unwrap();
        let report = run_experiment(&exp, None).unwrap();
        assert!(report.max_error < 2e-3);
        assert!(report.collapse.is_none());
        let bad = r#"{"amplitudes": [1.0], "bogus": 1}"#;
        assert!(serde_json::from_str::<Experiment>(bad).is_err());
    }
}
