use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qphase::fock::DIM_CAP;
use qphase::{Measure, ModeSpace, PhaseGrid};
use serde::Serialize;

use crate::CliError;

/// Grids above this many points are refused rather than allocated.
const MAX_GRID_POINTS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureArg {
    Alpha,
    Qp,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Alpha => Measure::Alpha,
            MeasureArg::Qp => Measure::Qp,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub omega: f64,
    /// Fock truncation per mode.
    #[arg(long, global = true, default_value_t = 32)]
    pub dim: usize,
    /// Half-width of the square grid in Re/Im alpha.
    #[arg(long, global = true, default_value_t = 6.0)]
    pub grid_radius: f64,
    /// Samples per grid axis (odd).
    #[arg(long, global = true, default_value_t = 121)]
    pub grid_samples: usize,
    /// Density convention; when omitted each distribution uses its natural
    /// one (Q per d^2 alpha, Wigner and Husimi per dq dp).
    #[arg(long, global = true, value_enum)]
    pub measure: Option<MeasureArg>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "qphase-out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

/// Resolved settings shared by every command; embedded in each manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub dim: usize,
    pub grid_radius: f64,
    pub grid_samples: usize,
    pub measure: Option<MeasureArg>,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let config = RunConfig {
            hbar: args.hbar,
            mass: args.mass,
            omega: args.omega,
            dim: args.dim,
            grid_radius: args.grid_radius,
            grid_samples: args.grid_samples,
            measure: args.measure,
            out: args.out.clone(),
            seed: args.seed,
        };
        // unit and truncation guards live in the space constructor
        config.space(1)?;
        if !(config.grid_radius.is_finite() && config.grid_radius > 0.0) {
            return Err(CliError::Config(format!(
                "--grid-radius must be positive, got {}",
                config.grid_radius
            )));
        }
        qphase::phasespace::Axis::symmetric(config.grid_radius, config.grid_samples)?;
        Ok(config)
    }

    pub fn space(&self, modes: usize) -> Result<ModeSpace, CliError> {
        if self.dim == 0 || self.dim > DIM_CAP {
            return Err(CliError::Config(format!(
                "--dim must be between 1 and {DIM_CAP}, got {}",
                self.dim
            )));
        }
        Ok(ModeSpace::with_units(
            modes, self.dim, self.hbar, self.mass, self.omega,
        )?)
    }

    /// Grid in the requested measure, or `natural` when none was given.
    pub fn grid(&self, space: &ModeSpace, natural: Measure) -> Result<PhaseGrid, CliError> {
        self.grid_with(space, self.measure.map_or(natural, Measure::from))
    }

    pub fn grid_with(&self, space: &ModeSpace, measure: Measure) -> Result<PhaseGrid, CliError> {
        let points = (self.grid_samples as f64).powi(2 * space.mode_count() as i32);
        if points > MAX_GRID_POINTS as f64 {
            return Err(CliError::Config(format!(
                "a {}-mode grid with {} samples per axis has {points:.3e} points (limit {MAX_GRID_POINTS})",
                space.mode_count(),
                self.grid_samples
            )));
        }
        Ok(PhaseGrid::square(
            space,
            self.grid_radius,
            self.grid_samples,
            measure,
        )?)
    }
}
