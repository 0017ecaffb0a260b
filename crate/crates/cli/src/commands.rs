use std::path::Path;

use num_complex::Complex64;
use qphase::dynamics::{self, Propagator};
use qphase::marginals::{continuity_residual, density_profile, q_marginals, wigner_marginals};
use qphase::measurement::{eigenstate_q_overlap, run_experiment, Experiment};
use qphase::ordering::{auto_q_grid, berezin_quantize, expectation_trace, weyl_quantize};
use qphase::phasespace::{
    extent_leakage_bound, husimi_grid, phase_expectation, q_grid, wigner_grid, Axis,
};
use qphase::preparation::{HamiltonianRecipe, StateRecipe};
use qphase::{DensityOperator, Measure, ModeSpace, PhaseDistribution, PhaseGrid, PhasePolynomial};
use serde_json::json;

use crate::config::RunConfig;
use crate::export::{csv_table, ensure_dir, grid_csv, write_json, write_text, GridSummary};
use crate::{CliError, Kind, Pipeline};

fn prepare(config: &RunConfig, text: &str) -> Result<DensityOperator, CliError> {
    let recipe = StateRecipe::parse(text)?;
    let space = config.space(recipe.mode_count().unwrap_or(1))?;
    Ok(recipe.density(&space, config.seed)?)
}

fn single_mode(space: &ModeSpace, what: &str) -> Result<(), CliError> {
    if space.mode_count() == 1 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what} is single-mode; the state has {} modes",
            space.mode_count()
        )))
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn show(z: Complex64) -> String {
    if z.im.abs() <= 1e-12 * z.re.abs().max(1.0) {
        format!("{:.8}", z.re)
    } else {
        format!("{:.8}{:+.8}i", z.re, z.im)
    }
}

fn write_grid(config: &RunConfig, dist: &PhaseDistribution, name: &str) -> Result<GridSummary, CliError> {
    let file = Path::new(name);
    write_text(&config.out.join(file), &grid_csv(dist))?;
    Ok(GridSummary::of(dist, file))
}

pub fn dist(config: &RunConfig, state: &str, kind: Kind, kappa: Option<f64>) -> Result<(), CliError> {
    let rho = prepare(config, state)?;
    let natural = if kind == Kind::Q { Measure::Alpha } else { Measure::Qp };
    let grid = config.grid(rho.space(), natural)?;
    let dist = match kind {
        Kind::Q => q_grid(&rho, &grid)?,
        Kind::Wigner => wigner_grid(&rho, &grid)?,
        Kind::Husimi => {
            let kappa = kappa.ok_or_else(|| CliError::Config("--kind husimi needs --kappa".into()))?;
            husimi_grid(&rho, &grid, kappa)?
        }
    };
    if kind != Kind::Husimi && kappa.is_some() {
        return Err(CliError::Config("--kappa only applies to --kind husimi".into()));
    }
    ensure_dir(&config.out)?;
    let stem = match kind {
        Kind::Q => "dist_q",
        Kind::Wigner => "dist_wigner",
        Kind::Husimi => "dist_husimi",
    };
    let summary = write_grid(config, &dist, &format!("{stem}.csv"))?;
    let peak = dist.argmax();
    let leakage = (kind == Kind::Q).then(|| extent_leakage_bound(&rho, &grid));
    write_json(
        &config.out.join(format!("{stem}.json")),
        &json!({
            "command": "dist",
            "config": config,
            "state": state,
            "kappa": kappa,
            "grid": summary,
            "argmax": peak.alphas().iter().map(|a| pair(*a)).collect::<Vec<_>>(),
            "leakage_bound": leakage,
        }),
    )?;
    println!("{} of \"{state}\" on {} points ({:?} measure)", summary.kind, summary.points, summary.measure);
    println!("integral {:.8}", summary.integral);
    println!("min {:.8}", summary.min);
    let at: Vec<String> = peak.alphas().iter().map(|a| show(*a)).collect();
    println!("max {:.8} at alpha = {}", summary.max, at.join(", "));
    if let Some(bound) = leakage {
        println!("mass beyond grid <= {bound:.3e}");
    }
    Ok(())
}

pub fn expect(config: &RunConfig, state: &str, poly: &str, pipeline: Pipeline) -> Result<(), CliError> {
    let f = PhasePolynomial::parse(poly)?;
    let rho = prepare(config, state)?;
    let grid = auto_q_grid(&rho, f.degree())?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();

    let weyl = weyl_quantize(&f)?;
    let weyl_trace = expectation_trace(&rho, &weyl)?;
    if pipeline != Pipeline::Berezin {
        let w = phase_expectation(&wigner_grid(&rho, &grid)?, &f)?;
        warnings.extend(w.warning);
        rows.push(("weyl", weyl.to_string(), weyl_trace, w.value));
    }
    let q_value = phase_expectation(&q_grid(&rho, &grid)?, &f)?;
    warnings.extend(q_value.warning);
    if pipeline != Pipeline::Weyl {
        let berezin = berezin_quantize(&f)?;
        let trace = expectation_trace(&rho, &berezin)?;
        rows.push(("berezin", berezin.to_string(), trace, q_value.value));
    }
    // quantum expectation minus the classical average over Q
    let gap = (pipeline == Pipeline::Both).then(|| (weyl_trace - q_value.value).re);

    println!("f = {f}");
    println!("{:<8} {:>18} {:>18} {:>14}  operator", "pipeline", "trace", "phase space", "difference");
    for (name, op, trace, phase) in &rows {
        println!(
            "{name:<8} {:>18} {:>18} {:>14.3e}  {op}",
            show(*trace),
            show(*phase),
            (trace - phase).norm()
        );
    }
    if let Some(gap) = gap {
        println!("gap (weyl trace - Q average) {gap:.8}");
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    ensure_dir(&config.out)?;
    let table: Vec<_> = rows
        .iter()
        .map(|(name, op, trace, phase)| {
            json!({
                "pipeline": name,
                "operator": op,
                "trace": pair(*trace),
                "phase_space": pair(*phase),
            })
        })
        .collect();
    write_json(
        &config.out.join("expect.json"),
        &json!({
            "command": "expect",
            "config": config,
            "state": state,
            "poly": f.to_string(),
            "rows": table,
            "gap": gap,
            "warnings": warnings,
        }),
    )
}

pub fn marginals(config: &RunConfig, state: &str) -> Result<(), CliError> {
    let rho = prepare(config, state)?;
    single_mode(rho.space(), "marginals")?;
    let grid = config.grid_with(rho.space(), Measure::Qp)?;
    let from_q = q_marginals(&q_grid(&rho, &grid)?)?;
    let from_w = wigner_marginals(&wigner_grid(&rho, &grid)?)?;
    let exact = density_profile(&rho, &from_q.axis)?;
    let rows: Vec<Vec<f64>> = from_q
        .positions()
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            vec![
                q,
                exact.density[i],
                from_w.density[i],
                from_q.density[i],
                exact.current[i],
                from_w.current[i],
                from_q.current[i],
            ]
        })
        .collect();
    ensure_dir(&config.out)?;
    write_text(
        &config.out.join("marginals.csv"),
        &csv_table(&["q", "rho_state", "rho_wigner", "rho_q", "j_state", "j_wigner", "j_q"], &rows),
    )?;
    let at_origin = json!({
        "rho_state": exact.density_at(0.0),
        "rho_wigner": from_w.density_at(0.0),
        "rho_q": from_q.density_at(0.0),
    });
    write_json(
        &config.out.join("marginals.json"),
        &json!({
            "command": "marginals",
            "config": config,
            "state": state,
            "file": "marginals.csv",
            "norms": {
                "rho_state": exact.norm(),
                "rho_wigner": from_w.norm(),
                "rho_q": from_q.norm(),
            },
            "at_origin": at_origin,
        }),
    )?;
    println!("{:<10} {:>12} {:>12}", "source", "int rho dq", "rho(0)");
    for (name, prof) in [("state", &exact), ("wigner", &from_w), ("q", &from_q)] {
        let origin = prof.density_at(0.0).map_or("-".to_string(), |v| format!("{v:.8}"));
        println!("{name:<10} {:>12.8} {origin:>12}", prof.norm());
    }
    Ok(())
}

pub fn evolve(
    config: &RunConfig,
    state: &str,
    hamiltonian: &str,
    t_final: f64,
    steps: usize,
    continuity_dt: Option<f64>,
) -> Result<(), CliError> {
    let h_recipe = HamiltonianRecipe::parse(hamiltonian)?;
    let rho = prepare(config, state)?;
    let space = rho.space().clone();
    let h = h_recipe.matrix(&space)?;
    if let Some(dt) = continuity_dt {
        single_mode(&space, "the continuity check")?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CliError::Config(format!("--continuity-dt must be positive, got {dt}")));
        }
    }
    let traj = dynamics::evolve(&rho, &h, t_final, steps)?;
    let grid = config.grid(&space, Measure::Alpha)?;
    let grids = traj.q_grids(&grid)?;
    let energies = traj.expectations(&h)?;
    let purities = traj.purities();

    ensure_dir(&config.out)?;
    let modes = space.mode_count();
    let mut header = vec!["t".to_string(), "trace".into(), "purity".into(), "energy".into()];
    for k in 0..modes {
        header.push(format!("re_centroid{k}"));
        header.push(format!("im_centroid{k}"));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (k, (t, q)) in traj.times.iter().zip(&grids).enumerate() {
        summaries.push(write_grid(config, q, &format!("evolve_q_{k:04}.csv"))?);
        let mut row = vec![*t, traj.states[k].trace().re, purities[k], energies[k].re];
        for m in 0..modes {
            let c = q.mean_alpha(m);
            row.extend([c.re, c.im]);
        }
        rows.push(row);
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_text(&config.out.join("trajectory.csv"), &csv_table(&header_refs, &rows))?;

    let check = match continuity_dt {
        Some(dt) => {
            // mid-trajectory, away from turning points where the rate vanishes
            let centre = Propagator::new(&h)?.evolve(&rho, 0.5 * t_final)?;
            Some(continuity_check(&centre, &h, dt, config)?)
        }
        None => None,
    };
    let last = grids.last().expect("evolve returns at least two samples");
    let centroid: Vec<Complex64> = (0..modes).map(|m| last.mean_alpha(m)).collect();
    write_json(
        &config.out.join("evolve.json"),
        &json!({
            "command": "evolve",
            "config": config,
            "state": state,
            "hamiltonian": hamiltonian,
            "t_final": t_final,
            "steps": steps,
            "trajectory": "trajectory.csv",
            "grids": summaries,
            "max_trace_drift": traj.max_trace_drift(),
            "final_centroid": centroid.iter().map(|c| pair(*c)).collect::<Vec<_>>(),
            "continuity": check,
        }),
    )?;
    println!("{} samples to t = {t_final}", traj.len());
    let shown: Vec<String> = centroid.iter().map(|c| show(*c)).collect();
    println!("final centroid {}", shown.join(", "));
    println!("max trace drift {:.3e}", traj.max_trace_drift());
    if let Some(c) = check {
        println!(
            "continuity residual {:.3e} (rate scale {:.3e}); halved steps {:.3e}; order ratio {:.3}",
            c["residual"].as_f64().unwrap_or(f64::NAN),
            c["rate_scale"].as_f64().unwrap_or(f64::NAN),
            c["residual_halved"].as_f64().unwrap_or(f64::NAN),
            c["order_ratio"].as_f64().unwrap_or(f64::NAN),
        );
    }
    Ok(())
}

/// Residual over `-dt, 0, dt` around `rho`, then again with the time step and position
/// step halved; second-order convergence gives a ratio near 4.
fn continuity_check(
    rho: &DensityOperator,
    h: &qphase::OperatorMatrix,
    dt: f64,
    config: &RunConfig,
) -> Result<serde_json::Value, CliError> {
    let grid = config.grid_with(rho.space(), Measure::Qp)?;
    let prop = Propagator::new(h)?;
    let around = |step: f64| -> Result<Vec<DensityOperator>, CliError> {
        Ok(vec![prop.evolve(rho, -step)?, rho.clone(), prop.evolve(rho, step)?])
    };
    let coarse = continuity_residual(&around(dt)?, dt, &grid)?;
    let axes = grid.axes();
    let re = Axis::new(axes[0].min, axes[0].max, 2 * (axes[0].samples - 1) + 1)?;
    let fine_grid = PhaseGrid::new(rho.space().clone(), vec![re, axes[1]], Measure::Qp)?;
    let fine = continuity_residual(&around(dt / 2.0)?, dt / 2.0, &fine_grid)?;
    Ok(json!({
        "dt": dt,
        "residual": coarse.residual,
        "rate_scale": coarse.rate_scale,
        "residual_halved": fine.residual,
        "order_ratio": coarse.residual / fine.residual,
    }))
}

pub fn measure(config: &RunConfig, file: &Path, condition: Option<usize>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::Io(file.to_path_buf(), e))?;
    let experiment: Experiment = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
    let outcomes = experiment.amplitudes.len();
    let region = match condition {
        None => None,
        Some(j) if (1..=outcomes).contains(&j) => Some(j - 1),
        Some(j) => {
            return Err(CliError::Config(format!(
                "--condition {j} is not an outcome (1..={outcomes})"
            )))
        }
    };
    let report = run_experiment(&experiment, region)?;
    let rows: Vec<Vec<f64>> = report
        .probabilities
        .iter()
        .zip(&report.born)
        .enumerate()
        .map(|(j, (p, b))| vec![(j + 1) as f64, *p, *b, p - b])
        .collect();
    ensure_dir(&config.out)?;
    write_text(
        &config.out.join("measure.csv"),
        &csv_table(&["outcome", "pointer_probability", "born", "difference"], &rows),
    )?;
    let collapse = report.collapse.as_ref().map(|c| {
        json!({
            "outcome": c.region + 1,
            "probability": c.probability,
            "sup_distance": c.sup_distance,
        })
    });
    write_json(
        &config.out.join("measure.json"),
        &json!({
            "command": "measure",
            "config": config,
            "experiment": experiment,
            "probabilities": report.probabilities,
            "born": report.born,
            "max_error": report.max_error,
            "leakage": report.leakage,
            "apparatus_truncation": report.apparatus_truncation,
            "collapse": collapse,
        }),
    )?;
    println!("{:>7} {:>12} {:>12} {:>12}", "outcome", "P(j)", "|c_j|^2", "difference");
    for row in &rows {
        println!("{:>7} {:>12.8} {:>12.8} {:>12.3e}", row[0], row[1], row[2], row[3]);
    }
    println!("max error {:.3e}", report.max_error);
    println!("pointer mass outside all regions {:.3e}", report.leakage);
    if let Some(c) = &report.collapse {
        println!(
            "conditioned on outcome {}: sup |Q_S - Q_B| = {:.3e}",
            c.region + 1,
            c.sup_distance
        );
    }
    Ok(())
}

pub fn overlap(config: &RunConfig, n: usize, m: usize) -> Result<(), CliError> {
    let space = config.space(1)?;
    let value = eigenstate_q_overlap(&space, n, m)?;
    ensure_dir(&config.out)?;
    write_json(
        &config.out.join("overlap.json"),
        &json!({
            "command": "overlap",
            "config": config,
            "n": n,
            "m": m,
            "overlap": value,
        }),
    )?;
    println!("overlap of |{n}> and |{m}> Q-functions: {value:.8}");
    Ok(())
}
