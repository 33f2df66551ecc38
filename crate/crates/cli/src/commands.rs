//! One function per subcommand. Each returns its emission and whether the
//! run counts as a success.

use std::time::Instant;

use annuli_core::energy::{analytic_min_weighted_energy, dirichlet_lower_bound, energy_with, EnergyKind, QuadOrders};
use annuli_core::geometry::{make_radial_grid, AnnulusPair};
use annuli_core::maps::{exp_profile_from_boundary, GeneralizedRadialMap, Orientation};
use annuli_core::nitsche::{analytic_dirichlet_energy_radial, nitsche_condition};
use annuli_core::sphere_maps::MobiusTransform;
use annuli_core::variational::{el_residual, minimize_reduced_energy};
use annuli_core::verify::{run_suite, SuiteConfig};
use serde_json::{json, Value};

use crate::config::{substitute, Command, RunConfig};
use crate::output::{Cell, Emission, Table};

#[derive(Debug)]
pub struct Outcome {
    pub emission: Emission,
    pub success: bool,
    /// Lines for standard error; never part of the emitted output.
    pub notes: Vec<String>,
}

pub fn execute(config: &RunConfig) -> annuli_core::Result<Outcome> {
    match config.command {
        Command::Energy => cmd_energy(config),
        Command::Minimize => cmd_minimize(config),
        Command::Nitsche => cmd_nitsche(config),
        Command::Verify => cmd_verify(config),
        Command::Sweep => cmd_sweep(config),
    }
}

fn done(tables: Vec<Table>, json: Value) -> Outcome {
    Outcome {
        emission: Emission { tables, json },
        success: true,
        notes: Vec::new(),
    }
}

/// Closed-form minimum against quadrature of the increasing (H₁) and
/// decreasing (H₂) minimizers. `delta` is the larger refinement change.
pub fn cmd_energy(config: &RunConfig) -> annuli_core::Result<Outcome> {
    let pair = &config.pair;
    let orders = QuadOrders {
        radial: config.radial_order,
        sphere: config.sphere_order,
    };
    let analytic = analytic_min_weighted_energy(pair);
    let mut reports = Vec::new();
    for orientation in [Orientation::Increasing, Orientation::Decreasing] {
        let f = GeneralizedRadialMap::minimizer(pair, orientation, MobiusTransform::identity())?;
        reports.push(energy_with(&f, &pair.domain, EnergyKind::Weighted, orders, true)?);
    }
    let delta = reports
        .iter()
        .map(|r| r.refinement_delta.unwrap_or(f64::NAN))
        .fold(0.0f64, f64::max);
    let mut t = Table::new(&["analytic", "h1_numeric", "h2_numeric", "delta"]);
    t.push(vec![
        analytic.into(),
        reports[0].value.into(),
        reports[1].value.into(),
        delta.into(),
    ]);
    let json = t.record(0);
    Ok(done(vec![t], json))
}

pub fn cmd_minimize(config: &RunConfig) -> annuli_core::Result<Outcome> {
    let pair = &config.pair;
    let grid = make_radial_grid(&pair.domain, config.grid_n, config.spacing)?;
    let sol = minimize_reduced_energy(pair, &grid)?;
    let closed = exp_profile_from_boundary(pair, Orientation::Increasing)?;
    let nodes = grid.nodes();
    let mut profile = Table::new(&["t", "H_discrete", "H_closed_form", "abs_error", "el_residual"]);
    for (i, &t) in nodes.iter().enumerate() {
        let h = sol.profile.value(t)?;
        let c = closed.value(t)?;
        // The residual needs central differences, so endpoints have none.
        let res = if i == 0 || i + 1 == nodes.len() {
            None
        } else {
            Some(el_residual(&sol.profile, t)?)
        };
        profile.push(vec![t.into(), h.into(), c.into(), (h - c).abs().into(), res.into()]);
    }
    let analytic = analytic_min_weighted_energy(pair);
    let mut summary = Table::new(&["energy", "analytic", "gap"]);
    summary.push(vec![sol.energy.into(), analytic.into(), (sol.energy - analytic).into()]);
    let json = json!({ "profile": profile.records(), "summary": summary.record(0) });
    Ok(done(vec![profile, summary], json))
}

const PAIR_COLUMNS: [&str; 4] = ["r", "R", "rstar", "Rstar"];
const CLOSED_FORM_COLUMNS: [&str; 7] = [
    "analytic_min",
    "ratio",
    "threshold",
    "margin",
    "admissible",
    "dirichlet_energy",
    "min_energy_over_Rstar_sq",
];

/// Closed-form quantities of a pair; the Dirichlet energy only when the
/// radial harmonic map is a homeomorphism.
fn closed_form_cells(pair: &AnnulusPair<f64>) -> annuli_core::Result<Vec<Cell>> {
    let v = nitsche_condition(pair)?;
    let x = v.admissible.then(|| analytic_dirichlet_energy_radial(pair));
    Ok(vec![
        analytic_min_weighted_energy(pair).into(),
        v.ratio.into(),
        v.threshold.into(),
        v.margin.into(),
        v.admissible.into(),
        x.into(),
        dirichlet_lower_bound(pair).into(),
    ])
}

pub fn cmd_nitsche(config: &RunConfig) -> annuli_core::Result<Outcome> {
    let mut t = Table::new(&CLOSED_FORM_COLUMNS);
    t.push(closed_form_cells(&config.pair)?);
    let json = t.record(0);
    Ok(done(vec![t], json))
}

/// One record per grid point, first swept parameter outermost.
pub fn cmd_sweep(config: &RunConfig) -> annuli_core::Result<Outcome> {
    let axes = &config.sweep;
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let values = axis.points();
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    let columns: Vec<&str> = PAIR_COLUMNS.iter().chain(CLOSED_FORM_COLUMNS.iter()).copied().collect();
    let mut t = Table::new(&columns);
    for (k, values) in points.iter().enumerate() {
        let [r, big_r, rs, big_rs] = substitute(&config.pair, axes, values);
        let pair = AnnulusPair::from_radii(r, big_r, rs, big_rs)
            .and_then(|p| p.require_positive().map(|_| p))
            .map_err(|e| {
                annuli_core::Error::InvalidArgument(format!("sweep point {k} ({r}, {big_r}, {rs}, {big_rs}): {e}"))
            })?;
        let mut row: Vec<Cell> = vec![r.into(), big_r.into(), rs.into(), big_rs.into()];
        row.extend(closed_form_cells(&pair)?);
        t.push(row);
    }
    let json = t.records();
    Ok(done(vec![t], json))
}

pub fn cmd_verify(config: &RunConfig) -> annuli_core::Result<Outcome> {
    let pair = &config.pair;
    let suite = SuiteConfig {
        seed: config.seed,
        pair: [pair.r(), pair.big_r(), pair.r_star(), pair.big_r_star()],
        radial_order: config.radial_order,
        sphere_order: config.sphere_order,
        grid_n: config.grid_n,
        tolerances: config.tolerances,
        ..SuiteConfig::default()
    };
    let start = Instant::now();
    let report = run_suite(&suite)?;
    let mut results = Table::new(&[
        "name",
        "passed",
        "observed",
        "expected",
        "tolerance",
        "comparison",
        "detail",
    ]);
    for r in &report.results {
        let comparison = serde_json::to_value(r.comparison).expect("serializable");
        results.push(vec![
            r.name.as_str().into(),
            r.passed.into(),
            r.observed.into(),
            r.expected.into(),
            r.tolerance.into(),
            comparison.as_str().unwrap_or_default().into(),
            r.detail.as_str().into(),
        ]);
    }
    let failed = report.failures().count();
    let mut summary = Table::new(&["seed", "checks", "failed", "passed"]);
    summary.push(vec![
        Cell::Int(report.seed),
        report.results.len().into(),
        failed.into(),
        report.passed.into(),
    ]);
    let coverage: Vec<Value> = report
        .coverage
        .iter()
        .map(|c| json!({ "property": c.property, "checks": c.checks }))
        .collect();
    let json = json!({
        "seed": report.seed,
        "passed": report.passed,
        "results": results.records(),
        "coverage": coverage,
    });
    let mut notes: Vec<String> = report
        .failures()
        .map(|r| format!("FAILED {}: {}", r.name, r.detail))
        .collect();
    notes.push(format!(
        "{} checks, {failed} failed, wall time {:.2} s",
        report.results.len(),
        start.elapsed().as_secs_f64()
    ));
    Ok(Outcome {
        emission: Emission {
            tables: vec![results, summary],
            json,
        },
        success: report.passed,
        notes,
    })
}
