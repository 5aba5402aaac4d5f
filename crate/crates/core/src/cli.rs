//! Subcommand implementations behind the `sspare` binary. Each command
//! returns its rendered output; the binary decides where it goes.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Architecture, ModelError, ModuleId, Scenario};
use crate::planner::{
    assembly_plan, parse_target_grid, render_grid, satellite_lattice, validate_plan, Plan, PlannerError, Provenance,
};
use crate::reliability::{curve_csv, reliability_curve};
use crate::sim::{compare_architectures, run_monte_carlo, run_prepared, ComparisonReport, MonteCarloSummary, Prepared};
use crate::sizing::{
    array_power, build_comparison_table, comparison_csv, comparison_markdown, mission_delta, module_cost,
    module_mass, module_power, modules_required, scenario_stack_capacity, table_markdown, thousands, trim_num,
    ComparisonRow, MissionDelta, SizingError, TABLE_COLUMNS,
};

pub const SCENARIO_ENV: &str = "SSPARE_DEFAULT_SCENARIO";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    #[default]
    Md,
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Full overwrite, never append.
pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// The scenario at `path`, else the one named by the environment, else
/// the built-in SSPARE preset.
pub fn resolve_scenario(path: Option<&Path>) -> Result<Scenario> {
    let from_env = std::env::var_os(SCENARIO_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(from_env) {
        Some(p) => Ok(Scenario::load(&p)?),
        None => Ok(Scenario::sspare_default()),
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn money(v: f64) -> String {
    if v.abs() >= 1e6 {
        format!("${}M", trim_num(v / 1e6, 2))
    } else if v.abs() >= 1e3 {
        format!("${}k", trim_num(v / 1e3, 1))
    } else {
        format!("${}", trim_num(v, 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizingReport {
    pub scenario: String,
    pub module_power_w: f64,
    pub module_mass_kg: f64,
    pub module_cost_usd: f64,
    pub bus_demand_w: f64,
    pub modules_required: u32,
    pub stack_capacity: u32,
    pub capacity_power_w: f64,
    pub mission_delta: Option<MissionDelta>,
    pub table: Vec<ComparisonRow>,
}

/// Table rows for `s`: the scenario itself alongside the reference
/// configurations of the other architectures.
fn sizing_table(s: &Scenario) -> Vec<ComparisonRow> {
    let kind = std::mem::discriminant(&s.architecture);
    let mut list: Vec<Scenario> =
        Scenario::table_presets().into_iter().filter(|p| std::mem::discriminant(&p.architecture) != kind).collect();
    list.push(s.clone());
    list.sort_by_key(|p| match p.architecture {
        Architecture::Traditional => 0,
        Architecture::ServicerExtended { .. } => 1,
        Architecture::Sspare { .. } => 2,
    });
    build_comparison_table(&list, &ComparisonRow::reference_baseline())
}

pub fn sizing_report(s: &Scenario) -> Result<SizingReport> {
    let spec = &s.module_spec;
    let capacity = scenario_stack_capacity(s)?;
    Ok(SizingReport {
        scenario: s.label(),
        module_power_w: module_power(spec, 0.0),
        module_mass_kg: module_mass(spec),
        module_cost_usd: module_cost(spec),
        bus_demand_w: s.bus_demand,
        modules_required: modules_required(s.bus_demand, spec),
        stack_capacity: capacity,
        capacity_power_w: array_power(capacity, spec, 0.0),
        mission_delta: mission_delta(s).ok(),
        table: sizing_table(s),
    })
}

pub fn cmd_size(s: &Scenario, format: Format) -> Result<String> {
    let r = sizing_report(s)?;
    match format {
        Format::Json => json(&r),
        Format::Csv => Ok(comparison_csv(&r.table)),
        Format::Md => {
            let mut rows = vec![
                vec!["Module power".into(), format!("{} kW ({} W)", trim_num(r.module_power_w / 1000.0, 1), trim_num(r.module_power_w, 2))],
                vec!["Module mass".into(), format!("{} kg", trim_num(r.module_mass_kg, 2))],
                vec!["Module cost".into(), format!("${} ({})", thousands(r.module_cost_usd.round() as i64), money(r.module_cost_usd))],
                vec![
                    format!("Modules for {} kW demand", trim_num(r.bus_demand_w / 1000.0, 2)),
                    r.modules_required.to_string(),
                ],
                vec![
                    "Stack capacity".into(),
                    format!("{} modules ({} kW)", r.stack_capacity, trim_num(r.capacity_power_w / 1000.0, 1)),
                ],
            ];
            if let Some(d) = r.mission_delta {
                rows.push(vec![
                    "Mission delta".into(),
                    format!("{}, {} kg, {} m", money(d.added_cost), trim_num(d.added_mass, 1), trim_num(d.added_height, 2)),
                ]);
            }
            let mut out = format!("# Sizing: {}\n\n", r.scenario);
            out.push_str(&table_markdown(&["Quantity", "Value"], &rows));
            out.push('\n');
            out.push_str(&comparison_markdown(&r.table));
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: Plan,
    pub passed: bool,
    /// Human-readable verdict and final configuration.
    pub report: String,
}

/// Plans the assembly of a target grid, or replays `replay` against it,
/// and verifies the result.
pub fn cmd_plan(s: &Scenario, grid_text: &str, replay: Option<&str>) -> Result<PlanOutcome> {
    let body_rows = satellite_lattice(s).body_cells().iter().map(|c| c.y).max().map_or(1, |y| y + 1) as u32;
    let grid = parse_target_grid(grid_text, body_rows)?;
    let plan = match replay {
        Some(text) => Plan::parse(text, Provenance::Assembly)?,
        None => {
            let n: usize = grid.targets.values().map(|t| t.len()).sum();
            let ids: Vec<ModuleId> = (1..=n as u32).map(ModuleId).collect();
            assembly_plan(&grid.lattice, &grid.targets, &ids)?
        }
    };
    let mut report = String::new();
    let passed = match validate_plan(&grid.lattice, &plan) {
        Ok(end) => {
            let wanted: std::collections::BTreeSet<_> = grid.targets.values().flatten().copied().collect();
            let got = end.occupied_cells();
            if got == wanted {
                let _ = writeln!(report, "replay: PASS ({} steps, {} moves)", plan.len(), plan.motion_count());
                report.push_str(&render_grid(&end));
                true
            } else {
                let missing = wanted.difference(&got).next().map(ToString::to_string).unwrap_or_else(|| "-".into());
                let _ = writeln!(report, "replay: FAIL (final shape differs from target; first missing cell {missing})");
                false
            }
        }
        Err(e) => {
            let _ = writeln!(report, "replay: FAIL ({e})");
            false
        }
    };
    Ok(PlanOutcome { plan, passed, report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub scenario: String,
    pub summary: MonteCarloSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_log: Option<Vec<String>>,
}

fn ci(mean: f64, se: f64) -> String {
    format!("{:.2} ± {:.2}", mean, 1.96 * se)
}

fn pct(f: f64) -> String {
    format!("{:.1}%", 100.0 * f)
}

const SUMMARY_COLUMNS: [&str; 12] = [
    "scenario",
    "replicas",
    "seed",
    "mean_mission_lifetime",
    "se_mission_lifetime",
    "mean_power_lifetime",
    "se_power_lifetime",
    "mission_censored_fraction",
    "power_censored_fraction",
    "mean_replacements",
    "recovery_failures",
    "invariant_violations",
];

fn summary_record(m: &MonteCarloSummary) -> Vec<String> {
    vec![
        m.label.clone(),
        m.replicas.to_string(),
        m.base_seed.to_string(),
        m.mean_mission_lifetime.to_string(),
        m.se_mission_lifetime.to_string(),
        m.mean_power_lifetime.to_string(),
        m.se_power_lifetime.to_string(),
        m.mission_censored_fraction.to_string(),
        m.power_censored_fraction.to_string(),
        m.mean_replacements.to_string(),
        m.recovery_failures.to_string(),
        m.invariant_violations.to_string(),
    ]
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn check_replicas(replicas: usize) -> Result<()> {
    if replicas == 0 {
        return Err(CliError::Usage("--replicas must be at least 1".into()));
    }
    Ok(())
}

pub fn cmd_simulate(s: &Scenario, replicas: usize, seed: u64, event_log: bool, format: Format) -> Result<String> {
    check_replicas(replicas)?;
    if event_log && format == Format::Csv {
        return Err(CliError::Usage("--event-log needs --format md or json".into()));
    }
    let summary = run_monte_carlo(s, replicas, seed);
    let event_log = event_log.then(|| run_prepared(&Prepared::new(s), seed, 0, true).event_log.unwrap_or_default());
    let r = SimulateReport { scenario: s.label(), summary, event_log };
    match format {
        Format::Json => json(&r),
        Format::Csv => Ok(csv_text(&SUMMARY_COLUMNS, &[summary_record(&r.summary)])),
        Format::Md => {
            let m = &r.summary;
            let rows = vec![
                vec!["Replicas".into(), m.replicas.to_string()],
                vec!["Seed".into(), m.base_seed.to_string()],
                vec!["Mission life (years, mean ± 95% CI)".into(), ci(m.mean_mission_lifetime, m.se_mission_lifetime)],
                vec!["Power-limited life (years, mean ± 95% CI)".into(), ci(m.mean_power_lifetime, m.se_power_lifetime)],
                vec!["Missions reaching the horizon".into(), pct(m.mission_censored_fraction)],
                vec!["Power reaching the horizon".into(), pct(m.power_censored_fraction)],
                vec!["Mean replacements".into(), format!("{:.3}", m.mean_replacements)],
                vec!["Recovery failures".into(), m.recovery_failures.to_string()],
            ];
            let mut out = format!("# Simulation: {}\n\n", r.scenario);
            out.push_str(&table_markdown(&["Quantity", "Value"], &rows));
            out.push_str("\n## Replacements per replica\n\n");
            let hist: Vec<Vec<String>> =
                m.replacement_histogram.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
            out.push_str(&table_markdown(&["Replacements", "Replicas"], &hist));
            out.push_str("\n## Mission survival\n\n");
            let curve: Vec<Vec<String>> =
                m.survival_curve.iter().map(|(t, p)| vec![trim_num(*t, 3), format!("{p:.4}")]).collect();
            out.push_str(&table_markdown(&["Year", "Surviving"], &curve));
            if let Some(log) = &r.event_log {
                out.push_str("\n## Event log (replica 0)\n\n```\n");
                for l in log {
                    out.push_str(l);
                    out.push('\n');
                }
                out.push_str("```\n");
            }
            Ok(out)
        }
    }
}

const COMPARE_EXTRA: [&str; 3] =
    ["Simulated mission life (years, mean ± 95% CI)", "Simulated power-limited life (years)", "Reaching horizon"];

fn compare_rows(r: &ComparisonReport) -> Vec<Vec<String>> {
    r.rows
        .iter()
        .map(|e| {
            let m = &e.simulated;
            let mut row = e.statics.cells().to_vec();
            row.push(ci(m.mean_mission_lifetime, m.se_mission_lifetime));
            row.push(ci(m.mean_power_lifetime, m.se_power_lifetime));
            row.push(pct(m.mission_censored_fraction));
            row
        })
        .collect()
}

pub fn cmd_compare(scenarios: &[Scenario], replicas: usize, seed: u64, format: Format) -> Result<String> {
    check_replicas(replicas)?;
    if scenarios.is_empty() {
        return Err(CliError::Usage("nothing to compare".into()));
    }
    let r = compare_architectures(scenarios, replicas, seed, &ComparisonRow::reference_baseline());
    let header: Vec<&str> = TABLE_COLUMNS.iter().chain(COMPARE_EXTRA.iter()).copied().collect();
    match format {
        Format::Json => json(&r),
        Format::Csv => Ok(csv_text(&header, &compare_rows(&r))),
        Format::Md => {
            let mut out = format!("# Architecture comparison ({} replicas, seed {})\n\n", r.replicas, r.base_seed);
            out.push_str(&table_markdown(&header, &compare_rows(&r)));
            Ok(out)
        }
    }
}

/// Closed-form survival of the scenario's hazard model over its horizon.
pub fn cmd_curve(s: &Scenario, points: usize, format: Format) -> Result<String> {
    let curve = reliability_curve(&s.hazard, s.mission_duration, points);
    match format {
        Format::Csv => Ok(curve_csv(&curve)),
        Format::Json => {
            #[derive(Serialize)]
            struct Point {
                t: f64,
                survival: f64,
            }
            json(&curve.iter().map(|&(t, survival)| Point { t, survival }).collect::<Vec<_>>())
        }
        Format::Md => {
            let rows: Vec<Vec<String>> = curve.iter().map(|(t, p)| vec![trim_num(*t, 3), format!("{p:.6}")]).collect();
            Ok(format!("# Survival: {}\n\n{}", s.label(), table_markdown(&["Year", "Survival"], &rows)))
        }
    }
}
