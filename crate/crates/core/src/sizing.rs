//! Power, mass, cost and launch-packing arithmetic, and the static columns
//! of the architecture comparison table.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Architecture, FairingProfile, ModuleSpec, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum SizingError {
    #[error("module does not fit: fairing radius {radius:.3} m at the stack base is below the module circumradius {circumradius:.3} m")]
    NoFit { radius: f64, circumradius: f64 },
    #[error("operation needs an SSPARE scenario, got {0}")]
    WrongArchitecture(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Output of one module after `age` years, W.
pub fn module_power(spec: &ModuleSpec, age: f64) -> f64 {
    spec.panel_area * spec.irradiance * spec.efficiency * (1.0 - spec.degradation_rate).powf(age)
}

/// Smallest module count whose beginning-of-life output covers `demand`.
pub fn modules_required(demand: f64, spec: &ModuleSpec) -> u32 {
    let r = demand / module_power(spec, 0.0);
    if r <= 0.0 {
        return 0;
    }
    // n * p / p can land a few ulps above n
    let k = r.round();
    if (r - k).abs() <= 1e-9 * k.max(1.0) {
        k as u32
    } else {
        r.ceil() as u32
    }
}

pub fn array_power(n: u32, spec: &ModuleSpec, age: f64) -> f64 {
    f64::from(n) * module_power(spec, age)
}

pub fn module_mass(spec: &ModuleSpec) -> f64 {
    spec.structure_mass + spec.battery_mass + spec.other_mass
}

pub fn module_cost(spec: &ModuleSpec) -> f64 {
    spec.cell_cost_total + spec.structure_cost + spec.battery_electronics_cost
}

pub fn cost_per_cell(spec: &ModuleSpec) -> f64 {
    spec.cell_cost_total / f64::from(spec.cell_count)
}

/// Lowest height at or above `from` where the fairing radius drops below
/// `threshold`. The radius is zero above the last station, so this always
/// exists for a positive threshold.
fn first_crossing(f: &FairingProfile, from: f64, threshold: f64) -> f64 {
    if f.radius_at(from) < threshold {
        return from;
    }
    for w in f.stations.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.height <= from {
            continue;
        }
        if b.radius < threshold {
            let lo = a.height.max(from);
            let r_lo = f.radius_at(lo);
            // r_lo >= threshold > b.radius
            return lo + (r_lo - threshold) / (r_lo - b.radius) * (b.height - lo);
        }
    }
    f.apex()
}

/// Clear vertical space above the bus for the module stack, m.
pub fn stack_clear_height(
    fairing: &FairingProfile,
    satellite_height: f64,
    spec: &ModuleSpec,
    rod_half_span: f64,
    rod_overtravel: f64,
) -> Result<f64, SizingError> {
    let circ = spec.circumradius();
    let r0 = fairing.radius_at(satellite_height);
    if r0 < circ {
        return Err(SizingError::NoFit { radius: r0, circumradius: circ });
    }
    let h_mod = first_crossing(fairing, satellite_height, circ) - satellite_height;
    let h_rod = first_crossing(fairing, satellite_height, rod_half_span) - rod_overtravel - satellite_height;
    Ok(h_mod.min(h_rod).max(0.0))
}

/// Number of modules that can be stacked on top of the bus inside the
/// fairing, with both unloading rods still clearing the wall.
pub fn stack_capacity(
    fairing: &FairingProfile,
    satellite_height: f64,
    spec: &ModuleSpec,
    rod_half_span: f64,
    rod_overtravel: f64,
) -> Result<u32, SizingError> {
    let h = stack_clear_height(fairing, satellite_height, spec, rod_half_span, rod_overtravel)?;
    Ok((h / spec.stack_pitch + 1e-9).floor() as u32)
}

/// Stack capacity for a scenario's own geometry and launch config.
pub fn scenario_stack_capacity(s: &Scenario) -> Result<u32, SizingError> {
    stack_capacity(
        &s.launch.fairing,
        s.satellite_dims.height,
        &s.module_spec,
        s.launch.rod_half_span,
        s.operations.connector_overtravel,
    )
}

/// What SSPARE adds on top of a traditional satellite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionDelta {
    /// $
    pub added_cost: f64,
    /// kg
    pub added_mass: f64,
    /// m
    pub added_height: f64,
}

pub fn mission_delta(s: &Scenario) -> Result<MissionDelta, SizingError> {
    match &s.architecture {
        Architecture::Sspare { n_modules, n_spares, unloader_cost, unloader_mass, .. } => {
            let spares = f64::from(*n_spares);
            Ok(MissionDelta {
                added_cost: spares * module_cost(&s.module_spec) + 2.0 * s.base_module_cost + unloader_cost,
                added_mass: spares * module_mass(&s.module_spec) + 2.0 * s.base_module_mass + unloader_mass,
                added_height: f64::from(*n_modules) * s.module_spec.stack_pitch,
            })
        }
        other => Err(SizingError::WrongArchitecture(other.label().to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "years", rename_all = "snake_case")]
pub enum Life {
    Years(f64),
    /// Open-ended: at least this many years.
    AtLeast(f64),
}

impl fmt::Display for Life {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Life::Years(y) => f.write_str(&trim_num(*y, 1)),
            Life::AtLeast(y) => write!(f, "{}+", trim_num(*y, 1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    /// (length, width, height), m
    pub main_body_dims: (f64, f64, f64),
    /// W
    pub max_power: f64,
    /// $
    pub dev_launch_cost: f64,
    /// kg
    pub launch_mass: f64,
    pub life_expectancy: Life,
}

impl ComparisonRow {
    /// The traditional geostationary reference satellite.
    pub fn reference_baseline() -> Self {
        Self {
            label: "Traditional".into(),
            main_body_dims: (2.8, 3.5, 5.6),
            max_power: 8600.0,
            dev_launch_cost: 400e6,
            launch_mass: 4725.0,
            life_expectancy: Life::Years(17.0),
        }
    }

    /// Display strings, one per column of [`TABLE_COLUMNS`].
    pub fn cells(&self) -> [String; 6] {
        let (l, w, h) = self.main_body_dims;
        [
            self.label.clone(),
            format!("{}/{}/{}", trim_num(l, 2), trim_num(w, 2), trim_num(h, 2)),
            trim_num(self.max_power / 1000.0, 1),
            format!("{}", (self.dev_launch_cost / 1e6).round() as i64),
            thousands(self.launch_mass.round() as i64),
            self.life_expectancy.to_string(),
        ]
    }
}

pub const TABLE_COLUMNS: [&str; 6] = [
    "System",
    "Main body dimensions (m/m/m)",
    "Maximum power (kW)",
    "Development & launch cost ($MM)",
    "Launch mass (kg)",
    "Life expectancy (years)",
];

/// Rounds to `decimals` places and drops trailing zeros.
pub fn trim_num(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn thousands(v: i64) -> String {
    let digits = v.unsigned_abs().to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    if v < 0 {
        out.insert(0, '-');
    }
    out
}

/// Baseline row first, then one row per non-traditional scenario.
/// Traditional scenarios are represented by the baseline itself.
pub fn build_comparison_table(scenarios: &[Scenario], baseline: &ComparisonRow) -> Vec<ComparisonRow> {
    let mut rows = vec![baseline.clone()];
    for s in scenarios {
        match &s.architecture {
            Architecture::Traditional => {}
            Architecture::ServicerExtended { annual_cost, extension_years, servicer_launch_mass, .. } => {
                let life = match baseline.life_expectancy {
                    Life::Years(y) => Life::Years(y + extension_years),
                    Life::AtLeast(y) => Life::AtLeast(y + extension_years),
                };
                rows.push(ComparisonRow {
                    label: s.label(),
                    dev_launch_cost: baseline.dev_launch_cost + annual_cost * extension_years,
                    launch_mass: baseline.launch_mass + servicer_launch_mass,
                    life_expectancy: life,
                    ..baseline.clone()
                });
            }
            Architecture::Sspare { n_modules, .. } => {
                let d = mission_delta(s).expect("sspare architecture");
                let (l, w, h) = baseline.main_body_dims;
                rows.push(ComparisonRow {
                    label: s.label(),
                    main_body_dims: (l, w, h + d.added_height),
                    max_power: array_power(*n_modules, &s.module_spec, 0.0),
                    dev_launch_cost: baseline.dev_launch_cost + d.added_cost,
                    launch_mass: baseline.launch_mass + d.added_mass,
                    life_expectancy: Life::AtLeast(s.mission_duration),
                });
            }
        }
    }
    rows
}

pub fn table_markdown(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", header.join(" | "));
    out.push_str(&format!("|{}\n", header.iter().map(|_| "---|").collect::<String>()));
    for r in rows {
        out.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    out
}

pub fn comparison_markdown(rows: &[ComparisonRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(|r| r.cells().to_vec()).collect();
    table_markdown(&TABLE_COLUMNS, &body)
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record(r.cells()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Share of the launcher's volume and mass capacity a payload uses.
pub fn fairing_utilization(
    payload_volume: f64,
    payload_mass: f64,
    fairing_volume: f64,
    mass_to_orbit: f64,
) -> Result<(f64, f64), SizingError> {
    if !(fairing_volume > 0.0 && mass_to_orbit > 0.0) {
        return Err(SizingError::InvalidInput("launcher capacities must be > 0".into()));
    }
    Ok((payload_volume / fairing_volume, payload_mass / mass_to_orbit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Station;
    use proptest::prelude::*;

    fn spec() -> ModuleSpec {
        ModuleSpec::default()
    }

    #[test]
    fn module_power_defaults() {
        assert!((module_power(&spec(), 0.0) - 1500.5025).abs() < 1e-9);
        let unit = ModuleSpec { panel_area: 1.0, irradiance: 1.0, efficiency: 0.999_999_999_999, ..spec() };
        assert!((module_power(&unit, 0.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn module_power_degrades() {
        let s = ModuleSpec { degradation_rate: 0.025, ..spec() };
        // closed form evaluated independently
        let want = 4.41 * 1361.0 * 0.25 * 0.975f64.powi(10);
        assert!((module_power(&s, 10.0) - want).abs() < 1e-9);
        assert!((want - 1164.4).abs() < 0.5);
    }

    #[test]
    fn modules_required_examples() {
        assert_eq!(modules_required(8600.0, &spec()), 6);
        assert_eq!(modules_required(module_power(&spec(), 0.0), &spec()), 1);
        assert_eq!(modules_required(55_500.0, &spec()), 37);
    }

    #[test]
    fn array_power_examples() {
        assert!((array_power(37, &spec(), 0.0) - 55_518.59).abs() < 0.01);
        assert!((array_power(38, &spec(), 0.0) - 57_019.1).abs() < 0.01);
        assert_eq!(array_power(0, &spec(), 0.0), 0.0);
    }

    #[test]
    fn mass_and_cost() {
        assert!((module_mass(&spec()) - 125.0).abs() < 1e-9);
        let two = ModuleSpec { structure_mass: 1.0, battery_mass: 1.0, other_mass: 0.0, ..spec() };
        assert_eq!(module_mass(&two), 2.0);
        let no_overhead = ModuleSpec { other_mass: 0.0, ..spec() };
        assert!((module_mass(&no_overhead) - 121.88).abs() < 1e-9);
        assert_eq!(module_cost(&spec()), 450_000.0);
        assert!((cost_per_cell(&spec()) - 296.296).abs() < 1e-3);
        let free = ModuleSpec { cell_cost_total: 0.0, structure_cost: 0.0, battery_electronics_cost: 0.0, ..spec() };
        assert_eq!(module_cost(&free), 0.0);
    }

    #[test]
    fn reference_stack_holds_37() {
        let n = stack_capacity(&FairingProfile::reference(), 5.56, &spec(), 1.3, 0.2).unwrap();
        assert_eq!(n, 37);
    }

    #[test]
    fn narrow_cylinder_is_no_fit() {
        let f = FairingProfile::cylinder(1.0, 20.0);
        assert!(matches!(stack_capacity(&f, 3.0, &spec(), 1.3, 0.2), Err(SizingError::NoFit { .. })));
    }

    #[test]
    fn cone_oracle() {
        // straight cone r = 3 - h/4: module limit solves 3 - h/4 = c
        let f = FairingProfile::new(vec![
            Station { height: 0.0, radius: 3.0 },
            Station { height: 12.0, radius: 0.0 },
        ])
        .unwrap();
        let c = spec().circumradius();
        let h_mod = (3.0 - c) * 4.0 - 2.0;
        let h_rod = (3.0 - 1.3) * 4.0 - 0.2 - 2.0;
        let want = (h_mod.min(h_rod) / 0.1 + 1e-9).floor() as u32;
        assert_eq!(stack_capacity(&f, 2.0, &spec(), 1.3, 0.2).unwrap(), want);
        // wide rods become the binding limit
        let h_rod = (3.0 - 1.5) * 4.0 - 0.2 - 2.0;
        let want = (h_mod.min(h_rod) / 0.1 + 1e-9).floor() as u32;
        assert_eq!(stack_capacity(&f, 2.0, &spec(), 1.5, 0.2).unwrap(), want);
    }

    #[test]
    fn delta_examples() {
        let d = mission_delta(&Scenario::sspare_default()).unwrap();
        assert!((d.added_cost - 1.9e6).abs() < 1e-6);
        assert!((d.added_mass - 750.0).abs() < 1e-9);
        assert!((d.added_height - 1.0).abs() < 1e-12);

        let mut s = Scenario::sspare_default();
        s.base_module_cost = 0.0;
        s.base_module_mass = 0.0;
        if let Architecture::Sspare { n_spares, .. } = &mut s.architecture {
            *n_spares = 0;
        }
        let d = mission_delta(&s).unwrap();
        assert_eq!((d.added_cost, d.added_mass), (0.0, 0.0));

        if let Architecture::Sspare { n_spares, .. } = &mut s.architecture {
            *n_spares = 6;
        }
        assert!((mission_delta(&s).unwrap().added_mass - 750.0).abs() < 1e-9);
        assert!(mission_delta(&Scenario::traditional()).is_err());
    }

    #[test]
    fn table_rows_match_reference() {
        let rows = build_comparison_table(&Scenario::table_presets(), &ComparisonRow::reference_baseline());
        let cells: Vec<[String; 6]> = rows.iter().map(|r| r.cells()).collect();
        assert_eq!(cells[0][1..], ["2.8/3.5/5.6", "8.6", "400", "4,725", "17"].map(String::from));
        assert_eq!(cells[1][1..], ["2.8/3.5/5.6", "8.6", "465", "7,051", "22"].map(String::from));
        assert_eq!(cells[2][1..], ["2.8/3.5/6.6", "15", "402", "5,475", "30+"].map(String::from));
        assert_eq!(build_comparison_table(&[], &ComparisonRow::reference_baseline()).len(), 1);
    }

    #[test]
    fn utilization() {
        assert_eq!(fairing_utilization(5.0, 7.0, 5.0, 7.0).unwrap(), (1.0, 1.0));
        assert_eq!(fairing_utilization(0.0, 0.0, 5.0, 7.0).unwrap(), (0.0, 0.0));
        assert!(fairing_utilization(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn formatting_helpers() {
        assert_eq!(thousands(7051), "7,051");
        assert_eq!(thousands(1_234_567), "1,234,567");
        assert_eq!(thousands(999), "999");
        assert_eq!(trim_num(15.0055, 1), "15");
        assert_eq!(trim_num(8.6, 1), "8.6");
    }

    proptest! {
        #[test]
        fn power_monotone(area in 0.1..10.0f64, irr in 100.0..2000.0f64, eff in 0.01..0.99f64,
                          deg in 0.0..0.2f64, age in 0.0..30.0f64, bump in 0.0..1.0f64) {
            let s = ModuleSpec { panel_area: area, irradiance: irr, efficiency: eff, degradation_rate: deg, ..spec() };
            let p = module_power(&s, age);
            let a = ModuleSpec { panel_area: area + bump, ..s.clone() };
            let i = ModuleSpec { irradiance: irr + bump, ..s.clone() };
            let e = ModuleSpec { efficiency: (eff + bump).min(0.999), ..s.clone() };
            prop_assert!(module_power(&a, age) >= p);
            prop_assert!(module_power(&i, age) >= p);
            prop_assert!(module_power(&e, age) >= p);
            prop_assert!(module_power(&s, age + bump) <= p);
        }

        #[test]
        fn required_inverts_array_power(n in 1u32..500, area in 0.1..10.0f64, eff in 0.01..0.99f64) {
            let s = ModuleSpec { panel_area: area, efficiency: eff, ..spec() };
            prop_assert_eq!(modules_required(array_power(n, &s, 0.0), &s), n);
        }

        #[test]
        fn capacity_monotone(h in 0.0..9.0f64, dh in 0.0..2.0f64, edge in 1.0..3.0f64, de in 0.0..0.5f64) {
            let f = FairingProfile::reference();
            let s = ModuleSpec { edge_length: edge, ..spec() };
            let cap = |h: f64, s: &ModuleSpec| stack_capacity(&f, h, s, 1.3, 0.2).unwrap_or(0);
            prop_assert!(cap(h + dh, &s) <= cap(h, &s));
            let wider = ModuleSpec { edge_length: edge + de, ..s.clone() };
            prop_assert!(cap(h, &wider) <= cap(h, &s));
        }
    }
}
