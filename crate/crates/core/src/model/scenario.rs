//! Mission scenarios and their TOML form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FairingProfile, HazardModel, ModelError, ModuleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resupply {
    /// Mission year at which the modules arrive.
    pub year: f64,
    pub count: u32,
}

fn default_servicer_mass() -> f64 {
    2326.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    Traditional,
    ServicerExtended {
        /// $ per year of servicing.
        annual_cost: f64,
        extension_years: f64,
        /// Mission year at which the servicer docks.
        #[serde(default)]
        servicing_epoch: f64,
        /// kg added to the launch mass column.
        #[serde(default = "default_servicer_mass")]
        servicer_launch_mass: f64,
    },
    Sspare {
        n_modules: u32,
        n_spares: u32,
        #[serde(default)]
        resupply_schedule: Vec<Resupply>,
        #[serde(default)]
        unloader_cost: f64,
        #[serde(default)]
        unloader_mass: f64,
    },
}

impl Architecture {
    pub fn label(&self) -> &'static str {
        match self {
            Architecture::Traditional => "Traditional",
            Architecture::ServicerExtended { .. } => "Servicer-extended",
            Architecture::Sspare { .. } => "SSPARE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteDims {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for SatelliteDims {
    fn default() -> Self {
        Self { length: 2.8, width: 3.5, height: 5.56 }
    }
}

/// Operational timing and probabilities used by the mission simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Operations {
    /// s, for every unloader phase except the instantaneous spiral turn.
    pub unload_phase_duration_s: f64,
    /// s per planner move.
    pub move_duration_s: f64,
    /// m of rod travel above the stack top.
    pub connector_overtravel: f64,
    /// Share of module failures that go open-circuit (silent) rather than
    /// shorted (still reporting).
    pub open_failure_probability: f64,
    pub heartbeat_drop_probability: f64,
    /// Share of distribution failures charged to a base module instead of
    /// the module the fault maps to.
    pub distribution_to_base_fraction: f64,
    pub battery_temp_min_k: f64,
    pub battery_temp_max_k: f64,
}

impl Default for Operations {
    fn default() -> Self {
        Self {
            unload_phase_duration_s: 60.0,
            move_duration_s: 300.0,
            connector_overtravel: 0.2,
            open_failure_probability: 0.5,
            heartbeat_drop_probability: 0.0,
            distribution_to_base_fraction: 0.0,
            battery_temp_min_k: 273.0,
            battery_temp_max_k: 313.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaunchConfig {
    pub fairing: FairingProfile,
    /// m, lateral reach of each unloading rod from the stack axis.
    pub rod_half_span: f64,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        Self { fairing: FairingProfile::reference(), rod_half_span: 1.3 }
    }
}

fn d_demand() -> f64 {
    8600.0
}
fn d_duration() -> f64 {
    30.0
}
fn d_tau() -> f64 {
    10.0
}
fn d_m() -> u32 {
    3
}
fn d_base_mass() -> f64 {
    125.0
}
fn d_base_cost() -> f64 {
    50_000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub architecture: Architecture,
    /// W
    #[serde(default = "d_demand")]
    pub bus_demand: f64,
    /// years; also the simulation horizon.
    #[serde(default = "d_duration")]
    pub mission_duration: f64,
    /// s
    #[serde(default = "d_tau")]
    pub heartbeat_interval: f64,
    #[serde(default = "d_m")]
    pub miss_threshold: u32,
    #[serde(default)]
    pub module_spec: ModuleSpec,
    #[serde(default)]
    pub hazard: HazardModel,
    #[serde(default)]
    pub satellite_dims: SatelliteDims,
    #[serde(default = "d_base_mass")]
    pub base_module_mass: f64,
    #[serde(default = "d_base_cost")]
    pub base_module_cost: f64,
    #[serde(default)]
    pub operations: Operations,
    #[serde(default)]
    pub launch: LaunchConfig,
}

impl Scenario {
    pub fn new(architecture: Architecture) -> Self {
        Self {
            name: None,
            architecture,
            bus_demand: d_demand(),
            mission_duration: d_duration(),
            heartbeat_interval: d_tau(),
            miss_threshold: d_m(),
            module_spec: ModuleSpec::default(),
            hazard: HazardModel::default(),
            satellite_dims: SatelliteDims::default(),
            base_module_mass: d_base_mass(),
            base_module_cost: d_base_cost(),
            operations: Operations::default(),
            launch: LaunchConfig::default(),
        }
    }

    fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    /// Conventional GEO satellite with a fixed array.
    pub fn traditional() -> Self {
        Self::new(Architecture::Traditional).named("Traditional")
    }

    /// Traditional satellite life-extended by a docking servicer: $13M a
    /// year for 5 years.
    pub fn servicer_extended() -> Self {
        Self::new(Architecture::ServicerExtended {
            annual_cost: 13_000_000.0,
            extension_years: 5.0,
            servicing_epoch: 0.0,
            servicer_launch_mass: default_servicer_mass(),
        })
        .named("MEV")
    }

    /// Ten deployed modules, four of them carried as spares.
    pub fn sspare_default() -> Self {
        Self::new(Architecture::Sspare {
            n_modules: 10,
            n_spares: 4,
            resupply_schedule: Vec::new(),
            unloader_cost: 0.0,
            unloader_mass: 0.0,
        })
        .named("SSPARE")
    }

    /// The three configurations of the reference comparison table.
    pub fn table_presets() -> Vec<Scenario> {
        vec![Self::traditional(), Self::servicer_extended(), Self::sspare_default()]
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.architecture.label().to_string())
    }

    /// Modules stacked at launch, spares included.
    pub fn stack_count(&self) -> u32 {
        match self.architecture {
            Architecture::Sspare { n_modules, .. } => n_modules,
            _ => 0,
        }
    }

    /// Modules assembled into the array at the start of the mission; the
    /// rest of the stack stays stowed as spares.
    pub fn deployed_count(&self) -> u32 {
        match self.architecture {
            Architecture::Sspare { n_modules, n_spares, .. } => n_modules - n_spares,
            _ => 0,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ModelError> {
        let sc: Scenario = toml::from_str(s).map_err(|e| ModelError::Parse(e.to_string()))?;
        sc.validate()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ModelError::Parse(msg) => ModelError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(self) -> Result<Self, ModelError> {
        let mut errs = Vec::new();
        self.collect_errors(&mut errs);
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(ModelError::InvalidScenario(errs))
        }
    }

    fn collect_errors(&self, errs: &mut Vec<String>) {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        let unit = |v: f64| (0.0..=1.0).contains(&v);

        if !pos(self.bus_demand) {
            errs.push(format!("bus_demand must be > 0 (got {})", self.bus_demand));
        }
        if !pos(self.mission_duration) {
            errs.push(format!("mission_duration must be > 0 (got {})", self.mission_duration));
        }
        if !pos(self.heartbeat_interval) {
            errs.push(format!("heartbeat_interval must be > 0 (got {})", self.heartbeat_interval));
        }
        if self.miss_threshold < 1 {
            errs.push("miss_threshold must be >= 1".into());
        }
        if !nonneg(self.base_module_mass) {
            errs.push(format!("base_module_mass must be >= 0 (got {})", self.base_module_mass));
        }
        if !nonneg(self.base_module_cost) {
            errs.push(format!("base_module_cost must be >= 0 (got {})", self.base_module_cost));
        }
        let d = &self.satellite_dims;
        for (n, v) in [("length", d.length), ("width", d.width), ("height", d.height)] {
            if !pos(v) {
                errs.push(format!("satellite_dims.{n} must be > 0 (got {v})"));
            }
        }
        self.module_spec.collect_errors(errs);
        self.hazard.collect_errors(errs);

        let o = &self.operations;
        for (n, v) in [
            ("unload_phase_duration_s", o.unload_phase_duration_s),
            ("move_duration_s", o.move_duration_s),
            ("connector_overtravel", o.connector_overtravel),
        ] {
            if !nonneg(v) {
                errs.push(format!("operations.{n} must be >= 0 (got {v})"));
            }
        }
        for (n, v) in [
            ("open_failure_probability", o.open_failure_probability),
            ("heartbeat_drop_probability", o.heartbeat_drop_probability),
            ("distribution_to_base_fraction", o.distribution_to_base_fraction),
        ] {
            if !unit(v) {
                errs.push(format!("operations.{n} must be in [0, 1] (got {v})"));
            }
        }
        if !(o.battery_temp_min_k < o.battery_temp_max_k) {
            errs.push(format!(
                "operations.battery_temp_min_k ({}) must be below battery_temp_max_k ({})",
                o.battery_temp_min_k, o.battery_temp_max_k
            ));
        }
        self.launch.fairing.collect_errors(errs);
        if !pos(self.launch.rod_half_span) {
            errs.push(format!("launch.rod_half_span must be > 0 (got {})", self.launch.rod_half_span));
        }

        match &self.architecture {
            Architecture::Traditional => {}
            Architecture::ServicerExtended {
                annual_cost,
                extension_years,
                servicing_epoch,
                servicer_launch_mass,
            } => {
                for (n, v) in [
                    ("annual_cost", *annual_cost),
                    ("extension_years", *extension_years),
                    ("servicing_epoch", *servicing_epoch),
                    ("servicer_launch_mass", *servicer_launch_mass),
                ] {
                    if !nonneg(v) {
                        errs.push(format!("architecture.{n} must be >= 0 (got {v})"));
                    }
                }
            }
            Architecture::Sspare { n_modules, n_spares, resupply_schedule, unloader_cost, unloader_mass } => {
                if *n_modules == 0 {
                    errs.push("architecture.n_modules must be >= 1".into());
                }
                if n_spares > n_modules {
                    errs.push(format!(
                        "architecture.n_spares ({n_spares}) must not exceed n_modules ({n_modules})"
                    ));
                }
                for (n, v) in [("unloader_cost", *unloader_cost), ("unloader_mass", *unloader_mass)] {
                    if !nonneg(v) {
                        errs.push(format!("architecture.{n} must be >= 0 (got {v})"));
                    }
                }
                for (i, r) in resupply_schedule.iter().enumerate() {
                    if !nonneg(r.year) {
                        errs.push(format!("architecture.resupply_schedule[{i}].year must be >= 0 (got {})", r.year));
                    }
                }
            }
        }
    }
}

/// Free-function form of [`Scenario::validate`].
pub fn validate_scenario(s: Scenario) -> Result<Scenario, ModelError> {
    s.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn presets_are_valid() {
        for s in Scenario::table_presets() {
            s.validate().unwrap();
        }
    }

    #[test]
    fn too_many_spares_rejected() {
        let mut s = Scenario::sspare_default();
        if let Architecture::Sspare { n_spares, .. } = &mut s.architecture {
            *n_spares = 11;
        }
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("n_spares"), "{err}");
    }

    #[test]
    fn zero_efficiency_rejected() {
        let mut s = Scenario::sspare_default();
        s.module_spec.efficiency = 0.0;
        assert!(matches!(s.validate(), Err(ModelError::InvalidScenario(_))));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut s = Scenario::traditional();
        s.bus_demand = 0.0;
        s.mission_duration = -1.0;
        match s.validate() {
            Err(ModelError::InvalidScenario(v)) => assert_eq!(v.len(), 2, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimal_toml_fills_defaults() {
        let s = Scenario::from_toml_str(
            "[architecture]\nkind = \"sspare\"\nn_modules = 10\nn_spares = 4\n",
        )
        .unwrap();
        assert_eq!(s.bus_demand, 8600.0);
        assert_eq!(s.stack_count(), 10);
        assert_eq!(s.deployed_count(), 6);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Scenario::from_toml_str("bus_demnd = 5\n[architecture]\nkind = \"traditional\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bus_demnd"), "{err}");
    }

    fn arb_arch() -> impl Strategy<Value = Architecture> {
        prop_oneof![
            Just(Architecture::Traditional),
            (0.0..1e8f64, 0.0..20.0f64, 0.0..30.0f64, 0.0..5000.0f64).prop_map(|(a, e, s, m)| {
                Architecture::ServicerExtended {
                    annual_cost: a,
                    extension_years: e,
                    servicing_epoch: s,
                    servicer_launch_mass: m,
                }
            }),
            (1u32..40, prop::collection::vec((0.0..40.0f64, 0u32..5), 0..4)).prop_flat_map(|(n, rs)| {
                (0..=n).prop_map(move |sp| Architecture::Sspare {
                    n_modules: n,
                    n_spares: sp,
                    resupply_schedule: rs.iter().map(|&(year, count)| Resupply { year, count }).collect(),
                    unloader_cost: 0.0,
                    unloader_mass: 0.0,
                })
            }),
        ]
    }

    proptest! {
        #[test]
        fn toml_round_trip(
            arch in arb_arch(),
            demand in 1.0..1e5f64,
            dur in 0.1..50.0f64,
            tau in 0.1..100.0f64,
            m in 1u32..10,
            eff in 0.01..0.99f64,
            shape in 0.3..5.0f64,
            open_p in 0.0..=1.0f64,
        ) {
            let mut s = Scenario::new(arch);
            s.bus_demand = demand;
            s.mission_duration = dur;
            s.heartbeat_interval = tau;
            s.miss_threshold = m;
            s.module_spec.efficiency = eff;
            s.hazard.aocs.shape = shape;
            s.operations.open_failure_probability = open_p;
            let s = s.validate().unwrap();
            let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
