//! Shared domain types. Every other module depends only on these.

mod hazard;
mod lattice;
mod scenario;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hazard::{
    HazardModel, PowerMode, PowerModeWeights, Subsystem, SubsystemHazard, Weibull,
    GEO_TO_LEO_POWER_RATIO,
};
pub use lattice::{Bounds, Cell, Lattice, Side};
pub use scenario::{
    validate_scenario, Architecture, LaunchConfig, Operations, Resupply, SatelliteDims, Scenario,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModuleId(pub u32);

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Physical, electrical and cost parameters of one solar power module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModuleSpec {
    /// m
    pub edge_length: f64,
    /// m
    pub thickness: f64,
    /// Vertical space one module takes in the launch stack, m.
    pub stack_pitch: f64,
    /// Active cell area, m^2. Kept independent of `edge_length`.
    pub panel_area: f64,
    pub efficiency: f64,
    /// W/m^2
    pub irradiance: f64,
    /// Fractional output loss per year.
    pub degradation_rate: f64,
    /// kg
    pub structure_mass: f64,
    pub battery_mass: f64,
    pub other_mass: f64,
    pub cell_count: u32,
    /// $
    pub cell_cost_total: f64,
    pub structure_cost: f64,
    pub battery_electronics_cost: f64,
    /// Wh. Placeholder, not used by any calculation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub battery_capacity: Option<f64>,
}

impl Default for ModuleSpec {
    fn default() -> Self {
        Self {
            edge_length: 2.2,
            thickness: 0.09,
            stack_pitch: 0.1,
            panel_area: 4.41,
            efficiency: 0.25,
            irradiance: 1361.0,
            degradation_rate: 0.0,
            structure_mass: 108.58,
            battery_mass: 13.3,
            // closes structure + battery + other at 125 kg
            other_mass: 3.12,
            cell_count: 1350,
            cell_cost_total: 400_000.0,
            structure_cost: 40_000.0,
            battery_electronics_cost: 10_000.0,
            battery_capacity: None,
        }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

fn nonneg(v: f64) -> bool {
    v >= 0.0 && v.is_finite()
}

impl ModuleSpec {
    pub(crate) fn collect_errors(&self, errs: &mut Vec<String>) {
        for (name, v) in [
            ("edge_length", self.edge_length),
            ("thickness", self.thickness),
            ("stack_pitch", self.stack_pitch),
            ("panel_area", self.panel_area),
            ("irradiance", self.irradiance),
        ] {
            if !positive(v) {
                errs.push(format!("module_spec.{name} must be > 0 (got {v})"));
            }
        }
        for (name, v) in [
            ("structure_mass", self.structure_mass),
            ("battery_mass", self.battery_mass),
            ("other_mass", self.other_mass),
            ("cell_cost_total", self.cell_cost_total),
            ("structure_cost", self.structure_cost),
            ("battery_electronics_cost", self.battery_electronics_cost),
        ] {
            if !nonneg(v) {
                errs.push(format!("module_spec.{name} must be >= 0 (got {v})"));
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency < 1.0) {
            errs.push(format!("module_spec.efficiency must be in (0, 1) (got {})", self.efficiency));
        }
        if !(self.degradation_rate >= 0.0 && self.degradation_rate < 1.0) {
            errs.push(format!(
                "module_spec.degradation_rate must be in [0, 1) (got {})",
                self.degradation_rate
            ));
        }
        if self.stack_pitch < self.thickness {
            errs.push(format!(
                "module_spec.stack_pitch ({}) must be >= thickness ({})",
                self.stack_pitch, self.thickness
            ));
        }
        if self.cell_count == 0 {
            errs.push("module_spec.cell_count must be >= 1".into());
        }
        if let Some(c) = self.battery_capacity {
            if !positive(c) {
                errs.push(format!("module_spec.battery_capacity must be > 0 (got {c})"));
            }
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut errs = Vec::new();
        self.collect_errors(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidScenario(errs))
        }
    }

    /// Half the module diagonal: the radius a square module needs in a
    /// round fairing.
    pub fn circumradius(&self) -> f64 {
        self.edge_length * std::f64::consts::SQRT_2 / 2.0
    }
}

/// How a failed module was diagnosed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    NonResponsive,
    ArrayDamage,
    BatteryDamage,
}

impl fmt::Display for FailureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureMode::NonResponsive => "non_responsive",
            FailureMode::ArrayDamage => "array_damage",
            FailureMode::BatteryDamage => "battery_damage",
        })
    }
}

/// Lifecycle of one module. `Bypassed` is only entered from `Failed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModuleState {
    Stowed(usize),
    InTransit,
    Deployed(Cell),
    Failed(Cell, FailureMode),
    Bypassed(Cell),
}

impl ModuleState {
    pub fn cell(&self) -> Option<Cell> {
        match *self {
            ModuleState::Deployed(c) | ModuleState::Failed(c, _) | ModuleState::Bypassed(c) => Some(c),
            _ => None,
        }
    }

    /// Only legal transition into `Bypassed`.
    pub fn bypass(self) -> Result<ModuleState, ModelError> {
        match self {
            ModuleState::Failed(c, _) => Ok(ModuleState::Bypassed(c)),
            other => Err(ModelError::InvalidLattice(format!("cannot bypass a module in state {other:?}"))),
        }
    }
}

/// One station of a fairing radius profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    /// Height above the payload adapter, m.
    pub height: f64,
    /// Usable radius, m.
    pub radius: f64,
}

/// Piecewise-linear usable radius of a fairing. Above the last station the
/// radius is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairingProfile {
    pub stations: Vec<Station>,
}

impl FairingProfile {
    pub fn new(stations: Vec<Station>) -> Result<Self, ModelError> {
        let p = Self { stations };
        p.validate()?;
        Ok(p)
    }

    pub fn cylinder(radius: f64, height: f64) -> Self {
        Self {
            stations: vec![Station { height: 0.0, radius }, Station { height, radius }],
        }
    }

    /// Reference medium-lift fairing envelope.
    ///
    /// Implementer-calibrated asset: a 2.3 m radius cylinder up to 5.58 m
    /// followed by a 6.3 m tangent ogive sampled every 0.5 m. The cylinder
    /// length was solved so that a 5.56 m tall bus leaves 3.75 m of clear
    /// stack height for 2.2 m modules with 1.3 m rods, i.e. 37 modules at a
    /// 0.1 m pitch. It is not a published envelope.
    pub fn reference() -> Self {
        const ST: [(f64, f64); 15] = [
            (0.0, 2.3),
            (5.58, 2.3),
            (6.08, 2.287),
            (6.58, 2.249),
            (7.08, 2.184),
            (7.58, 2.093),
            (8.08, 1.975),
            (8.58, 1.828),
            (9.08, 1.652),
            (9.58, 1.444),
            (10.08, 1.203),
            (10.58, 0.925),
            (11.08, 0.607),
            (11.58, 0.243),
            (11.88, 0.0),
        ];
        Self { stations: ST.iter().map(|&(height, radius)| Station { height, radius }).collect() }
    }

    pub fn apex(&self) -> f64 {
        self.stations.last().map_or(0.0, |s| s.height)
    }

    pub fn radius_at(&self, h: f64) -> f64 {
        let st = &self.stations;
        if st.is_empty() || h < st[0].height || h > self.apex() {
            return 0.0;
        }
        for w in st.windows(2) {
            let (a, b) = (w[0], w[1]);
            if h <= b.height {
                let f = (h - a.height) / (b.height - a.height);
                return a.radius + f * (b.radius - a.radius);
            }
        }
        st[st.len() - 1].radius
    }

    pub(crate) fn collect_errors(&self, errs: &mut Vec<String>) {
        if self.stations.len() < 2 {
            errs.push("fairing profile needs at least two stations".into());
        }
        for w in self.stations.windows(2) {
            if !(w[1].height > w[0].height) {
                errs.push(format!(
                    "fairing station heights must strictly increase ({} then {})",
                    w[0].height, w[1].height
                ));
            }
        }
        let n = self.stations.len();
        for (i, s) in self.stations.iter().enumerate() {
            // the closing station may pinch to zero
            let ok = if i + 1 == n { nonneg(s.radius) } else { positive(s.radius) };
            if !ok {
                errs.push(format!("fairing radius at height {} must be positive", s.height));
            }
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut errs = Vec::new();
        self.collect_errors(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidScenario(errs))
        }
    }
}

impl Default for FairingProfile {
    fn default() -> Self {
        Self::reference()
    }
}
