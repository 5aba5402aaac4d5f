//! Per-subsystem failure-time distributions.
//!
//! The shipped presets are calibrated assets. Shapes and scales are chosen
//! by the maintainers so that, under independent competing risks, the power
//! subsystem accounts for 44% of failures occurring after year 10 and the
//! system hazard rises with age; they are not measured values.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weibull {
    pub shape: f64,
    pub scale: f64,
}

impl Weibull {
    pub const fn new(shape: f64, scale: f64) -> Self {
        Self { shape, scale }
    }

    pub fn exponential(mean: f64) -> Self {
        Self::new(1.0, mean)
    }

    fn check(&self, what: &str, errs: &mut Vec<String>) {
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            errs.push(format!("{what}.shape must be > 0 (got {})", self.shape));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            errs.push(format!("{what}.scale must be > 0 (got {})", self.scale));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    Power,
    Aocs,
    Ttc,
    Mechanisms,
    Other,
}

impl Subsystem {
    pub const ALL: [Subsystem; 5] =
        [Subsystem::Power, Subsystem::Aocs, Subsystem::Ttc, Subsystem::Mechanisms, Subsystem::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Subsystem::Power => "power",
            Subsystem::Aocs => "aocs",
            Subsystem::Ttc => "ttc",
            Subsystem::Mechanisms => "mechanisms",
            Subsystem::Other => "other",
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Failure mode within the power subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    SolarArrayOperation,
    PowerDistribution,
    Battery,
}

impl PowerMode {
    pub const ALL: [PowerMode; 3] =
        [PowerMode::SolarArrayOperation, PowerMode::PowerDistribution, PowerMode::Battery];

    pub fn as_str(self) -> &'static str {
        match self {
            PowerMode::SolarArrayOperation => "sao",
            PowerMode::PowerDistribution => "distribution",
            PowerMode::Battery => "battery",
        }
    }
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn yes() -> bool {
    true
}

/// Wear-out law for one subsystem, plus an optional early-life component
/// whose failure time competes with the main one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemHazard {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub shape: f64,
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infant: Option<Weibull>,
}

impl SubsystemHazard {
    pub const fn new(shape: f64, scale: f64) -> Self {
        Self { enabled: true, shape, scale, infant: None }
    }

    pub const fn disabled(self) -> Self {
        Self { enabled: false, ..self }
    }

    pub fn weibull(&self) -> Weibull {
        Weibull::new(self.shape, self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerModeWeights {
    pub solar_array_operation: f64,
    pub power_distribution: f64,
    pub battery: f64,
}

impl PowerModeWeights {
    pub fn weight(&self, mode: PowerMode) -> f64 {
        match mode {
            PowerMode::SolarArrayOperation => self.solar_array_operation,
            PowerMode::PowerDistribution => self.power_distribution,
            PowerMode::Battery => self.battery,
        }
    }
}

impl Default for PowerModeWeights {
    /// GEO mix: solar array operation dominant at 0.69, then distribution,
    /// then battery.
    fn default() -> Self {
        Self { solar_array_operation: 0.69, power_distribution: 0.18, battery: 0.13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardModel {
    pub power: SubsystemHazard,
    pub aocs: SubsystemHazard,
    pub ttc: SubsystemHazard,
    pub mechanisms: SubsystemHazard,
    pub other: SubsystemHazard,
    #[serde(default)]
    pub power_modes: PowerModeWeights,
}

/// Ratio of cumulative power-failure hazard between the GEO and LEO presets.
pub const GEO_TO_LEO_POWER_RATIO: f64 = 8.0;

/// Subsystem shares of failures in the first 30 days, used to scale the
/// optional infant-mortality component. The remainder goes to `other`.
const INFANT_SHARES: [(Subsystem, f64); 5] = [
    (Subsystem::Power, 0.315),
    (Subsystem::Aocs, 0.317),
    (Subsystem::Ttc, 0.16),
    (Subsystem::Mechanisms, 0.155),
    (Subsystem::Other, 0.053),
];
const INFANT_SHAPE: f64 = 0.5;
/// Probability that some subsystem fails within 30 days when the
/// infant-mortality component is switched on.
const INFANT_30_DAY_PROBABILITY: f64 = 0.02;

impl Default for HazardModel {
    fn default() -> Self {
        Self::geo_default()
    }
}

impl HazardModel {
    /// Calibrated GEO preset (power scale solved by quadrature for a 0.44
    /// power share among failures after year 10).
    pub fn geo_default() -> Self {
        Self {
            power: SubsystemHazard::new(3.0, 37.77),
            aocs: SubsystemHazard::new(1.3, 60.0),
            ttc: SubsystemHazard::new(1.1, 120.0),
            mechanisms: SubsystemHazard::new(1.6, 90.0),
            other: SubsystemHazard::new(1.0, 150.0),
            power_modes: PowerModeWeights::default(),
        }
    }

    /// LEO preset: same non-power subsystems, power cumulative hazard lower
    /// by [`GEO_TO_LEO_POWER_RATIO`], power modes evenly split.
    pub fn leo_default() -> Self {
        let geo = Self::geo_default();
        let p = geo.power;
        let scale = p.scale * GEO_TO_LEO_POWER_RATIO.powf(1.0 / p.shape);
        Self {
            power: SubsystemHazard::new(p.shape, scale),
            power_modes: PowerModeWeights {
                solar_array_operation: 1.0 / 3.0,
                power_distribution: 1.0 / 3.0,
                battery: 1.0 / 3.0,
            },
            ..geo
        }
    }

    /// Every subsystem switched off.
    pub fn none() -> Self {
        let mut h = Self::geo_default();
        for s in Subsystem::ALL {
            h.subsystem_mut(s).enabled = false;
        }
        h
    }

    /// Only `subsystem` enabled, with the given law.
    pub fn only(subsystem: Subsystem, law: Weibull) -> Self {
        let mut h = Self::none();
        *h.subsystem_mut(subsystem) = SubsystemHazard::new(law.shape, law.scale);
        h
    }

    /// Adds the early-life component (shape 0.5) scaled so the 30-day
    /// failure shares follow the launch-phase statistics.
    pub fn with_infant_mortality(mut self) -> Self {
        let window = 30.0 / 365.25_f64;
        let k = INFANT_30_DAY_PROBABILITY / window.sqrt();
        for (s, share) in INFANT_SHARES {
            let scale = 1.0 / (k * share).powi(2);
            self.subsystem_mut(s).infant = Some(Weibull::new(INFANT_SHAPE, scale));
        }
        self
    }

    pub fn subsystem(&self, s: Subsystem) -> &SubsystemHazard {
        match s {
            Subsystem::Power => &self.power,
            Subsystem::Aocs => &self.aocs,
            Subsystem::Ttc => &self.ttc,
            Subsystem::Mechanisms => &self.mechanisms,
            Subsystem::Other => &self.other,
        }
    }

    pub fn subsystem_mut(&mut self, s: Subsystem) -> &mut SubsystemHazard {
        match s {
            Subsystem::Power => &mut self.power,
            Subsystem::Aocs => &mut self.aocs,
            Subsystem::Ttc => &mut self.ttc,
            Subsystem::Mechanisms => &mut self.mechanisms,
            Subsystem::Other => &mut self.other,
        }
    }

    pub fn enabled(&self) -> impl Iterator<Item = (Subsystem, &SubsystemHazard)> + '_ {
        Subsystem::ALL.into_iter().map(|s| (s, self.subsystem(s))).filter(|(_, h)| h.enabled)
    }

    pub(crate) fn collect_errors(&self, errs: &mut Vec<String>) {
        for s in Subsystem::ALL {
            let h = self.subsystem(s);
            h.weibull().check(&format!("hazard.{s}"), errs);
            if let Some(inf) = h.infant {
                inf.check(&format!("hazard.{s}.infant"), errs);
            }
        }
        let w = &self.power_modes;
        let ws = [w.solar_array_operation, w.power_distribution, w.battery];
        if ws.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            errs.push("hazard.power_modes weights must be nonnegative".into());
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            errs.push(format!("hazard.power_modes weights must sum to 1 (got {sum})"));
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        HazardModel::geo_default().validate().unwrap();
        HazardModel::leo_default().validate().unwrap();
        HazardModel::geo_default().with_infant_mortality().validate().unwrap();
    }

    #[test]
    fn leo_power_hazard_is_eight_times_lower() {
        let geo = HazardModel::geo_default().power;
        let leo = HazardModel::leo_default().power;
        let t: f64 = 12.0;
        let ratio = (t / geo.scale).powf(geo.shape) / (t / leo.scale).powf(leo.shape);
        assert!((ratio - 8.0).abs() < 1e-9);
    }

    #[test]
    fn bad_weights_rejected() {
        let mut h = HazardModel::geo_default();
        h.power_modes.battery = 0.5;
        assert!(h.validate().is_err());
        let mut h = HazardModel::geo_default();
        h.aocs.scale = 0.0;
        assert!(h.validate().is_err());
    }
}
