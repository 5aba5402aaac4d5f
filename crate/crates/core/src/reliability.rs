//! Weibull failure-time sampling, competing-risk subsystem draws and
//! closed-form survival curves.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HazardModel, PowerMode, PowerModeWeights, Subsystem, SubsystemHazard, Weibull};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReliabilityError {
    #[error("u = {0} is outside (0, 1)")]
    DomainError(f64),
}

/// Inverse-CDF Weibull draw, years.
pub fn sample_failure_time(shape: f64, scale: f64, u: f64) -> Result<f64, ReliabilityError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(ReliabilityError::DomainError(u));
    }
    Ok(scale * (-u.ln()).powf(1.0 / shape))
}

pub fn survival(shape: f64, scale: f64, t: f64) -> f64 {
    (-(t / scale).powf(shape)).exp()
}

/// Instantaneous failure rate, per year.
pub fn hazard_rate(shape: f64, scale: f64, t: f64) -> f64 {
    shape / scale * (t / scale).powf(shape - 1.0)
}

/// Cumulative hazard (t / scale)^shape.
pub fn cumulative_hazard(shape: f64, scale: f64, t: f64) -> f64 {
    (t / scale).powf(shape)
}

fn uniform<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

pub fn draw_weibull<R: Rng>(w: Weibull, rng: &mut R) -> f64 {
    sample_failure_time(w.shape, w.scale, uniform(rng)).expect("Open01 lies in (0, 1)")
}

/// Failure time of one subsystem: the earlier of its wear-out and early-life
/// components.
pub fn draw_subsystem_time<R: Rng>(h: &SubsystemHazard, rng: &mut R) -> f64 {
    let main = draw_weibull(h.weibull(), rng);
    match h.infant {
        Some(w) => main.min(draw_weibull(w, rng)),
        None => main,
    }
}

pub fn draw_power_mode<R: Rng>(w: &PowerModeWeights, rng: &mut R) -> PowerMode {
    let u: f64 = rng.gen::<f64>() * (w.solar_array_operation + w.power_distribution + w.battery);
    if u < w.solar_array_operation {
        PowerMode::SolarArrayOperation
    } else if u < w.solar_array_operation + w.power_distribution {
        PowerMode::PowerDistribution
    } else {
        PowerMode::Battery
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureDraw {
    /// years
    pub time: f64,
    pub subsystem: Subsystem,
    /// Set only for power failures.
    pub mode: Option<PowerMode>,
}

/// Competing-risks draw over the enabled subsystems. `None` when every
/// subsystem is disabled.
pub fn draw_subsystem_failure<R: Rng>(h: &HazardModel, rng: &mut R) -> Option<FailureDraw> {
    let mut best: Option<(f64, Subsystem)> = None;
    for (s, sh) in h.enabled() {
        let t = draw_subsystem_time(sh, rng);
        if best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, s));
        }
    }
    let (time, subsystem) = best?;
    let mode = (subsystem == Subsystem::Power).then(|| draw_power_mode(&h.power_modes, rng));
    Some(FailureDraw { time, subsystem, mode })
}

pub fn subsystem_survival(h: &SubsystemHazard, t: f64) -> f64 {
    let main = survival(h.shape, h.scale, t);
    match h.infant {
        Some(w) => main * survival(w.shape, w.scale, t),
        None => main,
    }
}

pub fn subsystem_hazard(h: &SubsystemHazard, t: f64) -> f64 {
    let main = hazard_rate(h.shape, h.scale, t);
    match h.infant {
        Some(w) => main + hazard_rate(w.shape, w.scale, t),
        None => main,
    }
}

/// Survival of the whole satellite: every enabled subsystem still working.
pub fn system_survival(h: &HazardModel, t: f64) -> f64 {
    h.enabled().map(|(_, sh)| subsystem_survival(sh, t)).product()
}

pub fn system_hazard(h: &HazardModel, t: f64) -> f64 {
    h.enabled().map(|(_, sh)| subsystem_hazard(sh, t)).sum()
}

/// `resolution + 1` evenly spaced (t, survival) points over [0, horizon].
pub fn reliability_curve(h: &HazardModel, horizon: f64, resolution: usize) -> Vec<(f64, f64)> {
    let n = resolution.max(1);
    (0..=n)
        .map(|i| {
            let t = horizon * i as f64 / n as f64;
            (t, system_survival(h, t))
        })
        .collect()
}

pub fn curve_csv(points: &[(f64, f64)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "survival"]).expect("in-memory write");
    for (t, s) in points {
        w.write_record([t.to_string(), s.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Purposes that get their own random stream inside a replica, so that
/// changing one part of the model never shifts another part's draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    NonPower = 1,
    PowerFailures = 2,
    ModuleChoice = 3,
    ElectricalMode = 4,
    Telemetry = 5,
    Other = 6,
}

/// Independent generator for (`seed`, `replica`, `purpose`).
pub fn rng_stream(seed: u64, replica: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica.wrapping_mul(16).wrapping_add(purpose as u64));
    rng
}
