//! Satellite uplink passes: one photon stays on the ground, the other goes to
//! a LEO satellite whose channel loss and background change along the pass.
//!
//! Variable mode re-optimizes the squeezing for every sample; fixed mode picks
//! the single squeezing that maximizes the key integrated over the pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::LinkParams;
use crate::error::{check_nonneg, check_unit, invalid, Error, Result};
use crate::fockstate::{SqueezingParam, DEFAULT_TRUNC};
use crate::keyrate::{usable, MetricsConfig, PreparedState};
use crate::optimizer::{maximize_scalar, optimal_epsilon, SearchOptions};

use super::db_to_transmission;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassSample {
    pub t_s: f64,
    /// Channel loss to the satellite, dB.
    pub loss_db: f64,
    /// Background counts per second at the satellite receiver.
    pub background_cps: f64,
}

/// Detector with its dark count *rate*; converted to a per-window
/// probability with the pass window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingDetector {
    pub efficiency: f64,
    pub dark_cps: f64,
}

impl CountingDetector {
    /// 50% quantum efficiency, 100 dark counts per second.
    pub const SATELLITE_DEFAULT: Self = CountingDetector {
        efficiency: 0.5,
        dark_cps: 100.0,
    };
}

/// Local parameters of the arm measured on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundArm {
    pub channel_efficiency: f64,
    pub detector: CountingDetector,
}

impl Default for GroundArm {
    fn default() -> Self {
        GroundArm {
            channel_efficiency: 1.0,
            detector: CountingDetector::SATELLITE_DEFAULT,
        }
    }
}

/// Default coincidence window for passes, 0.5 ns.
pub const PASS_WINDOW: f64 = 0.5e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassProfile {
    samples: Vec<PassSample>,
    pub ground: GroundArm,
    pub satellite_detector: CountingDetector,
    pub window: f64,
    pub trunc: usize,
}

impl PassProfile {
    /// Profile with the default detectors, window and truncation.
    pub fn new(samples: Vec<PassSample>) -> Result<Self> {
        let p = PassProfile {
            samples,
            ground: GroundArm::default(),
            satellite_detector: CountingDetector::SATELLITE_DEFAULT,
            window: PASS_WINDOW,
            trunc: DEFAULT_TRUNC,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn samples(&self) -> &[PassSample] {
        &self.samples
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(invalid("pass profile has no samples"));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.t_s.is_finite() {
                return Err(invalid(format!("sample {i}: time is not finite")));
            }
            check_nonneg(&format!("sample {i} loss_db"), s.loss_db)?;
            check_nonneg(&format!("sample {i} background_cps"), s.background_cps)?;
        }
        if let Some(w) = self.samples.windows(2).find(|w| w[1].t_s <= w[0].t_s) {
            return Err(invalid(format!(
                "sample times must be strictly increasing ({} then {})",
                w[0].t_s, w[1].t_s
            )));
        }
        check_unit("ground channel efficiency", self.ground.channel_efficiency)?;
        for det in [self.ground.detector, self.satellite_detector] {
            check_unit("detector efficiency", det.efficiency)?;
            check_nonneg("detector dark rate", det.dark_cps)?;
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(invalid(format!("window must be > 0 s, got {}", self.window)));
        }
        Ok(())
    }

    /// Ground station is Alice, the satellite Bob. Background adds to the
    /// satellite detector's intrinsic dark rate before scaling by the window.
    pub fn link_at(&self, sample: &PassSample) -> Result<LinkParams> {
        let sat = self.satellite_detector;
        LinkParams::new(
            self.ground.channel_efficiency * self.ground.detector.efficiency,
            db_to_transmission(sample.loss_db) * sat.efficiency,
            self.ground.detector.dark_cps * self.window,
            (sat.dark_cps + sample.background_cps) * self.window,
            self.window,
        )
    }

    /// Trapezoidal integration weight (seconds) of each sample.
    pub fn weights(&self) -> Vec<f64> {
        let t: Vec<f64> = self.samples.iter().map(|s| s.t_s).collect();
        let n = t.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { t[i] - t[i - 1] } else { 0.0 };
                let right = if i + 1 < n { t[i + 1] - t[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().t_s - self.samples[0].t_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassMode {
    Variable,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub t_s: f64,
    pub eps: f64,
    pub p_tf: f64,
    pub skr_per_second: f64,
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassOutcome {
    pub mode: PassMode,
    /// Key bits integrated over the pass.
    pub total_key: f64,
    pub usable_seconds: f64,
    /// The shared squeezing in fixed mode.
    pub fixed_eps: Option<f64>,
    pub samples: Vec<SampleResult>,
}

pub fn simulate_pass(profile: &PassProfile, mode: PassMode) -> Result<PassOutcome> {
    profile.validate()?;
    let weights = profile.weights();
    let links: Vec<LinkParams> = profile
        .samples
        .iter()
        .map(|s| profile.link_at(s))
        .collect::<Result<_>>()?;

    let (samples, fixed_eps) = match mode {
        PassMode::Variable => (variable_samples(profile, &links)?, None),
        PassMode::Fixed => {
            let (eps, samples) = fixed_samples(profile, &links, &weights)?;
            (samples, Some(eps))
        }
    };

    let total_key = samples
        .iter()
        .zip(&weights)
        .map(|(s, w)| s.skr_per_second * w)
        .sum();
    let usable_seconds = samples
        .iter()
        .zip(&weights)
        .filter(|(s, _)| s.usable)
        .map(|(_, w)| w)
        .sum();
    Ok(PassOutcome {
        mode,
        total_key,
        usable_seconds,
        fixed_eps,
        samples,
    })
}

fn variable_samples(profile: &PassProfile, links: &[LinkParams]) -> Result<Vec<SampleResult>> {
    profile
        .samples
        .par_iter()
        .zip(links)
        .map(|(s, link)| {
            let rec = match optimal_epsilon(link, profile.trunc) {
                Ok(rec) => rec,
                Err(Error::InfeasibleLink { best }) => *best,
                Err(e) => return Err(e),
            };
            Ok(SampleResult {
                t_s: s.t_s,
                eps: rec.eps_star.value(),
                p_tf: rec.p_tf_star,
                skr_per_second: rec.metrics.skr_per_second,
                usable: rec.metrics.usable(),
            })
        })
        .collect()
}

fn fixed_samples(
    profile: &PassProfile,
    links: &[LinkParams],
    weights: &[f64],
) -> Result<(f64, Vec<SampleResult>)> {
    let config = MetricsConfig::default();
    let opts = SearchOptions::default();
    let total_key = |eps: f64| -> Option<f64> {
        let prepared = PreparedState::new(SqueezingParam::new(eps).ok()?, profile.trunc).ok()?;
        Some(
            links
                .iter()
                .zip(weights)
                .map(|(l, w)| prepared.metrics(l, config).skr_per_second * w)
                .sum(),
        )
    };
    let found = maximize_scalar(opts.eps_min, opts.eps_max, opts.scan_points, opts.tolerance, total_key)
        .ok_or_else(|| invalid("no squeezing parameter inside the truncation limit"))?;

    let prepared = PreparedState::new(SqueezingParam::new(found.x)?, profile.trunc)?;
    let samples = profile
        .samples
        .iter()
        .zip(links)
        .map(|(s, l)| {
            let m = prepared.metrics(l, config);
            SampleResult {
                t_s: s.t_s,
                eps: found.x,
                p_tf: m.q_coinc,
                skr_per_second: m.skr_per_second,
                usable: usable(m.skr_per_second),
            }
        })
        .collect();
    Ok((found.x, samples))
}

/// Variable-versus-fixed comparison for one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassReport {
    pub total_key_variable: f64,
    pub total_key_fixed: f64,
    pub additional_key: f64,
    /// `100 * additional / fixed`; `None` when the fixed rate yields no key
    /// but the variable rate does.
    pub percent_increase: Option<f64>,
    pub usable_seconds_variable: f64,
    pub usable_seconds_fixed: f64,
    pub fixed_eps: f64,
    pub duration_s: f64,
}

pub fn pass_report(profile: &PassProfile) -> Result<PassReport> {
    let variable = simulate_pass(profile, PassMode::Variable)?;
    let fixed = simulate_pass(profile, PassMode::Fixed)?;
    Ok(PassReport::from_outcomes(profile, &variable, &fixed))
}

impl PassReport {
    pub fn from_outcomes(profile: &PassProfile, variable: &PassOutcome, fixed: &PassOutcome) -> Self {
        let additional = variable.total_key - fixed.total_key;
        let percent_increase = if fixed.total_key > 0.0 {
            Some(100.0 * additional / fixed.total_key)
        } else if variable.total_key > 0.0 {
            None
        } else {
            Some(0.0)
        };
        PassReport {
            total_key_variable: variable.total_key,
            total_key_fixed: fixed.total_key,
            additional_key: additional,
            percent_increase,
            usable_seconds_variable: variable.usable_seconds,
            usable_seconds_fixed: fixed.usable_seconds,
            fixed_eps: fixed.fixed_eps.unwrap_or(f64::NAN),
            duration_s: profile.duration(),
        }
    }
}
