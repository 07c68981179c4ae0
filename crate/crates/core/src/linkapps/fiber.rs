//! Fiber links: loss budgets for a detector catalog and the distances they
//! allow on symmetric links.

use serde::{Deserialize, Serialize};

use crate::detection::{DetectorSpec, LinkParams};
use crate::error::{check_nonneg, check_unit, invalid, Error, Result};
use crate::fockstate::DEFAULT_TRUNC;
use crate::model::noise_budget;
use crate::optimizer::{optimal_epsilon, OptimumRecord};

use super::{db_to_transmission, transmission_to_db};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorCatalogEntry {
    pub name: String,
    pub wavelength_nm: f64,
    pub time_resolution_ps: f64,
    pub efficiency: f64,
    pub dark_cps: f64,
}

impl DetectorCatalogEntry {
    pub fn validate(&self) -> Result<()> {
        check_unit("efficiency", self.efficiency)?;
        check_nonneg("dark_cps", self.dark_cps)?;
        check_nonneg("wavelength_nm", self.wavelength_nm)?;
        if !(self.time_resolution_ps.is_finite() && self.time_resolution_ps > 0.0) {
            return Err(invalid(format!(
                "time resolution must be > 0 ps, got {}",
                self.time_resolution_ps
            )));
        }
        Ok(())
    }

    /// Twice the detector time resolution, in seconds.
    pub fn default_window(&self) -> f64 {
        2.0 * self.time_resolution_ps * 1e-12
    }

    /// Loss of one detector's inefficiency, dB.
    pub fn detector_loss_db(&self) -> f64 {
        transmission_to_db(self.efficiency)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyDuration {
    /// Key target must be met within this many seconds.
    Seconds(f64),
    /// Any positive key rate qualifies.
    Asymptotic,
}

/// Bisection settings for [`loss_budget_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSearch {
    pub max_loss_db: f64,
    pub resolution_db: f64,
    pub trunc: usize,
}

impl Default for BudgetSearch {
    fn default() -> Self {
        BudgetSearch {
            max_loss_db: 80.0,
            resolution_db: 0.1,
            trunc: DEFAULT_TRUNC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub name: String,
    pub window: f64,
    pub duration: KeyDuration,
    pub key_target: f64,
    /// Total two-arm channel loss, detectors excluded.
    pub channel_loss_db: f64,
    /// Channel loss plus both detectors' inefficiency.
    pub total_loss_db: f64,
    /// Half of the channel loss, for readers who quote budgets per arm.
    pub per_arm_channel_db: f64,
    /// The bisection never failed inside the bracket; the budget is a lower bound.
    pub capped: bool,
    /// Optimal coincidences per second at the budget (after the channel).
    pub coincidence_rate: f64,
    /// Source pair generation per second at the budget.
    pub pair_generation_rate: f64,
}

/// Largest symmetric channel loss that still meets `key_target` at optimal
/// pumping. `window` defaults to twice the detector time resolution.
pub fn loss_budget(
    det: &DetectorCatalogEntry,
    duration: KeyDuration,
    key_target: f64,
    window: Option<f64>,
) -> Result<LossBudget> {
    loss_budget_with(det, duration, key_target, window, &BudgetSearch::default())
}

pub fn loss_budget_with(
    det: &DetectorCatalogEntry,
    duration: KeyDuration,
    key_target: f64,
    window: Option<f64>,
    search: &BudgetSearch,
) -> Result<LossBudget> {
    det.validate()?;
    if !(key_target.is_finite() && key_target > 0.0) {
        return Err(invalid(format!("key target must be > 0 bits, got {key_target}")));
    }
    if let KeyDuration::Seconds(s) = duration {
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid(format!("duration must be > 0 s, got {s}")));
        }
    }
    let window = window.unwrap_or_else(|| det.default_window());
    let spec = DetectorSpec::new(det.efficiency, det.dark_cps * window)?;

    let probe = |loss_db: f64| -> Result<Option<OptimumRecord>> {
        let arm = db_to_transmission(loss_db / 2.0);
        let link = LinkParams::with_detectors(arm, spec, arm, spec, window)?;
        match optimal_epsilon(&link, search.trunc) {
            Ok(rec) => {
                let ok = match duration {
                    KeyDuration::Asymptotic => true,
                    KeyDuration::Seconds(s) => rec.metrics.skr_per_second * s >= key_target,
                };
                Ok(ok.then_some(rec))
            }
            Err(Error::InfeasibleLink { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let Some(mut best) = probe(0.0)? else {
        return Err(Error::InfeasibleDetector {
            name: det.name.clone(),
        });
    };
    let mut lo = 0.0;
    let mut hi = search.max_loss_db;
    let capped = if let Some(rec) = probe(hi)? {
        best = rec;
        lo = hi;
        true
    } else {
        while hi - lo > search.resolution_db {
            let mid = 0.5 * (lo + hi);
            match probe(mid)? {
                Some(rec) => {
                    lo = mid;
                    best = rec;
                }
                None => hi = mid,
            }
        }
        false
    };

    Ok(LossBudget {
        name: det.name.clone(),
        window,
        duration,
        key_target,
        channel_loss_db: lo,
        total_loss_db: lo + 2.0 * det.detector_loss_db(),
        per_arm_channel_db: lo / 2.0,
        capped,
        coincidence_rate: best.p_tf_star / window,
        pair_generation_rate: best.mu / window,
    })
}

/// Symmetric-link fiber length `2 * budget / attenuation`, km.
pub fn fiber_distance(budget_db: f64, atten_db_per_km: f64) -> Result<f64> {
    if !(atten_db_per_km.is_finite() && atten_db_per_km > 0.0) {
        return Err(invalid(format!(
            "attenuation must be > 0 dB/km, got {atten_db_per_km}"
        )));
    }
    check_nonneg("loss budget", budget_db)?;
    Ok(2.0 * budget_db / atten_db_per_km)
}

/// Tolerable per-window dark probability for bright-fiber planning.
pub fn max_noise_for_link(eta_a: f64, eta_b: f64) -> Result<f64> {
    noise_budget(eta_a, eta_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(eff: f64, dark: f64, res_ps: f64) -> DetectorCatalogEntry {
        DetectorCatalogEntry {
            name: "test".into(),
            wavelength_nm: 1550.0,
            time_resolution_ps: res_ps,
            efficiency: eff,
            dark_cps: dark,
        }
    }

    #[test]
    fn distances() {
        assert!((fiber_distance(22.4, 0.17).unwrap() - 263.5).abs() < 0.1);
        assert!((fiber_distance(34.1, 0.17).unwrap() - 401.2).abs() < 0.1);
        assert_eq!(fiber_distance(1.0, 2.0).unwrap(), 1.0);
        assert!(fiber_distance(1.0, 0.0).is_err());
        assert!(fiber_distance(-1.0, 0.2).is_err());
        let base = fiber_distance(10.0, 0.2).unwrap();
        assert!((fiber_distance(20.0, 0.2).unwrap() - 2.0 * base).abs() < 1e-12);
        assert!((fiber_distance(10.0, 0.4).unwrap() - base / 2.0).abs() < 1e-12);
    }

    #[test]
    fn noise_wrapper() {
        assert!((max_noise_for_link(1.0, 1.0).unwrap() - 0.0366).abs() < 1e-15);
        assert!((max_noise_for_link(0.085, 0.085).unwrap() - 0.00311).abs() < 1e-5);
        assert_eq!(max_noise_for_link(0.0, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn perfect_detector_hits_search_cap() {
        let b = loss_budget(&entry(1.0, 0.0, 50.0), KeyDuration::Asymptotic, 1.0, None).unwrap();
        assert!(b.capped);
        assert_eq!(b.channel_loss_db, 80.0);
        assert_eq!(b.total_loss_db, 80.0);
    }

    #[test]
    fn more_darks_shrink_budget() {
        let quiet = entry(0.1, 2000.0, 100.0);
        let noisy = entry(0.1, 4000.0, 100.0);
        for dur in [KeyDuration::Asymptotic, KeyDuration::Seconds(3600.0)] {
            let a = loss_budget(&quiet, dur, 50_000.0, None).unwrap();
            let b = loss_budget(&noisy, dur, 50_000.0, None).unwrap();
            assert!(b.channel_loss_db < a.channel_loss_db, "{dur:?}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn asymptotic_budget_dominates_hour() {
        let det = entry(0.11, 2925.0, 55.0);
        let hour = loss_budget(&det, KeyDuration::Seconds(3600.0), 50_000.0, None).unwrap();
        let asym = loss_budget(&det, KeyDuration::Asymptotic, 50_000.0, None).unwrap();
        assert!(asym.channel_loss_db >= hour.channel_loss_db);
        assert!((hour.total_loss_db - hour.channel_loss_db - 2.0 * det.detector_loss_db()).abs() < 1e-12);
    }

    #[test]
    fn unreachable_target_is_infeasible_detector() {
        // 1e12 bits in one second cannot happen through any channel
        match loss_budget(&entry(0.5, 10.0, 50.0), KeyDuration::Seconds(1.0), 1e12, None) {
            Err(Error::InfeasibleDetector { name }) => assert_eq!(name, "test"),
            other => panic!("expected infeasible detector, got {other:?}"),
        }
        assert!(loss_budget(&entry(0.5, 10.0, 50.0), KeyDuration::Asymptotic, 0.0, None).is_err());
    }
}
