//! QBER, two-fold coincidence probability and asymptotic secure key rate.

use serde::{Deserialize, Serialize};

use crate::detection::{clicks_from_distribution, JointClicks, LinkParams};
use crate::error::{invalid, Result};
use crate::fockstate::{
    number_distribution, rotate_basis, spdc_state, FockState4, NumberDistribution, Party,
    SqueezingParam,
};

/// Basis reconciliation factor of BB84 sifting.
pub const SIFTING_FACTOR: f64 = 0.5;

/// Secure key rate (bits/s) above which a link is usable: about 10^6 raw
/// bits within an hour.
pub const USABLE_SKR_PER_SECOND: f64 = 14.0;

/// Binary Shannon entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid(format!("binary entropy needs delta in [0, 1], got {delta}")));
    }
    Ok(entropy_unchecked(delta))
}

#[inline]
fn entropy_unchecked(delta: f64) -> f64 {
    if delta <= 0.0 || delta >= 1.0 {
        0.0
    } else {
        -delta * delta.log2() - (1.0 - delta) * (1.0 - delta).log2()
    }
}

/// Error-correction inefficiency trend of CASCADE, `1.169 + delta`.
pub fn ec_efficiency(delta: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(invalid(format!(
            "error-correction efficiency needs delta in [0, 0.5], got {delta}"
        )));
    }
    Ok(1.169 + delta)
}

/// Asymptotic key bits per window, `q Q (1 - f(d1) H(d1) - H(d2))` with
/// `q = 1/2`. Negative values are returned as-is.
pub fn skr(q_coinc: f64, delta1: f64, delta2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q_coinc) {
        return Err(invalid(format!("coincidence probability must lie in [0, 1], got {q_coinc}")));
    }
    let f = ec_efficiency(delta1)?;
    let h1 = binary_entropy(delta1)?;
    let h2 = binary_entropy(delta2)?;
    if delta2 > 0.5 {
        return Err(invalid(format!("phase error rate must lie in [0, 0.5], got {delta2}")));
    }
    Ok(SIFTING_FACTOR * q_coinc * (1.0 - f * h1 - h2))
}

#[inline]
fn skr_unchecked(q: f64, d1: f64, d2: f64) -> f64 {
    SIFTING_FACTOR * q * (1.0 - (1.169 + d1) * entropy_unchecked(d1) - entropy_unchecked(d2))
}

pub fn usable(skr_per_second: f64) -> bool {
    skr_per_second > USABLE_SKR_PER_SECOND
}

/// Which basis pairings the reported coincidence probability averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QAveraging {
    /// Mean of the Z/Z and X/X coincidence probabilities.
    #[default]
    BothBases,
    ZOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub q_averaging: QAveraging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyMetrics {
    /// Two-fold coincidence probability per window.
    pub q_coinc: f64,
    /// Bit error rate (Z/Z mismatch fraction).
    pub delta1: f64,
    /// Phase error rate (X/X mismatch fraction).
    pub delta2: f64,
    /// Raw key bits per window; may be negative.
    pub skr_per_window: f64,
    /// `max(0, skr_per_window) / window`.
    pub skr_per_second: f64,
    pub window: f64,
    /// No coincidences at all: error rates are undefined and set to 1/2.
    pub degenerate: bool,
}

impl KeyMetrics {
    pub fn usable(&self) -> bool {
        usable(self.skr_per_second)
    }
}

/// Number distributions of an SPDC state in the Z/Z and X/X pairings. Link
/// parameters do not touch the state, so one prepared state serves any
/// number of links.
#[derive(Debug, Clone)]
pub struct PreparedState {
    z: NumberDistribution,
    x: NumberDistribution,
    leakage: f64,
}

impl PreparedState {
    pub fn new(eps: SqueezingParam, trunc: usize) -> Result<Self> {
        Ok(Self::from_state(&spdc_state(eps, trunc)?))
    }

    pub fn from_state(state: &FockState4) -> Self {
        let rotated = rotate_basis(&rotate_basis(state, Party::Alice), Party::Bob);
        PreparedState {
            z: number_distribution(state),
            x: number_distribution(&rotated),
            leakage: rotated.leakage(),
        }
    }

    /// Largest truncation loss among the two pairings.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn z_distribution(&self) -> &NumberDistribution {
        &self.z
    }

    pub fn x_distribution(&self) -> &NumberDistribution {
        &self.x
    }

    pub fn clicks(&self, link: &LinkParams) -> (JointClicks, JointClicks) {
        (
            clicks_from_distribution(&self.z, link),
            clicks_from_distribution(&self.x, link),
        )
    }

    pub fn metrics(&self, link: &LinkParams, config: MetricsConfig) -> KeyMetrics {
        let (zz, xx) = self.clicks(link);
        metrics_from_clicks(&zz, &xx, link.window, config)
    }
}

/// Assembles key metrics from the Z/Z and X/X outcome tables.
pub fn metrics_from_clicks(
    zz: &JointClicks,
    xx: &JointClicks,
    window: f64,
    config: MetricsConfig,
) -> KeyMetrics {
    let qz = zz.coincidence();
    let qx = xx.coincidence();
    let q = match config.q_averaging {
        QAveraging::BothBases => 0.5 * (qz + qx),
        QAveraging::ZOnly => qz,
    }
    .clamp(0.0, 1.0);

    let rate = |err: f64, coinc: f64| {
        if coinc > 0.0 {
            (err / coinc).clamp(0.0, 0.5)
        } else {
            0.5
        }
    };
    let degenerate = q <= 0.0;
    let delta1 = rate(zz.mismatch(), qz);
    let delta2 = rate(xx.mismatch(), qx);
    let skr_per_window = if degenerate {
        0.0
    } else {
        skr_unchecked(q, delta1, delta2)
    };
    KeyMetrics {
        q_coinc: q,
        delta1,
        delta2,
        skr_per_window,
        skr_per_second: skr_per_window.max(0.0) / window,
        window,
        degenerate,
    }
}

pub fn compute_metrics(state: &FockState4, link: &LinkParams) -> Result<KeyMetrics> {
    compute_metrics_with(state, link, MetricsConfig::default())
}

pub fn compute_metrics_with(
    state: &FockState4,
    link: &LinkParams,
    config: MetricsConfig,
) -> Result<KeyMetrics> {
    link.validate()?;
    Ok(PreparedState::from_state(state).metrics(link, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics_at(eps: f64, link: LinkParams) -> KeyMetrics {
        let s = spdc_state(SqueezingParam::new(eps).unwrap(), 3).unwrap();
        compute_metrics(&s, &link).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // direct evaluation at the 11% threshold
        let h = -0.11 * 0.11f64.log2() - 0.89 * 0.89f64.log2();
        assert!((binary_entropy(0.11).unwrap() - h).abs() < 1e-15);
        assert!((h - 0.49991).abs() < 1e-5);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn entropy_symmetric() {
        for i in 1..50 {
            let d = i as f64 / 100.0;
            let a = binary_entropy(d).unwrap();
            let b = binary_entropy(1.0 - d).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert!(a < 1.0);
        }
    }

    #[test]
    fn ec_efficiency_values() {
        assert_eq!(ec_efficiency(0.0).unwrap(), 1.169);
        assert!((ec_efficiency(0.05).unwrap() - 1.219).abs() < 1e-15);
        assert!((ec_efficiency(0.5).unwrap() - 1.669).abs() < 1e-15);
        assert!(ec_efficiency(0.6).is_err());
    }

    #[test]
    fn skr_values() {
        assert_eq!(skr(1.0, 0.0, 0.0).unwrap(), 0.5);
        let h = binary_entropy(0.11).unwrap();
        let expected = 0.5 * (1.0 - 1.279 * h - h);
        let got = skr(1.0, 0.11, 0.11).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got + 0.0697).abs() < 1e-4);
        assert_eq!(skr(0.0, 0.2, 0.3).unwrap(), 0.0);
        assert!(skr(1.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn usable_threshold() {
        assert!(usable(14.1));
        assert!(!usable(13.0));
        assert!(!usable(0.0));
        assert!(!usable(14.0));
    }

    #[test]
    fn vacuum_without_noise_is_degenerate() {
        let m = metrics_at(0.0, LinkParams::symmetric(0.8, 0.0, 1e-9).unwrap());
        assert_eq!(m.q_coinc, 0.0);
        assert_eq!(m.skr_per_second, 0.0);
        assert!(m.degenerate);
    }

    #[test]
    fn dark_only_coincidences_are_random() {
        for eta in [0.0, 0.5, 1.0] {
            let m = metrics_at(0.0, LinkParams::symmetric(eta, 0.01, 1e-9).unwrap());
            assert!(m.q_coinc > 0.0);
            assert!((m.delta1 - 0.5).abs() < 1e-12);
            assert!((m.delta2 - 0.5).abs() < 1e-12);
            assert!(m.skr_per_window < 0.0);
            assert_eq!(m.skr_per_second, 0.0);
        }
    }

    #[test]
    fn weak_pumping_ideal_link_gives_key() {
        let m = metrics_at(0.1, LinkParams::symmetric(1.0, 0.0, 1e-9).unwrap());
        assert!(m.delta1 < 0.11 / 10.0);
        assert!(m.skr_per_window > 0.0);
        assert!((m.skr_per_second - m.skr_per_window / 1e-9).abs() < 1e-6);
    }

    #[test]
    fn z_only_option() {
        let s = spdc_state(SqueezingParam::new(0.3).unwrap(), 3).unwrap();
        let link = LinkParams::symmetric(0.4, 1e-3, 1e-9).unwrap();
        let cfg = MetricsConfig {
            q_averaging: QAveraging::ZOnly,
        };
        let z = compute_metrics_with(&s, &link, cfg).unwrap();
        let both = compute_metrics(&s, &link).unwrap();
        // Z/Z and X/X only differ through truncation
        assert!((z.q_coinc - both.q_coinc).abs() / both.q_coinc < 1e-2, "{z:?} {both:?}");
        assert!(z.q_coinc != both.q_coinc);
    }

    #[test]
    fn party_exchange_symmetry() {
        let s = spdc_state(SqueezingParam::new(0.35).unwrap(), 3).unwrap();
        let link = LinkParams::new(0.9, 0.2, 1e-4, 3e-3, 2e-9).unwrap();
        let m = compute_metrics(&s, &link).unwrap();
        let w = compute_metrics(&s.swap_parties(), &link.swapped()).unwrap();
        assert!((m.q_coinc - w.q_coinc).abs() < 1e-14);
        assert!((m.delta1 - w.delta1).abs() < 1e-14);
        assert!((m.delta2 - w.delta2).abs() < 1e-14);
        assert!((m.skr_per_window - w.skr_per_window).abs() < 1e-14);
    }

    #[test]
    fn darks_degrade_monotonically() {
        for eta in [0.1, 0.5, 1.0] {
            for eps in [0.1, 0.3] {
                let mut prev: Option<KeyMetrics> = None;
                for da in [0.0, 1e-4, 1e-3, 1e-2, 5e-2] {
                    let m = metrics_at(eps, LinkParams::new(eta, eta, da, 1e-4, 1e-9).unwrap());
                    if let Some(p) = prev {
                        assert!(m.delta1 >= p.delta1 - 1e-15);
                        assert!(m.skr_per_second <= p.skr_per_second + 1e-6);
                    }
                    prev = Some(m);
                }
            }
        }
    }
}
