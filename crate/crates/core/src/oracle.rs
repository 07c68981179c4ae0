//! Monte Carlo cross-check of the analytic click statistics.
//!
//! Each window draws a basis pairing (Z/Z or X/X with equal odds), a photon
//! configuration from that pairing's number distribution, binomial loss per
//! mode, Poisson dark counts per detector, and a fair coin for double clicks.
//! Runs are reproducible from the seed.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Poisson};
use serde::{Deserialize, Serialize};

use crate::detection::{DetectorSpec, LinkParams};
use crate::error::{invalid, Result};
use crate::fockstate::{NumberDistribution, Occupation, Party, SqueezingParam};
use crate::keyrate::{KeyMetrics, MetricsConfig, PreparedState};

/// Tolerance of [`OracleComparison::agrees`], in standard errors.
pub const AGREEMENT_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub samples: u64,
    pub q_coinc: f64,
    pub q_se: f64,
    pub delta1: f64,
    pub delta1_se: f64,
    /// Windows measured in Z/Z.
    pub zz_windows: u64,
    pub zz_coincidences: u64,
    pub zz_errors: u64,
}

struct Sampler {
    occupations: Vec<Occupation>,
    index: WeightedIndex<f64>,
}

impl Sampler {
    fn new(dist: &NumberDistribution) -> Result<Self> {
        let index = WeightedIndex::new(dist.as_slice())
            .map_err(|e| invalid(format!("cannot sample number distribution: {e}")))?;
        Ok(Sampler {
            occupations: dist.iter().map(|(occ, _)| occ).collect(),
            index,
        })
    }

    fn occupation<R: Rng>(&self, rng: &mut R) -> Occupation {
        self.occupations[self.index.sample(rng)]
    }
}

fn detector_clicks<R: Rng>(rng: &mut R, photons: usize, det: DetectorSpec) -> bool {
    let detected = if photons == 0 || det.efficiency == 0.0 {
        0
    } else {
        Binomial::new(photons as u64, det.efficiency).unwrap().sample(rng)
    };
    if detected > 0 {
        return true;
    }
    det.dark_prob > 0.0 && Poisson::new(det.dark_prob).unwrap().sample(rng) > 0.0
}

/// Bit read by one party: `Some(0)` for H (or +), `Some(1)` for V (or -).
fn party_bit<R: Rng>(rng: &mut R, n_h: usize, n_v: usize, det: DetectorSpec) -> Option<u8> {
    let h = detector_clicks(rng, n_h, det);
    let v = detector_clicks(rng, n_v, det);
    match (h, v) {
        (true, false) => Some(0),
        (false, true) => Some(1),
        (true, true) => Some(rng.random_range(0..2)),
        (false, false) => None,
    }
}

pub fn sample_estimate(prepared: &PreparedState, link: &LinkParams, samples: u64, seed: u64) -> Result<OracleEstimate> {
    link.validate()?;
    if samples == 0 {
        return Err(invalid("oracle needs at least one sample"));
    }
    let z = Sampler::new(prepared.z_distribution())?;
    let x = Sampler::new(prepared.x_distribution())?;
    let (det_a, det_b) = (link.detector(Party::Alice), link.detector(Party::Bob));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (mut coincidences, mut zz_windows, mut zz_coinc, mut zz_err) = (0u64, 0u64, 0u64, 0u64);
    for _ in 0..samples {
        let rectilinear = rng.random_bool(0.5);
        let occ = if rectilinear { z.occupation(&mut rng) } else { x.occupation(&mut rng) };
        let a = party_bit(&mut rng, occ[0], occ[1], det_a);
        let b = party_bit(&mut rng, occ[2], occ[3], det_b);
        if rectilinear {
            zz_windows += 1;
        }
        if let (Some(a), Some(b)) = (a, b) {
            coincidences += 1;
            if rectilinear {
                zz_coinc += 1;
                zz_err += (a != b) as u64;
            }
        }
    }

    let n = samples as f64;
    let q = coincidences as f64 / n;
    let (delta1, delta1_se) = if zz_coinc > 0 {
        let d = zz_err as f64 / zz_coinc as f64;
        (d, (d * (1.0 - d) / zz_coinc as f64).sqrt())
    } else {
        (0.5, 0.0)
    };
    Ok(OracleEstimate {
        samples,
        q_coinc: q,
        q_se: (q * (1.0 - q) / n).sqrt(),
        delta1,
        delta1_se,
        zz_windows,
        zz_coincidences: zz_coinc,
        zz_errors: zz_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub eps: f64,
    pub link: LinkParams,
    pub analytic: KeyMetrics,
    pub estimate: OracleEstimate,
    /// `|estimate - analytic| / se`; zero when both agree exactly.
    pub q_sigmas: f64,
    pub delta1_sigmas: f64,
}

impl OracleComparison {
    pub fn agrees(&self) -> bool {
        self.q_sigmas <= AGREEMENT_SIGMAS && self.delta1_sigmas <= AGREEMENT_SIGMAS
    }
}

fn sigmas(diff: f64, se: f64) -> f64 {
    if diff.abs() <= 1e-12 {
        0.0
    } else if se > 0.0 {
        diff.abs() / se
    } else {
        f64::INFINITY
    }
}

/// Samples the source at `eps` through `link` and compares with the analytic Q
/// and Z/Z error rate.
pub fn compare_with_analytic(
    eps: SqueezingParam,
    trunc: usize,
    link: &LinkParams,
    samples: u64,
    seed: u64,
) -> Result<OracleComparison> {
    let prepared = PreparedState::new(eps, trunc)?;
    let analytic = prepared.metrics(link, MetricsConfig::default());
    let estimate = sample_estimate(&prepared, link, samples, seed)?;
    Ok(OracleComparison {
        eps: eps.value(),
        link: *link,
        analytic,
        q_sigmas: sigmas(estimate.q_coinc - analytic.q_coinc, estimate.q_se),
        delta1_sigmas: sigmas(estimate.delta1 - analytic.delta1, estimate.delta1_se),
        estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(v: f64) -> SqueezingParam {
        SqueezingParam::new(v).unwrap()
    }

    #[test]
    fn same_seed_same_estimate() {
        let link = LinkParams::symmetric(0.5, 1e-3, 1e-9).unwrap();
        let a = compare_with_analytic(eps(0.3), 3, &link, 20_000, 7).unwrap();
        let b = compare_with_analytic(eps(0.3), 3, &link, 20_000, 7).unwrap();
        let c = compare_with_analytic(eps(0.3), 3, &link, 20_000, 8).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn small_run_agrees() {
        let link = LinkParams::symmetric(0.6, 1e-3, 1e-9).unwrap();
        let c = compare_with_analytic(eps(0.35), 3, &link, 100_000, 11).unwrap();
        assert!(c.agrees(), "{c:?}");
        assert!(c.estimate.zz_windows > 45_000 && c.estimate.zz_windows < 55_000);
    }

    #[test]
    fn vacuum_with_darks() {
        let link = LinkParams::symmetric(1.0, 0.01, 1e-9).unwrap();
        let c = compare_with_analytic(SqueezingParam::VACUUM, 3, &link, 100_000, 3).unwrap();
        // independent darks: Q = (1 - e^{-2n})^2, errors half the time
        let p = 1.0 - (-0.02f64).exp();
        assert!((c.analytic.q_coinc - p * p).abs() < 1e-12);
        assert!((c.analytic.delta1 - 0.5).abs() < 1e-12);
        assert!(c.agrees(), "{c:?}");
    }

    #[test]
    fn rejects_zero_samples() {
        let link = LinkParams::symmetric(0.6, 0.0, 1e-9).unwrap();
        let p = PreparedState::new(eps(0.2), 3).unwrap();
        assert!(sample_estimate(&p, &link, 0, 1).is_err());
    }
}
