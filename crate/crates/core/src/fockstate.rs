//! Four-mode polarization-entangled SPDC state in a truncated Fock space.
//!
//! Modes are ordered `(Alice-H, Alice-V, Bob-H, Bob-V)`. Each mode holds at
//! most `trunc` photons, so a state is a dense table of `(trunc + 1)^4`
//! complex amplitudes. Every operation that can push amplitude above the
//! truncation renormalizes and accumulates the discarded probability in
//! [`FockState4::leakage`].

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest fraction of probability that may fall outside the truncated space
/// when generating a state.
pub const LEAKAGE_LIMIT: f64 = 0.05;

/// Default photons per mode.
pub const DEFAULT_TRUNC: usize = 3;

/// SPDC squeezing parameter `epsilon >= 0`. Zero is the unpumped vacuum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SqueezingParam(f64);

impl SqueezingParam {
    pub const VACUUM: Self = SqueezingParam(0.0);

    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon >= 0.0 {
            Ok(SqueezingParam(epsilon))
        } else {
            Err(invalid(format!(
                "squeezing parameter must be finite and >= 0, got {epsilon}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// Photon numbers `(n_AH, n_AV, n_BH, n_BV)`.
pub type Occupation = [usize; 4];

/// Pure state over the four polarization modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState4 {
    trunc: usize,
    amps: Vec<Complex64>,
    leakage: f64,
}

impl FockState4 {
    /// The vacuum `|0,0,0,0>`.
    pub fn vacuum(trunc: usize) -> Result<Self> {
        check_trunc(trunc)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); (trunc + 1).pow(4)];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(FockState4 {
            trunc,
            amps,
            leakage: 0.0,
        })
    }

    /// Builds a normalized state from explicit `(occupation, amplitude)` pairs.
    /// Repeated occupations are summed.
    pub fn from_amplitudes<I>(trunc: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        check_trunc(trunc)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); (trunc + 1).pow(4)];
        for (occ, amp) in entries {
            if occ.iter().any(|&n| n > trunc) {
                return Err(invalid(format!(
                    "occupation {occ:?} exceeds truncation {trunc}"
                )));
            }
            amps[flat_index(trunc, occ)] += amp;
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
            return Err(invalid("state has zero or non-finite norm"));
        }
        let scale = norm_sqr.sqrt().recip();
        amps.iter_mut().for_each(|a| *a *= scale);
        Ok(FockState4 {
            trunc,
            amps,
            leakage: 0.0,
        })
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Number of stored amplitudes, `(trunc + 1)^4`.
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Cumulative probability discarded by truncation, relative to the
    /// untruncated state this one approximates.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Amplitude of the normalized state. Occupations above the truncation are zero.
    pub fn amplitude(&self, occ: Occupation) -> Complex64 {
        if occ.iter().any(|&n| n > self.trunc) {
            return Complex64::new(0.0, 0.0);
        }
        self.amps[flat_index(self.trunc, occ)]
    }

    /// Amplitude before the last renormalization, i.e. the coefficient of
    /// the untruncated state.
    pub fn unnormalized_amplitude(&self, occ: Occupation) -> Complex64 {
        self.amplitude(occ) * (1.0 - self.leakage).sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Iterates `(occupation, amplitude)` over every stored entry.
    pub fn iter(&self) -> impl Iterator<Item = (Occupation, Complex64)> + '_ {
        let t = self.trunc;
        self.amps
            .iter()
            .enumerate()
            .map(move |(i, &a)| (unflat_index(t, i), a))
    }

    /// Exchanges Alice's and Bob's modes.
    pub fn swap_parties(&self) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (occ, a) in self.iter() {
            amps[flat_index(self.trunc, [occ[2], occ[3], occ[0], occ[1]])] = a;
        }
        FockState4 {
            trunc: self.trunc,
            amps,
            leakage: self.leakage,
        }
    }
}

fn check_trunc(trunc: usize) -> Result<()> {
    if trunc < 1 {
        return Err(invalid("truncation must be at least one photon per mode"));
    }
    // (trunc+1)^4 entries and factorials of 2*trunc stay well inside f64 range.
    if trunc > 12 {
        return Err(invalid(format!("truncation {trunc} is too large (max 12)")));
    }
    Ok(())
}

#[inline]
fn flat_index(trunc: usize, occ: Occupation) -> usize {
    let d = trunc + 1;
    ((occ[0] * d + occ[1]) * d + occ[2]) * d + occ[3]
}

#[inline]
fn unflat_index(trunc: usize, mut i: usize) -> Occupation {
    let d = trunc + 1;
    let bv = i % d;
    i /= d;
    let bh = i % d;
    i /= d;
    let av = i % d;
    [i / d, av, bh, bv]
}

/// Tensor product of two two-mode squeezed vacua, one on `(A_H, B_H)` and one
/// on `(A_V, B_V)` with a `(-1)^m` sign on the m-pair V term:
///
/// `|psi> = sech^2(eps) * sum_{n,m} tanh(eps)^(n+m) (-1)^m |n, m, n, m>`
///
/// The state is renormalized inside the truncated space; the discarded
/// probability `1 - (1 - tanh^(2(T+1)))^2` is stored as leakage.
pub fn spdc_state(eps: SqueezingParam, trunc: usize) -> Result<FockState4> {
    check_trunc(trunc)?;
    let e = eps.value();
    let t = e.tanh();
    let sech2 = e.cosh().powi(-2);

    let mut amps = vec![Complex64::new(0.0, 0.0); (trunc + 1).pow(4)];
    let mut kept = 0.0;
    for n in 0..=trunc {
        for m in 0..=trunc {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * sech2 * t.powi((n + m) as i32);
            kept += c * c;
            amps[flat_index(trunc, [n, m, n, m])] = Complex64::new(c, 0.0);
        }
    }
    let leakage = (1.0 - kept).max(0.0);
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::TruncationOverflow {
            leakage,
            limit: LEAKAGE_LIMIT,
        });
    }
    let scale = kept.sqrt().recip();
    amps.iter_mut().for_each(|a| *a *= scale);
    Ok(FockState4 {
        trunc,
        amps,
        leakage,
    })
}

/// Rotates one party's polarization by the measurement-basis convention:
/// Alice by +45 degrees, Bob by -45 degrees.
///
/// With this pairing the `(HH - VV)` pair state stays identically correlated
/// in the diagonal basis, so Z/Z and X/X errors have the same origin.
pub fn rotate_basis(state: &FockState4, party: Party) -> FockState4 {
    let angle = match party {
        Party::Alice => FRAC_PI_4,
        Party::Bob => -FRAC_PI_4,
    };
    rotate_party(state, party, angle)
}

/// Applies a polarization rotation by `angle` radians to `party`'s two modes.
///
/// The new H mode has polarization `(cos a, sin a)` in the old H/V frame.
/// Photon number per party is conserved; outputs with more than `trunc`
/// photons in one mode are dropped, the state renormalized and the loss
/// added to the leakage.
pub fn rotate_party(state: &FockState4, party: Party, angle: f64) -> FockState4 {
    let trunc = state.trunc;
    let mixers = PolarizationMixer::new(angle, 2 * trunc);
    let mut out = vec![Complex64::new(0.0, 0.0); state.amps.len()];

    for (occ, amp) in state.iter() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let (h, v) = match party {
            Party::Alice => (occ[0], occ[1]),
            Party::Bob => (occ[2], occ[3]),
        };
        let total = h + v;
        let lo = total.saturating_sub(trunc);
        let hi = total.min(trunc);
        for j in lo..=hi {
            let coef = mixers.coefficient(total, j, h);
            if coef == 0.0 {
                continue;
            }
            let target = match party {
                Party::Alice => [j, total - j, occ[2], occ[3]],
                Party::Bob => [occ[0], occ[1], j, total - j],
            };
            out[flat_index(trunc, target)] += amp * coef;
        }
    }

    let kept: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    let step_loss = (1.0 - kept).max(0.0);
    if kept > 0.0 {
        let scale = kept.sqrt().recip();
        out.iter_mut().for_each(|a| *a *= scale);
    }
    FockState4 {
        trunc,
        amps: out,
        leakage: 1.0 - (1.0 - state.leakage) * (1.0 - step_loss),
    }
}

/// Matrix elements `<j, N-j| R(angle) |k, N-k>` of a two-mode polarization
/// rotation, for every total photon number up to `max_total`.
struct PolarizationMixer {
    // blocks[n] is an (n+1)x(n+1) row-major matrix indexed [j][k].
    blocks: Vec<Vec<f64>>,
}

impl PolarizationMixer {
    fn new(angle: f64, max_total: usize) -> Self {
        let (s, c) = angle.sin_cos();
        let fact: Vec<f64> = (0..=max_total)
            .scan(1.0, |acc, i| {
                if i > 0 {
                    *acc *= i as f64;
                }
                Some(*acc)
            })
            .collect();
        let binom = |n: usize, k: usize| fact[n] / (fact[k] * fact[n - k]);

        let blocks = (0..=max_total)
            .map(|n| {
                let mut block = vec![0.0; (n + 1) * (n + 1)];
                for k in 0..=n {
                    // (c x - s y)^k (s x + c y)^(n-k), collect x^j y^(n-j)
                    for p in 0..=k {
                        let left = binom(k, p) * c.powi(p as i32) * (-s).powi((k - p) as i32);
                        for q in 0..=(n - k) {
                            let right =
                                binom(n - k, q) * s.powi(q as i32) * c.powi((n - k - q) as i32);
                            block[(p + q) * (n + 1) + k] += left * right;
                        }
                    }
                    let norm_in = (fact[k] * fact[n - k]).sqrt();
                    for j in 0..=n {
                        block[j * (n + 1) + k] *= (fact[j] * fact[n - j]).sqrt() / norm_in;
                    }
                }
                block
            })
            .collect();
        PolarizationMixer { blocks }
    }

    #[inline]
    fn coefficient(&self, total: usize, j: usize, k: usize) -> f64 {
        self.blocks[total][j * (total + 1) + k]
    }
}

/// Born-rule probabilities of the photon-number measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberDistribution {
    trunc: usize,
    probs: Vec<f64>,
}

impl NumberDistribution {
    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn probability(&self, occ: Occupation) -> f64 {
        if occ.iter().any(|&n| n > self.trunc) {
            return 0.0;
        }
        self.probs[flat_index(self.trunc, occ)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Occupation, f64)> + '_ {
        let t = self.trunc;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (unflat_index(t, i), p))
    }

    /// Flat probability vector in row-major `(n_AH, n_AV, n_BH, n_BV)` order.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

pub fn number_distribution(state: &FockState4) -> NumberDistribution {
    NumberDistribution {
        trunc: state.trunc,
        probs: state.amps.iter().map(|a| a.norm_sqr()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(e: f64) -> SqueezingParam {
        SqueezingParam::new(e).unwrap()
    }

    #[test]
    fn vacuum_for_zero_squeezing() {
        let s = spdc_state(SqueezingParam::VACUUM, 3).unwrap();
        assert_eq!(s.dim(), 256);
        for (occ, a) in s.iter() {
            let expect = if occ == [0, 0, 0, 0] { 1.0 } else { 0.0 };
            assert_eq!(a.re, expect);
            assert_eq!(a.im, 0.0);
        }
        assert_eq!(s.leakage(), 0.0);
    }

    #[test]
    fn first_order_pair_amplitudes() {
        let s = spdc_state(eps(0.2), 3).unwrap();
        // sech^2(0.2) tanh(0.2)
        let expected = 0.2f64.cosh().powi(-2) * 0.2f64.tanh();
        assert!((expected - 0.18969).abs() < 1e-4);
        let h = s.unnormalized_amplitude([1, 0, 1, 0]);
        let v = s.unnormalized_amplitude([0, 1, 0, 1]);
        assert!((h.re - expected).abs() < 1e-12);
        assert!((v.re + expected).abs() < 1e-12);
        assert_eq!(s.amplitude([1, 0, 0, 1]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn leakage_matches_closed_form() {
        let e = 0.4f64;
        let s = spdc_state(eps(e), 3).unwrap();
        let t2 = e.tanh().powi(2);
        let expected = 1.0 - (1.0 - t2.powi(4)).powi(2);
        assert!((s.leakage() - expected).abs() < 1e-12);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            spdc_state(eps(0.1), 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(SqueezingParam::new(-0.1).is_err());
        assert!(SqueezingParam::new(f64::NAN).is_err());
        match spdc_state(eps(1.2), 3) {
            Err(Error::TruncationOverflow { leakage, .. }) => assert!(leakage > LEAKAGE_LIMIT),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn boundary_probability_small_for_moderate_squeezing() {
        for e in [0.05, 0.1, 0.2, 0.3] {
            let s = spdc_state(eps(e), 4).unwrap();
            let edge: f64 = number_distribution(&s)
                .iter()
                .filter(|(occ, _)| occ.contains(&4))
                .map(|(_, p)| p)
                .sum();
            assert!(edge < 1e-3, "eps={e}: boundary mass {edge}");
        }
    }

    #[test]
    fn number_distribution_ratio() {
        let dist = number_distribution(&spdc_state(eps(0.2), 3).unwrap());
        let ratio = dist.probability([1, 0, 1, 0]) / dist.probability([0, 0, 0, 0]);
        assert!((ratio - 0.2f64.tanh().powi(2)).abs() < 1e-12);
        assert!((ratio - 0.038957).abs() < 1e-6);
        assert!((dist.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_photon_rotation_splits_evenly() {
        let one = Complex64::new(1.0, 0.0);
        let s = FockState4::from_amplitudes(2, [([1, 0, 1, 0], one)]).unwrap();
        let r = rotate_basis(&s, Party::Alice);
        let h = r.amplitude([1, 0, 1, 0]).norm_sqr();
        let v = r.amplitude([0, 1, 1, 0]).norm_sqr();
        assert!((h - 0.5).abs() < 1e-12);
        assert!((v - 0.5).abs() < 1e-12);
        assert!((h + v - 1.0).abs() < 1e-12);
        assert_eq!(r.leakage(), 0.0);
    }

    #[test]
    fn rotation_round_trip_without_leakage() {
        let a = |x: f64| Complex64::new(x, 0.0);
        let s = FockState4::from_amplitudes(
            2,
            [
                ([0, 0, 0, 0], a(0.8)),
                ([1, 0, 1, 0], a(0.4)),
                ([0, 1, 0, 1], a(-0.4)),
                ([1, 1, 1, 1], a(0.2)),
                ([2, 0, 0, 2], Complex64::new(0.0, 0.1)),
            ],
        )
        .unwrap();
        for party in [Party::Alice, Party::Bob] {
            let there = rotate_party(&s, party, 0.3);
            let back = rotate_party(&there, party, -0.3);
            for (occ, amp) in s.iter() {
                assert!((back.amplitude(occ) - amp).norm() < 1e-10);
            }
        }
        let plus = rotate_basis(&s, Party::Alice);
        let back = rotate_party(&plus, Party::Alice, -FRAC_PI_4);
        for (occ, amp) in s.iter() {
            assert!((back.amplitude(occ) - amp).norm() < 1e-10);
        }
    }

    #[test]
    fn vacuum_is_rotation_invariant() {
        let v = FockState4::vacuum(3).unwrap();
        assert_eq!(rotate_basis(&v, Party::Bob), v);
    }

    #[test]
    fn rotated_spdc_state_stays_correlated() {
        // Both parties rotated: single-pair terms remain identically correlated.
        let s = spdc_state(eps(0.15), 3).unwrap();
        let x = rotate_basis(&rotate_basis(&s, Party::Alice), Party::Bob);
        assert!((x.norm_sqr() - 1.0).abs() < 1e-10);
        let dist = number_distribution(&x);
        assert!(dist.probability([1, 0, 0, 1]) < 1e-20);
        assert!(dist.probability([0, 1, 1, 0]) < 1e-20);
        let z = number_distribution(&s);
        assert!((dist.probability([1, 0, 1, 0]) - z.probability([1, 0, 1, 0])).abs() < 1e-6);
        assert!(x.leakage() > s.leakage());
    }

    #[test]
    fn swap_symmetry_of_spdc_state() {
        let s = spdc_state(eps(0.25), 3).unwrap();
        assert_eq!(s.swap_parties(), s);
    }
}
