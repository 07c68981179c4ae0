//! Lossy bucket detectors with Poissonian dark counts, plus the double-click
//! post-processing that maps two polarization detectors onto one key bit.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonneg, check_unit, invalid, Result};
use crate::fockstate::{number_distribution, rotate_basis, FockState4, NumberDistribution, Party};

/// One single-photon detector: quantum efficiency and mean dark counts per
/// coincidence window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub efficiency: f64,
    pub dark_prob: f64,
}

impl DetectorSpec {
    pub const PERFECT: Self = DetectorSpec {
        efficiency: 1.0,
        dark_prob: 0.0,
    };

    pub fn new(efficiency: f64, dark_prob: f64) -> Result<Self> {
        check_unit("detector efficiency", efficiency)?;
        check_nonneg("dark count probability", dark_prob)?;
        if dark_prob > 0.5 {
            log::warn!("dark count mean {dark_prob} per window is above 0.5; detector is saturated by noise");
        }
        Ok(DetectorSpec {
            efficiency,
            dark_prob,
        })
    }
}

/// Channel efficiencies, per-detector dark probabilities and coincidence
/// window for one Alice/Bob link.
///
/// `eta_a`/`eta_b` are end-to-end: channel transmission already multiplied by
/// the detector quantum efficiency (see [`LinkParams::with_detectors`]).
/// `d_a`/`d_b` are Poisson means per window for *each* of a party's two
/// detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub eta_a: f64,
    pub eta_b: f64,
    pub d_a: f64,
    pub d_b: f64,
    /// Coincidence window in seconds.
    pub window: f64,
}

impl LinkParams {
    pub fn new(eta_a: f64, eta_b: f64, d_a: f64, d_b: f64, window: f64) -> Result<Self> {
        let link = LinkParams {
            eta_a,
            eta_b,
            d_a,
            d_b,
            window,
        };
        link.validate()?;
        Ok(link)
    }

    /// Same efficiency and dark probability on both arms.
    pub fn symmetric(eta: f64, d: f64, window: f64) -> Result<Self> {
        Self::new(eta, eta, d, d, window)
    }

    /// Folds channel transmissions into each party's detector.
    pub fn with_detectors(
        channel_a: f64,
        det_a: DetectorSpec,
        channel_b: f64,
        det_b: DetectorSpec,
        window: f64,
    ) -> Result<Self> {
        check_unit("channel efficiency (Alice)", channel_a)?;
        check_unit("channel efficiency (Bob)", channel_b)?;
        Self::new(
            channel_a * det_a.efficiency,
            channel_b * det_b.efficiency,
            det_a.dark_prob,
            det_b.dark_prob,
            window,
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eta_a", self.eta_a)?;
        check_unit("eta_b", self.eta_b)?;
        check_nonneg("d_a", self.d_a)?;
        check_nonneg("d_b", self.d_b)?;
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(invalid(format!(
                "coincidence window must be > 0 s, got {}",
                self.window
            )));
        }
        Ok(())
    }

    /// Effective detector seen by `party`.
    pub fn detector(&self, party: Party) -> DetectorSpec {
        match party {
            Party::Alice => DetectorSpec {
                efficiency: self.eta_a,
                dark_prob: self.d_a,
            },
            Party::Bob => DetectorSpec {
                efficiency: self.eta_b,
                dark_prob: self.d_b,
            },
        }
    }

    pub fn swapped(&self) -> Self {
        LinkParams {
            eta_a: self.eta_b,
            eta_b: self.eta_a,
            d_a: self.d_b,
            d_b: self.d_a,
            window: self.window,
        }
    }
}

/// Probability of registering `k` counts given `i` incident photons:
/// dark counts `d` drawn from Poisson(n) and `k - d` of the photons detected.
pub fn p_count(k: u32, i: u32, det: DetectorSpec) -> f64 {
    let n = det.dark_prob;
    let eta = det.efficiency;
    let mut total = 0.0;
    let mut poisson = (-n).exp(); // D(n, 0)
    for d in 0..=k {
        if d > 0 {
            poisson *= n / d as f64;
        }
        let detected = k - d;
        if detected <= i {
            total += poisson
                * binomial(i, detected)
                * eta.powi(detected as i32)
                * (1.0 - eta).powi((i - detected) as i32);
        }
    }
    total
}

/// Bucket-detector click probability `1 - exp(-n) (1 - eta)^i`.
pub fn p_click(i: u32, det: DetectorSpec) -> f64 {
    1.0 - (-det.dark_prob).exp() * (1.0 - det.efficiency).powi(i as i32)
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Click pattern of one party's H and V detectors in a window.
///
/// The four fields are exclusive and sum to one. A double click is resolved
/// to a uniformly random bit, which [`PartyOutcome::p_h`] and
/// [`PartyOutcome::p_v`] fold in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartyOutcome {
    pub h_only: f64,
    pub v_only: f64,
    pub double: f64,
    pub none: f64,
}

impl PartyOutcome {
    /// `<H> = P(c|H)(1 - P(c|V)) + P(c|H)P(c|V)/2`.
    pub fn p_h(&self) -> f64 {
        self.h_only + 0.5 * self.double
    }

    pub fn p_v(&self) -> f64 {
        self.v_only + 0.5 * self.double
    }

    /// Probability that at least one detector clicked.
    pub fn clicked(&self) -> f64 {
        self.h_only + self.v_only + self.double
    }

    fn as_array(&self) -> [f64; 4] {
        [self.h_only, self.v_only, self.double, self.none]
    }
}

pub fn party_outcome(p_click_h: f64, p_click_v: f64) -> Result<PartyOutcome> {
    check_unit("P(c|H)", p_click_h)?;
    check_unit("P(c|V)", p_click_v)?;
    Ok(outcome_unchecked(p_click_h, p_click_v))
}

#[inline]
fn outcome_unchecked(ch: f64, cv: f64) -> PartyOutcome {
    PartyOutcome {
        h_only: ch * (1.0 - cv),
        v_only: cv * (1.0 - ch),
        double: ch * cv,
        none: (1.0 - ch) * (1.0 - cv),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// Rectilinear H/V.
    Z,
    /// Diagonal, realized by [`rotate_basis`].
    X,
}

/// One party's raw outcome in a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    H = 0,
    V = 1,
    Double = 2,
    None = 3,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::H, Outcome::V, Outcome::Double, Outcome::None];

    /// Probability that this outcome is read as bit 0 (H) after
    /// double-click randomization; `None` yields no bit.
    fn bit_zero_weight(self) -> f64 {
        match self {
            Outcome::H => 1.0,
            Outcome::V => 0.0,
            Outcome::Double => 0.5,
            Outcome::None => 0.0,
        }
    }

    fn bit_one_weight(self) -> f64 {
        match self {
            Outcome::H => 0.0,
            Outcome::V => 1.0,
            Outcome::Double => 0.5,
            Outcome::None => 0.0,
        }
    }
}

/// Joint distribution of Alice's and Bob's outcomes, `table[alice][bob]`
/// indexed by [`Outcome`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointClicks {
    pub table: [[f64; 4]; 4],
}

impl JointClicks {
    pub fn get(&self, alice: Outcome, bob: Outcome) -> f64 {
        self.table[alice as usize][bob as usize]
    }

    pub fn total(&self) -> f64 {
        self.table.iter().flatten().sum()
    }

    /// Both parties registered a bit (double clicks included).
    pub fn coincidence(&self) -> f64 {
        let mut q = 0.0;
        for a in &Outcome::ALL[..3] {
            for b in &Outcome::ALL[..3] {
                q += self.get(*a, *b);
            }
        }
        q
    }

    /// Probability of a coincidence whose randomized bits disagree.
    pub fn mismatch(&self) -> f64 {
        let mut e = 0.0;
        for &a in &Outcome::ALL[..3] {
            for &b in &Outcome::ALL[..3] {
                let differ = a.bit_zero_weight() * b.bit_one_weight()
                    + a.bit_one_weight() * b.bit_zero_weight();
                e += self.get(a, b) * differ;
            }
        }
        e
    }

    /// Collapses double clicks into random bits: `[alice][bob]` over
    /// `(bit 0, bit 1, no click)`.
    pub fn randomized(&self) -> [[f64; 3]; 3] {
        let split = |o: Outcome| [o.bit_zero_weight(), o.bit_one_weight(), (o == Outcome::None) as u8 as f64];
        let mut out = [[0.0; 3]; 3];
        for &a in &Outcome::ALL {
            for &b in &Outcome::ALL {
                let p = self.get(a, b);
                let (wa, wb) = (split(a), split(b));
                for i in 0..3 {
                    for j in 0..3 {
                        out[i][j] += p * wa[i] * wb[j];
                    }
                }
            }
        }
        out
    }

    pub fn transposed(&self) -> Self {
        let mut t = [[0.0; 4]; 4];
        for (i, row) in self.table.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                t[j][i] = p;
            }
        }
        JointClicks { table: t }
    }
}

/// Per-photon-number outcome lookup for one party: `[n_h][n_v]`.
struct OutcomeTable {
    stride: usize,
    rows: Vec<[f64; 4]>,
}

impl OutcomeTable {
    fn new(det: DetectorSpec, trunc: usize) -> Self {
        let clicks: Vec<f64> = (0..=trunc as u32).map(|i| p_click(i, det)).collect();
        let stride = trunc + 1;
        let mut rows = Vec::with_capacity(stride * stride);
        for &ch in &clicks {
            for &cv in &clicks {
                rows.push(outcome_unchecked(ch, cv).as_array());
            }
        }
        OutcomeTable { stride, rows }
    }

    #[inline]
    fn get(&self, n_h: usize, n_v: usize) -> &[f64; 4] {
        &self.rows[n_h * self.stride + n_v]
    }
}

/// Weights the photon-number distribution of an already basis-rotated state
/// by each party's detector response.
pub fn clicks_from_distribution(dist: &NumberDistribution, link: &LinkParams) -> JointClicks {
    let trunc = dist.trunc();
    let alice = OutcomeTable::new(link.detector(Party::Alice), trunc);
    let bob = OutcomeTable::new(link.detector(Party::Bob), trunc);
    let mut table = [[0.0; 4]; 4];
    for (occ, p) in dist.iter() {
        if p == 0.0 {
            continue;
        }
        let oa = alice.get(occ[0], occ[1]);
        let ob = bob.get(occ[2], occ[3]);
        for i in 0..4 {
            let pa = p * oa[i];
            for j in 0..4 {
                table[i][j] += pa * ob[j];
            }
        }
    }
    JointClicks { table }
}

/// Outcome table for one basis pairing. X-basis parties are rotated first;
/// channel loss acts as extra detector inefficiency.
pub fn joint_click_distribution(
    state: &FockState4,
    basis_a: Basis,
    basis_b: Basis,
    link: &LinkParams,
) -> Result<JointClicks> {
    link.validate()?;
    let mut s = state.clone();
    if basis_a == Basis::X {
        s = rotate_basis(&s, Party::Alice);
    }
    if basis_b == Basis::X {
        s = rotate_basis(&s, Party::Bob);
    }
    Ok(clicks_from_distribution(&number_distribution(&s), link))
}
