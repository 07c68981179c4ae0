//! The optimizer and model applied to satellite passes and fiber links.

pub mod fiber;
pub mod satellite;

pub use fiber::{
    fiber_distance, loss_budget, loss_budget_with, max_noise_for_link, BudgetSearch,
    DetectorCatalogEntry, KeyDuration, LossBudget,
};
pub use satellite::{
    pass_report, simulate_pass, CountingDetector, GroundArm, PassMode, PassOutcome, PassProfile,
    PassReport, PassSample, SampleResult, PASS_WINDOW,
};

/// Power transmission of a `db` loss.
pub fn db_to_transmission(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

pub fn transmission_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}
