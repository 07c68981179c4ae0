//! Simulation and optimization of entanglement-based QKD links built on a
//! polarization-entangled SPDC source and bucket detectors.
//!
//! The pipeline runs from the truncated Fock-space source state
//! ([`fockstate`]) through lossy, noisy threshold detection ([`detection`]) to
//! the asymptotic secret key rate ([`keyrate`]). [`optimizer`] finds the
//! squeezing that maximizes the key rate; [`model`] holds the closed-form
//! approximation of that optimum and its refit; [`linkapps`] applies both to
//! satellite passes and fiber links. [`oracle`] is an independent Monte Carlo
//! check.
//!
//! ```
//! use eqkd::{optimal_epsilon, LinkParams};
//!
//! let link = LinkParams::symmetric(0.3, 1e-4, 1e-9).unwrap();
//! let best = optimal_epsilon(&link, 3).unwrap();
//! assert!(best.metrics.skr_per_second > 0.0);
//! ```

pub mod cli;
pub mod detection;
pub mod error;
pub mod fockstate;
pub mod io;
pub mod keyrate;
pub mod linkapps;
pub mod model;
pub mod optimizer;
pub mod oracle;

pub use detection::{joint_click_distribution, p_click, Basis, DetectorSpec, JointClicks, LinkParams};
pub use error::{Error, Result};
pub use fockstate::{rotate_basis, spdc_state, FockState4, Party, SqueezingParam};
pub use keyrate::{compute_metrics, KeyMetrics, PreparedState};
pub use model::{eval_optimal_tf, noise_budget, refit_constants, ModelConstants};
pub use optimizer::{optimal_epsilon, sweep_grid, OptimumRecord, SweepRow};
