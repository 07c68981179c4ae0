//! Sampled click statistics against the analytic ones.
//!
//!     cargo run --release --example monte_carlo_oracle -- 7

use eqkd::oracle::compare_with_analytic;
use eqkd::{optimal_epsilon, LinkParams};

fn main() -> eqkd::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse().expect("seed")).unwrap_or(1);
    for (eta, d) in [(1.0, 0.0), (0.5, 1e-3), (0.1, 1e-4)] {
        let link = LinkParams::symmetric(eta, d, 1e-9)?;
        let eps = optimal_epsilon(&link, 3)?.eps_star;
        let c = compare_with_analytic(eps, 3, &link, 1_000_000, seed)?;
        println!(
            "eta={eta} d={d}: Q {:.5e} vs {:.5e} ({:.2} se), delta1 {:.5} vs {:.5} ({:.2} se) {}",
            c.estimate.q_coinc,
            c.analytic.q_coinc,
            c.q_sigmas,
            c.estimate.delta1,
            c.analytic.delta1,
            c.delta1_sigmas,
            if c.agrees() { "ok" } else { "DISAGREE" }
        );
    }
    Ok(())
}
