//! Largest tolerable dark count probability per window for a link, from the
//! closed form and from a bisection on the simulated key rate.

use eqkd::error::Error;
use eqkd::{noise_budget, optimal_epsilon, LinkParams};

fn has_key(eta: f64, d: f64) -> bool {
    match optimal_epsilon(&LinkParams::symmetric(eta, d, 1e-9).unwrap(), 3) {
        Ok(r) => r.is_feasible(),
        Err(Error::InfeasibleLink { .. }) => false,
        Err(e) => panic!("{e}"),
    }
}

fn main() -> eqkd::Result<()> {
    println!("{:>6} {:>11} {:>11}", "eta", "closed form", "simulated");
    for eta in [0.05, 0.1, 0.3, 0.6, 1.0] {
        let (mut lo, mut hi) = (0.0, 0.1);
        while hi - lo > 1e-3 * hi {
            let mid = 0.5 * (lo + hi);
            if has_key(eta, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        println!("{eta:>6} {:>11.5} {:>11.5}", noise_budget(eta, eta)?, lo);
    }

    // bright fiber: four-wave mixing counts per second through a 1 ns window
    let budget = noise_budget(0.05, 0.05)?;
    println!("\neta 0.05 per arm tolerates {:.0} noise counts/s per detector at 1 ns", budget / 1e-9);
    Ok(())
}
