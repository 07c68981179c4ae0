//! Optimal squeezing for a few links, with the truncation check, next to the
//! closed-form prediction of the optimal two-fold probability.
//!
//!     cargo run --example optimize_link -- 0.25 0.25 3e-4

use eqkd::error::Error;
use eqkd::{eval_optimal_tf, optimal_epsilon, LinkParams, ModelConstants};

fn report(link: &LinkParams) {
    let model = eval_optimal_tf(link.eta_a, link.eta_b, link.d_a, link.d_b, &ModelConstants::default()).unwrap();
    match optimal_epsilon(link, 3) {
        Ok(r) => {
            let check = r.truncation_check.unwrap();
            println!(
                "eta=({}, {}) d=({:.0e}, {:.0e}): eps* {:.4}  p_tf* {:.4e} (model {:.4e})  SKR {:.3e} bit/s  trunc 3->4 {:+.2}%",
                link.eta_a,
                link.eta_b,
                link.d_a,
                link.d_b,
                r.eps_star.value(),
                r.p_tf_star,
                model.p_tf,
                r.metrics.skr_per_second,
                100.0 * check.relative_change
            );
        }
        Err(Error::InfeasibleLink { best }) => println!(
            "eta=({}, {}) d=({:.0e}, {:.0e}): no key, best raw SKR {:.3e} at eps {:.4}",
            link.eta_a,
            link.eta_b,
            link.d_a,
            link.d_b,
            best.metrics.skr_per_window,
            best.eps_star.value()
        ),
        Err(e) => println!("error: {e}"),
    }
}

fn main() -> eqkd::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().expect("number")).collect();
    if let [eta_a, eta_b, d] = args[..] {
        report(&LinkParams::new(eta_a, eta_b, d, d, 1e-9)?);
        return Ok(());
    }
    for (eta, d) in [(1.0, 0.0), (0.5, 1e-4), (0.1, 1e-4), (0.1, 1e-2)] {
        report(&LinkParams::symmetric(eta, d, 1e-9)?);
    }
    report(&LinkParams::new(0.8, 0.05, 1e-5, 2e-4, 1e-9)?);
    Ok(())
}
