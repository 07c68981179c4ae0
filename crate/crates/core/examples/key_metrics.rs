//! Error rates and secure key rate against pump strength for a fixed link.

use eqkd::{compute_metrics, spdc_state, LinkParams, SqueezingParam};

fn main() -> eqkd::Result<()> {
    let link = LinkParams::symmetric(0.2, 1e-4, 1e-9)?;
    println!("{:>6} {:>11} {:>8} {:>8} {:>12}", "eps", "Q", "delta1", "delta2", "SKR (bit/s)");
    for i in 1..=12 {
        let eps = 0.05 * i as f64;
        let state = match spdc_state(SqueezingParam::new(eps)?, 3) {
            Ok(s) => s,
            Err(e) => {
                println!("{eps:>6.2} {e}");
                break;
            }
        };
        let m = compute_metrics(&state, &link)?;
        println!(
            "{eps:>6.2} {:>11.4e} {:>8.4} {:>8.4} {:>12.4e}",
            m.q_coinc, m.delta1, m.delta2, m.skr_per_second
        );
    }
    Ok(())
}
