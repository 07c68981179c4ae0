//! Loss budgets and fiber reach for a detector catalog.
//!
//!     cargo run --example fiber_loss_budget -- data/detectors.csv

use std::path::PathBuf;

use eqkd::io::read_catalog;
use eqkd::linkapps::{fiber_distance, loss_budget, KeyDuration};

fn main() -> eqkd::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/detectors.csv"));
    let catalog = read_catalog(std::fs::File::open(&path)?)?;

    println!("50 000 key bits, window = 2x time resolution, 0.17 dB/km for telecom, 3 dB/km below 1000 nm");
    println!("{:<45} {:>6} {:>10} {:>10} {:>9}", "detector", "nm", "hour dB", "asym dB", "hour km");
    for det in &catalog {
        let hour = loss_budget(det, KeyDuration::Seconds(3600.0), 50_000.0, None);
        let asym = loss_budget(det, KeyDuration::Asymptotic, 50_000.0, None);
        let (Ok(hour), Ok(asym)) = (hour, asym) else {
            println!("{:<45} no key", det.name);
            continue;
        };
        let atten = if det.wavelength_nm > 1000.0 { 0.17 } else { 3.0 };
        let cap = if asym.capped { ">" } else { "" };
        println!(
            "{:<45} {:>6} {:>10.1} {:>10} {:>9.1}",
            det.name,
            det.wavelength_nm,
            hour.per_arm_channel_db,
            format!("{cap}{:.1}", asym.per_arm_channel_db),
            fiber_distance(hour.per_arm_channel_db, atten)?
        );
    }
    println!("(budgets per arm; a leading > marks the search cap)");
    Ok(())
}
