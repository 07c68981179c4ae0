//! Variable versus fixed pump power over a satellite pass read from CSV.
//!
//!     cargo run --example satellite_pass -- data/pass_profile.csv

use std::path::PathBuf;

use eqkd::io::read_profile;
use eqkd::linkapps::{simulate_pass, PassMode, PassProfile, PassReport};

fn main() -> eqkd::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/pass_profile.csv"));
    let profile = PassProfile::new(read_profile(std::fs::File::open(&path)?)?)?;

    let variable = simulate_pass(&profile, PassMode::Variable)?;
    let fixed = simulate_pass(&profile, PassMode::Fixed)?;
    println!("{:>6} {:>8} {:>9} {:>12} {:>12}", "t (s)", "loss dB", "eps var", "var bit/s", "fixed bit/s");
    for ((s, v), f) in profile.samples().iter().zip(&variable.samples).zip(&fixed.samples).step_by(4) {
        println!(
            "{:>6.0} {:>8.2} {:>9.4} {:>12.1} {:>12.1}",
            s.t_s, s.loss_db, v.eps, v.skr_per_second, f.skr_per_second
        );
    }

    let r = PassReport::from_outcomes(&profile, &variable, &fixed);
    println!("\nfixed eps {:.4}", r.fixed_eps);
    println!("key: variable {:.0} bits, fixed {:.0} bits, +{:.0} bits", r.total_key_variable, r.total_key_fixed, r.additional_key);
    match r.percent_increase {
        Some(p) => println!("increase {p:.2}%"),
        None => println!("fixed rate yields no key"),
    }
    println!("usable seconds: variable {}, fixed {}", r.usable_seconds_variable, r.usable_seconds_fixed);
    Ok(())
}
