//! Builds the truncated two-pair SPDC state and prints its photon-number
//! statistics in both measurement bases.
//!
//!     cargo run --example spdc_state -- 0.3 4

use eqkd::fockstate::number_distribution;
use eqkd::{rotate_basis, spdc_state, Party, SqueezingParam};

fn main() -> eqkd::Result<()> {
    let mut args = std::env::args().skip(1);
    let eps: f64 = args.next().map(|s| s.parse().expect("eps")).unwrap_or(0.3);
    let trunc: usize = args.next().map(|s| s.parse().expect("trunc")).unwrap_or(3);

    let state = spdc_state(SqueezingParam::new(eps)?, trunc)?;
    println!("eps = {eps}, trunc = {trunc}, leakage = {:.3e}", state.leakage());

    let z = number_distribution(&state);
    println!("\nrectilinear basis, most likely configurations (A_H A_V B_H B_V):");
    let mut top: Vec<_> = z.iter().filter(|(_, p)| *p > 0.0).collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (occ, p) in top.iter().take(6) {
        println!("  {occ:?}  {p:.6}");
    }

    let rotated = rotate_basis(&rotate_basis(&state, Party::Alice), Party::Bob);
    let x = number_distribution(&rotated);
    let same: f64 = x.iter().filter(|(o, _)| o[0] == o[2] && o[1] == o[3]).map(|(_, p)| p).sum();
    println!("\ndiagonal basis: leakage {:.3e}, P(A and B agree on counts) = {same:.6}", rotated.leakage());
    Ok(())
}
