//! Bucket detector response and the joint click table of one basis pairing.

use eqkd::detection::{party_outcome, Outcome};
use eqkd::{joint_click_distribution, p_click, spdc_state, Basis, DetectorSpec, LinkParams, SqueezingParam};

fn main() -> eqkd::Result<()> {
    let det = DetectorSpec::new(0.5, 1e-3)?;
    println!("P(click | i photons), eta = 0.5, dark mean 1e-3:");
    for i in 0..5 {
        println!("  i = {i}: {:.5}", p_click(i, det));
    }

    let o = party_outcome(0.6, 0.2)?;
    println!("\nP(c|H)=0.6, P(c|V)=0.2 -> <H> = {:.3}, <V> = {:.3}, double {:.3}", o.p_h(), o.p_v(), o.double);

    let state = spdc_state(SqueezingParam::new(0.3)?, 3)?;
    let link = LinkParams::symmetric(0.4, 1e-3, 1e-9)?;
    for (ba, bb) in [(Basis::Z, Basis::Z), (Basis::X, Basis::X)] {
        let t = joint_click_distribution(&state, ba, bb, &link)?;
        println!("\n{ba:?}/{bb:?}  rows Alice, columns Bob (H, V, double, none)");
        for a in Outcome::ALL {
            let row: Vec<String> = Outcome::ALL.iter().map(|&b| format!("{:.2e}", t.get(a, b))).collect();
            println!("  {:<7} {}", format!("{a:?}"), row.join("  "));
        }
        println!("  coincidence {:.4e}, mismatch {:.4e}", t.coincidence(), t.mismatch());
    }
    Ok(())
}
