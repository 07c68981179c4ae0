//! Optimizes a grid of symmetric links, writes it as CSV, and refits the five
//! model constants to it.

use eqkd::io::{read_sweep, write_sweep};
use eqkd::model::compare_model_vs_sim;
use eqkd::{refit_constants, sweep_grid, ModelConstants};

fn main() -> eqkd::Result<()> {
    let etas: Vec<f64> = (2..=20).map(|i| 0.05 * i as f64).collect();
    let ds = [0.0, 1e-5, 1e-4, 1e-3];
    let rows = sweep_grid(&etas, &ds, 3)?;

    let path = std::env::temp_dir().join("eqkd_sweep.csv");
    write_sweep(std::fs::File::create(&path)?, &rows)?;
    let rows = read_sweep(std::fs::File::open(&path)?)?;
    println!("{} rows written to {}", rows.len(), path.display());

    let cmp = compare_model_vs_sim(&rows, &ModelConstants::default())?;
    println!("default constants: median relative error {:.3}, max {:.3}", cmp.median, cmp.max);

    let fit = refit_constants(&rows)?;
    let k = fit.constants;
    println!(
        "refit: A={:.5} B={:.4} C={:.4} D={:.4} E={:.3e}",
        k.a, k.b, k.c, k.d_const, k.e
    );
    println!(
        "rms residual {:.3e} (published constants {:.3e}) over {} rows, {} iterations",
        fit.rms_refit,
        fit.rms_published(),
        fit.rows_used,
        fit.iterations
    );
    println!("{}", k.to_json()?);
    Ok(())
}
