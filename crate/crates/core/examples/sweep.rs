//! Sweeps (alpha, beta) on the easy synthetic spec and prints both surfaces.
//!
//! cargo run --release -p idcurate-core --example sweep -- [distractor_ratio]

use idcurate_core::tuning::sweep;
use idcurate_core::{CurationConfig, SyntheticSpec};

fn main() -> Result<(), idcurate_core::Error> {
    let ratio = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1.0);
    let spec = SyntheticSpec {
        distractor_ratio: ratio,
        ..Default::default()
    };
    let base = CurationConfig {
        min_account_photos: 0,
        ..Default::default()
    };
    let result = sweep(&spec, &base, (0.5, 5.0), (0.5, 8.0), 0.5, 5)?;
    println!("purity\n{}", result.surface_csv(&result.purity));
    println!(
        "fraction kept\n{}",
        result.surface_csv(&result.fraction_kept)
    );
    println!(
        "selected alpha={} beta={}",
        result.selected.0, result.selected.1
    );
    Ok(())
}
