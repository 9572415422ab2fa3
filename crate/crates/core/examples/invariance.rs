//! Prints purity against distractor ratio with and without purification.
//!
//! cargo run --release -p idcurate-core --example invariance -- [alpha] [beta] [dim]

use idcurate_core::tuning::distractor_invariance;
use idcurate_core::{CurationConfig, SyntheticSpec};

fn main() -> Result<(), idcurate_core::Error> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let config = CurationConfig {
        alpha: args.first().copied().unwrap_or(1.5),
        beta: args.get(1).copied().unwrap_or(0.5),
        min_account_photos: 0,
        ..Default::default()
    };
    let spec = SyntheticSpec {
        embedding_dim: args.get(2).map_or(32, |&d| d as usize),
        background_scale: args.get(3).copied().unwrap_or(1.75),
        seed: args.get(4).map_or(0, |&s| s as u64),
        ..Default::default()
    };
    let ratios = [0.0, 1.0, 2.0, 5.0, 10.0];
    let with = distractor_invariance(&spec, &config, &ratios, 5, true)?;
    let without = distractor_invariance(&spec, &config, &ratios, 5, false)?;
    println!("ratio,purity_with,kept_with,purity_without,kept_without");
    for (w, o) in with.iter().zip(&without) {
        println!(
            "{},{:.4},{:.4},{:.4},{:.4}",
            w.ratio, w.purity, w.fraction_kept, o.purity, o.fraction_kept
        );
    }
    Ok(())
}
