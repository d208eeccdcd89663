//! Runs the SS / RS / LR comparison on generated data for a few seeds.
//!
//! Usage: `cargo run --release --example planted_benchmark -- [seeds] [epochs] [batch]`

use std::time::Instant;

use edgechurn::pipeline::{evaluate, EvalConfig};
use edgechurn::synthgen::{generate, SynthConfig};
use edgechurn::trainer::TrainConfig;

fn main() -> edgechurn::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let batch_size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(128);
    let started = Instant::now();
    println!("seed,model,auc,recall,precision");
    for seed in 0..seeds {
        let data = generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })?;
        let cfg = TrainConfig {
            seed,
            epochs,
            batch_size,
            ..TrainConfig::default()
        };
        let ev = evaluate(&data.series, &data.schema, &cfg, &EvalConfig::default())?;
        for run in &ev.runs {
            println!("{seed},{}", run.metrics.csv_line());
        }
        eprintln!(
            "seed {seed}: {} train / {} test examples, {:.1}s elapsed",
            ev.train_examples,
            ev.test_examples,
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
