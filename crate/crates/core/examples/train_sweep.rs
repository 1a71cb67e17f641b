//! Sweep the penalty weight for one regularizer and print the trace.
//!
//! cargo run --release --example train_sweep -- cmi

use exempt_audit::trainer::{sweep, Regularizer, TrainConfig};

fn main() -> exempt_audit::Result<()> {
    let reg = std::env::args().nth(1).unwrap_or_else(|| "cmi".into());
    let config = TrainConfig {
        regularizer: Regularizer::parse(&reg, &[])?,
        ..TrainConfig::scenario("exp-2")
    };
    let trace = sweep(&config, &[0.0, 1.0, 2.0, 4.0])?;
    println!("{:>6} {:>8} {:>10} {:>10} {:>8}", "lambda", "accuracy", "penalty", "M*_NE", "epochs");
    for r in &trace.records {
        if let Some(e) = &r.error {
            println!("{:>6} failed: {e}", r.lambda);
            continue;
        }
        println!(
            "{:>6} {:>8.4} {:>10.5} {:>10.5} {:>8}",
            r.lambda,
            r.test_accuracy.unwrap_or(f64::NAN),
            r.penalty.unwrap_or(f64::NAN),
            r.m_ne_star.unwrap_or(f64::NAN),
            r.epochs_run
        );
    }
    Ok(())
}
