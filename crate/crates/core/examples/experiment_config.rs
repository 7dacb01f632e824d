//! Drive a repeated experiment from a TOML config and write CSV.
//!
//! cargo run --release --example experiment_config

use kernel_duality::experiments::{emit_to, run_giant_experiment, ExperimentConfig, Format};
use kernel_duality::StepKernel;

fn main() -> kernel_duality::Result<()> {
    let cfg = ExperimentConfig::from_toml(
        r#"
        n = 20000
        reps = 8
        seed = 42
        "#,
    )?;
    let report = run_giant_experiment(&StepKernel::constant(2.0)?, &cfg)?;
    emit_to(&report, Format::Csv, std::io::stdout())?;
    eprintln!(
        "mean |C1|/n = {:.5} +- {:.5} (limit {:.5})",
        report.c1_frac.mean, report.c1_frac.stderr, report.rho
    );
    Ok(())
}
