//! Sample G(A_n), find its components and compare the giant with the
//! branching-process limits.
//!
//! cargo run --release --example giant_component

use kernel_duality::branching::survival_default;
use kernel_duality::duality::zeta;
use kernel_duality::graph::{components, materialize, sample};
use kernel_duality::StepKernel;

fn main() -> kernel_duality::Result<()> {
    let kernel = StepKernel::constant(2.0)?;
    let rho = survival_default(&kernel)?;
    let n = 20_000;
    let a = materialize(&kernel, n)?;
    for seed in 0..5 {
        let g = sample(&a, seed);
        let comp = components(&g);
        println!(
            "seed {seed}: {} edges, |C1|/n = {:.4}, |C2| = {}, e(C1)/n = {:.4}",
            g.edge_count(),
            comp.giant_size() as f64 / n as f64,
            comp.second_size(),
            comp.edges_within()[0] as f64 / n as f64
        );
    }
    println!("limits: rho = {:.6}, zeta = {:.6}", rho.rho, zeta(&kernel, &rho)?);
    Ok(())
}
