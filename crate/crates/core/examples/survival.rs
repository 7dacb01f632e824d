//! Survival probabilities of the multitype Poisson branching process.
//!
//! cargo run --example survival

use kernel_duality::branching::survival_default;
use kernel_duality::{StepKernel, WeightedMeasure};

fn main() -> kernel_duality::Result<()> {
    for lambda in [0.5, 1.0, 1.5, 2.0, 4.0] {
        let kernel = StepKernel::constant(lambda)?;
        let s = survival_default(&kernel)?;
        println!(
            "kappa = {lambda:<4} ||T|| = {:.4}  rho = {:.12}  ({} iterations)",
            kernel.operator_norm(1e-12)?,
            s.rho,
            s.iterations
        );
    }

    let two_type = StepKernel::new(
        &[vec![3.0, 1.0], vec![1.0, 2.0]],
        WeightedMeasure::new(vec![0.5, 0.5])?,
    )?;
    let s = survival_default(&two_type)?;
    println!("two types: rho by class {:?}, overall {:.12}", s.rho_by_class, s.rho);
    Ok(())
}
