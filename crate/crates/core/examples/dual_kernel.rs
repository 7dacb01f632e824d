//! The dual kernel left behind by the giant component.
//!
//! cargo run --example dual_kernel

use kernel_duality::duality::{dualize, er_duality_residual, zeta};
use kernel_duality::{BlockMatrix, StepKernel, WeightedMeasure};

fn main() -> kernel_duality::Result<()> {
    let k = StepKernel::new(&[vec![3.0, 1.0], vec![1.0, 2.0]], WeightedMeasure::new(vec![0.5, 0.5])?)?;
    let bundle = dualize(&k, 1e-13, 1_000_000)?;
    println!("rho by class        {:?}", bundle.rho.rho_by_class);
    println!("dual weights        {:?}", bundle.mu_hat.weights());
    println!("normalized weights  {:?}", bundle.mu_hat_norm.weights());
    println!("dual kernel values  {:?}", bundle.kappa_tilde.rows());
    println!("||T_dual||          {:.12}", bundle.dual_operator_norm()?);
    println!("giant edges / n     {:.12}", zeta(&k, &bundle.rho)?);
    println!("dual classes        {}", bundle.kappa_tilde.classes());

    for lambda in [1.5, 2.0, 4.0] {
        println!("lambda = {lambda}: conjugacy residual {:.3e}", er_duality_residual(lambda)?);
    }
    Ok(())
}
