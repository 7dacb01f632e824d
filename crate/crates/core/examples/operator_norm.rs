//! Operator norms, irreducibility and common refinements of step kernels.
//!
//! cargo run --example operator_norm

use kernel_duality::kernel::common_refinement;
use kernel_duality::{BlockMatrix, StepKernel, WeightedMeasure};

fn main() -> kernel_duality::Result<()> {
    let k = StepKernel::new(
        &[vec![4.0, 1.0, 0.0], vec![1.0, 2.0, 0.5], vec![0.0, 0.5, 3.0]],
        WeightedMeasure::new(vec![0.2, 0.3, 0.5])?,
    )?;
    println!("||T_kappa||      = {:.12}", k.operator_norm(1e-12)?);
    println!("irreducible      = {}", k.is_irreducible());
    println!("marginal         = {:?}", k.marginal());
    println!("m_delta(0.1)     = {:.6}", k.tail_marginal(0.1)?);

    let blocks = StepKernel::from_matrix(&[vec![2.0, 0.0], vec![0.0, 2.0]])?;
    println!("block diagonal irreducible = {}", blocks.is_irreducible());

    let coarse = StepKernel::constant(1.0)?;
    let refined = common_refinement(&k, &coarse)?;
    println!(
        "common refinement has {} classes with weights {:?}",
        refined.first.classes(),
        refined.first.weights()
    );
    Ok(())
}
