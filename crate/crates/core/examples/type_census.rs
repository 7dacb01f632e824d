//! Class census outside the giant and component sums of a class function.
//!
//! cargo run --release --example type_census

use kernel_duality::branching::survival_default;
use kernel_duality::graph::{component_sum, components, materialize, sample, type_census, VertexSet};
use kernel_duality::{StepKernel, WeightedMeasure};

fn main() -> kernel_duality::Result<()> {
    let kernel = StepKernel::new(&[vec![3.0, 1.0], vec![1.0, 2.0]], WeightedMeasure::new(vec![0.5, 0.5])?)?;
    let rho = survival_default(&kernel)?;
    let a = materialize(&kernel, 20_000)?;
    let comp = components(&sample(&a, 4));

    let census = type_census(&comp, &a, true);
    for (i, nu) in census.iter().enumerate() {
        let limit = kernel.weights()[i] * (1.0 - rho.rho_by_class[i]);
        println!("class {i}: outside the giant {nu:.4}, limit {limit:.4}");
    }

    let indicator = [1.0, 0.0];
    let in_giant = component_sum(&comp, &a, &indicator, VertexSet::Giant, None)?;
    println!(
        "class 0 inside the giant {in_giant:.4}, limit {:.4}",
        kernel.weights()[0] * rho.rho_by_class[0]
    );
    let isolated = component_sum(&comp, &a, &[1.0, 1.0], VertexSet::All, Some(1))?;
    println!("isolated vertices {isolated:.4}");
    Ok(())
}
