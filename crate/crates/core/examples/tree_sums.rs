//! Trees, automorphisms and component-size probabilities of the branching
//! process from the tree sum, checked against the Borel law and simulation.
//!
//! cargo run --release --example tree_sums

use kernel_duality::branching::{rho_k_mc, rho_k_tree};
use kernel_duality::trees::enumerate_trees;
use kernel_duality::{StepKernel, WeightedMeasure};

fn borel(c: f64, k: usize) -> f64 {
    let k_fact: f64 = (1..=k).map(|x| x as f64).product();
    (c * k as f64).powi(k as i32 - 1) * (-c * k as f64).exp() / k_fact
}

fn main() -> kernel_duality::Result<()> {
    for k in 1..=8 {
        let shapes = enumerate_trees(k)?;
        let auts: Vec<u64> = shapes.iter().map(|t| t.aut()).collect();
        println!("k = {k}: {} shapes, aut = {auts:?}", shapes.len());
    }

    let c = 2.0;
    let kernel = StepKernel::constant(c)?;
    for k in 1..=6 {
        let tree = rho_k_tree(&kernel, k)?.aggregate;
        println!("rho_{k}: tree {tree:.12}  Borel {:.12}", borel(c, k));
    }

    let two = StepKernel::new(&[vec![1.0, 2.0], vec![2.0, 0.5]], WeightedMeasure::new(vec![0.3, 0.7])?)?;
    let mc = rho_k_mc(&two, 4, 200_000, 11)?;
    for k in 1..=4 {
        println!(
            "two types rho_{k}: tree {:.6}  simulated {:.6} +- {:.6}",
            rho_k_tree(&two, k)?.aggregate,
            mc.aggregate[k - 1],
            mc.aggregate_stderr[k - 1]
        );
    }
    Ok(())
}
