//! Cut distance between step kernels over class relabelings.
//!
//! cargo run --example cut_distance

use kernel_duality::cut::{cut_distance_exact, cut_distance_heuristic};
use kernel_duality::StepKernel;

fn main() -> kernel_duality::Result<()> {
    let a = StepKernel::from_matrix(&[vec![3.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 1.0]])?;
    let relabeled = a.permuted(&[2, 0, 1])?;
    let d = cut_distance_exact(&a, &relabeled)?;
    println!("relabeled copy: distance {:.3e} via {:?}", d.value, d.permutation);

    let b = StepKernel::from_matrix(&[vec![2.5, 1.0, 0.5], vec![1.0, 2.0, 1.0], vec![0.5, 1.0, 1.5]])?;
    let exact = cut_distance_exact(&a, &b)?;
    let heuristic = cut_distance_heuristic(&a, &b, 16, 1)?;
    println!("exact {:.12}, local search {:.12}", exact.value, heuristic.value);

    let coarse = StepKernel::constant(1.5)?;
    let refined = cut_distance_heuristic(&a, &coarse, 16, 1)?;
    println!("against a constant kernel: {:.12}", refined.value);
    Ok(())
}
