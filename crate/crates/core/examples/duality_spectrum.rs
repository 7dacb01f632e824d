//! Delete the giant, rescale what is left, and compare its component sizes
//! with a fresh sample of G(B_n) and with the dual kernel's tree sums.
//!
//! cargo run --release --example duality_spectrum

use kernel_duality::branching::rho_k_tree;
use kernel_duality::duality::dualize;
use kernel_duality::graph::{components, dual_matrix, materialize, remove_giant, sample};
use kernel_duality::StepKernel;

fn main() -> kernel_duality::Result<()> {
    let kernel = StepKernel::constant(2.0)?;
    let dual = dualize(&kernel, 1e-13, 1_000_000)?;
    let n = 20_000;
    let a = materialize(&kernel, n)?;
    let g = sample(&a, 1);
    let comp = components(&g);
    let rest = remove_giant(&g, &a, &comp)?;
    let m = rest.graph.n();
    let b = dual_matrix(&rest.matrix, m, n)?;
    let fresh = components(&sample(&b, 2));
    let tilde = components(&rest.graph);

    println!("m/n = {:.4} (limit {:.4})", m as f64 / n as f64, dual.mu_hat.total());
    println!("k  giant-free  G(B_n)   dual tree sum");
    for k in 1..=5 {
        println!(
            "{k}  {:.4}      {:.4}   {:.4}",
            tilde.vertex_fraction_in_size(k),
            fresh.vertex_fraction_in_size(k),
            rho_k_tree(&dual.kappa_tilde, k)?.aggregate
        );
    }
    Ok(())
}
