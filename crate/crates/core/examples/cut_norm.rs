//! Cut norm of signed step functions: exact enumeration against the
//! alternating heuristic, and the 0/1 variant.
//!
//! cargo run --example cut_norm

use kernel_duality::cut::{cut_norm_01, cut_norm_exact, cut_norm_heuristic, DEFAULT_RESTARTS};
use kernel_duality::{StepFunction, WeightedMeasure};

fn main() -> kernel_duality::Result<()> {
    let w = StepFunction::new(
        &[vec![1.0, -1.0, 0.5], vec![-1.0, 1.0, -0.5], vec![0.5, -0.5, -2.0]],
        WeightedMeasure::new(vec![0.3, 0.3, 0.4])?,
    )?;
    let exact = cut_norm_exact(&w)?;
    let heuristic = cut_norm_heuristic(&w, DEFAULT_RESTARTS, 7)?;
    println!("exact     {:.12}  f = {:?}  g = {:?}", exact.value, exact.f_signs, exact.g_signs);
    println!("heuristic {:.12}", heuristic.value);
    let zero_one = cut_norm_01(&w, true)?;
    println!("0/1 cut norm {:.12}; ratio {:.3} (between 1 and 4)", zero_one, exact.value / zero_one);
    Ok(())
}
