//! Multitype Poisson Galton-Watson process of a step kernel.
//!
//! A particle of class `i` has Poisson(`kappa(i, j) w_j`) children of class
//! `j`, independently over `j`. This module computes the survival
//! probabilities, the probabilities `rho_k` that the whole process has
//! exactly `k` particles (by simulation and by summing over trees), and the
//! tree functionals behind the tree sums.

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::cut::stream_rng;
use crate::error::{Error, Result};
use crate::kernel::{BlockMatrix, DirectedStepFunction, StepKernel};
use crate::trees::{enumerate_trees, TreeShape};

pub const DEFAULT_SURVIVAL_TOL: f64 = 1e-12;
pub const DEFAULT_SURVIVAL_MAX_ITER: usize = 1_000_000;

/// Kernels whose operator norm does not exceed this are treated as
/// (sub)critical: their survival probability is identically zero.
const CRITICAL_NORM: f64 = 1.0 + 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalSolution {
    /// `rho(kappa; i)` per class.
    pub rho_by_class: Vec<f64>,
    /// `rho(kappa) = sum_i w_i rho(kappa; i)`.
    pub rho: f64,
    pub iterations: usize,
    /// `max_i |rho_i - (1 - exp(-(T rho)_i))|`.
    pub residual: f64,
    pub converged: bool,
}

impl SurvivalSolution {
    fn new(kernel: &StepKernel, rho_by_class: Vec<f64>, iterations: usize, converged: bool) -> Self {
        let rho = weighted_mean(kernel.weights(), &rho_by_class);
        let next = survival_step(kernel, &rho_by_class);
        let residual = rho_by_class
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Self {
            rho_by_class,
            rho,
            iterations,
            residual,
            converged,
        }
    }
}

fn weighted_mean(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(w, x)| w * x).sum()
}

/// One step of the survival map `f -> 1 - exp(-T f)`.
pub fn survival_step(kernel: &StepKernel, f: &[f64]) -> Vec<f64> {
    kernel
        .apply_operator(f)
        .expect("one value per class")
        .into_iter()
        .map(|x| -(-x).exp_m1())
        .collect()
}

/// Survival probabilities, iterating the survival map down from `f = 1`.
///
/// The iterates decrease to the largest fixed point. Iteration stops when
/// successive iterates differ by less than `tol` in sup norm; when
/// `max_iter` runs out the last iterate is returned with `converged = false`.
/// Kernels with `||T|| <= 1` never survive and are answered directly.
pub fn survival(kernel: &StepKernel, tol: f64, max_iter: usize) -> Result<SurvivalSolution> {
    kernel.measure().require_probability("the branching process")?;
    if !(tol > 0.0) {
        return Err(Error::validation("survival tolerance must be positive"));
    }
    let norm = match kernel.operator_norm(1e-13) {
        Ok(x) => x,
        Err(Error::NonConvergence { lower, .. }) => lower,
        Err(e) => return Err(e),
    };
    let r = kernel.classes();
    if norm <= CRITICAL_NORM {
        return Ok(SurvivalSolution::new(kernel, vec![0.0; r], 0, true));
    }
    let mut f = vec![1.0; r];
    for it in 1..=max_iter {
        let next = survival_step(kernel, &f);
        let diff = f
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        f = next;
        if diff < tol {
            return Ok(SurvivalSolution::new(kernel, f, it, true));
        }
    }
    Ok(SurvivalSolution::new(kernel, f, max_iter, false))
}

pub fn survival_default(kernel: &StepKernel) -> Result<SurvivalSolution> {
    survival(kernel, DEFAULT_SURVIVAL_TOL, DEFAULT_SURVIVAL_MAX_ITER)
}

/// Monte Carlo estimates of `rho_k(kappa; i)` for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoKEstimate {
    pub k_max: usize,
    pub samples: usize,
    /// `by_class[i][k - 1]`.
    pub by_class: Vec<Vec<f64>>,
    pub stderr_by_class: Vec<Vec<f64>>,
    /// Fraction of runs per class that exceeded `k_max` particles.
    pub overflow_by_class: Vec<f64>,
    /// Root class drawn from the measure (stratified over classes).
    pub aggregate: Vec<f64>,
    pub aggregate_stderr: Vec<f64>,
}

const MC_CHUNK: usize = 4096;

/// Total progeny of one run, or `None` once it exceeds `cap`.
fn progeny(
    root: usize,
    offspring: &[Option<Poisson<f64>>],
    r: usize,
    cap: usize,
    rng: &mut impl rand::Rng,
    queue: &mut Vec<usize>,
) -> Option<usize> {
    queue.clear();
    queue.push(root);
    let mut head = 0;
    while head < queue.len() {
        let a = queue[head];
        head += 1;
        for j in 0..r {
            if let Some(dist) = &offspring[a * r + j] {
                let children = dist.sample(rng) as usize;
                if queue.len() + children > cap {
                    return None;
                }
                queue.extend(std::iter::repeat_n(j, children));
            }
        }
    }
    Some(queue.len())
}

/// Simulate the process `samples` times from a root of each class.
///
/// Runs are stopped as soon as they exceed `k_max` particles. Work is split
/// into chunks with their own seeded streams and merged by integer counts, so
/// the output is independent of the thread count.
pub fn rho_k_mc(kernel: &StepKernel, k_max: usize, samples: usize, seed: u64) -> Result<RhoKEstimate> {
    kernel.measure().require_probability("the branching process")?;
    if samples == 0 {
        return Err(Error::validation("at least one sample is required"));
    }
    if k_max == 0 {
        return Err(Error::validation("k_max must be at least 1"));
    }
    let r = kernel.classes();
    let w = kernel.weights();
    let offspring: Vec<Option<Poisson<f64>>> = (0..r * r)
        .map(|idx| {
            let mean = kernel.values()[idx] * w[idx % r];
            if mean > 0.0 {
                Poisson::new(mean)
                    .map(Some)
                    .map_err(|e| Error::validation(format!("offspring mean {mean}: {e}")))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let jobs: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..chunks).map(move |c| (i, c))).collect();
    let counts: Vec<(usize, Vec<u64>)> = jobs
        .par_iter()
        .map(|&(class, chunk)| {
            let mut rng = stream_rng(seed, ((class as u64) << 32) | chunk as u64);
            let mut hist = vec![0u64; k_max + 1];
            let mut queue = Vec::new();
            let n = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            for _ in 0..n {
                match progeny(class, &offspring, r, k_max, &mut rng, &mut queue) {
                    Some(k) => hist[k - 1] += 1,
                    None => hist[k_max] += 1,
                }
            }
            (class, hist)
        })
        .collect();
    let mut totals = vec![vec![0u64; k_max + 1]; r];
    for (class, hist) in counts {
        for (t, h) in totals[class].iter_mut().zip(hist) {
            *t += h;
        }
    }
    let n = samples as f64;
    let mut by_class = Vec::with_capacity(r);
    let mut stderr_by_class = Vec::<Vec<f64>>::with_capacity(r);
    let mut overflow_by_class = Vec::with_capacity(r);
    for t in &totals {
        let p: Vec<f64> = t[..k_max].iter().map(|&c| c as f64 / n).collect();
        stderr_by_class.push(p.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect());
        by_class.push(p);
        overflow_by_class.push(t[k_max] as f64 / n);
    }
    let aggregate = (0..k_max)
        .map(|k| (0..r).map(|i| w[i] * by_class[i][k]).sum())
        .collect();
    let aggregate_stderr = (0..k_max)
        .map(|k| {
            (0..r)
                .map(|i| (w[i] * stderr_by_class[i][k]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(RhoKEstimate {
        k_max,
        samples,
        by_class,
        stderr_by_class,
        overflow_by_class,
        aggregate,
        aggregate_stderr,
    })
}

/// Children of each vertex when the tree hangs from `root`, listed in
/// post-order (every child before its parent).
fn post_order(tree: &TreeShape, root: usize) -> Vec<(usize, Vec<usize>)> {
    let adj = tree.adjacency();
    let mut order = Vec::with_capacity(tree.len());
    let mut stack = vec![(root, usize::MAX)];
    while let Some((v, parent)) = stack.pop() {
        let children: Vec<usize> = adj[v].iter().copied().filter(|&u| u != parent).collect();
        for &c in &children {
            stack.push((c, v));
        }
        order.push((v, children));
    }
    order.reverse();
    order
}

/// Message at `root`: for each class `x`, the weighted sum over assignments
/// of the other vertices with `x_root = x`, not yet multiplied by `w_x`.
///
/// `vertex_factor[v][x]` multiplies each vertex; `edge(v, u, x, y)` is the
/// factor of tree edge `vu` with `x_v = x` and `x_u = y`.
fn rooted_message(
    tree: &TreeShape,
    root: usize,
    weights: &[f64],
    vertex_factor: &dyn Fn(usize, usize) -> f64,
    edge: &dyn Fn(usize, usize, usize, usize) -> f64,
) -> Vec<f64> {
    let r = weights.len();
    let mut messages: Vec<Vec<f64>> = vec![Vec::new(); tree.len()];
    for (v, children) in post_order(tree, root) {
        let mut m: Vec<f64> = (0..r).map(|x| vertex_factor(v, x)).collect();
        for c in children {
            let child = &messages[c];
            for (x, mx) in m.iter_mut().enumerate() {
                if *mx == 0.0 {
                    continue;
                }
                let s: f64 = (0..r).map(|y| edge(v, c, x, y) * child[y] * weights[y]).sum();
                *mx *= s;
            }
        }
        messages[v] = m;
    }
    std::mem::take(&mut messages[root])
}

fn check_vertex_functions(tree: &TreeShape, f: &[Vec<f64>], r: usize) -> Result<()> {
    if f.len() != tree.len() {
        return Err(Error::DimensionMismatch {
            expected: tree.len(),
            got: f.len(),
        });
    }
    if let Some(bad) = f.iter().find(|fk| fk.len() != r) {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: bad.len(),
        });
    }
    Ok(())
}

/// `t_isol^x(F, (f_k), W)`: integral over class assignments of the edge
/// values of `F` times `f_k(x_k) exp(-lambda_W(x_k))` at every vertex.
///
/// Evaluated by message passing from vertex 0 in `O(|F| r^2)`.
pub fn t_isol_times(tree: &TreeShape, f: &[Vec<f64>], w: &StepKernel) -> Result<f64> {
    let r = w.classes();
    check_vertex_functions(tree, f, r)?;
    let damp: Vec<f64> = w.marginal().iter().map(|l| (-l).exp()).collect();
    let m = rooted_message(
        tree,
        0,
        w.weights(),
        &|v, x| f[v][x] * damp[x],
        &|_, _, x, y| w.value(x, y),
    );
    Ok(m.iter().zip(w.weights()).map(|(m, w)| m * w).sum())
}

/// `t_isol^+(F, f, W)`: as [`t_isol_times`] with a single `f` summed over
/// the vertex it is attached to.
pub fn t_isol_plus(tree: &TreeShape, f: &[f64], w: &StepKernel) -> Result<f64> {
    let r = w.classes();
    if f.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: f.len(),
        });
    }
    let ones = vec![1.0; r];
    (0..tree.len())
        .map(|k| {
            let fs: Vec<Vec<f64>> = (0..tree.len())
                .map(|v| if v == k { f.to_vec() } else { ones.clone() })
                .collect();
            t_isol_times(tree, &fs, w)
        })
        .sum()
}

/// `t_0(F, (W_e))`: integral of the product of per-edge functions, with
/// tree edge `(a, b)` contributing `W_e(x_a, x_b)`. All edge functions
/// must share one measure.
pub fn t_zero(tree: &TreeShape, edge_functions: &[DirectedStepFunction]) -> Result<f64> {
    if edge_functions.len() != tree.edges().len() {
        return Err(Error::DimensionMismatch {
            expected: tree.edges().len(),
            got: edge_functions.len(),
        });
    }
    let Some(first) = edge_functions.first() else {
        // no edges: a single vertex integrates to the total mass
        return Err(Error::validation(
            "t_0 needs at least one edge to fix the measure",
        ));
    };
    let measure = first.measure();
    if edge_functions.iter().any(|e| e.measure() != measure) {
        return Err(Error::validation("edge functions live on different measures"));
    }
    let k = tree.len();
    let mut lookup = vec![(usize::MAX, false); k * k];
    for (e, &(a, b)) in tree.edges().iter().enumerate() {
        lookup[a * k + b] = (e, false);
        lookup[b * k + a] = (e, true);
    }
    let m = rooted_message(
        tree,
        0,
        measure.weights(),
        &|_, _| 1.0,
        &|v, u, x, y| {
            let (e, reversed) = lookup[v * k + u];
            if reversed {
                edge_functions[e].value(y, x)
            } else {
                edge_functions[e].value(x, y)
            }
        },
    );
    Ok(m.iter().zip(measure.weights()).map(|(m, w)| m * w).sum())
}

/// Per-edge functions `f_i^(1/d_i)(x) W^(1/d_i, 1/d_j)(x, y) f_j^(1/d_j)(y)`
/// whose `t_0` equals `t_isol^x(F, (f_k), W)` for non-negative `f_k`.
pub fn damped_edge_functions(
    tree: &TreeShape,
    f: &[Vec<f64>],
    w: &StepKernel,
) -> Result<Vec<DirectedStepFunction>> {
    let r = w.classes();
    check_vertex_functions(tree, f, r)?;
    if f.iter().flatten().any(|x| *x < 0.0) {
        return Err(Error::validation(
            "edge factorization needs non-negative vertex functions",
        ));
    }
    let deg = tree.degrees();
    tree.edges()
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (1.0 / deg[i] as f64, 1.0 / deg[j] as f64);
            let damped = w.exponent_damped(a, b)?;
            let mut values = damped.values().to_vec();
            for x in 0..r {
                for y in 0..r {
                    values[x * r + y] *= f[i][x].powf(a) * f[j][y].powf(b);
                }
            }
            DirectedStepFunction::from_flat(values, w.measure().clone())
        })
        .collect()
}

/// `rho_k` per class and aggregated over the measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoK {
    pub k: usize,
    pub by_class: Vec<f64>,
    pub aggregate: f64,
}

/// `rho_k(kappa; i)` from the tree sum
/// `sum_T t_isol^+(T, 1_i / w_i, kappa) / aut(T)`.
///
/// Taking `f` to be a class indicator divided by the class mass picks out
/// the root-class value; the sum over which vertex carries `f` is the sum
/// over rootings of `T`.
pub fn rho_k_tree(kernel: &StepKernel, k: usize) -> Result<RhoK> {
    kernel.measure().require_probability("the branching process")?;
    let r = kernel.classes();
    if let Some(i) = kernel.weights().iter().position(|w| *w <= 0.0) {
        return Err(Error::validation(format!(
            "class {i} has zero mass; its indicator cannot be normalized"
        )));
    }
    let shapes = enumerate_trees(k)?;
    let damp: Vec<f64> = kernel.marginal().iter().map(|l| (-l).exp()).collect();
    let mut by_class = vec![0.0; r];
    for shape in &shapes {
        let inv_aut = 1.0 / shape.aut() as f64;
        for root in 0..shape.len() {
            let m = rooted_message(
                shape,
                root,
                kernel.weights(),
                &|_, x| damp[x],
                &|_, _, x, y| kernel.value(x, y),
            );
            for (acc, m) in by_class.iter_mut().zip(m) {
                *acc += m * inv_aut;
            }
        }
    }
    let aggregate = weighted_mean(kernel.weights(), &by_class);
    Ok(RhoK {
        k,
        by_class,
        aggregate,
    })
}

/// `rho_{<=k}`: cumulative sum of [`rho_k_tree`] over `1..=k`.
pub fn rho_leq_k(kernel: &StepKernel, k: usize) -> Result<RhoK> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    let mut acc = rho_k_tree(kernel, 1)?;
    for j in 2..=k {
        let next = rho_k_tree(kernel, j)?;
        for (a, b) in acc.by_class.iter_mut().zip(next.by_class) {
            *a += b;
        }
        acc.aggregate += next.aggregate;
    }
    acc.k = k;
    Ok(acc)
}
