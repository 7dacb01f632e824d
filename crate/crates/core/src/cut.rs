//! Cut norm of step functions and cut distance between step kernels.
//!
//! For a block function `W` over weights `w`, the cut norm is the largest
//! `|sum_ij f_i W(i,j) g_j w_i w_j|` over `f, g` with entries in `[-1, 1]`.
//! The form is bilinear, so the maximum sits at sign vectors, and for a fixed
//! `f` the best `g` is read off the column sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{common_refinement, BlockMatrix, StepFunction, StepKernel};

/// Largest class count accepted by [`cut_norm_exact`].
pub const EXACT_CUT_NORM_CAP: usize = 24;
/// Largest class count accepted by [`cut_distance_exact`].
pub const EXACT_CUT_DISTANCE_CAP: usize = 8;
pub const DEFAULT_RESTARTS: usize = 32;

const WEIGHT_RTOL: f64 = 1e-12;
const ALTERNATION_CAP: usize = 10_000;
/// Largest class count for which swap moves are scored exactly.
const EXACT_SCORING_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutNormResult {
    pub value: f64,
    pub f_signs: Vec<i8>,
    pub g_signs: Vec<i8>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutDistanceResult {
    pub value: f64,
    /// Class `i` of the first kernel is matched with class `permutation[i]`
    /// of the second (of their common refinement, when one was needed).
    pub permutation: Vec<usize>,
    pub exact: bool,
}

/// `sum_ij f_i W(i,j) g_j w_i w_j`.
pub fn bilinear_form<M: BlockMatrix + ?Sized>(w: &M, f: &[f64], g: &[f64]) -> f64 {
    let weights = w.measure().weights();
    let r = w.classes();
    let mut acc = 0.0;
    for i in 0..r {
        let mut row = 0.0;
        for j in 0..r {
            row += w.value(i, j) * g[j] * weights[j];
        }
        acc += f[i] * weights[i] * row;
    }
    acc
}

fn signs_as_f64(s: &[i8]) -> Vec<f64> {
    s.iter().map(|&x| f64::from(x)).collect()
}

fn sign_of(x: f64) -> i8 {
    // ties resolve to +1
    if x < 0.0 {
        -1
    } else {
        1
    }
}

fn finish<M: BlockMatrix + ?Sized>(w: &M, f: Vec<i8>, g: Vec<i8>, exact: bool) -> CutNormResult {
    let value = bilinear_form(w, &signs_as_f64(&f), &signs_as_f64(&g)).abs();
    CutNormResult {
        value,
        f_signs: f,
        g_signs: g,
        exact,
    }
}

/// `c_j = sum_i f_i W(i,j) w_i`.
fn column_sums<M: BlockMatrix + ?Sized>(w: &M, f: &[i8]) -> Vec<f64> {
    let weights = w.measure().weights();
    let r = w.classes();
    (0..r)
        .map(|j| {
            (0..r)
                .map(|i| f64::from(f[i]) * w.value(i, j) * weights[i])
                .sum()
        })
        .collect()
}

/// `r_i = sum_j W(i,j) g_j w_j`.
fn row_sums<M: BlockMatrix + ?Sized>(w: &M, g: &[i8]) -> Vec<f64> {
    let weights = w.measure().weights();
    let r = w.classes();
    (0..r)
        .map(|i| {
            (0..r)
                .map(|j| w.value(i, j) * f64::from(g[j]) * weights[j])
                .sum()
        })
        .collect()
}

fn check_cap(r: usize, cap: usize) -> Result<()> {
    if r > cap {
        return Err(Error::CapExceeded {
            what: "class count",
            got: r,
            cap,
            hint: "use the heuristic solver instead",
        });
    }
    Ok(())
}

/// Exact cut norm by enumerating `f` over `{-1,+1}^r` (up to global sign).
pub fn cut_norm_exact<M: BlockMatrix + ?Sized>(w: &M) -> Result<CutNormResult> {
    cut_norm_exact_capped(w, EXACT_CUT_NORM_CAP)
}

pub fn cut_norm_exact_capped<M: BlockMatrix + ?Sized>(w: &M, cap: usize) -> Result<CutNormResult> {
    let r = w.classes();
    check_cap(r, cap)?;
    let weights = w.measure().weights();
    // f_0 = +1 fixed, the rest walked in Gray-code order.
    let mut f = vec![1i8; r];
    let mut c = column_sums(w, &f);
    let score = |c: &[f64]| c.iter().zip(weights).map(|(c, w)| c.abs() * w).sum::<f64>();
    let mut best = score(&c);
    let mut best_f = f.clone();
    let free = r - 1;
    for step in 1u64..(1u64 << free) {
        let bit = 1 + step.trailing_zeros() as usize;
        let delta = -2.0 * f64::from(f[bit]) * weights[bit];
        for (j, cj) in c.iter_mut().enumerate() {
            *cj += delta * w.value(bit, j);
        }
        f[bit] = -f[bit];
        let s = score(&c);
        if s > best {
            best = s;
            best_f.copy_from_slice(&f);
        }
    }
    let g = column_sums(w, &best_f).into_iter().map(sign_of).collect();
    Ok(finish(w, best_f, g, true))
}

/// Seeded random stream for restart (or row, or repetition) `index`.
pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn alternate<M: BlockMatrix + ?Sized>(w: &M, mut f: Vec<i8>) -> (Vec<i8>, Vec<i8>) {
    let weights = w.measure().weights();
    let mut g: Vec<i8> = column_sums(w, &f).into_iter().map(sign_of).collect();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..ALTERNATION_CAP {
        let rows = row_sums(w, &g);
        let value: f64 = rows.iter().zip(weights).map(|(x, w)| x.abs() * w).sum();
        if value <= best {
            break;
        }
        best = value;
        f = rows.into_iter().map(sign_of).collect();
        g = column_sums(w, &f).into_iter().map(sign_of).collect();
    }
    (f, g)
}

/// Lower bound on the cut norm by alternating best responses from seeded
/// random sign vectors. Restart 0 starts from the all-ones vector.
///
/// Restarts run in parallel; the reduction takes the largest value and breaks
/// ties by the lexicographically smallest `(f, g)`, so the result does not
/// depend on scheduling.
pub fn cut_norm_heuristic<M: BlockMatrix + Sync + ?Sized>(
    w: &M,
    restarts: usize,
    seed: u64,
) -> Result<CutNormResult> {
    if restarts == 0 {
        return Err(Error::validation("at least one restart is required"));
    }
    let r = w.classes();
    let best = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                vec![1i8; r]
            } else {
                let mut rng = stream_rng(seed, k as u64);
                (0..r).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
            };
            let (f, g) = alternate(w, start);
            finish(w, f, g, false)
        })
        .reduce_with(better_cut)
        .expect("restarts >= 1");
    Ok(best)
}

fn better_cut(a: CutNormResult, b: CutNormResult) -> CutNormResult {
    match a.value.total_cmp(&b.value) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if (&b.f_signs, &b.g_signs) < (&a.f_signs, &a.g_signs) {
                b
            } else {
                a
            }
        }
    }
}

/// Cut norm with `f, g` restricted to 0/1 indicators.
pub fn cut_norm_01<M: BlockMatrix + Sync + ?Sized>(w: &M, exact: bool) -> Result<f64> {
    if exact {
        cut_norm_01_exact(w)
    } else {
        Ok(cut_norm_01_heuristic(w, DEFAULT_RESTARTS, 0))
    }
}

fn indicator_score(c: &[f64], weights: &[f64]) -> f64 {
    let (mut pos, mut neg) = (0.0, 0.0);
    for (c, w) in c.iter().zip(weights) {
        if *c > 0.0 {
            pos += c * w;
        } else {
            neg -= c * w;
        }
    }
    pos.max(neg)
}

fn cut_norm_01_exact<M: BlockMatrix + ?Sized>(w: &M) -> Result<f64> {
    let r = w.classes();
    check_cap(r, EXACT_CUT_NORM_CAP)?;
    let weights = w.measure().weights();
    let mut f = vec![false; r];
    let mut c = vec![0.0; r];
    let mut best = 0.0f64;
    for step in 1u64..(1u64 << r) {
        let bit = step.trailing_zeros() as usize;
        let delta = if f[bit] { -weights[bit] } else { weights[bit] };
        for (j, cj) in c.iter_mut().enumerate() {
            *cj += delta * w.value(bit, j);
        }
        f[bit] = !f[bit];
        best = best.max(indicator_score(&c, weights));
    }
    Ok(best)
}

fn cut_norm_01_heuristic<M: BlockMatrix + ?Sized>(w: &M, restarts: usize, seed: u64) -> f64 {
    let r = w.classes();
    let weights = w.measure().weights();
    let mut best = 0.0f64;
    for k in 0..restarts.max(1) {
        let mut rng = stream_rng(seed, k as u64);
        for sign in [1.0, -1.0] {
            let mut f: Vec<f64> = if k == 0 {
                vec![1.0; r]
            } else {
                (0..r).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect()
            };
            let mut prev = f64::NEG_INFINITY;
            for _ in 0..ALTERNATION_CAP {
                let g: Vec<f64> = (0..r)
                    .map(|j| {
                        let c: f64 = (0..r).map(|i| f[i] * w.value(i, j) * weights[i]).sum();
                        f64::from(u8::from(sign * c > 0.0))
                    })
                    .collect();
                f = (0..r)
                    .map(|i| {
                        let s: f64 = (0..r).map(|j| w.value(i, j) * g[j] * weights[j]).sum();
                        f64::from(u8::from(sign * s > 0.0))
                    })
                    .collect();
                let value = sign * bilinear_form(w, &f, &g);
                if value <= prev {
                    break;
                }
                prev = value;
            }
            best = best.max(prev);
        }
    }
    best
}

/// `kappa1 - kappa2^tau` on `kappa1`'s measure, with
/// `kappa2^tau(i, j) = kappa2(tau(i), tau(j))`.
pub fn permuted_difference(k1: &StepKernel, k2: &StepKernel, perm: &[usize]) -> Result<StepFunction> {
    let r = k1.classes();
    if k2.classes() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: k2.classes(),
        });
    }
    crate::kernel::check_permutation(perm, r)?;
    let mut values = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            values[i * r + j] = k1.value(i, j) - k2.value(perm[i], perm[j]);
        }
    }
    StepFunction::from_flat(values, k1.measure().clone())
}

fn weights_match(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= WEIGHT_RTOL * scale
}

fn same_weight_multiset(k1: &StepKernel, k2: &StepKernel) -> bool {
    if k1.classes() != k2.classes() {
        return false;
    }
    let mut a = k1.weights().to_vec();
    let mut b = k2.weights().to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let scale = k1.measure().total().max(k2.measure().total());
    a.iter().zip(&b).all(|(x, y)| weights_match(*x, *y, scale))
}

fn all_weights_equal(k: &StepKernel) -> bool {
    let w = k.weights();
    w.iter()
        .all(|x| weights_match(*x, w[0], k.measure().total()))
}

/// Exact minimum of the cut norm of `kappa1 - kappa2^tau` over class
/// permutations `tau` that preserve class weights.
///
/// This equals the cut distance only when all classes have equal weight;
/// otherwise `exact` is false and the value is an upper bound.
pub fn cut_distance_exact(k1: &StepKernel, k2: &StepKernel) -> Result<CutDistanceResult> {
    let r = k1.classes();
    check_cap(r, EXACT_CUT_DISTANCE_CAP)?;
    if !same_weight_multiset(k1, k2) {
        return Err(Error::validation(
            "class weights of the two kernels differ as multisets",
        ));
    }
    let scale = k1.measure().total();
    let mut best: Option<CutDistanceResult> = None;
    let mut perm = Vec::with_capacity(r);
    let mut used = vec![false; r];
    let mut visit = |perm: &[usize]| -> Result<()> {
        let d = permuted_difference(k1, k2, perm)?;
        let value = cut_norm_exact(&d)?.value;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(CutDistanceResult {
                value,
                permutation: perm.to_vec(),
                exact: false,
            });
        }
        Ok(())
    };
    enumerate_compatible(k1, k2, scale, &mut perm, &mut used, &mut visit)?;
    let mut best = best.expect("identity-like permutation exists");
    best.exact = all_weights_equal(k1);
    Ok(best)
}

fn enumerate_compatible(
    k1: &StepKernel,
    k2: &StepKernel,
    scale: f64,
    perm: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    let i = perm.len();
    if i == k1.classes() {
        return visit(perm);
    }
    for j in 0..k2.classes() {
        if !used[j] && weights_match(k1.weights()[i], k2.weights()[j], scale) {
            used[j] = true;
            perm.push(j);
            enumerate_compatible(k1, k2, scale, perm, used, visit)?;
            perm.pop();
            used[j] = false;
        }
    }
    Ok(())
}

/// Upper bound on the cut distance by local search over class permutations.
///
/// Classes are first matched by weight and, within equal weights, by
/// decreasing marginal; then the best pairwise swap is applied while it
/// lowers the cut norm of the difference (exact up to 12 classes, heuristic
/// beyond). Kernels whose weights do not match
/// as multisets are first brought onto their common refinement. The reported
/// value is the cut norm of the difference at the final permutation (exact
/// when the class count allows, heuristic otherwise).
pub fn cut_distance_heuristic(
    k1: &StepKernel,
    k2: &StepKernel,
    restarts: usize,
    seed: u64,
) -> Result<CutDistanceResult> {
    let (a, b) = if same_weight_multiset(k1, k2) {
        (k1.clone(), k2.clone())
    } else {
        let refined = common_refinement(k1, k2)?;
        (refined.first, refined.second)
    };
    let r = a.classes();
    let scale = a.measure().total();
    let mut perm = initial_matching(&a, &b, scale);
    let score = |perm: &[usize]| -> Result<f64> {
        let d = permuted_difference(&a, &b, perm)?;
        if r <= EXACT_SCORING_CAP {
            Ok(cut_norm_exact(&d)?.value)
        } else {
            Ok(cut_norm_heuristic(&d, restarts, seed)?.value)
        }
    };
    let mut current = score(&perm)?;
    // steepest descent over weight-compatible swaps
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..r {
            for y in (x + 1)..r {
                if !weights_match(a.weights()[x], a.weights()[y], scale) {
                    continue;
                }
                perm.swap(x, y);
                let s = score(&perm)?;
                perm.swap(x, y);
                if s < current && best.is_none_or(|b| s < b.0) {
                    best = Some((s, x, y));
                }
            }
        }
        match best {
            Some((s, x, y)) => {
                perm.swap(x, y);
                current = s;
            }
            None => break,
        }
    }
    let value = if r <= EXACT_CUT_NORM_CAP {
        cut_norm_exact(&permuted_difference(&a, &b, &perm)?)?.value
    } else {
        current
    };
    Ok(CutDistanceResult {
        value,
        permutation: perm,
        exact: false,
    })
}

fn initial_matching(a: &StepKernel, b: &StepKernel, scale: f64) -> Vec<usize> {
    let order = |k: &StepKernel| {
        let lambda = k.marginal();
        let w = k.weights();
        let mut idx: Vec<usize> = (0..k.classes()).collect();
        idx.sort_by(|&x, &y| w[x].total_cmp(&w[y]));
        // within runs of equal weight, decreasing marginal
        let mut start = 0;
        while start < idx.len() {
            let mut end = start + 1;
            while end < idx.len() && weights_match(w[idx[start]], w[idx[end]], scale) {
                end += 1;
            }
            idx[start..end].sort_by(|&x, &y| lambda[y].total_cmp(&lambda[x]).then(x.cmp(&y)));
            start = end;
        }
        idx
    };
    let (oa, ob) = (order(a), order(b));
    let mut perm = vec![0; a.classes()];
    for (i, j) in oa.into_iter().zip(ob) {
        perm[i] = j;
    }
    perm
}
