#![allow(dead_code)]

use kernel_duality::{StepFunction, StepKernel, WeightedMeasure};
use proptest::prelude::*;

fn symmetric(r: usize, upper: &[f64]) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; r]; r];
    let mut it = upper.iter();
    for i in 0..r {
        for j in i..r {
            let v = *it.next().unwrap();
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    rows
}

pub fn measure(max_r: usize) -> impl Strategy<Value = WeightedMeasure> {
    prop::collection::vec(0.05f64..1.0, 1..=max_r)
        .prop_map(|w| WeightedMeasure::new(w).unwrap().normalized())
}

pub fn kernel(max_r: usize, max_value: f64) -> impl Strategy<Value = StepKernel> {
    measure(max_r).prop_flat_map(move |m| {
        let r = m.len();
        prop::collection::vec(0.0..max_value, r * (r + 1) / 2)
            .prop_map(move |u| StepKernel::new(&symmetric(r, &u), m.clone()).unwrap())
    })
}

pub fn signed(max_r: usize, bound: f64) -> impl Strategy<Value = StepFunction> {
    measure(max_r).prop_flat_map(move |m| {
        let r = m.len();
        prop::collection::vec(-bound..bound, r * (r + 1) / 2)
            .prop_map(move |u| StepFunction::new(&symmetric(r, &u), m.clone()).unwrap())
    })
}

/// Two signed step functions on one measure.
pub fn signed_pair(max_r: usize, bound: f64) -> impl Strategy<Value = (StepFunction, StepFunction)> {
    measure(max_r).prop_flat_map(move |m| {
        let r = m.len();
        let n = r * (r + 1) / 2;
        (prop::collection::vec(-bound..bound, n), prop::collection::vec(-bound..bound, n)).prop_map(
            move |(a, b)| {
                (
                    StepFunction::new(&symmetric(r, &a), m.clone()).unwrap(),
                    StepFunction::new(&symmetric(r, &b), m.clone()).unwrap(),
                )
            },
        )
    })
}

/// Two kernels on the uniform measure over `r` classes.
pub fn uniform_pair(min_r: usize, max_r: usize, max_value: f64) -> impl Strategy<Value = (StepKernel, StepKernel)> {
    (min_r..=max_r).prop_flat_map(move |r| {
        let n = r * (r + 1) / 2;
        (prop::collection::vec(0.0..max_value, n), prop::collection::vec(0.0..max_value, n)).prop_map(
            move |(a, b)| {
                let m = WeightedMeasure::uniform(r).unwrap();
                (
                    StepKernel::new(&symmetric(r, &a), m.clone()).unwrap(),
                    StepKernel::new(&symmetric(r, &b), m).unwrap(),
                )
            },
        )
    })
}

pub fn borel(c: f64, k: usize) -> f64 {
    let ln_fact: f64 = (1..=k).map(|x| (x as f64).ln()).sum();
    let ck = c * k as f64;
    if c == 0.0 {
        return if k == 1 { 1.0 } else { 0.0 };
    }
    ((k as f64 - 1.0) * ck.ln() - ck - ln_fact).exp()
}

/// Root of `rho = 1 - exp(-lambda rho)` in `(0, 1]` by bisection.
pub fn bisection_rho(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (1e-9, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - (1.0 - (-lambda * mid).exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `sum_{k > from} borel(c, k)`, summed far enough out to converge.
pub fn borel_tail(c: f64, from: usize) -> f64 {
    let mut ln_fact = 0.0;
    let mut total = 0.0;
    for k in 1..200_000usize {
        ln_fact += (k as f64).ln();
        if k > from {
            let ck = c * k as f64;
            total += ((k as f64 - 1.0) * ck.ln() - ck - ln_fact).exp();
        }
    }
    total
}
