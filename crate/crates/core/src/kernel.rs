//! Finite-type (step) kernels and the measures they live on.
//!
//! A step kernel on `r` classes is a symmetric `r x r` matrix of block
//! values together with a [`WeightedMeasure`] giving the mass of each class.
//! Laid out on an interval, class `i` occupies a segment of length
//! `weights[i]` and the kernel is constant on each product of segments.

use crate::error::{Error, Result};

const MASS_RTOL: f64 = 1e-12;

/// Mass per class of a finite partition of the type space.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    weights: Vec<f64>,
    total: f64,
}

impl WeightedMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("measure needs at least one class"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation(format!(
                "class weights must be finite and non-negative, found {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::validation("measure has zero total mass"));
        }
        Ok(Self { weights, total })
    }

    /// `r` classes of mass `1/r` each.
    pub fn uniform(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::validation("measure needs at least one class"));
        }
        Self::new(vec![1.0 / r as f64; r])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_probability(&self) -> bool {
        (self.total - 1.0).abs() <= MASS_RTOL
    }

    /// The same measure rescaled to total mass one.
    pub fn normalized(&self) -> Self {
        let weights = self.weights.iter().map(|w| w / self.total).collect();
        Self::new(weights).expect("rescaling a valid measure")
    }

    pub(crate) fn require_probability(&self, what: &str) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "{what} requires a probability measure (total mass is {})",
                self.total
            )))
        }
    }

    fn same_as(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| (a - b).abs() <= MASS_RTOL * self.total.max(other.total))
    }
}

/// Anything that can be read as a block matrix over weighted classes.
///
/// Row and column classes share one measure; the matrix need not be
/// symmetric.
pub trait BlockMatrix {
    fn classes(&self) -> usize;
    fn value(&self, i: usize, j: usize) -> f64;
    fn measure(&self) -> &WeightedMeasure;

    /// `lambda(i) = sum_j value(i, j) * w_j`.
    fn row_marginal(&self) -> Vec<f64> {
        let w = self.measure().weights();
        (0..self.classes())
            .map(|i| (0..self.classes()).map(|j| self.value(i, j) * w[j]).sum())
            .collect()
    }

    fn column_marginal(&self) -> Vec<f64> {
        let w = self.measure().weights();
        (0..self.classes())
            .map(|j| (0..self.classes()).map(|i| self.value(i, j) * w[i]).sum())
            .collect()
    }

    /// Integral of the function over the square.
    fn integral(&self) -> f64 {
        let w = self.measure().weights();
        self.row_marginal().iter().zip(w).map(|(l, w)| l * w).sum()
    }

    /// Weighted entrywise absolute sum (the L1 norm on the square).
    fn l1_norm(&self) -> f64 {
        let w = self.measure().weights();
        let r = self.classes();
        let mut acc = 0.0;
        for i in 0..r {
            for j in 0..r {
                acc += self.value(i, j).abs() * w[i] * w[j];
            }
        }
        acc
    }
}

fn flatten_square(rows: &[Vec<f64>], r: usize) -> Result<Vec<f64>> {
    if rows.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: rows.len(),
        });
    }
    let mut flat = Vec::with_capacity(r * r);
    for row in rows {
        if row.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: row.len(),
            });
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite block value {v}")));
        }
        flat.extend_from_slice(row);
    }
    Ok(flat)
}

/// Symmetric real block function; models signed kernels and differences.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    values: Vec<f64>,
    measure: WeightedMeasure,
}

impl StepFunction {
    pub fn new(rows: &[Vec<f64>], measure: WeightedMeasure) -> Result<Self> {
        let r = measure.len();
        let values = flatten_square(rows, r)?;
        Self::from_flat(values, measure)
    }

    /// Row-major `r * r` values.
    pub fn from_flat(values: Vec<f64>, measure: WeightedMeasure) -> Result<Self> {
        let r = measure.len();
        if values.len() != r * r {
            return Err(Error::DimensionMismatch {
                expected: r * r,
                got: values.len(),
            });
        }
        for i in 0..r {
            for j in (i + 1)..r {
                if values[i * r + j] != values[j * r + i] {
                    return Err(Error::validation(format!(
                        "block values are not symmetric at ({i}, {j}): {} vs {}",
                        values[i * r + j],
                        values[j * r + i]
                    )));
                }
            }
        }
        Ok(Self { values, measure })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.classes())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `lambda_W(i) = sum_j W(i, j) w_j`; for symmetric `W` both marginals agree.
    pub fn marginal(&self) -> Vec<f64> {
        self.row_marginal()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.measure.same_as(&other.measure) {
            return Err(Error::validation(
                "step functions live on different measures; refine them first",
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op(*a, *b))
            .collect();
        Ok(Self {
            values,
            measure: self.measure.clone(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            measure: self.measure.clone(),
        }
    }

    /// Same block values over another measure with the same class count.
    pub fn with_measure(&self, measure: WeightedMeasure) -> Result<Self> {
        if measure.len() != self.classes() {
            return Err(Error::DimensionMismatch {
                expected: self.classes(),
                got: measure.len(),
            });
        }
        Ok(Self {
            values: self.values.clone(),
            measure,
        })
    }

    /// Relabel classes: the result has value `W(perm[i], perm[j])` and weight
    /// `w[perm[i]]` at class `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let r = self.classes();
        check_permutation(perm, r)?;
        let mut values = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                values[i * r + j] = self.values[perm[i] * r + perm[j]];
            }
        }
        let weights = perm.iter().map(|&p| self.measure.weight(p)).collect();
        Ok(Self {
            values,
            measure: WeightedMeasure::new(weights)?,
        })
    }
}

impl BlockMatrix for StepFunction {
    fn classes(&self) -> usize {
        self.measure.len()
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.classes() + j]
    }

    fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }
}

pub(crate) fn check_permutation(perm: &[usize], r: usize) -> Result<()> {
    if perm.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; r];
    for &p in perm {
        if p >= r || seen[p] {
            return Err(Error::validation(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Not necessarily symmetric block function, e.g. the damped kernels
/// `W^(a,b)` used by the tree functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedStepFunction {
    values: Vec<f64>,
    measure: WeightedMeasure,
}

impl DirectedStepFunction {
    pub fn from_flat(values: Vec<f64>, measure: WeightedMeasure) -> Result<Self> {
        let r = measure.len();
        if values.len() != r * r {
            return Err(Error::DimensionMismatch {
                expected: r * r,
                got: values.len(),
            });
        }
        Ok(Self { values, measure })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl BlockMatrix for DirectedStepFunction {
    fn classes(&self) -> usize {
        self.measure.len()
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.classes() + j]
    }

    fn measure(&self) -> &WeightedMeasure {
        &self.measure
    }
}

/// Power-iteration controls for [`StepKernel::operator_norm_with`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

/// Non-negative symmetric step function.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel(StepFunction);

impl StepKernel {
    pub fn new(rows: &[Vec<f64>], measure: WeightedMeasure) -> Result<Self> {
        StepFunction::new(rows, measure).and_then(Self::try_from_function)
    }

    pub fn from_flat(values: Vec<f64>, measure: WeightedMeasure) -> Result<Self> {
        StepFunction::from_flat(values, measure).and_then(Self::try_from_function)
    }

    pub fn try_from_function(function: StepFunction) -> Result<Self> {
        if let Some(v) = function.values.iter().find(|v| **v < 0.0) {
            return Err(Error::validation(format!(
                "kernel values must be non-negative, found {v}"
            )));
        }
        Ok(Self(function))
    }

    /// The piecewise-constant kernel of a symmetric non-negative `n x n`
    /// matrix: uniform weights `1/n`, block values `a_ij`.
    pub fn from_matrix(a: &[Vec<f64>]) -> Result<Self> {
        Self::new(a, WeightedMeasure::uniform(a.len())?)
    }

    /// `c` on a single class of mass one.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(&[vec![c]], WeightedMeasure::new(vec![1.0])?)
    }

    pub fn as_function(&self) -> &StepFunction {
        &self.0
    }

    pub fn into_function(self) -> StepFunction {
        self.0
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }

    pub fn weights(&self) -> &[f64] {
        self.0.measure.weights()
    }

    pub fn marginal(&self) -> Vec<f64> {
        self.0.marginal()
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::try_from_function(self.0.scale(c))
    }

    pub fn with_measure(&self, measure: WeightedMeasure) -> Result<Self> {
        self.0.with_measure(measure).map(Self)
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        self.0.permuted(perm).map(Self)
    }

    /// `(T f)(i) = sum_j kappa(i, j) f(j) w_j`.
    pub fn apply_operator(&self, f: &[f64]) -> Result<Vec<f64>> {
        let r = self.classes();
        if f.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: f.len(),
            });
        }
        let w = self.weights();
        Ok((0..r)
            .map(|i| {
                let row = &self.0.values[i * r..(i + 1) * r];
                row.iter()
                    .zip(f)
                    .zip(w)
                    .map(|((k, f), w)| k * f * w)
                    .sum()
            })
            .collect())
    }

    /// `sqrt(w_i) kappa(i, j) sqrt(w_j)`; its spectral norm is the norm of
    /// the integral operator on `L^2(mu)`.
    pub fn symmetrized_weighted(&self) -> Vec<f64> {
        let r = self.classes();
        let sw: Vec<f64> = self.weights().iter().map(|w| w.sqrt()).collect();
        let mut s = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                s[i * r + j] = sw[i] * self.0.values[i * r + j] * sw[j];
            }
        }
        s
    }

    pub fn operator_norm(&self, tol: f64) -> Result<f64> {
        self.operator_norm_with(PowerIteration {
            tol,
            ..PowerIteration::default()
        })
    }

    /// `||T_kappa||` by power iteration on the symmetrized weighted matrix,
    /// started from the all-ones vector.
    pub fn operator_norm_with(&self, opts: PowerIteration) -> Result<f64> {
        if !(opts.tol > 0.0) {
            return Err(Error::validation("power iteration tolerance must be positive"));
        }
        let r = self.classes();
        let s = self.symmetrized_weighted();
        let matvec = |x: &[f64]| -> Vec<f64> {
            (0..r)
                .map(|i| s[i * r..(i + 1) * r].iter().zip(x).map(|(a, b)| a * b).sum())
                .collect()
        };
        let mut x = vec![1.0 / (r as f64).sqrt(); r];
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..opts.max_iter {
            let y = matvec(&x);
            let est = norm2(&y);
            if est == 0.0 {
                return Ok(0.0);
            }
            if (est - prev).abs() < opts.tol {
                return Ok(est);
            }
            prev = est;
            x = y.into_iter().map(|v| v / est).collect();
        }
        // Collatz-Wielandt bound when the iterate is positive, Frobenius otherwise.
        let y = matvec(&x);
        let upper = if x.iter().all(|v| *v > 0.0) {
            y.iter().zip(&x).map(|(a, b)| a / b).fold(0.0, f64::max)
        } else {
            norm2(&s)
        };
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            lower: prev,
            upper,
        })
    }

    /// Whether the kernel is irreducible as a kernel on the interval layout.
    ///
    /// Classes of zero mass are ignored. Positive classes are joined when the
    /// block value between them is positive; the kernel is irreducible iff
    /// that graph is connected, except that a lone positive class also needs
    /// a positive diagonal value (otherwise it can be split in two halves
    /// with nothing between them).
    pub fn is_irreducible(&self) -> bool {
        let r = self.classes();
        let live: Vec<usize> = (0..r).filter(|&i| self.weights()[i] > 0.0).collect();
        if live.len() == 1 {
            let i = live[0];
            return self.value(i, i) > 0.0;
        }
        let mut seen = vec![false; r];
        let mut stack = vec![live[0]];
        seen[live[0]] = true;
        let mut reached = 1;
        while let Some(i) = stack.pop() {
            for &j in &live {
                if !seen[j] && self.value(i, j) > 0.0 {
                    seen[j] = true;
                    reached += 1;
                    stack.push(j);
                }
            }
        }
        reached == live.len()
    }

    /// Same block values on the measure with weights `w_i h(i)`.
    pub fn reweight(&self, h: &[f64]) -> Result<Self> {
        if h.len() != self.classes() {
            return Err(Error::DimensionMismatch {
                expected: self.classes(),
                got: h.len(),
            });
        }
        if let Some(x) = h.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::validation(format!(
                "reweighting density must be non-negative, found {x}"
            )));
        }
        let weights = self.weights().iter().zip(h).map(|(w, h)| w * h).collect();
        self.with_measure(WeightedMeasure::new(weights)?)
    }

    /// `m_delta(kappa)`: the largest integral of the marginal over a set of
    /// mass at most `delta`.
    ///
    /// The marginal is constant on classes, so the optimal set takes whole
    /// classes in decreasing marginal order and a fraction of the boundary
    /// class.
    pub fn tail_marginal(&self, delta: f64) -> Result<f64> {
        let total = self.measure().total();
        if !(0.0..=total * (1.0 + MASS_RTOL)).contains(&delta) {
            return Err(Error::validation(format!(
                "delta = {delta} outside [0, {total}]"
            )));
        }
        let lambda = self.marginal();
        let mut order: Vec<usize> = (0..self.classes()).collect();
        order.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]));
        let mut left = delta;
        let mut acc = 0.0;
        for i in order {
            if left <= 0.0 {
                break;
            }
            let take = self.weights()[i].min(left);
            acc += take * lambda[i];
            left -= take;
        }
        Ok(acc)
    }

    /// `W^(a,b)(i, j) = exp(-a lambda(i)) W(i, j) exp(-b lambda(j))`.
    pub fn exponent_damped(&self, a: f64, b: f64) -> Result<DirectedStepFunction> {
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::validation("damping exponents must be non-negative"));
        }
        let r = self.classes();
        let lambda = self.marginal();
        let left: Vec<f64> = lambda.iter().map(|l| (-a * l).exp()).collect();
        let right: Vec<f64> = lambda.iter().map(|l| (-b * l).exp()).collect();
        let mut values = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                values[i * r + j] = left[i] * self.value(i, j) * right[j];
            }
        }
        DirectedStepFunction::from_flat(values, self.measure().clone())
    }

    /// Difference as a signed step function; both kernels must share a measure.
    pub fn difference(&self, other: &Self) -> Result<StepFunction> {
        self.0.sub(&other.0)
    }
}

impl BlockMatrix for StepKernel {
    fn classes(&self) -> usize {
        self.0.classes()
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.0.value(i, j)
    }

    fn measure(&self) -> &WeightedMeasure {
        &self.0.measure
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Class `piece` of a common refinement lies inside class `left[piece]` of
/// the first kernel and `right[piece]` of the second.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub first: StepKernel,
    pub second: StepKernel,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Re-express two kernels of equal total mass over a shared partition.
///
/// Both class lists are laid out left to right on an interval and cut at
/// the union of their breakpoints; pieces keep the value of the class they
/// came from.
pub fn common_refinement(k1: &StepKernel, k2: &StepKernel) -> Result<Refinement> {
    let (t1, t2) = (k1.measure().total(), k2.measure().total());
    if (t1 - t2).abs() > 1e-9 * t1.max(t2) {
        return Err(Error::validation(format!(
            "total masses differ: {t1} vs {t2}"
        )));
    }
    if k1.measure().same_as(k2.measure()) {
        let ident: Vec<usize> = (0..k1.classes()).collect();
        return Ok(Refinement {
            first: k1.clone(),
            second: k2.clone(),
            left: ident.clone(),
            right: ident,
        });
    }
    let cumulative = |w: &[f64], total: f64| {
        let mut c = Vec::with_capacity(w.len() + 1);
        let mut acc = 0.0;
        c.push(0.0);
        for x in w {
            acc += x;
            c.push(acc);
        }
        // both layouts end at the same point
        *c.last_mut().unwrap() = total;
        c
    };
    let total = t1.max(t2);
    let c1 = cumulative(k1.weights(), total);
    let c2 = cumulative(k2.weights(), total);
    let eps = MASS_RTOL * total;
    let (r1, r2) = (k1.classes(), k2.classes());
    let (mut i, mut j) = (0, 0);
    let mut pos = 0.0;
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut weights = Vec::new();
    while i < r1 && j < r2 {
        let (e1, e2) = (c1[i + 1], c2[j + 1]);
        let (end, adv1, adv2) = if (e1 - e2).abs() <= eps {
            (e1.max(e2), true, true)
        } else if e1 < e2 {
            (e1, true, false)
        } else {
            (e2, false, true)
        };
        if end - pos > eps {
            left.push(i);
            right.push(j);
            weights.push(end - pos);
            pos = end;
        }
        i += usize::from(adv1);
        j += usize::from(adv2);
    }
    let measure = WeightedMeasure::new(weights)?;
    let lift = |k: &StepKernel, map: &[usize]| {
        let p = map.len();
        let mut values = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..p {
                values[a * p + b] = k.value(map[a], map[b]);
            }
        }
        StepKernel::from_flat(values, measure.clone())
    };
    Ok(Refinement {
        first: lift(k1, &left)?,
        second: lift(k2, &right)?,
        left,
        right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform2(rows: [[f64; 2]; 2]) -> StepKernel {
        StepKernel::new(
            &[rows[0].to_vec(), rows[1].to_vec()],
            WeightedMeasure::uniform(2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn from_matrix_examples() {
        let k = StepKernel::from_matrix(&[vec![0.0]]).unwrap();
        assert_eq!(k.values(), &[0.0]);
        assert_eq!(k.weights(), &[1.0]);

        let k = StepKernel::from_matrix(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(k.weights(), &[0.5, 0.5]);
        assert!(k.values().iter().all(|v| *v == 2.0));

        let k = StepKernel::from_matrix(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        // 2 * (1/4 * 3)
        assert!((k.integral() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn from_matrix_rejects_bad_input() {
        assert!(matches!(
            StepKernel::from_matrix(&[vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            StepKernel::from_matrix(&[vec![-1.0]]),
            Err(Error::Validation(_))
        ));
        assert!(StepKernel::from_matrix(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn marginal_examples() {
        assert_eq!(StepKernel::constant(0.7).unwrap().marginal(), vec![0.7]);
        let k = uniform2([[4.0, 0.0], [0.0, 1.0]]);
        assert_eq!(k.marginal(), vec![2.0, 0.5]);
        assert_eq!(uniform2([[0.0; 2]; 2]).marginal(), vec![0.0, 0.0]);
    }

    #[test]
    fn operator_examples() {
        let k = uniform2([[0.0, 4.0], [4.0, 0.0]]);
        assert_eq!(k.apply_operator(&[1.0, 0.0]).unwrap(), vec![0.0, 2.0]);
        assert_eq!(k.apply_operator(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let c = StepKernel::constant(3.0).unwrap();
        assert_eq!(c.apply_operator(&[1.0]).unwrap(), vec![3.0]);
        assert!(matches!(
            k.apply_operator(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn operator_norm_examples() {
        let c = StepKernel::constant(2.5).unwrap();
        assert!((c.operator_norm(1e-12).unwrap() - 2.5).abs() < 1e-12);
        let k = uniform2([[0.0, 4.0], [4.0, 0.0]]);
        assert!((k.operator_norm(1e-12).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(uniform2([[0.0; 2]; 2]).operator_norm(1e-10).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_cap_reports_bracket() {
        let k = StepKernel::new(
            &[vec![1.0, 0.5, 0.0], vec![0.5, 0.9, 0.2], vec![0.0, 0.2, 0.3]],
            WeightedMeasure::uniform(3).unwrap(),
        )
        .unwrap();
        let err = k
            .operator_norm_with(PowerIteration {
                tol: 1e-300,
                max_iter: 3,
            })
            .unwrap_err();
        match err {
            Error::NonConvergence { lower, upper, .. } => assert!(lower <= upper),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn irreducibility_examples() {
        assert!(StepKernel::constant(2.0).unwrap().is_irreducible());
        assert!(!uniform2([[1.0, 0.0], [0.0, 1.0]]).is_irreducible());
        assert!(uniform2([[0.0, 1.0], [1.0, 0.0]]).is_irreducible());
        assert!(!StepKernel::constant(0.0).unwrap().is_irreducible());
        // zero-mass classes do not count
        let k = StepKernel::new(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            WeightedMeasure::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert!(k.is_irreducible());
    }

    #[test]
    fn reweight_examples() {
        let k = uniform2([[1.0, 2.0], [2.0, 0.5]]);
        assert_eq!(k.reweight(&[1.0, 1.0]).unwrap(), k);
        assert_eq!(k.reweight(&[2.0, 2.0]).unwrap().weights(), &[1.0, 1.0]);
        let one = k.reweight(&[1.0, 0.0]).unwrap();
        assert_eq!(one.weights(), &[0.5, 0.0]);
        assert_eq!(one.marginal(), vec![0.5, 1.0]);
        assert!(k.reweight(&[0.0, 0.0]).is_err());
        assert!(k.reweight(&[-1.0, 1.0]).is_err());
    }

    #[test]
    fn tail_marginal_examples() {
        let k = uniform2([[4.0, 0.0], [0.0, 1.0]]);
        assert_eq!(k.tail_marginal(0.0).unwrap(), 0.0);
        assert!((k.tail_marginal(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((k.tail_marginal(1.0).unwrap() - k.integral()).abs() < 1e-15);
        let c = StepKernel::constant(1.7).unwrap();
        for d in [0.1, 0.33, 0.9] {
            assert!((c.tail_marginal(d).unwrap() - 1.7 * d).abs() < 1e-15);
        }
        assert!(k.tail_marginal(1.5).is_err());
        assert!(k.tail_marginal(-0.1).is_err());
    }

    #[test]
    fn exponent_damped_examples() {
        let k = uniform2([[1.0, 2.0], [2.0, 0.5]]);
        let same = k.exponent_damped(0.0, 0.0).unwrap();
        assert_eq!(same.values(), k.values());

        let c = StepKernel::constant(1.3).unwrap();
        let d = c.exponent_damped(1.0, 1.0).unwrap();
        assert!((d.value(0, 0) - 1.3 * (-2.6f64).exp()).abs() < 1e-15);

        let z = uniform2([[0.0; 2]; 2]).exponent_damped(0.3, 2.0).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        assert!(k.exponent_damped(-1.0, 0.0).is_err());
    }

    #[test]
    fn damped_marginal_is_bounded() {
        let k = StepKernel::new(
            &[vec![9.0, 0.1, 3.0], vec![0.1, 0.0, 7.0], vec![3.0, 7.0, 1.0]],
            WeightedMeasure::new(vec![0.2, 0.5, 0.3]).unwrap(),
        )
        .unwrap();
        for a in [0.25, 1.0, 3.0] {
            let d = k.exponent_damped(a, 0.5).unwrap();
            let bound = 1.0 / (a * std::f64::consts::E);
            assert!(d.row_marginal().iter().all(|m| *m <= bound));
        }
    }

    #[test]
    fn refinement_examples() {
        let a = uniform2([[1.0, 2.0], [2.0, 3.0]]);
        let r = common_refinement(&a, &a).unwrap();
        assert_eq!(r.first, a);
        assert_eq!(r.second, a);

        let b = StepKernel::new(
            &[vec![5.0, 6.0], vec![6.0, 7.0]],
            WeightedMeasure::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap(),
        )
        .unwrap();
        let r = common_refinement(&a, &b).unwrap();
        let w = r.first.weights();
        assert_eq!(w.len(), 3);
        for (got, want) in w.iter().zip([1.0 / 3.0, 1.0 / 6.0, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(r.left, vec![0, 0, 1]);
        assert_eq!(r.right, vec![0, 1, 1]);
        assert_eq!(r.first.value(0, 1), 1.0);
        assert_eq!(r.first.value(1, 2), 2.0);
        assert_eq!(r.second.value(0, 1), 6.0);
        assert_eq!(r.second.value(1, 2), 7.0);

        let c1 = StepKernel::constant(2.0).unwrap();
        let c2 = StepKernel::constant(2.5).unwrap();
        let r = common_refinement(&c1, &c2).unwrap();
        assert_eq!((r.first, r.second), (c1, c2));

        let heavy = a.reweight(&[2.0, 2.0]).unwrap();
        assert!(common_refinement(&a, &heavy).is_err());
    }

    #[test]
    fn measure_invariants() {
        assert!(WeightedMeasure::new(vec![]).is_err());
        assert!(WeightedMeasure::new(vec![0.0, 0.0]).is_err());
        assert!(WeightedMeasure::new(vec![0.5, -0.1]).is_err());
        let m = WeightedMeasure::new(vec![0.25, 0.75]).unwrap();
        assert!(m.is_probability());
        let m = WeightedMeasure::new(vec![1.0, 3.0]).unwrap();
        assert!(!m.is_probability());
        assert!(m.normalized().is_probability());
    }
}
