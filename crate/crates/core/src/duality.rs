//! Dual kernels: what is left of a supercritical kernel once the part of the
//! type space that feeds the giant component is removed.

use serde::Serialize;

use crate::branching::{survival, SurvivalSolution};
use crate::error::{Error, Result};
use crate::kernel::{BlockMatrix, StepKernel, WeightedMeasure};

#[derive(Debug, Clone, PartialEq)]
pub struct DualBundle {
    pub rho: SurvivalSolution,
    /// Extinction probability `1 - rho(kappa; i)` per class.
    pub extinction_by_class: Vec<f64>,
    /// `w_i (1 - rho_i)`; total mass `1 - rho(kappa)`.
    pub mu_hat: WeightedMeasure,
    /// `mu_hat` rescaled to a probability measure.
    pub mu_hat_norm: WeightedMeasure,
    /// `kappa` on `mu_hat`.
    pub kappa_hat: StepKernel,
    /// `kappa` on `mu_hat_norm`.
    pub kappa_hathat: StepKernel,
    /// `(1 - rho(kappa)) kappa` on `mu_hat_norm`.
    pub kappa_tilde: StepKernel,
}

/// Solve for survival and build the dual measures and kernels.
///
/// Extinction probabilities are taken as `exp(-(T rho)_i)` rather than
/// `1 - rho_i` so they stay accurate when survival is close to certain.
pub fn dualize(kernel: &StepKernel, tol: f64, max_iter: usize) -> Result<DualBundle> {
    let rho = survival(kernel, tol, max_iter)?;
    if !rho.converged {
        return Err(Error::NonConvergence {
            iterations: rho.iterations,
            lower: rho.rho - rho.residual,
            upper: rho.rho + rho.residual,
        });
    }
    let extinction_by_class: Vec<f64> = if rho.rho == 0.0 {
        vec![1.0; kernel.classes()]
    } else {
        kernel
            .apply_operator(&rho.rho_by_class)?
            .into_iter()
            .map(|x| (-x).exp())
            .collect()
    };
    let hat_weights: Vec<f64> = kernel
        .weights()
        .iter()
        .zip(&extinction_by_class)
        .map(|(w, q)| w * q)
        .collect();
    if hat_weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::validation(
            "survival is certain; the dual measure cannot be normalized",
        ));
    }
    let mu_hat = WeightedMeasure::new(hat_weights)?;
    let mu_hat_norm = if rho.rho == 0.0 {
        mu_hat.clone()
    } else {
        mu_hat.normalized()
    };
    let kappa_hat = kernel.with_measure(mu_hat.clone())?;
    let kappa_hathat = kernel.with_measure(mu_hat_norm.clone())?;
    let kappa_tilde = if rho.rho == 0.0 {
        kappa_hathat.clone()
    } else {
        kappa_hathat.scale(mu_hat.total())?
    };
    Ok(DualBundle {
        rho,
        extinction_by_class,
        mu_hat,
        mu_hat_norm,
        kappa_hat,
        kappa_hathat,
        kappa_tilde,
    })
}

impl DualBundle {
    /// `||T_kappa_tilde||`; below one for bounded supercritical kernels.
    pub fn dual_operator_norm(&self) -> Result<f64> {
        self.kappa_tilde.operator_norm(1e-12)
    }

    pub fn summary(&self) -> Result<DualSummary> {
        Ok(DualSummary {
            rho: self.rho.rho,
            rho_by_class: self.rho.rho_by_class.clone(),
            residual: self.rho.residual,
            mu_hat_weights: self.mu_hat.weights().to_vec(),
            mu_hat_norm_weights: self.mu_hat_norm.weights().to_vec(),
            kappa_tilde_values: self.kappa_tilde.rows(),
            dual_operator_norm: self.dual_operator_norm()?,
        })
    }
}

/// Serializable view of a [`DualBundle`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSummary {
    pub rho: f64,
    pub rho_by_class: Vec<f64>,
    pub residual: f64,
    pub mu_hat_weights: Vec<f64>,
    pub mu_hat_norm_weights: Vec<f64>,
    pub kappa_tilde_values: Vec<Vec<f64>>,
    pub dual_operator_norm: f64,
}

/// `||T_kappa_tilde||` for the bundle.
pub fn dual_subcritical_check(bundle: &DualBundle) -> Result<f64> {
    bundle.dual_operator_norm()
}

/// `zeta(kappa) = 1/2 sum_ij w_i w_j kappa(i,j) (rho_i + rho_j - rho_i rho_j)`,
/// the limiting number of giant-component edges per vertex.
pub fn zeta(kernel: &StepKernel, rho: &SurvivalSolution) -> Result<f64> {
    let r = kernel.classes();
    let p = &rho.rho_by_class;
    if p.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: p.len(),
        });
    }
    let w = kernel.weights();
    let mut acc = 0.0;
    for i in 0..r {
        for j in 0..r {
            acc += w[i] * w[j] * kernel.value(i, j) * (p[i] + p[j] - p[i] * p[j]);
        }
    }
    Ok(0.5 * acc)
}

/// For the constant kernel `lambda > 1` with dual parameter
/// `lambda~ = lambda (1 - rho_lambda)`, returns
/// `|lambda~ exp(-lambda~) - lambda exp(-lambda)|`.
pub fn er_duality_residual(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::validation(format!(
            "conjugate parameter needs lambda > 1, got {lambda}"
        )));
    }
    let bundle = dualize(&StepKernel::constant(lambda)?, 1e-14, 10_000_000)?;
    let dual = lambda * bundle.mu_hat.total();
    Ok((dual * (-dual).exp() - lambda * (-lambda).exp()).abs())
}
