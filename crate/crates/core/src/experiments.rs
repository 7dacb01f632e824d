//! Seeded Monte Carlo experiments on `G(A_n)` and their reports.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::{rho_k_tree, survival, SurvivalSolution};
use crate::cut::{cut_norm_exact, stream_rng};
use crate::duality::{dualize, zeta};
use crate::error::{Error, Result};
use crate::graph::{
    component_sum, components, dual_matrix, materialize, remove_giant, sample, type_census,
    ComponentDecomposition, VertexSet,
};
use crate::io::{fmt_sig, read_kernel, to_json};
use crate::kernel::{common_refinement, BlockMatrix, StepKernel, WeightedMeasure};
use crate::trees::TREE_ENUMERATION_CAP;

const STREAM_GRAPH: u64 = 0;
const STREAM_DUAL: u64 = 1;
const STREAM_LADDER: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

fn default_reps() -> usize {
    20
}
fn default_n() -> usize {
    20_000
}
fn default_k_max() -> usize {
    6
}
fn default_ladder() -> Vec<usize> {
    vec![2000, 8000, 20_000]
}
fn default_tolerance() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    1_000_000
}

/// Everything an experiment needs besides the kernel itself. Loadable from
/// TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kernel: Option<PathBuf>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_ladder")]
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Convergence tolerance for the survival solver.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Per-class test function for the component-sum check.
    #[serde(default)]
    pub f: Option<Vec<f64>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel: None,
            n: default_n(),
            n_ladder: default_ladder(),
            reps: default_reps(),
            seed: 0,
            k_max: default_k_max(),
            tolerance: default_tolerance(),
            max_iter: default_max_iter(),
            f: None,
            out: None,
            format: Format::Json,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::validation("reps must be at least 1"));
        }
        if let Some(n) = std::iter::once(self.n).chain(self.n_ladder.iter().copied()).find(|&n| n < 10) {
            return Err(Error::validation(format!("n must be at least 10, got {n}")));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::validation("n does not fit vertex labels"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::validation("tolerance must be positive"));
        }
        if self.k_max == 0 || self.k_max > TREE_ENUMERATION_CAP {
            return Err(Error::CapExceeded {
                what: "k_max",
                got: self.k_max,
                cap: TREE_ENUMERATION_CAP,
                hint: "tree sums need k between 1 and the enumeration cap",
            });
        }
        Ok(())
    }

    pub fn load_kernel(&self) -> Result<StepKernel> {
        match &self.kernel {
            Some(path) => read_kernel(path),
            None => Err(Error::validation("no kernel file given")),
        }
    }

    fn survival(&self, kernel: &StepKernel) -> Result<SurvivalSolution> {
        let s = survival(kernel, self.tolerance, self.max_iter)?;
        if !s.converged {
            return Err(Error::NonConvergence {
                iterations: s.iterations,
                lower: s.rho - s.residual,
                upper: s.rho + s.residual,
            });
        }
        Ok(s)
    }
}

/// Seed for repetition `rep` of stream `stream`.
pub fn derive_seed(seed: u64, stream: u64, rep: usize) -> u64 {
    stream_rng(seed, (stream << 32) | rep as u64).next_u64()
}

/// Mean and standard error of per-repetition values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatSummary {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(reps)`; zero for one repetition.
    pub stderr: f64,
    pub reps: usize,
    pub values: Vec<f64>,
}

impl StatSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let reps = values.len();
        if reps == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                reps,
                values,
            };
        }
        let mean = values.iter().sum::<f64>() / reps as f64;
        let stderr = if reps > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            (var / reps as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            reps,
            values,
        }
    }

    /// `(mean - target) / stderr`; infinite when the stderr is zero and the
    /// mean misses.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn column(rows: &[Vec<f64>], j: usize) -> StatSummary {
    StatSummary::from_values(rows.iter().map(|r| r[j]).collect())
}

/// Tabular, serializable experiment output.
pub trait Report: Serialize {
    fn csv_header(&self) -> Vec<String>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

fn require_irreducible(kernel: &StepKernel) -> Result<()> {
    if !kernel.is_irreducible() {
        return Err(Error::validation(
            "kernel is reducible; the giant-component limits assume irreducibility",
        ));
    }
    Ok(())
}

fn in_parallel<T: Send>(reps: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..reps).into_par_iter().map(f).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GiantRow {
    pub seed: u64,
    pub c1_frac: f64,
    pub c2_frac: f64,
    pub edges_c1_per_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GiantReport {
    pub n: usize,
    pub reps: usize,
    pub rho: f64,
    pub zeta: f64,
    pub c1_frac: StatSummary,
    pub c2_frac: StatSummary,
    pub edges_c1_per_n: StatSummary,
    pub rows: Vec<GiantRow>,
}

impl Report for GiantReport {
    fn csv_header(&self) -> Vec<String> {
        ["seed", "c1_frac", "c2_frac", "edges_c1_per_n"].map(String::from).to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.seed.to_string(),
                    fmt_sig(r.c1_frac),
                    fmt_sig(r.c2_frac),
                    fmt_sig(r.edges_c1_per_n),
                ]
            })
            .collect()
    }
}

pub fn run_giant_experiment(kernel: &StepKernel, cfg: &ExperimentConfig) -> Result<GiantReport> {
    cfg.validate()?;
    require_irreducible(kernel)?;
    let rho = cfg.survival(kernel)?;
    let a = materialize(kernel, cfg.n)?;
    let rows = in_parallel(cfg.reps, |rep| {
        let seed = derive_seed(cfg.seed, STREAM_GRAPH, rep);
        let g = sample(&a, seed);
        let comp = components(&g);
        let n = cfg.n as f64;
        Ok(GiantRow {
            seed,
            c1_frac: comp.giant_size() as f64 / n,
            c2_frac: comp.second_size() as f64 / n,
            edges_c1_per_n: comp.edges_within()[0] as f64 / n,
        })
    })?;
    Ok(GiantReport {
        n: cfg.n,
        reps: cfg.reps,
        rho: rho.rho,
        zeta: zeta(kernel, &rho)?,
        c1_frac: StatSummary::from_values(rows.iter().map(|r| r.c1_frac).collect()),
        c2_frac: StatSummary::from_values(rows.iter().map(|r| r.c2_frac).collect()),
        edges_c1_per_n: StatSummary::from_values(rows.iter().map(|r| r.edges_c1_per_n).collect()),
        rows,
    })
}

/// Fraction of the decomposition's vertices in components of each size
/// `1..=k_max`.
fn spectrum(comp: &ComponentDecomposition, k_max: usize) -> Vec<f64> {
    (1..=k_max).map(|k| comp.vertex_fraction_in_size(k)).collect()
}

/// Upper bound on the cut distance between the step kernel that the census
/// `nu` induces on the surviving vertices and `target`: the exact cut norm
/// of their difference over the order-preserving common refinement.
pub fn census_cut_bound(kernel: &StepKernel, census: &[f64], target: &StepKernel) -> Result<f64> {
    if census.iter().sum::<f64>() <= 0.0 {
        return Err(Error::validation("empty census"));
    }
    let empirical = kernel.with_measure(WeightedMeasure::new(census.to_vec())?.normalized())?;
    let refined = common_refinement(&empirical, target)?;
    let diff = refined.first.difference(&refined.second)?;
    Ok(cut_norm_exact(&diff)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderPoint {
    pub n: usize,
    pub bound: StatSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityExperiment {
    pub n: usize,
    pub reps: usize,
    pub k_max: usize,
    pub rho: f64,
    pub rho_by_class: Vec<f64>,
    /// `1 - rho`.
    pub m_over_n_target: f64,
    pub m_over_n: StatSummary,
    /// `w_i (1 - rho_i)`.
    pub census_target: Vec<f64>,
    pub census: Vec<StatSummary>,
    /// `rho_k` of the dual kernel for `k = 1..=k_max`.
    pub spectrum_target: Vec<f64>,
    /// Fraction of the giant-free graph's vertices in size-`k` components.
    pub spectrum_tilde: Vec<StatSummary>,
    /// The same for fresh samples of `G(B_n)`.
    pub spectrum_fresh: Vec<StatSummary>,
    /// Two-sample z statistics, giant-free graph against `G(B_n)`.
    pub two_sample_z: Vec<f64>,
    pub dual_operator_norm: f64,
    pub census_cut_bound: Vec<LadderPoint>,
    pub rows: Vec<DualityRow>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityRow {
    pub seed: u64,
    pub fresh_seed: u64,
    pub m_over_n: f64,
    pub census: Vec<f64>,
    pub spectrum_tilde: Vec<f64>,
    pub spectrum_fresh: Vec<f64>,
}

impl Report for DualityExperiment {
    fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["seed", "fresh_seed", "m_over_n"].map(String::from).to_vec();
        h.extend((1..=self.census_target.len()).map(|i| format!("nu_{i}")));
        h.extend((1..=self.k_max).map(|k| format!("tilde_k{k}")));
        h.extend((1..=self.k_max).map(|k| format!("fresh_k{k}")));
        h
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![r.seed.to_string(), r.fresh_seed.to_string(), fmt_sig(r.m_over_n)];
                row.extend(r.census.iter().chain(&r.spectrum_tilde).chain(&r.spectrum_fresh).map(|&x| fmt_sig(x)));
                row
            })
            .collect()
    }
}

fn two_sample_z(a: &StatSummary, b: &StatSummary) -> f64 {
    let d = a.mean - b.mean;
    if d == 0.0 {
        return 0.0;
    }
    d / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

/// Strip the giant from `G(A_n)` and compare what is left with the dual
/// kernel and with fresh samples of `G(B_n)`, `B_n = (m/n) A~_n`.
///
/// The comparison is distributional: fresh samples of `G(B_n)` are not
/// conditioned on having no large component.
pub fn run_duality_experiment(kernel: &StepKernel, cfg: &ExperimentConfig) -> Result<DualityExperiment> {
    cfg.validate()?;
    require_irreducible(kernel)?;
    let bundle = dualize(kernel, cfg.tolerance, cfg.max_iter)?;
    if bundle.rho.rho == 0.0 {
        return Err(Error::validation("kernel is not supercritical"));
    }
    let spectrum_target: Vec<f64> = (1..=cfg.k_max)
        .map(|k| rho_k_tree(&bundle.kappa_tilde, k).map(|r| r.aggregate))
        .collect::<Result<_>>()?;
    let a = materialize(kernel, cfg.n)?;
    let n = cfg.n;
    let rows = in_parallel(cfg.reps, |rep| {
        let seed = derive_seed(cfg.seed, STREAM_GRAPH, rep);
        let fresh_seed = derive_seed(cfg.seed, STREAM_DUAL, rep);
        let g = sample(&a, seed);
        let comp = components(&g);
        let removed = remove_giant(&g, &a, &comp)?;
        let m = removed.graph.n();
        let tilde = components(&removed.graph);
        let b = dual_matrix(&removed.matrix, m, n)?;
        let fresh = components(&sample(&b, fresh_seed));
        Ok(DualityRow {
            seed,
            fresh_seed,
            m_over_n: m as f64 / n as f64,
            census: type_census(&comp, &a, true),
            spectrum_tilde: spectrum(&tilde, cfg.k_max),
            spectrum_fresh: spectrum(&fresh, cfg.k_max),
        })
    })?;
    let r = kernel.classes();
    let census_rows: Vec<Vec<f64>> = rows.iter().map(|row| row.census.clone()).collect();
    let tilde_rows: Vec<Vec<f64>> = rows.iter().map(|row| row.spectrum_tilde.clone()).collect();
    let fresh_rows: Vec<Vec<f64>> = rows.iter().map(|row| row.spectrum_fresh.clone()).collect();
    let spectrum_tilde: Vec<StatSummary> = (0..cfg.k_max).map(|k| column(&tilde_rows, k)).collect();
    let spectrum_fresh: Vec<StatSummary> = (0..cfg.k_max).map(|k| column(&fresh_rows, k)).collect();
    let two_sample = spectrum_tilde
        .iter()
        .zip(&spectrum_fresh)
        .map(|(a, b)| two_sample_z(a, b))
        .collect();

    let mut ladder = Vec::with_capacity(cfg.n_ladder.len());
    for &size in &cfg.n_ladder {
        let a = materialize(kernel, size)?;
        let bounds = in_parallel(cfg.reps, |rep| {
            let g = sample(&a, derive_seed(cfg.seed, STREAM_LADDER, rep));
            let census = type_census(&components(&g), &a, true);
            census_cut_bound(kernel, &census, &bundle.kappa_hathat)
        })?;
        ladder.push(LadderPoint {
            n: size,
            bound: StatSummary::from_values(bounds),
        });
    }

    Ok(DualityExperiment {
        n,
        reps: cfg.reps,
        k_max: cfg.k_max,
        rho: bundle.rho.rho,
        rho_by_class: bundle.rho.rho_by_class.clone(),
        m_over_n_target: bundle.mu_hat.total(),
        m_over_n: StatSummary::from_values(rows.iter().map(|r| r.m_over_n).collect()),
        census_target: bundle.mu_hat.weights().to_vec(),
        census: (0..r).map(|i| column(&census_rows, i)).collect(),
        spectrum_target,
        spectrum_tilde,
        spectrum_fresh,
        two_sample_z: two_sample,
        dual_operator_norm: bundle.dual_operator_norm()?,
        census_cut_bound: ladder,
        rows,
        note: "giant-free graph compared with G(B_n) in distribution; conditioning on no large \
               component in G(B_n) is ignored"
            .into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TlfRow {
    pub seed: u64,
    pub giant_sum: f64,
    pub rest_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TlfReport {
    pub n: usize,
    pub f: Vec<f64>,
    /// `sum_i w_i f(i) rho_i`.
    pub giant_target: f64,
    /// `sum_i w_i f(i) (1 - rho_i)`.
    pub rest_target: f64,
    pub giant_sum: StatSummary,
    pub rest_sum: StatSummary,
    pub rows: Vec<TlfRow>,
}

impl Report for TlfReport {
    fn csv_header(&self) -> Vec<String> {
        ["seed", "giant_sum", "rest_sum"].map(String::from).to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![r.seed.to_string(), fmt_sig(r.giant_sum), fmt_sig(r.rest_sum)])
            .collect()
    }
}

/// `(1/n) sum f(v)` over the giant and over its complement, against
/// `int f rho` and `int f (1 - rho)`.
pub fn run_tlf_check(kernel: &StepKernel, cfg: &ExperimentConfig, f: &[f64]) -> Result<TlfReport> {
    cfg.validate()?;
    if f.len() != kernel.classes() {
        return Err(Error::DimensionMismatch {
            expected: kernel.classes(),
            got: f.len(),
        });
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("f must be finite"));
    }
    let rho = cfg.survival(kernel)?;
    let w = kernel.weights();
    let giant_target = (0..f.len()).map(|i| w[i] * f[i] * rho.rho_by_class[i]).sum();
    let rest_target = (0..f.len()).map(|i| w[i] * f[i] * (1.0 - rho.rho_by_class[i])).sum();
    let a = materialize(kernel, cfg.n)?;
    let rows = in_parallel(cfg.reps, |rep| {
        let seed = derive_seed(cfg.seed, STREAM_GRAPH, rep);
        let comp = components(&sample(&a, seed));
        Ok(TlfRow {
            seed,
            giant_sum: component_sum(&comp, &a, f, VertexSet::Giant, None)?,
            rest_sum: component_sum(&comp, &a, f, VertexSet::NonGiant, None)?,
        })
    })?;
    Ok(TlfReport {
        n: cfg.n,
        f: f.to_vec(),
        giant_target,
        rest_target,
        giant_sum: StatSummary::from_values(rows.iter().map(|r| r.giant_sum).collect()),
        rest_sum: StatSummary::from_values(rows.iter().map(|r| r.rest_sum).collect()),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub k_max: usize,
    /// `rho_k(kappa)` for `k = 1..=k_max`.
    pub target: Vec<f64>,
    pub observed: Vec<StatSummary>,
    pub z: Vec<f64>,
    /// `sum_k (observed_k - target_k)^2 / target_k` over `k` with a positive
    /// target.
    pub chi2: f64,
    pub seeds: Vec<u64>,
}

impl Report for SpectrumReport {
    fn csv_header(&self) -> Vec<String> {
        ["k", "target", "mean", "stderr", "z"].map(String::from).to_vec()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.k_max)
            .map(|k| {
                vec![
                    (k + 1).to_string(),
                    fmt_sig(self.target[k]),
                    fmt_sig(self.observed[k].mean),
                    fmt_sig(self.observed[k].stderr),
                    fmt_sig(self.z[k]),
                ]
            })
            .collect()
    }
}

/// Size spectrum of `G(A_n)` against the branching-process `rho_k`.
pub fn run_spectrum_compare(kernel: &StepKernel, cfg: &ExperimentConfig) -> Result<SpectrumReport> {
    cfg.validate()?;
    let target: Vec<f64> = (1..=cfg.k_max)
        .map(|k| rho_k_tree(kernel, k).map(|r| r.aggregate))
        .collect::<Result<_>>()?;
    let a = materialize(kernel, cfg.n)?;
    let rows = in_parallel(cfg.reps, |rep| {
        let seed = derive_seed(cfg.seed, STREAM_GRAPH, rep);
        Ok((seed, spectrum(&components(&sample(&a, seed)), cfg.k_max)))
    })?;
    let values: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
    let observed: Vec<StatSummary> = (0..cfg.k_max).map(|k| column(&values, k)).collect();
    let z = observed.iter().zip(&target).map(|(o, t)| o.z_score(*t)).collect();
    let chi2 = observed
        .iter()
        .zip(&target)
        .filter(|(_, t)| **t > 0.0)
        .map(|(o, t)| (o.mean - t).powi(2) / t)
        .sum();
    Ok(SpectrumReport {
        n: cfg.n,
        k_max: cfg.k_max,
        target,
        observed,
        z,
        chi2,
        seeds: rows.iter().map(|r| r.0).collect(),
    })
}

/// Write `report` as CSV (fixed header, 12 significant digits) or JSON
/// (sorted keys).
pub fn emit_to<R: Report>(report: &R, format: Format, out: impl Write) -> Result<()> {
    let mut out = out;
    let io_err = |e: std::io::Error| Error::io("<output>", e);
    match format {
        Format::Json => out.write_all(to_json(report)?.as_bytes()).map_err(io_err),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| Error::Parse(e.to_string());
            w.write_record(report.csv_header()).map_err(csv_err)?;
            for row in report.csv_rows() {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(io_err)
        }
    }
}

/// [`emit_to`] a file, with the path attached to any I/O failure.
pub fn emit<R: Report>(report: &R, format: Format, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    emit_to(report, format, &mut buf).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    buf.flush().map_err(|e| Error::io(path, e))
}
