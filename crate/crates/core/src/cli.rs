//! The `kernel-duality` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::branching::{rho_k_mc, rho_k_tree, survival, RhoK};
use crate::cut::{
    cut_distance_exact, cut_distance_heuristic, cut_norm_exact, cut_norm_heuristic, CutDistanceResult,
    CutNormResult, DEFAULT_RESTARTS, EXACT_CUT_DISTANCE_CAP, EXACT_CUT_NORM_CAP,
};
use crate::duality::dualize;
use crate::error::{Error, Result};
use crate::experiments::{
    emit, emit_to, run_duality_experiment, run_giant_experiment, run_spectrum_compare, run_tlf_check,
    ExperimentConfig, Format, Report,
};
use crate::graph::{components, duality_report, materialize, sample, DualityReport};
use crate::io::{read_kernel, to_json};
use crate::kernel::{common_refinement, BlockMatrix, StepKernel};

#[derive(Debug, Parser)]
#[command(name = "kernel-duality", version, about = "Step kernels, branching processes and giant-component duality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Kernel file (`weights: [..]`, `values: [[..], ..]`).
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// TOML experiment config; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "kmax")]
    pub k_max: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(k) = &self.kernel {
            cfg.kernel = Some(k.clone());
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(reps) = self.reps {
            cfg.reps = reps;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(k) = self.k_max {
            cfg.k_max = k;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoKMethod {
    Tree,
    Mc,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Survival probabilities of the branching process.
    Rho {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
    },
    /// Probabilities that the process has exactly k particles, k = 1..kmax.
    Rhok {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = RhoKMethod::Tree)]
        method: RhoKMethod,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Dual measure and kernel.
    Dual {
        #[command(flatten)]
        common: Common,
    },
    /// Cut norm of a kernel, or of the difference of two kernels.
    Cutnorm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kernel2: Option<PathBuf>,
        /// Use alternating best responses even when exact enumeration fits.
        #[arg(long)]
        heuristic: bool,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
    },
    /// Cut distance between two kernels over class permutations.
    Cutdist {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kernel2: PathBuf,
        #[arg(long)]
        heuristic: bool,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
    },
    /// Sample one graph and report its component statistics.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Also write the edge list, one `u v` pair per line, 1-indexed.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Giant fraction and giant edge density over repetitions.
    Giant {
        #[command(flatten)]
        common: Common,
    },
    /// Giant-free graph against the dual kernel and against G(B_n).
    Duality {
        #[command(flatten)]
        common: Common,
    },
    /// Sums of a class function over the giant and its complement.
    Tlf {
        #[command(flatten)]
        common: Common,
        /// Comma-separated per-class values; defaults to all ones.
        #[arg(long, value_delimiter = ',')]
        f: Option<Vec<f64>>,
    },
    /// Component-size spectrum against the branching process.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn write_json<T: Serialize>(cfg: &ExperimentConfig, value: &T) -> Result<()> {
    write_output(cfg.out.as_deref(), to_json(value)?.as_bytes())
}

fn write_report<R: Report>(cfg: &ExperimentConfig, report: &R) -> Result<()> {
    match &cfg.out {
        Some(path) => emit(report, cfg.format, path),
        None => {
            let mut buf = Vec::new();
            emit_to(report, cfg.format, &mut buf)?;
            write_output(None, &buf)
        }
    }
}

#[derive(Serialize)]
struct Witness<'a> {
    f: &'a [i8],
    g: &'a [i8],
}

#[derive(Serialize)]
struct CutNormOutput<'a> {
    value: f64,
    exact: bool,
    witness: Witness<'a>,
}

#[derive(Serialize)]
struct CutDistOutput<'a> {
    value: f64,
    exact: bool,
    witness: &'a [usize],
}

#[derive(Serialize)]
struct RhoKOutput {
    method: &'static str,
    k_max: usize,
    tree: Option<Vec<RhoK>>,
    mc: Option<crate::branching::RhoKEstimate>,
}

#[derive(Serialize)]
struct SampleOutput {
    seed: u64,
    edges: usize,
    components: usize,
    c1_size: usize,
    c2_size: usize,
    stats: DualityReport,
}

fn cut_norm_of<M: BlockMatrix + Sync>(w: &M, heuristic: bool, restarts: usize, seed: u64) -> Result<CutNormResult> {
    if heuristic || w.classes() > EXACT_CUT_NORM_CAP {
        cut_norm_heuristic(w, restarts, seed)
    } else {
        cut_norm_exact(w)
    }
}

fn distance(k1: &StepKernel, k2: &StepKernel, heuristic: bool, restarts: usize, seed: u64) -> Result<CutDistanceResult> {
    if !heuristic && k1.classes() <= EXACT_CUT_DISTANCE_CAP {
        match cut_distance_exact(k1, k2) {
            Err(Error::Validation(_)) => {}
            other => return other,
        }
    }
    cut_distance_heuristic(k1, k2, restarts, seed)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rho { common, tol, max_iter } => {
            let cfg = common.config()?;
            let s = survival(&cfg.load_kernel()?, tol, max_iter)?;
            if !s.converged {
                return Err(Error::NonConvergence {
                    iterations: s.iterations,
                    lower: s.rho - s.residual,
                    upper: s.rho + s.residual,
                });
            }
            write_json(&cfg, &s)
        }
        Command::Rhok { common, method, samples } => {
            let cfg = common.config()?;
            let kernel = cfg.load_kernel()?;
            let out = match method {
                RhoKMethod::Tree => RhoKOutput {
                    method: "tree",
                    k_max: cfg.k_max,
                    tree: Some((1..=cfg.k_max).map(|k| rho_k_tree(&kernel, k)).collect::<Result<_>>()?),
                    mc: None,
                },
                RhoKMethod::Mc => RhoKOutput {
                    method: "mc",
                    k_max: cfg.k_max,
                    tree: None,
                    mc: Some(rho_k_mc(&kernel, cfg.k_max, samples, cfg.seed)?),
                },
            };
            write_json(&cfg, &out)
        }
        Command::Dual { common } => {
            let cfg = common.config()?;
            let bundle = dualize(&cfg.load_kernel()?, cfg.tolerance, cfg.max_iter)?;
            write_json(&cfg, &bundle.summary()?)
        }
        Command::Cutnorm {
            common,
            kernel2,
            heuristic,
            restarts,
        } => {
            let cfg = common.config()?;
            let k1 = cfg.load_kernel()?;
            let result = match kernel2 {
                Some(path) => {
                    let refined = common_refinement(&k1, &read_kernel(&path)?)?;
                    let diff = refined.first.difference(&refined.second)?;
                    cut_norm_of(&diff, heuristic, restarts, cfg.seed)?
                }
                None => cut_norm_of(k1.as_function(), heuristic, restarts, cfg.seed)?,
            };
            write_json(
                &cfg,
                &CutNormOutput {
                    value: result.value,
                    exact: result.exact,
                    witness: Witness {
                        f: &result.f_signs,
                        g: &result.g_signs,
                    },
                },
            )
        }
        Command::Cutdist {
            common,
            kernel2,
            heuristic,
            restarts,
        } => {
            let cfg = common.config()?;
            let result = distance(&cfg.load_kernel()?, &read_kernel(&kernel2)?, heuristic, restarts, cfg.seed)?;
            write_json(
                &cfg,
                &CutDistOutput {
                    value: result.value,
                    exact: result.exact,
                    witness: &result.permutation,
                },
            )
        }
        Command::Sample { common, edges } => {
            let cfg = common.config()?;
            let a = materialize(&cfg.load_kernel()?, cfg.n)?;
            let g = sample(&a, cfg.seed);
            let comp = components(&g);
            if let Some(path) = edges {
                let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                let mut w = std::io::BufWriter::new(file);
                g.write_edge_list(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|e| Error::io(&path, e))?;
            }
            write_json(
                &cfg,
                &SampleOutput {
                    seed: cfg.seed,
                    edges: g.edge_count(),
                    components: comp.count(),
                    c1_size: comp.giant_size(),
                    c2_size: comp.second_size(),
                    stats: duality_report(&g, &a, &comp)?,
                },
            )
        }
        Command::Giant { common } => {
            let cfg = common.config()?;
            write_report(&cfg, &run_giant_experiment(&cfg.load_kernel()?, &cfg)?)
        }
        Command::Duality { common } => {
            let cfg = common.config()?;
            write_report(&cfg, &run_duality_experiment(&cfg.load_kernel()?, &cfg)?)
        }
        Command::Tlf { common, f } => {
            let cfg = common.config()?;
            let kernel = cfg.load_kernel()?;
            let f = f
                .or_else(|| cfg.f.clone())
                .unwrap_or_else(|| vec![1.0; kernel.classes()]);
            write_report(&cfg, &run_tlf_check(&kernel, &cfg, &f)?)
        }
        Command::Spectrum { common } => {
            let cfg = common.config()?;
            write_report(&cfg, &run_spectrum_compare(&cfg.load_kernel()?, &cfg)?)
        }
    }
}
