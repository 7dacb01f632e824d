//! Acceptance checks 1 to 10, one PASS/FAIL line each.

use std::process::Command;
use std::time::Instant;

use kernel_duality::branching::{rho_k_mc, rho_k_tree, survival};
use kernel_duality::cut::{cut_distance_exact, cut_norm_01, cut_norm_exact, cut_norm_heuristic, DEFAULT_RESTARTS};
use kernel_duality::duality::{dualize, er_duality_residual};
use kernel_duality::experiments::{run_duality_experiment, run_giant_experiment, ExperimentConfig};
use kernel_duality::trees::enumerate_trees;
use kernel_duality::{BlockMatrix, StepFunction, StepKernel, WeightedMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn bisection_rho(lambda: f64) -> f64 {
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

fn borel(c: f64, k: usize) -> f64 {
    let ln_fact: f64 = (1..=k).map(|x| (x as f64).ln()).sum();
    let ck = c * k as f64;
    ((k as f64 - 1.0) * ck.ln() - ck - ln_fact).exp()
}

fn random_measure(rng: &mut ChaCha8Rng, r: usize) -> WeightedMeasure {
    let w: Vec<f64> = (0..r).map(|_| rng.random_range(0.05..1.0)).collect();
    WeightedMeasure::new(w).unwrap().normalized()
}

fn random_symmetric(rng: &mut ChaCha8Rng, r: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in i..r {
            let v = rng.random_range(lo..hi);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    rows
}

fn random_kernel(rng: &mut ChaCha8Rng, max_r: usize, hi: f64) -> StepKernel {
    let r = rng.random_range(1..=max_r);
    let m = random_measure(rng, r);
    StepKernel::new(&random_symmetric(rng, r, 0.0, hi), m).unwrap()
}

fn random_signed(rng: &mut ChaCha8Rng, max_r: usize) -> StepFunction {
    let r = rng.random_range(1..=max_r);
    let m = random_measure(rng, r);
    StepFunction::new(&random_symmetric(rng, r, -2.0, 2.0), m).unwrap()
}

fn acceptance_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 20_000,
        reps: 20,
        seed: 0,
        k_max: 3,
        ..Default::default()
    }
}

fn survival_solver() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for lambda in [1.5, 2.0, 4.0] {
        let s = survival(&StepKernel::constant(lambda).unwrap(), 1e-14, 1_000_000).unwrap();
        worst = worst.max((s.rho - bisection_rho(lambda)).abs());
        values.push(s.rho);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let stated = (values[1] - 0.796_812).abs() < 5e-7 && (values[2] - 0.980_173).abs() < 5e-7;
    outcome(
        worst < 1e-10 && stated && elapsed < 1.0,
        format!("max |rho - bisection| = {worst:.2e}, rho(2) = {:.9}, rho(4) = {:.9}, {elapsed:.3}s", values[1], values[2]),
    )
}

fn conjugacy() -> Outcome {
    let residuals: Vec<f64> = [1.5, 2.0, 4.0].iter().map(|&l| er_duality_residual(l).unwrap()).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    outcome(worst < 1e-8, format!("residuals {}", residuals.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(", ")))
}

fn dual_operator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut kernels = 0;
    let mut worst_gap: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut failures = 0;
    while kernels < 50 {
        let k = random_kernel(&mut rng, 4, 6.0);
        let norm = k.operator_norm(1e-12).unwrap();
        if norm <= 1.0 + 1e-6 {
            continue;
        }
        kernels += 1;
        let b = dualize(&k, 1e-13, 1_000_000).unwrap();
        for _ in 0..5 {
            let v: Vec<f64> = (0..k.classes()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let hat = b.kappa_hat.apply_operator(&v).unwrap();
            let tilde = b.kappa_tilde.apply_operator(&v).unwrap();
            for (x, y) in hat.iter().zip(&tilde) {
                worst_gap = worst_gap.max((x - y).abs());
            }
        }
        if norm <= 8.0 {
            let dual = b.dual_operator_norm().unwrap();
            worst_norm = worst_norm.max(dual);
            if dual >= 1.0 {
                failures += 1;
            }
        }
    }
    outcome(
        worst_gap < 1e-10 && failures == 0,
        format!("max operator gap {worst_gap:.2e}, max dual norm {worst_norm:.6}"),
    )
}

fn giant_limits() -> Outcome {
    let start = Instant::now();
    let report = run_giant_experiment(&StepKernel::constant(2.0).unwrap(), &acceptance_config()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let c1 = &report.c1_frac;
    let e1 = &report.edges_c1_per_n;
    let c2_max = report.c2_frac.max();
    let pass = (c1.mean - 0.796_812).abs() < 0.01
        && (e1.mean - 0.958_965).abs() < 0.02
        && (e1.mean - report.zeta).abs() < 0.02
        && c2_max <= 1.0 / 50.0
        && elapsed <= 120.0;
    outcome(
        pass,
        format!(
            "|C1|/n = {:.5} +- {:.5}, e(C1)/n = {:.5} +- {:.5} (zeta {:.6}), max |C2|/n = {c2_max:.5}, {elapsed:.2}s",
            c1.mean, c1.stderr, e1.mean, e1.stderr, report.zeta
        ),
    )
}

fn duality_spectrum() -> Outcome {
    let kernel = StepKernel::constant(2.0).unwrap();
    let report = run_duality_experiment(&kernel, &acceptance_config()).unwrap();
    let mut pass = (report.m_over_n.mean - 0.203_188).abs() < 0.01;
    pass &= (report.spectrum_target[0] - (-0.406_376f64).exp()).abs() < 1e-5;
    let mut parts = vec![format!("m/n = {:.5} +- {:.5}", report.m_over_n.mean, report.m_over_n.stderr)];
    for k in 0..3 {
        let tilde = &report.spectrum_tilde[k];
        let z_target = tilde.z_score(report.spectrum_target[k]);
        let z_fresh = report.two_sample_z[k];
        pass &= z_target.abs() <= 3.0 && z_fresh.abs() <= 3.0;
        parts.push(format!(
            "k={}: {:.4} vs {:.4} (z {z_target:+.2}, two-sample z {z_fresh:+.2})",
            k + 1,
            tilde.mean,
            report.spectrum_target[k]
        ));
    }
    outcome(pass, parts.join("; "))
}

fn type_census() -> Outcome {
    let kernel = StepKernel::new(&[vec![3.0, 1.0], vec![1.0, 2.0]], WeightedMeasure::uniform(2).unwrap()).unwrap();
    let report = run_duality_experiment(&kernel, &acceptance_config()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (nu, target)) in report.census.iter().zip(&report.census_target).enumerate() {
        pass &= (nu.mean - target).abs() < 0.01;
        parts.push(format!("nu_{} = {:.5} vs {:.5}", i + 1, nu.mean, target));
    }
    let bounds: Vec<f64> = report.census_cut_bound.iter().map(|p| p.bound.mean).collect();
    pass &= report.census_cut_bound.iter().map(|p| p.n).eq([2000, 8000, 20_000]);
    pass &= bounds.windows(2).all(|w| w[1] < w[0]);
    parts.push(format!("cut bound along n = 2000, 8000, 20000: {bounds:.5?}"));
    outcome(pass, parts.join("; "))
}

fn rho_k_cross_check() -> Outcome {
    let mut worst_borel: f64 = 0.0;
    for c in [1.5, 2.0] {
        let k = StepKernel::constant(c).unwrap();
        for j in 1..=6 {
            worst_borel = worst_borel.max((rho_k_tree(&k, j).unwrap().aggregate - borel(c, j)).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst_z: f64 = 0.0;
    let mut misses = 0;
    let mut comparisons = 0;
    for i in 0..20 {
        let k = random_kernel(&mut rng, 3, 3.0);
        let mc = rho_k_mc(&k, 5, 200_000, i).unwrap();
        for j in 1..=5 {
            let tree = rho_k_tree(&k, j).unwrap().aggregate;
            let z = (mc.aggregate[j - 1] - tree) / mc.aggregate_stderr[j - 1];
            worst_z = worst_z.max(z.abs());
            comparisons += 1;
            if z.abs() > 3.0 {
                misses += 1;
            }
        }
    }
    outcome(
        worst_borel < 1e-10 && misses == 0,
        format!("max |tree - Borel| = {worst_borel:.2e}; {comparisons} Monte Carlo comparisons, max |z| = {worst_z:.2}"),
    )
}

fn tree_counts() -> Outcome {
    let counts: Vec<usize> = (1..=8).map(|k| enumerate_trees(k).unwrap().len()).collect();
    let cayley = (1..=8u64).all(|k| {
        let fact: u64 = (1..=k).product();
        let labeled: u64 = enumerate_trees(k as usize).unwrap().iter().map(|t| fact / t.aut()).sum();
        labeled == k.pow(k.saturating_sub(2) as u32)
    });
    outcome(
        counts == [1, 1, 1, 2, 3, 6, 11, 23] && cayley,
        format!("shape counts {counts:?}, Cayley identity {}", if cayley { "holds" } else { "fails" }),
    )
}

fn cut_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let slack = 1e-12;
    let mut violations = Vec::new();

    let half = WeightedMeasure::uniform(2).unwrap();
    let worked = [
        (StepFunction::new(&[vec![0.0, 0.0], vec![0.0, 0.0]], half.clone()).unwrap(), 0.0),
        (StepFunction::new(&[vec![0.7]], WeightedMeasure::uniform(1).unwrap()).unwrap(), 0.7),
        (StepFunction::new(&[vec![1.0, -1.0], vec![-1.0, 1.0]], half).unwrap(), 1.0),
    ];
    for (w, want) in &worked {
        let exact = cut_norm_exact(w).unwrap().value;
        let heuristic = cut_norm_heuristic(w, DEFAULT_RESTARTS, 0).unwrap().value;
        if (exact - want).abs() > slack || (heuristic - exact).abs() > slack {
            violations.push(format!("worked example {want}"));
        }
    }
    for case in 0..200 {
        let w = random_signed(&mut rng, 8);
        let exact = cut_norm_exact(&w).unwrap().value;
        if cut_norm_heuristic(&w, DEFAULT_RESTARTS, case).unwrap().value > exact + slack {
            violations.push(format!("heuristic above exact, case {case}"));
        }
        let zero_one = cut_norm_01(&w, true).unwrap();
        if zero_one > exact + slack || exact > 4.0 * zero_one + slack {
            violations.push(format!("sandwich, case {case}"));
        }
    }
    for case in 0..100 {
        let r = rng.random_range(1..=6);
        let m = WeightedMeasure::uniform(r).unwrap();
        let a = StepKernel::new(&random_symmetric(&mut rng, r, 0.0, 3.0), m.clone()).unwrap();
        let b = StepKernel::new(&random_symmetric(&mut rng, r, 0.0, 3.0), m).unwrap();
        let mut h: Vec<f64> = (0..r).map(|_| rng.random_range(0.0..3.0)).collect();
        h[0] += 0.01;
        let sup = h.iter().copied().fold(0.0, f64::max);
        let diff = cut_norm_exact(&a.difference(&b).unwrap()).unwrap().value;
        let reweighted = a.reweight(&h).unwrap().difference(&b.reweight(&h).unwrap()).unwrap();
        if cut_norm_exact(&reweighted).unwrap().value > sup * sup * diff + slack {
            violations.push(format!("reweighting bound, case {case}"));
        }
        let delta = rng.random_range(0.0..1.0);
        let gap = (a.tail_marginal(delta).unwrap() - b.tail_marginal(delta).unwrap()).abs();
        if gap > cut_distance_exact(&a, &b).unwrap().value + slack {
            violations.push(format!("tail marginal Lipschitz, case {case}"));
        }
    }
    outcome(
        violations.is_empty(),
        if violations.is_empty() {
            "3 worked examples, 200 heuristic and sandwich cases, 100 reweighting and Lipschitz cases: no violations".into()
        } else {
            format!("violations: {violations:?}")
        },
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let kernel = dir.path().join("k.txt");
    std::fs::write(&kernel, "weights: [0.5, 0.5]\nvalues: [[3, 1], [1, 2]]\n").unwrap();
    let kernel = kernel.to_str().unwrap();
    let commands: [&[&str]; 6] = [
        &["sample", "--n", "8000", "--seed", "5"],
        &["giant", "--n", "5000", "--reps", "6", "--seed", "5", "--format", "csv"],
        &["duality", "--n", "5000", "--reps", "6", "--seed", "5", "--format", "csv"],
        &["tlf", "--n", "5000", "--reps", "6", "--seed", "5", "--f", "1,0"],
        &["spectrum", "--n", "5000", "--reps", "6", "--seed", "5"],
        &["rhok", "--method", "mc", "--samples", "20000", "--seed", "5", "--kmax", "4"],
    ];
    let mut differing = Vec::new();
    for args in commands {
        let outputs: Vec<Vec<u8>> = ["1", "4"]
            .iter()
            .map(|threads| {
                let out = Command::new(env!("CARGO_BIN_EXE_kernel-duality"))
                    .args(args)
                    .args(["--kernel", kernel])
                    .env("RAYON_NUM_THREADS", threads)
                    .output()
                    .unwrap();
                assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(args[0]);
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            "sample, giant, duality, tlf, spectrum and rhok --method mc are byte-identical on 1 and 4 threads".into()
        } else {
            format!("outputs differ for {differing:?}")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("survival solver", survival_solver),
        ("classical conjugacy", conjugacy),
        ("dual operator identity", dual_operator),
        ("giant limits", giant_limits),
        ("duality spectrum", duality_spectrum),
        ("type census", type_census),
        ("rho_k cross-validation", rho_k_cross_check),
        ("tree enumeration", tree_counts),
        ("cut-norm suite", cut_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
