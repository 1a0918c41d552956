//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Built with `harness = false` so the lines always show.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;

use glrr::admm::dense::DenseAdmm;
use glrr::admm::{svt, AdmmConfig, CoefficientAdmm};
use glrr::closed_form::{build_delta, glrr_f_solve, kglrr_solve};
use glrr::clustering::{cluster_pipeline, ncut, Affinity, Method, NcutConfig};
use glrr::eval::{accuracy, hungarian};
use glrr::grassmann::{orthonormalize, GrassmannPoint};
use glrr::kernels::{gram, KernelSpec};
use glrr::rng::GaussianRng;
use glrr::synth::{corrupt_with_outliers, synth_union, SynthSpec, OUTLIER_SEED_XOR};
use glrr::Matrix;

const LAMBDA_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
/// λ for the GLRR-21 convergence run.
const CONVERGENCE_LAMBDA: f64 = 1.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(
    results: &mut Vec<bool>,
    id: u32,
    name: &str,
    limit: Option<Duration>,
    f: impl FnOnce() -> Outcome,
) {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took < l);
    let pass = out.pass && in_time;
    let limit_text = limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs()));
    println!(
        "criterion {id} {}: {name}: {}{} ({:.2} s{limit_text})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        if in_time { "" } else { "; over time limit" },
        took.as_secs_f64(),
    );
    results.push(pass);
}

fn random_points(rng: &mut GaussianRng, n: usize, d: usize, p: usize) -> Vec<GrassmannPoint> {
    (0..n)
        .map(|_| orthonormalize(&rng.matrix(d, p), p).unwrap())
        .collect()
}

fn fixture(seed: u64) -> SynthSpec {
    SynthSpec {
        clusters: 4,
        per_cluster: 15,
        d: 30,
        p: 3,
        noise_sigma: 0.05,
        min_separation: 0.0,
        seed,
    }
}

fn criterion_1() -> Outcome {
    let mut rng = GaussianRng::new(1001);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..100 {
        let n = 2 + rng.below(11);
        let d = 1 + rng.below(20);
        let p = 1 + rng.below(4.min(d));
        let pts = random_points(&mut rng, n, d, p);
        let delta = build_delta(&pts).unwrap();
        let ev = SymmetricEigen::new(delta.values().clone()).eigenvalues;
        let max = ev.max();
        let min = ev.min();
        worst = worst.min(min / max);
        if min < -1e-8 * max {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "100 sets, {failures} violations, worst min/max eigenvalue {worst:.3e} (bound -1e-8)"
        ),
    }
}

/// Reference singular value thresholding straight from nalgebra's SVD.
fn oracle_svt(m: &Matrix, tau: f64) -> Matrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let s = svd.singular_values.map(|s| (s - tau).max(0.0));
    u * Matrix::from_diagonal(&s) * vt
}

fn sqrt_psd(g: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(g.clone());
    let s = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&s) * eig.eigenvectors.transpose()
}

/// `½‖Z G^{1/2} − G^{1/2}‖_F² + λ‖Z‖_*`, evaluated independently of the crate.
fn objective(g: &Matrix, z: &Matrix, lambda: f64) -> f64 {
    let h = sqrt_psd(g);
    let fit = 0.5 * (z * &h - &h).norm_squared();
    fit + lambda * z.clone().svd(false, false).singular_values.sum()
}

/// Proximal gradient on the same objective, stopped on the gradient
/// mapping norm.
fn prox_gradient(g: &Matrix, lambda: f64, tol: f64) -> Option<Matrix> {
    let n = g.nrows();
    let lip = SymmetricEigen::new(g.clone()).eigenvalues.max();
    let t = 1.0 / lip;
    let id = Matrix::identity(n, n);
    let mut z = Matrix::zeros(n, n);
    for _ in 0..1_000_000 {
        let grad = (&z - &id) * g;
        let next = oracle_svt(&(&z - grad * t), lambda * t);
        let mapping = (&z - &next).norm() / t;
        z = next;
        if mapping <= tol {
            return Some(z);
        }
    }
    None
}

fn criterion_2() -> Outcome {
    let mut rng = GaussianRng::new(1002);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut ok = true;
    for _ in 0..20 {
        let n = 2 + rng.below(9);
        let r = 1 + rng.below(n);
        let a = rng.matrix(n, r);
        let g = &a * a.transpose();
        let g = (&g + g.transpose()) * 0.5;
        let top = SymmetricEigen::new(g.clone()).eigenvalues.max();
        let lambda = top * (0.05 + 0.9 * rng.unit());
        let (z, _) = glrr_f_solve(&g, lambda).unwrap();
        let Some(reference) = prox_gradient(&g, lambda, 1e-9) else {
            return Outcome {
                pass: false,
                detail: "proximal-gradient oracle did not reach gradient norm 1e-9".into(),
            };
        };
        let gap = objective(&g, &z.z, lambda) - objective(&g, &reference, lambda);
        worst_gap = worst_gap.max(gap);
        ok &= gap <= 1e-6;
    }
    Outcome {
        pass: ok,
        detail: format!(
            "20 PSD matrices, max(closed form - oracle) = {worst_gap:.3e} (bound 1e-6)"
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut rng = GaussianRng::new(1003);
    let mut gram_err: f64 = 0.0;
    let mut z_err: f64 = 0.0;
    for _ in 0..10 {
        let n = 4 + rng.below(9);
        let d = 5 + rng.below(16);
        let p = 1 + rng.below(4);
        let pts = random_points(&mut rng, n, d, p);
        let delta = build_delta(&pts).unwrap();
        let k = gram(&pts, KernelSpec::Projection).unwrap();
        gram_err = gram_err.max((&k.values - delta.values()).abs().max());
        let lambda = 0.1 + rng.unit() * p as f64;
        let (zf, _) = glrr_f_solve(delta.values(), lambda).unwrap();
        let (zk, _) = kglrr_solve(&pts, KernelSpec::Projection, lambda).unwrap();
        z_err = z_err.max((&zf.z - &zk.z).abs().max());
    }
    Outcome {
        pass: gram_err <= 1e-12 && z_err <= 1e-10,
        detail: format!("10 sets, max |K - Δ| = {gram_err:.2e} (bound 1e-12), max |Z_k - Z_f| = {z_err:.2e} (bound 1e-10)"),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = GaussianRng::new(1004);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let pts = random_points(&mut rng, 6, 10, 2);
        let cfg = AdmmConfig::new(0.5);
        let delta = build_delta(&pts).unwrap();
        let mut coef = CoefficientAdmm::new(delta.values(), &cfg).unwrap();
        let mut dense = DenseAdmm::new(&pts, &cfg).unwrap();
        for _ in 0..50 {
            coef.step().unwrap();
            dense.step().unwrap();
            worst = worst.max((&coef.state().z - dense.z()).abs().max());
        }
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!(
            "5 instances x 50 iterations, max |Z_coef - Z_dense| = {worst:.2e} (bound 1e-8)"
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut converged = 0;
    let mut monotone = true;
    let mut iters = Vec::new();
    for seed in 0..10 {
        let (pts, _) = synth_union(&fixture(seed)).unwrap();
        let delta = build_delta(&pts).unwrap();
        let sol = glrr::admm::admm_solve(&delta, &AdmmConfig::new(CONVERGENCE_LAMBDA)).unwrap();
        let r = &sol.report;
        monotone &= r.mu_history.windows(2).all(|w| w[1] >= w[0]);
        let last = r.iterations.saturating_sub(1);
        let stopped = r.converged
            && r.iterations <= 500
            && r.primal_residual_history[last] <= 1e-4
            && r.change_history[last] <= 1e-4;
        if stopped {
            converged += 1;
        }
        iters.push(r.iterations);
    }
    Outcome {
        pass: converged == 10 && monotone,
        detail: format!(
            "λ = {CONVERGENCE_LAMBDA}: {converged}/10 seeds converged (iterations {iters:?}), μ nondecreasing: {monotone}"
        ),
    }
}

fn best_accuracy(
    points: &[GrassmannPoint],
    truth: &glrr::clustering::ClusterLabels,
    method: Method,
    seed: u64,
) -> f64 {
    LAMBDA_GRID
        .iter()
        .map(|&l| {
            let out = cluster_pipeline(
                points,
                method,
                &AdmmConfig::new(l),
                &NcutConfig::new(4, seed),
            )
            .unwrap();
            accuracy(&out.labels, truth).unwrap().accuracy
        })
        .fold(0.0, f64::max)
}

fn criterion_6() -> Outcome {
    let mut hits = 0;
    let mut best = Vec::new();
    for seed in 0..10 {
        let (pts, truth) = synth_union(&fixture(seed)).unwrap();
        let acc = best_accuracy(&pts, &truth, Method::GlrrF, seed);
        if acc >= 0.95 {
            hits += 1;
        }
        best.push(format!("{acc:.3}"));
    }
    Outcome {
        pass: hits >= 9,
        detail: format!(
            "best-λ accuracy >= 0.95 in {hits}/10 seeds (need 9): [{}]",
            best.join(", ")
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10 {
        let (clean, truth) = synth_union(&fixture(seed)).unwrap();
        let (pts, _) = corrupt_with_outliers(&clean, 0.1, seed ^ OUTLIER_SEED_XOR).unwrap();
        let f = best_accuracy(&pts, &truth, Method::GlrrF, seed);
        let l21 = best_accuracy(&pts, &truth, Method::Glrr21, seed);
        if l21 >= f {
            wins += 1;
        }
        pairs.push(format!("{l21:.3}/{f:.3}"));
    }
    Outcome {
        pass: wins >= 7,
        detail: format!(
            "GLRR-21 >= GLRR-F in {wins}/10 seeds (need 7), 21/F: [{}]",
            pairs.join(", ")
        ),
    }
}

fn min_ncut_partition(w: &Matrix) -> Vec<bool> {
    let n = w.nrows();
    let mut best = (f64::INFINITY, 0u32);
    for mask in 1..(1u32 << n) - 1 {
        let side = |i: usize| mask >> i & 1 == 1;
        let (mut cut, mut vol_a, mut vol_b) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if side(i) {
                    vol_a += w[(i, j)];
                } else {
                    vol_b += w[(i, j)];
                }
                if side(i) && !side(j) {
                    cut += w[(i, j)];
                }
            }
        }
        let value = cut / vol_a + cut / vol_b;
        if value < best.0 {
            best = (value, mask);
        }
    }
    (0..n).map(|i| best.1 >> i & 1 == 1).collect()
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // SVT analytic cases.
    let diag = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 3.0, 1.0]));
    let shrunk = svt(&diag, 2.0).unwrap();
    let want = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 0.0]));
    let svt_diag = shrunk == want;
    let mut rng = GaussianRng::new(1008);
    let m = rng.matrix(4, 3);
    let top = m.clone().svd(false, false).singular_values.max();
    let svt_zero = svt(&m, top).unwrap() == Matrix::zeros(4, 3)
        && svt(&m, 2.0 * top).unwrap() == Matrix::zeros(4, 3);
    let svt_ok = svt_diag && svt_zero;
    ok &= svt_ok;
    notes.push(format!(
        "svt analytic cases {}",
        if svt_ok { "exact" } else { "MISMATCH" }
    ));

    // Hungarian against all 120 permutations.
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for k in 0..5 {
        perms = perms
            .into_iter()
            .flat_map(|p| {
                (0..=k).map(move |pos| {
                    let mut q = p.clone();
                    q.insert(pos, k);
                    q
                })
            })
            .collect();
    }
    let mut hung_ok = 0;
    for _ in 0..20 {
        let cost = Matrix::from_fn(5, 5, |_, _| rng.below(50) as f64);
        let brute = perms
            .iter()
            .map(|p| (0..5).map(|i| cost[(i, p[i])]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let got: f64 = hungarian(&cost)
            .iter()
            .enumerate()
            .map(|(i, j)| cost[(i, j.unwrap())])
            .sum();
        if got == brute {
            hung_ok += 1;
        }
    }
    ok &= hung_ok == 20;
    notes.push(format!("hungarian {hung_ok}/20"));

    // NCut against exhaustive minimum normalized cut on planted graphs.
    let mut ncut_ok = 0;
    for g in 0..10 {
        let side: Vec<bool> = loop {
            let s: Vec<bool> = (0..6).map(|_| rng.unit() < 0.5).collect();
            let a = s.iter().filter(|&&b| b).count();
            if (2..=4).contains(&a) {
                break s;
            }
        };
        let mut w = Matrix::zeros(6, 6);
        for i in 0..6 {
            for j in i + 1..6 {
                let v = if side[i] == side[j] {
                    0.5 + 0.5 * rng.unit()
                } else {
                    0.1 * rng.unit()
                };
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        let brute = min_ncut_partition(&w);
        let labels = ncut(&Affinity { w }, &NcutConfig::new(2, g)).unwrap();
        let l = labels.labels();
        let same = (0..6).all(|i| (0..6).all(|j| (l[i] == l[j]) == (brute[i] == brute[j])));
        if same {
            ncut_ok += 1;
        }
    }
    ok &= ncut_ok == 10;
    notes.push(format!("ncut {ncut_ok}/10"));

    Outcome {
        pass: ok,
        detail: notes.join(", "),
    }
}

fn run(bin: &str, args: &[&str]) -> bool {
    Command::new(bin)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    match (fs::read(a), fs::read(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_glrr");
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let ds = root.join("ds");
    let ds_s = ds.to_str().unwrap();
    if !run(
        bin,
        &[
            "synth",
            "--clusters",
            "4",
            "--per-cluster",
            "15",
            "--d",
            "30",
            "--p",
            "3",
            "--sigma",
            "0.05",
            "--seed",
            "7",
            "--out",
            ds_s,
        ],
    ) {
        return Outcome {
            pass: false,
            detail: "synth failed".into(),
        };
    }
    let manifest = ds.join("manifest.tsv");
    let mut identical = Vec::new();
    for method in ["glrr-f", "glrr-21", "kglrr"] {
        let mut dirs = Vec::new();
        for rep in 0..2 {
            let out = root.join(format!("{method}_{rep}"));
            let ok = run(
                bin,
                &[
                    "cluster",
                    "--manifest",
                    manifest.to_str().unwrap(),
                    "--p",
                    "3",
                    "--method",
                    method,
                    "--lambda",
                    "1",
                    "--seed",
                    "3",
                    "--out",
                    out.to_str().unwrap(),
                ],
            );
            if !ok {
                return Outcome {
                    pass: false,
                    detail: format!("cluster {method} failed"),
                };
            }
            dirs.push(out);
        }
        let same = ["Z.mat", "labels.txt", "report.txt"]
            .iter()
            .all(|f| same_bytes(&dirs[0].join(f), &dirs[1].join(f)));
        identical.push((method, same));
    }
    Outcome {
        pass: identical.iter().all(|(_, s)| *s),
        detail: identical
            .iter()
            .map(|(m, s)| format!("{m} {}", if *s { "byte-identical" } else { "DIFFERS" }))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    check(&mut results, 1, "Δ is PSD", Some(secs(5)), criterion_1);
    check(
        &mut results,
        2,
        "closed form is optimal",
        Some(secs(30)),
        criterion_2,
    );
    check(
        &mut results,
        3,
        "projection kernel path equals Δ path",
        Some(secs(5)),
        criterion_3,
    );
    check(
        &mut results,
        4,
        "coefficient ADMM equals dense ADMM",
        Some(secs(60)),
        criterion_4,
    );
    check(
        &mut results,
        5,
        "GLRR-21 convergence on the fixture",
        Some(secs(120)),
        criterion_5,
    );
    check(
        &mut results,
        6,
        "GLRR-F + NCut accuracy on the fixture",
        Some(secs(120)),
        criterion_6,
    );
    check(
        &mut results,
        7,
        "GLRR-21 vs GLRR-F with 10% outliers",
        Some(secs(300)),
        criterion_7,
    );
    check(
        &mut results,
        8,
        "SVT, Hungarian and NCut oracles",
        Some(secs(30)),
        criterion_8,
    );
    check(
        &mut results,
        9,
        "cluster output is deterministic",
        None,
        criterion_9,
    );
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
