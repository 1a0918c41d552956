use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use glrr::admm::AdmmConfig;
use glrr::clustering::{cluster_pipeline, ClusterLabels, Method, NcutConfig, PipelineOutput};
use glrr::eval::accuracy_raw;
use glrr::io::{
    build_point, load_dataset, load_manifest, read_labels, save_results, write_labels, write_matrix,
};
use glrr::kernels::KernelSpec;
use glrr::synth::{corrupt_with_outliers, synth_union, SynthSpec, OUTLIER_SEED_XOR};
use glrr::{Error, GrassmannPoint};

/// Relative singular-value cutoff used for the reported rank of Z.
const RANK_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "glrr",
    version,
    about = "Low-rank representation clustering on Grassmann manifolds"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a union-of-subspaces dataset.
    Synth(SynthArgs),
    /// Solve, cluster and (with ground truth) score a dataset.
    Cluster(ClusterArgs),
    /// Score a predicted labeling against ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
#[command(args_override_self = true)]
struct SynthArgs {
    #[arg(long)]
    clusters: usize,
    #[arg(long)]
    per_cluster: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Smallest principal angle between cluster centers, in degrees.
    #[arg(long, default_value_t = 0.0)]
    min_separation: f64,
    /// Share of points replaced by random subspaces (labels kept).
    #[arg(long, default_value_t = 0.0)]
    outlier_fraction: f64,
    /// Seed for choosing and drawing outliers; defaults to a value derived from --seed.
    #[arg(long)]
    outlier_seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct ClusterArgs {
    /// Dataset manifest (`<path>\t<label>` per line).
    #[arg(long)]
    manifest: PathBuf,
    /// Subspace dimension of every point.
    #[arg(long)]
    p: usize,
    #[arg(long, default_value = "glrr-f")]
    method: String,
    /// Kernel for kglrr: projection, cc-max, cc-sum or ccp.
    #[arg(long, default_value = "projection")]
    kernel: String,
    /// Weight of cc-sum in the ccp kernel.
    #[arg(long)]
    alpha: Option<f64>,
    /// One value, or a comma-separated list to sweep.
    #[arg(long, value_delimiter = ',', required = true, action = clap::ArgAction::Set)]
    lambda: Vec<f64>,
    /// Number of clusters; defaults to the number of ground-truth labels.
    #[arg(long)]
    clusters: Option<usize>,
    /// Ground-truth labels file; defaults to the manifest labels.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Standardize every sample column before extracting the basis.
    #[arg(long)]
    standardize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    mu_max: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    kmeans_iters: usize,
    #[arg(long)]
    out: PathBuf,
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_override_self = true)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalDivergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

/// Splices the `key=value` lines of a `--config` file in as `--key=value`
/// flags right after the subcommand, so explicit flags override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = Some(args.get(i + 1).ok_or("--config needs a path")?.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let mut injected = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", ln + 1))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match v {
            "true" => injected.push(format!("--{k}")),
            "false" => {}
            _ => injected.push(format!("--{k}={v}")),
        }
    }
    let split = 2.min(args.len());
    let mut out = args[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[split..]);
    Ok(out)
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let spec = SynthSpec {
        clusters: a.clusters,
        per_cluster: a.per_cluster,
        d: a.d,
        p: a.p,
        noise_sigma: a.sigma,
        min_separation: a.min_separation,
        seed: a.seed,
    };
    let (mut points, truth) = synth_union(&spec)?;
    if a.outlier_fraction > 0.0 {
        let seed = a.outlier_seed.unwrap_or(a.seed ^ OUTLIER_SEED_XOR);
        points = corrupt_with_outliers(&points, a.outlier_fraction, seed)?.0;
    }
    let sets = a.out.join("sets");
    fs::create_dir_all(&sets).map_err(|e| Error::Io {
        path: sets.clone(),
        source: e,
    })?;
    let mut manifest = String::from("# path\tlabel\n");
    for (i, (pt, label)) in points.iter().zip(truth.labels()).enumerate() {
        let name = format!("sets/set_{i:04}.mat");
        write_matrix(a.out.join(&name), pt.basis())?;
        manifest.push_str(&format!("{name}\t{label}\n"));
    }
    let mpath = a.out.join("manifest.tsv");
    fs::write(&mpath, manifest).map_err(|e| Error::Io {
        path: mpath.clone(),
        source: e,
    })?;
    write_labels(a.out.join("truth.txt"), truth.labels())?;
    println!(
        "wrote {} points in {} clusters to {}",
        points.len(),
        spec.clusters,
        a.out.display()
    );
    Ok(())
}

fn parse_method(a: &ClusterArgs) -> CliResult<Method> {
    let method: Method = a
        .method
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    if method != Method::Kglrr(KernelSpec::Projection) {
        return Ok(method);
    }
    let mut kernel: KernelSpec = a
        .kernel
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    if let (KernelSpec::Ccp { .. }, Some(alpha)) = (kernel, a.alpha) {
        kernel = KernelSpec::ccp(alpha)?;
    }
    Ok(Method::Kglrr(kernel))
}

fn admm_config(a: &ClusterArgs, lambda: f64) -> AdmmConfig {
    let d = AdmmConfig::new(lambda);
    AdmmConfig {
        lambda,
        mu0: a.mu0.unwrap_or(d.mu0),
        rho0: a.rho0.unwrap_or(d.rho0),
        mu_max: a.mu_max.unwrap_or(d.mu_max),
        eta: a.eta,
        eps1: a.eps1.unwrap_or(d.eps1),
        eps2: a.eps2.unwrap_or(d.eps2),
        max_iters: a.max_iters.unwrap_or(d.max_iters),
    }
}

struct Row {
    lambda: f64,
    output: PipelineOutput,
    accuracy: Option<f64>,
}

fn report_lines(method: Method, row: &Row) -> Vec<(String, String)> {
    let diag = &row.output.diagnostics;
    let mut r = vec![
        ("method".to_string(), method.name().to_string()),
        ("lambda".into(), row.lambda.to_string()),
    ];
    if let Method::Kglrr(k) = method {
        r.push(("kernel".into(), k.to_string()));
    }
    r.extend([
        ("iterations".into(), diag.iterations().to_string()),
        ("converged".into(), diag.converged().to_string()),
        (
            "accuracy".into(),
            row.accuracy.map_or("NA".to_string(), |v| v.to_string()),
        ),
        ("clamp_magnitude".into(), diag.clamp_magnitude().to_string()),
        ("rank_Z".into(), row.output.z.rank(RANK_TOL).to_string()),
        ("block_score".into(), diag.block_score.to_string()),
    ]);
    r
}

fn lambda_dir(out: &Path, lambda: f64) -> PathBuf {
    out.join(format!("lambda_{lambda}"))
}

fn cmd_cluster(a: ClusterArgs) -> CliResult<()> {
    let method = parse_method(&a)?;
    let manifest = load_manifest(&a.manifest)?;
    let sets = load_dataset(&manifest)?;
    let points: Vec<GrassmannPoint> = sets
        .iter()
        .map(|s| build_point(s, a.p, a.standardize))
        .collect::<Result<_, _>>()?;
    let truth = match &a.truth {
        Some(path) => Some(read_labels(path)?),
        None => manifest.labels(),
    };
    if let Some(t) = &truth {
        if t.len() != points.len() {
            return Err(Failure::Usage(format!(
                "{} truth labels for {} points",
                t.len(),
                points.len()
            )));
        }
    }
    let clusters = match (a.clusters, &truth) {
        (Some(c), _) => c,
        (None, Some(t)) => ClusterLabels::from_labels(t.clone())?.cluster_count(),
        (None, None) => {
            return Err(Failure::Usage(
                "--clusters is required when no ground truth is available".into(),
            ))
        }
    };
    let ncut_cfg = NcutConfig {
        clusters,
        kmeans_restarts: a.restarts,
        kmeans_max_iters: a.kmeans_iters,
        seed: a.seed,
    };

    let mut lambdas = a.lambda.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Failure::Usage(format!(
            "lambda must be positive, got {bad}"
        )));
    }
    let sweep = lambdas.len() > 1;

    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let output = cluster_pipeline(&points, method, &admm_config(&a, lambda), &ncut_cfg)?;
        let accuracy = match &truth {
            Some(t) => Some(accuracy_raw(output.labels.labels(), t)?.accuracy),
            None => None,
        };
        let row = Row {
            lambda,
            output,
            accuracy,
        };
        let dir = if sweep {
            lambda_dir(&a.out, lambda)
        } else {
            a.out.clone()
        };
        save_results(
            &dir,
            &row.output.z.z,
            &row.output.labels,
            &report_lines(method, &row),
        )?;
        rows.push(row);
    }

    let mut table = String::from("method\tlambda\titerations\tconverged\taccuracy\n");
    for row in &rows {
        let diag = &row.output.diagnostics;
        let acc = row
            .accuracy
            .map_or("NA".to_string(), |v| format!("{v:.4} ({:.2}%)", 100.0 * v));
        table.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            method,
            row.lambda,
            diag.iterations(),
            diag.converged(),
            acc
        ));
    }
    if sweep {
        let path = a.out.join("sweep.tsv");
        fs::write(&path, &table).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    let pred = read_labels(&a.pred)?;
    let truth = read_labels(&a.truth)?;
    let rep = accuracy_raw(&pred, &truth)?;
    println!(
        "accuracy {:.4} ({:.2}%)",
        rep.accuracy,
        100.0 * rep.accuracy
    );
    println!("confusion (rows: true, columns: predicted)");
    for row in rep.confusion.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{}", *v as usize)).collect();
        println!("{}", cells.join("\t"));
    }
    let pairs: Vec<String> = rep
        .matching
        .iter()
        .map(|(p, t)| format!("{p}->{t}"))
        .collect();
    println!("matching {}", pairs.join(" "));
    Ok(())
}
