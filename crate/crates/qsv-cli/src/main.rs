//! `qsv` — command-line front end for the verification workbench.
//!
//! Machine-first output: every command emits CSV or JSON suitable for
//! downstream plotting. All commands are deterministic given their full
//! flag set including seeds.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qsv_core::analysis::{
    adversarial_bound, dicke_benchmark, evaluate_at_probabilities, grouped_dicke_optimize,
    optimize_probabilities, reduction_rate, sample_complexity, spectral_gap, w_protocol_a,
    w_protocol_g, GapReport,
};
use qsv_core::parallel::{configure_jobs, map_batch};
use qsv_core::protocols::{build_strategy, ProtocolSpec};
use qsv_core::simulator::{
    pass_probability, records_to_csv, run_verification, DrawMode, PreparedSource,
};
use qsv_core::states::{
    dicke, ghz, haar_random, load_state, save_state, state_from_json, state_to_json, w_state,
    DickeLabel, PureState,
};

/// Dense-solver desk-scale cap: refuse larger instances unless --force.
const DIM_GUARDRAIL: usize = 8192;

#[derive(Parser)]
#[command(name = "qsv", about = "Quantum state verification workbench", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads (default: all cores; env QSV_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where both are supported.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a state and write it in the JSON state format.
    State {
        #[command(subcommand)]
        kind: StateKind,
    },
    /// Spectral gap of a protocol on a stored state.
    Gap {
        /// Path to a JSON state file.
        state: PathBuf,
        #[arg(long, default_value = "sd")]
        protocol: String,
        /// Optimize test probabilities before reporting the gap.
        #[arg(long)]
        optimize: bool,
        /// JSON file with an explicit probability vector to evaluate.
        #[arg(long)]
        probabilities: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Optimize test probabilities for a protocol on a stored state.
    Optimize {
        state: PathBuf,
        #[arg(long, default_value = "sd")]
        protocol: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Use the grouped optimizer specialized to qubit Dicke states.
        #[arg(long)]
        grouped_dicke: bool,
        #[arg(long)]
        force: bool,
    },
    /// Sweep protocols over (d, n, seed) cells and emit gap/complexity rows.
    Sweep {
        /// JSON file mirroring the sweep configuration; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        protocols: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        parties: Option<Vec<usize>>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        optimize: bool,
        #[arg(long)]
        adversarial: bool,
        /// State family per cell: haar, ghz, or w.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        force: bool,
    },
    /// Monte-Carlo verification runs against a stored target.
    Simulate {
        /// Target state (JSON state file).
        state: PathBuf,
        #[arg(long, default_value = "sd")]
        protocol: String,
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional source spec JSON; default is the target itself.
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Closed-form benchmark gap values.
    Bench {
        #[command(subcommand)]
        kind: BenchKind,
    },
    /// Compare several protocols on one state.
    Compare {
        state: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "sd,csd")]
        protocols: Vec<String>,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Subcommand)]
enum StateKind {
    Ghz {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        n: usize,
    },
    Dicke {
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Excitation partition, e.g. 2,1,1.
        #[arg(long, value_delimiter = ',')]
        partition: Vec<usize>,
    },
    W {
        #[arg(long)]
        n: usize,
    },
    Haar {
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum BenchKind {
    /// Dicke-state protocol gap for an excitation partition.
    Dicke {
        #[arg(long, value_delimiter = ',')]
        partition: Vec<usize>,
    },
    /// W-state protocol A gap.
    #[command(name = "w-A", alias = "w-a")]
    WA {
        #[arg(long)]
        n: usize,
    },
    /// W-state protocol G gap.
    #[command(name = "w-G", alias = "w-g")]
    WG {
        #[arg(long)]
        n: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let jobs = cli.jobs.or_else(|| {
        std::env::var("QSV_JOBS").ok().and_then(|v| v.parse().ok())
    });
    configure_jobs(jobs).expect("job configuration");
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.clone();
    match cli.cmd {
        Cmd::State { kind } => cmd_state(kind, out.as_deref()),
        Cmd::Gap { state, protocol, optimize, probabilities, force } => {
            cmd_gap(&state, &protocol, optimize, probabilities.as_deref(), force, out.as_deref())
        }
        Cmd::Optimize { state, protocol, tol, grouped_dicke, force } => {
            cmd_optimize(&state, &protocol, tol, grouped_dicke, force, out.as_deref())
        }
        Cmd::Sweep {
            config,
            protocols,
            dims,
            parties,
            samples,
            seed,
            eps,
            delta,
            optimize,
            adversarial,
            family,
            force,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).context("parsing sweep config")?
                }
                None => SweepConfig::default(),
            };
            if let Some(v) = protocols {
                cfg.protocols = v;
            }
            if let Some(v) = dims {
                cfg.dims = v;
            }
            if let Some(v) = parties {
                cfg.parties = v;
            }
            if let Some(v) = samples {
                cfg.samples = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = eps {
                cfg.epsilon = v;
            }
            if let Some(v) = delta {
                cfg.delta = v;
            }
            if optimize {
                cfg.optimize = true;
            }
            if adversarial {
                cfg.adversarial = true;
            }
            if let Some(v) = family {
                cfg.family = v;
            }
            cmd_sweep(&cfg, force, out.as_deref(), cli.format)
        }
        Cmd::Simulate { state, protocol, runs, seed, source, force } => {
            cmd_simulate(&state, &protocol, runs, seed, source.as_deref(), force, out.as_deref())
        }
        Cmd::Bench { kind } => cmd_bench(kind, out.as_deref()),
        Cmd::Compare { state, protocols, eps, delta, force } => {
            cmd_compare(&state, &protocols, eps, delta, force, out.as_deref(), cli.format)
        }
    }
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn guardrail(total_dim: usize, force: bool) -> Result<()> {
    if total_dim > DIM_GUARDRAIL && !force {
        bail!(
            "total dimension {total_dim} exceeds the desk-scale cap {DIM_GUARDRAIL}; \
             pass --force to override"
        );
    }
    Ok(())
}

fn load_checked(path: &Path, force: bool) -> Result<PureState> {
    let state = load_state(path).with_context(|| format!("loading {}", path.display()))?;
    guardrail(state.total_dim(), force)?;
    Ok(state)
}

fn cmd_state(kind: StateKind, out: Option<&Path>) -> Result<()> {
    let state = match kind {
        StateKind::Ghz { d, n } => ghz(d, n)?,
        StateKind::Dicke { d, partition } => dicke(&DickeLabel::new(partition, d)?)?,
        StateKind::W { n } => w_state(n)?,
        StateKind::Haar { dims, seed } => haar_random(&dims, seed)?,
    };
    match out {
        Some(path) => save_state(&state, path)?,
        None => write_output(None, &state_to_json(&state))?,
    }
    Ok(())
}

fn cmd_gap(
    state_path: &Path,
    protocol: &str,
    optimize: bool,
    probabilities: Option<&Path>,
    force: bool,
    out: Option<&Path>,
) -> Result<()> {
    let state = load_checked(state_path, force)?;
    let spec = ProtocolSpec::parse(protocol)?;
    let strategy = build_strategy(&spec, &state)?;

    #[derive(Serialize)]
    struct GapOutput {
        protocol: String,
        #[serde(flatten)]
        gap: GapReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        optimization: Option<qsv_core::analysis::OptimizationReport>,
    }

    let (gap, optimization) = if let Some(path) = probabilities {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let probs: Vec<f64> = serde_json::from_str(&text).context("parsing probabilities")?;
        (evaluate_at_probabilities(&strategy.tests, &state, &probs)?, None)
    } else if optimize {
        let report = optimize_probabilities(&strategy.tests, &state, 1e-6)?;
        let gap = evaluate_at_probabilities(&strategy.tests, &state, &report.probabilities)?;
        (gap, Some(report))
    } else {
        (spectral_gap(&strategy, &state)?, None)
    };
    let output = GapOutput { protocol: protocol.into(), gap, optimization };
    write_output(out, &serde_json::to_string_pretty(&output)?)
}

fn cmd_optimize(
    state_path: &Path,
    protocol: &str,
    tol: f64,
    grouped_dicke: bool,
    force: bool,
    out: Option<&Path>,
) -> Result<()> {
    let state = load_checked(state_path, force)?;
    let report = if grouped_dicke {
        grouped_dicke_optimize(&state, tol)?
    } else {
        let spec = ProtocolSpec::parse(protocol)?;
        let strategy = build_strategy(&spec, &state)?;
        optimize_probabilities(&strategy.tests, &state, tol)?
    };
    write_output(out, &serde_json::to_string_pretty(&report)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct SweepConfig {
    protocols: Vec<String>,
    dims: Vec<usize>,
    parties: Vec<usize>,
    samples: u64,
    seed: u64,
    epsilon: f64,
    delta: f64,
    optimize: bool,
    adversarial: bool,
    /// State family per cell: "haar" (seeded samples), "ghz", or "w".
    family: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            protocols: vec!["sd".into()],
            dims: vec![2],
            parties: vec![2, 3],
            samples: 10,
            seed: 0,
            epsilon: 0.01,
            delta: 0.01,
            optimize: false,
            adversarial: false,
            family: "haar".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    protocol: String,
    d: usize,
    n: usize,
    /// Sample seed, or "mean"/"stderr" for aggregate rows.
    seed: String,
    nu: Option<f64>,
    beta: Option<f64>,
    n_exact: Option<u64>,
    n_upper: Option<u64>,
    n_adversarial: Option<f64>,
}

fn sweep_cell(cfg: &SweepConfig, protocol: &str, d: usize, n: usize) -> Result<Vec<SweepRow>> {
    let spec = ProtocolSpec::parse(protocol)?;
    let mut rows = Vec::new();
    let mut nus = Vec::new();
    let mut betas = Vec::new();
    for s in 0..cfg.samples {
        let state = match cfg.family.as_str() {
            "haar" => {
                qsv_core::states::haar_random_stream(&vec![d; n], cfg.seed, s)?
            }
            "ghz" => ghz(d, n)?,
            "w" => {
                if d != 2 {
                    bail!("w family requires d = 2");
                }
                w_state(n)?
            }
            other => bail!("unknown state family {other:?}"),
        };
        let strategy = build_strategy(&spec, &state)?;
        let nu = if cfg.optimize {
            optimize_probabilities(&strategy.tests, &state, 1e-6)?.nu
        } else {
            spectral_gap(&strategy, &state)?.nu
        };
        let beta = 1.0 - nu;
        nus.push(nu);
        betas.push(beta);
        rows.push(complexity_row(cfg, protocol, d, n, s.to_string(), nu, beta));
    }
    let mean = nus.iter().sum::<f64>() / nus.len() as f64;
    let beta_mean = betas.iter().sum::<f64>() / betas.len() as f64;
    rows.push(complexity_row(cfg, protocol, d, n, "mean".into(), mean, beta_mean));
    let stderr = if nus.len() > 1 {
        let var =
            nus.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nus.len() - 1) as f64;
        (var / nus.len() as f64).sqrt()
    } else {
        0.0
    };
    rows.push(SweepRow {
        protocol: protocol.into(),
        d,
        n,
        seed: "stderr".into(),
        nu: Some(stderr),
        beta: None,
        n_exact: None,
        n_upper: None,
        n_adversarial: None,
    });
    Ok(rows)
}

fn complexity_row(
    cfg: &SweepConfig,
    protocol: &str,
    d: usize,
    n: usize,
    seed: String,
    nu: f64,
    beta: f64,
) -> SweepRow {
    let (n_exact, n_upper) = match sample_complexity(nu, cfg.epsilon, cfg.delta) {
        Ok((a, b)) => (Some(a), Some(b)),
        Err(_) => (None, None), // zero-gap cells have no finite complexity
    };
    let n_adversarial = if cfg.adversarial {
        adversarial_bound(nu, cfg.epsilon, cfg.delta).ok().map(|(_, b)| b)
    } else {
        None
    };
    SweepRow {
        protocol: protocol.into(),
        d,
        n,
        seed,
        nu: Some(nu),
        beta: Some(beta),
        n_exact,
        n_upper,
        n_adversarial,
    }
}

fn cmd_sweep(cfg: &SweepConfig, force: bool, out: Option<&Path>, format: Format) -> Result<()> {
    if cfg.samples == 0 {
        bail!("samples must be at least 1");
    }
    for name in &cfg.protocols {
        ProtocolSpec::parse(name)?;
    }
    // Cells in deterministic (protocol, d, n) order; results merge in this
    // order regardless of worker scheduling.
    let mut cells = Vec::new();
    for protocol in &cfg.protocols {
        for &d in &cfg.dims {
            for &n in &cfg.parties {
                guardrail(d.checked_pow(n as u32).unwrap_or(usize::MAX), force)?;
                cells.push((protocol.clone(), d, n));
            }
        }
    }
    let results = map_batch(&cells, |(protocol, d, n)| {
        sweep_cell(cfg, protocol, *d, *n)
    });
    let mut rows = Vec::new();
    let mut incomplete = false;
    for ((protocol, d, n), result) in cells.iter().zip(results) {
        match result {
            Ok(cell_rows) => rows.extend(cell_rows),
            Err(e) => {
                eprintln!("cell ({protocol}, d={d}, n={n}) failed: {e:#}");
                incomplete = true;
            }
        }
    }
    let rendered = match format {
        Format::Json => serde_json::to_string_pretty(&rows)?,
        Format::Csv => rows_to_csv(&rows)?,
    };
    write_output(out, &rendered)?;
    if incomplete {
        bail!("one or more sweep cells failed");
    }
    Ok(())
}

fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["protocol", "d", "n", "seed", "nu", "beta", "n_exact", "n_upper", "n_adversarial"])?;
    for r in rows {
        wtr.write_record([
            r.protocol.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.seed.clone(),
            r.nu.map(|v| v.to_string()).unwrap_or_default(),
            r.beta.map(|v| v.to_string()).unwrap_or_default(),
            r.n_exact.map(|v| v.to_string()).unwrap_or_default(),
            r.n_upper.map(|v| v.to_string()).unwrap_or_default(),
            r.n_adversarial.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}

#[derive(Deserialize)]
struct SourceSpec {
    #[serde(default = "default_mode")]
    mode: String,
    components: Vec<SourceComponent>,
}

fn default_mode() -> String {
    "mixture".into()
}

#[derive(Deserialize)]
struct SourceComponent {
    weight: f64,
    state: serde_json::Value,
}

fn cmd_simulate(
    state_path: &Path,
    protocol: &str,
    runs: u64,
    seed: u64,
    source_path: Option<&Path>,
    force: bool,
    out: Option<&Path>,
) -> Result<()> {
    let target = load_checked(state_path, force)?;
    let spec = ProtocolSpec::parse(protocol)?;
    let strategy = build_strategy(&spec, &target)?;
    let source = match source_path {
        None => PreparedSource::pure(target.clone()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let spec: SourceSpec = serde_json::from_str(&text).context("parsing source spec")?;
            let mode = match spec.mode.as_str() {
                "mixture" => DrawMode::Mixture,
                "sequence" => DrawMode::Sequence,
                other => bail!("unknown source mode {other:?}"),
            };
            let components = spec
                .components
                .into_iter()
                .map(|c| Ok((c.weight, state_from_json(&c.state.to_string())?)))
                .collect::<Result<Vec<_>>>()?;
            PreparedSource::new(components, mode)?
        }
    };
    let exact = pass_probability(&strategy, &source)?;
    let (accepted, records) = run_verification(&strategy, &source, &target, runs, seed)?;
    let pass_count = records.iter().filter(|r| r.passed).count() as u64;
    // Records go to --out as CSV; the summary always goes to stdout.
    if let Some(path) = out {
        std::fs::write(path, records_to_csv(&records))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = serde_json::json!({
        "protocol": protocol,
        "runs": runs,
        "seed": seed,
        "accepted": accepted,
        "pass_count": pass_count,
        "pass_rate": pass_count as f64 / runs as f64,
        "pass_probability": exact,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_bench(kind: BenchKind, out: Option<&Path>) -> Result<()> {
    let (label, value) = match kind {
        BenchKind::Dicke { partition } => ("dicke".to_string(), dicke_benchmark(&partition)?),
        BenchKind::WA { n } => ("w-A".to_string(), w_protocol_a(n)?),
        BenchKind::WG { n } => ("w-G".to_string(), w_protocol_g(n)?),
    };
    let output = serde_json::json!({ "kind": label, "value": value });
    write_output(out, &serde_json::to_string_pretty(&output)?)
}

#[derive(Serialize)]
struct CompareRow {
    protocol: String,
    nu: f64,
    beta: f64,
    n_exact: Option<u64>,
    n_upper: Option<u64>,
    /// Sample-count reduction relative to the first protocol listed.
    reduction_rate: Option<f64>,
}

fn cmd_compare(
    state_path: &Path,
    protocols: &[String],
    eps: f64,
    delta: f64,
    force: bool,
    out: Option<&Path>,
    format: Format,
) -> Result<()> {
    let state = load_checked(state_path, force)?;
    let mut rows: Vec<CompareRow> = Vec::new();
    let mut base: Option<f64> = None;
    for name in protocols {
        let spec = ProtocolSpec::parse(name)?;
        let strategy = build_strategy(&spec, &state)?;
        let gap = spectral_gap(&strategy, &state)?;
        let complexity = sample_complexity(gap.nu, eps, delta).ok();
        let n_exact = complexity.map(|(a, _)| a);
        let reduction = match (base, n_exact) {
            (Some(b), Some(e)) => Some(reduction_rate(b, e as f64)),
            _ => None,
        };
        if base.is_none() {
            base = n_exact.map(|e| e as f64);
        }
        rows.push(CompareRow {
            protocol: name.clone(),
            nu: gap.nu,
            beta: gap.beta,
            n_exact,
            n_upper: complexity.map(|(_, b)| b),
            reduction_rate: reduction,
        });
    }
    let rendered = match format {
        Format::Json => serde_json::to_string_pretty(&rows)?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["protocol", "nu", "beta", "n_exact", "n_upper", "reduction_rate"])?;
            for r in &rows {
                wtr.write_record([
                    r.protocol.clone(),
                    r.nu.to_string(),
                    r.beta.to_string(),
                    r.n_exact.map(|v| v.to_string()).unwrap_or_default(),
                    r.n_upper.map(|v| v.to_string()).unwrap_or_default(),
                    r.reduction_rate.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
            String::from_utf8(wtr.into_inner()?)?
        }
    };
    write_output(out, &rendered)
}
