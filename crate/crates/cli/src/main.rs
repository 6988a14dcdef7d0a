use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

use enaqt_core::chain::ChainSpec;
use enaqt_core::config::RunConfig;
use enaqt_core::fit::{fit_power_law, FitResult};
use enaqt_core::optimizer::find_optimal_dephasing;
use enaqt_core::registry::{builtin, Registries};
use enaqt_core::sweep::{
    aggregate, clipped_fraction, gradient_only_scan, read_records, run_sweep,
    summarize_uniformisation, transient_experiment, uniformisation_comparison, write_csv, GroupKey,
    Manifest, SweepRecord,
};
use enaqt_core::Error;

const EXPERIMENTS: [&str; 7] = [
    "sweep",
    "fit",
    "optimize",
    "dynamics",
    "redfield-sweep",
    "uniformisation",
    "gradient-scan",
];

const EXIT_UNKNOWN_EXPERIMENT: u8 = 2;
const EXIT_BAD_CONFIG: u8 = 3;
const EXIT_UNWRITABLE: u8 = 4;
const EXIT_COMPUTATION: u8 = 5;
const EXIT_USAGE: u8 = 64;

/// Noise-assisted transport experiments on disordered 1D chains.
#[derive(Debug, Parser)]
#[command(name = "enaqt", version)]
struct Cli {
    /// sweep | fit | optimize | dynamics | redfield-sweep | uniformisation | gradient-scan
    experiment: String,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensemble runs.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
        }
    }

    fn config(e: Error) -> Self {
        Self::new(EXIT_BAD_CONFIG, "malformed-config", e.to_string())
    }

    fn compute(e: Error) -> Self {
        match e {
            Error::Io(_) => Self::new(EXIT_UNWRITABLE, "unwritable-output", e.to_string()),
            e => Self::new(EXIT_COMPUTATION, "computation-failed", e.to_string()),
        }
    }
}

struct Run {
    config: RunConfig,
    registries: &'static Registries,
    out: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn write_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| unwritable(&path, e))?;
        write_csv(rows, BufWriter::new(file)).map_err(Failure::compute)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| unwritable(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), value)
            .map_err(|e| Failure::new(EXIT_UNWRITABLE, "unwritable-output", e.to_string()))
    }
}

fn unwritable(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(
        EXIT_UNWRITABLE,
        "unwritable-output",
        format!("cannot write {}: {e}", path.display()),
    )
}

fn record_clipping(manifest: &mut Manifest, label: &str, records: &[SweepRecord]) {
    manifest.count_statuses(records.iter().map(|r| &r.status));
    manifest
        .clipped_fractions
        .insert(label.to_string(), clipped_fraction(records));
    for g in aggregate(records, &[GroupKey::N, GroupKey::Eta]) {
        let key = format!("{label}:N={}:eta={}", g.key[0].1, g.key[1].1);
        manifest.clipped_fractions.insert(key, g.clipped_fraction);
    }
}

fn sweep(run: &mut Run) -> Result<(), Failure> {
    let config = run
        .config
        .sweep_config(run.registries, None)
        .map_err(Failure::config)?;
    let records = run_sweep(&config).map_err(Failure::compute)?;
    record_clipping(&mut run.manifest, "all", &records);
    run.write_rows("records.csv", &records)
}

fn gradient_scan(run: &mut Run) -> Result<(), Failure> {
    let config = run
        .config
        .sweep_config(run.registries, None)
        .map_err(Failure::config)?;
    let gradients = config.gradients.clone();
    let records = gradient_only_scan(&config, &gradients).map_err(Failure::compute)?;
    record_clipping(&mut run.manifest, "all", &records);
    run.write_rows("records.csv", &records)
}

#[derive(Serialize)]
struct CurveRow {
    #[serde(rename = "N")]
    n_sites: usize,
    eta: f64,
    sigma: f64,
    realization: usize,
    gamma: f64,
    current: f64,
}

fn optimize(run: &mut Run) -> Result<(), Failure> {
    let mut config = run
        .config
        .sweep_config(run.registries, None)
        .map_err(Failure::config)?;
    config.lengths.truncate(1);
    config.gradients.truncate(1);
    config.sigmas.truncate(1);
    config.realizations = Some(run.config.realizations.unwrap_or(1));
    config.search.record_curve = true;

    let mut records = Vec::new();
    let mut curve = Vec::new();
    for item in config.work_items() {
        let h = item.chain().hamiltonian();
        let response = config
            .model
            .prepare(&h, &config.transport)
            .map_err(Failure::compute)?;
        let result = find_optimal_dephasing(
            response.as_ref(),
            config.peak_finder.as_ref(),
            &config.search,
        );
        for &(gamma, current) in result.curve_samples.iter().flatten() {
            curve.push(CurveRow {
                n_sites: item.n_sites,
                eta: item.gradient,
                sigma: item.sigma,
                realization: item.realization,
                gamma,
                current,
            });
        }
        records.push(SweepRecord {
            n_sites: item.n_sites,
            eta: item.gradient,
            sigma: item.sigma,
            realization: item.realization,
            seed: item.seed,
            ipr: enaqt_core::chain::average_ipr(&h),
            gamma_opt: result.gamma_opt,
            current_max: result.current_max,
            status: result.status,
        });
    }
    record_clipping(&mut run.manifest, "all", &records);
    run.write_rows("records.csv", &records)?;
    run.write_rows("curve.csv", &curve)
}

fn redfield_sweep(run: &mut Run) -> Result<(), Failure> {
    if run.config.model.is_none() {
        run.config.model = Some("redfield".into());
    }
    let betas = run.config.betas();
    if betas.is_empty() {
        return Err(Failure::config(Error::Config(
            "redfield-sweep needs [bath] betas".into(),
        )));
    }
    let mut all = Vec::new();
    for beta in betas {
        let bath = run
            .config
            .bath_at(beta, run.registries)
            .map_err(Failure::config)?;
        let config = run
            .config
            .sweep_config(run.registries, Some(bath))
            .map_err(Failure::config)?;
        let records = run_sweep(&config).map_err(Failure::compute)?;
        record_clipping(&mut run.manifest, &format!("beta={beta}"), &records);
        run.write_rows(&format!("records_beta_{beta}.csv"), &records)?;
        all.extend(records);
    }
    run.manifest.records = all.len();
    Ok(())
}

fn uniformisation(run: &mut Run) -> Result<(), Failure> {
    if run.config.realizations.is_none() {
        run.config.realizations = Some(50);
    }
    let config = run
        .config
        .sweep_config(run.registries, None)
        .map_err(Failure::config)?;
    let records = uniformisation_comparison(&config).map_err(Failure::compute)?;
    run.manifest
        .count_statuses(records.iter().map(|r| &r.opt_status));
    run.write_rows("uniformisation_records.csv", &records)?;
    run.write_rows("uniformisation.csv", &summarize_uniformisation(&records))
}

fn dynamics(run: &mut Run) -> Result<(), Failure> {
    let cfg = &run.config;
    let (rates, times) = cfg.dynamics_times().map_err(Failure::config)?;
    let n = cfg
        .lengths
        .as_ref()
        .and_then(|l| l.first().copied())
        .unwrap_or(41);
    let eta = cfg
        .gradients
        .as_ref()
        .and_then(|g| g.first().copied())
        .unwrap_or(0.0);
    let sigma = cfg
        .sigmas
        .as_ref()
        .and_then(|s| s.first().copied())
        .unwrap_or(0.0);
    let chain = ChainSpec::new(n, eta, sigma, cfg.seed.unwrap_or(0)).map_err(Failure::config)?;
    let result =
        transient_experiment(&chain.hamiltonian(), &rates, &times).map_err(|e| match e {
            Error::InvalidParameter(_) => Failure::config(e),
            e => Failure::compute(e),
        })?;
    let samples: Vec<_> = result.samples().copied().collect();
    run.manifest.records = samples.len();
    let convergence: BTreeMap<String, Option<f64>> = result
        .traces
        .iter()
        .map(|t| (format!("gamma={}", t.dephasing_rate), t.convergence_time))
        .collect();
    run.manifest.config["convergence_times"] = serde_json::json!(convergence);
    run.manifest.config["steady_value"] = serde_json::json!(result.steady_value);
    run.write_rows("dynamics.csv", &samples)
}

fn fit(run: &mut Run) -> Result<(), Failure> {
    let (input, gradient) = match &run.config.fit {
        Some(f) => (f.input.clone(), f.gradient.unwrap_or(0.0)),
        None => (run.out.join("records.csv"), 0.0),
    };
    let file = File::open(&input).map_err(|e| {
        Failure::config(Error::Config(format!(
            "cannot read {}: {e}",
            input.display()
        )))
    })?;
    let records = read_records(file).map_err(|e| Failure::config(Error::Config(e.to_string())))?;
    let mut by_length: BTreeMap<usize, Vec<SweepRecord>> = BTreeMap::new();
    for r in records.into_iter().filter(|r| r.eta == gradient) {
        by_length.entry(r.n_sites).or_default().push(r);
    }
    let mut fits: BTreeMap<String, FitResult> = BTreeMap::new();
    for (n, group) in &by_length {
        run.manifest.count_statuses(group.iter().map(|r| &r.status));
        fits.insert(
            n.to_string(),
            fit_power_law(group).map_err(Failure::compute)?,
        );
    }
    if fits.is_empty() {
        return Err(Failure::compute(Error::Underdetermined {
            available: 0,
            required: enaqt_core::fit::MIN_FIT_POINTS,
        }));
    }
    run.write_json("fit.json", &fits)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if !EXPERIMENTS.contains(&cli.experiment.as_str()) {
        return Err(Failure::new(
            EXIT_UNKNOWN_EXPERIMENT,
            "unknown-experiment",
            format!(
                "unknown experiment {:?}; expected one of {}",
                cli.experiment,
                EXPERIMENTS.join(", ")
            ),
        ));
    }
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(Failure::new(
                EXIT_USAGE,
                "usage",
                "--workers must be at least 1",
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Failure::new(EXIT_USAGE, "usage", e.to_string()))?;
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| unwritable(&cli.out, e))?;
    let probe = cli.out.join(".write-test");
    File::create(&probe).map_err(|e| unwritable(&cli.out, e))?;
    let _ = std::fs::remove_file(&probe);

    let echo = serde_json::to_value(&config).unwrap_or(serde_json::Value::Null);
    let mut run = Run {
        config,
        registries: builtin(),
        out: cli.out.clone(),
        manifest: Manifest::new(&cli.experiment, echo),
    };
    let started = Instant::now();
    match cli.experiment.as_str() {
        "sweep" => sweep(&mut run)?,
        "fit" => fit(&mut run)?,
        "optimize" => optimize(&mut run)?,
        "dynamics" => dynamics(&mut run)?,
        "redfield-sweep" => redfield_sweep(&mut run)?,
        "uniformisation" => uniformisation(&mut run)?,
        "gradient-scan" => gradient_scan(&mut run)?,
        _ => unreachable!("experiment names checked above"),
    }
    run.manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    let manifest = run.manifest.clone();
    run.write_json("manifest.json", &manifest)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let report = serde_json::json!({
                "error": f.kind,
                "message": f.message,
                "exit_code": f.code,
            });
            eprintln!("{report}");
            ExitCode::from(f.code)
        }
    }
}
