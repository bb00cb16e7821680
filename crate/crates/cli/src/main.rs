//! `qftgi`: exact QFT-interferometer statistics and indistinguishability
//! estimation from the command line.
//!
//! Machine-readable output goes to stdout (or `--out`), a one-line summary
//! and diagnostics to stderr. Exit codes: 0 success, 1 failed verification,
//! 2 usage or parse error, 3 resource guard.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qftgi::estimator::{
    build_a_matrix, pseudo_inverse_analytic, pseudo_inverse_numeric, shots_required_ci_with,
    shots_required_qft_with, CiScale, NonPrimeBound,
};
use qftgi::format::{csv_table, distribution_csv, fmt_f64, q_marginals_csv, to_json};
use qftgi::optics::{qft_matrix, UnitaryMatrix};
use qftgi::probability::{
    output_distribution, p_partition, q_marginals_analytic, q_marginals_bruteforce,
    verify_pztl_uniformity,
};
use qftgi::sampler::{
    compare_protocols_with, comparison_csv, phase_grid, run_ci_experiment_with,
    run_qft_experiment_with, ExperimentResult, PpnrMode, SampleOptions, DEFAULT_SEED,
};
use qftgi::states::{
    enumerate_outputs, enumerate_partition_states, parse_list, FockState, PartitionState,
};

use config::{ExperimentConfig, Protocol, ShotBudget};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verify(String),
    Guard(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Guard(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Verify(_) => "verification",
            CliError::Usage(_) => "usage",
            CliError::Guard(_) => "resource_guard",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Verify(m) | CliError::Guard(m) => m,
        }
    }
}

impl From<qftgi::Error> for CliError {
    fn from(e: qftgi::Error) -> Self {
        match e {
            qftgi::Error::InvalidInput(_) | qftgi::Error::DimensionMismatch(_) => {
                CliError::Usage(e.to_string())
            }
            qftgi::Error::Guard(_) => CliError::Guard(e.to_string()),
            qftgi::Error::Numerical(_) => CliError::Verify(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "qftgi",
    version,
    about = "Genuine indistinguishability via the quantum Fourier interferometer"
)]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format (default: csv for `compare`, json otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write machine output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact transition probabilities, output distributions or Q-marginals.
    Prob(ProbArgs),
    /// Run a simulated QFT or CI experiment and estimate c1.
    Estimate(EstimateArgs),
    /// Sample-count comparison of the QFT and CI protocols.
    Compare(CompareArgs),
    /// Numerical verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitaryKind {
    Qft,
    Haar,
    Identity,
}

#[derive(Args)]
struct ProbArgs {
    #[arg(long, value_enum, default_value = "qft")]
    unitary: UnitaryKind,
    /// Number of modes.
    #[arg(long)]
    n: usize,
    /// Input occupations (default: one photon per mode).
    #[arg(long)]
    occupations: Option<String>,
    /// Register label per photon (default: all indistinguishable).
    #[arg(long)]
    registers: Option<String>,
    /// Output occupations for a single transition probability.
    #[arg(long, conflicts_with = "q_marginals")]
    output: Option<String>,
    /// Print P(Q = k) instead of the full distribution.
    #[arg(long)]
    q_marginals: bool,
    /// Seed for `--unitary haar`.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also print the unitary to stderr as JSON.
    #[arg(long)]
    dump_unitary: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Single,
    Combined,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundArg {
    Chebyshev,
    Hoeffding,
}

impl From<BoundArg> for NonPrimeBound {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::Chebyshev => NonPrimeBound::Chebyshev,
            BoundArg::Hoeffding => NonPrimeBound::Hoeffding,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// JSON experiment config; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    protocol: Option<Protocol>,
    #[arg(long)]
    n: Option<usize>,
    /// Inline mixture, e.g. "0.8:1,1,1;0.2:1,2,3".
    #[arg(long)]
    mixture: Option<String>,
    /// JSON mixture file.
    #[arg(long)]
    mixture_file: Option<PathBuf>,
    /// Synthetic c1 (rest fully distinguishable).
    #[arg(long)]
    c1: Option<f64>,
    /// Shots (QFT) or shots per phase (CI).
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulate pseudo-number-resolving detectors with this fan-out per mode.
    #[arg(long)]
    ppnr: Option<usize>,
    /// Include empirical and exact Q-marginals in the output.
    #[arg(long)]
    dump_marginals: bool,
    /// Number of CI phases over [0, 2 pi].
    #[arg(long)]
    phases: Option<usize>,
    #[arg(long, value_enum)]
    ci_scale: Option<ScaleArg>,
    /// Report wall time in the output (otherwise 0, keeping output reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 30)]
    n_max: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.005)]
    delta: f64,
    /// Bound used for non-prime n.
    #[arg(long, value_enum, default_value = "chebyshev")]
    bound: BoundArg,
}

#[derive(Args)]
struct VerifyArgs {
    /// Zero-transmission law for a fully indistinguishable input.
    #[arg(long)]
    ztl: bool,
    /// Analytic vs numeric pseudo-inverse.
    #[arg(long)]
    pinv: bool,
    /// Periodic suppression and 1/t spread for a periodic Fock input.
    #[arg(long)]
    uniformity: bool,
    /// Closed-form vs brute-force Q-marginals over all partitions.
    #[arg(long)]
    theorem1: bool,
    /// Photon number for ztl (default 5), pinv (12) and theorem1 (5).
    #[arg(long)]
    n: Option<usize>,
    /// Modes for the uniformity check.
    #[arg(long, default_value_t = 6)]
    m: usize,
    /// Input period for the uniformity check.
    #[arg(long, default_value_t = 3)]
    t: usize,
    /// Override every check's tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

struct Output {
    text: String,
    summary: String,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        write_output(cli.out.as_ref(), &out.text)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            if !out.summary.is_empty() {
                eprintln!("{}", out.summary);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            let diag = serde_json::json!({
                "level": "error",
                "kind": e.kind(),
                "exit_code": e.code(),
                "message": e.message(),
            });
            eprintln!("{diag}");
            ExitCode::from(e.code())
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> CliResult<Output> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Prob(a) => cmd_prob(a, cli.format.unwrap_or(Format::Json)),
        Command::Estimate(a) => {
            cmd_estimate(a, cli.format.unwrap_or(Format::Json), cli.out.is_some())
        }
        Command::Compare(a) => cmd_compare(a, cli.format.unwrap_or(Format::Csv)),
        Command::Verify(a) => cmd_verify(a, cli.format.unwrap_or(Format::Json)),
    }
}

fn json_line<T: Serialize + ?Sized>(value: &T) -> CliResult<String> {
    Ok(to_json(value)? + "\n")
}

fn cmd_prob(a: &ProbArgs, format: Format) -> CliResult<Output> {
    let u = match a.unitary {
        UnitaryKind::Qft => qft_matrix(a.n)?,
        UnitaryKind::Identity => UnitaryMatrix::identity(a.n)?,
        UnitaryKind::Haar => {
            use rand::SeedableRng;
            UnitaryMatrix::haar_random(a.n, &mut rand_chacha::ChaCha8Rng::seed_from_u64(a.seed))?
        }
    };
    if a.dump_unitary {
        eprintln!("{}", to_json(u.matrix())?);
    }
    let occupations = match &a.occupations {
        Some(s) => FockState::new(parse_list(s)?)?,
        None => FockState::one_per_mode(a.n)?,
    };
    let input = match &a.registers {
        Some(s) => PartitionState::new(occupations, parse_list(s)?)?,
        None => PartitionState::indistinguishable(occupations),
    };

    if let Some(s) = &a.output {
        let output = FockState::new(parse_list(s)?)?;
        let p = p_partition(&u, &input, &output)?;
        let text = match format {
            Format::Json => json_line(&serde_json::json!({
                "input": input,
                "output": output,
                "q_value": output.q_value(),
                "probability": p,
            }))?,
            Format::Csv => csv_table(
                &["occupations", "q_value", "probability"],
                [[s.clone(), output.q_value().to_string(), fmt_f64(p)]],
            )?,
        };
        return Ok(Output {
            text,
            summary: format!("P({} -> {output}) = {p:e}", input.occupations()),
            code: 0,
        });
    }

    let dist = output_distribution(&u, &input)?;
    if a.q_marginals {
        let q = dist.q_marginals()?;
        let text = match format {
            Format::Json => json_line(&serde_json::json!({ "q_marginals": q }))?,
            Format::Csv => q_marginals_csv(&q)?,
        };
        let summary = format!("P(Q=k) = {:?}", q.probabilities());
        return Ok(Output {
            text,
            summary,
            code: 0,
        });
    }
    let text = match format {
        Format::Json => {
            let entries: Vec<_> = dist
                .entries()
                .iter()
                .map(|(s, p)| serde_json::json!({"occupations": s, "q_value": s.q_value(), "probability": p}))
                .collect();
            json_line(&serde_json::json!({ "entries": entries }))?
        }
        Format::Csv => distribution_csv(&dist)?,
    };
    Ok(Output {
        text,
        summary: format!("{} outputs, total {}", dist.len(), dist.total()),
        code: 0,
    })
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    protocol: Protocol,
    n: usize,
    seed: u64,
    #[serde(flatten)]
    result: &'a ExperimentResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_marginals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_q_marginals: Option<Vec<f64>>,
}

fn merged_config(a: &EstimateArgs, out_given: bool) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = a.protocol {
        cfg.protocol = v;
    }
    if a.n.is_some() {
        cfg.n = a.n;
    }
    // Any mixture flag replaces every mixture source from the file.
    if a.mixture.is_some() || a.mixture_file.is_some() || a.c1.is_some() {
        cfg.mixture = a.mixture.clone();
        cfg.mixture_file = a.mixture_file.clone();
        cfg.c1 = a.c1;
    }
    if a.shots.is_some() {
        cfg.shots = a.shots;
        cfg.epsilon = None;
        cfg.delta = None;
    }
    if a.epsilon.is_some() || a.delta.is_some() {
        if a.shots.is_none() {
            cfg.shots = None;
        }
        cfg.epsilon = a.epsilon.or(cfg.epsilon);
        cfg.delta = a.delta.or(cfg.delta);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.ppnr.is_some() {
        cfg.ppnr = a.ppnr;
    }
    cfg.dump_marginals |= a.dump_marginals;
    if let Some(p) = a.phases {
        cfg.phases = p;
    }
    if let Some(s) = a.ci_scale {
        cfg.ci_scale = match s {
            ScaleArg::Single => CiScale::SingleOutput,
            ScaleArg::Combined => CiScale::CombinedOutputs,
        };
    }
    if out_given {
        cfg.output = None;
    }
    Ok(cfg)
}

fn cmd_estimate(a: &EstimateArgs, format: Format, out_given: bool) -> CliResult<Output> {
    let cfg = merged_config(a, out_given)?;
    if let Some(dir) = cfg.output.as_ref().and_then(|p| p.parent()) {
        if !dir.as_os_str().is_empty() && !dir.is_dir() {
            return Err(CliError::Usage(format!(
                "output directory {} does not exist",
                dir.display()
            )));
        }
    }
    let budget = cfg.budget()?;
    let (n, mut result, q_marginals, exact_q_marginals) = match cfg.protocol {
        Protocol::Qft => {
            let mixture = cfg.mixture()?;
            let n = mixture.photons();
            let shots = match budget {
                ShotBudget::Fixed(s) => s,
                ShotBudget::Target { epsilon, delta } => {
                    shots_required_qft_with(epsilon, delta, n, NonPrimeBound::Chebyshev)?
                }
            };
            let options = SampleOptions {
                ppnr: cfg.ppnr.map(|fanout| PpnrMode { fanout }),
            };
            let result = run_qft_experiment_with(&mixture, shots, cfg.seed, options)?;
            let (emp, exact) = if cfg.dump_marginals {
                let emp = result.tally.as_ref().map(|t| t.q_marginals()).transpose()?;
                let u = qft_matrix(n)?;
                let mut exact = vec![0.0; n];
                for c in mixture.components() {
                    for (e, p) in exact
                        .iter_mut()
                        .zip(q_marginals_bruteforce(&u, &c.state)?.probabilities())
                    {
                        *e += c.weight * p;
                    }
                }
                (emp.map(|q| q.probabilities().to_vec()), Some(exact))
            } else {
                (None, None)
            };
            (n, result, emp, exact)
        }
        Protocol::Ci => {
            if cfg.ppnr.is_some() {
                return Err(CliError::Usage(
                    "--ppnr applies to the qft protocol only".into(),
                ));
            }
            let (n, c1) = if cfg.mixture.is_some() || cfg.mixture_file.is_some() {
                let m = cfg.mixture()?;
                (m.photons(), m.genuine_indistinguishability())
            } else {
                let n = cfg
                    .n
                    .ok_or_else(|| CliError::Usage("ci protocol needs n".into()))?;
                let c1 = cfg
                    .c1
                    .ok_or_else(|| CliError::Usage("ci protocol needs c1 or a mixture".into()))?;
                (n, c1)
            };
            if cfg.phases < 3 {
                return Err(CliError::Usage(format!(
                    "ci fringe needs at least 3 phases, got {}",
                    cfg.phases
                )));
            }
            let per_phase = match budget {
                ShotBudget::Fixed(s) => s,
                ShotBudget::Target { epsilon, delta } => {
                    let total = shots_required_ci_with(epsilon, delta, n, cfg.ci_scale)?;
                    u64::try_from(total.div_ceil(cfg.phases as u128)).map_err(|_| {
                        CliError::Guard(format!("CI shot count {total} exceeds 64 bits"))
                    })?
                }
            };
            let result = run_ci_experiment_with(
                n,
                c1,
                &phase_grid(cfg.phases),
                per_phase,
                cfg.seed,
                cfg.ci_scale,
            )?;
            (n, result, None, None)
        }
    };
    let wall = result.wall_time_ms;
    if !a.timing {
        result.wall_time_ms = 0;
    }
    let e = &result.estimate;
    let summary = format!(
        "{} n={n}: c1 = {:.4} +/- {:.4} ({}, {} shots, seed {}, {wall} ms){}",
        cfg.protocol.as_str(),
        e.c1,
        e.stderr,
        serde_json::to_value(e.method)
            .map(|v| v.as_str().unwrap_or("").to_string())
            .unwrap_or_default(),
        e.shots,
        cfg.seed,
        result
            .true_c1
            .map(|t| format!(", true c1 = {t}"))
            .unwrap_or_default()
    );
    let text = match format {
        Format::Json => json_line(&EstimateOutput {
            protocol: cfg.protocol,
            n,
            seed: cfg.seed,
            result: &result,
            q_marginals,
            exact_q_marginals,
        })?,
        Format::Csv => csv_table(
            &[
                "protocol", "n", "seed", "shots", "c1", "stderr", "pre_clip", "method", "true_c1",
            ],
            [[
                cfg.protocol.as_str().to_string(),
                n.to_string(),
                cfg.seed.to_string(),
                e.shots.to_string(),
                fmt_f64(e.c1),
                fmt_f64(e.stderr),
                fmt_f64(e.pre_clip),
                serde_json::to_value(e.method)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                result.true_c1.map(fmt_f64).unwrap_or_default(),
            ]],
        )?,
    };
    if let Some(path) = &cfg.output {
        write_output(Some(path), &text)?;
        return Ok(Output {
            text: String::new(),
            summary,
            code: 0,
        });
    }
    Ok(Output {
        text,
        summary,
        code: 0,
    })
}

fn cmd_compare(a: &CompareArgs, format: Format) -> CliResult<Output> {
    if a.n_min < 2 || a.n_min > a.n_max {
        return Err(CliError::Usage(format!(
            "empty or invalid photon range {}..={} (need 2 <= n-min <= n-max)",
            a.n_min, a.n_max
        )));
    }
    let ns: Vec<usize> = (a.n_min..=a.n_max).collect();
    let rows = compare_protocols_with(&ns, a.epsilon, a.delta, a.bound.into())?;
    let text = match format {
        Format::Csv => comparison_csv(&rows)?,
        Format::Json => json_line(&rows)?,
    };
    Ok(Output {
        text,
        summary: format!("{} rows", rows.len()),
        code: 0,
    })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    parameters: String,
    max_deviation: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn new(name: &'static str, parameters: String, max_deviation: f64, tolerance: f64) -> Self {
        Check {
            name,
            parameters,
            max_deviation,
            tolerance,
            pass: max_deviation < tolerance,
        }
    }
}

fn check_ztl(n: usize) -> CliResult<Check> {
    let u = qft_matrix(n)?;
    let input = PartitionState::indistinguishable(FockState::one_per_mode(n)?);
    // Guard the output count before computing the distribution.
    enumerate_outputs(n, n)?;
    let dist = output_distribution(&u, &input)?;
    let worst = dist
        .entries()
        .iter()
        .filter(|(s, _)| s.q_value() != 0)
        .map(|(_, p)| p.abs())
        .fold(0.0, f64::max);
    Ok(Check::new("ztl", format!("n={n}"), worst, 1e-12))
}

fn check_pinv(n: usize) -> CliResult<Check> {
    let a = pseudo_inverse_analytic(n)?;
    let b = pseudo_inverse_numeric(&build_a_matrix(n)?)?;
    Ok(Check::new(
        "pinv",
        format!("n={n}"),
        a.max_abs_diff(&b),
        1e-10,
    ))
}

fn check_uniformity(m: usize, t: usize) -> CliResult<Check> {
    if t == 0 || !m.is_multiple_of(t) || t == m {
        return Err(CliError::Usage(format!(
            "--t must be a proper divisor of --m (m={m}, t={t})"
        )));
    }
    let input = FockState::new((0..m).map(|i| usize::from(i % t == 0)).collect())?;
    let rep = verify_pztl_uniformity(m, &input)?;
    let mut dev = rep.max_suppressed;
    if rep.uniform.is_some() {
        dev = dev.max(rep.max_uniform_deviation);
    }
    Ok(Check::new("uniformity", format!("m={m},t={t}"), dev, 1e-9))
}

fn check_theorem1(n: usize) -> CliResult<Check> {
    let u = qft_matrix(n)?;
    let mut worst = 0.0f64;
    for r in enumerate_partition_states(n)? {
        let a = q_marginals_analytic(&r)?;
        let b = q_marginals_bruteforce(&u, &r)?;
        worst = worst.max(a.max_abs_diff(&b));
    }
    Ok(Check::new("theorem1", format!("n={n}"), worst, 1e-9))
}

fn cmd_verify(a: &VerifyArgs, format: Format) -> CliResult<Output> {
    let all = !(a.ztl || a.pinv || a.uniformity || a.theorem1);
    let mut checks = Vec::new();
    if all || a.ztl {
        checks.push(check_ztl(a.n.unwrap_or(5))?);
    }
    if all || a.pinv {
        checks.push(check_pinv(a.n.unwrap_or(12))?);
    }
    if all || a.uniformity {
        checks.push(check_uniformity(a.m, a.t)?);
    }
    if all || a.theorem1 {
        checks.push(check_theorem1(a.n.unwrap_or(5))?);
    }
    if let Some(tol) = a.tolerance {
        for c in &mut checks {
            c.tolerance = tol;
            c.pass = c.max_deviation < tol;
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    let text = match format {
        Format::Json => json_line(&serde_json::json!({ "pass": pass, "checks": checks }))?,
        Format::Csv => csv_table(
            &["check", "parameters", "max_deviation", "tolerance", "pass"],
            checks.iter().map(|c| {
                [
                    c.name.to_string(),
                    c.parameters.clone(),
                    fmt_f64(c.max_deviation),
                    fmt_f64(c.tolerance),
                    c.pass.to_string(),
                ]
            }),
        )?,
    };
    let summary = checks
        .iter()
        .map(|c| {
            format!(
                "{} {} ({}): max deviation {:e} (tol {:e})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.parameters,
                c.max_deviation,
                c.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Output {
        text,
        summary,
        code: if pass { 0 } else { 1 },
    })
}
