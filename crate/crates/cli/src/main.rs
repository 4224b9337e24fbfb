//! `kmjack`: jackknife-corrected Kaplan-Meier estimates and simulation studies.
//!
//! Exit codes: 0 on success, 2 for usage, input or configuration errors,
//! 3 for numeric failures such as calibration or model fitting.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kmjack::experiments::{self, StudyConfig, StudyKind, DEFAULT_SEED};
use kmjack::imputation::{DEFAULT_GAP_FRACTION, DEFAULT_RESAMPLES};
use kmjack::simgen::{calibrate_censoring, AftLogLifetime, CensorFamily, DistSpec, SkewedLaw, AFT_BETA, AFT_SIGMA};
use kmjack::{
    corrected_estimate, modified_estimates, read_dataset, write_dataset, Dataset, EstimateBundle, ImputationMethod,
    LastWeightRule, Observation,
};

#[derive(Parser)]
#[command(name = "kmjack", version, about = "Jackknife bias correction for Kaplan-Meier integrals")]
struct Cli {
    /// Worker threads for studies (default: one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the mean lifetime of a dataset and its jackknife bias
    Estimate(EstimateArgs),
    /// Impute a censored largest observation
    Impute(ImputeArgs),
    /// Koziol-Green study (exponential lifetimes and censoring)
    KgStudy(StudyArgs),
    /// Skewed lifetime distributions with their paired censoring laws
    DistStudy(StudyArgs),
    /// Log-normal accelerated failure time model with five covariates
    AftStudy(StudyArgs),
    /// Solve for the censoring parameter giving a target censoring level
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct ImputationArgs {
    /// Gap fraction q for `predicted-difference`
    #[arg(long, default_value_t = DEFAULT_GAP_FRACTION)]
    gap_fraction: f64,

    /// Bootstrap refits for `resampled-mean` and `resampled-median`
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    resamples: usize,

    /// Seed for bootstrap resampling
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightRule {
    Reclassified,
    Observed,
}

impl From<WeightRule> for LastWeightRule {
    fn from(rule: WeightRule) -> Self {
        match rule {
            WeightRule::Reclassified => LastWeightRule::Reclassified,
            WeightRule::Observed => LastWeightRule::Observed,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV with columns `[x1,...,xp,]time,status`
    file: PathBuf,

    /// Imputation method applied when the largest observation is censored:
    /// efron, predicted-difference (alias nu), conditional-mean,
    /// conditional-median, resampled-mean, resampled-median
    #[arg(long = "impute")]
    method: Option<String>,

    /// Last weight used by the modified estimator
    #[arg(long, value_enum, default_value = "reclassified")]
    last_weight: WeightRule,

    #[command(flatten)]
    imputation: ImputationArgs,
}

#[derive(Args)]
struct ImputeArgs {
    /// CSV with columns `[x1,...,xp,]time,status`
    file: PathBuf,

    /// Imputation method (see `estimate --help`)
    #[arg(long, default_value = "predicted-difference")]
    method: String,

    /// Write the dataset with the imputed observation to this CSV
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    imputation: ImputationArgs,
}

#[derive(Args)]
struct StudyArgs {
    /// TOML or JSON study configuration
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// Master seed
    #[arg(long)]
    seed: Option<u64>,

    /// Replications per cell
    #[arg(long)]
    replications: Option<usize>,

    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,

    /// Censoring percentages, comma separated
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,

    /// Imputation method for the modified estimators
    #[arg(long)]
    imputation: Option<String>,

    /// Gap fraction q for `predicted-difference` [default: 0.25]
    #[arg(long)]
    gap_fraction: Option<f64>,

    /// Bootstrap refits for the resampled methods [default: 100]
    #[arg(long)]
    resamples: Option<usize>,

    /// Skewed laws for dist-study: lognormal, exponential, gamma, weibull
    #[arg(long, value_delimiter = ',')]
    distributions: Option<Vec<String>>,

    /// Intercept of the AFT model
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Exponential,
    Uniform,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Lifetime law, e.g. `exp:0.2`, `lognormal:1.1,1`, `gamma:4,1`,
    /// `weibull:3,3.39`, or `aft` / `aft:ALPHA` for the AFT log-lifetime
    #[arg(long)]
    lifetime: String,

    /// Censoring family; defaults to exponential for exponential lifetimes
    /// and uniform U(a, 2a) otherwise
    #[arg(long, value_enum)]
    family: Option<Family>,

    /// Target censoring percentage
    #[arg(long)]
    percent: f64,
}

fn print_bundle(prefix: &str, b: &EstimateBundle) {
    println!("{prefix}s_hat: {}", b.s_hat);
    println!("{prefix}bias: {}", b.bias);
    println!("{prefix}s_tilde: {}", b.s_tilde);
}

fn parse_method(name: &str, args: &ImputationArgs) -> anyhow::Result<ImputationMethod> {
    Ok(ImputationMethod::from_name(name, args.gap_fraction, args.resamples)?)
}

fn identity(t: f64) -> f64 {
    t
}

fn cmd_estimate(args: &EstimateArgs) -> anyhow::Result<()> {
    let data = read_dataset(&args.file)?;
    let s = &data.sample;
    let original = corrected_estimate(s, identity)?;
    println!("n: {}", s.len());
    println!("case: {}", original.case);
    print_bundle("", &original);
    if original.case.last {
        println!("imputation: none");
        return Ok(());
    }
    let Some(name) = &args.method else {
        println!("imputation: none (largest observation censored; pass --impute for the modified estimator)");
        return Ok(());
    };
    let method = parse_method(name, &args.imputation)?;
    let imputed = method.impute(&data, args.imputation.seed)?;
    let modified = modified_estimates(&imputed, identity, args.last_weight.into())?;
    println!("imputation: {}", imputed.method());
    println!("imputed_time: {}", imputed.imputed_time());
    print_bundle("modified_", &modified);
    Ok(())
}

fn cmd_impute(args: &ImputeArgs) -> anyhow::Result<()> {
    let data = read_dataset(&args.file)?;
    let method = parse_method(&args.method, &args.imputation)?;
    let imputed = method.impute(&data, args.imputation.seed)?;
    println!("{}", imputed.imputed_time());
    if let Some(out) = &args.out {
        let s = &data.sample;
        let mut raw: Vec<Observation> = s.observations().collect();
        let last = raw.len() - 1;
        raw[last] = Observation::event(imputed.imputed_time());
        let completed = Dataset::from_rows(&raw, data.covariates.clone())?;
        write_dataset(out, &completed).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn parse_law(name: &str) -> anyhow::Result<SkewedLaw> {
    let law = SkewedLaw::ALL.into_iter().find(|law| law.name() == name);
    Ok(law.ok_or_else(|| kmjack::Error::Config(format!("unknown distribution `{name}`")))?)
}

fn study_config(kind: StudyKind, args: &StudyArgs) -> anyhow::Result<StudyConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = StudyConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?;
            if cfg.study != kind {
                return Err(kmjack::Error::Config(format!(
                    "{} describes a {} study, not {}",
                    path.display(),
                    cfg.study.name(),
                    kind.name()
                ))
                .into());
            }
            cfg
        }
        None => StudyConfig::new(kind),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(n) = &args.n {
        cfg.n_list = n.clone();
    }
    if let Some(p) = &args.p {
        cfg.p_list = p.clone();
    }
    if let Some(name) = &args.imputation {
        let gap = args.gap_fraction.unwrap_or(DEFAULT_GAP_FRACTION);
        cfg.imputation = Some(ImputationMethod::from_name(name, gap, args.resamples.unwrap_or(DEFAULT_RESAMPLES))?);
    }
    if let Some(names) = &args.distributions {
        cfg.distributions = names.iter().map(|n| parse_law(n)).collect::<anyhow::Result<_>>()?;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    let mut cfg = cfg.resolved();
    // tuning flags also apply to a method taken from the config file or the study default
    match cfg.imputation.as_mut() {
        Some(ImputationMethod::PredictedDifference { gap_fraction }) => {
            *gap_fraction = args.gap_fraction.unwrap_or(*gap_fraction);
        }
        Some(ImputationMethod::ResampledMean { resamples } | ImputationMethod::ResampledMedian { resamples }) => {
            *resamples = args.resamples.unwrap_or(*resamples);
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_study(kind: StudyKind, args: &StudyArgs) -> anyhow::Result<()> {
    let cfg = study_config(kind, args)?;
    let out = args.out.clone().unwrap_or_else(|| Path::new("results").join(kind.name()));
    let progress = |scenario: &str, cell: &experiments::CellDiagnostics| {
        eprintln!(
            "{scenario}: n={} p={}% done (censored {:.3})",
            cell.n, cell.p_percent, cell.empirical_censoring
        );
    };
    let results = experiments::run_study_with_progress(&cfg, &progress)?;
    for result in &results {
        let dir = if kind == StudyKind::Dist { out.join(&result.scenario) } else { out.clone() };
        experiments::emit_tables(result, &dir).with_context(|| format!("writing tables to {}", dir.display()))?;
        eprintln!(
            "{}: wrote {} ({:.1}s)",
            result.scenario,
            dir.display(),
            result.elapsed_seconds
        );
    }
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> anyhow::Result<()> {
    let p = args.percent / 100.0;
    let value = if let Some(rest) = args.lifetime.strip_prefix("aft") {
        let alpha = match rest.strip_prefix(':') {
            Some(a) => a.trim().parse::<f64>().with_context(|| format!("invalid alpha `{a}`"))?,
            None if rest.is_empty() => 0.0,
            None => bail!(kmjack::Error::Config(format!("unknown lifetime `{}`", args.lifetime))),
        };
        if matches!(args.family, Some(Family::Exponential)) {
            bail!(kmjack::Error::Config("the AFT model uses uniform log-censoring".into()));
        }
        let law = AftLogLifetime::new(alpha, &AFT_BETA, AFT_SIGMA)?;
        calibrate_censoring(&law, CensorFamily::UniformA2A, p)?
    } else {
        let spec = DistSpec::parse(&args.lifetime)?;
        let family = match args.family {
            Some(Family::Exponential) => CensorFamily::Exponential,
            Some(Family::Uniform) => CensorFamily::UniformA2A,
            None if matches!(spec, DistSpec::Exponential { .. }) => CensorFamily::Exponential,
            None => CensorFamily::UniformA2A,
        };
        calibrate_censoring(&spec, family, p)?
    };
    println!("{value}");
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Impute(a) => cmd_impute(a),
        Command::KgStudy(a) => cmd_study(StudyKind::Kg, a),
        Command::DistStudy(a) => cmd_study(StudyKind::Dist, a),
        Command::AftStudy(a) => cmd_study(StudyKind::Aft, a),
        Command::Calibrate(a) => cmd_calibrate(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .filter_map(|e| e.downcast_ref::<kmjack::Error>())
        .any(kmjack::Error::is_numeric);
    if numeric {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(0) => Err(anyhow::anyhow!("--threads must be positive")),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .context("building worker pool")
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
