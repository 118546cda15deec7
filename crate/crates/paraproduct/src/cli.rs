//! Command line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};
use paraproduct_core::atomic::{stopping_time_decomposition, validate_simple_atom};
use paraproduct_core::dyadic_geometry::{
    build_adjacent_systems, build_dyadic_system, cover_ball, euclidean_shifted_grids, shifted_grid, verify_system,
    AdjacentSystems, DyadicParams, QuasiMetricSpace,
};
use paraproduct_core::function_norms::{evaluate_norm, NormParams, NormVariant};
use paraproduct_core::martingale_ops::{expand, paraproducts, BaseConvention};
use paraproduct_core::measure_space::validate_filtration;
use paraproduct_core::{Filtration, Func, MeasureSpace};
use serde::Serialize;
use serde_json::json;

use crate::dto::{read_json, Config, Context, FiltrationDto, Format, FuncDto, MetricDto, SpaceDto, SystemDto};
use crate::report::{write_csv, VerificationReport};
use crate::suites::{run_suite, RunOptions, SUITES};

#[derive(Debug, Parser)]
#[command(name = "paraproduct", version, about = "Martingale paraproducts, Hardy-type norms and dyadic systems on finite spaces")]
pub struct Cli {
    /// JSON config supplying input paths and verification settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per size for `verify`.
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure space checks.
    Space {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// Filtration checks.
    Filtration {
        #[command(subcommand)]
        action: FiltrationAction,
    },
    /// Print one norm of a function.
    Norm(NormArgs),
    /// Martingale expansion of a function.
    Expand(ExpandArgs),
    /// The three paraproducts of `f` and `g`.
    Paraproduct(ParaproductArgs),
    /// Atomic decompositions.
    Atoms {
        #[command(subcommand)]
        action: AtomsAction,
    },
    /// Dyadic systems on a quasi-metric space.
    Dyadic {
        #[command(subcommand)]
        action: DyadicAction,
    },
    /// Adjacent dyadic systems.
    Adjacent {
        #[command(subcommand)]
        action: AdjacentAction,
    },
    /// Smallest cube of an adjacent family containing a ball.
    CoverBall(CoverBallArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum SpaceAction {
    Validate(SpaceInput),
}

#[derive(Debug, Subcommand)]
pub enum FiltrationAction {
    Validate(FiltInput),
}

#[derive(Debug, Subcommand)]
pub enum AtomsAction {
    /// Stopping-time decomposition into simple atoms.
    Decompose(AtomsArgs),
}

#[derive(Debug, Subcommand)]
pub enum DyadicAction {
    Build(DyadicBuildArgs),
    Verify(DyadicVerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum AdjacentAction {
    Build(AdjacentArgs),
}

#[derive(Debug, Args)]
pub struct SpaceInput {
    #[arg(long)]
    pub space: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FiltInput {
    #[command(flatten)]
    pub space: SpaceInput,
    #[arg(long)]
    pub filtration: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuncInput {
    #[command(flatten)]
    pub filt: FiltInput,
    #[arg(long)]
    pub function: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Zero,
    Expectation,
}

impl From<ConventionArg> for BaseConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Zero => BaseConvention::Zero,
            ConventionArg::Expectation => BaseConvention::Expectation,
        }
    }
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[command(flatten)]
    pub input: FuncInput,
    /// One of Hp_S, hp_s, Hp_max, BMO, bmo, h1_diag, Lambda_q, Lambda_sup, Orlicz_Hardy.
    #[arg(long)]
    pub variant: String,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Expectation)]
    pub convention: ConventionArg,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub input: FuncInput,
    #[arg(long, value_enum, default_value_t = ConventionArg::Expectation)]
    pub convention: ConventionArg,
}

#[derive(Debug, Args)]
pub struct ParaproductArgs {
    #[command(flatten)]
    pub input: FuncInput,
    #[arg(long)]
    pub g: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AtomsArgs {
    #[command(flatten)]
    pub input: FuncInput,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
}

#[derive(Debug, Args)]
pub struct MetricInput {
    #[arg(long)]
    pub metric: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DyadicBuildArgs {
    #[command(flatten)]
    pub metric: MetricInput,
    /// Build the shifted grid with this shift (one entry in {0,1,2} per axis)
    /// instead of a net-based system.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<u8>>,
}

#[derive(Debug, Args)]
pub struct DyadicVerifyArgs {
    #[command(flatten)]
    pub metric: MetricInput,
    #[arg(long)]
    pub system: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdjacentArgs {
    #[command(flatten)]
    pub metric: MetricInput,
    /// Use the shifted Euclidean grids.
    #[arg(long)]
    pub grids: bool,
    /// Number of net-based systems.
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    /// Largest acceptable covering constant for net-based systems.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub max_constant: f64,
}

#[derive(Debug, Args)]
pub struct CoverBallArgs {
    #[command(flatten)]
    pub adjacent: AdjacentArgs,
    /// Ball center (point id).
    #[arg(long)]
    pub x: usize,
    /// Ball radius.
    #[arg(long)]
    pub r: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite ids; every suite when neither this nor the config names any.
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    /// Space sizes replacing the suite defaults.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// List suite ids and exit.
    #[arg(long)]
    pub list: bool,
}

/// Global settings after merging the config file under the flags.
struct Env {
    config: Config,
    seed: u64,
    trials: Option<u64>,
    format: Format,
    out: Option<PathBuf>,
}

impl Env {
    fn new(cli: &Cli) -> anyhow::Result<Self> {
        let config: Config = match &cli.config {
            Some(path) => read_json(path).context("config")?,
            None => Config::default(),
        };
        Ok(Self {
            seed: cli.seed.or(config.seed).unwrap_or(0),
            trials: cli.trials.or(config.trials),
            format: cli.format.or(config.format).unwrap_or_default(),
            out: cli.out.clone().or_else(|| config.out.clone()),
            config,
        })
    }

    fn path(&self, flag: &Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> anyhow::Result<PathBuf> {
        flag.clone()
            .or_else(|| from_config.clone())
            .ok_or_else(|| anyhow!("missing --{name} (or `{name}` in the config)"))
    }

    fn space(&self, input: &SpaceInput) -> anyhow::Result<MeasureSpace> {
        let dto: SpaceDto = read_json(&self.path(&input.space, &self.config.space, "space")?)?;
        Ok(dto.build()?)
    }

    fn filtration(&self, input: &FiltInput) -> anyhow::Result<(MeasureSpace, Filtration)> {
        let space = self.space(&input.space)?;
        let dto: FiltrationDto = read_json(&self.path(&input.filtration, &self.config.filtration, "filtration")?)?;
        let filt = dto.build(space.len())?;
        filt.check_space(&space).op("filtration")?;
        Ok((space, filt))
    }

    fn func(&self, flag: &Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> anyhow::Result<Func> {
        let dto: FuncDto = read_json(&self.path(flag, from_config, name)?)?;
        Ok(dto.build()?)
    }

    fn metric(&self, input: &MetricInput) -> anyhow::Result<QuasiMetricSpace> {
        let dto: MetricDto = read_json(&self.path(&input.metric, &self.config.metric, "metric")?)?;
        Ok(dto.build()?)
    }

    fn adjacent(&self, space: &QuasiMetricSpace, args: &AdjacentArgs) -> anyhow::Result<AdjacentSystems> {
        if args.grids {
            Ok(euclidean_shifted_grids(space, None).op("adjacent build")?)
        } else {
            let params = DyadicParams::auto_adjacent(space);
            Ok(build_adjacent_systems(space, &params, args.k, self.seed, args.max_constant).op("adjacent build")?)
        }
    }

    /// Writes `value` to `<out>/<file>` or prints it.
    fn emit<T: Serialize>(&self, file: &str, value: &T) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(file);
                fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            None => writeln!(io::stdout().lock(), "{text}")?,
        }
        Ok(())
    }
}

/// Scalars print with 17 significant digits.
pub fn scalar(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    let env = Env::new(&cli)?;
    match &cli.command {
        Command::Space { action: SpaceAction::Validate(input) } => {
            let s = env.space(input)?;
            env.emit(
                "space.json",
                &json!({"valid": true, "points": s.len(), "total_mass": s.total_mass()}),
            )?;
        }
        Command::Filtration { action: FiltrationAction::Validate(input) } => {
            let space = env.space(&input.space)?;
            let dto: FiltrationDto = read_json(&env.path(&input.filtration, &env.config.filtration, "filtration")?)?;
            let report = validate_filtration(&space, dto.k_min, &dto.partitions);
            let issues: Vec<String> = report.issues.iter().map(ToString::to_string).collect();
            env.emit("filtration.json", &json!({"valid": report.is_valid(), "issues": issues}))?;
            return Ok(if report.is_valid() { 0 } else { 1 });
        }
        Command::Norm(args) => {
            let (space, filt) = env.filtration(&args.input.filt)?;
            let f = env.func(&args.input.function, &env.config.function, "function")?;
            let variant: NormVariant =
                args.variant.parse().map_err(|_| anyhow!("norm: unknown variant `{}`", args.variant))?;
            let params = NormParams { p: args.p, q: args.q, convention: args.convention.into() };
            let v = evaluate_norm(&space, &filt, &f, variant, params).op("norm")?;
            match &env.out {
                Some(_) => env.emit("norm.json", &json!({"variant": variant.tag(), "p": args.p, "value": v}))?,
                None => writeln!(io::stdout().lock(), "{}", scalar(v))?,
            }
        }
        Command::Expand(args) => {
            let (space, filt) = env.filtration(&args.input.filt)?;
            let f = env.func(&args.input.function, &env.config.function, "function")?;
            let exp = expand(&space, &filt, &f, args.convention.into()).op("expand")?;
            env.emit(
                "expansion.json",
                &json!({
                    "k_min": exp.k_min(),
                    "base": exp.base().values(),
                    "martingale": exp.martingale().iter().map(Func::values).collect::<Vec<_>>(),
                    "diffs": exp.diffs().iter().map(Func::values).collect::<Vec<_>>(),
                }),
            )?;
        }
        Command::Paraproduct(args) => {
            let (space, filt) = env.filtration(&args.input.filt)?;
            let f = env.func(&args.input.function, &env.config.function, "function")?;
            let g = env.func(&args.g, &env.config.g, "g")?;
            let pi = paraproducts(&space, &filt, &f, &g).op("paraproduct")?;
            env.emit(
                "paraproducts.json",
                &json!({
                    "pi1": pi.pi1.values(),
                    "pi2": pi.pi2.values(),
                    "pi3": pi.pi3.values(),
                    "residual": pi.residual(&f, &g),
                }),
            )?;
        }
        Command::Atoms { action: AtomsAction::Decompose(args) } => {
            let (space, filt) = env.filtration(&args.input.filt)?;
            let f = env.func(&args.input.function, &env.config.function, "function")?;
            let dec = stopping_time_decomposition(&space, &filt, &f, args.p, args.q).op("atoms decompose")?;
            let mut atoms = Vec::with_capacity(dec.terms.len());
            for t in &dec.terms {
                let valid = validate_simple_atom(&space, &filt, &t.atom).op("atoms decompose")?.is_valid();
                atoms.push(json!({
                    "lambda": t.lambda,
                    "level": t.atom.level,
                    "block": t.atom.block,
                    "stage": t.stage,
                    "values": t.atom.values.values(),
                    "valid": valid,
                }));
            }
            let error = dec.reconstruct(f.len()).max_diff(&f);
            env.emit(
                "atoms.json",
                &json!({
                    "p": dec.p,
                    "q": dec.q,
                    "quasi_norm": dec.quasi_norm(),
                    "reconstruction_error": error,
                    "base": dec.base.values(),
                    "atoms": atoms,
                }),
            )?;
        }
        Command::Dyadic { action: DyadicAction::Build(args) } => {
            let space = env.metric(&args.metric)?;
            let system = match &args.grid {
                Some(shift) => shifted_grid(&space, shift, None).op("dyadic build")?,
                None => build_dyadic_system(&space, &DyadicParams::auto(&space), Some(env.seed)).op("dyadic build")?,
            };
            env.emit("dyadic_system.json", &SystemDto::from_system(&system))?;
        }
        Command::Dyadic { action: DyadicAction::Verify(args) } => {
            let space = env.metric(&args.metric)?;
            let dto: SystemDto = read_json(&env.path(&args.system, &env.config.system, "system")?)?;
            let system = dto.build(&space)?;
            let violations: Vec<String> = verify_system(&space, &system).iter().map(|v| format!("{v:?}")).collect();
            env.emit("dyadic_verify.json", &json!({"valid": violations.is_empty(), "violations": violations}))?;
            return Ok(if violations.is_empty() { 0 } else { 1 });
        }
        Command::Adjacent { action: AdjacentAction::Build(args) } => {
            let space = env.metric(&args.metric)?;
            let adj = env.adjacent(&space, args)?;
            let c = &adj.certificate;
            env.emit(
                "adjacent_systems.json",
                &json!({
                    "certificate": {
                        "constant": c.constant,
                        "worst_center": c.worst.0,
                        "worst_radius": c.worst.1,
                        "balls_checked": c.balls_checked,
                    },
                    "systems": adj.systems.iter().map(SystemDto::from_system).collect::<Vec<_>>(),
                }),
            )?;
        }
        Command::CoverBall(args) => {
            let space = env.metric(&args.adjacent.metric)?;
            let adj = env.adjacent(&space, &args.adjacent)?;
            let c = cover_ball(&space, &adj, args.x, args.r).op("cover-ball")?;
            env.emit(
                "cover_ball.json",
                &json!({"system": c.system, "k": c.k, "cube": c.cube, "diameter": c.diameter, "ratio": c.diameter / args.r}),
            )?;
        }
        Command::Verify(args) => return verify(&env, args),
    }
    Ok(0)
}

fn verify(env: &Env, args: &VerifyArgs) -> anyhow::Result<i32> {
    if args.list {
        for s in SUITES {
            println!("{:<22} {}", s.id, s.summary);
        }
        return Ok(0);
    }
    let mut ids = if args.suites.is_empty() { env.config.suites.clone() } else { args.suites.clone() };
    if ids.is_empty() {
        ids = SUITES.iter().map(|s| s.id.to_string()).collect();
    }
    let opts = RunOptions {
        seed: env.seed,
        trials: env.trials,
        sizes: args.sizes.clone().or_else(|| env.config.sizes.clone()),
        tolerances: env.config.tolerances.clone(),
    };
    let mut reports = Vec::with_capacity(ids.len());
    for id in &ids {
        let r = run_suite(id, &opts)?;
        eprintln!("{}", status_line(&r));
        reports.push(r);
    }
    write_reports(env, &reports)?;
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
}

fn status_line(r: &VerificationReport) -> String {
    let failed: Vec<&str> = r.failed_checks().map(|c| c.name.as_str()).collect();
    format!(
        "{} {:<22} sup {} trials {} skipped {} {:.2}s{}",
        if r.pass { "PASS" } else { "FAIL" },
        r.suite,
        scalar(r.sup_ratio),
        r.trials,
        r.skipped,
        r.runtime_seconds,
        if failed.is_empty() { String::new() } else { format!(" failed: {}", failed.join(", ")) }
    )
}

fn write_reports(env: &Env, reports: &[VerificationReport]) -> anyhow::Result<()> {
    match (&env.out, env.format) {
        (None, Format::Json) => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, reports)?;
            writeln!(lock)?;
        }
        (None, Format::Csv) => write_csv(reports, io::stdout().lock())?,
        (Some(dir), format) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for r in reports {
                write_file(&dir.join(format!("{}.json", r.suite)), &(r.to_json() + "\n"))?;
            }
            if format == Format::Csv {
                let path = dir.join("reports.csv");
                let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
                write_csv(reports, file)?;
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Parses arguments, runs, and reports errors on stderr.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
