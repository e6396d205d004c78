use std::path::PathBuf;
use std::process::ExitCode;

use almqr::config::{json_flag, merge, Numbers, RegionArg};
use almqr::{run_and_write, suite, Check, Manifest, ReportRecord, RunConfig, RunError, EXIT_PASS};
use almqr_core::almgren::{distance, AlmgrenPoint};
use almqr_core::covers::MapSpec;
use almqr_core::modulus::{FamilySpec, ScalarField};
use almqr_core::region::Region;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "almqr", version, about = "Verifiers for multi-valued inverses of quasiregular maps")]
struct Cli {
    /// Master seed for every random stream of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON report path (for `suite`: the output directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// CSV plot-data path.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run configuration (JSON); its fields override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
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
    /// Print `minv f(y)`.
    Inverse {
        #[arg(long)]
        map: String,
        #[arg(long)]
        y: String,
    },
    /// Assignment distance between two points of the Almgren space.
    Distance {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Form utilities.
    Form {
        #[command(subcommand)]
        command: FormCommand,
    },
    /// Run one verifier.
    Verify {
        #[arg(value_enum)]
        check: Check,
        #[command(flatten)]
        args: CheckArgs,
    },
    /// Discrete modulus of a curve family under grid refinement.
    Modulus {
        #[command(flatten)]
        args: CheckArgs,
    },
    /// Monte Carlo samplers.
    Sample {
        #[command(subcommand)]
        command: SampleCommand,
    },
    /// Run a configuration file (same as `--config` with any subcommand).
    Run {
        #[command(flatten)]
        args: CheckArgs,
    },
    /// Run every entry of a manifest.
    Suite {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
    },
}

#[derive(Subcommand)]
enum FormCommand {
    /// Comass of a form at one or more points.
    Comass {
        #[command(flatten)]
        args: CheckArgs,
    },
}

#[derive(Subcommand)]
enum SampleCommand {
    /// Measures of balls of `Ω_f` against the upper Ahlfors bound.
    Ahlfors {
        #[command(flatten)]
        args: CheckArgs,
    },
}

#[derive(Args, Default)]
struct CheckArgs {
    #[arg(long)]
    id: Option<String>,
    /// Map description, e.g. '{"map":"power","k":2}'.
    #[arg(long)]
    map: Option<String>,
    /// Synthetic Lipschitz multi-valued map for `feps`.
    #[arg(long)]
    fold: Option<String>,
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    testform: Option<String>,
    /// `annulus:r,R`, `ball:c…,r`, `box:lo…,hi…` or JSON.
    #[arg(long)]
    region: Option<RegionArg>,
    /// `radial`, `circles` (on the annulus given by --region) or JSON.
    #[arg(long)]
    family: Option<String>,
    /// Curves in a `radial`/`circles` family.
    #[arg(long)]
    count: Option<usize>,
    /// Base point as a JSON array or comma-separated list.
    #[arg(long, alias = "y")]
    point: Option<Numbers>,
    /// Points or ball centres as a JSON array of arrays.
    #[arg(long, alias = "centers")]
    points: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    radii: Option<Numbers>,
    #[arg(long, alias = "N")]
    samples: Option<usize>,
    /// Grid resolutions or quadrature orders, comma-separated.
    #[arg(long)]
    grid: Option<Numbers>,
    /// Modulus exponent.
    #[arg(long, alias = "n")]
    exponent: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    field: Option<FieldArg>,
    /// `n,d` for checks on `(Rⁿ)^d` without a map.
    #[arg(long)]
    shape: Option<Numbers>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    expect: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    One,
    NormSquared,
    Gaussian,
    InvDfPow,
}

impl From<FieldArg> for ScalarField {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::One => ScalarField::One,
            FieldArg::NormSquared => ScalarField::NormSquared,
            FieldArg::Gaussian => ScalarField::Gaussian,
            FieldArg::InvDfPow => ScalarField::InvDfPow,
        }
    }
}

fn family_arg(text: &str, region: Option<&Region>, count: Option<usize>) -> Result<FamilySpec, RunError> {
    let annulus = || match region {
        Some(Region::Annulus { center, inner, outer }) => Ok((*center, *inner, *outer)),
        _ => Err(RunError::Usage(format!("--family {text} needs an annulus --region"))),
    };
    match text {
        "radial" => {
            let (center, inner, outer) = annulus()?;
            Ok(FamilySpec::Radial { center, inner, outer, count: count.unwrap_or(1024) })
        }
        "circles" => {
            let (center, inner, outer) = annulus()?;
            Ok(FamilySpec::Circles { center, inner, outer, count: count.unwrap_or(8) })
        }
        _ => json_flag("family", text),
    }
}

fn usizes(flag: &str, v: &Numbers) -> Result<Vec<usize>, RunError> {
    v.0.iter()
        .map(|x| {
            if *x >= 0.0 && x.fract() == 0.0 {
                Ok(*x as usize)
            } else {
                Err(RunError::Usage(format!("--{flag}: {x} is not a non-negative integer")))
            }
        })
        .collect()
}

impl CheckArgs {
    fn to_config(&self, check: Check) -> Result<RunConfig, RunError> {
        let mut cfg = RunConfig::new(check);
        cfg.id = self.id.clone();
        cfg.map = self.map.as_deref().map(|t| json_flag("map", t)).transpose()?;
        cfg.fold = self.fold.as_deref().map(|t| json_flag("fold", t)).transpose()?;
        cfg.form = self.form.as_deref().map(|t| json_flag("form", t)).transpose()?;
        cfg.testform = self.testform.as_deref().map(|t| json_flag("testform", t)).transpose()?;
        cfg.region = self.region.clone().map(|r| r.0);
        cfg.family = self.family.as_deref().map(|t| family_arg(t, cfg.region.as_ref(), self.count)).transpose()?;
        cfg.point = self.point.clone().map(|p| p.0);
        cfg.points = self.points.as_deref().map(|t| json_flag("points", t)).transpose()?;
        cfg.radius = self.radius;
        cfg.radii = self.radii.clone().map(|r| r.0);
        cfg.samples = self.samples;
        cfg.grid = self.grid.as_ref().map(|g| usizes("grid", g)).transpose()?;
        cfg.exponent = self.exponent;
        cfg.epsilon = self.epsilon;
        cfg.field = self.field.map(Into::into);
        cfg.shape = match &self.shape {
            Some(s) => match usizes("shape", s)?.as_slice() {
                [n, d] => Some([*n, *d]),
                _ => return Err(RunError::Usage("--shape takes n,d".into())),
            },
            None => None,
        };
        cfg.tol = self.tol;
        cfg.expect = self.expect;
        Ok(cfg)
    }
}

fn with_globals(cli: &Cli, mut cfg: RunConfig) -> Result<RunConfig, RunError> {
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.csv.is_some() {
        cfg.csv = cli.csv.clone();
    }
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
        cfg = merge(&cfg, &value)?;
    }
    Ok(cfg)
}

fn print_record(cli: &Cli, rec: &ReportRecord) {
    match cli.format {
        Format::Json => print!("{}", rec.to_json()),
        Format::Csv => print!("{}", rec.to_csv()),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("values serialize"));
}

fn verify(cli: &Cli, check: Check, args: &CheckArgs) -> Result<i32, RunError> {
    let cfg = with_globals(cli, args.to_config(check)?)?;
    let rec = run_and_write(&cfg)?;
    print_record(cli, &rec);
    Ok(rec.exit_code())
}

fn execute(cli: &Cli) -> Result<i32, RunError> {
    match &cli.command {
        Command::Inverse { map, y } => {
            let cover = json_flag::<MapSpec>("map", map)?.build()?;
            let y: Numbers = y.parse().map_err(|e| RunError::Usage(format!("--y: {e}")))?;
            let z = cover.minv(&y.0)?;
            print_json(&serde_json::json!({ "y": y.0, "degree": cover.degree(), "minv": z }));
            Ok(EXIT_PASS)
        }
        Command::Distance { a, b } => {
            let p: AlmgrenPoint = json_flag("a", a)?;
            let q: AlmgrenPoint = json_flag("b", b)?;
            let r = distance(&p, &q)?;
            print_json(&serde_json::json!({ "distance": r.value, "matching": r.matching }));
            Ok(EXIT_PASS)
        }
        Command::Form { command: FormCommand::Comass { args } } => verify(cli, Check::Comass, args),
        Command::Verify { check, args } => verify(cli, *check, args),
        Command::Modulus { args } => verify(cli, Check::Modulus, args),
        Command::Sample { command: SampleCommand::Ahlfors { args } } => verify(cli, Check::Ahlfors, args),
        Command::Run { args } => {
            let path = cli.config.as_ref().ok_or_else(|| RunError::Usage("run needs --config".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?;
            let base = RunConfig::from_json(&text)?;
            // flags fill in what the file leaves unset
            let mut cfg = merge(&args.to_config(base.check)?, &serde_json::to_value(&base).expect("configs serialize"))?;
            if let Some(s) = cli.seed.filter(|_| !text.contains("\"seed\"")) {
                cfg.seed = s;
            }
            cfg.out = base.out.or(cli.out.clone());
            cfg.csv = base.csv.or(cli.csv.clone());
            let rec = run_and_write(&cfg)?;
            print_record(cli, &rec);
            Ok(rec.exit_code())
        }
        Command::Suite { manifest, jobs } => {
            let text =
                std::fs::read_to_string(manifest).map_err(|e| RunError::Usage(format!("{}: {e}", manifest.display())))?;
            let m = Manifest::from_json(&text)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("almqr-reports"));
            let summary = suite(&m, *jobs, &out)?;
            print!("{}", summary.to_markdown());
            Ok(summary.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("almqr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
