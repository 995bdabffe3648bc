use clap::{Args, Parser, Subcommand, ValueEnum};
use paradarp::ingestion::ProviderKind;
use paradarp::mip::{BranchingRule, SolverConfig};
use paradarp::pipeline::PipelineConfig;
use paradarp::{GeoPoint, InstanceConfig, ModelKind};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "paradarp", version, about = "Exact dial-a-ride scheduling for paratransit trip logs")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a trip log and write one instance file per period and model.
    Ingest(IngestArgs),
    /// Solve one model per period, or a single instance file.
    Solve(SolveArgs),
    /// Solve both models for every period and print the cross-evaluation.
    Report(ReportArgs),
    /// Fetch and cache the travel times a trip log needs.
    Matrix(MatrixArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Trip-log CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// JSON file mapping logical fields to CSV headers.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Period length in minutes.
    #[arg(long, default_value_t = 60)]
    pub interval: i64,
    /// Only the period starting at this time ("HH:MM" or an hour).
    #[arg(long, value_parser = parse_period)]
    pub period: Option<i64>,
}

#[derive(Debug, Clone, Args)]
pub struct ProviderArgs {
    /// Square travel-minute matrix (JSON) over the instance nodes.
    #[arg(long, conflicts_with = "tt_cache")]
    pub matrix: Option<PathBuf>,
    /// Use the distance-matrix web API, caching answers in this file.
    #[arg(long)]
    pub tt_cache: Option<PathBuf>,
    /// Distance-matrix endpoint (default from PARADARP_MATRIX_URL).
    #[arg(long, requires = "tt_cache")]
    pub endpoint: Option<String>,
    /// Great-circle speed in km/h when neither --matrix nor --tt-cache is given.
    #[arg(long, default_value_t = 40.0)]
    pub speed: f64,
}

impl ProviderArgs {
    pub fn kind(&self) -> ProviderKind {
        match (&self.matrix, &self.tt_cache) {
            (Some(path), _) => ProviderKind::Matrix(path.clone()),
            (None, Some(cache)) => ProviderKind::Http { endpoint: self.endpoint.clone(), cache_path: cache.clone() },
            (None, None) => ProviderKind::Haversine { speed_kmh: self.speed },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FleetArgs {
    /// Vehicles per period.
    #[arg(long, default_value_t = 5)]
    pub vehicles: usize,
    #[arg(long, default_value_t = 7)]
    pub capacity: u32,
    /// Depot as "lat,lon".
    #[arg(long, value_parser = parse_point)]
    pub depot: Option<GeoPoint>,
    /// Boarding minutes at each pickup.
    #[arg(long, default_value_t = 7)]
    pub boarding: i64,
    /// Alighting minutes at each dropoff.
    #[arg(long, default_value_t = 5)]
    pub alighting: i64,
    /// Time-window length in minutes.
    #[arg(long, default_value_t = 30)]
    pub window: i64,
    /// Lateness threshold in minutes.
    #[arg(long, default_value_t = 15)]
    pub threshold: i64,
    /// Penalty per late node in the user model.
    #[arg(long, default_value_t = 10_000.0)]
    pub beta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Seconds per model.
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    pub gap: f64,
    #[arg(long, value_enum, default_value_t = Branching::PseudoCost)]
    pub branching: Branching,
    /// Concurrent solves.
    #[arg(long, short, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Branching {
    MostFractional,
    PseudoCost,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            time_limit: self.time_limit,
            gap_tolerance: self.gap,
            branching_rule: match self.branching {
                Branching::MostFractional => BranchingRule::MostFractional,
                Branching::PseudoCost => BranchingRule::PseudoCost,
            },
            ..Default::default()
        }
    }
}

pub fn pipeline_config(input: &InputArgs, fleet: &FleetArgs, solver: Option<&SolverArgs>) -> PipelineConfig {
    let base = PipelineConfig::default();
    PipelineConfig {
        interval: input.interval,
        vehicles: fleet.vehicles,
        capacity: fleet.capacity,
        depot: fleet.depot.unwrap_or(base.depot),
        instance: InstanceConfig {
            window: fleet.window,
            boarding: fleet.boarding,
            alighting: fleet.alighting,
            lateness_threshold: fleet.threshold,
            beta: fleet.beta,
            model_kind: ModelKind::Operator,
        },
        solver: solver.map(SolverArgs::config).unwrap_or(base.solver),
        jobs: solver.map_or(1, |s| s.jobs),
        period: input.period,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Om,
    Um,
    Both,
}

impl ModelArg {
    pub fn kinds(self) -> &'static [ModelKind] {
        match self {
            ModelArg::Om => &[ModelKind::Operator],
            ModelArg::Um => &[ModelKind::User],
            ModelArg::Both => &[ModelKind::Operator, ModelKind::User],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long, value_enum, default_value_t = ModelArg::Both)]
    pub model: ModelArg,
    /// Directory for the instance files.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "instance"]))]
pub struct SolveArgs {
    /// Trip-log CSV.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Instance file written by `ingest`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    pub interval: i64,
    /// Only the period starting at this time ("HH:MM" or an hour).
    #[arg(long, value_parser = parse_period)]
    pub period: Option<i64>,
    /// Model to solve; an instance file keeps its own kind unless this is given.
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Check each optimum against exhaustive enumeration (small instances only).
    #[arg(long)]
    pub oracle: bool,
    /// Write the model in LP text format.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    /// Write the model in fixed MPS format.
    #[arg(long)]
    pub export_mps: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
}

impl SolveArgs {
    pub fn input_args(&self) -> Option<InputArgs> {
        self.input.as_ref().map(|input| InputArgs {
            input: input.clone(),
            mapping: self.mapping.clone(),
            interval: self.interval,
            period: self.period,
        })
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fleet: FleetArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Cache file; created when missing.
    #[arg(long)]
    pub tt_cache: PathBuf,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, value_parser = parse_point)]
    pub depot: Option<GeoPoint>,
}

fn parse_period(s: &str) -> Result<i64, String> {
    if let Ok(h) = s.trim().parse::<i64>() {
        return if (0..24).contains(&h) { Ok(h * 60) } else { Err(format!("hour {h} out of range")) };
    }
    paradarp::time::parse_clock(s).ok_or_else(|| format!("`{s}` is not HH:MM or an hour"))
}

fn parse_point(s: &str) -> Result<GeoPoint, String> {
    let (lat, lon) = s.split_once(',').ok_or_else(|| format!("`{s}` is not lat,lon"))?;
    let p = GeoPoint::new(
        lat.trim().parse().map_err(|_| format!("bad latitude `{lat}`"))?,
        lon.trim().parse().map_err(|_| format!("bad longitude `{lon}`"))?,
    );
    if !p.is_valid() {
        return Err(format!("`{s}` is not a valid coordinate"));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_forms() {
        assert_eq!(parse_period("8"), Ok(480));
        assert_eq!(parse_period("13:30"), Ok(810));
        assert!(parse_period("24").is_err());
        assert!(parse_period("noon").is_err());
    }

    #[test]
    fn points() {
        assert_eq!(parse_point("35.1, -80.2"), Ok(GeoPoint::new(35.1, -80.2)));
        assert!(parse_point("91,0").is_err());
        assert!(parse_point("35").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
