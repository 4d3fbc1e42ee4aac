//! Command-line front end: resource reports, program runs and cubic sweeps.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 numerical tolerance.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::fock::{
    best_target_overlap, gamma_of_n, matched_gkp_squeezing, run_circuit_cluster, run_circuit_gkp,
    CountOutcome, FockConfig, FockError, GridSpec, GridWavefunction, DEFAULT_GUARD,
};
use crate::gaussian::GaussianError;
use crate::mbqc::{
    run_program, write_outcome_csv, Backend, BackendState, MbqcError, MeasurementProgram,
    ProgramRun, RunOptions,
};
use crate::resources::{cost_comparison, db, write_csv, CostConfig, CostMode, ResourceError};
use crate::Graph;

pub const CONVENTIONS: &str =
    "labels 1-based; ordering (q1..qn, p1..pn); hbar = 1; vacuum variance 1/2; dB = 10 log10(s^2)";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical tolerance: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<GaussianError> for CliError {
    fn from(e: GaussianError) -> Self {
        match e {
            GaussianError::NotSymmetric(_)
            | GaussianError::Uncertainty(_)
            | GaussianError::NotSymplectic(_)
            | GaussianError::SingularCovariance { .. }
            | GaussianError::DegenerateMeasurement(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::Leak { .. } | FockError::Optimizer(_) | FockError::GridTooCoarse(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MbqcError> for CliError {
    fn from(e: MbqcError) -> Self {
        match e {
            MbqcError::Gaussian(g) => g.into(),
            MbqcError::Fock(f) => f.into(),
            MbqcError::NotFinite(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ResourceError> for CliError {
    fn from(e: ResourceError) -> Self {
        match e {
            ResourceError::Gaussian(g) => g.into(),
            ResourceError::SvdFailed => CliError::Numerical(e.to_string()),
            ResourceError::NonPositiveAccuracy(_) => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cvcluster",
    version,
    about = "Continuous-variable cluster-state simulator and resource estimator"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Output file, written atomically; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Offline squeezing needed to build a graph state.
    Resources(ResourcesArgs),
    /// Run a measurement program on a graph state.
    Simulate(SimulateArgs),
    /// Sweep the photon-counting cubic phase state circuits.
    Cubic(CubicArgs),
}

#[derive(Debug, Args)]
pub struct ResourcesArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub accuracy: f64,
    /// Use the max-degree bound on every mode.
    #[arg(long, conflicts_with = "exact_svd")]
    pub bound: bool,
    /// Add the full singular spectrum of the generation matrix.
    #[arg(long)]
    pub exact_svd: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Nullifier,
    Gaussian,
    Fock,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub program: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendKind::Nullifier)]
    pub backend: BackendKind,
    #[arg(long, default_value_t = 10.0)]
    pub accuracy: f64,
    /// JSON array with one result per program step.
    #[arg(long)]
    pub force_outcomes: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CircuitKind {
    Cluster,
    Gkp,
}

#[derive(Debug, Args)]
pub struct CubicArgs {
    #[arg(long, value_enum, default_value_t = CircuitKind::Cluster)]
    pub circuit: CircuitKind,
    /// Cluster accuracy values; the GKP circuit uses the matched squeezing.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub s: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub r: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "40")]
    pub dim: Vec<usize>,
    /// Forced photon count; sampled when absent.
    #[arg(long)]
    pub n: Option<usize>,
    /// Rows whose truncation leak exceeds this are flagged.
    #[arg(long, default_value_t = 1e-3)]
    pub leak_threshold: f64,
    /// Half-width of the shift search for the target overlap.
    #[arg(long, default_value_t = 4.0)]
    pub shift_range: f64,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_input(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

fn header(format: Format) -> String {
    match format {
        Format::Table | Format::Csv => format!("# conventions: {CONVENTIONS}\n"),
        Format::Json => String::new(),
    }
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialise") + "\n"
}

pub fn cmd_resources(args: &ResourcesArgs, format: Format) -> Result<String, CliError> {
    let g: Graph = parse_json(&args.graph)?;
    let mode = if args.bound {
        CostMode::Bound
    } else if args.exact_svd {
        CostMode::ExactSvd
    } else {
        CostMode::Theorem2
    };
    let report = cost_comparison(&g, args.accuracy, mode, &CostConfig::default())?;
    let id = args
        .graph
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(match format {
        Format::Json => {
            pretty(&json!({ "conventions": CONVENTIONS, "graph": id, "report": report }))
        }
        Format::Csv => header(format) + &csv_string(|b| write_csv(&[report.csv_row(&id)], b))?,
        Format::Table => header(format) + &report.to_string() + "\n",
    })
}

fn state_json(run: &ProgramRun) -> serde_json::Value {
    match &run.state {
        BackendState::Nullifier(ns) => json!({
            "labels": ns.labels(),
            "nullifiers": ns.forms().iter().map(|f| f.display_with(ns.labels()).to_string()).collect::<Vec<_>>(),
        }),
        BackendState::Gaussian(st) => serde_json::to_value(st.to_json()).expect("state serialises"),
    }
}

pub fn cmd_simulate(args: &SimulateArgs, format: Format, seed: u64) -> Result<String, CliError> {
    let g: Graph = parse_json(&args.graph)?;
    let program: MeasurementProgram = parse_json(&args.program)?;
    let forced = match &args.force_outcomes {
        Some(p) => Some(parse_json::<Vec<f64>>(p)?),
        None => None,
    };
    let backend = match args.backend {
        BackendKind::Nullifier => Backend::Nullifier,
        BackendKind::Gaussian => Backend::Gaussian {
            accuracy: args.accuracy,
        },
        BackendKind::Fock => {
            return Err(CliError::Validation(
                "the fock backend runs the cubic phase state circuits only; use `cubic`".into(),
            ))
        }
    };
    let opts = RunOptions {
        forced,
        order: None,
    };
    let run = run_program(
        &g,
        &program,
        backend,
        &opts,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )?;
    let backend_name = match args.backend {
        BackendKind::Nullifier => "nullifier".to_string(),
        _ => format!("gaussian(s={})", args.accuracy),
    };
    Ok(match format {
        Format::Json => pretty(&json!({
            "conventions": CONVENTIONS,
            "backend": backend_name,
            "seed": seed,
            "state": state_json(&run),
            "byproducts": run.record,
            "outcomes": run.log,
        })),
        Format::Csv => header(format) + &csv_string(|b| write_outcome_csv(&run.log, b))?,
        Format::Table => {
            let mut s = header(format);
            writeln!(s, "backend: {backend_name}  seed: {seed}").unwrap();
            match &run.state {
                BackendState::Nullifier(ns) => writeln!(s, "output nullifiers: {ns}").unwrap(),
                BackendState::Gaussian(st) => {
                    writeln!(s, "output modes: {:?}", st.labels).unwrap();
                    writeln!(s, "mean: {:?}", st.mean.as_slice()).unwrap();
                    writeln!(s, "cov:{}", st.cov).unwrap();
                }
            }
            for w in &run.record.wires {
                writeln!(s, "wire {} -> {}: {:?}", w.input, w.output, w.tags).unwrap();
            }
            writeln!(
                s,
                "{:>5} {:>5} {:>24} {:>14} {:>14}",
                "step", "mode", "basis", "outcome", "result"
            )
            .unwrap();
            for e in &run.log {
                writeln!(
                    s,
                    "{:>5} {:>5} {:>24} {:>14.8} {:>14.8}",
                    e.step, e.mode, e.basis, e.outcome, e.result
                )
                .unwrap();
            }
            s
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicRow {
    pub circuit: String,
    pub s: f64,
    pub r: f64,
    pub dim: usize,
    pub n: usize,
    pub gamma: f64,
    pub probability: f64,
    pub overlap: f64,
    pub x0: f64,
    pub p0: f64,
    pub leak: f64,
    pub leaky: bool,
}

/// One point of the sweep. The cluster circuit heralds `e^{−iγq³}` and is
/// reflected before comparison; the GKP circuit already carries `+γ`.
pub fn cubic_point(
    circuit: CircuitKind,
    s: f64,
    r: f64,
    dim: usize,
    n: Option<usize>,
    leak_threshold: f64,
    shift_range: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CubicRow, CliError> {
    let config = FockConfig {
        guard: DEFAULT_GUARD,
        leak_threshold: f64::INFINITY,
    };
    let outcome = match n {
        Some(n) => CountOutcome::Forced(n),
        None => CountOutcome::Sample(rng),
    };
    let (name, out) = match circuit {
        CircuitKind::Cluster => ("cluster", run_circuit_cluster(s, r, dim, outcome, &config)?),
        CircuitKind::Gkp => (
            "gkp",
            run_circuit_gkp(matched_gkp_squeezing(s), r, dim, outcome, &config)?,
        ),
    };
    let state = match circuit {
        CircuitKind::Cluster => out.state.reflected(out.state.labels[0])?,
        CircuitKind::Gkp => out.state.clone(),
    };
    let spec = GridSpec::default();
    let psi = GridWavefunction::from_fock(&state.amplitudes, &spec).normalized();
    let gamma = gamma_of_n(out.n);
    let best = best_target_overlap(&psi, gamma, s, &spec, shift_range)?;
    let leak = out.state.leak();
    Ok(CubicRow {
        circuit: name.into(),
        s,
        r,
        dim,
        n: out.n,
        gamma,
        probability: out.probability,
        overlap: best.overlap,
        x0: best.x0,
        p0: best.p0,
        leak,
        leaky: leak > leak_threshold,
    })
}

pub fn cmd_cubic(args: &CubicArgs, format: Format, seed: u64) -> Result<String, CliError> {
    if args.dim.iter().any(|&d| d < 2) {
        return Err(CliError::Usage("every --dim must be at least 2".into()));
    }
    if args.s.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(CliError::Usage(
            "every --s must be positive and finite".into(),
        ));
    }
    if args.r.iter().any(|r| !r.is_finite()) {
        return Err(CliError::Usage("every --r must be finite".into()));
    }
    if !(args.leak_threshold >= 0.0) || !(args.shift_range > 0.0) {
        return Err(CliError::Usage(
            "--leak-threshold must be non-negative and --shift-range positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &s in &args.s {
        for &r in &args.r {
            for &dim in &args.dim {
                rows.push(cubic_point(
                    args.circuit,
                    s,
                    r,
                    dim,
                    args.n,
                    args.leak_threshold,
                    args.shift_range,
                    &mut rng,
                )?);
            }
        }
    }
    Ok(match format {
        Format::Json => pretty(&json!({ "conventions": CONVENTIONS, "seed": seed, "rows": rows })),
        Format::Csv => {
            header(format)
                + &csv_string(|b| {
                    let mut w = csv::Writer::from_writer(b);
                    for row in &rows {
                        w.serialize(row)?;
                    }
                    w.flush()?;
                    Ok(())
                })?
        }
        Format::Table => {
            let mut out = header(format);
            writeln!(
                out,
                "{:>8} {:>6} {:>6} {:>5} {:>4} {:>10} {:>10} {:>12} {:>10}",
                "circuit", "s", "r", "dim", "n", "gamma", "prob", "overlap", "leak"
            )
            .unwrap();
            for row in &rows {
                let note = if row.n == 0 { "  gamma(0) = 1/6" } else { "" };
                let flag = if row.leaky { "  LEAK" } else { "" };
                writeln!(
                    out,
                    "{:>8} {:>6} {:>6} {:>5} {:>4} {:>10.6} {:>10.6} {:>12.9} {:>10.2e}{note}{flag}",
                    row.circuit, row.s, row.r, row.dim, row.n, row.gamma, row.probability, row.overlap, row.leak
                )
                .unwrap();
            }
            let s = args.s.first().copied().unwrap_or(1.0);
            writeln!(
                out,
                "# target envelope width s_env = s; accuracy {s} is {:.3} dB",
                db(s)
            )
            .unwrap();
            out
        }
    })
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Resources(a) => cmd_resources(a, cli.format),
        Command::Simulate(a) => cmd_simulate(a, cli.format, cli.seed),
        Command::Cubic(a) => cmd_cubic(a, cli.format, cli.seed),
    }
}

/// Parses `args`, runs the command and emits the report; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = run(&cli).and_then(|text| match &cli.out {
        Some(p) => write_atomic(p, text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cvcluster: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("cvcluster").chain(args.iter().copied())).unwrap()
    }

    fn temp_file(name: &str, body: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("cvcluster-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn two_node_report_has_golden_ratio() {
        let g = temp_file("pair.json", r#"{"n": 2, "edges": [[1, 2]]}"#);
        let c = cli(&[
            "--format",
            "json",
            "resources",
            "--graph",
            g.to_str().unwrap(),
            "--accuracy",
            "1",
            "--exact-svd",
        ]);
        let text = run(&c).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let top = v["report"]["exact_singulars"][0].as_f64().unwrap();
        assert!((top - 1.618_034).abs() < 1e-6);
        assert_eq!(v["conventions"], CONVENTIONS);
    }

    #[test]
    fn lattice_bound_is_root_seventeen() {
        let edges: Vec<[usize; 2]> = Graph::square_lattice(10, 10)
            .unwrap()
            .edges()
            .iter()
            .map(|&(a, b)| [a, b])
            .collect();
        let g = temp_file(
            "lattice.json",
            &json!({"n": 100, "edges": edges}).to_string(),
        );
        let c = cli(&[
            "--format",
            "json",
            "resources",
            "--graph",
            g.to_str().unwrap(),
            "--accuracy",
            "10",
            "--bound",
        ]);
        let v: serde_json::Value = serde_json::from_str(&run(&c).unwrap()).unwrap();
        let k = v["report"]["overhead_bound"].as_f64().unwrap();
        assert!((k - 17f64.sqrt()).abs() < 1e-12);
        assert!((db(k) - 12.30).abs() < 0.005);
    }

    #[test]
    fn malformed_graph_is_a_validation_error() {
        let g = temp_file("bad.json", "{\"n\": 2,\n \"edges\": [[1, 2]");
        let c = cli(&["resources", "--graph", g.to_str().unwrap()]);
        let e = run(&c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn missing_program_file_is_a_usage_error() {
        let g = temp_file("wire.json", r#"{"n": 3, "edges": [[1, 2], [2, 3]]}"#);
        let c = cli(&[
            "simulate",
            "--graph",
            g.to_str().unwrap(),
            "--program",
            "/nonexistent/program.json",
        ]);
        assert_eq!(run(&c).unwrap_err().exit_code(), 1);
        assert_eq!(
            main_with(["cvcluster", "simulate", "--graph", g.to_str().unwrap()]),
            1
        );
    }

    fn wire_files() -> (PathBuf, PathBuf, PathBuf) {
        let g = temp_file("wire3.json", r#"{"n": 3, "edges": [[1, 2], [2, 3]]}"#);
        let p = temp_file(
            "wire3-program.json",
            r#"{"wires": [[1, 2, 3]], "steps": [{"mode": 1, "poly": [0, 0, 0, 0]}, {"mode": 2, "poly": [0, 0, 0, 0]}]}"#,
        );
        let f = temp_file("wire3-forced.json", "[0.75, -0.5]");
        (g, p, f)
    }

    #[test]
    fn three_node_wire_leaves_shifted_momentum() {
        let (g, p, f) = wire_files();
        let c = cli(&[
            "--format",
            "json",
            "simulate",
            "--graph",
            g.to_str().unwrap(),
            "--program",
            p.to_str().unwrap(),
            "--force-outcomes",
            f.to_str().unwrap(),
        ]);
        let v: serde_json::Value = serde_json::from_str(&run(&c).unwrap()).unwrap();
        assert_eq!(v["state"]["labels"], json!([3]));
        let null = v["state"]["nullifiers"][0]
            .as_str()
            .unwrap()
            .replace(' ', "");
        assert!(null == "p3-3/4" || null == "-3/4+p3", "{null}");
    }

    #[test]
    fn gaussian_wire_adds_hop_noise() {
        let (g, p, f) = wire_files();
        let c = cli(&[
            "--format",
            "json",
            "simulate",
            "--graph",
            g.to_str().unwrap(),
            "--program",
            p.to_str().unwrap(),
            "--backend",
            "gaussian",
            "--accuracy",
            "10",
            "--force-outcomes",
            f.to_str().unwrap(),
        ]);
        let v: serde_json::Value = serde_json::from_str(&run(&c).unwrap()).unwrap();
        let cov: Vec<f64> = v["state"]["cov"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        // input variance 1/(2s²) plus one hop of 1/(2s²) noise
        assert!((cov[3] - 1.0 / 100.0).abs() < 1e-5, "{cov:?}");
    }

    #[test]
    fn fock_backend_is_rejected_for_programs() {
        let (g, p, _) = wire_files();
        let c = cli(&[
            "simulate",
            "--graph",
            g.to_str().unwrap(),
            "--program",
            p.to_str().unwrap(),
            "--backend",
            "fock",
        ]);
        assert_eq!(run(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let (g, p, _) = wire_files();
        let args = [
            "--seed",
            "7",
            "--format",
            "csv",
            "simulate",
            "--graph",
            g.to_str().unwrap(),
            "--program",
            p.to_str().unwrap(),
        ];
        let a = run(&cli(&args)).unwrap();
        let b = run(&cli(&args)).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# conventions:"));
    }

    #[test]
    fn cubic_single_point_and_bad_bounds() {
        let c = cli(&["--format", "table", "cubic", "--n", "0", "--dim", "20"]);
        let text = run(&c).unwrap();
        assert!(text.contains("gamma(0) = 1/6"), "{text}");
        let bad = cli(&["cubic", "--dim", "1"]);
        assert_eq!(run(&bad).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn cubic_leak_rows_are_flagged_not_dropped() {
        let c = cli(&[
            "--format", "json", "cubic", "--n", "3", "--r", "3.5", "--dim", "20,40",
        ]);
        let v: serde_json::Value = serde_json::from_str(&run(&c).unwrap()).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["leaky"], json!(true));
        assert_eq!(rows[1]["leaky"], json!(false));
    }
}
