mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fourvertex::arctic::{self, ScaledGeometry};
use fourvertex::exact;
use fourvertex::hahn::{self, AfpQuery, EfpQuery, GapEvent, GapRoute, GapValue};
use fourvertex::lattice::{enumerate_all, LatticeSpec, CONFIG_FORMAT};
use fourvertex::sampler::{self, CftpOptions, Estimate, Field, SamplerError};
use serde::Serialize;
use serde_json::{json, Value};

use output::RunManifest;

#[derive(Parser)]
#[command(name = "arctic4vm", version, about = "Four-vertex model: exact counts, formation probabilities, arctic curves and exact sampling")]
struct Cli {
    /// Worker threads for sampling; 0 uses every core.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition function and its boundary refinements.
    Exact(ExactArgs),
    /// Emptiness formation probability of a corner column block.
    Efp(FormationArgs),
    /// Probability that the top of a column is all of type a, with a path
    /// leaving through the boundary.
    Afp(FormationArgs),
    /// Points of the limit shape as CSV.
    Curve(CurveArgs),
    /// Exact uniform samples by coupling from the past.
    Sample(SampleArgs),
    /// Empirical vertex-type densities as a graymap and CSV.
    Render(RenderArgs),
    /// Cross-check independent computation routes.
    Verify(VerifyArgs),
    /// Every configuration of a small lattice.
    Enumerate(EnumerateArgs),
}

fn parse_triple<T: std::str::FromStr>(s: &str) -> Result<(T, T, T), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected three comma-separated values, got {s:?}"));
    };
    let num = |v: &str| v.parse::<T>().map_err(|_| format!("{v:?} is not a valid number"));
    Ok((num(a)?, num(b)?, num(c)?))
}

fn parse_spec(s: &str) -> Result<LatticeSpec, String> {
    let (l, m, n) = parse_triple::<usize>(s)?;
    LatticeSpec::new(l, m, n).map_err(|e| e.to_string())
}

fn parse_geometry(s: &str) -> Result<ScaledGeometry, String> {
    let (l, m, n) = parse_triple::<f64>(s)?;
    ScaledGeometry::new(l, m, n).map_err(|e| e.to_string())
}

#[derive(Args, Serialize)]
struct ExactArgs {
    /// Lattice as `L,M,N`.
    #[arg(long, value_parser = parse_spec)]
    spec: LatticeSpec,
    /// Count only configurations whose first path leaves the west boundary
    /// at this column.
    #[arg(long, conflicts_with = "turn")]
    column: Option<usize>,
    /// Count only configurations whose first path turns at this place on
    /// the north boundary.
    #[arg(long)]
    turn: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Route {
    Direct,
    Hankel,
    Fredholm,
}

impl From<Route> for GapRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::Direct => GapRoute::Direct,
            Route::Hankel => GapRoute::HankelRatio,
            Route::Fredholm => GapRoute::Fredholm,
        }
    }
}

#[derive(Args, Serialize)]
struct FormationArgs {
    #[arg(long, value_parser = parse_spec)]
    spec: LatticeSpec,
    /// Column, counted from the west.
    #[arg(long)]
    column: usize,
    /// Number of rows, counted from the top.
    #[arg(long)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Route::Hankel)]
    route: Route,
    /// Also estimate the probability from this many exact samples.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CurveArgs {
    /// Rescaled domain as `L,M,N`; any positive reals.
    #[arg(long, value_parser = parse_geometry)]
    geometry: ScaledGeometry,
    /// Points per arc, including both ends.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CftpArgs {
    /// First look-back time; set to twice a reported `reached_time` to
    /// resume a timed-out run.
    #[arg(long, default_value_t = 1)]
    initial_time: u64,
    /// Largest look-back time before giving up. Defaults to the
    /// ARCTIC4VM_TMAX environment variable, or 2^24.
    #[arg(long)]
    max_time: Option<u64>,
}

impl CftpArgs {
    fn options(&self) -> Result<CftpOptions> {
        let mut opts = CftpOptions::from_env()?;
        opts.initial_time = self.initial_time;
        if let Some(t) = self.max_time {
            opts.max_time = t;
        }
        Ok(opts)
    }
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long, value_parser = parse_spec)]
    spec: LatticeSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[command(flatten)]
    cftp: CftpArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum FieldArg {
    A,
    B,
    C,
    #[value(name = "c1-c2")]
    #[serde(rename = "c1-c2")]
    CDifference,
}

impl From<FieldArg> for Field {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::A => Field::A,
            FieldArg::B => Field::B,
            FieldArg::C => Field::C,
            FieldArg::CDifference => Field::CDifference,
        }
    }
}

#[derive(Args, Serialize)]
struct RenderArgs {
    #[arg(long, value_parser = parse_spec)]
    spec: LatticeSpec,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Field drawn in the image; the CSV holds all of them.
    #[arg(long, value_enum, default_value_t = FieldArg::A)]
    field: FieldArg,
    #[command(flatten)]
    cftp: CftpArgs,
    /// Image path; the CSV goes next to it with a `.csv` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = verify::Level::Small)]
    level: verify::Level,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EnumerateArgs {
    #[arg(long, value_parser = parse_spec)]
    spec: LatticeSpec,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn spec_json(s: LatticeSpec) -> Value {
    json!({ "L": s.width(), "M": s.height(), "N": s.paths() })
}

fn manifest(name: &str, args: &impl Serialize, seeds: Vec<u64>, started: Instant) -> RunManifest {
    let params = serde_json::to_value(args).expect("arguments serialize");
    RunManifest::new(name, params, seeds, started)
}

fn run_exact(a: &ExactArgs, started: Instant) -> Result<()> {
    let s = a.spec;
    let (value, what) = match (a.column, a.turn) {
        (Some(c), _) => (exact::boundary_refined_z1(s, c)?, json!({ "kind": "west-refined", "column": c })),
        (_, Some(p)) => (exact::boundary_refined_z2(s, p)?, json!({ "kind": "north-refined", "turn": p })),
        _ => (exact::partition_function(s), json!({ "kind": "partition-function" })),
    };
    let mut query = json!({ "spec": spec_json(s) });
    query.as_object_mut().unwrap().extend(what.as_object().unwrap().clone());
    let body = output::integer_value(query, &value, "product-formula");
    let m = manifest("exact", a, vec![], started);
    output::emit(a.out.as_deref(), &output::json_document(&m, body))
}

fn formation_body(event: GapEvent, route: Route, query: Value) -> Result<Value> {
    let route_name = GapRoute::from(route).name();
    Ok(match event {
        GapEvent::Gap(params) => match hahn::gap_probability(&params, route.into())? {
            GapValue::Exact(r) => output::exact_value(query, &r, route_name),
            GapValue::Float(v) => output::float_value(query, v, route_name),
        },
        trivial => output::exact_value(query, &trivial.probability(), "trivial"),
    })
}

fn run_formation(name: &str, a: &FormationArgs, threads: usize, started: Instant) -> Result<()> {
    let query = json!({
        "spec": spec_json(a.spec),
        "column": a.column,
        "depth": a.depth,
    });
    let opts = CftpOptions::from_env()?;
    let (mut body, estimate) = if name == "efp" {
        let q = EfpQuery::new(a.spec, a.column, a.depth)?;
        let est = a.samples.map(|n| with_threads(threads, || sampler::empirical_efp(&q, n, a.seed, &opts))).transpose()?;
        (formation_body(q.event(), a.route, query)?, est)
    } else {
        let q = AfpQuery::new(a.spec, a.column, a.depth)?;
        let est = a.samples.map(|n| with_threads(threads, || sampler::empirical_afp(&q, n, a.seed, &opts))).transpose()?;
        (formation_body(q.event(), a.route, query)?, est)
    };
    let seeds = if estimate.is_some() { vec![a.seed] } else { vec![] };
    if let Some(Estimate { mean, stderr, samples }) = estimate {
        body["empirical"] = json!({ "mean": mean, "stderr": stderr, "samples": samples });
    }
    let m = manifest(name, a, seeds, started);
    output::emit(a.out.as_deref(), &output::json_document(&m, body))
}

fn run_curve(a: &CurveArgs, started: Instant) -> Result<()> {
    let points = arctic::full_curve(&a.geometry, a.samples)?;
    let params = json!({
        "geometry": [a.geometry.width(), a.geometry.height(), a.geometry.paths()],
        "samples": a.samples,
        "out": a.out,
    });
    let m = RunManifest::new("curve", params, vec![], started);
    let rows = points.iter().map(|p| format!("{},{},{}", p.arc.name(), p.x, p.y));
    output::emit(a.out.as_deref(), &output::csv_document(&m, "arc,x,y", rows))
}

/// Runs `f` on a pool with `threads` workers, or on every core when zero.
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool starts");
    pool.install(f)
}

fn run_sample(a: &SampleArgs, threads: usize, started: Instant) -> Result<()> {
    if a.count == 0 {
        bail!("--count must be positive");
    }
    let opts = a.cftp.options()?;
    let runs = with_threads(threads, || sampler::cftp_batch(a.spec, a.seed, a.count, &opts))?;
    let seeds: Vec<u64> = (0..a.count as u64).map(|i| sampler::sample_seed(a.seed, i)).collect();
    let samples: Vec<Value> = runs
        .iter()
        .zip(&seeds)
        .map(|(r, &seed)| json!({ "seed": seed, "coalescence_time": r.coalescence_time, "config": r.state.to_config() }))
        .collect();
    let body = json!({ "format": CONFIG_FORMAT, "spec": spec_json(a.spec), "samples": samples });
    let m = manifest("sample", a, seeds, started);
    output::emit(a.out.as_deref(), &output::json_document(&m, body))
}

fn run_render(a: &RenderArgs, threads: usize, started: Instant) -> Result<()> {
    let opts = a.cftp.options()?;
    let d = with_threads(threads, || sampler::density_fields(a.spec, a.samples, a.seed, &opts))?;
    let m = manifest("render", a, vec![a.seed], started);

    let field = Field::from(a.field);
    let (w, h) = (a.spec.width(), a.spec.height());
    let mut pixels = Vec::with_capacity(w * h);
    for row in (1..=h).rev() {
        for col in 1..=w {
            let v = d.get(field, col, row);
            pixels.push(if field == Field::CDifference { (v + 1.0) / 2.0 } else { v });
        }
    }
    output::emit(Some(&a.out), &output::pgm_document(&m, w, h, &pixels))?;

    let header = format!("col,row,{}", Field::ALL.map(Field::name).join(","));
    let mut rows = Vec::with_capacity(w * h);
    for row in 1..=h {
        for col in 1..=w {
            let values: Vec<String> = Field::ALL.iter().map(|&f| d.get(f, col, row).to_string()).collect();
            rows.push(format!("{col},{row},{}", values.join(",")));
        }
    }
    output::emit(Some(&a.out.with_extension("csv")), &output::csv_document(&m, &header, rows))
}

fn run_verify(a: &VerifyArgs, threads: usize, started: Instant) -> Result<bool> {
    let checks = with_threads(threads, || verify::run(a.level));
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {}: {}", c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    let m = manifest("verify", a, vec![], started);
    let body = json!({ "passed": passed, "checks": checks });
    output::emit(a.out.as_deref(), &output::json_document(&m, body))?;
    Ok(passed)
}

fn run_enumerate(a: &EnumerateArgs, started: Instant) -> Result<()> {
    let configs: Vec<_> = enumerate_all(a.spec)?.collect();
    let body = json!({ "format": CONFIG_FORMAT, "spec": spec_json(a.spec), "count": configs.len(), "configs": configs });
    let m = manifest("enumerate", a, vec![], started);
    output::emit(a.out.as_deref(), &output::json_document(&m, body))
}

fn run(cli: &Cli) -> Result<bool> {
    let started = Instant::now();
    let threads = cli.threads;
    match &cli.command {
        Command::Exact(a) => run_exact(a, started)?,
        Command::Efp(a) => run_formation("efp", a, threads, started)?,
        Command::Afp(a) => run_formation("afp", a, threads, started)?,
        Command::Curve(a) => run_curve(a, started)?,
        Command::Sample(a) => run_sample(a, threads, started)?,
        Command::Render(a) => run_render(a, threads, started)?,
        Command::Verify(a) => return run_verify(a, threads, started),
        Command::Enumerate(a) => run_enumerate(a, started)?,
    }
    Ok(true)
}

/// Machine-readable description of a failed run.
fn diagnostic(err: &anyhow::Error) -> Value {
    let mut d = json!({ "error": err.to_string() });
    if let Some(SamplerError::Timeout { seed, reached_time }) = err.downcast_ref::<SamplerError>() {
        d["kind"] = json!("timeout");
        d["seed"] = json!(seed);
        d["reached_time"] = json!(reached_time);
        d["resume_initial_time"] = json!(2 * reached_time);
    }
    d
}

fn write_checked(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    Ok(())
}

fn out_path(cli: &Cli) -> Option<&Path> {
    match &cli.command {
        Command::Exact(a) => a.out.as_deref(),
        Command::Efp(a) | Command::Afp(a) => a.out.as_deref(),
        Command::Curve(a) => a.out.as_deref(),
        Command::Sample(a) => a.out.as_deref(),
        Command::Render(a) => Some(&a.out),
        Command::Verify(a) => a.out.as_deref(),
        Command::Enumerate(a) => a.out.as_deref(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = out_path(&cli)
        .map_or(Ok(()), write_checked)
        .context("checking the output path")
        .and_then(|()| run(&cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            ExitCode::FAILURE
        }
    }
}
