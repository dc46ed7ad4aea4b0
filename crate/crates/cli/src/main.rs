use std::collections::BTreeMap;
use std::fs;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sstlab::auditor::{audit_conditions, hypothesis_scan, AuditOptions, ConditionId};
use sstlab::catalog::{catalog_get, catalog_info, catalog_list, CatalogObject};
use sstlab::geodesics::{integrate_geodesic, jacobi_scan, GeodesicOptions};
use sstlab::markowitz::{
    chain_distance, hyperbolicity_probe, projective_parameter, segment_distance, ChainSpec, ProjectiveOptions,
    SchwarzianSign,
};
use sstlab::report::{input_digest, ReportFile, REPORT_SCHEMA_VERSION, TOOL_VERSION};
use sstlab::riemann::{geometry_at, ChartManifold};
use sstlab::spacetime::{Spacetime, SpacetimeKind};
use sstlab::specfile::{load_spacetime_json, SpacetimeSpecFile};
use sstlab::GridSpec;

/// Curvature, energy conditions and causal geodesics of standard static
/// and GRW space-times.
#[derive(Parser)]
#[command(name = "sstlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check energy and convergence conditions on a grid (exit 2 on a violation).
    Audit(AuditArgs),
    /// Print the geometry at one point or event.
    Curvature(CurvatureArgs),
    /// Integrate a geodesic.
    Geodesic(GeodesicArgs),
    /// Scan a geodesic for conjugate points.
    Conjugate(GeodesicArgs),
    /// Projective-parameter upper bound on the Lorentzian pseudo-distance.
    Distance(DistanceArgs),
    /// Hypothesis scan plus sampled projective ranges.
    Probe(ProbeArgs),
    /// Built-in examples.
    Catalog {
        #[command(subcommand)]
        command: CatalogCommand,
    },
}

#[derive(Subcommand)]
enum CatalogCommand {
    List,
    Show {
        name: String,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
    },
}

#[derive(Args)]
struct Source {
    /// A JSON spec file, or `catalog:NAME`.
    spec: String,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    source: Source,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = 5)]
    grid: usize,
    /// Use interior nodes only instead of the closed box.
    #[arg(long)]
    interior: bool,
    /// Seeded draws per event and causal kind.
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Comma-separated condition names, or `all` (default: the energy
    /// conditions and necessary premises, without reversed conditions).
    #[arg(long, value_delimiter = ',')]
    conditions: Vec<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct CurvatureArgs {
    #[command(flatten)]
    source: Source,
    /// `t,x1,…` (or `x1,…` for a Riemannian entry), or `name=value` pairs.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Args)]
struct Integration {
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    #[arg(long, default_value_t = 0.0)]
    h_max: f64,
}

impl Integration {
    fn options(&self) -> GeodesicOptions {
        GeodesicOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.h_max,
        }
    }
}

#[derive(Args)]
struct GeodesicArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, allow_hyphen_values = true)]
    event: String,
    /// Full tangent vector `t',x1',…`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "null")]
    velocity: Option<String>,
    /// Spatial direction of a null geodesic (future-directed unless `--past`).
    #[arg(long, allow_hyphen_values = true)]
    null: Option<String>,
    #[arg(long)]
    past: bool,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    span: Vec<f64>,
    /// Write the trajectory as CSV.
    #[arg(long)]
    csv: Option<String>,
    #[command(flatten)]
    integration: Integration,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    MinusRicci,
    PlusRicci,
}

#[derive(Args)]
struct DistanceArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    /// An event on the same null line, or `null-radial`.
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    /// End condition for `null-radial`, `name=value` (e.g. `t=8`).
    #[arg(long, default_value = "t=8")]
    until: String,
    /// Spatial direction for `null-radial` (default: first coordinate axis).
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long)]
    past: bool,
    /// Affine span used for the projective range.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    span: Vec<f64>,
    /// JSON chain file; replaces `--from`/`--to`.
    #[arg(long)]
    chain: Option<String>,
    #[arg(long, value_enum, default_value_t = SignArg::MinusRicci)]
    sign: SignArg,
    #[command(flatten)]
    integration: Integration,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 5)]
    grid: usize,
    #[arg(long, default_value_t = 8)]
    geodesics: usize,
    #[arg(long, default_value_t = 20.0)]
    span: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn parse_kv(text: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = text.split_once('=').ok_or_else(|| format!("expected name=value, got `{text}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("`{s}` is not a number")))
        .collect()
}

enum Loaded {
    Spacetime(Spacetime),
    Manifold(ChartManifold),
}

struct Input {
    object: Loaded,
    digest: String,
    label: String,
}

impl Input {
    fn spacetime(&self) -> Result<&Spacetime> {
        match &self.object {
            Loaded::Spacetime(st) => Ok(st),
            Loaded::Manifold(_) => bail!("`{}` is a Riemannian manifold; this command needs a space-time", self.label),
        }
    }
}

fn load(source: &Source) -> Result<Input> {
    let overrides: BTreeMap<String, f64> = source.params.iter().cloned().collect();
    if let Some(name) = source.spec.strip_prefix("catalog:") {
        let object = catalog_get(name, &overrides)?;
        let canonical = match &object {
            CatalogObject::Spacetime(st) => SpacetimeSpecFile::from_spacetime(st).to_json(),
            CatalogObject::Manifold(_) => format!("{name}\n{}", serde_json::to_string(&overrides)?),
        };
        let object = match object {
            CatalogObject::Spacetime(st) => Loaded::Spacetime(st),
            CatalogObject::Manifold(m) => Loaded::Manifold(m),
        };
        return Ok(Input {
            object,
            digest: input_digest(canonical.as_bytes()),
            label: source.spec.clone(),
        });
    }
    let bytes = fs::read(&source.spec).with_context(|| format!("cannot read `{}`", source.spec))?;
    let text = String::from_utf8(bytes.clone()).context("spec file is not UTF-8")?;
    let mut st = load_spacetime_json(&text)?;
    let mut digest_input = bytes;
    if !overrides.is_empty() {
        st = st.with_params(&overrides)?;
        digest_input.extend_from_slice(b"\n");
        digest_input.extend_from_slice(serde_json::to_string(&overrides)?.as_bytes());
    }
    Ok(Input {
        object: Loaded::Spacetime(st),
        digest: input_digest(&digest_input),
        label: source.spec.clone(),
    })
}

/// `1,0,0,0` or `t=1,x1=0.5`. Missing names default to the box centre
/// (and `t` to the reference time); `r=value` places the point at distance
/// `value` along the first coordinate axis when `r` is not a coordinate.
fn parse_point(text: &str, coords: &[String], centre: &[f64], time: Option<f64>) -> Result<Vec<f64>> {
    let with_time = time.is_some();
    let n = coords.len() + usize::from(with_time);
    if !text.contains('=') {
        let v = parse_list(text)?;
        if v.len() != n {
            bail!("expected {n} components, got {}", v.len());
        }
        return Ok(v);
    }
    let mut out: Vec<f64> = time.into_iter().chain(centre.iter().cloned()).collect();
    let off = usize::from(with_time);
    for part in text.split(',') {
        let (k, v) = parse_kv(part).map_err(|e| anyhow!(e))?;
        if with_time && k == "t" {
            out[0] = v;
        } else if let Some(i) = coords.iter().position(|c| *c == k) {
            out[off + i] = v;
        } else if k == "r" {
            out[off] = v;
        } else {
            bail!("unknown name `{k}` in `{text}`");
        }
    }
    Ok(out)
}

fn centre(m: &ChartManifold) -> Vec<f64> {
    m.domain().bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect()
}

fn event_of(st: &Spacetime, text: &str) -> Result<Vec<f64>> {
    parse_point(text, st.base().coords(), &centre(st.base()), Some(st.reference_time()))
}

fn matrix(m: &nalgebra::DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn emit(value: &Value, out: Option<&str>) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(value)?);
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write `{path}`")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn audit(args: &AuditArgs) -> Result<u8> {
    let input = load(&args.source)?;
    let st = input.spacetime()?;
    let conditions: Vec<ConditionId> = if args.conditions.is_empty() {
        ConditionId::STANDARD.to_vec()
    } else if args.conditions.iter().any(|c| c.eq_ignore_ascii_case("all")) {
        ConditionId::ALL.to_vec()
    } else {
        args.conditions.iter().map(|c| ConditionId::parse(c)).collect::<sstlab::Result<_>>()?
    };
    let grid = if args.interior {
        GridSpec::interior(args.grid)
    } else {
        GridSpec::closed(args.grid)
    };
    let opts = AuditOptions {
        grid,
        samples_per_event: args.samples,
        seed: args.seed,
        tol: args.tol,
    };
    let reports = audit_conditions(st, &conditions, &opts)?;
    let hypotheses = match st.kind() {
        SpacetimeKind::Static => Some(hypothesis_scan(st, &grid, args.tol.max(1e-12))?),
        SpacetimeKind::Grw => None,
    };
    let report = ReportFile {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        input_digest: input.digest.clone(),
        source: input.label.clone(),
        seed: args.seed,
        grid,
        samples_per_event: args.samples,
        tol: args.tol,
        conditions: reports,
        hypotheses,
        geodesics: None,
        distances: None,
    };
    let text = report.to_json();
    match &args.out {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("cannot write `{path}`"))?;
            for c in &report.conditions {
                eprintln!("{:<24} {:?}", c.id.name(), c.verdict);
            }
        }
        None => print!("{text}"),
    }
    Ok(if report.any_violated() { 2 } else { 0 })
}

fn curvature(args: &CurvatureArgs) -> Result<u8> {
    let input = load(&args.source)?;
    let value = match &input.object {
        Loaded::Manifold(m) => {
            let x = parse_point(&args.point, m.coords(), &centre(m), None)?;
            let geo = geometry_at(m, &x, m.default_params())?;
            json!({
                "point": x,
                "metric": matrix(&geo.g),
                "ricci": matrix(&geo.ricci),
                "scalar": geo.scalar,
            })
        }
        Loaded::Spacetime(st) => {
            let e = event_of(st, &args.point)?;
            let geo = st.lorentz_geometry_at(&e)?;
            let se = st.stress_energy_at(&e)?;
            let mut v = json!({
                "event": e,
                "metric": matrix(&geo.g),
                "ricci": matrix(&geo.ricci),
                "scalar": geo.scalar,
                "stress_energy": matrix(&se.t),
                "bianchi_residual": geo.bianchi_residual(),
            });
            if st.kind() == SpacetimeKind::Static {
                let b = st.base_at(&e)?;
                v["base"] = json!({
                    "f": b.calculus.value,
                    "gradient": b.calculus.grad,
                    "hessian": matrix(&b.calculus.hessian),
                    "laplacian": b.calculus.laplacian,
                    "ricci": matrix(&b.geometry.ricci),
                    "scalar": b.geometry.scalar,
                    "q": matrix(&b.q),
                    "lstar": matrix(&b.lstar),
                });
            }
            v
        }
    };
    emit(&value, None)?;
    Ok(0)
}

fn initial_velocity(st: &Spacetime, event: &[f64], args: &GeodesicArgs) -> Result<Vec<f64>> {
    match (&args.velocity, &args.null) {
        (Some(v), None) => Ok(parse_list(v)?),
        (None, Some(d)) => Ok(st.null_initial(event, &parse_list(d)?, !args.past)?),
        _ => bail!("give exactly one of --velocity or --null"),
    }
}

fn span_of(span: &[f64], default: (f64, f64)) -> (f64, f64) {
    match span {
        [a, b] => (*a, *b),
        _ => default,
    }
}

fn geodesic(args: &GeodesicArgs, scan: bool) -> Result<u8> {
    let input = load(&args.source)?;
    let st = input.spacetime()?;
    let e = event_of(st, &args.event)?;
    let v = initial_velocity(st, &e, args)?;
    let span = span_of(&args.span, (0.0, 10.0));
    let opts = args.integration.options();
    let traj = integrate_geodesic(st, &e, &v, span, &opts)?;
    if let Some(path) = &args.csv {
        fs::write(path, traj.to_csv(st.base().coords())).with_context(|| format!("cannot write `{path}`"))?;
    }
    let last = traj.samples.last().unwrap();
    let mut value = json!({
        "kind": traj.kind,
        "r_span": traj.r_span,
        "r_end": traj.r_end(),
        "exit": traj.exit,
        "steps": traj.samples.len(),
        "norm_drift": traj.norm_drift(),
        "energy_drift": traj.energy_drift(),
        "final_event": last.event,
        "final_velocity": last.velocity,
    });
    if scan {
        value["conjugate"] = serde_json::to_value(jacobi_scan(st, &traj, &opts)?)?;
    }
    emit(&value, None)?;
    Ok(0)
}

fn distance(args: &DistanceArgs) -> Result<u8> {
    let input = load(&args.source)?;
    let st = input.spacetime()?;
    let opts = ProjectiveOptions {
        geodesic: args.integration.options(),
        sign: match args.sign {
            SignArg::MinusRicci => SchwarzianSign::MinusRicci,
            SignArg::PlusRicci => SchwarzianSign::PlusRicci,
        },
        ..Default::default()
    };
    if let Some(path) = &args.chain {
        let chain: ChainSpec = serde_json::from_str(&fs::read_to_string(path).with_context(|| format!("cannot read `{path}`"))?)
            .with_context(|| format!("`{path}` is not a chain file"))?;
        let report = chain_distance(st, &chain, &opts)?;
        emit(&json!({ "input_digest": input.digest, "sign": opts.sign, "chain": report }), None)?;
        return Ok(0);
    }
    let from = event_of(st, args.from.as_deref().ok_or_else(|| anyhow!("--from is required without --chain"))?)?;
    let to = args.to.as_deref().ok_or_else(|| anyhow!("--to is required without --chain"))?;
    let s = st.dim() - 1;
    let (direction, target): (Vec<f64>, Option<Vec<f64>>) = if to == "null-radial" {
        let d = match &args.direction {
            Some(d) => parse_list(d)?,
            None => (0..s).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        };
        (d, None)
    } else {
        let target = event_of(st, to)?;
        (target[1..].iter().zip(&from[1..]).map(|(a, b)| a - b).collect(), Some(target))
    };
    let future = match &target {
        Some(t) => t[0] >= from[0],
        None => !args.past,
    };
    let w = st.null_initial(&from, &direction, future)?;
    let span = span_of(&args.span, (-1e6, 1e6));
    let pp = projective_parameter(st, &from, &w, 0.0, span, &opts)?;
    let (name, value) = match &target {
        None => parse_kv(&args.until).map_err(|e| anyhow!(e))?,
        Some(t) => ("t".to_string(), t[0]),
    };
    let index = if name == "t" {
        0
    } else {
        1 + st
            .base()
            .coords()
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| anyhow!("unknown coordinate `{name}` in --until"))?
    };
    let r_to = pp
        .find_parameter(|x| x[index] - value, true)
        .or_else(|| pp.find_parameter(|x| x[index] - value, false))
        .ok_or_else(|| anyhow!("the null geodesic never reaches {name} = {value} within the span"))?;
    let reached = pp.event_at(r_to).unwrap();
    if let Some(t) = &target {
        let gap = t.iter().zip(&reached).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 1e-6 * (1.0 + t.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
            bail!("the events are not joined by this null geodesic (mismatch {gap:.3e}); use --chain");
        }
    }
    let d = segment_distance(&pp, 0.0, r_to)?;
    emit(
        &json!({
            "input_digest": input.digest,
            "sign": opts.sign,
            "from": from,
            "to": reached,
            "r_to": r_to,
            "value": d.value,
            "quality": d.quality,
            "flags": d.flags,
            "theta_range": d.theta_range,
            "u": d.u,
            "span": d.span,
            "exits": pp.exits,
            "note": "upper bound on the Lorentzian pseudo-distance from a single null segment",
        }),
        None,
    )?;
    Ok(0)
}

fn probe(args: &ProbeArgs) -> Result<u8> {
    let input = load(&args.source)?;
    let st = input.spacetime()?;
    let report = hyperbolicity_probe(
        st,
        &GridSpec::closed(args.grid),
        args.geodesics,
        args.span,
        args.seed,
        args.tol,
        &ProjectiveOptions::default(),
    )?;
    emit(&json!({ "input_digest": input.digest, "seed": args.seed, "probe": report }), None)?;
    Ok(0)
}

fn catalog(cmd: &CatalogCommand) -> Result<u8> {
    match cmd {
        CatalogCommand::List => {
            for info in catalog_list() {
                let params: Vec<String> = info.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
                let kind = serde_json::to_value(info.kind)?;
                println!(
                    "{:<24} {:<9} {:<28} {}",
                    info.name,
                    kind.as_str().unwrap_or_default(),
                    if params.is_empty() { "-".to_string() } else { params.join(",") },
                    info.provenance
                );
            }
        }
        CatalogCommand::Show { name, params } => {
            let overrides: BTreeMap<String, f64> = params.iter().cloned().collect();
            let info = catalog_info(name, &overrides)?;
            let mut value = serde_json::to_value(&info)?;
            if let CatalogObject::Spacetime(st) = catalog_get(name, &overrides)? {
                value["spec"] = serde_json::to_value(SpacetimeSpecFile::from_spacetime(&st))?;
            }
            emit(&value, None)?;
        }
    }
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Audit(a) => audit(a),
        Command::Curvature(a) => curvature(a),
        Command::Geodesic(a) => geodesic(a, false),
        Command::Conjugate(a) => geodesic(a, true),
        Command::Distance(a) => distance(a),
        Command::Probe(a) => probe(a),
        Command::Catalog { command } => catalog(command),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
