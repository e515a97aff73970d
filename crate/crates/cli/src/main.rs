//! `zdeform`: maps between virtual loop settings and equivalent continuous
//! oscillators, and renders the deformation grids.

mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use zdeform::config::{self, BUILTIN_NAMES};
use zdeform::deformation::{self, DominantPoles, PoleReport};
use zdeform::experiments::{self, ForceReconstruction};
use zdeform::grid::{self, GridSpec, DEFAULT_SAMPLES, DEFAULT_THETA_MAX};
use zdeform::oracle::{self, CrossCheckOptions, CrossCheckReport, DEFAULT_SEED};
use zdeform::output::{self, format_sig, SvgOptions};
use zdeform::{CharacteristicForm, ContinuousParams, DampingVariant, DiscreteParams, Error, PhysicalUnits};

use manifest::RunManifest;

const SEED_ENV: &str = "ZDEFORM_SEED";

#[derive(Parser)]
#[command(name = "zdeform", version, about = "Deformation of sampled virtual springs into continuous equivalents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Virtual (K, B) to the equivalent continuous (k, b).
    Map(MapArgs),
    /// Continuous (k, b) to the virtual (K, B) that reproduces it.
    Invmap(InvmapArgs),
    /// Deformation grid: iso-k and iso-b curves, nodes and stability boundary.
    Grid(GridArgs),
    /// Image of the undamped line b = 0, the stability boundary.
    Boundary(BoundaryArgs),
    /// Virtual stiffness matching a real spring with no delay.
    Tune(TuneArgs),
    /// Assembly experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Cross-checks the loop poles by three independent routes.
    Oracle(OracleArgs),
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Eigenfrequencies of single and assembled real and virtual springs.
    Table1(Table1Args),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Built-in name (no_delay, unit_delay, real_damping) or path to a JSON file.
    #[arg(long)]
    config: String,
    /// Real-damping coefficient variant.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Real damping of the real_damping form, normalized.
    #[arg(long, allow_negative_numbers = true)]
    b0: Option<f64>,
}

#[derive(Args, Clone, Copy)]
struct UnitArgs {
    /// Mass; values are physical when --m or --T is given.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Sampling period.
    #[arg(long = "T", default_value_t = 1.0)]
    period: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    AsPrinted,
    Reconstructed,
}

impl From<VariantArg> for DampingVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::AsPrinted => DampingVariant::AsPrinted,
            VariantArg::Reconstructed => DampingVariant::Reconstructed,
        }
    }
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long = "K", allow_negative_numbers = true)]
    stiffness: f64,
    #[arg(long = "B", allow_negative_numbers = true)]
    damping: f64,
    #[command(flatten)]
    units: UnitArgs,
    /// Print a JSON record instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct InvmapArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, allow_negative_numbers = true)]
    k: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[command(flatten)]
    units: UnitArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridFormat {
    Json,
    Csv,
    Svg,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BAxis {
    Virtual,
    Total,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Use the default window (k 0.05:2.5:12, b 0:1:11).
    #[arg(long, conflicts_with_all = ["k_range", "b_range", "samples", "theta_max"])]
    defaults: bool,
    /// iso-k levels as lo:hi:count.
    #[arg(long, value_parser = parse_range)]
    k_range: Option<Range>,
    /// iso-b levels as lo:hi:count.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    b_range: Option<Range>,
    /// Points per curve and on the boundary.
    #[arg(long)]
    samples: Option<usize>,
    /// Largest sampled frequency in rad/sample, below π.
    #[arg(long)]
    theta_max: Option<f64>,
    /// Output path prefix; files are <prefix>.json, .csv, .svg and .manifest.json.
    #[arg(long, default_value = "grid")]
    out_prefix: PathBuf,
    #[arg(long, value_enum, default_value_t = GridFormat::All)]
    format: GridFormat,
    /// Plotted B: virtual only, or virtual plus b0.
    #[arg(long, value_enum, default_value_t = BAxis::Virtual)]
    b_axis: BAxis,
    /// Leave the undeformed reference lattice out of the SVG.
    #[arg(long)]
    no_reference: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct BoundaryArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0.01)]
    theta_min: f64,
    #[arg(long, default_value_t = DEFAULT_THETA_MAX)]
    theta_max: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    k: f64,
    #[command(flatten)]
    units: UnitArgs,
}

#[derive(Args)]
struct Table1Args {
    #[arg(long)]
    k: f64,
    #[command(flatten)]
    units: UnitArgs,
    /// Force reconstruction of the virtual spring in the mixed assembly.
    #[arg(long, default_value = "hold", value_parser = ["hold", "impulse"])]
    force: String,
    /// Also write the report as JSON; `-` prints JSON instead of the table.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long = "K", allow_negative_numbers = true)]
    stiffness: f64,
    #[arg(long = "B", allow_negative_numbers = true)]
    damping: f64,
    #[arg(long, default_value_t = 64)]
    steps: usize,
    /// Fallback excitation seed; overrides ZDEFORM_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug)]
struct Range {
    lo: f64,
    hi: f64,
    n: usize,
}

fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected lo:hi:count, got {s:?}"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let n = n.trim().parse::<usize>().map_err(|e| format!("{n:?}: {e}"))?;
    Ok(Range { lo: num(lo)?, hi: num(hi)?, n })
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => 1,
            e if e.is_domain_error() => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Map(a) => cmd_map(a),
        Command::Invmap(a) => cmd_invmap(a),
        Command::Grid(a) => cmd_grid(a, argv),
        Command::Boundary(a) => cmd_boundary(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Experiment(ExperimentCommand::Table1(a)) => cmd_table1(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_form(a: &ConfigArgs) -> CliResult<CharacteristicForm> {
    if BUILTIN_NAMES.contains(&a.config.as_str()) {
        if a.config != "real_damping" && (a.b0.is_some() || a.variant.is_some()) {
            return Err(usage(format!("--b0 and --variant apply only to real_damping, not {}", a.config)));
        }
        let mut params = BTreeMap::new();
        if let Some(b0) = a.b0 {
            params.insert("b0".to_string(), b0);
        }
        return Ok(CharacteristicForm::builtin(&a.config, &params, a.variant.map(Into::into))?);
    }
    if a.b0.is_some() || a.variant.is_some() {
        return Err(usage("--b0 and --variant apply only to the real_damping built-in"));
    }
    let path = Path::new(&a.config);
    if !path.exists() {
        return Err(usage(format!(
            "`{}` is neither a built-in ({}) nor an existing file",
            a.config,
            BUILTIN_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    Ok(config::parse_config(&text)?)
}

fn units(u: UnitArgs) -> CliResult<PhysicalUnits> {
    Ok(PhysicalUnits::new(u.m, u.period)?)
}

fn g(x: f64) -> String {
    format_sig(x, 9)
}

fn describe_dominant(d: Option<DominantPoles>) -> String {
    match d {
        Some(DominantPoles::Conjugate(z)) => format!("{} ± {}i", g(z.re), g(z.im.abs())),
        Some(DominantPoles::RealPair(a, b)) => format!("{}, {}", g(a), g(b)),
        Some(DominantPoles::RepeatedReal(a)) => format!("{} (double)", g(a)),
        None => "none".to_string(),
    }
}

fn print_record(rows: &[(&str, String)]) {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        println!("{k:<width$} = {v}");
    }
}

fn report_rows(rep: &PoleReport) -> Vec<(&'static str, String)> {
    vec![
        ("dominant", describe_dominant(rep.dominant)),
        ("modulus", rep.dominant_modulus.map(g).unwrap_or_else(|| "none".into())),
        ("max_modulus", g(rep.max_modulus)),
        ("stable", rep.stable.to_string()),
    ]
}

fn cmd_map(a: MapArgs) -> CliResult<u8> {
    let form = load_form(&a.config)?;
    let u = units(a.units)?;
    let ((k, b), rep) = deformation::map_physical(&form, a.stiffness, a.damping, u)?;
    if a.json {
        let value = json!({
            "form": form.name,
            "K": a.stiffness,
            "B": a.damping,
            "k": k,
            "b": b,
            "units": u,
            "report": rep,
        });
        print!("{}", output::to_json(&value));
        return Ok(0);
    }
    let mut rows = vec![
        ("form", form.name.clone()),
        ("K", g(a.stiffness)),
        ("B", g(a.damping)),
        ("k", g(k)),
        ("b", g(b)),
    ];
    rows.extend(report_rows(&rep));
    print_record(&rows);
    Ok(0)
}

fn cmd_invmap(a: InvmapArgs) -> CliResult<u8> {
    let form = load_form(&a.config)?;
    let u = units(a.units)?;
    let (big_k, big_b) = deformation::invmap_physical(&form, a.k, a.b, u)?;
    let c = u.normalize(a.k, a.b);
    let d = DiscreteParams::new(u.normalize_stiffness(big_k), u.normalize_damping(big_b));
    let rep = deformation::analyze(&form, d)?;
    let dominates = deformation::imposed_pair_dominates(&form, c, d)?;
    if a.json {
        let value = json!({
            "form": form.name,
            "k": a.k,
            "b": a.b,
            "K": big_k,
            "B": big_b,
            "units": u,
            "imposed_pair_dominant": dominates,
            "report": rep,
        });
        print!("{}", output::to_json(&value));
        return Ok(0);
    }
    let mut rows = vec![
        ("form", form.name.clone()),
        ("k", g(a.k)),
        ("b", g(a.b)),
        ("K", g(big_k)),
        ("B", g(big_b)),
        ("imposed_dominant", dominates.to_string()),
    ];
    rows.extend(report_rows(&rep));
    print_record(&rows);
    Ok(0)
}

fn grid_spec(a: &GridArgs, form: CharacteristicForm) -> GridSpec {
    let mut spec = GridSpec::defaults(form);
    if let Some(r) = a.k_range {
        spec.k_values = grid::linspace(r.lo, r.hi, r.n);
    }
    if let Some(r) = a.b_range {
        spec.b_values = grid::linspace(r.lo, r.hi, r.n);
    }
    spec.samples_per_curve = a.samples.unwrap_or(DEFAULT_SAMPLES);
    spec.theta_max = a.theta_max.unwrap_or(DEFAULT_THETA_MAX);
    spec
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_grid(a: GridArgs, argv: Vec<String>) -> CliResult<u8> {
    let form = load_form(&a.config)?;
    let spec = grid_spec(&a, form.clone());
    let grid = grid::generate(&spec)?;

    let total = grid.node_count();
    let mapped = grid.nodes.iter().flatten().filter(|n| n.stiffness.is_some()).count();
    if total > 0 && mapped == 0 {
        return Err(Failure { code: 3, message: "every grid node failed".to_string() });
    }
    if mapped < total {
        eprintln!("warning: {} of {total} nodes could not be mapped", total - mapped);
    }
    let skipped: usize = grid.iso_k.iter().chain(&grid.iso_b).map(|c| c.skipped.len()).sum();
    if skipped > 0 {
        eprintln!("warning: {skipped} curve samples skipped");
    }
    if !grid.boundary.skipped.is_empty() {
        eprintln!("warning: {} boundary samples skipped", grid.boundary.skipped.len());
    }

    let b_offset = match a.b_axis {
        BAxis::Virtual => 0.0,
        BAxis::Total => form.b0().unwrap_or(0.0),
    };
    let want = |f: GridFormat| a.format == f || a.format == GridFormat::All;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    if want(GridFormat::Json) {
        files.push((with_suffix(&a.out_prefix, ".json"), output::to_json(&grid)));
    }
    if want(GridFormat::Csv) {
        files.push((with_suffix(&a.out_prefix, ".csv"), output::grid_csv(&grid)));
    }
    if want(GridFormat::Svg) {
        let opts = SvgOptions { b_offset, show_reference: !a.no_reference };
        files.push((with_suffix(&a.out_prefix, ".svg"), output::grid_svg(&grid, opts)));
    }

    if let Some(parent) = a.out_prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(Error::from)?;
    }
    let mut manifest = RunManifest::new(argv, &config::config_to_string(&form));
    for (path, text) in &files {
        std::fs::write(path, text).map_err(Error::from)?;
        manifest.add_output(&path.display().to_string(), text.as_bytes());
        println!("wrote {}", path.display());
    }
    let manifest_path = with_suffix(&a.out_prefix, ".manifest.json");
    std::fs::write(&manifest_path, output::to_json(&manifest.to_value())).map_err(Error::from)?;
    println!("wrote {}", manifest_path.display());
    println!(
        "{} nodes, {} representable, {} boundary points",
        total,
        grid.representable_count(),
        grid.boundary.points.len()
    );
    Ok(0)
}

fn cmd_boundary(a: BoundaryArgs) -> CliResult<u8> {
    let form = load_form(&a.config)?;
    let trace = deformation::stability_boundary(&form, (a.theta_min, a.theta_max), a.samples)?;
    for s in &trace.skipped {
        eprintln!("warning: theta {} skipped: {}", g(s.theta), s.reason);
    }
    match a.format {
        TableFormat::Json => print!("{}", output::to_json(&trace)),
        TableFormat::Csv => {
            println!("theta,K,B");
            for p in &trace.points {
                println!("{},{},{}", g(p.theta), g(p.stiffness), g(p.damping));
            }
        }
    }
    Ok(0)
}

fn cmd_tune(a: TuneArgs) -> CliResult<u8> {
    let u = units(a.units)?;
    let big_k = deformation::tune(a.k, u)?;
    let normalized = u.normalize_stiffness(big_k);
    if u.is_normalized() {
        print_record(&[("K", g(big_k))]);
    } else {
        print_record(&[("K", g(big_k)), ("K_normalized", g(normalized))]);
    }
    Ok(0)
}

fn cmd_table1(a: Table1Args) -> CliResult<u8> {
    let u = units(a.units)?;
    let force: ForceReconstruction = a.force.parse()?;
    let report = experiments::run_table1_with(a.k, u, force)?;
    let text = output::to_json(&report);
    match a.json.as_deref() {
        Some(p) if p == Path::new("-") => print!("{text}"),
        Some(p) => {
            std::fs::write(p, &text).map_err(Error::from)?;
            print!("{}", output::table1_text(&report));
        }
        None => print!("{}", output::table1_text(&report)),
    }
    Ok(0)
}

fn seed_from_env() -> CliResult<Option<u64>> {
    let Ok(raw) = std::env::var(SEED_ENV) else {
        return Ok(None);
    };
    let raw = raw.trim();
    let parsed = match raw.strip_prefix("0x").or_else(|| raw.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => raw.parse(),
    };
    parsed.map(Some).map_err(|e| usage(format!("{SEED_ENV}={raw:?}: {e}")))
}

fn route_line(name: &str, poles: &[zdeform::Complex64], eq: Option<ContinuousParams>) -> String {
    let list: Vec<String> = poles
        .iter()
        .map(|z| {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", g(z.re), g(z.im.abs()))
        })
        .collect();
    let eq = eq.map(|c| format!("k={} b={}", g(c.k), g(c.b))).unwrap_or_else(|| "not representable".into());
    format!("{name:<11} [{}]  {eq}", list.join(", "))
}

fn print_cross_check(r: &CrossCheckReport) {
    println!("form        {}", r.form);
    println!("K, B        {}, {}", g(r.params.stiffness), g(r.params.damping));
    println!("{}", route_line("roots", &r.polynomial.poles, r.polynomial.equivalent));
    println!("{}", route_line("eigen", &r.eigen.poles, r.eigen.equivalent));
    match &r.identified {
        Some(id) => println!("{}", route_line("identified", &id.poles, id.equivalent)),
        None => println!("identified  none"),
    }
    if let (Some(order), Some(exc)) = (r.identified_order, &r.excitation) {
        println!("order       {order} ({exc} excitation)");
    }
    println!("roots/eigen {:e}", r.max_poly_vs_eigen);
    if let Some(v) = r.max_poly_vs_identified {
        println!("roots/ident {v:e}");
    }
    for n in &r.notes {
        println!("note        {n}");
    }
    println!("{}", if r.pass { "PASS" } else { "FAIL" });
}

fn cmd_oracle(a: OracleArgs) -> CliResult<u8> {
    let form = load_form(&a.config)?;
    let seed = match a.seed {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(DEFAULT_SEED),
    };
    let opts = CrossCheckOptions { steps: a.steps, seed };
    let report = oracle::cross_check(&form, DiscreteParams::new(a.stiffness, a.damping), opts)?;
    if a.json {
        print!("{}", output::to_json(&report));
    } else {
        print_cross_check(&report);
    }
    Ok(if report.pass { 0 } else { 4 })
}
