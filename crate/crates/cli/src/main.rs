//! Command-line driver: leak detection, conditional-release repair, graph
//! statistics, corpus generation, and the reference interpreter, all over
//! app-model and resource-spec JSON documents.
//!
//! Exit codes: 0 clean, 1 leaks or protocol violations found, 2 bad input,
//! 3 repair left leaks behind or failed validation. Results go to stdout
//! (or `--out`); warnings and progress go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use leakfix_core::analysis::{
    analyze, AnalysisOptions, CycleWarning, LeakReport, ReleasePolicy, Validation, ViolationKind,
    DEFAULT_DEPTH,
};
use leakfix_core::ir::{
    parse_app_with_warnings, parse_resource_spec, serialize_app, serialize_resource_spec,
    AppModel, Origin, ResourceSpec,
};
use leakfix_core::repair::{repair, Fix, RepairOptions};
use leakfix_core::rfg::{build_rfg, cfg_cyclomatic};
use leakfix_oracle::{generate, oracle_leaks, oracle_violations, SimLimits, SimViolation};

const EXIT_CLEAN: u8 = 0;
const EXIT_LEAKS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_FIX_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "leakfix", version, about = "Resource-leak detection and repair for event-driven app models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Detect resource leaks in an app model
    Analyze(AnalyzeArgs),
    /// Detect leaks, insert guarded releases, and validate the patched app
    Fix(FixArgs),
    /// Resource-flow graph sizes and cyclomatic complexity, per procedure
    Stats(StatsArgs),
    /// Seeded random app/spec corpora
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Reference interpreter over the same inputs
    #[command(subcommand)]
    Oracle(OracleCmd),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Write `count` seeded app/spec pairs into a directory
    Generate(GenerateArgs),
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Enumerate leaks and protocol violations by brute-force interpretation
    Run(OracleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Release {
    /// Resources must be free at the first release callback
    Early,
    /// Resources must be free at the last release callback
    Late,
}

impl From<Release> for ReleasePolicy {
    fn from(r: Release) -> ReleasePolicy {
        match r {
            Release::Early => ReleasePolicy::Early,
            Release::Late => ReleasePolicy::Late,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// App model JSON document
    app: PathBuf,
    /// Resource specification JSON document
    #[arg(long)]
    resource: PathBuf,
    /// Lifecycle unrolling depth (max visits per lifecycle state)
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Release::Early)]
    release: Release,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixArgs {
    app: PathBuf,
    #[arg(long)]
    resource: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Release::Early)]
    release: Release,
    /// Skip protocol validation of the patched app
    #[arg(long)]
    no_validate: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the patched app model here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    app: PathBuf,
    #[arg(long)]
    resource: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one Graphviz file per procedure into this directory
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Seed of the first generated pair; pair `i` uses `seed + i`
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Directory receiving `app_<seed>.json` and `spec_<seed>.json` files
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    app: PathBuf,
    #[arg(long)]
    resource: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.cmd {
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Fix(a) => cmd_fix(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::Corpus(CorpusCmd::Generate(a)) => cmd_generate(a),
        Cmd::Oracle(OracleCmd::Run(a)) => cmd_oracle(a),
    };
    match run {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

// ---------------------------------------------------------------------------
// Input and output plumbing
// ---------------------------------------------------------------------------

fn load_app(path: &Path) -> Result<AppModel, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (app, warnings) =
        parse_app_with_warnings(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(app)
}

fn load_spec(path: &Path) -> Result<ResourceSpec, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_resource_spec(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report types serialize");
    s.push('\n');
    s
}

fn print_cycle_warnings(warnings: &[CycleWarning]) {
    for w in warnings {
        eprintln!("warning: call cycle broken at {} -> {}", w.caller, w.callee);
    }
}

fn kind_name(kind: ViolationKind) -> &'static str {
    match kind {
        ViolationKind::UseAfterRelease => "use_after_release",
        ViolationKind::DoubleRelease => "double_release",
        ViolationKind::NewLeak => "new_leak",
    }
}

fn sim_kind_name(kind: SimViolation) -> &'static str {
    match kind {
        SimViolation::UseAfterRelease => "use_after_release",
        SimViolation::DoubleRelease => "double_release",
        SimViolation::NewLeak => "new_leak",
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AnalyzeDoc<'a> {
    app: &'a str,
    resource: &'a str,
    depth: usize,
    policy: ReleasePolicy,
    reports: &'a [LeakReport],
    warnings: &'a [CycleWarning],
}

fn render_reports(reports: &[LeakReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&format!("leak: {} in {}\n", r.resource, r.component));
        s.push_str(&format!("  acquired at: {}\n", r.acquire));
        s.push_str(&format!("  release callback: {}\n", r.release_callback));
        s.push_str(&format!("  sequence: {}\n", r.callback_sequence.join(" ")));
        s.push_str(&format!("  witness: {}\n", r.witness.symbols.join(" ")));
    }
    match reports.len() {
        0 => s.push_str("no leaks\n"),
        1 => s.push_str("1 leak\n"),
        n => s.push_str(&format!("{n} leaks\n")),
    }
    s
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<u8, String> {
    let app = load_app(&a.app)?;
    let spec = load_spec(&a.resource)?;
    let opts = AnalysisOptions { depth: a.depth, policy: a.release.into() };
    let result = analyze(&app, &spec, &opts).map_err(|e| e.to_string())?;
    print_cycle_warnings(&result.warnings);

    let text = match a.format {
        Format::Json => to_json(&AnalyzeDoc {
            app: &app.name,
            resource: &spec.name,
            depth: a.depth,
            policy: a.release.into(),
            reports: &result.reports,
            warnings: &result.warnings,
        }),
        Format::Text => render_reports(&result.reports),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(if result.reports.is_empty() { EXIT_CLEAN } else { EXIT_LEAKS })
}

// ---------------------------------------------------------------------------
// fix
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FixDoc<'a> {
    app: &'a str,
    resource: &'a str,
    depth: usize,
    policy: ReleasePolicy,
    initial_reports: &'a [LeakReport],
    fixes: &'a [Fix],
    remaining: &'a [LeakReport],
    validation: &'a Option<Validation>,
    warnings: &'a [CycleWarning],
}

fn render_fixes(fixes: &[Fix], remaining: &[LeakReport], validation: &Option<Validation>) -> String {
    let mut s = String::new();
    for f in fixes {
        s.push_str(&format!(
            "fix: release_if_held {} {} at {}/{}[{}]\n",
            f.release_op, f.target, f.location.procedure, f.location.block, f.location.index
        ));
        if let Some(p) = &f.plumb {
            s.push_str(&format!("  plumbed {} through field {}\n", p.original_target, p.field));
        }
        if let Some(np) = &f.new_procedure {
            s.push_str(&format!("  synthesized {} for callback {}\n", np.name, np.callback));
        }
    }
    match fixes.len() {
        0 => s.push_str("no fixes needed\n"),
        1 => s.push_str("1 fix applied\n"),
        n => s.push_str(&format!("{n} fixes applied\n")),
    }
    for r in remaining {
        s.push_str(&format!("unfixed: {} in {} acquired at {}\n", r.resource, r.component, r.acquire));
    }
    match validation {
        None => s.push_str("validation: skipped\n"),
        Some(v) if v.valid => s.push_str("validation: passed\n"),
        Some(v) => {
            for viol in &v.violations {
                s.push_str(&format!(
                    "  violation: {} in {} at {}\n",
                    kind_name(viol.kind),
                    viol.component,
                    viol.origin
                ));
            }
            s.push_str("validation: FAILED\n");
        }
    }
    s
}

fn cmd_fix(a: FixArgs) -> Result<u8, String> {
    let app = load_app(&a.app)?;
    let spec = load_spec(&a.resource)?;
    let opts = RepairOptions {
        analysis: AnalysisOptions { depth: a.depth, policy: a.release.into() },
        run_validation: !a.no_validate,
    };
    let outcome = repair(&app, &spec, &opts).map_err(|e| e.to_string())?;
    print_cycle_warnings(&outcome.warnings);

    if let Some(path) = &a.out {
        fs::write(path, serialize_app(&outcome.patched))
            .map_err(|e| format!("{}: {e}", path.display()))?;
        eprintln!("patched app written to {}", path.display());
    }

    let text = match a.format {
        Format::Json => to_json(&FixDoc {
            app: &app.name,
            resource: &spec.name,
            depth: a.depth,
            policy: a.release.into(),
            initial_reports: &outcome.initial_reports,
            fixes: &outcome.fixes,
            remaining: &outcome.remaining,
            validation: &outcome.validation,
            warnings: &outcome.warnings,
        }),
        Format::Text => render_fixes(&outcome.fixes, &outcome.remaining, &outcome.validation),
    };
    print!("{text}");
    Ok(if outcome.success() { EXIT_CLEAN } else { EXIT_FIX_FAILED })
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ProcStats {
    name: String,
    nodes: usize,
    edges: usize,
    rfg_cyclomatic: i64,
    cfg_cyclomatic: i64,
    ratio: f64,
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    app: &'a str,
    resource: &'a str,
    procedures: Vec<ProcStats>,
    total: ProcStats,
}

fn ratio(rfg: i64, cfg: i64) -> f64 {
    if cfg == 0 {
        0.0
    } else {
        rfg as f64 / cfg as f64
    }
}

fn render_stats(doc: &StatsDoc) -> String {
    let mut s = format!(
        "{:<24} {:>7} {:>7} {:>7} {:>7} {:>7}\n",
        "procedure", "nodes", "edges", "m(rfg)", "m(cfg)", "ratio"
    );
    for row in doc.procedures.iter().chain([&doc.total]) {
        s.push_str(&format!(
            "{:<24} {:>7} {:>7} {:>7} {:>7} {:>7.2}\n",
            row.name, row.nodes, row.edges, row.rfg_cyclomatic, row.cfg_cyclomatic, row.ratio
        ));
    }
    s
}

fn cmd_stats(a: StatsArgs) -> Result<u8, String> {
    let app = load_app(&a.app)?;
    let spec = load_spec(&a.resource)?;
    let tracked = app.resource_refs(&spec);

    if let Some(dir) = &a.dot {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }

    let mut procedures = Vec::new();
    let mut total = ProcStats {
        name: "(app)".to_string(),
        nodes: 0,
        edges: 0,
        rfg_cyclomatic: 0,
        cfg_cyclomatic: 0,
        ratio: 0.0,
    };
    for (name, proc) in &app.procedures {
        let g = build_rfg(proc, &spec, &tracked);
        let row = ProcStats {
            name: name.clone(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            rfg_cyclomatic: g.cyclomatic(),
            cfg_cyclomatic: cfg_cyclomatic(proc),
            ratio: ratio(g.cyclomatic(), cfg_cyclomatic(proc)),
        };
        total.nodes += row.nodes;
        total.edges += row.edges;
        total.rfg_cyclomatic += row.rfg_cyclomatic;
        total.cfg_cyclomatic += row.cfg_cyclomatic;
        procedures.push(row);
        if let Some(dir) = &a.dot {
            let path = dir.join(format!("{name}.dot"));
            fs::write(&path, g.to_dot()).map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    total.ratio = ratio(total.rfg_cyclomatic, total.cfg_cyclomatic);
    let doc = StatsDoc { app: &app.name, resource: &spec.name, procedures, total };

    let text = match a.format {
        Format::Json => to_json(&doc),
        Format::Text => render_stats(&doc),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(EXIT_CLEAN)
}

// ---------------------------------------------------------------------------
// corpus generate
// ---------------------------------------------------------------------------

fn cmd_generate(a: GenerateArgs) -> Result<u8, String> {
    fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    for i in 0..a.count {
        let seed = a.seed + i as u64;
        let pair = generate(seed);
        let app_path = a.out.join(format!("app_{seed}.json"));
        fs::write(&app_path, serialize_app(&pair.app))
            .map_err(|e| format!("{}: {e}", app_path.display()))?;
        let spec_path = a.out.join(format!("spec_{seed}.json"));
        fs::write(&spec_path, serialize_resource_spec(&pair.spec))
            .map_err(|e| format!("{}: {e}", spec_path.display()))?;
    }
    eprintln!("wrote {} app/spec pairs under {}", a.count, a.out.display());
    Ok(EXIT_CLEAN)
}

// ---------------------------------------------------------------------------
// oracle run
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OracleLeakRow<'a> {
    component: &'a str,
    acquire: &'a Origin,
}

#[derive(Serialize)]
struct OracleViolationRow<'a> {
    component: &'a str,
    kind: &'static str,
    origin: &'a Origin,
}

#[derive(Serialize)]
struct OracleDoc<'a> {
    app: &'a str,
    resource: &'a str,
    depth: usize,
    leaks: Vec<OracleLeakRow<'a>>,
    violations: Vec<OracleViolationRow<'a>>,
}

fn cmd_oracle(a: OracleArgs) -> Result<u8, String> {
    let app = load_app(&a.app)?;
    let spec = load_spec(&a.resource)?;
    let limits = SimLimits::default();
    let leaks = oracle_leaks(&app, &spec, a.depth, &limits).map_err(|e| e.to_string())?;
    let violations =
        oracle_violations(&app, &spec, a.depth, &limits).map_err(|e| e.to_string())?;

    let text = match a.format {
        Format::Json => to_json(&OracleDoc {
            app: &app.name,
            resource: &spec.name,
            depth: a.depth,
            leaks: leaks
                .iter()
                .map(|(c, o)| OracleLeakRow { component: c, acquire: o })
                .collect(),
            violations: violations
                .iter()
                .map(|(c, k, o)| OracleViolationRow {
                    component: c,
                    kind: sim_kind_name(*k),
                    origin: o,
                })
                .collect(),
        }),
        Format::Text => {
            let mut s = String::new();
            for (c, o) in &leaks {
                s.push_str(&format!("leak: {c} acquired at {o}\n"));
            }
            for (c, k, o) in &violations {
                s.push_str(&format!("violation: {} in {c} at {o}\n", sim_kind_name(*k)));
            }
            if leaks.is_empty() && violations.is_empty() {
                s.push_str("clean\n");
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(if leaks.is_empty() && violations.is_empty() { EXIT_CLEAN } else { EXIT_LEAKS })
}
