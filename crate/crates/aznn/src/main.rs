use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use aznn::config::{load_file_config, parse_formula, parse_solve, Problem, TimeVaryingConfig};
use aznn::experiment::run_time_varying;
use aznn::matrix_io::{format_matrix, read_matrix, write_matrix};
use aznn::output::{write_trace_csv, write_trajectory_csv, CertificateSummary};
use aznn::report::summarize_csv;
use aznn::StdClock;
use aznn_core::findiff::{builtin, check_convergent, derive, FDFormula, FormulaKind, DEFAULT_DERIVE_SEED, DEFAULT_DERIVE_TRIALS};
use aznn_core::flows::{describe_gallery, gallery, random_unitary_similarity, GalleryKind};
use aznn_core::static_symm::{solve_static, synchronize, StaticParams};
use aznn_core::{DenseMatrix, Error};
use clap::{Args, Parser, Subcommand};

const EXIT_IO: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_RANK_DEFICIENT: u8 = 3;

#[derive(Parser)]
#[command(name = "aznn", version, about = "Phase-adapted ZNN solvers for time-varying matrix square roots and symmetrizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track the square root of a time-varying matrix.
    RunSqrt(TimeVaryingArgs),
    /// Track a symmetrizer of a time-varying real matrix.
    RunSymmetrizer(TimeVaryingArgs),
    /// Full-rank symmetrizer of a static matrix by homotopy.
    StaticSymmetrizer(StaticArgs),
    /// Derive (or print) a convergent look-ahead difference formula.
    DeriveFormula(DeriveArgs),
    /// Export a test matrix in the plain-text matrix format.
    Gallery(GalleryArgs),
    /// Re-summarize stored trajectory or trace CSV files.
    Report(ReportArgs),
}

#[derive(Args)]
struct TimeVaryingArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Trial flow seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Start seed (symmetrizer only).
    #[arg(long)]
    start_seed: Option<u64>,
    /// 1_2, 2_3 or 4_5.
    #[arg(long)]
    formula: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    eta_start: Option<f64>,
    #[arg(long)]
    startup_steps: Option<usize>,
    #[arg(long)]
    eta_iter: Option<f64>,
    #[arg(long)]
    eta_final: Option<f64>,
    #[arg(long)]
    final_switch_time: Option<f64>,
    /// Basic ZNN: eta_iter throughout and the minimal start-up.
    #[arg(long)]
    baseline: bool,
    /// Record X at these times (repeatable).
    #[arg(long = "snapshot-time")]
    snapshot_times: Vec<f64>,
    /// full or reduced (symmetrizer only).
    #[arg(long)]
    solve: Option<String>,
    /// Trajectory CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Summary TOML path; printed to stdout when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Directory for snapshot matrices.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Args)]
struct StaticArgs {
    /// kahan, frank, derog_ut or two_by_two.
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    gallery: Option<String>,
    /// Matrix file in the plain-text format.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 35)]
    n: usize,
    /// two_by_two parameter.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Apply a seeded random unitary similarity first.
    #[arg(long)]
    similarity_seed: Option<u64>,
    #[arg(long, default_value = "small")]
    preset: String,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    approach_exponent: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    /// Snapped to the largest grid step not above it.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    bb_scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write S here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-step relative error CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Certificate TOML path; printed to stdout when absent.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DERIVE_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DERIVE_TRIALS)]
    trials: usize,
    /// Print a built-in formula (1_2, 2_3, 4_5) instead of searching.
    #[arg(long, conflicts_with_all = ["j", "s"])]
    builtin: Option<String>,
}

#[derive(Args)]
struct GalleryArgs {
    /// kahan, frank, derog_ut or two_by_two.
    kind: String,
    #[arg(long, default_value_t = 35)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    similarity_seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

fn main() -> ExitCode {
    // Usage errors map to exit 1.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_IO } else { 0 });
        }
    };
    let result = match cli.command {
        Command::RunSqrt(a) => cmd_time_varying(Problem::Sqrt, a),
        Command::RunSymmetrizer(a) => cmd_time_varying(Problem::Symmetrizer, a),
        Command::StaticSymmetrizer(a) => cmd_static(a),
        Command::DeriveFormula(a) => cmd_derive(a),
        Command::Gallery(a) => cmd_gallery(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn build_config(problem: Problem, a: &TimeVaryingArgs) -> Result<TimeVaryingConfig> {
    let mut cfg = TimeVaryingConfig::default_for(problem);
    if let Some(path) = &a.config {
        cfg.apply_file(&load_file_config(path)?)?;
    }
    macro_rules! over {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { cfg.$field = v; } )* };
    }
    over!(n, seed, start_seed, tau, t0, t_end, eta_start, startup_steps, eta_iter);
    if let Some(v) = a.eta_final {
        cfg.eta_final = Some(v);
    }
    if let Some(v) = a.final_switch_time {
        cfg.final_switch_time = Some(v);
    }
    if let Some(f) = &a.formula {
        cfg.formula = parse_formula(f)?;
    }
    if let Some(s) = &a.solve {
        cfg.solve = parse_solve(s)?;
    }
    cfg.baseline |= a.baseline;
    if !a.snapshot_times.is_empty() {
        cfg.snapshot_times = a.snapshot_times.clone();
    }
    cfg.output.csv = a.csv.clone().or(cfg.output.csv);
    cfg.output.summary = a.summary.clone().or(cfg.output.summary);
    cfg.output.snapshots = a.snapshots.clone().or(cfg.output.snapshots);
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_time_varying(problem: Problem, a: TimeVaryingArgs) -> Result<u8> {
    let cfg = build_config(problem, &a)?;
    let res = run_time_varying(&cfg, &StdClock::new())?;
    if let Some(path) = &cfg.output.csv {
        write_trajectory_csv(create(path)?, &res.trajectory).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(dir) = &cfg.output.snapshots {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for snap in &res.trajectory.snapshots {
            write_matrix(&dir.join(format!("step_{:08}.txt", snap.step)), &snap.x)?;
        }
    }
    let text = res.summary.to_toml()?;
    match &cfg.output.summary {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(e) = &res.failure {
        eprintln!("run stopped: {e}");
        return Ok(if res.diverged() { EXIT_DIVERGED } else { EXIT_IO });
    }
    Ok(0)
}

fn load_static_matrix(a: &StaticArgs) -> Result<(DenseMatrix, String)> {
    let (m, mut desc) = match (&a.gallery, &a.matrix) {
        (Some(kind), None) => {
            let k = GalleryKind::parse(kind).ok_or_else(|| anyhow!("unknown gallery matrix `{kind}`"))?;
            (gallery(k, a.n, a.alpha)?, describe_gallery(k, a.n, a.alpha))
        }
        (None, Some(path)) => (read_matrix(path)?, path.display().to_string()),
        _ => return Err(anyhow!("give exactly one of --gallery and --matrix")),
    };
    if let Some(seed) = a.similarity_seed {
        desc = format!("{desc} similarity_seed={seed}");
        return Ok((random_unitary_similarity(&m, seed)?, desc));
    }
    Ok((m, desc))
}

fn cmd_static(a: StaticArgs) -> Result<u8> {
    let mut p = StaticParams::preset(&a.preset).ok_or_else(|| anyhow!("unknown preset `{}`; use small or large", a.preset))?;
    let (m, source) = load_static_matrix(&a)?;
    if let Some(v) = a.eta {
        p.eta = v;
    }
    if let Some(v) = a.approach_exponent {
        p.approach_exponent = v;
    }
    if let Some(v) = a.bb_scale {
        p.bb_scale = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    if a.t0.is_some() || a.tau.is_some() {
        p.t0 = a.t0.unwrap_or(p.t0);
        let hint = a.tau.unwrap_or(p.tau);
        p.tau = synchronize(p.t0, hint)?;
        if p.tau != hint {
            eprintln!("tau snapped from {hint} to {} so that (1 - t0)/tau is an integer", p.tau);
        }
        p.preset_name = format!("{}+custom", p.preset_name);
    } else if a.eta.is_some() || a.approach_exponent.is_some() || a.bb_scale.is_some() {
        p.preset_name = format!("{}+custom", p.preset_name);
    }
    let cert = match solve_static(&m, &p) {
        Ok(c) => c,
        Err(e @ Error::Diverged { .. }) => {
            eprintln!("run stopped: {e}");
            return Ok(EXIT_DIVERGED);
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &a.out {
        write_matrix(path, &cert.s)?;
    }
    if let Some(path) = &a.trace {
        write_trace_csv(create(path)?, &cert.trace).with_context(|| format!("writing {}", path.display()))?;
    }
    let text = CertificateSummary::new(source, &p, &cert).to_toml()?;
    match &a.certificate {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if !cert.full_rank() {
        eprintln!("symmetrizer is rank deficient: rank {} < {}", cert.rank, cert.s.rows());
        return Ok(EXIT_RANK_DEFICIENT);
    }
    Ok(0)
}

fn print_formula(out: &mut impl Write, f: &FDFormula) -> io::Result<()> {
    writeln!(out, "type {}", f.label())?;
    writeln!(out, "{f}")?;
    let weights: Vec<String> = std::iter::once(&f.future_weight).chain(&f.past_weights).map(|w| w.to_string()).collect();
    writeln!(out, "weights = [{}]", weights.join(", "))?;
    writeln!(out, "tau_scale = {}", f.tau_scale)?;
    writeln!(out, "local_order = {}", f.local_order)?;
    let rep = check_convergent(f);
    writeln!(out, "p(1) = {:e}", rep.p_at_1)?;
    let moduli: Vec<String> = rep.extraneous_root_moduli.iter().map(|m| format!("{m:.6}")).collect();
    writeln!(out, "extraneous root moduli = [{}]", moduli.join(", "))?;
    writeln!(out, "convergent = {}", rep.pass)
}

fn cmd_derive(a: DeriveArgs) -> Result<u8> {
    let f = match (&a.builtin, a.j, a.s) {
        (Some(name), _, _) => {
            builtin(FormulaKind::parse(name).ok_or_else(|| anyhow!("unknown built-in formula `{name}`"))?)
        }
        (None, Some(j), Some(s)) => derive(j, s, a.seed, a.trials)?,
        _ => return Err(anyhow!("give --j and --s, or --builtin")),
    };
    print_formula(&mut io::stdout().lock(), &f)?;
    Ok(0)
}

fn cmd_gallery(a: GalleryArgs) -> Result<u8> {
    let kind = GalleryKind::parse(&a.kind).ok_or_else(|| anyhow!("unknown gallery matrix `{}`", a.kind))?;
    let mut m = gallery(kind, a.n, a.alpha)?;
    let mut desc = describe_gallery(kind, a.n, a.alpha);
    if let Some(seed) = a.similarity_seed {
        m = random_unitary_similarity(&m, seed)?;
        desc = format!("{desc} similarity_seed={seed}");
    }
    let text = format!("# {desc}\n{}", format_matrix(&m));
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_report(a: ReportArgs) -> Result<u8> {
    for path in &a.files {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let report = summarize_csv(io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
        println!("# {}", path.display());
        print!("{}", report.to_toml()?);
    }
    Ok(0)
}
