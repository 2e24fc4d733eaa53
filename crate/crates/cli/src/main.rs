mod record;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qcqp_conic::completion::{zero_fill_checked, PartialMatrix};
use qcqp_conic::export::{to_json, to_sdpa};
use qcqp_conic::generators::{gen_lattice, gen_zero_diag, LatticeSpec, ZeroDiagSpec};
use qcqp_conic::pipeline::{build, run, Outcome};
use qcqp_conic::{homogenize, to_standard_form, Form, HomogenizedData, QcqpInstance, RelaxationKind, SolverConfig};

use record::{write_csv, write_markdown, CompareRow, RunRecord};

/// Environment override for the solver tolerance (all three criteria).
const TOL_ENV: &str = "CONIC_SOLVER_TOL";

#[derive(Parser)]
#[command(version, about = "Generate QCQP instances, build conic relaxations, solve and compare them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded instance as JSON.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
    /// Solve one relaxation of an instance and print its run record.
    Solve(SolveArgs),
    /// Solve several relaxations per instance and tabulate them.
    Compare(CompareArgs),
    /// Dump the standard-form program of a relaxation.
    Export(ExportArgs),
}

#[derive(Subcommand)]
enum Family {
    /// Lattice QCQP on an n_L × n_L grid.
    Lattice {
        #[arg(long = "nl")]
        n_l: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Zero-diagonal QCQP over the unit box.
    Zerodiag {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Relax {
    Fsdp,
    Ssdp,
    Fsocp,
    Ssocp,
    DualFsocp,
    DualSsocp,
}

impl From<Relax> for RelaxationKind {
    fn from(r: Relax) -> Self {
        match r {
            Relax::Fsdp => RelaxationKind::Fsdp,
            Relax::Ssdp => RelaxationKind::Ssdp,
            Relax::Fsocp => RelaxationKind::Fsocp,
            Relax::Ssocp => RelaxationKind::Ssocp,
            Relax::DualFsocp => RelaxationKind::DualFsocp,
            Relax::DualSsocp => RelaxationKind::DualSsocp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    #[value(name = "P", alias = "p")]
    P,
    #[value(name = "D", alias = "d")]
    D,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::P => Form::P,
            FormArg::D => Form::D,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RecordFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Sdpa,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    relax: Relax,
    #[arg(long, value_enum, default_value = "D")]
    form: FormArg,
    /// Overrides CONIC_SOLVER_TOL and the built-in 1e-8.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: RecordFormat,
    /// Write the zero-filled completion of the S-SOCP solution here.
    #[arg(long, value_name = "PATH")]
    emit_completion: Option<PathBuf>,
    /// Write only the upper triangle of the completion.
    #[arg(long, requires = "emit_completion")]
    compact: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Instance files; combined with any lattice sweep.
    instances: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', required = true, num_args = 1..)]
    relax: Vec<Relax>,
    #[arg(long, value_enum, default_value = "D")]
    form: FormArg,
    #[arg(long)]
    tol: Option<f64>,
    /// Lattice sizes to sweep, e.g. 3,4,5.
    #[arg(long = "sweep-nl", value_delimiter = ',')]
    sweep_nl: Vec<usize>,
    /// Constraint count for swept instances.
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Seeds per swept size, counting up from --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `.md` selects Markdown unless --format says otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<TableFormat>,
    /// Rows solved concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    relax: Relax,
    #[arg(long, value_enum, default_value = "D")]
    form: FormArg,
    #[arg(long, value_enum, default_value = "json")]
    format: DumpFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Bad flags, unreadable input, or a request the program cannot express.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Generate { family } => generate(family).map(|_| ExitCode::SUCCESS),
        Command::Solve(a) => solve_cmd(a),
        Command::Compare(a) => compare(a).map(|_| ExitCode::SUCCESS),
        Command::Export(a) => export(a).map(|_| ExitCode::SUCCESS),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn solver_config(tol: Option<f64>) -> anyhow::Result<SolverConfig> {
    let tol = match tol {
        Some(t) => Some(t),
        None => match std::env::var(TOL_ENV) {
            Ok(s) => Some(s.trim().parse::<f64>().map_err(|_| usage(format!("{TOL_ENV}={s:?} is not a number")))?),
            Err(_) => None,
        },
    };
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(usage(format!("tolerance must be positive, got {t}"))),
        Some(t) => Ok(SolverConfig::with_tol(t)),
        None => Ok(SolverConfig::default()),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> anyhow::Result<(String, HomogenizedData)> {
    let inst = QcqpInstance::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let data = homogenize(&inst).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((id, data))
}

fn generate(family: Family) -> anyhow::Result<()> {
    let (inst, output) = match family {
        Family::Lattice { n_l, m, seed, output } => {
            (gen_lattice(&LatticeSpec { n_l, m, seed }).map_err(|e| usage(e.to_string()))?, output)
        }
        Family::Zerodiag { n, m, density, seed, output } => (
            gen_zero_diag(&ZeroDiagSpec { n, m, density, seed }).map_err(|e| usage(e.to_string()))?,
            output,
        ),
    };
    let mut text = inst.to_json()?;
    text.push('\n');
    write_output(output.as_deref(), &text)
}

fn solve_cmd(a: SolveArgs) -> anyhow::Result<ExitCode> {
    let kind = RelaxationKind::from(a.relax);
    let form = Form::from(a.form);
    if a.emit_completion.is_some() && kind != RelaxationKind::Ssocp {
        return Err(usage("--emit-completion needs --relax ssocp"));
    }
    let cfg = solver_config(a.tol)?;
    let (id, data) = load(&a.instance)?;
    let out = run(&data, kind, form, &cfg).with_context(|| format!("{kind} on {id}"))?;
    let rec = RunRecord::new(&id, kind, form, &out);
    match a.format {
        RecordFormat::Json => println!("{}", serde_json::to_string(&rec)?),
        RecordFormat::Csv => write_csv(io::stdout(), &RunRecord::HEADER, &[rec.fields()])?,
    }
    if !rec.is_optimal() {
        eprintln!("error: {kind} on {id} ended with status {}", rec.status);
        return Ok(ExitCode::from(1));
    }
    if let Some(path) = &a.emit_completion {
        fs::write(path, completion_json(&data, &out, a.compact)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Dense rows of the zero-filled matrix, or their upper-triangle tails.
fn completion_json(data: &HomogenizedData, out: &Outcome, compact: bool) -> anyhow::Result<String> {
    let entries = out.program.extract_entries(&out.values).ok_or_else(|| anyhow!("no primal entries"))?;
    let p = PartialMatrix::from_entries(data.dim(), entries)?;
    let (x, worst) = zero_fill_checked(&p);
    log::info!("completion worst 2x2 minor eigenvalue {worst:.3e}");
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (if compact { i } else { 0 }..n).map(|j| x[(i, j)]).collect())
        .collect();
    let mut s = serde_json::to_string(&rows)?;
    s.push('\n');
    Ok(s)
}

struct Task {
    instance: usize,
    kind: RelaxationKind,
}

fn compare(a: CompareArgs) -> anyhow::Result<()> {
    let cfg = solver_config(a.tol)?;
    let form = Form::from(a.form);
    let kinds: Vec<RelaxationKind> = a.relax.iter().map(|&r| r.into()).collect();
    let mut instances = Vec::new();
    for p in &a.instances {
        instances.push(load(p)?);
    }
    for &n_l in &a.sweep_nl {
        for seed in a.seed..a.seed + a.seeds {
            let inst = gen_lattice(&LatticeSpec { n_l, m: a.m, seed }).map_err(|e| usage(e.to_string()))?;
            instances.push((format!("lattice-nl{n_l}-m{}-s{seed}", a.m), homogenize(&inst)?));
        }
    }
    if instances.is_empty() {
        return Err(usage("no instances: pass instance files or --sweep-nl"));
    }
    let format = match (a.format, &a.out) {
        (Some(f), _) => f,
        (None, Some(p)) if p.extension().is_some_and(|e| e == "md") => TableFormat::Md,
        _ => TableFormat::Csv,
    };

    let tasks: Vec<Task> = (0..instances.len())
        .flat_map(|instance| kinds.iter().map(move |&kind| Task { instance, kind }))
        .collect();
    let solve_one = |t: &Task| {
        let (id, data) = &instances[t.instance];
        match run(data, t.kind, form, &cfg) {
            Ok(out) => RunRecord::new(id, t.kind, form, &out),
            Err(e) => RunRecord::failed(id, t.kind, form, &e.to_string()),
        }
    };
    let records = run_tasks(&tasks, a.jobs.max(1), solve_one);

    let rows = annotate(&tasks, records);
    for r in rows.iter().filter(|r| !r.record.is_optimal()) {
        log::warn!("{} {} ({}): {}", r.record.instance, r.record.relax, r.record.form, r.record.status);
    }
    let fields: Vec<Vec<String>> = rows.iter().map(CompareRow::fields).collect();
    let mut buf = Vec::new();
    match format {
        TableFormat::Csv => write_csv(&mut buf, &CompareRow::header(), &fields)?,
        TableFormat::Md => write_markdown(&mut buf, &CompareRow::header(), &fields)?,
    }
    write_output(a.out.as_deref(), &String::from_utf8(buf)?)
}

/// Runs every task on up to `jobs` threads; results keep task order.
fn run_tasks(tasks: &[Task], jobs: usize, f: impl Fn(&Task) -> RunRecord + Sync) -> Vec<RunRecord> {
    if jobs == 1 {
        return tasks.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<RunRecord>> = vec![None; tasks.len()];
    let done = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs.min(tasks.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if k >= tasks.len() {
                    break;
                }
                let rec = f(&tasks[k]);
                done.lock().unwrap()[k] = Some(rec);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every task ran")).collect()
}

/// Adds the agreement column (against the instance's first optimal row) and
/// the F-SOCP / S-SOCP time ratio.
fn annotate(tasks: &[Task], records: Vec<RunRecord>) -> Vec<CompareRow> {
    let reference = |inst: usize| {
        tasks.iter().zip(&records).find(|(t, r)| t.instance == inst && r.is_optimal()).and_then(|(_, r)| r.objective)
    };
    let time_of = |inst: usize, kind: RelaxationKind| {
        tasks
            .iter()
            .zip(&records)
            .find(|(t, r)| t.instance == inst && t.kind == kind && r.is_optimal())
            .map(|(_, r)| r.seconds)
    };
    let rows: Vec<CompareRow> = tasks
        .iter()
        .zip(&records)
        .map(|(t, r)| {
            let agreement = match (reference(t.instance), r.objective) {
                (Some(a), Some(b)) if (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs())) => "OK",
                (Some(_), Some(_)) => "DIFF",
                _ => "-",
            };
            let speed_ratio = match (time_of(t.instance, RelaxationKind::Fsocp), time_of(t.instance, RelaxationKind::Ssocp)) {
                (Some(f), Some(s)) if s > 0.0 => Some(f / s),
                _ => None,
            };
            CompareRow { record: r.clone(), agreement: agreement.to_string(), speed_ratio }
        })
        .collect();
    rows
}

fn export(a: ExportArgs) -> anyhow::Result<()> {
    let kind = RelaxationKind::from(a.relax);
    let (_, data) = load(&a.instance)?;
    let sf = to_standard_form(&build(&data, kind)?, a.form.into())?;
    let text = match a.format {
        DumpFormat::Json => to_json(&sf)? + "\n",
        DumpFormat::Sdpa => to_sdpa(&sf).map_err(|e| usage(format!("{e} (relaxation {kind})")))?,
    };
    write_output(a.output.as_deref(), &text)
}
