mod commands;
mod output;
mod problem;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::{Artifacts, CliError, Command, Flags, Status};
use problem::LoadError;

#[derive(Parser, Debug)]
#[command(name = "nonholo", version, about = "Optimal control on nonholonomic distributions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Grid resolution: RK4 steps per unit time, or nodes per side of a sheet
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Solver or checker tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for sample clouds and perturbations (falls back to NONHOLO_SEED)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving the CSV and JSON artifacts
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Number of problem files processed concurrently
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Candidate trajectory or sheet CSV for `check`
    #[arg(long, global = true)]
    candidate: Option<PathBuf>,
    /// Only the Frobenius / bracket test in `geometry`
    #[arg(long, global = true)]
    frobenius: bool,
    /// Report the complete-integrability residual
    #[arg(long, global = true)]
    cic: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve the necessary conditions (shooting, graph sheets, bang-bang)
    Solve { files: Vec<PathBuf> },
    /// Evaluate the residuals of a candidate extremal
    Check { files: Vec<PathBuf> },
    /// Bang-bang synthesis for time or terminal costs
    Bang { files: Vec<PathBuf> },
    /// Integrate a two-parameter sheet in both orders
    Sheet { files: Vec<PathBuf> },
    /// Frobenius coefficient, Lie brackets and integrability residuals
    Geometry { files: Vec<PathBuf> },
    /// Christoffel symbols, work and length along a field line
    Riemann { files: Vec<PathBuf> },
}

impl Cmd {
    fn split(self) -> (Command, Vec<PathBuf>) {
        match self {
            Cmd::Solve { files } => (Command::Solve, files),
            Cmd::Check { files } => (Command::Check, files),
            Cmd::Bang { files } => (Command::Bang, files),
            Cmd::Sheet { files } => (Command::Sheet, files),
            Cmd::Geometry { files } => (Command::Geometry, files),
            Cmd::Riemann { files } => (Command::Riemann, files),
        }
    }
}

struct FileResult {
    status: Status,
    stdout: Vec<String>,
    stderr: Vec<String>,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn process(cmd: Command, path: &Path, flags: &Flags, out: &Path) -> FileResult {
    let result = problem::load(path).map_err(CliError::from).and_then(|file| {
        let art: Artifacts = commands::run(cmd, &file, flags)?;
        let stem = file.stem();
        if let Some(csv) = &art.csv {
            write(&out.join(format!("{stem}.csv")), csv)?;
        }
        write(&out.join(format!("{stem}.json")), &output::write_json(&art.json))?;
        Ok(art)
    });
    match result {
        Ok(art) => FileResult {
            status: art.status,
            stdout: art.summary.lines().map(str::to_string).collect(),
            stderr: Vec::new(),
        },
        Err(e) => {
            let stderr = match &e {
                CliError::Load(LoadError::Invalid { path, diagnostics }) => {
                    diagnostics.iter().map(|d| format!("{path}: {d}")).collect()
                }
                other => vec![format!("{}: {other}", path.display())],
            };
            FileResult {
                status: e.status(),
                stdout: Vec::new(),
                stderr,
            }
        }
    }
}

fn seed(opt: Option<u64>) -> Result<u64, String> {
    if let Some(s) = opt {
        return Ok(s);
    }
    match std::env::var("NONHOLO_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("NONHOLO_SEED must be an unsigned integer, got `{v}`")),
        Err(_) => Ok(nonholo::sample::DEFAULT_SEED),
    }
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            println!("status=invalid");
            return Status::Invalid.code();
        }
    };
    let (cmd, files) = cli.command.split();
    let o = cli.opts;
    let fail = |msg: String| {
        eprintln!("error: {msg}");
        println!("status=invalid");
        Status::Invalid.code()
    };
    if files.is_empty() {
        return fail("no problem file given".into());
    }
    let seed = match seed(o.seed) {
        Ok(s) => s,
        Err(m) => return fail(m),
    };
    if let Err(e) = std::fs::create_dir_all(&o.out) {
        return fail(format!("{}: {e}", o.out.display()));
    }
    let flags = Flags {
        grid: o.grid,
        tol: o.tol,
        seed,
        candidate: o.candidate,
        frobenius: o.frobenius,
        cic: o.cic,
    };
    let results: Vec<Mutex<Option<FileResult>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..o.jobs.clamp(1, files.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(path) = files.get(i) else { break };
                let r = std::panic::catch_unwind(|| process(cmd, path, &flags, &o.out)).unwrap_or_else(|_| FileResult {
                    status: Status::Invalid,
                    stdout: Vec::new(),
                    stderr: vec![format!("{}: internal error", path.display())],
                });
                *results[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
            });
        }
    });
    let mut worst = Status::Ok;
    for (path, slot) in files.iter().zip(results) {
        let r = slot.into_inner().unwrap_or_else(|e| e.into_inner()).unwrap_or(FileResult {
            status: Status::Invalid,
            stdout: Vec::new(),
            stderr: vec![format!("{}: not processed", path.display())],
        });
        if files.len() > 1 {
            println!("== {}", path.display());
        }
        for l in &r.stdout {
            println!("{l}");
        }
        for l in &r.stderr {
            eprintln!("{l}");
        }
        if files.len() > 1 {
            println!("file_status={}", r.status.as_str());
        }
        worst = worst.max(r.status);
    }
    println!("status={}", worst.as_str());
    worst.code()
}

fn main() {
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    let code = std::panic::catch_unwind(real_main).unwrap_or_else(|_| {
        println!("status=invalid");
        Status::Invalid.code()
    });
    std::process::exit(code);
}
