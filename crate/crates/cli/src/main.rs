use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mtest_core::coverage::{classify, emit_detail_report, emit_html, instrument, replay_log, CounterMeta};
use mtest_core::engine::{with_large_stack, EventSink, ExceptionPolicy, LogEvent};
use mtest_core::lang::{parse_program, program_to_string, Program};
use mtest_core::modes::{analyze, ProcTable, RenamingTable};
use mtest_core::testkit::{
    apply_renaming, check_suite, parse_testsuite, render_text_report, Assertion, ExecMode, Runner, TestCase,
    TestOutcome, TestkitError,
};

/// Unit testing and coverage for moded logic programs.
#[derive(Parser, Debug)]
#[command(name = "mtest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a test suite and print a pass/fail report.
    Test(RunArgs),
    /// Write the instrumented program, renaming file, counter metadata and
    /// labelled program.
    Instrument {
        program: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a test suite against the instrumented program and write coverage
    /// reports.
    Cover {
        #[command(flatten)]
        run: RunArgs,
        /// Counter metadata of an already instrumented program.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Original source, for the HTML view of an already instrumented program.
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Multi,
    Io,
}

#[derive(Args, Debug)]
struct RunArgs {
    program: PathBuf,
    suite: PathBuf,
    #[arg(long, value_enum, default_value = "multi")]
    mode: ModeArg,
    /// Let exceptions escape and abort with the exception term.
    #[arg(long)]
    debug_exceptions: bool,
    /// Renaming file mapping predicates and modes to procedure names.
    #[arg(long)]
    renaming: Option<PathBuf>,
    /// Solution limit for test cases without a limit assertion.
    #[arg(long)]
    limit: Option<usize>,
}

impl RunArgs {
    fn exec_mode(&self) -> ExecMode {
        match self.mode {
            ModeArg::Multi => ExecMode::Multi,
            ModeArg::Io => ExecMode::Io,
        }
    }

    fn policy(&self) -> ExceptionPolicy {
        if self.debug_exceptions {
            ExceptionPolicy::Propagate
        } else {
            ExceptionPolicy::CatchAll
        }
    }
}

/// Failure classes, mapped to exit statuses 2 and 3.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "program".to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_program(path: &Path) -> Result<Program> {
    parse_program(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// A source program is analyzed; an already split or instrumented one is
/// loaded as is.
fn load_table(program: &Program, procedural: bool) -> Result<ProcTable> {
    Ok(if procedural || program.is_instrumented() {
        ProcTable::from_procedural(program)?
    } else {
        analyze(program)?
    })
}

fn load_suite(args: &RunArgs, table: &ProcTable) -> Result<Vec<TestCase>> {
    let mut cases = parse_testsuite(&read(&args.suite)?).with_context(|| format!("in {}", args.suite.display()))?;
    if let Some(path) = &args.renaming {
        let renaming = RenamingTable::parse(&read(path)?).with_context(|| format!("in {}", path.display()))?;
        cases = apply_renaming(&cases, &renaming, table)?;
    }
    if let Some(n) = args.limit {
        for c in &mut cases {
            if !c.assertions.iter().any(|a| matches!(a, Assertion::Limit(_))) {
                c.assertions.push(Assertion::Limit(n));
            }
        }
    }
    check_suite(&cases, table, args.exec_mode())?;
    Ok(cases)
}

fn run_failure(e: TestkitError) -> Failure {
    match e {
        TestkitError::Uncaught { test, term } => {
            eprintln!("mtest: test {}: uncaught exception: {}", test, term);
            std::process::abort();
        }
        TestkitError::Internal(m) => Failure::Internal(anyhow!(m)),
        e => Failure::Usage(e.into()),
    }
}

/// Runs every case; `log` collects coverage events when given.
fn run_cases(
    runner: &Runner,
    cases: &[TestCase],
    mut log: Option<&mut Vec<LogEvent>>,
) -> Result<Vec<TestOutcome>, Failure> {
    let mut outcomes = Vec::new();
    let mut stdout = io::stdout();
    for c in cases {
        let out: Option<&mut dyn Write> = if runner.mode == ExecMode::Io {
            Some(&mut stdout)
        } else {
            None
        };
        let sink = log.as_deref_mut().map(|l| l as &mut dyn EventSink);
        outcomes.push(runner.run_case(c, sink, out).map_err(run_failure)?);
    }
    Ok(outcomes)
}

fn finish(outcomes: &[TestOutcome]) -> ExitCode {
    print!("{}", render_text_report(outcomes));
    if outcomes.iter().all(TestOutcome::passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_test(args: &RunArgs) -> Result<ExitCode, Failure> {
    let program = load_program(&args.program)?;
    let table = load_table(&program, args.renaming.is_some())?;
    let cases = load_suite(args, &table)?;
    let runner = Runner::new(&table, args.exec_mode(), args.policy());
    let outcomes = run_cases(&runner, &cases, None)?;
    Ok(finish(&outcomes))
}

fn cmd_instrument(program_path: &Path, out: &Path) -> Result<ExitCode, Failure> {
    let program = load_program(program_path)?;
    if program.is_instrumented() {
        return Err(anyhow!("{} is already instrumented", program_path.display()).into());
    }
    let table = analyze(&program)?;
    let inst = instrument(&table).map_err(|e| Failure::Internal(e.into()))?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let s = stem(program_path);
    write(
        &out.join(format!("{}.inst", s)),
        &program_to_string(&inst.table.to_program()),
    )?;
    write(&out.join(format!("{}.rename", s)), &table.renaming.to_file_string())?;
    write(&out.join(format!("{}.meta", s)), &inst.meta.to_file_string())?;
    write(
        &out.join(format!("{}.labelled", s)),
        &program_to_string(&inst.labelled_table.to_program()),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_cover(args: &RunArgs, meta_path: Option<&Path>, source: Option<&Path>, out: &Path) -> Result<ExitCode, Failure> {
    let program = load_program(&args.program)?;
    let (table, meta, source_text) = if program.is_instrumented() {
        let meta_path = meta_path
            .map(Path::to_path_buf)
            .unwrap_or_else(|| args.program.with_extension("meta"));
        let meta = CounterMeta::parse(&read(&meta_path)?).with_context(|| format!("in {}", meta_path.display()))?;
        let text = source.map(read).transpose()?.unwrap_or_default();
        (ProcTable::from_procedural(&program)?, meta, text)
    } else {
        let table = analyze(&program)?;
        let inst = instrument(&table).map_err(|e| Failure::Internal(e.into()))?;
        (inst.table, inst.meta, read(&args.program)?)
    };

    let cases = load_suite(args, &table)?;
    let runner = Runner::new(&table, args.exec_mode(), args.policy());
    let mut events = Vec::new();
    let outcomes = run_cases(&runner, &cases, Some(&mut events))?;

    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let log: String = events.iter().map(|e| format!("{}\n", e)).collect();
    let log_path = out.join(format!("{}.log", stem(&args.program)));
    write(&log_path, &log)?;
    let counts = replay_log(&read(&log_path)?, &meta).with_context(|| format!("replaying {}", log_path.display()))?;
    let report = classify(&counts, &meta);
    write(&out.join("coverage.html"), &emit_html(&report, &source_text))?;
    write(&out.join("coverage.txt"), &emit_detail_report(&report))?;
    Ok(finish(&outcomes))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_large_stack(move || match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Instrument { program, out } => cmd_instrument(program, out),
        Command::Cover { run, meta, source, out } => cmd_cover(run, meta.as_deref(), source.as_deref(), out),
    });
    match result {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("mtest: {:#}", e);
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("mtest: internal error: {:#}", e);
            ExitCode::from(3)
        }
    }
}
