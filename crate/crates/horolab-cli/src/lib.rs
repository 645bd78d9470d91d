//! Command-line driver for the `horolab` experiments.
//!
//! Every subcommand produces one table, written as CSV (the default) or as a
//! JSON document with a metadata header. Exit codes: 0 on success, 1 when
//! `verify` finds a failing check or output cannot be written, 2 for invalid
//! input, 3 when a numerical procedure does not converge, 4 when a resource
//! guard trips.

pub mod args;
pub mod commands;
pub mod config;
pub mod table;
pub mod verify;

use args::{Cli, Command, Format};
use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde_json::{json, Map, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

pub fn exit_code(e: &horolab::Error) -> i32 {
    match e {
        horolab::Error::Domain(_) | horolab::Error::Validation(_) => EXIT_VALIDATION,
        horolab::Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        horolab::Error::ResourceGuard { .. } => EXIT_RESOURCE,
    }
}

/// The resolved flag values of the subcommand, defaults included.
fn resolved_config(name: &str, sub: &ArgMatches) -> Value {
    let root = Cli::command();
    let Some(def) = root.find_subcommand(name) else {
        return Value::Null;
    };
    let mut obj = Map::new();
    for arg in def.get_arguments() {
        let key = arg.get_id().as_str();
        if let Ok(Some(raw)) = sub.try_get_raw(key) {
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            let v = match vals.as_slice() {
                [one] => json!(one),
                _ => json!(vals),
            };
            obj.insert(key.to_owned(), v);
        }
    }
    Value::Object(obj)
}

fn execute(cmd: &Command) -> Result<(Table, bool), horolab::Error> {
    let seed = cmd.common().seed;
    let table = match cmd {
        Command::Delta(a) => commands::delta(a)?,
        Command::Lfd(a) => commands::lfd(a)?,
        Command::Sgq(a) => commands::sgq(a)?,
        Command::Expsum(a) => commands::expsum(a)?,
        Command::Kloosterman(a) => commands::kloosterman_table(a)?,
        Command::Quadsum(a) => commands::quadsum(a)?,
        Command::Orbit(a) => commands::orbit(a)?,
        Command::Horocycle(a) => commands::horocycle(a)?,
        Command::Theorem4(a) => commands::theorem4(a)?,
        Command::Sweep(a) => commands::sweep(a, seed)?,
        Command::Verify(_) => return Ok(verify::run()),
    };
    Ok((table, true))
}

fn emit(table: &Table, cmd: &Command, config: Value, stdout: &mut dyn Write) -> io::Result<()> {
    let common = cmd.common();
    let mut sink: Box<dyn Write + '_> = match &common.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    };
    match common.format {
        Format::Csv => table.write_csv(&mut sink)?,
        Format::Json => {
            let meta = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": cmd.name(),
                "config": config,
            });
            table.write_json(&mut sink, meta)?;
        }
    }
    sink.flush()
}

/// Runs one invocation with explicit output streams and returns the exit code.
pub fn run_with<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match config::merge(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return EXIT_VALIDATION;
        }
    };
    let config = matches
        .subcommand()
        .map_or(Value::Null, |(name, sub)| resolved_config(name, sub));

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.command.common().jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker pool: {e}");
            return EXIT_VALIDATION;
        }
    };
    let (table, passed) = match pool.install(|| execute(&cli.command)) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = emit(&table, &cli.command, config, stdout) {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_CHECK_FAILED;
    }
    if passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Runs one invocation against the process's standard streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
