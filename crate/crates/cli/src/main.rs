//! `signlab`: batch front end for coefficient tables, exponent exports,
//! sign-change scans, prime sums, exponent fits and the verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 capacity or data error.

mod commands;
mod config;
mod svg;
mod verify;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use signlab_core::Error;

use config::{read_config_file, RawSettings, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "signlab",
    version,
    about = "Sign changes of Hecke eigenvalues and GMF exponents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Write the coefficient table `n,a_n` and fill the cache.
    Coeffs,
    /// Write the exponents `m(n) = n·c(n)` of a weight-2 newform.
    Gmf,
    /// Count sign changes over a window grid.
    Signchanges,
    /// Weighted prime sums at `x0·2^t`, `t < windows`.
    Primesums,
    /// Fit `log(count)` against `log(x)` for a sign-change scan.
    Fit,
    /// Run the invariant suite and write `verify.json`.
    Verify,
}

#[derive(Args, Debug, Default)]
struct Options {
    /// Form id: delta, e16, e18, e20, e22, e26, n11, n14, n15.
    #[arg(long, global = true)]
    form: Option<String>,
    /// Table limit.
    #[arg(long, global = true)]
    limit: Option<String>,
    /// Power j in λ(n^j), 1 to 4.
    #[arg(long, global = true)]
    power: Option<String>,
    /// Left end of the first window.
    #[arg(long, global = true)]
    x0: Option<String>,
    /// Number of windows (or prime-sum points).
    #[arg(long, global = true)]
    windows: Option<String>,
    /// dyadic, power:<a> (h = x^a) or expsqrt:<A> (h = x/e^{A√log x}).
    #[arg(long, global = true)]
    window_mode: Option<String>,
    /// Sequence scanned: lambda (λ(n^j)) or cprime (c′(p), weight-2 newforms).
    #[arg(long, global = true)]
    series: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Cache directory; defaults to $SIGNLAB_CACHE_DIR, then <out>/cache.
    #[arg(long, global = true)]
    cache_dir: Option<String>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<String>,
    /// Also write an SVG chart (signchanges).
    #[arg(long, global = true)]
    svg: bool,
    /// Comma-separated verify suites: numtheory, qseries, eigenforms, gmf, signlab.
    #[arg(long, global = true)]
    suite: Option<String>,
    /// Flat key=value file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Options {
    fn into_raw(self) -> (RawSettings, Option<PathBuf>) {
        let raw = RawSettings {
            form: self.form,
            limit: self.limit,
            power: self.power,
            x0: self.x0,
            windows: self.windows,
            window_mode: self.window_mode,
            series: self.series,
            out: self.out,
            format: self.format,
            cache_dir: self.cache_dir,
            threads: self.threads,
            svg: self.svg.then(|| "true".into()),
            suite: self.suite,
        };
        (raw, self.config)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_)
        | Error::Domain(_)
        | Error::UnknownForm(_)
        | Error::UnsupportedForm(_)
        | Error::UnsupportedQuotient(_) => 2,
        Error::Consistency(_) => 1,
        Error::Capacity { .. }
        | Error::InsufficientData { .. }
        | Error::Cache { .. }
        | Error::Io(_) => 3,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("signlab: error: {e}");
    ExitCode::from(exit_code(e))
}

fn run(command: Command, cfg: &RunConfig) -> Result<u8, Error> {
    if command == Command::Verify {
        let report = verify::run(cfg);
        let path = cfg.out.join("verify.json");
        std::fs::create_dir_all(&cfg.out)?;
        let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::from)?;
        std::fs::write(&path, text + "\n")?;
        for c in report.suite.iter().filter(|c| !c.pass) {
            eprintln!("FAIL {}: {}", c.name, c.detail);
        }
        println!(
            "{} passed, {} failed; report in {}",
            report.pass_count,
            report.fail_count,
            path.display()
        );
        return Ok(if report.all_pass() { 0 } else { 1 });
    }
    let outcome = match command {
        Command::Coeffs => commands::cmd_coeffs(cfg)?,
        Command::Gmf => commands::cmd_gmf(cfg)?,
        Command::Signchanges => commands::cmd_signchanges(cfg)?,
        Command::Primesums => commands::cmd_primesums(cfg)?,
        Command::Fit => commands::cmd_fit(cfg)?,
        Command::Verify => unreachable!(),
    };
    for f in &outcome.files {
        println!("{}", f.display());
    }
    for msg in &outcome.failures {
        eprintln!("signlab: check failed: {msg}");
    }
    Ok(if outcome.failures.is_empty() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, config_path) = cli.options.into_raw();
    let file = match config_path.as_deref().map(read_config_file).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => return fail(&e),
    };
    let cfg = match RunConfig::from_env(flags.over(file)) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
    {
        return fail(&Error::Usage(format!("thread pool: {e}")));
    }
    match run(cli.command, &cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(&e),
    }
}
