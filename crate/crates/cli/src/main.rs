use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use attribution_cli::{
    render_table, run_analysis, verify, AssumeArg, CliError, Config, EventTemplate, Mode, Route,
};
use clap::Parser;
use ordinal_attribution::Error;

/// Probability of necessity / causation for ordinal outcomes.
#[derive(Debug, Parser)]
#[command(name = "ordattr", version)]
struct Args {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experimental table (CSV `z,y,count` or JSON).
    #[arg(long)]
    exp: Option<PathBuf>,
    /// Observational table (CSV or JSON).
    #[arg(long)]
    obs: Option<PathBuf>,
    /// Stratified observational tables (JSON).
    #[arg(long)]
    strata: Option<PathBuf>,
    /// pn | pc
    #[arg(long)]
    mode: Option<Mode>,
    /// experimental | unconfounded
    #[arg(long)]
    route: Option<Route>,
    /// noteq:y | eq:<l> | lt:y | custom:<bits> (repeatable; numeric levels also accepted for noteq/lt)
    #[arg(long = "event")]
    events: Vec<EventTemplate>,
    /// Evidence level y (repeatable); defaults to every level above 0.
    #[arg(long)]
    evidence: Vec<usize>,
    /// marginal | mono | incr | all (repeatable)
    #[arg(long)]
    assume: Vec<AssumeArg>,
    /// Use the standard event families: Y0!=y, Y0=l for every l, Y0<y.
    #[arg(long)]
    all_canonical: bool,
    /// Check every interval against sampled joints and extremal witnesses.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print a plain-text table instead of JSON on stdout.
    #[arg(long)]
    table: bool,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-cell CSVs of sampled values (with --verify).
    #[arg(long)]
    samples_csv: Option<PathBuf>,
    #[arg(long, hide = true)]
    widen: Option<f64>,
}

impl Args {
    fn into_config(self) -> Result<(Config, Option<PathBuf>), CliError> {
        let mut c = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::default(),
        };
        c.exp = self.exp.or(c.exp);
        c.obs = self.obs.or(c.obs);
        c.strata = self.strata.or(c.strata);
        c.mode = self.mode.unwrap_or(c.mode);
        c.route = self.route.unwrap_or(c.route);
        if !self.events.is_empty() {
            c.events = self.events;
        }
        if !self.evidence.is_empty() {
            c.evidence = self.evidence;
        }
        if !self.assume.is_empty() {
            c.assume = self.assume;
        }
        c.all_canonical |= self.all_canonical;
        c.verify |= self.verify;
        c.samples = self.samples.unwrap_or(c.samples);
        c.seed = self.seed.unwrap_or(c.seed);
        c.table |= self.table;
        c.out = self.out.or(c.out);
        c.widen = self.widen.unwrap_or(c.widen);
        c.validate()?;
        Ok((c, self.samples_csv))
    }
}

fn write_json<T: serde::Serialize>(value: &T, config: &Config) -> Result<(), CliError> {
    let json =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    match &config.out {
        Some(path) => fs::write(path, json + "\n").map_err(|e| {
            CliError::Data(Error::Io {
                path: path.clone(),
                message: e.to_string(),
            })
        }),
        None if !config.table => {
            println!("{json}");
            Ok(())
        }
        None => Ok(()),
    }
}

fn run(args: Args) -> Result<(), CliError> {
    let (config, samples_csv) = args.into_config()?;
    if config.verify {
        let out = verify(&config)?;
        if let Some(dir) = samples_csv {
            out.write_samples(&dir)?;
        }
        if config.table {
            print!("{}", render_table(&out.analysis));
            let failed: Vec<_> = out.cells.iter().filter(|c| !c.passed).collect();
            println!(
                "verification: {} cell(s), {} failed (n={}, seed={})",
                out.cells.len(),
                failed.len(),
                out.samples,
                out.seed
            );
        }
        write_json(&out, &config)?;
        let failed = out.cells.iter().filter(|c| !c.passed).count();
        if failed > 0 {
            return Err(CliError::VerificationFailed(failed));
        }
    } else {
        let report = run_analysis(&config)?;
        if config.table {
            print!("{}", render_table(&report));
        }
        write_json(&report, &config)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ordattr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
