use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vectorix::commands::{
    cmd_gen_channel, cmd_hist_weakest, cmd_rates, cmd_sweep_bdo, cmd_verify, OutputFormats, VerifyHooks,
};
use vectorix::config::RunConfig;
use vectorix::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "vectorix", version, about = "Ordered THP rate evaluation for multi-line DMT channels")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Channel file to evaluate.
    #[arg(long, global = true, conflicts_with = "synthetic")]
    channel: Option<PathBuf>,
    /// Use the synthetic cable (the default when no channel is given).
    #[arg(long, global = true)]
    synthetic: bool,
    #[arg(long, global = true)]
    lines: Option<usize>,
    #[arg(long, global = true, env = "VECTORIX_SEED")]
    seed: Option<u64>,
    /// Hz.
    #[arg(long, global = true)]
    band_start: Option<f64>,
    /// Hz.
    #[arg(long, global = true)]
    band_end: Option<f64>,
    /// Hz.
    #[arg(long, global = true)]
    tone_spacing: Option<f64>,
    /// Comma-separated scheme labels, e.g. `THP,THP-DO,ER-THP-LRVB`.
    #[arg(long, global = true, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// Extra ordered-THP rows, e.g. `DO-IVB@50e6`.
    #[arg(long, global = true, value_delimiter = ',')]
    orderings: Option<Vec<String>>,
    /// Comma-separated sharing bandwidths in Hz.
    #[arg(long, global = true, value_delimiter = ',')]
    bdo_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write JSON output only (both formats when neither flag is given).
    #[arg(long, global = true)]
    json: bool,
    /// Write CSV output only.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured channel to a file.
    GenChannel {
        /// Defaults to `<out>/channel.txt`.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Rate table for every scheme.
    Rates,
    /// Frequency-sharing sweep over the sharing bandwidth.
    SweepBdo,
    /// Run the invariant checks.
    Verify {
        #[arg(long)]
        symbols: Option<usize>,
        #[arg(long)]
        tone_stride: Option<usize>,
        #[arg(long, hide = true)]
        inject_f_perturbation: Option<f64>,
    },
    /// Per-line counts of being picked first by the weakest-first order.
    HistWeakest,
}

impl Opts {
    fn config(&self) -> vectorix::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.synthetic {
            c.channel = None;
        }
        if let Some(v) = &self.channel {
            c.channel = Some(v.clone());
        }
        if let Some(v) = self.lines {
            c.lines = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.band_start {
            c.band_start_hz = v;
        }
        if let Some(v) = self.band_end {
            c.band_end_hz = v;
        }
        if let Some(v) = self.tone_spacing {
            c.tone_spacing_hz = v;
        }
        if let Some(v) = &self.schemes {
            c.schemes = v.clone();
        }
        if let Some(v) = &self.orderings {
            c.orderings = v.clone();
        }
        if let Some(v) = &self.bdo_grid {
            c.bdo_grid = v.clone();
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        Ok(c)
    }

    fn formats(&self) -> OutputFormats {
        match (self.csv, self.json) {
            (false, false) => OutputFormats::default(),
            (csv, json) => OutputFormats { csv, json },
        }
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidScheme(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let mut config = cli.opts.config()?;
    let formats = cli.opts.formats();
    match cli.command {
        Command::GenChannel { file } => {
            let path = file.unwrap_or_else(|| config.out.join("channel.txt"));
            let set = cmd_gen_channel(&config, &path)?;
            println!("wrote {} ({} lines, {} tones)", path.display(), set.lines(), set.tone_count());
        }
        Command::Rates => {
            let table = cmd_rates(&config, formats)?;
            println!("{:<24} {:>10} {:>10}", "scheme", "mean Mbps", "min Mbps");
            for r in &table.rows {
                println!("{:<24} {:>10.1} {:>10.1}", r.scheme, r.mean_mbps, r.min_mbps);
            }
        }
        Command::SweepBdo => {
            let table = cmd_sweep_bdo(&config, formats)?;
            print!("{}", table.to_csv());
        }
        Command::Verify {
            symbols,
            tone_stride,
            inject_f_perturbation,
        } => {
            if let Some(v) = symbols {
                config.verify_symbols = v;
            }
            if let Some(v) = tone_stride {
                config.verify_tone_stride = v;
            }
            let hooks = VerifyHooks {
                perturb_feedforward: inject_f_perturbation,
            };
            let report = cmd_verify(&config, &hooks)?;
            print!("{}", report.to_text());
            if !report.passed() {
                for c in report.failures() {
                    eprintln!("invariant failed: {}", c.name);
                }
                return Ok(EXIT_INVARIANT);
            }
        }
        Command::HistWeakest => {
            let hist = cmd_hist_weakest(&config, formats)?;
            print!("{}", hist.to_csv());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
