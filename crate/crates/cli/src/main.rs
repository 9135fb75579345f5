use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fxsearcher::fx::StageSet;
use fxsearcher::score::{BackendServer, TestBackend};
use fxsearcher_cli::{cmd_apply, cmd_optimize, cmd_report, CliError, ConfigLayer, SearchOverrides, BUILTIN_BACKEND};

#[derive(Parser)]
#[command(name = "fxsearcher", version, about = "Search audio effect parameters that match a text prompt")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search effect parameters for an input file and prompt.
    Optimize(OptimizeArgs),
    /// Render an input file through a saved params.json.
    Apply {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Restrict the chain (comma-separated stage names), as in the run
        /// that produced the params.
        #[arg(long)]
        stages: Option<String>,
    },
    /// Summarize a trace and plot best-so-far score.
    Report {
        /// trace.csv or the run directory containing it.
        trace: PathBuf,
        /// Where to write the SVG plot (default: next to trace.csv).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Serve the builtin test backend over the embedding wire protocol.
    ServeTestBackend {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: String,
        #[arg(long, default_value_t = 48_000)]
        sample_rate: u32,
    },
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Target prompt describing the desired sound.
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long)]
    guide_prompt: Option<String>,
    /// Score with the target prompt only.
    #[arg(long)]
    no_guide: bool,
    #[arg(long, conflicts_with = "builtin_backend")]
    backend_url: Option<String>,
    /// Use the deterministic builtin test backend.
    #[arg(long)]
    builtin_backend: bool,
    /// Comma-separated subset of: equalizer, distortion, bitcrush,
    /// pitch_shift, delay, reverb.
    #[arg(long)]
    stages: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    init_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write real wall-clock times into trace.csv.
    #[arg(long)]
    record_timing: bool,
    /// JSON config file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suppress per-evaluation progress lines.
    #[arg(long, short)]
    quiet: bool,
}

impl OptimizeArgs {
    fn layer(&self) -> ConfigLayer {
        let backend = match (&self.backend_url, self.builtin_backend) {
            (Some(url), _) => Some(url.clone()),
            (None, true) => Some(BUILTIN_BACKEND.to_string()),
            (None, false) => None,
        };
        ConfigLayer {
            input_path: self.input.clone(),
            output_dir: self.out_dir.clone(),
            target_prompt: self.prompt.clone(),
            guide_prompt: self.guide_prompt.clone(),
            guide_enabled: self.no_guide.then_some(false),
            backend,
            enabled_stages: self
                .stages
                .as_ref()
                .map(|s| s.split(',').map(|t| t.trim().to_string()).collect()),
            search: SearchOverrides {
                max_iterations: self.max_iters,
                patience: self.patience,
                init_samples: self.init_samples,
                seed: self.seed,
                ..Default::default()
            },
            record_timing: self.record_timing.then_some(true),
            ..Default::default()
        }
    }
}

fn optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(p) => ConfigLayer::from_file(p)?,
        None => ConfigLayer::default(),
    };
    let cfg = file.overlay(args.layer()).resolve(rand::random)?;
    let quiet = args.quiet;
    let mut progress = |line: &str| {
        if !quiet {
            eprintln!("{line}");
        }
    };
    eprintln!("seed: {}", cfg.search.seed);
    let record = cmd_optimize(&cfg, &mut progress)?;
    println!("seed: {}", record.seed);
    println!("evaluations: {} (stop: {})", record.evaluations, record.stop_reason);
    println!(
        "best s_final: {} (s_target {}, s_guide {}) at iteration {}",
        record.final_scores.s_final, record.final_scores.s_target, record.final_scores.s_guide, record.best_iteration
    );
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    println!("outputs: {}", cfg.output_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize(args) => optimize(args),
        Command::Apply { input, params, output, stages } => {
            let stages = match stages {
                Some(s) => StageSet::parse_list(&s).map_err(|e| CliError::config("stages", e.to_string()))?,
                None => StageSet::all(),
            };
            cmd_apply(&input, &params, &output, stages)?;
            println!("wrote {}", output.display());
            Ok(())
        }
        Command::Report { trace, svg } => {
            let report = cmd_report(&trace, svg.as_deref())?;
            for line in report.lines() {
                println!("{line}");
            }
            Ok(())
        }
        Command::ServeTestBackend { addr, sample_rate } => {
            if sample_rate == 0 {
                return Err(CliError::config("serve", "sample rate must be positive"));
            }
            let server = BackendServer::start(TestBackend::new().with_sample_rate(sample_rate), &addr)
                .map_err(|e| CliError::config("serve", format!("cannot bind {addr}: {e}")))?;
            println!("serving builtin test backend on {}", server.url());
            server.join();
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
