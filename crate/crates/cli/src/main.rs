//! Command-line front door: single runs, grid campaigns, plot-data
//! extraction, and configuration validation.
//!
//! Exit status is nonzero when a run or any campaign tuple fails, and, under
//! `--strict`, when any requested outage percentile had too few samples to
//! be trusted.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tddsim_core::runner::{emit_plotdata, run_campaign, Campaign, PlotKind};
use tddsim_core::sim::{self, Scheme, SimConfig};

#[derive(Parser)]
#[command(
    name = "tddsim",
    version,
    about = "System-level dynamic-TDD simulator with cross-link interference suppression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its KPI store as JSON.
    Run(RunArgs),
    /// Run a (load, scheme, seed) grid and aggregate the results.
    Campaign(CampaignArgs),
    /// Extract two-column distribution tables from stored KPI files.
    Plotdata(PlotdataArgs),
    /// Parse and validate a configuration file.
    Validate(ValidateArgs),
}

/// Options shared by everything that builds a simulation config.
#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (hierarchical key-value text); defaults apply when
    /// omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the evaluated scheme(s).
    #[arg(long, value_name = "SCHEME")]
    scheme: Vec<Scheme>,
    /// Override the base seed(s).
    #[arg(long)]
    seed: Vec<u64>,
    /// Override the offered load(s) per cell, megabits per second.
    #[arg(long, value_name = "MBPS")]
    load_mbps: Vec<f64>,
    /// Override the outage percentile (e.g. 1e-2 or 1e-5). Small values need
    /// very long runs; insufficiency is flagged, and fatal under --strict.
    #[arg(long)]
    outage_percentile: Option<f64>,
    /// Fail (exit nonzero) when any outage percentile lacked samples.
    #[arg(long)]
    strict: bool,
}

impl ConfigArgs {
    fn base(&self) -> Result<SimConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::load(path).map_err(|e| e.to_string())?,
            None => SimConfig::default(),
        };
        if let Some(p) = self.outage_percentile {
            cfg.run.outage_percentile = p;
        }
        Ok(cfg)
    }

    /// Single-run view: at most one value per axis.
    fn single(&self) -> Result<SimConfig, String> {
        for (n, axis) in [
            (self.scheme.len(), "--scheme"),
            (self.seed.len(), "--seed"),
            (self.load_mbps.len(), "--load-mbps"),
        ] {
            if n > 1 {
                return Err(format!("{axis} given {n} times; run takes one (use campaign)"));
            }
        }
        let mut cfg = self.base()?;
        if let Some(&s) = self.scheme.first() {
            cfg.run.scheme = s;
        }
        if let Some(&s) = self.seed.first() {
            cfg.run.seed = s;
        }
        if let Some(&l) = self.load_mbps.first() {
            cfg.traffic.offered_load_mbps = l;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output KPI file.
    #[arg(long, default_value = "kpi.json")]
    out: PathBuf,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for per-tuple files, rows.csv and summary.txt.
    #[arg(long, default_value = "campaign")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 4)]
    workers: usize,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Which stored distribution to tabulate.
    #[arg(long)]
    kind: PlotKind,
    /// KPI files produced by run or campaign.
    #[arg(required = true)]
    kpi_files: Vec<PathBuf>,
    /// Output directory for the per-scheme tables.
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Configuration file to check.
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Campaign(args) => cmd_campaign(args),
        Command::Plotdata(args) => cmd_plotdata(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, String> {
    let cfg = args.config.single()?;
    let kpi = sim::run(&cfg).map_err(|e| e.to_string())?;
    kpi.save(&args.out)
        .map_err(|e| format!("writing {}: {e}", args.out.display()))?;

    let fmt_outage = |v: &tddsim_core::sim::OutageView| match (v.value_ms, v.insufficient) {
        (Some(ms), false) => format!("{ms:.3} ms"),
        (Some(ms), true) => format!("{ms:.3} ms (insufficient samples)"),
        (None, _) => "in failure mass".to_string(),
    };
    println!(
        "scheme {}  seed {}  load {} Mbps  ({} slots, {} cells)",
        kpi.scheme,
        kpi.seed,
        cfg.traffic.offered_load_mbps,
        kpi.slots,
        kpi.cells
    );
    println!(
        "  outage latency p={}: UL {}  DL {}",
        cfg.run.outage_percentile,
        fmt_outage(&kpi.summary.ul_outage),
        fmt_outage(&kpi.summary.dl_outage)
    );
    if let Some(mu) = kpi.summary.median_mu {
        println!("  median buffered-traffic ratio (downlink share): {mu:.3}");
    }
    println!("  wrote {}", args.out.display());

    let insufficient =
        kpi.summary.ul_outage.insufficient || kpi.summary.dl_outage.insufficient;
    if args.config.strict && insufficient {
        eprintln!("strict: outage percentile under-sampled");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_campaign(args: CampaignArgs) -> Result<ExitCode, String> {
    let base = args.config.base()?;
    let campaign = Campaign {
        loads_mbps: if args.config.load_mbps.is_empty() {
            vec![base.traffic.offered_load_mbps]
        } else {
            args.config.load_mbps.clone()
        },
        schemes: if args.config.scheme.is_empty() {
            vec![Scheme::CfTdd, Scheme::NcTdd, Scheme::CrfcTdd, Scheme::Csa]
        } else {
            args.config.scheme.clone()
        },
        seeds: if args.config.seed.is_empty() {
            vec![base.run.seed]
        } else {
            args.config.seed.clone()
        },
        base,
        out_dir: args.out,
        workers: args.workers,
    };
    let report = run_campaign(&campaign).map_err(|e| e.to_string())?;

    print!("{}", report.summary_text);
    println!(
        "\n{} tuple(s) done, {} failed; outputs in {}",
        report.files.len(),
        report.failures.len(),
        campaign.out_dir.display()
    );
    for f in &report.failures {
        eprintln!(
            "failed: scheme {} load {} seed {}: {}",
            f.scheme, f.load_mbps, f.seed, f.error
        );
    }
    if report.insufficient_any {
        eprintln!(
            "warning: some outage values are under-sampled at p = {}",
            campaign.base.run.outage_percentile
        );
    }

    let failed = !report.failures.is_empty()
        || (args.config.strict && report.insufficient_any);
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_plotdata(args: PlotdataArgs) -> Result<ExitCode, String> {
    let written =
        emit_plotdata(&args.kpi_files, args.kind, &args.out).map_err(|e| e.to_string())?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, String> {
    let cfg = SimConfig::load(&args.config).map_err(|e| e.to_string())?;
    println!(
        "ok: {} cells, scheme {}, {} s at {} Mbps/cell (config hash {})",
        cfg.layout.cells,
        cfg.run.scheme,
        cfg.run.duration_s,
        cfg.traffic.offered_load_mbps,
        cfg.config_hash()
    );
    Ok(ExitCode::SUCCESS)
}
