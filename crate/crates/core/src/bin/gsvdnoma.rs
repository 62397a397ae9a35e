//! Command-line front end: Monte Carlo runs, figure presets, limiting-law
//! tables, and large-system rate sweeps.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gsvd_noma::asymptotic::asymptotic_rates;
use gsvd_noma::channel::SystemConfig;
use gsvd_noma::sim::{preset, run_experiment, write_results_csv, Scenario, Sweep, SweepParam};
use gsvd_noma::spectral::limiting_law;
use gsvd_noma::Error;

#[derive(Parser)]
#[command(name = "gsvdnoma", version, about = "GSVD-based NOMA downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Override the Monte Carlo trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores; env GSVDNOMA_WORKERS overrides).
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the leading `# generated ...` comment line.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep from a TOML config file.
    Run {
        /// Flat key = value config file.
        #[arg(long)]
        config: PathBuf,
        /// Swept parameter (p_dbm, d2, n, l2_sq).
        #[arg(long, default_value = "p_dbm")]
        sweep: String,
        /// Comma-separated sweep values; defaults to the config's own value.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Also compute the OMA-TDMA baseline.
        #[arg(long)]
        oma: bool,
        /// Also compute the large-system rates.
        #[arg(long)]
        asymptotic: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a named figure preset (fig1, fig2, fig3_sum, fig4, fig5, fig6, fig8).
    Preset {
        name: String,
        /// Override the transmit antenna count.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Tabulate the limiting spectrum (x, pdf, cdf) for an antenna shape.
    Law {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Number of grid points.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Large-system rates over a power sweep, no Monte Carlo.
    Asymptotic {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10.0)]
        d1: f64,
        #[arg(long, default_value_t = 100.0)]
        d2: f64,
        #[arg(long, default_value_t = 2.0)]
        tau: f64,
        #[arg(long, default_value_t = -35.0)]
        n0_dbm: f64,
        #[arg(long, default_value_t = 0.2)]
        l2_sq: f64,
        /// Comma-separated transmit powers in dBm.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40")]
        p_dbm: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::NormalizationDivergence { .. }
        | Error::InvalidPairing(_)
        | Error::EmptyInput(_) => 2,
        Error::DegenerateChannel { .. }
        | Error::Domain(_)
        | Error::DegenerateLaw
        | Error::QuadratureNonConvergence { .. } => 3,
        Error::Io(_) => 1,
    }
}

fn init_workers(cli_workers: Option<usize>) -> Result<(), Error> {
    let workers = std::env::var("GSVDNOMA_WORKERS")
        .ok()
        .map(|v| v.parse::<usize>().map_err(|_| Error::Config(format!("bad GSVDNOMA_WORKERS '{v}'"))))
        .transpose()?
        .or(cli_workers);
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn parse_sweep_param(name: &str) -> Result<SweepParam, Error> {
    match name {
        "p_dbm" => Ok(SweepParam::PDbm),
        "d2" => Ok(SweepParam::D2),
        "n" => Ok(SweepParam::N),
        "l2_sq" => Ok(SweepParam::L2Sq),
        other => Err(Error::Config(format!(
            "unknown sweep parameter '{other}' (expected p_dbm, d2, n, l2_sq)"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, sweep, values, oma, asymptotic, common } => {
            init_workers(common.workers)?;
            let mut cfg = SystemConfig::from_file(&config)?;
            apply_common(&mut cfg, &common);
            cfg.validate()?;
            let param = parse_sweep_param(&sweep)?;
            let values = if values.is_empty() {
                vec![match param {
                    SweepParam::PDbm => cfg.p_dbm,
                    SweepParam::D2 => cfg.d2,
                    SweepParam::N => cfg.n as f64,
                    SweepParam::L2Sq => cfg.l2_sq,
                }]
            } else {
                values
            };
            let spec = gsvd_noma::sim::ExperimentSpec {
                name: "run".into(),
                cfg,
                sweep: Sweep { param, values },
                baselines: gsvd_noma::sim::Baselines { oma_tdma: oma, asymptotic },
                scenario: Scenario::TwoUser,
            };
            let results = run_experiment(&spec)?;
            write_results_csv(&spec, &results, open_out(&common.out)?, !common.no_timestamp)
        }
        Command::Preset { name, n, common } => {
            init_workers(common.workers)?;
            let mut spec = preset(&name)?;
            if let Some(n) = n {
                spec.cfg.n = n;
                spec.cfg.validate()?;
            }
            apply_common(&mut spec.cfg, &common);
            let results = run_experiment(&spec)?;
            write_results_csv(&spec, &results, open_out(&common.out)?, !common.no_timestamp)
        }
        Command::Law { m, n, grid, out } => {
            let law = limiting_law(m, n)?;
            law.write_csv(grid.max(2), open_out(&out)?)
        }
        Command::Asymptotic { m, n, d1, d2, tau, n0_dbm, l2_sq, p_dbm, out } => {
            let mut w = open_out(&out)?;
            writeln!(w, "p_dbm,eta,regime,r1_norm,r2_norm")?;
            for p in p_dbm {
                let cfg = SystemConfig {
                    m,
                    n,
                    d1,
                    d2,
                    tau,
                    p_dbm: p,
                    n0_dbm,
                    l2_sq,
                    trials: 1,
                    seed: 0,
                };
                let r = asymptotic_rates(&cfg)?;
                writeln!(
                    w,
                    "{p},{:.6},{:?},{:.9e},{:.9e}",
                    r.eta, r.regime, r.r1_norm, r.r2_norm
                )?;
            }
            Ok(())
        }
    }
}

fn apply_common(cfg: &mut SystemConfig, common: &CommonOpts) {
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
}
