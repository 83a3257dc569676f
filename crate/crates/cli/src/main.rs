use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use einbein::LoopParameter;

mod commands;
mod config;

use commands::Output;
use config::{parse_point, Failure, LoopSpec, PadeSpec, RunConfig, TransectSpec};

const EXIT_CODES: &str = "Exit codes:\n  0  success\n  2  configuration error (unreadable or invalid config, bad flags)\n  3  numerical failure";

/// Helmholtz Green's functions from thimbles of the einbein integral.
#[derive(Parser)]
#[command(name = "einbein", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Wavenumbers, comma separated; overrides the config.
    #[arg(long, value_delimiter = ',')]
    k0: Vec<f64>,
    /// Grid resolution NX,NZ; overrides the config.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Field on the grid: CSV, JSON and an |φ| heat map with the caustic overlaid.
    Field(Common),
    /// Thimbles and decomposition at one point.
    Thimbles {
        #[command(flatten)]
        common: Common,
        /// Observation point X,Z.
        #[arg(long)]
        point: Option<String>,
    },
    /// Zone classification and caustic crossings on the grid.
    Caustics(Common),
    /// Laurent coefficients of the action, exact where the data are rational.
    Laurent {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        /// Expand about the n-th channel ghost pole instead of Λ = 0.
        #[arg(long, allow_hyphen_values = true)]
        pole: Option<i64>,
    },
    /// Rational approximant and ghost-pole report.
    Pade {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        /// Numerator degree N.
        #[arg(long)]
        n: Option<usize>,
        /// Denominator degree M.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Integer monodromy matrix of a parameter loop.
    Monodromy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        point: Option<String>,
        /// refractive-index, gradient, coordinate or ghost-residue.
        #[arg(long = "loop")]
        lp: Option<String>,
        /// Counter-clockwise turns.
        #[arg(long, allow_hyphen_values = true)]
        winding: Option<i32>,
    },
    /// Arrival times along a transect.
    Arrivals {
        #[command(flatten)]
        common: Common,
        /// Reference speed.
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        /// Number of transect points.
        #[arg(long)]
        n: Option<usize>,
    },
}

fn load(common: &Common) -> Result<(RunConfig, Output), Failure> {
    let mut cfg = RunConfig::load(&common.config)?;
    if !common.k0.is_empty() {
        cfg.k0 = common.k0.clone();
        cfg.check_k0()?;
    }
    if let Some(g) = &common.grid {
        cfg.apply_grid(g)?;
    }
    let out = Output::new(&common.out)?;
    Ok((cfg, out))
}

fn set_point(cfg: &mut RunConfig, point: &Option<String>) -> Result<(), Failure> {
    if let Some(p) = point {
        cfg.point = Some(parse_point(p)?);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(String, Output), Failure> {
    match cli.command {
        Command::Field(common) => {
            let (cfg, mut out) = load(&common)?;
            Ok((commands::field(&cfg, &mut out)?, out))
        }
        Command::Thimbles { common, point } => {
            let (mut cfg, mut out) = load(&common)?;
            set_point(&mut cfg, &point)?;
            Ok((commands::thimbles(&cfg, &mut out)?, out))
        }
        Command::Caustics(common) => {
            let (cfg, mut out) = load(&common)?;
            Ok((commands::caustics(&cfg, &mut out)?, out))
        }
        Command::Laurent { common, point, order, pole } => {
            let (mut cfg, mut out) = load(&common)?;
            set_point(&mut cfg, &point)?;
            cfg.order = order.or(cfg.order);
            Ok((commands::laurent(&cfg, pole, &mut out)?, out))
        }
        Command::Pade { common, point, order, n, m } => {
            let (mut cfg, mut out) = load(&common)?;
            set_point(&mut cfg, &point)?;
            cfg.order = order.or(cfg.order);
            match (n, m, &mut cfg.pade) {
                (Some(n), Some(m), _) => cfg.pade = Some(PadeSpec { n, m }),
                (n, m, Some(p)) => {
                    p.n = n.unwrap_or(p.n);
                    p.m = m.unwrap_or(p.m);
                }
                (None, None, None) => {}
                _ => return Err(config::config_err("give both --n and --m")),
            }
            Ok((commands::pade(&cfg, &mut out)?, out))
        }
        Command::Monodromy { common, point, lp, winding } => {
            let (mut cfg, mut out) = load(&common)?;
            set_point(&mut cfg, &point)?;
            if let Some(name) = lp {
                let parameter: LoopParameter = serde_json::from_value(serde_json::Value::String(name.clone()))
                    .map_err(|_| config::config_err(format!("unknown loop {name:?}")))?;
                cfg.monodromy = Some(LoopSpec { parameter, winding: 1 });
            }
            if let Some(w) = winding {
                let spec = cfg.monodromy.as_mut().ok_or_else(|| config::config_err("--winding needs a loop"))?;
                spec.winding = w;
            }
            Ok((commands::monodromy(&cfg, &mut out)?, out))
        }
        Command::Arrivals { common, c0, from, to, n } => {
            let (mut cfg, mut out) = load(&common)?;
            if let (Some(f), Some(t)) = (&from, &to) {
                let c = c0.or(cfg.transect.as_ref().map(|t| t.c0)).unwrap_or(1.0);
                let count = n.or(cfg.transect.as_ref().map(|t| t.n)).unwrap_or(21);
                cfg.transect = Some(TransectSpec { from: parse_point(f)?, to: parse_point(t)?, n: count, c0: c });
            } else if from.is_some() || to.is_some() {
                return Err(config::config_err("give both --from and --to"));
            }
            if let Some(t) = cfg.transect.as_mut() {
                t.c0 = c0.unwrap_or(t.c0);
                t.n = n.unwrap_or(t.n);
            }
            Ok((commands::arrivals(&cfg, &mut out)?, out))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok((summary, out)) => {
            print!("{summary}");
            for p in &out.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
