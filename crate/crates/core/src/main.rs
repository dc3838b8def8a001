use clap::Parser;
use mimo_glrt::detector::RadiusMode;
use mimo_glrt::model::ConstellationKind;
use mimo_glrt::sim::{self, DetectorKind, PartialConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Monte Carlo SER and complexity sweeps for GLRT-optimal detection in
/// massive MIMO uplink blocks. Writes one CSV row per SNR point.
#[derive(Debug, Parser)]
#[command(name = "mimo-glrt", version)]
struct Cli {
    /// Number of users M (also the number of pilot slots)
    #[arg(long)]
    users: Option<usize>,
    /// Number of receive antennas N
    #[arg(long)]
    antennas: Option<usize>,
    /// Coherence time T in symbol slots
    #[arg(long)]
    coherence: Option<usize>,
    /// bpsk, qpsk or qam16
    #[arg(long, value_parser = parse_with::<ConstellationKind>)]
    constellation: Option<ConstellationKind>,
    /// Comma-separated SNR points in dB
    #[arg(long)]
    snr: Option<String>,
    /// Blocks per SNR point
    #[arg(long)]
    trials: Option<usize>,
    /// glrt, exhaustive, mmse or mmse-iter
    #[arg(long, value_parser = parse_with::<DetectorKind>)]
    detector: Option<DetectorKind>,
    /// paper (r^2 = c N, doubled on failure) or warmstart (iterative MMSE metric)
    #[arg(long, value_parser = parse_with::<RadiusMode>)]
    radius_mode: Option<RadiusMode>,
    /// Constant c of the paper radius policy [default: sigma^2 T]
    #[arg(long)]
    radius_c: Option<f64>,
    /// Iterations of the iterative MMSE receiver
    #[arg(long)]
    mmse_iters: Option<usize>,
    /// Master seed for the per-trial generators
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value configuration file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write 0 in the wall-time column so output is reproducible byte for byte
    #[arg(long)]
    no_timing: bool,
}

fn parse_with<T: std::str::FromStr<Err = mimo_glrt::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: mimo_glrt::Error| e.to_string())
}

impl Cli {
    fn overrides(&self) -> mimo_glrt::Result<PartialConfig> {
        Ok(PartialConfig {
            users: self.users,
            antennas: self.antennas,
            coherence: self.coherence,
            constellation: self.constellation,
            snr: self.snr.as_deref().map(sim::parse_snr_list).transpose()?,
            trials: self.trials,
            detector: self.detector,
            radius_mode: self.radius_mode,
            radius_c: self.radius_c,
            mmse_iters: self.mmse_iters,
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            no_timing: self.no_timing.then_some(true),
        })
    }
}

fn run(cli: &Cli) -> mimo_glrt::Result<()> {
    let file = match &cli.config {
        Some(path) => sim::read_config_file(path)?,
        None => PartialConfig::default(),
    };
    let config = cli.overrides()?.or(file).resolve()?;
    eprintln!(
        "N={} M={} T={} {} detector={} trials={} workers={}",
        config.n,
        config.m,
        config.t,
        config.constellation,
        config.detector,
        config.trials,
        config.workers
    );

    let mut records = Vec::with_capacity(config.snr_db.len());
    for (i, &snr) in config.snr_db.iter().enumerate() {
        let rec = sim::run_point(&config, i)?;
        eprintln!(
            "snr {snr} dB: ser {} ({}/{}), visited {}, {} ms/block",
            sim::format_g(rec.ser),
            rec.symbol_errors,
            rec.symbols_total,
            sim::format_g(rec.avg_visited_nodes),
            sim::format_g(rec.avg_wall_ms)
        );
        records.push(rec);
    }

    match &config.out {
        Some(path) => sim::write_csv(&records, path),
        None => {
            print!("{}", sim::render_csv(&records));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
