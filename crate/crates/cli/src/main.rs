use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ris_anm::harness::{
    configure_threads, emit_results, reflect_pattern_grid, run_sweep, run_trial, selftest, write_csv, write_json,
    write_pattern_csv, Metric, OutputFormat, SimConfig, SweepSpec, SweepVariable, TrialResult,
};
use ris_anm::{AnmMode, Error};

const EXIT_CONFIG: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

/// Location-aware RIS channel estimation simulator.
#[derive(Parser, Debug)]
#[command(name = "ris-anm", version, about)]
struct Cli {
    /// JSON scenario configuration; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Worker threads for Monte Carlo trials.
    #[arg(long, global = true, env = "RIS_ANM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one seeded trial and print its result.
    Trial {
        #[arg(long, default_value = "2d")]
        mode: AnmMode,
    },
    /// Run the sweep described by the configuration.
    Sweep(SweepArgs),
    /// Emit the reflect pattern of an RIS codebook.
    Pattern(PatternArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Swept variable, overriding the configuration's sweep.
    #[arg(long, value_parser = parse_variable)]
    variable: Option<SweepVariable>,
    /// Comma-separated grid, overriding the configuration's sweep.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Trials per point.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated metrics (nmse, ebt_db, snr_db).
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<Metric>>,
}

#[derive(Args, Debug)]
struct PatternArgs {
    #[arg(long, default_value_t = 16)]
    m_r: usize,
    #[arg(long, default_value_t = 10)]
    beams: usize,
    /// Use the full DFT codebook instead of the widened-beam one.
    #[arg(long)]
    full: bool,
    /// Incidence angle at the RIS, degrees.
    #[arg(long, default_value_t = 38.66)]
    theta: f64,
    /// Reflection-angle grid step, degrees.
    #[arg(long, default_value_t = 0.5)]
    step: f64,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variable(s: &str) -> Result<SweepVariable, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        format!("unknown sweep variable '{s}' (tx_power_dbm, num_symbols, m_r, ris_ue_distance_m, aod_error_deg)")
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Csv(c) if c.is_io_error() => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<SimConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => SimConfig::from_json_file(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    configure_threads(cli.threads)?;
    let format = cli.format.unwrap_or(OutputFormat::Csv);
    match &cli.command {
        Command::Trial { mode } => {
            let mut cfg = load_config(&cli)?;
            cfg.modes = vec![*mode];
            cfg.validate()?;
            let r = run_trial(&cfg, *mode, cfg.seed)?;
            let mut out = open_out(cli.out.as_deref())?;
            match cli.format.unwrap_or(OutputFormat::Json) {
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut out, &r)?;
                    writeln!(out)?;
                }
                OutputFormat::Csv => write_trial_csv(&r, &mut out)?,
            }
            out.flush()?;
        }
        Command::Sweep(args) => {
            let cfg = load_config(&cli)?;
            let mut spec = match (&cfg.sweep, args.variable, &args.grid) {
                (_, Some(v), Some(g)) => SweepSpec::new(v, g.clone()),
                (Some(s), v, g) => {
                    let mut s = s.clone();
                    if let Some(v) = v {
                        s.variable = v;
                    }
                    if let Some(g) = g {
                        s.grid = g.clone();
                    }
                    s
                }
                (None, _, _) => {
                    return Err(Error::InvalidConfig(
                        "no sweep: add a \"sweep\" section to the config or pass --variable and --grid".into(),
                    ))
                }
            };
            if let Some(t) = args.trials {
                spec.trials = Some(t);
            }
            if let Some(m) = &args.metrics {
                spec.metrics = m.clone();
            }
            let table = run_sweep(&cfg, &spec, &cfg.modes)?;
            for s in &table.skipped {
                eprintln!("skipped {}={} for {}: {}", spec.variable, s.value, s.mode, s.reason);
            }
            match &cli.out {
                Some(p) => emit_results(&table, p, format)?,
                None => {
                    let out = std::io::stdout().lock();
                    match format {
                        OutputFormat::Csv => write_csv(&table.records, out)?,
                        OutputFormat::Json => write_json(&table.records, out)?,
                    }
                }
            }
        }
        Command::Pattern(p) => {
            let samples = reflect_pattern_grid(p.m_r, p.beams, !p.full, p.theta, p.step)?;
            let mut out = open_out(cli.out.as_deref())?;
            match format {
                OutputFormat::Csv => write_pattern_csv(&samples, &mut out)?,
                OutputFormat::Json => {
                    serde_json::to_writer_pretty(&mut out, &samples)?;
                    writeln!(out)?;
                }
            }
            out.flush()?;
        }
        Command::Selftest => {
            let checks = selftest();
            let mut out = open_out(cli.out.as_deref())?;
            for c in &checks {
                writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            out.flush()?;
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::from(EXIT_SELFTEST));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_trial_csv(r: &TrialResult, out: &mut dyn Write) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "mode", "nmse", "ebt_db", "snr_db", "l_ru", "los", "iterations", "converged"])?;
    let stats = r.stats.clone().unwrap_or_default();
    w.write_record([
        r.seed.to_string(),
        r.mode.to_string(),
        r.nmse.map(|x| format!("{x:?}")).unwrap_or_default(),
        format!("{:?}", r.ebt_db),
        format!("{:?}", r.snr_db),
        r.l_ru.to_string(),
        r.los.to_string(),
        stats.iterations.to_string(),
        stats.converged.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}
