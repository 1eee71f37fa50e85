use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use halfsearch::report::{read_sweep_csv, write_complexity_csv, write_sweep_csv};
use halfsearch::seed::{instance_seed, run_seed};
use halfsearch::statevector::verify_identities;
use halfsearch::stats::{complexity_table, sweep, DEFAULT_THRESHOLD};
use halfsearch::{
    generate_instance, run_instance, solve, Error, PartitionInstance, RunTrace, Scheme,
    SchemeConfig, SweepConfig, ThetaKind, DEFAULT_BITS,
};

const EXIT_INVALID: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "halfsearch",
    version,
    about = "Recursive half-database search for number partitioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    L2,
    Any,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::L2 => Scheme::L2,
            SchemeArg::Any => Scheme::Any,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ThetaArg {
    Ideal,
    Epsilon,
}

impl From<ThetaArg> for ThetaKind {
    fn from(t: ThetaArg) -> Self {
        match t {
            ThetaArg::Ideal => ThetaKind::Ideal,
            ThetaArg::Epsilon => ThetaKind::Epsilon,
        }
    }
}

#[derive(clap::Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value = "l2")]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "epsilon")]
    theta: ThetaArg,
    /// Threshold as a fraction of the current instance's sum.
    #[arg(long, default_value_t = 0.29)]
    epsilon_frac: f64,
}

impl SearchArgs {
    fn config(&self) -> SchemeConfig {
        SchemeConfig {
            epsilon_fraction: self.epsilon_frac,
            ..SchemeConfig::new(self.scheme.into(), self.theta.into())
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the closed-form amplitudes against a two-register statevector.
    Verify {
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 6)]
        bits: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One search run on a generated instance.
    Run {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: u32,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        search: SearchArgs,
        /// Write the per-iteration trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Repeated runs on a given set, keeping the best split.
    Solve {
        /// Comma-separated non-negative integers.
        #[arg(long)]
        set: String,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_runs: usize,
    },
    /// Exact per-size reduction probabilities averaged over generated instances.
    Sweep {
        #[arg(long)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        instances: usize,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, value_enum)]
        theta: ThetaArg,
        #[arg(long, default_value_t = 0.29)]
        epsilon_frac: f64,
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expected-call complexity table from a sweep CSV.
    Complexity {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 2.0)]
        weight_exponent: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        let err = cause.downcast_ref::<Error>().or_else(|| {
            cause
                .downcast_ref::<halfsearch::RunAborted>()
                .map(|a| &a.error)
        });
        match err {
            Some(err) if err.is_degenerate_oracle() => return EXIT_DEGENERATE,
            Some(Error::InvalidArgument(_)) => return EXIT_INVALID,
            _ => {}
        }
    }
    1
}

fn dispatch(cmd: Command) -> anyhow::Result<String> {
    match cmd {
        Command::Verify { max_n, bits, seed } => {
            let report = verify_identities(max_n, bits, seed)?;
            for c in &report.checks {
                eprintln!(
                    "{:<6} {} ({} cases, worst error {:.3e})",
                    if c.passed { "ok" } else { "FAILED" },
                    c.name,
                    c.cases,
                    c.worst_error
                );
            }
            if !report.all_passed() {
                bail!("statevector identities failed");
            }
            Ok(format!(
                "all identities hold ({} checks)",
                report.checks.len()
            ))
        }
        Command::Run {
            n,
            bits,
            seed,
            search,
            trace,
        } => {
            let instance = generate_instance(n, bits, instance_seed(seed, n, 0))?;
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed(seed, n, 0));
            let result = run_instance(&instance, &search.config(), &mut rng)?;
            if let Some(path) = trace {
                write_atomic(&path, |w| write_trace(&result, w))?;
            }
            Ok(format!(
                "n={n} cost={} calls={} weighted_calls={} reductions={}",
                result.solution_cost,
                result.total_calls,
                halfsearch::report::fmt_real(result.weighted_calls),
                result.steps.len()
            ))
        }
        Command::Solve {
            set,
            search,
            seed,
            max_runs,
        } => {
            let values = parse_set(&set)?;
            let instance = PartitionInstance::from_values(values)?;
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed(seed, instance.len(), 0));
            let out = solve(&instance, &search.config(), &mut rng, max_runs)?;
            let (ins, outs): (Vec<u64>, Vec<u64>) = {
                let v = instance.values();
                let mut ins = vec![v[0]];
                let mut outs = Vec::new();
                for (i, &x) in v[1..].iter().enumerate() {
                    if out.best_assignment.is_out(i) {
                        outs.push(x);
                    } else {
                        ins.push(x);
                    }
                }
                (ins, outs)
            };
            Ok(format!(
                "cost={} s={ins:?} rest={outs:?} runs={} calls={} aborted={}",
                out.best_cost, out.runs_used, out.total_calls, out.aborted_runs
            ))
        }
        Command::Sweep {
            n_min,
            n_max,
            instances,
            scheme,
            theta,
            epsilon_frac,
            bits,
            seed,
            out,
        } => {
            let cfg = SweepConfig {
                n_min,
                n_max,
                instances,
                bits,
                base_seed: seed,
                search: SchemeConfig {
                    epsilon_fraction: epsilon_frac,
                    ..SchemeConfig::new(scheme.into(), theta.into())
                },
            };
            let stats = sweep(&cfg)?;
            write_atomic(&out, |w| Ok(write_sweep_csv(&stats, w)?))?;
            let degenerate: usize = stats.rows.iter().map(|r| r.degenerate_count).sum();
            Ok(format!(
                "wrote {} rows (n={n_min}..{n_max}, {instances} instances each, {degenerate} degenerate) to {}",
                stats.rows.len(),
                out.display()
            ))
        }
        Command::Complexity {
            sweep,
            threshold,
            weight_exponent,
            out,
        } => {
            let file =
                File::open(&sweep).with_context(|| format!("opening {}", sweep.display()))?;
            let stats = read_sweep_csv(BufReader::new(file))
                .with_context(|| format!("reading {}", sweep.display()))?;
            let rows = complexity_table(&stats, threshold, weight_exponent)?;
            write_atomic(&out, |w| Ok(write_complexity_csv(&rows, w)?))?;
            Ok(format!(
                "wrote {} rows (n={}..{}) to {}",
                rows.len(),
                rows.first().map_or(0, |r| r.n),
                rows.last().map_or(0, |r| r.n),
                out.display()
            ))
        }
    }
}

fn parse_set(s: &str) -> anyhow::Result<Vec<u64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<u64>()
                .map_err(|_| Error::InvalidArgument(format!("{t:?} is not a non-negative integer")))
        })
        .collect::<Result<_, _>>()
        .map_err(Into::into)
}

fn write_trace(trace: &RunTrace, w: &mut dyn Write) -> anyhow::Result<()> {
    for step in &trace.steps {
        let line = json!({
            "size_before": step.size_before,
            "calls": step.calls,
            "m_bits": halfsearch::Assignment(step.measured).lsb_first(step.size_before - 1),
            "flagged_positions": step.flagged_positions,
            "reduced_values": step.reduced_values,
        });
        writeln!(w, "{line}")?;
    }
    let last = json!({
        "final_assignment_bits": trace.final_assignment.lsb_first(trace.original.free_count()),
        "solution_cost": trace.solution_cost,
        "total_calls": trace.total_calls,
        "weighted_calls": trace.weighted_calls,
    });
    writeln!(w, "{last}")?;
    Ok(())
}

/// Writes to a temporary file next to `path`, then renames it into place.
fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
