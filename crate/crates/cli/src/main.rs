use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use totient_forest::arboreal::{grow_forest, synthesize_case_equation, Caps, CaseEquation, ForestReport, TreeStatus};
use totient_forest::arith::{euler_phi, DivisorOrder};
use totient_forest::bounds::{derive_polynomial_bound, validate_bound_empirically, BoundProvider, Violation};
use totient_forest::error::Error;
use totient_forest::fiber::{totient_fiber_bruteforce, totient_fiber_ordered};
use totient_forest::scoreboard::{evaluate_trace, scoreboard_sequence, scoreboard_value};
use totient_forest::sequence::IncrementSequence;
use totient_forest::stats::{
    canopy_density, fruit_rolling_share, value_frequencies, write_canopy_csv, write_frequency_csv, write_rolling_csv,
};

const SCHEMA_VERSION: u32 = 1;

/// Traces checked against the pruning bound before a forest is grown.
const FOREST_BOUND_SAMPLE: u64 = 300;

const EXIT_DOMAIN: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "totient-forest",
    version,
    about = "Adversarial totient iterations and totient trees"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TOTIENT_FOREST_THREADS")]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Order {
    Asc,
    Desc,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Euler's totient of N.
    Phi { n: u64 },
    /// All n with phi(n) = M.
    Fiber {
        m: u64,
        #[arg(long, value_enum, default_value = "desc")]
        order: Order,
        /// Use the sieve scan over n <= 2 M^2 instead.
        #[arg(long)]
        oracle: bool,
    },
    /// The scoreboard value A(N), or its partial evaluations with --trace.
    Eval {
        #[arg(long, value_parser = parse_sequence)]
        sequence: IncrementSequence,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        trace: bool,
    },
    /// A(1), ..., A(n_max).
    Sequence {
        #[arg(long, value_parser = parse_sequence)]
        sequence: IncrementSequence,
        #[arg(long)]
        n_max: u64,
    },
    /// Grow the totient forest for a sequence.
    Forest {
        #[arg(long, value_parser = parse_sequence)]
        sequence: IncrementSequence,
        /// auto, naturals, squares, poly-derive, constant:N or none.
        #[arg(long, default_value = "auto")]
        bound: String,
        #[arg(long, default_value_t = totient_forest::arboreal::DEFAULT_HEIGHT_CAP, value_parser = clap::value_parser!(u64).range(1..))]
        height_cap: u64,
        #[arg(long, default_value_t = totient_forest::arboreal::DEFAULT_NODE_CAP, value_parser = clap::value_parser!(u64).range(1..))]
        node_cap: u64,
        /// Indices past the cap searched for survival witnesses.
        #[arg(long, default_value_t = totient_forest::arboreal::DEFAULT_WITNESS_WINDOW)]
        witness_window: u64,
        /// Emit the case equation; exits 3 when it cannot be closed.
        #[arg(long)]
        synthesize: bool,
        /// Emit per-height canopy shares.
        #[arg(long)]
        stats: bool,
        /// Also write each tree's levels as `height,value` rows to
        /// `tree-<root>.csv` in this directory.
        #[arg(long)]
        levels_dir: Option<PathBuf>,
    },
    /// Value frequencies over n <= n_max, or trailing-window shares with --window.
    Freq {
        #[arg(long, value_parser = parse_sequence)]
        sequence: IncrementSequence,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n_max: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        window: Option<u64>,
    },
    /// Check A(n, k) <= b_k for all n <= n_max; exits 1 on any violation.
    ValidateBound {
        #[arg(long, value_parser = parse_sequence)]
        sequence: IncrementSequence,
        #[arg(long)]
        bound: String,
        #[arg(long)]
        n_max: u64,
    },
}

fn parse_sequence(s: &str) -> Result<IncrementSequence, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failures after argument parsing.
enum Failure {
    Domain(String),
    Inconclusive,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(format!("write failed: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Domain(format!("serialization failed: {e}"))
    }
}

fn resolve_bound(spec: &str, seq: &IncrementSequence) -> Result<BoundProvider, Failure> {
    Ok(match spec {
        "auto" => BoundProvider::auto_for(seq),
        "naturals" => BoundProvider::naturals(),
        "squares" => BoundProvider::squares(),
        "poly-derive" => derive_polynomial_bound(seq)?,
        "none" => BoundProvider::unbounded(),
        other => match other.strip_prefix("constant:").map(str::parse::<u64>) {
            Some(Ok(v)) => BoundProvider::constant(v),
            _ => return Err(Failure::Domain(format!("unknown bound {other:?}"))),
        },
    })
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(out: &mut dyn Write, body: T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(
        &mut *out,
        &Envelope {
            schema_version: SCHEMA_VERSION,
            body,
        },
    )?;
    writeln!(out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(EXIT_DOMAIN);
        }
    }
    let result = match &cli.output {
        Some(path) => File::create(path)
            .map_err(|e| Failure::Domain(format!("cannot create {}: {e}", path.display())))
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                let r = run(&cli, &mut w);
                w.flush()?;
                r
            }),
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let r = run(&cli, &mut w);
            w.flush().map_err(Failure::from).and(r)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Inconclusive) => ExitCode::from(EXIT_INCONCLUSIVE),
    }
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let format = cli.format;
    match &cli.command {
        Command::Phi { n } => {
            let phi = euler_phi(*n)?;
            match format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Body {
                        n: u64,
                        phi: u64,
                    }
                    write_json(out, Body { n: *n, phi })?
                }
                Format::Csv => writeln!(out, "n,phi\n{n},{phi}")?,
                Format::Text => writeln!(out, "{phi}")?,
            }
        }
        Command::Fiber { m, order, oracle } => {
            let fiber = if *oracle {
                totient_fiber_bruteforce(*m)?
            } else {
                let order = match order {
                    Order::Asc => DivisorOrder::Ascending,
                    Order::Desc => DivisorOrder::Descending,
                };
                totient_fiber_ordered(*m, order)?
            };
            match format {
                Format::Json => write_json(out, &fiber)?,
                Format::Csv => {
                    writeln!(out, "m,n")?;
                    for n in &fiber.members {
                        writeln!(out, "{m},{n}")?;
                    }
                }
                Format::Text => {
                    let list: Vec<String> = fiber.members.iter().map(u64::to_string).collect();
                    writeln!(out, "{{{}}}", list.join(", "))?;
                }
            }
        }
        Command::Eval { sequence, n, trace } => {
            if *trace {
                let t = evaluate_trace(sequence, *n)?;
                if format == Format::Json {
                    write_json(out, &t)?;
                } else {
                    writeln!(out, "n,k,value")?;
                    for (k, v) in t.values.iter().enumerate() {
                        writeln!(out, "{n},{k},{v}")?;
                    }
                }
            } else {
                let value = scoreboard_value(sequence, *n)?;
                match format {
                    Format::Json => {
                        #[derive(Serialize)]
                        struct Body<'a> {
                            sequence: String,
                            n: &'a u64,
                            value: u64,
                        }
                        write_json(
                            out,
                            Body {
                                sequence: sequence.to_string(),
                                n,
                                value,
                            },
                        )?
                    }
                    Format::Csv => writeln!(out, "n,value\n{n},{value}")?,
                    Format::Text => writeln!(out, "{value}")?,
                }
            }
        }
        Command::Sequence { sequence, n_max } => {
            let values = scoreboard_sequence(sequence, *n_max)?;
            if format == Format::Json {
                #[derive(Serialize)]
                struct Body {
                    sequence: String,
                    values: Vec<u64>,
                }
                write_json(
                    out,
                    Body {
                        sequence: sequence.to_string(),
                        values,
                    },
                )?;
            } else {
                writeln!(out, "n,value")?;
                for (i, v) in values.iter().enumerate() {
                    writeln!(out, "{},{v}", i + 1)?;
                }
            }
        }
        Command::Forest {
            sequence,
            bound,
            height_cap,
            node_cap,
            witness_window,
            synthesize,
            stats,
            levels_dir,
        } => {
            let bound = resolve_bound(bound, sequence)?;
            let caps = Caps {
                height_cap: *height_cap,
                node_cap: *node_cap,
                witness_window: *witness_window,
            };
            // the pruning bound is checked against real traces before it is trusted
            let sample = (*height_cap)
                .min(FOREST_BOUND_SAMPLE)
                .min(sequence.len().unwrap_or(u64::MAX));
            if let Some(v) = validate_bound_empirically(sequence, &bound, sample)?.first() {
                return Err(Failure::Domain(format!(
                    "bound {bound} fails at n = {}, k = {}: {} > {}",
                    v.n, v.k, v.value, v.bound
                )));
            }
            let forest = grow_forest(sequence, &bound, &caps)?;
            if let Some(dir) = levels_dir {
                write_levels(dir, &forest)?;
            }
            let equation = synthesize
                .then(|| synthesize_case_equation(&forest, sequence))
                .transpose()?;
            emit_forest(out, format, &forest, equation.as_ref(), *stats)?;
            if matches!(equation, Some(CaseEquation::Inconclusive { .. })) {
                return Err(Failure::Inconclusive);
            }
        }
        Command::Freq {
            sequence,
            n_max,
            window,
        } => match window {
            Some(w) => {
                let rolling = fruit_rolling_share(sequence, *n_max, *w)?;
                if format == Format::Json {
                    write_json(out, &rolling)?;
                } else {
                    write_rolling_csv(out, &rolling)?;
                }
            }
            None => {
                let table = value_frequencies(sequence, 1..=*n_max)?;
                if format == Format::Json {
                    write_json(out, &table)?;
                } else {
                    write_frequency_csv(out, &table)?;
                }
            }
        },
        Command::ValidateBound { sequence, bound, n_max } => {
            let provider = resolve_bound(bound, sequence)?;
            if !provider.is_bounded() {
                return Err(Failure::Domain("no bound to validate".into()));
            }
            let violations = validate_bound_empirically(sequence, &provider, *n_max)?;
            if format == Format::Json {
                #[derive(Serialize)]
                struct Body<'a> {
                    bound: String,
                    /// The provider, with its verification evidence when derived.
                    provider: &'a BoundProvider,
                    n_max: u64,
                    violations: &'a [Violation],
                }
                write_json(
                    out,
                    Body {
                        bound: provider.to_string(),
                        provider: &provider,
                        n_max: *n_max,
                        violations: &violations,
                    },
                )?;
            } else {
                writeln!(out, "n,k,value,bound")?;
                for v in &violations {
                    writeln!(out, "{},{},{},{}", v.n, v.k, v.value, v.bound)?;
                }
            }
            if !violations.is_empty() {
                return Err(Failure::Domain(format!(
                    "{} violations of bound {provider}",
                    violations.len()
                )));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TreeDump<'a> {
    root: u64,
    status: &'a TreeStatus,
    fruit_heights: &'a [u64],
    level_sizes: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<u64>,
}

#[derive(Serialize)]
struct ForestDump<'a> {
    sequence: &'a str,
    bound: &'a str,
    caps: &'a Caps,
    trees: Vec<TreeDump<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    case_equation: Option<&'a CaseEquation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    canopy: Option<Vec<totient_forest::stats::CanopyLevel>>,
}

fn emit_forest(
    out: &mut dyn Write,
    format: Format,
    forest: &ForestReport,
    equation: Option<&CaseEquation>,
    stats: bool,
) -> Result<(), Failure> {
    let canopy = stats.then(|| canopy_density(forest));
    match format {
        Format::Json => {
            let trees = forest
                .trees
                .iter()
                .map(|t| TreeDump {
                    root: t.root,
                    status: &t.status,
                    fruit_heights: &t.fruit_heights,
                    level_sizes: t.level_sizes(),
                    witness: t.witness,
                })
                .collect();
            write_json(
                out,
                ForestDump {
                    sequence: &forest.sequence,
                    bound: &forest.bound,
                    caps: &forest.caps,
                    trees,
                    case_equation: equation,
                    canopy,
                },
            )?;
        }
        Format::Csv => {
            if let Some(canopy) = &canopy {
                write_canopy_csv(out, canopy)?;
            } else {
                writeln!(out, "root,status,fruit_count,nodes,height")?;
                for t in &forest.trees {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        t.root,
                        t.status,
                        t.fruit_heights.len(),
                        t.node_count(),
                        t.height()
                    )?;
                }
            }
        }
        Format::Text => {
            if let Some(eq) = equation {
                write!(out, "{eq}")?;
            } else {
                writeln!(out, "sequence {} bound {}", forest.sequence, forest.bound)?;
                for t in &forest.trees {
                    let fruit: Vec<String> = t.fruit_heights.iter().map(u64::to_string).collect();
                    writeln!(out, "{}\t{}\tfruit [{}]", t.root, t.status, fruit.join(","))?;
                }
            }
            if let Some(canopy) = &canopy {
                write_canopy_csv(out, canopy)?;
            }
        }
    }
    Ok(())
}

fn write_levels(dir: &Path, forest: &ForestReport) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Domain(format!("cannot create {}: {e}", dir.display())))?;
    for t in &forest.trees {
        let path = dir.join(format!("tree-{}.csv", t.root));
        let file =
            File::create(&path).map_err(|e| Failure::Domain(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "height,value")?;
        for (h, level) in t.levels.iter().enumerate() {
            for v in level {
                writeln!(w, "{h},{v}")?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
