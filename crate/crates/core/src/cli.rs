//! Command-line front end. Exit codes: 0 success, 1 failed check or bad file,
//! 2 usage error.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bp::{BranchingProgram, Obliviousness};
use crate::experiment::{records_csv, ExperimentRecord};
use crate::hard::{build_pairing, sample_instance, toy_schedule, ModeParams};
use crate::info::elim::{delta_for, eliminate_first_message, EliminationOptions};
use crate::info::protocol::{build_f_power_k, indexed_protocol, FTable, PairDistribution};
use crate::median::{build_median_nbp, median_nbp_node_count, median_oracle};
use crate::partition::ratio_sweep;
use crate::reduction::{
    embed_instance, find_assignment, oblivious_median_program, protocol_from_bp, random_query_sequence, segment_split,
};
use crate::select::{bench_csv, oracle_select, pass_bench, run_select, synthetic_input, Algo, BenchConfig, StreamReader};
use crate::verify::{distinct_inputs, random_distinct_input, run_suite, Scale, SUITES};

#[derive(Parser, Debug)]
#[command(name = "obmedian", version, about = "Oblivious median constructions and checks")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FunctionArg {
    Xor,
    And,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Multipass,
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Ratio,
    Select,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a hard instance from a toy or scaled pairing tree.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, required_unless_present = "m")]
        gamma: Option<usize>,
        #[arg(long, required_unless_present = "m")]
        k: Option<usize>,
        #[arg(long, default_value_t = 1)]
        levels: usize,
        /// Scaled mode: k = floor(m log^2 n0).
        #[arg(long, requires = "n0", conflicts_with_all = ["gamma", "k"])]
        m: Option<f64>,
        #[arg(long)]
        n0: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the nondeterministic median-bit program.
    Nbp {
        #[arg(long)]
        n: usize,
        /// Compare against the sort oracle: exhaustive for n <= 4, sampled above.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        count_only: bool,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a program file on one input.
    Eval {
        #[arg(long)]
        bp: PathBuf,
        /// Comma-separated values in 1..=domain.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        input: Vec<u32>,
    },
    /// Run the two-party simulation of an oblivious program.
    Reduce {
        #[arg(long, conflicts_with = "n")]
        bp: Option<PathBuf>,
        #[arg(long, required_unless_present = "bp")]
        n: Option<usize>,
        #[arg(long)]
        k: usize,
        /// Embedded instance size; defaults to ceil(n / C(4k^2, 2k)) rounded to even.
        #[arg(long)]
        small_n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the transcript lines here instead of inside the JSON.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Eliminate the first message of the indexed toy protocol.
    Roundelim {
        #[arg(long, value_enum, default_value_t = FunctionArg::Xor)]
        f: FunctionArg,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        m1: u32,
        /// Exact enumeration (the only supported mode).
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 256)]
        candidates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Small-space selection on a stream.
    Select {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        s: usize,
        /// 1-based rank; defaults to the lower median.
        #[arg(long)]
        rank: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `synthetic` or a file of little-endian u64 values.
        #[arg(long, default_value = "synthetic")]
        input: String,
        /// Also compare with a full sort.
        #[arg(long)]
        check: bool,
    },
    /// Parameter sweeps as CSV or JSON.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        #[arg(long, value_delimiter = ',', default_values_t = [64u64, 128, 256, 512, 1024, 2048, 4096])]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 256, 4096])]
        s: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ScaleArg::Full)]
        scale: ScaleArg,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Check(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

fn usage(msg: impl fmt::Display) -> anyhow::Error {
    Failure::Usage(msg.to_string()).into()
}

fn failed(msg: impl fmt::Display) -> anyhow::Error {
    Failure::Check(msg.to_string()).into()
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Failure>() {
                Some(Failure::Usage(_)) => 2,
                _ => 1,
            }
        }
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn std::io::Write) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn dispatch(command: Command, stdout: &mut dyn std::io::Write) -> anyhow::Result<()> {
    match command {
        Command::Gen { n, gamma, k, levels, m, n0, seed, out } => {
            let params = match (m, n0) {
                (Some(m), Some(n0)) => ModeParams::Scaled { m, n0 },
                _ => {
                    let (gamma, k) = (gamma.expect("clap"), k.expect("clap"));
                    ModeParams::Toy { schedule: toy_schedule(n, gamma, k, levels).map_err(usage)? }
                }
            };
            let tree = build_pairing(&params, n).map_err(usage)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = sample_instance(&tree, &mut rng);
            emit(out.as_deref(), &pretty(&inst.to_json(&params))?, stdout)
        }
        Command::Nbp { n, check, count_only, samples, seed, out } => {
            if count_only {
                let count = median_nbp_node_count(n).map_err(usage)?;
                return emit(out.as_deref(), &format!("{count}\n"), stdout);
            }
            let bp = build_median_nbp(n).map_err(usage)?;
            if check {
                let inputs = if n <= 4 {
                    distinct_inputs(n)
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..samples).map(|_| random_distinct_input(n, &mut rng)).collect()
                };
                let wrong = inputs
                    .iter()
                    .filter(|x| bp.evaluate_nondeterministic(x).ok() != median_oracle(x).ok().map(u64::from))
                    .count();
                writeln!(stdout, "n={n} inputs={} wrong={wrong} nodes={}", inputs.len(), bp.len())?;
                if let Some(p) = &out {
                    std::fs::write(p, bp.to_json())?;
                }
                if wrong > 0 {
                    return Err(failed(format!("{wrong} inputs disagree with the oracle")));
                }
                return Ok(());
            }
            emit(out.as_deref(), &bp.to_json(), stdout)
        }
        Command::Eval { bp, input } => {
            let program = load_program(&bp)?;
            let label = if program.is_deterministic() {
                program.evaluate_deterministic(&input)
            } else {
                program.evaluate_nondeterministic(&input)
            }
            .map_err(failed)?;
            writeln!(stdout, "{label}")?;
            Ok(())
        }
        Command::Reduce { bp, n, k, small_n, seed, transcript } => {
            reduce(bp.as_deref(), n, k, small_n, seed, transcript.as_deref(), stdout)
        }
        Command::Roundelim { f, k, m1, exact: _, candidates, seed } => {
            let table = match f {
                FunctionArg::Xor => FTable::xor(),
                FunctionArg::And => FTable::and(),
            };
            let problem = build_f_power_k(table, PairDistribution::uniform(2, 2), k).map_err(usage)?;
            let proto = indexed_protocol(&problem, m1).map_err(usage)?;
            let delta = delta_for(m1, k);
            let opts = EliminationOptions { candidates, seed, ..Default::default() };
            let e = eliminate_first_message(&proto, &problem, delta, &opts)?;
            emit(None, &pretty(&e)?, stdout)
        }
        Command::Select { algo, n, s, rank, seed, input, check } => {
            let (mut reader, values) = if input == "synthetic" {
                let n = n.ok_or_else(|| usage("--n is required for synthetic input"))?;
                let values = Arc::new(synthetic_input(n, seed));
                (StreamReader::from_shared(values.clone()), Some(values))
            } else {
                (StreamReader::from_file(Path::new(&input))?, None)
            };
            let len = reader.len();
            if n.is_some_and(|n| n != len) {
                return Err(usage(format!("--n {} does not match the {len} values in {input}", n.unwrap_or(0))));
            }
            let rank = rank.unwrap_or(len.div_ceil(2));
            let algo = match algo {
                AlgoArg::Multipass => Algo::Multipass,
                AlgoArg::Sampling => Algo::Sampling,
            };
            let r = run_select(algo, &mut reader, s, rank, seed).map_err(usage)?;
            let mut out = json!({
                "algo": algo.name(), "n": len, "s": s, "rank": rank, "seed": seed,
                "value": r.value, "passes": r.passes, "peak_registers": r.peak_registers,
            });
            let mut ok = true;
            if check {
                let values = match values {
                    Some(v) => v,
                    None => Arc::new(read_all(&mut StreamReader::from_file(Path::new(&input))?)?),
                };
                ok = oracle_select(&values, rank) == r.value;
                out["correct"] = json!(ok);
            }
            emit(None, &pretty(&out)?, stdout)?;
            if !ok {
                return Err(failed("selected value differs from the sort oracle"));
            }
            Ok(())
        }
        Command::Sweep { kind, n, s, seeds, seed, format } => match kind {
            SweepKind::Ratio => {
                let rows = ratio_sweep(&n).map_err(usage)?;
                let text = match format {
                    Format::Json => pretty(&rows)?,
                    Format::Csv => {
                        let mut w = csv::Writer::from_writer(vec![]);
                        for r in &rows {
                            w.serialize(r)?;
                        }
                        String::from_utf8(w.into_inner()?)?
                    }
                };
                emit(None, &text, stdout)
            }
            SweepKind::Select => {
                let config = BenchConfig {
                    ns: n,
                    ss: s,
                    algos: vec![Algo::Multipass, Algo::Sampling],
                    seeds: (seed..seed + seeds).collect(),
                };
                let records = pass_bench(&config).map_err(usage)?;
                let text = match format {
                    Format::Json => pretty(&records)?,
                    Format::Csv => bench_csv(&records)?,
                };
                emit(None, &text, stdout)
            }
        },
        Command::Verify { suite, seed, scale, format } => {
            if suite != "all" && !SUITES.contains(&suite.as_str()) {
                return Err(usage(format!("unknown suite {suite}; expected all or one of {}", SUITES.join(", "))));
            }
            let scale = match scale {
                ScaleArg::Quick => Scale::Quick,
                ScaleArg::Full => Scale::Full,
            };
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut records = Vec::new();
            for name in names {
                // Timings go to stderr so stdout stays reproducible.
                let start = std::time::Instant::now();
                records.extend(run_suite(name, seed, scale)?);
                eprintln!("suite {name}: {:.1}s", start.elapsed().as_secs_f64());
            }
            let text = match format {
                Format::Json => pretty(&records)?,
                Format::Csv => records_csv(&records)?,
            };
            emit(None, &text, stdout)?;
            let failures: Vec<&ExperimentRecord> = records.iter().filter(|r| !r.pass).collect();
            if !failures.is_empty() {
                return Err(failed(format!("{} of {} checks failed", failures.len(), records.len())));
            }
            Ok(())
        }
    }
}

fn load_program(path: &Path) -> anyhow::Result<BranchingProgram> {
    let text = std::fs::read_to_string(path).map_err(|e| failed(format!("{}: {e}", path.display())))?;
    BranchingProgram::from_json(&text).map_err(|e| failed(format!("{}: {e}", path.display())))
}

fn read_all(reader: &mut StreamReader) -> anyhow::Result<Vec<u64>> {
    let mut values = Vec::with_capacity(reader.len() as usize);
    reader.pass(|v| values.push(v))?;
    Ok(values)
}

fn reduce(
    bp: Option<&Path>,
    n: Option<usize>,
    k: usize,
    small_n: Option<usize>,
    seed: u64,
    transcript: Option<&Path>,
    stdout: &mut dyn std::io::Write,
) -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (program, order) = match bp {
        Some(path) => {
            let program = load_program(path)?;
            match program.check_oblivious() {
                Obliviousness::Oblivious(order) => (program, order),
                Obliviousness::NotOblivious(why) => return Err(failed(format!("program is not oblivious: {why}"))),
            }
        }
        None => {
            let n = n.expect("clap");
            if k == 0 || n % (4 * k) != 0 {
                return Err(usage(format!("4k = {} must divide n = {n}", 4 * k)));
            }
            let order = random_query_sequence(n, k, &mut rng);
            (oblivious_median_program(&order, n).map_err(usage)?, order)
        }
    };
    let n = program.num_inputs();
    if !program.check_read_k(k) {
        return Err(usage(format!("program reads some index more than k = {k} times")));
    }
    let segments = segment_split(&order, n, k).map_err(usage)?;
    let assignment = find_assignment(&segments, n, k, &mut rng)?;
    let cap = 2 * assignment.n_a.min(assignment.n_b).min(n / 2);
    let n_small = match small_n {
        Some(v) => v,
        None => (assignment.default_embedded_size().max(2) / 2 * 2).min(cap.max(2)),
    };
    let embedding = assignment.embedding(n_small).map_err(usage)?;
    let small = random_distinct_input(n_small, &mut rng);
    let (full, correction) = embed_instance(&small, &embedding)?;
    if full.iter().any(|&v| v > program.domain()) {
        return Err(usage(format!("embedded values exceed the program domain {}", program.domain())));
    }
    let run = protocol_from_bp(&program, &assignment, &embedding, &small[..n_small / 2], &small[n_small / 2..])?;
    let direct = (program.evaluate_deterministic(&full)? & 1) as u8 ^ correction;
    let lines = run.transcript_lines();
    let mut out = json!({
        "assignment": assignment,
        "embedding": embedding,
        "small_input": small,
        "full_input": full,
        "correction": correction,
        "output": run.output,
        "direct": direct,
        "messages": run.message_count(),
        "max_message_bits": run.max_message_bits(),
        "name_bits": run.name_bits,
    });
    match transcript {
        Some(p) => std::fs::write(p, &lines)?,
        None => out["transcript"] = json!(lines.lines().collect::<Vec<_>>()),
    }
    emit(None, &pretty(&out)?, stdout)?;
    if run.output != direct {
        return Err(failed("protocol output differs from direct evaluation"));
    }
    Ok(())
}

