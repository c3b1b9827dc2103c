//! `xq`: run queries over a partitioned XML data root, generate weather
//! data, and time the weather queries across partition counts.
//!
//! Exit codes: 0 success, 1 engines disagree (`diff`), 2 lexical or syntax
//! error, 3 binding or type error, 4 runtime or I/O error.

use std::hash::Hasher;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rustc_hash::FxHasher;

use xq_core::algebra::{print_plan, translate};
use xq_core::datagen::{generate, GenSpec};
use xq_core::frontend::{compile_core, corpus};
use xq_core::optimizer::{optimize, select_physical, PhysicalConfig};
use xq_core::oracle::eval_naive;
use xq_core::runtime::{execute, serialize_result, ExecConfig, DEFAULT_FRAME_SIZE};
use xq_core::xdm::Sequence;
use xq_core::xml_ingest::PartitionSpec;
use xq_core::{Error, Result};

#[derive(Parser)]
#[command(name = "xq", version, about = "XQuery over partitioned XML collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one query and print its serialized result.
    Run(RunArgs),
    /// Run a query on both engines and compare the results as multisets.
    Diff(RunArgs),
    /// Generate a weather corpus with a ground-truth manifest.
    Datagen(DatagenArgs),
    /// Time the weather queries at several partition counts.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Parallel,
    Naive,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    /// The plan straight out of translation.
    Initial,
    /// The plan after logical rewriting.
    Logical,
    Physical,
}

#[derive(Args)]
struct QuerySource {
    /// Query text.
    #[arg(short = 'q', long, group = "source")]
    query: Option<String>,
    /// File holding the query text.
    #[arg(short = 'f', long, group = "source")]
    file: Option<PathBuf>,
    /// A query from the built-in corpus, by name.
    #[arg(long, group = "source")]
    named: Option<String>,
}

impl QuerySource {
    fn text(&self) -> Result<String> {
        if let Some(q) = &self.query {
            return Ok(q.clone());
        }
        if let Some(f) = &self.file {
            return std::fs::read_to_string(f).map_err(|e| Error::io(f, e));
        }
        if let Some(n) = &self.named {
            return corpus::by_name(n)
                .map(|q| q.text.to_string())
                .ok_or_else(|| Error::dynamic(format!("no corpus query named {}", n)));
        }
        Err(Error::dynamic("give a query with -q, -f or --named"))
    }
}

#[derive(Args)]
struct ExecArgs {
    /// Directory that collection paths starting with `/` resolve under.
    #[arg(long, default_value = ".")]
    data_root: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    partitions: u32,
    /// Frame capacity in bytes.
    #[arg(long, default_value_t = DEFAULT_FRAME_SIZE as u32, value_parser = clap::value_parser!(u32).range(4096..))]
    frame_size: u32,
    /// Directory for hash join spill files.
    #[arg(long)]
    scratch: Option<PathBuf>,
    /// Run partitions one after another on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl ExecArgs {
    fn spec(&self, partitions: usize) -> Result<PartitionSpec> {
        PartitionSpec::from_data_root(&self.data_root, partitions)
    }

    fn config(&self) -> ExecConfig {
        ExecConfig {
            frame_size: self.frame_size as usize,
            scratch: self.scratch.clone(),
            parallel: !self.sequential && ExecConfig::default().parallel,
            ..ExecConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: QuerySource,
    #[command(flatten)]
    exec: ExecArgs,
    #[arg(long, value_enum, default_value = "parallel")]
    engine: Engine,
    /// Print these plan stages to standard error before executing.
    #[arg(long, value_enum, value_delimiter = ',')]
    dump_plan: Vec<Stage>,
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    stations: usize,
    /// Days of readings from 1976-01-01; the default covers 1976 to 2005.
    #[arg(long, default_value_t = GenSpec::FULL_RANGE_DAYS)]
    days: u32,
    /// Number of `part-NN` directories to write.
    #[arg(long, default_value_t = 8)]
    partitions: usize,
    #[arg(long, default_value_t = 1000)]
    records_per_file: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    exec: ExecArgs,
    /// Partition counts to time.
    #[arg(long = "partition-counts", value_delimiter = ',', default_value = "1,2,4,8")]
    partition_counts: Vec<usize>,
    /// Corpus query names; all weather queries when empty.
    #[arg(long, value_delimiter = ',')]
    queries: Vec<String>,
    /// Timed runs per cell, after two discarded warm-up runs.
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
}

fn fx_hex(bytes: &[u8]) -> String {
    let mut h = FxHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}

/// Serialized items one per line, sorted when the query leaves order open.
fn normalized(result: &Sequence, ordered: bool) -> String {
    let mut lines: Vec<String> = result.iter().map(|i| serialize_result(std::slice::from_ref(i))).collect();
    if !ordered {
        lines.sort();
    }
    lines.join("\n")
}

fn run_engine(text: &str, args: &RunArgs, engine: Engine) -> Result<Sequence> {
    let spec = args.exec.spec(args.exec.partitions as usize)?;
    match engine {
        Engine::Naive => {
            if !args.dump_plan.is_empty() {
                eprintln!("-- the naive engine builds no plans");
            }
            eval_naive(text, &spec)
        }
        Engine::Parallel => {
            let initial = translate(&compile_core(text)?)?;
            if args.dump_plan.contains(&Stage::Initial) {
                eprintln!("-- initial\n{}", print_plan(&initial));
            }
            let logical = optimize(initial)?.plan;
            if args.dump_plan.contains(&Stage::Logical) {
                eprintln!("-- logical\n{}", print_plan(&logical));
            }
            let physical = select_physical(&logical, &spec, PhysicalConfig::default())?;
            if args.dump_plan.contains(&Stage::Physical) {
                eprintln!("-- physical\n{}", physical);
            }
            execute(&physical, &spec, &args.exec.config())
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let text = args.source.text()?;
    let out = run_engine(&text, args, args.engine)?;
    println!("{}", serialize_result(&out));
    Ok(ExitCode::SUCCESS)
}

fn cmd_diff(args: &RunArgs) -> Result<ExitCode> {
    let text = args.source.text()?;
    let a = normalized(&run_engine(&text, args, Engine::Naive)?, false);
    let b = normalized(&run_engine(&text, args, Engine::Parallel)?, false);
    if a == b {
        println!("equal\t{}", fx_hex(a.as_bytes()));
        Ok(ExitCode::SUCCESS)
    } else {
        println!("differ\tnaive={}\tparallel={}", fx_hex(a.as_bytes()), fx_hex(b.as_bytes()));
        Ok(ExitCode::from(1))
    }
}

fn cmd_datagen(args: &DatagenArgs) -> Result<ExitCode> {
    let mut spec = GenSpec::new(args.seed, args.stations, args.days, args.partitions);
    spec.records_per_file = args.records_per_file;
    let m = generate(&spec, &args.out)?;
    print!("{}", m.to_text());
    Ok(ExitCode::SUCCESS)
}

fn mean_ms(text: &str, spec: &PartitionSpec, config: &ExecConfig, reps: usize) -> Result<(f64, Sequence, String)> {
    let logical = optimize(translate(&compile_core(text)?)?)?.plan;
    let physical = select_physical(&logical, spec, PhysicalConfig::default())?;
    let plan_hash = fx_hex(format!("{}\n{}", print_plan(&logical), physical).as_bytes());
    let mut times = Vec::new();
    let mut result = Sequence::new();
    for i in 0..reps + 2 {
        let t = Instant::now();
        result = execute(&physical, spec, config)?;
        if i >= 2 {
            times.push(t.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok((times.iter().sum::<f64>() / times.len().max(1) as f64, result, plan_hash))
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let queries: Vec<corpus::CorpusQuery> = if args.queries.is_empty() {
        corpus::WEATHER.to_vec()
    } else {
        args.queries
            .iter()
            .map(|n| corpus::by_name(n).ok_or_else(|| Error::dynamic(format!("no corpus query named {}", n))))
            .collect::<Result<_>>()?
    };
    let config = args.exec.config();
    println!("query\tpartitions\tmean_ms\tresult_hash\tplan_hash");
    let mut failed = false;
    for q in &queries {
        for &p in &args.partition_counts {
            let cell = args.exec.spec(p.max(1)).and_then(|spec| mean_ms(q.text, &spec, &config, args.repetitions.max(1)));
            match cell {
                Ok((ms, result, plan)) => {
                    let rh = fx_hex(normalized(&result, q.ordered).as_bytes());
                    println!("{}\t{}\t{:.3}\t{}\t{}", q.name, p, ms, rh, plan);
                }
                Err(e) => {
                    failed = true;
                    eprintln!("{} at {} partitions: {}", q.name, p, e);
                    println!("{}\t{}\terror\t-\t-", q.name, p);
                }
            }
        }
    }
    Ok(if failed { ExitCode::from(4) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Datagen(a) => cmd_datagen(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
