mod run;

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use symfact_core::generate::{erdos_renyi, skewed};
use symfact_core::mtx::{parse_matrix_market, write_matrix_market};
use symfact_core::reference::{sequential_supernodes_chunked, BRUTE_FORCE_LIMIT};
use symfact_core::structure::RowStructure;
use symfact_core::{balance_report, CsrGraph, Error, FillStructure, Permutation};

use crate::run::{run, Algorithm, RunConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "symfact", version, about = "Sparse LU symbolic factorization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Structure,
    Supernodes,
    Stats,
    All,
}

#[derive(clap::Args)]
struct Input {
    /// Matrix Market file (coordinate format).
    matrix: PathBuf,
    /// Row permutation, one old index per line (new -> old).
    #[arg(long)]
    row_perm: Option<PathBuf>,
    /// Column permutation, one old index per line (new -> old).
    #[arg(long)]
    col_perm: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the L+U structure, supernodes and run statistics.
    Factorize {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, value_enum, default_value = "all")]
        emit: Emit,
        /// Write `<out>.structure.csr`, `<out>.supernodes.txt` and
        /// `<out>.stats.json` instead of printing to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every algorithm and compare structures and supernodes row by row.
    Verify {
        /// Matrix to check; omit with `--random`.
        matrix: Option<PathBuf>,
        #[arg(long)]
        row_perm: Option<PathBuf>,
        #[arg(long)]
        col_perm: Option<PathBuf>,
        #[command(flatten)]
        config: RunConfig,
        /// Check this many generated matrices with seeds `seed..seed+count`.
        #[arg(long)]
        random: Option<u64>,
        #[arg(long, default_value_t = 48)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        density: f64,
        /// Flip one entry of this row in the fine-grained result before
        /// comparing (negative control).
        #[arg(long, hide = true)]
        corrupt_row: Option<usize>,
    },
    /// Time repeated runs and report mean TEPS and phase times.
    Bench {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, default_value_t = 3)]
        runs: usize,
        /// Also rerun at 1/4 and 1/16 of the unbounded high-water mark.
        #[arg(long)]
        budget_sweep: bool,
    },
    /// Write a seeded random pattern in Matrix Market format.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        /// Density at the last row; rows ramp linearly from `--density`.
        #[arg(long)]
        skew_to: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConfigurationInfeasible(_) | Error::ArenaExhausted { .. } => EXIT_INFEASIBLE,
        Error::InvariantViolation(_) => EXIT_INVARIANT,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Mismatch(report)) => {
            eprintln!("{report}");
            ExitCode::from(EXIT_MISMATCH)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Factorize {
            input,
            config,
            emit,
            out,
        } => factorize(
            &load(&input.matrix, &input.row_perm, &input.col_perm)?,
            &config,
            emit,
            out,
        ),
        Command::Verify {
            matrix,
            row_perm,
            col_perm,
            config,
            random,
            n,
            density,
            corrupt_row,
        } => match (matrix, random) {
            (Some(path), _) => {
                let g = load(&path, &row_perm, &col_perm)?;
                verify(&g, &config, corrupt_row).map_err(Failure::Mismatch)?;
                println!("PASS {}", path.display());
                Ok(())
            }
            (None, Some(count)) => {
                for seed in config.seed..config.seed + count {
                    let g = erdos_renyi(n, density, seed);
                    verify(&g, &config, corrupt_row)
                        .map_err(|r| Failure::Mismatch(format!("seed {seed}: {r}")))?;
                }
                println!("PASS {count} random matrices (n = {n}, density = {density})");
                Ok(())
            }
            (None, None) => {
                Err(Error::InvalidConfig("give a matrix path or --random".into()).into())
            }
        },
        Command::Bench {
            input,
            config,
            runs,
            budget_sweep,
        } => bench(
            &load(&input.matrix, &input.row_perm, &input.col_perm)?,
            &config,
            runs,
            budget_sweep,
        ),
        Command::Generate {
            n,
            density,
            skew_to,
            seed,
            out,
        } => {
            let g = match skew_to {
                Some(high) => skewed(n, density, high, seed),
                None => erdos_renyi(n, density, seed),
            };
            write_or_print(out.as_deref(), &write_matrix_market(&g))?;
            Ok(())
        }
    }
}

fn load(
    path: &Path,
    row_perm: &Option<PathBuf>,
    col_perm: &Option<PathBuf>,
) -> Result<CsrGraph, Failure> {
    let file = fs::File::open(path)?;
    // a structurally missing diagonal is treated as present
    let g = parse_matrix_market(BufReader::new(file))?.with_full_diagonal();
    if row_perm.is_none() && col_perm.is_none() {
        return Ok(g);
    }
    let read_perm = |p: &Option<PathBuf>| -> Result<Permutation, Failure> {
        match p {
            Some(p) => Ok(Permutation::parse(&fs::read_to_string(p)?)?),
            None => Ok(Permutation::identity(g.n())),
        }
    };
    let (r, c) = (read_perm(row_perm)?, read_perm(col_perm)?);
    Ok(g.permute(&r, &c)?.with_full_diagonal())
}

fn write_or_print(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn factorize(
    g: &CsrGraph,
    cfg: &RunConfig,
    emit: Emit,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let o = run(g, cfg.algorithm, cfg)?;
    let want = |e: Emit| emit == e || emit == Emit::All;
    let stats = serde_json::to_string_pretty(&json!({
        "algorithm": cfg.algorithm,
        "n": g.n(),
        "nnz": g.nnz() + g.n(),
        "stats": o.stats,
        "fill_entries": o.structure.fill_entries(g).collect::<Vec<_>>(),
    }))
    .expect("stats serialize");
    let parts = [
        (Emit::Structure, ".structure.csr", o.structure.to_csr_text()),
        (Emit::Supernodes, ".supernodes.txt", o.supernodes.to_text()),
        (Emit::Stats, ".stats.json", stats + "\n"),
    ];
    for (kind, suffix, text) in parts {
        if want(kind) {
            write_or_print(
                out.as_deref().map(|p| with_suffix(p, suffix)).as_deref(),
                &text,
            )?;
        }
    }
    Ok(())
}

/// Compare every algorithm against the brute-force oracle. Returns a
/// per-row diff report on the first disagreement.
fn verify(g: &CsrGraph, cfg: &RunConfig, corrupt_row: Option<usize>) -> Result<(), String> {
    if g.n() > BRUTE_FORCE_LIMIT {
        return Err(format!(
            "n = {} exceeds the oracle limit {BRUTE_FORCE_LIMIT}",
            g.n()
        ));
    }
    let oracle = run(g, Algorithm::Oracle, cfg).map_err(|e| e.to_string())?;
    let mut report = String::new();
    for alg in [Algorithm::Fill1, Algorithm::Fill2, Algorithm::Gsofa] {
        let mut o = run(g, alg, cfg).map_err(|e| e.to_string())?;
        if alg == Algorithm::Gsofa {
            if let Some(r) = corrupt_row {
                o.structure = corrupt(&o.structure, r);
            }
        }
        for d in oracle.structure.diff(&o.structure) {
            report.push_str(&format!("{alg:?} vs oracle: {d}\n"));
        }
        if o.supernodes != oracle.supernodes {
            report.push_str(&format!("{alg:?} supernodes differ from the oracle's\n"));
        }
    }
    let seq = sequential_supernodes_chunked(&oracle.structure, cfg.max_supernode, cfg.chunk_size);
    if seq != oracle.supernodes {
        report.push_str("chunked supernodes differ from the sequential scan\n");
    }
    if report.is_empty() {
        Ok(())
    } else {
        Err(format!("FAIL\n{report}"))
    }
}

/// Toggle column 0 (or the last column for row 0) of row `r`.
fn corrupt(fs: &FillStructure, r: usize) -> FillStructure {
    let n = fs.n();
    let rows = (0..n).map(|i| {
        let mut row = RowStructure {
            row: i,
            lower: fs.lower(i).to_vec(),
            upper: fs.upper(i).to_vec(),
        };
        if i == r {
            if i > 0 {
                toggle(&mut row.lower, 0);
            } else if n > 1 {
                toggle(&mut row.upper, (n - 1) as u32);
            }
        }
        row
    });
    FillStructure::from_rows(n, rows.collect::<Vec<_>>())
}

fn toggle(v: &mut Vec<u32>, x: u32) {
    match v.binary_search(&x) {
        Ok(i) => {
            v.remove(i);
        }
        Err(i) => v.insert(i, x),
    }
}

fn bench(g: &CsrGraph, cfg: &RunConfig, runs: usize, budget_sweep: bool) -> Result<(), Failure> {
    let runs = runs.max(1);
    let mut all = Vec::with_capacity(runs);
    let mut first = None;
    for _ in 0..runs {
        let o = run(g, cfg.algorithm, cfg)?;
        first.get_or_insert_with(|| o.structure.clone());
        all.push(o.stats);
    }
    let mean = |f: &dyn Fn(&symfact_core::PipelineStats) -> f64| {
        all.iter().map(f).sum::<f64>() / runs as f64
    };
    let mut doc = json!({
        "algorithm": cfg.algorithm,
        "runs": runs,
        "mean_teps": mean(&|s| s.teps),
        "mean_fill_seconds": mean(&|s| s.fill_seconds),
        "mean_supernode_seconds": mean(&|s| s.supernode_seconds),
        "traversed_edges": all[0].traversed_edges,
        "fills": all[0].fills,
        "balance": balance_report(&all[0]),
        "per_run": all,
    });
    if budget_sweep && cfg.algorithm == Algorithm::Gsofa {
        let reference = first.expect("at least one run");
        let hw = all[0].high_water_mark.max(1);
        let mut sweep = Vec::new();
        for div in [4usize, 16] {
            let budget = hw / div;
            let mut c = cfg.clone();
            c.budget_bytes = Some(budget);
            match run(g, Algorithm::Gsofa, &c) {
                Ok(o) => sweep.push(json!({
                    "budget_bytes": budget,
                    "identical": o.structure == reference,
                    "spill_events": o.stats.spill_events,
                    "effective_concurrency": o.stats.effective_concurrency,
                })),
                Err(e @ (Error::ConfigurationInfeasible(_) | Error::ArenaExhausted { .. })) => {
                    sweep.push(json!({ "budget_bytes": budget, "infeasible": e.to_string() }))
                }
                Err(e) => return Err(e.into()),
            }
        }
        doc["budget_sweep"] = json!(sweep);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("stats serialize")
    );
    Ok(())
}
