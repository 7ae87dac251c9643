//! Command-line front end: generate datasets, run the clustering loop, query
//! the exact oracles, ingest ratings, and benchmark the two reconstruction
//! routes.
//!
//! Exit codes: 0 on success, 2 on input validation failures, 3 on infeasible
//! configurations (k too large, oracle budgets, unachievable separation).

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use krc::prelude::*;

#[derive(Parser)]
#[command(name = "krc", version, about = "Ranking-vector clustering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic ranking datasets.
    Generate {
        #[command(subcommand)]
        what: GenerateCommand,
    },
    /// Cluster a rankings CSV and print a JSON report.
    Cluster(ClusterArgs),
    /// Exact small-instance oracles and the tree-depth bound table.
    Oracle {
        #[command(subcommand)]
        what: OracleCommand,
    },
    /// Convert a ratings CSV into a rankings CSV.
    Ingest(IngestArgs),
    /// Experiment protocols over ratings data.
    Experiment {
        #[command(subcommand)]
        what: ExperimentCommand,
    },
    /// Timing harnesses.
    Bench {
        #[command(subcommand)]
        what: BenchCommand,
    },
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Uniform rankings.
    Uniform {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output rankings CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON sidecar describing the generation.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Swap-walk clustered rankings with ground truth.
    Clustered {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        omega: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// The tight family with known optima.
    Tightness {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ClusterArgs {
    /// Rankings CSV (one comma-separated permutation per line).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pruning slack for the tree route.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Use the tree when m is at most this.
    #[arg(long, default_value_t = DEFAULT_BNB_THRESHOLD)]
    bnb_threshold: usize,
    /// Stop when the objective improves by less than this.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact ranking-clustering optimum (tiny instances only).
    Krc {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Exact real-relaxation optimum (tiny instances only).
    Kmc {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Worst-case tree depth mu as CSV over a delta range.
    Mu {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        delta_min: u32,
        #[arg(long)]
        delta_max: u32,
    },
}

#[derive(Args)]
struct IngestArgs {
    /// Ratings CSV with header user_id,item_id,genre,rating.
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long)]
    lambda: u64,
    /// Number of genres m.
    #[arg(long)]
    genres: usize,
    #[arg(long, default_value_t = 0.5)]
    min_rating: f64,
    #[arg(long, default_value_t = 5.0)]
    max_rating: f64,
    /// Output rankings CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Train/test prediction accuracy of the clustering.
    Accuracy {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        lambda: u64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        genres: usize,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Timing of tree vs exhaustive reconstruction across dimensions.
    Crossover {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Comma-separated dimensions to sweep.
        #[arg(long, default_value = "4,5,6,7,8", value_delimiter = ',')]
        m_list: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Timing repetitions per method (fastest run is reported).
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 for malformed input, 3 for structurally infeasible requests.
fn exit_code(err: &KrcError) -> u8 {
    match err {
        KrcError::InfeasibleK { .. }
        | KrcError::TooFewUsers { .. }
        | KrcError::RetryCapExceeded { .. }
        | KrcError::BudgetExceeded(_)
        | KrcError::BruteForceCapExceeded { .. } => 3,
        _ => 2,
    }
}

fn write_or_print(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents)?,
        None => print!("{contents}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { what } => generate(what),
        Command::Cluster(args) => cluster(args),
        Command::Oracle { what } => oracle(what),
        Command::Ingest(args) => ingest(args),
        Command::Experiment {
            what:
                ExperimentCommand::Accuracy {
                    ratings,
                    lambda,
                    k,
                    seed,
                    genres,
                },
        } => {
            let records = read_ratings_csv(&ratings)?;
            krc::ingest::validate_records(&records, genres, krc::ingest::DEFAULT_RATING_BOUNDS)?;
            let report = prediction_accuracy(&records, genres, lambda, k, seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("serializable")
            );
            Ok(())
        }
        Command::Bench { what } => bench(what),
    }
}

fn generate(cmd: GenerateCommand) -> Result<()> {
    match cmd {
        GenerateCommand::Uniform {
            n,
            m,
            seed,
            out,
            sidecar,
        } => {
            let rows = gen_uniform_rows(n, m, seed)?;
            std::fs::write(&out, write_rankings_csv(rows.iter()))?;
            if let Some(path) = sidecar {
                let doc = json!({
                    "kind": "uniform",
                    "n": n,
                    "m": m,
                    "seed": seed,
                });
                std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))?;
            }
            Ok(())
        }
        GenerateCommand::Clustered {
            n,
            m,
            k,
            omega,
            seed,
            out,
            sidecar,
        } => {
            let spec = SwapClusterSpec {
                n,
                m,
                k,
                omega,
                seed,
            };
            let inst = gen_swap_clustered(&spec)?;
            std::fs::write(&out, write_rankings_csv(inst.rows.iter()))?;
            if let Some(path) = sidecar {
                let doc = json!({
                    "kind": "swap_clustered",
                    "spec": spec,
                    "ground_truth": {
                        "centroids": inst.true_centroids,
                        "row_labels": inst.row_labels,
                    },
                });
                std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))?;
            }
            Ok(())
        }
        GenerateCommand::Tightness { k, out, sidecar } => {
            let inst = gen_tightness(k)?;
            std::fs::write(
                &out,
                write_rankings_csv(inst.dataset.entries().iter().map(|e| &e.ranking)),
            )?;
            if let Some(path) = sidecar {
                let doc = json!({
                    "kind": "tightness",
                    "k": k,
                    "m": inst.m,
                    "expected_v_krc": inst.expected_v_krc,
                    "expected_v_kmc": inst.expected_v_kmc,
                });
                std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))?;
            }
            Ok(())
        }
    }
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let rows = read_rankings_csv(&args.data)?;
    let ds = build_dataset(&rows)?;
    let cfg = KrcaConfig {
        k: args.k,
        epsilon: args.epsilon,
        bnb_threshold: args.bnb_threshold,
        tol: args.tol,
        max_outer_iter: args.max_iter,
        seed: args.seed,
    };
    let report = krca(&ds, &cfg)?;
    let rendered = serde_json::to_string_pretty(&report).expect("serializable");
    write_or_print(&args.out, &(rendered + "\n"))
}

fn oracle(cmd: OracleCommand) -> Result<()> {
    match cmd {
        OracleCommand::Krc { data, k } => {
            let rows = read_rankings_csv(&data)?;
            let ds = build_dataset(&rows)?;
            let (_, optimum) = exact_krc_oracle(&ds, k)?;
            println!("problem,k,optimum");
            println!("krc,{k},{optimum}");
            Ok(())
        }
        OracleCommand::Kmc { data, k } => {
            let rows = read_rankings_csv(&data)?;
            let ds = build_dataset(&rows)?;
            let optimum = exact_kmc_oracle(&ds, k)?;
            println!("problem,k,optimum");
            println!("kmc,{k},{optimum}");
            Ok(())
        }
        OracleCommand::Mu {
            m,
            delta_min,
            delta_max,
        } => {
            println!("m,delta,mu");
            for delta in delta_min..=delta_max {
                let mu = mu_depth_bound(m, delta)?;
                println!("{m},{delta},{mu}");
            }
            Ok(())
        }
    }
}

fn ingest(args: IngestArgs) -> Result<()> {
    let records = read_ratings_csv(&args.ratings)?;
    krc::ingest::validate_records(&records, args.genres, (args.min_rating, args.max_rating))?;
    let baseline = genre_baseline(&records, args.genres)?;
    let ranked = lambda_filter(&records, args.genres, args.lambda, &baseline);
    let csv = write_rankings_csv(ranked.iter().map(|(_, r)| r));
    write_or_print(&args.out, &csv)
}

fn bench(cmd: BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Crossover {
            n,
            k,
            m_list,
            seed,
            reps,
        } => {
            let points = crossover_sweep(n, k, &m_list, seed, reps)?;
            println!("m,n,distinct,k,scan_seconds,tree_seconds,ratio_tree_over_scan");
            for p in points {
                println!(
                    "{},{},{},{},{:.6},{:.6},{:.3}",
                    p.m,
                    p.n,
                    p.distinct,
                    p.k,
                    p.scan_seconds,
                    p.tree_seconds,
                    p.ratio()
                );
            }
            Ok(())
        }
    }
}
