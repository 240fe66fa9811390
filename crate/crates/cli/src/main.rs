use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ctrlsparse::bench::{self, Algorithm, BenchConfig, GeneratorKind, LPolicy};
use ctrlsparse::io::{self, MatrixFormat};
use ctrlsparse::macp::{gramian_greedy_macp, greedy_column_select, greedy_macp};
use ctrlsparse::mscp::{equivalence_sufficient, simple_greedy_mscp, two_stage_mscp};
use ctrlsparse::pattern::build_ism;
use ctrlsparse::realization::{construct_input_matrix, micp_min_input_pattern};
use ctrlsparse::{compute_eigenstructure, pattern_feasible, EigenStructure};
use ctrlsparse::{
    feasibility, fixtures, generate, oracle, AccessibleSet, Error, SparsityPattern, StateMatrix,
    ToleranceConfig,
};

#[derive(Parser)]
#[command(
    name = "ctrlsparse",
    version,
    about = "Sparse input design and actuator selection for controllable linear systems",
    after_help = "Matrix arguments are files (Matrix Market, CSV or JSON rows) or fixture:NAME \
                  with NAME one of paired, circuit, double."
)]
struct Cli {
    /// Tolerance override, e.g. `--tol rank=1e-10` (repeatable). Keys: rank,
    /// det, cluster, null, floor or the full field names.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    tol: Vec<String>,

    /// Seed for generators and benchmarks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output format for matrices (mm, csv, json).
    #[arg(long, global = true, default_value = "json")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, geometric multiplicities and mode structure of A.
    Analyze {
        matrix: PathBuf,
        /// Also print the input-state-mode digraph of this pattern (DOT).
        #[arg(long)]
        pattern: Option<PathBuf>,
    },
    /// Controllability checks: a pattern, a concrete B, or an accessible set.
    Check(CheckArgs),
    /// Real B on a feasible pattern with (A, B) controllable.
    Construct {
        matrix: PathBuf,
        pattern: PathBuf,
        /// Emit the full construction trace as JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Small set of actuated states rendering A controllable.
    Macp {
        matrix: PathBuf,
        /// One-based states that may not be actuated, e.g. `1,4`.
        #[arg(long)]
        forbidden: Option<String>,
        /// Run the Gramian-rank greedy instead (A must be Hurwitz).
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Select columns of this B instead of states.
        #[arg(long)]
        columns: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
    },
    /// Sparse n x l input pattern with exactly l inputs.
    Mscp {
        matrix: PathBuf,
        #[arg(long)]
        l: usize,
        #[arg(long, value_enum, default_value_t = MscpAlgorithm::TwoStage)]
        algorithm: MscpAlgorithm,
        #[arg(long)]
        trace: bool,
    },
    /// Minimum number of inputs when only some states may be actuated.
    Micp {
        matrix: PathBuf,
        /// One-based accessible states, e.g. `1,3`.
        #[arg(long, conflicts_with = "forbidden")]
        accessible: Option<String>,
        /// One-based forbidden states.
        #[arg(long)]
        forbidden: Option<String>,
    },
    /// Random state matrices.
    Gen(GenArgs),
    /// Benchmark runs written as CSV.
    Bench(BenchArgs),
    /// Exhaustive optima for small instances.
    Oracle {
        #[arg(value_enum)]
        problem: OracleProblem,
        matrix: PathBuf,
        /// Number of inputs (mscp).
        #[arg(long)]
        l: Option<usize>,
        /// One-based accessible states (macp).
        #[arg(long)]
        accessible: Option<String>,
    },
}

#[derive(Args)]
struct CheckArgs {
    matrix: PathBuf,
    #[arg(long, group = "what")]
    pattern: Option<PathBuf>,
    /// Concrete input matrix.
    #[arg(long, group = "what")]
    b: Option<PathBuf>,
    /// One-based accessible states.
    #[arg(long, group = "what")]
    accessible: Option<String>,
    /// Input count for coordinate patterns (inferred when omitted).
    #[arg(long)]
    l: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    /// Largest geometric multiplicity (jordan).
    #[arg(long, default_value_t = 3)]
    k_max: usize,
    /// Density of the eigenvector matrix (jordan).
    #[arg(long, default_value_t = generate::DEFAULT_DENSITY)]
    density: f64,
    /// Links per new node relative to ln n (scale-free).
    #[arg(long, default_value_t = generate::DEFAULT_DEGREE_COEFF)]
    degree_coeff: f64,
    /// Shift the result to be Hurwitz.
    #[arg(long)]
    stabilize: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = GenKind::ScaleFree)]
    generator: GenKind,
    /// Sizes as a list `20,40` or range `20:100:20`.
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 3)]
    k_max: usize,
    #[arg(long, default_value_t = generate::DEFAULT_DENSITY)]
    density: f64,
    #[arg(long, default_value_t = generate::DEFAULT_DEGREE_COEFF)]
    degree_coeff: f64,
    /// Number of inputs, or `kmax`.
    #[arg(long, default_value = "kmax")]
    l: String,
    /// Comma-separated algorithm names.
    #[arg(long, default_value = "greedy_macp,gramian_greedy")]
    algorithms: String,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Gramian,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum MscpAlgorithm {
    Simple,
    TwoStage,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    ScaleFree,
    Jordan,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleProblem {
    Macp,
    Mscp,
}

/// Outcome of a command: a document to print and whether the instance was
/// feasible.
struct Output {
    text: String,
    feasible: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            feasible: true,
        }
    }

    fn json(v: Value, feasible: bool) -> Self {
        Output {
            text: serde_json::to_string_pretty(&v).expect("serialisable"),
            feasible,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let _ = writeln!(std::io::stdout(), "{}", out.text.trim_end());
            if out.feasible {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for a well-posed instance that is infeasible, 2 for bad input.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InfeasiblePattern { .. }
        | Error::InaccessibleMode { .. }
        | Error::TooFewInputs { .. }
        | Error::NotControllable { .. } => 1,
        _ => 2,
    }
}

fn tolerances(specs: &[String]) -> ctrlsparse::Result<ToleranceConfig> {
    let mut tol = ToleranceConfig::default();
    for spec in specs {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected KEY=VALUE, got '{spec}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("tolerance '{spec}': {e}")))?;
        tol.set(k.trim(), v)?;
    }
    tol.validate()?;
    Ok(tol)
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

/// A matrix file, or `fixture:NAME` for a built-in reference system.
fn read_state(path: &Path) -> ctrlsparse::Result<StateMatrix> {
    match path.to_str().and_then(|s| s.strip_prefix("fixture:")) {
        Some(name) => fixtures::by_name(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown fixture '{name}'"))),
        None => StateMatrix::new(io::read_matrix(path)?),
    }
}

fn load_system(
    path: &Path,
    tol: &ToleranceConfig,
) -> ctrlsparse::Result<(StateMatrix, EigenStructure)> {
    let a = read_state(path)?;
    let es = compute_eigenstructure(&a, tol)?;
    Ok((a, es))
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Value {
    io::to_json_rows(m)
}

fn run(cli: Cli) -> ctrlsparse::Result<Output> {
    let tol = tolerances(&cli.tol)?;
    let format: MatrixFormat = cli.format.parse()?;
    match cli.command {
        Command::Analyze { matrix, pattern } => {
            let (_, es) = load_system(&matrix, &tol)?;
            let mut text = serde_json::to_string_pretty(&es.summary()).expect("serialisable");
            if let Some(p) = pattern {
                let pat = io::read_pattern(&p, Some(es.n), None)?;
                text.push('\n');
                text.push_str(&build_ism(&es, &pat, &tol)?.to_dot());
            }
            Ok(Output::ok(text))
        }
        Command::Check(args) => check(args, &tol),
        Command::Construct {
            matrix,
            pattern,
            trace,
        } => {
            let (a, es) = load_system(&matrix, &tol)?;
            let pat = io::read_pattern(&pattern, Some(es.n), None)?;
            let (b, tr) = construct_input_matrix(&es, &pat, &tol)?;
            let controllable = feasibility::is_controllable(&a, &b, &tol)?;
            if trace {
                Ok(Output::json(
                    json!({ "controllable": controllable, "b": matrix_rows(&b), "trace": tr }),
                    controllable,
                ))
            } else {
                Ok(Output {
                    text: io::format_matrix(&b, format),
                    feasible: controllable,
                })
            }
        }
        Command::Macp {
            matrix,
            forbidden,
            baseline,
            columns,
            trace,
        } => {
            let a = read_state(&matrix)?;
            if let Some(Baseline::Gramian) = baseline {
                let sel = gramian_greedy_macp(&a, &tol)?;
                return Ok(Output::json(
                    json!({
                        "algorithm": "gramian_greedy",
                        "states": one_based(&sel.states),
                        "size": sel.states.len(),
                        "ranks": sel.ranks,
                        "seconds": sel.seconds,
                    }),
                    true,
                ));
            }
            let es = compute_eigenstructure(&a, &tol)?;
            if let Some(bpath) = columns {
                let b = io::read_matrix(&bpath)?;
                let (cols, tr) = greedy_column_select(&es, &b, &tol)?;
                return Ok(Output::json(
                    json!({ "columns": one_based(&cols), "size": cols.len(), "gains": tr.gains }),
                    true,
                ));
            }
            let xa = forbidden
                .map(|f| AccessibleSet::from_forbidden(es.n, &io::parse_index_list(&f, es.n)?))
                .transpose()?;
            let (states, tr) = greedy_macp(&es, xa.as_ref(), &tol)?;
            let diag = SparsityPattern::diagonal(es.n, &states)?;
            let (b, _) = construct_input_matrix(&es, &diag, &tol)?;
            let mut v = json!({
                "algorithm": "greedy_macp",
                "states": one_based(&states),
                "size": states.len(),
                "b": matrix_rows(&b),
            });
            if trace {
                v["order"] = json!(one_based(&tr.chosen));
                v["gains"] = json!(tr.gains);
                v["target"] = json!(tr.target);
            }
            Ok(Output::json(v, true))
        }
        Command::Mscp {
            matrix,
            l,
            algorithm,
            trace,
        } => {
            let (_, es) = load_system(&matrix, &tol)?;
            let mut v = if algorithm == MscpAlgorithm::Simple {
                let (p, tr) = simple_greedy_mscp(&es, l, &tol)?;
                let mut v = json!({ "algorithm": "simple_greedy", "sparsity": p.nnz(), "pattern": p.to_json() });
                if trace {
                    v["order"] = json!(tr
                        .chosen
                        .iter()
                        .map(|&(r, c)| [r + 1, c + 1])
                        .collect::<Vec<_>>());
                    v["gains"] = json!(tr.gains);
                }
                v
            } else {
                let (p, res) = two_stage_mscp(&es, l, &tol)?;
                let mut v = json!({
                    "algorithm": "two_stage",
                    "sparsity": p.nnz(),
                    "pattern": p.to_json(),
                    "stage1": one_based(&res.stage1),
                    "certificate": res.certificate,
                });
                if trace {
                    v["h_sets"] =
                        json!(res.h_sets.iter().map(|h| one_based(h)).collect::<Vec<_>>());
                    v["coloring_order"] = json!(one_based(&res.coloring.order));
                }
                v
            };
            v["equivalence"] = json!(equivalence_sufficient(&es, l));
            Ok(Output::json(v, true))
        }
        Command::Micp {
            matrix,
            accessible,
            forbidden,
        } => {
            let (_, es) = load_system(&matrix, &tol)?;
            let xa = match (accessible, forbidden) {
                (Some(a), _) => AccessibleSet::new(es.n, io::parse_index_list(&a, es.n)?)?,
                (None, Some(f)) => {
                    AccessibleSet::from_forbidden(es.n, &io::parse_index_list(&f, es.n)?)?
                }
                (None, None) => AccessibleSet::all(es.n),
            };
            if let Some((i, r)) = feasibility::first_inaccessible_mode(&es, &xa, &tol) {
                let m = &es.modes[i];
                return Ok(Output::json(
                    json!({
                        "feasible": false,
                        "mode": i + 1,
                        "eigenvalue": [m.lambda.re, m.lambda.im],
                        "rank": r,
                        "required": m.multiplicity,
                    }),
                    false,
                ));
            }
            let pattern = micp_min_input_pattern(&es, &xa, &tol)?;
            let (b, _) = construct_input_matrix(&es, &pattern, &tol)?;
            Ok(Output::json(
                json!({
                    "feasible": true,
                    "inputs": es.k_max,
                    "pattern": pattern.to_json(),
                    "b": matrix_rows(&b),
                }),
                true,
            ))
        }
        Command::Gen(g) => {
            let a = match g.kind {
                GenKind::ScaleFree => {
                    if g.n < 2 {
                        return Err(Error::InvalidArgument(
                            "scale-free networks need n >= 2".into(),
                        ));
                    }
                    generate::gen_scale_free(g.n, g.degree_coeff, cli.seed)
                }
                GenKind::Jordan => {
                    if g.n == 0
                        || g.k_max == 0
                        || g.k_max > g.n
                        || !(g.density > 0.0 && g.density <= 1.0)
                    {
                        return Err(Error::InvalidArgument(
                            "jordan needs 1 <= k_max <= n and density in (0, 1]".into(),
                        ));
                    }
                    generate::gen_jordan(g.n, g.k_max, g.density, cli.seed)
                }
            };
            let a = if g.stabilize {
                generate::stabilize(&a)
            } else {
                a
            };
            Ok(Output::ok(io::format_matrix(a.matrix(), format)))
        }
        Command::Bench(b) => run_bench(b, cli.seed, tol),
        Command::Oracle {
            problem,
            matrix,
            l,
            accessible,
        } => {
            let (_, es) = load_system(&matrix, &tol)?;
            match problem {
                OracleProblem::Macp => {
                    let xa = accessible
                        .map(|a| AccessibleSet::new(es.n, io::parse_index_list(&a, es.n)?))
                        .transpose()?;
                    let opt = oracle::brute_macp(&es, xa.as_ref(), &tol)?;
                    Ok(Output::json(
                        json!({ "size": opt.size, "states": one_based(&opt.states), "evaluated": opt.evaluated }),
                        true,
                    ))
                }
                OracleProblem::Mscp => {
                    let l =
                        l.ok_or_else(|| Error::InvalidArgument("oracle mscp needs --l".into()))?;
                    let opt = oracle::brute_mscp(&es, l, &tol)?;
                    Ok(Output::json(
                        json!({ "sparsity": opt.sparsity, "pattern": opt.pattern.to_json(), "nodes": opt.nodes }),
                        true,
                    ))
                }
            }
        }
    }
}

fn check(args: CheckArgs, tol: &ToleranceConfig) -> ctrlsparse::Result<Output> {
    let (a, es) = load_system(&args.matrix, tol)?;
    if let Some(p) = args.pattern {
        let pat = io::read_pattern(&p, Some(es.n), args.l)?;
        let report = pattern_feasible(&es, &pat, tol)?;
        let failing = report.failing_mode.map(|i| {
            let w = report.witnesses.last().expect("failing witness recorded");
            json!({
                "mode": i + 1,
                "eigenvalue": [es.modes[i].lambda.re, es.modes[i].lambda.im],
                "matched": w.size,
                "required": es.modes[i].multiplicity,
            })
        });
        return Ok(Output::json(
            json!({ "feasible": report.feasible, "failing_mode": failing }),
            report.feasible,
        ));
    }
    if let Some(bp) = args.b {
        let b = io::read_matrix(&bp)?;
        let failing = feasibility::first_uncontrollable_mode(&es, &b, tol)?;
        let ok = failing.is_none();
        let kalman = (a.n() <= 30)
            .then(|| feasibility::kalman_rank(&a, &b, 1e-10))
            .transpose()?;
        return Ok(Output::json(
            json!({
                "controllable": ok,
                "failing_mode": failing.map(|(i, r)| json!({ "mode": i + 1, "rank": r, "required": es.modes[i].multiplicity })),
                "kalman_rank": kalman,
            }),
            ok,
        ));
    }
    if let Some(acc) = args.accessible {
        let xa = AccessibleSet::new(es.n, io::parse_index_list(&acc, es.n)?)?;
        let ok = feasibility::micp_feasible(&es, &xa, tol);
        return Ok(Output::json(json!({ "feasible": ok }), ok));
    }
    Err(Error::InvalidArgument(
        "check needs one of --pattern, --b or --accessible".into(),
    ))
}

fn parse_sizes(s: &str) -> ctrlsparse::Result<Vec<usize>> {
    let bad = |e: std::num::ParseIntError| Error::InvalidArgument(format!("sizes '{s}': {e}"));
    if s.contains(':') {
        let parts: Vec<usize> = s
            .split(':')
            .map(|t| t.trim().parse().map_err(bad))
            .collect::<Result<_, _>>()?;
        let (lo, hi, step) = match parts[..] {
            [lo, hi] => (lo, hi, 1),
            [lo, hi, step] => (lo, hi, step),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "sizes '{s}': expected lo:hi[:step]"
                )))
            }
        };
        if step == 0 || lo > hi {
            return Err(Error::InvalidArgument(format!("sizes '{s}': empty range")));
        }
        Ok((lo..=hi).step_by(step).collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(bad))
            .collect()
    }
}

fn run_bench(b: BenchArgs, seed: u64, tol: ToleranceConfig) -> ctrlsparse::Result<Output> {
    let generator = match b.generator {
        GenKind::ScaleFree => GeneratorKind::ScaleFree {
            degree_coeff: b.degree_coeff,
        },
        GenKind::Jordan => GeneratorKind::Jordan {
            k_max: b.k_max,
            density: b.density,
        },
    };
    let l_policy = if b.l == "kmax" {
        LPolicy::KMax
    } else {
        LPolicy::Fixed(
            b.l.parse()
                .map_err(|e| Error::InvalidArgument(format!("--l '{}': {e}", b.l)))?,
        )
    };
    let algorithms: Vec<Algorithm> = b
        .algorithms
        .split(',')
        .map(|a| a.trim().parse())
        .collect::<Result<_, _>>()?;
    let cfg = BenchConfig {
        generator,
        sizes: parse_sizes(&b.sizes)?,
        trials: b.trials,
        l_policy,
        seed,
        algorithms,
        tol,
    };
    let records = bench::run_benchmark(&cfg)?;
    let mut buf = Vec::new();
    bench::write_csv(&records, &mut buf)?;
    match b.out {
        Some(path) => {
            std::fs::write(&path, &buf)?;
            Ok(Output::ok(format!(
                "wrote {} rows to {}",
                records.len(),
                path.display()
            )))
        }
        None => Ok(Output::ok(String::from_utf8(buf).expect("CSV is UTF-8"))),
    }
}
