use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fcq::cqdecomp::{analyze, cyclicity_conditions, prefactor, Cyclic, QueryDecomposition};
use fcq::eval::{Evaluator, DEFAULT_TUPLE_BUDGET};
use fcq::normalize::normalize;
use fcq::pattern::{pattern_acyclic, ConcatTree};
use fcq::query::{oracle_eval, EvalError, DEFAULT_ORACLE_BUDGET};
use fcq::spanner::{pseudo_acyclic_to_fccq, sercq_to_fccq, Sercq};
use fcq::{FcCq, Variable, WordIndex};

#[derive(Parser)]
#[command(name = "fcq", version, about = "Acyclicity, decomposition and evaluation of FC[REG]-CQs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct QueryArgs {
    /// Query, e.g. "Ans(x) :- U = x.y.x, y in /a*/"
    #[arg(short, long)]
    query: String,
    /// Factor out subpatterns shared by two atoms before deciding.
    #[arg(long)]
    prefactor: bool,
}

#[derive(clap::Args)]
struct WordArgs {
    #[arg(short, long, conflicts_with = "word_file", required_unless_present = "word_file")]
    word: Option<String>,
    /// Read the word from a file; one trailing newline is dropped.
    #[arg(long)]
    word_file: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide acyclicity and report the violated conditions.
    Check {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the normalized query, its decomposition or its trees.
    Decompose {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long, value_enum, default_value_t = Emit::Decomposition)]
        emit: Emit,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Model checking: prints true or false, exit status 0 or 1.
    Eval {
        #[command(flatten)]
        q: QueryArgs,
        #[command(flatten)]
        w: WordArgs,
        /// Tuple budget for materialized relations.
        #[arg(long, default_value_t = DEFAULT_TUPLE_BUDGET)]
        budget: usize,
    },
    /// Enumerate the answers, one per line.
    Enum {
        #[command(flatten)]
        q: QueryArgs,
        #[command(flatten)]
        w: WordArgs,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_TUPLE_BUDGET)]
        budget: usize,
    },
    /// Compile a SERCQ into a query realizing it.
    Convert {
        /// e.g. "eq[x,y] join( S* x{S+} a S* ; S* y{S+} b S* )"
        #[arg(short, long)]
        sercq: String,
        /// Use the direct construction for pseudo-acyclic SERCQs.
        #[arg(long)]
        pseudo: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Timing series as CSV: experiment,n,seconds.
    Bench {
        #[arg(long, value_enum, default_value_t = Experiment::All)]
        experiment: Experiment,
        /// Largest n for the pattern series; the enumeration series goes to 8x this.
        #[arg(long, default_value_t = 64)]
        limit: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Normalized,
    Decomposition,
    JoinTree,
    ConcatTree,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Pattern,
    Enum,
    All,
}

/// Failure with an exit status: 1 negative answer, 2 bad input, 3 budget.
struct Fail(u8, String);

impl From<EvalError> for Fail {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Budget { .. } | EvalError::TupleBudget { .. } => Fail(3, e.to_string()),
            _ => Fail(2, e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let status = match run(cli.command, &mut out) {
        Ok(()) => 0,
        Err(Fail(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("fcq: {msg}");
            }
            code
        }
    };
    if out.flush().is_err() {
        return ExitCode::from(2);
    }
    ExitCode::from(status)
}

fn parse_query(q: &QueryArgs) -> Result<FcCq, Fail> {
    let parsed = FcCq::parse(&q.query).map_err(|e| Fail(2, e.to_string()))?;
    Ok(if q.prefactor { prefactor(&parsed) } else { parsed })
}

fn read_word(w: &WordArgs) -> Result<Vec<u8>, Fail> {
    match (&w.word, &w.word_file) {
        (Some(s), _) => Ok(s.as_bytes().to_vec()),
        (None, Some(path)) => {
            let mut bytes = std::fs::read(path).map_err(|e| Fail(2, format!("{}: {e}", path.display())))?;
            if bytes.last() == Some(&b'\n') {
                bytes.pop();
            }
            Ok(bytes)
        }
        (None, None) => Err(Fail(2, "no word given".into())),
    }
}

fn io_err(e: io::Error) -> Fail {
    Fail(2, e.to_string())
}

fn run(cmd: Command, out: &mut impl Write) -> Result<(), Fail> {
    match cmd {
        Command::Check { q, format } => check(&parse_query(&q)?, format, out),
        Command::Decompose { q, emit, format } => decompose(&parse_query(&q)?, emit, format, out),
        Command::Eval { q, w, budget } => {
            let query = parse_query(&q)?;
            let word = read_word(&w)?;
            let yes = match analyze(&query) {
                Ok(qd) => Evaluator::new(&qd, &WordIndex::new(&word), budget)?.model_check(),
                Err(_) => {
                    eprintln!("fcq: query is cyclic, falling back to exhaustive search");
                    !oracle_eval(&query, &word, DEFAULT_ORACLE_BUDGET)?.is_empty()
                }
            };
            writeln!(out, "{yes}").map_err(io_err)?;
            if yes {
                Ok(())
            } else {
                Err(Fail(1, String::new()))
            }
        }
        Command::Enum { q, w, limit, format, budget } => {
            let query = parse_query(&q)?;
            let word = read_word(&w)?;
            let limit = limit.unwrap_or(usize::MAX);
            let answers: Box<dyn FnOnce(&mut dyn FnMut(Vec<Vec<u8>>) -> io::Result<()>) -> Result<(), Fail>> =
                match analyze(&query) {
                    Ok(qd) => Box::new(move |emit| {
                        let idx = WordIndex::new(&word);
                        let ev = Evaluator::new(&qd, &idx, budget)?;
                        for a in ev.answers().take(limit) {
                            emit(a).map_err(io_err)?;
                        }
                        Ok(())
                    }),
                    Err(_) => {
                        eprintln!("fcq: query is cyclic, falling back to exhaustive search");
                        let all = oracle_eval(&query, &word, DEFAULT_ORACLE_BUDGET)?;
                        Box::new(move |emit| {
                            for a in all.into_iter().take(limit) {
                                emit(a).map_err(io_err)?;
                            }
                            Ok(())
                        })
                    }
                };
            if format == Format::Json {
                let mut rows = Vec::new();
                answers(&mut |a| {
                    rows.push(Value::from(a.iter().map(|v| String::from_utf8_lossy(v).into_owned()).collect::<Vec<_>>()));
                    Ok(())
                })?;
                writeln!(out, "{}", Value::Array(rows)).map_err(io_err)
            } else {
                answers(&mut |a| {
                    let cells: Vec<String> = a.iter().map(|v| quote(v)).collect();
                    writeln!(out, "{}", cells.join("\t"))
                })
            }
        }
        Command::Convert { sercq, pseudo, format } => {
            let p = Sercq::parse(&sercq).map_err(|e| Fail(2, e.to_string()))?;
            if pseudo {
                let d = pseudo_acyclic_to_fccq(&p).map_err(|e| Fail(2, e.to_string()))?;
                match format {
                    Format::Dot => write!(out, "{}", d.tree.to_dot()),
                    Format::Json => writeln!(out, "{}", json!({ "query": d.query2.to_string(), "acyclic": true })),
                    _ => writeln!(out, "{}", d.query2),
                }
                .map_err(io_err)
            } else {
                let q = sercq_to_fccq(&p).map_err(|e| Fail(2, e.to_string()))?;
                let acyclic = analyze(&q).is_ok();
                match format {
                    Format::Json => writeln!(out, "{}", json!({ "query": q.to_string(), "acyclic": acyclic })),
                    _ => writeln!(out, "{q}"),
                }
                .map_err(io_err)
            }
        }
        Command::Bench { experiment, limit, format } => bench(experiment, limit, format, out),
    }
}

fn quote(v: &[u8]) -> String {
    let mut s = String::from("\"");
    for c in String::from_utf8_lossy(v).chars() {
        if c == '"' || c == '\\' {
            s.push('\\');
        }
        s.push(c);
    }
    s.push('"');
    s
}

/// The smallest condition number that fired.
fn first_condition(c: &Cyclic) -> String {
    match c {
        Cyclic::Conditions(r) => {
            let n = if r.weakly_cyclic {
                1
            } else if !r.cyclic_rhs.is_empty() {
                2
            } else if !r.shared_over_three.is_empty() {
                3
            } else {
                4
            };
            format!("cyclic (condition {n})")
        }
        Cyclic::AtomDecomposition { .. } => "cyclic (atom decomposition)".into(),
    }
}

fn check(q: &FcCq, format: Format, out: &mut impl Write) -> Result<(), Fail> {
    let result = analyze(q);
    let report = cyclicity_conditions(&normalize(q).query);
    match format {
        Format::Json => {
            let v = json!({
                "acyclic": result.is_ok(),
                "verdict": match &result { Ok(_) => "acyclic".to_string(), Err(c) => first_condition(c) },
                "conditions": {
                    "weakly_cyclic": report.weakly_cyclic,
                    "cyclic_rhs": report.cyclic_rhs,
                    "shared_over_three": report.shared_over_three,
                    "shared_three_long": report.shared_three_long,
                },
            });
            writeln!(out, "{v}").map_err(io_err)
        }
        _ => match result {
            Ok(_) => writeln!(out, "acyclic").map_err(io_err),
            Err(c) => {
                writeln!(out, "{}", first_condition(&c)).map_err(io_err)?;
                if let Cyclic::AtomDecomposition { .. } = c {
                    writeln!(out, "{c}").map_err(io_err)?;
                }
                writeln!(out, "{report}").map_err(io_err)
            }
        },
    }
}

fn decompose(q: &FcCq, emit: Emit, format: Format, out: &mut impl Write) -> Result<(), Fail> {
    if emit == Emit::Normalized {
        let n = normalize(q);
        return match format {
            Format::Json => {
                let prov: serde_json::Map<String, Value> =
                    n.provenance.iter().map(|(v, o)| (v.to_string(), Value::from(format!("{o:?}")))).collect();
                writeln!(out, "{}", json!({ "query": n.query.to_string(), "provenance": prov }))
            }
            _ => writeln!(out, "{}", n.query),
        }
        .map_err(io_err);
    }
    let qd = match analyze(q) {
        Ok(qd) => qd,
        Err(c) => {
            writeln!(out, "{}", first_condition(&c)).map_err(io_err)?;
            return Err(Fail(1, c.to_string()));
        }
    };
    match emit {
        Emit::Normalized => unreachable!(),
        Emit::Decomposition => match format {
            Format::Json => {
                let atoms: Vec<String> = qd.query2.equations.iter().map(|e| e.to_string()).collect();
                let cons: Vec<String> = qd.query2.constraints.iter().map(|c| c.to_string()).collect();
                writeln!(out, "{}", json!({ "query": qd.query2.to_string(), "atoms": atoms, "constraints": cons }))
            }
            _ => writeln!(out, "{}", qd.query2),
        },
        Emit::JoinTree => match format {
            Format::Dot => write!(out, "{}", qd.tree.to_dot()),
            Format::Json => {
                let nodes: Vec<String> = qd.tree.nodes.iter().map(|e| e.to_string()).collect();
                let v = json!({ "nodes": nodes, "edges": qd.tree.edges, "block": qd.tree.block });
                writeln!(out, "{v}")
            }
            _ => write_join_tree(&qd, out),
        },
        Emit::ConcatTree => {
            for (i, d) in qd.blocks.iter().enumerate() {
                let t = ConcatTree::new(d);
                match format {
                    Format::Dot => write!(out, "{}", t.to_dot(&format!("atom{i}"))),
                    Format::Json => writeln!(out, "{}", json!({ "atom": i, "bracketing": d.bracketing().to_string() })),
                    _ => writeln!(out, "atom {i}: {} = {}", d.root, d.bracketing()),
                }
                .map_err(io_err)?;
            }
            Ok(())
        }
    }
    .map_err(io_err)
}

fn write_join_tree(qd: &QueryDecomposition, out: &mut impl Write) -> io::Result<()> {
    for (k, e) in qd.tree.nodes.iter().enumerate() {
        writeln!(out, "n{k} [atom {}]: {e}", qd.tree.block[k])?;
    }
    for (a, b) in &qd.tree.edges {
        writeln!(out, "n{a} -- n{b}")?;
    }
    Ok(())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed().as_secs_f64())
}

/// Least-squares slope of `ln seconds` against `ln n`.
fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, t)| ((n as f64).ln(), t.max(1e-9).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn bench(experiment: Experiment, limit: usize, format: Format, out: &mut impl Write) -> Result<(), Fail> {
    let mut rows: Vec<(&str, usize, f64)> = Vec::new();
    let sizes = |max: usize| {
        let mut v = Vec::new();
        let mut n = 1;
        while n <= max {
            v.push(n);
            n *= 2;
        }
        v
    };
    if experiment != Experiment::Enum {
        for n in sizes(limit) {
            let alpha: Vec<Variable> =
                (0..n).flat_map(|_| [Variable::named("x1"), Variable::named("x2")]).collect();
            // Best of three runs.
            let t = (0..3)
                .map(|_| timed(|| pattern_acyclic(&alpha).expect("terminal-free").is_some()).1)
                .fold(f64::INFINITY, f64::min);
            rows.push(("pattern", n, t));
        }
    }
    if experiment != Experiment::Pattern {
        let q = FcCq::parse("Ans(x, y) :- U = x.y").expect("fixed query");
        let qd = analyze(&q).expect("acyclic");
        for n in sizes(limit * 8).into_iter().filter(|&n| n >= 8) {
            let w = vec![b'a'; n];
            let idx = WordIndex::new(&w);
            let (ev, pre) = timed(|| Evaluator::new(&qd, &idx, DEFAULT_TUPLE_BUDGET).expect("small"));
            let (count, total) = timed(|| ev.answers().count());
            rows.push(("enum_preprocess", n, pre));
            rows.push(("enum_delay", n, total / count.max(1) as f64));
        }
    }
    match format {
        Format::Json => {
            let v: Vec<Value> = rows.iter().map(|(e, n, t)| json!({ "experiment": e, "n": n, "seconds": t })).collect();
            writeln!(out, "{}", Value::Array(v)).map_err(io_err)?;
        }
        _ => {
            writeln!(out, "experiment,n,seconds").map_err(io_err)?;
            for (e, n, t) in &rows {
                writeln!(out, "{e},{n},{t:.9}").map_err(io_err)?;
            }
        }
    }
    for (name, threshold) in [("pattern", 8.0), ("enum_delay", 4.0)] {
        let pts: Vec<(usize, f64)> = rows.iter().filter(|r| r.0 == name && r.1 >= 4).map(|r| (r.1, r.2)).collect();
        if pts.len() >= 2 {
            let s = loglog_slope(&pts);
            eprintln!("{name}: log-log slope {s:.2} (threshold {threshold})");
            if s > threshold {
                eprintln!("warning: {name} slope {s:.2} exceeds {threshold}");
            }
        }
    }
    Ok(())
}
