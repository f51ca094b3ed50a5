//! The `cqf` command line driver.
//!
//! Exit codes: 0 success, 1 domain error (bad schema, no path, typing
//! error), 2 usage error. Results go to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::evaluator::{eval_expr, eval_path, parse_population, EvalResult, Value};
use crate::navigator::{apply_move, start_session, NavMove, Origin};
use crate::pathfinder::run_ppq;
use crate::querybuilder::{parse_path, parse_query};
use crate::schema::{
    importance_order, name_phrase, parse_schema, validate_schema, verbalize_path, Direction, SchemaGraph, Step,
};
use crate::service::{server, Config};
use crate::spider::{prune_branch, spider};
use crate::sqlgen::{emit_ddl, emit_sql};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cqf",
    version,
    about = "Conceptual query formulation over fact-oriented schemas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a schema; prints violations to stderr.
    Validate {
        #[arg(short, long)]
        schema: PathBuf,
    },
    /// List object types in importance order.
    ObjectTypes {
        #[arg(short, long)]
        schema: PathBuf,
    },
    /// Point-to-point query: ranked paths per consecutive pair of points.
    Ppq {
        #[arg(short, long)]
        schema: PathBuf,
        #[arg(required = true, num_args = 2..)]
        points: Vec<String>,
        #[arg(long, default_value_t = crate::pathfinder::DEFAULT_BATCH)]
        batch: usize,
        /// Number of MORE presses per segment.
        #[arg(long, default_value_t = 0)]
        more: usize,
    },
    /// Spider query around an object type.
    Spider {
        #[arg(short, long)]
        schema: PathBuf,
        object_type: String,
        /// Remove the root branch at this index; repeatable, applied in order.
        #[arg(long)]
        prune: Vec<usize>,
    },
    /// Query by navigation driven by a move script.
    Nav {
        #[arg(short, long)]
        schema: PathBuf,
        /// An object type name or a file holding a path.
        #[arg(long)]
        start: String,
        /// One move per line: `refine <FT> <fwd|rev>` or `generalize`.
        #[arg(long)]
        moves: Option<PathBuf>,
    },
    /// Evaluate a path or query against a population.
    Eval {
        #[arg(short, long)]
        schema: PathBuf,
        #[arg(short, long)]
        population: PathBuf,
        #[arg(long, conflicts_with = "query", required_unless_present = "query")]
        path: Option<String>,
        #[arg(long)]
        query: Option<PathBuf>,
    },
    /// Lower a query to SQL.
    Sql {
        #[arg(short, long)]
        schema: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// Print the CREATE TABLE statements first.
        #[arg(long)]
        ddl: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "PORT")]
        port: Option<u16>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DOMAIN
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load_schema(path: &Path) -> Result<SchemaGraph, Failure> {
    let g = parse_schema(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let violations = validate_schema(&g);
    if let Some(v) = violations.first() {
        return Err(Failure(format!("{}: {v}", path.display())));
    }
    Ok(g)
}

fn execute(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Validate { schema } => {
            load_schema(&schema)?;
        }
        Command::ObjectTypes { schema } => {
            let g = load_schema(&schema)?;
            for ot in importance_order(&g) {
                writeln!(out, "{ot}")?;
            }
        }
        Command::Ppq {
            schema,
            points,
            batch,
            more,
        } => {
            let g = Arc::new(load_schema(&schema)?);
            let ids = points.iter().map(|p| g.resolve(p)).collect::<Result<Vec<_>, _>>()?;
            let mut r = run_ppq(Arc::clone(&g), &ids, batch)?;
            for k in 0..r.segments.len() {
                for _ in 0..more {
                    r.more(k)?;
                }
            }
            for seg in &r.segments {
                writeln!(out, "## {} -> {}", seg.enumerator.from(), seg.enumerator.to())?;
                for wp in &seg.offered {
                    writeln!(out, "{}\t{}", wp.weight, wp.verbalization)?;
                }
            }
        }
        Command::Spider {
            schema,
            object_type,
            prune,
        } => {
            let g = load_schema(&schema)?;
            let root = g.resolve(&object_type)?;
            let mut t = spider(&g, &root)?;
            for i in prune {
                t = prune_branch(&t, &[], i)?;
            }
            for (i, b) in t.branches.iter().enumerate() {
                let p = crate::pathfinder::SchemaPath::new(root.0.clone(), vec![b.step.clone()]);
                writeln!(out, "{i}\t{}\t{}", b.step, verbalize_path(&g, &p)?)?;
            }
        }
        Command::Nav { schema, start, moves } => {
            let g = load_schema(&schema)?;
            let origin = if Path::new(&start).is_file() {
                Origin::Path(parse_path(&g, &read(Path::new(&start))?)?)
            } else {
                Origin::ObjectType(g.resolve(&start)?)
            };
            let mut node = start_session(&g, origin)?;
            writeln!(out, "{}", verbalize_path(&g, &node.focus)?)?;
            if let Some(script) = moves {
                for (n, line) in read(&script)?.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let m = parse_move(line)
                        .ok_or_else(|| Failure(format!("{}:{}: bad move `{line}`", script.display(), n + 1)))?;
                    node = apply_move(&g, &node, &m)?;
                    writeln!(out, "{}", verbalize_path(&g, &node.focus)?)?;
                }
            }
        }
        Command::Eval {
            schema,
            population,
            path,
            query,
        } => {
            let g = load_schema(&schema)?;
            let pop = parse_population(&read(&population)?, &g)?;
            let result = match (path, query) {
                (Some(text), _) => EvalResult::Relation(eval_path(&g, &pop, &parse_path(&g, &text)?)?),
                (None, Some(file)) => eval_expr(&g, &pop, &parse_query(&g, &read(&file)?)?)?,
                (None, None) => unreachable!("clap requires one"),
            };
            write_result(out, &result)?;
        }
        Command::Sql { schema, query, ddl } => {
            let g = load_schema(&schema)?;
            let e = parse_query(&g, &read(&query)?)?;
            let sql = emit_sql(&g, &e)?;
            if ddl {
                out.write_all(emit_ddl(&g)?.as_bytes())?;
            }
            writeln!(out, "{sql}")?;
        }
        Command::Serve { port } => {
            let mut config = Config::from_env()?;
            if let Some(p) = port {
                config.port = p;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::run(config))?;
        }
    }
    Ok(())
}

fn parse_move(line: &str) -> Option<NavMove> {
    let words: Vec<&str> = line.split_whitespace().collect();
    match words.as_slice() {
        ["generalize"] => Some(NavMove::Generalize),
        ["refine", ft, dir] => Some(NavMove::Refine {
            step: Step::new(ft, Direction::parse(dir)?),
        }),
        _ => None,
    }
}

fn cell(v: &Value) -> String {
    v.to_string()
}

fn write_result(out: &mut dyn Write, r: &EvalResult) -> std::io::Result<()> {
    match r {
        EvalResult::Relation(rel) => {
            writeln!(
                out,
                "{}\t{}",
                name_phrase(rel.head_type.as_str()),
                name_phrase(rel.tail_type.as_str())
            )?;
            for (a, b) in &rel.pairs {
                writeln!(out, "{}\t{}", cell(a), cell(b))?;
            }
        }
        EvalResult::Count { count } => writeln!(out, "{count}")?,
        EvalResult::Table(t) => out.write_all(t.to_tsv().as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_str(&["cqf"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["cqf", "ppq", "-s", "x.cqs", "President"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["cqf", "--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_file_is_a_domain_error() {
        let (code, out, err) = run_str(&["cqf", "validate", "-s", "/nonexistent/el1.cqs"]);
        assert_eq!(code, EXIT_DOMAIN);
        assert!(out.is_empty());
        assert!(err.contains("nonexistent"));
    }

    #[test]
    fn moves_parse() {
        assert_eq!(parse_move("generalize"), Some(NavMove::Generalize));
        assert_eq!(
            parse_move("refine FT2 fwd"),
            Some(NavMove::Refine { step: Step::fwd("FT2") })
        );
        assert_eq!(parse_move("refine FT2"), None);
    }
}
