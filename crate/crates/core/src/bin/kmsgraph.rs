use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use kmsgraph::fixtures::{check_document, FIXTURES};
use kmsgraph::report::{
    evaluate_query, parse_beta, parse_range, parse_trace, sweep, sweep_csv, verify, AnalysisReport,
};
use kmsgraph::{parse_graph, Algebra, Error, GraphAnalysis, MultiGraph, ParseError};

#[derive(Parser)]
#[command(name = "kmsgraph", version, about = "KMS phase structure of graph Toeplitz and Cuntz-Pimsner algebras")]
struct Cli {
    /// Graph description (JSON with `vertices` and `matrix` or `edges`).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for sampled monomials.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgebraArg {
    Toeplitz,
    Cuntz,
    Oa,
    All,
}

impl AlgebraArg {
    fn algebras(self) -> Vec<Algebra> {
        match self {
            AlgebraArg::Toeplitz => vec![Algebra::Toeplitz],
            AlgebraArg::Cuntz => vec![Algebra::CuntzPimsner],
            AlgebraArg::Oa => vec![Algebra::Oa],
            AlgebraArg::All => Algebra::ALL.to_vec(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Entropies, phase diagram and KMS simplices.
    Analyze {
        /// Inverse temperature; a real number or `log:<x>`. Repeatable.
        #[arg(long)]
        beta: Vec<String>,
        #[arg(long, value_enum, default_value_t = AlgebraArg::All)]
        algebra: AlgebraArg,
    },
    /// Simplex dimensions over a grid of β, as CSV.
    Sweep {
        /// `lo:hi:step` with lo > 0 and step > 0.
        #[arg(long)]
        range: String,
        #[arg(long, value_enum, default_value_t = AlgebraArg::All)]
        algebra: AlgebraArg,
    },
    /// Evaluates a KMS state on monomials described in a query file.
    EvalState {
        #[arg(long)]
        query: PathBuf,
    },
    /// Checks the KMS condition on a truncated Fock representation.
    Verify {
        #[arg(long)]
        beta: String,
        /// Trace as inline JSON or a file path; defaults to every extreme state at β.
        #[arg(long)]
        trace: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Writes the bundled example graphs, or checks them against recomputed output.
    Fixtures {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        check: bool,
        /// Directory of fixture files to check; the bundled set when omitted.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

enum Failure {
    Parse(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(p) => Failure::Parse(p.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Parse(e.to_string())
    }
}

fn read(path: &FsPath) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn load_graph(cli: &Cli) -> Result<MultiGraph, Failure> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| Failure::Parse("field `--input`: required for this command".into()))?;
    Ok(parse_graph(&read(path)?)?)
}

fn parse_json(text: &str) -> Result<Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Parse(ParseError::Json(e.to_string()).to_string()))
}

fn emit(format: Format, json: &Value, text: impl FnOnce() -> Result<String, Failure>) -> Result<(), Failure> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(json).expect("serializable")),
        Format::Text => print!("{}", text()?),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    match &cli.command {
        Command::Analyze { beta, algebra } => {
            let betas = beta.iter().map(|b| parse_beta(b)).collect::<Result<Vec<_>, _>>()?;
            let report = AnalysisReport::build(load_graph(cli)?, &betas, &algebra.algebras())?;
            emit(cli.format, &report.to_json()?, || Ok(report.to_text()?))?;
        }
        Command::Sweep { range, algebra } => {
            let (lo, hi, step) = parse_range(range)?;
            let analysis = GraphAnalysis::new(load_graph(cli)?)?;
            print!("{}", sweep_csv(&sweep(&analysis, lo, hi, step, &algebra.algebras())?));
        }
        Command::EvalState { query } => {
            let analysis = GraphAnalysis::new(load_graph(cli)?)?;
            let q = parse_json(&read(query)?)?;
            let result = evaluate_query(&analysis, &q)?;
            emit(cli.format, &result.to_json(), || Ok(result.to_text()))?;
        }
        Command::Verify { beta, trace, depth, trials } => {
            let beta = parse_beta(beta)?;
            let analysis = GraphAnalysis::new(load_graph(cli)?)?;
            let tau = match trace {
                Some(t) => {
                    let text = if FsPath::new(t).is_file() { read(FsPath::new(t))? } else { t.clone() };
                    Some(parse_trace(analysis.graph(), &parse_json(&text)?, "trace")?)
                }
                None => None,
            };
            let summary = verify(&analysis, beta, tau.as_ref(), *depth, *trials, cli.seed)?;
            let json = summary.to_json();
            emit(cli.format, &json, || {
                let mut s = String::new();
                for (k, v) in json.as_object().expect("object") {
                    s.push_str(&format!("{k}: {v}\n"));
                }
                Ok(s)
            })?;
        }
        Command::Fixtures { out, check, dir } => {
            if let Some(out) = out {
                fs::create_dir_all(out).map_err(|e| Failure::Other(format!("{}: {e}", out.display())))?;
                for f in FIXTURES {
                    let path = out.join(format!("{}.json", f.name));
                    let body = serde_json::to_string_pretty(&f.to_json()).expect("serializable");
                    fs::write(&path, body + "\n").map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
                }
                eprintln!("wrote {} fixtures to {}", FIXTURES.len(), out.display());
            }
            if *check {
                return check_fixtures(dir.as_deref().or(out.as_deref()));
            }
            if out.is_none() {
                for f in FIXTURES {
                    println!("{}\t{}", f.name, f.description);
                }
            }
        }
    }
    Ok(true)
}

fn check_fixtures(dir: Option<&FsPath>) -> Result<bool, Failure> {
    let docs: Vec<(String, Value)> = match dir {
        None => FIXTURES.iter().map(|f| (f.name.to_string(), f.to_json())).collect(),
        Some(dir) => {
            let mut paths: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            paths
                .into_iter()
                .map(|p| Ok((p.display().to_string(), parse_json(&read(&p)?)?)))
                .collect::<Result<_, Failure>>()?
        }
    };
    let mut ok = true;
    for (name, doc) in &docs {
        let diffs = check_document(doc)?;
        if diffs.is_empty() {
            println!("ok   {name}");
        } else {
            ok = false;
            println!("FAIL {name}");
            for d in diffs {
                println!("     {d}");
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
