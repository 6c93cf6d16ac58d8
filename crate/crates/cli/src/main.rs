use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use intent_core::corpus::{check_corpus_with, query_label};
use intent_core::inference::DEFAULT_CONTEXT_CAP;
use intent_core::intent::{
    check_capacity, evaluate_query, explain, verdicts_to_json, Definition, IntentConfig, Verdict,
};
use intent_core::model::{Event, Intervention, Value, VariableId};
use intent_core::number::format_probability;
use intent_core::scenario::{parse_as, Query, Scenario, SourceFormat};

const INVALID: u8 = 1;
const TOO_LARGE: u8 = 2;
const INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "intent", version, about = "Decide whether an agent intended a result")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario and report which capacity requirements it meets
    Validate { path: PathBuf },
    /// Evaluate the scenario's queries, or one query given by flags
    Eval(EvalArgs),
    /// Check every bundled scenario against its golden verdicts
    Corpus {
        /// Override tau in every scenario
        #[arg(long)]
        tau: Option<f64>,
    },
}

#[derive(Args)]
struct EvalArgs {
    path: PathBuf,
    /// direct, perspective, means_end, oblique, ulterior or moral_responsibility
    #[arg(long)]
    query: Option<String>,
    /// Result event, `Var=val` or `A=x&B=y`
    #[arg(long)]
    result: Option<String>,
    /// Action assignment `Var=val`; repeatable
    #[arg(long)]
    action: Vec<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Print one JSON document instead of the table
    #[arg(long)]
    json: bool,
    /// Print the full clause-by-clause report for each verdict
    #[arg(long, conflicts_with = "json")]
    explain: bool,
}

struct Failure {
    code: u8,
    message: String,
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: INVALID, message: message.into() }
}

fn context_cap() -> Result<u64, Failure> {
    match std::env::var("INTENT_CONTEXT_CAP") {
        Err(_) => Ok(DEFAULT_CONTEXT_CAP),
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(invalid(format!("INTENT_CONTEXT_CAP must be a positive integer, got `{s}`"))),
        },
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let src = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_as(&src, SourceFormat::from_path(path)).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn validate(path: &Path) -> Result<(), Failure> {
    let scenario = load(path)?;
    println!("{}: valid", path.display());
    print!("{}", check_capacity(&scenario));
    Ok(())
}

fn literal(s: &str) -> Result<(VariableId, Value), Failure> {
    let (var, value) = s.split_once('=').ok_or_else(|| invalid(format!("expected Var=value, got `{s}`")))?;
    let (var, value) = (VariableId::new(var.trim()), Value::new(value.trim()));
    if !var.is_well_formed() || !value.is_well_formed() {
        return Err(invalid(format!("expected Var=value, got `{s}`")));
    }
    Ok((var, value))
}

fn parse_event(s: &str) -> Result<Event, Failure> {
    let lits = s.split('&').map(literal).collect::<Result<Vec<_>, _>>()?;
    Event::new(lits).map_err(|e| invalid(format!("bad result `{s}`: {e}")))
}

fn parse_action(parts: &[String]) -> Result<Intervention, Failure> {
    let mut out = Intervention::new();
    for part in parts.iter().flat_map(|p| p.split(',')) {
        let (var, value) = literal(part)?;
        if out.get(var.as_str()).is_some() {
            return Err(invalid(format!("action variable {var} given twice")));
        }
        out.set(var, value);
    }
    Ok(out)
}

fn config_line(c: &IntentConfig) -> String {
    format!(
        "config: tau = {}, epsilon = {}, tolerance = {}, exclude_avoided_results = {}, knowledge = {}",
        format_probability(c.tau),
        format_probability(c.epsilon),
        format_probability(c.tolerance),
        c.exclude_avoided_results,
        c.knowledge_mode.keyword()
    )
}

fn table_line(q: &Query, v: &Verdict) -> String {
    let status = if v.holds() { "HOLDS" } else { "does not hold" };
    let clauses: Vec<String> = v
        .clauses()
        .iter()
        .map(|c| format!("{} {}", c.id, if c.holds { "pass" } else { "FAILED" }))
        .collect();
    format!("{}: {status} [{}]", query_label(q), clauses.join(", "))
}

fn eval(args: &EvalArgs) -> Result<(), Failure> {
    let scenario = load(&args.path)?;
    let mut config = scenario.config.clone();
    if let Some(t) = args.tau {
        config.tau = t;
    }
    if let Some(e) = args.epsilon {
        config.epsilon = e;
    }
    config.context_cap = context_cap()?;
    config.validate().map_err(|e| invalid(format!("bad-threshold: {e}")))?;

    let queries = match &args.query {
        Some(name) => {
            let definition = Definition::from_keyword(name).ok_or_else(|| invalid(format!("unknown query `{name}`")))?;
            let result = args.result.as_deref().ok_or_else(|| invalid("--query needs --result"))?;
            let action = if args.action.is_empty() { None } else { Some(parse_action(&args.action)?) };
            vec![Query { definition, result: parse_event(result)?, action }]
        }
        None if args.result.is_some() || !args.action.is_empty() => {
            return Err(invalid("--result and --action need --query"));
        }
        None if scenario.queries.is_empty() => return Err(invalid("scenario declares no queries")),
        None => scenario.queries.clone(),
    };

    let mut verdicts = Vec::with_capacity(queries.len());
    for q in &queries {
        let v = evaluate_query(&scenario, q, &config).map_err(|e| Failure {
            code: if e.is_too_large() { TOO_LARGE } else { INVALID },
            message: format!("{}: {e}", query_label(q)),
        })?;
        verdicts.push(v);
    }

    if args.json {
        print!("{}", verdicts_to_json(&verdicts));
    } else if args.explain {
        let reports: Vec<String> = verdicts.iter().map(explain).collect();
        print!("{}", reports.join("\n"));
    } else {
        println!("{}", config_line(&config));
        for (q, v) in queries.iter().zip(&verdicts) {
            println!("{}", table_line(q, v));
        }
    }
    Ok(())
}

fn corpus(tau: Option<f64>) -> Result<(), Failure> {
    let report = check_corpus_with(&|c: &mut IntentConfig| {
        if let Some(t) = tau {
            c.tau = t;
        }
    });
    print!("{report}");
    if report.all_match() {
        Ok(())
    } else {
        Err(invalid(format!("{} of {} scenarios differ from their goldens",
            report.entries.len() - report.matched(), report.entries.len())))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { path } => validate(&path),
        Command::Eval(args) => eval(&args),
        Command::Corpus { tau } => corpus(tau),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(INVALID) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(INTERNAL),
    }
}
