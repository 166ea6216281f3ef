use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as _};

use vframe_core::compiler::{build_tree, graph_search_baseline, lookup, order_factors_by_heatmap, prune_for_deadline, HeatMap};
use vframe_core::formats::{
    heatmap_from_rows, parse_contexts, parse_library, parse_scenario, read_heatmap_report, read_trace,
    write_heatmap_report, write_trace, Library, TraceRow,
};
use vframe_core::runtime::{run_simulation, switch_count, total_cost, KnowledgeBase, RunOptions, RuntimeError};
use vframe_core::CompileError;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_DEADLINE: u8 = 3;
pub const EXIT_ORACLE: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(fail(EXIT_PARSE))
}

fn load_library(path: &Path) -> Result<Library, Failure> {
    parse_library(&read(path)?)
        .with_context(|| format!("in {}", path.display()))
        .map_err(fail(EXIT_PARSE))
}

fn load_heatmap(path: &Path) -> Result<HeatMap, Failure> {
    read_heatmap_report(read(path)?.as_bytes())
        .map_err(|e| anyhow!("{}: {e}", path.display()))
        .map_err(fail(EXIT_PARSE))
}

fn ordering(lib: &Library, heatmap: Option<&Path>) -> Result<Vec<String>, Failure> {
    let graph = lib.graph().map_err(|e| fail(EXIT_PARSE)(e.into()))?;
    let base = lib.factor_ordering(&graph);
    Ok(match heatmap {
        Some(p) => order_factors_by_heatmap(&load_heatmap(p)?, &base),
        None => base,
    })
}

fn runtime_failure(e: RuntimeError) -> Failure {
    let code = match e {
        RuntimeError::DeadlineInfeasible { .. } => EXIT_DEADLINE,
        RuntimeError::Compile(CompileError::MissingFromOrdering(_) | CompileError::DuplicateInOrdering(_))
        | RuntimeError::Graph(_)
        | RuntimeError::UnknownFrame(_)
        | RuntimeError::UnknownModel(_) => EXIT_PARSE,
        _ => EXIT_FAILURE,
    };
    Failure { code, error: e.into() }
}

pub struct RunArgs {
    pub scenario: PathBuf,
    pub library: PathBuf,
    pub heatmap: Option<PathBuf>,
    pub deadline: Option<f64>,
    pub force_model: Option<String>,
    pub recheck: Option<usize>,
    pub out: PathBuf,
}

pub fn run(args: &RunArgs) -> Outcome {
    let mut scenario = parse_scenario(&read(&args.scenario)?)
        .with_context(|| format!("in {}", args.scenario.display()))
        .map_err(fail(EXIT_PARSE))?;
    if let Some(d) = args.deadline {
        scenario.deadline = d;
    }
    if let Some(k) = args.recheck {
        scenario.recheck_period = k;
    }
    scenario.validate().map_err(|e| fail(EXIT_PARSE)(e.into()))?;
    let lib = load_library(&args.library)?;
    let order = ordering(&lib, args.heatmap.as_deref())?;
    let mut kb = KnowledgeBase::new(&lib, Some(order), scenario.deadline).map_err(runtime_failure)?;
    let options = RunOptions {
        force_model: args.force_model.as_deref().map(Into::into),
    };
    let records = run_simulation(&scenario, &mut kb, &options).map_err(runtime_failure)?;

    let rows: Vec<TraceRow> = records.iter().map(|r| r.to_trace_row()).collect();
    let file = File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(fail(EXIT_FAILURE))?;
    write_trace(BufWriter::new(file), &rows)
        .context("writing trace")
        .map_err(fail(EXIT_FAILURE))?;
    println!(
        "steps={} total_cost={} switches={} trace={}",
        records.len(),
        total_cost(&records),
        switch_count(&records),
        args.out.display()
    );
    Ok(())
}

pub fn heatmap(traces: &[PathBuf], out: Option<&Path>) -> Outcome {
    if traces.is_empty() {
        return Err(fail(EXIT_PARSE)(anyhow!("no trace files given")));
    }
    let mut rows = Vec::new();
    let mut skipped = 0;
    for path in traces {
        let text = read(path)?;
        let (mut parsed, bad) = read_trace(text.as_bytes())
            .with_context(|| format!("in {}", path.display()))
            .map_err(fail(EXIT_PARSE))?;
        for (line, reason) in &bad {
            eprintln!("warning: {}:{line}: skipped row: {reason}", path.display());
        }
        skipped += bad.len();
        rows.append(&mut parsed);
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} malformed rows");
    }
    let hm = heatmap_from_rows(&rows);
    if hm.is_empty() {
        return Err(fail(EXIT_PARSE)(anyhow!("traces contain no rows")));
    }
    let result = match out {
        Some(p) => File::create(p)
            .with_context(|| format!("creating {}", p.display()))
            .and_then(|f| write_heatmap_report(BufWriter::new(f), &hm).map_err(Into::into)),
        None => write_heatmap_report(io::stdout().lock(), &hm).map_err(Into::into),
    };
    result.map_err(fail(EXIT_FAILURE))
}

pub fn compile(library: &Path, heatmap: Option<&Path>, deadline: Option<f64>) -> Outcome {
    let lib = load_library(library)?;
    let graph = lib.graph().map_err(|e| fail(EXIT_PARSE)(e.into()))?;
    let order = ordering(&lib, heatmap)?;
    let mut tree = build_tree(&graph, &order, &lib.requested).map_err(|e| fail(EXIT_PARSE)(e.into()))?;
    if let Some(d) = deadline {
        tree = prune_for_deadline(&tree, d);
    }
    let mut out = io::stdout().lock();
    let written = write!(out, "{tree}").and_then(|_| {
        writeln!(
            out,
            "# order={} depth={} leaves={} infeasible={}",
            order.join(","),
            tree.depth(),
            tree.leaf_count(),
            tree.infeasible_leaves()
        )
    });
    written.map_err(|e| fail(EXIT_FAILURE)(e.into()))
}

pub fn bench(library: &Path, contexts: &Path) -> Outcome {
    let lib = load_library(library)?;
    let graph = lib.graph().map_err(|e| fail(EXIT_PARSE)(e.into()))?;
    let contexts = parse_contexts(&read(contexts)?)
        .with_context(|| format!("in {}", contexts.display()))
        .map_err(fail(EXIT_PARSE))?;
    let order = lib.factor_ordering(&graph);
    let tree = build_tree(&graph, &order, &lib.requested).map_err(|e| fail(EXIT_PARSE)(e.into()))?;

    println!("context,nodes_visited,depth,vertices_visited,equal");
    let mut mismatches = 0;
    for ctx in &contexts {
        let (base, visited) = graph_search_baseline(&graph, ctx, &lib.requested).map_err(|e| fail(EXIT_PARSE)(e.into()))?;
        let (candidates, nodes) = match lookup(&tree, ctx) {
            Ok(l) => (l.candidates, l.nodes_visited),
            Err(CompileError::NoFeasibleModel { nodes_visited }) => (Vec::new(), nodes_visited),
            Err(e) => return Err(fail(EXIT_PARSE)(anyhow!("context `{ctx}`: {e}"))),
        };
        let equal = candidates == base;
        if !equal {
            mismatches += 1;
        }
        println!("{ctx},{nodes},{},{visited},{equal}", tree.depth());
    }
    if mismatches > 0 {
        return Err(fail(EXIT_ORACLE)(anyhow!("{mismatches} contexts where tree and graph search disagree")));
    }
    Ok(())
}
