//! The `graph`, `price` and `simulate` subcommands.
//!
//! Each command writes its normal output to `out`, diagnostics to `err`,
//! and returns the process exit status: 0 on success, 1 for I/O, parse and
//! validation failures, 2 when a price query itself is refused.

use std::fs;
use std::io::Write;
use std::path::Path;

use triangle_oracle_core::graph::build_graph;
use triangle_oracle_core::ingest::{load_snapshot_with, LoadOptions};
use triangle_oracle_core::market::{Asset, Snapshot};
use triangle_oracle_core::pathfinder::{price_query, QueryOptions, QueryResult};
use triangle_oracle_core::sim::{evaluate, MarketSpec, ScenarioFile};

use crate::wire::QueryResponse;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_QUERY: i32 = 2;

/// A failed stage: the message is already formatted for the user.
struct Failure(String);

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

pub fn load(path: &Path, strict: bool, err: &mut dyn Write) -> Result<Snapshot, String> {
    let bytes = read(path).map_err(|f| f.0)?;
    let loaded = load_snapshot_with(&bytes, &LoadOptions { strict })
        .map_err(|e| format!("{} failed for {}: {e}", e.stage(), path.display()))?;
    for w in &loaded.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(loaded.snapshot)
}

fn report(err: &mut dyn Write, message: &str) -> i32 {
    let _ = writeln!(err, "error: {message}");
    EXIT_FAILURE
}

/// Builds the pool graph and writes its JSON export to `out_path`, or to
/// `out` when no path is given (counts then go to `err`).
pub fn cmd_graph(snapshot_path: &Path, out_path: Option<&Path>, strict: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let snapshot = match load(snapshot_path, strict, err) {
        Ok(s) => s,
        Err(m) => return report(err, &m),
    };
    let graph = build_graph(&snapshot);
    let json = graph.to_json();
    let counts = format!(
        "nodes: {}\nedges: {}\ntriangles: {}\nexcluded: {}\n",
        graph.nodes().len(),
        graph.edges().len(),
        graph.triangles().len(),
        graph.excluded().len()
    );
    if graph.is_empty() {
        let _ = writeln!(err, "warning: no pool closes a triangle; the graph is empty");
    }
    match out_path {
        Some(path) => {
            if let Err(f) = write_file(path, json.as_bytes()) {
                return report(err, &f.0);
            }
            let _ = out.write_all(counts.as_bytes());
        }
        None => {
            let _ = out.write_all(json.as_bytes());
            let _ = err.write_all(counts.as_bytes());
        }
    }
    EXIT_OK
}

pub struct PriceArgs<'a> {
    pub snapshot_path: &'a Path,
    pub base: &'a str,
    pub quote: &'a str,
    pub samples: u32,
    pub seed: u64,
    pub strict: bool,
    pub json: bool,
}

fn render_text(result: &QueryResult) -> String {
    let path: Vec<&str> = result.path.pool_ids().map(|p| p.as_str()).collect();
    format!(
        "pair: {}/{}\nprice: {}\nprice_fraction: {}\npath: {}\ntotal_irregularity: {}\nsource_pool: {}\ntarget_pool: {}\nseed: {}\nsamples: {}\nsnapshot_timestamp: {}\n",
        result.base,
        result.quote,
        result.price_decimal(),
        result.price_fraction(),
        path.join(" -> "),
        result.path.total_irregularity,
        result.source_pool,
        result.target_pool,
        result.seed,
        result.samples,
        result.snapshot_timestamp,
    )
}

pub fn cmd_price(args: &PriceArgs<'_>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let snapshot = match load(args.snapshot_path, args.strict, err) {
        Ok(s) => s,
        Err(m) => return report(err, &m),
    };
    let (base, quote) = match (Asset::new(args.base), Asset::new(args.quote)) {
        (Ok(b), Ok(q)) => (b, q),
        (Err(e), _) | (_, Err(e)) => {
            let _ = writeln!(err, "error: InvalidAsset: {e}");
            return EXIT_QUERY;
        }
    };
    let graph = build_graph(&snapshot);
    let options = QueryOptions::seeded(args.seed).with_samples(args.samples);
    match price_query(&graph, &base, &quote, &options) {
        Ok(result) => {
            let text = if args.json {
                let mut s = serde_json::to_string_pretty(&QueryResponse::from_result(&result)).expect("response serializes");
                s.push('\n');
                s
            } else {
                render_text(&result)
            };
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.name());
            EXIT_QUERY
        }
    }
}

/// Runs the evaluation harness. The report JSON goes to `out_path` when
/// given; the table always goes to `out`.
pub fn cmd_simulate(spec_path: &Path, scenario_path: &Path, out_path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let run = || -> Result<String, Failure> {
        let spec: MarketSpec = serde_json::from_slice(&read(spec_path)?)
            .map_err(|e| Failure(format!("parse failed for {}: {e}", spec_path.display())))?;
        let file: ScenarioFile = serde_json::from_slice(&read(scenario_path)?)
            .map_err(|e| Failure(format!("parse failed for {}: {e}", scenario_path.display())))?;
        let report = evaluate(&spec, &file.scenarios, &file.query, &file.seeds, &file.config())
            .map_err(|e| Failure(format!("simulation failed: {e}")))?;
        if let Some(path) = out_path {
            write_file(path, report.to_json().as_bytes())?;
        }
        Ok(report.to_table())
    };
    match run() {
        Ok(table) => {
            let _ = out.write_all(table.as_bytes());
            EXIT_OK
        }
        Err(f) => report(err, &f.0),
    }
}
