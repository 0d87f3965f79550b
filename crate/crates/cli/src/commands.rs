use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use flate2::write::GzEncoder;
use flate2::Compression;
use serde_json::json;

use accesswalk_core::export::{
    write_accessibility_csv, write_golden, write_report_csv, ReportDocument, TransitionDumpWriter,
};
use accesswalk_core::ingest::{load_network_files, load_network_json_file, write_geojson};
use accesswalk_core::oracle::exact_all;
use accesswalk_core::{
    accessibility_field, compute_field, evaluate_scenario, EvaluateOptions, RunOptions, Scenario,
    ScenarioDocument, StreetNetwork, TransitionEstimate, WalkConfig,
};
use accesswalk_service::{Engine, ServiceConfig};

use crate::manifest::ManifestBuilder;
use crate::{
    AccessArgs, Cli, Command, ComputeArgs, Internal, InvalidInput, NetworkArgs, OracleArgs,
    ScenarioArgs, ServeArgs, WalkArgs,
};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Compute(args) => compute(args, cli.quiet),
        Command::Oracle(args) => oracle(args),
        Command::Scenario(args) => scenario(args, cli.quiet),
        Command::Serve(args) => serve(args),
    }
}

fn load_network(
    args: &NetworkArgs,
    manifest: Option<&mut ManifestBuilder>,
) -> Result<StreetNetwork> {
    let net = match (&args.network, &args.nodes, &args.edges) {
        (Some(json), _, _) => {
            if let Some(m) = manifest {
                m.input(json)?;
            }
            load_network_json_file(json)?
        }
        (None, Some(nodes), Some(edges)) => {
            let net = load_network_files(nodes, edges)?;
            if let Some(m) = manifest {
                m.input(nodes)?;
                m.input(edges)?;
            }
            net
        }
        _ => {
            return Err(InvalidInput("give either --nodes and --edges, or --network".into()).into())
        }
    };
    log::info!(
        "loaded network: {} nodes, {} edges",
        net.node_count(),
        net.edge_count()
    );
    Ok(net)
}

fn walk_config(args: &WalkArgs) -> Result<WalkConfig> {
    Ok(WalkConfig::new(args.steps, args.walks, args.seed)?)
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(|e| Internal(format!("{e:#}")).into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Internal(format!("{}: {e}", path.display())).into())
}

/// Wraps a failure while writing an output so it maps to an internal error.
fn writing<T>(path: &Path, r: accesswalk_core::Result<T>) -> Result<T> {
    r.map_err(|e| Internal(format!("writing {}: {e}", path.display())).into())
}

fn flush(path: &Path, mut w: impl Write) -> Result<()> {
    w.flush()
        .map_err(|e| Internal(format!("writing {}: {e}", path.display())).into())
}

/// Stderr progress line, printed at each whole percent.
struct ProgressLine {
    label: &'static str,
    last: AtomicUsize,
}

impl ProgressLine {
    fn new(label: &'static str) -> Self {
        ProgressLine {
            label,
            last: AtomicUsize::new(usize::MAX),
        }
    }

    fn report(&self, done: usize, total: usize) {
        let pct = (done * 100).checked_div(total).unwrap_or(100);
        if self.last.swap(pct, Ordering::Relaxed) == pct {
            return;
        }
        eprint!("\r{}: {done}/{total} sources ({pct}%)", self.label);
        if done >= total {
            eprintln!();
        }
    }
}

fn config_json(walk: &WalkArgs, access: &AccessArgs, threads: usize) -> serde_json::Value {
    json!({
        "steps": walk.steps,
        "walks": walk.walks,
        "seed": walk.seed,
        "threads": threads,
        "literal_eq2": access.literal,
        "mean_steps": access.mean_steps.as_ref().map(|r| [*r.start(), *r.end()]),
    })
}

fn compute(args: &ComputeArgs, quiet: bool) -> Result<()> {
    let mut manifest = ManifestBuilder::new("compute", &args.out);
    let net = load_network(&args.network, Some(&mut manifest))?;
    if args.geojson && net.coordinates().is_none() {
        return Err(InvalidInput("--geojson needs node coordinates (x,y columns)".into()).into());
    }
    let config = walk_config(&args.walk)?;
    let threads = args.walk.threads.count();
    let options = RunOptions {
        threads,
        accessibility: args.access.options(),
    };
    create_out_dir(&args.out)?;

    let progress = ProgressLine::new("compute");
    let report = |d: usize, t: usize| progress.report(d, t);
    let field = if args.dump_transitions {
        let path = manifest.output("transitions.csv.gz");
        let gz = GzEncoder::new(create(&path)?, Compression::default());
        let mut dump = writing(&path, TransitionDumpWriter::new(gz))?;
        let mut sink = |est: &TransitionEstimate| dump.write(&net, est);
        let field = compute_field(
            &net,
            &config,
            &options,
            (!quiet).then_some(&report as _),
            Some(&mut sink),
        )?;
        let gz = writing(&path, dump.finish())?;
        let inner = gz
            .finish()
            .map_err(|e| Internal(format!("writing {}: {e}", path.display())))?;
        flush(&path, inner)?;
        field
    } else {
        compute_field(
            &net,
            &config,
            &options,
            (!quiet).then_some(&report as _),
            None,
        )?
    };

    let path = manifest.output("accessibility.csv");
    let mut w = create(&path)?;
    writing(&path, write_accessibility_csv(&net, &field, &mut w))?;
    flush(&path, w)?;
    if args.geojson {
        let path = manifest.output("accessibility.geojson");
        let mut w = create(&path)?;
        writing(&path, write_geojson(&net, Some(&field), &mut w))?;
        flush(&path, w)?;
    }
    let mut cfg = config_json(&args.walk, &args.access, threads);
    cfg["nodes"] = json!(net.node_count());
    cfg["edges"] = json!(net.edge_count());
    let m = manifest.finish(cfg)?;
    log::info!("wrote {}", m.display());
    Ok(())
}

fn oracle(args: &OracleArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("oracle", &args.out);
    let net = load_network(&args.network, Some(&mut manifest))?;
    let threads = args.threads.count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Internal(format!("cannot start worker pool: {e}")))?;
    let all = pool.install(|| exact_all(&net, args.max_steps, args.budget))?;
    let field = accessibility_field(&all, net.node_count(), &args.access.options())?;
    create_out_dir(&args.out)?;

    let path = manifest.output("transitions.golden.csv");
    let w = writing(
        &path,
        write_golden(&net, args.max_steps, &all, create(&path)?),
    )?;
    flush(&path, w)?;
    let path = manifest.output("accessibility.csv");
    let mut w = create(&path)?;
    writing(&path, write_accessibility_csv(&net, &field, &mut w))?;
    flush(&path, w)?;
    manifest.finish(json!({
        "max_steps": args.max_steps,
        "budget": args.budget,
        "literal_eq2": args.access.literal,
        "mean_steps": args.access.mean_steps.as_ref().map(|r| [*r.start(), *r.end()]),
        "graph_sha256": net.content_hash(),
    }))?;
    Ok(())
}

fn scenario(args: &ScenarioArgs, quiet: bool) -> Result<()> {
    let mut manifest = ManifestBuilder::new("scenario", &args.out);
    let net = load_network(&args.network, Some(&mut manifest))?;
    let text = fs::read_to_string(&args.scenario).map_err(|e| accesswalk_core::Error::Io {
        path: args.scenario.clone(),
        source: e,
    })?;
    manifest.input(&args.scenario)?;
    let mut doc: ScenarioDocument = serde_json::from_str(&text)
        .map_err(|e| InvalidInput(format!("{}: {e}", args.scenario.display())))?;
    if let Some(r) = args.radius {
        doc.radius = Some(r);
    }
    let scenario = Scenario::from_document(&net, &doc)?;
    let config = walk_config(&args.walk)?;
    let threads = args.walk.threads.count();
    let options = EvaluateOptions {
        run: RunOptions {
            threads,
            accessibility: args.access.options(),
        },
        full_recompute: args.full_recompute,
    };
    create_out_dir(&args.out)?;

    let progress = ProgressLine::new("scenario");
    let report = |d: usize, t: usize| progress.report(d, t);
    let outcome = evaluate_scenario(
        &net,
        &scenario,
        &config,
        &options,
        None,
        (!quiet).then_some(&report as _),
    )?;
    log::info!("affected region: {} nodes", outcome.report.region.len());

    let doc = ReportDocument::new(&net, &scenario, &config, &outcome.report);
    let path = manifest.output("report.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &doc)
        .map_err(|e| Internal(format!("writing {}: {e}", path.display())))?;
    writeln!(w).map_err(|e| Internal(e.to_string()))?;
    flush(&path, w)?;
    let path = manifest.output("report.csv");
    let mut w = create(&path)?;
    writing(&path, write_report_csv(&outcome.report, &mut w))?;
    flush(&path, w)?;
    for (name, net, field) in [
        ("baseline_region.csv", &net, &outcome.baseline),
        ("enhanced.csv", &outcome.enhanced_network, &outcome.enhanced),
    ] {
        let path = manifest.output(name);
        let mut w = create(&path)?;
        writing(&path, write_accessibility_csv(net, field, &mut w))?;
        flush(&path, w)?;
    }
    let mut cfg = config_json(&args.walk, &args.access, threads);
    cfg["radius"] = json!(scenario.radius);
    cfg["full_recompute"] = json!(args.full_recompute);
    manifest.finish(cfg)?;
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<()> {
    let net = load_network(&args.network, None)?;
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| {
            InvalidInput(format!(
                "bad listen address {}:{}: {e}",
                args.host, args.port
            ))
        })?;
    let config = ServiceConfig {
        walk: walk_config(&args.walk)?,
        run: RunOptions {
            threads: args.walk.threads.count(),
            accessibility: args.access.options(),
        },
        precompute: args.precompute,
    };
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| Internal(format!("cannot start runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| InvalidInput(format!("cannot bind {addr}: {e}")))?;
        let engine = Engine::start(net, config);
        accesswalk_service::serve_on(listener, engine)
            .await
            .map_err(|e| Internal(format!("server failed: {e}")).into())
    })
}
