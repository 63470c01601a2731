//! The six subcommands. Every command writes its artifacts under
//! `<out>/<command>/` with a manifest recording input digests, flags, and
//! output digests; stdout carries the primary result as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde_json::{json, Value};
use vulngraph_core::graph::{build_graph, export_graph, graph_stats, KnowledgeGraph};
use vulngraph_core::ingest::{
    incremental_update, incremental_update_advisories, load_advisories, load_registry,
    parse_lockfile, Advisory, LoadMode, LoadedAdvisories, LoadedRegistry, RegistrySnapshot,
    ValidationReport,
};
use vulngraph_core::propagate::{
    ecosystem_propagation_stats, propagation_paths, top_impact_table, PropagationResult,
};
use vulngraph_core::resolve::{
    resolve_tree_with, tree_to_json, verify_against_lockfile, ResolveLimits,
};
use vulngraph_core::semver::Version;
use vulngraph_core::stats::{
    cvss_histogram, cwe_top_k, latest_version_still_affected, patchless_proportion,
    severity_distribution, yanked_latest_affected,
};

use crate::output::{digest_file, render_csv, render_table, write_bytes, write_json, Manifest};
use crate::{Cli, CliError, Command, Format};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest => cmd_ingest(cli),
        Command::Update => cmd_update(cli),
        Command::Build => cmd_build(cli),
        Command::Resolve {
            name,
            version,
            verify_lock,
        } => cmd_resolve(cli, name, version, verify_lock.as_deref()),
        Command::Propagate { cve, all } => cmd_propagate(cli, cve.as_deref(), *all),
        Command::Stats => cmd_stats(cli),
    }
}

// ==== Shared plumbing ====

fn load_mode(cli: &Cli) -> LoadMode {
    if cli.strict {
        LoadMode::Strict
    } else {
        LoadMode::Lenient
    }
}

fn limits(cli: &Cli) -> ResolveLimits {
    ResolveLimits {
        max_nodes_per_path: cli.max_path_nodes,
        ..ResolveLimits::default()
    }
}

fn flags_json(cli: &Cli) -> Value {
    json!({
        "strict": cli.strict,
        "jobs": cli.jobs,
        "max_path_nodes": cli.max_path_nodes,
        "allow_yanked": cli.allow_yanked,
        "format": cli.format.as_str(),
    })
}

fn command_dir(cli: &Cli, command: &str) -> Result<PathBuf, CliError> {
    let dir = cli.out.join(command);
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Input(format!("cannot create `{}`: {e}", dir.display())))?;
    Ok(dir)
}

/// Explicit feed paths, or the stored snapshot from a previous `ingest`.
fn input_paths(cli: &Cli) -> Result<(PathBuf, PathBuf), CliError> {
    match (&cli.registry, &cli.advisories) {
        (Some(registry), Some(advisories)) => Ok((registry.clone(), advisories.clone())),
        (None, None) => {
            let registry = cli.out.join("ingest").join("registry.ndjson");
            let advisories = cli.out.join("ingest").join("advisories.ndjson");
            if registry.is_file() && advisories.is_file() {
                Ok((registry, advisories))
            } else {
                Err(CliError::Input(
                    "no input feeds: pass --registry and --advisories, or run `vulngraph ingest` first"
                        .to_string(),
                ))
            }
        }
        _ => Err(CliError::Input(
            "pass --registry and --advisories together".to_string(),
        )),
    }
}

struct Inputs {
    registry: LoadedRegistry,
    advisories: LoadedAdvisories,
    provenance: Value,
}

fn load_inputs(cli: &Cli) -> Result<Inputs, CliError> {
    let (registry_path, advisory_path) = input_paths(cli)?;
    let provenance = provenance_json(&registry_path, &advisory_path)?;
    let registry = load_registry(&registry_path, load_mode(cli))?;
    let advisories = load_advisories(&advisory_path, load_mode(cli))?;
    log_issues("registry", &registry.report);
    log_issues("advisories", &advisories.report);
    Ok(Inputs {
        registry,
        advisories,
        provenance,
    })
}

fn provenance_json(registry: &Path, advisories: &Path) -> Result<Value, CliError> {
    Ok(json!({
        "registry": { "path": registry.display().to_string(), "sha256": digest_file(registry)? },
        "advisories": { "path": advisories.display().to_string(), "sha256": digest_file(advisories)? },
    }))
}

fn log_issues(feed: &str, report: &ValidationReport) {
    for issue in &report.issues {
        warn!("{feed} line {}: {}", issue.line, issue.message);
    }
}

fn build_from(inputs: Inputs) -> (KnowledgeGraph, Value, Value) {
    let (graph, report) = build_graph(inputs.registry.snapshot, inputs.advisories.advisories);
    let report_json = json!({
        "advisories_without_package": report.advisories_without_package,
        "dangling_dependencies": report.dangling_dependencies,
    });
    (graph, report_json, inputs.provenance)
}

fn print_value(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("value serializes"));
}

/// Write the `.txt` or `.csv` rendering of a table when the format asks for
/// one; the JSON form is always written separately.
fn write_rendered_table(
    dir: &Path,
    manifest: &mut Manifest,
    base: &str,
    format: Format,
    headers: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    match format {
        Format::Json => Ok(()),
        Format::Text => {
            let file = format!("{base}.txt");
            write_bytes(dir, &file, render_table(headers, rows).as_bytes())?;
            manifest.add(&file)
        }
        Format::Csv => {
            let file = format!("{base}.csv");
            write_bytes(dir, &file, render_csv(headers, rows).as_bytes())?;
            manifest.add(&file)
        }
    }
}

// ==== ingest ====

fn cmd_ingest(cli: &Cli) -> Result<(), CliError> {
    let (Some(registry_path), Some(advisory_path)) = (&cli.registry, &cli.advisories) else {
        return Err(CliError::Input(
            "ingest needs --registry and --advisories".to_string(),
        ));
    };
    let provenance = provenance_json(registry_path, advisory_path)?;
    let registry = load_registry(registry_path, load_mode(cli))?;
    let advisories = load_advisories(advisory_path, load_mode(cli))?;
    log_issues("registry", &registry.report);
    log_issues("advisories", &advisories.report);

    let dir = command_dir(cli, "ingest")?;
    let mut manifest = Manifest::new("ingest", &dir, provenance.clone(), flags_json(cli));

    write_bytes(
        &dir,
        "registry.ndjson",
        ndjson(&registry.snapshot.libraries).as_bytes(),
    )?;
    manifest.add("registry.ndjson")?;

    let mut sorted = advisories.advisories.clone();
    sorted.sort_by(|a, b| a.value.cmp(&b.value));
    write_bytes(&dir, "advisories.ndjson", ndjson(&sorted).as_bytes())?;
    manifest.add("advisories.ndjson")?;

    write_json(
        &dir,
        "hashes.json",
        &json!({
            "provenance": provenance,
            "registry": registry.hashes,
            "advisories": advisories.hashes,
        }),
    )?;
    manifest.add("hashes.json")?;

    let report = json!({
        "provenance": provenance,
        "libraries": registry.snapshot.libraries.len(),
        "versions": registry.snapshot.version_count(),
        "advisories": sorted.len(),
        "registry_issues": registry.report.issues,
        "advisory_issues": advisories.report.issues,
    });
    write_json(&dir, "report.json", &report)?;
    manifest.add("report.json")?;
    manifest.write()?;

    print_value(&report);
    Ok(())
}

fn ndjson<T: serde::Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

// ==== update ====

fn cmd_update(cli: &Cli) -> Result<(), CliError> {
    if cli.registry.is_none() && cli.advisories.is_none() {
        return Err(CliError::Input(
            "update needs --registry, --advisories, or both".to_string(),
        ));
    }
    let ingest_dir = cli.out.join("ingest");
    let stored_registry = ingest_dir.join("registry.ndjson");
    let stored_advisories = ingest_dir.join("advisories.ndjson");

    let old_registry = if stored_registry.is_file() {
        load_registry(&stored_registry, LoadMode::Lenient)
            .map_err(|e| CliError::Input(e.to_string()))?
    } else {
        LoadedRegistry {
            snapshot: RegistrySnapshot::default(),
            hashes: Default::default(),
            report: Default::default(),
        }
    };
    let old_advisories = if stored_advisories.is_file() {
        load_advisories(&stored_advisories, LoadMode::Lenient)
            .map_err(|e| CliError::Input(e.to_string()))?
    } else {
        LoadedAdvisories {
            advisories: Vec::new(),
            hashes: Default::default(),
            report: Default::default(),
        }
    };

    // Both feeds are applied before anything is written, so a corrupt feed
    // aborts with the stored snapshot untouched.
    let mut snapshot = old_registry.snapshot;
    let mut registry_hashes = old_registry.hashes;
    let mut registry_changes = None;
    if let Some(path) = &cli.registry {
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))?;
        let update = incremental_update(&snapshot, &registry_hashes, &raw)
            .map_err(|e| CliError::Input(e.to_string()))?;
        snapshot = update.snapshot;
        registry_hashes = update.hashes;
        registry_changes = Some(update.changeset);
    }

    let mut advisories = old_advisories.advisories;
    let mut advisory_hashes = old_advisories.hashes;
    let mut advisory_changes = None;
    if let Some(path) = &cli.advisories {
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))?;
        let update = incremental_update_advisories(&advisories, &advisory_hashes, &raw)
            .map_err(|e| CliError::Input(e.to_string()))?;
        advisories = update.advisories;
        advisory_hashes = update.hashes;
        advisory_changes = Some(update.changeset);
    }

    fs::create_dir_all(&ingest_dir)
        .map_err(|e| CliError::Input(format!("cannot create `{}`: {e}", ingest_dir.display())))?;
    replace_file(&stored_registry, ndjson(&snapshot.libraries).as_bytes())?;
    advisories.sort_by(|a, b| a.value.cmp(&b.value));
    replace_file(&stored_advisories, ndjson(&advisories).as_bytes())?;
    let hashes = json!({ "registry": registry_hashes, "advisories": advisory_hashes });
    replace_file(
        &ingest_dir.join("hashes.json"),
        format!("{}\n", serde_json::to_string_pretty(&hashes).expect("hashes serialize")).as_bytes(),
    )?;

    let unchanged = registry_changes.as_ref().map_or(true, |c| c.is_empty())
        && advisory_changes.as_ref().map_or(true, |c| c.is_empty());
    let inputs = json!({
        "registry": cli.registry.as_ref().map(|p| p.display().to_string()),
        "advisories": cli.advisories.as_ref().map(|p| p.display().to_string()),
    });
    let changeset = json!({
        "provenance": inputs,
        "unchanged": unchanged,
        "registry": registry_changes,
        "advisories": advisory_changes,
    });
    let dir = command_dir(cli, "update")?;
    let mut manifest = Manifest::new("update", &dir, inputs, flags_json(cli));
    write_json(&dir, "changeset.json", &changeset)?;
    manifest.add("changeset.json")?;
    manifest.write()?;

    if unchanged {
        println!("no changes");
    } else {
        print_value(&changeset);
    }
    Ok(())
}

fn replace_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Input(format!("cannot write `{}`: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Input(format!("cannot replace `{}`: {e}", path.display())))
}

// ==== build ====

fn cmd_build(cli: &Cli) -> Result<(), CliError> {
    let inputs = load_inputs(cli)?;
    let (graph, report_json, provenance) = build_from(inputs);

    let problems = graph.validate();
    if !problems.is_empty() {
        return Err(CliError::Validation(format!(
            "graph failed its self-check: {}",
            problems.join("; ")
        )));
    }

    let dir = command_dir(cli, "build")?;
    let mut manifest = Manifest::new("build", &dir, provenance.clone(), flags_json(cli));
    export_graph(&graph, &dir).map_err(|e| CliError::Input(e.to_string()))?;
    manifest.add("nodes.csv")?;
    manifest.add("edges.csv")?;

    let stats = json!({ "provenance": provenance, "stats": graph_stats(&graph) });
    write_json(&dir, "stats.json", &stats)?;
    manifest.add("stats.json")?;

    let report = json!({ "provenance": provenance, "report": report_json });
    write_json(&dir, "report.json", &report)?;
    manifest.add("report.json")?;
    manifest.write()?;

    print_value(&stats);
    Ok(())
}

// ==== resolve ====

fn cmd_resolve(
    cli: &Cli,
    name: &str,
    version_text: &str,
    verify_lock: Option<&Path>,
) -> Result<(), CliError> {
    let version = Version::parse(version_text).map_err(|e| CliError::Input(e.to_string()))?;
    let inputs = load_inputs(cli)?;
    let provenance = inputs.provenance.clone();
    let (graph, _) = build_graph(inputs.registry.snapshot, inputs.advisories.advisories);

    let tree = resolve_tree_with(&graph, name, &version, limits(cli), cli.allow_yanked)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut tree_bytes = tree_to_json(&tree);
    tree_bytes.push(b'\n');

    let dir = command_dir(cli, "resolve")?;
    let mut manifest = Manifest::new("resolve", &dir, provenance.clone(), flags_json(cli));
    let tree_file = format!("{name}-{version}.json");
    write_bytes(&dir, &tree_file, &tree_bytes)?;
    manifest.add(&tree_file)?;
    print!("{}", String::from_utf8(tree_bytes).expect("tree JSON is utf-8"));

    let mut lock_failure = None;
    if let Some(lock_path) = verify_lock {
        let packages = parse_lockfile(lock_path).map_err(|e| CliError::Input(e.to_string()))?;
        let diff = verify_against_lockfile(&tree, &packages);
        let diff_json = json!({
            "provenance": provenance,
            "lockfile": lock_path.display().to_string(),
            "clean": diff.is_clean(),
            "diff": diff,
        });
        write_json(&dir, "lockfile-diff.json", &diff_json)?;
        manifest.add("lockfile-diff.json")?;
        print_value(&diff_json);
        if !diff.is_clean() {
            lock_failure = Some(CliError::Validation(format!(
                "resolved tree disagrees with `{}`",
                lock_path.display()
            )));
        }
    }

    manifest.write()?;
    match lock_failure {
        Some(failure) => Err(failure),
        None => Ok(()),
    }
}

// ==== propagate ====

fn cmd_propagate(cli: &Cli, cve: Option<&str>, all: bool) -> Result<(), CliError> {
    if all == cve.is_some() {
        return Err(CliError::Input(
            "pass exactly one of a CVE id or --all".to_string(),
        ));
    }
    let inputs = load_inputs(cli)?;
    let provenance = inputs.provenance.clone();
    let (graph, _) = build_graph(inputs.registry.snapshot, inputs.advisories.advisories);
    let limits = limits(cli);

    let dir = command_dir(cli, "propagate")?;
    let mut manifest = Manifest::new("propagate", &dir, provenance.clone(), flags_json(cli));

    if let Some(cve) = cve {
        let result =
            propagation_paths(&graph, cve, limits).map_err(|e| CliError::Input(e.to_string()))?;
        let value = serde_json::to_value(&result).expect("result serializes");
        write_json(&dir, &format!("{cve}.json"), &value)?;
        manifest.add(&format!("{cve}.json"))?;
        manifest.write()?;
        print_value(&value);
        return Ok(());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
    let results: Vec<PropagationResult> = pool.install(|| {
        graph
            .advisories()
            .par_iter()
            .map(|advisory| {
                propagation_paths(&graph, &advisory.value, limits)
                    .expect("graph advisories are ingested")
            })
            .collect()
    });

    write_json(
        &dir,
        "results.json",
        &serde_json::to_value(&results).expect("results serialize"),
    )?;
    manifest.add("results.json")?;

    let ecosystem = json!({
        "provenance": provenance,
        "stats": ecosystem_propagation_stats(&graph, &results),
    });
    write_json(&dir, "ecosystem.json", &ecosystem)?;
    manifest.add("ecosystem.json")?;

    let top = top_impact_table(&results, 10);
    write_json(
        &dir,
        "top-impact.json",
        &serde_json::to_value(&top).expect("table serializes"),
    )?;
    manifest.add("top-impact.json")?;
    let rows: Vec<Vec<String>> = top
        .iter()
        .map(|row| {
            vec![
                row.cve.clone(),
                row.package.clone(),
                row.libraries_reached.to_string(),
                row.versions_reached.to_string(),
            ]
        })
        .collect();
    write_rendered_table(
        &dir,
        &mut manifest,
        "top-impact",
        cli.format,
        &["cve", "package", "libraries_reached", "versions_reached"],
        &rows,
    )?;
    manifest.write()?;

    print_value(&ecosystem);
    Ok(())
}

// ==== stats ====

fn cmd_stats(cli: &Cli) -> Result<(), CliError> {
    let inputs = load_inputs(cli)?;
    let (graph, _, provenance) = build_from(inputs);
    let advisories: &[Advisory] = graph.advisories();

    let severity = severity_distribution(advisories);
    let histogram = cvss_histogram(advisories, 1.0);
    let cwe = cwe_top_k(advisories, 10);
    let (latest_fraction, latest_rows) = latest_version_still_affected(&graph);
    let document = json!({
        "provenance": provenance,
        "graph": graph_stats(&graph),
        "advisory_total": advisories.len(),
        "empty": advisories.is_empty(),
        "severity": severity,
        "cvss_histogram": histogram,
        "cwe_top": cwe,
        "patchless_proportion": patchless_proportion(advisories),
        "latest_version_still_affected": {
            "fraction": latest_fraction,
            "rows": latest_rows,
        },
        "yanked_latest_affected": yanked_latest_affected(&graph),
    });

    let dir = command_dir(cli, "stats")?;
    let mut manifest = Manifest::new("stats", &dir, provenance, flags_json(cli));
    write_json(&dir, "stats.json", &document)?;
    manifest.add("stats.json")?;

    let severity_rows: Vec<Vec<String>> = severity
        .fractions
        .iter()
        .map(|(class, fraction)| vec![class.to_string(), format!("{fraction:.4}")])
        .collect();
    write_rendered_table(
        &dir,
        &mut manifest,
        "severity",
        cli.format,
        &["severity", "fraction"],
        &severity_rows,
    )?;

    let cwe_rows: Vec<Vec<String>> = cwe
        .entries
        .iter()
        .map(|e| vec![e.id.clone(), e.description.clone(), e.count.to_string()])
        .collect();
    write_rendered_table(
        &dir,
        &mut manifest,
        "cwe-top",
        cli.format,
        &["cwe", "description", "count"],
        &cwe_rows,
    )?;

    let latest_table: Vec<Vec<String>> = latest_rows
        .iter()
        .map(|row| {
            vec![
                row.cve.clone(),
                row.library.clone(),
                row.vulnerable_range.clone(),
                row.latest_version.to_string(),
                row.published_at.clone(),
            ]
        })
        .collect();
    write_rendered_table(
        &dir,
        &mut manifest,
        "latest-affected",
        cli.format,
        &["cve", "library", "vulnerable_range", "latest_version", "published_at"],
        &latest_table,
    )?;
    manifest.write()?;

    print_value(&document);
    Ok(())
}
