//! Determinism check: building the graph and propagating every advisory
//! twice over the same feeds must produce byte-identical artifacts and
//! stdout, regardless of worker threads or output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(args: &[&str], workdir: &Path) -> Output {
    let output = Command::new(env!("CARGO_BIN_EXE_vulngraph"))
        .current_dir(workdir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn library_line(name: &str, versions: Vec<Value>) -> String {
    let newest = versions
        .last()
        .map(|v| v["num"].as_str().unwrap().to_string())
        .unwrap();
    json!({
        "id": format!("lib-{name}"),
        "name": name,
        "created_at": "2021-01-01T00:00:00Z",
        "updated_at": "2021-06-01T00:00:00Z",
        "description": format!("{name} fixture"),
        "downloads": 5000,
        "recent_downloads": 500,
        "max_version": newest,
        "max_stable_version": newest,
        "newest_version": newest,
        "versions": versions,
    })
    .to_string()
}

fn version(num: &str, yanked: bool, deps: Vec<Value>) -> Value {
    json!({ "num": num, "yanked": yanked, "features": {}, "dependencies": deps })
}

fn dep(target: &str, req: &str) -> Value {
    json!({
        "target_name": target,
        "requirement": req,
        "kind": "normal",
        "optional": false,
        "default_features": true,
        "features": [],
    })
}

fn advisory_line(id: u64, cve: &str, package: &str, range: &str, severity: &str) -> String {
    json!({
        "database_id": id,
        "value": cve,
        "severity": severity,
        "cvss": 6.5,
        "published_at": "2021-03-01T00:00:00Z",
        "updated_at": "2021-03-02T00:00:00Z",
        "summary": format!("{package} mishandles untrusted input"),
        "vulnerable_version_range": range,
        "first_patched_version": null,
        "ecosystem": "RUST",
        "package_name": package,
        "cwe_ids": ["CWE-400"],
    })
    .to_string()
}

/// A fixture wide enough that `propagate --all` fans out across workers:
/// three advisories, shared dependencies, a yanked release, a prerelease.
fn write_feeds(dir: &Path) -> (PathBuf, PathBuf) {
    let lines = [
        library_line(
            "core-a",
            vec![
                version("0.9.0", false, vec![]),
                version("1.0.0", false, vec![]),
                version("1.1.0", true, vec![]),
            ],
        ),
        library_line(
            "core-b",
            vec![
                version("1.0.0", false, vec![]),
                version("2.0.0-rc.1", false, vec![]),
                version("2.0.0", false, vec![]),
            ],
        ),
        library_line(
            "mid-a",
            vec![version("1.0.0", false, vec![dep("core-a", "^1"), dep("core-b", "^1")])],
        ),
        library_line(
            "mid-b",
            vec![
                version("0.3.0", false, vec![dep("core-b", "^2")]),
                version("0.4.0", false, vec![dep("core-b", "^2"), dep("core-a", "~0.9")]),
            ],
        ),
        library_line(
            "app-a",
            vec![version("1.0.0", false, vec![dep("mid-a", "^1"), dep("mid-b", "^0.4")])],
        ),
        library_line(
            "app-b",
            vec![version("2.2.0", false, vec![dep("mid-a", "=1.0.0")])],
        ),
        library_line("loner", vec![version("0.1.0", false, vec![])]),
    ];
    let registry = dir.join("registry.ndjson");
    fs::write(&registry, lines.join("\n") + "\n").unwrap();

    let advisories = dir.join("advisories.ndjson");
    let feed = [
        advisory_line(9101, "CVE-2021-1001", "core-a", "< 1.0.0", "HIGH"),
        advisory_line(9102, "CVE-2021-1002", "core-b", ">= 1.0.0, < 2.0.0", "MODERATE"),
        advisory_line(9103, "CVE-2021-1003", "loner", "< 0.2.0", "LOW"),
    ];
    fs::write(&advisories, feed.join("\n") + "\n").unwrap();
    (registry, advisories)
}

fn snapshot_dir(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let relative = path.strip_prefix(root).unwrap().to_path_buf();
                files.insert(
                    relative.to_string_lossy().into_owned(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    files
}

#[test]
fn acceptance_9_build_and_propagate_are_deterministic() {
    let workdir = TempDir::new().unwrap();
    let (registry, advisories) = write_feeds(workdir.path());

    let mut stdouts: Vec<Vec<u8>> = Vec::new();
    let mut trees: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
    for out in ["first", "second"] {
        let out_dir = workdir.path().join(out);
        let base = [
            "--registry",
            registry.to_str().unwrap(),
            "--advisories",
            advisories.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ];

        let mut build_args = base.to_vec();
        build_args.push("build");
        let build = run(&build_args, workdir.path());

        let mut propagate_args = base.to_vec();
        propagate_args.extend_from_slice(&["propagate", "--all"]);
        let propagate = run(&propagate_args, workdir.path());

        let mut stdout = build.stdout.clone();
        stdout.extend_from_slice(&propagate.stdout);
        stdouts.push(stdout);
        trees.push(snapshot_dir(&out_dir));
    }

    assert_eq!(stdouts[0], stdouts[1], "stdout differs between runs");
    let (first, second) = (&trees[0], &trees[1]);
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>(),
        "artifact sets differ between runs"
    );
    for (file, bytes) in first {
        assert_eq!(bytes, &second[file], "`{file}` differs between runs");
    }
    assert!(first.contains_key("build/nodes.csv"));
    assert!(first.contains_key("build/edges.csv"));
    assert!(first.contains_key("propagate/results.json"));
    assert!(first.contains_key("propagate/ecosystem.json"));

    println!(
        "ACCEPTANCE 9: PASS two build + propagate --all runs produced {} byte-identical artifacts",
        first.len()
    );
}
