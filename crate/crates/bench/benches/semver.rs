//! Requirement parsing, matching, and candidate selection micro-benchmarks.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use vulngraph_core::semver::{max_satisfying, normalize_requirement, Requirement, Version};

const REQUIREMENTS: [&str; 8] = [
    "^1.4.2",
    "~0.9",
    "1.*",
    ">= 1.2, < 3.0.0",
    "= 2.0.1",
    "> 0.4.8",
    "^0.0.7",
    "*",
];

fn parse(c: &mut Criterion) {
    c.bench_function("requirement_parse", |b| {
        b.iter(|| {
            for text in REQUIREMENTS {
                black_box(Requirement::parse(black_box(text)).unwrap());
            }
        })
    });
}

fn matches(c: &mut Criterion) {
    let requirements: Vec<Requirement> = REQUIREMENTS
        .iter()
        .map(|t| Requirement::parse(t).unwrap())
        .collect();
    let versions: Vec<Version> = (0..3)
        .flat_map(|major| (0..10).map(move |minor| format!("{major}.{minor}.{}", minor % 3)))
        .map(|text| Version::parse(&text).unwrap())
        .collect();
    c.bench_function("requirement_matches_240", |b| {
        b.iter(|| {
            let mut hits = 0usize;
            for requirement in &requirements {
                for version in &versions {
                    hits += usize::from(requirement.matches(black_box(version)));
                }
            }
            black_box(hits)
        })
    });
}

fn normalize(c: &mut Criterion) {
    let requirements: Vec<Requirement> = REQUIREMENTS
        .iter()
        .map(|t| Requirement::parse(t).unwrap())
        .collect();
    c.bench_function("normalize_requirement", |b| {
        b.iter(|| {
            for requirement in &requirements {
                black_box(normalize_requirement(black_box(requirement)));
            }
        })
    });
}

fn pick(c: &mut Criterion) {
    let versions: Vec<(Version, bool)> = (0..100)
        .map(|i| {
            let version = Version::parse(&format!("1.{}.{}", i / 10, i % 10)).unwrap();
            (version, i % 7 == 0)
        })
        .collect();
    let requirement = Requirement::parse("^1.3").unwrap();
    c.bench_function("max_satisfying_100", |b| {
        b.iter(|| {
            black_box(max_satisfying(
                versions.iter().map(|(v, yanked)| (v, *yanked)),
                black_box(&requirement),
                false,
            ))
        })
    });
}

criterion_group!(benches, parse, matches, normalize, pick);
criterion_main!(benches);
