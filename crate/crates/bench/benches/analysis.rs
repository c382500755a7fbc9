use std::hint::black_box;

use bytedbg_core::fixtures;
use bytedbg_core::{
    check, diagnose, extract_deps, localize_value, parse_spec, run, transitive_closure, CheckOptions, LocalizeOptions,
    ProbeSet, Value,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn interpret(c: &mut Criterion) {
    let maxf = fixtures::maxf();
    c.bench_function("run/maxf", |b| {
        b.iter(|| run(&maxf, black_box(&[Value::Float(2.0), Value::Float(3.0)]), 1_000_000).unwrap())
    });
    let countdown = fixtures::corpus_method("countdown");
    c.bench_function("run/countdown_1000", |b| {
        b.iter(|| run(&countdown, black_box(&[Value::Int(1000)]), 1_000_000).unwrap())
    });
}

fn dependencies(c: &mut Criterion) {
    let methods = fixtures::corpus_methods();
    c.bench_function("deps/corpus_extract_and_close", |b| {
        b.iter(|| {
            for (_, m) in &methods {
                black_box(transitive_closure(&extract_deps(m).unwrap()));
            }
        })
    });
}

fn localization(c: &mut Criterion) {
    let buggy = fixtures::maxf_init_buggy();
    let spec = parse_spec(fixtures::MAXF_INIT_SPEC).unwrap().bind(&buggy).unwrap();
    let probes = ProbeSet::for_spec(&buggy, &spec);
    c.bench_function("localize/value_maxf_init", |b| {
        b.iter(|| localize_value(&buggy, &spec, &probes, 1_000_000).unwrap())
    });

    let mutant = fixtures::maxf_mutant();
    let spec = parse_spec(fixtures::MAXF_SPEC).unwrap().bind(&mutant).unwrap();
    let options = LocalizeOptions::default();
    c.bench_function("localize/diagnose_maxf_mutant", |b| {
        b.iter(|| {
            let verdict = check(&mutant, &spec, CheckOptions::default()).unwrap();
            diagnose(&mutant, &spec, &verdict, &options).unwrap()
        })
    });
}

criterion_group!(benches, interpret, dependencies, localization);
criterion_main!(benches);
