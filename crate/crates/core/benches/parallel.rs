//! Sequential vs parallel execution of the data-parallel loops. Without the
//! `parallel` feature both variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use csfbench::bench::random_baseline_with;
use csfbench::experiment::{prepare, RunConfig};
use csfbench::generators::generate_csf_with;
use csfbench::learners::{train_model, LearnerConfig, ModelKind};
use csfbench::patterns::{enumerate_vocabulary, occurrence_table_with};
use csfbench::{Exec, Family};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn setup() -> (RunConfig, csfbench::experiment::Prepared) {
    let cfg = RunConfig {
        n_windows: 20_000,
        ..RunConfig::default()
    };
    let prep = prepare(&cfg, Family::Csf, Exec::default()).unwrap();
    (cfg, prep)
}

fn benches(c: &mut Criterion) {
    let (cfg, prep) = setup();
    let rule = prep.csf_rule.clone().unwrap();
    let gen = csfbench::generators::GenConfig::new(cfg.n_windows, 1);
    let vocab = enumerate_vocabulary(&cfg.csf.window_sizes).unwrap();
    let model = train_model(ModelKind::SmCsf, &prep.dataset, &LearnerConfig::default(), Exec::default()).unwrap();

    let mut g = c.benchmark_group("csf-20k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("generate", name), &exec, |b, &e| {
            b.iter(|| generate_csf_with(&rule, &gen, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("occurrence_table", name), &exec, |b, &e| {
            b.iter(|| occurrence_table_with(&prep.dataset.windows, &vocab, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("random_baseline_1000", name), &exec, |b, &e| {
            b.iter(|| random_baseline_with(&prep.dataset, 0.2, 3, 1000, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("score_sm_csf", name), &exec, |b, &e| {
            b.iter(|| model.score_dataset(&prep.dataset, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
