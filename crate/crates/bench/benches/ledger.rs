use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use flowledger::engine::{run_scenario, AssetKind, GranularityConfig, PaymentEngine};
use flowledger::product::BillingPeriod;
use flowledger::trie::{verify, AuthenticatedMap};
use flowledger_bench::{keys, uav_project};

fn trie(c: &mut Criterion) {
    let mut group = c.benchmark_group("trie");
    for n in [100usize, 1_000, 10_000] {
        let ks = keys(n);
        group.bench_with_input(BenchmarkId::new("put_all", n), &ks, |b, ks| {
            b.iter(|| {
                let mut m = AuthenticatedMap::new();
                for k in ks {
                    m.put(k, k.clone()).unwrap();
                }
                m.root_hash()
            })
        });
        let map = ks.iter().fold(AuthenticatedMap::new(), |mut m, k| {
            m.put(k, k.clone()).unwrap();
            m
        });
        let root = map.root_hash();
        group.bench_with_input(BenchmarkId::new("prove_verify", n), &ks, |b, ks| {
            let mut i = 0;
            b.iter(|| {
                let k = &ks[i % ks.len()];
                i += 1;
                let proof = map.prove(k).unwrap();
                assert!(verify(&root, k, k, &proof));
            })
        });
    }
    group.finish();
}

fn scenarios(c: &mut Criterion) {
    let (project, store) = uav_project(104);
    let mut group = c.benchmark_group("scenario");
    group.sample_size(10);
    for code in ["LLL", "HHH"] {
        let config: GranularityConfig = code.parse().unwrap();
        group.bench_function(code, |b| {
            b.iter_batched(
                || store.clone(),
                |mut s| run_scenario("bench", &project, config, AssetKind::Native, 1 << 40, &mut s).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn sealing(c: &mut Criterion) {
    let (project, mut store) = uav_project(104);
    let config: GranularityConfig = "HLH".parse().unwrap();
    let month = BillingPeriod {
        start: project.info().horizon_start,
        end: project.info().horizon_start + 28 * 86_400,
        label: "month".into(),
    };
    let engine = PaymentEngine::new(&project, config, AssetKind::Native, 1 << 40).unwrap();
    let settlement = engine.settle_period(&month, &mut store).unwrap();
    c.bench_function("seal_month_block_HLH", |b| {
        b.iter_batched(
            || PaymentEngine::new(&project, config, AssetKind::Native, 1 << 40).unwrap(),
            |mut e| e.commit_period(&month, &settlement, &store).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, trie, scenarios, sealing);
criterion_main!(benches);
