use criterion::{criterion_group, criterion_main, Criterion};
use nilcomm::canonicalize::Canonicalizer;
use nilcomm::construct::Mode;
use nilcomm::parallel;
use nilcomm::pipeline::factor;
use nilcomm::scan::{run_scan, run_scan_sequential, ScanConfig};
use nilcomm::testgen::{gen_nilpotent, Decay, GenSpec};

fn scan_config() -> ScanConfig {
    ScanConfig {
        n_range: 4..=6,
        decay: Decay::Geometric { rho: 0.5 },
        dims: vec![16, 32],
        trials: 4,
        seed: 1,
        tol: 1e-8,
    }
}

fn bench_scan(c: &mut Criterion) {
    let cfg = scan_config();
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| run_scan_sequential(&cfg).unwrap()));
    group.bench_function("parallel", |b| b.iter(|| run_scan(&cfg).unwrap()));
    group.finish();
}

fn bench_round_trip(c: &mut Criterion) {
    let inputs: Vec<_> = (0..32)
        .map(|seed| {
            gen_nilpotent(&GenSpec {
                jordan_sizes: vec![6, 5, 4, 4, 3, 2],
                decay: Decay::Polynomial { alpha: 2.0 },
                conjugate: true,
                seed,
            })
            .unwrap()
        })
        .collect();
    let canon = Canonicalizer::default();
    let run = |a: &nilcomm::Matrix| factor(a, Mode::Theorem, &canon).unwrap().report.residual_rel;

    let mut group = c.benchmark_group("theorem_round_trip");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| parallel::map_sequential(&inputs, run)));
    group.bench_function("parallel", |b| b.iter(|| parallel::map(&inputs, run)));
    group.finish();
}

criterion_group!(benches, bench_scan, bench_round_trip);
criterion_main!(benches);
