use aurora::descriptor::{Dataset, LatentModel, PcaModel};
use aurora::par;
use aurora::tasks::{ArenaConfig, BallisticConfig, Task, SENSORY_DIM};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn genotypes(task: &Task, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n).map(|_| task.sample_genotype(&mut rng)).collect()
}

fn batch_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_batch");
    let tasks = [
        ("ballistic", Task::Ballistic(BallisticConfig::default())),
        ("airhockey", Task::AirHockey(ArenaConfig::default())),
    ];
    for (name, task) in &tasks {
        let gs = genotypes(task, 200);
        let eval = |g: &Vec<f64>| task.evaluate(g).unwrap().to_sensory();
        group.bench_with_input(BenchmarkId::new("parallel", name), &gs, |b, gs| {
            b.iter(|| par::map(black_box(gs), eval))
        });
        group.bench_with_input(BenchmarkId::new("sequential", name), &gs, |b, gs| {
            b.iter(|| par::map_sequential(black_box(gs), eval))
        });
    }
    group.finish();
}

fn reprojection(c: &mut Criterion) {
    let task = Task::AirHockey(ArenaConfig::default());
    let rows: Vec<Vec<f64>> = par::map(&genotypes(&task, 5000), |g| {
        task.evaluate(g).unwrap().to_sensory()
    });
    let data = Dataset::from_rows(SENSORY_DIM, &rows).unwrap();
    let model = LatentModel::Pca(PcaModel::fit(&data, 2).unwrap());
    let mut group = c.benchmark_group("reproject_archive");
    group.bench_function("parallel", |b| {
        b.iter(|| par::map(black_box(&rows), |r| model.project(r).unwrap()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| par::map_sequential(black_box(&rows), |r| model.project(r).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, batch_evaluation, reprojection);
criterion_main!(benches);
