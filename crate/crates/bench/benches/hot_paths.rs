//! Per-tick hot paths: momentum accumulation, account stepping, replica
//! distances. Run with `cargo bench -p strmom-bench`.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strmom_bench::walk_stream;
use strmom_core::backtester::{run_commands, StepCommand, StrategyConfig};
use strmom_core::engine::GridSpec;
use strmom_core::replica::{hilbert_distance, Replica, ReplicaSystem, ReplicaSystemConfig};
use strmom_core::string::MomentumBank;

fn momentum_bank(c: &mut Criterion) {
    let ticks = 20_000usize;
    let stream = walk_stream(1, ticks);
    let mids: Vec<f64> = stream.quotes().iter().map(|q| 0.5 * (q.bid + q.ask)).collect();
    let sets = {
        let mut grid = GridSpec::default();
        grid.n_s = Some(16);
        grid.enumerate().unwrap()
    };
    let mut group = c.benchmark_group("momentum_bank");
    group.throughput(Throughput::Elements(ticks as u64));
    group.sample_size(10);
    group.bench_function("16_sets_window_900", |b| {
        b.iter(|| {
            let mut bank = MomentumBank::new(&sets).unwrap();
            let mut emitted = 0u64;
            bank.run(&mids, |_, _| {
                emitted += 1;
                Ok(())
            })
            .unwrap();
            emitted
        })
    });
    group.finish();
}

fn account_step(c: &mut Criterion) {
    let ticks = 100_000usize;
    let stream = walk_stream(2, ticks);
    // Alternate strong summaries so the account keeps opening and closing.
    let commands: Vec<StepCommand> = (0..ticks)
        .map(|t| StepCommand::Summary(if (t / 600) % 2 == 0 { 0.5 } else { -0.5 }))
        .collect();
    let cfg = StrategyConfig::default();
    let mut group = c.benchmark_group("account_step");
    group.throughput(Throughput::Elements(ticks as u64));
    group.sample_size(20);
    group.bench_function("summary_stream", |b| {
        b.iter(|| run_commands(&stream, &commands, &cfg, None).unwrap().final_nav())
    });
    group.finish();
}

fn replica_distance(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let coords = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..2)
            .map(|_| (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    };
    let a = coords(&mut rng);
    let b_ = coords(&mut rng);
    c.bench_function("hilbert_distance_p2_h16", |b| {
        b.iter(|| hilbert_distance(&a, &b_, 2.0).unwrap())
    });

    // Full-store vote: 256 distances plus the weighted spin sum.
    let config = ReplicaSystemConfig::default();
    let mut system = ReplicaSystem::new(config).unwrap();
    for _ in 0..256 {
        let spin = if rng.gen_bool(0.5) { 1 } else { -1 };
        system.push(Replica::new(coords(&mut rng), spin).unwrap()).unwrap();
    }
    let probe = coords(&mut rng);
    c.bench_function("fuzzy_spin_full_store", |b| {
        b.iter_batched(
            || probe.clone(),
            |p| system.fuzzy_spin(&p).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(hot_paths, momentum_bank, account_step, replica_distance);
criterion_main!(hot_paths);
