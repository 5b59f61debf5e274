use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};
use stinger_core::exec::Execution;
use stinger_core::kinematics::workspace_region_with;
use stinger_core::scenario::load_scenario;
use stinger_core::simulator::{run_batch, ScenarioInputs};

fn scenario(name: &str) -> stinger_core::scenario::Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_scenario(&path).expect("bundled scenario")
}

fn workspace(c: &mut Criterion) {
    let s = scenario("fig5d.json");
    let spec = s.workspace.expect("anchors");
    let mut group = c.benchmark_group("workspace_fig5d_2mm");
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(label, |b| {
            b.iter(|| workspace_region_with(black_box(&spec.anchors), &s.inputs.robot, 0.002, exec).unwrap())
        });
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let base = scenario("pentagon_drill.json").inputs;
    let inputs: Vec<ScenarioInputs> = (0..8)
        .map(|i| {
            let mut s = base.clone();
            s.name = format!("pentagon_{i}");
            s.sim.seed = i;
            s.sim.sensor_noise = 0.5;
            s
        })
        .collect();
    let mut group = c.benchmark_group("pentagon_batch_8");
    group.sample_size(10);
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(label, |b| b.iter(|| run_batch(black_box(&inputs), exec)));
    }
    group.finish();
}

criterion_group!(benches, workspace, batch);
criterion_main!(benches);
