use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smartgen_core::cfg::build_cfg;
use smartgen_core::engine::{generate, EngineConfig, SchedulerKind};
use smartgen_core::frontend::parse;

const SOURCES: [(&str, &str); 3] = [
    ("checkSign", include_str!("../../../corpus/sign.mc")),
    ("getLocalPayload", include_str!("../../../corpus/payload.mc")),
    ("scanFrames", include_str!("../../../corpus/loops.mc")),
];

fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate");
    for (name, src) in SOURCES {
        let program = parse(src).expect("corpus parses");
        let cfg = build_cfg(program.function(name).expect("function exists"));
        for (label, scheduler) in [("flood", SchedulerKind::Flood), ("dfs", SchedulerKind::DepthFirst)] {
            let config = EngineConfig { scheduler, ..EngineConfig::default() };
            g.bench_with_input(BenchmarkId::new(label, name), &config, |b, config| {
                b.iter(|| generate(&program, &cfg, config).expect("generation runs"))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
