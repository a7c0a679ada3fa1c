use kgdm_core::chat::default_linker;
use kgdm_core::eval::train_on;
use kgdm_core::linking::{CorefSource, FeatureSet, Hyper, ModelKind};
use kgdm_core::org_to_graph;
use kgdm_core::synth::linking_benchmark;

#[test]
fn bundled_linker_is_reproducible() {
    let b = linking_benchmark(42);
    let g = org_to_graph(&b.org).unwrap();
    let trained = train_on(
        &g,
        &b.train,
        ModelKind::Mlp,
        FeatureSet::StringGraph,
        &CorefSource::Heuristic,
        &Hyper::default(),
    )
    .unwrap();
    assert_eq!(trained.to_json(), default_linker().to_json());
}

#[test]
#[ignore]
fn regenerate_bundled_linker() {
    let b = linking_benchmark(42);
    let g = org_to_graph(&b.org).unwrap();
    let trained = train_on(
        &g,
        &b.train,
        ModelKind::Mlp,
        FeatureSet::StringGraph,
        &CorefSource::Heuristic,
        &Hyper::default(),
    )
    .unwrap();
    std::fs::write(
        concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/default_linker.json"),
        trained.to_json(),
    )
    .unwrap();
}
