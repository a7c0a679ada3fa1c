//! Shared benchmark inputs.

use kgdm_core::linking::pipeline::training_examples;
use kgdm_core::linking::{CorefSource, LinkFeatureVector};
use kgdm_core::org_to_graph;
use kgdm_core::synth::{linking_benchmark, LinkingBenchmark};

/// Name pairs drawn from a generated organization.
pub fn name_pairs(seed: u64, n: usize) -> Vec<(String, String)> {
    let org = kgdm_core::generate_org(seed, &Default::default()).expect("default config is valid");
    let names: Vec<&str> = org.persons.iter().map(|p| p.name.as_str()).collect();
    (0..n)
        .map(|i| {
            (
                names[i % names.len()].to_string(),
                names[(i * 7 + 3) % names.len()].to_string(),
            )
        })
        .collect()
}

pub fn linking(seed: u64) -> LinkingBenchmark {
    linking_benchmark(seed)
}

/// Labeled training pairs of the synthetic benchmark's train split.
pub fn training_pairs(b: &LinkingBenchmark) -> Vec<(LinkFeatureVector, bool)> {
    let g = org_to_graph(&b.org).expect("generated organizations are valid");
    b.train
        .iter()
        .flat_map(|d| training_examples(&g, d, &CorefSource::Heuristic).expect("replay succeeds"))
        .collect()
}
