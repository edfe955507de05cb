mod common;

use qwmap_core::{EmbeddingKind, EmbeddingSpec, RemapFunction, VqcModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng, kind: EmbeddingKind, n_features: usize, n_classes: usize, layers: usize, reupload: bool) -> VqcModel {
    let spec = EmbeddingSpec::new(kind, n_features).unwrap();
    let mut m = VqcModel::initialized(spec, n_classes, layers, RemapFunction::Identity, reupload, rng).unwrap();
    for b in &mut m.biases {
        *b = rng.gen_range(-1.0..1.0);
    }
    m
}

#[test]
fn every_small_architecture_matches_dense_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for kind in EmbeddingKind::ALL {
        let feature_counts: Vec<usize> = match kind {
            EmbeddingKind::Angle => (1..=3).collect(),
            EmbeddingKind::Amplitude => (1..=8).collect(),
        };
        for n_features in feature_counts {
            for n_classes in 1..=3 {
                for layers in 1..=2 {
                    for reupload in [false, true] {
                        let model = random_model(&mut rng, kind, n_features, n_classes, layers, reupload);
                        if model.n_qubits > 3 {
                            continue;
                        }
                        for _ in 0..3 {
                            let x: Vec<f64> = (0..n_features).map(|_| rng.gen_range(0.05..3.0)).collect();
                            let ours = model.forward(&x).unwrap().expectations;
                            let dense = common::model_expectations(&model, &x);
                            for (a, b) in ours.iter().zip(&dense) {
                                assert!((a - b).abs() < 1e-12, "{kind} f={n_features} c={n_classes} L={layers} r={reupload}: {a} vs {b}");
                            }
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 200);
}

#[test]
fn remapped_weights_reach_the_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut model = random_model(&mut rng, EmbeddingKind::Angle, 3, 2, 2, true);
    for w in &mut model.weights {
        *w *= 3.0;
    }
    for remap in RemapFunction::ALL {
        model.remap = remap;
        let x = [0.3, 1.7, 2.9];
        let ours = model.forward(&x).unwrap().expectations;
        let dense = common::model_expectations(&model, &x);
        for (a, b) in ours.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12, "{remap}");
        }
    }
}
