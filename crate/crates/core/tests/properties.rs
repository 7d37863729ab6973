mod common;

use std::collections::HashSet;

use common::*;
use embr_core::compose::identity_decoder;
use embr_core::inference::{forward_scores, stochastic_deviation};
use embr_core::trainer::{forward, model_gradient, FeatureMatrix, ToyModel};
use embr_core::{
    backward, build_score_fst, compose, edit_distance, embr_estimate, enumerate_paths,
    expected_additive_loss_semiring, expected_loss_gradient_exact, get_gammas, path_distribution,
    reweight_stochastic, EstimatorConfig, GradientMatrix, LogitMatrix, LossFunction, Wfst,
    WordSequence,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dag(seed: u64, n: usize, extra: usize) -> Wfst {
    random_dag(&mut ChaCha8Rng::seed_from_u64(seed), n, extra, 3)
}

fn dag_strategy() -> impl Strategy<Value = Wfst> {
    (any::<u64>(), 2usize..12, 0usize..16).prop_map(|(s, n, e)| dag(s, n, e))
}

fn logits_strategy(max_frames: usize, max_clusters: usize) -> impl Strategy<Value = LogitMatrix> {
    (1..=max_frames, 1..=max_clusters).prop_flat_map(|(t, q)| {
        prop::collection::vec(-3.0f64..3.0, t * q)
            .prop_map(move |v| LogitMatrix::from_flat(t, q, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip(fst in dag_strategy()) {
        let text = fst.to_text();
        let back = Wfst::parse_text(&text).unwrap();
        prop_assert_eq!(&back, &fst);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn enumeration_matches_brute_force(fst in dag_strategy()) {
        let brute: HashSet<Vec<usize>> = all_paths(&fst).into_iter().map(|p| p.0).collect();
        let listed = enumerate_paths(&fst, 100_000).unwrap();
        prop_assert_eq!(listed.len(), brute.len());
        prop_assert_eq!(fst.count_paths().unwrap(), brute.len() as u128);
        for p in &listed {
            prop_assert!(brute.contains(p.edges()));
            let sum: f64 = p.edges().iter().map(|&i| fst.edge(i).log_weight).sum();
            prop_assert_eq!(p.log_weight(), sum);
        }
    }

    #[test]
    fn distribution_sums_to_one(fst in dag_strategy()) {
        let total: f64 = path_distribution(&fst).unwrap().values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_satisfies_recurrence(fst in dag_strategy()) {
        let beta = backward(&fst).unwrap();
        prop_assert_eq!(beta.get(fst.final_state()), 0.0);
        for s in 0..fst.num_states() {
            if s == fst.final_state() {
                continue;
            }
            let expect = log_sum_exp(
                fst.edges().iter().filter(|e| e.src == s).map(|e| e.log_weight + beta.get(e.dst)),
            );
            prop_assert!((beta.get(s) - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
        let alpha = forward_scores(&fst).unwrap();
        prop_assert!((alpha[fst.final_state()] - beta.log_partition()).abs() < 1e-9);
        let brute = log_sum_exp(all_paths(&fst).into_iter().map(|p| p.1));
        prop_assert!((beta.log_partition() - brute).abs() < 1e-9);
    }

    #[test]
    fn reweighting_is_stochastic(fst in dag_strategy()) {
        let sfst = reweight_stochastic(&fst, &backward(&fst).unwrap()).unwrap();
        prop_assert!(stochastic_deviation(sfst.as_wfst()) <= 1e-9);
        prop_assert!(sfst.max_deviation() <= 1e-9);
    }

    #[test]
    fn reweighting_preserves_path_measure(fst in dag_strategy()) {
        let sfst = reweight_stochastic(&fst, &backward(&fst).unwrap()).unwrap();
        let r = sfst.as_wfst();
        prop_assert_eq!(r.num_edges(), fst.num_edges());
        for (edges, p) in path_probabilities(&fst) {
            let q: f64 = edges.iter().map(|&i| r.edge(i).log_weight).sum::<f64>().exp();
            prop_assert!((p - q).abs() < 1e-9, "{} vs {}", p, q);
        }
    }

    #[test]
    fn semiring_matches_enumeration(seed in any::<u64>(), n in 2usize..10, extra in 0usize..12) {
        let fst = dag(seed, n, extra);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let losses: Vec<f64> = (0..fst.num_edges()).map(|_| rng.random_range(0.0..3.0)).collect();
        let got = expected_additive_loss_semiring(&fst, &losses).unwrap();
        let brute: f64 = path_probabilities(&fst)
            .iter()
            .map(|(edges, p)| p * edges.iter().map(|&i| losses[i]).sum::<f64>())
            .sum();
        prop_assert!((got.expected_loss - brute).abs() <= 1e-10 * brute.abs().max(1e-300));
        let log_z = log_sum_exp(all_paths(&fst).into_iter().map(|p| p.1));
        prop_assert!((got.log_z - log_z).abs() < 1e-9);
    }

    #[test]
    fn gammas_have_unit_rows(z in logits_strategy(4, 3)) {
        let s = build_score_fst(&z);
        let paths = enumerate_paths(&s, 100_000).unwrap();
        prop_assert_eq!(paths.len(), z.clusters().pow(z.frames() as u32));
        for p in paths {
            let g = get_gammas(&s, &p, z.frames(), z.clusters()).unwrap();
            for t in 0..z.frames() {
                prop_assert_eq!(g.row(t).iter().sum::<u32>(), 1);
            }
        }
    }

    #[test]
    fn exact_gradient_matches_finite_differences(z in logits_strategy(3, 3), reference in prop::collection::vec(1u32..=3, 1..3)) {
        let graph = identity_decoder(z.frames(), z.clusters());
        let u = compose(&build_score_fst(&z), &graph).unwrap();
        let loss = LossFunction::word_edit(WordSequence::new(reference.clone()).unwrap());
        let exact = expected_loss_gradient_exact(&u, &z, &loss).unwrap();
        let oracle = |zz: &LogitMatrix| {
            brute_expected_loss(&graph, zz, &|_, words| levenshtein_recursive(words, &reference) as f64)
        };
        let numeric = central_differences(&z, 1e-5, &oracle);
        for (g, n) in exact.as_slice().iter().zip(&numeric) {
            if g.abs() > 1e-6 {
                prop_assert!((g - n).abs() / g.abs() < 1e-4, "{} vs {}", g, n);
            } else {
                prop_assert!(n.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn model_gradient_is_the_chain_rule(seed in any::<u64>(), frames in 1usize..4, clusters in 2usize..4, dims in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let model = ToyModel::new(dims, clusters, draw(dims * clusters), draw(clusters)).unwrap();
        let x = FeatureMatrix::from_flat(frames, dims, draw(frames * dims)).unwrap();
        let reference = vec![1u32; frames.min(2)];
        let graph = identity_decoder(frames, clusters);
        let loss = LossFunction::word_edit(WordSequence::new(reference.clone()).unwrap());
        let objective = |m: &ToyModel| {
            brute_expected_loss(&graph, &forward(m, &x).unwrap(), &|_, w| levenshtein_recursive(w, &reference) as f64)
        };

        let z = forward(&model, &x).unwrap();
        let u = compose(&build_score_fst(&z), &graph).unwrap();
        let dz = expected_loss_gradient_exact(&u, &z, &loss).unwrap();
        let (dw, db) = model_gradient(&model, &x, &dz);

        let eps = 1e-5;
        let nudge = |w: &[f64], b: &[f64], k: usize, bias: bool, d: f64| {
            let (mut w, mut b) = (w.to_vec(), b.to_vec());
            if bias { b[k] += d } else { w[k] += d }
            objective(&ToyModel::new(dims, clusters, w, b).unwrap())
        };
        let (w, b) = (model.weights().to_vec(), model.bias().to_vec());
        for (k, g) in dw.iter().enumerate() {
            let n = (nudge(&w, &b, k, false, eps) - nudge(&w, &b, k, false, -eps)) / (2.0 * eps);
            prop_assert!((g - n).abs() < 1e-6 + 1e-4 * g.abs(), "dW[{}] {} vs {}", k, g, n);
        }
        for (k, g) in db.iter().enumerate() {
            let n = (nudge(&w, &b, k, true, eps) - nudge(&w, &b, k, true, -eps)) / (2.0 * eps);
            prop_assert!((g - n).abs() < 1e-6 + 1e-4 * g.abs(), "db[{}] {} vs {}", k, g, n);
        }
    }

    #[test]
    fn estimate_summary_is_consistent(z in logits_strategy(3, 3), samples in 1usize..40, seed in any::<u64>()) {
        let u = compose(&build_score_fst(&z), &identity_decoder(z.frames(), z.clusters())).unwrap();
        let loss = LossFunction::word_edit(WordSequence::new(vec![1]).unwrap());
        let config = EstimatorConfig::new(samples, seed);
        let est = embr_estimate(&u, &z, &loss, &config).unwrap();
        prop_assert_eq!(est.num_samples, samples);
        prop_assert_eq!(est.per_sample_losses.len(), samples);
        let mean = est.per_sample_losses.iter().sum::<f64>() / samples as f64;
        prop_assert!((est.loss_mean - mean).abs() < 1e-12);
        prop_assert_eq!(est.gradient.frames(), z.frames());
        prop_assert_eq!(est.gradient.clusters(), z.clusters());
        let again = embr_estimate(&u, &z, &loss, &config).unwrap();
        prop_assert!(again.gradient.bit_eq(&est.gradient));
        prop_assert_eq!(again.expected_loss.to_bits(), est.expected_loss.to_bits());
    }

    #[test]
    fn constant_loss_gives_zero_gradient(z in logits_strategy(3, 3), c in -10.0f64..10.0, seed in any::<u64>()) {
        let u = compose(&build_score_fst(&z), &identity_decoder(z.frames(), z.clusters())).unwrap();
        let loss = LossFunction::custom(move |_| c);
        let est = embr_estimate(&u, &z, &loss, &EstimatorConfig::new(10, seed)).unwrap();
        prop_assert!(est.gradient.bit_eq(&GradientMatrix::zeros(z.frames(), z.clusters())));
        let (dw, db) = model_gradient(&ToyModel::zeros(2, z.clusters()), &FeatureMatrix::from_flat(z.frames(), 2, vec![0.5; z.frames() * 2]).unwrap(), &est.gradient);
        prop_assert!(dw.iter().chain(&db).all(|&g| g == 0.0));
    }

    #[test]
    fn edit_distance_metric_properties(
        a in prop::collection::vec(0u8..4, 0..9),
        b in prop::collection::vec(0u8..4, 0..9),
        c in prop::collection::vec(0u8..4, 0..9),
    ) {
        let ab = edit_distance(&a, &b);
        prop_assert_eq!(ab, levenshtein_recursive(&a, &b));
        prop_assert_eq!(ab, edit_distance(&b, &a));
        prop_assert_eq!(edit_distance(&a, &a), 0);
        prop_assert!(ab >= a.len().abs_diff(b.len()));
        prop_assert!(ab <= a.len().max(b.len()));
        prop_assert!(edit_distance(&a, &c) <= ab + edit_distance(&b, &c));
    }
}
