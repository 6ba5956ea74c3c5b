use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{SignedGraph, UnsignedGraph};

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn random_subject(rng: &mut ChaCha8Rng, n: usize, label: usize) -> Subject {
    let mut f = Tensor::zeros(n, n);
    let mut s = Tensor::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let w: f64 = rng.random_range(-1.0..1.0);
            let w = if w.abs() < 0.2 { 0.0 } else { w };
            f.set(i, j, w);
            f.set(j, i, w);
            let v = rng.random_range(0.0..1.0);
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    f.set(0, 1, 0.9);
    f.set(1, 0, 0.9);
    let functional = SignedGraph::new(f, Some(random(rng, n, 5))).unwrap();
    Subject::new(functional, UnsignedGraph::new(s).unwrap(), Some(label), Some(rng.random_range(0.0..2.0)))
        .unwrap()
}

fn small_config(task: Task, t: usize) -> DsbnConfig {
    DsbnConfig {
        t_layers: t,
        hidden_dim: 3,
        latent_dim: 4,
        mlp_widths: vec![3],
        ..DsbnConfig::for_task(task)
    }
}

fn scalar_loss(tape: &mut Tape, f: impl FnOnce(&mut Tape, Var) -> Result<Var>, recon: Tensor) -> f64 {
    let r = tape.constant(recon);
    let l = f(tape, r).unwrap();
    tape.value(l).item()
}

#[test]
fn orthogonal_latents_decode_to_half() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 3.0]).unwrap());
    let r = decode_structural(&mut tape, x).unwrap();
    assert_eq!(tape.value(r).get(0, 1), 0.5);
}

#[test]
fn decoder_is_symmetric_and_matches_pairwise_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random(&mut rng, 7, 4);
    let mut tape = Tape::new();
    let v = tape.leaf(x.clone());
    let r = decode_structural(&mut tape, v).unwrap();
    let r = tape.value(r).clone();
    for i in 0..7 {
        for j in 0..7 {
            assert_eq!(r.get(i, j), r.get(j, i));
            let dot: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum();
            assert!((r.get(i, j) - 1.0 / (1.0 + (-dot).exp())).abs() < 1e-14);
            assert!(r.get(i, j) > 0.0 && r.get(i, j) < 1.0);
        }
    }
}

#[test]
fn readout_sums_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random(&mut rng, 5, 3);
    let mut tape = Tape::new();
    let v = tape.leaf(x.clone());
    let r = readout(&mut tape, v).unwrap();
    let r = tape.value(r).clone();
    for c in 0..3 {
        let manual: f64 = (0..5).map(|i| x.get(i, c)).sum();
        assert!((r.get(0, c) - manual).abs() < 1e-15);
    }
    let single = tape.leaf(Tensor::from_vec(1, 3, vec![0.1, 0.2, 0.3]).unwrap());
    let r = readout(&mut tape, single).unwrap();
    assert_eq!(tape.value(r).data(), &[0.1, 0.2, 0.3]);

    let permuted = Tensor::from_fn(5, 3, |i, c| x.get((i + 2) % 5, c));
    let p = tape.leaf(permuted);
    let rp = readout(&mut tape, p).unwrap();
    let v2 = tape.leaf(x);
    let r2 = readout(&mut tape, v2).unwrap();
    assert!(tape.value(rp).max_abs_diff(tape.value(r2)) < 1e-15);
}

#[test]
fn zero_mlp_gives_uniform_log_probabilities() {
    let mlp = MlpParams {
        layers: vec![DenseParams {
            w: Tensor::zeros(4, 2),
            b: Tensor::zeros(1, 2),
        }],
    };
    let mut tape = Tape::new();
    let mv = mlp.map(&mut |t: &Tensor| tape.leaf(t.clone()));
    let x = tape.leaf(Tensor::filled(1, 4, 0.7));
    let out = mlp_head(&mut tape, x, &mv, Task::Classification).unwrap();
    for &v in tape.value(out).data() {
        assert!((v - libm::log(0.5)).abs() < 1e-15);
    }
}

#[test]
fn identity_regression_head_passes_first_component() {
    let mlp = MlpParams {
        layers: vec![DenseParams {
            w: Tensor::from_vec(3, 1, vec![1.0, 0.0, 0.0]).unwrap(),
            b: Tensor::zeros(1, 1),
        }],
    };
    let mut tape = Tape::new();
    let mv = mlp.map(&mut |t: &Tensor| tape.leaf(t.clone()));
    let x = tape.leaf(Tensor::from_vec(1, 3, vec![-2.5, 9.0, 4.0]).unwrap());
    let out = mlp_head(&mut tape, x, &mv, Task::Regression).unwrap();
    assert_eq!(tape.value(out).item(), -2.5);
}

#[test]
fn mlp_head_matches_manual_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mlp = MlpParams {
        layers: vec![
            DenseParams {
                w: random(&mut rng, 4, 3),
                b: random(&mut rng, 1, 3),
            },
            DenseParams {
                w: random(&mut rng, 3, 2),
                b: random(&mut rng, 1, 2),
            },
        ],
    };
    let x = random(&mut rng, 1, 4);
    let mut tape = Tape::new();
    let mv = mlp.map(&mut |t: &Tensor| tape.leaf(t.clone()));
    let xv = tape.leaf(x.clone());
    let out = mlp_head(&mut tape, xv, &mv, Task::Classification).unwrap();
    let out = tape.value(out).clone();

    let l0 = &mlp.layers[0];
    let hidden: Vec<f64> = (0..3)
        .map(|c| {
            let z: f64 = (0..4).map(|k| x.get(0, k) * l0.w.get(k, c)).sum::<f64>() + l0.b.get(0, c);
            if z > 0.0 {
                z
            } else {
                z.exp_m1()
            }
        })
        .collect();
    let l1 = &mlp.layers[1];
    let logits: Vec<f64> = (0..2)
        .map(|c| (0..3).map(|k| hidden[k] * l1.w.get(k, c)).sum::<f64>() + l1.b.get(0, c))
        .collect();
    let lse = logits.iter().map(|z| z.exp()).sum::<f64>().ln();
    for c in 0..2 {
        assert!((out.get(0, c) - (logits[c] - lse)).abs() < 1e-14);
    }
    let total: f64 = out.data().iter().map(|v| v.exp()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn reconstruction_loss_examples() {
    let mut tape = Tape::new();
    let target = Tensor::zeros(2, 2);
    let half = Tensor::filled(2, 2, 0.5);
    let loss = scalar_loss(&mut tape, |t, r| reconstruction_loss(t, r, &target, 0.05), half);
    assert!((loss - 0.2025).abs() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let target = Tensor::from_fn(5, 5, |i, j| if i == j { 0.0 } else { rng.random_range(0.0..0.9) });
    let perfect = Tensor::from_fn(5, 5, |i, j| if i == j { 0.3 } else { target.get(i, j) + 0.05 });
    let loss = scalar_loss(&mut tape, |t, r| reconstruction_loss(t, r, &target, 0.05), perfect);
    assert_eq!(loss, 0.0);
}

#[test]
fn reconstruction_loss_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let target = Tensor::from_fn(6, 6, |i, j| if i == j { 0.0 } else { rng.random_range(0.0..1.0) });
    let recon = Tensor::from_fn(6, 6, |_, _| rng.random_range(0.0..1.0));
    let mut expect = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                expect += (recon.get(i, j) - target.get(i, j) - 0.05).powi(2);
            }
        }
    }
    expect /= 30.0;
    let mut tape = Tape::new();
    let loss = scalar_loss(&mut tape, |t, r| reconstruction_loss(t, r, &target, 0.05), recon);
    assert!((loss - expect).abs() < 1e-14);
}

#[test]
fn supervised_loss_examples() {
    let mut tape = Tape::new();
    let lp = tape.constant(Tensor::filled(1, 2, libm::log(0.5)));
    for label in 0..2 {
        let l = supervised_loss(&mut tape, lp, Some(label), None, Task::Classification).unwrap();
        assert!((tape.value(l).item() - core::f64::consts::LN_2).abs() < 1e-15);
    }
    assert!(matches!(
        supervised_loss(&mut tape, lp, None, Some(1.0), Task::Classification),
        Err(Error::MissingTarget(_))
    ));
    let y = tape.constant(Tensor::scalar(1.25));
    let l = supervised_loss(&mut tape, y, None, Some(1.25), Task::Regression).unwrap();
    assert_eq!(tape.value(l).item(), 0.0);
    assert!(supervised_loss(&mut tape, y, Some(1), None, Task::Regression).is_err());
}

#[test]
fn supervised_loss_batch_matches_direct_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tape = Tape::new();
    let (mut got, mut expect) = (0.0, 0.0);
    for _ in 0..3 {
        let logits = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let label = rng.random_range(0..3);
        let lse = logits.iter().map(|z: &f64| z.exp()).sum::<f64>().ln();
        expect += lse - logits[label];
        let z = tape.constant(Tensor::from_vec(1, 3, logits.to_vec()).unwrap());
        let lp = tape.log_softmax(z);
        let l = supervised_loss(&mut tape, lp, Some(label), None, Task::Classification).unwrap();
        got += tape.value(l).item();
    }
    assert!((got / 3.0 - expect / 3.0).abs() < 1e-14);
}

#[test]
fn total_loss_is_linear_in_weights() {
    let mut tape = Tape::new();
    let r = tape.constant(Tensor::scalar(0.37));
    let s = tape.constant(Tensor::scalar(1.91));
    for eta1 in [0.0, 0.1, 0.5, 1.0] {
        for eta2 in [0.0, 0.1, 0.5, 1.0] {
            let t = total_loss(&mut tape, r, s, eta1, eta2).unwrap();
            assert_eq!(tape.value(t).item(), eta1 * 0.37 + eta2 * 1.91);
        }
    }
    let t = total_loss(&mut tape, r, s, 0.0, 1.0).unwrap();
    assert_eq!(tape.value(t).item(), 1.91);
}

#[test]
fn default_loss_weights() {
    let c = DsbnConfig::classification();
    assert_eq!((c.eta1, c.eta2, c.delta, c.t_layers, c.top_k), (0.1, 1.0, 0.05, 3, 10));
    let r = DsbnConfig::regression();
    assert_eq!((r.eta1, r.eta2), (0.5, 1.0));
    let nr = DsbnConfig {
        ablation: Ablation::NoRecon,
        ..c
    };
    assert_eq!(nr.effective_eta1(), 0.0);
}

#[test]
fn config_validation() {
    let ok = DsbnConfig::default();
    assert!(ok.validate().is_ok());
    for bad in [
        DsbnConfig { t_layers: 0, ..ok.clone() },
        DsbnConfig { eta1: -0.1, ..ok.clone() },
        DsbnConfig { eta2: f64::NAN, ..ok.clone() },
        DsbnConfig { delta: 0.5, ..ok.clone() },
        DsbnConfig { delta: -0.01, ..ok.clone() },
        DsbnConfig { latent_dim: 5, ..ok.clone() },
        DsbnConfig { n_classes: 1, ..ok.clone() },
    ] {
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))), "{bad:?}");
    }
}

#[test]
fn threshold_is_strict() {
    let m = Tensor::from_vec(1, 4, vec![0.04, 0.05, 0.3, 0.0499999]).unwrap();
    assert_eq!(threshold_reconstruction(&m, 0.05).data(), &[0.0, 0.05, 0.3, 0.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = Tensor::from_fn(8, 8, |_, _| rng.random_range(0.0..0.1));
    let below = m.data().iter().filter(|&&x| x < 0.05).count();
    let t = threshold_reconstruction(&m, 0.05);
    assert_eq!(t.data().iter().filter(|&&x| x == 0.0).count(), below);
}

#[test]
fn classification_metric_examples() {
    let truth = [0, 1, 0, 1, 1, 0];
    let r = classification_metrics(&truth, &truth, 2).unwrap();
    assert_eq!((r.accuracy, r.precision, r.f1), (1.0, 1.0, 1.0));

    let r = classification_metrics(&[1, 1, 1, 1], &[0, 1, 0, 1], 2).unwrap();
    assert_eq!(r.accuracy, 0.5);
    assert!(classification_metrics(&[], &[], 2).is_err());
    assert!(regression_mae(&[], &[]).is_err());
}

#[test]
fn classification_metrics_match_confusion_arithmetic() {
    // confusion (rows truth, cols predicted): [[3, 1], [2, 4]]
    let truth = [0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
    let pred = [0, 0, 0, 1, 0, 0, 1, 1, 1, 1];
    let r = classification_metrics(&pred, &truth, 2).unwrap();
    let (p0, r0) = (3.0 / 5.0, 3.0 / 4.0);
    let (p1, r1) = (4.0 / 5.0, 4.0 / 6.0);
    let f = |p: f64, r: f64| 2.0 * p * r / (p + r);
    assert!((r.accuracy - 0.7).abs() < 1e-15);
    assert!((r.precision - (p0 + p1) / 2.0).abs() < 1e-15);
    assert!((r.f1 - (f(p0, r0) + f(p1, r1)) / 2.0).abs() < 1e-15);
    assert_eq!(regression_mae(&[1.0, 2.0], &[1.5, 1.0]).unwrap(), 0.75);
}

#[test]
fn reconstruction_mae_ignores_diagonal() {
    let a = Tensor::from_vec(2, 2, vec![9.0, 0.2, 0.4, -9.0]).unwrap();
    let b = Tensor::from_vec(2, 2, vec![0.0, 0.1, 0.1, 0.0]).unwrap();
    assert!((reconstruction_mae(&a, &b).unwrap() - 0.2).abs() < 1e-15);
}

#[test]
fn single_layer_cam_decomposes_the_logit() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let latents = random(&mut rng, 5, 4);
    let mlp = MlpParams::init(&mut rng, 4, &[], 2);
    let mut mlp = mlp;
    mlp.layers[0].b = random(&mut rng, 1, 2);
    let mut tape = Tape::new();
    let x = tape.constant(latents.clone());
    let pooled = readout(&mut tape, x).unwrap();
    let w = tape.constant(mlp.layers[0].w.clone());
    let z = tape.matmul(pooled, w).unwrap();
    let logits = tape.value(z).clone();
    for class in 0..2 {
        let contrib = node_contributions(&latents, &mlp, class).unwrap();
        let sum: f64 = contrib.iter().sum();
        let logit = logits.get(0, class) + mlp.layers[0].b.get(0, class);
        assert!((sum + mlp.layers[0].b.get(0, class) - logit).abs() < 1e-12);
    }
}

#[test]
fn saliency_ranks_descending_with_index_ties() {
    // Single linear head, class 0 weight picks the first latent column.
    let latents = Tensor::from_vec(5, 2, vec![0.2, 0.0, 0.9, 0.0, -0.5, 0.0, 0.9, 0.0, 0.0, 1.0]).unwrap();
    let mlp = MlpParams {
        layers: vec![DenseParams {
            w: Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            b: Tensor::zeros(1, 2),
        }],
    };
    let map = saliency_map(&latents, &mlp, Task::Classification, 0, 10).unwrap();
    let nodes: Vec<usize> = map.iter().map(|e| e.node).collect();
    assert_eq!(nodes, vec![1, 3, 0, 2, 4]);
    assert_eq!(map[2].score, 0.2);
    assert_eq!(map[3].score, 0.0);
    assert_eq!(map.iter().map(|e| e.rank).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    assert_eq!(saliency_map(&latents, &mlp, Task::Classification, 0, 2).unwrap().len(), 2);
    assert!(matches!(
        saliency_map(&latents, &mlp, Task::Regression, 0, 2),
        Err(Error::NotClassification)
    ));
    assert!(saliency_map(&latents, &mlp, Task::Classification, 2, 2).is_err());
}

#[test]
fn saliency_top_node_matches_occlusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let latents = random(&mut rng, 5, 3);
        let mlp = MlpParams::init(&mut rng, 3, &[], 2);
        let logit = |rows: &[usize]| -> f64 {
            rows.iter()
                .map(|&i| (0..3).map(|k| latents.get(i, k) * mlp.layers[0].w.get(k, 1)).sum::<f64>())
                .sum()
        };
        let all: Vec<usize> = (0..5).collect();
        let full = logit(&all);
        let drops: Vec<f64> = (0..5)
            .map(|i| {
                let rest: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
                full - logit(&rest)
            })
            .collect();
        let best = (0..5).fold(0, |b, i| if drops[i] > drops[b] { i } else { b });
        let map = saliency_map(&latents, &mlp, Task::Classification, 1, 1).unwrap();
        if drops[best] > 0.0 {
            assert_eq!(map[0].node, best);
        }
    }
}

#[test]
fn deeper_head_cam_distributes_the_pooled_activation() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let latents = random(&mut rng, 4, 3);
    let mut mlp = MlpParams::init(&mut rng, 3, &[5], 2);
    mlp.layers[0].b = random(&mut rng, 1, 5);

    // Independent recomputation: pooled pre-activation, elu gain per unit.
    let w0 = &mlp.layers[0].w;
    let b0 = &mlp.layers[0].b;
    let mut gains = [0.0; 5];
    let mut pooled_act = [0.0; 5];
    for k in 0..5 {
        let z: f64 = (0..4).map(|i| (0..3).map(|d| latents.get(i, d) * w0.get(d, k)).sum::<f64>()).sum::<f64>()
            + b0.get(0, k);
        let a = if z > 0.0 { z } else { z.exp() - 1.0 };
        pooled_act[k] = a;
        gains[k] = if z == 0.0 { 1.0 } else { a / z };
    }
    let h = per_node_inputs(&latents, &mlp).unwrap();
    for i in 0..4 {
        for k in 0..5 {
            let share: f64 = (0..3).map(|d| latents.get(i, d) * w0.get(d, k)).sum();
            assert!((h.get(i, k) - gains[k] * share).abs() < 1e-12);
        }
    }
    // Shares plus the gain-scaled bias add up to the pooled activation.
    for k in 0..5 {
        let total: f64 = (0..4).map(|i| h.get(i, k)).sum::<f64>() + gains[k] * b0.get(0, k);
        assert!((total - pooled_act[k]).abs() < 1e-12);
    }
    let c = node_contributions(&latents, &mlp, 1).unwrap();
    let manual: f64 = (0..5).map(|k| h.get(2, k) * mlp.layers[1].w.get(k, 1)).sum();
    assert!((c[2] - manual).abs() < 1e-15);
}

#[test]
fn forward_shapes_and_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = PreparedSubject::new(&random_subject(&mut rng, 6, 1)).unwrap();
    let config = DsbnConfig::default();
    let params = DsbnParams::init(&mut rng, &config).unwrap();
    let out = predict(&params, &s.graph, &config).unwrap();
    assert_eq!(out.latents.shape(), [6, 8]);
    assert_eq!(out.recon.shape(), [6, 6]);
    assert_eq!(out.prediction.shape(), [1, 2]);
    let total: f64 = out.prediction.data().iter().map(|v| v.exp()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(out.recon, out.recon.transpose());
    assert!(out.predicted_class(Task::Classification).is_some());
    assert!(out.predicted_class(Task::Regression).is_none());
}

#[test]
fn ablations_share_shapes_and_zero_their_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s = PreparedSubject::new(&random_subject(&mut rng, 5, 0)).unwrap();
    let base = DsbnConfig::default();
    let params = DsbnParams::init(&mut rng, &base).unwrap();
    let full = predict(&params, &s.graph, &base).unwrap();
    for ablation in Ablation::ALL {
        let config = DsbnConfig { ablation, ..base.clone() };
        let other = DsbnParams::init(&mut ChaCha8Rng::seed_from_u64(0), &config).unwrap();
        let shapes = |p: &DsbnParams| p.named().iter().map(|(n, t)| (n.clone(), t.shape())).collect::<Vec<_>>();
        assert_eq!(shapes(&other), shapes(&params));
        let out = predict(&params, &s.graph, &config).unwrap();
        for i in 0..5 {
            let row = out.latents.row(i);
            match ablation {
                Ablation::NoBue => assert!(row[..4].iter().all(|&x| x == 0.0)),
                Ablation::NoPne => assert!(row[4..].iter().all(|&x| x == 0.0)),
                _ => assert_eq!(row, full.latents.row(i)),
            }
        }
    }
}

#[test]
fn no_recon_still_reports_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let subjects: Vec<_> = (0..3)
        .map(|i| PreparedSubject::new(&random_subject(&mut rng, 5, i % 2)).unwrap())
        .collect();
    let config = DsbnConfig {
        ablation: Ablation::NoRecon,
        ..DsbnConfig::default()
    };
    let params = DsbnParams::init(&mut rng, &config).unwrap();
    let report = evaluate(&params, &subjects, &config).unwrap();
    assert!(report.recon_loss > 0.0 && report.recon_mae > 0.0);
    assert!((report.loss - report.supervised_loss).abs() < 1e-15);
    assert!(report.classification.is_some() && report.mae.is_none());
}

#[test]
fn full_loss_passes_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for task in [Task::Classification, Task::Regression] {
        for t in 1..=3 {
            let config = small_config(task, t);
            let subject = PreparedSubject::new(&random_subject(&mut rng, 4, 1)).unwrap();
            let params = DsbnParams::init(&mut rng, &config).unwrap();
            let report = check_subject_gradients(&params, &subject, &config, 1e-6, 1e-4).unwrap();
            assert!(report.passed, "{task:?} t={t}: {:?} {}", report.worst, report.max_rel_error);
        }
    }
}

#[test]
fn named_round_trip_and_mismatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let config = DsbnConfig::default();
    let a = DsbnParams::init(&mut rng, &config).unwrap();
    let mut b = DsbnParams::init(&mut rng, &config).unwrap();
    assert_ne!(a, b);
    b.load_named(&a.to_named()).unwrap();
    assert_eq!(a, b);
    let mut entries = a.to_named();
    entries[0].1 = Tensor::zeros(1, 1);
    assert!(matches!(b.load_named(&entries), Err(Error::ParamMismatch(_))));
    entries.pop();
    assert!(b.load_named(&entries).is_err());
}

#[test]
fn feature_width_must_match_config() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let s = PreparedSubject::new(&random_subject(&mut rng, 4, 0)).unwrap();
    let config = DsbnConfig {
        feature_dim: 3,
        ..DsbnConfig::default()
    };
    let params = DsbnParams::init(&mut rng, &config).unwrap();
    assert!(predict(&params, &s.graph, &config).is_err());
}
