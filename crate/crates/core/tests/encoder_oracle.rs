//! Encoder layers against per-node loop implementations.

mod support;

use std::collections::BTreeSet;

use dsbn_core::autodiff::{Tape, Var};
use dsbn_core::encoder::{
    bue_encode, pne_encode, sge_fuse, BueLayerParams, EncoderGraph, EncoderOptions, QuerySource,
    SgeDims, SgeParams,
};
use dsbn_core::graph::{balance_oracle, SignedGraph};
use dsbn_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::naive;

fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64, c: usize) -> SignedGraph {
    let mut adj = Tensor::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                let w: f64 = rng.random_range(0.05..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                adj.set(i, j, w);
                adj.set(j, i, w);
            }
        }
    }
    let features = Tensor::from_fn(n, c, |_, _| rng.random_range(-1.0..1.0));
    SignedGraph::new(adj, Some(features)).unwrap()
}

fn register(tape: &mut Tape, p: &SgeParams) -> SgeParams<Var> {
    p.map(&mut |t: &Tensor| tape.leaf(t.clone()))
}

#[test]
fn bue_matches_naive_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..30 {
        let n = rng.random_range(2..9);
        let sg = random_graph(&mut rng, n, 0.6, 3);
        let g = EncoderGraph::new(&sg).unwrap();
        let params = SgeParams::init(
            &mut rng,
            SgeDims {
                in_dim: 3,
                hidden: 4,
                layers: 3,
                proj: 2,
            },
        );
        for query in [QuerySource::Own, QuerySource::Mirrored] {
            let opts = EncoderOptions {
                query,
                edge_weighted: false,
            };
            for t in 1..=3 {
                let mut tape = Tape::new();
                let h = tape.constant(g.features.clone());
                let pv = register(&mut tape, &params);
                let (latent, out) = bue_encode(&mut tape, &g, h, &pv.bue_layers[..t], opts).unwrap();
                let (bal, unbal) = naive::bue_stack(
                    sg.adj(),
                    &naive::to_mat(&g.features),
                    &params.bue_layers[..t],
                    query,
                );
                assert!(naive::max_abs_diff(&bal, tape.value(out.x_bal)) < 1e-12, "case {case} t {t}");
                assert!(naive::max_abs_diff(&unbal, tape.value(out.x_unbal)) < 1e-12);
                assert!(naive::max_abs_diff(&naive::concat(&bal, &unbal), tape.value(latent)) < 1e-12);
            }
        }
    }
}

#[test]
fn pne_and_fusion_match_naive_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let n = rng.random_range(2..9);
        let sg = random_graph(&mut rng, n, 0.6, 3);
        let g = EncoderGraph::new(&sg).unwrap();
        let params = SgeParams::init(
            &mut rng,
            SgeDims {
                in_dim: 3,
                hidden: 4,
                layers: 3,
                proj: 2,
            },
        );
        let (pos_adj, neg_adj) = {
            let (p, m) = dsbn_core::graph::split_signed(&sg);
            (p.adj().clone(), m.adj().clone())
        };
        let x0 = naive::to_mat(&g.features);
        let mut xp = x0.clone();
        let mut xn = x0.clone();
        for l in 0..3 {
            xp = naive::gat(&pos_adj, &xp, &params.pne_pos_layers[l]);
            xn = naive::gat(&neg_adj, &xn, &params.pne_neg_layers[l]);
        }
        let (bal, unbal) = naive::bue_stack(sg.adj(), &x0, &params.bue_layers, QuerySource::Own);
        let bue = naive::concat(&bal, &unbal);
        let pne = naive::concat(&xp, &xn);
        let fused: naive::Mat = bue
            .iter()
            .zip(&pne)
            .map(|(b, p)| {
                let mut row = naive::row_times(b, &params.fuse_w_bue);
                row.extend(naive::row_times(p, &params.fuse_w_pne));
                row
            })
            .collect();

        let mut tape = Tape::new();
        let h = tape.constant(g.features.clone());
        let pv = register(&mut tape, &params);
        let opts = EncoderOptions::default();
        let (x_pne, _) = pne_encode(&mut tape, &g, h, &pv.pne_pos_layers, &pv.pne_neg_layers, opts).unwrap();
        let (x_bue, _) = bue_encode(&mut tape, &g, h, &pv.bue_layers, opts).unwrap();
        assert!(naive::max_abs_diff(&pne, tape.value(x_pne)) < 1e-12);
        let latent = sge_fuse(&mut tape, Some(x_bue), Some(x_pne), pv.fuse_w_bue, pv.fuse_w_pne, n).unwrap();
        assert!(naive::max_abs_diff(&fused, tape.value(latent)) < 1e-12);
    }
}

#[test]
fn edge_weighted_option_scales_scores_by_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let sg = random_graph(&mut rng, 5, 1.0, 3);
    let g = EncoderGraph::new(&sg).unwrap();
    let p = BueLayerParams::init(&mut rng, 3, 4);
    let mut tape = Tape::new();
    let h = tape.constant(g.features.clone());
    let pv = p.map(&mut |t: &Tensor| tape.leaf(t.clone()));
    let plain = dsbn_core::encoder::bue_initial(&mut tape, &g, h, &pv, EncoderOptions::default()).unwrap();
    let weighted = dsbn_core::encoder::bue_initial(
        &mut tape,
        &g,
        h,
        &pv,
        EncoderOptions {
            query: QuerySource::Own,
            edge_weighted: true,
        },
    )
    .unwrap();
    assert_ne!(tape.value(plain.x_bal), tape.value(weighted.x_bal));
}

/// Chain 0 -(+)- 1 -(-)- 2: after two layers node 2 reaches node 0 only by
/// the odd walk 0→1→2, so it may influence node 0's unbalanced component
/// and must not influence the balanced one.
#[test]
fn chain_odd_walk_reaches_only_the_unbalanced_component() {
    let mut adj = Tensor::zeros(3, 3);
    for (i, j, w) in [(0, 1, 0.5), (1, 2, -0.5)] {
        adj.set(i, j, w);
        adj.set(j, i, w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let features = Tensor::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
    let layers: Vec<BueLayerParams> = (0..2).map(|l| BueLayerParams::init(&mut rng, if l == 0 { 3 } else { 4 }, 4)).collect();
    let x = naive::to_mat(&features);
    let (bal, unbal) = naive::bue_stack(&adj, &x, &layers, QuerySource::Own);

    let mut moved = x.clone();
    moved[2] = vec![0.9, -0.3, 0.4];
    let (bal_m, unbal_m) = naive::bue_stack(&adj, &moved, &layers, QuerySource::Own);
    assert_eq!(bal[0], bal_m[0]);
    assert_ne!(unbal[0], unbal_m[0]);

    // Ablate the negative-neighbor term of the first layer: the route is gone.
    let (b1, _) = naive::bue_first(&adj, &x, &layers[0]);
    let zero = vec![vec![0.0; 4]; 3];
    let (_, u_ablate) = naive::bue_next(&adj, &b1, &zero, &layers[1], QuerySource::Own);
    let (b1m, _) = naive::bue_first(&adj, &moved, &layers[0]);
    let (_, u_ablate_m) = naive::bue_next(&adj, &b1m, &zero, &layers[1], QuerySource::Own);
    assert_eq!(u_ablate[0], u_ablate_m[0]);
}

/// Nodes whose input features have a nonzero gradient on row `i` of `pick`.
fn influence(tape: &mut Tape, features: Var, out: Var, i: usize) -> BTreeSet<usize> {
    tape.reset_grads();
    let row = tape.gather_rows(out, &[i]).unwrap();
    let s = tape.sum_all(row);
    tape.backward(s).unwrap();
    let g = tape.grad(features);
    let scale = g.max_abs();
    (0..g.rows())
        .filter(|&r| scale > 0.0 && g.row(r).iter().any(|x| x.abs() > 1e-9 * scale))
        .collect()
}

fn positive_params(rng: &mut ChaCha8Rng, layers: usize) -> Vec<BueLayerParams> {
    let pos = |rng: &mut ChaCha8Rng, r, c| Tensor::from_fn(r, c, |_, _| rng.random_range(0.1..1.0));
    (0..layers)
        .map(|l| {
            let d_in = if l == 0 { 3 } else { 4 };
            BueLayerParams {
                w_bal: pos(rng, d_in, 4),
                w_unbal: pos(rng, d_in, 4),
                attn_bal: pos(rng, 8, 1),
                attn_unbal: pos(rng, 8, 1),
            }
        })
        .collect()
}

#[test]
fn influence_respects_walk_parity() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..40 {
        let n = rng.random_range(2..=6);
        let t = rng.random_range(1..=3);
        let mut sg = random_graph(&mut rng, n, 0.6, 3);
        let features = Tensor::from_fn(n, 3, |_, _| rng.random_range(0.1..1.0));
        sg = sg.with_features(features.clone()).unwrap();
        let g = EncoderGraph::new(&sg).unwrap();
        let layers = positive_params(&mut rng, t);
        let mut tape = Tape::new();
        let h = tape.leaf(features);
        let pv: Vec<_> = layers.iter().map(|p| p.map(&mut |x: &Tensor| tape.constant(x.clone()))).collect();
        let (_, out) = bue_encode(&mut tape, &g, h, &pv, EncoderOptions::default()).unwrap();
        for i in 0..n {
            let sets = balance_oracle(&sg, i, t).unwrap();
            let mut bal = sets.balanced.clone();
            bal.insert(i);
            let mut unbal = sets.unbalanced.clone();
            unbal.insert(i);
            assert!(influence(&mut tape, h, out.x_bal, i).is_subset(&bal));
            assert!(influence(&mut tape, h, out.x_unbal, i).is_subset(&unbal));
        }
    }
}

/// With the cross query taken from the opposite component, odd-parity
/// neighbors leak into the balanced component through the softmax.
#[test]
fn mirrored_query_leaks_odd_parity_into_balanced_component() {
    // 0 -(-)- 1, 0 -(+)- 2: node 1 is only odd-reachable from 0 within two hops.
    let mut adj = Tensor::zeros(3, 3);
    for (i, j, w) in [(0, 1, -0.5), (0, 2, 0.5)] {
        adj.set(i, j, w);
        adj.set(j, i, w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let features = Tensor::from_fn(3, 3, |_, _| rng.random_range(0.1..1.0));
    let sg = SignedGraph::new(adj, Some(features.clone())).unwrap();
    let g = EncoderGraph::new(&sg).unwrap();
    let layers = positive_params(&mut rng, 2);
    let sets = balance_oracle(&sg, 0, 2).unwrap();
    assert!(!sets.balanced.contains(&1));
    for (query, leaks) in [(QuerySource::Own, false), (QuerySource::Mirrored, true)] {
        let mut tape = Tape::new();
        let h = tape.leaf(features.clone());
        let pv: Vec<_> = layers.iter().map(|p| p.map(&mut |x: &Tensor| tape.constant(x.clone()))).collect();
        let opts = EncoderOptions {
            query,
            edge_weighted: false,
        };
        let (_, out) = bue_encode(&mut tape, &g, h, &pv, opts).unwrap();
        assert_eq!(influence(&mut tape, h, out.x_bal, 0).contains(&1), leaks, "{query:?}");
    }
}

#[test]
fn encoder_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let n = 6;
    let sg = random_graph(&mut rng, n, 0.7, 3);
    let perm = [3usize, 0, 5, 1, 4, 2];
    let adj_p = Tensor::from_fn(n, n, |i, j| sg.adj().get(perm[i], perm[j]));
    let feat_p = Tensor::from_fn(n, 3, |i, c| sg.features().unwrap().get(perm[i], c));
    let sg_p = SignedGraph::new(adj_p, Some(feat_p)).unwrap();
    let params = SgeParams::init(
        &mut rng,
        SgeDims {
            in_dim: 3,
            hidden: 4,
            layers: 3,
            proj: 2,
        },
    );
    let run = |sg: &SignedGraph| {
        let g = EncoderGraph::new(sg).unwrap();
        let mut tape = Tape::new();
        let h = tape.constant(g.features.clone());
        let pv = register(&mut tape, &params);
        let opts = EncoderOptions::default();
        let (b, _) = bue_encode(&mut tape, &g, h, &pv.bue_layers, opts).unwrap();
        let (p, _) = pne_encode(&mut tape, &g, h, &pv.pne_pos_layers, &pv.pne_neg_layers, opts).unwrap();
        let l = sge_fuse(&mut tape, Some(b), Some(p), pv.fuse_w_bue, pv.fuse_w_pne, n).unwrap();
        tape.value(l).clone()
    };
    let base = run(&sg);
    let permuted = run(&sg_p);
    for i in 0..n {
        for c in 0..base.cols() {
            assert!((permuted.get(i, c) - base.get(perm[i], c)).abs() < 1e-12);
        }
    }
}
