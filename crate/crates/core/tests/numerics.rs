//! Tensor kernels and network pieces against naive reference code.

use maskac::autodiff::{grad_check, sigmoid, softmax, Graph, Tensor};
use maskac::envs::{EnvKind, EnvSpec};
use maskac::network::{
    apply_mask, compute_mask, convlstm_step, forward, init_weights, Branch, MaskTransform, NetworkConfig,
    RecurrentState, Variant, Weights,
};
use maskac::training::compute_returns;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Direct six-loop cross-correlation with zero padding.
#[allow(clippy::too_many_arguments)]
fn conv_naive(
    x: &[f64],
    (ci, h, w): (usize, usize, usize),
    k: &[f64],
    (co, kh, kw): (usize, usize, usize),
    b: &[f64],
    stride: usize,
    pad: usize,
) -> (Vec<f64>, usize, usize) {
    let ho = (h + 2 * pad - kh) / stride + 1;
    let wo = (w + 2 * pad - kw) / stride + 1;
    let mut y = vec![0.0; co * ho * wo];
    for o in 0..co {
        for i in 0..ho {
            for j in 0..wo {
                let mut acc = b[o];
                for c in 0..ci {
                    for u in 0..kh {
                        for v in 0..kw {
                            let r = (i * stride + u) as isize - pad as isize;
                            let s = (j * stride + v) as isize - pad as isize;
                            if r >= 0 && s >= 0 && (r as usize) < h && (s as usize) < w {
                                acc += k[((o * ci + c) * kh + u) * kw + v] * x[(c * h + r as usize) * w + s as usize];
                            }
                        }
                    }
                }
                y[(o * ho + i) * wo + j] = acc;
            }
        }
    }
    (y, ho, wo)
}

#[test]
fn conv2d_matches_six_loop_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for h in 1..=8 {
        for w in 1..=8 {
            for stride in [1, 2] {
                for pad in [0, 1] {
                    for kh in 1..=3 {
                        let kw = 4 - kh.min(3);
                        if kh > h + 2 * pad || kw > w + 2 * pad {
                            continue;
                        }
                        let (ci, co) = (2, 3);
                        let x = random(&mut rng, ci * h * w);
                        let k = random(&mut rng, co * ci * kh * kw);
                        let b = random(&mut rng, co);
                        let (want, ho, wo) = conv_naive(&x, (ci, h, w), &k, (co, kh, kw), &b, stride, pad);
                        let mut g = Graph::<f64>::new();
                        let xv = g.constant(&[ci, h, w], x).unwrap();
                        let kv = g.constant(&[co, ci, kh, kw], k).unwrap();
                        let bv = g.constant(&[co], b).unwrap();
                        let y = g.conv2d(xv, kv, bv, stride, pad).unwrap();
                        assert_eq!(g.shape(y), [co, ho, wo]);
                        for (a, e) in g.value(y).iter().zip(&want) {
                            assert!((a - e).abs() <= 1e-10, "h{h} w{w} s{stride} p{pad} k{kh}x{kw}");
                        }
                        cases += 1;
                    }
                }
            }
        }
    }
    assert!(cases > 500);
}

#[test]
fn conv2d_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (h, stride, pad) in [(5, 1, 1), (6, 2, 0), (7, 2, 1)] {
        let shapes = [vec![2, h, h], vec![3, 2, 3, 3], vec![3]];
        let mut params: Vec<Tensor<f64>> = shapes
            .iter()
            .map(|s| Tensor::new(s, random(&mut rng, s.iter().product())).unwrap())
            .collect();
        let weights = random(&mut rng, 1000);
        let loss = |p: &Vec<Tensor<f64>>, grad: bool| {
            let mut g = Graph::<f64>::new();
            let v: Vec<_> = p.iter().map(|t| g.leaf(&t.clone().with_requires_grad(grad))).collect();
            let y = g.conv2d(v[0], v[1], v[2], stride, pad).unwrap();
            let n = g.value(y).len();
            let wts = g
                .constant(g.shape(y).to_vec().as_slice(), weights[..n].to_vec())
                .unwrap();
            let t = g.tanh(y);
            let prod = g.mul(t, wts).unwrap();
            let l = g.sum(prod);
            let value = g.item(l);
            let grads = grad.then(|| {
                let gr = g.backward(l).unwrap();
                v.iter().map(|&x| gr.get(x).unwrap().to_vec()).collect::<Vec<_>>()
            });
            (value, grads)
        };
        let analytic = loss(&params, true).1.unwrap();
        let report = grad_check(&mut params, &analytic, |p| Ok(loss(p, false).0), 1e-5, 200, 3).unwrap();
        assert!(report.max_rel_error < 1e-6, "{report:?}");
    }
}

#[test]
fn elementwise_ops_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut params = vec![
        Tensor::new(&[2, 2, 2], random(&mut rng, 8)).unwrap(),
        Tensor::new(&[1, 2, 2], random(&mut rng, 4)).unwrap(),
        Tensor::new(&[3, 8], random(&mut rng, 24)).unwrap(),
        Tensor::new(&[3], random(&mut rng, 3)).unwrap(),
    ];
    let loss = |p: &Vec<Tensor<f64>>, grad: bool| {
        let mut g = Graph::<f64>::new();
        let v: Vec<_> = p.iter().map(|t| g.leaf(&t.clone().with_requires_grad(grad))).collect();
        let m = g.sigmoid(v[1]);
        let masked = g.broadcast_mul_channelwise(v[0], m).unwrap();
        let r = g.relu(masked);
        let z = g.dense(r, v[2], v[3]).unwrap();
        let lp = g.log_softmax(z).unwrap();
        let pr = g.softmax(z).unwrap();
        let a = g.index(lp, 1).unwrap();
        let ent = g.mul(pr, lp).unwrap();
        let ent = g.sum(ent);
        let sq = g.square(ent);
        let both = g.concat(&[a, sq]).unwrap();
        let head = g.slice(both, 0, 2).unwrap();
        let s = g.sum(head);
        let l = g.affine(s, 0.7, 0.1);
        let value = g.item(l);
        let grads = grad.then(|| {
            let gr = g.backward(l).unwrap();
            v.iter().map(|&x| gr.get(x).unwrap().to_vec()).collect::<Vec<_>>()
        });
        (value, grads)
    };
    let analytic = loss(&params, true).1.unwrap();
    let report = grad_check(&mut params, &analytic, |p| Ok(loss(p, false).0), 1e-5, 39, 5).unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

#[test]
fn softmax_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 1..10 {
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let total: f64 = z.iter().map(|v| v.exp()).sum();
        for (p, v) in softmax(&z).unwrap().iter().zip(&z) {
            assert!((p - v.exp() / total).abs() <= 1e-12);
        }
    }
    assert!(softmax::<f64>(&[]).is_err());
}

/// Discounted sums written as explicit double loops.
#[test]
fn returns_match_discounted_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gamma = 0.99;
    for len in 0..=8 {
        for terminal in [true, false] {
            let rewards: Vec<f64> = (0..len).map(|_| rng.gen_range(-1..=1) as f64).collect();
            let values = random(&mut rng, len);
            let bootstrap = if terminal { 0.0 } else { rng.gen_range(-2.0..2.0) };
            let (ret, adv) = compute_returns(&rewards, &values, bootstrap, gamma).unwrap();
            for t in 0..len {
                let mut want = 0.0;
                for (k, r) in rewards[t..].iter().enumerate() {
                    want += gamma.powi(k as i32) * r;
                }
                want += gamma.powi((len - t) as i32) * bootstrap;
                assert!((ret[t] - want).abs() <= 1e-12);
                assert!((adv[t] - (want - values[t])).abs() <= 1e-12);
            }
        }
    }
}

fn tiny(variant: Variant) -> NetworkConfig {
    let mut cfg = NetworkConfig::desk(20, 3, variant);
    cfg.fe_channels = [4, 4, 5];
    cfg.lstm_channels = 3;
    cfg.branch_channels = 4;
    cfg
}

fn jittered(cfg: &NetworkConfig, seed: u64) -> Weights<f64> {
    let mut w = init_weights::<f64>(cfg, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in w.tensors_mut() {
        for x in t.data_mut() {
            *x += rng.gen_range(-0.2..0.2);
        }
    }
    w
}

/// Scalar ConvLSTM with gates ordered input, forget, output, candidate.
#[test]
fn convlstm_matches_scalar_gates() {
    let cfg = tiny(Variant::Both);
    let w = jittered(&cfg, 3);
    let (l, cx, s) = (cfg.lstm_channels, cfg.fe_channels[2], cfg.feature_hw());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = random(&mut rng, cx * s * s);
    let h = random(&mut rng, l * s * s);
    let c = random(&mut rng, l * s * s);
    let state = RecurrentState {
        h: Tensor::new(&[l, s, s], h.clone()).unwrap(),
        c: Tensor::new(&[l, s, s], c.clone()).unwrap(),
    };
    let (h_out, next) = convlstm_step(&Tensor::new(&[cx, s, s], x.clone()).unwrap(), &state, &w, &cfg).unwrap();
    let xh: Vec<f64> = x.iter().chain(&h).copied().collect();
    let kernel = w.get("lstm.weight").unwrap().data();
    let bias = w.get("lstm.bias").unwrap().data();
    let (gates, _, _) = conv_naive(&xh, (cx + l, s, s), kernel, (4 * l, 3, 3), bias, 1, 1);
    let plane = l * s * s;
    for i in 0..plane {
        let ig = 1.0 / (1.0 + (-gates[i]).exp());
        let fg = 1.0 / (1.0 + (-gates[plane + i]).exp());
        let og = 1.0 / (1.0 + (-gates[2 * plane + i]).exp());
        let cand = gates[3 * plane + i].tanh();
        let c2 = fg * c[i] + ig * cand;
        let h2 = og * c2.tanh();
        assert!((next.c.data()[i] - c2).abs() <= 1e-12);
        assert!((h_out.data()[i] - h2).abs() <= 1e-12);
        assert_eq!(next.h.data()[i], h_out.data()[i]);
    }
}

#[test]
fn mask_matches_pointwise_formula() {
    let cfg = tiny(Variant::Both);
    let w = jittered(&cfg, 4);
    let (l, s) = (cfg.lstm_channels, cfg.feature_hw());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = Tensor::new(&[l, s, s], random(&mut rng, l * s * s)).unwrap();
    for branch in [Branch::Policy, Branch::Value] {
        let m = compute_mask(&h, &w, &cfg, branch).unwrap();
        let kw = w.get(&format!("{}.mask.weight", branch.name())).unwrap().data();
        let kb = w.get(&format!("{}.mask.bias", branch.name())).unwrap().data()[0];
        for p in 0..s * s {
            let z: f64 = (0..l).map(|c| kw[c] * h.data()[c * s * s + p]).sum::<f64>() + kb;
            assert!((m.values().data()[p] - 1.0 / (1.0 + (-z).exp())).abs() <= 1e-12);
            assert!((m.invert().values().data()[p] - (1.0 - 1.0 / (1.0 + (-z).exp()))).abs() <= 1e-12);
        }
        let f = Tensor::new(&[2, s, s], random(&mut rng, 2 * s * s)).unwrap();
        let applied = apply_mask(&f, m.values()).unwrap();
        for ch in 0..2 {
            for p in 0..s * s {
                let want = f.data()[ch * s * s + p] * m.values().data()[p];
                assert_eq!(applied.data()[ch * s * s + p], want);
            }
        }
    }
    let vanilla = tiny(Variant::Vanilla);
    let wv = w.restrict_to(&vanilla).unwrap();
    assert!(compute_mask(&h, &wv, &vanilla, Branch::Policy).is_err());
}

#[test]
fn ones_mask_equals_shared_vanilla_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for variant in [Variant::PolicyMask, Variant::ValueMask, Variant::Both] {
        let cfg = tiny(variant);
        let w = jittered(&cfg, 5);
        let vcfg = cfg.clone().with_variant(Variant::Vanilla);
        let wv = w.restrict_to(&vcfg).unwrap();
        let mut env = EnvSpec::new(EnvKind::Catch, 20).build().unwrap();
        let mut obs = env.reset(rng.gen());
        let (mut s1, mut s2) = (RecurrentState::zeros(&cfg), RecurrentState::zeros(&vcfg));
        for _ in 0..5 {
            let a = forward(&obs.to_tensor(), &s1, &w, &cfg, MaskTransform::Ones).unwrap();
            let b = forward(&obs.to_tensor(), &s2, &wv, &vcfg, MaskTransform::Identity).unwrap();
            assert_eq!(a.policy, b.policy);
            assert_eq!(a.value, b.value);
            obs = env.step(a.greedy_action()).unwrap().obs;
            (s1, s2) = (a.next_state, b.next_state);
        }
    }
}

#[test]
fn inverse_only_touches_policy_mask_by_default() {
    let cfg = tiny(Variant::Both);
    let w = jittered(&cfg, 6);
    let obs = EnvSpec::new(EnvKind::Catch, 20).build().unwrap().reset(2).to_tensor();
    let z = RecurrentState::zeros(&cfg);
    let normal = forward(&obs, &z, &w, &cfg, MaskTransform::Identity).unwrap();
    let inv = forward(&obs, &z, &w, &cfg, MaskTransform::Inverse).unwrap();
    assert_eq!(normal.value, inv.value);
    assert_ne!(normal.policy, inv.policy);
    let mut both = cfg.clone();
    both.invert_value_mask = true;
    let inv2 = forward(&obs, &z, &w, &both, MaskTransform::Inverse).unwrap();
    assert_ne!(normal.value, inv2.value);
    assert_eq!(inv.policy, inv2.policy);
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant(z in prop::collection::vec(-20.0f64..20.0, 1..12), c in -50.0f64..50.0) {
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let (p, q) = (softmax(&z).unwrap(), softmax(&shifted).unwrap());
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_stays_in_range(x in -700.0f64..700.0) {
        let s = sigmoid(x);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s + sigmoid(-x) - 1.0).abs() < 1e-15);
        if x.abs() < 30.0 {
            prop_assert!(s > 0.0 && s < 1.0);
        }
    }
}
