use ndarray::{array, Array2, ArrayD, IxDyn};
use toponet::datasets::synthetic::gaussian_blobs;
use toponet::datasets::{LabeledCloud, SampleShape, Split};
use toponet::nn::{mlp, train, ActivationKind, LayerSpec, Network, NetworkSpec, Optimizer, OutputHead, TrainConfig};

fn dense_net(input: usize, hidden: &[(usize, ActivationKind)], classes: usize, head: OutputHead, seed: u64) -> NetworkSpec {
    let mut layers = Vec::new();
    let mut prev = input;
    for &(width, activation) in hidden {
        layers.push(LayerSpec::Dense { input: prev, output: width, activation });
        prev = width;
    }
    layers.push(LayerSpec::Output { classes, head });
    NetworkSpec { input: SampleShape::Flat(input), layers, init_seed: seed }
}

fn tiny_cnn(activation: ActivationKind, stride: usize, seed: u64) -> NetworkSpec {
    NetworkSpec {
        input: SampleShape::Image { channels: 2, height: 5, width: 5 },
        layers: vec![
            LayerSpec::Conv { in_channels: 2, out_channels: 2, kernel: 2, stride, activation },
            LayerSpec::MaxPool { size: 2 },
            LayerSpec::Flatten,
            LayerSpec::Output { classes: 2, head: OutputHead::Softmax },
        ],
        init_seed: seed,
    }
}

/// Deterministic pseudo-random batch that avoids exact zeros.
fn batch(rows: usize, cols: usize, salt: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(i, j)| ((i * 31 + j * 17) as f64 * 0.37 + salt).sin() * 1.3)
}

/// Perturbs every parameter by +-h and compares the central difference of
/// the loss with the analytic gradient.
fn gradient_check(net: &Network, x: &Array2<f64>, labels: &[usize]) {
    let (_, grads, _) = net.loss_and_grad(x.view(), labels).unwrap();
    let h = 1e-5;
    let mut probe = net.clone();
    let count: usize = net.param_slices().iter().map(|s| s.len()).sum();
    assert!(count <= 50, "{count} parameters");
    for (a, g) in grads.iter().enumerate() {
        for i in 0..g.len() {
            let orig = probe.param_slices()[a][i];
            probe.param_slices_mut()[a][i] = orig + h;
            let up = probe.loss(x.view(), labels).unwrap();
            probe.param_slices_mut()[a][i] = orig - h;
            let down = probe.loss(x.view(), labels).unwrap();
            probe.param_slices_mut()[a][i] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-4 * fd.abs().max(g[i].abs()).max(1.0),
                "param array {a} entry {i}: finite difference {fd}, analytic {}",
                g[i]
            );
        }
    }
}

fn all_kinds() -> [ActivationKind; 5] {
    [
        ActivationKind::Relu,
        ActivationKind::LeakyRelu { alpha: 0.1 },
        ActivationKind::Sigmoid,
        ActivationKind::Tanh,
        ActivationKind::stacked_sine(),
    ]
}

#[test]
fn identity_dense_layer_with_relu() {
    let spec = dense_net(2, &[(2, ActivationKind::Relu)], 2, OutputHead::Softmax, 0);
    let arrays = vec![
        array![[1.0, 0.0], [0.0, 1.0]].into_dyn(),
        ArrayD::zeros(IxDyn(&[2])),
        ArrayD::zeros(IxDyn(&[2, 2])),
        ArrayD::zeros(IxDyn(&[2])),
    ];
    let net = Network::from_param_arrays(spec, arrays).unwrap();
    let x = array![[-1.5, 2.0]];
    let pass = net.forward(x.view()).unwrap();
    assert_eq!(pass.layers[0], array![[0.0, 2.0]]);
}

#[test]
fn zero_weights_sigmoid_head_is_uniform() {
    let spec = dense_net(3, &[], 2, OutputHead::Sigmoid, 0);
    let arrays = vec![ArrayD::zeros(IxDyn(&[3, 1])), ArrayD::zeros(IxDyn(&[1]))];
    let net = Network::from_param_arrays(spec, arrays).unwrap();
    let p = net.forward(array![[0.3, -2.0, 5.0]].view()).unwrap().probabilities;
    assert_eq!(p, array![[0.5, 0.5]]);
}

#[test]
fn probabilities_sum_to_one() {
    for (head, classes) in [(OutputHead::Softmax, 4), (OutputHead::Sigmoid, 2)] {
        let net = Network::new(dense_net(3, &[(5, ActivationKind::stacked_sine())], classes, head, 4)).unwrap();
        let p = net.forward(batch(20, 3, 0.1).view()).unwrap().probabilities;
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let net = Network::new(dense_net(3, &[(5, ActivationKind::Relu)], 2, OutputHead::Softmax, 0)).unwrap();
    assert!(matches!(net.forward(batch(2, 4, 0.0).view()), Err(toponet::Error::ShapeMismatch(_))));
}

/// Forward pass written with scalar loops straight from the parameter
/// arrays, sharing nothing with the library's matrix code.
fn naive_mlp(arrays: &[ArrayD<f64>], acts: &[ActivationKind], x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    for (l, pair) in arrays.chunks(2).enumerate() {
        let (w, b) = (&pair[0], &pair[1]);
        let (nin, nout) = (w.shape()[0], w.shape()[1]);
        let mut next = vec![0.0; nout];
        for j in 0..nout {
            let mut z = b[[j]];
            for i in 0..nin {
                z += cur[i] * w[[i, j]];
            }
            next[j] = if l < acts.len() { acts[l].eval(z) } else { z };
        }
        cur = next;
    }
    let m = cur.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = cur.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

#[test]
fn mlp_matches_scalar_loop_oracle() {
    let acts = [ActivationKind::Tanh, ActivationKind::stacked_sine()];
    let spec = dense_net(3, &[(4, acts[0]), (5, acts[1])], 3, OutputHead::Softmax, 11);
    let net = Network::new(spec).unwrap();
    let mut arrays = net.param_arrays();
    for (k, a) in arrays.iter_mut().enumerate() {
        // non-zero biases so the bias path is exercised
        if a.ndim() == 1 {
            a.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 * (i as f64 + k as f64).cos());
        }
    }
    let net = Network::from_param_arrays(net.spec().clone(), arrays.clone()).unwrap();
    let x = batch(7, 3, 0.4);
    let p = net.forward(x.view()).unwrap().probabilities;
    for (r, row) in x.rows().into_iter().enumerate() {
        let expected = naive_mlp(&arrays, &acts, row.as_slice().unwrap());
        for c in 0..3 {
            assert!((p[[r, c]] - expected[c]).abs() < 1e-6);
        }
    }
}

/// Valid convolution, 2x2 max pooling and a softmax head with scalar loops.
fn naive_cnn(arrays: &[ArrayD<f64>], act: ActivationKind, stride: usize, x: &[f64]) -> Vec<f64> {
    let (c, h, w) = (2, 5, 5);
    let (wk, bk) = (&arrays[0], &arrays[1]);
    let (o, k) = (wk.shape()[0], wk.shape()[2]);
    let (oh, ow) = ((h - k) / stride + 1, (w - k) / stride + 1);
    let mut conv = vec![vec![vec![0.0; ow]; oh]; o];
    for (oc, plane) in conv.iter_mut().enumerate() {
        for (i, row) in plane.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                let mut z = bk[[oc]];
                for ch in 0..c {
                    for ki in 0..k {
                        for kj in 0..k {
                            z += wk[[oc, ch, ki, kj]] * x[ch * h * w + (i * stride + ki) * w + j * stride + kj];
                        }
                    }
                }
                *out = act.eval(z);
            }
        }
    }
    let (ph, pw) = (oh / 2, ow / 2);
    let mut flat = Vec::new();
    for plane in &conv {
        for i in 0..ph {
            for j in 0..pw {
                let m = [plane[2 * i][2 * j], plane[2 * i][2 * j + 1], plane[2 * i + 1][2 * j], plane[2 * i + 1][2 * j + 1]];
                flat.push(m.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            }
        }
    }
    naive_mlp(&arrays[2..], &[], &flat)
}

#[test]
fn cnn_matches_scalar_loop_oracle() {
    for stride in [1, 2] {
        let act = ActivationKind::stacked_sine();
        let net = Network::new(tiny_cnn(act, stride, 5)).unwrap();
        let arrays = net.param_arrays();
        let x = batch(6, 50, 0.9);
        let p = net.forward(x.view()).unwrap().probabilities;
        for (r, row) in x.rows().into_iter().enumerate() {
            let expected = naive_cnn(&arrays, act, stride, row.as_slice().unwrap());
            for c in 0..2 {
                assert!((p[[r, c]] - expected[c]).abs() < 1e-6, "stride {stride} row {r}");
            }
        }
    }
}

#[test]
fn dense_gradients_match_finite_differences() {
    for (i, kind) in all_kinds().into_iter().enumerate() {
        let spec = dense_net(2, &[(4, kind), (3, kind)], 2, OutputHead::Softmax, 20 + i as u64);
        let net = Network::new(spec).unwrap();
        let x = batch(6, 2, 0.25);
        gradient_check(&net, &x, &[0, 1, 1, 0, 1, 0]);
    }
}

#[test]
fn sigmoid_head_gradients_match_finite_differences() {
    let spec = dense_net(3, &[(5, ActivationKind::stacked_sine())], 2, OutputHead::Sigmoid, 3);
    let net = Network::new(spec).unwrap();
    gradient_check(&net, &batch(5, 3, 0.7), &[1, 0, 0, 1, 1]);
}

#[test]
fn conv_gradients_match_finite_differences() {
    for kind in [ActivationKind::Tanh, ActivationKind::stacked_sine(), ActivationKind::LeakyRelu { alpha: 0.2 }] {
        for stride in [1, 2] {
            let net = Network::new(tiny_cnn(kind, stride, 8)).unwrap();
            gradient_check(&net, &batch(4, 50, 1.1), &[0, 1, 1, 0]);
        }
    }
}

fn blobs(seed: u64, split: Split) -> LabeledCloud {
    let cloud = gaussian_blobs(100, &[vec![-4.0, 0.0], vec![4.0, 0.0]], seed).unwrap();
    let labels = (0..200).map(|i| i / 100).collect();
    LabeledCloud::new(cloud.into_inner(), labels, 2, split, SampleShape::Flat(2)).unwrap()
}

#[test]
fn separable_blobs_train_to_high_accuracy() {
    let spec = mlp(2, 1, 8, 2, ActivationKind::Relu, 1);
    let net = Network::new(spec).unwrap();
    let cfg = TrainConfig { epochs: 50, lr: 0.01, ..TrainConfig::default() };
    let (_, log) = train(&net, &blobs(1, Split::Train), &blobs(2, Split::Test), &cfg).unwrap();
    let reached = log.epochs_to_threshold.expect("train accuracy reached 0.99");
    assert!(reached <= 50);
    assert!(log.records.last().unwrap().test_acc >= 0.99);
    assert!(log.records.windows(2).all(|w| w[1].epoch == w[0].epoch + 1));
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    for optimizer in [Optimizer::Sgd, Optimizer::Adam] {
        let net = Network::new(mlp(2, 2, 6, 2, ActivationKind::stacked_sine(), 3)).unwrap();
        let cfg = TrainConfig { optimizer, lr: 0.0, epochs: 3, ..TrainConfig::default() };
        let (trained, _) = train(&net, &blobs(1, Split::Train), &blobs(2, Split::Test), &cfg).unwrap();
        assert_eq!(trained.param_arrays(), net.param_arrays());
    }
}

#[test]
fn training_is_deterministic() {
    let net = Network::new(mlp(2, 2, 6, 2, ActivationKind::stacked_sine(), 3)).unwrap();
    let cfg = TrainConfig { epochs: 4, seed: 9, ..TrainConfig::default() };
    let run = || train(&net, &blobs(1, Split::Train), &blobs(2, Split::Test), &cfg).unwrap();
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(la, lb);
    assert_eq!(a, b);
    let other = TrainConfig { seed: 10, ..cfg.clone() };
    let (_, lc) = train(&net, &blobs(1, Split::Train), &blobs(2, Split::Test), &other).unwrap();
    assert_ne!(la.records[0].train_loss, lc.records[0].train_loss);
}

#[test]
fn divergence_is_reported_with_epoch() {
    let net = Network::new(mlp(2, 2, 6, 2, ActivationKind::Relu, 3)).unwrap();
    let cfg = TrainConfig { optimizer: Optimizer::Sgd, lr: 1e300, epochs: 5, ..TrainConfig::default() };
    let err = train(&net, &blobs(1, Split::Train), &blobs(2, Split::Test), &cfg).unwrap_err();
    assert!(matches!(err, toponet::Error::DivergedLoss { .. }), "{err}");
}

#[test]
fn save_load_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let net = Network::new(tiny_cnn(ActivationKind::Relu, 1, 2)).unwrap();
    net.save(dir.path()).unwrap();
    let loaded = Network::load(dir.path()).unwrap();
    assert_eq!(loaded.spec(), net.spec());
    for (a, b) in loaded.param_arrays().iter().zip(net.param_arrays()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(*x, *y as f32 as f64);
        }
    }
    // a reloaded network is already single precision, so it survives exactly
    let again = tempfile::tempdir().unwrap();
    loaded.save(again.path()).unwrap();
    assert_eq!(Network::load(again.path()).unwrap(), loaded);
    assert_eq!(
        std::fs::read(dir.path().join("weights.tnnt")).unwrap(),
        std::fs::read(again.path().join("weights.tnnt")).unwrap()
    );
}

#[test]
fn parameter_count_matches_shape_arithmetic() {
    let spec = toponet::nn::small_cnn(SampleShape::Image { channels: 1, height: 28, width: 28 }, 10, ActivationKind::Relu, 0);
    let net = Network::new(spec).unwrap();
    let expected = (16 * 9 + 16) + (32 * 16 * 9 + 32) + (800 * 128 + 128) + (128 * 10 + 10);
    assert_eq!(net.param_count(), expected);
}
