use srlgnn_tensor::{AdamConfig, AdamState, ParamStore, Tape, Tensor};

fn scalar_store(p: f64) -> ParamStore<f64> {
    let mut s = ParamStore::new();
    s.insert("p", Tensor::scalar(p)).unwrap();
    s
}

fn config(lr: f64) -> AdamConfig {
    AdamConfig {
        lr,
        ..AdamConfig::default()
    }
}

#[test]
fn paper_betas_are_default() {
    let c = AdamConfig::default();
    assert_eq!((c.beta1, c.beta2, c.lr), (0.9, 0.999, 5e-6));
}

#[test]
fn zero_gradient_leaves_params_and_decays_moments() {
    let mut store = scalar_store(1.0);
    let mut adam = AdamState::new(config(0.1), &store);
    adam.update(&mut store, &[Tensor::scalar(0.0)]).unwrap();
    assert_eq!(store.get("p").unwrap().data(), &[1.0]);

    adam.update(&mut store, &[Tensor::scalar(1.0)]).unwrap();
    let (m0, v0) = (adam.first_moments()[0].data()[0], adam.second_moments()[0].data()[0]);
    adam.update(&mut store, &[Tensor::scalar(0.0)]).unwrap();
    let (m1, v1) = (adam.first_moments()[0].data()[0], adam.second_moments()[0].data()[0]);
    assert!(m1.abs() < m0.abs() && v1 < v0);
    assert!((m1 - 0.9 * m0).abs() < 1e-15);
    assert!((v1 - 0.999 * v0).abs() < 1e-15);
}

#[test]
fn single_step_is_bias_corrected() {
    let mut store = scalar_store(1.0);
    let mut adam = AdamState::new(config(0.1), &store);
    adam.update(&mut store, &[Tensor::scalar(1.0)]).unwrap();
    assert_eq!(adam.step, 1);
    let p = store.get("p").unwrap().data()[0];
    assert!((p - 0.900000001).abs() < 1e-12, "{p}");
}

#[test]
fn converges_on_quadratic() {
    let mut store = scalar_store(0.0);
    let mut adam = AdamState::new(config(0.1), &store);
    for _ in 0..100 {
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let p = bound.var("p").unwrap();
        let three = tape.constant(Tensor::scalar(-3.0));
        let d = tape.add(p, three).unwrap();
        let sq = tape.mul(d, d).unwrap();
        tape.backward(sq).unwrap();
        let grads = bound.grads(&tape);
        adam.update(&mut store, &grads).unwrap();
    }
    let p = store.get("p").unwrap().data()[0];
    // scripted reference run ends at 2.98065543752781
    assert!((p - 3.0).abs() < 0.05);
    assert!((p - 2.980_655_437_527_812).abs() < 1e-9, "{p}");
}

#[test]
fn shape_mismatch_rejected() {
    let mut store = scalar_store(0.0);
    let mut adam = AdamState::new(config(0.1), &store);
    assert!(adam.update(&mut store, &[Tensor::zeros(&[2, 2])]).is_err());
    assert!(adam.update(&mut store, &[]).is_err());
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let run = || {
        let mut store = ParamStore::<f64>::new();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        store.insert_uniform("w", 4, 3, 4, &mut rng).unwrap();
        let mut adam = AdamState::new(config(0.01), &store);
        for step in 0..20 {
            let g = Tensor::from_fn(4, 3, |r, c| ((r * 3 + c + step) as f64).sin());
            adam.update(&mut store, &[g]).unwrap();
        }
        store
    };
    let a = run();
    let b = run();
    let bits = |s: &ParamStore<f64>| -> Vec<u64> {
        s.values().flat_map(|t| t.data().iter().map(|v| v.to_bits())).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}
