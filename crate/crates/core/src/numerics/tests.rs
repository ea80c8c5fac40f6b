use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

#[test]
fn softmax_of_equal_logits_is_uniform() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::from_vec(vec![0.0, 0.0]));
    let y = tape.softmax(x).unwrap();
    assert_eq!(tape.value(y).data(), &[0.5, 0.5]);
}

#[test]
fn layer_norm_of_constant_vector_is_zero() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::full(&[4], 3.7));
    let g = tape.constant(Tensor::full(&[4], 1.0));
    let b = tape.constant(Tensor::zeros(&[4]));
    let y = tape.layer_norm(x, g, b, LAYER_NORM_EPS).unwrap();
    assert!(tape.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn cross_entropy_of_uniform_logits_is_ln_classes() {
    for target in 0..3 {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(vec![0.4, 0.4, 0.4]));
        let l = tape.cross_entropy(x, &[target]).unwrap();
        assert!((tape.value(l).item().unwrap() - 3f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn matmul_by_identity() {
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let i = tape.constant(Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap());
    let c = tape.matmul(a, i).unwrap();
    assert_eq!(tape.value(c).data(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn shape_mismatch_names_op_and_shapes() {
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::zeros(&[2, 3]));
    let b = tape.constant(Tensor::zeros(&[2, 3]));
    let err = tape.matmul(a, b).unwrap_err();
    assert_eq!(
        err,
        NumericsError::ShapeMismatch {
            op: "matmul",
            left: vec![2, 3],
            right: vec![2, 3]
        }
    );
    assert!(err.to_string().contains("matmul"));
    let c = tape.constant(Tensor::zeros(&[2]));
    assert!(tape.add(a, c).is_err());
}

#[test]
fn backward_of_scaled_sum() {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::from_vec(vec![0.3, -1.2]));
    let s = tape.scale(x, 3.0);
    let loss = tape.sum(s);
    tape.backward(loss).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[3.0, 3.0]);
}

#[test]
fn cross_entropy_gradient_is_softmax_minus_one_hot() {
    let logits = vec![0.2, -1.0, 2.5, 0.7];
    let mut tape = Tape::new();
    let x = tape.param(Tensor::from_vec(logits.clone()));
    let loss = tape.cross_entropy(x, &[2]).unwrap();
    tape.backward(loss).unwrap();
    let mut expected = logits.clone();
    softmax_in_place(&mut expected);
    expected[2] -= 1.0;
    for (g, e) in tape.grad(x).unwrap().iter().zip(&expected) {
        assert!((g - e).abs() < 1e-12);
    }
    let report = grad_check(|t, v| t.cross_entropy(v, &[2]), &Tensor::from_vec(logits), H, TOL).unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn second_backward_without_forward_fails() {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::from_vec(vec![1.0, 2.0]));
    let loss = tape.sum(x);
    tape.backward(loss).unwrap();
    assert_eq!(tape.backward(loss), Err(NumericsError::EmptyTape));
    // A fresh forward re-arms the tape.
    let loss = tape.mean(x);
    tape.backward(loss).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[0.5, 0.5]);
}

#[test]
fn backward_requires_scalar() {
    let mut tape = Tape::new();
    let x = tape.param(Tensor::from_vec(vec![1.0, 2.0]));
    let y = tape.scale(x, 2.0);
    assert!(matches!(tape.backward(y), Err(NumericsError::NotScalar { .. })));
}

#[test]
fn untracked_inputs_do_not_record() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::from_vec(vec![1.0]));
    let y = tape.scale(x, 2.0);
    assert!(!tape.requires_grad(y));
    let loss = tape.sum(y);
    assert_eq!(tape.backward(loss), Err(NumericsError::EmptyTape));
}

#[test]
fn grad_check_sum_of_squares() {
    // x·x through matmul of a row with a column.
    let x = random(&[3], 11);
    let report = grad_check(
        |t, v| {
            let row = t.reshape(v, &[1, 3])?;
            let col = t.reshape(v, &[3, 1])?;
            let sq = t.matmul(row, col)?;
            Ok(t.sum(sq))
        },
        &x,
        H,
        1e-6,
    )
    .unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn grad_check_linear_is_exact() {
    let x = random(&[5], 3);
    let report = grad_check(|t, v| { let y = t.scale(v, -2.5); Ok(t.sum(y)) }, &x, H, 1e-9).unwrap();
    assert!(report.max_rel_error < 1e-9, "{report:?}");
}

#[test]
fn grad_check_matmul_chain_with_softmax() {
    let a = random(&[2, 3, 4], 1);
    let b = random(&[4, 5], 2);
    let report = grad_check_many(
        |t, v| {
            let c = t.matmul(v[0], v[1])?;
            let s = t.softmax(c)?;
            weighted(t, s, 5)
        },
        &[a, b],
        H,
        TOL,
    )
    .unwrap();
    assert!(report.passed(), "{report:?}");
}

/// Weighted sum `Σ w ⊙ y`, so every output element gets a distinct gradient.
fn weighted(t: &mut Tape, y: Var, seed: u64) -> Result<Var, NumericsError> {
    let shape = t.value(y).shape().to_vec();
    let n: usize = shape.iter().product();
    let w = t.constant(random(&[1, n], seed));
    let flat = t.reshape(y, &[n, 1])?;
    let dot = t.matmul(w, flat)?;
    Ok(t.sum(dot))
}

#[test]
fn every_kernel_passes_grad_check() {
    for seed in 0..5u64 {
        let x = random(&[2, 3, 4], 100 + seed);
        let checks: Vec<(&str, GradCheckReport)> = vec![
            (
                "matmul_batched",
                grad_check_many(
                    |t, v| {
                        let y = t.matmul(v[0], v[1])?;
                        weighted(t, y, seed)
                    },
                    &[x.clone(), random(&[2, 4, 2], seed)],
                    H,
                    TOL,
                )
                .unwrap(),
            ),
            (
                "add_broadcast",
                grad_check_many(
                    |t, v| {
                        let y = t.add(v[0], v[1])?;
                        weighted(t, y, seed)
                    },
                    &[x.clone(), random(&[3, 4], seed + 7)],
                    H,
                    TOL,
                )
                .unwrap(),
            ),
            (
                "scale",
                grad_check(|t, v| { let y = t.scale(v, 1.7); weighted(t, y, seed) }, &x, H, TOL).unwrap(),
            ),
            (
                "relu",
                // keep inputs away from the kink
                grad_check(
                    |t, v| { let y = t.relu(v); weighted(t, y, seed) },
                    &Tensor::new(
                        x.shape().to_vec(),
                        x.data().iter().map(|v| if v.abs() < 0.05 { v + 0.1 } else { *v }).collect(),
                    )
                    .unwrap(),
                    H,
                    TOL,
                )
                .unwrap(),
            ),
            (
                "gelu",
                grad_check(|t, v| { let y = t.gelu(v); weighted(t, y, seed) }, &x, H, TOL).unwrap(),
            ),
            (
                "softmax",
                grad_check(|t, v| { let y = t.softmax(v)?; weighted(t, y, seed) }, &x, H, TOL).unwrap(),
            ),
            (
                "layer_norm",
                grad_check_many(
                    |t, v| {
                        let y = t.layer_norm(v[0], v[1], v[2], LAYER_NORM_EPS)?;
                        weighted(t, y, seed)
                    },
                    &[x.clone(), random(&[4], seed + 1), random(&[4], seed + 2)],
                    H,
                    TOL,
                )
                .unwrap(),
            ),
            (
                "embedding",
                grad_check(
                    |t, v| {
                        let y = t.embedding(v, &[2, 0, 2, 1], &[2, 2])?;
                        weighted(t, y, seed)
                    },
                    &random(&[3, 4], seed + 3),
                    H,
                    TOL,
                )
                .unwrap(),
            ),
            (
                "dropout",
                grad_check(
                    |t, v| {
                        let y = t.dropout(v, 0.3, true, 42 + seed)?;
                        weighted(t, y, seed)
                    },
                    &x,
                    H,
                    TOL,
                )
                .unwrap(),
            ),
            (
                "cross_entropy",
                grad_check(|t, v| t.cross_entropy(v, &[0, 3, 1, 2, 2, 0]), &x, H, TOL).unwrap(),
            ),
            (
                "mean",
                grad_check(|t, v| { let y = t.gelu(v); Ok(t.mean(y)) }, &x, H, TOL).unwrap(),
            ),
            (
                "permute",
                grad_check(|t, v| { let y = t.permute(v, &[2, 0, 1])?; weighted(t, y, seed) }, &x, H, TOL)
                    .unwrap(),
            ),
            (
                "select_last",
                grad_check(|t, v| { let y = t.select_last(v, 2)?; weighted(t, y, seed) }, &x, H, TOL)
                    .unwrap(),
            ),
        ];
        for (name, report) in checks {
            assert!(report.passed(), "seed {seed} {name}: {report:?}");
        }
    }
}

#[test]
fn dropout_identity_and_determinism() {
    let x = random(&[4, 8], 9);
    let mut tape = Tape::new();
    let v = tape.constant(x.clone());
    assert_eq!(tape.dropout(v, 0.0, true, 1).unwrap(), v);
    assert_eq!(tape.dropout(v, 0.5, false, 1).unwrap(), v);
    let a = tape.dropout(v, 0.5, true, 1).unwrap();
    let b = tape.dropout(v, 0.5, true, 1).unwrap();
    let c = tape.dropout(v, 0.5, true, 2).unwrap();
    assert_eq!(tape.value(a), tape.value(b));
    assert_ne!(tape.value(a), tape.value(c));
    assert!(tape.dropout(v, 1.0, true, 1).is_err());
}

#[test]
fn embedding_rejects_out_of_vocab_id() {
    let mut tape = Tape::new();
    let t = tape.constant(Tensor::zeros(&[3, 2]));
    assert!(matches!(
        tape.embedding(t, &[3], &[1]),
        Err(NumericsError::IndexOutOfRange { index: 3, bound: 3, .. })
    ));
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(
        rows in 1usize..5,
        cols in 1usize..9,
        scale in 0.1f64..50.0,
        seed in any::<u64>(),
    ) {
        let x = random(&[rows, cols], seed);
        let mut tape = Tape::new();
        let v = tape.constant(x);
        let v = tape.scale(v, scale);
        let y = tape.softmax(v).unwrap();
        for row in tape.value(y).data().chunks(cols) {
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn add_broadcast_matches_explicit_tiling(
        lead in proptest::collection::vec(1usize..4, 0..3),
        tail in proptest::collection::vec(1usize..4, 1..3),
        seed in any::<u64>(),
    ) {
        let mut full = lead.clone();
        full.extend(&tail);
        let a = random(&full, seed);
        let b = random(&tail, seed.wrapping_add(1));
        let reps: usize = lead.iter().product();
        let tiled: Vec<f64> = (0..reps).flat_map(|_| b.data().iter().copied()).collect();
        let tiled = Tensor::new(full.clone(), tiled).unwrap();

        let mut tape = Tape::new();
        let (va, vb, vt) = (tape.constant(a.clone()), tape.constant(b), tape.constant(tiled));
        let broadcast = tape.add(va, vb).unwrap();
        let swapped = tape.add(vb, va).unwrap();
        let explicit = tape.add(va, vt).unwrap();
        prop_assert_eq!(tape.value(broadcast), tape.value(explicit));
        prop_assert_eq!(tape.value(swapped), tape.value(explicit));
    }
}
