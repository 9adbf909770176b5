//! Central finite-difference checks of tape gradients.
//!
//! The relative error between an analytic value `a` and a numeric value
//! `b` is `|a - b| / max(|a|, |b|, 1e-8)`; checks report the maximum over
//! all elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TensorError};
use crate::params::{Bound, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

pub const DEFAULT_EPS: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn scalar_output(tape: &Tape<f64>, out: Var) -> f64 {
    tape.value(out).data()[0]
}

/// Checks `d f / d x` for a scalar-valued `f` built on a fresh tape from the
/// input leaf.
pub fn grad_check<F, E>(f: F, x: &Tensor<f64>, eps: f64) -> Result<f64, E>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var, E>,
    E: From<TensorError>,
{
    let mut tape = Tape::new();
    let leaf = tape.param(x.clone());
    let out = f(&mut tape, leaf)?;
    tape.backward(out)?;
    let analytic = tape.grad(leaf).unwrap_or_else(|| Tensor::zeros(x.shape()));

    let eval = |probe: Tensor<f64>| -> Result<f64, E> {
        let mut tape = Tape::new();
        let leaf = tape.param(probe);
        let out = f(&mut tape, leaf)?;
        Ok(scalar_output(&tape, out))
    };

    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += eps;
        let mut minus = x.clone();
        minus.data_mut()[i] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        worst = worst.max(relative_error(analytic.data()[i], numeric));
    }
    Ok(worst)
}

/// Checks every parameter of `store`; returns the max relative error per
/// parameter name, in store order.
pub fn grad_check_params<F, E>(store: &ParamStore<f64>, eps: f64, f: F) -> Result<Vec<(String, f64)>, E>
where
    F: Fn(&mut Tape<f64>, &Bound<'_, f64>) -> Result<Var, E>,
    E: From<TensorError>,
{
    Ok(check_params(store, eps, f, false)?.expect("kinks are only tracked on request"))
}

/// Like [`grad_check_params`], but returns `None` as soon as some probe
/// `x +- eps` switches a ReLU to its other piece relative to the
/// unperturbed evaluation. A central difference across a kink measures a
/// blend of two slopes, so such a point says nothing about the gradient.
pub fn grad_check_params_smooth<F, E>(
    store: &ParamStore<f64>,
    eps: f64,
    f: F,
) -> Result<Option<Vec<(String, f64)>>, E>
where
    F: Fn(&mut Tape<f64>, &Bound<'_, f64>) -> Result<Var, E>,
    E: From<TensorError>,
{
    check_params(store, eps, f, true)
}

fn check_params<F, E>(store: &ParamStore<f64>, eps: f64, f: F, track_kinks: bool) -> Result<Option<Vec<(String, f64)>>, E>
where
    F: Fn(&mut Tape<f64>, &Bound<'_, f64>) -> Result<Var, E>,
    E: From<TensorError>,
{
    let mut tape = Tape::new();
    let bound = store.bind(&mut tape);
    let out = f(&mut tape, &bound)?;
    let pattern = tape.relu_pattern();
    tape.backward(out)?;
    let analytic = bound.grads(&tape);

    // (output, same relu pattern as the unperturbed run)
    let eval = |probe: &ParamStore<f64>| -> Result<(f64, bool), E> {
        let mut tape = Tape::new();
        let bound = probe.bind(&mut tape);
        let out = f(&mut tape, &bound)?;
        let smooth = !track_kinks || tape.relu_pattern() == pattern;
        Ok((scalar_output(&tape, out), smooth))
    };

    let mut probe = store.clone();
    let names: Vec<String> = store.names().map(str::to_string).collect();
    let mut report = Vec::with_capacity(names.len());
    for (name, grad) in names.iter().zip(&analytic) {
        let mut worst = 0.0f64;
        for i in 0..grad.len() {
            let orig = probe.get(name)?.data()[i];
            probe.get_mut(name)?.data_mut()[i] = orig + eps;
            let (up, up_smooth) = eval(&probe)?;
            probe.get_mut(name)?.data_mut()[i] = orig - eps;
            let (down, down_smooth) = eval(&probe)?;
            probe.get_mut(name)?.data_mut()[i] = orig;
            if !(up_smooth && down_smooth) {
                return Ok(None);
            }
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max(relative_error(grad.data()[i], numeric));
        }
        report.push((name.clone(), worst));
    }
    Ok(Some(report))
}

fn random(rows: usize, cols: usize, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-1.5..1.5))
}

/// Random values with magnitude in [0.2, 1.5], clear of the relu kink.
fn away_from_zero(rows: usize, cols: usize, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(rows, cols, |_, _| {
        let m = rng.gen_range(0.2..1.5);
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

/// Projects a tensor-valued output onto fixed random weights so that every
/// output element contributes a distinct amount to the checked scalar.
fn weighted_sum(t: &mut Tape<f64>, y: Var, seed: u64) -> Result<Var> {
    let shape = t.value(y).shape().to_vec();
    let (r, c) = (t.value(y).rows(), t.value(y).cols());
    let w = random(r, c, seed ^ 0x5eed).reshape(shape)?;
    let w = t.constant(w);
    let p = t.mul(y, w)?;
    t.sum(p)
}

struct Suite(Vec<(&'static str, f64)>);

impl Suite {
    fn check(
        &mut self,
        name: &'static str,
        x: Tensor<f64>,
        f: impl Fn(&mut Tape<f64>, Var) -> Result<Var>,
    ) -> Result<()> {
        let err = grad_check(f, &x, DEFAULT_EPS)?;
        match self.0.iter_mut().find(|(n, _)| *n == name) {
            Some((_, worst)) => *worst = worst.max(err),
            None => self.0.push((name, err)),
        }
        Ok(())
    }
}

/// Checks every differentiable op on random inputs drawn from `seed`,
/// clear of non-smooth points. Returns the max relative error per op.
pub fn op_suite(seed: u64) -> Result<Vec<(&'static str, f64)>> {
    let mut suite = Suite(Vec::new());
    {
        let b = random(4, 3, seed + 100);
        suite.check("matmul lhs", random(2, 4, seed), |t, x| {
            let b = t.constant(b.clone());
            let y = t.matmul(x, b)?;
            weighted_sum(t, y, seed)
        })?;
        let a = random(3, 2, seed + 200);
        suite.check("matmul rhs", random(2, 4, seed), |t, x| {
            let a = t.constant(a.clone());
            let y = t.matmul(a, x)?;
            weighted_sum(t, y, seed)
        })?;
        let other = random(3, 4, seed + 300);
        suite.check("add", random(3, 4, seed), |t, x| {
            let o = t.constant(other.clone());
            let y = t.add(x, o)?;
            weighted_sum(t, y, seed)
        })?;
        let m = random(3, 4, seed + 400);
        suite.check("add row bias", random(1, 4, seed), |t, x| {
            let m = t.constant(m.clone());
            let y = t.add(m, x)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("mul", random(2, 3, seed), |t, x| {
            let o = t.constant(random(2, 3, seed + 500));
            let y = t.mul(x, o)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("scale", random(2, 3, seed), |t, x| {
            let y = t.scale(x, -0.7)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("concat", random(2, 3, seed), |t, x| {
            let o = t.constant(random(2, 2, seed + 600));
            let y = t.concat(&[o, x, x])?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("slice_cols", random(3, 5, seed), |t, x| {
            let y = t.slice_cols(x, 1, 4)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("transpose", random(2, 5, seed), |t, x| {
            let y = t.transpose(x)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("row_mean", random(4, 3, seed), |t, x| {
            let y = t.row_mean(x)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("relu", away_from_zero(3, 4, seed), |t, x| {
            let y = t.relu(x)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("tanh", random(3, 4, seed), |t, x| {
            let y = t.tanh(x)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("sigmoid", random(3, 4, seed), |t, x| {
            let y = t.sigmoid(x)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("softmax", random(3, 4, seed), |t, x| {
            let y = t.softmax(x)?;
            weighted_sum(t, y, seed)
        })?;
        // strictly positive rows keep the denominator away from zero
        let positive = Tensor::from_fn(2, 4, |r, c| 0.3 + 0.2 * (r + c) as f64 + 0.05 * seed as f64);
        suite.check("normalize_sum", positive, |t, x| {
            let y = t.normalize_sum(x, 1e-8)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("gather_rows", random(4, 3, seed), |t, x| {
            let y = t.gather_rows(x, &[2, 0, 2, 3])?;
            weighted_sum(t, y, seed)
        })?;
        let g = random(1, 5, seed + 700);
        let bias = random(1, 5, seed + 800);
        suite.check("layer_norm input", random(3, 5, seed), |t, x| {
            let g = t.constant(g.clone());
            let b = t.constant(bias.clone());
            let y = t.layer_norm(x, g, b)?;
            weighted_sum(t, y, seed)
        })?;
        let input = random(3, 5, seed + 900);
        suite.check("layer_norm gain", random(1, 5, seed), |t, g| {
            let x = t.constant(input.clone());
            let b = t.constant(bias.clone());
            let y = t.layer_norm(x, g, b)?;
            weighted_sum(t, y, seed)
        })?;
        suite.check("layer_norm bias", random(1, 5, seed), |t, b| {
            let x = t.constant(input.clone());
            let g = t.constant(g.clone());
            let y = t.layer_norm(x, g, b)?;
            weighted_sum(t, y, seed)
        })?;
        for target in [0.0, 1.0] {
            suite.check("bce_with_logits", random(1, 1, seed), |t, x| t.bce_with_logits(x, target))?;
        }
    }
    Ok(suite.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let x = Tensor::row(vec![0.3, -1.2, 2.5]);
        let err = grad_check(
            |t, x| {
                let sq = t.mul(x, x)?;
                t.sum(sq)
            },
            &x,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // relu evaluated exactly on its kink: the one-sided tape gradient (0)
        // disagrees with the symmetric difference (0.5).
        let x = Tensor::row(vec![0.0]);
        let err = grad_check(
            |t, x| {
                let y = t.relu(x)?;
                t.sum(y)
            },
            &x,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err > 0.5);
    }

    #[test]
    fn smooth_variant_refuses_kink_crossings() {
        let f = |t: &mut Tape<f64>, p: &Bound<'_, f64>| -> Result<Var> {
            let y = t.relu(p.var("x")?)?;
            t.sum(y)
        };
        let mut store = ParamStore::new();
        store.insert("x", Tensor::row(vec![0.4, -3e-5])).unwrap();
        assert!(grad_check_params_smooth(&store, DEFAULT_EPS, f).unwrap().is_none());
        store.get_mut("x").unwrap().data_mut()[1] = -0.4;
        let report = grad_check_params_smooth(&store, DEFAULT_EPS, f).unwrap().unwrap();
        assert!(report[0].1 < 1e-9);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1e-9, 0.0) - 0.1).abs() < 1e-12);
    }
}
