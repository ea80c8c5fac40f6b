use super::{TrainConfig, TrainError};
use crate::encoder::{decays, ModelWeights, Params};
use crate::numerics::{NumericsError, Tape, Tensor, Var};

/// Mean over the batch of ½·(CE(start) + CE(end)).
pub fn qa_loss(
    tape: &mut Tape,
    start_logits: Var,
    end_logits: Var,
    starts: &[usize],
    ends: &[usize],
) -> Result<Var, NumericsError> {
    let s = tape.cross_entropy(start_logits, starts)?;
    let e = tape.cross_entropy(end_logits, ends)?;
    let total = tape.add(s, e)?;
    Ok(tape.scale(total, 0.5))
}

/// First and second moment estimates, one tensor per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: ModelWeights,
    pub v: ModelWeights,
    /// Number of updates applied so far.
    pub step: u64,
}

impl AdamState {
    pub fn new(weights: &ModelWeights) -> Self {
        let zeros = weights.map(|_, t| Tensor::zeros(t.shape()));
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    pub clip_scale: f64,
}

pub fn global_norm<'a>(grads: impl IntoIterator<Item = &'a [f64]>) -> f64 {
    grads
        .into_iter()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Factor applied to every gradient so the global norm is at most `max_norm`.
pub fn clip_scale(norm: f64, max_norm: f64) -> f64 {
    if norm > max_norm {
        max_norm / norm
    } else {
        1.0
    }
}

/// One decoupled-weight-decay Adam update of a single tensor. `step` is the
/// 1-based update count used for bias correction.
#[allow(clippy::too_many_arguments)]
pub fn adamw_update(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    config: &TrainConfig,
    grad_scale: f64,
    decay: bool,
) {
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(step as i32);
    let c2 = 1.0 - b2.powi(step as i32);
    let lambda = if decay { config.weight_decay } else { 0.0 };
    for i in 0..theta.len() {
        let g = grad[i] * grad_scale;
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= config.learning_rate * (m_hat / (v_hat.sqrt() + config.epsilon) + lambda * theta[i]);
    }
}

/// Clips by global norm, then applies AdamW to every parameter. Nothing is
/// modified when a gradient is non-finite.
pub fn optimizer_step(
    weights: &mut ModelWeights,
    grads: &Params<Tensor>,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<StepStats, TrainError> {
    let named_grads = grads.named();
    let norm = global_norm(named_grads.iter().map(|(_, g)| g.data()));
    if !norm.is_finite() {
        return Err(TrainError::NonFiniteGradient { step: state.step + 1 });
    }
    let scale = clip_scale(norm, config.grad_clip_norm);
    state.step += 1;
    let step = state.step;
    let names: Vec<String> = named_grads.iter().map(|(n, _)| n.clone()).collect();
    let params = weights.values_mut();
    let ms = state.m.values_mut();
    let vs = state.v.values_mut();
    for ((((name, theta), (_, g)), m), v) in names.iter().zip(params).zip(&named_grads).zip(ms).zip(vs) {
        adamw_update(
            theta.data_mut(),
            g.data(),
            m.data_mut(),
            v.data_mut(),
            step,
            config,
            scale,
            decays(name),
        );
    }
    Ok(StepStats {
        grad_norm: norm,
        clip_scale: scale,
    })
}
