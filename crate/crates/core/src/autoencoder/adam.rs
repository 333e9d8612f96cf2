use crate::error::{Error, Result};

/// First/second moment estimates for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, state for {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / correction1;
        let v_hat = state.v[i] / correction2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}
