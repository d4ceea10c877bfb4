//! Linear prediction: autocorrelation method with Levinson-Durbin, and the
//! analysis/synthesis filters with state carried across calls.
//!
//! Sign convention: `A(z) = 1 + a1 z^-1 + ... + ap z^-p`, so the predictor
//! is `x[n] ~ -sum(a_k x[n-k])`.

use super::VoiceError;

#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    /// `a1..ap`.
    pub coefficients: Vec<f64>,
    /// Square root of the final prediction error power.
    pub gain: f64,
}

impl LpcModel {
    pub fn passthrough(order: usize) -> Self {
        Self {
            coefficients: vec![0.0; order],
            gain: 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            if lag >= x.len() {
                0.0
            } else {
                x[..x.len() - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Levinson-Durbin on `r[0..=order]`. Returns `(a1..ap, error power)`.
/// If the recursion loses positive definiteness it stops and leaves the
/// remaining coefficients at zero, which keeps `A(z)` minimum phase.
pub fn levinson_durbin(r: &[f64], order: usize) -> (Vec<f64>, f64) {
    let mut a = vec![0.0; order];
    if r.is_empty() || r[0] <= 0.0 {
        return (a, 0.0);
    }
    let mut err = r[0];
    let mut prev = vec![0.0; order];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc += a[j] * r[i - j];
        }
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            break;
        }
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] + k * prev[i - 1 - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    (a, err)
}

/// LPC of one analysis frame. A zero-energy frame gives the pass-through
/// model (all coefficients zero).
pub fn lpc_analyze(frame: &[f64], order: usize) -> Result<LpcModel, VoiceError> {
    if frame.len() <= order {
        return Err(VoiceError::Parameter(format!(
            "frame of {} samples is too short for order {order}",
            frame.len()
        )));
    }
    let r = autocorrelation(frame, order);
    if r[0] <= 0.0 || !r[0].is_finite() {
        return Ok(LpcModel::passthrough(order));
    }
    let (coefficients, err) = levinson_durbin(&r, order);
    Ok(LpcModel {
        coefficients,
        gain: err.max(0.0).sqrt(),
    })
}

/// Direct-form filter history (most recent sample first).
#[derive(Debug, Clone)]
pub struct FilterState {
    history: Vec<f64>,
}

impl FilterState {
    pub fn new(order: usize) -> Self {
        Self {
            history: vec![0.0; order],
        }
    }

    fn push(&mut self, v: f64) {
        if !self.history.is_empty() {
            self.history.rotate_right(1);
            self.history[0] = v;
        }
    }

    fn dot(&self, a: &[f64]) -> f64 {
        a.iter().zip(&self.history).map(|(c, h)| c * h).sum()
    }
}

/// Residual `e[n] = x[n] + sum(a_k x[n-k])`; the state holds past inputs.
pub fn analysis_filter(a: &[f64], input: &[f64], state: &mut FilterState, out: &mut Vec<f64>) {
    for &x in input {
        out.push(x + state.dot(a));
        state.push(x);
    }
}

/// All-pole synthesis `y[n] = e[n] - sum(a_k y[n-k])`; the state holds
/// past outputs.
pub fn synthesis_filter(a: &[f64], input: &[f64], state: &mut FilterState, out: &mut Vec<f64>) {
    for &e in input {
        let y = e - state.dot(a);
        out.push(y);
        state.push(y);
    }
}
