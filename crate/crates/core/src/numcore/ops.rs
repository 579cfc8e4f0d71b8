use crate::error::{contract_err, Error, Result};

/// Probability clamp applied before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("softmax of non-finite logits".into()));
    }
    Ok(softmax_unchecked(logits))
}

pub(crate) fn softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// `ln softmax(logits)` computed without exponentiating back and forth.
pub(crate) fn log_softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let lse = lse_unchecked(logits);
    logits.iter().map(|v| v - lse).collect()
}

pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(contract_err!("log_sum_exp of an empty slice"));
    }
    Ok(lse_unchecked(values))
}

pub(crate) fn lse_unchecked(values: &[f64]) -> f64 {
    if values.len() == 1 {
        return values[0];
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln(e^a + e^b)`.
#[inline]
pub(crate) fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy `-[c ln p + (1-c) ln(1-p)]` with `p` clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn bce_loss(p: f64, label: u8) -> Result<f64> {
    if label > 1 {
        return Err(contract_err!("binary label must be 0 or 1, got {label}"));
    }
    if !p.is_finite() {
        return Err(Error::Numeric(format!("probability {p} is not finite")));
    }
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    Ok(if label == 1 { -p.ln() } else { -(1.0 - p).ln() })
}

/// `-ln probs[target]`, with the probability clamped from below.
pub fn cross_entropy_loss(probs: &[f64], target: usize) -> Result<f64> {
    let p = probs.get(target).ok_or_else(|| {
        contract_err!("target class {target} out of range for {} classes", probs.len())
    })?;
    Ok(-p.max(PROB_EPS).ln())
}

/// Central finite differences `(f(θ+ε) - f(θ-ε)) / 2ε` per coordinate.
pub fn finite_diff_gradient<F>(mut f: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(contract_err!("finite-difference step must be positive, got {eps}"));
    }
    let mut theta = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + eps;
        let up = f(&theta);
        theta[i] = orig - eps;
        let down = f(&theta);
        theta[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!(
                "objective not finite when perturbing coordinate {i}"
            )));
        }
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

/// Default step for [`finite_diff_gradient`].
pub const FD_EPS: f64 = 1e-5;
