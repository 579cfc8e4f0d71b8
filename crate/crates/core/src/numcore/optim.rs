use crate::error::{contract_err, shape_err, Result};

/// One plain SGD update `θ - lr·g`. Frozen parameters come back untouched.
pub fn sgd_step(params: &[f64], grads: &[f64], lr: f64, frozen: bool) -> Result<Vec<f64>> {
    let mut out = params.to_vec();
    sgd_step_in_place(&mut out, grads, lr, frozen)?;
    Ok(out)
}

pub fn sgd_step_in_place(params: &mut [f64], grads: &[f64], lr: f64, frozen: bool) -> Result<()> {
    if params.len() != grads.len() {
        return Err(shape_err!(
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        ));
    }
    if !(lr > 0.0) {
        return Err(contract_err!("learning rate must be positive, got {lr}"));
    }
    if frozen {
        return Ok(());
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementwise_update() {
        let out = sgd_step(&[1.0, 2.0], &[1.0, 1.0], 0.1, false).unwrap();
        assert!((out[0] - 0.9).abs() < 1e-15 && (out[1] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_identity() {
        assert_eq!(sgd_step(&[1.5, -2.0], &[0.0, 0.0], 0.3, false).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn frozen_is_bit_identical() {
        let theta = [0.1f64, -7.25e-300, f64::MIN_POSITIVE];
        let out = sgd_step(&theta, &[1e9, -3.0, 2.0], 0.5, true).unwrap();
        for (a, b) in theta.iter().zip(&out) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            sgd_step(&[1.0], &[1.0, 2.0], 0.1, false),
            Err(crate::Error::Shape(_))
        ));
    }
}
