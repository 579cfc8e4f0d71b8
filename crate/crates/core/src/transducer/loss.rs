//! Transducer loss `-ln P(y|x)` by log-domain forward/backward recursions,
//! its gradient with respect to the joint logits, and an enumeration oracle.

use super::lattice::PosteriorLattice;
use crate::error::{contract_err, Result};
use crate::numcore::lse2;

/// Largest `T + U` accepted by [`rnnt_loss_bruteforce`].
pub const BRUTEFORCE_MAX_STEPS: usize = 12;

fn check_target(lattice: &PosteriorLattice, target: &[usize], blank: usize) -> Result<()> {
    if target.len() != lattice.labels() {
        return Err(contract_err!(
            "target of length {} for lattice with U = {}",
            target.len(),
            lattice.labels()
        ));
    }
    if let Some(k) = target.iter().find(|&&k| k == blank || k >= lattice.vocab()) {
        return Err(contract_err!("invalid target token {k}"));
    }
    if blank >= lattice.vocab() {
        return Err(contract_err!("blank id {blank} outside vocabulary"));
    }
    Ok(())
}

/// Forward variables `α(t, u)`: log-probability of having emitted the first
/// `u` labels and arriving at frame `t`.
fn forward(lattice: &PosteriorLattice, target: &[usize], blank: usize) -> Vec<f64> {
    let (nt, nu) = (lattice.frames(), target.len() + 1);
    let mut alpha = vec![f64::NEG_INFINITY; nt * nu];
    for t in 0..nt {
        for u in 0..nu {
            let v = if t == 0 && u == 0 {
                0.0
            } else {
                let from_blank = if t > 0 {
                    alpha[(t - 1) * nu + u] + lattice.log_prob(t - 1, u, blank)
                } else {
                    f64::NEG_INFINITY
                };
                let from_label = if u > 0 {
                    alpha[t * nu + u - 1] + lattice.log_prob(t, u - 1, target[u - 1])
                } else {
                    f64::NEG_INFINITY
                };
                lse2(from_blank, from_label)
            };
            alpha[t * nu + u] = v;
        }
    }
    alpha
}

/// Backward variables `β(t, u)`: log-probability of completing the sequence
/// from node `(t, u)`, including the final blank.
fn backward(lattice: &PosteriorLattice, target: &[usize], blank: usize) -> Vec<f64> {
    let (nt, nu) = (lattice.frames(), target.len() + 1);
    let mut beta = vec![f64::NEG_INFINITY; nt * nu];
    for t in (0..nt).rev() {
        for u in (0..nu).rev() {
            let via_blank = if t + 1 < nt {
                beta[(t + 1) * nu + u] + lattice.log_prob(t, u, blank)
            } else if u + 1 == nu {
                lattice.log_prob(t, u, blank)
            } else {
                f64::NEG_INFINITY
            };
            let via_label = if u + 1 < nu {
                beta[t * nu + u + 1] + lattice.log_prob(t, u, target[u])
            } else {
                f64::NEG_INFINITY
            };
            beta[t * nu + u] = lse2(via_blank, via_label);
        }
    }
    beta
}

/// `-ln Σ_paths P(path)` over all blank/label interleavings that end with a
/// blank on the last frame. Returns `+inf` when no path exists.
pub fn rnnt_loss(lattice: &PosteriorLattice, target: &[usize], blank: usize) -> Result<f64> {
    check_target(lattice, target, blank)?;
    let nt = lattice.frames();
    if nt == 0 {
        return Ok(if target.is_empty() { 0.0 } else { f64::INFINITY });
    }
    let nu = target.len() + 1;
    let alpha = forward(lattice, target, blank);
    let log_z = alpha[(nt - 1) * nu + nu - 1] + lattice.log_prob(nt - 1, nu - 1, blank);
    Ok(-log_z)
}

/// Result of the enumeration oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceLoss {
    pub loss: f64,
    /// Number of interleavings visited: `C(T+U, U)`.
    pub enumerated: usize,
    /// Interleavings that terminate with a blank on the last frame.
    pub valid: usize,
}

/// Enumerates every arrangement of `T` blanks and `U` labels. Arrangements
/// whose final symbol is a label never terminate and carry zero probability.
pub fn rnnt_loss_bruteforce(
    lattice: &PosteriorLattice,
    target: &[usize],
    blank: usize,
) -> Result<BruteForceLoss> {
    check_target(lattice, target, blank)?;
    let (nt, nu) = (lattice.frames(), target.len());
    if nt + nu > BRUTEFORCE_MAX_STEPS {
        return Err(contract_err!(
            "T + U = {} exceeds brute-force bound {BRUTEFORCE_MAX_STEPS}",
            nt + nu
        ));
    }
    let mut total = 0.0f64;
    let mut enumerated = 0usize;
    let mut valid = 0usize;
    // Each bit pattern over T+U positions with exactly U ones is one arrangement.
    for mask in 0u32..(1u32 << (nt + nu)) {
        if mask.count_ones() as usize != nu {
            continue;
        }
        enumerated += 1;
        let last_is_label = nt + nu > 0 && mask & (1 << (nt + nu - 1)) != 0;
        if last_is_label || (nt == 0 && nu > 0) {
            continue;
        }
        valid += 1;
        let (mut t, mut u) = (0usize, 0usize);
        let mut logp = 0.0;
        for pos in 0..nt + nu {
            if mask & (1 << pos) != 0 {
                logp += lattice.log_prob(t, u, target[u]);
                u += 1;
            } else {
                logp += lattice.log_prob(t, u, blank);
                t += 1;
            }
        }
        total += logp.exp();
    }
    Ok(BruteForceLoss {
        loss: -total.ln(),
        enumerated,
        valid,
    })
}

/// Loss together with `∂L/∂logits`, laid out like the lattice.
#[derive(Debug, Clone)]
pub struct RnntGradient {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Analytic gradient of [`rnnt_loss`] with respect to the pre-softmax joint
/// outputs: `∂L/∂h_k = P_k·Σγ - γ_k`, where `γ` is the posterior occupancy of
/// the blank and next-label arcs leaving `(t, u)`.
pub fn rnnt_grad(lattice: &PosteriorLattice, target: &[usize], blank: usize) -> Result<RnntGradient> {
    check_target(lattice, target, blank)?;
    let (nt, nu, nk) = (lattice.frames(), target.len() + 1, lattice.vocab());
    let mut grad = vec![0.0; lattice.log_probs().len()];
    if nt == 0 {
        let loss = if target.is_empty() { 0.0 } else { f64::INFINITY };
        return Ok(RnntGradient { loss, grad });
    }
    let alpha = forward(lattice, target, blank);
    let beta = backward(lattice, target, blank);
    let log_z = beta[0];
    if !log_z.is_finite() {
        return Ok(RnntGradient {
            loss: f64::INFINITY,
            grad,
        });
    }
    for t in 0..nt {
        for u in 0..nu {
            let a = alpha[t * nu + u];
            if a == f64::NEG_INFINITY {
                continue;
            }
            let next_blank = if t + 1 < nt {
                beta[(t + 1) * nu + u]
            } else if u + 1 == nu {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            let g_blank = (a + lattice.log_prob(t, u, blank) + next_blank - log_z).exp();
            let (label, g_label) = if u + 1 < nu {
                let k = target[u];
                (k, (a + lattice.log_prob(t, u, k) + beta[t * nu + u + 1] - log_z).exp())
            } else {
                (usize::MAX, 0.0)
            };
            let occupancy = g_blank + g_label;
            let o = lattice.offset(t, u);
            for k in 0..nk {
                grad[o + k] = lattice.log_prob(t, u, k).exp() * occupancy;
            }
            grad[o + blank] -= g_blank;
            if label != usize::MAX {
                grad[o + label] -= g_label;
            }
        }
    }
    Ok(RnntGradient { loss: -log_z, grad })
}
