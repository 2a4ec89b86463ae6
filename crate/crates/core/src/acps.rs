//! Average cost per stage: gain/bias of a fixed chain and the Bellman
//! optimality check over all stationary policies of an MDP.

use alloc::vec::Vec;

use crate::mdp::LabeledMdp;
use crate::numerics::{cesaro_limit, deviation_matrix_with, solve_linear, Matrix};
use crate::{Error, Result};

/// Gain `J`, bias `h` and (optionally) the auxiliary vector `v` with `h + v = P v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainBias {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub aux: Option<Vec<f64>>,
}

impl GainBias {
    /// Largest deviation from `J = P J` and `J + h = g + P h`.
    pub fn identity_residual(&self, p: &Matrix, g: &[f64]) -> f64 {
        let pj = p.mul_vec(&self.gain);
        let ph = p.mul_vec(&self.bias);
        (0..self.gain.len())
            .map(|i| {
                let first = (self.gain[i] - pj[i]).abs();
                let second = (self.gain[i] + self.bias[i] - g[i] - ph[i]).abs();
                first.max(second)
            })
            .fold(0.0, f64::max)
    }
}

/// `J = P* g`, `h = H g`, plus a solution `v` of `(I - P) v = -h`.
pub fn acps_gain_bias(p: &Matrix, g: &[f64]) -> Result<GainBias> {
    if g.len() != p.rows() {
        return Err(Error::DimensionMismatch { expected: p.rows(), found: g.len() });
    }
    let limit = cesaro_limit(p)?;
    let deviation = deviation_matrix_with(p, &limit)?;
    let gain = limit.mul_vec(g);
    let bias = deviation.mul_vec(g);
    let n = p.rows();
    let neg_bias: Vec<f64> = bias.iter().map(|x| -x).collect();
    let aux = solve_linear(&Matrix::identity(n).sub(p), &neg_bias)?.x;
    Ok(GainBias { gain, bias, aux: Some(aux) })
}

/// Checks the average-cost Bellman equations state by state.
///
/// With `J` constant this is `λ + h(i) = min_u [g(i,u) + Σ_j P(i,u,j) h(j)]`;
/// otherwise the two-level multichain form is used: `J(i) = min_u Σ_j P(i,u,j) J(j)`
/// and the bias equation minimized over the actions attaining that minimum.
pub fn acps_bellman_check(mdp: &LabeledMdp, candidate: &GainBias, tol: f64) -> bool {
    let n = mdp.num_states();
    if candidate.gain.len() != n || candidate.bias.len() != n {
        return false;
    }
    let (gain, bias) = (&candidate.gain, &candidate.bias);
    let scale = |x: f64| tol * x.abs().max(1.0);
    (0..n).all(|i| {
        let choices = mdp.choices(i);
        let expected_gain: Vec<f64> =
            choices.iter().map(|c| c.successors.iter().map(|&(j, p)| p * gain[j]).sum()).collect();
        let min_gain = expected_gain.iter().copied().fold(f64::INFINITY, f64::min);
        if (min_gain - gain[i]).abs() > scale(gain[i]) {
            return false;
        }
        let best = choices
            .iter()
            .zip(&expected_gain)
            .filter(|(_, &q)| q <= min_gain + scale(min_gain))
            .map(|(c, _)| c.cost + c.successors.iter().map(|&(j, p)| p * bias[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let lhs = gain[i] + bias[i];
        (best - lhs).abs() <= scale(lhs)
    })
}
