//! Norm scales: the sequence spaces lₛ (weights n^{2s}), exponentially
//! weighted time norms with explicit tail estimates, their combination into
//! field norms, and the continuity modulus of the coefficient field.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modes::{Field, ModeTrajectory, TimeGrid};

/// Grid part and tail estimate of an infinite-horizon norm. Both entries
/// are square roots of integral parts, so `total = sqrt(grid² + tail²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct NormValue {
    pub grid_part: f64,
    pub tail_estimate: f64,
}

impl NormValue {
    pub fn total(&self) -> f64 {
        self.grid_part.hypot(self.tail_estimate)
    }

    pub fn total_sq(&self) -> f64 {
        self.grid_part * self.grid_part + self.tail_estimate * self.tail_estimate
    }
}

/// (Σ |cₙ|² n^{2s})^{1/2}, entries indexed from n = 1.
pub fn seq_norm(entries: &[f64], s: f64) -> f64 {
    entries
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let n = (i + 1) as f64;
            c * c * n.powf(2.0 * s)
        })
        .sum::<f64>()
        .sqrt()
}

/// Trapezoidal ∫₀^T e^{−2εt} g(t)² dt on the trajectory grid, plus the tail
/// bound e^{−2εT}·(sup over the last 10% of |g|)²/(2ε).
pub(crate) fn weighted_tail_norm(samples: &[f64], grid: &TimeGrid, eps: f64) -> NormValue {
    let h = grid.step();
    let last = samples.len() - 1;
    let mut grid_sq = 0.0;
    for (j, &g) in samples.iter().enumerate() {
        let w = if j == 0 || j == last { 0.5 } else { 1.0 };
        let t = grid.time(j);
        grid_sq += w * (-2.0 * eps * t).exp() * g * g;
    }
    grid_sq *= h;
    let tail_start = samples.len() - (samples.len() / 10).max(1);
    let sup_tail = samples[tail_start..]
        .iter()
        .fold(0.0f64, |m, &g| m.max(g.abs()));
    let tail_sq = (-2.0 * eps * grid.t_end()).exp() * sup_tail * sup_tail / (2.0 * eps);
    NormValue {
        grid_part: grid_sq.sqrt(),
        tail_estimate: tail_sq.sqrt(),
    }
}

/// Weighted time norm of one mode, ‖e^{−εt} g‖_{L²(0,∞)} with g = θ or θ'.
pub fn mode_weighted_norm(traj: &ModeTrajectory, eps: f64, use_derivative: bool) -> NormValue {
    let samples = if use_derivative {
        traj.theta_dot()
    } else {
        traj.theta()
    };
    weighted_tail_norm(samples, traj.grid(), eps)
}

/// Field norm (Σ n^{2s} ‖e^{−εt} gₙ‖²)^{1/2}; grid and tail parts aggregate
/// separately.
pub fn field_norm(field: &Field, s: f64, eps: f64, use_derivative: bool) -> NormValue {
    let mut grid_sq = 0.0;
    let mut tail_sq = 0.0;
    for traj in field.modes() {
        let w = (traj.n as f64).powf(2.0 * s);
        let m = mode_weighted_norm(traj, eps, use_derivative);
        grid_sq += w * m.grid_part * m.grid_part;
        tail_sq += w * m.tail_estimate * m.tail_estimate;
    }
    NormValue {
        grid_part: grid_sq.sqrt(),
        tail_estimate: tail_sq.sqrt(),
    }
}

/// ‖θ(·,t+δ) − θ(·,t)‖ in the n^{2s}-weighted coefficient norm; both times
/// must lie on the grid.
pub fn continuity_modulus(field: &Field, s: f64, t: f64, delta: f64) -> Result<f64> {
    let grid = field.grid();
    let j0 = grid.index_of(t)?;
    let j1 = grid.index_of(t + delta)?;
    if j1 >= grid.len() {
        return Err(Error::OffGridTime {
            t: t + delta,
            step: grid.step(),
        });
    }
    let diff: Vec<f64> = field
        .modes()
        .iter()
        .map(|m| m.theta()[j1] - m.theta()[j0])
        .collect();
    Ok(seq_norm(&diff, s))
}
