//! Benchmark dynamics: discrete-time systems the planner can drive, plus a
//! weighted-path graph used as a combinatorial benchmark.

pub mod cartpole;
pub mod graph;
pub mod lti;

pub use cartpole::{CartPole, Integrator};
pub use graph::StaticGraph;
pub use lti::{make_double_integrator, LtiSystem};

use nalgebra::DVector;

/// A discrete-time controlled system x_{t+1} = f(x_t, u_t).
pub trait DiscreteSystem {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;

    /// Advances one step. Panics on dimension mismatch (callers validate
    /// dimensions once at configuration time).
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// Maps a raw state into the space where quadratic costs are
    /// evaluated. The default is the identity; systems with circular
    /// coordinates override it (e.g. to wrap an angle) so that cost never
    /// depends on winding count while the integrated state stays smooth.
    fn cost_state(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    /// The exact linear model when the system is linear, which lets the
    /// planner compile a window to a closed-form quadratic objective.
    fn as_lti(&self) -> Option<&LtiSystem> {
        None
    }
}

/// Clamps each input channel into [lo_i, hi_i]. Returns the clamped vector
/// and whether any channel actually moved, so callers can log the event.
pub fn clamp_inputs(
    u: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> (DVector<f64>, bool) {
    let mut clamped = u.clone();
    let mut changed = false;
    for i in 0..u.len() {
        let c = u[i].clamp(lo[i], hi[i]);
        if c != u[i] {
            changed = true;
        }
        clamped[i] = c;
    }
    (clamped, changed)
}

/// Wraps an angle to the half-open interval (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = theta - two_pi * (theta / two_pi).round();
    if wrapped <= -std::f64::consts::PI {
        wrapped + two_pi
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_lands_in_half_open_interval() {
        assert_abs_diff_eq!(wrap_angle(PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(1.5 * PI), -0.5 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(2.0 * PI), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-7.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(0.25), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn clamp_reports_whether_anything_moved() {
        let lo = DVector::from_vec(vec![-1.0, -1.0]);
        let hi = DVector::from_vec(vec![1.0, 1.0]);
        let inside = DVector::from_vec(vec![0.5, -0.5]);
        let (c, changed) = clamp_inputs(&inside, &lo, &hi);
        assert_eq!(c, inside);
        assert!(!changed);

        let outside = DVector::from_vec(vec![2.0, -0.5]);
        let (c, changed) = clamp_inputs(&outside, &lo, &hi);
        assert_eq!(c, DVector::from_vec(vec![1.0, -0.5]));
        assert!(changed);
    }
}
