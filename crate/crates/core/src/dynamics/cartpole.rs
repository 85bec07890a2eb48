//! Cart-pole (inverted pendulum on a cart) with a point-mass pole.
//!
//! State is [q, q_dot, theta, theta_dot] with theta = 0 at the upright
//! position and theta = pi hanging straight down. The angle is measured so
//! that a positive force on the cart tips the pole toward positive theta;
//! the pole pivot rides the cart and the pole tip sits at
//! (q - l sin(theta), l cos(theta)).
//!
//! With mu(theta) = M + m sin^2(theta), the accelerations are
//!
//! ```text
//! q_ddot     = [F + m sin(theta) (g cos(theta) - l theta_dot^2)] / mu(theta)
//! theta_ddot = [(M + m) g sin(theta) + cos(theta) (F - m l theta_dot^2 sin(theta))]
//!              / (l mu(theta))
//! ```
//!
//! The integrated state keeps theta unwrapped so trajectories stay smooth;
//! only cost evaluation wraps it to (-pi, pi] (see
//! [`DiscreteSystem::cost_state`]).

use nalgebra::DVector;

use crate::dynamics::{wrap_angle, DiscreteSystem};
use crate::error::{Error, Result};

/// Time-stepping scheme for the continuous dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Velocities update from current accelerations, then positions update
    /// with the *new* velocities. Good energy behavior at control-rate
    /// steps; the default.
    SemiImplicitEuler,
    /// Textbook forward Euler.
    ExplicitEuler,
    /// Classic fourth-order Runge-Kutta.
    Rk4,
}

/// Cart-pole parameters and step configuration.
#[derive(Debug, Clone)]
pub struct CartPole {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_length: f64,
    pub gravity: f64,
    pub dt: f64,
    pub integrator: Integrator,
}

impl Default for CartPole {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_length: 0.5,
            gravity: 9.81,
            dt: 0.05,
            integrator: Integrator::SemiImplicitEuler,
        }
    }
}

impl CartPole {
    /// Validates physical parameters.
    pub fn validated(self) -> Result<Self> {
        if self.cart_mass <= 0.0 || self.pole_mass <= 0.0 || self.pole_length <= 0.0 {
            return Err(Error::Config("cart-pole masses and length must be positive".into()));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config("cart-pole time step must be positive".into()));
        }
        Ok(self)
    }

    /// Cart and pole angular accelerations (q_ddot, theta_ddot) for the
    /// given state and horizontal force.
    pub fn accelerations(&self, x: &DVector<f64>, force: f64) -> (f64, f64) {
        let (m_cart, m_pole, l, g) = (self.cart_mass, self.pole_mass, self.pole_length, self.gravity);
        let theta = x[2];
        let theta_dot = x[3];
        let (sin_t, cos_t) = theta.sin_cos();
        let mu = m_cart + m_pole * sin_t * sin_t;
        let q_ddot = (force + m_pole * sin_t * (g * cos_t - l * theta_dot * theta_dot)) / mu;
        let theta_ddot = ((m_cart + m_pole) * g * sin_t
            + cos_t * (force - m_pole * l * theta_dot * theta_dot * sin_t))
            / (l * mu);
        (q_ddot, theta_ddot)
    }

    fn derivative(&self, x: &DVector<f64>, force: f64) -> DVector<f64> {
        let (q_ddot, theta_ddot) = self.accelerations(x, force);
        DVector::from_vec(vec![x[1], q_ddot, x[3], theta_ddot])
    }

    /// Total mechanical energy; conserved by the exact flow when no force
    /// is applied. Useful for integrator checks.
    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let (m_cart, m_pole, l, g) = (self.cart_mass, self.pole_mass, self.pole_length, self.gravity);
        let (q_dot, theta, theta_dot) = (x[1], x[2], x[3]);
        0.5 * (m_cart + m_pole) * q_dot * q_dot
            - m_pole * l * q_dot * theta_dot * theta.cos()
            + 0.5 * m_pole * l * l * theta_dot * theta_dot
            + m_pole * g * l * theta.cos()
    }
}

impl DiscreteSystem for CartPole {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let force = u[0];
        let dt = self.dt;
        match self.integrator {
            Integrator::SemiImplicitEuler => {
                let (q_ddot, theta_ddot) = self.accelerations(x, force);
                let q_dot = x[1] + dt * q_ddot;
                let theta_dot = x[3] + dt * theta_ddot;
                DVector::from_vec(vec![
                    x[0] + dt * q_dot,
                    q_dot,
                    x[2] + dt * theta_dot,
                    theta_dot,
                ])
            }
            Integrator::ExplicitEuler => x + self.derivative(x, force) * dt,
            Integrator::Rk4 => {
                let k1 = self.derivative(x, force);
                let k2 = self.derivative(&(x + &k1 * (dt / 2.0)), force);
                let k3 = self.derivative(&(x + &k2 * (dt / 2.0)), force);
                let k4 = self.derivative(&(x + &k3 * dt), force);
                x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
            }
        }
    }

    fn cost_state(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut c = x.clone();
        c[2] = wrap_angle(x[2]);
        c
    }
}
