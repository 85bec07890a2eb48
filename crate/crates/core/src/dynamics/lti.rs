//! Linear time-invariant discrete dynamics.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::DiscreteSystem;
use crate::error::{Error, Result};

/// x_{t+1} = A x_t + B u_t.
#[derive(Debug, Clone)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Shape(format!(
                "state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::Shape(format!(
                "input matrix has {} rows but the state dimension is {}",
                b.nrows(),
                a.nrows()
            )));
        }
        if b.ncols() == 0 {
            return Err(Error::Shape("input matrix must have at least one column".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

impl DiscreteSystem for LtiSystem {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn as_lti(&self) -> Option<&LtiSystem> {
        Some(self)
    }
}

/// Double integrator (position, velocity) driven by acceleration, under
/// exact zero-order-hold discretization:
/// A = [[1, dt], [0, 1]], B = [dt^2/2, dt].
pub fn make_double_integrator(dt: f64) -> LtiSystem {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.5 * dt * dt, dt]);
    LtiSystem::new(a, b).expect("fixed 2x2/2x1 shapes are valid")
}
