use crate::error::{Error, Result};
use crate::problems::ConvexProblem;

use super::CoupledState;

/// Which pair of norms the potential uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovNorm {
    /// `A_t (f(x_t) − f_*) + (B_t/2)‖z_t − x_*‖²`.
    Objective,
    /// `(A_t/2)‖x_t − x_*‖² + (B_t/2)‖z_t − x_*‖²_{H⁻¹}`.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovCoeffs {
    pub a: f64,
    pub b: f64,
    pub norm: LyapunovNorm,
}

pub fn lyapunov_value(state: &CoupledState, coeffs: &LyapunovCoeffs, problem: &ConvexProblem) -> Result<f64> {
    let xs = problem.optimum();
    if state.dimension() != xs.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: state.dimension() });
    }
    let dz = &state.z - xs;
    match coeffs.norm {
        LyapunovNorm::Objective => Ok(coeffs.a * problem.gap(&state.x) + 0.5 * coeffs.b * dz.norm_squared()),
        LyapunovNorm::Multiplicative => {
            let ls = problem.as_least_squares().ok_or_else(|| {
                Error::InvalidSchedule("the H⁻¹-weighted potential needs a least-squares problem".into())
            })?;
            let dx = &state.x - xs;
            let hz = ls.hessian_pinv() * &dz;
            Ok(0.5 * coeffs.a * dx.norm_squared() + 0.5 * coeffs.b * dz.dot(&hz))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::three_scale_quadratic;
    use nalgebra::DVector;

    #[test]
    fn zero_at_optimum() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let s = CoupledState::new(p.optimum().clone(), p.optimum().clone());
        let c = LyapunovCoeffs { a: 3.0, b: 2.0, norm: LyapunovNorm::Objective };
        assert_eq!(lyapunov_value(&s, &c, &p).unwrap(), 0.0);
    }

    #[test]
    fn objective_form() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let s = CoupledState::new(DVector::zeros(3), DVector::zeros(3));
        let c = LyapunovCoeffs { a: 2.0, b: 0.5, norm: LyapunovNorm::Objective };
        let expected = 2.0 * 0.52 + 0.25 * 3.0;
        assert!((lyapunov_value(&s, &c, &p).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn multiplicative_form_needs_least_squares() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let s = CoupledState::new(DVector::zeros(3), DVector::zeros(3));
        let c = LyapunovCoeffs { a: 1.0, b: 1.0, norm: LyapunovNorm::Multiplicative };
        assert!(lyapunov_value(&s, &c, &p).is_err());
    }
}
