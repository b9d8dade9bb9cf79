use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problems::ConvexProblem;
use crate::trace::{Sample, Trace};

use super::CoupledState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NesterovVariant {
    Convex,
    StronglyConvex,
}

/// `A₀ = 0`, `A_{k+1} = A_k + ½(1 + √(4A_k + 1))`; returns `A₀..=A_n`.
pub fn nesterov_a_sequence(n: usize) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(n + 1);
    a.push(0.0);
    for k in 0..n {
        let ak = a[k];
        a.push(ak + 0.5 * (1.0 + (4.0 * ak + 1.0).sqrt()));
    }
    a
}

fn gap_sample(problem: &ConvexProblem, x: &DVector<f64>, k: usize) -> Sample {
    Sample { t: k as f64, k: k as u64, values: vec![problem.gap(x)], checkpoint: true, event: true }
}

/// Classical three-sequence Nesterov scheme, recording the gap at every
/// iteration `k = 0..=iters` (sample time `t = k`).
pub fn run_nesterov(
    problem: &ConvexProblem,
    variant: NesterovVariant,
    iters: usize,
    x0: &DVector<f64>,
) -> Result<Trace> {
    if x0.len() != problem.dimension() {
        return Err(Error::DimensionMismatch { expected: problem.dimension(), got: x0.len() });
    }
    let l = problem.smoothness();
    let mu = problem.strong_convexity();
    if variant == NesterovVariant::StronglyConvex && !(mu > 0.0) {
        return Err(Error::InvalidProblem("the strongly convex variant needs mu > 0".into()));
    }
    let a = nesterov_a_sequence(iters);
    let q = (mu / l).sqrt();
    let (mut x, mut z) = (x0.clone(), x0.clone());
    let mut trace = Trace::new(&["gap"], CoupledState::new(x.clone(), z.clone()));
    trace.push(gap_sample(problem, &x, 0));
    for k in 0..iters {
        let (tau, tau_prime, gamma_prime) = match variant {
            NesterovVariant::Convex => (1.0 - a[k] / a[k + 1], 0.0, (a[k + 1] - a[k]) / l),
            NesterovVariant::StronglyConvex => (q / (1.0 + q), q, 1.0 / (mu * l).sqrt()),
        };
        let y = &x + (&z - &x) * tau;
        let g = problem.gradient_unchecked(&y);
        x = &y - &g / l;
        z = &z + (&y - &z) * tau_prime - &g * gamma_prime;
        trace.push(gap_sample(problem, &x, k + 1));
    }
    trace.terminal_state = CoupledState { x, z, t: iters as f64, event_count: iters as u64 };
    Ok(trace)
}

/// Gradient descent with a fixed step in `(0, 1/L]`.
pub fn run_gd(problem: &ConvexProblem, step: f64, iters: usize, x0: &DVector<f64>) -> Result<Trace> {
    if x0.len() != problem.dimension() {
        return Err(Error::DimensionMismatch { expected: problem.dimension(), got: x0.len() });
    }
    if !(step > 0.0 && step <= 1.0 / problem.smoothness()) {
        return Err(Error::InvalidSchedule(format!("step {step} outside (0, 1/L]")));
    }
    let mut x = x0.clone();
    let mut trace = Trace::new(&["gap"], CoupledState::new(x.clone(), x.clone()));
    trace.push(gap_sample(problem, &x, 0));
    for k in 0..iters {
        x -= problem.gradient_unchecked(&x) * step;
        trace.push(gap_sample(problem, &x, k + 1));
    }
    trace.terminal_state = CoupledState { x: x.clone(), z: x, t: iters as f64, event_count: iters as u64 };
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{ill_conditioned_convex, make_quadratic, three_scale_quadratic};

    #[test]
    fn a_sequence_start() {
        let a = nesterov_a_sequence(2);
        assert_eq!(a[1], 1.0);
        assert!((a[2] - (1.0 + 0.5 * (1.0 + 5f64.sqrt()))).abs() < 1e-15);
    }

    #[test]
    fn convex_nesterov_bound() {
        let p = ill_conditioned_convex(100);
        let x0 = DVector::zeros(100);
        let r0 = (&x0 - p.optimum()).norm_squared();
        let trace = run_nesterov(&p, NesterovVariant::Convex, 500, &x0).unwrap();
        for s in trace.samples.iter().skip(1) {
            assert!(s.values[0] <= 2.0 * r0 / (s.t * s.t), "k = {}", s.k);
        }
    }

    #[test]
    fn strongly_convex_nesterov_converges() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let trace = run_nesterov(&p, NesterovVariant::StronglyConvex, 300, &DVector::zeros(3)).unwrap();
        let last = trace.samples.last().unwrap().values[0];
        assert!(last < 1e-8 * trace.samples[0].values[0]);
        assert!(run_nesterov(&ill_conditioned_convex(3), NesterovVariant::Convex, 1, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn gd_newton_coincidence_and_rate() {
        let p = make_quadratic(vec![1.0], vec![0.0]).unwrap();
        let trace = run_gd(&p, 1.0, 1, &DVector::from_element(1, 1.0)).unwrap();
        assert_eq!(trace.terminal_state.x[0], 0.0);

        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let trace = run_gd(&p, 1.0, 200, &DVector::zeros(3)).unwrap();
        let g0 = trace.samples[0].values[0];
        for s in &trace.samples {
            assert!(s.values[0] <= g0 * (1.0 - 0.01f64).powi(s.k as i32) * (1.0 + 1e-12));
        }
        assert!(run_gd(&p, 1.5, 1, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn gd_at_optimum_stays() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let trace = run_gd(&p, 0.5, 10, p.optimum()).unwrap();
        assert_eq!(&trace.terminal_state.x, p.optimum());
    }
}
