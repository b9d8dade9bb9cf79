use crate::error::{Error, Result};
use crate::problems::ConvexProblem;

use super::lyapunov::{LyapunovCoeffs, LyapunovNorm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Convex,
    StronglyConvex,
    MultiplicativeConvex,
    MultiplicativeStronglyConvex,
    Coordinate,
}

/// Shape of the mixing ODE `dx = η(z − x)dt, dz = η'(x − z)dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mixing {
    /// `η_t = 2/t`, `η'_t = 0`.
    Vanishing,
    /// `η_t = η'_t = c`.
    Constant(f64),
}

/// `γ'_t` is either `slope · t` or a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ZStep {
    Linear(f64),
    Constant(f64),
}

/// Continuous-time parameters `(η_t, η'_t, γ_t, γ'_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub eta: f64,
    pub eta_prime: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
}

/// Random weights `(τ_k, τ'_k, γ̃_k, γ̃'_k)` of the three-sequence recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteParams {
    pub tau: f64,
    pub tau_prime: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
}

/// A closed-form parameter schedule. Every supported kind has either
/// vanishing or constant mixing, which is what makes the ODE solvable exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSchedule {
    kind: ScheduleKind,
    mixing: Mixing,
    gamma: f64,
    z_step: ZStep,
    mu: f64,
    norm: LyapunovNorm,
    coordinate_probs: Option<Vec<f64>>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidSchedule(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ParamSchedule {
    /// `η = 2/t, η' = 0, γ = 1/L, γ' = t/(2L)`.
    pub fn convex(l: f64) -> Result<Self> {
        let l = positive("L", l)?;
        Ok(ParamSchedule {
            kind: ScheduleKind::Convex,
            mixing: Mixing::Vanishing,
            gamma: 1.0 / l,
            z_step: ZStep::Linear(1.0 / (2.0 * l)),
            mu: 0.0,
            norm: LyapunovNorm::Objective,
            coordinate_probs: None,
        })
    }

    /// `η = η' = √(μ/L), γ = 1/L, γ' = 1/√(μL)`.
    pub fn strongly_convex(l: f64, mu: f64) -> Result<Self> {
        let (l, mu) = (positive("L", l)?, positive("mu", mu)?);
        if mu > l {
            return Err(Error::InvalidSchedule(format!("mu = {mu} exceeds L = {l}")));
        }
        Ok(ParamSchedule {
            kind: ScheduleKind::StronglyConvex,
            mixing: Mixing::Constant((mu / l).sqrt()),
            gamma: 1.0 / l,
            z_step: ZStep::Constant(1.0 / (mu * l).sqrt()),
            mu,
            norm: LyapunovNorm::Objective,
            coordinate_probs: None,
        })
    }

    /// `η = 2/t, η' = 0, γ = 1/R², γ' = t/(2R²κ̃)`.
    pub fn multiplicative_convex(r_squared: f64, kappa_tilde: f64) -> Result<Self> {
        let (r2, kt) = (positive("R^2", r_squared)?, positive("kappa_tilde", kappa_tilde)?);
        Ok(ParamSchedule {
            kind: ScheduleKind::MultiplicativeConvex,
            mixing: Mixing::Vanishing,
            gamma: 1.0 / r2,
            z_step: ZStep::Linear(1.0 / (2.0 * r2 * kt)),
            mu: 0.0,
            norm: LyapunovNorm::Multiplicative,
            coordinate_probs: None,
        })
    }

    /// With `κ = R²/μ`: `η = η' = 1/√(κκ̃), γ = 1/R², γ' = √(κ/κ̃)/R²`.
    pub fn multiplicative_strongly_convex(r_squared: f64, kappa_tilde: f64, mu: f64) -> Result<Self> {
        let (r2, kt, mu) = (positive("R^2", r_squared)?, positive("kappa_tilde", kappa_tilde)?, positive("mu", mu)?);
        let kappa = r2 / mu;
        Ok(ParamSchedule {
            kind: ScheduleKind::MultiplicativeStronglyConvex,
            mixing: Mixing::Constant(1.0 / (kappa * kt).sqrt()),
            gamma: 1.0 / r2,
            z_step: ZStep::Constant((kappa / kt).sqrt() / r2),
            mu,
            norm: LyapunovNorm::Multiplicative,
            coordinate_probs: None,
        })
    }

    /// Continuized coordinate descent sampling coordinate `i` with probability
    /// `probs[i]`. `l` must dominate `max_i M_ii / P_i²`; `mu = 0` selects the
    /// vanishing-mixing schedule, `mu > 0` the constant one.
    pub fn coordinate(l: f64, mu: f64, probs: Vec<f64>) -> Result<Self> {
        let l = positive("L", l)?;
        if !(mu >= 0.0 && mu <= l) {
            return Err(Error::InvalidSchedule(format!("coordinate schedule needs 0 <= mu <= L, got {mu}")));
        }
        if probs.is_empty() || probs.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidSchedule("coordinate probabilities must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSchedule(format!("coordinate probabilities sum to {total}")));
        }
        let (mixing, z_step) = if mu > 0.0 {
            (Mixing::Constant((mu / l).sqrt()), ZStep::Constant(1.0 / (mu * l).sqrt()))
        } else {
            (Mixing::Vanishing, ZStep::Linear(1.0 / (2.0 * l)))
        };
        Ok(ParamSchedule {
            kind: ScheduleKind::Coordinate,
            mixing,
            gamma: 1.0 / l,
            z_step,
            mu,
            norm: LyapunovNorm::Objective,
            coordinate_probs: Some(probs),
        })
    }

    /// Coordinate schedule for `problem` with `L = max_i M_ii / P_i²`.
    pub fn coordinate_for(problem: &ConvexProblem, probs: Vec<f64>, strongly_convex: bool) -> Result<Self> {
        if probs.len() != problem.dimension() {
            return Err(Error::DimensionMismatch { expected: problem.dimension(), got: probs.len() });
        }
        let m = problem.hessian_diagonal();
        let l = m.iter().zip(&probs).map(|(mi, p)| mi / (p * p)).fold(0.0, f64::max);
        let mu = if strongly_convex { problem.strong_convexity() } else { 0.0 };
        Self::coordinate(l, mu, probs)
    }

    /// The schedule of `kind` with constants read off `problem`.
    pub fn for_problem(kind: ScheduleKind, problem: &ConvexProblem) -> Result<Self> {
        let ls = || {
            problem.as_least_squares().ok_or_else(|| {
                Error::InvalidSchedule("multiplicative schedules need a least-squares problem".into())
            })
        };
        match kind {
            ScheduleKind::Convex => Self::convex(problem.smoothness()),
            ScheduleKind::StronglyConvex => Self::strongly_convex(problem.smoothness(), problem.strong_convexity()),
            ScheduleKind::MultiplicativeConvex => {
                let ls = ls()?;
                Self::multiplicative_convex(ls.r_squared(), ls.kappa_tilde())
            }
            ScheduleKind::MultiplicativeStronglyConvex => {
                let ls = ls()?;
                Self::multiplicative_strongly_convex(ls.r_squared(), ls.kappa_tilde(), problem.strong_convexity())
            }
            ScheduleKind::Coordinate => {
                let d = problem.dimension();
                Self::coordinate_for(problem, vec![1.0 / d as f64; d], problem.strong_convexity() > 0.0)
            }
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn mixing(&self) -> Mixing {
        self.mixing
    }

    pub fn norm(&self) -> LyapunovNorm {
        self.norm
    }

    pub fn coordinate_probs(&self) -> Option<&[f64]> {
        self.coordinate_probs.as_deref()
    }

    /// Strong convexity constant the schedule was built for (0 for convex kinds).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `(γ_t, γ'_t)` applied by a jump at time `t`.
    pub fn step_sizes(&self, t: f64) -> (f64, f64) {
        let gp = match self.z_step {
            ZStep::Linear(slope) => slope * t,
            ZStep::Constant(c) => c,
        };
        (self.gamma, gp)
    }

    pub fn eval(&self, t: f64) -> Result<Params> {
        let (gamma, gamma_prime) = self.step_sizes(t);
        let (eta, eta_prime) = match self.mixing {
            Mixing::Vanishing => {
                if !(t > 0.0) {
                    return Err(Error::SingularSchedule(t));
                }
                (2.0 / t, 0.0)
            }
            Mixing::Constant(c) => (c, c),
        };
        Ok(Params { eta, eta_prime, gamma, gamma_prime })
    }

    /// Weights of the exact discretization between consecutive events.
    /// The jump at `t_next` uses `γ'_{t_next}`.
    pub fn discrete(&self, t_k: f64, t_next: f64) -> Result<DiscreteParams> {
        if !(t_k >= 0.0 && t_next > t_k && t_next.is_finite()) {
            return Err(Error::InvalidInterval { from: t_k, to: t_next });
        }
        let (tau, tau_prime) = match self.mixing {
            Mixing::Vanishing => (1.0 - (t_k / t_next).powi(2), 0.0),
            Mixing::Constant(c) => {
                let gap = t_next - t_k;
                (-0.5 * (-2.0 * c * gap).exp_m1(), (c * gap).tanh())
            }
        };
        let (gamma, gamma_prime) = self.step_sizes(t_next);
        Ok(DiscreteParams { tau, tau_prime, gamma, gamma_prime })
    }

    /// `(A_t, B_t)` for which `φ_t` is a supermartingale under this schedule.
    pub fn lyapunov_coeffs(&self, t: f64) -> LyapunovCoeffs {
        let (a, b) = match (self.mixing, self.z_step) {
            // √A_t = t·√(slope/2): A_t = t²/(4L) for the convex kind.
            (Mixing::Vanishing, ZStep::Linear(slope)) => (0.5 * slope * t * t, 1.0),
            (Mixing::Constant(c), _) => {
                let a = (c * t).exp();
                (a, self.mu * a)
            }
            (Mixing::Vanishing, ZStep::Constant(_)) => unreachable!("no such schedule"),
        };
        LyapunovCoeffs { a, b, norm: self.norm }
    }
}

pub fn schedule_eval(schedule: &ParamSchedule, t: f64) -> Result<Params> {
    schedule.eval(t)
}

pub fn discrete_params(schedule: &ParamSchedule, t_k: f64, t_next: f64) -> Result<DiscreteParams> {
    schedule.discrete(t_k, t_next)
}
