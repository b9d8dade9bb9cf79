//! Objectives and gradient oracles.
//!
//! Two families are supported: separable quadratics `½ Σ dᵢ (xᵢ − cᵢ)²` and
//! finite least-squares problems `E[½ (b − ⟨x, a⟩)²]` over a weighted list
//! of atoms. Expectations over atoms are exact sums, so `H`, `R²` and `κ̃`
//! are computed exactly.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, PsdRange};

/// Relative eigenvalue cutoff used to decide the range of a PSD matrix.
const RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    diag: DVector<f64>,
    center: DVector<f64>,
}

impl Quadratic {
    pub fn diag(&self) -> &DVector<f64> {
        &self.diag
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }
}

/// One atom `(a, b)` of a least-squares distribution with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LsSample {
    pub a: DVector<f64>,
    pub b: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    samples: Vec<LsSample>,
    hessian: DMatrix<f64>,
    hessian_pinv: DMatrix<f64>,
    projector: DMatrix<f64>,
    optimum: DVector<f64>,
    r_squared: f64,
    kappa_tilde: f64,
    smoothness: f64,
    strong_convexity: f64,
    sampler: WeightedIndex<f64>,
}

impl LeastSquaresProblem {
    /// Builds a noiseless least-squares problem. Weights must be positive and
    /// sum to one; the labels must be realizable (`b = ⟨x_*, a⟩` on every atom).
    pub fn new(samples: Vec<LsSample>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InvalidProblem("least-squares problem needs at least one sample".into()));
        };
        let d = first.a.len();
        if d == 0 {
            return Err(Error::InvalidProblem("zero-dimensional samples".into()));
        }
        let mut total = 0.0;
        for (i, s) in samples.iter().enumerate() {
            if s.a.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.a.len() });
            }
            if !(s.weight > 0.0 && s.weight.is_finite()) {
                return Err(Error::InvalidProblem(format!("sample {i} has non-positive weight {}", s.weight)));
            }
            total += s.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProblem(format!("sample weights sum to {total}, expected 1")));
        }

        let mut hessian = DMatrix::zeros(d, d);
        let mut moment = DVector::zeros(d);
        for s in &samples {
            hessian += (&s.a * s.a.transpose()) * s.weight;
            moment += &s.a * (s.b * s.weight);
        }
        let range = PsdRange::new(&hessian, RANGE_TOL);
        if range.rank() == 0 {
            return Err(Error::InvalidProblem("hessian is zero".into()));
        }
        let hessian_pinv = range.pinv();
        let projector = range.projector();
        let optimum = &hessian_pinv * &moment;

        let scale = samples.iter().map(|s| s.b.abs().max(s.a.norm())).fold(1.0f64, f64::max);
        let residual = samples.iter().map(|s| (s.b - s.a.dot(&optimum)).abs()).fold(0.0, f64::max);
        if residual > 1e-10 * scale {
            return Err(Error::InvalidProblem(format!(
                "labels are not realizable by a linear model (max residual {residual:e})"
            )));
        }

        let (r_squared, kappa_tilde) = r2_kappa_tilde(&samples, &range, &hessian_pinv, &projector)?;
        let smoothness = *range.values.last().unwrap();
        let strong_convexity = range.values[0];
        let sampler = WeightedIndex::new(samples.iter().map(|s| s.weight))
            .map_err(|e| Error::InvalidProblem(e.to_string()))?;

        Ok(LeastSquaresProblem {
            samples,
            hessian,
            hessian_pinv,
            projector,
            optimum,
            r_squared,
            kappa_tilde,
            smoothness,
            strong_convexity,
            sampler,
        })
    }

    pub fn samples(&self) -> &[LsSample] {
        &self.samples
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Moore–Penrose pseudo-inverse of `H`; `H⁻¹` on its range.
    pub fn hessian_pinv(&self) -> &DMatrix<f64> {
        &self.hessian_pinv
    }

    pub fn r_squared(&self) -> f64 {
        self.r_squared
    }

    pub fn kappa_tilde(&self) -> f64 {
        self.kappa_tilde
    }

    /// `κ = R² / μ`.
    pub fn kappa(&self) -> f64 {
        self.r_squared / self.strong_convexity
    }

    /// Re-anchors the optimum for a run started at `x0`.
    ///
    /// Every update moves the iterates inside `range(H)`, so a run started at
    /// `x0` converges to the minimizer closest to `x0`, i.e. the min-norm
    /// solution plus the component of `x0` in `ker(H)`. For gossip this is
    /// the consensus vector `x̄·1`.
    pub fn anchored_at(&self, x0: &DVector<f64>) -> Result<Self> {
        check_dim(self.dimension(), x0)?;
        let mut out = self.clone();
        out.optimum = &self.optimum + (x0 - &self.projector * x0);
        Ok(out)
    }

    pub fn dimension(&self) -> usize {
        self.hessian.nrows()
    }

    /// `∇f(x, ξ) = −(b − ⟨x, a⟩) a` for atom `index`.
    pub fn sample_gradient(&self, x: &DVector<f64>, index: usize) -> DVector<f64> {
        let s = &self.samples[index];
        &s.a * (s.a.dot(x) - s.b)
    }

    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.samples.iter().map(|s| 0.5 * s.weight * (s.b - s.a.dot(x)).powi(2)).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        for s in &self.samples {
            g += &s.a * (s.weight * (s.a.dot(x) - s.b));
        }
        g
    }
}

/// The two objective families behind one oracle interface.
#[derive(Debug, Clone)]
pub enum ConvexProblem {
    Quadratic(Quadratic),
    LeastSquares(LeastSquaresProblem),
}

impl ConvexProblem {
    pub fn dimension(&self) -> usize {
        match self {
            ConvexProblem::Quadratic(q) => q.diag.len(),
            ConvexProblem::LeastSquares(ls) => ls.dimension(),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ConvexProblem::Quadratic(q) => q
                .diag
                .iter()
                .zip(x.iter().zip(q.center.iter()))
                .map(|(d, (xi, ci))| 0.5 * d * (xi - ci).powi(2))
                .sum(),
            ConvexProblem::LeastSquares(ls) => ls.value(x),
        }
    }

    /// `f(x) − f(x_*)`.
    pub fn gap(&self, x: &DVector<f64>) -> f64 {
        self.value(x) - self.optimum_value()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dimension(), x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub(crate) fn gradient_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConvexProblem::Quadratic(q) => {
                DVector::from_fn(x.len(), |i, _| q.diag[i] * (x[i] - q.center[i]))
            }
            ConvexProblem::LeastSquares(ls) => ls.gradient(x),
        }
    }

    pub fn optimum(&self) -> &DVector<f64> {
        match self {
            ConvexProblem::Quadratic(q) => &q.center,
            ConvexProblem::LeastSquares(ls) => &ls.optimum,
        }
    }

    pub fn optimum_value(&self) -> f64 {
        match self {
            ConvexProblem::Quadratic(_) => 0.0,
            ConvexProblem::LeastSquares(ls) => ls.value(&ls.optimum),
        }
    }

    /// `L`: largest Hessian eigenvalue.
    pub fn smoothness(&self) -> f64 {
        match self {
            ConvexProblem::Quadratic(q) => q.diag.max(),
            ConvexProblem::LeastSquares(ls) => ls.smoothness,
        }
    }

    /// `μ`: smallest Hessian eigenvalue. For least squares with a singular
    /// `H` this is the smallest positive eigenvalue, i.e. strong convexity on
    /// the affine set the iterates stay in.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            ConvexProblem::Quadratic(q) => q.diag.min(),
            ConvexProblem::LeastSquares(ls) => ls.strong_convexity,
        }
    }

    /// Diagonal of the Hessian; the coordinate smoothness constants `M_ii`.
    pub fn hessian_diagonal(&self) -> DVector<f64> {
        match self {
            ConvexProblem::Quadratic(q) => q.diag.clone(),
            ConvexProblem::LeastSquares(ls) => ls.hessian.diagonal(),
        }
    }

    pub fn as_least_squares(&self) -> Option<&LeastSquaresProblem> {
        match self {
            ConvexProblem::LeastSquares(ls) => Some(ls),
            _ => None,
        }
    }
}

/// Gradient noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// Isotropic Gaussian with covariance `(σ²/d)·I`, so `E‖ξ‖² = σ²`.
    Additive { sigma2: f64 },
    /// Gradient of one atom of a least-squares problem.
    Multiplicative,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Additive { sigma2 } if !(*sigma2 >= 0.0 && sigma2.is_finite()) => {
                Err(Error::InvalidProblem(format!("additive noise variance must be >= 0, got {sigma2}")))
            }
            _ => Ok(()),
        }
    }
}

/// `½ Σ dᵢ (xᵢ − cᵢ)²`.
pub fn make_quadratic(diag: Vec<f64>, center: Vec<f64>) -> Result<ConvexProblem> {
    if diag.is_empty() {
        return Err(Error::InvalidProblem("empty diagonal".into()));
    }
    if let Some((i, d)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidProblem(format!("diagonal entry {i} is not positive: {d}")));
    }
    if center.len() != diag.len() {
        return Err(Error::DimensionMismatch { expected: diag.len(), got: center.len() });
    }
    Ok(ConvexProblem::Quadratic(Quadratic {
        diag: DVector::from_vec(diag),
        center: DVector::from_vec(center),
    }))
}

/// `½ Σᵢ (1/i²)(xᵢ − 1/i)²` for `i = 1..=dim`; negligible strong convexity.
pub fn ill_conditioned_convex(dim: usize) -> ConvexProblem {
    let diag = (1..=dim).map(|i| 1.0 / (i * i) as f64).collect();
    let center = (1..=dim).map(|i| 1.0 / i as f64).collect();
    make_quadratic(diag, center).expect("valid by construction")
}

/// `(μ/2)(x₁−1)² + (3μ/2)(x₂−1)² + (L/2)(x₃−1)²`.
pub fn three_scale_quadratic(mu: f64, l: f64) -> Result<ConvexProblem> {
    make_quadratic(vec![mu, 3.0 * mu, l], vec![1.0; 3])
}

pub fn gradient(problem: &ConvexProblem, x: &DVector<f64>) -> Result<DVector<f64>> {
    problem.gradient(x)
}

pub fn stochastic_gradient<R: Rng + ?Sized>(
    problem: &ConvexProblem,
    noise: &NoiseModel,
    x: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    check_dim(problem.dimension(), x)?;
    match noise {
        NoiseModel::None => Ok(problem.gradient_unchecked(x)),
        NoiseModel::Additive { sigma2 } => {
            let mut g = problem.gradient_unchecked(x);
            if *sigma2 > 0.0 {
                let sd = (sigma2 / x.len() as f64).sqrt();
                for gi in g.iter_mut() {
                    let n: f64 = StandardNormal.sample(rng);
                    *gi += sd * n;
                }
            }
            Ok(g)
        }
        NoiseModel::Multiplicative => {
            let ls = problem.as_least_squares().ok_or_else(|| {
                Error::NoiseMismatch("multiplicative noise requires a least-squares problem".into())
            })?;
            Ok(ls.sample_gradient(x, ls.draw_index(rng)))
        }
    }
}

/// `(R², κ̃)` of a least-squares problem.
pub fn compute_r2_kappa_tilde(problem: &LeastSquaresProblem) -> (f64, f64) {
    (problem.r_squared, problem.kappa_tilde)
}

/// Smallest `R²`, `κ̃` with `E[‖a‖² aaᵀ] ≼ R² H` and `E[‖a‖²_{H⁻¹} aaᵀ] ≼ κ̃ H`,
/// i.e. the top eigenvalues of the two moments whitened by `H^{-1/2}` on its range.
fn r2_kappa_tilde(
    samples: &[LsSample],
    range: &PsdRange,
    pinv: &DMatrix<f64>,
    projector: &DMatrix<f64>,
) -> Result<(f64, f64)> {
    let d = projector.nrows();
    let mut norm_moment = DMatrix::zeros(d, d);
    let mut stat_moment = DMatrix::zeros(d, d);
    for s in samples {
        let outside = (&s.a - projector * &s.a).norm();
        if outside > 1e-9 * s.a.norm().max(1.0) {
            return Err(Error::InvalidProblem("sample leaves the span of the hessian".into()));
        }
        let outer = &s.a * s.a.transpose();
        norm_moment += &outer * (s.weight * s.a.norm_squared());
        stat_moment += &outer * (s.weight * s.a.dot(&(pinv * &s.a)));
    }
    let w = range.inv_sqrt();
    let r2 = linalg::max_eigenvalue(&(&w * norm_moment * &w));
    let kt = linalg::max_eigenvalue(&(&w * stat_moment * &w));
    Ok((r2, kt))
}

fn check_dim(expected: usize, x: &DVector<f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn three_scale_constants() {
        let p = make_quadratic(vec![0.01, 0.03, 1.0], vec![1.0; 3]).unwrap();
        assert_eq!(p.smoothness(), 1.0);
        assert_eq!(p.strong_convexity(), 0.01);
        assert!((p.value(&DVector::zeros(3)) - 0.52).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_center() {
        let p = make_quadratic(vec![1.0], vec![0.0]).unwrap();
        assert_eq!(p.gradient(&dv(&[0.0])).unwrap(), dv(&[0.0]));
        assert_eq!(p.gap(&dv(&[0.0])), 0.0);
        let p = make_quadratic(vec![2.0], vec![0.0]).unwrap();
        assert_eq!(p.gradient(&dv(&[3.0])).unwrap(), dv(&[6.0]));
    }

    #[test]
    fn ill_conditioned_constants() {
        let p = ill_conditioned_convex(100);
        assert_eq!(p.smoothness(), 1.0);
        assert!((p.strong_convexity() - 1e-4).abs() < 1e-18);
        assert!(p.gradient(p.optimum()).unwrap().norm() <= 1e-10);
    }

    #[test]
    fn rejects_bad_quadratics() {
        assert!(matches!(make_quadratic(vec![], vec![]), Err(Error::InvalidProblem(_))));
        assert!(matches!(make_quadratic(vec![1.0, 0.0], vec![0.0; 2]), Err(Error::InvalidProblem(_))));
        assert!(matches!(make_quadratic(vec![1.0, -2.0], vec![0.0; 2]), Err(Error::InvalidProblem(_))));
        assert!(matches!(make_quadratic(vec![1.0], vec![0.0; 2]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gradient_dimension_checked() {
        let p = ill_conditioned_convex(4);
        assert!(matches!(p.gradient(&DVector::zeros(3)), Err(Error::DimensionMismatch { expected: 4, got: 3 })));
    }

    #[test]
    fn zero_additive_noise_is_exact() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let x = dv(&[0.3, -0.2, 2.0]);
        let mut rng = stream(1, 0);
        let g = stochastic_gradient(&p, &NoiseModel::Additive { sigma2: 0.0 }, &x, &mut rng).unwrap();
        assert_eq!(g, p.gradient(&x).unwrap());
    }

    #[test]
    fn multiplicative_requires_least_squares() {
        let p = three_scale_quadratic(0.01, 1.0).unwrap();
        let mut rng = stream(1, 0);
        let err = stochastic_gradient(&p, &NoiseModel::Multiplicative, &DVector::zeros(3), &mut rng);
        assert!(matches!(err, Err(Error::NoiseMismatch(_))));
    }

    fn coordinate_problem(d: usize) -> LeastSquaresProblem {
        let xs = DVector::from_fn(d, |i, _| (i as f64) - 1.5);
        let samples = (0..d)
            .map(|i| {
                let mut a = DVector::zeros(d);
                a[i] = (d as f64).sqrt();
                LsSample { b: a.dot(&xs), a, weight: 1.0 / d as f64 }
            })
            .collect();
        LeastSquaresProblem::new(samples).unwrap()
    }

    #[test]
    fn coordinate_sampling_constants() {
        for d in [1, 3, 7] {
            let ls = coordinate_problem(d);
            let (r2, kt) = compute_r2_kappa_tilde(&ls);
            assert!((r2 - d as f64).abs() < 1e-10, "R² = {r2}");
            assert!((kt - d as f64).abs() < 1e-10, "κ̃ = {kt}");
            assert!((ls.hessian() - DMatrix::identity(d, d)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_atom_has_unit_kappa_tilde() {
        let ls = LeastSquaresProblem::new(vec![LsSample { a: dv(&[1.0, 2.0, -1.0]), b: 0.5, weight: 1.0 }]).unwrap();
        assert!((ls.kappa_tilde() - 1.0).abs() < 1e-10);
        assert!((ls.r_squared() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn triangle_edges_have_r2_two() {
        let edges = [(0, 1), (1, 2), (0, 2)];
        let samples = edges
            .iter()
            .map(|&(v, w)| {
                let mut a = DVector::zeros(3);
                a[v] = 1.0;
                a[w] = -1.0;
                LsSample { a, b: 0.0, weight: 1.0 / 3.0 }
            })
            .collect();
        let ls = LeastSquaresProblem::new(samples).unwrap();
        assert!((ls.r_squared() - 2.0).abs() < 1e-10);
        // K₃ with P = 1/3: r_eff = 2 on every edge, so κ̃ = R_max = 2.
        assert!((ls.kappa_tilde() - 2.0).abs() < 1e-10);
        assert!(ls.kappa_tilde() <= ls.kappa() + 1e-12);
    }

    #[test]
    fn rejects_unrealizable_labels() {
        let samples = vec![
            LsSample { a: dv(&[1.0]), b: 1.0, weight: 0.5 },
            LsSample { a: dv(&[1.0]), b: 2.0, weight: 0.5 },
        ];
        assert!(matches!(LeastSquaresProblem::new(samples), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn multiplicative_gradient_vanishes_at_optimum() {
        let ls = coordinate_problem(4);
        let xs = ls.optimum.clone();
        let p = ConvexProblem::LeastSquares(ls);
        let mut rng = stream(3, 1);
        for _ in 0..100 {
            let g = stochastic_gradient(&p, &NoiseModel::Multiplicative, &xs, &mut rng).unwrap();
            assert!(g.norm() <= 1e-12);
        }
    }

    #[test]
    fn anchoring_adds_kernel_component() {
        let samples = vec![LsSample { a: dv(&[1.0, -1.0]), b: 0.0, weight: 1.0 }];
        let ls = LeastSquaresProblem::new(samples).unwrap().anchored_at(&dv(&[1.0, 0.0])).unwrap();
        assert!((ls.optimum - dv(&[0.5, 0.5])).norm() < 1e-14);
    }

    fn random_least_squares(rng: &mut impl Rng, d: usize, n: usize) -> LeastSquaresProblem {
        let xs = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let samples = raw
            .iter()
            .map(|w| {
                let a = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                LsSample { b: a.dot(&xs), a, weight: w / total }
            })
            .collect();
        LeastSquaresProblem::new(samples).unwrap()
    }

    fn families(rng: &mut impl Rng) -> Vec<ConvexProblem> {
        let diag = (0..5).map(|_| rng.random_range(0.1..3.0)).collect();
        let center = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        vec![
            three_scale_quadratic(0.01, 1.0).unwrap(),
            ill_conditioned_convex(12),
            make_quadratic(diag, center).unwrap(),
            ConvexProblem::LeastSquares(random_least_squares(rng, 4, 9)),
        ]
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = stream(17, 0);
        for p in families(&mut rng) {
            let d = p.dimension();
            for _ in 0..20 {
                let x = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
                let g = p.gradient(&x).unwrap();
                let h = 1e-5;
                let fd = DVector::from_fn(d, |i, _| {
                    let mut up = x.clone();
                    let mut down = x.clone();
                    up[i] += h;
                    down[i] -= h;
                    (p.value(&up) - p.value(&down)) / (2.0 * h)
                });
                let rel = (&fd - &g).norm() / g.norm().max(1.0);
                assert!(rel <= 1e-5, "relative error {rel}");
            }
        }
    }

    /// Each coordinate of the sample mean sits within 3 standard errors of
    /// the exact gradient.
    fn assert_unbiased(p: &ConvexProblem, noise: NoiseModel, x: &DVector<f64>, n: usize, seed: u64) {
        let mut rng = stream(seed, 1);
        let d = p.dimension();
        let mut sum = DVector::zeros(d);
        let mut sq = DVector::zeros(d);
        for _ in 0..n {
            let g = stochastic_gradient(p, &noise, x, &mut rng).unwrap();
            sq += g.component_mul(&g);
            sum += g;
        }
        let mean = &sum / n as f64;
        let exact = p.gradient(x).unwrap();
        for i in 0..d {
            let var = (sq[i] / n as f64 - mean[i] * mean[i]).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!((mean[i] - exact[i]).abs() <= 3.0 * se + 1e-12, "coordinate {i}: {} vs {}", mean[i], exact[i]);
        }
    }

    #[test]
    fn stochastic_oracles_are_unbiased() {
        let mut rng = stream(5, 0);
        let ls = ConvexProblem::LeastSquares(random_least_squares(&mut rng, 3, 6));
        let x = dv(&[0.3, -1.0, 2.0]);
        assert_unbiased(&ls, NoiseModel::Multiplicative, &x, 20_000, 1);
        let q = three_scale_quadratic(0.01, 1.0).unwrap();
        assert_unbiased(&q, NoiseModel::Additive { sigma2: 0.5 }, &x, 20_000, 2);
    }

    #[test]
    fn multiplicative_error_shrinks_like_inverse_root() {
        let mut rng = stream(6, 0);
        let p = ConvexProblem::LeastSquares(random_least_squares(&mut rng, 2, 5));
        let x = dv(&[1.0, -1.0]);
        let exact = p.gradient(&x).unwrap();
        // Root-mean-square error over 200 repetitions at n and 16n draws.
        let rms = |n: usize, seed: u64| {
            let mut rng = stream(seed, 1);
            let total: f64 = (0..200)
                .map(|_| {
                    let mut sum = DVector::zeros(2);
                    for _ in 0..n {
                        sum += stochastic_gradient(&p, &NoiseModel::Multiplicative, &x, &mut rng).unwrap();
                    }
                    (sum / n as f64 - &exact).norm_squared()
                })
                .sum();
            (total / 200.0).sqrt()
        };
        let ratio = rms(25, 8) / rms(400, 9);
        assert!((3.0..5.3).contains(&ratio), "error ratio {ratio}, expected about 4");
    }

    #[test]
    fn r2_and_kappa_tilde_are_tight() {
        let mut rng = stream(21, 0);
        for trial in 0..10 {
            let ls = random_least_squares(&mut rng, 2 + trial % 4, 3 + trial);
            let h = ls.hessian();
            let d = h.nrows();
            let hinv = ls.hessian_pinv();
            let mut norm_moment = DMatrix::zeros(d, d);
            let mut stat_moment = DMatrix::zeros(d, d);
            for s in ls.samples() {
                let outer = &s.a * s.a.transpose();
                norm_moment += &outer * (s.weight * s.a.norm_squared());
                stat_moment += &outer * (s.weight * s.a.dot(&(hinv * &s.a)));
            }
            let scale = linalg::max_eigenvalue(h);
            for (c, m) in [(ls.r_squared(), norm_moment), (ls.kappa_tilde(), stat_moment)] {
                let slack = linalg::min_eigenvalue(&(h * c - m));
                assert!(slack >= -1e-9 * scale * c, "not PSD: {slack}");
                assert!(slack <= 1e-8 * scale * c.max(1.0), "not tight: {slack}");
            }
        }
    }
}
