//! Dense symmetric helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues sorted ascending with matching eigenvector columns.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigen-split of a PSD matrix into its range: eigenvalues above
/// `rel_tol * λ_max` and their eigenvectors.
pub struct PsdRange {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl PsdRange {
    pub fn new(m: &DMatrix<f64>, rel_tol: f64) -> Self {
        let (values, vectors) = sorted_eigen(m);
        let top = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > rel_tol * top).collect();
        let mut basis = DMatrix::zeros(m.nrows(), keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            basis.set_column(dst, &vectors.column(src));
        }
        PsdRange { values: keep.iter().map(|&i| values[i]).collect(), vectors: basis }
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `U f(Λ) Uᵀ` over the range.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.rank(), |i, j| {
            self.vectors[(i, j)] * f(self.values[j])
        });
        &scaled * self.vectors.transpose()
    }

    pub fn pinv(&self) -> DMatrix<f64> {
        self.apply_fn(|l| 1.0 / l)
    }

    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        self.apply_fn(|l| 1.0 / l.sqrt())
    }

    /// Orthogonal projector onto the range.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.vectors * self.vectors.transpose()
    }
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}
