use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use crate::materials::MaterialId;

/// Vertices of the regular unit simplex in `R^{M−1}` and the sector
/// matrices `N_i` with rows `(V_i − V_j)ᵀ`, `j ≠ i`.
#[derive(Clone, Debug)]
pub struct SimplexGeometry {
    pub vertices: Vec<Vec<f64>>,
    /// Row-major `N_i^{-1}` of each vertex.
    inverses: Vec<Vec<f64>>,
}

impl SimplexGeometry {
    /// Simplex with `m ≥ 2` vertices, centred at the origin.
    pub fn regular(m: usize) -> Self {
        assert!(m >= 2, "a simplex needs at least two vertices");
        let d = m - 1;
        // Helmert basis of the sum-zero hyperplane of R^m, scaled so that
        // neighbouring vertices are one apart.
        let vertices: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (1..=d)
                    .map(|k| {
                        let h = if i < k {
                            1.0
                        } else if i == k {
                            -(k as f64)
                        } else {
                            0.0
                        };
                        h / ((k * (k + 1)) as f64).sqrt() / 2f64.sqrt()
                    })
                    .collect()
            })
            .collect();
        let inverses = (0..m)
            .map(|i| {
                let others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
                let n = Mat::from_fn(d, d, |r, c| vertices[i][c] - vertices[others[r]][c]);
                let inv = n.partial_piv_lu().inverse();
                (0..d * d).map(|k| inv[(k / d, k % d)]).collect()
            })
            .collect();
        Self { vertices, inverses }
    }

    /// The simplex of the four design materials.
    pub fn materials() -> Self {
        Self::regular(MaterialId::ALL.len())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// `N_i x` for a vector `x ∈ R^{M−1}`.
    pub fn apply(&self, i: usize, x: &[f64]) -> Vec<f64> {
        (0..self.n_vertices())
            .filter(|&j| j != i)
            .map(|j| (0..self.dim()).map(|c| (self.vertices[i][c] - self.vertices[j][c]) * x[c]).sum())
            .collect()
    }

    /// `N_i^{-1} d` for `d = (d_j)_{j≠i}`.
    pub fn solve(&self, i: usize, d: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let inv = &self.inverses[i];
        (0..n).map(|r| (0..n).map(|c| inv[r * n + c] * d[c]).sum()).collect()
    }

    /// Index of the nearest vertex, the lowest index among (numerically) equal
    /// distances.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let dist: Vec<f64> = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let min = dist.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * (1.0 + min);
        dist.iter().position(|&d| d <= min + tol).unwrap_or(0)
    }
}

/// Material whose sector contains `psi`.
pub fn material_at(psi: &[f64], simplex: &SimplexGeometry) -> MaterialId {
    MaterialId::ALL[simplex.nearest(psi)]
}
