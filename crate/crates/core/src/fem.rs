//! Linear (P1) triangle helpers shared by the field solvers.

/// Area and constant shape-function gradients of a linear triangle.
#[derive(Clone, Copy, Debug)]
pub struct P1 {
    pub area: f64,
    pub grad: [[f64; 2]; 3],
}

impl P1 {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = p;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let inv = 1.0 / det;
        let grad = [
            [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
            [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
            [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
        ];
        Self {
            area: 0.5 * det,
            grad,
        }
    }

    /// 2D curl of shape function `i`: `(∂y φ, −∂x φ)`.
    #[inline]
    pub fn curl(&self, i: usize) -> [f64; 2] {
        [self.grad[i][1], -self.grad[i][0]]
    }

    /// Gradient of the interpolant with nodal values `v`.
    #[inline]
    pub fn gradient(&self, v: [f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += v[i] * self.grad[i][0];
            g[1] += v[i] * self.grad[i][1];
        }
        g
    }

    /// Curl of the interpolant with nodal values `v` (the flux density for `a`).
    #[inline]
    pub fn curl_of(&self, v: [f64; 3]) -> [f64; 2] {
        let g = self.gradient(v);
        [g[1], -g[0]]
    }
}

/// Signed area of a triangle (positive for counter-clockwise orientation).
pub fn signed_area(p: [[f64; 2]; 3]) -> f64 {
    let [a, b, c] = p;
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Consistent P1 mass matrix entry factor: `∫ φ_i φ_j = area/12 · (1 + δ_ij)`.
#[inline]
pub fn mass_entry(area: f64, i: usize, j: usize) -> f64 {
    if i == j {
        area / 6.0
    } else {
        area / 12.0
    }
}

/// `∫_T x φ_i dx` for the linear function `x` with nodal values `x_nodes`.
#[inline]
pub fn linear_load(area: f64, x_nodes: [f64; 3], i: usize) -> f64 {
    area / 12.0 * (x_nodes[0] + x_nodes[1] + x_nodes[2] + x_nodes[i])
}
