//! Spatial discretization: a 0-D point or a 1-D interval with homogeneous
//! Dirichlet conditions, interior-node representation.
//!
//! Fields store only interior values; the boundary ghosts are identically
//! zero, which keeps every linear solve symmetric positive definite once the
//! viscous mass term is added.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum GridError {
    #[error("field has {got} entries, grid expects {want}")]
    Shape { got: usize, want: usize },
    #[error("invalid grid: {0}")]
    Invalid(String),
}

/// Discretized spatial domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid<S = f64> {
    /// 0 (single material point) or 1 (interval with Dirichlet ends).
    pub dim: u8,
    /// Components per node.
    pub m: usize,
    /// Interior node count (1 in 0-D).
    pub n_nodes: usize,
    /// Mesh spacing; meaningless in 0-D where it is set to one.
    pub h: S,
    /// Domain length `h * (n_nodes + 1)` in 1-D.
    pub length: S,
}

impl<S: Scalar> SpatialGrid<S> {
    pub fn point(m: usize) -> Self {
        SpatialGrid { dim: 0, m, n_nodes: 1, h: S::one(), length: S::zero() }
    }

    pub fn interval(m: usize, n_nodes: usize, length: S) -> Result<Self, GridError> {
        if n_nodes == 0 || length <= S::zero() {
            return Err(GridError::Invalid("interval needs n_nodes >= 1 and length > 0".into()));
        }
        let h = length / S::from_usize(n_nodes + 1).unwrap();
        Ok(SpatialGrid { dim: 1, m, n_nodes, h, length })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_nodes * self.m
    }

    /// Quadrature weight of one interior node: `h` in 1-D, 1 in 0-D.
    #[inline]
    pub fn weight(&self) -> S {
        if self.dim == 0 { S::one() } else { self.h }
    }

    /// Coordinate of interior node `i` (1-D).
    #[inline]
    pub fn x(&self, i: usize) -> S {
        self.h * S::from_usize(i + 1).unwrap()
    }

    pub fn check<T>(&self, u: &Field<T>) -> Result<(), GridError> {
        if u.0.len() != self.len() {
            Err(GridError::Shape { got: u.0.len(), want: self.len() })
        } else {
            Ok(())
        }
    }

    pub fn zero_field(&self) -> Field<S> {
        Field(vec![S::zero(); self.len()])
    }

    pub fn constant_field(&self, v: &[S]) -> Field<S> {
        assert_eq!(v.len(), self.m);
        let mut f = self.zero_field();
        for i in 0..self.n_nodes {
            f.node_mut(i, self.m).copy_from_slice(v);
        }
        f
    }

    /// Second-order stencil `(u_{i-1} - 2 u_i + u_{i+1}) / h^2` with zero
    /// ghost nodes; the zero map in 0-D.
    pub fn laplacian(&self, u: &Field<S>) -> Field<S> {
        self.check(u).expect("conforming field");
        let mut out = self.zero_field();
        if self.dim == 0 {
            return out;
        }
        let m = self.m;
        let n = self.n_nodes;
        let h2 = self.h * self.h;
        for i in 0..n {
            for c in 0..m {
                let left = if i == 0 { S::zero() } else { u.0[(i - 1) * m + c] };
                let right = if i + 1 == n { S::zero() } else { u.0[(i + 1) * m + c] };
                out.0[i * m + c] = (left - (S::one() + S::one()) * u.0[i * m + c] + right) / h2;
            }
        }
        out
    }

    /// Quadrature `L^2`-style pairing `<a, b> = w * sum a_i b_i`.
    pub fn pair(&self, a: &Field<S>, b: &Field<S>) -> S {
        debug_assert_eq!(a.0.len(), b.0.len());
        let mut s = S::zero();
        for (x, y) in a.0.iter().zip(&b.0) {
            s = s + *x * *y;
        }
        s * self.weight()
    }

    pub fn norm_l1(&self, u: &Field<S>) -> S {
        let mut s = S::zero();
        for x in &u.0 {
            s = s + x.abs();
        }
        s * self.weight()
    }

    pub fn norm_l2(&self, u: &Field<S>) -> S {
        self.pair(u, u).sqrt()
    }

    pub fn norm_lq(&self, u: &Field<S>, q: S) -> S {
        let mut s = S::zero();
        for x in &u.0 {
            s = s + x.abs().powf(q);
        }
        (s * self.weight()).powf(S::one() / q)
    }

    /// `H^1`-seminorm via forward differences with zero ghosts; zero in 0-D.
    pub fn norm_h1_semi(&self, u: &Field<S>) -> S {
        if self.dim == 0 {
            return S::zero();
        }
        let m = self.m;
        let n = self.n_nodes;
        let mut s = S::zero();
        for c in 0..m {
            let mut prev = S::zero();
            for i in 0..n {
                let d = u.0[i * m + c] - prev;
                s = s + d * d;
                prev = u.0[i * m + c];
            }
            s = s + prev * prev; // last interval to the right boundary
        }
        (s / self.h).sqrt()
    }

    /// Eigenvalue of `-laplacian` for the discrete mode `sin(pi k x / L)`.
    pub fn stencil_eigenvalue(&self, k: usize) -> S {
        let two = S::one() + S::one();
        let arg = S::of(std::f64::consts::PI) * S::from_usize(k).unwrap() * self.h / self.length;
        (two - two * arg.cos()) / (self.h * self.h)
    }
}

/// Nodal field over a grid, node-major layout (`values[node * m + comp]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<S = f64>(pub Vec<S>);

impl<S: Scalar> Field<S> {
    pub fn node(&self, i: usize, m: usize) -> &[S] {
        &self.0[i * m..(i + 1) * m]
    }

    pub fn node_mut(&mut self, i: usize, m: usize) -> &mut [S] {
        &mut self.0[i * m..(i + 1) * m]
    }

    pub fn axpy(&mut self, a: S, x: &Field<S>) {
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s = *s + a * *v;
        }
    }

    pub fn scaled(&self, a: S) -> Field<S> {
        Field(self.0.iter().map(|v| *v * a).collect())
    }

    pub fn sub(&self, other: &Field<S>) -> Field<S> {
        Field(self.0.iter().zip(&other.0).map(|(a, b)| *a - *b).collect())
    }

    pub fn add(&self, other: &Field<S>) -> Field<S> {
        Field(self.0.iter().zip(&other.0).map(|(a, b)| *a + *b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1d(n: usize) -> SpatialGrid {
        SpatialGrid::interval(1, n, 1.0).unwrap()
    }

    #[test]
    fn zero_dim_laplacian_is_zero() {
        let g: SpatialGrid = SpatialGrid::point(2);
        let u = Field(vec![3.0, -1.0]);
        assert_eq!(g.laplacian(&u).0, vec![0.0, 0.0]);
        assert_eq!(g.norm_l1(&u), 4.0);
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let g = grid1d(17);
        let u = g.zero_field();
        assert!(g.laplacian(&u).0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn discrete_eigenfunction() {
        // sin(pi x) is an exact eigenvector of the stencil.
        let g = grid1d(31);
        let mut u = g.zero_field();
        for i in 0..g.n_nodes {
            u.0[i] = (std::f64::consts::PI * g.x(i)).sin();
        }
        let lap = g.laplacian(&u);
        let lam = g.stencil_eigenvalue(1);
        for i in 0..g.n_nodes {
            assert!((lap.0[i] + lam * u.0[i]).abs() < 1e-12, "node {i}");
        }
        // Parseval-style identity: |u|_{H1}^2 = lambda * |u|_{L2}^2.
        let h1 = g.norm_h1_semi(&u);
        let l2 = g.norm_l2(&u);
        assert!((h1 * h1 - lam * l2 * l2).abs() < 1e-12);
    }

    #[test]
    fn single_node_l1_quadrature() {
        let g: SpatialGrid = SpatialGrid::interval(1, 1, 1.0).unwrap();
        assert!((g.h - 0.5).abs() < 1e-15);
        let u = Field(vec![2.0]);
        assert!((g.norm_l1(&u) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplacian_symmetric_negative() {
        let g = grid1d(9);
        let mut u = g.zero_field();
        let mut v = g.zero_field();
        for i in 0..9 {
            u.0[i] = (i as f64 * 0.7).sin();
            v.0[i] = (i as f64 * 1.3).cos();
        }
        let lu = g.laplacian(&u);
        let lv = g.laplacian(&v);
        assert!((g.pair(&lu, &v) - g.pair(&u, &lv)).abs() < 1e-12);
        assert!(g.pair(&lu, &u) <= 0.0);
    }

    #[test]
    fn discrete_poincare() {
        let g = grid1d(13);
        let c = {
            let s = (std::f64::consts::PI * g.h / 2.0).sin();
            g.h / (2.0 * s)
        };
        let mut u = g.zero_field();
        let mut seed = 0.42_f64;
        for i in 0..13 {
            seed = (seed * 987.123).fract();
            u.0[i] = seed - 0.5;
        }
        assert!(g.norm_l2(&u) <= c * g.norm_h1_semi(&u) + 1e-12);
    }

    #[test]
    fn shape_mismatch_detected() {
        let g = grid1d(4);
        let u: Field = Field(vec![0.0; 3]);
        assert!(g.check(&u).is_err());
    }

    #[test]
    fn works_in_f32() {
        let g: SpatialGrid<f32> = SpatialGrid::interval(1, 7, 1.0f32).unwrap();
        let mut u = g.zero_field();
        u.0[3] = 1.0;
        assert!(g.norm_l1(&u) > 0.0);
    }
}
