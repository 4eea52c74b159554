//! Field containers: scalar, 2-vector, 3-vector, and 3x2-matrix valued
//! functions sampled on a periodic grid.
//!
//! Storage is planar (one contiguous `Vec<f64>` per component) in the grid's
//! row-major node order, which keeps the finite-difference kernels simple and
//! the snapshot format trivially defined.

use crate::error::FieldError;
use crate::grid::Grid2;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vec2Field {
    pub grid: Grid2,
    /// comp[alpha] is the alpha-th Cartesian component.
    pub comp: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vec3Field {
    pub grid: Grid2,
    pub comp: [Vec<f64>; 3],
}

/// Gradient-of-3-vector values: comp[i][alpha] holds d u^i / d x_alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat32Field {
    pub grid: Grid2,
    pub comp: [[Vec<f64>; 2]; 3],
}

impl ScalarField {
    pub fn zeros(grid: Grid2) -> Self {
        ScalarField { grid, data: vec![0.0; grid.node_count()] }
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut data = Vec::with_capacity(grid.node_count());
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = grid.coords(ix, iy);
                data.push(f(x, y));
            }
        }
        ScalarField { grid, data }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.data[self.grid.idx(ix, iy)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

impl Vec2Field {
    pub fn zeros(grid: Grid2) -> Self {
        let z = vec![0.0; grid.node_count()];
        Vec2Field { grid, comp: [z.clone(), z] }
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut(f64, f64) -> [f64; 2]) -> Self {
        let n = grid.n();
        let mut out = Vec2Field::zeros(grid);
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = grid.coords(ix, iy);
                let v = f(x, y);
                let k = grid.idx(ix, iy);
                out.comp[0][k] = v[0];
                out.comp[1][k] = v[1];
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> [f64; 2] {
        let k = self.grid.idx(ix, iy);
        [self.comp[0][k], self.comp[1][k]]
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for k in 0..self.grid.node_count() {
            let s = self.comp[0][k].hypot(self.comp[1][k]);
            m = m.max(s);
        }
        m
    }
}

impl Vec3Field {
    pub fn zeros(grid: Grid2) -> Self {
        let z = vec![0.0; grid.node_count()];
        Vec3Field { grid, comp: [z.clone(), z.clone(), z] }
    }

    pub fn from_fn(grid: Grid2, mut f: impl FnMut(f64, f64) -> [f64; 3]) -> Self {
        let n = grid.n();
        let mut out = Vec3Field::zeros(grid);
        for iy in 0..n {
            for ix in 0..n {
                let (x, y) = grid.coords(ix, iy);
                let v = f(x, y);
                let k = grid.idx(ix, iy);
                for i in 0..3 {
                    out.comp[i][k] = v[i];
                }
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> [f64; 3] {
        let k = self.grid.idx(ix, iy);
        [self.comp[0][k], self.comp[1][k], self.comp[2][k]]
    }

    /// Pointwise Euclidean norms' extrema, (min, max).
    pub fn norm_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0_f64;
        for k in 0..self.grid.node_count() {
            let s = (self.comp[0][k] * self.comp[0][k]
                + self.comp[1][k] * self.comp[1][k]
                + self.comp[2][k] * self.comp[2][k])
                .sqrt();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }

    /// Rescale every nodal value to unit length. Returns the largest
    /// correction |1 - |u|| applied. Errors if any node is shorter than
    /// `floor`, since normalizing a near-zero vector is meaningless.
    pub fn renormalize(&mut self, floor: f64) -> Result<f64, FieldError> {
        let mut worst = 0.0_f64;
        for k in 0..self.grid.node_count() {
            let s = (self.comp[0][k] * self.comp[0][k]
                + self.comp[1][k] * self.comp[1][k]
                + self.comp[2][k] * self.comp[2][k])
                .sqrt();
            if s < floor {
                // The caller turns this into a norm-collapse abort with
                // node coordinates; here we only signal the magnitude.
                return Err(FieldError::BadLength(s));
            }
            worst = worst.max((1.0 - s).abs());
            let inv = 1.0 / s;
            self.comp[0][k] *= inv;
            self.comp[1][k] *= inv;
            self.comp[2][k] *= inv;
        }
        Ok(worst)
    }

    /// self += scale * other (same grid required).
    pub fn axpy(&mut self, scale: f64, other: &Vec3Field) -> Result<(), FieldError> {
        if self.grid.n() != other.grid.n() {
            return Err(FieldError::GridMismatch(self.grid.n(), other.grid.n()));
        }
        for i in 0..3 {
            for (a, b) in self.comp[i].iter_mut().zip(other.comp[i].iter()) {
                *a += scale * b;
            }
        }
        Ok(())
    }
}

impl Mat32Field {
    pub fn zeros(grid: Grid2) -> Self {
        let z = vec![0.0; grid.node_count()];
        Mat32Field {
            grid,
            comp: [
                [z.clone(), z.clone()],
                [z.clone(), z.clone()],
                [z.clone(), z],
            ],
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> [[f64; 2]; 3] {
        let k = self.grid.idx(ix, iy);
        [
            [self.comp[0][0][k], self.comp[0][1][k]],
            [self.comp[1][0][k], self.comp[1][1][k]],
            [self.comp[2][0][k], self.comp[2][1][k]],
        ]
    }
}

impl Vec2Field {
    /// self += scale * other (same grid required).
    pub fn axpy(&mut self, scale: f64, other: &Vec2Field) -> Result<(), FieldError> {
        if self.grid.n() != other.grid.n() {
            return Err(FieldError::GridMismatch(self.grid.n(), other.grid.n()));
        }
        for i in 0..2 {
            for (a, b) in self.comp[i].iter_mut().zip(other.comp[i].iter()) {
                *a += scale * b;
            }
        }
        Ok(())
    }
}
