//! Uniform periodic grid on the square torus [0, L)^2.

use crate::error::FieldError;

/// An n-by-n uniform grid with spacing h = L/n, identified periodically.
///
/// Nodes sit at (ix*h, iy*h) for 0 <= ix, iy < n and are stored row-major,
/// `index = iy * n + ix`. n is required to be even so that quarter-turn grid
/// rotations and the FFT's Nyquist bookkeeping are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    n: usize,
    length: f64,
}

impl Grid2 {
    pub fn new(n: usize, length: f64) -> Result<Self, FieldError> {
        if n < 8 || n % 2 != 0 {
            return Err(FieldError::BadGridSize(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(FieldError::BadLength(length));
        }
        Ok(Grid2 { n, length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Mesh spacing h = L/n.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Number of nodes n^2.
    #[inline]
    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    /// Quadrature weight per node, h^2.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Flat index of node (ix, iy).
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.n && iy < self.n);
        iy * self.n + ix
    }

    /// Physical coordinates of node (ix, iy).
    #[inline]
    pub fn coords(&self, ix: usize, iy: usize) -> (f64, f64) {
        let h = self.spacing();
        (ix as f64 * h, iy as f64 * h)
    }

    /// Wrap a signed node offset into 0..n.
    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        let n = self.n as isize;
        (((i % n) + n) % n) as usize
    }

    /// Nearest node to a physical point (periodic).
    pub fn nearest_node(&self, x: f64, y: f64) -> (usize, usize) {
        let h = self.spacing();
        let ix = self.wrap((x / h).round() as isize);
        let iy = self.wrap((y / h).round() as isize);
        (ix, iy)
    }

    /// Shortest periodic distance between two physical points.
    pub fn periodic_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let l = self.length;
        let mut dx = (a.0 - b.0).rem_euclid(l);
        let mut dy = (a.1 - b.1).rem_euclid(l);
        if dx > 0.5 * l {
            dx = l - dx;
        }
        if dy > 0.5 * l {
            dy = l - dy;
        }
        (dx * dx + dy * dy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid2::new(7, 1.0).is_err());
        assert!(Grid2::new(6, 1.0).is_err());
        assert!(Grid2::new(9, 1.0).is_err());
        assert!(Grid2::new(8, 0.0).is_err());
        assert!(Grid2::new(8, -1.0).is_err());
        assert!(Grid2::new(8, f64::NAN).is_err());
        assert!(Grid2::new(8, 1.0).is_ok());
    }

    #[test]
    fn wrap_and_distance() {
        let g = Grid2::new(8, 8.0).unwrap();
        assert_eq!(g.wrap(-1), 7);
        assert_eq!(g.wrap(8), 0);
        assert_eq!(g.wrap(17), 1);
        let d = g.periodic_distance((0.5, 0.0), (7.5, 0.0));
        assert!((d - 1.0).abs() < 1e-12, "periodic distance wraps: {d}");
        assert_eq!(g.nearest_node(7.9, 0.1), (0, 0));
    }
}
