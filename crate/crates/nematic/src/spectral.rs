//! Fourier-side operators on the periodic grid: spectral derivatives,
//! Poisson inversion, and the Leray (divergence-free) projection.
//!
//! The velocity equation uses these for its constant-coefficient pieces
//! (viscosity, the divergence of the momentum flux, pressure). On a periodic
//! grid they are exact on band-limited fields, which is what lets the
//! Taylor-Green vortex be reproduced to time-integration accuracy and the
//! discrete divergence stay at rounding level.
//!
//! Convention for first derivatives: the multiplier is i*k with the Nyquist
//! column zeroed (the odd-derivative symbol has no consistent sign there).
//! The Leray projection uses the same zeroed wavenumbers, so "divergence" and
//! "projection" agree exactly: div_s(P v) = 0 to rounding. The Laplacian uses
//! the full symbol -|k|^2 including Nyquist.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::field::{ScalarField, Vec2Field};
use crate::grid::Grid2;
use crate::ops;

type C64 = Complex<f64>;

pub struct Spectral {
    grid: Grid2,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// k_deriv[j]: first-derivative wavenumber for index j (Nyquist zeroed).
    k_deriv: Vec<f64>,
    /// k_full[j]: wavenumber for the Laplacian symbol (Nyquist = +pi*n/L).
    k_full: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: Grid2) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let base = 2.0 * std::f64::consts::PI / grid.length();
        let mut k_deriv = vec![0.0; n];
        let mut k_full = vec![0.0; n];
        for j in 0..n {
            let m = if j <= n / 2 { j as isize } else { j as isize - n as isize };
            k_full[j] = base * m as f64;
            k_deriv[j] = if j == n / 2 { 0.0 } else { base * m as f64 };
        }
        Spectral { grid, fwd, inv, k_deriv, k_full }
    }

    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    /// Forward 2D FFT of a real nodal array (unnormalized).
    fn fft2(&self, data: &[f64]) -> Vec<C64> {
        let n = self.grid.n();
        let mut buf: Vec<C64> = data.iter().map(|&x| C64::new(x, 0.0)).collect();
        // Rows are contiguous; rustfft processes the buffer chunk by chunk.
        self.fwd.process(&mut buf);
        let mut t = transpose(&buf, n);
        self.fwd.process(&mut t);
        t // stays transposed; inverse undoes it
    }

    /// Inverse of `fft2` back to a real array (normalized by n^2).
    fn ifft2(&self, mut spec: Vec<C64>) -> Vec<f64> {
        let n = self.grid.n();
        self.inv.process(&mut spec);
        let mut t = transpose(&spec, n);
        self.inv.process(&mut t);
        let norm = 1.0 / (n * n) as f64;
        t.iter().map(|z| z.re * norm).collect()
    }

    /// Apply a Fourier multiplier. The closure receives (k_x, k_y) with the
    /// first-derivative convention and must return the complex factor.
    fn apply_multiplier(&self, data: &[f64], f: impl Fn(f64, f64) -> C64) -> Vec<f64> {
        let n = self.grid.n();
        let mut spec = self.fft2(data);
        // spec is transposed: index = ix * n + iy after the two passes.
        for jx in 0..n {
            for jy in 0..n {
                let m = f(self.k_deriv[jx], self.k_deriv[jy]);
                spec[jx * n + jy] *= m;
            }
        }
        self.ifft2(spec)
    }

    /// Spectral d/dx.
    pub fn deriv_x(&self, f: &ScalarField) -> ScalarField {
        let data = self.apply_multiplier(&f.data, |kx, _| C64::new(0.0, kx));
        ScalarField { grid: self.grid, data }
    }

    /// Spectral d/dy.
    pub fn deriv_y(&self, f: &ScalarField) -> ScalarField {
        let data = self.apply_multiplier(&f.data, |_, ky| C64::new(0.0, ky));
        ScalarField { grid: self.grid, data }
    }

    /// Spectral Laplacian (full -|k|^2 symbol).
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let n = self.grid.n();
        let mut spec = self.fft2(&f.data);
        for jx in 0..n {
            for jy in 0..n {
                let k2 = self.k_full[jx] * self.k_full[jx] + self.k_full[jy] * self.k_full[jy];
                spec[jx * n + jy] *= -k2;
            }
        }
        ScalarField { grid: self.grid, data: self.ifft2(spec) }
    }

    /// Componentwise spectral Laplacian of a velocity field.
    pub fn laplacian_vec2(&self, v: &Vec2Field) -> Vec2Field {
        let mut out = Vec2Field::zeros(self.grid);
        for i in 0..2 {
            let f = ScalarField { grid: self.grid, data: v.comp[i].clone() };
            out.comp[i] = self.laplacian(&f).data;
        }
        out
    }

    /// Solve Lap p = f with zero-mean gauge. Returns (p, removed_mean) where
    /// removed_mean is the mean of f projected out before inversion (a
    /// compatibility residual; zero for any exact divergence).
    pub fn poisson(&self, f: &ScalarField) -> (ScalarField, f64) {
        let n = self.grid.n();
        let mut spec = self.fft2(&f.data);
        let mean = spec[0].re / (n * n) as f64;
        spec[0] = C64::new(0.0, 0.0);
        for jx in 0..n {
            for jy in 0..n {
                if jx == 0 && jy == 0 {
                    continue;
                }
                let k2 = self.k_full[jx] * self.k_full[jx] + self.k_full[jy] * self.k_full[jy];
                spec[jx * n + jy] /= -k2;
            }
        }
        (ScalarField { grid: self.grid, data: self.ifft2(spec) }, mean)
    }

    /// Spectral divergence of a velocity field (first-derivative convention).
    pub fn divergence(&self, v: &Vec2Field) -> ScalarField {
        let n = self.grid.n();
        let mut sx = self.fft2(&v.comp[0]);
        let sy = self.fft2(&v.comp[1]);
        for jx in 0..n {
            for jy in 0..n {
                let k = jx * n + jy;
                let d = C64::new(0.0, self.k_deriv[jx]) * sx[k]
                    + C64::new(0.0, self.k_deriv[jy]) * sy[k];
                sx[k] = d;
            }
        }
        ScalarField { grid: self.grid, data: self.ifft2(sx) }
    }

    /// L2 norm of the spectral divergence.
    pub fn divergence_norm(&self, v: &Vec2Field) -> f64 {
        ops::l2_norm(&self.divergence(v))
    }

    /// Leray projection onto (spectrally) divergence-free fields:
    /// v_hat -> v_hat - k (k . v_hat)/|k|^2, with the same Nyquist-zeroed k
    /// as `divergence`, so div(P v) vanishes identically. The mean mode is
    /// untouched (a uniform drift is divergence-free).
    pub fn leray(&self, v: &Vec2Field) -> Vec2Field {
        let n = self.grid.n();
        let mut sx = self.fft2(&v.comp[0]);
        let mut sy = self.fft2(&v.comp[1]);
        for jx in 0..n {
            for jy in 0..n {
                let kx = self.k_deriv[jx];
                let ky = self.k_deriv[jy];
                let k2 = kx * kx + ky * ky;
                if k2 == 0.0 {
                    continue;
                }
                let k = jx * n + jy;
                let proj = (sx[k] * kx + sy[k] * ky) / k2;
                sx[k] -= proj * kx;
                sy[k] -= proj * ky;
            }
        }
        Vec2Field { grid: self.grid, comp: [self.ifft2(sx), self.ifft2(sy)] }
    }

    /// Quadrature of |grad v|^2 as the Parseval sum with the full Laplacian
    /// symbol, so that Q(v . Lap_s v) = -(this) holds exactly. This is the
    /// dissipation rate the viscous term produces in the coupled energy
    /// identity.
    pub fn grad_sq_integral_vec2(&self, v: &Vec2Field) -> f64 {
        let n = self.grid.n();
        let norm = self.grid.cell_area() / (n * n) as f64;
        let mut total = 0.0;
        for i in 0..2 {
            let spec = self.fft2(&v.comp[i]);
            let it = (0..n * n).map(|idx| {
                let (jx, jy) = (idx / n, idx % n);
                let k2 = self.k_full[jx] * self.k_full[jx] + self.k_full[jy] * self.k_full[jy];
                k2 * spec[idx].norm_sqr()
            });
            total += ops::kahan_sum(it);
        }
        total * norm
    }

    /// Divergence of the symmetric rank-one tensor v (x) v, taken
    /// spectrally: out_i = D_x(v_i v_1) + D_y(v_i v_2). With `dealias` the
    /// 2/3 rule is applied to the product's spectrum.
    pub fn tensor_divergence_sym(&self, v: &Vec2Field, dealias: bool) -> Vec2Field {
        let n = self.grid.n();
        let m = self.grid.node_count();
        let mut t00 = vec![0.0; m];
        let mut t01 = vec![0.0; m];
        let mut t11 = vec![0.0; m];
        for k in 0..m {
            t00[k] = v.comp[0][k] * v.comp[0][k];
            t01[k] = v.comp[0][k] * v.comp[1][k];
            t11[k] = v.comp[1][k] * v.comp[1][k];
        }
        let s00 = self.fft2(&t00);
        let s01 = self.fft2(&t01);
        let s11 = self.fft2(&t11);
        let cut = (n as f64) / 3.0 * (2.0 * std::f64::consts::PI / self.grid.length());
        let mut fx = vec![C64::new(0.0, 0.0); m];
        let mut fy = vec![C64::new(0.0, 0.0); m];
        for jx in 0..n {
            for jy in 0..n {
                let idx = jx * n + jy;
                let kx = self.k_deriv[jx];
                let ky = self.k_deriv[jy];
                if dealias && (self.k_full[jx].abs() > cut || self.k_full[jy].abs() > cut) {
                    continue;
                }
                let ikx = C64::new(0.0, kx);
                let iky = C64::new(0.0, ky);
                fx[idx] = ikx * s00[idx] + iky * s01[idx];
                fy[idx] = ikx * s01[idx] + iky * s11[idx];
            }
        }
        Vec2Field { grid: self.grid, comp: [self.ifft2(fx), self.ifft2(fy)] }
    }
}

fn transpose(src: &[C64], n: usize) -> Vec<C64> {
    let mut dst = vec![C64::new(0.0, 0.0); src.len()];
    for r in 0..n {
        for c in 0..n {
            dst[c * n + r] = src[r * n + c];
        }
    }
    dst
}
