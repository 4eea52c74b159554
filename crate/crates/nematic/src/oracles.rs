//! Independent reference solutions and densities used to validate the
//! solvers. Everything here is deliberately written against the *formulas*
//! (classical closed-form solutions, the isotropic reduction of the flow)
//! rather than against the production code paths, so agreement between the
//! two is evidence, not tautology.

use crate::field::{ScalarField, Vec2Field, Vec3Field};
use crate::grid::Grid2;
use crate::ops;

/// Map energy of a degree-one sphere bubble, integral of 8 lambda^2 /
/// (lambda^2 + r^2)^2 over the plane.
pub const SPHERE_BUBBLE_ENERGY: f64 = 8.0 * std::f64::consts::PI;

/// Dirichlet density |grad u|^2 of the exact (uncut) inverse stereographic
/// bubble of scale lambda, periodized over the torus by summing lattice
/// images in a (2*images+1)^2 block. The infinite sum integrates to exactly
/// 8*pi; truncation leaves a tail of order 8*pi / (images * L / lambda)^2.
pub fn bubble_density_periodized(
    grid: Grid2,
    lambda: f64,
    center: (f64, f64),
    images: usize,
) -> ScalarField {
    let l = grid.length();
    let m = images as isize;
    ScalarField::from_fn(grid, |x, y| {
        let mut s = 0.0;
        for bx in -m..=m {
            for by in -m..=m {
                let dx = x - center.0 + bx as f64 * l;
                let dy = y - center.1 + by as f64 * l;
                let r2 = dx * dx + dy * dy;
                let d = lambda * lambda + r2;
                s += 8.0 * lambda * lambda / (d * d);
            }
        }
        s
    })
}

/// The exact (uncut) bubble director on the grid; only meaningful near the
/// center (it does not match the periodic background at the seam).
pub fn bubble_exact_director(grid: Grid2, lambda: f64, center: (f64, f64)) -> Vec3Field {
    let l = grid.length();
    Vec3Field::from_fn(grid, |x, y| {
        let mut dx = (x - center.0).rem_euclid(l);
        let mut dy = (y - center.1).rem_euclid(l);
        if dx >= 0.5 * l {
            dx -= l;
        }
        if dy >= 0.5 * l {
            dy -= l;
        }
        let r = dx.hypot(dy);
        let theta = 2.0 * lambda.atan2(r);
        let phi = dy.atan2(dx);
        let st = theta.sin();
        [st * phi.cos(), st * phi.sin(), theta.cos()]
    })
}

/// Taylor-Green vortex at time t for viscosity nu on a torus of side L:
/// v = A e^{-2 nu kappa^2 t} (sin kx cos ky, -cos kx sin ky), kappa = 2pi/L.
pub fn taylor_green_velocity(grid: Grid2, amplitude: f64, nu: f64, t: f64) -> Vec2Field {
    let k = 2.0 * std::f64::consts::PI / grid.length();
    let a = amplitude * (-2.0 * nu * k * k * t).exp();
    Vec2Field::from_fn(grid, |x, y| {
        [a * (k * x).sin() * (k * y).cos(), -a * (k * x).cos() * (k * y).sin()]
    })
}

/// The matching zero-mean pressure
/// p = (A^2/4) e^{-4 nu kappa^2 t} (cos 2kx + cos 2ky).
pub fn taylor_green_pressure(grid: Grid2, amplitude: f64, nu: f64, t: f64) -> ScalarField {
    let k = 2.0 * std::f64::consts::PI / grid.length();
    let a2 = amplitude * amplitude * (-4.0 * nu * k * k * t).exp() / 4.0;
    ScalarField::from_fn(grid, |x, y| a2 * ((2.0 * k * x).cos() + (2.0 * k * y).cos()))
}

/// Velocity amplitude decay factor e^{-2 nu (2pi/L)^2 t}.
pub fn taylor_green_decay(length: f64, nu: f64, t: f64) -> f64 {
    let k = 2.0 * std::f64::consts::PI / length;
    (-2.0 * nu * k * k * t).exp()
}

/// One classical RK4 step of the isotropic (one-constant) director flow
///
/// ```text
/// u_t = 2a (Lap u + |grad u|^2 u),
/// ```
///
/// the harmonic-map heat flow scaled by 2a, with nodewise tangential
/// projection of each stage and renormalization at the end. This is a
/// standalone implementation from the textbook formula: it never touches the
/// density machinery in `frank` or the flux assembly in `flow`.
pub fn harmonic_map_step(u: &Vec3Field, a: f64, dt: f64) -> Vec3Field {
    let rhs = |w: &Vec3Field| -> Vec3Field {
        let lap = ops::laplacian3(w);
        let grad = ops::gradient3(w);
        let mut out = Vec3Field::zeros(w.grid);
        for k in 0..w.grid.node_count() {
            let mut g2 = 0.0;
            for i in 0..3 {
                for al in 0..2 {
                    g2 += grad.comp[i][al][k] * grad.comp[i][al][k];
                }
            }
            let wv = [w.comp[0][k], w.comp[1][k], w.comp[2][k]];
            let mut r = [0.0; 3];
            for i in 0..3 {
                r[i] = 2.0 * a * (lap.comp[i][k] + g2 * wv[i]);
            }
            // Tangential part only (identical to the full value when |w|=1
            // exactly, because Pi(|grad w|^2 w) = 0; kept for parity with the
            // production stepper's stage projection).
            let dot = wv[0] * r[0] + wv[1] * r[1] + wv[2] * r[2];
            let n2 = wv[0] * wv[0] + wv[1] * wv[1] + wv[2] * wv[2];
            for i in 0..3 {
                out.comp[i][k] = r[i] - dot * wv[i] / n2;
            }
        }
        out
    };
    let stage = |base: &Vec3Field, scale: f64, k: &Vec3Field| -> Vec3Field {
        let mut s = base.clone();
        s.axpy(scale, k).unwrap();
        s
    };
    let k1 = rhs(u);
    let k2 = rhs(&stage(u, 0.5 * dt, &k1));
    let k3 = rhs(&stage(u, 0.5 * dt, &k2));
    let k4 = rhs(&stage(u, dt, &k3));
    let mut out = u.clone();
    out.axpy(dt / 6.0, &k1).unwrap();
    out.axpy(dt / 3.0, &k2).unwrap();
    out.axpy(dt / 3.0, &k3).unwrap();
    out.axpy(dt / 6.0, &k4).unwrap();
    out.renormalize(1e-6).expect("oracle step should not collapse norms");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Spectral;

    #[test]
    fn periodized_bubble_integrates_to_sphere_energy() {
        // Frozen expectation: with 5x5 images, lambda = 1, L = 20, n = 256
        // the quadrature lands within 0.1% of 8*pi (tail ~ 8*pi/2500 plus
        // spectrally small quadrature error).
        let g = Grid2::new(256, 20.0).unwrap();
        let dens = bubble_density_periodized(g, 1.0, (10.0, 10.0), 2);
        let e = ops::integrate(&dens);
        let rel = (e - SPHERE_BUBBLE_ENERGY).abs() / SPHERE_BUBBLE_ENERGY;
        assert!(rel <= 1.0e-3, "periodized bubble energy {e:.6} vs 8pi, rel {rel:.2e}");
    }

    #[test]
    fn taylor_green_satisfies_stokes_balance() {
        // The nonlinear term is a pure gradient; check that the Leray
        // projection of (v.grad)v vanishes, i.e. the closed form is a true
        // Navier-Stokes solution on the discrete (spectral) side as well.
        let g = Grid2::new(64, 2.0 * std::f64::consts::PI).unwrap();
        let sp = Spectral::new(g);
        let v = taylor_green_velocity(g, 1.3, 0.05, 0.0);
        let gx = [
            ScalarField { grid: g, data: v.comp[0].clone() },
            ScalarField { grid: g, data: v.comp[1].clone() },
        ];
        let mut adv = Vec2Field::zeros(g);
        for i in 0..2 {
            let dx = sp.deriv_x(&gx[i]);
            let dy = sp.deriv_y(&gx[i]);
            for k in 0..g.node_count() {
                adv.comp[i][k] = v.comp[0][k] * dx.data[k] + v.comp[1][k] * dy.data[k];
            }
        }
        let proj = sp.leray(&adv);
        let mut m = 0.0_f64;
        for i in 0..2 {
            for k in 0..g.node_count() {
                m = m.max(proj.comp[i][k].abs());
            }
        }
        assert!(m <= 1e-11, "Taylor-Green advection is a gradient: |P adv| = {m:.3e}");
    }

    #[test]
    fn taylor_green_pressure_balances_advection() {
        // grad p = -(v.grad)v pointwise for the closed form.
        let g = Grid2::new(64, 2.0 * std::f64::consts::PI).unwrap();
        let sp = Spectral::new(g);
        let v = taylor_green_velocity(g, 0.9, 0.05, 0.0);
        let p = taylor_green_pressure(g, 0.9, 0.05, 0.0);
        let px = sp.deriv_x(&p);
        let py = sp.deriv_y(&p);
        let vx = ScalarField { grid: g, data: v.comp[0].clone() };
        let vy = ScalarField { grid: g, data: v.comp[1].clone() };
        let dxx = sp.deriv_x(&vx);
        let dxy = sp.deriv_y(&vx);
        let dyx = sp.deriv_x(&vy);
        let dyy = sp.deriv_y(&vy);
        let mut worst = 0.0_f64;
        for k in 0..g.node_count() {
            let ax = v.comp[0][k] * dxx.data[k] + v.comp[1][k] * dxy.data[k];
            let ay = v.comp[0][k] * dyx.data[k] + v.comp[1][k] * dyy.data[k];
            worst = worst.max((px.data[k] + ax).abs()).max((py.data[k] + ay).abs());
        }
        assert!(worst <= 1e-11, "pressure gradient balances advection: {worst:.3e}");
    }
}
