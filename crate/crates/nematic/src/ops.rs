//! Centered finite-difference operators and periodic quadrature.
//!
//! All first derivatives are the standard second-order centered stencil
//! (f(x+h) - f(x-h)) / 2h. The Laplacian is the *iterated* centered stencil
//! D_a D_a (a five-point cross of width 2h per direction): pairing it with
//! the centered gradient makes discrete summation by parts exact, i.e.
//! sum f * (D_a D_a g) = -sum (D_a f)(D_a g) on the periodic grid, which is
//! what the energy identities in the solvers rely on.

use crate::field::{Mat32Field, ScalarField, Vec2Field, Vec3Field};
use crate::grid::Grid2;

/// d/dx by centered differences, periodic.
pub fn deriv_x_into(grid: Grid2, src: &[f64], dst: &mut [f64]) {
    let n = grid.n();
    let c = 1.0 / (2.0 * grid.spacing());
    for iy in 0..n {
        let row = iy * n;
        for ix in 0..n {
            let xm = if ix == 0 { n - 1 } else { ix - 1 };
            let xp = if ix + 1 == n { 0 } else { ix + 1 };
            dst[row + ix] = (src[row + xp] - src[row + xm]) * c;
        }
    }
}

/// d/dy by centered differences, periodic.
pub fn deriv_y_into(grid: Grid2, src: &[f64], dst: &mut [f64]) {
    let n = grid.n();
    let c = 1.0 / (2.0 * grid.spacing());
    for iy in 0..n {
        let ym = if iy == 0 { n - 1 } else { iy - 1 };
        let yp = if iy + 1 == n { 0 } else { iy + 1 };
        let (row, rm, rp) = (iy * n, ym * n, yp * n);
        for ix in 0..n {
            dst[row + ix] = (src[rp + ix] - src[rm + ix]) * c;
        }
    }
}

pub fn deriv(grid: Grid2, src: &[f64], axis: usize) -> Vec<f64> {
    let mut dst = vec![0.0; src.len()];
    match axis {
        0 => deriv_x_into(grid, src, &mut dst),
        1 => deriv_y_into(grid, src, &mut dst),
        _ => panic!("axis must be 0 or 1, got {axis}"),
    }
    dst
}

/// Iterated centered Laplacian D_x D_x + D_y D_y (width-2h cross stencil).
pub fn laplacian_into(grid: Grid2, src: &[f64], dst: &mut [f64]) {
    let n = grid.n();
    let h = grid.spacing();
    let c = 1.0 / (4.0 * h * h);
    for iy in 0..n {
        let ym2 = grid.wrap(iy as isize - 2) * n;
        let yp2 = grid.wrap(iy as isize + 2) * n;
        let row = iy * n;
        for ix in 0..n {
            let xm2 = grid.wrap(ix as isize - 2);
            let xp2 = grid.wrap(ix as isize + 2);
            dst[row + ix] = (src[row + xp2] + src[row + xm2] + src[yp2 + ix] + src[ym2 + ix]
                - 4.0 * src[row + ix])
                * c;
        }
    }
}

/// Nodal gradient of a 3-vector field: out[i][alpha] = D_alpha u^i.
pub fn gradient3(u: &Vec3Field) -> Mat32Field {
    let mut out = Mat32Field::zeros(u.grid);
    for i in 0..3 {
        deriv_x_into(u.grid, &u.comp[i], &mut out.comp[i][0]);
        deriv_y_into(u.grid, &u.comp[i], &mut out.comp[i][1]);
    }
    out
}

/// Nodal gradient of a scalar field.
pub fn gradient_scalar(f: &ScalarField) -> Vec2Field {
    let mut out = Vec2Field::zeros(f.grid);
    deriv_x_into(f.grid, &f.data, &mut out.comp[0]);
    deriv_y_into(f.grid, &f.data, &mut out.comp[1]);
    out
}

/// Centered divergence of a 2-vector field.
pub fn divergence2(v: &Vec2Field) -> ScalarField {
    let mut out = ScalarField::zeros(v.grid);
    let mut tmp = vec![0.0; v.grid.node_count()];
    deriv_x_into(v.grid, &v.comp[0], &mut out.data);
    deriv_y_into(v.grid, &v.comp[1], &mut tmp);
    for (a, b) in out.data.iter_mut().zip(tmp.iter()) {
        *a += b;
    }
    out
}

/// Componentwise iterated Laplacian of a 3-vector field.
pub fn laplacian3(u: &Vec3Field) -> Vec3Field {
    let mut out = Vec3Field::zeros(u.grid);
    for i in 0..3 {
        laplacian_into(u.grid, &u.comp[i], &mut out.comp[i]);
    }
    out
}

/// Kahan-compensated sum; the solvers' ledgers must be reproducible at the
/// last bit, so every quadrature in the crate funnels through this.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let y = v - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Trapezoidal (= midpoint, periodic) quadrature of a nodal array: h^2 * sum.
pub fn quad_sum(grid: Grid2, values: &[f64]) -> f64 {
    kahan_sum(values.iter().copied()) * grid.cell_area()
}

/// Integral of a scalar field over the torus.
pub fn integrate(f: &ScalarField) -> f64 {
    quad_sum(f.grid, &f.data)
}

/// Quadrature of the pointwise dot product of two 3-vector fields.
pub fn dot_quad3(a: &Vec3Field, b: &Vec3Field) -> f64 {
    let m = a.grid.node_count();
    let it = (0..m).map(|k| {
        a.comp[0][k] * b.comp[0][k] + a.comp[1][k] * b.comp[1][k] + a.comp[2][k] * b.comp[2][k]
    });
    kahan_sum(it) * a.grid.cell_area()
}

/// Quadrature of |a|^2 for a 3-vector field.
pub fn norm2_quad3(a: &Vec3Field) -> f64 {
    dot_quad3(a, a)
}

/// Quadrature of the pointwise dot product of two 2-vector fields.
pub fn dot_quad2(a: &Vec2Field, b: &Vec2Field) -> f64 {
    let m = a.grid.node_count();
    let it = (0..m).map(|k| a.comp[0][k] * b.comp[0][k] + a.comp[1][k] * b.comp[1][k]);
    kahan_sum(it) * a.grid.cell_area()
}

/// L2 norm sqrt(integral f^2).
pub fn l2_norm(f: &ScalarField) -> f64 {
    let it = f.data.iter().map(|&v| v * v);
    (kahan_sum(it) * f.grid.cell_area()).sqrt()
}

/// Periodic translation by whole nodes: out(ix, iy) = in(ix - sx, iy - sy).
pub fn translate_scalar(f: &ScalarField, sx: isize, sy: isize) -> ScalarField {
    let g = f.grid;
    let n = g.n();
    let mut out = ScalarField::zeros(g);
    for iy in 0..n {
        let jy = g.wrap(iy as isize - sy);
        for ix in 0..n {
            let jx = g.wrap(ix as isize - sx);
            out.data[g.idx(ix, iy)] = f.data[g.idx(jx, jy)];
        }
    }
    out
}

/// Periodic translation of a 3-vector field by whole nodes.
pub fn translate_vec3(u: &Vec3Field, sx: isize, sy: isize) -> Vec3Field {
    let g = u.grid;
    let n = g.n();
    let mut out = Vec3Field::zeros(g);
    for i in 0..3 {
        for iy in 0..n {
            let jy = g.wrap(iy as isize - sy);
            for ix in 0..n {
                let jx = g.wrap(ix as isize - sx);
                out.comp[i][g.idx(ix, iy)] = u.comp[i][g.idx(jx, jy)];
            }
        }
    }
    out
}
