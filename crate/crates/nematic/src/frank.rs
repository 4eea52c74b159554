//! Pointwise Oseen-Frank elastic density and its derivatives.
//!
//! For a director u (unit 3-vector) with spatial gradient p (a 3x2 matrix,
//! p[i][a] = d u^i / d x_a, with d/dx_3 = 0 on the planar domain) the stored
//! density is
//!
//! ```text
//! W(u, p) = a |p|^2 + V(u, p),          a = min(k1, k2, k3),
//! V(u, p) = (k1 - a) (div u)^2 + (k2 - a) (u . curl u)^2
//!         + (k3 - a) |u x curl u|^2,
//! ```
//!
//! which equals the classical splay/twist/bend form because, pointwise and
//! for |u| = 1,
//!
//! ```text
//! |p|^2 = (div u)^2 + (u . curl u)^2 + |u x curl u|^2 + N(p),
//! N(p)  = tr((grad u)^2) - (div u)^2,
//! ```
//!
//! and N is a null Lagrangian: its integral over the torus depends only on
//! boundary data, hence vanishes identically here. The saddle-splay constant
//! k4 multiplies N only, so it never enters W, its derivatives, or the
//! dynamics; the crate evaluates the k4 term separately as a structural
//! diagnostic (see `diagnostics::null_lagrangian_integral`). Keeping k4 out
//! of W is also what makes the quadratic form in p uniformly elliptic with
//! the sharp constant 2a.

use crate::error::ConfigError;

/// Elastic constants (splay, twist, bend, saddle-splay).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrankConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl FrankConstants {
    /// k1, k2, k3 must be strictly positive; k4 >= 0 (it only feeds the
    /// null-Lagrangian diagnostic, but a sign error there is still a bug).
    pub fn new(k1: f64, k2: f64, k3: f64, k4: f64) -> Result<Self, ConfigError> {
        for (name, v) in [("k1", k1), ("k2", k2), ("k3", k3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::BadValue {
                    key: name.to_string(),
                    message: format!("must be a strictly positive finite number, got {v}"),
                });
            }
        }
        if !(k4.is_finite() && k4 >= 0.0) {
            return Err(ConfigError::BadValue {
                key: "k4".to_string(),
                message: format!("must be a finite number >= 0, got {k4}"),
            });
        }
        Ok(FrankConstants { k1, k2, k3, k4 })
    }

    /// One-constant (isotropic) case k1 = k2 = k3 = k, k4 = 0.
    pub fn equal(k: f64) -> Result<Self, ConfigError> {
        FrankConstants::new(k, k, k, 0.0)
    }

    /// Ellipticity constant a = min(k1, k2, k3).
    #[inline]
    pub fn a(&self) -> f64 {
        self.k1.min(self.k2).min(self.k3)
    }

    #[inline]
    pub fn max_k(&self) -> f64 {
        self.k1.max(self.k2).max(self.k3)
    }

    /// True when the elastic part is isotropic (k1 = k2 = k3); the dynamics
    /// then reduce to the harmonic-map heat flow scaled by 2a.
    #[inline]
    pub fn is_isotropic(&self) -> bool {
        self.k1 == self.k2 && self.k2 == self.k3
    }
}

/// A director value and its gradient at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub u: [f64; 3],
    /// p[i][a] = d u^i / d x_a (a = 0, 1; d/dx_3 = 0).
    pub p: [[f64; 2]; 3],
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl PointState {
    /// Planar divergence d_1 u^1 + d_2 u^2.
    #[inline]
    pub fn div(&self) -> f64 {
        self.p[0][0] + self.p[1][1]
    }

    /// Full 3D curl under d/dx_3 = 0:
    /// (d_2 u^3, -d_1 u^3, d_1 u^2 - d_2 u^1).
    #[inline]
    pub fn curl(&self) -> [f64; 3] {
        [self.p[2][1], -self.p[2][0], self.p[1][0] - self.p[0][1]]
    }

    /// |p|^2 = sum of squares of all six entries.
    #[inline]
    pub fn grad_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for a in 0..2 {
                s += self.p[i][a] * self.p[i][a];
            }
        }
        s
    }
}

/// The density split into its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParts {
    /// W = a|p|^2 + V, the density the solvers dissipate.
    pub w: f64,
    /// The anisotropic remainder V >= 0.
    pub v_part: f64,
    /// N(p) = tr((grad u)^2) - (div u)^2; reported, never added to W.
    pub null_term: f64,
}

/// Evaluate the density and its pieces at one node.
pub fn eval_density(c: &FrankConstants, s: &PointState) -> DensityParts {
    let a = c.a();
    let div = s.div();
    let curl = s.curl();
    let tw = dot(s.u, curl);
    let bend = cross(s.u, curl);
    let v_part = (c.k1 - a) * div * div
        + (c.k2 - a) * tw * tw
        + (c.k3 - a) * dot(bend, bend);
    let w = a * s.grad_sq() + v_part;
    let null_term = 2.0 * (s.p[0][1] * s.p[1][0] - s.p[0][0] * s.p[1][1]);
    DensityParts { w, v_part, null_term }
}

/// First derivatives of the density at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDerivs {
    /// dW/dp, a 3x2 matrix like p.
    pub w_p: [[f64; 2]; 3],
    /// dV/dp = dW/dp - 2a p (the anisotropic part of the flux).
    pub v_p: [[f64; 2]; 3],
    /// dW/du = dV/du (the a|p|^2 part carries no u-dependence).
    pub w_u: [f64; 3],
}

/// Analytic dW/dp, dV/dp, dW/du.
pub fn eval_derivs(c: &FrankConstants, s: &PointState) -> DensityDerivs {
    let a = c.a();
    let div = s.div();
    let curl = s.curl();
    let tw = dot(s.u, curl);
    let bend = cross(s.u, curl);

    // dV/dcurl = 2(k2-a) tw u + 2(k3-a) (bend x u)
    let bu = cross(bend, s.u);
    let mut g = [0.0; 3];
    for m in 0..3 {
        g[m] = 2.0 * (c.k2 - a) * tw * s.u[m] + 2.0 * (c.k3 - a) * bu[m];
    }

    let mut v_p = [[0.0; 2]; 3];
    let cdiv = 2.0 * (c.k1 - a) * div;
    v_p[0][0] += cdiv;
    v_p[1][1] += cdiv;
    // curl components live at p[2][1] (+), p[2][0] (-), p[1][0] (+), p[0][1] (-)
    v_p[2][1] += g[0];
    v_p[2][0] -= g[1];
    v_p[1][0] += g[2];
    v_p[0][1] -= g[2];

    let mut w_p = [[0.0; 2]; 3];
    for i in 0..3 {
        for al in 0..2 {
            w_p[i][al] = 2.0 * a * s.p[i][al] + v_p[i][al];
        }
    }

    // dV/du = 2(k2-a) tw curl + 2(k3-a) (curl x bend)
    let cb = cross(curl, bend);
    let mut w_u = [0.0; 3];
    for m in 0..3 {
        w_u[m] = 2.0 * (c.k2 - a) * tw * curl[m] + 2.0 * (c.k3 - a) * cb[m];
    }

    DensityDerivs { w_p, v_p, w_u }
}

/// Second-variation quadratic form in the gradient slot:
/// Q(u; xi) = d^2/dt^2 W(u, p + t xi) / 2 evaluated as a form, i.e.
/// Q = 2 W(u, xi) because W is quadratic in p. Legendre-Hadamard
/// ellipticity Q >= 2a |xi|^2 holds with equality in the isotropic case.
pub fn hessian_quadratic(c: &FrankConstants, u: [f64; 3], xi: &[[f64; 2]; 3]) -> f64 {
    let s = PointState { u, p: *xi };
    2.0 * eval_density(c, &s).w
}

/// Elastic stress sigma[a][b] = sum_i p[i][a] * dW/dp[i][b]. Reported by the
/// diagnostics; the coupled solver applies the equivalent Ericksen form of
/// the force (see `leslie`).
pub fn elastic_stress(c: &FrankConstants, s: &PointState) -> [[f64; 2]; 2] {
    let d = eval_derivs(c, s);
    let mut sig = [[0.0; 2]; 2];
    for al in 0..2 {
        for be in 0..2 {
            let mut acc = 0.0;
            for i in 0..3 {
                acc += s.p[i][al] * d.w_p[i][be];
            }
            sig[al][be] = acc;
        }
    }
    sig
}

/// Rotation about the x3 axis by angle phi.
pub fn rot_x3(phi: f64) -> [[f64; 3]; 3] {
    let (s, c) = phi.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Max deviation of R^T R from the identity.
pub fn orthogonality_defect(r: &[[f64; 3]; 3]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += r[k][i] * r[k][j];
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - want).abs());
        }
    }
    worst
}

pub fn rotate_vec3(r: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2];
    }
    out
}

/// Frame rotation of a state: u -> R u together with the induced action on
/// the gradient, p -> R p B^T, where B is the upper-left 2x2 spatial block
/// of R. This is the transformation under which W is exactly invariant for
/// rotations about x3 (the domain's own rotations); it corresponds to
/// rotating the sample and the observer together.
pub fn rotate_state(r: &[[f64; 3]; 3], s: &PointState) -> PointState {
    let u = rotate_vec3(r, s.u);
    // First rotate values: q = R p.
    let mut q = [[0.0; 2]; 3];
    for i in 0..3 {
        for al in 0..2 {
            q[i][al] = r[i][0] * s.p[0][al] + r[i][1] * s.p[1][al] + r[i][2] * s.p[2][al];
        }
    }
    // Then the spatial block: p'[i][a] = sum_b q[i][b] * B[a][b].
    let b = [[r[0][0], r[0][1]], [r[1][0], r[1][1]]];
    let mut p = [[0.0; 2]; 3];
    for i in 0..3 {
        for al in 0..2 {
            p[i][al] = q[i][0] * b[al][0] + q[i][1] * b[al][1];
        }
    }
    PointState { u, p }
}
