//! Initial data constructors: director textures and velocity fields.

use crate::error::ConfigError;
use crate::field::{Vec2Field, Vec3Field};
use crate::grid::Grid2;
use crate::rng::CounterRng;

/// Director initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectorInit {
    /// Uniform field pointing along the (normalized) vector b.
    Constant { b: [f64; 3] },
    /// Degree-one "bubble": the inverse stereographic sphere map of scale
    /// `lambda`, smoothly cut off to the constant background e3 outside
    /// radius L/4 around `center`. Small lambda concentrates the full 8*pi
    /// of map energy near the center; lambda comparable to L/8 gives a wide,
    /// smooth texture with the same topology.
    Bubble { lambda: f64, center: (f64, f64) },
    /// Constant background e3 perturbed by a random band-limited field of
    /// the given amplitude, then renormalized. `modes` bounds the wavenumber
    /// band (in units of 2*pi/L).
    RandomSmooth { amplitude: f64, modes: usize },
    /// Bubble plus a random band-limited tangential perturbation.
    BubblePerturbed { lambda: f64, center: (f64, f64), amplitude: f64, modes: usize },
}

/// Velocity initial data (always spectrally divergence-free).
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityInit {
    Zero,
    /// The Taylor-Green vortex v = A (sin kx cos ky, -cos kx sin ky) with
    /// k = 2*pi/L; see `oracles` for its exact Navier-Stokes evolution.
    TaylorGreen { amplitude: f64 },
    /// Band-limited random stream function psi; v = (d_y psi, -d_x psi) is
    /// analytically (hence spectrally) divergence-free.
    RandomStream { amplitude: f64, modes: usize },
}

/// Fraction of L at which the bubble starts blending to the background.
pub const BUBBLE_BLEND_START: f64 = 0.10;
/// Fraction of L beyond which the bubble is exactly the background.
pub const BUBBLE_BLEND_END: f64 = 0.25;

/// Quintic smoothstep: C^2 monotone ramp from 1 at s=0 to 0 at s=1.
fn fade(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Polar angle profile of the cut-off bubble at radius r from the center:
/// theta = 2*atan2(lambda, r) (exact inverse stereographic map, theta
/// measured from the +e3 pole) multiplied by the blend factor.
pub fn bubble_theta(lambda: f64, length: f64, r: f64) -> f64 {
    let r1 = BUBBLE_BLEND_START * length;
    let r2 = BUBBLE_BLEND_END * length;
    let theta = 2.0 * lambda.atan2(r);
    theta * fade((r - r1) / (r2 - r1))
}

fn bubble_value(lambda: f64, length: f64, dx: f64, dy: f64) -> [f64; 3] {
    let r = dx.hypot(dy);
    let theta = bubble_theta(lambda, length, r);
    let phi = dy.atan2(dx);
    let st = theta.sin();
    [st * phi.cos(), st * phi.sin(), theta.cos()]
}

/// Signed displacement from `center` to the node, wrapped to [-L/2, L/2).
fn wrapped_delta(grid: Grid2, x: f64, c: f64) -> f64 {
    let l = grid.length();
    let mut d = (x - c).rem_euclid(l);
    if d >= 0.5 * l {
        d -= l;
    }
    d
}

fn normalize3(v: [f64; 3]) -> Result<[f64; 3], ConfigError> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n.is_finite() && n > 1e-12) {
        return Err(ConfigError::Invalid(format!(
            "direction vector must be nonzero and finite, got {v:?}"
        )));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// A random band-limited scalar: a sum of cos(2*pi*(mx*x + my*y)/L + phase)
/// over 1 <= |mx|, |my| <= modes, with SplitMix-derived coefficients.
fn random_trig(grid: Grid2, rng: &CounterRng, modes: usize) -> Vec<f64> {
    let n = grid.n();
    let base = 2.0 * std::f64::consts::PI / grid.length();
    // Draw the mode table first so the field is grid-independent.
    let mut table = Vec::new();
    let mut ctr = 0u64;
    for mx in -(modes as isize)..=(modes as isize) {
        for my in -(modes as isize)..=(modes as isize) {
            if mx == 0 && my == 0 {
                continue;
            }
            let amp = rng.uniform(ctr) * 2.0 - 1.0;
            let phase = rng.uniform(ctr + 1) * 2.0 * std::f64::consts::PI;
            ctr += 2;
            table.push((mx as f64 * base, my as f64 * base, amp, phase));
        }
    }
    let norm = 1.0 / (table.len() as f64).sqrt();
    let mut out = vec![0.0; grid.node_count()];
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = grid.coords(ix, iy);
            let mut s = 0.0;
            for &(kx, ky, amp, phase) in &table {
                s += amp * (kx * x + ky * y + phase).cos();
            }
            out[grid.idx(ix, iy)] = s * norm;
        }
    }
    out
}

/// Build a director field. `seed` feeds only the random variants.
pub fn director(grid: Grid2, spec: &DirectorInit, seed: u64) -> Result<Vec3Field, ConfigError> {
    let check_lambda = |lambda: f64| -> Result<(), ConfigError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ConfigError::BadValue {
                key: "lambda".into(),
                message: format!("bubble scale must be positive, got {lambda}"),
            });
        }
        Ok(())
    };
    match spec {
        DirectorInit::Constant { b } => {
            let b = normalize3(*b)?;
            Ok(Vec3Field::from_fn(grid, |_, _| b))
        }
        DirectorInit::Bubble { lambda, center } => {
            check_lambda(*lambda)?;
            let (cx, cy) = *center;
            Ok(Vec3Field::from_fn(grid, |x, y| {
                let dx = wrapped_delta(grid, x, cx);
                let dy = wrapped_delta(grid, y, cy);
                bubble_value(*lambda, grid.length(), dx, dy)
            }))
        }
        DirectorInit::RandomSmooth { amplitude, modes } => {
            let rng = CounterRng::new(seed);
            let w = [
                random_trig(grid, &rng.child(1), *modes),
                random_trig(grid, &rng.child(2), *modes),
                random_trig(grid, &rng.child(3), *modes),
            ];
            let mut u = Vec3Field::zeros(grid);
            for k in 0..grid.node_count() {
                let v = [
                    amplitude * w[0][k],
                    amplitude * w[1][k],
                    1.0 + amplitude * w[2][k],
                ];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if !(n.is_finite() && n > 1e-6) {
                    return Err(ConfigError::Invalid(
                        "random director perturbation collapsed a node to zero length; \
                         reduce the amplitude"
                            .into(),
                    ));
                }
                for i in 0..3 {
                    u.comp[i][k] = v[i] / n;
                }
            }
            Ok(u)
        }
        DirectorInit::BubblePerturbed { lambda, center, amplitude, modes } => {
            check_lambda(*lambda)?;
            let base = director(
                grid,
                &DirectorInit::Bubble { lambda: *lambda, center: *center },
                seed,
            )?;
            let rng = CounterRng::new(seed);
            let w = [
                random_trig(grid, &rng.child(4), *modes),
                random_trig(grid, &rng.child(5), *modes),
                random_trig(grid, &rng.child(6), *modes),
            ];
            let mut u = base;
            for k in 0..grid.node_count() {
                let mut v = [
                    u.comp[0][k] + amplitude * w[0][k],
                    u.comp[1][k] + amplitude * w[1][k],
                    u.comp[2][k] + amplitude * w[2][k],
                ];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if !(n.is_finite() && n > 1e-6) {
                    return Err(ConfigError::Invalid(
                        "bubble perturbation collapsed a node; reduce the amplitude".into(),
                    ));
                }
                for x in &mut v {
                    *x /= n;
                }
                for i in 0..3 {
                    u.comp[i][k] = v[i];
                }
            }
            Ok(u)
        }
    }
}

/// Build a velocity field. Random data is derived from a stream function,
/// so every variant is divergence-free in the spectral sense.
pub fn velocity(grid: Grid2, spec: &VelocityInit, seed: u64) -> Result<Vec2Field, ConfigError> {
    match spec {
        VelocityInit::Zero => Ok(Vec2Field::zeros(grid)),
        VelocityInit::TaylorGreen { amplitude } => {
            let k = 2.0 * std::f64::consts::PI / grid.length();
            let a = *amplitude;
            Ok(Vec2Field::from_fn(grid, |x, y| {
                [
                    a * (k * x).sin() * (k * y).cos(),
                    -a * (k * x).cos() * (k * y).sin(),
                ]
            }))
        }
        VelocityInit::RandomStream { amplitude, modes } => {
            // v = (d_y psi, -d_x psi) computed analytically mode by mode.
            let rng = CounterRng::new(seed).child(7);
            let base = 2.0 * std::f64::consts::PI / grid.length();
            let mut table = Vec::new();
            let mut ctr = 0u64;
            let m = *modes as isize;
            for mx in -m..=m {
                for my in -m..=m {
                    if mx == 0 && my == 0 {
                        continue;
                    }
                    let amp = rng.uniform(ctr) * 2.0 - 1.0;
                    let phase = rng.uniform(ctr + 1) * 2.0 * std::f64::consts::PI;
                    ctr += 2;
                    table.push((mx as f64 * base, my as f64 * base, amp, phase));
                }
            }
            let norm = *amplitude / (table.len() as f64).sqrt();
            Ok(Vec2Field::from_fn(grid, |x, y| {
                let mut vx = 0.0;
                let mut vy = 0.0;
                for &(kx, ky, amp, phase) in &table {
                    // psi = amp * cos(kx x + ky y + phase);
                    // v = (d_y psi, -d_x psi)
                    let s = amp * (kx * x + ky * y + phase).sin();
                    vx -= ky * s;
                    vy += kx * s;
                }
                [vx * norm, vy * norm]
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Spectral;

    #[test]
    fn bubble_is_unit_length_and_matches_background() {
        let g = Grid2::new(128, 20.0).unwrap();
        let u = director(g, &DirectorInit::Bubble { lambda: 1.0, center: (10.0, 10.0) }, 0)
            .unwrap();
        let (lo, hi) = u.norm_range();
        assert!((lo - 1.0).abs() <= 1e-12 && (hi - 1.0).abs() <= 1e-12);
        // Outside the blend the field is exactly e3: check a corner node.
        let v = u.at(0, 0);
        assert!(v[0] == 0.0 && v[1] == 0.0 && v[2] == 1.0, "background is exactly e3: {v:?}");
        // At the center the map hits the south pole.
        let c = u.at(64, 64);
        assert!((c[2] + 1.0).abs() <= 1e-12, "center is -e3: {c:?}");
    }

    #[test]
    fn random_director_is_unit_and_deterministic() {
        let g = Grid2::new(32, 1.0).unwrap();
        let spec = DirectorInit::RandomSmooth { amplitude: 0.4, modes: 3 };
        let a = director(g, &spec, 11).unwrap();
        let b = director(g, &spec, 11).unwrap();
        let c = director(g, &spec, 12).unwrap();
        assert_eq!(a, b, "same seed, same field");
        assert_ne!(a, c, "different seed, different field");
        let (lo, hi) = a.norm_range();
        assert!((lo - 1.0).abs() <= 1e-12 && (hi - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn random_velocity_is_divergence_free() {
        let g = Grid2::new(64, 2.0).unwrap();
        let sp = Spectral::new(g);
        let v = velocity(g, &VelocityInit::RandomStream { amplitude: 1.0, modes: 3 }, 3).unwrap();
        let d = sp.divergence_norm(&v);
        let scale = v.max_abs().max(1e-30);
        assert!(d <= 1e-10 * scale, "stream-function velocity is solenoidal: {d:.3e}");
    }

    #[test]
    fn taylor_green_is_divergence_free() {
        let g = Grid2::new(64, 2.0 * std::f64::consts::PI).unwrap();
        let sp = Spectral::new(g);
        let v = velocity(g, &VelocityInit::TaylorGreen { amplitude: 1.0 }, 0).unwrap();
        assert!(sp.divergence_norm(&v) <= 1e-12);
    }
}
