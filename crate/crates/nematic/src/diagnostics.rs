//! Energy accounting, concentration detection, and inequality monitors.
//!
//! The solvers don't just advance fields; they account for where the energy
//! goes. This module owns the per-row ledger record (`EnergyReport`), the
//! nodal density fields, the ball-energy scanner that watches for energy
//! concentrating at small scales (the discrete shadow of finite-time
//! singularity formation), and monitors for the interpolation and local
//! energy inequalities that control regularity.

use crate::error::FieldError;
use crate::field::{ScalarField, Vec2Field, Vec3Field};
use crate::frank::{self, FrankConstants, PointState};
use crate::grid::Grid2;
use crate::ops;

/// One ledger row. Columns not meaningful for a given mode (e.g. kinetic
/// energy in a pure director flow) are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub time: f64,
    pub step: usize,
    /// Total monitored energy (elastic + kinetic + penalty, as applicable).
    pub e_total: f64,
    /// Integral of the elastic density W.
    pub w_integral: f64,
    /// Integral of the anisotropic part V (zero in the isotropic case).
    pub v_integral: f64,
    /// Ginzburg-Landau penalty (1/(4 eps^2)) Int (1-|u|^2)^2.
    pub gl_penalty: f64,
    /// Kinetic energy (1/2) Int |v|^2.
    pub kinetic: f64,
    /// Int |grad v|^2 (spectral derivatives).
    pub enstrophy: f64,
    /// Dissipation added by the step(s) since the previous row.
    pub dissipation_increment: f64,
    /// Running time integral of the dissipation rate.
    pub dissipation_integral: f64,
    /// dissipation_integral + e_total - e_total(0); the discrete energy
    /// identity says this is zero up to time-integration error.
    pub residual: f64,
    /// Int |D^2 u|^2 (all iterated second differences).
    pub hessian_sq: f64,
    /// (Int |grad u|^4)^(1/4).
    pub l4_grad_u: f64,
    /// (Int |v|^4)^(1/4).
    pub l4_v: f64,
    pub min_norm: f64,
    pub max_norm: f64,
    /// Largest ball energy found by the detector ladder this row.
    pub max_ball_energy: f64,
    pub max_ball_x: f64,
    pub max_ball_y: f64,
    pub max_ball_r: f64,
    /// Largest renormalization correction |1-|u|| applied this row's steps.
    pub projection_correction: f64,
    /// Coupled-mode bookkeeping: transfer rates between the kinetic and
    /// elastic ledgers (they cancel in the total, and are logged so that the
    /// cancellation is checkable).
    pub cross_momentum: f64,
    pub cross_director: f64,
    /// L2 norm of the spectral divergence of v.
    pub div_v_norm: f64,
    /// Mean removed from the pressure Poisson source (a compatibility
    /// residual; rounding-level for consistent forces).
    pub pressure_gauge: f64,
}

impl EnergyReport {
    pub fn zeroed(time: f64, step: usize) -> Self {
        EnergyReport {
            time,
            step,
            e_total: 0.0,
            w_integral: 0.0,
            v_integral: 0.0,
            gl_penalty: 0.0,
            kinetic: 0.0,
            enstrophy: 0.0,
            dissipation_increment: 0.0,
            dissipation_integral: 0.0,
            residual: 0.0,
            hessian_sq: 0.0,
            l4_grad_u: 0.0,
            l4_v: 0.0,
            min_norm: 0.0,
            max_norm: 0.0,
            max_ball_energy: 0.0,
            max_ball_x: 0.0,
            max_ball_y: 0.0,
            max_ball_r: 0.0,
            projection_correction: 0.0,
            cross_momentum: 0.0,
            cross_director: 0.0,
            div_v_norm: 0.0,
            pressure_gauge: 0.0,
        }
    }
}

/// Nodal density fields of a director state.
pub struct DensityFields {
    /// W(u, grad u).
    pub w: ScalarField,
    /// V part (anisotropic remainder).
    pub v: ScalarField,
    /// Null-Lagrangian density N(grad u) (not part of W).
    pub null: ScalarField,
}

/// Evaluate W, V, N nodewise from a director field.
pub fn density_fields(c: &FrankConstants, u: &Vec3Field) -> DensityFields {
    let grid = u.grid;
    let p = ops::gradient3(u);
    let mut w = ScalarField::zeros(grid);
    let mut v = ScalarField::zeros(grid);
    let mut null = ScalarField::zeros(grid);
    for k in 0..grid.node_count() {
        let s = PointState {
            u: [u.comp[0][k], u.comp[1][k], u.comp[2][k]],
            p: [
                [p.comp[0][0][k], p.comp[0][1][k]],
                [p.comp[1][0][k], p.comp[1][1][k]],
                [p.comp[2][0][k], p.comp[2][1][k]],
            ],
        };
        let d = frank::eval_density(c, &s);
        w.data[k] = d.w;
        v.data[k] = d.v_part;
        null.data[k] = d.null_term;
    }
    DensityFields { w, v, null }
}

/// Integral of the null-Lagrangian density N(grad u) over the torus. For
/// periodic fields this is zero in exact arithmetic -- discretely too, since
/// centered differences summation-by-part exactly -- so the returned value
/// measures pure rounding. The k4 (saddle-splay) energy is k4 times this.
pub fn null_lagrangian_integral(u: &Vec3Field) -> f64 {
    let p = ops::gradient3(u);
    let grid = u.grid;
    let it = (0..grid.node_count()).map(|k| {
        2.0 * (p.comp[0][1][k] * p.comp[1][0][k] - p.comp[0][0][k] * p.comp[1][1][k])
    });
    ops::kahan_sum(it) * grid.cell_area()
}

/// Integral of |D^2 u|^2, all four iterated second differences D_a D_b of
/// every component.
pub fn hessian_sq_integral(u: &Vec3Field) -> f64 {
    let grid = u.grid;
    let mut total = 0.0;
    for i in 0..3 {
        for a in 0..2 {
            let first = ops::deriv(grid, &u.comp[i], a);
            for b in 0..2 {
                let second = ops::deriv(grid, &first, b);
                total += ops::kahan_sum(second.iter().map(|x| x * x));
            }
        }
    }
    total * grid.cell_area()
}

/// (Int |grad u|^4)^(1/4) from the nodal |grad u|^2 density.
pub fn l4_from_sq_density(d2: &ScalarField) -> f64 {
    (ops::kahan_sum(d2.data.iter().map(|x| x * x)) * d2.grid.cell_area()).powf(0.25)
}

/// Nodal |grad u|^2 field.
pub fn grad_sq_field(u: &Vec3Field) -> ScalarField {
    let p = ops::gradient3(u);
    let grid = u.grid;
    let mut out = ScalarField::zeros(grid);
    for k in 0..grid.node_count() {
        let mut s = 0.0;
        for i in 0..3 {
            for a in 0..2 {
                s += p.comp[i][a][k] * p.comp[i][a][k];
            }
        }
        out.data[k] = s;
    }
    out
}

/// Nodal |v|^2 field.
pub fn speed_sq_field(v: &Vec2Field) -> ScalarField {
    let grid = v.grid;
    let mut out = ScalarField::zeros(grid);
    for k in 0..grid.node_count() {
        out.data[k] = v.comp[0][k] * v.comp[0][k] + v.comp[1][k] * v.comp[1][k];
    }
    out
}

// ---------------------------------------------------------------------------
// Ball energies and the concentration detector
// ---------------------------------------------------------------------------

/// Detector settings. The ladder scans balls of radius r0, r0/2, ...,
/// r0/2^(levels-1); a ball holding at least `eps0` of energy raises an
/// event. Candidates closer than r0 (periodically) are merged into one
/// event, keeping the most energetic representative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Energy threshold; default half the sphere-map quantum, 4*pi.
    pub eps0: f64,
    /// Largest scan radius; default L/16.
    pub r0: f64,
    /// Number of halved radii to scan; default 3.
    pub levels: usize,
}

impl DetectorConfig {
    pub fn defaults(grid: Grid2) -> Self {
        DetectorConfig {
            eps0: 4.0 * std::f64::consts::PI,
            r0: grid.length() / 16.0,
            levels: 3,
        }
    }
}

/// Integer offsets covering the closed disk of radius r (in physical units).
fn disk_offsets(grid: Grid2, r: f64) -> Vec<(isize, isize)> {
    let h = grid.spacing();
    let m = (r / h).floor() as isize;
    let r2 = (r / h) * (r / h);
    let mut out = Vec::new();
    for dy in -m..=m {
        for dx in -m..=m {
            if (dx * dx + dy * dy) as f64 <= r2 + 1e-12 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Energy of `dens` in the closed ball of radius r around node (ix, iy).
/// Errors if 2r exceeds half the domain (the ball would wrap onto itself).
pub fn ball_energy(
    dens: &ScalarField,
    center: (usize, usize),
    r: f64,
) -> Result<f64, FieldError> {
    let grid = dens.grid;
    if !(r > 0.0) || 4.0 * r > grid.length() {
        return Err(FieldError::BadLength(r));
    }
    let offsets = disk_offsets(grid, r);
    Ok(ball_energy_with(dens, center, &offsets))
}

fn ball_energy_with(dens: &ScalarField, center: (usize, usize), offsets: &[(isize, isize)]) -> f64 {
    let grid = dens.grid;
    let it = offsets.iter().map(|&(dx, dy)| {
        let ix = grid.wrap(center.0 as isize + dx);
        let iy = grid.wrap(center.1 as isize + dy);
        dens.data[grid.idx(ix, iy)]
    });
    ops::kahan_sum(it) * grid.cell_area()
}

/// Scan stride for a given radius: about four samples per radius.
fn scan_stride(grid: Grid2, r: f64) -> usize {
    let h = grid.spacing();
    ((r / (4.0 * h)).round() as usize).max(1)
}

/// Largest ball energy over all scan centers at radius r. Returns
/// (energy, center_node). Row-major scan; the first maximum is kept, so the
/// result is deterministic and translation-equivariant for whole-stride
/// shifts.
pub fn max_ball_energy(
    dens: &ScalarField,
    r: f64,
) -> Result<(f64, (usize, usize)), FieldError> {
    let grid = dens.grid;
    if !(r > 0.0) || 4.0 * r > grid.length() {
        return Err(FieldError::BadLength(r));
    }
    let offsets = disk_offsets(grid, r);
    let stride = scan_stride(grid, r);
    let mut best = f64::NEG_INFINITY;
    let mut at = (0usize, 0usize);
    let n = grid.n();
    let mut iy = 0;
    while iy < n {
        let mut ix = 0;
        while ix < n {
            let e = ball_energy_with(dens, (ix, iy), &offsets);
            if e > best {
                best = e;
                at = (ix, iy);
            }
            ix += stride;
        }
        iy += stride;
    }
    Ok((best, at))
}

/// An energy-concentration event: a ball that holds at least the threshold
/// energy at one scan time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularEvent {
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub ix: usize,
    pub iy: usize,
    pub r: f64,
    pub ball_energy: f64,
}

/// Run the detector ladder on one density field. Returns merged events,
/// most energetic first.
pub fn detect_concentration(
    dens: &ScalarField,
    cfg: &DetectorConfig,
    time: f64,
) -> Result<Vec<SingularEvent>, FieldError> {
    let grid = dens.grid;
    if !(cfg.eps0 > 0.0) {
        return Err(FieldError::BadLength(cfg.eps0));
    }
    let mut candidates: Vec<SingularEvent> = Vec::new();
    for level in 0..cfg.levels.max(1) {
        let r = cfg.r0 / (1 << level) as f64;
        if 4.0 * r > grid.length() {
            return Err(FieldError::BadLength(r));
        }
        if r < grid.spacing() {
            break; // sub-mesh balls carry no information
        }
        let offsets = disk_offsets(grid, r);
        let stride = scan_stride(grid, r);
        let n = grid.n();
        let mut iy = 0;
        while iy < n {
            let mut ix = 0;
            while ix < n {
                let e = ball_energy_with(dens, (ix, iy), &offsets);
                if e >= cfg.eps0 {
                    let (x, y) = grid.coords(ix, iy);
                    candidates.push(SingularEvent {
                        time,
                        x,
                        y,
                        ix,
                        iy,
                        r,
                        ball_energy: e,
                    });
                }
                ix += stride;
            }
            iy += stride;
        }
    }
    // Greedy merge: keep the most energetic candidate, drop everything
    // within r0 of it, repeat. Ties break on scan order (iy, ix, then r).
    candidates.sort_by(|a, b| {
        b.ball_energy
            .partial_cmp(&a.ball_energy)
            .unwrap()
            .then(a.iy.cmp(&b.iy))
            .then(a.ix.cmp(&b.ix))
            .then(a.r.partial_cmp(&b.r).unwrap())
    });
    let mut events: Vec<SingularEvent> = Vec::new();
    'outer: for c in candidates {
        for e in &events {
            if grid.periodic_distance((c.x, c.y), (e.x, e.y)) < cfg.r0 {
                continue 'outer;
            }
        }
        events.push(c);
    }
    Ok(events)
}

// ---------------------------------------------------------------------------
// Inequality monitors
// ---------------------------------------------------------------------------

/// Measured pieces of the interpolation inequality
///
/// ```text
/// Int f^2  <=  C * sup_x Int_{B_R(x)} f  *  ( Int |grad g|^2 + R^-2 Int f )
/// ```
///
/// applied with f = |grad u|^2 (or |v|^2) and g the underlying field; `ratio`
/// is lhs / (sup_ball * bracket), so the inequality says ratio <= C with C an
/// absolute constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationReport {
    /// Int f^2 (i.e. the L4 norm of the field, to the fourth power).
    pub lhs: f64,
    pub sup_ball: f64,
    pub bracket: f64,
    pub r: f64,
    pub ratio: f64,
}

/// Evaluate the interpolation-inequality ratio for a nodal density f >= 0
/// (pointwise square of the monitored field), given Int |grad g|^2 of the
/// underlying field g.
pub fn interpolation_ratio(
    f: &ScalarField,
    grad_sq_integral: f64,
    r: f64,
) -> Result<InterpolationReport, FieldError> {
    let lhs = ops::kahan_sum(f.data.iter().map(|x| x * x)) * f.grid.cell_area();
    let mass = ops::integrate(f);
    let (sup_ball, _) = max_ball_energy(f, r)?;
    let bracket = grad_sq_integral + mass / (r * r);
    let denom = sup_ball * bracket;
    let ratio = if denom > 0.0 { lhs / denom } else { 0.0 };
    Ok(InterpolationReport { lhs, sup_ball, bracket, r, ratio })
}

/// Scaling factor of the local energy inequality's spill term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalScaling {
    /// t / R^2 (director-only flow).
    Parabolic,
    /// (sqrt(t)/R) * sqrt(1 + t/R^2) (coupled flow).
    CoupledSqrt,
}

impl LocalScaling {
    fn factor(&self, t: f64, r: f64) -> f64 {
        match self {
            LocalScaling::Parabolic => t / (r * r),
            LocalScaling::CoupledSqrt => (t.sqrt() / r) * (1.0 + t / (r * r)).sqrt(),
        }
    }
}

/// Fit of the local energy inequality
///
/// ```text
/// Int_{B_R(x)} e(t)  <=  Int_{B_2R(x)} e(0)  +  C * s(t, R) * E(0)
/// ```
///
/// over all scanned centers, listed radii and provided times; `c_fit` is the
/// smallest C that makes the bound hold on the samples (zero if the local
/// energy never exceeds its doubled-ball initial value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEnergyFit {
    pub c_fit: f64,
    pub samples: usize,
    pub worst_excess: f64,
}

pub fn local_energy_fit(
    initial: &ScalarField,
    e0: f64,
    later: &[(f64, ScalarField)],
    radii: &[f64],
    scaling: LocalScaling,
) -> Result<LocalEnergyFit, FieldError> {
    let grid = initial.grid;
    let mut c_fit = 0.0_f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut samples = 0usize;
    for &r in radii {
        if !(r > 0.0) || 8.0 * r > grid.length() {
            return Err(FieldError::BadLength(r));
        }
        let inner = disk_offsets(grid, r);
        let outer = disk_offsets(grid, 2.0 * r);
        let stride = scan_stride(grid, r);
        for (t, dens) in later {
            if !(*t > 0.0) {
                continue;
            }
            let s = scaling.factor(*t, r) * e0;
            let n = grid.n();
            let mut iy = 0;
            while iy < n {
                let mut ix = 0;
                while ix < n {
                    let lhs = ball_energy_with(dens, (ix, iy), &inner);
                    let rhs0 = ball_energy_with(initial, (ix, iy), &outer);
                    let excess = lhs - rhs0;
                    worst_excess = worst_excess.max(excess);
                    if excess > 0.0 && s > 0.0 {
                        c_fit = c_fit.max(excess / s);
                    }
                    samples += 1;
                    ix += stride;
                }
                iy += stride;
            }
        }
    }
    Ok(LocalEnergyFit { c_fit, samples, worst_excess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{self, DirectorInit};
    use crate::ops::translate_scalar;

    fn bubble_density(n: usize, l: f64, lambda: f64, center: (f64, f64)) -> ScalarField {
        let g = Grid2::new(n, l).unwrap();
        let c = FrankConstants::equal(1.0).unwrap();
        let u = init::director(g, &DirectorInit::Bubble { lambda, center }, 0).unwrap();
        density_fields(&c, &u).w
    }

    #[test]
    fn ball_energy_is_monotone_in_radius() {
        let dens = bubble_density(128, 20.0, 1.0, (10.0, 10.0));
        let g = dens.grid;
        let c = g.nearest_node(10.0, 10.0);
        let mut prev = 0.0;
        for r in [0.5, 1.0, 2.0, 4.0] {
            let e = ball_energy(&dens, c, r).unwrap();
            assert!(e >= prev, "ball energy grows with radius");
            prev = e;
        }
    }

    #[test]
    fn ball_energy_rejects_oversized_radius() {
        let dens = bubble_density(64, 20.0, 1.0, (10.0, 10.0));
        assert!(ball_energy(&dens, (0, 0), 6.0).is_err(), "4r > L must be rejected");
    }

    #[test]
    fn detector_fires_once_on_a_narrow_bubble() {
        let g = Grid2::new(128, 20.0).unwrap();
        let lambda = 4.0 * g.spacing();
        let dens = bubble_density(128, 20.0, lambda, (10.0, 10.0));
        let cfg = DetectorConfig::defaults(g);
        let events = detect_concentration(&dens, &cfg, 0.0).unwrap();
        assert_eq!(events.len(), 1, "one merged event, got {events:?}");
        let e = events[0];
        let d = g.periodic_distance((e.x, e.y), (10.0, 10.0));
        assert!(d <= cfg.r0, "event centered at the bubble: off by {d}");
        assert!(e.ball_energy >= cfg.eps0);
    }

    #[test]
    fn detector_stays_quiet_on_smooth_data() {
        let g = Grid2::new(128, 20.0).unwrap();
        let cfg = DetectorConfig::defaults(g);
        // Wide bubble: same topology and total energy, no concentration.
        let dens = bubble_density(128, 20.0, 4.0, (10.0, 10.0));
        let events = detect_concentration(&dens, &cfg, 0.0).unwrap();
        assert!(events.is_empty(), "wide bubble must not fire: {events:?}");
        // Constant field: zero energy everywhere.
        let flat = ScalarField::zeros(g);
        assert!(detect_concentration(&flat, &cfg, 0.0).unwrap().is_empty());
    }

    #[test]
    fn detector_is_translation_equivariant() {
        let g = Grid2::new(128, 20.0).unwrap();
        let lambda = 4.0 * g.spacing();
        let dens = bubble_density(128, 20.0, lambda, (10.0, 10.0));
        let cfg = DetectorConfig::defaults(g);
        let base = detect_concentration(&dens, &cfg, 0.0).unwrap();
        // Shift by a multiple of every scan stride (strides divide 8 here).
        let (sx, sy) = (24isize, -16isize);
        let shifted = translate_scalar(&dens, sx, sy);
        let moved = detect_concentration(&shifted, &cfg, 0.0).unwrap();
        assert_eq!(base.len(), moved.len());
        for (a, b) in base.iter().zip(&moved) {
            let want = (
                g.wrap(a.ix as isize + sx),
                g.wrap(a.iy as isize + sy),
            );
            assert_eq!((b.ix, b.iy), want, "event moved with the field");
            assert!((a.ball_energy - b.ball_energy).abs() <= 1e-12 * a.ball_energy.abs());
        }
    }

    #[test]
    fn null_lagrangian_vanishes_for_periodic_fields() {
        let g = Grid2::new(64, 20.0).unwrap();
        let u = init::director(
            g,
            &DirectorInit::BubblePerturbed {
                lambda: 2.0,
                center: (10.0, 10.0),
                amplitude: 0.3,
                modes: 3,
            },
            5,
        )
        .unwrap();
        let n = null_lagrangian_integral(&u);
        let scale = ops::integrate(&grad_sq_field(&u)).max(1.0);
        assert!(
            n.abs() <= 1e-12 * scale,
            "null-Lagrangian integral is rounding-level: {n:.3e} vs scale {scale:.3}"
        );
    }

    #[test]
    fn interpolation_ratio_is_order_one_on_textures() {
        let g = Grid2::new(128, 20.0).unwrap();
        let c = FrankConstants::equal(1.0).unwrap();
        for lambda in [1.0, 2.0, 4.0] {
            let u = init::director(g, &DirectorInit::Bubble { lambda, center: (10.0, 10.0) }, 0)
                .unwrap();
            let f = grad_sq_field(&u);
            let grad_sq = hessian_sq_integral(&u);
            let rep = interpolation_ratio(&f, grad_sq, g.length() / 16.0).unwrap();
            assert!(
                rep.ratio.is_finite() && rep.ratio > 0.0 && rep.ratio < 20.0,
                "interpolation ratio stays order one: {rep:?}"
            );
            let _ = density_fields(&c, &u); // exercise the density path too
        }
    }
}
