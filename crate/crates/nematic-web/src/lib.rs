//! Browser bindings: a self-contained simulation handle with plain-typed
//! methods (construct, advance, paint into an RGBA buffer), so the page's
//! JavaScript only ever moves bytes to a canvas.  No DOM types cross the
//! boundary, which keeps this crate compilable and testable on the host.

use wasm_bindgen::prelude::*;

use nematic::diagnostics;
use nematic::flow::{self, FlowConfig, FlowMode, FlowState};
use nematic::frank::FrankConstants;
use nematic::init::{self, DirectorInit, VelocityInit};
use nematic::leslie::{self, ElConfig, ElState};
use nematic::ops;
use nematic::Grid2;

enum Sim {
    Flow { cfg: FlowConfig, state: FlowState },
    Coupled { cfg: ElConfig, sp: Box<nematic::spectral::Spectral>, state: ElState },
}

/// One running simulation plus its paint buffer.
#[wasm_bindgen]
pub struct Demo {
    sim: Sim,
    grid: Grid2,
    running: bool,
    steps_taken: u32,
}

#[wasm_bindgen]
impl Demo {
    /// Creates a simulation on an n-by-n grid.  Scenarios:
    ///
    /// - "bubble": a degree-one texture relaxing under the constrained flow
    ///   at unequal elastic constants;
    /// - "random": a band-limited random texture relaxing the same way;
    /// - "coupled": the bubble texture stirred by a decaying vortex in the
    ///   coupled director-fluid system.
    ///
    /// The time step is chosen from the scheme's stability bound.
    #[wasm_bindgen(constructor)]
    pub fn new(n: u32, scenario: &str, seed: u32) -> Demo {
        let n = (n as usize).clamp(32, 256) & !1;
        let length = 2.0 * std::f64::consts::PI;
        let grid = Grid2::new(n, length).expect("even n in [32, 256] is a valid grid");
        let constants = FrankConstants::new(1.5, 0.8, 1.2, 0.0).unwrap();
        let center = (0.5 * length, 0.5 * length);
        let seed = seed as u64;
        let sim = match scenario {
            "bubble" => {
                let u = init::director(
                    grid,
                    &DirectorInit::Bubble { lambda: length / 6.0, center },
                    seed,
                )
                .unwrap();
                Sim::Flow {
                    cfg: FlowConfig::new(grid, constants, FlowMode::Constrained, f64::MAX),
                    state: FlowState::new(u),
                }
            }
            "random" => {
                let u = init::director(
                    grid,
                    &DirectorInit::RandomSmooth { amplitude: 0.9, modes: 4 },
                    seed,
                )
                .unwrap();
                Sim::Flow {
                    cfg: FlowConfig::new(grid, constants, FlowMode::Constrained, f64::MAX),
                    state: FlowState::new(u),
                }
            }
            "coupled" => {
                let u = init::director(
                    grid,
                    &DirectorInit::Bubble { lambda: length / 6.0, center },
                    seed,
                )
                .unwrap();
                let v = init::velocity(grid, &VelocityInit::TaylorGreen { amplitude: 1.0 }, seed)
                    .unwrap();
                let cfg =
                    ElConfig::new(grid, constants, FlowMode::Constrained, 0.05, 1.0, f64::MAX);
                let sp = Box::new(nematic::spectral::Spectral::new(grid));
                Sim::Coupled { cfg, sp, state: ElState::new(u, v) }
            }
            other => panic!("unknown scenario `{other}` (use bubble, random, or coupled)"),
        };
        Demo { sim, grid, running: true, steps_taken: 0 }
    }

    /// Advances the simulation by `count` stable time steps.  Returns false
    /// once the integration has stopped on a numerical abort condition
    /// (the state then freezes at the last valid fields).
    pub fn step(&mut self, count: u32) -> bool {
        if !self.running {
            return false;
        }
        for _ in 0..count {
            let ok = match &mut self.sim {
                Sim::Flow { cfg, state } => flow::step(cfg, state).is_ok(),
                Sim::Coupled { cfg, sp, state } => leslie::step(cfg, sp, state).is_ok(),
            };
            if !ok {
                self.running = false;
                return false;
            }
            self.steps_taken += 1;
        }
        true
    }

    /// Paints the current state into an n*n*4 RGBA buffer (row-major,
    /// opaque).  Modes: "director" (orientation coloring: hue from the
    /// in-plane angle, lightness from the out-of-plane component),
    /// "energy" (elastic density heat map), "vorticity" (coupled runs:
    /// diverging map of curl v; falls back to the energy map otherwise).
    pub fn render_rgba(&self, mode: &str) -> Vec<u8> {
        match mode {
            "director" => self.paint_director(),
            "energy" => self.paint_energy(),
            "vorticity" => match &self.sim {
                Sim::Coupled { state, .. } => paint_vorticity(&state.v),
                Sim::Flow { .. } => self.paint_energy(),
            },
            other => panic!("unknown render mode `{other}` (use director, energy, or vorticity)"),
        }
    }

    /// Side length of the simulation (and paint buffer) in nodes.
    pub fn size(&self) -> u32 {
        self.grid.n() as u32
    }

    /// Current simulation time.
    pub fn time(&self) -> f64 {
        match &self.sim {
            Sim::Flow { state, .. } => state.t,
            Sim::Coupled { state, .. } => state.t,
        }
    }

    /// Total monitored energy (elastic, plus kinetic when coupled).
    pub fn energy(&self) -> f64 {
        match &self.sim {
            Sim::Flow { cfg, state } => {
                let dens = diagnostics::density_fields(&cfg.constants, &state.u);
                ops::integrate(&dens.w)
            }
            Sim::Coupled { cfg, state, .. } => {
                let dens = diagnostics::density_fields(&cfg.constants, &state.u);
                let w = ops::integrate(&dens.w);
                let kinetic = 0.5 * ops::integrate(&diagnostics::speed_sq_field(&state.v));
                cfg.lambda * w + kinetic
            }
        }
    }

    /// Steps taken since construction.
    pub fn steps(&self) -> u32 {
        self.steps_taken
    }

    fn director_field(&self) -> &nematic::Vec3Field {
        match &self.sim {
            Sim::Flow { state, .. } => &state.u,
            Sim::Coupled { state, .. } => &state.u,
        }
    }

    fn paint_director(&self) -> Vec<u8> {
        let u = self.director_field();
        let n = self.grid.node_count();
        let mut out = vec![0u8; n * 4];
        for k in 0..n {
            let (ux, uy, uz) = (u.comp[0][k], u.comp[1][k], u.comp[2][k]);
            // Directors are headless (u and -u are the same state), so the
            // in-plane angle is doubled before coloring.
            let hue = uy.atan2(ux) / std::f64::consts::PI; // [-1, 1), period 1 in angle
            let hue = (hue + 1.0) % 1.0;
            let lightness = 0.5 + 0.32 * uz.clamp(-1.0, 1.0);
            let (r, g, b) = hsl_to_rgb(hue, 0.85, lightness);
            out[4 * k] = r;
            out[4 * k + 1] = g;
            out[4 * k + 2] = b;
            out[4 * k + 3] = 255;
        }
        out
    }

    fn paint_energy(&self) -> Vec<u8> {
        let (constants, u) = match &self.sim {
            Sim::Flow { cfg, state } => (&cfg.constants, &state.u),
            Sim::Coupled { cfg, state, .. } => (&cfg.constants, &state.u),
        };
        let dens = diagnostics::density_fields(constants, u).w;
        let max = dens.data.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
        let n = self.grid.node_count();
        let mut out = vec![0u8; n * 4];
        for k in 0..n {
            let t = (dens.data[k] / max).clamp(0.0, 1.0);
            let (r, g, b) = heat(t.sqrt()); // sqrt stretches the dim end
            out[4 * k] = r;
            out[4 * k + 1] = g;
            out[4 * k + 2] = b;
            out[4 * k + 3] = 255;
        }
        out
    }
}

fn paint_vorticity(v: &nematic::Vec2Field) -> Vec<u8> {
    let grid = v.grid;
    let dvy_dx = ops::deriv(grid, &v.comp[1], 0);
    let dvx_dy = ops::deriv(grid, &v.comp[0], 1);
    let n = grid.node_count();
    let mut omega = vec![0.0f64; n];
    let mut max = 1e-12f64;
    for k in 0..n {
        omega[k] = dvy_dx[k] - dvx_dy[k];
        max = max.max(omega[k].abs());
    }
    let mut out = vec![0u8; n * 4];
    for k in 0..n {
        let t = (omega[k] / max).clamp(-1.0, 1.0);
        // Diverging blue-white-red.
        let (r, g, b) = if t < 0.0 {
            let s = 1.0 + t;
            (lerp8(70, 255, s), lerp8(110, 255, s), 255)
        } else {
            let s = 1.0 - t;
            (255, lerp8(80, 255, s), lerp8(60, 255, s))
        };
        out[4 * k] = r;
        out[4 * k + 1] = g;
        out[4 * k + 2] = b;
        out[4 * k + 3] = 255;
    }
    out
}

fn lerp8(a: u8, b: u8, t: f64) -> u8 {
    (a as f64 + (b as f64 - a as f64) * t.clamp(0.0, 1.0)).round() as u8
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h * 6.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    (
        ((r1 + m) * 255.0).round().clamp(0.0, 255.0) as u8,
        ((g1 + m) * 255.0).round().clamp(0.0, 255.0) as u8,
        ((b1 + m) * 255.0).round().clamp(0.0, 255.0) as u8,
    )
}

/// Five-stop dark-to-bright heat ramp.
fn heat(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, [u8; 3]); 5] = [
        (0.00, [8, 8, 40]),
        (0.25, [90, 20, 120]),
        (0.50, [200, 60, 70]),
        (0.75, [250, 160, 30]),
        (1.00, [255, 250, 180]),
    ];
    let t = t.clamp(0.0, 1.0);
    for w in STOPS.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if t <= t1 {
            let s = (t - t0) / (t1 - t0);
            return (lerp8(c0[0], c1[0], s), lerp8(c0[1], c1[1], s), lerp8(c0[2], c1[2], s));
        }
    }
    (255, 250, 180)
}
