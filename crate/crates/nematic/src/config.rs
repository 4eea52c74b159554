//! Text configuration format for runs.
//!
//! The format is line-oriented `key = value` with `#` comments:
//!
//! ```text
//! # a coupled run on a 128^2 grid
//! run.mode    = el
//! grid.n      = 128
//! grid.length = 6.283185307179586
//! frank.k1    = 2.0
//! init.director = bubble
//! init.lambda   = 1.0
//! time.t_end    = 0.5
//! ```
//!
//! Parsing is strict: unknown keys, duplicate keys, and malformed lines are
//! errors that carry the line number.  Every key has a default except the
//! handful marked required below, so small files stay small.  `to_text`
//! writes the full canonical form; parsing that text reproduces the
//! configuration exactly (floats print in shortest round-trip form).

use std::collections::BTreeMap;

use crate::diagnostics::DetectorConfig;
use crate::error::ConfigError;
use crate::flow::{FlowConfig, FlowMode};
use crate::frank::FrankConstants;
use crate::grid::Grid2;
use crate::init::{DirectorInit, VelocityInit};
use crate::leslie::ElConfig;

/// Which system a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Director-only gradient flow.
    Flow,
    /// Coupled director + velocity system.
    Coupled,
}

/// Director relaxation scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelaxKind {
    /// Exact unit-length constraint (tangentially projected flow).
    Constrained,
    /// Ginzburg-Landau penalty at the configured epsilon.
    GinzburgLandau,
}

/// Flat, fully-defaulted run configuration. Field names mirror the config
/// keys; `flow_config` / `el_config` / `director_init` / ... assemble the
/// solver-level structures.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub n: usize,
    pub length: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub relax: RelaxKind,
    pub epsilon: f64,
    /// Time step; 0 means "choose automatically from the stability bound".
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub diag_stride: usize,
    pub snapshot_stride: usize,
    pub nu: f64,
    pub lambda: f64,
    pub dealias: bool,
    pub director: String,
    pub b: [f64; 3],
    pub init_lambda: f64,
    pub center: (f64, f64),
    pub amplitude: f64,
    pub modes: usize,
    pub velocity: String,
    pub v_amplitude: f64,
    pub v_modes: usize,
    pub det_eps0: f64,
    pub det_r0: f64,
    pub det_levels: usize,
    pub seed: u64,
    /// Epsilon ladder for relaxation studies.
    pub epsilons: Vec<f64>,
}

/// Key-value store from one parse pass; tracks line numbers and which keys
/// were consumed so leftovers can be rejected by name and line.
struct KeyMap {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyMap {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = match body.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => {
                    return Err(ConfigError::BadLine { line, text: body.to_string() });
                }
            };
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::BadLine { line, text: body.to_string() });
            }
            if entries.contains_key(key) {
                return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
            }
            entries.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(KeyMap { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }

    fn take_parsed<T: std::str::FromStr>(
        &mut self,
        key: &str,
        default: T,
        what: &str,
    ) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                message: format!("cannot parse `{v}` as {what}"),
            }),
        }
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.take_parsed(key, default, "a number")?;
        if !v.is_finite() {
            return Err(ConfigError::BadValue {
                key: key.to_string(),
                message: format!("must be finite, got {v}"),
            });
        }
        Ok(v)
    }

    fn take_floats(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .split_whitespace()
                .map(|tok| {
                    tok.parse().map_err(|_| ConfigError::BadValue {
                        key: key.to_string(),
                        message: format!("cannot parse `{tok}` as a number"),
                    })
                })
                .collect(),
        }
    }

    fn take_choice(
        &mut self,
        key: &str,
        default: &str,
        allowed: &[&str],
    ) -> Result<String, ConfigError> {
        let v = match self.take(key) {
            None => default.to_string(),
            Some(v) => v,
        };
        if !allowed.contains(&v.as_str()) {
            return Err(ConfigError::BadValue {
                key: key.to_string(),
                message: format!("must be one of {}, got `{v}`", allowed.join(" | ")),
            });
        }
        Ok(v)
    }

    fn require(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, (line, _))) =
            self.entries.into_iter().min_by_key(|(_, (line, _))| *line)
        {
            return Err(ConfigError::UnknownKey { line, key });
        }
        Ok(())
    }
}

impl RunConfig {
    /// Parses a configuration text. Required keys: `run.mode`, `grid.n`,
    /// `grid.length`, `time.t_end`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = KeyMap::parse(text)?;

        let mode = match map.require("run.mode")?.as_str() {
            "flow" => RunMode::Flow,
            "el" => RunMode::Coupled,
            other => {
                return Err(ConfigError::BadValue {
                    key: "run.mode".into(),
                    message: format!("must be `flow` or `el`, got `{other}`"),
                })
            }
        };
        let n: usize = map
            .require("grid.n")?
            .parse()
            .map_err(|_| ConfigError::BadValue {
                key: "grid.n".into(),
                message: "cannot parse as an integer".into(),
            })?;
        let length = {
            let v = map.require("grid.length")?;
            v.parse::<f64>().map_err(|_| ConfigError::BadValue {
                key: "grid.length".into(),
                message: format!("cannot parse `{v}` as a number"),
            })?
        };
        // Validate the grid now so every later default (detector radius,
        // bubble center) comes from a well-formed domain.
        let grid = Grid2::new(n, length).map_err(|e| ConfigError::BadValue {
            key: "grid.n".into(),
            message: e.to_string(),
        })?;
        let t_end = {
            let v = map.require("time.t_end")?;
            v.parse::<f64>().map_err(|_| ConfigError::BadValue {
                key: "time.t_end".into(),
                message: format!("cannot parse `{v}` as a number"),
            })?
        };

        let k1 = map.take_f64("frank.k1", 1.0)?;
        let k2 = map.take_f64("frank.k2", 1.0)?;
        let k3 = map.take_f64("frank.k3", 1.0)?;
        let k4 = map.take_f64("frank.k4", 0.0)?;

        let relax = match map.take_choice("flow.relax", "constrained", &["constrained", "gl"])? {
            s if s == "gl" => RelaxKind::GinzburgLandau,
            _ => RelaxKind::Constrained,
        };
        let epsilon = map.take_f64("flow.epsilon", 0.1)?;

        let dt = map.take_f64("time.dt", 0.0)?;
        let cfl_safety = map.take_f64("time.cfl_safety", 0.8)?;
        let diag_stride = map.take_parsed("output.diag_stride", 10usize, "an integer")?;
        let snapshot_stride = map.take_parsed("output.snapshot_stride", 0usize, "an integer")?;

        let nu = map.take_f64("el.nu", 1.0)?;
        let lambda = map.take_f64("el.lambda", 1.0)?;
        let dealias = map.take_parsed("el.dealias", false, "true or false")?;

        let director = map.take_choice(
            "init.director",
            "constant",
            &["constant", "bubble", "random", "bubble-random"],
        )?;
        let b_vec = map.take_floats("init.b", vec![0.0, 0.0, 1.0])?;
        if b_vec.len() != 3 {
            return Err(ConfigError::BadValue {
                key: "init.b".into(),
                message: format!("needs exactly 3 components, got {}", b_vec.len()),
            });
        }
        let init_lambda = map.take_f64("init.lambda", 1.0)?;
        let center_vec =
            map.take_floats("init.center", vec![0.5 * length, 0.5 * length])?;
        if center_vec.len() != 2 {
            return Err(ConfigError::BadValue {
                key: "init.center".into(),
                message: format!("needs exactly 2 components, got {}", center_vec.len()),
            });
        }
        let amplitude = map.take_f64("init.amplitude", 0.1)?;
        let modes = map.take_parsed("init.modes", 4usize, "an integer")?;

        let velocity = map.take_choice(
            "init.velocity",
            "zero",
            &["zero", "taylor-green", "random-stream"],
        )?;
        let v_amplitude = map.take_f64("init.v_amplitude", 1.0)?;
        let v_modes = map.take_parsed("init.v_modes", 3usize, "an integer")?;

        let det_defaults = DetectorConfig::defaults(grid);
        let det_eps0 = map.take_f64("detector.eps0", det_defaults.eps0)?;
        let det_r0 = map.take_f64("detector.r0", det_defaults.r0)?;
        let det_levels = map.take_parsed("detector.levels", det_defaults.levels, "an integer")?;

        let seed = map.take_parsed("seed", 1u64, "an integer")?;
        let epsilons = map.take_floats("study.epsilons", vec![0.2, 0.1, 0.05])?;
        if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(ConfigError::BadValue {
                key: "study.epsilons".into(),
                message: "needs at least one positive value".into(),
            });
        }

        map.finish()?;

        Ok(RunConfig {
            mode,
            n,
            length,
            k1,
            k2,
            k3,
            k4,
            relax,
            epsilon,
            dt,
            t_end,
            cfl_safety,
            diag_stride,
            snapshot_stride,
            nu,
            lambda,
            dealias,
            director,
            b: [b_vec[0], b_vec[1], b_vec[2]],
            init_lambda,
            center: (center_vec[0], center_vec[1]),
            amplitude,
            modes,
            velocity,
            v_amplitude,
            v_modes,
            det_eps0,
            det_r0,
            det_levels,
            seed,
            epsilons,
        })
    }

    /// Canonical full serialization; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mode = match self.mode {
            RunMode::Flow => "flow",
            RunMode::Coupled => "el",
        };
        let relax = match self.relax {
            RelaxKind::Constrained => "constrained",
            RelaxKind::GinzburgLandau => "gl",
        };
        let epsilons: Vec<String> = self.epsilons.iter().map(|e| format!("{e}")).collect();
        format!(
            "run.mode = {mode}\n\
             grid.n = {}\n\
             grid.length = {}\n\
             frank.k1 = {}\n\
             frank.k2 = {}\n\
             frank.k3 = {}\n\
             frank.k4 = {}\n\
             flow.relax = {relax}\n\
             flow.epsilon = {}\n\
             time.dt = {}\n\
             time.t_end = {}\n\
             time.cfl_safety = {}\n\
             output.diag_stride = {}\n\
             output.snapshot_stride = {}\n\
             el.nu = {}\n\
             el.lambda = {}\n\
             el.dealias = {}\n\
             init.director = {}\n\
             init.b = {} {} {}\n\
             init.lambda = {}\n\
             init.center = {} {}\n\
             init.amplitude = {}\n\
             init.modes = {}\n\
             init.velocity = {}\n\
             init.v_amplitude = {}\n\
             init.v_modes = {}\n\
             detector.eps0 = {}\n\
             detector.r0 = {}\n\
             detector.levels = {}\n\
             seed = {}\n\
             study.epsilons = {}\n",
            self.n,
            self.length,
            self.k1,
            self.k2,
            self.k3,
            self.k4,
            self.epsilon,
            self.dt,
            self.t_end,
            self.cfl_safety,
            self.diag_stride,
            self.snapshot_stride,
            self.nu,
            self.lambda,
            self.dealias,
            self.director,
            self.b[0],
            self.b[1],
            self.b[2],
            self.init_lambda,
            self.center.0,
            self.center.1,
            self.amplitude,
            self.modes,
            self.velocity,
            self.v_amplitude,
            self.v_modes,
            self.det_eps0,
            self.det_r0,
            self.det_levels,
            self.seed,
            epsilons.join(" "),
        )
    }

    pub fn grid(&self) -> Result<Grid2, ConfigError> {
        Grid2::new(self.n, self.length).map_err(|e| ConfigError::BadValue {
            key: "grid.n".into(),
            message: e.to_string(),
        })
    }

    pub fn constants(&self) -> Result<FrankConstants, ConfigError> {
        FrankConstants::new(self.k1, self.k2, self.k3, self.k4)
    }

    fn flow_mode(&self) -> FlowMode {
        match self.relax {
            RelaxKind::Constrained => FlowMode::Constrained,
            RelaxKind::GinzburgLandau => FlowMode::GinzburgLandau { epsilon: self.epsilon },
        }
    }

    /// Assembles and validates the director-only solver configuration.
    /// `time.dt = 0` resolves to `cfl_safety` times the stability bound.
    pub fn flow_config(&self) -> Result<FlowConfig, ConfigError> {
        let mut cfg =
            FlowConfig::new(self.grid()?, self.constants()?, self.flow_mode(), self.t_end);
        cfg.cfl_safety = self.cfl_safety;
        cfg.dt = if self.dt == 0.0 {
            self.cfl_safety * cfg.stability_bound()
        } else {
            self.dt
        };
        cfg.diag_stride = self.diag_stride.max(1);
        cfg.snapshot_stride = self.snapshot_stride;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assembles and validates the coupled-solver configuration.  The
    /// advective stability restriction is checked against `vmax`, the
    /// largest initial speed (the run re-checks as the flow evolves).
    pub fn el_config(&self, vmax: f64) -> Result<ElConfig, ConfigError> {
        let mut cfg = ElConfig::new(
            self.grid()?,
            self.constants()?,
            self.flow_mode(),
            self.nu,
            self.lambda,
            self.t_end,
        );
        cfg.cfl_safety = self.cfl_safety;
        cfg.dt = if self.dt == 0.0 {
            self.cfl_safety * cfg.stability_bound(vmax)
        } else {
            self.dt
        };
        cfg.diag_stride = self.diag_stride.max(1);
        cfg.snapshot_stride = self.snapshot_stride;
        cfg.dealias = self.dealias;
        cfg.validate(vmax)?;
        Ok(cfg)
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig { eps0: self.det_eps0, r0: self.det_r0, levels: self.det_levels }
    }

    pub fn director_init(&self) -> DirectorInit {
        match self.director.as_str() {
            "constant" => DirectorInit::Constant { b: self.b },
            "bubble" => DirectorInit::Bubble { lambda: self.init_lambda, center: self.center },
            "random" => {
                DirectorInit::RandomSmooth { amplitude: self.amplitude, modes: self.modes }
            }
            "bubble-random" => DirectorInit::BubblePerturbed {
                lambda: self.init_lambda,
                center: self.center,
                amplitude: self.amplitude,
                modes: self.modes,
            },
            other => panic!("director kind `{other}` escaped validation"),
        }
    }

    pub fn velocity_init(&self) -> VelocityInit {
        match self.velocity.as_str() {
            "zero" => VelocityInit::Zero,
            "taylor-green" => VelocityInit::TaylorGreen { amplitude: self.v_amplitude },
            "random-stream" => {
                VelocityInit::RandomStream { amplitude: self.v_amplitude, modes: self.v_modes }
            }
            other => panic!("velocity kind `{other}` escaped validation"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
        run.mode = flow\n\
        grid.n = 64\n\
        grid.length = 1.0\n\
        time.t_end = 0.01\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.mode, RunMode::Flow);
        assert_eq!(cfg.k1, 1.0);
        assert_eq!(cfg.relax, RelaxKind::Constrained);
        assert_eq!(cfg.center, (0.5, 0.5));
        assert_eq!(cfg.det_levels, 3);
        assert_eq!(cfg.epsilons, vec![0.2, 0.1, 0.05]);
        let flow = cfg.flow_config().unwrap();
        assert!(flow.dt > 0.0, "dt = 0 resolves from the stability bound");
        assert!(flow.validate().is_ok());
    }

    #[test]
    fn round_trip_is_exact() {
        let text = "\
            run.mode = el\n\
            grid.n = 32\n\
            grid.length = 6.5\n\
            frank.k1 = 2.0\n\
            frank.k2 = 0.7\n\
            frank.k3 = 1.3\n\
            flow.relax = gl\n\
            flow.epsilon = 0.05\n\
            el.nu = 0.31\n\
            el.dealias = true\n\
            init.director = bubble-random\n\
            init.lambda = 0.8125\n\
            init.center = 1.625 4.875\n\
            init.amplitude = 0.125\n\
            init.velocity = taylor-green\n\
            init.v_amplitude = 0.59\n\
            time.t_end = 0.25\n\
            seed = 77\n\
            study.epsilons = 0.4 0.2 0.1 0.05\n";
        let cfg = RunConfig::parse(text).unwrap();
        let echoed = cfg.to_text();
        let reparsed = RunConfig::parse(&echoed).unwrap();
        assert_eq!(cfg, reparsed, "canonical text must reparse identically");
        assert_eq!(reparsed.to_text(), echoed, "second echo is byte-identical");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header comment\n\nrun.mode = flow # trailing\n\
                    grid.n = 64\ngrid.length = 1.0\ntime.t_end = 0.01\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.n, 64);
    }

    #[test]
    fn strictness_unknown_duplicate_malformed() {
        let text = format!("{MINIMAL}flw.relax = gl\n");
        match RunConfig::parse(&text) {
            Err(ConfigError::UnknownKey { line, key }) => {
                assert_eq!(line, 5);
                assert_eq!(key, "flw.relax");
            }
            other => panic!("expected UnknownKey, got {other:?}"),
        }

        let text = format!("{MINIMAL}grid.n = 128\n");
        assert!(matches!(
            RunConfig::parse(&text),
            Err(ConfigError::DuplicateKey { line: 5, .. })
        ));

        let text = format!("{MINIMAL}just words\n");
        assert!(matches!(RunConfig::parse(&text), Err(ConfigError::BadLine { line: 5, .. })));

        let text = "run.mode = flow\ngrid.n = 64\ngrid.length = 1.0\n";
        assert!(matches!(
            RunConfig::parse(text),
            Err(ConfigError::MissingKey(k)) if k == "time.t_end"
        ));
    }

    #[test]
    fn bad_values_name_the_key() {
        let text = format!("{MINIMAL}frank.k1 = -1\n");
        let cfg = RunConfig::parse(&text).unwrap();
        match cfg.constants() {
            Err(ConfigError::BadValue { key, .. }) => assert_eq!(key, "k1"),
            other => panic!("expected BadValue, got {other:?}"),
        }

        let text = format!("{MINIMAL}init.b = 1 0\n");
        assert!(matches!(
            RunConfig::parse(&text),
            Err(ConfigError::BadValue { key, .. }) if key == "init.b"
        ));

        let text = format!("{MINIMAL}time.dt = 1.0\n");
        let cfg = RunConfig::parse(&text).unwrap();
        assert!(matches!(cfg.flow_config(), Err(ConfigError::CflViolation { .. })));
    }

    #[test]
    fn init_specs_assemble_from_flat_keys() {
        let text = format!(
            "{MINIMAL}init.director = bubble\ninit.lambda = 0.25\ninit.center = 0.75 0.25\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        match cfg.director_init() {
            DirectorInit::Bubble { lambda, center } => {
                assert_eq!(lambda, 0.25);
                assert_eq!(center, (0.75, 0.25));
            }
            other => panic!("expected a bubble, got {other:?}"),
        }
    }
}
