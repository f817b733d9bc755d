//! Flat `key = value` study configuration with dotted section prefixes,
//! strict unknown-key rejection and explicit seeds.
//!
//! Validation gathers every violated rule instead of failing at the first
//! one, so a bad config reports all of its problems at once.

use crate::cell::{CoefficientField, CoefficientKind};
use crate::grid::{BoundaryCondition, Grid, GridFunction};
use crate::wave::Nonlinearity;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Cell,
    EllipticRate,
    TrajectoryRate,
    AttractorDist,
    ExpAttractor,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Cell => "cell",
            StudyKind::EllipticRate => "elliptic-rate",
            StudyKind::TrajectoryRate => "trajectory-rate",
            StudyKind::AttractorDist => "attractor-dist",
            StudyKind::ExpAttractor => "exp-attractor",
        }
    }
}

/// Force field specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForceSpec {
    Zero,
    /// amplitude * sin(pi x / l) (* sin(pi y / l) in 2D); first Dirichlet mode
    /// shape, also smooth under the other conditions.
    Sine(f64),
    Constant(f64),
}

impl ForceSpec {
    pub fn build(&self, grid: Grid) -> GridFunction {
        match *self {
            ForceSpec::Zero => GridFunction::zeros(grid),
            ForceSpec::Constant(c) => GridFunction::from_fn(grid, move |_| c),
            ForceSpec::Sine(a) => GridFunction::from_fn(grid, move |x| {
                let mut v = a * (std::f64::consts::PI * x[0] / grid.extent(0)).sin();
                if grid.dim() == 2 {
                    v *= (std::f64::consts::PI * x[1] / grid.extent(1)).sin();
                }
                v
            }),
        }
    }
}

/// Exponential-attractor study parameters (toy pair by default, optionally
/// the coarse wave pair).
#[derive(Debug, Clone)]
pub struct ExpAttrParams {
    pub mode: String,
    pub k_max: usize,
    pub cap: usize,
    pub k_split: f64,
    pub lipschitz: f64,
    pub omega: f64,
    pub seed: u64,
    pub toy_dim: usize,
    pub toy_contraction: f64,
    pub toy_offset: Vec<f64>,
    pub toy_b_radius: f64,
    pub toy_delta: f64,
    pub wave_t_map: f64,
}

/// Fully resolved study configuration.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub study: StudyKind,
    pub out_dir: String,
    pub coeff: Option<CoefficientField>,
    pub grid: Option<Grid>,
    pub cell_n: usize,
    pub eps_ladder: Vec<f64>,
    pub force: ForceSpec,
    pub gamma: f64,
    pub nonlinearity: Nonlinearity,
    pub dt_factor: f64,
    pub t_final: f64,
    pub sample_every: f64,
    pub fixed_times: Vec<f64>,
    pub n_traj: usize,
    pub t_burn: f64,
    pub n_samples: usize,
    pub delta: f64,
    pub seed: Option<u64>,
    pub betas: Vec<f64>,
    pub gap_tol: f64,
    pub expattr: ExpAttrParams,
    /// Every key with its resolved value, defaults included, in a fixed
    /// order; this is what the manifest records.
    pub resolved: Vec<(String, String)>,
}

fn parse_number(s: &str) -> Option<f64> {
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        return Some(n / d);
    }
    s.trim().parse().ok()
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|p| parse_number(p.trim())).collect()
}

struct Parser {
    pairs: Vec<(String, String)>,
    used: Vec<bool>,
    problems: Vec<String>,
    resolved: Vec<(String, String)>,
}

impl Parser {
    fn new(text: &str) -> Self {
        let mut pairs = Vec::new();
        let mut problems = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    let key = k.trim().to_string();
                    if pairs.iter().any(|(existing, _)| *existing == key) {
                        problems.push(format!("line {}: duplicate key '{key}'", lineno + 1));
                    } else {
                        pairs.push((key, v.trim().to_string()));
                    }
                }
                None => problems.push(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)),
            }
        }
        let used = vec![false; pairs.len()];
        Parser { pairs, used, problems, resolved: Vec::new() }
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        for (i, (k, v)) in self.pairs.iter().enumerate() {
            if k == key {
                self.used[i] = true;
                return Some(v.clone());
            }
        }
        None
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or_else(|| default.to_string());
        self.resolved.push((key.to_string(), v.clone()));
        v
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        match self.raw(key) {
            Some(s) => match parse_number(&s) {
                Some(v) => {
                    self.resolved.push((key.to_string(), format!("{v}")));
                    v
                }
                None => {
                    self.problems.push(format!("{key}: cannot parse number '{s}'"));
                    default
                }
            },
            None => {
                self.resolved.push((key.to_string(), format!("{default}")));
                default
            }
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> usize {
        let v = self.f64_or(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 {
            self.problems.push(format!("{key}: expected a nonnegative integer, got {v}"));
            default
        } else {
            v as usize
        }
    }

    fn list_or(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        match self.raw(key) {
            Some(s) => match parse_list(&s) {
                Some(v) => {
                    self.resolved.push((key.to_string(), s));
                    v
                }
                None => {
                    self.problems.push(format!("{key}: cannot parse list '{s}'"));
                    default.to_vec()
                }
            },
            None => {
                self.resolved
                    .push((key.to_string(), default.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")));
                default.to_vec()
            }
        }
    }

    fn required_seed(&mut self, key: &str) -> Option<u64> {
        match self.raw(key) {
            Some(s) => match s.parse::<u64>() {
                Ok(v) => {
                    self.resolved.push((key.to_string(), format!("{v}")));
                    Some(v)
                }
                Err(_) => {
                    self.problems.push(format!("{key}: cannot parse seed '{s}'"));
                    None
                }
            },
            None => {
                self.problems.push(format!("{key}: seeds must be explicit; no hidden entropy"));
                None
            }
        }
    }

    fn reject_unknown(&mut self) {
        for (i, (k, _)) in self.pairs.iter().enumerate() {
            if !self.used[i] {
                self.problems.push(format!("unknown key '{k}'"));
            }
        }
    }
}

impl StudyConfig {
    pub fn from_text(text: &str) -> Result<StudyConfig> {
        let mut p = Parser::new(text);

        let study_name = p.str_or("study", "");
        let study = match study_name.as_str() {
            "cell" => Some(StudyKind::Cell),
            "elliptic-rate" => Some(StudyKind::EllipticRate),
            "trajectory-rate" => Some(StudyKind::TrajectoryRate),
            "attractor-dist" => Some(StudyKind::AttractorDist),
            "exp-attractor" => Some(StudyKind::ExpAttractor),
            other => {
                p.problems.push(format!(
                    "study: expected one of cell, elliptic-rate, trajectory-rate, attractor-dist, exp-attractor; got '{other}'"
                ));
                None
            }
        };
        let out_dir = p.str_or("out", "out");

        // grid
        let dim = p.usize_or("grid.dim", 1);
        let extents = p.list_or("grid.extent", &[1.0]);
        let n = p.usize_or("grid.n", 256);
        let bc_name = p.str_or("grid.bc", "dirichlet");
        let bc = match bc_name.as_str() {
            "dirichlet" => BoundaryCondition::Dirichlet,
            "neumann" => BoundaryCondition::Neumann,
            "periodic" => BoundaryCondition::Periodic,
            other => {
                p.problems.push(format!("grid.bc: expected dirichlet, neumann or periodic; got '{other}'"));
                BoundaryCondition::Dirichlet
            }
        };
        let mut extent = [0.0f64; 2];
        for ax in 0..2 {
            extent[ax] = extents.get(ax).copied().unwrap_or(*extents.first().unwrap_or(&1.0));
        }
        let grid = match Grid::new(dim, extent, n, bc) {
            Ok(g) => Some(g),
            Err(e) => {
                p.problems.push(format!("grid: {e}"));
                None
            }
        };

        // coefficient
        let kind_name = p.str_or("coefficient.kind", "two_phase_1d");
        let values = p.list_or("coefficient.values", &[1.0, 4.0]);
        let breakpoints = p.list_or("coefficient.breakpoints", &[0.5]);
        let base = p.f64_or("coefficient.base", 2.0);
        let amp = p.list_or("coefficient.amp", &[1.0, 0.0]);
        let cross = p.f64_or("coefficient.cross", 0.0);
        let kind = match kind_name.as_str() {
            "constant" => {
                let d = values.first().copied().unwrap_or(1.0);
                let off = if values.len() >= 3 { values[1] } else { 0.0 };
                let d2 = if values.len() >= 3 { values[2] } else { d };
                Some(CoefficientKind::Constant([[d, off], [off, d2]]))
            }
            "two_phase_1d" | "piecewise_constant_1d" => {
                Some(CoefficientKind::PiecewiseConstant1d { breakpoints: breakpoints.clone(), values: values.clone() })
            }
            "laminate_2d" => {
                Some(CoefficientKind::Laminate2d { breakpoints: breakpoints.clone(), values: values.clone() })
            }
            "trigonometric" => Some(CoefficientKind::Trigonometric {
                base,
                amp: [amp.first().copied().unwrap_or(0.0), amp.get(1).copied().unwrap_or(0.0)],
                cross,
            }),
            other => {
                p.problems.push(format!("coefficient.kind: unknown kind '{other}'"));
                None
            }
        };
        let coeff = kind.and_then(|k| match CoefficientField::new(dim.clamp(1, 2), k) {
            Ok(c) => Some(c),
            Err(e) => {
                p.problems.push(format!("coefficient: {e}"));
                None
            }
        });

        let cell_n = p.usize_or("cell.n", 1024);
        let eps_ladder = p.list_or("eps.ladder", &[0.125, 0.0625, 0.03125]);

        // force
        let force_kind = p.str_or("force.kind", "sine");
        let force_amp = p.f64_or("force.amplitude", 1.0);
        let force = match force_kind.as_str() {
            "zero" => ForceSpec::Zero,
            "sine" => ForceSpec::Sine(force_amp),
            "constant" => ForceSpec::Constant(force_amp),
            other => {
                p.problems.push(format!("force.kind: expected zero, sine or constant; got '{other}'"));
                ForceSpec::Zero
            }
        };

        // wave
        let gamma = p.f64_or("wave.gamma", 0.5);
        let f_name = p.str_or("wave.f", "cubic");
        let lambda = p.f64_or("wave.lambda", 20.0);
        let nonlinearity = match f_name.as_str() {
            "zero" => Nonlinearity::Zero,
            "cubic" => Nonlinearity::Cubic,
            "cubic_minus_linear" => Nonlinearity::CubicMinusLinear(lambda),
            other => {
                p.problems.push(format!("wave.f: expected zero, cubic or cubic_minus_linear; got '{other}'"));
                Nonlinearity::Zero
            }
        };
        let dt_factor = p.f64_or("wave.dt_factor", 0.5);
        if !(0.0 < dt_factor && dt_factor <= 1.0) {
            p.problems.push(format!("wave.dt_factor: must lie in (0, 1], got {dt_factor}"));
        }

        // time
        let t_final = p.f64_or("time.t_final", 4.0);
        let sample_every = p.f64_or("time.sample_every", 0.5);
        let fixed_times = p.list_or("time.fixed", &[1.0, 2.0, 4.0]);

        // ensemble
        let n_traj = p.usize_or("ensemble.n_traj", 8);
        let t_burn = p.f64_or("ensemble.t_burn", 40.0);
        let n_samples = p.usize_or("ensemble.n_samples", 4);
        let delta = p.f64_or("ensemble.delta", 1.0);

        let betas = p.list_or("betas", &crate::attractor::DEFAULT_BETAS);
        let gap_tol = p.f64_or("gap.tol", 1e-6);

        // exp-attractor block
        let expattr = ExpAttrParams {
            mode: p.str_or("expattr.mode", "toy"),
            k_max: p.usize_or("expattr.k_max", 4),
            cap: p.usize_or("expattr.cap", crate::expattract::DEFAULT_CARD_CAP),
            k_split: p.f64_or("expattr.k_split", 0.3),
            lipschitz: p.f64_or("expattr.lipschitz", 1.02),
            omega: p.f64_or("expattr.omega", 0.95),
            seed: 0,
            toy_dim: p.usize_or("expattr.toy_dim", 2),
            toy_contraction: p.f64_or("expattr.toy_contraction", 0.02),
            toy_offset: p.list_or("expattr.toy_offset", &[0.3, 0.2]),
            toy_b_radius: p.f64_or("expattr.toy_b_radius", 1.0),
            toy_delta: p.f64_or("expattr.toy_delta", 0.01),
            wave_t_map: p.f64_or("expattr.t_map", 4.0),
        };
        if !["toy", "wave"].contains(&expattr.mode.as_str()) {
            p.problems.push(format!("expattr.mode: expected toy or wave, got '{}'", expattr.mode));
        }

        // seeds: mandatory wherever randomness enters
        let needs_seed = matches!(
            study,
            Some(StudyKind::TrajectoryRate) | Some(StudyKind::AttractorDist) | Some(StudyKind::ExpAttractor)
        );
        let seed = if needs_seed { p.required_seed("seed") } else { None };
        let mut expattr = expattr;
        if let Some(s) = seed {
            expattr.seed = s;
        }

        p.reject_unknown();

        // semantic rules
        if let (Some(g), Some(s)) = (grid.as_ref(), study) {
            if matches!(s, StudyKind::EllipticRate | StudyKind::TrajectoryRate | StudyKind::AttractorDist) {
                for v in crate::elliptic::ladder_violations(g, &eps_ladder) {
                    p.problems.push(format!("eps.ladder: {v}"));
                }
            }
        }
        if eps_ladder.is_empty() {
            p.problems.push("eps.ladder: must not be empty".into());
        }
        for b in &betas {
            if !(0.0..1.0).contains(b) {
                p.problems.push(format!("betas: Holder exponents must lie in [0, 1), got {b}"));
            }
        }
        if cell_n < 8 {
            p.problems.push(format!("cell.n: need at least 8 cells, got {cell_n}"));
        }

        if !p.problems.is_empty() {
            return Err(Error::Config(p.problems));
        }
        let mut resolved = p.resolved;
        resolved.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(StudyConfig {
            study: study.expect("validated above"),
            out_dir,
            coeff,
            grid,
            cell_n,
            eps_ladder,
            force,
            gamma,
            nonlinearity,
            dt_factor,
            t_final,
            sample_every,
            fixed_times,
            n_traj,
            t_burn,
            n_samples,
            delta,
            seed,
            betas,
            gap_tol,
            expattr,
            resolved,
        })
    }
}
