//! Time integration of the damped semilinear wave systems: the discrete
//! semigroups S_eps(t) and S_0(t), energy diagnostics and trajectory-gap
//! measurements.
//!
//! The scheme is linearly implicit Crank-Nicolson: trapezoid rule on the
//! stiffness and damping, the nonlinearity frozen at the current state. Each
//! step solves one SPD system
//!
//! ```text
//! [(1 + gamma dt/2) M + dt^2/4 (K + shift M)] v_{n+1} = rhs(u_n, v_n)
//! u_{n+1} = u_n + dt/2 (v_n + v_{n+1})
//! ```
//!
//! which is unconditionally stable for the linear part and conserves the
//! discrete linear energy exactly when gamma = 0 and f = 0.

use crate::elliptic::EllipticOperator;
use crate::fit::FitResult;
use crate::grid::{hminus1, Grid, GridFunction, NormKind, NormWorkspace};
use crate::sparse::{cg, CsrSym};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// Blow-up guard threshold on the energy norm of a state.
const BLOW_UP_LIMIT: f64 = 1e10;

/// Admissible nonlinearities. All satisfy f(0) = 0, f(s) s >= -K1,
/// f'(s) >= -K2 and |f''(s)| <= K3 (1 + |s|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Zero,
    /// f(s) = s^3 (K1 = K2 = 0, K3 = 6).
    Cubic,
    /// f(s) = s^3 - lambda s (K1 = lambda^2/4, K2 = lambda, K3 = 6).
    CubicMinusLinear(f64),
}

impl Nonlinearity {
    pub fn f(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Cubic => s * s * s,
            Nonlinearity::CubicMinusLinear(l) => s * s * s - l * s,
        }
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Cubic => 3.0 * s * s,
            Nonlinearity::CubicMinusLinear(l) => 3.0 * s * s - l,
        }
    }

    /// Antiderivative F(s) = int_0^s f.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Cubic => 0.25 * s.powi(4),
            Nonlinearity::CubicMinusLinear(l) => 0.25 * s.powi(4) - 0.5 * l * s * s,
        }
    }

    /// Documented bound f(s) s >= -K1.
    pub fn k1(&self) -> f64 {
        match self {
            Nonlinearity::Zero | Nonlinearity::Cubic => 0.0,
            Nonlinearity::CubicMinusLinear(l) => l * l / 4.0,
        }
    }

    /// Documented bound f'(s) >= -K2.
    pub fn k2(&self) -> f64 {
        match self {
            Nonlinearity::Zero | Nonlinearity::Cubic => 0.0,
            Nonlinearity::CubicMinusLinear(l) => *l,
        }
    }

    /// Documented bound |f''(s)| <= K3 (1 + |s|).
    pub fn k3(&self) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            _ => 6.0,
        }
    }

    /// K_mu with F(s) >= -K_mu - mu s^2 for a given mu > 0.
    pub fn k_mu(&self, mu: f64) -> f64 {
        match self {
            Nonlinearity::Zero | Nonlinearity::Cubic => 0.0,
            Nonlinearity::CubicMinusLinear(l) => {
                let c = 0.5 * l + mu;
                // min of s^4/4 - c s^2 is -c^2 at s^2 = 2c
                if c > 0.0 {
                    c * c
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Nonlinearity::Zero => "zero".into(),
            Nonlinearity::Cubic => "cubic".into(),
            Nonlinearity::CubicMinusLinear(l) => format!("cubic_minus_linear({l})"),
        }
    }
}

/// Energy-space state xi = (u, du/dt) at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    u: GridFunction,
    v: GridFunction,
    t: f64,
}

impl State {
    pub fn new(u: GridFunction, v: GridFunction, t: f64) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(State { u, v, t })
    }

    pub fn zero(grid: Grid) -> Self {
        State { u: GridFunction::zeros(grid), v: GridFunction::zeros(grid), t: 0.0 }
    }

    pub fn u(&self) -> &GridFunction {
        &self.u
    }

    pub fn v(&self) -> &GridFunction {
        &self.v
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
}

/// Damped semilinear wave system u_tt + gamma u_t + A u + f(u) = g.
pub struct WaveSystem {
    op: EllipticOperator,
    gamma: f64,
    f: Nonlinearity,
    g: GridFunction,
    dt: f64,
    step_matrix: CsrSym,
    solve_tol: f64,
}

impl WaveSystem {
    pub fn new(op: EllipticOperator, gamma: f64, f: Nonlinearity, g: GridFunction, dt: f64) -> Result<Self> {
        if g.grid() != op.grid() {
            return Err(Error::GridMismatch);
        }
        if !(gamma >= 0.0) {
            return Err(Error::Ellipticity(format!("damping must be nonnegative, got {gamma}")));
        }
        if !(dt > 0.0) {
            return Err(Error::Ellipticity(format!("dt must be positive, got {dt}")));
        }
        // accuracy constraint, the scheme itself is unconditionally stable
        if dt > op.grid().h_max() + 1e-12 {
            return Err(Error::Ellipticity(format!(
                "dt = {dt} exceeds the mesh width {}; refine the time step",
                op.grid().h_max()
            )));
        }
        // step matrix (1 + gamma dt/2) M + (dt^2/4)(K + shift M)
        let mass = op.mass().to_vec();
        let step_matrix = op.system_matrix().scaled(dt * dt / 4.0).with_added_diagonal(&mass, 1.0 + gamma * dt / 2.0);
        let solve_tol = op.solve_tol();
        Ok(WaveSystem { op, gamma, f, g, dt, step_matrix, solve_tol })
    }

    pub fn op(&self) -> &EllipticOperator {
        &self.op
    }

    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.f
    }

    pub fn force(&self) -> &GridFunction {
        &self.g
    }

    /// One linearly implicit Crank-Nicolson step.
    pub fn step(&self, state: &State) -> Result<State> {
        if state.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let n = state.u.len();
        let mass = self.op.mass();
        let dt = self.dt;

        // weak rhs: (1 - gamma dt/2) M v_n - (K + sM)(dt u_n + dt^2/4 v_n) + dt M (g - f(u_n))
        let ku = self.op.apply_weak(&state.u);
        let kv = self.op.apply_weak(&state.v);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let fu = self.f.f(state.u.values()[i]);
            rhs[i] = (1.0 - self.gamma * dt / 2.0) * mass[i] * state.v.values()[i]
                - dt * ku[i]
                - dt * dt / 4.0 * kv[i]
                + dt * mass[i] * (self.g.values()[i] - fu);
        }
        let max_iter = 6 * n + 500;
        let sol = cg(&self.step_matrix, &rhs, self.solve_tol, max_iter, false)?;
        let v_new = GridFunction::from_values(*self.grid(), sol.x)?;
        let mut u_new = state.u.clone();
        u_new.axpy(dt / 2.0, &state.v);
        u_new.axpy(dt / 2.0, &v_new);
        let new_state = State { u: u_new, v: v_new, t: state.t + dt };

        // cheap blow-up guard; the sup norm bounds the energy norm up to a
        // grid factor, which is far below the 1e10 envelope
        let sup = new_state.u.max_abs().max(new_state.v.max_abs());
        if !sup.is_finite() || sup > BLOW_UP_LIMIT {
            return Err(Error::BlowUp(format!(
                "state sup norm {sup:.3e} exceeded {BLOW_UP_LIMIT:.0e} at t = {:.4}",
                new_state.t
            )));
        }
        Ok(new_state)
    }

    /// March `steps` steps without recording.
    pub fn advance(&self, state: &State, steps: usize) -> Result<State> {
        let mut s = state.clone();
        for _ in 0..steps {
            s = self.step(&s)?;
        }
        Ok(s)
    }

    /// Discrete energy 1/2 ||v||^2 + 1/2 (a grad u, grad u) + shift/2 ||u||^2
    /// + (F(u), 1) - (g, u).
    pub fn energy(&self, state: &State) -> f64 {
        let mass = self.op.mass();
        let quad = self.op.energy_form(&state.u, &state.u);
        let mut kinetic = 0.0;
        let mut potential_f = 0.0;
        let mut force = 0.0;
        for i in 0..state.u.len() {
            kinetic += mass[i] * state.v.values()[i] * state.v.values()[i];
            potential_f += mass[i] * self.f.antiderivative(state.u.values()[i]);
            force += mass[i] * self.g.values()[i] * state.u.values()[i];
        }
        0.5 * kinetic + 0.5 * quad + potential_f - force
    }
}

/// A sampled trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// CSV with time, energy and the component norms.
    pub fn to_csv(&self, sys: &WaveSystem) -> String {
        let ws = NormWorkspace::new(*sys.grid());
        let mut out = String::from("t,energy,norm_u_H1,norm_v_L2\n");
        for s in &self.states {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t(),
                sys.energy(s),
                ws.h1(s.u()),
                ws.l2(s.v())
            );
        }
        out
    }
}

/// Evolve for duration `t_final`, recording a sample every `sample_every`
/// time units (clamped to at least one step). The initial state is always
/// recorded.
pub fn evolve(sys: &WaveSystem, xi: &State, t_final: f64, sample_every: f64) -> Result<Trajectory> {
    if t_final < 0.0 {
        return Err(Error::Ellipticity(format!("t_final must be nonnegative, got {t_final}")));
    }
    let n_steps = (t_final / sys.dt()).round() as usize;
    let stride = ((sample_every / sys.dt()).round() as usize).max(1);
    let mut states = vec![xi.clone()];
    let mut s = xi.clone();
    for k in 1..=n_steps {
        s = sys.step(&s)?;
        if k % stride == 0 || k == n_steps {
            states.push(s.clone());
        }
    }
    Ok(Trajectory { states })
}

/// Norm of a state pair. `ref_op` backs the dual H^-1 form (E^-1), `op`
/// supplies the elliptic operator entering E^1/E^2.
pub fn state_norm(
    xi: &State,
    kind: NormKind,
    ws: &NormWorkspace,
    ref_op: Option<&EllipticOperator>,
    op: Option<&EllipticOperator>,
) -> Result<f64> {
    match kind {
        NormKind::E => {
            let mut sq = ws.h1_semi_sq(xi.u()) + ws.ip_l2(xi.v(), xi.v());
            if xi.grid().bc() != crate::grid::BoundaryCondition::Dirichlet {
                sq += ws.ip_l2(xi.u(), xi.u());
            }
            Ok(sq.sqrt())
        }
        NormKind::Eminus1 => {
            let r = ref_op.ok_or(Error::MissingReferenceOperator)?;
            let h = hminus1(ws, xi.v(), r)?;
            Ok((ws.ip_l2(xi.u(), xi.u()) + h * h).sqrt())
        }
        NormKind::E1 => {
            let o = op.ok_or(Error::MissingReferenceOperator)?;
            let au = o.apply(xi.u())?;
            let mut sq = ws.ip_l2(&au, &au) + ws.h1_semi_sq(xi.v());
            if xi.grid().bc() != crate::grid::BoundaryCondition::Dirichlet {
                sq += ws.ip_l2(xi.v(), xi.v());
            }
            Ok(sq.sqrt())
        }
        NormKind::E2 => {
            let o = op.ok_or(Error::MissingReferenceOperator)?;
            let zero = GridFunction::zeros(*xi.grid());
            e2_norm(o, ws, xi, &zero)
        }
        NormKind::L2 | NormKind::H1 | NormKind::Hminus1 | NormKind::Cbeta(_) => {
            Err(Error::InvalidGrid(format!("{kind:?} applies to grid functions, not state pairs")))
        }
    }
}

/// Discrete E^2 norm with force g:
/// ||A u - g||_H1^2 + ||A u||^2 + ||A v||^2.
pub fn e2_norm(op: &EllipticOperator, ws: &NormWorkspace, xi: &State, g: &GridFunction) -> Result<f64> {
    let au = op.apply(xi.u())?;
    let av = op.apply(xi.v())?;
    let res = au.sub(g)?;
    let sq = ws.h1(&res).powi(2) + ws.ip_l2(&au, &au) + ws.ip_l2(&av, &av);
    Ok(sq.sqrt())
}

/// Smooth random state in the discrete E^2 of `op`: u = A^-1(p + g),
/// v = A^-1 q with low-frequency random fields p, q.
pub fn smooth_state(op: &EllipticOperator, g: &GridFunction, seed: u64, amplitude: f64) -> Result<State> {
    let grid = *op.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = |max_k: usize| -> GridFunction {
        let coeffs: Vec<(f64, f64)> =
            (0..max_k).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        GridFunction::from_fn(grid, |x| {
            let mut acc = 0.0;
            for (k, (cx, cy)) in coeffs.iter().enumerate() {
                let kk = (k + 1) as f64;
                let damp = 1.0 / (kk * kk);
                match grid.bc() {
                    crate::grid::BoundaryCondition::Dirichlet => {
                        let mut m = (kk * std::f64::consts::PI * x[0] / grid.extent(0)).sin();
                        if grid.dim() == 2 {
                            m *= (kk * std::f64::consts::PI * x[1] / grid.extent(1)).sin();
                        }
                        acc += cx * damp * m;
                    }
                    _ => {
                        let tx = 2.0 * std::f64::consts::PI * kk * x[0] / grid.extent(0);
                        let mut m = cx * tx.sin() + cy * tx.cos();
                        if grid.dim() == 2 {
                            m *= (2.0 * std::f64::consts::PI * kk * x[1] / grid.extent(1)).cos();
                        }
                        acc += damp * m;
                    }
                }
            }
            acc
        })
    };
    let p = modes(8).scaled(amplitude);
    let q = modes(8).scaled(amplitude);
    let u = op.apply_inverse(&p.add(g)?)?;
    let v = op.apply_inverse(&q)?;
    State::new(u, v, 0.0)
}

/// Which trajectory pair a gap study compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    /// S_eps(t) xi vs S_0(t) xi in E^-1.
    Raw,
    /// S_eps(t) xi vs S_0(t) Pi_eps xi: E^-1 gap and the dt-gap in E^-1.
    Prepared,
    /// S_eps(t) xi vs corrected homogenised trajectory: H1 errors, corrected
    /// and uncorrected (the homogenised trajectory starts from Pi_eps xi).
    Corrected,
}

/// Time series produced by [`trajectory_gap`].
#[derive(Debug, Clone)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub gap_eminus1: Vec<f64>,
    /// dt-gap ||(v_eps - v_0, w_eps - w_0)||_{E^-1} with w = u_tt from the equation.
    pub gap_dt: Vec<f64>,
    pub gap_h1_corr: Vec<f64>,
    pub gap_h1_uncorr: Vec<f64>,
}

impl GapSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,gap_Eminus1,gap_dt,gap_H1corr,gap_H1uncorr\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i],
                self.gap_eminus1.get(i).copied().unwrap_or(f64::NAN),
                self.gap_dt.get(i).copied().unwrap_or(f64::NAN),
                self.gap_h1_corr.get(i).copied().unwrap_or(f64::NAN),
                self.gap_h1_uncorr.get(i).copied().unwrap_or(f64::NAN),
            );
        }
        out
    }

    /// Largest value of a column over sample times <= t.
    pub fn sup_until(&self, column: &[f64], t: f64) -> f64 {
        self.times
            .iter()
            .zip(column)
            .filter(|(tt, _)| **tt <= t + 1e-9)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }
}

/// Rate studies expect smooth data produced through `apply_inverse` /
/// [`smooth_state`]; rough data only degrades the measured rates, so it
/// warns instead of failing.
fn warn_if_rough(sys: &WaveSystem, ws: &NormWorkspace, xi: &State) {
    let e = state_norm(xi, NormKind::E, ws, None, None).unwrap_or(f64::INFINITY);
    let e2 = e2_norm(sys.op(), ws, xi, sys.force()).unwrap_or(f64::INFINITY);
    if e > 0.0 && e2 > 200.0 * e {
        eprintln!(
            "warning: trajectory-gap initial data looks rough (E2/E = {:.1e}); rates may degrade",
            e2 / e
        );
    }
}

/// Discrete acceleration from the equation: u_tt = -gamma v - A u - f(u) + g.
fn acceleration(sys: &WaveSystem, s: &State) -> Result<GridFunction> {
    let au = sys.op().apply(&s.u)?;
    let mut w = GridFunction::zeros(*s.grid());
    for i in 0..w.len() {
        w.values_mut()[i] = -sys.gamma() * s.v.values()[i] - au.values()[i]
            - sys.nonlinearity().f(s.u.values()[i])
            + sys.force().values()[i];
    }
    Ok(w)
}

/// Compare the anisotropic and homogenised trajectories started from one
/// smooth state. The initial state should be generated through
/// `apply_inverse`/[`smooth_state`] so it lies in the discrete E^2; rough
/// data degrades the measured rates but is not an error.
pub fn trajectory_gap(
    sys_eps: &WaveSystem,
    sys_0: &WaveSystem,
    xi: &State,
    t_final: f64,
    sample_every: f64,
    mode: GapMode,
    corrector: Option<&crate::elliptic::Corrector>,
) -> Result<GapSeries> {
    if sys_eps.grid() != sys_0.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *sys_eps.grid();
    let ws = NormWorkspace::new(grid);
    let ref_op = EllipticOperator::reference(grid);

    warn_if_rough(sys_eps, &ws, xi);
    let xi_0 = match mode {
        GapMode::Raw => xi.clone(),
        GapMode::Prepared | GapMode::Corrected => crate::elliptic::prepare_initial(sys_eps.op(), sys_0.op(), xi)?,
    };
    let traj_eps = evolve(sys_eps, xi, t_final, sample_every)?;
    let traj_0 = evolve(sys_0, &xi_0, t_final, sample_every)?;
    let n = traj_eps.states.len().min(traj_0.states.len());

    let mut series = GapSeries {
        times: Vec::with_capacity(n),
        gap_eminus1: Vec::with_capacity(n),
        gap_dt: Vec::new(),
        gap_h1_corr: Vec::new(),
        gap_h1_uncorr: Vec::new(),
    };

    for k in 0..n {
        let se = &traj_eps.states[k];
        let s0 = &traj_0.states[k];
        series.times.push(se.t());
        let diff = State::new(se.u.sub(&s0.u)?, se.v.sub(&s0.v)?, se.t())?;
        series.gap_eminus1.push(state_norm(&diff, NormKind::Eminus1, &ws, Some(&ref_op), None)?);

        if mode == GapMode::Prepared {
            let we = acceleration(sys_eps, se)?;
            let w0 = acceleration(sys_0, s0)?;
            let dt_pair = State::new(se.v.sub(&s0.v)?, we.sub(&w0)?, se.t())?;
            series.gap_dt.push(state_norm(&dt_pair, NormKind::Eminus1, &ws, Some(&ref_op), None)?);
        }
        if mode == GapMode::Corrected {
            let corr = corrector.ok_or(Error::MissingReferenceOperator)?;
            let corrected = corr.apply(&s0.u)?;
            series.gap_h1_corr.push(ws.h1(&se.u.sub(&corrected)?));
            series.gap_h1_uncorr.push(ws.h1(&se.u.sub(&s0.u)?));
        }
    }
    Ok(series)
}

/// All gap columns of one epsilon in a single pass: evolves S_eps xi,
/// S_0 xi and S_0 Pi_eps xi once each and reports the raw E^-1 gap, the
/// prepared E^-1 and dt gaps, and both H1 errors of the corrected comparison.
pub fn trajectory_gap_full(
    sys_eps: &WaveSystem,
    sys_0: &WaveSystem,
    xi: &State,
    t_final: f64,
    sample_every: f64,
    corrector: &crate::elliptic::Corrector,
) -> Result<(GapSeries, GapSeries)> {
    if sys_eps.grid() != sys_0.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *sys_eps.grid();
    let ws = NormWorkspace::new(grid);
    let ref_op = EllipticOperator::reference(grid);
    warn_if_rough(sys_eps, &ws, xi);
    let xi_prep = crate::elliptic::prepare_initial(sys_eps.op(), sys_0.op(), xi)?;

    let traj_eps = evolve(sys_eps, xi, t_final, sample_every)?;
    let traj_raw = evolve(sys_0, xi, t_final, sample_every)?;
    let traj_prep = evolve(sys_0, &xi_prep, t_final, sample_every)?;
    let n = traj_eps.states.len().min(traj_raw.states.len()).min(traj_prep.states.len());

    let mut raw = GapSeries {
        times: Vec::with_capacity(n),
        gap_eminus1: Vec::with_capacity(n),
        gap_dt: Vec::new(),
        gap_h1_corr: Vec::new(),
        gap_h1_uncorr: Vec::new(),
    };
    let mut prepared = GapSeries {
        times: Vec::with_capacity(n),
        gap_eminus1: Vec::with_capacity(n),
        gap_dt: Vec::with_capacity(n),
        gap_h1_corr: Vec::with_capacity(n),
        gap_h1_uncorr: Vec::with_capacity(n),
    };

    for k in 0..n {
        let se = &traj_eps.states[k];
        let s_raw = &traj_raw.states[k];
        let s0 = &traj_prep.states[k];
        raw.times.push(se.t());
        prepared.times.push(se.t());

        let diff_raw = State::new(se.u.sub(&s_raw.u)?, se.v.sub(&s_raw.v)?, se.t())?;
        raw.gap_eminus1.push(state_norm(&diff_raw, NormKind::Eminus1, &ws, Some(&ref_op), None)?);

        let diff = State::new(se.u.sub(&s0.u)?, se.v.sub(&s0.v)?, se.t())?;
        prepared.gap_eminus1.push(state_norm(&diff, NormKind::Eminus1, &ws, Some(&ref_op), None)?);
        let we = acceleration(sys_eps, se)?;
        let w0 = acceleration(sys_0, s0)?;
        let dt_pair = State::new(se.v.sub(&s0.v)?, we.sub(&w0)?, se.t())?;
        prepared.gap_dt.push(state_norm(&dt_pair, NormKind::Eminus1, &ws, Some(&ref_op), None)?);
        let corrected = corrector.apply(&s0.u)?;
        prepared.gap_h1_corr.push(ws.h1(&se.u.sub(&corrected)?));
        prepared.gap_h1_uncorr.push(ws.h1(&se.u.sub(&s0.u)?));
    }
    Ok((raw, prepared))
}

/// Fit of the E^-1 Lipschitz bound ||S(t) xi1 - S(t) xi2|| <= M e^{Kt} d(0).
pub fn lipschitz_fit(
    sys: &WaveSystem,
    xi1: &State,
    xi2: &State,
    t_final: f64,
    sample_every: f64,
) -> Result<FitResult> {
    let grid = *sys.grid();
    let ws = NormWorkspace::new(grid);
    let ref_op = EllipticOperator::reference(grid);
    let t1 = evolve(sys, xi1, t_final, sample_every)?;
    let t2 = evolve(sys, xi2, t_final, sample_every)?;
    let mut pairs = Vec::new();
    for (a, b) in t1.states.iter().zip(&t2.states) {
        let diff = State::new(a.u.sub(&b.u)?, a.v.sub(&b.v)?, a.t())?;
        let d = state_norm(&diff, NormKind::Eminus1, &ws, Some(&ref_op), None)?;
        if d > 0.0 {
            pairs.push((a.t(), d));
        }
    }
    crate::fit::fit_exponential(&pairs)
}
