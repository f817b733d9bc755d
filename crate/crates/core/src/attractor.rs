//! Global-attractor approximation by trajectory ensembles, pair correction,
//! Hausdorff distances between state clouds and the epsilon-rate studies.
//!
//! Attractors are represented by finite clouds of states sampled after a
//! burn-in; every set distance becomes an exact sup-inf over the clouds. The
//! seed-stability check quantifies how much the finite sampling moves the
//! measured distances.

use crate::elliptic::{resolvent_gap, Corrector, EllipticOperator};
use crate::fit::{fit_exponential, fit_rate, FitResult};
use crate::grid::{NormKind, NormWorkspace};
use crate::wave::{evolve, smooth_state, state_norm, trajectory_gap, GapMode, State, WaveSystem};
use crate::{Error, Result};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Amplitude of the smooth random initial states of ensembles.
const ENSEMBLE_AMPLITUDE: f64 = 2.0;
/// Betas at which Holder distances are evaluated by default.
pub const DEFAULT_BETAS: [f64; 3] = [0.0, 0.1, 0.25];

/// How a cloud was produced.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub system_id: String,
    pub n_traj: usize,
    pub t_burn: f64,
    pub n_samples: usize,
    pub delta: f64,
    pub seed: u64,
    /// Empirical absorbing bound: max energy norm over the recorded states.
    pub e_bound: f64,
}

/// Finite set of states approximating an attractor.
#[derive(Debug, Clone)]
pub struct StateCloud {
    states: Vec<State>,
    provenance: Provenance,
}

impl StateCloud {
    pub fn new(states: Vec<State>, provenance: Provenance) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let grid = *states[0].grid();
        if states.iter().any(|s| s.grid() != &grid) {
            return Err(Error::GridMismatch);
        }
        Ok(StateCloud { states, provenance })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn grid(&self) -> &crate::grid::Grid {
        self.states[0].grid()
    }

    /// Largest pairwise E-distance within the cloud.
    pub fn diameter_e(&self) -> f64 {
        let ws = NormWorkspace::new(*self.grid());
        let mut diam = 0.0f64;
        for a in &self.states {
            for b in &self.states {
                let d = pair_diff_norm(a, b, NormKind::E, &ws, None, None).unwrap_or(f64::NAN);
                diam = diam.max(d);
            }
        }
        diam
    }

    /// CSV snapshot: one row per state component, nodal values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,component,values...\n");
        for (k, s) in self.states.iter().enumerate() {
            let mut row_u = format!("{k},u");
            for v in s.u().values() {
                let _ = write!(row_u, ",{v:.16e}");
            }
            out.push_str(&row_u);
            out.push('\n');
            let mut row_v = format!("{k},v");
            for v in s.v().values() {
                let _ = write!(row_v, ",{v:.16e}");
            }
            out.push_str(&row_v);
            out.push('\n');
        }
        out
    }
}

/// Norm of the difference of two states for any cloud-distance kind.
fn pair_diff_norm(
    a: &State,
    b: &State,
    kind: NormKind,
    ws: &NormWorkspace,
    ref_op: Option<&EllipticOperator>,
    op: Option<&EllipticOperator>,
) -> Result<f64> {
    let du = a.u().sub(b.u())?;
    let dv = a.v().sub(b.v())?;
    match kind {
        NormKind::Cbeta(beta) => {
            // product Holder space: max of the component norms
            Ok(ws.cbeta(&du, beta)?.max(ws.cbeta(&dv, beta)?))
        }
        _ => {
            let diff = State::new(du, dv, 0.0)?;
            state_norm(&diff, kind, ws, ref_op, op)
        }
    }
}

/// One-sided (or symmetric) Hausdorff distance between finite clouds by the
/// exact double loop. The E^-1 reference Laplacian is built internally; pass
/// `op` for the E^1/E^2 kinds.
pub fn hausdorff_with(
    a: &StateCloud,
    b: &StateCloud,
    kind: NormKind,
    symmetric: bool,
    op: Option<&EllipticOperator>,
) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *a.grid();
    let ws = NormWorkspace::new(grid);
    let ref_op = match kind {
        NormKind::Eminus1 => Some(EllipticOperator::reference(grid)),
        _ => None,
    };

    let one_sided = |from: &StateCloud, to: &StateCloud| -> Result<f64> {
        let sups: Result<Vec<f64>> = from
            .states
            .par_iter()
            .map(|s| {
                let mut inf = f64::INFINITY;
                for t in &to.states {
                    inf = inf.min(pair_diff_norm(s, t, kind, &ws, ref_op.as_ref(), op)?);
                }
                Ok(inf)
            })
            .collect();
        Ok(sups?.into_iter().fold(0.0, f64::max))
    };

    let d_ab = one_sided(a, b)?;
    if symmetric {
        Ok(d_ab.max(one_sided(b, a)?))
    } else {
        Ok(d_ab)
    }
}

/// [`hausdorff_with`] without an auxiliary operator.
pub fn hausdorff(a: &StateCloud, b: &StateCloud, kind: NormKind, symmetric: bool) -> Result<f64> {
    hausdorff_with(a, b, kind, symmetric, None)
}

/// Evolve an ensemble of smooth random states through the burn-in and record
/// a window of samples per trajectory.
pub fn sample_attractor(
    sys: &WaveSystem,
    system_id: &str,
    n_traj: usize,
    t_burn: f64,
    n_samples: usize,
    delta: f64,
    seed: u64,
) -> Result<StateCloud> {
    if n_traj < 8 {
        return Err(Error::Config(vec![format!("need n_traj >= 8, got {n_traj}")]));
    }
    if sys.gamma() > 0.0 && t_burn < 10.0 / sys.gamma() {
        return Err(Error::Config(vec![format!(
            "burn-in {t_burn} is shorter than 10/gamma = {}",
            10.0 / sys.gamma()
        )]));
    }
    if n_samples == 0 || delta <= 0.0 {
        return Err(Error::Config(vec!["need n_samples >= 1 and delta > 0".into()]));
    }

    let per_traj: Result<Vec<Vec<State>>> = (0..n_traj)
        .into_par_iter()
        .map(|k| {
            let xi = smooth_state(sys.op(), sys.force(), seed.wrapping_add(k as u64), ENSEMBLE_AMPLITUDE)?;
            let settled = sys.advance(&xi, (t_burn / sys.dt()).round() as usize)?;
            let window = evolve(sys, &settled, delta * (n_samples - 1) as f64, delta)?;
            Ok(window.states)
        })
        .collect();

    let states: Vec<State> = per_traj?.into_iter().flatten().collect();
    let ws = NormWorkspace::new(*sys.grid());
    let e_bound = states
        .iter()
        .map(|s| state_norm(s, NormKind::E, &ws, None, None).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    StateCloud::new(
        states,
        Provenance {
            system_id: system_id.to_string(),
            n_traj,
            t_burn,
            n_samples,
            delta,
            seed,
            e_bound,
        },
    )
}

/// Apply the pair corrector to the first component of every state.
pub fn correct_cloud(cloud: &StateCloud, corrector: &Corrector) -> Result<StateCloud> {
    let states: Result<Vec<State>> =
        cloud.states.iter().map(|s| crate::elliptic::correct_state(corrector, s)).collect();
    let mut prov = cloud.provenance.clone();
    prov.system_id = format!("{}+T_eps({})", prov.system_id, corrector.eps());
    StateCloud::new(states?, prov)
}

/// Exponential-attraction fit: dist_E(S_0(t) B, cloud) ~ M e^{-sigma t}.
#[derive(Debug, Clone)]
pub struct H2Fit {
    pub sigma: f64,
    pub r2: f64,
    /// False when no exponential regime with R^2 >= 0.9 was found.
    pub conclusive: bool,
    pub pairs: Vec<(f64, f64)>,
}

/// Fit the empirical exponential-attraction rate of a homogenised system
/// toward its sampled cloud, using a held-out batch of bounded states.
pub fn fit_h2_attraction(
    sys0: &WaveSystem,
    cloud0: &StateCloud,
    n_probe: usize,
    t_max: f64,
    seed: u64,
) -> Result<H2Fit> {
    let grid = *sys0.grid();
    let ws = NormWorkspace::new(grid);
    let probes: Result<Vec<State>> = (0..n_probe)
        .map(|k| smooth_state(sys0.op(), sys0.force(), seed.wrapping_add(1000 + k as u64), ENSEMBLE_AMPLITUDE))
        .collect();
    let probes = probes?;

    let trajectories: Result<Vec<Vec<State>>> =
        probes.par_iter().map(|xi| Ok(evolve(sys0, xi, t_max, 1.0)?.states)).collect();
    let trajectories = trajectories?;

    let n_times = trajectories.iter().map(|t| t.len()).min().unwrap_or(0);
    let mut pairs = Vec::new();
    for k in 0..n_times {
        let t = trajectories[0][k].t();
        let mut sup = 0.0f64;
        for traj in &trajectories {
            let mut inf = f64::INFINITY;
            for c in cloud0.states() {
                inf = inf.min(pair_diff_norm(&traj[k], c, NormKind::E, &ws, None, None)?);
            }
            sup = sup.max(inf);
        }
        pairs.push((t, sup));
    }

    // fit over the decaying window above the sampling floor
    let floor = pairs.last().map(|p| p.1).unwrap_or(0.0);
    let cut = pairs.iter().position(|&(_, d)| d <= (2.0 * floor).max(1e-14)).unwrap_or(pairs.len());
    let window = &pairs[..cut.max(3).min(pairs.len())];
    match fit_exponential(window) {
        Ok(fit) => {
            let sigma = -fit.slope;
            let conclusive = fit.r2 >= 0.9 && sigma > 0.0;
            Ok(H2Fit { sigma, r2: fit.r2, conclusive, pairs })
        }
        Err(_) => Ok(H2Fit { sigma: 0.0, r2: 0.0, conclusive: false, pairs }),
    }
}

/// Per-epsilon distances of an attractor study.
#[derive(Debug, Clone)]
pub struct AttractorDistanceRow {
    pub eps: f64,
    pub gap: f64,
    pub dist_eminus1: f64,
    pub dist_e_uncorr: f64,
    pub dist_e_corr: f64,
    pub dist_cbeta: Vec<f64>,
}

/// Output of [`attractor_rate_study`].
#[derive(Debug, Clone)]
pub struct AttractorRateReport {
    pub rows: Vec<AttractorDistanceRow>,
    pub betas: Vec<f64>,
    pub h2: H2Fit,
    /// Growth exponent K of the trajectory gap (E^-1) in time.
    pub k_fit: FitResult,
    /// kappa predicted from the fitted sigma and K: sigma / (K + sigma).
    pub kappa_pred: f64,
    /// Measured exponent of dist_{E^-1} against the resolvent gap.
    pub exponent_vs_gap: Option<FitResult>,
    /// Relative seed-stability error bar of the E^-1 distance.
    pub seed_stability: f64,
    pub flags: Vec<String>,
}

impl AttractorRateReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,gap,dist_Eminus1,dist_E_uncorr,dist_E_corr");
        for b in &self.betas {
            let _ = write!(out, ",dist_Cbeta_{b}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.eps, r.gap, r.dist_eminus1, r.dist_e_uncorr, r.dist_e_corr
            );
            for d in &r.dist_cbeta {
                let _ = write!(out, ",{d:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "(H2) attraction fit: sigma = {:.4}, R^2 = {:.4}{}",
            self.h2.sigma,
            self.h2.r2,
            if self.h2.conclusive { "" } else { " [INCONCLUSIVE]" }
        );
        let _ = writeln!(out, "trajectory-gap growth: K = {:.4} (R^2 = {:.4})", self.k_fit.slope, self.k_fit.r2);
        let _ = writeln!(out, "predicted kappa = sigma/(K+sigma) = {:.4}", self.kappa_pred);
        match &self.exponent_vs_gap {
            Some(f) => {
                let _ = writeln!(
                    out,
                    "measured E^-1 exponent vs gap = {:.4} (R^2 = {:.4}); discrepancy to predicted = {:.4}",
                    f.slope,
                    f.r2,
                    (f.slope - self.kappa_pred).abs()
                );
            }
            None => {
                let _ = writeln!(out, "measured E^-1 exponent: INCONCLUSIVE (R^2 < 0.9)");
            }
        }
        let _ = writeln!(out, "seed-stability error bar: {:.2}%", 100.0 * self.seed_stability);
        for f in &self.flags {
            let _ = writeln!(out, "flag: {f}");
        }
        out
    }
}

/// Parameters of a full attractor distance study.
pub struct AttractorStudyParams {
    pub gamma: f64,
    pub f: crate::wave::Nonlinearity,
    pub n_traj: usize,
    pub t_burn: f64,
    pub n_samples: usize,
    pub delta: f64,
    pub seed: u64,
    pub betas: Vec<f64>,
    pub gap_tol: f64,
}

/// Sample the homogenised and anisotropic attractor clouds over an epsilon
/// ladder and measure the distances between them. The homogenised reference
/// cloud is sampled from S_0 directly; the projector enters only trajectory
/// studies.
pub fn attractor_rate_study(
    coeff: &crate::cell::CoefficientField,
    grid: crate::grid::Grid,
    eps_list: &[f64],
    g: &crate::grid::GridFunction,
    n_cell: usize,
    params: &AttractorStudyParams,
) -> Result<AttractorRateReport> {
    let problems = crate::elliptic::ladder_violations(&grid, eps_list);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let dt = grid.h_max() / 2.0;
    let cellsol = crate::cell::solve_cell(coeff, n_cell)?;
    let op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), grid)?;
    let sys_0 = WaveSystem::new(op_0, params.gamma, params.f, g.clone(), dt)?;
    let cloud_0 = sample_attractor(
        &sys_0,
        "homogenised",
        params.n_traj,
        params.t_burn,
        params.n_samples,
        params.delta,
        params.seed,
    )?;

    let mut flags = Vec::new();
    let h2 = fit_h2_attraction(&sys_0, &cloud_0, 6, params.t_burn.min(30.0), params.seed ^ 0x5eed)?;
    if !h2.conclusive {
        flags.push(format!("(H2) fit inconclusive: sigma = {:.4}, R^2 = {:.4}", h2.sigma, h2.r2));
    }

    let mut rows = Vec::new();
    let mut k_fit: Option<FitResult> = None;
    let mut seed_stability = 0.0f64;
    let eps_mid = eps_list[eps_list.len() / 2];

    for &eps in eps_list {
        let op_eps = EllipticOperator::assemble_oscillatory(coeff, eps, grid)?;
        let gap = resolvent_gap(&op_eps, sys_0.op(), params.gap_tol)?;
        let sys_eps = WaveSystem::new(op_eps, params.gamma, params.f, g.clone(), dt)?;
        let cloud_eps = sample_attractor(
            &sys_eps,
            &format!("eps={eps}"),
            params.n_traj,
            params.t_burn,
            params.n_samples,
            params.delta,
            params.seed,
        )?;
        let corrector = Corrector::new(cellsol.clone(), eps)?;
        let corrected_0 = correct_cloud(&cloud_0, &corrector)?;

        let dist_eminus1 = hausdorff(&cloud_eps, &cloud_0, NormKind::Eminus1, false)?;
        let dist_e_uncorr = hausdorff(&cloud_eps, &cloud_0, NormKind::E, false)?;
        let dist_e_corr = hausdorff(&cloud_eps, &corrected_0, NormKind::E, false)?;
        let mut dist_cbeta = Vec::new();
        for &b in &params.betas {
            dist_cbeta.push(hausdorff(&cloud_eps, &cloud_0, NormKind::Cbeta(b), false)?);
        }
        rows.push(AttractorDistanceRow { eps, gap, dist_eminus1, dist_e_uncorr, dist_e_corr, dist_cbeta });

        if (eps - eps_mid).abs() < 1e-15 {
            // K from the trajectory-gap growth at the middle epsilon
            let xi = smooth_state(sys_eps.op(), sys_eps.force(), params.seed ^ 0xabcd, ENSEMBLE_AMPLITUDE)?;
            let series = trajectory_gap(&sys_eps, &sys_0, &xi, 6.0, 0.5, GapMode::Raw, None)?;
            let pairs: Vec<(f64, f64)> = series
                .times
                .iter()
                .zip(&series.gap_eminus1)
                .filter(|(t, d)| **t > 0.0 && **d > 0.0)
                .map(|(t, d)| (*t, *d))
                .collect();
            if pairs.len() >= 3 {
                k_fit = Some(fit_exponential(&pairs)?);
            }

            // seed stability: disjoint seed set, relative change of the distance
            let cloud_eps_b = sample_attractor(
                &sys_eps,
                &format!("eps={eps}/seedB"),
                params.n_traj,
                params.t_burn,
                params.n_samples,
                params.delta,
                params.seed.wrapping_add(7_777_777),
            )?;
            let cloud_0_b = sample_attractor(
                &sys_0,
                "homogenised/seedB",
                params.n_traj,
                params.t_burn,
                params.n_samples,
                params.delta,
                params.seed.wrapping_add(9_999_999),
            )?;
            let alt = hausdorff(&cloud_eps_b, &cloud_0_b, NormKind::Eminus1, false)?;
            let denom = dist_eminus1.max(1e-300);
            seed_stability = (alt - dist_eminus1).abs() / denom;
        }
    }

    let k_fit = k_fit.unwrap_or(FitResult { slope: 0.0, intercept: 0.0, r2: 0.0 });
    let k_pos = k_fit.slope.max(0.0);
    let kappa_pred = if h2.sigma > 0.0 { h2.sigma / (k_pos + h2.sigma) } else { 0.0 };

    let gap_pairs: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.gap > 0.0 && r.dist_eminus1 > 0.0).map(|r| (r.gap, r.dist_eminus1)).collect();
    let exponent_vs_gap = match fit_rate(&gap_pairs) {
        Ok(f) if f.r2 >= 0.9 => Some(f),
        Ok(f) => {
            flags.push(format!("E^-1 exponent fit below R^2 = 0.9 (got {:.4}); not reported", f.r2));
            None
        }
        Err(e) => {
            flags.push(format!("E^-1 exponent fit failed: {e}"));
            None
        }
    };

    Ok(AttractorRateReport {
        rows,
        betas: params.betas.clone(),
        h2,
        k_fit,
        kappa_pred,
        exponent_vs_gap,
        seed_stability,
        flags,
    })
}
