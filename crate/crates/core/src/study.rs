//! Study execution: run a parsed configuration, collect CSV artifacts, a
//! plain-text summary with fitted slopes and a manifest recording every
//! parameter, seed and tolerance that entered the run.

use crate::attractor::{attractor_rate_study, AttractorStudyParams};
use crate::cell::{harmonic_mean_oracle_1d, solve_cell};
use crate::config::{StudyConfig, StudyKind};
use crate::elliptic::{elliptic_rate_study, resolvent_gap, Corrector, EllipticOperator};
use crate::expattract::{
    build_cover, construct, fit_omega, fractal_dimension, symmetric_distance_study, verify_attraction,
    wave_pair_covers, CoverMode, ExpAttractorConstants, ToyAffine, WaveDiscrete,
};
use crate::fit::fit_rate;
use crate::wave::{smooth_state, trajectory_gap_full, WaveSystem};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Files produced by a study, as (name, contents).
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn summary(&self) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == "summary.txt").map(|(_, c)| c.as_str())
    }
}

/// Internal constants that affect results, recorded alongside the resolved
/// configuration.
fn manifest(cfg: &StudyConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "homlab.version = {}", env!("CARGO_PKG_VERSION"));
    for (k, v) in &cfg.resolved {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "internal.solve_tol = {:e}", crate::grid::DEFAULT_SOLVE_TOL);
    let _ = writeln!(out, "internal.resolution_factor = {}", crate::elliptic::RESOLUTION_FACTOR);
    let _ = writeln!(out, "internal.power_iteration_seed = 0x5eed0001");
    let _ = writeln!(out, "internal.cbeta_pair_seed = 0xc0ffee");
    let _ = writeln!(out, "internal.cbeta_exhaustive_limit = 512");
    let _ = writeln!(out, "internal.cbeta_sampled_pairs = 10000");
    let _ = writeln!(out, "internal.ensemble_amplitude = 2");
    let _ = writeln!(out, "internal.recursion_base = {}", crate::expattract::RECURSION_BASE);
    out
}

/// Execute the configured study and return its artifacts.
pub fn run_study(cfg: &StudyConfig) -> Result<Artifacts> {
    let mut files = match cfg.study {
        StudyKind::Cell => run_cell(cfg)?,
        StudyKind::EllipticRate => run_elliptic_rate(cfg)?,
        StudyKind::TrajectoryRate => run_trajectory_rate(cfg)?,
        StudyKind::AttractorDist => run_attractor_dist(cfg)?,
        StudyKind::ExpAttractor => run_exp_attractor(cfg)?,
    };
    files.push(("manifest.txt".to_string(), manifest(cfg)));
    Ok(Artifacts { files })
}

/// Write the artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &artifacts.files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn coeff_of(cfg: &StudyConfig) -> Result<&crate::cell::CoefficientField> {
    cfg.coeff.as_ref().ok_or_else(|| Error::Config(vec!["coefficient block is required".into()]))
}

fn grid_of(cfg: &StudyConfig) -> Result<crate::grid::Grid> {
    cfg.grid.ok_or_else(|| Error::Config(vec!["grid block is required".into()]))
}

fn run_cell(cfg: &StudyConfig) -> Result<Vec<(String, String)>> {
    let coeff = coeff_of(cfg)?;
    let sol = solve_cell(coeff, cfg.cell_n)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "study = cell");
    summary.push_str(&sol.metadata());
    let max_n: f64 = (0..sol.dim()).map(|i| sol.corrector(i).max_abs()).fold(0.0, f64::max);
    let _ = writeln!(summary, "max|N| = {max_n:.3e}");
    if coeff.dim() == 1 {
        let oracle = harmonic_mean_oracle_1d(coeff)?;
        let _ = writeln!(summary, "harmonic_mean_oracle = {oracle:.16e}");
        let _ = writeln!(summary, "oracle_discrepancy = {:.3e}", (sol.a_h()[0][0] - oracle).abs());
    }
    Ok(vec![
        ("cell_correctors.csv".to_string(), sol.to_csv()),
        ("summary.txt".to_string(), summary),
    ])
}

fn run_elliptic_rate(cfg: &StudyConfig) -> Result<Vec<(String, String)>> {
    let coeff = coeff_of(cfg)?;
    let grid = grid_of(cfg)?;
    let g = cfg.force.build(grid);
    let report = elliptic_rate_study(coeff, grid, &cfg.eps_ladder, &g, cfg.cell_n, Some(cfg.gap_tol))?;
    let mut summary = String::new();
    let _ = writeln!(summary, "study = elliptic-rate");
    summary.push_str(&report.summary());
    Ok(vec![
        ("elliptic_rates.csv".to_string(), report.to_csv()),
        ("summary.txt".to_string(), summary),
    ])
}

fn run_trajectory_rate(cfg: &StudyConfig) -> Result<Vec<(String, String)>> {
    let coeff = coeff_of(cfg)?;
    let grid = grid_of(cfg)?;
    let seed = cfg.seed.expect("validated");
    let g = cfg.force.build(grid);
    let dt = cfg.dt_factor * grid.h_max();
    let cellsol = solve_cell(coeff, cfg.cell_n)?;
    let op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), grid)?;
    let sys_0 = WaveSystem::new(op_0, cfg.gamma, cfg.nonlinearity, g.clone(), dt)?;

    let mut files = Vec::new();
    let mut gaps = Vec::new();
    let mut raw_series = Vec::new();
    let mut prep_series = Vec::new();
    for &eps in &cfg.eps_ladder {
        let op_eps = EllipticOperator::assemble_oscillatory(coeff, eps, grid)?;
        let gap = resolvent_gap(&op_eps, sys_0.op(), cfg.gap_tol)?;
        let sys_eps = WaveSystem::new(op_eps, cfg.gamma, cfg.nonlinearity, g.clone(), dt)?;
        let xi = smooth_state(sys_eps.op(), sys_eps.force(), seed, 1.0)?;
        let corrector = Corrector::new(cellsol.clone(), eps)?;
        let (raw, prep) =
            trajectory_gap_full(&sys_eps, &sys_0, &xi, cfg.t_final, cfg.sample_every, &corrector)?;

        let mut csv = String::from("t,raw_gap_Eminus1,prep_gap_Eminus1,gap_dt,gap_H1corr,gap_H1uncorr\n");
        for k in 0..raw.times.len() {
            let _ = writeln!(
                csv,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                raw.times[k],
                raw.gap_eminus1[k],
                prep.gap_eminus1[k],
                prep.gap_dt[k],
                prep.gap_h1_corr[k],
                prep.gap_h1_uncorr[k],
            );
        }
        files.push((format!("gaps_eps_{eps}.csv"), csv));
        gaps.push(gap);
        raw_series.push(raw);
        prep_series.push(prep);
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "study = trajectory-rate");
    for (i, eps) in cfg.eps_ladder.iter().enumerate() {
        let _ = writeln!(summary, "resolvent gap at eps = {eps}: {:.6e}", gaps[i]);
    }
    for &t in &cfg.fixed_times {
        let pairs: Vec<(f64, f64)> = gaps
            .iter()
            .zip(&raw_series)
            .map(|(gap, s)| (*gap, s.sup_until(&s.gap_eminus1, t)))
            .filter(|(g, d)| *g > 0.0 && *d > 0.0)
            .collect();
        match fit_rate(&pairs) {
            Ok(f) => {
                let _ = writeln!(
                    summary,
                    "raw E^-1 sup-gap(t <= {t}) vs gap: slope = {:.4}, R^2 = {:.6}",
                    f.slope, f.r2
                );
            }
            Err(e) => {
                let _ = writeln!(summary, "raw E^-1 sup-gap(t <= {t}): fit unavailable ({e})");
            }
        }
    }
    let t_last = cfg.fixed_times.iter().cloned().fold(0.0f64, f64::max).min(cfg.t_final);
    let dt_pairs: Vec<(f64, f64)> = gaps
        .iter()
        .zip(&prep_series)
        .map(|(gap, s)| (*gap, s.sup_until(&s.gap_dt, t_last)))
        .filter(|(g, d)| *g > 0.0 && *d > 0.0)
        .collect();
    match fit_rate(&dt_pairs) {
        Ok(f) => {
            let _ = writeln!(summary, "prepared dt-gap vs gap: exponent = {:.4}, R^2 = {:.6}", f.slope, f.r2);
        }
        Err(e) => {
            let _ = writeln!(summary, "prepared dt-gap: fit unavailable ({e})");
        }
    }
    let h1_pairs: Vec<(f64, f64)> = cfg
        .eps_ladder
        .iter()
        .zip(&prep_series)
        .map(|(eps, s)| (*eps, s.sup_until(&s.gap_h1_corr, t_last)))
        .filter(|(e, d)| *e > 0.0 && *d > 0.0)
        .collect();
    match fit_rate(&h1_pairs) {
        Ok(f) => {
            let _ = writeln!(summary, "corrected H1 error vs eps: slope = {:.4}, R^2 = {:.6}", f.slope, f.r2);
        }
        Err(e) => {
            let _ = writeln!(summary, "corrected H1 error: fit unavailable ({e})");
        }
    }
    let all_below = prep_series.iter().all(|s| {
        s.gap_h1_corr
            .iter()
            .zip(&s.gap_h1_uncorr)
            .skip(1)
            .all(|(c, u)| c < u)
    });
    let _ = writeln!(summary, "corrected below uncorrected at every epsilon and sample time: {all_below}");
    files.push(("summary.txt".to_string(), summary));
    Ok(files)
}

fn run_attractor_dist(cfg: &StudyConfig) -> Result<Vec<(String, String)>> {
    let coeff = coeff_of(cfg)?;
    let grid = grid_of(cfg)?;
    let g = cfg.force.build(grid);
    let params = AttractorStudyParams {
        gamma: cfg.gamma,
        f: cfg.nonlinearity,
        n_traj: cfg.n_traj,
        t_burn: cfg.t_burn,
        n_samples: cfg.n_samples,
        delta: cfg.delta,
        seed: cfg.seed.expect("validated"),
        betas: cfg.betas.clone(),
        gap_tol: cfg.gap_tol,
    };
    let report = attractor_rate_study(coeff, grid, &cfg.eps_ladder, &g, cfg.cell_n, &params)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "study = attractor-dist");
    summary.push_str(&report.summary());
    Ok(vec![
        ("attractor_distances.csv".to_string(), report.to_csv()),
        ("summary.txt".to_string(), summary),
    ])
}

fn run_exp_attractor(cfg: &StudyConfig) -> Result<Vec<(String, String)>> {
    let p = &cfg.expattr;
    let consts =
        ExpAttractorConstants { k_split: p.k_split, lipschitz: p.lipschitz, omega: p.omega };
    let mut summary = String::new();
    let _ = writeln!(summary, "study = exp-attractor ({})", p.mode);
    let mut files = Vec::new();

    if p.mode == "toy" {
        let offset: Vec<f64> = (0..p.toy_dim)
            .map(|i| p.toy_offset.get(i).copied().unwrap_or(0.0))
            .collect();
        let sys0 = ToyAffine::new(p.toy_dim, p.toy_contraction, offset.clone(), p.toy_b_radius, 0.0)?;
        let mut offset_shifted = sys0.clone();
        offset_shifted.shift = p.toy_delta;
        let sys_eps = offset_shifted;

        let start = build_cover(&sys0, 1.0 / p.k_split, p.toy_b_radius, CoverMode::Lattice, 256, p.seed)?;
        let model = build_cover(&sys0, 1.0 / (4.0 * p.k_split), 1.0, CoverMode::Lattice, 256, p.seed ^ 1)?;
        let ea_0 = construct(&sys0, &start, &model, p.k_max, p.cap, consts)?;
        let ea_e = construct(&sys_eps, &start, &model, p.k_max, p.cap, consts)?;

        let _ = writeln!(summary, "N0 = {}, N = {}, k_max = {}", ea_0.n0, ea_0.n_model, ea_0.k_max);
        let _ = writeln!(summary, "card V_k exact: {}", ea_0.cardinalities_exact());
        let _ = writeln!(summary, "D bound = {:.4}, kappa = {:.4}", ea_0.d_bound, ea_0.kappa);

        let decay = verify_attraction(&ea_0, &sys0, 6, 24, p.seed ^ 2)?;
        let _ = writeln!(
            summary,
            "attraction decay base = {:.4} (R^2 = {:.4}){}",
            decay.base,
            decay.r2,
            if decay.conclusive { "" } else { " [INCONCLUSIVE]" }
        );
        let omega_fit = fit_omega(&ea_0, &sys0, 16, p.seed ^ 3)?;
        let _ = writeln!(summary, "omega: configured = {}, fitted = {:.4}", p.omega, omega_fit.slope);

        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radii = [0.4, 0.2, 0.1, 0.05];
        let dim_est = fractal_dimension(&ea_0.m_points, &radii, &norm)?;
        let _ = writeln!(
            summary,
            "box-count dimension = {:.4} (bound {:.4})",
            dim_est.slope, ea_0.d_bound
        );

        let report = symmetric_distance_study(
            &sys_eps,
            &sys0,
            &ea_e,
            &ea_0,
            (&model, &model),
            (&start, &start),
            None,
            24,
            p.seed ^ 4,
        )?;
        let _ = writeln!(summary, "map gap delta = {}", p.toy_delta);
        let _ = writeln!(summary, "dist^s_Eminus1(M_eps, M_0) = {:.6e}", report.dist_eminus1);
        let _ = writeln!(summary, "driver = {:.6e}, fitted C = {:.4}", report.driver, report.fitted_c);
        for (k, d) in report.level_distances.iter().enumerate() {
            let _ = writeln!(summary, "dist^s(E_{}(eps), E_{}(0)) = {:.6e}", k + 1, k + 1, d);
        }
        files.push(("exp_attractor_levels.csv".to_string(), ea_0.to_csv()));
        let mut decay_csv = String::from("k,dist\n");
        for (k, d) in decay.distances.iter().enumerate() {
            let _ = writeln!(decay_csv, "{k},{d:.16e}");
        }
        files.push(("attraction_decay.csv".to_string(), decay_csv));
    } else {
        // coarse wave pair over the epsilon ladder
        let coeff = coeff_of(cfg)?;
        let grid = grid_of(cfg)?;
        let g = cfg.force.build(grid);
        let dt = cfg.dt_factor * grid.h_max();
        let cellsol = solve_cell(coeff, cfg.cell_n)?;
        let op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), grid)?;
        let sys_0 = WaveSystem::new(op_0, cfg.gamma, cfg.nonlinearity, g.clone(), dt)?;
        let wd_0 = WaveDiscrete::new(&sys_0, p.wave_t_map, 3.0)?;
        let k_hat = wd_0.fit_k_split(4, p.seed ^ 7)?;
        let _ = writeln!(summary, "fitted splitting constant K = {k_hat:.4}");
        let k_use = k_hat.max(p.k_split);
        let mut prev_dist = f64::INFINITY;
        for &eps in &cfg.eps_ladder {
            let op_eps = EllipticOperator::assemble_oscillatory(coeff, eps, grid)?;
            let gap = resolvent_gap(&op_eps, sys_0.op(), cfg.gap_tol)?;
            let sys_eps = WaveSystem::new(op_eps, cfg.gamma, cfg.nonlinearity, g.clone(), dt)?;
            let wd_eps = WaveDiscrete::new(&sys_eps, p.wave_t_map, 3.0)?;
            let (model_e, model_0) =
                wave_pair_covers(&wd_eps, &wd_0, gap, 1.0 / (4.0 * k_use), 1.0, 48, p.seed)?;
            let (start_e, start_0) =
                wave_pair_covers(&wd_eps, &wd_0, gap, 1.0 / k_use, 3.0, 48, p.seed ^ 9)?;
            let ea_0 = construct(&wd_0, &start_0, &model_0, p.k_max, p.cap, consts)?;
            let ea_e = construct(&wd_eps, &start_e, &model_e, p.k_max, p.cap, consts)?;
            let report = symmetric_distance_study(
                &wd_eps,
                &wd_0,
                &ea_e,
                &ea_0,
                (&model_e, &model_0),
                (&start_e, &start_0),
                None,
                8,
                p.seed ^ 11,
            )?;
            let _ = writeln!(
                summary,
                "eps = {eps}: gap = {gap:.4e}, dist^s_Eminus1(M_eps, M_0) = {:.6e}, non-increasing: {}",
                report.dist_eminus1,
                report.dist_eminus1 <= prev_dist * (1.0 + 1e-12)
            );
            prev_dist = report.dist_eminus1;
            if model_e.flagged || start_e.flagged {
                let _ = writeln!(
                    summary,
                    "flag: greedy cover at eps = {eps} missed its target radius (achieved {:.3e} / {:.3e})",
                    model_e.achieved_mu, start_e.achieved_mu
                );
            }
        }
    }

    files.push(("summary.txt".to_string(), summary));
    Ok(files)
}
