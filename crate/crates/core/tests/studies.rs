//! Integration checks of the heavier study paths: the wave-mode
//! exponential-attractor pair and the config-driven runners.

use homlab::cell::{solve_cell, two_phase_1d};
use homlab::config::StudyConfig;
use homlab::elliptic::{resolvent_gap, EllipticOperator};
use homlab::expattract::{
    construct, max_k_under_cap, symmetric_distance_study, verify_attraction, wave_pair_covers,
    ExpAttractorConstants, WaveDiscrete,
};
use homlab::grid::{BoundaryCondition, Grid, GridFunction};
use homlab::study::run_study;
use homlab::wave::{Nonlinearity, WaveSystem};
use std::f64::consts::PI;

#[test]
fn coarse_wave_attraction_decays() {
    let grid = Grid::new(1, [1.0, 0.0], 24, BoundaryCondition::Dirichlet).unwrap();
    let coeff = two_phase_1d(1.0, 4.0).unwrap();
    let op = EllipticOperator::assemble_oscillatory(&coeff, 1.0, grid).unwrap();
    let g = GridFunction::from_fn(grid, |x| 0.3 * (PI * x[0]).sin());
    let sys = WaveSystem::new(op, 0.8, Nonlinearity::Cubic, g, grid.h(0) / 2.0).unwrap();
    let wd = WaveDiscrete::new(&sys, 4.0, 3.0).unwrap();
    let k_hat = wd.fit_k_split(4, 3).unwrap().max(0.5);
    let start =
        homlab::expattract::build_cover(&wd, 1.0 / k_hat, 3.0, homlab::expattract::CoverMode::GreedyNet, 64, 5)
            .unwrap();
    let model = homlab::expattract::build_cover(
        &wd,
        1.0 / (4.0 * k_hat),
        1.0,
        homlab::expattract::CoverMode::GreedyNet,
        64,
        6,
    )
    .unwrap();
    let consts = ExpAttractorConstants { k_split: k_hat, lipschitz: 1.05, omega: 0.95 };
    let k_max = max_k_under_cap(start.card(), model.card(), 3000).clamp(1, 3);
    let ea = construct(&wd, &start, &model, k_max, 100_000, consts).unwrap();
    let decay = verify_attraction(&ea, &wd, 5, 8, 11).unwrap();
    assert!(decay.base < 1.0, "decay base {}", decay.base);
    assert!(decay.r2 >= 0.9 || !decay.conclusive, "fit quality must be reported");
    assert!(decay.conclusive, "coarse wave attraction fit inconclusive (R^2 = {})", decay.r2);
}

#[test]
fn wave_pair_symmetric_distance_non_increasing() {
    let n = 256;
    let grid = Grid::new(1, [1.0, 0.0], n, BoundaryCondition::Dirichlet).unwrap();
    let coeff = two_phase_1d(1.0, 4.0).unwrap();
    let cellsol = solve_cell(&coeff, 512).unwrap();
    let g = GridFunction::from_fn(grid, |x| 0.3 * (PI * x[0]).sin());
    let dt = grid.h(0) / 2.0;
    let op0 = EllipticOperator::assemble_constant(cellsol.a_h(), grid).unwrap();
    let sys0 = WaveSystem::new(op0, 0.8, Nonlinearity::Cubic, g.clone(), dt).unwrap();
    let wd0 = WaveDiscrete::new(&sys0, 2.0, 3.0).unwrap();
    let k_hat = wd0.fit_k_split(3, 17).unwrap().max(0.5);
    let consts = ExpAttractorConstants { k_split: k_hat, lipschitz: 1.05, omega: 0.95 };

    let mut dists = Vec::new();
    for eps in [1.0 / 8.0, 1.0 / 16.0] {
        let ope = EllipticOperator::assemble_oscillatory(&coeff, eps, grid).unwrap();
        let gap = resolvent_gap(&ope, sys0.op(), 1e-4).unwrap();
        let syse = WaveSystem::new(ope, 0.8, Nonlinearity::Cubic, g.clone(), dt).unwrap();
        let wde = WaveDiscrete::new(&syse, 2.0, 3.0).unwrap();
        let (model_e, model_0) = wave_pair_covers(&wde, &wd0, gap, 1.0 / (4.0 * k_hat), 1.0, 32, 23).unwrap();
        let (start_e, start_0) = wave_pair_covers(&wde, &wd0, gap, 1.0 / k_hat, 3.0, 32, 29).unwrap();
        let k_max = max_k_under_cap(start_0.card(), model_0.card(), 2000).clamp(1, 2);
        let ea0 = construct(&wd0, &start_0, &model_0, k_max, 100_000, consts).unwrap();
        let eae = construct(&wde, &start_e, &model_e, k_max, 100_000, consts).unwrap();
        let rep = symmetric_distance_study(
            &wde,
            &wd0,
            &eae,
            &ea0,
            (&model_e, &model_0),
            (&start_e, &start_0),
            None,
            6,
            31,
        )
        .unwrap();
        // the paired second components obey the capped gap bound by construction
        dists.push(rep.dist_eminus1);
    }
    assert!(
        dists[1] <= dists[0] * (1.0 + 1e-12),
        "dist^s at eps = 1/16 ({:.3e}) exceeds eps = 1/8 ({:.3e})",
        dists[1],
        dists[0]
    );
}

#[test]
fn wave_pair_cover_centers_obey_gap_bound() {
    let n = 256;
    let grid = Grid::new(1, [1.0, 0.0], n, BoundaryCondition::Dirichlet).unwrap();
    let coeff = two_phase_1d(1.0, 4.0).unwrap();
    let cellsol = solve_cell(&coeff, 512).unwrap();
    let g = GridFunction::from_fn(grid, |x| 0.3 * (PI * x[0]).sin());
    let dt = grid.h(0) / 2.0;
    let op0 = EllipticOperator::assemble_constant(cellsol.a_h(), grid).unwrap();
    let sys0 = WaveSystem::new(op0, 0.8, Nonlinearity::Cubic, g.clone(), dt).unwrap();
    let wd0 = WaveDiscrete::new(&sys0, 2.0, 3.0).unwrap();
    let eps = 1.0 / 8.0;
    let ope = EllipticOperator::assemble_oscillatory(&coeff, eps, grid).unwrap();
    let gap = resolvent_gap(&ope, sys0.op(), 1e-5).unwrap();
    let syse = WaveSystem::new(ope, 0.8, Nonlinearity::Cubic, g.clone(), dt).unwrap();
    let wde = WaveDiscrete::new(&syse, 2.0, 3.0).unwrap();
    let mu = 0.5;
    let (cover_e, cover_0) = wave_pair_covers(&wde, &wd0, gap, mu, 1.0, 32, 23).unwrap();
    assert_eq!(cover_e.card(), cover_0.card());
    let ws = homlab::grid::NormWorkspace::new(grid);
    for (ce, c0) in cover_e.centers.iter().zip(&cover_0.centers) {
        let se = wde.unpack(ce).unwrap();
        let s0 = wd0.unpack(c0).unwrap();
        let dq = ws.l2(&se.v().sub(s0.v()).unwrap());
        assert!(dq <= (mu / 2.0).min(gap) + 1e-12, "second-component gap {dq:.3e}");
        // first components solve the paired resolvent problems: A_eps u_eps = A_0 u_0
        let lhs = wde.system().op().apply(se.u()).unwrap();
        let rhs = wd0.system().op().apply(s0.u()).unwrap();
        let rel = ws.l2(&lhs.sub(&rhs).unwrap()) / ws.l2(&rhs).max(1e-300);
        assert!(rel <= 1e-6, "paired first components mismatch {rel:.3e}");
    }
}

#[test]
fn trajectory_rate_study_runs_from_config() {
    let text = "study = trajectory-rate
grid.n = 512
eps.ladder = 1/8, 1/16, 1/32
cell.n = 256
force.amplitude = 0.5
wave.gamma = 0.5
wave.f = cubic
time.t_final = 1
time.sample_every = 0.25
time.fixed = 0.5, 1
gap.tol = 1e-4
seed = 7
";
    let cfg = StudyConfig::from_text(text).unwrap();
    let artifacts = run_study(&cfg).unwrap();
    let names: Vec<&str> = artifacts.files.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"gaps_eps_0.125.csv"), "{names:?}");
    assert!(names.contains(&"summary.txt"));
    let summary = artifacts.summary().unwrap();
    assert!(summary.contains("raw E^-1 sup-gap"), "{summary}");
    assert!(summary.contains("prepared dt-gap"), "{summary}");
    assert!(summary.contains("corrected below uncorrected"), "{summary}");
}

#[test]
fn attractor_study_runs_from_config_and_flags_short_ladders() {
    let text = "study = attractor-dist
grid.n = 128
eps.ladder = 1/4, 1/8
cell.n = 128
force.amplitude = 0.5
wave.gamma = 0.5
wave.f = cubic
ensemble.n_traj = 8
ensemble.t_burn = 20
ensemble.n_samples = 2
ensemble.delta = 1
gap.tol = 1e-4
seed = 11
";
    let cfg = StudyConfig::from_text(text).unwrap();
    let artifacts = run_study(&cfg).unwrap();
    let summary = artifacts.summary().unwrap();
    // a two-point ladder cannot support an exponent fit; it must be flagged,
    // never silently reported
    assert!(
        summary.contains("INCONCLUSIVE") || summary.contains("flag:"),
        "{summary}"
    );
    let csv = &artifacts.files.iter().find(|(n, _)| n == "attractor_distances.csv").unwrap().1;
    assert_eq!(csv.lines().count(), 3, "{csv}");
}
