//! Oscillatory and homogenised elliptic operators, resolvent problems, the
//! two-scale corrector and the prepared-data projector.
//!
//! Operators are held as a stiffness form K plus lumped mass weights M; the
//! strong action is M^-1 (K + shift M). The shift is 0 under Dirichlet
//! conditions and +1 under Neumann or periodic conditions, which works with
//! the shifted system A + 1 throughout.

use crate::cell::{eval_cell_at, CellSolution, CoefficientField};
use crate::fit::{fit_rate, FitResult};
use crate::grid::{assemble_stiffness, gradient, BoundaryCondition, Grid, GridFunction, NormWorkspace};
use crate::sparse::{pcg_ssor, CsrSym};
use crate::wave::State;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;

/// Fine grids must resolve the oscillation: h <= eps / RESOLUTION_FACTOR.
pub const RESOLUTION_FACTOR: f64 = 16.0;
const POWER_ITERATION_CAP: usize = 400;
const POWER_SEED: u64 = 0x5eed_0001;

/// Coefficient source of an assembled operator.
#[derive(Debug, Clone)]
pub enum CoeffSource {
    /// a(x / eps) for a periodic coefficient field.
    Oscillatory { coeff: CoefficientField, eps: f64 },
    /// Constant (homogenised) matrix.
    Constant([[f64; 2]; 2]),
}

/// Assembled -div(a grad .) (+ shift) on a grid.
pub struct EllipticOperator {
    grid: Grid,
    source: CoeffSource,
    shift: f64,
    stiff: CsrSym,
    combined: CsrSym,
    mass: Vec<f64>,
    solve_tol: f64,
    ssor_omega: f64,
}

impl EllipticOperator {
    /// Assemble for an oscillatory coefficient a(x / eps). Fails if the grid
    /// does not resolve eps (h > eps / 16) with a suggestion for n.
    pub fn assemble_oscillatory(coeff: &CoefficientField, eps: f64, grid: Grid) -> Result<Self> {
        if coeff.dim() != grid.dim() {
            return Err(Error::GridMismatch);
        }
        if !(eps > 0.0) {
            return Err(Error::Ellipticity(format!("eps must be positive, got {eps}")));
        }
        let h = grid.h_max();
        if h > eps / RESOLUTION_FACTOR {
            let ext = (0..grid.dim()).map(|ax| grid.extent(ax)).fold(0.0, f64::max);
            let suggested_n = (ext * RESOLUTION_FACTOR / eps).ceil() as usize;
            return Err(Error::UnderResolved { eps, h, suggested_n });
        }
        let stiff = assemble_stiffness(&grid, |x| coeff.eval([x[0] / eps, x[1] / eps]));
        Ok(Self::finish(grid, CoeffSource::Oscillatory { coeff: coeff.clone(), eps }, stiff))
    }

    /// Assemble for a constant (typically homogenised) matrix.
    pub fn assemble_constant(a: [[f64; 2]; 2], grid: Grid) -> Result<Self> {
        if (a[0][1] - a[1][0]).abs() > 1e-12 {
            return Err(Error::Ellipticity("constant matrix must be symmetric".into()));
        }
        let lo = if grid.dim() == 1 {
            a[0][0]
        } else {
            let tr = a[0][0] + a[1][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            tr / 2.0 - (tr * tr / 4.0 - det).max(0.0).sqrt()
        };
        if lo <= 0.0 {
            return Err(Error::Ellipticity(format!("constant matrix not positive definite (lambda_min = {lo:.3e})")));
        }
        let stiff = assemble_stiffness(&grid, |_| a);
        Ok(Self::finish(grid, CoeffSource::Constant(a), stiff))
    }

    /// Identity-coefficient reference operator on a grid (the fixed Laplacian
    /// used by dual norms).
    pub fn reference(grid: Grid) -> Self {
        let stiff = assemble_stiffness(&grid, |_| [[1.0, 0.0], [0.0, 1.0]]);
        Self::finish(grid, CoeffSource::Constant([[1.0, 0.0], [0.0, 1.0]]), stiff)
    }

    fn finish(grid: Grid, source: CoeffSource, stiff: CsrSym) -> Self {
        let shift = match grid.bc() {
            BoundaryCondition::Dirichlet => 0.0,
            _ => 1.0,
        };
        let mass = grid.mass_weights();
        let combined = if shift == 0.0 { stiff.clone() } else { stiff.with_added_diagonal(&mass, shift) };
        // SSOR relaxation tuned for the uniform-grid Laplacian; suboptimal
        // values only cost iterations
        let omega = 2.0 / (1.0 + (std::f64::consts::PI / grid.cells() as f64).sin());
        EllipticOperator {
            grid,
            source,
            shift,
            stiff,
            combined,
            mass,
            solve_tol: crate::grid::DEFAULT_SOLVE_TOL,
            ssor_omega: omega,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn source(&self) -> &CoeffSource {
        &self.source
    }

    pub fn solve_tol(&self) -> f64 {
        self.solve_tol
    }

    pub fn set_solve_tol(&mut self, tol: f64) {
        self.solve_tol = tol;
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Stiffness + shift matrix (the SPD system matrix).
    pub fn system_matrix(&self) -> &CsrSym {
        &self.combined
    }

    /// Plain stiffness form without the shift.
    pub fn stiffness_matrix(&self) -> &CsrSym {
        &self.stiff
    }

    /// Weak action (K + shift M) u as a raw vector.
    pub fn apply_weak(&self, u: &GridFunction) -> Vec<f64> {
        self.combined.mul_vec_alloc(u.values())
    }

    /// Strong action A u = M^-1 (K + shift M) u.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut w = self.apply_weak(u);
        for (wi, mi) in w.iter_mut().zip(&self.mass) {
            *wi /= *mi;
        }
        GridFunction::from_values(self.grid, w)
    }

    /// Energy form u' (K + shift M) v = (a grad u, grad v) + shift (u, v).
    pub fn energy_form(&self, u: &GridFunction, v: &GridFunction) -> f64 {
        let kv = self.apply_weak(v);
        u.values().iter().zip(&kv).map(|(a, b)| a * b).sum()
    }

    /// Solve A u = g for a strong right-hand side g (weak system
    /// (K + shift M) u = M g), relative residual <= solve_tol.
    pub fn apply_inverse(&self, g: &GridFunction) -> Result<GridFunction> {
        if g.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let rhs: Vec<f64> = g.values().iter().zip(&self.mass).map(|(v, m)| v * m).collect();
        self.solve_weak(&rhs)
    }

    /// Solve (K + shift M) u = rhs for an already weak right-hand side.
    pub fn solve_weak(&self, rhs: &[f64]) -> Result<GridFunction> {
        let max_iter = 20 * self.combined.n() + 1000;
        let sol = pcg_ssor(&self.combined, rhs, self.solve_tol, max_iter, self.ssor_omega)?;
        GridFunction::from_values(self.grid, sol.x)
    }
}

/// Largest |eigenvalue| of D = A_eps^-1 - A_0^-1 in the mass-weighted L2
/// inner product, by power iteration; every application costs two sparse
/// solves. Converges when the estimate changes by at most `tol` relatively.
pub fn resolvent_gap(op_eps: &EllipticOperator, op_0: &EllipticOperator, tol: f64) -> Result<f64> {
    if op_eps.grid() != op_0.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *op_eps.grid();
    let ws = NormWorkspace::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = GridFunction::from_values(grid, (0..grid.dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let nv = ws.l2(&v);
    v = v.scaled(1.0 / nv);

    let apply_d = |x: &GridFunction| -> Result<GridFunction> {
        let a = op_eps.apply_inverse(x)?;
        let b = op_0.apply_inverse(x)?;
        a.sub(&b)
    };

    let mut estimate = 0.0f64;
    for it in 0..POWER_ITERATION_CAP {
        let w = apply_d(&v)?;
        let nw = ws.l2(&w);
        if nw <= 1e-300 {
            return Ok(0.0);
        }
        let new_estimate = nw; // ||D v|| with ||v|| = 1
        v = w.scaled(1.0 / nw);
        if it > 0 && (new_estimate - estimate).abs() <= tol * new_estimate.max(f64::MIN_POSITIVE) {
            return Ok(new_estimate);
        }
        estimate = new_estimate;
    }
    Err(Error::PowerIterationStagnation(POWER_ITERATION_CAP))
}

/// First-order two-scale correction T_eps w = w + eps N_i(x / eps) d_i w.
pub struct Corrector {
    cellsol: CellSolution,
    eps: f64,
}

impl Corrector {
    pub fn new(cellsol: CellSolution, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Ellipticity(format!("eps must be positive, got {eps}")));
        }
        Ok(Corrector { cellsol, eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn cell_solution(&self) -> &CellSolution {
        &self.cellsol
    }

    /// Apply the corrector pointwise. No boundary condition is enforced; the
    /// result violates homogeneous Dirichlet data in general.
    pub fn apply(&self, u0: &GridFunction) -> Result<GridFunction> {
        if u0.grid().dim() != self.cellsol.dim() {
            return Err(Error::GridMismatch);
        }
        let grads = gradient(u0);
        let mut out = u0.clone();
        let grid = *u0.grid();
        for d in 0..grid.dofs() {
            let x = grid.dof_coord(d);
            let mut corr = 0.0;
            for (i, gi) in grads.iter().enumerate() {
                corr += eval_cell_at(&self.cellsol, i, x, self.eps) * gi.values()[d];
            }
            out.values_mut()[d] += self.eps * corr;
        }
        Ok(out)
    }
}

/// Pair corrector of states: T applied to the first component only.
pub fn correct_state(corr: &Corrector, xi: &State) -> Result<State> {
    Ok(State::new(corr.apply(xi.u())?, xi.v().clone(), xi.t())?)
}

/// Prepared initial data: componentwise A_0^-1 A_eps (shifted operators under
/// Neumann/periodic conditions). The inverse map is `prepare_initial(op_0,
/// op_eps, .)`.
pub fn prepare_initial(op_eps: &EllipticOperator, op_0: &EllipticOperator, xi: &State) -> Result<State> {
    if op_eps.grid() != op_0.grid() {
        return Err(Error::GridMismatch);
    }
    let map = |c: &GridFunction| -> Result<GridFunction> {
        let rhs = op_eps.apply_weak(c);
        op_0.solve_weak(&rhs)
    };
    State::new(map(xi.u())?, map(xi.v())?, xi.t())
}

/// One row of an elliptic rate study.
#[derive(Debug, Clone, Copy)]
pub struct EllipticRateRow {
    pub eps: f64,
    pub err_l2: f64,
    pub err_h1_corr: f64,
    pub gap: f64,
}

/// Per-epsilon errors of resolvent problems against the homogenised limit,
/// with fitted log-log slopes. The gap column is only present when a gap
/// tolerance was supplied.
#[derive(Debug, Clone)]
pub struct EllipticRateReport {
    pub rows: Vec<EllipticRateRow>,
    pub slope_l2: FitResult,
    pub slope_h1_corr: FitResult,
    pub slope_gap: Option<FitResult>,
}

impl EllipticRateReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,err_L2,err_H1corr,gap\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", r.eps, r.err_l2, r.err_h1_corr, r.gap);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "L2 rate: slope = {:.4}, intercept = {:.4}, R^2 = {:.6}",
            self.slope_l2.slope, self.slope_l2.intercept, self.slope_l2.r2
        );
        let _ = writeln!(
            out,
            "H1 corrector rate: slope = {:.4}, intercept = {:.4}, R^2 = {:.6}",
            self.slope_h1_corr.slope, self.slope_h1_corr.intercept, self.slope_h1_corr.r2
        );
        if let Some(gap) = &self.slope_gap {
            let _ = writeln!(
                out,
                "resolvent gap rate: slope = {:.4}, intercept = {:.4}, R^2 = {:.6}",
                gap.slope, gap.intercept, gap.r2
            );
        }
        out
    }
}

/// Validate a dyadic epsilon ladder against the resolution rule of a shared
/// fine grid. Returns the violations instead of failing fast so a caller can
/// report all of them.
pub fn ladder_violations(grid: &Grid, eps_list: &[f64]) -> Vec<String> {
    let mut problems = Vec::new();
    let h = grid.h_max();
    for &eps in eps_list {
        if !(eps > 0.0) {
            problems.push(format!("epsilon {eps} is not positive"));
            continue;
        }
        let k = (1.0 / eps).log2();
        if (k - k.round()).abs() > 1e-9 {
            problems.push(format!("epsilon {eps} is not dyadic (1/2^k)"));
        }
        if h > eps / RESOLUTION_FACTOR {
            let ext = (0..grid.dim()).map(|ax| grid.extent(ax)).fold(0.0, f64::max);
            let suggested = (ext * RESOLUTION_FACTOR / eps).ceil() as usize;
            problems.push(format!(
                "epsilon {eps} under-resolved: h = {h:.3e} > eps/16; need n >= {suggested}"
            ));
        }
    }
    problems
}

/// Per-epsilon L2 error, H1 corrector error and resolvent gap for the
/// problem A u = g on one shared fine grid, with fitted slopes.
pub fn elliptic_rate_study(
    coeff: &CoefficientField,
    grid: Grid,
    eps_list: &[f64],
    g: &GridFunction,
    n_cell: usize,
    gap_tol: Option<f64>,
) -> Result<EllipticRateReport> {
    let problems = ladder_violations(&grid, eps_list);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let cellsol = crate::cell::solve_cell(coeff, n_cell)?;
    let op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), grid)?;
    let u_0 = op_0.apply_inverse(g)?;
    let ws = NormWorkspace::new(grid);

    // independent per-epsilon solves, collected in ladder order
    let rows: Result<Vec<EllipticRateRow>> = eps_list
        .par_iter()
        .map(|&eps| {
            let op_eps = EllipticOperator::assemble_oscillatory(coeff, eps, grid)?;
            let u_eps = op_eps.apply_inverse(g)?;
            let corr = Corrector::new(cellsol.clone(), eps)?;
            let corrected = corr.apply(&u_0)?;
            let err_l2 = ws.l2(&u_eps.sub(&u_0)?);
            let err_h1_corr = ws.h1(&u_eps.sub(&corrected)?);
            let gap = match gap_tol {
                Some(tol) => resolvent_gap(&op_eps, &op_0, tol)?,
                None => f64::NAN,
            };
            Ok(EllipticRateRow { eps, err_l2, err_h1_corr, gap })
        })
        .collect();
    let rows = rows?;

    let pairs = |f: &dyn Fn(&EllipticRateRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.eps, f(r))).collect()
    };
    let slope_l2 = fit_rate(&pairs(&|r| r.err_l2))?;
    let slope_h1_corr = fit_rate(&pairs(&|r| r.err_h1_corr))?;
    let slope_gap = match gap_tol {
        Some(_) => Some(fit_rate(&pairs(&|r| r.gap))?),
        None => None,
    };
    Ok(EllipticRateReport { rows, slope_l2, slope_h1_corr, slope_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{solve_cell, two_phase_1d, CoefficientKind};
    use crate::grid::{norm, NormKind};
    use std::f64::consts::PI;

    fn unit_grid_1d(n: usize, bc: BoundaryCondition) -> Grid {
        Grid::new(1, [1.0, 0.0], n, bc).unwrap()
    }

    #[test]
    fn constant_coefficient_matches_standard_laplacian() {
        let g = unit_grid_1d(8, BoundaryCondition::Dirichlet);
        let coeff = CoefficientField::new(1, CoefficientKind::Constant([[1.0, 0.0], [0.0, 1.0]])).unwrap();
        let op = EllipticOperator::assemble_oscillatory(&coeff, 2.0, g).unwrap();
        // strong action on e_3 is the (-1, 2, -1)/h^2 stencil row
        let mut e = GridFunction::zeros(g);
        e.values_mut()[3] = 1.0;
        let y = op.apply(&e).unwrap();
        let h2 = g.h(0) * g.h(0);
        assert!((y.values()[3] - 2.0 / h2).abs() < 1e-9);
        assert!((y.values()[2] + 1.0 / h2).abs() < 1e-9);
    }

    #[test]
    fn constant_coefficient_operator_is_eps_independent() {
        let g = unit_grid_1d(64, BoundaryCondition::Dirichlet);
        let coeff = CoefficientField::new(1, CoefficientKind::Constant([[2.0, 0.0], [0.0, 2.0]])).unwrap();
        let op_a = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 2.0, g).unwrap();
        let op_b = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 4.0, g).unwrap();
        let u = GridFunction::from_fn(g, |x| (3.0 * x[0]).sin());
        let ya = op_a.apply(&u).unwrap();
        let yb = op_b.apply(&u).unwrap();
        assert_eq!(ya.values(), yb.values());
    }

    #[test]
    fn under_resolved_assembly_is_rejected_with_suggestion() {
        let g = unit_grid_1d(64, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        match EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 8.0, g) {
            Err(Error::UnderResolved { suggested_n, .. }) => assert_eq!(suggested_n, 128),
            Err(other) => panic!("expected UnderResolved, got {other:?}"),
            Ok(_) => panic!("under-resolved assembly was accepted"),
        }
    }

    #[test]
    fn apply_inverse_solves_eigenpair() {
        let g = unit_grid_1d(128, BoundaryCondition::Dirichlet);
        let coeff = CoefficientField::new(1, CoefficientKind::Constant([[1.0, 0.0], [0.0, 1.0]])).unwrap();
        let op = EllipticOperator::assemble_oscillatory(&coeff, 1.0, g).unwrap();
        let rhs = GridFunction::from_fn(g, |x| PI * PI * (PI * x[0]).sin());
        let u = op.apply_inverse(&rhs).unwrap();
        let mut worst = 0.0f64;
        for d in 0..g.dofs() {
            worst = worst.max((u.values()[d] - (PI * g.dof_coord(d)[0]).sin()).abs());
        }
        assert!(worst < 1e-3, "worst {worst}");

        let zero = GridFunction::zeros(g);
        assert_eq!(op.apply_inverse(&zero).unwrap().values(), zero.values());
    }

    #[test]
    fn two_phase_solution_matches_exact_integration() {
        // A_eps u = 1 on (0,1), Dirichlet: flux F(x) = c - x, u' = F / a(x/eps);
        // with cells aligned to eps the nodal solution is exact up to solver tol
        let n = 256;
        let eps = 1.0 / 8.0;
        let g = unit_grid_1d(n, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let op = EllipticOperator::assemble_oscillatory(&coeff, eps, g).unwrap();
        let one = GridFunction::from_fn(g, |_| 1.0);
        let u = op.apply_inverse(&one).unwrap();

        // exact: u(x) = int_0^x (c - t)/a dt with c fixed by u(1) = 0,
        // integrated cell by cell on the fine mesh (a constant per cell)
        let h = g.h(0);
        let a_of_cell = |c: usize| -> f64 { coeff.eval([((c as f64 + 0.5) * h) / eps, 0.0])[0][0] };
        // first pass: integral of 1/a and t/a over (0,1)
        let mut int_inv_a = 0.0;
        let mut int_t_inv_a = 0.0;
        for c in 0..n {
            let (x0, x1) = (c as f64 * h, (c + 1) as f64 * h);
            let a = a_of_cell(c);
            int_inv_a += (x1 - x0) / a;
            int_t_inv_a += (x1 * x1 - x0 * x0) / (2.0 * a);
        }
        let cconst = int_t_inv_a / int_inv_a;
        let mut exact_at = vec![0.0f64; n + 1];
        for c in 0..n {
            let (x0, x1) = (c as f64 * h, (c + 1) as f64 * h);
            let a = a_of_cell(c);
            exact_at[c + 1] = exact_at[c] + (cconst * (x1 - x0) - (x1 * x1 - x0 * x0) / 2.0) / a;
        }
        let mut worst = 0.0f64;
        for d in 0..g.dofs() {
            worst = worst.max((u.values()[d] - exact_at[d + 1]).abs());
        }
        assert!(worst < 1e-6, "worst nodal error {worst:e}");
    }

    #[test]
    fn resolvent_gap_of_identical_operators_vanishes() {
        let g = unit_grid_1d(64, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let a = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 4.0, g).unwrap();
        let b = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 4.0, g).unwrap();
        assert!(resolvent_gap(&a, &b, 1e-10).unwrap() <= 1e-12);
    }

    #[test]
    fn resolvent_gap_matches_dense_eigendecomposition() {
        let n = 64;
        let g = unit_grid_1d(n, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let eps = 1.0 / 4.0;
        let mut op_e = EllipticOperator::assemble_oscillatory(&coeff, eps, g).unwrap();
        let cellsol = solve_cell(&coeff, 512).unwrap();
        let mut op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), g).unwrap();
        op_e.set_solve_tol(1e-13);
        op_0.set_solve_tol(1e-13);

        let gap = resolvent_gap(&op_e, &op_0, 1e-12).unwrap();

        // dense oracle: columns of D, then symmetric eigenvalues (mass is
        // uniform on a Dirichlet grid so the weighted problem is a scalar
        // rescaling of the plain one)
        let dofs = g.dofs();
        let mut dmat = nalgebra::DMatrix::<f64>::zeros(dofs, dofs);
        for j in 0..dofs {
            let mut e = GridFunction::zeros(g);
            e.values_mut()[j] = 1.0;
            let col = op_e.apply_inverse(&e).unwrap().sub(&op_0.apply_inverse(&e).unwrap()).unwrap();
            for i in 0..dofs {
                dmat[(i, j)] = col.values()[i];
            }
        }
        // enforce exact symmetry of the oracle matrix before factorising
        let dsym = (dmat.clone() + dmat.transpose()) * 0.5;
        let eig = dsym.symmetric_eigen();
        let dense_gap = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        assert!((gap - dense_gap).abs() <= 1e-8, "power {gap:e} vs dense {dense_gap:e}");
    }

    #[test]
    fn resolvent_gap_scales_linearly_in_eps() {
        let g = unit_grid_1d(2048, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let cellsol = solve_cell(&coeff, 1024).unwrap();
        let op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), g).unwrap();
        let mut gaps = Vec::new();
        for k in [8.0, 16.0, 32.0] {
            let op_e = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / k, g).unwrap();
            gaps.push(resolvent_gap(&op_e, &op_0, 1e-8).unwrap());
        }
        for w in gaps.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn smallest_eigenvalue_within_rayleigh_bounds() {
        // dense oracle at n = 256: smallest eigenvalue of A_eps within
        // [nu pi^2, 1.1 pi^2 / nu]
        let n = 256;
        let g = unit_grid_1d(n, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let op = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 8.0, g).unwrap();
        let dofs = g.dofs();
        let h = g.h(0);
        let mut kmat = nalgebra::DMatrix::<f64>::zeros(dofs, dofs);
        for j in 0..dofs {
            let mut e = GridFunction::zeros(g);
            e.values_mut()[j] = 1.0;
            let col = op.apply_weak(&e);
            for i in 0..dofs {
                kmat[(i, j)] = col[i] / h; // uniform mass
            }
        }
        let eig = ((kmat.clone() + kmat.transpose()) * 0.5).symmetric_eigen();
        let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let nu = coeff.nu();
        assert!(
            lambda_min >= nu * PI * PI && lambda_min <= 1.1 * PI * PI / nu,
            "lambda_min = {lambda_min}"
        );
    }

    #[test]
    fn corrector_is_identity_for_constant_coefficient() {
        let coeff = CoefficientField::new(1, CoefficientKind::Constant([[2.0, 0.0], [0.0, 2.0]])).unwrap();
        let sol = solve_cell(&coeff, 32).unwrap();
        let corr = Corrector::new(sol, 1.0 / 8.0).unwrap();
        let g = unit_grid_1d(128, BoundaryCondition::Dirichlet);
        let u = GridFunction::from_fn(g, |x| x[0] * (1.0 - x[0]));
        let cu = corr.apply(&u).unwrap();
        let diff = cu.sub(&u).unwrap();
        assert!(diff.max_abs() < 1e-12);
    }

    #[test]
    fn corrector_fixes_constants() {
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let sol = solve_cell(&coeff, 256).unwrap();
        let corr = Corrector::new(sol, 1.0 / 8.0).unwrap();
        let g = unit_grid_1d(128, BoundaryCondition::Neumann);
        let u = GridFunction::from_fn(g, |_| 4.5);
        let cu = corr.apply(&u).unwrap();
        assert!((cu.sub(&u).unwrap()).max_abs() < 1e-14);
    }

    #[test]
    fn corrector_matches_closed_form_for_quadratic() {
        // u0 = x (1 - x): T u0 = u0 + eps N(x/eps) (1 - 2x)
        let n = 2048;
        let eps = 1.0 / 8.0;
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let sol = solve_cell(&coeff, 1024).unwrap();
        let corr = Corrector::new(sol.clone(), eps).unwrap();
        let g = unit_grid_1d(n, BoundaryCondition::Dirichlet);
        let u = GridFunction::from_fn(g, |x| x[0] * (1.0 - x[0]));
        let cu = corr.apply(&u).unwrap();
        let mut worst = 0.0f64;
        for d in 0..g.dofs() {
            let x = g.dof_coord(d)[0];
            let expect = x * (1.0 - x) + eps * eval_cell_at(&sol, 0, [x, 0.0], eps) * (1.0 - 2.0 * x);
            worst = worst.max((cu.values()[d] - expect).abs());
        }
        // differences to the closed form come from the discrete gradient only
        assert!(worst < 1e-3, "worst {worst}");
    }

    #[test]
    fn corrector_is_linear() {
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let sol = solve_cell(&coeff, 128).unwrap();
        let corr = Corrector::new(sol, 1.0 / 8.0).unwrap();
        let g = unit_grid_1d(256, BoundaryCondition::Dirichlet);
        let u = GridFunction::from_fn(g, |x| (PI * x[0]).sin());
        let w = GridFunction::from_fn(g, |x| x[0] * x[0] * (1.0 - x[0]));
        let (alpha, beta) = (2.5, -1.25);
        let mut combo = u.scaled(alpha);
        combo.axpy(beta, &w);
        let lhs = corr.apply(&combo).unwrap();
        let mut rhs = corr.apply(&u).unwrap().scaled(alpha);
        rhs.axpy(beta, &corr.apply(&w).unwrap());
        assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn multiplier_bound_constant_is_stable_across_eps() {
        // fitted C in ||grad T_eps w|| <= C (||grad w|| + eps ||L w||) moves
        // by less than +-20% over the eps ladder
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let cellsol = solve_cell(&coeff, 512).unwrap();
        let g = unit_grid_1d(2048, BoundaryCondition::Dirichlet);
        let ws = NormWorkspace::new(g);
        let lap = EllipticOperator::reference(g);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut smooth_fields = Vec::new();
        for _ in 0..10 {
            let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            smooth_fields.push(GridFunction::from_fn(g, |x| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * PI * x[0]).sin() / ((k + 1) as f64).powi(2))
                    .sum()
            }));
        }
        let mut fitted = Vec::new();
        for k in [8.0, 16.0, 32.0, 64.0] {
            let eps = 1.0 / k;
            let corr = Corrector::new(cellsol.clone(), eps).unwrap();
            let mut c_fit = 0.0f64;
            for w in &smooth_fields {
                let tw = corr.apply(w).unwrap();
                let lhs = ws.h1(&tw);
                let h2 = lap.apply(w).unwrap();
                let rhs = ws.h1(w) + eps * ws.l2(&h2);
                c_fit = c_fit.max(lhs / rhs);
            }
            fitted.push(c_fit);
        }
        let lo = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = fitted.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo <= 1.5, "fitted multiplier constants {fitted:?}");
    }

    #[test]
    fn prepared_data_for_constant_coefficient_is_identity() {
        let g = unit_grid_1d(128, BoundaryCondition::Dirichlet);
        let coeff = CoefficientField::new(1, CoefficientKind::Constant([[2.0, 0.0], [0.0, 2.0]])).unwrap();
        let op_e = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 8.0, g).unwrap();
        let op_0 = EllipticOperator::assemble_constant([[2.0, 0.0], [0.0, 2.0]], g).unwrap();
        let xi = State::new(
            GridFunction::from_fn(g, |x| (PI * x[0]).sin()),
            GridFunction::from_fn(g, |x| x[0] * (1.0 - x[0])),
            0.0,
        )
        .unwrap();
        let prep = prepare_initial(&op_e, &op_0, &xi).unwrap();
        assert!(prep.u().sub(xi.u()).unwrap().max_abs() < 1e-8);
        assert!(prep.v().sub(xi.v()).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn prepared_data_properties() {
        // gap bound ||Pi xi - xi||_L2 <= gap * ||xi||_E2 and E2 norm
        // preservation, on random smooth states
        let n = 512;
        let eps = 1.0 / 16.0;
        let g = unit_grid_1d(n, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let cellsol = solve_cell(&coeff, 512).unwrap();
        let mut op_e = EllipticOperator::assemble_oscillatory(&coeff, eps, g).unwrap();
        let mut op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), g).unwrap();
        op_e.set_solve_tol(1e-11);
        op_0.set_solve_tol(1e-11);
        let ws = NormWorkspace::new(g);
        let gap = resolvent_gap(&op_e, &op_0, 1e-10).unwrap();
        let zero = GridFunction::zeros(g);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let coeffs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = GridFunction::from_fn(g, |x| {
                coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * x[0]).sin()).sum()
            });
            let q = GridFunction::from_fn(g, |x| {
                coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * x[0]).cos() * x[0] * (1.0 - x[0])).sum()
            });
            // smooth state in the discrete E^2_eps: components are A_eps^{-1} images
            let xi = State::new(op_e.apply_inverse(&p).unwrap(), op_e.apply_inverse(&q).unwrap(), 0.0).unwrap();
            let prep = prepare_initial(&op_e, &op_0, &xi).unwrap();

            // E2 norms coincide: A_0 (Pi xi) = A_eps xi by construction
            let e2_eps = crate::wave::e2_norm(&op_e, &ws, &xi, &zero).unwrap();
            let e2_0 = crate::wave::e2_norm(&op_0, &ws, &prep, &zero).unwrap();
            assert!((e2_eps - e2_0).abs() <= 1e-8 * e2_eps.max(1.0), "{e2_eps} vs {e2_0}");

            let du = prep.u().sub(xi.u()).unwrap();
            let dv = prep.v().sub(xi.v()).unwrap();
            let l2_diff = (ws.l2(&du).powi(2) + ws.l2(&dv).powi(2)).sqrt();
            assert!(
                l2_diff <= gap * e2_eps * (1.0 + 1e-6) + 1e-12,
                "l2 diff {l2_diff:e} vs gap * E2 = {:e}",
                gap * e2_eps
            );

            // bijection: applying the inverse projector recovers xi
            let back = prepare_initial(&op_0, &op_e, &prep).unwrap();
            assert!(back.u().sub(xi.u()).unwrap().max_abs() <= 1e-6 * (1.0 + xi.u().max_abs()));
        }
    }

    #[test]
    fn resolvent_difference_is_symmetric() {
        // |(D phi, psi) - (phi, D psi)| <= 1e-8 ||phi|| ||psi|| in the
        // weighted inner product, on random pairs
        let g = unit_grid_1d(96, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let cellsol = solve_cell(&coeff, 256).unwrap();
        let mut op_e = EllipticOperator::assemble_oscillatory(&coeff, 1.0 / 4.0, g).unwrap();
        let mut op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), g).unwrap();
        op_e.set_solve_tol(1e-12);
        op_0.set_solve_tol(1e-12);
        let ws = NormWorkspace::new(g);
        let apply_d = |x: &GridFunction| -> GridFunction {
            op_e.apply_inverse(x).unwrap().sub(&op_0.apply_inverse(x).unwrap()).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..6 {
            let phi = GridFunction::from_values(g, (0..g.dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
            let psi = GridFunction::from_values(g, (0..g.dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .unwrap();
            let lhs = ws.ip_l2(&apply_d(&phi), &psi);
            let rhs = ws.ip_l2(&phi, &apply_d(&psi));
            assert!((lhs - rhs).abs() <= 1e-8 * ws.l2(&phi) * ws.l2(&psi), "asymmetry {:e}", (lhs - rhs).abs());
        }
    }

    #[test]
    fn norm_equivalence_of_dual_quadratic_forms() {
        // nu ||phi||^2_{H^-1,L} <= (phi, A_0^-1 phi) <= nu^-1 ||phi||^2_{H^-1,L}
        let g = unit_grid_1d(128, BoundaryCondition::Dirichlet);
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let cellsol = solve_cell(&coeff, 256).unwrap();
        let op_0 = EllipticOperator::assemble_constant(cellsol.a_h(), g).unwrap();
        let lap = EllipticOperator::reference(g);
        let ws = NormWorkspace::new(g);
        // the homogenised matrix obeys the same bounds as a(.), so nu works here
        let nu = coeff.nu();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let phi =
                GridFunction::from_values(g, (0..g.dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let h_norm_sq = norm(&phi, NormKind::Hminus1, Some(&lap)).unwrap().powi(2);
            let a_form = ws.ip_l2(&phi, &op_0.apply_inverse(&phi).unwrap());
            assert!(nu * h_norm_sq <= a_form * (1.0 + 1e-8), "lower bound");
            assert!(a_form <= h_norm_sq / nu * (1.0 + 1e-8), "upper bound");
        }
    }
}
