//! Periodic cell problems on Q = [0,1)^d and the homogenised matrix.
//!
//! For each coordinate direction the corrector N_i solves
//! -div(a grad N_i) = div(a e_i) on the torus with zero mean, and the
//! homogenised matrix is assembled with the same edge quadrature as the
//! stiffness form, so in 1D the discrete a_h equals the harmonic mean of the
//! midpoint samples exactly.

use crate::grid::{assemble_stiffness, BoundaryCondition, Grid, GridFunction};
use crate::sparse::cg;
use crate::{Error, Result};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Number of sample points per axis for the ellipticity check.
const ELLIPTICITY_SAMPLES: usize = 64;
/// Panels of the composite midpoint rule in the 1D harmonic-mean oracle.
const ORACLE_PANELS: usize = 10_000;

/// Periodic coefficient family. Evaluation is taken modulo 1 per axis, all
/// kinds produce symmetric matrices.
#[derive(Debug, Clone)]
pub enum CoefficientKind {
    /// Constant symmetric matrix (1D uses the (0,0) entry).
    Constant([[f64; 2]; 2]),
    /// 1D piecewise-constant profile: `values[k]` on [break_{k-1}, break_k).
    PiecewiseConstant1d { breakpoints: Vec<f64>, values: Vec<f64> },
    /// 2D laminate diag(b(y1), b(y1)) with a piecewise-constant profile b.
    Laminate2d { breakpoints: Vec<f64>, values: Vec<f64> },
    /// Scalar trigonometric field times the identity:
    /// base + amp[0] sin(2 pi y1) + amp[1] sin(2 pi y2) + cross sin(2 pi y1) sin(2 pi y2).
    Trigonometric { base: f64, amp: [f64; 2], cross: f64 },
}

#[derive(Debug, Clone)]
pub struct CoefficientField {
    dim: usize,
    kind: CoefficientKind,
    nu: f64,
}

fn eval_profile(breakpoints: &[f64], values: &[f64], y: f64) -> f64 {
    // right-continuous on [0,1): values[k] on [b_{k-1}, b_k)
    let y = y.rem_euclid(1.0);
    for (k, &b) in breakpoints.iter().enumerate() {
        if y < b {
            return values[k];
        }
    }
    values[breakpoints.len()]
}

/// Eigenvalue range of a symmetric 2x2 matrix.
fn sym2_eigen_range(a: &[[f64; 2]; 2]) -> (f64, f64) {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

impl CoefficientField {
    pub fn new(dim: usize, kind: CoefficientKind) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Ellipticity(format!("dim must be 1 or 2, got {dim}")));
        }
        match &kind {
            CoefficientKind::Constant(a) => {
                if (a[0][1] - a[1][0]).abs() > 0.0 {
                    return Err(Error::Ellipticity("constant coefficient must be symmetric".into()));
                }
            }
            CoefficientKind::PiecewiseConstant1d { breakpoints, values }
            | CoefficientKind::Laminate2d { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::Ellipticity(format!(
                        "need {} values for {} breakpoints",
                        breakpoints.len() + 1,
                        breakpoints.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1])
                    || breakpoints.iter().any(|&b| !(0.0..1.0).contains(&b))
                {
                    return Err(Error::Ellipticity("breakpoints must be strictly increasing in [0,1)".into()));
                }
                if matches!(kind, CoefficientKind::PiecewiseConstant1d { .. }) && dim != 1 {
                    return Err(Error::Ellipticity("piecewise_constant_1d requires dim = 1".into()));
                }
                if matches!(kind, CoefficientKind::Laminate2d { .. }) && dim != 2 {
                    return Err(Error::Ellipticity("laminate_2d requires dim = 2".into()));
                }
            }
            CoefficientKind::Trigonometric { .. } => {}
        }
        let mut field = CoefficientField { dim, kind, nu: 0.0 };
        let (lo, hi) = field.sampled_eigen_range();
        if lo <= 0.0 {
            return Err(Error::Ellipticity(format!("sampled minimal eigenvalue {lo:.3e} is not positive")));
        }
        // largest nu with nu <= lambda_min and lambda_max <= 1/nu
        field.nu = lo.min(1.0 / hi);
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    /// Ellipticity constant: nu |eta|^2 <= a(y) eta.eta <= nu^-1 |eta|^2.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// a(y), evaluated modulo the unit cell.
    pub fn eval(&self, y: [f64; 2]) -> [[f64; 2]; 2] {
        match &self.kind {
            CoefficientKind::Constant(a) => *a,
            CoefficientKind::PiecewiseConstant1d { breakpoints, values } => {
                let v = eval_profile(breakpoints, values, y[0]);
                [[v, 0.0], [0.0, v]]
            }
            CoefficientKind::Laminate2d { breakpoints, values } => {
                let v = eval_profile(breakpoints, values, y[0]);
                [[v, 0.0], [0.0, v]]
            }
            CoefficientKind::Trigonometric { base, amp, cross } => {
                let sx = (2.0 * std::f64::consts::PI * y[0].rem_euclid(1.0)).sin();
                let mut v = base + amp[0] * sx;
                if self.dim == 2 {
                    let sy = (2.0 * std::f64::consts::PI * y[1].rem_euclid(1.0)).sin();
                    v += amp[1] * sy + cross * sx * sy;
                }
                [[v, 0.0], [0.0, v]]
            }
        }
    }

    fn sampled_eigen_range(&self) -> (f64, f64) {
        let m = ELLIPTICITY_SAMPLES;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let ny = if self.dim == 2 { m } else { 1 };
        for j in 0..ny {
            for i in 0..m {
                let y = [(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / ny as f64];
                let a = self.eval(y);
                if self.dim == 1 {
                    lo = lo.min(a[0][0]);
                    hi = hi.max(a[0][0]);
                } else {
                    let (l, h) = sym2_eigen_range(&a);
                    lo = lo.min(l);
                    hi = hi.max(h);
                }
            }
        }
        (lo, hi)
    }

    /// Breakpoints of piecewise-constant kinds, if any.
    pub fn breakpoints(&self) -> &[f64] {
        match &self.kind {
            CoefficientKind::PiecewiseConstant1d { breakpoints, .. }
            | CoefficientKind::Laminate2d { breakpoints, .. } => breakpoints,
            _ => &[],
        }
    }
}

/// Cell correctors N_i and the homogenised matrix a_h.
#[derive(Debug, Clone)]
pub struct CellSolution {
    cell_grid: Grid,
    n: Vec<GridFunction>,
    a_h: [[f64; 2]; 2],
    residuals: Vec<f64>,
    /// Largest distance a coefficient breakpoint sits from the nearest cell
    /// face; midpoint sampling snaps jumps to faces, this records the snap.
    snap_distance: f64,
    nu: f64,
}

impl CellSolution {
    pub fn cell_grid(&self) -> &Grid {
        &self.cell_grid
    }

    pub fn corrector(&self, i: usize) -> &GridFunction {
        &self.n[i]
    }

    pub fn dim(&self) -> usize {
        self.cell_grid.dim()
    }

    pub fn a_h(&self) -> [[f64; 2]; 2] {
        self.a_h
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn snap_distance(&self) -> f64 {
        self.snap_distance
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn is_trivial(&self, tol: f64) -> bool {
        self.n.iter().all(|ni| ni.max_abs() <= tol)
    }

    /// Nodal corrector values as CSV (y1[,y2],N_1[,N_2]).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.dim() == 1 {
            out.push_str("y1,N_1\n");
        } else {
            out.push_str("y1,y2,N_1,N_2\n");
        }
        for d in 0..self.cell_grid.dofs() {
            let c = self.cell_grid.dof_coord(d);
            if self.dim() == 1 {
                let _ = writeln!(out, "{:.16e},{:.16e}", c[0], self.n[0].values()[d]);
            } else {
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    c[0],
                    c[1],
                    self.n[0].values()[d],
                    self.n[1].values()[d]
                );
            }
        }
        out
    }

    /// Small metadata record: a_h entries, residuals, snap distance.
    pub fn metadata(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let _ = writeln!(out, "a_h[{i}][{j}] = {:.16e}", self.a_h[i][j]);
            }
        }
        for (i, r) in self.residuals.iter().enumerate() {
            let _ = writeln!(out, "residual[{i}] = {r:.3e}");
        }
        let _ = writeln!(out, "snap_distance = {:.3e}", self.snap_distance);
        let _ = writeln!(out, "nu = {:.16e}", self.nu);
        out
    }
}

/// Solve the periodic cell problems and assemble a_h.
pub fn solve_cell(coeff: &CoefficientField, n_cell: usize) -> Result<CellSolution> {
    if n_cell < 8 {
        return Err(Error::InvalidGrid(format!("need n_cell >= 8, got {n_cell}")));
    }
    let dim = coeff.dim();
    let grid = Grid::new(dim, [1.0, 1.0], n_cell, BoundaryCondition::Periodic)?;
    let h = grid.h(0);
    let stiff = assemble_stiffness(&grid, |y| coeff.eval(y));

    let snap_distance = coeff
        .breakpoints()
        .iter()
        .map(|b| {
            let cells = b / h;
            (cells - cells.round()).abs() * h
        })
        .fold(0.0, f64::max);

    // edge list shared by rhs assembly and the a_h quadrature: for every axis
    // edge, the averaged coefficient and the endpoint dof indices
    let n = grid.cells();
    let mut correctors = Vec::with_capacity(dim);
    let mut residuals = Vec::with_capacity(dim);

    struct Edge {
        axis: usize,
        p: usize,
        q: usize,
        share: f64, // transverse dual-volume width
        a: [[f64; 2]; 2],
    }
    let mut edges: Vec<Edge> = Vec::new();
    let perp_range: Vec<isize> = if dim == 2 { (0..n as isize).collect() } else { vec![0] };
    for axis in 0..dim {
        let h_perp = if dim == 2 { grid.h(1 - axis) } else { 1.0 };
        for &jp in &perp_range {
            for ie in 0..n as isize {
                let (pn, qn) = if axis == 0 { ([ie, jp], [ie + 1, jp]) } else { ([jp, ie], [jp, ie + 1]) };
                let p = grid.dof_index(pn).expect("periodic dofs always exist");
                let q = grid.dof_index(qn).expect("periodic dofs always exist");
                // average the two adjacent cell samples (periodic wrap)
                let mut a = [[0.0; 2]; 2];
                let adj: Vec<isize> = if dim == 2 { vec![jp - 1, jp] } else { vec![0] };
                for jc in &adj {
                    let (cx, cy) = if axis == 0 { (ie, *jc) } else { (*jc, ie) };
                    let mid = [
                        (cx.rem_euclid(n as isize) as f64 + 0.5) * grid.h(0),
                        if dim == 2 { (cy.rem_euclid(n as isize) as f64 + 0.5) * grid.h(1) } else { 0.0 },
                    ];
                    let s = coeff.eval(mid);
                    for r in 0..2 {
                        for c in 0..2 {
                            a[r][c] += s[r][c] / adj.len() as f64;
                        }
                    }
                }
                edges.push(Edge { axis, p, q, share: h_perp, a });
            }
        }
    }

    // the d corrector solves are independent
    let solved: Result<Vec<(GridFunction, f64)>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            // weak rhs of -div(a grad N_i) = div(a e_i): -(a e_i, grad phi)
            let mut rhs = vec![0.0; grid.dofs()];
            for e in &edges {
                let w = e.a[e.axis][i] * e.share;
                rhs[e.p] += w;
                rhs[e.q] -= w;
            }
            let sol = cg(&stiff, &rhs, 1e-12, 20 * grid.dofs() + 1000, true)?;
            let mut ni = GridFunction::from_values(grid, sol.x)?;
            // enforce the zero-mean normalisation exactly (uniform weights on the torus)
            let mean = ni.values().iter().sum::<f64>() / grid.dofs() as f64;
            for v in ni.values_mut() {
                *v -= mean;
            }
            Ok((ni, sol.rel_residual))
        })
        .collect();
    for (ni, res) in solved? {
        residuals.push(res);
        correctors.push(ni);
    }

    // a_h[i][j] from the symmetric discrete form B(N_j + y_j, N_i + y_i):
    // per edge the slope of N_m + y_m is dN_m / h + delta_{axis,m}
    let mut a_h = [[0.0; 2]; 2];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for e in &edges {
                let h_ax = grid.h(e.axis);
                let si = (correctors[i].values()[e.q] - correctors[i].values()[e.p]) / h_ax
                    + if e.axis == i { 1.0 } else { 0.0 };
                let sj = (correctors[j].values()[e.q] - correctors[j].values()[e.p]) / h_ax
                    + if e.axis == j { 1.0 } else { 0.0 };
                acc += e.a[e.axis][e.axis] * e.share * h_ax * si * sj;
            }
            // constant off-diagonal coefficient entries enter directly; the
            // oscillatory kinds are diagonal so no cross quadrature is needed
            if let CoefficientKind::Constant(a) = coeff.kind() {
                if i != j {
                    acc += a[i][j];
                }
            }
            a_h[i][j] = acc;
        }
    }
    // symmetrise roundoff
    if dim == 2 {
        let s = 0.5 * (a_h[0][1] + a_h[1][0]);
        a_h[0][1] = s;
        a_h[1][0] = s;
    }

    Ok(CellSolution { cell_grid: grid, n: correctors, a_h, residuals, snap_distance, nu: coeff.nu() })
}

/// Independent 1D oracle: (int_0^1 a(y)^-1 dy)^-1 by the composite midpoint
/// rule, exact for face-aligned piecewise-constant profiles.
pub fn harmonic_mean_oracle_1d(coeff: &CoefficientField) -> Result<f64> {
    if coeff.dim() != 1 {
        return Err(Error::Ellipticity("harmonic-mean oracle requires dim = 1".into()));
    }
    let mut acc = 0.0;
    for k in 0..ORACLE_PANELS {
        let y = (k as f64 + 0.5) / ORACLE_PANELS as f64;
        acc += 1.0 / coeff.eval([y, 0.0])[0][0];
    }
    Ok(ORACLE_PANELS as f64 / acc)
}

/// Periodic (multi)linear interpolation of N_i at the fractional coordinate
/// x / eps mod 1.
pub fn eval_cell_at(cellsol: &CellSolution, i: usize, x: [f64; 2], eps: f64) -> f64 {
    let grid = cellsol.cell_grid();
    let n = grid.cells();
    let values = cellsol.corrector(i).values();
    let frac = |ax: usize| -> (usize, usize, f64) {
        let y = (x[ax] / eps).rem_euclid(1.0) * n as f64;
        let i0 = (y.floor() as usize) % n;
        let t = y - y.floor();
        ((i0) % n, (i0 + 1) % n, t)
    };
    if cellsol.dim() == 1 {
        let (i0, i1, t) = frac(0);
        values[i0] * (1.0 - t) + values[i1] * t
    } else {
        let (i0, i1, tx) = frac(0);
        let (j0, j1, ty) = frac(1);
        let v00 = values[j0 * n + i0];
        let v10 = values[j0 * n + i1];
        let v01 = values[j1 * n + i0];
        let v11 = values[j1 * n + i1];
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
    }
}

/// Two-phase 1D coefficient taking `values.0` on [0, 1/2) and `values.1` on [1/2, 1).
pub fn two_phase_1d(v0: f64, v1: f64) -> Result<CoefficientField> {
    CoefficientField::new(1, CoefficientKind::PiecewiseConstant1d { breakpoints: vec![0.5], values: vec![v0, v1] })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form 1D corrector for a face-aligned piecewise-constant
    /// coefficient: N'(y) = a_h / a(y) - 1 with zero mean.
    fn closed_form_corrector_1d(coeff: &CoefficientField, a_h: f64, y: f64) -> f64 {
        // integrate N' from 0 to y with a fine midpoint rule, then shift by the mean
        let m = 200_000;
        let mut integral_to = vec![0.0f64; m + 1];
        for k in 0..m {
            let t = (k as f64 + 0.5) / m as f64;
            let slope = a_h / coeff.eval([t, 0.0])[0][0] - 1.0;
            integral_to[k + 1] = integral_to[k] + slope / m as f64;
        }
        let mean = integral_to[..m].iter().sum::<f64>() / m as f64;
        let idx = ((y.rem_euclid(1.0)) * m as f64).round() as usize;
        integral_to[idx.min(m)] - mean
    }

    #[test]
    fn constant_coefficient_is_exact() {
        let coeff = CoefficientField::new(2, CoefficientKind::Constant([[2.0, 0.0], [0.0, 2.0]])).unwrap();
        let sol = solve_cell(&coeff, 16).unwrap();
        assert!(sol.is_trivial(1e-12));
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((sol.a_h()[i][j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_phase_matches_harmonic_mean() {
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let sol = solve_cell(&coeff, 1024).unwrap();
        let oracle = harmonic_mean_oracle_1d(&coeff).unwrap();
        assert!((oracle - 1.6).abs() < 1e-12, "oracle {oracle}");
        assert!((sol.a_h()[0][0] - oracle).abs() < 1e-6, "a_h = {}", sol.a_h()[0][0]);
    }

    #[test]
    fn laminate_matches_harmonic_and_arithmetic_means() {
        let coeff = CoefficientField::new(
            2,
            CoefficientKind::Laminate2d { breakpoints: vec![0.5], values: vec![1.0, 4.0] },
        )
        .unwrap();
        let sol = solve_cell(&coeff, 64).unwrap();
        let a_h = sol.a_h();
        assert!((a_h[0][0] - 1.6).abs() < 1e-3, "a_h_11 = {}", a_h[0][0]);
        assert!((a_h[1][1] - 2.5).abs() < 1e-3, "a_h_22 = {}", a_h[1][1]);
        assert!(a_h[0][1].abs() < 1e-10);
    }

    #[test]
    fn harmonic_oracle_closed_forms() {
        let c = CoefficientField::new(1, CoefficientKind::Constant([[3.5, 0.0], [0.0, 3.5]])).unwrap();
        assert!((harmonic_mean_oracle_1d(&c).unwrap() - 3.5).abs() < 1e-12);

        let two = two_phase_1d(1.0, 4.0).unwrap();
        assert!((harmonic_mean_oracle_1d(&two).unwrap() - 1.6).abs() < 1e-12);

        // int dy / (2 + sin 2 pi y) = 1/sqrt(3)
        let trig = CoefficientField::new(1, CoefficientKind::Trigonometric { base: 2.0, amp: [1.0, 0.0], cross: 0.0 }).unwrap();
        assert!((harmonic_mean_oracle_1d(&trig).unwrap() - 3.0f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn correctors_have_zero_mean_and_ah_is_symmetric() {
        let coeff = CoefficientField::new(2, CoefficientKind::Trigonometric { base: 2.0, amp: [0.8, 0.5], cross: 0.0 }).unwrap();
        let sol = solve_cell(&coeff, 32).unwrap();
        for i in 0..2 {
            let mean: f64 = sol.corrector(i).values().iter().sum::<f64>() / sol.cell_grid().dofs() as f64;
            assert!(mean.abs() <= 1e-12, "mean of N_{i} = {mean:e}");
        }
        assert!((sol.a_h()[0][1] - sol.a_h()[1][0]).abs() <= 1e-12);
        // spectral bounds: eigenvalues of a_h within [nu, 1/nu]
        let (lo, hi) = sym2_eigen_range(&sol.a_h());
        assert!(lo >= coeff.nu() - 1e-9 && hi <= 1.0 / coeff.nu() + 1e-9, "eigs [{lo}, {hi}] vs nu {}", coeff.nu());
    }

    #[test]
    fn mesh_refinement_consistency() {
        // smooth coefficient: first-order or better convergence of a_h
        let trig = CoefficientField::new(1, CoefficientKind::Trigonometric { base: 2.0, amp: [1.0, 0.0], cross: 0.0 }).unwrap();
        let exact = harmonic_mean_oracle_1d(&trig).unwrap();
        let e1 = (solve_cell(&trig, 64).unwrap().a_h()[0][0] - exact).abs();
        let e2 = (solve_cell(&trig, 128).unwrap().a_h()[0][0] - exact).abs();
        assert!(e2 <= e1 / 2.0 + 1e-13, "e(64) = {e1:e}, e(128) = {e2:e}");

        // face-aligned piecewise constants are exact on every even mesh
        let two = two_phase_1d(1.0, 4.0).unwrap();
        let d1 = (solve_cell(&two, 64).unwrap().a_h()[0][0] - 1.6).abs();
        let d2 = (solve_cell(&two, 128).unwrap().a_h()[0][0] - 1.6).abs();
        assert!(d1 < 1e-10 && d2 < 1e-10);
    }

    #[test]
    fn eval_cell_at_interpolates() {
        let coeff = two_phase_1d(1.0, 4.0).unwrap();
        let sol = solve_cell(&coeff, 256).unwrap();
        // at a cell-grid node with eps = 1 the stored nodal value is returned
        let node = 17;
        let y = node as f64 / 256.0;
        let v = eval_cell_at(&sol, 0, [y, 0.0], 1.0);
        assert!((v - sol.corrector(0).values()[node]).abs() < 1e-14);

        // against the closed-form 1D corrector at x = eps / 4
        let eps = 0.125;
        let got = eval_cell_at(&sol, 0, [eps / 4.0, 0.0], eps);
        let expect = closed_form_corrector_1d(&coeff, 1.6, 0.25);
        assert!((got - expect).abs() < 1e-4, "got {got}, expect {expect}");

        // constant coefficient: corrector vanishes everywhere
        let c = CoefficientField::new(1, CoefficientKind::Constant([[2.0, 0.0], [0.0, 2.0]])).unwrap();
        let csol = solve_cell(&c, 32).unwrap();
        for k in 0..50 {
            assert!(eval_cell_at(&csol, 0, [k as f64 * 0.013, 0.0], 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn snap_distance_is_recorded() {
        let coeff = CoefficientField::new(
            1,
            CoefficientKind::PiecewiseConstant1d { breakpoints: vec![1.0 / 3.0], values: vec![1.0, 2.0] },
        )
        .unwrap();
        let sol = solve_cell(&coeff, 16).unwrap();
        // 1/3 is not a face of the 16-cell grid
        assert!(sol.snap_distance() > 0.0);
        let aligned = two_phase_1d(1.0, 4.0).unwrap();
        assert!(solve_cell(&aligned, 16).unwrap().snap_distance() < 1e-15);
    }

    #[test]
    fn ellipticity_violations_are_rejected() {
        assert!(CoefficientField::new(1, CoefficientKind::Trigonometric { base: 1.0, amp: [1.5, 0.0], cross: 0.0 }).is_err());
        assert!(CoefficientField::new(
            1,
            CoefficientKind::PiecewiseConstant1d { breakpoints: vec![0.5], values: vec![1.0, -2.0] }
        )
        .is_err());
        assert!(CoefficientField::new(2, CoefficientKind::Constant([[1.0, 0.5], [0.4, 1.0]])).is_err());
    }
}
