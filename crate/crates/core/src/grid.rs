//! Uniform grids on intervals, rectangles and tori, grid functions, discrete
//! norms and the finite-volume stiffness assembly shared by every operator in
//! the crate.
//!
//! Nodes carry the degrees of freedom. `n` counts cells per axis, so the mesh
//! width is always `h = extent / n`; Dirichlet grids drop the boundary nodes
//! (n - 1 dofs per axis), Neumann grids keep them (n + 1), periodic grids
//! identify opposite faces (n). The stiffness form is the standard 3-point /
//! 5-point scheme with the coefficient sampled at cell midpoints and averaged
//! arithmetically across the two cells adjacent to each edge; in 1D this makes
//! the discrete homogenised coefficient equal to the harmonic mean of the
//! midpoint samples exactly.

use crate::elliptic::EllipticOperator;
use crate::sparse::{cg, CsrSym, Triplets};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

/// Seed for the Cbeta pair sampler; fixed so the sampled pairs are reproducible.
const CBETA_PAIR_SEED: u64 = 0x00c0_ffee;
/// All pairs are used up to this many dofs, beyond it 10^4 sampled pairs.
const CBETA_EXHAUSTIVE_LIMIT: usize = 512;
const CBETA_SAMPLED_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Periodic,
}

impl BoundaryCondition {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Periodic => "periodic",
        }
    }
}

/// Uniform tensor grid on (0, l1) or (0, l1) x (0, l2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    extent: [f64; 2],
    n: usize,
    bc: BoundaryCondition,
}

impl Grid {
    pub fn new(dim: usize, extent: [f64; 2], n: usize, bc: BoundaryCondition) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need n >= 4 cells per axis, got {n}")));
        }
        for ax in 0..dim {
            if !(extent[ax] > 0.0) || !extent[ax].is_finite() {
                return Err(Error::InvalidGrid(format!("extent[{ax}] must be positive, got {}", extent[ax])));
            }
        }
        let mut extent = extent;
        if dim == 1 {
            extent[1] = 0.0;
        }
        Ok(Grid { dim, extent, n, bc })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    /// Mesh width along `axis`.
    pub fn h(&self, axis: usize) -> f64 {
        self.extent[axis] / self.n as f64
    }

    pub fn h_max(&self) -> f64 {
        (0..self.dim).map(|ax| self.h(ax)).fold(0.0, f64::max)
    }

    /// Measure of the domain.
    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|ax| self.extent[ax]).product()
    }

    /// Nodes carrying dofs per axis.
    pub fn nodes_per_axis(&self) -> usize {
        match self.bc {
            BoundaryCondition::Dirichlet => self.n - 1,
            BoundaryCondition::Neumann => self.n + 1,
            BoundaryCondition::Periodic => self.n,
        }
    }

    pub fn dofs(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    /// First full-lattice index that carries a dof.
    fn first_node(&self) -> usize {
        match self.bc {
            BoundaryCondition::Dirichlet => 1,
            _ => 0,
        }
    }

    /// Maps a full-lattice node index (possibly out of range) to a dof index.
    /// Dirichlet boundary nodes map to `None`; periodic indices wrap.
    pub fn dof_index(&self, node: [isize; 2]) -> Option<usize> {
        let npa = self.nodes_per_axis() as isize;
        let n = self.n as isize;
        let mut idx = [0isize; 2];
        for ax in 0..self.dim {
            let i = node[ax];
            match self.bc {
                BoundaryCondition::Dirichlet => {
                    if i < 1 || i > n - 1 {
                        return None;
                    }
                    idx[ax] = i - 1;
                }
                BoundaryCondition::Neumann => {
                    if i < 0 || i > n {
                        return None;
                    }
                    idx[ax] = i;
                }
                BoundaryCondition::Periodic => {
                    idx[ax] = i.rem_euclid(n);
                }
            }
        }
        Some(if self.dim == 1 { idx[0] as usize } else { (idx[1] * npa + idx[0]) as usize })
    }

    /// Physical coordinates of the dof with linear index `d`.
    pub fn dof_coord(&self, d: usize) -> [f64; 2] {
        let npa = self.nodes_per_axis();
        let first = self.first_node();
        let (ix, iy) = if self.dim == 1 { (d, 0) } else { (d % npa, d / npa) };
        let mut c = [0.0; 2];
        c[0] = (ix + first) as f64 * self.h(0);
        if self.dim == 2 {
            c[1] = (iy + first) as f64 * self.h(1);
        }
        c
    }

    /// Lumped-mass quadrature weights (trapezoid rule).
    pub fn mass_weights(&self) -> Vec<f64> {
        let npa = self.nodes_per_axis();
        let axis_weight = |i: usize| -> f64 {
            match self.bc {
                BoundaryCondition::Neumann => {
                    if i == 0 || i == npa - 1 {
                        0.5
                    } else {
                        1.0
                    }
                }
                _ => 1.0,
            }
        };
        let cell = (0..self.dim).map(|ax| self.h(ax)).product::<f64>();
        let mut w = vec![0.0; self.dofs()];
        for d in 0..w.len() {
            let (ix, iy) = if self.dim == 1 { (d, 0) } else { (d % npa, d / npa) };
            let mut wi = axis_weight(ix);
            if self.dim == 2 {
                wi *= axis_weight(iy);
            }
            w[d] = cell * wi;
        }
        w
    }
}

/// Real-valued function sampled at the grid dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: vec![0.0; grid.dofs()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.dofs() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match dof count {}",
                values.len(),
                grid.dofs()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp("non-finite value in grid function".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.dofs()).map(|d| f(grid.dof_coord(d))).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// self += c * other
    pub fn axpy(&mut self, c: f64, other: &GridFunction) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFunction { grid: self.grid, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Norms implemented by [`norm`]. The pair kinds (E, E^-1, E^1, E^2) act on
/// wave states, see `wave::state_norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    H1,
    Hminus1,
    Cbeta(f64),
    E,
    Eminus1,
    E1,
    E2,
}

/// Precomputed quadrature and identity-coefficient stiffness for one grid.
/// Building this once and reusing it is much cheaper than re-assembling inside
/// distance loops.
pub struct NormWorkspace {
    grid: Grid,
    mass: Vec<f64>,
    stiff_id: CsrSym,
}

impl NormWorkspace {
    pub fn new(grid: Grid) -> Self {
        let stiff_id = assemble_stiffness(&grid, |_| [[1.0, 0.0], [0.0, 1.0]]);
        NormWorkspace { grid, mass: grid.mass_weights(), stiff_id }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Weighted L2 inner product.
    pub fn ip_l2(&self, u: &GridFunction, v: &GridFunction) -> f64 {
        let mut acc = 0.0;
        for i in 0..u.len() {
            acc += self.mass[i] * u.values[i] * v.values[i];
        }
        acc
    }

    pub fn l2(&self, u: &GridFunction) -> f64 {
        self.ip_l2(u, u).sqrt()
    }

    /// H1 norm: the gradient seminorm on Dirichlet grids (Poincare), the full
    /// H1 norm otherwise.
    pub fn h1(&self, u: &GridFunction) -> f64 {
        let ku = self.stiff_id.mul_vec_alloc(u.values());
        let mut acc = 0.0;
        for i in 0..u.len() {
            acc += u.values[i] * ku[i];
        }
        if self.grid.bc() != BoundaryCondition::Dirichlet {
            acc += self.ip_l2(u, u);
        }
        acc.sqrt()
    }

    /// Squared H1 seminorm u' K u regardless of boundary condition.
    pub fn h1_semi_sq(&self, u: &GridFunction) -> f64 {
        let ku = self.stiff_id.mul_vec_alloc(u.values());
        u.values.iter().zip(&ku).map(|(a, b)| a * b).sum()
    }

    /// Holder C^beta norm: max |u| plus the maximal sampled difference
    /// quotient |u(x) - u(y)| / |x - y|^beta.
    pub fn cbeta(&self, u: &GridFunction, beta: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidGrid(format!("Cbeta requires 0 <= beta < 1, got {beta}")));
        }
        let n = u.len();
        let quot = |a: usize, b: usize| -> f64 {
            let pa = self.grid.dof_coord(a);
            let pb = self.grid.dof_coord(b);
            let dist = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            (u.values[a] - u.values[b]).abs() / dist.powf(beta)
        };
        let mut semi = 0.0f64;
        if n <= CBETA_EXHAUSTIVE_LIMIT {
            for a in 0..n {
                for b in (a + 1)..n {
                    semi = semi.max(quot(a, b));
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(CBETA_PAIR_SEED);
            let mut done = 0;
            while done < CBETA_SAMPLED_PAIRS {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a == b {
                    continue;
                }
                semi = semi.max(quot(a, b));
                done += 1;
            }
        }
        Ok(u.max_abs() + semi)
    }
}

/// Discrete norm of a grid function. `ref_op` supplies the operator whose
/// inverse defines the dual H^-1 quadratic form and is mandatory for that
/// kind.
pub fn norm(u: &GridFunction, kind: NormKind, ref_op: Option<&EllipticOperator>) -> Result<f64> {
    let ws = NormWorkspace::new(*u.grid());
    match kind {
        NormKind::L2 => Ok(ws.l2(u)),
        NormKind::H1 => Ok(ws.h1(u)),
        NormKind::Cbeta(beta) => ws.cbeta(u, beta),
        NormKind::Hminus1 => {
            let op = ref_op.ok_or(Error::MissingReferenceOperator)?;
            hminus1(&ws, u, op)
        }
        _ => Err(Error::InvalidGrid(format!("{kind:?} applies to state pairs, not grid functions"))),
    }
}

/// ||phi||_{H^-1, L} = (phi, L^{-1} phi)^{1/2} in the weighted L2 pairing.
pub fn hminus1(ws: &NormWorkspace, u: &GridFunction, ref_op: &EllipticOperator) -> Result<f64> {
    if ref_op.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let w = ref_op.apply_inverse(u)?;
    Ok(ws.ip_l2(u, &w).max(0.0).sqrt())
}

/// Per-axis discrete gradient: centred differences in the interior, one-sided
/// at Neumann boundary nodes, wrapped on tori. Dirichlet grids use the
/// homogeneous boundary values for the outermost centred stencils. On a
/// periodic grid a non-periodic field such as u(x) = x produces the expected
/// wrap artefact at the seam: the centred stencil straddles the jump from
/// extent back to 0.
pub fn gradient(u: &GridFunction) -> Vec<GridFunction> {
    let grid = *u.grid();
    let npa = grid.nodes_per_axis();
    let first = grid.first_node() as isize;
    let mut out = Vec::with_capacity(grid.dim());
    for ax in 0..grid.dim() {
        let h = grid.h(ax);
        let mut g = GridFunction::zeros(grid);
        for d in 0..grid.dofs() {
            let (ix, iy) = if grid.dim() == 1 { (d % npa, 0) } else { (d % npa, d / npa) };
            let node = [ix as isize + first, iy as isize + first];
            let mut lo = node;
            lo[ax] -= 1;
            let mut hi = node;
            hi[ax] += 1;
            let value = |nd: [isize; 2]| -> Option<f64> {
                match grid.dof_index(nd) {
                    Some(i) => Some(u.values[i]),
                    None => match grid.bc() {
                        BoundaryCondition::Dirichlet => Some(0.0),
                        BoundaryCondition::Neumann => None,
                        BoundaryCondition::Periodic => unreachable!("periodic indices wrap"),
                    },
                }
            };
            let here = u.values[d];
            g.values[d] = match (value(lo), value(hi)) {
                (Some(a), Some(b)) => (b - a) / (2.0 * h),
                (None, Some(b)) => (b - here) / h,
                (Some(a), None) => (here - a) / h,
                (None, None) => 0.0,
            };
        }
        out.push(g);
    }
    out
}

/// Solve `matrix * x = rhs` by conjugate gradients with relative residual
/// `tol`; the matrix must be SPD on the dof space.
pub fn solve_spd(matrix: &CsrSym, rhs: &GridFunction, tol: f64) -> Result<GridFunction> {
    if matrix.n() != rhs.len() {
        return Err(Error::GridMismatch);
    }
    let max_iter = 6 * matrix.n() + 500;
    let sol = cg(matrix, rhs.values(), tol, max_iter, false)?;
    GridFunction::from_values(*rhs.grid(), sol.x)
}

/// Assemble the stiffness form of -div(a grad .) on `grid` for the
/// coefficient sampler `coeff_at` (physical midpoint coordinates in, 2x2
/// symmetric matrix out; 1D uses the (0,0) entry).
///
/// Edge terms carry the diagonal coefficient entries averaged over the
/// adjacent cell midpoints; an off-diagonal entry adds the per-cell
/// midpoint-quadrature cross form. The result is the bilinear form matrix K
/// with u' K v ~ int a grad u . grad v; pair it with the lumped mass weights
/// to form strong operators.
pub fn assemble_stiffness(grid: &Grid, coeff_at: impl Fn([f64; 2]) -> [[f64; 2]; 2]) -> CsrSym {
    let n = grid.cells();
    let dim = grid.dim();
    let mut t = Triplets::new(grid.dofs());

    // cell midpoint samples
    let n_cells_y = if dim == 2 { n } else { 1 };
    let mut samples = Vec::with_capacity(n * n_cells_y);
    let mut any_cross = false;
    for cy in 0..n_cells_y {
        for cx in 0..n {
            let mid = [(cx as f64 + 0.5) * grid.h(0), if dim == 2 { (cy as f64 + 0.5) * grid.h(1) } else { 0.0 }];
            let a = coeff_at(mid);
            if dim == 2 && a[0][1] != 0.0 {
                any_cross = true;
            }
            samples.push(a);
        }
    }
    let sample = |cx: isize, cy: isize| -> Option<[[f64; 2]; 2]> {
        let wrap = |i: isize| -> Option<usize> {
            match grid.bc() {
                BoundaryCondition::Periodic => Some(i.rem_euclid(n as isize) as usize),
                _ => {
                    if i < 0 || i >= n as isize {
                        None
                    } else {
                        Some(i as usize)
                    }
                }
            }
        };
        let cx = wrap(cx)?;
        let cy = if dim == 2 { wrap(cy)? } else { 0 };
        Some(samples[cy * n + cx])
    };

    // node range of the full lattice along one axis
    let node_range: Vec<isize> = match grid.bc() {
        BoundaryCondition::Periodic => (0..n as isize).collect(),
        _ => (0..=n as isize).collect(),
    };
    let edge_starts: Vec<isize> = match grid.bc() {
        BoundaryCondition::Periodic => (0..n as isize).collect(),
        _ => (0..n as isize).collect(),
    };

    for ax in 0..dim {
        let h_ax = grid.h(ax);
        let h_perp = if dim == 2 { grid.h(1 - ax) } else { 1.0 };
        let perp_range: &[isize] = if dim == 2 { &node_range } else { &[0] };
        for &jp in perp_range {
            for &ie in &edge_starts {
                // edge from node `ie` to `ie + 1` along `ax`, at transverse node jp
                let (p, q) = if ax == 0 { ([ie, jp], [ie + 1, jp]) } else { ([jp, ie], [jp, ie + 1]) };
                // adjacent cells: transverse cell indices jp-1 and jp
                let mut coeff = 0.0;
                let mut n_adj = 0.0;
                let adj = if dim == 2 { vec![jp - 1, jp] } else { vec![0] };
                for jc in adj {
                    let (cx, cy) = if ax == 0 { (ie, jc) } else { (jc, ie) };
                    if let Some(a) = sample(cx, cy) {
                        coeff += a[ax][ax];
                        n_adj += 1.0;
                    }
                }
                if n_adj == 0.0 {
                    continue;
                }
                coeff /= n_adj;
                // transverse dual-volume share: half width per adjacent cell
                let share = if dim == 2 { h_perp * n_adj * 0.5 } else { 1.0 };
                let w = coeff * share / h_ax;
                let dp = grid.dof_index(p);
                let dq = grid.dof_index(q);
                if let Some(i) = dp {
                    t.push(i, i, w);
                }
                if let Some(j) = dq {
                    t.push(j, j, w);
                }
                if let (Some(i), Some(j)) = (dp, dq) {
                    t.push_sym(i, j, -w);
                }
            }
        }
    }

    if any_cross {
        // midpoint-quadrature cross form a12 (du/dx dv/dy + du/dy dv/dx)
        let (hx, hy) = (grid.h(0), grid.h(1));
        let vol = hx * hy;
        for cy in 0..n as isize {
            for cx in 0..n as isize {
                let a01 = samples[(cy as usize) * n + cx as usize][0][1];
                if a01 == 0.0 {
                    continue;
                }
                let corners = [[cx, cy], [cx + 1, cy], [cx, cy + 1], [cx + 1, cy + 1]];
                let gx = [-0.5 / hx, 0.5 / hx, -0.5 / hx, 0.5 / hx];
                let gy = [-0.5 / hy, -0.5 / hy, 0.5 / hy, 0.5 / hy];
                for p in 0..4 {
                    let Some(i) = grid.dof_index(corners[p]) else { continue };
                    for q in 0..4 {
                        let Some(j) = grid.dof_index(corners[q]) else { continue };
                        let v = a01 * vol * (gx[p] * gy[q] + gy[p] * gx[q]);
                        if v != 0.0 {
                            t.push(i, j, v);
                        }
                    }
                }
            }
        }
    }

    t.to_csr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn dof_counts_match_boundary_conditions() {
        let g = Grid::new(1, [1.0, 0.0], 8, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(g.dofs(), 7);
        assert!((g.h(0) - 0.125).abs() < 1e-15);

        let g = Grid::new(1, [1.0, 0.0], 8, BoundaryCondition::Periodic).unwrap();
        assert_eq!(g.dofs(), 8);
        assert!((g.h(0) - 0.125).abs() < 1e-15);

        let g = Grid::new(2, [1.0, 1.0], 16, BoundaryCondition::Neumann).unwrap();
        assert_eq!(g.dofs(), 289);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(1, [1.0, 0.0], 3, BoundaryCondition::Dirichlet).is_err());
        assert!(Grid::new(1, [0.0, 0.0], 8, BoundaryCondition::Dirichlet).is_err());
        assert!(Grid::new(3, [1.0, 1.0], 8, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn l2_and_h1_of_sine() {
        let g = Grid::new(1, [1.0, 0.0], 256, BoundaryCondition::Dirichlet).unwrap();
        let u = GridFunction::from_fn(g, |x| (PI * x[0]).sin());
        // int sin^2(pi x) = 1/2 on (0,1)
        let l2 = norm(&u, NormKind::L2, None).unwrap();
        assert!((l2 - 1.0 / 2.0f64.sqrt()).abs() < 1e-3, "l2 = {l2}");
        // int (pi cos(pi x))^2 = pi^2 / 2
        let h1 = norm(&u, NormKind::H1, None).unwrap();
        assert!((h1 - PI / 2.0f64.sqrt()).abs() < 1e-2, "h1 = {h1}");
    }

    #[test]
    fn zero_function_has_zero_norms() {
        let g = Grid::new(2, [1.0, 1.0], 8, BoundaryCondition::Periodic).unwrap();
        let u = GridFunction::zeros(g);
        for kind in [NormKind::L2, NormKind::H1, NormKind::Cbeta(0.25)] {
            assert_eq!(norm(&u, kind, None).unwrap(), 0.0);
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid::new(2, [1.0, 2.0], 8, BoundaryCondition::Neumann).unwrap();
        let u = GridFunction::from_fn(g, |_| 3.25);
        for gd in gradient(&u) {
            assert_eq!(gd.max_abs(), 0.0);
        }
    }

    #[test]
    fn gradient_of_linear_function() {
        // dirichlet: u(x) = x vanishes at the left boundary only; centred
        // differences with the homogeneous boundary value are exact away from
        // the right boundary
        let g = Grid::new(1, [1.0, 0.0], 64, BoundaryCondition::Dirichlet).unwrap();
        let u = GridFunction::from_fn(g, |x| x[0]);
        let du = &gradient(&u)[0];
        for d in 0..g.dofs() - 1 {
            assert!((du.values()[d] - 1.0).abs() < 1e-12, "node {d}: {}", du.values()[d]);
        }

        // periodic: the wrap artefact concentrates at the seam
        let g = Grid::new(1, [1.0, 0.0], 64, BoundaryCondition::Periodic).unwrap();
        let u = GridFunction::from_fn(g, |x| x[0]);
        let du = &gradient(&u)[0];
        let h = g.h(0);
        assert!((du.values()[1] - 1.0).abs() < 1e-12);
        // node 0 sees u(h) - u(extent - h) across the seam
        let expect = (h - (1.0 - h)) / (2.0 * h);
        assert!((du.values()[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_sine_periodic() {
        let g = Grid::new(1, [1.0, 0.0], 256, BoundaryCondition::Periodic).unwrap();
        let u = GridFunction::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let du = &gradient(&u)[0];
        let mut worst = 0.0f64;
        for d in 0..g.dofs() {
            let x = g.dof_coord(d)[0];
            worst = worst.max((du.values()[d] - 2.0 * PI * (2.0 * PI * x).cos()).abs());
        }
        assert!(worst < 1e-2, "worst {worst}");
    }

    #[test]
    fn cbeta_of_constant_is_max_abs() {
        let g = Grid::new(1, [1.0, 0.0], 16, BoundaryCondition::Neumann).unwrap();
        let u = GridFunction::from_fn(g, |_| -2.0);
        let c = norm(&u, NormKind::Cbeta(0.5), None).unwrap();
        assert!((c - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cbeta_rejects_bad_exponent() {
        let g = Grid::new(1, [1.0, 0.0], 16, BoundaryCondition::Neumann).unwrap();
        let u = GridFunction::zeros(g);
        assert!(norm(&u, NormKind::Cbeta(1.0), None).is_err());
    }

    #[test]
    fn dual_norm_requires_reference_operator() {
        let g = Grid::new(1, [1.0, 0.0], 16, BoundaryCondition::Dirichlet).unwrap();
        let u = GridFunction::from_fn(g, |x| x[0]);
        assert!(matches!(norm(&u, NormKind::Hminus1, None), Err(Error::MissingReferenceOperator)));
    }

    #[test]
    fn identity_stiffness_is_standard_laplacian_1d() {
        let g = Grid::new(1, [1.0, 0.0], 8, BoundaryCondition::Dirichlet).unwrap();
        let k = assemble_stiffness(&g, |_| [[1.0, 0.0], [0.0, 1.0]]);
        // K u with u = e_3 gives the (-1, 2, -1)/h row scaled by h
        let mut e = vec![0.0; g.dofs()];
        e[3] = 1.0;
        let y = k.mul_vec_alloc(&e);
        let h = g.h(0);
        assert!((y[3] - 2.0 / h).abs() < 1e-12);
        assert!((y[2] + 1.0 / h).abs() < 1e-12);
        assert!((y[4] + 1.0 / h).abs() < 1e-12);
        assert_eq!(k.asymmetry(), 0.0);
    }

    proptest! {
        #[test]
        fn norm_homogeneity(c in -100.0f64..100.0, seed in 0u64..1000) {
            let g = Grid::new(1, [1.0, 0.0], 32, BoundaryCondition::Dirichlet).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = GridFunction::from_values(
                g,
                (0..g.dofs()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect(),
            ).unwrap();
            let cu = u.scaled(c);
            for kind in [NormKind::L2, NormKind::H1, NormKind::Cbeta(0.3)] {
                let a = norm(&cu, kind, None).unwrap();
                let b = c.abs() * norm(&u, kind, None).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
            }
        }

        #[test]
        fn l2_zero_iff_zero(seed in 0u64..1000) {
            let g = Grid::new(1, [1.0, 0.0], 16, BoundaryCondition::Periodic).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..g.dofs()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
            let nonzero = v.iter().any(|&x| x != 0.0);
            let u = GridFunction::from_values(g, v).unwrap();
            let l2 = norm(&u, NormKind::L2, None).unwrap();
            prop_assert_eq!(l2 > 0.0, nonzero);
        }
    }
}
