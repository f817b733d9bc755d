//! Sparse symmetric matrices in CSR form and a deterministic conjugate
//! gradient solver.
//!
//! The solver uses a fixed iteration order and a zero initial guess, so a
//! given system is always solved by the exact same floating-point sequence.

use crate::{Error, Result};

/// Symmetric sparse matrix, stored as a full (both triangles) CSR pattern.
#[derive(Debug, Clone)]
pub struct CsrSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Triplet accumulator used during assembly. Duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets { n, entries: Vec::new() }
    }

    /// Add `v` at (i, j).
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    /// Add the symmetric pair (i, j) and (j, i); the diagonal is added once.
    pub fn push_sym(&mut self, i: usize, j: usize, v: f64) {
        self.push(i, j, v);
        if i != j {
            self.push(j, i, v);
        }
    }

    pub fn to_csr(mut self) -> CsrSym {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_counts = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_counts[i + 1] += 1;
                last = Some((i, j));
            }
        }
        let mut row_ptr = row_counts;
        for r in 0..self.n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrSym { n: self.n, row_ptr, cols, vals }
    }
}

impl CsrSym {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Identity matrix of size n.
    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.to_csr()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    pub fn mul_vec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    d[i] += self.vals[k];
                }
            }
        }
        d
    }

    /// A + diag(c * d). Used to form shifted operators K + c M with lumped mass.
    pub fn with_added_diagonal(&self, d: &[f64], c: f64) -> CsrSym {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        let mut found = vec![false; self.n];
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += c * d[i];
                    found[i] = true;
                }
            }
        }
        if found.iter().all(|&f| f) {
            return out;
        }
        // rows without a stored diagonal: rebuild through triplets
        let mut t = Triplets::new(self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push(i, self.cols[k], self.vals[k]);
            }
            t.push(i, i, c * d[i]);
        }
        t.to_csr()
    }

    /// c * A
    pub fn scaled(&self, c: f64) -> CsrSym {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= c;
        }
        out
    }

    /// Attainable true-residual scale in f64: eps * || |A| |x| + |b| ||.
    /// Evaluating A x - b cannot beat this floor even for the exact solution.
    pub fn attainable_floor(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = b[i].abs();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.vals[k].abs() * x[self.cols[k]].abs();
            }
            acc += row * row;
        }
        f64::EPSILON * acc.sqrt()
    }

    /// Max asymmetry |A - A^T|, for assembly checks.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let mut aji = 0.0;
                for k2 in self.row_ptr[j]..self.row_ptr[j + 1] {
                    if self.cols[k2] == i {
                        aji = self.vals[k2];
                    }
                }
                worst = worst.max((self.vals[k] - aji).abs());
            }
        }
        worst
    }
}

/// Outcome of a converged CG solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// SSOR preconditioner state: z = w(2-w) (D + wU)^-1 D (D + wL)^-1 r.
/// Sequential sweeps, hence deterministic.
pub struct Ssor {
    omega: f64,
    diag: Vec<f64>,
}

impl Ssor {
    pub fn new(a: &CsrSym, omega: f64) -> Result<Self> {
        if !(0.0 < omega && omega < 2.0) {
            return Err(Error::NotSpd(format!("SSOR relaxation must lie in (0, 2), got {omega}")));
        }
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
            return Err(Error::NotSpd(format!("non-positive diagonal entry at row {i}")));
        }
        Ok(Ssor { omega, diag })
    }

    fn apply(&self, a: &CsrSym, r: &[f64], z: &mut [f64], work: &mut [f64]) {
        let n = a.n();
        let w = self.omega;
        // (D + wL) y = r
        for i in 0..n {
            let mut s = r[i];
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.cols[k];
                if j >= i {
                    break; // columns sorted within a row
                }
                s -= w * a.vals[k] * work[j];
            }
            work[i] = s / self.diag[i];
        }
        // (D + wU) z = D y, then scale by w (2 - w)
        for i in (0..n).rev() {
            let mut s = work[i] * self.diag[i];
            for k in (a.row_ptr[i]..a.row_ptr[i + 1]).rev() {
                let j = a.cols[k];
                if j <= i {
                    break;
                }
                s -= w * a.vals[k] * z[j];
            }
            z[i] = s / self.diag[i];
        }
        let c = w * (2.0 - w);
        for zi in z.iter_mut() {
            *zi *= c;
        }
    }
}

/// Conjugate gradients for SPD systems, zero initial guess.
///
/// Terminates when the true residual satisfies ||Ax - b|| <= tol * ||b||.
/// `project_mean` removes the mean from the iterates, which solves singular
/// periodic systems on their zero-mean invariant subspace.
pub fn cg(a: &CsrSym, b: &[f64], tol: f64, max_iter: usize, project_mean: bool) -> Result<CgSolution> {
    let n = a.n();
    assert_eq!(b.len(), n);
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
        return Err(Error::NotSpd(format!("non-positive diagonal entry at row {i}")));
    }

    let project = |v: &mut [f64]| {
        if project_mean {
            let m = v.iter().sum::<f64>() / n as f64;
            for vi in v.iter_mut() {
                *vi -= m;
            }
        }
    };

    let mut rhs = b.to_vec();
    project(&mut rhs);
    let norm_b = dot(&rhs, &rhs).sqrt();
    if norm_b == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, rel_residual: 0.0 });
    }

    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = tol * norm_b;

    let mut it = 0;
    let mut best_true = f64::INFINITY;
    loop {
        if rr.sqrt() <= target {
            // confirm with the true residual before accepting
            a.mul_vec(&x, &mut ap);
            let mut true_r2 = 0.0;
            for i in 0..n {
                let d = rhs[i] - ap[i];
                true_r2 += d * d;
            }
            let true_res = true_r2.sqrt();
            let stagnated = true_res >= 0.9 * best_true;
            best_true = best_true.min(true_res);
            // accept at the target, or once restarts stop helping and the
            // residual sits at the f64 evaluation floor of A x - b
            let floor = 4.0 * a.attainable_floor(&x, &rhs);
            if true_res <= target || (stagnated && true_res <= (10.0 * target).max(floor)) {
                project(&mut x);
                return Ok(CgSolution { x, iterations: it, rel_residual: true_res / norm_b });
            }
            // recursion residual drifted; restart from the true residual
            for i in 0..n {
                r[i] = rhs[i] - ap[i];
            }
            project(&mut r);
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
        }
        if it >= max_iter {
            return Err(Error::SolverFailure { iterations: max_iter, residual: rr.sqrt() / norm_b });
        }
        a.mul_vec(&p, &mut ap);
        if project_mean {
            project(&mut ap);
        }
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotSpd(format!("p.Ap = {pap:.3e} at iteration {it}")));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
    }
}

/// SSOR-preconditioned conjugate gradients, zero initial guess, terminating
/// on the true residual ||Ax - b|| <= tol * ||b||.
pub fn pcg_ssor(a: &CsrSym, b: &[f64], tol: f64, max_iter: usize, omega: f64) -> Result<CgSolution> {
    let n = a.n();
    assert_eq!(b.len(), n);
    let pre = Ssor::new(a, omega)?;

    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, rel_residual: 0.0 });
    }
    let target = tol * norm_b;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut work = vec![0.0; n];
    pre.apply(a, &r, &mut z, &mut work);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    let mut it = 0;
    let mut best_true = f64::INFINITY;
    loop {
        if dot(&r, &r).sqrt() <= target {
            a.mul_vec(&x, &mut ap);
            let mut true_r2 = 0.0;
            for i in 0..n {
                let d = b[i] - ap[i];
                true_r2 += d * d;
            }
            let true_res = true_r2.sqrt();
            let stagnated = true_res >= 0.9 * best_true;
            best_true = best_true.min(true_res);
            let floor = 4.0 * a.attainable_floor(&x, b);
            if true_res <= target || (stagnated && true_res <= (10.0 * target).max(floor)) {
                return Ok(CgSolution { x, iterations: it, rel_residual: true_res / norm_b });
            }
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            pre.apply(a, &r, &mut z, &mut work);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
        }
        if it >= max_iter {
            return Err(Error::SolverFailure { iterations: max_iter, residual: dot(&r, &r).sqrt() / norm_b });
        }
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotSpd(format!("p.Ap = {pap:.3e} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        pre.apply(a, &r, &mut z, &mut work);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
    }
}
