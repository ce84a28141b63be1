//! Dense bounded-variable two-phase simplex with Bland's rule.

use crate::error::{Error, Result};

pub const PIVOT_LIMIT: usize = 1_000_000;
const PIV_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// lo <= Σ coeffs · x <= hi.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

/// min c·x over lower <= x <= upper and the range rows. Lower bounds must be
/// finite; upper bounds may be infinite.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    m: usize,
    ncol: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    at_upper: Vec<bool>,
    ub: Vec<f64>,
    d: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn set_costs(&mut self, c: &[f64]) {
        self.d = c.to_vec();
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.ncol..(i + 1) * self.ncol];
                self.d.iter_mut().zip(row).for_each(|(d, a)| *d -= cb * a);
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncol;
        let p = self.a[r * n + j];
        for v in &mut self.a[r * n..(r + 1) * n] {
            *v /= p;
        }
        let (head, rest) = self.a.split_at_mut(r * n);
        let (prow, tail) = rest.split_at_mut(n);
        for (i, row) in head.chunks_mut(n).chain(tail.chunks_mut(n)).enumerate() {
            let _ = i;
            let f = row[j];
            if f != 0.0 {
                row.iter_mut().zip(prow.iter()).for_each(|(a, b)| *a -= f * b);
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            self.d.iter_mut().zip(prow.iter()).for_each(|(a, b)| *a -= f * b);
            self.d[j] = 0.0;
        }
        self.in_basis[self.basis[r]] = false;
        self.in_basis[j] = true;
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn run(&mut self) -> Result<()> {
        let n = self.ncol;
        loop {
            if self.pivots > PIVOT_LIMIT {
                return Err(Error::PivotLimit(PIVOT_LIMIT));
            }
            let entering = (0..n).find(|&j| {
                !self.in_basis[j]
                    && self.ub[j] > 0.0
                    && ((!self.at_upper[j] && self.d[j] < -OPT_TOL) || (self.at_upper[j] && self.d[j] > OPT_TOL))
            });
            let Some(j) = entering else { return Ok(()) };
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
            let mut best = self.ub[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let alpha = dir * self.a[i * n + j];
                let b = self.basis[i];
                let (lim, up) = if alpha > PIV_TOL {
                    (self.beta[i].max(0.0) / alpha, false)
                } else if alpha < -PIV_TOL && self.ub[b].is_finite() {
                    ((self.ub[b] - self.beta[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if lim < best => true,
                    Some((r, _)) if lim == best => b < self.basis[r],
                    _ => false,
                };
                if better {
                    best = lim;
                    leave = Some((i, up));
                }
            }
            if !best.is_finite() {
                return Err(Error::Unbounded);
            }
            for i in 0..self.m {
                self.beta[i] -= dir * self.a[i * n + j] * best;
            }
            match leave {
                None => {
                    self.at_upper[j] = !self.at_upper[j];
                    self.pivots += 1;
                }
                Some((r, up)) => {
                    let leaving = self.basis[r];
                    let entering_val = if self.at_upper[j] { self.ub[j] - best } else { best };
                    self.at_upper[leaving] = up;
                    self.pivot(r, j);
                    self.beta[r] = entering_val;
                    self.at_upper[j] = false;
                }
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    let nv = lp.objective.len();
    if lp.lower.len() != nv || lp.upper.len() != nv {
        return Err(Error::Invalid("bounds and objective differ in length".into()));
    }
    for j in 0..nv {
        if !lp.lower[j].is_finite() || !(lp.upper[j] >= lp.lower[j]) {
            return Err(Error::Invalid(format!("bad bounds for variable {j}")));
        }
    }
    // normalize rows to finite lower ends
    let mut rows = Vec::new();
    for r in &lp.rows {
        if r.coeffs.iter().any(|&(j, _)| j >= nv) {
            return Err(Error::Invalid("row refers to a missing variable".into()));
        }
        if r.lo > r.hi {
            return Err(Error::Infeasible);
        }
        if r.lo.is_finite() {
            rows.push(r.clone());
        } else if r.hi.is_finite() {
            rows.push(Row {
                coeffs: r.coeffs.iter().map(|&(j, v)| (j, -v)).collect(),
                lo: -r.hi,
                hi: f64::INFINITY,
            });
        }
    }
    let m = rows.len();
    let ncol = nv + 2 * m;
    let mut a = vec![0.0; m * ncol];
    let mut beta = vec![0.0; m];
    for (i, r) in rows.iter().enumerate() {
        let mut b = r.lo;
        for &(j, v) in &r.coeffs {
            a[i * ncol + j] += v;
            b -= v * lp.lower[j];
        }
        a[i * ncol + nv + i] = -1.0;
        if b < 0.0 {
            for v in &mut a[i * ncol..(i + 1) * ncol] {
                *v = -*v;
            }
            b = -b;
        }
        a[i * ncol + nv + m + i] = 1.0;
        beta[i] = b;
    }
    let mut ub: Vec<f64> = (0..nv).map(|j| lp.upper[j] - lp.lower[j]).collect();
    ub.extend(rows.iter().map(|r| r.hi - r.lo));
    ub.extend(std::iter::repeat_n(f64::INFINITY, m));
    let mut in_basis = vec![false; ncol];
    let basis: Vec<usize> = (0..m).map(|i| nv + m + i).collect();
    for &b in &basis {
        in_basis[b] = true;
    }
    let mut t = Tableau {
        m,
        ncol,
        a,
        beta,
        basis,
        in_basis,
        at_upper: vec![false; ncol],
        ub,
        d: Vec::new(),
        pivots: 0,
    };
    let mut c1 = vec![0.0; ncol];
    c1[nv + m..].iter_mut().for_each(|c| *c = 1.0);
    t.set_costs(&c1);
    t.run()?;
    let scale = 1.0 + rows.iter().map(|r| r.lo.abs()).fold(0.0, f64::max);
    let infeas: f64 = (0..m).filter(|&i| t.basis[i] >= nv + m).map(|i| t.beta[i]).sum();
    if infeas > FEAS_TOL * scale {
        return Err(Error::Infeasible);
    }
    for i in 0..m {
        if t.basis[i] >= nv + m {
            t.beta[i] = 0.0;
        }
    }
    t.ub[nv + m..].iter_mut().for_each(|u| *u = 0.0);
    let mut c2 = vec![0.0; ncol];
    c2[..nv].copy_from_slice(&lp.objective);
    t.set_costs(&c2);
    t.run()?;
    let mut x: Vec<f64> = (0..nv).map(|j| if t.at_upper[j] { t.ub[j] } else { 0.0 }).collect();
    for i in 0..m {
        if t.basis[i] < nv {
            x[t.basis[i]] = t.beta[i].clamp(0.0, t.ub[t.basis[i]]);
        }
    }
    let mut objective = 0.0;
    for j in 0..nv {
        x[j] += lp.lower[j];
        objective += lp.objective[j] * x[j];
    }
    Ok(LpSolution {
        x,
        objective,
        pivots: t.pivots,
    })
}
