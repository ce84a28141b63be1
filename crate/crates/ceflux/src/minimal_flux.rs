//! Minimal submeasures of a flux by linear programming over atom densities.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, Row};
use crate::measure::{lebesgue_decompose, submeasure_check, AtomicVectorMeasure};
use crate::norm::pairwise_sum;
use crate::weak_form::{divergence_rows, TestBasis};
use serde::Serialize;

pub const DEFAULT_EPS_CON: f64 = 1e-8;

/// min c·λ over 0 <= λ <= 1 with |a_k·(1 - λ)| <= eps_con for unit-norm rows.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub eps_con: f64,
}

impl LpProblem {
    /// Rows are the divergence pairings of θ's atoms with the basis, each
    /// scaled to unit Euclidean norm; empty rows are dropped. Returns the
    /// problem, the atom index of each variable and the objective scale.
    pub fn from_theta(theta: &AtomicVectorMeasure, basis: &TestBasis, eps_con: f64) -> Result<(Self, Vec<usize>, f64)> {
        let vars: Vec<usize> = (0..theta.len())
            .filter(|&i| theta.atom(i).w.iter().any(|v| *v != 0.0))
            .collect();
        let mut col = vec![usize::MAX; theta.len()];
        for (k, &i) in vars.iter().enumerate() {
            col[i] = k;
        }
        let norm = theta.norm_spec();
        let c: Vec<f64> = vars.iter().map(|&i| norm.norm(theta.atom(i).w)).collect();
        let cmax = c.iter().fold(0.0f64, |m, v| m.max(*v));
        let objective = c.iter().map(|v| if cmax > 0.0 { v / cmax } else { 0.0 }).collect();
        let mut rows = Vec::new();
        for r in divergence_rows(theta, basis)? {
            let entries: Vec<(usize, f64)> = r.into_iter().filter(|e| col[e.0] != usize::MAX).map(|(i, v)| (col[i], v)).collect();
            let n2 = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            if n2 > 1e-14 {
                rows.push(entries.into_iter().map(|(j, v)| (j, v / n2)).collect());
            }
        }
        Ok((Self { objective, rows, eps_con }, vars, cmax))
    }
}

/// Returns λ and the objective c·λ.
pub fn solve_lp(p: &LpProblem) -> Result<(Vec<f64>, f64)> {
    if !(p.eps_con > 0.0) {
        return Err(Error::Invalid("eps_con must be positive".into()));
    }
    let n = p.objective.len();
    let rows = p
        .rows
        .iter()
        .map(|r| {
            let s: f64 = r.iter().map(|e| e.1).sum();
            Row {
                coeffs: r.clone(),
                lo: s - p.eps_con,
                hi: s + p.eps_con,
            }
        })
        .collect();
    let sol = lp::solve(&LinearProgram {
        objective: p.objective.clone(),
        lower: vec![0.0; n],
        upper: vec![1.0; n],
        rows,
    })?;
    Ok((sol.x, sol.objective))
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalSubmeasure {
    pub lambda: Vec<f64>,
    #[serde(skip)]
    pub zeta: AtomicVectorMeasure,
    /// Total variation of ζ.
    pub objective: f64,
    /// max_k |⟨θ - ζ, Dφ_k⟩| / ‖row k‖.
    pub max_violation: f64,
    pub n_rows: usize,
}

pub fn minimal_submeasure(theta: &AtomicVectorMeasure, basis: &TestBasis, eps_con: f64) -> Result<MinimalSubmeasure> {
    let (p, vars, cmax) = LpProblem::from_theta(theta, basis, eps_con)?;
    let mut lambda = vec![0.0; theta.len()];
    if !vars.is_empty() {
        let (x, _) = solve_lp(&p)?;
        for (k, &i) in vars.iter().enumerate() {
            lambda[i] = x[k].clamp(0.0, 1.0);
        }
    }
    let max_violation = p
        .rows
        .iter()
        .map(|r| r.iter().map(|&(j, v)| v * (1.0 - lambda[vars[j]])).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let zeta = theta.scaled_atomwise(&lambda)?;
    let terms: Vec<f64> = vars.iter().zip(&p.objective).map(|(&i, c)| c * cmax * lambda[i]).collect();
    Ok(MinimalSubmeasure {
        lambda,
        zeta,
        objective: pairwise_sum(&terms),
        max_violation,
        n_rows: p.rows.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalPair {
    /// Density on every ν atom; 1 on the part co-located with μ.
    pub lambda: Vec<f64>,
    pub singular: Vec<bool>,
    #[serde(skip)]
    pub nu_bar: AtomicVectorMeasure,
    /// Total variation of λν^⊥.
    pub objective: f64,
    pub tv_singular: f64,
    pub max_violation: f64,
    pub is_submeasure: bool,
}

pub fn minimal_pair(
    mu: &AtomicVectorMeasure,
    nu: &AtomicVectorMeasure,
    basis: &TestBasis,
    eps_loc: f64,
    eps_con: f64,
) -> Result<MinimalPair> {
    let (ac, perp, mask) = lebesgue_decompose(nu, mu, eps_loc)?;
    let sub = minimal_submeasure(&perp, basis, eps_con)?;
    let mut lambda = vec![1.0; nu.len()];
    let mut k = 0;
    for (i, s) in mask.iter().enumerate() {
        if *s {
            lambda[i] = sub.lambda[k];
            k += 1;
        }
    }
    let nu_bar = nu.scaled_atomwise(&lambda)?;
    let (is_submeasure, _) = submeasure_check(&nu_bar, nu, 1e-12)?;
    let _ = ac;
    Ok(MinimalPair {
        lambda,
        singular: mask,
        nu_bar,
        objective: sub.objective,
        tv_singular: perp.total_variation(None),
        max_violation: sub.max_violation,
        is_submeasure,
    })
}
