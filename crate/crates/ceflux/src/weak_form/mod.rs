//! Distributional residuals of the continuity equation against a finite
//! basis of C¹ bumps.

mod basis;

pub use basis::{bspline, Axis, TestBasis};

use crate::error::{Error, Result};
use crate::measure::{AtomicVectorMeasure, SymbolicMeasure};
use crate::norm::pairwise_sum;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_KNOTS: usize = 16;
/// Gauss order for exact pairings of symbolic measures with the basis.
pub const EXACT_ORDER: usize = 5;
const CHUNK: usize = 2048;
const COVER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub n_basis: usize,
    pub per_fn: Vec<f64>,
    pub pass: bool,
    pub tol: f64,
    /// 1 + max|φ| + max‖Dφ‖, shared by every basis member.
    pub normalization: f64,
    pub max_normalized: f64,
    pub cover_warning: bool,
}

impl ResidualReport {
    pub fn from_residuals(per_fn: Vec<f64>, normalization: f64, tol: f64, cover_warning: bool) -> Self {
        let max_abs = per_fn.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let max_normalized = max_abs / normalization;
        Self {
            max_abs,
            n_basis: per_fn.len(),
            per_fn,
            pass: max_normalized <= tol,
            tol,
            normalization,
            max_normalized,
            cover_warning,
        }
    }
}

/// How an atom pairs with the basis.
#[derive(Debug, Clone, Copy)]
pub enum Term {
    /// w ∂_a φ at (t, x) for scalar weights.
    Derivative(usize),
    /// w · (∂_{o} φ, ..., ∂_{o+m-1} φ) at (t, x); segment spans on the spatial
    /// axes are integrated exactly.
    Gradient(usize),
    /// w φ(0, x).
    Value,
    /// w_c φ(t, x).
    Plain(usize),
}

/// Pairing of every basis member with one measure, in basis order.
pub fn pairings(basis: &TestBasis, m: &AtomicVectorMeasure, term: Term) -> Vec<f64> {
    let n = basis.len();
    let ranges: Vec<(usize, usize)> = (0..m.len()).step_by(CHUNK).map(|a| (a, (a + CHUNK).min(m.len()))).collect();
    let parts: Vec<Vec<f64>> = ranges
        .par_iter()
        .map(|&(a, b)| {
            let mut acc = vec![0.0; n];
            let mut p = vec![0.0; basis.dims()];
            for i in a..b {
                accumulate_atom(basis, m, i, term, &mut p, &mut acc);
            }
            acc
        })
        .collect();
    (0..n)
        .map(|k| pairwise_sum(&parts.iter().map(|v| v[k]).collect::<Vec<_>>()))
        .collect()
}

fn set_point(p: &mut [f64], t: f64, x: &[f64]) {
    p[0] = t;
    p[1..].copy_from_slice(x);
}

fn accumulate_atom(basis: &TestBasis, m: &AtomicVectorMeasure, i: usize, term: Term, p: &mut [f64], acc: &mut [f64]) {
    let a = m.atom(i);
    match term {
        Term::Derivative(axis) => {
            set_point(p, a.t, a.x);
            let w = a.w[0];
            basis.for_each_active(p, |k, _, g| acc[k] += w * g[axis]);
        }
        Term::Plain(c) => {
            set_point(p, a.t, a.x);
            let w = a.w[c];
            basis.for_each_active(p, |k, v, _| acc[k] += w * v);
        }
        Term::Value => {
            set_point(p, 0.0, a.x);
            let w = a.w[0];
            basis.for_each_active(p, |k, v, _| acc[k] += w * v);
        }
        Term::Gradient(off) => {
            let exact_span = off == 1 && a.w.len() == a.x.len();
            match a.span {
                Some(s) if exact_span => {
                    let s2: f64 = s.iter().map(|v| v * v).sum();
                    let alpha = a.w.iter().zip(s).map(|(w, v)| w * v).sum::<f64>() / s2;
                    let perp: Vec<f64> = a.w.iter().zip(s).map(|(w, v)| w - alpha * v).collect();
                    let scale = a.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    for (sign, f) in [(1.0, 0.5), (-1.0, -0.5)] {
                        let x: Vec<f64> = a.x.iter().zip(s).map(|(x, v)| x + f * v).collect();
                        set_point(p, a.t, &x);
                        basis.for_each_active(p, |k, v, _| acc[k] += sign * alpha * v);
                    }
                    if perp.iter().any(|v| v.abs() > 1e-14 * scale) {
                        set_point(p, a.t, a.x);
                        basis.for_each_active(p, |k, _, g| {
                            acc[k] += perp.iter().zip(&g[off..]).map(|(w, d)| w * d).sum::<f64>()
                        });
                    }
                }
                _ => {
                    set_point(p, a.t, a.x);
                    basis.for_each_active(p, |k, _, g| {
                        acc[k] += a.w.iter().zip(&g[off..]).map(|(w, d)| w * d).sum::<f64>()
                    });
                }
            }
        }
    }
}

fn covered(basis: &TestBasis, m: &AtomicVectorMeasure) -> bool {
    let mut p = vec![0.0; basis.dims()];
    m.atoms().all(|a| {
        set_point(&mut p, a.t, a.x);
        basis.contains(&p, COVER_SLACK)
    })
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

/// Residuals r_k = ⟨μ, ∂ₜφ_k⟩ + ⟨ν, Dφ_k⟩ + ⟨μ₀, φ_k(0,·)⟩.
pub fn ce_residual(
    mu: &AtomicVectorMeasure,
    nu: &AtomicVectorMeasure,
    mu0: &AtomicVectorMeasure,
    basis: &TestBasis,
    tol: f64,
) -> Result<ResidualReport> {
    let d = basis.dims() - 1;
    for m in [mu, nu, mu0] {
        if m.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: m.dim(),
            });
        }
    }
    if mu.weight_dim() != 1 || mu0.weight_dim() != 1 {
        return Err(Error::Invalid("mu and mu0 must be scalar".into()));
    }
    if nu.weight_dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: nu.weight_dim(),
        });
    }
    let mut r = pairings(basis, mu, Term::Derivative(0));
    add_into(&mut r, &pairings(basis, nu, Term::Gradient(1)));
    add_into(&mut r, &pairings(basis, mu0, Term::Value));
    let warn = !(covered(basis, mu) && covered(basis, nu) && covered(basis, mu0));
    Ok(ResidualReport::from_residuals(r, basis.c1_proxy(), tol, warn))
}

/// Gauss atoms of a symbolic measure split at the basis knots, so that all
/// pairings with the basis are exact up to rounding.
pub fn exact_atoms(m: &SymbolicMeasure, basis: &TestBasis) -> Result<AtomicVectorMeasure> {
    let br = basis.breaks();
    m.quadrature(&br[0], &br[1..], EXACT_ORDER)
}

/// ce_residual with exact pairings of symbolic measures.
pub fn ce_residual_exact(
    mu: &SymbolicMeasure,
    nu: &SymbolicMeasure,
    mu0: &SymbolicMeasure,
    basis: &TestBasis,
    tol: f64,
) -> Result<ResidualReport> {
    ce_residual(
        &exact_atoms(mu, basis)?,
        &exact_atoms(nu, basis)?,
        &exact_atoms(mu0, basis)?,
        basis,
        tol,
    )
}

/// Residuals of ∂ₛσ + ∂ₜσ⁰ + div σ̄ = 0 with datum at s = 0. All measures
/// store s in the time slot and (t, x) as the point; `start` holds the
/// initial points (t, x).
pub fn augmented_residual(
    sigma: &AtomicVectorMeasure,
    sigma0: &AtomicVectorMeasure,
    sigma_vec: &AtomicVectorMeasure,
    start: &AtomicVectorMeasure,
    basis: &TestBasis,
    tol: f64,
) -> Result<ResidualReport> {
    let d1 = basis.dims() - 1;
    for m in [sigma, sigma0, sigma_vec, start] {
        if m.dim() != d1 {
            return Err(Error::Dimension {
                expected: d1,
                got: m.dim(),
            });
        }
    }
    if sigma_vec.weight_dim() + 1 != d1 {
        return Err(Error::Dimension {
            expected: d1 - 1,
            got: sigma_vec.weight_dim(),
        });
    }
    let mut r = pairings(basis, sigma, Term::Derivative(0));
    add_into(&mut r, &pairings(basis, sigma0, Term::Derivative(1)));
    add_into(&mut r, &pairings(basis, sigma_vec, Term::Gradient(2)));
    add_into(&mut r, &pairings(basis, start, Term::Value));
    let warn = ![sigma, sigma0, sigma_vec, start].iter().all(|m| covered(basis, m));
    Ok(ResidualReport::from_residuals(r, basis.c1_proxy(), tol, warn))
}

/// A C¹ function of (t, x) with its full gradient.
pub trait TestFunction: Sync {
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>);
}

/// One member of a basis viewed as a test function.
pub struct BasisFunction<'a> {
    pub basis: &'a TestBasis,
    pub k: usize,
}

impl TestFunction for BasisFunction<'_> {
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        self.basis.eval(self.k, p)
    }
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync> TestFunction for F {
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        self(p)
    }
}

/// ⟨θ, Dφ⟩ for a vector measure θ; span atoms integrate exactly.
pub fn divergence_pairing(theta: &AtomicVectorMeasure, phi: &dyn TestFunction) -> Result<f64> {
    let terms: Vec<f64> = (0..theta.len()).map(|i| atom_divergence(theta, i, phi)).collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

fn atom_divergence(theta: &AtomicVectorMeasure, i: usize, phi: &dyn TestFunction) -> Result<f64> {
    let a = theta.atom(i);
    if a.w.len() != a.x.len() {
        return Err(Error::Dimension {
            expected: a.x.len(),
            got: a.w.len(),
        });
    }
    let mut p = vec![0.0; a.x.len() + 1];
    let dot = |w: &[f64], g: &[f64]| w.iter().zip(&g[1..]).map(|(a, b)| a * b).sum::<f64>();
    match a.span {
        Some(s) => {
            let s2: f64 = s.iter().map(|v| v * v).sum();
            let alpha = a.w.iter().zip(s).map(|(w, v)| w * v).sum::<f64>() / s2;
            let perp: Vec<f64> = a.w.iter().zip(s).map(|(w, v)| w - alpha * v).collect();
            let mut out = 0.0;
            for (sign, f) in [(1.0, 0.5), (-1.0, -0.5)] {
                let x: Vec<f64> = a.x.iter().zip(s).map(|(x, v)| x + f * v).collect();
                set_point(&mut p, a.t, &x);
                out += sign * alpha * phi.eval(&p).0;
            }
            set_point(&mut p, a.t, a.x);
            Ok(out + dot(&perp, &phi.eval(&p).1))
        }
        None => {
            set_point(&mut p, a.t, a.x);
            Ok(dot(a.w, &phi.eval(&p).1))
        }
    }
}

/// Sparse divergence pairings a_ki = ⟨θ_i, Dφ_k⟩ grouped by basis member.
pub fn divergence_rows(theta: &AtomicVectorMeasure, basis: &TestBasis) -> Result<Vec<Vec<(usize, f64)>>> {
    if theta.weight_dim() != theta.dim() || basis.dims() != theta.dim() + 1 {
        return Err(Error::Dimension {
            expected: basis.dims() - 1,
            got: theta.dim(),
        });
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); basis.len()];
    let mut acc = vec![0.0; basis.len()];
    let mut touched: Vec<usize> = Vec::new();
    let mut p = vec![0.0; basis.dims()];
    let single = AtomicVectorMeasure::new(theta.dim(), theta.weight_dim(), theta.norm_spec());
    for i in 0..theta.len() {
        let mut one = single.clone();
        let a = theta.atom(i);
        one.push_cell(a.t, a.dt, a.x, a.w, a.span)?;
        accumulate_atom(basis, &one, 0, Term::Gradient(1), &mut p, &mut acc);
        touched.clear();
        touched.extend(acc.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, _)| k));
        for &k in &touched {
            rows[k].push((i, acc[k]));
            acc[k] = 0.0;
        }
    }
    Ok(rows)
}

/// Box [-0.2 T, T] × (spatial support inflated by 10% of its extent per side,
/// extent at least 1) for the measures.
pub fn ce_cover(measures: &[&AtomicVectorMeasure], horizon: f64) -> Result<Vec<(f64, f64)>> {
    let mut space: Option<Vec<(f64, f64)>> = None;
    for m in measures {
        if let Some((_, b)) = m.bounds() {
            space = Some(match space {
                None => b,
                Some(s) => s.iter().zip(&b).map(|(p, q)| (p.0.min(q.0), p.1.max(q.1))).collect(),
            });
        }
    }
    let space = space.ok_or_else(|| Error::Invalid("cannot cover empty measures".into()))?;
    if !(horizon > 0.0) {
        return Err(Error::Invalid("horizon must be positive".into()));
    }
    let mut out = vec![(-0.2 * horizon, horizon)];
    out.extend(space.iter().map(|&(lo, hi)| inflate(lo, hi)));
    Ok(out)
}

pub fn inflate(lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(0.5) * 1.2;
    (c - half, c + half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Component, SpacePart, TimePart};

    fn stationary() -> (AtomicVectorMeasure, AtomicVectorMeasure, AtomicVectorMeasure) {
        let mu = SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(
                TimePart::interval(0.0, 1.0),
                SpacePart::Atoms {
                    points: vec![vec![0.0]],
                    weights: vec![vec![1.0]],
                },
                1.0,
            )],
        )
        .unwrap();
        let mut mu0 = AtomicVectorMeasure::scalar(1);
        mu0.push(0.0, &[0.0], &[1.0]).unwrap();
        let nu = AtomicVectorMeasure::new(1, 1, Default::default());
        (mu.discretize(64).unwrap(), nu, mu0)
    }

    #[test]
    fn stationary_solution_is_exact_in_span() {
        let (mu, nu, mu0) = stationary();
        let b = TestBasis::uniform(&[(-0.2, 1.0), (-1.0, 1.0)], 16).unwrap();
        let mb = SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(
                TimePart::interval(0.0, 1.0),
                SpacePart::Atoms {
                    points: vec![vec![0.0]],
                    weights: vec![vec![1.0]],
                },
                1.0,
            )],
        )
        .unwrap();
        let r = ce_residual(&exact_atoms(&mb, &b).unwrap(), &nu, &mu0, &b, 1e-10).unwrap();
        assert!(r.max_abs < 1e-14, "{}", r.max_abs);
        assert!(!r.cover_warning);
        let r = ce_residual(&mu, &nu, &mu0, &b, 1e-3).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn open_polyline_divergence_telescopes() {
        let poly = SymbolicMeasure::new(
            2,
            2,
            vec![Component::new(
                TimePart::dirac(0.0),
                SpacePart::Polyline {
                    points: vec![vec![0.0, 0.0], vec![0.5, 0.2], vec![1.0, 1.0]],
                    orientation: 1,
                },
                1.0,
            )],
        )
        .unwrap()
        .discretize(2)
        .unwrap();
        let psi = |p: &[f64]| (p[1] * p[1] + p[2].sin(), vec![0.0, 2.0 * p[1], p[2].cos()]);
        let v = divergence_pairing(&poly, &psi).unwrap();
        assert!((v - (1.0 + (1.0f64).sin())).abs() < 1e-14);
        let zero = AtomicVectorMeasure::new(2, 2, Default::default());
        assert_eq!(divergence_pairing(&zero, &psi).unwrap(), 0.0);
    }

    #[test]
    fn rows_match_pairings() {
        let nu = SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(
                TimePart::interval(0.0, 1.0),
                SpacePart::Segment { a: vec![0.0], b: vec![1.0] },
                1.0,
            )],
        )
        .unwrap()
        .discretize(8)
        .unwrap();
        let b = TestBasis::uniform(&[(-0.2, 1.0), (-0.2, 1.2)], 10).unwrap();
        let rows = divergence_rows(&nu, &b).unwrap();
        let direct = pairings(&b, &nu, Term::Gradient(1));
        for k in 0..b.len() {
            let s: f64 = rows[k].iter().map(|e| e.1).sum();
            assert!((s - direct[k]).abs() < 1e-13);
            let f = BasisFunction { basis: &b, k };
            assert!((divergence_pairing(&nu, &f).unwrap() - direct[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_in_the_pair() {
        let (mu, nu, mu0) = stationary();
        let b = TestBasis::uniform(&[(-0.2, 1.0), (-1.0, 1.0)], 12).unwrap();
        let r1 = ce_residual(&mu, &nu, &mu0, &b, 1.0).unwrap();
        let r2 = ce_residual(&mu.scaled(0.25), &nu, &mu0.scaled(0.25), &b, 1.0).unwrap();
        for (a, c) in r1.per_fn.iter().zip(&r2.per_fn) {
            assert!((0.25 * a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn cover_flags_outside_support() {
        let (mu, nu, mu0) = stationary();
        let b = TestBasis::uniform(&[(-0.2, 0.5), (-1.0, 1.0)], 12).unwrap();
        assert!(ce_residual(&mu, &nu, &mu0, &b, 1.0).unwrap().cover_warning);
    }
}
