//! Finite curve ensembles and their pushforward representations.

use crate::curves::{segment_nodes, to_abv, ABVCurve, LipCurve, PathQuadrature};
use crate::error::{Error, Result};
use crate::measure::{AtomicVectorMeasure, SymbolicMeasure};
use crate::norm::{pairwise_sum, NormSpec};
use crate::weak_form::{exact_atoms, pairings, ResidualReport, Term, TestBasis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Threshold on t' separating D₊ from D₀.
pub const EPS_FLAT: f64 = 1e-6;
pub const WEIGHT_TOL: f64 = 1e-9;
/// Cubic pieces along straight segments need only two Gauss points; four
/// leave margin for the product with linear weights.
const PUSH_ORDER: usize = 4;

/// (τ, v) at a point (t, x).
pub trait FieldSampler: Sync {
    fn sample(&self, p: &[f64]) -> (f64, Vec<f64>);
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>) + Sync> FieldSampler for F {
    fn sample(&self, p: &[f64]) -> (f64, Vec<f64>) {
        self(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperpositionMeasure {
    pub weights: Vec<f64>,
    pub curves: Vec<LipCurve>,
    pub s_max: f64,
    pub s_step: f64,
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Invalid("ensemble weights must be nonnegative".into()));
    }
    let total = pairwise_sum(w);
    if !w.is_empty() && (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Invalid(format!("ensemble weights sum to {total}")));
    }
    Ok(())
}

impl SuperpositionMeasure {
    pub fn new(curves: Vec<LipCurve>, weights: Vec<f64>, s_max: f64, s_step: f64) -> Result<Self> {
        if curves.len() != weights.len() {
            return Err(Error::Invalid("one weight per curve".into()));
        }
        check_weights(&weights)?;
        if !(s_max > 0.0) || !(s_step > 0.0) {
            return Err(Error::Invalid("s_max and s_step must be positive".into()));
        }
        if let Some(c) = curves.iter().find(|c| !c.is_anchored()) {
            return Err(Error::Invalid(format!("curve starts at t = {}", c.start()[0])));
        }
        if let Some(c) = curves.first() {
            if curves.iter().any(|y| y.dim() != c.dim()) {
                return Err(Error::Invalid("curves differ in dimension".into()));
            }
        }
        Ok(Self {
            weights,
            curves,
            s_max,
            s_step,
        })
    }

    /// Equal weights, horizon at the longest curve.
    pub fn uniform(curves: Vec<LipCurve>, s_step: f64) -> Result<Self> {
        let n = curves.len();
        let s_max = curves.iter().map(|c| c.end_s()).fold(0.0, f64::max).max(s_step);
        Self::new(curves, vec![1.0 / n as f64; n], s_max, s_step)
    }

    /// Weighted union of two ensembles.
    pub fn mix(a: &Self, wa: f64, b: &Self, wb: f64) -> Result<Self> {
        let mut curves = a.curves.clone();
        curves.extend(b.curves.iter().cloned());
        let weights = a.weights.iter().map(|p| p * wa).chain(b.weights.iter().map(|p| p * wb)).collect();
        Self::new(curves, weights, a.s_max.max(b.s_max), a.s_step.min(b.s_step))
    }

    /// Spatial dimension d.
    pub fn dim(&self) -> usize {
        self.curves.first().map(|c| c.dim()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.curves.iter().all(|c| c.is_normalized(crate::curves::NORMALIZED_TOL))
    }

    /// Straight pieces of curve j inside [0, s_max], with their s-length.
    fn pieces(&self, j: usize) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
        let y = &self.curves[j];
        let s = y.breakpoints();
        let mut out = Vec::new();
        for k in 0..y.segments() {
            if s[k] >= self.s_max {
                break;
            }
            let (a, b) = (y.point(k).to_vec(), y.point(k + 1));
            if s[k + 1] <= self.s_max {
                out.push((a, b.to_vec(), s[k + 1] - s[k]));
            } else {
                let lam = (self.s_max - s[k]) / (s[k + 1] - s[k]);
                let b = a.iter().zip(b).map(|(p, q)| p + lam * (q - p)).collect();
                out.push((a, b, self.s_max - s[k]));
            }
        }
        out
    }

    /// Quadrature atoms at (t, x) of Σⱼ pⱼ ∫ δ_{yⱼ(s)} g(yⱼ'(s)) ds, split at
    /// the basis knots. `g` receives Δy over a piece and its s-length, and
    /// returns the weight for the whole piece or None to drop it.
    pub fn node_measure(
        &self,
        basis: &TestBasis,
        m: usize,
        g: impl Fn(&[f64], f64) -> Option<Vec<f64>> + Sync,
    ) -> AtomicVectorMeasure {
        let d = self.dim();
        let q = PathQuadrature::with_breaks(basis.breaks(), PUSH_ORDER);
        let parts: Vec<AtomicVectorMeasure> = (0..self.len())
            .into_par_iter()
            .map(|j| {
                let mut out = AtomicVectorMeasure::new(d, m, NormSpec::L2);
                let p = self.weights[j];
                if p == 0.0 {
                    return out;
                }
                for (a, b, ds) in self.pieces(j) {
                    let dy: Vec<f64> = b.iter().zip(&a).map(|(u, v)| u - v).collect();
                    let Some(w) = g(&dy, ds) else { continue };
                    segment_nodes(&a, &b, &q, |pt, _, lw| {
                        let ww: Vec<f64> = w.iter().map(|v| v * p * lw).collect();
                        out.push(pt[0].max(0.0), &pt[1..], &ww).expect("finite node");
                    });
                }
                out
            })
            .collect();
        let mut all = AtomicVectorMeasure::new(d, m, NormSpec::L2);
        for p in &parts {
            all.extend(p).expect("matching shapes");
        }
        all
    }

    /// The time-derivative pushforward 𝔢♯(t'η_ℒ) as atoms.
    pub fn mu_measure(&self, basis: &TestBasis) -> AtomicVectorMeasure {
        self.node_measure(basis, 1, |dy, _| Some(vec![dy[0]]))
    }

    /// 𝔢♯(x'η_ℒ) as atoms.
    pub fn nu_measure(&self, basis: &TestBasis) -> AtomicVectorMeasure {
        self.node_measure(basis, self.dim(), |dy, _| Some(dy[1..].to_vec()))
    }

    fn norm(&self) -> NormSpec {
        self.curves.first().map(|c| c.norm_spec()).unwrap_or_default()
    }

    pub fn tv_measure(&self, basis: &TestBasis) -> AtomicVectorMeasure {
        let n = self.norm();
        self.node_measure(basis, 1, move |dy, _| Some(vec![n.norm_with_head(dy[0], &dy[1..])]))
    }

    /// 𝔢♯η_ℒ restricted to [0, s_max].
    pub fn eval_measure(&self, basis: &TestBasis) -> AtomicVectorMeasure {
        self.node_measure(basis, 1, |_, ds| Some(vec![ds]))
    }
}

fn flatten(basis: &TestBasis, m: &AtomicVectorMeasure) -> Vec<f64> {
    let per: Vec<Vec<f64>> = (0..m.weight_dim()).map(|c| pairings(basis, m, Term::Plain(c))).collect();
    (0..basis.len())
        .flat_map(|k| per.iter().map(move |v| v[k]))
        .collect()
}

/// ⟨μ, φ_k⟩ for every basis member.
pub fn push_mu(eta: &SuperpositionMeasure, basis: &TestBasis) -> Vec<f64> {
    flatten(basis, &eta.mu_measure(basis))
}

/// ⟨ν_c, φ_k⟩ at index k·d + c.
pub fn push_nu(eta: &SuperpositionMeasure, basis: &TestBasis) -> Vec<f64> {
    flatten(basis, &eta.nu_measure(basis))
}

pub fn push_tv(eta: &SuperpositionMeasure, basis: &TestBasis) -> Vec<f64> {
    flatten(basis, &eta.tv_measure(basis))
}

pub fn push_eval(eta: &SuperpositionMeasure, basis: &TestBasis) -> Vec<f64> {
    flatten(basis, &eta.eval_measure(basis))
}

/// Exact value pairings of a symbolic measure, laid out like push_nu.
pub fn symbolic_pairings(m: &SymbolicMeasure, basis: &TestBasis) -> Result<Vec<f64>> {
    Ok(flatten(basis, &exact_atoms(m, basis)?))
}

/// Σⱼ pⱼ ∫ φ(yⱼ) · yⱼ' ds for a closed-form field φ: (t, x) -> (φ₀, φ⃗).
pub fn push_field(eta: &SuperpositionMeasure, phi: &(dyn Fn(&[f64]) -> Vec<f64> + Sync), q: &PathQuadrature) -> f64 {
    let per: Vec<f64> = (0..eta.len())
        .into_par_iter()
        .map(|j| {
            let terms: Vec<f64> = eta
                .pieces(j)
                .iter()
                .map(|(a, b, _)| crate::curves::segment_integral(a, b, phi, q))
                .collect();
            eta.weights[j] * pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&per)
}

/// ⟨μ, φ₀⟩ + ⟨ν, φ⃗⟩ for a closed-form field.
pub fn symbolic_field(mu: &SymbolicMeasure, nu: &SymbolicMeasure, phi: &dyn Fn(&[f64]) -> Vec<f64>, order: usize) -> Result<f64> {
    let mut terms = Vec::new();
    for a in mu.quadrature(&[], &[], order)?.atoms() {
        terms.push(a.w[0] * phi(&point(a.t, a.x))[0]);
    }
    for a in nu.quadrature(&[], &[], order)?.atoms() {
        let f = phi(&point(a.t, a.x));
        terms.push(a.w.iter().zip(&f[1..]).map(|(w, v)| w * v).sum());
    }
    Ok(pairwise_sum(&terms))
}

fn point(t: f64, x: &[f64]) -> Vec<f64> {
    let mut p = vec![t];
    p.extend_from_slice(x);
    p
}

/// Pairing deviations against test functions with sup ≤ 1, so the
/// normalization is 1.
pub fn compare(got: &[f64], want: &[f64], tol: f64) -> ResidualReport {
    let diff = got.iter().zip(want).map(|(a, b)| a - b).collect();
    ResidualReport::from_residuals(diff, 1.0, tol, false)
}

#[derive(Debug, Clone, Serialize)]
pub struct RepresentationReport {
    pub mu: ResidualReport,
    pub nu: ResidualReport,
    pub tv: Option<ResidualReport>,
    /// push_tv against 𝔢♯η_ℒ; None for non-normalized ensembles.
    pub tv_eval_gap: Option<f64>,
    pub normalized: bool,
    pub d_plus_mass: f64,
    pub d_zero_mass: f64,
    pub pass: bool,
}

/// Compares the ensemble pushforwards with (μ, ν) and, if given, |(μ, ν)|.
pub fn represent(
    eta: &SuperpositionMeasure,
    mu: &SymbolicMeasure,
    nu: &SymbolicMeasure,
    tv: Option<&SymbolicMeasure>,
    basis: &TestBasis,
    tol: f64,
) -> Result<RepresentationReport> {
    let mu_r = compare(&push_mu(eta, basis), &symbolic_pairings(mu, basis)?, tol);
    let nu_r = compare(&push_nu(eta, basis), &symbolic_pairings(nu, basis)?, tol);
    let ptv = push_tv(eta, basis);
    let tv_r = match tv {
        Some(m) => Some(compare(&ptv, &symbolic_pairings(m, basis)?, tol)),
        None => None,
    };
    let normalized = eta.is_normalized();
    let tv_eval_gap = normalized.then(|| {
        ptv.iter()
            .zip(push_eval(eta, basis))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    });
    let split = split_d(eta, basis);
    let pass = mu_r.pass && nu_r.pass && tv_r.as_ref().map_or(true, |r| r.pass);
    Ok(RepresentationReport {
        mu: mu_r,
        nu: nu_r,
        tv: tv_r,
        tv_eval_gap,
        normalized,
        d_plus_mass: split.mass_plus,
        d_zero_mass: split.mass_zero,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitReport {
    /// Flux pairings on D₊ and D₀, laid out like push_nu.
    pub nu_plus: Vec<f64>,
    pub nu_zero: Vec<f64>,
    /// Time pushforward restricted to D₊.
    pub mu_plus: Vec<f64>,
    pub mass_plus: f64,
    pub mass_zero: f64,
}

pub fn split_d(eta: &SuperpositionMeasure, basis: &TestBasis) -> SplitReport {
    let d = eta.dim();
    let n = eta.norm();
    let plus = |dy: &[f64], ds: f64| dy[0] > EPS_FLAT * ds;
    let nu_plus = eta.node_measure(basis, d, |dy, ds| plus(dy, ds).then(|| dy[1..].to_vec()));
    let nu_zero = eta.node_measure(basis, d, |dy, ds| (!plus(dy, ds)).then(|| dy[1..].to_vec()));
    let mu_plus = eta.node_measure(basis, 1, |dy, ds| plus(dy, ds).then(|| vec![dy[0]]));
    let mass = |keep: bool| {
        let per: Vec<f64> = (0..eta.len())
            .map(|j| {
                let t: Vec<f64> = eta
                    .pieces(j)
                    .iter()
                    .filter(|(a, b, ds)| {
                        let dt = b[0] - a[0];
                        (dt > EPS_FLAT * ds) == keep
                    })
                    .map(|(a, b, _)| {
                        let dx: Vec<f64> = b[1..].iter().zip(&a[1..]).map(|(u, v)| u - v).collect();
                        n.norm(&dx)
                    })
                    .collect();
                eta.weights[j] * pairwise_sum(&t)
            })
            .collect();
        pairwise_sum(&per)
    };
    SplitReport {
        nu_plus: flatten(basis, &nu_plus),
        nu_zero: flatten(basis, &nu_zero),
        mu_plus: flatten(basis, &mu_plus),
        mass_plus: mass(true),
        mass_zero: mass(false),
    }
}

/// max over samples of ‖y'(s) - (τ, v)(y(s))‖, sampled every s_step along
/// each curve at cell midpoints.
pub fn characteristic_residual(eta: &SuperpositionMeasure, field: &dyn FieldSampler) -> f64 {
    let norm = eta.norm();
    let per: Vec<f64> = (0..eta.len())
        .into_par_iter()
        .map(|j| {
            let mut worst = 0.0f64;
            for (a, b, ds) in eta.pieces(j) {
                if ds <= 0.0 {
                    continue;
                }
                let cells = (ds / eta.s_step).ceil().max(1.0) as usize;
                let vel: Vec<f64> = b.iter().zip(&a).map(|(u, v)| (u - v) / ds).collect();
                for i in 0..cells {
                    let lam = (i as f64 + 0.5) / cells as f64;
                    let p: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + lam * (v - u)).collect();
                    let (tau, v) = field.sample(&p);
                    let dx: Vec<f64> = vel[1..].iter().zip(&v).map(|(a, b)| a - b).collect();
                    worst = worst.max(norm.norm_with_head(vel[0] - tau, &dx));
                }
            }
            worst
        })
        .collect();
    per.into_iter().fold(0.0, f64::max)
}

/// Weighted ensemble of ABV curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BvEnsemble {
    pub weights: Vec<f64>,
    pub curves: Vec<ABVCurve>,
}

impl BvEnsemble {
    pub fn new(curves: Vec<ABVCurve>, weights: Vec<f64>) -> Result<Self> {
        if curves.len() != weights.len() {
            return Err(Error::Invalid("one weight per curve".into()));
        }
        check_weights(&weights)?;
        Ok(Self { weights, curves })
    }

    /// 𝒮♯η.
    pub fn from_lipschitz(eta: &SuperpositionMeasure) -> Result<Self> {
        let curves = eta.curves.iter().map(to_abv).collect::<Result<Vec<_>>>()?;
        Self::new(curves, eta.weights.clone())
    }

    pub fn dim(&self) -> usize {
        self.curves.first().map(|c| c.dim()).unwrap_or(0)
    }

    /// (Σ pⱼ δ_{uⱼ(t)}, Σ pⱼ δ_{uⱼ(t+)}).
    pub fn slices_pm(&self, t: f64) -> Result<(AtomicVectorMeasure, AtomicVectorMeasure)> {
        let d = self.dim();
        let mut left = AtomicVectorMeasure::scalar(d);
        let mut right = AtomicVectorMeasure::scalar(d);
        for (u, p) in self.curves.iter().zip(&self.weights) {
            left.push(0.0, &u.skeleton(t), &[*p])?;
            right.push(0.0, &u.skeleton_right(t), &[*p])?;
        }
        Ok((left, right))
    }

    /// Σⱼ pⱼ ⟨ϑ_{uⱼ}, φ_k e_c⟩ at index k·(1+d) + c.
    pub fn theta_pairings(&self, basis: &TestBasis) -> Vec<f64> {
        let d = self.dim();
        self.graph_pairings(basis, d + 1, |dy| dy.to_vec())
    }

    /// Σⱼ pⱼ ⟨|ϑ_{uⱼ}|, φ_k⟩.
    pub fn tv_pairings(&self, basis: &TestBasis) -> Vec<f64> {
        let n = self.curves.first().map(|c| c.norm_spec()).unwrap_or_default();
        self.graph_pairings(basis, 1, move |dy| vec![n.norm_with_head(dy[0], &dy[1..])])
    }

    fn graph_pairings(&self, basis: &TestBasis, m: usize, g: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Vec<f64> {
        let d = self.dim();
        let q = PathQuadrature::with_breaks(basis.breaks(), PUSH_ORDER);
        let parts: Vec<AtomicVectorMeasure> = self
            .curves
            .par_iter()
            .zip(&self.weights)
            .map(|(u, p)| {
                let mut out = AtomicVectorMeasure::new(d, m, NormSpec::L2);
                for (a, b) in u.pieces() {
                    let dy: Vec<f64> = b.iter().zip(&a).map(|(u, v)| u - v).collect();
                    let w = g(&dy);
                    segment_nodes(&a, &b, &q, |pt, _, lw| {
                        let ww: Vec<f64> = w.iter().map(|v| v * p * lw).collect();
                        out.push(pt[0].max(0.0), &pt[1..], &ww).expect("finite node");
                    });
                }
                out
            })
            .collect();
        let mut all = AtomicVectorMeasure::new(d, m, NormSpec::L2);
        for p in &parts {
            all.extend(p).expect("matching shapes");
        }
        flatten(basis, &all)
    }

    /// Largest gap between transition directions and a reference unit flux
    /// direction sampled at the transition midpoints. Pieces where the
    /// reference is undefined are skipped.
    pub fn jump_direction_gap(&self, dir: &dyn Fn(&[f64]) -> Option<Vec<f64>>) -> f64 {
        let mut worst = 0.0f64;
        for u in &self.curves {
            for j in u.jumps() {
                for w in j.path.windows(2) {
                    let dx: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
                    let l = u.norm_spec().norm(&dx);
                    if l == 0.0 {
                        continue;
                    }
                    let mid = point(j.t, &w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>());
                    if let Some(r) = dir(&mid) {
                        let g: Vec<f64> = dx.iter().zip(&r).map(|(a, b)| a / l - b).collect();
                        worst = worst.max(u.norm_spec().norm(&g));
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BvReport {
    pub mu: ResidualReport,
    pub nu: ResidualReport,
    pub pass: bool,
}

/// Compares Θ^η̂ with (μ, ν) pairing by pairing.
pub fn bv_representation(
    eta_hat: &BvEnsemble,
    mu: &SymbolicMeasure,
    nu: &SymbolicMeasure,
    basis: &TestBasis,
    tol: f64,
) -> Result<BvReport> {
    let d = eta_hat.dim();
    let th = eta_hat.theta_pairings(basis);
    let split = |c: usize| -> Vec<f64> {
        if c == 0 {
            (0..basis.len()).map(|k| th[k * (d + 1)]).collect()
        } else {
            (0..basis.len()).flat_map(|k| (1..=d).map(move |c| (k, c))).map(|(k, c)| th[k * (d + 1) + c]).collect()
        }
    };
    let mu_r = compare(&split(0), &symbolic_pairings(mu, basis)?, tol);
    let nu_r = compare(&split(1), &symbolic_pairings(nu, basis)?, tol);
    let pass = mu_r.pass && nu_r.pass;
    Ok(BvReport { mu: mu_r, nu: nu_r, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Component, SpacePart, TimePart};

    fn line(x: f64, t_end: f64) -> LipCurve {
        LipCurve::from_vertices(vec![vec![0.0, x], vec![t_end, x]], NormSpec::L2).unwrap()
    }

    fn basis() -> TestBasis {
        TestBasis::uniform(&[(-0.2, 1.2), (-0.5, 1.5)], 8).unwrap()
    }

    #[test]
    fn stationary_curve_reproduces_lebesgue() {
        let eta = SuperpositionMeasure::uniform(vec![line(0.3, 1.0)], 0.01).unwrap();
        let b = basis();
        let mu = SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(TimePart::interval(0.0, 1.0), SpacePart::Atoms { points: vec![vec![0.3]], weights: vec![vec![1.0]] }, 1.0)],
        )
        .unwrap();
        let nu = SymbolicMeasure::empty(1, 1);
        let r = represent(&eta, &mu, &nu, Some(&mu), &b, 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.tv_eval_gap.unwrap() < 1e-12);
        assert_eq!(r.d_zero_mass, 0.0);
        assert!(push_nu(&eta, &b).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn total_mass_of_unit_field() {
        let eta = SuperpositionMeasure::uniform(vec![line(0.0, 1.5)], 0.01).unwrap();
        let one = |_: &[f64]| vec![1.0, 0.0];
        let v = push_field(&eta, &one, &PathQuadrature::default());
        assert!((v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn flat_pieces_land_in_d_zero() {
        let y = LipCurve::from_vertices(vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.5, 1.0], vec![1.0, 1.0]], NormSpec::L2).unwrap();
        let eta = SuperpositionMeasure::uniform(vec![y], 0.01).unwrap();
        let b = basis();
        let s = split_d(&eta, &b);
        assert_eq!(s.mass_plus, 0.0);
        assert!((s.mass_zero - 1.0).abs() < 1e-15);
        let mu = push_mu(&eta, &b);
        assert!(mu.iter().zip(&s.mu_plus).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(s.nu_plus.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn characteristic_residual_of_matching_field() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let y = LipCurve::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 1.0]], NormSpec::L2).unwrap();
        let eta = SuperpositionMeasure::uniform(vec![y], 0.05).unwrap();
        let f = move |_: &[f64]| (c, vec![c]);
        assert!(characteristic_residual(&eta, &f) < 1e-15);
        let g = |_: &[f64]| (1.0, vec![0.0]);
        assert!(characteristic_residual(&eta, &g) > 0.7);
    }

    #[test]
    fn bv_side_matches_lipschitz_side() {
        let y = LipCurve::from_vertices(vec![vec![0.0, 0.0], vec![0.4, 0.0], vec![0.4, 1.0], vec![1.0, 1.0]], NormSpec::L2).unwrap();
        let eta = SuperpositionMeasure::uniform(vec![y], 0.01).unwrap();
        let b = basis();
        let hat = BvEnsemble::from_lipschitz(&eta).unwrap();
        let th = hat.theta_pairings(&b);
        let mu = push_mu(&eta, &b);
        let nu = push_nu(&eta, &b);
        for k in 0..b.len() {
            assert!((th[2 * k] - mu[k]).abs() < 1e-12);
            assert!((th[2 * k + 1] - nu[k]).abs() < 1e-12);
        }
        let (l, r) = hat.slices_pm(0.4).unwrap();
        assert_eq!(l.points(), &[0.0]);
        assert_eq!(r.points(), &[1.0]);
        assert_eq!(hat.jump_direction_gap(&|_| Some(vec![1.0])), 0.0);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(SuperpositionMeasure::new(vec![line(0.0, 1.0)], vec![0.5], 1.0, 0.1).is_err());
        let late = LipCurve::from_vertices(vec![vec![0.2, 0.0], vec![1.0, 0.0]], NormSpec::L2).unwrap();
        assert!(SuperpositionMeasure::new(vec![late], vec![1.0], 1.0, 0.1).is_err());
    }
}
