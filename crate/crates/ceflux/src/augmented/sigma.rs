use super::{Mollified, Trajectory};
use crate::curves::LipCurve;
use crate::error::{Error, Result};
use crate::measure::AtomicVectorMeasure;
use crate::norm::{pairwise_sum, NormSpec};
use crate::superposition::{compare, FieldSampler};
use crate::weak_form::{inflate, pairings, ResidualReport, Term, TestBasis};

/// Measures over (s, t, x): s in the time slot, (t, x) as the point.
#[derive(Debug, Clone)]
pub struct Sigma {
    pub sigma: AtomicVectorMeasure,
    pub sigma0: AtomicVectorMeasure,
    pub sigma_vec: AtomicVectorMeasure,
    /// Initial points with their weights, at s = 0.
    pub start: AtomicVectorMeasure,
}

/// σ = Σ pⱼ ∫ δ_{(s, yⱼ(s))} ds by the trapezoid rule on the RK4 nodes,
/// σ⁰ = τσ and σ̄ = vσ.
pub fn build_sigma(trajs: &[Trajectory], weights: &[f64], field: &dyn FieldSampler) -> Result<Sigma> {
    if trajs.len() != weights.len() {
        return Err(Error::Invalid("one weight per trajectory".into()));
    }
    if !weights.is_empty() && (pairwise_sum(weights) - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid("trajectory weights must sum to 1".into()));
    }
    let dim = trajs.first().map(|t| t.start().len()).unwrap_or(1);
    let d = dim - 1;
    let mut sig = Sigma {
        sigma: AtomicVectorMeasure::new(dim, 1, NormSpec::L2),
        sigma0: AtomicVectorMeasure::new(dim, 1, NormSpec::L2),
        sigma_vec: AtomicVectorMeasure::new(dim, d, NormSpec::L2),
        start: AtomicVectorMeasure::new(dim, 1, NormSpec::L2),
    };
    for (tr, &p) in trajs.iter().zip(weights) {
        sig.start.push(0.0, tr.start(), &[p])?;
        let n = tr.s.len();
        for i in 0..n {
            let left = if i > 0 { tr.s[i] - tr.s[i - 1] } else { 0.0 };
            let right = if i + 1 < n { tr.s[i + 1] - tr.s[i] } else { 0.0 };
            let w = p * 0.5 * (left + right);
            if w == 0.0 {
                continue;
            }
            let y = &tr.states[i];
            let (tau, v) = field.sample(y);
            sig.sigma.push(tr.s[i], y, &[w])?;
            sig.sigma0.push(tr.s[i], y, &[tau * w])?;
            let wv: Vec<f64> = v.iter().map(|c| c * w).collect();
            sig.sigma_vec.push(tr.s[i], y, &wv)?;
        }
    }
    Ok(sig)
}

/// Basis over (s, t, x) vanishing at s = s_max and t = horizon, the ends
/// where trajectories stop.
pub fn augmented_basis(sig: &Sigma, s_max: f64, horizon: f64, knots: usize) -> Result<TestBasis> {
    let mut bounds = vec![(-0.2 * s_max, s_max), (-0.2 * horizon, horizon)];
    let (_, b) = sig
        .sigma
        .bounds()
        .ok_or_else(|| Error::Invalid("empty lift".into()))?;
    for &(lo, hi) in &b[1..] {
        bounds.push(inflate(lo, hi));
    }
    TestBasis::uniform(&bounds, knots)
}

fn project(m: &AtomicVectorMeasure) -> Result<AtomicVectorMeasure> {
    let d = m.dim() - 1;
    let mut out = AtomicVectorMeasure::new(d, m.weight_dim(), NormSpec::L2);
    for a in m.atoms() {
        out.push(a.x[0].max(0.0), &a.x[1..], a.w)?;
    }
    Ok(out)
}

fn flatten(basis: &TestBasis, m: &AtomicVectorMeasure) -> Vec<f64> {
    let per: Vec<Vec<f64>> = (0..m.weight_dim()).map(|c| pairings(basis, m, Term::Plain(c))).collect();
    (0..basis.len()).flat_map(|k| per.iter().map(move |v| v[k])).collect()
}

/// Pairings of π♯σ⁰ and π♯σ̄ against those of μ^ε and ν^ε on a basis over
/// (t, x); μ-components first, then the flux components.
pub fn marginal_check(sig: &Sigma, mol: &Mollified, basis: &TestBasis, tol: f64) -> Result<ResidualReport> {
    let mut got = flatten(basis, &project(&sig.sigma0)?);
    got.extend(flatten(basis, &project(&sig.sigma_vec)?));
    let mut want = flatten(basis, &mol.mu.to_measure());
    want.extend(flatten(basis, &mol.nu.to_measure()));
    Ok(compare(&got, &want, tol))
}

/// σ⁰ mass on {s > s_cut, t ≤ t_cut}.
pub fn tightness(sigma0: &AtomicVectorMeasure, s_cut: f64, t_cut: f64) -> f64 {
    let v: Vec<f64> = sigma0
        .atoms()
        .filter(|a| a.t > s_cut && a.x[0] <= t_cut)
        .map(|a| a.w[0])
        .collect();
    pairwise_sum(&v)
}

/// y∘ℓ with ℓ the inverse of Θ(s) = ∫₀ˢ 1/θ(y(r)) dr; Θ comes from a
/// cumulative trapezoid rule on a grid of spacing at most `step` that
/// contains the breakpoints of y.
pub fn rescale_curve(y: &LipCurve, theta: &dyn Fn(&[f64]) -> f64, bound: f64, step: f64) -> Result<LipCurve> {
    if !(bound >= 1.0) || !(step > 0.0) {
        return Err(Error::Invalid("need bound >= 1 and step > 0".into()));
    }
    let s = y.breakpoints();
    let mut grid = vec![s[0]];
    for w in s.windows(2) {
        let n = ((w[1] - w[0]) / step).ceil().max(1.0) as usize;
        for i in 1..=n {
            grid.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
    }
    let mut pts = Vec::with_capacity(grid.len());
    let mut inv = Vec::with_capacity(grid.len());
    for &r in &grid {
        let p = y.eval(r);
        let th = theta(&p);
        if !(th >= 1.0 / bound && th <= bound) {
            return Err(Error::OutOfBounds(format!("density {th} at s = {r}")));
        }
        inv.push(1.0 / th);
        pts.push(p);
    }
    let mut big = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        big[i] = big[i - 1] + 0.5 * (inv[i] + inv[i - 1]) * (grid[i] - grid[i - 1]);
    }
    LipCurve::new(big, pts, y.norm_spec())
}

#[cfg(test)]
mod tests {
    use super::super::{flow, FlowOptions};
    use super::*;
    use crate::weak_form::augmented_residual;

    fn line() -> LipCurve {
        LipCurve::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.0]], NormSpec::L2).unwrap()
    }

    #[test]
    fn stationary_trajectory_gives_pure_time_flux() {
        let f = |_: &[f64]| (1.0, vec![0.0]);
        let o = FlowOptions {
            ds: 0.01,
            s_max: 1.0,
            horizon: 1.0,
            domain: None,
        };
        let tr = flow(&f, &[vec![0.0, 0.2]], &o).unwrap();
        let sig = build_sigma(&tr, &[1.0], &f).unwrap();
        assert_eq!(sig.sigma.weights(), sig.sigma0.weights());
        assert!(sig.sigma_vec.weights().iter().all(|v| *v == 0.0));
        let b = augmented_basis(&sig, 1.0, 1.0, 8).unwrap();
        let r = augmented_residual(&sig.sigma, &sig.sigma0, &sig.sigma_vec, &sig.start, &b, 1e-6).unwrap();
        assert!(r.max_abs < 1e-3, "{}", r.max_abs);
        assert_eq!(tightness(&sig.sigma0, 0.5, 0.4), 0.0);
        { let m = tightness(&sig.sigma0, 0.505, 1.0); assert!((m - 0.495).abs() < 1e-12, "{m}"); }
    }

    #[test]
    fn empty_ensemble() {
        let f = |_: &[f64]| (1.0, vec![0.0]);
        let sig = build_sigma(&[], &[], &f).unwrap();
        assert!(sig.sigma.is_empty() && sig.start.is_empty());
    }

    #[test]
    fn rescaling() {
        let y = line();
        let same = rescale_curve(&y, &|_| 1.0, 2.0, 0.1).unwrap();
        assert!((same.end_s() - 1.0).abs() < 1e-14);
        let fast = rescale_curve(&y, &|_| 2.0, 2.0, 0.1).unwrap();
        assert!((fast.end_s() - 0.5).abs() < 1e-14);
        assert!((fast.speed(0) - 2.0).abs() < 1e-12);
        assert!(rescale_curve(&y, &|_| 3.0, 2.0, 0.1).is_err());
        // Θ∘ℓ = id against a fine reference Θ
        let th = |p: &[f64]| 1.0 + 0.5 * (-(p[0] - 0.5f64).powi(2) * 20.0).exp();
        let z = rescale_curve(&y, &th, 2.0, 1e-4).unwrap();
        let fine = |s: f64| {
            let n = 20000;
            (0..n).map(|i| 1.0 / th(&[(i as f64 + 0.5) / n as f64 * s])).sum::<f64>() * s / n as f64
        };
        for &sig in &[0.1, 0.37, 0.66] {
            let p = z.eval(sig);
            assert!((fine(p[0]) - sig).abs() < 1e-6);
        }
    }
}
