//! Augmented Lipschitz curves s ↦ (t(s), x(s)), ABV curves and the maps
//! between them.

mod abv;
mod predicates;

pub use abv::{to_abv, to_lip, ABVCurve, DerivativeDecomposition, Jump};
pub use predicates::{injectivity_check, segment_check};

use crate::error::{Error, Result};
use crate::norm::{pairwise_sum, NormSpec};
use crate::quad::{for_each_node, segment_cuts, GaussRule};
use serde::{Deserialize, Serialize};

pub const SPEED_TOL: f64 = 1e-12;
/// Unit speed tolerance accepted by the ABV transform.
pub const NORMALIZED_TOL: f64 = 1e-9;
/// Segments whose time increment is below this are time-flat.
pub const FLAT_DT: f64 = 1e-13;

/// Piecewise-linear curve in (1+d)-space with nondecreasing time component,
/// held constant after the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveJson", into = "CurveJson")]
pub struct LipCurve {
    s: Vec<f64>,
    pts: Vec<f64>,
    d: usize,
    norm: NormSpec,
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    breakpoints: Vec<f64>,
    points: Vec<Vec<f64>>,
    #[serde(default)]
    norm: NormSpec,
}

impl TryFrom<CurveJson> for LipCurve {
    type Error = Error;
    fn try_from(c: CurveJson) -> Result<Self> {
        LipCurve::new(c.breakpoints, c.points, c.norm)
    }
}

impl From<LipCurve> for CurveJson {
    fn from(c: LipCurve) -> Self {
        CurveJson {
            points: (0..c.len()).map(|k| c.point(k).to_vec()).collect(),
            breakpoints: c.s,
            norm: c.norm,
        }
    }
}

impl LipCurve {
    /// Checks shape only: s strictly increasing from 0, t nondecreasing.
    pub fn new(s: Vec<f64>, points: Vec<Vec<f64>>, norm: NormSpec) -> Result<Self> {
        if s.is_empty() || s.len() != points.len() {
            return Err(Error::Invalid("need one point per breakpoint".into()));
        }
        if s[0] != 0.0 {
            return Err(Error::Invalid("breakpoints must start at 0".into()));
        }
        if s.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("breakpoints must increase strictly".into()));
        }
        let d1 = points[0].len();
        if d1 < 2 {
            return Err(Error::Invalid("points need a time and a space part".into()));
        }
        let mut pts = Vec::with_capacity(d1 * s.len());
        for p in &points {
            if p.len() != d1 {
                return Err(Error::Dimension {
                    expected: d1,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("non-finite curve point".into()));
            }
            pts.extend_from_slice(p);
        }
        if points.windows(2).any(|w| w[1][0] < w[0][0]) {
            return Err(Error::Invalid("time component must be nondecreasing".into()));
        }
        Ok(Self {
            s,
            pts,
            d: d1 - 1,
            norm,
        })
    }

    /// Builds a unit-speed curve through the given vertices, skipping repeats.
    pub fn from_vertices(points: Vec<Vec<f64>>, norm: NormSpec) -> Result<Self> {
        let mut s = vec![0.0];
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        for p in points {
            if let Some(last) = kept.last() {
                let dv: Vec<f64> = p[1..].iter().zip(&last[1..]).map(|(a, b)| a - b).collect();
                let len = norm.norm_with_head(p[0] - last[0], &dv);
                if len == 0.0 {
                    continue;
                }
                s.push(s.last().unwrap() + len);
            }
            kept.push(p);
        }
        Self::new(s, kept, norm)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn norm_spec(&self) -> NormSpec {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.s
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.pts[k * (self.d + 1)..(k + 1) * (self.d + 1)]
    }

    pub fn end_s(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn start(&self) -> &[f64] {
        self.point(0)
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    pub fn segments(&self) -> usize {
        self.len() - 1
    }

    /// Increment Δy of segment k.
    pub fn delta(&self, k: usize) -> Vec<f64> {
        self.point(k + 1).iter().zip(self.point(k)).map(|(a, b)| a - b).collect()
    }

    /// ‖y'‖ on segment k.
    pub fn speed(&self, k: usize) -> f64 {
        let dy = self.delta(k);
        self.norm.norm_with_head(dy[0], &dy[1..]) / (self.s[k + 1] - self.s[k])
    }

    pub fn lipschitz_constant(&self) -> f64 {
        (0..self.segments()).map(|k| self.speed(k)).fold(0.0, f64::max)
    }

    pub fn is_lipschitz1(&self) -> bool {
        self.lipschitz_constant() <= 1.0 + SPEED_TOL
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (0..self.segments()).all(|k| (self.speed(k) - 1.0).abs() <= tol)
    }

    pub fn is_anchored(&self) -> bool {
        self.start()[0] == 0.0
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        if s <= 0.0 {
            return self.start().to_vec();
        }
        if s >= self.end_s() {
            return self.end().to_vec();
        }
        let k = self.s.partition_point(|&b| b <= s) - 1;
        let lam = (s - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.point(k).iter().zip(self.point(k + 1)).map(|(a, b)| a + lam * (b - a)).collect()
    }

    /// (s⁻, s⁺) with s⁻ = sup{t(s) < t} (sup ∅ = 0) and s⁺ = inf{t(s) > t};
    /// s⁺ is the end of the domain when the curve never exceeds t.
    pub fn s_bounds(&self, t: f64) -> Result<(f64, f64)> {
        let n = self.len();
        let tk = |k: usize| self.point(k)[0];
        let t_end = tk(n - 1);
        if t > t_end + 1e-12 || t < tk(0) - 1e-12 {
            return Err(Error::OutOfBounds(format!("time {t} outside [{}, {t_end}]", tk(0))));
        }
        let interp = |k: usize| -> f64 {
            // crossing of level t on segment k-1 -> k
            let (t0, t1) = (tk(k - 1), tk(k));
            if t1 == t {
                return self.s[k];
            }
            self.s[k - 1] + (t - t0) / (t1 - t0) * (self.s[k] - self.s[k - 1])
        };
        let lo = (0..n).find(|&k| tk(k) >= t).unwrap_or(n - 1);
        let s_minus = if lo == 0 { 0.0 } else { interp(lo) };
        let s_plus = match (0..n).find(|&k| tk(k) > t) {
            None => self.end_s(),
            Some(0) => 0.0,
            Some(k) => {
                let (t0, t1) = (tk(k - 1), tk(k));
                if t0 == t {
                    self.s[k - 1]
                } else {
                    self.s[k - 1] + (t - t0) / (t1 - t0) * (self.s[k] - self.s[k - 1])
                }
            }
        };
        Ok((s_minus, s_plus.max(s_minus)))
    }

    /// Calls f(point, Δy, weight) at Gauss nodes of every segment, split at
    /// the quadrature breaks; Σ over one segment of weight · g(point) is
    /// ∫₀¹ g(y(λ)) dλ.
    pub fn for_each_node(&self, q: &PathQuadrature, mut f: impl FnMut(&[f64], &[f64], f64)) {
        for k in 0..self.segments() {
            segment_nodes(self.point(k), self.point(k + 1), q, |p, dy, w| f(p, dy, w));
        }
    }

    /// Restriction of the curve to a shifted copy, for tests and fixtures.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.point(k).to_vec()).collect()
    }
}

/// Gauss rule plus per-axis break values used to split segments.
#[derive(Debug, Clone)]
pub struct PathQuadrature {
    pub breaks: Vec<Vec<f64>>,
    pub rule: GaussRule,
}

impl PathQuadrature {
    pub fn new(order: usize) -> Self {
        Self {
            breaks: Vec::new(),
            rule: GaussRule::new(order),
        }
    }

    pub fn with_breaks(breaks: Vec<Vec<f64>>, order: usize) -> Self {
        Self {
            breaks,
            rule: GaussRule::new(order),
        }
    }
}

impl Default for PathQuadrature {
    fn default() -> Self {
        Self::new(8)
    }
}

pub fn segment_nodes(p0: &[f64], p1: &[f64], q: &PathQuadrature, mut f: impl FnMut(&[f64], &[f64], f64)) {
    let dy: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    if dy.iter().all(|v| *v == 0.0) {
        return;
    }
    let cuts = segment_cuts(p0, p1, &q.breaks);
    let mut p = vec![0.0; p0.len()];
    for_each_node(&cuts, &q.rule, |lam, w| {
        for (i, v) in p.iter_mut().enumerate() {
            *v = p0[i] + lam * dy[i];
        }
        f(&p, &dy, w);
    });
}

/// ∫₀¹ φ(p(λ)) · Δy dλ over one straight piece.
pub fn segment_integral(p0: &[f64], p1: &[f64], phi: &dyn Fn(&[f64]) -> Vec<f64>, q: &PathQuadrature) -> f64 {
    let mut terms = Vec::new();
    segment_nodes(p0, p1, q, |p, dy, w| {
        terms.push(w * phi(p).iter().zip(dy).map(|(a, b)| a * b).sum::<f64>());
    });
    pairwise_sum(&terms)
}

/// ⟨ω_y, φ⟩ = ∫ φ(y(s)) · y'(s) ds.
pub fn omega_curve(y: &LipCurve, phi: &dyn Fn(&[f64]) -> Vec<f64>, q: &PathQuadrature) -> f64 {
    let terms: Vec<f64> = (0..y.segments())
        .map(|k| segment_integral(y.point(k), y.point(k + 1), phi, q))
        .collect();
    pairwise_sum(&terms)
}

/// Σₙ 2⁻ⁿ min(sup_{[0,n]} ‖y₁ - y₂‖, 1) for n = 1..=n_terms.
pub fn d_metric(y1: &LipCurve, y2: &LipCurve, n_terms: usize) -> f64 {
    let norm = y1.norm;
    let mut nodes: Vec<f64> = y1.s.iter().chain(&y2.s).copied().collect();
    nodes.extend((1..=n_terms).map(|n| n as f64));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let dist = |s: f64| {
        let (a, b) = (y1.eval(s), y2.eval(s));
        let dv: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        norm.norm_with_head(dv[0], &dv[1..])
    };
    let mut out = 0.0;
    let mut sup = 0.0f64;
    let mut it = nodes.iter().peekable();
    for n in 1..=n_terms {
        while let Some(&&s) = it.peek() {
            if s > n as f64 {
                break;
            }
            sup = sup.max(dist(s));
            it.next();
        }
        out += 0.5f64.powi(n as i32) * sup.min(1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Curve that waits at x0 until tb, crosses to x1 at fixed time, then waits.
    pub(crate) fn jump_curve(tb: f64, x0: f64, x1: f64, s_max: f64) -> LipCurve {
        let d0 = (x1 - x0).abs();
        let mut s = vec![0.0];
        let mut p = vec![vec![0.0, x0]];
        if tb > 0.0 {
            s.push(tb);
            p.push(vec![tb, x0]);
        }
        s.push(tb + d0);
        p.push(vec![tb, x1]);
        s.push(s_max);
        p.push(vec![s_max - d0, x1]);
        LipCurve::new(s, p, NormSpec::L2).unwrap()
    }

    #[test]
    fn metric_basics() {
        let y = jump_curve(0.3, 0.0, 1.0, 3.0);
        assert_eq!(d_metric(&y, &y, 20), 0.0);
        let a = LipCurve::new(vec![0.0, 30.0], vec![vec![0.0, 0.0], vec![30.0, 0.0]], NormSpec::L2).unwrap();
        let b = LipCurve::new(vec![0.0, 30.0], vec![vec![0.0, 1.0], vec![30.0, 1.0]], NormSpec::L2).unwrap();
        let c = LipCurve::new(vec![0.0, 30.0], vec![vec![0.0, 0.5], vec![30.0, 0.5]], NormSpec::L2).unwrap();
        let full = 1.0 - 0.5f64.powi(20);
        assert!((d_metric(&a, &b, 20) - full).abs() < 1e-15);
        assert!((d_metric(&a, &c, 20) - 0.5 * full).abs() < 1e-15);
        assert_eq!(d_metric(&a, &b, 20), d_metric(&b, &a, 20));
    }

    #[test]
    fn bounds_on_jump_curve() {
        let y = jump_curve(0.37, 0.0, 1.0, 3.0);
        assert_eq!(y.s_bounds(0.37).unwrap(), (0.37, 1.37));
        let (a, b) = y.s_bounds(1.2).unwrap();
        assert!((a - 2.2).abs() < 1e-15 && (b - 2.2).abs() < 1e-15);
        let flat0 = LipCurve::new(
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0, 0.0], vec![0.0, 0.5], vec![0.5, 0.5]],
            NormSpec::L2,
        )
        .unwrap();
        assert_eq!(flat0.s_bounds(0.0).unwrap(), (0.0, 0.5));
        assert!(flat0.s_bounds(0.6).is_err());
    }

    #[test]
    fn omega_time_component() {
        let y = jump_curve(0.37, 0.0, 1.0, 3.0);
        let v = omega_curve(&y, &|_| vec![1.0, 0.0], &PathQuadrature::default());
        assert!((v - 2.0).abs() < 1e-14);
        let psi_grad = |p: &[f64]| vec![0.0, 2.0 * p[1]];
        let v = omega_curve(&y, &psi_grad, &PathQuadrature::default());
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(LipCurve::new(vec![0.0, 1.0], vec![vec![1.0, 0.0], vec![0.5, 0.0]], NormSpec::L2).is_err());
        assert!(LipCurve::new(vec![0.5, 1.0], vec![vec![0.0, 0.0], vec![0.5, 0.0]], NormSpec::L2).is_err());
    }

    #[test]
    fn json_round_trip() {
        let y = jump_curve(0.25, 0.0, 1.0, 2.0);
        let s = serde_json::to_string(&y).unwrap();
        assert!(s.contains("breakpoints"));
        let back: LipCurve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, y);
    }
}
