use super::{segment_integral, segment_nodes, LipCurve, PathQuadrature, FLAT_DT, NORMALIZED_TOL};
use crate::error::{Error, Result};
use crate::norm::{pairwise_sum, NormSpec};
use serde::{Deserialize, Serialize};

/// Transition at time t along a polyline from u(t, 0) to u(t, 1), traversed
/// at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub path: Vec<Vec<f64>>,
}

/// Left-continuous BV skeleton sampled at `times`, linear in between,
/// plus transitions attached at some sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AbvJson", into = "AbvJson")]
pub struct ABVCurve {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    jumps: Vec<Jump>,
    jump_of: Vec<Option<usize>>,
    norm: NormSpec,
}

#[derive(Serialize, Deserialize)]
struct AbvJson {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    #[serde(default)]
    jumps: Vec<Jump>,
    #[serde(default)]
    norm: NormSpec,
}

impl TryFrom<AbvJson> for ABVCurve {
    type Error = Error;
    fn try_from(j: AbvJson) -> Result<Self> {
        ABVCurve::new(j.times, j.values, j.jumps, j.norm)
    }
}

impl From<ABVCurve> for AbvJson {
    fn from(c: ABVCurve) -> Self {
        AbvJson {
            times: c.times,
            values: c.values,
            jumps: c.jumps,
            norm: c.norm,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeDecomposition {
    /// (t_k, t_{k+1}) with the constant slope of the skeleton there.
    pub intervals: Vec<(f64, f64)>,
    pub ac_slopes: Vec<Vec<f64>>,
    /// Always zero for piecewise-linear skeletons.
    pub cantor_mass: f64,
    /// (t, u(t,1) - u(t,0), transition length).
    pub jumps: Vec<(f64, Vec<f64>, f64)>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

fn with_time(t: f64, x: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(x.len() + 1);
    p.push(t);
    p.extend_from_slice(x);
    p
}

impl ABVCurve {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>, jumps: Vec<Jump>, norm: NormSpec) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Invalid("need one value per sample time".into()));
        }
        if times[0] < 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("sample times must increase strictly from t >= 0".into()));
        }
        let d = values[0].len();
        if values.iter().any(|v| v.len() != d) {
            return Err(Error::Invalid("values differ in dimension".into()));
        }
        let mut jump_of = vec![None; times.len()];
        let mut clean = Vec::with_capacity(jumps.len());
        for j in jumps {
            let k = times
                .iter()
                .position(|&t| (t - j.t).abs() <= 1e-12)
                .ok_or_else(|| Error::Invalid(format!("jump at {} is not a sample time", j.t)))?;
            if jump_of[k].is_some() {
                return Err(Error::Invalid("two jumps at one time".into()));
            }
            let mut path: Vec<Vec<f64>> = Vec::with_capacity(j.path.len());
            for p in j.path {
                if p.len() != d {
                    return Err(Error::Dimension { expected: d, got: p.len() });
                }
                if path.last() != Some(&p) {
                    path.push(p);
                }
            }
            if path.len() < 2 {
                return Err(Error::Invalid("transition must have positive length".into()));
            }
            let gap = norm.dist(&path[0], &values[k]);
            if gap > 1e-9 {
                return Err(Error::Invalid(format!("transition at {} starts {gap} away from the skeleton", j.t)));
            }
            jump_of[k] = Some(clean.len());
            clean.push(Jump { t: times[k], path });
        }
        let mut order: Vec<usize> = (0..clean.len()).collect();
        order.sort_by(|&a, &b| clean[a].t.total_cmp(&clean[b].t));
        let sorted: Vec<Jump> = order.iter().map(|&i| clean[i].clone()).collect();
        for slot in jump_of.iter_mut().flatten() {
            *slot = order.iter().position(|&i| i == *slot).unwrap();
        }
        Ok(Self {
            times,
            values,
            jumps: sorted,
            jump_of,
            norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn norm_spec(&self) -> NormSpec {
        self.norm
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    fn jump_at(&self, k: usize) -> Option<&Jump> {
        self.jump_of[k].map(|i| &self.jumps[i])
    }

    /// u(t_k, 1): end of the transition at sample k, or the sample itself.
    fn right(&self, k: usize) -> &[f64] {
        match self.jump_at(k) {
            Some(j) => j.path.last().unwrap(),
            None => &self.values[k],
        }
    }

    pub fn path_length(&self, j: &Jump) -> f64 {
        j.path.windows(2).map(|w| self.norm.dist(&w[1], &w[0])).sum()
    }

    /// Left-continuous skeleton value.
    pub fn skeleton(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t > self.times[n - 1] {
            return self.right(n - 1).to_vec();
        }
        let k = self.times.partition_point(|&s| s < t);
        if self.times[k] == t {
            return self.values[k].clone();
        }
        let (a, b) = (self.right(k - 1), &self.values[k]);
        let lam = (t - self.times[k - 1]) / (self.times[k] - self.times[k - 1]);
        a.iter().zip(b).map(|(p, q)| p + lam * (q - p)).collect()
    }

    /// Right limit of the skeleton.
    pub fn skeleton_right(&self, t: f64) -> Vec<f64> {
        match self.times.iter().position(|&s| s == t) {
            Some(k) => self.right(k).to_vec(),
            None => self.skeleton(t),
        }
    }

    /// Point u(t, r) of a transition, r ∈ [0, 1] by arclength.
    pub fn transition(&self, j: &Jump, r: f64) -> Vec<f64> {
        let total = self.path_length(j);
        let mut left = r.clamp(0.0, 1.0) * total;
        for w in j.path.windows(2) {
            let l = self.norm.dist(&w[1], &w[0]);
            if left <= l {
                let lam = if l > 0.0 { left / l } else { 0.0 };
                return w[0].iter().zip(&w[1]).map(|(a, b)| a + lam * (b - a)).collect();
            }
            left -= l;
        }
        j.path.last().unwrap().clone()
    }

    /// The straight pieces of the graph in (t, x): skeleton intervals and
    /// transitions, in time order.
    pub fn pieces(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut out = Vec::new();
        for k in 0..self.times.len() {
            if let Some(j) = self.jump_at(k) {
                for w in j.path.windows(2) {
                    out.push((with_time(self.times[k], &w[0]), with_time(self.times[k], &w[1])));
                }
            }
            if k + 1 < self.times.len() {
                out.push((
                    with_time(self.times[k], self.right(k)),
                    with_time(self.times[k + 1], &self.values[k + 1]),
                ));
            }
        }
        out
    }

    /// Total variation of the augmented graph, Σ ‖Δ(t, x)‖ over pieces.
    pub fn graph_length(&self) -> f64 {
        self.pieces()
            .iter()
            .map(|(a, b)| {
                let d = sub(b, a);
                self.norm.norm_with_head(d[0], &d[1..])
            })
            .sum()
    }

    /// (L⁻(t), L⁺(t)): arclength of the graph before and after the
    /// transition at t.
    pub fn arclength_bounds(&self, t: f64) -> (f64, f64) {
        let mut acc = 0.0;
        for k in 0..self.times.len() {
            if self.times[k] == t {
                let l = self.jump_at(k).map(|j| self.path_length(j)).unwrap_or(0.0);
                return (acc, acc + l);
            }
            if let Some(j) = self.jump_at(k) {
                acc += self.path_length(j);
            }
            if k + 1 < self.times.len() {
                let d = sub(&self.values[k + 1], self.right(k));
                let dt = self.times[k + 1] - self.times[k];
                let len = self.norm.norm_with_head(dt, &d);
                if t < self.times[k + 1] && t > self.times[k] {
                    let lam = (t - self.times[k]) / dt;
                    return (acc + lam * len, acc + lam * len);
                }
                acc += len;
            }
        }
        (acc, acc)
    }

    pub fn for_each_node(&self, q: &PathQuadrature, mut f: impl FnMut(&[f64], &[f64], f64)) {
        for (a, b) in self.pieces() {
            segment_nodes(&a, &b, q, |p, dy, w| f(p, dy, w));
        }
    }

    pub fn derivative_decomposition(&self) -> DerivativeDecomposition {
        let mut out = DerivativeDecomposition {
            intervals: Vec::new(),
            ac_slopes: Vec::new(),
            cantor_mass: 0.0,
            jumps: Vec::new(),
        };
        for k in 0..self.times.len() {
            if let Some(j) = self.jump_at(k) {
                out.jumps.push((j.t, sub(j.path.last().unwrap(), &j.path[0]), self.path_length(j)));
            }
            if k + 1 < self.times.len() {
                let dt = self.times[k + 1] - self.times[k];
                out.intervals.push((self.times[k], self.times[k + 1]));
                out.ac_slopes.push(sub(&self.values[k + 1], self.right(k)).iter().map(|v| v / dt).collect());
            }
        }
        out
    }

    /// ⟨ϑ_u, φ⟩ from the decomposed derivative: skeleton intervals with
    /// (1, ∂ₜu) plus the line integrals of the transitions.
    pub fn theta(&self, phi: &dyn Fn(&[f64]) -> Vec<f64>, q: &PathQuadrature) -> f64 {
        let dec = self.derivative_decomposition();
        let mut terms = Vec::new();
        for (k, ((t0, t1), slope)) in dec.intervals.iter().zip(&dec.ac_slopes).enumerate() {
            let a = with_time(*t0, self.right(k));
            let x1: Vec<f64> = self.right(k).iter().zip(slope).map(|(x, v)| x + v * (t1 - t0)).collect();
            terms.push(segment_integral(&a, &with_time(*t1, &x1), phi, q));
        }
        for j in &self.jumps {
            for w in j.path.windows(2) {
                terms.push(segment_integral(&with_time(j.t, &w[0]), &with_time(j.t, &w[1]), phi, q));
            }
        }
        pairwise_sum(&terms)
    }
}

/// The map 𝒮 from unit-speed curves to ABV curves.
pub fn to_abv(y: &LipCurve) -> Result<ABVCurve> {
    for k in 0..y.segments() {
        let v = y.speed(k);
        if (v - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::NotNormalized { segment: k, speed: v });
        }
    }
    let mut times = vec![y.start()[0]];
    let mut values = vec![y.start()[1..].to_vec()];
    let mut jumps = Vec::new();
    let n = y.segments();
    let flat = |k: usize| y.point(k + 1)[0] - y.point(k)[0] <= FLAT_DT;
    let mut k = 0;
    while k < n {
        if flat(k) {
            let mut r = k;
            while r + 1 < n && flat(r + 1) {
                r += 1;
            }
            let path = (k..=r + 1).map(|i| y.point(i)[1..].to_vec()).collect();
            jumps.push(Jump {
                t: *times.last().unwrap(),
                path,
            });
            k = r + 1;
        } else {
            times.push(y.point(k + 1)[0]);
            values.push(y.point(k + 1)[1..].to_vec());
            k += 1;
        }
    }
    ABVCurve::new(times, values, jumps, y.norm_spec())
}

/// The map 𝒯: arclength reparametrization of the augmented graph.
pub fn to_lip(u: &ABVCurve) -> Result<LipCurve> {
    let mut pts = vec![with_time(u.times[0], &u.values[0])];
    for (a, b) in u.pieces() {
        debug_assert_eq!(pts.last().unwrap().len(), b.len());
        let _ = a;
        pts.push(b);
    }
    LipCurve::from_vertices(pts, u.norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{d_metric, omega_curve};

    fn jumping() -> ABVCurve {
        ABVCurve::new(
            vec![0.0, 0.4, 1.0],
            vec![vec![0.0], vec![0.0], vec![1.0]],
            vec![Jump {
                t: 0.4,
                path: vec![vec![0.0], vec![1.0]],
            }],
            NormSpec::L2,
        )
        .unwrap()
    }

    #[test]
    fn skeleton_is_left_continuous() {
        let u = jumping();
        assert_eq!(u.skeleton(0.4), vec![0.0]);
        assert_eq!(u.skeleton_right(0.4), vec![1.0]);
        assert_eq!(u.skeleton(0.7), vec![1.0]);
        assert_eq!(u.arclength_bounds(0.4), (0.4, 1.4));
    }

    #[test]
    fn transforms_round_trip() {
        let u = jumping();
        let y = to_lip(&u).unwrap();
        assert!(y.is_normalized(1e-12));
        assert_eq!(y.s_bounds(0.4).unwrap(), (0.4, 1.4));
        let back = to_abv(&y).unwrap();
        assert_eq!(back.times(), u.times());
        assert_eq!(back.jumps(), u.jumps());
        let yy = to_lip(&back).unwrap();
        assert_eq!(d_metric(&y, &yy, 20), 0.0);
    }

    #[test]
    fn constant_and_sloped_skeletons() {
        let c = ABVCurve::new(vec![0.0, 2.0], vec![vec![0.3], vec![0.3]], vec![], NormSpec::L2).unwrap();
        let y = to_lip(&c).unwrap();
        assert_eq!(y.points(), vec![vec![0.0, 0.3], vec![2.0, 0.3]]);
        let v = 0.75;
        let s = ABVCurve::new(vec![0.0, 1.0], vec![vec![0.0], vec![v]], vec![], NormSpec::L2).unwrap();
        let ys = to_lip(&s).unwrap();
        let dy = ys.delta(0);
        let l = ys.end_s();
        assert!((dy[0] / l - 1.0 / (1.0f64 + v * v).sqrt()).abs() < 1e-15);
        assert!((dy[1] / l - v / (1.0f64 + v * v).sqrt()).abs() < 1e-15);
        let dec = s.derivative_decomposition();
        assert_eq!(dec.ac_slopes, vec![vec![v]]);
        assert!(dec.jumps.is_empty());
    }

    #[test]
    fn decomposition_of_a_jump() {
        let dec = jumping().derivative_decomposition();
        assert_eq!(dec.jumps, vec![(0.4, vec![1.0], 1.0)]);
        assert!(dec.ac_slopes.iter().all(|s| s[0] == 0.0));
        assert_eq!(dec.cantor_mass, 0.0);
    }

    #[test]
    fn theta_matches_omega() {
        let u = jumping();
        let phi = |p: &[f64]| vec![(p[0] * 3.0).sin(), p[1].exp() * p[0]];
        let q = PathQuadrature::default();
        let a = u.theta(&phi, &q);
        let b = omega_curve(&to_lip(&u).unwrap(), &phi, &q);
        assert!((a - b).abs() < 1e-12);
        let jump = |p: &[f64]| vec![0.0, 2.0 * p[1]];
        let dec_only: f64 = jumping().theta(&jump, &q);
        assert!((dec_only - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_normalized() {
        let y = LipCurve::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![0.5, 0.0]], NormSpec::L2).unwrap();
        assert!(matches!(to_abv(&y), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn json_round_trip() {
        let u = jumping();
        let s = serde_json::to_string(&u).unwrap();
        let back: ABVCurve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
    }
}
