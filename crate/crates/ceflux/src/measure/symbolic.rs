use super::AtomicVectorMeasure;
use crate::error::{Error, Result};
use crate::norm::NormSpec;
use crate::quad::{for_each_node, segment_cuts, GaussRule};
use serde::{Deserialize, Serialize};

fn unit_density() -> [f64; 2] {
    [1.0, 0.0]
}

fn is_unit_density(d: &[f64; 2]) -> bool {
    *d == [1.0, 0.0]
}

fn one_i() -> i32 {
    1
}

fn one_f() -> f64 {
    1.0
}

/// Time factor of a product component. `density` is the affine time
/// density c0 + c1 t applied on a Lebesgue interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimePart {
    Lebesgue {
        a: f64,
        b: f64,
        #[serde(default = "unit_density", skip_serializing_if = "is_unit_density")]
        density: [f64; 2],
    },
    Dirac {
        t: f64,
    },
}

impl TimePart {
    pub fn interval(a: f64, b: f64) -> Self {
        Self::Lebesgue {
            a,
            b,
            density: [1.0, 0.0],
        }
    }

    pub fn affine(a: f64, b: f64, c0: f64, c1: f64) -> Self {
        Self::Lebesgue {
            a,
            b,
            density: [c0, c1],
        }
    }

    pub fn dirac(t: f64) -> Self {
        Self::Dirac { t }
    }

    fn density_at(&self, t: f64) -> f64 {
        match self {
            Self::Lebesgue { density, .. } => density[0] + density[1] * t,
            Self::Dirac { .. } => 1.0,
        }
    }
}

/// Space factor of a product component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpacePart {
    Atoms {
        points: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
    },
    /// Tangential measure t H¹ along the polyline; close it by repeating the
    /// first vertex.
    Polyline {
        points: Vec<Vec<f64>>,
        #[serde(default = "one_i")]
        orientation: i32,
    },
    /// H¹ on the segment; vector measures point along b - a.
    Segment { a: Vec<f64>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub time: TimePart,
    pub space: SpacePart,
    #[serde(default = "one_f")]
    pub scale: f64,
}

impl Component {
    pub fn new(time: TimePart, space: SpacePart, scale: f64) -> Self {
        Self { time, space, scale }
    }
}

/// Sum of product measures (time part ⊗ space part) with exact structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicMeasure {
    pub dim: usize,
    #[serde(default)]
    pub norm: NormSpec,
    /// Weight dimension; inferred from the components when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub components: Vec<Component>,
}

struct SpaceNode {
    x: Vec<f64>,
    w: Vec<f64>,
    span: Option<Vec<f64>>,
}

impl SymbolicMeasure {
    pub fn new(dim: usize, m: usize, components: Vec<Component>) -> Result<Self> {
        let s = Self {
            dim,
            norm: NormSpec::L2,
            m: Some(m),
            components,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn empty(dim: usize, m: usize) -> Self {
        Self {
            dim,
            norm: NormSpec::L2,
            m: Some(m),
            components: Vec::new(),
        }
    }

    pub fn weight_dim(&self) -> usize {
        if let Some(m) = self.m {
            return m;
        }
        for c in &self.components {
            match &c.space {
                SpacePart::Atoms { weights, .. } if !weights.is_empty() => return weights[0].len(),
                SpacePart::Polyline { .. } => return self.dim,
                _ => {}
            }
        }
        1
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.weight_dim();
        let d = self.dim;
        let dim_err = |got: usize| Error::Dimension { expected: d, got };
        for c in &self.components {
            if !c.scale.is_finite() {
                return Err(Error::Invalid("non-finite scale".into()));
            }
            match c.time {
                TimePart::Lebesgue { a, b, .. } => {
                    if !(a < b) || a < 0.0 {
                        return Err(Error::Invalid(format!("bad time interval [{a}, {b}]")));
                    }
                }
                TimePart::Dirac { t } => {
                    if !(t >= 0.0) {
                        return Err(Error::Invalid(format!("bad dirac time {t}")));
                    }
                }
            }
            match &c.space {
                SpacePart::Atoms { points, weights } => {
                    if points.len() != weights.len() {
                        return Err(Error::Invalid("points and weights differ in length".into()));
                    }
                    for p in points {
                        if p.len() != d {
                            return Err(dim_err(p.len()));
                        }
                    }
                    for w in weights {
                        if w.len() != m {
                            return Err(Error::Dimension {
                                expected: m,
                                got: w.len(),
                            });
                        }
                    }
                }
                SpacePart::Polyline {
                    points,
                    orientation,
                } => {
                    if m != d {
                        return Err(Error::Invalid("polyline components need vector weights".into()));
                    }
                    if *orientation != 1 && *orientation != -1 {
                        return Err(Error::Invalid("orientation must be +1 or -1".into()));
                    }
                    for p in points {
                        if p.len() != d {
                            return Err(dim_err(p.len()));
                        }
                    }
                    let distinct = points.windows(2).any(|w| w[0] != w[1]);
                    if points.len() < 2 || !distinct {
                        return Err(Error::Invalid("polyline needs two distinct vertices".into()));
                    }
                }
                SpacePart::Segment { a, b } => {
                    if a.len() != d || b.len() != d {
                        return Err(dim_err(a.len()));
                    }
                    if a == b {
                        return Err(Error::DegenerateSegment);
                    }
                    if m != 1 && m != d {
                        return Err(Error::Invalid("segment weights must be scalar or d-vectors".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn space_nodes(&self, c: &Component, res: Option<usize>, exact: Option<(&[Vec<f64>], &GaussRule)>) -> Vec<SpaceNode> {
        let m = self.weight_dim();
        let mut out = Vec::new();
        match &c.space {
            SpacePart::Atoms { points, weights } => {
                for (p, w) in points.iter().zip(weights) {
                    out.push(SpaceNode {
                        x: p.clone(),
                        w: w.clone(),
                        span: None,
                    });
                }
            }
            SpacePart::Polyline {
                points,
                orientation,
            } => {
                let o = *orientation as f64;
                for seg in points.windows(2) {
                    let (p, q) = (&seg[0], &seg[1]);
                    if p == q {
                        continue;
                    }
                    let delta: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
                    match exact {
                        Some((breaks, rule)) => {
                            let cuts = segment_cuts(p, q, breaks);
                            for_each_node(&cuts, rule, |lam, wt| {
                                out.push(SpaceNode {
                                    x: p.iter().zip(&delta).map(|(a, d)| a + lam * d).collect(),
                                    w: delta.iter().map(|d| o * d * wt).collect(),
                                    span: None,
                                });
                            });
                        }
                        None => out.push(SpaceNode {
                            x: p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect(),
                            w: delta.iter().map(|d| o * d).collect(),
                            span: Some(delta.clone()),
                        }),
                    }
                }
            }
            SpacePart::Segment { a, b } => {
                let delta: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
                let len = NormSpec::L2.norm(&delta);
                let weight = |wt: f64| -> Vec<f64> {
                    if m == 1 {
                        vec![len * wt]
                    } else {
                        delta.iter().map(|d| d * wt).collect()
                    }
                };
                match exact {
                    Some((breaks, rule)) => {
                        let cuts = segment_cuts(a, b, breaks);
                        for_each_node(&cuts, rule, |lam, wt| {
                            out.push(SpaceNode {
                                x: a.iter().zip(&delta).map(|(p, d)| p + lam * d).collect(),
                                w: weight(wt),
                                span: None,
                            });
                        });
                    }
                    None => {
                        let n = res.unwrap_or(2).max(1);
                        let h = 1.0 / n as f64;
                        for j in 0..n {
                            let lam = (j as f64 + 0.5) * h;
                            out.push(SpaceNode {
                                x: a.iter().zip(&delta).map(|(p, d)| p + lam * d).collect(),
                                w: weight(h),
                                span: Some(delta.iter().map(|d| d * h).collect()),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Midpoint-rule atoms with `res` nodes per Lebesgue factor.
    pub fn discretize(&self, res: usize) -> Result<AtomicVectorMeasure> {
        if res < 2 {
            return Err(Error::Invalid("resolution must be at least 2".into()));
        }
        self.discretize_with(res, res)
    }

    /// Midpoint atoms with separate time and space resolutions.
    pub fn discretize_with(&self, time_res: usize, space_res: usize) -> Result<AtomicVectorMeasure> {
        self.validate()?;
        let mut out = AtomicVectorMeasure::new(self.dim, self.weight_dim(), self.norm);
        for c in &self.components {
            let space = self.space_nodes(c, Some(space_res), None);
            let times: Vec<(f64, f64, f64)> = match c.time {
                TimePart::Lebesgue { a, b, .. } => {
                    let h = (b - a) / time_res as f64;
                    (0..time_res)
                        .map(|i| {
                            let t = a + (i as f64 + 0.5) * h;
                            (t, h * c.time.density_at(t), h)
                        })
                        .collect()
                }
                TimePart::Dirac { t } => vec![(t, 1.0, 0.0)],
            };
            for &(t, f, dt) in &times {
                for n in &space {
                    let w: Vec<f64> = n.w.iter().map(|v| v * f * c.scale).collect();
                    out.push_cell(t, dt, &n.x, &w, n.span.as_deref())?;
                }
            }
        }
        Ok(out)
    }

    /// Gauss-Legendre atoms, split at the given break values on the time axis
    /// and on every spatial axis. Exact for test functions that are
    /// polynomials of degree < 2·order between breaks.
    pub fn quadrature(&self, time_breaks: &[f64], space_breaks: &[Vec<f64>], order: usize) -> Result<AtomicVectorMeasure> {
        self.validate()?;
        let rule = GaussRule::new(order);
        let mut out = AtomicVectorMeasure::new(self.dim, self.weight_dim(), self.norm);
        for c in &self.components {
            let space = self.space_nodes(c, None, Some((space_breaks, &rule)));
            let mut times = Vec::new();
            match c.time {
                TimePart::Lebesgue { a, b, .. } => {
                    let cuts = segment_cuts(&[a], &[b], &[time_breaks.to_vec()]);
                    for_each_node(&cuts, &rule, |lam, wt| {
                        let t = a + lam * (b - a);
                        times.push((t, (b - a) * wt * c.time.density_at(t)));
                    });
                }
                TimePart::Dirac { t } => times.push((t, 1.0)),
            }
            for &(t, f) in &times {
                for n in &space {
                    let w: Vec<f64> = n.w.iter().map(|v| v * f * c.scale).collect();
                    out.push(t, &n.x, &w)?;
                }
            }
        }
        Ok(out)
    }

    /// Total variation measure |m| as a scalar symbolic measure.
    pub fn abs(&self) -> Result<Self> {
        self.validate()?;
        let mut comps = Vec::new();
        for c in &self.components {
            if let TimePart::Lebesgue { a, b, density } = c.time {
                let lo = density[0] + density[1] * a;
                let hi = density[0] + density[1] * b;
                if lo < 0.0 || hi < 0.0 {
                    return Err(Error::Invalid("time density changes sign".into()));
                }
            }
            let s = c.scale.abs();
            match &c.space {
                SpacePart::Atoms { points, weights } => comps.push(Component::new(
                    c.time.clone(),
                    SpacePart::Atoms {
                        points: points.clone(),
                        weights: weights.iter().map(|w| vec![self.norm.norm(w)]).collect(),
                    },
                    s,
                )),
                SpacePart::Polyline { points, .. } => {
                    for seg in points.windows(2) {
                        if seg[0] == seg[1] {
                            continue;
                        }
                        let delta: Vec<f64> = seg[1].iter().zip(&seg[0]).map(|(a, b)| a - b).collect();
                        let f = self.norm.norm(&delta) / NormSpec::L2.norm(&delta);
                        comps.push(Component::new(
                            c.time.clone(),
                            SpacePart::Segment {
                                a: seg[0].clone(),
                                b: seg[1].clone(),
                            },
                            s * f,
                        ));
                    }
                }
                SpacePart::Segment { a, b } => {
                    let f = if self.weight_dim() == 1 {
                        1.0
                    } else {
                        let delta: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
                        self.norm.norm(&delta) / NormSpec::L2.norm(&delta)
                    };
                    comps.push(Component::new(c.time.clone(), c.space.clone(), s * f));
                }
            }
        }
        Ok(Self {
            dim: self.dim,
            norm: self.norm,
            m: Some(1),
            components: comps,
        })
    }

    /// Sum of two measures with the same layout.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.weight_dim() != other.weight_dim() {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut comps = self.components.clone();
        comps.extend(other.components.iter().cloned());
        Ok(Self {
            dim: self.dim,
            norm: self.norm,
            m: Some(self.weight_dim()),
            components: comps,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|k| k.scale *= c);
        out
    }

    /// Largest time reached by any component.
    pub fn time_extent(&self) -> f64 {
        self.components
            .iter()
            .map(|c| match c.time {
                TimePart::Lebesgue { b, .. } => b,
                TimePart::Dirac { t } => t,
            })
            .fold(0.0, f64::max)
    }

    /// Disintegration slice at time t of the Lebesgue-in-time components, as a
    /// scalar measure on space. Intervals are half open except the last one.
    pub fn time_slice(&self, t: f64, space_res: usize) -> Result<AtomicVectorMeasure> {
        let last = self
            .components
            .iter()
            .filter_map(|c| match c.time {
                TimePart::Lebesgue { b, .. } => Some(b),
                _ => None,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out = AtomicVectorMeasure::new(self.dim, self.weight_dim(), self.norm);
        for c in &self.components {
            if let TimePart::Lebesgue { a, b, .. } = c.time {
                let inside = (a <= t && t < b) || (t == b && b == last);
                if !inside {
                    continue;
                }
                let f = c.time.density_at(t) * c.scale;
                for n in self.space_nodes(c, Some(space_res), None) {
                    let w: Vec<f64> = n.w.iter().map(|v| v * f).collect();
                    if w.iter().any(|v| *v != 0.0) {
                        out.push(0.0, &n.x, &w)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> Vec<Vec<f64>> {
        (0..=n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    }

    fn square_flux() -> SymbolicMeasure {
        SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(
                TimePart::interval(0.0, 1.0),
                SpacePart::Segment { a: vec![0.0], b: vec![1.0] },
                1.0,
            )],
        )
        .unwrap()
    }

    #[test]
    fn dirac_atom_is_single() {
        let m = SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(
                TimePart::dirac(0.3),
                SpacePart::Atoms {
                    points: vec![vec![0.5]],
                    weights: vec![vec![1.0]],
                },
                1.0,
            )],
        )
        .unwrap();
        for res in [2, 7, 40] {
            let a = m.discretize(res).unwrap();
            assert_eq!(a.len(), 1);
            assert_eq!((a.atom(0).t, a.atom(0).x[0], a.atom(0).w[0]), (0.3, 0.5, 1.0));
        }
    }

    #[test]
    fn product_flux_has_unit_mass() {
        let a = square_flux().discretize(100).unwrap();
        assert_eq!(a.len(), 10_000);
        assert!((a.total_variation(Some((0.0, 1.0))) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_polyline_with_constant_field() {
        let m = SymbolicMeasure::new(
            2,
            2,
            vec![Component::new(
                TimePart::dirac(0.0),
                SpacePart::Polyline {
                    points: circle(64),
                    orientation: 1,
                },
                1.0,
            )],
        )
        .unwrap();
        let a = m.discretize(2).unwrap();
        assert!(a.pair(|_, _| vec![1.0, 0.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn degenerate_segment_rejected() {
        let r = SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(
                TimePart::interval(0.0, 1.0),
                SpacePart::Segment { a: vec![0.5], b: vec![0.5] },
                1.0,
            )],
        );
        assert!(matches!(r, Err(Error::DegenerateSegment)));
    }

    #[test]
    fn bad_interval_and_polyline_rejected() {
        let bad = SymbolicMeasure::new(
            1,
            1,
            vec![Component::new(
                TimePart::interval(1.0, 1.0),
                SpacePart::Segment { a: vec![0.0], b: vec![1.0] },
                1.0,
            )],
        );
        assert!(bad.is_err());
        let poly = SymbolicMeasure::new(
            2,
            2,
            vec![Component::new(
                TimePart::dirac(0.0),
                SpacePart::Polyline {
                    points: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
                    orientation: 1,
                },
                1.0,
            )],
        );
        assert!(poly.is_err());
    }

    #[test]
    fn quadrature_exact_on_polynomials() {
        let m = square_flux();
        let q = m.quadrature(&[0.3, 0.6], &[vec![0.25, 0.5]], 4).unwrap();
        let v = q.pair(|t, x| vec![t * t * x[0].powi(3)]).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn midpoint_converges_first_order_or_better() {
        let m = square_flux();
        let exact = (1.0f64).sin() * (1.0 - (1.0f64).cos());
        let err = |res| {
            let a = m.discretize(res).unwrap();
            (a.pair(|t, x| vec![t.cos() * x[0].sin()]).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(10), err(20));
        assert!(e2 < e1 / 2.0 + 1e-15);
    }

    #[test]
    fn slices_follow_affine_density() {
        let m = SymbolicMeasure::new(
            1,
            1,
            vec![
                Component::new(
                    TimePart::affine(0.0, 1.0, 1.0, -1.0),
                    SpacePart::Atoms {
                        points: vec![vec![0.0]],
                        weights: vec![vec![1.0]],
                    },
                    1.0,
                ),
                Component::new(
                    TimePart::affine(0.0, 1.0, 0.0, 1.0),
                    SpacePart::Atoms {
                        points: vec![vec![1.0]],
                        weights: vec![vec![1.0]],
                    },
                    1.0,
                ),
                Component::new(
                    TimePart::interval(1.0, 2.0),
                    SpacePart::Atoms {
                        points: vec![vec![1.0]],
                        weights: vec![vec![1.0]],
                    },
                    1.0,
                ),
            ],
        )
        .unwrap();
        let s = m.time_slice(0.25, 4).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.atom(0).w[0] - 0.75).abs() < 1e-15);
        let s1 = m.time_slice(1.0, 4).unwrap();
        assert_eq!(s1.len(), 1);
        assert_eq!(s1.mass(), 1.0);
        assert_eq!(m.time_slice(2.0, 4).unwrap().mass(), 1.0);
    }

    #[test]
    fn abs_of_circle_is_perimeter() {
        let m = SymbolicMeasure::new(
            2,
            2,
            vec![Component::new(
                TimePart::dirac(0.5),
                SpacePart::Polyline {
                    points: circle(128),
                    orientation: -1,
                },
                1.0,
            )],
        )
        .unwrap();
        let tv = m.abs().unwrap().discretize(2).unwrap().mass();
        let perimeter = 128.0 * 2.0 * (std::f64::consts::PI / 128.0).sin();
        assert!((tv - perimeter).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let m = square_flux();
        let s = serde_json::to_string(&m).unwrap();
        let back: SymbolicMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let txt = r#"{"dim":1,"norm":"l2","components":[{"time":{"kind":"dirac","t":0.5},
            "space":{"kind":"atoms","points":[[0.0]],"weights":[[1.0]]},"scale":1.0}]}"#;
        let p: SymbolicMeasure = serde_json::from_str(txt).unwrap();
        assert_eq!(p.weight_dim(), 1);
    }
}
