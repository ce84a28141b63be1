//! Worked examples: symbolic pairs, closed-form ensembles and fields.

use crate::curves::LipCurve;
use crate::error::{Error, Result};
use crate::measure::{Component, SpacePart, SymbolicMeasure, TimePart};
use crate::norm::NormSpec;
use crate::superposition::{FieldSampler, SuperpositionMeasure};
use crate::weak_form::{ce_cover, TestBasis};
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const IDS: [&str; 8] = ["2.5", "7.1", "7.2", "7.3", "7.3b", "7.4", "7.5", "7.6"];
/// Time of the concentrated fluxes.
pub const T0: f64 = 0.5;
const ON_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct FixtureOptions {
    /// Stratified curves per one-parameter family.
    pub m_curves: usize,
    /// Loop count of the 7.4 family.
    pub n: usize,
    pub circle_segments: usize,
    pub s_step: f64,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            m_curves: 200,
            n: 10,
            circle_segments: 128,
            s_step: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleFixture {
    pub id: String,
    pub mu: SymbolicMeasure,
    pub nu: SymbolicMeasure,
    pub mu0: SymbolicMeasure,
    pub horizon: f64,
    pub eta: Option<SuperpositionMeasure>,
    /// A second ensemble: the mixture of 7.6 or the weak* limit of 7.4.
    pub alt_eta: Option<SuperpositionMeasure>,
    pub expectations: Vec<Expectation>,
    pub metadata: BTreeMap<String, String>,
    /// Whether the flux is minimal, so representing curves should be
    /// injective.
    pub minimal: bool,
}

impl ExampleFixture {
    pub fn expectation(&self, name: &str) -> Option<f64> {
        self.expectations.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn dim(&self) -> usize {
        self.mu.dim
    }

    /// Tensor basis covering the supports of μ, ν and μ₀ up to the horizon.
    pub fn basis(&self, knots: usize) -> Result<TestBasis> {
        let (mu, nu, mu0) = (self.mu.discretize(4)?, self.nu.discretize(4)?, self.mu0.discretize(4)?);
        TestBasis::uniform(&ce_cover(&[&mu, &nu, &mu0], self.horizon)?, knots)
    }
}

fn dirac(x: &[f64], w: f64) -> SpacePart {
    SpacePart::Atoms {
        points: vec![x.to_vec()],
        weights: vec![vec![w]],
    }
}

fn comp(time: TimePart, space: SpacePart) -> Component {
    Component::new(time, space, 1.0)
}

/// ℒ¹ ⊗ ((1-t)δ_a + tδ_b) on [0, 1], then δ_b up to the horizon, times c.
fn llp(a: &[f64], b: &[f64], horizon: f64, c: f64) -> Vec<Component> {
    vec![
        Component::new(TimePart::affine(0.0, 1.0, c, -c), dirac(a, 1.0), 1.0),
        Component::new(TimePart::affine(0.0, 1.0, 0.0, c), dirac(b, 1.0), 1.0),
        Component::new(TimePart::interval(1.0, horizon), dirac(b, 1.0), c),
    ]
}

pub fn circle(n: usize) -> Vec<Vec<f64>> {
    (0..=n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            if k == n {
                vec![1.0, 0.0]
            } else {
                vec![a.cos(), a.sin()]
            }
        })
        .collect()
}

/// Quarter circle from (0, 0) to (1, 1).
pub fn quarter_arc(n: usize) -> Vec<Vec<f64>> {
    (0..=n)
        .map(|k| {
            let a = 0.5 * PI * k as f64 / n as f64;
            if k == n {
                vec![1.0, 1.0]
            } else {
                vec![a.sin(), 1.0 - a.cos()]
            }
        })
        .collect()
}

pub fn bent_polyline() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0], vec![0.8, 0.2], vec![1.2, 0.9], vec![0.6, 1.5]]
}

fn polyline_length(p: &[Vec<f64>]) -> f64 {
    p.windows(2).map(|w| NormSpec::L2.dist(&w[1], &w[0])).sum()
}

fn with_t(t: f64, x: &[f64]) -> Vec<f64> {
    let mut p = vec![t];
    p.extend_from_slice(x);
    p
}

/// Waits at `a` until tb, runs the spatial path `path` at time tb (loops
/// times), then waits at its end until the horizon.
fn jump_curve(tb: f64, a: &[f64], path: &[Vec<f64>], loops: usize, horizon: f64) -> Result<LipCurve> {
    let mut v = vec![with_t(0.0, a), with_t(tb, a)];
    for _ in 0..loops {
        for p in &path[1..] {
            v.push(with_t(tb, p));
        }
    }
    let end = if loops > 0 { path.last().unwrap() } else { a };
    v.push(with_t(horizon, end));
    LipCurve::from_vertices(v, NormSpec::L2)
}

fn stratified(m: usize) -> Vec<f64> {
    (0..m).map(|j| (j as f64 + 0.5) / m as f64).collect()
}

fn family(m: usize, f: impl Fn(f64) -> Result<LipCurve>, s_step: f64) -> Result<SuperpositionMeasure> {
    let curves = stratified(m).into_iter().map(f).collect::<Result<Vec<_>>>()?;
    SuperpositionMeasure::uniform(curves, s_step)
}

fn parse_id(id: &str, opts: &FixtureOptions) -> Result<(String, usize)> {
    if let Some(rest) = id.strip_prefix("7.4") {
        if rest.is_empty() {
            return Ok(("7.4".into(), opts.n));
        }
        let n = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|r| r.parse::<usize>().ok())
            .filter(|n| *n >= 1)
            .ok_or_else(|| Error::UnknownFixture(id.into()))?;
        return Ok(("7.4".into(), n));
    }
    if IDS.contains(&id) {
        Ok((id.into(), opts.n))
    } else {
        Err(Error::UnknownFixture(id.into()))
    }
}

fn exp(pairs: &[(&str, f64)]) -> Vec<Expectation> {
    pairs
        .iter()
        .map(|(n, v)| Expectation {
            name: n.to_string(),
            value: *v,
        })
        .collect()
}

pub fn build(id: &str, opts: &FixtureOptions) -> Result<ExampleFixture> {
    let (key, n) = parse_id(id, opts)?;
    let m = opts.m_curves;
    let ss = opts.s_step;
    let mut meta = BTreeMap::new();
    let ring = circle(opts.circle_segments);
    let ring_len = polyline_length(&ring);
    let loop_flux = |time: TimePart| {
        SymbolicMeasure::new(
            2,
            2,
            vec![comp(
                time,
                SpacePart::Polyline {
                    points: ring.clone(),
                    orientation: 1,
                },
            )],
        )
    };
    let o2 = [0.0, 0.0];
    let x2 = [1.0, 0.0];
    let fx = match key.as_str() {
        "7.1" => {
            let (x0, x1, horizon) = (0.0, 1.0, 2.0);
            meta.insert("x0".into(), "0".into());
            meta.insert("x1".into(), "1".into());
            let nu = SymbolicMeasure::new(
                1,
                1,
                vec![comp(TimePart::interval(0.0, 1.0), SpacePart::Segment { a: vec![x0], b: vec![x1] })],
            )?;
            let eta = family(m, |tb| jump_curve(tb, &[x0], &[vec![x0], vec![x1]], 1, horizon), ss)?;
            ExampleFixture {
                id: key,
                mu: SymbolicMeasure::new(1, 1, llp(&[x0], &[x1], horizon, 1.0))?,
                nu,
                mu0: SymbolicMeasure::new(1, 1, vec![comp(TimePart::dirac(0.0), dirac(&[x0], 1.0))])?,
                horizon,
                eta: Some(eta),
                alt_eta: None,
                expectations: exp(&[("w1_slope", 1.0), ("flux_variation", 1.0), ("flux_mass", 1.0)]),
                metadata: meta,
                minimal: true,
            }
        }
        "7.2" | "7.3" | "7.3b" => {
            let horizon = if key == "7.3b" { 1.5 } else { 1.0 };
            let centre: &[f64] = if key == "7.2" { &o2 } else { &x2 };
            meta.insert("circle_segments".into(), opts.circle_segments.to_string());
            meta.insert("t0".into(), T0.to_string());
            let nu = if key == "7.3b" {
                loop_flux(TimePart::interval(0.0, 1.0))?
            } else {
                loop_flux(TimePart::dirac(T0))?
            };
            let eta = match key.as_str() {
                "7.2" => None,
                "7.3" => Some(SuperpositionMeasure::uniform(vec![jump_curve(T0, &x2, &ring, 1, horizon)?], ss)?),
                _ => Some(family(m, |tb| jump_curve(tb, &x2, &ring, 1, horizon), ss)?),
            };
            let mut e = vec![("tangent_pairing", ring_len)];
            if key == "7.2" {
                e.push(("minimal_flux_objective", 0.0));
            }
            ExampleFixture {
                id: key,
                mu: SymbolicMeasure::new(2, 1, vec![comp(TimePart::interval(0.0, horizon), dirac(centre, 1.0))])?,
                nu,
                mu0: SymbolicMeasure::new(2, 1, vec![comp(TimePart::dirac(0.0), dirac(centre, 1.0))])?,
                horizon,
                eta,
                alt_eta: None,
                expectations: exp(&e),
                metadata: meta,
                minimal: false,
            }
        }
        "7.4" => {
            let horizon = 1.0;
            let p = 1.0 / n as f64;
            meta.insert("n".into(), n.to_string());
            meta.insert("t0".into(), T0.to_string());
            let y0 = LipCurve::from_vertices(vec![with_t(0.0, &o2), with_t(horizon, &o2)], NormSpec::L2)?;
            let y1 = jump_curve(T0, &x2, &ring, n, horizon)?;
            let s_max = y1.end_s();
            let eta = SuperpositionMeasure::new(vec![y0.clone(), y1], vec![1.0 - p, p], s_max, ss)?;
            let limit = SuperpositionMeasure::new(vec![y0], vec![1.0], s_max, ss)?;
            ExampleFixture {
                id: format!("7.4({n})"),
                mu: SymbolicMeasure::new(
                    2,
                    1,
                    vec![comp(
                        TimePart::interval(0.0, horizon),
                        SpacePart::Atoms {
                            points: vec![o2.to_vec(), x2.to_vec()],
                            weights: vec![vec![1.0 - p], vec![p]],
                        },
                    )],
                )?,
                nu: loop_flux(TimePart::dirac(T0))?,
                mu0: SymbolicMeasure::new(
                    2,
                    1,
                    vec![comp(
                        TimePart::dirac(0.0),
                        SpacePart::Atoms {
                            points: vec![o2.to_vec(), x2.to_vec()],
                            weights: vec![vec![1.0 - p], vec![p]],
                        },
                    )],
                )?,
                horizon,
                eta: Some(eta),
                alt_eta: Some(limit),
                expectations: exp(&[("tangent_pairing", ring_len)]),
                metadata: meta,
                minimal: false,
            }
        }
        "7.5" | "2.5" => {
            let horizon = 2.0;
            let path = if key == "7.5" {
                meta.insert("rho".into(), format!("quarter circle (sin a, 1 - cos a), {} segments", opts.circle_segments));
                quarter_arc(opts.circle_segments)
            } else {
                meta.insert("rho".into(), "open polyline (0,0) (0.8,0.2) (1.2,0.9) (0.6,1.5)".into());
                bent_polyline()
            };
            let (a, b) = (path[0].clone(), path.last().unwrap().clone());
            let nu = SymbolicMeasure::new(
                2,
                2,
                vec![comp(
                    TimePart::interval(0.0, 1.0),
                    SpacePart::Polyline {
                        points: path.clone(),
                        orientation: 1,
                    },
                )],
            )?;
            let eta = family(m, |tb| jump_curve(tb, &a, &path, 1, horizon), ss)?;
            ExampleFixture {
                id: key,
                mu: SymbolicMeasure::new(2, 1, llp(&a, &b, horizon, 1.0))?,
                nu,
                mu0: SymbolicMeasure::new(2, 1, vec![comp(TimePart::dirac(0.0), dirac(&a, 1.0))])?,
                horizon,
                eta: Some(eta),
                alt_eta: None,
                expectations: exp(&[("minimal_lambda", 1.0), ("flux_mass", polyline_length(&path))]),
                metadata: meta,
                minimal: true,
            }
        }
        "7.6" => {
            let horizon = 2.0;
            meta.insert("flux_window".into(), "[0, 1]".into());
            let seg = SpacePart::Segment {
                a: vec![0.0],
                b: vec![1.0],
            };
            let mut mu_c = llp(&[0.0], &[1.0], horizon, 0.5);
            mu_c.push(Component::new(TimePart::interval(0.0, horizon), seg.clone(), 0.5));
            let mu0 = SymbolicMeasure::new(
                1,
                1,
                vec![
                    comp(TimePart::dirac(0.0), dirac(&[0.0], 0.5)),
                    Component::new(TimePart::dirac(0.0), seg.clone(), 0.5),
                ],
            )?;
            let nu = SymbolicMeasure::new(1, 1, vec![Component::new(TimePart::interval(0.0, 1.0), seg, 0.5)])?;
            // field-consistent: diagonal motion at unit slope while t < 1
            let launched = |tb: f64| {
                LipCurve::from_vertices(
                    vec![vec![0.0, 0.0], vec![tb, 0.0], vec![1.0, 1.0 - tb], vec![horizon, 1.0 - tb]],
                    NormSpec::L2,
                )
            };
            let interior = |x: f64| {
                LipCurve::from_vertices(
                    vec![vec![0.0, x], vec![1.0 - x, 1.0], vec![horizon, 1.0]],
                    NormSpec::L2,
                )
            };
            let eta = SuperpositionMeasure::mix(&family(m, launched, ss)?, 0.5, &family(m, interior, ss)?, 0.5)?;
            let jumps = family(m, |tb| jump_curve(tb, &[0.0], &[vec![0.0], vec![1.0]], 1, horizon), ss)?;
            let still = family(
                m,
                |x| LipCurve::from_vertices(vec![vec![0.0, x], vec![horizon, x]], NormSpec::L2),
                ss,
            )?;
            let alt = SuperpositionMeasure::mix(&jumps, 0.5, &still, 0.5)?;
            ExampleFixture {
                id: key,
                mu: SymbolicMeasure::new(1, 1, mu_c)?,
                nu,
                mu0,
                horizon,
                eta: Some(eta),
                alt_eta: Some(alt),
                expectations: exp(&[("interior_tau", FRAC_1_SQRT_2), ("interior_v", FRAC_1_SQRT_2)]),
                metadata: meta,
                minimal: true,
            }
        }
        _ => return Err(Error::UnknownFixture(id.into())),
    };
    Ok(fx)
}

/// Tangent of the polyline piece within tol of x, if any.
fn tangent_on(path: &[Vec<f64>], x: &[f64], tol: f64) -> Option<Vec<f64>> {
    for w in path.windows(2) {
        let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
        let l2: f64 = d.iter().map(|v| v * v).sum();
        let r: Vec<f64> = x.iter().zip(&w[0]).map(|(a, b)| a - b).collect();
        let lam = (r.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / l2).clamp(0.0, 1.0);
        let off: f64 = r.iter().zip(&d).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        if off <= tol {
            let l = l2.sqrt();
            return Some(d.iter().map(|v| v / l).collect());
        }
    }
    None
}

fn near(x: &[f64], p: &[f64]) -> bool {
    NormSpec::L2.dist(x, p) <= ON_TOL
}

/// The closed-form (τ, v) of an example, as printed with its case
/// distinctions; points outside every listed set get (0, 0).
pub struct ExpectedField {
    key: String,
    path: Vec<Vec<f64>>,
}

impl ExpectedField {
    pub fn new(id: &str, opts: &FixtureOptions) -> Result<Self> {
        let (key, _) = parse_id(id, opts)?;
        let path = match key.as_str() {
            "7.5" => quarter_arc(opts.circle_segments),
            "2.5" => bent_polyline(),
            "7.1" | "7.6" => vec![vec![0.0], vec![1.0]],
            _ => circle(opts.circle_segments),
        };
        Ok(Self { key, path })
    }
}

impl FieldSampler for ExpectedField {
    fn sample(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let (t, x) = (p[0], &p[1..]);
        let d = x.len();
        let rest = (1.0, vec![0.0; d]);
        let zero = (0.0, vec![0.0; d]);
        let flux = |active: bool| -> Option<(f64, Vec<f64>)> {
            if !active {
                return None;
            }
            tangent_on(&self.path, x, ON_TOL).map(|v| (0.0, v))
        };
        match self.key.as_str() {
            "7.1" => {
                let (x0, x1) = (0.0, 1.0);
                if (t < 1.0 && (near(x, &[x0]) || near(x, &[x1]))) || (t >= 1.0 && near(x, &[x1])) {
                    rest
                } else if t < 1.0 && x[0] > x0 && x[0] < x1 {
                    (0.0, vec![1.0])
                } else {
                    zero
                }
            }
            "7.6" => {
                if x[0] > ON_TOL && x[0] < 1.0 - ON_TOL {
                    if t < 1.0 {
                        (FRAC_1_SQRT_2, vec![FRAC_1_SQRT_2])
                    } else {
                        rest
                    }
                } else if (t < 1.0 && (near(x, &[0.0]) || near(x, &[1.0]))) || near(x, &[1.0]) {
                    rest
                } else {
                    zero
                }
            }
            "7.2" | "7.3" | "7.4" => {
                let at_rest = match self.key.as_str() {
                    "7.2" => near(x, &[0.0, 0.0]),
                    "7.3" => near(x, &[1.0, 0.0]),
                    _ => near(x, &[0.0, 0.0]) || near(x, &[1.0, 0.0]),
                };
                if let Some(f) = flux((t - T0).abs() <= ON_TOL) {
                    // the circle passes through x1: the flux wins at t0
                    if !(self.key == "7.2" && at_rest) {
                        return f;
                    }
                }
                if at_rest {
                    rest
                } else {
                    zero
                }
            }
            "7.3b" => {
                if near(x, &[1.0, 0.0]) {
                    return rest;
                }
                flux((0.0..=1.0).contains(&t)).unwrap_or(zero)
            }
            _ => {
                let (a, b) = (&self.path[0], self.path.last().unwrap());
                if near(x, a) || near(x, b) {
                    return rest;
                }
                flux((0.0..1.0).contains(&t)).unwrap_or(zero)
            }
        }
    }
}
