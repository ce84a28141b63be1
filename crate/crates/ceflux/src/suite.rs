//! The verification suite behind `ceflux report`: every check in one
//! deterministic JSON document.

use crate::augmented::{flow, lift, FlowOptions, LiftOptions, LiftReport};
use crate::curves::{
    d_metric, injectivity_check, omega_curve, segment_check, to_abv, to_lip, ABVCurve, LipCurve, PathQuadrature,
};
use crate::error::Result;
use crate::fixtures::{build, ExampleFixture, ExpectedField, FixtureOptions, IDS};
use crate::lp::{self, LinearProgram, Row};
use crate::measure::{AtomicVectorMeasure, SymbolicSlices};
use crate::minimal_flux::{minimal_pair, DEFAULT_EPS_CON};
use crate::norm::NormSpec;
use crate::superposition::{
    characteristic_residual, push_field, push_mu, push_nu, push_tv, represent, split_d, symbolic_field,
    symbolic_pairings, BvEnsemble, SuperpositionMeasure,
};
use crate::wasserstein::{var_w1, var_w1_partition, w1, w1_1d, w1_lp, VARIATION_MAX_SLICES};
use crate::weak_form::{ce_residual, ce_residual_exact};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

const KNOTS: usize = 16;
const WITNESS_PAIRING: f64 = 2.0 * PI - 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Vec<SuiteEntry>,
    pub pass: bool,
}

struct Check {
    metrics: BTreeMap<String, f64>,
    pass: bool,
}

impl Check {
    fn new() -> Self {
        Self {
            metrics: BTreeMap::new(),
            pass: true,
        }
    }

    /// Records a metric and requires it to be at most `bound`.
    fn le(&mut self, key: &str, v: f64, bound: f64) -> &mut Self {
        self.pass &= v <= bound;
        self.metrics.insert(key.to_string(), v);
        self
    }

    fn ge(&mut self, key: &str, v: f64, bound: f64) -> &mut Self {
        self.pass &= v >= bound;
        self.metrics.insert(key.to_string(), v);
        self
    }

    fn flag(&mut self, key: &str, ok: bool) -> &mut Self {
        self.pass &= ok;
        self.metrics.insert(key.to_string(), if ok { 1.0 } else { 0.0 });
        self
    }

    fn info(&mut self, key: &str, v: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), v);
        self
    }
}

fn fixture(id: &str) -> Result<ExampleFixture> {
    build(id, &FixtureOptions::default())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// A unit-speed, time-monotone polyline in 1 or 2 space dimensions mixing
/// flat and moving pieces.
pub fn random_curve(rng: &mut impl Rng) -> LipCurve {
    let d = rng.gen_range(1..=2);
    let mut p: Vec<f64> = std::iter::once(0.0).chain((0..d).map(|_| rng.gen_range(-1.0..1.0))).collect();
    let mut pts = vec![p.clone()];
    for _ in 0..rng.gen_range(2..10) {
        p[0] += if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(0.05..0.8) };
        for c in p.iter_mut().skip(1) {
            *c += rng.gen_range(-0.6..0.6);
        }
        pts.push(p.clone());
    }
    LipCurve::from_vertices(pts, NormSpec::L2).expect("increments are nonzero almost surely")
}

/// Largest coordinate gap between two ABV curves; infinite if their
/// structure differs.
pub fn abv_gap(a: &ABVCurve, b: &ABVCurve) -> f64 {
    if a.times().len() != b.times().len() || a.jumps().len() != b.jumps().len() {
        return f64::INFINITY;
    }
    let mut g = max_diff(a.times(), b.times());
    for (p, q) in a.values().iter().zip(b.values()) {
        g = g.max(max_diff(p, q));
    }
    for (p, q) in a.jumps().iter().zip(b.jumps()) {
        if p.path.len() != q.path.len() {
            return f64::INFINITY;
        }
        g = g.max((p.t - q.t).abs());
        for (x, y) in p.path.iter().zip(&q.path) {
            g = g.max(max_diff(x, y));
        }
    }
    g
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoundtripStats {
    pub lip_roundtrip: f64,
    pub abv_roundtrip: f64,
    pub invariants: bool,
}

/// 𝒯∘𝒮 and 𝒮∘𝒯 on n random curves.
pub fn roundtrip_stats(n: usize, seed: u64) -> Result<RoundtripStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = RoundtripStats {
        lip_roundtrip: 0.0,
        abv_roundtrip: 0.0,
        invariants: true,
    };
    for _ in 0..n {
        let y = random_curve(&mut rng);
        let u = to_abv(&y)?;
        let y2 = to_lip(&u)?;
        out.lip_roundtrip = out.lip_roundtrip.max(d_metric(&y, &y2, 20));
        out.abv_roundtrip = out.abv_roundtrip.max(abv_gap(&u, &to_abv(&y2)?));
        out.invariants &= y2.is_normalized(1e-12) && (0..y2.segments()).all(|k| y2.point(k + 1)[0] >= y2.point(k)[0]);
    }
    Ok(out)
}

fn scalar_1d(xs: &[f64], ws: &[f64]) -> Result<AtomicVectorMeasure> {
    let mut m = AtomicVectorMeasure::scalar(1);
    for (x, w) in xs.iter().zip(ws) {
        m.push(0.0, &[*x], &[*w])?;
    }
    Ok(m)
}

fn probability(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn w1_identity(c: &mut Check, seed: u64) -> Result<()> {
    let fx = fixture("7.1")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (s, t): (f64, f64) = (rng.gen(), rng.gen());
        let d = w1(&fx.mu.time_slice(s, 2)?, &fx.mu.time_slice(t, 2)?)?;
        worst = worst.max((d - (t - s).abs()).abs());
    }
    c.le("max_gap", worst, 1e-9);
    Ok(())
}

fn variation(c: &mut Check) -> Result<()> {
    let fx = fixture("7.1")?;
    let curve = SymbolicSlices {
        measure: &fx.mu,
        space_res: 2,
        range: (0.0, 1.0),
    };
    let v = var_w1(&curve, 0.0, 1.0)?.total();
    let finest = var_w1_partition(&curve, 0.0, 1.0, VARIATION_MAX_SLICES)?.total();
    let flux = fx.nu.discretize(64)?.total_variation(Some((0.0, 1.0)));
    c.le("variation_gap", (v - 1.0).abs(), 1e-6)
        .le("finest_gap", (finest - 1.0).abs(), 1e-6)
        .le("flux_mass_gap", (flux - 1.0).abs(), 1e-6);
    Ok(())
}

fn residuals(c: &mut Check) -> Result<()> {
    for id in ["7.1", "7.2", "7.3", "7.5", "7.6"] {
        let fx = fixture(id)?;
        let basis = fx.basis(KNOTS)?;
        let exact = ce_residual_exact(&fx.mu, &fx.nu, &fx.mu0, &basis, 1.0)?.max_abs;
        let disc = ce_residual(&fx.mu.discretize(100)?, &fx.nu.discretize(100)?, &fx.mu0.discretize(100)?, &basis, 1.0)?.max_abs;
        c.le(&format!("{id}_exact"), exact, 1e-10).le(&format!("{id}_discretized"), disc, 1e-3);
    }
    Ok(())
}

fn random_lp(rng: &mut impl Rng) -> (LinearProgram, Vec<f64>) {
    let n = rng.gen_range(1..=8);
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..0.0)).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let x: Vec<f64> = (0..n).map(|j| rng.gen_range(lower[j]..upper[j])).collect();
    let rows = (0..rng.gen_range(1..=3))
        .map(|_| {
            let mut coeffs = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.8) {
                    coeffs.push((j, rng.gen_range(-1.0..1.0)));
                }
            }
            let v: f64 = coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            Row {
                coeffs,
                lo: v - rng.gen_range(0.0..0.5),
                hi: v + rng.gen_range(0.0..0.5),
            }
        })
        .collect();
    let lp = LinearProgram {
        objective: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        lower,
        upper,
        rows,
    };
    (lp, x)
}

fn minimal(c: &mut Check, seed: u64) -> Result<()> {
    let fx = fixture("2.5")?;
    let basis = fx.basis(KNOTS)?;
    let pair = minimal_pair(&fx.mu.discretize(16)?, &fx.nu.discretize(16)?, &basis, 1e-9, DEFAULT_EPS_CON)?;
    let lam = pair.lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    let fx = fixture("7.2")?;
    let basis = fx.basis(KNOTS)?;
    let circle = minimal_pair(&fx.mu.discretize(16)?, &fx.nu.discretize(16)?, &basis, 1e-9, DEFAULT_EPS_CON)?;
    // planted feasible points bound the optimum from above
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut excess, mut infeas) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (p, planted) = random_lp(&mut rng);
        let s = lp::solve(&p)?;
        let at = |x: &[f64]| p.objective.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        excess = excess.max(s.objective - at(&planted));
        for r in &p.rows {
            let v: f64 = r.coeffs.iter().map(|&(j, a)| a * s.x[j]).sum();
            infeas = infeas.max(r.lo - v).max(v - r.hi);
        }
    }
    c.ge("min_lambda", lam, 1.0 - 1e-6)
        .le("circle_objective", circle.objective, 1e-6)
        .le("lp_excess_over_planted", excess, 1e-9)
        .le("lp_infeasibility", infeas, 1e-9);
    Ok(())
}

fn w1_line(c: &mut Check, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gap = 0.0f64;
    for _ in 0..100 {
        let (n, m) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
        let xa: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let xb: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let (a, b) = (scalar_1d(&xa, &probability(&mut rng, n))?, scalar_1d(&xb, &probability(&mut rng, m))?);
        gap = gap.max((w1_lp(&a, &b, NormSpec::L2)?.0 - w1_1d(&a, &b)?).abs());
    }
    c.le("lp_vs_cdf", gap, 1e-9);
    Ok(())
}

fn roundtrips(c: &mut Check, seed: u64) -> Result<()> {
    let r = roundtrip_stats(100, seed)?;
    c.le("lip_roundtrip", r.lip_roundtrip, 1e-9)
        .le("abv_roundtrip", r.abv_roundtrip, 1e-9)
        .flag("invariants", r.invariants);
    Ok(())
}

fn repr_deviation(m_curves: usize) -> Result<f64> {
    let fx = build("7.1", &FixtureOptions { m_curves, ..Default::default() })?;
    let basis = fx.basis(KNOTS)?;
    let tv = fx.mu.plus(&fx.nu.abs()?)?;
    let eta = fx.eta.as_ref().expect("7.1 has an ensemble");
    let r = represent(eta, &fx.mu, &fx.nu, Some(&tv), &basis, 1.0)?;
    let tv_dev = r.tv.map_or(0.0, |t| t.max_normalized);
    Ok(r.mu.max_normalized.max(r.nu.max_normalized).max(tv_dev))
}

fn representation(c: &mut Check) -> Result<()> {
    let (coarse, fine) = (repr_deviation(200)?, repr_deviation(1600)?);
    c.le("deviation_200", coarse, 2e-2)
        .le("deviation_1600", fine, 5e-3)
        .ge("ratio", coarse / fine, 3.0);
    Ok(())
}

fn split(c: &mut Check) -> Result<()> {
    for (id, plus) in [("7.1", false), ("7.6", true)] {
        let fx = fixture(id)?;
        let basis = fx.basis(KNOTS)?;
        let want = symbolic_pairings(&fx.nu, &basis)?;
        let s = split_d(fx.eta.as_ref().expect("ensemble"), &basis);
        let (carrier, other) = if plus { (&s.nu_plus, s.mass_zero) } else { (&s.nu_zero, s.mass_plus) };
        c.le(&format!("{id}_flux_gap"), max_diff(carrier, &want), 2e-2)
            .le(&format!("{id}_other_mass"), other, 2e-2);
    }
    Ok(())
}

/// The lift of Ex. 7.1 at grid spacing h and step ds.
pub fn lift_71(h: f64, ds: f64, seed: u64) -> Result<LiftReport> {
    let fx = fixture("7.1")?;
    let res = (1.0 / h).round() as usize;
    let opts = LiftOptions {
        h,
        ds,
        seed,
        ..Default::default()
    };
    lift(
        &fx.mu.discretize_with(res, 2)?,
        &fx.nu.discretize_with(res, res)?,
        &fx.mu0.discretize(2)?,
        fx.horizon,
        NormSpec::L2,
        &opts,
    )
}

fn augmented(c: &mut Check, seed: u64) -> Result<()> {
    let fine = lift_71(0.01, 1e-3, seed)?;
    let coarse = lift_71(0.02, 2e-3, seed)?;
    c.le("unit_norm_defect", fine.unit_norm_defect, 1e-12)
        .le("marginal", fine.marginal, 5e-2)
        .le("inversion", fine.inversion, 1e-4)
        .le("tightness_excess", fine.tight_mass - fine.tight_bound, 1e-3)
        .le("residual", fine.augmented, 5e-2)
        .info("residual_coarse", coarse.augmented)
        .ge("refinement_ratio", coarse.augmented / fine.augmented, 1.8);
    Ok(())
}

fn tangent(p: &[f64]) -> Vec<f64> {
    vec![0.0, -p[2], p[1]]
}

fn witnesses(c: &mut Check) -> Result<()> {
    let q = PathQuadrature::new(8);
    let fx = fixture("7.2")?;
    let basis = fx.basis(KNOTS)?;
    let field = ExpectedField::new("7.2", &FixtureOptions::default())?;
    let start: Vec<f64> = std::iter::once(0.0).chain(fx.mu0.discretize(2)?.atom(0).x.iter().copied()).collect();
    let opts = FlowOptions {
        ds: 1e-3,
        s_max: fx.horizon + 1.0,
        horizon: fx.horizon,
        domain: None,
    };
    let tr = flow(&field, &[start], &opts)?.remove(0);
    let y = LipCurve::from_vertices(vec![tr.start().to_vec(), tr.end().to_vec()], NormSpec::L2)?;
    let eta = SuperpositionMeasure::uniform(vec![y], 1e-2)?;
    let flux = push_nu(&eta, &basis).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    c.le("7.2_push_nu", flux, 0.0)
        .le("7.2_push_tangent", push_field(&eta, &tangent, &q).abs(), 0.0)
        .ge("7.2_nu_tangent", symbolic_field(&fx.mu, &fx.nu, &tangent, 8)?, WITNESS_PAIRING);

    let fx = fixture("7.4(10)")?;
    let basis = fx.basis(KNOTS)?;
    let r = represent(fx.eta.as_ref().expect("ensemble"), &fx.mu, &fx.nu, None, &basis, 2e-2)?;
    let ring = symbolic_field(&fx.mu, &fx.nu, &tangent, 8)?;
    let limit = push_field(fx.alt_eta.as_ref().expect("limit"), &tangent, &q);
    c.le("7.4_deviation", r.mu.max_abs.max(r.nu.max_abs), 2e-2)
        .ge("7.4_limit_loss", (ring - limit).abs(), WITNESS_PAIRING);

    let fx = fixture("7.6")?;
    let field = ExpectedField::new("7.6", &FixtureOptions::default())?;
    c.ge("7.6_alt_residual", characteristic_residual(fx.alt_eta.as_ref().expect("alt"), &field), 0.2)
        .info("7.6_residual", characteristic_residual(fx.eta.as_ref().expect("eta"), &field));
    Ok(())
}

fn bv(c: &mut Check, seed: u64) -> Result<()> {
    let fx = fixture("7.1")?;
    let basis = fx.basis(KNOTS)?;
    let eta = fx.eta.as_ref().expect("ensemble");
    let hat = BvEnsemble::from_lipschitz(eta)?;
    let th = hat.theta_pairings(&basis);
    let (pm, pn) = (push_mu(eta, &basis), push_nu(eta, &basis));
    let d = eta.dim();
    let mut lip = Vec::with_capacity(th.len());
    for k in 0..basis.len() {
        lip.push(pm[k]);
        lip.extend_from_slice(&pn[k * d..(k + 1) * d]);
    }
    let switch = max_diff(&th, &lip).max(max_diff(&hat.tv_pairings(&basis), &push_tv(eta, &basis)));

    let one = BvEnsemble::new(vec![hat.curves[0].clone()], vec![1.0])?;
    let tj = one.curves[0].jumps()[0].t;
    let (l, r) = one.slices_pm(tj)?;
    let (l2, r2) = one.slices_pm(0.5 * tj)?;
    let exact = l.points() == [0.0] && r.points() == [1.0] && l2.points() == r2.points();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = PathQuadrature::new(8);
    let phi = |p: &[f64]| -> Vec<f64> { p.iter().enumerate().map(|(i, v)| (v * (i + 1) as f64 + p[0]).sin()).collect() };
    let mut gap = 0.0f64;
    for _ in 0..50 {
        let u = to_abv(&random_curve(&mut rng))?;
        gap = gap.max((u.theta(&phi, &q) - omega_curve(&to_lip(&u)?, &phi, &q)).abs());
    }
    c.le("switch_gap", switch, 1e-9).flag("pm_limits", exact).le("theta_gap", gap, 1e-6);
    Ok(())
}

fn predicates(c: &mut Check) -> Result<()> {
    let mut ok = true;
    let mut n = 0;
    for id in IDS {
        let fx = fixture(id)?;
        if let (true, Some(eta)) = (fx.minimal, &fx.eta) {
            for y in &eta.curves {
                ok &= injectivity_check(y, 1e-6);
                n += 1;
            }
        }
    }
    let s71 = fixture("7.1")?.eta.expect("ensemble").curves.iter().all(|y| segment_check(y, 1e-9));
    let s73 = fixture("7.3")?.eta.expect("ensemble").curves.iter().any(|y| segment_check(y, 1e-9));
    c.flag("injective", ok).info("curves_checked", n as f64).flag("segment_7.1", s71).flag("no_segment_7.3", !s73);
    Ok(())
}

type CheckFn = fn(&mut Check, u64) -> Result<()>;

/// Runs all checks; identical seeds give identical reports.
pub fn run_suite(seed: u64) -> Result<SuiteReport> {
    let checks: [(&str, CheckFn); 12] = [
        ("w1_identity", |c, s| w1_identity(c, s)),
        ("w1_variation", |c, _| variation(c)),
        ("continuity_residuals", |c, _| residuals(c)),
        ("minimal_flux", |c, s| minimal(c, s)),
        ("w1_line", |c, s| w1_line(c, s)),
        ("curve_roundtrips", |c, s| roundtrips(c, s)),
        ("representation", |c, _| representation(c)),
        ("d_split", |c, _| split(c)),
        ("augmented_lift", |c, s| augmented(c, s)),
        ("witnesses", |c, _| witnesses(c)),
        ("bv_representation", |c, s| bv(c, s)),
        ("predicates", |c, _| predicates(c)),
    ];
    let mut suite = Vec::new();
    for (i, (name, f)) in checks.iter().enumerate() {
        let mut c = Check::new();
        f(&mut c, seed.wrapping_add(i as u64))?;
        suite.push(SuiteEntry {
            id: i + 1,
            name: name.to_string(),
            pass: c.pass,
            metrics: c.metrics,
        });
    }
    let pass = suite.iter().all(|e| e.pass);
    Ok(SuiteReport { suite, pass })
}
