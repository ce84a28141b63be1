use ceflux::augmented::{mollify, velocity, GridSpec};
use ceflux::curves::{d_metric, to_abv, to_lip};
use ceflux::measure::{AtomicVectorMeasure, Component, SpacePart, SymbolicMeasure, TimePart};
use ceflux::minimal_flux::minimal_pair;
use ceflux::superposition::FieldSampler;
use ceflux::suite::{abv_gap, random_curve};
use ceflux::wasserstein::{w1, w1_lp};
use ceflux::weak_form::{ce_cover, ce_residual, TestBasis};
use ceflux::NormSpec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NORMS: [NormSpec; 3] = [NormSpec::L1, NormSpec::L2, NormSpec::Linf];

fn arb_norm() -> impl Strategy<Value = NormSpec> {
    prop::sample::select(NORMS.to_vec())
}

/// Atoms in [0, 1] × [-1, 1]^d with weights in [-1, 1]^m.
fn arb_atoms(d: usize, m: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(f64, Vec<f64>, Vec<f64>)>> {
    prop::collection::vec(
        (0.0f64..1.0, prop::collection::vec(-1.0f64..1.0, d), prop::collection::vec(-1.0f64..1.0, m)),
        n,
    )
}

fn build(d: usize, m: usize, norm: NormSpec, atoms: &[(f64, Vec<f64>, Vec<f64>)]) -> AtomicVectorMeasure {
    let mut out = AtomicVectorMeasure::new(d, m, norm);
    for (t, x, w) in atoms {
        out.push(*t, x, w).unwrap();
    }
    out
}

/// Probability measure on points of R², time 0.
fn probability(points: &[(f64, f64)], raw: &[f64], norm: NormSpec) -> AtomicVectorMeasure {
    let total: f64 = raw.iter().sum();
    let mut out = AtomicVectorMeasure::new(2, 1, norm);
    for (p, w) in points.iter().zip(raw) {
        out.push(0.0, &[p.0, p.1], &[w / total]).unwrap();
    }
    out
}

fn arb_probability() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>)> {
    (1usize..5).prop_flat_map(|n| {
        (
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n),
            prop::collection::vec(0.1f64..1.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_variation_subadditive_and_homogeneous(
        a in arb_atoms(2, 2, 0..8),
        b in arb_atoms(2, 2, 0..8),
        c in -3.0f64..3.0,
        norm in arb_norm(),
    ) {
        let (ma, mb) = (build(2, 2, norm, &a), build(2, 2, norm, &b));
        let joint = ma.concat(&mb).unwrap();
        let (ta, tb) = (ma.total_variation(None), mb.total_variation(None));
        prop_assert!(ta >= 0.0);
        prop_assert!(joint.total_variation(None) <= ta + tb + 1e-12);
        prop_assert!((ma.scaled(c).total_variation(None) - c.abs() * ta).abs() <= 1e-12 * (1.0 + ta));
    }

    #[test]
    fn pushforward_keeps_positive_mass(a in arb_atoms(2, 1, 1..10), shift in -1.0f64..1.0) {
        let pos: Vec<_> = a.into_iter().map(|(t, x, w)| (t, x, vec![w[0].abs()])).collect();
        let m = build(2, 1, NormSpec::L2, &pos);
        let p = m.pushforward(|t, x| (t + shift.abs(), vec![x[0] * x[1], x[0] + shift])).unwrap();
        prop_assert_eq!(p.mass(), m.mass());
    }

    #[test]
    fn w1_of_diracs_is_the_distance(x in (-3.0f64..3.0, -3.0f64..3.0), y in (-3.0f64..3.0, -3.0f64..3.0), norm in arb_norm()) {
        let (a, b) = (probability(&[x], &[1.0], norm), probability(&[y], &[1.0], norm));
        let d = norm.norm(&[x.0 - y.0, x.1 - y.1]);
        prop_assert!((w1(&a, &b).unwrap() - d).abs() <= 1e-12 * (1.0 + d));
    }

    #[test]
    fn w1_triangle_and_symmetry(
        p in arb_probability(),
        q in arb_probability(),
        r in arb_probability(),
        norm in arb_norm(),
    ) {
        let (a, b, c) = (probability(&p.0, &p.1, norm), probability(&q.0, &q.1, norm), probability(&r.0, &r.1, norm));
        let ab = w1(&a, &b).unwrap();
        prop_assert!((ab - w1(&b, &a).unwrap()).abs() <= 1e-9);
        prop_assert!(w1(&a, &c).unwrap() <= ab + w1(&b, &c).unwrap() + 1e-9);
        prop_assert!(w1(&a, &a).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn transport_plan_marginals(p in arb_probability(), q in arb_probability(), norm in arb_norm()) {
        let (a, b) = (probability(&p.0, &p.1, norm), probability(&q.0, &q.1, norm));
        let (_, plan) = w1_lp(&a, &b, norm).unwrap();
        let mut rows = vec![0.0; a.len()];
        let mut cols = vec![0.0; b.len()];
        for k in 0..plan.flows.len() {
            prop_assert!(plan.flows[k] >= 0.0);
            rows[plan.rows[k]] += plan.flows[k];
            cols[plan.cols[k]] += plan.flows[k];
        }
        for (s, w) in rows.iter().zip(a.weights()) {
            prop_assert!((s - w).abs() <= 1e-12);
        }
        for (s, w) in cols.iter().zip(b.weights()) {
            prop_assert!((s - w).abs() <= 1e-12);
        }
    }

    #[test]
    fn discretisation_pairs_affine_functions_exactly(
        t0 in 0.0f64..1.0,
        len in 0.1f64..2.0,
        a in (-1.0f64..1.0, -1.0f64..1.0),
        b in (-1.0f64..1.0, -1.0f64..1.0),
        coef in prop::collection::vec(-2.0f64..2.0, 4),
        scale in 0.1f64..3.0,
        res in 2usize..24,
    ) {
        prop_assume!(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() > 1e-3);
        let sym = SymbolicMeasure::new(2, 1, vec![Component::new(
            TimePart::interval(t0, t0 + len),
            SpacePart::Segment { a: vec![a.0, a.1], b: vec![b.0, b.1] },
            scale,
        )]).unwrap();
        let f = |t: f64, x: &[f64]| vec![coef[0] + coef[1] * t + coef[2] * x[0] + coef[3] * x[1]];
        let got = sym.discretize(res).unwrap().pair(f).unwrap();
        let seg = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let want = scale * len * seg * f(t0 + len / 2.0, &[(a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0])[0];
        prop_assert!((got - want).abs() <= 1e-11 * (1.0 + want.abs()), "{} vs {}", got, want);
    }

    #[test]
    fn residual_is_linear(
        mu1 in arb_atoms(1, 1, 1..6),
        nu1 in arb_atoms(1, 1, 1..6),
        mu2 in arb_atoms(1, 1, 1..6),
        nu2 in arb_atoms(1, 1, 1..6),
        alpha in 0.0f64..1.0,
    ) {
        let z = |v: &[(f64, Vec<f64>, Vec<f64>)]| -> Vec<_> { v.iter().map(|(_, x, w)| (0.0, x.clone(), w.clone())).collect() };
        let (m1, n1, m2, n2) = (build(1, 1, NormSpec::L2, &mu1), build(1, 1, NormSpec::L2, &nu1), build(1, 1, NormSpec::L2, &mu2), build(1, 1, NormSpec::L2, &nu2));
        let (z1, z2) = (build(1, 1, NormSpec::L2, &z(&mu1)), build(1, 1, NormSpec::L2, &z(&mu2)));
        let basis = TestBasis::uniform(&[(-0.2, 1.0), (-1.2, 1.2)], 6).unwrap();
        let r1 = ce_residual(&m1, &n1, &z1, &basis, 1.0).unwrap();
        let r2 = ce_residual(&m2, &n2, &z2, &basis, 1.0).unwrap();
        let mix = |a: &AtomicVectorMeasure, b: &AtomicVectorMeasure| a.scaled(alpha).concat(&b.scaled(1.0 - alpha)).unwrap();
        let r = ce_residual(&mix(&m1, &m2), &mix(&n1, &n2), &mix(&z1, &z2), &basis, 1.0).unwrap();
        for k in 0..r.per_fn.len() {
            let want = alpha * r1.per_fn[k] + (1.0 - alpha) * r2.per_fn[k];
            prop_assert!((r.per_fn[k] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn curve_round_trips(seed in any::<u64>()) {
        let y = random_curve(&mut ChaCha8Rng::seed_from_u64(seed));
        let u = to_abv(&y).unwrap();
        let y2 = to_lip(&u).unwrap();
        prop_assert!(d_metric(&y, &y2, 20) <= 1e-9);
        prop_assert!(abv_gap(&u, &to_abv(&y2).unwrap()) <= 1e-9);
        prop_assert!(y2.is_normalized(1e-12));
        prop_assert!((0..y2.segments()).all(|k| y2.point(k + 1)[0] >= y2.point(k)[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn minimal_flux_bounds_and_idempotence(nu in arb_atoms(1, 1, 2..7)) {
        let mut mu = AtomicVectorMeasure::scalar(1);
        mu.push(0.5, &[5.0], &[1.0]).unwrap();
        let nu = build(1, 1, NormSpec::L2, &nu);
        let cover = ce_cover(&[&mu, &nu], 1.0).unwrap();
        let basis = TestBasis::uniform(&cover, 6).unwrap();
        let r = minimal_pair(&mu, &nu, &basis, 1e-9, 1e-8).unwrap();
        prop_assert!(r.lambda.iter().all(|l| (0.0..=1.0).contains(l)));
        prop_assert!(r.objective >= -1e-12);
        prop_assert!(r.objective <= r.tv_singular * (1.0 + 1e-9) + 1e-12);
        prop_assert!(r.is_submeasure);
        prop_assert!(r.nu_bar.total_variation(None) <= nu.total_variation(None) + 1e-12);
        let again = minimal_pair(&mu, &r.nu_bar, &basis, 1e-9, 1e-8).unwrap();
        let kept: Vec<f64> = again.lambda.iter().zip(r.nu_bar.weights()).filter(|(_, w)| w.abs() > 1e-9).map(|(l, _)| *l).collect();
        prop_assert!(kept.iter().all(|l| (l - 1.0).abs() <= 1e-6), "{:?}", kept);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn velocity_field_has_unit_norm(
        pts in prop::collection::vec((-1.0f64..1.0, 0.1f64..1.0, -2.0f64..2.0), 1..5),
        probe in (0.0f64..1.0, -1.0f64..1.0),
        norm in arb_norm(),
    ) {
        let points: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0]).collect();
        let part = |w: &dyn Fn(&(f64, f64, f64)) -> f64, time: TimePart| {
            SymbolicMeasure::new(1, 1, vec![Component::new(
                time,
                SpacePart::Atoms { points: points.clone(), weights: pts.iter().map(|p| vec![w(p)]).collect() },
                1.0,
            )]).unwrap().discretize(10).unwrap().with_norm(norm)
        };
        let mu = part(&|p| p.1, TimePart::interval(0.0, 1.0));
        let nu = part(&|p| p.1 * p.2, TimePart::interval(0.0, 1.0));
        let mu0 = part(&|p| p.1, TimePart::dirac(0.0));
        let m = mollify(&mu, &nu, &mu0, 0.3, GridSpec { h: 0.1, horizon: 1.0 }).unwrap();
        prop_assert!(m.mu.data.iter().all(|v| *v > 0.0));
        let field = velocity(&m.mu, &m.nu, norm).unwrap();
        prop_assert!(field.unit_norm_defect() <= 1e-12);
        let (tau, v) = field.sample(&[probe.0, probe.1]);
        prop_assert!(tau > 0.0);
        prop_assert!((norm.norm_with_head(tau, &v) - 1.0).abs() <= 1e-12);
    }
}
