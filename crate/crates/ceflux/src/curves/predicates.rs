use super::{LipCurve, FLAT_DT};

/// Parameter separation, in multiples of tol, beyond which two points of the
/// curve must also be tol apart in space-time.
const PARAM_FACTOR: f64 = 4.0;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clips a convex polygon to {p : g(p) >= 0} for affine g.
fn clip(poly: &[(f64, f64)], g: impl Fn(f64, f64) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ga, gb) = (g(a.0, a.1), g(b.0, b.1));
        if ga >= 0.0 {
            out.push(a);
        }
        if (ga >= 0.0) != (gb >= 0.0) {
            let t = ga / (ga - gb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

/// min ‖A + λU - μV‖ over (λ, μ) in the polygon.
fn min_distance(a: &[f64], u: &[f64], v: &[f64], poly: &[(f64, f64)]) -> f64 {
    let f = |l: f64, m: f64| -> f64 {
        a.iter()
            .zip(u)
            .zip(v)
            .map(|((a, u), v)| {
                let w = a + l * u - m * v;
                w * w
            })
            .sum()
    };
    let mut best = f64::INFINITY;
    let (uu, vv, uv) = (dot(u, u), dot(v, v), dot(u, v));
    let (au, av) = (dot(a, u), dot(a, v));
    let det = uu * vv - uv * uv;
    if det > 1e-14 * uu * vv && !poly.is_empty() {
        let l = (-au * vv + uv * av) / det;
        let m = (uu * av - uv * au) / det;
        let n = poly.len();
        let inside = (0..n).all(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            (q.0 - p.0) * (m - p.1) - (q.1 - p.1) * (l - p.0) >= -1e-15
        });
        if inside {
            best = f(l, m);
        }
    }
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let b: Vec<f64> = (0..a.len()).map(|k| a[k] + p.0 * u[k] - p.1 * v[k]).collect();
        let c: Vec<f64> = (0..a.len()).map(|k| (q.0 - p.0) * u[k] - (q.1 - p.1) * v[k]).collect();
        let cc = dot(&c, &c);
        let tau = if cc > 0.0 { (-dot(&b, &c) / cc).clamp(0.0, 1.0) } else { 0.0 };
        best = best.min(f(p.0 + tau * (q.0 - p.0), p.1 + tau * (q.1 - p.1)));
    }
    best.sqrt()
}

/// False iff two points whose parameters differ by at least 4·tol lie
/// within tol of each other (exact for piecewise-linear curves).
pub fn injectivity_check(y: &LipCurve, tol: f64) -> bool {
    let gap = PARAM_FACTOR * tol;
    let n = y.segments();
    let boxes: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|k| {
            y.point(k)
                .iter()
                .zip(y.point(k + 1))
                .map(|(a, b)| (a.min(*b), a.max(*b)))
                .collect()
        })
        .collect();
    let s = y.breakpoints();
    let square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    for i in 0..n {
        for j in i..n {
            let far = boxes[i].iter().zip(&boxes[j]).any(|(p, q)| p.0 > q.1 + tol || q.0 > p.1 + tol);
            if far {
                continue;
            }
            let (li, lj) = (s[i + 1] - s[i], s[j + 1] - s[j]);
            let poly = clip(&square, |l, m| (s[j] + m * lj) - (s[i] + l * li) - gap);
            if poly.is_empty() {
                continue;
            }
            let a: Vec<f64> = y.point(i).iter().zip(y.point(j)).map(|(p, q)| p - q).collect();
            if min_distance(&a, &y.delta(i), &y.delta(j), &poly) < tol {
                return false;
            }
        }
    }
    true
}

/// On every maximal time-flat stretch the spatial part must be the
/// unit-speed straight segment between its ends.
pub fn segment_check(y: &LipCurve, tol: f64) -> bool {
    let n = y.segments();
    let s = y.breakpoints();
    let flat = |k: usize| y.point(k + 1)[0] - y.point(k)[0] <= FLAT_DT;
    let mut k = 0;
    while k < n {
        if !flat(k) {
            k += 1;
            continue;
        }
        let mut r = k;
        while r + 1 < n && flat(r + 1) {
            r += 1;
        }
        let (a, b) = (&y.point(k)[1..], &y.point(r + 1)[1..]);
        let chord: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
        if (s[r + 1] - s[k]) - y.norm_spec().norm(&chord) > tol {
            return false;
        }
        let cc = dot(&chord, &chord);
        for i in k + 1..=r {
            let p: Vec<f64> = y.point(i)[1..].iter().zip(a).map(|(p, q)| p - q).collect();
            let lam = if cc > 0.0 { (dot(&p, &chord) / cc).clamp(0.0, 1.0) } else { 0.0 };
            let off: f64 = p.iter().zip(&chord).map(|(p, c)| (p - lam * c).powi(2)).sum::<f64>().sqrt();
            if off > tol {
                return false;
            }
        }
        k = r + 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormSpec;

    fn loop_curve() -> LipCurve {
        let mut pts = vec![vec![0.0, 1.0, 0.0], vec![0.5, 1.0, 0.0]];
        for k in 1..=64 {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            pts.push(vec![0.5, a.cos(), a.sin()]);
        }
        pts.push(vec![1.5, 1.0, 0.0]);
        LipCurve::from_vertices(pts, NormSpec::L2).unwrap()
    }

    #[test]
    fn monotone_time_is_injective() {
        let y = LipCurve::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 1.0]], NormSpec::L2).unwrap();
        assert!(injectivity_check(&y, 1e-6));
        assert!(segment_check(&y, 1e-9));
    }

    #[test]
    fn flat_loop_is_not_injective() {
        let y = loop_curve();
        assert!(!injectivity_check(&y, 1e-6));
        assert!(!segment_check(&y, 1e-6));
    }

    #[test]
    fn no_flat_part_passes_segment_check() {
        let y = LipCurve::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![2.0, 0.0]], NormSpec::L2).unwrap();
        assert!(segment_check(&y, 1e-12));
    }

    #[test]
    fn near_miss_detected() {
        // passes within 1e-3 of an earlier point at the same time
        let y = LipCurve::from_vertices(
            vec![vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.5, 1e-3 / 2.0]],
            NormSpec::L2,
        )
        .unwrap();
        assert!(!injectivity_check(&y, 1e-3));
        assert!(injectivity_check(&y, 1e-4));
    }
}
