//! Gauss-Legendre rules and piecewise integration along straight segments.

/// Nodes and weights on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Newton on P_n starting from the Chebyshev guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes[i] = 0.5 * (1.0 - x);
            weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    if n == 1.0 {
        return (x, 1.0);
    }
    (p1, d)
}

/// Parameters in (0,1) where the segment p0 -> p1 crosses one of the
/// per-axis break values, sorted, with 0 and 1 at the ends.
pub fn segment_cuts(p0: &[f64], p1: &[f64], breaks: &[Vec<f64>]) -> Vec<f64> {
    let mut cuts = vec![0.0, 1.0];
    for (axis, bs) in breaks.iter().enumerate() {
        if axis >= p0.len() {
            break;
        }
        let a = p0[axis];
        let d = p1[axis] - a;
        if d == 0.0 {
            continue;
        }
        let (lo, hi) = if d > 0.0 { (a, a + d) } else { (a + d, a) };
        let start = bs.partition_point(|&b| b <= lo);
        for &b in &bs[start..] {
            if b >= hi {
                break;
            }
            let lam = (b - a) / d;
            if lam > 0.0 && lam < 1.0 {
                cuts.push(lam);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    cuts
}

/// Calls `f(lambda, weight)` for every quadrature node of the rule applied
/// piecewise between the cuts; the weights sum to 1.
pub fn for_each_node(cuts: &[f64], rule: &GaussRule, mut f: impl FnMut(f64, f64)) {
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            f(a + len * x, len * wt);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in 1..10 {
            let r = GaussRule::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n={n} s={s}");
        }
    }

    #[test]
    fn exact_for_high_degree() {
        let r = GaussRule::new(5);
        for deg in 0..=9 {
            let q: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(x, w)| w * x.powi(deg))
                .sum();
            assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn cuts_at_crossings() {
        let c = segment_cuts(&[0.0, 0.0], &[1.0, 2.0], &[vec![0.5], vec![1.0, 3.0]]);
        assert_eq!(c, vec![0.0, 0.5, 1.0]);
        let c = segment_cuts(&[1.0], &[0.0], &[vec![0.25, 0.5]]);
        assert_eq!(c, vec![0.0, 0.5, 0.75, 1.0]);
    }
}
