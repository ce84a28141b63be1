//! Exact W₁ between discrete probability measures and the W₁-variation of
//! measure curves.

use crate::error::{Error, Result};
use crate::measure::{AtomicVectorMeasure, MeasureCurve};
use crate::norm::{pairwise_sum, NormSpec};
use serde::Serialize;
use std::io::Write;

pub const MASS_MATCH_TOL: f64 = 1e-9;

/// Optimal coupling in sparse form, with the dual potentials that certify it.
#[derive(Debug, Clone, Serialize)]
pub struct TransportPlan {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub flows: Vec<f64>,
    /// Dual variables with f_i + g_j <= cost(i, j), tight on the plan.
    pub source_potential: Vec<f64>,
    pub target_potential: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationProfile {
    pub times: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl VariationProfile {
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,V")?;
        for (t, v) in self.times.iter().zip(&self.cumulative) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

fn check_probability_pair(a: &AtomicVectorMeasure, b: &AtomicVectorMeasure) -> Result<()> {
    if a.weight_dim() != 1 || b.weight_dim() != 1 {
        return Err(Error::Invalid("W1 needs scalar measures".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.weights().iter().chain(b.weights()).any(|w| *w < 0.0) {
        return Err(Error::Invalid("W1 needs positive measures".into()));
    }
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > MASS_MATCH_TOL {
        return Err(Error::MassMismatch(ma, mb));
    }
    Ok(())
}

/// W₁ on the line as ∫|F_a - F_b|, exact for step CDFs.
pub fn w1_1d(a: &AtomicVectorMeasure, b: &AtomicVectorMeasure) -> Result<f64> {
    check_probability_pair(a, b)?;
    if a.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: a.dim(),
        });
    }
    let mut ev: Vec<(f64, f64)> = a
        .points()
        .iter()
        .zip(a.weights())
        .map(|(x, w)| (*x, *w))
        .chain(b.points().iter().zip(b.weights()).map(|(x, w)| (*x, -*w)))
        .collect();
    ev.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut f = 0.0;
    let mut pieces = Vec::with_capacity(ev.len());
    for k in 0..ev.len() {
        f += ev[k].1;
        if k + 1 < ev.len() {
            pieces.push(f.abs() * (ev[k + 1].0 - ev[k].0));
        }
    }
    Ok(pairwise_sum(&pieces))
}

/// W₁ with cost ‖x - y‖ by successive shortest paths on the bipartite graph.
pub fn w1_lp(a: &AtomicVectorMeasure, b: &AtomicVectorMeasure, norm: NormSpec) -> Result<(f64, TransportPlan)> {
    check_probability_pair(a, b)?;
    let d = a.dim();
    let src: Vec<usize> = (0..a.len()).filter(|&i| a.weights()[i] > 0.0).collect();
    let dst: Vec<usize> = (0..b.len()).filter(|&j| b.weights()[j] > 0.0).collect();
    let (n, m) = (src.len(), dst.len());
    let cost: Vec<f64> = src
        .iter()
        .flat_map(|&i| dst.iter().map(move |&j| (i, j)))
        .map(|(i, j)| norm.dist(&a.points()[i * d..(i + 1) * d], &b.points()[j * d..(j + 1) * d]))
        .collect();
    let mut supply: Vec<f64> = src.iter().map(|&i| a.weights()[i]).collect();
    let mut demand: Vec<f64> = dst.iter().map(|&j| b.weights()[j]).collect();
    let scale = a.mass().max(b.mass()).max(1e-300);
    let zero = 1e-15 * scale;
    let mut flow = vec![0.0; n * m];
    // potentials: sources 0..n, sinks n..n+m; reduced cost c_ij + p_i - p_{n+j}
    let mut pot = vec![0.0; n + m];
    let mut guard = 0usize;
    loop {
        if !supply.iter().any(|s| *s > zero) || !demand.iter().any(|s| *s > zero) {
            break;
        }
        guard += 1;
        if guard > 4 * (n + m) * (n + m) + 16 {
            return Err(Error::Invalid("transport solver did not terminate".into()));
        }
        let v = n + m;
        let mut dist = vec![f64::INFINITY; v];
        let mut pred = vec![usize::MAX; v];
        let mut done = vec![false; v];
        for i in 0..n {
            if supply[i] > zero {
                dist[i] = 0.0;
            }
        }
        let mut target = usize::MAX;
        loop {
            let mut u = usize::MAX;
            for k in 0..v {
                if !done[k] && dist[k].is_finite() && (u == usize::MAX || dist[k] < dist[u]) {
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n && demand[u - n] > zero {
                target = u;
                break;
            }
            if u < n {
                for j in 0..m {
                    let w = n + j;
                    if done[w] {
                        continue;
                    }
                    let rc = (cost[u * m + j] + pot[u] - pot[w]).max(0.0);
                    if dist[u] + rc < dist[w] {
                        dist[w] = dist[u] + rc;
                        pred[w] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= 0.0 {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + pot[u] - pot[i]).max(0.0);
                    if dist[u] + rc < dist[i] {
                        dist[i] = dist[u] + rc;
                        pred[i] = u;
                    }
                }
            }
        }
        if target == usize::MAX {
            return Err(Error::Infeasible);
        }
        let dt = dist[target];
        for k in 0..v {
            pot[k] += dist[k].min(dt);
        }
        // bottleneck along the path
        let mut amount = demand[target - n];
        let mut w = target;
        while pred[w] != usize::MAX {
            let u = pred[w];
            if u >= n {
                amount = amount.min(flow[w * m + (u - n)]);
            }
            w = u;
        }
        amount = amount.min(supply[w]);
        let origin = w;
        let mut w = target;
        while pred[w] != usize::MAX {
            let u = pred[w];
            if u < n {
                flow[u * m + (w - n)] += amount;
            } else {
                let k = w * m + (u - n);
                flow[k] -= amount;
                if flow[k] <= zero {
                    flow[k] = 0.0;
                }
            }
            w = u;
        }
        supply[origin] -= amount;
        demand[target - n] -= amount;
    }
    let mut plan = TransportPlan {
        rows: Vec::new(),
        cols: Vec::new(),
        flows: Vec::new(),
        source_potential: vec![0.0; a.len()],
        target_potential: vec![0.0; b.len()],
    };
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let f = flow[i * m + j];
            if f > 0.0 {
                plan.rows.push(src[i]);
                plan.cols.push(dst[j]);
                plan.flows.push(f);
                terms.push(f * cost[i * m + j]);
            }
        }
    }
    for (k, &i) in src.iter().enumerate() {
        plan.source_potential[i] = -pot[k];
    }
    for (k, &j) in dst.iter().enumerate() {
        plan.target_potential[j] = pot[n + k];
    }
    Ok((pairwise_sum(&terms), plan))
}

/// W₁ in the measure's own norm; the line uses the CDF formula.
pub fn w1(a: &AtomicVectorMeasure, b: &AtomicVectorMeasure) -> Result<f64> {
    if a.dim() == 1 {
        w1_1d(a, b)
    } else {
        Ok(w1_lp(a, b, a.norm_spec())?.0)
    }
}

/// Cumulative W₁ distances along the uniform partition of [a, b] into n pieces.
pub fn var_w1_partition(curve: &dyn MeasureCurve, a: f64, b: f64, n: usize) -> Result<VariationProfile> {
    let (lo, hi) = curve.time_range();
    if !(a <= b) || a < lo || b > hi {
        return Err(Error::OutOfBounds(format!("[{a}, {b}] outside [{lo}, {hi}]")));
    }
    let n = n.max(1);
    let times: Vec<f64> = (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect();
    let mut cumulative = vec![0.0];
    let mut prev = curve.slice(times[0])?;
    for &t in &times[1..] {
        let next = curve.slice(t)?;
        let d = w1(&prev, &next)?;
        cumulative.push(cumulative.last().unwrap() + d);
        prev = next;
    }
    Ok(VariationProfile { times, cumulative })
}

pub const VARIATION_TOL: f64 = 1e-8;
pub const VARIATION_MAX_SLICES: usize = 1 << 14;

/// Dyadic refinement until the total changes by less than 1e-8 or 2¹⁴ slices.
pub fn var_w1(curve: &dyn MeasureCurve, a: f64, b: f64) -> Result<VariationProfile> {
    let mut n = 1;
    let mut cur = var_w1_partition(curve, a, b, n)?;
    while n < VARIATION_MAX_SLICES {
        n *= 2;
        let next = var_w1_partition(curve, a, b, n)?;
        let change = (next.total() - cur.total()).abs();
        cur = next;
        if change < VARIATION_TOL {
            break;
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::TimeSlicedMeasure;

    fn m1(pts: &[(f64, f64)]) -> AtomicVectorMeasure {
        let mut m = AtomicVectorMeasure::scalar(1);
        for &(x, w) in pts {
            m.push(0.0, &[x], &[w]).unwrap();
        }
        m
    }

    #[test]
    fn diracs() {
        assert_eq!(w1_1d(&m1(&[(0.0, 1.0)]), &m1(&[(1.0, 1.0)])).unwrap(), 1.0);
        let a = m1(&[(0.0, 0.5), (1.0, 0.5)]);
        assert_eq!(w1_1d(&a, &a).unwrap(), 0.0);
        assert_eq!(w1_lp(&a, &a, NormSpec::L2).unwrap().0, 0.0);
    }

    #[test]
    fn mass_mismatch_errors() {
        let r = w1_1d(&m1(&[(0.0, 1.0)]), &m1(&[(1.0, 0.5)]));
        assert!(matches!(r, Err(Error::MassMismatch(..))));
    }

    #[test]
    fn norms_on_diracs() {
        for norm in [NormSpec::L1, NormSpec::L2, NormSpec::Linf] {
            let mut a = AtomicVectorMeasure::scalar(2);
            a.push(0.0, &[0.0, 0.0], &[1.0]).unwrap();
            let mut b = AtomicVectorMeasure::scalar(2);
            b.push(0.0, &[3.0, -4.0], &[1.0]).unwrap();
            let (v, _) = w1_lp(&a, &b, norm).unwrap();
            assert_eq!(v, norm.norm(&[3.0, -4.0]));
        }
    }

    #[test]
    fn plan_marginals_and_duality() {
        let a = m1(&[(0.0, 0.3), (2.0, 0.7)]);
        let b = m1(&[(1.0, 0.6), (3.0, 0.4)]);
        let (v, p) = w1_lp(&a, &b, NormSpec::L2).unwrap();
        assert!((v - w1_1d(&a, &b).unwrap()).abs() < 1e-12);
        let dual: f64 = a.weights().iter().zip(&p.source_potential).map(|(w, f)| w * f).sum::<f64>()
            + b.weights().iter().zip(&p.target_potential).map(|(w, g)| w * g).sum::<f64>();
        assert!((dual - v).abs() < 1e-12);
        let mut rows = [0.0; 2];
        for (r, f) in p.rows.iter().zip(&p.flows) {
            rows[*r] += f;
        }
        assert!((rows[0] - 0.3).abs() < 1e-15 && (rows[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn two_slice_variation() {
        let c = TimeSlicedMeasure::new(vec![0.0, 0.5], vec![m1(&[(0.0, 1.0)]), m1(&[(2.0, 1.0)])]).unwrap();
        assert_eq!(var_w1(&c, 0.0, 0.5).unwrap().total(), 2.0);
        let flat = TimeSlicedMeasure::new(vec![0.0, 0.5], vec![m1(&[(0.0, 1.0)]), m1(&[(0.0, 1.0)])]).unwrap();
        assert_eq!(var_w1(&flat, 0.0, 0.5).unwrap().total(), 0.0);
    }
}
