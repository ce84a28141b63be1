//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use ceflux::lp::{LinearProgram, Row};

/// Solves the square system a·x = b by partial pivoting; None if singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn dense_row(r: &Row, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(j, c) in &r.coeffs {
        v[j] += c;
    }
    v
}

/// Minimum of a box-bounded LP by enumerating every vertex: a set of
/// active row sides plus nonbasic variables at their bounds.
pub fn lp_vertex_min(lp: &LinearProgram) -> Option<f64> {
    let n = lp.objective.len();
    let m = lp.rows.len();
    let rows: Vec<Vec<f64>> = lp.rows.iter().map(|r| dense_row(r, n)).collect();
    let feasible = |x: &[f64]| {
        let tol = 1e-9;
        (0..n).all(|j| x[j] >= lp.lower[j] - tol && x[j] <= lp.upper[j] + tol)
            && lp.rows.iter().zip(&rows).all(|(r, a)| {
                let v: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
                v >= r.lo - tol && v <= r.hi + tol
            })
    };
    let mut best: Option<f64> = None;
    let patterns = 3usize.pow(m as u32);
    for pat in 0..patterns {
        let mut active = Vec::new();
        let mut p = pat;
        let mut ok = true;
        for i in 0..m {
            match p % 3 {
                1 if lp.rows[i].lo.is_finite() => active.push((i, lp.rows[i].lo)),
                2 if lp.rows[i].hi.is_finite() => active.push((i, lp.rows[i].hi)),
                0 => {}
                _ => ok = false,
            }
            p /= 3;
        }
        let k = active.len();
        if !ok || k > n {
            continue;
        }
        for basic in 0u32..(1 << n) {
            if basic.count_ones() as usize != k {
                continue;
            }
            let nb: Vec<usize> = (0..n).filter(|j| basic >> j & 1 == 0).collect();
            let bs: Vec<usize> = (0..n).filter(|j| basic >> j & 1 == 1).collect();
            for side in 0u32..(1 << nb.len()) {
                let mut x = vec![0.0; n];
                for (q, &j) in nb.iter().enumerate() {
                    x[j] = if side >> q & 1 == 1 { lp.upper[j] } else { lp.lower[j] };
                }
                if k > 0 {
                    let a: Vec<Vec<f64>> = active.iter().map(|&(i, _)| bs.iter().map(|&j| rows[i][j]).collect()).collect();
                    let b: Vec<f64> = active
                        .iter()
                        .map(|&(i, v)| v - nb.iter().map(|&j| rows[i][j] * x[j]).sum::<f64>())
                        .collect();
                    let Some(sol) = solve_dense(a, b) else { continue };
                    for (q, &j) in bs.iter().enumerate() {
                        x[j] = sol[q];
                    }
                }
                if feasible(&x) {
                    let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                    best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                }
            }
        }
    }
    best
}

/// W1 by enumerating all basic couplings of two discrete measures with
/// equal mass (spanning-tree supports of the transportation polytope).
pub fn w1_coupling_min(p: &[f64], q: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (p.len(), q.len());
    let cells = n * m;
    let size = n + m - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let mut sup = p.to_vec();
        let mut dem = q.to_vec();
        let mut open: Vec<(usize, usize)> = (0..cells).filter(|c| mask >> c & 1 == 1).map(|c| (c / m, c % m)).collect();
        let mut flow = vec![0.0; cells];
        let mut row_done = vec![false; n];
        let mut col_done = vec![false; m];
        let mut stuck = false;
        while !open.is_empty() {
            let mut progressed = false;
            for i in 0..n {
                if row_done[i] {
                    continue;
                }
                let mine: Vec<usize> = (0..open.len()).filter(|&k| open[k].0 == i).collect();
                if mine.len() == 1 {
                    let (r, c) = open.remove(mine[0]);
                    flow[r * m + c] = sup[r];
                    dem[c] -= sup[r];
                    sup[r] = 0.0;
                    row_done[r] = true;
                    progressed = true;
                    break;
                }
            }
            if progressed {
                continue;
            }
            for j in 0..m {
                if col_done[j] {
                    continue;
                }
                let mine: Vec<usize> = (0..open.len()).filter(|&k| open[k].1 == j).collect();
                if mine.len() == 1 {
                    let (r, c) = open.remove(mine[0]);
                    flow[r * m + c] = dem[c];
                    sup[r] -= dem[c];
                    dem[c] = 0.0;
                    col_done[c] = true;
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                stuck = true;
                break;
            }
        }
        if stuck || flow.iter().any(|f| *f < -1e-14) {
            continue;
        }
        if sup.iter().chain(&dem).any(|r| r.abs() > 1e-12) {
            continue;
        }
        let c: f64 = (0..cells).map(|k| flow[k] * cost[k / m][k % m]).sum();
        best = best.min(c);
    }
    best
}

/// ∫ |F - G| for weighted points on the line.
pub fn w1_cdf(xa: &[f64], pa: &[f64], xb: &[f64], pb: &[f64]) -> f64 {
    let mut ev: Vec<(f64, f64)> = xa.iter().zip(pa).map(|(x, p)| (*x, *p)).collect();
    ev.extend(xb.iter().zip(pb).map(|(x, p)| (*x, -*p)));
    ev.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for k in 0..ev.len() {
        diff += ev[k].1;
        if k + 1 < ev.len() {
            total += diff.abs() * (ev[k + 1].0 - ev[k].0);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracles_on_tiny_cases() {
        assert_eq!(w1_cdf(&[0.0], &[1.0], &[2.5], &[1.0]), 2.5);
        let c = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(w1_coupling_min(&[0.5, 0.5], &[0.5, 0.5], &c), 0.0);
        let lp = LinearProgram {
            objective: vec![-1.0, -1.0],
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            rows: vec![Row {
                coeffs: vec![(0, 1.0), (1, 1.0)],
                lo: f64::NEG_INFINITY,
                hi: 1.5,
            }],
        };
        assert!((lp_vertex_min(&lp).unwrap() + 1.5).abs() < 1e-12);
    }
}
