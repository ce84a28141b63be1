use crate::error::{Error, Result};
use serde::Serialize;

/// Cardinal cubic B-spline on [0, 4] and its derivative.
pub fn bspline(u: f64) -> (f64, f64) {
    if !(0.0..4.0).contains(&u) {
        return (0.0, 0.0);
    }
    if u < 1.0 {
        (u * u * u / 6.0, 0.5 * u * u)
    } else if u < 2.0 {
        (
            (-3.0 * u * u * u + 12.0 * u * u - 12.0 * u + 4.0) / 6.0,
            (-9.0 * u * u + 24.0 * u - 12.0) / 6.0,
        )
    } else if u < 3.0 {
        (
            (3.0 * u * u * u - 24.0 * u * u + 60.0 * u - 44.0) / 6.0,
            (9.0 * u * u - 48.0 * u + 60.0) / 6.0,
        )
    } else {
        let r = 4.0 - u;
        (r * r * r / 6.0, -0.5 * r * r)
    }
}

/// Uniform knot grid on one axis.
#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub knots: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, knots: usize) -> Result<Self> {
        if !(lo < hi) || knots < 5 {
            return Err(Error::Invalid(format!("axis [{lo}, {hi}] with {knots} knots")));
        }
        Ok(Self { lo, hi, knots })
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.knots - 1) as f64
    }

    pub fn bumps(&self) -> usize {
        self.knots - 4
    }

    pub fn knot_values(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.knots).map(|k| self.lo + k as f64 * h).collect()
    }

    /// Active bumps at p as (index, value, derivative).
    fn active(&self, p: f64, out: &mut Vec<(usize, f64, f64)>) {
        out.clear();
        let h = self.h();
        let u = (p - self.lo) / h;
        if !(u >= 0.0 && u < (self.knots - 1) as f64) {
            return;
        }
        let base = u.floor() as isize;
        for j in (base - 3).max(0)..=base.min(self.bumps() as isize - 1) {
            let (v, d) = bspline(u - j as f64);
            if v != 0.0 || d != 0.0 {
                out.push((j as usize, v, d / h));
            }
        }
    }
}

/// Tensor products of cubic B-spline bumps, one factor per axis.
#[derive(Debug, Clone, Serialize)]
pub struct TestBasis {
    pub axes: Vec<Axis>,
}

impl TestBasis {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Invalid("basis needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    /// Same knot count on every axis of the box.
    pub fn uniform(bounds: &[(f64, f64)], knots: usize) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|&(lo, hi)| Axis::new(lo, hi, knots))
                .collect::<Result<_>>()?,
        )
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::bumps).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn breaks(&self) -> Vec<Vec<f64>> {
        self.axes.iter().map(Axis::knot_values).collect()
    }

    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        p.iter()
            .zip(&self.axes)
            .all(|(v, a)| *v >= a.lo - slack && *v <= a.hi + slack)
    }

    /// Per-axis indices of a flat basis index.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for a in (0..self.dims()).rev() {
            let n = self.axes[a].bumps();
            idx[a] = k % n;
            k /= n;
        }
        idx
    }

    /// Support box of basis function k.
    pub fn support(&self, k: usize) -> Vec<(f64, f64)> {
        self.multi_index(k)
            .iter()
            .zip(&self.axes)
            .map(|(&j, a)| (a.lo + j as f64 * a.h(), a.lo + (j + 4) as f64 * a.h()))
            .collect()
    }

    /// 1 + max|φ| + max‖∇φ‖ bound, the same for every member.
    pub fn c1_proxy(&self) -> f64 {
        let peak: f64 = 2.0 / 3.0;
        let vmax = peak.powi(self.dims() as i32);
        let g2: f64 = self
            .axes
            .iter()
            .map(|a| {
                let d = 0.5 / a.h() * peak.powi(self.dims() as i32 - 1);
                d * d
            })
            .sum();
        1.0 + vmax + g2.sqrt()
    }

    /// Calls f(k, value, gradient) for every basis function that is nonzero
    /// (or has nonzero gradient) at p.
    pub fn for_each_active(&self, p: &[f64], mut f: impl FnMut(usize, f64, &[f64])) {
        let d = self.dims();
        let mut act: Vec<Vec<(usize, f64, f64)>> = vec![Vec::with_capacity(4); d];
        for a in 0..d {
            self.axes[a].active(p[a], &mut act[a]);
            if act[a].is_empty() {
                return;
            }
        }
        let mut pos = vec![0usize; d];
        let mut grad = vec![0.0; d];
        loop {
            let mut k = 0;
            let mut val = 1.0;
            for a in 0..d {
                k = k * self.axes[a].bumps() + act[a][pos[a]].0;
                val *= act[a][pos[a]].1;
            }
            for (g, a) in grad.iter_mut().zip(0..d) {
                let mut v = act[a][pos[a]].2;
                for b in 0..d {
                    if b != a {
                        v *= act[b][pos[b]].1;
                    }
                }
                *g = v;
            }
            f(k, val, &grad);
            let mut a = d;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                pos[a] += 1;
                if pos[a] < act[a].len() {
                    break;
                }
                pos[a] = 0;
            }
        }
    }

    /// Value and gradient of basis function k at p.
    pub fn eval(&self, k: usize, p: &[f64]) -> (f64, Vec<f64>) {
        let mut out = (0.0, vec![0.0; self.dims()]);
        self.for_each_active(p, |j, v, g| {
            if j == k {
                out = (v, g.to_vec());
            }
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spline_partition_of_unity() {
        for i in 0..50 {
            let u = i as f64 / 50.0;
            let s: f64 = (0..4).map(|k| bspline(u + k as f64).0).sum();
            assert!((s - 1.0).abs() < 1e-14);
            let d: f64 = (0..4).map(|k| bspline(u + k as f64).1).sum();
            assert!(d.abs() < 1e-13);
        }
        assert!((bspline(2.0).0 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bspline(4.0), (0.0, 0.0));
    }

    #[test]
    fn counts_and_supports() {
        let b = TestBasis::uniform(&[(0.0, 1.0), (0.0, 2.0)], 16).unwrap();
        assert_eq!(b.len(), 144);
        let s = b.support(13);
        assert_eq!(b.multi_index(13), vec![1, 1]);
        assert!((s[0].0 - 1.0 / 15.0).abs() < 1e-15);
        assert!(s.iter().zip(&b.axes).all(|(r, a)| r.0 >= a.lo && r.1 <= a.hi + 1e-12));
    }

    proptest! {
        #[test]
        fn gradient_matches_difference(x in 0.05f64..0.95, y in 0.05f64..0.95, k in 0usize..144) {
            let b = TestBasis::uniform(&[(0.0, 1.0), (0.0, 1.0)], 16).unwrap();
            let h = 1e-6;
            let (_, g) = b.eval(k, &[x, y]);
            let fd = (b.eval(k, &[x + h, y]).0 - b.eval(k, &[x - h, y]).0) / (2.0 * h);
            prop_assert!((g[0] - fd).abs() < 1e-5);
            let fd = (b.eval(k, &[x, y + h]).0 - b.eval(k, &[x, y - h]).0) / (2.0 * h);
            prop_assert!((g[1] - fd).abs() < 1e-5);
        }
    }
}
