use crate::error::{Error, Result};
use crate::measure::AtomicVectorMeasure;
use crate::norm::NormSpec;
use serde::Serialize;

/// Uniform nodes lo + i·h for i < n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridAxis {
    pub lo: f64,
    pub h: f64,
    pub n: usize,
}

impl GridAxis {
    /// Smallest uniform axis with spacing h covering [lo, hi].
    pub fn covering(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(hi >= lo) {
            return Err(Error::Invalid(format!("bad grid axis [{lo}, {hi}] with h = {h}")));
        }
        let n = ((hi - lo) / h - 1e-9).ceil().max(0.0) as usize + 1;
        Ok(Self { lo, h, n })
    }

    pub fn hi(&self) -> f64 {
        self.lo + (self.n - 1) as f64 * self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    fn trapezoid(&self, i: usize) -> f64 {
        if self.n == 1 {
            1.0
        } else if i == 0 || i + 1 == self.n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Cell index and fraction, clamped to the axis.
    fn locate(&self, x: f64) -> (usize, f64) {
        if self.n == 1 {
            return (0, 0.0);
        }
        let u = ((x - self.lo) / self.h).clamp(0.0, (self.n - 1) as f64);
        let i = (u.floor() as usize).min(self.n - 2);
        (i, u - i as f64)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi() + slack
    }
}

/// Samples on a tensor grid over (t, x), m values per node, last axis
/// fastest.
#[derive(Debug, Clone, Serialize)]
pub struct GridField {
    pub axes: Vec<GridAxis>,
    pub m: usize,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn zeros(axes: Vec<GridAxis>, m: usize) -> Self {
        let n: usize = axes.iter().map(|a| a.n).product();
        Self {
            axes,
            m,
            data: vec![0.0; n * m],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.data[node * self.m..(node + 1) * self.m]
    }

    pub fn coords(&self, mut node: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (a, ax) in self.axes.iter().enumerate().rev() {
            out[a] = ax.node(node % ax.n);
            node /= ax.n;
        }
        out
    }

    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        self.axes.iter().zip(p).all(|(a, x)| a.contains(*x, slack))
    }

    /// Multilinear interpolation with coordinates clamped to the grid.
    pub fn interp(&self, p: &[f64], out: &mut [f64]) {
        let dims = self.axes.len();
        let loc: Vec<(usize, f64)> = self.axes.iter().zip(p).map(|(a, x)| a.locate(*x)).collect();
        out.iter_mut().for_each(|v| *v = 0.0);
        for corner in 0..(1usize << dims) {
            let mut w = 1.0;
            let mut idx = 0;
            for (a, ax) in self.axes.iter().enumerate() {
                let (i, f) = loc[a];
                let up = (corner >> (dims - 1 - a)) & 1 == 1;
                if up && ax.n == 1 {
                    w = 0.0;
                    break;
                }
                w *= if up { f } else { 1.0 - f };
                idx = idx * ax.n + i + up as usize;
            }
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.value(idx)) {
                *o += w * v;
            }
        }
    }

    /// Trapezoid quadrature atoms over the whole grid, t in the time slot.
    pub fn to_measure(&self) -> AtomicVectorMeasure {
        let d = self.axes.len() - 1;
        let mut m = AtomicVectorMeasure::new(d, self.m, NormSpec::L2);
        for node in 0..self.len() {
            let c = self.coords(node);
            let mut rest = node;
            let mut vol = 1.0;
            for ax in self.axes.iter().rev() {
                vol *= ax.trapezoid(rest % ax.n);
                rest /= ax.n;
            }
            let w: Vec<f64> = self.value(node).iter().map(|v| v * vol).collect();
            if w.iter().any(|v| *v != 0.0) {
                m.push(c[0].max(0.0), &c[1..], &w).expect("finite grid values");
            }
        }
        m
    }

    /// Spatial trapezoid integral of each time slice, per component.
    pub fn slice_masses(&self) -> Vec<Vec<f64>> {
        let per_slice = self.len() / self.axes[0].n;
        (0..self.axes[0].n)
            .map(|it| {
                let mut acc = vec![0.0; self.m];
                for j in 0..per_slice {
                    let node = it * per_slice + j;
                    let mut rest = j;
                    let mut vol = 1.0;
                    for ax in self.axes[1..].iter().rev() {
                        vol *= ax.trapezoid(rest % ax.n);
                        rest /= ax.n;
                    }
                    for (a, v) in acc.iter_mut().zip(self.value(node)) {
                        *a += v * vol;
                    }
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_is_exact_on_affine_data() {
        let axes = vec![GridAxis::covering(0.0, 1.0, 0.25).unwrap(), GridAxis::covering(-1.0, 1.0, 0.5).unwrap()];
        let mut g = GridField::zeros(axes, 1);
        for node in 0..g.len() {
            let c = g.coords(node);
            g.data[node] = 2.0 * c[0] - c[1] + 0.5;
        }
        let mut out = [0.0];
        g.interp(&[0.33, 0.71], &mut out);
        assert!((out[0] - (0.66 - 0.71 + 0.5)).abs() < 1e-14);
        g.interp(&[5.0, -9.0], &mut out);
        assert!((out[0] - (2.0 + 1.0 + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn covering_axis_reaches_the_end() {
        let a = GridAxis::covering(0.0, 2.0, 0.01).unwrap();
        assert_eq!(a.n, 201);
        assert!((a.hi() - 2.0).abs() < 1e-12);
        let b = GridAxis::covering(0.0, 0.305, 0.1).unwrap();
        assert!(b.hi() >= 0.305);
    }

    #[test]
    fn trapezoid_mass_of_constant() {
        let axes = vec![GridAxis::covering(0.0, 1.0, 0.1).unwrap(), GridAxis::covering(0.0, 2.0, 0.1).unwrap()];
        let mut g = GridField::zeros(axes, 1);
        g.data.iter_mut().for_each(|v| *v = 1.0);
        assert!((g.to_measure().mass() - 2.0).abs() < 1e-12);
        assert!(g.slice_masses().iter().all(|m| (m[0] - 2.0).abs() < 1e-12));
    }
}
