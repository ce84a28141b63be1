//! Atomic and symbolic space-time measures.

mod sliced;
mod symbolic;

pub use sliced::{MeasureCurve, SymbolicSlices, TimeSlicedMeasure, MASS_TOL};
pub use symbolic::{Component, SpacePart, SymbolicMeasure, TimePart};

use crate::error::{Error, Result};
use crate::norm::{pairwise_sum, NormSpec};
use std::io::Write;

/// Finite list of space-time atoms with vector weights.
///
/// Atoms coming from a quadrature may carry the width `dt` of the time cell
/// they represent and a spatial `span`: the vector of the segment piece they
/// stand for. Both are optional metadata used by exact cell integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicVectorMeasure {
    dim: usize,
    m: usize,
    norm: NormSpec,
    t: Vec<f64>,
    dt: Vec<f64>,
    x: Vec<f64>,
    w: Vec<f64>,
    span: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct AtomRef<'a> {
    pub t: f64,
    pub dt: f64,
    pub x: &'a [f64],
    pub w: &'a [f64],
    pub span: Option<&'a [f64]>,
}

impl AtomicVectorMeasure {
    pub fn new(dim: usize, m: usize, norm: NormSpec) -> Self {
        Self {
            dim,
            m,
            norm,
            t: Vec::new(),
            dt: Vec::new(),
            x: Vec::new(),
            w: Vec::new(),
            span: Vec::new(),
        }
    }

    pub fn scalar(dim: usize) -> Self {
        Self::new(dim, 1, NormSpec::L2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight_dim(&self) -> usize {
        self.m
    }

    pub fn norm_spec(&self) -> NormSpec {
        self.norm
    }

    pub fn with_norm(mut self, norm: NormSpec) -> Self {
        self.norm = norm;
        self
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn has_spans(&self) -> bool {
        !self.span.is_empty()
    }

    pub fn push(&mut self, t: f64, x: &[f64], w: &[f64]) -> Result<()> {
        self.push_cell(t, 0.0, x, w, None)
    }

    pub fn push_cell(
        &mut self,
        t: f64,
        dt: f64,
        x: &[f64],
        w: &[f64],
        span: Option<&[f64]>,
    ) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if w.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                got: w.len(),
            });
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Invalid(format!("atom time {t} must be finite and >= 0")));
        }
        if w.iter().chain(x).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite atom coordinate or weight".into()));
        }
        if let Some(s) = span {
            if s.len() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    got: s.len(),
                });
            }
            if self.span.is_empty() {
                self.span = vec![0.0; self.len() * self.dim];
            }
            self.span.extend_from_slice(s);
        } else if !self.span.is_empty() {
            self.span.extend(std::iter::repeat_n(0.0, self.dim));
        }
        self.t.push(t);
        self.dt.push(dt.max(0.0));
        self.x.extend_from_slice(x);
        self.w.extend_from_slice(w);
        Ok(())
    }

    pub fn atom(&self, i: usize) -> AtomRef<'_> {
        let d = self.dim;
        let span = if self.span.is_empty() {
            None
        } else {
            let s = &self.span[i * d..(i + 1) * d];
            if s.iter().all(|v| *v == 0.0) {
                None
            } else {
                Some(s)
            }
        };
        AtomRef {
            t: self.t[i],
            dt: self.dt[i],
            x: &self.x[i * d..(i + 1) * d],
            w: &self.w[i * self.m..(i + 1) * self.m],
            span,
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.atom(i))
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn points(&self) -> &[f64] {
        &self.x
    }

    /// Mass of the atoms with t in the closed window, measured by the norm of each weight.
    pub fn total_variation(&self, window: Option<(f64, f64)>) -> f64 {
        let vals: Vec<f64> = self
            .atoms()
            .filter(|a| window.is_none_or(|(lo, hi)| a.t >= lo && a.t <= hi))
            .map(|a| self.norm.norm(a.w))
            .collect();
        pairwise_sum(&vals)
    }

    /// Sum of the weights (scalar measures) or of the first weight coordinate.
    pub fn mass(&self) -> f64 {
        let vals: Vec<f64> = self.atoms().map(|a| a.w[0]).collect();
        pairwise_sum(&vals)
    }

    /// Σ f(tᵢ, xᵢ)·wᵢ.
    pub fn pair<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(f64, &[f64]) -> Vec<f64>,
    {
        let mut vals = Vec::with_capacity(self.len());
        for a in self.atoms() {
            let v = f(a.t, a.x);
            if v.len() != self.m {
                return Err(Error::Dimension {
                    expected: self.m,
                    got: v.len(),
                });
            }
            vals.push(v.iter().zip(a.w).map(|(p, q)| p * q).sum::<f64>());
        }
        Ok(pairwise_sum(&vals))
    }

    /// Relocates atoms by `p`, keeping the weights.
    pub fn pushforward<F>(&self, p: F) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> (f64, Vec<f64>),
    {
        let mut out: Option<Self> = None;
        for a in self.atoms() {
            let (t, x) = p(a.t, a.x);
            let o = out.get_or_insert_with(|| Self::new(x.len(), self.m, self.norm));
            o.push(t, &x, a.w)?;
        }
        Ok(out.unwrap_or_else(|| Self::new(self.dim, self.m, self.norm)))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.w.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Weights multiplied atomwise by `lambda`.
    pub fn scaled_atomwise(&self, lambda: &[f64]) -> Result<Self> {
        if lambda.len() != self.len() {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        for (i, l) in lambda.iter().enumerate() {
            for v in &mut out.w[i * self.m..(i + 1) * self.m] {
                *v *= l;
            }
        }
        Ok(out)
    }

    pub fn extend(&mut self, other: &Self) -> Result<()> {
        if other.dim != self.dim || other.m != self.m {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        for a in other.atoms() {
            self.push_cell(a.t, a.dt, a.x, a.w, a.span)?;
        }
        Ok(())
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.extend(other)?;
        Ok(out)
    }

    pub fn filter(&self, keep: impl Fn(usize, AtomRef<'_>) -> bool) -> Self {
        let mut out = Self::new(self.dim, self.m, self.norm);
        for i in 0..self.len() {
            let a = self.atom(i);
            if keep(i, a) {
                out.push_cell(a.t, a.dt, a.x, a.w, a.span).expect("same layout");
            }
        }
        out
    }

    /// Bounding box of the atom locations: (t range, per-axis x ranges).
    pub fn bounds(&self) -> Option<((f64, f64), Vec<(f64, f64)>)> {
        if self.is_empty() {
            return None;
        }
        let mut tb = (f64::INFINITY, f64::NEG_INFINITY);
        let mut xb = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for a in self.atoms() {
            tb.0 = tb.0.min(a.t);
            tb.1 = tb.1.max(a.t);
            for (k, v) in a.x.iter().enumerate() {
                let mut lo = *v;
                let mut hi = *v;
                if let Some(s) = a.span {
                    lo = lo.min(v - 0.5 * s[k].abs());
                    hi = hi.max(v + 0.5 * s[k].abs());
                }
                xb[k].0 = xb[k].0.min(lo);
                xb[k].1 = xb[k].1.max(hi);
            }
        }
        Some((tb, xb))
    }

    /// CSV with columns t, x1..xd, w1..wm.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut head = vec!["t".to_string()];
        head.extend((1..=self.dim).map(|k| format!("x{k}")));
        head.extend((1..=self.m).map(|k| format!("w{k}")));
        writeln!(out, "{}", head.join(","))?;
        for a in self.atoms() {
            let mut row = vec![format!("{}", a.t)];
            row.extend(a.x.iter().map(|v| format!("{v}")));
            row.extend(a.w.iter().map(|v| format!("{v}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Splits ν into the atoms lying within `eps_loc` of some μ atom in (t, x)
/// and the rest. The mask marks the co-located atoms.
pub fn lebesgue_decompose(
    nu: &AtomicVectorMeasure,
    mu: &AtomicVectorMeasure,
    eps_loc: f64,
) -> Result<(AtomicVectorMeasure, AtomicVectorMeasure, Vec<bool>)> {
    if !(eps_loc > 0.0) {
        return Err(Error::Invalid("eps_loc must be positive".into()));
    }
    if nu.dim != mu.dim {
        return Err(Error::Dimension {
            expected: nu.dim,
            got: mu.dim,
        });
    }
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| mu.t[a].partial_cmp(&mu.t[b]).unwrap());
    let sorted_t: Vec<f64> = order.iter().map(|&i| mu.t[i]).collect();
    let r2 = eps_loc * eps_loc * (1.0 + 1e-12);
    let mask: Vec<bool> = nu
        .atoms()
        .map(|a| {
            let lo = sorted_t.partition_point(|&t| t < a.t - eps_loc);
            let hi = sorted_t.partition_point(|&t| t <= a.t + eps_loc);
            order[lo..hi].iter().any(|&j| {
                let b = mu.atom(j);
                if b.w.iter().all(|v| *v == 0.0) {
                    return false;
                }
                let mut d2 = (a.t - b.t) * (a.t - b.t);
                for (p, q) in a.x.iter().zip(b.x) {
                    d2 += (p - q) * (p - q);
                }
                d2 <= r2
            })
        })
        .collect();
    let ac = nu.filter(|i, _| mask[i]);
    let perp = nu.filter(|i, _| !mask[i]);
    Ok((ac, perp, mask))
}

/// ζ ≺ θ test on co-discretized measures; returns the answer and the
/// per-atom densities clamped to [0, 1].
pub fn submeasure_check(
    zeta: &AtomicVectorMeasure,
    theta: &AtomicVectorMeasure,
    tol: f64,
) -> Result<(bool, Vec<f64>)> {
    if zeta.len() != theta.len() || zeta.dim != theta.dim || zeta.m != theta.m {
        return Err(Error::GridMismatch);
    }
    let mut ok = true;
    let mut lambda = Vec::with_capacity(zeta.len());
    for i in 0..zeta.len() {
        let (z, th) = (zeta.atom(i), theta.atom(i));
        let same_place = (z.t - th.t).abs() <= 1e-12 * (1.0 + th.t.abs())
            && z
                .x
                .iter()
                .zip(th.x)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        if !same_place {
            return Err(Error::GridMismatch);
        }
        let tt: f64 = th.w.iter().map(|v| v * v).sum();
        let scale = tt.sqrt();
        if tt == 0.0 {
            let zn: f64 = z.w.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if zn > tol {
                ok = false;
            }
            lambda.push(0.0);
            continue;
        }
        let l = z.w.iter().zip(th.w).map(|(a, b)| a * b).sum::<f64>() / tt;
        let resid = z
            .w
            .iter()
            .zip(th.w)
            .map(|(a, b)| (a - l * b) * (a - l * b))
            .sum::<f64>()
            .sqrt();
        if resid > tol * scale.max(1.0) || l < -tol || l > 1.0 + tol {
            ok = false;
        }
        lambda.push(l.clamp(0.0, 1.0));
    }
    Ok((ok, lambda))
}
