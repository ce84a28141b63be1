//! Lifting a solution to augmented phase space: mollified fields,
//! unit-norm autonomous velocities and their characteristic flows.

mod flow;
mod grid;
mod pipeline;
mod sigma;

pub use flow::{flow, reparam_roundtrip, FlowOptions, Trajectory};
pub use grid::{GridAxis, GridField};
pub use pipeline::{lift, LiftOptions, LiftReport};
pub use sigma::{augmented_basis, build_sigma, marginal_check, rescale_curve, tightness, Sigma};

use crate::error::{Error, Result};
use crate::measure::AtomicVectorMeasure;
use crate::norm::NormSpec;
use crate::superposition::FieldSampler;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Spatial reach of the grid beyond the data, in units of ε.
pub const GRID_REACH: f64 = 6.0;

/// Quartic bump 30u²(1-u)² on [0, 1].
pub fn time_kernel(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

pub fn time_kernel_cdf(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

fn gauss(r: f64, eps: f64) -> f64 {
    (-0.5 * (r / eps).powi(2)).exp() / (eps * (2.0 * std::f64::consts::PI).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct Mollified {
    pub mu: GridField,
    pub nu: GridField,
    /// κ¹_ε * μ₀ on the spatial axes.
    pub mu0: GridField,
    pub eps: f64,
    /// ε below the grid spacing.
    pub coarse_warning: bool,
}

/// Grid of the lift: spacing h in t and x, times [0, horizon].
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub h: f64,
    pub horizon: f64,
}

/// Time weight of one atom at node t: Dirac atoms use the kernel, cell
/// atoms its integral over the cell divided by the width.
fn time_weight(t: f64, tau: f64, dt: f64, eps: f64) -> f64 {
    if dt > 0.0 {
        let (a, b) = (tau - 0.5 * dt, tau + 0.5 * dt);
        (time_kernel_cdf((t - a) / eps) - time_kernel_cdf((t - b) / eps)) / dt
    } else {
        time_kernel((t - tau) / eps) / eps
    }
}

struct Sorted<'a> {
    m: &'a AtomicVectorMeasure,
    order: Vec<usize>,
    starts: Vec<f64>,
    max_dt: f64,
}

impl<'a> Sorted<'a> {
    fn new(m: &'a AtomicVectorMeasure) -> Self {
        let mut order: Vec<usize> = (0..m.len()).collect();
        let start = |i: usize| {
            let a = m.atom(i);
            a.t - 0.5 * a.dt
        };
        order.sort_by(|&i, &j| start(i).total_cmp(&start(j)));
        let starts = order.iter().map(|&i| start(i)).collect();
        let max_dt = m.atoms().map(|a| a.dt).fold(0.0, f64::max);
        Self { m, order, starts, max_dt }
    }

    /// Atoms whose time weight at t may be nonzero.
    fn window(&self, t: f64, eps: f64) -> &[usize] {
        let lo = self.starts.partition_point(|&s| s < t - eps - self.max_dt);
        let hi = self.starts.partition_point(|&s| s < t);
        &self.order[lo..hi]
    }
}

fn spatial_slice(axes: &[GridAxis], x: &[f64], eps: f64) -> Vec<Vec<f64>> {
    axes.iter()
        .zip(x)
        .map(|(a, y)| a.nodes().iter().map(|n| gauss(n - y, eps)).collect())
        .collect()
}

/// Adds w·Π gₐ over the spatial tensor grid into out (m values per node).
fn add_product(out: &mut [f64], g: &[Vec<f64>], w: &[f64]) {
    let m = w.len();
    let n: usize = g.iter().map(|v| v.len()).product();
    for j in 0..n {
        let mut rest = j;
        let mut f = 1.0;
        for ga in g.iter().rev() {
            f *= ga[rest % ga.len()];
            rest /= ga.len();
        }
        for c in 0..m {
            out[j * m + c] += f * w[c];
        }
    }
}

/// Space-time convolution of (μ, ν) with μ extended by μ₀ for t < 0.
pub fn mollify(
    mu: &AtomicVectorMeasure,
    nu: &AtomicVectorMeasure,
    mu0: &AtomicVectorMeasure,
    eps: f64,
    spec: GridSpec,
) -> Result<Mollified> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("eps must be positive".into()));
    }
    let d = mu.dim();
    if nu.dim() != d || mu0.dim() != d || nu.weight_dim() != d || mu.weight_dim() != 1 || mu0.weight_dim() != 1 {
        return Err(Error::Invalid("mollify expects scalar mu, mu0 and a d-vector nu over R^d".into()));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for m in [mu, nu, mu0] {
        if let Some((_, b)) = m.bounds() {
            for a in 0..d {
                lo[a] = lo[a].min(b[a].0);
                hi[a] = hi[a].max(b[a].1);
            }
        }
    }
    if lo[0].is_infinite() {
        return Err(Error::Invalid("nothing to mollify".into()));
    }
    let reach = GRID_REACH * eps;
    let mut axes = vec![GridAxis::covering(0.0, spec.horizon, spec.h)?];
    for a in 0..d {
        axes.push(GridAxis::covering(lo[a] - reach, hi[a] + reach, spec.h)?);
    }
    let space = axes[1..].to_vec();
    let per_slice: usize = space.iter().map(|a| a.n).product();
    let (smu, snu) = (Sorted::new(mu), Sorted::new(nu));

    let mut m0 = vec![0.0; per_slice];
    for a in mu0.atoms() {
        add_product(&mut m0, &spatial_slice(&space, a.x, eps), a.w);
    }
    let times = axes[0].nodes();
    let slices: Vec<(Vec<f64>, Vec<f64>)> = times
        .par_iter()
        .map(|&t| {
            let ext = 1.0 - time_kernel_cdf(t / eps);
            let mut mt: Vec<f64> = m0.iter().map(|v| ext * v).collect();
            let mut nt = vec![0.0; per_slice * d];
            for (sorted, out) in [(&smu, &mut mt), (&snu, &mut nt)] {
                for &i in sorted.window(t, eps) {
                    let a = sorted.m.atom(i);
                    let tw = time_weight(t, a.t, a.dt, eps);
                    if tw == 0.0 {
                        continue;
                    }
                    let w: Vec<f64> = a.w.iter().map(|v| v * tw).collect();
                    add_product(out, &spatial_slice(&space, a.x, eps), &w);
                }
            }
            (mt, nt)
        })
        .collect();
    let mut mug = GridField::zeros(axes.clone(), 1);
    let mut nug = GridField::zeros(axes.clone(), d);
    for (it, (mt, nt)) in slices.into_iter().enumerate() {
        mug.data[it * per_slice..(it + 1) * per_slice].copy_from_slice(&mt);
        nug.data[it * per_slice * d..(it + 1) * per_slice * d].copy_from_slice(&nt);
    }
    let mut space0 = vec![GridAxis { lo: 0.0, h: spec.h, n: 1 }];
    space0.extend(space);
    Ok(Mollified {
        mu: mug,
        nu: nug,
        mu0: GridField {
            axes: space0,
            m: 1,
            data: m0,
        },
        eps,
        coarse_warning: eps < spec.h,
    })
}

/// τ = 1/‖(1, w)‖ and v = τw on the grid of μ^ε.
#[derive(Debug, Clone, Serialize)]
pub struct VelocityField {
    pub tau: GridField,
    pub v: GridField,
    pub norm: NormSpec,
}

impl VelocityField {
    pub fn dim(&self) -> usize {
        self.v.m
    }

    /// max over nodes of |‖(τ, v)‖ - 1|.
    pub fn unit_norm_defect(&self) -> f64 {
        (0..self.tau.len())
            .map(|i| (self.norm.norm_with_head(self.tau.data[i], self.v.value(i)) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Box of the grid, time first.
    pub fn domain(&self) -> Vec<(f64, f64)> {
        self.tau.axes.iter().map(|a| (a.lo, a.hi())).collect()
    }
}

impl FieldSampler for VelocityField {
    fn sample(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut tau = [0.0];
        let mut v = vec![0.0; self.v.m];
        self.tau.interp(p, &mut tau);
        self.v.interp(p, &mut v);
        let n = self.norm.norm_with_head(tau[0], &v);
        (tau[0] / n, v.iter().map(|x| x / n).collect())
    }
}

pub fn velocity(mu_eps: &GridField, nu_eps: &GridField, norm: NormSpec) -> Result<VelocityField> {
    if mu_eps.axes != nu_eps.axes || mu_eps.m != 1 {
        return Err(Error::GridMismatch);
    }
    let d = nu_eps.m;
    let mut tau = GridField::zeros(mu_eps.axes.clone(), 1);
    let mut v = GridField::zeros(mu_eps.axes.clone(), d);
    for i in 0..mu_eps.len() {
        let m = mu_eps.data[i];
        if !(m > 0.0) {
            return Err(Error::NonPositive { node: i, value: m });
        }
        let w: Vec<f64> = nu_eps.value(i).iter().map(|n| n / m).collect();
        let t = 1.0 / norm.norm_with_head(1.0, &w);
        tau.data[i] = t;
        for c in 0..d {
            v.data[i * d + c] = t * w[c];
        }
    }
    Ok(VelocityField { tau, v, norm })
}

/// n stratified draws from κ¹_ε * μ₀: atoms are chosen systematically by
/// weight, then each coordinate takes the inverse normal CDF at stratified
/// levels, shuffled per axis beyond the first (Latin hypercube).
pub fn sample_starts(mu0: &AtomicVectorMeasure, eps: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let total = mu0.mass();
    if !(total > 0.0) || mu0.atoms().any(|a| a.w[0] < 0.0) {
        return Err(Error::Invalid("initial datum must be a positive measure".into()));
    }
    let normal = Normal::new(0.0, eps).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut counts = vec![0usize; mu0.len()];
    let mut cum = 0.0;
    let mut j = 0;
    for i in 0..n {
        let u = (i as f64 + 0.5) / n as f64 * total;
        while j + 1 < mu0.len() && cum + mu0.atom(j).w[0] <= u {
            cum += mu0.atom(j).w[0];
            j += 1;
        }
        counts[j] += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for (j, &c) in counts.iter().enumerate() {
        let a = mu0.atom(j);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(a.x.len());
        for axis in 0..a.x.len() {
            let mut lv: Vec<f64> = (0..c).map(|r| normal.inverse_cdf((r as f64 + 0.5) / c as f64)).collect();
            if axis > 0 {
                lv.shuffle(&mut rng);
            }
            cols.push(lv);
        }
        for r in 0..c {
            out.push(a.x.iter().enumerate().map(|(axis, x)| x + cols[axis][r]).collect());
        }
    }
    Ok(out)
}
