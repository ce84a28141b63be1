use crate::error::{Error, Result};
use crate::superposition::FieldSampler;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub ds: f64,
    pub s_max: f64,
    /// Integration stops once T reaches this time.
    pub horizon: f64,
    /// Leaving this box (time first) truncates a trajectory.
    pub domain: Option<Vec<(f64, f64)>>,
}

/// Samples (s, T_s, Y_s) of one characteristic.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub s: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Unrounded time increment of each step; T itself loses increments
    /// below its ulp where τ is tiny.
    pub dt: Vec<f64>,
    pub truncated: bool,
    pub reached_horizon: bool,
}

impl Trajectory {
    pub fn start(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn end(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        for (s, y) in self.s.iter().zip(&self.states) {
            write!(out, "{s}")?;
            for v in y {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn deriv(field: &dyn FieldSampler, y: &[f64]) -> Vec<f64> {
    let (tau, v) = field.sample(y);
    let mut out = Vec::with_capacity(y.len());
    out.push(tau);
    out.extend(v);
    out
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One step; also returns the time increment before it is added to T.
fn rk4(field: &dyn FieldSampler, y: &[f64], h: f64) -> (Vec<f64>, f64) {
    let k1 = deriv(field, y);
    let k2 = deriv(field, &axpy(y, 0.5 * h, &k1));
    let k3 = deriv(field, &axpy(y, 0.5 * h, &k2));
    let k4 = deriv(field, &axpy(y, h, &k3));
    let inc: Vec<f64> = (0..y.len()).map(|i| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    let dt = inc[0];
    ((0..y.len()).map(|i| y[i] + inc[i]).collect(), dt)
}

fn inside(domain: &Option<Vec<(f64, f64)>>, y: &[f64]) -> bool {
    match domain {
        None => true,
        Some(b) => b.iter().zip(y).skip(1).all(|((lo, hi), x)| *x >= lo - 1e-12 && *x <= hi + 1e-12),
    }
}

fn one(field: &dyn FieldSampler, start: &[f64], o: &FlowOptions) -> Trajectory {
    let mut s = vec![0.0];
    let mut states = vec![start.to_vec()];
    let mut dts = Vec::new();
    let mut truncated = !inside(&o.domain, start);
    let mut reached = start[0] >= o.horizon;
    let steps = (o.s_max / o.ds).round() as usize;
    let mut i = 0;
    while !truncated && !reached && i < steps {
        let y = states.last().unwrap();
        let h = o.ds.min(o.s_max - s.last().unwrap());
        let (mut next, mut dt) = rk4(field, y, h);
        let mut sn = s.last().unwrap() + h;
        if next[0] >= o.horizon {
            // cut back linearly so the last state sits on the horizon
            let lam = if next[0] > y[0] { (o.horizon - y[0]) / (next[0] - y[0]) } else { 1.0 };
            next = y.iter().zip(&next).map(|(a, b)| a + lam * (b - a)).collect();
            next[0] = o.horizon;
            dt = o.horizon - y[0];
            sn = s.last().unwrap() + lam * h;
            reached = true;
        }
        if !inside(&o.domain, &next) {
            truncated = true;
            break;
        }
        s.push(sn);
        states.push(next);
        dts.push(dt);
        i += 1;
    }
    Trajectory {
        s,
        states,
        dt: dts,
        truncated,
        reached_horizon: reached,
    }
}

/// RK4 characteristics of y' = (τ, v)(y) from each start point (t, x).
pub fn flow(field: &dyn FieldSampler, starts: &[Vec<f64>], o: &FlowOptions) -> Result<Vec<Trajectory>> {
    if !(o.ds > 0.0) || !(o.s_max > 0.0) {
        return Err(Error::Invalid("ds and s_max must be positive".into()));
    }
    Ok(starts.par_iter().map(|p| one(field, p, o)).collect())
}

/// max |S(T_s) - s| with S(t) = ∫₀ᵗ 1/τ along the trajectory, integrated
/// per step by Simpson's rule on the cubic Hermite interpolant.
pub fn reparam_roundtrip(traj: &Trajectory, field: &dyn FieldSampler) -> f64 {
    let mut worst = 0.0f64;
    let mut acc = 0.0;
    let mut prev = deriv(field, &traj.states[0]);
    for i in 1..traj.states.len() {
        let h = traj.s[i] - traj.s[i - 1];
        let (y0, y1) = (&traj.states[i - 1], &traj.states[i]);
        let cur = deriv(field, y1);
        let mid: Vec<f64> = (0..y0.len())
            .map(|k| 0.5 * (y0[k] + y1[k]) + h * (prev[k] - cur[k]) / 8.0)
            .collect();
        let dt_mid = 1.5 * traj.dt[i - 1] / h - 0.25 * (prev[0] + cur[0]);
        let tau_mid = deriv(field, &mid)[0];
        let f = |dt: f64, tau: f64| if tau > 0.0 { dt / tau } else { 1.0 };
        acc += h / 6.0 * (f(prev[0], prev[0]) + 4.0 * f(dt_mid, tau_mid) + f(cur[0], cur[0]));
        worst = worst.max((acc - traj.s[i]).abs());
        prev = cur;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(ds: f64, s_max: f64) -> FlowOptions {
        FlowOptions {
            ds,
            s_max,
            horizon: f64::INFINITY,
            domain: None,
        }
    }

    #[test]
    fn constant_fields_are_exact() {
        let f = |_: &[f64]| (1.0, vec![0.0]);
        let tr = flow(&f, &[vec![0.0, 0.3]], &opts(0.1, 1.0)).unwrap();
        let end = tr[0].end();
        assert!((end[0] - 1.0).abs() < 1e-14 && end[1] == 0.3);
        assert!(reparam_roundtrip(&tr[0], &f) < 1e-12);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let g = move |_: &[f64]| (c, vec![c]);
        let tr = flow(&g, &[vec![0.0, 0.0]], &opts(0.01, 1.0)).unwrap();
        let e = tr[0].end();
        assert!((e[0] - e[1]).abs() < 1e-14);
        assert!(reparam_roundtrip(&tr[0], &g) < 1e-12);
    }

    #[test]
    fn fourth_order_on_rotation() {
        let f = |p: &[f64]| {
            let a = 0.8 * (p[0] + 0.5 * p[1]).sin();
            (a.cos(), vec![a.sin()])
        };
        let end = |ds: f64| flow(&f, &[vec![0.0, 0.1]], &opts(ds, 2.0)).unwrap()[0].end().to_vec();
        let (a, b, c) = (end(0.1), end(0.05), end(0.025));
        let e1 = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let e2 = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn horizon_and_domain_stop() {
        let f = |_: &[f64]| (0.6, vec![0.8]);
        let o = FlowOptions {
            ds: 0.1,
            s_max: 10.0,
            horizon: 0.9,
            domain: Some(vec![(0.0, 1.0), (-1.0, 5.0)]),
        };
        let tr = flow(&f, &[vec![0.0, 0.0], vec![0.0, 4.5]], &o).unwrap();
        assert!(tr[0].reached_horizon && !tr[0].truncated);
        assert!((tr[0].end()[0] - 0.9).abs() < 1e-15);
        assert!((tr[0].s.last().unwrap() - 1.5).abs() < 1e-12);
        assert!(tr[1].truncated);
        for w in tr[0].states.windows(2) {
            assert!(w[1][0] >= w[0][0]);
        }
    }

    #[test]
    fn zero_length_roundtrip() {
        let f = |_: &[f64]| (1.0, vec![0.0]);
        let t = Trajectory {
            s: vec![0.0],
            states: vec![vec![0.0, 0.0]],
            dt: vec![],
            truncated: false,
            reached_horizon: false,
        };
        assert_eq!(reparam_roundtrip(&t, &f), 0.0);
    }
}
