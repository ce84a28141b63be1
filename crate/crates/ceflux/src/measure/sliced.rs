use super::AtomicVectorMeasure;
use crate::error::{Error, Result};

/// Anything that yields a spatial probability slice μ_t at each time.
pub trait MeasureCurve {
    fn time_range(&self) -> (f64, f64);
    fn slice(&self, t: f64) -> Result<AtomicVectorMeasure>;
}

pub const MASS_TOL: f64 = 1e-9;

/// μ = ℒ¹ ⊗ μ_t with μ_t constant between consecutive grid times.
#[derive(Debug, Clone)]
pub struct TimeSlicedMeasure {
    times: Vec<f64>,
    slices: Vec<AtomicVectorMeasure>,
}

impl TimeSlicedMeasure {
    pub fn new(times: Vec<f64>, slices: Vec<AtomicVectorMeasure>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::Invalid("need one slice per time".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Invalid("times must start at 0".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("times must increase strictly".into()));
        }
        for s in &slices {
            if s.weight_dim() != 1 || s.weights().iter().any(|w| *w < 0.0) {
                return Err(Error::Invalid("slices must be positive scalar measures".into()));
            }
            let m = s.mass();
            if (m - 1.0).abs() > MASS_TOL {
                return Err(Error::MassMismatch(m, 1.0));
            }
        }
        Ok(Self { times, slices })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slices(&self) -> &[AtomicVectorMeasure] {
        &self.slices
    }

    /// Space-time atoms of ℒ¹ ⊗ μ_t on [0, horizon].
    pub fn to_atomic(&self, horizon: f64) -> Result<AtomicVectorMeasure> {
        let d = self.slices[0].dim();
        let mut out = AtomicVectorMeasure::scalar(d);
        for (k, s) in self.slices.iter().enumerate() {
            let a = self.times[k];
            let b = self.times.get(k + 1).copied().unwrap_or(horizon).min(horizon);
            if b <= a {
                continue;
            }
            for atom in s.atoms() {
                out.push_cell(0.5 * (a + b), b - a, atom.x, &[atom.w[0] * (b - a)], None)?;
            }
        }
        Ok(out)
    }
}

impl MeasureCurve for TimeSlicedMeasure {
    fn time_range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    fn slice(&self, t: f64) -> Result<AtomicVectorMeasure> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Err(Error::OutOfBounds(format!("time {t} before the first slice")));
        }
        Ok(self.slices[k - 1].clone())
    }
}

/// Slices of a symbolic measure, with segment parts split into `space_res` atoms.
pub struct SymbolicSlices<'a> {
    pub measure: &'a super::SymbolicMeasure,
    pub space_res: usize,
    pub range: (f64, f64),
}

impl MeasureCurve for SymbolicSlices<'_> {
    fn time_range(&self) -> (f64, f64) {
        self.range
    }

    fn slice(&self, t: f64) -> Result<AtomicVectorMeasure> {
        self.measure.time_slice(t, self.space_res)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(x: f64) -> AtomicVectorMeasure {
        let mut m = AtomicVectorMeasure::scalar(1);
        m.push(0.0, &[x], &[1.0]).unwrap();
        m
    }

    #[test]
    fn piecewise_constant_lookup() {
        let c = TimeSlicedMeasure::new(vec![0.0, 1.0], vec![dirac(0.0), dirac(2.0)]).unwrap();
        assert_eq!(c.slice(0.5).unwrap().atom(0).x[0], 0.0);
        assert_eq!(c.slice(1.0).unwrap().atom(0).x[0], 2.0);
        assert_eq!(c.to_atomic(3.0).unwrap().mass(), 3.0);
    }

    #[test]
    fn validation() {
        assert!(TimeSlicedMeasure::new(vec![0.5], vec![dirac(0.0)]).is_err());
        let mut half = AtomicVectorMeasure::scalar(1);
        half.push(0.0, &[0.0], &[0.5]).unwrap();
        assert!(TimeSlicedMeasure::new(vec![0.0], vec![half]).is_err());
        assert!(TimeSlicedMeasure::new(vec![0.0, 0.0], vec![dirac(0.0), dirac(1.0)]).is_err());
    }
}
