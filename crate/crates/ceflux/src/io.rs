//! JSON files read and written by the command-line driver.

use crate::error::{Error, Result};
use crate::fixtures::ExampleFixture;
use crate::measure::SymbolicMeasure;
use crate::weak_form::{ce_cover, TestBasis};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A solution candidate (μ, ν) with its initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    pub mu: SymbolicMeasure,
    pub nu: SymbolicMeasure,
    pub mu0: SymbolicMeasure,
    pub horizon: f64,
}

impl PairFile {
    pub fn from_fixture(fx: &ExampleFixture) -> Self {
        Self {
            mu: fx.mu.clone(),
            nu: fx.nu.clone(),
            mu0: fx.mu0.clone(),
            horizon: fx.horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in [&self.mu, &self.nu, &self.mu0] {
            m.validate()?;
        }
        let d = self.mu.dim;
        if self.nu.dim != d || self.mu0.dim != d {
            return Err(Error::Dimension {
                expected: d,
                got: if self.nu.dim != d { self.nu.dim } else { self.mu0.dim },
            });
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Invalid("horizon must be positive".into()));
        }
        Ok(())
    }

    /// Uniform basis on the cover of coarse discretisations of all three parts.
    pub fn basis(&self, knots: usize) -> Result<TestBasis> {
        let (mu, nu, mu0) = (self.mu.discretize(4)?, self.nu.discretize(4)?, self.mu0.discretize(4)?);
        TestBasis::uniform(&ce_cover(&[&mu, &nu, &mu0], self.horizon)?, knots)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_pair(path: &Path) -> Result<PairFile> {
    let p: PairFile = read_json(path)?;
    p.validate()?;
    Ok(p)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}
