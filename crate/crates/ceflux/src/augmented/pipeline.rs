use super::{
    augmented_basis, build_sigma, flow, marginal_check, mollify, reparam_roundtrip, sample_starts, tightness, velocity,
    FlowOptions, GridSpec, Trajectory,
};
use crate::error::Result;
use crate::measure::AtomicVectorMeasure;
use crate::norm::NormSpec;
use crate::weak_form::{augmented_residual, ce_cover, TestBasis};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct LiftOptions {
    pub eps: f64,
    pub h: f64,
    pub ds: f64,
    pub s_max: f64,
    pub starts: usize,
    pub seed: u64,
    pub knots: usize,
    /// The tightness window {s > tight_s, t ≤ tight_t}.
    pub tight_t: f64,
    pub tight_s: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            eps: 0.05,
            h: 0.01,
            ds: 1e-3,
            s_max: 4.0,
            starts: 400,
            seed: 42,
            knots: 16,
            tight_t: 0.3,
            tight_s: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub unit_norm_defect: f64,
    /// Largest basis deviation of π♯σ⁰, π♯σ̄ from μ^ε, ν^ε.
    pub marginal: f64,
    /// Largest |S(T̂(s)) - s| over the trajectories.
    pub inversion: f64,
    pub tight_mass: f64,
    pub tight_bound: f64,
    /// max_abs of the augmented continuity residual.
    pub augmented: f64,
    pub truncated: usize,
    pub reached_horizon: usize,
    pub coarse_warning: bool,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

/// Mollify, normalise, integrate the characteristics from stratified
/// starts and check the lifted measures.
pub fn lift(
    mu: &AtomicVectorMeasure,
    nu: &AtomicVectorMeasure,
    mu0: &AtomicVectorMeasure,
    horizon: f64,
    norm: NormSpec,
    o: &LiftOptions,
) -> Result<LiftReport> {
    let mol = mollify(mu, nu, mu0, o.eps, GridSpec { h: o.h, horizon })?;
    let field = velocity(&mol.mu, &mol.nu, norm)?;
    let starts: Vec<Vec<f64>> = sample_starts(mu0, o.eps, o.starts, o.seed)?
        .into_iter()
        .map(|x| std::iter::once(0.0).chain(x).collect())
        .collect();
    let trajs = flow(
        &field,
        &starts,
        &FlowOptions {
            ds: o.ds,
            s_max: o.s_max,
            horizon,
            domain: Some(field.domain()),
        },
    )?;
    let inversion = trajs.iter().map(|t| reparam_roundtrip(t, &field)).fold(0.0, f64::max);
    let weights = vec![1.0 / trajs.len() as f64; trajs.len()];
    let sig = build_sigma(&trajs, &weights, &field)?;

    let mu_eps = mol.mu.to_measure();
    let basis_tx = TestBasis::uniform(&ce_cover(&[&mu_eps], horizon)?, o.knots)?;
    let marginal = marginal_check(&sig, &mol, &basis_tx, f64::INFINITY)?.max_abs;

    let window = Some((0.0, o.tight_t));
    let tight_bound = o.tight_t / o.tight_s * (mu.total_variation(window) + nu.total_variation(window));
    let tight_mass = tightness(&sig.sigma0, o.tight_s, o.tight_t);

    let basis = augmented_basis(&sig, o.s_max, horizon, o.knots)?;
    let augmented =
        augmented_residual(&sig.sigma, &sig.sigma0, &sig.sigma_vec, &sig.start, &basis, f64::INFINITY)?.max_abs;

    Ok(LiftReport {
        unit_norm_defect: field.unit_norm_defect(),
        marginal,
        inversion,
        tight_mass,
        tight_bound,
        augmented,
        truncated: trajs.iter().filter(|t| t.truncated).count(),
        reached_horizon: trajs.iter().filter(|t| t.reached_horizon).count(),
        coarse_warning: mol.coarse_warning,
        trajectories: trajs,
    })
}
