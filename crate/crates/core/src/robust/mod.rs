//! Entropic worst-case analysis: Kullback–Leibler divergence, the
//! exponential-tilting distortion, and the Hamiltonian with its modified and
//! no-uncertainty variants.
//!
//! All tilted sums are evaluated with the smallest weight `X_min` factored
//! out, so every exponent is `−a (X_m − X_min) ≤ 0`. Small `μ` then cannot
//! underflow the whole sum, and a degenerate population gives exactly zero
//! correction.

mod objective;

pub use objective::{Mortality, Mu, ObjectiveSpec, PiecewiseLinear, TerminalUtility};

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{input, parameter};
use crate::growth::{GrowthSpec, HeterogeneityDensity};
use crate::Result;

/// Growth model, heterogeneity density and objective bundled together.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub growth: GrowthSpec,
    pub density: HeterogeneityDensity,
    pub objective: ObjectiveSpec,
}

impl Model {
    /// Validates each part and the harvest-cap condition
    /// `α² K_hi / (4γ²) ≤ c̄`.
    pub fn new(growth: GrowthSpec, density: HeterogeneityDensity, objective: ObjectiveSpec) -> Result<Self> {
        growth.validate()?;
        objective.validate()?;
        let needed = objective.harvest_scale(growth.k_hi);
        if let Some(c_bar) = objective.c_bar {
            if c_bar < needed {
                return Err(parameter(format!(
                    "harvest cap {c_bar} is below alpha^2 K_hi / (4 gamma^2) = {needed}"
                )));
            }
        }
        Ok(Self {
            growth,
            density,
            objective,
        })
    }

    pub fn with_mu(&self, mu: Mu) -> Result<Self> {
        let mut objective = self.objective.clone();
        objective.mu = mu;
        Self::new(self.growth, self.density.clone(), objective)
    }

    pub fn harvest_cap(&self) -> f64 {
        self.objective.harvest_cap(self.growth.k_hi)
    }

    /// Lipschitz constant of the Hamiltonian in the gradient argument.
    pub fn lipschitz_constant(&self) -> f64 {
        self.objective.harvest_scale(self.growth.k_hi)
    }

    pub fn snapshot(&self, t: f64) -> Snapshot {
        Snapshot::new(&self.growth, &self.density, t)
    }
}

/// Body weights at the quadrature nodes for one instant, with the quadrature
/// masses. Built once per time level and reused for every gradient value.
#[derive(Debug, Clone)]
pub struct Snapshot {
    t: f64,
    weights: Vec<f64>,
    excess: Vec<f64>,
    masses: Vec<f64>,
    mass_total: f64,
    weight_min: f64,
}

impl Snapshot {
    pub fn new(growth: &GrowthSpec, density: &HeterogeneityDensity, t: f64) -> Self {
        let weights: Vec<f64> = density.quad().nodes().map(|u| growth.weight_unchecked(t, u)).collect();
        let masses: Vec<f64> = density.masses().collect();
        let weight_min = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let excess = weights.iter().map(|x| x - weight_min).collect();
        let mass_total = masses.iter().sum();
        Self {
            t,
            weights,
            excess,
            masses,
            mass_total,
            weight_min,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `X_t(u_m)` at each node.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Undistorted mean weight.
    pub fn mean(&self) -> f64 {
        let s: f64 = self.excess.iter().zip(&self.masses).map(|(d, w)| d * w).sum();
        self.weight_min + s / self.mass_total
    }

    /// Tilt rate `α² / (4μ(γ+z))` per gram, or `None` without uncertainty.
    #[inline]
    fn tilt(obj: &ObjectiveSpec, z: f64) -> Option<f64> {
        match obj.mu {
            Mu::Finite(mu) => Some(obj.alpha * obj.alpha / (4.0 * mu * (obj.gamma + z))),
            Mu::Infinite => None,
        }
    }

    /// Hamiltonian at gradient `z` (no clamping).
    #[inline]
    pub fn hamiltonian(&self, obj: &ObjectiveSpec, z: f64) -> f64 {
        let coef = obj.alpha * obj.alpha / (4.0 * (obj.gamma + z));
        match obj.mu {
            Mu::Infinite => coef * self.mean(),
            Mu::Finite(mu) => {
                let a = coef / mu;
                // Every exponent is ≤ 0, and exactly 0 when a d ≡ 0.
                let s: f64 = self
                    .excess
                    .iter()
                    .zip(&self.masses)
                    .map(|(d, w)| w * (-a * d).exp())
                    .sum();
                coef * self.weight_min - mu * (s / self.mass_total).ln()
            }
        }
    }

    /// Mean weight under the worst-case distortion at gradient `z`.
    pub fn tilted_mean(&self, obj: &ObjectiveSpec, z: f64) -> f64 {
        match Self::tilt(obj, z) {
            None => self.mean(),
            Some(a) => {
                let (mut num, mut den) = (0.0, 0.0);
                for (d, w) in self.excess.iter().zip(&self.masses) {
                    let e = w * (-a * d).exp();
                    num += d * e;
                    den += e;
                }
                self.weight_min + num / den
            }
        }
    }

    /// `∂H/∂z = −α² / (4(γ+z)²) · tilted mean`.
    pub fn hamiltonian_dz(&self, obj: &ObjectiveSpec, z: f64) -> f64 {
        let g = obj.gamma + z;
        -obj.alpha * obj.alpha / (4.0 * g * g) * self.tilted_mean(obj, z)
    }

    /// Optimal harvest rate `α² / (4(γ+z)²) · tilted mean`.
    pub fn harvest_rate(&self, obj: &ObjectiveSpec, z: f64) -> f64 {
        -self.hamiltonian_dz(obj, z)
    }

    /// Worst-case density ratio at each node, normalized so `Σ φ̂ p Δu = 1`.
    pub fn distortion(&self, obj: &ObjectiveSpec, z: f64) -> Vec<f64> {
        match Self::tilt(obj, z) {
            None => alloc::vec![1.0; self.weights.len()],
            Some(a) => {
                let e: Vec<f64> = self.excess.iter().map(|d| (-a * d).exp()).collect();
                let den: f64 = e.iter().zip(&self.masses).map(|(e, w)| e * w).sum();
                let scale = self.mass_total / den;
                e.into_iter().map(|e| e * scale).collect()
            }
        }
    }
}

/// Worst-case distortion samples and where they were evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionField {
    pub t: f64,
    pub z: f64,
    pub samples: Vec<f64>,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(input(format!("time must be finite and >= 0, got {t}")))
    }
}

fn check_gradient(z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(input(format!("gradient must be finite and >= 0, got {z}")))
    }
}

/// Kullback–Leibler divergence `Σ (φ ln φ − φ + 1) p Δu` with `0 ln 0 = 0`.
pub fn kl_divergence(phi: &[f64], density: &HeterogeneityDensity) -> Result<f64> {
    if phi.len() != density.quad().n_points() {
        return Err(input(format!(
            "expected {} samples, got {}",
            density.quad().n_points(),
            phi.len()
        )));
    }
    if let Some(bad) = phi.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(input(format!("distortion samples must be finite and >= 0, got {bad}")));
    }
    let norm: f64 = phi.iter().zip(density.masses()).map(|(f, w)| f * w).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(input(format!("distortion is not normalized: Σ φ p Δu = {norm}")));
    }
    Ok(phi
        .iter()
        .zip(density.masses())
        .map(|(&f, w)| {
            let f_ln_f = if f == 0.0 { 0.0 } else { f * f.ln() };
            (f_ln_f - f + 1.0) * w
        })
        .sum())
}

/// Exponential-tilting minimizer of the inner problem at `(t, z)`.
pub fn worst_case_distortion(model: &Model, t: f64, z: f64) -> Result<DistortionField> {
    check_time(t)?;
    check_gradient(z)?;
    let samples = model.snapshot(t).distortion(&model.objective, z);
    Ok(DistortionField { t, z, samples })
}

/// Entropic Hamiltonian `−μ ln Σ exp(−α² X / (4μ(γ+z))) p Δu` for `z ≥ 0`.
///
/// Dispatches to [`hamiltonian_limit`] when `μ` is infinite.
pub fn hamiltonian(model: &Model, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    check_gradient(z)?;
    Ok(model.snapshot(t).hamiltonian(&model.objective, z))
}

/// Hamiltonian with the gradient clamped at zero, defined for every real `z`.
pub fn hamiltonian_modified(model: &Model, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    if z.is_nan() {
        return Err(input("gradient is NaN"));
    }
    Ok(model.snapshot(t).hamiltonian(&model.objective, z.max(0.0)))
}

/// No-uncertainty Hamiltonian `α² / (4(γ + max{0,z})) · Σ X p Δu`.
pub fn hamiltonian_limit(model: &Model, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    if z.is_nan() {
        return Err(input("gradient is NaN"));
    }
    let obj = ObjectiveSpec {
        mu: Mu::Infinite,
        ..model.objective.clone()
    };
    Ok(model.snapshot(t).hamiltonian(&obj, z.max(0.0)))
}

/// Closed-form derivative of the Hamiltonian in `z`.
pub fn hamiltonian_dz(model: &Model, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    check_gradient(z)?;
    Ok(model.snapshot(t).hamiltonian_dz(&model.objective, z))
}

/// Pessimistic mean body weight `Σ X φ̂ p Δu`.
pub fn distorted_mean_weight(model: &Model, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    check_gradient(z)?;
    Ok(model.snapshot(t).tilted_mean(&model.objective, z))
}
