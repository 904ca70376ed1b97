//! Heterogeneous logistic growth, heterogeneity densities and the midpoint
//! quadrature every integral over `u ∈ [0, 1]` is taken with.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{input, parameter};
use crate::Result;

/// Uncertain logistic growth parameters.
///
/// Individuals are indexed by `u ∈ [0, 1]`; growth rate and maximum weight
/// are affine in `u`: `r(u) = r_lo + u (r_hi − r_lo)` and
/// `K(u) = k_lo + u (k_hi − k_lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSpec {
    /// Initial body weight (g).
    pub x: f64,
    /// Growth rate bounds (1/day).
    pub r_lo: f64,
    pub r_hi: f64,
    /// Maximum body weight bounds (g).
    pub k_lo: f64,
    pub k_hi: f64,
}

impl GrowthSpec {
    pub fn new(x: f64, r_lo: f64, r_hi: f64, k_lo: f64, k_hi: f64) -> Result<Self> {
        let spec = Self {
            x,
            r_lo,
            r_hi,
            k_lo,
            k_hi,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Constant growth rate, maximum weight uniform on `[k_lo, k_hi]`.
    pub fn with_uncertain_capacity(x: f64, r: f64, k_lo: f64, k_hi: f64) -> Result<Self> {
        Self::new(x, r, r, k_lo, k_hi)
    }

    /// 2021 season preset.
    pub fn year_2021() -> Self {
        Self {
            x: 6.8,
            r_lo: 0.040,
            r_hi: 0.040,
            k_lo: 8.0,
            k_hi: 205.0,
        }
    }

    /// 2022 season preset.
    pub fn year_2022() -> Self {
        Self {
            x: 12.8,
            r_lo: 0.027,
            r_hi: 0.027,
            k_lo: 53.0,
            k_hi: 149.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.x, self.r_lo, self.r_hi, self.k_lo, self.k_hi];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(parameter("growth parameters must be finite"));
        }
        if !(self.x > 0.0 && self.x <= self.k_lo) {
            return Err(parameter(format!(
                "initial weight must satisfy 0 < x <= k_lo (x = {}, k_lo = {})",
                self.x, self.k_lo
            )));
        }
        if !(self.r_lo > 0.0 && self.r_lo <= self.r_hi) {
            return Err(parameter("growth rates must satisfy 0 < r_lo <= r_hi"));
        }
        if !(self.k_lo > 0.0 && self.k_lo <= self.k_hi) {
            return Err(parameter("maximum weights must satisfy 0 < k_lo <= k_hi"));
        }
        Ok(())
    }

    #[inline]
    pub fn rate(&self, u: f64) -> f64 {
        self.r_lo + u * (self.r_hi - self.r_lo)
    }

    #[inline]
    pub fn capacity(&self, u: f64) -> f64 {
        self.k_lo + u * (self.k_hi - self.k_lo)
    }

    /// Logistic weight without domain checks; hot loops call this.
    #[inline]
    pub(crate) fn weight_unchecked(&self, t: f64, u: f64) -> f64 {
        let k = self.capacity(u);
        k / (1.0 + (k / self.x - 1.0) * (-self.rate(u) * t).exp())
    }
}

/// Body weight of individual `u` at time `t` (days).
pub fn weight(spec: &GrowthSpec, t: f64, u: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(input(format!("time must be finite and >= 0, got {t}")));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(input(format!("heterogeneity index must lie in [0, 1], got {u}")));
    }
    Ok(spec.weight_unchecked(t, u))
}

/// Midpoint quadrature on `[0, 1]` with nodes `(m − 0.5) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureGrid {
    n_points: usize,
}

impl QuadratureGrid {
    pub const DEFAULT_POINTS: usize = 150;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(parameter("quadrature needs at least one node"));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Uniform cell width `1 / n`.
    pub fn du(&self) -> f64 {
        1.0 / self.n_points as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        (m as f64 + 0.5) / self.n_points as f64
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |m| self.node(m))
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self {
            n_points: Self::DEFAULT_POINTS,
        }
    }
}

/// Shape of the baseline heterogeneity density `p(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    Uniform,
    /// `p(u) ∝ u^(a−1) (1−u)^(b−1)`, `a, b > 1`.
    Beta {
        a: f64,
        b: f64,
    },
}

/// Density values at the quadrature nodes, normalized discretely so that
/// `Σ p_m Δu = 1` on the grid they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneityDensity {
    kind: DensityKind,
    quad: QuadratureGrid,
    values: Vec<f64>,
}

impl HeterogeneityDensity {
    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn quad(&self) -> QuadratureGrid {
        self.quad
    }

    /// `p_m` at each node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Quadrature masses `p_m Δu`.
    pub fn masses(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let du = self.quad.du();
        self.values.iter().map(move |p| p * du)
    }

    /// `Σ f(u_m) p_m Δu`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let du = self.quad.du();
        self.quad.nodes().zip(&self.values).map(|(u, p)| f(u) * p * du).sum()
    }

    pub fn uniform(quad: QuadratureGrid) -> Self {
        density_weights(DensityKind::Uniform, quad).expect("uniform density is always valid")
    }
}

/// Builds discretely normalized density weights on `quad`.
pub fn density_weights(kind: DensityKind, quad: QuadratureGrid) -> Result<HeterogeneityDensity> {
    let raw: Vec<f64> = match kind {
        DensityKind::Uniform => alloc::vec![1.0; quad.n_points()],
        DensityKind::Beta { a, b } => {
            if !(a > 1.0 && b > 1.0 && a.is_finite() && b.is_finite()) {
                return Err(parameter(format!("beta density needs a, b > 1 (got a = {a}, b = {b})")));
            }
            quad.nodes()
                .map(|u| u.powf(a - 1.0) * (1.0 - u).powf(b - 1.0))
                .collect()
        }
    };
    let values = match kind {
        // The uniform weights are exactly one; no renormalization rounding.
        DensityKind::Uniform => raw,
        DensityKind::Beta { .. } => {
            let total: f64 = raw.iter().sum::<f64>() * quad.du();
            raw.into_iter().map(|v| v / total).collect()
        }
    };
    Ok(HeterogeneityDensity { kind, quad, values })
}

/// Population-averaged weight `Σ X_t(u_m) p_m Δu`.
pub fn mean_weight(spec: &GrowthSpec, density: &HeterogeneityDensity, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(input(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(density.integrate(|u| spec.weight_unchecked(t, u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weight_at_time_zero_is_initial_weight() {
        let spec = GrowthSpec::year_2021();
        assert_eq!(weight(&spec, 0.0, 0.37).unwrap(), 6.8);
    }

    #[test]
    fn weight_2022_mid_individual_day_120() {
        // Independent evaluation: 101 / (1 + (101/12.8 - 1) e^{-0.027*120}).
        let spec = GrowthSpec::year_2022();
        let w = weight(&spec, 120.0, 0.5).unwrap();
        assert_relative_eq!(w, 79.536_094_175_687_7, max_relative = 1e-12);
    }

    #[test]
    fn weight_saturates_at_capacity() {
        let spec = GrowthSpec::year_2022();
        let w = weight(&spec, 1e6, 1.0).unwrap();
        assert_relative_eq!(w, spec.k_hi, max_relative = 1e-9);
    }

    #[test]
    fn weight_rejects_out_of_domain() {
        let spec = GrowthSpec::year_2021();
        assert!(matches!(weight(&spec, -1.0, 0.5), Err(crate::Error::Input(_))));
        assert!(matches!(weight(&spec, 1.0, 1.5), Err(crate::Error::Input(_))));
        assert!(weight(&spec, f64::NAN, 0.5).is_err());
    }

    #[test]
    fn growth_spec_invariants() {
        assert!(GrowthSpec::new(10.0, 0.03, 0.03, 8.0, 100.0).is_err());
        assert!(GrowthSpec::new(5.0, 0.03, 0.02, 8.0, 100.0).is_err());
        assert!(GrowthSpec::new(5.0, 0.03, 0.03, 80.0, 10.0).is_err());
        assert!(GrowthSpec::new(5.0, 0.0, 0.03, 8.0, 100.0).is_err());
        assert!(GrowthSpec::year_2021().validate().is_ok());
        assert!(GrowthSpec::year_2022().validate().is_ok());
    }

    #[test]
    fn quadrature_nodes() {
        let q = QuadratureGrid::new(150).unwrap();
        let nodes: Vec<f64> = q.nodes().collect();
        assert_eq!(nodes.len(), 150);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(nodes.iter().all(|&u| u > 0.0 && u < 1.0));
        assert_relative_eq!(nodes[0], 0.5 / 150.0);
        let total: f64 = (0..150).map(|_| q.du()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        assert!(QuadratureGrid::new(0).is_err());
    }

    #[test]
    fn uniform_weights_are_one() {
        let d = density_weights(DensityKind::Uniform, QuadratureGrid::new(150).unwrap()).unwrap();
        assert!(d.values().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn beta_2_2_is_symmetric() {
        let q = QuadratureGrid::new(151).unwrap();
        let d = density_weights(DensityKind::Beta { a: 2.0, b: 2.0 }, q).unwrap();
        let v = d.values();
        for m in 0..v.len() {
            assert_relative_eq!(v[m], v[v.len() - 1 - m], max_relative = 1e-13);
        }
    }

    #[test]
    fn beta_2_5_mode_near_analytic() {
        let q = QuadratureGrid::new(300).unwrap();
        let d = density_weights(DensityKind::Beta { a: 2.0, b: 5.0 }, q).unwrap();
        let (argmax, _) = d
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (m, &p)| if p > acc.1 { (m, p) } else { acc });
        // (a - 1) / (a + b - 2)
        assert!((q.node(argmax) - 0.2).abs() <= q.du());
    }

    #[test]
    fn beta_rejects_small_shape() {
        let q = QuadratureGrid::default();
        assert!(density_weights(DensityKind::Beta { a: 1.0, b: 2.0 }, q).is_err());
        assert!(density_weights(DensityKind::Beta { a: 2.0, b: 0.5 }, q).is_err());
    }

    #[test]
    fn beta_discrete_normalization() {
        for n in [7, 150, 300] {
            let q = QuadratureGrid::new(n).unwrap();
            let d = density_weights(DensityKind::Beta { a: 5.0, b: 2.0 }, q).unwrap();
            assert!((d.masses().sum::<f64>() - 1.0).abs() <= 1e-14);
            assert!(d.values().iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn beta_mean_converges() {
        let err = |n| {
            let q = QuadratureGrid::new(n).unwrap();
            let d = density_weights(DensityKind::Beta { a: 2.0, b: 5.0 }, q).unwrap();
            (d.integrate(|u| u) - 2.0 / 7.0).abs()
        };
        let (e150, e300, e3000) = (err(150), err(300), err(3000));
        assert!(e150 > e300 && e300 > e3000, "{e150} {e300} {e3000}");
    }

    #[test]
    fn mean_weight_degenerate_capacity() {
        let spec = GrowthSpec::new(10.0, 0.03, 0.03, 100.0, 100.0).unwrap();
        let d = HeterogeneityDensity::uniform(QuadratureGrid::default());
        assert_relative_eq!(mean_weight(&spec, &d, 5000.0).unwrap(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn mean_weight_2021_limit_is_mid_capacity() {
        let d = HeterogeneityDensity::uniform(QuadratureGrid::default());
        let m = mean_weight(&GrowthSpec::year_2021(), &d, 1e6).unwrap();
        assert_relative_eq!(m, 106.5, max_relative = 1e-12);
    }

    #[test]
    fn mean_weight_matches_fine_quadrature() {
        let spec = GrowthSpec::year_2022();
        let d = HeterogeneityDensity::uniform(QuadratureGrid::default());
        let coarse = mean_weight(&spec, &d, 120.0).unwrap();
        // 1e4-point midpoint rule written out directly.
        let n = 10_000;
        let fine: f64 = (0..n)
            .map(|m| {
                let u = (m as f64 + 0.5) / n as f64;
                let k = 53.0 + u * 96.0;
                k / (1.0 + (k / 12.8 - 1.0) * (-0.027f64 * 120.0).exp())
            })
            .sum::<f64>()
            / n as f64;
        assert_relative_eq!(coarse, fine, max_relative = 1e-6);
    }

    #[test]
    fn constant_integrand_integrates_exactly() {
        for kind in [DensityKind::Uniform, DensityKind::Beta { a: 2.0, b: 5.0 }] {
            let d = density_weights(kind, QuadratureGrid::default()).unwrap();
            assert!((d.integrate(|_| 3.25) - 3.25).abs() <= 1e-14 * 3.25);
        }
    }
}
