//! Optimal harvesting rates read off a solved value field, and controlled
//! population paths integrated on the solver clock.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::input;
use crate::robust::{DistortionField, Model, Snapshot};
use crate::solver::{SolveGrid, ValueField};
use crate::Result;

/// Backward difference `max{0, (Φ_{i,j} − Φ_{i,j−1})/Δn}` on the cell
/// `(j−1)Δn < n ≤ jΔn`.
pub fn gradient_n(field: &ValueField, i: usize, n: f64) -> Result<f64> {
    let g = field.grid();
    if i > g.time_steps() {
        return Err(input(format!("time index {i} beyond {}", g.time_steps())));
    }
    row_gradient(g, field.row(i), n)
}

/// [`gradient_n`] on a single time level, e.g. one captured during [`crate::sweep`].
pub fn row_gradient(grid: &SolveGrid, row: &[f64], n: f64) -> Result<f64> {
    if row.len() != grid.pop_steps() + 1 {
        return Err(input(format!(
            "row has {} values, grid needs {}",
            row.len(),
            grid.pop_steps() + 1
        )));
    }
    if !(n > 0.0 && n <= grid.pop_max()) {
        return Err(input(format!("population {n} outside (0, {}]", grid.pop_max())));
    }
    let j = cell_of(grid, n);
    Ok(((row[j] - row[j - 1]) / grid.dn()).max(0.0))
}

fn cell_of(g: &SolveGrid, n: f64) -> usize {
    let steps = g.pop_steps();
    let guess = (n / g.dn()).ceil();
    let mut j = if guess < 1.0 {
        1
    } else {
        (guess as usize).clamp(1, steps)
    };
    while j > 1 && n <= g.pop(j - 1) {
        j -= 1;
    }
    while j < steps && n > g.pop(j) {
        j += 1;
    }
    j
}

fn clamped_difference(field: &ValueField, i: usize, j: usize) -> f64 {
    field.difference(i, j).max(0.0)
}

/// Optimal harvest rate `α² / (4(γ+z)²) · Σ X φ̂ p Δu` at gradient `z ≥ 0`.
pub fn optimal_harvest(model: &Model, t: f64, z: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(input(format!("time must be finite and >= 0, got {t}")));
    }
    if !(z >= 0.0 && z.is_finite()) {
        return Err(input(format!("gradient must be finite and >= 0, got {z}")));
    }
    Ok(model.snapshot(t).harvest_rate(&model.objective, z))
}

/// Everything the policy says about one state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyQuery {
    pub harvest: f64,
    pub gradient: f64,
    pub distortion: DistortionField,
    pub distorted_mean: f64,
}

/// Policy at time level `i` and population `n > 0`.
pub fn query(field: &ValueField, i: usize, n: f64) -> Result<PolicyQuery> {
    let z = gradient_n(field, i, n)?;
    let model = field.model();
    let t = field.grid().time(i);
    let snap = model.snapshot(t);
    let obj = &model.objective;
    Ok(PolicyQuery {
        harvest: snap.harvest_rate(obj, z),
        gradient: z,
        distortion: DistortionField {
            t,
            z,
            samples: snap.distortion(obj, z),
        },
        distorted_mean: snap.tilted_mean(obj, z),
    })
}

/// Visits `(i, j, z, c*)` at every node of the field, level by level.
///
/// At `j = 0` the gradient of the first cell is reported.
pub fn visit_policy(field: &ValueField, mut visit: impl FnMut(usize, usize, f64, f64)) {
    let g = field.grid();
    let obj = &field.model().objective;
    for i in 0..=g.time_steps() {
        let snap = field.model().snapshot(g.time(i));
        let mut last = (f64::NAN, 0.0);
        for j in 0..=g.pop_steps() {
            let z = clamped_difference(field, i, j.max(1));
            if z != last.0 {
                last = (z, snap.harvest_rate(obj, z));
            }
            visit(i, j, z, last.1);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub n: f64,
    /// Harvest rate applied at this state.
    pub c: f64,
    pub z: f64,
    /// Distorted mean body weight at `(t, z)`.
    pub xbar: f64,
}

/// Controlled path sampled at every solver time level, in increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub direction: Direction,
    /// Set when a backward path left `[0, M]` and was cut short.
    pub truncated: bool,
}

impl Trajectory {
    pub fn first(&self) -> Option<&TrajectorySample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }
}

fn check_start(field: &ValueField, n: f64) -> Result<()> {
    let m = field.grid().pop_max();
    if n >= 0.0 && n <= m {
        Ok(())
    } else {
        Err(input(format!("population {n} outside [0, {m}]")))
    }
}

/// State at level `i`: extinct populations are not harvested.
fn sample(field: &ValueField, snap: &Snapshot, i: usize, n: f64) -> TrajectorySample {
    let obj = &field.model().objective;
    let z = if n > 0.0 {
        clamped_difference(field, i, cell_of(field.grid(), n))
    } else {
        0.0
    };
    let c = if n > 0.0 { snap.harvest_rate(obj, z) } else { 0.0 };
    TrajectorySample {
        t: field.grid().time(i),
        n,
        c,
        z,
        xbar: snap.tilted_mean(obj, z),
    }
}

/// Explicit Euler on the reversed dynamics from `n(t1) = n_T`:
/// `n_i = n_{i+1} + Δt (R(n_{i+1}) n_{i+1} + c*_{i+1})`.
pub fn integrate_backward(field: &ValueField, n_terminal: f64) -> Result<Trajectory> {
    check_start(field, n_terminal)?;
    let g = field.grid();
    let model = field.model();
    let dt = g.dt();
    let mut samples = Vec::with_capacity(g.time_steps() + 1);
    let mut truncated = false;
    let mut n = n_terminal;
    for i in (0..=g.time_steps()).rev() {
        let s = sample(field, &model.snapshot(g.time(i)), i, n);
        samples.push(s);
        if i == 0 {
            break;
        }
        n = s.n + dt * (model.objective.mortality.eval(s.n) * s.n + s.c);
        if n > g.pop_max() {
            truncated = true;
            break;
        }
    }
    samples.reverse();
    Ok(Trajectory {
        samples,
        direction: Direction::Backward,
        truncated,
    })
}

/// Explicit Euler forward from `n(t0) = n_0`, absorbed at zero.
pub fn integrate_forward(field: &ValueField, n_initial: f64) -> Result<Trajectory> {
    check_start(field, n_initial)?;
    let g = field.grid();
    let model = field.model();
    let dt = g.dt();
    let mut samples = Vec::with_capacity(g.time_steps() + 1);
    let mut n = n_initial;
    for i in 0..=g.time_steps() {
        let s = sample(field, &model.snapshot(g.time(i)), i, n);
        samples.push(s);
        n = (s.n - dt * (model.objective.mortality.eval(s.n) * s.n + s.c)).max(0.0);
    }
    Ok(Trajectory {
        samples,
        direction: Direction::Forward,
        truncated: false,
    })
}

/// Distorted mean weight along a recorded path under `model`, which may
/// differ from the model that produced the path (e.g. another `μ`).
pub fn distorted_weight_path(model: &Model, trajectory: &Trajectory) -> Result<Vec<f64>> {
    trajectory
        .samples
        .iter()
        .map(|s| crate::robust::distorted_mean_weight(model, s.t, s.z))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::{mean_weight, GrowthSpec, HeterogeneityDensity, QuadratureGrid};
    use crate::robust::{Mu, ObjectiveSpec};
    use crate::solver::{solve, SolveGrid, SolveOptions};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn model(growth: GrowthSpec, objective: ObjectiveSpec) -> Model {
        Model::new(
            growth,
            HeterogeneityDensity::uniform(QuadratureGrid::default()),
            objective,
        )
        .unwrap()
    }

    fn no_harvest() -> Model {
        let o = ObjectiveSpec {
            alpha: 0.0,
            ..ObjectiveSpec::baseline()
        };
        model(GrowthSpec::year_2021(), o)
    }

    fn field_from(f: impl Fn(f64, f64) -> f64) -> ValueField {
        let m = model(GrowthSpec::year_2022(), ObjectiveSpec::baseline());
        let g = SolveGrid::new(61.0, 181.0, 4, 10, 10.0).unwrap();
        let mut v = vec![];
        for i in 0..=4 {
            for j in 0..=10 {
                v.push(f(g.time(i), g.pop(j)));
            }
        }
        ValueField::from_values(m, g, v).unwrap()
    }

    #[test]
    fn gradient_of_affine_field() {
        let f = field_from(|_, n| 2.5 * n);
        for n in [0.3, 1.0, 4.7, 10.0] {
            assert_relative_eq!(gradient_n(&f, 2, n).unwrap(), 2.5, max_relative = 1e-12);
        }
        let c = field_from(|_, _| 7.0);
        assert_eq!(gradient_n(&c, 0, 3.3).unwrap(), 0.0);
        let dec = field_from(|_, n| -n);
        assert_eq!(gradient_n(&dec, 0, 3.3).unwrap(), 0.0);
    }

    #[test]
    fn gradient_uses_left_closed_cells() {
        let f = field_from(|_, n| n * n);
        // n = 2 lies in (1, 2]: (4 − 1) / 1
        assert_relative_eq!(gradient_n(&f, 1, 2.0).unwrap(), 3.0, max_relative = 1e-12);
        assert_relative_eq!(gradient_n(&f, 1, 2.0001).unwrap(), 5.0, max_relative = 1e-12);
        assert!(gradient_n(&f, 1, 0.0).is_err());
        assert!(gradient_n(&f, 1, 10.5).is_err());
        assert!(gradient_n(&f, 5, 1.0).is_err());
    }

    #[test]
    fn harvest_closed_form() {
        let flat = GrowthSpec::new(10.0, 0.03, 0.03, 100.0, 100.0).unwrap();
        let o = ObjectiveSpec {
            mu: Mu::Infinite,
            ..ObjectiveSpec::baseline()
        };
        let m = model(flat, o);
        assert_relative_eq!(optimal_harvest(&m, 1e6, 0.0).unwrap(), 6.25, max_relative = 1e-12);
        assert!(optimal_harvest(&m, 1e6, 1e6).unwrap() < 1e-9);
        assert!(optimal_harvest(&m, 1e6, -1.0).is_err());
    }

    #[test]
    fn uncertainty_lowers_harvest() {
        let robust = model(GrowthSpec::year_2021(), ObjectiveSpec::baseline());
        let plain = robust.with_mu(Mu::Infinite).unwrap();
        for (t, z) in [(61.0, 0.0), (120.0, 0.5), (181.0, 3.0)] {
            let a = optimal_harvest(&robust, t, z).unwrap();
            let b = optimal_harvest(&plain, t, z).unwrap();
            assert!(a < b && b <= robust.harvest_cap());
        }
    }

    fn zero_field(m: &Model, time_steps: usize) -> ValueField {
        let g = SolveGrid::new(61.0, 181.0, time_steps, 20, 10.0).unwrap();
        solve(m, &g, SolveOptions::default()).unwrap()
    }

    #[test]
    fn unharvested_backward_path() {
        let f = zero_field(&no_harvest(), 120_000);
        let p = integrate_backward(&f, (-1.2f64).exp()).unwrap();
        assert!(!p.truncated);
        assert_eq!(p.samples.len(), 120_001);
        assert!((p.first().unwrap().n - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn unharvested_forward_path() {
        let f = zero_field(&no_harvest(), 120_000);
        let p = integrate_forward(&f, 1.0).unwrap();
        let end = p.last().unwrap();
        assert_eq!(end.t, 181.0);
        assert!((end.n - (-1.2f64).exp()).abs() <= 1e-3);
        assert!(p.samples.windows(2).all(|w| w[1].n <= w[0].n));
    }

    #[test]
    fn extinct_paths_stay_extinct() {
        let m = model(GrowthSpec::year_2022(), ObjectiveSpec::with_sustainability());
        let g = SolveGrid::with_max_dt(61.0, 181.0, 0.01, 20, 10.0).unwrap();
        let f = solve(&m, &g, SolveOptions::default()).unwrap();
        for p in [
            integrate_backward(&f, 0.0).unwrap(),
            integrate_forward(&f, 0.0).unwrap(),
        ] {
            assert!(p.samples.iter().all(|s| s.n == 0.0 && s.c == 0.0));
        }
        assert!(integrate_forward(&f, 11.0).is_err());
        assert!(integrate_backward(&f, -1.0).is_err());
    }

    #[test]
    fn large_terminal_value_truncates() {
        let m = model(GrowthSpec::year_2022(), ObjectiveSpec::with_sustainability());
        let g = SolveGrid::with_max_dt(61.0, 181.0, 0.01, 20, 10.0).unwrap();
        let f = solve(&m, &g, SolveOptions::default()).unwrap();
        let p = integrate_backward(&f, 9.0).unwrap();
        assert!(p.truncated);
        assert!(p.samples.iter().all(|s| s.n <= 10.0));
        assert_eq!(p.last().unwrap().t, 181.0);
    }

    #[test]
    fn forward_retraces_backward_path() {
        let m = model(GrowthSpec::year_2022(), ObjectiveSpec::with_sustainability());
        let g = SolveGrid::with_max_dt(61.0, 181.0, 0.01, 50, 10.0).unwrap();
        let f = solve(&m, &g, SolveOptions::default()).unwrap();
        let back = integrate_backward(&f, 0.3).unwrap();
        assert!(!back.truncated);
        let fwd = integrate_forward(&f, back.first().unwrap().n).unwrap();
        assert!((fwd.last().unwrap().n - 0.3).abs() <= 1e-2);
        for s in back.samples.iter().chain(&fwd.samples) {
            assert!(s.c >= 0.0 && s.c <= m.harvest_cap());
        }
    }

    #[test]
    fn distorted_path_vs_plain_mean() {
        let m = model(GrowthSpec::year_2021(), ObjectiveSpec::with_sustainability());
        let g = SolveGrid::with_max_dt(61.0, 181.0, 0.01, 20, 10.0).unwrap();
        let f = solve(&m, &g, SolveOptions::default()).unwrap();
        let p = integrate_backward(&f, 1.0).unwrap();
        let plain = distorted_weight_path(&m.with_mu(Mu::Infinite).unwrap(), &p).unwrap();
        let robust = distorted_weight_path(&m, &p).unwrap();
        let looser = distorted_weight_path(&m.with_mu(Mu::Finite(0.1)).unwrap(), &p).unwrap();
        for ((s, a), (b, c)) in p.samples.iter().zip(&plain).zip(robust.iter().zip(&looser)) {
            let mean = mean_weight(&m.growth, &m.density, s.t).unwrap();
            assert_relative_eq!(*a, mean, max_relative = 1e-13);
            assert!(*b <= *c && *c <= mean);
        }
    }

    #[test]
    fn query_matches_parts() {
        let m = model(GrowthSpec::year_2021(), ObjectiveSpec::with_sustainability());
        let g = SolveGrid::with_max_dt(61.0, 181.0, 0.01, 20, 10.0).unwrap();
        let f = solve(&m, &g, SolveOptions::default()).unwrap();
        let q = query(&f, 100, 2.0).unwrap();
        let t = g.time(100);
        assert_eq!(q.gradient, gradient_n(&f, 100, 2.0).unwrap());
        assert_eq!(q.harvest, optimal_harvest(&m, t, q.gradient).unwrap());
        let norm: f64 = q
            .distortion
            .samples
            .iter()
            .zip(m.density.masses())
            .map(|(a, w)| a * w)
            .sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
