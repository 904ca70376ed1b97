//! Explicit monotone upwind scheme for the value function on the
//! time–population grid, swept backward from the terminal utility.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{input, parameter};
use crate::robust::{Model, Snapshot};
use crate::{Error, Result};

/// Uniform grid `t_i = t0 + iΔt` (`0 ≤ i ≤ I`), `n_j = jΔn` (`0 ≤ j ≤ J`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveGrid {
    time_steps: usize,
    pop_steps: usize,
    pop_max: f64,
    t0: f64,
    t1: f64,
}

impl SolveGrid {
    pub fn new(t0: f64, t1: f64, time_steps: usize, pop_steps: usize, pop_max: f64) -> Result<Self> {
        if time_steps == 0 || pop_steps == 0 {
            return Err(parameter("grid needs at least one step in each direction"));
        }
        if !(pop_max.is_finite() && pop_max > 0.0) {
            return Err(parameter(format!("population cap must be > 0, got {pop_max}")));
        }
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(parameter("grid horizon must satisfy t0 < t1"));
        }
        Ok(Self {
            time_steps,
            pop_steps,
            pop_max,
            t0,
            t1,
        })
    }

    /// Smallest number of time steps with `Δt ≤ dt_max`.
    pub fn with_max_dt(t0: f64, t1: f64, dt_max: f64, pop_steps: usize, pop_max: f64) -> Result<Self> {
        if !(dt_max > 0.0) {
            return Err(parameter("time step bound must be positive"));
        }
        let steps = ((t1 - t0) / dt_max).ceil();
        if !(steps.is_finite() && steps >= 1.0 && steps < usize::MAX as f64) {
            return Err(parameter("time step bound gives an unusable step count"));
        }
        Self::new(t0, t1, steps as usize, pop_steps, pop_max)
    }

    /// `I`.
    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    /// `J`.
    pub fn pop_steps(&self) -> usize {
        self.pop_steps
    }

    /// `M`.
    pub fn pop_max(&self) -> f64 {
        self.pop_max
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.time_steps as f64
    }

    pub fn dn(&self) -> f64 {
        self.pop_max / self.pop_steps as f64
    }

    /// Absolute time of level `i`; the last level is exactly `t1`.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.time_steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    /// Population at node `j`; the last node is exactly `M`.
    pub fn pop(&self, j: usize) -> f64 {
        if j == self.pop_steps {
            self.pop_max
        } else {
            j as f64 * self.dn()
        }
    }

    fn width(&self) -> usize {
        self.pop_steps + 1
    }
}

/// Sufficient time-step bound `Δn / (R(M) M + α² K_hi / (4γ²))` for
/// nonnegativity and monotonicity of the scheme.
pub fn cfl_max_dt(grid: &SolveGrid, model: &Model) -> f64 {
    let m = grid.pop_max();
    let rate = model.objective.mortality.eval(m) * m + model.lipschitz_constant();
    if rate > 0.0 {
        grid.dn() / rate
    } else {
        f64::INFINITY
    }
}

/// Which Hamiltonian the scheme evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HamiltonianForm {
    /// Gradient clamped at zero before evaluation.
    #[default]
    Modified,
    /// Raw difference quotient passed through; only meaningful while the
    /// discrete gradients stay nonnegative.
    Unclamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    /// Run even when `Δt` exceeds [`cfl_max_dt`]; a warning is recorded.
    pub override_cfl: bool,
    pub form: HamiltonianForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveWarning {
    CflExceeded { dt: f64, bound: f64 },
}

fn check_horizon(model: &Model, grid: &SolveGrid) -> Result<()> {
    let o = &model.objective;
    if o.t0 != grid.t0 || o.t1 != grid.t1 {
        return Err(parameter(format!(
            "grid horizon [{}, {}] does not match objective horizon [{}, {}]",
            grid.t0, grid.t1, o.t0, o.t1
        )));
    }
    Ok(())
}

/// Runs the backward sweep keeping only two time levels in memory.
///
/// `visit(i, row)` is called for `i = I, I−1, …, 0` with `row[j] = Φ_{i,j}`.
pub fn sweep(
    model: &Model,
    grid: &SolveGrid,
    options: SolveOptions,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<Vec<SolveWarning>> {
    check_horizon(model, grid)?;
    let mut warnings = Vec::new();
    let (dt, bound) = (grid.dt(), cfl_max_dt(grid, model));
    if dt > bound {
        if !options.override_cfl {
            return Err(Error::Cfl { dt, bound });
        }
        warnings.push(SolveWarning::CflExceeded { dt, bound });
    }

    let obj = &model.objective;
    let dn = grid.dn();
    let width = grid.width();
    // R(n_j) n_j, fixed across levels.
    let drift: Vec<f64> = (0..width)
        .map(|j| {
            let n = grid.pop(j);
            obj.mortality.eval(n) * n
        })
        .collect();

    let mut next: Vec<f64> = (0..width).map(|j| obj.terminal.eval(grid.pop(j))).collect();
    let mut cur = vec![0.0; width];
    visit(grid.time_steps, &next);

    for i in (0..grid.time_steps).rev() {
        let snap = Snapshot::new(&model.growth, &model.density, grid.time(i));
        cur[0] = 0.0;
        let (mut last_z, mut last_h) = (f64::NAN, 0.0);
        for j in 1..width {
            let z = (next[j] - next[j - 1]) / dn;
            let arg = match options.form {
                HamiltonianForm::Modified => z.max(0.0),
                HamiltonianForm::Unclamped => z,
            };
            // Flat stretches repeat the same gradient; reuse is bit-identical.
            let h = if arg == last_z {
                last_h
            } else {
                let h = snap.hamiltonian(obj, arg);
                last_z = arg;
                last_h = h;
                h
            };
            let v = next[j] - drift[j] * dt * z + h * dt;
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j });
            }
            cur[j] = v;
        }
        visit(i, &cur);
        core::mem::swap(&mut cur, &mut next);
    }
    Ok(warnings)
}

/// Solves for the full `(I+1) × (J+1)` value field.
pub fn solve(model: &Model, grid: &SolveGrid, options: SolveOptions) -> Result<ValueField> {
    check_horizon(model, grid)?;
    let width = grid.width();
    let mut values = vec![0.0; (grid.time_steps + 1) * width];
    let warnings = sweep(model, grid, options, |i, row| {
        values[i * width..(i + 1) * width].copy_from_slice(row);
    })?;
    Ok(ValueField {
        model: model.clone(),
        grid: *grid,
        values,
        warnings,
    })
}

/// Discrete value function `Φ_{i,j}` with the model and grid that produced it.
#[derive(Debug, Clone)]
pub struct ValueField {
    model: Model,
    grid: SolveGrid,
    values: Vec<f64>,
    warnings: Vec<SolveWarning>,
}

impl ValueField {
    /// Wraps externally computed nodal values (row-major in `i`).
    pub fn from_values(model: Model, grid: SolveGrid, values: Vec<f64>) -> Result<Self> {
        let expected = (grid.time_steps + 1) * grid.width();
        if values.len() != expected {
            return Err(input(format!("expected {expected} values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(input("value field entries must be finite"));
        }
        Ok(Self {
            model,
            grid,
            values,
            warnings: Vec::new(),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn grid(&self) -> &SolveGrid {
        &self.grid
    }

    pub fn warnings(&self) -> &[SolveWarning] {
        &self.warnings
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.width() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.grid.width();
        &self.values[i * w..(i + 1) * w]
    }

    /// Backward difference `(Φ_{i,j} − Φ_{i,j−1}) / Δn` for `j ≥ 1`.
    pub fn difference(&self, i: usize, j: usize) -> f64 {
        (self.value(i, j) - self.value(i, j - 1)) / self.grid.dn()
    }

    /// Monotone bilinear interpolation; no extrapolation outside the grid.
    pub fn interpolate(&self, t: f64, n: f64) -> Result<f64> {
        let g = &self.grid;
        if !(t >= g.t0 && t <= g.t1) {
            return Err(input(format!("time {t} outside [{}, {}]", g.t0, g.t1)));
        }
        if !(n >= 0.0 && n <= g.pop_max) {
            return Err(input(format!("population {n} outside [0, {}]", g.pop_max)));
        }
        let i = locate(t, g.time_steps, |k| g.time(k));
        let j = locate(n, g.pop_steps, |k| g.pop(k));
        let s = (t - g.time(i)) / (g.time(i + 1) - g.time(i));
        let r = (n - g.pop(j)) / (g.pop(j + 1) - g.pop(j));
        Ok((1.0 - s) * (1.0 - r) * self.value(i, j)
            + s * (1.0 - r) * self.value(i + 1, j)
            + (1.0 - s) * r * self.value(i, j + 1)
            + s * r * self.value(i + 1, j + 1))
    }
}

/// Cell index `k ∈ [0, steps−1]` with `node(k) ≤ x ≤ node(k+1)`.
fn locate(x: f64, steps: usize, node: impl Fn(usize) -> f64) -> usize {
    let span = node(steps) - node(0);
    let guess = ((x - node(0)) / span * steps as f64).floor();
    let mut k = if guess <= 0.0 {
        0
    } else {
        (guess as usize).min(steps - 1)
    };
    while k + 1 < steps && x >= node(k + 1) {
        k += 1;
    }
    while k > 0 && x < node(k) {
        k -= 1;
    }
    k
}
