use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::parameter;
use crate::Result;

/// Uncertainty-aversion weight. `Infinite` is the no-uncertainty baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu {
    Finite(f64),
    Infinite,
}

impl Mu {
    pub fn is_finite(&self) -> bool {
        matches!(self, Mu::Finite(_))
    }
}

impl fmt::Display for Mu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mu::Finite(v) => write!(f, "{v}"),
            Mu::Infinite => f.write_str("inf"),
        }
    }
}

impl core::str::FromStr for Mu {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Mu::Infinite);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| parameter(format!("cannot parse mu from {s:?}")))?;
        if v.is_infinite() && v > 0.0 {
            Ok(Mu::Infinite)
        } else if v > 0.0 {
            Ok(Mu::Finite(v))
        } else {
            Err(parameter(format!("mu must be positive, got {v}")))
        }
    }
}

/// Continuous piecewise-linear function on `[0, ∞)`, constant past its last
/// knot. Knots are `(n, value)` pairs with strictly increasing `n` starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(parameter("piecewise-linear function needs at least one knot"));
        }
        if knots[0].0 != 0.0 {
            return Err(parameter("first knot must sit at n = 0"));
        }
        if knots.iter().any(|(n, v)| !n.is_finite() || !v.is_finite()) {
            return Err(parameter("knots must be finite"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(parameter("knot abscissae must be strictly increasing"));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.knots.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    pub fn eval(&self, n: f64) -> f64 {
        let k = &self.knots;
        if n <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((n0, v0), (n1, v1)) = (w[0], w[1]);
            if n <= n1 {
                return v0 + (v1 - v0) * (n - n0) / (n1 - n0);
            }
        }
        k[k.len() - 1].1
    }
}

/// Terminal utility `h(n)`: bounded, nondecreasing, `h(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum TerminalUtility {
    Zero,
    /// `eta · min{n, cap}`.
    CappedLinear {
        eta: f64,
        cap: f64,
    },
    Piecewise(PiecewiseLinear),
}

impl TerminalUtility {
    pub fn eval(&self, n: f64) -> f64 {
        match self {
            TerminalUtility::Zero => 0.0,
            TerminalUtility::CappedLinear { eta, cap } => eta * n.min(*cap),
            TerminalUtility::Piecewise(p) => p.eval(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TerminalUtility::Zero => Ok(()),
            TerminalUtility::CappedLinear { eta, cap } => {
                if !(eta.is_finite() && *eta >= 0.0 && cap.is_finite() && *cap > 0.0) {
                    return Err(parameter("capped-linear terminal utility needs eta >= 0, cap > 0"));
                }
                Ok(())
            }
            TerminalUtility::Piecewise(p) => {
                if p.eval(0.0) != 0.0 {
                    return Err(parameter("terminal utility must vanish at n = 0"));
                }
                if !p.is_nondecreasing() {
                    return Err(parameter("terminal utility must be nondecreasing"));
                }
                Ok(())
            }
        }
    }
}

/// Mortality rate `R(n)` (1/day): nonnegative, bounded, nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub enum Mortality {
    Constant(f64),
    Piecewise(PiecewiseLinear),
}

impl Mortality {
    pub fn eval(&self, n: f64) -> f64 {
        match self {
            Mortality::Constant(r) => *r,
            Mortality::Piecewise(p) => p.eval(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Mortality::Constant(r) => {
                if !(r.is_finite() && *r >= 0.0) {
                    return Err(parameter("mortality rate must be finite and >= 0"));
                }
                Ok(())
            }
            Mortality::Piecewise(p) => {
                if p.knots().iter().any(|&(_, v)| v < 0.0) {
                    return Err(parameter("mortality rate must be >= 0"));
                }
                if !p.is_nondecreasing() {
                    return Err(parameter("mortality rate must be nondecreasing"));
                }
                Ok(())
            }
        }
    }
}

/// Harvesting economics and robustness weights (square-root utility).
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    /// Utility weight (1/day).
    pub alpha: f64,
    /// Harvesting cost weight (1/day).
    pub gamma: f64,
    /// Uncertainty aversion (1/day).
    pub mu: Mu,
    /// Harvest-rate cap; `None` means the smallest cap admissible for the growth model.
    pub c_bar: Option<f64>,
    /// Horizon `[t0, t1]` in days since the reference date.
    pub t0: f64,
    pub t1: f64,
    pub terminal: TerminalUtility,
    pub mortality: Mortality,
}

impl ObjectiveSpec {
    /// Default weights on days 61 to 181 with zero terminal utility.
    pub fn baseline() -> Self {
        Self {
            alpha: 0.05,
            gamma: 0.1,
            mu: Mu::Finite(0.01),
            c_bar: None,
            t0: 61.0,
            t1: 181.0,
            terminal: TerminalUtility::Zero,
            mortality: Mortality::Constant(0.01),
        }
    }

    /// `1.5 · min{n, 10}` terminal utility on top of [`Self::baseline`].
    pub fn with_sustainability() -> Self {
        Self {
            terminal: TerminalUtility::CappedLinear { eta: 1.5, cap: 10.0 },
            ..Self::baseline()
        }
    }

    pub fn horizon(&self) -> f64 {
        self.t1 - self.t0
    }

    /// `α² K_hi / (4γ²)`: smallest harvest cap under which the cap never binds
    /// for nonnegative gradients, and the Lipschitz constant of the Hamiltonian in `z`.
    pub fn harvest_scale(&self, k_hi: f64) -> f64 {
        self.alpha * self.alpha * k_hi / (4.0 * self.gamma * self.gamma)
    }

    /// Effective harvest cap.
    pub fn harvest_cap(&self, k_hi: f64) -> f64 {
        self.c_bar.unwrap_or_else(|| self.harvest_scale(k_hi))
    }

    /// `h(M) + α² (t1 − t0) K_hi / (4γ)`: uniform upper bound of the discrete value.
    pub fn value_upper_bound(&self, k_hi: f64, pop_max: f64) -> f64 {
        self.terminal.eval(pop_max) + self.alpha * self.alpha * self.horizon() * k_hi / (4.0 * self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(parameter(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(parameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if let Mu::Finite(mu) = self.mu {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(parameter(format!("mu must be > 0, got {mu}")));
            }
        }
        if let Some(c) = self.c_bar {
            if !(c.is_finite() && c > 0.0) {
                return Err(parameter(format!("c_bar must be > 0, got {c}")));
            }
        }
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t0 >= 0.0 && self.t1 > self.t0) {
            return Err(parameter("horizon must satisfy 0 <= t0 < t1"));
        }
        self.terminal.validate()?;
        self.mortality.validate()
    }
}
