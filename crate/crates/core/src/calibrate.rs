//! Least-squares calibration of the uncertain logistic model by exhaustive
//! grid search, with uniform heterogeneity in the carrying capacity.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{input, parameter};
use crate::growth::QuadratureGrid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Days since the reference date.
    pub t: f64,
    /// Body weight (g).
    pub w: f64,
}

/// Nonempty set of timestamped body weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    records: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        if records.is_empty() {
            return Err(input("observation set is empty"));
        }
        for (k, o) in records.iter().enumerate() {
            if !(o.t >= 0.0 && o.t.is_finite()) {
                return Err(input(format!("observation {k}: time must be >= 0, got {}", o.t)));
            }
            if !(o.w > 0.0 && o.w.is_finite()) {
                return Err(input(format!("observation {k}: weight must be > 0, got {}", o.w)));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Inclusive arithmetic range `lo, lo + step, …, ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let r = Self { lo, hi, step };
        r.validate()?;
        Ok(r)
    }

    pub fn single(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
            step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(parameter("range bounds and step must be finite"));
        }
        if !(self.step > 0.0) {
            return Err(parameter(format!("range step must be > 0, got {}", self.step)));
        }
        if self.hi < self.lo {
            return Err(parameter(format!("empty range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid values. Decimal steps such as `0.001` are generated as
    /// `integer / 1000` so they agree bit-for-bit with the literal values.
    pub fn values(&self) -> Vec<f64> {
        let inv = 1.0 / self.step;
        let scale = inv.round();
        let base = self.lo * scale;
        let decimal = scale >= 1.0 && (inv - scale).abs() <= 1e-9 * scale && (base - base.round()).abs() <= 1e-6;
        (0..self.len())
            .map(|k| {
                if decimal {
                    (base.round() + k as f64) / scale
                } else {
                    self.lo + k as f64 * self.step
                }
            })
            .collect()
    }
}

/// Uncertain logistic model with a single growth rate and uniform carrying
/// capacity on `[k_lo, k_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub x: f64,
    pub r: f64,
    pub k_lo: f64,
    pub k_hi: f64,
}

/// Search grid for [`grid_search_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRanges {
    pub r: ParamRange,
    pub x: ParamRange,
    pub k_lo: ParamRange,
    pub k_hi: ParamRange,
}

impl Default for FitRanges {
    fn default() -> Self {
        Self {
            r: ParamRange {
                lo: 0.020,
                hi: 0.050,
                step: 0.001,
            },
            x: ParamRange {
                lo: 5.0,
                hi: 15.0,
                step: 1.0,
            },
            k_lo: ParamRange {
                lo: 1.0,
                hi: 301.0,
                step: 1.0,
            },
            k_hi: ParamRange {
                lo: 1.0,
                hi: 301.0,
                step: 1.0,
            },
        }
    }
}

impl FitRanges {
    /// Default steps, `± steps` increments around `center`.
    pub fn around(center: &Candidate, steps: usize) -> Self {
        let d = Self::default();
        let span = |c: f64, r: ParamRange| ParamRange {
            lo: c - steps as f64 * r.step,
            hi: c + steps as f64 * r.step,
            step: r.step,
        };
        Self {
            r: span(center.r, d.r),
            x: span(center.x, d.x),
            k_lo: span(center.k_lo, d.k_lo),
            k_hi: span(center.k_hi, d.k_hi),
        }
    }

    pub fn single(c: &Candidate) -> Self {
        Self {
            r: ParamRange::single(c.r),
            x: ParamRange::single(c.x),
            k_lo: ParamRange::single(c.k_lo),
            k_hi: ParamRange::single(c.k_hi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.r.validate()?;
        self.x.validate()?;
        self.k_lo.validate()?;
        self.k_hi.validate()
    }
}

/// Mean and its excess sums for one time: `X_t` at the nodes with the first
/// node factored out, so degenerate capacities give the exact weight.
#[inline]
fn node_weights(c: &Candidate, decay: f64, nodes: &[f64], mut f: impl FnMut(f64)) -> f64 {
    let span = c.k_hi - c.k_lo;
    let mut first = f64::NAN;
    for (m, &u) in nodes.iter().enumerate() {
        let k = c.k_lo + u * span;
        let x = k / (1.0 + (k / c.x - 1.0) * decay);
        if m == 0 {
            first = x;
        }
        f(x - first);
    }
    first
}

#[inline]
fn mean_at(c: &Candidate, decay: f64, nodes: &[f64], du: f64) -> f64 {
    let mut acc = 0.0;
    let first = node_weights(c, decay, nodes, |d| acc += d);
    first + acc * du
}

fn nodes_of(quad: QuadratureGrid) -> Vec<f64> {
    quad.nodes().collect()
}

/// Mean and standard deviation of body weight at `t` under uniform `p`.
pub fn theoretical_moments(c: &Candidate, quad: QuadratureGrid, t: f64) -> (f64, f64) {
    let nodes = nodes_of(quad);
    let du = quad.du();
    let decay = (-c.r * t).exp();
    let mean = mean_at(c, decay, &nodes, du);
    let mut ss = 0.0;
    let first = node_weights(c, decay, &nodes, |_| {});
    node_weights(c, decay, &nodes, |d| {
        let e = first + d - mean;
        ss += e * e;
    });
    (mean, (ss * du).sqrt())
}

/// Mean squared residual against the theoretical mean curve.
pub fn loss(c: &Candidate, obs: &ObservationSet, quad: QuadratureGrid) -> f64 {
    let nodes = nodes_of(quad);
    let decays: Vec<f64> = obs.records.iter().map(|o| (-c.r * o.t).exp()).collect();
    loss_with(c, obs, &decays, &nodes, quad.du())
}

#[inline]
fn loss_with(c: &Candidate, obs: &ObservationSet, decays: &[f64], nodes: &[f64], du: f64) -> f64 {
    let mut s = 0.0;
    for (o, &decay) in obs.records.iter().zip(decays) {
        let e = o.w - mean_at(c, decay, nodes, du);
        s += e * e;
    }
    s / obs.records.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub candidate: Candidate,
    pub loss: f64,
    /// Other feasible candidates reaching exactly the same loss.
    pub ties: usize,
    /// Feasible candidates evaluated.
    pub evaluated: usize,
}

/// Exhaustive scan in `(r, x, K_lo, K_hi)` lexicographic order over candidates
/// with `x ≤ K_lo` and `K_hi ≥ K_lo + 1`; the first minimizer wins.
pub fn grid_search_fit(obs: &ObservationSet, ranges: &FitRanges, quad: QuadratureGrid) -> Result<FitResult> {
    ranges.validate()?;
    let nodes = nodes_of(quad);
    let du = quad.du();
    let (xs, k_los, k_his) = (ranges.x.values(), ranges.k_lo.values(), ranges.k_hi.values());
    let mut best: Option<FitResult> = None;
    let mut evaluated = 0;
    let mut decays = Vec::with_capacity(obs.len());
    for r in ranges.r.values() {
        decays.clear();
        decays.extend(obs.records.iter().map(|o| (-r * o.t).exp()));
        for &x in &xs {
            for &k_lo in k_los.iter().filter(|&&k| x <= k) {
                for &k_hi in k_his.iter().filter(|&&k| k >= k_lo + 1.0) {
                    let c = Candidate { x, r, k_lo, k_hi };
                    let l = loss_with(&c, obs, &decays, &nodes, du);
                    evaluated += 1;
                    match &mut best {
                        Some(b) if l == b.loss => b.ties += 1,
                        Some(b) if !(l < b.loss) => {}
                        _ => {
                            best = Some(FitResult {
                                candidate: c,
                                loss: l,
                                ties: 0,
                                evaluated: 0,
                            })
                        }
                    }
                }
            }
        }
    }
    let mut best = best.ok_or(Error::NoFeasibleCandidate)?;
    best.evaluated = evaluated;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    const TRUTH: Candidate = Candidate {
        x: 10.0,
        r: 0.030,
        k_lo: 50.0,
        k_hi: 150.0,
    };

    fn synthetic(c: &Candidate, times: impl Iterator<Item = f64>) -> ObservationSet {
        let q = QuadratureGrid::default();
        ObservationSet::new(
            times
                .map(|t| Observation {
                    t,
                    w: theoretical_moments(c, q, t).0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn decimal_ranges_hit_literals() {
        let r = FitRanges::default().r.values();
        assert_eq!(r.len(), 31);
        assert_eq!(r[10], 0.030);
        assert_eq!(r[30], 0.050);
        assert_eq!(FitRanges::default().k_lo.values().len(), 301);
        let odd = ParamRange::new(0.5, 1.2, 0.3).unwrap().values();
        assert_eq!(odd.len(), 3);
        assert!(ParamRange::new(1.0, 0.0, 1.0).is_err());
        assert!(ParamRange::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn moments_at_start_and_degenerate() {
        let q = QuadratureGrid::default();
        assert_eq!(theoretical_moments(&TRUTH, q, 0.0), (10.0, 0.0));
        let flat = Candidate { k_hi: 50.0, ..TRUTH };
        for t in [0.0, 30.0, 200.0] {
            assert_eq!(theoretical_moments(&flat, q, t).1, 0.0);
        }
    }

    #[test]
    fn moments_saturate_to_uniform() {
        let q = QuadratureGrid::default();
        let (m, s) = theoretical_moments(&TRUTH, q, 5000.0);
        assert_relative_eq!(m, 100.0, max_relative = 1e-13);
        // Midpoint rule: variance (b−a)²(1/12 − 1/(12 n²)).
        let exact = 100.0 * (1.0f64 / 12.0 - 1.0 / (12.0 * 150.0 * 150.0)).sqrt();
        assert_relative_eq!(s, exact, max_relative = 1e-12);
        assert_relative_eq!(s, 100.0 / 12f64.sqrt(), max_relative = 1e-4);
    }

    #[test]
    fn moments_monotone() {
        let q = QuadratureGrid::default();
        let mut prev = 0.0;
        for k in 0..100 {
            let (m, _) = theoretical_moments(&TRUTH, q, k as f64 * 3.0);
            assert!(m >= prev);
            prev = m;
        }
        let narrow = theoretical_moments(&Candidate { k_hi: 120.0, ..TRUTH }, q, 80.0).1;
        let wide = theoretical_moments(&TRUTH, q, 80.0).1;
        assert!(narrow < wide);
    }

    #[test]
    fn loss_values() {
        let q = QuadratureGrid::default();
        let obs = synthetic(&TRUTH, (0..40).map(|k| 3.0 * k as f64));
        assert_eq!(loss(&TRUTH, &obs, q), 0.0);
        let m = theoretical_moments(&TRUTH, q, 50.0).0;
        let one = ObservationSet::new(vec![Observation { t: 50.0, w: m + 1.5 }]).unwrap();
        assert_relative_eq!(loss(&TRUTH, &one, q), 2.25, max_relative = 1e-10);
    }

    #[test]
    fn observation_validation() {
        assert!(ObservationSet::new(vec![]).is_err());
        assert!(ObservationSet::new(vec![Observation { t: -1.0, w: 1.0 }]).is_err());
        assert!(ObservationSet::new(vec![Observation { t: 1.0, w: 0.0 }]).is_err());
    }

    #[test]
    fn recovers_generator() {
        let obs = synthetic(&TRUTH, (0..20).map(|k| 10.0 * k as f64));
        let fit = grid_search_fit(&obs, &FitRanges::around(&TRUTH, 5), QuadratureGrid::default()).unwrap();
        assert_eq!(fit.candidate, TRUTH);
        assert_eq!(fit.loss, 0.0);
        assert_eq!(fit.ties, 0);
        assert_eq!(fit.evaluated, 11 * 11 * 11 * 11);
    }

    #[test]
    fn single_candidate_wins_regardless_of_data() {
        let c = Candidate {
            x: 6.0,
            r: 0.021,
            k_lo: 9.0,
            k_hi: 300.0,
        };
        let obs = synthetic(&TRUTH, [5.0, 60.0].into_iter());
        let fit = grid_search_fit(&obs, &FitRanges::single(&c), QuadratureGrid::default()).unwrap();
        assert_eq!(fit.candidate, c);
        assert_eq!(fit.evaluated, 1);
    }

    #[test]
    fn infeasible_ranges_rejected() {
        let c = Candidate { x: 60.0, ..TRUTH };
        let obs = synthetic(&TRUTH, [5.0].into_iter());
        assert_eq!(
            grid_search_fit(&obs, &FitRanges::single(&c), QuadratureGrid::default()),
            Err(Error::NoFeasibleCandidate)
        );
        let flat = Candidate { k_hi: 50.0, ..TRUTH };
        assert_eq!(
            grid_search_fit(&obs, &FitRanges::single(&flat), QuadratureGrid::default()),
            Err(Error::NoFeasibleCandidate)
        );
    }

    #[test]
    fn ties_are_counted_and_first_wins() {
        // At t = 0 every candidate with the same x has the same mean.
        let obs = ObservationSet::new(vec![Observation { t: 0.0, w: 8.0 }]).unwrap();
        let ranges = FitRanges {
            r: ParamRange::new(0.02, 0.022, 0.001).unwrap(),
            x: ParamRange::new(7.0, 9.0, 1.0).unwrap(),
            k_lo: ParamRange::new(10.0, 11.0, 1.0).unwrap(),
            k_hi: ParamRange::new(20.0, 21.0, 1.0).unwrap(),
        };
        let fit = grid_search_fit(&obs, &ranges, QuadratureGrid::default()).unwrap();
        assert_eq!(
            fit.candidate,
            Candidate {
                x: 8.0,
                r: 0.02,
                k_lo: 10.0,
                k_hi: 20.0
            }
        );
        assert_eq!(fit.ties, 3 * 2 * 2 - 1);
    }
}
