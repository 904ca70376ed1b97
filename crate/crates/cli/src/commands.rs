//! Subcommand bodies. Each returns a short human-readable summary; all files
//! go to the output directory.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::time::Instant;

use harvest_core::{
    cfl_max_dt, grid_search_fit, integrate_backward, integrate_forward, row_gradient, solve, sweep, visit_policy,
    FitResult, Model, Mu, SolveGrid, SolveOptions, SolveWarning, Trajectory, ValueField,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{num, read_observations, write_atomic, write_csv};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Failure that `--override-cfl` may waive.
    pub waivable: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check {
            name,
            passed,
            waivable: false,
            detail,
        });
    }

    /// Whether any failure blocks a run under the given override setting.
    pub fn blocks(&self, override_cfl: bool) -> bool {
        self.checks.iter().any(|c| !c.passed && !(override_cfl && c.waivable))
    }

    fn failures(&self) -> String {
        let names: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        names.join(", ")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn outcome<T>(r: Result<T>) -> (bool, String) {
    match r {
        Ok(_) => (true, "ok".into()),
        Err(e) => (false, e.to_string()),
    }
}

/// Checks the configuration without running anything.
pub fn validate(cfg: &RunConfig) -> Report {
    let mut report = Report::default();

    let growth = cfg.growth.spec();
    let (ok, detail) = match &growth {
        Ok(g) => match g.validate() {
            Ok(()) => (true, format!("x = {} <= k_lo = {} <= k_hi = {}", g.x, g.k_lo, g.k_hi)),
            Err(e) => (false, e.to_string()),
        },
        Err(e) => (false, e.to_string()),
    };
    report.push("growth", ok, detail);

    let (ok, detail) = outcome(cfg.density());
    report.push("density", ok, detail);

    let (ok, detail) = match cfg.terminal() {
        Ok(h) => match h.validate() {
            Ok(()) => (true, "h(0) = 0, nondecreasing".into()),
            Err(e) => (false, e.to_string()),
        },
        Err(e) => (false, e.to_string()),
    };
    report.push("terminal utility", ok, detail);

    let (ok, detail) = match cfg.mortality() {
        Ok(r) => match r.validate() {
            Ok(()) => (true, "nonnegative, nondecreasing".into()),
            Err(e) => (false, e.to_string()),
        },
        Err(e) => (false, e.to_string()),
    };
    report.push("mortality", ok, detail);

    let objective = cfg.objective();
    let (ok, detail) = match &objective {
        Ok(o) => {
            let relaxed = harvest_core::ObjectiveSpec {
                c_bar: None,
                ..o.clone()
            };
            outcome(relaxed.validate().map_err(CliError::from))
        }
        Err(e) => (false, e.to_string()),
    };
    report.push("objective weights", ok, detail);

    let (Ok(g), Ok(o)) = (&growth, &objective) else {
        return report;
    };
    let needed = o.harvest_scale(g.k_hi);
    match o.c_bar {
        Some(c) => report.push(
            "harvest cap",
            c >= needed,
            format!("c_bar = {c}, needs >= alpha^2 K_hi / (4 gamma^2) = {needed}"),
        ),
        None => report.push(
            "harvest cap",
            true,
            format!("c_bar defaults to alpha^2 K_hi / (4 gamma^2) = {needed}"),
        ),
    }

    // The CFL bound does not involve c_bar, so check it even when the cap fails.
    let relaxed = harvest_core::ObjectiveSpec {
        c_bar: None,
        ..o.clone()
    };
    let model = match cfg.density().and_then(|d| Ok(Model::new(*g, d, relaxed)?)) {
        Ok(m) => m,
        Err(_) => return report,
    };
    let grid = cfg.solve_grid(&model);
    let (ok, detail) = outcome(grid.as_ref().map(|_| ()).map_err(|e| CliError::Config(e.to_string())));
    report.push("grid", ok, detail);
    if let Ok(grid) = grid {
        let (dt, bound) = (grid.dt(), cfl_max_dt(&grid, &model));
        let passed = dt <= bound;
        report.checks.push(Check {
            name: "cfl",
            passed,
            waivable: true,
            detail: format!(
                "dt = {} {} bound = {} (I = {}, J = {}, dn = {})",
                num(dt),
                if passed { "<=" } else { ">" },
                num(bound),
                grid.time_steps(),
                grid.pop_steps(),
                num(grid.dn())
            ),
        });
    }
    report
}

/// Validated model and grid, or the reason the run is refused.
fn prepare(cfg: &RunConfig) -> Result<(Model, SolveGrid, SolveOptions)> {
    let report = validate(cfg);
    if report.blocks(cfg.override_cfl) {
        return Err(CliError::Validation(format!(
            "{} (run `validate` for details)",
            report.failures()
        )));
    }
    let model = cfg.model()?;
    let grid = cfg.solve_grid(&model)?;
    let options = SolveOptions {
        override_cfl: cfg.override_cfl,
        ..Default::default()
    };
    Ok((model, grid, options))
}

fn warn(warnings: &[SolveWarning], summary: &mut String) {
    for w in warnings {
        match w {
            SolveWarning::CflExceeded { dt, bound } => {
                let _ = writeln!(
                    summary,
                    "warning: dt = {} exceeds the CFL bound {} (overridden)",
                    num(*dt),
                    num(*bound)
                );
            }
        }
    }
}

fn strides(cfg: &RunConfig) -> Result<(usize, usize)> {
    let (st, sp) = (cfg.grid.export_stride_time, cfg.grid.export_stride_pop);
    if st == 0 || sp == 0 {
        return Err(CliError::Config("export strides must be >= 1".into()));
    }
    Ok((st, sp))
}

/// Exported levels: every `stride`-th plus the last.
fn keep(k: usize, stride: usize, last: usize) -> bool {
    k.is_multiple_of(stride) || k == last
}

fn write_value_field(path: &Path, field: &ValueField, st: usize, sp: usize) -> Result<()> {
    let g = field.grid();
    write_csv(path, &["i", "j", "t", "n", "phi"], |w| {
        for i in (0..=g.time_steps()).filter(|&i| keep(i, st, g.time_steps())) {
            let t = num(g.time(i));
            for j in (0..=g.pop_steps()).filter(|&j| keep(j, sp, g.pop_steps())) {
                w.write_record([
                    i.to_string(),
                    j.to_string(),
                    t.clone(),
                    num(g.pop(j)),
                    num(field.value(i, j)),
                ])?;
            }
        }
        Ok(())
    })
}

fn write_policy_field(path: &Path, field: &ValueField, st: usize, sp: usize) -> Result<()> {
    let g = *field.grid();
    write_csv(path, &["i", "j", "t", "n", "z", "c_star"], |w| {
        let mut result = Ok(());
        visit_policy(field, |i, j, z, c| {
            if result.is_ok() && keep(i, st, g.time_steps()) && keep(j, sp, g.pop_steps()) {
                result = w.write_record([
                    i.to_string(),
                    j.to_string(),
                    num(g.time(i)),
                    num(g.pop(j)),
                    num(z),
                    num(c),
                ]);
            }
        });
        result
    })
}

/// Solves and writes `value_field.csv` and `policy_field.csv`.
pub fn run_solve(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let (model, grid, options) = prepare(cfg)?;
    let (st, sp) = strides(cfg)?;
    let start = Instant::now();
    let field = solve(&model, &grid, options)?;
    let mut summary = String::new();
    warn(field.warnings(), &mut summary);
    let v = out_dir.join("value_field.csv");
    let p = out_dir.join("policy_field.csv");
    write_value_field(&v, &field, st, sp)?;
    write_policy_field(&p, &field, st, sp)?;
    let (lo, hi) = field
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let _ = writeln!(
        summary,
        "solved I = {}, J = {}, dt = {} in {:.2}s; phi in [{}, {}]",
        grid.time_steps(),
        grid.pop_steps(),
        num(grid.dt()),
        start.elapsed().as_secs_f64(),
        num(lo),
        num(hi)
    );
    let _ = writeln!(summary, "wrote {}\nwrote {}", v.display(), p.display());
    Ok(summary)
}

fn write_trajectory(path: &Path, path_data: &Trajectory) -> Result<()> {
    write_csv(path, &["t", "n", "c", "z", "xbar_distorted"], |w| {
        for s in &path_data.samples {
            w.write_record([num(s.t), num(s.n), num(s.c), num(s.z), num(s.xbar)])?;
        }
        Ok(())
    })
}

/// Backward paths from each terminal value and forward paths from each
/// initial value, one CSV per path.
pub fn run_paths(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    if cfg.paths.terminal_values.is_empty() && cfg.paths.initial_values.is_empty() {
        return Err(CliError::MissingInput("no terminal or initial values for paths".into()));
    }
    let (model, grid, options) = prepare(cfg)?;
    let field = solve(&model, &grid, options)?;
    let mut summary = String::new();
    warn(field.warnings(), &mut summary);
    for &n in &cfg.paths.terminal_values {
        let p = integrate_backward(&field, n)?;
        let file = out_dir.join(format!("trajectory_backward_n={}.csv", num(n)));
        write_trajectory(&file, &p)?;
        let first = p.first().expect("paths hold at least one sample");
        let _ = writeln!(
            summary,
            "backward from n({}) = {}: n({}) = {}{} -> {}",
            num(grid.t1()),
            num(n),
            num(first.t),
            num(first.n),
            if p.truncated { " (left the grid, truncated)" } else { "" },
            file.display()
        );
    }
    for &n in &cfg.paths.initial_values {
        let p = integrate_forward(&field, n)?;
        let file = out_dir.join(format!("trajectory_forward_n={}.csv", num(n)));
        write_trajectory(&file, &p)?;
        let last = p.last().expect("paths hold at least one sample");
        let _ = writeln!(
            summary,
            "forward from n({}) = {}: n({}) = {} -> {}",
            num(grid.t0()),
            num(n),
            num(last.t),
            num(last.n),
            file.display()
        );
    }
    Ok(summary)
}

/// Baseline density and its worst-case distortions `φ̂ p` at `(t, n)`, one
/// column per `μ`. Finite `μ` needs the gradient there, so each is solved.
pub fn run_distort(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let (base, grid, options) = prepare(cfg)?;
    let d = &cfg.distort;
    if cfg.distort.mu.is_empty() {
        return Err(CliError::MissingInput("no mu values for distort".into()));
    }
    if !(d.t >= grid.t0() && d.t <= grid.t1()) {
        return Err(CliError::Config(format!(
            "distort.t = {} outside [{}, {}]",
            d.t,
            grid.t0(),
            grid.t1()
        )));
    }
    let level = ((d.t - grid.t0()) / grid.dt()).round() as usize;
    let t = grid.time(level.min(grid.time_steps()));
    let mut summary = String::new();
    let mut columns = Vec::new();
    for mu in &d.mu {
        let model = base.with_mu(mu.0)?;
        let z = match mu.0 {
            Mu::Infinite => 0.0,
            Mu::Finite(_) => {
                let mut row = Vec::new();
                let warnings = sweep(&model, &grid, options, |i, r| {
                    if i == level {
                        row = r.to_vec();
                    }
                })?;
                warn(&warnings, &mut summary);
                row_gradient(&grid, &row, d.n)?
            }
        };
        let phi = model.snapshot(t).distortion(&model.objective, z);
        let _ = writeln!(
            summary,
            "mu = {mu}: gradient {} at t = {}, n = {}",
            num(z),
            num(t),
            num(d.n)
        );
        columns.push(phi);
    }
    let mut header = vec!["u".to_string(), "p".to_string()];
    header.extend(d.mu.iter().map(|m| format!("p_distorted_mu={m}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let density = &base.density;
    let file = out_dir.join("density.csv");
    write_csv(&file, &header, |w| {
        for (m, (u, p)) in density.quad().nodes().zip(density.values()).enumerate() {
            let mut rec = vec![num(u), num(*p)];
            rec.extend(columns.iter().map(|phi| num(phi[m] * p)));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    let _ = writeln!(summary, "wrote {}", file.display());
    Ok(summary)
}

fn fit_report(fit: &FitResult, observations: usize, quad_points: usize) -> String {
    let c = &fit.candidate;
    format!(
        "x: {}\nr: {}\nk_lo: {}\nk_hi: {}\nloss: {}\nties: {}\ncandidates: {}\nobservations: {}\nquad_points: {}\n",
        num(c.x),
        num(c.r),
        num(c.k_lo),
        num(c.k_hi),
        num(fit.loss),
        fit.ties,
        fit.evaluated,
        observations,
        quad_points
    )
}

/// Grid-search calibration; writes `fit_report.txt`.
pub fn run_fit(cfg: &RunConfig, observations: Option<&Path>, out_dir: &Path) -> Result<String> {
    let path = observations.or(cfg.fit.observations.as_deref()).ok_or_else(|| {
        CliError::MissingInput("fit needs an observation file (--observations or fit.observations)".into())
    })?;
    let obs = read_observations(path)?;
    let ranges = cfg.fit.ranges()?;
    let quad = cfg.quad()?;
    let start = Instant::now();
    let fit = grid_search_fit(&obs, &ranges, quad)?;
    let elapsed = start.elapsed().as_secs_f64();
    let report = fit_report(&fit, obs.len(), quad.n_points());
    let file = out_dir.join("fit_report.txt");
    write_atomic(&file, |w| w.write_all(report.as_bytes()))?;
    Ok(format!(
        "{report}runtime_seconds: {elapsed:.3}\nwrote {}\n",
        file.display()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{MuSetting, Preset};

    fn full_grid(preset: Preset) -> RunConfig {
        let mut c = RunConfig::default();
        c.growth.preset = Some(preset);
        c.grid.time_steps = Some(120_000);
        c.grid.pop_steps = 1000;
        c
    }

    #[test]
    fn cfl_verdicts_on_full_grid() {
        let r = validate(&full_grid(Preset::Year2022));
        assert!(!r.blocks(false), "{r}");
        let r = validate(&full_grid(Preset::Year2021));
        let cfl = r.checks.iter().find(|c| c.name == "cfl").unwrap();
        assert!(!cfl.passed && cfl.detail.contains("0.000774443368828"));
        assert!(r.blocks(false) && !r.blocks(true));
    }

    #[test]
    fn low_harvest_cap_fails() {
        let mut c = RunConfig::default();
        c.objective.c_bar = Some(1.0);
        let r = validate(&c);
        let cap = r.checks.iter().find(|c| c.name == "harvest cap").unwrap();
        assert!(!cap.passed && cap.detail.contains("12.8125"));
        assert!(r.blocks(true));
        assert!(r.checks.iter().any(|c| c.name == "cfl"));
    }

    #[test]
    fn bad_growth_reported() {
        let mut c = RunConfig::default();
        c.growth.x = Some(50.0);
        let r = validate(&c);
        assert!(!r.checks[0].passed);
        assert!(r.to_string().starts_with("FAIL growth"));
    }

    #[test]
    fn infinite_mu_column_is_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::default();
        c.distort.mu = vec![MuSetting(Mu::Infinite)];
        run_distort(&c, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "u,p,p_distorted_mu=inf");
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[1], cols[2]);
        }
    }
}
