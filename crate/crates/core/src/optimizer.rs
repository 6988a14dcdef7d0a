//! Bounded one-dimensional search for the dephasing rate that maximises the
//! steady-state current.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::model::DephasingResponse;
use crate::{Error, Result};

/// Results this close (in J) to a bound are reported as clipped.
pub const CLIP_TOLERANCE: f64 = 1e-3;
/// Relative spread of objective values treated as a plateau.
pub const PLATEAU_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Status {
    Interior,
    ClippedLow,
    ClippedHigh,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Interior => "Interior",
            Status::ClippedLow => "ClippedLow",
            Status::ClippedHigh => "ClippedHigh",
            Status::Failed => "Failed",
        }
    }

    pub fn is_clipped(self) -> bool {
        matches!(self, Status::ClippedLow | Status::ClippedHigh)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Interior" => Ok(Status::Interior),
            "ClippedLow" => Ok(Status::ClippedLow),
            "ClippedHigh" => Ok(Status::ClippedHigh),
            "Failed" => Ok(Status::Failed),
            other => Err(Error::InvalidParameter(format!("unknown status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub lower: f64,
    pub upper: f64,
    pub grid_points: usize,
    /// Target relative width of the final bracket in `Γ`.
    pub rel_tolerance: f64,
    pub record_curve: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            lower: 1e-3,
            upper: 50.0,
            grid_points: 40,
            rel_tolerance: 1e-4,
            record_curve: false,
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.upper > self.lower && self.upper.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "search bounds must satisfy 0 < lower < upper, got ({}, {})",
                self.lower, self.upper
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidParameter(
                "search grid needs at least 2 points".into(),
            ));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "relative tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.lower, self.upper, self.grid_points)
    }

    pub fn classify(&self, gamma: f64) -> Status {
        if gamma - self.lower <= CLIP_TOLERANCE {
            Status::ClippedLow
        } else if self.upper - gamma <= CLIP_TOLERANCE {
            Status::ClippedHigh
        } else {
            Status::Interior
        }
    }
}

/// `n` points evenly spaced in `ln x` from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub gamma_opt: f64,
    pub current_max: f64,
    pub status: Status,
    pub evaluations: usize,
    pub failures: usize,
    pub curve_samples: Option<Vec<(f64, f64)>>,
}

impl OptimizationResult {
    pub fn failed(evaluations: usize, failures: usize) -> Self {
        Self {
            gamma_opt: f64::NAN,
            current_max: f64::NAN,
            status: Status::Failed,
            evaluations,
            failures,
            curve_samples: None,
        }
    }
}

/// Objective evaluations seen so far, with failed trial points skipped.
pub struct Tracker<'a> {
    objective: &'a mut dyn FnMut(f64) -> Result<f64>,
    pub evaluations: usize,
    pub failures: usize,
    best: Option<(f64, f64)>,
}

impl<'a> Tracker<'a> {
    pub fn new(objective: &'a mut dyn FnMut(f64) -> Result<f64>) -> Self {
        Self {
            objective,
            evaluations: 0,
            failures: 0,
            best: None,
        }
    }

    /// Evaluates at `x`; failures come back as `None` and are counted.
    pub fn eval(&mut self, x: f64) -> Option<f64> {
        self.evaluations += 1;
        match (self.objective)(x) {
            Ok(v) if v.is_finite() => {
                self.offer(x, v);
                Some(v)
            }
            _ => {
                self.failures += 1;
                None
            }
        }
    }

    fn offer(&mut self, x: f64, v: f64) {
        let replace = match self.best {
            None => true,
            Some((bx, bv)) => {
                let tol = PLATEAU_TOLERANCE * bv.abs().max(v.abs());
                v > bv + tol || ((v - bv).abs() <= tol && x < bx)
            }
        };
        if replace {
            self.best = Some((x, v));
        }
    }

    pub fn best(&self) -> Option<(f64, f64)> {
        self.best
    }
}

/// A strategy for maximising a scalar objective over `[lower, upper]`.
pub trait PeakFinder: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn maximize(
        &self,
        objective: &mut dyn FnMut(f64) -> Result<f64>,
        opts: &SearchOptions,
    ) -> OptimizationResult;
}

/// Log-spaced scan followed by golden-section refinement in `ln Γ` around
/// the best grid point.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogGolden;

/// Log-spaced scan only.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridScan;

fn scan(tracker: &mut Tracker<'_>, grid: &[f64], record: bool) -> Vec<(f64, f64)> {
    let mut curve = Vec::new();
    for &g in grid {
        if let Some(v) = tracker.eval(g) {
            if record {
                curve.push((g, v));
            }
        }
    }
    curve
}

fn finish(
    tracker: &Tracker<'_>,
    opts: &SearchOptions,
    curve: Vec<(f64, f64)>,
) -> OptimizationResult {
    match tracker.best() {
        None => OptimizationResult::failed(tracker.evaluations, tracker.failures),
        Some((g, v)) => OptimizationResult {
            gamma_opt: g,
            current_max: v,
            status: opts.classify(g),
            evaluations: tracker.evaluations,
            failures: tracker.failures,
            curve_samples: opts.record_curve.then_some(curve),
        },
    }
}

impl PeakFinder for GridScan {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn maximize(
        &self,
        objective: &mut dyn FnMut(f64) -> Result<f64>,
        opts: &SearchOptions,
    ) -> OptimizationResult {
        let mut tracker = Tracker::new(objective);
        let curve = scan(&mut tracker, &opts.grid(), opts.record_curve);
        finish(&tracker, opts, curve)
    }
}

impl PeakFinder for LogGolden {
    fn name(&self) -> &'static str {
        "log-golden"
    }

    fn maximize(
        &self,
        objective: &mut dyn FnMut(f64) -> Result<f64>,
        opts: &SearchOptions,
    ) -> OptimizationResult {
        let grid = opts.grid();
        let mut tracker = Tracker::new(objective);
        let curve = scan(&mut tracker, &grid, opts.record_curve);
        let Some((g_best, _)) = tracker.best() else {
            return finish(&tracker, opts, curve);
        };
        let k = grid.iter().position(|&g| g == g_best).unwrap_or(0);
        let mut a = grid[k.saturating_sub(1)].ln();
        let mut b = grid[(k + 1).min(grid.len() - 1)].ln();
        let tol = opts.rel_tolerance.ln_1p();

        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let score = |v: Option<f64>| v.unwrap_or(f64::NEG_INFINITY);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = score(tracker.eval(c.exp()));
        let mut fd = score(tracker.eval(d.exp()));
        while b - a > tol {
            // Ties move left so plateaus resolve toward small Γ.
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = score(tracker.eval(c.exp()));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = score(tracker.eval(d.exp()));
            }
        }
        finish(&tracker, opts, curve)
    }
}

/// Maximises `I_ss(Γ)` for a prepared chain.
pub fn find_optimal_dephasing(
    response: &dyn DephasingResponse,
    finder: &dyn PeakFinder,
    opts: &SearchOptions,
) -> OptimizationResult {
    finder.maximize(&mut |g| response.current(g), opts)
}

/// Minimises the steady-state population variance; `current_max` of the
/// returned result holds the minimum variance.
pub fn minimize_population_variance(
    response: &dyn DephasingResponse,
    finder: &dyn PeakFinder,
    opts: &SearchOptions,
) -> OptimizationResult {
    let mut r = finder.maximize(&mut |g| response.population_variance(g).map(|v| -v), opts);
    r.current_max = -r.current_max;
    if let Some(curve) = r.curve_samples.as_mut() {
        curve.iter_mut().for_each(|p| p.1 = -p.1);
    }
    r
}

/// At most one sign change (rise then fall) in the successive differences.
pub fn is_single_peaked(values: &[f64]) -> bool {
    let signs: Vec<bool> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(|d| d > 0.0)
        .collect();
    !signs.windows(2).any(|s| !s[0] && s[1])
}
