//! Warm-started regularization paths over a `(λ1, λ2)` grid.

use super::{solve_with, Method, Solution, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{Family, PenaltySpec, ProblemData};

/// A penalty grid: `Auto(m)` picks `m` values, `Values` is used as given.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Auto(usize),
    Values(Vec<f64>),
}

impl Grid {
    /// Parses `auto:<m>` or a comma-separated list.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(m) = s.strip_prefix("auto:") {
            let m: usize = m.trim().parse().map_err(|_| Error::Parse(format!("bad grid size in {s:?}")))?;
            if m == 0 {
                return Err(Error::Config("grid size must be positive".into()));
            }
            return Ok(Grid::Auto(m));
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad grid value {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("grid values must be finite and non-negative: {s:?}")));
        }
        Ok(Grid::Values(values))
    }
}

/// Smallest `λ1` for which `β = 0` is optimal.
pub fn lambda1_max(problem: &ProblemData, family: Family) -> Result<f64> {
    let xty = problem.xty();
    match family {
        Family::ElasticNet => Ok(xty.iter().fold(0.0_f64, |m, v| m.max(v.abs()))),
        Family::GroupLinfOne => {
            let groups = problem.groups().ok_or_else(|| Error::Config("group penalty requires a column partition".into()))?;
            Ok(groups.iter().map(|g| g.iter().map(|&j| xty[j].abs()).sum::<f64>()).fold(0.0, f64::max))
        }
    }
}

fn logspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![10f64.powf(lo)];
    }
    (0..m).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (m - 1) as f64)).collect()
}

/// Descending `λ1` values from `λ1max` down three decades.
pub fn lambda1_grid(problem: &ProblemData, family: Family, grid: &Grid) -> Result<Vec<f64>> {
    match grid {
        Grid::Values(v) => Ok(v.clone()),
        Grid::Auto(m) => {
            let top = lambda1_max(problem, family)?;
            Ok(logspace(0.0, -3.0, *m).into_iter().map(|f| top * f).collect())
        }
    }
}

/// Ascending `λ2` values on `[1e-2, 1e2]`.
pub fn lambda2_grid(grid: &Grid) -> Vec<f64> {
    match grid {
        Grid::Values(v) => v.clone(),
        Grid::Auto(m) => logspace(-2.0, 2.0, *m),
    }
}

#[derive(Debug)]
pub struct PathCell {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Index of the cell whose solution seeded this one.
    pub warm_from: Option<usize>,
    pub result: Result<Solution>,
}

/// Cells are stored row-major: one row per `λ2`, `λ1` in grid order.
#[derive(Debug)]
pub struct PathResult {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub cells: Vec<PathCell>,
}

impl PathResult {
    pub fn cell(&self, i2: usize, i1: usize) -> &PathCell {
        &self.cells[i2 * self.lambda1.len() + i1]
    }
}

/// Solves every cell, warm-starting each `λ1` from the previous one in its row.
/// A failed cell is recorded and the next one starts cold.
pub fn solve_path(
    problem: &ProblemData,
    family: Family,
    lambda1: &Grid,
    lambda2: &Grid,
    config: &SolverConfig,
    method: &Method,
) -> Result<PathResult> {
    let l1s = lambda1_grid(problem, family, lambda1)?;
    let l2s = lambda2_grid(lambda2);
    let mut cells = Vec::with_capacity(l1s.len() * l2s.len());
    for &l2 in &l2s {
        let mut prev: Option<(usize, Vec<f64>)> = None;
        for &l1 in &l1s {
            let idx = cells.len();
            let mut cfg = config.clone();
            let warm_from = prev.as_ref().map(|(i, _)| *i);
            if let Some((_, b)) = prev.take() {
                cfg.beta0 = Some(b);
            }
            let result = PenaltySpec::new(family, l1, l2).and_then(|pen| solve_with(method, problem, &pen, &cfg));
            if let Ok(sol) = &result {
                prev = Some((idx, sol.beta.clone()));
            }
            cells.push(PathCell { lambda1: l1, lambda2: l2, warm_from, result });
        }
    }
    Ok(PathResult { lambda1: l1s, lambda2: l2s, cells })
}
