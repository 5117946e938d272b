//! Box-counting and two-scale grid estimates of intermediate dimensions.

mod fit;
pub(crate) mod stream;

use ahash::{AHashMap, AHashSet};
use rayon::prelude::*;

pub use fit::{bisect_unit_cost, fit_extrapolation, DeltaRow, EstimateResult, Fit, FIT_MODEL, S_TOL};

use crate::covergen::{cell_key, check_ladder, proof_inner_radius};
use crate::error::{Error, Result};
use crate::formula::formula_dimension;
use crate::setlib::{PointCloud, SetSpec};
use stream::{candidate_radii, plan, run_pass, Histogram};

/// Number of grid cells of diameter `scale` (side `scale/sqrt(d)`) meeting the cloud.
pub fn count_boxes(cloud: &PointCloud, scale: f64) -> Result<u64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param(format!("scale must be positive, got {scale}")));
    }
    let side = scale / (cloud.dim() as f64).sqrt();
    let cells: AHashSet<Vec<i64>> = cloud.points().map(|x| cell_key(x, side)).collect();
    Ok(cells.len() as u64)
}

/// Per-cell norm ranges of a cloud on the grid of diameter `scale`.
fn cloud_cells(cloud: &PointCloud, scale: f64) -> Vec<(f64, f64)> {
    let side = scale / (cloud.dim() as f64).sqrt();
    let mut cells: AHashMap<Vec<i64>, (f64, f64)> = AHashMap::new();
    for x in cloud.points() {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        cells
            .entry(cell_key(x, side))
            .and_modify(|v| {
                v.0 = v.0.min(n);
                v.1 = v.1.max(n);
            })
            .or_insert((n, n));
    }
    cells.into_values().collect()
}

fn two_scale_cost(inner: &[u64], outer: &[u64], k: usize, big: f64, delta: f64, s: f64) -> f64 {
    inner[k] as f64 * big.powf(s) + outer[k] as f64 * delta.powf(s)
}

/// Cheapest two-scale grid cover of the cloud: cells of diameter `delta^theta`
/// meeting the ball of radius `r` about the origin, cells of diameter `delta`
/// meeting the rest. Minimises over `r` in 0, the cloud extent and
/// `candidates`; returns `(cost, r)` at exponent `s`. At `theta = 1` both
/// scales coincide and the split is irrelevant, so `r = 0`.
pub fn two_scale_estimate(
    cloud: &PointCloud,
    theta: f64,
    delta: f64,
    s: f64,
    candidates: &[f64],
) -> Result<(f64, f64)> {
    if cloud.is_empty() {
        return Err(Error::Empty("point cloud".into()));
    }
    if !(delta > 0.0 && delta < 1.0) || !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param("need delta in (0, 1) and theta in (0, 1]"));
    }
    if theta == 1.0 {
        return Ok((count_boxes(cloud, delta)? as f64 * delta.powf(s), 0.0));
    }
    let extent = cloud
        .points()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut radii = vec![0.0, extent];
    radii.extend(candidates.iter().copied().filter(|r| r.is_finite() && *r >= 0.0));
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let big = delta.powf(theta);
    let inner: Vec<u64> = {
        let cells = cloud_cells(cloud, big);
        radii
            .iter()
            .map(|r| cells.iter().filter(|c| c.0 <= *r).count() as u64)
            .collect()
    };
    let outer: Vec<u64> = {
        let cells = cloud_cells(cloud, delta);
        radii
            .iter()
            .map(|r| cells.iter().filter(|c| c.1 > *r).count() as u64)
            .collect()
    };
    let (k, cost) = (0..radii.len())
        .map(|k| (k, two_scale_cost(&inner, &outer, k, big, delta, s)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least two radii");
    Ok((cost, radii[k]))
}

/// Sampling chord: the coarsest `base * 2^k` not above `scale / 4`.
fn pass_step(base: f64, scale: f64) -> f64 {
    let mut h = base;
    while 2.0 * h <= scale / 4.0 {
        h *= 2.0;
    }
    h
}

fn histogram(spec: &SetSpec, scale: f64, base: f64, budget: u64, radii: Vec<f64>) -> Result<Histogram> {
    let side = scale / (spec.ambient_dim() as f64).sqrt();
    let plan = plan(spec, side, budget)?;
    run_pass(&plan, side, pass_step(base, scale), radii)
}

/// Two-scale grid estimate of the upper intermediate dimension at `theta`.
///
/// For each delta the set is streamed on grids of diameter `delta` and
/// `delta^theta`; `s*` is the smallest exponent at which the cheapest split
/// radius gives unit cost. The points sampled along curves and spheres are
/// spaced `diameter / budget` apart (doubled while still below a quarter
/// cell); point families must have at most `budget` enumerated indices.
pub fn estimate_dimension(spec: &SetSpec, theta: f64, deltas: &[f64], budget: u64) -> Result<EstimateResult> {
    spec.validate()?;
    check_ladder(deltas)?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(format!("theta must lie in (0, 1], got {theta}")));
    }
    if budget == 0 {
        return Err(Error::BudgetTooSmall {
            budget,
            reason: "budget must be positive".into(),
        });
    }
    let d = spec.ambient_dim();
    if d > 4 {
        return Err(Error::Unsupported(format!("estimates support d <= 4, got {d}")));
    }
    let diam = spec.diameter();
    let base = diam / budget as f64;
    let finest = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    if base >= finest / 4.0 {
        return Err(Error::BudgetTooSmall {
            budget,
            reason: format!("sample spacing {base:e} is not below a quarter of delta={finest:e}"),
        });
    }
    let target = formula_dimension(spec, theta);
    let s_max = d as f64;

    let rows = deltas
        .par_iter()
        .map(|&delta| -> Result<DeltaRow> {
            if theta == 1.0 {
                let h = histogram(spec, delta, base, budget, vec![0.0])?;
                let n = h.total as f64;
                let s_star = bisect_unit_cost(|s| n * delta.powf(s), s_max);
                return Ok(DeltaRow {
                    delta,
                    s_star,
                    inner_radius: 0.0,
                    cost_residual: n * delta.powf(s_star) - 1.0,
                });
            }
            let big = delta.powf(theta);
            let extra: Vec<f64> = target
                .and_then(|s| proof_inner_radius(spec, delta, theta, s))
                .into_iter()
                .collect();
            let radii = candidate_radii(delta, diam, &extra);
            let (outer, inner) = rayon::join(
                || histogram(spec, delta, base, budget, radii.clone()),
                || histogram(spec, big, base, budget, radii.clone()),
            );
            let (outer, inner) = (outer?, inner?);
            let cost = |s: f64| -> (f64, usize) {
                (0..radii.len())
                    .map(|k| (two_scale_cost(&inner.inner, &outer.outer, k, big, delta, s), k))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("non-empty radii")
            };
            let s_star = bisect_unit_cost(|s| cost(s).0, s_max);
            let (c, k) = cost(s_star);
            Ok(DeltaRow {
                delta,
                s_star,
                inner_radius: radii[k],
                cost_residual: c - 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EstimateResult::from_rows(theta, rows, target)
}
