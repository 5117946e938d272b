//! Two-scale covers: the constructive inner-ball / outer-piece covers with
//! closed-form counts, concrete grid covers of point clouds, and the
//! cover-based upper estimate.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use ahash::AHashSet;
use rayon::prelude::*;

use crate::boxcount::{bisect_unit_cost, DeltaRow, EstimateResult};
use crate::error::{Error, Result};
use crate::formula::formula_dimension;
use crate::setlib::{curve_of, parse_number, Curve, PointCloud, SetSpec};

/// Bands per recursion level in [`sphere_cover_count`]; finer band
/// structures are merged into this many groups.
const MAX_BAND_GROUPS: usize = 2048;

/// `xi_d` with `sphere_cover_count(d, R, r) <= xi_d (R/r)^{d-1}`.
pub fn xi(d: usize) -> f64 {
    if d <= 2 {
        8.0
    } else {
        (4.0 * (d as f64).sqrt()).powi(d as i32 - 1)
    }
}

/// Number of sets of diameter at most `r` in an explicit cover of the
/// (d-1)-sphere of radius `big_r`. Circles are cut into equal arcs; higher
/// spheres into latitude bands, each band covered as a product of its
/// polar interval with a cover of its widest cross-section.
pub fn sphere_cover_count(d: usize, big_r: f64, r: f64) -> u64 {
    if big_r <= r {
        return 1;
    }
    let n = count_rec(d - 1, big_r, r);
    n.min(u64::MAX as f64) as u64
}

fn count_rec(k: usize, big_r: f64, r: f64) -> f64 {
    if big_r <= 0.0 || 2.0 * big_r <= r {
        return 1.0;
    }
    if k == 1 {
        return (PI / (r / (2.0 * big_r)).asin()).ceil();
    }
    let kf = k as f64;
    let bands = (PI * big_r * kf.sqrt() / r).ceil();
    let sub_r = r * ((kf - 1.0) / kf).sqrt();
    let groups = (bands as usize).clamp(1, MAX_BAND_GROUPS);
    let per_group = (bands / groups as f64).ceil();
    let width = PI / bands;
    let mut total = 0.0;
    let mut start = 0.0;
    while start < bands {
        let stop = (start + per_group).min(bands);
        let (a, b) = (start * width, stop * width);
        let widest = if a <= PI / 2.0 && b >= PI / 2.0 {
            1.0
        } else {
            a.sin().max(b.sin())
        };
        total += (stop - start) * count_rec(k - 1, big_r * widest, sub_r);
        start = stop;
    }
    total
}

/// Counts of a two-scale cover: an inner grid at scale `delta^theta` over the
/// ball `B(0, inner_radius)` and `delta`-sets for each outer piece.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverCounts {
    pub family: String,
    pub delta: f64,
    pub theta: f64,
    pub s: f64,
    pub cutoff_m: u64,
    pub inner_radius: f64,
    pub inner_boxes: u64,
    /// `(2 sqrt(d) R / delta^theta + 1)^d`, the binomial grid term bounding `inner_boxes`.
    pub grid_bound: f64,
    pub outer_per_sphere: Vec<u64>,
    pub xi_d: f64,
}

impl CoverCounts {
    pub fn outer_total(&self) -> f64 {
        self.outer_per_sphere.iter().map(|&n| n as f64).sum()
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let outer: Vec<String> = self.outer_per_sphere.iter().map(|n| n.to_string()).collect();
        writeln!(out, "family={}", self.family)?;
        writeln!(out, "delta={}", self.delta)?;
        writeln!(out, "theta={}", self.theta)?;
        writeln!(out, "s={}", self.s)?;
        writeln!(out, "cutoff_M={}", self.cutoff_m)?;
        writeln!(out, "inner_radius={}", self.inner_radius)?;
        writeln!(out, "inner_boxes={}", self.inner_boxes)?;
        writeln!(out, "grid_bound={}", self.grid_bound)?;
        writeln!(out, "xi_d={}", self.xi_d)?;
        writeln!(out, "outer_total={}", self.outer_total())?;
        writeln!(out, "outer_per_sphere={}", outer.join(","))?;
        Ok(())
    }

    pub fn read_text<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected key=value"))?;
            map.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| map.get(k).cloned().ok_or_else(|| Error::parse(k, "missing key"));
        let num = |k: &str| get(k).and_then(|v| parse_number(&v));
        let int = |k: &str| get(k).and_then(|v| v.parse::<u64>().map_err(|_| Error::parse(v, "expected an integer")));
        let outer_raw = get("outer_per_sphere")?;
        let outer_per_sphere = if outer_raw.is_empty() {
            Vec::new()
        } else {
            outer_raw
                .split(',')
                .map(|v| v.parse::<u64>().map_err(|_| Error::parse(v, "expected an integer")))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(CoverCounts {
            family: get("family")?,
            delta: num("delta")?,
            theta: num("theta")?,
            s: num("s")?,
            cutoff_m: int("cutoff_M")?,
            inner_radius: num("inner_radius")?,
            inner_boxes: int("inner_boxes")?,
            grid_bound: num("grid_bound")?,
            outer_per_sphere,
            xi_d: num("xi_d")?,
        })
    }
}

/// `count * scale^s`, in the log domain for large counts.
fn term(count: f64, scale: f64, s: f64) -> f64 {
    if count <= 0.0 {
        0.0
    } else if count > 1e12 {
        (count.ln() + s * scale.ln()).exp()
    } else {
        count * scale.powf(s)
    }
}

/// `inner_boxes delta^{theta s} + sum_i outer_i delta^s`.
pub fn cover_cost(counts: &CoverCounts, delta: f64, theta: f64, s: f64) -> f64 {
    term(counts.inner_boxes as f64, delta.powf(theta), s) + term(counts.outer_total(), delta, s)
}

fn check_window(delta: f64, theta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(format!("theta must lie in (0, 1], got {theta}")));
    }
    Ok(())
}

/// Family data needed by the constructive covers.
enum Family {
    /// Radii `i^{-p}` in R^1, one point each.
    Fp {
        p: f64,
    },
    Spheres {
        d: usize,
        p: f64,
    },
    Points {
        p: f64,
        l: f64,
        count: crate::setlib::CountRule,
    },
    Graph {
        curve: Curve,
        p: f64,
        q: f64,
    },
}

impl Family {
    fn of(spec: &SetSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            SetSpec::FpSequence { p } => Family::Fp { p: *p },
            SetSpec::ConcentricSpheres {
                d,
                radii: crate::setlib::RadiusSequence::Power { p },
            } => Family::Spheres { d: *d, p: *p },
            SetSpec::IsolatedPoints { p, count } => {
                let l = count.growth_exponent().ok_or_else(|| {
                    Error::Unsupported("isolated points with exponential counts have no finite growth exponent".into())
                })?;
                Family::Points {
                    p: *p,
                    l,
                    count: count.clone(),
                }
            }
            SetSpec::AttenuatedSine { p, q } => Family::Graph {
                curve: curve_of(spec).expect("graph"),
                p: *p,
                q: *q,
            },
            SetSpec::ProductSine { p } => Family::Graph {
                curve: curve_of(spec).expect("graph"),
                p: *p,
                q: 0.0,
            },
            _ => return Err(Error::Unsupported(format!("no constructive cover for `{spec}`"))),
        })
    }

    fn dim(&self) -> usize {
        match self {
            Family::Fp { .. } => 1,
            Family::Spheres { d, .. } => *d,
            _ => 2,
        }
    }

    fn p(&self) -> f64 {
        match self {
            Family::Fp { p } | Family::Spheres { p, .. } | Family::Points { p, .. } | Family::Graph { p, .. } => *p,
        }
    }

    /// The cutoff prescribed by the construction at exponent `s`.
    fn cutoff(&self, delta: f64, theta: f64, s: f64) -> u64 {
        let exponent = match *self {
            Family::Fp { p } => (s - theta * s + theta) / (1.0 + p),
            Family::Spheres { d, p } => {
                let d = d as f64;
                if p * (d - 1.0) < 1.0 {
                    (1.0 - (1.0 - theta) * (d - s)) / (1.0 + p)
                } else {
                    1.0 / (1.0 + p)
                }
            }
            Family::Points { p, l, .. } => (s - theta * s + theta * 2.0) / (l + p * 2.0),
            Family::Graph { p, q, .. } => {
                if p * q < 1.0 {
                    (s - theta * s + 2.0 * theta - 1.0) / (1.0 + p)
                } else {
                    1.0 / (p * (1.0 + q))
                }
            }
        };
        ceil_cutoff(delta.powf(-exponent))
    }

    /// Cover count of the `i`-th outer piece at scale `delta`.
    fn outer_count(&self, i: usize, delta: f64, arc_lengths: &[f64]) -> u64 {
        match self {
            Family::Fp { .. } => 1,
            Family::Spheres { d, p } => sphere_cover_count(*d, (i as f64).powf(-p), delta),
            Family::Points { count, .. } => count.count(i),
            Family::Graph { .. } => (arc_lengths[i - 1] / delta).ceil().max(1.0) as u64,
        }
    }

    /// Number of `delta^theta`-sets covering everything with index `>= m`.
    fn inner_count(&self, radius: f64, inner: f64) -> (u64, f64) {
        let d = self.dim() as f64;
        match self {
            Family::Fp { .. } => {
                let n = (radius / inner).ceil().max(1.0);
                (n as u64, radius / inner + 1.0)
            }
            Family::Spheres { .. } | Family::Points { .. } => {
                let per_axis = (2.0 * d.sqrt() * radius / inner).ceil().max(1.0);
                let bound = (2.0 * d.sqrt() * radius / inner + 1.0).powf(d);
                (per_axis.powf(d).min(u64::MAX as f64) as u64, bound)
            }
            Family::Graph { q, .. } => {
                // Columns of side a over x in [0, radius]; column i holds the
                // envelope |y| <= (i a)^q.
                let a = inner / 2f64.sqrt();
                let cols = (radius / a).ceil().max(1.0) as u64;
                let mut n = 0u64;
                for i in 1..=cols {
                    let amp = ((i as f64) * a).min(radius).powf(*q);
                    n = n.saturating_add((2.0 * amp / a).ceil().max(1.0) as u64);
                }
                let bound = (radius / a + 1.0) * (2.0 * radius.powf(*q) / a + 1.0);
                (n, bound)
            }
        }
    }
}

fn ceil_cutoff(x: f64) -> u64 {
    if !x.is_finite() || x > 1e15 {
        return 1_000_000_000_000_000;
    }
    // Tolerate rounding just above an integer.
    let r = x.round();
    let m = if (x - r).abs() < 1e-9 * r.max(1.0) { r } else { x.ceil() };
    (m as u64).max(1)
}

/// Largest cutoff any cover built here will use.
const MAX_OUTER_PIECES: u64 = 50_000_000;

fn arc_lengths(fam: &Family, m: u64) -> Vec<f64> {
    match fam {
        Family::Graph { curve, .. } => (1..m.max(1))
            .into_par_iter()
            .map(|i| curve.arc_length(i as f64, i as f64 + 1.0, 1e-10))
            .collect(),
        _ => Vec::new(),
    }
}

fn counts_for_m(
    fam: &Family,
    spec: &SetSpec,
    delta: f64,
    theta: f64,
    s: f64,
    m: u64,
    arcs: &[f64],
) -> Result<CoverCounts> {
    if m > MAX_OUTER_PIECES {
        return Err(Error::ResourceLimit(format!(
            "cutoff M={m} exceeds the limit of {MAX_OUTER_PIECES} outer pieces"
        )));
    }
    let inner = delta.powf(theta);
    let radius = (m as f64).powf(-fam.p());
    let (inner_boxes, grid_bound) = fam.inner_count(radius, inner);
    let outer_per_sphere = (1..m as usize).map(|i| fam.outer_count(i, delta, arcs)).collect();
    Ok(CoverCounts {
        family: spec.family_name().to_string(),
        delta,
        theta,
        s,
        cutoff_m: m,
        inner_radius: radius,
        inner_boxes,
        grid_bound,
        outer_per_sphere,
        xi_d: xi(fam.dim()),
    })
}

/// The constructive cover with the prescribed cutoff at exponent `s`.
pub fn build_theorem_cover(spec: &SetSpec, delta: f64, theta: f64, s: f64) -> Result<CoverCounts> {
    check_window(delta, theta)?;
    let fam = Family::of(spec)?;
    let d = fam.dim() as f64;
    if !(s > 0.0 && s <= d) {
        return Err(Error::param(format!("s must lie in (0, {d}], got {s}")));
    }
    let m = fam.cutoff(delta, theta, s);
    build_cover_with_cutoff_inner(&fam, spec, delta, theta, s, m)
}

/// Same construction with an explicit cutoff `m >= 1`; `s` is only recorded.
pub fn build_cover_with_cutoff(spec: &SetSpec, delta: f64, theta: f64, s: f64, m: u64) -> Result<CoverCounts> {
    check_window(delta, theta)?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::param(format!("s must be finite and >= 0, got {s}")));
    }
    if m == 0 {
        return Err(Error::param("cutoff must be >= 1"));
    }
    let fam = Family::of(spec)?;
    build_cover_with_cutoff_inner(&fam, spec, delta, theta, s, m)
}

/// The construction's cutoff `M` at exponent `s`.
pub(crate) fn theorem_cutoff(spec: &SetSpec, delta: f64, theta: f64, s: f64) -> Result<u64> {
    Ok(Family::of(spec)?.cutoff(delta, theta, s))
}

/// Radius `M^{-p}` below which the construction switches to coarse boxes,
/// when the family has one.
pub(crate) fn proof_inner_radius(spec: &SetSpec, delta: f64, theta: f64, s: f64) -> Option<f64> {
    let fam = Family::of(spec).ok()?;
    let m = fam.cutoff(delta, theta, s);
    Some((m as f64).powf(-fam.p()))
}

fn build_cover_with_cutoff_inner(
    fam: &Family,
    spec: &SetSpec,
    delta: f64,
    theta: f64,
    s: f64,
    m: u64,
) -> Result<CoverCounts> {
    if m > MAX_OUTER_PIECES {
        return Err(Error::ResourceLimit(format!("cutoff M={m} too large")));
    }
    let arcs = arc_lengths(fam, m);
    counts_for_m(fam, spec, delta, theta, s, m, &arcs)
}

/// Cover-based upper estimate: for each delta the smallest `s` at which the
/// cheapest cover over a ladder of cutoffs has unit cost, then the
/// `a + b/log(1/delta)` extrapolation.
pub fn upper_dim_estimate(spec: &SetSpec, theta: f64, deltas: &[f64]) -> Result<EstimateResult> {
    check_ladder(deltas)?;
    for &d in deltas {
        check_window(d, theta)?;
    }
    let fam = Family::of(spec)?;
    let d = fam.dim() as f64;

    let ladders: Vec<Vec<u64>> = deltas
        .iter()
        .map(|&delta| cutoff_ladder(&fam, delta, theta, d))
        .collect();
    let m_max = ladders.iter().flatten().copied().max().unwrap_or(1);
    if m_max > MAX_OUTER_PIECES {
        return Err(Error::ResourceLimit(format!("cutoff ladder reaches M={m_max}")));
    }
    let arcs = arc_lengths(&fam, m_max);

    let rows = deltas
        .par_iter()
        .zip(ladders.par_iter())
        .map(|(&delta, ladder)| {
            let m_top = *ladder.last().unwrap();
            // Prefix sums of outer counts make every ladder entry O(1).
            let mut prefix = Vec::with_capacity(m_top as usize);
            let mut acc = 0.0;
            prefix.push(0.0);
            for i in 1..m_top as usize {
                acc += fam.outer_count(i, delta, &arcs) as f64;
                prefix.push(acc);
            }
            let inner_scale = delta.powf(theta);
            let options: Vec<(f64, f64, f64)> = ladder
                .iter()
                .map(|&m| {
                    let radius = (m as f64).powf(-fam.p());
                    let (inner, _) = fam.inner_count(radius, inner_scale);
                    (inner as f64, prefix[m as usize - 1], radius)
                })
                .collect();
            let cost = |s: f64| {
                options
                    .iter()
                    .map(|&(i, o, _)| term(i, inner_scale, s) + term(o, delta, s))
                    .fold(f64::INFINITY, f64::min)
            };
            let s_star = bisect_unit_cost(cost, d);
            let (_, _, radius) = options
                .iter()
                .copied()
                .min_by(|a, b| {
                    let ca = term(a.0, inner_scale, s_star) + term(a.1, delta, s_star);
                    let cb = term(b.0, inner_scale, s_star) + term(b.1, delta, s_star);
                    ca.total_cmp(&cb)
                })
                .unwrap();
            DeltaRow {
                delta,
                s_star,
                inner_radius: radius,
                cost_residual: cost(s_star) - 1.0,
            }
        })
        .collect();
    EstimateResult::from_rows(theta, rows, formula_dimension(spec, theta))
}

fn cutoff_ladder(fam: &Family, delta: f64, theta: f64, d: f64) -> Vec<u64> {
    let mut ms: Vec<u64> = (1..=64)
        .map(|k| fam.cutoff(delta, theta, d * k as f64 / 64.0))
        .collect();
    let brackets: Vec<u64> = ms
        .iter()
        .flat_map(|&m| {
            let lo = if m.is_power_of_two() {
                m
            } else {
                m.next_power_of_two() / 2
            };
            [lo.max(1), m.next_power_of_two()]
        })
        .collect();
    ms.extend(brackets);
    ms.sort_unstable();
    ms.dedup();
    ms
}

pub(crate) fn check_ladder(deltas: &[f64]) -> Result<()> {
    if deltas.len() < 4 {
        return Err(Error::param(format!(
            "need at least 4 delta values, got {}",
            deltas.len()
        )));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(Error::param("every delta must lie in (0, 1)"));
    }
    Ok(())
}

/// One axis-aligned cube of the cover, identified by centre and diameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverElement {
    pub center: Vec<f64>,
    pub diameter: f64,
}

impl CoverElement {
    /// Closed cube of side `diameter / sqrt(d)`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let half = self.diameter / (self.center.len() as f64).sqrt() / 2.0;
        let slack = 1e-12 * self.diameter;
        self.center.iter().zip(x).all(|(c, v)| (v - c).abs() <= half + slack)
    }
}

/// A finite cover together with its diameter window `[delta, delta^theta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub elements: Vec<CoverElement>,
    pub delta: f64,
    pub theta: f64,
}

impl Cover {
    /// Every diameter lies in `[delta, delta^theta]`.
    pub fn window_ok(&self) -> bool {
        let hi = self.delta.powf(self.theta);
        self.elements
            .iter()
            .all(|e| e.diameter >= self.delta && e.diameter <= hi)
    }

    /// Every point of the witness cloud lies in some element.
    pub fn covers(&self, cloud: &PointCloud) -> bool {
        let d = cloud.dim();
        let mut by_scale: BTreeMap<u64, AHashSet<Vec<i64>>> = BTreeMap::new();
        for e in &self.elements {
            if e.center.len() != d {
                return false;
            }
            let side = e.diameter / (d as f64).sqrt();
            let key: Vec<i64> = e.center.iter().map(|c| (c / side - 0.5).round() as i64).collect();
            by_scale.entry(e.diameter.to_bits()).or_default().insert(key);
        }
        cloud.points().all(|x| {
            let hit = by_scale.iter().any(|(bits, cells)| {
                let side = f64::from_bits(*bits) / (d as f64).sqrt();
                cells.contains(&cell_key(x, side))
            });
            hit || self.elements.iter().any(|e| e.contains(x))
        })
    }

    pub fn cost(&self, s: f64) -> f64 {
        self.elements.iter().map(|e| e.diameter.powf(s)).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.elements.first().map_or(0, |e| e.center.len());
        writeln!(out, "# delta={} theta={}", self.delta, self.theta)?;
        let mut header: Vec<String> = (1..=d).map(|k| format!("c{k}")).collect();
        header.push("diameter".into());
        writeln!(out, "{}", header.join(","))?;
        for e in &self.elements {
            let mut row: Vec<String> = e.center.iter().map(|v| v.to_string()).collect();
            row.push(e.diameter.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut lines = text.lines();
        let meta = lines.next().ok_or_else(|| Error::Empty("cover file".into()))?;
        let mut kv = crate::setlib::KeyValues::parse(
            meta.strip_prefix("# ")
                .ok_or_else(|| Error::parse(meta, "expected `# delta=.. theta=..`"))?
                .split_whitespace(),
        )?;
        let delta = kv.take_f64("delta")?;
        let theta = kv.take_f64("theta")?;
        kv.finish()?;
        let header = lines.next().ok_or_else(|| Error::parse("", "missing header"))?;
        let width = header.split(',').count();
        let mut elements = Vec::new();
        for line in lines {
            let vals = line.split(',').map(parse_number).collect::<Result<Vec<_>>>()?;
            if vals.len() != width {
                return Err(Error::parse(line, "wrong field count"));
            }
            let (c, diam) = vals.split_at(width - 1);
            elements.push(CoverElement {
                center: c.to_vec(),
                diameter: diam[0],
            });
        }
        Ok(Cover { elements, delta, theta })
    }
}

pub(crate) fn cell_key(x: &[f64], side: f64) -> Vec<i64> {
    x.iter().map(|v| (v / side).floor() as i64).collect()
}

/// Grid cover of a cloud: points with `|x| <= inner_radius` get cells of
/// diameter `delta^theta`, the rest cells of diameter `delta`. Cells are
/// half-open cubes of side `diameter / sqrt(d)` anchored at the origin.
/// When `delta^theta` already exceeds the diagonal of the cloud's bounding
/// cube the cover is a single element.
pub fn enumerate_grid_cover(cloud: &PointCloud, delta: f64, theta: f64, inner_radius: f64) -> Result<Cover> {
    check_window(delta, theta)?;
    if cloud.is_empty() {
        return Err(Error::Empty("point cloud".into()));
    }
    if !(inner_radius >= 0.0) {
        return Err(Error::param("inner_radius must be >= 0"));
    }
    let d = cloud.dim();
    let coarse = delta.powf(theta);
    let sqrt_d = (d as f64).sqrt();

    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in cloud.points() {
        for k in 0..d {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    if coarse >= sqrt_d * extent {
        let center = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        return Ok(Cover {
            elements: vec![CoverElement {
                center,
                diameter: coarse,
            }],
            delta,
            theta,
        });
    }

    let mut inner_cells = AHashSet::new();
    let mut outer_cells = AHashSet::new();
    let (side_in, side_out) = (coarse / sqrt_d, delta / sqrt_d);
    let single_scale = coarse == delta;
    for x in cloud.points() {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r <= inner_radius || single_scale {
            inner_cells.insert(cell_key(x, side_in));
        } else {
            outer_cells.insert(cell_key(x, side_out));
        }
    }
    let mut elements = Vec::with_capacity(inner_cells.len() + outer_cells.len());
    for (cells, side, diameter) in [(inner_cells, side_in, coarse), (outer_cells, side_out, delta)] {
        let mut keys: Vec<Vec<i64>> = cells.into_iter().collect();
        keys.sort_unstable();
        elements.extend(keys.into_iter().map(|k| CoverElement {
            center: k.iter().map(|&i| (i as f64 + 0.5) * side).collect(),
            diameter,
        }));
    }
    Ok(Cover { elements, delta, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setlib::sample;

    #[test]
    fn circle_counts() {
        assert!(sphere_cover_count(2, 1.0, 0.1) <= 80);
        assert_eq!(sphere_cover_count(2, 1.0, 1.0), 1);
        assert!(sphere_cover_count(3, 1.0, 0.5) as f64 <= xi(3) * 4.0);
    }

    #[test]
    fn cutoff_examples() {
        let c = build_theorem_cover(&SetSpec::concentric_power(2, 0.5), 1e-4, 1.0, 4.0 / 3.0).unwrap();
        assert_eq!(c.cutoff_m, 10f64.powf(8.0 / 3.0).ceil() as u64);
        let t = build_theorem_cover(&SetSpec::AttenuatedSine { p: 1.0, q: 0.5 }, 1e-3, 0.5, 1.2).unwrap();
        assert_eq!(t.cutoff_m, 8);
        assert!(build_theorem_cover(&SetSpec::PolynomialSpiral { p: 0.5 }, 1e-3, 0.5, 1.2).is_err());
        assert!(build_theorem_cover(&SetSpec::concentric_power(2, 0.5), 1e-3, 0.5, 2.5).is_err());
    }

    #[test]
    fn cost_examples() {
        let single = CoverCounts {
            family: "concentric".into(),
            delta: 0.01,
            theta: 0.5,
            s: 2.0,
            cutoff_m: 1,
            inner_radius: 1.0,
            inner_boxes: 1,
            grid_bound: 1.0,
            outer_per_sphere: vec![],
            xi_d: 8.0,
        };
        assert!((cover_cost(&single, 0.01, 0.5, 2.0) - 0.01).abs() < 1e-15);
        let empty = CoverCounts {
            inner_boxes: 0,
            ..single
        };
        assert_eq!(cover_cost(&empty, 0.01, 0.5, 2.0), 0.0);
    }

    #[test]
    fn inner_boxes_respect_grid_bound() {
        for k in [6, 10, 14] {
            let c = build_theorem_cover(&SetSpec::concentric_power(2, 0.5), 2f64.powi(-k), 0.5, 1.2).unwrap();
            assert!(c.inner_boxes as f64 <= c.grid_bound);
        }
    }

    #[test]
    fn counts_text_round_trip() {
        let c = build_theorem_cover(&SetSpec::concentric_power(2, 0.5), 1e-3, 0.5, 1.2).unwrap();
        let mut a = Vec::new();
        c.write_text(&mut a).unwrap();
        let back = CoverCounts::read_text(&a[..]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn single_point_single_element() {
        let cloud = PointCloud::from_points(2, &[[0.3, 0.2]], 1.0).unwrap();
        let c = enumerate_grid_cover(&cloud, 2f64.powi(-10), 0.5, 0.0).unwrap();
        assert_eq!(c.elements.len(), 1);
        assert!(c.covers(&cloud));
    }

    #[test]
    fn grid_cover_is_valid() {
        let spec = SetSpec::concentric_power(2, 0.5);
        let cloud = sample(&spec, 4000, 0.1).unwrap();
        for (theta, r) in [(1.0, 0.0), (0.5, 0.3), (0.7, 2.0)] {
            let c = enumerate_grid_cover(&cloud, 2f64.powi(-9), theta, r).unwrap();
            assert!(c.window_ok());
            assert!(c.covers(&cloud));
        }
        let mut buf = Vec::new();
        let c = enumerate_grid_cover(&cloud, 2f64.powi(-6), 0.5, 0.3).unwrap();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(Cover::read_csv(&buf[..]).unwrap(), c);
    }
}
