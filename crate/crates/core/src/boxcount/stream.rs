//! Streaming occupied-cell counts of a whole set at one grid scale.
//!
//! The set is split into pieces (points, spheres, unit-parameter arcs) sorted
//! by decreasing key, plus a tail region near the origin where consecutive
//! pieces are closer than half a cell; there every cell meeting the region
//! is occupied, so the tail is enumerated analytically instead of sampled.
//! Cells whose smallest possible key exceeds every remaining piece are
//! flushed into per-radius histograms, which keeps the live map small.

use std::f64::consts::PI;

use ahash::AHashMap;

use crate::error::{Error, Result};
use crate::setlib::{curve_of, for_each_sphere_point, CountRule, Curve, RadiusSequence, SetSpec};

/// Upper limit on sampled points in one pass.
const MAX_PASS_POINTS: f64 = 2e10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum KeyKind {
    /// Euclidean norm.
    Norm,
    /// First coordinate (graphs over `x`).
    FirstCoord,
}

#[derive(Debug, Clone)]
pub(crate) enum PieceKind {
    Points(Vec<f64>),
    Sphere(f64),
    Arc(f64, f64),
}

#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub kind: PieceKind,
    /// Largest key of any point of the piece.
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Tail {
    None,
    /// `[0, r]` in R^1.
    Segment(f64),
    Ball(f64),
    /// `(x/ax)^2 + (y/ay)^2 <= 1`.
    Ellipse(f64, f64),
    /// `0 <= x <= x_max`, `|y| <= x^q` (`q = 0` gives `|y| <= 1`).
    Envelope(f64, f64),
}

impl Tail {
    fn hi(&self) -> f64 {
        match *self {
            Tail::None => f64::NEG_INFINITY,
            Tail::Segment(r) | Tail::Ball(r) => r,
            Tail::Ellipse(a, b) => a.max(b),
            Tail::Envelope(x, _) => x,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Plan {
    pub dim: usize,
    pub key: KeyKind,
    pub curve: Option<Curve>,
    pub pieces: Vec<Piece>,
    pub tail: Tail,
    /// Sampled length (or point count) used for the resource guard.
    pub load: f64,
}

/// First index `n >= 1` with `gap(n) < limit`, for gaps eventually decreasing.
fn first_dense(limit: f64, cap: usize, gap: impl Fn(usize) -> f64) -> Result<usize> {
    let mut n = 1;
    while gap(n) >= limit {
        n += 1;
        if n > cap {
            return Err(Error::ResourceLimit(format!(
                "more than {cap} pieces needed before the tail at cell side {limit:e}"
            )));
        }
    }
    Ok(n)
}

const PIECE_CAP: usize = 50_000_000;

/// Decomposition of `spec` for cells of side `side`. `max_index` caps the
/// enumerated index of point families.
pub(crate) fn plan(spec: &SetSpec, side: f64, max_index: u64) -> Result<Plan> {
    let half = side / 2.0;
    let dim = spec.ambient_dim();
    match spec {
        SetSpec::FpSequence { p } => {
            let seq = RadiusSequence::Power { p: *p };
            let n_t = first_dense(half, PIECE_CAP, |n| gap(&seq, n))?;
            check_index(n_t, max_index)?;
            let pieces = (1..n_t)
                .map(|i| {
                    let x = (i as f64).powf(-p);
                    Piece {
                        kind: PieceKind::Points(vec![x]),
                        hi: x,
                    }
                })
                .collect();
            Ok(Plan {
                dim,
                key: KeyKind::Norm,
                curve: None,
                pieces,
                tail: Tail::Segment((n_t as f64).powf(-p)),
                load: n_t as f64,
            })
        }
        SetSpec::ConcentricSpheres { d, radii } => {
            let (n_t, tail) = match radii.len() {
                Some(len) => (len + 1, Tail::None),
                None => {
                    let n_t = first_dense(half, PIECE_CAP, |n| gap(radii, n))?;
                    (n_t, Tail::Ball(radii.term(n_t)?))
                }
            };
            let mut pieces = Vec::with_capacity(n_t);
            let mut load = 0.0;
            for i in 1..n_t {
                let r = radii.term(i)?;
                load += r.powi(*d as i32 - 1);
                pieces.push(Piece {
                    kind: PieceKind::Sphere(r),
                    hi: r,
                });
            }
            Ok(Plan {
                dim,
                key: KeyKind::Norm,
                curve: None,
                pieces,
                tail,
                load,
            })
        }
        SetSpec::IsolatedPoints { p, count } => plan_isolated(*p, count, side, max_index),
        SetSpec::PolynomialSpiral { .. }
        | SetSpec::EllipticalSpiral { .. }
        | SetSpec::ProductSine { .. }
        | SetSpec::AttenuatedSine { .. } => {
            let curve = curve_of(spec).expect("curve family");
            let (n_t, tail, key) = match curve {
                Curve::Spiral { p, q } => {
                    // One revolution is two units of t.
                    let n_t = first_dense(half, PIECE_CAP, |n| {
                        let t = n as f64;
                        (t.powf(-p) - (t + 2.0).powf(-p)).max(t.powf(-q) - (t + 2.0).powf(-q))
                    })?;
                    let t = n_t as f64;
                    let tail = if p == q {
                        Tail::Ball(t.powf(-p))
                    } else {
                        Tail::Ellipse(t.powf(-p), t.powf(-q))
                    };
                    (n_t, tail, KeyKind::Norm)
                }
                Curve::Graph { p, q } => {
                    let n_t = first_dense(half, PIECE_CAP, |n| {
                        let t = n as f64;
                        t.powf(-p) - (t + 1.0).powf(-p)
                    })?;
                    (n_t, Tail::Envelope((n_t as f64).powf(-p), q), KeyKind::FirstCoord)
                }
            };
            let mut load = 0.0;
            let pieces = (1..n_t)
                .map(|i| {
                    let t = i as f64;
                    load += curve.speed_bound(t);
                    let hi = match curve {
                        Curve::Spiral { p, q } => t.powf(-p.min(q)),
                        Curve::Graph { p, .. } => t.powf(-p),
                    };
                    Piece {
                        kind: PieceKind::Arc(t, t + 1.0),
                        hi,
                    }
                })
                .collect();
            Ok(Plan {
                dim,
                key,
                curve: Some(curve),
                pieces,
                tail,
                load,
            })
        }
    }
}

fn plan_isolated(p: f64, count: &CountRule, side: f64, max_index: u64) -> Result<Plan> {
    let half = side / 2.0;
    let seq = RadiusSequence::Power { p };
    let spacing = |i: usize| {
        let r = (i as f64).powf(-p);
        let b = count.count(i) as f64;
        2.0 * r * (std::f64::consts::PI / b).sin()
    };
    let circles = first_dense(half, PIECE_CAP, |n| gap(&seq, n))?;
    let points = first_dense(half, PIECE_CAP, spacing)?;
    let n_t = circles.max(points);
    check_index(n_t, max_index)?;
    let mut pieces = Vec::with_capacity(n_t);
    let mut load = 0.0;
    for i in 1..n_t {
        let r = (i as f64).powf(-p);
        if spacing(i) < half {
            load += r;
            pieces.push(Piece {
                kind: PieceKind::Sphere(r),
                hi: r,
            });
        } else {
            let b = count.count(i);
            load += b as f64 * side;
            let mut pts = Vec::with_capacity(2 * b as usize);
            for j in 0..b {
                let (s, c) = (2.0 * std::f64::consts::PI * j as f64 / b as f64).sin_cos();
                pts.push(r * c);
                pts.push(r * s);
            }
            pieces.push(Piece {
                kind: PieceKind::Points(pts),
                hi: r,
            });
        }
    }
    Ok(Plan {
        dim: 2,
        key: KeyKind::Norm,
        curve: None,
        pieces,
        tail: Tail::Ball((n_t as f64).powf(-p)),
        load,
    })
}

fn gap(seq: &RadiusSequence, n: usize) -> f64 {
    match (seq.term(n), seq.term(n + 1)) {
        (Ok(a), Ok(b)) => a - b,
        _ => 0.0,
    }
}

fn check_index(n_t: usize, max_index: u64) -> Result<()> {
    if n_t as u64 > max_index.saturating_add(1) {
        return Err(Error::BudgetTooSmall {
            budget: max_index,
            reason: format!("index {n_t} must be enumerated before the dense tail starts"),
        });
    }
    Ok(())
}

/// Cell counts per candidate radius: `outer[k] = #{cells with max norm > r_k}`,
/// `inner[k] = #{cells with min norm <= r_k}`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Histogram {
    pub radii: Vec<f64>,
    pub outer: Vec<u64>,
    pub inner: Vec<u64>,
    pub total: u64,
}

struct HistBuilder {
    radii: Vec<f64>,
    out_diff: Vec<i64>,
    in_diff: Vec<i64>,
    total: u64,
}

impl HistBuilder {
    fn new(radii: Vec<f64>) -> Self {
        let k = radii.len();
        HistBuilder {
            radii,
            out_diff: vec![0; k + 1],
            in_diff: vec![0; k + 1],
            total: 0,
        }
    }

    #[inline]
    fn add(&mut self, min_norm: f64, max_norm: f64) {
        self.add_weighted(min_norm, max_norm, 1);
    }

    #[inline]
    fn add_weighted(&mut self, min_norm: f64, max_norm: f64, w: u64) {
        self.total += w;
        let w = w as i64;
        let io = self.radii.partition_point(|r| *r < max_norm);
        self.out_diff[0] += w;
        self.out_diff[io] -= w;
        let ii = self.radii.partition_point(|r| *r < min_norm);
        self.in_diff[ii] += w;
    }

    fn finish(self) -> Histogram {
        let k = self.radii.len();
        let mut outer = Vec::with_capacity(k);
        let mut inner = Vec::with_capacity(k);
        let (mut o, mut i) = (0i64, 0i64);
        for j in 0..k {
            o += self.out_diff[j];
            i += self.in_diff[j];
            outer.push(o as u64);
            inner.push(i as u64);
        }
        Histogram {
            radii: self.radii,
            outer,
            inner,
            total: self.total,
        }
    }
}

/// Live cells keyed by packed integer coordinates.
pub(crate) struct Accumulator {
    dim: usize,
    side: f64,
    inv_side: f64,
    key_kind: KeyKind,
    map: AHashMap<u128, (f32, f32)>,
    cur: Option<(u128, f64, f64)>,
    next_flush: usize,
    hist: HistBuilder,
}

const MIN_FLUSH: usize = 1 << 16;

impl Accumulator {
    pub fn new(dim: usize, side: f64, key_kind: KeyKind, radii: Vec<f64>) -> Result<Self> {
        if !(1..=4).contains(&dim) {
            return Err(Error::Unsupported(format!("cell packing supports d <= 4, got {dim}")));
        }
        Ok(Accumulator {
            dim,
            side,
            inv_side: 1.0 / side,
            key_kind,
            map: AHashMap::new(),
            cur: None,
            next_flush: MIN_FLUSH,
            hist: HistBuilder::new(radii),
        })
    }

    fn bits(&self) -> u32 {
        if self.dim <= 2 {
            64
        } else {
            32
        }
    }

    #[inline]
    fn pack(&self, idx: &[i64]) -> u128 {
        let bits = self.bits();
        let mask: u128 = if bits == 64 { u64::MAX as u128 } else { u32::MAX as u128 };
        let mut k = 0u128;
        for (i, &c) in idx.iter().enumerate() {
            k |= ((c as u128) & mask) << (bits * i as u32);
        }
        k
    }

    fn unpack(&self, key: u128) -> [i64; 4] {
        let bits = self.bits();
        let mut out = [0i64; 4];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let raw = key >> (bits * i as u32);
            *o = if bits == 64 {
                raw as u64 as i64
            } else {
                raw as u32 as i32 as i64
            };
        }
        out
    }

    #[inline]
    pub fn push(&mut self, x: &[f64]) {
        let mut idx = [0i64; 4];
        let mut n2 = 0.0;
        for k in 0..self.dim {
            idx[k] = (x[k] * self.inv_side).floor() as i64;
            n2 += x[k] * x[k];
        }
        let key = self.pack(&idx[..self.dim]);
        match &mut self.cur {
            Some((k, lo, hi)) if *k == key => {
                *lo = lo.min(n2);
                *hi = hi.max(n2);
            }
            _ => {
                self.commit();
                self.cur = Some((key, n2, n2));
            }
        }
    }

    fn commit(&mut self) {
        if let Some((key, lo, hi)) = self.cur.take() {
            let (lo, hi) = (lo.sqrt() as f32, hi.sqrt() as f32);
            self.map
                .entry(key)
                .and_modify(|v| {
                    v.0 = v.0.min(lo);
                    v.1 = v.1.max(hi);
                })
                .or_insert((lo, hi));
        }
    }

    /// Smallest key any point of the cell can have.
    fn key_min(&self, key: u128) -> f64 {
        let idx = self.unpack(key);
        match self.key_kind {
            KeyKind::FirstCoord => idx[0] as f64 * self.side,
            KeyKind::Norm => {
                let mut s = 0.0;
                for &c in &idx[..self.dim] {
                    let near = if c >= 0 { c as f64 } else { (c + 1) as f64 };
                    s += near * near;
                }
                s.sqrt() * self.side
            }
        }
    }

    /// Finalises cells no point with key `<= bound` can reach, once the map
    /// has grown enough to make a sweep worthwhile.
    pub fn maybe_flush(&mut self, bound: f64) {
        if self.map.len() >= self.next_flush {
            self.flush(bound);
            self.next_flush = (2 * self.map.len()).max(MIN_FLUSH);
        }
    }

    pub fn flush(&mut self, bound: f64) {
        self.commit();
        let slack = 1e-9 * self.side;
        let mut done = Vec::new();
        let map = std::mem::take(&mut self.map);
        let mut keep = AHashMap::with_capacity(map.len());
        for (k, v) in map {
            if self.key_min(k) > bound + slack {
                done.push(v);
            } else {
                keep.insert(k, v);
            }
        }
        self.map = keep;
        for (lo, hi) in done {
            self.hist.add(lo as f64, hi as f64);
        }
    }

    /// Merges a cell given by index, e.g. from an analytic region.
    fn merge_cell(&mut self, idx: &[i64], lo: f64, hi: f64) {
        let key = self.pack(idx);
        let (lo, hi) = (lo as f32, hi as f32);
        self.map
            .entry(key)
            .and_modify(|v| {
                v.0 = v.0.min(lo);
                v.1 = v.1.max(hi);
            })
            .or_insert((lo, hi));
    }

    pub fn finish(mut self) -> Histogram {
        self.flush(f64::NEG_INFINITY);
        self.hist.finish()
    }
}

/// Candidate inner radii: 0, 64 log-spaced values in `[delta, diameter]`,
/// the diameter, and any extras.
pub(crate) fn candidate_radii(delta: f64, diameter: f64, extra: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0, diameter];
    let (a, b) = (delta.ln(), diameter.ln());
    for k in 0..64 {
        r.push((a + (b - a) * k as f64 / 63.0).exp());
    }
    r.extend(extra.iter().copied().filter(|v| v.is_finite() && *v >= 0.0));
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}

/// Runs one pass: samples every piece with chord `step`, enumerates the tail,
/// and returns the per-radius cell histogram.
pub(crate) fn run_pass(plan: &Plan, side: f64, step: f64, radii: Vec<f64>) -> Result<Histogram> {
    if let Some(circles) = concentric_circles(plan) {
        return Ok(sweep_circles(&circles, plan.tail, side, radii));
    }
    if let (Some(Curve::Graph { p, q }), Tail::Envelope(x_tail, _)) = (plan.curve, plan.tail) {
        return Ok(sweep_graph(p, q, x_tail, side, radii));
    }
    run_sampled(plan, side, step, radii)
}

fn run_sampled(plan: &Plan, side: f64, step: f64, radii: Vec<f64>) -> Result<Histogram> {
    let points = plan.load / step;
    if points > MAX_PASS_POINTS {
        return Err(Error::ResourceLimit(format!(
            "about {points:.2e} samples needed at cell side {side:e}"
        )));
    }
    if plan.dim > 2 {
        let reach = plan.pieces.first().map_or(0.0, |p| p.hi).max(plan.tail.hi());
        if reach / side > i32::MAX as f64 / 2.0 {
            return Err(Error::Unsupported(format!(
                "cell side {side:e} too fine for d={}",
                plan.dim
            )));
        }
    }
    let mut acc = Accumulator::new(plan.dim, side, plan.key, radii)?;
    let tail_hi = plan.tail.hi();
    for (j, piece) in plan.pieces.iter().enumerate() {
        match &piece.kind {
            PieceKind::Points(coords) => {
                for x in coords.chunks_exact(plan.dim) {
                    acc.push(x);
                }
            }
            PieceKind::Sphere(r) => {
                if plan.dim == 1 {
                    acc.push(&[*r]);
                    acc.push(&[-*r]);
                } else {
                    for_each_sphere_point(plan.dim, *r, step, &mut |x: &[f64]| acc.push(x));
                }
            }
            PieceKind::Arc(t0, t1) => {
                let curve = plan.curve.expect("arc pieces carry a curve");
                curve.walk(*t0, *t1, step, |_, pt| acc.push(&pt));
            }
        }
        let next = plan.pieces.get(j + 1).map_or(tail_hi, |p| p.hi);
        acc.maybe_flush(next);
    }
    acc.flush(tail_hi);
    add_tail(&mut acc, plan.tail, plan.dim, side);
    Ok(acc.finish())
}

/// Radii of a planar plan made only of origin-centred circles.
fn concentric_circles(plan: &Plan) -> Option<Vec<f64>> {
    if plan.dim != 2 || !matches!(plan.tail, Tail::Ball(_) | Tail::None) {
        return None;
    }
    plan.pieces
        .iter()
        .map(|p| match p.kind {
            PieceKind::Sphere(r) => Some(r),
            _ => None,
        })
        .collect()
}

/// Exact cells met by origin-centred circles (radii decreasing) and an
/// optional disc, swept row by row over one quadrant. Within a row the cell
/// intervals of decreasing radii move monotonically towards the axis, so
/// their union is a single merge pass. Cell norms are the box extremes.
fn sweep_circles(circles: &[f64], tail: Tail, side: f64, radii: Vec<f64>) -> Histogram {
    let mut hist = HistBuilder::new(radii);
    let disc = match tail {
        Tail::Ball(r) => Some(r),
        _ => None,
    };
    let r_max = circles.first().copied().unwrap_or(0.0).max(disc.unwrap_or(0.0));
    let r_min = circles.last().copied().unwrap_or(0.0);
    let per_cell = hist.radii.len() > 1;
    let rows = (r_max / side).floor() as i64;
    let mut runs: Vec<(i64, i64)> = Vec::new();
    for j in 0..=rows {
        let y0 = j as f64 * side;
        let y1 = y0 + side;
        runs.clear();
        let push = |lo: i64, hi: i64, runs: &mut Vec<(i64, i64)>| match runs.last_mut() {
            Some(last) if hi >= last.0 - 1 => last.0 = last.0.min(lo),
            _ => runs.push((lo, hi)),
        };
        for &r in circles {
            if r < y0 {
                break;
            }
            let xb = (r * r - y0 * y0).max(0.0).sqrt();
            let xa = (r * r - y1 * y1).max(0.0).sqrt();
            push((xa / side).floor() as i64, (xb / side).floor() as i64, &mut runs);
        }
        if let Some(r) = disc {
            if r >= y0 {
                let xb = (r * r - y0 * y0).max(0.0).sqrt();
                push(0, (xb / side).floor() as i64, &mut runs);
            }
        }
        for &(lo, hi) in &runs {
            if per_cell {
                for i in lo..=hi {
                    let x0 = i as f64 * side;
                    let near = x0.hypot(y0);
                    let far = (x0 + side).hypot(y1).min(r_max);
                    let near = if disc.is_some() { near } else { near.max(r_min.min(far)) };
                    hist.add_weighted(near, far, 4);
                }
            } else {
                hist.total += 4 * (hi - lo + 1) as u64;
            }
        }
    }
    hist.finish()
}

/// Critical points `(t, y)` of `y(t) = t^{-pq} sin(pi t)` on `[1, t_max]`, one
/// per half-period.
fn graph_extrema(pq: f64, t_max: f64) -> Vec<(f64, f64)> {
    let y = |t: f64| t.powf(-pq) * (PI * t).sin();
    // Zeros of pi t cos(pi t) - pq sin(pi t); sign changes on [k - 1/2, k + 1/2].
    let h = |t: f64| PI * t * (PI * t).cos() - pq * (PI * t).sin();
    let mut out = Vec::new();
    let mut k = 1.0;
    while k - 0.5 <= t_max {
        let (mut a, mut b) = ((k - 0.5f64).max(1.0), k + 0.5);
        let t = if pq == 0.0 {
            k + 0.5
        } else {
            let ha = h(a);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if (h(m) > 0.0) == (ha > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        if t <= t_max {
            out.push((t, y(t)));
        }
        k += 1.0;
    }
    out
}

/// Exact cells met by the graph `x^q sin(pi x^{-1/p})` on `[x_tail, 1]` plus
/// the envelope `|y| <= x^q` on `[0, x_tail]`. Over one column the graph is
/// connected, so it meets exactly the rows between its minimum and maximum,
/// which are attained at the column ends or at interior critical points.
fn sweep_graph(p: f64, q: f64, x_tail: f64, side: f64, radii: Vec<f64>) -> Histogram {
    let mut hist = HistBuilder::new(radii);
    let per_cell = hist.radii.len() > 1;
    let pq = p * q;
    let y = |t: f64| t.powf(-pq) * (PI * t).sin();
    let amp = |x: f64| if q == 0.0 { 1.0 } else { x.max(0.0).powf(q) };
    let t_tail = x_tail.powf(-1.0 / p);
    let ext = graph_extrema(pq, t_tail);
    let rmax = 1f64.hypot(1.0);
    let cols = (1.0 / side).floor() as i64;
    for i in 0..=cols {
        let x0 = i as f64 * side;
        let x1 = x0 + side;
        let mut rows: [Option<(i64, i64)>; 2] = [None, None];
        let (xl, xr) = (x0.max(x_tail), x1.min(1.0));
        if xl <= xr {
            let (t_lo, t_hi) = (xr.powf(-1.0 / p), xl.powf(-1.0 / p).min(t_tail));
            let (mut lo, mut hi) = (y(t_lo).min(y(t_hi)), y(t_lo).max(y(t_hi)));
            let start = ext.partition_point(|e| e.0 <= t_lo);
            for e in ext[start..].iter().take_while(|e| e.0 < t_hi) {
                lo = lo.min(e.1);
                hi = hi.max(e.1);
            }
            rows[0] = Some(((lo / side).floor() as i64, (hi / side).floor() as i64));
        }
        if x0 < x_tail {
            let top = (amp(x1.min(x_tail)) / side).floor() as i64;
            rows[1] = Some((-top - 1, top));
        }
        let (lo, hi) = match rows {
            [Some(a), Some(b)] => (a.0.min(b.0), a.1.max(b.1)),
            [Some(a), None] | [None, Some(a)] => a,
            [None, None] => continue,
        };
        // The two row ranges overlap: the last arcs before the tail reach
        // the full envelope.
        if per_cell {
            for j in lo..=hi {
                let (y0, y1) = nearest_far(j, side);
                hist.add(x0.hypot(y0), x1.hypot(y1).min(rmax));
            }
        } else {
            hist.total += (hi - lo + 1) as u64;
        }
    }
    hist.finish()
}

/// Enumerates cells meeting the tail region. Cells strictly inside it cannot
/// hold any sampled point and go straight to the histogram; boundary cells
/// are merged with the live map.
fn add_tail(acc: &mut Accumulator, tail: Tail, dim: usize, side: f64) {
    match tail {
        Tail::None => {}
        Tail::Segment(r) => {
            let last = (r / side).floor() as i64;
            for i in 0..=last {
                let (lo, hi) = (i as f64 * side, ((i + 1) as f64 * side).min(r));
                if (i + 1) as f64 * side < r {
                    acc.hist.add(lo, hi);
                } else {
                    acc.merge_cell(&[i], lo, hi);
                }
            }
        }
        Tail::Ball(r) => {
            let mut idx = [0i64; 4];
            ball_cells(acc, dim, 0, r, side, 0.0, 0.0, &mut idx);
        }
        Tail::Ellipse(ax, ay) => {
            let n = (ax / side).ceil() as i64 + 1;
            let m = (ay / side).ceil() as i64 + 1;
            let rmax = ax.max(ay);
            for i in -n..n {
                let (x0, x1) = nearest_far(i, side);
                if (x0 / ax).powi(2) > 1.0 {
                    continue;
                }
                for j in -m..m {
                    let (y0, y1) = nearest_far(j, side);
                    let e_near = (x0 / ax).powi(2) + (y0 / ay).powi(2);
                    if e_near > 1.0 {
                        continue;
                    }
                    let lo = x0.hypot(y0);
                    let hi = x1.hypot(y1).min(rmax);
                    if (x1 / ax).powi(2) + (y1 / ay).powi(2) < 1.0 {
                        acc.hist.add(lo, hi);
                    } else {
                        acc.merge_cell(&[i, j], lo, hi);
                    }
                }
            }
        }
        Tail::Envelope(x_max, q) => {
            let amp = |x: f64| if q == 0.0 { 1.0 } else { x.max(0.0).powf(q) };
            let cols = (x_max / side).floor() as i64;
            let rmax = x_max.hypot(amp(x_max));
            for i in 0..=cols {
                let xl = i as f64 * side;
                let xr = ((i + 1) as f64 * side).min(x_max);
                let (a_lo, a_hi) = (amp(xl), amp(xr));
                let top = (a_hi / side).floor() as i64;
                for j in -top - 1..=top {
                    let (y0, y1) = nearest_far(j, side);
                    if y0 > a_hi {
                        continue;
                    }
                    let lo = xl.hypot(y0);
                    let hi = xr.hypot(y1).min(rmax);
                    let inside = (i + 1) as f64 * side < x_max && y1 < a_lo;
                    if inside {
                        acc.hist.add(lo, hi);
                    } else {
                        acc.merge_cell(&[i, j], lo, hi);
                    }
                }
            }
        }
    }
}

/// Nearest and farthest absolute coordinate of cell `c` along one axis.
#[inline]
fn nearest_far(c: i64, side: f64) -> (f64, f64) {
    let (a, b) = (c as f64 * side, (c + 1) as f64 * side);
    if a >= 0.0 {
        (a, b)
    } else if b <= 0.0 {
        (-b, -a)
    } else {
        (0.0, (-a).max(b))
    }
}

#[allow(clippy::too_many_arguments)]
fn ball_cells(
    acc: &mut Accumulator,
    dim: usize,
    axis: usize,
    r: f64,
    side: f64,
    near2: f64,
    far2: f64,
    idx: &mut [i64; 4],
) {
    let n = (r / side).ceil() as i64 + 1;
    for c in -n..n {
        let (a, b) = nearest_far(c, side);
        let (nn, ff) = (near2 + a * a, far2 + b * b);
        if nn > r * r {
            continue;
        }
        idx[axis] = c;
        if axis + 1 < dim {
            ball_cells(acc, dim, axis + 1, r, side, nn, ff, idx);
        } else {
            let (lo, hi) = (nn.sqrt(), ff.sqrt().min(r));
            if ff < r * r {
                acc.hist.add(lo, hi);
            } else {
                acc.merge_cell(&idx[..dim], lo, hi);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_round_trip() {
        for dim in 1..=4 {
            let acc = Accumulator::new(dim, 0.1, KeyKind::Norm, vec![]).unwrap();
            let idx = [-3i64, 7, -1, 0];
            let k = acc.pack(&idx[..dim]);
            assert_eq!(&acc.unpack(k)[..dim], &idx[..dim]);
        }
    }

    #[test]
    fn unit_ball_cell_count() {
        // Cells meeting the unit disc at side 1/8: count by brute force.
        let side = 0.125;
        let mut acc = Accumulator::new(2, side, KeyKind::Norm, vec![0.0, 2.0]).unwrap();
        add_tail(&mut acc, Tail::Ball(1.0), 2, side);
        let h = acc.finish();
        let mut brute = 0;
        for i in -10..10 {
            for j in -10..10 {
                let (a, _) = nearest_far(i, side);
                let (b, _) = nearest_far(j, side);
                if a * a + b * b <= 1.0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(h.total, brute);
        assert_eq!(h.inner[0], 4);
        assert_eq!(h.outer[1], 0);
    }

    #[test]
    fn windowed_flush_matches_plain_count() {
        let spec = SetSpec::concentric_power(2, 0.5);
        let side = 2f64.powi(-9);
        let plan = plan(&spec, side, u64::MAX).unwrap();
        let h = run_sampled(&plan, side, side / 4.0, vec![0.0]).unwrap();
        // Same samples through one big set.
        let mut set = ahash::AHashSet::new();
        for p in &plan.pieces {
            if let PieceKind::Sphere(r) = p.kind {
                for_each_sphere_point(2, r, side / 4.0, &mut |x: &[f64]| {
                    set.insert(((x[0] / side).floor() as i64, (x[1] / side).floor() as i64));
                });
            }
        }
        let Tail::Ball(r) = plan.tail else { panic!() };
        let n = (r / side).ceil() as i64 + 1;
        for i in -n..n {
            for j in -n..n {
                let (a, _) = nearest_far(i, side);
                let (b, _) = nearest_far(j, side);
                if a * a + b * b <= r * r {
                    set.insert((i, j));
                }
            }
        }
        assert_eq!(h.total, set.len() as u64);
        // The exact sweep also finds corners clipped by arcs shorter than the
        // chord; fine sampling closes the gap.
        let exact = run_pass(&plan, side, side / 4.0, vec![0.0]).unwrap().total;
        let fine = run_sampled(&plan, side, side / 256.0, vec![0.0]).unwrap().total;
        assert!(exact >= fine && fine >= h.total);
        assert!((exact - fine) as f64 <= 0.002 * exact as f64, "{exact} {fine}");
    }

    #[test]
    fn graph_sweep_matches_fine_sampling() {
        for spec in [
            SetSpec::AttenuatedSine { p: 1.0, q: 0.5 },
            SetSpec::ProductSine { p: 1.0 },
            SetSpec::AttenuatedSine { p: 0.7, q: 2.0 },
        ] {
            let side = 2f64.powi(-8);
            let plan = plan(&spec, side, u64::MAX).unwrap();
            let exact = run_pass(&plan, side, side / 4.0, vec![0.0]).unwrap().total;
            let fine = run_sampled(&plan, side, side / 256.0, vec![0.0]).unwrap().total;
            assert!(
                exact.abs_diff(fine) as f64 <= 0.002 * exact as f64,
                "{spec}: {exact} {fine}"
            );
        }
    }

    #[test]
    fn sweep_counts_single_circle() {
        // Radius 1 at side 1/4: brute-force cell test on each quadrant cell.
        let side = 0.25;
        let h = sweep_circles(&[1.0], Tail::None, side, vec![0.0]);
        let mut brute = 0;
        for i in -5..5 {
            for j in -5..5 {
                let (n0, n1) = nearest_far(i, side);
                let (m0, m1) = nearest_far(j, side);
                if n0.hypot(m0) <= 1.0 && n1.hypot(m1) > 1.0 {
                    brute += 1;
                }
            }
        }
        assert_eq!(h.total, brute);
    }
}
