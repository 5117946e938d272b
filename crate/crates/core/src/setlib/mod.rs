//! Set families, deterministic sampling, membership residuals and radius
//! sequence utilities.

mod curve;
mod spec;
mod sphere;

use std::f64::consts::PI;
use std::io::{Read, Write};

pub(crate) use curve::Curve;
pub use spec::{parse_number, CountRule, KeyValues, RadiusSequence, SetSpec};
pub(crate) use sphere::for_each_sphere_point;
pub use sphere::MAX_SAMPLE_DIM;

use crate::error::{Error, Result};

/// Refuse to materialise clouds larger than this many points.
pub const MAX_CLOUD_POINTS: usize = 200_000_000;

/// `a_n` for `n >= 1`.
pub fn radius_term(seq: &RadiusSequence, n: usize) -> Result<f64> {
    seq.term(n)
}

/// A finite sample of a set, stored as a flat coordinate array.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    resolution: f64,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>, resolution: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("point dimension must be >= 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::param("coordinate count is not a multiple of the dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("non-finite coordinate"));
        }
        Ok(PointCloud {
            dim,
            coords,
            resolution,
        })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P], resolution: f64) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::param(format!("point of length {} in a {dim}-d cloud", p.len())));
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords, resolution)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Arc step or maximum index used to generate the cloud.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn bbox_diameter(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// CSV with header `x1,...,xd` and a leading `# resolution=` comment.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# resolution={}", self.resolution)?;
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        w.write_record(&header).map_err(csv_err)?;
        for p in self.points() {
            w.write_record(p.iter().map(|v| v.to_string())).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        std::io::BufReader::new(input).read_to_string(&mut text)?;
        let (first, rest) = text
            .split_once('\n')
            .ok_or_else(|| Error::parse("", "empty cloud file"))?;
        let resolution = first
            .strip_prefix("# resolution=")
            .ok_or_else(|| Error::parse(first, "expected `# resolution=`"))
            .and_then(parse_number)?;
        let mut r = csv::Reader::from_reader(rest.as_bytes());
        let dim = r.headers().map_err(csv_err)?.len();
        let mut coords = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            for field in rec.iter() {
                coords.push(parse_number(field)?);
            }
        }
        PointCloud::new(dim, coords, resolution)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn check_budget(budget: u64, truncation: f64) -> Result<()> {
    if budget == 0 {
        return Err(Error::BudgetTooSmall {
            budget,
            reason: "budget must be >= 1".into(),
        });
    }
    if !(truncation > 0.0 && truncation <= 1.0) {
        return Err(Error::param(format!("truncation must lie in (0, 1], got {truncation}")));
    }
    Ok(())
}

fn too_many(n: f64) -> Result<()> {
    if n > MAX_CLOUD_POINTS as f64 {
        Err(Error::ResourceLimit(format!(
            "about {n:.3e} points exceeds the cloud limit of {MAX_CLOUD_POINTS}"
        )))
    } else {
        Ok(())
    }
}

/// Deterministic sample of `spec` down to radius (or x-extent) `truncation`.
/// Curves and spheres are walked with chord step `diameter / budget`; point
/// families enumerate exact points with index at most `budget`.
pub fn sample(spec: &SetSpec, budget: u64, truncation: f64) -> Result<PointCloud> {
    spec.validate()?;
    check_budget(budget, truncation)?;
    let d = spec.ambient_dim();
    let step = spec.diameter() / budget as f64;
    let mut coords = Vec::new();
    let resolution = match spec {
        SetSpec::FpSequence { p } => {
            let seq = RadiusSequence::Power { p: *p };
            let n = count_at_least(&seq, truncation).min(budget as usize);
            too_many(n as f64)?;
            coords.extend((1..=n).map(|i| (i as f64).powf(-p)));
            n as f64
        }
        SetSpec::ConcentricSpheres { d, radii } => {
            if *d > MAX_SAMPLE_DIM {
                return Err(Error::Unsupported(format!(
                    "sampling is limited to d <= {MAX_SAMPLE_DIM}, got {d}"
                )));
            }
            let n = count_at_least(radii, truncation);
            let mut estimate = 0.0;
            for i in 1..=n {
                estimate += (radii.term(i)? / step + 1.0).powi(*d as i32 - 1) * 7.0;
                too_many(estimate)?;
            }
            for i in 1..=n {
                for_each_sphere_point(*d, radii.term(i)?, step, &mut |x: &[f64]| coords.extend_from_slice(x));
            }
            step
        }
        SetSpec::PolynomialSpiral { p }
        | SetSpec::EllipticalSpiral { p, .. }
        | SetSpec::ProductSine { p }
        | SetSpec::AttenuatedSine { p, .. } => {
            let curve = curve_of(spec).expect("curve family");
            let t_max = truncation.powf(-1.0 / p);
            let mut n = 0.0;
            let mut t = 1.0;
            while t < t_max {
                n += curve.speed_bound(t) + step;
                t += 1.0;
            }
            too_many(n / step)?;
            curve.walk(1.0, t_max, step, |_, pt| coords.extend_from_slice(&pt));
            step
        }
        SetSpec::IsolatedPoints { p, count } => {
            let seq = RadiusSequence::Power { p: *p };
            let n = count_at_least(&seq, truncation).min(budget as usize);
            let total: f64 = (1..=n).map(|i| count.count(i) as f64).sum();
            too_many(total)?;
            for i in 1..=n {
                let r = (i as f64).powf(-p);
                let b = count.count(i);
                for j in 0..b {
                    let (s, c) = (2.0 * PI * j as f64 / b as f64).sin_cos();
                    coords.push(r * c);
                    coords.push(r * s);
                }
            }
            n as f64
        }
    };
    if coords.is_empty() {
        return Err(Error::BudgetTooSmall {
            budget,
            reason: format!("no point of the set lies above truncation {truncation}"),
        });
    }
    PointCloud::new(d, coords, resolution)
}

/// Number of terms `a_n >= r`.
pub(crate) fn count_at_least(seq: &RadiusSequence, r: f64) -> usize {
    match seq.first_index_at_most(r) {
        Some(n) => {
            if seq.term(n).is_ok_and(|t| t >= r) {
                n
            } else {
                n - 1
            }
        }
        None => seq.len().unwrap_or(0),
    }
}

pub(crate) fn curve_of(spec: &SetSpec) -> Option<Curve> {
    match *spec {
        SetSpec::PolynomialSpiral { p } => Some(Curve::Spiral { p, q: p }),
        SetSpec::EllipticalSpiral { p, q } => Some(Curve::Spiral { p, q }),
        SetSpec::ProductSine { p } => Some(Curve::Graph { p, q: 0.0 }),
        SetSpec::AttenuatedSine { p, q } => Some(Curve::Graph { p, q }),
        _ => None,
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Distance-like residual, zero exactly on the set. A point of the wrong
/// dimension gets `+inf`.
pub fn membership_residual(spec: &SetSpec, point: &[f64]) -> f64 {
    if point.len() != spec.ambient_dim() {
        return f64::INFINITY;
    }
    match spec {
        SetSpec::FpSequence { p } => RadiusSequence::Power { p: *p }.nearest_distance(point[0]),
        SetSpec::ConcentricSpheres { radii, .. } => radii.nearest_distance(norm(point)),
        SetSpec::PolynomialSpiral { p } => spiral_residual(*p, *p, point),
        SetSpec::EllipticalSpiral { p, q } => spiral_residual(*p, *q, point),
        SetSpec::ProductSine { p } => graph_residual(*p, 0.0, point),
        SetSpec::AttenuatedSine { p, q } => graph_residual(*p, *q, point),
        SetSpec::IsolatedPoints { p, count } => isolated_residual(*p, count, point),
    }
}

fn spiral_residual(p: f64, q: f64, pt: &[f64]) -> f64 {
    let (x, y) = (pt[0], pt[1]);
    // (x t^p)^2 + (y t^q)^2 is increasing in t; its root picks the level
    // ellipse through the point.
    let g = |t: f64| (x * t.powf(p)).powi(2) + (y * t.powf(q)).powi(2) - 1.0;
    let curve = Curve::Spiral { p, q };
    let dist = |t: f64| {
        let c = curve.point(t);
        (c[0] - x).hypot(c[1] - y)
    };
    if g(1.0) >= 0.0 {
        return dist(1.0);
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return dist(hi);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    dist(lo).min(dist(hi))
}

fn graph_residual(p: f64, q: f64, pt: &[f64]) -> f64 {
    let (x, y) = (pt[0], pt[1]);
    let f = |x: f64| x.powf(q) * (PI * x.powf(-1.0 / p)).sin();
    if x > 1.0 {
        (x - 1.0).hypot(y - f(1.0))
    } else if x <= 0.0 {
        let amp = if q == 0.0 { 1.0 } else { 0.0 };
        x.hypot((y.abs() - amp).max(0.0))
    } else {
        (y - f(x)).abs()
    }
}

fn isolated_residual(p: f64, count: &CountRule, pt: &[f64]) -> f64 {
    let seq = RadiusSequence::Power { p };
    let r = norm(pt);
    let angle = pt[1].atan2(pt[0]).rem_euclid(2.0 * PI);
    let i0 = seq.first_index_at_most(r).unwrap_or(1);
    let mut best = f64::INFINITY;
    for i in i0.saturating_sub(1).max(1)..=i0 + 1 {
        let radius = (i as f64).powf(-p);
        let b = count.count(i);
        let d = if b as f64 > 1e15 {
            (r - radius).abs()
        } else {
            let j = (angle * b as f64 / (2.0 * PI)).round() as u64 % b;
            let (s, c) = (2.0 * PI * j as f64 / b as f64).sin_cos();
            (pt[0] - radius * c).hypot(pt[1] - radius * s)
        };
        best = best.min(d);
    }
    best
}

/// `#{k <= n : (1/(k+1)^p, 1/k^p] contains a term of seq}`.
pub fn gap_count_a(seq: &RadiusSequence, p: f64, n: usize) -> usize {
    gap_counts(seq, p, n).last().copied().unwrap_or(0)
}

/// Prefix values `A_{p,1}, ..., A_{p,n}`.
pub fn gap_counts(seq: &RadiusSequence, p: f64, n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0;
    for k in 1..=n {
        let hi = (k as f64).powf(-p);
        let lo = ((k + 1) as f64).powf(-p);
        if seq.has_term_in(lo, hi) {
            acc += 1;
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_examples() {
        assert_eq!(radius_term(&RadiusSequence::Power { p: 1.0 }, 4).unwrap(), 0.25);
        assert_eq!(radius_term(&RadiusSequence::Power { p: 2.0 }, 1).unwrap(), 1.0);
        assert_eq!(
            radius_term(&RadiusSequence::Geometric { ratio: 2.0 }, 3).unwrap(),
            0.125
        );
    }

    #[test]
    fn fp_sample_example() {
        let c = sample(&SetSpec::FpSequence { p: 1.0 }, 10, 0.09).unwrap();
        assert_eq!(c.len(), 10);
        for (i, x) in c.points().enumerate() {
            assert_eq!(x[0], 1.0 / (i + 1) as f64);
        }
    }

    #[test]
    fn isolated_sample_example() {
        let spec = SetSpec::IsolatedPoints {
            p: 1.0,
            count: CountRule::Constant(4),
        };
        let c = sample(&spec, 1000, 0.3).unwrap();
        assert_eq!(c.len(), 12);
        assert!((c.point(5)[1] - 0.5).abs() < 1e-15);
        for x in c.points() {
            assert!(membership_residual(&spec, x) < 1e-15);
        }
    }

    #[test]
    fn residual_examples() {
        let c1 = SetSpec::concentric_power(2, 1.0);
        assert_eq!(membership_residual(&c1, &[0.5, 0.0]), 0.0);
        // 1/3 is nearer to 0.4 than 1/2.
        assert!((membership_residual(&c1, &[0.4, 0.0]) - 1.0 / 15.0).abs() < 1e-15);
        let t = SetSpec::AttenuatedSine { p: 1.0, q: 2.0 };
        assert!(membership_residual(&t, &[1.0, 0.0]) < 1e-15);
        assert!(membership_residual(&t, &[0.5, 0.3]) > 0.29);
    }

    #[test]
    fn spiral_residual_zero_on_curve() {
        for spec in [
            SetSpec::PolynomialSpiral { p: 0.5 },
            SetSpec::EllipticalSpiral { p: 0.4, q: 1.3 },
        ] {
            let c = curve_of(&spec).unwrap();
            for k in 0..200 {
                let t = 1.0 + k as f64 * 0.173;
                let pt = c.point(t);
                assert!(membership_residual(&spec, &pt) < 1e-12, "{spec} t={t}");
                let off = [pt[0] * 1.01, pt[1] * 1.01];
                assert!(membership_residual(&spec, &off) > 0.0);
            }
        }
    }

    #[test]
    fn gap_count_examples() {
        let pw = RadiusSequence::Power { p: 0.7 };
        for n in [1, 5, 100] {
            assert_eq!(gap_count_a(&pw, 0.7, n), n);
        }
        assert_eq!(gap_count_a(&RadiusSequence::Geometric { ratio: 2.0 }, 1.0, 4), 2);
        assert_eq!(gap_count_a(&RadiusSequence::Logarithmic, 1.0, 1), 1);
    }

    #[test]
    fn cloud_csv_round_trip() {
        let c = sample(&SetSpec::concentric_power(3, 0.5), 20, 0.3).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = PointCloud::read_csv(&buf[..]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn empty_sample_is_refused() {
        let spec = SetSpec::ConcentricSpheres {
            d: 2,
            radii: RadiusSequence::Table(vec![0.1]),
        };
        assert!(matches!(sample(&spec, 10, 0.5), Err(Error::BudgetTooSmall { .. })));
    }
}
