//! Measures from the lower-bound constructions and sampled checks of the
//! mass distribution bound `mu(U) <= C |U|^s` over test sets with
//! diameters in `[delta, delta^theta]`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::covergen::theorem_cutoff;
use crate::error::{Error, Result};
use crate::setlib::{parse_number, Curve, RadiusSequence, SetSpec};

/// Slack applied to the constructions' mass caps in certificates.
pub const CAP_MARGIN: f64 = 1.1;
/// Slack applied to the constructions' total-mass floors in certificates.
pub const FLOOR_MARGIN: f64 = 0.99;
pub const MIN_SAMPLES: usize = 1000;
const MAX_ATOMS: usize = 1 << 24;
const ARC_TOL: f64 = 1e-10;

/// `(d-1)`-dimensional measure of the unit sphere in R^d.
pub fn sphere_area_constant(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::param(format!("d must be >= 2, got {d}")));
    }
    let (mut a, mut b) = (2.0, 2.0 * PI);
    for k in 2..d {
        let next = 2.0 * PI / (k as f64 - 1.0) * a;
        a = b;
        b = next;
    }
    Ok(b)
}

/// `int_0^alpha sin^n`.
fn sin_power_integral(n: usize, alpha: f64) -> f64 {
    let (s, c) = alpha.sin_cos();
    let mut j0 = alpha;
    let mut j1 = 1.0 - c;
    if n == 0 {
        return j0;
    }
    for k in 2..=n {
        let kf = k as f64;
        let j = (-s.powi(k as i32 - 1) * c + (kf - 1.0) * j0) / kf;
        j0 = j1;
        j1 = j;
    }
    j1
}

/// Fraction of the sphere of radius `r` about the origin in R^d lying in the
/// closed ball of radius `rho` about a point at distance `m` from the origin.
pub fn sphere_ball_fraction(d: usize, r: f64, m: f64, rho: f64) -> f64 {
    if r + m <= rho {
        return 1.0;
    }
    if m == 0.0 || (m - r).abs() >= rho {
        return 0.0;
    }
    let cos_a = ((r * r + m * m - rho * rho) / (2.0 * m * r)).clamp(-1.0, 1.0);
    let alpha = cos_a.acos();
    if d == 1 {
        return if alpha >= PI { 1.0 } else { 0.5 };
    }
    sin_power_integral(d - 2, alpha) / sin_power_integral(d - 2, PI)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// Uniform probability on the origin-centred sphere of this radius.
    Sphere {
        radius: f64,
    },
    /// Arc length on the graph of `x^q sin(pi x^{-1/p})` over the parameter
    /// range `t in [t0, t1]`, where `x = t^{-p}`.
    SineArc {
        p: f64,
        q: f64,
        t0: f64,
        t1: f64,
    },
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub support: Support,
    /// Mass before the measure's `scale_factor`.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom>,
    pub scale_factor: f64,
}

fn arc_curve(p: f64, q: f64) -> Curve {
    Curve::Graph { p, q }
}

/// Length of the part of the arc inside the closed ball.
fn arc_in_ball(p: f64, q: f64, t0: f64, t1: f64, c: &[f64], rho: f64) -> f64 {
    let curve = arc_curve(p, q);
    // x = t^{-p} is decreasing, so only this parameter window can meet the ball.
    let t_lo = if c[0] + rho > 0.0 {
        t0.max((c[0] + rho).powf(-1.0 / p))
    } else {
        t1
    };
    let t_hi = if c[0] - rho > 0.0 {
        t1.min((c[0] - rho).powf(-1.0 / p))
    } else {
        t1
    };
    if t_lo >= t_hi {
        return 0.0;
    }
    let (xl, xh, ya) = (t_hi.powf(-p), t_lo.powf(-p), t_lo.powf(-p * q));
    let dx = (xl - c[0]).max(c[0] - xh).max(0.0);
    let dy = (c[1].abs() - ya).max(0.0);
    if dx.hypot(dy) > rho {
        return 0.0;
    }
    let fx = (c[0] - xl).abs().max((c[0] - xh).abs());
    let fy = c[1].abs() + ya;
    if fx.hypot(fy) <= rho {
        return curve.arc_length(t_lo, t_hi, ARC_TOL);
    }
    let g = |t: f64| {
        let pt = curve.point(t);
        (pt[0] - c[0]).powi(2) + (pt[1] - c[1]).powi(2) - rho * rho
    };
    let root = |mut a: f64, mut b: f64| {
        let ga = g(a) <= 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if (g(mid) <= 0.0) == ga {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    // Distance to the ball's boundary is 1-Lipschitz along the curve, so a
    // chord of that length cannot cross it; near the boundary the chord is
    // floored at rho/64.
    let mut inside = 0.0;
    let mut t = t_lo;
    let mut gt = g(t);
    let mut in_now = gt <= 0.0;
    let mut start = t;
    while t < t_hi {
        let gap = ((gt + rho * rho).max(0.0).sqrt() - rho).abs();
        let next = (t + gap.max(rho / 64.0) / curve.speed_bound(t)).min(t_hi);
        gt = g(next);
        let in_next = gt <= 0.0;
        if in_next != in_now {
            let cross = root(t, next);
            if in_now {
                inside += curve.arc_length(start, cross, ARC_TOL);
            } else {
                start = cross;
            }
            in_now = in_next;
        }
        t = next;
    }
    if in_now {
        inside += curve.arc_length(start, t_hi, ARC_TOL);
    }
    inside
}

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>, scale_factor: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        if !(scale_factor > 0.0 && scale_factor.is_finite()) {
            return Err(Error::param(format!(
                "scale factor must be positive, got {scale_factor}"
            )));
        }
        for a in &atoms {
            if !(a.mass >= 0.0 && a.mass.is_finite()) {
                return Err(Error::param(format!(
                    "atom mass must be finite and >= 0, got {}",
                    a.mass
                )));
            }
            match &a.support {
                Support::Sphere { radius } if !(*radius > 0.0) => {
                    return Err(Error::param("sphere atoms need a positive radius"))
                }
                Support::SineArc { t0, t1, .. } if !(*t0 >= 1.0 && t1 > t0) || dim != 2 => {
                    return Err(Error::param("arc atoms need 1 <= t0 < t1 in the plane"))
                }
                Support::Point(x) if x.len() != dim => return Err(Error::param("point atom dimension mismatch")),
                _ => {}
            }
        }
        let m = DiscreteMeasure {
            dim,
            atoms,
            scale_factor,
        };
        if !(m.total_mass() > 0.0) {
            return Err(Error::Empty("measure with zero total mass".into()));
        }
        Ok(m)
    }

    pub fn total_mass(&self) -> f64 {
        self.scale_factor * self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// Exact mass of the closed ball, summing over every atom.
    pub fn measure_of_ball(&self, center: &[f64], radius: f64) -> f64 {
        let m = norm(center);
        let sum: f64 = self
            .atoms
            .iter()
            .map(|a| atom_in_ball(self.dim, a, center, m, radius))
            .sum();
        self.scale_factor * sum
    }

    /// Multiplies every atom mass by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                support: a.support.clone(),
                mass: a.mass * c,
            })
            .collect();
        DiscreteMeasure::new(self.dim, atoms, self.scale_factor)
    }

    fn bbox_extent(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| match &a.support {
                Support::Sphere { radius } => *radius,
                Support::SineArc { p, t0, .. } => t0.powf(-p).hypot(1.0),
                Support::Point(x) => norm(x),
            })
            .fold(0.0, f64::max)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn atom_in_ball(dim: usize, a: &Atom, c: &[f64], m: f64, rho: f64) -> f64 {
    match &a.support {
        Support::Sphere { radius } => a.mass * sphere_ball_fraction(dim, *radius, m, rho),
        Support::Point(x) => {
            let d2: f64 = x.iter().zip(c).map(|(u, v)| (u - v).powi(2)).sum();
            if d2 <= rho * rho {
                a.mass
            } else {
                0.0
            }
        }
        Support::SineArc { p, q, t0, t1 } => {
            let inside = arc_in_ball(*p, *q, *t0, *t1, c, rho);
            if inside == 0.0 {
                0.0
            } else {
                let full = arc_curve(*p, *q).arc_length(*t0, *t1, ARC_TOL);
                a.mass * (inside / full).min(1.0)
            }
        }
    }
}

/// Lookup structure answering ball queries without scanning every atom.
struct BallIndex<'a> {
    measure: &'a DiscreteMeasure,
    spheres: Vec<(f64, f64)>,
    prefix: Vec<f64>,
    points: Vec<(f64, usize)>,
    /// `(x_lo, x_hi, atom, full length)`.
    arcs: Vec<(f64, f64, usize, f64)>,
}

impl<'a> BallIndex<'a> {
    fn new(measure: &'a DiscreteMeasure) -> Self {
        let mut spheres = Vec::new();
        let mut points = Vec::new();
        let mut arcs = Vec::new();
        for (i, a) in measure.atoms.iter().enumerate() {
            match &a.support {
                Support::Sphere { radius } => spheres.push((*radius, a.mass)),
                Support::Point(x) => points.push((x[0], i)),
                Support::SineArc { p, q, t0, t1 } => arcs.push((
                    t1.powf(-p),
                    t0.powf(-p),
                    i,
                    arc_curve(*p, *q).arc_length(*t0, *t1, ARC_TOL),
                )),
            }
        }
        spheres.sort_by(|a, b| a.0.total_cmp(&b.0));
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = vec![0.0];
        for s in &spheres {
            prefix.push(prefix.last().unwrap() + s.1);
        }
        BallIndex {
            measure,
            spheres,
            prefix,
            points,
            arcs,
        }
    }

    fn ball(&self, c: &[f64], rho: f64) -> f64 {
        let dim = self.measure.dim;
        let m = norm(c);
        let mut sum = 0.0;
        if !self.spheres.is_empty() {
            let full = self.spheres.partition_point(|s| s.0 + m <= rho);
            sum += self.prefix[full];
            // Slightly widened so tangent balls get the exact fraction.
            let eps = 1e-9 * (m + rho);
            let lo = self.spheres.partition_point(|s| s.0 < (m - rho).abs() - eps).max(full);
            let hi = self.spheres.partition_point(|s| s.0 < m + rho + eps);
            for &(r, mass) in &self.spheres[lo..hi.max(lo)] {
                sum += mass * sphere_ball_fraction(dim, r, m, rho);
            }
        }
        if !self.points.is_empty() {
            let lo = self.points.partition_point(|p| p.0 < c[0] - rho);
            for &(x0, i) in &self.points[lo..] {
                if x0 > c[0] + rho {
                    break;
                }
                sum += atom_in_ball(dim, &self.measure.atoms[i], c, m, rho);
            }
        }
        if !self.arcs.is_empty() {
            let lo = self.arcs.partition_point(|a| a.1 < c[0] - rho);
            for &(xl, _, i, full) in &self.arcs[lo..] {
                if xl > c[0] + rho {
                    break;
                }
                let a = &self.measure.atoms[i];
                if let Support::SineArc { p, q, t0, t1 } = a.support {
                    let inside = arc_in_ball(p, q, t0, t1, c, rho);
                    if inside > 0.0 {
                        sum += a.mass * (inside / full).min(1.0);
                    }
                }
            }
        }
        self.measure.scale_factor * sum
    }
}

/// Sphere atoms on the radii `i^{-p}`, `i <= M`, with masses
/// `eta_{d-1} i^{-p(d-1)}` and prefactor `delta^{s-(d-1)}`.
pub fn build_mu_concentric(d: usize, p: f64, theta: f64, s: f64, delta: f64) -> Result<DiscreteMeasure> {
    let spec = SetSpec::concentric_power(d, p);
    spec.validate()?;
    let k = 1.0 - p * (d as f64 - 1.0);
    if k <= 0.0 {
        return Err(Error::param(format!("need p < 1/(d-1), got p={p} d={d}")));
    }
    check_theta_s(theta, s, d as f64)?;
    let lead = 1.0 - (1.0 - theta) * (d as f64 - s);
    if lead <= 0.0 {
        return Err(Error::param(format!(
            "s={s} too small for theta={theta}: need 1-(1-theta)(d-s) > 0"
        )));
    }
    let threshold = 2f64.powf(-(1.0 + p) / (lead * k));
    check_delta(delta, threshold)?;
    let m = theorem_cutoff(&spec, delta, theta, s)? as usize;
    if m > MAX_ATOMS {
        return Err(Error::ResourceLimit(format!("{m} sphere atoms")));
    }
    let eta = sphere_area_constant(d)?;
    let atoms = (1..=m)
        .map(|i| {
            let i = i as f64;
            Atom {
                support: Support::Sphere { radius: i.powf(-p) },
                mass: eta * i.powf(-p * (d as f64 - 1.0)),
            }
        })
        .collect();
    DiscreteMeasure::new(d, atoms, delta.powf(s - (d as f64 - 1.0)))
}

/// Replaces point atoms on the positive reals by uniform sphere atoms of
/// the same radius and mass in R^d.
pub fn build_lambda_lift(radii_measure: &DiscreteMeasure, d: usize) -> Result<DiscreteMeasure> {
    if d < 2 {
        return Err(Error::param(format!("d must be >= 2, got {d}")));
    }
    if radii_measure.dim != 1 {
        return Err(Error::param("lift needs a measure on the real line"));
    }
    let atoms = radii_measure
        .atoms
        .iter()
        .map(|a| match &a.support {
            Support::Point(x) if x[0] > 0.0 => Ok(Atom {
                support: Support::Sphere { radius: x[0] },
                mass: a.mass,
            }),
            Support::Point(x) => Err(Error::param(format!("atom at {} is not positive", x[0]))),
            _ => Err(Error::param("lift needs point atoms")),
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(d, atoms, radii_measure.scale_factor)
}

/// Largest delta in (0, 1) with `2^{-delta^{-gamma}} <= delta^{1/2}`, found by
/// bisection on `log delta`; the condition holds for every smaller delta.
fn points_threshold(gamma: f64) -> f64 {
    let ok = |l: f64| -(-gamma * l).exp() * 2f64.ln() <= 0.5 * l;
    let (mut lo, mut hi) = (-1e4, -1e-12);
    if ok(hi) {
        return 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// `2^M` equal point masses on the circle of radius `M^{-p}`, with
/// `M = ceil(delta^{-theta/(4p)})`.
pub fn build_mu_points_example(p: f64, theta: f64, delta: f64) -> Result<DiscreteMeasure> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param(format!("p must be positive, got {p}")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(format!("theta must lie in (0, 1], got {theta}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    let gamma = theta / (4.0 * p);
    let raw = delta.powf(-gamma);
    if -raw * 2f64.ln() > 0.5 * delta.ln() + 1e-12 {
        return Err(Error::DeltaAboveThreshold {
            delta,
            threshold: points_threshold(gamma),
        });
    }
    let m = {
        let r = raw.round();
        if (raw - r).abs() < 1e-9 * r.max(1.0) {
            r
        } else {
            raw.ceil()
        }
    } as u32;
    if m > 24 {
        return Err(Error::ResourceLimit(format!("2^{m} point atoms")));
    }
    let n = 1usize << m;
    let radius = (m as f64).powf(-p);
    let mass = 1.0 / n as f64;
    let atoms = (0..n)
        .map(|j| {
            let (s, c) = (2.0 * PI * j as f64 / n as f64).sin_cos();
            Atom {
                support: Support::Point(vec![radius * c, radius * s]),
                mass,
            }
        })
        .collect();
    DiscreteMeasure::new(2, atoms, 1.0)
}

/// Arc-length measure on the arcs `t in [i, i+1]`, `i < M`, of the
/// attenuated sine graph, with prefactor `delta^{s-1}`.
pub fn build_mu_sine(p: f64, q: f64, theta: f64, s: f64, delta: f64) -> Result<DiscreteMeasure> {
    let spec = SetSpec::AttenuatedSine { p, q };
    spec.validate()?;
    let k = 1.0 - p * q;
    if k <= 0.0 {
        return Err(Error::param(format!("need pq < 1, got pq={}", p * q)));
    }
    check_theta_s(theta, s, 2.0)?;
    let lead = s - theta * s + 2.0 * theta - 1.0;
    if lead <= 0.0 {
        return Err(Error::param(format!("need s - theta s + 2 theta - 1 > 0, got {lead}")));
    }
    check_delta(delta, 4f64.powf(-(1.0 + p) / (lead * k)))?;
    let m = theorem_cutoff(&spec, delta, theta, s)? as usize;
    if m > MAX_ATOMS {
        return Err(Error::ResourceLimit(format!("{m} arc atoms")));
    }
    let curve = arc_curve(p, q);
    let atoms: Vec<Atom> = (1..m)
        .into_par_iter()
        .map(|i| {
            let (t0, t1) = (i as f64, i as f64 + 1.0);
            Atom {
                support: Support::SineArc { p, q, t0, t1 },
                mass: curve.arc_length(t0, t1, ARC_TOL),
            }
        })
        .collect();
    if atoms.is_empty() {
        return Err(Error::Empty(format!("no arcs below cutoff M={m}")));
    }
    DiscreteMeasure::new(2, atoms, delta.powf(s - 1.0))
}

/// Point masses on the terms `a_n > cutoff` of a radius sequence, with
/// weights `min(1, c (a_n - a_{n+1})^s)` normalised to total mass 1. The
/// cutoff is `floor(1/(2 c delta^s)) delta`.
pub fn build_frostman_greedy(radii: &RadiusSequence, s: f64, c: f64, delta: f64) -> Result<DiscreteMeasure> {
    radii.validate()?;
    if !(s > 0.0 && s <= 1.0) || !(c > 0.0 && c.is_finite()) {
        return Err(Error::param(format!("need s in (0, 1] and c > 0, got s={s} c={c}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    let cutoff = (1.0 / (2.0 * c * delta.powf(s))).floor() * delta;
    let mut atoms = Vec::new();
    let mut n = 1;
    while let Ok(a) = radii.term(n) {
        if a <= cutoff {
            break;
        }
        let gap = radii.term(n + 1).map_or(a, |b| a - b);
        atoms.push(Atom {
            support: Support::Point(vec![a]),
            mass: (c * gap.powf(s)).min(1.0),
        });
        n += 1;
        if atoms.len() > MAX_ATOMS {
            return Err(Error::ResourceLimit(format!("more than {MAX_ATOMS} atoms")));
        }
    }
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    if atoms.is_empty() || total <= 0.0 {
        return Err(Error::Empty(format!("no terms above the cutoff {cutoff}")));
    }
    for a in &mut atoms {
        a.mass /= total;
    }
    DiscreteMeasure::new(1, atoms, 1.0)
}

fn check_theta_s(theta: f64, s: f64, d: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param(format!("theta must lie in (0, 1], got {theta}")));
    }
    if !(s > 0.0 && s <= d) {
        return Err(Error::param(format!("s must lie in (0, {d}], got {s}")));
    }
    Ok(())
}

fn check_delta(delta: f64, threshold: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if delta >= threshold {
        return Err(Error::DeltaAboveThreshold { delta, threshold });
    }
    Ok(())
}

/// The three constructions, as functions of `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureFamily {
    Concentric { d: usize, p: f64 },
    PointsExample { p: f64 },
    Sine { p: f64, q: f64 },
}

impl MeasureFamily {
    pub fn build(&self, theta: f64, s: f64, delta: f64) -> Result<DiscreteMeasure> {
        match *self {
            MeasureFamily::Concentric { d, p } => build_mu_concentric(d, p, theta, s, delta),
            MeasureFamily::PointsExample { p } => build_mu_points_example(p, theta, delta),
            MeasureFamily::Sine { p, q } => build_mu_sine(p, q, theta, s, delta),
        }
    }

    /// Lower bound on total mass guaranteed by the construction.
    pub fn proof_floor(&self) -> f64 {
        match *self {
            MeasureFamily::Concentric { d, p } => {
                sphere_area_constant(d).unwrap_or(f64::NAN) / (2.0 * (1.0 - p * (d as f64 - 1.0)))
            }
            MeasureFamily::PointsExample { .. } => 1.0,
            MeasureFamily::Sine { p, q } => 1.0 / (2.0 * (1.0 - p * q)),
        }
    }

    /// Constant `C` in `mu(U) <= C |U|^s` guaranteed by the construction.
    pub fn proof_cap(&self) -> f64 {
        match *self {
            MeasureFamily::Concentric { d, p } => {
                (2f64.powf(1.0 + p) / p + 1.0) * sphere_area_constant(d).unwrap_or(f64::NAN)
            }
            MeasureFamily::PointsExample { p } => 2f64.powf(p) + 1.0,
            MeasureFamily::Sine { p, .. } => 3.0 * (2f64.powf(1.0 + p) / p + 2.0),
        }
    }

    /// Certificate against the construction's floor and cap, with
    /// [`FLOOR_MARGIN`] and [`CAP_MARGIN`] slack.
    pub fn certify(&self, s: f64, theta: f64, deltas: &[f64], samples: usize) -> Result<LowerBoundCertificate> {
        verify_mass_distribution(
            |delta| self.build(theta, s, delta),
            s,
            theta,
            deltas,
            samples,
            self.proof_floor() * FLOOR_MARGIN,
            self.proof_cap() * CAP_MARGIN,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub center: Vec<f64>,
    pub diameter: f64,
}

fn halton(k: usize, dim: usize) -> f64 {
    const BASES: [u8; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    halton::number(BASES[dim], k + 1)
}

fn direction(dim: usize, k: usize) -> Vec<f64> {
    match dim {
        1 => vec![if halton(k, 2) < 0.5 { -1.0 } else { 1.0 }],
        2 => {
            let (s, c) = (2.0 * PI * halton(k, 2)).sin_cos();
            vec![c, s]
        }
        _ => {
            let mut v: Vec<f64> = (0..dim).map(|j| 2.0 * halton(k, 2 + j % 6) - 1.0 + 1e-3).collect();
            let n = norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
            v
        }
    }
}

/// Deterministic test sets: low-discrepancy centres over the bounding box
/// plus centres on atoms, tangent to sphere atoms from either side, midway
/// between consecutive atoms and at the origin. Diameters are log-uniform
/// in `[delta, delta^theta]`.
pub fn test_sets(measure: &DiscreteMeasure, delta: f64, theta: f64, samples: usize) -> Vec<TestSet> {
    let dim = measure.dim;
    let extent = measure.bbox_extent();
    let n_atoms = measure.atoms.len();
    let span = delta.powf(theta - 1.0);
    (0..samples)
        .map(|k| {
            let diameter = (delta * span.powf(halton(k, 1))).clamp(delta, delta.powf(theta));
            let rho = diameter / 2.0;
            // Half the atom picks concentrate on the last tenth (the cutoff end).
            let h = halton(k, 0);
            let idx = if k % 2 == 0 {
                (h * n_atoms as f64) as usize
            } else {
                n_atoms - 1 - (h * (n_atoms as f64 / 10.0).ceil()) as usize
            }
            .min(n_atoms - 1);
            let atom = &measure.atoms[idx];
            let u = direction(dim, k);
            let anchor = |shift: f64| -> Vec<f64> {
                match &atom.support {
                    Support::Sphere { radius } => u.iter().map(|x| x * (radius + shift)).collect(),
                    Support::Point(x) => {
                        let n = norm(x);
                        x.iter()
                            .map(|v| v + shift * if n > 0.0 { v / n } else { 0.0 })
                            .collect()
                    }
                    Support::SineArc { p, q, t0, t1 } => {
                        let t = t0 + (t1 - t0) * halton(k, 2);
                        let pt = arc_curve(*p, *q).point(t);
                        vec![pt[0], pt[1] + shift]
                    }
                }
            };
            let center = match k % 8 {
                0 | 1 => (0..dim).map(|j| extent * (2.0 * halton(k, 3 + j % 5) - 1.0)).collect(),
                2 | 3 => anchor(0.0),
                4 => anchor(-rho),
                5 => anchor(rho),
                6 => {
                    let a = anchor(0.0);
                    let next = &measure.atoms[(idx + 1).min(n_atoms - 1)];
                    let b = match &next.support {
                        Support::Sphere { radius } => u.iter().map(|x| x * radius).collect(),
                        Support::Point(x) => x.clone(),
                        Support::SineArc { p, t0, .. } => vec![t0.powf(-p), 0.0],
                    };
                    a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
                }
                _ => vec![0.0; dim],
            };
            TestSet { center, diameter }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Supported,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Supported => "supported",
            Verdict::Violated => "violated",
        })
    }
}

impl FromStr for Verdict {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supported" => Ok(Verdict::Supported),
            "violated" => Ok(Verdict::Violated),
            _ => Err(Error::parse(s, "expected supported or violated")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCheck {
    pub delta: f64,
    pub total_mass: f64,
    /// Largest sampled `mu(U) / |U|^s`.
    pub ratio_max: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundCertificate {
    pub s: f64,
    pub theta: f64,
    pub delta_range: Vec<f64>,
    pub rows: Vec<DeltaCheck>,
    /// Deltas the construction rejected, with the reason.
    pub skipped: Vec<(f64, String)>,
    pub total_mass_min: f64,
    pub ratio_max: f64,
    pub floor: f64,
    pub cap: f64,
    pub samples: usize,
    pub verdict: Verdict,
}

fn verdict(total: f64, ratio: f64, floor: f64, cap: f64) -> Verdict {
    if total >= floor && ratio <= cap {
        Verdict::Supported
    } else {
        Verdict::Violated
    }
}

/// Samples test sets for each delta and checks `total >= floor` and
/// `mu(U)/|U|^s <= cap`. Deltas rejected by the construction's threshold
/// are skipped and noted; other construction errors are returned.
pub fn verify_mass_distribution<F>(
    build: F,
    s: f64,
    theta: f64,
    deltas: &[f64],
    samples: usize,
    floor: f64,
    cap: f64,
) -> Result<LowerBoundCertificate>
where
    F: Fn(f64) -> Result<DiscreteMeasure>,
{
    if samples < MIN_SAMPLES {
        return Err(Error::param(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if deltas.is_empty() {
        return Err(Error::param("empty delta list"));
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &delta in deltas {
        let measure = match build(delta) {
            Ok(m) => m,
            Err(e @ Error::DeltaAboveThreshold { .. }) => {
                skipped.push((delta, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let total = measure.total_mass();
        let index = BallIndex::new(&measure);
        let sets = test_sets(&measure, delta, theta, samples);
        let ratio = sets
            .par_iter()
            .map(|u| index.ball(&u.center, u.diameter / 2.0) / u.diameter.powf(s))
            .reduce(|| 0.0, f64::max);
        rows.push(DeltaCheck {
            delta,
            total_mass: total,
            ratio_max: ratio,
            verdict: verdict(total, ratio, floor, cap),
        });
    }
    if rows.is_empty() {
        return Err(Error::Empty("every delta was rejected by the construction".into()));
    }
    let total_mass_min = rows.iter().map(|r| r.total_mass).fold(f64::INFINITY, f64::min);
    let ratio_max = rows.iter().map(|r| r.ratio_max).fold(0.0, f64::max);
    Ok(LowerBoundCertificate {
        s,
        theta,
        delta_range: rows.iter().map(|r| r.delta).collect(),
        rows,
        skipped,
        total_mass_min,
        ratio_max,
        floor,
        cap,
        samples,
        verdict: verdict(total_mass_min, ratio_max, floor, cap),
    })
}

impl LowerBoundCertificate {
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.rows {
            writeln!(
                out,
                "s={} theta={} delta={} total_mass={} ratio_max={} floor={} cap={} samples={} verdict={}",
                self.s, self.theta, r.delta, r.total_mass, r.ratio_max, self.floor, self.cap, self.samples, r.verdict
            )?;
        }
        for (delta, reason) in &self.skipped {
            writeln!(out, "skipped delta={delta} reason={reason}")?;
        }
        writeln!(
            out,
            "summary s={} theta={} total_mass_min={} ratio_max={} floor={} cap={} samples={} verdict={}",
            self.s, self.theta, self.total_mass_min, self.ratio_max, self.floor, self.cap, self.samples, self.verdict
        )?;
        Ok(())
    }

    pub fn read_text<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        let mut summary = None;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("skipped ") {
                let (d, reason) = rest
                    .strip_prefix("delta=")
                    .and_then(|r| r.split_once(" reason="))
                    .ok_or_else(|| Error::parse(line, "malformed skipped line"))?;
                skipped.push((parse_number(d)?, reason.to_string()));
            } else if let Some(rest) = line.strip_prefix("summary ") {
                summary = Some(fields(rest)?);
            } else {
                let f = fields(line)?;
                rows.push(DeltaCheck {
                    delta: num(&f, "delta")?,
                    total_mass: num(&f, "total_mass")?,
                    ratio_max: num(&f, "ratio_max")?,
                    verdict: get(&f, "verdict")?.parse()?,
                });
            }
        }
        let f = summary.ok_or_else(|| Error::parse("", "missing summary line"))?;
        Ok(LowerBoundCertificate {
            s: num(&f, "s")?,
            theta: num(&f, "theta")?,
            delta_range: rows.iter().map(|r| r.delta).collect(),
            rows,
            skipped,
            total_mass_min: num(&f, "total_mass_min")?,
            ratio_max: num(&f, "ratio_max")?,
            floor: num(&f, "floor")?,
            cap: num(&f, "cap")?,
            samples: num(&f, "samples")? as usize,
            verdict: get(&f, "verdict")?.parse()?,
        })
    }
}

fn fields(line: &str) -> Result<Vec<(&str, &str)>> {
    line.split_whitespace()
        .map(|t| t.split_once('=').ok_or_else(|| Error::parse(t, "expected key=value")))
        .collect()
}

fn get<'a>(f: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    f.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::parse(key, "missing field"))
}

fn num(f: &[(&str, &str)], key: &str) -> Result<f64> {
    let v = get(f, key)?;
    match v {
        "inf" => Ok(f64::INFINITY),
        _ => parse_number(v),
    }
}
