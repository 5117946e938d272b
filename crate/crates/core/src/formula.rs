//! Closed-form intermediate dimensions, bounds and sufficient conditions.
//!
//! Every `dim_*` function returns the Hausdorff value at `theta = 0`.

use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::setlib::{csv_err, gap_counts, parse_number, RadiusSequence, SetSpec};

/// Margin used by [`check_comparison_conditions`].
pub const EMPIRICAL_MARGIN: f64 = 0.01;

/// Tolerance of [`identity_checks`].
pub const IDENTITY_TOL: f64 = 1e-12;

pub fn dim_fp(p: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    theta / (p + theta)
}

pub fn dim_concentric(d: usize, p: f64, theta: f64) -> f64 {
    let d = d as f64;
    let k = 1.0 - p * (d - 1.0);
    if theta == 0.0 || k <= 0.0 {
        return d - 1.0;
    }
    (d * p * (d - 1.0) + d * theta * k) / (d * p + theta * k)
}

pub fn dim_spiral(p: f64, theta: f64) -> f64 {
    if theta == 0.0 || p >= 1.0 {
        return 1.0;
    }
    1.0 + theta * (1.0 - p) / (2.0 * p + theta * (1.0 - p))
}

pub fn dim_elliptical(p: f64, q: f64, theta: f64) -> f64 {
    if theta == 0.0 || p >= 1.0 {
        return 1.0;
    }
    (p + q + 2.0 * theta * (1.0 - p)) / (p + q + theta * (1.0 - p))
}

pub fn dim_product_sine(p: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 1.0;
    }
    (2.0 * theta + p) / (theta + p)
}

pub fn dim_attenuated(p: f64, q: f64, theta: f64) -> f64 {
    let k = 1.0 - p * q;
    if theta == 0.0 || k <= 0.0 {
        return 1.0;
    }
    (p * (1.0 + q) + 2.0 * theta * k) / (p * (1.0 + q) + theta * k)
}

/// `limsup log(sum_{i<=n} b_i) / log n` for an isolated-points set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthExponent(f64);

impl GrowthExponent {
    pub fn new(l: f64) -> Result<Self> {
        if l.is_finite() && l > 0.0 {
            Ok(GrowthExponent(l))
        } else {
            Err(Error::param(format!(
                "growth exponent must be positive and finite, got {l}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Upper bound `theta l d / (p d + theta l)` for points on spheres.
pub fn dim_isolated_upper(d: usize, p: f64, l: GrowthExponent, theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let (d, l) = (d as f64, l.0);
    theta * l * d / (p * d + theta * l)
}

/// Lower bound `theta / (p + theta)`, valid when the non-empty spheres have
/// positive density.
pub fn dim_isolated_lower_density(p: f64, theta: f64) -> f64 {
    dim_fp(p, theta)
}

/// `(min(d-1, d dim), min(d-1+dim, d))` for spheres with radii of dimension `dim_seq`.
pub fn bounds_general_concentric(d: usize, dim_seq: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&dim_seq) {
        return Err(Error::param(format!("dim_seq must lie in [0, 1], got {dim_seq}")));
    }
    let d = d as f64;
    Ok(((d - 1.0).min(d * dim_seq), (d - 1.0 + dim_seq).min(d)))
}

/// Closed form for the family, when one is known.
pub fn formula_dimension(spec: &SetSpec, theta: f64) -> Option<f64> {
    Some(match spec {
        SetSpec::FpSequence { p } => dim_fp(*p, theta),
        SetSpec::ConcentricSpheres { d, radii } => match radii {
            RadiusSequence::Power { p } => dim_concentric(*d, *p, theta),
            RadiusSequence::Geometric { .. } | RadiusSequence::Table(_) => (*d - 1) as f64,
            RadiusSequence::Logarithmic => {
                if theta == 0.0 {
                    (*d - 1) as f64
                } else {
                    *d as f64
                }
            }
        },
        SetSpec::PolynomialSpiral { p } => dim_spiral(*p, theta),
        SetSpec::EllipticalSpiral { p, q } => dim_elliptical(*p, *q, theta),
        SetSpec::ProductSine { p } => dim_product_sine(*p, theta),
        SetSpec::AttenuatedSine { p, q } => dim_attenuated(*p, *q, theta),
        SetSpec::IsolatedPoints { .. } => return None,
    })
}

/// Outcome of the finite-horizon comparison test.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub upper_applies: bool,
    pub lower_applies: bool,
    /// `sup a_n n^p` over the tail `n in [horizon/2, horizon]`.
    pub tail_sup: f64,
    /// `inf A_{p,n} / n` over the same tail.
    pub tail_density: f64,
    pub horizon: usize,
}

impl ComparisonReport {
    pub fn label(&self) -> &'static str {
        "empirical at horizon"
    }
}

/// Finite-horizon check of `limsup a_n n^p < 1` and `liminf A_{p,n}/n > 0`,
/// each required to hold with margin [`EMPIRICAL_MARGIN`] over the tail.
pub fn check_comparison_conditions(seq: &RadiusSequence, p: f64, horizon: usize) -> Result<ComparisonReport> {
    if horizon < 100 {
        return Err(Error::param(format!("horizon must be >= 100, got {horizon}")));
    }
    seq.validate()?;
    let counts = gap_counts(seq, p, horizon);
    let start = horizon / 2;
    let mut tail_sup = f64::NEG_INFINITY;
    let mut tail_density = f64::INFINITY;
    for n in start..=horizon {
        let term = match seq.term(n) {
            Ok(t) => t,
            // Finite tables behave as if continued by zeros.
            Err(Error::IndexOutOfRange { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        tail_sup = tail_sup.max(term * (n as f64).powf(p));
        tail_density = tail_density.min(counts[n - 1] as f64 / n as f64);
    }
    Ok(ComparisonReport {
        upper_applies: tail_sup <= 1.0 - EMPIRICAL_MARGIN,
        lower_applies: tail_density >= EMPIRICAL_MARGIN,
        tail_sup,
        tail_density,
        horizon,
    })
}

/// Per-identity outcome; the spiral identity is `None` when `q < p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub concentric_vs_attenuated: bool,
    pub spiral_vs_attenuated: Option<bool>,
}

pub fn identity_report(p: f64, q: f64, d: usize, grid: &ThetaGrid) -> IdentityReport {
    let c = grid.values().iter().all(|&t| {
        let lhs = dim_concentric(d, p, t) - (d as f64 - 1.0);
        let rhs = dim_attenuated(p, (d - 1) as f64, t) - 1.0;
        (lhs - rhs).abs() <= IDENTITY_TOL
    });
    let s = (q >= p).then(|| {
        grid.values()
            .iter()
            .all(|&t| (dim_elliptical(p, q, t) - dim_attenuated(q, p / q, t)).abs() <= IDENTITY_TOL)
    });
    IdentityReport {
        concentric_vs_attenuated: c,
        spiral_vs_attenuated: s,
    }
}

/// True iff both identities hold on the grid (false when `q < p`).
pub fn identity_checks(p: f64, q: f64, d: usize, grid: &ThetaGrid) -> bool {
    let r = identity_report(p, q, d, grid);
    r.concentric_vs_attenuated && r.spiral_vs_attenuated == Some(true)
}

/// Sorted, deduplicated values in `[0, 1]` containing both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    values: Vec<f64>,
}

impl ThetaGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("theta values must lie in [0, 1]"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.first() != Some(&0.0) || values.last() != Some(&1.0) {
            return Err(Error::param("theta grid must contain 0 and 1"));
        }
        Ok(ThetaGrid { values })
    }

    /// `a, a+step, ..., b` inclusive, each value rounded to 1e-12.
    pub fn range(a: f64, b: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || b < a {
            return Err(Error::param(format!("bad theta range {a}:{b}:{step}")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        let mut values: Vec<f64> = (0..=n).map(|i| round12(a + i as f64 * step)).collect();
        if (values[n] - b).abs() > 1e-9 {
            values.push(b);
        }
        Self::new(values)
    }

    /// Parses `a:b:step`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::parse(text, "expected a:b:step"));
        }
        Self::range(
            parse_number(parts[0])?,
            parse_number(parts[1])?,
            parse_number(parts[2])?,
        )
    }

    pub fn uniform(n: usize) -> Self {
        let values = (0..=n).map(|i| i as f64 / n as f64).collect();
        ThetaGrid { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Source of a profile's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Formula,
    CoverUpper,
    MeasureLower,
    Estimate,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Formula => "formula",
            Provenance::CoverUpper => "cover-upper",
            Provenance::MeasureLower => "measure-lower",
            Provenance::Estimate => "estimate",
        })
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "formula" => Provenance::Formula,
            "cover-upper" => Provenance::CoverUpper,
            "measure-lower" => Provenance::MeasureLower,
            "estimate" => Provenance::Estimate,
            _ => return Err(Error::parse(s, "unknown provenance")),
        })
    }
}

/// Dimension values over a theta grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionProfile {
    pub grid: ThetaGrid,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub spec: Option<SetSpec>,
}

impl DimensionProfile {
    /// Formula profile of `spec`; errors when the family has no closed form.
    pub fn from_formula(spec: &SetSpec, grid: ThetaGrid) -> Result<Self> {
        spec.validate()?;
        let values = grid
            .values()
            .iter()
            .map(|&t| formula_dimension(spec, t))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Unsupported(format!("no closed form for {}", spec.family_name())))?;
        Ok(DimensionProfile {
            grid,
            values,
            provenance: Provenance::Formula,
            spec: Some(spec.clone()),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "value", "provenance"]).map_err(csv_err)?;
        for (t, v) in self.grid.values().iter().zip(&self.values) {
            w.write_record([t.to_string(), format!("{v:.12}"), self.provenance.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut thetas = Vec::new();
        let mut values = Vec::new();
        let mut provenance = None;
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != 3 {
                return Err(Error::parse(format!("{rec:?}"), "expected 3 fields"));
            }
            thetas.push(parse_number(&rec[0])?);
            values.push(parse_number(&rec[1])?);
            let p: Provenance = rec[2].parse()?;
            if provenance.get_or_insert(p) != &p {
                return Err(Error::parse(&rec[2], "mixed provenance"));
            }
        }
        let provenance = provenance.ok_or_else(|| Error::Empty("profile has no rows".into()))?;
        Ok(DimensionProfile {
            grid: ThetaGrid::new(thetas)?,
            values,
            provenance,
            spec: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn documented_values() {
        assert!(close(dim_fp(1.0, 1.0), 0.5));
        assert_eq!(dim_fp(2.0, 0.0), 0.0);
        assert!(close(dim_fp(0.5, 0.5), 0.5));
        assert_eq!(dim_concentric(2, 1.0, 0.7), 1.0);
        assert!(close(dim_concentric(2, 0.5, 1.0), 4.0 / 3.0));
        assert_eq!(dim_concentric(3, 0.2, 0.0), 2.0);
        assert!(close(dim_spiral(0.5, 1.0), 4.0 / 3.0));
        assert_eq!(dim_spiral(2.0, 0.3), 1.0);
        assert_eq!(dim_spiral(0.5, 0.0), 1.0);
        assert_eq!(dim_elliptical(1.0, 2.0, 0.5), 1.0);
        assert!(close(dim_elliptical(0.5, 0.5, 1.0), 4.0 / 3.0));
        assert!(close(dim_elliptical(0.5, 1.5, 1.0), 1.2));
        assert!(close(dim_product_sine(1.0, 1.0), 1.5));
        assert_eq!(dim_product_sine(1.0, 0.0), 1.0);
        assert!(close(dim_product_sine(3.0, 1.0), 1.25));
        assert!(close(dim_attenuated(1.0, 0.5, 1.0), 1.25));
        assert_eq!(dim_attenuated(1.0, 2.0, 0.8), 1.0);
        assert_eq!(dim_attenuated(0.5, 1.0, 0.0), 1.0);
        let l1 = GrowthExponent::new(1.0).unwrap();
        assert!(close(dim_isolated_upper(2, 1.0, l1, 1.0), 2.0 / 3.0));
        assert_eq!(dim_isolated_upper(2, 1.0, l1, 0.0), 0.0);
        let l2 = GrowthExponent::new(2.0).unwrap();
        assert!(close(dim_isolated_upper(3, 2.0, l2, 1.0), 0.75));
        assert!(close(dim_isolated_lower_density(1.0, 1.0), 0.5));
        assert!(close(dim_isolated_lower_density(0.25, 0.25), 0.5));
    }

    #[test]
    fn general_bounds() {
        assert_eq!(bounds_general_concentric(2, 0.0).unwrap(), (0.0, 1.0));
        assert_eq!(bounds_general_concentric(2, 1.0).unwrap(), (1.0, 2.0));
        assert_eq!(bounds_general_concentric(3, 0.5).unwrap(), (1.5, 2.5));
        assert!(bounds_general_concentric(2, 1.5).is_err());
    }

    #[test]
    fn comparison_examples() {
        let g = check_comparison_conditions(&RadiusSequence::Geometric { ratio: 2.0 }, 1.0, 10_000).unwrap();
        assert!(g.upper_applies && !g.lower_applies);
        let pw = check_comparison_conditions(&RadiusSequence::Power { p: 0.5 }, 0.5, 1000).unwrap();
        assert!(!pw.upper_applies && pw.lower_applies);
        let lg = check_comparison_conditions(&RadiusSequence::Logarithmic, 1.0, 10_000).unwrap();
        assert!(!lg.upper_applies && lg.lower_applies);
        assert_eq!(lg.label(), "empirical at horizon");
        assert!(check_comparison_conditions(&RadiusSequence::Logarithmic, 1.0, 99).is_err());
    }

    #[test]
    fn identity_examples() {
        assert!(identity_checks(
            0.5,
            1.0,
            2,
            &ThetaGrid::new(vec![0.0, 0.5, 1.0]).unwrap()
        ));
        assert!(identity_checks(1.0, 2.0, 3, &ThetaGrid::new(vec![0.0, 1.0]).unwrap()));
        assert!(identity_checks(0.3, 0.3, 2, &ThetaGrid::uniform(10)));
        let r = identity_report(0.5, 0.2, 2, &ThetaGrid::uniform(4));
        assert_eq!(r.spiral_vs_attenuated, None);
    }

    #[test]
    fn grid_range_is_inclusive() {
        let g = ThetaGrid::parse("0:1:0.1").unwrap();
        assert_eq!(g.values().len(), 11);
        assert_eq!(g.values()[3], 0.3);
        assert!(ThetaGrid::parse("0.2:1:0.1").is_err());
    }

    #[test]
    fn profile_csv_round_trip() {
        let spec = SetSpec::concentric_power(2, 0.5);
        let prof = DimensionProfile::from_formula(&spec, ThetaGrid::parse("0:1:0.1").unwrap()).unwrap();
        let mut a = Vec::new();
        prof.write_csv(&mut a).unwrap();
        let text = String::from_utf8(a.clone()).unwrap();
        assert!(text.ends_with("1,1.333333333333,formula\n"));
        let back = DimensionProfile::read_csv(&a[..]).unwrap();
        let mut b = Vec::new();
        back.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }
}
