use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A decreasing sequence of positive radii converging to zero.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusSequence {
    /// `n^{-p}`, the sequence behind `F_p`.
    Power { p: f64 },
    /// `ratio^{-n}` with `ratio > 1`.
    Geometric { ratio: f64 },
    /// `1/log(n+1)`, i.e. `{1/log m : m >= 2}` indexed from `n = 1`.
    Logarithmic,
    /// Explicit strictly decreasing positive radii; the last entry truncates the sequence.
    Table(Vec<f64>),
}

impl RadiusSequence {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadiusSequence::Power { p } => positive("p", *p),
            RadiusSequence::Geometric { ratio } => {
                if ratio.is_finite() && *ratio > 1.0 {
                    Ok(())
                } else {
                    Err(Error::param(format!("geometric ratio must be > 1, got {ratio}")))
                }
            }
            RadiusSequence::Logarithmic => Ok(()),
            RadiusSequence::Table(values) => {
                if values.is_empty() {
                    return Err(Error::param("radius table is empty"));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::param("radius table entries must be positive"));
                }
                if values.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(Error::param("radius table must be strictly decreasing"));
                }
                Ok(())
            }
        }
    }

    /// The n-th term, `n >= 1`.
    pub fn term(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::param("radius index starts at 1"));
        }
        match self {
            RadiusSequence::Power { p } => Ok((n as f64).powf(-p)),
            RadiusSequence::Geometric { ratio } => Ok(ratio.powf(-(n as f64))),
            RadiusSequence::Logarithmic => Ok(1.0 / ((n + 1) as f64).ln()),
            RadiusSequence::Table(values) => values.get(n - 1).copied().ok_or(Error::IndexOutOfRange {
                index: n,
                len: values.len(),
            }),
        }
    }

    /// Number of terms, `None` for the infinite kinds.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match self {
            RadiusSequence::Table(values) => Some(values.len()),
            _ => None,
        }
    }

    /// Real-valued index `x` with `term(x) = r` for the analytic kinds.
    fn inverse(&self, r: f64) -> f64 {
        match self {
            RadiusSequence::Power { p } => r.powf(-1.0 / p),
            RadiusSequence::Geometric { ratio } => -r.ln() / ratio.ln(),
            RadiusSequence::Logarithmic => (1.0 / r).exp() - 1.0,
            RadiusSequence::Table(_) => unreachable!("tables have no analytic inverse"),
        }
    }

    /// Smallest index `n` with `term(n) <= r`, or `None` when every term exceeds `r`.
    pub(crate) fn first_index_at_most(&self, r: f64) -> Option<usize> {
        if let RadiusSequence::Table(values) = self {
            let idx = values.partition_point(|v| *v > r);
            return (idx < values.len()).then_some(idx + 1);
        }
        if r <= 0.0 {
            return None;
        }
        let x = self.inverse(r);
        if !x.is_finite() || x > 1e15 {
            return None;
        }
        let mut n = (x.floor().max(1.0)) as usize;
        while n > 1 && self.term(n - 1).is_ok_and(|t| t <= r) {
            n -= 1;
        }
        while self.term(n).is_ok_and(|t| t > r) {
            n += 1;
        }
        Some(n)
    }

    /// Whether some term lies in the half-open interval `(lo, hi]`.
    pub(crate) fn has_term_in(&self, lo: f64, hi: f64) -> bool {
        if hi <= lo {
            return false;
        }
        if let RadiusSequence::Table(values) = self {
            return values.iter().any(|v| *v > lo && *v <= hi);
        }
        match self.first_index_at_most(hi) {
            Some(n) => self.term(n).is_ok_and(|t| t > lo),
            // Index beyond f64 integer resolution: the terms are packed far
            // more densely than any representable interval.
            None => self.inverse(lo) > self.inverse(hi),
        }
    }

    /// Distance from `r` to the nearest term, checking both neighbours of the
    /// crossing point.
    pub(crate) fn nearest_distance(&self, r: f64) -> f64 {
        if let RadiusSequence::Table(values) = self {
            return values.iter().map(|v| (v - r).abs()).fold(f64::INFINITY, f64::min);
        }
        match self.first_index_at_most(r) {
            Some(n) => {
                let below = (r - self.term(n).unwrap_or(0.0)).abs();
                let above = if n > 1 {
                    (self.term(n - 1).unwrap_or(f64::INFINITY) - r).abs()
                } else {
                    f64::INFINITY
                };
                below.min(above)
            }
            // All terms above r (r <= 0 or r beyond resolution): the infimum
            // over the tail approaches |r|.
            None => {
                if r <= 0.0 {
                    r.abs()
                } else {
                    r
                }
            }
        }
    }
}

/// Number of points `b_i` on the i-th circle of an isolated-points set.
#[derive(Debug, Clone, PartialEq)]
pub enum CountRule {
    Constant(u64),
    /// `b_i = max(1, floor(i^l) - floor((i-1)^l))`, so the partial sums track `n^l`.
    PowerSum(f64),
    /// `b_i = floor(base^i)`.
    Exponential(f64),
}

impl CountRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            CountRule::Constant(k) if *k >= 1 => Ok(()),
            CountRule::Constant(_) => Err(Error::param("constant count must be >= 1")),
            CountRule::PowerSum(l) => positive("l", *l),
            CountRule::Exponential(b) if b.is_finite() && *b > 1.0 => Ok(()),
            CountRule::Exponential(b) => Err(Error::param(format!("exponential base must be > 1, got {b}"))),
        }
    }

    pub fn count(&self, i: usize) -> u64 {
        let i = i as f64;
        match self {
            CountRule::Constant(k) => *k,
            CountRule::PowerSum(l) => {
                let hi = i.powf(*l).floor();
                let lo = (i - 1.0).powf(*l).floor();
                ((hi - lo).max(1.0)).min(u64::MAX as f64) as u64
            }
            CountRule::Exponential(b) => b.powf(i).floor().min(u64::MAX as f64) as u64,
        }
    }

    /// `limsup log(sum b_i) / log n`, when finite.
    pub fn growth_exponent(&self) -> Option<f64> {
        match self {
            CountRule::Constant(_) => Some(1.0),
            CountRule::PowerSum(l) => Some(l.max(1.0)),
            CountRule::Exponential(_) => None,
        }
    }
}

/// Description of one of the set families.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    /// `F_p = {n^{-p}}` in R.
    FpSequence { p: f64 },
    /// Union of origin-centred (d-1)-spheres with the given radii.
    ConcentricSpheres { d: usize, radii: RadiusSequence },
    /// `(t^{-p} sin(pi t), t^{-p} cos(pi t))`, `t >= 1`.
    PolynomialSpiral { p: f64 },
    /// `(t^{-p} sin(pi t), t^{-q} cos(pi t))`, `t >= 1`, `q >= p`.
    EllipticalSpiral { p: f64, q: f64 },
    /// Graph of `sin(pi x^{-1/p})` on `(0, 1]`.
    ProductSine { p: f64 },
    /// Graph of `x^q sin(pi x^{-1/p})` on `(0, 1]`.
    AttenuatedSine { p: f64, q: f64 },
    /// `b_i` points evenly spaced on the circle of radius `i^{-p}` in R^2.
    IsolatedPoints { p: f64, count: CountRule },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive, got {v}")))
    }
}

impl SetSpec {
    pub fn concentric_power(d: usize, p: f64) -> Self {
        SetSpec::ConcentricSpheres {
            d,
            radii: RadiusSequence::Power { p },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SetSpec::FpSequence { p } | SetSpec::PolynomialSpiral { p } | SetSpec::ProductSine { p } => {
                positive("p", *p)
            }
            SetSpec::ConcentricSpheres { d, radii } => {
                if *d < 2 {
                    return Err(Error::param(format!("concentric spheres need d >= 2, got {d}")));
                }
                radii.validate()
            }
            SetSpec::EllipticalSpiral { p, q } => {
                positive("p", *p)?;
                positive("q", *q)?;
                if q < p {
                    return Err(Error::param(format!(
                        "elliptical spiral requires q >= p, got p={p} q={q}"
                    )));
                }
                Ok(())
            }
            SetSpec::AttenuatedSine { p, q } => {
                positive("p", *p)?;
                positive("q", *q)
            }
            SetSpec::IsolatedPoints { p, count } => {
                positive("p", *p)?;
                count.validate()
            }
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            SetSpec::FpSequence { .. } => 1,
            SetSpec::ConcentricSpheres { d, .. } => *d,
            _ => 2,
        }
    }

    /// Upper bound on the diameter of the set (diagonal of a bounding box).
    pub fn diameter(&self) -> f64 {
        match self {
            SetSpec::FpSequence { .. } => 1.0,
            SetSpec::ConcentricSpheres { radii, .. } => 2.0 * radii.term(1).unwrap_or(1.0),
            SetSpec::PolynomialSpiral { .. } | SetSpec::EllipticalSpiral { .. } | SetSpec::IsolatedPoints { .. } => 2.0,
            SetSpec::ProductSine { .. } | SetSpec::AttenuatedSine { .. } => 5f64.sqrt(),
        }
    }

    /// Short family tag used by the text grammar.
    pub fn family_name(&self) -> &'static str {
        match self {
            SetSpec::FpSequence { .. } => "fp",
            SetSpec::ConcentricSpheres { .. } => "concentric",
            SetSpec::PolynomialSpiral { .. } => "spiral",
            SetSpec::EllipticalSpiral { .. } => "elliptical",
            SetSpec::ProductSine { .. } => "product-sine",
            SetSpec::AttenuatedSine { .. } => "attenuated",
            SetSpec::IsolatedPoints { .. } => "isolated",
        }
    }

    /// Parses a whitespace-separated `key=value` string.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text.split_whitespace())?;
        let spec = Self::from_key_values(&mut kv)?;
        kv.finish()?;
        Ok(spec)
    }

    /// Consumes the spec keys from `kv`, leaving everything else in place.
    pub fn from_key_values(kv: &mut KeyValues) -> Result<Self> {
        let family = kv.take_str("family")?;
        let spec = match family.as_str() {
            "fp" => SetSpec::FpSequence { p: kv.take_f64("p")? },
            "concentric" => {
                let d = kv.take_usize("d")?;
                let radii = match kv.take_str_or("radii", "power").as_str() {
                    "power" => RadiusSequence::Power { p: kv.take_f64("p")? },
                    "geometric" => RadiusSequence::Geometric {
                        ratio: kv.take_f64("ratio")?,
                    },
                    "log" => RadiusSequence::Logarithmic,
                    "table" => {
                        let raw = kv.take_str("values")?;
                        let values = raw.split(',').map(parse_number).collect::<Result<Vec<_>>>()?;
                        RadiusSequence::Table(values)
                    }
                    other => return Err(Error::parse(format!("radii={other}"), "unknown radius sequence")),
                };
                SetSpec::ConcentricSpheres { d, radii }
            }
            "spiral" => SetSpec::PolynomialSpiral { p: kv.take_f64("p")? },
            "elliptical" => SetSpec::EllipticalSpiral {
                p: kv.take_f64("p")?,
                q: kv.take_f64("q")?,
            },
            "product-sine" => SetSpec::ProductSine { p: kv.take_f64("p")? },
            "attenuated" => SetSpec::AttenuatedSine {
                p: kv.take_f64("p")?,
                q: kv.take_f64("q")?,
            },
            "isolated" => {
                let p = kv.take_f64("p")?;
                let count = match kv.take_str_or("count", "constant").as_str() {
                    "constant" => CountRule::Constant(kv.take_usize("k")? as u64),
                    "power" => CountRule::PowerSum(kv.take_f64("l")?),
                    "exp" => CountRule::Exponential(kv.take_f64("base")?),
                    other => return Err(Error::parse(format!("count={other}"), "unknown count rule")),
                };
                SetSpec::IsolatedPoints { p, count }
            }
            other => return Err(Error::parse(format!("family={other}"), "unknown family")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "family={}", self.family_name())?;
        match self {
            SetSpec::FpSequence { p } | SetSpec::PolynomialSpiral { p } | SetSpec::ProductSine { p } => {
                write!(f, " p={p}")
            }
            SetSpec::EllipticalSpiral { p, q } | SetSpec::AttenuatedSine { p, q } => {
                write!(f, " p={p} q={q}")
            }
            SetSpec::ConcentricSpheres { d, radii } => {
                write!(f, " d={d}")?;
                match radii {
                    RadiusSequence::Power { p } => write!(f, " radii=power p={p}"),
                    RadiusSequence::Geometric { ratio } => write!(f, " radii=geometric ratio={ratio}"),
                    RadiusSequence::Logarithmic => write!(f, " radii=log"),
                    RadiusSequence::Table(values) => {
                        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                        write!(f, " radii=table values={}", joined.join(","))
                    }
                }
            }
            SetSpec::IsolatedPoints { p, count } => {
                write!(f, " p={p}")?;
                match count {
                    CountRule::Constant(k) => write!(f, " count=constant k={k}"),
                    CountRule::PowerSum(l) => write!(f, " count=power l={l}"),
                    CountRule::Exponential(b) => write!(f, " count=exp base={b}"),
                }
            }
        }
    }
}

impl std::str::FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SetSpec::parse(s)
    }
}

/// Parses reals in the forms `0.5`, `1e-3`, `10^7`, `2^-8`.
pub fn parse_number(token: &str) -> Result<f64> {
    let t = token.trim();
    let value = if let Some((base, exp)) = t.split_once('^') {
        let b: f64 = base.parse().map_err(|_| Error::parse(token, "bad base"))?;
        let e: f64 = exp.parse().map_err(|_| Error::parse(token, "bad exponent"))?;
        b.powf(e)
    } else {
        t.parse().map_err(|_| Error::parse(token, "not a number"))?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::parse(token, "not finite"))
    }
}

/// Flat `key=value` token bag. Keys are consumed by the parsers; leftovers are
/// reported by [`KeyValues::finish`].
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(tok, "expected key=value"))?;
            if k.is_empty() || v.is_empty() {
                return Err(Error::parse(tok, "empty key or value"));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::parse(tok, "duplicate key"));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn take_str(&mut self, key: &str) -> Result<String> {
        self.entries
            .remove(key)
            .ok_or_else(|| Error::parse(key, "missing required key"))
    }

    pub fn take_str_or(&mut self, key: &str, default: &str) -> String {
        self.entries.remove(key).unwrap_or_else(|| default.to_string())
    }

    pub fn take_f64(&mut self, key: &str) -> Result<f64> {
        let raw = self.take_str(key)?;
        parse_number(&raw).map_err(|_| Error::parse(format!("{key}={raw}"), "not a number"))
    }

    pub fn take_f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(raw) => parse_number(&raw)
                .map(Some)
                .map_err(|_| Error::parse(format!("{key}={raw}"), "not a number")),
        }
    }

    pub fn take_usize(&mut self, key: &str) -> Result<usize> {
        let raw = self.take_str(key)?;
        let v = parse_number(&raw).map_err(|_| Error::parse(format!("{key}={raw}"), "not a number"))?;
        if v < 0.0 || v.fract() != 0.0 || v > 1e18 {
            return Err(Error::parse(format!("{key}={raw}"), "expected a non-negative integer"));
        }
        Ok(v as usize)
    }

    /// Errors on the first unconsumed key.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, v)) => Err(Error::parse(format!("{k}={v}"), "unknown key")),
        }
    }
}
