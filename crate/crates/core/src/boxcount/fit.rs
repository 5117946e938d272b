use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::setlib::parse_number;

/// Absolute tolerance on `s` for the unit-cost bisection.
pub const S_TOL: f64 = 1e-4;

/// Model string reported with every fit.
pub const FIT_MODEL: &str = "a + b/log(1/delta)";

/// Smallest `s` in `[0, s_max]` with `cost(s) <= 1`, for `cost` decreasing in `s`.
/// Clamps to the interval ends when the crossing lies outside it.
pub fn bisect_unit_cost(cost: impl Fn(f64) -> f64, s_max: f64) -> f64 {
    if cost(0.0) <= 1.0 {
        return 0.0;
    }
    if cost(s_max) > 1.0 {
        return s_max;
    }
    let (mut lo, mut hi) = (0.0, s_max);
    while hi - lo > S_TOL / 4.0 {
        let mid = 0.5 * (lo + hi);
        if cost(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One row of an estimate: the unit-cost exponent at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub delta: f64,
    pub s_star: f64,
    /// Radius below which the coarse scale was used (0 for single-scale covers).
    pub inner_radius: f64,
    /// `cost(s_star) - 1`.
    pub cost_residual: f64,
}

/// Least-squares fit of `s*(delta) = a + b / log(1/delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub a: f64,
    pub b: f64,
    pub rmse: f64,
}

pub fn fit_extrapolation(rows: &[DeltaRow]) -> Result<Fit> {
    if rows.len() < 2 {
        return Err(Error::param("need at least two scales to extrapolate"));
    }
    let xs: Vec<f64> = rows.iter().map(|r| 1.0 / (1.0 / r.delta).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.s_star).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::param("scales must be distinct"));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let rmse = (xs.iter().zip(&ys).map(|(x, y)| (a + b * x - y).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Fit { a, b, rmse })
}

/// Per-scale exponents, the fitted model and its intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub theta: f64,
    pub per_delta: Vec<DeltaRow>,
    pub extrapolated: f64,
    pub fit: Fit,
    pub target: Option<f64>,
    /// Non-fatal findings, e.g. a non-monotone `s*` sequence.
    pub diagnostics: Vec<String>,
}

impl EstimateResult {
    pub(crate) fn from_rows(theta: f64, mut rows: Vec<DeltaRow>, target: Option<f64>) -> Result<Self> {
        rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
        let fit = fit_extrapolation(&rows)?;
        let mut diagnostics = Vec::new();
        for w in rows.windows(2) {
            if w[1].s_star > w[0].s_star + 0.02 {
                diagnostics.push(format!(
                    "s* rises from {:.4} at delta={} to {:.4} at delta={}",
                    w[0].s_star, w[0].delta, w[1].s_star, w[1].delta
                ));
            }
        }
        Ok(EstimateResult {
            theta,
            per_delta: rows,
            extrapolated: fit.a,
            fit,
            target,
            diagnostics,
        })
    }

    /// `|extrapolated - target|` when a target is attached.
    pub fn error(&self) -> Option<f64> {
        self.target.map(|t| (self.extrapolated - t).abs())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "theta,delta,s_star,inner_radius,cost_residual")?;
        for r in &self.per_delta {
            writeln!(
                out,
                "{},{},{:.6},{:.6e},{:.6e}",
                self.theta, r.delta, r.s_star, r.inner_radius, r.cost_residual
            )?;
        }
        let target = self.target.map_or("none".to_string(), |t| format!("{t}"));
        writeln!(
            out,
            "extrapolated={:.6} target={} rmse={:.6e} b={:.6} model={}",
            self.extrapolated,
            target,
            self.fit.rmse,
            self.fit.b,
            FIT_MODEL.replace(' ', "")
        )?;
        Ok(())
    }

    /// Reads the CSV written by [`EstimateResult::write_csv`]. Diagnostics are not stored in the file.
    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Empty("estimate file".into()))?;
        if header != "theta,delta,s_star,inner_radius,cost_residual" {
            return Err(Error::parse(header, "unexpected estimate header"));
        }
        let mut rows = Vec::new();
        let mut theta = f64::NAN;
        let mut trailer = None;
        for line in lines {
            if line.starts_with("extrapolated=") {
                trailer = Some(line);
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse(line, "expected 5 fields"));
            }
            theta = parse_number(f[0])?;
            rows.push(DeltaRow {
                delta: parse_number(f[1])?,
                s_star: parse_number(f[2])?,
                inner_radius: parse_number(f[3])?,
                cost_residual: parse_number(f[4])?,
            });
        }
        let trailer = trailer.ok_or_else(|| Error::parse("", "missing trailer line"))?;
        let mut extrapolated = None;
        let mut target = None;
        let mut rmse = None;
        let mut b = None;
        for tok in trailer.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::parse(tok, "expected key=value"))?;
            match k {
                "extrapolated" => extrapolated = Some(parse_number(v)?),
                "target" if v != "none" => target = Some(parse_number(v)?),
                "target" | "model" => {}
                "rmse" => rmse = Some(parse_number(v)?),
                "b" => b = Some(parse_number(v)?),
                _ => return Err(Error::parse(tok, "unknown trailer key")),
            }
        }
        let missing = || Error::parse(trailer, "incomplete trailer");
        let a = extrapolated.ok_or_else(missing)?;
        Ok(EstimateResult {
            theta,
            per_delta: rows,
            extrapolated: a,
            fit: Fit {
                a,
                b: b.ok_or_else(missing)?,
                rmse: rmse.ok_or_else(missing)?,
            },
            target,
            diagnostics: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_hits_known_root() {
        // n delta^s = 1  =>  s = log n / log(1/delta)
        let delta: f64 = 1e-3;
        let s = bisect_unit_cost(|s| 1e4 * delta.powf(s), 2.0);
        assert!((s - 4.0 / 3.0).abs() < S_TOL);
        assert_eq!(bisect_unit_cost(|_| 0.5, 2.0), 0.0);
        assert_eq!(bisect_unit_cost(|_| 5.0, 2.0), 2.0);
    }

    #[test]
    fn fit_recovers_model() {
        let rows: Vec<DeltaRow> = (8..20)
            .map(|k| {
                let delta = 2f64.powi(-k);
                DeltaRow {
                    delta,
                    s_star: 0.7 + 1.3 / (1.0 / delta).ln(),
                    inner_radius: 0.0,
                    cost_residual: 0.0,
                }
            })
            .collect();
        let fit = fit_extrapolation(&rows).unwrap();
        assert!((fit.a - 0.7).abs() < 1e-12 && (fit.b - 1.3).abs() < 1e-10);
        assert!(fit.rmse < 1e-12);
    }
}
