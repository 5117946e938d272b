//! Command-line front end. Every subcommand takes flat `key=value` tokens.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::boxcount::estimate_dimension;
use crate::covergen::{build_cover_with_cutoff, build_theorem_cover, enumerate_grid_cover, upper_dim_estimate};
use crate::error::{Error, Result};
use crate::formula::{formula_dimension, identity_report, DimensionProfile, ThetaGrid};
use crate::massdist::MeasureFamily;
use crate::setlib::{parse_number, sample, CountRule, KeyValues, RadiusSequence, SetSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

const DEFAULT_BUDGET: &str = "10^7";
const DEFAULT_DELTAS: &str = "2^-8..2^-20";

#[derive(Debug, Parser)]
#[command(
    name = "interdim",
    version,
    about = "Intermediate dimensions: formulas, covers, measures, estimates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a point cloud: <set> [budget=] [truncation=] [out=]
    Generate { tokens: Vec<String> },
    /// Closed-form profile: <set> [thetas=a:b:step] [out=]
    Formula { tokens: Vec<String> },
    /// Constructive cover counts: <set> delta= theta= s= [m=] [out=] [cover-csv= budget= truncation=]
    Cover { tokens: Vec<String> },
    /// Dimension estimate: <set> theta= [deltas=] [budget=] [method=grid|cover] [out=]
    Estimate { tokens: Vec<String> },
    /// Mass-distribution certificate: <set> theta= [s=] [deltas=] [samples=] [out=]
    VerifyMass { tokens: Vec<String> },
    /// Formula, cover upper bound and certified lower bound side by side
    Profile { tokens: Vec<String> },
    /// Check the correspondence identities: p= q= d= [thetas=]
    Identities { tokens: Vec<String> },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetTooSmall { .. } | Error::ResourceLimit(_) => EXIT_RESOURCE,
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_USAGE,
    }
}

/// Delta ladders: `B^-a..B^-b` (every integer exponent between), or a
/// comma-separated list of numbers.
pub fn parse_deltas(text: &str) -> Result<Vec<f64>> {
    let deltas = if let Some((a, b)) = text.split_once("..") {
        let split = |t: &str| -> Result<(f64, i32)> {
            let (base, exp) = t.split_once('^').ok_or_else(|| Error::parse(t, "expected B^-k"))?;
            let base = parse_number(base)?;
            let exp: i32 = exp
                .parse()
                .map_err(|_| Error::parse(t, "exponent must be an integer"))?;
            Ok((base, exp))
        };
        let (ba, ea) = split(a)?;
        let (bb, eb) = split(b)?;
        if ba != bb || ba <= 1.0 {
            return Err(Error::parse(text, "ladder ends need the same base > 1"));
        }
        let (lo, hi) = (ea.min(eb), ea.max(eb));
        (lo..=hi).rev().map(|k| ba.powi(k)).collect::<Vec<_>>()
    } else {
        text.split(',').map(parse_number).collect::<Result<Vec<_>>>()?
    };
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(Error::parse(text, "every delta must lie in (0, 1)"));
    }
    Ok(deltas)
}

fn take_u64(kv: &mut KeyValues, key: &str, default: &str) -> Result<u64> {
    let raw = kv.take_str_or(key, default);
    let v = parse_number(&raw).map_err(|_| Error::parse(format!("{key}={raw}"), "not a number"))?;
    if v < 1.0 || v.fract() != 0.0 || v > 1e18 {
        return Err(Error::parse(format!("{key}={raw}"), "expected a positive integer"));
    }
    Ok(v as u64)
}

fn take_theta(kv: &mut KeyValues) -> Result<f64> {
    let theta = kv.take_f64("theta")?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::parse(format!("theta={theta}"), "theta must lie in (0, 1]"));
    }
    Ok(theta)
}

fn take_grid(kv: &mut KeyValues, default: &str) -> Result<ThetaGrid> {
    ThetaGrid::parse(&kv.take_str_or("thetas", default))
}

fn take_deltas(kv: &mut KeyValues) -> Result<Vec<f64>> {
    parse_deltas(&kv.take_str_or("deltas", DEFAULT_DELTAS))
}

/// Output target: a file when `out=` is given, else `stdout`.
fn with_output<F>(out: Option<String>, stdout: &mut dyn Write, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(PathBuf::from(&path))?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

/// Measure family matching a set spec, when the constructions provide one.
pub fn measure_family(spec: &SetSpec) -> Result<MeasureFamily> {
    match spec {
        SetSpec::ConcentricSpheres {
            d,
            radii: RadiusSequence::Power { p },
        } => Ok(MeasureFamily::Concentric { d: *d, p: *p }),
        SetSpec::AttenuatedSine { p, q } => Ok(MeasureFamily::Sine { p: *p, q: *q }),
        SetSpec::IsolatedPoints {
            p,
            count: CountRule::Exponential(b),
        } if *b == 2.0 => Ok(MeasureFamily::PointsExample { p: *p }),
        _ => Err(Error::Unsupported(format!("no measure construction for `{spec}`"))),
    }
}

/// Runs the parsed command, writing primary output to `stdout` unless `out=` is given.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate { tokens } => {
            let mut kv = KeyValues::parse(tokens.iter().map(String::as_str))?;
            let spec = SetSpec::from_key_values(&mut kv)?;
            let budget = take_u64(&mut kv, "budget", "10^4")?;
            let truncation = kv.take_f64_opt("truncation")?.unwrap_or(1e-2);
            let out = take_out(&mut kv);
            kv.finish()?;
            let cloud = sample(&spec, budget, truncation)?;
            with_output(out, stdout, |w| cloud.write_csv(w))
        }
        Command::Formula { tokens } => {
            let mut kv = KeyValues::parse(tokens.iter().map(String::as_str))?;
            let spec = SetSpec::from_key_values(&mut kv)?;
            let grid = take_grid(&mut kv, "0:1:0.01")?;
            let out = take_out(&mut kv);
            kv.finish()?;
            let profile = DimensionProfile::from_formula(&spec, grid)?;
            with_output(out, stdout, |w| profile.write_csv(w))
        }
        Command::Cover { tokens } => {
            let mut kv = KeyValues::parse(tokens.iter().map(String::as_str))?;
            let spec = SetSpec::from_key_values(&mut kv)?;
            let delta = kv.take_f64("delta")?;
            let theta = take_theta(&mut kv)?;
            let s = kv.take_f64("s")?;
            let m = kv.take_f64_opt("m")?;
            let cover_path = kv.take_str("cover-csv").ok();
            let budget = take_u64(&mut kv, "budget", "10^4")?;
            let truncation = kv.take_f64_opt("truncation")?.unwrap_or(1e-2);
            let out = take_out(&mut kv);
            kv.finish()?;
            let counts = match m {
                Some(m) if m >= 1.0 && m.fract() == 0.0 => build_cover_with_cutoff(&spec, delta, theta, s, m as u64)?,
                Some(m) => return Err(Error::parse(format!("m={m}"), "expected a positive integer")),
                None => build_theorem_cover(&spec, delta, theta, s)?,
            };
            if let Some(path) = cover_path {
                let cloud = sample(&spec, budget, truncation)?;
                let cover = enumerate_grid_cover(&cloud, delta, theta, counts.inner_radius)?;
                if !cover.window_ok() || !cover.covers(&cloud) {
                    return Err(Error::Invariant(
                        "grid cover failed its window or coverage check".into(),
                    ));
                }
                with_output(Some(path), stdout, |w| cover.write_csv(w))?;
            }
            with_output(out, stdout, |w| counts.write_text(w))
        }
        Command::Estimate { tokens } => {
            let mut kv = KeyValues::parse(tokens.iter().map(String::as_str))?;
            let spec = SetSpec::from_key_values(&mut kv)?;
            let theta = take_theta(&mut kv)?;
            let deltas = take_deltas(&mut kv)?;
            let budget = take_u64(&mut kv, "budget", DEFAULT_BUDGET)?;
            let method = kv.take_str_or("method", "grid");
            let out = take_out(&mut kv);
            kv.finish()?;
            let result = match method.as_str() {
                "grid" => estimate_dimension(&spec, theta, &deltas, budget)?,
                "cover" => upper_dim_estimate(&spec, theta, &deltas)?,
                other => return Err(Error::parse(format!("method={other}"), "expected grid or cover")),
            };
            with_output(out, stdout, |w| result.write_csv(w))
        }
        Command::VerifyMass { tokens } => {
            let mut kv = KeyValues::parse(tokens.iter().map(String::as_str))?;
            let spec = SetSpec::from_key_values(&mut kv)?;
            let theta = take_theta(&mut kv)?;
            let family = measure_family(&spec)?;
            let s = match kv.take_f64_opt("s")? {
                Some(s) => s,
                None => default_measure_s(&spec, theta)?,
            };
            let deltas = parse_deltas(&kv.take_str_or("deltas", "2^-10..2^-20"))?;
            let samples = kv.take_f64_opt("samples")?.unwrap_or(1e4);
            if samples < 1.0 || samples.fract() != 0.0 {
                return Err(Error::parse(
                    format!("samples={samples}"),
                    "expected a positive integer",
                ));
            }
            let out = take_out(&mut kv);
            kv.finish()?;
            let cert = family.certify(s, theta, &deltas, samples as usize)?;
            with_output(out, stdout, |w| cert.write_text(w))
        }
        Command::Profile { tokens } => {
            let mut kv = KeyValues::parse(tokens.iter().map(String::as_str))?;
            let spec = SetSpec::from_key_values(&mut kv)?;
            let grid = take_grid(&mut kv, "0:1:0.1")?;
            let deltas = parse_deltas(&kv.take_str_or("deltas", "2^-10..2^-20"))?;
            let samples = kv.take_f64_opt("samples")?.unwrap_or(1e3) as usize;
            let out = take_out(&mut kv);
            kv.finish()?;
            let table = ProfileTable::build(&spec, &grid, &deltas, samples)?;
            with_output(out, stdout, |w| table.write_csv(w))
        }
        Command::Identities { tokens } => {
            let mut kv = KeyValues::parse(tokens.iter().map(String::as_str))?;
            let p = kv.take_f64("p")?;
            let q = kv.take_f64("q")?;
            let d = kv.take_usize("d")?;
            let grid = take_grid(&mut kv, "0:1:0.01")?;
            let out = take_out(&mut kv);
            kv.finish()?;
            if !(p > 0.0 && q > 0.0 && d >= 2) {
                return Err(Error::param(format!(
                    "need p > 0, q > 0, d >= 2; got p={p} q={q} d={d}"
                )));
            }
            let r = identity_report(p, q, d, &grid);
            let word = |ok: bool| if ok { "pass" } else { "fail" };
            with_output(out, stdout, |w| {
                writeln!(w, "C-vs-T: {}", word(r.concentric_vs_attenuated))?;
                match r.spiral_vs_attenuated {
                    Some(ok) => writeln!(w, "S-vs-T: {}", word(ok))?,
                    None => writeln!(w, "S-vs-T: skipped (needs q >= p)")?,
                }
                Ok(())
            })
        }
    }
}

/// The exponent certified by default: the closed form, or 1/2 for the
/// isolated-points example.
fn default_measure_s(spec: &SetSpec, theta: f64) -> Result<f64> {
    match spec {
        SetSpec::IsolatedPoints { .. } => Ok(0.5),
        _ => formula_dimension(spec, theta)
            .ok_or_else(|| Error::Unsupported(format!("no closed form for `{spec}`; pass s="))),
    }
}

fn take_out(kv: &mut KeyValues) -> Option<String> {
    kv.take_str("out").ok()
}

/// Formula value, cover-based upper estimate and certified lower bound per theta.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub thetas: Vec<f64>,
    pub formula: Vec<Option<f64>>,
    pub cover_upper: Vec<Option<f64>>,
    /// The certified exponent when the certificate is supported.
    pub measure_lower: Vec<Option<f64>>,
}

pub const PROFILE_HEADER: &str = "theta,formula,cover_upper,measure_lower";

impl ProfileTable {
    pub fn build(spec: &SetSpec, grid: &ThetaGrid, deltas: &[f64], samples: usize) -> Result<Self> {
        let family = measure_family(spec).ok();
        let mut t = ProfileTable {
            thetas: grid.values().to_vec(),
            formula: Vec::new(),
            cover_upper: Vec::new(),
            measure_lower: Vec::new(),
        };
        for &theta in grid.values() {
            t.formula.push(formula_dimension(spec, theta));
            if theta == 0.0 {
                t.cover_upper.push(None);
                t.measure_lower.push(None);
                continue;
            }
            t.cover_upper.push(match upper_dim_estimate(spec, theta, deltas) {
                Ok(r) => Some(r.extrapolated),
                Err(Error::Unsupported(_)) => None,
                Err(e) => return Err(e),
            });
            let lower = match (family, default_measure_s(spec, theta)) {
                (Some(f), Ok(s)) => match f.certify(s, theta, deltas, samples) {
                    Ok(c) if c.verdict == crate::massdist::Verdict::Supported => Some(s),
                    Ok(_) | Err(Error::Empty(_)) | Err(Error::InvalidParameter(_)) => None,
                    Err(e) => return Err(e),
                },
                _ => None,
            };
            t.measure_lower.push(lower);
        }
        Ok(t)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let cell = |v: Option<f64>, digits: usize| v.map_or(String::new(), |v| format!("{v:.digits$}"));
        writeln!(out, "{PROFILE_HEADER}")?;
        for i in 0..self.thetas.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.thetas[i],
                cell(self.formula[i], 12),
                cell(self.cover_upper[i], 6),
                cell(self.measure_lower[i], 12)
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut lines = text.lines();
        if lines.next() != Some(PROFILE_HEADER) {
            return Err(Error::parse(
                text.lines().next().unwrap_or(""),
                "unexpected profile header",
            ));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_number(s).map(Some)
            }
        };
        let mut t = ProfileTable {
            thetas: Vec::new(),
            formula: Vec::new(),
            cover_upper: Vec::new(),
            measure_lower: Vec::new(),
        };
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::parse(line, "expected 4 fields"));
            }
            t.thetas.push(parse_number(f[0])?);
            t.formula.push(opt(f[1])?);
            t.cover_upper.push(opt(f[2])?);
            t.measure_lower.push(opt(f[3])?);
        }
        Ok(t)
    }
}
