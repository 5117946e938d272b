//! Library outputs checked against independent oracles.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use statrs::function::gamma::gamma;

use interdim::boxcount::{count_boxes, estimate_dimension, two_scale_estimate};
use interdim::covergen::{enumerate_grid_cover, sphere_cover_count, xi};
use interdim::formula::*;
use interdim::massdist::*;
use interdim::setlib::*;

fn ladder(a: i32, b: i32) -> Vec<f64> {
    (a..=b).map(|k| 2f64.powi(-k)).collect()
}

/// Grid cells (side `delta/sqrt 2`) met by the circle of radius `r`, column by column.
fn circle_cells(r: f64, delta: f64, out: &mut HashSet<(i64, i64)>) {
    let h = delta / 2f64.sqrt();
    let n = (r / h).ceil() as i64 + 1;
    for i in -n..n {
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        let near = if x0 <= 0.0 && x1 >= 0.0 {
            0.0
        } else {
            x0.abs().min(x1.abs())
        };
        if near > r {
            continue;
        }
        let far = x0.abs().max(x1.abs());
        let ylo = (r * r - far * far).max(0.0).sqrt();
        let yhi = (r * r - near * near).sqrt();
        for (a, b) in [(ylo, yhi), (-yhi, -ylo)] {
            for j in (a / h).floor() as i64..=(b / h).floor() as i64 {
                out.insert((i, j));
            }
        }
    }
}

fn circle_cell_count(radii: &[f64], delta: f64) -> usize {
    let mut cells = HashSet::new();
    for &r in radii {
        circle_cells(r, delta, &mut cells);
    }
    cells.len()
}

#[test]
fn attenuated_sample_lies_on_graph() {
    let cloud = sample(&SetSpec::AttenuatedSine { p: 1.0, q: 0.5 }, 100_000, 1e-3).unwrap();
    assert!(!cloud.is_empty());
    for x in cloud.points() {
        let f = x[0].sqrt() * (PI / x[0]).sin();
        assert!((x[1] - f).abs() <= 1e-9, "{x:?}");
    }
}

fn brute_gap_count(terms: &[f64], p: f64, n: usize) -> usize {
    (1..=n)
        .filter(|&k| {
            let (lo, hi) = (((k + 1) as f64).powf(-p), (k as f64).powf(-p));
            terms.iter().any(|&t| t > lo && t <= hi)
        })
        .count()
}

#[test]
fn gap_counts_match_brute_force() {
    let geometric: Vec<f64> = (1..=64).map(|j| 2f64.powi(-j)).collect();
    assert_eq!(gap_count_a(&RadiusSequence::Geometric { ratio: 2.0 }, 1.0, 4), 2);
    for n in [1, 4, 10, 50] {
        assert_eq!(
            gap_count_a(&RadiusSequence::Geometric { ratio: 2.0 }, 1.0, n),
            brute_gap_count(&geometric, 1.0, n)
        );
    }
    let has_log = (2..=1_000_000u64).any(|m| {
        let t = 1.0 / (m as f64).ln();
        t > 0.5 && t <= 1.0
    });
    assert_eq!(gap_count_a(&RadiusSequence::Logarithmic, 1.0, 1), usize::from(has_log));
    let power: Vec<f64> = (1..=2000).map(|j| (j as f64).powf(-0.5)).collect();
    for n in [5, 30] {
        assert_eq!(
            gap_count_a(&RadiusSequence::Power { p: 0.5 }, 1.0, n),
            brute_gap_count(&power, 1.0, n)
        );
    }
}

#[test]
fn comparison_conditions_examples() {
    let g = check_comparison_conditions(&RadiusSequence::Geometric { ratio: 2.0 }, 1.0, 10_000).unwrap();
    assert!(g.upper_applies && !g.lower_applies);
    let l = check_comparison_conditions(&RadiusSequence::Logarithmic, 1.0, 10_000).unwrap();
    assert!(!l.upper_applies && l.lower_applies);
    // Every interval (1/(k+1), 1/k] with k <= 10 holds some 1/log m, m < e^11.
    let hits = (2..60_000u64).map(|m| 1.0 / (m as f64).ln()).collect::<Vec<_>>();
    assert_eq!(brute_gap_count(&hits, 1.0, 10), 10);
}

#[test]
fn identities_by_cleared_denominators() {
    let grid = ThetaGrid::range(0.0, 1.0, 0.1).unwrap();
    assert!(identity_checks(0.3, 0.3, 2, &grid));
    // With p = q = 3/10 and theta = j/10 both sides reduce to (60 + 14j)/(60 + 7j).
    for j in 1..=10i64 {
        let theta = j as f64 / 10.0;
        let exact = (60 + 14 * j) as f64 / (60 + 7 * j) as f64;
        assert!((dim_elliptical(0.3, 0.3, theta) - exact).abs() < 1e-12);
        assert!((dim_attenuated(0.3, 1.0, theta) - exact).abs() < 1e-12);
        let conc = dim_concentric(2, 0.3, theta) - 1.0;
        assert!((conc - (exact - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn sphere_cover_counts_against_partitions() {
    // A set of diameter 0.1 meets an arc of angle at most 2 asin(0.05).
    let n = sphere_cover_count(2, 1.0, 0.1);
    let lower = (2.0 * PI / (2.0 * 0.05f64.asin())).ceil() as u64;
    assert!(n >= lower && n <= 80, "{n}");
    assert_eq!(xi(2), 8.0);
    let n3 = sphere_cover_count(3, 1.0, 0.5);
    assert!(n3 as f64 <= xi(3) * 4.0, "{n3}");
    assert!(n3 >= 2);
}

#[test]
fn sphere_constant_matches_gamma_and_monte_carlo() {
    for d in 2..=8 {
        let exact = 2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0);
        assert!((sphere_area_constant(d).unwrap() - exact).abs() < 1e-10 * exact);
    }
    assert!((sphere_area_constant(4).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
    // Shell volume differencing: surface = d/dr (c r^4) at r = 1 = 4 c.
    let mut rng = StdRng::seed_from_u64(4);
    let n = 400_000;
    let inside = (0..n)
        .filter(|_| (0..4).map(|_| rng.gen_range(-1.0f64..1.0).powi(2)).sum::<f64>() <= 1.0)
        .count();
    let volume = 16.0 * inside as f64 / n as f64;
    assert!((4.0 * volume - 2.0 * PI * PI).abs() < 0.02 * 2.0 * PI * PI);
}

#[test]
fn circle_occupancy_matches_enumeration() {
    let delta = 2f64.powi(-8);
    let spec = SetSpec::ConcentricSpheres {
        d: 2,
        radii: RadiusSequence::Table(vec![1.0]),
    };
    let cloud = sample(&spec, 1_000_000, 1.0).unwrap();
    let cover = enumerate_grid_cover(&cloud, delta, 1.0, 0.0).unwrap();
    let exact = circle_cell_count(&[1.0], delta) as f64;
    let n = cover.elements.len() as f64;
    assert!(n >= 0.9 * exact && n <= 1.1 * exact, "{n} vs {exact}");

    let delta = 2f64.powi(-6);
    let got = count_boxes(&sample(&spec, 100_000, 1.0).unwrap(), delta).unwrap() as i64;
    assert!((got - circle_cell_count(&[1.0], delta) as i64).abs() <= 2);
}

#[test]
fn truncated_concentric_count_matches_enumeration() {
    let delta = 2f64.powi(-10);
    let cloud = sample(&SetSpec::concentric_power(2, 0.5), 200_000, 0.1).unwrap();
    let radii: Vec<f64> = (1..=100).map(|n| (n as f64).powf(-0.5)).collect();
    let exact = circle_cell_count(&radii, delta) as f64;
    let n = count_boxes(&cloud, delta).unwrap() as f64;
    assert!((n - exact).abs() <= 0.05 * exact, "{n} vs {exact}");
}

#[test]
fn unit_segment_cells() {
    let scale = 1.0 / 16.0;
    let pts: Vec<[f64; 1]> = (0..=160).map(|i| [i as f64 * scale / 10.0]).collect();
    let cloud = PointCloud::from_points(1, &pts, scale / 10.0).unwrap();
    let n = count_boxes(&cloud, scale).unwrap();
    assert!((16..=18).contains(&n), "{n}");
}

#[test]
fn fp_best_split_is_interior() {
    let delta = 2f64.powi(-12);
    let cloud = sample(&SetSpec::FpSequence { p: 1.0 }, 1_000_000, 1e-6).unwrap();
    let candidates: Vec<f64> = (0..64).map(|k| delta.powf(1.0 - k as f64 / 63.0)).collect();
    let (_, r) = two_scale_estimate(&cloud, 0.5, delta, 1.0 / 3.0, &candidates).unwrap();
    assert!(r > 0.0 && r < 1.0, "{r}");
}

#[test]
fn lifted_measure_matches_arc_fractions() {
    let k = 20;
    let atoms = (1..=k)
        .map(|i| Atom {
            support: Support::Point(vec![1.0 / i as f64]),
            mass: 1.0 / k as f64,
        })
        .collect();
    let radii = DiscreteMeasure::new(1, atoms, 1.0).unwrap();
    let lifted = build_lambda_lift(&radii, 2).unwrap();
    assert!((lifted.total_mass() - 1.0).abs() < 1e-12);
    // Circle of radius r meets the ball (centre at distance m, radius rho)
    // in the arc |phi| <= acos((r^2 + m^2 - rho^2) / (2 r m)).
    let arc = |r: f64, m: f64, rho: f64| -> f64 {
        if r + m <= rho {
            return 1.0;
        }
        let c = (r * r + m * m - rho * rho) / (2.0 * r * m);
        c.clamp(-1.0, 1.0).acos() / PI
    };
    for (center, rho) in [
        ([0.05, 0.0], 0.05),
        ([0.3, 0.1], 0.07),
        ([0.0, 0.5], 0.2),
        ([0.7, 0.7], 0.05),
    ] {
        let m = f64::hypot(center[0], center[1]);
        let expected: f64 = (1..=k).map(|i| arc(1.0 / i as f64, m, rho) / k as f64).sum();
        let got = lifted.measure_of_ball(&center, rho);
        assert!((got - expected).abs() < 1e-12, "{center:?}: {got} vs {expected}");
    }
}

#[test]
fn tangent_ball_respects_concentric_cap() {
    let (d, p, theta) = (2, 0.5, 0.5);
    let s = dim_concentric(d, p, theta);
    let delta = 2f64.powi(-12);
    let mu = build_mu_concentric(d, p, theta, s, delta).unwrap();
    let cap = MeasureFamily::Concentric { d, p }.proof_cap();
    assert!((cap - (2f64.powf(1.5) / 0.5 + 1.0) * 2.0 * PI).abs() < 1e-12);
    for diameter in [delta, delta.sqrt()] {
        let rho = diameter / 2.0;
        let ratio = mu.measure_of_ball(&[1.0 - rho, 0.0], rho) / diameter.powf(s);
        assert!(ratio <= cap * CAP_MARGIN, "{ratio}");
    }
}

#[test]
fn concentric_ratio_grows_above_formula() {
    let (d, p, theta) = (2, 0.5, 0.5);
    let s = dim_concentric(d, p, theta);
    let fam = MeasureFamily::Concentric { d, p };
    let cert = verify_mass_distribution(
        |delta| fam.build(theta, s, delta),
        s + 0.2,
        theta,
        &[2f64.powi(-10), 2f64.powi(-20)],
        10_000,
        0.0,
        f64::INFINITY,
    )
    .unwrap();
    let (a, b) = (cert.rows[0].ratio_max, cert.rows[1].ratio_max);
    assert!(b >= 2.0 * a, "{a} -> {b}");
}

#[test]
fn sine_certificate_respects_cap() {
    let fam = MeasureFamily::Sine { p: 1.0, q: 0.5 };
    let cap = 3.0 * (2f64.powf(2.0) / 1.0 + 2.0);
    assert_eq!(fam.proof_cap(), cap);
    let s = dim_attenuated(1.0, 0.5, 0.5);
    let cert = fam.certify(s, 0.5, &ladder(16, 20), 2000).unwrap();
    assert_eq!(cert.verdict, Verdict::Supported);
    assert!(cert.ratio_max <= cap * CAP_MARGIN);
}

fn assert_estimate(spec: SetSpec, theta: f64, deltas: &[f64], target: f64, tol: f64) {
    let r = estimate_dimension(&spec, theta, deltas, 10_000_000).unwrap();
    assert_eq!(r.target, formula_dimension(&spec, theta));
    assert!(
        (r.extrapolated - target).abs() <= tol,
        "{spec} theta={theta}: {}",
        r.extrapolated
    );
    assert!(r
        .per_delta
        .iter()
        .all(|row| (0.0..=spec.ambient_dim() as f64).contains(&row.s_star)));
}

#[test]
fn concentric_estimates() {
    assert_estimate(SetSpec::concentric_power(2, 0.5), 1.0, &ladder(10, 20), 4.0 / 3.0, 0.05);
    assert_estimate(SetSpec::concentric_power(2, 0.5), 0.5, &ladder(10, 20), 1.2, 0.08);
}

#[test]
fn fp_estimate_at_one() {
    assert_estimate(SetSpec::FpSequence { p: 1.0 }, 1.0, &ladder(8, 20), 0.5, 0.05);
}

#[test]
fn steep_attenuated_estimates() {
    for theta in [0.25, 1.0] {
        assert_estimate(
            SetSpec::AttenuatedSine { p: 1.0, q: 2.0 },
            theta,
            &ladder(8, 18),
            1.0,
            0.05,
        );
    }
}
