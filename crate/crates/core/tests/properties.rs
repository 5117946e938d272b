use proptest::prelude::*;

use interdim::boxcount::{count_boxes, two_scale_estimate};
use interdim::covergen::{build_theorem_cover, cover_cost, enumerate_grid_cover, Cover, CoverCounts};
use interdim::formula::*;
use interdim::massdist::*;
use interdim::setlib::*;

fn non_decreasing(f: impl Fn(f64) -> f64) -> bool {
    let grid = ThetaGrid::uniform(101);
    let v: Vec<f64> = grid.values().iter().map(|&t| f(t)).collect();
    v.windows(2).all(|w| w[1] >= w[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn formulas_monotone_in_theta(p in 0.01f64..3.0, q in 0.01f64..3.0, d in 2usize..6, l in 0.1f64..3.0) {
        prop_assert!(non_decreasing(|t| dim_fp(p, t)));
        prop_assert!(non_decreasing(|t| dim_concentric(d, p, t)));
        prop_assert!(non_decreasing(|t| dim_spiral(p, t)));
        prop_assert!(non_decreasing(|t| dim_elliptical(p, p + q, t)));
        prop_assert!(non_decreasing(|t| dim_product_sine(p, t)));
        prop_assert!(non_decreasing(|t| dim_attenuated(p, q, t)));
        let l = GrowthExponent::new(l).unwrap();
        prop_assert!(non_decreasing(|t| dim_isolated_upper(d, p, l, t)));
    }

    #[test]
    fn formulas_within_ambient_bounds(p in 0.01f64..3.0, q in 0.01f64..3.0, d in 2usize..6, t in 0.0f64..=1.0) {
        let c = dim_concentric(d, p, t);
        prop_assert!(c >= (d - 1) as f64 && c <= d as f64);
        let a = dim_attenuated(p, q, t);
        prop_assert!((1.0..=2.0).contains(&a));
        prop_assert!((0.0..=1.0).contains(&dim_fp(p, t)));
        prop_assert!(dim_isolated_lower_density(p, t) <= 1.0);
    }

    #[test]
    fn grid_cover_is_window_exact_and_covers(
        p in 0.5f64..1.5,
        k in 5i32..9,
        theta in 0.1f64..=1.0,
        r in 0.0f64..1.2,
    ) {
        let delta = 2f64.powi(-k);
        for spec in [SetSpec::concentric_power(2, p), SetSpec::FpSequence { p }, SetSpec::AttenuatedSine { p, q: 0.5 }] {
            let cloud = sample(&spec, 2000, 0.05).unwrap();
            let cover = enumerate_grid_cover(&cloud, delta, theta, r).unwrap();
            prop_assert!(cover.window_ok());
            prop_assert!(cover.covers(&cloud));
        }
    }

    #[test]
    fn circle_counts_match_cell_crossing(r in 0.05f64..1.0) {
        let delta = 2f64.powi(-6);
        let spec = SetSpec::ConcentricSpheres { d: 2, radii: RadiusSequence::Table(vec![r]) };
        let cloud = sample(&spec, 200_000, r).unwrap();
        let got = count_boxes(&cloud, delta).unwrap() as i64;
        let h = delta / 2f64.sqrt();
        let n = (r / h).ceil() as i64 + 1;
        let mut exact = 0i64;
        for i in -n..=n {
            for j in -n..=n {
                let (x0, x1, y0, y1) = (i as f64 * h, (i + 1) as f64 * h, j as f64 * h, (j + 1) as f64 * h);
                let near = 0f64.clamp(x0, x1).hypot(0f64.clamp(y0, y1));
                let far = x0.abs().max(x1.abs()).hypot(y0.abs().max(y1.abs()));
                if near <= r && r <= far {
                    exact += 1;
                }
            }
        }
        prop_assert!((got - exact).abs() <= 2, "{} vs {}", got, exact);
    }

    #[test]
    fn box_count_shift_changes_little(shift in 0.0f64..1.0) {
        let delta = 2f64.powi(-6);
        let base = sample(&SetSpec::ConcentricSpheres { d: 2, radii: RadiusSequence::Table(vec![0.7]) }, 50_000, 0.7).unwrap();
        let moved: Vec<f64> = base.coords().iter().map(|v| v + shift * delta).collect();
        let moved = PointCloud::new(2, moved, base.resolution()).unwrap();
        let (a, b) = (count_boxes(&base, delta).unwrap() as f64, count_boxes(&moved, delta).unwrap() as f64);
        prop_assert!((a - b).abs() <= 0.1 * a);
    }

    #[test]
    fn cover_cost_decreases_in_s(k in 6i32..30, theta in 0.1f64..=1.0, s in 0.5f64..1.9, ds in 0.01f64..0.5) {
        let delta = 2f64.powi(-k);
        let spec = SetSpec::concentric_power(2, 0.5);
        let counts = build_theorem_cover(&spec, delta, theta, s).unwrap();
        prop_assert!(cover_cost(&counts, delta, theta, s + ds) <= cover_cost(&counts, delta, theta, s));
    }

    #[test]
    fn two_scale_at_unit_theta_ignores_radius(p in 0.3f64..1.5, k in 5i32..10, s in 0.0f64..2.0) {
        let delta = 2f64.powi(-k);
        let cloud = sample(&SetSpec::concentric_power(2, p), 2000, 0.05).unwrap();
        let (cost, r) = two_scale_estimate(&cloud, 1.0, delta, s, &[0.1, 0.5]).unwrap();
        let n = count_boxes(&cloud, delta).unwrap() as f64;
        prop_assert_eq!(r, 0.0);
        prop_assert!((cost - n * delta.powf(s)).abs() <= 1e-12 * cost.max(1.0));
    }

    #[test]
    fn lift_preserves_mass(masses in prop::collection::vec(0.001f64..1.0, 1..40), d in 2usize..5) {
        let atoms = masses.iter().enumerate().map(|(i, &m)| Atom {
            support: Support::Point(vec![1.0 / (i + 1) as f64]),
            mass: m,
        }).collect();
        let radii = DiscreteMeasure::new(1, atoms, 1.0).unwrap();
        let lifted = build_lambda_lift(&radii, d).unwrap();
        prop_assert!((lifted.total_mass() - radii.total_mass()).abs() <= 1e-12 * radii.total_mass());
    }

    #[test]
    fn measure_scales_linearly(c in 0.01f64..100.0, x in -1.0f64..1.0, y in -1.0f64..1.0, rho in 0.001f64..0.5) {
        let mu = build_mu_concentric(2, 0.5, 0.5, 1.2, 2f64.powi(-10)).unwrap();
        let scaled = mu.scaled(c).unwrap();
        let (a, b) = (mu.measure_of_ball(&[x, y], rho), scaled.measure_of_ball(&[x, y], rho));
        prop_assert!((b - c * a).abs() <= 1e-12 * (c * a).max(1e-300));
        prop_assert!(mu.measure_of_ball(&[x, y], rho) <= mu.total_mass() * (1.0 + 1e-12));
    }

    #[test]
    fn spec_text_round_trips(p in 0.05f64..3.0, q in 0.05f64..3.0, d in 2usize..5) {
        for spec in [
            SetSpec::FpSequence { p },
            SetSpec::concentric_power(d, p),
            SetSpec::EllipticalSpiral { p, q: p + q },
            SetSpec::AttenuatedSine { p, q },
            SetSpec::IsolatedPoints { p, count: CountRule::PowerSum(q) },
        ] {
            prop_assert_eq!(SetSpec::parse(&spec.to_string()).unwrap(), spec);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn certificate_is_consistent(theta in 0.3f64..=1.0, k in 10i32..14) {
        let fam = MeasureFamily::Concentric { d: 2, p: 0.5 };
        let s = dim_concentric(2, 0.5, theta);
        let deltas: Vec<f64> = (k..k + 3).map(|j| 2f64.powi(-j)).collect();
        let cert = fam.certify(s, theta, &deltas, 1000).unwrap();
        let min_mass = cert.rows.iter().map(|r| r.total_mass).fold(f64::INFINITY, f64::min);
        let max_ratio = cert.rows.iter().map(|r| r.ratio_max).fold(0.0, f64::max);
        prop_assert_eq!(cert.total_mass_min, min_mass);
        prop_assert_eq!(cert.ratio_max, max_ratio);
        let expect = cert.rows.iter().all(|r| r.verdict == Verdict::Supported);
        prop_assert_eq!(cert.verdict == Verdict::Supported, expect);
        let mut text = Vec::new();
        cert.write_text(&mut text).unwrap();
        let back = LowerBoundCertificate::read_text(text.as_slice()).unwrap();
        let mut again = Vec::new();
        back.write_text(&mut again).unwrap();
        prop_assert_eq!(text, again);
    }

    #[test]
    fn cover_artifacts_round_trip(k in 5i32..20, theta in 0.1f64..=1.0, s in 0.5f64..1.9) {
        let delta = 2f64.powi(-k);
        let counts = build_theorem_cover(&SetSpec::concentric_power(2, 0.5), delta, theta, s).unwrap();
        let mut a = Vec::new();
        counts.write_text(&mut a).unwrap();
        let mut b = Vec::new();
        CoverCounts::read_text(a.as_slice()).unwrap().write_text(&mut b).unwrap();
        prop_assert_eq!(&a, &b);

        let cloud = sample(&SetSpec::FpSequence { p: 1.0 }, 1000, 0.01).unwrap();
        let cover = enumerate_grid_cover(&cloud, delta.max(1e-3), theta, 0.2).unwrap();
        let mut a = Vec::new();
        cover.write_csv(&mut a).unwrap();
        let mut b = Vec::new();
        Cover::read_csv(a.as_slice()).unwrap().write_csv(&mut b).unwrap();
        prop_assert_eq!(a, b);
    }
}
