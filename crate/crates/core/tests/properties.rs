use proptest::prelude::*;

use sivtool::ctl::{photostability_windows, transition_level, ChargeStateRecord, NamedSeries, Stability, ThresholdCurves};
use sivtool::spectro::{
    hf_levels, hf_principal, linear_calibration, radiative_rate, zpl, HyperfineTensor, RadiativeInput, DEFAULT_AXIS,
};
use sivtool::units::{oscillator_length, AxisKind, Mev, StrainSeries};

fn series(points: Vec<(f64, f64)>) -> StrainSeries {
    StrainSeries::new(AxisKind::PressureGpa, "eV", points).unwrap()
}

fn distinct_xs(raw: Vec<f64>) -> Vec<f64> {
    let mut xs: Vec<f64> = raw.iter().scan(0.0, |acc, d| {
        *acc += d;
        Some(*acc)
    }).collect();
    xs.dedup();
    xs
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

proptest! {
    #[test]
    fn hf_levels_traceless(a_par in -500.0f64..500.0, a_perp in -500.0f64..500.0) {
        let l = hf_levels(a_par, a_perp);
        let scale = a_par.abs().max(a_perp.abs()).max(1.0);
        prop_assert!(l.energies.iter().sum::<f64>().abs() <= 1e-12 * scale);
        prop_assert!(l.energies.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(l.multiplets.iter().map(|m| m.1).sum::<usize>(), 6);
    }

    #[test]
    fn radiative_rate_scaling(e in 0.5f64..3.0, n in 2.0f64..3.0, mu in 0.1f64..10.0, k in 0.5f64..2.0) {
        let g = |e: f64, n: f64, mu: f64| radiative_rate(&RadiativeInput::new(e, n, mu).unwrap()).unwrap().gamma;
        let base = g(e, n, mu);
        prop_assert!((g(k * e, n, mu) / base - k.powi(3)).abs() <= 1e-10 * k.powi(3));
        prop_assert!((g(e, k * n, mu) / base - k).abs() <= 1e-10 * k);
        prop_assert!((g(e, n, k * mu) / base - k * k).abs() <= 1e-10 * k * k);
    }

    #[test]
    fn zpl_antisymmetric(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        prop_assert_eq!(zpl(a, b), -zpl(b, a));
    }

    #[test]
    fn oscillator_length_decreasing(w in 1.0f64..500.0, dw in 0.01f64..100.0) {
        prop_assert!(oscillator_length(Mev(w + dw)).unwrap() < oscillator_length(Mev(w)).unwrap());
    }

    #[test]
    fn calibration_affine_invariance(
        gaps in proptest::collection::vec(0.1f64..20.0, 3..12),
        ys in proptest::collection::vec(-2.0f64..2.0, 12),
        shift in -50.0f64..50.0,
        scale in 0.2f64..5.0,
        y_shift in -3.0f64..3.0,
    ) {
        let xs = distinct_xs(gaps);
        let pts: Vec<(f64, f64)> = xs.iter().zip(&ys).map(|(&x, &y)| (x, y)).collect();
        let base = linear_calibration(&series(pts.clone())).unwrap();
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (scale * x + shift, y + y_shift)).collect();
        let c = linear_calibration(&series(moved)).unwrap();
        prop_assert!((c.slope * scale - base.slope).abs() <= 1e-9 * (1.0 + base.slope.abs()));
        prop_assert!((c.r_squared - base.r_squared).abs() <= 1e-9);
        prop_assert!(c.residuals.iter().sum::<f64>().abs() <= 1e-9 * c.points as f64);
    }

    #[test]
    fn transition_level_symmetric(
        q in -3i32..3, dq in 1i32..3,
        e1 in -2000.0f64..-1000.0, e2 in -2000.0f64..-1000.0,
        el1 in -1.0f64..1.0, el2 in -1.0f64..1.0,
        dv1 in -0.5f64..0.5, dv2 in -0.5f64..0.5,
        vbm in -5.0f64..5.0,
    ) {
        let a = ChargeStateRecord::new(q, e1, el1, dv1).unwrap();
        let b = ChargeStateRecord::new(q + dq, e2, el2, dv2).unwrap();
        let ab = transition_level(&a, &b, vbm).unwrap();
        let ba = transition_level(&b, &a, vbm).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab.abs()));
        prop_assert!(transition_level(&a, &a, vbm).is_err());
    }

    #[test]
    fn photostability_tiles_range(
        gaps in proptest::collection::vec(0.5f64..10.0, 2..10),
        zs in proptest::collection::vec(1.0f64..2.0, 10),
        ts in proptest::collection::vec(1.0f64..2.0, 10),
        us in proptest::collection::vec(1.0f64..2.0, 10),
        offset in -20.0f64..20.0,
    ) {
        let xs = distinct_xs(gaps);
        let make = |vals: &[f64], dx: f64| series(xs.iter().zip(vals).map(|(&x, &v)| (x + dx, v)).collect());
        let curves = |dx: f64| ThresholdCurves::new(
            make(&zs, dx),
            vec![
                NamedSeries { name: "t".into(), series: make(&ts, dx) },
                NamedSeries { name: "u".into(), series: make(&us, dx) },
            ],
        ).unwrap();
        let t = curves(0.0);
        let r = photostability_windows(&t).unwrap();
        let (lo, hi) = (xs[0], *xs.last().unwrap());
        prop_assert_eq!(r.windows.first().unwrap().from, lo);
        prop_assert_eq!(r.windows.last().unwrap().to, hi);
        for w in r.windows.windows(2) {
            prop_assert_eq!(w[0].to, w[1].from);
            prop_assert!(w[0].status != w[1].status);
        }
        for c in &r.crossings {
            let floor = t.thresholds.iter().map(|s| s.series.interpolate(c.x).unwrap()).fold(f64::INFINITY, f64::min);
            let z = t.zpl.interpolate(c.x).unwrap();
            prop_assert!((z - floor).abs() <= 1e-9, "margin {} at {}", z - floor, c.x);
        }
        for w in &r.windows {
            let mid = 0.5 * (w.from + w.to);
            let floor = t.thresholds.iter().map(|s| s.series.interpolate(mid).unwrap()).fold(f64::INFINITY, f64::min);
            let margin = t.zpl.interpolate(mid).unwrap() - floor;
            if margin.abs() > 1e-9 {
                prop_assert_eq!(w.status == Stability::Photostable, margin < 0.0);
            }
        }

        let shifted = photostability_windows(&curves(offset)).unwrap();
        prop_assert_eq!(shifted.windows.len(), r.windows.len());
        for (a, b) in r.windows.iter().zip(&shifted.windows) {
            prop_assert_eq!(a.status, b.status);
            prop_assert!((a.from + offset - b.from).abs() <= 1e-9 * (1.0 + b.from.abs()));
        }
    }

    #[test]
    fn hf_principal_round_trip(
        a_par in 10.0f64..200.0,
        ratio in 0.05f64..0.8,
        theta in 0.0f64..std::f64::consts::FRAC_PI_2,
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let a_perp = ratio * a_par;
        let axis = [0.0, 0.0, 1.0];
        let t = HyperfineTensor::axial(a_par, a_perp, unit(theta, phi), axis).unwrap();
        let p = hf_principal(&t);
        prop_assert!((p.a_par - a_par).abs() <= 1e-9 * a_par);
        prop_assert!((p.a_perp - a_perp).abs() <= 1e-9 * a_par);
        prop_assert!((p.theta_deg - theta.to_degrees()).abs() <= 1e-6);
        prop_assert!(!p.isotropic);
    }

    #[test]
    fn hf_principal_invariant_under_axis_reversal(a_par in 10.0f64..200.0, a_perp in 1.0f64..9.0, theta in 0.0f64..1.5) {
        let dir = unit(theta, 0.3);
        let t1 = HyperfineTensor::axial(a_par, a_perp, dir, DEFAULT_AXIS).unwrap();
        let t2 = HyperfineTensor::axial(a_par, a_perp, dir.map(|v| -v), DEFAULT_AXIS.map(|v| -v)).unwrap();
        let (p1, p2) = (hf_principal(&t1), hf_principal(&t2));
        prop_assert!((p1.theta_deg - p2.theta_deg).abs() <= 1e-9);
    }
}
