mod common;

use std::f64::consts::PI;

use geoball::model::{ModelSpace, WarpingProfile};
use geoball::surface::{hypothesis_report, Direction, PolarMetric2D};
use proptest::prelude::*;

use common::{central_derivatives, example_w};

fn metric() -> impl Strategy<Value = PolarMetric2D> {
    prop_oneof![
        Just(PolarMetric2D::example()),
        (-0.2..2.0f64, 1u32..5).prop_map(|(eps, mode)| PolarMetric2D::perturbed(eps, mode).unwrap()),
        (-1.0..1.0f64).prop_map(|b| PolarMetric2D::radial(WarpingProfile::space_form(b)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn partials_match_finite_differences(m in metric(), u in 0.02..1.0f64, theta in 0.0..(2.0 * PI)) {
        let r = u * m.r_valid().min(2.0);
        let s = m.eval(r, theta);
        let h = 1e-4;
        let (wr, wrr) = central_derivatives(|x| m.w(x, theta), r, h);
        let (wt, _) = central_derivatives(|t| m.w(r, t), theta, h);
        let scale = 1.0 + s.w.abs() + s.w_r.abs() + s.w_rr.abs();
        prop_assert!((s.w_r - wr).abs() <= 1e-6 * scale);
        prop_assert!((s.w_rr - wrr).abs() <= 1e-5 * scale);
        prop_assert!((s.w_theta - wt).abs() <= 1e-6 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radial_wrappers_reduce_to_the_model(b in -2.0..2.0f64, u in 0.01..0.99f64, theta in 0.0..(2.0 * PI)) {
        let w = WarpingProfile::space_form(b);
        let model = ModelSpace::new(w.clone(), 2).unwrap();
        let metric = PolarMetric2D::radial(w).unwrap();
        let r = u * metric.r_valid().min(3.0);
        let got = metric.sphere_mean_curvature(r, theta).unwrap();
        let want = model.mean_curvature(r).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn area_derivative_is_length(m in metric(), u in 0.05..0.9f64) {
        let r = u * m.r_valid().min(2.0);
        let h = 1e-4;
        let da = (m.ball_area(r + h).unwrap() - m.ball_area(r - h).unwrap()) / (2.0 * h);
        let len = m.sphere_length(r).unwrap();
        prop_assert!((da - len).abs() <= 1e-6 * len.max(1.0), "{da} vs {len}");
    }

    #[test]
    fn perturbed_unit_mode_is_the_example(r in 0.0..3.0f64, theta in 0.0..(2.0 * PI)) {
        let p = PolarMetric2D::perturbed(1.0, 1).unwrap();
        let e = PolarMetric2D::example();
        prop_assert_eq!(p.eval(r, theta), e.eval(r, theta));
        prop_assert!((e.w(r, theta) - example_w(r, theta)).abs() <= 1e-14 * r.max(1.0));
    }
}

#[test]
fn example_curvature_dominates_flat_everywhere() {
    let m = PolarMetric2D::example();
    for i in 1..=256 {
        let t = 2.0 * i as f64 / 256.0;
        for j in 0..256 {
            let th = 2.0 * PI * j as f64 / 256.0;
            assert!(m.sphere_mean_curvature(t, th).unwrap() > 1.0 / t);
        }
    }
}

#[test]
fn hypothesis_directions() {
    let example = PolarMetric2D::example();
    let flat = ModelSpace::space_form(0.0, 2).unwrap();
    let sphere = ModelSpace::space_form(1.0, 2).unwrap();
    let r = hypothesis_report(&example, &flat, 2.0, 128, 128).unwrap();
    assert_eq!(r.direction, Direction::ModelLeM);
    assert!(r.min_margin > 0.0);
    let r = hypothesis_report(&example, &sphere, 1.0, 128, 128).unwrap();
    assert_eq!(r.direction, Direction::ModelLeM);
    let wrapper = PolarMetric2D::radial(WarpingProfile::euclidean()).unwrap();
    let r = hypothesis_report(&wrapper, &flat, 1.0, 64, 64).unwrap();
    assert_eq!(r.direction, Direction::Equal);
    assert_eq!(r.max_deviation, 0.0);
    let hyperbolic = ModelSpace::space_form(-1.0, 2).unwrap();
    let r = hypothesis_report(&wrapper, &hyperbolic, 1.0, 64, 64).unwrap();
    assert_eq!(r.direction, Direction::ModelGeM);
}

#[test]
fn pole_and_periodicity_conditions() {
    let m = PolarMetric2D::example();
    for j in 0..32 {
        let th = 2.0 * PI * j as f64 / 32.0;
        assert!((m.w(1e-4, th) / 1e-4 - 1.0).abs() <= 1e-3);
    }
    for i in 1..20 {
        let r = 0.15 * i as f64;
        assert!((m.w(r, 0.0) - m.w(r, 2.0 * PI)).abs() <= 1e-12);
    }
}
