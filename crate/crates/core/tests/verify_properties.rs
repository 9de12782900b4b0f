use geoball::model::{ModelSpace, WarpingProfile};
use geoball::surface::{Direction, PolarMetric2D};
use geoball::verify::{verify, VerificationReport, VerifyConfig, EQUALITY_TOL, SYMMETRIZATION_TOL};

fn run(metric: &PolarMetric2D, model: &ModelSpace, radius: f64, n: usize) -> VerificationReport {
    let mut config = VerifyConfig::new(radius).with_grid(n, n);
    config.hypothesis_grid = (64, 64);
    verify(metric, model, config).unwrap()
}

fn check_coherent(report: &VerificationReport) {
    let op = match report.hypothesis.direction {
        Direction::ModelLeM => " >= ",
        Direction::ModelGeM => " <= ",
        _ => " == ",
    };
    for e in &report.entries {
        assert_eq!(e.pass, e.margin >= -e.tol, "{e:?}");
        let strict_bound = e.name == "torsional/coarse_bound";
        let identity = e.name.starts_with("symmetrization/") && e.name != "symmetrization/profile";
        assert!(strict_bound || identity || e.inequality.contains(op), "{e:?}");
    }
}

#[test]
fn example_against_flat_and_sphere() {
    let flat = ModelSpace::space_form(0.0, 2).unwrap();
    let sphere = ModelSpace::space_form(1.0, 2).unwrap();
    let m = PolarMetric2D::example();
    let a = run(&m, &flat, 1.0, 128);
    let b = run(&m, &sphere, 1.0, 128);
    for r in [&a, &b] {
        assert_eq!(r.hypothesis.direction, Direction::ModelLeM);
        check_coherent(r);
        assert!(r.all_pass(), "{:?}", r.first_failure());
    }
    let margin = |r: &VerificationReport| r.entry("mean_exit").unwrap().margin;
    assert!(margin(&b) > margin(&a));
}

#[test]
fn reports_are_reproducible() {
    let flat = ModelSpace::space_form(0.0, 2).unwrap();
    let m = PolarMetric2D::perturbed(0.5, 2).unwrap();
    assert_eq!(run(&m, &flat, 0.8, 32), run(&m, &flat, 0.8, 32));
}

#[test]
fn radial_self_cases_are_degenerate() {
    for b in [0.0, -1.0] {
        let model = ModelSpace::space_form(b, 2).unwrap();
        let wrapper = PolarMetric2D::radial(WarpingProfile::space_form(b)).unwrap();
        let report = run(&wrapper, &model, 1.0, 128);
        assert_eq!(report.hypothesis.direction, Direction::Equal);
        check_coherent(&report);
        for e in &report.entries {
            if e.name == "torsional/coarse_bound" {
                assert!(e.pass);
            } else if e.tol == SYMMETRIZATION_TOL {
                assert!(e.margin.abs() <= SYMMETRIZATION_TOL, "{e:?}");
            } else {
                assert!(e.margin.abs() <= EQUALITY_TOL, "b={b}: {e:?}");
            }
        }
    }
}

#[test]
fn eigenvalues_scale_with_radius_in_the_flat_self_case() {
    let flat = ModelSpace::space_form(0.0, 2).unwrap();
    let wrapper = PolarMetric2D::radial(WarpingProfile::euclidean()).unwrap();
    let lambda = |r: f64| {
        run(&wrapper, &flat, r, 64)
            .entry("eigenvalue/inverse_iteration")
            .unwrap()
            .lhs
    };
    assert!((lambda(0.5) / lambda(1.0) - 4.0).abs() <= 1e-9);
}

#[test]
fn forced_reverse_direction_fails() {
    let flat = ModelSpace::space_form(0.0, 2).unwrap();
    let mut config = VerifyConfig::new(0.5).with_grid(32, 32);
    config.hypothesis_grid = (64, 64);
    config.force_direction = Some(Direction::ModelGeM);
    let report = verify(&PolarMetric2D::example(), &flat, config).unwrap();
    assert!(report.hypothesis.forced);
    assert_eq!(report.first_failure().unwrap().name, "mean_exit");
    assert!(report.entry("mean_exit").unwrap().margin < 0.0);
}
