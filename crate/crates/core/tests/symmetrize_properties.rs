use geoball::model::{ModelSpace, WarpingProfile};
use geoball::pde::{GridField, PolarGrid};
use geoball::surface::PolarMetric2D;
use geoball::symmetrize::{level_profile, symmetrize_field, symmetrized_radius, transplant_radial};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model() -> impl Strategy<Value = ModelSpace> {
    prop_oneof![
        (-1.0..0.5f64).prop_map(|b| ModelSpace::space_form(b, 2).unwrap()),
        (0.0..1.0f64).prop_map(|c| ModelSpace::new(WarpingProfile::odd_polynomial(vec![c]).unwrap(), 2).unwrap()),
    ]
}

/// Nonnegative field with values on a coarse lattice so that ties occur.
fn random_field(grid: &PolarGrid, seed: u64, levels: u32) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = GridField::zeros(grid);
    f.set_center(rng.gen_range(0..levels) as f64);
    for i in 1..=grid.n_r() {
        for j in 0..grid.n_theta() {
            f.set(i, j, rng.gen_range(0..levels) as f64 / levels as f64);
        }
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn layer_cake_matches_direct_integral(seed in any::<u64>(), levels in 2u32..50) {
        let grid = PolarGrid::new(&PolarMetric2D::example(), 0.8, 16, 16).unwrap();
        let f = random_field(&grid, seed, levels);
        let profile = level_profile(&f, &grid).unwrap();
        let direct = f.integral(&grid);
        prop_assert!((profile.layer_cake_integral() - direct).abs() <= 1e-12 * direct.max(1.0));
        prop_assert!(profile.levels.windows(2).all(|w| w[0].0 > w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(profile.levels.last().unwrap().1, profile.total);
        prop_assert_eq!(profile.levels[0].0, profile.sup);
    }

    #[test]
    fn level_radii_grow_as_values_fall(seed in any::<u64>(), m in model()) {
        let grid = PolarGrid::new(&PolarMetric2D::example(), 0.8, 16, 16).unwrap();
        let f = random_field(&grid, seed, 20);
        let fstar = symmetrize_field(&f, &grid, &m).unwrap();
        prop_assert!(fstar.steps.windows(2).all(|w| w[0].value > w[1].value && w[0].radius < w[1].radius));
        let integral = fstar.integral(&m).unwrap();
        let direct = f.integral(&grid);
        prop_assert!((integral - direct).abs() <= 1e-8 * direct.max(1.0), "{integral} vs {direct}");
    }

    #[test]
    fn symmetrized_radius_grows_with_larger_areas(radius in 0.1..2.0f64) {
        let flat = ModelSpace::space_form(0.0, 2).unwrap();
        let area = PolarMetric2D::example().ball_area(radius).unwrap();
        let s = symmetrized_radius(area, &flat).unwrap();
        prop_assert!(area >= std::f64::consts::PI * radius * radius);
        prop_assert!(s >= radius);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn symmetrization_is_idempotent(seed in any::<u64>()) {
        let flat = ModelSpace::space_form(0.0, 2).unwrap();
        let grid = PolarGrid::new(&PolarMetric2D::example(), 1.0, 32, 32).unwrap();
        let f = random_field(&grid, seed, 1000);
        let fstar = symmetrize_field(&f, &grid, &flat).unwrap();
        let wrapper = PolarMetric2D::radial(WarpingProfile::euclidean()).unwrap();
        let n = 64;
        let radial_grid = PolarGrid::new(&wrapper, fstar.radius, n, n).unwrap();
        let profile = fstar.profile(4 * n).unwrap();
        let lifted = transplant_radial(&profile, &radial_grid);
        let twice = symmetrize_field(&lifted, &radial_grid, &flat).unwrap();
        prop_assert!((twice.radius - fstar.radius).abs() <= 1e-12 * fstar.radius);
        let h = radial_grid.dr();
        for k in 1..n {
            let rho = fstar.radius * k as f64 / n as f64;
            let v = twice.step_value(rho);
            let lo = fstar.smooth_value(rho + h);
            let hi = fstar.smooth_value((rho - h).max(0.0));
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "rho={rho}: {v} not in [{lo}, {hi}]");
        }
    }
}

#[test]
fn hyperbolic_volume_gives_unit_radius() {
    let m = ModelSpace::space_form(-1.0, 2).unwrap();
    let v = 2.0 * std::f64::consts::PI * (1f64.cosh() - 1.0);
    assert!((symmetrized_radius(v, &m).unwrap() - 1.0).abs() <= 1e-8);
}
