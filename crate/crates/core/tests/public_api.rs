use std::f64::consts::{FRAC_1_SQRT_2, PI};

use proptest::prelude::*;
use tanlab_core::control::{
    cost_estimate, tangential_cost_closed_form, CostSettings, RadialCost, Strategy,
};
use tanlab_core::lambda::{origin_hit_probability, simulate_lambda, LambdaParams, LambdaStart};
use tanlab_core::montecarlo::replicate;
use tanlab_core::stats::{kuiper_test, TorusSample};
use tanlab_core::tangential::{circular_clock, exp_time_change, simulate_tangential};
use tanlab_core::{make_grid, GridKind, Seed, TimeGrid, TorusAngle};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn replicas_do_not_depend_on_thread_count() {
    let grid = make_grid(GridKind::Log, 0.01, 1.0, 65).unwrap();
    let run = || {
        replicate(Seed::new(99, 0), 64, |s| {
            let p = simulate_tangential(s, &grid, None).unwrap();
            p.lifted(p.len() - 1)
        })
    };
    assert_eq!(in_pool(1, run), in_pool(3, run));
}

#[test]
fn tangential_from_origin_through_the_clock() {
    let g = exp_time_change(&make_grid(GridKind::Uniform, -2.0, 2.0, 41).unwrap()).unwrap();
    let p = simulate_tangential(Seed::new(1, 0), &g, Some(TorusAngle::wrap(PI))).unwrap();
    let c = circular_clock(&p);
    for i in 0..p.len() {
        assert_eq!(c.lifted(i), p.lifted(i));
        assert!((p.radius(i) - g.times()[i].sqrt()).abs() <= 4.0 * f64::EPSILON * p.radius(i));
    }
    let planar = p.planar_path(true);
    assert_eq!(planar.len(), p.len() + 1);
    assert_eq!(planar.planar_values().unwrap()[0], [0.0, 0.0]);
}

#[test]
fn lambda_paths_from_the_origin_are_isotropic() {
    let grid = TimeGrid::quartic_log(-4, 1, 16).unwrap();
    let p = LambdaParams::new(0.5).unwrap();
    let angles = replicate(Seed::new(2, 0), 2000, |s| {
        let path = simulate_lambda(
            s,
            p,
            &grid,
            LambdaStart::Origin,
            Some(TorusAngle::wrap(0.0)),
        )
        .unwrap();
        path.angle.angle(path.angle.len() - 1).value()
    });
    // a fixed start angle is forgotten by the time the radius has grown
    assert!(
        kuiper_test(&TorusSample::new(angles).unwrap(), 0.001)
            .unwrap()
            .pass
    );
}

#[test]
fn origin_law_brackets_the_critical_lambda() {
    assert_eq!(
        origin_hit_probability(LambdaParams::new(FRAC_1_SQRT_2).unwrap(), 1.0, 1e6),
        0.0
    );
    let near = origin_hit_probability(LambdaParams::new(0.71).unwrap(), 1.0, 1e6);
    let far = origin_hit_probability(LambdaParams::new(0.95).unwrap(), 1.0, 1e6);
    assert!(0.0 < near && near < far && far < 1.0);
}

#[test]
fn every_strategy_pays_eta_squared_for_unit_cost() {
    let f = RadialCost::constant(1.0, 1.0).unwrap();
    let st = CostSettings::default();
    let eta = 0.8;
    for (i, s) in [
        Strategy::Tangential,
        Strategy::Radial,
        Strategy::Lambda(0.5),
    ]
    .iter()
    .enumerate()
    {
        let e = cost_estimate(Seed::new(30 + i as u64, 0), s, &f, 0.0, eta, 4000, &st).unwrap();
        let tol = 3.0 * e.stderr + 1e-6 + 0.02 * eta * eta;
        assert!((e.mean - eta * eta).abs() <= tol, "{s:?}: {e:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quartic_grids_scale_by_powers_of_four(lo in -6i32..0, span in 1i32..4, m in 1usize..8) {
        let a = TimeGrid::quartic_log(lo, lo + span, m).unwrap();
        let b = TimeGrid::quartic_log(lo + 1, lo + span + 1, m).unwrap();
        for (x, y) in a.times().iter().zip(b.times()) {
            prop_assert!((4.0 * x - y).abs() <= 1e-12 * y);
        }
    }

    #[test]
    fn closed_form_power_costs(p in -1.9f64..3.0, eta in 0.1f64..2.0) {
        let f = RadialCost::power(p, eta).unwrap();
        let exact = 2.0 * eta.powf(p + 2.0) / (p + 2.0);
        let got = tangential_cost_closed_form(&f, eta).unwrap();
        prop_assert!((got - exact).abs() <= 1e-8 * exact);
    }

    #[test]
    fn same_seed_same_path(master in any::<u64>(), stream in 0u64..1000) {
        let grid = make_grid(GridKind::Log, 0.5, 2.0, 9).unwrap();
        let a = simulate_tangential(Seed::new(master, stream), &grid, None).unwrap();
        let b = simulate_tangential(Seed::new(master, stream), &grid, None).unwrap();
        prop_assert_eq!(a, b);
    }
}
