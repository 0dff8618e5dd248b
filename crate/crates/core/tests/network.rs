mod common;

use common::{rel, B, NOISE};
use tapc_core::baselines::opv_pm;
use tapc_core::model::{
    generate_scenario, validate_allocation, NetworkScenario, ScenarioGenConfig,
};
use tapc_core::oracle::{analytic_2cell_fixed_point, fixed_load_cell_powers};
use tapc_core::pm::{
    dtapc_pm, feasibility_edge, interference_property_check, uniqueness_check, PmOptions,
    UpdateSchedule,
};
use tapc_core::rm::{dtapc_rm, RmOptions};

fn small(seed: u64, sites: usize, users: usize, demand: f64) -> NetworkScenario {
    generate_scenario(&ScenarioGenConfig {
        sites,
        sectors_per_site: 1,
        users_per_cell: users,
        seed,
        demand,
        ..ScenarioGenConfig::default()
    })
    .unwrap()
}

fn symmetric(g: f64, gc: f64, d: f64) -> NetworkScenario {
    NetworkScenario::new(
        vec![vec![g, gc], vec![gc, g]],
        vec![0, 1],
        vec![d, d],
        vec![10.0, 10.0],
        NOISE,
        B,
    )
    .unwrap()
}

#[test]
fn two_cell_fixed_point_matches_closed_form() {
    for (g, gc, d) in [(1e-10, 1e-11, 1e6), (3e-11, 2e-11, 4e5), (5e-9, 1e-12, 3e6)] {
        let sc = symmetric(g, gc, d);
        let q = analytic_2cell_fixed_point(g, gc, d, B, NOISE).unwrap();
        for schedule in [UpdateSchedule::Jacobi, UpdateSchedule::GaussSeidel] {
            let opts = PmOptions {
                schedule,
                ..PmOptions::default()
            };
            let out = dtapc_pm(&sc, &opts).unwrap();
            for x in &out.solution().unwrap().q.0 {
                assert!(rel(*x, q) < 1e-8);
            }
        }
    }
}

#[test]
fn pm_limit_is_least_for_its_loads() {
    let sc = small(4, 3, 3, 1e6);
    let out = dtapc_pm(&sc, &PmOptions::default()).unwrap();
    let sol = out.solution().unwrap();
    let at_loads = fixed_load_cell_powers(&sc, &sol.allocation.load).unwrap();
    for (a, b) in at_loads.iter().zip(&sol.q.0) {
        assert!(rel(*a, *b) < 1e-7);
    }
    // Any other load split needs at least as much power in every cell.
    let uniform: Vec<f64> = (0..sc.user_count())
        .map(|u| 1.0 / sc.users_of(sc.serving_cell(u)).len() as f64)
        .collect();
    if let Some(other) = fixed_load_cell_powers(&sc, &uniform) {
        for (a, b) in other.iter().zip(&sol.q.0) {
            assert!(*a >= *b * (1.0 - 1e-9));
        }
    }
}

#[test]
fn opv_never_beats_dtapc() {
    let mut compared = 0;
    for seed in 0..6 {
        let sc = small(seed, 3, 4, 1e6);
        let opts = PmOptions::default();
        let (Some(d), Some(o)) = (
            dtapc_pm(&sc, &opts).unwrap().solution().cloned(),
            opv_pm(&sc, &opts).unwrap().solution().cloned(),
        ) else {
            continue;
        };
        for (x, y) in d.q.0.iter().zip(&o.q.0) {
            assert!(*x <= *y * (1.0 + 1e-9));
        }
        assert!(d.sum_power_watts(&sc) < o.sum_power_watts(&sc));
        assert!(validate_allocation(&d.allocation, &sc, 1e-6).all_satisfied());
        compared += 1;
    }
    assert!(compared >= 3);
}

#[test]
fn property_and_uniqueness_checks_pass() {
    let sc = small(7, 3, 2, 1e6);
    let report = interference_property_check(&sc, 50, 7).unwrap();
    assert!(report.passed());
    let uni = uniqueness_check(&sc, 4, 7, &PmOptions::default()).unwrap();
    assert!(uni.agrees_within(1e-7));
}

#[test]
fn feasibility_edge_separates_verdicts() {
    let sc = small(2, 3, 2, 1e6);
    let opts = PmOptions::default();
    let edge = feasibility_edge(&sc, 1e6, 1e-3, &opts).unwrap().unwrap();
    let below = sc.with_uniform_demand(0.99 * edge).unwrap();
    let above = sc.with_uniform_demand(1.01 * edge).unwrap();
    assert!(dtapc_pm(&below, &opts).unwrap().is_feasible());
    assert!(!dtapc_pm(&above, &opts).unwrap().is_feasible());
}

#[test]
fn rm_improves_on_pm_start_and_keeps_demands() {
    let sc = small(5, 3, 3, 5e5);
    let out = dtapc_rm(&sc, &RmOptions::default()).unwrap();
    let sol = out.solution().unwrap();
    assert!(sol.converged);
    for w in sol.sum_rate_trace.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 1e-12));
    }
    for (r, d) in sol.achieved_rates.iter().zip(sc.demands()) {
        assert!(*r >= *d * (1.0 - 1e-9));
    }
    assert!(sol.sum_rate() > sc.demands().iter().sum::<f64>());
    assert!(sol.compliance.iter().all(|c| c.holds()));
    assert!(
        validate_allocation(&sol.allocation, &sc, 1e-6)
            .power_cap
            .satisfied
    );
}
