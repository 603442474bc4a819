use helmns_core::flow::{ic_random_solenoidal, ic_taylor_green};
use helmns_core::verify::{checks, CheckOptions, CheckStatus};
use helmns_core::*;

fn params(nu: f64, dt: f64, steps: usize) -> SimParams {
    SimParams {
        nu,
        dt,
        steps,
        ..SimParams::default()
    }
}

#[test]
fn taylor_green_matches_analytic_decay() {
    let g = Grid3::periodic_cube(16).unwrap();
    let u0 = ic_taylor_green(&g).unwrap();
    let traj = simulate(&u0, &params(0.1, 5e-3, 200), 200).unwrap();
    let last = traj.states.last().unwrap();
    assert!((last.t - 1.0).abs() < 1e-12);
    let err = (&last.u - &u0.scale((-0.2f64).exp())).sup_norm() / u0.sup_norm();
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn random_flow_stays_solenoidal_and_dissipates() {
    let g = Grid3::periodic_cube(16).unwrap();
    let u0 = ic_random_solenoidal(&g, 21, 4, 1.0).unwrap();
    let traj = simulate(&u0, &params(0.1, 5e-3, 60), 1).unwrap();
    let e0 = u0.inner(&u0);
    let mut prev = e0;
    for s in &traj.states {
        assert!(div(&s.u, DiffBackend::Spectral).unwrap().sup_norm() <= 1e-10);
        let e = s.u.inner(&s.u);
        assert!(e <= prev + 1e-12 * e0, "energy rose at t = {}", s.t);
        prev = e;
    }
}

#[test]
fn rk4_order_on_nonlinear_flow() {
    let g = Grid3::periodic_cube(16).unwrap();
    let u0 = ic_random_solenoidal(&g, 11, 4, 1.0).unwrap();
    let end = |dt: f64| {
        let steps = (0.5 / dt).round() as usize;
        simulate(&u0, &params(0.1, dt, steps), steps).unwrap().states.pop().unwrap().u
    };
    let reference = end(0.1 / 64.0);
    let errors: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&dt| (&end(dt) - &reference).sup_norm()).collect();
    for w in errors.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((rate - 4.0).abs() <= 0.5, "rate {rate}");
    }
}

#[test]
fn deterministic_across_runs_and_worker_counts() {
    let g = Grid3::periodic_cube(16).unwrap();
    let u0 = ic_random_solenoidal(&g, 3, 4, 1.0).unwrap();
    let p = params(0.1, 5e-3, 10);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&u0, &p, 5).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(1));
    let b = run(3);
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!((&x.u - &y.u).sup_norm() <= 1e-15);
    }
}

#[test]
fn transport_residual_is_second_order_in_frame_spacing() {
    let g = Grid3::periodic_cube(16).unwrap();
    let u0 = ic_random_solenoidal(&g, 8, 3, 1.0).unwrap();
    let opts = CheckOptions::default();
    let worst = |every: usize| {
        let traj = simulate(&u0, &params(0.1, 5e-3, 16 * every), every).unwrap();
        checks::check_vorticity_transport(&traj, &opts).unwrap().worst_sup()
    };
    let (coarse, fine) = (worst(8), worst(4));
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn decayed_taylor_green_satisfies_the_degenerate_bound() {
    // at ν = 1 the vorticity 2e^(−2t) reaches 1e-8 near t = 9.6
    let g = Grid3::periodic_cube(8).unwrap();
    let u0 = ic_taylor_green(&g).unwrap();
    let traj = simulate(&u0, &params(1.0, 0.05, 220), 10).unwrap();
    let r = checks::check_corollary1(&traj, &CheckOptions::default()).unwrap();
    assert_eq!(r.status, CheckStatus::Passed, "{:?}", r.notes);
    assert!(r.residuals.len() >= 2);
}
