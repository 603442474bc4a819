//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use helmns_cli::config::RunConfig;
use helmns_core::flow::{
    gaussian_vortex_velocity, ic_abc, ic_random_solenoidal, ic_taylor_green, random_band_limited,
};
use helmns_core::heat::kernel_alpha;
use helmns_core::helmholtz::{interior_discrepancy, quadrature_vs_spectral_report};
use helmns_core::snapshot::{encode, read_snapshot, Snapshot};
use helmns_core::verify::{checks, vorticity_states, CheckOptions, CheckStatus};
use helmns_core::*;

const SP: DiffBackend = DiffBackend::Spectral;
const HP: HelmholtzBackend = HelmholtzBackend::SpectralPoisson;
const HB: HeatBackend = HeatBackend::Spectral;

type Outcome = Result<(bool, String)>;

fn cube(n: usize) -> Grid3 {
    Grid3::periodic_cube(n).expect("grid")
}

fn desk_params(steps: usize) -> SimParams {
    SimParams {
        nu: 0.1,
        rho: 1.0,
        dt: 5e-3,
        steps,
        dealias: true,
    }
}

fn hp(nu: f64, t: f64) -> HeatParams {
    HeatParams::new(nu, t).expect("heat params")
}

/// Shared 32³ trajectories at the desk-scale parameters.
struct Runs {
    tg: Trajectory,
    abc: Trajectory,
    random: Trajectory,
}

impl Runs {
    fn new() -> Result<Self> {
        let g = cube(32);
        Ok(Self {
            tg: simulate(&ic_taylor_green(&g)?, &desk_params(200), 10)?,
            abc: simulate(&ic_abc(&g, 1.0, 1.0, 1.0)?, &desk_params(200), 10)?,
            random: simulate(&ic_random_solenoidal(&g, 17, 4, 1.0)?, &desk_params(200), 10)?,
        })
    }
}

fn random_fields() -> Result<Vec<VectorField>> {
    (0..20).map(|s| random_band_limited(&cube(32), 1000 + s, 8)).collect()
}

fn c1_operator_identities() -> Outcome {
    let (mut dc, mut cg) = (0.0f64, 0.0f64);
    for f in random_fields()? {
        dc = dc.max(div(&curl(&f, SP)?, SP)?.sup_norm());
        cg = cg.max(curl(&grad(f.component(0), SP)?, SP)?.sup_norm());
    }
    Ok((dc <= 1e-11 && cg <= 1e-11, format!("sup div(curl) {dc:.2e}, sup curl(grad) {cg:.2e} (tol 1e-11)")))
}

fn c2_reconstruction() -> Outcome {
    let (mut rec, mut orth) = (0.0f64, 0.0f64);
    for f in random_fields()? {
        let parts = decompose(&f, HP)?;
        rec = rec.max((&f - &parts.reconstruct()).sup_norm() / f.sup_norm());
        orth = orth.max(parts.grad_part.inner(&parts.curl_part).abs() / f.inner(&f));
    }
    Ok((rec <= 1e-10 && orth <= 1e-9, format!("reconstruction {rec:.2e} (tol 1e-10), orthogonality {orth:.2e} x energy (tol 1e-9)")))
}

fn c3_projection() -> Outcome {
    let (mut fixed, mut kill, mut idem) = (0.0f64, 0.0f64, 0.0f64);
    for f in random_fields()? {
        let sol = curl(&f, SP)?;
        fixed = fixed.max((&h_operator(&sol, HP)? - &sol).sup_norm() / sol.sup_norm());
        let g = grad(f.component(1), SP)?;
        kill = kill.max(h_operator(&g, HP)?.sup_norm() / g.sup_norm());
        let h = h_operator(&f, HP)?;
        idem = idem.max((&h_operator(&h, HP)? - &h).sup_norm() / f.sup_norm());
    }
    let ok = fixed <= 1e-10 && kill <= 1e-10 && idem <= 1e-10;
    Ok((ok, format!("fixed point {fixed:.2e}, annihilation {kill:.2e}, idempotence {idem:.2e} (tol 1e-10)")))
}

fn c4_heat() -> Outcome {
    let g = cube(32);
    let f = random_band_limited(&g, 77, 6)?.component(0).clone();
    let f = &f + &ScalarField::constant(g, 1.5);
    let a = heat_propagate(&heat_propagate(&f, hp(0.1, 0.4), HB)?, hp(0.1, 0.6), HB)?;
    let b = heat_propagate(&f, hp(0.1, 1.0), HB)?;
    let semigroup = (&a - &b).sup_norm() / b.sup_norm();
    let mass = (b.mean() - f.mean()).abs() / f.mean().abs();
    let m = [2.0, -3.0, 1.0];
    let k2 = 14.0;
    let wave = ScalarField::sample(g, |p| (m[0] * p[0] + m[1] * p[1] + m[2] * p[2]).sin())?;
    let decayed = heat_propagate(&wave, hp(0.1, 1.0), HB)?;
    let mode = (&decayed - &wave.scale((-0.1 * k2 * 1.0f64).exp())).sup_norm() / (-1.4f64).exp();

    // Gaussian spread on a truncated window, direct convolution
    let (s0, nu, t) = (0.5, 0.1, 2.5);
    let c = [6.0; 3];
    let w = make_grid([30; 3], [12.0; 3], Boundary::TruncatedWindow)?;
    let at = |p: [f64; 3], s: f64| kernel_alpha([p[0] - c[0], p[1] - c[1], p[2] - c[2]], s);
    let f0 = ScalarField::sample(w, |p| at(p, s0).unwrap())?;
    let got = heat_propagate(&f0, hp(nu, t), HeatBackend::Direct)?;
    let want = ScalarField::sample(w, |p| at(p, s0 + nu * t).unwrap())?;
    let mut spread = 0.0f64;
    for idx in 0..w.len() {
        let p = w.point_at(idx);
        if (0..3).all(|a| (p[a] - c[a]).abs() <= 3.0) {
            spread = spread.max((got.data()[idx] - want.data()[idx]).abs() / want.sup_norm());
        }
    }
    let ok = semigroup <= 1e-12 && mass <= 1e-12 && mode <= 1e-12 && spread <= 1e-6;
    Ok((ok, format!("semigroup {semigroup:.2e}, mass {mass:.2e}, mode decay {mode:.2e} (tol 1e-12), Gaussian spread {spread:.2e} (tol 1e-6)")))
}

fn c5_taylor_green(runs: &Runs) -> Outcome {
    let u0 = &runs.tg.states[0].u;
    let last = runs.tg.states.last().expect("frames");
    let err = (&last.u - &u0.scale((-0.2f64).exp())).sup_norm() / u0.sup_norm();

    // order on a nonlinear flow; TG itself is exact at any step
    let g = cube(16);
    let v0 = ic_random_solenoidal(&g, 11, 4, 1.0)?;
    let end = |dt: f64| -> Result<VectorField> {
        let steps = (0.5 / dt).round() as usize;
        let p = SimParams { dt, steps, ..desk_params(0) };
        Ok(simulate(&v0, &p, steps)?.states.pop().expect("final").u)
    };
    let reference = end(0.1 / 64.0)?;
    let errors = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| Ok((&end(dt)? - &reference).sup_norm()))
        .collect::<Result<Vec<f64>>>()?;
    let rates: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = err <= 1e-6 && rates.iter().all(|r| (r - 4.0).abs() <= 0.5);
    Ok((ok, format!("TG relative error at t=1 {err:.2e} (tol 1e-6); log2 error ratios {rates:.2?}")))
}

fn c6_lemma1() -> Outcome {
    let g = cube(32);
    let mut fields = vec![ic_taylor_green(&g)?, ic_abc(&g, 1.0, 1.0, 1.0)?];
    for s in 0..5 {
        fields.push(ic_random_solenoidal(&g, 500 + s, 5, 1.0)?);
    }
    let mut worst = 0.0f64;
    for u in &fields {
        worst = worst.max(checks::lemma1_residuals(u)?.0);
    }
    Ok((worst <= 1e-9, format!("worst relative residual {worst:.2e} over TG, ABC and 5 random fields (tol 1e-9)")))
}

fn c7_theorem1(runs: &Runs) -> Outcome {
    let opts = CheckOptions::default();
    let clean = checks::check_theorem1(&runs.tg, &opts)?;
    let polluted = checks::check_theorem1(&checks::with_gradient_pollution(&runs.tg, 0.05)?, &opts)?;
    let ok = clean.status == CheckStatus::Passed
        && clean.worst_sup() <= 1e-6
        && polluted.status == CheckStatus::Failed
        && polluted.worst_sup() >= 1e-2;
    Ok((ok, format!("TG residual {:.2e} (tol 1e-6); polluted control {:.2e} ({:?})", clean.worst_sup(), polluted.worst_sup(), polluted.status)))
}

fn c8_theorem2(runs: &Runs) -> Outcome {
    let opts = CheckOptions::default();
    let tg = checks::check_theorem2(&runs.tg, &opts)?;
    let part = |name: &str| tg.parts.iter().find(|p| p.name == name).map(|p| p.worst_sup).unwrap_or(f64::NAN);
    let (a, b) = (part("vorticity_vs_xi"), part("velocity_vs_h_of_xi"));
    let abc = checks::check_theorem2(&runs.abc, &opts)?;
    let ok = a <= 1e-6 && b <= 1e-6 && abc.status == CheckStatus::NotApplicable;
    let mut detail = format!("TG vorticity-vs-xi {a:.2e}, u-vs-H(xi) {b:.2e} (tol 1e-6); ABC status {:?}", abc.status);
    if abc.status != CheckStatus::NotApplicable {
        detail.push_str(" (ABC is a curl eigenfunction, so curl((u.grad)u) = 0 and the gate is met)");
    }
    Ok((ok, detail))
}

fn c9_monitors(runs: &Runs) -> Outcome {
    let opts = CheckOptions::default();
    let count = |r: &verify::CheckReport| r.series.get("violations").map(|v| v.iter().sum::<f64>()).unwrap_or(f64::NAN);
    let tg = checks::monitor_theorem34(&runs.tg, &opts)?;
    let rnd = checks::monitor_theorem34(&runs.random, &opts)?;
    let mut bad = runs.tg.clone();
    bad.states[6].u = bad.states[6].u.scale(10.0);
    let injected = checks::monitor_theorem34(&bad, &opts)?;
    let ok = count(&tg) == 0.0 && count(&rnd) == 0.0 && injected.status == CheckStatus::Failed && count(&injected) > 0.0;
    Ok((ok, format!("violations: TG {}, random {}, injected {}", count(&tg), count(&rnd), count(&injected))))
}

fn c10_delta(runs: &Runs) -> Outcome {
    let traj = &runs.tg;
    let vs = vorticity_states(traj)?;
    let g = traj.grid;
    let nu = traj.params.nu;
    let n = g.len();
    let mut worst = 0.0f64;
    let mut sampled = 0;
    let mut masks_exact = true;
    // analytic zero set of cos x cos y on the 32-point axis: i or j in {8, 24}
    let zero_plane = |i: usize| i == 8 || i == 24;
    let expected_masked = 2 * n + g.n()[2] * (32 * 32 - 30 * 30);
    for (f, (s, w)) in traj.states.iter().zip(&vs).enumerate() {
        let d = checks::delta_terms(&s.u, w, nu, 1e-8)?;
        masks_exact &= d.masked_count() == expected_masked;
        let a = (-2.0 * nu * s.t).exp();
        if f != vs.len() / 2 {
            continue;
        }
        let eligible: Vec<usize> = (0..n)
            .filter(|&p| {
                let (i, j, _) = g.unravel(p);
                !zero_plane(i) && !zero_plane(j)
            })
            .collect();
        for &p in eligible.iter().step_by(eligible.len() / 100).take(100) {
            let x = g.point_at(p);
            let (cx, sx, cy, sy) = (x[0].cos(), x[0].sin(), x[1].cos(), x[1].sin());
            let q = cx * cy;
            let mix = sx * sx * cy * cy + cx * cx * sy * sy;
            let want = [a * q / nu, a * mix / (nu * q), a * mix / (4.0 * nu * q), 0.0];
            for j in 0..4 {
                let got = d.g[2][j][p];
                let err = if want[j] == 0.0 { got.abs() } else { ((got - want[j]) / want[j]).abs() };
                worst = worst.max(err);
            }
            sampled += 1;
        }
    }
    let ok = worst <= 1e-8 && sampled == 100 && masks_exact;
    Ok((ok, format!("{sampled} points, worst relative g error {worst:.2e} (tol 1e-8); masked count {} per frame, exact: {masks_exact}", expected_masked)))
}

fn c11_lambda(runs: &Runs) -> Outcome {
    let opts = CheckOptions::default();
    let mut worst = 0.0f64;
    for traj in [&runs.tg, &runs.random] {
        let lams = checks::lambda_evolution(traj, &opts, true)?;
        let v0 = curl(&traj.states[0].u, SP)?;
        for (lam, s) in lams.iter().zip(&traj.states) {
            let want = heat_propagate(&v0, hp(traj.params.nu, s.t), HB)?;
            worst = worst.max((lam - &want).sup_norm() / want.sup_norm());
        }
    }
    Ok((worst <= 1e-8, format!("lambda vs heat-propagated vorticity {worst:.2e} (tol 1e-8)")))
}

fn c12_backends() -> Outcome {
    let periodic = make_grid([80; 3], [12.0; 3], Boundary::Periodic)?;
    let mut values = Vec::new();
    for n in [5, 10, 20, 40] {
        let window = make_grid([n; 3], [6.0; 3], Boundary::TruncatedWindow)?;
        let r = quadrature_vs_spectral_report(gaussian_vortex_velocity([3.0; 3], 1.0, 1.0), &window, &periodic)?;
        values.push(interior_discrepancy(&r));
    }
    let ok = values.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    Ok((ok, format!("interior discrepancy at n = 5, 10, 20, 40: {}", shown.join(", "))))
}

fn c13_reproducibility() -> Outcome {
    let cfg_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/configs/tg32.cfg");
    let cfg = RunConfig::load(&cfg_path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    let mut outcomes = Vec::new();
    for d in &dirs {
        outcomes.push(helmns_cli::run(&cfg, Some(d.path())).map_err(|e| Error::InvalidArgument(e.to_string()))?);
    }
    let read = |d: &Path, f: &str| fs::read(d.join(f));
    let mut identical = read(dirs[0].path(), "manifest.json")? == read(dirs[1].path(), "manifest.json")?;
    for f in outcomes[0].files.iter().filter(|f| f.as_str() != "timings.json") {
        identical &= read(dirs[0].path(), f)? == read(dirs[1].path(), f)?;
    }
    let mut exact = true;
    let mut count = 0;
    for state in &outcomes[0].trajectory.states {
        let step = (state.t / cfg.sim.dt).round() as usize;
        let path = dirs[0].path().join(format!("snapshots/u_{step:05}.hnsf"));
        let bytes = fs::read(&path)?;
        let back = read_snapshot(&path)?.into_vector().expect("vector snapshot");
        exact &= encode(&Snapshot::Vector(back.clone())) == bytes;
        for c in 0..3 {
            exact &= back
                .component(c)
                .data()
                .iter()
                .zip(state.u.component(c).data())
                .all(|(a, b)| a.to_bits() == b.to_bits());
        }
        count += 1;
    }
    let passed = outcomes.iter().all(|o| o.all_passed());
    Ok((identical && exact, format!("manifests and reports identical: {identical}; {count} snapshots bit-exact: {exact}; tg32 checks all pass: {passed}")))
}

const NAMES: [&str; 13] = [
    "operator identities",
    "Helmholtz reconstruction",
    "solenoidal projection",
    "heat module",
    "Taylor-Green and RK4 order",
    "curl of advection identity",
    "velocity representation",
    "heat representation of vorticity",
    "vorticity-rate monitors",
    "delta diagnostic",
    "lambda comparison",
    "backend cross-validation",
    "reproducibility",
];

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        for name in NAMES {
            println!("{}: test", name.replace(' ', "_"));
        }
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let runs = match Runs::new() {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: [Box<dyn Fn() -> Outcome + '_>; 13] = [
        Box::new(c1_operator_identities),
        Box::new(c2_reconstruction),
        Box::new(c3_projection),
        Box::new(c4_heat),
        Box::new(|| c5_taylor_green(&runs)),
        Box::new(c6_lemma1),
        Box::new(|| c7_theorem1(&runs)),
        Box::new(|| c8_theorem2(&runs)),
        Box::new(|| c9_monitors(&runs)),
        Box::new(|| c10_delta(&runs)),
        Box::new(|| c11_lambda(&runs)),
        Box::new(c12_backends),
        Box::new(c13_reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, f)) in NAMES.iter().zip(&criteria).enumerate() {
        let t = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
