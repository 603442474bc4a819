use helmns_core::flow::random_band_limited;
use helmns_core::*;

fn window(n: usize) -> Grid3 {
    make_grid([n; 3], [2.0, 2.5, 1.5], Boundary::TruncatedWindow).unwrap()
}

fn fd_gradient_error(n: usize, order: usize) -> f64 {
    let g = window(n);
    let f = ScalarField::sample(g, |p| (1.3 * p[0]).sin() * p[1].cos() + (0.7 * p[2]).exp()).unwrap();
    let want = VectorField::sample(g, |p| {
        [
            1.3 * (1.3 * p[0]).cos() * p[1].cos(),
            -(1.3 * p[0]).sin() * p[1].sin(),
            0.7 * (0.7 * p[2]).exp(),
        ]
    })
    .unwrap();
    (&grad(&f, DiffBackend::FiniteDifference(order)).unwrap() - &want).sup_norm()
}

fn fd_laplacian_error(n: usize, order: usize) -> f64 {
    let g = window(n);
    let f = ScalarField::sample(g, |p| (1.3 * p[0]).sin() * p[1].cos()).unwrap();
    let want = f.scale(-(1.69 + 1.0));
    (&laplacian(&f, DiffBackend::FiniteDifference(order)).unwrap() - &want).sup_norm()
}

#[test]
fn finite_difference_gradient_converges_at_stated_order() {
    for order in [2, 4] {
        let (e1, e2) = (fd_gradient_error(16, order), fd_gradient_error(32, order));
        let rate = (e1 / e2).log2();
        assert!((rate - order as f64).abs() < 0.5, "order {order}: rate {rate}");
    }
}

#[test]
fn finite_difference_laplacian_converges_at_stated_order() {
    for order in [2, 4] {
        let (e1, e2) = (fd_laplacian_error(16, order), fd_laplacian_error(32, order));
        let rate = (e1 / e2).log2();
        assert!(rate > order as f64 - 0.5, "order {order}: rate {rate}");
    }
}

#[test]
fn spectral_identities_on_random_fields() {
    let g = Grid3::periodic_cube(16).unwrap();
    let b = DiffBackend::Spectral;
    for seed in 0..20 {
        let u = random_band_limited(&g, seed, 5).unwrap();
        assert!(div(&curl(&u, b).unwrap(), b).unwrap().sup_norm() <= 1e-11);
        assert!(curl(&grad(u.component(0), b).unwrap(), b).unwrap().sup_norm() <= 1e-11);
    }
}

#[test]
fn spectral_derivatives_are_exact_on_resolved_modes() {
    let g = Grid3::periodic_cube(12).unwrap();
    let f = ScalarField::sample(g, |p| (3.0 * p[0] + 2.0 * p[1] - p[2]).sin()).unwrap();
    let want = VectorField::sample(g, |p| {
        let c = (3.0 * p[0] + 2.0 * p[1] - p[2]).cos();
        [3.0 * c, 2.0 * c, -c]
    })
    .unwrap();
    assert!((&grad(&f, DiffBackend::Spectral).unwrap() - &want).sup_norm() < 1e-12);
    assert!((&laplacian(&f, DiffBackend::Spectral).unwrap() - &f.scale(-14.0)).sup_norm() < 1e-11);
}

#[test]
fn taylor_green_advection_oracle() {
    let g = Grid3::periodic_cube(32).unwrap();
    let u = flow::ic_taylor_green(&g).unwrap();
    let a = advect(&u, &u, DiffBackend::Spectral).unwrap();
    // (u·∇)u = grad((cos 2x + cos 2y)/4)
    let want = VectorField::sample(g, |p| [-(2.0 * p[0]).sin() / 2.0, -(2.0 * p[1]).sin() / 2.0, 0.0]).unwrap();
    assert!((&a - &want).sup_norm() < 1e-13);
}
