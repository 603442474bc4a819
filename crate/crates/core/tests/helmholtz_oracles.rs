use helmns_core::flow::{gaussian_vortex_velocity, random_band_limited};
use helmns_core::helmholtz::{interior_discrepancy, quadrature_vs_spectral_report};
use helmns_core::*;

const SP: HelmholtzBackend = HelmholtzBackend::SpectralPoisson;

fn fields() -> Vec<VectorField> {
    let g = Grid3::periodic_cube(16).unwrap();
    (100..120).map(|s| random_band_limited(&g, s, 5).unwrap()).collect()
}

#[test]
fn reconstruction_and_orthogonality_on_random_fields() {
    for f in fields() {
        let parts = decompose(&f, SP).unwrap();
        let rec = (&f - &parts.reconstruct()).sup_norm() / f.sup_norm();
        assert!(rec <= 1e-10, "reconstruction {rec}");
        let energy = f.inner(&f);
        assert!(parts.grad_part.inner(&parts.curl_part).abs() <= 1e-9 * energy);
        assert!(div(&parts.curl_part, DiffBackend::Spectral).unwrap().sup_norm() <= 1e-10);
        assert!(curl(&parts.grad_part, DiffBackend::Spectral).unwrap().sup_norm() <= 1e-10);
    }
}

#[test]
fn projection_fixed_points_annihilation_and_idempotence() {
    let b = DiffBackend::Spectral;
    for f in fields() {
        let sol = curl(&f, b).unwrap();
        assert!((&h_operator(&sol, SP).unwrap() - &sol).sup_norm() <= 1e-10 * sol.sup_norm());
        let gradient = grad(f.component(2), b).unwrap();
        assert!(h_operator(&gradient, SP).unwrap().sup_norm() <= 1e-10 * gradient.sup_norm());
        let h = h_operator(&f, SP).unwrap();
        assert!((&h_operator(&h, SP).unwrap() - &h).sup_norm() <= 1e-10 * f.sup_norm());
    }
}

#[test]
fn gaussian_vortex_backends_converge_under_refinement() {
    // window edge 6 around a unit vortex; periodic reference on edge 12 with
    // spacing 0.3 so every window node is a reference node
    let periodic = make_grid([40; 3], [12.0; 3], Boundary::Periodic).unwrap();
    let centre = [3.0; 3];
    let mut prev = f64::INFINITY;
    for n in [5, 10, 20] {
        let window = make_grid([n; 3], [6.0; 3], Boundary::TruncatedWindow).unwrap();
        let field = gaussian_vortex_velocity(centre, 1.0, 1.0);
        let report = quadrature_vs_spectral_report(field, &window, &periodic).unwrap();
        let d = interior_discrepancy(&report);
        assert!(d < prev, "n = {n}: {d} after {prev}");
        prev = d;
    }
}
