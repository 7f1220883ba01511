use bosefluct_core::bogoliubov::{
    applied_to_condensate, convolution, covariance_matrix, dressed_dispersion, l2_norm_sq, mu, mu_on_lattice, sigma_f,
    MomentumLattice, SpectralObservable, ZERO_MODE,
};
use bosefluct_core::linalg::CMatrix;
use bosefluct_core::scattering::{eta_coefficients, solve_neumann, EtaConvention, RadialPotential};
use bosefluct_core::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn lattice() -> MomentumLattice {
    MomentumLattice::new(2.0 * PI * 1.5).unwrap()
}

fn cosine_observable(lat: &MomentumLattice) -> SpectralObservable {
    SpectralObservable::multiplication_cosine(lat.mode_list(), [1.0, 0.5, 0.0]).unwrap()
}

/// A bounded test function drawn from a small family.
fn test_function(kind: u8, a: f64) -> Box<dyn Fn(f64) -> f64> {
    match kind % 4 {
        0 => Box::new(move |x| a * x),
        1 => Box::new(move |x| if x <= a { 1.0 } else { 0.0 }),
        2 => Box::new(move |x| (a * x).sin()),
        _ => Box::new(move |x| (x - a).abs().min(1.0)),
    }
}

#[test]
fn sigma_of_cosine_lives_on_first_shell_along_x() {
    let lat = lattice();
    let o = SpectralObservable::multiplication_cosine(lat.mode_list(), [1.0, 0.0, 0.0]).unwrap();
    let s = sigma_f(&o, &|x| x, 0.0, &lat).unwrap();
    for i in lat.indices() {
        let p = lat.point(i);
        if p == [1, 0, 0] || p == [-1, 0, 0] {
            assert!((s[i] - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        } else {
            assert!(s[i].norm() < 1e-12, "{p:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sigma_structure(kind in 0u8..4, a in -1.5..1.5f64, a0 in 0.0..0.5f64) {
        let lat = lattice();
        let o = cosine_observable(&lat);
        let f = test_function(kind, a);
        let s = sigma_f(&o, &f, a0, &lat).unwrap();
        let v = applied_to_condensate(&o, &f);
        let mus = mu_on_lattice(a0, &lat).unwrap();
        // Re-evaluate the defining formula at -p.
        for i in lat.indices() {
            let j = lat.partner(i);
            let vp = v[o.mode_index(lat.point(i)).unwrap()];
            let vm = v[o.mode_index(lat.point(j)).unwrap()];
            let at_minus = vm * mus[j].cosh() + vp * mus[j].sinh();
            prop_assert!((s[j] - at_minus).norm() <= 1e-12);
        }
        // Norm bound from cosh/sinh weights.
        let mu_inf = mus.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let qv: f64 = v.iter().enumerate().filter(|(k, _)| *k != o.zero_index()).map(|(_, z)| z.norm_sqr()).sum();
        prop_assert!(l2_norm_sq(&s).sqrt() <= (mu_inf.cosh() + mu_inf.sinh()) * qv.sqrt() + 1e-12);
    }

    #[test]
    fn covariance_is_the_psd_gram_matrix(
        kinds in prop::collection::vec((0u8..4, -1.5..1.5f64), 1..5),
        a0 in 0.0..0.5f64,
    ) {
        let lat = lattice();
        let o = cosine_observable(&lat);
        let sigmas: Vec<_> = kinds.iter().map(|&(k, a)| sigma_f(&o, &test_function(k, a), a0, &lat).unwrap()).collect();
        let cov = covariance_matrix(&sigmas).unwrap();
        let m = sigmas.len();
        for i in 0..m {
            for j in 0..m {
                let mut g = Complex64::new(0.0, 0.0);
                for p in 0..lat.len() {
                    g += sigmas[i][p].conj() * sigmas[j][p];
                }
                prop_assert!((cov.sigma[(i, j)] - g.re).abs() <= 1e-12);
                prop_assert!((cov.imaginary[(i, j)] - g.im).abs() <= 1e-12);
                prop_assert!(cov.sigma[(i, j)] == cov.sigma[(j, i)]);
            }
        }
        prop_assert!(cov.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn mu_increases_toward_zero(a0 in 1e-4..2.0f64) {
        let lat = MomentumLattice::new(2.0 * PI * 3.0).unwrap();
        let mut shells: Vec<(i64, f64)> = lat.indices().map(|i| (lat.norm_sq_int(i), mu(a0, lat.norm_sq(i)).unwrap())).collect();
        shells.sort_by_key(|s| s.0);
        shells.dedup_by_key(|s| s.0);
        prop_assert!(shells.windows(2).all(|w| w[0].1 < w[1].1 && w[1].1 < 0.0));
    }
}

#[test]
fn complex_coefficients_break_conjugate_symmetry() {
    // i/2 (e^{2πi x} - e^{-2πi x}) = -sin(2πx): Hermitian, with purely
    // imaginary plane-wave couplings to the zero mode.
    let lat = MomentumLattice::from_points(vec![[1, 0, 0], [-1, 0, 0]]).unwrap();
    let modes = lat.mode_list();
    let mut m = CMatrix::zeros(3, 3);
    m[(1, 0)] = Complex64::new(0.0, 0.5);
    m[(0, 1)] = Complex64::new(0.0, -0.5);
    m[(2, 0)] = Complex64::new(0.0, -0.5);
    m[(0, 2)] = Complex64::new(0.0, 0.5);
    let o = SpectralObservable::new(modes, m).unwrap();
    let a0 = 2.0;
    let s = sigma_f(&o, &|x| x, a0, &lat).unwrap();
    let v = applied_to_condensate(&o, &|x| x);
    let m1 = mu(a0, lat.norm_sq(0)).unwrap();
    // Verbatim formula: v(-p) = -v(p), so the sinh term subtracts; with a
    // conjugate on v(-p) it would add instead.
    let verbatim = v[1] * m1.cosh() + v[2] * m1.sinh();
    let conjugated = v[1] * m1.cosh() + v[2].conj() * m1.sinh();
    assert!((s[0] - verbatim).norm() < 1e-14);
    assert!((verbatim - conjugated).norm() > 0.1);
    let cov = covariance_matrix(&[s]).unwrap();
    assert!(cov.sigma[(0, 0)] >= 0.0 && cov.imaginary[(0, 0)] == 0.0);
}

fn dispersion_norm(cutoff_shells: f64, n: usize) -> (f64, f64) {
    let v = RadialPotential::soft_sphere(2.0, 1.0).unwrap();
    let neu = solve_neumann(&v, n, 0.25, 64).unwrap();
    let lat = MomentumLattice::new(2.0 * PI * cutoff_shells).unwrap();
    let eta = eta_coefficients(&neu, &lat, n, EtaConvention::AsWritten);
    let eta0 = -neu.w_hat(0.0) / (n * n) as f64;
    let w = convolution(&v, &eta, eta0, &lat, n).unwrap();
    let d = dressed_dispersion(&eta, &w, &lat).unwrap();
    for i in lat.indices() {
        assert!(((2.0 * d.tau[i]).tanh() + d.g[i] / d.f[i]).abs() <= 1e-12);
        assert!((d.tau[i] - d.tau[lat.partner(i)]).abs() <= 1e-14);
        assert!(d.f[i] > d.g[i].abs());
    }
    (d.tau_l2, d.tau_linf)
}

#[test]
fn tau_norm_converges_under_cutoff_doubling() {
    let n = 16;
    let (t1, _) = dispersion_norm(1.0, n);
    let (t2, _) = dispersion_norm(2.0, n);
    let (t4, linf) = dispersion_norm(4.0, n);
    let (early, late) = ((t2 - t1).abs(), (t4 - t2).abs());
    assert!(late < early, "‖τ‖ = {t1}, {t2}, {t4}");
    assert!(linf.is_finite() && linf > 0.0);
}

#[test]
fn one_function_gives_scalar_variance() {
    let lat = lattice();
    let o = cosine_observable(&lat);
    let s = sigma_f(&o, &|x| x * x, 0.2, &lat).unwrap();
    let cov = covariance_matrix(std::slice::from_ref(&s)).unwrap();
    assert!((cov.sigma[(0, 0)] - l2_norm_sq(&s)).abs() < 1e-15);
    assert!(SpectralObservable::new(vec![ZERO_MODE], CMatrix::identity(1, 1)).is_ok());
}
