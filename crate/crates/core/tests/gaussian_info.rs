use approx::assert_abs_diff_eq;
use nalgebra::Matrix2;
use proptest::prelude::*;
use sbm_core::gaussian::*;

/// Two-mode squeezed vacuum with squeezing `r`, vacuum variance 1/2.
fn squeezed(r: f64) -> TwoModeCovariance {
    let c = 0.5 * (2.0 * r).cosh();
    let s = 0.5 * (2.0 * r).sinh();
    TwoModeCovariance::new(c, c, c, c, s, -s).unwrap()
}

/// Block covariance of the thermal state `diag(ν₁, ν₂)` transformed by the
/// symplectic map `M ⊕ M^{-T}`.
fn transformed_thermal(nu: (f64, f64), m: Matrix2<f64>) -> TwoModeCovariance {
    let x0 = Matrix2::new(nu.0, 0.0, 0.0, nu.1);
    let minv = m.try_inverse().unwrap();
    let x = m * x0 * m.transpose();
    let p = minv.transpose() * x0 * minv;
    TwoModeCovariance::new(x[(0, 0)], p[(0, 0)], x[(1, 1)], p[(1, 1)], x[(0, 1)], p[(0, 1)]).unwrap()
}

fn rot(t: f64) -> Matrix2<f64> {
    Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

/// Invertible 2×2 map from a rotation–scaling–rotation decomposition.
fn mixing(t1: f64, s1: f64, s2: f64, t2: f64) -> Matrix2<f64> {
    rot(t1) * Matrix2::new(s1, 0.0, 0.0, s2) * rot(t2)
}

/// Squeezes mode `k` locally: `x → s x`, `p → p / s`.
fn squeeze_first_mode(cov: &TwoModeCovariance, s: f64) -> TwoModeCovariance {
    TwoModeCovariance::new(cov.dx_k * s * s, cov.dp_k / (s * s), cov.dx_l, cov.dp_l, cov.cor_x * s, cov.cor_p / s).unwrap()
}

#[test]
fn entropy_function_closed_forms() {
    assert_eq!(entropy_f(0.5).unwrap(), 0.0);
    assert_abs_diff_eq!(entropy_f(1.5).unwrap(), 1.386294, epsilon = 1e-6);
    assert_abs_diff_eq!(entropy_f(1.0).unwrap(), 0.954771, epsilon = 1e-6);
    assert_eq!(entropy_f(0.5 - 1e-9).unwrap(), 0.0);
    assert!(matches!(entropy_f(0.49), Err(sbm_core::SbmError::Unphysical(_))));
}

#[test]
fn vacuum_pair_has_no_correlations() {
    let cov = TwoModeCovariance::product(0.5, 0.5, 0.5, 0.5).unwrap();
    assert_eq!(von_neumann_entropy(&cov).unwrap(), 0.0);
    assert_eq!(linear_entropy(&cov).unwrap(), 0.0);
    assert_eq!(mutual_information(&cov).unwrap(), 0.0);
    assert_eq!(log_negativity(&cov), 0.0);
    assert_eq!(gaussian_discord(&cov).unwrap().discord, 0.0);
}

#[test]
fn squeezed_vacuum_is_pure_and_entangled() {
    let r = 0.5;
    let cov = squeezed(r);
    let sp = cov.spectrum();
    assert_abs_diff_eq!(sp.n_minus, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(sp.n_plus, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(sp.nu_tilde_minus, 0.5 * (-2.0 * r).exp(), epsilon = 1e-12);
    assert_abs_diff_eq!(von_neumann_entropy(&cov).unwrap(), 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(linear_entropy(&cov).unwrap(), 0.0, epsilon = 1e-10);
    assert_abs_diff_eq!(log_negativity(&cov), 2.0 * r / 2f64.ln(), epsilon = 1e-10);
    assert_abs_diff_eq!(log_negativity(&cov), 1.4427, epsilon = 1e-4);

    let fa = entropy_f(cov.det_a().sqrt()).unwrap();
    assert_abs_diff_eq!(mutual_information(&cov).unwrap(), 2.0 * fa, epsilon = 1e-10);
    // a pure state sits on Γ = 0 where det ε comes out of the square root of a
    // cancelling sum, so e − 1/2 carries an O(√ε_mach) error that f amplifies
    let d = gaussian_discord(&cov).unwrap();
    assert_abs_diff_eq!(d.discord, fa, epsilon = 1e-6);
    assert_abs_diff_eq!(d.classical, fa, epsilon = 1e-6);
}

#[test]
fn thermal_times_vacuum() {
    let cov = TwoModeCovariance::product(1.5, 1.5, 0.5, 0.5).unwrap();
    assert_abs_diff_eq!(von_neumann_entropy(&cov).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(von_neumann_entropy(&cov).unwrap(), 1.386294, epsilon = 1e-6);
    assert_abs_diff_eq!(linear_entropy(&cov).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(mutual_information(&cov).unwrap(), 0.0, epsilon = 1e-12);
    assert_eq!(log_negativity(&cov), 0.0);
    assert_abs_diff_eq!(gaussian_discord(&cov).unwrap().discord, 0.0, epsilon = 1e-12);
}

#[test]
fn separable_thermal_product_has_no_negativity() {
    let cov = TwoModeCovariance::product(2.0, 2.0, 0.7, 0.7).unwrap();
    assert_eq!(log_negativity(&cov), 0.0);
}

#[test]
fn unphysical_inputs_are_rejected() {
    let cov = TwoModeCovariance::product(0.3, 0.5, 0.5, 0.5).unwrap();
    assert!(!cov.is_physical());
    assert!(von_neumann_entropy(&cov).is_err());
    assert!(linear_entropy(&cov).is_err());
    assert!(TwoModeCovariance::new(f64::NAN, 1.0, 1.0, 1.0, 0.0, 0.0).is_err());
}

#[test]
fn symplectic_spectrum_of_transformed_thermal_state() {
    let cov = transformed_thermal((0.8, 2.3), mixing(0.4, 1.7, 0.6, -1.1));
    let sp = cov.spectrum();
    assert_abs_diff_eq!(sp.n_minus, 0.8, epsilon = 1e-10);
    assert_abs_diff_eq!(sp.n_plus, 2.3, epsilon = 1e-10);
    assert!(sp.delta_sigma.powi(2) - 4.0 * cov.det_sigma() >= -1e-12);
}

/// Γ along a straight path between two parameter sets.
fn path_cov(a: &[f64; 6], b: &[f64; 6], t: f64) -> TwoModeCovariance {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
    transformed_thermal((p[0], p[1]), mixing(p[2], p[3], p[4], p[5]))
}

fn gamma(cov: &TwoModeCovariance) -> f64 {
    GaussianDiscordParams::from_covariance(cov).unwrap().branch
}

#[test]
fn discord_branches_agree_on_boundary() {
    let mut rng_state = 12345u64;
    let mut next = move || {
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        (rng_state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut draw = || -> [f64; 6] {
        [
            0.5 + 2.0 * next(),
            0.5 + 2.0 * next(),
            std::f64::consts::PI * next(),
            0.3 + 2.5 * next(),
            0.3 + 2.5 * next(),
            std::f64::consts::PI * next(),
        ]
    };
    let mut crossings = 0;
    for _ in 0..400 {
        let (a, b) = (draw(), draw());
        let (ga, gb) = (gamma(&path_cov(&a, &b, 0.0)), gamma(&path_cov(&a, &b, 1.0)));
        if ga * gb >= 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gamma(&path_cov(&a, &b, mid)) * ga > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = GaussianDiscordParams::from_covariance(&path_cov(&a, &b, 0.5 * (lo + hi))).unwrap();
        if (p.beta - 1.0).abs() < 1e-6 {
            continue;
        }
        let first = GaussianDiscordParams::first_branch(p.alpha, p.beta, p.gamma, p.delta);
        let second = GaussianDiscordParams::second_branch(p.alpha, p.beta, p.gamma, p.delta);
        assert!(
            (first - second).abs() < 1e-6,
            "branches differ at Γ={}: {first} vs {second}",
            p.branch
        );
        crossings += 1;
    }
    assert!(crossings >= 20, "only {crossings} boundary crossings sampled");
}

fn physical_cov() -> impl Strategy<Value = TwoModeCovariance> {
    (0.5f64..3.0, 0.5f64..3.0, 0.0f64..std::f64::consts::PI, 0.2f64..3.0, 0.2f64..3.0, 0.0f64..std::f64::consts::PI)
        .prop_map(|(n1, n2, t1, s1, s2, t2)| transformed_thermal((n1, n2), mixing(t1, s1, s2, t2)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_physical_covariances_obey_bounds(cov in physical_cov()) {
        let sp = cov.spectrum();
        prop_assert!(sp.n_minus >= 0.5 - 1e-8);
        prop_assert!(sp.n_plus >= sp.n_minus);
        prop_assert!(sp.delta_sigma.powi(2) - 4.0 * cov.det_sigma() >= -1e-12 * sp.delta_sigma.powi(2));
        let m = GaussianMeasures::evaluate(&cov).unwrap();
        prop_assert!(m.physical);
        prop_assert!(m.mutual_information >= -1e-10);
        prop_assert!(m.discord >= -1e-10, "D = {}", m.discord);
        prop_assert!(m.discord <= m.mutual_information + 1e-10, "D = {} > I = {}", m.discord, m.mutual_information);
        prop_assert!(m.classical >= -1e-10);
        prop_assert!((0.0..1.0).contains(&m.linear_entropy) || m.linear_entropy.abs() < 1e-12);
        let e = GaussianDiscordParams::from_covariance(&cov).unwrap().e;
        prop_assert!(e >= 0.5 - 1e-8);
    }

    #[test]
    fn measures_invariant_under_local_squeezing(cov in physical_cov(), s in 0.3f64..3.0) {
        let a = GaussianMeasures::evaluate(&cov).unwrap();
        let b = GaussianMeasures::evaluate(&squeeze_first_mode(&cov, s)).unwrap();
        let scale = 1.0 + a.mutual_information.abs() + a.entropy.abs();
        prop_assert!((a.entropy - b.entropy).abs() < 1e-10 * scale);
        prop_assert!((a.linear_entropy - b.linear_entropy).abs() < 1e-10 * scale);
        prop_assert!((a.mutual_information - b.mutual_information).abs() < 1e-10 * scale);
        prop_assert!((a.log_negativity - b.log_negativity).abs() < 1e-10 * scale);
        prop_assert!((a.discord - b.discord).abs() < 1e-10 * scale);
    }

    #[test]
    fn swap_preserves_symmetric_measures(cov in physical_cov()) {
        let a = GaussianMeasures::evaluate(&cov).unwrap();
        let b = GaussianMeasures::evaluate(&cov.swapped()).unwrap();
        prop_assert!((a.entropy - b.entropy).abs() < 1e-10);
        prop_assert!((a.mutual_information - b.mutual_information).abs() < 1e-10);
        prop_assert!((a.log_negativity - b.log_negativity).abs() < 1e-10);
    }
}
