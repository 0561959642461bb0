//! Cross-module checks through the public API.

use satake_core::family::{average_coefficient, generate_family, main_term_spin};
use satake_core::hecke::{dirichlet_coeff, std_euler_factor};
use satake_core::kernels::n_level_prediction;
use satake_core::measures::{integrate, sample};
use satake_core::rmt::{ensemble_average, ensemble_prediction};
use satake_core::{
    EnsembleSpec, EpsilonRule, FamilySpec, Group, LKind, MeasureSpec, PredictionConfig, SpinSatake, SymmetryType,
    TestFunction,
};

#[test]
fn sampled_points_build_valid_euler_factors() {
    let spec = MeasureSpec::mu_p(7).unwrap();
    for pt in sample(&spec, 3, 200).unwrap() {
        let s = SpinSatake::from_point(pt);
        assert!((s.a() - pt.a()).abs() < 1e-12 && (s.b() - pt.b()).abs() < 1e-12);
        assert_eq!(std_euler_factor(s).degree(), 5);
    }
}

#[test]
fn family_averages_track_quadrature_moments() {
    let spec = FamilySpec::new(&[3], 20_000, 17, EpsilonRule::LevelOneParity(10)).unwrap();
    let family = generate_family(&spec).unwrap();
    let mu = MeasureSpec::mu_p(3).unwrap();
    for e in 1..=4u32 {
        let quad = integrate(&mu, |x, y| {
            let s = SpinSatake::from_point(satake_core::SatakePoint::new(x, y).unwrap());
            dirichlet_coeff(s, e as usize, LKind::Spin)
        })
        .unwrap()
        .value;
        let m = 3u64.pow(e);
        assert!((quad - main_term_spin(m)).abs() < 1e-9);
        let avg = average_coefficient(&family, m, LKind::Spin).unwrap();
        assert!((avg.estimate - quad).abs() < 4.0 * avg.stderr, "m={m}");
    }
}

#[test]
fn ensemble_predictions_follow_the_forced_zero() {
    let phi = TestFunction::fejer(0.9).unwrap();
    let cfg = PredictionConfig::default();
    let sp = n_level_prediction(SymmetryType::Sp, std::slice::from_ref(&phi), &cfg).unwrap().value;
    let (without, _) = ensemble_prediction(Group::SOodd, std::slice::from_ref(&phi), false, &cfg).unwrap();
    assert_eq!(without, sp);
    let spec = EnsembleSpec::new(Group::SOodd, 8, 2000, 4).unwrap();
    let with = ensemble_average(&spec, std::slice::from_ref(&phi), true, &cfg).unwrap();
    let bare = ensemble_average(&spec, std::slice::from_ref(&phi), false, &cfg).unwrap();
    // The forced zero adds the periodized phi(0) on the circle of length 2N.
    let zero = phi.eval_periodic(0.0, 16.0);
    assert!((zero - 0.9).abs() < 0.01);
    assert!((with.mc_mean - bare.mc_mean - zero).abs() < 1e-12);
}
