use wtoda_core::algebra::{build_root_system, Variant};
use wtoda_core::plancherel::PlancherelDensity;
use wtoda_core::transform::{
    ball_points, fit_calibration, parseval_check, round_trip, theoretical_calibration, Gallery, TestFunction, TransformSpec,
};
use wtoda_core::whittaker::EvaluatorFactory;

#[test]
fn rank_one_round_trip_under_default_budgets() {
    let rs = build_root_system(2, Variant::SL).unwrap();
    let factory = EvaluatorFactory::new(&rs, &[0.01]).unwrap();
    let spec = TransformSpec::default_for(1);
    let pts = ball_points(1, 2.0, 41);
    let gaussian = TestFunction::new(Gallery::Gaussian, &rs);
    let bump = TestFunction::new(Gallery::Bump, &rs);
    let c_gauss = fit_calibration(&gaussian, &factory, &rs, &spec, &pts).unwrap();
    let c_bump = fit_calibration(&bump, &factory, &rs, &spec, &pts).unwrap();
    assert!((c_bump / c_gauss - 1.0).abs() <= 1e-3, "{c_gauss} {c_bump}");
    assert!((c_gauss / theoretical_calibration(&rs) - 1.0).abs() <= 1e-4);
    let pd = PlancherelDensity::new(rs.clone(), c_gauss).unwrap();
    for u in [&gaussian, &bump] {
        let rt = round_trip(u, &factory, &pd, &spec, &pts).unwrap();
        assert!(rt.max_rel_err <= 1e-4, "{:?}: {:e}", u.kind, rt.max_rel_err);
    }
}

#[test]
fn rank_one_parseval_for_two_pairs() {
    let rs = build_root_system(2, Variant::SL).unwrap();
    let factory = EvaluatorFactory::new(&rs, &[0.01]).unwrap();
    let pd = PlancherelDensity::new(rs.clone(), theoretical_calibration(&rs)).unwrap();
    let spec = TransformSpec::default_for(1);
    let g = TestFunction::new(Gallery::Gaussian, &rs);
    let sg = TestFunction::new(Gallery::ShiftedGaussian, &rs);
    let gp = TestFunction::new(Gallery::GaussianPolynomial, &rs);
    for (u, w) in [(&g, &sg), (&sg, &gp)] {
        let p = parseval_check(u, w, &factory, &pd, &spec).unwrap();
        assert!(p.relative_gap <= 1e-4, "{p:?}");
    }
}
