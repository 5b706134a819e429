use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use wtoda_core::algebra::{build_root_system, DualVector, SpectralParam, Variant};
use wtoda_core::exec::Execution;
use wtoda_core::groups::{beuzart_plessis_probe, c_function_quadrature, growth_lemma_sample, sample_group_element, CharacterData};
use wtoda_core::plancherel::{c_function, mu_closed_form_type_a, PlancherelDensity};
use wtoda_core::quadrature::{QuadratureSpec, Rule};
use wtoda_core::toda::{
    conjugation_identity_check, d1_commutator, radial_casimir_check, BandLimited, GridFunction, TodaOperator,
};
use wtoda_core::transform::{
    ball_points, budget_ladder, fit_calibration, is_monotone_decreasing, parseval_check, rank2_ladder, round_trip,
    theoretical_calibration, Gallery, TestFunction, TransformSpec,
};
use wtoda_core::whittaker::{connection_ratio, default_order, EvaluatorFactory};
use wtoda_core::Complex64;

use crate::config::{RunConfig, Suite, DEFAULT_TRANSFORM_XI};
use crate::{CliError, CliResult};

pub const LEMMA_SLACK: f64 = 1e-10;
pub const GK_TOL_RANK1: f64 = 1e-6;
pub const GK_TOL_RANK2: f64 = 1e-4;
pub const DENSITY_TOL: f64 = 1e-10;
pub const EIGEN_TOL_RANK1: f64 = 1e-6;
pub const EIGEN_TOL_RANK2: f64 = 1e-4;
pub const CONJUGATION_TOL: f64 = 1e-6;
pub const CASIMIR_TOL: f64 = 1e-8;
pub const COMMUTATION_TOL: f64 = 1e-8;
pub const CONNECTION_TOL: f64 = 1e-4;
pub const ROUNDTRIP_TOL: f64 = 1e-4;
pub const CALIBRATION_TRANSFER_TOL: f64 = 1e-3;
pub const PARSEVAL_TOL: f64 = 1e-4;
pub const PROBE_MIN_RATE: f64 = 2.0;
pub const PROBE_START_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub tolerance: f64,
    pub metrics: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub group: String,
    pub seed: Option<u64>,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

fn report(name: &str, passed: bool, tolerance: f64, metrics: Vec<(&str, Value)>) -> SuiteReport {
    SuiteReport {
        name: name.into(),
        passed,
        skipped: None,
        tolerance,
        metrics: metrics.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

fn skipped(name: &str, reason: &str) -> SuiteReport {
    SuiteReport { name: name.into(), passed: true, skipped: Some(reason.into()), tolerance: 0.0, metrics: BTreeMap::new() }
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::MIN, f64::max);
    let min = xs.iter().cloned().fold(f64::MAX, f64::min);
    (max - min) / min.abs()
}

/// Real-valued metric for JSON; non-finite values become strings.
fn val(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// Runs the selected suites in a fixed order. Randomized suites draw from
/// ChaCha8 streams derived from `seed`.
pub fn run(cfg: &RunConfig, seed: Option<u64>) -> CliResult<VerifyReport> {
    let suites = cfg.selected_suites();
    if seed.is_none() && suites.iter().any(|s| s.randomized()) {
        return Err(CliError::Config("a seed (config `seed` or --seed) is required for randomized suites".into()));
    }
    let seed_for = |offset: u64| ChaCha8Rng::seed_from_u64(seed.unwrap_or(0).wrapping_add(offset));
    let mut reports = Vec::new();
    for suite in suites {
        let r = match suite {
            Suite::Inequalities => inequalities(cfg, &mut seed_for(1))?,
            Suite::GkRatio => gk_ratio(cfg)?,
            Suite::Density => density(cfg)?,
            Suite::Eigen => eigen(cfg)?,
            Suite::Identities => identities(cfg, &mut seed_for(2))?,
            Suite::Commutation => commutation(cfg, &mut seed_for(3))?,
            Suite::Connection => connection(cfg)?,
            Suite::Roundtrip => roundtrip(cfg)?,
            Suite::Parseval => parseval(cfg)?,
            Suite::Probe => probe(cfg)?,
        };
        log::info!("suite {}: {}", r.name, if r.passed { "pass" } else { "FAIL" });
        reports.push(r);
    }
    Ok(VerifyReport {
        group: format!("{:?}", cfg.group),
        seed,
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
        runtime_s: None,
    })
}

fn sl(n: usize) -> CliResult<wtoda_core::algebra::RootSystem> {
    Ok(build_root_system(n, Variant::SL)?)
}

/// a(xg)^{−ρ} ≤ |g|^{1/2} a(x)^{−ρ} on seeded random pairs in SL(n).
pub fn inequalities(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CliResult<SuiteReport> {
    let n = cfg.group.n();
    let rs = sl(n)?;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut first = Vec::new();
    for k in 0..cfg.verify.lemma_samples {
        let x = sample_group_element(n, Variant::SL, rng);
        let g = sample_group_element(n, Variant::SL, rng);
        if k == 0 {
            first = x.entries.iter().copied().collect::<Vec<f64>>();
        }
        let s = growth_lemma_sample(&rs, &x, &g)?;
        worst = worst.max(s.log_lhs - s.log_rhs);
        if !s.holds(LEMMA_SLACK) {
            violations += 1;
        }
    }
    Ok(report(
        "inequalities",
        violations == 0,
        LEMMA_SLACK,
        vec![
            ("samples", json!(cfg.verify.lemma_samples)),
            ("violations", json!(violations)),
            ("max_log_excess", val(worst)),
            ("first_sample", json!(first)),
        ],
    ))
}

pub fn gk_nus(n: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        [0.8, 1.0, 1.7, 2.3, 3.1].iter().map(|&x| vec![-x, x]).collect()
    } else {
        vec![
            vec![-2.0, 0.0, 2.0],
            vec![-1.5, 0.2, 1.3],
            vec![-1.2, -0.3, 1.5],
            vec![-2.5, 0.3, 2.2],
            vec![-1.9, -0.1, 2.0],
        ]
    }
}

pub fn gk_quadrature(n: usize) -> QuadratureSpec {
    QuadratureSpec {
        rule: Rule::TanhSinh,
        radius: 1e8,
        nodes_per_dim: if n == 2 { 200 } else { 60 },
        tol: 1e-8,
        execution: Execution::default(),
    }
}

/// Brute-force c(ν) over N divided by the Gindikin–Karpelevič product.
pub fn gk_ratio(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let n = cfg.group.n();
    let rs = sl(n)?;
    let quad = cfg.quadrature.clone().unwrap_or_else(|| gk_quadrature(n));
    let mut ratios = Vec::new();
    for nu in gk_nus(n) {
        let p = SpectralParam::real(DualVector(nu));
        let q = c_function_quadrature(&rs, &p, &quad)?;
        ratios.push((q.value / c_function(&rs, &p)?).re);
    }
    let tol = if n == 2 { GK_TOL_RANK1 } else { GK_TOL_RANK2 };
    let s = spread(&ratios);
    Ok(report("gk_ratio", s <= tol, tol, vec![("ratios", json!(ratios)), ("relative_spread", val(s))]))
}

/// μ against the closed product form (rank one: s·tanh(πs) for s ∈ [0.1, 20]).
pub fn density(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let n = cfg.group.n();
    let rs = sl(n)?;
    let pd = PlancherelDensity::new(rs.clone(), 1.0)?;
    let nus: Vec<Vec<f64>> = if n == 2 {
        (0..200).map(|k| 0.1 + 19.9 * k as f64 / 199.0).map(|s| vec![s, -s]).collect()
    } else {
        let frame = rs.frame();
        (0..200).map(|k| frame.to_ambient(&[0.1 + 0.05 * k as f64, 0.37 + 0.031 * k as f64])).collect()
    };
    let mut ratios = Vec::new();
    for nu in nus {
        let dv = DualVector(nu);
        ratios.push(pd.mu_value(&dv)? / mu_closed_form_type_a(&rs, &dv));
    }
    let s = spread(&ratios);
    Ok(report("density", s <= DENSITY_TOL, DENSITY_TOL, vec![("points", json!(ratios.len())), ("relative_spread", val(s))]))
}

fn grid_points(dim: usize, radius: f64, per_dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..per_dim).map(|k| -radius + 2.0 * radius * k as f64 / (per_dim - 1) as f64).collect();
    let mut pts = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts.iter().flat_map(|p| axis.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    pts
}

/// ‖L_cK_ν − ½‖ν‖²K_ν‖∞ / ‖K_ν‖∞ by finite differences.
pub fn eigen(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let n = cfg.group.n();
    let rs = sl(n)?;
    let factory = EvaluatorFactory::new(&rs, &cfg.couplings_or(1.0))?;
    let (nus, pts, tol): (Vec<Vec<f64>>, _, _) = if n == 2 {
        ([0.25, 0.9, 1.6, 3.3, 7.5].iter().map(|&s| vec![s, -s]).collect(), grid_points(1, 2.5, 21), EIGEN_TOL_RANK1)
    } else {
        (
            vec![vec![1.4, -0.3, -1.1], vec![0.5, 0.2, -0.7], vec![2.6, -0.4, -2.2]],
            grid_points(2, 1.2, 5),
            EIGEN_TOL_RANK2,
        )
    };
    let mut residuals = Vec::new();
    for nu in &nus {
        residuals.push(factory.build(&DualVector(nu.clone()))?.eigen_residual(&pts, 1e-3)?);
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(report(
        "eigen",
        worst <= tol,
        tol,
        vec![("nu", json!(nus)), ("residuals", json!(residuals)), ("experimental", json!(n > 2))],
    ))
}

/// Conjugation (ρ-twist of the Laplacian) and radial-Casimir identities on
/// seeded band-limited functions.
pub fn identities(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CliResult<SuiteReport> {
    let rs = cfg.group.root_system();
    let d = rs.frame().dim();
    let xi = cfg.xi_or(1.0);
    let mut conj: f64 = 0.0;
    let mut casimir: f64 = 0.0;
    for _ in 0..cfg.verify.random_functions {
        let g = BandLimited::random(rng, d, 6, 2.0);
        let f = GridFunction::centred(&vec![0.1; d], 1e-3, 11, Execution::Sequential, |t| Complex64::new(g.eval(t), 0.0))?;
        conj = conj.max(conjugation_identity_check(&rs, &f)?.max_residual);
        casimir = casimir.max(radial_casimir_check(&rs, &xi, &f, None)?.max_residual);
    }
    Ok(report(
        "identities",
        conj <= CONJUGATION_TOL && casimir <= CASIMIR_TOL,
        CASIMIR_TOL,
        vec![
            ("conjugation_max_residual", val(conj)),
            ("conjugation_tolerance", json!(CONJUGATION_TOL)),
            ("radial_casimir_max_residual", val(casimir)),
        ],
    ))
}

/// [D₁, L_c] on GL(n) with the group's n.
pub fn commutation(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CliResult<SuiteReport> {
    let n = cfg.group.n();
    let rs = build_root_system(n, Variant::GL)?;
    let op = TodaOperator::new(&rs, &cfg.couplings_or(1.0))?;
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.verify.random_functions {
        let g = BandLimited::random(rng, n, 6, 3.0);
        let f = GridFunction::centred(&vec![0.1; n], 1e-2, 13, Execution::Sequential, |t| Complex64::new(g.eval(t), 0.0))?;
        worst = worst.max(d1_commutator(&op, &f)?.max_residual);
    }
    Ok(report(
        "commutation",
        worst <= COMMUTATION_TOL,
        COMMUTATION_TOL,
        vec![("group", json!(format!("GL{n}"))), ("functions", json!(cfg.verify.random_functions)), ("max_residual", val(worst))],
    ))
}

pub fn connection_nu(n: usize) -> Vec<f64> {
    if n == 2 {
        vec![-2.6, 2.6]
    } else {
        vec![-4.93, 0.04, 4.89]
    }
}

pub const CONNECTION_POINTS: [f64; 5] = [-4.0, -3.6, -3.2, -2.8, -2.5];

/// J_{χ_h,ν}(1) / series sum against c(ν) at chamber points α_i(h) = a.
pub fn connection(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let n = cfg.group.n();
    let rs = sl(n)?;
    let nu = DualVector(connection_nu(n));
    let c = c_function(&rs, &SpectralParam::real(nu.clone()))?;
    let chi = CharacterData::new(cfg.xi_or(1.0));
    let quad = gk_quadrature(n);
    let mut ratios = Vec::new();
    for a in CONNECTION_POINTS {
        let h = rs.solve_simple_values(&vec![a; n - 1])?;
        ratios.push(connection_ratio(&rs, &chi, &nu, &h.0, &quad, default_order(n - 1))? / c);
    }
    let worst = ratios.iter().map(|r| (r - ratios[0]).norm()).fold(0.0, f64::max);
    let re: Vec<f64> = ratios.iter().map(|r| r.re).collect();
    Ok(report(
        "connection",
        worst <= CONNECTION_TOL,
        CONNECTION_TOL,
        vec![("ratio_over_c", json!(re)), ("max_deviation", val(worst)), ("simple_root_values", json!(CONNECTION_POINTS))],
    ))
}

fn transform_factory(cfg: &RunConfig) -> CliResult<Option<(wtoda_core::algebra::RootSystem, EvaluatorFactory)>> {
    if cfg.group.variant() != Variant::SL {
        return Ok(None);
    }
    let rs = cfg.group.root_system();
    let couplings = cfg.couplings_or(DEFAULT_TRANSFORM_XI);
    let f = EvaluatorFactory::new(&rs, &couplings)?;
    Ok(Some((rs, f)))
}

/// Rank one: Gaussian and bump round trips under default budgets with the
/// calibration fitted on the Gaussian. Rank two: monotone error decrease
/// along a three-rung budget ladder.
pub fn roundtrip(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let Some((rs, factory)) = transform_factory(cfg)? else {
        return Ok(skipped("roundtrip", "transform runs on SL groups"));
    };
    let dim = rs.frame().dim();
    if dim == 1 {
        let spec = cfg.transform.spec.clone().unwrap_or_else(|| TransformSpec::default_for(1));
        let pts = ball_points(1, 2.0, 41);
        let g = TestFunction::new(Gallery::Gaussian, &rs);
        let b = TestFunction::new(Gallery::Bump, &rs);
        let c_g = fit_calibration(&g, &factory, &rs, &spec, &pts)?;
        let c_b = fit_calibration(&b, &factory, &rs, &spec, &pts)?;
        let transfer = (c_b / c_g - 1.0).abs();
        let pd = PlancherelDensity::new(rs.clone(), c_g)?;
        let e_g = round_trip(&g, &factory, &pd, &spec, &pts)?.max_rel_err;
        let e_b = round_trip(&b, &factory, &pd, &spec, &pts)?.max_rel_err;
        Ok(report(
            "roundtrip",
            e_g <= ROUNDTRIP_TOL && e_b <= ROUNDTRIP_TOL && transfer <= CALIBRATION_TRANSFER_TOL,
            ROUNDTRIP_TOL,
            vec![
                ("gaussian_max_rel_err", val(e_g)),
                ("bump_max_rel_err", val(e_b)),
                ("calibration_gaussian", val(c_g)),
                ("calibration_bump", val(c_b)),
                ("calibration_transfer", val(transfer)),
                ("calibration_theoretical", val(theoretical_calibration(&rs))),
            ],
        ))
    } else {
        let pd = PlancherelDensity::new(rs.clone(), theoretical_calibration(&rs))?;
        let g = TestFunction::new(Gallery::Gaussian, &rs);
        let steps = budget_ladder(&g, &factory, &pd, &rank2_ladder(), &ball_points(2, 2.0, 9))?;
        Ok(report(
            "roundtrip",
            is_monotone_decreasing(&steps),
            0.0,
            vec![("ladder", json!(steps)), ("experimental", json!(true))],
        ))
    }
}

/// ∫u w̄ dh = ∫𝒦u 𝒦̄w μ dν for two gallery pairs (rank one).
pub fn parseval(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let Some((rs, factory)) = transform_factory(cfg)? else {
        return Ok(skipped("parseval", "transform runs on SL groups"));
    };
    if rs.frame().dim() != 1 {
        return Ok(skipped("parseval", "the Parseval suite covers rank one"));
    }
    let pd = PlancherelDensity::new(rs.clone(), cfg.transform.calibration.unwrap_or_else(|| theoretical_calibration(&rs)))?;
    let spec = cfg.transform.spec.clone().unwrap_or_else(|| TransformSpec::default_for(1));
    let g = TestFunction::new(Gallery::Gaussian, &rs);
    let sg = TestFunction::new(Gallery::ShiftedGaussian, &rs);
    let gp = TestFunction::new(Gallery::GaussianPolynomial, &rs);
    let a = parseval_check(&g, &sg, &factory, &pd, &spec)?.relative_gap;
    let b = parseval_check(&sg, &gp, &factory, &pd, &spec)?.relative_gap;
    Ok(report(
        "parseval",
        a <= PARSEVAL_TOL && b <= PARSEVAL_TOL,
        PARSEVAL_TOL,
        vec![("gap_gaussian_shifted", val(a)), ("gap_shifted_polynomial", val(b))],
    ))
}

/// Ratios of successive Cauchy differences under radius doubling.
pub fn probe_rates(diffs: &[f64]) -> Vec<f64> {
    diffs.windows(2).map(|w| if w[1] == 0.0 { f64::INFINITY } else { w[0] / w[1] }).collect()
}

/// Truncated integrals of a(n)^{−(1−ε)ρ} over ker χ ∩ N.
pub fn probe(cfg: &RunConfig) -> CliResult<SuiteReport> {
    let n = cfg.group.n();
    let rs = sl(n)?;
    let chi = CharacterData::new(cfg.xi_or(1.0));
    let rows = beuzart_plessis_probe(&rs, &chi, cfg.verify.probe_epsilon, &cfg.verify.probe_radii)?;
    let diffs: Vec<f64> = rows.iter().skip(1).filter(|r| r.radius > PROBE_START_RADIUS).map(|r| r.cauchy_diff.abs()).collect();
    let rates = probe_rates(&diffs);
    let passed = rates.iter().all(|&r| r >= PROBE_MIN_RATE);
    Ok(report(
        "probe",
        passed,
        PROBE_MIN_RATE,
        vec![
            ("epsilon", json!(cfg.verify.probe_epsilon)),
            ("rows", json!(rows)),
            ("rates", json!(rates.iter().map(|r| val(*r)).collect::<Vec<_>>())),
        ],
    ))
}
