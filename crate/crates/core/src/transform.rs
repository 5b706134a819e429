//! The Whittaker transform
//!
//!   𝒦(u)(ν) = ∫_𝔞 u(h) K̄_ν(h) dh,   u(h) = ∫_{𝔞*} K_ν(h) 𝒦(u)(ν) μ(ν) dν,
//!
//! and Parseval, by truncated tensor quadrature in orthonormal coordinates
//! of 𝔞 and 𝔞*. Each integral is also evaluated with half the nodes; the
//! difference is the reported error estimate.
//!
//! The ν-box is the full symmetric box, shifted by `nu_offset` on every axis
//! so that no node lands on a Weyl wall.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{CartanFrame, DualVector, RootSystem};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::plancherel::PlancherelDensity;
use crate::quadrature::{gauss_legendre_on, pairwise_sum, pairwise_sum_complex, tanh_sinh, tanh_sinh_rule, Rule};
use crate::whittaker::{EvaluatorFactory, Method, WhittakerEvaluator};

/// Rank-one transform constant for the full-line ν integral: 1/(4π).
pub const A1_CALIBRATION: f64 = 1.0 / (4.0 * std::f64::consts::PI);

/// (2π)^{−dim 𝔞}/|W|, the constant in front of C/|c(iν)|² when ν runs over
/// the whole of 𝔞* (every Weyl chamber).
pub fn theoretical_calibration(rs: &RootSystem) -> f64 {
    let d = rs.frame().dim() as i32;
    let order: usize = (1..=rs.n).product();
    (2.0 * std::f64::consts::PI).powi(-d) / order as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub h_radius: f64,
    pub h_nodes_per_dim: usize,
    pub nu_radius: f64,
    pub nu_nodes_per_dim: usize,
    pub rule: Rule,
    pub tol: f64,
    #[serde(default = "default_offset")]
    pub nu_offset: f64,
    #[serde(skip, default)]
    pub execution: Execution,
}

fn default_offset() -> f64 {
    1e-3
}

impl TransformSpec {
    /// Default budgets: rank one h ∈ [−6,6] with 256 nodes and ν ∈ [−20,20]
    /// with 320 nodes; rank two h ∈ [−5,5]² with 96² and ν radius 8 with 64².
    ///
    /// Reconstruction at h needs spectral parameters up to about
    /// √q e^{α(h)} (K_{is}(z) only oscillates for z < s), and compactly
    /// supported u have slowly decaying spectra, so the ν-box must be wider
    /// than the h-box suggests.
    pub fn default_for(dim: usize) -> Self {
        let (hr, hn, nr, nn) = if dim <= 1 { (6.0, 256, 20.0, 320) } else { (5.0, 96, 8.0, 64) };
        TransformSpec {
            h_radius: hr,
            h_nodes_per_dim: hn,
            nu_radius: nr,
            nu_nodes_per_dim: nn,
            rule: Rule::GaussLegendre,
            tol: 1e-6,
            nu_offset: default_offset(),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_radius > 0.0 && self.nu_radius > 0.0) || !(self.h_radius.is_finite() && self.nu_radius.is_finite()) {
            return Err(Error::invalid("transform radii must be positive and finite"));
        }
        if self.h_nodes_per_dim < 8 || self.nu_nodes_per_dim < 8 {
            return Err(Error::invalid("transform quadrature needs at least 8 nodes per dimension"));
        }
        if !(self.tol > 0.0) || !(self.nu_offset.abs() < self.nu_radius) {
            return Err(Error::invalid("transform tolerance must be positive and the ν offset inside the box"));
        }
        Ok(())
    }
}

/// Tensor nodes (orthonormal coordinates) and product weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorGrid {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TensorGrid {
    pub fn new(rule: Rule, dim: usize, radius: f64, nodes_per_dim: usize, shift: f64) -> Self {
        let (x, w) = match rule {
            Rule::GaussLegendre => gauss_legendre_on(nodes_per_dim, -radius, radius),
            Rule::TanhSinh => {
                let (x, w) = tanh_sinh_rule(nodes_per_dim);
                (x.iter().map(|t| radius * t).collect(), w.iter().map(|v| radius * v).collect())
            }
        };
        let mut nodes = vec![Vec::new()];
        let mut weights = vec![1.0];
        for _ in 0..dim {
            let mut nn = Vec::with_capacity(nodes.len() * x.len());
            let mut nw = Vec::with_capacity(nodes.len() * x.len());
            for (p, pw) in nodes.iter().zip(&weights) {
                for (xi, wi) in x.iter().zip(&w) {
                    let mut q = p.clone();
                    q.push(xi + shift);
                    nn.push(q);
                    nw.push(pw * wi);
                }
            }
            nodes = nn;
            weights = nw;
        }
        TensorGrid { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Members of the test gallery; all lie in 𝒯(𝔞) except `RhoExponential`,
/// which is there to fail the membership check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gallery {
    Zero,
    Gaussian,
    /// t₁·e^{−‖t‖²}, odd in t.
    GaussianPolynomial,
    ShiftedGaussian,
    /// e^{1 − 1/(1 − ‖t‖²/9)} on ‖t‖ < 3.
    Bump,
    RhoExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: Gallery,
    pub dim: usize,
    /// ρ in orthonormal coordinates.
    pub rho: Vec<f64>,
}

pub const BUMP_RADIUS: f64 = 3.0;

impl TestFunction {
    pub fn new(kind: Gallery, rs: &RootSystem) -> Self {
        let frame = rs.frame();
        TestFunction { kind, dim: frame.dim(), rho: frame.coords_of(&rs.rho.0) }
    }

    pub fn shift(&self) -> Vec<f64> {
        (0..self.dim).map(|k| 0.5 * (-0.6f64).powi(k as i32)).collect()
    }

    pub fn eval(&self, t: &[f64]) -> Complex64 {
        let r2: f64 = t.iter().map(|x| x * x).sum();
        let v = match self.kind {
            Gallery::Zero => 0.0,
            Gallery::Gaussian => (-r2).exp(),
            Gallery::GaussianPolynomial => t[0] * (-r2).exp(),
            Gallery::ShiftedGaussian => {
                let s = self.shift();
                (-t.iter().zip(&s).map(|(x, c)| (x - c) * (x - c)).sum::<f64>()).exp()
            }
            Gallery::Bump => {
                let u = r2 / (BUMP_RADIUS * BUMP_RADIUS);
                if u < 1.0 {
                    (1.0 - 1.0 / (1.0 - u)).exp()
                } else {
                    0.0
                }
            }
            Gallery::RhoExponential => self.rho.iter().zip(t).map(|(a, b)| a * b).sum::<f64>().exp(),
        };
        Complex64::new(v, 0.0)
    }
}

/// Forward transform on a ν-grid with a half-budget companion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformResult {
    pub nu: TensorGrid,
    pub values: Vec<Complex64>,
    /// |fine − half-h-budget| per node.
    pub errors: Vec<f64>,
    pub coarse_nu: TensorGrid,
    pub coarse_values: Vec<Complex64>,
    /// Nodes whose error estimate exceeds `tol`.
    pub flagged: Vec<usize>,
    /// Nodes where the evaluator refused; values there are interpolated.
    pub skipped: Vec<usize>,
    pub clamped_evaluations: usize,
    pub spec: TransformSpec,
}

struct HSamples {
    grid: TensorGrid,
    ambient: Vec<Vec<f64>>,
    u: Vec<Complex64>,
    mono: Option<Vec<Vec<f64>>>,
}

impl HSamples {
    fn new(u: &TestFunction, factory: &EvaluatorFactory, frame: &CartanFrame, grid: TensorGrid) -> Self {
        let ambient: Vec<Vec<f64>> = grid.nodes.iter().map(|t| frame.to_ambient(t)).collect();
        let vals = grid.nodes.iter().map(|t| u.eval(t)).collect();
        let mono = (factory.method == Method::SeriesClassOne).then(|| {
            let basis = crate::whittaker::SeriesBasis::new(factory.rs.rank(), factory.order);
            ambient.iter().map(|h| basis.monomials(&factory.rs.simple_roots.iter().map(|a| a.eval(h)).collect::<Vec<_>>())).collect()
        });
        HSamples { grid, ambient, u: vals, mono }
    }

    /// (∫ u K̄_ν dh, clamped count), skipping points where u vanishes.
    fn integrate(&self, ev: &WhittakerEvaluator) -> Result<(Complex64, usize)> {
        let mut terms = Vec::with_capacity(self.grid.len());
        let mut clamped = 0;
        for k in 0..self.grid.len() {
            if self.u[k].norm() == 0.0 {
                continue;
            }
            let v = match &self.mono {
                Some(m) => ev.eval_with_monomials(&self.ambient[k], &m[k]),
                None => ev.eval(&self.ambient[k])?,
            };
            clamped += usize::from(v.clamped);
            terms.push(self.grid.weights[k] * self.u[k] * v.value.conj());
        }
        Ok((pairwise_sum_complex(&terms), clamped))
    }
}

fn check_dims(u: &TestFunction, factory: &EvaluatorFactory) -> Result<CartanFrame> {
    let frame = factory.rs.frame();
    Error::check_dim(frame.dim(), u.dim)?;
    Ok(frame)
}

pub fn forward_transform(
    u: &TestFunction,
    factory: &EvaluatorFactory,
    spec: &TransformSpec,
) -> Result<TransformResult> {
    spec.validate()?;
    let frame = check_dims(u, factory)?;
    let d = frame.dim();
    let fine_h = HSamples::new(u, factory, &frame, TensorGrid::new(spec.rule, d, spec.h_radius, spec.h_nodes_per_dim, 0.0));
    let coarse_h = HSamples::new(u, factory, &frame, TensorGrid::new(spec.rule, d, spec.h_radius, spec.h_nodes_per_dim / 2, 0.0));
    let nu = TensorGrid::new(spec.rule, d, spec.nu_radius, spec.nu_nodes_per_dim, spec.nu_offset);
    let coarse_nu = TensorGrid::new(spec.rule, d, spec.nu_radius, spec.nu_nodes_per_dim / 2, spec.nu_offset);

    let run = |grid: &TensorGrid, with_coarse: bool| -> Result<Vec<Option<(Complex64, f64, usize)>>> {
        exec::map_slice(spec.execution, &grid.nodes, |t| {
            let ev = match factory.build(&DualVector(frame.to_ambient(t))) {
                Ok(ev) => ev,
                Err(Error::Refused(msg)) => {
                    log::warn!("forward transform: node {t:?} skipped ({msg})");
                    return Ok(None);
                }
                Err(e) => return Err(e),
            };
            let (v, c1) = fine_h.integrate(&ev)?;
            let (err, c2) = if with_coarse {
                let (vc, c2) = coarse_h.integrate(&ev)?;
                ((v - vc).norm(), c2)
            } else {
                (0.0, 0)
            };
            Ok(Some((v, err, c1 + c2)))
        })
        .into_iter()
        .collect()
    };
    let fine = run(&nu, true)?;
    let coarse = run(&coarse_nu, false)?;
    let (values, errors, skipped, clamped) = fill_skipped(&fine);
    let (coarse_values, _, _, clamped_c) = fill_skipped(&coarse);
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let flagged = (0..values.len()).filter(|&k| errors[k] > spec.tol * scale.max(f64::MIN_POSITIVE)).collect();
    Ok(TransformResult {
        nu,
        values,
        errors,
        coarse_nu,
        coarse_values,
        flagged,
        skipped,
        clamped_evaluations: clamped + clamped_c,
        spec: spec.clone(),
    })
}

type Filled = (Vec<Complex64>, Vec<f64>, Vec<usize>, usize);

/// Replaces refused nodes by the mean of their flat-order neighbours.
fn fill_skipped(rows: &[Option<(Complex64, f64, usize)>]) -> Filled {
    let mut values = Vec::with_capacity(rows.len());
    let mut errors = Vec::with_capacity(rows.len());
    let mut skipped = Vec::new();
    let mut clamped = 0;
    for (k, r) in rows.iter().enumerate() {
        match r {
            Some((v, e, c)) => {
                values.push(*v);
                errors.push(*e);
                clamped += c;
            }
            None => {
                skipped.push(k);
                let nb: Vec<Complex64> = [k.checked_sub(1), Some(k + 1)]
                    .iter()
                    .flatten()
                    .filter_map(|&j| rows.get(j).and_then(|x| x.map(|x| x.0)))
                    .collect();
                let v = if nb.is_empty() { Complex64::new(0.0, 0.0) } else { nb.iter().sum::<Complex64>() / nb.len() as f64 };
                values.push(v);
                errors.push(v.norm());
            }
        }
    }
    (values, errors, skipped, clamped)
}

/// Reconstructed values at points with |fine − half-ν-budget| estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
}

pub fn inverse_transform(
    coeffs: &TransformResult,
    factory: &EvaluatorFactory,
    pd: &PlancherelDensity,
    points: &[Vec<f64>],
) -> Result<Reconstruction> {
    let frame = factory.rs.frame();
    let exec = coeffs.spec.execution;
    let ambient: Vec<Vec<f64>> = points.iter().map(|t| frame.to_ambient(t)).collect();
    for t in points {
        Error::check_dim(frame.dim(), t.len())?;
    }
    let contributions = |grid: &TensorGrid, vals: &[Complex64]| -> Result<Vec<Vec<Complex64>>> {
        exec::map_range(exec, grid.len(), |k| -> Result<Vec<Complex64>> {
            if vals[k].norm() == 0.0 {
                return Ok(vec![Complex64::new(0.0, 0.0); ambient.len()]);
            }
            let nu = DualVector(frame.to_ambient(&grid.nodes[k]));
            let ev = match factory.build(&nu) {
                Ok(ev) => ev,
                Err(Error::Refused(_)) => return Ok(vec![Complex64::new(0.0, 0.0); ambient.len()]),
                Err(e) => return Err(e),
            };
            let w = grid.weights[k] * pd.mu(&nu)?.value;
            ambient.iter().map(|h| Ok(w * vals[k] * ev.eval(h)?.value)).collect()
        })
        .into_iter()
        .collect()
    };
    let fine = contributions(&coeffs.nu, &coeffs.values)?;
    let coarse = contributions(&coeffs.coarse_nu, &coeffs.coarse_values)?;
    let column = |rows: &[Vec<Complex64>], p: usize| pairwise_sum_complex(&rows.iter().map(|r| r[p]).collect::<Vec<_>>());
    let values: Vec<Complex64> = (0..points.len()).map(|p| column(&fine, p)).collect();
    let errors = (0..points.len()).map(|p| (values[p] - column(&coarse, p)).norm()).collect();
    Ok(Reconstruction { points: points.to_vec(), values, errors })
}

/// Points with ‖t‖ ≤ radius on a cube lattice with `per_dim` points per axis.
pub fn ball_points(dim: usize, radius: f64, per_dim: usize) -> Vec<Vec<f64>> {
    let step = 2.0 * radius / (per_dim - 1) as f64;
    let axis: Vec<f64> = (0..per_dim).map(|k| -radius + k as f64 * step).collect();
    let mut pts = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts.into_iter().flat_map(|p| axis.iter().map(move |x| [p.clone(), vec![*x]].concat())).collect();
    }
    pts.retain(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt() <= radius + 1e-12);
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    /// max |ũ − u| / max |u| over the evaluation points.
    pub max_rel_err: f64,
    pub calibration_constant: f64,
    pub reconstruction: Reconstruction,
    pub exact: Vec<Complex64>,
    pub forward_flagged: usize,
    pub clamped_evaluations: usize,
}

/// inverse∘forward with the density `pd` (its constant is used as given).
pub fn round_trip(
    u: &TestFunction,
    factory: &EvaluatorFactory,
    pd: &PlancherelDensity,
    spec: &TransformSpec,
    points: &[Vec<f64>],
) -> Result<RoundTrip> {
    let coeffs = forward_transform(u, factory, spec)?;
    let reconstruction = inverse_transform(&coeffs, factory, pd, points)?;
    let exact: Vec<Complex64> = points.iter().map(|t| u.eval(t)).collect();
    let scale = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = reconstruction.values.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(RoundTrip {
        max_rel_err: if scale > 0.0 { diff / scale } else { diff },
        calibration_constant: pd.calibration_constant,
        reconstruction,
        exact,
        forward_flagged: coeffs.flagged.len(),
        clamped_evaluations: coeffs.clamped_evaluations,
    })
}

/// Three rank-two budgets with growing ν resolution (radius 8; 32², 48²,
/// 64² nodes) on a fixed h grid of 40² nodes over [−5, 5]².
pub fn rank2_ladder() -> Vec<TransformSpec> {
    [32, 48, 64]
        .iter()
        .map(|&nn| TransformSpec { h_nodes_per_dim: 40, nu_nodes_per_dim: nn, ..TransformSpec::default_for(2) })
        .collect()
}

/// One rung of a budget ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub h_nodes_per_dim: usize,
    pub nu_nodes_per_dim: usize,
    pub nu_radius: f64,
    pub max_rel_err: f64,
}

/// Round-trip error at each budget, in order.
pub fn budget_ladder(
    u: &TestFunction,
    factory: &EvaluatorFactory,
    pd: &PlancherelDensity,
    specs: &[TransformSpec],
    points: &[Vec<f64>],
) -> Result<Vec<LadderStep>> {
    specs
        .iter()
        .map(|spec| {
            let rt = round_trip(u, factory, pd, spec, points)?;
            Ok(LadderStep {
                h_nodes_per_dim: spec.h_nodes_per_dim,
                nu_nodes_per_dim: spec.nu_nodes_per_dim,
                nu_radius: spec.nu_radius,
                max_rel_err: rt.max_rel_err,
            })
        })
        .collect()
}

/// Strictly decreasing errors.
pub fn is_monotone_decreasing(steps: &[LadderStep]) -> bool {
    steps.windows(2).all(|w| w[1].max_rel_err < w[0].max_rel_err)
}

/// Least-squares C with C·ũ₁ ≈ u, where ũ₁ is the reconstruction at C = 1.
pub fn fit_calibration(
    u: &TestFunction,
    factory: &EvaluatorFactory,
    rs: &RootSystem,
    spec: &TransformSpec,
    points: &[Vec<f64>],
) -> Result<f64> {
    let unit = PlancherelDensity::new(rs.clone(), 1.0)?;
    let raw = round_trip(u, factory, &unit, spec, points)?;
    let num: f64 = raw.reconstruction.values.iter().zip(&raw.exact).map(|(r, e)| (r.conj() * e).re).sum();
    let den: f64 = raw.reconstruction.values.iter().map(|r| r.norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::invalid("calibration needs a nonzero reconstruction"));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    /// |lhs − rhs| / max(|lhs|, ‖u‖‖w‖).
    pub relative_gap: f64,
}

/// ∫ u w̄ dh against ∫ 𝒦(u) 𝒦̄(w) μ dν.
pub fn parseval_check(
    u: &TestFunction,
    w: &TestFunction,
    factory: &EvaluatorFactory,
    pd: &PlancherelDensity,
    spec: &TransformSpec,
) -> Result<ParsevalReport> {
    let frame = check_dims(u, factory)?;
    check_dims(w, factory)?;
    let d = frame.dim();
    let inner = |grid: &TensorGrid| -> (Complex64, f64, f64) {
        let terms: Vec<Complex64> = grid.nodes.iter().zip(&grid.weights).map(|(t, wt)| *wt * u.eval(t) * w.eval(t).conj()).collect();
        let nu2 = |f: &TestFunction| pairwise_sum(&grid.nodes.iter().zip(&grid.weights).map(|(t, wt)| wt * f.eval(t).norm_sqr()).collect::<Vec<_>>());
        (pairwise_sum_complex(&terms), nu2(u), nu2(w))
    };
    let (lhs, uu, ww) = inner(&TensorGrid::new(spec.rule, d, spec.h_radius, spec.h_nodes_per_dim, 0.0));
    let (lhs_c, _, _) = inner(&TensorGrid::new(spec.rule, d, spec.h_radius, spec.h_nodes_per_dim / 2, 0.0));
    let ku = forward_transform(u, factory, spec)?;
    let kw = forward_transform(w, factory, spec)?;
    let spectral = |grid: &TensorGrid, a: &[Complex64], b: &[Complex64]| -> Result<Complex64> {
        let terms: Result<Vec<Complex64>> = (0..grid.len())
            .map(|k| Ok(grid.weights[k] * pd.mu(&DualVector(frame.to_ambient(&grid.nodes[k])))?.value * a[k] * b[k].conj()))
            .collect();
        Ok(pairwise_sum_complex(&terms?))
    };
    let rhs = spectral(&ku.nu, &ku.values, &kw.values)?;
    let rhs_c = spectral(&ku.coarse_nu, &ku.coarse_values, &kw.coarse_values)?;
    let scale = lhs.norm().max((uu * ww).sqrt());
    Ok(ParsevalReport {
        lhs,
        rhs,
        lhs_error: (lhs - lhs_c).norm(),
        rhs_error: (rhs - rhs_c).norm(),
        relative_gap: if scale > 0.0 { (lhs - rhs).norm() / scale } else { 0.0 },
    })
}

/// Rank-one reference: ∫ u(t) K̄_ν(t) dt by adaptive tanh-sinh on each
/// part with the direct cosh-integral Bessel quadrature.
pub fn forward_oracle(u: &TestFunction, factory: &EvaluatorFactory, nu: &DualVector, radius: f64, rel_tol: f64) -> Result<Complex64> {
    if factory.rs.rank() != 1 || factory.rs.frame().dim() != 1 {
        return Err(Error::Unsupported("the direct transform oracle is for SL(2)".into()));
    }
    let ev = factory.clone().with_method(Method::QuadratureOracle).build(nu)?;
    let frame = factory.rs.frame();
    let f = |t: f64| -> Complex64 {
        let v = ev.eval(&frame.to_ambient(&[t])).map(|v| v.value).unwrap_or(Complex64::new(f64::NAN, 0.0));
        u.eval(&[t]) * v.conj()
    };
    let re = tanh_sinh(|t| f(t).re, -radius, radius, rel_tol);
    let im = tanh_sinh(|t| f(t).im, -radius, radius, rel_tol);
    let v = Complex64::new(re.value, im.value);
    if v.re.is_nan() || v.im.is_nan() {
        return Err(Error::invalid("oracle integrand produced NaN"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEntry {
    pub m: Vec<f64>,
    pub d: u32,
    pub derivative_order: u32,
    /// log of the sup over the probe box.
    pub log_value: f64,
    /// log of the sup over the doubled box.
    pub log_value_enlarged: f64,
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub entries: Vec<SeminormEntry>,
    pub passed: bool,
}

/// Estimates sup e^{Σ m_α α(h)} (1+‖h‖)^d |∂^k u(h)| for k ≤ 2 on boxes of
/// radius R and 2R (same spacing); a seminorm counts as finite when the
/// larger box does not raise the sup.
pub fn membership_check(
    rs: &RootSystem,
    u: &TestFunction,
    m_list: &[Vec<f64>],
    d_list: &[u32],
    probe_radius: f64,
) -> Result<MembershipReport> {
    let frame = rs.frame();
    Error::check_dim(frame.dim(), u.dim)?;
    for m in m_list {
        Error::check_dim(rs.rank(), m.len())?;
    }
    if !(probe_radius > 0.0) {
        return Err(Error::invalid("probe radius must be positive"));
    }
    let dim = frame.dim();
    // Nested lattices: the doubled box reuses every point of the first.
    let half = if dim == 1 { 800 } else { 80 };
    let simple: Vec<Vec<f64>> = rs.simple_roots.iter().map(|a| frame.coords_of(&a.coords.iter().map(|&c| c as f64).collect::<Vec<_>>())).collect();
    let step = 1e-3;
    let deriv = |t: &[f64], order: u32| -> f64 {
        if order == 0 {
            return u.eval(t).norm();
        }
        let mut best: f64 = 0.0;
        let mut p = t.to_vec();
        for i in 0..dim {
            let mut v = [Complex64::new(0.0, 0.0); 5];
            for (k, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
                p[i] = t[i] + off * step;
                v[k] = u.eval(&p);
            }
            p[i] = t[i];
            let d = if order == 1 {
                (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * step)
            } else {
                (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * step * step)
            };
            best = best.max(d.norm());
        }
        best
    };
    let sup = |m: &[f64], d: u32, order: u32, radius: f64| -> f64 {
        ball_points(dim, radius, 2 * half * (radius / probe_radius).round() as usize + 1)
            .iter()
            .filter_map(|t| {
                let a = deriv(t, order);
                if a == 0.0 {
                    return None;
                }
                let weight: f64 = m.iter().zip(&simple).map(|(mi, s)| mi * s.iter().zip(t).map(|(x, y)| x * y).sum::<f64>()).sum();
                let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
                Some(weight + d as f64 * norm.ln_1p() + a.ln())
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut entries = Vec::new();
    for m in m_list {
        for &d in d_list {
            for order in 0..=2 {
                let a = sup(m, d, order, probe_radius);
                let b = sup(m, d, order, 2.0 * probe_radius);
                let stabilized = a.is_finite() && b.is_finite() && b - a <= 1e-9 * (1.0 + a.abs())
                    || (a == f64::NEG_INFINITY && b == f64::NEG_INFINITY);
                entries.push(SeminormEntry { m: m.clone(), d, derivative_order: order, log_value: a, log_value_enlarged: b, stabilized });
            }
        }
    }
    let passed = entries.iter().all(|e| e.stabilized);
    Ok(MembershipReport { entries, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_root_system, Variant};

    fn a1() -> (RootSystem, EvaluatorFactory) {
        let rs = build_root_system(2, Variant::SL).unwrap();
        let f = EvaluatorFactory::new(&rs, &[0.01]).unwrap();
        (rs, f)
    }

    fn small_spec() -> TransformSpec {
        TransformSpec { h_nodes_per_dim: 160, nu_radius: 12.0, nu_nodes_per_dim: 128, ..TransformSpec::default_for(1) }
    }

    #[test]
    fn theoretical_constants() {
        let (rs, _) = a1();
        assert!((theoretical_calibration(&rs) - A1_CALIBRATION).abs() < 1e-16);
        let rs = build_root_system(3, Variant::SL).unwrap();
        let c = 1.0 / (24.0 * std::f64::consts::PI.powi(2));
        assert!((theoretical_calibration(&rs) / c - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_grid_integrates_polynomials() {
        let g = TensorGrid::new(Rule::GaussLegendre, 2, 1.0, 8, 0.0);
        let s: f64 = g.nodes.iter().zip(&g.weights).map(|(p, w)| w * p[0] * p[0] * p[1] * p[1]).sum();
        assert!((s - 4.0 / 9.0).abs() < 1e-14);
        let g = TensorGrid::new(Rule::TanhSinh, 1, 2.0, 41, 0.0);
        let s: f64 = g.weights.iter().sum();
        assert!((s - 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_function_transforms_to_zero() {
        let (rs, f) = a1();
        let u = TestFunction::new(Gallery::Zero, &rs);
        let r = forward_transform(&u, &f, &small_spec()).unwrap();
        assert!(r.values.iter().all(|v| v.norm() == 0.0));
        let pd = PlancherelDensity::new(rs, A1_CALIBRATION).unwrap();
        let rec = inverse_transform(&r, &f, &pd, &[vec![0.3]]).unwrap();
        assert_eq!(rec.values[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn forward_matches_the_direct_oracle() {
        let (rs, f) = a1();
        let u = TestFunction::new(Gallery::Gaussian, &rs);
        let spec = small_spec();
        let r = forward_transform(&u, &f, &spec).unwrap();
        let scale = r.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for k in [0, 10, 31, 40, 60, 64, 90] {
            let nu = DualVector(rs.frame().to_ambient(&r.nu.nodes[k]));
            let oracle = forward_oracle(&u, &f, &nu, 6.0, 1e-12).unwrap();
            assert!((r.values[k] - oracle).norm() <= 1e-6 * scale, "{k}: {} vs {oracle}", r.values[k]);
        }
        assert!(r.skipped.is_empty());
    }

    #[test]
    fn gaussian_round_trip_in_rank_one() {
        let (rs, f) = a1();
        let u = TestFunction::new(Gallery::Gaussian, &rs);
        let spec = small_spec();
        let pts = ball_points(1, 2.0, 21);
        let c = fit_calibration(&u, &f, &rs, &spec, &pts).unwrap();
        assert!((c / A1_CALIBRATION - 1.0).abs() < 1e-4, "{c}");
        let pd = PlancherelDensity::new(rs.clone(), A1_CALIBRATION).unwrap();
        let rt = round_trip(&u, &f, &pd, &spec, &pts).unwrap();
        assert!(rt.max_rel_err < 1e-4, "{}", rt.max_rel_err);
    }

    #[test]
    fn parseval_and_parity() {
        let (rs, f) = a1();
        let pd = PlancherelDensity::new(rs.clone(), A1_CALIBRATION).unwrap();
        let spec = small_spec();
        let g = TestFunction::new(Gallery::Gaussian, &rs);
        let odd = TestFunction::new(Gallery::GaussianPolynomial, &rs);
        let p = parseval_check(&g, &g, &f, &pd, &spec).unwrap();
        assert!(p.relative_gap < 1e-4, "{p:?}");
        let p = parseval_check(&g, &odd, &f, &pd, &spec).unwrap();
        assert!(p.lhs.norm() < 1e-12 && p.rhs.norm() < 1e-4, "{p:?}");
    }

    #[test]
    fn membership_of_gallery_members() {
        let (rs, _) = a1();
        let ms = vec![vec![0.0], vec![2.0]];
        let g = TestFunction::new(Gallery::Gaussian, &rs);
        assert!(membership_check(&rs, &g, &ms, &[0, 2], 4.0).unwrap().passed);
        let b = TestFunction::new(Gallery::Bump, &rs);
        assert!(membership_check(&rs, &b, &ms, &[0, 2], 4.0).unwrap().passed);
        let e = TestFunction::new(Gallery::RhoExponential, &rs);
        assert!(!membership_check(&rs, &e, &[vec![5.0]], &[0], 4.0).unwrap().passed);
    }
}
