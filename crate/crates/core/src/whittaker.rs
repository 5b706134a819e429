//! Whittaker functions: fundamental series solutions of the Toda
//! eigen-equation, the rank-one Bessel closed form, and the class-one
//! combination K_ν.
//!
//! The series M_λ(h) = Σ_m a_m e^{(λ+2m̂)(h)}, m̂ = Σ m_α α, solves
//! (Σ∂² − 2Σ q_α e^{2α})M = (λ,λ)M, i.e. L_c M = −½(λ,λ) M, when
//!
//!   a_m·[4(m̂,m̂) + 4(λ,m̂)] = 2 Σ_α q_α a_{m−e_α},  a_0 = 1.
//!
//! Class one: with h₀ the coroot-span vector with α(h₀) = ½ ln(q_α/4),
//!
//!   K_ν(h) = φ(ν) Σ_w Π_{α>0} Γ(−(iwν,α)/(α,α)) e^{iwν(h₀)} M_{iwν}(h),
//!   φ(ν) = Π_{α>0} cosh(π s_α)^{1/2},  s_α = (ν,α)/(α,α).
//!
//! In rank one this is 2 cosh(πs)^{1/2} K_{is}(√q e^{α(h)}); φ makes the
//! transform measure exactly C/|c(iν)|².

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{weyl_group, CartanFrame, DualVector, RootSystem, SpectralParam, WeylElement};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::groups::{jacquet_quadrature, CharacterData};
use crate::quadrature::QuadratureSpec;
use crate::special::{bessel_k_direct, bessel_k_imaginary_order, bessel_k_imaginary_order_scaled, log_gamma};
use crate::toda::TodaOperator;

pub const DEFAULT_ORDER_RANK1: usize = 24;
pub const DEFAULT_ORDER_RANK2: usize = 16;
/// Smallest admissible |4(m̂,m̂) + 4(λ,m̂)|.
pub const SMALL_DENOMINATOR: f64 = 1e-10;
/// Smallest admissible |(ν,α)| for a regular parameter.
pub const REGULARITY_TOL: f64 = 1e-9;
/// Series tails above this fraction of the absolute sum are flagged.
pub const TAIL_TOL: f64 = 1e-10;
/// Class-one values whose error estimate exceeds this fraction of the
/// evaluator scale are reported as 0.
pub const CLAMP_TOL: f64 = 1e-8;

pub fn default_order(rank: usize) -> usize {
    if rank <= 1 {
        DEFAULT_ORDER_RANK1
    } else {
        DEFAULT_ORDER_RANK2
    }
}

/// q_α = ξ_α².
pub fn couplings_from_character(chi: &CharacterData) -> Result<Vec<f64>> {
    if !chi.is_generic() {
        return Err(Error::refused(format!("character {:?} is not generic", chi.xi)));
    }
    Ok(chi.xi.iter().map(|x| x * x).collect())
}

/// Multi-indices m ∈ ℤ^Δ_{≥0} with |m| ≤ order, ordered by shell.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBasis {
    pub rank: usize,
    pub order: usize,
    pub indices: Vec<Vec<u32>>,
    /// indices[shell_start[k]..shell_start[k+1]] is shell k.
    pub shell_start: Vec<usize>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl SeriesBasis {
    pub fn new(rank: usize, order: usize) -> Self {
        let mut indices = Vec::new();
        let mut shell_start = vec![0];
        for k in 0..=order {
            push_compositions(rank, k as u32, &mut Vec::new(), &mut indices);
            shell_start.push(indices.len());
        }
        let lookup = indices.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        SeriesBasis { rank, order, indices, shell_start, lookup }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index_of(&self, m: &[u32]) -> Option<usize> {
        self.lookup.get(m).copied()
    }

    /// Π_α e^{2 m_α x_α} for every basis index, x_α = α(h).
    pub fn monomials(&self, x: &[f64]) -> Vec<f64> {
        let powers: Vec<Vec<f64>> = x
            .iter()
            .map(|&xa| {
                let r = (2.0 * xa).exp();
                let mut p = Vec::with_capacity(self.order + 1);
                let mut acc = 1.0;
                for _ in 0..=self.order {
                    p.push(acc);
                    acc *= r;
                }
                p
            })
            .collect();
        self.indices.iter().map(|m| m.iter().enumerate().map(|(a, &k)| powers[a][k as usize]).product()).collect()
    }
}

fn push_compositions(parts: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 0 {
        if total == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        push_compositions(parts - 1, total - first, prefix, out);
        prefix.pop();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    pub rs: RootSystem,
    pub lambda: SpectralParam,
    pub couplings: Vec<f64>,
    pub basis: Arc<SeriesBasis>,
    pub coefficients: Vec<Complex64>,
    pub abs_coefficients: Vec<f64>,
    pub truncation_order: usize,
    /// Tail estimate at h = 0, relative to the absolute sum.
    pub tail_bound: f64,
}

/// Σ_m a_m Π e^{2m_α x_α} together with the data for its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: Complex64,
    /// Σ |a_m| e^{2m̂(h)}.
    pub abs_sum: f64,
    /// Geometric extrapolation of the last three shell norms.
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
    /// The tail exceeds TAIL_TOL of the absolute sum.
    pub flagged: bool,
}

pub fn build_series(rs: &RootSystem, lambda: &SpectralParam, couplings: &[f64], order: usize) -> Result<SeriesSolution> {
    build_series_with_basis(rs, lambda, couplings, Arc::new(SeriesBasis::new(rs.rank(), order)))
}

pub fn build_series_with_basis(
    rs: &RootSystem,
    lambda: &SpectralParam,
    couplings: &[f64],
    basis: Arc<SeriesBasis>,
) -> Result<SeriesSolution> {
    Error::check_dim(rs.n, lambda.dim())?;
    Error::check_dim(rs.rank(), couplings.len())?;
    Error::check_dim(rs.rank(), basis.rank)?;
    if couplings.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
        return Err(Error::invalid("couplings must be finite and nonnegative"));
    }
    let simple: Vec<Vec<f64>> = rs.simple_roots.iter().map(|a| a.coords.iter().map(|&c| c as f64).collect()).collect();
    let lam = lambda.coords();
    let mut coefficients = vec![Complex64::new(0.0, 0.0); basis.len()];
    coefficients[0] = Complex64::new(1.0, 0.0);
    let mut mhat = vec![0.0; rs.n];
    let mut prev = Vec::with_capacity(basis.rank);
    for idx in 1..basis.len() {
        let m = &basis.indices[idx];
        mhat.iter_mut().for_each(|x| *x = 0.0);
        for (a, &k) in m.iter().enumerate() {
            for (x, c) in mhat.iter_mut().zip(&simple[a]) {
                *x += k as f64 * c;
            }
        }
        let mm: f64 = mhat.iter().map(|x| x * x).sum();
        let lm: Complex64 = lam.iter().zip(&mhat).map(|(l, x)| l * x).sum();
        let denom = 4.0 * mm + 4.0 * lm;
        if denom.norm() < SMALL_DENOMINATOR {
            return Err(Error::refused(format!("small denominator {:.3e} at m = {m:?}", denom.norm())));
        }
        let mut rhs = Complex64::new(0.0, 0.0);
        for (a, q) in couplings.iter().enumerate() {
            if m[a] == 0 || *q == 0.0 {
                continue;
            }
            prev.clear();
            prev.extend_from_slice(m);
            prev[a] -= 1;
            rhs += 2.0 * q * coefficients[basis.index_of(&prev).expect("lower shell index")];
        }
        coefficients[idx] = rhs / denom;
    }
    let mut s = SeriesSolution {
        rs: rs.clone(),
        lambda: lambda.clone(),
        couplings: couplings.to_vec(),
        truncation_order: basis.order,
        basis,
        abs_coefficients: coefficients.iter().map(|c| c.norm()).collect(),
        coefficients,
        tail_bound: 0.0,
    };
    let at_zero = s.sum_monomials(&s.basis.monomials(&vec![0.0; rs.rank()]));
    s.tail_bound = if at_zero.abs_sum > 0.0 { at_zero.tail / at_zero.abs_sum } else { 0.0 };
    Ok(s)
}

impl SeriesSolution {
    /// Σ a_m·mono_m with shell norms, for monomials from [`SeriesBasis::monomials`].
    pub fn sum_monomials(&self, mono: &[f64]) -> SeriesSum {
        let b = &self.basis;
        let (mut re, mut im, mut abs_sum) = (0.0, 0.0, 0.0);
        let first_tail_shell = b.order.saturating_sub(2);
        let split = b.shell_start[first_tail_shell];
        for i in 0..split {
            let m = mono[i];
            re += self.coefficients[i].re * m;
            im += self.coefficients[i].im * m;
            abs_sum += self.abs_coefficients[i] * m;
        }
        let mut shells = [0.0; 3];
        for (slot, k) in (first_tail_shell..=b.order).enumerate() {
            for i in b.shell_start[k]..b.shell_start[k + 1] {
                let m = mono[i];
                re += self.coefficients[i].re * m;
                im += self.coefficients[i].im * m;
                shells[slot] += self.abs_coefficients[i] * m;
            }
        }
        let used = (b.order - first_tail_shell + 1).min(3);
        abs_sum += shells[..used].iter().sum::<f64>();
        SeriesSum { value: Complex64::new(re, im), abs_sum, tail: geometric_tail(&shells[..used]) }
    }

    /// (α(h))_α for ambient h.
    pub fn simple_values(&self, h: &[f64]) -> Vec<f64> {
        self.rs.simple_roots.iter().map(|a| a.eval(h)).collect()
    }
}

fn geometric_tail(shells: &[f64]) -> f64 {
    let k = shells.len();
    if k < 3 {
        return if k > 0 && shells[k - 1] > 0.0 { f64::INFINITY } else { 0.0 };
    }
    let (a, b, c) = (shells[k - 3], shells[k - 2], shells[k - 1]);
    if c == 0.0 {
        return 0.0;
    }
    let r1 = if b > 0.0 { c / b } else { f64::INFINITY };
    let r2 = if a > 0.0 { b / a } else { f64::INFINITY };
    let r = r1.max(r2);
    if r < 1.0 {
        c * r / (1.0 - r)
    } else {
        f64::INFINITY
    }
}

/// Σ a_m e^{(λ+2m̂)(h)} for ambient h.
pub fn eval_series(s: &SeriesSolution, h: &[f64]) -> Result<SeriesValue> {
    Error::check_dim(s.rs.n, h.len())?;
    let sum = s.sum_monomials(&s.basis.monomials(&s.simple_values(h)));
    let lead = s.lambda.eval(h).exp();
    let flagged = !(sum.tail <= TAIL_TOL * sum.abs_sum);
    Ok(SeriesValue { value: lead * sum.value, tail_bound: lead.norm() * sum.tail, flagged })
}

/// The decaying solution of −w'' + q e^{2x} w = s² w, w(x) = K_{is}(√q e^x).
///
/// Reduction: for rank one with x = α(h) and t the unit coordinate along α,
/// x = √2 t, so −½∂_t² + q e^{2α(h)} = −∂_x² + q e^{2x}. On ν = (s, −s)
/// (s = (ν,α)/(α,α)) the eigenvalue ‖ν‖²/2 = s², and z = √q e^x turns the
/// equation into the modified Bessel equation of order is.
pub fn whittaker_rank1(nu_scalar: f64, q: f64, x: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::invalid(format!("coupling must be positive, got {q}")));
    }
    let z = q.sqrt() * x.exp();
    if z > 700.0 {
        return Ok(0.0);
    }
    bessel_k_imaginary_order(nu_scalar, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rank1ClosedForm,
    SeriesClassOne,
    QuadratureOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeylTerm {
    pub w: WeylElement,
    pub coefficient: Complex64,
    pub series: SeriesSolution,
}

/// A class-one value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhittakerValue {
    pub value: Complex64,
    pub error: f64,
    /// The series lost all significant digits here and the value was set
    /// to 0 (deep in the positive chamber, where K_ν is below CLAMP_TOL).
    pub clamped: bool,
}

/// K_ν for one real spectral parameter. Immutable and shareable.
#[derive(Debug, Clone, PartialEq)]
pub struct WhittakerEvaluator {
    pub rs: RootSystem,
    pub nu: DualVector,
    pub method: Method,
    pub couplings: Vec<f64>,
    pub order: usize,
    pub terms: Vec<WeylTerm>,
    /// Σ_w |coefficient|, the magnitude of K_ν near the walls.
    pub scale: f64,
    pub frame: CartanFrame,
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn root_ratio_real(alpha: &crate::algebra::Root, nu: &DualVector) -> f64 {
    nu.0.iter().zip(&alpha.coords).map(|(v, &c)| v * c as f64).sum::<f64>() / alpha.norm_sq() as f64
}

/// ln φ(ν) = ½ Σ_{α>0} ln cosh(π s_α).
fn ln_phi(rs: &RootSystem, nu: &DualVector) -> f64 {
    rs.positive_roots.iter().map(|a| 0.5 * ln_cosh(PI * root_ratio_real(a, nu))).sum()
}

fn check_nu(rs: &RootSystem, nu: &DualVector, couplings: &[f64]) -> Result<DualVector> {
    Error::check_dim(rs.n, nu.dim())?;
    Error::check_dim(rs.rank(), couplings.len())?;
    if nu.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("spectral parameter must be finite"));
    }
    if couplings.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
        return Err(Error::refused("couplings must be positive (generic character)"));
    }
    Ok(DualVector(rs.project(&nu.0)))
}

/// K_ν as the Weyl combination of series solutions.
pub fn class_one(rs: &RootSystem, nu: &DualVector, couplings: &[f64], order: usize) -> Result<WhittakerEvaluator> {
    let nu = check_nu(rs, nu, couplings)?;
    if rs.rank() > 2 {
        return Err(Error::Unsupported("class-one evaluation is implemented for rank ≤ 2".into()));
    }
    for alpha in &rs.positive_roots {
        if root_ratio_real(alpha, &nu).abs() < REGULARITY_TOL {
            return Err(Error::refused(format!("ν = {:?} lies on the wall of root {:?}", nu.0, alpha.coords)));
        }
    }
    let targets: Vec<f64> = couplings.iter().map(|q| 0.5 * (q / 4.0).ln()).collect();
    let h0 = rs.solve_simple_values(&targets)?;
    let basis = Arc::new(SeriesBasis::new(rs.rank(), order));
    let phi = ln_phi(rs, &nu);
    let mut terms = Vec::new();
    for w in weyl_group(rs) {
        let wnu = w.act_dual(&nu);
        let lambda = SpectralParam::unitary(&wnu);
        let mut log_c = Complex64::new(phi, 0.0);
        for alpha in &rs.positive_roots {
            log_c += log_gamma(Complex64::new(0.0, -root_ratio_real(alpha, &wnu)))?;
        }
        log_c += lambda.eval(&h0.0);
        let series = build_series_with_basis(rs, &lambda, couplings, basis.clone())?;
        terms.push(WeylTerm { w, coefficient: log_c.exp(), series });
    }
    let scale = terms.iter().map(|t| t.coefficient.norm()).sum();
    Ok(WhittakerEvaluator {
        rs: rs.clone(),
        nu,
        method: Method::SeriesClassOne,
        couplings: couplings.to_vec(),
        order,
        terms,
        scale,
        frame: rs.frame(),
    })
}

/// Rank one: 2 cosh(πs)^{1/2} K_{is}(√q e^{α(h)}) times the central plane wave.
/// `oracle` selects the direct cosh-integral Bessel quadrature.
pub fn rank1_evaluator(rs: &RootSystem, nu: &DualVector, couplings: &[f64], oracle: bool) -> Result<WhittakerEvaluator> {
    let nu_full = nu.clone();
    check_nu(rs, nu, couplings)?;
    if rs.rank() != 1 {
        return Err(Error::Unsupported("the Bessel closed form is rank one only".into()));
    }
    let s = root_ratio_real(&rs.simple_roots[0], nu);
    if s.abs() < REGULARITY_TOL {
        return Err(Error::refused(format!("ν = {:?} lies on the wall s = 0", nu.0)));
    }
    // Σ_w |φ Γ(∓is)| = 2 (π / (s tanh πs))^{1/2}, capped near s = 0.
    let sa = s.abs().max(1e-3);
    let scale = 2.0 * (PI / (sa * (PI * sa).tanh())).sqrt();
    Ok(WhittakerEvaluator {
        rs: rs.clone(),
        nu: DualVector(rs.project(&nu_full.0)),
        method: if oracle { Method::QuadratureOracle } else { Method::Rank1ClosedForm },
        couplings: couplings.to_vec(),
        order: 0,
        terms: Vec::new(),
        scale,
        frame: rs.frame(),
    })
}

impl WhittakerEvaluator {
    /// K_ν(h) for ambient h.
    pub fn eval(&self, h: &[f64]) -> Result<WhittakerValue> {
        Error::check_dim(self.rs.n, h.len())?;
        match self.method {
            Method::Rank1ClosedForm | Method::QuadratureOracle => self.eval_rank1(h),
            Method::SeriesClassOne => {
                let x: Vec<f64> = self.rs.simple_roots.iter().map(|a| a.eval(h)).collect();
                Ok(self.eval_with_monomials(h, &self.terms[0].series.basis.monomials(&x)))
            }
        }
    }

    /// K_ν at orthonormal frame coordinates.
    pub fn eval_coords(&self, t: &[f64]) -> Result<WhittakerValue> {
        Error::check_dim(self.frame.dim(), t.len())?;
        self.eval(&self.frame.to_ambient(t))
    }

    pub fn eval_batch(&self, points: &[Vec<f64>], exec: Execution) -> Result<Vec<WhittakerValue>> {
        exec::map_slice(exec, points, |h| self.eval(h)).into_iter().collect()
    }

    /// Series evaluation with precomputed monomials (shared across ν).
    pub fn eval_with_monomials(&self, h: &[f64], mono: &[f64]) -> WhittakerValue {
        let mut value = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        for term in &self.terms {
            let sum = term.series.sum_monomials(mono);
            let lead = term.coefficient * term.series.lambda.eval(h).exp();
            value += lead * sum.value;
            error += lead.norm() * (sum.tail + 8.0 * f64::EPSILON * sum.abs_sum);
        }
        if !(error <= CLAMP_TOL * self.scale) {
            return WhittakerValue { value: Complex64::new(0.0, 0.0), error: CLAMP_TOL * self.scale, clamped: true };
        }
        WhittakerValue { value, error, clamped: false }
    }

    fn eval_rank1(&self, h: &[f64]) -> Result<WhittakerValue> {
        let alpha = &self.rs.simple_roots[0];
        let s = root_ratio_real(alpha, &self.nu);
        let z = self.couplings[0].sqrt() * alpha.eval(h).exp();
        let centre = central_phase(&self.rs, &self.nu, h);
        let k = if z > 700.0 {
            0.0
        } else if self.method == Method::QuadratureOracle {
            2.0 * (0.5 * ln_cosh(PI * s)).exp() * bessel_k_direct(s, z)?
        } else {
            // cosh(πs)^{1/2} e^{−π|s|/2} = ((1 + e^{−2π|s|})/2)^{1/2}
            2.0 * (0.5 * (ln_cosh(PI * s) - PI * s.abs())).exp() * bessel_k_imaginary_order_scaled(s, z)?
        };
        let value = centre * k;
        Ok(WhittakerValue { value, error: 1e-12 * value.norm(), clamped: false })
    }

    /// max |L_c K − (‖ν‖²/2)K| / max |K| over `points` (frame coordinates).
    pub fn eigen_residual(&self, points: &[Vec<f64>], spacing: f64) -> Result<f64> {
        let op = TodaOperator::new(&self.rs, &self.couplings)?;
        let eig = 0.5 * self.nu.0.iter().map(|x| x * x).sum::<f64>();
        let f = |t: &[f64]| self.eval_coords(t).map(|v| v.value).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for t in points {
            let k = f(t);
            num = num.max((op.apply_at(&f, t, spacing) - eig * k).norm());
            den = den.max(k.norm());
        }
        if num.is_nan() || den.is_nan() {
            return Err(Error::invalid("eigen residual evaluation produced NaN"));
        }
        Ok(if den > 0.0 { num / den } else { 0.0 })
    }

    pub fn dump(&self, residual_points: &[Vec<f64>], spacing: f64, max_coefficients: usize) -> Result<EvaluatorDump> {
        let coefficients = self
            .terms
            .first()
            .map(|t| t.series.coefficients.iter().take(max_coefficients).map(|c| [c.re, c.im]).collect())
            .unwrap_or_default();
        let tail_bound = self.terms.iter().map(|t| t.series.tail_bound).fold(0.0, f64::max);
        Ok(EvaluatorDump {
            nu: self.nu.0.clone(),
            method: self.method,
            order: self.order,
            coefficients,
            weyl_coefficients: self.terms.iter().map(|t| [t.coefficient.re, t.coefficient.im]).collect(),
            accuracy: Accuracy { eig_residual: self.eigen_residual(residual_points, spacing)?, tail_bound },
        })
    }
}

/// e^{iν(h_c)} with h_c the central part of h (1 on SL).
fn central_phase(rs: &RootSystem, nu: &DualVector, h: &[f64]) -> Complex64 {
    let n = rs.n as f64;
    let phase = nu.0.iter().sum::<f64>() * h.iter().sum::<f64>() / n;
    Complex64::new(0.0, phase).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub eig_residual: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorDump {
    pub nu: Vec<f64>,
    pub method: Method,
    pub order: usize,
    /// Leading series coefficients of the identity term as [re, im].
    pub coefficients: Vec<[f64; 2]>,
    pub weyl_coefficients: Vec<[f64; 2]>,
    pub accuracy: Accuracy,
}

/// Builds evaluators on demand for a fixed root system and couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatorFactory {
    pub rs: RootSystem,
    pub couplings: Vec<f64>,
    pub method: Method,
    pub order: usize,
}

impl EvaluatorFactory {
    pub fn new(rs: &RootSystem, couplings: &[f64]) -> Result<Self> {
        Error::check_dim(rs.rank(), couplings.len())?;
        let method = if rs.rank() == 1 { Method::Rank1ClosedForm } else { Method::SeriesClassOne };
        Ok(EvaluatorFactory { rs: rs.clone(), couplings: couplings.to_vec(), method, order: default_order(rs.rank()) })
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn build(&self, nu: &DualVector) -> Result<WhittakerEvaluator> {
        match self.method {
            Method::SeriesClassOne => class_one(&self.rs, nu, &self.couplings, self.order),
            Method::Rank1ClosedForm => rank1_evaluator(&self.rs, nu, &self.couplings, false),
            Method::QuadratureOracle => rank1_evaluator(&self.rs, nu, &self.couplings, true),
        }
    }
}

/// J_{χ_h,ν}(1) / Σ_m a_m e^{2m̂(h)} for real ν in the convergence region.
/// Tends to c(ν) as α(h) → −∞ and is constant in h up to the other Weyl
/// exponents e^{(wν−ν)(h)}.
pub fn connection_ratio(
    rs: &RootSystem,
    chi: &CharacterData,
    nu: &DualVector,
    h: &[f64],
    quad: &QuadratureSpec,
    order: usize,
) -> Result<Complex64> {
    let couplings = couplings_from_character(chi)?;
    let param = SpectralParam::real(nu.clone());
    let series = build_series(rs, &param, &couplings, order)?;
    let sum = series.sum_monomials(&series.basis.monomials(&series.simple_values(h)));
    let j = jacquet_quadrature(rs, &chi.twisted(rs, h), &param, quad)?;
    Ok(j.value / sum.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_root_system, Variant};

    fn sl(n: usize) -> RootSystem {
        build_root_system(n, Variant::SL).unwrap()
    }

    #[test]
    fn couplings_square_the_character() {
        assert_eq!(couplings_from_character(&CharacterData::new(vec![1.0, 2.0])).unwrap(), vec![1.0, 4.0]);
        assert!(matches!(couplings_from_character(&CharacterData::new(vec![1.0, 0.0])), Err(Error::Refused(_))));
    }

    #[test]
    fn basis_enumerates_shells() {
        let b = SeriesBasis::new(2, 3);
        assert_eq!(b.len(), 10);
        assert_eq!(b.shell_start, vec![0, 1, 3, 6, 10]);
        assert_eq!(b.index_of(&[1, 2]), Some(8));
        assert_eq!(SeriesBasis::new(1, 24).len(), 25);
    }

    #[test]
    fn rank_one_first_coefficient() {
        let rs = sl(2);
        let s = 0.7;
        let series = build_series(&rs, &SpectralParam::unitary(&DualVector(vec![s, -s])), &[1.0], 4).unwrap();
        let expected = Complex64::new(2.0, 0.0) / Complex64::new(8.0, 8.0 * s);
        assert!((series.coefficients[1] - expected).norm() < 1e-15);
        // a_m = (q/4)^m / (m! (1+is)_m)
        let mut a = Complex64::new(1.0, 0.0);
        for m in 1..=4 {
            a /= 4.0 * m as f64 * Complex64::new(m as f64, s);
            assert!((series.coefficients[m] - a).norm() < 1e-15 * a.norm());
        }
    }

    #[test]
    fn free_case_is_a_pure_exponential() {
        let rs = sl(3);
        let lambda = SpectralParam::unitary(&DualVector(vec![1.0, 0.2, -1.2]));
        let series = build_series(&rs, &lambda, &[0.0, 0.0], 6).unwrap();
        assert!(series.coefficients[1..].iter().all(|c| c.norm() == 0.0));
        let h = [0.3, -0.1, -0.2];
        let v = eval_series(&series, &h).unwrap();
        assert!((v.value - lambda.eval(&h).exp()).norm() < 1e-15);
    }

    #[test]
    fn small_denominators_are_refused() {
        // λ = −α makes 4(α,α) + 4(λ,α) vanish at m = e_α.
        let rs = sl(2);
        let lambda = SpectralParam::real(DualVector(vec![-1.0, 1.0]));
        assert!(matches!(build_series(&rs, &lambda, &[1.0], 4), Err(Error::Refused(_))));
    }

    #[test]
    fn series_leading_term_dominates_far_out() {
        let rs = sl(3);
        let lambda = SpectralParam::unitary(&DualVector(vec![0.9, 0.1, -1.0]));
        let series = build_series(&rs, &lambda, &[1.0, 2.0], 16).unwrap();
        let h = rs.solve_simple_values(&[-8.0, -9.0]).unwrap().0;
        let v = eval_series(&series, &h).unwrap();
        let lead = lambda.eval(&h).exp();
        assert!((v.value / lead - 1.0).norm() < 1e-6);
        assert!(!v.flagged);
    }

    #[test]
    fn series_orders_agree_at_origin() {
        let rs = sl(3);
        let lambda = SpectralParam::unitary(&DualVector(vec![1.1, -0.3, -0.8]));
        let a = build_series(&rs, &lambda, &[1.0, 1.0], 16).unwrap();
        let b = build_series(&rs, &lambda, &[1.0, 1.0], 20).unwrap();
        let h = [0.0; 3];
        let (va, vb) = (eval_series(&a, &h).unwrap(), eval_series(&b, &h).unwrap());
        assert!((va.value - vb.value).norm() <= va.tail_bound + vb.tail_bound + 1e-15);
    }

    #[test]
    fn rank_one_solution_satisfies_its_ode() {
        for s in [0.0, 0.5, 3.0] {
            let h = 1e-3;
            for k in 0..=12 {
                let x = -3.0 + 0.5 * k as f64;
                let w = |y: f64| whittaker_rank1(s, 1.3, y).unwrap();
                let d2 = (-w(x + 2.0 * h) + 16.0 * w(x + h) - 30.0 * w(x) + 16.0 * w(x - h) - w(x - 2.0 * h)) / (12.0 * h * h);
                let res = -d2 + 1.3 * (2.0 * x).exp() * w(x) - s * s * w(x);
                assert!(res.abs() < 1e-7 * w(-3.0).abs().max(1e-3), "s={s} x={x} res={res}");
            }
        }
        assert!(whittaker_rank1(0.0, 1.0, 0.0).unwrap() > 0.0);
        assert!(whittaker_rank1(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn class_one_matches_bessel_in_rank_one() {
        let rs = sl(2);
        for s in [0.3, 1.7, 6.0] {
            let nu = DualVector(vec![s, -s]);
            let series = class_one(&rs, &nu, &[1.5], 40).unwrap();
            let closed = rank1_evaluator(&rs, &nu, &[1.5], false).unwrap();
            for k in 0..=8 {
                let x = -3.0 + 0.5 * k as f64;
                let h = [x / 2.0, -x / 2.0];
                let a = series.eval(&h).unwrap();
                let b = closed.eval(&h).unwrap();
                assert!((a.value - b.value).norm() < 1e-8 * closed.scale, "s={s} x={x} {a:?} {b:?}");
                assert!(a.value.im.abs() < 1e-10 * closed.scale);
            }
        }
    }

    #[test]
    fn class_one_is_weyl_invariant() {
        let rs = sl(3);
        let nu = DualVector(vec![1.4, -0.3, -1.1]);
        let base = class_one(&rs, &nu, &[1.0, 1.0], 16).unwrap();
        for w in weyl_group(&rs) {
            let other = class_one(&rs, &w.act_dual(&nu), &[1.0, 1.0], 16).unwrap();
            for t in [[0.0, 0.0], [-0.7, 0.4], [0.5, -0.9]] {
                let a = base.eval_coords(&t).unwrap().value;
                let b = other.eval_coords(&t).unwrap().value;
                assert!((a - b).norm() < 1e-8 * base.scale);
            }
        }
        assert!(matches!(class_one(&rs, &DualVector(vec![1.0, 1.0, -2.0]), &[1.0, 1.0], 16), Err(Error::Refused(_))));
        assert!(matches!(class_one(&sl(4), &DualVector(vec![3.0, 1.0, -1.0, -3.0]), &[1.0; 3], 8), Err(Error::Unsupported(_))));
    }

    #[test]
    fn class_one_conjugation_relation() {
        // conj K_ν = K_{−ν}; in rank two −ν is not a Weyl image of ν, so
        // K_ν is complex off the symmetric line.
        let rs = sl(3);
        let nu = DualVector(vec![1.4, -0.3, -1.1]);
        let k = class_one(&rs, &nu, &[1.0, 1.0], 16).unwrap();
        let km = class_one(&rs, &nu.scale(-1.0), &[1.0, 1.0], 16).unwrap();
        let t = [-0.4, 0.3];
        let a = k.eval_coords(&t).unwrap().value;
        let b = km.eval_coords(&t).unwrap().value;
        assert!((a.conj() - b).norm() < 1e-9 * k.scale);
    }

    #[test]
    fn eigen_residuals_are_small() {
        let rs = sl(2);
        let pts: Vec<Vec<f64>> = (0..=12).map(|k| vec![(-3.0 + 0.5 * k as f64) / 2f64.sqrt()]).collect();
        for s in [0.4, 2.5] {
            let ev = rank1_evaluator(&rs, &DualVector(vec![s, -s]), &[1.0], false).unwrap();
            assert!(ev.eigen_residual(&pts, 1e-3).unwrap() < 1e-6);
        }
        let rs = sl(3);
        let pts: Vec<Vec<f64>> = (0..5).flat_map(|i| (0..5).map(move |j| vec![-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64])).collect();
        let ev = class_one(&rs, &DualVector(vec![1.4, -0.3, -1.1]), &[1.0, 1.0], 16).unwrap();
        let r = ev.eigen_residual(&pts, 1e-3).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn class_one_decays_in_the_positive_chamber() {
        let rs = sl(2);
        let ev = rank1_evaluator(&rs, &DualVector(vec![0.8, -0.8]), &[1.0], false).unwrap();
        let at = |x: f64| ev.eval(&[x / 2.0, -x / 2.0]).unwrap().value.norm();
        let ratio = at(2.0) / at(0.0);
        let bessel = whittaker_rank1(0.8, 1.0, 2.0).unwrap().abs() / whittaker_rank1(0.8, 1.0, 0.0).unwrap().abs();
        assert!((ratio / bessel - 1.0).abs() < 1e-10);
        assert!(ratio < (-(2f64.exp()) + 1.0).exp());

        let rs = sl(3);
        let ev = class_one(&rs, &DualVector(vec![1.4, -0.3, -1.1]), &[1.0, 1.0], 16).unwrap();
        let along = |x: f64| ev.eval(&rs.solve_simple_values(&[x, x]).unwrap().0).unwrap();
        assert!(along(1.5).value.norm() < 1e-2 * along(-0.5).value.norm().max(along(0.0).value.norm()));
        let far = along(4.0);
        assert!(far.clamped && far.value.norm() == 0.0);
    }
}
