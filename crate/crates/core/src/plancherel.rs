//! The Gindikin–Karpelevič product for c(ν) and the Plancherel density
//! μ(ν) = 1/(c(iν)c(−iν)).
//!
//! Sign convention: c(ν) = ∫_N a(n)^{ν−ρ} dn converges for Re(ν,α) < 0, and
//! there the rank-one integral is ∫(1+x²)^{s−1/2}dx = B(1/2, −s) with
//! s = (ν,α)/(α,α). The factors below therefore take −s as the second Beta
//! argument. μ only sees |c(iν)|², which is even in ν, so the density is the
//! same under either sign.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{DualVector, Root, RootSystem, SpectralParam};
use crate::error::{Error, Result};
use crate::special::log_beta;

/// Values of μ above this are clamped and flagged.
pub const MU_CEILING: f64 = 1e15;

/// s_α(ν) = (ν,α)/(α,α).
pub fn root_ratio(alpha: &Root, nu: &SpectralParam) -> Complex64 {
    nu.inner_real(&alpha.as_dual()) / alpha.norm_sq() as f64
}

/// log c_α(ν) for multiplicities (m_α, m_{2α}); m_{2α} = 0 means 2α is not a root.
pub fn log_c_alpha_general(m_alpha: f64, m_2alpha: f64, s: Complex64) -> Result<Complex64> {
    let half = Complex64::new(0.5 * m_alpha, 0.0);
    let first = log_beta(half, -s)?;
    if m_2alpha == 0.0 {
        return Ok(first);
    }
    let second = log_beta(Complex64::new(0.5 * m_2alpha, 0.0), -s * 0.5 + 0.5 * (m_alpha + m_2alpha))?;
    Ok(first + second)
}

pub fn c_alpha(rs: &RootSystem, alpha: &Root, nu: &SpectralParam) -> Result<Complex64> {
    Error::check_dim(rs.n, nu.dim())?;
    let m2 = if rs.is_double_root_present(alpha) { 1.0 } else { 0.0 };
    Ok(log_c_alpha_general(f64::from(alpha.multiplicity()), m2, root_ratio(alpha, nu))?.exp())
}

/// log c(ν) = Σ_{α∈Φ₀⁺} log c_α(ν).
pub fn log_c_function(rs: &RootSystem, nu: &SpectralParam) -> Result<Complex64> {
    Error::check_dim(rs.n, nu.dim())?;
    let mut acc = Complex64::new(0.0, 0.0);
    for alpha in rs.reduced_positive_roots() {
        let m2 = if rs.is_double_root_present(alpha) { 1.0 } else { 0.0 };
        acc += log_c_alpha_general(f64::from(alpha.multiplicity()), m2, root_ratio(alpha, nu))?;
    }
    Ok(acc)
}

pub fn c_function(rs: &RootSystem, nu: &SpectralParam) -> Result<Complex64> {
    Ok(log_c_function(rs, nu)?.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlancherelDensity {
    pub rs: RootSystem,
    pub calibration_constant: f64,
}

/// μ(ν) with its clamp flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuValue {
    pub value: f64,
    pub clamped: bool,
}

impl PlancherelDensity {
    pub fn new(rs: RootSystem, calibration_constant: f64) -> Result<Self> {
        if !(calibration_constant > 0.0) || !calibration_constant.is_finite() {
            return Err(Error::invalid(format!("calibration constant must be positive, got {calibration_constant}")));
        }
        Ok(PlancherelDensity { rs, calibration_constant })
    }

    /// μ(ν) = C/|c(iν)|² for real ν.
    pub fn mu(&self, nu: &DualVector) -> Result<MuValue> {
        Error::check_dim(self.rs.n, nu.dim())?;
        let param = SpectralParam::unitary(nu);
        for alpha in self.rs.reduced_positive_roots() {
            if root_ratio(alpha, &param).norm() == 0.0 {
                // c has a pole on the wall, so μ vanishes there.
                return Ok(MuValue { value: 0.0, clamped: false });
            }
        }
        let log_mu = self.calibration_constant.ln() - 2.0 * log_c_function(&self.rs, &param)?.re;
        if log_mu > MU_CEILING.ln() || log_mu.is_nan() {
            return Ok(MuValue { value: MU_CEILING, clamped: true });
        }
        Ok(MuValue { value: log_mu.exp(), clamped: false })
    }

    pub fn mu_value(&self, nu: &DualVector) -> Result<f64> {
        Ok(self.mu(nu)?.value)
    }
}

pub fn mu_density(pd: &PlancherelDensity, nu: &DualVector) -> Result<MuValue> {
    pd.mu(nu)
}

/// Closed form of μ/C for type A: Π_{α>0} s_α tanh(π s_α)/π.
pub fn mu_closed_form_type_a(rs: &RootSystem, nu: &DualVector) -> f64 {
    rs.positive_roots
        .iter()
        .map(|alpha| {
            let s = nu.0.iter().zip(&alpha.coords).map(|(v, &c)| v * c as f64).sum::<f64>() / alpha.norm_sq() as f64;
            s * (std::f64::consts::PI * s).tanh() / std::f64::consts::PI
        })
        .product()
}

/// Fitted bound μ(ν) ≤ C(1+‖ν‖)^r over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub constant: f64,
    pub exponent: f64,
    /// max over samples with ‖ν‖ ≥ 1 of log μ / log(1+‖ν‖).
    pub max_log_ratio: f64,
}

/// Least-squares slope of log μ against log(1+‖ν‖) over samples with
/// ‖ν‖ ≥ 1, then the smallest C making the bound hold on every sample.
pub fn fit_growth_bound(pd: &PlancherelDensity, samples: &[DualVector]) -> Result<GrowthFit> {
    let mut pts = Vec::new();
    for nu in samples {
        let norm = nu.norm();
        let mu = pd.mu(nu)?.value;
        if norm >= 1.0 && mu > 0.0 {
            pts.push(((1.0 + norm).ln(), mu.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::invalid("growth fit needs at least two samples with ‖ν‖ ≥ 1"));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let log_c = pts.iter().map(|p| p.1 - exponent * p.0).fold(f64::NEG_INFINITY, f64::max);
    let max_log_ratio = pts.iter().map(|p| p.1 / p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthFit { constant: log_c.exp(), exponent, max_log_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_root_system, weyl_group, Variant};
    use std::f64::consts::PI;

    fn param_with_ratio(s: f64) -> SpectralParam {
        // SL(2): ν = (s, −s) gives (ν,α)/(α,α) = s.
        SpectralParam::real(DualVector(vec![s, -s]))
    }

    #[test]
    fn c_alpha_examples() {
        let rs = build_root_system(2, Variant::SL).unwrap();
        let alpha = &rs.positive_roots[0];
        let v = c_alpha(&rs, alpha, &param_with_ratio(-1.0)).unwrap();
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        let v = c_alpha(&rs, alpha, &param_with_ratio(-0.5)).unwrap();
        assert!((v - Complex64::new(PI, 0.0)).norm() < 1e-13);
        assert!(matches!(c_alpha(&rs, alpha, &param_with_ratio(0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn c_function_is_a_product_and_not_weyl_invariant() {
        let rs = build_root_system(3, Variant::SL).unwrap();
        let nu = SpectralParam::real(rs.rho.scale(-2.0));
        let c = c_function(&rs, &nu).unwrap();
        let prod: Complex64 = rs.positive_roots.iter().map(|a| c_alpha(&rs, a, &nu).unwrap()).product();
        assert!((c - prod).norm() < 1e-13 * prod.norm());
        let nu = SpectralParam::real(DualVector(vec![-0.7, 0.1, 0.6]));
        let swapped = SpectralParam::real(DualVector(vec![0.1, -0.7, 0.6]));
        let a = c_function(&rs, &nu).unwrap();
        let b = c_function(&rs, &swapped).unwrap();
        assert!((a - b).norm() > 1e-3);
    }

    #[test]
    fn rank_one_density_is_s_tanh() {
        let rs = build_root_system(2, Variant::SL).unwrap();
        let pd = PlancherelDensity::new(rs, 1.0).unwrap();
        let mu = |s: f64| pd.mu_value(&DualVector(vec![s, -s])).unwrap();
        let ratio = mu(1.0) / mu(2.0);
        let expected = PI.tanh() / (2.0 * (2.0 * PI).tanh());
        assert!((ratio - expected).abs() < 1e-10);
        assert_eq!(mu(0.0), 0.0);
        for k in 1..=200 {
            let s = 0.1 * k as f64;
            let closed = s * (PI * s).tanh() / PI;
            assert!((mu(s) / closed - 1.0).abs() < 1e-10);
            assert!((mu(s) - mu(-s)).abs() <= 1e-12 * mu(s));
        }
    }

    #[test]
    fn density_is_weyl_invariant_in_rank_two() {
        let rs = build_root_system(3, Variant::SL).unwrap();
        let pd = PlancherelDensity::new(rs.clone(), 1.0).unwrap();
        let nu = DualVector(vec![1.3, -0.4, -0.9]);
        let base = pd.mu_value(&nu).unwrap();
        assert!((base / mu_closed_form_type_a(&rs, &nu) - 1.0).abs() < 1e-10);
        for w in weyl_group(&rs) {
            let v = pd.mu_value(&w.act_dual(&nu)).unwrap();
            assert!((v / base - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn growth_fit_reports_polynomial_exponent() {
        let rs = build_root_system(2, Variant::SL).unwrap();
        let pd = PlancherelDensity::new(rs, 1.0).unwrap();
        let samples: Vec<DualVector> = (0..60).map(|k| {
            let s = 10f64.powf(3.0 * k as f64 / 59.0);
            DualVector(vec![s, -s])
        }).collect();
        let fit = fit_growth_bound(&pd, &samples).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.1, "{fit:?}");
        assert!(fit.max_log_ratio < 1.0);
    }

    #[test]
    fn huge_density_is_clamped() {
        let rs = build_root_system(2, Variant::SL).unwrap();
        let pd = PlancherelDensity::new(rs, 1e14).unwrap();
        let v = pd.mu(&DualVector(vec![500.0, -500.0])).unwrap();
        assert!(v.clamped);
        assert_eq!(v.value, MU_CEILING);
    }
}
