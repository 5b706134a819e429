//! Restricted root data of type A for SL(n,ℝ) and GL(n,ℝ).
//!
//! Everything is stored in the ambient ℝⁿ basis of diagonal matrices, for
//! both variants. For SL(n) the trace-zero constraint on Cartan vectors is
//! checked rather than quotiented away. The inner product on 𝔞 is the
//! restriction of `tr(XY)` to diagonal matrices, i.e. the Euclidean dot
//! product, and 𝔞* is identified with 𝔞 through it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which real form of the ambient group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    GL,
    SL,
}

/// A positive root `e_i − e_j`, `i < j`, with its expansion in simple roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Root {
    pub i: usize,
    pub j: usize,
    /// Integer ambient coordinates (a single +1 and a single −1).
    pub coords: Vec<i64>,
    /// Nonnegative coefficients on Δ = [α₁, …, α_{n−1}].
    pub simple_coeffs: Vec<u32>,
}

impl Root {
    fn new(n: usize, i: usize, j: usize) -> Self {
        let mut coords = vec![0; n];
        coords[i] = 1;
        coords[j] = -1;
        let mut simple_coeffs = vec![0; n - 1];
        for c in simple_coeffs.iter_mut().take(j).skip(i) {
            *c = 1;
        }
        Root { i, j, coords, simple_coeffs }
    }

    pub fn as_dual(&self) -> DualVector {
        DualVector(self.coords.iter().map(|&c| c as f64).collect())
    }

    /// α(h) = h_i − h_j.
    pub fn eval(&self, h: &[f64]) -> f64 {
        h[self.i] - h[self.j]
    }

    /// Root height, Σ of the simple coefficients.
    pub fn height(&self) -> u32 {
        self.simple_coeffs.iter().sum()
    }

    /// Dimension of the root space 𝔫_α. Split type A: always one.
    pub fn multiplicity(&self) -> u32 {
        1
    }

    /// (α, α) in exact arithmetic.
    pub fn norm_sq(&self) -> i64 {
        self.coords.iter().map(|c| c * c).sum()
    }
}

/// A point h ∈ 𝔞 in ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartanVector(pub Vec<f64>);

/// A point λ ∈ 𝔞* in ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector(pub Vec<f64>);

impl DualVector {
    pub fn zeros(n: usize) -> Self {
        DualVector(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scale(&self, s: f64) -> Self {
        DualVector(self.0.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, other: &DualVector) -> Self {
        DualVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &DualVector) -> Self {
        DualVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl CartanVector {
    pub fn zeros(n: usize) -> Self {
        CartanVector(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// ν = re + i·im ∈ 𝔞*_ℂ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    pub re: DualVector,
    pub im: DualVector,
}

impl SpectralParam {
    pub fn real(re: DualVector) -> Self {
        let n = re.dim();
        SpectralParam { re, im: DualVector::zeros(n) }
    }

    /// The unitary parameter iν for real ν.
    pub fn unitary(nu: &DualVector) -> Self {
        SpectralParam { re: DualVector::zeros(nu.dim()), im: nu.clone() }
    }

    pub fn from_complex(coords: &[Complex64]) -> Self {
        SpectralParam {
            re: DualVector(coords.iter().map(|c| c.re).collect()),
            im: DualVector(coords.iter().map(|c| c.im).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        self.re.dim()
    }

    pub fn coords(&self) -> Vec<Complex64> {
        self.re.0.iter().zip(&self.im.0).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    pub fn neg(&self) -> Self {
        SpectralParam { re: self.re.scale(-1.0), im: self.im.scale(-1.0) }
    }

    /// Bilinear (not Hermitian) extension of the dual form.
    pub fn inner(&self, other: &SpectralParam) -> Complex64 {
        self.coords().iter().zip(other.coords()).map(|(a, b)| a * b).sum()
    }

    /// Bilinear pairing with a real dual vector.
    pub fn inner_real(&self, mu: &DualVector) -> Complex64 {
        self.coords().iter().zip(&mu.0).map(|(a, b)| a * b).sum()
    }

    /// ν(h) for complex ν.
    pub fn eval(&self, h: &[f64]) -> Complex64 {
        self.coords().iter().zip(h).map(|(a, b)| a * b).sum()
    }

    /// ‖ν‖² = (ν, ν) for real parameters.
    pub fn norm_sq_real(&self) -> f64 {
        self.re.0.iter().map(|x| x * x).sum()
    }
}

/// λ(h) = Σ λ_i h_i.
pub fn pairing(lambda: &DualVector, h: &CartanVector) -> Result<f64> {
    Error::check_dim(lambda.dim(), h.dim())?;
    Ok(lambda.0.iter().zip(&h.0).map(|(a, b)| a * b).sum())
}

/// (λ, μ) on 𝔞*.
pub fn dual_inner(lambda: &DualVector, mu: &DualVector) -> Result<f64> {
    Error::check_dim(lambda.dim(), mu.dim())?;
    Ok(lambda.0.iter().zip(&mu.0).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSystem {
    pub n: usize,
    pub variant: Variant,
    pub positive_roots: Vec<Root>,
    pub simple_roots: Vec<Root>,
    pub rho: DualVector,
}

pub fn build_root_system(n: usize, variant: Variant) -> Result<RootSystem> {
    if n < 2 {
        return Err(Error::invalid(format!("root system needs n >= 2, got {n}")));
    }
    let mut positive_roots = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            positive_roots.push(Root::new(n, i, j));
        }
    }
    let simple_roots = (0..n - 1).map(|i| Root::new(n, i, i + 1)).collect();
    // 2ρ as exact integers, halved at the end (exact in binary floating point).
    let mut two_rho = vec![0i64; n];
    for r in &positive_roots {
        for (acc, c) in two_rho.iter_mut().zip(&r.coords) {
            *acc += c * i64::from(r.multiplicity());
        }
    }
    let rho = DualVector(two_rho.iter().map(|&x| x as f64 / 2.0).collect());
    Ok(RootSystem { n, variant, positive_roots, simple_roots, rho })
}

impl RootSystem {
    /// Real rank of the split Cartan subspace: n for GL, n−1 for SL.
    pub fn dim_a(&self) -> usize {
        match self.variant {
            Variant::GL => self.n,
            Variant::SL => self.n - 1,
        }
    }

    /// Number of simple roots, the rank of the Toda lattice.
    pub fn rank(&self) -> usize {
        self.n - 1
    }

    /// dim 𝔫 = |Φ⁺| (all multiplicities are one).
    pub fn dim_n(&self) -> usize {
        self.positive_roots.len()
    }

    /// Φ₀⁺: positive roots β with β/2 not a root. Type A is reduced, so this is Φ⁺.
    pub fn reduced_positive_roots(&self) -> &[Root] {
        &self.positive_roots
    }

    /// Whether 2α is a root. Never true in type A.
    pub fn is_double_root_present(&self, alpha: &Root) -> bool {
        let doubled: Vec<i64> = alpha.coords.iter().map(|c| 2 * c).collect();
        self.positive_roots.iter().any(|r| r.coords == doubled)
    }

    pub fn check_cartan(&self, h: &CartanVector) -> Result<()> {
        Error::check_dim(self.n, h.dim())?;
        if self.variant == Variant::SL {
            let tr: f64 = h.0.iter().sum();
            let scale = h.0.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            if tr.abs() > 1e-9 * scale {
                return Err(Error::invalid(format!("SL Cartan vector must be trace-zero, trace = {tr}")));
            }
        }
        Ok(())
    }

    /// An orthonormal basis of 𝔞 (w.r.t. tr(xyᵀ)) in ambient coordinates.
    pub fn frame(&self) -> CartanFrame {
        CartanFrame::new(self)
    }

    /// Projection of an ambient vector onto the trace-zero hyperplane (SL)
    /// or the identity (GL).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self.variant {
            Variant::GL => v.to_vec(),
            Variant::SL => {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| x - mean).collect()
            }
        }
    }

    /// The Cartan vector h₀ in the span of the simple coroots with α_k(h₀) = targets[k].
    pub fn solve_simple_values(&self, targets: &[f64]) -> Result<CartanVector> {
        Error::check_dim(self.rank(), targets.len())?;
        // h_{k} − h_{k+1} = t_k with Σ h = 0.
        let n = self.n;
        let mut h = vec![0.0; n];
        for k in 1..n {
            h[k] = h[k - 1] - targets[k - 1];
        }
        let mean = h.iter().sum::<f64>() / n as f64;
        for x in &mut h {
            *x -= mean;
        }
        Ok(CartanVector(h))
    }
}

/// Orthonormal coordinates on 𝔞 (and, through the inner product, on 𝔞*).
#[derive(Debug, Clone, PartialEq)]
pub struct CartanFrame {
    pub n: usize,
    /// `dim_a` unit vectors in ℝⁿ.
    pub basis: Vec<Vec<f64>>,
}

impl CartanFrame {
    fn new(rs: &RootSystem) -> Self {
        let n = rs.n;
        let basis = match rs.variant {
            Variant::GL => (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            Variant::SL => {
                // Gram–Schmidt on the simple roots.
                let mut out: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
                for a in &rs.simple_roots {
                    let mut v: Vec<f64> = a.coords.iter().map(|&c| c as f64).collect();
                    for b in &out {
                        let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                        for (x, y) in v.iter_mut().zip(b) {
                            *x -= d * y;
                        }
                    }
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    out.push(v.into_iter().map(|x| x / norm).collect());
                }
                out
            }
        };
        CartanFrame { n, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn to_ambient(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (c, b) in coords.iter().zip(&self.basis) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }

    pub fn coords_of(&self, ambient: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|b| b.iter().zip(ambient).map(|(x, y)| x * y).sum()).collect()
    }
}

/// A coordinate permutation acting on 𝔞*: (w·λ)_{perm[i]} = λ_i.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeylElement {
    pub perm: Vec<usize>,
}

impl WeylElement {
    pub fn identity(n: usize) -> Self {
        WeylElement { perm: (0..n).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn act(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; lambda.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = lambda[i];
        }
        out
    }

    pub fn act_dual(&self, lambda: &DualVector) -> DualVector {
        DualVector(self.act(&lambda.0))
    }

    pub fn act_complex(&self, lambda: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); lambda.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = lambda[i];
        }
        out
    }

    /// (self ∘ other)·λ = self·(other·λ).
    pub fn compose(&self, other: &WeylElement) -> WeylElement {
        WeylElement { perm: other.perm.iter().map(|&p| self.perm[p]).collect() }
    }

    pub fn inverse(&self) -> WeylElement {
        let mut perm = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            perm[p] = i;
        }
        WeylElement { perm }
    }
}

/// All n! coordinate permutations, identity first, in lexicographic order.
pub fn weyl_group(rs: &RootSystem) -> Vec<WeylElement> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..rs.n).collect();
    loop {
        out.push(WeylElement { perm: current.clone() });
        if !next_permutation(&mut current) {
            break;
        }
    }
    out
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// JSON shape of a root system: `{n, variant, rho, simple_roots, positive_roots}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RootSystemJson {
    pub n: usize,
    pub variant: Variant,
    pub rho: Vec<f64>,
    pub simple_roots: Vec<Vec<i64>>,
    pub positive_roots: Vec<Vec<i64>>,
}

impl From<&RootSystem> for RootSystemJson {
    fn from(rs: &RootSystem) -> Self {
        RootSystemJson {
            n: rs.n,
            variant: rs.variant,
            rho: rs.rho.0.clone(),
            simple_roots: rs.simple_roots.iter().map(|r| r.coords.clone()).collect(),
            positive_roots: rs.positive_roots.iter().map(|r| r.coords.clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sl2_rho_and_roots() {
        let rs = build_root_system(2, Variant::SL).unwrap();
        assert_eq!(rs.positive_roots.len(), 1);
        assert_eq!(rs.positive_roots[0].coords, vec![1, -1]);
        assert_eq!(rs.rho.0, vec![0.5, -0.5]);
    }

    #[test]
    fn gl3_rho() {
        let rs = build_root_system(3, Variant::GL).unwrap();
        assert_eq!(rs.rho.0, vec![1.0, 0.0, -1.0]);
        assert_eq!(rs.positive_roots.len(), 3);
    }

    #[test]
    fn gl4_rho_matches_closed_form() {
        let rs = build_root_system(4, Variant::GL).unwrap();
        assert_eq!(rs.rho.0, vec![1.5, 0.5, -0.5, -1.5]);
        assert_eq!(rs.dim_n(), 6);
    }

    #[test]
    fn n_below_two_is_rejected() {
        assert!(matches!(build_root_system(1, Variant::SL), Err(Error::InvalidArgument(_))));
        assert!(build_root_system(0, Variant::GL).is_err());
    }

    #[test]
    fn roots_are_nonnegative_simple_combinations() {
        let rs = build_root_system(5, Variant::GL).unwrap();
        for r in &rs.positive_roots {
            let mut recon = vec![0i64; 5];
            for (k, &c) in r.simple_coeffs.iter().enumerate() {
                for (x, y) in recon.iter_mut().zip(&rs.simple_roots[k].coords) {
                    *x += i64::from(c) * y;
                }
            }
            assert_eq!(recon, r.coords);
            assert!(!rs.is_double_root_present(r));
        }
        assert_eq!(rs.reduced_positive_roots().len(), rs.positive_roots.len());
    }

    #[test]
    fn pairing_examples() {
        let sl2 = build_root_system(2, Variant::SL).unwrap();
        let x = 0.73;
        assert!((pairing(&sl2.rho, &CartanVector(vec![x, -x])).unwrap() - x).abs() < 1e-15);
        assert_eq!(pairing(&DualVector(vec![3.0, 4.0]), &CartanVector::zeros(2)).unwrap(), 0.0);
        let gl3 = build_root_system(3, Variant::GL).unwrap();
        let a1 = gl3.simple_roots[0].as_dual();
        assert_eq!(pairing(&a1, &CartanVector(vec![1.0, 0.0, 0.0])).unwrap(), 1.0);
        assert!(matches!(
            pairing(&a1, &CartanVector(vec![1.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn dual_inner_examples() {
        let gl3 = build_root_system(3, Variant::GL).unwrap();
        let a1 = gl3.simple_roots[0].as_dual();
        let a2 = gl3.simple_roots[1].as_dual();
        assert_eq!(dual_inner(&a1, &a2).unwrap(), -1.0);
        for r in &gl3.positive_roots {
            assert_eq!(r.norm_sq(), 2);
        }
        let sl2 = build_root_system(2, Variant::SL).unwrap();
        assert_eq!(dual_inner(&sl2.rho, &sl2.rho).unwrap(), 0.5);
        assert_eq!(dual_inner(&a1, &DualVector::zeros(3)).unwrap(), 0.0);
        let gl2 = build_root_system(2, Variant::GL).unwrap();
        let a = gl2.simple_roots[0].as_dual();
        assert_eq!(dual_inner(&a, &a).unwrap(), 2.0);
    }

    #[test]
    fn weyl_group_sizes_and_action() {
        let sl2 = build_root_system(2, Variant::SL).unwrap();
        let w = weyl_group(&sl2);
        assert_eq!(w.len(), 2);
        assert!(w[0].is_identity());
        assert_eq!(w[1].act(&[0.3, -0.3]), vec![-0.3, 0.3]);
        let gl3 = build_root_system(3, Variant::GL).unwrap();
        let w3 = weyl_group(&gl3);
        assert_eq!(w3.len(), 6);
        for (idx, w) in w3.iter().enumerate() {
            let moved = w.act_dual(&gl3.rho);
            assert_eq!(moved == gl3.rho, idx == 0, "rho is regular");
        }
    }

    #[test]
    fn weyl_group_is_closed_under_composition() {
        let rs = build_root_system(4, Variant::GL).unwrap();
        let w = weyl_group(&rs);
        assert_eq!(w.len(), 24);
        for a in &w {
            assert!(w.contains(&a.inverse()));
            for b in &w {
                assert!(w.contains(&a.compose(b)));
            }
        }
        let lam = [0.1, 0.7, -0.4, 2.0];
        let (a, b) = (&w[5], &w[17]);
        assert_eq!(a.compose(b).act(&lam), a.act(&b.act(&lam)));
    }

    #[test]
    fn weyl_action_preserves_inner_product() {
        let rs = build_root_system(3, Variant::SL).unwrap();
        let l = DualVector(vec![0.3, -1.1, 0.8]);
        let m = DualVector(vec![2.0, 0.25, -2.25]);
        let base = dual_inner(&l, &m).unwrap();
        for w in weyl_group(&rs) {
            let v = dual_inner(&w.act_dual(&l), &w.act_dual(&m)).unwrap();
            assert!((v - base).abs() <= 1e-14);
        }
    }

    #[test]
    fn frames_are_orthonormal() {
        for (n, var) in [(2, Variant::SL), (3, Variant::SL), (3, Variant::GL), (4, Variant::SL)] {
            let rs = build_root_system(n, var).unwrap();
            let f = rs.frame();
            assert_eq!(f.dim(), rs.dim_a());
            for (i, a) in f.basis.iter().enumerate() {
                for (j, b) in f.basis.iter().enumerate() {
                    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
            let c: Vec<f64> = (0..f.dim()).map(|k| 0.3 * k as f64 - 0.2).collect();
            let back = f.coords_of(&f.to_ambient(&c));
            for (x, y) in c.iter().zip(&back) {
                assert!((x - y).abs() < 1e-14);
            }
        }
        let sl2 = build_root_system(2, Variant::SL).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sl2.frame().basis[0][0] - s).abs() < 1e-15);
    }

    #[test]
    fn sl_trace_constraint_is_checked() {
        let rs = build_root_system(3, Variant::SL).unwrap();
        assert!(rs.check_cartan(&CartanVector(vec![1.0, 0.0, -1.0])).is_ok());
        assert!(rs.check_cartan(&CartanVector(vec![1.0, 0.0, 0.0])).is_err());
        let gl = build_root_system(3, Variant::GL).unwrap();
        assert!(gl.check_cartan(&CartanVector(vec![1.0, 0.0, 0.0])).is_ok());
    }

    #[test]
    fn simple_value_solver() {
        let rs = build_root_system(3, Variant::SL).unwrap();
        let h = rs.solve_simple_values(&[0.4, -1.3]).unwrap();
        assert!((rs.simple_roots[0].eval(&h.0) - 0.4).abs() < 1e-15);
        assert!((rs.simple_roots[1].eval(&h.0) + 1.3).abs() < 1e-15);
        assert!(h.0.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn json_shape() {
        let rs = build_root_system(3, Variant::GL).unwrap();
        let v = serde_json::to_value(RootSystemJson::from(&rs)).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["variant"], "GL");
        assert_eq!(v["rho"], serde_json::json!([1.0, 0.0, -1.0]));
        assert_eq!(v["simple_roots"], serde_json::json!([[1, -1, 0], [0, 1, -1]]));
        assert_eq!(v["positive_roots"].as_array().unwrap().len(), 3);
    }
}
