//! Matrix realization of SL(n,ℝ)/GL(n,ℝ)⁺: Iwasawa factorizations, the norms
//! `|g|` and `‖g‖`, and brute-force quadrature over N.
//!
//! N is the upper unitriangular group, parametrized by its strict
//! upper-triangular entries in row-major order `(0,1), (0,2), …, (n−2,n−1)`;
//! Haar measure is the flat Lebesgue measure in these coordinates.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{DualVector, RootSystem, SpectralParam, Variant};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_on, integrate_rd, integrate_rd_split_last, pairwise_sum, QuadValue, QuadratureSpec};

/// Largest matrix size handled by the allocation-free integrand kernels.
pub const MAX_KERNEL_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupTag {
    GLPlus,
    SL,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub entries: DMatrix<f64>,
    pub tag: GroupTag,
}

impl GroupElement {
    pub fn new(entries: DMatrix<f64>, tag: GroupTag) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid("group element must be a square matrix"));
        }
        let det = entries.determinant();
        match tag {
            GroupTag::GLPlus if det <= 0.0 => {
                return Err(Error::invalid(format!("GL+ element needs det > 0, got {det}")));
            }
            GroupTag::SL if (det - 1.0).abs() > 1e-9 => {
                return Err(Error::invalid(format!("SL element needs det = 1, got {det}")));
            }
            _ => {}
        }
        Ok(GroupElement { entries, tag })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        let tag = if self.tag == GroupTag::SL && other.tag == GroupTag::SL { GroupTag::SL } else { GroupTag::GLPlus };
        GroupElement { entries: &self.entries * &other.entries, tag }
    }
}

/// g = n̄·a·k with n̄ lower unitriangular, a positive diagonal, k orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaNbarAK {
    pub nbar: DMatrix<f64>,
    pub a: Vec<f64>,
    pub k: DMatrix<f64>,
}

/// g = n·a·k with n upper unitriangular.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaNAK {
    pub n: DMatrix<f64>,
    pub a: Vec<f64>,
    pub k: DMatrix<f64>,
}

fn condition_number(g: &DMatrix<f64>) -> f64 {
    let sv = g.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn ensure_invertible(g: &DMatrix<f64>) -> Result<()> {
    let cond = condition_number(g);
    if !(cond < 1e13) {
        return Err(Error::Singular { condition: cond });
    }
    Ok(())
}

/// Householder QR of `m` with the signs fixed so that diag(R) > 0.
fn positive_qr(m: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows() {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    (q, r)
}

/// N̄AK factorization. With gᵀ = QR, R = a·n̄ᵀ and k = Qᵀ; R is the
/// transposed Cholesky factor of g·gᵀ, obtained without squaring the
/// condition number.
pub fn iwasawa_nbar_ak(g: &GroupElement) -> Result<IwasawaNbarAK> {
    let m = &g.entries;
    ensure_invertible(m)?;
    let n = m.nrows();
    let (q, r) = positive_qr(m.transpose());
    let a: Vec<f64> = (0..n).map(|i| r[(i, i)]).collect();
    let nbar = DMatrix::from_fn(n, n, |i, j| r[(j, i)] / a[j]);
    Ok(IwasawaNbarAK { nbar, a, k: q.transpose() })
}

/// NAK factorization, the same construction in reversed index order:
/// gᵀJ = QR gives gᵀ = (QJ)(JRJ) with JRJ = a·nᵀ lower triangular.
pub fn iwasawa_nak(g: &GroupElement) -> Result<IwasawaNAK> {
    let m = &g.entries;
    ensure_invertible(m)?;
    let n = m.nrows();
    let gt = m.transpose();
    let reversed = DMatrix::from_fn(n, n, |i, j| gt[(i, n - 1 - j)]);
    let (q, r) = positive_qr(reversed);
    let low = DMatrix::from_fn(n, n, |i, j| r[(n - 1 - i, n - 1 - j)]);
    let qj = DMatrix::from_fn(n, n, |i, j| q[(i, n - 1 - j)]);
    let a: Vec<f64> = (0..n).map(|i| low[(i, i)]).collect();
    let nn = DMatrix::from_fn(n, n, |i, j| low[(j, i)] / a[j]);
    Ok(IwasawaNAK { n: nn, a, k: qj.transpose() })
}

/// θ(g) = (gᵀ)⁻¹.
pub fn cartan_involution(g: &GroupElement) -> Result<GroupElement> {
    let inv = g.entries.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    Ok(GroupElement { entries: inv.transpose(), tag: g.tag })
}

/// log a(g) for the N̄AK decomposition.
pub fn log_a(g: &GroupElement) -> Result<Vec<f64>> {
    Ok(iwasawa_nbar_ak(g)?.a.iter().map(|x| x.ln()).collect())
}

fn sorted_singular_values(g: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = g.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// |g|: the operator norm of ∧^m Ad(g), m = dim 𝔫.
///
/// For g = k₁ diag(σ) k₂ the singular values of Ad(g) are σ_i/σ_j, so the
/// m largest multiply to Π_{i<j} σ_i/σ_j.
pub fn norm_bars(g: &GroupElement) -> Result<f64> {
    ensure_invertible(&g.entries)?;
    let sv = sorted_singular_values(&g.entries);
    let n = sv.len();
    let mut log = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            log += sv[i].ln() - sv[j].ln();
        }
    }
    Ok(log.exp())
}

/// The matrix of Ad(g): X ↦ gXg⁻¹ on gl(n), basis E_ij in row-major order.
pub fn adjoint_matrix(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let inv = g.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    let mut ad = DMatrix::zeros(n * n, n * n);
    for col in 0..n * n {
        let mut e = DMatrix::zeros(n, n);
        e[(col / n, col % n)] = 1.0;
        let img = g * e * &inv;
        for row in 0..n * n {
            ad[(row, col)] = img[(row / n, row % n)];
        }
    }
    Ok(ad)
}

/// |g| computed from the explicit n²×n² adjoint matrix (independent check).
pub fn norm_bars_oracle(g: &GroupElement) -> Result<f64> {
    let n = g.n();
    let m = n * (n - 1) / 2;
    let sv = sorted_singular_values(&adjoint_matrix(&g.entries)?);
    Ok(sv[..m].iter().map(|s| s.ln()).sum::<f64>().exp())
}

/// ‖g‖ = e^{‖log c‖}·|g|^{1/2}, where c = det(g)^{1/n} is the central factor
/// and ‖log c‖ = √n·|ln c| in the trace form. For SL(n) this is |g|^{1/2}.
pub fn norm_doublebar(g: &GroupElement) -> Result<f64> {
    let n = g.n() as f64;
    let det = g.entries.determinant();
    if det <= 0.0 {
        return Err(Error::invalid("‖g‖ needs det(g) > 0"));
    }
    let log_c = det.ln() / n;
    Ok((log_c.abs() * n.sqrt()).exp() * norm_bars(g)?.sqrt())
}

/// ‖∧^m Ad(g)⁻¹ u₀‖ for u₀ the unit top vector of ∧^m 𝔫̄, via the Gram
/// determinant of {g⁻¹E_{ji}g : j > i}.
pub fn wedge_norm_nbar(g: &GroupElement) -> Result<f64> {
    let n = g.n();
    let inv = g.entries.clone().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    let mut vecs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut e = DMatrix::zeros(n, n);
            e[(j, i)] = 1.0;
            let img = &inv * e * &g.entries;
            vecs.push(img.iter().cloned().collect());
        }
    }
    let m = vecs.len();
    let gram = DMatrix::from_fn(m, m, |a, b| vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum::<f64>());
    Ok(gram.determinant().sqrt())
}

/// ρ read off from ½tr(ad h|ₙ) on the basis E_kk of diagonal matrices.
pub fn rho_from_adjoint(rs: &RootSystem) -> DualVector {
    let n = rs.n;
    let mut rho = vec![0.0; n];
    for (k, r) in rho.iter_mut().enumerate() {
        let mut h = DMatrix::zeros(n, n);
        h[(k, k)] = 1.0;
        let mut trace = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                let bracket = &h * &e - &e * &h;
                trace += bracket[(i, j)];
            }
        }
        *r = 0.5 * trace;
    }
    DualVector(rho)
}

/// The data of a unitary character χ of N: dχ(X_α) = i·ξ_α on the simple root
/// vectors X_α = E_{α,α+1}, so χ(n) = exp(i Σ ξ_α n_{α,α+1}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterData {
    pub xi: Vec<f64>,
}

impl CharacterData {
    pub fn new(xi: Vec<f64>) -> Self {
        CharacterData { xi }
    }

    pub fn trivial(rank: usize) -> Self {
        CharacterData { xi: vec![0.0; rank] }
    }

    pub fn is_generic(&self) -> bool {
        self.xi.iter().all(|&x| x != 0.0 && x.is_finite())
    }

    /// χ_h: the character twisted by exp(h), ξ_α ↦ ξ_α e^{α(h)}.
    pub fn twisted(&self, rs: &RootSystem, h: &[f64]) -> CharacterData {
        let xi = self.xi.iter().zip(&rs.simple_roots).map(|(x, a)| x * a.eval(h).exp()).collect();
        CharacterData { xi }
    }
}

/// Index of the entry (i, j), i < j, in the N coordinate vector.
pub fn n_coordinate_index(n: usize, i: usize, j: usize) -> usize {
    // Rows before i contribute (n−1) + (n−2) + … entries.
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// log a(u) for u upper unitriangular given by its strict-upper coordinates.
/// Writes `n` values into `out`. Allocation-free; n ≤ MAX_KERNEL_N.
///
/// By Cauchy–Binet, a₁²⋯a_k² is the leading k×k principal minor of u·uᵀ,
/// i.e. the sum of squares of all k×k minors of the first k rows of u. The
/// sum has no cancellation, so this stays accurate for entries far beyond
/// the range where a Cholesky factorization of u·uᵀ breaks down.
pub fn log_a_upper_unipotent(n: usize, coords: &[f64], out: &mut [f64]) {
    debug_assert!(n <= MAX_KERNEL_N);
    let mut u = [[0.0f64; MAX_KERNEL_N]; MAX_KERNEL_N];
    let mut idx = 0;
    for (i, row) in u.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
        for x in row.iter_mut().take(n).skip(i + 1) {
            *x = coords[idx];
            idx += 1;
        }
    }
    let mut prev_log = 0.0;
    for k in 1..=n {
        let mut sum = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut sub = [[0.0f64; MAX_KERNEL_N]; MAX_KERNEL_N];
            let mut c = 0;
            for col in 0..n {
                if mask & (1 << col) != 0 {
                    for r in 0..k {
                        sub[r][c] = u[r][col];
                    }
                    c += 1;
                }
            }
            let d = small_determinant(&mut sub, k);
            sum += d * d;
        }
        let log = 0.5 * sum.ln();
        out[k - 1] = log - prev_log;
        prev_log = log;
    }
}

/// Determinant by Gaussian elimination with partial pivoting (destroys `m`).
fn small_determinant(m: &mut [[f64; MAX_KERNEL_N]; MAX_KERNEL_N], k: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in (col + 1)..k {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in (col + 1)..k {
            let f = m[r][col] / m[col][col];
            for c in col..k {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

fn check_convergence_region(rs: &RootSystem, nu: &SpectralParam) -> Result<()> {
    Error::check_dim(rs.n, nu.dim())?;
    for alpha in &rs.positive_roots {
        let v = nu.inner_real(&alpha.as_dual()).re;
        if !(v < 0.0) {
            return Err(Error::refused(format!(
                "integral over N converges only for Re(ν,α) < 0; (ν,α) = {v} for α = e{}-e{}",
                alpha.i + 1,
                alpha.j + 1
            )));
        }
    }
    Ok(())
}

/// c(ν) = ∫_N a(n)^{ν−ρ} dn by tensor-product quadrature.
pub fn c_function_quadrature(rs: &RootSystem, nu: &SpectralParam, quad: &QuadratureSpec) -> Result<QuadValue> {
    jacquet_quadrature(rs, &CharacterData::trivial(rs.rank()), nu, quad)
}

/// J_{χ,ν}(1) = ∫_N χ(n)^{−1} a(n)^{ν−ρ} dn.
pub fn jacquet_quadrature(
    rs: &RootSystem,
    chi: &CharacterData,
    nu: &SpectralParam,
    quad: &QuadratureSpec,
) -> Result<QuadValue> {
    Error::check_dim(rs.rank(), chi.xi.len())?;
    check_convergence_region(rs, nu)?;
    let n = rs.n;
    if n > MAX_KERNEL_N {
        return Err(Error::Unsupported(format!("quadrature over N implemented for n ≤ {MAX_KERNEL_N}")));
    }
    let exponent: Vec<Complex64> = nu.coords().iter().zip(&rs.rho.0).map(|(v, r)| v - r).collect();
    let simple_index: Vec<usize> = (0..n - 1).map(|k| n_coordinate_index(n, k, k + 1)).collect();
    let xi = chi.xi.clone();
    let integrand = move |x: &[f64]| {
        let mut la = [0.0; MAX_KERNEL_N];
        log_a_upper_unipotent(n, x, &mut la);
        let mut e = Complex64::new(0.0, 0.0);
        for i in 0..n {
            e += exponent[i] * la[i];
        }
        let mut phase = 0.0;
        for (k, &idx) in simple_index.iter().enumerate() {
            phase -= xi[k] * x[idx];
        }
        (e + Complex64::new(0.0, phase)).exp()
    };
    if n == 3 {
        // Coordinates (n12, n13, n23) are permuted so that n13 is innermost;
        // the integrand has ridges at n13 = 0 and n13 = n12·n23.
        return integrate_rd_split_last(
            quad,
            3,
            |o: &[f64]| vec![0.0, o[0] * o[1]],
            move |p: &[f64]| integrand(&[p[0], p[2], p[1]]),
        );
    }
    integrate_rd(quad, rs.dim_n(), integrand)
}

/// One row of the Beuzart-Plessis probe output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub radius: f64,
    pub partial_integral: f64,
    /// Difference from the previous row (from 0 for the first row).
    pub cauchy_diff: f64,
}

/// Partial integrals of a(n)^{−(1−ε)ρ} over ker χ ∩ N, truncated to the
/// square |s|, |t| ≤ r in the chart exp(s·v + t·E₁₃) (SL(3)); v spans the
/// null direction of dχ in span(E₁₂, E₂₃).
///
/// SL(2): ker χ ∩ N is trivial and every partial integral is 1 (point mass).
/// ε = 1 is accepted as the divergent boundary case.
pub fn beuzart_plessis_probe(
    rs: &RootSystem,
    chi: &CharacterData,
    epsilon: f64,
    radii: &[f64],
) -> Result<Vec<ProbeRow>> {
    Error::check_dim(rs.rank(), chi.xi.len())?;
    if !chi.is_generic() {
        return Err(Error::refused("Beuzart-Plessis probe needs a generic character"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("probe radii must be positive"));
    }
    let values: Vec<f64> = match rs.n {
        2 => radii.iter().map(|_| 1.0).collect(),
        3 => {
            let norm = (chi.xi[0].powi(2) + chi.xi[1].powi(2)).sqrt();
            let v = [chi.xi[1] / norm, -chi.xi[0] / norm];
            let weight = rs.rho.scale(-(1.0 - epsilon));
            radii.iter().map(|&r| probe_square(&v, &weight.0, r)).collect()
        }
        _ => return Err(Error::Unsupported("Beuzart-Plessis probe implemented for n = 2, 3".into())),
    };
    let mut rows = Vec::with_capacity(radii.len());
    let mut prev = 0.0;
    for (&radius, &value) in radii.iter().zip(&values) {
        rows.push(ProbeRow { radius, partial_integral: value, cauchy_diff: value - prev });
        prev = value;
    }
    Ok(rows)
}

/// Breakpoints 0, ±2^k·(1/8), …, ±r for composite panels on [−r, r].
fn geometric_breakpoints(r: f64) -> Vec<f64> {
    let mut pos = vec![0.0];
    let mut b = 0.125;
    while b < r {
        pos.push(b);
        b *= 2.0;
    }
    pos.push(r);
    let mut all: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    all.extend(pos.iter().skip(1));
    all
}

fn composite_rule(r: f64) -> (Vec<f64>, Vec<f64>) {
    let bp = geometric_breakpoints(r);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for w in bp.windows(2) {
        let (x, wt) = gauss_legendre_on(24, w[0], w[1]);
        xs.extend(x);
        ws.extend(wt);
    }
    (xs, ws)
}

fn probe_square(v: &[f64; 2], weight: &[f64], r: f64) -> f64 {
    let (xs, ws) = composite_rule(r);
    let mut terms = Vec::with_capacity(xs.len() * xs.len());
    for (&s, &wsi) in xs.iter().zip(&ws) {
        for (&t, &wti) in xs.iter().zip(&ws) {
            // exp(X) = I + X + X²/2 with X = s·v₁E₁₂ + s·v₂E₂₃ + t·E₁₃.
            let n12 = s * v[0];
            let n23 = s * v[1];
            let n13 = t + 0.5 * s * s * v[0] * v[1];
            let mut la = [0.0; MAX_KERNEL_N];
            log_a_upper_unipotent(3, &[n12, n13, n23], &mut la);
            let e: f64 = (0..3).map(|i| weight[i] * la[i]).sum();
            terms.push(wsi * wti * e.exp());
        }
    }
    pairwise_sum(&terms)
}

/// A random element of SL(n) (or GL(n)⁺): i.i.d. standard normal entries,
/// first row negated if det < 0, then rescaled to det 1 for SL.
pub fn sample_group_element<R: Rng + ?Sized>(n: usize, variant: Variant, rng: &mut R) -> GroupElement {
    loop {
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut det = m.determinant();
        if det.abs() < 1e-6 {
            continue;
        }
        if det < 0.0 {
            for j in 0..n {
                m[(0, j)] = -m[(0, j)];
            }
            det = -det;
        }
        return match variant {
            Variant::SL => {
                let s = det.powf(-1.0 / n as f64);
                GroupElement { entries: m * s, tag: GroupTag::SL }
            }
            Variant::GL => GroupElement { entries: m, tag: GroupTag::GLPlus },
        };
    }
}

/// Both sides (in log form) of a(xg)^{−ρ} ≤ |g|^{1/2}·a(x)^{−ρ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaSample {
    pub log_lhs: f64,
    pub log_rhs: f64,
}

impl LemmaSample {
    /// lhs ≤ rhs·(1 + slack).
    pub fn holds(&self, slack: f64) -> bool {
        self.log_lhs <= self.log_rhs + slack.ln_1p()
    }
}

pub fn growth_lemma_sample(rs: &RootSystem, x: &GroupElement, g: &GroupElement) -> Result<LemmaSample> {
    let rho = &rs.rho.0;
    let la_xg = log_a(&x.mul(g))?;
    let la_x = log_a(x)?;
    let log_lhs = -rho.iter().zip(&la_xg).map(|(r, a)| r * a).sum::<f64>();
    let log_rhs = 0.5 * norm_bars(g)?.ln() - rho.iter().zip(&la_x).map(|(r, a)| r * a).sum::<f64>();
    Ok(LemmaSample { log_lhs, log_rhs })
}
