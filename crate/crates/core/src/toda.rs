//! The quantum and classical non-periodic Toda lattice.
//!
//! Grid functions live on uniform tensor grids in orthonormal coordinates of
//! 𝔞 (see [`crate::algebra::CartanFrame`]). All derivatives are 5-point
//! central differences; cells within two points of the boundary (per stencil
//! application) are marked invalid.
//!
//! L_c f = −½ Σ ∂²_{t_i} f + Σ_{α∈Δ} q_α e^{2α(h)} f.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{CartanFrame, DualVector, RootSystem, Variant};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Largest admissible grid spacing for the operators below.
pub const DEFAULT_MAX_SPACING: f64 = 1e-2;
/// Default spacing used by residual checks.
pub const DEFAULT_SPACING: f64 = 1e-3;
/// Minimum number of points per axis.
pub const MIN_AXIS_POINTS: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct TodaOperator {
    pub rs: RootSystem,
    pub couplings: Vec<f64>,
    pub frame: CartanFrame,
    pub max_spacing: f64,
}

impl TodaOperator {
    pub fn new(rs: &RootSystem, couplings: &[f64]) -> Result<Self> {
        Error::check_dim(rs.rank(), couplings.len())?;
        if couplings.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
            return Err(Error::invalid("Toda couplings must be finite and nonnegative"));
        }
        Ok(TodaOperator { rs: rs.clone(), couplings: couplings.to_vec(), frame: rs.frame(), max_spacing: DEFAULT_MAX_SPACING })
    }

    /// Σ q_α e^{2α(h)} at frame coordinates `t`.
    pub fn potential(&self, t: &[f64]) -> f64 {
        let h = self.frame.to_ambient(t);
        self.rs.simple_roots.iter().zip(&self.couplings).map(|(a, q)| q * (2.0 * a.eval(&h)).exp()).sum()
    }

    /// L_c f at a single point from function values, 5-point stencils with
    /// step `spacing` along each frame axis.
    pub fn apply_at<F: Fn(&[f64]) -> Complex64>(&self, f: &F, t: &[f64], spacing: f64) -> Complex64 {
        let mut p = t.to_vec();
        let centre = f(t);
        let mut lap = Complex64::new(0.0, 0.0);
        for i in 0..t.len() {
            let mut v = [Complex64::new(0.0, 0.0); 5];
            for (k, off) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
                p[i] = t[i] + off * spacing;
                v[if k < 2 { k } else { k + 1 }] = f(&p);
            }
            p[i] = t[i];
            v[2] = centre;
            lap += second_diff(&v, spacing);
        }
        -0.5 * lap + self.potential(t) * centre
    }
}

/// Eigenvalue of L_c on M_λ: −½(λ, λ). For λ = iν this is ‖ν‖²/2.
pub fn toda_eigenvalue(lambda_sq: Complex64) -> Complex64 {
    -0.5 * lambda_sq
}

fn second_diff(v: &[Complex64; 5], h: f64) -> Complex64 {
    (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h)
}

fn first_diff(v: &[Complex64; 5], h: f64) -> Complex64 {
    (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h)
}

/// Samples on a uniform tensor grid, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
    pub values: Vec<Complex64>,
    /// False on cells where a stencil reached past the boundary.
    pub valid: Vec<bool>,
}

impl GridFunction {
    pub fn sample<F>(origin: &[f64], spacing: &[f64], shape: &[usize], exec: Execution, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        if origin.len() != spacing.len() || origin.len() != shape.len() || origin.is_empty() {
            return Err(Error::invalid("grid origin, spacing and shape must have the same positive length"));
        }
        if spacing.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        let total: usize = shape.iter().product();
        let grid = GridFunction {
            origin: origin.to_vec(),
            spacing: spacing.to_vec(),
            shape: shape.to_vec(),
            values: Vec::new(),
            valid: vec![true; total],
        };
        let values = exec::map_range(exec, total, |flat| f(&grid.point(flat)));
        Ok(GridFunction { values, ..grid })
    }

    /// A cube grid of `points` per axis centred at `centre`.
    pub fn centred<F>(centre: &[f64], spacing: f64, points: usize, exec: Execution, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let half = (points - 1) as f64 / 2.0 * spacing;
        let origin: Vec<f64> = centre.iter().map(|c| c - half).collect();
        let d = centre.len();
        GridFunction::sample(&origin, &vec![spacing; d], &vec![points; d], exec, f)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(d, &i)| self.origin[d] + i as f64 * self.spacing[d]).collect()
    }

    fn with_values(&self, values: Vec<Complex64>, valid: Vec<bool>) -> GridFunction {
        GridFunction { origin: self.origin.clone(), spacing: self.spacing.clone(), shape: self.shape.clone(), values, valid }
    }

    /// Pointwise map of values with access to the point.
    pub fn map<F: Fn(&[f64], Complex64) -> Complex64>(&self, f: F) -> GridFunction {
        let values = (0..self.len()).map(|k| f(&self.point(k), self.values[k])).collect();
        self.with_values(values, self.valid.clone())
    }

    /// Max |value| over valid cells.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().zip(&self.valid).filter(|(_, v)| **v).map(|(x, _)| x.norm()).fold(0.0, f64::max)
    }

    /// Max |self − other| over cells valid in both.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        (0..self.len())
            .filter(|&k| self.valid[k] && other.valid[k])
            .map(|k| (self.values[k] - other.values[k]).norm())
            .fold(0.0, f64::max)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    fn check_operator_grid(&self, max_spacing: f64) -> Result<()> {
        if self.shape.iter().any(|&n| n < MIN_AXIS_POINTS) {
            return Err(Error::invalid(format!("grid needs at least {MIN_AXIS_POINTS} points per axis")));
        }
        if let Some(h) = self.spacing.iter().find(|h| **h > max_spacing) {
            return Err(Error::refused(format!("grid spacing {h} exceeds the stencil limit {max_spacing}")));
        }
        Ok(())
    }

    /// 5-point stencil along `axis`: `second` selects ∂² over ∂.
    fn stencil(&self, axis: usize, second: bool) -> GridFunction {
        let n = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        let h = self.spacing[axis];
        let mut values = vec![Complex64::new(0.0, 0.0); self.len()];
        let mut valid = self.valid.clone();
        for (flat, out) in values.iter_mut().enumerate() {
            let i = (flat / stride) % n;
            if i < 2 || i + 2 >= n {
                valid[flat] = false;
                continue;
            }
            let mut v = [Complex64::new(0.0, 0.0); 5];
            let mut ok = true;
            for (k, slot) in v.iter_mut().enumerate() {
                let idx = flat + k * stride - 2 * stride;
                *slot = self.values[idx];
                ok &= self.valid[idx];
            }
            valid[flat] &= ok;
            *out = if second { second_diff(&v, h) } else { first_diff(&v, h) };
        }
        self.with_values(values, valid)
    }

    fn combine(&self, other: &GridFunction, a: Complex64, b: Complex64) -> GridFunction {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        let valid = self.valid.iter().zip(&other.valid).map(|(x, y)| *x && *y).collect();
        self.with_values(values, valid)
    }

    /// Σ_i ∂²_i.
    pub fn laplacian(&self) -> GridFunction {
        let mut acc = self.with_values(vec![Complex64::new(0.0, 0.0); self.len()], self.valid.clone());
        for axis in 0..self.dim() {
            acc = acc.combine(&self.stencil(axis, true), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        }
        acc
    }

    /// Directional derivative Σ_i v_i ∂_i.
    pub fn directional(&self, v: &[f64]) -> GridFunction {
        let mut acc = self.with_values(vec![Complex64::new(0.0, 0.0); self.len()], self.valid.clone());
        for (axis, &c) in v.iter().enumerate() {
            if c != 0.0 {
                acc = acc.combine(&self.stencil(axis, false), Complex64::new(1.0, 0.0), Complex64::new(c, 0.0));
            }
        }
        acc
    }
}

/// Max-residual report shared by the identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    /// max residual / max |f| (0 when f vanishes).
    pub relative_residual: f64,
    pub grid: Vec<usize>,
    pub spacing: Vec<f64>,
    pub stencil: String,
    /// Only for the radial Casimir check with a spectral parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_residual: Option<f64>,
}

fn report(f: &GridFunction, diff: f64, eigen: Option<f64>) -> ResidualReport {
    let scale = f.max_abs();
    ResidualReport {
        max_residual: diff,
        relative_residual: if scale > 0.0 { diff / scale } else { 0.0 },
        grid: f.shape.clone(),
        spacing: f.spacing.clone(),
        stencil: "5-point".into(),
        eigen_residual: eigen,
    }
}

pub fn apply_toda(op: &TodaOperator, f: &GridFunction) -> Result<GridFunction> {
    Error::check_dim(op.frame.dim(), f.dim())?;
    f.check_operator_grid(op.max_spacing)?;
    let lap = f.laplacian();
    let out = lap.combine(f, Complex64::new(-0.5, 0.0), Complex64::new(0.0, 0.0));
    let values = (0..f.len()).map(|k| out.values[k] + op.potential(&f.point(k)) * f.values[k]).collect();
    Ok(out.with_values(values, out.valid.clone()))
}

fn rho_coords(rs: &RootSystem, frame: &CartanFrame) -> Vec<f64> {
    frame.coords_of(&rs.rho.0)
}

/// e^{ρ}·Σ∂²(e^{−ρ}f) against (ρ,ρ)f − 2∂_{H_ρ}f + Σ∂²f.
pub fn conjugation_identity_check(rs: &RootSystem, f: &GridFunction) -> Result<ResidualReport> {
    let frame = rs.frame();
    Error::check_dim(frame.dim(), f.dim())?;
    f.check_operator_grid(DEFAULT_MAX_SPACING)?;
    let rho = rho_coords(rs, &frame);
    let rho_sq: f64 = rho.iter().map(|x| x * x).sum();
    let rho_at = |t: &[f64]| -> f64 { rho.iter().zip(t).map(|(a, b)| a * b).sum() };
    let twisted = f.map(|t, v| v * (-rho_at(t)).exp());
    let lhs = twisted.laplacian().map(|t, v| v * rho_at(t).exp());
    let lap = f.laplacian();
    let grad = f.directional(&rho);
    let rhs = lap.combine(&grad, Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0)).combine(
        f,
        Complex64::new(1.0, 0.0),
        Complex64::new(rho_sq, 0.0),
    );
    Ok(report(f, lhs.max_abs_diff(&rhs), None))
}

/// a^ρ(−2L_c)(a^{−ρ}f) against a^ρ(Σh_i² − 2Σ_α ξ_α² a^{2α})(a^{−ρ}f), with
/// L_c built from couplings q_α = ξ_α² and the bracket from ξ directly.
///
/// With `nu`, f is expected to be a^ρ·K_ν and the report also carries
/// max|LHS + ‖ν‖² f| / max|f| (the Casimir eigenvalue check).
pub fn radial_casimir_check(
    rs: &RootSystem,
    xi: &[f64],
    f: &GridFunction,
    nu: Option<&DualVector>,
) -> Result<ResidualReport> {
    Error::check_dim(rs.rank(), xi.len())?;
    let couplings: Vec<f64> = xi.iter().map(|x| x * x).collect();
    let op = TodaOperator::new(rs, &couplings)?;
    Error::check_dim(op.frame.dim(), f.dim())?;
    let rho = rho_coords(rs, &op.frame);
    let rho_at = |t: &[f64]| -> f64 { rho.iter().zip(t).map(|(a, b)| a * b).sum() };
    let twisted = f.map(|t, v| v * (-rho_at(t)).exp());
    let lhs = apply_toda(&op, &twisted)?.map(|t, v| -2.0 * v * rho_at(t).exp());
    let lap = twisted.laplacian();
    let rhs_vals: Vec<Complex64> = (0..f.len())
        .map(|k| {
            let t = f.point(k);
            let h = op.frame.to_ambient(&t);
            let pot: f64 = rs.simple_roots.iter().zip(xi).map(|(a, x)| x * x * (2.0 * a.eval(&h)).exp()).sum();
            (lap.values[k] - 2.0 * pot * twisted.values[k]) * rho_at(&t).exp()
        })
        .collect();
    let rhs = lap.with_values(rhs_vals, lap.valid.clone());
    let eigen = nu.map(|nu| {
        let nn: f64 = nu.0.iter().map(|x| x * x).sum();
        let target = f.map(|_, v| -nn * v);
        let scale = f.max_abs();
        if scale > 0.0 {
            lhs.max_abs_diff(&target) / scale
        } else {
            0.0
        }
    });
    Ok(report(f, lhs.max_abs_diff(&rhs), eigen))
}

fn check_gl(rs: &RootSystem) -> Result<()> {
    if rs.variant != Variant::GL {
        return Err(Error::Unsupported(
            "D₁ = Σ∂/∂q_j acts along the centre of 𝔤𝔩(n); on SL(n) it is identically zero".into(),
        ));
    }
    Ok(())
}

/// D₁f = Σ_j ∂f/∂h_j as a 5-point difference along the diagonal (1,…,1).
/// Needs equal spacing on every axis so the diagonal shifts stay on the grid.
pub fn d1_apply(rs: &RootSystem, f: &GridFunction) -> Result<GridFunction> {
    check_gl(rs)?;
    Error::check_dim(rs.n, f.dim())?;
    f.check_operator_grid(DEFAULT_MAX_SPACING)?;
    let h = f.spacing[0];
    if f.spacing.iter().any(|s| (s - h).abs() > 1e-15 * h) {
        return Err(Error::invalid("D₁ needs equal spacing on every axis"));
    }
    let step: isize = f.shape.iter().enumerate().map(|(d, _)| f.shape[d + 1..].iter().product::<usize>() as isize).sum();
    let mut values = vec![Complex64::new(0.0, 0.0); f.len()];
    let mut valid = f.valid.clone();
    for flat in 0..f.len() {
        let idx = f.multi_index(flat);
        if idx.iter().zip(&f.shape).any(|(&i, &n)| i < 2 || i + 2 >= n) {
            valid[flat] = false;
            continue;
        }
        let mut v = [Complex64::new(0.0, 0.0); 5];
        let mut ok = true;
        for (k, slot) in v.iter_mut().enumerate() {
            let j = (flat as isize + (k as isize - 2) * step) as usize;
            *slot = f.values[j];
            ok &= f.valid[j];
        }
        valid[flat] &= ok;
        values[flat] = first_diff(&v, h);
    }
    Ok(f.with_values(values, valid))
}

/// σ(D₁)(iν) = iΣν_j.
pub fn d1_symbol(nu: &DualVector) -> Complex64 {
    Complex64::new(0.0, nu.0.iter().sum())
}

/// max |D₁L_c f − L_c D₁f| over the doubly-interior cells.
pub fn d1_commutator(op: &TodaOperator, f: &GridFunction) -> Result<ResidualReport> {
    let rs = &op.rs;
    let a = d1_apply(rs, &apply_toda(op, f)?)?;
    let b = apply_toda(op, &d1_apply(rs, f)?)?;
    Ok(report(f, a.max_abs_diff(&b), None))
}

/// A random band-limited test function Σ_k a_k cos(ω_k·t + φ_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandLimited {
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<Vec<f64>>,
    pub phases: Vec<f64>,
}

impl BandLimited {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, terms: usize, max_frequency: f64) -> Self {
        let mut amplitudes = Vec::with_capacity(terms);
        let mut frequencies = Vec::with_capacity(terms);
        let mut phases = Vec::with_capacity(terms);
        for _ in 0..terms {
            amplitudes.push(rng.gen_range(-1.0..1.0));
            frequencies.push((0..dim).map(|_| rng.gen_range(-max_frequency..max_frequency)).collect());
            phases.push(rng.gen_range(0.0..std::f64::consts::TAU));
        }
        BandLimited { amplitudes, frequencies, phases }
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.frequencies)
            .zip(&self.phases)
            .map(|((a, w), p)| a * (w.iter().zip(t).map(|(x, y)| x * y).sum::<f64>() + p).cos())
            .sum()
    }
}

/// Positions and momenta of the classical lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// H(p,q) = ½Σp_i² + Σ c_i² e^{2(q_i − q_{i+1})}; `couplings` holds c_i².
pub fn hamiltonian(state: &ClassicalState, couplings: &[f64]) -> f64 {
    let kinetic: f64 = 0.5 * state.p.iter().map(|p| p * p).sum::<f64>();
    let potential: f64 = couplings.iter().enumerate().map(|(i, c)| c * (2.0 * (state.q[i] - state.q[i + 1])).exp()).sum();
    kinetic + potential
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    /// max |H(t) − H(0)| / |H(0)|.
    pub fn relative_energy_drift(&self) -> f64 {
        let h0 = self.rows[0].energy;
        let scale = h0.abs().max(f64::MIN_POSITIVE);
        self.rows.iter().map(|r| (r.energy - h0).abs() / scale).fold(0.0, f64::max)
    }

    /// max |Σp(t) − Σp(0)|.
    pub fn momentum_drift(&self) -> f64 {
        let p0: f64 = self.rows[0].p.iter().sum();
        self.rows.iter().map(|r| (r.p.iter().sum::<f64>() - p0).abs()).fold(0.0, f64::max)
    }
}

const EXP_LIMIT: f64 = 700.0;

fn forces(q: &[f64], couplings: &[f64], step: usize) -> Result<Vec<f64>> {
    let mut f = vec![0.0; q.len()];
    for (i, c) in couplings.iter().enumerate() {
        let x = 2.0 * (q[i] - q[i + 1]);
        if x > EXP_LIMIT {
            return Err(Error::Overflow {
                step,
                detail: format!("e^{{2(q_{} − q_{})}} with exponent {x:.1} overflows", i + 1, i + 2),
            });
        }
        let v = c * x.exp();
        f[i] -= 2.0 * v;
        f[i + 1] += 2.0 * v;
    }
    Ok(f)
}

/// Fourth-order symplectic flow: Yoshida's triple-jump composition of the
/// kick-drift-kick leapfrog. Rows are recorded every `record_every` steps
/// (and at the end).
pub fn classical_flow(
    state: &ClassicalState,
    couplings: &[f64],
    dt: f64,
    steps: usize,
    record_every: usize,
) -> Result<Trajectory> {
    let n = state.q.len();
    if state.p.len() != n || n == 0 {
        return Err(Error::invalid("positions and momenta must have the same positive length"));
    }
    Error::check_dim(n - 1, couplings.len())?;
    if couplings.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::invalid("classical couplings must be positive"));
    }
    if !(dt.is_finite() && dt > 0.0) || !(dt * steps as f64).is_finite() {
        return Err(Error::invalid("time step must be positive and finite"));
    }
    let cbrt2 = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - cbrt2);
    let w0 = -cbrt2 * w1;
    let substeps = [w1, w0, w1];
    let every = record_every.max(1);
    let mut q = state.q.clone();
    let mut p = state.p.clone();
    let mut rows = vec![TrajectoryRow { t: 0.0, q: q.clone(), p: p.clone(), energy: hamiltonian(state, couplings) }];
    let mut f = forces(&q, couplings, 0)?;
    for step in 1..=steps {
        for w in substeps {
            let h = w * dt;
            for i in 0..n {
                p[i] += 0.5 * h * f[i];
                q[i] += h * p[i];
            }
            f = forces(&q, couplings, step)?;
            for i in 0..n {
                p[i] += 0.5 * h * f[i];
            }
        }
        if step % every == 0 || step == steps {
            let s = ClassicalState { q: q.clone(), p: p.clone() };
            rows.push(TrajectoryRow { t: step as f64 * dt, energy: hamiltonian(&s, couplings), q: s.q, p: s.p });
        }
    }
    Ok(Trajectory { rows })
}
