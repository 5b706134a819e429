//! Quadrature rules shared by the oracles and transforms.
//!
//! * Gauss–Legendre nodes by Newton iteration on the three-term recurrence.
//! * Tanh-sinh on finite intervals (adaptive in the step size).
//! * Sinh-sinh on the real line for algebraically decaying integrands.
//! * Tensor-product integration over ℝ^d with step-halving error estimates.
//!
//! All sums go through [`pairwise_sum`] over values stored in node order.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Pairwise (cascade) summation. Deterministic for a fixed input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre nodes/weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let xs = rule.0.iter().map(|t| mid + half * t).collect();
    let ws = rule.1.iter().map(|w| half * w).collect();
    (xs, ws)
}

/// Composite Gauss–Legendre: `panels` equal panels of `per_panel` nodes on [a, b].
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(panels * per_panel);
    let mut ws = Vec::with_capacity(panels * per_panel);
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let (x, w) = gauss_legendre_on(per_panel, lo, lo + width);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Result of an adaptive one-dimensional rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tanh-sinh quadrature of a real function on a finite interval [a, b].
///
/// The step is halved until two consecutive levels agree to `rel_tol`
/// (relative to the sum of absolute contributions). Endpoint singularities of
/// algebraic type are handled by the double-exponential clustering.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Estimate {
    let half = 0.5 * (b - a);
    let tmax = 6.5;
    let mut h = 0.5;
    let mut evaluations = 0;
    // Level 0: all nodes k*h.
    let node = |t: f64| -> (f64, f64, f64) {
        let s = FRAC_PI_2 * t.sinh();
        let c = s.cosh();
        let x = s.tanh();
        // Distance to the nearer endpoint, computed without cancellation.
        let comp = 1.0 / (c * c) / (1.0 + x.abs());
        let w = FRAC_PI_2 * t.cosh() / (c * c);
        (x, comp, w)
    };
    let eval_at = |t: f64, evals: &mut usize| -> (f64, f64) {
        let (x, comp, w) = node(t);
        if w * half.abs() < 1e-300 {
            return (0.0, 0.0);
        }
        let point = if x >= 0.0 { b - half * comp } else { a + half * comp };
        if point <= a || point >= b {
            return (0.0, 0.0);
        }
        *evals += 1;
        let v = f(point) * w;
        (v, v.abs())
    };
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let kmax = (tmax / h) as i64;
    for k in -kmax..=kmax {
        let (v, av) = eval_at(k as f64 * h, &mut evaluations);
        sum += v;
        abs_sum += av;
    }
    let mut estimate = sum * h * half;
    let mut error = f64::INFINITY;
    for _level in 1..12 {
        h *= 0.5;
        let kmax = (tmax / h) as i64;
        let mut k = -kmax;
        if k % 2 == 0 {
            k += 1;
        }
        while k <= kmax {
            let (v, av) = eval_at(k as f64 * h, &mut evaluations);
            sum += v;
            abs_sum += av;
            k += 2;
        }
        let next = sum * h * half;
        error = (next - estimate).abs();
        estimate = next;
        let scale = abs_sum * h * half.abs();
        if error <= rel_tol * scale.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Estimate { value: estimate, error, evaluations }
}

/// Which one-dimensional rule a tensor-product oracle uses on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "gauss-legendre")]
    GaussLegendre,
    #[serde(rename = "tanh-sinh")]
    TanhSinh,
}

/// Budget for the brute-force oracles over N (JSON:
/// `{rule, radius, nodes_per_dim, tol}`).
///
/// `radius` truncates every coordinate to `[-radius, radius]`. With
/// `gauss-legendre` the box is covered by a plain product rule; with
/// `tanh-sinh` the nodes come from the sinh-sinh map `x = sinh(π/2·sinh τ)`
/// restricted to the same box, which converges exponentially for the
/// algebraically decaying integrands met here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub rule: Rule,
    pub radius: f64,
    pub nodes_per_dim: usize,
    pub tol: f64,
    #[serde(skip, default)]
    pub execution: Execution,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rule: Rule::TanhSinh, radius: 1e6, nodes_per_dim: 80, tol: 1e-8, execution: Execution::default() }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::invalid(format!("quadrature radius must be positive, got {}", self.radius)));
        }
        if self.nodes_per_dim < 4 {
            return Err(Error::invalid("quadrature needs at least 4 nodes per dimension"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        Ok(())
    }

    /// The one-dimensional node set used on every axis.
    pub fn line_rule(&self, nodes: usize) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            Rule::GaussLegendre => gauss_legendre_on(nodes, -self.radius, self.radius),
            Rule::TanhSinh => sinh_sinh_rule(nodes, self.radius),
        }
    }
}

/// Sinh-sinh nodes on the real line, truncated at |x| ≤ radius, with
/// roughly `nodes` points (odd count, symmetric).
pub fn sinh_sinh_rule(nodes: usize, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let tau_max = (radius.asinh() / FRAC_PI_2).asinh();
    let k = (nodes.max(3) - 1) / 2;
    let h = tau_max / k as f64;
    let mut xs = Vec::with_capacity(2 * k + 1);
    let mut ws = Vec::with_capacity(2 * k + 1);
    for j in -(k as i64)..=(k as i64) {
        let t = j as f64 * h;
        let s = FRAC_PI_2 * t.sinh();
        xs.push(s.sinh());
        ws.push(h * FRAC_PI_2 * t.cosh() * s.cosh());
    }
    (xs, ws)
}

/// A tensor-product quadrature value with its step-halving estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadValue {
    pub value: Complex64,
    /// |I(n) − I(n/2)|.
    pub error: f64,
    pub evaluations: usize,
    /// `error <= tol · max(1, |value|)`.
    pub converged: bool,
}

/// Tensor-product integral of `f` over ℝ^dim with the spec's rule, plus a
/// second pass at roughly half the nodes for the error estimate.
pub fn integrate_rd<F>(spec: &QuadratureSpec, dim: usize, f: F) -> Result<QuadValue>
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    spec.validate()?;
    if dim == 0 {
        let v = f(&[]);
        return Ok(QuadValue { value: v, error: 0.0, evaluations: 1, converged: true });
    }
    let fine = product_sum(spec, dim, spec.nodes_per_dim, &f);
    let coarse = product_sum(spec, dim, (spec.nodes_per_dim / 2).max(3), &f);
    let error = (fine.0 - coarse.0).norm();
    let converged = error <= spec.tol * fine.0.norm().max(1.0);
    Ok(QuadValue { value: fine.0, error, evaluations: fine.1 + coarse.1, converged })
}

fn product_sum<F>(spec: &QuadratureSpec, dim: usize, nodes: usize, f: &F) -> (Complex64, usize)
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
{
    let (xs, ws) = spec.line_rule(nodes);
    let m = xs.len();
    let total = m.pow(dim as u32);
    // Parallelize over the outermost axis; each worker sweeps the remaining
    // axes sequentially and returns its partial sum.
    let partials = exec::map_range(spec.execution, m, |i0| {
        let inner = total / m;
        let mut vals = Vec::with_capacity(inner);
        let mut point = vec![0.0; dim];
        point[0] = xs[i0];
        for flat in 0..inner {
            let mut rem = flat;
            let mut w = ws[i0];
            for d in (1..dim).rev() {
                let k = rem % m;
                rem /= m;
                point[d] = xs[k];
                w *= ws[k];
            }
            vals.push(f(&point) * w);
        }
        pairwise_sum_complex(&vals)
    });
    (pairwise_sum_complex(&partials), total)
}

/// Exp-sinh nodes on (0, ∞): offsets d = exp(π/2·sinh τ) ranging over
/// [min, max], uniform in τ.
pub fn exp_sinh_rule(nodes: usize, min: f64, max: f64) -> (Vec<f64>, Vec<f64>) {
    let lo = (min.ln() / FRAC_PI_2).asinh();
    let hi = (max.ln() / FRAC_PI_2).asinh();
    let m = nodes.max(2);
    let h = (hi - lo) / (m - 1) as f64;
    let mut xs = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    for j in 0..m {
        let t = lo + h * j as f64;
        let x = (FRAC_PI_2 * t.sinh()).exp();
        xs.push(x);
        ws.push(h * FRAC_PI_2 * t.cosh() * x);
    }
    (xs, ws)
}

/// Fixed tanh-sinh nodes on [−1, 1] (τ ∈ [−3, 3]).
pub fn tanh_sinh_rule(nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let k = (nodes.max(3) - 1) / 2;
    let h = 3.0 / k as f64;
    let mut xs = Vec::with_capacity(2 * k + 1);
    let mut ws = Vec::with_capacity(2 * k + 1);
    for j in -(k as i64)..=(k as i64) {
        let t = j as f64 * h;
        let s = FRAC_PI_2 * t.sinh();
        let c = s.cosh();
        xs.push(s.tanh());
        ws.push(h * FRAC_PI_2 * t.cosh() / (c * c));
    }
    (xs, ws)
}

/// Nodes for ∫_ℝ along one axis split at sorted breakpoints: exp-sinh
/// half-lines outside, tanh-sinh between consecutive breakpoints.
fn split_line_rule(nodes: usize, radius: f64, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (hx, hw) = exp_sinh_rule(nodes, 1e-12, radius);
    let (tx, tw) = tanh_sinh_rule(nodes);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let first = breaks[0];
    let last = breaks[breaks.len() - 1];
    for (d, w) in hx.iter().zip(&hw) {
        xs.push(first - d);
        ws.push(*w);
    }
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a <= 1e-12 * (1.0 + a.abs()) {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (t, w) in tx.iter().zip(&tw) {
            xs.push(mid + half * t);
            ws.push(half * w);
        }
    }
    for (d, w) in hx.iter().zip(&hw) {
        xs.push(last + d);
        ws.push(*w);
    }
    (xs, ws)
}

/// Iterated integral over ℝ^dim: the first dim−1 axes use the spec's product
/// rule, the last axis is split at `breaks(outer)` (integrand ridges).
pub fn integrate_rd_split_last<F, B>(spec: &QuadratureSpec, dim: usize, breaks: B, f: F) -> Result<QuadValue>
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
    B: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    spec.validate()?;
    if dim < 2 {
        return integrate_rd(spec, dim, f);
    }
    let fine = split_sum(spec, dim, spec.nodes_per_dim, &breaks, &f);
    let coarse = split_sum(spec, dim, (spec.nodes_per_dim / 2).max(3), &breaks, &f);
    let error = (fine.0 - coarse.0).norm();
    let converged = error <= spec.tol * fine.0.norm().max(1.0);
    Ok(QuadValue { value: fine.0, error, evaluations: fine.1 + coarse.1, converged })
}

fn split_sum<F, B>(spec: &QuadratureSpec, dim: usize, nodes: usize, breaks: &B, f: &F) -> (Complex64, usize)
where
    F: Fn(&[f64]) -> Complex64 + Sync + Send,
    B: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    let (xs, ws) = spec.line_rule(nodes);
    let m = xs.len();
    let outer_dim = dim - 1;
    let total_outer = m.pow(outer_dim as u32);
    let partials = exec::map_range(spec.execution, total_outer, |flat| {
        let mut point = vec![0.0; dim];
        let mut rem = flat;
        let mut w = 1.0;
        for d in (0..outer_dim).rev() {
            let k = rem % m;
            rem /= m;
            point[d] = xs[k];
            w *= ws[k];
        }
        let mut b = breaks(&point[..outer_dim]);
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        let (zs, zw) = split_line_rule(nodes, spec.radius, &b);
        let mut vals = Vec::with_capacity(zs.len());
        for (z, wz) in zs.iter().zip(&zw) {
            point[outer_dim] = *z;
            vals.push(f(&point) * (w * wz));
        }
        (pairwise_sum_complex(&vals), vals.len())
    });
    let sums: Vec<Complex64> = partials.iter().map(|p| p.0).collect();
    (pairwise_sum_complex(&sums), partials.iter().map(|p| p.1).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64, 257] {
            let (x, w) = gauss_legendre_on(n, -1.0, 1.0);
            let deg = 2 * n - 1;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((approx - exact).abs() < 1e-13, "n={n}: {approx} vs {exact}");
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let e = tanh_sinh(|t| 1.0 / t.sqrt(), 0.0, 1.0, 1e-14);
        assert!((e.value - 2.0).abs() < 1e-12, "{e:?}");
        let e = tanh_sinh(|t| (1.0 - t * t).sqrt(), -1.0, 1.0, 1e-14);
        assert!((e.value - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn sinh_sinh_integrates_algebraic_decay() {
        let spec = QuadratureSpec { rule: Rule::TanhSinh, radius: 1e8, nodes_per_dim: 120, tol: 1e-10, ..Default::default() };
        let v = integrate_rd(&spec, 1, |x| Complex64::new((1.0 + x[0] * x[0]).powf(-1.5), 0.0)).unwrap();
        assert!((v.value.re - 2.0).abs() < 1e-10, "{v:?}");
        assert!(v.converged);
    }

    #[test]
    fn product_rule_in_two_dimensions() {
        let spec = QuadratureSpec { rule: Rule::GaussLegendre, radius: 7.0, nodes_per_dim: 80, tol: 1e-10, ..Default::default() };
        let v = integrate_rd(&spec, 2, |x| Complex64::new((-x[0] * x[0] - 2.0 * x[1] * x[1]).exp(), 0.0)).unwrap();
        let exact = PI / 2f64.sqrt();
        assert!((v.value.re - exact).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn quadrature_spec_json_shape() {
        let spec: QuadratureSpec =
            serde_json::from_str(r#"{"rule":"gauss-legendre","radius":4.0,"nodes_per_dim":16,"tol":1e-6}"#).unwrap();
        assert_eq!(spec.rule, Rule::GaussLegendre);
        assert!(spec.validate().is_ok());
        let bad = QuadratureSpec { radius: -1.0, ..spec };
        assert!(bad.validate().is_err());
    }
}
