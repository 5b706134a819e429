use std::cell::Cell;

use serde::Serialize;
use wtoda_core::algebra::{build_root_system, DualVector, SpectralParam, Variant};
use wtoda_core::plancherel::{c_function, fit_growth_bound, mu_closed_form_type_a, GrowthFit, PlancherelDensity};
use wtoda_core::toda::{classical_flow, ClassicalState, TodaOperator};
use wtoda_core::transform::{
    ball_points, forward_transform, inverse_transform, theoretical_calibration, TestFunction, TransformSpec,
};
use wtoda_core::whittaker::{default_order, EvaluatorFactory};
use wtoda_core::Complex64;

use crate::config::{RunConfig, DEFAULT_TRANSFORM_XI};
use crate::output::{csv_artifact, json_artifact, num, opt, Artifact};
use crate::{CliError, CliResult};

fn ambient_headers(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn fmt_vec(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(","))
}

/// Tensor grid over [−r, r]^dim with `per_dim` points per axis.
fn box_grid(dim: usize, radius: f64, per_dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if per_dim == 1 {
        vec![0.0]
    } else {
        (0..per_dim).map(|k| -radius + 2.0 * radius * k as f64 / (per_dim - 1) as f64).collect()
    };
    let mut pts = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts.iter().flat_map(|p| axis.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    pts
}

#[derive(Debug, Serialize)]
struct DensityFit {
    group: String,
    rows: usize,
    fit: GrowthFit,
}

/// (ν, c(iν), μ(ν) = 1/|c(iν)|², μ / closed form) on a grid in the root span.
pub fn density(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    let rs = cfg.group.root_system();
    let n = rs.n;
    let pd = PlancherelDensity::new(rs.clone(), 1.0)?;
    let nus: Vec<Vec<f64>> = match &cfg.density.nu {
        Some(list) => list.clone(),
        None => {
            let span = build_root_system(n, Variant::SL)?.frame();
            let d = &cfg.density;
            if n == 2 {
                // ν = s·(1, −1): s = (ν,α)/(α,α) runs over [0, radius].
                (0..d.points_per_dim).map(|k| d.radius * k as f64 / (d.points_per_dim - 1) as f64).map(|s| vec![s, -s]).collect()
            } else {
                box_grid(n - 1, d.radius, d.points_per_dim).iter().map(|t| span.to_ambient(t)).collect()
            }
        }
    };
    let mut rows = Vec::with_capacity(nus.len());
    let mut samples = Vec::new();
    for nu in &nus {
        let dv = DualVector(nu.clone());
        let c = match c_function(&rs, &SpectralParam::unitary(&dv)) {
            Ok(c) if c.is_finite() => Some(c),
            Ok(_) | Err(wtoda_core::Error::Pole { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let mu = pd.mu(&dv)?;
        let closed = mu_closed_form_type_a(&rs, &dv);
        let ratio = (closed > 0.0 && !mu.clamped).then(|| mu.value / closed);
        let mut row: Vec<String> = nu.iter().map(|x| num(*x)).collect();
        row.extend([opt(c.map(|c| c.re)), opt(c.map(|c| c.im)), num(mu.value), opt(ratio)]);
        rows.push(row);
        samples.push(dv);
    }
    let mut headers = ambient_headers("nu", n);
    headers.extend(["c_re", "c_im", "mu", "mu_over_closed_form"].map(String::from));
    let fit = fit_growth_bound(&pd, &samples)?;
    Ok(vec![
        csv_artifact("density.csv", &[("command", "density".into()), ("group", format!("{:?}", cfg.group))], &headers, &rows)?,
        json_artifact("density_fit.json", &DensityFit { group: format!("{:?}", cfg.group), rows: rows.len(), fit })?,
    ])
}

#[derive(Debug, Serialize)]
struct WhittakerSummary {
    group: String,
    nu: Vec<f64>,
    method: String,
    order: usize,
    experimental: bool,
    scale: f64,
    max_abs: f64,
    max_eig_residual: f64,
    residual_rows: usize,
    clamped: usize,
}

/// K_ν on a grid of orthonormal 𝔞-coordinates with pointwise eigen residuals
/// |L_cK − ½‖ν‖²K|(t) / max|K|.
pub fn whittaker(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    let w = cfg.whittaker.as_ref().ok_or_else(|| CliError::Config("whittaker section missing".into()))?;
    let rs = cfg.group.root_system();
    let couplings = cfg.couplings_or(1.0);
    let mut factory = EvaluatorFactory::new(&rs, &couplings)?.with_order(w.order.unwrap_or(default_order(rs.rank())));
    if let Some(m) = w.method {
        factory = factory.with_method(m);
    }
    let ev = factory.build(&DualVector(w.nu.clone()))?;
    let op = TodaOperator::new(&rs, &couplings)?;
    let dim = rs.frame().dim();
    let pts = box_grid(dim, w.h_radius, w.h_points_per_dim);
    let eig = 0.5 * ev.nu.0.iter().map(|x| x * x).sum::<f64>();
    let values: Vec<_> = pts.iter().map(|t| ev.eval_coords(t)).collect::<Result<_, _>>()?;
    let touched_clamp = Cell::new(false);
    let f = |t: &[f64]| match ev.eval_coords(t) {
        Ok(v) => {
            touched_clamp.set(touched_clamp.get() || v.clamped);
            v.value
        }
        Err(_) => Complex64::new(f64::NAN, 0.0),
    };
    // Stencils that reach a clamped value have no meaningful residual.
    let residuals: Vec<Option<f64>> = pts
        .iter()
        .zip(&values)
        .map(|(t, v)| {
            touched_clamp.set(v.clamped);
            let r = (op.apply_at(&f, t, w.spacing) - eig * v.value).norm();
            (!touched_clamp.get()).then_some(r)
        })
        .collect();
    let max_abs = values.iter().map(|v| v.value.norm()).fold(0.0, f64::max);
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let experimental = rs.rank() >= 2;
    let method = serde_json::to_value(ev.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let rows: Vec<Vec<String>> = pts
        .iter()
        .zip(&values)
        .zip(&residuals)
        .map(|((t, v), r)| {
            let mut row: Vec<String> = t.iter().map(|x| num(*x)).collect();
            row.extend([num(v.value.re), num(v.value.im), num(v.error), v.clamped.to_string(), opt(r.map(|r| r / scale))]);
            row
        })
        .collect();
    let mut headers = ambient_headers("h", dim);
    headers.extend(["k_re", "k_im", "error", "clamped", "eig_residual"].map(String::from));
    let meta = [
        ("command", "whittaker".to_string()),
        ("group", format!("{:?}", cfg.group)),
        ("nu", fmt_vec(&w.nu)),
        ("method", method.clone()),
        ("experimental", experimental.to_string()),
    ];
    let summary = WhittakerSummary {
        group: format!("{:?}", cfg.group),
        nu: w.nu.clone(),
        method,
        order: ev.order,
        experimental,
        scale: ev.scale,
        max_abs,
        max_eig_residual: residuals.iter().flatten().fold(0.0f64, |a, r| a.max(r / scale)),
        residual_rows: residuals.iter().flatten().count(),
        clamped: values.iter().filter(|v| v.clamped).count(),
    };
    Ok(vec![csv_artifact("whittaker.csv", &meta, &headers, &rows)?, json_artifact("whittaker_summary.json", &summary)?])
}

#[derive(Debug, Serialize)]
struct TransformSummary {
    group: String,
    u: String,
    xi: Vec<f64>,
    calibration_constant: f64,
    spec: TransformSpec,
    max_rel_err: f64,
    flagged: usize,
    skipped: usize,
    clamped_evaluations: usize,
}

/// Forward transform of a gallery function and its reconstruction on a ball.
pub fn transform(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    if cfg.group.variant() != Variant::SL {
        return Err(CliError::Refused("the transform works on the SL(n) Cartan subspace; use SL2 or SL3".into()));
    }
    let rs = cfg.group.root_system();
    let xi = cfg.xi_or(DEFAULT_TRANSFORM_XI);
    let couplings: Vec<f64> = xi.iter().map(|x| x * x).collect();
    let factory = EvaluatorFactory::new(&rs, &couplings)?;
    let dim = rs.frame().dim();
    let tc = &cfg.transform;
    let spec = tc.spec.clone().unwrap_or_else(|| TransformSpec::default_for(dim));
    let c = tc.calibration.unwrap_or_else(|| theoretical_calibration(&rs));
    let pd = PlancherelDensity::new(rs.clone(), c)?;
    let u = TestFunction::new(tc.u, &rs);
    let coeffs = forward_transform(&u, &factory, &spec)?;
    let pts = ball_points(dim, tc.eval_radius, tc.eval_points_per_dim);
    let rec = inverse_transform(&coeffs, &factory, &pd, &pts)?;
    let exact: Vec<Complex64> = pts.iter().map(|t| u.eval(t)).collect();
    let scale = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = rec.values.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let gallery = serde_json::to_value(tc.u).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let meta = [("command", "transform".to_string()), ("group", format!("{:?}", cfg.group)), ("u", gallery.clone())];

    let mut headers = ambient_headers("nu", dim);
    headers.extend(["coeff_re", "coeff_im", "error"].map(String::from));
    let rows: Vec<Vec<String>> = coeffs
        .nu
        .nodes
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut row: Vec<String> = t.iter().map(|x| num(*x)).collect();
            row.extend([num(coeffs.values[k].re), num(coeffs.values[k].im), num(coeffs.errors[k])]);
            row
        })
        .collect();
    let mut rheaders = ambient_headers("h", dim);
    rheaders.extend(["u_re", "u_im", "error", "exact"].map(String::from));
    let rrows: Vec<Vec<String>> = pts
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut row: Vec<String> = t.iter().map(|x| num(*x)).collect();
            row.extend([num(rec.values[k].re), num(rec.values[k].im), num(rec.errors[k]), num(exact[k].re)]);
            row
        })
        .collect();
    let summary = TransformSummary {
        group: format!("{:?}", cfg.group),
        u: gallery,
        xi,
        calibration_constant: c,
        spec,
        max_rel_err: if scale > 0.0 { diff / scale } else { diff },
        flagged: coeffs.flagged.len(),
        skipped: coeffs.skipped.len(),
        clamped_evaluations: coeffs.clamped_evaluations,
    };
    Ok(vec![
        csv_artifact("transform.csv", &meta, &headers, &rows)?,
        csv_artifact("reconstruction.csv", &meta, &rheaders, &rrows)?,
        json_artifact("transform_summary.json", &summary)?,
    ])
}

#[derive(Debug, Serialize)]
struct TodaSummary {
    group: String,
    couplings: Vec<f64>,
    dt: f64,
    steps: usize,
    relative_energy_drift: f64,
    momentum_drift: f64,
}

/// Classical Toda trajectory with energy bookkeeping.
pub fn toda(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    let t = cfg.toda.as_ref().ok_or_else(|| CliError::Config("toda section missing".into()))?;
    let couplings = cfg.couplings_or(1.0);
    let traj = classical_flow(&ClassicalState { q: t.q.clone(), p: t.p.clone() }, &couplings, t.dt, t.steps, t.record_every)?;
    let n = t.q.len();
    let mut headers = vec!["t".to_string()];
    headers.extend(ambient_headers("q", n));
    headers.extend(ambient_headers("p", n));
    headers.push("energy".into());
    let rows: Vec<Vec<String>> = traj
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![num(r.t)];
            row.extend(r.q.iter().chain(&r.p).map(|x| num(*x)));
            row.push(num(r.energy));
            row
        })
        .collect();
    let summary = TodaSummary {
        group: format!("{:?}", cfg.group),
        couplings: couplings.clone(),
        dt: t.dt,
        steps: t.steps,
        relative_energy_drift: traj.relative_energy_drift(),
        momentum_drift: traj.momentum_drift(),
    };
    let meta = [("command", "toda".to_string()), ("group", format!("{:?}", cfg.group)), ("couplings", fmt_vec(&couplings))];
    Ok(vec![csv_artifact("toda.csv", &meta, &headers, &rows)?, json_artifact("toda_summary.json", &summary)?])
}
