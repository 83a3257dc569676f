//! Quadrature of `Ψ` along polylines in the `Λ` plane, the damped real-axis
//! oracle, and finite-difference checks of the Helmholtz equation.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use std::collections::HashMap;
use std::sync::RwLock;

use crate::action::{Wavefunction, C64};
use crate::critical::{critical_points_at, find_critical_points, CriticalPoint, Region, Zone};
use crate::error::{Error, Result};
use crate::model::{RefractionModel, SourceSpec};
use crate::thimble::{candidate_contours, intersection_coefficients, round_coefficients, with_stokes_retry, Decomposition, OpenPath, TraceOptions};

const I: C64 = C64::new(0.0, 1.0);

// Gauss–Kronrod 7/15 nodes and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7K15 panel on the straight segment `a → b`: (Kronrod value, error estimate).
pub fn gk15<F: Fn(C64) -> Result<C64>>(f: &F, a: C64, b: C64) -> Result<(C64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let f1 = f(c - h * XGK[j])?;
        let f2 = f(c + h * XGK[j])?;
        k += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    Ok((k * h, ((k - g) * h).norm()))
}

/// Adaptive bisection with G7K15 panels.
pub fn gk_adaptive<F: Fn(C64) -> Result<C64>>(f: &F, a: C64, b: C64, abs_tol: f64, depth: u32) -> Result<(C64, f64)> {
    let (v, e) = gk15(f, a, b)?;
    if e <= abs_tol || depth == 0 || (b - a).norm() < 1e-14 * a.norm().max(1.0) {
        return Ok((v, e));
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = gk_adaptive(f, a, m, 0.5 * abs_tol, depth - 1)?;
    let (v2, e2) = gk_adaptive(f, m, b, 0.5 * abs_tol, depth - 1)?;
    Ok((v1 + v2, e1 + e2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    /// Relative accuracy target.
    pub rel_tol: f64,
    /// Stop a path once `ln|Ψ|` falls this far below its running maximum.
    pub log_cut: f64,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-11, log_cut: 46.0, max_depth: 12 }
    }
}

/// Result of a path integral.
#[derive(Clone, Debug, PartialEq)]
pub struct PathIntegral {
    pub value: C64,
    pub error: f64,
    /// Per-factor prefactor logs at the last point reached.
    pub end_logs: Vec<C64>,
    /// Largest `ln|Ψ|` met.
    pub peak: f64,
}

fn chord_pieces(wf: &Wavefunction, a: C64, b: C64) -> usize {
    let len = (b - a).norm();
    let d = wf.prefactor.branch_distance(a).min(wf.prefactor.branch_distance(b));
    let mut n = 1.0f64;
    if let Some(sp) = wf.action.channel_spacing() {
        n = n.max(len / (0.2 * sp));
    }
    if d.is_finite() && d > 0.0 {
        n = n.max(len / (0.5 * d));
    }
    n.ceil().min(1e5) as usize
}

/// `∫ Ψ dΛ` along the polyline `pts`, continuing prefactor branches from
/// `start_logs` at `pts[0]`. With `from_branch_point` the first chord is
/// integrated with `Λ = pts[0] + (pts[1]−pts[0])s²` to absorb an inverse
/// square-root endpoint.
pub fn integrate_polyline(
    wf: &Wavefunction,
    pts: &[C64],
    start_logs: &[C64],
    sheet: i64,
    opts: &QuadOptions,
    from_branch_point: bool,
) -> Result<PathIntegral> {
    let mut logs = start_logs.to_vec();
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut peak = f64::NEG_INFINITY;
    let mut scale = 0.0f64;
    for (j, w) in pts.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        if j == 0 && from_branch_point {
            let d = b - a;
            let ref_logs = wf.prefactor.logs_near(b, &wf.prefactor.base_logs(b)?)?;
            let g = |s: C64| -> Result<C64> {
                let s = s.re;
                if s == 0.0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                let l = a + d * s * s;
                let (lp, _) = wf.log_psi_near(l, &ref_logs, sheet)?;
                Ok(lp.exp() * d * 2.0 * s)
            };
            let (v, e) = gk_adaptive(&g, C64::new(0.0, 0.0), C64::new(1.0, 0.0), 1e-300, 8)?;
            total += v;
            err += e;
            logs = wf.prefactor.logs_near(b, &ref_logs)?;
            peak = peak.max(wf.log_psi_near(b, &logs, sheet)?.0.re);
            scale = scale.max(v.norm());
            continue;
        }
        let n = chord_pieces(wf, a, b);
        for p in 0..n {
            let pa = a + (b - a) * (p as f64 / n as f64);
            let pb = a + (b - a) * ((p + 1) as f64 / n as f64);
            let ref_logs = wf.prefactor.logs_near(pa, &logs)?;
            let (la, _) = wf.log_psi_near(pa, &ref_logs, sheet)?;
            peak = peak.max(la.re);
            let f = |l: C64| -> Result<C64> { Ok(wf.log_psi_near(l, &ref_logs, sheet)?.0.exp()) };
            let (v0, e0) = gk15(&f, pa, pb)?;
            let tol = opts.rel_tol * scale.max(v0.norm()).max(peak.exp() * (pb - pa).norm() * 1e-3);
            let (v, e) = if e0 > tol { gk_adaptive(&f, pa, pb, tol, opts.max_depth)? } else { (v0, e0) };
            total += v;
            err += e;
            scale = scale.max(total.norm());
            logs = wf.prefactor.logs_near(pb, &ref_logs)?;
            let (lb, _) = wf.log_psi_near(pb, &logs, sheet)?;
            peak = peak.max(lb.re);
            if lb.re < peak - opts.log_cut && la.re > lb.re {
                return Ok(PathIntegral { value: total, error: err, end_logs: logs, peak });
            }
        }
    }
    Ok(PathIntegral { value: total, error: err, end_logs: logs, peak })
}

/// Horizontal line `Im Λ = −h` joined to the origin; the indented real axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePath {
    pub h: f64,
    /// Where the vertical drop from the origin ends (`c − ih`).
    pub c: f64,
    pub cutoff: f64,
}

impl OraclePath {
    pub fn vertices(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0), C64::new(self.c, -self.h), C64::new(self.cutoff, -self.h)]
    }
}

/// Default indentation depth for a wave function.
pub fn oracle_path_for(wf: &Wavefunction, delta: f64) -> OraclePath {
    let n0sq = wf.action.mu_inf.norm().max(1e-12);
    let k0 = wf.k0;
    let mut h = 4.0 / (k0 * if wf.action.m_inf == 1 { n0sq } else { 1.0 });
    h = h.min(0.5);
    if let Some(sp) = wf.action.channel_spacing() {
        h = h.min(0.3 * sp);
    }
    for (b, _) in wf.action.poles(10.0) {
        if b.norm() > 0.0 {
            h = h.min(0.5 * b.norm());
        }
    }
    let cutoff = if wf.action.m_inf == 1 {
        60.0 / (k0 * delta.max(1e-12) * n0sq)
    } else {
        let mu = wf.action.mu_inf.norm().max(1e-12);
        // Gaussian decay exp(−k0·m·|μ|·h·X^{m−1}·X/…) along the line
        let m = wf.action.m_inf as f64;
        (60.0 / (k0 * mu * m * h)).powf(1.0 / (m - 1.0)) + 10.0
    };
    OraclePath { h, c: 0.0, cutoff }
}

/// `(i/k0)∫ Ψ dΛ` along the indented real axis with `k0 → k0(1+iδ)`.
pub fn damped_integral(wf: &Wavefunction, path: &OraclePath, delta: f64, opts: &QuadOptions) -> Result<C64> {
    let w = wf.damped(delta);
    let v = path.vertices();
    let logs = w.prefactor.base_logs(C64::new(0.0, -path.h.min(1e-3)))?;
    // first chord: from the pole along −i, graded towards 0
    let mut pts = vec![v[0]];
    let g = 24;
    for j in (0..g).rev() {
        let t = path.h * 0.5f64.powi(j);
        pts.push(C64::new(path.c * t / path.h, -t));
    }
    let first_logs = w.prefactor.logs_near(pts[1], &logs)?;
    let mut total = C64::new(0.0, 0.0);
    let mut cur_logs = first_logs.clone();
    // tiny segment nearest the pole is negligible when the residue is positive
    for win in pts[1..].windows(2) {
        let r = integrate_polyline(&w, win, &cur_logs, 0, &QuadOptions { log_cut: f64::INFINITY, ..*opts }, false)?;
        total += r.value;
        cur_logs = r.end_logs;
    }
    let span = path.cutoff - path.c;
    let period = 2.0 * PI / (wf.k0 * wf.action.mu_inf.norm().max(1e-3));
    let step = (0.5 * period).min(2.0 * path.h);
    let n = (span / step).ceil() as usize;
    let mut line = Vec::with_capacity(n + 1);
    for j in 0..=n {
        line.push(C64::new(path.c + span * j as f64 / n as f64, -path.h));
    }
    let r = integrate_polyline(&w, &line, &cur_logs, 0, &QuadOptions { log_cut: f64::INFINITY, ..*opts }, false)?;
    total += r.value;
    Ok(I / wf.k0 * total)
}

/// Brute-force field value: damped indented real axis, Richardson
/// extrapolated over `δ, δ/2, δ/4`. Models with growth faster than linear at
/// infinity converge on the indented line without damping.
pub fn oracle_real_axis(wf: &Wavefunction, delta: f64, cutoff: Option<f64>) -> Result<C64> {
    if !(wf.k0 > 0.0) {
        return Err(Error::InvalidInput("k0 must be positive".into()));
    }
    let opts = QuadOptions::default();
    if wf.action.m_inf > 1 {
        let mut p = oracle_path_for(wf, delta);
        if let Some(c) = cutoff {
            p.cutoff = c;
        }
        return damped_integral(wf, &p, 0.0, &opts);
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("damping must be positive".into()));
    }
    let mut p = oracle_path_for(wf, delta / 4.0);
    if let Some(c) = cutoff {
        p.cutoff = c;
    }
    let f1 = damped_integral(wf, &p, delta, &opts)?;
    let f2 = damped_integral(wf, &p, delta / 2.0, &opts)?;
    let f4 = damped_integral(wf, &p, delta / 4.0, &opts)?;
    let r1 = 2.0 * f2 - f1;
    let r1b = 2.0 * f4 - f2;
    let r2 = (4.0 * r1b - r1) / 3.0;
    let spread = (r2 - r1b).norm();
    if !r2.re.is_finite() || !r2.im.is_finite() || spread > 1e-2 * r2.norm() {
        return Err(Error::NonConvergence(format!("Richardson spread {spread:e}")));
    }
    Ok(r2)
}

/// Damping giving `k0·|S̄|·δ ≈ 0.01` for a characteristic action value.
pub fn default_damping(k0: f64, action_scale: f64) -> f64 {
    (0.01 / (k0 * action_scale.max(0.1))).min(1e-3)
}

/// `|(∇²_h + k0²n²)φ| / (k0²|φ|)` at interior points of a field evaluator.
pub fn helmholtz_residual<F>(field: F, n2: impl Fn(&[f64]) -> f64 + Sync, points: &[Vec<f64>], k0: f64, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<C64> + Sync,
{
    points
        .par_iter()
        .map(|x| {
            let p0 = field(x)?;
            let mut lap = C64::new(0.0, 0.0);
            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                lap += (field(&xp)? - 2.0 * p0 + field(&xm)?) / (h * h);
            }
            Ok((lap + k0 * k0 * n2(x) * p0).norm() / (k0 * k0 * p0.norm()))
        })
        .collect()
}

/// Field evaluation settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldOptions {
    pub k0: f64,
    /// Fixed absorption `δ` in `k0(1+iδ)`; required for the channel model.
    pub absorption: f64,
    /// Largest `Re Λ` searched for critical points of the channel action.
    pub window: Option<f64>,
}

impl FieldOptions {
    pub fn new(k0: f64) -> Self {
        FieldOptions { k0, absorption: 0.0, window: None }
    }
}

/// One contour's share of the field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    /// Critical point or branch point.
    pub base: C64,
    pub coefficient: i64,
    pub value: C64,
    /// `Re S̄` at the base point.
    pub arrival: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: Vec<f64>,
    pub value: C64,
    pub zone: Zone,
    pub contributions: Vec<Contribution>,
    /// Value taken from the damped real-axis integral because the thimbles
    /// were degenerate (on or grazing a caustic).
    #[serde(default)]
    pub oracle: bool,
}

pub fn zone_of(cps: &[CriticalPoint]) -> Zone {
    if cps.iter().any(|c| c.multiplicity >= 2) {
        Zone::OnCaustic
    } else if cps.iter().all(|c| c.real) {
        Zone::Illuminated
    } else {
        Zone::Shadow
    }
}

/// Critical points used for the field at `x`.
pub fn field_critical_points(wf: &Wavefunction, opts: &FieldOptions) -> Result<Vec<CriticalPoint>> {
    match wf.action.channel_spacing() {
        Some(sp) => {
            let w = opts.window.unwrap_or(60.0);
            let region = Region { re: (-0.5 * sp, w + 0.37 * sp), im: (-2.03 * sp, 1.97 * sp) };
            find_critical_points(&wf.action, &region, 25.0)
        }
        None => {
            let (m, s) = (wf.model.as_ref(), wf.source.as_ref());
            match (m, s) {
                (Some(m), Some(s)) => critical_points_at(m, s, &wf.x),
                _ => Err(Error::InvalidInput("wave function was built without a model".into())),
            }
        }
    }
}

/// Topology shared by the points of one zone: contour coefficients in the
/// canonical (sorted) order of the critical points.
type TopologyKey = (Zone, usize, usize);

/// Write-once cache of decompositions keyed by zone and contour counts.
#[derive(Default)]
pub struct TopologyCache {
    map: RwLock<HashMap<TopologyKey, Vec<i64>>>,
}

impl TopologyCache {
    pub fn len(&self) -> usize {
        self.map.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Wave function for a field evaluation, damped when absorption is set.
pub fn field_wavefunction(model: &RefractionModel, source: &SourceSpec, x: &[f64], opts: &FieldOptions) -> Result<Wavefunction> {
    if !(opts.k0 > 0.0) {
        return Err(Error::InvalidInput("k0 must be positive".into()));
    }
    if matches!(model, RefractionModel::QuadraticZ { .. } | RefractionModel::LinearXQuadraticZ { .. }) && !(opts.absorption > 0.0) {
        return Err(Error::InvalidInput("channel models need a positive absorption".into()));
    }
    let wf = Wavefunction::new(model, source, x, opts.k0)?;
    Ok(if opts.absorption > 0.0 { wf.damped(opts.absorption) } else { wf })
}

/// Field at `x` as the sum of thimble (and branch-loop) integrals, the
/// coefficients coming from intersection numbers with the indented real
/// axis, or from `cache` when the zone has been seen before.
pub fn thimble_field(model: &RefractionModel, source: &SourceSpec, x: &[f64], opts: &FieldOptions, cache: Option<&TopologyCache>) -> Result<FieldSample> {
    let wf = field_wavefunction(model, source, x, opts)?;
    let cps = field_critical_points(&wf, opts)?;
    let zone = zone_of(&cps);
    let dec = field_decomposition(&wf, &cps, opts, cache)?;
    let q = QuadOptions::default();
    let mut value = C64::new(0.0, 0.0);
    let mut contributions = Vec::new();
    for (ct, n) in dec.active() {
        let v = ct.integrate(&wf, &q)?;
        value += n as f64 * v;
        contributions.push(Contribution { base: ct.base(), coefficient: n, value: v, arrival: ct.action_value(&wf.action)?.re });
    }
    Ok(FieldSample { x: x.to_vec(), value, zone, contributions, oracle: false })
}

/// Damped real-axis integral with the absorption and window of `opts`.
pub fn oracle_field(model: &RefractionModel, source: &SourceSpec, x: &[f64], opts: &FieldOptions) -> Result<C64> {
    let wf = Wavefunction::new(model, source, x, opts.k0)?;
    if opts.absorption > 0.0 {
        let mut p = oracle_path_for(&wf, opts.absorption);
        if wf.action.channel_spacing().is_some() {
            p.cutoff = opts.window.unwrap_or(60.0);
        }
        return damped_integral(&wf, &p, opts.absorption, &QuadOptions::default());
    }
    let scale = critical_points_at(model, source, x)
        .map(|c| c.iter().map(|p| p.value.norm()).fold(0.0, f64::max))
        .unwrap_or(1.0);
    oracle_real_axis(&wf, default_damping(opts.k0, scale), None)
}

/// [`thimble_field`], falling back to [`oracle_field`] where the thimbles
/// degenerate.
pub fn field_at(model: &RefractionModel, source: &SourceSpec, x: &[f64], opts: &FieldOptions, cache: Option<&TopologyCache>) -> Result<FieldSample> {
    match thimble_field(model, source, x, opts, cache) {
        Err(
            Error::TooCloseToCaustic(_)
            | Error::FlowStall(_)
            | Error::WrongSector(_)
            | Error::NonIntegerCoefficients(_)
            | Error::PoleEvaluation(_),
        ) => {
            let wf = field_wavefunction(model, source, x, opts)?;
            let zone = zone_of(&field_critical_points(&wf, opts)?);
            let value = oracle_field(model, source, x, opts)?;
            Ok(FieldSample { x: x.to_vec(), value, zone, contributions: Vec::new(), oracle: true })
        }
        r => r,
    }
}

/// Contour classes and integer coefficients of the indented real axis at
/// the wavefunction's point, without integrating.
pub fn field_decomposition(wf: &Wavefunction, cps: &[CriticalPoint], opts: &FieldOptions, cache: Option<&TopologyCache>) -> Result<Decomposition> {
    let zone = zone_of(cps);
    if zone == Zone::OnCaustic {
        return Err(Error::TooCloseToCaustic(cps.iter().map(|c| c.d2.norm()).fold(f64::INFINITY, f64::min)));
    }
    let topts = TraceOptions::with_k(wf.k);
    let n_real = cps.iter().filter(|c| c.real).count();
    let cache = cache.filter(|_| wf.action.channel_spacing().is_none());
    with_stokes_retry(cps, &topts, |o| {
        let contours = candidate_contours(wf, cps, o)?;
        let key = (zone, n_real, contours.len());
        if let Some(c) = cache.and_then(|c| c.map.read().ok().and_then(|m| m.get(&key).cloned())) {
            return Ok(Decomposition { contours, coefficients: c, residual: 0.0 });
        }
        let mut path = oracle_path_for(wf, opts.absorption.max(1e-3));
        if wf.action.channel_spacing().is_some() {
            path.cutoff = opts.window.unwrap_or(60.0);
        }
        let gamma = OpenPath::from_oracle(&path);
        let c = intersection_coefficients(wf, &contours, &gamma, o)?;
        let coefficients = round_coefficients(&c, 1e-6)?;
        if let Some(cache) = cache {
            if let Ok(mut m) = cache.map.write() {
                m.entry(key).or_insert_with(|| coefficients.clone());
            }
        }
        Ok(Decomposition { contours, coefficients, residual: 0.0 })
    })
}

/// Field on the tensor grid `xs × zs` (row-major in `zs`), in parallel with
/// a shared topology cache; see [`field_at`].
pub fn field_grid(model: &RefractionModel, source: &SourceSpec, xs: &[f64], zs: &[f64], opts: &FieldOptions) -> Vec<Result<FieldSample>> {
    let cache = TopologyCache::default();
    let pts: Vec<Vec<f64>> = zs.iter().flat_map(|z| xs.iter().map(move |x| vec![*x, *z])).collect();
    pts.par_iter().map(|p| field_at(model, source, p, opts, Some(&cache))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    
    #[test]
    fn gk_integrates_polynomials_exactly() {
        let f = |z: C64| Ok(z.powi(9) + 3.0 * z);
        let (v, e) = gk15(&f, C64::new(0.0, 0.0), C64::new(1.0, 1.0)).unwrap();
        let b = C64::new(1.0, 1.0);
        let want = b.powi(10) / 10.0 + 1.5 * b * b;
        assert!((v - want).norm() < 1e-13);
        assert!(e < 1e-10);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let f = |z: C64| Ok((-(z - 0.3) * (z - 0.3) * 1e2).exp());
        let (v, _) = gk_adaptive(&f, C64::new(-1.0, 0.0), C64::new(1.0, 0.0), 1e-12, 40).unwrap();
        assert!((v.re - (PI / 1e2).sqrt()).abs() < 1e-11, "{v}");
    }

    #[test]
    fn zero_length_path_is_zero() {
        let wf = Wavefunction::new(&RefractionModel::Constant { n0sq: 1.0 }, &SourceSpec::point(&[0.0, 0.0]), &[2.0, 0.0], 10.0).unwrap();
        let p = C64::new(1.0, -0.5);
        let logs = wf.prefactor.base_logs(p).unwrap();
        let r = integrate_polyline(&wf, &[p, p], &logs, 0, &QuadOptions::default(), false).unwrap();
        assert_eq!(r.value, C64::new(0.0, 0.0));
    }

    #[test]
    fn oracle_rejects_zero_wavenumber() {
        let mut wf = Wavefunction::new(&RefractionModel::Constant { n0sq: 1.0 }, &SourceSpec::point(&[0.0, 0.0]), &[2.0, 0.0], 10.0).unwrap();
        wf.k0 = 0.0;
        assert!(oracle_real_axis(&wf, 1e-3, None).is_err());
    }

    #[test]
    fn branch_point_substitution_integrates_inverse_sqrt() {
        // ∫_0^1 Λ^{-1/2} e^{iΛ} dΛ via the constant model in D = 1 with r = 0
        let wf = Wavefunction::new(&RefractionModel::Constant { n0sq: 1.0 }, &SourceSpec::point(&[0.0]), &[0.0], 1.0).unwrap();
        let b = C64::new(1.0, 0.0);
        let logs = wf.prefactor.base_logs(b).unwrap();
        let r = integrate_polyline(&wf, &[C64::new(0.0, 0.0), b], &logs, 0, &QuadOptions::default(), true).unwrap();
        // reference: trapezoid in s on Λ = s²
        let n = 20000;
        let mut s = C64::new(0.0, 0.0);
        for j in 0..=n {
            let t = j as f64 / n as f64;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            s += w * 2.0 * (I * t * t).exp() / n as f64;
        }
        let c = wf.prefactor.constant;
        assert!((r.value - c * s).norm() < 1e-7 * s.norm());
    }
}
