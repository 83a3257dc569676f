//! Lefschetz thimbles of `Ψ = f e^{ikS̄}`: convergence wedges, steepest-descent
//! flow, intersection numbers with the indented real axis, and the integer
//! decomposition of that axis into thimbles.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::action::{EinbeinAction, Prefactor, Wavefunction, C64};
use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_polyline, OraclePath, QuadOptions};

const I: C64 = C64::new(0.0, 1.0);

/// Open angular interval `(lo, lo + width)` of `arg Λ`, reduced mod 2π.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub index: usize,
    pub lo: f64,
    pub width: f64,
}

impl Wedge {
    pub fn contains(&self, angle: f64) -> bool {
        let d = (angle - self.lo).rem_euclid(TAU);
        d > 0.0 && d < self.width
    }

    pub fn centre(&self) -> f64 {
        self.lo + 0.5 * self.width
    }
}

/// Sectors at infinity where `Im(kμ∞Λ^{m∞}) > 0`.
pub fn convergence_wedges(action: &EinbeinAction, k: C64) -> Result<Vec<Wedge>> {
    let mu = k * action.mu_inf;
    if mu.norm() == 0.0 {
        return Err(Error::ZeroResidue(C64::new(f64::INFINITY, 0.0)));
    }
    let m = action.m_inf as f64;
    Ok((0..action.m_inf as usize)
        .map(|j| Wedge { index: j, lo: ((TAU * j as f64 - mu.arg()) / m).rem_euclid(TAU), width: PI / m })
        .collect())
}

/// Directions `arg(Λ−β)` from which a simple pole `ρ/(Λ−β)` is approached
/// with `Im(kρ/(Λ−β)) → +∞`.
pub fn pole_sector(beta: C64, residue: C64, k: C64) -> Result<Wedge> {
    if residue.norm() == 0.0 {
        return Err(Error::ZeroResidue(beta));
    }
    let a = (k * residue).arg();
    Ok(Wedge { index: 0, lo: (a - PI).rem_euclid(TAU), width: PI })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    Infinity { angle: f64, wedge: Option<usize> },
    Pole { beta: C64, angle: f64 },
}

/// One half of a thimble, from its base point outward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<C64>,
    pub end: Endpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Wavenumber in the exponent (complex when damped).
    pub k: C64,
    /// Tail is dropped once `Im(kS̄)` has moved this far from the base value.
    pub cutoff: f64,
    pub max_steps: usize,
    /// Ends within this relative distance of a pole terminate there.
    pub pole_eps: f64,
    pub r_max: Option<f64>,
    /// Rotation of `arg k` used for the geometry only; lifts the Stokes
    /// degeneracy of conjugate critical points of a real action.
    pub tilt: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { k: C64::new(1.0, 0.0), cutoff: 46.0, max_steps: 100_000, pole_eps: 1e-7, r_max: None, tilt: 0.0 }
    }
}

impl TraceOptions {
    pub fn with_k(k: C64) -> Self {
        TraceOptions { k, ..Default::default() }
    }

    fn geometry_k(&self) -> C64 {
        self.k * C64::from_polar(1.0, self.tilt)
    }

    /// Same options with the Stokes tilt applied.
    pub fn tilted(&self) -> Self {
        TraceOptions { tilt: STOKES_TILT, ..*self }
    }
}

pub const STOKES_TILT: f64 = 2e-3;

/// True when two critical points share `Re(kS̄)` and a flow line may join them.
pub fn stokes_degenerate(cps: &[CriticalPoint], k: C64) -> bool {
    cps.iter().enumerate().any(|(i, a)| {
        cps[i + 1..].iter().any(|b| {
            let (fa, fb) = ((k * a.value).re, (k * b.value).re);
            (fa - fb).abs() <= 1e-9 * (1.0 + fa.abs().max(fb.abs()))
        })
    })
}

struct Flow<'a> {
    action: &'a EinbeinAction,
    prefactor: Option<&'a Prefactor>,
    k: C64,
    poles: Vec<(C64, C64)>,
    sp: Option<f64>,
    wedges: Vec<Wedge>,
}

impl<'a> Flow<'a> {
    fn new(action: &'a EinbeinAction, prefactor: Option<&'a Prefactor>, k: C64, window: f64) -> Result<Self> {
        Ok(Flow {
            action,
            prefactor,
            k,
            poles: action.poles(window),
            sp: action.channel_spacing(),
            wedges: convergence_wedges(action, k).unwrap_or_default(),
        })
    }

    fn nearest_pole(&self, l: C64) -> Option<(C64, C64, f64)> {
        let mut best: Option<(C64, C64, f64)> = None;
        let mut consider = |b: C64, r: C64| {
            let d = (l - b).norm();
            if best.is_none_or(|x| d < x.2) {
                best = Some((b, r, d));
            }
        };
        for &(b, r) in &self.poles {
            consider(b, r);
        }
        if let Some(sp) = self.sp {
            let n = (l.re / sp).round();
            let b = C64::new(n * sp, 0.0);
            if let Some(&(_, r)) = self.poles.iter().find(|(bb, _)| (*bb - b).norm() < 1e-12) {
                consider(b, r);
            } else if let Some(r) = channel_residue(self.action, n as i64) {
                if r.norm() > 0.0 {
                    consider(b, r);
                }
            }
        }
        best
    }

    fn sing_dist(&self, l: C64) -> f64 {
        let mut d = self.nearest_pole(l).map_or(f64::INFINITY, |p| p.2);
        if let Some(p) = self.prefactor {
            d = d.min(p.branch_distance(l));
        }
        d
    }

    fn f(&self, l: C64) -> Result<[C64; 3]> {
        let [a, b, c] = self.action.eval_all(l)?;
        Ok([self.k * a, self.k * b, self.k * c])
    }

    fn velocity(&self, l: C64, sign: f64) -> Result<C64> {
        let fp = self.f(l)?[1];
        let n = fp.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::FlowStall(l));
        }
        Ok(sign * I * fp.conj() / n)
    }

    fn project(&self, mut l: C64, level: f64) -> Result<C64> {
        for _ in 0..4 {
            let [v, d, _] = self.f(l)?;
            let g = v.re - level;
            if d.norm() == 0.0 {
                break;
            }
            let step = g * d.conj() / d.norm_sqr();
            l -= step;
            if step.norm() < 1e-15 * l.norm().max(1.0) {
                break;
            }
        }
        Ok(l)
    }

    /// Follow the flow from `start` (already on the level set) with initial
    /// direction `dir`. `sign = +1` descends `|e^{ikS̄}|`, `−1` ascends.
    fn run(&self, origin: C64, start: C64, sign: f64, width: f64, opts: &TraceOptions) -> Result<Branch> {
        let im0 = self.f(origin)?[0].im;
        let level = self.f(origin)?[0].re;
        let mut pts = vec![origin, start];
        let mut l = start;
        let mut r_max = opts.r_max.unwrap_or_else(|| {
            let far = self.poles.iter().map(|(b, _)| b.norm()).fold(origin.norm(), f64::max);
            4.0 * far.max(1.0) + 4.0 * width
        });
        if self.sp.is_some() {
            r_max = r_max.max(origin.norm() + 4.0 * self.sp.unwrap_or(1.0));
        }
        for _ in 0..opts.max_steps {
            let [v, d1, _] = self.f(l)?;
            let gain = sign * (v.im - im0);
            let dist = self.sing_dist(l);
            // pole termination
            if let Some((b, r, dp)) = self.nearest_pole(l) {
                if dp < opts.pole_eps * b.norm().max(1.0) {
                    let angle = (l - b).arg();
                    let sector = pole_sector(b, r, self.k)?;
                    let ok = if sign > 0.0 { sector.contains(angle) } else { !sector.contains(angle) };
                    if !ok {
                        return Err(Error::WrongSector(b));
                    }
                    pts.push(b);
                    return Ok(Branch { points: pts, end: Endpoint::Pole { beta: b, angle } });
                }
            }
            if l.norm() > r_max && gain > opts.cutoff {
                let angle = l.arg().rem_euclid(TAU);
                let wedge = if sign > 0.0 {
                    self.wedges.iter().find(|w| w.contains(angle)).map(|w| w.index)
                } else {
                    None
                };
                if sign > 0.0 && wedge.is_none() && !self.wedges.is_empty() {
                    return Err(Error::WrongSector(l));
                }
                return Ok(Branch { points: pts, end: Endpoint::Infinity { angle, wedge } });
            }
            let u = (l - origin).norm();
            let mut h = (0.1 * dist).min(0.25 * u.max(width));
            if gain < opts.cutoff {
                h = h.min(0.5 / d1.norm().max(1e-300));
            }
            let mut next = None;
            for _ in 0..30 {
                match self.rk4(l, h, sign).and_then(|c| self.project(c, level)) {
                    Ok(c) if (c - l).norm() < 3.0 * h && self.sing_dist(c) > 0.0 => {
                        next = Some(c);
                        break;
                    }
                    _ => h *= 0.5,
                }
            }
            let c = next.ok_or(Error::FlowStall(l))?;
            if (c - l).norm() < 1e-15 * l.norm().max(1e-300) {
                return Err(Error::FlowStall(l));
            }
            l = c;
            pts.push(l);
        }
        Err(Error::FlowStall(l))
    }

    fn rk4(&self, l: C64, h: f64, sign: f64) -> Result<C64> {
        let k1 = self.velocity(l, sign)?;
        let k2 = self.velocity(l + 0.5 * h * k1, sign)?;
        let k3 = self.velocity(l + 0.5 * h * k2, sign)?;
        let k4 = self.velocity(l + h * k3, sign)?;
        Ok(l + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }
}

fn channel_residue(action: &EinbeinAction, n: i64) -> Option<C64> {
    action.terms.iter().find_map(|t| match *t {
        crate::action::ActionTerm::Channel { z, zp, .. } => {
            let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            Some(C64::new((z - sign * zp).powi(2) / 4.0, 0.0))
        }
        _ => None,
    })
}

/// A thimble through a nondegenerate critical point, oriented by `tangent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thimble {
    pub critical: CriticalPoint,
    /// Wavenumber that fixed the geometry (tilt included).
    pub k: C64,
    /// Unit tangent at the critical point; `Re > 0` (or `Im > 0` when vertical).
    pub tangent: C64,
    /// Branch leaving along `−tangent`.
    pub incoming: Branch,
    /// Branch leaving along `+tangent`.
    pub outgoing: Branch,
}

impl Thimble {
    /// Oriented polyline from the incoming end to the outgoing end.
    pub fn path(&self) -> Vec<C64> {
        let mut p: Vec<C64> = self.incoming.points.iter().rev().copied().collect();
        p.extend(self.outgoing.points.iter().skip(1));
        p
    }

    pub fn ends(&self) -> (Endpoint, Endpoint) {
        (self.incoming.end, self.outgoing.end)
    }

    /// `(i/k0)∫_J Ψ dΛ`, with prefactor branches fixed at the critical point
    /// by `logs` (base sheet when `None`).
    pub fn integrate(&self, wf: &Wavefunction, logs: Option<&[C64]>, opts: &QuadOptions) -> Result<C64> {
        let l0 = self.critical.lambda;
        let base = match logs {
            Some(l) => l.to_vec(),
            None => wf.prefactor.base_logs(l0)?,
        };
        let out = integrate_polyline(wf, &self.outgoing.points, &base, 0, opts, false)?;
        let inc = integrate_polyline(wf, &self.incoming.points, &base, 0, opts, false)?;
        let v = out.value - inc.value;
        let scale = v.norm().max(1e-300);
        let err = out.error + inc.error;
        if err > 1e-6 * scale && err > 1e-280 {
            return Err(Error::AccuracyNotReached(err / scale));
        }
        Ok(I / wf.k0 * v)
    }
}

fn orientation(kd2: C64) -> C64 {
    let t = C64::from_polar(1.0, 0.5 * (0.5 * PI - kd2.arg()));
    if t.re < -1e-12 || (t.re.abs() <= 1e-12 && t.im < 0.0) {
        -t
    } else {
        t
    }
}

fn width_at(k: C64, d2: C64) -> f64 {
    1.0 / (k * d2).norm().sqrt()
}

fn launch(flow: &Flow, cp: &CriticalPoint, dir: C64, sign: f64, opts: &TraceOptions) -> Result<Branch> {
    let w = width_at(flow.k, cp.d2);
    let level = flow.f(cp.lambda)?[0].re;
    let start = flow.project(cp.lambda + dir * (1e-2 * w).min(0.01 * flow.sing_dist(cp.lambda)), level)?;
    flow.run(cp.lambda, start, sign, w, opts)
}

/// Steepest-descent thimble through `cp`. `window` bounds the poles of the
/// channel action consulted for step control.
pub fn trace_thimble(action: &EinbeinAction, prefactor: Option<&Prefactor>, cp: &CriticalPoint, opts: &TraceOptions) -> Result<Thimble> {
    if cp.multiplicity > 1 || cp.d2.norm() == 0.0 {
        return Err(Error::TooCloseToCaustic(cp.d2.norm()));
    }
    let flow = Flow::new(action, prefactor, opts.geometry_k(), window_for(action, cp.lambda))?;
    let t = orientation(flow.k * cp.d2);
    let outgoing = launch(&flow, cp, t, 1.0, opts)?;
    let incoming = launch(&flow, cp, -t, 1.0, opts)?;
    Ok(Thimble { critical: *cp, k: flow.k, tangent: t, incoming, outgoing })
}

/// The dual (steepest-ascent) path through `cp`, oriented along `i·tangent`.
pub fn trace_dual(action: &EinbeinAction, prefactor: Option<&Prefactor>, cp: &CriticalPoint, opts: &TraceOptions) -> Result<OpenPath> {
    if cp.multiplicity > 1 || cp.d2.norm() == 0.0 {
        return Err(Error::TooCloseToCaustic(cp.d2.norm()));
    }
    let flow = Flow::new(action, prefactor, opts.geometry_k(), window_for(action, cp.lambda))?;
    let t = I * orientation(flow.k * cp.d2);
    let fwd = launch(&flow, cp, t, -1.0, opts)?;
    let back = launch(&flow, cp, -t, -1.0, opts)?;
    let mut pts: Vec<C64> = back.points.iter().rev().copied().collect();
    pts.extend(fwd.points.iter().skip(1));
    let ray = |e: &Endpoint| match e {
        Endpoint::Infinity { angle, .. } => Some(C64::from_polar(1.0, *angle)),
        Endpoint::Pole { .. } => None,
    };
    Ok(OpenPath { points: pts, start_ray: ray(&back.end), end_ray: ray(&fwd.end) })
}

/// Flow line leaving a prefactor branch point `b` (where `S̄` is regular).
/// `sign = +1` follows increasing `Im(kS̄)`, `−1` decreasing.
pub fn trace_from_branch_point(action: &EinbeinAction, b: C64, sign: f64, opts: &TraceOptions) -> Result<Branch> {
    let flow = Flow::new(action, None, opts.geometry_k(), window_for(action, b))?;
    let [_, d1, d2] = flow.f(b)?;
    if d1.norm() == 0.0 {
        return Err(Error::FlowStall(b));
    }
    let dir = sign * I * d1.conj() / d1.norm();
    let scale = (d1.norm() / d2.norm().max(1e-300)).min(1.0 / d1.norm());
    let level = flow.f(b)?[0].re;
    let start = flow.project(b + dir * 1e-2 * scale, level)?;
    flow.run(b, start, sign, scale, opts)
}

/// Prefactor logs at `p` near the branch point `b`, continued from `logs`
/// at `q` along the counter-clockwise arc about `b`.
pub fn logs_around(prefactor: &Prefactor, b: C64, q: C64, logs: &[C64], p: C64) -> Result<Vec<C64>> {
    let (rq, aq) = ((q - b).norm(), (q - b).arg());
    let (rp, mut ap) = ((p - b).norm(), (p - b).arg());
    while ap < aq {
        ap += TAU;
    }
    let n = 64;
    let mut cur = logs.to_vec();
    for j in 1..=n {
        let t = j as f64 / n as f64;
        let z = b + C64::from_polar(rq + (rp - rq) * t, aq + (ap - aq) * t);
        cur = prefactor.logs_near(z, &cur)?;
    }
    Ok(cur)
}

/// Logs fixing the sheet of a branch loop at the first point `p1` of its
/// path: base sheet directly below `b`, then counter-clockwise to `p1`.
fn loop_logs(prefactor: &Prefactor, b: C64, p1: C64) -> Result<Vec<C64>> {
    let q = b - I * (p1 - b).norm();
    logs_around(prefactor, b, q, &prefactor.base_logs(q)?, p1)
}

fn window_for(action: &EinbeinAction, l: C64) -> f64 {
    match action.channel_spacing() {
        Some(sp) => l.norm() + 40.0 * sp,
        None => 1e6,
    }
}

/// Polyline with optional rays to infinity at either end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenPath {
    pub points: Vec<C64>,
    /// Outward direction of the ray through which the path arrives from infinity.
    pub start_ray: Option<C64>,
    pub end_ray: Option<C64>,
}

impl OpenPath {
    pub fn from_oracle(p: &OraclePath) -> Self {
        OpenPath { points: p.vertices(), start_ray: None, end_ray: Some(C64::new(1.0, 0.0)) }
    }

    /// Pieces `(start, direction, s_max, orientation)`; `s_max = ∞` for rays
    /// and `orientation = −1` where traversal runs against `direction`.
    fn pieces(&self) -> Vec<(C64, C64, f64, f64)> {
        let mut out = Vec::new();
        if let (Some(d), Some(p0)) = (self.start_ray, self.points.first()) {
            out.push((*p0, d, f64::INFINITY, -1.0));
        }
        for w in self.points.windows(2) {
            if w[0] != w[1] {
                out.push((w[0], w[1] - w[0], 1.0, 1.0));
            }
        }
        if let (Some(d), Some(p1)) = (self.end_ray, self.points.last()) {
            out.push((*p1, d, f64::INFINITY, 1.0));
        }
        out
    }

    /// Finite endpoints (not continued by a ray).
    fn finite_ends(&self) -> Vec<C64> {
        let mut e = Vec::new();
        if self.start_ray.is_none() {
            e.extend(self.points.first());
        }
        if self.end_ray.is_none() {
            e.extend(self.points.last());
        }
        e
    }
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// One signed crossing of `gamma` by `dual`: position, sign, and the index
/// of the dual piece (in traversal order, counting a start ray as piece 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub at: C64,
    pub sign: i64,
    pub dual_piece: usize,
    pub dual_param: f64,
}

/// Signed crossings of `gamma` by `dual`; `+1` when `dual` passes from the
/// right of `gamma` to its left.
pub fn crossings(gamma: &OpenPath, dual: &OpenPath) -> Vec<Crossing> {
    let mut out = Vec::new();
    let ga = gamma.pieces();
    let da = dual.pieces();
    let scale = gamma.points.iter().chain(&dual.points).map(|p| p.norm()).fold(1.0, f64::max);
    let shared: Vec<C64> = gamma
        .finite_ends()
        .into_iter()
        .filter(|g| dual.finite_ends().iter().any(|d| (d - g).norm() < 1e-9 * scale))
        .collect();
    for (p, r, smax, og) in &ga {
        for (j, (q, e, umax, od)) in da.iter().enumerate() {
            let den = cross(*r, *e);
            if den == 0.0 {
                continue;
            }
            let qp = q - p;
            let s = cross(qp, *e) / den;
            let u = cross(qp, *r) / den;
            let s_ok = s >= 0.0 && (s < *smax || smax.is_infinite());
            let u_ok = u >= 0.0 && (u < *umax || umax.is_infinite());
            let at = p + r * s;
            if s_ok && u_ok && shared.iter().all(|g| (g - at).norm() > 1e-6 * scale) {
                let sign = if den * og * od > 0.0 { 1 } else { -1 };
                out.push(Crossing { at, sign, dual_piece: j, dual_param: u });
            }
        }
    }
    out
}

/// Run `f` untilted unless the critical points are Stokes-degenerate; retry
/// tilted when the flow stalls.
pub fn with_stokes_retry<T>(cps: &[CriticalPoint], opts: &TraceOptions, f: impl Fn(&TraceOptions) -> Result<T>) -> Result<T> {
    if opts.tilt == 0.0 && stokes_degenerate(cps, opts.k) {
        return f(&opts.tilted());
    }
    match f(opts) {
        Err(Error::FlowStall(_)) | Err(Error::WrongSector(_)) if opts.tilt == 0.0 => f(&opts.tilted()),
        r => r,
    }
}

/// Dual path of a contour, oriented so that it ends at the contour's base
/// point when the base is a branch point.
fn dual_of(wf: &Wavefunction, c: &ContourClass, opts: &TraceOptions) -> Result<OpenPath> {
    match c {
        ContourClass::Thimble(t) => trace_dual(&wf.action, Some(&wf.prefactor), &t.critical, &TraceOptions { tilt: (t.k / opts.k).arg(), ..*opts }),
        ContourClass::BranchLoop { at, .. } => {
            let br = trace_from_branch_point(&wf.action, *at, -1.0, opts)?;
            let ray = match br.end {
                Endpoint::Infinity { angle, .. } => Some(C64::from_polar(1.0, angle)),
                Endpoint::Pole { .. } => None,
            };
            Ok(OpenPath { points: br.points.into_iter().rev().collect(), start_ray: ray, end_ray: None })
        }
    }
}

/// Coefficient of each contour in the decomposition of `gamma`, from
/// intersection numbers with the dual paths. Each crossing contributes its
/// sign times the prefactor phase carried from `gamma` (on the base sheet)
/// along the dual path to the sheet on which the contour is integrated.
pub fn intersection_coefficients(wf: &Wavefunction, contours: &[ContourClass], gamma: &OpenPath, opts: &TraceOptions) -> Result<Vec<C64>> {
    contours
        .iter()
        .map(|ct| {
            let dual = dual_of(wf, ct, opts)?;
            let base_pt = ct.base();
            let centre = dual.points.iter().position(|p| *p == base_pt).unwrap_or(0);
            let offset = usize::from(dual.start_ray.is_some());
            let mut c = C64::new(0.0, 0.0);
            for x in crossings(gamma, &dual) {
                let piece = x.dual_piece as isize - offset as isize;
                let walk: Vec<C64> = if piece < 0 {
                    dual.points[..=centre].to_vec()
                } else if (piece as usize) < centre {
                    dual.points[piece as usize + 1..=centre].to_vec()
                } else if piece as usize >= dual.points.len() - 1 {
                    dual.points[centre..].iter().rev().copied().collect()
                } else {
                    dual.points[centre..=piece as usize].iter().rev().copied().collect()
                };
                let mut logs = wf.prefactor.base_logs(x.at)?;
                let phase = match ct {
                    ContourClass::Thimble(_) => {
                        for p in walk {
                            logs = wf.prefactor.logs_near(p, &logs)?;
                        }
                        let base = wf.prefactor.base_logs(base_pt)?;
                        (wf.prefactor.log_from(&logs, 0) - wf.prefactor.log_from(&base, 0)).exp()
                    }
                    ContourClass::BranchLoop { at, path } => {
                        // stop one vertex short of the branch point
                        let q = walk[..walk.len() - 1].iter().fold(Ok(logs), |acc: Result<Vec<C64>>, p| acc.and_then(|l| wf.prefactor.logs_near(*p, &l)))?;
                        let qpt = walk[walk.len().saturating_sub(2).min(walk.len() - 1)];
                        let p1 = path.points[1];
                        let got = logs_around(&wf.prefactor, *at, qpt, &q, p1)?;
                        let want = loop_logs(&wf.prefactor, *at, p1)?;
                        (wf.prefactor.log_from(&got, 0) - wf.prefactor.log_from(&want, 0)).exp()
                    }
                };
                c += x.sign as f64 * phase;
            }
            Ok(c)
        })
        .collect()
}

/// Contours and their intersection-number coefficients at one point.
pub fn decompose_by_intersection(wf: &Wavefunction, cps: &[CriticalPoint], gamma: &OpenPath, opts: &TraceOptions) -> Result<Decomposition> {
    with_stokes_retry(cps, opts, |o| {
        let contours = candidate_contours(wf, cps, o)?;
        let c = intersection_coefficients(wf, &contours, gamma, o)?;
        let coefficients = round_coefficients(&c, 1e-6)?;
        Ok(Decomposition { contours, coefficients, residual: 0.0 })
    })
}

/// A contour in the decomposition: a thimble or a loop around a prefactor
/// branch point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ContourClass {
    Thimble(Thimble),
    /// From infinity around the branch point and back on the other sheet;
    /// its integral is `2∫_b^∞ Ψ` along `path` on the base sheet.
    BranchLoop { at: C64, path: Branch },
}

impl ContourClass {
    pub fn integrate(&self, wf: &Wavefunction, opts: &QuadOptions) -> Result<C64> {
        match self {
            ContourClass::Thimble(t) => t.integrate(wf, None, opts),
            ContourClass::BranchLoop { at, path } => {
                let p1 = path.points[1];
                let logs = loop_logs(&wf.prefactor, *at, p1)?;
                let r = integrate_polyline(wf, &path.points, &logs, 0, opts, true)?;
                Ok(2.0 * I / wf.k0 * r.value)
            }
        }
    }

    /// Base point: the critical point or the branch point.
    pub fn base(&self) -> C64 {
        match self {
            ContourClass::Thimble(t) => t.critical.lambda,
            ContourClass::BranchLoop { at, .. } => *at,
        }
    }

    /// `S̄` at the base point; its real part is the arrival time.
    pub fn action_value(&self, action: &EinbeinAction) -> Result<C64> {
        action.eval(self.base())
    }
}

/// Integer decomposition of the indented real axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub contours: Vec<ContourClass>,
    pub coefficients: Vec<i64>,
    /// Largest relative misfit of the integer fit over the sample wavenumbers.
    pub residual: f64,
}

impl Decomposition {
    pub fn active(&self) -> impl Iterator<Item = (&ContourClass, i64)> {
        self.contours.iter().zip(self.coefficients.iter().copied()).filter(|(_, c)| *c != 0)
    }
}

/// Round a complex least-squares solution to integers.
pub fn round_coefficients(c: &[C64], tol: f64) -> Result<Vec<i64>> {
    let mut worst = 0.0f64;
    let out = c
        .iter()
        .map(|v| {
            let r = C64::new(v.re.round(), 0.0);
            worst = worst.max((v - r).norm());
            r.re as i64
        })
        .collect();
    if worst > tol {
        return Err(Error::NonIntegerCoefficients(worst));
    }
    Ok(out)
}

/// Contours at a point: thimbles through every critical point, plus a loop
/// around each prefactor branch point at which `S̄` is regular.
pub fn candidate_contours(wf: &Wavefunction, cps: &[CriticalPoint], opts: &TraceOptions) -> Result<Vec<ContourClass>> {
    let mut out = Vec::new();
    for cp in cps {
        out.push(ContourClass::Thimble(trace_thimble(&wf.action, Some(&wf.prefactor), cp, opts)?));
    }
    for f in &wf.prefactor.factors {
        if let crate::action::Factor::Power { at: b, .. } = *f {
            let regular = wf.action.eval_all(b).is_ok_and(|v| v.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
            if regular {
                let path = trace_from_branch_point(&wf.action, b, 1.0, opts)?;
                out.push(ContourClass::BranchLoop { at: b, path });
            }
        }
    }
    Ok(out)
}

/// Decompose the indented real axis by least squares against the oracle at
/// several wavenumbers, then round to integers. `build(k0)` gives the wave
/// function at each wavenumber; `oracle(k0)` the reference value.
pub fn decompose_real_axis<B, O>(build: B, oracle: O, k0s: &[f64], cps: &[CriticalPoint]) -> Result<Decomposition>
where
    B: Fn(f64) -> Result<Wavefunction>,
    O: Fn(f64) -> Result<C64>,
{
    if k0s.len() < 2 {
        return Err(Error::InvalidInput("need at least two wavenumbers".into()));
    }
    let kmin = k0s.iter().copied().fold(f64::INFINITY, f64::min);
    let wf0 = build(kmin)?;
    // geometry is the same for every real wavenumber; trace with unit k
    let opts = TraceOptions::with_k(C64::new(kmin, 0.0));
    let contours = with_stokes_retry(cps, &opts, |o| candidate_contours(&wf0, cps, o))?;
    let n = contours.len();
    let q = QuadOptions::default();
    let mut a = DMatrix::<C64>::zeros(k0s.len(), n);
    let mut b = DVector::<C64>::zeros(k0s.len());
    let mut norms = vec![0.0; k0s.len()];
    for (r, &k0) in k0s.iter().enumerate() {
        let wf = build(k0)?;
        let o = oracle(k0)?;
        norms[r] = o.norm().max(1e-300);
        b[r] = o / norms[r];
        for (c, ct) in contours.iter().enumerate() {
            a[(r, c)] = ct.integrate(&wf, &q)? / norms[r];
        }
    }
    let sol = a.clone().svd(true, true).solve(&b, 1e-12).map_err(|e| Error::NonConvergence(e.to_string()))?;
    let coeffs = round_coefficients(sol.as_slice(), 0.05)?;
    let ci = DVector::from_iterator(n, coeffs.iter().map(|c| C64::new(*c as f64, 0.0)));
    let res = (&a * ci - &b).iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(Decomposition { contours, coefficients: coeffs, residual: res })
}
