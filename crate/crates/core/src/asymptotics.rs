//! Stationary phase, Airy-type uniform asymptotics near folds, the map to the
//! fold normal form, and arrival times.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::action::{Wavefunction, C64};
use crate::critical::{classify_point, critical_points_at, CriticalPoint};
use crate::error::{Error, Result};
use crate::laurent::{laurent_point_source, LaurentSeries};
use crate::model::{RefractionModel, SourceSpec};
use crate::poly::CPoly;
use crate::quadrature::{field_critical_points, field_decomposition, field_wavefunction, gk_adaptive, FieldOptions};
use crate::thimble::{ContourClass, Decomposition};

const I: C64 = C64::new(0.0, 1.0);
const AI0: f64 = 0.355_028_053_887_817_2;
const MAI1: f64 = 0.258_819_403_792_806_8;
/// Radius below which the Maclaurin series is used.
const SERIES_RADIUS: f64 = 2.5;
/// Smallest `k0|S̄″|δ²` accepted by [`stationary_phase`].
pub const STATIONARY_PHASE_VALIDITY: f64 = 10.0;

fn airy_series(z: C64) -> (C64, C64) {
    let z3 = z * z * z;
    let (mut f, mut fp) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let (mut g, mut gp) = (z, C64::new(1.0, 0.0));
    // c_k z^{3k} and d_k z^{3k+1}
    let (mut c, mut d) = (C64::new(1.0, 0.0), z);
    for k in 1..200 {
        let kf = k as f64;
        c *= z3 / ((3.0 * kf - 1.0) * 3.0 * kf);
        d *= z3 / (3.0 * kf * (3.0 * kf + 1.0));
        f += c;
        g += d;
        if z.norm() > 0.0 {
            fp += 3.0 * kf * c / z;
            gp += (3.0 * kf + 1.0) * d / z;
        }
        if c.norm() + d.norm() < 1e-18 * (f.norm() + g.norm()) {
            break;
        }
    }
    (AI0 * f - MAI1 * g, AI0 * fp - MAI1 * gp)
}

/// `∫₀^∞ t^p e^{−s t²} cos(t³/3) dt` for `Re s > 0`.
fn gauss_cos(s: C64, p: i32) -> Result<C64> {
    let f = |t: C64| -> Result<C64> {
        let t = t.re;
        Ok(t.powi(p) * (-s * t * t).exp() * (t * t * t / 3.0).cos())
    };
    let end = (46.0 / s.re).sqrt() + 1.0;
    let mut acc = C64::new(0.0, 0.0);
    let mut a = 0.0;
    while a < end {
        let w = (0.5 / a.max(1.0).powi(2)).min(0.5);
        let b = (a + w).min(end);
        acc += gk_adaptive(&f, C64::new(a, 0.0), C64::new(b, 0.0), 1e-16, 10)?.0;
        a = b;
    }
    Ok(acc)
}

fn airy_integral(z: C64) -> Result<(C64, C64)> {
    let sz = z.sqrt();
    let zeta = 2.0 / 3.0 * z * sz;
    if -zeta.re > 700.0 {
        return Err(Error::Overflow(z));
    }
    let e = (-zeta).exp() / PI;
    let j0 = gauss_cos(sz, 0)?;
    let j2 = gauss_cos(sz, 2)?;
    Ok((e * j0, e * (-sz * j0 - j2 / (2.0 * sz))))
}

/// `Ai(u)` and `Ai′(u)`.
pub fn airy_pair(u: C64) -> Result<(C64, C64)> {
    if !u.re.is_finite() || !u.im.is_finite() || u.norm() > 1e4 {
        return Err(Error::Overflow(u));
    }
    if u.im == 0.0 {
        // real on the real axis; drop round-off from the connection formula
        let (a, d) = airy_pair_complex(u)?;
        return Ok((C64::new(a.re, 0.0), C64::new(d.re, 0.0)));
    }
    airy_pair_complex(u)
}

fn airy_pair_complex(u: C64) -> Result<(C64, C64)> {
    if u.norm() <= SERIES_RADIUS {
        return Ok(airy_series(u));
    }
    if u.arg().abs() <= 2.0 * PI / 3.0 {
        return airy_integral(u);
    }
    // Ai(z) + ωAi(ωz) + ω²Ai(ω²z) = 0
    let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let (a1, d1) = airy_integral(w * u)?;
    let (a2, d2) = airy_integral(w * w * u)?;
    Ok((-w * a1 - w * w * a2, -w * w * d1 - w * d2))
}

pub fn airy(u: C64) -> Result<C64> {
    Ok(airy_pair(u)?.0)
}

/// Cubic Taylor model `Γ₀ + Γ₁λ + Γ₃λ³` of the truncated Laurent series about
/// `Λ̃_c`, where the quadratic term vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformExpansion {
    pub gamma0: C64,
    pub gamma1: C64,
    pub gamma3: C64,
    /// `Λ̃_c`, measured from the pole.
    pub lambda_c: C64,
    /// The pole `P`.
    pub point: C64,
    pub codim: usize,
}

impl UniformExpansion {
    /// From `γ₋₁ … γ₃` (grade-zero parts) of a series about a pole.
    pub fn from_series(series: &LaurentSeries) -> Result<Self> {
        let g: Vec<C64> = (-1..=3).map(|m| if m as usize <= series.order || m < 0 { series.leading(m) } else { C64::new(0.0, 0.0) }).collect();
        Self::from_coefficients([g[0], g[1], g[2], g[3], g[4]], series.point, series.codim)
    }

    /// From `[γ₋₁, γ₀, γ₁, γ₂, γ₃]`.
    pub fn from_coefficients(g: [C64; 5], point: C64, codim: usize) -> Result<Self> {
        let [gm, g0, g1, g2, g3] = g;
        if g3.norm() <= 1e-14 * (g1.norm() + gm.norm()).max(1.0) {
            return Err(Error::DegenerateCubic);
        }
        let r = -gm / (3.0 * g3);
        // the fourth root nearest the positive real axis
        let mut lc = (0..4)
            .map(|j| C64::from_polar(r.norm().powf(0.25), (r.arg() + 2.0 * PI * j as f64) / 4.0))
            .min_by(|a, b| a.arg().abs().total_cmp(&b.arg().abs()))
            .ok_or(Error::DegenerateCubic)?;
        // S̄″ = 2γ₋₁/Λ³ + 2γ₂ + 6γ₃Λ
        for _ in 0..50 {
            let s2 = 2.0 * gm / lc.powi(3) + 2.0 * g2 + 6.0 * g3 * lc;
            let s3 = -6.0 * gm / lc.powi(4) + 6.0 * g3;
            let step = s2 / s3;
            lc -= step;
            if step.norm() < 1e-15 * lc.norm() {
                break;
            }
        }
        let gamma0 = gm / lc + g0 + g1 * lc + g2 * lc * lc + g3 * lc.powi(3);
        let gamma1 = -gm / (lc * lc) + g1 + 2.0 * g2 * lc + 3.0 * g3 * lc * lc;
        let gamma3 = -gm / lc.powi(4) + g3;
        Ok(UniformExpansion { gamma0, gamma1, gamma3, lambda_c: lc, point, codim })
    }

    fn sigma(&self) -> f64 {
        if self.gamma3.re < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// `κ = (3k₀σΓ₃)^{1/3}`, with `σ = sgn Re Γ₃`.
    pub fn kappa(&self, k0: f64) -> C64 {
        (3.0 * k0 * self.sigma() * self.gamma3).powf(1.0 / 3.0)
    }

    /// Airy argument `σk₀Γ₁/κ`; negative on the lit side of a real fold.
    pub fn argument(&self, k0: f64) -> C64 {
        self.sigma() * k0 * self.gamma1 / self.kappa(k0)
    }

    /// Two-saddle stationary phase of the cubic model with the prefactor
    /// linearized about `Λ̃_c`; the large-`|u|` limit of [`uniform_field`] on
    /// the lit side.
    pub fn lit_two_term(&self, k0: f64) -> Result<C64> {
        let l2 = -self.gamma1 / (3.0 * self.gamma3);
        if l2.re <= 0.0 || l2.im.abs() > 1e-12 * l2.re {
            return Err(Error::InvalidInput("no pair of real saddles".into()));
        }
        let d = self.codim as f64;
        let l = self.point + self.lambda_c;
        let f = (k0 / (4.0 * PI * I * l)).powf(d / 2.0);
        let fp = -d / 2.0 * f / l;
        let l = l2.re.sqrt();
        Ok([l, -l]
            .iter()
            .map(|&s| {
                let phase = self.gamma0 + self.gamma1 * s + self.gamma3 * s * s * s;
                let d2 = 6.0 * self.gamma3 * s;
                I / k0 * (f + fp * s) * (I * k0 * phase).exp() * (2.0 * PI * I / (k0 * d2)).sqrt()
            })
            .sum())
    }
}

/// Uniform approximation of the field across a fold, keeping the `Ai` and
/// `Ai′` terms. The cubic is mapped onto the two coalescing saddles of the
/// truncated series so that both the caustic and the two-ray limits are
/// reproduced; within `1e−6` of the caustic the Taylor form
/// [`uniform_field`] is used.
pub fn airy_uniform(series: &LaurentSeries, k0: f64) -> Result<C64> {
    let g: Vec<C64> = (-1..=3).map(|m| if m < 0 || m as usize <= series.order { series.leading(m) } else { C64::new(0.0, 0.0) }).collect();
    let g = [g[0], g[1], g[2], g[3], g[4]];
    let taylor = UniformExpansion::from_coefficients(g, series.point, series.codim)?;
    match fold_pair(&g, taylor.lambda_c) {
        Some(pair) => mapped_field(&g, series.point, series.codim, pair, k0).or_else(|_| uniform_field(&taylor, k0)),
        None => uniform_field(&taylor, k0),
    }
}

fn truncated(g: &[C64; 5], l: C64) -> (C64, C64, C64) {
    let [gm, g0, g1, g2, g3] = *g;
    let s = gm / l + g0 + g1 * l + g2 * l * l + g3 * l.powi(3);
    let s1 = -gm / (l * l) + g1 + 2.0 * g2 * l + 3.0 * g3 * l * l;
    let s2 = 2.0 * gm / l.powi(3) + 2.0 * g2 + 6.0 * g3 * l;
    (s, s1, s2)
}

/// The pair of saddles of the truncated series in `Re Λ̃ > 0` centred nearest
/// `Λ̃_c`.
fn fold_pair(g: &[C64; 5], lc: C64) -> Option<(C64, C64)> {
    let [gm, _, g1, g2, g3] = *g;
    // Λ²S̄′ = −γ₋₁ + γ₁Λ² + 2γ₂Λ³ + 3γ₃Λ⁴
    let roots = CPoly(vec![-gm, C64::new(0.0, 0.0), g1, 2.0 * g2, 3.0 * g3]).roots().ok()?;
    let roots: Vec<C64> = roots
        .into_iter()
        .map(|mut r| {
            for _ in 0..20 {
                let (_, s1, s2) = truncated(g, r);
                if s2.norm() == 0.0 {
                    break;
                }
                let step = s1 / s2;
                if !step.re.is_finite() || step.norm() > 1e-6 * r.norm() {
                    break;
                }
                r -= step;
            }
            r
        })
        .filter(|r: &C64| r.re > 0.0)
        .collect();
    let mut best: Option<(f64, (C64, C64))> = None;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let d = ((roots[i] + roots[j]) / 2.0 - lc).norm();
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, (roots[i], roots[j])));
            }
        }
    }
    best.map(|(_, p)| p)
}

fn mapped_field(g: &[C64; 5], point: C64, codim: usize, (a, b): (C64, C64), k0: f64) -> Result<C64> {
    let (sa, _, s2a) = truncated(g, a);
    let (sb, _, s2b) = truncated(g, b);
    let mean = (sa + sb) / 2.0;
    // k₀S̄ = k₀A + t³/3 + ut with saddles t = ±√−u
    let w = 9.0 / 16.0 * k0 * k0 * (sb - sa) * (sb - sa);
    let u = if w.im.abs() <= 1e-12 * w.norm() { C64::new(-w.re.cbrt(), 0.0) } else { -w.powf(1.0 / 3.0) };
    if u.norm() < 1e-6 {
        return Err(Error::TooCloseToCaustic(u.norm()));
    }
    let s = (-u).sqrt();
    let target = -2.0 / 3.0 * s * s * s;
    // the saddle at t = +s carries k₀(S̄ − A) = −2s³/3
    let ((l1, s21), (l2, s22)) = if (k0 * (sa - mean) - target).norm() <= (k0 * (sb - mean) - target).norm() {
        ((a, s2a), (b, s2b))
    } else {
        ((b, s2b), (a, s2a))
    };
    let d = codim as f64;
    let f = |l: C64| (k0 / (4.0 * PI * I * (point + l))).powf(d / 2.0);
    let h1 = f(l1) * (2.0 * s / (k0 * s21)).sqrt();
    let h2 = f(l2) * (-2.0 * s / (k0 * s22)).sqrt();
    let p0 = (h1 + h2) / 2.0;
    let p1 = (h1 - h2) / (2.0 * s);
    let (ai, aip) = airy_pair(u)?;
    Ok(I / k0 * (I * k0 * mean).exp() * 2.0 * PI * (p0 * ai - I * p1 * aip))
}

/// Taylor form at `Λ̃_c`: `(i/k₀)e^{ik₀Γ₀}·2π[f·Ai(u)/κ − iσf′·Ai′(u)/κ²]`.
pub fn uniform_field(u: &UniformExpansion, k0: f64) -> Result<C64> {
    let kappa = u.kappa(k0);
    let (ai, aip) = airy_pair(u.argument(k0))?;
    let d = u.codim as f64;
    let l = u.point + u.lambda_c;
    let f = (k0 / (4.0 * PI * I * l)).powf(d / 2.0);
    let fp = -d / 2.0 * f / l;
    let s = u.sigma();
    Ok(I / k0 * (I * k0 * u.gamma0).exp() * (f * 2.0 * PI * ai / kappa - 2.0 * PI * I * s * fp * aip / (kappa * kappa)))
}

/// One stationary-phase term per contributing thimble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryTerm {
    pub critical: C64,
    pub coefficient: i64,
    pub value: C64,
    pub action: C64,
}

fn separation(cp: &CriticalPoint, all: &[CriticalPoint]) -> f64 {
    all.iter()
        .filter(|c| (c.lambda - cp.lambda).norm() > 0.0)
        .map(|c| (c.lambda - cp.lambda).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Gaussian approximation of each thimble integral,
/// `(i/k₀)f(Λ*)e^{ik₀S̄*}·t·√(2π/(k₀|S̄″|))` with `t` the oriented thimble
/// tangent.
pub fn stationary_terms(wf: &Wavefunction, dec: &Decomposition, cps: &[CriticalPoint], validity: f64) -> Result<Vec<StationaryTerm>> {
    let mut out = Vec::new();
    for (ct, n) in dec.active() {
        let ContourClass::Thimble(t) = ct else {
            return Err(Error::UnsupportedCombination("branch-point loops have no stationary point".into()));
        };
        let cp = &t.critical;
        let d2 = wf.action.eval_d2(cp.lambda)?;
        let kd = (wf.k * d2).norm();
        let sep = separation(cp, cps);
        if kd * sep * sep < validity {
            return Err(Error::TooCloseToCaustic(kd * sep * sep));
        }
        let s = wf.action.eval(cp.lambda)?;
        let f = wf.prefactor.eval(cp.lambda, 0)?;
        let value = I / wf.k0 * f * (I * wf.k * s).exp() * t.tangent * (2.0 * PI / kd).sqrt();
        out.push(StationaryTerm { critical: cp.lambda, coefficient: n, value, action: s });
    }
    Ok(out)
}

pub fn stationary_phase(wf: &Wavefunction, dec: &Decomposition, cps: &[CriticalPoint]) -> Result<C64> {
    Ok(stationary_terms(wf, dec, cps, STATIONARY_PHASE_VALIDITY)?
        .iter()
        .map(|t| t.coefficient as f64 * t.value)
        .sum())
}

/// Stationary-phase field at a point, with the decomposition computed from
/// the intersection numbers.
pub fn stationary_phase_at(model: &RefractionModel, source: &SourceSpec, x: &[f64], opts: &FieldOptions) -> Result<(C64, Vec<StationaryTerm>)> {
    let wf = field_wavefunction(model, source, x, opts)?;
    let cps = field_critical_points(&wf, opts)?;
    let dec = field_decomposition(&wf, &cps, opts, None)?;
    let terms = stationary_terms(&wf, &dec, &cps, STATIONARY_PHASE_VALIDITY)?;
    Ok((terms.iter().map(|t| t.coefficient as f64 * t.value).sum(), terms))
}

/// Affine map `λ = ν(Λ − Λ̃)` onto the fold form `λ³/3 + ζ₁λ`; on a ghost
/// source the map is singular (`ν = ∞`) and `Λ̃` is the surviving critical
/// point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMap {
    pub nu: C64,
    pub shift: C64,
    pub zeta1: C64,
    pub singular: bool,
}

pub fn lambda_map(model: &RefractionModel, source: &SourceSpec, x: &[f64]) -> Result<LambdaMap> {
    let class = classify_point(model, source, x)?;
    if class.ghost_source {
        let ghosts: Vec<C64> = crate::critical::ghost_source_locus(model, source, 1.0)
            .into_iter()
            .filter(|g| g.ghost && g.residue(x).abs() <= 1e-12)
            .map(|g| g.beta)
            .collect();
        let cps = critical_points_at(model, source, x)?;
        let shift = cps
            .iter()
            .filter(|c| c.real && c.lambda.re > 0.0)
            .min_by(|a, b| {
                let da = ghosts.iter().map(|g| (a.lambda - g).norm()).fold(f64::INFINITY, f64::min);
                let db = ghosts.iter().map(|g| (b.lambda - g).norm()).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db)
            })
            .map(|c| c.lambda)
            .ok_or(Error::UnclassifiedCaustic)?;
        return Ok(LambdaMap { nu: C64::new(f64::INFINITY, 0.0), shift, zeta1: C64::new(0.0, 0.0), singular: true });
    }
    let SourceSpec::PointDelta { at } = source else {
        return Err(Error::UnclassifiedCaustic);
    };
    let series = laurent_point_source(model, at, x, 1.0, 3).map_err(|_| Error::UnclassifiedCaustic)?;
    let u = UniformExpansion::from_series(&series).map_err(|_| Error::UnclassifiedCaustic)?;
    let nu = (3.0 * u.gamma3).powf(1.0 / 3.0);
    let nu = if u.gamma3.im == 0.0 { C64::new((3.0 * u.gamma3.re).cbrt(), 0.0) } else { nu };
    Ok(LambdaMap { nu, shift: u.point + u.lambda_c, zeta1: u.gamma1 / nu, singular: false })
}

/// Critical points of the `A_N` generating polynomial
/// `λ^{N+1}/(N+1) + Σ ζ_j λ^j/j`, i.e. roots of `λ^N + Σ ζ_j λ^{j−1}`, with
/// `zeta = [ζ₁, …, ζ_{N−1}]`.
pub fn generating_critical_points(zeta: &[C64]) -> Result<Vec<C64>> {
    let n = zeta.len() + 1;
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    for (j, z) in zeta.iter().enumerate() {
        c[j] = *z;
    }
    CPoly(c).roots()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub t: f64,
    pub smear: f64,
    /// Critical point or branch point carrying the arrival.
    pub base: C64,
    pub coefficient: i64,
    pub branch_loop: bool,
    /// Index of the contour in the decomposition.
    pub contour: usize,
}

/// One arrival per contributing contour, ordered by time.
pub fn arrival_times(wf: &Wavefunction, dec: &Decomposition, c0: f64) -> Result<Vec<Arrival>> {
    let mut out = Vec::new();
    for (i, (ct, n)) in dec.contours.iter().zip(&dec.coefficients).enumerate() {
        if *n == 0 {
            continue;
        }
        let s = ct.action_value(&wf.action)?;
        out.push(Arrival {
            t: s.re / c0,
            smear: s.im,
            base: ct.base(),
            coefficient: *n,
            branch_loop: matches!(ct, ContourClass::BranchLoop { .. }),
            contour: i,
        });
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

/// Arrivals at `x`; the topology is taken at wavenumber `opts.k0`.
pub fn arrivals_at(model: &RefractionModel, source: &SourceSpec, x: &[f64], opts: &FieldOptions, c0: f64) -> Result<Vec<Arrival>> {
    let wf = field_wavefunction(model, source, x, opts)?;
    let cps = field_critical_points(&wf, opts)?;
    let dec = field_decomposition(&wf, &cps, opts, None)?;
    arrival_times(&wf, &dec, c0)
}
