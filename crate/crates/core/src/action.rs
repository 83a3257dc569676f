//! Closed-form einbein actions and the proper-time wave function.
//!
//! The field is `φ(x) = (i/k0) ∫_Γ dΛ Ψ(Λ)` with `Ψ = f(Λ)·exp(i k0 S̄(Λ))`.
//! Every catalog action obeys `(∇S̄)² − n² + ∂_Λ S̄ = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RefractionModel, SourceSpec};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// One closed-form piece of `S̄(Λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ActionTerm {
    /// `residue / (Λ − beta)`
    Pole { beta: C64, residue: C64 },
    /// `coeff · Λ^power`
    Monomial { power: u32, coeff: C64 },
    /// `√α[(z′²+z²)cos(2√αΛ) − 2z′z] / (2 sin(2√αΛ))`
    Channel { alpha: f64, z: f64, zp: f64 },
}

/// `(cot θ, csc θ)` without overflow far from the real axis.
fn cot_csc(th: C64) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    if th.im >= 0.0 {
        let e = (2.0 * I * th).exp();
        (-I * (one + e) / (one - e), -2.0 * I * (I * th).exp() / (one - e))
    } else {
        let e = (-2.0 * I * th).exp();
        (I * (one + e) / (one - e), 2.0 * I * (-I * th).exp() / (one - e))
    }
}

impl ActionTerm {
    fn eval_all(&self, l: C64) -> [C64; 3] {
        match *self {
            ActionTerm::Pole { residue, .. } if residue.norm() == 0.0 => [C64::new(0.0, 0.0); 3],
            ActionTerm::Pole { beta, residue } => {
                let u = (l - beta).inv();
                [residue * u, -residue * u * u, 2.0 * residue * u * u * u]
            }
            ActionTerm::Monomial { power, coeff } => {
                let p = power as i32;
                let v = coeff * l.powi(p);
                let d1 = if p >= 1 { coeff * (p as f64) * l.powi(p - 1) } else { C64::new(0.0, 0.0) };
                let d2 = if p >= 2 {
                    coeff * ((p * (p - 1)) as f64) * l.powi(p - 2)
                } else {
                    C64::new(0.0, 0.0)
                };
                [v, d1, d2]
            }
            ActionTerm::Channel { alpha, z, zp } => {
                let s = alpha.sqrt();
                let th = 2.0 * s * l;
                let (cot, csc) = cot_csc(th);
                let p = zp * zp + z * z;
                let q = 2.0 * zp * z;
                let v = s * (cot * p - q * csc) / 2.0;
                let d1 = -alpha * (p * csc * csc - q * cot * csc);
                let d2 = 2.0 * alpha * s * (2.0 * p * csc * csc * cot - q * csc * (cot * cot + csc * csc));
                [v, d1, d2]
            }
        }
    }
}

/// `S̄(Λ)` as a sum of closed-form terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EinbeinAction {
    pub terms: Vec<ActionTerm>,
    /// Order of the pole of `S̄` at `Λ = ∞`.
    pub m_inf: u32,
    /// Coefficient of `Λ^{m_inf}`.
    pub mu_inf: C64,
    /// Radius around finite poles inside which evaluation is refused.
    pub guard: f64,
}

impl EinbeinAction {
    pub fn new(terms: Vec<ActionTerm>, guard: f64) -> Self {
        let (m_inf, mu_inf) = terms
            .iter()
            .filter_map(|t| match t {
                ActionTerm::Monomial { power, coeff } if *power >= 1 && coeff.norm() > 0.0 => {
                    Some((*power, *coeff))
                }
                _ => None,
            })
            .max_by_key(|(p, _)| *p)
            .unwrap_or((1, C64::new(0.0, 0.0)));
        EinbeinAction { terms, m_inf, mu_inf, guard }
    }

    /// Finite poles with nonzero residue inside `|Re Λ| ≤ window`.
    pub fn poles(&self, window: f64) -> Vec<(C64, C64)> {
        let mut out: Vec<(C64, C64)> = Vec::new();
        let mut push = |b: C64, r: C64| {
            if let Some(e) = out.iter_mut().find(|(bb, _)| (*bb - b).norm() < 1e-14) {
                e.1 += r;
            } else {
                out.push((b, r));
            }
        };
        for t in &self.terms {
            match *t {
                ActionTerm::Pole { beta, residue } => push(beta, residue),
                ActionTerm::Channel { alpha, z, zp } => {
                    let sp = PI / (2.0 * alpha.sqrt());
                    let nmax = (window / sp).floor() as i64;
                    for n in -nmax..=nmax {
                        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                        let r = (z - sign * zp).powi(2) / 4.0;
                        push(C64::new(n as f64 * sp, 0.0), C64::new(r, 0.0));
                    }
                }
                ActionTerm::Monomial { .. } => {}
            }
        }
        out.retain(|(_, r)| r.norm() > 0.0);
        out
    }

    /// Spacing of the channel poles, if any.
    pub fn channel_spacing(&self) -> Option<f64> {
        self.terms.iter().find_map(|t| match t {
            ActionTerm::Channel { alpha, .. } => Some(PI / (2.0 * alpha.sqrt())),
            _ => None,
        })
    }

    fn check(&self, l: C64) -> Result<()> {
        for t in &self.terms {
            match *t {
                ActionTerm::Pole { beta, residue } => {
                    if residue.norm() > 0.0 && (l - beta).norm() < self.guard {
                        return Err(Error::PoleEvaluation(l));
                    }
                }
                ActionTerm::Channel { alpha, .. } => {
                    let sp = PI / (2.0 * alpha.sqrt());
                    let n = (l.re / sp).round();
                    if (l - C64::new(n * sp, 0.0)).norm() < self.guard {
                        return Err(Error::PoleEvaluation(l));
                    }
                }
                ActionTerm::Monomial { .. } => {}
            }
        }
        if !l.re.is_finite() || !l.im.is_finite() {
            return Err(Error::InvalidInput("non-finite Λ".into()));
        }
        Ok(())
    }

    /// `S̄, S̄′, S̄″` at `Λ`.
    pub fn eval_all(&self, l: C64) -> Result<[C64; 3]> {
        self.check(l)?;
        let mut acc = [C64::new(0.0, 0.0); 3];
        for t in &self.terms {
            let v = t.eval_all(l);
            for k in 0..3 {
                acc[k] += v[k];
            }
        }
        Ok(acc)
    }

    pub fn eval(&self, l: C64) -> Result<C64> {
        Ok(self.eval_all(l)?[0])
    }

    pub fn eval_d1(&self, l: C64) -> Result<C64> {
        Ok(self.eval_all(l)?[1])
    }

    pub fn eval_d2(&self, l: C64) -> Result<C64> {
        Ok(self.eval_all(l)?[2])
    }
}

/// Multiplicative factor of the prefactor `f(Λ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Factor {
    /// `(Λ − at)^exponent`
    Power { at: C64, exponent: f64 },
    /// `(sin(2√αΛ)/(2√αΛ))^exponent`
    Sinc { alpha: f64, exponent: f64 },
}

/// Argument in `(−3π/2, π/2]`: branch cuts point straight up.
fn arg_up(w: C64) -> f64 {
    let a = w.arg();
    if a > PI / 2.0 {
        a - 2.0 * PI
    } else {
        a
    }
}

fn log_up(w: C64) -> C64 {
    C64::new(w.norm().ln(), arg_up(w))
}

fn log_sinc_lower(th: C64) -> C64 {
    let w = (-2.0 * I * th).exp();
    I * th - 2f64.ln() - I * (PI / 2.0) + (1.0 - w).ln() - log_up(th)
}

fn log_sinc_upper(th: C64) -> C64 {
    let w = (2.0 * I * th).exp();
    -I * th - 2f64.ln() + I * (PI / 2.0) + (1.0 - w).ln() - th.ln()
}

/// `ln(sin θ / θ)` on the reference sheet: continuous in the closed lower
/// half plane, continued vertically into the upper half plane.
pub fn log_sinc(th: C64) -> C64 {
    if th.norm() < 1e-4 {
        let t2 = th * th;
        return -t2 / 6.0 - t2 * t2 / 180.0 - t2 * t2 * t2 / 2835.0;
    }
    if th.im <= 0.0 {
        return log_sinc_lower(th);
    }
    let up = log_sinc_upper(th);
    let base = C64::new(th.re, 0.0);
    let lo = if base.norm() < 1e-4 { C64::new(0.0, 0.0) } else { log_sinc_lower(base) };
    let hi = if base.norm() < 1e-4 { C64::new(0.0, 0.0) } else { log_sinc_upper(base) };
    let m = ((lo.im - hi.im) / (2.0 * PI)).round();
    up + C64::new(0.0, 2.0 * PI * m)
}

impl Factor {
    pub fn exponent(&self) -> f64 {
        match self {
            Factor::Power { exponent, .. } | Factor::Sinc { exponent, .. } => *exponent,
        }
    }

    /// Distance to the nearest branch point of this factor.
    pub fn branch_distance(&self, l: C64) -> f64 {
        match *self {
            Factor::Power { at, .. } => (l - at).norm(),
            Factor::Sinc { alpha, .. } => {
                let sp = PI / (2.0 * alpha.sqrt());
                let n = (l.re / sp).round();
                if n == 0.0 {
                    let a = (l - C64::new(sp, 0.0)).norm();
                    let b = (l + C64::new(sp, 0.0)).norm();
                    a.min(b)
                } else {
                    (l - C64::new(n * sp, 0.0)).norm()
                }
            }
        }
    }

    /// Logarithm of the base on the reference sheet.
    pub fn base_log(&self, l: C64) -> C64 {
        match *self {
            Factor::Power { at, .. } => log_up(l - at),
            Factor::Sinc { alpha, .. } => log_sinc(2.0 * alpha.sqrt() * l),
        }
    }
}

/// `f(Λ) = constant · Π factors`, with the sheet index multiplying each factor
/// by `exp(2πi·sheet·exponent)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prefactor {
    pub constant: C64,
    pub factors: Vec<Factor>,
    pub sheet: i64,
}

impl Prefactor {
    pub fn branch_distance(&self, l: C64) -> f64 {
        self.factors.iter().map(|f| f.branch_distance(l)).fold(f64::INFINITY, f64::min)
    }

    fn check(&self, l: C64) -> Result<()> {
        if self.branch_distance(l) < 1e-300 {
            return Err(Error::BranchPointEvaluation(l));
        }
        Ok(())
    }

    /// Per-factor base logarithms on the reference sheet.
    pub fn base_logs(&self, l: C64) -> Result<Vec<C64>> {
        self.check(l)?;
        Ok(self.factors.iter().map(|f| f.base_log(l)).collect())
    }

    /// Base logarithms continued from `reference` (the logs at a nearby point
    /// of the same path).
    pub fn logs_near(&self, l: C64, reference: &[C64]) -> Result<Vec<C64>> {
        let mut logs = self.base_logs(l)?;
        for (v, r) in logs.iter_mut().zip(reference) {
            let k = ((r.im - v.im) / (2.0 * PI)).round();
            v.im += 2.0 * PI * k;
        }
        Ok(logs)
    }

    /// `ln f` assembled from per-factor base logs.
    pub fn log_from(&self, logs: &[C64], sheet: i64) -> C64 {
        let mut acc = self.constant.ln();
        for (f, lg) in self.factors.iter().zip(logs) {
            let e = f.exponent();
            acc += e * (*lg + C64::new(0.0, 2.0 * PI * (sheet + self.sheet) as f64));
        }
        acc
    }

    pub fn eval(&self, l: C64, sheet: i64) -> Result<C64> {
        let logs = self.base_logs(l)?;
        Ok(self.log_from(&logs, sheet).exp())
    }
}

/// Build `S̄` and `f` for a catalog model, a source and an observation point.
pub fn build_action(
    model: &RefractionModel,
    source: &SourceSpec,
    x: &[f64],
    k0: f64,
) -> Result<(EinbeinAction, Prefactor)> {
    model.validate()?;
    source.validate()?;
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::InvalidInput(format!("k0 must be positive, got {k0}")));
    }
    if let RefractionModel::PolynomialZ { .. } = model {
        return Err(Error::UnsupportedCombination(
            "PolynomialZ has no closed-form action; use the laurent module".into(),
        ));
    }
    let dim = source.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "point has {} components, source has {}",
            x.len(),
            dim
        )));
    }
    let c = |v: f64| C64::new(v, 0.0);
    let n0sq = model.n0sq();
    let mut terms = Vec::new();
    let mut factors = Vec::new();
    let mut scale: f64 = 1.0;
    let norm = |d: usize| (k0 / (4.0 * PI)).powf(d as f64 / 2.0) * C64::from_polar(1.0, -PI * d as f64 / 4.0);

    let constant = match source {
        SourceSpec::PhaseSheet { mu, z0 } => {
            let RefractionModel::Constant { .. } = model else {
                return Err(Error::UnsupportedCombination(format!(
                    "phase-sheet source needs the constant model, got {}",
                    model.name()
                )));
            };
            let (xx, z) = (x[0], x[1] - z0);
            // below the ghost threshold the point is on the ghost source
            let r = xx * xx / 4.0;
            let r = if r <= crate::critical::GHOST_RESIDUE { 0.0 } else { r };
            terms.push(ActionTerm::Pole { beta: c(*mu), residue: c(r) });
            terms.push(ActionTerm::Pole { beta: c(0.0), residue: c(z * z / 4.0) });
            terms.push(ActionTerm::Monomial { power: 1, coeff: c(n0sq) });
            factors.push(Factor::Power { at: c(0.0), exponent: -0.5 });
            factors.push(Factor::Power { at: c(*mu), exponent: -0.5 });
            scale = scale.max(*mu);
            k0 * (mu / (4.0 * PI * k0)).sqrt() * C64::from_polar(1.0, -3.0 * PI / 4.0)
        }
        SourceSpec::PointDelta { at } => {
            let d = dim;
            let zi = d - 1;
            let (z, zp) = (x[zi], at[zi]);
            let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
            match model {
                RefractionModel::Constant { .. } => {
                    terms.push(ActionTerm::Pole { beta: c(0.0), residue: c(sq(x, at) / 4.0) });
                    terms.push(ActionTerm::Monomial { power: 1, coeff: c(n0sq) });
                }
                RefractionModel::LinearZ { a, .. } => {
                    terms.push(ActionTerm::Pole { beta: c(0.0), residue: c(sq(x, at) / 4.0) });
                    terms.push(ActionTerm::Monomial { power: 1, coeff: c(n0sq - a * (z + zp) / 2.0) });
                    if *a != 0.0 {
                        terms.push(ActionTerm::Monomial { power: 3, coeff: c(-a * a / 12.0) });
                    }
                }
                RefractionModel::QuadraticZ { alpha, .. } => {
                    if !(*alpha > 0.0) {
                        return Err(Error::InvalidInput("channel curvature must be positive".into()));
                    }
                    terms.push(ActionTerm::Pole { beta: c(0.0), residue: c(sq(&x[..zi], &at[..zi]) / 4.0) });
                    terms.push(ActionTerm::Monomial { power: 1, coeff: c(n0sq) });
                    terms.push(ActionTerm::Channel { alpha: *alpha, z, zp });
                    factors.push(Factor::Sinc { alpha: *alpha, exponent: -0.5 });
                    scale = PI / (2.0 * alpha.sqrt());
                }
                RefractionModel::LinearXQuadraticZ { alpha, beta, .. } => {
                    if d < 2 {
                        return Err(Error::DimensionMismatch("linear-x model needs D ≥ 2".into()));
                    }
                    if !(*alpha > 0.0) {
                        return Err(Error::InvalidInput("channel curvature must be positive".into()));
                    }
                    terms.push(ActionTerm::Pole { beta: c(0.0), residue: c(sq(&x[..zi], &at[..zi]) / 4.0) });
                    terms.push(ActionTerm::Monomial {
                        power: 1,
                        coeff: c(n0sq - beta * (x[0] + at[0]) / 2.0),
                    });
                    if *beta != 0.0 {
                        terms.push(ActionTerm::Monomial { power: 3, coeff: c(-beta * beta / 12.0) });
                    }
                    terms.push(ActionTerm::Channel { alpha: *alpha, z, zp });
                    factors.push(Factor::Sinc { alpha: *alpha, exponent: -0.5 });
                    scale = PI / (2.0 * alpha.sqrt());
                }
                RefractionModel::PolynomialZ { .. } => unreachable!(),
            }
            factors.insert(0, Factor::Power { at: c(0.0), exponent: -(d as f64) / 2.0 });
            norm(d)
        }
    };
    Ok((
        EinbeinAction::new(terms, 1e-9 * scale),
        Prefactor { constant, factors, sheet: 0 },
    ))
}

/// Closed-form `∇ₓS̄` for catalog actions.
pub fn spatial_gradient(
    model: &RefractionModel,
    source: &SourceSpec,
    x: &[f64],
    l: C64,
) -> Result<Vec<C64>> {
    let d = source.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch("gradient point".into()));
    }
    let c = |v: f64| C64::new(v, 0.0);
    let channel = |alpha: f64, z: f64, zp: f64| {
        let s = alpha.sqrt();
        let th = 2.0 * s * l;
        s * (z * th.cos() - zp) / th.sin()
    };
    match source {
        SourceSpec::PhaseSheet { mu, z0 } => {
            Ok(vec![c(x[0]) / (2.0 * (l - mu)), c(x[1] - z0) / (2.0 * l)])
        }
        SourceSpec::PointDelta { at } => {
            let mut g: Vec<C64> = x.iter().zip(at).map(|(u, v)| c(u - v) / (2.0 * l)).collect();
            let zi = d - 1;
            match model {
                RefractionModel::Constant { .. } => {}
                RefractionModel::LinearZ { a, .. } => g[zi] -= a * l / 2.0,
                RefractionModel::QuadraticZ { alpha, .. } => g[zi] = channel(*alpha, x[zi], at[zi]),
                RefractionModel::LinearXQuadraticZ { alpha, beta, .. } => {
                    g[0] -= beta * l / 2.0;
                    g[zi] = channel(*alpha, x[zi], at[zi]);
                }
                RefractionModel::PolynomialZ { .. } => return Err(Error::NonPolynomialModel),
            }
            Ok(g)
        }
    }
}

/// `(∇S̄)² − n² + ∂_Λ S̄` evaluated from the closed forms.
pub fn hamilton_jacobi_residual(
    model: &RefractionModel,
    source: &SourceSpec,
    x: &[f64],
    l: C64,
) -> Result<C64> {
    let (action, _) = build_action(model, source, x, 1.0)?;
    let g = spatial_gradient(model, source, x, l)?;
    let g2: C64 = g.iter().map(|v| v * v).sum();
    Ok(g2 - model.n2(x) + action.eval_d1(l)?)
}

/// Wave function `Ψ(Λ) = f(Λ) exp(i k S̄(Λ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wavefunction {
    pub action: EinbeinAction,
    pub prefactor: Prefactor,
    pub k0: f64,
    /// Wavenumber in the exponent; `k0` unless damped.
    pub k: C64,
    pub model: Option<RefractionModel>,
    pub source: Option<SourceSpec>,
    pub x: Vec<f64>,
}

impl Wavefunction {
    pub fn new(model: &RefractionModel, source: &SourceSpec, x: &[f64], k0: f64) -> Result<Self> {
        let (action, prefactor) = build_action(model, source, x, k0)?;
        Ok(Wavefunction {
            action,
            prefactor,
            k0,
            k: C64::new(k0, 0.0),
            model: Some(model.clone()),
            source: Some(source.clone()),
            x: x.to_vec(),
        })
    }

    pub fn from_parts(action: EinbeinAction, prefactor: Prefactor, k0: f64) -> Self {
        Wavefunction { action, prefactor, k0, k: C64::new(k0, 0.0), model: None, source: None, x: vec![] }
    }

    /// Same wave function with `k0 → k0(1 + iδ)` in the exponent.
    pub fn damped(&self, delta: f64) -> Self {
        let mut w = self.clone();
        w.k = C64::new(self.k0, self.k0 * delta);
        w
    }

    /// Rebuild at another observation point.
    pub fn at(&self, x: &[f64]) -> Result<Self> {
        match (&self.model, &self.source) {
            (Some(m), Some(s)) => {
                let mut w = Wavefunction::new(m, s, x, self.k0)?;
                w.k = self.k;
                Ok(w)
            }
            _ => Err(Error::InvalidInput("wave function was built without a model".into())),
        }
    }

    pub fn log_psi(&self, l: C64, sheet: i64) -> Result<C64> {
        let s = self.action.eval(l)?;
        let logs = self.prefactor.base_logs(l)?;
        Ok(self.prefactor.log_from(&logs, sheet) + I * self.k * s)
    }

    pub fn eval_psi(&self, l: C64, sheet: i64) -> Result<C64> {
        Ok(self.log_psi(l, sheet)?.exp())
    }

    /// `ln Ψ` continued from per-factor logs at a nearby point; returns the
    /// value and the logs to continue from.
    pub fn log_psi_near(&self, l: C64, reference: &[C64], sheet: i64) -> Result<(C64, Vec<C64>)> {
        let s = self.action.eval(l)?;
        let logs = self.prefactor.logs_near(l, reference)?;
        Ok((self.prefactor.log_from(&logs, sheet) + I * self.k * s, logs))
    }
}

/// Finite-difference residual of `(i/k0)∂_ΛΨ + (k0⁻²∇² + n²)Ψ`, divided by `|Ψ|`.
pub fn schrodinger_residual(wf: &Wavefunction, l: C64, x: &[f64], h: f64, hl: f64) -> Result<f64> {
    if !(h > 0.0 && hl > 0.0) {
        return Err(Error::InvalidInput("steps must be positive".into()));
    }
    let model = wf.model.as_ref().ok_or(Error::InvalidInput("no model".into()))?;
    let w0 = wf.at(x)?;
    let ref_logs = w0.prefactor.base_logs(l)?;
    let psi_at = |w: &Wavefunction, lam: C64| -> Result<C64> {
        Ok(w.log_psi_near(lam, &ref_logs, 0)?.0.exp())
    };
    let p0 = psi_at(&w0, l)?;
    let dl = (psi_at(&w0, l + hl)? - psi_at(&w0, l - hl)?) / (2.0 * hl);
    let mut lap = C64::new(0.0, 0.0);
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let pp = psi_at(&w0.at(&xp)?, l)?;
        let pm = psi_at(&w0.at(&xm)?, l)?;
        lap += (pp - 2.0 * p0 + pm) / (h * h);
    }
    let k0 = wf.k0;
    let r = I / k0 * dl + lap / (k0 * k0) + model.n2(x) * p0;
    Ok(r.norm() / p0.norm())
}
