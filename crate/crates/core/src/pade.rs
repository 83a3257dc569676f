//! Meromorphic recovery of `S̄` from its Laurent series about `Λ = 0`.
//!
//! `T(Λ) = Λ·S̄(Λ)` is regular at the origin; its `[N+1/M]` Padé approximant
//! gives `S̄ ≈ A(Λ)/B(Λ)` with `B = Λ·Q(Λ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::action::{ActionTerm, EinbeinAction, C64};
use crate::error::{Error, Result};
use crate::laurent::LaurentSeries;
use crate::poly::CPoly;

/// Relative tolerance of the linear solve.
pub const SOLVE_TOL: f64 = 1e-10;
/// Residues below this fraction of the largest one mark a spurious pole.
pub const SPURIOUS_RESIDUE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhostPole {
    pub beta: C64,
    pub residue: C64,
    pub codim: usize,
    pub spurious: bool,
}

/// `S̄ ≈ A/B` with `B` monic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalApproximant {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub poles: Vec<GhostPole>,
    /// Relative residual of the defining linear system.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiemannHurwitz {
    pub m_inf: usize,
    pub n_poles: usize,
    pub n_critical: usize,
    /// Number of essential singularities `m∞ + n_P`.
    pub n_singular: usize,
}

/// `[n/m]` Padé coefficients of a power series with `q(0) = 1`.
pub fn pade(t: &[C64], n: usize, m: usize) -> Result<(Vec<C64>, Vec<C64>, f64)> {
    if t.len() < n + m + 1 {
        return Err(Error::InvalidInput(format!(
            "need {} series coefficients, have {}",
            n + m + 1,
            t.len()
        )));
    }
    let tc = |k: i64| if k < 0 { C64::new(0.0, 0.0) } else { t[k as usize] };
    let mut q = vec![C64::new(1.0, 0.0)];
    let mut residual = 0.0;
    if m > 0 {
        let mut mat = DMatrix::<C64>::zeros(m, m);
        let mut rhs = DVector::<C64>::zeros(m);
        for r in 0..m {
            let k = (n + 1 + r) as i64;
            for j in 1..=m {
                mat[(r, j - 1)] = tc(k - j as i64);
            }
            rhs[r] = -tc(k);
        }
        let sol = mat.clone().lu().solve(&rhs).ok_or(Error::IllConditioned(f64::INFINITY))?;
        let res = (&mat * &sol - &rhs).norm();
        let scale = rhs.norm().max(mat.norm() * sol.norm()).max(f64::MIN_POSITIVE);
        residual = res / scale;
        if !residual.is_finite() || residual > SOLVE_TOL {
            return Err(Error::IllConditioned(residual));
        }
        q.extend(sol.iter());
    }
    let p: Vec<C64> = (0..=n)
        .map(|k| (0..=m.min(k)).map(|j| q[j] * tc((k - j) as i64)).sum())
        .collect();
    Ok((p, q, residual))
}

/// Taylor coefficients of `p/q` up to `len` terms (`q(0) ≠ 0`).
pub fn expand(p: &[C64], q: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len];
    for k in 0..len {
        let mut v = *p.get(k).unwrap_or(&C64::new(0.0, 0.0));
        for j in 1..q.len().min(k + 1) {
            v -= q[j] * out[k - j];
        }
        out[k] = v / q[0];
    }
    out
}

impl RationalApproximant {
    /// Exact representation of an action with only pole and monomial terms.
    pub fn from_action(action: &EinbeinAction) -> Result<Self> {
        let mut poles: Vec<(C64, C64)> = Vec::new();
        let mut entire = CPoly(vec![C64::new(0.0, 0.0)]);
        for t in &action.terms {
            match *t {
                ActionTerm::Pole { beta, residue } => {
                    if let Some(e) = poles.iter_mut().find(|(b, _)| (*b - beta).norm() < 1e-14) {
                        e.1 += residue;
                    } else {
                        poles.push((beta, residue));
                    }
                }
                ActionTerm::Monomial { power, coeff } => {
                    let mut c = vec![C64::new(0.0, 0.0); power as usize + 1];
                    c[power as usize] = coeff;
                    entire = entire.add(&CPoly(c));
                }
                ActionTerm::Channel { .. } => {
                    return Err(Error::UnsupportedCombination("channel action is not rational".into()))
                }
            }
        }
        let roots: Vec<C64> = poles.iter().map(|p| p.0).collect();
        let b = CPoly::from_roots(&roots);
        let mut a = entire.mul(&b);
        for (i, (_, r)) in poles.iter().enumerate() {
            let others: Vec<C64> = roots.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
            a = a.add(&CPoly::from_roots(&others).scale(*r));
        }
        let poles = poles
            .iter()
            .map(|(beta, residue)| GhostPole { beta: *beta, residue: *residue, codim: 1, spurious: residue.norm() == 0.0 })
            .collect();
        Ok(RationalApproximant { a: a.0, b: b.0, poles, residual: 0.0 })
    }

    pub fn eval(&self, l: C64) -> C64 {
        CPoly(self.a.clone()).eval(l) / CPoly(self.b.clone()).eval(l)
    }

    pub fn degrees(&self) -> (usize, usize) {
        (CPoly(self.a.clone()).degree(), CPoly(self.b.clone()).degree())
    }

    /// Numerator of `d(A/B)/dΛ`, i.e. `A′B − AB′`.
    pub fn critical_numerator(&self) -> CPoly {
        let a = CPoly(self.a.clone());
        let b = CPoly(self.b.clone());
        a.deriv().mul(&b).add(&a.mul(&b.deriv()).scale(C64::new(-1.0, 0.0)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (n, m) = self.degrees();
        serde_json::json!({
            "N": n,
            "M": m,
            "A": self.a.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
            "B": self.b.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
            "ghost_poles": self.poles.iter().map(|p| serde_json::json!({
                "beta": [p.beta.re, p.beta.im],
                "residue": [p.residue.re, p.residue.im],
                "codim": p.codim,
                "spurious": p.spurious,
            })).collect::<Vec<_>>(),
            "residual": self.residual,
        })
    }
}

/// Fit `S̄ ≈ A/(Λ·Q)` from the `k0 → ∞` grade of a series about `Λ = 0`.
pub fn fit_rational(series: &LaurentSeries, n: usize, m: usize) -> Result<RationalApproximant> {
    if series.point.norm() != 0.0 {
        return Err(Error::InvalidInput("series must be about Λ = 0".into()));
    }
    if series.order < n + m + 1 {
        return Err(Error::InvalidInput(format!(
            "series order {} below N+M+1 = {}",
            series.order,
            n + m + 1
        )));
    }
    let t = series.values(true);
    let (p, q, residual) = pade(&t, n + 1, m)?;
    let qq = CPoly(q.clone());
    let qm = qq.0[qq.degree()];
    let roots = if qq.degree() > 0 { qq.roots()? } else { Vec::new() };
    let scale = t.iter().map(|c| c.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if roots.iter().any(|r| r.norm() < 1e-12 * scale.max(1.0)) {
        return Err(Error::DegenerateDenominator);
    }
    let pp = CPoly(p.clone());
    let dq = qq.deriv();
    let mut poles = vec![GhostPole {
        beta: C64::new(0.0, 0.0),
        residue: t[0],
        codim: series.codim,
        spurious: false,
    }];
    let mut max_res = t[0].norm();
    for r in &roots {
        let residue = pp.eval(*r) / (r * dq.eval(*r));
        max_res = max_res.max(residue.norm());
        poles.push(GhostPole { beta: *r, residue, codim: 1, spurious: false });
    }
    for g in poles.iter_mut().skip(1) {
        g.spurious = g.residue.norm() < SPURIOUS_RESIDUE * max_res;
    }
    // monic B = Λ·Q/q_M, A = P/q_M
    let mut b = vec![C64::new(0.0, 0.0)];
    b.extend(q.iter().map(|c| c / qm));
    let a = p.iter().map(|c| c / qm).collect();
    Ok(RationalApproximant { a, b, poles, residual })
}

/// Critical-point count for a rational action and its consistency check.
pub fn riemann_hurwitz_count(approx: &RationalApproximant) -> Result<RiemannHurwitz> {
    let (na, nb) = approx.degrees();
    let bp = CPoly(approx.b.clone());
    if nb > 1 {
        let roots = bp.roots()?;
        let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if (roots[i] - roots[j]).norm() < 1e-8 * scale {
                    return Err(Error::MultipleRoot);
                }
            }
        }
    }
    if na <= nb {
        return Err(Error::InvalidInput("numerator degree must exceed denominator degree".into()));
    }
    let m_inf = na - nb;
    let n_poles = nb;
    let num = approx.critical_numerator();
    let found = num.roots()?.len();
    let n_critical = na + nb - 1;
    if found != n_critical || n_critical != m_inf + 2 * n_poles - 1 {
        return Err(Error::NonConvergence(format!(
            "critical-point count {found} differs from {n_critical}"
        )));
    }
    Ok(RiemannHurwitz { m_inf, n_poles, n_critical, n_singular: m_inf + n_poles })
}
