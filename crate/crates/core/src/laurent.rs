//! Laurent expansion of `S̄` about its poles for depth-only `n²(z)`.
//!
//! About `Λ = 0` with `γ₀ = 0`, collecting `Λ^{m−1}` in the proper-time
//! Schrödinger equation gives
//!
//! `(m + (z − z′)∂_z) γ_m = δ_{m1} n² + (i/k0) ∂²_z γ_{m−1} − Σ_{j+l=m−1} ∂γ_j ∂γ_l`
//!
//! with `j, l ≥ 1`. Coefficients are polynomials in `w = z − z′`, stored per
//! power of `(i/k0)` with exact rational coefficients.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::action::C64;
use crate::error::{Error, Result};
use crate::model::RefractionModel;
use crate::poly::{rat, rat_f64, RPoly};

/// Highest order accepted by the recursion.
pub const MAX_ORDER: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    /// Expansion point `P`.
    pub point: C64,
    /// Codimension of the source attached to the pole.
    pub codim: usize,
    /// Source depth used as origin of `w = z − z′` (already mirrored for ghost poles).
    pub zp: BigRational,
    /// `graded[m + 1][g]` is the `(i/k0)^g` part of `γ_m` as a polynomial in `w`.
    pub graded: Vec<Vec<RPoly>>,
    /// Numeric grade-0 additions per order (transverse parts), same indexing.
    pub extra: Vec<C64>,
    pub order: usize,
    /// Observation depth and wavenumber the numeric values refer to.
    pub z: f64,
    pub k0: f64,
}

impl LaurentSeries {
    fn idx(m: i64) -> usize {
        (m + 1) as usize
    }

    /// Exact graded polynomial of `γ_m`, if stored.
    pub fn poly(&self, m: i64, grade: usize) -> RPoly {
        self.graded
            .get(Self::idx(m))
            .and_then(|g| g.get(grade).cloned())
            .unwrap_or_else(RPoly::zero)
    }

    /// Value of `γ_m` at the stored depth and wavenumber.
    pub fn value(&self, m: i64) -> C64 {
        self.value_graded(m, true)
    }

    /// `k0 → ∞` part of `γ_m`.
    pub fn leading(&self, m: i64) -> C64 {
        self.value_graded(m, false)
    }

    fn value_graded(&self, m: i64, all: bool) -> C64 {
        let i = Self::idx(m);
        let w = self.z - self.zp.to_f64().unwrap_or(f64::NAN);
        let mut acc = self.extra.get(i).copied().unwrap_or_default();
        if let Some(gs) = self.graded.get(i) {
            let ik = C64::new(0.0, 1.0 / self.k0);
            let mut pw = C64::new(1.0, 0.0);
            for (g, p) in gs.iter().enumerate() {
                if g > 0 && !all {
                    break;
                }
                acc += pw * p.eval_f64(w);
                pw *= ik;
            }
        }
        acc
    }

    /// Values `γ_{−1}, …, γ_M` (grade-0 only when `leading_only`).
    pub fn values(&self, leading_only: bool) -> Vec<C64> {
        (-1..=self.order as i64).map(|m| self.value_graded(m, !leading_only)).collect()
    }

    /// Partial sum `Σ γ_m u^m` with `u = Λ − P`.
    pub fn sum(&self, l: C64, leading_only: bool) -> C64 {
        let u = l - self.point;
        self.values(leading_only)
            .iter()
            .enumerate()
            .map(|(i, g)| g * u.powi(i as i32 - 1))
            .sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut coeffs = Vec::new();
        for (i, gs) in self.graded.iter().enumerate() {
            for (g, p) in gs.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                coeffs.push(serde_json::json!({
                    "m": i as i64 - 1,
                    "grade": g,
                    "poly": p.0.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                }));
            }
        }
        serde_json::json!({
            "pole": [self.point.re, self.point.im],
            "codim": self.codim,
            "variable": format!("z - ({})", self.zp),
            "coefficients": coeffs,
            "extra": self.extra.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        })
    }
}

/// Exact recursion on rational data: `n2` in powers of `z`, source depth `zp`.
pub fn point_source_exact(n2: &[BigRational], zp: &BigRational, order: usize) -> Result<Vec<Vec<RPoly>>> {
    if order < 1 {
        return Err(Error::InvalidInput("order must be at least 1".into()));
    }
    if order > MAX_ORDER {
        return Err(Error::OrderOverflow(order));
    }
    let n2w = RPoly(n2.to_vec()).trimmed().shift(zp);
    let mut g: Vec<Vec<RPoly>> = vec![Vec::new(); order + 2];
    // γ_{-1} = w²/4, γ_0 = 0
    g[0] = vec![RPoly(vec![rat(0, 1), rat(0, 1), rat(1, 4)])];
    g[1] = vec![RPoly::zero()];
    // first derivatives, same indexing as `g`
    let mut d1: Vec<Vec<RPoly>> = vec![Vec::new(), Vec::new()];
    for m in 1..=order {
        let mut rhs: Vec<RPoly> = vec![RPoly::zero(); m];
        if m == 1 {
            rhs[0] = n2w.clone();
        }
        for (gr, p) in g[m].iter().enumerate() {
            if gr + 1 < m {
                rhs[gr + 1] = rhs[gr + 1].add(&p.deriv().deriv());
            }
        }
        for j in 1..m - 1 {
            let l = m - 1 - j;
            for (ga, pa) in d1[j + 1].iter().enumerate() {
                for (gb, pb) in d1[l + 1].iter().enumerate() {
                    if ga + gb < m {
                        rhs[ga + gb] = rhs[ga + gb].add(&pa.mul(pb).scale(&rat(-1, 1)));
                    }
                }
            }
        }
        let gm: Vec<RPoly> = rhs
            .into_iter()
            .map(|p| {
                RPoly(
                    p.0.iter()
                        .enumerate()
                        .map(|(k, c)| c / BigRational::from_integer(((m + k) as i64).into()))
                        .collect(),
                )
                .trimmed()
            })
            .collect();
        d1.push(gm.iter().map(|p| p.deriv()).collect());
        g[m + 1] = gm;
    }
    Ok(g)
}

/// Laurent series of `S̄` about `Λ = 0` for a point source and depth-only `n²`.
pub fn laurent_point_source(model: &RefractionModel, xp: &[f64], x: &[f64], k0: f64, order: usize) -> Result<LaurentSeries> {
    let coeffs = model.z_polynomial().ok_or(Error::NonPolynomialModel)?;
    if xp.len() != x.len() || x.is_empty() {
        return Err(Error::DimensionMismatch("source and point".into()));
    }
    if !(k0 > 0.0) {
        return Err(Error::InvalidInput("k0 must be positive".into()));
    }
    let n2: Vec<BigRational> = coeffs.iter().map(|c| rat_f64(*c)).collect::<Result<_>>()?;
    let zi = x.len() - 1;
    let zp = rat_f64(xp[zi])?;
    let graded = point_source_exact(&n2, &zp, order)?;
    let mut extra = vec![C64::new(0.0, 0.0); order + 2];
    let t2: f64 = x[..zi].iter().zip(&xp[..zi]).map(|(a, b)| (a - b) * (a - b)).sum();
    extra[0] = C64::new(t2 / 4.0, 0.0);
    Ok(LaurentSeries {
        point: C64::new(0.0, 0.0),
        codim: x.len(),
        zp,
        graded,
        extra,
        order,
        z: x[zi],
        k0,
    })
}

/// Laurent series of the channel action about the ghost pole `Λ = nπ/(2√α)`.
///
/// The depth part is the point-source series with the source mirrored to
/// `(−1)ⁿz′`; the transverse part `|x⊥−x⊥′|²/(4Λ) + n0²Λ` is Taylor expanded.
pub fn laurent_ghost_pole(model: &RefractionModel, n: i64, xp: &[f64], x: &[f64], k0: f64, order: usize) -> Result<LaurentSeries> {
    let RefractionModel::QuadraticZ { n0sq, alpha } = *model else {
        return Err(Error::UnsupportedCombination("ghost-pole series needs the channel model".into()));
    };
    if n == 0 {
        return Err(Error::InvalidPoleIndex(n));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput("channel curvature must be positive and finite".into()));
    }
    let beta = n as f64 * PI / (2.0 * alpha.sqrt());
    if !beta.is_finite() || beta.abs() > 1e12 {
        return Err(Error::InvalidInput("ghost pole out of range".into()));
    }
    if xp.len() != x.len() || x.is_empty() {
        return Err(Error::DimensionMismatch("source and point".into()));
    }
    let zi = x.len() - 1;
    let mirrored = if n.rem_euclid(2) == 0 { xp[zi] } else { -xp[zi] };
    let depth = RefractionModel::QuadraticZ { n0sq: 0.0, alpha };
    let n2: Vec<BigRational> = depth.z_polynomial().unwrap().iter().map(|c| rat_f64(*c)).collect::<Result<_>>()?;
    let zp = rat_f64(mirrored)?;
    let graded = point_source_exact(&n2, &zp, order)?;
    let t2: f64 = x[..zi].iter().zip(&xp[..zi]).map(|(a, b)| (a - b) * (a - b)).sum();
    let mut extra = vec![C64::new(0.0, 0.0); order + 2];
    // t2/(4(β+u)) = Σ t2/(4β)·(−u/β)^m
    for m in 0..=order {
        extra[m + 1] = C64::new(t2 / (4.0 * beta) * (-1.0 / beta).powi(m as i32), 0.0);
    }
    extra[1] += n0sq * beta;
    extra[2] += n0sq;
    Ok(LaurentSeries {
        point: C64::new(beta, 0.0),
        codim: 1,
        zp,
        graded,
        extra,
        order,
        z: x[zi],
        k0,
    })
}

/// Check the grade truncation: `γ_m` has no `(i/k0)` power above `m − 1`.
pub fn grading_is_truncated(s: &LaurentSeries) -> bool {
    s.graded.iter().enumerate().all(|(i, gs)| {
        let m = i as i64 - 1;
        gs.iter().enumerate().all(|(g, p)| (g as i64) <= (m - 1).max(0) || p.is_zero())
    })
}

/// Largest absolute grade-0 rational coefficient; a cheap overflow sentinel.
pub fn max_leading_coefficient(s: &LaurentSeries) -> f64 {
    s.graded
        .iter()
        .filter_map(|gs| gs.first())
        .flat_map(|p| p.0.iter())
        .map(|c| c.to_f64().unwrap_or(f64::INFINITY).abs())
        .fold(0.0, f64::max)
}
