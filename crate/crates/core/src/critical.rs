//! Critical points of `S̄`, caustic classification and ghost-source loci.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{build_action, ActionTerm, EinbeinAction, C64};
use crate::error::{Error, Result};
use crate::model::{RefractionModel, SourceSpec};
use crate::pade::RationalApproximant;

pub const TOL_CAUSTIC: f64 = 1e-6;
/// Residue magnitude (in squared length units) below which a pole is a ghost source.
pub const GHOST_RESIDUE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Region {
    pub fn centred(r: f64) -> Self {
        Region { re: (-r, r), im: (-r, r) }
    }

    pub fn contains(&self, l: C64) -> bool {
        l.re >= self.re.0 && l.re <= self.re.1 && l.im >= self.im.0 && l.im <= self.im.1
    }

    fn boundary_distance(&self, l: C64) -> f64 {
        let dx = (l.re - self.re.0).abs().min((l.re - self.re.1).abs());
        let dy = (l.im - self.im.0).abs().min((l.im - self.im.1).abs());
        if l.im >= self.im.0 && l.im <= self.im.1 && l.re >= self.re.0 && l.re <= self.re.1 {
            dx.min(dy)
        } else {
            f64::INFINITY.min(dx.max(dy))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub lambda: C64,
    pub value: C64,
    pub d2: C64,
    pub real: bool,
    pub multiplicity: u32,
}

impl CriticalPoint {
    fn new(action: &EinbeinAction, l: C64) -> Result<Self> {
        let [v, _, d2] = action.eval_all(l)?;
        let scale = l.norm().max(1.0);
        Ok(CriticalPoint {
            lambda: l,
            value: v,
            d2,
            real: l.im.abs() < 1e-9 * scale,
            multiplicity: if d2.norm() < TOL_CAUSTIC { 2 } else { 1 },
        })
    }
}

fn newton(action: &EinbeinAction, mut l: C64, iters: usize) -> Option<C64> {
    for _ in 0..iters {
        let [_, d1, d2] = action.eval_all(l).ok()?;
        if d2.norm() == 0.0 {
            return None;
        }
        let mut step = d1 / d2;
        let lim = 0.25 * l.norm().max(1e-3);
        if step.norm() > lim {
            step *= lim / step.norm();
        }
        l -= step;
        if step.norm() < 1e-15 * l.norm().max(1e-12) {
            break;
        }
    }
    let [_, d1, d2] = action.eval_all(l).ok()?;
    let ok = d1.norm() < 1e-9 * d2.norm().max(1.0) * l.norm().max(1e-3);
    ok.then_some(l)
}

/// Real zeros of `S̄′` from sign changes on a uniform scan, bisected and
/// polished; brackets around odd poles fail the final Newton check.
fn real_axis_roots(action: &EinbeinAction, (a, b): (f64, f64), step: f64) -> Vec<C64> {
    let d1 = |t: f64| action.eval_d1(C64::new(t, 0.0)).ok().map(|v| v.re).filter(|v| v.is_finite());
    let n = ((b - a) / step).ceil() as usize;
    let ts: Vec<f64> = (0..=n).map(|j| a + (b - a) * j as f64 / n as f64).collect();
    let fs: Vec<Option<f64>> = ts.iter().map(|t| d1(*t)).collect();
    let mut out = Vec::new();
    for j in 0..n {
        let (Some(fa), Some(fb)) = (fs[j], fs[j + 1]) else { continue };
        if fa == 0.0 {
            out.extend(newton(action, C64::new(ts[j], 0.0), 4));
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (ts[j], ts[j + 1], fa);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let Some(fm) = d1(mid) else { break };
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        out.extend(newton(action, C64::new(0.5 * (lo + hi), 0.0), 4));
    }
    out
}

fn is_rational(action: &EinbeinAction) -> bool {
    !action.terms.iter().any(|t| matches!(t, ActionTerm::Channel { .. }))
}

/// All critical points inside `region`.
///
/// Rational actions use the companion matrix of the numerator of `S̄′`;
/// roots manufactured at a pole with (near) zero residue are discarded.
/// Channel actions use Newton from a seed grid with `seeds` points per pole
/// spacing squared.
pub fn find_critical_points(action: &EinbeinAction, region: &Region, seeds: f64) -> Result<Vec<CriticalPoint>> {
    let window = region.re.0.abs().max(region.re.1.abs()) + 1.0;
    for (b, _) in action.poles(window) {
        if region.boundary_distance(b) < action.guard.max(1e-12) {
            return Err(Error::RegionContainsPole);
        }
    }
    let mut found: Vec<C64> = Vec::new();
    if is_rational(action) {
        let ap = RationalApproximant::from_action(action)?;
        let num = ap.critical_numerator();
        for r in num.roots()? {
            let near_pole = ap.poles.iter().find(|p| (p.beta - r).norm() < 1e-6 * p.beta.norm().max(1.0));
            if let Some(p) = near_pole {
                if p.residue.norm() <= GHOST_RESIDUE {
                    continue;
                }
            }
            let r = newton(action, r, 4).unwrap_or(r);
            found.push(r);
        }
    } else {
        let sp = action.channel_spacing().unwrap_or(1.0);
        let per_axis = seeds.max(1.0).sqrt();
        let h = sp / per_axis;
        let nx = ((region.re.1 - region.re.0) / h).ceil() as usize + 1;
        let ny = ((region.im.1 - region.im.0) / h).ceil() as usize + 1;
        let cand: Vec<C64> = (0..nx * ny)
            .into_par_iter()
            .filter_map(|k| {
                let (i, j) = (k % nx, k / nx);
                let s = C64::new(region.re.0 + (i as f64 + 0.5) * h, region.im.0 + (j as f64 + 0.5) * h);
                newton(action, s, 60)
            })
            .collect();
        let real = if region.im.0 < 0.0 && region.im.1 > 0.0 { real_axis_roots(action, region.re, sp / 200.0) } else { Vec::new() };
        for c in cand.into_iter().chain(real) {
            if !found.iter().any(|f| (f - c).norm() < 1e-7 * c.norm().max(1.0)) {
                found.push(c);
            }
        }
    }
    let mut out: Vec<CriticalPoint> = found
        .into_iter()
        .filter(|l| region.contains(*l))
        .map(|l| CriticalPoint::new(action, l))
        .collect::<Result<_>>()?;
    for p in &mut out {
        if p.real {
            p.lambda.im = 0.0;
        }
    }
    // conjugate pairs share a real part up to round-off
    let tol = 1e-9 * out.iter().map(|p| p.lambda.norm()).fold(1.0, f64::max);
    out.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re));
    let mut i = 0;
    while i < out.len() {
        let mut j = i + 1;
        while j < out.len() && out[j].lambda.re - out[j - 1].lambda.re <= tol {
            j += 1;
        }
        out[i..j].sort_by(|a, b| a.lambda.im.total_cmp(&b.lambda.im));
        i = j;
    }
    Ok(out)
}

/// Four critical points of the linear-`n²` action from the closed form
/// `a²Λ⁴/4 − c1Λ² + r²/4 = 0`.
pub fn linear_z_critical_points(n0sq: f64, a: f64, x: &[f64], xp: &[f64]) -> [C64; 4] {
    let zi = x.len() - 1;
    let c1 = n0sq - a * (x[zi] + xp[zi]) / 2.0;
    let r2: f64 = x.iter().zip(xp).map(|(u, v)| (u - v) * (u - v)).sum();
    let disc = C64::new(c1 * c1 - a * a * r2 / 4.0, 0.0).sqrt();
    let l2p = (c1 + disc) * 2.0 / (a * a);
    let l2m = (c1 - disc) * 2.0 / (a * a);
    [l2m.sqrt(), -l2m.sqrt(), l2p.sqrt(), -l2p.sqrt()]
}

/// Zone of a spatial point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Zone {
    Illuminated,
    Shadow,
    OnCaustic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausticType {
    None,
    Fold,
    Cusp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausticClassification {
    pub x: Vec<f64>,
    pub zone: Zone,
    pub caustic: CausticType,
    pub ghost_source: bool,
    pub n_real: usize,
    pub n_total: usize,
}

fn search_region(action: &EinbeinAction) -> Region {
    let r = action
        .terms
        .iter()
        .map(|t| match t {
            ActionTerm::Pole { beta, residue } => 4.0 * (beta.norm() + residue.norm().sqrt() + 1.0),
            ActionTerm::Monomial { coeff, .. } => 4.0 * (1.0 + 1.0 / coeff.norm().max(1e-6).sqrt()),
            ActionTerm::Channel { alpha, .. } => 4.0 * PI / alpha.sqrt(),
        })
        .fold(4.0, f64::max);
    Region { re: (-r * 0.993, r * 1.007), im: (-r * 1.01, r * 0.99) }
}

/// Critical points of the catalog action at `x`, over a generous region.
pub fn critical_points_at(model: &RefractionModel, source: &SourceSpec, x: &[f64]) -> Result<Vec<CriticalPoint>> {
    let (action, _) = build_action(model, source, x, 1.0)?;
    find_critical_points(&action, &search_region(&action), 25.0)
}

fn residue_vanishes(model: &RefractionModel, source: &SourceSpec, x: &[f64]) -> bool {
    ghost_source_locus(model, source, 1.0)
        .iter()
        .any(|g| g.ghost && g.residue(x).abs() <= GHOST_RESIDUE)
}

/// Classify one point; `n_max` is the largest number of real critical points
/// the model admits (all critical points real).
pub fn classify_point(model: &RefractionModel, source: &SourceSpec, x: &[f64]) -> Result<CausticClassification> {
    let cps = critical_points_at(model, source, x)?;
    let n_real = cps.iter().filter(|c| c.real).count();
    let n_total = cps.len();
    let on = cps.iter().any(|c| c.multiplicity >= 2);
    let zone = if on {
        Zone::OnCaustic
    } else if n_real == n_total {
        Zone::Illuminated
    } else {
        Zone::Shadow
    };
    let ghost = residue_vanishes(model, source, x);
    let caustic = if on {
        if ghost { CausticType::Cusp } else { CausticType::Fold }
    } else {
        CausticType::None
    };
    Ok(CausticClassification { x: x.to_vec(), zone, caustic, ghost_source: ghost, n_real, n_total })
}

/// A refined caustic crossing between two grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausticPoint {
    pub x: Vec<f64>,
    pub caustic: CausticType,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausticMap {
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
    /// Row-major over `zs` then `xs`.
    pub cells: Vec<CausticClassification>,
    pub crossings: Vec<CausticPoint>,
    pub cusps: Vec<Vec<f64>>,
    pub closed_form: Option<String>,
}

fn n_real_at(model: &RefractionModel, source: &SourceSpec, x: &[f64]) -> Option<usize> {
    critical_points_at(model, source, x).ok().map(|c| c.iter().filter(|p| p.real).count())
}

/// Bisect along a segment whose ends have different real-root counts.
fn bisect(model: &RefractionModel, source: &SourceSpec, a: &[f64], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let na = n_real_at(model, source, a)?;
    let (mut lo, mut hi) = (a.to_vec(), b.to_vec());
    for _ in 0..80 {
        let d: f64 = lo.iter().zip(&hi).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        if d < tol {
            break;
        }
        let mid: Vec<f64> = lo.iter().zip(&hi).map(|(u, v)| 0.5 * (u + v)).collect();
        match n_real_at(model, source, &mid) {
            Some(n) if n == na => lo = mid,
            Some(_) => hi = mid,
            None => return None,
        }
    }
    Some(lo.iter().zip(&hi).map(|(u, v)| 0.5 * (u + v)).collect())
}

/// Classify a 2-D grid and refine caustic crossings by bisection.
pub fn caustic_locus(model: &RefractionModel, source: &SourceSpec, xs: &[f64], zs: &[f64]) -> Result<CausticMap> {
    if source.dim() != 2 {
        return Err(Error::DimensionMismatch("caustic maps are two-dimensional".into()));
    }
    let pts: Vec<Vec<f64>> = zs.iter().flat_map(|z| xs.iter().map(move |x| vec![*x, *z])).collect();
    let cells: Vec<CausticClassification> = pts
        .par_iter()
        .map(|p| {
            classify_point(model, source, p).unwrap_or(CausticClassification {
                x: p.clone(),
                zone: Zone::OnCaustic,
                caustic: CausticType::None,
                ghost_source: false,
                n_real: usize::MAX,
                n_total: 0,
            })
        })
        .collect();
    let nx = xs.len();
    let mut pairs = Vec::new();
    for j in 0..zs.len() {
        for i in 0..nx {
            let k = j * nx + i;
            if i + 1 < nx && cells[k].n_real != cells[k + 1].n_real {
                pairs.push((k, k + 1));
            }
            if j + 1 < zs.len() && cells[k].n_real != cells[k + nx].n_real {
                pairs.push((k, k + nx));
            }
        }
    }
    let mut crossings: Vec<CausticPoint> = pairs
        .par_iter()
        .filter(|(a, b)| cells[*a].n_real != usize::MAX && cells[*b].n_real != usize::MAX)
        .filter_map(|(a, b)| {
            let p = bisect(model, source, &cells[*a].x, &cells[*b].x, 1e-10)?;
            let ghost = residue_vanishes(model, source, &p);
            Some(CausticPoint { x: p, caustic: if ghost { CausticType::Cusp } else { CausticType::Fold } })
        })
        .collect();
    // crossings of a ghost-source line are sterile unless critical points merge there
    crossings.retain(|c| c.caustic == CausticType::Fold || is_degenerate(model, source, &c.x));
    let cusps = closed_form_cusps(model, source);
    Ok(CausticMap {
        xs: xs.to_vec(),
        zs: zs.to_vec(),
        cells,
        crossings,
        cusps,
        closed_form: closed_form_caustic(model, source),
    })
}

fn is_degenerate(model: &RefractionModel, source: &SourceSpec, x: &[f64]) -> bool {
    let Ok((action, _)) = build_action(model, source, x, 1.0) else { return false };
    let Ok(ap) = RationalApproximant::from_action(&action) else { return false };
    let Ok(roots) = ap.critical_numerator().roots() else { return false };
    roots.iter().enumerate().any(|(i, a)| roots.iter().skip(i + 1).any(|b| (a - b).norm() < 1e-3))
}

/// Human-readable closed-form caustic for catalog models.
pub fn closed_form_caustic(model: &RefractionModel, source: &SourceSpec) -> Option<String> {
    match (model, source) {
        (RefractionModel::LinearZ { n0sq, a }, SourceSpec::PointDelta { .. }) => {
            Some(format!("{}^2 - {a}*{n0sq}*z - {a}^2*x^2/4 = 0", n0sq))
        }
        (RefractionModel::Constant { n0sq }, SourceSpec::PhaseSheet { mu, .. }) => {
            Some(format!("x^(2/3) + z^(2/3) = (2*{}*{mu})^(2/3)", n0sq.sqrt()))
        }
        _ => None,
    }
}

/// Residual of the closed-form caustic equation at `x` (zero on the caustic).
pub fn closed_form_residual(model: &RefractionModel, source: &SourceSpec, x: &[f64]) -> Option<f64> {
    match (model, source) {
        (RefractionModel::LinearZ { n0sq, a }, SourceSpec::PointDelta { at }) => {
            let (xx, z) = (x[0] - at[0], x[1] - at[1]);
            let n0sq = n0sq - a * at[1];
            Some(n0sq * n0sq - a * z * n0sq - a * a * xx * xx / 4.0)
        }
        (RefractionModel::Constant { n0sq }, SourceSpec::PhaseSheet { mu, z0 }) => {
            let (xx, z) = (x[0].abs(), (x[1] - z0).abs());
            Some(xx.powf(2.0 / 3.0) + z.powf(2.0 / 3.0) - (2.0 * n0sq.sqrt() * mu).powf(2.0 / 3.0))
        }
        _ => None,
    }
}

fn closed_form_cusps(model: &RefractionModel, source: &SourceSpec) -> Vec<Vec<f64>> {
    match (model, source) {
        (RefractionModel::Constant { n0sq }, SourceSpec::PhaseSheet { mu, z0 }) => {
            let r = 2.0 * n0sq.sqrt() * mu;
            vec![vec![0.0, z0 + r], vec![0.0, z0 - r]]
        }
        _ => Vec::new(),
    }
}

/// Spatial zero set of a pole residue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Locus {
    /// `|x − at|² = 0`
    Point { at: Vec<f64> },
    /// `x[axis] = value`
    Plane { axis: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhostLocus {
    pub beta: C64,
    pub locus: Locus,
    /// False for the true source.
    pub ghost: bool,
}

impl GhostLocus {
    /// Residue of the pole at `x`, `¼·(distance to the locus)²`.
    pub fn residue(&self, x: &[f64]) -> f64 {
        match &self.locus {
            Locus::Point { at } => x.iter().zip(at).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 4.0,
            Locus::Plane { axis, value } => (x[*axis] - value).powi(2) / 4.0,
        }
    }

    pub fn describe(&self) -> String {
        match &self.locus {
            Locus::Point { at } => format!("x = {at:?}"),
            Locus::Plane { axis, value } => format!("x[{axis}] = {value}"),
        }
    }
}

/// Zero sets of every finite-pole residue with `|β| ≤ window`.
pub fn ghost_source_locus(model: &RefractionModel, source: &SourceSpec, window: f64) -> Vec<GhostLocus> {
    let c = |v: f64| C64::new(v, 0.0);
    match source {
        SourceSpec::PhaseSheet { mu, z0 } => vec![
            GhostLocus { beta: c(0.0), locus: Locus::Plane { axis: 1, value: *z0 }, ghost: false },
            GhostLocus { beta: c(*mu), locus: Locus::Plane { axis: 0, value: 0.0 }, ghost: true },
        ],
        SourceSpec::PointDelta { at } => {
            let zi = at.len() - 1;
            let mut out = vec![GhostLocus { beta: c(0.0), locus: Locus::Point { at: at.clone() }, ghost: false }];
            if let RefractionModel::QuadraticZ { alpha, .. } | RefractionModel::LinearXQuadraticZ { alpha, .. } = model {
                let sp = PI / (2.0 * alpha.sqrt());
                let nmax = (window / sp).floor() as i64;
                for n in (-nmax..=nmax).filter(|n| *n != 0) {
                    let value = if n.rem_euclid(2) == 0 { at[zi] } else { -at[zi] };
                    out.push(GhostLocus { beta: c(n as f64 * sp), locus: Locus::Plane { axis: zi, value }, ghost: true });
                }
            }
            out
        }
    }
}

/// Caustic of two nearby poles `Δ` apart with linear slope `b`:
/// `r₁^{2/3} + r₂^{2/3} = (2√b·Δ)^{2/3}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearbyPoleCusp {
    pub b: f64,
    pub delta: f64,
}

pub fn nearby_pole_cusp(b: f64, delta: f64) -> Result<NearbyPoleCusp> {
    if !(b > 0.0 && delta > 0.0) {
        return Err(Error::NonPositiveParameters(format!("b = {b}, Δ = {delta}")));
    }
    Ok(NearbyPoleCusp { b, delta })
}

impl NearbyPoleCusp {
    pub fn radius(&self) -> f64 {
        2.0 * self.b.sqrt() * self.delta
    }

    /// `r₂` on the caustic for `0 ≤ r₁ ≤ radius`.
    pub fn r2(&self, r1: f64) -> Option<f64> {
        let s = self.radius().powf(2.0 / 3.0) - r1.abs().powf(2.0 / 3.0);
        (s >= 0.0).then(|| s.powf(1.5))
    }

    pub fn residual(&self, r1: f64, r2: f64) -> f64 {
        r1.abs().powf(2.0 / 3.0) + r2.abs().powf(2.0 / 3.0) - self.radius().powf(2.0 / 3.0)
    }

    /// Cusp points on the `r₁ = 0` axis.
    pub fn cusp_points(&self) -> [(f64, f64); 2] {
        [(0.0, self.radius()), (0.0, -self.radius())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::spatial_gradient;
    use crate::poly::CPoly;

    fn cusp() -> (RefractionModel, SourceSpec) {
        (RefractionModel::Constant { n0sq: 1.0 }, SourceSpec::PhaseSheet { mu: 1.0, z0: 0.0 })
    }

    #[test]
    fn cusp_quartic_roots() {
        let (m, s) = cusp();
        for (x, z) in [(0.3, 0.8), (1.5, 0.4), (0.2, 2.5)] {
            let cps = critical_points_at(&m, &s, &[x, z]).unwrap();
            let quartic = CPoly::from_real(&[-z * z, 2.0 * z * z, 4.0 - x * x - z * z, -8.0, 4.0]);
            let roots = quartic.roots().unwrap();
            assert_eq!(cps.len(), 4);
            for r in roots {
                assert!(cps.iter().any(|c| (c.lambda - r).norm() < 1e-9), "{r}");
            }
        }
    }

    #[test]
    fn ghost_source_drops_spurious_double_root() {
        let (m, s) = cusp();
        let cps = critical_points_at(&m, &s, &[0.0, 1.0]).unwrap();
        let l: Vec<f64> = cps.iter().map(|c| c.lambda.re).collect();
        assert_eq!(l.len(), 2);
        assert!((l[0] + 0.5).abs() < 1e-12 && (l[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_pair() {
        let (a, _) = build_action(&RefractionModel::Constant { n0sq: 2.25 }, &SourceSpec::point(&[0.0, 0.0]), &[3.0, 0.0], 1.0).unwrap();
        let cps = find_critical_points(&a, &Region::centred(10.0), 25.0).unwrap();
        assert_eq!(cps.len(), 2);
        assert!((cps[1].lambda.re - 1.0).abs() < 1e-13 && (cps[0].lambda.re + 1.0).abs() < 1e-13);
    }

    #[test]
    fn linear_closed_form_agrees() {
        let m = RefractionModel::LinearZ { n0sq: 1.0, a: 0.2 };
        for x in [[1.0, 0.5], [8.0, 2.0]] {
            let cps = critical_points_at(&m, &SourceSpec::point(&[0.0, 0.0]), &x).unwrap();
            let cf = linear_z_critical_points(1.0, 0.2, &x, &[0.0, 0.0]);
            assert_eq!(cps.len(), 4);
            for r in cf {
                assert!(cps.iter().any(|c| (c.lambda - r).norm() < 1e-9));
            }
        }
    }

    #[test]
    fn eikonal_at_critical_points() {
        let cases = [
            (RefractionModel::LinearZ { n0sq: 1.0, a: 0.2 }, SourceSpec::point(&[0.0, 0.0]), vec![3.0, 1.0]),
            (RefractionModel::LinearZ { n0sq: 1.0, a: 0.2 }, SourceSpec::point(&[0.0, 0.0]), vec![12.0, 1.0]),
            (RefractionModel::Constant { n0sq: 1.0 }, SourceSpec::PhaseSheet { mu: 1.0, z0: 0.0 }, vec![0.3, 1.2]),
            (RefractionModel::QuadraticZ { n0sq: 1.0, alpha: 0.5 }, SourceSpec::point(&[0.0, 0.2]), vec![2.0, 0.7]),
        ];
        for (m, s, x) in cases {
            for cp in critical_points_at(&m, &s, &x).unwrap() {
                let g = spatial_gradient(&m, &s, &x, cp.lambda).unwrap();
                let g2: C64 = g.iter().map(|v| v * v).sum();
                assert!((g2 - m.n2(&x)).norm() < 1e-8, "{} {:?}", m.name(), cp.lambda);
            }
        }
    }

    #[test]
    fn channel_newton_search_finds_real_points() {
        let (a, _) = build_action(&RefractionModel::QuadraticZ { n0sq: 1.0, alpha: 1.0 }, &SourceSpec::point(&[0.0, 0.3]), &[2.0, 0.5], 1.0).unwrap();
        let region = Region { re: (0.01, 3.0), im: (-1.0, 1.0) };
        let cps = find_critical_points(&a, &region, 25.0).unwrap();
        assert!(cps.iter().any(|c| c.real));
        for c in &cps {
            assert!(a.eval_d1(c.lambda).unwrap().norm() < 1e-8);
        }
    }

    #[test]
    fn zones_for_linear_model() {
        let m = RefractionModel::LinearZ { n0sq: 1.0, a: 0.2 };
        let s = SourceSpec::point(&[0.0, 0.0]);
        // caustic at x = 2√(n0⁴ − a z n0²)/a; for z=0: x = 10
        let lit = classify_point(&m, &s, &[5.0, 0.0]).unwrap();
        let dark = classify_point(&m, &s, &[14.0, 0.0]).unwrap();
        assert_eq!((lit.zone, lit.n_real), (Zone::Illuminated, 4));
        assert_eq!((dark.zone, dark.n_real), (Zone::Shadow, 0));
    }

    #[test]
    fn zones_for_cusp_model() {
        let (m, s) = cusp();
        let inside = classify_point(&m, &s, &[0.2, 0.5]).unwrap();
        let outside = classify_point(&m, &s, &[1.8, 1.5]).unwrap();
        assert_eq!(inside.n_real, 4);
        assert_eq!(outside.n_real, 2);
        assert_eq!(outside.n_total, 4);
        assert!(classify_point(&m, &s, &[0.0, 0.5]).unwrap().ghost_source);
    }

    #[test]
    fn sterile_collision_keeps_points_real() {
        let (m, s) = cusp();
        let mut prev: Option<Vec<f64>> = None;
        for k in -20..=20 {
            if k == 0 {
                continue;
            }
            let x = k as f64 * 0.01;
            let cps = critical_points_at(&m, &s, &[x, 1.0]).unwrap();
            let mut re: Vec<f64> = cps.iter().filter(|c| c.real).map(|c| c.lambda.re).collect();
            re.sort_by(f64::total_cmp);
            assert_eq!(re.len(), 4, "x = {x}");
            if let Some(p) = prev {
                let jump = p.iter().zip(&re).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let allowed = if k == 1 { 0.05 } else { 0.02 };
                assert!(jump < allowed, "x = {x}: {jump}");
            }
            prev = Some(re);
        }
    }

    #[test]
    fn linear_caustic_by_bisection() {
        let m = RefractionModel::LinearZ { n0sq: 1.0, a: 0.2 };
        let s = SourceSpec::point(&[0.0, 0.0]);
        let xs: Vec<f64> = (0..6).map(|i| 6.3 + i as f64).collect();
        let zs = vec![-1.0, 0.0, 1.0];
        let map = caustic_locus(&m, &s, &xs, &zs).unwrap();
        let nr: Vec<usize> = map.cells.iter().map(|c| c.n_real).collect();
        assert!(map.crossings.len() >= 3, "{:?} {nr:?}", map.crossings);
        for c in &map.crossings {
            assert_eq!(c.caustic, CausticType::Fold);
            assert!(closed_form_residual(&m, &s, &c.x).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn cusp_caustic_by_bisection() {
        let (m, s) = cusp();
        let xs: Vec<f64> = (0..7).map(|i| 0.15 + 0.3 * i as f64).collect();
        let zs: Vec<f64> = (0..5).map(|i| 0.1 + 0.4 * i as f64).collect();
        let map = caustic_locus(&m, &s, &xs, &zs).unwrap();
        assert!(map.crossings.len() >= 4);
        for c in &map.crossings {
            assert!(closed_form_residual(&m, &s, &c.x).unwrap().abs() < 1e-6, "{:?}", c.x);
        }
        assert_eq!(map.cusps, vec![vec![0.0, 2.0], vec![0.0, -2.0]]);
    }

    #[test]
    fn constant_model_has_no_caustic() {
        let m = RefractionModel::Constant { n0sq: 1.0 };
        let s = SourceSpec::point(&[0.0, 0.0]);
        let map = caustic_locus(&m, &s, &[1.0, 2.0, 3.0], &[0.5, 1.5]).unwrap();
        assert!(map.crossings.is_empty());
        assert!(map.cells.iter().all(|c| c.zone == Zone::Illuminated));
    }

    #[test]
    fn ghost_loci() {
        let ch = ghost_source_locus(&RefractionModel::QuadraticZ { n0sq: 1.0, alpha: 1.0 }, &SourceSpec::point(&[0.0, 0.4]), 4.0);
        let planes: Vec<(i64, f64)> = ch
            .iter()
            .filter(|g| g.ghost)
            .map(|g| match g.locus {
                Locus::Plane { value, .. } => ((g.beta.re / (PI / 2.0)).round() as i64, value),
                _ => unreachable!(),
            })
            .collect();
        assert!(planes.contains(&(1, -0.4)) && planes.contains(&(2, 0.4)) && planes.contains(&(-1, -0.4)));
        let (m, s) = cusp();
        let g = ghost_source_locus(&m, &s, 1.0);
        assert_eq!(g[1].locus, Locus::Plane { axis: 0, value: 0.0 });
        let c = ghost_source_locus(&RefractionModel::Constant { n0sq: 1.0 }, &SourceSpec::point(&[1.0, 2.0]), 10.0);
        assert_eq!(c.len(), 1);
        assert!(!c[0].ghost);
    }

    #[test]
    fn nearby_pole_law() {
        let c = nearby_pole_cusp(1.0, 1.0).unwrap();
        assert!((c.r2(0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(nearby_pole_cusp(1.0, 0.0).is_err());
        let tiny = nearby_pole_cusp(1.0, 1e-9).unwrap();
        assert!(tiny.radius() < 1e-8);
    }

    #[test]
    fn nearby_pole_law_matches_cusp_model() {
        // r₁ = x, r₂ = z, b = n0², Δ = μ
        let (n0sq, mu) = (1.44, 0.7);
        let m = RefractionModel::Constant { n0sq };
        let s = SourceSpec::PhaseSheet { mu, z0: 0.0 };
        let law = nearby_pole_cusp(n0sq, mu).unwrap();
        for x in [0.2, 0.5, 1.0] {
            let z_in = law.r2(x).unwrap() * 0.9;
            let z_out = law.r2(x).unwrap() * 1.1;
            let p = bisect(&m, &s, &[x, z_in], &[x, z_out], 1e-10).unwrap();
            assert!(law.residual(p[0], p[1]).abs() < 1e-6);
        }
    }
}
