//! Monodromy of contour classes under closed loops in parameter space.
//!
//! A contour class is a word of end tokens. Each token is a convergent end
//! region (a pole sector or a wedge at infinity) together with a lifted angle
//! on the universal cover around its puncture. A loop rotates the sectors and
//! drags the lifted angles along; the transported words are reduced with the
//! deck relation `I(τE) = ε·I(E) + C`, where `C` is the anchored loop integral
//! around the puncture and `ε` the prefactor's sheet factor.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::action::{build_action, ActionTerm, EinbeinAction, Prefactor, Wavefunction, C64};
use crate::error::{Error, Result};
use crate::model::{RefractionModel, SourceSpec};
use crate::quadrature::{integrate_polyline, QuadOptions};
use crate::thimble::{convergence_wedges, pole_sector};

/// Where a contour ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Puncture {
    Finite { beta: C64 },
    Infinity,
}

impl Puncture {
    pub fn origin() -> Self {
        Puncture::Finite { beta: C64::new(0.0, 0.0) }
    }
}

/// End region with a lifted approach angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub at: Puncture,
    pub angle: f64,
}

impl Token {
    pub fn origin(angle: f64) -> Self {
        Token { at: Puncture::origin(), angle }
    }

    pub fn pole(beta: f64, angle: f64) -> Self {
        Token { at: Puncture::Finite { beta: C64::new(beta, 0.0) }, angle }
    }

    pub fn infinity(angle: f64) -> Self {
        Token { at: Puncture::Infinity, angle }
    }
}

/// Formal sum of end tokens; `+1` marks where a contour ends, `−1` where it
/// starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisContour {
    pub label: String,
    pub word: Vec<(i64, Token)>,
}

impl BasisContour {
    pub fn new(label: &str, word: Vec<(i64, Token)>) -> Self {
        BasisContour { label: label.into(), word }
    }

    /// Contour from `a` to `b`.
    pub fn path(label: &str, a: Token, b: Token) -> Self {
        Self::new(label, vec![(1, b), (-1, a)])
    }
}

/// Parameter continued around a closed loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopParameter {
    /// `n₀² ↦ e^{iθ}n₀²`
    RefractiveIndex,
    /// `a² ↦ e^{iθ}a²` for the linear profile.
    Gradient,
    /// `|x − x′|² ↦ e^{iθ}|x − x′|²`, the residue at `Λ = 0`.
    Coordinate,
    /// Residues of the finite poles away from the origin.
    GhostResidue,
}

/// Loop descriptor; `winding` counts counter-clockwise turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLoop {
    pub parameter: LoopParameter,
    pub winding: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyMatrix {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<i64>>,
    #[serde(rename = "loop")]
    pub lp: ParameterLoop,
    pub determinant: i64,
}

/// Model, source and observation point the loop is based at.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopSetting {
    pub model: RefractionModel,
    pub source: SourceSpec,
    pub x: Vec<f64>,
    pub k0: f64,
}

impl LoopSetting {
    pub fn new(model: RefractionModel, source: SourceSpec, x: &[f64], k0: f64) -> Self {
        LoopSetting { model, source, x: x.to_vec(), k0 }
    }

    fn base(&self) -> Result<(EinbeinAction, Prefactor)> {
        build_action(&self.model, &self.source, &self.x, self.k0)
    }

    /// Action with the loop parameter advanced by `phi`.
    pub fn deformed(&self, parameter: LoopParameter, phi: f64) -> Result<EinbeinAction> {
        let (action, _) = self.base()?;
        let e = C64::from_polar(1.0, phi);
        let mut terms = action.terms.clone();
        match parameter {
            LoopParameter::RefractiveIndex => {
                let n0sq = self.model.n0sq();
                for t in terms.iter_mut() {
                    if let ActionTerm::Monomial { power: 1, coeff } = t {
                        *coeff += n0sq * (e - 1.0);
                    }
                }
            }
            LoopParameter::Gradient => {
                let RefractionModel::LinearZ { n0sq, a } = self.model else {
                    return Err(Error::InvalidInput("gradient loops need the linear profile".into()));
                };
                let SourceSpec::PointDelta { at } = &self.source else {
                    return Err(Error::InvalidInput("gradient loops need a point source".into()));
                };
                let zi = at.len() - 1;
                let zsum = self.x[zi] + at[zi];
                let ah = C64::from_polar(a, phi / 2.0);
                for t in terms.iter_mut() {
                    match t {
                        ActionTerm::Monomial { power: 1, coeff } => *coeff = n0sq - ah * zsum / 2.0,
                        ActionTerm::Monomial { power: 3, coeff } => *coeff = -ah * ah / 12.0,
                        _ => {}
                    }
                }
            }
            LoopParameter::Coordinate | LoopParameter::GhostResidue => {
                let at_origin = parameter == LoopParameter::Coordinate;
                for t in terms.iter_mut() {
                    match t {
                        ActionTerm::Pole { beta, residue } if (beta.norm() == 0.0) == at_origin => *residue *= e,
                        ActionTerm::Channel { .. } => {
                            return Err(Error::InvalidInput("residue loops are not defined for the channel".into()))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(EinbeinAction::new(terms, action.guard))
    }
}

fn finite_poles(action: &EinbeinAction) -> Result<Vec<(C64, C64)>> {
    if action.channel_spacing().is_some() {
        return Err(Error::InvalidInput("monodromy needs finitely many poles".into()));
    }
    let mut v = action.poles(f64::INFINITY);
    v.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()));
    Ok(v)
}

/// Rotation of every puncture's convergent directions over the loop.
fn sector_rotations(setting: &LoopSetting, lp: ParameterLoop) -> Result<(f64, Vec<(C64, f64)>)> {
    let a0 = setting.deformed(lp.parameter, 0.0)?;
    let poles0 = finite_poles(&a0)?;
    let mut inf = 0.0;
    let mut rot = vec![0.0; poles0.len()];
    if lp.winding == 0 {
        return Ok((0.0, poles0.iter().map(|p| (p.0, 0.0)).collect()));
    }
    let n = 720 * lp.winding.unsigned_abs() as usize;
    let total = TAU * lp.winding as f64;
    let (mut prev_mu, mut prev_res) = (a0.mu_inf, poles0.iter().map(|p| p.1).collect::<Vec<_>>());
    for j in 1..=n {
        let a = setting.deformed(lp.parameter, total * j as f64 / n as f64)?;
        if a.m_inf != a0.m_inf || a.mu_inf.norm() == 0.0 {
            return Err(Error::InvalidInput("loop passes through a change of order at infinity".into()));
        }
        let poles = finite_poles(&a)?;
        if poles.len() != poles0.len() || poles.iter().zip(&poles0).any(|(p, q)| (p.0 - q.0).norm() > 1e-12) {
            return Err(Error::InvalidInput("loop moves a finite pole".into()));
        }
        let step = |new: C64, old: C64| (new / old).arg();
        let d = step(a.mu_inf, prev_mu);
        if d.abs() > 0.5 {
            return Err(Error::NonConvergence("loop step too coarse".into()));
        }
        inf += d;
        prev_mu = a.mu_inf;
        for (k, p) in poles.iter().enumerate() {
            let d = step(p.1, prev_res[k]);
            if d.abs() > 0.5 {
                return Err(Error::NonConvergence("loop step too coarse".into()));
            }
            rot[k] += d;
            prev_res[k] = p.1;
        }
    }
    let m = a0.m_inf as f64;
    Ok((-inf / m, poles0.iter().zip(rot).map(|(p, r)| (p.0, r)).collect()))
}

/// Move every token with its sector once around the loop.
pub fn transported(setting: &LoopSetting, basis: &[BasisContour], lp: ParameterLoop) -> Result<Vec<BasisContour>> {
    let (inf, poles) = sector_rotations(setting, lp)?;
    basis
        .iter()
        .map(|b| {
            let word = b
                .word
                .iter()
                .map(|(w, t)| {
                    let d = match t.at {
                        Puncture::Infinity => inf,
                        Puncture::Finite { beta } => poles
                            .iter()
                            .find(|p| (p.0 - beta).norm() < 1e-12)
                            .map(|p| p.1)
                            .ok_or_else(|| Error::BasisNotClosed(format!("no pole at {beta}")))?,
                    };
                    Ok((*w, Token { at: t.at, angle: t.angle + d }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BasisContour { label: b.label.clone(), word })
        })
        .collect()
}

/// Canonical coordinate of a reduced word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    /// Base sector `j` of puncture `p`.
    Sector(usize, usize),
    /// Anchored loop around puncture `p`.
    Loop(usize),
}

/// Reference geometry: base point, anchors, circles and sheet factors.
struct Frame {
    wf: Wavefunction,
    punctures: Vec<Puncture>,
    /// Sector centres in `[0, 2π)` per puncture.
    centres: Vec<Vec<f64>>,
    /// Circle centre, radius and anchor angle per puncture.
    circles: Vec<(C64, f64, f64)>,
    p0: C64,
    eps: Vec<f64>,
}

impl Frame {
    fn new(setting: &LoopSetting) -> Result<Self> {
        let wf = Wavefunction::new(&setting.model, &setting.source, &setting.x, setting.k0)?;
        let k = C64::new(setting.k0, 0.0);
        let poles = finite_poles(&wf.action)?;
        if poles.is_empty() {
            return Err(Error::InvalidInput("no finite pole to anchor the frame".into()));
        }
        let spread = poles.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
        let gap = poles
            .iter()
            .enumerate()
            .flat_map(|(i, p)| poles[i + 1..].iter().map(move |q| (p.0 - q.0).norm()))
            .fold(f64::INFINITY, f64::min);
        let mut punctures = Vec::new();
        let mut centres = Vec::new();
        let mut circles = Vec::new();
        let base = -PI / 2.0;
        let r_single = {
            let lin = wf
                .action
                .terms
                .iter()
                .find_map(|t| match t {
                    ActionTerm::Monomial { power: 1, coeff } => Some(coeff.norm()),
                    _ => None,
                })
                .unwrap_or(0.0);
            if lin > 0.0 {
                (poles[0].1.norm() / lin).sqrt()
            } else {
                1.0
            }
        };
        let r_fin = if poles.len() == 1 { r_single } else { 0.3 * gap };
        for (b, r) in &poles {
            let s = pole_sector(*b, *r, k)?;
            punctures.push(Puncture::Finite { beta: *b });
            centres.push(vec![s.centre().rem_euclid(TAU)]);
            circles.push((*b, r_fin, base));
        }
        if wf.action.mu_inf.norm() > 0.0 {
            punctures.push(Puncture::Infinity);
            let mut c: Vec<f64> = convergence_wedges(&wf.action, k)?.iter().map(|w| w.centre().rem_euclid(TAU)).collect();
            c.sort_by(f64::total_cmp);
            centres.push(c);
            let r_inf = if poles.len() == 1 { r_fin } else { spread + 2.0 * r_fin };
            circles.push((C64::new(0.0, 0.0), r_inf, base));
        }
        let p0 = circles[0].0 + C64::from_polar(circles[0].1, base);
        let mut frame = Frame { wf, punctures, centres, circles, p0, eps: Vec::new() };
        frame.eps = (0..frame.punctures.len()).map(|p| frame.sheet_factor(p)).collect::<Result<_>>()?;
        Ok(frame)
    }

    fn index(&self, at: Puncture) -> Result<usize> {
        self.punctures
            .iter()
            .position(|p| match (p, at) {
                (Puncture::Infinity, Puncture::Infinity) => true,
                (Puncture::Finite { beta: a }, Puncture::Finite { beta: b }) => (*a - b).norm() < 1e-12,
                _ => false,
            })
            .ok_or_else(|| Error::BasisNotClosed(format!("unknown puncture {at:?}")))
    }

    /// Punctures sharing a circle share its loop.
    fn loop_of(&self, p: usize) -> usize {
        self.circles.iter().position(|c| *c == self.circles[p]).unwrap_or(p)
    }

    fn anchor(&self, p: usize) -> C64 {
        let (c, r, a) = self.circles[p];
        c + C64::from_polar(r, a)
    }

    fn arc(&self, p: usize, to: f64, out: &mut Vec<C64>) {
        let (c, r, a) = self.circles[p];
        let n = ((to - a).abs() / (TAU / 96.0)).ceil().max(1.0) as usize;
        for j in 1..=n {
            out.push(c + C64::from_polar(r, a + (to - a) * j as f64 / n as f64));
        }
    }

    /// Prefactor ratio after one counter-clockwise turn around puncture `p`.
    fn sheet_factor(&self, p: usize) -> Result<f64> {
        let pf = &self.wf.prefactor;
        let mut pts = vec![self.anchor(p)];
        self.arc(p, self.circles[p].2 + TAU, &mut pts);
        let start = pf.base_logs(pts[0])?;
        let mut logs = start.clone();
        for q in &pts[1..] {
            logs = pf.logs_near(*q, &logs)?;
        }
        let r = (pf.log_from(&logs, 0) - pf.log_from(&start, 0)).exp();
        let e = r.re.round();
        if (r - e).norm() > 1e-9 || e.abs() != 1.0 {
            return Err(Error::InvalidInput(format!("sheet factor {r} is not ±1")));
        }
        Ok(e)
    }

    fn reduce_into(&self, w: i64, t: &Token, acc: &mut BTreeMap<Key, i64>) -> Result<()> {
        let p = self.index(t.at)?;
        let (j, n) = self.centres[p]
            .iter()
            .enumerate()
            .find_map(|(j, c)| {
                let n = (t.angle - c) / TAU;
                ((n - n.round()).abs() < 1e-6).then_some((j, n.round() as i64))
            })
            .ok_or_else(|| Error::BasisNotClosed(format!("angle {} is not a sector centre", t.angle)))?;
        let eps = self.eps[p] as i64;
        // I(τⁿE) = a·I(E) + c·C
        let (mut a, mut c) = (1i64, 0i64);
        for _ in 0..n.abs() {
            if n > 0 {
                (a, c) = (eps * a, eps * c + 1);
            } else {
                (a, c) = (eps * a, eps * (c - 1));
            }
        }
        *acc.entry(Key::Sector(p, j)).or_default() += w * a;
        *acc.entry(Key::Loop(self.loop_of(p))).or_default() += w * c;
        Ok(())
    }

    fn reduce(&self, b: &BasisContour) -> Result<BTreeMap<Key, i64>> {
        let mut acc = BTreeMap::new();
        for (w, t) in &b.word {
            self.reduce_into(*w, t, &mut acc)?;
        }
        acc.retain(|_, v| *v != 0);
        Ok(acc)
    }

    /// `∫Ψ` from the base point to the end region of a lifted token.
    fn token_integral(&self, t: &Token, opts: &QuadOptions) -> Result<C64> {
        let p = self.index(t.at)?;
        let (c, r, _) = self.circles[p];
        let mut pts = vec![self.p0, self.anchor(p)];
        self.arc(p, t.angle, &mut pts);
        let dir = C64::from_polar(1.0, t.angle);
        let inward = matches!(t.at, Puncture::Finite { .. });
        for j in 1..=80 {
            let s = if inward { 0.5f64.powi(j) } else { 2f64.powi(j) };
            pts.push(c + dir * r * s);
        }
        pts.dedup();
        let logs = self.wf.prefactor.base_logs(self.p0)?;
        let res = integrate_polyline(&self.wf, &pts, &logs, 0, opts, false)?;
        Ok(res.value)
    }

    fn word_integral(&self, b: &BasisContour, opts: &QuadOptions) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (w, t) in &b.word {
            acc += *w as f64 * self.token_integral(t, opts)?;
        }
        Ok(acc)
    }
}

/// Exact integer solution of `B·m = v` over the basis columns.
fn solve_integer(basis: &[BTreeMap<Key, i64>], v: &BTreeMap<Key, i64>) -> Result<Vec<i64>> {
    let mut keys: Vec<Key> = basis.iter().flat_map(|b| b.keys().copied()).collect();
    keys.extend(v.keys().copied());
    keys.sort();
    keys.dedup();
    let rows = keys.len();
    let cols = basis.len();
    let a = nalgebra::DMatrix::from_fn(rows, cols, |i, j| *basis[j].get(&keys[i]).unwrap_or(&0) as f64);
    let rhs = nalgebra::DVector::from_fn(rows, |i, _| *v.get(&keys[i]).unwrap_or(&0) as f64);
    let svd = a.clone().svd(true, true);
    if svd.rank(1e-9) < cols {
        return Err(Error::BasisNotClosed("basis words are linearly dependent".into()));
    }
    let sol = svd.solve(&rhs, 1e-12).map_err(|e| Error::BasisNotClosed(e.into()))?;
    let m: Vec<i64> = sol.iter().map(|x| x.round() as i64).collect();
    let dev = sol.iter().zip(&m).map(|(x, r)| (x - *r as f64).abs()).fold(0.0, f64::max);
    let back = &a * nalgebra::DVector::from_iterator(cols, m.iter().map(|x| *x as f64)) - rhs;
    if back.amax() > 1e-9 {
        return Err(Error::BasisNotClosed(format!("transported word outside the span (residual {:e})", back.amax())));
    }
    if dev > 1e-6 {
        return Err(Error::IntegerRoundingFailure(dev));
    }
    Ok(m)
}

/// Determinant of a small integer matrix by fraction-free elimination.
pub fn determinant(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|x| *x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    if n == 0 {
        1
    } else {
        (sign * a[n - 1][n - 1]) as i64
    }
}

pub fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|r| (0..n).map(|j| r.iter().zip(b).map(|(x, row)| x * row[j]).sum()).collect())
        .collect()
}

pub fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect()
}

pub fn power(m: &[Vec<i64>], e: u32) -> Vec<Vec<i64>> {
    (0..e).fold(identity(m.len()), |acc, _| matmul(&acc, m))
}

/// Integer monodromy of `basis` around `lp`.
pub fn transport(setting: &LoopSetting, basis: &[BasisContour], lp: ParameterLoop) -> Result<MonodromyMatrix> {
    let frame = Frame::new(setting)?;
    let moved = transported(setting, basis, lp)?;
    let cols: Vec<_> = basis.iter().map(|b| frame.reduce(b)).collect::<Result<_>>()?;
    let matrix: Vec<Vec<i64>> = moved
        .iter()
        .map(|b| solve_integer(&cols, &frame.reduce(b)?))
        .collect::<Result<_>>()?;
    let determinant = determinant(&matrix);
    if determinant.abs() != 1 {
        return Err(Error::BasisNotClosed(format!("determinant {determinant}")));
    }
    Ok(MonodromyMatrix { labels: basis.iter().map(|b| b.label.clone()).collect(), matrix, lp, determinant })
}

/// Loop of `|x − x′|²` around zero.
pub fn coordinate_loop(setting: &LoopSetting, basis: &[BasisContour], winding: i32) -> Result<MonodromyMatrix> {
    transport(setting, basis, ParameterLoop { parameter: LoopParameter::Coordinate, winding })
}

/// Largest relative mismatch between each transported contour integral and
/// the combination the matrix predicts.
pub fn confirm(setting: &LoopSetting, basis: &[BasisContour], m: &MonodromyMatrix) -> Result<f64> {
    let frame = Frame::new(setting)?;
    let opts = QuadOptions::default();
    let moved = transported(setting, basis, m.lp)?;
    let orig: Vec<C64> = basis.iter().map(|b| frame.word_integral(b, &opts)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for (row, b) in m.matrix.iter().zip(&moved) {
        let lhs = frame.word_integral(b, &opts)?;
        let rhs: C64 = row.iter().zip(&orig).map(|(c, v)| *c as f64 * v).sum();
        let scale = row.iter().zip(&orig).map(|(c, v)| (*c as f64).abs() * v.norm()).sum::<f64>().max(rhs.norm());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).norm() / scale);
        } else {
            worst = worst.max(lhs.norm());
        }
    }
    Ok(worst)
}

/// `Γ_A` from the origin to the upper wedge and the origin loop `Γ_D`.
pub fn constant_basis() -> Vec<BasisContour> {
    vec![
        BasisContour::path("A", Token::origin(-PI / 2.0), Token::infinity(PI / 2.0)),
        BasisContour::path("D", Token::origin(-PI / 2.0), Token::origin(3.0 * PI / 2.0)),
    ]
}

/// `Γ_A, Γ_B, Γ_C, Γ_D` for the linear profile; `Γ_A + Γ_B` is the real axis.
pub fn linear_basis() -> Vec<BasisContour> {
    let w = |a: f64| Token::infinity(a);
    vec![
        BasisContour::path("A", Token::origin(-PI / 2.0), w(PI / 2.0)),
        BasisContour::path("B", w(PI / 2.0), w(-PI / 6.0)),
        BasisContour::path("C", w(PI / 2.0), w(7.0 * PI / 6.0)),
        BasisContour::path("D", Token::origin(-PI / 2.0), Token::origin(3.0 * PI / 2.0)),
    ]
}

/// Contours through the ghost pole at `Λ = beta` and the origin loop.
pub fn ghost_basis(beta: f64) -> Vec<BasisContour> {
    let g = Token::pole(beta, -PI / 2.0);
    vec![
        BasisContour::new(
            "through",
            vec![(1, Token::infinity(PI / 2.0)), (-1, g), (1, g), (-1, Token::origin(-PI / 2.0))],
        ),
        BasisContour::path("D", Token::origin(-PI / 2.0), Token::origin(3.0 * PI / 2.0)),
    ]
}
