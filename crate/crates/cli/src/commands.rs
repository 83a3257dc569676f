use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use einbein::asymptotics::arrivals_at;
use einbein::critical::{caustic_locus, ghost_source_locus};
use einbein::export::{arrivals_csv, caustics_csv, field_csv, field_json, heatmap_svg, thimbles_svg};
use einbein::laurent::{laurent_ghost_pole, laurent_point_source};
use einbein::monodromy::{
    confirm, constant_basis, coordinate_loop, ghost_basis, linear_basis, transport, transported, BasisContour, LoopSetting,
};
use einbein::pade::{fit_rational, riemann_hurwitz_count};
use einbein::quadrature::{field_critical_points, field_decomposition, field_wavefunction};
use einbein::{field_grid, FieldOptions, LoopParameter, ParameterLoop, RefractionModel, SourceSpec, C64};
use serde_json::json;

use crate::config::{config_err, Failure, RunConfig};

pub struct Output {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| config_err(format!("{}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        let p = self.dir.join(name);
        fs::write(&p, body).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
        self.written.push(p);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &serde_json::Value) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Numerical(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn options(cfg: &RunConfig, k0: f64) -> FieldOptions {
    FieldOptions { k0, absorption: cfg.absorption, window: cfg.window }
}

fn c(v: C64) -> [f64; 2] {
    [v.re, v.im]
}

fn tag(k0: f64) -> String {
    format!("k{k0}")
}

pub fn field(cfg: &RunConfig, out: &mut Output) -> Result<String, Failure> {
    if cfg.k0.is_empty() {
        return Err(config_err("no k0 given"));
    }
    let (xs, zs) = cfg.grid()?.axes();
    let points: Vec<Vec<f64>> = zs.iter().flat_map(|z| xs.iter().map(move |x| vec![*x, *z])).collect();
    let caustics = caustic_locus(&cfg.model, &cfg.source, &xs, &zs).ok();
    let mut log = String::new();
    let mut summary = String::new();
    for &k0 in &cfg.k0 {
        let samples = field_grid(&cfg.model, &cfg.source, &xs, &zs, &options(cfg, k0));
        let failed = samples.iter().filter(|s| s.is_err()).count();
        if failed == samples.len() {
            let first = samples.into_iter().find_map(|s| s.err()).map(|e| e.to_string()).unwrap_or_default();
            return Err(Failure::Numerical(format!("every grid point failed at k0 = {k0}: {first}")));
        }
        for (p, s) in points.iter().zip(&samples) {
            if let Err(e) = s {
                let _ = writeln!(log, "k0={k0} x={} z={}: {e}", p[0], p[1]);
            }
        }
        let t = tag(k0);
        out.write(&format!("field_{t}.csv"), &field_csv(&points, &samples))?;
        out.json(&format!("field_{t}.json"), &field_json(k0, &points, &samples))?;
        let abs: Vec<f64> = samples.iter().map(|s| s.as_ref().map(|s| s.value.norm()).unwrap_or(f64::NAN)).collect();
        out.write(&format!("field_{t}.svg"), &heatmap_svg(&xs, &zs, &abs, caustics.as_ref()))?;
        let _ = writeln!(summary, "k0 = {k0}: {} points, {failed} failed", samples.len());
    }
    out.write("field.log", &log)?;
    Ok(summary)
}

pub fn thimbles(cfg: &RunConfig, out: &mut Output) -> Result<String, Failure> {
    let x = cfg.point()?;
    let opts = options(cfg, cfg.first_k0()?);
    let wf = field_wavefunction(&cfg.model, &cfg.source, x, &opts)?;
    let cps = field_critical_points(&wf, &opts)?;
    let dec = field_decomposition(&wf, &cps, &opts, None)?;
    let poles: Vec<C64> = ghost_source_locus(&cfg.model, &cfg.source, 50.0).iter().map(|g| g.beta).collect();
    let radius = cps.iter().map(|c| c.lambda.norm()).chain(poles.iter().map(|p| p.norm())).fold(1.0, f64::max) * 1.6;
    let contours: Vec<serde_json::Value> = dec
        .contours
        .iter()
        .zip(&dec.coefficients)
        .map(|(ct, n)| {
            let (kind, a, b) = match ct {
                einbein::ContourClass::Thimble(t) => ("thimble", &t.incoming, Some(&t.outgoing)),
                einbein::ContourClass::BranchLoop { path, .. } => ("branch-loop", path, None),
            };
            json!({
                "kind": kind,
                "base": c(ct.base()),
                "coefficient": n,
                "incoming": a.points.iter().map(|p| c(*p)).collect::<Vec<_>>(),
                "outgoing": b.map(|b| b.points.iter().map(|p| c(*p)).collect::<Vec<_>>()),
                "ends": [serde_json::to_value(&a.end).ok(), b.and_then(|b| serde_json::to_value(&b.end).ok())],
            })
        })
        .collect();
    out.json(
        "thimbles.json",
        &json!({
            "x": x,
            "k0": opts.k0,
            "critical_points": cps.iter().map(|p| json!({"lambda": c(p.lambda), "value": c(p.value), "real": p.real})).collect::<Vec<_>>(),
            "poles": poles.iter().map(|p| c(*p)).collect::<Vec<_>>(),
            "contours": contours,
        }),
    )?;
    out.write("thimbles.svg", &thimbles_svg(&dec.contours, &dec.coefficients, &poles, radius))?;
    let mut s = String::new();
    for (ct, n) in dec.active() {
        let _ = writeln!(s, "{n:+} × contour at Λ = {}", ct.base());
    }
    Ok(s)
}

pub fn caustics(cfg: &RunConfig, out: &mut Output) -> Result<String, Failure> {
    let (xs, zs) = cfg.grid()?.axes();
    let map = caustic_locus(&cfg.model, &cfg.source, &xs, &zs)?;
    out.write("caustics.csv", &caustics_csv(&map))?;
    out.json(
        "caustics.json",
        &json!({
            "closed_form": map.closed_form,
            "cusps": map.cusps,
            "crossings": map.crossings,
        }),
    )?;
    let n_real: Vec<f64> = map.cells.iter().map(|c| if c.n_real == usize::MAX { f64::NAN } else { c.n_real as f64 }).collect();
    out.write("caustics.svg", &heatmap_svg(&xs, &zs, &n_real, Some(&map)))?;
    let mut s = format!("{} crossings\n", map.crossings.len());
    if let Some(f) = &map.closed_form {
        let _ = writeln!(s, "closed form: {f}");
    }
    for p in &map.cusps {
        let _ = writeln!(s, "cusp at ({}, {})", p[0], p[1]);
    }
    Ok(s)
}

fn source_point(source: &SourceSpec) -> Result<&[f64], Failure> {
    match source {
        SourceSpec::PointDelta { at } => Ok(at),
        _ => Err(config_err("series need a point source")),
    }
}

pub fn laurent(cfg: &RunConfig, pole: Option<i64>, out: &mut Output) -> Result<String, Failure> {
    let x = cfg.point()?;
    let at = source_point(&cfg.source)?;
    let order = cfg.order.unwrap_or(10);
    let k0 = cfg.k0.first().copied().unwrap_or(1.0);
    let series = match pole {
        Some(n) => laurent_ghost_pole(&cfg.model, n, at, x, k0, order)?,
        None => laurent_point_source(&cfg.model, at, x, k0, order)?,
    };
    out.json("laurent.json", &series.to_json())?;
    let mut csv = String::from("m,re,im,leading_re,leading_im\n");
    for m in -1..=order as i64 {
        let (v, l) = (series.value(m), series.leading(m));
        let _ = writeln!(csv, "{m},{},{},{},{}", v.re, v.im, l.re, l.im);
    }
    out.write("laurent.csv", &csv)?;
    Ok(format!("{} coefficients about Λ = {}\n", order + 2, series.point))
}

pub fn pade(cfg: &RunConfig, out: &mut Output) -> Result<String, Failure> {
    let spec = cfg.pade.as_ref().ok_or_else(|| config_err("no Padé degrees given"))?;
    let x = cfg.point()?;
    let at = source_point(&cfg.source)?;
    let order = cfg.order.unwrap_or(spec.n + spec.m + 1).max(spec.n + spec.m + 1);
    let series = laurent_point_source(&cfg.model, at, x, cfg.k0.first().copied().unwrap_or(1.0), order)?;
    let approx = fit_rational(&series, spec.n, spec.m)?;
    // the count check is reported, not enforced: truncated fits may miss far critical points
    let rh = match riemann_hurwitz_count(&approx) {
        Ok(rh) => json!(rh),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let ghosts: Vec<_> = approx.poles.iter().filter(|p| !p.spurious && p.beta.norm() > 0.0).collect();
    out.json(
        "pade.json",
        &json!({
            "approximant": approx.to_json(),
            "riemann_hurwitz": rh,
            "ghost_poles": ghosts.iter().map(|p| json!({"beta": c(p.beta), "residue": c(p.residue)})).collect::<Vec<_>>(),
        }),
    )?;
    let mut s = String::new();
    for p in ghosts {
        let _ = writeln!(s, "ghost pole at Λ = {} with residue {}", p.beta, p.residue);
    }
    Ok(s)
}

fn basis_for(model: &RefractionModel, source: &SourceSpec) -> Result<Vec<BasisContour>, Failure> {
    match (model, source) {
        (RefractionModel::Constant { .. }, SourceSpec::PointDelta { .. }) => Ok(constant_basis()),
        (RefractionModel::LinearZ { .. }, SourceSpec::PointDelta { .. }) => Ok(linear_basis()),
        (RefractionModel::Constant { .. }, SourceSpec::PhaseSheet { mu, .. }) => Ok(ghost_basis(*mu)),
        _ => Err(config_err("no contour basis for this model and source")),
    }
}

pub fn monodromy(cfg: &RunConfig, out: &mut Output) -> Result<String, Failure> {
    let spec = cfg.monodromy.as_ref().ok_or_else(|| config_err("no loop given"))?;
    let setting = LoopSetting::new(cfg.model.clone(), cfg.source.clone(), cfg.point()?, cfg.k0.first().copied().unwrap_or(1.0));
    let basis = basis_for(&cfg.model, &cfg.source)?;
    let lp = ParameterLoop { parameter: spec.parameter, winding: spec.winding };
    let m = match spec.parameter {
        LoopParameter::Coordinate => coordinate_loop(&setting, &basis, spec.winding)?,
        _ => transport(&setting, &basis, lp)?,
    };
    let err = confirm(&setting, &basis, &m)?;
    out.json(
        "monodromy.json",
        &json!({ "monodromy": m, "confirmation_error": err }),
    )?;
    let snapshots = match spec.parameter {
        LoopParameter::Coordinate => None,
        _ => Some(transported(&setting, &basis, lp)?),
    };
    out.json("transported.json", &json!({ "basis": basis, "transported": snapshots }))?;
    let mut s = String::new();
    for row in &m.matrix {
        let _ = writeln!(s, "{row:?}");
    }
    let _ = writeln!(s, "confirmed to {err:.1e}");
    Ok(s)
}

pub fn arrivals(cfg: &RunConfig, out: &mut Output) -> Result<String, Failure> {
    let t = cfg.transect.as_ref().ok_or_else(|| config_err("no transect given"))?;
    if t.n < 2 || t.from.len() != t.to.len() || t.from.len() != cfg.source.dim() {
        return Err(config_err("transect needs matching endpoints and at least 2 points"));
    }
    if !(t.c0 > 0.0 && t.c0.is_finite()) {
        return Err(config_err("c0 must be positive"));
    }
    let opts = options(cfg, cfg.first_k0()?);
    let mut rows = Vec::new();
    let mut log = String::new();
    for i in 0..t.n {
        let s = i as f64 / (t.n - 1) as f64;
        let p: Vec<f64> = t.from.iter().zip(&t.to).map(|(a, b)| a + (b - a) * s).collect();
        match arrivals_at(&cfg.model, &cfg.source, &p, &opts, t.c0) {
            Ok(a) => rows.push((p, a)),
            Err(e) => {
                let _ = writeln!(log, "x={p:?}: {e}");
            }
        }
    }
    if rows.is_empty() {
        return Err(Failure::Numerical("no arrivals computed on the transect".into()));
    }
    out.write("arrivals.csv", &arrivals_csv(&rows))?;
    out.write("arrivals.log", &log)?;
    Ok(format!("{} of {} transect points\n", rows.len(), t.n))
}
