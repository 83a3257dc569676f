//! CSV, JSON and schematic SVG output for fields, caustics, thimbles and
//! arrivals.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::action::C64;
use crate::asymptotics::Arrival;
use crate::critical::{CausticMap, Zone};
use crate::error::Result;
use crate::quadrature::FieldSample;
use crate::thimble::ContourClass;

fn zone_name(z: Zone) -> &'static str {
    match z {
        Zone::Illuminated => "illuminated",
        Zone::Shadow => "shadow",
        Zone::OnCaustic => "on-caustic",
    }
}

/// One row per grid point: `x,z,re,im,abs,zone`; failed points carry `NaN`
/// and zone `failed`.
pub fn field_csv(points: &[Vec<f64>], samples: &[Result<FieldSample>]) -> String {
    let mut out = String::from("x,z,re,im,abs,zone\n");
    for (p, s) in points.iter().zip(samples) {
        let (x, z) = (p[0], p.get(1).copied().unwrap_or(0.0));
        match s {
            Ok(s) => {
                let _ = writeln!(out, "{x},{z},{},{},{},{}", s.value.re, s.value.im, s.value.norm(), zone_name(s.zone));
            }
            Err(_) => {
                let _ = writeln!(out, "{x},{z},NaN,NaN,NaN,failed");
            }
        }
    }
    out
}

pub fn field_json(k0: f64, points: &[Vec<f64>], samples: &[Result<FieldSample>]) -> Value {
    let rows: Vec<Value> = points
        .iter()
        .zip(samples)
        .map(|(p, s)| match s {
            Ok(s) => json!({
                "x": p,
                "re": s.value.re,
                "im": s.value.im,
                "abs": s.value.norm(),
                "zone": s.zone,
                "method": if s.oracle { "oracle" } else { "thimbles" },
                "contributions": s.contributions.iter().map(|c| json!({
                    "base": [c.base.re, c.base.im],
                    "coefficient": c.coefficient,
                    "re": c.value.re,
                    "im": c.value.im,
                    "arrival": c.arrival,
                })).collect::<Vec<_>>(),
            }),
            Err(e) => json!({ "x": p, "error": e.to_string() }),
        })
        .collect();
    json!({ "k0": k0, "points": rows })
}

/// `x,z,t,smear,contour,base_re,base_im,coefficient,branch_loop`.
pub fn arrivals_csv(rows: &[(Vec<f64>, Vec<Arrival>)]) -> String {
    let mut out = String::from("x,z,t,smear,contour,base_re,base_im,coefficient,branch_loop\n");
    for (p, arrivals) in rows {
        for a in arrivals {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p[0],
                p.get(1).copied().unwrap_or(0.0),
                a.t,
                a.smear,
                a.contour,
                a.base.re,
                a.base.im,
                a.coefficient,
                a.branch_loop
            );
        }
    }
    out
}

/// `x,z,zone,caustic,ghost_source,n_real,n_total`.
pub fn caustics_csv(map: &CausticMap) -> String {
    let mut out = String::from("x,z,zone,caustic,ghost_source,n_real,n_total\n");
    for c in &map.cells {
        let n_real = if c.n_real == usize::MAX { "NaN".to_string() } else { c.n_real.to_string() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.x[0],
            c.x[1],
            zone_name(c.zone),
            serde_json::to_value(c.caustic).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            c.ghost_source,
            n_real,
            c.n_total
        );
    }
    out
}

fn colour(t: f64) -> String {
    // dark blue → yellow
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let r = (255.0 * t.powf(0.8)) as u8;
    let g = (230.0 * t.sqrt()) as u8;
    let b = (120.0 * (1.0 - t) + 40.0) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let (dx, dy) = ((x1 - x0).abs().max(1e-12), (y1 - y0).abs().max(1e-12));
        let w = 600.0;
        let h = (w * dy / dx).clamp(200.0, 900.0);
        Frame { x0, x1, y0, y1, w, h }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let u = (x - self.x0) / (self.x1 - self.x0) * self.w;
        let v = (1.0 - (y - self.y0) / (self.y1 - self.y0)) * self.h;
        (u, v)
    }

    fn open(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n",
            self.w, self.h, self.w, self.h
        )
    }
}

/// `|φ|` heat map over a row-major `zs × xs` grid, with caustic crossings
/// and cusp points overlaid.
pub fn heatmap_svg(xs: &[f64], zs: &[f64], abs: &[f64], caustic: Option<&CausticMap>) -> String {
    let (nx, nz) = (xs.len(), zs.len());
    let half = |v: &[f64], i: usize| {
        if v.len() < 2 {
            0.5
        } else if i + 1 < v.len() {
            0.5 * (v[i + 1] - v[i]).abs()
        } else {
            0.5 * (v[i] - v[i - 1]).abs()
        }
    };
    let f = Frame::new(
        xs[0] - half(xs, 0),
        xs[nx - 1] + half(xs, nx - 1),
        zs[0] - half(zs, 0),
        zs[nz - 1] + half(zs, nz - 1),
    );
    let max = abs.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mut s = f.open();
    for j in 0..nz {
        for i in 0..nx {
            let v = abs[j * nx + i];
            let (u0, v0) = f.px(xs[i] - half(xs, i), zs[j] + half(zs, j));
            let (u1, v1) = f.px(xs[i] + half(xs, i), zs[j] - half(zs, j));
            let _ = writeln!(
                s,
                "<rect x=\"{u0:.2}\" y=\"{v0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                u1 - u0 + 0.3,
                v1 - v0 + 0.3,
                if v.is_finite() { colour(v / max.max(f64::MIN_POSITIVE)) } else { "#808080".into() }
            );
        }
    }
    if let Some(map) = caustic {
        for c in &map.crossings {
            let (u, v) = f.px(c.x[0], c.x[1]);
            let _ = writeln!(s, "<circle cx=\"{u:.2}\" cy=\"{v:.2}\" r=\"1.6\" fill=\"#ff3030\"/>");
        }
        for c in &map.cusps {
            let (u, v) = f.px(c[0], c[1]);
            let _ = writeln!(s, "<circle cx=\"{u:.2}\" cy=\"{v:.2}\" r=\"4\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"1.5\"/>");
        }
    }
    s.push_str("</svg>\n");
    s
}

fn contour_points(c: &ContourClass) -> Vec<C64> {
    match c {
        ContourClass::Thimble(t) => t.incoming.points.iter().rev().chain(t.outgoing.points.iter().skip(1)).copied().collect(),
        ContourClass::BranchLoop { path, .. } => path.points.clone(),
    }
}

/// Thimble polylines in the complex `Λ` plane; contributing contours are
/// drawn solid, the rest dashed.
pub fn thimbles_svg(contours: &[ContourClass], coefficients: &[i64], poles: &[C64], radius: f64) -> String {
    let f = Frame::new(-radius, radius, -radius, radius);
    let mut s = f.open();
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    let (u0, v0) = f.px(-radius, 0.0);
    let (u1, _) = f.px(radius, 0.0);
    let (ua, va) = f.px(0.0, radius);
    let (_, vb) = f.px(0.0, -radius);
    let _ = writeln!(s, "<line x1=\"{u0:.2}\" y1=\"{v0:.2}\" x2=\"{u1:.2}\" y2=\"{v0:.2}\" stroke=\"#bbbbbb\"/>");
    let _ = writeln!(s, "<line x1=\"{ua:.2}\" y1=\"{va:.2}\" x2=\"{ua:.2}\" y2=\"{vb:.2}\" stroke=\"#bbbbbb\"/>");
    for (c, n) in contours.iter().zip(coefficients) {
        let pts: Vec<String> = contour_points(c)
            .iter()
            .filter(|p| p.norm() <= 4.0 * radius)
            .map(|p| {
                let (u, v) = f.px(p.re, p.im);
                format!("{u:.2},{v:.2}")
            })
            .collect();
        let dash = if *n == 0 { " stroke-dasharray=\"4 3\"" } else { "" };
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f4fbf\" stroke-width=\"1.5\"{dash}/>", pts.join(" "));
        let (u, v) = f.px(c.base().re, c.base().im);
        let _ = writeln!(s, "<circle cx=\"{u:.2}\" cy=\"{v:.2}\" r=\"3\" fill=\"#1f4fbf\"/>");
    }
    for p in poles {
        let (u, v) = f.px(p.re, p.im);
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" fill=\"#c02020\">×</text>", u - 4.0, v + 5.0);
    }
    s.push_str("</svg>\n");
    s
}
