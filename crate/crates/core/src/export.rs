//! CSV tables and SVG diagrams for configurations, runs, height profiles
//! and the closed-form tabulations. Everything renders to a `String`; the
//! caller decides where it goes.

use std::fmt::Write as _;

use crate::hammersley::{Birth, Death, HammersleyRun};
use crate::hydro::{self, ModelParams};
use crate::lpp::{self, LevelDecomposition};
use crate::png::{HeightProfile, InterfaceTrace};
use crate::point::PointConfig;
use crate::Result;

fn csv_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// The driving configuration as `kind,x,t` rows.
pub fn points_csv(config: &PointConfig) -> String {
    let mut out = String::from("kind,x,t\n");
    for s in &config.sources {
        csv_row(&mut out, &["source".into(), s.to_string(), "0".into()]);
    }
    for s in &config.sinks {
        csv_row(&mut out, &["sink".into(), "0".into(), s.to_string()]);
    }
    for p in &config.bulk {
        csv_row(&mut out, &["bulk".into(), p.x.to_string(), p.t.to_string()]);
    }
    out
}

/// Particle events as `trajectory,event,x,t` rows.
pub fn run_csv(run: &HammersleyRun) -> String {
    let mut out = String::from("trajectory,event,x,t\n");
    for traj in &run.trajectories {
        let k = traj.index.to_string();
        match traj.birth {
            Birth::Source { x } => {
                csv_row(&mut out, &[k.clone(), "source".into(), x.to_string(), "0".into()])
            }
            Birth::Bulk { x, t } => {
                csv_row(&mut out, &[k.clone(), "birth".into(), x.to_string(), t.to_string()])
            }
            Birth::Virtual { t } => {
                csv_row(&mut out, &[k.clone(), "virtual".into(), "0".into(), t.to_string()])
            }
        }
        for &(t, x) in &traj.jumps {
            csv_row(&mut out, &[k.clone(), "jump".into(), x.to_string(), t.to_string()]);
        }
        if let Death::SinkExit { t } = traj.death {
            csv_row(&mut out, &[k.clone(), "exit".into(), "0".into(), t.to_string()]);
        }
    }
    out
}

/// Height profile sampled on a regular grid, as `z,s,h` rows.
pub fn height_grid_csv(
    profile: &HeightProfile,
    z_range: (f64, f64),
    s_range: (f64, f64),
    nz: usize,
    ns: usize,
) -> Result<String> {
    let mut out = String::from("z,s,h\n");
    for j in 0..ns {
        let s = s_range.0 + (s_range.1 - s_range.0) * j as f64 / (ns - 1).max(1) as f64;
        for i in 0..nz {
            let z = z_range.0 + (z_range.1 - z_range.0) * i as f64 / (nz - 1).max(1) as f64;
            let h = profile.height(z, s)?;
            csv_row(&mut out, &[z.to_string(), s.to_string(), h.to_string()]);
        }
    }
    Ok(out)
}

/// Competition interface as `n,phi,sigma,level` rows.
pub fn interface_csv(trace: &InterfaceTrace) -> String {
    let mut out = String::from("n,phi,sigma,level\n");
    for (i, hit) in trace.hits.iter().enumerate() {
        csv_row(
            &mut out,
            &[
                (i + 1).to_string(),
                hit.z.to_string(),
                hit.s.to_string(),
                trace.levels.get(i).copied().unwrap_or(0).to_string(),
            ],
        );
    }
    out
}

/// `r,z_cdf` over an even grid.
pub fn cdf_table_csv(params: ModelParams, r_range: (f64, f64), n: usize) -> Result<String> {
    let mut out = String::from("r,z_cdf\n");
    for i in 0..n {
        let r = r_range.0 + (r_range.1 - r_range.0) * i as f64 / (n - 1).max(1) as f64;
        csv_row(&mut out, &[r.to_string(), hydro::z_cdf(r, params)?.to_string()]);
    }
    Ok(out)
}

/// `c,f` for the ellipsoidal droplet shape.
pub fn shape_table_csv(n: usize) -> String {
    let mut out = String::from("c,f\n");
    for i in 0..n {
        let c = -1.0 + 2.0 * i as f64 / (n - 1).max(1) as f64;
        let f = hydro::limit_shape_f(c.clamp(-1.0, 1.0)).unwrap();
        csv_row(&mut out, &[c.to_string(), f.to_string()]);
    }
    out
}

/// `x,u` profile of the entropic Burgers solution at fixed time.
pub fn burgers_table_csv(
    params: ModelParams,
    t: f64,
    x_range: (f64, f64),
    n: usize,
) -> Result<String> {
    let mut out = String::from("x,u\n");
    for i in 0..n {
        let x = x_range.0 + (x_range.1 - x_range.0) * i as f64 / (n - 1).max(1) as f64;
        let x = x.max(1e-9);
        csv_row(&mut out, &[x.to_string(), hydro::burgers_u(x, t, params)?.to_string()]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// SVG

const W: f64 = 800.0;
const H: f64 = 600.0;
const MARGIN: f64 = 40.0;

struct Canvas {
    body: String,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Canvas {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Canvas { body: String::new(), x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    // SVG y grows downwards; world y grows upwards.
    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{color}"/>"#,
            self.px(x),
            self.py(y)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="{width}"/>"#,
            self.px(x1),
            self.py(y1),
            self.px(x2),
            self.py(y2)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            coords.join(" ")
        );
    }

    fn finish(self, title: &str) -> String {
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" "#,
                r#"viewBox="0 0 {w} {h}">"#,
                "\n",
                r#"<rect width="{w}" height="{h}" fill="white"/>"#,
                "\n",
                r#"<text x="{m}" y="24" font-family="monospace" font-size="14">{title}</text>"#,
                "\n{body}</svg>\n"
            ),
            w = W,
            h = H,
            m = MARGIN,
            title = title,
            body = self.body
        )
    }
}

const LEVEL_COLORS: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// Level decomposition diagram: configuration points colored by level,
/// beta-points as hollow-ish black dots.
pub fn decomposition_svg(config: &PointConfig, decomp: &LevelDecomposition) -> Result<String> {
    let (x_max, t_max) = config.window;
    let mut c = Canvas::new(0.0, x_max, 0.0, t_max);
    for (i, cp) in decomp.points.iter().enumerate() {
        let color = LEVEL_COLORS[(decomp.level_of[i] - 1) % LEVEL_COLORS.len()];
        c.circle(cp.loc.x, cp.loc.t, 2.5, color);
    }
    for k in 1..=decomp.max_complete_level() {
        for bp in lpp::beta_points(decomp, k)? {
            c.circle(bp.location.x, bp.location.t, 1.5, "black");
        }
    }
    Ok(c.finish(&format!(
        "level decomposition, {} levels, window {x_max}x{t_max}",
        decomp.max_complete_level()
    )))
}

/// Space-time diagram of the particle trajectories.
pub fn trajectories_svg(run: &HammersleyRun) -> String {
    let (x_max, t_max) = run.window;
    let mut c = Canvas::new(0.0, x_max, 0.0, t_max);
    for traj in &run.trajectories {
        let color = LEVEL_COLORS[(traj.index - 1) % LEVEL_COLORS.len()];
        let (mut x, mut t) = match traj.birth {
            Birth::Source { x } => (x, 0.0),
            Birth::Bulk { x, t } => (x, t),
            Birth::Virtual { .. } => continue,
        };
        let mut pts = vec![(x, t)];
        for &(tj, xj) in &traj.jumps {
            pts.push((x, tj));
            pts.push((xj, tj));
            x = xj;
            t = tj;
        }
        let _ = t;
        let end = traj.death_time(t_max);
        pts.push((x, end));
        if let Death::SinkExit { t } = traj.death {
            pts.push((0.0, t));
        }
        c.polyline(&pts, color, 1.0);
    }
    c.finish(&format!("hammersley trajectories, window {x_max}x{t_max}"))
}

/// Layer diagram of a height profile in the (z, s) plane: boundary segments
/// colored by step direction, with the competition interface overlaid.
pub fn height_svg(profile: &HeightProfile, interface: Option<&InterfaceTrace>) -> String {
    let mut z_lo = f64::INFINITY;
    let mut z_hi = f64::NEG_INFINITY;
    for seg in &profile.segments {
        if !seg.z0.is_finite() {
            continue;
        }
        let t1 = seg.t_end.min(profile.horizon);
        for z in [seg.z0, seg.z0 + seg.vel * (t1 - seg.t0)] {
            z_lo = z_lo.min(z);
            z_hi = z_hi.max(z);
        }
    }
    if !z_lo.is_finite() {
        (z_lo, z_hi) = (-1.0, 1.0);
    }
    let mut c = Canvas::new(z_lo, z_hi, 0.0, profile.horizon);
    for seg in &profile.segments {
        if !seg.z0.is_finite() {
            continue;
        }
        let t1 = seg.t_end.min(profile.horizon);
        let color = match seg.dh {
            1 => "#1f77b4",
            -1 => "#ff7f0e",
            _ => "#999999",
        };
        c.line(seg.z0, seg.t0, seg.z0 + seg.vel * (t1 - seg.t0), t1, color, 1.0);
    }
    if let Some(trace) = interface {
        let mut pts = vec![(0.0, 0.0)];
        for hit in &trace.hits {
            let (last_z, _) = *pts.last().unwrap();
            pts.push((last_z, hit.s));
            pts.push((hit.z, hit.s));
        }
        c.polyline(&pts, "#d62728", 2.0);
    }
    c.finish(&format!("png layers to s = {}", profile.horizon))
}

/// Empirical CDF of the samples against a reference curve.
pub fn cdf_overlay_svg(samples: &[f64], cdf: impl Fn(f64) -> f64, title: &str) -> String {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = match (sorted.first(), sorted.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        _ => (0.0, 1.0),
    };
    let pad = 0.05 * (hi - lo);
    let mut c = Canvas::new(lo - pad, hi + pad, 0.0, 1.0);
    let n = sorted.len() as f64;
    let mut steps = vec![(lo - pad, 0.0)];
    for (i, &x) in sorted.iter().enumerate() {
        steps.push((x, i as f64 / n));
        steps.push((x, (i + 1) as f64 / n));
    }
    steps.push((hi + pad, 1.0));
    c.polyline(&steps, "#1f77b4", 1.5);
    let curve: Vec<(f64, f64)> = (0..=400)
        .map(|i| {
            let x = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / 400.0;
            (x, cdf(x).clamp(0.0, 1.0))
        })
        .collect();
    c.polyline(&curve, "#d62728", 1.5);
    c.finish(title)
}
