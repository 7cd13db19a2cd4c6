//! Deterministic SVG phase portraits.
//!
//! A portrait draws the projected phase curves, the discriminant (dashed),
//! and one glyph per classified singular point, annotated with `data-kind`
//! and `data-lambda` attributes. Identical specs render to identical bytes:
//! all floating-point output is quantized to two decimals and every
//! collection is iterated in a fixed order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::clairaut::{classify_family, ClairautKind, GeneratingFamily};
use crate::classify::{
    classify_equilibrium, classify_implicit_point, find_folded_equilibria, folded_eigendirections,
    ClassifyConfig, SingularKind, SingularPointReport,
};
use crate::expr::Expression;
use crate::flow::{detect_events, integrate, FlowConfig, PhaseCurve, Sample};
use crate::num::Real;
use crate::surface::{trace_criminant, Box3, SurfaceError, TraceOptions};

/// Plane viewport of the drawing.
#[derive(Debug, Clone, Copy)]
pub struct Viewport<F> {
    pub x_min: F,
    pub x_max: F,
    pub y_min: F,
    pub y_max: F,
}

impl<F: Real> Viewport<F> {
    pub fn new(x_min: F, x_max: F, y_min: F, y_max: F) -> Self {
        assert!(x_min < x_max && y_min < y_max, "degenerate viewport");
        Viewport {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn contains(&self, x: F, y: F) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Debug, Clone)]
pub enum PortraitSource {
    /// Implicit surface `G(x, y, p) = 0`.
    Surface(Expression),
    /// Explicit plane field `(f1, f2)`.
    PlaneField(Expression, Expression),
}

#[derive(Debug, Clone)]
pub enum SeedStrategy<F> {
    /// Uniform grid over the viewport; each grid node contributes one seed
    /// per root of `G(x, y, .)` in the p-range.
    Grid(usize),
    Explicit(Vec<[F; 3]>),
    /// Grid seeds plus eigendirection seeds flanking every folded saddle.
    GridWithSeparatrices(usize),
}

/// Stroke and glyph styling. Defaults match the test fixtures.
#[derive(Debug, Clone)]
pub struct Style {
    pub curve_stroke: String,
    pub discriminant_stroke: String,
    pub glyph_fill: String,
    pub glyph_radius: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            curve_stroke: "#1f5fa8".into(),
            discriminant_stroke: "#c02020".into(),
            glyph_fill: "#202020".into(),
            glyph_radius: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PortraitSpec<F> {
    pub source: PortraitSource,
    pub viewport: Viewport<F>,
    pub p_range: (F, F),
    pub seeds: SeedStrategy<F>,
    /// Output size in pixels.
    pub size: (u32, u32),
    pub style: Style,
}

#[derive(Debug, Clone, Default)]
pub struct PortraitSummary {
    pub seed_count: usize,
    pub curve_count: usize,
    pub equilibrium_seeds: usize,
    pub events: BTreeMap<String, usize>,
    /// `(kind label, lambda, plane position)` per glyph.
    pub singular_points: Vec<(String, Option<f64>, [f64; 2])>,
}

#[derive(Debug, Clone)]
pub struct RenderedPortrait {
    pub svg: String,
    pub summary: PortraitSummary,
}

#[derive(Debug, Clone)]
pub enum PortraitError {
    Surface(SurfaceError),
}

impl std::fmt::Display for PortraitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PortraitError::Surface(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for PortraitError {}

impl From<SurfaceError> for PortraitError {
    fn from(e: SurfaceError) -> Self {
        PortraitError::Surface(e)
    }
}

struct Mapper<F> {
    viewport: Viewport<F>,
    w: f64,
    h: f64,
}

impl<F: Real> Mapper<F> {
    fn map(&self, x: F, y: F) -> (f64, f64) {
        let vx = self.viewport;
        let tx = (x - vx.x_min).to_f64() / (vx.x_max - vx.x_min).to_f64();
        let ty = (y - vx.y_min).to_f64() / (vx.y_max - vx.y_min).to_f64();
        (tx * self.w, self.h - ty * self.h)
    }

    /// Pixel length of a world-space distance (isotropic approximation).
    fn pixels_per_unit(&self) -> f64 {
        let vx = self.viewport;
        (self.w / (vx.x_max - vx.x_min).to_f64()).min(self.h / (vx.y_max - vx.y_min).to_f64())
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn path_data(points: &[(f64, f64)]) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{}{:.2} {:.2}", cmd, x, y);
        if i + 1 < points.len() {
            d.push(' ');
        }
    }
    d
}

struct SvgDoc {
    body: String,
    w: u32,
    h: u32,
}

impl SvgDoc {
    fn new(w: u32, h: u32) -> Self {
        SvgDoc {
            body: String::new(),
            w,
            h,
        }
    }

    fn path(&mut self, points: &[(f64, f64)], stroke: &str, dashed: bool, class: &str) {
        if points.len() < 2 {
            return;
        }
        let dash = if dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            "  <path class=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"{} d=\"{}\"/>",
            class,
            stroke,
            dash,
            path_data(points)
        );
    }

    fn glyph(&mut self, x: f64, y: f64, r: f64, fill: &str, kind: &str, lambda: Option<f64>) {
        let lambda_attr = match lambda {
            Some(l) => format!(" data-lambda=\"{:.6}\"", l),
            None => " data-lambda=\"\"".to_string(),
        };
        let _ = writeln!(
            self.body,
            "  <circle class=\"singular-point\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"{}\" data-kind=\"{}\"{}/>",
            x,
            y,
            r,
            fill,
            xml_escape(kind),
            lambda_attr
        );
    }

    fn axes<F: Real>(&mut self, mapper: &Mapper<F>) {
        let vx = mapper.viewport;
        if vx.x_min <= F::zero() && vx.x_max >= F::zero() {
            let (px, _) = mapper.map(F::zero(), vx.y_min);
            let _ = writeln!(
                self.body,
                "  <line class=\"axis\" x1=\"{0:.2}\" y1=\"0\" x2=\"{0:.2}\" y2=\"{1}\" stroke=\"#cccccc\" stroke-width=\"1\"/>",
                px, self.h
            );
        }
        if vx.y_min <= F::zero() && vx.y_max >= F::zero() {
            let (_, py) = mapper.map(vx.x_min, F::zero());
            let _ = writeln!(
                self.body,
                "  <line class=\"axis\" x1=\"0\" y1=\"{0:.2}\" x2=\"{1}\" y2=\"{0:.2}\" stroke=\"#cccccc\" stroke-width=\"1\"/>",
                py, self.w
            );
        }
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n  <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.w,
            h = self.h,
            body = self.body
        )
    }
}

/// Tolerances and budgets for portrait assembly.
#[derive(Debug, Clone)]
pub struct PortraitOptions<F> {
    pub classify: ClassifyConfig<F>,
    pub trace: TraceOptions<F>,
    /// Resolution of the p-scan that finds surface sheets above a seed.
    pub p_scan: usize,
    pub equilibria_grid: usize,
    pub newton_tol: F,
    /// Offset (world units) of separatrix seeds from a saddle.
    pub separatrix_offset: F,
    pub max_steps: usize,
}

impl<F: Real> Default for PortraitOptions<F> {
    fn default() -> Self {
        PortraitOptions {
            classify: ClassifyConfig::default(),
            trace: TraceOptions::default(),
            p_scan: 64,
            equilibria_grid: 10,
            newton_tol: F::of(1e-12),
            separatrix_offset: F::of(5e-2),
            max_steps: 20_000,
        }
    }
}

fn surface_seeds<F: Real>(
    g: &Expression,
    spec: &PortraitSpec<F>,
    opts: &PortraitOptions<F>,
    n: usize,
) -> Vec<[F; 3]> {
    let mut seeds = Vec::new();
    let (p_lo, p_hi) = spec.p_range;
    let scan = opts.p_scan.max(8);
    for ix in 0..n {
        for iy in 0..n {
            let fx = F::of((ix as f64 + 0.5) / n as f64);
            let fy = F::of((iy as f64 + 0.5) / n as f64);
            let x = spec.viewport.x_min + (spec.viewport.x_max - spec.viewport.x_min) * fx;
            let y = spec.viewport.y_min + (spec.viewport.y_max - spec.viewport.y_min) * fy;
            // bracket roots of G(x, y, .) in the p-range: one seed per sheet
            let mut prev_p = p_lo;
            let mut prev_g = g.eval(&[x, y, prev_p]);
            for k in 1..=scan {
                let t = F::of(k as f64 / scan as f64);
                let p = p_lo + (p_hi - p_lo) * t;
                let gv = g.eval(&[x, y, p]);
                if prev_g == F::zero() || prev_g * gv < F::zero() {
                    // bisect the bracket
                    let (mut a, mut b, mut fa) = (prev_p, p, prev_g);
                    for _ in 0..80 {
                        let m = (a + b) * F::of(0.5);
                        let fm = g.eval(&[x, y, m]);
                        if fm == F::zero() {
                            a = m;
                            break;
                        }
                        if (fm > F::zero()) == (fa > F::zero()) {
                            a = m;
                            fa = fm;
                        } else {
                            b = m;
                        }
                    }
                    seeds.push([x, y, (a + b) * F::of(0.5)]);
                }
                prev_p = p;
                prev_g = gv;
            }
        }
    }
    seeds
}

fn concatenated_curve<F: Real>(
    g: &Expression,
    seed: [F; 3],
    flow_cfg: &FlowConfig<F>,
) -> Option<PhaseCurve<F>> {
    let back = integrate(g, seed, -1, flow_cfg).ok()?;
    let fwd = integrate(g, seed, 1, flow_cfg).ok()?;
    if back.samples.len() <= 1 && fwd.samples.len() <= 1 {
        return None; // equilibrium seed
    }
    // reverse the backward half and append the forward one
    let total_back = back.arclength();
    let mut samples: Vec<Sample<F>> = back
        .samples
        .iter()
        .rev()
        .map(|s| Sample {
            s: total_back - s.s,
            x: s.x,
            y: s.y,
            p: s.p,
        })
        .collect();
    samples.extend(fwd.samples.iter().skip(1).map(|s| Sample {
        s: total_back + s.s,
        x: s.x,
        y: s.y,
        p: s.p,
    }));
    Some(PhaseCurve {
        samples,
        events: Vec::new(),
        seed,
        dir: 1,
    })
}

/// Renders a phase portrait.
pub fn render<F: Real>(
    spec: &PortraitSpec<F>,
    opts: &PortraitOptions<F>,
) -> Result<RenderedPortrait, PortraitError> {
    match &spec.source {
        PortraitSource::Surface(g) => render_surface(g, spec, opts),
        PortraitSource::PlaneField(f1, f2) => Ok(render_plane_field(f1, f2, spec, opts)),
    }
}

fn render_surface<F: Real>(
    g: &Expression,
    spec: &PortraitSpec<F>,
    opts: &PortraitOptions<F>,
) -> Result<RenderedPortrait, PortraitError> {
    let bounds = Box3::new(
        spec.viewport.x_min,
        spec.viewport.x_max,
        spec.viewport.y_min,
        spec.viewport.y_max,
        spec.p_range.0,
        spec.p_range.1,
    );
    let mut flow_cfg = FlowConfig::new(bounds);
    flow_cfg.max_steps = opts.max_steps;
    let mapper = Mapper {
        viewport: spec.viewport,
        w: spec.size.0 as f64,
        h: spec.size.1 as f64,
    };
    let mut doc = SvgDoc::new(spec.size.0, spec.size.1);
    doc.axes(&mapper);
    let mut summary = PortraitSummary::default();

    // singular points of the characteristic field
    let equilibria = find_folded_equilibria(g, &bounds, opts.equilibria_grid, opts.newton_tol);
    let mut reports: Vec<SingularPointReport<F>> = Vec::new();
    for q in &equilibria {
        if let Ok(report) = classify_implicit_point(g, *q, &opts.classify) {
            reports.push(report);
        }
    }

    // seeds
    let mut seeds: Vec<[F; 3]> = match &spec.seeds {
        SeedStrategy::Grid(n) => surface_seeds(g, spec, opts, *n),
        SeedStrategy::Explicit(list) => list.clone(),
        SeedStrategy::GridWithSeparatrices(n) => surface_seeds(g, spec, opts, *n),
    };
    if let SeedStrategy::GridWithSeparatrices(_) = spec.seeds {
        for report in &reports {
            let is_saddle = matches!(
                report.kind,
                SingularKind::FoldedNonresonanceSaddle | SingularKind::FoldedResonanceSaddle
            );
            if !is_saddle {
                continue;
            }
            let q = [report.location[0], report.location[1], report.location[2]];
            if let Ok(eigen) = folded_eigendirections(g, q) {
                for (dir, _) in eigen.directions {
                    for sign in [F::one(), -F::one()] {
                        let seed = [
                            q[0] + dir[0] * opts.separatrix_offset * sign,
                            q[1] + dir[1] * opts.separatrix_offset * sign,
                            q[2] + dir[2] * opts.separatrix_offset * sign,
                        ];
                        seeds.push(seed);
                    }
                }
            }
        }
    }

    // curves
    summary.seed_count = seeds.len();
    let mut curves: Vec<PhaseCurve<F>> = Vec::new();
    for seed in seeds {
        match concatenated_curve(g, seed, &flow_cfg) {
            Some(curve) => {
                let annotated = detect_events(&curve, g, &flow_cfg);
                for (_, kind) in &annotated.events {
                    *summary.events.entry(kind.label().to_string()).or_insert(0) += 1;
                }
                curves.push(annotated);
            }
            None => summary.equilibrium_seeds += 1,
        }
    }
    summary.curve_count = curves.len();
    for curve in &curves {
        let pts: Vec<(f64, f64)> = curve.samples.iter().map(|s| mapper.map(s.x, s.y)).collect();
        doc.path(&pts, &spec.style.curve_stroke, false, "phase-curve");
    }

    // discriminant: projected criminant components
    let criminant = trace_criminant(g, &bounds, &opts.trace)?;
    for component in &criminant {
        let pts: Vec<(f64, f64)> = component
            .points
            .iter()
            .map(|q| mapper.map(q[0], q[1]))
            .collect();
        doc.path(&pts, &spec.style.discriminant_stroke, true, "discriminant");
    }

    // glyphs
    for report in &reports {
        let (px, py) = mapper.map(report.location[0], report.location[1]);
        let lambda = report.lambda.map(|l| l.to_f64());
        doc.glyph(
            px,
            py,
            spec.style.glyph_radius,
            &spec.style.glyph_fill,
            &report.kind.label(),
            lambda,
        );
        summary.singular_points.push((
            report.kind.label(),
            lambda,
            [report.location[0].to_f64(), report.location[1].to_f64()],
        ));
    }

    Ok(RenderedPortrait {
        svg: doc.finish(),
        summary,
    })
}

fn render_plane_field<F: Real>(
    f1: &Expression,
    f2: &Expression,
    spec: &PortraitSpec<F>,
    opts: &PortraitOptions<F>,
) -> RenderedPortrait {
    let mapper = Mapper {
        viewport: spec.viewport,
        w: spec.size.0 as f64,
        h: spec.size.1 as f64,
    };
    let mut doc = SvgDoc::new(spec.size.0, spec.size.1);
    doc.axes(&mapper);
    let mut summary = PortraitSummary::default();

    // equilibria by Newton from a coarse grid
    let equilibria = crate::classify::find_plane_equilibria(
        f1,
        f2,
        [
            spec.viewport.x_min,
            spec.viewport.x_max,
            spec.viewport.y_min,
            spec.viewport.y_max,
        ],
        opts.equilibria_grid,
        opts.newton_tol,
    );

    // curves by fixed-step RK4 on the normalized field
    let grid = match &spec.seeds {
        SeedStrategy::Grid(n) | SeedStrategy::GridWithSeparatrices(n) => *n,
        SeedStrategy::Explicit(_) => 0,
    };
    let h = {
        let dx = (spec.viewport.x_max - spec.viewport.x_min).to_f64();
        let dy = (spec.viewport.y_max - spec.viewport.y_min).to_f64();
        F::of(dx.min(dy) / 400.0)
    };
    let eq_tol = F::of(1e-8);
    let unit = |q: [F; 2], dir: F| -> Option<[F; 2]> {
        let v = [f1.eval(&q), f2.eval(&q)];
        let norm = v[0].hypot(v[1]);
        if norm < eq_tol {
            return None;
        }
        Some([v[0] * dir / norm, v[1] * dir / norm])
    };
    let mut curves = 0usize;
    let mut seed_count = 0usize;
    for ix in 0..grid {
        for iy in 0..grid {
            let fx = F::of((ix as f64 + 0.5) / grid.max(1) as f64);
            let fy = F::of((iy as f64 + 0.5) / grid.max(1) as f64);
            let seed = [
                spec.viewport.x_min + (spec.viewport.x_max - spec.viewport.x_min) * fx,
                spec.viewport.y_min + (spec.viewport.y_max - spec.viewport.y_min) * fy,
            ];
            seed_count += 1;
            let mut pts: Vec<(f64, f64)> = Vec::new();
            let mut is_equilibrium_seed = true;
            for dir in [-F::one(), F::one()] {
                let mut q = seed;
                let mut half: Vec<(f64, f64)> = Vec::new();
                for _ in 0..2000 {
                    let k1 = match unit(q, dir) {
                        Some(v) => v,
                        None => break,
                    };
                    is_equilibrium_seed = false;
                    let mid1 = [q[0] + k1[0] * h * F::of(0.5), q[1] + k1[1] * h * F::of(0.5)];
                    let k2 = match unit(mid1, dir) {
                        Some(v) => v,
                        None => break,
                    };
                    let mid2 = [q[0] + k2[0] * h * F::of(0.5), q[1] + k2[1] * h * F::of(0.5)];
                    let k3 = match unit(mid2, dir) {
                        Some(v) => v,
                        None => break,
                    };
                    let end = [q[0] + k3[0] * h, q[1] + k3[1] * h];
                    let k4 = match unit(end, dir) {
                        Some(v) => v,
                        None => break,
                    };
                    let sixth = F::of(1.0 / 6.0);
                    q = [
                        q[0] + (k1[0] + F::of(2.0) * (k2[0] + k3[0]) + k4[0]) * h * sixth,
                        q[1] + (k1[1] + F::of(2.0) * (k2[1] + k3[1]) + k4[1]) * h * sixth,
                    ];
                    half.push(mapper.map(q[0], q[1]));
                    if !spec.viewport.contains(q[0], q[1]) {
                        break;
                    }
                }
                if dir < F::zero() {
                    half.reverse();
                    pts = half;
                    pts.push(mapper.map(seed[0], seed[1]));
                } else {
                    pts.extend(half);
                }
            }
            if pts.len() >= 2 && !is_equilibrium_seed {
                doc.path(&pts, &spec.style.curve_stroke, false, "phase-curve");
                curves += 1;
            } else {
                summary.equilibrium_seeds += 1;
            }
        }
    }
    summary.seed_count = seed_count;
    summary.curve_count = curves;

    for q in &equilibria {
        let report = classify_equilibrium(f1, f2, *q, &opts.classify);
        let (px, py) = mapper.map(q[0], q[1]);
        let lambda = report.lambda.map(|l| l.to_f64());
        doc.glyph(
            px,
            py,
            spec.style.glyph_radius,
            &spec.style.glyph_fill,
            &report.kind.label(),
            lambda,
        );
        summary
            .singular_points
            .push((report.kind.label(), lambda, [q[0].to_f64(), q[1].to_f64()]));
    }

    RenderedPortrait {
        svg: doc.finish(),
        summary,
    }
}

/// Renders the solution family of a generating family together with its
/// envelope (the projected locus `F_t = 0`, dashed).
pub fn render_family<F: Real>(
    fam: &GeneratingFamily<F>,
    t_range: (F, F),
    family_count: usize,
    viewport: Viewport<F>,
    size: (u32, u32),
    style: &Style,
    tol_zero: F,
) -> RenderedPortrait {
    let mapper = Mapper {
        viewport,
        w: size.0 as f64,
        h: size.1 as f64,
    };
    let mut doc = SvgDoc::new(size.0, size.1);
    doc.axes(&mapper);
    let mut summary = PortraitSummary::default();
    let samples_per_curve = 160;

    // family members: graphs x -> (x, F(t, x))
    for i in 0..family_count {
        let t = t_range.0
            + (t_range.1 - t_range.0) * F::of(i as f64 / (family_count.max(2) - 1) as f64);
        let mut pts = Vec::with_capacity(samples_per_curve);
        for k in 0..samples_per_curve {
            let x = viewport.x_min
                + (viewport.x_max - viewport.x_min)
                    * F::of(k as f64 / (samples_per_curve - 1) as f64);
            let y = fam.eval(t, x);
            if y.is_finite() {
                pts.push(mapper.map(x, y));
            }
        }
        doc.path(&pts, &style.curve_stroke, false, "solution");
        summary.curve_count += 1;
        summary.seed_count += 1;
    }

    // envelope: roots of F_t(t, .) = 0 for a dense sweep of t
    let ft = fam.expression().derivative(0);
    let sweep = 400;
    let scan = 160;
    let mut branch: Vec<(f64, f64)> = Vec::new();
    let mut branches: Vec<Vec<(f64, f64)>> = Vec::new();
    let jump = {
        let dx = (viewport.x_max - viewport.x_min).to_f64();
        let dy = (viewport.y_max - viewport.y_min).to_f64();
        0.05 * dx.hypot(dy)
    };
    let mut last_world: Option<(F, F)> = None;
    for i in 0..=sweep {
        let t = t_range.0 + (t_range.1 - t_range.0) * F::of(i as f64 / sweep as f64);
        // first root in the x-range (the generic normal forms have one)
        let mut found: Option<F> = None;
        let mut prev_x = viewport.x_min;
        let mut prev_v = ft.eval(&[t, prev_x]);
        for k in 1..=scan {
            let x =
                viewport.x_min + (viewport.x_max - viewport.x_min) * F::of(k as f64 / scan as f64);
            let v = ft.eval(&[t, x]);
            if prev_v == F::zero() || prev_v * v < F::zero() {
                let (mut a, mut b, mut fa) = (prev_x, x, prev_v);
                for _ in 0..60 {
                    let m = (a + b) * F::of(0.5);
                    let fm = ft.eval(&[t, m]);
                    if (fm > F::zero()) == (fa > F::zero()) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                found = Some((a + b) * F::of(0.5));
                break;
            }
            prev_x = x;
            prev_v = v;
        }
        if let Some(x) = found {
            let y = fam.eval(t, x);
            let pt = mapper.map(x, y);
            let broke = match last_world {
                Some((lx, ly)) => {
                    let (px, py) = mapper.map(lx, ly);
                    ((px - pt.0).hypot(py - pt.1)) > jump * mapper.pixels_per_unit().max(1.0)
                }
                None => false,
            };
            if broke && branch.len() >= 2 {
                branches.push(std::mem::take(&mut branch));
            }
            branch.push(pt);
            last_world = Some((x, y));
        } else if branch.len() >= 2 {
            branches.push(std::mem::take(&mut branch));
            last_world = None;
        }
    }
    if branch.len() >= 2 {
        branches.push(branch);
    }
    for b in &branches {
        doc.path(b, &style.discriminant_stroke, true, "envelope");
    }

    // one glyph at the base point, labeled by the family classification
    let report = classify_family(fam, tol_zero);
    let base = fam.base();
    let y0 = fam.eval(base[0], base[1]);
    let (px, py) = mapper.map(base[1], y0);
    let kind = match &report.kind {
        ClairautKind::NonGeneric(r) => format!("NonGeneric({})", r),
        k => k.label(),
    };
    doc.glyph(px, py, style.glyph_radius, &style.glyph_fill, &kind, None);
    summary
        .singular_points
        .push((kind, None, [base[1].to_f64(), y0.to_f64()]));

    RenderedPortrait {
        svg: doc.finish(),
        summary,
    }
}

/// Distance (in pixels) of the closest approach of a curve to a point.
pub fn closest_approach_px<F: Real>(
    curve: &PhaseCurve<F>,
    viewport: Viewport<F>,
    size: (u32, u32),
    target: [F; 3],
) -> f64 {
    let mapper = Mapper {
        viewport,
        w: size.0 as f64,
        h: size.1 as f64,
    };
    let (tx, ty) = mapper.map(target[0], target[1]);
    curve
        .samples
        .iter()
        .map(|s| {
            let (px, py) = mapper.map(s.x, s.y);
            (px - tx).hypot(py - ty)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Quick well-formedness check used by the tests: tags balance, attributes
/// are quoted, and the document has a single root.
pub fn check_svg_well_formed(svg: &str) -> Result<(), String> {
    if !svg.starts_with("<?xml") {
        return Err("missing XML declaration".into());
    }
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        rest = &rest[start..];
        let end = rest.find('>').ok_or("unterminated tag")?;
        let tag = &rest[1..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            let open = stack.pop().ok_or("closing tag without opener")?;
            if open != name.trim() {
                return Err(format!("mismatched tags: <{}> vs </{}>", open, name));
            }
            continue;
        }
        let self_closing = tag.ends_with('/');
        let body = if self_closing {
            &tag[..tag.len() - 1]
        } else {
            tag
        };
        let name = body.split_whitespace().next().ok_or("empty tag")?;
        // attribute quoting: every '=' must be followed by a quoted value
        let mut chars = body.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '=' {
                match chars.next() {
                    Some('"') => {
                        for q in chars.by_ref() {
                            if q == '"' {
                                break;
                            }
                        }
                    }
                    _ => return Err(format!("unquoted attribute in <{}>", name)),
                }
            }
        }
        if !self_closing {
            stack.push(name.to_string());
        }
    }
    if !stack.is_empty() {
        return Err(format!("unclosed tags: {:?}", stack));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarSet;

    fn spec(src: &str) -> PortraitSpec<f64> {
        let g = Expression::parse(src, &VarSet::new(["x", "y", "p"])).unwrap();
        PortraitSpec {
            source: PortraitSource::Surface(g),
            viewport: Viewport::new(-1.0, 1.0, -0.2, 1.0),
            p_range: (-1.0, 1.0),
            seeds: SeedStrategy::Grid(6),
            size: (500, 400),
            style: Style::default(),
        }
    }

    #[test]
    fn folded_node_portrait() {
        let s = spec("p^2 - y + x^2/20");
        let opts = PortraitOptions::default();
        let rendered = render(&s, &opts).unwrap();
        check_svg_well_formed(&rendered.svg).unwrap();
        assert!(rendered.svg.contains("data-kind=\"FoldedNode\""));
        assert!(rendered.svg.contains("stroke-dasharray"));
        assert_eq!(rendered.summary.singular_points.len(), 1);
        assert!(rendered.summary.curve_count > 0);
    }

    #[test]
    fn trivial_field_portrait_has_no_glyphs() {
        let s = spec("p - 1");
        let opts = PortraitOptions::default();
        let rendered = render(&s, &opts).unwrap();
        check_svg_well_formed(&rendered.svg).unwrap();
        assert!(!rendered.svg.contains("data-kind"));
        assert!(rendered.summary.singular_points.is_empty());
    }

    #[test]
    fn determinism() {
        let s = spec("p^2 - y + x^2/20");
        let opts = PortraitOptions::default();
        let a = render(&s, &opts).unwrap();
        let b = render(&s, &opts).unwrap();
        assert_eq!(a.svg, b.svg);
    }

    #[test]
    fn curve_count_contract() {
        let s = spec("p^2 - y + x^2/20");
        let opts = PortraitOptions::default();
        let rendered = render(&s, &opts).unwrap();
        assert_eq!(
            rendered.summary.curve_count + rendered.summary.equilibrium_seeds,
            rendered.summary.seed_count
        );
    }

    #[test]
    fn family_envelope_render() {
        let e = Expression::parse("t^2 + t*x", &VarSet::new(["t", "x"])).unwrap();
        let fam = GeneratingFamily::at_origin(e, 1e-9).unwrap();
        let rendered = render_family(
            &fam,
            (-0.8, 0.8),
            12,
            Viewport::new(-1.0, 1.0, -0.6, 1.0),
            (500, 400),
            &Style::default(),
            1e-9,
        );
        check_svg_well_formed(&rendered.svg).unwrap();
        assert!(rendered.svg.contains("envelope"));
        assert!(rendered.svg.contains("data-kind=\"ClairautFold\""));
        assert_eq!(rendered.summary.curve_count, 12);
    }

    #[test]
    fn plane_field_portrait() {
        let vars = VarSet::new(["x", "y"]);
        let f1 = Expression::parse("x", &vars).unwrap();
        let f2 = Expression::parse("-2*y", &vars).unwrap();
        let s = PortraitSpec {
            source: PortraitSource::PlaneField(f1, f2),
            viewport: Viewport::new(-1.0, 1.0, -1.0, 1.0),
            p_range: (-1.0, 1.0),
            seeds: SeedStrategy::Grid(5),
            size: (400, 400),
            style: Style::default(),
        };
        let rendered = render(&s, &PortraitOptions::<f64>::default()).unwrap();
        check_svg_well_formed(&rendered.svg).unwrap();
        assert!(rendered.svg.contains("data-kind=\"ResonanceSaddle\""));
    }

    #[test]
    fn saddle_separatrices_reach_the_glyph() {
        let s = PortraitSpec {
            seeds: SeedStrategy::GridWithSeparatrices(0),
            ..spec("p^2 - y - x^2")
        };
        let g = match &s.source {
            PortraitSource::Surface(g) => g.clone(),
            _ => unreachable!(),
        };
        // count eigendirection-seeded curves approaching the saddle glyph
        let bounds = Box3::new(-1.0, 1.0, -0.2, 1.0, -1.0, 1.0);
        let flow_cfg = FlowConfig::new(bounds);
        let eigen = folded_eigendirections(&g, [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(eigen.directions.len(), 2);
        let mut approached = 0;
        let mut total = 0;
        for (dir, _mu) in &eigen.directions {
            for sign in [1.0, -1.0] {
                let seed = [
                    dir[0] * 0.05 * sign,
                    dir[1] * 0.05 * sign,
                    dir[2] * 0.05 * sign,
                ];
                // forward flow contracts along the stable eigendirection and
                // expands along the unstable one, so of the four seeds only
                // the two stable branches reach the glyph
                let curve = integrate(&g, seed, 1, &flow_cfg).unwrap();
                let px = closest_approach_px(&curve, s.viewport, s.size, [0.0, 0.0, 0.0]);
                total += 1;
                if px <= 3.0 {
                    approached += 1;
                }
            }
        }
        assert_eq!(total, 4);
        // the two branches of the stable separatrix reach the glyph
        assert_eq!(approached, 2, "separatrix approach count");
    }
}
