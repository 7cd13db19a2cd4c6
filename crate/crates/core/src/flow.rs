//! Numerical integration of the characteristic field on the equation
//! surface.
//!
//! Integration runs in the ambient `(x, y, p)`-space on the
//! arclength-normalized field, with a Newton projection back onto
//! `{G = 0}` after every accepted step (stabilized manifold integration).
//! Orbital equivalence makes the time parameterization irrelevant, so the
//! arclength parameterization loses nothing. Criminant crossings are
//! localized afterwards by bisection on the dense output.

use std::fmt;

use crate::expr::Expression;
use crate::linalg::{add3, norm3, scale3, sub3};
use crate::num::Real;
use crate::surface::{
    characteristic_field, refine_to_criminant, Box3, CharacteristicField, GradientEvaluator,
    SurfaceError,
};

/// Events marking samples of a phase curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The curve crossed `{G_p = 0}`.
    CriminantCrossing,
    /// The characteristic field dropped below the equilibrium tolerance.
    EquilibriumApproach,
    /// The curve left the working box.
    BoxExit,
    /// Step or arclength budget exhausted.
    StepLimit,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::CriminantCrossing => "CriminantCrossing",
            EventKind::EquilibriumApproach => "EquilibriumApproach",
            EventKind::BoxExit => "BoxExit",
            EventKind::StepLimit => "StepLimit",
        }
    }
}

/// One sample of a phase curve: arclength parameter and ambient position.
#[derive(Debug, Clone, Copy)]
pub struct Sample<F> {
    pub s: F,
    pub x: F,
    pub y: F,
    pub p: F,
}

impl<F: Real> Sample<F> {
    pub fn position(&self) -> [F; 3] {
        [self.x, self.y, self.p]
    }
}

/// A trajectory on the surface with its events.
#[derive(Debug, Clone)]
pub struct PhaseCurve<F> {
    pub samples: Vec<Sample<F>>,
    /// `(sample index, event)` pairs, ordered by index.
    pub events: Vec<(usize, EventKind)>,
    pub seed: [F; 3],
    pub dir: i8,
}

impl<F: Real> PhaseCurve<F> {
    pub fn count_events(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|(_, k)| *k == kind).count()
    }

    pub fn arclength(&self) -> F {
        self.samples.last().map_or_else(F::zero, |s| s.s)
    }

    /// CSV export: header `t,x,y,p,event`, one sample per row, event labels
    /// (semicolon-joined when a sample carries several) on their rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,p,event\n");
        for (i, s) in self.samples.iter().enumerate() {
            let labels: Vec<&str> = self
                .events
                .iter()
                .filter(|(j, _)| *j == i)
                .map(|(_, k)| k.label())
                .collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.s,
                s.x,
                s.y,
                s.p,
                labels.join(";")
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowError {
    /// The step left the surface tube and projection failed.
    ProjectionFailure {
        at: [f64; 3],
    },
    Surface(SurfaceError),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::ProjectionFailure { at } => write!(
                f,
                "projection back to the surface failed near ({}, {}, {})",
                at[0], at[1], at[2]
            ),
            FlowError::Surface(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for FlowError {}

impl From<SurfaceError> for FlowError {
    fn from(e: SurfaceError) -> Self {
        FlowError::Surface(e)
    }
}

/// Integration limits and tolerances.
#[derive(Debug, Clone, Copy)]
pub struct FlowConfig<F> {
    pub bounds: Box3<F>,
    pub max_arclength: F,
    pub max_steps: usize,
    pub min_step: F,
    pub max_step: F,
    /// Local error tolerance of the embedded pair.
    pub rk_tol: F,
    pub newton_tol: F,
    /// `|V|` below this is an equilibrium.
    pub equilibrium_tol: F,
}

impl<F: Real> FlowConfig<F> {
    pub fn new(bounds: Box3<F>) -> Self {
        FlowConfig {
            bounds,
            max_arclength: bounds.diameter() * F::of(4.0),
            max_steps: 40_000,
            min_step: F::of(1e-6),
            max_step: F::of(1e-1),
            rk_tol: F::of(1e-10),
            newton_tol: F::of(1e-12),
            equilibrium_tol: F::of(1e-8),
        }
    }
}

struct FieldEval {
    field: CharacteristicField,
}

impl FieldEval {
    fn raw<F: Real>(&self, q: [F; 3]) -> [F; 3] {
        self.field.eval(q)
    }

    /// Unit field times direction; `None` at equilibria.
    fn unit<F: Real>(&self, q: [F; 3], dir: F, eq_tol: F) -> Option<[F; 3]> {
        let v = self.raw(q);
        let n = norm3(v);
        if n < eq_tol {
            return None;
        }
        Some(scale3(v, dir / n))
    }
}

/// Dormand-Prince 5(4) step on the normalized field. Returns the fifth
/// order solution and the embedded error estimate, or `None` when a stage
/// hits an equilibrium.
fn dopri5_step<F: Real>(
    field: &FieldEval,
    q: [F; 3],
    dir: F,
    h: F,
    eq_tol: F,
) -> Option<([F; 3], F)> {
    let f = |q: [F; 3]| field.unit(q, dir, eq_tol);
    let k1 = f(q)?;
    let at = |c: &[(F, [F; 3])]| {
        let mut out = q;
        for (a, k) in c {
            out = add3(out, scale3(*k, *a * h));
        }
        out
    };
    let k2 = f(at(&[(F::of(1.0 / 5.0), k1)]))?;
    let k3 = f(at(&[(F::of(3.0 / 40.0), k1), (F::of(9.0 / 40.0), k2)]))?;
    let k4 = f(at(&[
        (F::of(44.0 / 45.0), k1),
        (F::of(-56.0 / 15.0), k2),
        (F::of(32.0 / 9.0), k3),
    ]))?;
    let k5 = f(at(&[
        (F::of(19372.0 / 6561.0), k1),
        (F::of(-25360.0 / 2187.0), k2),
        (F::of(64448.0 / 6561.0), k3),
        (F::of(-212.0 / 729.0), k4),
    ]))?;
    let k6 = f(at(&[
        (F::of(9017.0 / 3168.0), k1),
        (F::of(-355.0 / 33.0), k2),
        (F::of(46732.0 / 5247.0), k3),
        (F::of(49.0 / 176.0), k4),
        (F::of(-5103.0 / 18656.0), k5),
    ]))?;
    let fifth = at(&[
        (F::of(35.0 / 384.0), k1),
        (F::of(500.0 / 1113.0), k3),
        (F::of(125.0 / 192.0), k4),
        (F::of(-2187.0 / 6784.0), k5),
        (F::of(11.0 / 84.0), k6),
    ]);
    let k7 = f(fifth)?;
    let fourth = at(&[
        (F::of(5179.0 / 57600.0), k1),
        (F::of(7571.0 / 16695.0), k3),
        (F::of(393.0 / 640.0), k4),
        (F::of(-92097.0 / 339200.0), k5),
        (F::of(187.0 / 2100.0), k6),
        (F::of(1.0 / 40.0), k7),
    ]);
    Some((fifth, norm3(sub3(fifth, fourth))))
}

/// Integrates the phase curve through `seed` in direction `dir` (+1/-1).
/// The seed is projected onto the surface first; a seed at an equilibrium
/// yields a zero-length curve marked `EquilibriumApproach`.
pub fn integrate<F: Real>(
    g: &Expression,
    seed: [F; 3],
    dir: i8,
    cfg: &FlowConfig<F>,
) -> Result<PhaseCurve<F>, FlowError> {
    let field = FieldEval {
        field: characteristic_field(g),
    };
    let projector = GradientEvaluator::new(g);
    let seed_on = projector.project(seed, cfg.newton_tol, 25)?;
    let dirf = if dir >= 0 { F::one() } else { -F::one() };
    let mut curve = PhaseCurve {
        samples: vec![Sample {
            s: F::zero(),
            x: seed_on[0],
            y: seed_on[1],
            p: seed_on[2],
        }],
        events: Vec::new(),
        seed: seed_on,
        dir: if dir >= 0 { 1 } else { -1 },
    };
    if norm3(field.raw(seed_on)) < cfg.equilibrium_tol {
        curve.events.push((0, EventKind::EquilibriumApproach));
        return Ok(curve);
    }

    let mut q = seed_on;
    let mut s = F::zero();
    let mut h = cfg.max_step * F::of(0.1);
    let mut steps = 0;
    loop {
        let remaining = cfg.max_arclength - s;
        if steps >= cfg.max_steps || remaining <= cfg.max_arclength * F::of(1e-12) {
            curve
                .events
                .push((curve.samples.len() - 1, EventKind::StepLimit));
            break;
        }
        steps += 1;
        // the final step is clamped so the curve ends at the arclength
        // budget exactly (integration is reversible to tolerance)
        let h_eff = h.min(remaining);
        let (proposal, err) = match dopri5_step(&field, q, dirf, h_eff, cfg.equilibrium_tol) {
            Some(r) => r,
            None => {
                // a stage hit an equilibrium: stop here
                curve
                    .events
                    .push((curve.samples.len() - 1, EventKind::EquilibriumApproach));
                break;
            }
        };
        if err > cfg.rk_tol && h_eff > cfg.min_step {
            let shrink = F::of(0.9) * (cfg.rk_tol / err).powf(F::of(0.2));
            h = (h_eff * shrink.max(F::of(0.2))).max(cfg.min_step);
            continue;
        }
        if err > cfg.rk_tol && norm3(field.raw(q)) < F::of(1e-4) {
            // pinned at the minimum step with a near-vanishing field: the
            // flow direction cannot be resolved, which happens exactly at
            // equilibrium approaches
            curve
                .events
                .push((curve.samples.len() - 1, EventKind::EquilibriumApproach));
            break;
        }
        // accept: project back onto the surface
        let (gval, _) = projector.value_grad(proposal);
        if gval.abs() > F::of(1e-3) || !gval.is_finite() {
            return Err(FlowError::ProjectionFailure {
                at: [
                    proposal[0].to_f64(),
                    proposal[1].to_f64(),
                    proposal[2].to_f64(),
                ],
            });
        }
        let projected = projector
            .project(proposal, cfg.newton_tol, 25)
            .map_err(|_| FlowError::ProjectionFailure {
                at: [
                    proposal[0].to_f64(),
                    proposal[1].to_f64(),
                    proposal[2].to_f64(),
                ],
            })?;
        let ds = norm3(sub3(projected, q));
        s = s + ds;
        q = projected;
        curve.samples.push(Sample {
            s,
            x: q[0],
            y: q[1],
            p: q[2],
        });
        if !cfg.bounds.contains(q) {
            curve
                .events
                .push((curve.samples.len() - 1, EventKind::BoxExit));
            break;
        }
        if norm3(field.raw(q)) < cfg.equilibrium_tol {
            curve
                .events
                .push((curve.samples.len() - 1, EventKind::EquilibriumApproach));
            break;
        }
        // step-size growth on small error
        if err < cfg.rk_tol * F::of(0.1) {
            h = (h * F::of(1.8)).min(cfg.max_step);
        }
    }
    Ok(curve)
}

/// Marks criminant crossings (sign changes of `G_p`, localized by bisection
/// on the dense output and inserted as refined samples) and equilibrium
/// approaches (`|V|` below tolerance).
pub fn detect_events<F: Real>(
    curve: &PhaseCurve<F>,
    g: &Expression,
    cfg: &FlowConfig<F>,
) -> PhaseCurve<F> {
    let gp = g.derivative(2);
    let field = characteristic_field(g);
    let projector = GradientEvaluator::new(g);
    struct Insert<F> {
        after: usize,
        sample: Sample<F>,
    }
    let mut inserts: Vec<Insert<F>> = Vec::new();
    for i in 0..curve.samples.len().saturating_sub(1) {
        let a = curve.samples[i];
        let b = curve.samples[i + 1];
        let fa = gp.eval(&a.position());
        let fb = gp.eval(&b.position());
        if fa == F::zero() || fa * fb >= F::zero() {
            continue;
        }
        // bisect on the chord, projecting each probe to the surface
        let mut lo = F::zero();
        let mut hi = F::one();
        let probe = |t: F| -> Option<([F; 3], F)> {
            let pos = add3(a.position(), scale3(sub3(b.position(), a.position()), t));
            let on = projector.project(pos, cfg.newton_tol, 25).ok()?;
            let v = gp.eval(&on);
            Some((on, v))
        };
        let span = b.s - a.s;
        let mut located = None;
        for _ in 0..60 {
            let mid = (lo + hi) * F::of(0.5);
            match probe(mid) {
                Some((pos, v)) => {
                    if v == F::zero() {
                        located = Some((mid, pos));
                        break;
                    }
                    if (v > F::zero()) == (fa > F::zero()) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    located = Some((mid, pos));
                    if span * (hi - lo) <= F::of(1e-10) {
                        break;
                    }
                }
                None => break,
            }
        }
        if let Some((t, pos)) = located {
            // the crossing lies on the criminant: refine onto it so the
            // reported mark satisfies G = G_p = 0 to Newton accuracy
            let refined = refine_to_criminant(g, pos, cfg.newton_tol).unwrap_or(pos);
            inserts.push(Insert {
                after: i,
                sample: Sample {
                    s: a.s + span * t,
                    x: refined[0],
                    y: refined[1],
                    p: refined[2],
                },
            });
        }
    }

    // rebuild the sample list with insertions, then re-derive events
    let mut samples: Vec<Sample<F>> = Vec::with_capacity(curve.samples.len() + inserts.len());
    let mut events: Vec<(usize, EventKind)> = Vec::new();
    let mut crossing_indices: Vec<usize> = Vec::new();
    for (i, s) in curve.samples.iter().enumerate() {
        samples.push(*s);
        for (j, k) in &curve.events {
            if *j == i {
                events.push((samples.len() - 1, *k));
            }
        }
        for ins in &inserts {
            if ins.after == i {
                samples.push(ins.sample);
                crossing_indices.push(samples.len() - 1);
            }
        }
    }
    for idx in crossing_indices {
        events.push((idx, EventKind::CriminantCrossing));
    }
    // equilibrium marks on the (possibly extended) sample list
    let mut previous_marked = false;
    for (i, s) in samples.iter().enumerate() {
        let v = field.eval(s.position());
        if norm3(v) < cfg.equilibrium_tol {
            if !previous_marked
                && !events
                    .iter()
                    .any(|(j, k)| *j == i && *k == EventKind::EquilibriumApproach)
            {
                events.push((i, EventKind::EquilibriumApproach));
            }
            previous_marked = true;
        } else {
            previous_marked = false;
        }
    }
    events.sort_by_key(|(i, _)| *i);
    PhaseCurve {
        samples,
        events,
        seed: curve.seed,
        dir: curve.dir,
    }
}

/// Largest surface residual over the samples.
pub fn max_surface_residual<F: Real>(curve: &PhaseCurve<F>, g: &Expression) -> F {
    curve
        .samples
        .iter()
        .map(|s| g.eval(&s.position()).abs())
        .fold(F::zero(), |m, r| if r > m { r } else { m })
}

/// Largest tangency defect `|dy - p dx| / ds` over consecutive samples,
/// with `p` taken at the midpoint.
pub fn max_tangency_defect<F: Real>(curve: &PhaseCurve<F>) -> F {
    let mut worst = F::zero();
    for w in curve.samples.windows(2) {
        let ds = w[1].s - w[0].s;
        if ds <= F::zero() {
            continue;
        }
        let dy = w[1].y - w[0].y;
        let dx = w[1].x - w[0].x;
        let pm = (w[0].p + w[1].p) * F::of(0.5);
        let defect = (dy - pm * dx).abs() / ds;
        if defect > worst {
            worst = defect;
        }
    }
    worst
}
