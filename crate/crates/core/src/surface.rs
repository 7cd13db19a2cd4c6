//! The equation surface `G(x, y, p) = 0` (or a parametric image in
//! `(x, y, p)`-space), its characteristic field, and the criminant.
//!
//! The characteristic field is the lift of the direction field through the
//! contact form `theta = dy - p dx`:
//!
//! ```text
//! V = (G_p, p G_p, -(G_x + p G_y))
//! ```
//!
//! It is tangent to the surface (`grad G . V = 0` identically) and is
//! annihilated by `theta` (`V_y - p V_x = 0`), so its integral curves
//! project to solution curves of the equation. The criminant is the fold
//! locus `{G = 0, G_p = 0}`; its projection to the `(x, y)`-plane is the
//! discriminant.

use std::fmt;

use crate::expr::{Expression, Node, VarSet};
use crate::jet::{Jet, JetError};
use crate::linalg::{add3, cross3, dot3, norm3, scale3, solve3, sub3};
use crate::num::Real;

/// Axis-aligned working box in `(x, y, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3<F> {
    pub x_min: F,
    pub x_max: F,
    pub y_min: F,
    pub y_max: F,
    pub p_min: F,
    pub p_max: F,
}

impl<F: Real> Box3<F> {
    pub fn new(x_min: F, x_max: F, y_min: F, y_max: F, p_min: F, p_max: F) -> Self {
        assert!(
            x_min < x_max && y_min < y_max && p_min < p_max,
            "degenerate box"
        );
        Box3 {
            x_min,
            x_max,
            y_min,
            y_max,
            p_min,
            p_max,
        }
    }

    pub fn from_f64(b: [f64; 6]) -> Self {
        Self::new(
            F::of(b[0]),
            F::of(b[1]),
            F::of(b[2]),
            F::of(b[3]),
            F::of(b[4]),
            F::of(b[5]),
        )
    }

    pub fn contains(&self, q: [F; 3]) -> bool {
        q[0] >= self.x_min
            && q[0] <= self.x_max
            && q[1] >= self.y_min
            && q[1] <= self.y_max
            && q[2] >= self.p_min
            && q[2] <= self.p_max
    }

    pub fn diameter(&self) -> F {
        let dx = self.x_max - self.x_min;
        let dy = self.y_max - self.y_min;
        let dp = self.p_max - self.p_min;
        (dx * dx + dy * dy + dp * dp).sqrt()
    }
}

/// Implicit or parametric presentation of the equation surface.
#[derive(Debug, Clone)]
pub enum SurfaceForm {
    /// `G(x, y, p) = 0` over the variables `{x, y, p}`.
    Implicit { g: Expression },
    /// `(u, v) -> (x(u,v), y(u,v), p(u,v))` over `{u, v}`.
    Parametric {
        x: Expression,
        y: Expression,
        p: Expression,
    },
}

#[derive(Debug, Clone)]
pub struct EquationSurface<F> {
    pub form: SurfaceForm,
    pub bounds: Box3<F>,
}

impl<F: Real> EquationSurface<F> {
    pub fn implicit(g: Expression, bounds: Box3<F>) -> Self {
        assert_eq!(
            g.vars().len(),
            3,
            "implicit surfaces use variables {{x, y, p}}"
        );
        EquationSurface {
            form: SurfaceForm::Implicit { g },
            bounds,
        }
    }

    pub fn parametric(x: Expression, y: Expression, p: Expression, bounds: Box3<F>) -> Self {
        for e in [&x, &y, &p] {
            assert_eq!(
                e.vars().len(),
                2,
                "parametric surfaces use variables {{u, v}}"
            );
        }
        EquationSurface {
            form: SurfaceForm::Parametric { x, y, p },
            bounds,
        }
    }

    pub fn implicit_expression(&self) -> Option<&Expression> {
        match &self.form {
            SurfaceForm::Implicit { g } => Some(g),
            SurfaceForm::Parametric { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceError {
    /// Newton projection onto the surface did not converge.
    NoConvergence,
    /// The Jacobian of `(G, G_p)` dropped rank at a traced sample.
    SingularJacobian { at: [f64; 3] },
    /// A jet or expression evaluation failed.
    Jet(JetError),
    /// The operation needs the other surface presentation.
    WrongForm,
}

impl fmt::Display for SurfaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceError::NoConvergence => write!(f, "Newton projection did not converge"),
            SurfaceError::SingularJacobian { at } => write!(
                f,
                "criminant Jacobian rank drop near ({}, {}, {})",
                at[0], at[1], at[2]
            ),
            SurfaceError::Jet(e) => write!(f, "{}", e),
            SurfaceError::WrongForm => write!(f, "operation requires the other surface form"),
        }
    }
}

impl std::error::Error for SurfaceError {}

impl From<JetError> for SurfaceError {
    fn from(e: JetError) -> Self {
        SurfaceError::Jet(e)
    }
}

/// The lifted direction field `(G_p, p G_p, -(G_x + p G_y))`, both as
/// expressions (for identities and portraits) and as a fast evaluator.
#[derive(Debug, Clone)]
pub struct CharacteristicField {
    pub vx: Expression,
    pub vy: Expression,
    pub vp: Expression,
    gx: Expression,
    gy: Expression,
    gp: Expression,
}

impl CharacteristicField {
    pub fn eval<F: Real>(&self, q: [F; 3]) -> [F; 3] {
        let gx = self.gx.eval(&q);
        let gy = self.gy.eval(&q);
        let gp = self.gp.eval(&q);
        [gp, q[2] * gp, -(gx + q[2] * gy)]
    }
}

/// Builds the characteristic field of an implicit surface.
pub fn characteristic_field(g: &Expression) -> CharacteristicField {
    assert_eq!(g.vars().len(), 3);
    let gx = g.derivative(0);
    let gy = g.derivative(1);
    let gp = g.derivative(2);
    let vars: VarSet = g.vars().clone();
    let p = Node::Var(2);
    let vx = gp.clone();
    let vy = Expression::from_node(
        Node::Mul(Box::new(p.clone()), Box::new(gp.root().clone())),
        vars.clone(),
    );
    let vp = Expression::from_node(
        Node::Neg(Box::new(Node::Add(
            Box::new(gx.root().clone()),
            Box::new(Node::Mul(Box::new(p), Box::new(gy.root().clone()))),
        ))),
        vars,
    );
    CharacteristicField {
        vx,
        vy,
        vp,
        gx,
        gy,
        gp,
    }
}

/// Cached symbolic gradient of `G`, for the hot Newton loops.
#[derive(Debug, Clone)]
pub struct GradientEvaluator {
    g: Expression,
    gx: Expression,
    gy: Expression,
    gp: Expression,
}

impl GradientEvaluator {
    pub fn new(g: &Expression) -> Self {
        GradientEvaluator {
            g: g.clone(),
            gx: g.derivative(0),
            gy: g.derivative(1),
            gp: g.derivative(2),
        }
    }

    pub fn value_grad<F: Real>(&self, q: [F; 3]) -> (F, [F; 3]) {
        (
            self.g.eval(&q),
            [self.gx.eval(&q), self.gy.eval(&q), self.gp.eval(&q)],
        )
    }

    /// Newton projection of `q` onto `{G = 0}` along the gradient.
    pub fn project<F: Real>(
        &self,
        q: [F; 3],
        tol: F,
        max_iter: usize,
    ) -> Result<[F; 3], SurfaceError> {
        let mut q = q;
        for _ in 0..max_iter {
            let (val, grad) = self.value_grad(q);
            if val.abs() <= tol {
                return Ok(q);
            }
            let n2 = dot3(grad, grad);
            if n2 < F::of(1e-30) || !val.is_finite() {
                return Err(SurfaceError::NoConvergence);
            }
            q = sub3(q, scale3(grad, val / n2));
        }
        let (val, _) = self.value_grad(q);
        if val.abs() <= tol {
            Ok(q)
        } else {
            Err(SurfaceError::NoConvergence)
        }
    }
}

/// `G` and its gradient at a point.
pub fn gradient_at<F: Real>(g: &Expression, q: [F; 3]) -> Result<(F, [F; 3]), JetError> {
    Ok(GradientEvaluator::new(g).value_grad(q))
}

/// Newton projection of `q` onto `{G = 0}` along the gradient.
pub fn on_surface_project<F: Real>(
    g: &Expression,
    q: [F; 3],
    tol: F,
    max_iter: usize,
) -> Result<[F; 3], SurfaceError> {
    GradientEvaluator::new(g).project(q, tol, max_iter)
}

/// One component of the criminant `{G = 0, G_p = 0}`, sampled and
/// arclength-parameterized.
#[derive(Debug, Clone)]
pub struct CriminantCurve<F> {
    pub points: Vec<[F; 3]>,
    pub arclength: Vec<F>,
}

impl<F: Real> CriminantCurve<F> {
    pub fn total_length(&self) -> F {
        self.arclength.last().copied().unwrap_or_else(F::zero)
    }
}

/// Options for the criminant continuation.
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions<F> {
    pub step: F,
    pub min_step: F,
    pub max_step: F,
    pub newton_tol: F,
    pub seed_grid: usize,
    pub max_samples: usize,
}

impl<F: Real> Default for TraceOptions<F> {
    fn default() -> Self {
        TraceOptions {
            step: F::of(2e-2),
            min_step: F::of(1e-4),
            max_step: F::of(1e-1),
            newton_tol: F::of(1e-12),
            seed_grid: 24,
            max_samples: 4000,
        }
    }
}

struct CriminantSystem {
    g: GradientEvaluator,
    gp: GradientEvaluator,
}

impl CriminantSystem {
    fn new(g: &Expression) -> Self {
        CriminantSystem {
            g: GradientEvaluator::new(g),
            gp: GradientEvaluator::new(&g.derivative(2)),
        }
    }

    fn residual<F: Real>(&self, q: [F; 3]) -> (F, F) {
        (self.g.g.eval(&q), self.gp.g.eval(&q))
    }

    fn jacobian<F: Real>(&self, q: [F; 3]) -> Result<([F; 3], [F; 3]), JetError> {
        let (_, grad_g) = self.g.value_grad(q);
        let (_, grad_gp) = self.gp.value_grad(q);
        Ok((grad_g, grad_gp))
    }

    /// Minimum-norm Gauss-Newton step toward `{G = 0, G_p = 0}`.
    fn gauss_newton<F: Real>(&self, mut q: [F; 3], tol: F, iters: usize) -> Option<[F; 3]> {
        let start = q;
        for _ in 0..iters {
            let (r1, r2) = self.residual(q);
            if r1.abs() + r2.abs() <= tol {
                return Some(q);
            }
            let (j1, j2) = self.jacobian(q).ok()?;
            // Solve J J^T y = -r (2x2), step = J^T y.
            let a = dot3(j1, j1);
            let b = dot3(j1, j2);
            let d = dot3(j2, j2);
            let det = a * d - b * b;
            if det.abs() < F::of(1e-24) {
                return None;
            }
            let y1 = (-r1 * d + r2 * b) / det;
            let y2 = (-r2 * a + r1 * b) / det;
            q = add3(q, add3(scale3(j1, y1), scale3(j2, y2)));
            if !q.iter().all(|c| c.is_finite()) || norm3(sub3(q, start)) > F::of(1e3) {
                return None;
            }
        }
        let (r1, r2) = self.residual(q);
        if r1.abs() + r2.abs() <= tol {
            Some(q)
        } else {
            None
        }
    }

    /// Newton correction in the plane normal to `tangent`, anchored at `q`.
    fn corrector<F: Real>(&self, predicted: [F; 3], tangent: [F; 3], tol: F) -> Option<[F; 3]> {
        let mut q = predicted;
        for _ in 0..30 {
            let (r1, r2) = self.residual(q);
            let r3 = dot3(tangent, sub3(q, predicted));
            if r1.abs() + r2.abs() <= tol && r3.abs() <= tol {
                return Some(q);
            }
            let (j1, j2) = self.jacobian(q).ok()?;
            let step = solve3([j1, j2, tangent], [-r1, -r2, -r3])?;
            q = add3(q, step);
        }
        None
    }

    fn tangent<F: Real>(&self, q: [F; 3]) -> Result<Option<[F; 3]>, JetError> {
        let (j1, j2) = self.jacobian(q)?;
        let t = cross3(j1, j2);
        let n = norm3(t);
        let scale = (norm3(j1) * norm3(j2)).max(F::of(1e-30));
        if n <= F::of(1e-10) * scale {
            return Ok(None); // rank drop
        }
        Ok(Some(scale3(t, n.recip())))
    }
}

/// Traces the criminant `{G = 0, G_p = 0}` inside `bounds` by secant
/// prediction and tangent-constrained Newton correction, seeded from a grid
/// scan. Rank drops of the `(G, G_p)` Jacobian terminate the affected
/// branch at the reported point and tracing restarts from remaining seeds.
pub fn trace_criminant<F: Real>(
    g: &Expression,
    bounds: &Box3<F>,
    opts: &TraceOptions<F>,
) -> Result<Vec<CriminantCurve<F>>, SurfaceError> {
    let sys = CriminantSystem::new(g);
    let n = opts.seed_grid.max(4);
    let mut seeds: Vec<[F; 3]> = Vec::new();
    let lerp =
        |a: F, b: F, i: usize| -> F { a + (b - a) * F::of(i as f64) / F::of((n - 1) as f64) };
    for ix in 0..n {
        for iy in 0..n {
            for ip in 0..n {
                let q0 = [
                    lerp(bounds.x_min, bounds.x_max, ix),
                    lerp(bounds.y_min, bounds.y_max, iy),
                    lerp(bounds.p_min, bounds.p_max, ip),
                ];
                if let Some(q) = sys.gauss_newton(q0, opts.newton_tol, 40) {
                    if bounds.contains(q) {
                        seeds.push(q);
                    }
                }
            }
        }
    }

    let mut curves: Vec<CriminantCurve<F>> = Vec::new();
    // Converged seeds sit on their component to Newton accuracy, so the
    // distance to the traced polyline separates "already covered" from
    // "new component" cleanly: chord sag is O(step^2) while distinct
    // components are apart by the geometry of the equation.
    let coarse = opts.max_step + opts.step;
    let near = move |curves: &Vec<CriminantCurve<F>>, q: [F; 3], r: F| -> bool {
        curves.iter().any(|c| {
            if c.points.len() == 1 {
                return norm3(sub3(c.points[0], q)) < r;
            }
            c.points.windows(2).any(|w| {
                // segments with both endpoints far away cannot come close
                if norm3(sub3(w[0], q)) > coarse && norm3(sub3(w[1], q)) > coarse {
                    return false;
                }
                let seg = sub3(w[1], w[0]);
                let len2 = dot3(seg, seg);
                let t = if len2 > F::zero() {
                    (dot3(sub3(q, w[0]), seg) / len2)
                        .max(F::zero())
                        .min(F::one())
                } else {
                    F::zero()
                };
                norm3(sub3(q, add3(w[0], scale3(seg, t)))) < r
            })
        })
    };
    let merge_radius = opts.step * F::of(0.5);

    for seed in seeds {
        if near(&curves, seed, merge_radius) {
            continue;
        }
        let t0 = match sys.tangent(seed)? {
            Some(t) => t,
            None => {
                // isolated rank-drop seed: keep it as a degenerate component
                curves.push(CriminantCurve {
                    points: vec![seed],
                    arclength: vec![F::zero()],
                });
                continue;
            }
        };
        let fwd = trace_branch(&sys, seed, t0, bounds, opts);
        let bwd = trace_branch(&sys, seed, scale3(t0, -F::one()), bounds, opts);
        // both branches start at the seed; reverse one and drop the
        // duplicate so the seed sits once in the middle
        let mut points: Vec<[F; 3]> = bwd.into_iter().rev().collect();
        points.extend(fwd.into_iter().skip(1));
        if points.is_empty() {
            continue;
        }
        let mut arclength = Vec::with_capacity(points.len());
        let mut s = F::zero();
        arclength.push(s);
        for w in points.windows(2) {
            s = s + norm3(sub3(w[1], w[0]));
            arclength.push(s);
        }
        curves.push(CriminantCurve { points, arclength });
    }
    Ok(curves)
}

fn trace_branch<F: Real>(
    sys: &CriminantSystem,
    seed: [F; 3],
    dir: [F; 3],
    bounds: &Box3<F>,
    opts: &TraceOptions<F>,
) -> Vec<[F; 3]> {
    let mut points = vec![seed];
    let mut tangent = dir;
    let mut h = opts.step;
    let mut q = seed;
    while points.len() < opts.max_samples {
        let predicted = add3(q, scale3(tangent, h));
        let corrected = match sys.corrector(predicted, tangent, opts.newton_tol) {
            Some(c) => c,
            None => {
                if h > opts.min_step {
                    h = (h * F::of(0.5)).max(opts.min_step);
                    continue;
                }
                break;
            }
        };
        if !bounds.contains(corrected) {
            // clip the branch to the box: bisect the last step along the
            // curve so the component ends on the boundary, leaving no gap
            // for later seeds to claim
            let mut inside = q;
            let mut outside = corrected;
            for _ in 0..40 {
                let mid = scale3(add3(inside, outside), F::of(0.5));
                match sys.corrector(mid, tangent, opts.newton_tol) {
                    Some(refined) => {
                        if bounds.contains(refined) {
                            inside = refined;
                        } else {
                            outside = refined;
                        }
                    }
                    None => break,
                }
                if norm3(sub3(outside, inside)) < opts.newton_tol {
                    break;
                }
            }
            if norm3(sub3(inside, q)) > F::of(1e-12) {
                points.push(inside);
            }
            break;
        }
        // closed-loop guard
        if points.len() > 8 && norm3(sub3(corrected, seed)) < h * F::of(0.5) {
            points.push(corrected);
            break;
        }
        let new_tangent = match sys.tangent(corrected) {
            Ok(Some(mut t)) => {
                if dot3(t, tangent) < F::zero() {
                    t = scale3(t, -F::one());
                }
                t
            }
            // rank drop: report by stopping this branch at the sample
            _ => break,
        };
        let turn = F::one() - dot3(new_tangent, tangent);
        points.push(corrected);
        q = corrected;
        tangent = new_tangent;
        h = if turn > F::of(2e-2) {
            (h * F::of(0.5)).max(opts.min_step)
        } else {
            (h * F::of(1.3)).min(opts.max_step)
        };
    }
    points
}

/// Resamples a criminant component at `count` arclength-uniform points,
/// Newton-refining each to the stated tolerance.
pub fn resample_criminant<F: Real>(
    g: &Expression,
    curve: &CriminantCurve<F>,
    count: usize,
    newton_tol: F,
) -> Vec<[F; 3]> {
    let sys = CriminantSystem::new(g);
    if curve.points.len() == 1 {
        return curve.points.clone();
    }
    let total = curve.total_length();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let target = total * F::of(i as f64) / F::of((count - 1).max(1) as f64);
        // locate the bracketing segment
        let mut k = 0;
        while k + 1 < curve.arclength.len() && curve.arclength[k + 1] < target {
            k += 1;
        }
        let q = if k + 1 < curve.points.len() {
            let s0 = curve.arclength[k];
            let s1 = curve.arclength[k + 1];
            let t = if s1 > s0 {
                (target - s0) / (s1 - s0)
            } else {
                F::zero()
            };
            let a = curve.points[k];
            let b = curve.points[k + 1];
            add3(a, scale3(sub3(b, a), t))
        } else {
            *curve.points.last().unwrap()
        };
        if let Some(refined) = sys.gauss_newton(q, newton_tol, 40) {
            out.push(refined);
        }
    }
    out
}

/// Gauss-Newton refinement of a point onto the criminant `{G = 0, G_p = 0}`.
pub fn refine_to_criminant<F: Real>(g: &Expression, q: [F; 3], tol: F) -> Option<[F; 3]> {
    CriminantSystem::new(g).gauss_newton(q, tol, 60)
}

/// Jets of a parametric presentation at the origin of the parameter plane,
/// used as input to the umbrella analysis.
pub fn parametric_pullback<F: Real>(
    surface: &EquationSurface<F>,
    order: usize,
) -> Result<[Jet<F>; 3], SurfaceError> {
    match &surface.form {
        SurfaceForm::Parametric { x, y, p } => {
            let origin = [F::zero(), F::zero()];
            Ok([
                Jet::of_expression(x, &origin, order)?,
                Jet::of_expression(y, &origin, order)?,
                Jet::of_expression(p, &origin, order)?,
            ])
        }
        SurfaceForm::Implicit { .. } => Err(SurfaceError::WrongForm),
    }
}
