//! Whitney-umbrella analysis for parametric equations in the chart
//! `(u, v) -> (x, y, p) = (v^2, u, h(u, v))`.
//!
//! The image of this chart has a cross-cap at the origin exactly when
//! `h_v(0,0) = 0` and `h_uv(0,0) != 0`. The self-intersection ("handle")
//! of the image is the curve `u = v^2 X(v^2)` cut out by the odd part of
//! `h`. The analysis normalizes the chart in stages:
//!
//! 1. optional straightening so that `h` vanishes on `{v = 0}` and on the
//!    handle (a jet-level first-integral coordinate change);
//! 2. a rescaling `v -> v sqrt(X(v^2))`, `x -> x X(x)` placing the handle
//!    at `u = v^2`;
//! 3. the Hadamard factorization `h = v (u - v^2) H(u, v)`;
//! 4. the lift `du/dv = 2 v^2 (u - v^2) H` and its formal first integral
//!    `I = u + v^3 a(u) + v^5 b(u) + v^7 c(u, v^2)` after symmetrizing the
//!    `u`-coordinate with respect to the deck involution `v -> -v`.
//!
//! The numbers `a(0), a'(0), b(0)` are the reported invariants; the
//! nondegeneracy `a(0) = 0 != a'(0) b(0)` certifies the Whitney-umbrella
//! normal form `(dy/dx)^2 = x (y - x)^2`.

use std::collections::BTreeMap;
use std::fmt;

use crate::classify::SingularKind;
use crate::expr::Expression;
use crate::jet::{truncated_ode_integral, Jet, JetError};
use crate::num::Real;

/// Slope function `h` of the umbrella chart, as a jet at the origin.
#[derive(Debug, Clone)]
pub struct UmbrellaInput<F> {
    h: Jet<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum UmbrellaError {
    /// `h(0,0)` is not zero: the chart is not centered.
    NotCentered {
        value: f64,
    },
    /// The detection test failed (reason included).
    NotAnUmbrella(String),
    /// The handle solve degenerated or `X(0) = 0`.
    NoHandle,
    /// `H(0,0)` vanished in the Hadamard factorization.
    DegenerateH,
    Jet(JetError),
}

impl fmt::Display for UmbrellaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UmbrellaError::NotCentered { value } => {
                write!(f, "chart not centered: h(0,0) = {:.3e}", value)
            }
            UmbrellaError::NotAnUmbrella(reason) => write!(f, "no umbrella: {}", reason),
            UmbrellaError::NoHandle => write!(f, "handle curve degenerate"),
            UmbrellaError::DegenerateH => write!(f, "H(0,0) vanishes after factorization"),
            UmbrellaError::Jet(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for UmbrellaError {}

impl From<JetError> for UmbrellaError {
    fn from(e: JetError) -> Self {
        UmbrellaError::Jet(e)
    }
}

impl<F: Real> UmbrellaInput<F> {
    /// Builds the input from an expression for `h` over `{u, v}`.
    pub fn new(h: &Expression, order: usize, tol: F) -> Result<Self, UmbrellaError> {
        assert!(order >= 7, "umbrella analysis needs jets of order >= 7");
        let origin = [F::zero(), F::zero()];
        let jet = Jet::of_expression(h, &origin, order)?;
        Self::from_jet(jet, tol)
    }

    /// Builds the input from a precomputed jet (e.g. a parametric pullback).
    pub fn from_jet(h: Jet<F>, tol: F) -> Result<Self, UmbrellaError> {
        assert_eq!(h.nvars(), 2);
        if h.value().abs() > tol {
            return Err(UmbrellaError::NotCentered {
                value: h.value().to_f64(),
            });
        }
        let mut h = h;
        h.set_coeff([0, 0, 0], F::zero());
        Ok(UmbrellaInput { h })
    }

    pub fn jet(&self) -> &Jet<F> {
        &self.h
    }
}

/// Outcome of the cross-cap test.
#[derive(Debug, Clone, Copy)]
pub struct UmbrellaDetection<F> {
    pub verdict: bool,
    /// `h_v(0,0)`: must vanish (rank drop of the chart).
    pub h_v: F,
    /// `h_uv(0,0)`: must not vanish (cross-cap nondegeneracy).
    pub h_uv: F,
}

pub fn detect_umbrella<F: Real>(inp: &UmbrellaInput<F>, tol: F) -> UmbrellaDetection<F> {
    let h_v = inp.h.coeff([0, 1, 0]);
    let h_uv = inp.h.coeff([1, 1, 0]);
    UmbrellaDetection {
        verdict: h_v.abs() <= tol && h_uv.abs() > tol,
        h_v,
        h_uv,
    }
}

/// The self-intersection curve `u = v^2 X(v^2)` of the chart image.
#[derive(Debug, Clone)]
pub struct HandleCurve<F> {
    /// `X` as a univariate jet in `w = v^2`.
    pub x_jet: Jet<F>,
    /// `g(w) = w X(w)`, the solved handle graph.
    pub g_jet: Jet<F>,
}

impl<F: Real> HandleCurve<F> {
    pub fn x0(&self) -> F {
        self.x_jet.value()
    }
}

/// Odd-in-`v` part of a `(u, v)` jet.
fn odd_part<F: Real>(h: &Jet<F>) -> Jet<F> {
    let mut out = Jet::zero(2, h.order(), h.point());
    for e in crate::jet::multi_indices(2, h.order()) {
        if e[1] % 2 == 1 {
            out.set_coeff(e, h.coeff(e));
        }
    }
    out
}

/// Reads a `(u, v)` jet that is even in `v` as a jet in `(u, w)`, `w = v^2`.
fn even_v_to_w<F: Real>(j: &Jet<F>, order_w: usize) -> Jet<F> {
    let origin = [F::zero(), F::zero()];
    let mut out = Jet::zero(2, order_w, &origin);
    for e in crate::jet::multi_indices(2, order_w) {
        out.set_coeff(e, j.coeff([e[0], 2 * e[1], 0]));
    }
    out
}

/// Lifts a univariate jet into the given slot of a bivariate jet.
fn lift_to_bivariate<F: Real>(j: &Jet<F>, var: usize, order: usize) -> Jet<F> {
    let origin = [F::zero(), F::zero()];
    let mut out = Jet::zero(2, order, &origin);
    for d in 0..=j.order().min(order) {
        let mut e = [0usize; 3];
        e[var] = d;
        out.set_coeff(e, j.coeff([d, 0, 0]));
    }
    out
}

/// Substitutes `w = v^2` into a univariate jet in `w`, producing a
/// univariate jet in `v` of the requested order.
fn univariate_w_to_v2<F: Real>(j: &Jet<F>, order_v: usize) -> Jet<F> {
    let origin = [F::zero()];
    let mut out = Jet::zero(1, order_v, &origin);
    for d in 0..=j.order() {
        if 2 * d <= order_v {
            out.set_coeff([2 * d, 0, 0], j.coeff([d, 0, 0]));
        }
    }
    out
}

/// Solves the handle equation from the odd part of `h` by a formal
/// implicit-function iteration. Fails when the `u`-coefficient of the odd
/// part vanishes at the origin (no transversal handle).
pub fn handle_curve<F: Real>(inp: &UmbrellaInput<F>) -> Result<HandleCurve<F>, UmbrellaError> {
    handle_of_jet(&inp.h)
}

fn handle_of_jet<F: Real>(h: &Jet<F>) -> Result<HandleCurve<F>, UmbrellaError> {
    let odd = odd_part(h);
    // odd = v * phi(u, v^2): divide by v exactly, then substitute w = v^2.
    let phi = odd
        .hadamard_factor(1, F::of(1e-300))
        .map_err(UmbrellaError::Jet)?;
    let order_w = phi.order() / 2;
    let psi = even_v_to_w(&phi, order_w);
    if psi.coeff([1, 0, 0]).abs() < F::of(1e-12) {
        return Err(UmbrellaError::NoHandle);
    }
    let g = psi.solve_implicit_var0().map_err(UmbrellaError::Jet)?;
    // g(0) = 0 up to roundoff; X = g / w.
    let mut g = g;
    g.set_coeff([0, 0, 0], F::zero());
    let x = g
        .hadamard_factor(0, F::of(1e-9))
        .map_err(UmbrellaError::Jet)?;
    Ok(HandleCurve { x_jet: x, g_jet: g })
}

/// Full reduction certificate.
#[derive(Debug, Clone)]
pub struct UmbrellaCertificate<F> {
    pub detected: bool,
    /// `h_v(0,0)` and `h_uv(0,0)` from the detection step.
    pub detection: (F, F),
    /// The chart was reflected (`u -> -u`, `p -> -p`) to make `X(0) > 0`.
    pub chart_flipped: bool,
    /// A straightening coordinate change was applied first.
    pub straightened: bool,
    /// A handle-normalizing rescale was applied.
    pub rescaled: bool,
    /// `X(w)` of the original (possibly flipped) chart.
    pub handle: Jet<F>,
    /// `H(u, v)` with `h = v (u - v^2) H` in normalized coordinates.
    pub h_factor: Jet<F>,
    /// First integral of `du/dv = 2 v^2 (u - v^2) H` in normalized
    /// coordinates, before the symmetrizing change of `u`.
    pub first_integral: Jet<F>,
    /// The same integral after symmetrization: odd powers of `v` only.
    pub symmetrized_integral: Jet<F>,
    /// `a(0)`, `a'(0)`, `b(0)` of the symmetrized integral.
    pub a0: F,
    pub a0_prime: F,
    pub b0: F,
    /// `a(0) = 0` and `a'(0) b(0) != 0` at tolerance.
    pub nondegenerate: bool,
    pub kind: SingularKind,
    /// Residuals of the normalization contracts (axis, handle, ...).
    pub residuals: BTreeMap<String, F>,
}

/// Applies the reflection `(u, p) -> (-u, -p)` to the slope jet. The
/// deck involution `v -> -v` leaves the handle equation unchanged, so the
/// sign of `X(0)` is flipped by reflecting the `y`-axis instead.
fn flip_chart<F: Real>(h: &Jet<F>) -> Result<Jet<F>, JetError> {
    let origin = [F::zero(), F::zero()];
    let u = Jet::variable(2, h.order(), &origin, 0);
    let v = Jet::variable(2, h.order(), &origin, 1);
    Ok(h.compose(&[&u.neg(), &v])?.neg())
}

/// Rescales `v -> v sqrt(X(v^2))`, `x -> x X(x)` so the handle becomes
/// `u = v^2`, and divides the slope by `dx~/dx`.
fn rescale_to_unit_handle<F: Real>(h: &Jet<F>, x_jet: &Jet<F>) -> Result<Jet<F>, UmbrellaError> {
    let order = h.order();
    let origin1 = [F::zero()];
    let sqrt_x = x_jet.sqrt().map_err(|_| UmbrellaError::NoHandle)?;
    // forward map f(v) = v sqrt(X(v^2)) and its compositional inverse
    let v1 = Jet::variable(1, order, &origin1, 0);
    let s_of_v2 = univariate_w_to_v2(&sqrt_x, order);
    let f = v1.mul(&s_of_v2);
    let g_inv = f.invert_univariate().map_err(UmbrellaError::Jet)?;
    // W(x) = X(x) + x X'(x) evaluated at x = g_inv(v)^2
    let w_jet =
        x_jet.add(&Jet::variable(1, x_jet.order(), &origin1, 0).mul(&x_jet.partial_keep_order(0)));
    let g2 = g_inv.mul(&g_inv);
    let w_of_v = w_jet.compose(&[&g2]).map_err(UmbrellaError::Jet)?;
    // h~(u, v) = h(u, g_inv(v)) / W
    let origin2 = [F::zero(), F::zero()];
    let u2 = Jet::variable(2, order, &origin2, 0);
    let g_biv = lift_to_bivariate(&g_inv, 1, order);
    let w_biv = lift_to_bivariate(&w_of_v, 1, order);
    let substituted = h.compose(&[&u2, &g_biv]).map_err(UmbrellaError::Jet)?;
    substituted.div(&w_biv).map_err(UmbrellaError::Jet)
}

/// Evaluates `h` along the handle graph `u = g(v^2)`: the result is a
/// univariate jet in `v` that must vanish when `h` is already straightened.
fn restrict_to_handle<F: Real>(h: &Jet<F>, g_jet: &Jet<F>) -> Result<Jet<F>, JetError> {
    let order = h.order();
    let origin1 = [F::zero()];
    let u_of_v = univariate_w_to_v2(g_jet, order);
    let v1 = Jet::variable(1, order, &origin1, 0);
    h.compose(&[&u_of_v, &v1])
}

fn axis_residual<F: Real>(h: &Jet<F>) -> F {
    let mut worst = F::zero();
    for i in 0..=h.order() {
        let c = h.coeff([i, 0, 0]).abs();
        if c > worst {
            worst = c;
        }
    }
    worst
}

/// The straightening step: extends the boundary fields on `{v = 0}` and on
/// the handle (assumed already at `u = v^2`) to a plane field, straightens
/// its first integral, and rewrites `h` in the new coordinates. Afterwards
/// `h` vanishes on the axis and on the (new) handle.
fn straighten<F: Real>(h: &Jet<F>) -> Result<Jet<F>, UmbrellaError> {
    let order = h.order();
    let origin1 = [F::zero()];
    let origin2 = [F::zero(), F::zero()];

    // boundary field on the y-axis: f1(y) = h(y, 0)
    let mut f1 = Jet::zero(1, order, &origin1);
    for i in 0..=order {
        f1.set_coeff([i, 0, 0], h.coeff([i, 0, 0]));
    }
    // boundary field on the handle: f2(y) with y = v^2, from h(v^2, v)
    let v1 = Jet::variable(1, order, &origin1, 0);
    let v2 = v1.mul(&v1);
    let eta = h.compose(&[&v2, &v1]).map_err(UmbrellaError::Jet)?;
    let mut f2 = Jet::zero(1, order, &origin1);
    for j in 0..=(order / 2) {
        f2.set_coeff([j, 0, 0], eta.coeff([2 * j, 0, 0]));
    }
    // Hadamard: f_i(y) = y f~_i(y) (both vanish at 0 since h(0,0) = 0)
    let f1t = f1
        .hadamard_factor(0, F::of(1e-9))
        .map_err(UmbrellaError::Jet)?
        .with_order(order);
    let f2t = f2
        .hadamard_factor(0, F::of(1e-9))
        .map_err(UmbrellaError::Jet)?
        .with_order(order);

    // extended plane field dy/dx = (y - x) f~1(y) + x f~2(y), written as a
    // jet in (y, x) for the first-integral solve
    let yj = Jet::variable(2, order, &origin2, 0);
    let xj = Jet::variable(2, order, &origin2, 1);
    let f1b = lift_to_bivariate(&f1t, 0, order);
    let f2b = lift_to_bivariate(&f2t, 0, order);
    let rhs = yj.sub(&xj).mul(&f1b).add(&xj.mul(&f2b));
    let integral = truncated_ode_integral(&rhs, order).map_err(UmbrellaError::Jet)?;

    // new coordinates: y~ = I(y, x) on the plane, u~ = I(u, v^2) upstairs
    let u2 = Jet::variable(2, order, &origin2, 0);
    let v2j = {
        let vv = Jet::variable(2, order, &origin2, 1);
        vv.mul(&vv)
    };
    let u_tilde = integral.compose(&[&u2, &v2j]).map_err(UmbrellaError::Jet)?;

    // slope in new coordinates: p~ = I_x + p I_y at (y, x) = (u, v^2)
    let i_y = integral.partial_keep_order(0);
    let i_x = integral.partial_keep_order(1);
    let ix_uv = i_x.compose(&[&u2, &v2j]).map_err(UmbrellaError::Jet)?;
    let iy_uv = i_y.compose(&[&u2, &v2j]).map_err(UmbrellaError::Jet)?;
    let h_mid = ix_uv.add(&h.mul(&iy_uv));

    // express in (u~, v): invert u~ = U(u, v) in its first slot
    let u_inverse = u_tilde.invert_in_var0().map_err(UmbrellaError::Jet)?;
    let vj = Jet::variable(2, order, &origin2, 1);
    let h_new = h_mid
        .compose(&[&u_inverse, &vj])
        .map_err(UmbrellaError::Jet)?;
    Ok(h_new)
}

/// Runs the whole reduction pipeline and extracts the invariants.
pub fn reduce_and_integrate<F: Real>(
    inp: &UmbrellaInput<F>,
    tol: F,
) -> Result<UmbrellaCertificate<F>, UmbrellaError> {
    let detection = detect_umbrella(inp, tol);
    if !detection.verdict {
        let reason = if detection.h_v.abs() > tol {
            format!("h_v(0,0) = {} (chart is an immersion)", detection.h_v)
        } else {
            format!("h_uv(0,0) = {} (cross-cap degenerate)", detection.h_uv)
        };
        return Err(UmbrellaError::NotAnUmbrella(reason));
    }

    let mut residuals: BTreeMap<String, F> = BTreeMap::new();
    let mut h = inp.h.clone();
    let order = h.order();

    let mut handle = handle_of_jet(&h)?;
    if handle.x0().abs() <= tol {
        return Err(UmbrellaError::NoHandle);
    }
    let mut chart_flipped = false;
    if handle.x0() < F::zero() {
        h = flip_chart(&h)?;
        handle = handle_of_jet(&h)?;
        chart_flipped = true;
    }
    let reported_handle = handle.x_jet.clone();

    let unit_handle = |x_jet: &Jet<F>| -> bool {
        let mut diff = x_jet.clone();
        diff.set_coeff([0, 0, 0], diff.value() - F::one());
        diff.max_abs() <= tol
    };

    let needs_straightening = {
        let on_axis = axis_residual(&h);
        let on_handle = restrict_to_handle(&h, &handle.g_jet)?.max_abs();
        on_axis > tol || on_handle > tol
    };
    let mut straightened = false;
    let mut rescaled = false;
    if needs_straightening {
        // the extension formula interpolates between the axis and the
        // diagonal, so the handle is normalized first
        if !unit_handle(&handle.x_jet) {
            h = rescale_to_unit_handle(&h, &handle.x_jet)?;
            rescaled = true;
        }
        h = straighten(&h)?;
        handle = handle_of_jet(&h)?;
        straightened = true;
    }
    if !unit_handle(&handle.x_jet) {
        h = rescale_to_unit_handle(&h, &handle.x_jet)?;
        handle = handle_of_jet(&h)?;
        rescaled = true;
    }

    residuals.insert("axis".into(), axis_residual(&h));
    residuals.insert(
        "handle".into(),
        restrict_to_handle(&h, &handle.g_jet)?.max_abs(),
    );
    let handle_unit_residual = {
        let mut diff = handle.x_jet.clone();
        diff.set_coeff([0, 0, 0], diff.value() - F::one());
        diff.max_abs()
    };
    residuals.insert("handle_unit".into(), handle_unit_residual);

    // h = v (u - v^2) H: divide by v, then by (u - v^2) via the shift
    // s = u - v^2.
    let scale = F::one() + h.max_abs();
    let k = h
        .hadamard_factor(1, tol * scale)
        .map_err(|_| UmbrellaError::DegenerateH)?;
    let origin2 = [F::zero(), F::zero()];
    let k_order = k.order();
    let s_var = Jet::variable(2, k_order, &origin2, 0);
    let v_var = Jet::variable(2, k_order, &origin2, 1);
    let v_sq = v_var.mul(&v_var);
    let shifted = k
        .compose(&[&s_var.add(&v_sq), &v_var])
        .map_err(UmbrellaError::Jet)?;
    let h_hat = shifted
        .hadamard_factor(0, tol * scale)
        .map_err(|_| UmbrellaError::DegenerateH)?;
    let f_order = h_hat.order();
    let u_var = Jet::variable(2, f_order, &origin2, 0);
    let v_var = Jet::variable(2, f_order, &origin2, 1);
    let h_factor = h_hat
        .compose(&[&u_var.sub(&v_var.mul(&v_var)), &v_var])
        .map_err(UmbrellaError::Jet)?;
    if h_factor.value().abs() <= tol {
        return Err(UmbrellaError::DegenerateH);
    }

    // lifted equation du/dv = 2 v^2 (u - v^2) H(u, v)
    let u7 = Jet::variable(2, order, &origin2, 0);
    let v7 = Jet::variable(2, order, &origin2, 1);
    let v7sq = v7.mul(&v7);
    let prefactor = v7sq.scale(F::of(2.0)).mul(&u7.sub(&v7sq));
    let rhs = prefactor.mul(&h_factor.with_order(order));
    let first_integral = truncated_ode_integral(&rhs, order).map_err(UmbrellaError::Jet)?;

    // symmetrize the u-coordinate: u~ = (I(u,v) + I(u,-v))/2
    let flipped = first_integral
        .compose(&[&u7, &v7.neg()])
        .map_err(UmbrellaError::Jet)?;
    let even = first_integral.add(&flipped).scale(F::of(0.5));
    let u_back = even.invert_in_var0().map_err(UmbrellaError::Jet)?;
    let symmetrized = first_integral
        .compose(&[&u_back, &v7])
        .map_err(UmbrellaError::Jet)?;

    let mut even_residual = F::zero();
    for e in crate::jet::multi_indices(2, order) {
        if e[1] % 2 == 0 && !(e[1] == 0 && e[0] == 1) {
            let c = symmetrized.coeff(e).abs();
            if c > even_residual {
                even_residual = c;
            }
        }
    }
    residuals.insert("symmetry".into(), even_residual);

    let a0 = symmetrized.coeff([0, 3, 0]);
    let a0_prime = symmetrized.coeff([1, 3, 0]);
    let b0 = symmetrized.coeff([0, 5, 0]);
    let nondegenerate = a0.abs() <= tol && a0_prime.abs() > tol && b0.abs() > tol;
    let kind = if nondegenerate {
        SingularKind::WhitneyUmbrellaPoint
    } else {
        SingularKind::NonGeneric(format!(
            "umbrella reduction degenerate: a(0) = {}, a'(0) = {}, b(0) = {}",
            a0, a0_prime, b0
        ))
    };

    Ok(UmbrellaCertificate {
        detected: true,
        detection: (detection.h_v, detection.h_uv),
        chart_flipped,
        straightened,
        rescaled,
        handle: reported_handle,
        h_factor,
        first_integral,
        symmetrized_integral: symmetrized,
        a0,
        a0_prime,
        b0,
        nondegenerate,
        kind,
        residuals,
    })
}
