//! Clairaut-type tests for implicit equations and the classification of
//! generating families `F(t, x)`.
//!
//! An implicit equation is of Clairaut type when every fold point of the
//! projection to the plane is contact-singular, i.e. `G_x + p G_y` vanishes
//! along the whole criminant; the classical `y = x p + f(p)` equations are
//! the model case. Three related predicates are provided:
//!
//! - [`is_clairaut_type`]: samples the criminant and checks the contact
//!   residual at every sample;
//! - [`is_reduced`]: checks that `G_p` vanishes to first order only
//!   (no multiple components of the fold locus);
//! - [`dara_condition`]: the stronger ideal-membership test
//!   `G_x + p G_y = A G + B G_p`, decided at jet level by least squares.
//!
//! Generating families `F(t, x)` sweep out an equation via
//! `y = F, p = F_x`; their fold/cusp/cross-cap type is read off low-order
//! derivatives at the base point.

use std::fmt;

use crate::expr::Expression;
use crate::jet::{Jet, JetError};
use crate::linalg::{dot3, least_squares, norm3, scale3, sub3};
use crate::num::Real;
use crate::surface::{
    gradient_at, resample_criminant, trace_criminant, Box3, SurfaceError, TraceOptions,
};

/// Two-variable family `F(t, x)` considered as a germ at a base point.
#[derive(Debug, Clone)]
pub struct GeneratingFamily<F> {
    expr: Expression,
    base: [F; 2],
    jet: Jet<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyError {
    /// `F` must vanish at the base point (families are germs into (R, 0)).
    NotAGerm {
        value: f64,
    },
    Jet(JetError),
}

impl fmt::Display for FamilyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyError::NotAGerm { value } => {
                write!(
                    f,
                    "family does not vanish at the base point (F = {:.3e})",
                    value
                )
            }
            FamilyError::Jet(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for FamilyError {}

impl From<JetError> for FamilyError {
    fn from(e: JetError) -> Self {
        FamilyError::Jet(e)
    }
}

impl<F: Real> GeneratingFamily<F> {
    /// Builds a family from an expression over `{t, x}`; the default base
    /// point is the origin.
    pub fn new(expr: Expression, base: [F; 2], tol: F) -> Result<Self, FamilyError> {
        assert_eq!(
            expr.vars().len(),
            2,
            "generating families use variables {{t, x}}"
        );
        let jet = Jet::of_expression(&expr, &base, 4)?;
        if jet.value().abs() > tol {
            return Err(FamilyError::NotAGerm {
                value: jet.value().to_f64(),
            });
        }
        Ok(GeneratingFamily { expr, base, jet })
    }

    pub fn at_origin(expr: Expression, tol: F) -> Result<Self, FamilyError> {
        Self::new(expr, [F::zero(), F::zero()], tol)
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn base(&self) -> [F; 2] {
        self.base
    }

    pub fn eval(&self, t: F, x: F) -> F {
        self.expr.eval(&[t, x])
    }

    pub fn eval_dx(&self, t: F, x: F) -> F {
        self.expr.derivative(1).eval(&[t, x])
    }
}

/// Classification of a generating family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClairautKind {
    Regular,
    ClairautFold,
    ClairautCusp,
    ClairautCrossCap,
    NonGeneric(String),
}

impl ClairautKind {
    pub fn label(&self) -> String {
        match self {
            ClairautKind::NonGeneric(reason) => format!("NonGeneric({})", reason),
            ClairautKind::Regular => "Regular".into(),
            ClairautKind::ClairautFold => "ClairautFold".into(),
            ClairautKind::ClairautCusp => "ClairautCusp".into(),
            ClairautKind::ClairautCrossCap => "ClairautCrossCap".into(),
        }
    }
}

/// Derivatives of `F` tested by the classification.
#[derive(Debug, Clone, Copy)]
pub struct FamilyJetValues<F> {
    pub ft: F,
    pub ftt: F,
    pub ftx: F,
    pub fttt: F,
    pub ftxx: F,
}

#[derive(Debug, Clone)]
pub struct ClairautReport<F> {
    pub kind: ClairautKind,
    pub values: FamilyJetValues<F>,
    /// Integral-diagram normal form: 1 nonsingular, 2 fold, 3 cusp,
    /// 4 cross cap (Whitney umbrella).
    pub diagram: Option<u8>,
}

/// Classifies a generating family by its 3-jet at the base point.
pub fn classify_family<F: Real>(fam: &GeneratingFamily<F>, tol_zero: F) -> ClairautReport<F> {
    let j = &fam.jet;
    let values = FamilyJetValues {
        ft: j.coeff([1, 0, 0]),
        ftt: F::of(2.0) * j.coeff([2, 0, 0]),
        ftx: j.coeff([1, 1, 0]),
        fttt: F::of(6.0) * j.coeff([3, 0, 0]),
        ftxx: F::of(2.0) * j.coeff([1, 2, 0]),
    };
    let nz = |v: F| v.abs() > tol_zero;
    let (kind, diagram) = if nz(values.ft) {
        (ClairautKind::Regular, Some(1))
    } else if nz(values.ftt) && nz(values.ftx) {
        (ClairautKind::ClairautFold, Some(2))
    } else if !nz(values.ftt) && nz(values.ftx) {
        if nz(values.fttt) {
            (ClairautKind::ClairautCusp, Some(3))
        } else {
            (
                ClairautKind::NonGeneric("F_t = F_tt = F_ttt = 0 at the base point".into()),
                None,
            )
        }
    } else if nz(values.ftt) && !nz(values.ftx) {
        if nz(values.ftxx) {
            (ClairautKind::ClairautCrossCap, Some(4))
        } else {
            (
                ClairautKind::NonGeneric("F_t = F_tx = F_txx = 0 at the base point".into()),
                None,
            )
        }
    } else {
        (
            ClairautKind::NonGeneric("F_t, F_tt and F_tx all vanish at the base point".into()),
            None,
        )
    };
    ClairautReport {
        kind,
        values,
        diagram,
    }
}

/// Verdict of the criminant-sampling Clairaut test.
#[derive(Debug, Clone)]
pub struct ClairautVerdict<F> {
    pub is_clairaut: bool,
    /// Sample with the largest contact residual and that residual.
    pub worst: Option<([F; 3], F)>,
    pub samples: usize,
}

/// Tests `Sigma_c = Sigma_pi`: every sampled criminant point must be
/// contact-singular (`|G_x + p G_y| <= tol`). An empty criminant passes
/// vacuously.
pub fn is_clairaut_type<F: Real>(
    g: &Expression,
    bounds: &Box3<F>,
    samples_per_component: usize,
    tol: F,
    opts: &TraceOptions<F>,
) -> Result<ClairautVerdict<F>, SurfaceError> {
    let gx = g.derivative(0);
    let gy = g.derivative(1);
    let curves = trace_criminant(g, bounds, opts)?;
    let mut worst: Option<([F; 3], F)> = None;
    let mut count = 0;
    for curve in &curves {
        let pts = resample_criminant(g, curve, samples_per_component.max(2), opts.newton_tol);
        for q in pts {
            let w = (gx.eval(&q) + q[2] * gy.eval(&q)).abs();
            count += 1;
            if worst.as_ref().is_none_or(|(_, r)| w > *r) {
                worst = Some((q, w));
            }
        }
    }
    let is_clairaut = worst.as_ref().is_none_or(|(_, r)| *r <= tol);
    Ok(ClairautVerdict {
        is_clairaut,
        worst,
        samples: count,
    })
}

/// Verdict of the reducedness test.
#[derive(Debug, Clone)]
pub struct ReducedVerdict<F> {
    pub is_reduced: bool,
    /// Sample with the smallest tangential gradient of `G_p`.
    pub worst: Option<([F; 3], F)>,
    pub samples: usize,
}

/// Tests that `G_p` vanishes to exactly first order transversally on the
/// surface: the component of `grad G_p` tangent to `{G = 0}` must be
/// nonzero at every sampled criminant point.
///
/// At samples refined to residual `r`, a higher-order fold locus shows a
/// tangential gradient of order `sqrt(r)` rather than zero, so `tol` must
/// sit well above that scale; `1e-3` separates cleanly at the default
/// refinement of `1e-12`.
pub fn is_reduced<F: Real>(
    g: &Expression,
    bounds: &Box3<F>,
    samples_per_component: usize,
    tol: F,
    opts: &TraceOptions<F>,
) -> Result<ReducedVerdict<F>, SurfaceError> {
    let gp = g.derivative(2);
    let curves = trace_criminant(g, bounds, opts)?;
    let mut worst: Option<([F; 3], F)> = None;
    let mut count = 0;
    for curve in &curves {
        let pts = resample_criminant(g, curve, samples_per_component.max(2), opts.newton_tol);
        for q in pts {
            let (_, grad_g) = gradient_at(g, q)?;
            let (_, grad_gp) = gradient_at(&gp, q)?;
            let n = norm3(grad_g);
            if n < F::of(1e-14) {
                continue;
            }
            let unit = scale3(grad_g, n.recip());
            let tangential = sub3(grad_gp, scale3(unit, dot3(grad_gp, unit)));
            let mag = norm3(tangential);
            count += 1;
            if worst.as_ref().is_none_or(|(_, r)| mag < *r) {
                worst = Some((q, mag));
            }
        }
    }
    let is_reduced = worst.as_ref().is_none_or(|(_, r)| *r > tol);
    Ok(ReducedVerdict {
        is_reduced,
        worst,
        samples: count,
    })
}

/// Result of the jet-level ideal-membership test.
#[derive(Debug, Clone, Copy)]
pub struct DaraVerdict<F> {
    pub holds: bool,
    /// Largest unexplained coefficient of `G_x + p G_y - A G - B G_p`.
    pub residual: F,
    pub order: usize,
}

/// Decides whether `G_x + p G_y` lies in the ideal generated by `G` and
/// `G_p` at jet level around `base`: coefficients of `A` and `B` (order
/// `order - 1`) are fitted by least squares and the verdict holds when the
/// remaining residual is below `1e-8` per coefficient. The test is
/// necessary for the germ condition, decided at the stated order.
pub fn dara_condition<F: Real>(
    g: &Expression,
    base: [F; 3],
    order: usize,
) -> Result<DaraVerdict<F>, JetError> {
    let order = order.max(1);
    let jg = Jet::of_expression(g, &base, order)?;
    let jgp = Jet::of_expression(&g.derivative(2), &base, order)?;
    let jgx = Jet::of_expression(&g.derivative(0), &base, order)?;
    let jgy = Jet::of_expression(&g.derivative(1), &base, order)?;
    let p = Jet::variable(3, order, &base, 2);
    let target = jgx.add(&p.mul(&jgy));

    let rows: Vec<[usize; 3]> = crate::jet::multi_indices(3, order);
    let cols_idx: Vec<[usize; 3]> = crate::jet::multi_indices(3, order - 1);
    let mut matrix: Vec<Vec<F>> = vec![vec![F::zero(); 2 * cols_idx.len()]; rows.len()];
    for (c, e) in cols_idx.iter().enumerate() {
        let mut mon = Jet::zero(3, order, &base);
        mon.set_coeff(*e, F::one());
        let col_a = mon.mul(&jg);
        let col_b = mon.mul(&jgp);
        for (r, re) in rows.iter().enumerate() {
            matrix[r][c] = col_a.coeff(*re);
            matrix[r][cols_idx.len() + c] = col_b.coeff(*re);
        }
    }
    let rhs: Vec<F> = rows.iter().map(|re| target.coeff(*re)).collect();
    let (_, residual) = least_squares(&matrix, &rhs);
    let max_res = residual
        .iter()
        .fold(F::zero(), |m, r| if r.abs() > m { r.abs() } else { m });
    Ok(DaraVerdict {
        holds: max_res <= F::of(1e-8),
        residual: max_res,
        order,
    })
}
