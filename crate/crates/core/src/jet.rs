//! Truncated Taylor jets in one to three variables.
//!
//! A [`Jet`] stores the coefficients of a Taylor polynomial of total degree
//! `<= order` around an expansion point, indexed densely by multi-index.
//! All arithmetic discards degrees above the truncation order exactly, so
//! ring identities hold at jet level. Derivative conditions elsewhere in the
//! crate (fold tests, cusp tests, umbrella reduction) are all read off jet
//! coefficients: the coefficient of a monomial is the corresponding partial
//! derivative divided by the factorial of the multi-index.

use std::fmt;

use crate::expr::{Expression, Func, Node};
use crate::num::Real;

/// Errors from jet arithmetic and jet-level solves.
#[derive(Debug, Clone, PartialEq)]
pub enum JetError {
    /// A function was applied outside its domain (reports which condition failed).
    Domain(&'static str),
    /// Division by a jet whose constant term is zero.
    DivisorNotUnit,
    /// `hadamard_factor` found a monomial not containing the divisor variable.
    NotDivisible { monomial: String },
    /// The triangular coefficient solve for a first integral was inconsistent.
    NoFormalSolution,
    /// A series inversion or implicit solve degenerated.
    Inversion(&'static str),
}

impl fmt::Display for JetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JetError::Domain(msg) => write!(f, "domain error: {}", msg),
            JetError::DivisorNotUnit => write!(f, "division by jet with zero constant term"),
            JetError::NotDivisible { monomial } => {
                write!(f, "jet not divisible: offending monomial {}", monomial)
            }
            JetError::NoFormalSolution => write!(f, "no formal power-series solution"),
            JetError::Inversion(msg) => write!(f, "series inversion failed: {}", msg),
        }
    }
}

impl std::error::Error for JetError {}

/// Number of multi-indices of total degree `<= order` in `nvars` variables.
pub fn coeff_count(nvars: usize, order: usize) -> usize {
    match nvars {
        1 => order + 1,
        2 => (order + 1) * (order + 2) / 2,
        3 => (order + 1) * (order + 2) * (order + 3) / 6,
        _ => panic!("jets support 1..=3 variables"),
    }
}

/// All multi-indices of total degree `<= order`, in storage order.
pub fn multi_indices(nvars: usize, order: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(coeff_count(nvars, order));
    match nvars {
        1 => {
            for i in 0..=order {
                out.push([i, 0, 0]);
            }
        }
        2 => {
            for i in 0..=order {
                for j in 0..=(order - i) {
                    out.push([i, j, 0]);
                }
            }
        }
        3 => {
            for i in 0..=order {
                for j in 0..=(order - i) {
                    for k in 0..=(order - i - j) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        _ => panic!("jets support 1..=3 variables"),
    }
    out
}

fn flat_index(nvars: usize, order: usize, e: [usize; 3]) -> usize {
    debug_assert!(e[0] + e[1] + e[2] <= order);
    match nvars {
        1 => e[0],
        2 => {
            let mut idx = 0;
            for a in 0..e[0] {
                idx += order - a + 1;
            }
            idx + e[1]
        }
        3 => {
            let tri = |m: usize| (m + 1) * (m + 2) / 2;
            let mut idx = 0;
            for a in 0..e[0] {
                idx += tri(order - a);
            }
            for b in 0..e[1] {
                idx += order - e[0] - b + 1;
            }
            idx + e[2]
        }
        _ => panic!("jets support 1..=3 variables"),
    }
}

fn monomial_string(e: [usize; 3], nvars: usize) -> String {
    let names = ["x1", "x2", "x3"];
    let mut parts = Vec::new();
    for v in 0..nvars {
        if e[v] > 0 {
            parts.push(format!("{}^{}", names[v], e[v]));
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

/// Truncated Taylor polynomial of total degree `<= order`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<F> {
    nvars: usize,
    order: usize,
    point: Vec<F>,
    coeffs: Vec<F>,
}

impl<F: Real> Jet<F> {
    pub fn zero(nvars: usize, order: usize, point: &[F]) -> Self {
        assert!((1..=3).contains(&nvars));
        assert_eq!(point.len(), nvars);
        Jet {
            nvars,
            order,
            point: point.to_vec(),
            coeffs: vec![F::zero(); coeff_count(nvars, order)],
        }
    }

    pub fn constant(nvars: usize, order: usize, point: &[F], value: F) -> Self {
        let mut j = Self::zero(nvars, order, point);
        j.coeffs[0] = value;
        j
    }

    /// Jet of the coordinate function `var` at `point`.
    pub fn variable(nvars: usize, order: usize, point: &[F], var: usize) -> Self {
        assert!(var < nvars);
        let mut j = Self::zero(nvars, order, point);
        j.coeffs[0] = point[var];
        if order >= 1 {
            let mut e = [0usize; 3];
            e[var] = 1;
            let idx = flat_index(nvars, order, e);
            j.coeffs[idx] = F::one();
        }
        j
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self) -> &[F] {
        &self.point
    }

    /// Constant term (the value of the underlying function at the point).
    pub fn value(&self) -> F {
        self.coeffs[0]
    }

    pub fn coeff(&self, e: [usize; 3]) -> F {
        if e[0] + e[1] + e[2] > self.order {
            return F::zero();
        }
        self.coeffs[flat_index(self.nvars, self.order, e)]
    }

    pub fn set_coeff(&mut self, e: [usize; 3], value: F) {
        let idx = flat_index(self.nvars, self.order, e);
        self.coeffs[idx] = value;
    }

    pub fn max_abs(&self) -> F {
        self.coeffs
            .iter()
            .fold(F::zero(), |m, c| if c.abs() > m { c.abs() } else { m })
    }

    fn assert_same_shape(&self, other: &Self) {
        assert_eq!(self.nvars, other.nvars, "jet variable count mismatch");
        assert_eq!(self.order, other.order, "jet order mismatch");
        assert!(
            self.point.iter().zip(&other.point).all(|(a, b)| *a == *b),
            "jet expansion point mismatch"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c = *c + *d;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c = *c - *d;
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, s: F) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = *c * s;
        }
        out
    }

    pub fn add_scalar(&self, s: F) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + s;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        let table = multi_indices(self.nvars, self.order);
        let mut out = Self::zero(self.nvars, self.order, &self.point);
        for (ia, ea) in table.iter().enumerate() {
            let ca = self.coeffs[ia];
            if ca == F::zero() {
                continue;
            }
            let da = ea[0] + ea[1] + ea[2];
            for (ib, eb) in table.iter().enumerate() {
                let cb = other.coeffs[ib];
                if cb == F::zero() {
                    continue;
                }
                let d = da + eb[0] + eb[1] + eb[2];
                if d > self.order {
                    continue;
                }
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                let idx = flat_index(self.nvars, self.order, e);
                out.coeffs[idx] = out.coeffs[idx] + ca * cb;
            }
        }
        out
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self, JetError> {
        let c = self.value();
        if c == F::zero() || !c.is_finite() {
            return Err(JetError::DivisorNotUnit);
        }
        // self = c (1 + e); 1/(1+e) via Horner on the nilpotent part.
        let e = self.scale(c.recip()).add_scalar(-F::one());
        let one = Self::constant(self.nvars, self.order, &self.point, F::one());
        let mut r = one.clone();
        for _ in 0..self.order {
            r = one.sub(&e.mul(&r));
        }
        Ok(r.scale(c.recip()))
    }

    pub fn div(&self, other: &Self) -> Result<Self, JetError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, k: i32) -> Result<Self, JetError> {
        let mut out = Self::constant(self.nvars, self.order, &self.point, F::one());
        let mut base = if k < 0 { self.recip()? } else { self.clone() };
        let mut k = k.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        Ok(out)
    }

    /// Re-truncates or zero-pads to a new order. Padding adds zero
    /// coefficients; that is only meaningful when the jet is polynomial-exact
    /// or the higher coefficients are irrelevant downstream.
    pub fn with_order(&self, order: usize) -> Self {
        let mut out = Self::zero(self.nvars, order, &self.point);
        let keep = order.min(self.order);
        for e in multi_indices(self.nvars, keep) {
            out.set_coeff(e, self.coeff(e));
        }
        out
    }

    /// Partial derivative; the order drops by one.
    pub fn partial(&self, var: usize) -> Self {
        assert!(var < self.nvars);
        let new_order = self.order.saturating_sub(1);
        let mut out = Self::zero(self.nvars, new_order, &self.point);
        for e in multi_indices(self.nvars, new_order) {
            let mut src = e;
            src[var] += 1;
            let factor = F::of(src[var] as f64);
            out.set_coeff(e, factor * self.coeff(src));
        }
        out
    }

    /// Like [`Jet::partial`] but keeps the original truncation order
    /// (the top-degree coefficients of the result are unknown and left zero).
    pub fn partial_keep_order(&self, var: usize) -> Self {
        self.partial(var).with_order(self.order)
    }

    /// Factors out the variable `var`: returns `self / var` at order
    /// `order - 1`. Every monomial not containing `var` must have magnitude
    /// `<= tol`, otherwise the offending monomial is reported.
    pub fn hadamard_factor(&self, var: usize, tol: F) -> Result<Self, JetError> {
        assert!(var < self.nvars);
        for e in multi_indices(self.nvars, self.order) {
            if e[var] == 0 && self.coeff(e).abs() > tol {
                return Err(JetError::NotDivisible {
                    monomial: monomial_string(e, self.nvars),
                });
            }
        }
        let new_order = self.order.saturating_sub(1);
        let mut out = Self::zero(self.nvars, new_order, &self.point);
        for e in multi_indices(self.nvars, new_order) {
            let mut src = e;
            src[var] += 1;
            out.set_coeff(e, self.coeff(src));
        }
        Ok(out)
    }

    /// Applies a univariate analytic function given by its Taylor
    /// coefficients `outer[m] = f^(m)(c)/m!` at `c = self.value()`.
    fn apply_univariate(&self, outer: &[F]) -> Self {
        let mut w = self.clone();
        w.coeffs[0] = F::zero();
        let mut r = Self::constant(self.nvars, self.order, &self.point, outer[self.order]);
        for m in (0..self.order).rev() {
            r = r.mul(&w).add_scalar(outer[m]);
        }
        r
    }

    pub fn sin(&self) -> Self {
        let c = self.value();
        let cycle = [c.sin(), c.cos(), -c.sin(), -c.cos()];
        self.apply_univariate(&factorial_scaled_cycle(&cycle, self.order))
    }

    pub fn cos(&self) -> Self {
        let c = self.value();
        let cycle = [c.cos(), -c.sin(), -c.cos(), c.sin()];
        self.apply_univariate(&factorial_scaled_cycle(&cycle, self.order))
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut outer = Vec::with_capacity(self.order + 1);
        let mut g = e;
        outer.push(g);
        for m in 1..=self.order {
            g = g / F::of(m as f64);
            outer.push(g);
        }
        self.apply_univariate(&outer)
    }

    pub fn ln(&self) -> Result<Self, JetError> {
        let c = self.value();
        if c <= F::zero() {
            return Err(JetError::Domain("log of non-positive constant term"));
        }
        let mut outer = Vec::with_capacity(self.order + 1);
        outer.push(c.ln());
        // d^m/dx^m log = (-1)^(m-1) (m-1)!/x^m, divided by m!.
        let mut pow = F::one();
        for m in 1..=self.order {
            pow = pow / c;
            let sign = if m % 2 == 1 { F::one() } else { -F::one() };
            outer.push(sign * pow / F::of(m as f64));
        }
        Ok(self.apply_univariate(&outer))
    }

    pub fn sqrt(&self) -> Result<Self, JetError> {
        let c = self.value();
        if c <= F::zero() {
            return Err(JetError::Domain("sqrt of non-positive constant term"));
        }
        let mut outer = Vec::with_capacity(self.order + 1);
        let mut g = c.sqrt();
        outer.push(g);
        for m in 1..=self.order {
            // binom(1/2, m) ratio: multiply by (3/2 - m)/m and divide by c.
            g = g * (F::of(1.5) - F::of(m as f64)) / (F::of(m as f64) * c);
            outer.push(g);
        }
        Ok(self.apply_univariate(&outer))
    }

    pub fn atan(&self) -> Self {
        let c = self.value();
        let mut outer = Vec::with_capacity(self.order + 1);
        outer.push(c.atan());
        if self.order >= 1 {
            // Taylor coefficients of atan at c come from integrating the
            // series of 1/(1 + t^2) termwise.
            let t = Jet::<F>::variable(1, self.order - 1, &[c], 0);
            let one = Jet::<F>::constant(1, self.order - 1, &[c], F::one());
            let q = one
                .div(&one.add(&t.mul(&t)))
                .expect("1 + t^2 has positive constant term");
            for m in 1..=self.order {
                outer.push(q.coeff([m - 1, 0, 0]) / F::of(m as f64));
            }
        }
        self.apply_univariate(&outer)
    }

    /// Substitutes jets for the variables of `self`. The expansion point of
    /// `self` must match the constant terms of the arguments; the result
    /// lives in the argument jets' variable space.
    pub fn compose(&self, args: &[&Jet<F>]) -> Result<Jet<F>, JetError> {
        assert_eq!(args.len(), self.nvars, "one argument jet per variable");
        let shape = args[0];
        for a in args.iter().skip(1) {
            shape.assert_same_shape(a);
        }
        let slack = F::of(1e-9);
        let mut centered: Vec<Jet<F>> = Vec::with_capacity(args.len());
        for (k, a) in args.iter().enumerate() {
            let drift = (a.value() - self.point[k]).abs();
            if drift > slack {
                return Err(JetError::Inversion(
                    "composition argument does not hit the expansion point",
                ));
            }
            let mut w = (*a).clone();
            w.coeffs[0] = F::zero();
            centered.push(w);
        }
        // Powers of each centered argument up to the target order.
        let one = Jet::constant(shape.nvars, shape.order, &shape.point, F::one());
        let mut pows: Vec<Vec<Jet<F>>> = Vec::with_capacity(args.len());
        for w in &centered {
            let mut ps = Vec::with_capacity(shape.order + 1);
            ps.push(one.clone());
            for m in 1..=shape.order {
                let prev = &ps[m - 1];
                ps.push(prev.mul(w));
            }
            pows.push(ps);
        }
        let mut out = Jet::zero(shape.nvars, shape.order, &shape.point);
        for (idx, e) in multi_indices(self.nvars, self.order).iter().enumerate() {
            let c = self.coeffs[idx];
            if c == F::zero() {
                continue;
            }
            let cap = shape.order;
            if e[0] + e[1] + e[2] > cap {
                continue;
            }
            let mut term = pows[0][e[0]].clone();
            for v in 1..self.nvars {
                if e[v] > 0 {
                    term = term.mul(&pows[v][e[v]]);
                }
            }
            out = out.add(&term.scale(c));
        }
        Ok(out)
    }

    /// Compositional inverse of a univariate jet with `f(0) = 0, f'(0) != 0`:
    /// returns `g` with `f(g(t)) = t` up to the truncation order.
    pub fn invert_univariate(&self) -> Result<Jet<F>, JetError> {
        assert_eq!(self.nvars, 1);
        if self.value().abs() > F::of(1e-9) {
            return Err(JetError::Inversion("inverse requires f(0) = 0"));
        }
        let c1 = self.coeff([1, 0, 0]);
        if c1.abs() < F::of(1e-12) {
            return Err(JetError::Inversion("inverse requires f'(0) != 0"));
        }
        let origin = [F::zero()];
        let t = Jet::variable(1, self.order, &origin, 0);
        let df = self.partial_keep_order(0);
        let mut g = t.scale(c1.recip());
        for _ in 0..newton_passes(self.order) {
            let fg = self.compose(&[&g])?;
            let dfg = df.compose(&[&g])?;
            g = g.sub(&fg.sub(&t).div(&dfg)?);
        }
        Ok(g)
    }

    /// Solves `self(g(b), b) = 0` for the first variable of a two-variable
    /// jet, by formal Newton iteration. Requires `self(0,0) ~ 0` and a
    /// nonzero partial in the solved variable.
    pub fn solve_implicit_var0(&self) -> Result<Jet<F>, JetError> {
        assert_eq!(self.nvars, 2);
        let da = self.coeff([1, 0, 0]);
        if da.abs() < F::of(1e-12) {
            return Err(JetError::Inversion(
                "implicit solve degenerate: vanishing partial in the solved variable",
            ));
        }
        let origin = [F::zero()];
        let b = Jet::variable(1, self.order, &origin, 0);
        let mut g = Jet::zero(1, self.order, &origin);
        let dpsi = self.partial_keep_order(0);
        for _ in 0..newton_passes(self.order) {
            let val = self.compose(&[&g, &b])?;
            let der = dpsi.compose(&[&g, &b])?;
            g = g.sub(&val.div(&der)?);
        }
        // Residual sanity: self(g(b), b) must vanish through the order.
        let res = self.compose(&[&g, &b])?.max_abs();
        if res > F::of(1e-8) * (F::one() + self.max_abs()) {
            return Err(JetError::Inversion("implicit solve did not converge"));
        }
        Ok(g)
    }

    /// Inverts a two-variable jet `E(u, v)` in its first slot: returns
    /// `U(s, v)` with `E(U(s, v), v) = s`. Requires `E_u(0,0) != 0`.
    pub fn invert_in_var0(&self) -> Result<Jet<F>, JetError> {
        assert_eq!(self.nvars, 2);
        let du = self.coeff([1, 0, 0]);
        if du.abs() < F::of(1e-12) {
            return Err(JetError::Inversion("coordinate change not invertible in u"));
        }
        let origin = [F::zero(), F::zero()];
        let s = Jet::variable(2, self.order, &origin, 0);
        let v = Jet::variable(2, self.order, &origin, 1);
        let de = self.partial_keep_order(0);
        let mut u = s.scale(du.recip());
        for _ in 0..newton_passes(self.order) {
            let val = self.compose(&[&u, &v])?;
            let der = de.compose(&[&u, &v])?;
            u = u.sub(&val.sub(&s).div(&der)?);
        }
        let res = self.compose(&[&u, &v])?.sub(&s).max_abs();
        if res > F::of(1e-8) * (F::one() + self.max_abs()) {
            return Err(JetError::Inversion("coordinate inversion did not converge"));
        }
        Ok(u)
    }

    /// Jet of a parsed expression at a point.
    pub fn of_expression(e: &Expression, point: &[F], order: usize) -> Result<Jet<F>, JetError> {
        assert_eq!(point.len(), e.vars().len(), "point dimension mismatch");
        eval_node_jet(e.root(), point, e.vars().len(), order)
    }
}

fn newton_passes(order: usize) -> usize {
    // Valuation of the error doubles per pass; a couple extra are cheap.
    let mut passes = 1;
    let mut reach = 1usize;
    while reach <= order {
        reach *= 2;
        passes += 1;
    }
    passes + 1
}

fn factorial_scaled_cycle<F: Real>(cycle: &[F; 4], order: usize) -> Vec<F> {
    let mut outer = Vec::with_capacity(order + 1);
    let mut inv_fact = F::one();
    for m in 0..=order {
        if m > 0 {
            inv_fact = inv_fact / F::of(m as f64);
        }
        outer.push(cycle[m % 4] * inv_fact);
    }
    outer
}

fn eval_node_jet<F: Real>(
    node: &Node,
    point: &[F],
    nvars: usize,
    order: usize,
) -> Result<Jet<F>, JetError> {
    Ok(match node {
        Node::Num(c) => Jet::constant(nvars, order, point, F::of(*c)),
        Node::Var(i) => Jet::variable(nvars, order, point, *i),
        Node::Add(a, b) => {
            eval_node_jet(a, point, nvars, order)?.add(&eval_node_jet(b, point, nvars, order)?)
        }
        Node::Sub(a, b) => {
            eval_node_jet(a, point, nvars, order)?.sub(&eval_node_jet(b, point, nvars, order)?)
        }
        Node::Mul(a, b) => {
            eval_node_jet(a, point, nvars, order)?.mul(&eval_node_jet(b, point, nvars, order)?)
        }
        Node::Div(a, b) => {
            eval_node_jet(a, point, nvars, order)?.div(&eval_node_jet(b, point, nvars, order)?)?
        }
        Node::Neg(a) => eval_node_jet(a, point, nvars, order)?.neg(),
        Node::Pow(a, k) => eval_node_jet(a, point, nvars, order)?.powi(*k)?,
        Node::Apply(f, a) => {
            let inner = eval_node_jet(a, point, nvars, order)?;
            match f {
                Func::Sin => inner.sin(),
                Func::Cos => inner.cos(),
                Func::Exp => inner.exp(),
                Func::Log => inner.ln()?,
                Func::Sqrt => inner.sqrt()?,
                Func::Atan => inner.atan(),
            }
        }
    })
}

/// Formal first integral of `du/dv = rhs(u, v)` as a jet of order `order`.
///
/// The integral is normalized to `I = u + higher order terms`; its
/// coefficients are determined degree by degree in `v` from the identity
/// `dI/dv + (dI/du) rhs = 0`, which the result satisfies through total
/// degree `order - 1` (checked; failure reports `NoFormalSolution`).
pub fn truncated_ode_integral<F: Real>(rhs: &Jet<F>, order: usize) -> Result<Jet<F>, JetError> {
    assert_eq!(
        rhs.nvars(),
        2,
        "first-integral solve expects a jet in (u, v)"
    );
    let origin = [F::zero(), F::zero()];
    let rhs = if rhs.order() == order {
        rhs.clone()
    } else {
        rhs.with_order(order)
    };
    let mut integral = Jet::zero(2, order, &origin);
    integral.set_coeff([1, 0, 0], F::one());
    for j in 0..order {
        // Rows of v-degree <= j in `integral` are final, and only those
        // enter the v-degree-j row of the product below.
        let prod = integral.partial_keep_order(0).mul(&rhs);
        for i in 0..=(order - j - 1) {
            let c = -prod.coeff([i, j, 0]) / F::of((j + 1) as f64);
            integral.set_coeff([i, j + 1, 0], c);
        }
    }
    // Residual of the defining identity through total degree order-1.
    let residual = integral
        .partial_keep_order(1)
        .add(&integral.partial_keep_order(0).mul(&rhs));
    let scale = (F::one() + rhs.max_abs()) * (F::one() + integral.max_abs());
    let tol = F::of(1e-12) * scale;
    for e in multi_indices(2, order - 1) {
        if residual.coeff(e).abs() > tol {
            return Err(JetError::NoFormalSolution);
        }
    }
    Ok(integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarSet;

    fn jet_of(src: &str, vars: &[&str], point: &[f64], order: usize) -> Jet<f64> {
        let vs = VarSet::new(vars.to_vec());
        let e = Expression::parse(src, &vs).unwrap();
        Jet::of_expression(&e, point, order).unwrap()
    }

    #[test]
    fn surface_equation_jet() {
        let j = jet_of("p^2 - y", &["x", "y", "p"], &[0.0, 0.0, 0.0], 2);
        assert_eq!(j.coeff([0, 0, 2]), 1.0);
        assert_eq!(j.coeff([0, 1, 0]), -1.0);
        let nonzero: usize = multi_indices(3, 2)
            .iter()
            .filter(|e| j.coeff(**e) != 0.0)
            .count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn parametric_slope_jet() {
        let j = jet_of("v*(u - v^2)", &["u", "v"], &[0.0, 0.0], 3);
        assert_eq!(j.coeff([1, 1, 0]), 1.0);
        assert_eq!(j.coeff([0, 3, 0]), -1.0);
        let nonzero: usize = multi_indices(2, 3)
            .iter()
            .filter(|e| j.coeff(**e) != 0.0)
            .count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn sine_taylor_series() {
        let j = jet_of("sin(x)", &["x"], &[0.0], 5);
        assert!((j.coeff([1, 0, 0]) - 1.0).abs() < 1e-15);
        assert!((j.coeff([3, 0, 0]) + 1.0 / 6.0).abs() < 1e-15);
        assert!((j.coeff([5, 0, 0]) - 1.0 / 120.0).abs() < 1e-15);
        assert_eq!(j.coeff([0, 0, 0]), 0.0);
        assert_eq!(j.coeff([2, 0, 0]), 0.0);
    }

    #[test]
    fn partial_derivatives() {
        let j = jet_of("p^2 - y + x^2", &["x", "y", "p"], &[0.0, 0.0, 0.0], 3);
        let dp = j.partial(2);
        assert_eq!(dp.coeff([0, 0, 1]), 2.0);
        assert_eq!(dp.coeff([0, 0, 0]), 0.0);

        let h = jet_of("v*(u - v^2)", &["u", "v"], &[0.0, 0.0], 3);
        let duv = h.partial(0).partial(1);
        assert_eq!(duv.value(), 1.0);

        let c = Jet::<f64>::constant(2, 4, &[0.0, 0.0], 7.5);
        assert_eq!(c.partial(0).max_abs(), 0.0);
    }

    #[test]
    fn hadamard_factorization() {
        let j = jet_of("y + y^2", &["y"], &[0.0], 4);
        let f = j.hadamard_factor(0, 1e-12).unwrap();
        assert_eq!(f.value(), 1.0);
        assert_eq!(f.coeff([1, 0, 0]), 1.0);

        let h = jet_of("u*v - v^3", &["u", "v"], &[0.0, 0.0], 4);
        let f = h.hadamard_factor(1, 1e-12).unwrap();
        assert_eq!(f.coeff([1, 0, 0]), 1.0);
        assert_eq!(f.coeff([0, 2, 0]), -1.0);

        let bad = jet_of("1 + v", &["u", "v"], &[0.0, 0.0], 3);
        match bad.hadamard_factor(1, 1e-12) {
            Err(JetError::NotDivisible { .. }) => {}
            other => panic!("expected NotDivisible, got {:?}", other),
        }
    }

    #[test]
    fn division_by_non_unit_fails() {
        let v = jet_of("v", &["u", "v"], &[0.0, 0.0], 3);
        let one = Jet::<f64>::constant(2, 3, &[0.0, 0.0], 1.0);
        assert_eq!(one.div(&v), Err(JetError::DivisorNotUnit));
    }

    #[test]
    fn sqrt_and_log_domains() {
        let x = jet_of("x - 1", &["x"], &[0.0], 3);
        assert_eq!(
            x.sqrt(),
            Err(JetError::Domain("sqrt of non-positive constant term"))
        );
        assert!(x.ln().is_err());
        let pos = x.add_scalar(2.0); // constant term 1
        let s = pos.sqrt().unwrap();
        let sq = s.mul(&s);
        for e in multi_indices(1, 3) {
            assert!((sq.coeff(e) - pos.coeff(e)).abs() < 1e-14);
        }
    }

    #[test]
    fn composition_matches_symbolic_substitution() {
        // f(u,v) = u*v + u^3, substituted u = s + t^2, v = t - s^2.
        let f = jet_of("u*v + u^3", &["u", "v"], &[0.0, 0.0], 6);
        let g1 = jet_of("s + t^2", &["s", "t"], &[0.0, 0.0], 6);
        let g2 = jet_of("t - s^2", &["s", "t"], &[0.0, 0.0], 6);
        let composed = f.compose(&[&g1, &g2]).unwrap();
        let direct = jet_of(
            "(s + t^2)*(t - s^2) + (s + t^2)^3",
            &["s", "t"],
            &[0.0, 0.0],
            6,
        );
        for e in multi_indices(2, 6) {
            assert!(
                (composed.coeff(e) - direct.coeff(e)).abs() < 1e-13,
                "mismatch at {:?}",
                e
            );
        }
    }

    #[test]
    fn univariate_inverse() {
        let f = jet_of("t + t^3", &["t"], &[0.0], 7);
        let g = f.invert_univariate().unwrap();
        let id = f.compose(&[&g]).unwrap();
        assert!((id.coeff([1, 0, 0]) - 1.0).abs() < 1e-12);
        for m in [0usize, 2, 3, 4, 5, 6, 7] {
            assert!(
                id.coeff([m, 0, 0]).abs() < 1e-12,
                "residual at degree {}",
                m
            );
        }
    }

    #[test]
    fn implicit_solve_recovers_handle() {
        // psi(a, b) = a - b - a^2 b: solve a = g(b); check residual.
        let psi = jet_of("a - b - a^2*b", &["a", "b"], &[0.0, 0.0], 7);
        let g = psi.solve_implicit_var0().unwrap();
        assert!((g.coeff([1, 0, 0]) - 1.0).abs() < 1e-12);
        let b = Jet::<f64>::variable(1, 7, &[0.0], 0);
        let res = psi.compose(&[&g, &b]).unwrap();
        assert!(res.max_abs() < 1e-12);
    }

    #[test]
    fn first_integral_of_umbrella_equation() {
        // du/dv = 2 v^2 (u - v^2): the only surviving coefficients through
        // degree 7 are u, -2/3 u v^3, 2/5 v^5, 2/9 u v^6.
        let rhs = jet_of("2*v^2*(u - v^2)", &["u", "v"], &[0.0, 0.0], 7);
        let i = truncated_ode_integral(&rhs, 7).unwrap();
        let expected = [
            ([1, 0], 1.0),
            ([1, 3], -2.0 / 3.0),
            ([0, 5], 2.0 / 5.0),
            ([1, 6], 2.0 / 9.0),
        ];
        for e in multi_indices(2, 7) {
            let want = expected
                .iter()
                .find(|(m, _)| m[0] == e[0] && m[1] == e[1])
                .map(|(_, c)| *c)
                .unwrap_or(0.0);
            assert!(
                (i.coeff(e) - want).abs() < 1e-14,
                "coefficient {:?}: got {}, want {}",
                e,
                i.coeff(e),
                want
            );
        }
    }

    #[test]
    fn first_integral_trivial_cases() {
        let zero = Jet::<f64>::zero(2, 5, &[0.0, 0.0]);
        let i = truncated_ode_integral(&zero, 5).unwrap();
        assert_eq!(i.coeff([1, 0, 0]), 1.0);
        assert_eq!(i.max_abs(), 1.0);

        // du/dv = v separates to I = u - v^2/2.
        let v = jet_of("v", &["u", "v"], &[0.0, 0.0], 5);
        let i = truncated_ode_integral(&v, 5).unwrap();
        assert_eq!(i.coeff([1, 0, 0]), 1.0);
        assert!((i.coeff([0, 2, 0]) + 0.5).abs() < 1e-15);
        let other: f64 = multi_indices(2, 5)
            .iter()
            .filter(|e| !(e[0] == 1 && e[1] == 0 || e[0] == 0 && e[1] == 2))
            .map(|e| i.coeff(*e).abs())
            .sum();
        assert_eq!(other, 0.0);
    }

    #[test]
    fn atan_jet_matches_finite_differences() {
        let j = jet_of("atan(x)", &["x"], &[0.5], 4);
        let x0 = 0.5_f64;
        assert!((j.value() - x0.atan()).abs() < 1e-15);
        assert!((j.coeff([1, 0, 0]) - 1.0 / (1.0 + x0 * x0)).abs() < 1e-14);
        // second coefficient: f''(x)/2 = -x/(1+x^2)^2
        let want = -x0 / (1.0 + x0 * x0).powi(2);
        assert!((j.coeff([2, 0, 0]) - want).abs() < 1e-13);
    }
}
