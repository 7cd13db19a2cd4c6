//! Small dense linear algebra: 2x2 eigenvalues, 3x3 solves, and a pivoted
//! QR least-squares used by the jet-level ideal-membership test. Sizes stay
//! in the low hundreds, so everything is hand-rolled.

// index loops mirror the usual statement of the eliminations
#![allow(clippy::needless_range_loop)]

use crate::num::Real;

/// Eigenvalues of a real 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eigen2<F> {
    /// Two real eigenvalues, ordered by descending value.
    Real(F, F),
    /// Complex conjugate pair `re +- i im` with `im > 0`.
    Complex { re: F, im: F },
}

pub fn eigenvalues_2x2<F: Real>(m: [[F; 2]; 2]) -> Eigen2<F> {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = F::of(0.5);
    let disc = tr * tr - F::of(4.0) * det;
    if disc >= F::zero() {
        let s = disc.sqrt();
        Eigen2::Real((tr + s) * half, (tr - s) * half)
    } else {
        Eigen2::Complex {
            re: tr * half,
            im: (-disc).sqrt() * half,
        }
    }
}

/// Eigenvector of a 2x2 matrix for a real eigenvalue (unnormalized result
/// is normalized before returning; `None` when the matrix is a multiple of
/// the identity and every direction works).
pub fn eigenvector_2x2<F: Real>(m: [[F; 2]; 2], lambda: F) -> Option<[F; 2]> {
    // (m - lambda I) v = 0: take the larger row to form v.
    let r1 = [m[0][0] - lambda, m[0][1]];
    let r2 = [m[1][0], m[1][1] - lambda];
    let n1 = r1[0].abs() + r1[1].abs();
    let n2 = r2[0].abs() + r2[1].abs();
    let row = if n1 >= n2 { r1 } else { r2 };
    let n = row[0].hypot(row[1]);
    if n < F::of(1e-14) {
        return None;
    }
    Some([-row[1] / n, row[0] / n])
}

pub fn solve3<F: Real>(a: [[F; 3]; 3], b: [F; 3]) -> Option<[F; 3]> {
    // Gaussian elimination with partial pivoting.
    let mut m = [[F::zero(); 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][j];
        }
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < F::of(1e-300) {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r == col {
                continue;
            }
            let f = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] = m[r][c] - f * m[col][c];
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

pub fn dot3<F: Real>(a: [F; 3], b: [F; 3]) -> F {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3<F: Real>(a: [F; 3]) -> F {
    dot3(a, a).sqrt()
}

pub fn cross3<F: Real>(a: [F; 3], b: [F; 3]) -> [F; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn scale3<F: Real>(a: [F; 3], s: F) -> [F; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add3<F: Real>(a: [F; 3], b: [F; 3]) -> [F; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3<F: Real>(a: [F; 3], b: [F; 3]) -> [F; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Orthonormal basis of the plane orthogonal to `normal` (Gram-Schmidt on
/// the coordinate axis least aligned with the normal).
pub fn tangent_basis<F: Real>(normal: [F; 3]) -> Option<([F; 3], [F; 3])> {
    let n = norm3(normal);
    if n < F::of(1e-14) {
        return None;
    }
    let unit = scale3(normal, n.recip());
    let mut axis = [F::zero(); 3];
    let mut best = 0;
    for k in 1..3 {
        if unit[k].abs() < unit[best].abs() {
            best = k;
        }
    }
    axis[best] = F::one();
    let mut e1 = sub3(axis, scale3(unit, dot3(axis, unit)));
    let n1 = norm3(e1);
    e1 = scale3(e1, n1.recip());
    let e2 = cross3(unit, e1);
    Some((e1, e2))
}

/// Dense least squares `min |A x - b|` via Householder QR with column
/// pivoting; rank-deficient columns get zero coefficients. Returns the
/// solution and the residual vector `A x - b`.
pub fn least_squares<F: Real>(a: &[Vec<F>], b: &[F]) -> (Vec<F>, Vec<F>) {
    let rows = a.len();
    let cols = if rows > 0 { a[0].len() } else { 0 };
    let mut r: Vec<Vec<F>> = a.to_vec();
    let mut rhs: Vec<F> = b.to_vec();
    let mut perm: Vec<usize> = (0..cols).collect();
    let kmax = rows.min(cols);
    let mut rank = kmax;
    let eps = F::of(1e-12);

    let col_norm = |r: &Vec<Vec<F>>, k: usize, j: usize| -> F {
        let mut s = F::zero();
        for i in k..rows {
            s = s + r[i][j] * r[i][j];
        }
        s.sqrt()
    };

    let mut scale = F::zero();
    for j in 0..cols {
        let n = col_norm(&r, 0, j);
        if n > scale {
            scale = n;
        }
    }
    if scale == F::zero() {
        scale = F::one();
    }

    for k in 0..kmax {
        // pivot: the remaining column with the largest tail norm
        let mut best = k;
        let mut best_n = col_norm(&r, k, k);
        for j in k + 1..cols {
            let n = col_norm(&r, k, j);
            if n > best_n {
                best_n = n;
                best = j;
            }
        }
        if best_n <= eps * scale {
            rank = k;
            break;
        }
        if best != k {
            for row in r.iter_mut() {
                row.swap(k, best);
            }
            perm.swap(k, best);
        }
        // Householder reflector for column k
        let alpha = if r[k][k] >= F::zero() {
            -best_n
        } else {
            best_n
        };
        let mut v: Vec<F> = (k..rows).map(|i| r[i][k]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(F::zero(), |s, x| s + *x * *x);
        if vnorm2 > F::zero() {
            for j in k..cols {
                let mut dot = F::zero();
                for (t, vi) in v.iter().enumerate() {
                    dot = dot + *vi * r[k + t][j];
                }
                let f = F::of(2.0) * dot / vnorm2;
                for (t, vi) in v.iter().enumerate() {
                    r[k + t][j] = r[k + t][j] - f * *vi;
                }
            }
            let mut dot = F::zero();
            for (t, vi) in v.iter().enumerate() {
                dot = dot + *vi * rhs[k + t];
            }
            let f = F::of(2.0) * dot / vnorm2;
            for (t, vi) in v.iter().enumerate() {
                rhs[k + t] = rhs[k + t] - f * *vi;
            }
        }
        r[k][k] = alpha;
        for i in k + 1..rows {
            r[i][k] = F::zero();
        }
    }

    // Back substitution on the leading rank x rank triangle.
    let mut y = vec![F::zero(); cols];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s = s - r[i][j] * y[j];
        }
        y[i] = s / r[i][i];
    }
    let mut x = vec![F::zero(); cols];
    for (j, &pj) in perm.iter().enumerate() {
        x[pj] = y[j];
    }

    // Explicit residual in the original frame.
    let mut residual = vec![F::zero(); rows];
    for i in 0..rows {
        let mut s = -b[i];
        for j in 0..cols {
            s = s + a[i][j] * x[j];
        }
        residual[i] = s;
    }
    (x, residual)
}
