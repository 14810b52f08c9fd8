//! Fixed-size symmetric-matrix helpers for the 2×2 and 3×3 design matrices.
//!
//! Inverses use the explicit determinant/adjugate form; the 1-norm condition
//! number comes along for free and backs the singularity guard.

pub type Matrix<const N: usize> = [[f64; N]; N];
pub type Vector<const N: usize> = [f64; N];

/// Condition number above which a design matrix is treated as singular.
pub const CONDITION_CEILING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverse<const N: usize> {
    pub matrix: Matrix<N>,
    pub determinant: f64,
    /// `||A||_1 ||A^-1||_1`.
    pub condition: f64,
}

pub fn zeros<const N: usize>() -> Matrix<N> {
    [[0.0; N]; N]
}

/// Inverts a 2×2 or 3×3 matrix by adjugate. Returns `None` when the
/// determinant vanishes or the result is not finite.
pub fn invert<const N: usize>(a: &Matrix<N>) -> Option<Inverse<N>> {
    let mut adj = zeros::<N>();
    let det = match N {
        1 => {
            adj[0][0] = 1.0;
            a[0][0]
        }
        2 => {
            adj[0][0] = a[1][1];
            adj[0][1] = -a[0][1];
            adj[1][0] = -a[1][0];
            adj[1][1] = a[0][0];
            a[0][0] * a[1][1] - a[0][1] * a[1][0]
        }
        3 => {
            // adj[i][j] = cofactor C[j][i]
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = others(j);
                    let (c0, c1) = others(i);
                    let minor = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    adj[i][j] = sign * minor;
                }
            }
            a[0][0] * adj[0][0] + a[0][1] * adj[1][0] + a[0][2] * adj[2][0]
        }
        _ => unimplemented!("only 1x1, 2x2 and 3x3 matrices are supported"),
    };
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut inv = zeros::<N>();
    for i in 0..N {
        for j in 0..N {
            inv[i][j] = adj[i][j] / det;
        }
    }
    let condition = norm1(a) * norm1(&inv);
    if !condition.is_finite() {
        return None;
    }
    Some(Inverse {
        matrix: inv,
        determinant: det,
        condition,
    })
}

fn others(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Maximum absolute column sum.
pub fn norm1<const N: usize>(a: &Matrix<N>) -> f64 {
    (0..N)
        .map(|j| (0..N).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn mat_vec<const N: usize>(a: &Matrix<N>, x: &Vector<N>) -> Vector<N> {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (0..N).map(|j| a[i][j] * x[j]).sum();
    }
    out
}

pub fn dot<const N: usize>(a: &Vector<N>, b: &Vector<N>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x' A x`.
pub fn quad_form<const N: usize>(a: &Matrix<N>, x: &Vector<N>) -> f64 {
    dot(x, &mat_vec(a, x))
}

/// `a += w * v v'`.
#[inline]
pub fn add_outer<const N: usize>(a: &mut Matrix<N>, v: &Vector<N>, w: f64) {
    for i in 0..N {
        for j in i..N {
            let x = w * v[i] * v[j];
            a[i][j] += x;
            if j != i {
                a[j][i] += x;
            }
        }
    }
}

pub fn scale<const N: usize>(a: &mut Matrix<N>, s: f64) {
    for row in a.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
}
