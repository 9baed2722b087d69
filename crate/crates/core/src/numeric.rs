//! Small dense least-squares and interpolation helpers.

/// Solves the normal equations for `y ≈ Σ c_j f_j(x)` with `N` basis functions.
/// Returns `None` when the system is singular.
pub fn least_squares<const N: usize>(xs: &[f64], ys: &[f64], basis: impl Fn(f64) -> [f64; N]) -> Option<[f64; N]> {
    let mut ata = [[0.0; N]; N];
    let mut aty = [0.0; N];
    for (&x, &y) in xs.iter().zip(ys) {
        let f = basis(x);
        for i in 0..N {
            aty[i] += f[i] * y;
            for j in 0..N {
                ata[i][j] += f[i] * f[j];
            }
        }
    }
    // equilibrate columns so that badly scaled bases (x ~ 1e-5) stay solvable
    let d: [f64; N] = std::array::from_fn(|i| if ata[i][i] > 0.0 { 1.0 / ata[i][i].sqrt() } else { 1.0 });
    for i in 0..N {
        aty[i] *= d[i];
        for j in 0..N {
            ata[i][j] *= d[i] * d[j];
        }
    }
    let y = solve(ata, aty)?;
    Some(std::array::from_fn(|i| y[i] * d[i]))
}

/// Gaussian elimination with partial pivoting.
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= scale * 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Straight line fit, returned as `(intercept, slope)` about `x = center`.
pub fn line_fit(xs: &[f64], ys: &[f64], center: f64) -> Option<(f64, f64)> {
    least_squares(xs, ys, |x| [1.0, x - center]).map(|[c, s]| (c, s))
}

/// Quadratic fit `c0 + c1 (x-center) + c2 (x-center)²`.
pub fn quadratic_fit(xs: &[f64], ys: &[f64], center: f64) -> Option<[f64; 3]> {
    least_squares(xs, ys, |x| {
        let d = x - center;
        [1.0, d, d * d]
    })
}

/// Vertex `(x, y)` of the parabola through three points.
pub fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> Option<(f64, f64)> {
    // divided differences, so the result does not depend on the x scale
    let f01 = (p1.1 - p0.1) / (p1.0 - p0.0);
    let f12 = (p2.1 - p1.1) / (p2.0 - p1.0);
    let c2 = (f12 - f01) / (p2.0 - p0.0);
    let c1 = f01 + c2 * (p1.0 - p0.0);
    if !(c2 != 0.0 && c2.is_finite() && c1.is_finite()) {
        return None;
    }
    let d = -c1 / (2.0 * c2);
    Some((p1.0 + d, p1.1 + c1 * d + c2 * d * d))
}

pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Second-order first derivative on a possibly non-uniform grid: three-point
/// central weights inside, three-point one-sided at the ends.
pub fn derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let d = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return vec![d, d];
    }
    let mut out = Vec::with_capacity(n);
    out.push(three_point(xs[0], [xs[0], xs[1], xs[2]], [ys[0], ys[1], ys[2]]));
    for i in 1..n - 1 {
        out.push(three_point(xs[i], [xs[i - 1], xs[i], xs[i + 1]], [ys[i - 1], ys[i], ys[i + 1]]));
    }
    out.push(three_point(xs[n - 1], [xs[n - 3], xs[n - 2], xs[n - 1]], [ys[n - 3], ys[n - 2], ys[n - 1]]));
    out
}

/// Derivative at `x` of the Lagrange parabola through three points.
fn three_point(x: f64, xs: [f64; 3], ys: [f64; 3]) -> f64 {
    let [x0, x1, x2] = xs;
    ys[0] * ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2))
        + ys[1] * ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2))
        + ys[2] * ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1))
}

/// Linear interpolation on sorted `xs`; `None` outside the range.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let n = xs.len();
    if n == 0 || !(x >= xs[0] && x <= xs[n - 1]) {
        return None;
    }
    if n == 1 {
        return Some(ys[0]);
    }
    let hi = xs.partition_point(|&v| v < x).clamp(1, n - 1);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    Some(ys[lo] + t * (ys[hi] - ys[lo]))
}
