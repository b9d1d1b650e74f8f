//! Quadrature, differencing and summation on uniform grids.
//!
//! Every reduction here runs in a fixed order so results do not depend on
//! how the caller partitioned the work that produced the summands.

/// Pairwise (cascade) summation with a fixed split point at each level.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Fixed-order weighted sum `Σ w_i f_i`.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    let prods: Vec<f64> = weights.iter().zip(values).map(|(w, f)| w * f).collect();
    pairwise_sum(&prods)
}

/// Composite Simpson weights over one period of a uniform periodic grid with
/// `n` nodes (node `n` identified with node 0). `n` must be even.
pub fn periodic_simpson_weights(n: usize, dr: f64) -> Vec<f64> {
    assert!(
        n >= 2 && n.is_multiple_of(2),
        "periodic Simpson needs an even node count"
    );
    (0..n)
        .map(|j| {
            if j % 2 == 0 {
                2.0 * dr / 3.0
            } else {
                4.0 * dr / 3.0
            }
        })
        .collect()
}

/// Composite Simpson weights for `points` nodes on a closed uniform grid.
/// An odd number of intervals closes with the 3/8 rule on the last three.
pub fn closed_simpson_weights(points: usize, dr: f64) -> Vec<f64> {
    assert!(points >= 2, "need at least two nodes");
    let intervals = points - 1;
    let mut w = vec![0.0; points];
    if intervals == 1 {
        w[0] = 0.5 * dr;
        w[1] = 0.5 * dr;
        return w;
    }
    let simpson_intervals = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals - 3
    };
    let mut i = 0;
    while i < simpson_intervals {
        w[i] += dr / 3.0;
        w[i + 1] += 4.0 * dr / 3.0;
        w[i + 2] += dr / 3.0;
        i += 2;
    }
    if simpson_intervals < intervals {
        let s = simpson_intervals;
        w[s] += 3.0 * dr / 8.0;
        w[s + 1] += 9.0 * dr / 8.0;
        w[s + 2] += 9.0 * dr / 8.0;
        w[s + 3] += 3.0 * dr / 8.0;
    }
    w
}

/// Cumulative integral `I_j = ∫_{r_0}^{r_j} f` on a uniform grid. Even nodes
/// use composite Simpson; odd nodes add a four-point single-interval rule.
pub fn cumulative_simpson(f: &[f64], dr: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * dr * (f[0] + f[1]);
        return out;
    }
    for j in 1..n {
        if j % 2 == 0 {
            out[j] = out[j - 2] + dr / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
        } else if j >= 2 && j + 1 < n {
            out[j] =
                out[j - 1] + dr / 24.0 * (-f[j - 2] + 13.0 * f[j - 1] + 13.0 * f[j] - f[j + 1]);
        } else if j + 2 < n {
            out[j] =
                out[j - 1] + dr / 24.0 * (9.0 * f[j - 1] + 19.0 * f[j] - 5.0 * f[j + 1] + f[j + 2]);
        } else if j >= 3 {
            out[j] =
                out[j - 1] + dr / 24.0 * (f[j - 3] - 5.0 * f[j - 2] + 19.0 * f[j - 1] + 9.0 * f[j]);
        } else if j + 1 < n {
            out[j] = out[j - 1] + dr / 12.0 * (5.0 * f[j - 1] + 8.0 * f[j] - f[j + 1]);
        } else {
            out[j] = out[j - 1] + dr / 12.0 * (-f[j - 2] + 8.0 * f[j - 1] + 5.0 * f[j]);
        }
    }
    out
}

/// Cumulative integral over a periodic grid. Returns `n + 1` values: node 0
/// through node `n`, the last being the full-period integral.
pub fn cumulative_simpson_periodic(f: &[f64], dr: f64) -> Vec<f64> {
    let n = f.len();
    let at = |k: isize| f[k.rem_euclid(n as isize) as usize];
    let mut out = vec![0.0; n + 1];
    for j in 1..=n {
        let k = j as isize;
        if j % 2 == 0 {
            out[j] = out[j - 2] + dr / 3.0 * (at(k - 2) + 4.0 * at(k - 1) + at(k));
        } else {
            out[j] =
                out[j - 1] + dr / 24.0 * (-at(k - 2) + 13.0 * at(k - 1) + 13.0 * at(k) - at(k + 1));
        }
    }
    out
}

/// Fourth-order central first derivative on a periodic grid.
pub fn periodic_derivative(f: &[f64], dr: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 5);
    let inv = 1.0 / (12.0 * dr);
    for j in 0..n {
        let m2 = f[(j + n - 2) % n];
        let m1 = f[(j + n - 1) % n];
        let p1 = f[(j + 1) % n];
        let p2 = f[(j + 2) % n];
        out[j] = (m2 - 8.0 * m1 + 8.0 * p1 - p2) * inv;
    }
}

/// Fourth-order first derivative on a bounded uniform grid: central in the
/// interior, one-sided five-point stencils at the two nodes nearest each end.
pub fn bounded_derivative(f: &[f64], dr: f64, out: &mut [f64]) {
    let n = f.len();
    assert!(n >= 5, "fourth-order differencing needs five nodes");
    let inv = 1.0 / (12.0 * dr);
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * inv;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * inv;
    for j in 2..n - 2 {
        out[j] = (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) * inv;
    }
    let (a, b, c, d, e) = (f[n - 5], f[n - 4], f[n - 3], f[n - 2], f[n - 1]);
    out[n - 2] = (3.0 * e + 10.0 * d - 18.0 * c + 6.0 * b - a) * inv;
    out[n - 1] = (25.0 * e - 48.0 * d + 36.0 * c - 16.0 * b + 3.0 * a) * inv;
}

/// Five-point central derivative of a scalar function at `x` with step `h`.
pub fn central_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Maximum of absolute values; zero for an empty slice, NaN-propagating.
pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |m, &x| {
        if x.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(x.abs())
        }
    })
}
