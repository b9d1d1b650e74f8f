//! Cubic interpolating splines for tabulated metric data.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
    periodic: bool,
}

impl CubicSpline {
    /// Natural spline (zero curvature at both ends).
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(x, y)?;
        let n = x.len() - 1;
        let mut m = vec![0.0; n + 1];
        if n >= 2 {
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let k = n - 1;
            let mut sub = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut sup = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n {
                sub[i - 1] = h[i - 1];
                diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
                sup[i - 1] = h[i];
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
            }
            let sol = thomas(&sub, &diag, &sup, &rhs);
            m[1..n].copy_from_slice(&sol);
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
            periodic: false,
        })
    }

    /// Periodic spline; requires `y[last] == y[0]` (checked by the caller's
    /// validation, enforced here by using `y[0]` at both ends).
    pub fn periodic(x: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(x, y)?;
        let n = x.len() - 1;
        if n < 3 {
            return Err(Error::input("periodic spline needs at least four knots"));
        }
        let mut y = y.to_vec();
        y[n] = y[0];
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // Unknowns M_0..M_{n-1}, cyclic tridiagonal.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let hm = if i == 0 { h[n - 1] } else { h[i - 1] };
            let hp = h[i];
            let ym = if i == 0 { y[n - 1] } else { y[i - 1] };
            sub[i] = hm;
            diag[i] = 2.0 * (hm + hp);
            sup[i] = hp;
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hp - (y[i] - ym) / hm);
        }
        let sol = cyclic_thomas(&sub, &diag, &sup, &rhs);
        let mut m = sol;
        m.push(m[0]);
        Ok(Self {
            x: x.to_vec(),
            y,
            m,
            periodic: true,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (x0, xn) = (self.x[0], *self.x.last().unwrap());
        let x = if self.periodic {
            x0 + (x - x0).rem_euclid(xn - x0)
        } else {
            x
        };
        let i = match self.x.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let a = self.x[i + 1] - x;
        let b = x - self.x[i];
        self.m[i] * a * a * a / (6.0 * h)
            + self.m[i + 1] * b * b * b / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * a
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }
}

fn check_knots(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::structural(
            "spline knots and values differ in length",
        ));
    }
    if x.len() < 2 {
        return Err(Error::input("spline needs at least two knots"));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("spline knots must be strictly increasing"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::input("spline data must be finite"));
    }
    Ok(())
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Cyclic tridiagonal solve via Sherman–Morrison; `sub[0]` couples row 0 to
/// the last unknown and `sup[n-1]` couples the last row to unknown 0.
fn cyclic_thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let mut s = sub.to_vec();
    s[0] = 0.0;
    let mut p = sup.to_vec();
    p[n - 1] = 0.0;
    let x = thomas(&s, &b, &p, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(&s, &b, &p, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}
