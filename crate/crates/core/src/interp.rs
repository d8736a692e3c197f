//! Cubic interpolation: Hermite tables on nonuniform nodes and cubic B-spline
//! shifts of uniformly sampled lines (periodic or with zero boundary values).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Piecewise cubic Hermite interpolant through `(x_i, y_i)` with slopes `d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Hermite {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, ds: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.len() != ds.len() {
            return Err(Error::Grid("Hermite table needs >= 2 nodes and matching lengths".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("Hermite nodes must be strictly increasing".into()));
        }
        Ok(Self { xs, ys, ds })
    }

    /// Shape-preserving (Fritsch–Carlson) slopes, so monotone data give a
    /// monotone interpolant.
    pub fn monotone(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::Grid("monotone table needs >= 2 nodes and matching lengths".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self::new(xs, ys, ds)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn slopes(&self) -> &[f64] {
        &self.ds
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value and first derivative. Outside the nodes the end cubic is
    /// continued; callers decide whether that is allowed.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (d0, d1) = (self.ds[i] * h, self.ds[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv / h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Cubic B-spline weights of the four coefficients `c[i-1..=i+2]` at local
/// position `θ ∈ [0, 1)` inside cell `i`.
#[inline]
fn bspline_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Cubic B-spline interpolation of uniformly sampled lines.
///
/// `shift_*` replaces `line[j]` by the spline value at `j - d` (in units of
/// the grid step), which is the semi-Lagrangian update for a constant
/// displacement `d`.
#[derive(Debug, Clone)]
pub struct SplineShifter {
    n: usize,
    coef: Vec<f64>,
    cp: Vec<f64>,
    z: Vec<f64>,
}

impl SplineShifter {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            coef: vec![0.0; n],
            cp: vec![0.0; n],
            z: vec![0.0; n],
        }
    }

    /// Solve `(c[j-1] + 4 c[j] + c[j+1]) / 6 = f[j]` with `c[-1] = c[n] = 0`.
    fn solve_zero(rhs: &[f64], c: &mut [f64], cp: &mut [f64]) {
        let n = rhs.len();
        let (a, b) = (1.0 / 6.0, 4.0 / 6.0);
        cp[0] = a / b;
        c[0] = rhs[0] / b;
        for i in 1..n {
            let m = b - a * cp[i - 1];
            cp[i] = a / m;
            c[i] = (rhs[i] - a * c[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            c[i] -= cp[i] * c[i + 1];
        }
    }

    /// Cyclic version through Sherman–Morrison.
    fn solve_periodic(&mut self, rhs: &[f64]) {
        let n = self.n;
        if n < 3 {
            match n {
                1 => self.coef[0] = rhs[0],
                _ => {
                    // both neighbours coincide: (4 c0 + 2 c1) / 6 = f0
                    let det = (4.0 * 4.0 - 2.0 * 2.0) / 36.0;
                    self.coef[0] = (4.0 / 6.0 * rhs[0] - 2.0 / 6.0 * rhs[1]) / det;
                    self.coef[1] = (4.0 / 6.0 * rhs[1] - 2.0 / 6.0 * rhs[0]) / det;
                }
            }
            return;
        }
        let (a, b) = (1.0 / 6.0, 4.0 / 6.0);
        let gamma = -b;
        // modified diagonal: first b - gamma, last b - a*a/gamma
        let mut diag = vec![b; n];
        diag[0] = b - gamma;
        diag[n - 1] = b - a * a / gamma;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = a;
        let tri = |r: &[f64], out: &mut [f64], cp: &mut [f64]| {
            cp[0] = a / diag[0];
            out[0] = r[0] / diag[0];
            for i in 1..n {
                let m = diag[i] - a * cp[i - 1];
                cp[i] = a / m;
                out[i] = (r[i] - a * out[i - 1]) / m;
            }
            for i in (0..n - 1).rev() {
                out[i] -= cp[i] * out[i + 1];
            }
        };
        tri(rhs, &mut self.coef, &mut self.cp);
        tri(&u, &mut self.z, &mut self.cp);
        let vy = self.coef[0] + a / gamma * self.coef[n - 1];
        let vz = self.z[0] + a / gamma * self.z[n - 1];
        let fac = vy / (1.0 + vz);
        for i in 0..n {
            self.coef[i] -= fac * self.z[i];
        }
    }

    pub fn shift_periodic(&mut self, line: &mut [f64], d: f64) {
        let n = self.n;
        assert_eq!(line.len(), n);
        self.solve_periodic(line);
        let nf = n as f64;
        let dm = d - nf * (d / nf).floor();
        let k = dm.floor();
        let t0 = dm - k;
        // foot j - d = (j - k - 1) + (1 - t0)
        let (off, t) = if t0 == 0.0 { (k as isize, 0.0) } else { (k as isize + 1, 1.0 - t0) };
        let w = bspline_weights(t);
        let ni = n as isize;
        for (j, out) in line.iter_mut().enumerate() {
            let i = j as isize - off;
            let mut v = 0.0;
            for (m, wm) in w.iter().enumerate() {
                let idx = (i - 1 + m as isize).rem_euclid(ni) as usize;
                v += wm * self.coef[idx];
            }
            *out = v;
        }
    }

    pub fn shift_zero(&mut self, line: &mut [f64], d: f64) {
        let n = self.n;
        assert_eq!(line.len(), n);
        Self::solve_zero(line, &mut self.coef, &mut self.cp);
        let k = d.floor();
        let t0 = d - k;
        let (off, t) = if t0 == 0.0 { (k as isize, 0.0) } else { (k as isize + 1, 1.0 - t0) };
        let w = bspline_weights(t);
        let ni = n as isize;
        for (j, out) in line.iter_mut().enumerate() {
            let i = j as isize - off;
            let mut v = 0.0;
            for (m, wm) in w.iter().enumerate() {
                let idx = i - 1 + m as isize;
                if idx >= 0 && idx < ni {
                    v += wm * self.coef[idx as usize];
                }
            }
            *out = v;
        }
    }
}
