//! Periodic Hermite interpolation on a uniform phase grid over `[0, 2pi)`.

use std::f64::consts::TAU;

/// Uniform grid of `n` nodes `theta_g = g * 2pi / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    n: usize,
    h: f64,
}

impl PhaseGrid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 4, "phase grid needs at least 4 nodes");
        Self { n, h: TAU / n as f64 }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn node(&self, g: usize) -> f64 {
        g as f64 * self.h
    }

    /// Interval index and local coordinate `s in [0, 1)` of `theta`.
    #[inline]
    pub fn locate(&self, theta: f64) -> (usize, f64) {
        let u = theta.rem_euclid(TAU) / self.h;
        let mut i = u.floor() as usize;
        let mut s = u - i as f64;
        if i >= self.n {
            // rem_euclid can round up to exactly TAU
            i = 0;
            s = 0.0;
        }
        (i, s)
    }
}

/// Wrap to `[0, 2pi)`.
#[inline]
pub fn wrap(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wrap to `(-pi, pi]`.
#[inline]
pub fn wrap_signed(d: f64) -> f64 {
    let w = (d + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    if w <= -std::f64::consts::PI {
        w + TAU
    } else {
        w
    }
}

/// Quintic Hermite basis weights on `s in [0,1]` and their first and second
/// `s`-derivatives, ordered (y0, y0', y0'', y1, y1', y1'').
#[inline]
fn quintic_basis(s: f64) -> [[f64; 6]; 3] {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 0.5 * (s3 - 2.0 * s4 + s5);
    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let e0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let e1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let e2 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
    let e4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let e5 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);
    [
        [h0, h1, h2, 1.0 - h0, h4, h5],
        [d0, d1, d2, -d0, d4, d5],
        [e0, e1, e2, -e0, e4, e5],
    ]
}

/// Cubic Hermite weights (y0, y0', y1, y1') and their `s`-derivatives.
#[inline]
fn cubic_basis(s: f64) -> [[f64; 4]; 2] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        [2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2],
        [6.0 * s2 - 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 2.0 * s],
    ]
}

/// `C^2` periodic interpolant of a vector-valued curve from its values and
/// first two derivatives at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuinticCurve {
    grid: PhaseGrid,
    dim: usize,
    y: Vec<f64>,
    dy: Vec<f64>,
    ddy: Vec<f64>,
}

impl QuinticCurve {
    /// Node-major arrays of length `n * dim`.
    pub fn new(grid: PhaseGrid, dim: usize, y: Vec<f64>, dy: Vec<f64>, ddy: Vec<f64>) -> Self {
        assert_eq!(y.len(), grid.len() * dim);
        assert_eq!(dy.len(), y.len());
        assert_eq!(ddy.len(), y.len());
        Self { grid, dim, y, dy, ddy }
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    pub fn node_values(&self, g: usize) -> (&[f64], &[f64], &[f64]) {
        let r = g * self.dim..(g + 1) * self.dim;
        (&self.y[r.clone()], &self.dy[r.clone()], &self.ddy[r])
    }

    /// Value, first and second derivative at `theta`.
    #[inline]
    pub fn eval_into(&self, theta: f64, v: &mut [f64], dv: &mut [f64], ddv: &mut [f64]) {
        let (i, s) = self.grid.locate(theta);
        let j = if i + 1 == self.grid.n { 0 } else { i + 1 };
        let h = self.grid.h;
        let [w, wd, wdd] = quintic_basis(s);
        let (a, b) = (i * self.dim, j * self.dim);
        for c in 0..self.dim {
            let p = [
                self.y[a + c],
                h * self.dy[a + c],
                h * h * self.ddy[a + c],
                self.y[b + c],
                h * self.dy[b + c],
                h * h * self.ddy[b + c],
            ];
            v[c] = (0..6).map(|q| w[q] * p[q]).sum();
            dv[c] = (0..6).map(|q| wd[q] * p[q]).sum::<f64>() / h;
            ddv[c] = (0..6).map(|q| wdd[q] * p[q]).sum::<f64>() / (h * h);
        }
    }
}

/// `C^1` periodic interpolant from values and first derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicCurve {
    grid: PhaseGrid,
    dim: usize,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl CubicCurve {
    pub fn new(grid: PhaseGrid, dim: usize, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert_eq!(y.len(), grid.len() * dim);
        assert_eq!(dy.len(), y.len());
        Self { grid, dim, y, dy }
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_values(&self, g: usize) -> (&[f64], &[f64]) {
        let r = g * self.dim..(g + 1) * self.dim;
        (&self.y[r.clone()], &self.dy[r])
    }

    #[inline]
    pub fn eval_into(&self, theta: f64, v: &mut [f64], dv: &mut [f64]) {
        let (i, s) = self.grid.locate(theta);
        let j = if i + 1 == self.grid.n { 0 } else { i + 1 };
        let h = self.grid.h;
        let [w, wd] = cubic_basis(s);
        let (a, b) = (i * self.dim, j * self.dim);
        for c in 0..self.dim {
            let p = [self.y[a + c], h * self.dy[a + c], self.y[b + c], h * self.dy[b + c]];
            v[c] = w[0] * p[0] + w[1] * p[1] + w[2] * p[2] + w[3] * p[3];
            dv[c] = (wd[0] * p[0] + wd[1] * p[1] + wd[2] * p[2] + wd[3] * p[3]) / h;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> (PhaseGrid, Vec<f64>, Vec<f64>, Vec<f64>) {
        let grid = PhaseGrid::new(n);
        let y = (0..n).map(|g| (grid.node(g)).sin() + 0.3 * (2.0 * grid.node(g)).cos()).collect();
        let dy = (0..n).map(|g| grid.node(g).cos() - 0.6 * (2.0 * grid.node(g)).sin()).collect();
        let ddy = (0..n).map(|g| -grid.node(g).sin() - 1.2 * (2.0 * grid.node(g)).cos()).collect();
        (grid, y, dy, ddy)
    }

    #[test]
    fn quintic_is_exact_at_nodes_and_accurate_between() {
        let (grid, y, dy, ddy) = sample(128);
        let c = QuinticCurve::new(grid, 1, y.clone(), dy.clone(), ddy);
        let (mut v, mut d, mut dd) = ([0.0], [0.0], [0.0]);
        for g in 0..128 {
            c.eval_into(grid.node(g), &mut v, &mut d, &mut dd);
            assert!((v[0] - y[g]).abs() < 1e-15);
            assert!((d[0] - dy[g]).abs() < 1e-12);
        }
        for q in 0..500 {
            let t = q as f64 * 0.0377;
            c.eval_into(t, &mut v, &mut d, &mut dd);
            assert!((v[0] - (t.sin() + 0.3 * (2.0 * t).cos())).abs() < 1e-10);
            assert!((d[0] - (t.cos() - 0.6 * (2.0 * t).sin())).abs() < 1e-8);
        }
    }

    #[test]
    fn cubic_is_periodic() {
        let (grid, y, dy, _) = sample(32);
        let c = CubicCurve::new(grid, 1, y, dy);
        let (mut a, mut da, mut b, mut db) = ([0.0], [0.0], [0.0], [0.0]);
        c.eval_into(0.4, &mut a, &mut da);
        c.eval_into(0.4 + TAU, &mut b, &mut db);
        assert!((a[0] - b[0]).abs() < 1e-14);
        assert!((da[0] - db[0]).abs() < 1e-13);
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap(-0.5), TAU - 0.5);
        assert!((wrap_signed(TAU - 0.1) + 0.1).abs() < 1e-15);
        assert_eq!(wrap_signed(std::f64::consts::PI), std::f64::consts::PI);
    }
}
