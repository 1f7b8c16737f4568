//! Small dense row-major matrices for the per-event hot paths, where
//! allocating an `nalgebra::DMatrix` every call would dominate the cost.

use smallvec::SmallVec;

/// Up to 4 x 4 lives on the stack.
pub type Small = SmallVec<[f64; 16]>;

/// Inverse of the row-major `k x k` matrix `a`, `None` if singular.
pub fn invert(a: &[f64], k: usize) -> Option<Small> {
    if k == 1 {
        return (a[0] != 0.0).then(|| SmallVec::from_slice(&[1.0 / a[0]]));
    }
    if k == 2 {
        let det = a[0] * a[3] - a[1] * a[2];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        return Some(SmallVec::from_slice(&[a[3] * inv, -a[1] * inv, -a[2] * inv, a[0] * inv]));
    }
    // Gauss-Jordan with partial pivoting.
    let mut m: Small = SmallVec::from_slice(a);
    let mut inv: Small = SmallVec::from_elem(0.0, k * k);
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| m[x * k + col].abs().total_cmp(&m[y * k + col].abs()))
            .expect("nonempty range");
        if m[pivot * k + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for j in 0..k {
                m.swap(pivot * k + j, col * k + j);
                inv.swap(pivot * k + j, col * k + j);
            }
        }
        let d = 1.0 / m[col * k + col];
        for j in 0..k {
            m[col * k + j] *= d;
            inv[col * k + j] *= d;
        }
        for r in 0..k {
            if r != col {
                let f = m[r * k + col];
                if f != 0.0 {
                    for j in 0..k {
                        m[r * k + j] -= f * m[col * k + j];
                        inv[r * k + j] -= f * inv[col * k + j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// `out = a v`.
pub fn mat_vec(a: &[f64], k: usize, v: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate().take(k) {
        *o = (0..k).map(|c| a[r * k + c] * v[c]).sum();
    }
}

/// `a b` for row-major `k x k` matrices.
pub fn mat_mul(a: &[f64], b: &[f64], k: usize) -> Small {
    let mut out: Small = SmallVec::from_elem(0.0, k * k);
    for r in 0..k {
        for c in 0..k {
            out[r * k + c] = (0..k).map(|j| a[r * k + j] * b[j * k + c]).sum();
        }
    }
    out
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}
