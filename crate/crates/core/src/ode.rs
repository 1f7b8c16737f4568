//! Adaptive Dormand–Prince 5(4) integration with the standard fourth-order
//! continuous extension for dense output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}; last valid state {state:?}")]
    StepSizeUnderflow { t: f64, state: Vec<f64> },
    #[error("exceeded {max_steps} steps at t = {t}; last valid state {state:?}")]
    MaxSteps {
        max_steps: usize,
        t: f64,
        state: Vec<f64>,
    },
    #[error("non-finite derivative at t = {t}; last valid state {state:?}")]
    NonFinite { t: f64, state: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step; `f64::INFINITY` for none.
    pub max_step: f64,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_steps: 10_000_000,
            max_step: f64::INFINITY,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub t1: f64,
    r: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn start(&self) -> &[f64] {
        &self.r[0]
    }

    /// State at `t` in `[t0, t1]`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.r;
        for i in 0..out.len() {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.r[0].len()];
        self.eval_into(t, &mut out);
        out
    }

    /// State at the end of the step.
    pub fn end(&self) -> Vec<f64> {
        self.r[0].iter().zip(&self.r[1]).map(|(a, b)| a + b).collect()
    }
}

/// What the step observer wants next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Integrate `y' = f(t, y)` from `t0` to `t1 > t0`, calling `observer` after
/// every accepted step. Returns the final time and state (earlier than `t1`
/// if the observer stopped).
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<(f64, Vec<f64>), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&DenseStep) -> Control,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    if t1 <= t0 {
        return Ok((t, y));
    }
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    f(t, &y, &mut k[0]);
    if k[0].iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFinite { t, state: y });
    }
    let mut h = initial_step(&mut f, t, &y, &k[0], opts, t1 - t0, &mut ytmp, &mut ynew);
    let mut steps = 0usize;
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;

    while t < t1 {
        if steps >= opts.max_steps {
            return Err(OdeError::MaxSteps {
                max_steps: opts.max_steps,
                t,
                state: y,
            });
        }
        h = h.min(opts.max_step);
        let last = t + h >= t1 || t + 1.01 * h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { t, state: y });
        }
        steps += 1;

        let (k1, rest) = k.split_first_mut().unwrap();
        let [k2, k3, k4, k5, k6, k7] = rest else { unreachable!() };
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + h, &ynew, k7);

        let mut e2 = 0.0;
        let mut finite = true;
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            e2 += (err[i] / sc).powi(2);
            finite &= ynew[i].is_finite() && k7[i].is_finite();
        }
        let enorm = (e2 / n.max(1) as f64).sqrt();
        if !finite || !enorm.is_finite() {
            h *= 0.1;
            rejected_last = true;
            continue;
        }

        if enorm <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k1[i] - dy;
                r[0][i] = y[i];
                r[1][i] = dy;
                r[2][i] = bspl;
                r[3][i] = dy - h * k7[i] - bspl;
                r[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = DenseStep { t0: t, t1: t_new, r };
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(k1, k7);
            // PI step control (Hairer's DOPRI5 constants)
            let fac = enorm.powf(0.17) / fac_old.powf(0.04) / 0.9;
            let fac = fac.clamp(0.1, 5.0);
            fac_old = enorm.max(1e-4);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
            h = h_new;
            if observer(&step) == Control::Stop {
                return Ok((t, y));
            }
        } else {
            h /= (enorm.powf(0.2) / 0.9).min(5.0);
            rejected_last = true;
        }
    }
    Ok((t, y))
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    opts: &OdeOptions,
    span: f64,
    ytmp: &mut [f64],
    f1: &mut [f64],
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len().max(1) as f64;
    let sc = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span).min(opts.max_step);
    for i in 0..y.len() {
        ytmp[i] = y[i] + h0 * f0[i];
    }
    f(t + h0, ytmp, f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .enumerate()
        .map(|(i, (a, b))| ((a - b) / sc(i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(opts.max_step)
}

/// Integrate and sample the solution at increasing `times` (all within
/// `[t0, last time]`).
pub fn integrate_at<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<f64>>, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = Vec::with_capacity(times.len());
    let mut idx = 0;
    while idx < times.len() && times[idx] <= t0 {
        out.push(y0.to_vec());
        idx += 1;
    }
    let Some(&t_last) = times.last() else {
        return Ok(out);
    };
    let (_, y_end) = integrate(f, t0, y0, t_last, opts, |step| {
        while idx < times.len() && times[idx] <= step.t1 {
            if times[idx] == step.t1 {
                break;
            }
            out.push(step.eval(times[idx]));
            idx += 1;
        }
        Control::Continue
    })?;
    // Remaining sample times coincide with the final time.
    while out.len() < times.len() {
        out.push(y_end.clone());
    }
    Ok(out)
}

/// Solution value at `t1`.
pub fn integrate_to<F>(f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions) -> Result<Vec<f64>, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate(f, t0, y0, t1, opts, |_| Control::Continue).map(|(_, y)| y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay() {
        let opts = OdeOptions::with_tol(1e-12);
        let y = integrate_to(|_, y, d| d[0] = -y[0], 0.0, &[1.0], 1.0, &opts).unwrap();
        assert!((y[0] - (-1f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let opts = OdeOptions::with_tol(1e-11);
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.173).collect();
        let ys = integrate_at(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            &times,
            &opts,
        )
        .unwrap();
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-9, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn nonautonomous() {
        // y' = 2t y, y(0)=1 -> exp(t^2)
        let opts = OdeOptions::with_tol(1e-12);
        let y = integrate_to(|t, y, d| d[0] = 2.0 * t * y[0], 0.0, &[1.0], 1.5, &opts).unwrap();
        assert!((y[0] / 2.25f64.exp() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blow_up_reports_last_state() {
        let opts = OdeOptions::with_tol(1e-8);
        let err = integrate_to(|_, y, d| d[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &opts).unwrap_err();
        match err {
            OdeError::StepSizeUnderflow { t, state } | OdeError::NonFinite { t, state } => {
                assert!(t < 1.01 && t > 0.99, "{t} {state:?}");
                assert!(state[0] > 100.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
