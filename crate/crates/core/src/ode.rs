//! Dormand–Prince 5(4) with continuous extension (Hairer's `contd5`),
//! landing exactly on requested output abscissae.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on `|h|`; `0` means the whole span.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-11,
            h_max: 0.0,
            max_steps: 2_000_000,
        }
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rc: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rc;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.rc[0].len()];
        self.eval_into(t, &mut out);
        out
    }

    pub fn start(&self) -> &[f64] {
        &self.rc[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Completed,
    /// The solution left the admissible region at `t_exit`.
    Exited { t_exit: f64 },
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub steps: Vec<DenseStep>,
    /// Step end points, starting with the initial state.
    pub nodes: Vec<(f64, Vec<f64>)>,
    /// States at the requested outputs reached before stopping.
    pub outputs: Vec<(f64, Vec<f64>)>,
    pub stop: Stop,
    pub t_start: f64,
    pub t_end: f64,
    pub rejected: usize,
    pub evaluations: usize,
}

impl OdeSolution {
    pub fn dim(&self) -> usize {
        self.nodes[0].1.len()
    }

    fn forward(&self) -> bool {
        self.t_end >= self.t_start
    }

    /// Index of the step covering `t`.
    pub fn step_index(&self, t: f64) -> Option<usize> {
        let (lo, hi) = if self.forward() {
            (self.t_start, self.t_end)
        } else {
            (self.t_end, self.t_start)
        };
        if self.steps.is_empty() || t < lo || t > hi {
            return None;
        }
        let fwd = self.forward();
        let idx = self.steps.partition_point(|s| if fwd { s.t1() < t } else { s.t1() > t });
        Some(idx.min(self.steps.len() - 1))
    }

    /// Dense-output state at `t`, or `None` outside the integrated range.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        if self.steps.is_empty() {
            return (t == self.t_start).then(|| self.nodes[0].1.clone());
        }
        self.step_index(t).map(|i| self.steps[i].eval(t))
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
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

/// Integrate `y' = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `outputs` must be monotone in the integration direction; steps are clipped
/// to land on each of them. `inside(t, y)` marks the admissible region: when an
/// accepted step ends outside, the exit is located by bisection on the dense
/// output and integration stops with [`Stop::Exited`].
pub fn integrate<F, G>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    outputs: &[f64],
    mut inside: G,
    opts: &OdeOptions,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    G: FnMut(f64, &[f64]) -> bool,
{
    let n = y0.len();
    let span = t_end - t0;
    let dir = if span >= 0.0 { 1.0 } else { -1.0 };
    let h_max = if opts.h_max > 0.0 { opts.h_max } else { span.abs() };
    let mut sol = OdeSolution {
        steps: Vec::new(),
        nodes: vec![(t0, y0.to_vec())],
        outputs: Vec::new(),
        stop: Stop::Completed,
        t_start: t0,
        t_end: t0,
        rejected: 0,
        evaluations: 0,
    };
    let mut out_iter = outputs.iter().copied().peekable();
    while let Some(&o) = out_iter.peek() {
        if (o - t0) * dir < 0.0 {
            out_iter.next();
        } else if o == t0 {
            sol.outputs.push((t0, y0.to_vec()));
            out_iter.next();
        } else {
            break;
        }
    }
    if span == 0.0 {
        return Ok(sol);
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    rhs(t, &y, &mut k1)?;
    sol.evaluations += 1;

    let sk = |a: &[f64], b: &[f64], i: usize| opts.atol + opts.rtol * a[i].abs().max(b[i].abs());
    let rms = |v: &[f64], scale: &dyn Fn(usize) -> f64| {
        (v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
    };

    // initial step (Hairer & Wanner, II.4)
    let mut h = {
        let d0 = rms(&y, &|i| opts.atol + opts.rtol * y[i].abs());
        let d1 = rms(&k1, &|i| opts.atol + opts.rtol * y[i].abs());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(h_max).min(span.abs());
        let y1: Vec<f64> = (0..n).map(|i| y[i] + dir * h0 * k1[i]).collect();
        let mut f1 = vec![0.0; n];
        let ok = rhs(t + dir * h0, &y1, &mut f1).is_ok();
        sol.evaluations += 1;
        if ok {
            let diff: Vec<f64> = (0..n).map(|i| f1[i] - k1[i]).collect();
            let d2 = rms(&diff, &|i| opts.atol + opts.rtol * y[i].abs()) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1).min(h_max)
        } else {
            h0 * 0.1
        }
    };

    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut last_rejected = false;
    let mut steps = 0usize;
    let h_floor = |t: f64| 1e-13 * (1.0 + t.abs());

    loop {
        let remaining = (t_end - t) * dir;
        if remaining <= h_floor(t) * 1e-3 {
            break;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepFailure {
                r: t,
                message: format!("exceeded {} steps", opts.max_steps),
            });
        }
        h = h.min(h_max).min(remaining);
        let mut landing = None;
        if let Some(&o) = out_iter.peek() {
            let to_out = (o - t) * dir;
            if to_out <= h * (1.0 + 1e-12) {
                h = to_out;
                landing = Some(o);
            }
        }
        let step_end_exact = if remaining <= h * (1.0 + 1e-12) {
            h = remaining;
            Some(t_end)
        } else {
            landing
        };
        let hs = dir * h;

        k[0].copy_from_slice(&k1);
        let stage = |y: &[f64], k: &[Vec<f64>], coef: &[(usize, f64)], out: &mut [f64]| {
            for i in 0..n {
                let mut acc = 0.0;
                for &(j, a) in coef {
                    acc += a * k[j][i];
                }
                out[i] = y[i] + hs * acc;
            }
        };
        let mut failed: Option<Error> = None;
        let tableau: [(f64, &[(usize, f64)]); 6] = [
            (C2, &[(0, A21)]),
            (C3, &[(0, A31), (1, A32)]),
            (C4, &[(0, A41), (1, A42), (2, A43)]),
            (C5, &[(0, A51), (1, A52), (2, A53), (3, A54)]),
            (1.0, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]),
            (1.0, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]),
        ];
        for (s, (c, coef)) in tableau.iter().enumerate() {
            let target = if s == 5 { &mut y_new } else { &mut ytmp };
            stage(&y, &k, coef, target);
            let tt = if *c == 1.0 { step_end_exact.unwrap_or(t + hs) } else { t + c * hs };
            let (_, tail) = k.split_at_mut(s + 1);
            if let Err(e) = rhs(tt, if s == 5 { &y_new } else { &ytmp }, &mut tail[0]) {
                failed = Some(e);
                break;
            }
            sol.evaluations += 1;
        }
        if let Some(e) = failed {
            sol.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            if h < h_floor(t) {
                // The slope leaves the admissible region immediately: treat as an exit.
                let probe: Vec<f64> = (0..n).map(|i| y[i] + dir * 1e-6 * (1.0 + t.abs()) * k1[i]).collect();
                if !inside(t, &probe) {
                    sol.stop = Stop::Exited { t_exit: t };
                    sol.t_end = t;
                    return Ok(sol);
                }
                return Err(Error::StepFailure {
                    r: t,
                    message: e.to_string(),
                });
            }
            continue;
        }

        for i in 0..n {
            err[i] = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        }
        let e = rms(&err, &|i| sk(&y, &y_new, i));
        if !e.is_finite() {
            sol.rejected += 1;
            h *= 0.25;
            last_rejected = true;
            if h < h_floor(t) {
                return Err(Error::StepFailure {
                    r: t,
                    message: "non-finite error estimate".into(),
                });
            }
            continue;
        }
        if e > 1.0 {
            sol.rejected += 1;
            let fac = (0.9 * e.powf(-0.2)).max(0.2);
            h *= fac;
            last_rejected = true;
            if h < h_floor(t) {
                return Err(Error::StepFailure {
                    r: t,
                    message: format!("tolerance unreachable; error ratio {e:.3e}"),
                });
            }
            continue;
        }

        // accepted: build the continuous extension
        let t_new = step_end_exact.unwrap_or(t + hs);
        let mut rc: [Vec<f64>; 5] = Default::default();
        rc[0] = y.clone();
        rc[1] = (0..n).map(|i| y_new[i] - y[i]).collect();
        rc[2] = (0..n).map(|i| hs * k[0][i] - rc[1][i]).collect();
        rc[3] = (0..n).map(|i| rc[1][i] - hs * k[6][i] - rc[2][i]).collect();
        rc[4] = (0..n)
            .map(|i| hs * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]))
            .collect();
        let step = DenseStep { t0: t, h: t_new - t, rc };

        if !inside(t_new, &y_new) {
            let (mut a, mut b) = (t, t_new);
            let mut buf = vec![0.0; n];
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                step.eval_into(m, &mut buf);
                if inside(m, &buf) {
                    a = m;
                } else {
                    b = m;
                }
            }
            while let Some(&o) = out_iter.peek() {
                if (o - a) * dir <= 0.0 {
                    sol.outputs.push((o, step.eval(o)));
                    out_iter.next();
                } else {
                    break;
                }
            }
            sol.t_end = a;
            sol.steps.push(step);
            sol.stop = Stop::Exited { t_exit: a };
            return Ok(sol);
        }

        k1.copy_from_slice(&k[6]);
        t = t_new;
        y.copy_from_slice(&y_new);
        sol.steps.push(step);
        sol.nodes.push((t, y.clone()));
        sol.t_end = t;
        while let Some(&o) = out_iter.peek() {
            if (o - t) * dir <= 0.0 {
                let v = if Some(o) == landing || o == t { y.clone() } else { sol.steps.last().unwrap().eval(o) };
                sol.outputs.push((o, v));
                out_iter.next();
            } else {
                break;
            }
        }

        let mut fac = 0.9 * e.max(1e-10).powf(-0.2);
        fac = fac.clamp(0.2, 10.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        // do not let a clipped landing step shrink the next proposal
        let proposal = h * fac;
        h = if landing.is_some() { proposal.max(h) } else { proposal };
    }
    sol.t_end = t_end;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64], d: &mut [f64]) -> Result<()> {
        d[0] = y[1];
        d[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_oscillator_period() {
        let tp = 2.0 * std::f64::consts::PI;
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], tp, &[], |_, _| true, &OdeOptions::default()).unwrap();
        let (t, y) = sol.nodes.last().unwrap();
        assert_eq!(*t, tp);
        assert!(y[0].abs() < 1e-8 && (y[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dense_output_tracks_solution() {
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], 10.0, &[], |_, _| true, &OdeOptions::default()).unwrap();
        for i in 0..100 {
            let t = 0.1 * i as f64 + 0.037;
            let y = sol.eval(t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-7, "t={t}");
        }
        assert!(sol.eval(10.5).is_none());
    }

    #[test]
    fn lands_on_outputs_and_runs_backwards() {
        let outs: Vec<f64> = (0..=10).map(|i| -0.5 * i as f64).collect();
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], -5.0, &outs, |_, _| true, &OdeOptions::default()).unwrap();
        assert_eq!(sol.outputs.len(), 11);
        for (t, y) in &sol.outputs {
            assert!((y[0] - t.sin()).abs() < 1e-8);
        }
        assert!(sol.nodes.iter().any(|(t, _)| *t == -2.5));
    }

    #[test]
    fn exit_is_located() {
        // y = t leaves y < 1.5 at t = 1.5
        let rhs = |_t: f64, _y: &[f64], d: &mut [f64]| {
            d[0] = 1.0;
            Ok(())
        };
        let sol = integrate(rhs, 0.0, &[0.0], 3.0, &[], |_, y| y[0] < 1.5, &OdeOptions::default()).unwrap();
        match sol.stop {
            Stop::Exited { t_exit } => assert!((t_exit - 1.5).abs() < 1e-12),
            _ => panic!("expected exit"),
        }
    }
}
