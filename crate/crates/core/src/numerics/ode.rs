//! Adaptive Dormand–Prince 5(4) integrator for linear two-component complex
//! systems `y' = G(t) y`, with the standard fourth-order continuous extension
//! used to sample the solution on a uniform output grid.

use crate::error::{Error, Result};
use crate::numerics::{ComplexVector2, Matrix2};

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

// The step controller works at `tol·LOCAL_SAFETY` so that the accumulated
// global error (in particular the norm drift of unitary problems over many
// thousands of steps) stays below 100·tol.
const LOCAL_SAFETY: f64 = 0.02;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrator settings. `tol` is used as both the relative and the absolute
/// per-step tolerance.
#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub tol: f64,
    /// Output sampling interval; `None` records only the two endpoints.
    pub sample_dt: Option<f64>,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { tol: 1e-9, sample_dt: None, max_steps: 50_000_000, initial_step: None }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn sampled(mut self, dt: f64) -> Self {
        self.sample_dt = Some(dt);
        self
    }
}

/// Sampled solution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexVector2>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> ComplexVector2 {
        *self.states.last().expect("trajectory always holds the initial state")
    }
}

fn error_norm(err: &ComplexVector2, y0: &ComplexVector2, y1: &ComplexVector2, tol: f64) -> f64 {
    let comps = [
        (err.a.re, y0.a.re.abs().max(y1.a.re.abs())),
        (err.a.im, y0.a.im.abs().max(y1.a.im.abs())),
        (err.b.re, y0.b.re.abs().max(y1.b.re.abs())),
        (err.b.im, y0.b.im.abs().max(y1.b.im.abs())),
    ];
    let s: f64 = comps.iter().map(|(e, y)| (e / (tol + tol * y)).powi(2)).sum();
    (s / 4.0).sqrt()
}

/// Integrates `y' = generator(t)·y` from `t0` to `t1`.
pub fn integrate_ode<G>(
    generator: G,
    y0: ComplexVector2,
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
) -> Result<Trajectory>
where
    G: Fn(f64) -> Matrix2,
{
    if !(opts.tol > 0.0 && opts.tol <= 1e-3) {
        return Err(Error::Domain(format!("ode: tol {} outside (0, 1e-3]", opts.tol)));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::Domain(format!("ode: invalid span [{t0}, {t1}]")));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("ode: sample interval {dt} must be positive")));
        }
    }
    let tol = opts.tol * LOCAL_SAFETY;
    let f = |t: f64, y: &ComplexVector2| generator(t).apply(y);

    let mut times = vec![t0];
    let mut states = vec![y0];
    let mut next_sample = 1usize;
    let sample_at = |i: usize| opts.sample_dt.map(|dt| t0 + i as f64 * dt);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = t1 - t0;
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let scale = k1.max_abs().max(1e-3);
        (0.01 * tol.powf(0.2) / scale).min(span)
    });
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;

    while t < t1 {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::IntegrationFailure { t, h, reason: "step budget exhausted".into() });
        }
        if h < 1e-14 * t.abs().max(span) {
            return Err(Error::IntegrationFailure { t, h, reason: "step size underflow".into() });
        }
        let hh = h.min(t1 - t);

        let k2 = f(t + C2 * hh, &(y + k1 * (hh * A21)));
        let k3 = f(t + C3 * hh, &(y + (k1 * A31 + k2 * A32) * hh));
        let k4 = f(t + C4 * hh, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * hh));
        let k5 = f(t + C5 * hh, &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hh));
        let k6 =
            f(t + hh, &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hh));
        let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * hh;
        let t_new = if hh == t1 - t { t1 } else { t + hh };
        let k7 = f(t_new, &y_new);

        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hh;
        let err = error_norm(&err_vec, &y, &y_new, tol);
        if !err.is_finite() {
            return Err(Error::IntegrationFailure { t, h, reason: "non-finite state".into() });
        }

        if err <= 1.0 {
            if opts.sample_dt.is_some() {
                // Dense output on (t, t_new].
                let ydiff = y_new - y;
                let bspl = k1 * hh - ydiff;
                let r4 = ydiff - k7 * hh - bspl;
                let r5 = (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * hh;
                while let Some(ts) = sample_at(next_sample) {
                    if ts > t_new || ts > t1 {
                        break;
                    }
                    let theta = (ts - t) / hh;
                    let th1 = 1.0 - theta;
                    let ys = y + (ydiff + (bspl + (r4 + r5 * th1) * theta) * th1) * theta;
                    times.push(ts);
                    states.push(ys);
                    next_sample += 1;
                }
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            accepted += 1;
            let grow = if last_rejected { 1.0 } else { 5.0 };
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, grow);
            h = hh * fac;
            last_rejected = false;
        } else {
            rejected += 1;
            h = hh * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            last_rejected = true;
        }
    }

    if times.last().copied() != Some(t1) {
        times.push(t1);
        states.push(y);
    }
    Ok(Trajectory { times, states, accepted_steps: accepted, rejected_steps: rejected })
}
