//! Fixed-step RK4 integration of controlled ODEs under piecewise-constant
//! control paths.
//!
//! Fixed stepping keeps grid computations reproducible and aligned with the
//! kernel time step; the step must divide the control grid spacing so control
//! switches land exactly on integrator steps.

use std::io::Write;

use rand::Rng;

use crate::dynamics::{ControlSet, ControlledSystem, Reduction, CONTROL_SET_TOL};
use crate::error::{Error, Result};
use crate::util::{all_finite, inf_norm};

/// States with `‖x‖∞` beyond this are treated as blow-up rather than an error.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e12;

/// Piecewise-constant control schedule on a uniform time grid: the value on
/// `[k·dt, (k+1)·dt)` is `values[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPath {
    dt: f64,
    values: Vec<Vec<f64>>,
}

impl ControlPath {
    pub fn new(dt: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("control grid spacing must be positive".into()));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("control path needs at least one segment".into()));
        }
        let m = values[0].len();
        if values.iter().any(|v| v.len() != m) {
            return Err(Error::InvalidArgument("control path values must share a dimension".into()));
        }
        Ok(ControlPath { dt, values })
    }

    /// Constant path `u(t) = value` over `segments` intervals of length `dt`.
    pub fn constant(value: Vec<f64>, dt: f64, segments: usize) -> Result<Self> {
        ControlPath::new(dt, vec![value; segments.max(1)])
    }

    /// Random bang-bang path: each segment independently takes `lo` or `hi`
    /// per coordinate.
    pub fn random_bang_bang<R: Rng>(
        rng: &mut R,
        lo: &[f64],
        hi: &[f64],
        dt: f64,
        segments: usize,
    ) -> Result<Self> {
        assert_eq!(lo.len(), hi.len());
        let values = (0..segments.max(1))
            .map(|_| {
                lo.iter()
                    .zip(hi)
                    .map(|(a, b)| if rng.gen_bool(0.5) { *a } else { *b })
                    .collect()
            })
            .collect();
        ControlPath::new(dt, values)
    }

    pub fn spacing(&self) -> f64 {
        self.dt
    }

    pub fn segments(&self) -> usize {
        self.values.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Control value at time `t` (clamped to the last segment at `t = T`).
    pub fn value_at(&self, t: f64) -> &[f64] {
        let idx = ((t / self.dt).floor() as usize).min(self.values.len() - 1);
        &self.values[idx]
    }

    pub fn validate_in(&self, control_set: &ControlSet) -> Result<()> {
        for v in &self.values {
            if !control_set.contains(v, CONTROL_SET_TOL) {
                return Err(Error::OutsideControlSet(format!("{v:?}")));
            }
        }
        Ok(())
    }
}

/// Time-stamped state sequence produced by the integrator.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// First time at which a non-finite or overflow state was detected.
    pub blow_up: Option<f64>,
}

impl Trajectory {
    pub fn blew_up(&self) -> bool {
        self.blow_up.is_some()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// `max_t ‖x(t)‖∞` over the recorded states.
    pub fn max_abs(&self) -> f64 {
        self.states.iter().map(|x| inf_norm(x)).fold(0.0, f64::max)
    }

    /// CSV with header `t,x1..xn`, one row per step.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        write!(w, "t")?;
        for j in 1..=n {
            write!(w, ",x{j}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in x {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// One classical RK4 step of length `dt` holding the control constant.
pub fn rk4_step(sys: &ControlledSystem, x: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    sys.eval_into(x, u, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    sys.eval_into(&tmp, u, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    sys.eval_into(&tmp, u, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    sys.eval_into(&tmp, u, &mut k4);
    (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrate `ẋ = f(x, u(t))` from `x0` over the whole control path with RK4
/// steps of length `dt`. `dt` must divide the control grid spacing.
pub fn integrate(
    sys: &ControlledSystem,
    x0: &[f64],
    path: &ControlPath,
    dt: f64,
) -> Result<Trajectory> {
    if x0.len() != sys.dim_state() {
        return Err(Error::DimensionMismatch { expected: sys.dim_state(), got: x0.len() });
    }
    if path.dim() != sys.dim_control() {
        return Err(Error::DimensionMismatch { expected: sys.dim_control(), got: path.dim() });
    }
    if !sys.in_domain(x0) {
        return Err(Error::OutsideDomain);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("integration step must be positive".into()));
    }
    let ratio = path.spacing() / dt;
    let steps_per_segment = ratio.round() as usize;
    if steps_per_segment == 0 || (ratio - steps_per_segment as f64).abs() > 1e-9 * ratio {
        return Err(Error::StepMismatch { dt, spacing: path.spacing() });
    }

    let total_steps = steps_per_segment * path.segments();
    let mut times = Vec::with_capacity(total_steps + 1);
    let mut states = Vec::with_capacity(total_steps + 1);
    times.push(0.0);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    let mut blow_up = None;

    'outer: for (seg, u) in path.values().iter().enumerate() {
        for sub in 0..steps_per_segment {
            let t_next = (seg * steps_per_segment + sub + 1) as f64 * dt;
            x = rk4_step(sys, &x, u, dt);
            if !all_finite(&x) || inf_norm(&x) > DEFAULT_OVERFLOW_GUARD {
                blow_up = Some(t_next);
                times.push(t_next);
                states.push(x.clone());
                break 'outer;
            }
            times.push(t_next);
            states.push(x.clone());
        }
    }
    Ok(Trajectory { times, states, blow_up })
}

/// Pointwise image of a path under a reduction: `u_φ(t) = φ(u(t))`.
pub fn reduce_path(
    path: &ControlPath,
    reduction: &Reduction,
    control_set: &ControlSet,
) -> Result<ControlPath> {
    let mut values = Vec::with_capacity(path.segments());
    for v in path.values() {
        let mapped = reduction.apply(v);
        if !control_set.contains(&mapped, CONTROL_SET_TOL) {
            return Err(Error::OutsideControlSet(format!("φ({v:?}) = {mapped:?}")));
        }
        values.push(mapped);
    }
    ControlPath::new(path.spacing(), values)
}
