//! Controlled dynamics `f(x,u)`, finite-difference Jacobians, and sampled
//! verification of quasimonotonicity and control-reduction properties.
//!
//! The quasimonotonicity conditions are universally quantified statements; at
//! desk scale they are checked by sampled falsification over a low-discrepancy
//! plan. A passing report means "no counterexample found on the plan", a
//! failing report carries the worst witness.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cone::{ConeKind, ConvexCone};
use crate::error::{Error, Result};
use crate::util::{add_scaled, all_finite, dot, inf_norm, sub, Halton};

/// Default relative tolerance for gradient-based sign checks.
pub const DEFAULT_TOL_GRAD: f64 = 1e-7;

/// Default tolerance when testing control-set membership.
pub const CONTROL_SET_TOL: f64 = 1e-9;

/// Admissible control values: a box or an explicit finite list.
#[derive(Clone, Debug)]
pub enum ControlSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Finite(Vec<Vec<f64>>),
}

impl ControlSet {
    /// Interval `[lo, hi]` for a scalar control.
    pub fn interval(lo: f64, hi: f64) -> Self {
        ControlSet::Box { lower: vec![lo], upper: vec![hi] }
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSet::Box { lower, .. } => lower.len(),
            ControlSet::Finite(values) => values.first().map_or(0, |v| v.len()),
        }
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        match self {
            ControlSet::Box { lower, upper } => {
                u.len() == lower.len()
                    && u.iter()
                        .zip(lower.iter().zip(upper))
                        .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
            }
            ControlSet::Finite(values) => values.iter().any(|w| {
                w.len() == u.len() && w.iter().zip(u).all(|(a, b)| (a - b).abs() <= tol)
            }),
        }
    }

    /// Map a point of the unit cube to a member (box: per-coordinate lerp;
    /// finite: index selection by the first coordinate).
    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        match self {
            ControlSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(unit)
                .map(|((lo, hi), t)| lo + t * (hi - lo))
                .collect(),
            ControlSet::Finite(values) => {
                let t = unit.first().copied().unwrap_or(0.0);
                let idx = ((t * values.len() as f64) as usize).min(values.len() - 1);
                values[idx].clone()
            }
        }
    }
}

type EvalFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A controlled dynamical system `ẋ = f(x, u)`.
///
/// The evaluator must be a pure function; it is invoked concurrently by the
/// sampled checks and the kernel sweeps. The state domain defaults to the
/// nonnegative orthant.
#[derive(Clone)]
pub struct ControlledSystem {
    n: usize,
    m: usize,
    f: Arc<EvalFn>,
    control_set: ControlSet,
    state_domain: Arc<DomainFn>,
}

impl fmt::Debug for ControlledSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlledSystem")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl ControlledSystem {
    pub fn new(
        n: usize,
        m: usize,
        control_set: ControlSet,
        f: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        ControlledSystem {
            n,
            m,
            f: Arc::new(f),
            control_set,
            state_domain: Arc::new(|x: &[f64]| x.iter().all(|v| *v >= 0.0)),
        }
    }

    /// Replace the state-domain predicate.
    pub fn with_state_domain(
        mut self,
        pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.state_domain = Arc::new(pred);
        self
    }

    /// Convenience: state domain = all of `R^n`.
    pub fn with_unrestricted_domain(self) -> Self {
        self.with_state_domain(|_| true)
    }

    pub fn dim_state(&self) -> usize {
        self.n
    }

    pub fn dim_control(&self) -> usize {
        self.m
    }

    pub fn control_set(&self) -> &ControlSet {
        &self.control_set
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        (self.state_domain)(x)
    }

    pub fn eval_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(u.len(), self.m);
        debug_assert_eq!(out.len(), self.n);
        (self.f)(x, u, out);
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(x, u, &mut out);
        out
    }

    /// New system evaluating `(x, u) ↦ f(x, u) + bias` with the same domains.
    pub fn with_additive_bias(&self, bias: Vec<f64>) -> Self {
        assert_eq!(bias.len(), self.n);
        let inner = Arc::clone(&self.f);
        ControlledSystem {
            n: self.n,
            m: self.m,
            f: Arc::new(move |x: &[f64], u: &[f64], out: &mut [f64]| {
                inner(x, u, out);
                for (o, b) in out.iter_mut().zip(&bias) {
                    *o += b;
                }
            }),
            control_set: self.control_set.clone(),
            state_domain: Arc::clone(&self.state_domain),
        }
    }
}

/// A control-space self-map `φ`, the reduction of Def.-style hypotheses.
#[derive(Clone)]
pub struct Reduction {
    phi: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl fmt::Debug for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Reduction(..)")
    }
}

impl Reduction {
    pub fn new(phi: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Reduction { phi: Arc::new(phi) }
    }

    pub fn identity() -> Self {
        Reduction::new(|u: &[f64]| u.to_vec())
    }

    /// `φ(u) = value` for every `u`.
    pub fn constant(value: Vec<f64>) -> Self {
        Reduction::new(move |_: &[f64]| value.clone())
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (self.phi)(u)
    }
}

/// Low-discrepancy sampling plan over a state box; control values are drawn
/// from the system's control set through extra Halton dimensions.
#[derive(Clone, Debug)]
pub struct SamplingPlan {
    pub state_lower: Vec<f64>,
    pub state_upper: Vec<f64>,
    pub count: usize,
    /// Halton burn-in.
    pub skip: u64,
    /// Seed for the auxiliary RNG used by checks that need random directions.
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(state_lower: Vec<f64>, state_upper: Vec<f64>) -> Self {
        assert_eq!(state_lower.len(), state_upper.len());
        SamplingPlan { state_lower, state_upper, count: 10_000, skip: 20, seed: 0 }
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.state_lower.len()
    }

    /// Materialize the `(x, u)` sample list for a control set.
    pub fn points(&self, control_set: &ControlSet) -> Vec<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let m = control_set.dim();
        let mut halton = Halton::new(n + m, self.skip);
        (0..self.count)
            .map(|_| {
                let p = halton.next_point();
                let x: Vec<f64> = (0..n)
                    .map(|j| self.state_lower[j] + p[j] * (self.state_upper[j] - self.state_lower[j]))
                    .collect();
                let u = control_set.from_unit(&p[n..]);
                (x, u)
            })
            .collect()
    }
}

/// Witness of a failed sampled check.
#[derive(Clone, Debug)]
pub struct Violation {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub detail: ViolationDetail,
    /// Severity; more negative is worse.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub enum ViolationDetail {
    /// Signed Jacobian entry `s_i s_j J_ij` below tolerance at `(i, j)`.
    JacobianEntry { i: usize, j: usize },
    /// `⟨f(x') − f(x), y⟩` negative for the dual generator with this index.
    DualPairing { generator: usize, direction: Vec<f64> },
    /// `f(x, φ(u)) − f(x, u)` left the cone; the offending difference.
    ReductionDefect { difference: Vec<f64> },
    /// `(x + k, φ(u))` escaped the desirable set for this cone member `k`.
    SetEscape { shift: Vec<f64> },
}

/// Outcome of a sampled check; merges associatively across parallel chunks.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    pub worst: Option<Violation>,
}

impl CheckReport {
    pub fn empty(name: &str) -> Self {
        CheckReport { name: name.to_string(), checked: 0, failures: 0, worst: None }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn record_pass(&mut self) {
        self.checked += 1;
    }

    pub fn record_failure(&mut self, violation: Violation) {
        self.checked += 1;
        self.failures += 1;
        let replace = match &self.worst {
            None => true,
            Some(w) => violation.value < w.value,
        };
        if replace {
            self.worst = Some(violation);
        }
    }

    pub fn merge(mut self, other: CheckReport) -> CheckReport {
        self.checked += other.checked;
        self.failures += other.failures;
        match (&self.worst, other.worst) {
            (None, w) => self.worst = w,
            (Some(a), Some(b)) if b.value < a.value => self.worst = Some(b),
            _ => {}
        }
        self
    }

    pub fn summary(&self) -> String {
        match &self.worst {
            None => format!("{}: {} checked, {} failures", self.name, self.checked, self.failures),
            Some(w) => format!(
                "{}: {} checked, {} failures, worst {:.3e} at x={:?} u={:?} ({:?})",
                self.name, self.checked, self.failures, w.value, w.x, w.u, w.detail
            ),
        }
    }
}

/// Default central-difference step: `1e-5 · (1 + ‖x‖∞)`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + inf_norm(x))
}

/// Central-difference approximation of `∂f/∂x` at `(x, u)`.
///
/// Entry `(i, j)` is `(f_i(x + h e_j, u) − f_i(x − h e_j, u)) / (2h)`. A
/// non-finite evaluation at a probe point reports the failing coordinate.
pub fn jacobian_fd(
    sys: &ControlledSystem,
    x: &[f64],
    u: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = sys.dim_state();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if u.len() != sys.dim_control() {
        return Err(Error::DimensionMismatch { expected: sys.dim_control(), got: u.len() });
    }
    if h <= 0.0 {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let mut jac = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        xp[j] = x[j] + h;
        sys.eval_into(&xp, u, &mut fp);
        xp[j] = x[j] - h;
        sys.eval_into(&xp, u, &mut fm);
        xp[j] = x[j];
        for i in 0..n {
            if !fp[i].is_finite() || !fm[i].is_finite() {
                return Err(Error::EvalFailure {
                    coordinate: i,
                    context: format!("x ± h·e_{j}"),
                });
            }
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn par_check<T, F>(items: &[T], name: &str, body: F) -> CheckReport
where
    T: Sync,
    F: Fn(&T, &mut CheckReport) + Sync + Send,
{
    items
        .par_chunks(256)
        .map(|chunk| {
            let mut report = CheckReport::empty(name);
            for item in chunk {
                body(item, &mut report);
            }
            report
        })
        .reduce(|| CheckReport::empty(name), CheckReport::merge)
}

/// Orthant-cone quasimonotonicity test: at every sampled `(x, u)` the signed
/// off-diagonal Jacobian entries `s_i s_j J_ij` must be nonnegative within
/// `tol_grad · (1 + |J_ij|)`.
pub fn check_orthant_quasimonotone(
    sys: &ControlledSystem,
    cone: &ConvexCone,
    plan: &SamplingPlan,
    tol_grad: f64,
) -> Result<CheckReport> {
    if cone.kind() != ConeKind::Orthant {
        return Err(Error::InvalidArgument("orthant quasimonotonicity test needs an orthant cone".into()));
    }
    if cone.dim() != sys.dim_state() || plan.dim() != sys.dim_state() {
        return Err(Error::DimensionMismatch { expected: sys.dim_state(), got: cone.dim() });
    }
    let signs = cone.signs().to_vec();
    let points = plan.points(sys.control_set());
    let report = par_check(&points, "orthant quasimonotonicity", |(x, u), report| {
        let jac = match jacobian_fd(sys, x, u, default_fd_step(x)) {
            Ok(j) => j,
            Err(_) => {
                report.record_failure(Violation {
                    x: x.clone(),
                    u: u.clone(),
                    detail: ViolationDetail::JacobianEntry { i: 0, j: 0 },
                    value: f64::NEG_INFINITY,
                });
                return;
            }
        };
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..jac.len() {
            for j in 0..jac.len() {
                if i == j {
                    continue;
                }
                let v = signs[i] * signs[j] * jac[i][j];
                let slack = tol_grad * (1.0 + jac[i][j].abs());
                if v < -slack && worst.map_or(true, |(_, _, w)| v < w) {
                    worst = Some((i, j, v));
                }
            }
        }
        match worst {
            None => report.record_pass(),
            Some((i, j, v)) => report.record_failure(Violation {
                x: x.clone(),
                u: u.clone(),
                detail: ViolationDetail::JacobianEntry { i, j },
                value: v,
            }),
        }
    });
    Ok(report)
}

/// General quasimonotonicity test via the dual generators: for each dual
/// generator `y`, sampled pairs `x ⪯ x' = x + d` with `d` in the face
/// `K ∩ {y}⊥` must satisfy `⟨f(x',u) − f(x,u), y⟩ ≥ 0` within tolerance.
pub fn check_general_quasimonotone(
    sys: &ControlledSystem,
    cone: &ConvexCone,
    plan: &SamplingPlan,
    tol_grad: f64,
) -> Result<CheckReport> {
    if cone.dim() != sys.dim_state() || plan.dim() != sys.dim_state() {
        return Err(Error::DimensionMismatch { expected: sys.dim_state(), got: cone.dim() });
    }
    let duals = cone.dual_generators()?.to_vec();
    let faces: Vec<Vec<Vec<f64>>> = duals
        .iter()
        .map(|y| cone.face_generators(y))
        .collect::<Result<_>>()?;
    let points = plan.points(sys.control_set());
    let indexed: Vec<(usize, (Vec<f64>, Vec<f64>))> = points.into_iter().enumerate().collect();
    let seed = plan.seed;
    let state_lower = plan.state_lower.clone();
    let state_upper = plan.state_upper.clone();

    let report = par_check(&indexed, "general quasimonotonicity", |(idx, (x, u)), report| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (*idx as u64).wrapping_mul(0x9e3779b9));
        for (gi, y) in duals.iter().enumerate() {
            let face = &faces[gi];
            if face.is_empty() {
                // Face is {0}: the implication is vacuous at this generator.
                report.record_pass();
                continue;
            }
            // Direction: either a single face generator or a nonnegative mix.
            let mut d = vec![0.0; x.len()];
            if rng.gen_bool(0.5) {
                let g = &face[rng.gen_range(0..face.len())];
                d.copy_from_slice(g);
            } else {
                for g in face {
                    let c = rng.gen_range(0.0..1.0);
                    for (dv, gv) in d.iter_mut().zip(g) {
                        *dv += c * gv;
                    }
                }
            }
            let scale = inf_norm(&d);
            if scale == 0.0 {
                report.record_pass();
                continue;
            }
            for dv in d.iter_mut() {
                *dv /= scale;
            }
            // Largest step keeping x + α d inside the sampling box.
            let mut alpha_max = f64::INFINITY;
            for j in 0..d.len() {
                if d[j] > 0.0 {
                    alpha_max = alpha_max.min((state_upper[j] - x[j]) / d[j]);
                } else if d[j] < 0.0 {
                    alpha_max = alpha_max.min((state_lower[j] - x[j]) / d[j]);
                }
            }
            if !alpha_max.is_finite() {
                alpha_max = 1.0;
            }
            let alpha = rng.gen_range(0.0..1.0) * alpha_max.max(0.0);
            if alpha <= 0.0 {
                report.record_pass();
                continue;
            }
            let x_prime = add_scaled(x, alpha, &d);
            let df = sub(&sys.eval(&x_prime, u), &sys.eval(x, u));
            if !all_finite(&df) {
                report.record_failure(Violation {
                    x: x.clone(),
                    u: u.clone(),
                    detail: ViolationDetail::DualPairing { generator: gi, direction: d.clone() },
                    value: f64::NEG_INFINITY,
                });
                continue;
            }
            let pairing = dot(&df, y);
            let slack = tol_grad * (1.0 + inf_norm(&df));
            if pairing >= -slack {
                report.record_pass();
            } else {
                report.record_failure(Violation {
                    x: x.clone(),
                    u: u.clone(),
                    detail: ViolationDetail::DualPairing { generator: gi, direction: d.clone() },
                    value: pairing,
                });
            }
        }
    });
    Ok(report)
}

/// Reduction property test: `f(x, φ(u)) − f(x, u) ∈ K` at every sampled pair.
/// A `φ` image outside the control set is a hard error, not a report entry.
pub fn check_reduction(
    sys: &ControlledSystem,
    cone: &ConvexCone,
    reduction: &Reduction,
    plan: &SamplingPlan,
) -> Result<CheckReport> {
    if cone.dim() != sys.dim_state() || plan.dim() != sys.dim_state() {
        return Err(Error::DimensionMismatch { expected: sys.dim_state(), got: cone.dim() });
    }
    let points = plan.points(sys.control_set());
    for (_, u) in &points {
        let mapped = reduction.apply(u);
        if !sys.control_set().contains(&mapped, CONTROL_SET_TOL) {
            return Err(Error::OutsideControlSet(format!("φ({u:?}) = {mapped:?}")));
        }
    }
    let report = par_check(&points, "reduction", |(x, u), report| {
        let mapped = reduction.apply(u);
        let diff = sub(&sys.eval(x, &mapped), &sys.eval(x, u));
        let defect = cone.defect(&diff).unwrap_or(f64::INFINITY);
        if defect <= cone.tol() {
            report.record_pass();
        } else {
            report.record_failure(Violation {
                x: x.clone(),
                u: u.clone(),
                detail: ViolationDetail::ReductionDefect { difference: diff },
                value: -defect,
            });
        }
    });
    Ok(report)
}
