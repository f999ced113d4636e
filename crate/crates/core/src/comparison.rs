//! Numerical flow-comparison checks.
//!
//! Given two systems whose right-hand sides are pointwise ordered by a cone
//! (and one of which is quasimonotone — verified separately via [`crate::dynamics`]),
//! ordered initial states must produce ordered trajectories. These routines
//! integrate both trajectories on a shared grid and measure how far the
//! difference leaves the cone at each output time.

use crate::cone::ConvexCone;
use crate::dynamics::{ControlledSystem, Reduction};
use crate::error::{Error, Result};
use crate::flow::{integrate, reduce_path, ControlPath, Trajectory};
use crate::util::sub;

/// Scale factor for the trajectory-comparison tolerance:
/// `traj_tol = 1e-6 · (1 + max ‖x‖∞)`. Integration error must not produce
/// false ordering violations.
pub const TRAJ_TOL_FACTOR: f64 = 1e-6;

/// A time at which the ordering defect exceeded the tolerance.
#[derive(Clone, Debug)]
pub struct DefectSample {
    pub t: f64,
    /// The difference `Ψ_h(t) − Ψ_g(t)` that should lie in the cone.
    pub delta: Vec<f64>,
    pub magnitude: f64,
}

/// Outcome of a pairwise flow comparison.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub checked_times: usize,
    pub violations: Vec<DefectSample>,
    /// `max_t` of the worst dual-generator violation of `Ψ_h(t) − Ψ_g(t) ∈ K`.
    pub max_defect: f64,
    pub traj_tol: f64,
    /// Earliest blow-up time among the two trajectories, if any.
    pub blow_up: Option<f64>,
    /// Defect value at every compared output time (for CSV export).
    pub defect_series: Vec<(f64, f64)>,
}

impl ComparisonReport {
    pub fn ordered(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "compared {} times: max_defect {:.3e} (tol {:.3e}), {} violations{}",
            self.checked_times,
            self.max_defect,
            self.traj_tol,
            self.violations.len(),
            match self.blow_up {
                Some(t) => format!(", blow-up at t={t}"),
                None => String::new(),
            }
        )
    }

    pub fn write_defect_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,defect")?;
        for (t, d) in &self.defect_series {
            writeln!(w, "{t},{d}")?;
        }
        Ok(())
    }
}

fn compare_trajectories(
    cone: &ConvexCone,
    lower: &Trajectory,
    upper: &Trajectory,
) -> Result<ComparisonReport> {
    let steps = lower.times.len().min(upper.times.len());
    let traj_tol = TRAJ_TOL_FACTOR * (1.0 + lower.max_abs().max(upper.max_abs()));
    let mut report = ComparisonReport {
        checked_times: steps,
        violations: Vec::new(),
        max_defect: 0.0,
        traj_tol,
        blow_up: match (lower.blow_up, upper.blow_up) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        },
        defect_series: Vec::with_capacity(steps),
    };
    for k in 0..steps {
        let delta = sub(&upper.states[k], &lower.states[k]);
        let defect = cone.defect(&delta)?;
        report.defect_series.push((lower.times[k], defect));
        if defect > report.max_defect {
            report.max_defect = defect;
        }
        if defect > traj_tol {
            report.violations.push(DefectSample { t: lower.times[k], delta, magnitude: defect });
        }
    }
    Ok(report)
}

/// Compare the flows of two systems driven by the same control path from
/// ordered initial states `x0 ⪯ y0`: `Ψ(t; g, x0, u) ⪯ Ψ(t; h, y0, u)` is
/// asserted at every output time within the trajectory tolerance.
///
/// The caller is responsible for having (sampled-)verified that one system is
/// quasimonotone and that `g ⪯ h` pointwise; this routine only measures the
/// conclusion. Blow-up before the horizon yields a partial report.
pub fn compare_flows(
    sys_g: &ControlledSystem,
    sys_h: &ControlledSystem,
    cone: &ConvexCone,
    x0: &[f64],
    y0: &[f64],
    path: &ControlPath,
    dt: f64,
) -> Result<ComparisonReport> {
    if !cone.leq(x0, y0)? {
        return Err(Error::Precondition("initial states are not ordered: x0 ⪯ y0 fails".into()));
    }
    let lower = integrate(sys_g, x0, path, dt)?;
    let upper = integrate(sys_h, y0, path, dt)?;
    compare_trajectories(cone, &lower, &upper)
}

/// Controlled comparison under a reduction: `Ψ(t; f, x0, u)` against
/// `Ψ(t; f, y0, u_φ)` with `u_φ(t) = φ(u(t))`.
pub fn compare_controlled(
    sys: &ControlledSystem,
    cone: &ConvexCone,
    reduction: &Reduction,
    x0: &[f64],
    y0: &[f64],
    path: &ControlPath,
    dt: f64,
) -> Result<ComparisonReport> {
    if !cone.leq(x0, y0)? {
        return Err(Error::Precondition("initial states are not ordered: x0 ⪯ y0 fails".into()));
    }
    let reduced = reduce_path(path, reduction, sys.control_set())?;
    let lower = integrate(sys, x0, path, dt)?;
    let upper = integrate(sys, y0, &reduced, dt)?;
    compare_trajectories(cone, &lower, &upper)
}

/// Trajectories of the ε-perturbed systems `ẋ = f(x, u(t)) + ε v` from
/// `x0 + ε v`, plus their sup-norm gaps to the unperturbed trajectory.
#[derive(Debug)]
pub struct EpsilonDiagnostic {
    pub epsilons: Vec<f64>,
    pub base: Trajectory,
    pub perturbed: Vec<Trajectory>,
    /// `sup_t ‖x_ε(t) − x(t)‖∞`, one entry per epsilon.
    pub sup_gaps: Vec<f64>,
}

impl EpsilonDiagnostic {
    /// True when the gaps decrease monotonically along the epsilon list.
    pub fn gaps_decrease(&self) -> bool {
        self.sup_gaps.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
    }
}

/// Integrate the ε-perturbation family used to close interior-ordering
/// arguments: `v` must be strictly inside the cone and `eps_list` positive
/// decreasing. As ε ↓ 0 the perturbed trajectories converge to the base one.
pub fn epsilon_diagnostic(
    sys: &ControlledSystem,
    cone: &ConvexCone,
    v: &[f64],
    eps_list: &[f64],
    x0: &[f64],
    path: &ControlPath,
    dt: f64,
) -> Result<EpsilonDiagnostic> {
    let zero = vec![0.0; cone.dim()];
    if !cone.strictly_less(&zero, v)? {
        return Err(Error::Precondition("perturbation direction is not interior to the cone".into()));
    }
    if eps_list.iter().any(|e| *e <= 0.0) {
        return Err(Error::Precondition("epsilon list must be positive".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("epsilon list must be strictly decreasing".into()));
    }
    let base = integrate(sys, x0, path, dt)?;
    let mut perturbed = Vec::with_capacity(eps_list.len());
    let mut sup_gaps = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let bias: Vec<f64> = v.iter().map(|c| eps * c).collect();
        let shifted_x0: Vec<f64> = x0.iter().zip(&bias).map(|(a, b)| a + b).collect();
        let sys_eps = sys.with_additive_bias(bias);
        let traj = integrate(&sys_eps, &shifted_x0, path, dt)?;
        let steps = base.states.len().min(traj.states.len());
        let gap = (0..steps)
            .map(|k| {
                traj.states[k]
                    .iter()
                    .zip(&base.states[k])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        perturbed.push(traj);
        sup_gaps.push(gap);
    }
    Ok(EpsilonDiagnostic { epsilons: eps_list.to_vec(), base, perturbed, sup_gaps })
}
