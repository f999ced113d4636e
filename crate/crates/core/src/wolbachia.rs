//! Four-state mosquito biocontrol model: uninfected larvae/adults `(L_U, A_U)`
//! competing with Wolbachia-infected larvae/adults `(L_W, A_W)`, controlled by
//! the introduction rate `u ∈ [0, u♯]` of infected larvae.
//!
//! Cytoplasmic incompatibility enters through the uninfected birth term
//! `α_U A_U²/(A_U + A_W)`, extended by continuity to `0` at `A_U = A_W = 0`.
//! The case study orders states by the cone with signs `(−, −, +, +)`
//! ("fewer uninfected, more infected"), reduces the control family to the
//! constant `u♯`, and compares the resulting viability kernels.

use serde::{Deserialize, Serialize};

use crate::cone::ConvexCone;
use crate::dynamics::{ControlSet, ControlledSystem, Reduction};
use crate::error::{Error, Result};
use crate::viability::{
    compute_kernel, extend_desirable, kernel_inclusion, reduced_dynamics, BoxConstraints,
    DesirableSet, InclusionReport, KernelGrid, KernelGridSpec, StateBox,
};

/// Model rates; all strictly positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolbachiaParams {
    /// Per-capita recruitment rate of uninfected adults.
    pub alpha_u: f64,
    /// Per-capita recruitment rate of infected adults.
    pub alpha_w: f64,
    /// Larva maturation rate.
    pub nu: f64,
    /// Larva base mortality.
    pub mu: f64,
    /// Larval competition coefficient.
    pub k: f64,
    /// Uninfected adult mortality.
    pub mu_u: f64,
    /// Infected adult mortality.
    pub mu_w: f64,
    /// Maximal introduction rate.
    pub u_sharp: f64,
}

impl WolbachiaParams {
    /// The pinned default preset.
    ///
    /// Chosen so that (i) the uncontrolled system has a stable Wolbachia-free
    /// equilibrium (the adult lifetime ratio `α_W/μ_W` is below `α_U/μ_U`)
    /// and (ii) holding `u = u♯` from that state reaches the
    /// Wolbachia-dominant regime. Both properties are pinned by tests.
    pub fn preset_default() -> Self {
        WolbachiaParams {
            alpha_u: 10.0,
            alpha_w: 6.0,
            nu: 0.5,
            mu: 0.5,
            k: 1.0,
            mu_u: 1.0,
            mu_w: 1.0,
            u_sharp: 2.0,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::preset_default()),
            other => Err(Error::InvalidArgument(format!("unknown preset '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha_u", self.alpha_u),
            ("alpha_w", self.alpha_w),
            ("nu", self.nu),
            ("mu", self.mu),
            ("k", self.k),
            ("mu_u", self.mu_u),
            ("mu_w", self.mu_w),
            ("u_sharp", self.u_sharp),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "parameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Population thresholds of the desirable set: uninfected stay below the
/// `*_max` values, infected stay above the `*_min` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolbachiaThresholds {
    pub l_u_max: f64,
    pub a_u_max: f64,
    pub l_w_min: f64,
    pub a_w_min: f64,
}

impl WolbachiaThresholds {
    /// Default thresholds derived from the model equilibria: infected lower
    /// bounds at 80% of the `u♯`-forced equilibrium, uninfected upper bounds
    /// at 120% of the natural (uncontrolled Wolbachia-free) levels.
    pub fn derived_default(params: &WolbachiaParams) -> Self {
        let free = wolbachia_free_equilibrium(params);
        let forced = forced_equilibrium(params);
        WolbachiaThresholds {
            l_u_max: 1.2 * free[0],
            a_u_max: 1.2 * free[1],
            l_w_min: 0.8 * forced[2],
            a_w_min: 0.8 * forced[3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l_u_max", self.l_u_max),
            ("a_u_max", self.a_u_max),
            ("l_w_min", self.l_w_min),
            ("a_w_min", self.a_w_min),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "threshold {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Denominators at or below this are treated as the continuity point.
const RATIO_GUARD: f64 = 1e-12;

/// Right-hand side with the continuity extension; tolerant of the slightly
/// negative probe states produced by RK4 stages and finite differences.
fn rhs(p: &WolbachiaParams, x: &[f64], u: f64, out: &mut [f64]) {
    let (l_u, a_u, l_w, a_w) = (x[0], x[1], x[2], x[3]);
    let den = a_u + a_w;
    let ratio = if den <= RATIO_GUARD { 0.0 } else { a_u * a_u / den };
    let crowding = p.mu * (1.0 + p.k * (l_u + l_w));
    out[0] = p.alpha_u * ratio - p.nu * l_u - crowding * l_u;
    out[1] = p.nu * l_u - p.mu_u * a_u;
    out[2] = p.alpha_w * a_w - p.nu * l_w - crowding * l_w + u;
    out[3] = p.nu * l_w - p.mu_w * a_w;
}

/// Evaluate the model field at `(x, u)`.
///
/// `x` must be componentwise nonnegative and `u ≥ 0`; at `A_U = A_W = 0` the
/// birth ratio is defined as `0` by continuity.
pub fn wolbachia_f(p: &WolbachiaParams, x: &[f64], u: f64) -> Result<[f64; 4]> {
    if x.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: x.len() });
    }
    if x.iter().any(|v| *v < 0.0) || u < 0.0 {
        return Err(Error::InvalidArgument("model inputs must be nonnegative".into()));
    }
    let mut out = [0.0; 4];
    rhs(p, x, u, &mut out);
    Ok(out)
}

/// Analytic state Jacobian of the model field (independent of `u`).
pub fn wolbachia_jacobian(p: &WolbachiaParams, x: &[f64]) -> [[f64; 4]; 4] {
    let (l_u, a_u, l_w, a_w) = (x[0], x[1], x[2], x[3]);
    let den = a_u + a_w;
    let (d_ratio_au, d_ratio_aw) = if den <= RATIO_GUARD {
        (0.0, 0.0)
    } else {
        (a_u * (a_u + 2.0 * a_w) / (den * den), -(a_u * a_u) / (den * den))
    };
    let crowding = p.mu * (1.0 + p.k * (l_u + l_w));
    [
        [
            -p.nu - crowding - p.mu * p.k * l_u,
            p.alpha_u * d_ratio_au,
            -p.mu * p.k * l_u,
            p.alpha_u * d_ratio_aw,
        ],
        [p.nu, -p.mu_u, 0.0, 0.0],
        [-p.mu * p.k * l_w, 0.0, -p.nu - crowding - p.mu * p.k * l_w, p.alpha_w],
        [0.0, 0.0, p.nu, -p.mu_w],
    ]
}

/// The model as a [`ControlledSystem`] on the nonnegative orthant with
/// `u ∈ [0, u♯]`.
pub fn wolbachia_system(p: &WolbachiaParams) -> ControlledSystem {
    let params = p.clone();
    ControlledSystem::new(
        4,
        1,
        ControlSet::interval(0.0, p.u_sharp),
        move |x, u, out| rhs(&params, x, u[0], out),
    )
}

/// The reduced field with the control pinned to `u♯` (still exposes a control
/// argument, which it ignores).
pub fn wolbachia_sharp_system(p: &WolbachiaParams) -> ControlledSystem {
    let params = p.clone();
    let u_sharp = p.u_sharp;
    ControlledSystem::new(
        4,
        1,
        ControlSet::interval(0.0, p.u_sharp),
        move |x, _, out| rhs(&params, x, u_sharp, out),
    )
}

/// Uncontrolled Wolbachia-free equilibrium `(L_U*, A_U*, 0, 0)`.
pub fn wolbachia_free_equilibrium(p: &WolbachiaParams) -> [f64; 4] {
    let l_u = (p.alpha_u * p.nu / p.mu_u - p.nu - p.mu) / (p.mu * p.k);
    [l_u, p.nu * l_u / p.mu_u, 0.0, 0.0]
}

/// Uncontrolled Wolbachia-dominant equilibrium `(0, 0, L_W*, A_W*)`.
pub fn wolbachia_dominant_equilibrium(p: &WolbachiaParams) -> [f64; 4] {
    let l_w = (p.alpha_w * p.nu / p.mu_w - p.nu - p.mu) / (p.mu * p.k);
    [0.0, 0.0, l_w, p.nu * l_w / p.mu_w]
}

/// Equilibrium of the `u♯`-forced system on the uninfected-free face:
/// the positive root of `μk L² − (α_W ν/μ_W − ν − μ) L − u♯ = 0`.
pub fn forced_equilibrium(p: &WolbachiaParams) -> [f64; 4] {
    let b = p.alpha_w * p.nu / p.mu_w - p.nu - p.mu;
    let l_w = (b + (b * b + 4.0 * p.mu * p.k * p.u_sharp).sqrt()) / (2.0 * p.mu * p.k);
    [0.0, 0.0, l_w, p.nu * l_w / p.mu_w]
}

/// The assembled case study: system, desirable set, cone and reduction.
#[derive(Debug)]
pub struct CaseStudy {
    pub system: ControlledSystem,
    pub desirable: DesirableSet,
    pub cone: ConvexCone,
    pub reduction: Reduction,
}

/// Assemble the four artifacts. The desirable set carries the structured form
/// `(threshold point + K) × [0, u♯]`: upper bounds on the uninfected
/// coordinates, lower bounds on the infected ones.
pub fn build_case_study(p: &WolbachiaParams, thr: &WolbachiaThresholds) -> Result<CaseStudy> {
    p.validate()?;
    thr.validate()?;
    let desirable = DesirableSet::from_boxes(
        BoxConstraints {
            lower: vec![None, None, Some(thr.l_w_min), Some(thr.a_w_min)],
            upper: vec![Some(thr.l_u_max), Some(thr.a_u_max), None, None],
        },
        BoxConstraints { lower: vec![Some(0.0)], upper: vec![Some(p.u_sharp)] },
    );
    Ok(CaseStudy {
        system: wolbachia_system(p),
        desirable,
        cone: ConvexCone::orthant(&[-1, -1, 1, 1])?,
        reduction: Reduction::constant(vec![p.u_sharp]),
    })
}

/// Default grid for the case study: a window from the origin past both
/// equilibria (1.5× the natural uninfected levels, 1.65× the forced infected
/// levels), 15 cells per dimension, with the infected upper faces absorbing
/// (the kernel is unbounded in the `L_W`, `A_W` directions).
pub fn default_grid_spec(p: &WolbachiaParams, cells_per_dim: usize) -> Result<KernelGridSpec> {
    let free = wolbachia_free_equilibrium(p);
    let forced = forced_equilibrium(p);
    let window = StateBox::new(
        vec![0.0; 4],
        vec![1.5 * free[0], 1.5 * free[1], 1.65 * forced[2], 1.65 * forced[3]],
    )?;
    Ok(KernelGridSpec::new(window, vec![cells_per_dim; 4])?
        .with_absorbing_upper(vec![false, false, true, true]))
}

/// Default control samples for the full system: `{0, u♯/2, u♯}`.
pub fn default_controls(p: &WolbachiaParams) -> Vec<Vec<f64>> {
    vec![vec![0.0], vec![p.u_sharp / 2.0], vec![p.u_sharp]]
}

/// End-to-end kernel comparison between the full control family and the
/// reduced (constant `u♯`) dynamics.
#[derive(Debug)]
pub struct CaseStudyReport {
    /// Kernel of the full system over the sampled control family.
    pub kernel_full: KernelGrid,
    /// Kernel of the pinned-control field over the same desirable set.
    pub kernel_reduced: KernelGrid,
    /// `full ⊆ reduced` (the nontrivial inclusion).
    pub inclusion_forward: InclusionReport,
    /// `reduced ⊆ full` (holds by construction of the sweep).
    pub inclusion_reverse: InclusionReport,
    pub sym_diff_cells: usize,
    /// Symmetric difference as a fraction of the union's member count.
    pub sym_diff_fraction: f64,
    /// The extended desirable set reproduced the structured form of `D`.
    pub dk_equals_d: bool,
    /// The kernel of `f_φ` over `D_K` matched the reduced kernel cell-exactly.
    pub phi_kernel_matches: bool,
}

impl CaseStudyReport {
    pub fn summary(&self) -> String {
        format!(
            "full kernel: {} cells; reduced kernel: {} cells; full ⊆ reduced: {}; \
             reduced ⊆ full: {}; symmetric difference: {} cells ({:.3}% of union); \
             D_K = D: {}; V(f_φ, D_K) = V(f♯, D): {}",
            self.kernel_full.member_count(),
            self.kernel_reduced.member_count(),
            self.inclusion_forward.holds,
            self.inclusion_reverse.holds,
            self.sym_diff_cells,
            100.0 * self.sym_diff_fraction,
            self.dk_equals_d,
            self.phi_kernel_matches,
        )
    }

    pub fn kernels_equal(&self) -> bool {
        self.inclusion_forward.holds && self.inclusion_reverse.holds
    }
}

/// Compute both kernels and the comparison verdicts.
pub fn reproduce_kernel_equality(
    p: &WolbachiaParams,
    thr: &WolbachiaThresholds,
    spec: &KernelGridSpec,
    controls: &[Vec<f64>],
    dt: f64,
    max_iter: usize,
) -> Result<CaseStudyReport> {
    let case = build_case_study(p, thr)?;
    let kernel_full = compute_kernel(&case.system, &case.desirable, spec, controls, dt, max_iter)?;
    let sharp = wolbachia_sharp_system(p);
    let pinned = vec![vec![p.u_sharp]];
    let kernel_reduced = compute_kernel(&sharp, &case.desirable, spec, &pinned, dt, max_iter)?;

    let d_k = extend_desirable(&case.desirable, &case.cone)?;
    let dk_equals_d = d_k.structured() == case.desirable.structured();
    let f_phi = reduced_dynamics(&case.system, &case.reduction);
    let kernel_phi = compute_kernel(&f_phi, &d_k, spec, &pinned, dt, max_iter)?;
    let phi_kernel_matches = kernel_phi.mask == kernel_reduced.mask;

    let inclusion_forward = kernel_inclusion(&kernel_full, &kernel_reduced)?;
    let inclusion_reverse = kernel_inclusion(&kernel_reduced, &kernel_full)?;
    let sym_diff_cells = inclusion_forward.witnesses.len() + inclusion_reverse.witnesses.len();
    let union = kernel_full
        .mask
        .iter()
        .zip(&kernel_reduced.mask)
        .filter(|(a, b)| **a || **b)
        .count();
    let sym_diff_fraction =
        if union == 0 { 0.0 } else { sym_diff_cells as f64 / union as f64 };

    Ok(CaseStudyReport {
        kernel_full,
        kernel_reduced,
        inclusion_forward,
        inclusion_reverse,
        sym_diff_cells,
        sym_diff_fraction,
        dk_equals_d,
        phi_kernel_matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        check_orthant_quasimonotone, check_reduction, jacobian_fd, SamplingPlan,
        DEFAULT_TOL_GRAD,
    };
    use crate::flow::{integrate, ControlPath};
    use crate::viability::check_equality_condition;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn preset() -> WolbachiaParams {
        WolbachiaParams::preset_default()
    }

    fn thresholds() -> WolbachiaThresholds {
        WolbachiaThresholds::derived_default(&preset())
    }

    fn sampling_plan(count: usize) -> SamplingPlan {
        SamplingPlan::new(vec![0.1; 4], vec![10.0, 5.0, 8.0, 4.0]).with_count(count)
    }

    #[test]
    fn origin_is_an_equilibrium_of_the_uncontrolled_system() {
        let f = wolbachia_f(&preset(), &[0.0; 4], 0.0).unwrap();
        assert_eq!(f, [0.0; 4]);
    }

    #[test]
    fn introduction_feeds_only_infected_larvae_at_origin() {
        let p = preset();
        let f = wolbachia_f(&p, &[0.0; 4], p.u_sharp).unwrap();
        assert_eq!(f, [0.0, 0.0, p.u_sharp, 0.0]);
    }

    #[test]
    fn ratio_reduces_when_no_infected_adults() {
        let p = preset();
        let x = [1.0, 2.0, 3.0, 0.0];
        let f = wolbachia_f(&p, &x, 0.0).unwrap();
        let crowding = p.mu * (1.0 + p.k * (x[0] + x[2]));
        let expected = p.alpha_u * x[1] - p.nu * x[0] - crowding * x[0];
        assert_relative_eq!(f[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn negative_inputs_are_rejected() {
        assert!(wolbachia_f(&preset(), &[-0.1, 0.0, 0.0, 0.0], 0.0).is_err());
        assert!(wolbachia_f(&preset(), &[0.0; 4], -1.0).is_err());
    }

    #[test]
    fn analytic_equilibria_are_stationary() {
        let p = preset();
        for (x, u) in [
            (wolbachia_free_equilibrium(&p), 0.0),
            (wolbachia_dominant_equilibrium(&p), 0.0),
            (forced_equilibrium(&p), p.u_sharp),
        ] {
            let f = wolbachia_f(&p, &x, u).unwrap();
            for v in f {
                assert!(v.abs() < 1e-12, "residual {v:.3e} at {x:?}");
            }
        }
    }

    #[test]
    fn preset_equilibria_match_pinned_values() {
        let p = preset();
        let free = wolbachia_free_equilibrium(&p);
        assert_relative_eq!(free[0], 8.0, epsilon = 1e-12);
        assert_relative_eq!(free[1], 4.0, epsilon = 1e-12);
        let dom = wolbachia_dominant_equilibrium(&p);
        assert_relative_eq!(dom[2], 4.0, epsilon = 1e-12);
        assert_relative_eq!(dom[3], 2.0, epsilon = 1e-12);
        let forced = forced_equilibrium(&p);
        assert_relative_eq!(forced[2], 2.0 + 2.0 * 2.0f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(forced[3], 1.0 + 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn preset_wolbachia_free_state_is_stable_and_forcing_flips_it() {
        let p = preset();
        let sys = wolbachia_system(&p);
        let free = wolbachia_free_equilibrium(&p);
        // Small infected seed dies out without control.
        let seeded = [free[0], free[1], 0.3, 0.15];
        let idle = ControlPath::constant(vec![0.0], 1.0, 400).unwrap();
        let traj = integrate(&sys, &seeded, &idle, 0.02).unwrap();
        let end = traj.final_state();
        assert!(end[2] < 1e-6 && end[3] < 1e-6, "infected persisted: {end:?}");
        assert_relative_eq!(end[0], free[0], epsilon = 1e-6);
        // Maximal introduction from the same state reaches dominance.
        let forced_path = ControlPath::constant(vec![p.u_sharp], 1.0, 400).unwrap();
        let traj = integrate(&sys, &free, &forced_path, 0.02).unwrap();
        let end = traj.final_state();
        let forced = forced_equilibrium(&p);
        assert!(end[0] < 1e-6 && end[1] < 1e-6, "uninfected persisted: {end:?}");
        assert_relative_eq!(end[2], forced[2], epsilon = 1e-6);
        assert_relative_eq!(end[3], forced[3], epsilon = 1e-6);
    }

    #[test]
    fn trajectories_stay_in_nonnegative_orthant() {
        let p = preset();
        let sys = wolbachia_system(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x0: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..6.0)).collect();
            let path =
                ControlPath::random_bang_bang(&mut rng, &[0.0], &[p.u_sharp], 0.5, 8).unwrap();
            let traj = integrate(&sys, &x0, &path, 0.02).unwrap();
            assert!(!traj.blew_up());
            for state in &traj.states {
                for v in state {
                    assert!(*v >= -1e-8, "state escaped the orthant: {state:?}");
                }
            }
        }
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let p = preset();
        let sys = wolbachia_system(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..8.0)).collect();
            let u = vec![rng.gen_range(0.0..p.u_sharp)];
            let fd = jacobian_fd(&sys, &x, &u, 1e-5 * (1.0 + 8.0)).unwrap();
            let exact = wolbachia_jacobian(&p, &x);
            for i in 0..4 {
                for j in 0..4 {
                    assert_relative_eq!(fd[i][j], exact[i][j], epsilon = 1e-5, max_relative = 1e-5);
                }
            }
        }
    }

    #[test]
    fn off_diagonal_signs_follow_the_case_study_cone() {
        // The analytic partials carry the sign pattern that makes the field
        // quasimonotone for the (−,−,+,+) orthant: e.g. ∂F_L/∂A_U ≥ 0,
        // ∂F_L/∂L_W ≤ 0, ∂G_L/∂A_W ≥ 0, ∂G_L/∂L_U ≤ 0.
        let p = preset();
        let signs = [-1.0, -1.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..10.0)).collect();
            let jac = wolbachia_jacobian(&p, &x);
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        assert!(
                            signs[i] * signs[j] * jac[i][j] >= 0.0,
                            "entry ({i},{j}) = {} breaks the sign pattern at {x:?}",
                            jac[i][j]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sampled_quasimonotonicity_check_passes() {
        let case = build_case_study(&preset(), &thresholds()).unwrap();
        let report = check_orthant_quasimonotone(
            &case.system,
            &case.cone,
            &sampling_plan(2000),
            DEFAULT_TOL_GRAD,
        )
        .unwrap();
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn reduction_difference_is_exactly_the_introduced_rate() {
        let p = preset();
        let sys = wolbachia_system(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..2000 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..10.0)).collect();
            let u = rng.gen_range(0.0..p.u_sharp);
            let base = sys.eval(&x, &[u]);
            let pinned = sys.eval(&x, &[p.u_sharp]);
            assert_eq!(pinned[0], base[0]);
            assert_eq!(pinned[1], base[1]);
            assert_eq!(pinned[3], base[3]);
            assert!((pinned[2] - base[2] - (p.u_sharp - u)).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampled_reduction_check_passes_and_zero_map_fails() {
        let case = build_case_study(&preset(), &thresholds()).unwrap();
        let plan = sampling_plan(2000);
        let good = check_reduction(&case.system, &case.cone, &case.reduction, &plan).unwrap();
        assert!(good.passed(), "{}", good.summary());
        let zero = Reduction::constant(vec![0.0]);
        let bad = check_reduction(&case.system, &case.cone, &zero, &plan).unwrap();
        assert!(!bad.passed());
    }

    #[test]
    fn desirable_set_structured_form_matches_written_out_predicate() {
        let p = preset();
        let thr = thresholds();
        let case = build_case_study(&p, &thr).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..12.0)).collect();
            let u = vec![rng.gen_range(-0.5..p.u_sharp + 0.5)];
            let direct = x[0] <= thr.l_u_max
                && x[1] <= thr.a_u_max
                && x[2] >= thr.l_w_min
                && x[3] >= thr.a_w_min
                && u[0] >= 0.0
                && u[0] <= p.u_sharp;
            assert_eq!(case.desirable.contains(&x, &u), direct);
        }
    }

    #[test]
    fn equality_condition_holds_for_the_case_study() {
        let case = build_case_study(&preset(), &thresholds()).unwrap();
        let report = check_equality_condition(
            &case.desirable,
            &case.cone,
            &case.reduction,
            &sampling_plan(5000),
        )
        .unwrap();
        assert!(report.checked > 200, "plan missed the desirable set");
        assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn extended_desirable_set_is_unchanged() {
        let case = build_case_study(&preset(), &thresholds()).unwrap();
        let d_k = extend_desirable(&case.desirable, &case.cone).unwrap();
        assert_eq!(d_k.structured(), case.desirable.structured());
    }

    #[test]
    fn coarse_kernels_agree_between_full_and_reduced() {
        let p = preset();
        let spec = default_grid_spec(&p, 7).unwrap();
        let report = reproduce_kernel_equality(
            &p,
            &thresholds(),
            &spec,
            &default_controls(&p),
            0.05,
            300,
        )
        .unwrap();
        assert!(!report.kernel_reduced.is_empty(), "reduced kernel should be nonempty");
        assert!(report.inclusion_reverse.holds, "{}", report.summary());
        assert!(report.inclusion_forward.holds, "{}", report.summary());
        assert!(report.dk_equals_d);
        assert!(report.phi_kernel_matches);
        assert!(report.kernel_full.meta.converged);
    }

    #[test]
    fn kernel_never_shrinks_when_forcing_grows() {
        // Same state thresholds, larger maximal introduction rate: every cell
        // viable under u♯ stays viable under the stronger forcing.
        let p_small = preset();
        let mut p_large = preset();
        p_large.u_sharp = 3.0;
        let thr = thresholds();
        let spec = default_grid_spec(&p_small, 7).unwrap();
        let dt = 0.05;
        let small = compute_kernel(
            &wolbachia_sharp_system(&p_small),
            &build_case_study(&p_small, &thr).unwrap().desirable,
            &spec,
            &[vec![p_small.u_sharp]],
            dt,
            300,
        )
        .unwrap();
        // Keep D fixed (the control part still allows only [0, 2]): the
        // stronger forcing only changes the dynamics.
        let large = compute_kernel(
            &wolbachia_sharp_system(&p_large),
            &build_case_study(&p_small, &thr).unwrap().desirable,
            &spec,
            &[vec![p_small.u_sharp]],
            dt,
            300,
        )
        .unwrap();
        let incl = kernel_inclusion(&small, &large).unwrap();
        assert!(incl.holds, "forcing monotonicity violated on {} cells", incl.witnesses.len());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut p = preset();
        p.nu = 0.0;
        assert!(p.validate().is_err());
        assert!(WolbachiaParams::preset("nope").is_err());
    }
}
