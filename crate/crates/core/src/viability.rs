//! Grid-based viability kernel approximation.
//!
//! The kernel of a desirable set `D` under dynamics `f` is approximated on a
//! uniform box grid by a discrete fixed-point sweep: start from the cells
//! whose centers satisfy `D` for some sampled control, then repeatedly remove
//! cells whose one-RK4-step image (over every sampled control) misses the
//! surviving set dilated by a radius `ρ`. The sweep is monotone, so it reaches
//! a fixed point or the iteration cap.
//!
//! The module also builds the two ingredients of the kernel-comparison
//! machinery: reduced dynamics `f_φ(x,u) = f(x, φ(u))` and the extended
//! desirable set `D_K = D + (K × {0})`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{ConeKind, ConvexCone};
use crate::dynamics::{
    CheckReport, ControlledSystem, Reduction, SamplingPlan, Violation, ViolationDetail,
    CONTROL_SET_TOL,
};
use crate::error::{Error, Result};
use crate::flow::rk4_step;
use crate::util::{all_finite, Halton};

/// Axis-aligned box in state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StateBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("box needs lower < upper per coordinate".into()));
        }
        Ok(StateBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

/// Optional per-coordinate bounds (`None` = unbounded on that side).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxConstraints {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl BoxConstraints {
    pub fn unbounded(dim: usize) -> Self {
        BoxConstraints { lower: vec![None; dim], upper: vec![None; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(j, v)| {
                self.lower[j].map_or(true, |lo| *v >= lo)
                    && self.upper[j].map_or(true, |hi| *v <= hi)
            })
    }
}

/// Structured (box) form of a desirable set: per-coordinate state bounds and
/// control bounds. Needed by the Minkowski-sum construction and the
/// kernel-equality condition check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredForm {
    pub state: BoxConstraints,
    pub control: BoxConstraints,
}

type SetPredicate = dyn Fn(&[f64], &[f64]) -> bool + Send + Sync;

/// The set that state and control must never leave.
#[derive(Clone)]
pub struct DesirableSet {
    predicate: Arc<SetPredicate>,
    structured: Option<StructuredForm>,
}

impl std::fmt::Debug for DesirableSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DesirableSet").field("structured", &self.structured).finish_non_exhaustive()
    }
}

impl DesirableSet {
    pub fn from_predicate(pred: impl Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static) -> Self {
        DesirableSet { predicate: Arc::new(pred), structured: None }
    }

    /// Box-form set; the predicate is derived from the bounds.
    pub fn from_boxes(state: BoxConstraints, control: BoxConstraints) -> Self {
        let form = StructuredForm { state: state.clone(), control: control.clone() };
        DesirableSet {
            predicate: Arc::new(move |x: &[f64], u: &[f64]| state.contains(x) && control.contains(u)),
            structured: Some(form),
        }
    }

    pub fn contains(&self, x: &[f64], u: &[f64]) -> bool {
        (self.predicate)(x, u)
    }

    pub fn structured(&self) -> Option<&StructuredForm> {
        self.structured.as_ref()
    }
}

/// Minkowski sum `D_K = D + (K × {0})` for box-form sets and orthant cones:
/// a `+1` cone sign drops the upper bound of that state coordinate, a `-1`
/// sign drops the lower bound; control bounds are unchanged. The trivial cone
/// `{0}` (polyhedral, no generators) leaves `D` untouched.
pub fn extend_desirable(d: &DesirableSet, cone: &ConvexCone) -> Result<DesirableSet> {
    let form = d.structured().ok_or_else(|| {
        Error::InvalidArgument("Minkowski extension needs a structured (box) desirable set".into())
    })?;
    match cone.kind() {
        ConeKind::Polyhedral if cone.generators().is_empty() => {
            return Ok(DesirableSet::from_boxes(form.state.clone(), form.control.clone()));
        }
        ConeKind::Polyhedral => {
            return Err(Error::InvalidArgument(
                "Minkowski extension supports orthant cones (and the trivial cone)".into(),
            ));
        }
        ConeKind::Orthant => {}
    }
    if cone.dim() != form.state.dim() {
        return Err(Error::DimensionMismatch { expected: form.state.dim(), got: cone.dim() });
    }
    let mut state = form.state.clone();
    for (j, s) in cone.signs().iter().enumerate() {
        if *s > 0.0 {
            state.upper[j] = None;
        } else {
            state.lower[j] = None;
        }
    }
    Ok(DesirableSet::from_boxes(state, form.control.clone()))
}

/// New system evaluating `f_φ(x, u) = f(x, φ(u))`, same domains.
pub fn reduced_dynamics(sys: &ControlledSystem, reduction: &Reduction) -> ControlledSystem {
    let inner = sys.clone();
    let red = reduction.clone();
    ControlledSystem::new(
        sys.dim_state(),
        sys.dim_control(),
        sys.control_set().clone(),
        move |x, u, out| {
            let mapped = red.apply(u);
            inner.eval_into(x, &mapped, out);
        },
    )
    .with_state_domain({
        let inner = sys.clone();
        move |x: &[f64]| inner.in_domain(x)
    })
}

/// Grid geometry and boundary policy for a kernel computation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelGridSpec {
    pub window: StateBox,
    /// Cells per dimension.
    pub shape: Vec<usize>,
    /// Faces through which a one-step image may exit without killing the cell
    /// (used when the window deliberately truncates an unbounded kernel).
    #[serde(default)]
    pub absorbing_lower: Vec<bool>,
    #[serde(default)]
    pub absorbing_upper: Vec<bool>,
    /// Dilation radius; `None` means half the grid-cell diagonal.
    #[serde(default)]
    pub dilation_radius: Option<f64>,
}

impl KernelGridSpec {
    pub fn new(window: StateBox, shape: Vec<usize>) -> Result<Self> {
        if shape.len() != window.dim() {
            return Err(Error::DimensionMismatch { expected: window.dim(), got: shape.len() });
        }
        if shape.iter().any(|s| *s == 0) {
            return Err(Error::InvalidArgument("grid shape entries must be positive".into()));
        }
        let dim = window.dim();
        Ok(KernelGridSpec {
            window,
            shape,
            absorbing_lower: vec![false; dim],
            absorbing_upper: vec![false; dim],
            dilation_radius: None,
        })
    }

    pub fn with_absorbing_upper(mut self, flags: Vec<bool>) -> Self {
        assert_eq!(flags.len(), self.window.dim());
        self.absorbing_upper = flags;
        self
    }

    pub fn with_absorbing_lower(mut self, flags: Vec<bool>) -> Self {
        assert_eq!(flags.len(), self.window.dim());
        self.absorbing_lower = flags;
        self
    }

    pub fn cell_sizes(&self) -> Vec<f64> {
        self.window
            .lower
            .iter()
            .zip(&self.window.upper)
            .zip(&self.shape)
            .map(|((lo, hi), s)| (hi - lo) / *s as f64)
            .collect()
    }

    fn normalize(&self) -> KernelGridSpec {
        let mut spec = self.clone();
        let dim = spec.window.dim();
        if spec.absorbing_lower.len() != dim {
            spec.absorbing_lower = vec![false; dim];
        }
        if spec.absorbing_upper.len() != dim {
            spec.absorbing_upper = vec![false; dim];
        }
        spec
    }
}

/// Provenance of a computed kernel, persisted in the header file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelMeta {
    pub dt: f64,
    pub max_iter: usize,
    pub iterations: usize,
    pub converged: bool,
    pub controls: Vec<Vec<f64>>,
    pub dilation_radius: f64,
    pub absorbing_lower: Vec<bool>,
    pub absorbing_upper: Vec<bool>,
}

/// Uniform box grid with a boolean membership mask (row-major, last dimension
/// fastest).
#[derive(Clone, Debug)]
pub struct KernelGrid {
    pub window: StateBox,
    pub shape: Vec<usize>,
    pub mask: Vec<bool>,
    pub meta: KernelMeta,
}

#[derive(Serialize, Deserialize)]
struct KernelHeader {
    window: StateBox,
    shape: Vec<usize>,
    member_count: usize,
    meta: KernelMeta,
}

impl KernelGrid {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn total_cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn member_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.member_count() == 0
    }

    pub fn cell_sizes(&self) -> Vec<f64> {
        self.window
            .lower
            .iter()
            .zip(&self.window.upper)
            .zip(&self.shape)
            .map(|((lo, hi), s)| (hi - lo) / *s as f64)
            .collect()
    }

    /// Multi-index → flat index (row-major, last dimension fastest).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (i, s) in idx.iter().zip(&self.shape) {
            debug_assert!(i < s);
            flat = flat * s + i;
        }
        flat
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
        idx
    }

    pub fn cell_center(&self, idx: &[usize]) -> Vec<f64> {
        let sizes = self.cell_sizes();
        idx.iter()
            .enumerate()
            .map(|(d, i)| self.window.lower[d] + (*i as f64 + 0.5) * sizes[d])
            .collect()
    }

    /// Flat indices of the member cells.
    pub fn members(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.then_some(i))
            .collect()
    }

    /// Packed mask bytes, row-major cell order, LSB-first within each byte.
    pub fn mask_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; (self.mask.len() + 7) / 8];
        for (i, m) in self.mask.iter().enumerate() {
            if *m {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        bytes
    }

    fn mask_from_bytes(bytes: &[u8], total: usize) -> Result<Vec<bool>> {
        if bytes.len() != (total + 7) / 8 {
            return Err(Error::GridMismatch(format!(
                "mask file holds {} bytes, grid needs {}",
                bytes.len(),
                (total + 7) / 8
            )));
        }
        Ok((0..total).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect())
    }

    /// Persist as a JSON header plus a packed-bit mask file.
    pub fn save(&self, header_path: &Path, mask_path: &Path) -> Result<()> {
        let header = KernelHeader {
            window: self.window.clone(),
            shape: self.shape.clone(),
            member_count: self.member_count(),
            meta: self.meta.clone(),
        };
        fs::write(header_path, serde_json::to_string_pretty(&header)?)?;
        fs::write(mask_path, self.mask_bytes())?;
        Ok(())
    }

    pub fn load(header_path: &Path, mask_path: &Path) -> Result<KernelGrid> {
        let header: KernelHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
        let total: usize = header.shape.iter().product();
        let mask = Self::mask_from_bytes(&fs::read(mask_path)?, total)?;
        let grid = KernelGrid {
            window: header.window,
            shape: header.shape,
            mask,
            meta: header.meta,
        };
        if grid.member_count() != header.member_count {
            return Err(Error::GridMismatch(format!(
                "header lists {} members, mask holds {}",
                header.member_count,
                grid.member_count()
            )));
        }
        Ok(grid)
    }

    /// CSV of member-cell centers with header `x1..xn`.
    pub fn write_members_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim();
        let cols: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", cols.join(","))?;
        for flat in self.members() {
            let center = self.cell_center(&self.multi_index(flat));
            let row: Vec<String> = center.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// 0/1 matrix over dimensions `(dim_row, dim_col)` with the remaining
    /// indices fixed; rows iterate `dim_row`.
    pub fn slice_csv(&self, dim_row: usize, dim_col: usize, fixed: &[usize]) -> Result<String> {
        let n = self.dim();
        if dim_row >= n || dim_col >= n || dim_row == dim_col {
            return Err(Error::InvalidArgument("slice needs two distinct in-range dimensions".into()));
        }
        if fixed.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: fixed.len() });
        }
        for d in 0..n {
            if d != dim_row && d != dim_col && fixed[d] >= self.shape[d] {
                return Err(Error::InvalidArgument(format!(
                    "fixed index {} out of range for dimension {d}",
                    fixed[d]
                )));
            }
        }
        let mut out = String::new();
        let mut idx = fixed.to_vec();
        for r in 0..self.shape[dim_row] {
            idx[dim_row] = r;
            let mut row = Vec::with_capacity(self.shape[dim_col]);
            for c in 0..self.shape[dim_col] {
                idx[dim_col] = c;
                row.push(if self.mask[self.flat_index(&idx)] { "1" } else { "0" });
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Geometry shared by the sweep: precomputed sizes and index helpers.
struct GridGeometry {
    window: StateBox,
    shape: Vec<usize>,
    sizes: Vec<f64>,
    dim: usize,
}

impl GridGeometry {
    fn center(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(d, i)| self.window.lower[d] + (*i as f64 + 0.5) * self.sizes[d])
            .collect()
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for d in (0..self.dim).rev() {
            idx[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
        idx
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (i, s) in idx.iter().zip(&self.shape) {
            flat = flat * s + i;
        }
        flat
    }

    /// Index of the cell containing `x` (must be inside the window).
    fn containing_cell(&self, x: &[f64]) -> Vec<usize> {
        (0..self.dim)
            .map(|d| {
                let raw = ((x[d] - self.window.lower[d]) / self.sizes[d]).floor() as isize;
                raw.clamp(0, self.shape[d] as isize - 1) as usize
            })
            .collect()
    }

    /// Does any member cell center lie within `rho` (Euclidean) of `x`?
    fn near_member(&self, x: &[f64], rho: f64, mask: &[bool]) -> bool {
        // Fast path: the containing cell (its center is within half a cell
        // diagonal, which never exceeds the default rho).
        let home = self.containing_cell(x);
        if mask[self.flat_index(&home)] {
            let c = self.center(&home);
            let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= rho * rho {
                return true;
            }
        }
        // Scan the index block that can hold centers within rho.
        let mut lo = vec![0usize; self.dim];
        let mut hi = vec![0usize; self.dim];
        for d in 0..self.dim {
            let center_coord = |i: usize| self.window.lower[d] + (i as f64 + 0.5) * self.sizes[d];
            let first = (((x[d] - rho) - self.window.lower[d]) / self.sizes[d] - 0.5).ceil();
            let last = (((x[d] + rho) - self.window.lower[d]) / self.sizes[d] - 0.5).floor();
            if last < 0.0 || first > self.shape[d] as f64 - 1.0 {
                return false;
            }
            lo[d] = first.max(0.0) as usize;
            hi[d] = last.min(self.shape[d] as f64 - 1.0) as usize;
            debug_assert!(center_coord(lo[d]) >= x[d] - rho - self.sizes[d]);
        }
        let mut idx = lo.clone();
        loop {
            let flat = self.flat_index(&idx);
            if mask[flat] {
                let c = self.center(&idx);
                let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 <= rho * rho {
                    return true;
                }
            }
            // Odometer increment over the block.
            let mut d = self.dim;
            loop {
                if d == 0 {
                    return false;
                }
                d -= 1;
                if idx[d] < hi[d] {
                    idx[d] += 1;
                    break;
                }
                idx[d] = lo[d];
            }
        }
    }
}

/// Discrete viability sweep. `controls` is the finite control sample list;
/// `dt` the one-step horizon; the iteration stops at a fixed point or
/// `max_iter`.
pub fn compute_kernel(
    sys: &ControlledSystem,
    desirable: &DesirableSet,
    spec: &KernelGridSpec,
    controls: &[Vec<f64>],
    dt: f64,
    max_iter: usize,
) -> Result<KernelGrid> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control sample list is empty".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("kernel time step must be positive".into()));
    }
    if spec.window.dim() != sys.dim_state() || spec.shape.len() != sys.dim_state() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim_state(),
            got: spec.window.dim(),
        });
    }
    for u in controls {
        if !sys.control_set().contains(u, CONTROL_SET_TOL) {
            return Err(Error::OutsideControlSet(format!("{u:?}")));
        }
    }
    let spec = spec.normalize();
    let geom = GridGeometry {
        window: spec.window.clone(),
        shape: spec.shape.clone(),
        sizes: spec.cell_sizes(),
        dim: spec.window.dim(),
    };
    let rho = spec.dilation_radius.unwrap_or_else(|| {
        0.5 * geom.sizes.iter().map(|s| s * s).sum::<f64>().sqrt()
    });
    let total: usize = spec.shape.iter().product();

    // V0: cell centers satisfying D for some sampled control, inside the
    // state domain.
    let mut mask: Vec<bool> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let center = geom.center(&geom.multi_index(flat));
            sys.in_domain(&center) && controls.iter().any(|u| desirable.contains(&center, u))
        })
        .collect();

    let step_survives = |center: &[f64], u: &[f64], mask: &[bool]| -> bool {
        let mut image = rk4_step(sys, center, u, dt);
        if !all_finite(&image) {
            return false;
        }
        for d in 0..geom.dim {
            if image[d] < geom.window.lower[d] {
                if !spec.absorbing_lower[d] {
                    return false;
                }
                image[d] = geom.window.lower[d];
            } else if image[d] > geom.window.upper[d] {
                if !spec.absorbing_upper[d] {
                    return false;
                }
                image[d] = geom.window.upper[d];
            }
        }
        geom.near_member(&image, rho, mask)
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next: Vec<bool> = (0..total)
            .into_par_iter()
            .map(|flat| {
                if !mask[flat] {
                    return false;
                }
                let center = geom.center(&geom.multi_index(flat));
                controls.iter().any(|u| step_survives(&center, u, &mask))
            })
            .collect();
        iterations += 1;
        debug_assert!(
            next.iter().zip(&mask).all(|(n, m)| !*n || *m),
            "viability sweep must be monotone"
        );
        let changed = next.iter().zip(&mask).any(|(a, b)| a != b);
        mask = next;
        if !changed {
            converged = true;
            break;
        }
    }

    Ok(KernelGrid {
        window: spec.window.clone(),
        shape: spec.shape.clone(),
        mask,
        meta: KernelMeta {
            dt,
            max_iter,
            iterations,
            converged,
            controls: controls.to_vec(),
            dilation_radius: rho,
            absorbing_lower: spec.absorbing_lower.clone(),
            absorbing_upper: spec.absorbing_upper.clone(),
        },
    })
}

/// Cell-wise inclusion verdict with the offending cells of `A \ B`.
#[derive(Clone, Debug)]
pub struct InclusionReport {
    pub holds: bool,
    /// Flat indices of member cells of `A` that are not members of `B`.
    pub witnesses: Vec<usize>,
}

/// Does every member cell of `a` belong to `b`? Grids must share window and
/// shape exactly.
pub fn kernel_inclusion(a: &KernelGrid, b: &KernelGrid) -> Result<InclusionReport> {
    if a.shape != b.shape {
        return Err(Error::GridMismatch(format!("shapes {:?} vs {:?}", a.shape, b.shape)));
    }
    if a.window != b.window {
        return Err(Error::GridMismatch("windows differ".into()));
    }
    let witnesses: Vec<usize> = a
        .mask
        .iter()
        .zip(&b.mask)
        .enumerate()
        .filter_map(|(i, (ma, mb))| (*ma && !*mb).then_some(i))
        .collect();
    Ok(InclusionReport { holds: witnesses.is_empty(), witnesses })
}

/// Sampled check of the kernel-equality condition: for `(x, u) ∈ D` and cone
/// members `k`, the shifted pair `(x + k, φ(u))` must stay in `D`.
pub fn check_equality_condition(
    desirable: &DesirableSet,
    cone: &ConvexCone,
    reduction: &Reduction,
    plan: &SamplingPlan,
) -> Result<CheckReport> {
    let form = desirable.structured().ok_or_else(|| {
        Error::InvalidArgument("equality-condition check needs a structured desirable set".into())
    })?;
    if plan.dim() != form.state.dim() {
        return Err(Error::DimensionMismatch { expected: form.state.dim(), got: plan.dim() });
    }
    if cone.dim() != form.state.dim() {
        return Err(Error::DimensionMismatch { expected: form.state.dim(), got: cone.dim() });
    }
    let m = form.control.dim();
    let (c_lo, c_hi): (Vec<f64>, Vec<f64>) = (0..m)
        .map(|j| {
            let lo = form.control.lower[j];
            let hi = form.control.upper[j];
            match (lo, hi) {
                (Some(lo), Some(hi)) => Ok((lo, hi)),
                _ => Err(Error::InvalidArgument(
                    "equality-condition check needs bounded control bounds".into(),
                )),
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();

    let n = plan.dim();
    let mut halton = Halton::new(n + m, plan.skip);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let scale = plan
        .state_upper
        .iter()
        .zip(&plan.state_lower)
        .map(|(hi, lo)| hi - lo)
        .fold(0.0f64, f64::max);
    let mut report = CheckReport::empty("kernel-equality condition");
    for _ in 0..plan.count {
        let p = halton.next_point();
        let x: Vec<f64> = (0..n)
            .map(|j| plan.state_lower[j] + p[j] * (plan.state_upper[j] - plan.state_lower[j]))
            .collect();
        let u: Vec<f64> = (0..m).map(|j| c_lo[j] + p[n + j] * (c_hi[j] - c_lo[j])).collect();
        if !desirable.contains(&x, &u) {
            continue;
        }
        let k_scale = rng.gen_range(0.0..scale).max(1e-6);
        let k = &cone.sample_members(&mut rng, 1, k_scale)[0];
        let shifted: Vec<f64> = x.iter().zip(k).map(|(a, b)| a + b).collect();
        let mapped = reduction.apply(&u);
        if desirable.contains(&shifted, &mapped) {
            report.record_pass();
        } else {
            report.record_failure(Violation {
                x,
                u,
                detail: ViolationDetail::SetEscape { shift: k.clone() },
                value: -1.0,
            });
        }
    }
    Ok(report)
}
