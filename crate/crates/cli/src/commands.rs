//! Subcommand implementations. Each returns the process exit code:
//! 0 = success / all checks passed, 1 = a check or verdict failed,
//! 2 is reserved for usage and configuration errors (mapped in `main`).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};

use viakernel_core::comparison::compare_controlled;
use viakernel_core::cone::ConeKind;
use viakernel_core::dynamics::{
    check_general_quasimonotone, check_orthant_quasimonotone, check_reduction, DEFAULT_TOL_GRAD,
};
use viakernel_core::flow::integrate;
use viakernel_core::viability::{
    check_equality_condition, compute_kernel, kernel_inclusion, KernelGrid,
};
use viakernel_core::wolbachia::{
    build_case_study, default_controls, default_grid_spec, forced_equilibrium,
    reproduce_kernel_equality, wolbachia_dominant_equilibrium, wolbachia_free_equilibrium,
    WolbachiaParams, WolbachiaThresholds,
};

use crate::config::ExperimentConfig;

const PLOT_SCRIPT: &str = include_str!("plot_slices.py");

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Hypothesis checks: quasimonotonicity, the reduction property and the
/// set-closure condition, all on the sampled plan from the config.
pub fn cmd_check(config: &ExperimentConfig, out: Option<&Path>, seed: Option<u64>) -> Result<i32> {
    let sys = config.build_system()?;
    let cone = config.build_cone()?;
    let reduction = config.build_reduction()?;
    let desirable = config.build_desirable()?;
    let plan = config.build_plan(seed)?;

    let quasi = if cone.kind() == ConeKind::Orthant {
        check_orthant_quasimonotone(&sys, &cone, &plan, DEFAULT_TOL_GRAD)
    } else {
        check_general_quasimonotone(&sys, &cone, &plan, DEFAULT_TOL_GRAD)
    }
    .map_err(|e| anyhow!(e.to_string()))?;
    let reduction_report =
        check_reduction(&sys, &cone, &reduction, &plan).map_err(|e| anyhow!(e.to_string()))?;
    let equality = check_equality_condition(&desirable, &cone, &reduction, &plan)
        .map_err(|e| anyhow!(e.to_string()))?;

    let reports = [&quasi, &reduction_report, &equality];
    let mut lines = Vec::new();
    for r in reports {
        lines.push(format!("[{}] {}", if r.passed() { "PASS" } else { "FAIL" }, r.summary()));
    }
    let vacuous = equality.checked == 0;
    if vacuous {
        lines.push("[FAIL] kernel-equality condition: sampling plan never hit the desirable set".into());
    }
    let text = lines.join("\n") + "\n";
    print!("{text}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_text(&dir.join("check_report.txt"), &text)?;
    }
    let all_pass = reports.iter().all(|r| r.passed()) && !vacuous;
    Ok(if all_pass { 0 } else { 1 })
}

/// Integrate the configured path from `x0` and write the trajectory CSV.
/// Blow-up is flagged through the exit code.
pub fn cmd_simulate(
    config: &ExperimentConfig,
    x0_flag: Option<Vec<f64>>,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<i32> {
    let sys = config.build_system()?;
    let x0 = x0_flag
        .or_else(|| config.x0.clone())
        .ok_or_else(|| anyhow!("no initial state: pass --x0 or set 'x0' in the config"))?;
    let path = config.build_path(seed)?;
    path.validate_in(sys.control_set()).map_err(|e| anyhow!(e.to_string()))?;
    let dt = config.integration()?.dt;
    let traj = integrate(&sys, &x0, &path, dt).map_err(|e| anyhow!(e.to_string()))?;

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            let file = dir.join("trajectory.csv");
            fs::write(&file, &csv)?;
            println!(
                "wrote {} ({} steps{})",
                file.display(),
                traj.states.len(),
                match traj.blow_up {
                    Some(t) => format!(", blow-up at t={t}"),
                    None => String::new(),
                }
            );
        }
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    Ok(if traj.blew_up() { 1 } else { 0 })
}

fn export_slices(config: &ExperimentConfig, kernel: &KernelGrid, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (i, slice) in config.slices.iter().enumerate() {
        let csv = kernel
            .slice_csv(slice.dims[0], slice.dims[1], &slice.fixed)
            .map_err(|e| anyhow!(e.to_string()))?;
        let label = slice.label.clone().unwrap_or_else(|| format!("{i}"));
        let file = dir.join(format!("slice_{stem}_{label}.csv"));
        write_text(&file, &csv)?;
        written.push(file);
    }
    Ok(written)
}

/// Compute a kernel and persist header, mask, member centers, slices and the
/// plot script.
pub fn cmd_kernel(config: &ExperimentConfig, out: &Path, _seed: Option<u64>) -> Result<i32> {
    let sys = config.build_system()?;
    let desirable = config.build_desirable()?;
    let spec = config.grid_spec()?;
    let integration = config.integration()?;
    let controls = config.controls()?;
    let kernel = compute_kernel(&sys, &desirable, spec, controls, integration.dt, integration.max_iter)
        .map_err(|e| anyhow!(e.to_string()))?;

    ensure_dir(out)?;
    kernel
        .save(&out.join("kernel.json"), &out.join("kernel.mask"))
        .map_err(|e| anyhow!(e.to_string()))?;
    let mut members = Vec::new();
    kernel.write_members_csv(&mut members)?;
    fs::write(out.join("members.csv"), members)?;
    let slices = export_slices(config, &kernel, out, "kernel")?;
    if !slices.is_empty() {
        write_text(&out.join("plot_slices.py"), PLOT_SCRIPT)?;
    }
    println!(
        "kernel: {} / {} cells, {} iterations ({}), wrote {}",
        kernel.member_count(),
        kernel.total_cells(),
        kernel.meta.iterations,
        if kernel.meta.converged { "fixed point" } else { "iteration cap" },
        out.display()
    );
    Ok(0)
}

/// Flow comparison driven by the config: trajectories from `x0` under the
/// configured path versus from `y0` under the reduced path.
pub fn cmd_compare_flows(
    config: &ExperimentConfig,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<i32> {
    let sys = config.build_system()?;
    let cone = config.build_cone()?;
    let reduction = config.build_reduction()?;
    let x0 = config.x0.clone().ok_or_else(|| anyhow!("config is missing 'x0'"))?;
    let y0 = config.y0.clone().unwrap_or_else(|| x0.clone());
    let path = config.build_path(seed)?;
    let dt = config.integration()?.dt;
    let report = compare_controlled(&sys, &cone, &reduction, &x0, &y0, &path, dt)
        .map_err(|e| anyhow!(e.to_string()))?;
    println!(
        "[{}] {}",
        if report.ordered() { "PASS" } else { "FAIL" },
        report.summary()
    );
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_text(&dir.join("compare_report.txt"), &(report.summary() + "\n"))?;
        let mut csv = Vec::new();
        report.write_defect_csv(&mut csv)?;
        fs::write(dir.join("defect.csv"), csv)?;
    }
    Ok(if report.ordered() { 0 } else { 1 })
}

/// Compare two persisted kernels on identical grids: inclusion both ways and
/// the symmetric-difference fraction.
pub fn cmd_compare_kernels(header_a: &Path, header_b: &Path, mask_a: Option<&Path>, mask_b: Option<&Path>) -> Result<i32> {
    let sibling = |header: &Path| -> PathBuf { header.with_extension("mask") };
    let a = KernelGrid::load(header_a, &mask_a.map(PathBuf::from).unwrap_or_else(|| sibling(header_a)))
        .map_err(|e| anyhow!(e.to_string()))?;
    let b = KernelGrid::load(header_b, &mask_b.map(PathBuf::from).unwrap_or_else(|| sibling(header_b)))
        .map_err(|e| anyhow!(e.to_string()))?;
    let ab = kernel_inclusion(&a, &b).map_err(|e| anyhow!(e.to_string()))?;
    let ba = kernel_inclusion(&b, &a).map_err(|e| anyhow!(e.to_string()))?;
    let union = a.mask.iter().zip(&b.mask).filter(|(x, y)| **x || **y).count();
    let sym = ab.witnesses.len() + ba.witnesses.len();
    println!("A: {} members; B: {} members", a.member_count(), b.member_count());
    println!("A ⊆ B: {} ({} witnesses)", ab.holds, ab.witnesses.len());
    println!("B ⊆ A: {} ({} witnesses)", ba.holds, ba.witnesses.len());
    println!(
        "symmetric difference: {} cells ({:.3}% of union)",
        sym,
        if union == 0 { 0.0 } else { 100.0 * sym as f64 / union as f64 }
    );
    Ok(0)
}

/// End-to-end case study: kernels of the full control family and of the
/// pinned-control dynamics, their comparison, slice exports and the preset
/// record.
pub fn cmd_wolbachia(
    preset: &str,
    out: &Path,
    cells: usize,
    dt: f64,
    max_iter: usize,
) -> Result<i32> {
    let params = WolbachiaParams::preset(preset).map_err(|e| anyhow!(e.to_string()))?;
    let thresholds = WolbachiaThresholds::derived_default(&params);
    let spec = default_grid_spec(&params, cells).map_err(|e| anyhow!(e.to_string()))?;
    let controls = default_controls(&params);
    let report = reproduce_kernel_equality(&params, &thresholds, &spec, &controls, dt, max_iter)
        .map_err(|e| anyhow!(e.to_string()))?;

    ensure_dir(out)?;
    // Record the preset in full: parameters, thresholds, equilibria, grid.
    let preset_record = serde_json::json!({
        "preset": preset,
        "params": params,
        "thresholds": thresholds,
        "equilibria": {
            "wolbachia_free": wolbachia_free_equilibrium(&params),
            "wolbachia_dominant": wolbachia_dominant_equilibrium(&params),
            "forced": forced_equilibrium(&params),
        },
        "grid": spec,
        "controls": controls,
        "dt": dt,
        "max_iter": max_iter,
    });
    write_text(&out.join("preset.json"), &serde_json::to_string_pretty(&preset_record)?)?;

    report
        .kernel_full
        .save(&out.join("kernel_full.json"), &out.join("kernel_full.mask"))
        .map_err(|e| anyhow!(e.to_string()))?;
    report
        .kernel_reduced
        .save(&out.join("kernel_reduced.json"), &out.join("kernel_reduced.mask"))
        .map_err(|e| anyhow!(e.to_string()))?;
    for (grid, stem) in [(&report.kernel_full, "full"), (&report.kernel_reduced, "reduced")] {
        let mut members = Vec::new();
        grid.write_members_csv(&mut members)?;
        fs::write(out.join(format!("members_{stem}.csv")), members)?;
        // Infected-plane slices at low/high uninfected loads.
        let mid = cells / 2;
        for (lu, au) in [(0, 0), (mid, mid)] {
            let csv = grid
                .slice_csv(2, 3, &[lu, au, 0, 0])
                .map_err(|e| anyhow!(e.to_string()))?;
            write_text(&out.join(format!("slice_{stem}_lu{lu}_au{au}.csv")), &csv)?;
        }
    }
    write_text(&out.join("plot_slices.py"), PLOT_SCRIPT)?;

    let text = format!(
        "case study '{preset}' on a {cells}^4 grid (dt={dt}, max_iter={max_iter})\n{}\n",
        report.summary()
    );
    print!("{text}");
    write_text(&out.join("report.txt"), &text)?;

    let ok = report.kernels_equal() && report.sym_diff_fraction <= 0.02 && report.dk_equals_d;
    if !ok {
        eprintln!("FAIL: kernel comparison did not reach the expected verdicts");
        return Ok(1);
    }
    Ok(0)
}
