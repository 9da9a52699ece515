//! The four experiment verbs: `validate`, `run`, `oracle`, `sweep`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use viflow::{
    attach_oracle_distance, check_power_law_conditions, integrate, sample_parameter_pairs,
    solve_auxiliary_from, validate_schedule, verify_feasibility_decay,
    verify_solution_map_lipschitz, FeasibilityDecayOptions, Point, Trajectory,
};

use crate::config::ExperimentConfig;
use crate::output::{fmt_f64, line_chart_svg, trajectory_csv, write_file};
use crate::CliError;

/// Margin floor of the solution-map check in `oracle`.
const ORACLE_MARGIN_FLOOR: f64 = -1e-6;

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))
}

/// Schedule validation shared by `validate` and `run`. Writes the report,
/// prints it, and decides the exit path.
fn validate_and_report(
    config: &ExperimentConfig,
    out: &Path,
    allow_invalid: bool,
) -> Result<(), CliError> {
    let problem = config.build_problem()?;
    let schedule = config.build_schedule(&problem)?;
    let report = validate_schedule(
        &schedule,
        problem.eta(),
        problem.mu(),
        config.validation.horizon,
        config.validation.grid,
    )
    .map_err(|e| CliError::Config(format!("validation: {e}")))?;

    let text = report.render_text();
    print!("{text}");
    write_file(&out.join("validation.txt"), &text)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(format!("validation serialization: {e}")))?;
    write_file(&out.join("validation.json"), &json)?;

    if !report.passed() {
        if allow_invalid {
            println!(
                "warning: schedule failed validation ({}); proceeding because the override is set",
                report.failed_names().join(", ")
            );
            return Ok(());
        }
        return Err(CliError::InvalidSchedule);
    }
    Ok(())
}

pub fn cmd_validate(
    config: &ExperimentConfig,
    out: &Path,
    allow_invalid: bool,
) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    validate_and_report(config, out, allow_invalid)
}

pub fn cmd_run(config: &ExperimentConfig, out: &Path, allow_invalid: bool) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    validate_and_report(config, out, allow_invalid)?;

    let problem = config.build_problem()?;
    let schedule = config.build_schedule(&problem)?;
    let integrator_config = config.build_integrator(&problem)?;

    let trajectory = match integrate(&problem, &schedule, &integrator_config) {
        Ok(t) => t,
        Err(viflow::Error::Divergence { last_t, reason }) => {
            let summary = format!("diverged\nlast_finite_t = {}\nreason = {reason}\n", fmt_f64(last_t));
            write_file(&out.join("summary.txt"), &summary)?;
            return Err(CliError::Divergence { last_t });
        }
        Err(e) => return Err(CliError::Config(format!("integration: {e}"))),
    };

    let trajectory = if config.oracle.attach_oracle_distance {
        attach_path_distances(&problem, trajectory)?
    } else {
        trajectory
    };

    write_file(&out.join("trajectory.csv"), &trajectory_csv(&trajectory))?;

    let end = trajectory.last();
    let mut summary = String::new();
    let _ = writeln!(summary, "final_t = {}", fmt_f64(end.t));
    let _ = writeln!(summary, "final_residual_fp = {}", fmt_f64(end.residual_fp));
    let _ = writeln!(summary, "final_feasibility_gap = {}", fmt_f64(end.feasibility_gap));
    if let Some(d) = end.dist_oracle {
        let _ = writeln!(summary, "final_dist_oracle = {}", fmt_f64(d));
    }
    write_file(&out.join("summary.txt"), &summary)?;
    print!("{summary}");

    let residual_points: Vec<(f64, f64)> = trajectory
        .samples
        .iter()
        .map(|s| (s.t, s.residual_fp))
        .collect();
    let gap_points: Vec<(f64, f64)> = trajectory
        .samples
        .iter()
        .map(|s| (s.t, s.feasibility_gap))
        .collect();
    write_file(
        &out.join("residual.svg"),
        &line_chart_svg("fixed-point residual", "|x - p|", &residual_points),
    )?;
    write_file(
        &out.join("gap.svg"),
        &line_chart_svg("feasibility gap", "|B(x)|", &gap_points),
    )?;
    Ok(())
}

/// Solves the auxiliary problem at every recorded parameter pair, warm
/// starting along the path, and attaches the distances.
fn attach_path_distances(
    problem: &viflow::ProblemInstance,
    trajectory: Trajectory,
) -> Result<Trajectory, CliError> {
    let mut solutions = Vec::with_capacity(trajectory.samples.len());
    let mut warm = Point::zeros(problem.dim());
    for s in &trajectory.samples {
        let sol = solve_auxiliary_from(problem, s.eps, s.beta, 1e-10, 500_000, &warm)
            .map_err(|e| CliError::Oracle(format!("path solve at t = {}: {e}", s.t)))?;
        warm = sol.x_bar.clone();
        solutions.push(sol);
    }
    attach_oracle_distance(trajectory, &solutions)
        .map_err(|e| CliError::Oracle(format!("attach: {e}")))
}

pub fn cmd_oracle(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    if !config.oracle.verify_prop1 && !config.oracle.verify_prop2 {
        return Err(CliError::Config(
            "oracle command needs `verify_prop1` and/or `verify_prop2` enabled".to_string(),
        ));
    }
    let problem = config.build_problem()?;
    let mut ok = true;

    if config.oracle.verify_prop1 {
        let opts = FeasibilityDecayOptions {
            n_max: config.oracle.prop1_steps,
            xi_bound: config.oracle.xi_bound,
            ..Default::default()
        };
        let report = verify_feasibility_decay(&problem, &opts)
            .map_err(|e| CliError::Oracle(format!("feasibility decay: {e}")))?;
        let mut csv = String::from("n,eps_n,beta_n,norm_xbar,norm_B_xbar\n");
        for row in &report.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                row.n,
                fmt_f64(row.eps),
                fmt_f64(row.beta),
                fmt_f64(row.norm_xbar),
                fmt_f64(row.norm_penalty)
            );
        }
        write_file(&out.join("prop1.csv"), &csv)?;
        println!(
            "prop1: verdict {:?}, final |B(xbar_n)| = {:.3e}",
            report.verdict, report.final_norm
        );
        ok &= report.verdict == viflow::oracle::DecayVerdict::Pass;
    }

    if config.oracle.verify_prop2 {
        // Row 0 is always an identical pair; the rest are seeded draws.
        let mut pairs = vec![((0.1, 1.0), (0.1, 1.0))];
        pairs.extend(sample_parameter_pairs(
            config.oracle.prop2_pairs,
            config.oracle.seed,
            (0.05, 1.0),
            (1.0, 20.0),
        ));
        let report = verify_solution_map_lipschitz(&problem, &pairs, 1e-8)
            .map_err(|e| CliError::Oracle(format!("solution map: {e}")))?;
        let mut csv = String::from("pair,lhs,rhs,margin\n");
        for (i, p) in report.pairs.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{i},{},{},{}",
                fmt_f64(p.lhs),
                fmt_f64(p.rhs),
                fmt_f64(p.margin)
            );
        }
        write_file(&out.join("prop2.csv"), &csv)?;
        println!(
            "prop2: min margin = {:.3e} over {} pairs (ell_hat = {:.6})",
            report.min_margin(),
            report.pairs.len(),
            report.ell_hat
        );
        ok &= report.min_margin() >= ORACLE_MARGIN_FLOOR;
    }

    if ok {
        Ok(())
    } else {
        Err(CliError::Oracle("a verification check failed".to_string()))
    }
}

pub struct SweepOptions {
    pub grid: usize,
    pub q_max: f64,
    pub r_max: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid: 100,
            q_max: 0.5,
            r_max: 0.5,
        }
    }
}

/// Evaluates the three feasibility inequalities on a `grid x grid` lattice
/// over `(0, q_max] x (0, r_max]` and writes one row per cell.
pub fn cmd_sweep(out: &Path, opts: &SweepOptions) -> Result<PathBuf, CliError> {
    // NaN-rejecting comparisons.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if opts.grid == 0 || !(opts.q_max > 0.0) || !(opts.r_max > 0.0) {
        return Err(CliError::Config("sweep needs a positive grid and bounds".to_string()));
    }
    ensure_out_dir(out)?;
    let n = opts.grid;
    let rows: Vec<String> = (1..=n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let q = opts.q_max * i as f64 / n as f64;
            (1..=n).map(move |j| {
                let r = opts.r_max * j as f64 / n as f64;
                let report = check_power_law_conditions(q, r).expect("q, r positive");
                let verdicts: Vec<bool> = report.conditions.iter().map(|c| c.passed).collect();
                format!(
                    "{},{},{},{},{},{}",
                    fmt_f64(q),
                    fmt_f64(r),
                    verdicts[0],
                    verdicts[1],
                    verdicts[2],
                    report.passed()
                )
            })
        })
        .collect();
    let mut csv =
        String::from("q,r,cond_2q_plus_r_lt_half,cond_2r_plus_3q_lt_1,cond_2q_plus_r_le_third,feasible\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    let path = out.join("region.csv");
    write_file(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(path)
}
