//! Fixed-step explicit integration of the non-autonomous flow
//! `ẋ = f(t, x)` with per-sample diagnostics.
//!
//! The field is globally Lipschitz in `x` for admissible schedules and only
//! mildly stiff, so fixed steps are adequate and keep every run exactly
//! reproducible. Divergence (NaN or a norm beyond 1e12) aborts the run with
//! the last finite time in the error.

use nalgebra::DVector;

use crate::dynamics::{tseng_field, FrozenField};
use crate::error::{Error, Result};
use crate::operators::ProblemInstance;
use crate::oracle::AuxiliarySolution;
use crate::point::Point;
use crate::schedules::Schedule;

/// State norms beyond this are treated as divergence.
const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

/// Configuration of one integration run.
#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    pub step: f64,
    /// Record every `record_stride`-th step (the initial and final states
    /// are always recorded).
    pub record_stride: usize,
    pub initial_point: Point,
}

impl IntegratorConfig {
    pub fn new(method: Method, t_end: f64, step: f64, record_stride: usize, initial_point: Point) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid("t_end", "must be positive and finite"));
        }
        if !(step > 0.0) || step >= t_end {
            return Err(Error::invalid("step", "must satisfy 0 < step < t_end"));
        }
        if record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be at least 1"));
        }
        Ok(IntegratorConfig {
            method,
            t_end,
            step,
            record_stride,
            initial_point,
        })
    }
}

/// One recorded trajectory sample.
#[derive(Clone, Debug)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: Point,
    /// `‖x − p‖` of the field evaluation at this state.
    pub residual_fp: f64,
    /// `‖B(x)‖`: distance-to-feasibility surrogate.
    pub feasibility_gap: f64,
    pub eps: f64,
    pub beta: f64,
    pub lambda: f64,
    /// `‖x(t) − x̄(ε(t), β(t))‖` once an oracle pass has been attached.
    pub dist_oracle: Option<f64>,
}

/// A recorded trajectory; samples are strictly increasing in `t`, starting
/// at `t = 0` and ending at `t = t_end`.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory is never empty")
    }
}

/// Integrates the flow and records diagnostics.
pub fn integrate(
    problem: &ProblemInstance,
    schedule: &Schedule,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    if config.initial_point.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: config.initial_point.dim(),
        });
    }
    let n_steps = ((config.t_end / config.step) - 1e-9).ceil().max(1.0) as usize;

    let mut x = config.initial_point.as_vector().clone();
    let mut trajectory = Trajectory::default();

    let eval = |t: f64, state: &DVector<f64>| -> Result<DVector<f64>> {
        let eps = schedule.eps(t);
        let beta = schedule.beta(t);
        let lambda = schedule.lambda(t);
        let modulus = problem.modulus(eps, beta);
        if !(lambda * modulus < 1.0) {
            return Err(Error::Precondition(format!(
                "lambda(t)*L(t) < 1 violated at t = {t}: {} * {} >= 1",
                lambda, modulus
            )));
        }
        let field = FrozenField::new(problem, eps, beta, lambda)?;
        let (_, xdot) = field.step(state);
        Ok(xdot)
    };

    for step_index in 0..n_steps {
        let t = step_index as f64 * config.step;
        if step_index % config.record_stride == 0 {
            trajectory
                .samples
                .push(record_sample(problem, schedule, t, &x)?);
        }
        let h = config.step.min(config.t_end - t);
        let next = match config.method {
            Method::Euler => {
                let k1 = eval(t, &x)?;
                &x + &(k1 * h)
            }
            Method::Rk4 => {
                let k1 = eval(t, &x)?;
                let k2 = eval(t + 0.5 * h, &(&x + &(&k1 * (0.5 * h))))?;
                let k3 = eval(t + 0.5 * h, &(&x + &(&k2 * (0.5 * h))))?;
                let k4 = eval(t + h, &(&x + &(&k3 * h)))?;
                &x + &((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
            }
        };
        if !next.iter().all(|v| v.is_finite()) || next.norm() > DIVERGENCE_NORM {
            // The state at time t is still finite; the step to t + h is not.
            return Err(Error::Divergence {
                last_t: t,
                reason: "state left the finite range".to_string(),
            });
        }
        x = next;
    }
    trajectory
        .samples
        .push(record_sample(problem, schedule, config.t_end, &x)?);
    Ok(trajectory)
}

fn record_sample(
    problem: &ProblemInstance,
    schedule: &Schedule,
    t: f64,
    x: &DVector<f64>,
) -> Result<TrajectorySample> {
    let state = Point::from_vector(x.clone()).map_err(|_| Error::Divergence {
        last_t: t,
        reason: "non-finite state at a record point".to_string(),
    })?;
    let fe = tseng_field(problem, schedule, t, &state)?;
    let feasibility_gap = problem.penalty().eval_raw(x).norm();
    Ok(TrajectorySample {
        t,
        state,
        residual_fp: fe.residual_fp,
        feasibility_gap,
        eps: fe.eps_used,
        beta: fe.beta_used,
        lambda: fe.lambda_used,
        dist_oracle: None,
    })
}

/// Fills `dist_oracle` with `‖x(tᵢ) − x̄(ε(tᵢ), β(tᵢ))‖` from a matching
/// list of auxiliary solutions (one per recorded sample, at the recorded
/// parameter values).
pub fn attach_oracle_distance(
    mut trajectory: Trajectory,
    oracle_solutions: &[AuxiliarySolution],
) -> Result<Trajectory> {
    if trajectory.samples.len() != oracle_solutions.len() {
        return Err(Error::Mismatch(format!(
            "trajectory has {} samples, got {} oracle solutions",
            trajectory.samples.len(),
            oracle_solutions.len()
        )));
    }
    for (sample, sol) in trajectory.samples.iter_mut().zip(oracle_solutions) {
        let eps_ok = (sample.eps - sol.eps).abs() <= 1e-12 * sample.eps.abs().max(1.0);
        let beta_ok = (sample.beta - sol.beta).abs() <= 1e-12 * sample.beta.abs().max(1.0);
        if !eps_ok || !beta_ok {
            return Err(Error::Mismatch(format!(
                "oracle solution at (eps, beta) = ({}, {}) does not match sample at ({}, {})",
                sol.eps, sol.beta, sample.eps, sample.beta
            )));
        }
        sample.dist_oracle = Some((sample.state.as_vector() - sol.x_bar.as_vector()).norm());
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{solve_auxiliary, solve_auxiliary_from};
    use crate::problems::{make_interval_toy, make_linear_1d};
    use crate::schedules::{power_law_for_problem, Schedule};

    #[test]
    fn equilibrium_stays_put() {
        // Constant schedule, start at the zero of V: the trajectory never moves.
        let problem = make_linear_1d(1.0).unwrap();
        // V(x) = (x - 1) + eps*x; zero at 1/(1+eps) with eps = 1 -> 0.5.
        let schedule = Schedule::constant(1.0, 0.0, 0.25).unwrap();
        let config = IntegratorConfig::new(
            Method::Rk4,
            1.0,
            0.01,
            10,
            Point::new(vec![0.5]).unwrap(),
        )
        .unwrap();
        let traj = integrate(&problem, &schedule, &config).unwrap();
        for s in &traj.samples {
            assert_eq!(s.state.coords(), &[0.5]);
            assert_eq!(s.residual_fp, 0.0);
        }
    }

    #[test]
    fn records_are_strictly_increasing_and_bracket_the_run() {
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();
        let config =
            IntegratorConfig::new(Method::Euler, 2.0, 0.01, 37, Point::zeros(1)).unwrap();
        let traj = integrate(&problem, &schedule, &config).unwrap();
        assert_eq!(traj.samples[0].t, 0.0);
        assert_eq!(traj.last().t, 2.0);
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn diagnostics_match_recomputation() {
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();
        let config = IntegratorConfig::new(Method::Rk4, 5.0, 0.01, 100, Point::zeros(1)).unwrap();
        let traj = integrate(&problem, &schedule, &config).unwrap();
        for s in &traj.samples {
            let fe = tseng_field(&problem, &schedule, s.t, &s.state).unwrap();
            assert_eq!(fe.residual_fp, s.residual_fp);
            let gap = problem.penalty().eval(&s.state).unwrap().norm();
            assert_eq!(gap, s.feasibility_gap);
        }
    }

    #[test]
    fn deterministic_reruns_are_bit_identical() {
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();
        let config = IntegratorConfig::new(Method::Rk4, 3.0, 0.01, 10, Point::zeros(1)).unwrap();
        let a = integrate(&problem, &schedule, &config).unwrap();
        let b = integrate(&problem, &schedule, &config).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert_eq!(sa.state.coords(), sb.state.coords());
            assert_eq!(sa.residual_fp.to_bits(), sb.residual_fp.to_bits());
        }
    }

    #[test]
    fn long_toy_run_tracks_the_regularized_path() {
        // By t = 200 the trajectory sits within 1e-2 of the path
        // x̄(t) = β/(ε+β) and its fixed-point residual is below 1e-3.
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();
        let config =
            IntegratorConfig::new(Method::Rk4, 200.0, 0.01, 1000, Point::zeros(1)).unwrap();
        let traj = integrate(&problem, &schedule, &config).unwrap();
        let end = traj.last();
        assert!(end.residual_fp < 1e-3, "residual = {}", end.residual_fp);
        let path = end.beta / (end.eps + end.beta);
        assert!(
            (end.state.coords()[0] - path).abs() < 1e-2,
            "x = {}, path = {}",
            end.state.coords()[0],
            path
        );
        // The closed-form feasibility gap of the path at this horizon.
        let gap_path = end.eps / (end.eps + end.beta);
        assert!((end.feasibility_gap - gap_path).abs() < 1e-2);
    }

    #[test]
    fn oracle_distance_attachment() {
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();

        // Start exactly at x̄(ε(0), β(0)) so the first distance is ~0.
        let start = solve_auxiliary(&problem, 1.0, 1.0, 1e-12, 100_000).unwrap();
        let config = IntegratorConfig::new(
            Method::Rk4,
            50.0,
            0.01,
            500,
            start.x_bar.clone(),
        )
        .unwrap();
        let traj = integrate(&problem, &schedule, &config).unwrap();
        let sols: Vec<_> = traj
            .samples
            .iter()
            .map(|s| solve_auxiliary(&problem, s.eps, s.beta, 1e-12, 100_000).unwrap())
            .collect();
        let traj = attach_oracle_distance(traj, &sols).unwrap();
        let d0 = traj.samples[0].dist_oracle.unwrap();
        assert!(d0 <= 1e-10, "d0 = {d0}");
        for s in &traj.samples {
            assert!(s.dist_oracle.unwrap() >= 0.0);
        }
        // The tracking distance stays small along the whole run.
        assert!(traj.last().dist_oracle.unwrap() < 1e-2);
    }

    #[test]
    fn oracle_distance_eventually_decreases() {
        // After the initial transient the trajectory settles into a lag
        // behind the moving path, and the lag shrinks as the path slows:
        // the last quarter of the samples is monotone nonincreasing.
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();
        let config =
            IntegratorConfig::new(Method::Rk4, 200.0, 0.01, 200, Point::zeros(1)).unwrap();
        let traj = integrate(&problem, &schedule, &config).unwrap();
        let mut warm = Point::zeros(1);
        let mut sols = Vec::new();
        for s in &traj.samples {
            let sol =
                solve_auxiliary_from(&problem, s.eps, s.beta, 1e-12, 100_000, &warm).unwrap();
            warm = sol.x_bar.clone();
            sols.push(sol);
        }
        let traj = attach_oracle_distance(traj, &sols).unwrap();
        let dist: Vec<f64> = traj
            .samples
            .iter()
            .map(|s| s.dist_oracle.unwrap())
            .collect();
        let tail = &dist[dist.len() - dist.len() / 4..];
        for w in tail.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "tail not decreasing: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn oracle_distance_rejects_mismatches() {
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();
        let config = IntegratorConfig::new(Method::Rk4, 1.0, 0.01, 10, Point::zeros(1)).unwrap();
        let traj = integrate(&problem, &schedule, &config).unwrap();
        assert!(attach_oracle_distance(traj.clone(), &[]).is_err());
        let wrong = solve_auxiliary(&problem, 0.123, 9.0, 1e-8, 100_000).unwrap();
        let sols = vec![wrong; traj.samples.len()];
        assert!(attach_oracle_distance(traj, &sols).is_err());
    }

    #[test]
    fn divergence_is_detected_with_last_finite_time() {
        // A huge Euler step on the linear instance overshoots geometrically.
        let problem = make_linear_1d(1.0).unwrap();
        let schedule = Schedule::constant(1.0, 0.0, 0.25).unwrap();
        let config = IntegratorConfig::new(
            Method::Euler,
            1e7,
            1e6,
            1,
            Point::new(vec![100.0]).unwrap(),
        )
        .unwrap();
        let err = integrate(&problem, &schedule, &config).unwrap_err();
        match err {
            Error::Divergence { last_t, .. } => assert!(last_t >= 0.0),
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn config_validation() {
        let p = Point::zeros(1);
        assert!(IntegratorConfig::new(Method::Rk4, 1.0, 2.0, 1, p.clone()).is_err());
        assert!(IntegratorConfig::new(Method::Rk4, 1.0, 0.1, 0, p.clone()).is_err());
        assert!(IntegratorConfig::new(Method::Rk4, -1.0, 0.1, 1, p).is_err());
    }
}
