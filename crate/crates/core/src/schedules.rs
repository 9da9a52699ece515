//! Time-varying parameter curves `ε(t)` (Tikhonov weight, decreasing),
//! `β(t)` (penalty weight, increasing), and `λ(t)` (step size), together
//! with the convergence-condition checks that decide whether a given curve
//! family is admissible.
//!
//! The canonical family is the power law `ε(t) = (t+b)^{−(r+q)}`,
//! `β(t) = (t+b)^q` with `λ(t) = σ/L(t)`, `σ ∈ (0,1)`. For that family the
//! admissibility conditions reduce to three closed-form inequalities in
//! `(q, r)` which are checked exactly; everything else is validated by
//! sampling on a finite horizon, and the resulting report says so.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::ProblemInstance;

/// Default trade-off between contraction and step length: `λ(t) = σ/L(t)`.
pub const DEFAULT_SIGMA: f64 = 0.5;
/// Default power-law parameters: an interior point of the feasible region.
pub const DEFAULT_POWER_LAW: (f64, f64, f64) = (1.0, 0.1, 0.1); // (b, q, r)

type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Power-law parameter curves with the normalized step `λ(t) = σ/L(t)`.
#[derive(Clone, Debug)]
pub struct PowerLawSchedule {
    pub b: f64,
    pub q: f64,
    pub r: f64,
    pub sigma: f64,
    lip_single: f64,
    lip_penalty: f64,
}

/// Frozen parameters; useful as a control case (it cannot satisfy the
/// asymptotic admissibility conditions).
#[derive(Clone, Debug)]
pub struct ConstantSchedule {
    pub eps: f64,
    pub beta: f64,
    pub lambda: f64,
}

/// User-supplied curves. Validated only numerically.
#[derive(Clone)]
pub struct CustomSchedule {
    pub eps: Curve,
    pub beta: Curve,
    pub lambda: Curve,
    pub eps_dot: Curve,
    pub beta_dot: Curve,
}

impl fmt::Debug for CustomSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomSchedule {..}")
    }
}

/// A parameter schedule `t ↦ (ε(t), β(t), λ(t))` with derivative access.
#[derive(Clone, Debug)]
pub enum Schedule {
    PowerLaw(PowerLawSchedule),
    Constant(ConstantSchedule),
    Custom(CustomSchedule),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    PowerLaw,
    Constant,
    Custom,
}

impl Schedule {
    pub fn kind(&self) -> ScheduleKind {
        match self {
            Schedule::PowerLaw(_) => ScheduleKind::PowerLaw,
            Schedule::Constant(_) => ScheduleKind::Constant,
            Schedule::Custom(_) => ScheduleKind::Custom,
        }
    }

    pub fn eps(&self, t: f64) -> f64 {
        match self {
            Schedule::PowerLaw(p) => (t + p.b).powf(-(p.r + p.q)),
            Schedule::Constant(c) => c.eps,
            Schedule::Custom(c) => (c.eps)(t),
        }
    }

    pub fn beta(&self, t: f64) -> f64 {
        match self {
            Schedule::PowerLaw(p) => (t + p.b).powf(p.q),
            Schedule::Constant(c) => c.beta,
            Schedule::Custom(c) => (c.beta)(t),
        }
    }

    pub fn lambda(&self, t: f64) -> f64 {
        match self {
            Schedule::PowerLaw(p) => {
                p.sigma / (p.lip_single + self.eps(t) + self.beta(t) * p.lip_penalty)
            }
            Schedule::Constant(c) => c.lambda,
            Schedule::Custom(c) => (c.lambda)(t),
        }
    }

    pub fn eps_dot(&self, t: f64) -> f64 {
        match self {
            Schedule::PowerLaw(p) => -(p.r + p.q) * (t + p.b).powf(-(p.r + p.q) - 1.0),
            Schedule::Constant(_) => 0.0,
            Schedule::Custom(c) => (c.eps_dot)(t),
        }
    }

    pub fn beta_dot(&self, t: f64) -> f64 {
        match self {
            Schedule::PowerLaw(p) => p.q * (t + p.b).powf(p.q - 1.0),
            Schedule::Constant(_) => 0.0,
            Schedule::Custom(c) => (c.beta_dot)(t),
        }
    }

    /// Constant schedule constructor.
    pub fn constant(eps: f64, beta: f64, lambda: f64) -> Result<Schedule> {
        if !(eps > 0.0 && beta >= 0.0 && lambda > 0.0) {
            return Err(Error::invalid(
                "constant schedule",
                "need eps > 0, beta >= 0, lambda > 0",
            ));
        }
        Ok(Schedule::Constant(ConstantSchedule { eps, beta, lambda }))
    }
}

/// Builds the power-law schedule `ε(t) = (t+b)^{−(r+q)}`, `β(t) = (t+b)^q`,
/// `λ(t) = σ/L(t)` with `L(t) = 1/η + ε(t) + β(t)/μ`.
pub fn power_law_schedule(
    b: f64,
    q: f64,
    r: f64,
    sigma: f64,
    eta: f64,
    mu: f64,
) -> Result<Schedule> {
    for (name, v) in [("b", b), ("q", q), ("r", r)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("must be in (0, inf), got {v}")));
        }
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid("sigma", format!("must be in (0,1), got {sigma}")));
    }
    if !(eta > 0.0) || !(mu > 0.0) {
        return Err(Error::invalid("eta", "eta and mu must be positive"));
    }
    Ok(Schedule::PowerLaw(PowerLawSchedule {
        b,
        q,
        r,
        sigma,
        lip_single: 1.0 / eta,
        lip_penalty: 1.0 / mu,
    }))
}

/// Power-law schedule bound to a problem's Lipschitz constants (avoids the
/// `1/(1/x)` round trip through `η, μ`).
pub fn power_law_for_problem(
    b: f64,
    q: f64,
    r: f64,
    sigma: f64,
    problem: &ProblemInstance,
) -> Result<Schedule> {
    let schedule = power_law_schedule(b, q, r, sigma, 1.0, 1.0)?;
    match schedule {
        Schedule::PowerLaw(mut p) => {
            p.lip_single = problem.lip_single();
            p.lip_penalty = problem.lip_penalty();
            Ok(Schedule::PowerLaw(p))
        }
        _ => unreachable!(),
    }
}

/// How a condition was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Decided exactly from the closed-form inequality.
    Symbolic,
    /// Decided by sampling on a finite grid; not a proof.
    Sampled,
}

/// One admissibility condition with its verdict.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionRecord {
    /// Short stable name, e.g. `2q+r<=1/3`.
    pub name: String,
    /// Human-readable statement of the inequality.
    pub formula: String,
    pub mode: CheckMode,
    pub passed: bool,
    /// Sample time at which the margin was worst, when sampled.
    pub worst_t: Option<f64>,
    /// Slack of the inequality; negative means violated.
    pub margin: f64,
}

/// Verdicts for every admissibility condition of a schedule.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub schedule_kind: ScheduleKind,
    pub conditions: Vec<ConditionRecord>,
    /// True when any condition was decided by sampling only.
    pub sampled_only: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.conditions
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Plain-text rendering, one line per condition.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("schedule kind: {:?}\n", self.schedule_kind));
        for c in &self.conditions {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let mode = match c.mode {
                CheckMode::Symbolic => "symbolic",
                CheckMode::Sampled => "sampled",
            };
            let worst = c
                .worst_t
                .map(|t| format!(", worst t = {t:.6e}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "  [{verdict}] {name}: {formula} ({mode}, margin = {margin:.6e}{worst})\n",
                name = c.name,
                formula = c.formula,
                margin = c.margin,
            ));
        }
        if self.sampled_only {
            out.push_str("  note: sampled on a finite grid, not a proof\n");
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.passed() { "pass" } else { "FAIL" }
        ));
        out
    }
}

fn symbolic(name: &str, formula: &str, margin: f64) -> ConditionRecord {
    ConditionRecord {
        name: name.to_string(),
        formula: formula.to_string(),
        mode: CheckMode::Symbolic,
        passed: margin >= 0.0,
        worst_t: None,
        margin,
    }
}

/// Exact check of the three power-law feasibility inequalities.
///
/// All three must hold for the schedule to satisfy the asymptotic
/// conditions: `2q+r < 1/2` keeps the decay-rate integral divergent,
/// `2r+3q < 1` makes the relative Tikhonov drift vanish, and `2q+r ≤ 1/3`
/// keeps the relative penalty drift bounded.
pub fn check_power_law_conditions(q: f64, r: f64) -> Result<ValidationReport> {
    if !(q > 0.0 && r > 0.0) {
        return Err(Error::invalid("q", "q and r must be positive"));
    }
    let conditions = vec![
        // Strict inequalities get a margin that must be strictly positive;
        // encode "x < y" as margin = y - x with pass iff margin > 0.
        ConditionRecord {
            passed: 0.5 - (2.0 * q + r) > 0.0,
            ..symbolic("2q+r<1/2", "2q + r < 1/2", 0.5 - (2.0 * q + r))
        },
        ConditionRecord {
            passed: 1.0 - (2.0 * r + 3.0 * q) > 0.0,
            ..symbolic("2r+3q<1", "2r + 3q < 1", 1.0 - (2.0 * r + 3.0 * q))
        },
        symbolic(
            "2q+r<=1/3",
            "2q + r <= 1/3",
            1.0 / 3.0 - (2.0 * q + r),
        ),
    ];
    Ok(ValidationReport {
        schedule_kind: ScheduleKind::PowerLaw,
        conditions,
        sampled_only: false,
    })
}

/// The derived quantities entering the convergence conditions at time `t`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TheoremQuantities {
    /// `L(t) = 1/η + ε(t) + β(t)/μ`, the modulus of the frozen field.
    pub modulus: f64,
    /// `a(t) = 2 + 1/(λε) + 1/(ηε) + β/(με)`: bounds `‖x−x̄‖ ≤ a‖x−p‖`.
    pub tracking_factor: f64,
    /// `δ(t) = (1 − λL)/a²`: the decay rate of the tracking error.
    pub delta: f64,
    /// `κ(t) = √((1+2λL)(1+λ²L²−2λε))`: Lipschitz bound of the field.
    pub kappa: f64,
}

/// Evaluates `L`, `a`, `δ`, `κ` at time `t` for the given schedule and
/// operator constants.
///
/// Requires the hypothesis `λ(t)ε(t) < 1/η + β(t)/μ`; the error names the
/// inequality when it fails.
pub fn theorem_quantities(
    schedule: &Schedule,
    eta: f64,
    mu: f64,
    t: f64,
) -> Result<TheoremQuantities> {
    if !(eta > 0.0) || !(mu > 0.0) {
        return Err(Error::invalid("eta", "eta and mu must be positive"));
    }
    let eps = schedule.eps(t);
    let beta = schedule.beta(t);
    let lambda = schedule.lambda(t);
    quantities_from_values(eps, beta, lambda, 1.0 / eta, 1.0 / mu)
}

pub(crate) fn quantities_from_values(
    eps: f64,
    beta: f64,
    lambda: f64,
    lip_single: f64,
    lip_penalty: f64,
) -> Result<TheoremQuantities> {
    let forward_lip = lip_single + beta * lip_penalty;
    if !(lambda * eps < forward_lip) {
        return Err(Error::Precondition(format!(
            "lambda(t)*eps(t) < 1/eta + beta(t)/mu violated: {} >= {}",
            lambda * eps,
            forward_lip
        )));
    }
    let modulus = lip_single + eps + beta * lip_penalty;
    let tracking_factor = 2.0 + 1.0 / (lambda * eps) + lip_single / eps + beta * lip_penalty / eps;
    let delta = (1.0 - lambda * modulus) / (tracking_factor * tracking_factor);
    let lm = lambda * modulus;
    let kappa = ((1.0 + 2.0 * lm) * (1.0 + lm * lm - 2.0 * lambda * eps)).sqrt();
    Ok(TheoremQuantities {
        modulus,
        tracking_factor,
        delta,
        kappa,
    })
}

/// Log-spaced sample grid over `[0, horizon]`: the first point is exactly
/// 0 and the last exactly `horizon`.
fn sample_grid(horizon: f64, points: usize) -> Vec<f64> {
    let mut ts = Vec::with_capacity(points);
    ts.push(0.0);
    let m = points - 1;
    if m == 1 {
        ts.push(horizon);
        return ts;
    }
    let t0 = horizon * 1e-3;
    for i in 1..=m {
        let frac = (i - 1) as f64 / (m - 1) as f64;
        ts.push(t0 * (horizon / t0).powf(frac));
    }
    ts
}

fn sampled(name: &str, formula: &str, passed: bool, worst_t: f64, margin: f64) -> ConditionRecord {
    ConditionRecord {
        name: name.to_string(),
        formula: formula.to_string(),
        mode: CheckMode::Sampled,
        passed,
        worst_t: Some(worst_t),
        margin,
    }
}

/// Validates a schedule against the admissibility conditions.
///
/// Power-law schedules are decided symbolically: the three closed-form
/// `(q, r)` inequalities, `λ(t)L(t) = σ < 1`, and
/// `limsup λ(t)β(t) = σμ < μ`. Anything else is decided by sampling on a
/// log-spaced grid over `[0, horizon]` with the following heuristics, and
/// the report is marked as sampled:
///
/// * `ε` must decrease towards 0 (this is what rules out a constant
///   Tikhonov weight, whose regularized solutions cannot approach the
///   solution set);
/// * `λL < 1` and `λβ < μ` at every sample;
/// * `δ(t)` must trend to 0 while its running integral keeps growing;
/// * `|ε̇|/(εδ)` must trend to 0 and `β̇/(εδ)` must stay bounded.
pub fn validate_schedule(
    schedule: &Schedule,
    eta: f64,
    mu: f64,
    horizon: f64,
    grid: usize,
) -> Result<ValidationReport> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    if grid < 2 {
        return Err(Error::invalid("grid", "need at least 2 points"));
    }
    if let Schedule::PowerLaw(p) = schedule {
        let mut report = check_power_law_conditions(p.q, p.r)?;
        report.conditions.push(symbolic(
            "lambda*L<1",
            "lambda(t)*L(t) = sigma < 1",
            1.0 - p.sigma,
        ));
        // lambda*beta = sigma*beta/L <= sigma*mu since L >= beta/mu; when the
        // penalty vanishes (1/mu = 0) the constraint set is the whole space
        // and the condition is vacuous.
        let margin = if p.lip_penalty == 0.0 {
            f64::INFINITY
        } else {
            (1.0 - p.sigma) / p.lip_penalty
        };
        report.conditions.push(symbolic(
            "limsup lambda*beta<mu",
            "limsup_{t->inf} lambda(t)*beta(t) < mu",
            margin,
        ));
        return Ok(report);
    }

    // Sampled path for constant and custom schedules.
    let lip_single = 1.0 / eta;
    let lip_penalty = 1.0 / mu;
    let ts = sample_grid(horizon, grid);
    let n = ts.len();

    let eps: Vec<f64> = ts.iter().map(|&t| schedule.eps(t)).collect();
    let beta: Vec<f64> = ts.iter().map(|&t| schedule.beta(t)).collect();
    let lambda: Vec<f64> = ts.iter().map(|&t| schedule.lambda(t)).collect();
    let modulus: Vec<f64> = (0..n)
        .map(|i| lip_single + eps[i] + beta[i] * lip_penalty)
        .collect();
    let delta: Vec<f64> = (0..n)
        .map(|i| {
            let a = 2.0 + 1.0 / (lambda[i] * eps[i])
                + lip_single / eps[i]
                + beta[i] * lip_penalty / eps[i];
            (1.0 - lambda[i] * modulus[i]) / (a * a)
        })
        .collect();

    let mut conditions = Vec::new();

    // eps must decrease towards zero: a non-vanishing Tikhonov term pins the
    // regularized solutions away from the solution set.
    {
        let monotone = eps.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        let decay_margin = 0.9 * eps[0] - eps[n - 1];
        conditions.push(sampled(
            "lim eps(t)=0 implied by (b)",
            "eps(t) decreasing to 0 (non-vanishing Tikhonov term rejected)",
            monotone && decay_margin > 0.0,
            ts[n - 1],
            if monotone { decay_margin } else { -1.0 },
        ));
    }

    // Step-size contraction at every sample.
    {
        let (mut worst_t, mut margin) = (ts[0], f64::INFINITY);
        for i in 0..n {
            let m = 1.0 - lambda[i] * modulus[i];
            if m < margin {
                margin = m;
                worst_t = ts[i];
            }
        }
        conditions.push(sampled(
            "lambda*L<1",
            "lambda(t)*L(t) < 1 at every sample",
            margin > 0.0,
            worst_t,
            margin,
        ));
    }

    // limsup lambda*beta < mu, sampled.
    {
        let (mut worst_t, mut margin) = (ts[0], f64::INFINITY);
        for i in 0..n {
            let m = mu - lambda[i] * beta[i];
            if m < margin {
                margin = m;
                worst_t = ts[i];
            }
        }
        let vacuous = lip_penalty == 0.0;
        conditions.push(sampled(
            "limsup lambda*beta<mu",
            "lambda(t)*beta(t) < mu at every sample",
            vacuous || margin > 0.0,
            worst_t,
            if vacuous { f64::INFINITY } else { margin },
        ));
    }

    // (a) delta -> 0.
    {
        let margin = 0.9 * delta[0] - delta[n - 1];
        conditions.push(sampled(
            "(a) lim delta=0",
            "delta(t) trending to 0",
            margin > 0.0,
            ts[n - 1],
            margin,
        ));
    }

    // (a) integral of delta diverging: the tail half keeps contributing.
    {
        let mut head = 0.0;
        let mut tail = 0.0;
        for i in 1..n {
            let inc = 0.5 * (delta[i] + delta[i - 1]) * (ts[i] - ts[i - 1]);
            if ts[i] <= 0.5 * horizon {
                head += inc;
            } else {
                tail += inc;
            }
        }
        let margin = tail - 0.02 * head;
        conditions.push(sampled(
            "(a) integral delta=inf",
            "trapezoid integral of delta still growing over the tail half",
            margin > 0.0,
            ts[n - 1],
            margin,
        ));
    }

    // (b) |eps_dot|/(eps*delta) -> 0. The ratio of a constant schedule is
    // identically zero, which passes; the vanishing-eps condition above is
    // what rejects that case.
    {
        let ratio: Vec<f64> = (0..n)
            .map(|i| schedule.eps_dot(ts[i]).abs() / (eps[i] * delta[i]))
            .collect();
        let margin = 0.9 * ratio[0].max(1e-12) - ratio[n - 1];
        conditions.push(sampled(
            "(b) lim eps_dot/(eps*delta)=0",
            "|eps_dot|/(eps*delta) trending to 0",
            margin > 0.0,
            ts[n - 1],
            margin,
        ));
    }

    // (b) beta_dot/(eps*delta) bounded: tail values must not outgrow the head.
    {
        let ratio: Vec<f64> = (0..n)
            .map(|i| schedule.beta_dot(ts[i]) / (eps[i] * delta[i]))
            .collect();
        let head_max = ratio[..n / 2].iter().cloned().fold(0.0_f64, f64::max);
        let tail_max = ratio[n / 2..].iter().cloned().fold(0.0_f64, f64::max);
        let margin = 2.0 * head_max.max(1e-12) - tail_max;
        conditions.push(sampled(
            "(b) beta_dot/(eps*delta)=O(1)",
            "beta_dot/(eps*delta) bounded over the horizon",
            margin > 0.0,
            ts[n - 1],
            margin,
        ));
    }

    Ok(ValidationReport {
        schedule_kind: schedule.kind(),
        conditions,
        sampled_only: true,
    })
}
