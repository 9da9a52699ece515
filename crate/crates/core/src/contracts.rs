//! Sampled verification of the operator capability contracts on a problem
//! instance: firm nonexpansiveness of the resolvent, monotonicity and the
//! Lipschitz bound of the single-valued maps, cocoercivity of the penalty,
//! and strong monotonicity of the regularized field.
//!
//! These are sampled checks, not proofs; they exist to catch wired-up
//! instances whose stored constants do not match their actual behavior.

use serde::Serialize;

use crate::operators::ProblemInstance;
use crate::sampling::{StateSampler, PROBE_RADII};

/// Default slack for the sampled inequalities.
pub const CONTRACT_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct ContractCheck {
    pub name: String,
    pub samples: usize,
    /// Worst slack observed; negative means a violation.
    pub worst_margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContractReport {
    pub problem: String,
    pub checks: Vec<ContractCheck>,
}

impl ContractReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("contracts for {}\n", self.problem);
        for c in &self.checks {
            out.push_str(&format!(
                "  [{}] {} ({} samples, worst margin {:.3e})\n",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.samples,
                c.worst_margin
            ));
        }
        out
    }
}

struct CheckAccumulator {
    name: &'static str,
    samples: usize,
    worst: f64,
    slack: f64,
}

impl CheckAccumulator {
    fn new(name: &'static str, slack: f64) -> Self {
        CheckAccumulator {
            name,
            samples: 0,
            worst: f64::INFINITY,
            slack,
        }
    }

    fn observe(&mut self, margin: f64) {
        self.samples += 1;
        if margin < self.worst {
            self.worst = margin;
        }
    }

    fn finish(self) -> ContractCheck {
        ContractCheck {
            name: self.name.to_string(),
            samples: self.samples,
            worst_margin: self.worst,
            passed: self.worst >= -self.slack,
        }
    }
}

/// Runs the full sampled contract suite with `pairs` sample pairs per check.
pub fn check_problem_contracts(
    problem: &ProblemInstance,
    pairs: usize,
    seed: u64,
    slack: f64,
) -> ContractReport {
    let dim = problem.dim();
    let mut checks = Vec::new();

    // Firm nonexpansiveness of the resolvent, across several step sizes:
    // ||Jy1 - Jy2||^2 <= <y1 - y2, Jy1 - Jy2>.
    {
        let mut acc = CheckAccumulator::new("resolvent firm nonexpansiveness", slack);
        let mut sampler = StateSampler::new(dim, &PROBE_RADII, seed);
        for k in 0..pairs {
            let lambda = [0.05, 0.5, 5.0][k % 3];
            let (y1, y2) = sampler.next_pair();
            let j1 = problem.set_valued().apply_raw(lambda, &y1);
            let j2 = problem.set_valued().apply_raw(lambda, &y2);
            let dj = &j1 - &j2;
            let dy = &y1 - &y2;
            acc.observe(dy.dot(&dj) - dj.dot(&dj));
        }
        checks.push(acc.finish());
    }

    // Monotonicity and Lipschitz bound of D and B.
    for (label, map) in [
        ("single-valued map", problem.single_valued()),
        ("penalty map", problem.penalty()),
    ] {
        let mut mono = CheckAccumulator::new(
            if label == "penalty map" {
                "penalty monotonicity"
            } else {
                "single-valued monotonicity"
            },
            slack,
        );
        let mut lip = CheckAccumulator::new(
            if label == "penalty map" {
                "penalty lipschitz bound"
            } else {
                "single-valued lipschitz bound"
            },
            slack,
        );
        let mut sampler = StateSampler::new(dim, &PROBE_RADII, seed ^ 0x11);
        for _ in 0..pairs {
            let (x, y) = sampler.next_pair();
            let df = map.eval_raw(&x) - map.eval_raw(&y);
            let dx = &x - &y;
            mono.observe(df.dot(&dx));
            lip.observe(map.lipschitz_constant() * dx.norm() - df.norm());
        }
        checks.push(mono.finish());
        checks.push(lip.finish());
    }

    // Cocoercivity of the penalty: <B(x)-B(y), x-y> >= gamma ||B(x)-B(y)||^2.
    {
        let gamma = problem.gamma();
        let mut acc = CheckAccumulator::new("penalty cocoercivity", slack);
        let mut sampler = StateSampler::new(dim, &PROBE_RADII, seed ^ 0x22);
        for _ in 0..pairs {
            let (x, y) = sampler.next_pair();
            let db = problem.penalty().eval_raw(&x) - problem.penalty().eval_raw(&y);
            let dx = &x - &y;
            let quad = db.dot(&db);
            // gamma = +inf encodes the zero map, whose quadratic term vanishes.
            let rhs = if quad == 0.0 { 0.0 } else { gamma * quad };
            acc.observe(db.dot(&dx) - rhs);
        }
        checks.push(acc.finish());
    }

    // Strong monotonicity and the Lipschitz modulus of the regularized field
    // at two parameter pairs.
    for (eps, beta) in [(1.0, 1.0), (0.5, 2.0)] {
        let modulus = problem.modulus(eps, beta);
        let mut strong = CheckAccumulator::new("field strong monotonicity", slack);
        let mut lip = CheckAccumulator::new("field lipschitz modulus", slack);
        let mut sampler = StateSampler::new(dim, &PROBE_RADII, seed ^ 0x33);
        for _ in 0..pairs {
            let (x, y) = sampler.next_pair();
            let dv = problem.eval_v_raw(eps, beta, &x) - problem.eval_v_raw(eps, beta, &y);
            let dx = &x - &y;
            strong.observe(dv.dot(&dx) - eps * dx.dot(&dx));
            lip.observe(modulus * dx.norm() - dv.norm());
        }
        checks.push(strong.finish());
        checks.push(lip.finish());
    }

    // A stored feasible point must be exactly feasible.
    if let Some(z) = problem.feasible_point() {
        let mut acc = CheckAccumulator::new("penalty vanishes at feasible point", slack);
        acc.observe(-problem.penalty().eval_raw(z.as_vector()).norm());
        checks.push(acc.finish());
    }

    ContractReport {
        problem: problem.label().to_string(),
        checks,
    }
}
