//! The penalty-regulated Tseng vector field.
//!
//! For frozen parameters `(ε, β, λ)` the flow direction at `x` is built from
//! one resolvent call and two field evaluations:
//!
//! ```text
//! p    = res_{λA}(x − λV(x)),        V(x) = D(x) + εx + βB(x)
//! xdot = p − x + λ·(V(x) − V(p))
//! ```
//!
//! The same map can be written as the composition
//! `(R ∘ res_{λA} ∘ R)(x) − R(x)` with the reflection `R(x) = x − λV(x)`;
//! both forms are implemented and the composition form exists purely as an
//! algebraic cross-check of the canonical two-line form.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::ProblemInstance;
use crate::point::Point;
use crate::sampling::{StateSampler, PROBE_RADII};
use crate::schedules::Schedule;

/// One evaluation of the flow direction, with the diagnostics that the
/// trajectory recorder wants.
#[derive(Clone, Debug)]
pub struct FieldEvaluation {
    /// The resolvent point `p = res_{λA}(x − λV(x))`.
    pub p: Point,
    /// The flow direction `p − x + λ(V(x) − V(p))`.
    pub xdot: Point,
    /// Fixed-point residual `‖x − p‖`; zero exactly at zeros of `A + V`.
    pub residual_fp: f64,
    pub lambda_used: f64,
    pub eps_used: f64,
    pub beta_used: f64,
}

/// Frozen-parameter field: shared by the continuous dynamics, the discrete
/// auxiliary solver, and the growth probe so that every caller evaluates the
/// exact same floating-point expression.
pub(crate) struct FrozenField<'a> {
    problem: &'a ProblemInstance,
    pub eps: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl<'a> FrozenField<'a> {
    pub fn new(problem: &'a ProblemInstance, eps: f64, beta: f64, lambda: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("must be nonnegative, got {beta}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        Ok(FrozenField {
            problem,
            eps,
            beta,
            lambda,
        })
    }

    pub fn v(&self, x: &DVector<f64>) -> DVector<f64> {
        self.problem.eval_v_raw(self.eps, self.beta, x)
    }

    /// Returns `(p, xdot)` of the two-line form.
    pub fn step(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let vx = self.v(x);
        let mut reflected = x.clone();
        reflected.axpy(-self.lambda, &vx, 1.0);
        let p = self.problem.set_valued().apply_raw(self.lambda, &reflected);
        let vp = self.v(&p);
        // xdot = p - x + lambda*(vx - vp)
        let mut xdot = &p - x;
        xdot.axpy(self.lambda, &vx, 1.0);
        xdot.axpy(-self.lambda, &vp, 1.0);
        (p, xdot)
    }

    /// The composition form `(R ∘ res_{λA} ∘ R)(x) − R(x)`, evaluated
    /// literally. Algebraically identical to `step`, numerically independent.
    pub fn composed(&self, x: &DVector<f64>) -> DVector<f64> {
        let reflect = |y: &DVector<f64>| {
            let mut out = y.clone();
            out.axpy(-self.lambda, &self.v(y), 1.0);
            out
        };
        let rx = reflect(x);
        let p = self.problem.set_valued().apply_raw(self.lambda, &rx);
        reflect(&p) - rx
    }
}

fn check_problem_point(problem: &ProblemInstance, x: &Point) -> Result<()> {
    if problem.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// The reflection `R(x) = x − λ·V_{ε,β}(x)`.
pub fn reflect(
    problem: &ProblemInstance,
    eps: f64,
    beta: f64,
    lambda: f64,
    x: &Point,
) -> Result<Point> {
    check_problem_point(problem, x)?;
    let field = FrozenField::new(problem, eps, beta, lambda)?;
    let mut out = x.as_vector().clone();
    out.axpy(-lambda, &field.v(x.as_vector()), 1.0);
    Ok(Point::from_vector_checked(out))
}

/// Evaluates the flow direction at `(t, x)` under a schedule.
///
/// Requires `λ(t)·L(t) < 1` at this `t`; the error names the violated
/// inequality.
pub fn tseng_field(
    problem: &ProblemInstance,
    schedule: &Schedule,
    t: f64,
    x: &Point,
) -> Result<FieldEvaluation> {
    tseng_field_frozen(
        problem,
        schedule.eps(t),
        schedule.beta(t),
        schedule.lambda(t),
        x,
    )
}

/// Evaluates the flow direction for frozen `(ε, β, λ)`.
pub fn tseng_field_frozen(
    problem: &ProblemInstance,
    eps: f64,
    beta: f64,
    lambda: f64,
    x: &Point,
) -> Result<FieldEvaluation> {
    check_problem_point(problem, x)?;
    let modulus = problem.modulus(eps, beta);
    if !(lambda * modulus < 1.0) {
        return Err(Error::Precondition(format!(
            "lambda(t)*L(t) < 1 violated: {} * {} >= 1",
            lambda, modulus
        )));
    }
    let field = FrozenField::new(problem, eps, beta, lambda)?;
    let (p, xdot) = field.step(x.as_vector());
    let residual_fp = (x.as_vector() - &p).norm();
    Ok(FieldEvaluation {
        p: Point::from_vector_checked(p),
        xdot: Point::from_vector_checked(xdot),
        residual_fp,
        lambda_used: lambda,
        eps_used: eps,
        beta_used: beta,
    })
}

/// The composition form of the field, exposed for cross-checking the
/// canonical two-line evaluation.
pub fn tseng_field_composed(
    problem: &ProblemInstance,
    eps: f64,
    beta: f64,
    lambda: f64,
    x: &Point,
) -> Result<Point> {
    check_problem_point(problem, x)?;
    let field = FrozenField::new(problem, eps, beta, lambda)?;
    Ok(Point::from_vector_checked(field.composed(x.as_vector())))
}

/// Empirical Lipschitz constant of `f(t, ·)` at a fixed `t`: the maximum of
/// `‖f(t,x) − f(t,y)‖/‖x − y‖` over seeded Gaussian pairs at radii
/// {1, 10, 100}. Coincident pairs are skipped.
///
/// Requires the hypothesis `λ(t)ε(t) < 1/η + β(t)/μ`, under which the ratio
/// is guaranteed not to exceed `κ(t)`.
pub fn field_lipschitz_probe(
    problem: &ProblemInstance,
    schedule: &Schedule,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be positive"));
    }
    let eps = schedule.eps(t);
    let beta = schedule.beta(t);
    let lambda = schedule.lambda(t);
    let forward_lip = problem.lip_single() + beta * problem.lip_penalty();
    if !(lambda * eps < forward_lip) {
        return Err(Error::Precondition(format!(
            "lambda(t)*eps(t) < 1/eta + beta(t)/mu violated: {} >= {}",
            lambda * eps,
            forward_lip
        )));
    }
    let field = FrozenField::new(problem, eps, beta, lambda)?;
    let mut sampler = StateSampler::new(problem.dim(), &PROBE_RADII, seed);
    let mut best = 0.0_f64;
    for _ in 0..samples {
        let (x, y) = sampler.next_pair();
        let gap = (&x - &y).norm();
        let (_, fx) = field.step(&x);
        let (_, fy) = field.step(&y);
        let ratio = (fx - fy).norm() / gap;
        best = best.max(ratio);
    }
    Ok(best)
}

/// Empirical growth constant of the frozen map `F_{λ,ε,β}`.
#[derive(Clone, Copy, Debug)]
pub struct GrowthEstimate {
    /// `max ‖F(x)‖ / (1 + ‖x‖)` over the sampled states (origin included).
    pub c_hat: f64,
}

/// Estimates the linear-growth constant of `F_{λ,ε,β}` by sampling states
/// with norms up to 10³ (plus the origin).
///
/// Requires `λ < 1/L_{ε,β}`.
pub fn growth_probe(
    problem: &ProblemInstance,
    lambda: f64,
    eps: f64,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<GrowthEstimate> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be positive"));
    }
    let modulus = problem.modulus(eps, beta);
    if !(lambda < 1.0 / modulus) {
        return Err(Error::Precondition(format!(
            "lambda < 1/(1/eta + eps + beta/mu) violated: {} >= {}",
            lambda,
            1.0 / modulus
        )));
    }
    let field = FrozenField::new(problem, eps, beta, lambda)?;
    let mut c_hat: f64 = {
        let zero = DVector::zeros(problem.dim());
        let (_, f0) = field.step(&zero);
        f0.norm()
    };
    let mut sampler = StateSampler::new(problem.dim(), &[1.0, 10.0, 100.0, 1000.0], seed);
    for _ in 0..samples {
        let x = sampler.next_state();
        let (_, fx) = field.step(&x);
        c_hat = c_hat.max(fx.norm() / (1.0 + x.norm()));
    }
    Ok(GrowthEstimate { c_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{resolvent_zero, LipschitzMonotoneMap};
    use crate::problems::{make_interval_toy, make_saddle_point, SaddleSpec};
    use crate::schedules::{power_law_for_problem, theorem_quantities};
    use nalgebra::DMatrix;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    /// 1-D instance with D = Id, B = 0 (so V(x) = (1+eps)x).
    fn identity_drift_problem() -> ProblemInstance {
        let d = LipschitzMonotoneMap::affine(
            "identity",
            DMatrix::identity(1, 1),
            DVector::zeros(1),
        )
        .unwrap();
        ProblemInstance::new(
            "identity-drift",
            1,
            resolvent_zero(),
            d,
            LipschitzMonotoneMap::zero(Some(1)),
        )
        .unwrap()
    }

    #[test]
    fn reflect_examples() {
        let p = identity_drift_problem();
        // V(1) = (1+1)*1 = 2; reflect = 1 - 0.25*2 = 0.5.
        let r = reflect(&p, 1.0, 0.0, 0.25, &pt(&[1.0])).unwrap();
        assert_eq!(r.coords(), &[0.5]);
        // Fixed point of V: x = 0.
        let r0 = reflect(&p, 1.0, 0.0, 0.25, &pt(&[0.0])).unwrap();
        assert_eq!(r0.coords(), &[0.0]);
        // lambda = 0 rejected.
        assert!(reflect(&p, 1.0, 0.0, 0.0, &pt(&[1.0])).is_err());
    }

    #[test]
    fn tseng_field_hand_example() {
        // A = 0, D = Id, B = 0, eps = 1, lambda = 0.25, x = 1:
        // V(x) = 2, p = 0.5, xdot = 0.5 - 1 + 0.25*(2 - 1) = -0.25.
        let problem = identity_drift_problem();
        let fe = tseng_field_frozen(&problem, 1.0, 0.0, 0.25, &pt(&[1.0])).unwrap();
        assert_eq!(fe.p.coords(), &[0.5]);
        assert!((fe.xdot.coords()[0] - (-0.25)).abs() < 1e-15);
        assert!((fe.residual_fp - 0.5).abs() < 1e-15);

        // Same value from the composition form.
        let composed = tseng_field_composed(&problem, 1.0, 0.0, 0.25, &pt(&[1.0])).unwrap();
        assert!((composed.coords()[0] - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let problem = identity_drift_problem();
        let fe = tseng_field_frozen(&problem, 1.0, 0.0, 0.25, &pt(&[0.0])).unwrap();
        assert_eq!(fe.p.coords(), &[0.0]);
        assert_eq!(fe.xdot.coords(), &[0.0]);
        assert_eq!(fe.residual_fp, 0.0);
    }

    #[test]
    fn two_forms_agree_on_random_states() {
        let problem = make_saddle_point(&SaddleSpec::new(3, 2, 2, 7)).unwrap();
        let (eps, beta) = (0.4, 2.0);
        let lambda = 0.5 / problem.modulus(eps, beta);
        let mut sampler = StateSampler::new(5, &PROBE_RADII, 21);
        for _ in 0..50 {
            let x = Point::from_vector(sampler.next_state()).unwrap();
            let fe = tseng_field_frozen(&problem, eps, beta, lambda, &x).unwrap();
            let composed = tseng_field_composed(&problem, eps, beta, lambda, &x).unwrap();
            let diff = (fe.xdot.as_vector() - composed.as_vector()).norm();
            assert!(diff <= 1e-14 * fe.xdot.norm().max(1.0), "diff = {diff}");
        }
    }

    #[test]
    fn inclusion_identity() {
        // With a := (x - lambda*V(x) - p)/lambda, the selected element of A
        // satisfies -xdot/lambda = a + V(p) up to 1e-12.
        let problem = make_saddle_point(&SaddleSpec::new(3, 3, 2, 3)).unwrap();
        let (eps, beta) = (0.7, 1.5);
        let lambda = 0.5 / problem.modulus(eps, beta);
        let field = FrozenField::new(&problem, eps, beta, lambda).unwrap();
        let mut sampler = StateSampler::new(6, &PROBE_RADII, 4);
        for _ in 0..60 {
            let x = sampler.next_state();
            let (p, xdot) = field.step(&x);
            let vx = field.v(&x);
            let a = (&x - &(&vx * lambda) - &p) / lambda;
            let lhs = -&xdot / lambda;
            let rhs = a + field.v(&p);
            let err = (lhs - rhs).norm();
            assert!(err <= 1e-12 * (xdot.norm() / lambda).max(1.0), "err = {err}");
        }
    }

    #[test]
    fn field_is_deterministic() {
        let problem = make_saddle_point(&SaddleSpec::new(4, 4, 3, 9)).unwrap();
        let x = Point::from_vector(StateSampler::new(8, &[10.0], 5).next_state()).unwrap();
        let a = tseng_field_frozen(&problem, 0.3, 2.0, 0.01, &x).unwrap();
        let b = tseng_field_frozen(&problem, 0.3, 2.0, 0.01, &x).unwrap();
        assert_eq!(a.xdot.coords(), b.xdot.coords());
        assert_eq!(a.p.coords(), b.p.coords());
    }

    #[test]
    fn rejects_large_lambda() {
        let problem = identity_drift_problem();
        // L = 1 + eps = 2; lambda = 1 gives lambda*L = 2 >= 1.
        let err = tseng_field_frozen(&problem, 1.0, 0.0, 1.0, &pt(&[1.0])).unwrap_err();
        assert!(err.to_string().contains("lambda(t)*L(t)"));
    }

    #[test]
    fn lipschitz_probe_below_kappa() {
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = power_law_for_problem(1.0, 0.1, 0.1, 0.5, &problem).unwrap();
        for &t in &[0.0, 1.0, 10.0] {
            let probe = field_lipschitz_probe(&problem, &schedule, t, 100, 11).unwrap();
            let q = theorem_quantities(&schedule, problem.eta(), problem.mu(), t).unwrap();
            assert!(probe >= 0.0);
            assert!(
                probe <= q.kappa + 1e-10,
                "t = {t}: probe {probe} > kappa {}",
                q.kappa
            );
        }
    }

    #[test]
    fn lipschitz_probe_worked_value() {
        // Linear 1-D instance at eps = beta = 1, lambda = 1/6:
        // kappa = sqrt(11/6) ≈ 1.35401 bounds the probe.
        let problem = make_interval_toy(1.0, 2.0).unwrap();
        let schedule = crate::schedules::Schedule::constant(1.0, 1.0, 1.0 / 6.0).unwrap();
        let probe = field_lipschitz_probe(&problem, &schedule, 0.0, 200, 17).unwrap();
        assert!(probe <= (11.0_f64 / 6.0).sqrt() + 1e-12);
    }

    #[test]
    fn growth_probe_examples() {
        let problem = identity_drift_problem();
        let (eps, beta) = (1.0, 0.0);
        let lambda = 0.25; // 1/L = 0.5
        let est = growth_probe(&problem, lambda, eps, beta, 90, 23).unwrap();
        assert!(est.c_hat.is_finite() && est.c_hat > 0.0);

        // Stability: growing the sample radius 10x changes the estimate by
        // less than 10% for a linear field.
        let radii_small: Vec<f64> = vec![1.0, 10.0];
        let radii_large: Vec<f64> = vec![10.0, 100.0];
        let field = FrozenField::new(&problem, eps, beta, lambda).unwrap();
        let est_for = |radii: &[f64]| {
            let mut sampler = StateSampler::new(1, radii, 23);
            let mut c: f64 = 0.0;
            for _ in 0..60 {
                let x = sampler.next_state();
                let (_, fx) = field.step(&x);
                c = c.max(fx.norm() / (1.0 + x.norm()));
            }
            c
        };
        let c_small = est_for(&radii_small);
        let c_large = est_for(&radii_large);
        assert!((c_small - c_large).abs() <= 0.1 * c_large.max(c_small));

        // Hypothesis violation is rejected.
        assert!(growth_probe(&problem, 0.6, 1.0, 0.0, 10, 1).is_err());
    }

    #[test]
    fn growth_probe_zero_at_equilibrium_instance() {
        // For V(x) = (1+eps)x the unique zero is the origin; F(0) = 0, so
        // the origin contributes nothing and every other state contributes
        // a finite ratio.
        let problem = identity_drift_problem();
        let field = FrozenField::new(&problem, 1.0, 0.0, 0.25).unwrap();
        let (_, f0) = field.step(&DVector::zeros(1));
        assert_eq!(f0.norm(), 0.0);
    }
}
