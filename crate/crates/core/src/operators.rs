//! Operator roles for the monotone inclusion `0 ∈ A(x) + D(x) + N_C(x)`
//! with `C = zer(B)`:
//!
//! * `ResolventOperator` — a maximally monotone `A`, represented only through
//!   its resolvent `res_{λA} = (Id + λA)⁻¹`. The dynamics never needs the
//!   graph of `A`, so the resolvent is the whole interface.
//! * `LipschitzMonotoneMap` — a single-valued monotone Lipschitz map. Used
//!   for the drift `D` (Lipschitz constant `1/η`) and for the penalty `B`
//!   (Lipschitz constant `1/μ`, plus a cocoercivity constant `γ`).
//! * `ProblemInstance` — the bundled triple with its constants.
//!
//! The regularized field `V_{ε,β}(x) = D(x) + ε·x + β·B(x)` and its Lipschitz
//! modulus `L_{ε,β} = 1/η + ε + β/μ` live here as free functions.
//!
//! All evaluations are pure: the same input yields a bit-identical output,
//! which is what makes trajectory golden files and the sampled contract
//! checks reproducible.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::point::Point;

/// Relative tolerance for power-iteration operator norms.
pub(crate) const NORM_REL_TOL: f64 = 1e-12;
/// Iteration cap for power-iteration operator norms.
pub(crate) const NORM_MAX_ITER: usize = 10_000;

type VecFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type ResolventFn = dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync;

/// A set-valued maximally monotone operator, seen through its resolvent.
///
/// For each step `λ > 0` the map `y ↦ res_{λA}(y)` is single-valued, defined
/// on the whole space, and firmly nonexpansive; the sampled contract suite
/// checks firm nonexpansiveness on every shipped instance.
#[derive(Clone)]
pub struct ResolventOperator {
    label: String,
    dim: Option<usize>,
    apply: Arc<ResolventFn>,
}

impl fmt::Debug for ResolventOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResolventOperator")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl ResolventOperator {
    pub fn new(
        label: impl Into<String>,
        dim: Option<usize>,
        apply: impl Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        ResolventOperator {
            label: label.into(),
            dim,
            apply: Arc::new(apply),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluates `res_{λA}(y)`.
    pub fn apply(&self, lambda: f64, y: &Point) -> Result<Point> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if let Some(d) = self.dim {
            check_dim(d, y.dim())?;
        }
        Ok(Point::from_vector_checked(self.apply_raw(lambda, y.as_vector())))
    }

    pub(crate) fn apply_raw(&self, lambda: f64, y: &DVector<f64>) -> DVector<f64> {
        (self.apply)(lambda, y)
    }
}

/// A single-valued monotone map with a stored Lipschitz constant and,
/// when it plays the penalty role, a cocoercivity constant `γ`:
/// `⟨F(x)−F(y), x−y⟩ ≥ γ‖F(x)−F(y)‖²`.
#[derive(Clone)]
pub struct LipschitzMonotoneMap {
    label: String,
    dim: Option<usize>,
    lipschitz: f64,
    cocoercivity: Option<f64>,
    eval: Arc<VecFn>,
}

impl fmt::Debug for LipschitzMonotoneMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzMonotoneMap")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("cocoercivity", &self.cocoercivity)
            .finish()
    }
}

impl LipschitzMonotoneMap {
    pub fn new(
        label: impl Into<String>,
        dim: Option<usize>,
        lipschitz: f64,
        cocoercivity: Option<f64>,
        eval: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0) {
            return Err(Error::invalid("lipschitz", "must be nonnegative"));
        }
        if let Some(g) = cocoercivity {
            if !(g > 0.0) {
                return Err(Error::invalid("cocoercivity", "must be positive"));
            }
        }
        Ok(LipschitzMonotoneMap {
            label: label.into(),
            dim,
            lipschitz,
            cocoercivity,
            eval: Arc::new(eval),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz
    }

    /// The cocoercivity constant `γ`, when one is certified.
    pub fn cocoercivity(&self) -> Option<f64> {
        self.cocoercivity
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        if let Some(d) = self.dim {
            check_dim(d, x.dim())?;
        }
        Ok(Point::from_vector_checked(self.eval_raw(x.as_vector())))
    }

    pub(crate) fn eval_raw(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.eval)(x)
    }

    /// The identically-zero map. Any Lipschitz bound and any cocoercivity
    /// constant hold vacuously; both are stored as the neutral values 0 and
    /// +∞ so that `1/η` and `β/μ` terms drop out of the formulas.
    pub fn zero(dim: Option<usize>) -> Self {
        LipschitzMonotoneMap {
            label: "zero".to_string(),
            dim,
            lipschitz: 0.0,
            cocoercivity: Some(f64::INFINITY),
            eval: Arc::new(|x: &DVector<f64>| DVector::zeros(x.len())),
        }
    }

    /// The affine map `x ↦ M x + offset`, with the Lipschitz constant set to
    /// the spectral norm of `M` (power iteration).
    pub fn affine(label: impl Into<String>, m: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() != offset.len() {
            return Err(Error::invalid("m", "matrix must be square and match the offset"));
        }
        let lipschitz = linalg::operator_norm(&m, NORM_REL_TOL, NORM_MAX_ITER)?;
        let dim = m.ncols();
        Ok(LipschitzMonotoneMap {
            label: label.into(),
            dim: Some(dim),
            lipschitz,
            cocoercivity: None,
            eval: Arc::new(move |x: &DVector<f64>| &m * x + &offset),
        })
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Identity resolvent: `A = 0`, so `res_{λA} = Id` for every `λ`.
pub fn resolvent_zero() -> ResolventOperator {
    ResolventOperator::new("zero", None, |_lambda, y| y.clone())
}

/// Resolvent of the normal cone of a box: componentwise clamping,
/// independent of `λ`.
pub fn resolvent_box(lo: Point, hi: Point) -> Result<ResolventOperator> {
    if lo.dim() != hi.dim() {
        return Err(Error::DimensionMismatch {
            expected: lo.dim(),
            got: hi.dim(),
        });
    }
    for (l, h) in lo.coords().iter().zip(hi.coords()) {
        if l > h {
            return Err(Error::invalid("lo", format!("lo = {l} exceeds hi = {h}")));
        }
    }
    let dim = lo.dim();
    let lo = lo.into_vector();
    let hi = hi.into_vector();
    Ok(ResolventOperator::new("box", Some(dim), move |_lambda, y| {
        DVector::from_fn(y.len(), |i, _| y[i].clamp(lo[i], hi[i]))
    }))
}

/// Resolvent of the scaled l1 subdifferential: componentwise
/// soft-thresholding `sign(yᵢ)·max(|yᵢ| − λ·weight, 0)`.
pub fn resolvent_l1(weight: f64) -> Result<ResolventOperator> {
    if !(weight > 0.0) {
        return Err(Error::invalid("weight", "must be positive"));
    }
    Ok(ResolventOperator::new("l1", None, move |lambda, y| {
        let tau = lambda * weight;
        DVector::from_fn(y.len(), |i, _| {
            let v = y[i];
            v.signum() * (v.abs() - tau).max(0.0)
        })
    }))
}

/// Penalty operator from a projection onto a closed convex set:
/// `B = Id − Π_C`, the gradient of `½ dist²_C`. It is 1-Lipschitz and
/// 1-cocoercive with `zer(B) = C`.
///
/// The supplied projector is spot-checked for idempotence on a few probe
/// points before being accepted.
pub fn penalty_from_projection(
    dim: usize,
    project: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
) -> Result<LipschitzMonotoneMap> {
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let mut sampler = crate::sampling::StateSampler::new(dim, &[1.0, 10.0], 0x1de3);
    for _ in 0..8 {
        let x = sampler.next_state();
        let px = project(&x);
        let ppx = project(&px);
        if (&ppx - &px).norm() > 1e-10 * px.norm().max(1.0) {
            return Err(Error::invalid("project", "projection is not idempotent"));
        }
    }
    LipschitzMonotoneMap::new("dist-grad", Some(dim), 1.0, Some(1.0), move |x| {
        x - project(x)
    })
}

/// Penalty operator for an affine constraint set: `B(x) = Tᵀ(Tx − rhs)`,
/// the gradient of `½‖Tx − rhs‖²`. Its Lipschitz constant is `‖T‖²`
/// (largest singular value squared, computed by power iteration) and it is
/// `1/‖T‖²`-cocoercive; `zer(B) = argmin ½‖T·−rhs‖²`.
pub fn penalty_affine(t: DMatrix<f64>, rhs: DVector<f64>) -> Result<LipschitzMonotoneMap> {
    if t.nrows() != rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: t.nrows(),
            got: rhs.len(),
        });
    }
    if t.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("t", "matrix must be nonzero"));
    }
    let norm = linalg::operator_norm(&t, NORM_REL_TOL, NORM_MAX_ITER)?;
    let lipschitz = norm * norm;
    let dim = t.ncols();
    let tt = t.transpose();
    Ok(LipschitzMonotoneMap {
        label: "affine-penalty".to_string(),
        dim: Some(dim),
        lipschitz,
        cocoercivity: Some(1.0 / lipschitz),
        eval: Arc::new(move |x: &DVector<f64>| &tt * (&t * x - &rhs)),
    })
}

/// Named solution-set descriptions attached to test problems.
#[derive(Clone, Debug)]
pub enum SolutionSet {
    /// `zer(Φ)` is a 1-D interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// `zer(Φ)` is a single known point.
    Singleton(Point),
}

impl SolutionSet {
    /// The minimum-norm element of the described set.
    pub fn least_norm_element(&self) -> Point {
        match self {
            SolutionSet::Interval { lo, hi } => {
                Point::from_vector_checked(DVector::from_vec(vec![0.0_f64.clamp(*lo, *hi)]))
            }
            SolutionSet::Singleton(p) => p.clone(),
        }
    }

    /// `inf{‖x‖ : x ∈ zer(Φ)}`.
    pub fn min_norm(&self) -> f64 {
        self.least_norm_element().norm()
    }
}

/// A constrained variational-inequality instance: the operator triple
/// together with its constants and optional ground truth for tests.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    label: String,
    dim: usize,
    set_valued: ResolventOperator,
    single_valued: LipschitzMonotoneMap,
    penalty: LipschitzMonotoneMap,
    known_solutions: Option<SolutionSet>,
    feasible_point: Option<Point>,
}

impl ProblemInstance {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        set_valued: ResolventOperator,
        single_valued: LipschitzMonotoneMap,
        penalty: LipschitzMonotoneMap,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        for (name, d) in [
            ("set_valued", set_valued.dim),
            ("single_valued", single_valued.dim),
            ("penalty", penalty.dim),
        ] {
            if let Some(d) = d {
                if d != dim {
                    return Err(Error::invalid(
                        "dim",
                        format!("{name} operator has dimension {d}, problem has {dim}"),
                    ));
                }
            }
        }
        if penalty.cocoercivity.is_none() {
            return Err(Error::invalid(
                "penalty",
                "penalty operator must carry a cocoercivity constant",
            ));
        }
        Ok(ProblemInstance {
            label: label.into(),
            dim,
            set_valued,
            single_valued,
            penalty,
            known_solutions: None,
            feasible_point: None,
        })
    }

    pub fn with_known_solutions(mut self, set: SolutionSet) -> Self {
        self.known_solutions = Some(set);
        self
    }

    /// Attaches a point of `C = zer(B)`; rejected unless `B` vanishes there.
    pub fn with_feasible_point(mut self, p: Point) -> Result<Self> {
        check_dim(self.dim, p.dim())?;
        let b = self.penalty.eval_raw(p.as_vector());
        if b.norm() > 1e-9 {
            return Err(Error::invalid(
                "feasible_point",
                format!("penalty does not vanish there (|B| = {:.3e})", b.norm()),
            ));
        }
        self.feasible_point = Some(p);
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set_valued(&self) -> &ResolventOperator {
        &self.set_valued
    }

    pub fn single_valued(&self) -> &LipschitzMonotoneMap {
        &self.single_valued
    }

    pub fn penalty(&self) -> &LipschitzMonotoneMap {
        &self.penalty
    }

    pub fn known_solutions(&self) -> Option<&SolutionSet> {
        self.known_solutions.as_ref()
    }

    pub fn feasible_point(&self) -> Option<&Point> {
        self.feasible_point.as_ref()
    }

    /// Lipschitz constant of `D`, i.e. `1/η`. Zero for a vanishing drift.
    pub fn lip_single(&self) -> f64 {
        self.single_valued.lipschitz
    }

    /// Lipschitz constant of `B`, i.e. `1/μ`. Zero for an absent penalty.
    pub fn lip_penalty(&self) -> f64 {
        self.penalty.lipschitz
    }

    /// `η = 1/Lip(D)`; `+∞` when the drift vanishes.
    pub fn eta(&self) -> f64 {
        1.0 / self.lip_single()
    }

    /// `μ = 1/Lip(B)`; `+∞` when the penalty vanishes.
    pub fn mu(&self) -> f64 {
        1.0 / self.lip_penalty()
    }

    /// Cocoercivity constant `γ` of the penalty.
    pub fn gamma(&self) -> f64 {
        self.penalty.cocoercivity.expect("checked at construction")
    }

    /// `L_{ε,β}` computed from the stored Lipschitz constants, avoiding the
    /// `1/(1/x)` round trip of the `η, μ` form.
    pub fn modulus(&self, eps: f64, beta: f64) -> f64 {
        self.lip_single() + eps + beta * self.lip_penalty()
    }

    pub(crate) fn eval_v_raw(&self, eps: f64, beta: f64, x: &DVector<f64>) -> DVector<f64> {
        let mut out = self.single_valued.eval_raw(x);
        out.axpy(eps, x, 1.0);
        if beta != 0.0 {
            out.axpy(beta, &self.penalty.eval_raw(x), 1.0);
        }
        out
    }
}

/// Evaluates the regularized field `V_{ε,β}(x) = D(x) + ε·x + β·B(x)`.
pub fn eval_v(problem: &ProblemInstance, eps: f64, beta: f64, x: &Point) -> Result<Point> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::invalid("beta", format!("must be nonnegative, got {beta}")));
    }
    check_dim(problem.dim, x.dim())?;
    Ok(Point::from_vector_checked(problem.eval_v_raw(eps, beta, x.as_vector())))
}

/// The Lipschitz modulus `L_{ε,β} = 1/η + ε + β/μ` of `V_{ε,β}`.
pub fn lipschitz_modulus(eta: f64, mu: f64, eps: f64, beta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", format!("must be positive, got {eta}")));
    }
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", format!("must be positive, got {mu}")));
    }
    if !(eps >= 0.0) || !(beta >= 0.0) {
        return Err(Error::invalid("eps", "eps and beta must be nonnegative"));
    }
    Ok(1.0 / eta + eps + beta / mu)
}
