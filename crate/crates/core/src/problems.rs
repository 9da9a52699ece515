//! Constructors for test and benchmark instances.
//!
//! * `make_interval_toy` — a 1-D problem with closed-form auxiliary
//!   solutions, used as the exact oracle throughout the test suite.
//! * `make_linear_1d` — an unconstrained 1-D affine drift with a unique
//!   zero, smooth enough for integrator order checks.
//! * `make_saddle_point` — a box-constrained bilinear saddle problem with an
//!   affinely coupled constraint, generated from a seed.
//! * `make_gnep_linear` / `make_gnep_decoupled` — linearly coupled games
//!   with quadratic costs; the stacked pseudo-gradient is forced monotone by
//!   a diagonal shift when the sampled coupling breaks it.
//!
//! All constructors are pure functions of their arguments: the same seed
//! regenerates the same instance bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{
    penalty_affine, penalty_from_projection, resolvent_box, resolvent_zero, LipschitzMonotoneMap,
    ProblemInstance, SolutionSet,
};
use crate::point::Point;

/// 1-D instance with `A = 0`, `D = 0`, and `B = Id − Π_[lo,hi]`.
///
/// Its solution set is the whole interval `[lo, hi]`, the least-norm element
/// is the projection of the origin onto it, and the auxiliary solutions have
/// the closed form used by the oracle tests.
pub fn make_interval_toy(lo: f64, hi: f64) -> Result<ProblemInstance> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("lo", "bounds must be finite"));
    }
    if lo > hi {
        return Err(Error::invalid("lo", format!("lo = {lo} exceeds hi = {hi}")));
    }
    let penalty =
        penalty_from_projection(1, move |x: &DVector<f64>| {
            DVector::from_vec(vec![x[0].clamp(lo, hi)])
        })?;
    let feasible = Point::new(vec![0.0_f64.clamp(lo, hi)])?;
    ProblemInstance::new(
        format!("interval-toy[{lo},{hi}]"),
        1,
        resolvent_zero(),
        LipschitzMonotoneMap::zero(Some(1)),
        penalty,
    )?
    .with_known_solutions(SolutionSet::Interval { lo, hi })
    .with_feasible_point(feasible)
}

/// Unconstrained 1-D instance with `D(x) = x − target`, `A = 0`, `B = 0`.
/// The unique zero is `target`.
pub fn make_linear_1d(target: f64) -> Result<ProblemInstance> {
    if !target.is_finite() {
        return Err(Error::invalid("target", "must be finite"));
    }
    let drift = LipschitzMonotoneMap::affine(
        "shifted-identity",
        DMatrix::identity(1, 1),
        DVector::from_vec(vec![-target]),
    )?;
    Ok(ProblemInstance::new(
        format!("linear-1d[{target}]"),
        1,
        resolvent_zero(),
        drift,
        LipschitzMonotoneMap::zero(Some(1)),
    )?
    .with_known_solutions(SolutionSet::Singleton(Point::new(vec![target])?)))
}

/// Parameters of the box-constrained coupled saddle-point instance.
#[derive(Clone, Debug)]
pub struct SaddleSpec {
    /// Dimension of the minimizing block.
    pub n1: usize,
    /// Dimension of the maximizing block.
    pub n2: usize,
    /// Number of coupling rows.
    pub d: usize,
    /// Strong-convexity weight of the minimizing block.
    pub g: f64,
    /// Strong-concavity weight of the maximizing block.
    pub f: f64,
    /// Half-width of the per-block box constraints.
    pub box_halfwidth: f64,
    pub seed: u64,
}

impl SaddleSpec {
    pub fn new(n1: usize, n2: usize, d: usize, seed: u64) -> Self {
        SaddleSpec {
            n1,
            n2,
            d,
            g: 1.0,
            f: 1.0,
            box_halfwidth: 1.0,
            seed,
        }
    }
}

impl Default for SaddleSpec {
    fn default() -> Self {
        SaddleSpec::new(10, 10, 5, 0)
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

fn uniform_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Builds the saddle-point instance
/// `min_{x1 ∈ X1} max_{x2 ∈ X2} ⟨Qx1,x2⟩ + ⟨b,x1⟩ − ⟨c,x2⟩ + g‖x1‖² − f‖x2‖²`
/// subject to the coupling constraint `T1 x1 + T2 x2 = t`.
///
/// The drift is the saddle operator `[Qᵀx2 + b + 2g·x1; −Qx1 + c + 2f·x2]`
/// (its bilinear part is skew, so it is monotone with modulus
/// `2·min(g,f)`), the individual boxes enter through normal cones, and the
/// coupling through the affine penalty `𝖳ᵀ(𝖳x − t)`. The right-hand side is
/// generated as `t = 𝖳·x_feas` for a box-interior `x_feas`, so the
/// constraint set is nonempty by construction.
pub fn make_saddle_point(spec: &SaddleSpec) -> Result<ProblemInstance> {
    if spec.n1 == 0 || spec.n2 == 0 || spec.d == 0 {
        return Err(Error::invalid("spec", "dimensions must be positive"));
    }
    if !(spec.g > 0.0 && spec.f > 0.0) {
        return Err(Error::invalid("spec", "g and f must be positive"));
    }
    if !(spec.box_halfwidth > 0.0) {
        return Err(Error::invalid("spec", "box half-width must be positive"));
    }
    let n = spec.n1 + spec.n2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Draw order is part of the seeded contract: Q, b, c, T1, T2, x_feas.
    let q = uniform_matrix(&mut rng, spec.n2, spec.n1);
    let b = uniform_vector(&mut rng, spec.n1);
    let c = uniform_vector(&mut rng, spec.n2);
    let t1 = uniform_matrix(&mut rng, spec.d, spec.n1);
    let t2 = uniform_matrix(&mut rng, spec.d, spec.n2);
    let x_feas = uniform_vector(&mut rng, n) * (0.5 * spec.box_halfwidth);

    let mut t = DMatrix::zeros(spec.d, n);
    t.view_mut((0, 0), (spec.d, spec.n1)).copy_from(&t1);
    t.view_mut((0, spec.n1), (spec.d, spec.n2)).copy_from(&t2);
    let rhs = &t * &x_feas;

    // Constant Jacobian of the saddle operator: [[2g I, Qᵀ], [−Q, 2f I]].
    let mut jac = DMatrix::zeros(n, n);
    jac.view_mut((0, 0), (spec.n1, spec.n1))
        .copy_from(&(DMatrix::identity(spec.n1, spec.n1) * (2.0 * spec.g)));
    jac.view_mut((0, spec.n1), (spec.n1, spec.n2))
        .copy_from(&q.transpose());
    jac.view_mut((spec.n1, 0), (spec.n2, spec.n1)).copy_from(&(-&q));
    jac.view_mut((spec.n1, spec.n1), (spec.n2, spec.n2))
        .copy_from(&(DMatrix::identity(spec.n2, spec.n2) * (2.0 * spec.f)));

    let mut offset = DVector::zeros(n);
    offset.rows_mut(0, spec.n1).copy_from(&b);
    offset.rows_mut(spec.n1, spec.n2).copy_from(&c);

    let drift = LipschitzMonotoneMap::affine("saddle-operator", jac, offset)?;

    let w = spec.box_halfwidth;
    let lo = Point::new(vec![-w; n])?;
    let hi = Point::new(vec![w; n])?;
    let boxes = resolvent_box(lo, hi)?;

    let penalty = penalty_affine(t, rhs)?;

    ProblemInstance::new(
        format!("saddle[n1={},n2={},d={},seed={}]", spec.n1, spec.n2, spec.d, spec.seed),
        n,
        boxes,
        drift,
        penalty,
    )?
    .with_feasible_point(Point::from_vector(x_feas)?)
}

/// Parameters of the linearly coupled game instance.
#[derive(Clone, Debug)]
pub struct GnepSpec {
    /// Per-player decision dimensions.
    pub dims: Vec<usize>,
    /// Number of rows of the shared coupling constraint.
    pub coupling_rows: usize,
    /// Half-width of the per-player boxes; `None` leaves players unconstrained.
    pub box_halfwidth: Option<f64>,
    pub seed: u64,
}

impl GnepSpec {
    pub fn new(dims: Vec<usize>, coupling_rows: usize, seed: u64) -> Self {
        GnepSpec {
            dims,
            coupling_rows,
            box_halfwidth: Some(1.0),
            seed,
        }
    }
}

const GNEP_RESAMPLE_LIMIT: usize = 10;

/// Builds a linearly coupled game: player `i` minimizes the quadratic cost
/// `½ xᵢᵀPᵢxᵢ + xᵢᵀ(Σ_{j≠i} Cᵢⱼ xⱼ) + qᵢᵀxᵢ` (plus a box indicator when
/// boxes are enabled), subject to the shared constraint `Σᵢ Tᵢxᵢ = b`.
///
/// The stacked pseudo-gradient is the affine map `M x + q` with `Pᵢ` on the
/// diagonal blocks and `Cᵢⱼ` off it. Random couplings do not make `M`
/// monotone on their own, so the symmetric part is shifted positive:
/// `M ← M + τ·Id` with `τ = max(0, −λ_min((M+Mᵀ)/2)) + 1e−6`. A sampled
/// monotonicity check then guards the result, resampling on failure.
pub fn make_gnep_linear(spec: &GnepSpec) -> Result<ProblemInstance> {
    if spec.dims.is_empty() || spec.dims.contains(&0) {
        return Err(Error::invalid("dims", "need at least one player, all dims positive"));
    }
    if spec.coupling_rows == 0 {
        return Err(Error::invalid("coupling_rows", "must be positive"));
    }
    if let Some(w) = spec.box_halfwidth {
        if !(w > 0.0) {
            return Err(Error::invalid("box_halfwidth", "must be positive"));
        }
    }

    let n: usize = spec.dims.iter().sum();
    let players = spec.dims.len();
    let offsets: Vec<usize> = spec
        .dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();

    for attempt in 0..GNEP_RESAMPLE_LIMIT {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(attempt as u64));

        let mut m = DMatrix::zeros(n, n);
        for i in 0..players {
            let ni = spec.dims[i];
            // Pᵢ = GᵀG/nᵢ is symmetric PSD.
            let gi = uniform_matrix(&mut rng, ni, ni);
            let pi = gi.transpose() * &gi / ni as f64;
            m.view_mut((offsets[i], offsets[i]), (ni, ni)).copy_from(&pi);
            for j in 0..players {
                if i == j {
                    continue;
                }
                let cij = uniform_matrix(&mut rng, ni, spec.dims[j]);
                m.view_mut((offsets[i], offsets[j]), (ni, spec.dims[j]))
                    .copy_from(&cij);
            }
        }
        let q = uniform_vector(&mut rng, n);

        let sym = (&m + m.transpose()) * 0.5;
        let lambda_min =
            linalg::min_eigenvalue_sym(&sym, crate::operators::NORM_REL_TOL, crate::operators::NORM_MAX_ITER)?;
        let tau = (-lambda_min).max(0.0) + 1e-6;
        let m = m + DMatrix::identity(n, n) * tau;

        let drift = LipschitzMonotoneMap::affine("stacked-pseudo-gradient", m.clone(), q)?;

        // Sampled monotonicity guard on the shifted map.
        let mut sampler = crate::sampling::StateSampler::new(n, &[1.0, 10.0], spec.seed ^ 0xabcd);
        let monotone = (0..100).all(|_| {
            let (x, y) = sampler.next_pair();
            let dx = &x - &y;
            (&m * &dx).dot(&dx) >= -1e-12
        });
        if !monotone {
            continue;
        }

        let mut t = DMatrix::zeros(spec.coupling_rows, n);
        for (&ni, &off) in spec.dims.iter().zip(&offsets) {
            let ti = uniform_matrix(&mut rng, spec.coupling_rows, ni);
            t.view_mut((0, off), (spec.coupling_rows, ni)).copy_from(&ti);
        }
        let interior_scale = spec.box_halfwidth.map_or(0.5, |w| 0.5 * w);
        let x_feas = uniform_vector(&mut rng, n) * interior_scale;
        let b = &t * &x_feas;
        let penalty = penalty_affine(t, b)?;

        let resolvent = match spec.box_halfwidth {
            Some(w) => resolvent_box(Point::new(vec![-w; n])?, Point::new(vec![w; n])?)?,
            None => resolvent_zero(),
        };

        return ProblemInstance::new(
            format!(
                "gnep[dims={:?},d={},seed={}]",
                spec.dims, spec.coupling_rows, spec.seed
            ),
            n,
            resolvent,
            drift,
            penalty,
        )?
        .with_feasible_point(Point::from_vector(x_feas)?);
    }
    Err(Error::Construction(format!(
        "monotonicity safeguard failed after {GNEP_RESAMPLE_LIMIT} resamples"
    )))
}

/// Control game: every player has identity cost curvature, no cross terms,
/// no boxes, and an identity coupling map with zero right-hand side. The
/// unique equilibrium is the origin.
pub fn make_gnep_decoupled(players: usize, dim_each: usize) -> Result<ProblemInstance> {
    if players == 0 || dim_each == 0 {
        return Err(Error::invalid("players", "players and dims must be positive"));
    }
    let n = players * dim_each;
    let drift =
        LipschitzMonotoneMap::affine("identity-pseudo-gradient", DMatrix::identity(n, n), DVector::zeros(n))?;
    // T = [I I ... I]: the coupling asks the player decisions to cancel.
    let mut t = DMatrix::zeros(dim_each, n);
    for p in 0..players {
        t.view_mut((0, p * dim_each), (dim_each, dim_each))
            .copy_from(&DMatrix::identity(dim_each, dim_each));
    }
    let penalty = penalty_affine(t, DVector::zeros(dim_each))?;
    ProblemInstance::new(
        format!("gnep-decoupled[{players}x{dim_each}]"),
        n,
        resolvent_zero(),
        drift,
        penalty,
    )?
    .with_known_solutions(SolutionSet::Singleton(Point::zeros(n)))
    .with_feasible_point(Point::zeros(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;

    #[test]
    fn interval_toy_least_norm_elements() {
        for (lo, hi, expect) in [(1.0, 2.0, 1.0), (-2.0, -1.0, -1.0), (-1.0, 1.0, 0.0)] {
            let p = make_interval_toy(lo, hi).unwrap();
            let z = p.known_solutions().unwrap().least_norm_element();
            assert_eq!(z.coords(), &[expect]);
        }
        assert!(make_interval_toy(2.0, 1.0).is_err());
    }

    #[test]
    fn saddle_dimensions_and_determinism() {
        let spec = SaddleSpec::new(3, 2, 2, 7);
        let a = make_saddle_point(&spec).unwrap();
        assert_eq!(a.dim(), 5);
        let b = make_saddle_point(&spec).unwrap();
        // Bit-exact regeneration from the seed.
        assert_eq!(
            a.feasible_point().unwrap().coords(),
            b.feasible_point().unwrap().coords()
        );
        assert_eq!(a.lip_single(), b.lip_single());
        assert_eq!(a.lip_penalty(), b.lip_penalty());
        let mut s = StateSampler::new(5, &[1.0, 10.0], 3);
        for _ in 0..20 {
            let x = s.next_state();
            assert_eq!(a.eval_v_raw(0.3, 2.0, &x), b.eval_v_raw(0.3, 2.0, &x));
        }
    }

    #[test]
    fn saddle_penalty_vanishes_at_generated_point() {
        let p = make_saddle_point(&SaddleSpec::new(4, 3, 2, 11)).unwrap();
        let feas = p.feasible_point().unwrap();
        assert_eq!(p.penalty().eval(feas).unwrap().norm(), 0.0);
    }

    #[test]
    fn saddle_drift_monotonicity_identity() {
        // <D(x)-D(y), x-y> = 2g|dx1|^2 + 2f|dx2|^2: the bilinear part is skew.
        let spec = SaddleSpec {
            g: 0.7,
            f: 0.4,
            ..SaddleSpec::new(3, 4, 2, 5)
        };
        let p = make_saddle_point(&spec).unwrap();
        let mut s = StateSampler::new(7, &[1.0, 10.0, 100.0], 9);
        for _ in 0..100 {
            let (x, y) = s.next_pair();
            let dv = p.single_valued().eval_raw(&x) - p.single_valued().eval_raw(&y);
            let dx = &x - &y;
            let inner = dv.dot(&dx);
            let expected = 2.0 * spec.g * dx.rows(0, 3).norm_squared()
                + 2.0 * spec.f * dx.rows(3, 4).norm_squared();
            assert!(
                (inner - expected).abs() <= 1e-12 * inner.abs().max(1.0),
                "inner = {inner}, expected = {expected}"
            );
        }
    }

    #[test]
    fn gnep_monotone_and_feasible() {
        let spec = GnepSpec::new(vec![3, 3], 2, 42);
        let p = make_gnep_linear(&spec).unwrap();
        assert_eq!(p.dim(), 6);
        let feas = p.feasible_point().unwrap();
        assert_eq!(p.penalty().eval(feas).unwrap().norm(), 0.0);
        let mut s = StateSampler::new(6, &[1.0, 10.0, 100.0], 13);
        for _ in 0..100 {
            let (x, y) = s.next_pair();
            let dv = p.single_valued().eval_raw(&x) - p.single_valued().eval_raw(&y);
            let dx = &x - &y;
            assert!(dv.dot(&dx) >= -1e-12);
        }
    }

    #[test]
    fn gnep_decoupled_solution_is_origin() {
        let p = make_gnep_decoupled(2, 2).unwrap();
        assert_eq!(p.dim(), 4);
        let z = p.known_solutions().unwrap().least_norm_element();
        assert_eq!(z.coords(), &[0.0; 4]);
        // D = Id exactly.
        let x = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        assert_eq!(p.single_valued().eval_raw(&x), x);
    }

    #[test]
    fn linear_1d_zero_is_target() {
        let p = make_linear_1d(1.0).unwrap();
        let z = p.known_solutions().unwrap().least_norm_element();
        assert_eq!(z.coords(), &[1.0]);
        assert_eq!(p.single_valued().eval_raw(&DVector::from_vec(vec![1.0])), DVector::zeros(1));
    }
}
