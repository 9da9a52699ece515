use nalgebra::DVector;

use crate::error::{Error, Result};

/// A point of the ambient space, realized as a dense real vector.
///
/// Construction rejects NaN and infinite entries, so every `Point` held by a
/// problem, trajectory, or solver result is finite by invariant. The
/// dimension is fixed when the point is created and checked against the
/// owning problem at every operation boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(DVector<f64>);

impl Point {
    /// Builds a point from raw coordinates, rejecting non-finite entries.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    /// Builds a point from an existing vector, rejecting non-finite entries.
    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("coords", "dimension must be at least 1"));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "point coordinates".to_string(),
            });
        }
        Ok(Point(v))
    }

    /// The origin of an `n`-dimensional space.
    pub fn zeros(n: usize) -> Self {
        Point(DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn coords(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    /// Wraps a vector that is already known to be finite.
    ///
    /// Used on internal paths after an explicit finiteness check; debug
    /// builds still assert the invariant.
    pub(crate) fn from_vector_checked(v: DVector<f64>) -> Self {
        debug_assert!(v.iter().all(|x| x.is_finite()));
        Point(v)
    }
}

impl From<Point> for DVector<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}
