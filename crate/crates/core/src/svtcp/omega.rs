//! Piecewise finite-set-valued maps `v => Omega(v)` with values in `R^k`.
//!
//! A map is an ordered list of pieces, each a predicate on `v` paired with a
//! finite set of parameter values, plus a default set that is always
//! included. `Omega(v)` is the union of the sets of all matching pieces,
//! followed by the default set, with duplicates dropped in first-seen order.
//!
//! Because every set is finite and every predicate other than
//! [`Predicate::PointMatch`] is invariant under positive scaling, the
//! asymptotic value sets of the map are computable exactly:
//!
//! - the limit set (values taken for arbitrarily large `|v|`) is the union of
//!   the sets of all non-point pieces and the default set;
//! - the recurrent set along a ray `{n v0}` is the union of the sets of the
//!   non-point pieces matching `v0`, and the default set.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::search::{dot, norm2};

/// Floor applied to the angular tolerance of [`Predicate::ConeMatch`] so
/// that exactly parallel vectors match despite rounding.
pub const MIN_ANGULAR_TOL: f64 = 1e-12;

/// Default radius of a [`Predicate::PointMatch`] ball.
pub const DEFAULT_POINT_TOL: f64 = 1e-9;

pub type Omega = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    /// `|v - point|_2 <= tol`.
    PointMatch { point: Vec<f64>, tol: f64 },
    /// `v != 0` and the angle between `v` and `direction` is at most
    /// `angular_tol` radians.
    ConeMatch { direction: Vec<f64>, angular_tol: f64 },
    /// `v >= 0` componentwise.
    NonnegOrthant,
    All,
}

impl Predicate {
    pub fn matches(&self, v: &[f64]) -> bool {
        match self {
            Predicate::PointMatch { point, tol } => {
                let d: f64 = v
                    .iter()
                    .zip(point)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                d <= *tol
            }
            Predicate::ConeMatch {
                direction,
                angular_tol,
            } => {
                let nv = norm2(v);
                if nv == 0.0 {
                    return false;
                }
                angle_between(v, direction) <= angular_tol.max(MIN_ANGULAR_TOL)
            }
            Predicate::NonnegOrthant => v.iter().all(|&x| x >= 0.0),
            Predicate::All => true,
        }
    }

    /// Whether the matching region is a cone (unchanged by positive scaling).
    pub fn is_scale_invariant(&self) -> bool {
        !matches!(self, Predicate::PointMatch { .. })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Predicate::PointMatch { point, tol } => {
                check_vec(point, dim, "point")?;
                if !(tol.is_finite() && *tol >= 0.0) {
                    return Err(Error::InvalidArgument(format!("point tolerance {tol}")));
                }
            }
            Predicate::ConeMatch {
                direction,
                angular_tol,
            } => {
                check_vec(direction, dim, "direction")?;
                if norm2(direction) == 0.0 {
                    return Err(Error::ZeroDirection);
                }
                if !(angular_tol.is_finite() && *angular_tol >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "angular tolerance {angular_tol}"
                    )));
                }
            }
            Predicate::NonnegOrthant | Predicate::All => {}
        }
        Ok(())
    }
}

fn check_vec(v: &[f64], dim: usize, what: &'static str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    check_finite(v, what)
}

/// Angle between two nonzero vectors, accurate near zero.
fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let nb = norm2(b);
    let along = dot(a, b) / nb;
    let perp: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - along * y / nb).powi(2))
        .sum::<f64>()
        .sqrt();
    perp.atan2(along)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub predicate: Predicate,
    pub omegas: Vec<Omega>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LimitSet {
    /// Derived from the pieces (see the module docs).
    Auto,
    Declared(Vec<Omega>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaMap {
    omega_dim: usize,
    pieces: Vec<Piece>,
    default_set: Vec<Omega>,
    limit_set: LimitSet,
}

pub(crate) fn push_unique(out: &mut Vec<Omega>, w: &[f64]) {
    if !out.iter().any(|x| x.as_slice() == w) {
        out.push(w.to_vec());
    }
}

impl OmegaMap {
    pub fn new(
        omega_dim: usize,
        pieces: Vec<Piece>,
        default_set: Vec<Omega>,
        limit_set: LimitSet,
    ) -> Result<Self> {
        let check = |w: &Omega| -> Result<()> {
            if w.len() != omega_dim {
                return Err(Error::OmegaDimMismatch {
                    expected: omega_dim,
                    found: w.len(),
                });
            }
            check_finite(w, "omega")
        };
        for piece in &pieces {
            piece.omegas.iter().try_for_each(check)?;
        }
        default_set.iter().try_for_each(check)?;
        if let LimitSet::Declared(set) = &limit_set {
            set.iter().try_for_each(check)?;
        }
        Ok(Self {
            omega_dim,
            pieces,
            default_set,
            limit_set,
        })
    }

    /// The map that returns `set` everywhere.
    pub fn constant(omega_dim: usize, set: Vec<Omega>) -> Result<Self> {
        Self::new(omega_dim, Vec::new(), set, LimitSet::Auto)
    }

    pub fn omega_dim(&self) -> usize {
        self.omega_dim
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn default_set(&self) -> &[Omega] {
        &self.default_set
    }

    pub fn limit_set_spec(&self) -> &LimitSet {
        &self.limit_set
    }

    /// Checks predicate vectors against the decision-variable dimension.
    pub(crate) fn validate_dim(&self, dim: usize) -> Result<()> {
        self.pieces.iter().try_for_each(|p| p.predicate.validate(dim))
    }

    /// `Omega(v)`.
    pub fn eval(&self, v: &[f64]) -> Result<Vec<Omega>> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            if piece.predicate.matches(v) {
                piece.omegas.iter().for_each(|w| push_unique(&mut out, w));
            }
        }
        self.default_set.iter().for_each(|w| push_unique(&mut out, w));
        if out.is_empty() {
            Err(Error::EmptyOmega)
        } else {
            Ok(out)
        }
    }

    /// Every parameter value the map can return, pieces first.
    pub fn candidates(&self) -> Vec<Omega> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            piece.omegas.iter().for_each(|w| push_unique(&mut out, w));
        }
        self.default_set.iter().for_each(|w| push_unique(&mut out, w));
        out
    }

    /// Values taken for arbitrarily large `|v|`: the declared set, or the
    /// sets of all scale-invariant pieces plus the default set.
    pub fn limit_set(&self) -> Vec<Omega> {
        let mut out = Vec::new();
        match &self.limit_set {
            LimitSet::Declared(set) => set.iter().for_each(|w| push_unique(&mut out, w)),
            LimitSet::Auto => {
                for piece in &self.pieces {
                    if piece.predicate.is_scale_invariant() {
                        piece.omegas.iter().for_each(|w| push_unique(&mut out, w));
                    }
                }
                self.default_set.iter().for_each(|w| push_unique(&mut out, w));
            }
        }
        out
    }

    /// Values hit for infinitely many `n` along `{n v0 : n = 1, 2, ..}`.
    pub fn recurrent_set(&self, v0: &[f64]) -> Result<Vec<Omega>> {
        if v0.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroDirection);
        }
        let mut out = Vec::new();
        for piece in &self.pieces {
            if piece.predicate.is_scale_invariant() && piece.predicate.matches(v0) {
                piece.omegas.iter().for_each(|w| push_unique(&mut out, w));
            }
        }
        self.default_set.iter().for_each(|w| push_unique(&mut out, w));
        Ok(out)
    }

    /// Values present at every nonzero `v >= 0`: the default set and the
    /// sets of `All` and `NonnegOrthant` pieces.
    pub fn always_on_orthant(&self) -> Vec<Omega> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            if matches!(piece.predicate, Predicate::All | Predicate::NonnegOrthant) {
                piece.omegas.iter().for_each(|w| push_unique(&mut out, w));
            }
        }
        self.default_set.iter().for_each(|w| push_unique(&mut out, w));
        out
    }

    /// Centers of point pieces.
    pub fn point_centers(&self) -> Vec<&[f64]> {
        self.pieces
            .iter()
            .filter_map(|p| match &p.predicate {
                Predicate::PointMatch { point, .. } => Some(point.as_slice()),
                _ => None,
            })
            .collect()
    }

    /// Returns a copy with the pieces in a different order.
    pub fn with_pieces(&self, pieces: Vec<Piece>) -> Result<Self> {
        Self::new(
            self.omega_dim,
            pieces,
            self.default_set.clone(),
            self.limit_set.clone(),
        )
    }
}
