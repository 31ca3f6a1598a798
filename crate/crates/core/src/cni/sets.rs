use serde::{Deserialize, Serialize};

use super::{dot, norm};
use crate::error::{finite, invalid, positive};
use crate::{Error, Result};

/// Closed convex feasible set `K`.
///
/// Projection is exact for balls, boxes and a single halfspace. An
/// intersection of several halfspaces has no closed-form projection and is
/// rejected by [`ConvexSet::project`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConvexSet {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x : ⟨normal_i, x⟩ ≤ offset_i for every i}`.
    Halfspaces { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
}

impl ConvexSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        if center.is_empty() {
            return Err(invalid("center", "dimension must be positive"));
        }
        for &c in &center {
            finite("center", c)?;
        }
        Ok(Self::Ball { center, radius })
    }

    /// Ball of `radius` centred at the origin of `ℝ^dim`.
    pub fn origin_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(vec![0.0; dim], radius)
    }

    pub fn cube(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(invalid("lower", "dimension must be positive"));
        }
        for (&l, &u) in lower.iter().zip(&upper) {
            finite("lower", l)?;
            finite("upper", u)?;
            if l > u {
                return Err(invalid("box", format!("lower {l} exceeds upper {u}")));
            }
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn halfspaces(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if normals.is_empty() || normals.len() != offsets.len() {
            return Err(invalid("halfspaces", "need one offset per normal and at least one normal"));
        }
        let dim = normals[0].len();
        for a in &normals {
            if a.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.len() });
            }
            if norm(a) == 0.0 {
                return Err(invalid("normal", "must be nonzero"));
            }
        }
        Ok(Self::Halfspaces { normals, offsets })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::Halfspaces { normals, .. } => normals[0].len(),
        }
    }

    /// Euclidean projection `Π_K(x)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    pub fn project_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(invalid("point", format!("must be finite, got {v}")));
        }
        match self {
            Self::Ball { center, radius } => {
                let dist = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                if dist > *radius {
                    let scale = radius / dist;
                    for (xi, ci) in x.iter_mut().zip(center) {
                        *xi = ci + (*xi - ci) * scale;
                    }
                }
            }
            Self::Box { lower, upper } => {
                for ((xi, l), u) in x.iter_mut().zip(lower).zip(upper) {
                    *xi = xi.clamp(*l, *u);
                }
            }
            Self::Halfspaces { normals, offsets } => {
                if normals.len() > 1 {
                    return Err(Error::UnsupportedSet(format!(
                        "intersection of {} halfspaces has no closed-form projection",
                        normals.len()
                    )));
                }
                let a = &normals[0];
                let excess = dot(a, x) - offsets[0];
                if excess > 0.0 {
                    let scale = excess / dot(a, a);
                    for (xi, ai) in x.iter_mut().zip(a) {
                        *xi -= scale * ai;
                    }
                }
            }
        }
        Ok(())
    }

    /// Membership up to an absolute slack.
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Self::Ball { center, radius } => {
                let dist = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                dist <= radius + slack
            }
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - slack && *v <= u + slack),
            Self::Halfspaces { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .all(|(a, b)| dot(a, x) <= b + slack * norm(a)),
        }
    }

    /// Euclidean diameter (infinite for halfspaces).
    pub fn diameter(&self) -> f64 {
        match self {
            Self::Ball { radius, .. } => 2.0 * radius,
            Self::Box { lower, upper } => norm(&lower.iter().zip(upper).map(|(l, u)| u - l).collect::<Vec<_>>()),
            Self::Halfspaces { .. } => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_projection() {
        let ball = ConvexSet::origin_ball(2, 1.0).unwrap();
        assert_eq!(ball.project(&[0.3, -0.2]).unwrap(), vec![0.3, -0.2]);
        let p = ball.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let shifted = ConvexSet::ball(vec![1.0, 1.0], 1.0).unwrap();
        let p = shifted.project(&[1.0, 3.0]).unwrap();
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn box_projection() {
        let cube = ConvexSet::cube(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(cube.project(&[-1.0, 0.5, 7.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(ConvexSet::cube(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn halfspace_projection() {
        let h = ConvexSet::halfspaces(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        let p = h.project(&[2.0, 2.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert_eq!(h.project(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let two = ConvexSet::halfspaces(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap();
        assert!(matches!(two.project(&[1.0, 1.0]), Err(Error::UnsupportedSet(_))));
    }

    #[test]
    fn projection_rejects_bad_points() {
        let ball = ConvexSet::origin_ball(2, 1.0).unwrap();
        assert!(ball.project(&[f64::NAN, 0.0]).is_err());
        assert!(matches!(ball.project(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }
}
