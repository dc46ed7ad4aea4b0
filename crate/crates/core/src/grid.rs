//! Coordinate domains and sampling grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optional Euclidean-ball restriction inside a coordinate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Product of open intervals, optionally intersected with a coordinate ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub bounds: Vec<(f64, f64)>,
    pub ball: Option<Ball>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Domain { bounds, ball: None }
    }

    pub fn with_ball(mut self, ball: Ball) -> Self {
        self.ball = Some(ball);
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn ball_distance2(&self, x: &[f64]) -> Option<(f64, f64)> {
        self.ball.as_ref().map(|b| {
            let d2 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
            (d2, b.radius * b.radius)
        })
    }

    /// Strictly inside the open domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| *v > *lo && *v < *hi)
            && self.ball_distance2(x).is_none_or(|(d2, r2)| d2 < r2)
    }

    /// Inside the closure, with a relative slack of `1e-12` for rounding.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        let slack = |lo: f64, hi: f64| 1e-12 * (1.0 + lo.abs().max(hi.abs()).min(1e300));
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= *lo - slack(*lo, *hi) && *v <= *hi + slack(*lo, *hi))
            && self.ball_distance2(x).is_none_or(|(d2, r2)| d2 <= r2 * (1.0 + 1e-12))
    }
}

/// Tensor-product sampling grid: `per_axis` nodes per coordinate.
///
/// With `include_boundary` the nodes span the closed box (endpoints included);
/// otherwise they are the interior nodes `lo + (i+1)(hi-lo)/(N+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub per_axis: usize,
    pub include_boundary: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            per_axis: 5,
            include_boundary: true,
        }
    }
}

impl GridSpec {
    pub fn closed(per_axis: usize) -> Self {
        GridSpec {
            per_axis,
            include_boundary: true,
        }
    }

    pub fn interior(per_axis: usize) -> Self {
        GridSpec {
            per_axis,
            include_boundary: false,
        }
    }

    fn axis(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = self.per_axis;
        if self.include_boundary {
            if n == 1 {
                return vec![0.5 * (lo + hi)];
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        } else {
            (0..n).map(|i| lo + (hi - lo) * (i + 1) as f64 / (n + 1) as f64).collect()
        }
    }

    /// Grid nodes in lexicographic order (first coordinate slowest), restricted
    /// to the domain (closure when boundary nodes are requested).
    pub fn points(&self, domain: &Domain) -> Result<Vec<Vec<f64>>> {
        if self.per_axis == 0 {
            return Err(Error::BadParam("grid needs at least one node per axis".into()));
        }
        let mut axes = Vec::with_capacity(domain.dim());
        for (lo, hi) in &domain.bounds {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::BadParam("cannot grid an unbounded coordinate interval".into()));
            }
            axes.push(self.axis(*lo, *hi));
        }
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        let keep = |p: &Vec<f64>| {
            if self.include_boundary {
                domain.contains_closed(p)
            } else {
                domain.contains(p)
            }
        };
        Ok(out.into_iter().filter(keep).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_grid_hits_endpoints_and_center() {
        let d = Domain::new(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        let pts = GridSpec::closed(5).points(&d).unwrap();
        assert_eq!(pts.len(), 25);
        assert_eq!(pts[0], vec![-1.0, -1.0]);
        assert!(pts.contains(&vec![0.0, 0.0]));
    }

    #[test]
    fn ball_filter() {
        let d = Domain::new(vec![(-1.0, 1.0), (-1.0, 1.0)]).with_ball(Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        });
        let pts = GridSpec::closed(5).points(&d).unwrap();
        assert!(pts.contains(&vec![1.0, 0.0]));
        assert!(!pts.contains(&vec![1.0, 1.0]));
        assert!(pts.iter().all(|p| p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12));
        let inner = GridSpec::interior(4).points(&d).unwrap();
        assert!(inner.iter().all(|p| d.contains(p)));
    }

    #[test]
    fn unbounded_axis_is_rejected() {
        let d = Domain::new(vec![(0.0, f64::INFINITY)]);
        assert!(GridSpec::default().points(&d).is_err());
    }
}
