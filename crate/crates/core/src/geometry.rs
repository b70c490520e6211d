//! 2D geometry shared by the twin generator and the radio model.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle. `min` is always component-wise ≤ `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self {
            min: Point2::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Liang–Barsky clip of the segment a→b against the rectangle.
    ///
    /// Returns the parameter interval `(t0, t1)` with `0 ≤ t0 ≤ t1 ≤ 1` of the
    /// overlapping portion, or `None` when the segment misses the rectangle.
    pub fn clip_segment(&self, a: &Point2, b: &Point2) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let edges = [
            (-dx, a.x - self.min.x),
            (dx, self.max.x - a.x),
            (-dy, a.y - self.min.y),
            (dy, self.max.y - a.y),
        ];
        for (p, q) in edges {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    if r > t1 {
                        return None;
                    }
                    if r > t0 {
                        t0 = r;
                    }
                } else {
                    if r < t0 {
                        return None;
                    }
                    if r < t1 {
                        t1 = r;
                    }
                }
            }
        }
        Some((t0, t1))
    }

    /// Length of the part of segment a→b inside the rectangle.
    pub fn segment_overlap_length(&self, a: &Point2, b: &Point2) -> f64 {
        match self.clip_segment(a, b) {
            Some((t0, t1)) => (t1 - t0).max(0.0) * a.distance(b),
            None => 0.0,
        }
    }
}

/// Wraps an angle in degrees into [-180, 180).
pub fn wrap_deg(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a < -180.0 {
        a += 360.0;
    } else if a >= 180.0 {
        a -= 360.0;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_crossing_segment() {
        let r = Rect::new(Point2::new(1.0, 1.0), Point2::new(3.0, 3.0));
        let (t0, t1) = r
            .clip_segment(&Point2::new(0.0, 2.0), &Point2::new(4.0, 2.0))
            .unwrap();
        assert!((t0 - 0.25).abs() < 1e-12);
        assert!((t1 - 0.75).abs() < 1e-12);
        assert!((r.segment_overlap_length(&Point2::new(0.0, 2.0), &Point2::new(4.0, 2.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clip_missing_segment() {
        let r = Rect::new(Point2::new(1.0, 1.0), Point2::new(3.0, 3.0));
        assert!(r.clip_segment(&Point2::new(0.0, 0.0), &Point2::new(4.0, 0.0)).is_none());
    }

    #[test]
    fn clip_contained_segment() {
        let r = Rect::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0));
        let (t0, t1) = r
            .clip_segment(&Point2::new(2.0, 2.0), &Point2::new(4.0, 2.0))
            .unwrap();
        assert_eq!((t0, t1), (0.0, 1.0));
    }

    #[test]
    fn wrap_deg_ranges() {
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-190.0), 170.0);
        assert_eq!(wrap_deg(360.0), 0.0);
        assert_eq!(wrap_deg(180.0), -180.0);
    }
}
