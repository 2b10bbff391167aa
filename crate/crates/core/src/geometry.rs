//! Points and axis-aligned rectangles in normalized screen coordinates.
//!
//! The screen is `[0,1]²` with `y` growing downwards.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn in_unit_square(self) -> bool {
        let (zero, one) = (T::zero(), T::one());
        self.x >= zero && self.x <= one && self.y >= zero && self.y <= one
    }
}

/// Closed rectangle `[left, right] × [top, bottom]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub left: T,
    pub top: T,
    pub right: T,
    pub bottom: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(left: T, top: T, right: T, bottom: T) -> Self {
        Rect {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn width(&self) -> T {
        self.right - self.left
    }

    pub fn height(&self) -> T {
        self.bottom - self.top
    }

    pub fn center(&self) -> Point<T> {
        let two = T::lit(2.0);
        Point::new((self.left + self.right) / two, (self.top + self.bottom) / two)
    }

    pub fn is_valid(&self) -> bool {
        self.left <= self.right
            && self.top <= self.bottom
            && Point::new(self.left, self.top).in_unit_square()
            && Point::new(self.right, self.bottom).in_unit_square()
    }

    pub fn contains(&self, p: Point<T>) -> bool {
        p.x >= self.left && p.x <= self.right && p.y >= self.top && p.y <= self.bottom
    }

    /// Shrinks every side by `margin`; `None` when nothing is left.
    pub fn inset(&self, margin: T) -> Option<Rect<T>> {
        let r = Rect::new(
            self.left + margin,
            self.top + margin,
            self.right - margin,
            self.bottom - margin,
        );
        (r.left <= r.right && r.top <= r.bottom).then_some(r)
    }

    /// True when the closed rectangles share no point.
    pub fn is_disjoint(&self, other: &Rect<T>) -> bool {
        self.right < other.left
            || other.right < self.left
            || self.bottom < other.top
            || other.bottom < self.top
    }

    pub fn mirrored_x(&self) -> Rect<T> {
        Rect::new(
            T::one() - self.right,
            self.top,
            T::one() - self.left,
            self.bottom,
        )
    }

    pub fn clamp(&self, p: Point<T>) -> Point<T> {
        Point::new(
            p.x.max(self.left).min(self.right),
            p.y.max(self.top).min(self.bottom),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_rect_contains_edges() {
        let r = Rect::new(0.2, 0.2, 0.4, 0.6);
        assert!(r.contains(Point::new(0.2, 0.6)));
        assert!(!r.contains(Point::new(0.41, 0.3)));
        assert_eq!(r.center(), Point::new(0.30000000000000004, 0.4));
    }

    #[test]
    fn inset_and_disjoint() {
        let r = Rect::new(0.0f32, 0.0, 0.5, 0.5);
        assert_eq!(r.inset(0.1), Some(Rect::new(0.1, 0.1, 0.4, 0.4)));
        assert_eq!(r.inset(0.3), None);
        assert!(r.is_disjoint(&Rect::new(0.6, 0.0, 1.0, 1.0)));
        assert!(!r.is_disjoint(&Rect::new(0.5, 0.5, 1.0, 1.0)));
    }
}
