//! Small geometric primitives shared across modules.

use serde::{Deserialize, Serialize};

/// An image point in pixel coordinates (x right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f32,
    pub y: f32,
}

impl Point {
    pub fn new(x: f32, y: f32) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: Point) -> f32 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn add(&self, dx: f32, dy: f32) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    pub fn norm(&self) -> f32 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        if n <= f32::EPSILON {
            None
        } else {
            Some(Point::new(self.x / n, self.y / n))
        }
    }
}

/// An axis-aligned rectangle: `[x, x+w) x [y, y+h)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    /// Rectangle of size `w x h` centered (to the nearest pixel) on `c`.
    pub fn centered(c: Point, w: u32, h: u32) -> Self {
        Rect {
            x: c.x.round() as i32 - (w as i32) / 2,
            y: c.y.round() as i32 - (h as i32) / 2,
            w,
            h,
        }
    }

    pub fn right(&self) -> i32 {
        self.x + self.w as i32
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.h as i32
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.x as f32 + self.w as f32 / 2.0,
            self.y as f32 + self.h as f32 / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        self.w as f64 * self.h as f64
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 > x0 && y1 > y0 {
            Some(Rect::new(x0, y0, (x1 - x0) as u32, (y1 - y0) as u32))
        } else {
            None
        }
    }

    /// Shift the rectangle so it lies inside `w x h`, if it fits.
    pub fn clamped_into(&self, w: u32, h: u32) -> Option<Rect> {
        if self.w > w || self.h > h {
            return None;
        }
        let x = self.x.clamp(0, (w - self.w) as i32);
        let y = self.y.clamp(0, (h - self.h) as i32);
        Some(Rect::new(x, y, self.w, self.h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_intersection() {
        let a = Rect::new(0, 0, 40, 40);
        let b = Rect::new(20, 0, 40, 40);
        let i = a.intersect(&b).unwrap();
        assert_eq!(i, Rect::new(20, 0, 20, 40));
        assert!(a.intersect(&Rect::new(100, 100, 5, 5)).is_none());
    }

    #[test]
    fn normalized_zero_is_none() {
        assert!(Point::new(0.0, 0.0).normalized().is_none());
        let p = Point::new(3.0, 4.0).normalized().unwrap();
        assert!((p.x - 0.6).abs() < 1e-6 && (p.y - 0.8).abs() < 1e-6);
    }
}
