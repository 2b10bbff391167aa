//! Danse-doigts: a synchronous-reactive runtime and the finger-training game
//! built on it.
//!
//! Geometry is generic over the scalar type; the aliases below fix it to
//! `f64`, with `f32` variants for memory-tight callers.

pub mod game;
pub mod geometry;
pub mod reactive;
pub mod replay;
pub mod scalar;
pub mod telemetry;
pub mod touch;

pub use scalar::Scalar;

pub type Point = geometry::Point<f64>;
pub type Rect = geometry::Rect<f64>;
pub type TouchSample = touch::TouchSample<f64>;
pub type ContactSet = touch::ContactSet<f64>;
pub type ZoneLayout = touch::ZoneLayout<f64>;
pub type Target = game::Target<f64>;

pub type PointF32 = geometry::Point<f32>;
pub type RectF32 = geometry::Rect<f32>;
pub type TouchSampleF32 = touch::TouchSample<f32>;
pub type ContactSetF32 = touch::ContactSet<f32>;
pub type ZoneLayoutF32 = touch::ZoneLayout<f32>;
