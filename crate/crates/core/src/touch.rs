//! Multi-touch ingestion: contact tracking, zone classification, stop-sign
//! hold detection and pinch tracking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::geometry::{Point, Rect};
use crate::reactive::{EventId, Injector, Machine, MachineError, Payload};
use crate::scalar::Scalar;

/// Normalized distance under which a pinch counts as fully merged.
pub const PINCH_MERGE_EPSILON: f64 = 0.005;

/// Default minimal distance between the two fingers holding the stop signs.
pub const DEFAULT_MIN_SIGN_SEPARATION: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Down,
    Move,
    Up,
    Cancel,
}

/// One pointer sample. Serialized as a touch-trace line:
/// `{"t_ms":1234,"id":0,"phase":"down","x":0.41,"y":0.77}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouchSample<T> {
    pub t_ms: u64,
    #[serde(rename = "id")]
    pub pointer_id: u32,
    pub phase: Phase,
    pub x: T,
    pub y: T,
}

impl<T: Scalar> TouchSample<T> {
    pub fn position(&self) -> Point<T> {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TouchAnomaly {
    #[error("move for pointer {0} without a preceding down")]
    MoveWithoutDown(u32),
    #[error("up/cancel for pointer {0} without a preceding down")]
    UpWithoutDown(u32),
    #[error("second down for live pointer {0}")]
    DuplicateDown(u32),
    #[error("pointer {0} outside the unit square")]
    OutOfBounds(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact<T> {
    pub position: Point<T>,
    pub down_t_ms: u64,
}

/// Live contacts: every pointer with a down not yet closed by up or cancel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactSet<T> {
    contacts: BTreeMap<u32, Contact<T>>,
}

impl<T: Scalar> ContactSet<T> {
    pub fn new() -> Self {
        ContactSet {
            contacts: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Contact<T>> {
        self.contacts.get(&id)
    }

    /// Contacts in ascending pointer id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &Contact<T>)> {
        self.contacts.iter().map(|(id, c)| (*id, c))
    }

    /// Applies one sample, rejecting it if it breaks the
    /// `down (move)* (up|cancel)` sequence of its pointer.
    pub fn apply(&mut self, sample: &TouchSample<T>) -> Result<(), TouchAnomaly> {
        let id = sample.pointer_id;
        if !sample.position().in_unit_square() {
            return Err(TouchAnomaly::OutOfBounds(id));
        }
        match sample.phase {
            Phase::Down => {
                if self.contacts.contains_key(&id) {
                    return Err(TouchAnomaly::DuplicateDown(id));
                }
                self.contacts.insert(
                    id,
                    Contact {
                        position: sample.position(),
                        down_t_ms: sample.t_ms,
                    },
                );
            }
            Phase::Move => match self.contacts.get_mut(&id) {
                Some(c) => c.position = sample.position(),
                None => return Err(TouchAnomaly::MoveWithoutDown(id)),
            },
            Phase::Up | Phase::Cancel => {
                if self.contacts.remove(&id).is_none() {
                    return Err(TouchAnomaly::UpWithoutDown(id));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Zone {
    SignLeft,
    SignRight,
    PlayArea,
    Crown,
    Dead,
}

impl Zone {
    pub fn is_sign(self) -> bool {
        matches!(self, Zone::SignLeft | Zone::SignRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("{0}: rectangle must lie inside the unit square with left<=right, top<=bottom")]
    InvalidRect(&'static str),
    #[error("sign zones overlap the play area")]
    SignOverlapsPlayArea,
    #[error("min_sign_separation must be positive")]
    NonPositiveSeparation,
}

/// Screen zones. `sign_zones[0]` classifies as [`Zone::SignLeft`], `[1]` as
/// [`Zone::SignRight`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneLayout<T> {
    pub sign_zones: [Rect<T>; 2],
    pub play_area: Rect<T>,
    pub min_sign_separation: T,
    #[serde(default)]
    pub crown_zone: Option<Rect<T>>,
}

impl<T: Scalar> ZoneLayout<T> {
    /// Stop signs on the side of the hand that does not play.
    pub fn default_for(trained: Hand) -> Self {
        let r = |l: f64, t: f64, r: f64, b: f64| Rect::new(T::lit(l), T::lit(t), T::lit(r), T::lit(b));
        let right_handed = ZoneLayout {
            sign_zones: [r(0.02, 0.10, 0.18, 0.40), r(0.02, 0.60, 0.18, 0.90)],
            play_area: r(0.25, 0.02, 0.98, 0.72),
            min_sign_separation: T::lit(DEFAULT_MIN_SIGN_SEPARATION),
            crown_zone: Some(r(0.45, 0.76, 0.78, 0.98)),
        };
        match trained {
            Hand::Right => right_handed,
            Hand::Left => right_handed.mirrored(),
        }
    }

    fn mirrored(&self) -> Self {
        ZoneLayout {
            sign_zones: [self.sign_zones[0].mirrored_x(), self.sign_zones[1].mirrored_x()],
            play_area: self.play_area.mirrored_x(),
            min_sign_separation: self.min_sign_separation,
            crown_zone: self.crown_zone.map(|c| c.mirrored_x()),
        }
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let checks = [
            ("sign_zones[0]", Some(&self.sign_zones[0])),
            ("sign_zones[1]", Some(&self.sign_zones[1])),
            ("play_area", Some(&self.play_area)),
            ("crown_zone", self.crown_zone.as_ref()),
        ];
        for (name, rect) in checks {
            if rect.is_some_and(|r| !r.is_valid()) {
                return Err(LayoutError::InvalidRect(name));
            }
        }
        if self.sign_zones.iter().any(|s| !s.is_disjoint(&self.play_area)) {
            return Err(LayoutError::SignOverlapsPlayArea);
        }
        if !(self.min_sign_separation > T::zero()) {
            return Err(LayoutError::NonPositiveSeparation);
        }
        Ok(())
    }

    /// Zone of `p`, with priority Crown > Sign > PlayArea > Dead.
    pub fn classify(&self, p: Point<T>) -> Zone {
        if self.crown_zone.is_some_and(|c| c.contains(p)) {
            Zone::Crown
        } else if self.sign_zones[0].contains(p) {
            Zone::SignLeft
        } else if self.sign_zones[1].contains(p) {
            Zone::SignRight
        } else if self.play_area.contains(p) {
            Zone::PlayArea
        } else {
            Zone::Dead
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct HoldState {
    pub held: bool,
    /// The holding pair, smallest ids first, when held.
    pub holding_ids: Option<[u32; 2]>,
}

/// Held iff two contacts lie in sign zones at least `min_sign_separation`
/// apart. The lexicographically smallest qualifying pair is reported.
pub fn sign_hold_status<T: Scalar>(contacts: &ContactSet<T>, layout: &ZoneLayout<T>) -> HoldState {
    let on_signs: Vec<(u32, Point<T>)> = contacts
        .iter()
        .filter(|(_, c)| layout.classify(c.position).is_sign())
        .map(|(id, c)| (id, c.position))
        .collect();
    for (i, (a, pa)) in on_signs.iter().enumerate() {
        for (b, pb) in &on_signs[i + 1..] {
            if pa.distance(*pb) >= layout.min_sign_separation {
                return HoldState {
                    held: true,
                    holding_ids: Some([*a, *b]),
                };
            }
        }
    }
    HoldState::default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PinchError {
    #[error("pointer {0} was lifted; pinch aborted")]
    Aborted(u32),
    #[error("initial pinch distance must be positive")]
    NonPositiveInitialDistance,
}

/// Fraction of a pinch completed: `clamp(1 - d/d0, 0, 1)`, snapped to 1 once
/// the two contacts are within [`PINCH_MERGE_EPSILON`].
pub fn pinch_progress<T: Scalar>(
    contacts: &ContactSet<T>,
    a: u32,
    b: u32,
    initial_distance: T,
) -> Result<T, PinchError> {
    if !(initial_distance > T::zero()) {
        return Err(PinchError::NonPositiveInitialDistance);
    }
    let pa = contacts.get(a).ok_or(PinchError::Aborted(a))?.position;
    let pb = contacts.get(b).ok_or(PinchError::Aborted(b))?.position;
    let d = pa.distance(pb);
    if d <= T::lit(PINCH_MERGE_EPSILON) {
        return Ok(T::one());
    }
    Ok((T::one() - d / initial_distance).max(T::zero()).min(T::one()))
}

/// Payload of `contactDown`, `contactMove` and `contactUp` events.
///
/// `seq` orders samples of one instant across the three events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub seq: u64,
    pub t_ms: u64,
    pub id: u32,
    pub phase: Phase,
    pub x: f64,
    pub y: f64,
}

impl ContactEvent {
    pub fn position(&self) -> Point<f64> {
        Point::new(self.x, self.y)
    }

    pub fn as_sample(&self) -> TouchSample<f64> {
        TouchSample {
            t_ms: self.t_ms,
            pointer_id: self.id,
            phase: self.phase,
            x: self.x,
            y: self.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactEvents {
    pub down: EventId,
    pub moved: EventId,
    pub up: EventId,
    pub anomaly: EventId,
}

impl ContactEvents {
    pub const DOWN: &'static str = "contactDown";
    pub const MOVE: &'static str = "contactMove";
    pub const UP: &'static str = "contactUp";
    pub const ANOMALY: &'static str = "traceAnomaly";

    pub fn declare(machine: &mut Machine) -> Self {
        ContactEvents {
            down: machine.event(Self::DOWN),
            moved: machine.event(Self::MOVE),
            up: machine.event(Self::UP),
            anomaly: machine.event(Self::ANOMALY),
        }
    }
}

/// All contact events of one instant, in sample order.
pub fn contact_events_in_order(lists: [Option<&[Payload]>; 3]) -> Result<Vec<ContactEvent>, serde_json::Error> {
    let mut out = Vec::new();
    for values in lists.into_iter().flatten() {
        for v in values {
            out.push(ContactEvent::deserialize(v)?);
        }
    }
    out.sort_by_key(|e| e.seq);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    Accepted,
    Dropped(TouchAnomaly),
}

/// Feeds raw samples into a machine and keeps the host-side contact set.
pub struct TouchGateway {
    contacts: ContactSet<f64>,
    events: ContactEvents,
    injector: Injector,
    seq: u64,
}

impl TouchGateway {
    pub fn new(events: ContactEvents, injector: Injector) -> Self {
        TouchGateway {
            contacts: ContactSet::new(),
            events,
            injector,
            seq: 0,
        }
    }

    pub fn contacts(&self) -> &ContactSet<f64> {
        &self.contacts
    }

    /// Updates the contact set and injects the matching event for the next
    /// instant. Invalid samples are dropped and reported as `traceAnomaly`.
    pub fn ingest(&mut self, sample: &TouchSample<f64>) -> Result<IngestOutcome, MachineError> {
        let seq = self.seq;
        self.seq += 1;
        match self.contacts.apply(sample) {
            Ok(()) => {
                let event = match sample.phase {
                    Phase::Down => self.events.down,
                    Phase::Move => self.events.moved,
                    Phase::Up | Phase::Cancel => self.events.up,
                };
                let payload = ContactEvent {
                    seq,
                    t_ms: sample.t_ms,
                    id: sample.pointer_id,
                    phase: sample.phase,
                    x: sample.x,
                    y: sample.y,
                };
                self.injector
                    .inject(event, Some(serde_json::to_value(payload).expect("plain struct")))?;
                Ok(IngestOutcome::Accepted)
            }
            Err(anomaly) => {
                self.injector.inject(
                    self.events.anomaly,
                    Some(json!({
                        "seq": seq,
                        "t_ms": sample.t_ms,
                        "id": sample.pointer_id,
                        "reason": anomaly.to_string(),
                    })),
                )?;
                Ok(IngestOutcome::Dropped(anomaly))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t_ms: u64, id: u32, phase: Phase, x: f64, y: f64) -> TouchSample<f64> {
        TouchSample {
            t_ms,
            pointer_id: id,
            phase,
            x,
            y,
        }
    }

    fn layout() -> ZoneLayout<f64> {
        ZoneLayout::default_for(Hand::Right)
    }

    #[test]
    fn trace_line_format() {
        let s: TouchSample<f64> =
            serde_json::from_str(r#"{"t_ms":1234,"id":0,"phase":"down","x":0.41,"y":0.77}"#).unwrap();
        assert_eq!(s, sample(1234, 0, Phase::Down, 0.41, 0.77));
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"t_ms":1234,"id":0,"phase":"down","x":0.41,"y":0.77}"#
        );
    }

    #[test]
    fn contact_lifecycle() {
        let mut set = ContactSet::new();
        set.apply(&sample(0, 1, Phase::Down, 0.5, 0.5)).unwrap();
        assert_eq!(set.len(), 1);
        set.apply(&sample(5, 1, Phase::Move, 0.6, 0.5)).unwrap();
        assert_eq!(set.get(1).unwrap().position, Point::new(0.6, 0.5));
        set.apply(&sample(9, 1, Phase::Up, 0.6, 0.5)).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn phase_violations_are_rejected() {
        let mut set = ContactSet::<f64>::new();
        assert_eq!(
            set.apply(&sample(0, 9, Phase::Move, 0.5, 0.5)),
            Err(TouchAnomaly::MoveWithoutDown(9))
        );
        assert_eq!(
            set.apply(&sample(0, 9, Phase::Cancel, 0.5, 0.5)),
            Err(TouchAnomaly::UpWithoutDown(9))
        );
        set.apply(&sample(0, 9, Phase::Down, 0.5, 0.5)).unwrap();
        assert_eq!(
            set.apply(&sample(0, 9, Phase::Down, 0.5, 0.5)),
            Err(TouchAnomaly::DuplicateDown(9))
        );
        assert_eq!(
            set.apply(&sample(0, 3, Phase::Down, 1.5, 0.5)),
            Err(TouchAnomaly::OutOfBounds(3))
        );
    }

    #[test]
    fn gateway_injects_events_and_anomalies() {
        let mut m = Machine::new();
        let events = ContactEvents::declare(&mut m);
        let mut gw = TouchGateway::new(events, m.injector());
        for id in 0..3 {
            assert_eq!(
                gw.ingest(&sample(0, id, Phase::Down, 0.3 + 0.1 * id as f64, 0.5)).unwrap(),
                IngestOutcome::Accepted
            );
        }
        assert_eq!(
            gw.ingest(&sample(0, 9, Phase::Move, 0.5, 0.5)).unwrap(),
            IngestOutcome::Dropped(TouchAnomaly::MoveWithoutDown(9))
        );
        assert_eq!(gw.contacts().len(), 3);
        let r = m.react();
        assert_eq!(r.values(ContactEvents::DOWN).unwrap().len(), 3);
        assert_eq!(r.values(ContactEvents::ANOMALY).unwrap().len(), 1);
        let ordered = contact_events_in_order([
            r.values(ContactEvents::DOWN),
            r.values(ContactEvents::MOVE),
            r.values(ContactEvents::UP),
        ])
        .unwrap();
        assert_eq!(ordered.iter().map(|e| e.id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn classify_zones() {
        let l = layout();
        assert_eq!(l.classify(l.sign_zones[0].center()), Zone::SignLeft);
        assert_eq!(l.classify(l.sign_zones[1].center()), Zone::SignRight);
        assert_eq!(l.classify(l.play_area.center()), Zone::PlayArea);
        assert_eq!(l.classify(Point::new(0.21, 0.5)), Zone::Dead);
        // shared edge between crown and play area
        let mut shared = l.clone();
        shared.crown_zone = Some(Rect::new(0.45, 0.72, 0.78, 0.98));
        assert_eq!(shared.classify(Point::new(0.5, 0.72)), Zone::Crown);
    }

    #[test]
    fn default_layouts_are_valid_and_mirrored() {
        let right = ZoneLayout::<f64>::default_for(Hand::Right);
        let left = ZoneLayout::<f64>::default_for(Hand::Left);
        right.validate().unwrap();
        left.validate().unwrap();
        assert!(right.sign_zones[0].center().x < 0.5);
        assert!(left.sign_zones[0].center().x > 0.5);
        let mut bad = right.clone();
        bad.min_sign_separation = 0.0;
        assert_eq!(bad.validate(), Err(LayoutError::NonPositiveSeparation));
        bad = right.clone();
        bad.play_area = Rect::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(bad.validate(), Err(LayoutError::SignOverlapsPlayArea));
    }

    /// Layout with two sign rectangles wide enough to place contacts 0.3 apart.
    fn hold_layout() -> ZoneLayout<f64> {
        ZoneLayout {
            sign_zones: [Rect::new(0.0, 0.0, 0.2, 0.45), Rect::new(0.0, 0.55, 0.2, 1.0)],
            play_area: Rect::new(0.3, 0.0, 1.0, 1.0),
            min_sign_separation: 0.15,
            crown_zone: None,
        }
    }

    #[test]
    fn hold_detection() {
        let l = hold_layout();
        let mut set = ContactSet::new();
        set.apply(&sample(0, 4, Phase::Down, 0.1, 0.35)).unwrap();
        assert!(!sign_hold_status(&set, &l).held);
        // distance 0.3 >= 0.15
        set.apply(&sample(0, 7, Phase::Down, 0.1, 0.65)).unwrap();
        assert_eq!(
            sign_hold_status(&set, &l),
            HoldState {
                held: true,
                holding_ids: Some([4, 7])
            }
        );
        // distance 0.05 < 0.15
        let mut close = ContactSet::new();
        close.apply(&sample(0, 1, Phase::Down, 0.1, 0.40)).unwrap();
        close.apply(&sample(0, 2, Phase::Down, 0.1, 0.45)).unwrap();
        assert!(!sign_hold_status(&close, &l).held);
    }

    #[test]
    fn hold_picks_smallest_pair() {
        let l = hold_layout();
        let mut set = ContactSet::new();
        for (id, y) in [(9, 0.1), (3, 0.9), (5, 0.8)] {
            set.apply(&sample(0, id, Phase::Down, 0.1, y)).unwrap();
        }
        // pairs (3,5) too close; (3,9) qualifies first
        assert_eq!(sign_hold_status(&set, &l).holding_ids, Some([3, 9]));
    }

    #[test]
    fn pinch() {
        let mut set = ContactSet::new();
        set.apply(&sample(0, 1, Phase::Down, 0.25, 0.5)).unwrap();
        set.apply(&sample(0, 2, Phase::Down, 0.75, 0.5)).unwrap();
        assert_eq!(pinch_progress(&set, 1, 2, 0.5).unwrap(), 0.0);
        set.apply(&sample(1, 2, Phase::Move, 0.5, 0.5)).unwrap();
        assert_eq!(pinch_progress(&set, 1, 2, 0.5).unwrap(), 0.5);
        set.apply(&sample(2, 2, Phase::Move, 0.25, 0.5)).unwrap();
        assert_eq!(pinch_progress(&set, 1, 2, 0.5).unwrap(), 1.0);
        set.apply(&sample(3, 1, Phase::Up, 0.25, 0.5)).unwrap();
        assert_eq!(pinch_progress(&set, 1, 2, 0.5), Err(PinchError::Aborted(1)));
        assert_eq!(
            pinch_progress(&set, 2, 2, 0.0),
            Err(PinchError::NonPositiveInitialDistance)
        );
    }

    #[test]
    fn works_with_f32() {
        let l = ZoneLayout::<f32>::default_for(Hand::Left);
        assert_eq!(l.classify(l.play_area.center()), Zone::PlayArea);
    }
}
