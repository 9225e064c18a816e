use super::dataset::{AgentClass, Track, TrackFrame, TrajectoryDataset};
use super::LabeledSample;
use crate::intent::{features, Intent, Perspective};
use crate::kinematics::{abs_tdtc, time_to_conflict, ConflictGeometry, DirectedLine, Vec2, MIN_TIME_TO_CONFLICT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractParams {
    pub tdtc_max: f64,
    pub dist_max: f64,
    /// Pairs whose fitted paths cross at a smaller angle are skipped.
    pub min_angle_deg: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self { tdtc_max: 3.0, dist_max: 5.0, min_angle_deg: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    PedFirst,
    VehFirst,
}

/// Both agents at one shared frame, projected onto their fitted paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFrame {
    pub frame: i64,
    pub d_ped: f64,
    pub v_ped: f64,
    pub d_veh: f64,
    pub v_veh: f64,
    pub distance: f64,
}

impl PairFrame {
    pub fn tdtc(&self) -> f64 {
        let t_ped = time_to_conflict(self.d_ped, self.v_ped.max(0.0)).unwrap_or(f64::INFINITY);
        abs_tdtc(t_ped, self.d_veh, self.v_veh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSegment {
    pub ped_track: u64,
    pub veh_track: u64,
    /// First shared frame through the later of the first crossing of the
    /// conflict point and the first frame meeting the criteria.
    pub frame_span: (i64, i64),
    pub conflict: ConflictGeometry,
    pub outcome: Outcome,
    pub frames: Vec<PairFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SkipReason {
    NearParallel { angle_deg: f64 },
    /// One agent barely moves, so its path direction is undefined.
    Degenerate,
    /// Neither agent reaches the conflict point within the shared frames.
    NoOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub ped_track: u64,
    pub veh_track: u64,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub segments: Vec<InteractionSegment>,
    /// Pairs that met the criteria at least once but could not be used.
    pub skipped: Vec<Skipped>,
}

/// Total-least-squares line through the points, oriented along `heading`.
fn fit_line(points: &[Vec2], heading: Vec2) -> Option<DirectedLine> {
    let n = points.len() as f64;
    let c = points.iter().fold(Vec2::new(0.0, 0.0), |a, &p| a + p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = *p - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    // spread along the principal axis must exceed ~1 cm
    let largest = 0.5 * (sxx + syy + ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt());
    if largest / n < 1e-4 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut dir = Vec2::new(theta.cos(), theta.sin());
    if dir.dot(heading) < 0.0 {
        dir = dir * -1.0;
    }
    DirectedLine::through(c, dir).ok()
}

fn shared_frames<'a>(a: &'a Track, b: &'a Track) -> Vec<(&'a TrackFrame, &'a TrackFrame)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.frames.len() && j < b.frames.len() {
        let (fa, fb) = (&a.frames[i], &b.frames[j]);
        match fa.frame.cmp(&fb.frame) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((fa, fb));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn pos(f: &TrackFrame) -> Vec2 {
    Vec2::new(f.x, f.y)
}

fn vel(f: &TrackFrame) -> Vec2 {
    Vec2::new(f.vx, f.vy)
}

fn heading(frames: &[&TrackFrame]) -> Vec2 {
    let v = frames.iter().fold(Vec2::new(0.0, 0.0), |a, f| a + vel(f));
    if v.norm() > 1e-9 {
        v
    } else {
        pos(frames[frames.len() - 1]) - pos(frames[0])
    }
}

enum PairResult {
    None,
    Segment(InteractionSegment),
    Skip(SkipReason),
}

fn examine(ped: &Track, veh: &Track, p: &ExtractParams) -> PairResult {
    let shared = shared_frames(ped, veh);
    if shared.len() < 2 {
        return PairResult::None;
    }
    // the criteria only involve distances and timing, so check the cheap
    // distance part before fitting anything
    if !shared.iter().any(|(a, b)| pos(a).distance(pos(b)) < p.dist_max) {
        return PairResult::None;
    }
    let ped_frames: Vec<&TrackFrame> = shared.iter().map(|s| s.0).collect();
    let veh_frames: Vec<&TrackFrame> = shared.iter().map(|s| s.1).collect();
    let ped_pts: Vec<Vec2> = ped_frames.iter().map(|f| pos(f)).collect();
    let veh_pts: Vec<Vec2> = veh_frames.iter().map(|f| pos(f)).collect();
    let (Some(ped_line), Some(veh_line)) =
        (fit_line(&ped_pts, heading(&ped_frames)), fit_line(&veh_pts, heading(&veh_frames)))
    else {
        return PairResult::Skip(SkipReason::Degenerate);
    };
    let angle = ped_line.crossing_angle(&veh_line).to_degrees();
    let acute = angle.min(180.0 - angle);
    if acute < p.min_angle_deg {
        return PairResult::Skip(SkipReason::NearParallel { angle_deg: acute });
    }
    let Some(cp) = ped_line.intersect(&veh_line) else {
        return PairResult::Skip(SkipReason::NearParallel { angle_deg: acute });
    };

    let frames: Vec<PairFrame> = shared
        .iter()
        .map(|(a, b)| PairFrame {
            frame: a.frame,
            d_ped: (cp - pos(a)).dot(ped_line.direction),
            v_ped: vel(a).dot(ped_line.direction),
            d_veh: (cp - pos(b)).dot(veh_line.direction),
            v_veh: vel(b).dot(veh_line.direction),
            distance: pos(a).distance(pos(b)),
        })
        .collect();
    let Some(first_strong) = frames.iter().position(|f| f.tdtc() < p.tdtc_max && f.distance < p.dist_max) else {
        return PairResult::None;
    };
    let Some(crossed) = frames.iter().position(|f| f.d_ped <= 0.0 || f.d_veh <= 0.0) else {
        return PairResult::Skip(SkipReason::NoOutcome);
    };
    let at = frames[crossed];
    // on a shared crossing frame the agent further past the point went first
    let outcome = if at.d_ped <= 0.0 && (at.d_veh > 0.0 || at.d_ped < at.d_veh) {
        Outcome::PedFirst
    } else {
        Outcome::VehFirst
    };
    let span = &frames[..=crossed.max(first_strong)];
    let conflict = ConflictGeometry::from_paths(ped_line, veh_line, None).expect("lines intersect");
    PairResult::Segment(InteractionSegment {
        ped_track: ped.id,
        veh_track: veh.id,
        frame_span: (span[0].frame, span[span.len() - 1].frame),
        conflict,
        outcome,
        frames: span.to_vec(),
    })
}

/// Every pedestrian-vehicle pair with a shared frame where |TDTC| and
/// distance are both under their thresholds.
pub fn extract_interactions(data: &TrajectoryDataset, params: &ExtractParams) -> Extraction {
    let peds: Vec<&Track> = data.tracks.iter().filter(|t| t.class == AgentClass::Pedestrian).collect();
    let vehs: Vec<&Track> = data.tracks.iter().filter(|t| t.class.is_vehicle()).collect();
    let pairs: Vec<(&Track, &Track)> = peds.iter().flat_map(|p| vehs.iter().map(move |v| (*p, *v))).collect();
    let results: Vec<_> = pairs.par_iter().map(|(p, v)| (p.id, v.id, examine(p, v, params))).collect();
    let mut out = Extraction::default();
    for (ped_track, veh_track, r) in results {
        match r {
            PairResult::None => {}
            PairResult::Segment(s) => out.segments.push(s),
            PairResult::Skip(reason) => {
                log::debug!("skipping pair ped {ped_track} / veh {veh_track}: {reason:?}");
                out.skipped.push(Skipped { ped_track, veh_track, reason });
            }
        }
    }
    out
}

/// One sample per `stride`-th frame of the span; frames where the ego
/// arrival time is under the guard (or infinite) are skipped.
pub fn label_segment(seg: &InteractionSegment, perspective: Perspective, stride: usize) -> Vec<LabeledSample> {
    let label = match (perspective, seg.outcome) {
        (Perspective::PedVsAv, Outcome::PedFirst) | (Perspective::AvVsPed, Outcome::VehFirst) => Intent::SelfFirst,
        _ => Intent::SelfYields,
    };
    seg.frames
        .iter()
        .step_by(stride.max(1))
        .filter_map(|f| {
            let (d_self, v_self, d_int, v_int) = match perspective {
                Perspective::PedVsAv => (f.d_ped, f.v_ped, f.d_veh, f.v_veh),
                Perspective::AvVsPed => (f.d_veh, f.v_veh, f.d_ped, f.v_ped),
            };
            let t_self = time_to_conflict(d_self, v_self.max(0.0)).ok()?;
            if !t_self.is_finite() || t_self < MIN_TIME_TO_CONFLICT {
                return None;
            }
            let x = features(t_self, d_int, v_int.max(0.0)).ok()?;
            Some(LabeledSample { x1: x.x1, x2: x.x2, label, perspective, weight: 1.0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(id: u64, class: AgentClass, start: Vec2, v: Vec2, frames: std::ops::Range<i64>, rate: f64) -> Track {
        Track {
            id,
            class,
            frames: frames
                .map(|k| {
                    let p = start + v * (k as f64 / rate);
                    TrackFrame { frame: k, x: p.x, y: p.y, vx: v.x, vy: v.y }
                })
                .collect(),
        }
    }

    // pedestrian reaches (0,0) at t = 4 s, car at t = 4.5 s: |TDTC| = 0.5 s,
    // separation 4 m when the pedestrian is on the point
    fn crossing_pair() -> TrajectoryDataset {
        TrajectoryDataset {
            tracks: vec![
                track(1, AgentClass::Pedestrian, Vec2::new(0.0, -6.0), Vec2::new(0.0, 1.5), 0..200, 25.0),
                track(2, AgentClass::Car, Vec2::new(-36.0, 0.0), Vec2::new(8.0, 0.0), 0..200, 25.0),
            ],
            frame_rate: 25.0,
        }
    }

    #[test]
    fn crossing_pair_gives_one_segment() {
        let ex = extract_interactions(&crossing_pair(), &ExtractParams::default());
        assert_eq!(ex.segments.len(), 1);
        let s = &ex.segments[0];
        assert_eq!(s.outcome, Outcome::PedFirst);
        // the fitted conflict point carries rounding error, so the crossing frame may land one late
        assert_eq!(s.frame_span.0, 0);
        assert!((s.frame_span.1 - 100).abs() <= 1);
        assert!(s.conflict.conflict_point.norm() < 1e-9);
        let min = s.frames.iter().filter(|f| f.d_ped > 0.0).map(|f| f.tdtc()).fold(f64::INFINITY, f64::min);
        assert!((min - 0.5).abs() < 1e-9);
    }

    #[test]
    fn parallel_tracks_give_nothing() {
        let ds = TrajectoryDataset {
            tracks: vec![
                track(1, AgentClass::Pedestrian, Vec2::new(0.0, 0.0), Vec2::new(1.4, 0.0), 0..200, 25.0),
                track(2, AgentClass::Car, Vec2::new(0.0, 20.0), Vec2::new(8.0, 0.0), 0..200, 25.0),
            ],
            frame_rate: 25.0,
        };
        let ex = extract_interactions(&ds, &ExtractParams::default());
        assert!(ex.segments.is_empty() && ex.skipped.is_empty());
    }

    #[test]
    fn near_parallel_close_tracks_are_skipped() {
        let dir = Vec2::new(3.0_f64.to_radians().cos(), 3.0_f64.to_radians().sin());
        let ds = TrajectoryDataset {
            tracks: vec![
                track(1, AgentClass::Pedestrian, Vec2::new(0.0, 1.0), Vec2::new(1.4, 0.0), 0..100, 25.0),
                track(2, AgentClass::Car, Vec2::new(-2.0, 0.0), dir * 1.5, 0..100, 25.0),
            ],
            frame_rate: 25.0,
        };
        let ex = extract_interactions(&ds, &ExtractParams::default());
        assert!(ex.segments.is_empty());
        assert!(matches!(ex.skipped[0].reason, SkipReason::NearParallel { .. }));
    }

    #[test]
    fn labels_are_complementary() {
        let ex = extract_interactions(&crossing_pair(), &ExtractParams::default());
        let s = &ex.segments[0];
        let ped = label_segment(s, Perspective::PedVsAv, 1);
        let av = label_segment(s, Perspective::AvVsPed, 1);
        assert!(ped.iter().all(|x| x.label == Intent::SelfFirst));
        assert!(av.iter().all(|x| x.label == Intent::SelfYields));
        // the last two pedestrian frames are under the 0.05 s guard
        assert_eq!(ped.len(), 99);
        assert_eq!(label_segment(s, Perspective::PedVsAv, 10).len(), 10);
    }

    #[test]
    fn guarded_frames_are_dropped() {
        let frames: Vec<PairFrame> = (0..40)
            .map(|k| PairFrame {
                frame: k,
                d_ped: if k == 7 || k == 21 { 0.01 } else { 3.0 },
                v_ped: 1.4,
                d_veh: 20.0,
                v_veh: 7.0,
                distance: 4.0,
            })
            .collect();
        let ex = extract_interactions(&crossing_pair(), &ExtractParams::default());
        let seg = InteractionSegment { frames, ..ex.segments[0].clone() };
        assert_eq!(label_segment(&seg, Perspective::PedVsAv, 1).len(), 38);
    }

    #[test]
    fn rigid_motion_invariance() {
        let base = extract_interactions(&crossing_pair(), &ExtractParams::default());
        let (angle, shift) = (1.1_f64, Vec2::new(120.0, -45.0));
        let mut moved = crossing_pair();
        for t in &mut moved.tracks {
            for f in &mut t.frames {
                let p = Vec2::new(f.x, f.y).rotate(angle) + shift;
                let v = Vec2::new(f.vx, f.vy).rotate(angle);
                *f = TrackFrame { x: p.x, y: p.y, vx: v.x, vy: v.y, ..*f };
            }
        }
        let ex = extract_interactions(&moved, &ExtractParams::default());
        assert_eq!(ex.segments.len(), base.segments.len());
        let (a, b) = (&base.segments[0], &ex.segments[0]);
        assert_eq!(a.frame_span, b.frame_span);
        assert_eq!(a.outcome, b.outcome);
        for (x, y) in a.frames.iter().zip(&b.frames) {
            assert!((x.d_ped - y.d_ped).abs() < 1e-9 && (x.d_veh - y.d_veh).abs() < 1e-9);
        }
    }
}
