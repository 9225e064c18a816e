//! Synthetic ground truth: labeled samples around a planted boundary and
//! drone-style recordings of pedestrian-vehicle crossings.

use super::dataset::{AgentClass, Track, TrackFrame, TrajectoryDataset};
use super::LabeledSample;
use crate::cooperation::sigmoid;
use crate::intent::{features, BoundaryParams, Intent};
use crate::kinematics::Vec2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed of the bundled sample recording in `data/sample`.
pub const SAMPLE_SEED: u64 = 2024;
pub const SAMPLE_PAIRS: usize = 12;

/// `n` samples scattered around the planted boundary, with exactly
/// `round(noise * n)` labels flipped.
pub fn planted_samples(planted: &BoundaryParams, n: usize, noise: f64, seed: u64) -> Vec<LabeledSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LabeledSample> = (0..n)
        .map(|_| {
            let t: f64 = rng.random_range(0.5..8.0);
            let x1 = t * t;
            let on_boundary = -(planted.b + planted.w1 * x1) / planted.w2;
            let x2 = on_boundary + rng.random_range(-6.0..6.0);
            let margin = planted.w1 * x1 + planted.w2 * x2 + planted.b;
            let label = if margin > 0.0 { Intent::SelfFirst } else { Intent::SelfYields };
            LabeledSample { x1, x2, label, perspective: planted.perspective, weight: 1.0 }
        })
        .collect();
    let flips = (noise * n as f64).round() as usize;
    for i in sample(&mut rng, n, flips.min(n)) {
        let s = &mut out[i];
        s.label = match s.label {
            Intent::SelfFirst => Intent::SelfYields,
            Intent::SelfYields => Intent::SelfFirst,
        };
    }
    out
}

/// Angle in degrees between the normals `(w1, w2)` of two boundaries.
pub fn normal_angle_deg(a: &BoundaryParams, b: &BoundaryParams) -> f64 {
    let dot = a.w1 * b.w1 + a.w2 * b.w2;
    let na = a.w1.hypot(a.w2);
    let nb = b.w1.hypot(b.w2);
    (dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees()
}

const FRAME_RATE: f64 = 25.0;
const PAIR_SECONDS: f64 = 14.0;
const FRAMES_PER_PAIR: i64 = 1000;
/// Margin scale of the logistic go/yield choice.
const DECISION_SPREAD: f64 = 0.1;

/// Longitudinal state along a straight path toward the conflict point.
struct Mover {
    d: f64,
    v: f64,
    cruise: f64,
    /// Constant deceleration applied before the point, if yielding.
    decel: f64,
    /// Speed floor while yielding.
    floor: f64,
}

impl Mover {
    fn step(&mut self, dt: f64, other_past: bool) -> (f64, f64) {
        let out = (self.d, self.v);
        if self.d > 0.0 && !other_past {
            self.v = (self.v - self.decel * dt).max(self.floor);
        } else {
            self.v = (self.v + 1.5 * dt).min(self.cruise);
        }
        self.d -= self.v * dt;
        out
    }
}

/// Decelerate so as to reach the point `arrive` seconds from now.
fn yielding_decel(d: f64, v: f64, arrive: f64) -> f64 {
    (2.0 * (v * arrive - d) / (arrive * arrive)).max(0.0)
}

/// `n_pairs` crossing encounters, each in its own block of frames. Who goes
/// first is drawn from the two planted boundaries evaluated when the pair
/// first appears; the other agent slows down to pass about one second later.
pub fn synthetic_dataset(n_pairs: usize, ped_row: &BoundaryParams, av_row: &BoundaryParams, seed: u64) -> TrajectoryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / FRAME_RATE;
    let steps = (PAIR_SECONDS * FRAME_RATE) as i64;
    let mut tracks = Vec::new();
    for k in 0..n_pairs {
        let vp: f64 = rng.random_range(1.1..1.6);
        let vc: f64 = rng.random_range(6.0..10.0);
        let tp: f64 = rng.random_range(2.0..8.0);
        let tc = (tp + rng.random_range(-2.5..2.5)).max(1.0);
        // the more the pedestrian's row favours going and the AV's favours
        // yielding, the likelier the pedestrian goes first
        let ped_m = features(tp, vc * tc, vc).map(|f| ped_row.margin(f)).unwrap_or(0.0);
        let av_m = features(tc, vp * tp, vp).map(|f| av_row.margin(f)).unwrap_or(0.0);
        let ped_first = rng.random::<f64>() < sigmoid((ped_m - av_m) / DECISION_SPREAD);
        let (dp, dc) = (vp * tp, vc * tc);

        let mut ped = Mover { d: dp, v: vp, cruise: vp, decel: 0.0, floor: 0.0 };
        let mut car = Mover { d: dc, v: vc, cruise: vc, decel: 0.0, floor: 1.0 };
        if ped_first && tc < tp + 1.0 {
            car.decel = yielding_decel(dc, vc, tp + 1.0);
        } else if !ped_first && tp < tc + 1.0 {
            ped.decel = yielding_decel(dp, vp, tc + 1.0);
        }

        let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let crossing: f64 = rng.random_range(70.0f64..110.0).to_radians();
        let car_dir = Vec2::new(heading.cos(), heading.sin());
        let ped_dir = car_dir.rotate(crossing);
        let conflict = Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));

        let base = k as i64 * FRAMES_PER_PAIR;
        let mut ped_frames = Vec::new();
        let mut car_frames = Vec::new();
        for i in 0..steps {
            let (car_past, ped_past) = (car.d < -3.0, ped.d < -1.0);
            let (d, v) = ped.step(dt, car_past);
            let p = conflict - ped_dir * d;
            let w = ped_dir * v;
            ped_frames.push(TrackFrame { frame: base + i, x: p.x, y: p.y, vx: w.x, vy: w.y });
            let (d, v) = car.step(dt, ped_past);
            let p = conflict - car_dir * d;
            let w = car_dir * v;
            car_frames.push(TrackFrame { frame: base + i, x: p.x, y: p.y, vx: w.x, vy: w.y });
        }
        tracks.push(Track { id: 2 * k as u64, class: AgentClass::Pedestrian, frames: ped_frames });
        tracks.push(Track { id: 2 * k as u64 + 1, class: AgentClass::Car, frames: car_frames });
    }
    TrajectoryDataset { tracks, frame_rate: FRAME_RATE }
}
