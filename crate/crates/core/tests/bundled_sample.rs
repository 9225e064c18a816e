use crosswalk_ir::calibration::synthetic::{synthetic_dataset, SAMPLE_PAIRS, SAMPLE_SEED};
use crosswalk_ir::calibration::{
    extract_interactions, load_dataset_dir, AgentClass, write_recording, ExtractParams, TrackFrame, TrajectoryDataset,
};
use crosswalk_ir::intent::BoundaryParams;
use std::fs;
use std::path::Path;

fn sample_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample"))
}

fn load() -> TrajectoryDataset {
    let mut all = load_dataset_dir(sample_dir()).unwrap();
    assert_eq!(all.len(), 1);
    all.remove(0)
}

#[test]
fn sample_matches_its_generator() {
    let ds = synthetic_dataset(SAMPLE_PAIRS, &BoundaryParams::PED_VS_AV, &BoundaryParams::AV_VS_PED, SAMPLE_SEED);
    let dir = tempfile::tempdir().unwrap();
    write_recording(dir.path(), &ds).unwrap();
    for name in ["tracks.csv", "recordingMeta.csv"] {
        let fresh = fs::read(dir.path().join(name)).unwrap();
        let bundled = fs::read(sample_dir().join(name)).unwrap();
        assert!(fresh == bundled, "{name} differs from the generator output");
    }
}

/// Line through the first and last positions, as (point, unit direction).
fn chord(frames: &[&TrackFrame]) -> ([f64; 2], [f64; 2]) {
    let (a, b) = (frames[0], frames[frames.len() - 1]);
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let n = dx.hypot(dy);
    ([a.x, a.y], [dx / n, dy / n])
}

fn strong_pair(ped: &[TrackFrame], veh: &[TrackFrame], p: &ExtractParams) -> bool {
    let mut shared = Vec::new();
    for a in ped {
        for b in veh {
            if a.frame == b.frame {
                shared.push((a, b));
            }
        }
    }
    if shared.len() < 2 {
        return false;
    }
    let (pa, ua) = chord(&shared.iter().map(|s| s.0).collect::<Vec<_>>());
    let (pb, ub) = chord(&shared.iter().map(|s| s.1).collect::<Vec<_>>());
    let det = ua[0] * -ub[1] + ub[0] * ua[1];
    if det.abs() < 1e-9 {
        return false;
    }
    // solve pa + s ua = pb + r ub
    let (rx, ry) = (pb[0] - pa[0], pb[1] - pa[1]);
    let s = (rx * -ub[1] + ub[0] * ry) / det;
    let cp = [pa[0] + s * ua[0], pa[1] + s * ua[1]];
    shared.iter().any(|(a, b)| {
        let dp = (cp[0] - a.x) * ua[0] + (cp[1] - a.y) * ua[1];
        let dv = (cp[0] - b.x) * ub[0] + (cp[1] - b.y) * ub[1];
        let vp = a.vx * ua[0] + a.vy * ua[1];
        let vv = b.vx * ub[0] + b.vy * ub[1];
        let tp = if dp <= 0.0 { 0.0 } else if vp > 0.0 { dp / vp } else { f64::INFINITY };
        let tv = if dv <= 0.0 { 0.0 } else if vv > 0.0 { dv / vv } else { f64::INFINITY };
        let tdtc = (tp - tv).abs();
        (a.x - b.x).hypot(a.y - b.y) < p.dist_max && tdtc < p.tdtc_max
    })
}

#[test]
fn segment_count_matches_brute_force_scan() {
    let ds = load();
    let p = ExtractParams::default();
    let peds: Vec<_> = ds.tracks.iter().filter(|t| t.class == AgentClass::Pedestrian).collect();
    let vehs: Vec<_> = ds.tracks.iter().filter(|t| t.class.is_vehicle()).collect();
    let expected = peds
        .iter()
        .flat_map(|a| vehs.iter().map(move |b| (a, b)))
        .filter(|(a, b)| strong_pair(&a.frames, &b.frames, &p))
        .count();
    let ex = extract_interactions(&ds, &p);
    assert_eq!(ex.segments.len(), expected);
    assert_eq!(expected, 12);
    assert!(ex.skipped.is_empty());
}
