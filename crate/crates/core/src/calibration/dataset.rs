use super::CalibrationError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentClass {
    Pedestrian,
    Car,
    Truck,
    Bicycle,
    Other,
}

impl AgentClass {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "pedestrian" => AgentClass::Pedestrian,
            "car" | "van" => AgentClass::Car,
            "truck" | "truck_bus" | "bus" => AgentClass::Truck,
            "bicycle" | "motorcycle" => AgentClass::Bicycle,
            _ => AgentClass::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentClass::Pedestrian => "pedestrian",
            AgentClass::Car => "car",
            AgentClass::Truck => "truck",
            AgentClass::Bicycle => "bicycle",
            AgentClass::Other => "other",
        }
    }

    pub fn is_vehicle(self) -> bool {
        matches!(self, AgentClass::Car | AgentClass::Truck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub frame: i64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub class: AgentClass,
    /// Strictly increasing in `frame`.
    pub frames: Vec<TrackFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    pub tracks: Vec<Track>,
    pub frame_rate: f64,
}

impl TrajectoryDataset {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(CalibrationError::Dataset(format!("frame rate {} must be positive", self.frame_rate)));
        }
        for t in &self.tracks {
            if t.frames.windows(2).any(|w| w[1].frame <= w[0].frame) {
                return Err(CalibrationError::Dataset(format!(
                    "track {} frames are not strictly increasing",
                    t.id
                )));
            }
        }
        Ok(())
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>, CalibrationError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| CalibrationError::Csv { path: path.display().to_string(), source })
}

struct Columns {
    headers: csv::StringRecord,
    path: String,
}

impl Columns {
    fn index(&self, name: &str) -> Result<usize, CalibrationError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CalibrationError::MissingColumn { path: self.path.clone(), column: name.into() })
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

fn columns(r: &mut csv::Reader<fs::File>, path: &Path) -> Result<Columns, CalibrationError> {
    let headers = r
        .headers()
        .map_err(|source| CalibrationError::Csv { path: path.display().to_string(), source })?
        .clone();
    Ok(Columns { headers, path: path.display().to_string() })
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path, line: u64) -> Result<T, CalibrationError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| CalibrationError::Dataset(format!("{}:{line}: cannot parse {raw:?}", path.display())))
}

fn read_frame_rate(path: &Path) -> Result<f64, CalibrationError> {
    let mut r = csv_reader(path)?;
    let cols = columns(&mut r, path)?;
    let i = cols.index("frameRate")?;
    let rec = r
        .records()
        .next()
        .ok_or_else(|| CalibrationError::Dataset(format!("{}: no rows", path.display())))?
        .map_err(|source| CalibrationError::Csv { path: path.display().to_string(), source })?;
    field(&rec, i, path, 2)
}

fn read_classes(path: &Path) -> Result<BTreeMap<u64, AgentClass>, CalibrationError> {
    let mut r = csv_reader(path)?;
    let cols = columns(&mut r, path)?;
    let (id, class) = (cols.index("trackId")?, cols.index("class")?);
    let mut out = BTreeMap::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|source| CalibrationError::Csv { path: path.display().to_string(), source })?;
        out.insert(field(&rec, id, path, n as u64 + 2)?, AgentClass::parse(rec.get(class).unwrap_or("")));
    }
    Ok(out)
}

/// Reads one recording. The class comes from the tracks file when it has a
/// `class` column, otherwise from `tracks_meta`.
pub fn load_recording(
    tracks: &Path,
    recording_meta: &Path,
    tracks_meta: Option<&Path>,
) -> Result<TrajectoryDataset, CalibrationError> {
    let frame_rate = read_frame_rate(recording_meta)?;
    let mut r = csv_reader(tracks)?;
    let cols = columns(&mut r, tracks)?;
    let [id, frame, x, y, vx, vy] =
        ["trackId", "frame", "xCenter", "yCenter", "xVelocity", "yVelocity"].map(|c| cols.index(c));
    let (id, frame, x, y, vx, vy) = (id?, frame?, x?, y?, vx?, vy?);
    let class_col = cols.optional("class");
    let meta_classes = match (class_col, tracks_meta) {
        (None, Some(p)) => Some(read_classes(p)?),
        (None, None) => return Err(CalibrationError::MissingColumn { path: cols.path, column: "class".into() }),
        _ => None,
    };

    let mut by_id: BTreeMap<u64, Track> = BTreeMap::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|source| CalibrationError::Csv { path: tracks.display().to_string(), source })?;
        let line = n as u64 + 2;
        let tid: u64 = field(&rec, id, tracks, line)?;
        let class = match (class_col, &meta_classes) {
            (Some(c), _) => AgentClass::parse(rec.get(c).unwrap_or("")),
            (None, Some(m)) => *m.get(&tid).ok_or_else(|| {
                CalibrationError::Dataset(format!("track {tid} missing from tracks metadata"))
            })?,
            (None, None) => unreachable!(),
        };
        let f = TrackFrame {
            frame: field(&rec, frame, tracks, line)?,
            x: field(&rec, x, tracks, line)?,
            y: field(&rec, y, tracks, line)?,
            vx: field(&rec, vx, tracks, line)?,
            vy: field(&rec, vy, tracks, line)?,
        };
        by_id.entry(tid).or_insert_with(|| Track { id: tid, class, frames: Vec::new() }).frames.push(f);
    }
    let ds = TrajectoryDataset { tracks: by_id.into_values().collect(), frame_rate };
    ds.validate()?;
    Ok(ds)
}

fn sibling(tracks: &Path, suffix: &str) -> PathBuf {
    let name = tracks.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let prefix = &name[..name.len() - "tracks.csv".len()];
    tracks.with_file_name(format!("{prefix}{suffix}"))
}

/// Loads every `*tracks.csv` in `dir` with its `*recordingMeta.csv` (and
/// `*tracksMeta.csv` when present), sorted by file name.
pub fn load_dataset_dir(dir: &Path) -> Result<Vec<TrajectoryDataset>, CalibrationError> {
    let io = |source| CalibrationError::Io { path: dir.display().to_string(), source };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("tracks.csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CalibrationError::Dataset(format!("no *tracks.csv files in {}", dir.display())));
    }
    files
        .iter()
        .map(|t| {
            let meta = sibling(t, "tracksMeta.csv");
            load_recording(t, &sibling(t, "recordingMeta.csv"), meta.exists().then_some(meta.as_path()))
        })
        .collect()
}

/// Writes `tracks.csv` and `recordingMeta.csv` into `dir`.
pub fn write_recording(dir: &Path, ds: &TrajectoryDataset) -> Result<(), CalibrationError> {
    let csv_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| CalibrationError::Csv { path: path.clone(), source }
    };
    fs::create_dir_all(dir).map_err(|source| CalibrationError::Io { path: dir.display().to_string(), source })?;
    let tracks = dir.join("tracks.csv");
    let mut w = csv::Writer::from_path(&tracks).map_err(csv_err(&tracks))?;
    w.write_record(["trackId", "frame", "class", "xCenter", "yCenter", "xVelocity", "yVelocity"])
        .map_err(csv_err(&tracks))?;
    for t in &ds.tracks {
        for f in &t.frames {
            w.write_record([
                t.id.to_string(),
                f.frame.to_string(),
                t.class.as_str().to_string(),
                format!("{:.4}", f.x),
                format!("{:.4}", f.y),
                format!("{:.4}", f.vx),
                format!("{:.4}", f.vy),
            ])
            .map_err(csv_err(&tracks))?;
        }
    }
    w.flush().map_err(|source| CalibrationError::Io { path: tracks.display().to_string(), source })?;
    let meta = dir.join("recordingMeta.csv");
    let mut w = csv::Writer::from_path(&meta).map_err(csv_err(&meta))?;
    w.write_record(["recordingId", "frameRate"]).map_err(csv_err(&meta))?;
    w.write_record(["0".to_string(), ds.frame_rate.to_string()]).map_err(csv_err(&meta))?;
    w.flush().map_err(|source| CalibrationError::Io { path: meta.display().to_string(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn reads_ind_layout_with_tracks_meta() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "07_tracks.csv",
            "recordingId,trackId,frame,xCenter,yCenter,heading,xVelocity,yVelocity\n\
             7,0,0,1.0,2.0,0,0.5,0\n7,0,1,1.02,2.0,0,0.5,0\n7,1,0,10,0,90,0,8\n",
        );
        write(dir.path(), "07_tracksMeta.csv", "recordingId,trackId,class\n7,0,pedestrian\n7,1,truck_bus\n");
        write(dir.path(), "07_recordingMeta.csv", "recordingId,frameRate\n7,25\n");
        let ds = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].frame_rate, 25.0);
        assert_eq!(ds[0].tracks[0].class, AgentClass::Pedestrian);
        assert_eq!(ds[0].tracks[0].frames.len(), 2);
        assert_eq!(ds[0].tracks[1].class, AgentClass::Truck);
    }

    #[test]
    fn rejects_unordered_frames_and_missing_columns() {
        let dir = tempfile::tempdir().unwrap();
        let meta = write(dir.path(), "recordingMeta.csv", "frameRate\n25\n");
        let t = write(
            dir.path(),
            "tracks.csv",
            "trackId,frame,class,xCenter,yCenter,xVelocity,yVelocity\n0,5,car,0,0,1,0\n0,4,car,1,0,1,0\n",
        );
        assert!(matches!(load_recording(&t, &meta, None), Err(CalibrationError::Dataset(_))));
        let t = write(dir.path(), "tracks.csv", "trackId,frame,class,xCenter,yCenter\n0,5,car,0,0\n");
        assert!(matches!(load_recording(&t, &meta, None), Err(CalibrationError::MissingColumn { .. })));
        let bad_rate = write(dir.path(), "recordingMeta.csv", "frameRate\n0\n");
        let t = write(dir.path(), "tracks.csv", "trackId,frame,class,xCenter,yCenter,xVelocity,yVelocity\n");
        assert!(matches!(load_recording(&t, &bad_rate, None), Err(CalibrationError::Dataset(_))));
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let ds = TrajectoryDataset {
            tracks: vec![Track {
                id: 3,
                class: AgentClass::Car,
                frames: vec![
                    TrackFrame { frame: 0, x: 1.5, y: -2.0, vx: 7.0, vy: 0.0 },
                    TrackFrame { frame: 1, x: 1.78, y: -2.0, vx: 7.0, vy: 0.0 },
                ],
            }],
            frame_rate: 25.0,
        };
        write_recording(dir.path(), &ds).unwrap();
        assert_eq!(load_dataset_dir(dir.path()).unwrap()[0], ds);
    }
}
