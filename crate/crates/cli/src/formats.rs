//! On-disk formats.
//!
//! * Raw trajectories: CSV with rows `id,x,y,t` (decimal, UTF-8, header
//!   row optional). Rows are grouped by id in order of first appearance;
//!   timestamps must already be strictly increasing per id, the reader
//!   reports a violation rather than re-sorting.
//! * Compressed datasets: JSON lines. The first line is a header with
//!   the format version, epsilon, the deviation spread sigma, counts and
//!   a SHA-256 checksum of the trajectory lines; each following line is
//!   one trajectory with its retained points and discarded counts.
//!   Coordinates round-trip bit-exactly (shortest-round-trip decimal).
//! * Index dumps: a single JSON document wrapping the serialized tree
//!   under a format version.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use traj_core::index::Quadtree;
use traj_core::model::{
    CompressedDataset, CompressedTrajectory, ModelError, RawTrajectory, TrajectoryId,
    TrajectoryPoint,
};

pub const COMPRESSED_FORMAT_VERSION: u32 = 1;
pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported format version {found}, expected {expected}")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: checksum mismatch, file is corrupted")]
    Checksum { path: PathBuf },
    #[error("{path}: truncated, expected {expected} trajectories but found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl FormatError {
    /// 2 for unreadable or malformed files, 1 for data that parses but
    /// violates domain invariants.
    pub fn exit_code(&self) -> u8 {
        match self {
            FormatError::Model(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Read `id,x,y,t` rows grouped by id. An empty file is an empty
/// dataset; a leading header row is skipped.
pub fn read_raw_csv(path: &Path) -> Result<Vec<RawTrajectory>, FormatError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);

    let mut order: Vec<u64> = Vec::new();
    let mut groups: std::collections::HashMap<u64, Vec<TrajectoryPoint>> = Default::default();
    let mut first_data_row = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err(path))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if first_data_row && fields.first().is_some_and(|f| f.parse::<u64>().is_err()) {
            // Header row.
            first_data_row = false;
            continue;
        }
        first_data_row = false;
        let parse_err = |message: String| FormatError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        if fields.len() != 4 {
            return Err(parse_err(format!(
                "expected 4 fields `id,x,y,t`, found {}",
                fields.len()
            )));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|e| parse_err(format!("bad id {:?}: {e}", fields[0])))?;
        let mut nums = [0.0f64; 3];
        for (i, name) in ["x", "y", "t"].iter().enumerate() {
            nums[i] = fields[i + 1]
                .parse()
                .map_err(|e| parse_err(format!("bad {name} {:?}: {e}", fields[i + 1])))?;
        }
        if !groups.contains_key(&id) {
            order.push(id);
        }
        groups
            .entry(id)
            .or_default()
            .push(TrajectoryPoint::new(nums[0], nums[1], nums[2]));
    }

    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let points = groups.remove(&id).expect("grouped above");
        out.push(RawTrajectory::new(TrajectoryId(id), points)?);
    }
    Ok(out)
}

/// Write trajectories as `id,x,y,t` rows with a header line.
pub fn write_raw_csv(path: &Path, trajectories: &[RawTrajectory]) -> Result<(), FormatError> {
    let mut out = String::from("id,x,y,t\n");
    for t in trajectories {
        for p in t.points() {
            out.push_str(&format!("{},{},{},{}\n", t.id(), p.x, p.y, p.t));
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

#[derive(Debug, Serialize, Deserialize)]
struct CompressedHeader {
    format_version: u32,
    epsilon: f64,
    sigma: f64,
    trajectory_count: u64,
    /// Retained points stored in the file.
    point_count: u64,
    /// SHA-256 over the trajectory lines (newlines included).
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryLine {
    id: u64,
    epsilon: f64,
    retained: Vec<(f64, f64, f64)>,
    discarded_counts: Vec<u64>,
}

/// Write a compressed dataset as JSON lines with a checksummed header.
pub fn write_compressed(path: &Path, dataset: &CompressedDataset) -> Result<(), FormatError> {
    let mut body = String::new();
    let mut point_count = 0u64;
    for t in &dataset.trajectories {
        let line = TrajectoryLine {
            id: t.id.0,
            epsilon: t.epsilon,
            retained: t.retained.iter().map(|p| (p.x, p.y, p.t)).collect(),
            discarded_counts: t.discarded_counts.clone(),
        };
        body.push_str(&serde_json::to_string(&line).expect("serializable line"));
        body.push('\n');
        point_count += t.retained.len() as u64;
    }
    let header = CompressedHeader {
        format_version: COMPRESSED_FORMAT_VERSION,
        epsilon: dataset.epsilon,
        sigma: dataset.sigma,
        trajectory_count: dataset.trajectories.len() as u64,
        point_count,
        sha256: hex::encode(Sha256::digest(body.as_bytes())),
    };
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    let mut text = serde_json::to_string(&header).expect("serializable header");
    text.push('\n');
    text.push_str(&body);
    file.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Read a compressed dataset, verifying version, counts and checksum.
pub fn read_compressed(path: &Path) -> Result<CompressedDataset, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.split_inclusive('\n');
    let header_line = lines.next().ok_or_else(|| FormatError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "missing header line".into(),
    })?;
    let header: CompressedHeader =
        serde_json::from_str(header_line).map_err(|e| FormatError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("bad header: {e}"),
        })?;
    if header.format_version != COMPRESSED_FORMAT_VERSION {
        return Err(FormatError::Version {
            path: path.to_path_buf(),
            found: header.format_version,
            expected: COMPRESSED_FORMAT_VERSION,
        });
    }

    let body = &text[header_line.len()..];
    let mut trajectories = Vec::with_capacity(header.trajectory_count as usize);
    let mut point_count = 0u64;
    for (idx, line) in body.split_inclusive('\n').enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TrajectoryLine =
            serde_json::from_str(line).map_err(|e| FormatError::Parse {
                path: path.to_path_buf(),
                line: idx + 2,
                message: format!("bad trajectory line: {e}"),
            })?;
        point_count += parsed.retained.len() as u64;
        trajectories.push(CompressedTrajectory::new(
            TrajectoryId(parsed.id),
            parsed
                .retained
                .iter()
                .map(|&(x, y, t)| TrajectoryPoint::new(x, y, t))
                .collect(),
            parsed.discarded_counts,
            parsed.epsilon,
        )?);
    }
    if trajectories.len() as u64 != header.trajectory_count
        || point_count != header.point_count
    {
        return Err(FormatError::Truncated {
            path: path.to_path_buf(),
            expected: header.trajectory_count,
            found: trajectories.len() as u64,
        });
    }
    if hex::encode(Sha256::digest(body.as_bytes())) != header.sha256 {
        return Err(FormatError::Checksum {
            path: path.to_path_buf(),
        });
    }
    Ok(CompressedDataset {
        epsilon: header.epsilon,
        sigma: header.sigma,
        trajectories,
    })
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format_version: u32,
    tree: Quadtree,
}

/// Write the index dump.
pub fn write_index(path: &Path, tree: &Quadtree) -> Result<(), FormatError> {
    let file = IndexFile {
        format_version: INDEX_FORMAT_VERSION,
        tree: tree.clone(),
    };
    fs::write(
        path,
        serde_json::to_string(&file).expect("serializable index"),
    )
    .map_err(io_err(path))
}

/// Read an index dump, verifying the format version.
pub fn read_index(path: &Path) -> Result<Quadtree, FormatError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    // Check the version before insisting the whole tree parses, so a
    // newer format fails with the version error rather than a parse one.
    #[derive(Deserialize)]
    struct VersionProbe {
        format_version: u32,
    }
    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| FormatError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: format!("bad index dump: {e}"),
    })?;
    if probe.format_version != INDEX_FORMAT_VERSION {
        return Err(FormatError::Version {
            path: path.to_path_buf(),
            found: probe.format_version,
            expected: INDEX_FORMAT_VERSION,
        });
    }
    let file: IndexFile = serde_json::from_str(&text).map_err(|e| FormatError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: format!("bad index dump: {e}"),
    })?;
    Ok(file.tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use traj_core::compress::{compress_dataset, CompressionConfig};
    use traj_core::synth::{generate, GeneratorConfig};

    fn tempdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("tempdir")
    }

    #[test]
    fn raw_csv_round_trip() {
        let dir = tempdir();
        let path = dir.path().join("raw.csv");
        let cfg = GeneratorConfig {
            trajectory_count: 5,
            points_min: 10,
            points_max: 30,
            ..GeneratorConfig::default()
        };
        let raws = generate(&cfg, 9).unwrap();
        write_raw_csv(&path, &raws).unwrap();
        let back = read_raw_csv(&path).unwrap();
        assert_eq!(raws, back);
    }

    #[test]
    fn raw_csv_header_optional_and_empty_ok() {
        let dir = tempdir();
        let path = dir.path().join("raw.csv");
        fs::write(&path, "7,1.5,2.5,0\n7,2.5,3.5,1\n").unwrap();
        let ts = read_raw_csv(&path).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].id(), TrajectoryId(7));
        assert_eq!(ts[0].len(), 2);

        fs::write(&path, "").unwrap();
        assert!(read_raw_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn raw_csv_errors_carry_line_numbers() {
        let dir = tempdir();
        let path = dir.path().join("raw.csv");
        fs::write(&path, "id,x,y,t\n1,0,0,0\n1,zzz,0,1\n").unwrap();
        let err = read_raw_csv(&path).unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 3, .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn raw_csv_rejects_shuffled_time_naming_id() {
        let dir = tempdir();
        let path = dir.path().join("raw.csv");
        fs::write(&path, "3,0,0,5\n3,1,0,4\n").unwrap();
        let err = read_raw_csv(&path).unwrap_err();
        assert!(err.to_string().contains('3'), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    fn sample_dataset() -> CompressedDataset {
        let cfg = GeneratorConfig {
            trajectory_count: 8,
            points_min: 20,
            points_max: 60,
            ..GeneratorConfig::default()
        };
        let raws = generate(&cfg, 17).unwrap();
        compress_dataset(&raws, &CompressionConfig::new(1.25).unwrap()).0
    }

    #[test]
    fn compressed_round_trip_is_exact() {
        let dir = tempdir();
        let path = dir.path().join("c.jsonl");
        let ds = sample_dataset();
        write_compressed(&path, &ds).unwrap();
        let back = read_compressed(&path).unwrap();
        assert_eq!(ds, back);
        // Header sigma preserved to full precision.
        assert_eq!(ds.sigma.to_bits(), back.sigma.to_bits());
    }

    #[test]
    fn compressed_detects_version_checksum_truncation() {
        let dir = tempdir();
        let path = dir.path().join("c.jsonl");
        let ds = sample_dataset();
        write_compressed(&path, &ds).unwrap();
        let text = fs::read_to_string(&path).unwrap();

        let bumped = text.replacen("\"format_version\":1", "\"format_version\":9", 1);
        fs::write(&path, bumped).unwrap();
        assert!(matches!(
            read_compressed(&path).unwrap_err(),
            FormatError::Version { found: 9, .. }
        ));

        let mut lines: Vec<&str> = text.lines().collect();
        lines.truncate(lines.len() - 1);
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        assert!(matches!(
            read_compressed(&path).unwrap_err(),
            FormatError::Truncated { .. }
        ));

        // Flip a digit inside a coordinate: same line count, bad hash.
        let corrupted = text.replacen("\"retained\":[[", "\"retained\":[[1", 1);
        fs::write(&path, corrupted).unwrap();
        let err = read_compressed(&path).unwrap_err();
        assert!(
            matches!(err, FormatError::Checksum { .. }),
            "expected checksum error, got {err}"
        );
    }

    #[test]
    fn index_round_trip_preserves_queries() {
        use traj_core::geometry::Rect;
        use traj_core::index::{IndexConfig, Quadtree};

        let dir = tempdir();
        let path = dir.path().join("index.json");
        let ds = sample_dataset();
        let tree = Quadtree::build(&ds, &IndexConfig::new(4, ds.epsilon).unwrap());
        write_index(&path, &tree).unwrap();
        let back = read_index(&path).unwrap();
        assert_eq!(back.epsilon(), tree.epsilon());
        assert_eq!(back.xi(), tree.xi());
        let b = tree.bounds();
        for rect in [
            b,
            Rect::new(b.min_x, b.min_y, b.min_x + 0.3 * b.width(), b.min_y + 0.4 * b.height()),
        ] {
            assert_eq!(tree.query_leaves(&rect), back.query_leaves(&rect));
        }
    }

    #[test]
    fn index_rejects_corruption_and_versions() {
        let dir = tempdir();
        let path = dir.path().join("index.json");
        fs::write(&path, "{not json").unwrap();
        assert!(matches!(
            read_index(&path).unwrap_err(),
            FormatError::Parse { .. }
        ));
        fs::write(&path, r#"{"format_version":99,"tree":{}}"#).unwrap();
        assert!(matches!(
            read_index(&path).unwrap_err(),
            FormatError::Version { found: 99, .. }
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_raw_csv(Path::new("/nonexistent/none.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/none.csv"));
        assert_eq!(err.exit_code(), 2);
    }
}
