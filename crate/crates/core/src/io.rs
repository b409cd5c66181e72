//! File formats: OBJ meshes, landmark sequences (CSV and JSON), SRVF JSON,
//! deformation models, label sets, recipes, and motion libraries.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::deform::{extract_landmarks, DeformationModel, Mesh, MeshTopology, VertexWeights};
use crate::error::{Error, Result};
use crate::srvf::Srvf;
use crate::trajectory::{LandmarkFrame, LandmarkSequence};
use crate::transition::{LabelSet, LabeledMotion};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase()
}

// ---------------------------------------------------------------------------
// landmark sequences

#[derive(Serialize, Deserialize)]
struct SequenceFile {
    k: usize,
    dt: f64,
    frames: Vec<Vec<[f64; 3]>>,
}

#[derive(Serialize, Deserialize)]
struct SequenceRow {
    frame: usize,
    landmark: usize,
    x: f64,
    y: f64,
    z: f64,
}

/// Reads a sequence from `.csv` or `.json` by extension.
pub fn read_sequence(path: &Path) -> Result<LandmarkSequence> {
    match extension(path).as_str() {
        "csv" => read_sequence_csv(path),
        _ => read_sequence_json(path),
    }
}

pub fn write_sequence(seq: &LandmarkSequence, path: &Path) -> Result<()> {
    match extension(path).as_str() {
        "csv" => write_sequence_csv(seq, path),
        _ => write_sequence_json(seq, path),
    }
}

pub fn read_sequence_json(path: &Path) -> Result<LandmarkSequence> {
    sequence_from_file(read_json(path)?, path)
}

fn sequence_from_file(file: SequenceFile, path: &Path) -> Result<LandmarkSequence> {
    let frames = file
        .frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            if f.len() != file.k {
                return Err(parse_error(
                    path,
                    0,
                    format!("frame {i} has {} landmarks, header says k = {}", f.len(), file.k),
                ));
            }
            LandmarkFrame::new(f)
        })
        .collect::<Result<Vec<_>>>()?;
    LandmarkSequence::with_dt(frames, file.dt)
}

pub fn write_sequence_json(seq: &LandmarkSequence, path: &Path) -> Result<()> {
    write_json(
        &SequenceFile {
            k: seq.k(),
            dt: seq.dt(),
            frames: seq.frames().iter().map(|f| f.points().to_vec()).collect(),
        },
        path,
    )
}

/// Rows `frame,landmark,x,y,z`; frame and landmark indices must cover
/// `0..T` and `0..k` exactly. The sample spacing is `1/(T-1)`.
pub fn read_sequence_csv(path: &Path) -> Result<LandmarkSequence> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut cells: Vec<Vec<Option<[f64; 3]>>> = Vec::new();
    for row in reader.deserialize::<SequenceRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if cells.len() <= row.frame {
            cells.resize_with(row.frame + 1, Vec::new);
        }
        let frame = &mut cells[row.frame];
        if frame.len() <= row.landmark {
            frame.resize(row.landmark + 1, None);
        }
        if frame[row.landmark].replace([row.x, row.y, row.z]).is_some() {
            return Err(parse_error(
                path,
                0,
                format!("duplicate entry for frame {} landmark {}", row.frame, row.landmark),
            ));
        }
    }
    let frames = cells
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            let points: Option<Vec<[f64; 3]>> = f.into_iter().collect();
            match points {
                Some(p) if !p.is_empty() => LandmarkFrame::new(p),
                _ => Err(parse_error(path, 0, format!("frame {i} has missing landmarks"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    LandmarkSequence::new(frames)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => parse_error(path, line, format!("{kind:?}")),
    }
}

pub fn write_sequence_csv(seq: &LandmarkSequence, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for (frame, f) in seq.frames().iter().enumerate() {
        for (landmark, p) in f.points().iter().enumerate() {
            w.serialize(SequenceRow {
                frame,
                landmark,
                x: p[0],
                y: p[1],
                z: p[2],
            })
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A single frame: a JSON list of `[x, y, z]` points.
pub fn read_frame(path: &Path) -> Result<LandmarkFrame> {
    LandmarkFrame::new(read_json(path)?)
}

pub fn write_frame(frame: &LandmarkFrame, path: &Path) -> Result<()> {
    write_json(frame.points(), path)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FrameOrSequence {
    Frame(Vec<[f64; 3]>),
    Sequence(SequenceFile),
}

/// A single frame, or the first frame of a sequence file.
pub fn read_init_frame(path: &Path) -> Result<LandmarkFrame> {
    if extension(path) == "csv" {
        return Ok(read_sequence_csv(path)?.first().clone());
    }
    match read_json(path)? {
        FrameOrSequence::Frame(points) => LandmarkFrame::new(points),
        FrameOrSequence::Sequence(file) => Ok(sequence_from_file(file, path)?.first().clone()),
    }
}

// ---------------------------------------------------------------------------
// SRVFs and motions

/// JSON form of an SRVF. `length` is the curve length removed by
/// normalization; absent means 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SrvfFile {
    pub dt: f64,
    pub samples: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

impl SrvfFile {
    pub fn from_srvf(q: &Srvf) -> Self {
        Self {
            dt: q.dt(),
            samples: q.rows(),
            length: Some(q.length()),
        }
    }

    pub fn into_srvf(self) -> Result<Srvf> {
        let q = Srvf::from_rows(&self.samples, self.dt)?;
        match self.length {
            Some(l) => q.with_length(l),
            None => Ok(q),
        }
    }
}

pub fn read_srvf(path: &Path) -> Result<Srvf> {
    read_json::<SrvfFile>(path)?.into_srvf()
}

pub fn write_srvf(q: &Srvf, path: &Path) -> Result<()> {
    write_json(&SrvfFile::from_srvf(q), path)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MotionFile {
    pub start: String,
    pub end: String,
    pub init: Vec<[f64; 3]>,
    pub motion: SrvfFile,
}

impl MotionFile {
    pub fn from_motion(m: &LabeledMotion) -> Self {
        Self {
            start: m.start.name.clone(),
            end: m.end.name.clone(),
            init: m.init.points().to_vec(),
            motion: SrvfFile::from_srvf(&m.motion),
        }
    }

    pub fn into_motion(self, labels: &LabelSet) -> Result<LabeledMotion> {
        LabeledMotion::new(
            self.motion.into_srvf()?,
            labels.get(&self.start)?.clone(),
            labels.get(&self.end)?.clone(),
            LandmarkFrame::new(self.init)?,
        )
    }
}

/// A single motion object or a JSON list of them.
pub fn read_motions(path: &Path, labels: &LabelSet) -> Result<Vec<LabeledMotion>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<MotionFile>),
        One(MotionFile),
    }
    let files = match read_json::<OneOrMany>(path)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(m) => vec![m],
    };
    files.into_iter().map(|m| m.into_motion(labels)).collect()
}

pub fn write_motions(motions: &[LabeledMotion], path: &Path) -> Result<()> {
    let files: Vec<MotionFile> = motions.iter().map(MotionFile::from_motion).collect();
    write_json(&files, path)
}

#[derive(Serialize, Deserialize)]
struct LabelSetFile {
    labels: Vec<String>,
}

pub fn read_label_set(path: &Path) -> Result<LabelSet> {
    LabelSet::new(&read_json::<LabelSetFile>(path)?.labels)
}

pub fn write_label_set(set: &LabelSet, path: &Path) -> Result<()> {
    write_json(
        &LabelSetFile {
            labels: set.labels().iter().map(|l| l.name.clone()).collect(),
        },
        path,
    )
}

/// A composition recipe: the label names visited in order.
pub fn read_recipe(path: &Path) -> Result<Vec<String>> {
    read_json(path)
}

// ---------------------------------------------------------------------------
// meshes

/// Parses `v x y z` and triangular `f i j k` records; other records are
/// ignored. Face references may use the `i/t/n` forms and negative indices.
pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<([usize; 3], usize)> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_error(path, lineno, format!("bad vertex coordinate: {e}")))?;
                if coords.len() != 3 {
                    return Err(parse_error(path, lineno, "vertex needs three coordinates"));
                }
                vertices.push([coords[0], coords[1], coords[2]]);
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(parse_error(
                        path,
                        lineno,
                        format!("face {} has {} vertices; only triangles are supported", faces.len(), refs.len()),
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, r) in face.iter_mut().zip(refs) {
                    let idx: i64 = r
                        .split('/')
                        .next()
                        .unwrap_or_default()
                        .parse()
                        .map_err(|e| parse_error(path, lineno, format!("bad face index '{r}': {e}")))?;
                    *slot = match idx {
                        i if i > 0 => (i - 1) as usize,
                        i if i < 0 && (-i) as usize <= vertices.len() => vertices.len() - (-i) as usize,
                        _ => {
                            return Err(parse_error(
                                path,
                                lineno,
                                format!("face {} has invalid vertex index {idx}", faces.len()),
                            ))
                        }
                    };
                }
                faces.push((face, lineno));
            }
            _ => {}
        }
    }
    let n = vertices.len();
    if let Some((f, (face, lineno))) = faces
        .iter()
        .enumerate()
        .find(|(_, (face, _))| face.iter().any(|&v| v >= n))
    {
        return Err(parse_error(
            path,
            *lineno,
            format!(
                "face {f} references vertex {} but the mesh has {n} vertices",
                face.iter().max().map_or(0, |v| v + 1)
            ),
        ));
    }
    let topology = MeshTopology::new(n, faces.into_iter().map(|(f, _)| f).collect(), Vec::new())?;
    Mesh::new(vertices, Arc::new(topology))
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        for v in mesh.vertices() {
            writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
        }
        for f in mesh.topology().faces() {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

fn obj_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && extension(p) == "obj")
        .collect();
    paths.sort();
    Ok(paths)
}

/// Loads every `.obj` in `dir`, ordered by file name, sharing one topology.
pub fn load_sequence_dir(dir: &Path) -> Result<Vec<Mesh>> {
    let paths = obj_files(dir)?;
    let Some(first_path) = paths.first() else {
        return Err(Error::invalid(format!("{} contains no .obj files", dir.display())));
    };
    let first = load_mesh(first_path)?;
    let topology = first.topology().clone();
    let mut meshes = vec![first];
    for p in &paths[1..] {
        let mesh = load_mesh(p)?;
        if **mesh.topology() != *topology {
            return Err(Error::shape(format!(
                "frame {} has {} vertices / {} faces, expected {} / {}",
                p.display(),
                mesh.vertex_count(),
                mesh.topology().faces().len(),
                topology.vertex_count(),
                topology.faces().len()
            )));
        }
        meshes.push(Mesh::new(mesh.vertices().to_vec(), topology.clone())?);
    }
    Ok(meshes)
}

/// Landmark trajectory of a directory of OBJ frames. Without `landmarks`
/// every vertex is a landmark.
pub fn read_landmark_sequence_dir(dir: &Path, landmarks: Option<&[usize]>) -> Result<LandmarkSequence> {
    let frames = load_sequence_dir(dir)?;
    let indices = match landmarks {
        Some(l) => l.to_vec(),
        None => (0..frames[0].vertex_count()).collect(),
    };
    let topology = Arc::new(frames[0].topology().with_landmarks(indices)?);
    let lms = frames
        .into_iter()
        .map(|m| extract_landmarks(&Mesh::new(m.vertices().to_vec(), topology.clone())?))
        .collect::<Result<Vec<_>>>()?;
    LandmarkSequence::new(lms)
}

/// Writes `frame_0000.obj`, `frame_0001.obj`, ... into `dir`, creating it.
pub fn save_sequence_dir(meshes: &[Mesh], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, m) in meshes.iter().enumerate() {
        save_mesh(m, &dir.join(format!("frame_{i:04}.obj")))?;
    }
    Ok(())
}

/// One zero-based vertex index per line; blank lines and `#` comments skipped.
pub fn read_landmark_indices(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|e| parse_error(path, i + 1, format!("bad landmark index: {e}")))
        })
        .collect()
}

pub fn write_landmark_indices(indices: &[usize], path: &Path) -> Result<()> {
    let text: String = indices.iter().map(|i| format!("{i}\n")).collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a mesh and attaches landmark indices read from `landmarks`.
pub fn load_mesh_with_landmarks(path: &Path, landmarks: &Path) -> Result<Mesh> {
    load_mesh(path)?.with_landmarks(read_landmark_indices(landmarks)?)
}

pub fn write_weights_csv(weights: &VertexWeights, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["vertex", "weight"]).map_err(|e| csv_error(path, e))?;
    for (i, v) in weights.weights.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_curve_csv(values: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["frame", "value"]).map_err(|e| csv_error(path, e))?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// deformation models

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(rename = "N")]
    n: usize,
    k: usize,
    m: usize,
    landmark_indices: Vec<usize>,
    mean: Vec<f64>,
    /// `3N` rows of `m` entries.
    basis: Vec<Vec<f64>>,
    /// `3k` rows of `m` entries.
    landmark_rows: Vec<Vec<f64>>,
    #[serde(default)]
    explained_variance: Vec<f64>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_matrix(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::shape(format!("{what} rows must have {ncols} entries")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_model(model: &DeformationModel, path: &Path) -> Result<()> {
    write_json(
        &ModelFile {
            n: model.vertex_count(),
            k: model.landmark_count(),
            m: model.mode_count(),
            landmark_indices: model.landmark_indices().to_vec(),
            mean: model.mean().iter().copied().collect(),
            basis: matrix_rows(model.basis()),
            landmark_rows: matrix_rows(model.landmark_rows()),
            explained_variance: model.explained_variance().to_vec(),
        },
        path,
    )
}

/// Loads a model, checking the header shape and that the stored landmark
/// rows match the basis.
pub fn read_model(path: &Path) -> Result<DeformationModel> {
    let f: ModelFile = read_json(path)?;
    let bad = |msg: String| parse_error(path, 0, msg);
    if f.basis.len() != 3 * f.n || f.mean.len() != 3 * f.n {
        return Err(bad(format!(
            "header N = {} but basis has {} rows and mean {} entries",
            f.n,
            f.basis.len(),
            f.mean.len()
        )));
    }
    if f.landmark_indices.len() != f.k || f.landmark_rows.len() != 3 * f.k {
        return Err(bad(format!(
            "header k = {} but {} landmark indices and {} landmark rows",
            f.k,
            f.landmark_indices.len(),
            f.landmark_rows.len()
        )));
    }
    let basis = rows_matrix(&f.basis, f.m, "basis")?;
    let rows = rows_matrix(&f.landmark_rows, f.m, "landmark")?;
    Ok(DeformationModel::from_parts(
        basis,
        DVector::from_vec(f.mean),
        f.landmark_indices,
        &rows,
    )?
    .with_explained_variance(f.explained_variance))
}
