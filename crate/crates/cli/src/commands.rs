use std::fs;
use std::path::{Path, PathBuf};

use morph4d::io::{self, SrvfFile};
use morph4d::sphere::geodesic_interpolate_eps;
use morph4d::*;
use serde::Deserialize;

use crate::{Cli, Command, Metric};

fn require_out(out: Option<&Path>) -> Result<&Path> {
    out.ok_or_else(|| Error::Invalid("--out is required for this command".into()))
}

/// Flag value first, then the config's landmark file.
fn landmark_indices(flag: Option<&Path>, cfg: &PipelineConfig) -> Result<Option<Vec<usize>>> {
    flag.or(cfg.landmark_indices.as_deref())
        .map(io::read_landmark_indices)
        .transpose()
}

fn required_landmarks(flag: Option<&Path>, cfg: &PipelineConfig) -> Result<Vec<usize>> {
    landmark_indices(flag, cfg)?
        .ok_or_else(|| Error::Invalid("landmark indices required: pass --landmarks or set landmark_indices in the config".into()))
}

fn read_any_sequence(path: &Path, landmarks: Option<&[usize]>) -> Result<LandmarkSequence> {
    if path.is_dir() {
        io::read_landmark_sequence_dir(path, landmarks)
    } else {
        io::read_sequence(path)
    }
}

fn first_motion(path: &Path, labels: &LabelSet) -> Result<LabeledMotion> {
    io::read_motions(path, labels)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Invalid(format!("{} holds no motions", path.display())))
}

#[derive(Deserialize)]
struct MeshPair {
    neutral: PathBuf,
    expression: PathBuf,
}

/// Directories below `root` (inclusive) that directly contain `.obj` files.
fn sequence_dirs(root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::Io { path: root.to_owned(), source: e })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    if entries.iter().any(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("obj"))) {
        out.push(root.to_owned());
    }
    for p in entries.iter().filter(|p| p.is_dir()) {
        sequence_dirs(p, out)?;
    }
    Ok(())
}

fn training_pairs(sequences: Option<&Path>, pairs: Option<&Path>, landmarks: &[usize]) -> Result<Vec<(Mesh, Mesh)>> {
    let mut out = Vec::new();
    if let Some(root) = sequences {
        let mut dirs = Vec::new();
        sequence_dirs(root, &mut dirs)?;
        for dir in dirs {
            let frames = io::load_sequence_dir(&dir)?;
            let neutral = frames[0].clone().with_landmarks(landmarks.to_vec())?;
            for f in &frames[1..] {
                out.push((neutral.clone(), f.clone().with_landmarks(landmarks.to_vec())?));
            }
        }
    }
    if let Some(list) = pairs {
        let base = list.parent().unwrap_or(Path::new("."));
        let entries: Vec<MeshPair> = io::read_json(list)?;
        for p in entries {
            let neutral = io::load_mesh(&base.join(p.neutral))?.with_landmarks(landmarks.to_vec())?;
            let expr = io::load_mesh(&base.join(p.expression))?.with_landmarks(landmarks.to_vec())?;
            out.push((neutral, expr));
        }
    }
    if out.is_empty() {
        return Err(Error::Invalid("no training pairs found".into()));
    }
    Ok(out)
}

fn emit_report(report: &MetricReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => io::write_json(report, p),
        None => {
            let text = serde_json::to_string_pretty(report).map_err(|e| Error::Invalid(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn scalar_report(metric: &str, value: f64) -> Result<MetricReport> {
    Ok(MetricReport::new(metric, &ErrorSummary::from_values(vec![value])?))
}

fn evaluate(metric: Metric, cfg: &PipelineConfig) -> Result<MetricReport> {
    match metric {
        Metric::PerVertex { a, b, thresholds } => {
            let d = vertex_distances(&io::load_mesh(&a)?, &io::load_mesh(&b)?)?;
            let curve = if thresholds.is_empty() {
                None
            } else {
                Some(cumulative_error_curve(&d, &thresholds)?.fractions)
            };
            let report = MetricReport::new("per-vertex", &ErrorSummary::from_values(d)?);
            Ok(match curve {
                Some(c) => report.with_curve(c),
                None => report,
            })
        }
        Metric::SlidingWindow { gen, gt, window } => {
            let s = sliding_window_error(&io::load_sequence_dir(&gen)?, &io::load_sequence_dir(&gt)?, window)?;
            Ok(MetricReport::new("sliding-window", &s))
        }
        Metric::Specificity { gen, reference } => {
            let gens = gen.iter().map(|p| io::read_sequence(p)).collect::<Result<Vec<_>>>()?;
            let reference = io::read_sequence(&reference)?;
            let s = specificity(&gens, &reference)?;
            Ok(MetricReport::new("specificity", &s).with_curve(per_frame_specificity(&gens, &reference)?))
        }
        Metric::DisplacementL1 { neutral, gen, truth } => {
            let neutral = io::load_mesh(&neutral)?;
            let g = DisplacementField::between(&neutral, &io::load_mesh(&gen)?)?;
            let t = DisplacementField::between(&neutral, &io::load_mesh(&truth)?)?;
            scalar_report("displacement-l1", displacement_l1(&g, &t)?)
        }
        Metric::WeightedL1 { neutral, gen, truth, landmarks } => {
            let lms = required_landmarks(landmarks.as_deref(), cfg)?;
            let w = compute_vertex_weights(&io::load_mesh(&neutral)?.with_landmarks(lms)?)?;
            scalar_report("weighted-l1", weighted_l1(&io::load_mesh(&gen)?, &io::load_mesh(&truth)?, &w)?)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = PipelineConfig::discover(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Encode { input, landmarks } => {
            let lms = landmark_indices(landmarks.as_deref(), &cfg)?;
            let q = srvf_encode(&read_any_sequence(&input, lms.as_deref())?)?;
            io::write_srvf(&q, require_out(out)?)
        }
        Command::Decode { srvf, init, unit } => {
            let q = io::read_srvf(&srvf)?;
            let init = io::read_init_frame(&init)?;
            let seq = if unit { srvf_decode(&q, &init)? } else { srvf_decode_restored(&q, &init)? };
            io::write_sequence(&seq, require_out(out)?)
        }
        Command::Interpolate { q1, q2, tau, steps } => {
            let (a, b) = (io::read_srvf(&q1)?, io::read_srvf(&q2)?);
            let out = require_out(out)?;
            match (tau, steps) {
                (Some(t), _) => io::write_srvf(&geodesic_interpolate_eps(&a, &b, t, cfg.numeric_epsilon)?, out),
                (None, n) => {
                    let n = n.unwrap_or(cfg.n_steps);
                    if n < 2 {
                        return Err(Error::Invalid(format!("steps must be >= 2, got {n}")));
                    }
                    let path = (0..n)
                        .map(|i| {
                            let t = i as f64 / (n - 1) as f64;
                            geodesic_interpolate_eps(&a, &b, t, cfg.numeric_epsilon).map(|q| SrvfFile::from_srvf(&q))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    io::write_json(&path, out)
                }
            }
        }
        Command::SynthTransition { m1, m2, steps } => {
            let labels = cfg.labels()?;
            let (m1, m2) = (first_motion(&m1, &labels)?, first_motion(&m2, &labels)?);
            let t = synth_peak_transition(&m1, &m2, steps.unwrap_or(cfg.n_steps))?;
            io::write_sequence(&t.sequence, require_out(out)?)
        }
        Command::Compose { recipe, motions, init } => {
            let library = io::read_motions(&motions, &cfg.labels()?)?;
            let chosen = motions_for_recipe(&library, &io::read_recipe(&recipe)?)?;
            let seq = compose_transitions(&chosen, &io::read_init_frame(&init)?)?;
            io::write_sequence(&seq, require_out(out)?)
        }
        Command::Transfer { source, target } => {
            let seq = transfer_motion(&read_any_sequence(&source, None)?, &io::read_init_frame(&target)?)?;
            io::write_sequence(&seq, require_out(out)?)
        }
        Command::TrainModel { sequences, pairs, landmarks, modes } => {
            let lms = required_landmarks(landmarks.as_deref(), &cfg)?;
            let pairs = training_pairs(sequences.as_deref(), pairs.as_deref(), &lms)?;
            let fields: Vec<DisplacementField> =
                build_displacement_dataset(&pairs)?.into_iter().map(|(d, _)| d).collect();
            let selection = modes.map_or(cfg.pca.into(), ModeSelection::Count);
            let model = train_pca(&fields, &lms, selection)?;
            io::write_model(&model, require_out(out)?)
        }
        Command::Fit { model, neutral, target, sequence } => {
            let model = io::read_model(&model)?;
            let neutral = io::load_mesh(&neutral)?.with_landmarks(model.landmark_indices().to_vec())?;
            let ridge = cfg.ridge.unwrap_or_else(|| model.default_ridge());
            let out = require_out(out)?;
            match (target, sequence) {
                (Some(t), _) => io::save_mesh(&deform_to_landmarks(&neutral, &io::read_frame(&t)?, &model, ridge)?, out),
                (None, Some(s)) => io::save_sequence_dir(&deform_sequence(&neutral, &io::read_sequence(&s)?, &model, ridge)?, out),
                (None, None) => Err(Error::Invalid("pass --target or --sequence".into())),
            }
        }
        Command::Evaluate(e) => emit_report(&evaluate(e.metric, &cfg)?, out),
        Command::Weights { mesh, landmarks } => {
            let lms = required_landmarks(landmarks.as_deref(), &cfg)?;
            let w = compute_vertex_weights(&io::load_mesh(&mesh)?.with_landmarks(lms)?)?;
            io::write_weights_csv(&w, require_out(out)?)
        }
    }
}
