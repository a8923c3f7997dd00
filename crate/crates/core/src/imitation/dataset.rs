use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{cell_of_pixel, GridCell, GRID};
use crate::armsim::{forward_kinematics, ArmEnv, ArmState, Frame, Point2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Hand,
    Robot,
}

impl Subject {
    pub fn name(self) -> &'static str {
        match self {
            Subject::Hand => "hand",
            Subject::Robot => "robot",
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subject {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hand" => Ok(Subject::Hand),
            "robot" => Ok(Subject::Robot),
            _ => Err(Error::Config(format!("unknown subject {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFrame {
    pub frame: Frame,
    pub label: GridCell,
    pub subject: Subject,
    /// Pixel on which the marker (hand disc or effector) is centered.
    pub marker_px: (usize, usize),
}

/// Pixel rows (or columns) belonging to grid band `band` of a `size`-pixel axis.
fn band_pixels(band: usize, size: usize) -> std::ops::Range<usize> {
    let start = (band * size).div_ceil(GRID);
    let end = ((band + 1) * size).div_ceil(GRID);
    start..end
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w < -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// A random joint configuration whose effector lands on `target`, or `None`
/// if none was found. Only three-link chains are supported.
pub fn random_pose_reaching(
    links: &[f64],
    base: Point2,
    target: Point2,
    rng: &mut impl Rng,
) -> Option<ArmState> {
    let [l1, l2, l3] = links else {
        return None;
    };
    for _ in 0..256 {
        let phi: f64 = rng.random_range(-PI..PI);
        let wrist = target - Point2::new(phi.cos(), phi.sin()) * *l3 - base;
        let d2 = wrist.x * wrist.x + wrist.y * wrist.y;
        let cos_elbow = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if !(-1.0..=1.0).contains(&cos_elbow) {
            continue;
        }
        let elbow = cos_elbow.acos() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let shoulder = wrist.y.atan2(wrist.x) - (l2 * elbow.sin()).atan2(l1 + l2 * elbow.cos());
        let (a1, a2) = (wrap_angle(shoulder), wrap_angle(elbow));
        let a3 = wrap_angle(phi - a1 - a2);
        let state = ArmState::new(vec![a1, a2, a3], links.to_vec(), base).ok()?;
        if forward_kinematics(&state).distance(target) < 1e-9 {
            return Some(state);
        }
    }
    None
}

/// `n_per_cell` frames for every cell and subject with the marker centered
/// on a uniformly drawn pixel of that cell.
pub fn build_dataset(
    env: &ArmEnv,
    n_per_cell: usize,
    subjects: &[Subject],
    seed: u64,
) -> Result<Vec<LabeledFrame>> {
    if n_per_cell == 0 {
        return Err(Error::Config("n_per_cell must be at least 1".into()));
    }
    if subjects.is_empty() {
        return Err(Error::Config("at least one subject is required".into()));
    }
    let cam = env.camera();
    let cfg = env.config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(25 * n_per_cell * subjects.len());
    for &subject in subjects {
        for cell in GridCell::all() {
            let rows = band_pixels(cell.row(), cam.height);
            let cols = band_pixels(cell.col(), cam.width);
            for _ in 0..n_per_cell {
                let px = (
                    rng.random_range(rows.clone()),
                    rng.random_range(cols.clone()),
                );
                let point = cam.pixel_to_workspace(px.0, px.1);
                let frame = match subject {
                    Subject::Hand => env.render_hand(point)?,
                    Subject::Robot => {
                        let pose = random_pose_reaching(&cfg.link_lengths, cfg.base, point, &mut rng)
                            .ok_or_else(|| {
                                Error::Config(format!(
                                    "arm cannot reach ({:.3}, {:.3})",
                                    point.x, point.y
                                ))
                            })?;
                        env.render(&pose)
                    }
                };
                let label = cell_of_pixel(px.0, px.1, cam.height, cam.width)?;
                out.push(LabeledFrame {
                    frame,
                    label,
                    subject,
                    marker_px: px,
                });
            }
        }
    }
    Ok(out)
}

/// Shuffles and splits off the last `val_fraction` of the samples.
pub fn split_dataset(
    mut data: Vec<LabeledFrame>,
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledFrame>, Vec<LabeledFrame>)> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::Config(format!("validation fraction {val_fraction} not in [0, 1)")));
    }
    data.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (data.len() as f64 * val_fraction).round() as usize;
    let val = data.split_off(data.len() - n_val);
    Ok((data, val))
}

/// One manifest line: `<frame path> <subject> <row> <col> <marker row> <marker col>`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub path: String,
    pub subject: Subject,
    pub label: GridCell,
    pub marker_px: (usize, usize),
}

pub fn write_manifest(w: &mut impl Write, entries: &[ManifestEntry]) -> Result<()> {
    for e in entries {
        if e.path.contains(char::is_whitespace) {
            return Err(Error::Config(format!("frame path {:?} contains whitespace", e.path)));
        }
        writeln!(
            w,
            "{} {} {} {} {} {}",
            e.path,
            e.subject,
            e.label.row(),
            e.label.col(),
            e.marker_px.0,
            e.marker_px.1
        )?;
    }
    Ok(())
}

pub fn read_manifest(r: impl BufRead) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("manifest line {}: {line:?}", n + 1));
        let f: Vec<&str> = line.split_whitespace().collect();
        let [path, subject, row, col, mr, mc] = f[..] else {
            return Err(bad());
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let (row, col) = (num(row)?, num(col)?);
        let marker_px = (num(mr)?, num(mc)?);
        out.push(ManifestEntry {
            path: path.to_string(),
            subject: subject.parse().map_err(|_| bad())?,
            label: GridCell::new(row, col).map_err(|_| bad())?,
            marker_px,
        });
    }
    Ok(out)
}
