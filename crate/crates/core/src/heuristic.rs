//! Heuristic exploration term: the difference between the demonstrated cell
//! and the robot's estimated cell, turned into a joint-space correction.

use std::io::{BufRead, Write};

use crate::armsim::{ActionVector, ArmState, Camera, Point2};
use crate::error::{Error, Result};
use crate::imitation::{cell_size_px, GridCell};

pub use crate::armsim::jacobian;

/// Non-empty, time-ordered sequence of grid cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    cells: Vec<GridCell>,
}

impl Trajectory {
    pub fn new(cells: Vec<GridCell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Config("trajectory must not be empty".into()));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<GridCell> {
        self.cells.get(t).copied()
    }

    /// One `row col` line per cell.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        for c in &self.cells {
            writeln!(w, "{} {}", c.row(), c.col())?;
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let mut cells = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Format(format!("bad trajectory line {line:?}"));
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(r)), Some(Ok(c)), None) => {
                    cells.push(GridCell::new(r, c).map_err(|_| bad())?)
                }
                _ => return Err(bad()),
            }
        }
        Self::new(cells).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeuristicConfig {
    /// Gain applied to `Jᵀ d`.
    pub gain: f64,
    /// Per-episode multiplicative decay of the gain.
    pub decay: f64,
    /// Per-component magnitude limit of the correction.
    pub clip: f64,
}

impl HeuristicConfig {
    /// Defaults tied to the environment's action limit. `Jᵀd` for a one-cell
    /// displacement is only about a tenth of a radian, so a gain of five action
    /// limits is what lets the correction reach the clip early in training.
    pub fn for_action_limit(action_limit: f64) -> Self {
        Self {
            gain: 5.0 * action_limit,
            decay: 0.995,
            clip: action_limit,
        }
    }

    pub fn validate(&self, action_limit: f64) -> Result<()> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::Config(format!("heuristic gain {} must be positive", self.gain)));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(Error::Config(format!("heuristic decay {} not in [0, 1]", self.decay)));
        }
        if !(self.clip > 0.0 && self.clip <= action_limit) {
            return Err(Error::Config(format!(
                "heuristic clip {} must lie in (0, {action_limit}]",
                self.clip
            )));
        }
        Ok(())
    }

    /// Copy with the gain scheduled for `episode`.
    pub fn at_episode(&self, episode: usize) -> Self {
        Self {
            gain: heuristic_schedule(self, episode),
            ..*self
        }
    }
}

/// `gain · decay^episode`.
pub fn heuristic_schedule(cfg: &HeuristicConfig, episode: usize) -> f64 {
    if episode == 0 {
        cfg.gain
    } else {
        cfg.gain * cfg.decay.powi(episode.min(i32::MAX as usize) as i32)
    }
}

/// Euclidean distance between two cells in cell units.
pub fn grid_distance(a: GridCell, b: GridCell) -> f64 {
    let dr = a.row() as f64 - b.row() as f64;
    let dc = a.col() as f64 - b.col() as f64;
    dr.hypot(dc)
}

/// Workspace displacement between the centers of two cells.
pub fn cell_displacement(from: GridCell, to: GridCell, camera: &Camera) -> Point2 {
    let (ch, cw) = cell_size_px(camera);
    let (pitch_row, pitch_col) = camera.pixel_pitch();
    let d_row = to.row() as f64 - from.row() as f64;
    let d_col = to.col() as f64 - from.col() as f64;
    // rows grow downward, y grows upward
    Point2::new(d_col * cw * pitch_col, -d_row * ch * pitch_row)
}

/// Unclipped correction `gain · Jᵀ(arm) · d`.
pub fn raw_heuristic(
    robot_cell: GridCell,
    target_cell: GridCell,
    arm: &ArmState,
    gain: f64,
    camera: &Camera,
) -> Vec<f64> {
    if robot_cell == target_cell {
        return vec![0.0; arm.joints()];
    }
    let d = cell_displacement(robot_cell, target_cell, camera);
    let [jx, jy] = jacobian(arm);
    jx.iter()
        .zip(&jy)
        .map(|(ax, ay)| gain * (ax * d.x + ay * d.y))
        .collect()
}

/// Joint-space correction toward the demonstrated cell, clipped to `±cfg.clip`.
/// Exactly zero when the two cells agree.
pub fn heuristic_action(
    robot_cell: GridCell,
    target_cell: GridCell,
    arm: &ArmState,
    cfg: &HeuristicConfig,
    camera: &Camera,
) -> ActionVector {
    ActionVector(raw_heuristic(robot_cell, target_cell, arm, cfg.gain, camera)).clipped(cfg.clip)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(r: usize, c: usize) -> GridCell {
        GridCell::new(r, c).unwrap()
    }

    #[test]
    fn distances() {
        assert_eq!(grid_distance(cell(0, 3), cell(0, 3)), 0.0);
        assert_eq!(grid_distance(cell(0, 0), cell(3, 4)), 5.0);
        assert!((grid_distance(cell(0, 0), cell(4, 4)) - 32f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn grid_distance_is_a_metric() {
        let cells: Vec<_> = GridCell::all().collect();
        for &a in &cells {
            assert_eq!(grid_distance(a, a), 0.0);
            for &b in &cells {
                let ab = grid_distance(a, b);
                assert_eq!(ab, grid_distance(b, a));
                if a != b {
                    assert!(ab > 0.0);
                }
                for &c in &cells {
                    assert!(grid_distance(a, c) <= ab + grid_distance(b, c) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn schedule() {
        let cfg = HeuristicConfig {
            gain: 2.0,
            decay: 1.0,
            clip: 0.1,
        };
        assert_eq!(heuristic_schedule(&cfg, 10_000), 2.0);
        let cfg = HeuristicConfig { decay: 0.0, ..cfg };
        assert_eq!(heuristic_schedule(&cfg, 0), 2.0);
        assert_eq!(heuristic_schedule(&cfg, 1), 0.0);
        let cfg = HeuristicConfig { decay: 0.99, ..cfg };
        assert!((heuristic_schedule(&cfg, 100) / 2.0 - 0.99f64.powi(100)).abs() < 1e-15);
        assert!((heuristic_schedule(&cfg, 100) / 2.0 - 0.366).abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        let cfg = HeuristicConfig::for_action_limit(0.1);
        assert!(cfg.validate(0.1).is_ok());
        assert!(HeuristicConfig { clip: 0.2, ..cfg }.validate(0.1).is_err());
        assert!(HeuristicConfig { decay: 1.5, ..cfg }.validate(0.1).is_err());
    }

    #[test]
    fn trajectory_text_round_trip() {
        let t = Trajectory::new(vec![cell(0, 3), cell(4, 4), cell(2, 0)]).unwrap();
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0 3\n4 4\n2 0\n");
        assert_eq!(Trajectory::read_text(&buf[..]).unwrap(), t);
        assert!(Trajectory::read_text(&b"0 5\n"[..]).is_err());
        assert!(Trajectory::read_text(&b""[..]).is_err());
    }
}
