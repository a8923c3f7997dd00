use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kinematics::Point2;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DemoPattern {
    UpDown,
    LeftRight,
    Diagonal,
    ReachPoint,
}

impl DemoPattern {
    pub const ALL: [DemoPattern; 4] = [
        DemoPattern::UpDown,
        DemoPattern::LeftRight,
        DemoPattern::Diagonal,
        DemoPattern::ReachPoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DemoPattern::UpDown => "up_down",
            DemoPattern::LeftRight => "left_right",
            DemoPattern::Diagonal => "diagonal",
            DemoPattern::ReachPoint => "reach_point",
        }
    }
}

impl fmt::Display for DemoPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DemoPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DemoPattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown demo pattern {s:?}")))
    }
}

/// Shape parameters of scripted demonstrations.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoConfig {
    /// Upper bound on the distance between consecutive points.
    pub max_step: f64,
    /// Half-width of the seeded rigid offset applied to sweep patterns.
    pub jitter: f64,
    pub reach_start: Point2,
    pub reach_target: Point2,
    /// Fraction of the episode a reach spends travelling; it holds afterwards.
    pub reach_fraction: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            max_step: 0.05,
            jitter: 0.0,
            reach_start: Point2::new(0.8, 0.7),
            reach_target: Point2::new(0.3, 0.3),
            reach_fraction: 0.5,
        }
    }
}

impl DemoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_step > 0.0) {
            return Err(Error::Config("demo max_step must be positive".into()));
        }
        if !(0.0..=0.4).contains(&self.jitter) {
            return Err(Error::Config("demo jitter must lie in [0, 0.4]".into()));
        }
        if !(self.reach_fraction > 0.0 && self.reach_fraction <= 1.0) {
            return Err(Error::Config("reach_fraction must lie in (0, 1]".into()));
        }
        for p in [self.reach_start, self.reach_target] {
            if !super::Camera::in_workspace(p) {
                return Err(Error::Config(format!(
                    "reach endpoint ({}, {}) outside the workspace",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

/// Time-ordered workspace points standing in for a recorded hand.
#[derive(Clone, Debug, PartialEq)]
pub struct DemoTrajectory {
    pub pattern: DemoPattern,
    pub points: Vec<Point2>,
}

impl DemoTrajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn goal(&self) -> Point2 {
        *self.points.last().expect("demo is non-empty")
    }

    pub fn max_spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].distance(w[1]))
            .fold(0.0, f64::max)
    }

    /// `# demo T=<n> pattern=<name>` followed by one `x y` line per point.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# demo T={} pattern={}", self.len(), self.pattern)?;
        for p in &self.points {
            writeln!(w, "{:?} {:?}", p.x, p.y)?;
        }
        Ok(())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty demo file".into()))??;
        let mut len = None;
        let mut pattern = None;
        for tok in header
            .strip_prefix("# demo")
            .ok_or_else(|| Error::Format(format!("bad demo header {header:?}")))?
            .split_whitespace()
        {
            match tok.split_once('=') {
                Some(("T", v)) => {
                    len = v.parse::<usize>().ok();
                }
                Some(("pattern", v)) => {
                    pattern = Some(v.parse::<DemoPattern>().map_err(|e| Error::Format(e.to_string()))?)
                }
                _ => return Err(Error::Format(format!("bad demo header token {tok:?}"))),
            }
        }
        let (len, pattern) = len
            .zip(pattern)
            .ok_or_else(|| Error::Format("demo header needs T and pattern".into()))?;
        let mut points = Vec::with_capacity(len);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => points.push(Point2::new(x, y)),
                _ => return Err(Error::Format(format!("bad demo line {line:?}"))),
            }
        }
        if points.len() != len {
            return Err(Error::Format(format!(
                "demo header says T={len} but {} points follow",
                points.len()
            )));
        }
        Ok(Self { pattern, points })
    }
}

fn sweep_endpoints(pattern: DemoPattern, cfg: &DemoConfig) -> (Point2, Point2) {
    match pattern {
        DemoPattern::UpDown => (Point2::new(0.3, 0.9), Point2::new(0.3, 0.1)),
        DemoPattern::LeftRight => (Point2::new(0.1, 0.7), Point2::new(0.9, 0.7)),
        DemoPattern::Diagonal => (Point2::new(0.1, 0.9), Point2::new(0.9, 0.1)),
        DemoPattern::ReachPoint => (cfg.reach_start, cfg.reach_target),
    }
}

/// Straight-line demonstration at constant speed, never exceeding
/// `cfg.max_step` per step. Sweeps span the whole episode and may receive a
/// seeded rigid offset; reaches travel for `reach_fraction` of it and hold.
pub fn generate_demo(pattern: DemoPattern, len: usize, seed: u64, cfg: &DemoConfig) -> Result<DemoTrajectory> {
    if len < 2 {
        return Err(Error::Config(format!("demo length must be at least 2, got {len}")));
    }
    cfg.validate()?;
    let (mut start, mut end) = sweep_endpoints(pattern, cfg);
    if pattern != DemoPattern::ReachPoint && cfg.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = Point2::new(start.x.min(end.x), start.y.min(end.y));
        let hi = Point2::new(start.x.max(end.x), start.y.max(end.y));
        // keep the whole segment inside the workspace
        let ox = rng.random_range(-cfg.jitter..=cfg.jitter).clamp(-lo.x, 1.0 - hi.x);
        let oy = rng.random_range(-cfg.jitter..=cfg.jitter).clamp(-lo.y, 1.0 - hi.y);
        let off = Point2::new(ox, oy);
        start = start + off;
        end = end + off;
    }
    let travel_steps = match pattern {
        DemoPattern::ReachPoint => ((cfg.reach_fraction * (len - 1) as f64).round() as usize).max(1),
        _ => len - 1,
    };
    let length = start.distance(end);
    let spacing = (length / travel_steps as f64).min(cfg.max_step);
    let dir = if length > 0.0 {
        (end - start) * (1.0 / length)
    } else {
        Point2::default()
    };
    let points = (0..len)
        .map(|i| {
            let s = i as f64 * spacing;
            if s >= length {
                end
            } else {
                start + dir * s
            }
        })
        .collect();
    Ok(DemoTrajectory { pattern, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn up_down_and_left_right_shapes() {
        let cfg = DemoConfig::default();
        let d = generate_demo(DemoPattern::UpDown, 10, 0, &cfg).unwrap();
        assert!(d.points.iter().all(|p| p.x == d.points[0].x));
        assert!(d.points.windows(2).all(|w| w[1].y < w[0].y));

        let d = generate_demo(DemoPattern::LeftRight, 10, 0, &cfg).unwrap();
        assert!(d.points.iter().all(|p| p.y == d.points[0].y));
        assert!(d.points.windows(2).all(|w| w[1].x > w[0].x));
    }

    #[test]
    fn reach_ends_on_target() {
        let cfg = DemoConfig::default();
        let d = generate_demo(DemoPattern::ReachPoint, 50, 3, &cfg).unwrap();
        assert!(d.goal().distance(cfg.reach_target) < 1e-12);
        assert_eq!(d.points[0], cfg.reach_start);
    }

    #[test]
    fn spacing_bound_over_many_seeds() {
        let cfg = DemoConfig {
            jitter: 0.1,
            ..DemoConfig::default()
        };
        for seed in 0..100 {
            for pattern in DemoPattern::ALL {
                for len in [2, 5, 10, 50] {
                    let d = generate_demo(pattern, len, seed, &cfg).unwrap();
                    assert_eq!(d.len(), len);
                    assert!(d.max_spacing() <= cfg.max_step + 1e-12);
                    assert!(d.points.iter().all(|&p| super::super::Camera::in_workspace(p)));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = DemoConfig::default();
        assert!(generate_demo(DemoPattern::UpDown, 1, 0, &cfg).is_err());
        assert!(matches!("circle".parse::<DemoPattern>(), Err(Error::Config(_))));
    }

    #[test]
    fn text_round_trip() {
        let d = generate_demo(DemoPattern::Diagonal, 7, 0, &DemoConfig::default()).unwrap();
        let mut buf = Vec::new();
        d.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
        assert_eq!(DemoTrajectory::read_text(&buf[..]).unwrap(), d);
    }
}
