use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Point or displacement in workspace units (y up).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Joint angles of a planar revolute chain plus its fixed geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmState {
    pub joint_angles: Vec<f64>,
    pub link_lengths: Vec<f64>,
    pub base: Point2,
}

impl ArmState {
    pub fn new(joint_angles: Vec<f64>, link_lengths: Vec<f64>, base: Point2) -> Result<Self> {
        if joint_angles.len() != link_lengths.len() || joint_angles.is_empty() {
            return Err(Error::Config(format!(
                "{} joint angles for {} links",
                joint_angles.len(),
                link_lengths.len()
            )));
        }
        if link_lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Config(format!(
                "link lengths must be positive, got {link_lengths:?}"
            )));
        }
        if joint_angles
            .iter()
            .any(|a| !a.is_finite() || a.abs() > std::f64::consts::PI)
        {
            return Err(Error::Config(format!(
                "joint angles must lie in [-pi, pi], got {joint_angles:?}"
            )));
        }
        Ok(Self {
            joint_angles,
            link_lengths,
            base,
        })
    }

    pub fn joints(&self) -> usize {
        self.joint_angles.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Base followed by every joint position; the last entry is the end effector.
    pub fn chain_points(&self) -> Vec<Point2> {
        let mut pts = Vec::with_capacity(self.joints() + 1);
        let mut p = self.base;
        let mut heading = 0.0;
        pts.push(p);
        for (&a, &l) in self.joint_angles.iter().zip(&self.link_lengths) {
            heading += a;
            p = p + Point2::new(heading.cos(), heading.sin()) * l;
            pts.push(p);
        }
        pts
    }
}

pub fn forward_kinematics(state: &ArmState) -> Point2 {
    *state.chain_points().last().expect("chain has a base")
}

/// Analytic `2 × J` Jacobian of the end effector, rows `[∂x/∂θ, ∂y/∂θ]`.
pub fn jacobian(state: &ArmState) -> [Vec<f64>; 2] {
    let pts = state.chain_points();
    let ee = pts[pts.len() - 1];
    let mut dx = Vec::with_capacity(state.joints());
    let mut dy = Vec::with_capacity(state.joints());
    for joint in &pts[..state.joints()] {
        let r = ee - *joint;
        dx.push(-r.y);
        dy.push(r.x);
    }
    [dx, dy]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn arm(angles: Vec<f64>) -> ArmState {
        ArmState::new(angles, vec![1.0, 1.0, 1.0], Point2::default()).unwrap()
    }

    #[test]
    fn straight_arms() {
        let ee = forward_kinematics(&arm(vec![0.0; 3]));
        assert!((ee.x - 3.0).abs() < 1e-12 && ee.y.abs() < 1e-12);
        let ee = forward_kinematics(&arm(vec![FRAC_PI_2, 0.0, 0.0]));
        assert!(ee.x.abs() < 1e-12 && (ee.y - 3.0).abs() < 1e-12);
    }

    #[test]
    fn straight_arm_jacobian() {
        let [dx, dy] = jacobian(&arm(vec![0.0; 3]));
        for v in dx {
            assert!(v.abs() < 1e-12);
        }
        for (v, want) in dy.iter().zip([3.0, 2.0, 1.0]) {
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(ArmState::new(vec![0.0], vec![1.0, 1.0], Point2::default()).is_err());
        assert!(ArmState::new(vec![0.0], vec![-1.0], Point2::default()).is_err());
        assert!(ArmState::new(vec![4.0], vec![1.0], Point2::default()).is_err());
    }
}
