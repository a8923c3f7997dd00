//! Photometric augmentation. Geometry is never touched: no translation,
//! rotation or flipping, so the marker's cell is preserved.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::armsim::Frame;
use crate::error::{Error, Result};

/// Enabled operations, applied in field order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AugmentConfig {
    /// Additive brightness shift δ in `[0, 0.5]`.
    pub brightness: Option<f64>,
    /// Contrast factor c in `(0, 1]` pulling pixels toward the mean.
    pub contrast: Option<f64>,
    /// Standardize then rescale the result into `[0, 1]`.
    pub normalize_std: bool,
    /// Fraction ρ in `[0, 0.5]` of pixels replaced by salt or pepper.
    pub salt_pepper: Option<f64>,
}

pub const DEFAULT_BRIGHTNESS: f64 = 0.1;
pub const DEFAULT_CONTRAST: f64 = 0.8;
pub const DEFAULT_SALT_PEPPER: f64 = 0.02;

impl AugmentConfig {
    pub fn none() -> Self {
        Self::default()
    }

    /// Every operation on, at the default strengths.
    pub fn all_defaults() -> Self {
        Self {
            brightness: Some(DEFAULT_BRIGHTNESS),
            contrast: Some(DEFAULT_CONTRAST),
            normalize_std: true,
            salt_pepper: Some(DEFAULT_SALT_PEPPER),
        }
    }

    /// Each default operation independently switched on with probability 1/2.
    pub fn random_subset(rng: &mut impl Rng) -> Self {
        Self {
            brightness: rng.random_bool(0.5).then_some(DEFAULT_BRIGHTNESS),
            contrast: rng.random_bool(0.5).then_some(DEFAULT_CONTRAST),
            normalize_std: rng.random_bool(0.5),
            salt_pepper: rng.random_bool(0.5).then_some(DEFAULT_SALT_PEPPER),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.brightness {
            if !(0.0..=0.5).contains(&d) {
                return Err(Error::Config(format!("brightness shift {d} not in [0, 0.5]")));
            }
        }
        if let Some(c) = self.contrast {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::Config(format!("contrast factor {c} not in (0, 1]")));
            }
        }
        if let Some(r) = self.salt_pepper {
            if !(0.0..=0.5).contains(&r) {
                return Err(Error::Config(format!("salt-and-pepper fraction {r} not in [0, 0.5]")));
            }
        }
        Ok(())
    }
}

fn mean(px: &[f64]) -> f64 {
    px.iter().sum::<f64>() / px.len() as f64
}

/// Returns an augmented copy of `frame`; `seed` drives the noise placement.
pub fn augment(frame: &Frame, cfg: &AugmentConfig, seed: u64) -> Result<Frame> {
    cfg.validate()?;
    let mut out = frame.clone();
    let px = out.pixels_mut();
    if let Some(delta) = cfg.brightness {
        px.iter_mut().for_each(|p| *p = (*p + delta).min(1.0));
    }
    if let Some(c) = cfg.contrast {
        let m = mean(px);
        px.iter_mut().for_each(|p| *p = (m + c * (*p - m)).clamp(0.0, 1.0));
    }
    if cfg.normalize_std {
        let m = mean(px);
        let std = (px.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / px.len() as f64).sqrt();
        if std > 1e-12 {
            px.iter_mut().for_each(|p| *p = (*p - m) / std);
            let lo = px.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            px.iter_mut().for_each(|p| *p = ((*p - lo) / (hi - lo)).clamp(0.0, 1.0));
        }
    }
    if let Some(rho) = cfg.salt_pepper {
        let count = (rho * px.len() as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (k, i) in sample(&mut rng, px.len(), count).into_iter().enumerate() {
            px[i] = if k < count / 2 { 0.0 } else { 1.0 };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(v: f64) -> Frame {
        Frame::from_pixels(64, 64, vec![v; 64 * 64]).unwrap()
    }

    #[test]
    fn disabled_is_identity() {
        let f = Frame::from_pixels(2, 2, vec![0.1, 0.5, 0.9, 1.0]).unwrap();
        assert_eq!(augment(&f, &AugmentConfig::none(), 7).unwrap(), f);
    }

    #[test]
    fn salt_and_pepper_counts_are_exact() {
        let f = gray(0.5);
        let cfg = AugmentConfig {
            salt_pepper: Some(0.02),
            ..AugmentConfig::none()
        };
        let g = augment(&f, &cfg, 11).unwrap();
        let changed: Vec<f64> = g
            .pixels()
            .iter()
            .zip(f.pixels())
            .filter(|(a, b)| a != b)
            .map(|(a, _)| *a)
            .collect();
        assert_eq!(changed.len(), 82);
        assert_eq!(changed.iter().filter(|&&v| v == 0.0).count(), 41);
        assert_eq!(changed.iter().filter(|&&v| v == 1.0).count(), 41);
    }

    #[test]
    fn outputs_stay_in_unit_range() {
        let px: Vec<f64> = (0..64 * 64).map(|i| (i % 17) as f64 / 16.0).collect();
        let f = Frame::from_pixels(64, 64, px).unwrap();
        let g = augment(&f, &AugmentConfig::all_defaults(), 3).unwrap();
        assert!(g.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn contrast_and_brightness() {
        let f = Frame::from_pixels(1, 2, vec![0.2, 0.6]).unwrap();
        let cfg = AugmentConfig {
            contrast: Some(0.5),
            ..AugmentConfig::none()
        };
        let g = augment(&f, &cfg, 0).unwrap();
        assert!((g.pixels()[0] - 0.3).abs() < 1e-12 && (g.pixels()[1] - 0.5).abs() < 1e-12);
        let cfg = AugmentConfig {
            brightness: Some(0.5),
            ..AugmentConfig::none()
        };
        assert_eq!(augment(&f, &cfg, 0).unwrap().pixels(), &[0.7, 1.0]);
    }

    #[test]
    fn invalid_strengths_rejected() {
        for cfg in [
            AugmentConfig { brightness: Some(0.9), ..AugmentConfig::none() },
            AugmentConfig { contrast: Some(1.5), ..AugmentConfig::none() },
            AugmentConfig { contrast: Some(0.0), ..AugmentConfig::none() },
            AugmentConfig { salt_pepper: Some(-0.1), ..AugmentConfig::none() },
        ] {
            assert!(matches!(augment(&gray(0.5), &cfg, 0), Err(Error::Config(_))));
        }
    }
}
