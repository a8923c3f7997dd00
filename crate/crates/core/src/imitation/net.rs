use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::{decode_onehot, GridCell, NUM_CELLS};
use crate::armsim::Frame;
use crate::diffcore::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, maxpool2d_backward,
    maxpool2d_forward, relu_backward, relu_forward, ParamSet, PoolIndex, Tensor,
};
use crate::error::{Error, Result};

/// Layer sizes: three valid convolutions with 2×2 max pooling after the first
/// two, then two dense layers ending in 25 scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImitationArch {
    pub image_size: usize,
    pub conv1: (usize, usize),
    pub conv2: (usize, usize),
    pub conv3: (usize, usize),
    pub hidden: usize,
}

impl Default for ImitationArch {
    fn default() -> Self {
        Self::for_image(64)
    }
}

impl ImitationArch {
    pub fn for_image(image_size: usize) -> Self {
        Self {
            image_size,
            conv1: (8, 5),
            conv2: (16, 3),
            conv3: (16, 3),
            hidden: 128,
        }
    }

    /// Spatial side after every stage, or an error if the image is too small.
    fn feature_side(&self) -> Result<usize> {
        let mut s = self.image_size;
        for (stage, (_, k)) in [self.conv1, self.conv2, self.conv3].into_iter().enumerate() {
            if s < k {
                return Err(Error::Config(format!(
                    "image size {} too small for the convolution stack",
                    self.image_size
                )));
            }
            s = s - k + 1;
            if stage < 2 {
                if s < 2 {
                    return Err(Error::Config(format!(
                        "image size {} too small for pooling",
                        self.image_size
                    )));
                }
                s /= 2;
            }
        }
        Ok(s)
    }

    pub fn flat_features(&self) -> Result<usize> {
        let s = self.feature_side()?;
        Ok(self.conv3.0 * s * s)
    }
}

/// Grid classifier mapping a frame to 25 cell scores.
#[derive(Clone, Debug)]
pub struct ImitationNet {
    pub arch: ImitationArch,
    pub params: ParamSet,
}

/// Activations kept for the backward pass.
pub struct ImitationCache {
    input: Tensor,
    conv1: Tensor,
    pool1_idx: PoolIndex,
    pool1: Tensor,
    conv2: Tensor,
    pool2_idx: PoolIndex,
    pool2: Tensor,
    conv3: Tensor,
    flat: Tensor,
    fc1: Tensor,
    hidden: Tensor,
}

const CONVS: [&str; 3] = ["conv1", "conv2", "conv3"];

impl ImitationNet {
    pub fn new(arch: ImitationArch, rng: &mut impl Rng) -> Result<Self> {
        let flat = arch.flat_features()?;
        let mut params = ParamSet::new();
        let mut ch_in = 1;
        for (name, (ch, k)) in CONVS.iter().zip([arch.conv1, arch.conv2, arch.conv3]) {
            let fan_in = ch_in * k * k;
            params.insert_uniform(format!("{name}.w"), &[ch, ch_in, k, k], fan_in, rng);
            params.insert_uniform(format!("{name}.b"), &[ch], fan_in, rng);
            ch_in = ch;
        }
        params.insert_uniform("fc1.w", &[flat, arch.hidden], flat, rng);
        params.insert_uniform("fc1.b", &[arch.hidden], flat, rng);
        params.insert_uniform("fc2.w", &[arch.hidden, NUM_CELLS], arch.hidden, rng);
        params.insert_uniform("fc2.b", &[NUM_CELLS], arch.hidden, rng);
        Ok(Self { arch, params })
    }

    /// Stacks frames into a `[batch, 1, H, W]` ink-density tensor (`1 − intensity`).
    pub fn frames_to_input(&self, frames: &[&Frame]) -> Result<Tensor> {
        let s = self.arch.image_size;
        let mut data = Vec::with_capacity(frames.len() * s * s);
        for f in frames {
            if f.height() != s || f.width() != s {
                return Err(Error::Dimension(format!(
                    "frame is {}x{}, network expects {s}x{s}",
                    f.height(),
                    f.width()
                )));
            }
            data.extend(f.pixels().iter().map(|p| 1.0 - p));
        }
        Tensor::new(vec![frames.len(), 1, s, s], data)
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ImitationCache)> {
        let p = &self.params;
        let conv1 = conv2d_forward(input, p.get("conv1.w")?, p.get("conv1.b")?, 1, 0)?;
        let (pool1, pool1_idx) = maxpool2d_forward(&relu_forward(&conv1), 2, 2)?;
        let conv2 = conv2d_forward(&pool1, p.get("conv2.w")?, p.get("conv2.b")?, 1, 0)?;
        let (pool2, pool2_idx) = maxpool2d_forward(&relu_forward(&conv2), 2, 2)?;
        let conv3 = conv2d_forward(&pool2, p.get("conv3.w")?, p.get("conv3.b")?, 1, 0)?;
        let batch = input.shape()[0];
        let flat_len = conv3.len() / batch;
        let flat = relu_forward(&conv3).reshape(&[batch, flat_len])?;
        let fc1 = dense_forward(&flat, p.get("fc1.w")?, p.get("fc1.b")?)?;
        let hidden = relu_forward(&fc1);
        let logits = dense_forward(&hidden, p.get("fc2.w")?, p.get("fc2.b")?)?;
        Ok((
            logits,
            ImitationCache {
                input: input.clone(),
                conv1,
                pool1_idx,
                pool1,
                conv2,
                pool2_idx,
                pool2,
                conv3,
                flat,
                fc1,
                hidden,
            },
        ))
    }

    /// Accumulates parameter gradients for `grad_logits` and returns the input gradient.
    pub fn backward(&mut self, cache: &ImitationCache, grad_logits: &Tensor) -> Result<Tensor> {
        let p = &mut self.params;
        let g = dense_backward(&cache.hidden, p.get("fc2.w")?, grad_logits)?;
        p.accumulate_grad("fc2.w", &g.weights)?;
        p.accumulate_grad("fc2.b", &g.bias)?;
        let g_fc1 = relu_backward(&cache.fc1, &g.input)?;
        let g = dense_backward(&cache.flat, p.get("fc1.w")?, &g_fc1)?;
        p.accumulate_grad("fc1.w", &g.weights)?;
        p.accumulate_grad("fc1.b", &g.bias)?;
        let g_conv3 = relu_backward(&cache.conv3, &g.input.reshape(cache.conv3.shape())?)?;

        let g = conv2d_backward(&cache.pool2, p.get("conv3.w")?, &g_conv3, 1, 0)?;
        p.accumulate_grad("conv3.w", &g.kernels)?;
        p.accumulate_grad("conv3.b", &g.bias)?;
        let g_conv2 = relu_backward(&cache.conv2, &maxpool2d_backward(&cache.pool2_idx, &g.input)?)?;

        let g = conv2d_backward(&cache.pool1, p.get("conv2.w")?, &g_conv2, 1, 0)?;
        p.accumulate_grad("conv2.w", &g.kernels)?;
        p.accumulate_grad("conv2.b", &g.bias)?;
        let g_conv1 = relu_backward(&cache.conv1, &maxpool2d_backward(&cache.pool1_idx, &g.input)?)?;

        let g = conv2d_backward(&cache.input, p.get("conv1.w")?, &g_conv1, 1, 0)?;
        p.accumulate_grad("conv1.w", &g.kernels)?;
        p.accumulate_grad("conv1.b", &g.bias)?;
        Ok(g.input)
    }

    pub fn logits(&self, frame: &Frame) -> Result<Vec<f64>> {
        let input = self.frames_to_input(&[frame])?;
        Ok(self.forward(&input)?.0.into_data())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        self.params.write_to(w)
    }

    pub fn read_from(arch: ImitationArch, r: &mut impl Read) -> Result<Self> {
        let loaded = ParamSet::read_from(r)?;
        let mut net = Self::new(arch, &mut ChaCha8Rng::seed_from_u64(0))?;
        net.params.load_values(&loaded)?;
        Ok(net)
    }
}

/// Forward pass plus argmax decode.
pub fn estimate(net: &ImitationNet, frame: &Frame) -> Result<GridCell> {
    decode_onehot(&net.logits(frame)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let arch = ImitationArch::default();
        // 64 → 60 → 30 → 28 → 14 → 12
        assert_eq!(arch.flat_features().unwrap(), 16 * 12 * 12);
        let net = ImitationNet::new(arch, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let names: Vec<_> = net.params.names().collect();
        assert_eq!(
            names,
            ["conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w", "conv3.b", "fc1.w", "fc1.b", "fc2.w", "fc2.b"]
        );
        assert_eq!(net.params.get("fc2.b").unwrap().len(), 25);
        assert!(ImitationArch::for_image(8).flat_features().is_err());
    }
}
