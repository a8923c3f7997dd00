//! Forward and backward passes for the fixed set of layers the two networks use.
//!
//! Every `*_forward` is paired with a `*_backward` that takes the forward
//! inputs (or the recorded pooling indices) plus the upstream gradient and
//! returns gradients for each input. Composition happens in the network
//! modules, which keep their own activation caches.

use super::tensor::Tensor;
use crate::error::{dim_err, Result};

/// `c = op(a) · op(b)` (+ `c` when `accumulate`), row-major, `a`: m×k, `b`: k×n.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_transposed: bool,
    b: &[f64],
    b_transposed: bool,
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if a_transposed { (1, m) } else { (k, 1) };
    let (rsb, csb) = if b_transposed { (1, k) } else { (n, 1) };
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the slice lengths above cover every index addressed by the
    // given dimensions and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (batch, in_dim, out_dim) = dense_dims(input, weights, bias)?;
    let mut out = Vec::with_capacity(batch * out_dim);
    for _ in 0..batch {
        out.extend_from_slice(bias.data());
    }
    gemm(
        batch,
        in_dim,
        out_dim,
        input.data(),
        false,
        weights.data(),
        false,
        &mut out,
        true,
    );
    Tensor::new(vec![batch, out_dim], out)
}

pub fn dense_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
    let batch = input.shape()[0];
    let in_dim = weights.shape()[0];
    let out_dim = weights.shape()[1];
    grad_out.expect_shape(&[batch, out_dim])?;

    let mut gw = vec![0.0; in_dim * out_dim];
    gemm(
        in_dim,
        batch,
        out_dim,
        input.data(),
        true,
        grad_out.data(),
        false,
        &mut gw,
        false,
    );
    let mut gb = vec![0.0; out_dim];
    for b in 0..batch {
        for (acc, g) in gb.iter_mut().zip(grad_out.row(b)) {
            *acc += g;
        }
    }
    let mut gi = vec![0.0; batch * in_dim];
    gemm(
        batch,
        out_dim,
        in_dim,
        grad_out.data(),
        false,
        weights.data(),
        true,
        &mut gi,
        false,
    );
    Ok(DenseGrads {
        input: Tensor::new(vec![batch, in_dim], gi)?,
        weights: Tensor::new(vec![in_dim, out_dim], gw)?,
        bias: Tensor::vector(gb),
    })
}

fn dense_dims(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize)> {
    input.expect_rank(2, "dense input")?;
    weights.expect_rank(2, "dense weights")?;
    bias.expect_rank(1, "dense bias")?;
    let (batch, in_dim) = (input.shape()[0], input.shape()[1]);
    let (w_in, out_dim) = (weights.shape()[0], weights.shape()[1]);
    if w_in != in_dim {
        return Err(dim_err!(
            "dense input axis 1 has {in_dim} features but weights axis 0 has {w_in}"
        ));
    }
    if bias.len() != out_dim {
        return Err(dim_err!(
            "dense bias axis 0 has {} entries but weights axis 1 has {out_dim}",
            bias.len()
        ));
    }
    Ok((batch, in_dim, out_dim))
}

/// Geometry shared by the convolution forward and backward passes.
#[derive(Clone, Copy, Debug)]
struct ConvGeom {
    batch: usize,
    ch_in: usize,
    h: usize,
    w: usize,
    ch_out: usize,
    k: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeom {
    fn new(input: &Tensor, kernels: &Tensor, stride: usize, pad: usize) -> Result<Self> {
        input.expect_rank(4, "conv input")?;
        kernels.expect_rank(4, "conv kernels")?;
        let s = input.shape();
        let ks = kernels.shape();
        if ks[1] != s[1] {
            return Err(dim_err!(
                "conv input axis 1 has {} channels but kernels axis 1 has {}",
                s[1],
                ks[1]
            ));
        }
        if ks[2] != ks[3] {
            return Err(dim_err!("conv kernels must be square, got {}x{}", ks[2], ks[3]));
        }
        if stride == 0 {
            return Err(dim_err!("conv stride must be positive"));
        }
        let k = ks[2];
        let (ph, pw) = (s[2] + 2 * pad, s[3] + 2 * pad);
        if ph < k || pw < k {
            return Err(dim_err!(
                "kernel {k}x{k} exceeds padded input {ph}x{pw} (axes 2, 3)"
            ));
        }
        Ok(Self {
            batch: s[0],
            ch_in: s[1],
            h: s[2],
            w: s[3],
            ch_out: ks[0],
            k,
            stride,
            pad,
            out_h: (ph - k) / stride + 1,
            out_w: (pw - k) / stride + 1,
        })
    }

    fn patch_len(&self) -> usize {
        self.ch_in * self.k * self.k
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Unfolds one sample into a `patch_len × positions` matrix.
    fn im2col(&self, sample: &[f64], cols: &mut [f64]) {
        let p = self.positions();
        for c in 0..self.ch_in {
            let plane = &sample[c * self.h * self.w..(c + 1) * self.h * self.w];
            for ki in 0..self.k {
                for kj in 0..self.k {
                    let row = (c * self.k + ki) * self.k + kj;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ki) as isize - self.pad as isize;
                        let line = &mut dst[oy * self.out_w..(oy + 1) * self.out_w];
                        if iy < 0 || iy >= self.h as isize {
                            line.fill(0.0);
                            continue;
                        }
                        let src = &plane[iy as usize * self.w..(iy as usize + 1) * self.w];
                        for (ox, v) in line.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kj) as isize - self.pad as isize;
                            *v = if ix < 0 || ix >= self.w as isize {
                                0.0
                            } else {
                                src[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of `im2col`: scatters-and-adds columns back into a sample.
    fn col2im(&self, cols: &[f64], sample: &mut [f64]) {
        let p = self.positions();
        for c in 0..self.ch_in {
            let plane = &mut sample[c * self.h * self.w..(c + 1) * self.h * self.w];
            for ki in 0..self.k {
                for kj in 0..self.k {
                    let row = (c * self.k + ki) * self.k + kj;
                    let src = &cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ki) as isize - self.pad as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * self.w..(iy as usize + 1) * self.w];
                        for ox in 0..self.out_w {
                            let ix = (ox * self.stride + kj) as isize - self.pad as isize;
                            if ix >= 0 && ix < self.w as isize {
                                dst[ix as usize] += src[oy * self.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2-D cross-correlation over `[batch, ch_in, H, W]` with square kernels
/// `[ch_out, ch_in, k, k]`.
pub fn conv2d_forward(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<Tensor> {
    let g = ConvGeom::new(input, kernels, stride, padding)?;
    if bias.len() != g.ch_out {
        return Err(dim_err!(
            "conv bias has {} entries but kernels axis 0 has {}",
            bias.len(),
            g.ch_out
        ));
    }
    let p = g.positions();
    let in_len = g.ch_in * g.h * g.w;
    let out_len = g.ch_out * p;
    let mut cols = vec![0.0; g.patch_len() * p];
    let mut out = vec![0.0; g.batch * out_len];
    for n in 0..g.batch {
        g.im2col(&input.data()[n * in_len..(n + 1) * in_len], &mut cols);
        let dst = &mut out[n * out_len..(n + 1) * out_len];
        for (co, plane) in dst.chunks_mut(p).enumerate() {
            plane.fill(bias.data()[co]);
        }
        gemm(
            g.ch_out,
            g.patch_len(),
            p,
            kernels.data(),
            false,
            &cols,
            false,
            dst,
            true,
        );
    }
    Tensor::new(vec![g.batch, g.ch_out, g.out_h, g.out_w], out)
}

pub struct ConvGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

pub fn conv2d_backward(
    input: &Tensor,
    kernels: &Tensor,
    grad_out: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<ConvGrads> {
    let g = ConvGeom::new(input, kernels, stride, padding)?;
    grad_out.expect_shape(&[g.batch, g.ch_out, g.out_h, g.out_w])?;
    let p = g.positions();
    let in_len = g.ch_in * g.h * g.w;
    let out_len = g.ch_out * p;
    let mut cols = vec![0.0; g.patch_len() * p];
    let mut grad_cols = vec![0.0; g.patch_len() * p];
    let mut gk = vec![0.0; kernels.len()];
    let mut gb = vec![0.0; g.ch_out];
    let mut gi = vec![0.0; input.len()];
    for n in 0..g.batch {
        let go = &grad_out.data()[n * out_len..(n + 1) * out_len];
        g.im2col(&input.data()[n * in_len..(n + 1) * in_len], &mut cols);
        gemm(
            g.ch_out,
            p,
            g.patch_len(),
            go,
            false,
            &cols,
            true,
            &mut gk,
            true,
        );
        for (co, plane) in go.chunks(p).enumerate() {
            gb[co] += plane.iter().sum::<f64>();
        }
        gemm(
            g.patch_len(),
            g.ch_out,
            p,
            kernels.data(),
            true,
            go,
            false,
            &mut grad_cols,
            false,
        );
        g.col2im(&grad_cols, &mut gi[n * in_len..(n + 1) * in_len]);
    }
    Ok(ConvGrads {
        input: Tensor::new(input.shape().to_vec(), gi)?,
        kernels: Tensor::new(kernels.shape().to_vec(), gk)?,
        bias: Tensor::vector(gb),
    })
}

/// Flat input index of the selected element for every pooled output.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolIndex {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolIndex {
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

/// Max pooling; ties resolve to the first maximum in row-major window order.
pub fn maxpool2d_forward(input: &Tensor, window: usize, stride: usize) -> Result<(Tensor, PoolIndex)> {
    input.expect_rank(4, "maxpool input")?;
    let s = input.shape();
    let (batch, ch, h, w) = (s[0], s[1], s[2], s[3]);
    if window == 0 || stride == 0 {
        return Err(dim_err!("maxpool window and stride must be positive"));
    }
    if h < window || w < window {
        return Err(dim_err!(
            "maxpool window {window} exceeds spatial dims {h}x{w} (axes 2, 3)"
        ));
    }
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let data = input.data();
    let mut out = Vec::with_capacity(batch * ch * oh * ow);
    let mut argmax = Vec::with_capacity(batch * ch * oh * ow);
    for plane in 0..batch * ch {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * stride * w + ox * stride;
                for dy in 0..window {
                    for dx in 0..window {
                        let idx = base + (oy * stride + dy) * w + ox * stride + dx;
                        if data[idx] > data[best] {
                            best = idx;
                        }
                    }
                }
                out.push(data[best]);
                argmax.push(best);
            }
        }
    }
    Ok((
        Tensor::new(vec![batch, ch, oh, ow], out)?,
        PoolIndex {
            input_shape: s.to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool2d_backward(index: &PoolIndex, grad_out: &Tensor) -> Result<Tensor> {
    if grad_out.len() != index.argmax.len() {
        return Err(dim_err!(
            "maxpool gradient has {} elements, index records {}",
            grad_out.len(),
            index.argmax.len()
        ));
    }
    let mut gi = Tensor::zeros(&index.input_shape);
    let gd = gi.data_mut();
    for (&i, &g) in index.argmax.iter().zip(grad_out.data()) {
        gd[i] += g;
    }
    Ok(gi)
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|x| x.max(0.0))
}

/// Gradient passes where the forward input was strictly positive.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    grad_out.expect_shape(input.shape())?;
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

pub fn tanh_forward(input: &Tensor) -> Tensor {
    input.map(f64::tanh)
}

/// Takes the forward *output* `y = tanh(x)`.
pub fn tanh_backward(output: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    grad_out.expect_shape(output.shape())?;
    let data = output
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&y, &g)| g * (1.0 - y * y))
        .collect();
    Tensor::new(output.shape().to_vec(), data)
}
