use rand::Rng;

use crate::diffcore::{
    dense_backward, dense_forward, relu_backward, relu_forward, tanh_backward, tanh_forward,
    ParamSet, Tensor,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Tanh,
}

/// Fully connected network with ReLU hidden layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: OutputActivation,
    pub params: ParamSet,
}

pub struct MlpCache {
    /// Input of every dense layer.
    inputs: Vec<Tensor>,
    /// Pre-activation of every hidden layer.
    pre: Vec<Tensor>,
    output: Tensor,
}

impl MlpCache {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

fn layer_name(i: usize) -> (String, String) {
    (format!("fc{}.w", i + 1), format!("fc{}.b", i + 1))
}

impl Mlp {
    /// `sizes` lists input, hidden and output widths; init is uniform in
    /// `±1/sqrt(fan_in)`, with the last layer optionally narrowed to
    /// `±final_init` when given.
    pub fn new(
        sizes: &[usize],
        output: OutputActivation,
        final_init: Option<f64>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("bad layer sizes {sizes:?}")));
        }
        let mut params = ParamSet::new();
        let last = sizes.len() - 2;
        for (i, pair) in sizes.windows(2).enumerate() {
            let (w, b) = layer_name(i);
            let bound = match final_init {
                Some(bound) if i == last => bound,
                _ => 1.0 / (pair[0] as f64).sqrt(),
            };
            params.insert_uniform_bound(w, &[pair[0], pair[1]], bound, rng);
            params.insert_uniform_bound(b, &[pair[1]], bound, rng);
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            output,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated")
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn forward(&self, input: &Tensor) -> Result<MlpCache> {
        let mut inputs = Vec::with_capacity(self.layers());
        let mut pre = Vec::with_capacity(self.layers() - 1);
        let mut x = input.clone();
        for i in 0..self.layers() {
            let (w, b) = layer_name(i);
            let z = dense_forward(&x, self.params.get(&w)?, self.params.get(&b)?)?;
            inputs.push(x);
            if i + 1 < self.layers() {
                x = relu_forward(&z);
                pre.push(z);
            } else {
                x = match self.output {
                    OutputActivation::Identity => z,
                    OutputActivation::Tanh => tanh_forward(&z),
                };
            }
        }
        Ok(MlpCache {
            inputs,
            pre,
            output: x,
        })
    }

    fn backprop(
        &self,
        cache: &MlpCache,
        grad_out: &Tensor,
        mut sink: Option<&mut Vec<(String, Tensor)>>,
    ) -> Result<Tensor> {
        let mut g = match self.output {
            OutputActivation::Identity => grad_out.clone(),
            OutputActivation::Tanh => tanh_backward(&cache.output, grad_out)?,
        };
        for i in (0..self.layers()).rev() {
            let (w, b) = layer_name(i);
            let grads = dense_backward(&cache.inputs[i], self.params.get(&w)?, &g)?;
            if let Some(sink) = sink.as_deref_mut() {
                sink.push((w, grads.weights));
                sink.push((b, grads.bias));
            }
            g = if i > 0 {
                relu_backward(&cache.pre[i - 1], &grads.input)?
            } else {
                grads.input
            };
        }
        Ok(g)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, cache: &MlpCache, grad_out: &Tensor) -> Result<Tensor> {
        let mut grads = Vec::with_capacity(2 * self.layers());
        let g = self.backprop(cache, grad_out, Some(&mut grads))?;
        for (name, t) in grads {
            self.params.accumulate_grad(&name, &t)?;
        }
        Ok(g)
    }

    /// Input gradient only; parameter gradients are left untouched.
    pub fn input_gradient(&self, cache: &MlpCache, grad_out: &Tensor) -> Result<Tensor> {
        self.backprop(cache, grad_out, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tanh_output_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(&[3, 8, 8, 2], OutputActivation::Tanh, None, &mut rng).unwrap();
        let x = Tensor::new(vec![4, 3], (0..12).map(|i| i as f64 * 10.0 - 50.0).collect()).unwrap();
        let out = net.forward(&x).unwrap();
        assert!(out.output().data().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn final_layer_narrow_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(&[3, 8, 2], OutputActivation::Tanh, Some(3e-3), &mut rng).unwrap();
        let w = net.params.get("fc2.w").unwrap();
        assert!(w.data().iter().all(|v| v.abs() <= 3e-3));
        assert!(w.data().iter().any(|v| v.abs() > 1e-4));
    }
}
