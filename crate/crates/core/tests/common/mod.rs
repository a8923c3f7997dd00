#![allow(dead_code)]

use hddpg_core::diffcore::gradcheck::{max_relative_error, numerical_gradient, DEFAULT_EPS};
use hddpg_core::diffcore::{ParamSet, Tensor};
use rand::Rng;

/// Gradients smaller than this are compared in absolute terms.
pub const FLOOR: f64 = 1e-6;
pub const TOL: f64 = 1e-4;

pub fn rand_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Worst relative error between `analytic` and central differences of `f`
/// around the values of `x`.
pub fn check_tensor(x: &Tensor, analytic: &Tensor, f: impl Fn(&Tensor) -> f64) -> f64 {
    let shape = x.shape().to_vec();
    let numeric = numerical_gradient(x.data(), DEFAULT_EPS, |v| {
        f(&Tensor::new(shape.clone(), v.to_vec()).unwrap())
    });
    max_relative_error(analytic.data(), &numeric, FLOOR)
}

/// Worst relative error over every scalar of every parameter in `set`,
/// against the gradients stored in `set`.
pub fn check_params(set: &ParamSet, f: impl Fn(&ParamSet) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    let names: Vec<String> = set.names().map(str::to_string).collect();
    for name in names {
        let base = set.get(&name).unwrap().clone();
        let numeric = numerical_gradient(base.data(), DEFAULT_EPS, |v| {
            let mut probe = set.clone();
            probe
                .get_mut(&name)
                .unwrap()
                .data_mut()
                .copy_from_slice(v);
            f(&probe)
        });
        let err = max_relative_error(set.grad(&name).unwrap().data(), &numeric, FLOOR);
        worst = worst.max(err);
    }
    worst
}

/// `Σ w_i · out_i`, turning a tensor output into a scalar objective.
pub fn project(out: &Tensor, w: &Tensor) -> f64 {
    out.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}
