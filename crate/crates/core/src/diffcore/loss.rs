use super::tensor::Tensor;
use crate::error::{dim_err, Error, Result};

/// Row-wise softmax of a `[batch, classes]` tensor.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    logits.expect_rank(2, "softmax logits")?;
    let classes = logits.shape()[1];
    let mut out = Vec::with_capacity(logits.len());
    for b in 0..logits.shape()[0] {
        let row = logits.row(b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        out.extend(row.iter().map(|&z| (z - max).exp()));
        let total: f64 = out[start..].iter().sum();
        out[start..].iter_mut().for_each(|p| *p /= total);
    }
    Tensor::new(vec![logits.shape()[0], classes], out)
}

/// Mean negative log-likelihood of `targets` under the row softmax, with
/// its gradient `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<(f64, Tensor)> {
    logits.expect_rank(2, "cross-entropy logits")?;
    let (batch, classes) = (logits.shape()[0], logits.shape()[1]);
    if targets.len() != batch {
        return Err(dim_err!(
            "{} targets supplied for a batch of {batch} (axis 0)",
            targets.len()
        ));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::Index(format!("target class {bad} not in 0..{classes}")));
    }
    let mut grad = softmax(logits)?;
    let mut loss = 0.0;
    let scale = 1.0 / batch as f64;
    for (b, &t) in targets.iter().enumerate() {
        let row = logits.row(b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        loss += log_norm - row[t];
        let g = &mut grad.data_mut()[b * classes..(b + 1) * classes];
        g[t] -= 1.0;
        g.iter_mut().for_each(|v| *v *= scale);
    }
    Ok((loss * scale, grad))
}

/// Mean squared error over all elements with gradient `2 (pred - target) / N`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(dim_err!(
            "prediction shape {:?} differs from target shape {:?}",
            pred.shape(),
            target.shape()
        ));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, Tensor::new(pred.shape().to_vec(), grad)?))
}
