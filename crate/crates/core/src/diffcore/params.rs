use std::io::{Read, Write};

use indexmap::IndexMap;
use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Named parameters of one network with a gradient slot for each.
///
/// Insertion order is the iteration order and the on-disk order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    entries: IndexMap<String, Tensor>,
    grads: IndexMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) a parameter and resets its gradient to zero.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        let name = name.into();
        self.grads
            .insert(name.clone(), Tensor::zeros(value.shape()));
        self.entries.insert(name, value);
    }

    /// Uniform init in `±1/sqrt(fan_in)`.
    pub fn insert_uniform(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        rng: &mut impl Rng,
    ) {
        self.insert_uniform_bound(name, shape, 1.0 / (fan_in as f64).sqrt(), rng);
    }

    /// Uniform init in `±bound`.
    pub fn insert_uniform_bound(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        bound: f64,
        rng: &mut impl Rng,
    ) {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        self.insert(name, Tensor::new(shape.to_vec(), data).expect("shape product"));
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::Invariant(format!("no parameter named {name:?}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| Error::Invariant(format!("no parameter named {name:?}")))
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor> {
        self.grads
            .get(name)
            .ok_or_else(|| Error::Invariant(format!("no gradient for parameter {name:?}")))
    }

    /// Adds `g` into the stored gradient of `name`.
    pub fn accumulate_grad(&mut self, name: &str, g: &Tensor) -> Result<()> {
        let slot = self
            .grads
            .get_mut(name)
            .ok_or_else(|| Error::Invariant(format!("no gradient for parameter {name:?}")))?;
        slot.expect_shape(g.shape())?;
        for (a, b) in slot.data_mut().iter_mut().zip(g.data()) {
            *a += b;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for g in self.grads.values_mut() {
            g.data_mut().fill(0.0);
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(Tensor::len).sum()
    }

    /// Largest absolute difference over all parameters of two sets with the same layout.
    pub fn max_abs_diff(&self, other: &ParamSet) -> Result<f64> {
        self.check_same_layout(other)?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.entries.values().zip(other.entries.values()) {
            worst = worst.max(a.max_abs_diff(b)?);
        }
        Ok(worst)
    }

    pub(crate) fn check_same_layout(&self, other: &ParamSet) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::Invariant(format!(
                "parameter sets hold {} and {} tensors",
                self.entries.len(),
                other.entries.len()
            )));
        }
        for ((ka, a), (kb, b)) in self.entries.iter().zip(&other.entries) {
            if ka != kb || a.shape() != b.shape() {
                return Err(Error::Invariant(format!(
                    "parameter {ka:?} {:?} does not line up with {kb:?} {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(())
    }

    /// Copies values from `other`, which must share the layout.
    pub fn copy_from(&mut self, other: &ParamSet) -> Result<()> {
        soft_update(self, other, 1.0)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let items: Vec<_> = self.iter().collect();
        write_container(w, &items)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut set = Self::new();
        for (name, t) in read_container(r)? {
            set.insert(name, t);
        }
        Ok(set)
    }

    /// Overwrites values from a loaded set after checking it matches this layout.
    pub fn load_values(&mut self, loaded: &ParamSet) -> Result<()> {
        self.check_same_layout(loaded)
            .map_err(|e| Error::Format(format!("incompatible weights: {e}")))?;
        self.copy_from(loaded)
    }
}

/// `target ← τ·online + (1−τ)·target` for every tensor.
pub fn soft_update(target: &mut ParamSet, online: &ParamSet, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("soft-update rate {tau} outside [0, 1]")));
    }
    target.check_same_layout(online)?;
    for (t, o) in target.entries.values_mut().zip(online.entries.values()) {
        for (a, &b) in t.data_mut().iter_mut().zip(o.data()) {
            *a = if tau == 1.0 {
                b
            } else {
                tau * b + (1.0 - tau) * *a
            };
        }
    }
    Ok(())
}

const MAGIC: &[u8; 4] = b"HDPW";
const VERSION: u32 = 1;

/// Writes ordered `(name, tensor)` pairs in the weight-container layout:
///
/// ```text
/// magic   4 bytes  "HDPW"
/// version u32 LE   1
/// count   u32 LE
/// count × { name_len u32 LE, name UTF-8,
///           rank u32 LE, dims rank × u64 LE,
///           data product(dims) × f64 LE }
/// ```
pub fn write_container(w: &mut impl Write, items: &[(&str, &Tensor)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(items.len() as u32).to_le_bytes())?;
    for (name, t) in items {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rank() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &x in t.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_container(r: &mut impl Read) -> Result<Vec<(String, Tensor)>> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a weight container (bad magic)".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let count = read_u32(r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        let mut name = vec![0u8; name_len];
        read_exact(r, &mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let rank = read_u32(r)? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut b = [0u8; 8];
            read_exact(r, &mut b)?;
            shape.push(u64::from_le_bytes(b) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let mut b = [0u8; 8];
            read_exact(r, &mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        let t = Tensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))?;
        out.push((name, t));
    }
    Ok(out)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated weight container".into()),
        _ => Error::Io(e),
    })
}
