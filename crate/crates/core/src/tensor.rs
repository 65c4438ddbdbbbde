//! Dense row-major storage and the named parameter map.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major `f32` tensor. Rank 1 tensors are treated as a single row by the
/// graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::dim(
                "Tensor::new",
                format!("dims {:?} need {} values, got {}", dims, expected, data.len()),
            ));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("Tensor::new ({bad})")));
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let len = dims.iter().product();
        Tensor {
            dims,
            data: vec![0.0; len],
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(rows, cols)` view used by matrix ops: rank 0/1 tensors are one row.
    pub fn as_matrix_shape(&self) -> (usize, usize) {
        match self.dims.len() {
            0 => (1, 1),
            1 => (1, self.dims[0]),
            _ => {
                let cols = *self.dims.last().unwrap();
                (self.data.len() / cols.max(1), cols)
            }
        }
    }

    pub fn row(&self, index: usize) -> &[f32] {
        let (_, cols) = self.as_matrix_shape();
        &self.data[index * cols..(index + 1) * cols]
    }
}

/// Every learnable tensor of the model, addressed by a dotted path such as
/// `extractor.start.W`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    tensors: BTreeMap<String, Tensor>,
    pub rng_seed: u64,
}

impl ModelParams {
    pub fn new(rng_seed: u64) -> Self {
        ModelParams {
            tensors: BTreeMap::new(),
            rng_seed,
        }
    }

    /// Inserts a tensor; names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter `{name}`")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::MissingParam(name.into()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::MissingParam(name.into()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Zeroes every tensor in place.
    pub fn zero_all(&mut self) {
        for tensor in self.tensors.values_mut() {
            tensor.data.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Seeded initializer. Weight matrices use `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
#[derive(Debug)]
pub struct ParamInit {
    rng: ChaCha8Rng,
    params: ModelParams,
}

impl ParamInit {
    pub fn new(seed: u64) -> Self {
        ParamInit {
            rng: ChaCha8Rng::seed_from_u64(seed),
            params: ModelParams::new(seed),
        }
    }

    /// `[d_out, d_in]` weight mapping `d_in -> d_out`.
    pub fn weight(&mut self, name: &str, d_out: usize, d_in: usize) -> Result<()> {
        let bound = 1.0 / libm::sqrtf(d_in.max(1) as f32);
        self.uniform(name, vec![d_out, d_in], bound)
    }

    pub fn uniform(&mut self, name: &str, dims: Vec<usize>, bound: f32) -> Result<()> {
        let len: usize = dims.iter().product();
        let data = (0..len)
            .map(|_| self.rng.random_range(-bound..=bound))
            .collect();
        self.params.insert(name, Tensor::new(dims, data)?)
    }

    pub fn constant(&mut self, name: &str, dims: Vec<usize>, value: f32) -> Result<()> {
        let len: usize = dims.iter().product();
        self.params.insert(name, Tensor::new(dims, vec![value; len])?)
    }

    pub fn finish(self) -> ModelParams {
        self.params
    }
}
