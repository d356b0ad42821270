use serde::{Deserialize, Serialize};

/// A fixed-length real vector stored as sorted `(index, value)` pairs with no
/// explicit zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVec {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        SparseVec { dim, indices: Vec::new(), values: Vec::new() }
    }

    pub fn from_dense(v: &[f64]) -> Self {
        let mut out = SparseVec::zeros(v.len());
        for (i, &x) in v.iter().enumerate() {
            if x != 0.0 {
                out.indices.push(i as u32);
                out.values.push(x);
            }
        }
        out
    }

    /// Builds from unordered entries; duplicate indices are summed.
    pub fn from_entries(dim: usize, mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out = SparseVec::zeros(dim);
        for (i, x) in entries {
            assert!((i as usize) < dim, "index {i} out of range for dimension {dim}");
            if out.indices.last() == Some(&i) {
                *out.values.last_mut().unwrap() += x;
            } else {
                out.indices.push(i);
                out.values.push(x);
            }
        }
        out.prune();
        out
    }

    fn prune(&mut self) {
        let mut k = 0;
        for j in 0..self.indices.len() {
            if self.values[j] != 0.0 {
                self.indices[k] = self.indices[j];
                self.values[k] = self.values[j];
                k += 1;
            }
        }
        self.indices.truncate(k);
        self.values.truncate(k);
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.indices.binary_search(&(i as u32)) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for (i, x) in self.iter() {
            v[i] = x;
        }
        v
    }

    /// Concatenation in order; the result has the summed dimension.
    pub fn concat(parts: &[&SparseVec]) -> SparseVec {
        let mut out = SparseVec::zeros(parts.iter().map(|p| p.dim).sum());
        let mut offset = 0u32;
        for p in parts {
            out.indices.extend(p.indices.iter().map(|i| i + offset));
            out.values.extend_from_slice(&p.values);
            offset += p.dim as u32;
        }
        out
    }
}
