use ndarray::Array2;

use super::blocks::softmax_rows;

/// Fixed-capacity key/value bank written as a ring buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryState {
    pub keys: Array2<f64>,
    pub values: Array2<f64>,
    pub occupied: Vec<bool>,
    pub cursor: usize,
    /// Time step that wrote each slot; used to route gradients in training.
    pub(crate) sources: Vec<Option<usize>>,
}

impl MemoryState {
    pub fn empty(capacity: usize, dim: usize) -> Self {
        assert!(capacity > 0, "memory capacity must be positive");
        Self {
            keys: Array2::zeros((capacity, dim)),
            values: Array2::zeros((capacity, dim)),
            occupied: vec![false; capacity],
            cursor: 0,
            sources: vec![None; capacity],
        }
    }

    pub fn capacity(&self) -> usize {
        self.occupied.len()
    }

    pub fn occupancy(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    pub fn dim(&self) -> usize {
        self.keys.ncols()
    }

    /// Indices of occupied slots in slot order.
    pub fn occupied_slots(&self) -> Vec<usize> {
        (0..self.capacity()).filter(|&i| self.occupied[i]).collect()
    }

    /// Writes one key/value row at the cursor and advances it modulo capacity.
    pub fn write(&mut self, key: &[f64], value: &[f64]) {
        self.write_tagged(key, value, None);
    }

    pub(crate) fn write_tagged(&mut self, key: &[f64], value: &[f64], source: Option<usize>) {
        let slot = self.cursor;
        self.keys.row_mut(slot).iter_mut().zip(key).for_each(|(d, s)| *d = *s);
        self.values.row_mut(slot).iter_mut().zip(value).for_each(|(d, s)| *d = *s);
        self.occupied[slot] = true;
        self.sources[slot] = source;
        self.cursor = (slot + 1) % self.capacity();
    }

    pub fn is_finite(&self) -> bool {
        self.keys.iter().chain(self.values.iter()).all(|v| v.is_finite())
    }
}

/// Result of attending over the occupied slots.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRead {
    pub output: Array2<f64>,
    /// `N x m` attention weights over the occupied slots, `m = 0` when empty.
    pub attention: Array2<f64>,
    pub slots: Vec<usize>,
}

/// `softmax(q keys^T / sqrt(D)) values` restricted to occupied slots.
/// An empty memory reads as exact zeros.
pub fn attend(queries: &Array2<f64>, memory: &MemoryState) -> MemoryRead {
    let slots = memory.occupied_slots();
    let (n, d) = queries.dim();
    if slots.is_empty() {
        return MemoryRead { output: Array2::zeros((n, d)), attention: Array2::zeros((n, 0)), slots };
    }
    let keys = memory.keys.select(ndarray::Axis(0), &slots);
    let values = memory.values.select(ndarray::Axis(0), &slots);
    let attention = softmax_rows(&(queries.dot(&keys.t()) / (d as f64).sqrt()));
    MemoryRead { output: attention.dot(&values), attention, slots }
}

/// Value multiplier for a frame scored `s`: 1 at 0.5, falling to 0 at either end.
pub fn write_scale(s: f64) -> f64 {
    1.0 - (2.0 * s - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_overwrites_oldest() {
        let mut m = MemoryState::empty(3, 2);
        for i in 0..4 {
            m.write_tagged(&[i as f64, 0.0], &[0.0, i as f64], Some(i));
        }
        assert_eq!(m.cursor, 1);
        assert_eq!(m.occupancy(), 3);
        assert_eq!(m.keys[[0, 0]], 3.0);
        assert_eq!(m.keys[[1, 0]], 1.0);
        assert_eq!(m.sources, vec![Some(3), Some(1), Some(2)]);
    }

    #[test]
    fn scale_endpoints() {
        assert_eq!(write_scale(0.5), 1.0);
        assert_eq!(write_scale(0.0), 0.0);
        assert_eq!(write_scale(1.0), 0.0);
        assert_eq!(write_scale(0.25), 0.5);
    }
}
