use num_complex::Complex64;

use crate::error::{Error, Result};

/// Triangular spherical-harmonic coefficients `c_n^m(rho_k)`, `0 <= n <= band`,
/// `-n <= m <= n`, sampled at every radial node.
///
/// Storage is node-major; within a node, `(n, m)` lives at `n^2 + n + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    band: usize,
    nodes: usize,
    data: Vec<Complex64>,
}

/// Position of `(n, m)` inside one node's coefficient block.
#[inline]
pub fn mode_index(n: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= n);
    ((n * n + n) as i64 + m) as usize
}

/// Number of coefficients per node for a band limit.
#[inline]
pub fn modes_per_node(band: usize) -> usize {
    (band + 1) * (band + 1)
}

impl ModeField {
    pub fn zeros(band: usize, nodes: usize) -> Self {
        Self { band, nodes, data: vec![Complex64::new(0.0, 0.0); modes_per_node(band) * nodes] }
    }

    pub fn from_vec(band: usize, nodes: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != modes_per_node(band) * nodes {
            return Err(Error::InvalidConfig(format!(
                "mode field of band {band} on {nodes} nodes needs {} values, got {}",
                modes_per_node(band) * nodes,
                data.len()
            )));
        }
        Ok(Self { band, nodes, data })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn modes_per_node(&self) -> usize {
        modes_per_node(self.band)
    }

    pub fn get(&self, node: usize, n: usize, m: i64) -> Complex64 {
        self.data[node * self.modes_per_node() + mode_index(n, m)]
    }

    pub fn set(&mut self, node: usize, n: usize, m: i64, value: Complex64) {
        let stride = self.modes_per_node();
        self.data[node * stride + mode_index(n, m)] = value;
    }

    pub fn node(&self, node: usize) -> &[Complex64] {
        let stride = self.modes_per_node();
        &self.data[node * stride..(node + 1) * stride]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [Complex64] {
        let stride = self.modes_per_node();
        &mut self.data[node * stride..(node + 1) * stride]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Zero-padded or truncated copy at another band limit.
    pub fn with_band(&self, band: usize) -> ModeField {
        let mut out = ModeField::zeros(band, self.nodes);
        let keep = modes_per_node(self.band.min(band));
        for k in 0..self.nodes {
            out.node_mut(k)[..keep].copy_from_slice(&self.node(k)[..keep]);
        }
        out
    }

    /// Euclidean norm of all coefficients.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest violation of `c_n^{-m} = (-1)^m conj(c_n^m)`, the symmetry of a
    /// real-valued field.
    pub fn real_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.nodes {
            for n in 0..=self.band {
                for m in 1..=n as i64 {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    let d = self.get(k, n, -m) - self.get(k, n, m).conj() * sign;
                    worst = worst.max(d.norm());
                }
                worst = worst.max(self.get(k, n, 0).im.abs());
            }
        }
        worst
    }

    /// Largest coefficient magnitude at one node.
    pub fn node_max_abs(&self, node: usize) -> f64 {
        self.node(node).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_layout() {
        let f = ModeField::zeros(3, 2);
        assert_eq!(f.as_slice().len(), 32);
        assert_eq!(mode_index(0, 0), 0);
        assert_eq!(mode_index(1, -1), 1);
        assert_eq!(mode_index(3, 3), 15);
    }

    #[test]
    fn band_change_preserves_shared_modes() {
        let mut f = ModeField::zeros(2, 1);
        f.set(0, 2, -1, Complex64::new(1.0, 2.0));
        let g = f.with_band(4).with_band(2);
        assert_eq!(f, g);
        assert_eq!(f.with_band(1).norm(), 0.0);
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(ModeField::from_vec(2, 1, vec![Complex64::new(0.0, 0.0); 8]).is_err());
    }
}
