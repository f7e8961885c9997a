//! Compressed-row complex matrices, just enough for gate construction and
//! state-vector simulation.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Entries at or below this magnitude are dropped by products.
const DROP_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CMatrix {
    fn from_sorted_rows(dim: usize, rows: impl IntoIterator<Item = Vec<(usize, C64)>>) -> Self {
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        debug_assert_eq!(indptr.len(), dim + 1);
        CMatrix {
            dim,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_sorted_rows(dim, (0..dim).map(|r| vec![(r, C64::new(1.0, 0.0))]))
    }

    /// Permutation matrix sending basis state `a` to `perm[a]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let mut rows = vec![Vec::new(); perm.len()];
        for (a, &b) in perm.iter().enumerate() {
            rows[b].push((a, C64::new(1.0, 0.0)));
        }
        Self::from_sorted_rows(perm.len(), rows)
    }

    /// From a square row-major array; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<C64>]) -> Option<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(Self::from_sorted_rows(
            dim,
            rows.iter().map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != C64::new(0.0, 0.0))
                    .map(|(c, &v)| (c, v))
                    .collect()
            }),
        ))
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        (0..self.dim)
            .map(|r| {
                let mut row = vec![C64::new(0.0, 0.0); self.dim];
                for (c, v) in self.row(r) {
                    row[c] += v;
                }
                row
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map_or(C64::new(0.0, 0.0), |(_, v)| v)
    }

    /// `out = self * v`.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).map(|(c, x)| x * v[c]).sum();
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        self.apply_into(v, &mut out);
        out
    }

    /// `self * other`.
    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut acc = vec![C64::new(0.0, 0.0); self.dim];
        let mut touched = vec![false; self.dim];
        let mut cols = Vec::new();
        let rows: Vec<_> = (0..self.dim)
            .map(|r| {
                for (k, a) in self.row(r) {
                    for (c, b) in other.row(k) {
                        if !touched[c] {
                            touched[c] = true;
                            cols.push(c);
                        }
                        acc[c] += a * b;
                    }
                }
                let row = cols
                    .drain(..)
                    .filter_map(|c| {
                        touched[c] = false;
                        let v = std::mem::replace(&mut acc[c], C64::new(0.0, 0.0));
                        (v.norm() > DROP_TOL).then_some((c, v))
                    })
                    .collect();
                row
            })
            .collect();
        Self::from_sorted_rows(self.dim, rows)
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut rows = vec![Vec::new(); self.dim];
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                rows[c].push((r, v.conj()));
            }
        }
        Self::from_sorted_rows(self.dim, rows)
    }

    /// Kronecker product; `self` indexes the high part of the basis.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let d = other.dim;
        let rows = (0..self.dim * d).map(|r| {
            let (ra, rb) = (r / d, r % d);
            self.row(ra)
                .flat_map(|(ca, a)| other.row(rb).map(move |(cb, b)| (ca * d + cb, a * b)))
                .collect()
        });
        Self::from_sorted_rows(self.dim * d, rows.collect::<Vec<_>>())
    }

    /// Block-diagonal matrix; block `i` acts on basis states `i*d .. (i+1)*d`.
    pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
        let d = blocks.first().map_or(0, |b| b.dim);
        assert!(blocks.iter().all(|b| b.dim == d), "blocks must share a dimension");
        let rows = blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| (0..d).map(move |r| b.row(r).map(|(c, v)| (i * d + c, v)).collect()));
        Self::from_sorted_rows(blocks.len() * d, rows.collect::<Vec<_>>())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            values: self.values.iter().map(|&v| v * s).collect(),
            ..self.clone()
        }
    }

    /// Largest entrywise deviation of `self^dagger * self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            let mut diag_seen = false;
            for (c, v) in gram.row(r) {
                let target = if c == r {
                    diag_seen = true;
                    1.0
                } else {
                    0.0
                };
                worst = worst.max((v - target).norm());
            }
            if !diag_seen {
                worst = worst.max(1.0);
            }
        }
        worst
    }
}

/// `H^{(x)b}`, the normalized Walsh-Hadamard transform on `2^b` states.
pub fn hadamard_power(b: u32) -> CMatrix {
    let t = 1usize << b;
    let s = 1.0 / (t as f64).sqrt();
    let rows = (0..t).map(|r| {
        (0..t)
            .map(|c| {
                let sign = if (r & c).count_ones() % 2 == 0 { s } else { -s };
                (c, C64::new(sign, 0.0))
            })
            .collect()
    });
    CMatrix::from_sorted_rows(t, rows.collect::<Vec<_>>())
}

/// Planar rotation `[[cos a, -sin a], [sin a, cos a]]`.
pub fn rotation(angle: f64) -> CMatrix {
    let (s, c) = angle.sin_cos();
    CMatrix::from_sorted_rows(
        2,
        vec![
            vec![(0, C64::new(c, 0.0)), (1, C64::new(-s, 0.0))],
            vec![(0, C64::new(s, 0.0)), (1, C64::new(c, 0.0))],
        ],
    )
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_and_permutation() {
        let v = vec![c(1.0), c(2.0), c(3.0)];
        assert_eq!(CMatrix::identity(3).apply(&v), v);
        let p = CMatrix::permutation(&[1, 2, 0]);
        assert_eq!(p.apply(&v), vec![c(3.0), c(1.0), c(2.0)]);
        assert!(p.unitarity_defect() < 1e-15);
    }

    #[test]
    fn hadamard_is_self_inverse() {
        let h = hadamard_power(3);
        let hh = h.mul(&h);
        assert!((0..8).all(|r| (hh.get(r, r) - c(1.0)).norm() < 1e-12));
        assert_eq!(hh.nnz(), 8);
    }

    #[test]
    fn kron_and_block_diag_shapes() {
        let x = CMatrix::permutation(&[1, 0]);
        let i2 = CMatrix::identity(2);
        let xi = x.kron(&i2);
        assert_eq!(xi.apply(&[c(1.0), c(0.0), c(0.0), c(0.0)])[2], c(1.0));
        let bd = CMatrix::block_diag(&[&i2, &x]);
        assert_eq!(bd.dim(), 4);
        assert_eq!(bd.get(2, 3), c(1.0));
        assert!(bd.unitarity_defect() < 1e-15);
    }

    #[test]
    fn rotation_and_defect() {
        let r = rotation(0.3);
        assert!(r.unitarity_defect() < 1e-15);
        let ones = CMatrix::from_dense(&[vec![c(1.0), c(1.0)], vec![c(1.0), c(1.0)]]).unwrap();
        assert!(ones.unitarity_defect() > 0.5);
        let round = CMatrix::from_dense(&r.to_dense()).unwrap();
        assert_eq!(round, r);
    }
}
