//! Compressed sparse row storage for assembled Jacobians.

use std::io::Write;

use super::PerfCounters;

/// Square CSR matrix with strictly increasing column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a zero matrix with the union of the given per-row columns as
    /// its structure.
    pub fn from_pattern(n: usize, mut rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            debug_assert!(r.last().is_none_or(|&c| c < n));
            col_indices.extend_from_slice(r);
            row_offsets.push(col_indices.len());
        }
        let values = vec![0.0; col_indices.len()];
        SparseMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern(n, (0..n).map(|i| vec![i]).collect());
        m.values.fill(1.0);
        m
    }

    /// Keeps entries with `|a_ij| > drop_tol`.
    pub fn from_dense(n: usize, dense: &[f64], drop_tol: f64) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| dense[i * n + j].abs() > drop_tol)
                    .collect()
            })
            .collect();
        let mut m = Self::from_pattern(n, rows);
        for i in 0..n {
            for k in m.row_offsets[i]..m.row_offsets[i + 1] {
                m.values[k] = dense[i * n + m.col_indices[k]];
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        let cols = &self.col_indices[start..self.row_offsets[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    /// Entry `(i, j)`, zero outside the structure.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` at `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` is outside the structure.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn zero(&mut self) {
        self.values.fill(0.0);
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Model-level cost of one [`matvec`](Self::matvec): a multiply-add per
    /// stored entry; loads of values, column indices and row offsets, one
    /// read of `x` and one write of `y`.
    pub fn matvec_cost(&self) -> PerfCounters {
        let word = std::mem::size_of::<f64>() as u64;
        let idx = std::mem::size_of::<usize>() as u64;
        let (n, nnz) = (self.n as u64, self.nnz() as u64);
        PerfCounters {
            flops: 2 * nnz,
            bytes_moved: nnz * (word + idx) + (n + 1) * idx + 2 * n * word,
            cells_processed: 0,
            chunks_processed: 0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i * self.n + j] = v;
            }
        }
        d
    }

    /// `max |a_ij - a_ji|` over the stored structure (and its transpose).
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Writes one `row col value` line per stored entry, values with 17
    /// significant digits.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
        Ok(())
    }

    /// Parses the output of [`write_triplets`](Self::write_triplets) for an
    /// `n × n` matrix.
    pub fn read_triplets(n: usize, text: &str) -> Result<Self, String> {
        let mut entries = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() {
                continue;
            }
            if f.len() != 3 {
                return Err(format!("line {}: expected `row col value`", ln + 1));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| format!("line {}: {e}", ln + 1))
            };
            let (i, j) = (parse(f[0])?, parse(f[1])?);
            let v: f64 = f[2].parse().map_err(|e| format!("line {}: {e}", ln + 1))?;
            if i >= n || j >= n {
                return Err(format!("line {}: index out of range", ln + 1));
            }
            entries.push((i, j, v));
        }
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in &entries {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(n, rows);
        for (i, j, v) in entries {
            m.add(i, j, v);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_sorted_and_deduplicated() {
        let m = SparseMatrix::from_pattern(3, vec![vec![2, 0, 2], vec![1], vec![0, 2, 1]]);
        assert_eq!(m.row_offsets(), &[0, 2, 3, 6]);
        assert_eq!(m.col_indices(), &[0, 2, 1, 0, 1, 2]);
        for i in 0..3 {
            let (c, _) = m.row(i);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn matvec_and_triplets() {
        let dense = [4.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 4.0];
        let m = SparseMatrix::from_dense(3, &dense, 0.0);
        assert_eq!(m.nnz(), 7);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 2.0, 3.0]);
        assert_eq!(m.asymmetry(), 0.0);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "0 0 4.0000000000000000e0");
        assert_eq!(SparseMatrix::read_triplets(3, &text).unwrap(), m);
        assert_eq!(m.matvec_cost().flops, 14);
    }

    #[test]
    #[should_panic(expected = "not in sparsity pattern")]
    fn add_outside_pattern_panics() {
        let mut m = SparseMatrix::identity(2);
        m.add(0, 1, 1.0);
    }
}
