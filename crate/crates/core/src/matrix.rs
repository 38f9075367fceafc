/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self { n_cols, data: Vec::new() }
    }

    /// Builds a matrix from equal-length rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(n_cols: usize, rows: &[R]) -> Self {
        let mut m = Self::new(n_cols);
        for r in rows {
            m.push_row(r.as_ref());
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_cols, "row width does not match matrix width");
        self.data.extend_from_slice(row);
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows())
    }

    pub fn append(&mut self, other: &FeatureMatrix) {
        assert_eq!(other.n_cols, self.n_cols, "matrix widths differ");
        self.data.extend_from_slice(&other.data);
    }
}
