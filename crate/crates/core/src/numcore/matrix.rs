use std::io::{Read, Write};

use crate::error::{shape_err, Error, Result};

/// Magic bytes of the on-disk matrix format.
pub const MATRIX_MAGIC: &[u8; 4] = b"TDM1";

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(shape_err!("row {i} has {} values, expected {cols}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// `y = self · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(shape_err!(
                "cannot multiply {}x{} matrix by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            ));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    /// `out += self · x` without shape checks beyond debug assertions.
    #[inline]
    pub(crate) fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), x);
        }
    }

    /// `out += selfᵀ · g`.
    #[inline]
    pub(crate) fn matvec_t_acc(&self, g: &[f64], out: &mut [f64]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += gr * w;
            }
        }
    }

    /// `self += g · xᵀ`.
    #[inline]
    pub(crate) fn add_outer(&mut self, g: &[f64], x: &[f64]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            for (w, xv) in self.row_mut(r).iter_mut().zip(x) {
                *w += gr * xv;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let rows = u32::try_from(self.rows).map_err(|_| too_big())?;
        let cols = u32::try_from(self.cols).map_err(|_| too_big())?;
        w.write_all(MATRIX_MAGIC)?;
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head).map_err(|e| Error::Data(format!("matrix header: {e}")))?;
        if &head[..4] != MATRIX_MAGIC {
            return Err(Error::Data("bad matrix magic".into()));
        }
        let rows = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let mut bytes = vec![0u8; rows * cols * 8];
        r.read_exact(&mut bytes).map_err(|e| Error::Data(format!("matrix body: {e}")))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Matrix { rows, cols, data })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Matrix::read_from(bytes.as_slice())
    }
}

fn too_big() -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidInput, "matrix dimension exceeds u32")
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
