//! Dense row-major tensors used throughout the crate.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

use crate::error::{Error, Result};

/// Floating-point element type. `f64` is the reference precision.
pub trait Scalar: Float + Sum + Debug + Default + Send + Sync + 'static {}

impl Scalar for f64 {}
impl Scalar for f32 {}

/// Small dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Mat {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Mat<T>) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    out.data[idx] = out.data[idx] + a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| if v.abs() > acc { v.abs() } else { acc })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|v| U::from(*v).expect("finite cast"))
                .collect(),
        }
    }

    /// Largest element-wise absolute difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Layer input/output tensor, `c x h x w`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T = f64> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> FeatureMap<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        FeatureMap {
            channels,
            height,
            width,
            data: vec![T::zero(); channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::dim("feature map dimensions must be positive"));
        }
        if data.len() != channels * height * width {
            return Err(Error::dim(format!(
                "{} values cannot fill a {channels}x{height}x{width} feature map",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("feature map contains non-finite values"));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: T) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    #[inline]
    pub fn add(&mut self, c: usize, y: usize, x: usize, v: T) {
        let i = (c * self.height + y) * self.width + x;
        self.data[i] = self.data[i] + v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let len = self.height * self.width;
        &self.data[c * len..(c + 1) * len]
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = *v * alpha);
        out
    }

    pub fn cast<U: Scalar>(&self) -> FeatureMap<U> {
        FeatureMap {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|v| U::from(*v).expect("finite cast"))
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &FeatureMap<T>) -> T {
        assert_eq!(
            (self.channels, self.height, self.width),
            (other.channels, other.height, other.width),
            "shape mismatch"
        );
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// `N` filters of shape `c x r x r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T = f64> {
    count: usize,
    channels: usize,
    edge: usize,
    data: Vec<T>,
}

impl<T: Scalar> FilterBank<T> {
    pub fn zeros(count: usize, channels: usize, edge: usize) -> Self {
        FilterBank {
            count,
            channels,
            edge,
            data: vec![T::zero(); count * channels * edge * edge],
        }
    }

    pub fn from_vec(count: usize, channels: usize, edge: usize, data: Vec<T>) -> Result<Self> {
        if count == 0 || channels == 0 || edge == 0 {
            return Err(Error::dim("filter bank dimensions must be positive"));
        }
        if data.len() != count * channels * edge * edge {
            return Err(Error::dim(format!(
                "{} values cannot fill a {count}x{channels}x{edge}x{edge} filter bank",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("filter bank contains non-finite values"));
        }
        Ok(FilterBank {
            count,
            channels,
            edge,
            data,
        })
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn edge(&self) -> usize {
        self.edge
    }

    #[inline]
    fn index(&self, k: usize, c: usize, i: usize, j: usize) -> usize {
        ((k * self.channels + c) * self.edge + i) * self.edge + j
    }

    #[inline]
    pub fn get(&self, k: usize, c: usize, i: usize, j: usize) -> T {
        self.data[self.index(k, c, i, j)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, c: usize, i: usize, j: usize, v: T) {
        let idx = self.index(k, c, i, j);
        self.data[idx] = v;
    }

    /// The `r x r` kernel of filter `k` on channel `c`.
    pub fn kernel(&self, k: usize, c: usize) -> Mat<T> {
        let start = self.index(k, c, 0, 0);
        Mat::from_vec(
            self.edge,
            self.edge,
            self.data[start..start + self.edge * self.edge].to_vec(),
        )
        .expect("kernel slice has r*r entries")
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn cast<U: Scalar>(&self) -> FilterBank<U> {
        FilterBank {
            count: self.count,
            channels: self.channels,
            edge: self.edge,
            data: self
                .data
                .iter()
                .map(|v| U::from(*v).expect("finite cast"))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_shapes() {
        let a = Mat::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let b = a.transpose();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[14.0, 32.0, 32.0, 77.0]);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(Mat::from_rows(&rows).is_err());
    }

    #[test]
    fn feature_map_rejects_bad_input() {
        assert!(FeatureMap::<f64>::from_vec(0, 2, 2, vec![]).is_err());
        assert!(FeatureMap::from_vec(1, 2, 2, vec![0.0; 3]).is_err());
        assert!(FeatureMap::from_vec(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn filter_indexing_is_row_major() {
        let data: Vec<f64> = (0..2 * 3 * 9).map(|v| v as f64).collect();
        let f = FilterBank::from_vec(2, 3, 3, data).unwrap();
        assert_eq!(f.get(1, 2, 0, 1), (((1 * 3 + 2) * 3) * 3 + 1) as f64);
        assert_eq!(f.kernel(0, 1).get(2, 2), 17.0);
    }
}
