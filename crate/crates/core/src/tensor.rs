//! Dense small tensors and matrices.

use std::fmt;

use thiserror::Error;

use crate::scalar::{Num, Scalar};

/// Which index family an axis runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisClass {
    /// First-normal index `a`, extent `l`.
    Normal,
    /// Tangent index `p`, extent `r`.
    Tangent,
    /// Hyperplane index `alpha`, extent `N - n`.
    Hyperplane,
    /// Point index `i` in `{0} ∪ {a}`, extent `l + 1`.
    Point,
}

impl AxisClass {
    pub fn symbol(self) -> &'static str {
        match self {
            AxisClass::Normal => "a",
            AxisClass::Tangent => "p",
            AxisClass::Hyperplane => "alpha",
            AxisClass::Point => "i",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axis {
    pub class: AxisClass,
    pub extent: usize,
}

impl Axis {
    pub fn new(class: AxisClass, extent: usize) -> Self {
        Axis { class, extent }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Dense tensor over a fixed list of axes, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallTensor<S> {
    axes: Vec<Axis>,
    data: Vec<S>,
    /// Pairs of axes declared symmetric.
    symmetric: Vec<(usize, usize)>,
}

impl<S: Num> SmallTensor<S> {
    pub fn zeros(axes: Vec<Axis>) -> Self {
        let len = axes.iter().map(|a| a.extent).product();
        SmallTensor { axes, data: vec![S::zero(); len], symmetric: Vec::new() }
    }

    pub fn from_fn(axes: Vec<Axis>, mut f: impl FnMut(&[usize]) -> S) -> Self {
        let extents: Vec<usize> = axes.iter().map(|a| a.extent).collect();
        let data = MultiIndex::new(&extents).map(|idx| f(&idx)).collect();
        SmallTensor { axes, data, symmetric: Vec::new() }
    }

    pub fn from_vec(axes: Vec<Axis>, data: Vec<S>) -> Result<Self, TensorError> {
        let len: usize = axes.iter().map(|a| a.extent).product();
        if len != data.len() {
            return Err(TensorError::ShapeMismatch(format!(
                "{} coefficients for extents {:?}",
                data.len(),
                axes.iter().map(|a| a.extent).collect::<Vec<_>>()
            )));
        }
        Ok(SmallTensor { axes, data, symmetric: Vec::new() })
    }

    /// Declare axes `i` and `j` symmetric. Checked by [`Self::symmetry_violations`].
    pub fn with_symmetry(mut self, i: usize, j: usize) -> Self {
        self.symmetric.push((i.min(j), i.max(j)));
        self
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn extents(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.extent).collect()
    }

    pub fn order(&self) -> usize {
        self.axes.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn declared_symmetries(&self) -> &[(usize, usize)] {
        &self.symmetric
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        let mut off = 0;
        for (i, axis) in idx.iter().zip(&self.axes) {
            debug_assert!(*i < axis.extent, "index {i} out of extent {}", axis.extent);
            off = off * axis.extent + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &S {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: S) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn map<T: Num>(&self, f: impl Fn(&S) -> T) -> SmallTensor<T> {
        SmallTensor { axes: self.axes.clone(), data: self.data.iter().map(f).collect(), symmetric: self.symmetric.clone() }
    }

    pub fn indices(&self) -> MultiIndex {
        MultiIndex::new(&self.extents())
    }

    /// Check that the axes have the given classes and extents.
    pub fn expect_shape(&self, name: &str, expected: &[Axis]) -> Result<(), TensorError> {
        if self.axes != expected {
            return Err(TensorError::ShapeMismatch(format!(
                "{name}: expected axes {}, found {}",
                describe_axes(expected),
                describe_axes(&self.axes)
            )));
        }
        Ok(())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(Num::magnitude).fold(0.0, f64::max)
    }
}

impl<S: Scalar> SmallTensor<S> {
    /// Multi-indices where a declared symmetry fails.
    pub fn symmetry_violations(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for &(i, j) in &self.symmetric {
            for idx in self.indices() {
                if idx[i] >= idx[j] {
                    continue;
                }
                let mut swapped = idx.clone();
                swapped.swap(i, j);
                if !self.get(&idx).near(self.get(&swapped), tol) {
                    out.push(idx);
                }
            }
        }
        out
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.data.iter().all(|x| x.near_zero(tol))
    }

    pub fn near(&self, other: &Self, tol: f64) -> bool {
        self.axes == other.axes && self.data.iter().zip(&other.data).all(|(a, b)| a.near(b, tol))
    }
}

fn describe_axes(axes: &[Axis]) -> String {
    let parts: Vec<String> = axes.iter().map(|a| format!("{}:{}", a.class.symbol(), a.extent)).collect();
    format!("[{}]", parts.join(", "))
}

/// Summed contraction of `t1` and `t2` over the given axis pairs.
///
/// The result carries the free axes of `t1` followed by the free axes of `t2`.
pub fn contract<S: Num>(
    t1: &SmallTensor<S>,
    t2: &SmallTensor<S>,
    pairs: &[(usize, usize)],
) -> Result<SmallTensor<S>, TensorError> {
    for &(i, j) in pairs {
        let (a, b) = match (t1.axes.get(i), t2.axes.get(j)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(TensorError::AxisMismatch(format!("axis pair ({i}, {j}) out of range"))),
        };
        if a != b {
            return Err(TensorError::AxisMismatch(format!(
                "cannot pair {}:{} with {}:{}",
                a.class.symbol(),
                a.extent,
                b.class.symbol(),
                b.extent
            )));
        }
    }
    let mut seen1 = vec![false; t1.order()];
    let mut seen2 = vec![false; t2.order()];
    for &(i, j) in pairs {
        if seen1[i] || seen2[j] {
            return Err(TensorError::AxisMismatch("axis used twice".into()));
        }
        seen1[i] = true;
        seen2[j] = true;
    }
    let free1: Vec<usize> = (0..t1.order()).filter(|i| !seen1[*i]).collect();
    let free2: Vec<usize> = (0..t2.order()).filter(|j| !seen2[*j]).collect();
    let mut axes: Vec<Axis> = free1.iter().map(|&i| t1.axes[i]).collect();
    axes.extend(free2.iter().map(|&j| t2.axes[j]));
    let summed: Vec<usize> = pairs.iter().map(|&(i, _)| t1.axes[i].extent).collect();

    let mut idx1 = vec![0; t1.order()];
    let mut idx2 = vec![0; t2.order()];
    Ok(SmallTensor::from_fn(axes, |out| {
        for (k, &i) in free1.iter().enumerate() {
            idx1[i] = out[k];
        }
        for (k, &j) in free2.iter().enumerate() {
            idx2[j] = out[free1.len() + k];
        }
        let mut acc = S::zero();
        for s in MultiIndex::new(&summed) {
            for (k, &(i, j)) in pairs.iter().enumerate() {
                idx1[i] = s[k];
                idx2[j] = s[k];
            }
            acc = acc + t1.get(&idx1).clone() * t2.get(&idx2).clone();
        }
        acc
    }))
}

/// Row-major iteration over all multi-indices of a box.
#[derive(Debug, Clone)]
pub struct MultiIndex {
    extents: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MultiIndex {
    pub fn new(extents: &[usize]) -> Self {
        let next = if extents.contains(&0) { None } else { Some(vec![0; extents.len()]) };
        MultiIndex { extents: extents.to_vec(), next }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut k = succ.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            succ[k] += 1;
            if succ[k] < self.extents[k] {
                self.next = Some(succ);
                break;
            }
            succ[k] = 0;
        }
        Some(current)
    }
}

/// Small dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.cols.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl<T: Num> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                acc = acc + self.get(i, k).clone() * other.get(k, j).clone();
            }
            acc
        })
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() + other.get(i, j).clone())
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() - other.get(i, j).clone())
    }

    pub fn scale(&self, s: &T) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() * s.clone())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    /// Gauss–Jordan inverse with largest-magnitude pivoting. `negligible`
    /// decides when a pivot counts as zero.
    pub fn try_inverse(&self, negligible: impl Fn(&T) -> bool) -> Option<Matrix<T>> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv: Matrix<T> = Matrix::identity(n);
        for col in 0..n {
            let pivot_row = (col..n).max_by(|&i, &j| {
                a.get(i, col).magnitude().partial_cmp(&a.get(j, col).magnitude()).unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a.get(pivot_row, col).is_zero() || negligible(a.get(pivot_row, col)) {
                return None;
            }
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let p = a.get(col, col).clone();
            for j in 0..n {
                a.set(col, j, a.get(col, j).clone() / p.clone());
                inv.set(col, j, inv.get(col, j).clone() / p.clone());
            }
            for i in 0..n {
                if i == col || a.get(i, col).is_zero() {
                    continue;
                }
                let factor = a.get(i, col).clone();
                for j in 0..n {
                    let v = a.get(i, j).clone() - factor.clone() * a.get(col, j).clone();
                    a.set(i, j, v);
                    let w = inv.get(i, j).clone() - factor.clone() * inv.get(col, j).clone();
                    inv.set(i, j, w);
                }
            }
        }
        Some(inv)
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.get(i, j).near(self.get(j, i), tol)))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.data.iter().all(|x| x.near_zero(tol))
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(Num::magnitude).fold(0.0, f64::max)
    }

    /// Basis of the null space, as columns, by exact row reduction.
    /// For floats, entries below `tol` count as zero.
    pub fn null_space(&self, tol: f64) -> Vec<Vec<T>> {
        let (rref, pivots) = self.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![T::zero(); self.cols];
                v[f] = T::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -rref.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self, tol: f64) -> (Matrix<T>, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            let best = (row..self.rows)
                .max_by(|&i, &j| {
                    a.get(i, col).magnitude().partial_cmp(&a.get(j, col).magnitude()).unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a.get(best, col).near_zero(tol) {
                continue;
            }
            a.swap_rows(best, row);
            let p = a.get(row, col).clone();
            for j in 0..self.cols {
                a.set(row, j, a.get(row, j).clone() / p.clone());
            }
            for i in 0..self.rows {
                if i != row && !a.get(i, col).is_zero() {
                    let factor = a.get(i, col).clone();
                    for j in 0..self.cols {
                        let v = a.get(i, j).clone() - factor.clone() * a.get(row, j).clone();
                        a.set(i, j, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }
}
