//! Dense row-major float containers and the finite-difference gradient oracle.
//!
//! `DenseGrid` is the one container used for images, depth maps, disparity
//! grids and 3D occupation tensors: 1–3 extents plus a channel count, data
//! stored row-major with channels innermost. Everything downstream that
//! claims an analytic gradient is checked against [`finite_diff_grad`].

use std::collections::BTreeMap;

use crate::error::{PlkError, Result};

/// Dense n-dimensional (n ≤ 3) container of `f64` values.
///
/// Layout is row-major with the channel axis innermost, e.g. for an
/// `[H, W]` grid with `C` channels the element `(v, u, c)` lives at
/// `(v * W + u) * C + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrid {
    dims: Vec<usize>,
    channels: usize,
    data: Vec<f64>,
}

impl DenseGrid {
    /// Create a grid of the requested shape with every element set to `fill`.
    pub fn new(dims: &[usize], channels: usize, fill: f64) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(PlkError::InvalidShape(format!(
                "expected 1-3 extents, got {}",
                dims.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(PlkError::InvalidShape(format!(
                "zero extent in dims {dims:?}"
            )));
        }
        if channels == 0 {
            return Err(PlkError::InvalidShape("zero channels".into()));
        }
        let len = dims.iter().product::<usize>() * channels;
        Ok(Self {
            dims: dims.to_vec(),
            channels,
            data: vec![fill; len],
        })
    }

    /// Wrap an existing buffer. The length must match the shape exactly.
    pub fn from_vec(dims: &[usize], channels: usize, data: Vec<f64>) -> Result<Self> {
        let grid = Self::new(dims, channels, 0.0)?;
        if data.len() != grid.data.len() {
            return Err(PlkError::InvalidShape(format!(
                "data length {} does not match shape {:?} x {} channels",
                data.len(),
                dims,
                channels
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            channels,
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// True when the spatial dims and channel count match `other`.
    pub fn same_shape(&self, other: &DenseGrid) -> bool {
        self.dims == other.dims && self.channels == other.channels
    }

    /// Height/width accessors for the common 2D case.
    pub fn height(&self) -> usize {
        self.dims[0]
    }

    pub fn width(&self) -> usize {
        *self.dims.get(1).unwrap_or(&1)
    }

    /// Flat offset of spatial position `idx` (length must equal `dims.len()`),
    /// channel 0. Callers add the channel offset themselves.
    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0usize;
        for (i, &d) in idx.iter().enumerate() {
            debug_assert!(d < self.dims[i]);
            off = off * self.dims[i] + d;
        }
        off * self.channels
    }

    #[inline]
    pub fn at2(&self, v: usize, u: usize, c: usize) -> f64 {
        self.data[(v * self.dims[1] + u) * self.channels + c]
    }

    #[inline]
    pub fn at2_mut(&mut self, v: usize, u: usize, c: usize) -> &mut f64 {
        &mut self.data[(v * self.dims[1] + u) * self.channels + c]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize, c: usize) -> f64 {
        self.data[((i * self.dims[1] + j) * self.dims[2] + k) * self.channels + c]
    }

    #[inline]
    pub fn at3_mut(&mut self, i: usize, j: usize, k: usize, c: usize) -> &mut f64 {
        &mut self.data[((i * self.dims[1] + j) * self.dims[2] + k) * self.channels + c]
    }

    /// A zero grid with the same shape as `self`.
    pub fn zeros_like(&self) -> DenseGrid {
        DenseGrid {
            dims: self.dims.clone(),
            channels: self.channels,
            data: vec![0.0; self.data.len()],
        }
    }

    /// Index of the first non-finite element, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }
}

/// A scalar or grid value produced by a differentiable operation.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(f64),
    Grid(DenseGrid),
}

impl Value {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(s) => Some(*s),
            Value::Grid(_) => None,
        }
    }
}

/// A value together with its gradients w.r.t. named inputs.
///
/// Each gradient grid has the same shape as the input it differentiates
/// against. A `BTreeMap` keeps iteration order deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct GradPair {
    pub value: Value,
    pub grads: BTreeMap<String, DenseGrid>,
}

impl GradPair {
    pub fn scalar(value: f64) -> Self {
        Self {
            value: Value::Scalar(value),
            grads: BTreeMap::new(),
        }
    }

    pub fn with_grad(mut self, name: &str, grad: DenseGrid) -> Self {
        self.grads.insert(name.to_string(), grad);
        self
    }

    /// Scalar value; panics if the value is a grid (internal misuse).
    pub fn loss(&self) -> f64 {
        self.value.scalar().expect("GradPair holds a grid value")
    }

    pub fn grad(&self, name: &str) -> &DenseGrid {
        &self.grads[name]
    }
}

/// Central finite differences with a fixed step:
/// `g[i] = (f(x + h*e_i) - f(x - h*e_i)) / (2h)`.
pub fn finite_diff_grad<F>(mut f: F, x: &DenseGrid, h: f64) -> Result<DenseGrid>
where
    F: FnMut(&DenseGrid) -> Result<f64>,
{
    finite_diff_grad_step(&mut f, x, |_| h)
}

/// Central finite differences with the step scaled per element:
/// `h_i = base * max(1, |x_i|)`. This is the form every gradient check
/// in the crate uses; the scaling keeps truncation and cancellation
/// balanced across magnitudes.
pub fn finite_diff_grad_scaled<F>(mut f: F, x: &DenseGrid, base: f64) -> Result<DenseGrid>
where
    F: FnMut(&DenseGrid) -> Result<f64>,
{
    finite_diff_grad_step(&mut f, x, |xi| base * xi.abs().max(1.0))
}

fn finite_diff_grad_step<F, H>(f: &mut F, x: &DenseGrid, step: H) -> Result<DenseGrid>
where
    F: FnMut(&DenseGrid) -> Result<f64>,
    H: Fn(f64) -> f64,
{
    let mut grad = x.zeros_like();
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x.data()[i];
        let h = step(xi);
        debug_assert!(h > 0.0);

        probe.data_mut()[i] = xi + h;
        let f_plus = f(&probe)?;
        probe.data_mut()[i] = xi - h;
        let f_minus = f(&probe)?;
        probe.data_mut()[i] = xi;

        if !f_plus.is_finite() || !f_minus.is_finite() {
            return Err(PlkError::OracleFailure { index: i });
        }
        grad.data_mut()[i] = (f_plus - f_minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Outcome of comparing an analytic gradient against a numeric one.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub pass: bool,
    /// Largest absolute difference over compared elements.
    pub max_abs_err: f64,
    /// Largest `|a-n| / (abs_tol + rel_tol * max(|a|,|n|))`; pass iff <= 1.
    pub max_excess: f64,
    /// Flat index of the worst offender, if any element was compared.
    pub worst_index: Option<usize>,
    pub compared: usize,
    pub excluded: usize,
}

/// Elementwise tolerance check: pass iff
/// `|a - n| <= abs_tol + rel_tol * max(|a|, |n|)` for every element.
pub fn grad_check(
    analytic: &DenseGrid,
    numeric: &DenseGrid,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<GradCheckReport> {
    grad_check_masked(analytic, numeric, rel_tol, abs_tol, None)
}

/// Same as [`grad_check`] but elements with `mask[i] == false` are skipped.
/// Callers use the mask to exclude elements the operation documents as
/// non-smooth (kinks of |.|, bilinear lattice points, assignment boundaries).
pub fn grad_check_masked(
    analytic: &DenseGrid,
    numeric: &DenseGrid,
    rel_tol: f64,
    abs_tol: f64,
    mask: Option<&[bool]>,
) -> Result<GradCheckReport> {
    if !analytic.same_shape(numeric) {
        return Err(PlkError::InvalidShape(format!(
            "gradient shapes differ: {:?}x{} vs {:?}x{}",
            analytic.dims(),
            analytic.channels(),
            numeric.dims(),
            numeric.channels()
        )));
    }
    if let Some(m) = mask {
        if m.len() != analytic.len() {
            return Err(PlkError::InvalidShape(format!(
                "mask length {} does not match grid length {}",
                m.len(),
                analytic.len()
            )));
        }
    }

    let mut report = GradCheckReport {
        pass: true,
        max_abs_err: 0.0,
        max_excess: 0.0,
        worst_index: None,
        compared: 0,
        excluded: 0,
    };
    for i in 0..analytic.len() {
        if let Some(m) = mask {
            if !m[i] {
                report.excluded += 1;
                continue;
            }
        }
        report.compared += 1;
        let a = analytic.data()[i];
        let n = numeric.data()[i];
        let err = (a - n).abs();
        let tol = abs_tol + rel_tol * a.abs().max(n.abs());
        let excess = err / tol;
        if err > report.max_abs_err {
            report.max_abs_err = err;
        }
        if excess > report.max_excess {
            report.max_excess = excess;
            report.worst_index = Some(i);
        }
        if err > tol {
            report.pass = false;
        }
    }
    Ok(report)
}
