//! Scale-aware disparity-to-depth mapping and its derivative.
//!
//! A network-style output `x in [0, 1)` maps to metric depth through
//! `d = d_prior / (sigma_min + (sigma_max - sigma_min) * x)`, which pins the
//! output range to `(d_prior/sigma_max, d_prior/sigma_min]` and lets the
//! prior carry the absolute scale.

use serde::{Deserialize, Serialize};

use crate::error::{PlkError, Result};
use crate::grid::DenseGrid;

/// Parameters of the disparity-to-depth map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepthParamConfig {
    /// Minimum disparity, 1/m.
    pub sigma_min: f64,
    /// Maximum disparity, 1/m.
    pub sigma_max: f64,
    /// Dimensionless scaling factor applied to every depth.
    pub d_prior: f64,
}

impl Default for DepthParamConfig {
    /// 0.01..10 disparity, i.e. depth range (0.1·d_prior, 100·d_prior] m.
    fn default() -> Self {
        Self {
            sigma_min: 0.01,
            sigma_max: 10.0,
            d_prior: 1.0,
        }
    }
}

impl DepthParamConfig {
    pub fn new(sigma_min: f64, sigma_max: f64, d_prior: f64) -> Result<Self> {
        let cfg = Self {
            sigma_min,
            sigma_max,
            d_prior,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max) {
            return Err(PlkError::InvalidConfig(format!(
                "need 0 < sigma_min < sigma_max, got ({}, {})",
                self.sigma_min, self.sigma_max
            )));
        }
        if !(self.d_prior > 0.0) {
            return Err(PlkError::InvalidConfig(format!(
                "d_prior must be positive, got {}",
                self.d_prior
            )));
        }
        Ok(())
    }

    pub fn min_depth(&self) -> f64 {
        self.d_prior / self.sigma_max
    }

    pub fn max_depth(&self) -> f64 {
        self.d_prior / self.sigma_min
    }

    /// Depth of a single disparity value (no range check).
    #[inline]
    pub fn depth_of(&self, x: f64) -> f64 {
        self.d_prior / (self.sigma_min + (self.sigma_max - self.sigma_min) * x)
    }

    /// Derivative of [`Self::depth_of`] w.r.t. the disparity value.
    #[inline]
    pub fn depth_grad_of(&self, x: f64) -> f64 {
        let span = self.sigma_max - self.sigma_min;
        let den = self.sigma_min + span * x;
        -self.d_prior * span / (den * den)
    }

    /// Disparity value mapping to the given depth (inverse of `depth_of`).
    pub fn disparity_of(&self, depth: f64) -> f64 {
        (self.d_prior / depth - self.sigma_min) / (self.sigma_max - self.sigma_min)
    }
}

/// A grid validated to hold disparities in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap(DenseGrid);

impl DisparityMap {
    pub fn new(grid: DenseGrid) -> Result<Self> {
        validate_disparity(&grid)?;
        Ok(Self(grid))
    }

    pub fn grid(&self) -> &DenseGrid {
        &self.0
    }

    pub fn into_grid(self) -> DenseGrid {
        self.0
    }
}

fn validate_disparity(x: &DenseGrid) -> Result<()> {
    for (index, &value) in x.data().iter().enumerate() {
        if !(value >= 0.0 && value < 1.0) {
            return Err(PlkError::InvalidDisparity { index, value });
        }
    }
    Ok(())
}

/// Elementwise disparity-to-depth map. Rejects values outside `[0, 1)`.
pub fn disparity_to_depth(x: &DenseGrid, cfg: &DepthParamConfig) -> Result<DenseGrid> {
    cfg.validate()?;
    validate_disparity(x)?;
    let mut out = x.zeros_like();
    for (o, &xi) in out.data_mut().iter_mut().zip(x.data()) {
        *o = cfg.depth_of(xi);
    }
    Ok(out)
}

/// Elementwise derivative of the map; strictly negative everywhere.
pub fn disparity_to_depth_grad(x: &DenseGrid, cfg: &DepthParamConfig) -> Result<DenseGrid> {
    cfg.validate()?;
    validate_disparity(x)?;
    let mut out = x.zeros_like();
    for (o, &xi) in out.data_mut().iter_mut().zip(x.data()) {
        *o = cfg.depth_grad_of(xi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cfg() -> DepthParamConfig {
        DepthParamConfig::new(0.01, 10.0, 1.0).unwrap()
    }

    #[test]
    fn boundary_gives_max_depth() {
        let x = DenseGrid::from_vec(&[1], 1, vec![0.0]).unwrap();
        let d = disparity_to_depth(&x, &unit_cfg()).unwrap();
        assert_eq!(d.data()[0], 100.0);
    }

    #[test]
    fn midpoint_substitution() {
        let x = DenseGrid::from_vec(&[1], 1, vec![0.5]).unwrap();
        let d = disparity_to_depth(&x, &unit_cfg()).unwrap();
        assert!((d.data()[0] - 1.0 / 5.005).abs() < 1e-15);
    }

    #[test]
    fn prior_scales_linearly() {
        let x = DenseGrid::from_vec(&[1], 1, vec![0.5]).unwrap();
        let d1 = disparity_to_depth(&x, &unit_cfg()).unwrap();
        let cfg2 = DepthParamConfig::new(0.01, 10.0, 2.0).unwrap();
        let d2 = disparity_to_depth(&x, &cfg2).unwrap();
        assert_eq!(d2.data()[0], 2.0 * d1.data()[0]);
    }

    #[test]
    fn grad_closed_form_and_sign() {
        let cfg = unit_cfg();
        let x = DenseGrid::from_vec(&[1], 1, vec![0.0]).unwrap();
        let g = disparity_to_depth_grad(&x, &cfg).unwrap();
        assert!((g.data()[0] - (-9.99 / 0.0001)).abs() < 1e-6);

        let xs = DenseGrid::from_vec(&[5], 1, vec![0.0, 0.1, 0.5, 0.9, 0.999]).unwrap();
        let g = disparity_to_depth_grad(&xs, &cfg).unwrap();
        assert!(g.data().iter().all(|&v| v < 0.0));
    }

    #[test]
    fn unit_disparity_rejected() {
        let x = DenseGrid::from_vec(&[2], 1, vec![0.3, 1.0]).unwrap();
        match disparity_to_depth(&x, &unit_cfg()) {
            Err(PlkError::InvalidDisparity { index, value }) => {
                assert_eq!(index, 1);
                assert_eq!(value, 1.0);
            }
            other => panic!("expected InvalidDisparity, got {other:?}"),
        }
    }

    #[test]
    fn output_range_is_exact() {
        let cfg = unit_cfg();
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let x = DenseGrid::from_vec(&[100], 1, xs).unwrap();
        let d = disparity_to_depth(&x, &cfg).unwrap();
        for &v in d.data() {
            assert!(v > cfg.min_depth() && v <= cfg.max_depth());
        }
    }

    #[test]
    fn monotone_decreasing_over_a_million_pairs() {
        use rand::{Rng, SeedableRng};
        let cfg = unit_cfg();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            let a: f64 = rng.random_range(0.0..1.0);
            let b: f64 = rng.random_range(0.0..1.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if lo < hi {
                assert!(cfg.depth_of(lo) > cfg.depth_of(hi));
            }
        }
    }

    #[test]
    fn disparity_of_inverts_depth_of() {
        let cfg = unit_cfg();
        for &x in &[0.0, 0.25, 0.5, 0.9] {
            let d = cfg.depth_of(x);
            assert!((cfg.disparity_of(d) - x).abs() < 1e-12);
        }
    }
}
