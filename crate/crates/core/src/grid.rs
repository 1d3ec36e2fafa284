//! Uniform Cartesian grids in one or two dimensions.
//!
//! Nodes include both endpoints: `x_i = min + i*h`, `h = (max - min)/(n - 1)`.
//! Spectral operators treat the grid as one period of length `n*h`. Values
//! are stored row-major with axis 0 slowest: `index = i0 * n1 + i1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// A point in the lab plane. One-dimensional grids use only the first entry
/// and keep the second at zero.
pub type Position = [f64; 2];

pub const MIN_NODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::InvalidGrid(format!("axis bounds [{min}, {max}] are not increasing")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("axis has {n} nodes, need at least {MIN_NODES}")));
        }
        Ok(Self { min, max, n })
    }

    /// Symmetric axis `[-half, half]`.
    pub fn centered(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, n)
    }

    fn collapsed() -> Self {
        Self { min: 0.0, max: 0.0, n: 1 }
    }

    pub fn spacing(&self) -> f64 {
        if self.n < 2 {
            return 1.0;
        }
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn extent(&self) -> f64 {
        self.max - self.min
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Cell `i` and fractional offset in `[0, 1]` such that `x` lies between
    /// nodes `i` and `i + 1`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !(x >= self.min && x <= self.max) {
            return None;
        }
        let s = (x - self.min) / self.spacing();
        let i = (s.floor() as usize).min(self.n - 2);
        Some((i, s - i as f64))
    }

    pub fn nearest(&self, x: f64) -> usize {
        let s = ((x - self.min) / self.spacing()).round();
        (s.max(0.0) as usize).min(self.n - 1)
    }

    /// Angular wavenumbers in FFT order for a period of `n*h`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        let dk = 2.0 * PI / (n as f64 * self.spacing());
        (0..n)
            .map(|j| {
                let j = j as i64;
                let s = if j < (n as i64 + 1) / 2 { j } else { j - n as i64 };
                s as f64 * dk
            })
            .collect()
    }

    fn shifted(&self, dx: f64) -> Self {
        Self { min: self.min + dx, max: self.max + dx, n: self.n }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Boundary {
    Periodic,
    /// Cos^2 ramp of the given width along every edge.
    Absorbing { width: f64 },
}

/// Up to four interpolation nodes with bilinear weights.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub index: [usize; 4],
    pub weight: [f64; 4],
    pub len: usize,
}

impl Stencil {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |k| (self.index[k], self.weight[k]))
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    axes: [Axis; 2],
    dims: usize,
    boundary: Boundary,
}

impl Grid {
    pub fn line(axis: Axis, boundary: Boundary) -> Result<Self> {
        let axis = Axis::new(axis.min, axis.max, axis.n)?;
        let g = Self { axes: [axis, Axis::collapsed()], dims: 1, boundary };
        g.check_boundary()?;
        Ok(g)
    }

    pub fn plane(a0: Axis, a1: Axis, boundary: Boundary) -> Result<Self> {
        let a0 = Axis::new(a0.min, a0.max, a0.n)?;
        let a1 = Axis::new(a1.min, a1.max, a1.n)?;
        let g = Self { axes: [a0, a1], dims: 2, boundary };
        g.check_boundary()?;
        Ok(g)
    }

    fn check_boundary(&self) -> Result<()> {
        if let Boundary::Absorbing { width } = self.boundary {
            for a in self.axes() {
                if !(width > 0.0 && width < a.extent() / 4.0) {
                    return Err(Error::InvalidGrid(format!(
                        "absorbing width {width} must be in (0, extent/4 = {})",
                        a.extent() / 4.0
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes[..self.dims]
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        let g = Self { boundary, ..self.clone() };
        g.check_boundary()?;
        Ok(g)
    }

    /// `[n0, n1]`, with `n1 = 1` on a line.
    pub fn shape(&self) -> [usize; 2] {
        [self.axes[0].n, self.axes[1].n]
    }

    pub fn len(&self) -> usize {
        self.axes[0].n * self.axes[1].n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> Position {
        let h1 = if self.dims == 2 { self.axes[1].spacing() } else { 0.0 };
        [self.axes[0].spacing(), h1]
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes().iter().map(Axis::spacing).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes().iter().map(Axis::spacing).product()
    }

    pub fn index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.axes[1].n + i1
    }

    pub fn unravel(&self, idx: usize) -> (usize, usize) {
        (idx / self.axes[1].n, idx % self.axes[1].n)
    }

    pub fn node(&self, idx: usize) -> Position {
        let (i0, i1) = self.unravel(idx);
        let y = if self.dims == 2 { self.axes[1].coord(i1) } else { 0.0 };
        [self.axes[0].coord(i0), y]
    }

    pub fn nodes(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    pub fn nearest(&self, p: Position) -> usize {
        let i0 = self.axes[0].nearest(p[0]);
        let i1 = if self.dims == 2 { self.axes[1].nearest(p[1]) } else { 0 };
        self.index(i0, i1)
    }

    pub fn contains(&self, p: Position) -> bool {
        self.axes().iter().zip(p.iter()).all(|(a, &x)| x >= a.min && x <= a.max)
    }

    pub fn center(&self) -> Position {
        let c1 = if self.dims == 2 { 0.5 * (self.axes[1].min + self.axes[1].max) } else { 0.0 };
        [0.5 * (self.axes[0].min + self.axes[0].max), c1]
    }

    /// Same grid with every coordinate shifted by `offset`.
    pub fn translated(&self, offset: Position) -> Self {
        let mut g = self.clone();
        g.axes[0] = g.axes[0].shifted(offset[0]);
        if self.dims == 2 {
            g.axes[1] = g.axes[1].shifted(offset[1]);
        }
        g
    }

    /// Node-for-node coincidence, up to roundoff in the bounds.
    pub fn matches(&self, other: &Self) -> bool {
        if self.dims != other.dims || self.shape() != other.shape() || self.boundary != other.boundary {
            return false;
        }
        self.axes().iter().zip(other.axes()).all(|(a, b)| {
            let tol = 1e-9 * a.spacing();
            (a.min - b.min).abs() <= tol && (a.max - b.max).abs() <= tol
        })
    }

    pub fn ensure_matches(&self, other: &Self) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Quadrature weights: uniform cells on a periodic grid, trapezoid
    /// otherwise.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let per_axis = |a: &Axis, periodic: bool| -> Vec<f64> {
            let h = a.spacing();
            (0..a.n)
                .map(|i| if !periodic && (i == 0 || i == a.n - 1) { 0.5 * h } else { h })
                .collect()
        };
        let periodic = self.boundary == Boundary::Periodic;
        let w0 = per_axis(&self.axes[0], periodic);
        if self.dims == 1 {
            return w0;
        }
        let w1 = per_axis(&self.axes[1], periodic);
        let mut w = Vec::with_capacity(self.len());
        for a in &w0 {
            for b in &w1 {
                w.push(a * b);
            }
        }
        w
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.quadrature_weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn stencil(&self, p: Position) -> Option<Stencil> {
        let (i0, f0) = self.axes[0].locate(p[0])?;
        if self.dims == 1 {
            return Some(Stencil { index: [i0, i0 + 1, 0, 0], weight: [1.0 - f0, f0, 0.0, 0.0], len: 2 });
        }
        let (i1, f1) = self.axes[1].locate(p[1])?;
        Some(Stencil {
            index: [self.index(i0, i1), self.index(i0, i1 + 1), self.index(i0 + 1, i1), self.index(i0 + 1, i1 + 1)],
            weight: [(1.0 - f0) * (1.0 - f1), (1.0 - f0) * f1, f0 * (1.0 - f1), f0 * f1],
            len: 4,
        })
    }

    /// Bilinear (linear on a line) interpolation; `None` outside the grid.
    pub fn interpolate(&self, values: &[f64], p: Position) -> Option<f64> {
        let s = self.stencil(p)?;
        Some(s.iter().map(|(i, w)| w * values[i]).sum())
    }

    pub fn absorbing_width(&self) -> Option<f64> {
        match self.boundary {
            Boundary::Absorbing { width } => Some(width),
            Boundary::Periodic => None,
        }
    }

    /// Per-step multiplicative mask for absorbing grids. The profile is a
    /// cos^2 ramp; the per-step factor is its eighth root so that an outgoing
    /// packet is eaten over several steps instead of being reflected by a
    /// hard wall.
    pub fn absorbing_mask(&self) -> Option<Vec<f64>> {
        let width = self.absorbing_width()?;
        let ramp = |a: &Axis, x: f64| -> f64 {
            let d = (x - a.min).min(a.max - x);
            if d >= width {
                1.0
            } else {
                let c = (0.5 * PI * (1.0 - d / width)).cos();
                (c * c).powf(0.125)
            }
        };
        Some(
            self.nodes()
                .map(|p| self.axes().iter().zip(p.iter()).map(|(a, &x)| ramp(a, x)).product())
                .collect(),
        )
    }

    /// True when `p` sits inside the absorbing layer, where guidance is no
    /// longer trusted.
    pub fn in_absorbing_layer(&self, p: Position) -> bool {
        match self.boundary {
            Boundary::Periodic => false,
            Boundary::Absorbing { width } => self
                .axes()
                .iter()
                .zip(p.iter())
                .any(|(a, &x)| x - a.min < width || a.max - x < width),
        }
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_nodes() {
        let g = Grid::line(Axis::new(-1.0, 1.0, 9).unwrap(), Boundary::Periodic).unwrap();
        assert_eq!(g.node(0)[0], -1.0);
        assert_eq!(g.node(8)[0], 1.0);
        assert!((g.spacing()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_and_inverted_axes() {
        assert!(Axis::new(0.0, 1.0, 4).is_err());
        assert!(Axis::new(1.0, 0.0, 16).is_err());
        let a = Axis::new(0.0, 1.0, 16).unwrap();
        assert!(Grid::line(a, Boundary::Absorbing { width: 0.3 }).is_err());
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = Grid::plane(Axis::new(0.0, 2.0, 11).unwrap(), Axis::new(-1.0, 3.0, 9).unwrap(), Boundary::Absorbing { width: 0.2 })
            .unwrap();
        let v: Vec<f64> = g.nodes().map(|p| 1.0 + p[0] + 2.0 * p[1]).collect();
        // integral over [0,2]x[-1,3] of 1 + x + 2y = 8 + 8 + 16
        assert!((g.integrate(&v) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn bilinear_reproduces_bilinear_functions() {
        let g = Grid::plane(Axis::new(0.0, 1.0, 8).unwrap(), Axis::new(0.0, 2.0, 12).unwrap(), Boundary::Periodic).unwrap();
        let f = |p: Position| 0.3 + p[0] - 2.0 * p[1] + 0.7 * p[0] * p[1];
        let v: Vec<f64> = g.nodes().map(f).collect();
        for p in [[0.13, 1.71], [0.999, 0.001], [1.0, 2.0]] {
            assert!((g.interpolate(&v, p).unwrap() - f(p)).abs() < 1e-12);
        }
        assert!(g.interpolate(&v, [1.01, 0.5]).is_none());
    }

    #[test]
    fn wavenumbers_fft_order() {
        let a = Axis::new(0.0, 7.0, 8).unwrap();
        let k = a.wavenumbers();
        let dk = 2.0 * PI / 8.0;
        assert_eq!(k[1], dk);
        assert_eq!(k[4], -4.0 * dk);
        assert_eq!(k[7], -dk);
    }
}
