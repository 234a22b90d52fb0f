//! Area-preserving maps of the strip `S = ℝ × [0, π]` with `ω = sin y dx∧dy`.
//!
//! A map `Φ = (X, Y)` commutes with `x ↦ x + L`, preserves both boundary
//! lines and preserves `ω`. Maps are stored on the node grid
//! `x_i = i·L/nx`, `y_j = j·π/(ny − 1)`; `X − x` and `Y` are `L`-periodic.
//! Integrals use the periodic trapezoid rule in `x` and Gregory-corrected
//! trapezoid in `y`; `x`-derivatives are spectral and `y`-derivatives are 6th-order
//! finite differences.

pub mod generating;
pub mod synthetic;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::interp::{fornberg_weights, window_start, UniformDiff};
use crate::numerics::quadrature::{
    cumulative_integral, dot_pairwise, gregory_weights, pairwise_sum,
};
use crate::numerics::spectral::periodic_derivative;

pub use generating::{
    action_from_w, build_from_generating, calabi_from_w, fixed_point_with_signed_action,
    generating_from_map, strip_report, ActionSign, BranchFixedPoint, FixedPoint, GeneratingGrid,
    StripReport,
};

/// Tolerance for the closure of discrete one-forms.
pub const CLOSURE_TOL: f64 = 1e-5;
/// Flux below this counts as zero.
pub const ZERO_FLUX_TOL: f64 = 1e-6;
/// Sup-norm of a generating function below which the map counts as the identity.
pub const NON_IDENTITY_TOL: f64 = 1e-9;

const STENCIL: usize = 7;
const INTERP_WIDTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripGrid {
    pub l: f64,
    pub nx: usize,
    pub ny: usize,
}

impl StripGrid {
    pub fn new(l: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Precondition(format!(
                "period must be positive, got {l}"
            )));
        }
        if nx < 8 || ny < 8 {
            return Err(Error::Precondition(format!("grid {nx}×{ny} is too small")));
        }
        Ok(Self { l, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        self.l / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        PI / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            PI
        } else {
            j as f64 * self.hy()
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|k| f(self.x(k / self.ny), self.y(k % self.ny)))
            .collect()
    }

    pub fn column<'a>(&self, f: &'a [f64], i: usize) -> &'a [f64] {
        &f[i * self.ny..(i + 1) * self.ny]
    }

    /// `∬ f dx dy` over one period.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let wy = gregory_weights(self.ny, self.hy());
        let cols: Vec<f64> = (0..self.nx)
            .map(|i| dot_pairwise(self.column(f, i), &wy))
            .collect();
        self.hx() * pairwise_sum(&cols)
    }

    /// `∬ f ω` over one period.
    pub fn integrate_omega(&self, f: &[f64]) -> f64 {
        let g: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(k, v)| v * self.y(k % self.ny).sin())
            .collect();
        self.integrate(&g)
    }

    pub fn d_dy(&self, f: &[f64]) -> Vec<f64> {
        let op = UniformDiff::new(self.ny, self.hy(), 1, STENCIL);
        let mut out = vec![0.0; self.len()];
        out.par_chunks_mut(self.ny)
            .enumerate()
            .for_each(|(i, col)| {
                let src = self.column(f, i);
                for (j, c) in col.iter_mut().enumerate() {
                    *c = op.at(src, j);
                }
            });
        out
    }

    /// Spectral `∂_x` of an `L`-periodic array.
    pub fn d_dx(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let rows: Vec<Vec<f64>> = (0..self.ny)
            .into_par_iter()
            .map(|j| {
                let row: Vec<f64> = (0..self.nx).map(|i| f[self.idx(i, j)]).collect();
                periodic_derivative(&row, self.l)
            })
            .collect();
        for (j, row) in rows.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                out[self.idx(i, j)] = *v;
            }
        }
        out
    }

    /// Running `∫_0^y f` along every vertical.
    pub fn cumulative_y(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        out.par_chunks_mut(self.ny)
            .enumerate()
            .for_each(|(i, col)| {
                col.copy_from_slice(&cumulative_integral(self.column(f, i), self.hy()));
            });
        out
    }

    /// Tensor-product interpolation, periodic in `x`; returns `∂_x^a ∂_y^b f` for `a, b ≤ 2`.
    pub fn interp(&self, f: &[f64], x: f64, y: f64) -> [[f64; 3]; 3] {
        let hx = self.hx();
        let hy = self.hy();
        let width = INTERP_WIDTH.min(self.nx);
        let lo = (x / hx - 0.5 * (width as f64 - 1.0)).round() as i64;
        let xnodes: Vec<f64> = (0..width).map(|k| (lo + k as i64) as f64 * hx).collect();
        let wx = fornberg_weights(x, &xnodes, 2);
        let ys = window_start(self.ny, y / hy, INTERP_WIDTH);
        let ye = (ys + INTERP_WIDTH).min(self.ny);
        let ynodes: Vec<f64> = (ys..ye).map(|j| self.y(j)).collect();
        let wy = fornberg_weights(y, &ynodes, 2);
        let mut out = [[0.0; 3]; 3];
        for (k, _) in xnodes.iter().enumerate() {
            let i = (lo + k as i64).rem_euclid(self.nx as i64) as usize;
            let col = self.column(f, i);
            let mut dy = [0.0; 3];
            for (b, row) in wy.iter().enumerate() {
                dy[b] = row.iter().enumerate().map(|(m, w)| w * col[ys + m]).sum();
            }
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] += wx[a][k] * dy[b];
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    Birkhoff,
}

/// A strip map sampled on the node grid.
#[derive(Debug, Clone)]
pub struct StripMapGrid {
    pub grid: StripGrid,
    pub big_x: Vec<f64>,
    pub big_y: Vec<f64>,
    pub provenance: Provenance,
}

/// Grid residuals of the defining properties of a strip map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapInvariants {
    pub boundary_defect: f64,
    pub omega_residual: f64,
    pub min_d2y: f64,
}

impl StripMapGrid {
    pub fn new(
        grid: StripGrid,
        big_x: Vec<f64>,
        big_y: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if big_x.len() != grid.len() || big_y.len() != grid.len() {
            return Err(Error::Precondition(
                "array sizes do not match the grid".into(),
            ));
        }
        if big_x.iter().chain(&big_y).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("map contains non-finite values".into()));
        }
        Ok(Self {
            grid,
            big_x,
            big_y,
            provenance,
        })
    }

    pub fn identity(grid: StripGrid) -> Self {
        Self {
            big_x: grid.from_fn(|x, _| x),
            big_y: grid.from_fn(|_, y| y),
            grid,
            provenance: Provenance::Synthetic,
        }
    }

    /// `X − x`, which is `L`-periodic.
    pub fn displacement(&self) -> Vec<f64> {
        self.big_x
            .iter()
            .enumerate()
            .map(|(k, v)| v - self.grid.x(k / self.grid.ny))
            .collect()
    }

    /// `‖Φ − id‖∞` over the nodes.
    pub fn distance_to_identity(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .map(|k| {
                let dx = (self.big_x[k] - g.x(k / g.ny)).abs();
                let dy = (self.big_y[k] - g.y(k % g.ny)).abs();
                dx.max(dy)
            })
            .fold(0.0, f64::max)
    }

    pub fn d2y(&self) -> Vec<f64> {
        self.grid.d_dy(&self.big_y)
    }

    pub fn invariants(&self) -> MapInvariants {
        let g = &self.grid;
        let mut boundary: f64 = 0.0;
        for i in 0..g.nx {
            boundary = boundary
                .max(self.big_y[g.idx(i, 0)].abs())
                .max((self.big_y[g.idx(i, g.ny - 1)] - PI).abs());
        }
        let d = self.displacement();
        let xx = g.d_dx(&d);
        let xy = g.d_dy(&d);
        let yx = g.d_dx(&self.big_y);
        let yy = g.d_dy(&self.big_y);
        let mut omega: f64 = 0.0;
        for i in 0..g.nx {
            for j in 1..g.ny - 1 {
                let k = g.idx(i, j);
                let det = (1.0 + xx[k]) * yy[k] - xy[k] * yx[k];
                omega = omega.max((self.big_y[k].sin() * det - g.y(j).sin()).abs());
            }
        }
        MapInvariants {
            boundary_defect: boundary,
            omega_residual: omega,
            min_d2y: yy.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// `Φ(x, y)` off the grid by periodic tensor interpolation.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let g = &self.grid;
        let k = (x / g.l).floor();
        let x0 = x - k * g.l;
        let d = self.displacement();
        let dx = g.interp(&d, x0, y)[0][0];
        let yy = g.interp(&self.big_y, x0, y)[0][0];
        (x + dx, yy)
    }

    /// `self ∘ inner` on the grid of `inner`.
    pub fn compose(&self, inner: &StripMapGrid) -> Result<StripMapGrid> {
        if (self.grid.l - inner.grid.l).abs() > 1e-14 * self.grid.l {
            return Err(Error::Precondition("maps have different periods".into()));
        }
        let g = &self.grid;
        let d = self.displacement();
        let pts: Vec<(f64, f64)> = (0..inner.grid.len())
            .into_par_iter()
            .map(|k| {
                let (x1, y1) = (inner.big_x[k], inner.big_y[k].clamp(0.0, PI));
                let shift = (x1 / g.l).floor() * g.l;
                let xr = x1 - shift;
                (
                    x1 + g.interp(&d, xr, y1)[0][0],
                    g.interp(&self.big_y, xr, y1)[0][0],
                )
            })
            .collect();
        let (bx, by): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        StripMapGrid::new(inner.grid, bx, by, Provenance::Synthetic)
    }
}

/// The action `σ` on the node grid.
#[derive(Debug, Clone)]
pub struct ActionGrid {
    pub grid: StripGrid,
    pub sigma: Vec<f64>,
    /// Largest defect of `dσ = Φ*λ − λ` and of the upper boundary normalization.
    pub closure_residual: f64,
}

/// `(1/2L) ∬ (X − x) ω`.
pub fn flux(map: &StripMapGrid) -> f64 {
    map.grid.integrate_omega(&map.displacement()) / (2.0 * map.grid.l)
}

/// `½ ∫ x sin y dy` along the image of the vertical `{x = 0}`.
pub fn flux_boundary_path(map: &StripMapGrid) -> f64 {
    let g = &map.grid;
    let ycol = g.column(&map.big_y, 0);
    let xcol = g.column(&map.big_x, 0);
    let dy = UniformDiff::new(g.ny, g.hy(), 1, STENCIL).apply(ycol);
    let f: Vec<f64> = (0..g.ny).map(|j| xcol[j] * ycol[j].sin() * dy[j]).collect();
    0.5 * dot_pairwise(&f, &gregory_weights(g.ny, g.hy()))
}

/// Primitive of `Φ*λ − λ` with `σ(x, 0) = X(x, 0) − x − FLUX`.
///
/// Fails with a non-integrable-form error when the discrete one-form is not
/// closed to `tol`, which happens exactly when the input does not preserve `ω`.
pub fn action(map: &StripMapGrid, tol: f64) -> Result<ActionGrid> {
    let g = &map.grid;
    let fl = flux(map);
    let d = map.displacement();
    let xy = g.d_dy(&d);
    let xx = g.d_dx(&d);
    let sy: Vec<f64> = (0..g.len()).map(|k| map.big_y[k].cos() * xy[k]).collect();
    let mut sigma = g.cumulative_y(&sy);
    for i in 0..g.nx {
        let s0 = d[g.idx(i, 0)] - fl;
        for j in 0..g.ny {
            sigma[g.idx(i, j)] += s0;
        }
    }
    let sx = g.d_dx(&sigma);
    let mut residual: f64 = 0.0;
    for k in 0..g.len() {
        let target = map.big_y[k].cos() * (1.0 + xx[k]) - g.y(k % g.ny).cos();
        residual = residual.max((sx[k] - target).abs());
    }
    for i in 0..g.nx {
        let k = g.idx(i, g.ny - 1);
        residual = residual.max((sigma[k] - (-d[k] + fl)).abs());
    }
    if !(residual <= tol) {
        return Err(Error::NonIntegrableForm { residual });
    }
    Ok(ActionGrid {
        grid: *g,
        sigma,
        closure_residual: residual,
    })
}

/// `(1/2L) ∬ σ ω`, defined for zero-flux maps only.
pub fn calabi(map: &StripMapGrid) -> Result<f64> {
    let a = action(map, CLOSURE_TOL)?;
    calabi_of_action(map, &a)
}

pub fn calabi_of_action(map: &StripMapGrid, a: &ActionGrid) -> Result<f64> {
    let fl = flux(map);
    if fl.abs() >= ZERO_FLUX_TOL {
        return Err(Error::Precondition(format!(
            "Calabi invariant needs zero flux, got {fl:e}"
        )));
    }
    Ok(map.grid.integrate_omega(&a.sigma) / (2.0 * map.grid.l))
}

#[cfg(test)]
mod tests {
    use super::synthetic;
    use super::*;

    fn grid() -> StripGrid {
        StripGrid::new(2.0 * PI, 64, 96).unwrap()
    }

    #[test]
    fn identity_has_zero_invariants() {
        let m = StripMapGrid::identity(grid());
        assert_eq!(flux(&m), 0.0);
        assert_eq!(flux_boundary_path(&m), 0.0);
        let a = action(&m, CLOSURE_TOL).unwrap();
        assert!(a.sigma.iter().all(|s| *s == 0.0));
        assert_eq!(calabi(&m).unwrap(), 0.0);
    }

    #[test]
    fn translation_flux_and_action() {
        let c = 0.37;
        let m = synthetic::translation(grid(), c);
        assert!((flux(&m) - c).abs() < 1e-12);
        assert!((flux_boundary_path(&m) - c).abs() < 1e-12);
        let a = action(&m, CLOSURE_TOL).unwrap();
        assert!(a.sigma.iter().all(|s| s.abs() < 1e-12));
        assert!(matches!(calabi(&m), Err(Error::Precondition(_))));
    }

    #[test]
    fn shear_flux_matches_one_dimensional_quadrature() {
        let m = synthetic::shear(grid(), |y| y.sin());
        assert!((flux(&m) - PI / 4.0).abs() < 1e-8);
        assert!((flux_boundary_path(&m) - PI / 4.0).abs() < 1e-8);
    }

    #[test]
    fn non_area_preserving_grid_is_rejected() {
        let m = synthetic::non_area_preserving(grid(), 0.01);
        assert!(matches!(
            action(&m, CLOSURE_TOL),
            Err(Error::NonIntegrableForm { .. })
        ));
        assert!(m.invariants().omega_residual > 1e-3);
    }

    #[test]
    fn grid_quadrature() {
        let g = grid();
        let ones = vec![1.0; g.len()];
        assert!((g.integrate_omega(&ones) - 2.0 * g.l).abs() < 1e-9);
    }

    #[test]
    fn interpolation_is_periodic() {
        let g = grid();
        let f = g.from_fn(|x, y| x.sin() * y.cos());
        for (x, y) in [(0.1, 0.2), (6.2, 3.0), (3.3, PI)] {
            let v = g.interp(&f, x, y);
            assert!((v[0][0] - x.sin() * y.cos()).abs() < 1e-8);
            assert!((v[1][0] - x.cos() * y.cos()).abs() < 1e-6);
            assert!((v[0][1] + x.sin() * y.sin()).abs() < 1e-6);
        }
    }
}
