//! Generating functions `W(x, Y)` of monotone twist-free strip maps.
//!
//! A map with `∂_y Y > 0` is recovered from `W` by
//! `cos Y − cos y = ∂_x W(x, Y)` and `X − x = ∂_Y W(x, Y) / sin Y`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    action, flux, ActionGrid, Provenance, StripGrid, StripMapGrid, CLOSURE_TOL, NON_IDENTITY_TOL,
    ZERO_FLUX_TOL,
};
use crate::error::{Error, Result};
use crate::numerics::interp::{local_interp, uniform_interp};

const WIDTH: usize = 8;

/// `W` sampled at `(x_i, Y_j)` on the strip grid.
#[derive(Debug, Clone)]
pub struct GeneratingGrid {
    pub grid: StripGrid,
    pub w: Vec<f64>,
}

impl GeneratingGrid {
    pub fn new(grid: StripGrid, w: Vec<f64>) -> Result<Self> {
        if w.len() != grid.len() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(
                "generating function has the wrong size or non-finite entries".into(),
            ));
        }
        Ok(Self { grid, w })
    }

    pub fn sup_norm(&self) -> f64 {
        self.w.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `W` and its partial derivatives up to order two in each variable.
    pub fn eval(&self, x: f64, y: f64) -> [[f64; 3]; 3] {
        let x0 = x.rem_euclid(self.grid.l);
        self.grid.interp(&self.w, x0, y)
    }

    fn column_at(&self, i: usize, y: f64, m: usize) -> Vec<f64> {
        uniform_interp(
            0.0,
            self.grid.hy(),
            self.grid.column(&self.w, i),
            y,
            WIDTH,
            m,
        )
    }
}

/// Solves the generating equations node by node.
///
/// Fails with a not-generating error when `Y ↦ cos Y − ∂_x W(x, Y)` is not
/// strictly decreasing on the interior nodes.
pub fn build_from_generating(gen: &GeneratingGrid) -> Result<StripMapGrid> {
    let g = gen.grid;
    let w1 = g.d_dx(&gen.w);
    let w1y = g.d_dy(&w1);
    for i in 0..g.nx {
        for j in 1..g.ny - 1 {
            let slope = g.y(j).sin() + w1y[g.idx(i, j)];
            if !(slope > 0.0) {
                return Err(Error::NotGenerating(format!(
                    "cos Y − ∂ₓW is not decreasing at x = {:.6}, Y = {:.6}",
                    g.x(i),
                    g.y(j)
                )));
            }
        }
    }
    let cols: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..g.nx)
        .into_par_iter()
        .map(|i| {
            let x = g.x(i);
            let w1col = g.column(&w1, i);
            let mut bx = vec![0.0; g.ny];
            let mut by = vec![0.0; g.ny];
            bx[0] = x + gen.column_at(i, 0.0, 2)[2];
            bx[g.ny - 1] = x - gen.column_at(i, PI, 2)[2];
            by[g.ny - 1] = PI;
            for j in 1..g.ny - 1 {
                let target = g.y(j).cos();
                let f = |yy: f64| {
                    let d = uniform_interp(0.0, g.hy(), w1col, yy, WIDTH, 1);
                    (yy.cos() - target - d[0], -yy.sin() - d[1])
                };
                let yy = safeguarded_newton(f, g.y(j), 0.0, PI)?;
                let wy = gen.column_at(i, yy, 1)[1];
                by[j] = yy;
                bx[j] = x + wy / yy.sin();
            }
            Ok((bx, by))
        })
        .collect();
    let mut big_x = Vec::with_capacity(g.len());
    let mut big_y = Vec::with_capacity(g.len());
    for c in cols {
        let (bx, by) = c?;
        big_x.extend(bx);
        big_y.extend(by);
    }
    StripMapGrid::new(g, big_x, big_y, Provenance::Synthetic)
}

fn safeguarded_newton<F: Fn(f64) -> (f64, f64)>(f: F, start: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut y = start;
    for _ in 0..100 {
        let (v, d) = f(y);
        if v == 0.0 {
            return Ok(y);
        }
        if v > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let mut next = y - v / d;
        if !(next > lo && next < hi) || !d.is_finite() || d >= 0.0 {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() < 1e-15 || hi - lo < 1e-15 {
            return Ok(next);
        }
        y = next;
    }
    Err(Error::NoConvergence {
        iterations: 100,
        residual: f(y).0.abs(),
    })
}

/// Integrates `dW = (cos Y − cos y) dx + (X − x) sin Y dY` along the graph of the map
/// and resamples on the uniform `Y` grid.
pub fn generating_from_map(map: &StripMapGrid) -> Result<GeneratingGrid> {
    let g = map.grid;
    let yy = g.d_dy(&map.big_y);
    if let Some(k) = (0..g.len()).find(|k| !(yy[*k] > 0.0)) {
        return Err(Error::Precondition(format!(
            "map is not monotone: ∂_yY = {:e} at node ({}, {})",
            yy[k],
            k / g.ny,
            k % g.ny
        )));
    }
    let fl = flux(map);
    let d = map.displacement();
    let yx = g.d_dx(&map.big_y);
    let dwy: Vec<f64> = (0..g.len())
        .map(|k| d[k] * map.big_y[k].sin() * yy[k])
        .collect();
    let mut wt = g.cumulative_y(&dwy);
    wt.iter_mut().for_each(|v| *v -= fl);
    let wx = g.d_dx(&wt);
    let mut residual: f64 = 0.0;
    for k in 0..g.len() {
        let y = g.y(k % g.ny);
        let target = map.big_y[k].cos() - y.cos() + d[k] * map.big_y[k].sin() * yx[k];
        residual = residual.max((wx[k] - target).abs());
    }
    for i in 0..g.nx {
        residual = residual.max((wt[g.idx(i, g.ny - 1)] - fl).abs());
    }
    if !(residual <= CLOSURE_TOL) {
        return Err(Error::NonIntegrableForm { residual });
    }
    let mut w = vec![0.0; g.len()];
    w.par_chunks_mut(g.ny).enumerate().for_each(|(i, col)| {
        let ys = g.column(&map.big_y, i);
        let ws = g.column(&wt, i);
        col[0] = ws[0];
        col[g.ny - 1] = ws[g.ny - 1];
        for (j, c) in col.iter_mut().enumerate().take(g.ny - 1).skip(1) {
            *c = local_interp(ys, ws, g.y(j), WIDTH).0;
        }
    });
    GeneratingGrid::new(g, w)
}

fn check_compatible(gen: &GeneratingGrid, map: &StripMapGrid) -> Result<()> {
    if gen.grid != map.grid {
        return Err(Error::Precondition(
            "generating function and map live on different grids".into(),
        ));
    }
    Ok(())
}

/// `σ(x, y) = W(x, Y(x, y)) + (X − x) cos Y`.
pub fn action_from_w(gen: &GeneratingGrid, map: &StripMapGrid) -> Result<ActionGrid> {
    check_compatible(gen, map)?;
    let g = map.grid;
    let d = map.displacement();
    let sigma: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let yv = map.big_y[k].clamp(0.0, PI);
            gen.column_at(k / g.ny, yv, 0)[0] + d[k] * yv.cos()
        })
        .collect();
    Ok(ActionGrid {
        grid: g,
        sigma,
        closure_residual: 0.0,
    })
}

/// `(1/2L) ∬ (W(x, y) + W(x, Y(x, y))) ω`, defined for zero-flux maps.
pub fn calabi_from_w(gen: &GeneratingGrid, map: &StripMapGrid) -> Result<f64> {
    check_compatible(gen, map)?;
    let fl = flux(map);
    if fl.abs() >= ZERO_FLUX_TOL {
        return Err(Error::Precondition(format!(
            "Calabi invariant needs zero flux, got {fl:e}"
        )));
    }
    let g = map.grid;
    let f: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|k| gen.w[k] + gen.column_at(k / g.ny, map.big_y[k].clamp(0.0, PI), 0)[0])
        .collect();
    Ok(g.integrate_omega(&f) / (2.0 * g.l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSign {
    Negative,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub sigma_from_action: f64,
    pub map_defect: f64,
    pub calabi: f64,
}

/// Interior extremum of `W`, which is a fixed point of the map with action of the requested sign.
///
/// `Negative` needs `CAL ≤ 0` and returns the minimum of `W`; `Positive`
/// needs `CAL ≥ 0` and returns the maximum.
pub fn fixed_point_with_signed_action(
    map: &StripMapGrid,
    gen: &GeneratingGrid,
    sign: ActionSign,
) -> Result<FixedPoint> {
    check_compatible(gen, map)?;
    let g = map.grid;
    if let Some(k) = map.d2y().iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Precondition(format!(
            "map is not monotone at node {k}"
        )));
    }
    if gen.sup_norm() <= NON_IDENTITY_TOL {
        return Err(Error::Precondition(
            "generating function vanishes; the map is the identity".into(),
        ));
    }
    let cal = calabi_from_w(gen, map)?;
    let s = match sign {
        ActionSign::Negative if cal > 0.0 => {
            return Err(Error::Precondition(format!(
                "negative branch needs CAL ≤ 0, got {cal:e}"
            )))
        }
        ActionSign::Positive if cal < 0.0 => {
            return Err(Error::Precondition(format!(
                "positive branch needs CAL ≥ 0, got {cal:e}"
            )))
        }
        ActionSign::Negative => 1.0,
        ActionSign::Positive => -1.0,
    };
    let mut best = (0, 1, f64::INFINITY);
    for i in 0..g.nx {
        for j in 1..g.ny - 1 {
            let v = s * gen.w[g.idx(i, j)];
            if v < best.2 {
                best = (i, j, v);
            }
        }
    }
    if !(best.2 < 0.0) {
        return Err(Error::InternalConsistency(format!(
            "no interior extremum of W with the expected sign (best {:e})",
            -s * best.2
        )));
    }
    let (mut x, mut y) = (g.x(best.0), g.y(best.1));
    let radius = 2.0 * g.hx().max(g.hy());
    let (x0, y0) = (x, y);
    for _ in 0..30 {
        let e = gen.eval(x, y);
        let grad = Vector2::new(e[1][0], e[0][1]);
        let hess = Matrix2::new(e[2][0], e[1][1], e[1][1], e[0][2]);
        let step = match hess
            .svd(true, true)
            .pseudo_inverse(1e-8 * hess.norm().max(1e-300))
        {
            Ok(p) => p * grad,
            Err(_) => break,
        };
        let nx = x - step[0];
        let ny = y - step[1];
        if (nx - x0).abs() > radius || (ny - y0).abs() > radius || !(ny > 0.0 && ny < PI) {
            break;
        }
        if s * gen.eval(nx, ny)[0][0] > s * gen.eval(x, y)[0][0] + 1e-15 {
            break;
        }
        x = nx;
        y = ny;
        if step.norm() < 1e-14 {
            break;
        }
    }
    let sigma = gen.eval(x, y)[0][0];
    let (bx, by) = map.eval(x, y);
    let map_defect = (bx - x).abs().max((by - y).abs());
    if map_defect > 1e-6 {
        return Err(Error::InternalConsistency(format!(
            "extremum of W at ({x:.6}, {y:.6}) is not fixed: defect {map_defect:e}"
        )));
    }
    let sigma_from_action = match action(map, CLOSURE_TOL) {
        Ok(a) => g.interp(&a.sigma, x.rem_euclid(g.l), y)[0][0],
        Err(_) => f64::NAN,
    };
    Ok(FixedPoint {
        x,
        y,
        sigma,
        sigma_from_action,
        map_defect,
        calabi: cal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchFixedPoint {
    pub branch: ActionSign,
    #[serde(flatten)]
    pub point: FixedPoint,
}

/// Flux, Calabi invariant, extrema of `W` and the signed fixed points of a monotone map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripReport {
    pub flux: f64,
    pub flux_boundary_path: f64,
    /// `None` when the flux is not zero or the action one-form does not close.
    pub cal: Option<f64>,
    pub cal_from_w: Option<f64>,
    #[serde(rename = "minW")]
    pub min_w: f64,
    #[serde(rename = "maxW")]
    pub max_w: f64,
    pub omega_residual: f64,
    /// `max_x |W(x,π) − W(x,0) − 2·FLUX|`.
    pub boundary_jump_residual: f64,
    /// `max |W − W'|` where `W'` is recovered from the map.
    pub round_trip_w: f64,
    /// `‖Φ − Φ'‖∞` where `Φ'` is rebuilt from `W`.
    pub round_trip_map: f64,
    pub fixed_points: Vec<BranchFixedPoint>,
    /// The sign of the action at the located fixed points matches the sign of `CAL`.
    pub fixed_point_signs_ok: bool,
}

pub fn strip_report(map: &StripMapGrid, gen: &GeneratingGrid) -> Result<StripReport> {
    check_compatible(gen, map)?;
    let fl = flux(map);
    let cal = action(map, CLOSURE_TOL)
        .and_then(|a| super::calabi_of_action(map, &a))
        .ok();
    let cal_from_w = calabi_from_w(gen, map).ok();
    let back = generating_from_map(map)?;
    let round_trip_w = back
        .w
        .iter()
        .zip(&gen.w)
        .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    let rebuilt = build_from_generating(gen)?;
    let round_trip_map = rebuilt
        .big_x
        .iter()
        .zip(&map.big_x)
        .chain(rebuilt.big_y.iter().zip(&map.big_y))
        .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    let g = gen.grid;
    let boundary_jump_residual = (0..g.nx)
        .map(|i| (gen.w[g.idx(i, g.ny - 1)] - gen.w[g.idx(i, 0)] - 2.0 * fl).abs())
        .fold(0.0, f64::max);
    let mut fixed_points = Vec::new();
    let mut ok = true;
    if let Some(c) = cal_from_w.or(cal) {
        let needs_check = gen.sup_norm() > 1e-6;
        for branch in [ActionSign::Negative, ActionSign::Positive] {
            let applicable = match branch {
                ActionSign::Negative => c <= 0.0,
                ActionSign::Positive => c >= 0.0,
            };
            if !applicable || !needs_check {
                continue;
            }
            match fixed_point_with_signed_action(map, gen, branch) {
                Ok(point) => {
                    let sign_ok = match branch {
                        ActionSign::Negative => point.sigma < 0.0,
                        ActionSign::Positive => point.sigma > 0.0,
                    };
                    ok &= sign_ok;
                    fixed_points.push(BranchFixedPoint { branch, point });
                }
                Err(_) => ok = false,
            }
        }
    }
    Ok(StripReport {
        flux: fl,
        flux_boundary_path: super::flux_boundary_path(map),
        cal,
        cal_from_w,
        min_w: gen.w.iter().copied().fold(f64::INFINITY, f64::min),
        max_w: gen.w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        omega_residual: map.invariants().omega_residual,
        boundary_jump_residual,
        round_trip_w,
        round_trip_map,
        fixed_points,
        fixed_point_signs_ok: ok,
    })
}
