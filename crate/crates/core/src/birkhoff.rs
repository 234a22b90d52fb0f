//! Birkhoff annulus over a planar simple closed geodesic and its first-return map.
//!
//! The annulus `Σ⁺` over `γ` consists of unit vectors
//! `cos y·γ̇(x) + sin y·γ̇⊥(x)`, with `x` the arclength along `γ` and
//! `y ∈ [0, π]`. Every closed geodesic used here lies in a model plane
//! through the origin (equators and meridians of a surface of revolution), so
//! `γ` is a great circle of the model sphere and crossing `γ` is a sign
//! change of the linear function `F(q) = n·q`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::{
    conjugate_points, polyline_self_intersects, sample_orbit, simplicity_check, ClosedOrbit,
    FlowVector, GeodesicFlow, GeodesicState, SHOOTING_TOL,
};
use crate::metric::MetricModel;
use crate::numerics::ode::{Dop853, Tolerance};
use crate::numerics::quadrature::gauss_legendre_on;
use crate::numerics::roots::brent;
use crate::strip::{
    action, calabi_of_action, flux, ActionGrid, Provenance, StripGrid, StripMapGrid, CLOSURE_TOL,
};

/// Events closer to tangency than this are not resolved.
pub const GRAZE_TOL: f64 = 1e-10;
const PANELS: usize = 256;
const PANEL_ORDER: usize = 10;

/// Arclength parametrization of a great circle of the model sphere.
#[derive(Debug, Clone)]
pub struct BaseCurve {
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub length: f64,
    panel_start: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
}

impl BaseCurve {
    fn new(m: &MetricModel, e1: Vector3<f64>, e2: Vector3<f64>) -> Self {
        let mut c = Self {
            e1,
            e2,
            normal: e1.cross(&e2),
            length: 0.0,
            panel_start: Vec::with_capacity(PANELS + 1),
            gl: gauss_legendre_on(PANEL_ORDER, 0.0, 1.0),
        };
        let hb = 2.0 * PI / PANELS as f64;
        let mut acc = vec![0.0];
        for k in 0..PANELS {
            let a = k as f64 * hb;
            acc.push(c.panel_integral(m, a, a + hb));
        }
        let mut s = 0.0;
        for piece in &acc {
            s += piece;
            c.panel_start.push(s);
        }
        c.length = s;
        c
    }

    fn point(&self, beta: f64) -> Vector3<f64> {
        self.e1 * beta.cos() + self.e2 * beta.sin()
    }

    fn tangent(&self, beta: f64) -> Vector3<f64> {
        -self.e1 * beta.sin() + self.e2 * beta.cos()
    }

    fn speed(&self, m: &MetricModel, beta: f64) -> f64 {
        m.norm(&self.point(beta), &self.tangent(beta))
    }

    fn panel_integral(&self, m: &MetricModel, a: f64, b: f64) -> f64 {
        let (x, w) = &self.gl;
        x.iter()
            .zip(w)
            .map(|(t, wt)| wt * (b - a) * self.speed(m, a + (b - a) * t))
            .sum()
    }

    /// Arclength from `β = 0`, for `β ∈ [0, 2π]`.
    pub fn arclength(&self, m: &MetricModel, beta: f64) -> f64 {
        let hb = 2.0 * PI / PANELS as f64;
        let k = ((beta / hb).floor() as usize).min(PANELS - 1);
        let a = k as f64 * hb;
        self.panel_start[k] + self.panel_integral(m, a, beta)
    }

    /// Angle `β` with arclength `x`, for `x ∈ [0, L]`.
    pub fn angle(&self, m: &MetricModel, x: f64) -> f64 {
        let mut beta = 2.0 * PI * x / self.length;
        for _ in 0..20 {
            let d = (self.arclength(m, beta) - x) / self.speed(m, beta);
            beta -= d;
            if d.abs() < 1e-15 {
                break;
            }
        }
        beta
    }

    /// Arclength coordinate of a point of the model sphere lying on the curve.
    pub fn coordinate(&self, m: &MetricModel, q: &Vector3<f64>) -> f64 {
        let beta = q.dot(&self.e2).atan2(q.dot(&self.e1)).rem_euclid(2.0 * PI);
        self.arclength(m, beta).min(self.length)
    }

    /// `g`-orthonormal frame `(γ̇, γ̇⊥)` at angle `β`.
    pub fn frame(&self, m: &MetricModel, beta: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let p = self.point(beta);
        let t = self.tangent(beta);
        let t = t / m.norm(&p, &t);
        let mut w = p.cross(&t);
        w -= t * m.inner(&p, &w, &t);
        w /= m.norm(&p, &w);
        (p, t, w)
    }
}

/// The annulus chart over a simple closed geodesic.
#[derive(Debug, Clone)]
pub struct Section {
    pub metric: MetricModel,
    pub orbit: ClosedOrbit,
    pub base: BaseCurve,
    /// Integrator tolerance for every return computation.
    pub tol: Tolerance,
}

/// First-return data of one section vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnData {
    pub big_x: f64,
    pub big_y: f64,
    pub tau: f64,
    pub tau_plus: f64,
    pub rho_plus: f64,
    pub rho: f64,
    /// Lifted polar angle of the Jacobi field at the return time.
    pub theta: f64,
    /// `u'(τ)`, which equals `∂_y Y`.
    pub d2y_jacobi: f64,
    pub flagged: bool,
}

impl ReturnData {
    fn flagged() -> Self {
        Self {
            big_x: f64::NAN,
            big_y: f64::NAN,
            tau: f64::NAN,
            tau_plus: f64::NAN,
            rho_plus: f64::NAN,
            rho: f64::NAN,
            theta: f64::NAN,
            d2y_jacobi: f64::NAN,
            flagged: true,
        }
    }
}

enum Crossing {
    Found(f64, FlowVector),
    Graze,
}

impl Section {
    /// Fails with a section-invalid error unless the orbit is simple and lies in a plane through the origin.
    pub fn new(m: &MetricModel, orbit: &ClosedOrbit) -> Result<Self> {
        if !simplicity_check(m, orbit) {
            return Err(Error::SectionInvalid(
                "closed geodesic is not simple".into(),
            ));
        }
        let defect = orbit.planarity_defect();
        if defect > 1e-8 {
            return Err(Error::SectionInvalid(format!(
                "closed geodesic is not planar (defect {defect:e})"
            )));
        }
        let e1 = orbit.start.p.normalize();
        let n = orbit.plane_normal();
        let e2 = n.cross(&e1);
        let base = BaseCurve::new(m, e1, e2);
        if (base.length - orbit.length).abs() > 1e-8 * orbit.length {
            return Err(Error::SectionInvalid(format!(
                "great circle length {} differs from orbit length {}",
                base.length, orbit.length
            )));
        }
        Ok(Self {
            metric: m.clone(),
            orbit: orbit.clone(),
            base,
            tol: SHOOTING_TOL,
        })
    }

    /// Fails unless `rtol ∈ [1e-12, 1e-6]`.
    pub fn with_tolerance(mut self, tol: Tolerance) -> Result<Self> {
        if !(1e-12..=1e-6).contains(&tol.rtol) || !(tol.atol > 0.0) {
            return Err(Error::Precondition(format!(
                "integration tolerance {} outside [1e-12, 1e-6]",
                tol.rtol
            )));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn length(&self) -> f64 {
        self.base.length
    }

    /// The section vector at annulus coordinates `(x, y)`.
    pub fn vector(&self, x: f64, y: f64) -> Result<GeodesicState> {
        let m = &self.metric;
        let beta = self.base.angle(m, x.rem_euclid(self.length()));
        let (p, t, w) = self.base.frame(m, beta);
        GeodesicState::new(m, p, t * y.cos() + w * y.sin())
    }

    /// Annulus coordinates `(x, y)` of a unit vector based on `γ`.
    pub fn coordinates(&self, s: &GeodesicState) -> (f64, f64) {
        let m = &self.metric;
        let x = self.base.coordinate(m, &s.p);
        let beta =
            s.p.dot(&self.base.e2)
                .atan2(s.p.dot(&self.base.e1))
                .rem_euclid(2.0 * PI);
        let (p, t, w) = self.base.frame(m, beta);
        (x, m.inner(&p, &s.v, &w).atan2(m.inner(&p, &s.v, &t)))
    }

    pub fn horizon(&self) -> f64 {
        3.0 * 2.0 * PI / self.metric.extremes().k_min.sqrt()
    }

    /// Next crossing of `γ` in the given sense after `st`'s current time.
    fn next_crossing(
        &self,
        st: &mut Dop853<'_, GeodesicFlow<'_>, 8>,
        upward: bool,
        horizon: f64,
    ) -> Result<Crossing> {
        let n = self.base.normal;
        let f = move |y: &FlowVector| n.dot(&y.fixed_rows::<3>(0).into_owned());
        let df = move |y: &FlowVector| n.dot(&y.fixed_rows::<3>(3).into_owned());
        let hit = |fa: f64, fb: f64| {
            if upward {
                fa < 0.0 && fb >= 0.0
            } else {
                fa > 0.0 && fb <= 0.0
            }
        };
        loop {
            if st.t() >= horizon {
                return Err(Error::ReturnFailure(format!(
                    "no crossing of γ within horizon {horizon:.3}"
                )));
            }
            st.step(horizon)?;
            let (ta, tb) = (st.t_prev(), st.t());
            let (ya, yb) = (*st.y_prev(), *st.y());
            let (mut fa, fb) = (f(&ya), f(&yb));
            if ta == 0.0 {
                fa = if upward { -0.0 } else { 0.0 };
                if upward {
                    continue;
                }
            }
            let (da, db) = (df(&ya), df(&yb));
            let mut pieces = vec![(ta, fa, tb, fb)];
            if da.signum() != db.signum() && da != 0.0 && db != 0.0 {
                let tm = brent(|t| df(&st.dense(t)), ta, tb, da, db, 1e-15, 200)?;
                let fm = f(&st.dense(tm));
                if fm.abs() < GRAZE_TOL {
                    return Ok(Crossing::Graze);
                }
                pieces = vec![(ta, fa, tm, fm), (tm, fm, tb, fb)];
            }
            for (t0, f0, t1, f1) in pieces {
                if hit(f0, f1) {
                    let (t, y) = st.locate(f, t0, t1, f0, f1, 1e-15)?;
                    return Ok(Crossing::Found(t, y));
                }
            }
        }
    }

    /// Return data of an interior section vector, `0 < y < π`.
    pub fn return_data(&self, x: f64, y: f64) -> Result<ReturnData> {
        if !(y > 0.0 && y < PI) {
            return Err(Error::Domain(format!(
                "interior return needs 0 < y < π, got {y}"
            )));
        }
        let m = &self.metric;
        let l = self.length();
        let s0 = self.vector(x, y)?;
        let sys = GeodesicFlow::new(m);
        let horizon = self.horizon();
        let mut st = Dop853::new(&sys, 0.0, s0.flow_vector(), self.tol, 1.0).with_h_max(0.5);
        let (tau_plus, y1) = match self.next_crossing(&mut st, false, horizon)? {
            Crossing::Found(t, y) => (t, y),
            Crossing::Graze => return Ok(ReturnData::flagged()),
        };
        let (tau, y2) = match self.next_crossing(&mut st, true, horizon)? {
            Crossing::Found(t, y) => (t, y),
            Crossing::Graze => return Ok(ReturnData::flagged()),
        };
        let q1 = GeodesicState::from_flow(&y1, tau_plus);
        let q2 = GeodesicState::from_flow(&y2, tau);
        let x1 = self.base.coordinate(m, &q1.p);
        let (x2, big_y) = self.coordinates(&q2);
        let rho_plus = (x1 - x).rem_euclid(l);
        let rho = rho_plus + (x2 - x1).rem_euclid(l);
        let (theta, r) = (y2[6], y2[7]);
        Ok(ReturnData {
            big_x: x + rho - l,
            big_y,
            tau,
            tau_plus,
            rho_plus,
            rho,
            theta,
            d2y_jacobi: r * theta.cos(),
            flagged: false,
        })
    }

    /// Boundary rows from the second conjugate point along `±γ̇`.
    pub fn boundary_data(&self, x: f64, upper: bool) -> Result<ReturnData> {
        let l = self.length();
        let s0 = self.vector(x, if upper { PI } else { 0.0 })?;
        let cp = conjugate_points(&self.metric, &s0, self.tol)?;
        let (rho, big_x, big_y, rho_plus) = if upper {
            (2.0 * l - cp.t2, x + l - cp.t2, PI, l - cp.t1)
        } else {
            (cp.t2, x + cp.t2 - l, 0.0, cp.t1)
        };
        Ok(ReturnData {
            big_x,
            big_y,
            tau: cp.t2,
            tau_plus: cp.t1,
            rho_plus,
            rho,
            theta: 2.0 * PI,
            d2y_jacobi: cp.r2,
            flagged: false,
        })
    }

    /// Time from a vector on the negative annulus to the next positive crossing.
    pub fn tau_minus(&self, s: &GeodesicState) -> Result<f64> {
        let sys = GeodesicFlow::new(&self.metric);
        let mut st = Dop853::new(&sys, 0.0, s.flow_vector(), self.tol, 1.0).with_h_max(0.5);
        match self.next_crossing(&mut st, true, self.horizon())? {
            Crossing::Found(t, _) => Ok(t),
            Crossing::Graze => Err(Error::ReturnFailure("grazing return".into())),
        }
    }

    /// True when the geodesic arcs from `(x, y)` to `Σ⁻` and from there to `Σ⁺` are injective.
    pub fn return_arcs_injective(&self, x: f64, y: f64, d: &ReturnData) -> Result<bool> {
        let s0 = self.vector(x, y)?;
        let ds = 0.01;
        let arc = sample_orbit(&self.metric, &s0, d.tau, ds)?;
        let split = ((d.tau_plus / d.tau) * arc.len() as f64).round() as usize;
        let first = &arc[..split.clamp(2, arc.len())];
        let second = &arc[split.saturating_sub(1).min(arc.len() - 2)..];
        Ok(!polyline_self_intersects(first, false, 1e-6)
            && !polyline_self_intersects(second, false, 1e-6))
    }
}

/// Return data on the node grid together with its section.
#[derive(Debug, Clone)]
pub struct BirkhoffGrid {
    pub section: Section,
    pub grid: StripGrid,
    pub nodes: Vec<ReturnData>,
    /// `None` when arcs were not sampled.
    pub arcs_injective: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub min_d2y: f64,
    pub min_d2y_jacobi: f64,
    pub discrepancy: f64,
    pub pass: bool,
}

impl BirkhoffGrid {
    /// Parallel sweep over the nodes; the result does not depend on the thread count.
    pub fn build(section: &Section, nx: usize, ny: usize) -> Result<Self> {
        let grid = StripGrid::new(section.length(), nx, ny)?;
        let nodes: Vec<Result<ReturnData>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / ny, k % ny);
                let x = grid.x(i);
                if j == 0 {
                    section.boundary_data(x, false)
                } else if j + 1 == ny {
                    section.boundary_data(x, true)
                } else {
                    section.return_data(x, grid.y(j))
                }
            })
            .collect();
        let nodes = nodes.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self {
            section: section.clone(),
            grid,
            nodes,
            arcs_injective: None,
        })
    }

    /// Self-intersection test on the return arcs of every `stride`-th node in each direction.
    pub fn check_arcs(&mut self, stride: usize) -> Result<bool> {
        let g = self.grid;
        let stride = stride.max(1);
        let picks: Vec<(usize, usize)> = (0..g.nx)
            .step_by(stride)
            .flat_map(|i| (1..g.ny - 1).step_by(stride).map(move |j| (i, j)))
            .collect();
        let ok: Vec<Result<bool>> = picks
            .par_iter()
            .map(|&(i, j)| {
                let d = &self.nodes[g.idx(i, j)];
                if d.flagged {
                    return Ok(true);
                }
                self.section.return_arcs_injective(g.x(i), g.y(j), d)
            })
            .collect();
        let mut all = true;
        for r in ok {
            all &= r?;
        }
        self.arcs_injective = Some(all);
        Ok(all)
    }

    pub fn length(&self) -> f64 {
        self.grid.l
    }

    pub fn flagged(&self) -> usize {
        self.nodes.iter().filter(|d| d.flagged).count()
    }

    pub fn field(&self, f: impl Fn(&ReturnData) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    pub fn tau(&self) -> Vec<f64> {
        self.field(|d| d.tau)
    }

    /// The lift `X = x + ρ − L`, which has zero flux.
    pub fn zero_flux_lift(&self) -> Result<StripMapGrid> {
        if self.flagged() > 0 {
            return Err(Error::ReturnFailure(format!(
                "{} nodes have grazing returns",
                self.flagged()
            )));
        }
        if self.arcs_injective == Some(false) {
            return Err(Error::PinchingViolation(
                "a sampled return arc intersects itself".into(),
            ));
        }
        let l = self.length();
        if let Some(d) = self
            .nodes
            .iter()
            .find(|d| !(d.rho > 0.0 && d.rho < 2.0 * l))
        {
            return Err(Error::PinchingViolation(format!(
                "angular advance {} outside (0, 2L)",
                d.rho
            )));
        }
        StripMapGrid::new(
            self.grid,
            self.field(|d| d.big_x),
            self.field(|d| d.big_y),
            Provenance::Birkhoff,
        )
    }

    /// `max |τ − L − σ|` over the nodes.
    pub fn tau_action_residual(&self, act: &ActionGrid) -> f64 {
        let l = self.length();
        self.nodes
            .iter()
            .zip(&act.sigma)
            .map(|(d, s)| (d.tau - l - s).abs())
            .fold(0.0, f64::max)
    }

    /// `|π·Area − L² − L·CAL| / (π·Area)`.
    pub fn area_identity_residual(&self, cal: f64, area: f64) -> f64 {
        let l = self.length();
        (PI * area - l * l - l * cal).abs() / (PI * area)
    }

    /// `∬ τ dλ`.
    pub fn contact_volume(&self) -> f64 {
        self.grid.integrate_omega(&self.tau())
    }

    pub fn contact_volume_residual(&self, area: f64) -> f64 {
        (self.contact_volume() - 2.0 * PI * area).abs() / (2.0 * PI * area)
    }

    pub fn monotonicity(&self, lift: &StripMapGrid) -> MonotonicityReport {
        let fd = lift.d2y();
        let jac = self.field(|d| d.d2y_jacobi);
        let min_d2y = fd.iter().copied().fold(f64::INFINITY, f64::min);
        let min_d2y_jacobi = jac.iter().copied().fold(f64::INFINITY, f64::min);
        let discrepancy = fd
            .iter()
            .zip(&jac)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        MonotonicityReport {
            min_d2y,
            min_d2y_jacobi,
            discrepancy,
            pass: min_d2y > 0.0 && min_d2y_jacobi > 0.0 && discrepancy < 1e-4,
        }
    }

    /// `max |τ(x, 0) − L − σ(x, 0)|` for the zero-flux lift.
    pub fn boundary_action_residual(&self, act: &ActionGrid) -> f64 {
        let g = self.grid;
        (0..g.nx)
            .map(|i| {
                let k = g.idx(i, 0);
                (self.nodes[k].tau - self.length() - act.sigma[k]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest gap between the return time on the boundary rows and its polynomial
    /// extrapolation from the first interior rows.
    pub fn boundary_extrapolation_residual(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for i in 0..g.nx {
            for (edge, dir) in [(0usize, 1i64), (g.ny - 1, -1i64)] {
                let vals: Vec<f64> = (1..=6)
                    .map(|s| self.nodes[g.idx(i, (edge as i64 + dir * s) as usize)].tau)
                    .collect();
                // Lagrange extrapolation to offset 0 from offsets 1..=6.
                let mut ext = 0.0;
                for (a, va) in vals.iter().enumerate() {
                    let xa = (a + 1) as f64;
                    let mut w = 1.0;
                    for b in 0..vals.len() {
                        if b != a {
                            let xb = (b + 1) as f64;
                            w *= -xb / (xa - xb);
                        }
                    }
                    ext += w * va;
                }
                worst = worst.max((ext - self.nodes[g.idx(i, edge)].tau).abs());
            }
        }
        worst
    }
}

/// Residuals of the identities linking the return map, its action and the metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeResiduals {
    pub area_preservation: f64,
    pub boundary_preservation: f64,
    pub tau_action: f64,
    pub boundary_action: f64,
    pub area_identity: f64,
    pub contact_volume: f64,
    pub action_closure: f64,
    pub monotonicity_discrepancy: f64,
    pub identity_distance: f64,
    pub boundary_extrapolation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffSummary {
    #[serde(rename = "L")]
    pub l: f64,
    pub nx: usize,
    pub ny: usize,
    pub flux: f64,
    pub cal: f64,
    pub area: f64,
    pub min_d2y: f64,
    pub min_tau: f64,
    pub residuals: BridgeResiduals,
    pub flagged_nodes: usize,
}

/// Lift, action and every bridge residual of a built grid.
pub fn summarize(
    grid: &BirkhoffGrid,
    area: f64,
) -> Result<(StripMapGrid, ActionGrid, BirkhoffSummary)> {
    let lift = grid.zero_flux_lift()?;
    let act = action(&lift, CLOSURE_TOL)?;
    let fl = flux(&lift);
    let cal = calabi_of_action(&lift, &act)?;
    let inv = lift.invariants();
    let mono = grid.monotonicity(&lift);
    let taus = grid.tau();
    let min_tau = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let summary = BirkhoffSummary {
        l: grid.length(),
        nx: grid.grid.nx,
        ny: grid.grid.ny,
        flux: fl,
        cal,
        area,
        min_d2y: mono.min_d2y,
        min_tau,
        residuals: BridgeResiduals {
            area_preservation: inv.omega_residual,
            boundary_preservation: inv.boundary_defect,
            tau_action: grid.tau_action_residual(&act),
            boundary_action: grid.boundary_action_residual(&act),
            area_identity: grid.area_identity_residual(cal, area),
            contact_volume: grid.contact_volume_residual(area),
            action_closure: act.closure_residual,
            monotonicity_discrepancy: mono.discrepancy,
            identity_distance: lift.distance_to_identity(),
            boundary_extrapolation: grid.boundary_extrapolation_residual(),
        },
        flagged_nodes: grid.flagged(),
    };
    Ok((lift, act, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{equator_seed, find_closed_geodesic, meridian_seed};

    fn section(m: &MetricModel, meridian: bool) -> Section {
        let seed = if meridian {
            meridian_seed(m)
        } else {
            equator_seed(m)
        };
        let orbit = find_closed_geodesic(m, &seed, 2.0 * PI).unwrap();
        Section::new(m, &orbit).unwrap()
    }

    #[test]
    fn round_sphere_return_is_identity() {
        let m = MetricModel::round(1.0).unwrap();
        let s = section(&m, false);
        let g = BirkhoffGrid::build(&s, 16, 17).unwrap();
        for (k, d) in g.nodes.iter().enumerate() {
            let (x, y) = (g.grid.x(k / 17), g.grid.y(k % 17));
            assert!((d.tau - 2.0 * PI).abs() < 1e-9, "{k}: {d:?}");
            assert!(
                (d.big_x - x).abs() < 1e-9 && (d.big_y - y).abs() < 1e-9,
                "{k}: {d:?}"
            );
            assert!((d.d2y_jacobi - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn base_curve_arclength_inverts() {
        let m = MetricModel::spheroid(1.3).unwrap();
        let s = section(&m, true);
        for x in [0.0, 0.3, 2.0, 5.5] {
            let b = s.base.angle(&m, x);
            assert!((s.base.arclength(&m, b) - x).abs() < 1e-13);
        }
        let v = s.vector(1.1, 0.7).unwrap();
        let (x, y) = s.coordinates(&v);
        assert!((x - 1.1).abs() < 1e-12 && (y - 0.7).abs() < 1e-12);
    }

    #[test]
    fn spheroid_equator_return_is_rotation_invariant() {
        let m = MetricModel::spheroid(1.03).unwrap();
        let s = section(&m, false);
        let a = s.return_data(0.4, PI / 2.0).unwrap();
        let b = s.return_data(3.9, PI / 2.0).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-9);
        assert!(((a.big_x - 0.4) - (b.big_x - 3.9)).abs() < 1e-9);
    }

    #[test]
    fn return_time_splits_at_the_negative_annulus() {
        let m = MetricModel::spheroid(1.03).unwrap();
        let s = section(&m, true);
        for (x, y) in [(0.5, 0.3), (2.0, 1.7), (4.1, 2.9)] {
            let d = s.return_data(x, y).unwrap();
            let v0 = s.vector(x, y).unwrap();
            let (mid, _) = crate::geodesic::flow_state(&m, &v0, d.tau_plus, SHOOTING_TOL).unwrap();
            let tm = s.tau_minus(&mid).unwrap();
            assert!((d.tau_plus + tm - d.tau).abs() < 1e-6, "{x} {y}");
            assert!(s.return_arcs_injective(x, y, &d).unwrap());
        }
    }

    #[test]
    fn interior_return_time_extends_to_conjugate_time() {
        let m = MetricModel::spheroid(1.03).unwrap();
        let s = section(&m, true);
        let g = BirkhoffGrid::build(&s, 16, 64).unwrap();
        assert!(g.boundary_extrapolation_residual() < 1e-4);
    }

    #[test]
    fn doubled_orbit_is_not_a_section() {
        let m = MetricModel::round(1.0).unwrap();
        let orbit = find_closed_geodesic(&m, &equator_seed(&m), 2.0 * PI).unwrap();
        assert!(matches!(
            Section::new(&m, &orbit.repeated(2)),
            Err(Error::SectionInvalid(_))
        ));
    }
}
