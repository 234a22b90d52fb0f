//! Geodesic flow, Jacobi fields in polar form, conjugate points and closed orbits.
//!
//! The flow is integrated chart-free on the model sphere: the state is the
//! model point `p ∈ S² ⊂ ℝ³`, a `g`-unit tangent vector `v`, and the polar
//! coordinates `(θ, r)` of the normal Jacobi field with `u(0) = 0, u'(0) = 1`,
//! where `u = r sin θ` and `u' = r cos θ`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Matrix2, SVector, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::metric::{MetricModel, SurfacePoint};
use crate::numerics::ode::{integrate, integrate_final, Dop853, OdeSystem, Tolerance};

pub type FlowVector = SVector<f64, 8>;

/// Tolerances used when a closure residual near `1e-10` is required.
pub const SHOOTING_TOL: Tolerance = Tolerance {
    rtol: 1e-12,
    atol: 1e-14,
};

const CLOSURE_TARGET: f64 = 1e-10;
const MAX_NEWTON: usize = 50;

/// A point on the sphere with a `g`-unit direction and an arclength stamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiPolarState {
    pub theta: f64,
    pub r: f64,
    pub t: f64,
}

impl JacobiPolarState {
    pub fn u(&self) -> f64 {
        self.r * self.theta.sin()
    }

    pub fn du(&self) -> f64 {
        self.r * self.theta.cos()
    }
}

impl GeodesicState {
    /// Projects `p` to the sphere and `v` to a `g`-unit tangent vector.
    pub fn new(m: &MetricModel, p: Vector3<f64>, v: Vector3<f64>) -> Result<Self> {
        let n = p.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(format!("base point {p:?}")));
        }
        let p = p / n;
        let v = v - p * p.dot(&v);
        let speed = m.norm(&p, &v);
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::Domain(format!("direction {v:?} is not tangent")));
        }
        Ok(Self {
            p,
            v: v / speed,
            t: 0.0,
        })
    }

    /// Direction `cos α ê_θ + sin α ê_φ` at chart point `(θ, φ)`.
    pub fn from_chart(m: &MetricModel, theta: f64, phi: f64, alpha: f64) -> Result<Self> {
        let sp = SurfacePoint::from_chart(theta, phi)?;
        let (e_th, e_ph) = chart_frame(m, &sp);
        Self::new(m, sp.model, e_th * alpha.cos() + e_ph * alpha.sin())
    }

    pub fn point(&self) -> SurfacePoint {
        SurfacePoint::from_model(self.p).expect("state lies on the sphere")
    }

    /// Components of the direction in the `g`-orthonormal chart frame `(ê_θ, ê_φ)`.
    pub fn chart_direction(&self, m: &MetricModel) -> (f64, f64) {
        let (e_th, e_ph) = chart_frame(m, &self.point());
        (
            m.inner(&self.p, &self.v, &e_th),
            m.inner(&self.p, &self.v, &e_ph),
        )
    }

    pub fn speed_defect(&self, m: &MetricModel) -> f64 {
        (m.inner(&self.p, &self.v, &self.v) - 1.0).abs()
    }

    pub fn reversed(&self) -> Self {
        Self {
            v: -self.v,
            ..*self
        }
    }

    pub fn flow_vector(&self) -> FlowVector {
        let mut y = FlowVector::zeros();
        y.fixed_rows_mut::<3>(0).copy_from(&self.p);
        y.fixed_rows_mut::<3>(3).copy_from(&self.v);
        y[6] = 0.0;
        y[7] = 1.0;
        y
    }

    pub fn from_flow(y: &FlowVector, t: f64) -> Self {
        Self {
            p: y.fixed_rows::<3>(0).into_owned(),
            v: y.fixed_rows::<3>(3).into_owned(),
            t,
        }
    }

    /// Distance in position and direction, measured in model coordinates.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.p - other.p).norm().max((self.v - other.v).norm())
    }
}

/// `g`-unit vectors along `∂_θ` and `∂_φ`; at the poles `ê_φ` is the limit direction.
fn chart_frame(m: &MetricModel, sp: &SurfacePoint) -> (Vector3<f64>, Vector3<f64>) {
    let (t, f) = (sp.theta, sp.phi);
    let e_th = Vector3::new(t.cos() * f.cos(), t.cos() * f.sin(), -t.sin());
    let e_ph = Vector3::new(-f.sin(), f.cos(), 0.0);
    let p = sp.model;
    (e_th / m.norm(&p, &e_th), e_ph / m.norm(&p, &e_ph))
}

pub fn state_from_flow(y: &FlowVector, t: f64) -> (GeodesicState, JacobiPolarState) {
    (
        GeodesicState::from_flow(y, t),
        JacobiPolarState {
            theta: y[6],
            r: y[7],
            t,
        },
    )
}

/// Geodesic equations on the embedded model sphere together with the polar Jacobi equations.
pub struct GeodesicFlow<'a> {
    pub m: &'a MetricModel,
}

impl<'a> GeodesicFlow<'a> {
    pub fn new(m: &'a MetricModel) -> Self {
        Self { m }
    }

    pub fn acceleration(&self, p: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        let z = p.z;
        let (psi, dpsi) = self.m.psi_and_derivative(z);
        let vz2 = v.z * v.z;
        let a2 = 1.0 + psi * (1.0 - z * z);
        let mu = (-(1.0 + psi) * v.norm_squared() + 0.5 * dpsi * vz2 * z) / a2;
        let mut a = p * mu;
        a.z -= (mu * psi * z + 0.5 * dpsi * vz2) / (1.0 + psi);
        a
    }
}

impl OdeSystem<8> for GeodesicFlow<'_> {
    fn rhs(&self, _t: f64, y: &FlowVector) -> FlowVector {
        let p = y.fixed_rows::<3>(0).into_owned();
        let v = y.fixed_rows::<3>(3).into_owned();
        let a = self.acceleration(&p, &v);
        let k = self.m.curvature_at_z(p.z / p.norm());
        let (s, c) = y[6].sin_cos();
        let mut dy = FlowVector::zeros();
        dy.fixed_rows_mut::<3>(0).copy_from(&v);
        dy.fixed_rows_mut::<3>(3).copy_from(&a);
        dy[6] = c * c + k * s * s;
        dy[7] = y[7] * (1.0 - k) * s * c;
        dy
    }

    fn project(&self, y: &mut FlowVector) {
        let p = y.fixed_rows::<3>(0).normalize();
        let mut v = y.fixed_rows::<3>(3).into_owned();
        v -= p * p.dot(&v);
        v /= self.m.norm(&p, &v);
        y.fixed_rows_mut::<3>(0).copy_from(&p);
        y.fixed_rows_mut::<3>(3).copy_from(&v);
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    pub jacobi: Vec<JacobiPolarState>,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// `(t, θ_chart, φ_chart, dir1, dir2)` per accepted step.
    pub fn chart_rows(&self, m: &MetricModel) -> Vec<[f64; 5]> {
        self.states
            .iter()
            .map(|s| {
                let sp = s.point();
                let (d1, d2) = s.chart_direction(m);
                [s.t, sp.theta, sp.phi, d1, d2]
            })
            .collect()
    }
}

fn check_tol(tol: Tolerance) -> Result<()> {
    if !(1e-12..=1e-6).contains(&tol.rtol) || !(tol.atol > 0.0) {
        return Err(Error::Precondition(format!(
            "relative tolerance {} outside [1e-12, 1e-6]",
            tol.rtol
        )));
    }
    Ok(())
}

/// Adaptive integration of the flow from `s0` for arclength `t_end`.
pub fn integrate_geodesic(
    m: &MetricModel,
    s0: &GeodesicState,
    t_end: f64,
    tol: Tolerance,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Precondition(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    check_tol(tol)?;
    let sys = GeodesicFlow::new(m);
    let out = integrate(&sys, s0.t, s0.flow_vector(), s0.t + t_end, tol)?;
    let (states, jacobi) = out.iter().map(|(t, y)| state_from_flow(y, *t)).unzip();
    Ok(Trajectory { states, jacobi })
}

/// Flow by a signed time `dt` (negative runs backwards).
pub fn flow_state(
    m: &MetricModel,
    s0: &GeodesicState,
    dt: f64,
    tol: Tolerance,
) -> Result<(GeodesicState, JacobiPolarState)> {
    let sys = GeodesicFlow::new(m);
    let y = integrate_final(&sys, s0.t, s0.flow_vector(), s0.t + dt, tol)?;
    Ok(state_from_flow(&y, s0.t + dt))
}

/// `g(v, ∂_φ)`: the angular momentum about the symmetry axis.
pub fn clairaut_invariant(m: &MetricModel, s: &GeodesicState) -> f64 {
    let d_phi = Vector3::new(-s.p.y, s.p.x, 0.0);
    m.inner(&s.p, &s.v, &d_phi)
}

pub fn jacobi_polar_advance(
    m: &MetricModel,
    base: &GeodesicState,
    t_end: f64,
) -> Result<JacobiPolarState> {
    if !(t_end >= 0.0) {
        return Err(Error::Precondition(format!(
            "t_end must be non-negative, got {t_end}"
        )));
    }
    if t_end == 0.0 {
        return Ok(JacobiPolarState {
            theta: 0.0,
            r: 1.0,
            t: 0.0,
        });
    }
    let (_, j) = flow_state(m, base, t_end, Tolerance::default())?;
    Ok(JacobiPolarState { t: t_end, ..j })
}

/// First and second conjugate points along a geodesic.
#[derive(Debug, Clone, Copy)]
pub struct ConjugatePoints {
    pub t1: f64,
    pub t2: f64,
    pub state1: GeodesicState,
    pub state2: GeodesicState,
    /// Polar radius at `t2`, equal to `u'(t2)` since `θ(t2) = 2π`.
    pub r2: f64,
}

fn conjugate_horizon(m: &MetricModel, order: f64) -> f64 {
    order * PI / m.extremes().k_min.sqrt() * 1.05 + 1e-3
}

pub fn conjugate_points(
    m: &MetricModel,
    base: &GeodesicState,
    tol: Tolerance,
) -> Result<ConjugatePoints> {
    let sys = GeodesicFlow::new(m);
    let horizon = conjugate_horizon(m, 2.0);
    let mut st = Dop853::new(&sys, 0.0, base.flow_vector(), tol, 1.0).with_h_max(0.5);
    let mut found: Vec<(f64, FlowVector)> = Vec::with_capacity(2);
    while found.len() < 2 {
        if st.t() >= horizon {
            return Err(Error::HorizonExceeded {
                horizon,
                what: "second conjugate point".into(),
            });
        }
        st.step(horizon)?;
        let target = (found.len() + 1) as f64 * PI;
        let (ga, gb) = (st.y_prev()[6] - target, st.y()[6] - target);
        if ga < 0.0 && gb >= 0.0 {
            let hit = st.locate(|y| y[6] - target, st.t_prev(), st.t(), ga, gb, 1e-15)?;
            found.push(hit);
            let target2 = 2.0 * PI;
            let (ga2, gb2) = (st.y_prev()[6] - target2, st.y()[6] - target2);
            if found.len() == 1 && ga2 < 0.0 && gb2 >= 0.0 {
                found.push(st.locate(|y| y[6] - target2, st.t_prev(), st.t(), ga2, gb2, 1e-15)?);
            }
        }
    }
    let (t1, y1) = found[0];
    let (t2, y2) = found[1];
    Ok(ConjugatePoints {
        t1,
        t2,
        state1: GeodesicState::from_flow(&y1, t1),
        state2: GeodesicState::from_flow(&y2, t2),
        r2: y2[7],
    })
}

/// Smallest `t` with `θ(t) = order·π`.
pub fn conjugate_time(m: &MetricModel, base: &GeodesicState, order: u32) -> Result<f64> {
    match order {
        1 => Ok(conjugate_points(m, base, Tolerance::default())?.t1),
        2 => Ok(conjugate_points(m, base, Tolerance::default())?.t2),
        _ => Err(Error::Precondition(format!(
            "order must be 1 or 2, got {order}"
        ))),
    }
}

/// A closed geodesic refined by shooting.
#[derive(Debug, Clone)]
pub struct ClosedOrbit {
    pub start: GeodesicState,
    pub length: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Model positions sampled uniformly in arclength, start excluded at the end.
    pub samples: Vec<Vector3<f64>>,
}

impl ClosedOrbit {
    /// The same curve traversed `k` times.
    pub fn repeated(&self, k: usize) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len() * k);
        for _ in 0..k {
            samples.extend_from_slice(&self.samples);
        }
        Self {
            length: self.length * k as f64,
            samples,
            ..self.clone()
        }
    }

    /// Normal of the model plane through the origin containing the start data.
    pub fn plane_normal(&self) -> Vector3<f64> {
        self.start.p.cross(&self.start.v).normalize()
    }

    /// Largest distance of a sample from that plane.
    pub fn planarity_defect(&self) -> f64 {
        let n = self.plane_normal();
        self.samples
            .iter()
            .map(|q| n.dot(q).abs())
            .fold(0.0, f64::max)
    }
}

struct Shooter<'a> {
    m: &'a MetricModel,
    p0: Vector3<f64>,
    a0: Vector3<f64>,
    n0: Vector3<f64>,
    guess: f64,
}

impl Shooter<'_> {
    fn state(&self, s: f64, a: f64) -> Result<GeodesicState> {
        let p = self.p0 * s.cos() + self.n0 * s.sin();
        let e = -self.p0 * s.sin() + self.n0 * s.cos();
        GeodesicState::new(self.m, p, self.a0 * a.cos() + e * a.sin())
    }

    /// Next crossing of the plane `q·a0 = 0` in the starting sense, on the starting side.
    fn first_return(&self, start: &GeodesicState) -> Result<(f64, GeodesicState)> {
        let sys = GeodesicFlow::new(self.m);
        let horizon = 2.0 * self.guess + 1.0;
        let mut st =
            Dop853::new(&sys, 0.0, start.flow_vector(), SHOOTING_TOL, 1.0).with_h_max(0.25);
        let a0 = self.a0;
        let p0 = self.p0;
        let g = move |y: &FlowVector| a0.dot(&y.fixed_rows::<3>(0).into_owned());
        while st.t() < horizon {
            st.step(horizon)?;
            let (ga, gb) = (g(st.y_prev()), g(st.y()));
            if st.t() > 0.25 * self.guess && ga < 0.0 && gb >= 0.0 {
                let (t, y) = st.locate(g, st.t_prev(), st.t(), ga, gb, 1e-15)?;
                let q = y.fixed_rows::<3>(0).into_owned();
                if q.dot(&p0) > 0.0 {
                    return Ok((t, GeodesicState::from_flow(&y, t)));
                }
            }
        }
        Err(Error::HorizonExceeded {
            horizon,
            what: "return to the shooting plane".into(),
        })
    }

    fn residual(&self, x: &Vector2<f64>) -> Result<(Vector2<f64>, f64)> {
        let start = self.state(x[0], x[1])?;
        let (t, end) = self.first_return(&start)?;
        let s1 = end.p.dot(&self.n0).atan2(end.p.dot(&self.p0));
        let e1 = -self.p0 * s1.sin() + self.n0 * s1.cos();
        let a1 = end.v.dot(&e1).atan2(end.v.dot(&self.a0));
        let da = (a1 - x[1] + PI).rem_euclid(2.0 * PI) - PI;
        Ok((Vector2::new(s1 - x[0], da), t))
    }
}

/// Newton shooting on the transverse section through the seed point.
///
/// Unknowns are the offset along the seed's normal and the direction angle;
/// the Jacobian is taken by finite differences and inverted through an SVD
/// pseudo-inverse, which tolerates the one-parameter families of symmetric
/// metrics.
pub fn find_closed_geodesic(
    m: &MetricModel,
    seed: &GeodesicState,
    period_guess: f64,
) -> Result<ClosedOrbit> {
    if !(period_guess > 0.0) {
        return Err(Error::Precondition(format!(
            "period guess must be positive, got {period_guess}"
        )));
    }
    let a0 = seed.v.normalize();
    let p0 = seed.p.normalize();
    let shooter = Shooter {
        m,
        p0,
        a0,
        n0: p0.cross(&a0),
        guess: period_guess,
    };
    let mut x = Vector2::zeros();
    let (mut r, mut period) = shooter.residual(&x)?;
    let mut iterations = 0;
    while r.norm() >= CLOSURE_TARGET {
        if iterations == MAX_NEWTON {
            return Err(Error::NoConvergence {
                iterations,
                residual: r.norm(),
            });
        }
        iterations += 1;
        let h = 1e-7;
        let mut jac = Matrix2::zeros();
        for k in 0..2 {
            let mut xp = x;
            xp[k] += h;
            let (rp, _) = shooter.residual(&xp)?;
            jac.set_column(k, &((rp - r) / h));
        }
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let pinv = svd
            .pseudo_inverse(1e-6 * smax.max(1e-300))
            .map_err(|e| Error::InternalConsistency(e.to_string()))?;
        let step = -(pinv * r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = x + step * lambda;
            if let Ok((rt, pt)) = shooter.residual(&trial) {
                if rt.norm() < r.norm() {
                    x = trial;
                    r = rt;
                    period = pt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                residual: r.norm(),
            });
        }
    }
    let start = shooter.state(x[0], x[1])?;
    let samples = sample_orbit(m, &start, period, 0.005)?;
    Ok(ClosedOrbit {
        start,
        length: period,
        residual: r.norm(),
        iterations,
        samples,
    })
}

/// Positions at uniform arclength spacing close to `ds` over `[0, length)`.
pub fn sample_orbit(
    m: &MetricModel,
    start: &GeodesicState,
    length: f64,
    ds: f64,
) -> Result<Vec<Vector3<f64>>> {
    let n = ((length / ds).ceil() as usize).max(16);
    let sys = GeodesicFlow::new(m);
    let mut st = Dop853::new(&sys, 0.0, start.flow_vector(), SHOOTING_TOL, 1.0).with_h_max(0.25);
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        let tk = length * k as f64 / n as f64;
        while st.t() < tk {
            st.step(length)?;
        }
        let y = if tk == st.t() { *st.y() } else { st.dense(tk) };
        out.push(y.fixed_rows::<3>(0).normalize());
        k += 1;
    }
    Ok(out)
}

/// True when the orbit is primitive and its sampled image has no self-intersection at resolution `1e-6`.
pub fn simplicity_check(m: &MetricModel, orbit: &ClosedOrbit) -> bool {
    for k in 2..=4 {
        let dt = orbit.length / k as f64;
        match flow_state(m, &orbit.start, dt, SHOOTING_TOL) {
            Ok((s, _)) if s.distance(&orbit.start) < 1e-6 => return false,
            Ok(_) => {}
            Err(_) => return false,
        }
    }
    !polyline_self_intersects(&orbit.samples, true, 1e-6)
}

/// Self-intersection test for a polyline on the unit sphere.
///
/// Non-adjacent segments are flagged when their great arcs cross or when
/// their Euclidean distance drops below `tol`. Candidate pairs come from a
/// uniform spatial hash.
pub fn polyline_self_intersects(pts: &[Vector3<f64>], closed: bool, tol: f64) -> bool {
    let n = pts.len();
    if n < 4 {
        return false;
    }
    let nseg = if closed { n } else { n - 1 };
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
    let mut cell = tol;
    for i in 0..nseg {
        let (a, b) = seg(i);
        cell = cell.max((a - b).norm());
    }
    let cell = 1.01 * cell + tol;
    let key = |v: f64| (v / cell).floor() as i64;
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for i in 0..nseg {
        let (a, b) = seg(i);
        let lo = a.inf(&b).add_scalar(-tol);
        let hi = a.sup(&b).add_scalar(tol);
        for x in key(lo.x)..=key(hi.x) {
            for y in key(lo.y)..=key(hi.y) {
                for z in key(lo.z)..=key(hi.z) {
                    grid.entry([x, y, z]).or_default().push(i);
                }
            }
        }
    }
    let adjacent = |i: usize, j: usize| j == i + 1 || (closed && i == 0 && j == nseg - 1);
    for members in grid.values() {
        for (ii, &i) in members.iter().enumerate() {
            for &j in &members[ii + 1..] {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                if i == j || adjacent(i, j) {
                    continue;
                }
                let (a, b) = seg(i);
                let (c, d) = seg(j);
                if arcs_cross(&a, &b, &c, &d) || segment_distance(&a, &b, &c, &d) < tol {
                    return true;
                }
            }
        }
    }
    false
}

fn arcs_cross(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>, d: &Vector3<f64>) -> bool {
    let n1 = a.cross(b).normalize();
    let n2 = c.cross(d).normalize();
    let (sc, sd) = (c.dot(&n1), d.dot(&n1));
    let (sa, sb) = (a.dot(&n2), b.dot(&n2));
    // Arcs on a common great circle give signs at rounding level; distance decides those.
    let eps = 1e-12;
    if sc.abs().min(sd.abs()).min(sa.abs()).min(sb.abs()) < eps {
        return false;
    }
    sc * sd < 0.0 && sa * sb < 0.0 && (a + b).dot(&(c + d)) > 0.0
}

fn segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm()
}

/// Seeds for the symmetric closed geodesics of a revolution metric.
pub fn equator_seed(m: &MetricModel) -> GeodesicState {
    GeodesicState::new(m, Vector3::x(), Vector3::y()).expect("equator seed")
}

pub fn meridian_seed(m: &MetricModel) -> GeodesicState {
    GeodesicState::new(m, Vector3::x(), Vector3::z()).expect("meridian seed")
}

#[cfg(test)]
mod tests {
    use super::*;

    struct SecondOrderJacobi<'a> {
        flow: GeodesicFlow<'a>,
    }

    /// `[p, v, u, u']` with `u'' = -K u`.
    impl OdeSystem<8> for SecondOrderJacobi<'_> {
        fn rhs(&self, t: f64, y: &FlowVector) -> FlowVector {
            let mut dy = self.flow.rhs(t, y);
            let k = self
                .flow
                .m
                .curvature_at_z(y[2] / y.fixed_rows::<3>(0).norm());
            dy[6] = y[7];
            dy[7] = -k * y[6];
            dy
        }
    }

    fn ellipse_perimeter(a: f64, b: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn simpson<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let f = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let (lo, hi) = (0.0, 2.0 * PI);
        let (fa, fm, fb) = (f(lo), f(PI), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&f, lo, hi, fa, fm, fb, whole, 1e-13, 40)
    }

    #[test]
    fn round_great_circles_close() {
        let m = MetricModel::round(1.0).unwrap();
        for (t, f, a) in [(0.3, 0.1, 0.2), (1.2, 2.0, 1.0), (2.9, 4.0, -0.7)] {
            let s0 = GeodesicState::from_chart(&m, t, f, a).unwrap();
            let tr = integrate_geodesic(&m, &s0, 2.0 * PI, Tolerance::default()).unwrap();
            assert!(tr.last().distance(&s0) < 1e-8);
            for s in &tr.states {
                assert!(s.speed_defect(&m) < 1e-9);
            }
        }
    }

    #[test]
    fn spheroid_equator_closes() {
        let m = MetricModel::spheroid(1.03).unwrap();
        let s0 = equator_seed(&m);
        let tr = integrate_geodesic(&m, &s0, 2.0 * PI, Tolerance::default()).unwrap();
        assert!(tr.last().distance(&s0) < 1e-8);
        let acc = GeodesicFlow::new(&m).acceleration(&s0.p, &s0.v);
        assert!((acc + s0.p).norm() < 1e-14);
    }

    #[test]
    fn zoll_geodesics_close() {
        let m = MetricModel::zoll_cubic(0.1).unwrap();
        for (t, f, a) in [(0.7, 0.0, 0.4), (1.9, 1.0, 2.2), (1.0, 3.0, 1.3)] {
            let s0 = GeodesicState::from_chart(&m, t, f, a).unwrap();
            let tr = integrate_geodesic(&m, &s0, 2.0 * PI, Tolerance::default()).unwrap();
            assert!(
                tr.last().distance(&s0) < 1e-6,
                "{}",
                tr.last().distance(&s0)
            );
        }
    }

    #[test]
    fn clairaut_values_and_drift() {
        let r = MetricModel::round(1.0).unwrap();
        assert!((clairaut_invariant(&r, &equator_seed(&r)) - 1.0).abs() < 1e-15);
        let m = MetricModel::spheroid(1.03).unwrap();
        assert_eq!(clairaut_invariant(&m, &meridian_seed(&m)), 0.0);
        let s0 = GeodesicState::from_chart(&m, 1.1, 0.3, 0.9).unwrap();
        let c0 = clairaut_invariant(&m, &s0);
        let tr = integrate_geodesic(&m, &s0, 20.0, Tolerance::default()).unwrap();
        for s in &tr.states {
            assert!((clairaut_invariant(&m, s) - c0).abs() < 1e-7);
        }
    }

    #[test]
    fn jacobi_angle_on_round_sphere() {
        let m = MetricModel::round(1.0).unwrap();
        let s0 = GeodesicState::from_chart(&m, 0.9, 0.2, 0.5).unwrap();
        let j = jacobi_polar_advance(&m, &s0, PI).unwrap();
        assert!((j.theta - PI).abs() < 1e-10);
        assert!((j.r - 1.0).abs() < 1e-10);
        assert!((conjugate_time(&m, &s0, 1).unwrap() - PI).abs() < 1e-10);
        assert!((conjugate_time(&m, &s0, 2).unwrap() - 2.0 * PI).abs() < 1e-10);
        assert!(conjugate_time(&m, &s0, 3).is_err());
    }

    #[test]
    fn jacobi_polar_matches_second_order_solution() {
        let m = MetricModel::spheroid(1.03).unwrap();
        let s0 = equator_seed(&m);
        let sys = SecondOrderJacobi {
            flow: GeodesicFlow::new(&m),
        };
        let mut y0 = s0.flow_vector();
        y0[6] = 0.0;
        y0[7] = 1.0;
        for t in [0.5, 2.0, 4.0, 6.0] {
            let y = integrate_final(&sys, 0.0, y0, t, SHOOTING_TOL).unwrap();
            let j = jacobi_polar_advance(&m, &s0, t).unwrap();
            let oracle = y[6].atan2(y[7]).rem_euclid(2.0 * PI);
            let diff = (j.theta.rem_euclid(2.0 * PI) - oracle + PI).rem_euclid(2.0 * PI) - PI;
            assert!(diff.abs() < 1e-8, "t = {t}: {diff}");
            assert!((j.u() - y[6]).abs() < 1e-8);
        }
    }

    #[test]
    fn conjugate_times_on_spheroid_equator() {
        let c = 1.03;
        let m = MetricModel::spheroid(c).unwrap();
        let cp = conjugate_points(&m, &equator_seed(&m), Tolerance::default()).unwrap();
        assert!((cp.t1 - PI * c).abs() < 1e-8);
        assert!((cp.t2 - 2.0 * PI * c).abs() < 1e-8);
        assert!(cp.t1 >= PI / m.extremes().k_max.sqrt());
    }

    #[test]
    fn zoll_second_conjugate_time_is_two_pi() {
        let m = MetricModel::zoll_cubic(0.1).unwrap();
        let t2 = conjugate_time(&m, &equator_seed(&m), 2).unwrap();
        assert!((t2 - 2.0 * PI).abs() < 1e-6, "{t2}");
    }

    #[test]
    fn time_reversal() {
        let m = MetricModel::spheroid(1.03).unwrap();
        let s0 = GeodesicState::from_chart(&m, 0.8, 1.0, 0.3).unwrap();
        let (s1, _) = flow_state(&m, &s0, 7.0, Tolerance::default()).unwrap();
        let (s2, _) = flow_state(&m, &s1, -7.0, Tolerance::default()).unwrap();
        assert!(s2.distance(&s0) < 1e-8);
    }

    #[test]
    fn closed_geodesics_on_spheroid() {
        let c = 1.03;
        let m = MetricModel::spheroid(c).unwrap();
        let eq = find_closed_geodesic(&m, &equator_seed(&m), 2.0 * PI).unwrap();
        assert!((eq.length - 2.0 * PI).abs() < 1e-10);
        assert!(eq.residual < 1e-10);
        let mer = find_closed_geodesic(&m, &meridian_seed(&m), 2.0 * PI).unwrap();
        assert!(
            (mer.length - ellipse_perimeter(1.0, c)).abs() < 1e-9,
            "{}",
            mer.length
        );
        assert!(simplicity_check(&m, &eq));
        assert!(simplicity_check(&m, &mer));
        assert!(!simplicity_check(&m, &eq.repeated(2)));
    }

    #[test]
    fn closed_geodesic_round() {
        let m = MetricModel::round(1.0).unwrap();
        let s = GeodesicState::from_chart(&m, 1.0, 0.5, 0.8).unwrap();
        let o = find_closed_geodesic(&m, &s, 6.0).unwrap();
        assert!((o.length - 2.0 * PI).abs() < 1e-10);
        assert!(o.planarity_defect() < 1e-9);
    }

    #[test]
    fn figure_eight_is_not_simple() {
        let pts: Vec<Vector3<f64>> = (0..400)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 400.0;
                Vector3::new(1.0, 0.3 * t.sin(), 0.3 * (2.0 * t).sin()).normalize()
            })
            .collect();
        assert!(polyline_self_intersects(&pts, true, 1e-6));
        let circle: Vec<Vector3<f64>> = (0..400)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 400.0;
                Vector3::new(1.0, 0.3 * t.cos(), 0.3 * t.sin()).normalize()
            })
            .collect();
        assert!(!polyline_self_intersects(&circle, true, 1e-6));
    }
}
