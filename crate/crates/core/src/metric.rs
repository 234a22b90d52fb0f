//! Metrics on the two-sphere and their pointwise geometry.
//!
//! Every model lives on the unit sphere `|p| = 1` in model coordinates and
//! has the form `g = s²·(g_round + ψ(z) dz²)` with `z = p₃`. The round sphere
//! of radius `r` has `ψ = 0, s = r`; the spheroid with polar semi-axis `c`
//! has `ψ = c² − 1`; a Zoll profile `h` has `ψ = h(2 + h)/(1 − z²)`, which
//! gives `g = s²·((1 + h(cos θ))² dθ² + sin²θ dφ²)`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::integrate_gl;
use crate::numerics::roots::golden_min;

/// Samples used for the cached curvature extremes.
pub const CURVATURE_SAMPLES: usize = 2049;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricKind {
    Round {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Polar semi-axis `c`, equatorial semi-axes 1.
    Spheroid { c: f64 },
    /// `h_coeffs[k]` multiplies `s^(k+1)`, so `[ε, 0, -ε]` is `ε s (1 - s²)`.
    #[serde(alias = "zoll_revolution")]
    Zoll { h_coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureExtremes {
    pub k_min: f64,
    pub k_max: f64,
    /// Colatitudes where the extremes are attained.
    pub theta_at_min: f64,
    pub theta_at_max: f64,
}

impl CurvatureExtremes {
    pub fn pinching(&self) -> f64 {
        self.k_min / self.k_max
    }
}

#[derive(Debug, Clone)]
pub struct MetricModel {
    kind: MetricKind,
    scale: f64,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    h: Vec<f64>,
    extremes: CurvatureExtremes,
}

/// A point given by chart coordinates together with its model position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub theta: f64,
    pub phi: f64,
    pub model: Vector3<f64>,
}

impl SurfacePoint {
    pub fn from_chart(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::Domain(format!("theta = {theta}, phi = {phi}")));
        }
        let phi = phi.rem_euclid(2.0 * PI);
        let model = Vector3::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        );
        Ok(Self { theta, phi, model })
    }

    pub fn from_model(p: Vector3<f64>) -> Result<Self> {
        let n = p.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Domain(format!("model point {p:?}")));
        }
        let p = p / n;
        let theta = p.z.clamp(-1.0, 1.0).acos();
        let phi = p.y.atan2(p.x).rem_euclid(2.0 * PI);
        Ok(Self {
            theta,
            phi,
            model: p,
        })
    }

    /// Position in Euclidean space for the models that come with an embedding.
    pub fn embedded(&self, m: &MetricModel) -> Option<Vector3<f64>> {
        match m.kind {
            MetricKind::Round { radius } => Some(self.model * radius),
            MetricKind::Spheroid { c } => {
                Some(Vector3::new(self.model.x, self.model.y, c * self.model.z))
            }
            MetricKind::Zoll { .. } => None,
        }
    }
}

fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * z + a)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_deriv(a: &[f64]) -> Vec<f64> {
    if a.len() <= 1 {
        return vec![0.0];
    }
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

/// Quotient of `h` by `1 - s²`, with the two remainder coefficients.
fn divide_one_minus_s2(h: &[f64]) -> (Vec<f64>, f64, f64) {
    let d = h.len() - 1;
    if d < 2 {
        return (vec![0.0], h[0], h.get(1).copied().unwrap_or(0.0));
    }
    let mut q = vec![0.0; d + 1];
    for k in (2..=d).rev() {
        q[k - 2] = q[k] - h[k];
    }
    let r0 = h[0] - q[0];
    let r1 = h[1] - q[1];
    q.truncate(d - 1);
    (q, r0, r1)
}

impl MetricModel {
    pub fn new(kind: MetricKind) -> Result<Self> {
        let (scale, psi, h) = match &kind {
            MetricKind::Round { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::ModelInvalid(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                (*radius, vec![0.0], vec![0.0])
            }
            MetricKind::Spheroid { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::ModelInvalid(format!(
                        "semi-axis must be positive, got {c}"
                    )));
                }
                (1.0, vec![c * c - 1.0], vec![0.0])
            }
            MetricKind::Zoll { h_coeffs } => {
                let mut h = vec![0.0];
                h.extend_from_slice(h_coeffs);
                if h.iter().any(|c| !c.is_finite()) {
                    return Err(Error::ModelInvalid("non-finite profile coefficient".into()));
                }
                if let Some((k, c)) = h
                    .iter()
                    .enumerate()
                    .find(|(k, c)| k % 2 == 0 && c.abs() > 1e-15)
                {
                    return Err(Error::ModelInvalid(format!(
                        "profile is not odd: coefficient of s^{k} is {c}"
                    )));
                }
                let (q, r0, r1) = divide_one_minus_s2(&h);
                if r0.abs() > 1e-12 || r1.abs() > 1e-12 {
                    return Err(Error::ModelInvalid(format!(
                        "profile must vanish at s = ±1 (h(1) = {})",
                        horner(&h, 1.0)
                    )));
                }
                let mut two_plus_h = h.clone();
                two_plus_h[0] += 2.0;
                (1.0, poly_mul(&q, &two_plus_h), h)
            }
        };
        let dpsi = poly_deriv(&psi);
        let mut m = Self {
            kind,
            scale,
            psi,
            dpsi,
            h,
            extremes: CurvatureExtremes {
                k_min: 0.0,
                k_max: 0.0,
                theta_at_min: 0.0,
                theta_at_max: 0.0,
            },
        };
        m.validate()?;
        m.extremes = m.curvature_extremes(CURVATURE_SAMPLES)?;
        Ok(m)
    }

    pub fn round(radius: f64) -> Result<Self> {
        Self::new(MetricKind::Round { radius })
    }

    pub fn spheroid(c: f64) -> Result<Self> {
        Self::new(MetricKind::Spheroid { c })
    }

    pub fn zoll(h_coeffs: Vec<f64>) -> Result<Self> {
        Self::new(MetricKind::Zoll { h_coeffs })
    }

    /// Zoll profile `h(s) = ε s (1 - s²)`.
    pub fn zoll_cubic(eps: f64) -> Result<Self> {
        Self::zoll(vec![eps, 0.0, -eps])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let kind: MetricKind =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(kind)
    }

    /// Same shape with every length multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::ModelInvalid(format!("scale factor {factor}")));
        }
        let mut m = self.clone();
        m.scale *= factor;
        let k = 1.0 / (factor * factor);
        m.extremes.k_min *= k;
        m.extremes.k_max *= k;
        Ok(m)
    }

    /// Copy rescaled so that the maximal curvature is 1.
    pub fn normalized(&self) -> Result<Self> {
        self.rescaled(self.extremes.k_max.sqrt())
    }

    fn validate(&self) -> Result<()> {
        let n = 4001;
        for k in 0..n {
            let z = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
            let psi = self.psi(z);
            if 1.0 + psi <= 0.0 {
                return Err(Error::ModelInvalid(format!(
                    "1 + ψ({z}) = {} is not positive",
                    1.0 + psi
                )));
            }
            if self.profile_sq(z) <= 0.0 {
                return Err(Error::ModelInvalid(format!("degenerate metric at z = {z}")));
            }
            if let MetricKind::Zoll { .. } = self.kind {
                let h = horner(&self.h, z);
                if h.abs() >= 1.0 {
                    return Err(Error::ModelInvalid(format!(
                        "|h({z})| = {} is not below 1",
                        h.abs()
                    )));
                }
                let odd = h + horner(&self.h, -z);
                if odd.abs() > 1e-13 {
                    return Err(Error::ModelInvalid(format!("profile not odd at s = {z}")));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn descriptor(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.kind).expect("metric kind serializes");
        if (self.scale - self.natural_scale()).abs() > 0.0 {
            v["length_scale"] = serde_json::json!(self.scale / self.natural_scale());
        }
        v
    }

    fn natural_scale(&self) -> f64 {
        match self.kind {
            MetricKind::Round { radius } => radius,
            _ => 1.0,
        }
    }

    /// True for every model here; kept so callers can ask before using Clairaut.
    pub fn is_revolution(&self) -> bool {
        true
    }

    #[inline]
    pub fn psi(&self, z: f64) -> f64 {
        horner(&self.psi, z)
    }

    #[inline]
    pub fn psi_and_derivative(&self, z: f64) -> (f64, f64) {
        (horner(&self.psi, z), horner(&self.dpsi, z))
    }

    /// Profile `h(s)` of a Zoll model, zero otherwise.
    pub fn zoll_profile(&self, s: f64) -> f64 {
        horner(&self.h, s)
    }

    /// `A² = 1 + ψ(z)(1 - z²)`, the θθ-coefficient of the unscaled metric.
    #[inline]
    pub fn profile_sq(&self, z: f64) -> f64 {
        1.0 + self.psi(z) * (1.0 - z * z)
    }

    /// `g(u, w)` at a model point `p` for tangent vectors `u, w`.
    #[inline]
    pub fn inner(&self, p: &Vector3<f64>, u: &Vector3<f64>, w: &Vector3<f64>) -> f64 {
        self.scale * self.scale * (u.dot(w) + self.psi(p.z) * u.z * w.z)
    }

    #[inline]
    pub fn norm(&self, p: &Vector3<f64>, u: &Vector3<f64>) -> f64 {
        self.inner(p, u, u).sqrt()
    }

    /// Gaussian curvature as a function of `z = cos θ`.
    pub fn curvature_at_z(&self, z: f64) -> f64 {
        let (psi, dpsi) = self.psi_and_derivative(z);
        let a2 = 1.0 + psi * (1.0 - z * z);
        let da2 = dpsi * (1.0 - z * z) - 2.0 * z * psi;
        (1.0 / a2 - z * da2 / (2.0 * a2 * a2)) / (self.scale * self.scale)
    }

    pub fn gaussian_curvature(&self, p: &SurfacePoint) -> Result<f64> {
        if !(0.0..=PI).contains(&p.theta) || !p.phi.is_finite() {
            return Err(Error::Domain(format!(
                "theta = {}, phi = {}",
                p.theta, p.phi
            )));
        }
        Ok(self.curvature_at_z(p.theta.cos()))
    }

    /// Curvature extremes by θ-sampling refined with golden-section search.
    pub fn curvature_extremes(&self, n_samples: usize) -> Result<CurvatureExtremes> {
        if n_samples < 64 {
            return Err(Error::Precondition(format!(
                "need at least 64 samples, got {n_samples}"
            )));
        }
        let h = PI / (n_samples - 1) as f64;
        let k_of = |t: f64| self.curvature_at_z(t.cos());
        let mut imin = 0;
        let mut imax = 0;
        let mut kmin = f64::INFINITY;
        let mut kmax = f64::NEG_INFINITY;
        for i in 0..n_samples {
            let k = k_of(i as f64 * h);
            if !(k > 0.0) {
                return Err(Error::ModelInvalid(format!(
                    "non-positive curvature {k} at theta = {}",
                    i as f64 * h
                )));
            }
            if k < kmin {
                kmin = k;
                imin = i;
            }
            if k > kmax {
                kmax = k;
                imax = i;
            }
        }
        let bracket = |i: usize| {
            let a = (i as f64 - 1.0).max(0.0) * h;
            let b = ((i + 1) as f64 * h).min(PI);
            (a, b)
        };
        let (a, b) = bracket(imin);
        let (tmin, kref) = golden_min(k_of, a, b, 1e-12);
        let (theta_at_min, k_min) = if kref < kmin {
            (tmin, kref)
        } else {
            (imin as f64 * h, kmin)
        };
        let (a, b) = bracket(imax);
        let (tmax, kref) = golden_min(|t| -k_of(t), a, b, 1e-12);
        let (theta_at_max, k_max) = if -kref > kmax {
            (tmax, -kref)
        } else {
            (imax as f64 * h, kmax)
        };
        Ok(CurvatureExtremes {
            k_min,
            k_max,
            theta_at_min,
            theta_at_max,
        })
    }

    /// Cached extremes computed at construction.
    pub fn extremes(&self) -> CurvatureExtremes {
        self.extremes
    }

    pub fn pinching_constant(&self, n_samples: usize) -> Result<f64> {
        Ok(self.curvature_extremes(n_samples)?.pinching())
    }

    pub fn area(&self, quadrature_order: usize) -> Result<f64> {
        if quadrature_order < 16 {
            return Err(Error::Precondition(format!(
                "quadrature order must be at least 16, got {quadrature_order}"
            )));
        }
        let integral = integrate_gl(
            |t: f64| self.profile_sq(t.cos()).sqrt() * t.sin(),
            0.0,
            PI,
            quadrature_order,
        );
        Ok(2.0 * PI * self.scale * self.scale * integral)
    }

    pub fn injectivity_radius_lower_bound(&self) -> f64 {
        PI / self.extremes.k_max.sqrt()
    }
}
