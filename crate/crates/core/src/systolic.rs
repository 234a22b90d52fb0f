//! Closed-geodesic candidates, the systolic audit and the two-gon perimeter bound.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::birkhoff::{summarize, BirkhoffGrid, BirkhoffSummary, Section};
use crate::error::{Error, Result};
use crate::geodesic::{
    equator_seed, find_closed_geodesic, meridian_seed, simplicity_check, ClosedOrbit,
};
use crate::metric::MetricModel;
use crate::numerics::ode::Tolerance;
use crate::strip::StripMapGrid;

/// Pinching above which every lift of the return map is monotone.
pub const MONOTONE_PINCHING: f64 = 0.830_718_913_883_074; // (4 + √7)/8
/// Pinching required for the zero-flux lift.
pub const LIFT_PINCHING: f64 = 0.25;
/// `‖Φ − id‖∞` below which the metric is reported as Zoll.
pub const ZOLL_TOL: f64 = 1e-5;
const SAME_LENGTH: f64 = 1e-6;
const SAME_IMAGE: f64 = 1e-5;
const SEED_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    Equator,
    Meridian,
    FixedPoint,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub source: CandidateSource,
    pub orbit: ClosedOrbit,
    pub simple: bool,
}

impl Candidate {
    pub fn length(&self) -> f64 {
        self.orbit.length
    }

    fn same_image(&self, other: &Candidate) -> bool {
        if (self.length() - other.length()).abs() > SAME_LENGTH {
            return false;
        }
        let p = self.orbit.start.p;
        let s = &other.orbit.samples;
        (0..s.len()).any(|k| {
            let (a, b) = (s[k], s[(k + 1) % s.len()]);
            let d = b - a;
            let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            (a + d * t - p).norm() < SAME_IMAGE
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateSummary {
    pub source: CandidateSource,
    pub length: f64,
    pub simple: bool,
    pub residual: f64,
}

fn push_unique(list: &mut Vec<Candidate>, c: Candidate) -> bool {
    if list.iter().any(|o| o.same_image(&c)) {
        return false;
    }
    list.push(c);
    true
}

/// Equator and meridian of the symmetry axis, refined by shooting.
pub fn symmetric_candidates(m: &MetricModel) -> Result<Vec<Candidate>> {
    let guess = 2.0 * PI * m.scale();
    let mut out = Vec::new();
    for (source, seed) in [
        (CandidateSource::Equator, equator_seed(m)),
        (CandidateSource::Meridian, meridian_seed(m)),
    ] {
        let orbit = find_closed_geodesic(m, &seed, guess)?;
        let simple = simplicity_check(m, &orbit);
        push_unique(
            &mut out,
            Candidate {
                source,
                orbit,
                simple,
            },
        );
    }
    Ok(out)
}

/// Nodes where `‖Φ − id‖` has a strict-enough local minimum, best first.
pub fn fixed_point_seeds(lift: &StripMapGrid, max_seeds: usize) -> Vec<(usize, usize, f64)> {
    let g = lift.grid;
    let dist: Vec<f64> = (0..g.len())
        .map(|k| {
            let (x, y) = (g.x(k / g.ny), g.y(k % g.ny));
            (lift.big_x[k] - x).abs().max((lift.big_y[k] - y).abs())
        })
        .collect();
    let mut seeds = Vec::new();
    for i in 0..g.nx {
        for j in 1..g.ny - 1 {
            let v = dist[g.idx(i, j)];
            if v > SEED_DISTANCE {
                continue;
            }
            let mut is_min = true;
            for di in [g.nx - 1, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let (ii, jj) = ((i + di) % g.nx, (j as i64 + dj) as usize);
                    if (ii, jj) != (i, j) && dist[g.idx(ii, jj)] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push((i, j, v));
            }
        }
    }
    seeds.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    seeds.truncate(max_seeds);
    seeds
}

/// Closed geodesics through approximate fixed points of the return map.
///
/// Returns the new candidates and the number of seeds whose shooting failed.
pub fn fixed_point_candidates(
    grid: &BirkhoffGrid,
    lift: &StripMapGrid,
    max_seeds: usize,
) -> (Vec<Candidate>, usize) {
    let s = &grid.section;
    let m = &s.metric;
    let results: Vec<Option<Candidate>> = fixed_point_seeds(lift, max_seeds)
        .par_iter()
        .map(|&(i, j, _)| {
            let d = &grid.nodes[grid.grid.idx(i, j)];
            let seed = s.vector(grid.grid.x(i), grid.grid.y(j)).ok()?;
            let orbit = find_closed_geodesic(m, &seed, d.tau).ok()?;
            let simple = simplicity_check(m, &orbit);
            Some(Candidate {
                source: CandidateSource::FixedPoint,
                orbit,
                simple,
            })
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    (results.into_iter().flatten().collect(), failures)
}

/// Candidate list from the symmetric seeds, augmented by return-map fixed points when a grid is given.
pub fn candidate_closed_geodesics(
    m: &MetricModel,
    grid: Option<&BirkhoffGrid>,
) -> Result<Vec<Candidate>> {
    let mut out = symmetric_candidates(m)?;
    if let Some(g) = grid {
        let lift = g.zero_flux_lift()?;
        for c in fixed_point_candidates(g, &lift, 8).0 {
            push_unique(&mut out, c);
        }
    }
    Ok(out)
}

/// Distinct candidate lengths, merged within `1e-6`.
pub fn length_classes(cands: &[Candidate]) -> Vec<f64> {
    let mut ls: Vec<f64> = cands.iter().map(Candidate::length).collect();
    ls.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for l in ls {
        if out.last().is_none_or(|p| l - p > SAME_LENGTH) {
            out.push(l);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoGonReport {
    pub samples: usize,
    pub violations: usize,
    pub worst_ratio: f64,
    pub min_ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Perimeters of the two-gons cut out of the two disks bounded by `γ` by the return arcs.
///
/// Each interior node gives four two-gons: the arc to `Σ⁻` with either segment
/// of `γ` between its endpoints, and likewise for the arc back to `Σ⁺`.
pub fn two_gon_perimeter_check(grid: &BirkhoffGrid) -> TwoGonReport {
    let h = grid.section.metric.extremes().k_min;
    let bound = 2.0 * PI / h.sqrt();
    let l = grid.length();
    let g = grid.grid;
    let mut ratios = Vec::new();
    for i in 0..g.nx {
        for j in 1..g.ny - 1 {
            let d = &grid.nodes[g.idx(i, j)];
            if d.flagged {
                continue;
            }
            let rho_minus = d.rho - d.rho_plus;
            let tau_minus = d.tau - d.tau_plus;
            for p in [
                d.tau_plus + d.rho_plus,
                d.tau_plus + l - d.rho_plus,
                tau_minus + rho_minus,
                tau_minus + l - rho_minus,
            ] {
                ratios.push(p / bound);
            }
        }
    }
    let worst_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = ratios.iter().filter(|r| **r > 1.0 + 1e-6).count();
    TwoGonReport {
        samples: ratios.len(),
        violations,
        worst_ratio,
        min_ratio,
        bound,
        pass: violations == 0 && !ratios.is_empty(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiWindowReport {
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub min_cos: f64,
    pub samples: usize,
    pub violations: usize,
    pub pass: bool,
}

/// Window `δ(4π − 2π/√δ) ≤ θ ≤ 4π/√δ − 2π` for the Jacobi polar angle at the return time.
///
/// Meaningful only when the grid was built for a metric normalized to `max K = 1`.
pub fn jacobi_window(grid: &BirkhoffGrid) -> JacobiWindowReport {
    let delta = grid.section.metric.extremes().pinching();
    let lower = delta * (4.0 * PI - 2.0 * PI / delta.sqrt());
    let upper = 4.0 * PI / delta.sqrt() - 2.0 * PI;
    let thetas: Vec<f64> = grid
        .nodes
        .iter()
        .filter(|d| !d.flagged)
        .map(|d| d.theta)
        .collect();
    let violations = thetas
        .iter()
        .filter(|t| !(**t >= lower - 1e-12 && **t <= upper + 1e-12 && t.cos() > 0.0))
        .count();
    JacobiWindowReport {
        delta,
        lower,
        upper,
        theta_min: thetas.iter().copied().fold(f64::INFINITY, f64::min),
        theta_max: thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_cos: thetas.iter().map(|t| t.cos()).fold(f64::INFINITY, f64::min),
        samples: thetas.len(),
        violations,
        pass: violations == 0 && !thetas.is_empty(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOptions {
    pub nx: usize,
    pub ny: usize,
    /// Relative tolerance of the geodesic integrator.
    pub tol_integration: f64,
    /// Threshold for the `τ = L + σ` and closure residuals.
    pub tol_identity: f64,
    /// Inequality margins are `tol_verdict·Area`.
    pub tol_verdict: f64,
    pub strict: bool,
    pub fixed_point_seeds: usize,
    /// Stride of the arc self-intersection sampling; 0 disables it.
    pub arc_stride: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            nx: 96,
            ny: 96,
            tol_integration: 1e-12,
            tol_identity: 1e-5,
            tol_verdict: 1e-4,
            strict: false,
            fixed_point_seeds: 8,
            arc_stride: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdicts {
    pub lower_inequality: bool,
    pub upper_inequality: bool,
    pub zoll_flag: bool,
    /// With the Zoll flag set, both sides agree with `π·Area` to `1e-4` relative; vacuous otherwise.
    pub zoll_equalities: bool,
    /// Near-equality on either side forces `‖Φ − id‖∞ < 1e-4`.
    pub equality_implies_zoll: bool,
    pub identities: bool,
    pub klingenberg: bool,
    pub fixed_point_lengths: bool,
    pub minimizer_simple: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystolicReport {
    pub metric: serde_json::Value,
    pub delta: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub area: f64,
    pub l_min: f64,
    pub l_max_simple: f64,
    /// `ℓ_max` is the longest simple closed geodesic among the candidates, hence a lower bound.
    pub l_max_is_lower_bound: bool,
    pub rho_sys: f64,
    pub pi_area: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub flux: f64,
    pub cal: f64,
    pub identity_distance: f64,
    pub section: BirkhoffSummary,
    pub upper_section: Option<BirkhoffSummary>,
    pub candidates: Vec<CandidateSummary>,
    pub length_classes: Vec<f64>,
    pub two_gon: TwoGonReport,
    pub verdicts: Verdicts,
    pub warnings: Vec<String>,
}

fn build_section(m: &MetricModel, c: &Candidate, opts: &AuditOptions) -> Result<BirkhoffGrid> {
    let s = Section::new(m, &c.orbit)?.with_tolerance(Tolerance::new(
        opts.tol_integration,
        1e-2 * opts.tol_integration,
    ))?;
    let mut g = BirkhoffGrid::build(&s, opts.nx, opts.ny)?;
    if opts.arc_stride > 0 {
        g.check_arcs(opts.arc_stride)?;
    }
    Ok(g)
}

fn identities_ok(s: &BirkhoffSummary, tol_identity: f64) -> bool {
    let r = &s.residuals;
    s.flux.abs() < 1e-6
        && r.tau_action < tol_identity
        && r.area_identity < 1e-4
        && r.contact_volume < 1e-4
        && r.area_preservation < 1e-5
        && r.boundary_preservation < 1e-7
        && s.flagged_nodes == 0
}

/// Full audit of `ℓ_min² ≤ π·Area ≤ ℓ_max²` over the candidate set.
pub fn audit(m: &MetricModel, opts: &AuditOptions) -> Result<SystolicReport> {
    let ext = m.extremes();
    let delta = ext.pinching();
    if !(delta > LIFT_PINCHING) {
        return Err(Error::Refused(format!(
            "pinching δ = {delta:.6} ≤ 1/4; the zero-flux lift is not available"
        )));
    }
    let mut warnings = Vec::new();
    if delta <= MONOTONE_PINCHING {
        warnings.push(format!(
            "pinching δ = {delta:.6} ≤ (4+√7)/8; monotonicity of the return map is not guaranteed"
        ));
    }
    let area = m.area(128)?;
    let pi_area = PI * area;
    let mut cands = symmetric_candidates(m)?;
    let planar: Vec<&Candidate> = cands
        .iter()
        .filter(|c| c.simple && c.orbit.planarity_defect() < 1e-8)
        .collect();
    let shortest = (*planar
        .iter()
        .min_by(|a, b| a.length().total_cmp(&b.length()))
        .ok_or_else(|| {
            Error::SectionInvalid("no simple planar closed geodesic among the seeds".into())
        })?)
    .clone();
    let longest = (*planar
        .iter()
        .max_by(|a, b| a.length().total_cmp(&b.length()))
        .expect("non-empty"))
    .clone();
    let grid = build_section(m, &shortest, opts)?;
    let (lift, _, section) = summarize(&grid, area)?;
    let upper_section = if longest.length() - shortest.length() > SAME_LENGTH {
        let g2 = build_section(m, &longest, opts)?;
        Some(summarize(&g2, area)?.2)
    } else {
        None
    };
    let (extra, failures) = fixed_point_candidates(&grid, &lift, opts.fixed_point_seeds);
    if failures > 0 {
        warnings.push(format!(
            "{failures} fixed-point seeds did not close under shooting"
        ));
    }
    for c in extra {
        push_unique(&mut cands, c);
    }
    let l_min = cands
        .iter()
        .map(Candidate::length)
        .fold(f64::INFINITY, f64::min);
    let l_max_simple = cands
        .iter()
        .filter(|c| c.simple)
        .map(Candidate::length)
        .fold(f64::NEG_INFINITY, f64::max);
    let minimizer_simple = cands
        .iter()
        .filter(|c| c.length() - l_min <= SAME_LENGTH)
        .all(|c| c.simple);
    if !minimizer_simple {
        warnings.push("a shortest candidate failed the simplicity test".into());
    }
    let tol = opts.tol_verdict * area;
    let lower_margin = pi_area - l_min * l_min;
    let upper_margin = l_max_simple * l_max_simple - pi_area;
    let identity_distance = lift.distance_to_identity();
    let zoll_flag = identity_distance < ZOLL_TOL;
    let rel = |l: f64| (l * l - pi_area).abs() / pi_area;
    let zoll_equalities = !zoll_flag || (rel(l_min) < 1e-4 && rel(l_max_simple) < 1e-4);
    let near_equality = lower_margin.abs() < 1e-6 * area || upper_margin.abs() < 1e-6 * area;
    let equality_implies_zoll = !near_equality || identity_distance < 1e-4;
    let klingenberg_bound = 2.0 * PI / ext.k_max.sqrt() - 1e-6;
    let klingenberg = cands.iter().all(|c| c.length() >= klingenberg_bound);
    let fixed_point_lengths = grid
        .nodes
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let (x, y) = (grid.grid.x(k / grid.grid.ny), grid.grid.y(k % grid.grid.ny));
            (lift.big_x[*k] - x).abs().max((lift.big_y[*k] - y).abs()) <= 1e-6
        })
        .all(|(_, d)| d.tau >= l_min - 1e-5);
    let identities = identities_ok(&section, opts.tol_identity)
        && upper_section
            .as_ref()
            .is_none_or(|s| identities_ok(s, opts.tol_identity));
    let two_gon = two_gon_perimeter_check(&grid);
    let lower_inequality = l_min * l_min <= pi_area + tol;
    let upper_inequality = l_max_simple * l_max_simple >= pi_area - tol;
    let pass = lower_inequality
        && upper_inequality
        && zoll_equalities
        && equality_implies_zoll
        && identities
        && klingenberg
        && fixed_point_lengths
        && (!opts.strict || warnings.is_empty());
    let mut summaries: Vec<CandidateSummary> = cands
        .iter()
        .map(|c| CandidateSummary {
            source: c.source,
            length: c.length(),
            simple: c.simple,
            residual: c.orbit.residual,
        })
        .collect();
    summaries.sort_by(|a, b| a.length.total_cmp(&b.length));
    Ok(SystolicReport {
        metric: m.descriptor(),
        delta,
        k_min: ext.k_min,
        k_max: ext.k_max,
        area,
        l_min,
        l_max_simple,
        l_max_is_lower_bound: true,
        rho_sys: l_min * l_min / area,
        pi_area,
        lower_margin,
        upper_margin,
        flux: section.flux,
        cal: section.cal,
        identity_distance,
        section,
        upper_section,
        length_classes: length_classes(&cands),
        candidates: summaries,
        two_gon,
        verdicts: Verdicts {
            lower_inequality,
            upper_inequality,
            zoll_flag,
            zoll_equalities,
            equality_implies_zoll,
            identities,
            klingenberg,
            fixed_point_lengths,
            minimizer_simple,
            pass,
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AuditOptions {
        AuditOptions {
            nx: 32,
            ny: 33,
            arc_stride: 8,
            ..AuditOptions::default()
        }
    }

    #[test]
    fn round_audit_is_an_equality() {
        let m = MetricModel::round(1.0).unwrap();
        let r = audit(&m, &small()).unwrap();
        assert!(r.verdicts.pass, "{:?}", r.verdicts);
        assert!(r.verdicts.zoll_flag);
        assert!((r.rho_sys - PI).abs() < 1e-9 * PI);
        assert_eq!(r.length_classes.len(), 1);
    }

    #[test]
    fn spheroid_audit_is_strict() {
        let m = MetricModel::spheroid(1.03).unwrap();
        let r = audit(&m, &small()).unwrap();
        assert!(r.verdicts.pass, "{:?} {:?}", r.verdicts, r.warnings);
        assert!(!r.verdicts.zoll_flag);
        assert!(r.lower_margin > 1e-3 && r.upper_margin > 1e-3);
        assert!(r.upper_section.is_some());
    }

    #[test]
    fn weak_pinching_is_refused() {
        let m = MetricModel::spheroid(1.5).unwrap();
        assert!(matches!(audit(&m, &small()), Err(Error::Refused(_))));
    }

    #[test]
    fn strict_mode_fails_on_warnings() {
        let m = MetricModel::spheroid(1.1).unwrap();
        let mut o = AuditOptions {
            nx: 64,
            ny: 64,
            ..small()
        };
        let r = audit(&m, &o).unwrap();
        assert!(!r.warnings.is_empty());
        o.strict = true;
        assert!(!audit(&m, &o).unwrap().verdicts.pass);
    }
}
