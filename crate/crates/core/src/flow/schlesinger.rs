//! The Schlesinger vector field
//!
//! ```text
//! dA(j)/dλk = [A(k), A(j)] / (λk - λj)          (j != k)
//! dA(k)/dλk = -Σ_{j != k} dA(j)/dλk
//! ```
//!
//! its integration along polyline paths of `λk`, and the isomonodromic
//! Hamiltonians `Hk = Σ_{i != k} a_ik / (λk - λi)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_unit, OdeSystem, StepControl, StepStats};
use crate::error::{Error, Result};
use crate::orbit::OrbitPoint;
use crate::reduction::{check_lambdas, Configuration};
use crate::sl2::{bracket, killing, Sl2Element};

/// Minimum distance between the moving pole and the others, relative to
/// `max(1, max |λ|)`.
pub const POLE_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Initial step as a fraction of a path segment.
    pub step_init: f64,
    pub tol_local: f64,
    pub tol_drift: f64,
    pub t_path: Vec<C64>,
    /// Recorded samples per path segment.
    pub samples_per_segment: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self { step_init: 1e-2, tol_local: 1e-10, tol_drift: 1e-8, t_path: vec![], samples_per_segment: 10 }
    }
}

impl FlowParams {
    pub fn with_path(path: Vec<C64>) -> Self {
        Self { t_path: path, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.step_init) || !positive(self.tol_local) || !positive(self.tol_drift) {
            return Err(Error::InvalidParams("step and tolerances must be positive".into()));
        }
        if self.samples_per_segment == 0 {
            return Err(Error::InvalidParams("samples_per_segment must be at least 1".into()));
        }
        if self.t_path.iter().any(|t| !(t.re.is_finite() && t.im.is_finite())) {
            return Err(Error::InvalidParams("path waypoints must be finite".into()));
        }
        Ok(())
    }

    pub(crate) fn step_control(&self) -> StepControl {
        StepControl { rtol: self.tol_local, atol: self.tol_local, h_init: self.step_init.min(1.0), ..Default::default() }
    }

    pub(crate) fn checkpoints(&self) -> Vec<f64> {
        let m = self.samples_per_segment;
        (1..=m).map(|i| i as f64 / m as f64).collect()
    }
}

/// The segments `(a, b)` of the path starting at `start`. A first waypoint
/// equal to `start` is skipped.
pub fn path_segments(start: C64, path: &[C64]) -> Vec<(C64, C64)> {
    let mut out = Vec::new();
    let mut a = start;
    for (m, &b) in path.iter().enumerate() {
        if m == 0 && b == start {
            continue;
        }
        out.push((a, b));
        a = b;
    }
    out
}

fn segment_distance(a: C64, b: C64, x: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (x - a).norm();
    }
    let s = (((x - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * s - x).norm()
}

/// Checks that moving `λk` along the path stays clear of the other poles.
pub fn check_path(lambdas: &[C64], k: usize, path: &[C64]) -> Result<()> {
    let scale = lambdas.iter().chain(path).map(|l| l.norm()).fold(1.0, f64::max);
    for (a, b) in path_segments(lambdas[k], path) {
        for (i, &l) in lambdas.iter().enumerate() {
            if i == k {
                continue;
            }
            let gap = segment_distance(a, b, l);
            if gap <= POLE_MARGIN * scale {
                return Err(Error::PoleCollision { i: k, j: i, gap });
            }
        }
    }
    Ok(())
}

fn pole_gaps(lambdas: &[C64], k: usize, t: C64) -> Result<Vec<C64>> {
    let scale = lambdas.iter().map(|l| l.norm()).fold(1.0f64, f64::max).max(t.norm());
    lambdas
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            if j == k {
                return Ok(C64::new(0.0, 0.0));
            }
            let gap = t - l;
            if gap.norm() <= POLE_MARGIN * scale {
                Err(Error::PoleCollision { i: k, j, gap: gap.norm() })
            } else {
                Ok(gap.inv())
            }
        })
        .collect()
}

/// The vector field on affine parts with `λk = t` (the other poles from
/// `lambdas`).
pub fn rhs_affine(mats: &[Sl2Element], lambdas: &[C64], k: usize, t: C64) -> Result<Vec<Sl2Element>> {
    let inv = pole_gaps(lambdas, k, t)?;
    let mut out = vec![Sl2Element::ZERO; mats.len()];
    let mut total = Sl2Element::ZERO;
    for j in 0..mats.len() {
        if j != k {
            let d = bracket(mats[k], mats[j]) * inv[j];
            out[j] = d;
            total += d;
        }
    }
    out[k] = -total;
    Ok(out)
}

/// `dA(j)/dλk` for all `j`.
pub fn schlesinger_rhs(config: &Configuration, k: usize) -> Result<Vec<Sl2Element>> {
    let lambdas = config.lambdas()?;
    if k > config.n() {
        return Err(Error::InvalidParams(format!("time index {k} out of range")));
    }
    rhs_affine(&config.affine_parts(), lambdas, k, lambdas[k])
}

/// `Hk = Σ_{i != k} a_ik / (λk - λi)`.
pub fn hamiltonian_k(config: &Configuration, k: usize) -> Result<C64> {
    let lambdas = config.lambdas()?;
    if k > config.n() {
        return Err(Error::InvalidParams(format!("time index {k} out of range")));
    }
    let inv = pole_gaps(lambdas, k, lambdas[k])?;
    let mats = config.affine_parts();
    Ok((0..mats.len()).filter(|&i| i != k).map(|i| killing(mats[i], mats[k]) * inv[i]).sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub config: Configuration,
    pub time_index: usize,
    pub t: C64,
}

impl FlowState {
    pub fn new(config: Configuration, time_index: usize) -> Result<Self> {
        let t = *config.lambdas()?.get(time_index).ok_or_else(|| {
            Error::InvalidParams(format!("time index {time_index} out of range"))
        })?;
        Ok(Self { config, time_index, t })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSample {
    pub t: C64,
    pub config: Configuration,
    /// `max_i |a_ii(t) - a_ii(0)|`
    pub casimir_drift: f64,
    /// `‖Σ A(t)‖`
    pub sum_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<FlowSample>,
    pub max_casimir_drift: f64,
    pub max_sum_drift: f64,
    /// `max(1, max ‖A(0)‖)`, the scale the drifts are measured against.
    pub scale: f64,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("trajectory has an initial sample")
    }
}

/// State layout: three entries per point, then three per divisor direction.
struct FullSystem {
    k: usize,
    lambdas: Vec<C64>,
    divisors: Vec<usize>,
    segment: (C64, C64),
    casimirs0: Vec<C64>,
    roots: Vec<C64>,
    limit: f64,
    scale: f64,
    max_casimir: f64,
    max_sum: f64,
    record: Vec<(f64, Vec<C64>)>,
}

impl FullSystem {
    fn mats(&self, y: &[C64]) -> Vec<Sl2Element> {
        y.chunks(3).take(self.lambdas.len()).map(|c| Sl2Element::new(c[0], c[1], c[2])).collect()
    }

    fn drifts(&self, y: &[C64]) -> (f64, f64) {
        let mats = self.mats(y);
        let cas = mats
            .iter()
            .zip(&self.casimirs0)
            .map(|(m, c0)| (m.casimir() - c0).norm())
            .fold(0.0, f64::max);
        (cas, mats.iter().copied().sum::<Sl2Element>().norm())
    }
}

impl OdeSystem for FullSystem {
    fn rhs(&self, s: f64, y: &[C64]) -> Result<Vec<C64>> {
        let (a, b) = self.segment;
        let t = a + (b - a) * s;
        let mats = self.mats(y);
        let d = rhs_affine(&mats, &self.lambdas, self.k, t)?;
        let mut out = Vec::with_capacity(y.len());
        for v in &d {
            out.extend((*v * (b - a)).to_array());
        }
        // divisor directions follow the linearized flow dD = [A(k), D] dlog(λk - λj)
        let inv = pole_gaps(&self.lambdas, self.k, t)?;
        for (m, &j) in self.divisors.iter().enumerate() {
            let c = &y[3 * (self.lambdas.len() + m)..][..3];
            let dir = Sl2Element::new(c[0], c[1], c[2]);
            let v = if j == self.k {
                -mats
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(i, a)| bracket(dir, *a) * inv[i])
                    .sum::<Sl2Element>()
            } else {
                bracket(mats[self.k], dir) * inv[j]
            };
            out.extend((v * (b - a)).to_array());
        }
        Ok(out)
    }

    fn accepted(&mut self, s: f64, y: &mut [C64], checkpoint: Option<usize>) -> Result<()> {
        let (cas, sum) = self.drifts(y);
        self.max_casimir = self.max_casimir.max(cas);
        self.max_sum = self.max_sum.max(sum);
        if cas > self.limit * self.scale {
            return Err(Error::DriftAlarm { what: "casimir", drift: cas, limit: self.limit * self.scale });
        }
        if sum > self.limit * self.scale {
            return Err(Error::DriftAlarm { what: "sum", drift: sum, limit: self.limit * self.scale });
        }
        // keep divisor directions normalized
        let base = 3 * self.lambdas.len();
        for m in 0..self.divisors.len() {
            let c = &mut y[base + 3 * m..][..3];
            if let Some(d) = Sl2Element::new(c[0], c[1], c[2]).normalized() {
                c.copy_from_slice(&d.to_array());
            }
        }
        if checkpoint.is_some() {
            self.record.push((s, y.to_vec()));
        }
        Ok(())
    }
}

impl FullSystem {
    fn configuration(&self, y: &[C64], t: C64) -> Configuration {
        let mats = self.mats(y);
        let base = 3 * self.lambdas.len();
        let points = mats
            .iter()
            .enumerate()
            .map(|(j, m)| match self.divisors.iter().position(|&d| d == j) {
                Some(pos) => {
                    let c = &y[base + 3 * pos..][..3];
                    OrbitPoint::divisor_unchecked(Sl2Element::new(c[0], c[1], c[2]))
                }
                None => OrbitPoint::from_affine_unchecked(*m, self.roots[j]),
            })
            .collect();
        let mut lambdas = self.lambdas.clone();
        lambdas[self.k] = t;
        Configuration::new_unchecked(points, Some(lambdas))
    }
}

/// Integrates the Schlesinger system while `λk` follows the path, recording
/// `samples_per_segment` samples per segment after the initial one.
pub fn integrate(state: &FlowState, params: &FlowParams) -> Result<Trajectory> {
    params.validate()?;
    let config = &state.config;
    let k = state.time_index;
    let mut lambdas = config.lambdas()?.to_vec();
    if k >= lambdas.len() {
        return Err(Error::InvalidParams(format!("time index {k} out of range")));
    }
    lambdas[k] = state.t;
    check_lambdas(&lambdas, lambdas.len())?;
    check_path(&lambdas, k, &params.t_path)?;

    let points = config.points();
    let divisors: Vec<usize> = (0..points.len()).filter(|&j| points[j].is_divisor()).collect();
    let mut y: Vec<C64> = points.iter().flat_map(|p| p.affine().to_array()).collect();
    for &j in &divisors {
        y.extend(points[j].projective().to_array());
    }
    let scale = config.scale();
    let mut sys = FullSystem {
        k,
        lambdas: lambdas.clone(),
        divisors,
        segment: (state.t, state.t),
        casimirs0: config.casimirs(),
        roots: config.roots(),
        limit: params.tol_drift,
        scale,
        max_casimir: 0.0,
        max_sum: 0.0,
        record: vec![],
    };
    let (c0, s0) = sys.drifts(&y);
    sys.max_casimir = c0;
    sys.max_sum = s0;
    let mut samples =
        vec![FlowSample { t: state.t, config: sys.configuration(&y, state.t), casimir_drift: c0, sum_drift: s0 }];

    let mut ctl = params.step_control();
    let cps = params.checkpoints();
    let mut stats = StepStats::default();
    for (a, b) in path_segments(state.t, &params.t_path) {
        sys.segment = (a, b);
        sys.record.clear();
        let st = integrate_unit(&mut sys, &mut y, &cps, &ctl)?;
        stats.accepted += st.accepted;
        stats.rejected += st.rejected;
        stats.evaluations += st.evaluations;
        stats.last_h = st.last_h;
        ctl.h_init = st.last_h.max(params.step_init * 1e-3);
        for (s, ys) in std::mem::take(&mut sys.record) {
            let t = a + (b - a) * s;
            let (cd, sd) = sys.drifts(&ys);
            samples.push(FlowSample { t, config: sys.configuration(&ys, t), casimir_drift: cd, sum_drift: sd });
        }
    }
    log::debug!(
        "schlesinger flow: {} accepted, {} rejected steps; drifts {:e} / {:e}",
        stats.accepted,
        stats.rejected,
        sys.max_casimir,
        sys.max_sum
    );
    Ok(Trajectory { samples, max_casimir_drift: sys.max_casimir, max_sum_drift: sys.max_sum, scale, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::invariants;
    use crate::sampling;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn spaced(n: usize) -> Vec<C64> {
        (0..=n).map(|j| c(3.0 * j as f64, 0.0)).collect()
    }

    #[test]
    fn rhs_properties() {
        let mut rng = sampling::rng(81);
        for n in 3..=5 {
            let cfg = sampling::random_configuration(&mut rng, n);
            for k in 0..=n {
                let d = schlesinger_rhs(&cfg, k).unwrap();
                let total: Sl2Element = d.iter().copied().sum();
                assert!(total.norm() < 1e-13 * cfg.scale().powi(2));
                for (dj, a) in d.iter().zip(cfg.affine_parts()) {
                    assert!(killing(*dj, a).norm() < 1e-12 * cfg.scale().powi(3));
                }
            }
        }
        let zero = OrbitPoint::new(Sl2Element::ZERO, Some(Sl2Element::e12()), C64::default()).unwrap();
        let cfg = Configuration::new(vec![zero; 4], Some(sampling::default_lambdas(3))).unwrap();
        assert!(schlesinger_rhs(&cfg, 1).unwrap().iter().all(|d| d.is_zero()));
    }

    #[test]
    fn rhs_matches_matrix_commutators() {
        let mut rng = sampling::rng(82);
        let cfg = sampling::random_configuration(&mut rng, 4);
        let l = cfg.lambdas().unwrap().to_vec();
        let m: Vec<_> = cfg.affine_parts().iter().map(|a| a.matrix()).collect();
        let k = 2;
        let d = schlesinger_rhs(&cfg, k).unwrap();
        for j in 0..5 {
            if j == k {
                continue;
            }
            let com = |r: usize, s: usize| {
                (0..2).map(|t| m[k][r][t] * m[j][t][s] - m[j][r][t] * m[k][t][s]).sum::<C64>() / (l[k] - l[j])
            };
            let dm = d[j].matrix();
            for r in 0..2 {
                for s in 0..2 {
                    assert!((dm[r][s] - com(r, s)).norm() < 1e-13 * cfg.scale().powi(2));
                }
            }
        }
    }

    #[test]
    fn pole_collision_detected() {
        let mut rng = sampling::rng(83);
        let cfg = sampling::random_configuration(&mut rng, 3);
        let state = FlowState::new(cfg, 0).unwrap();
        let params = FlowParams::with_path(vec![c(1.5, 0.0)]);
        assert!(matches!(integrate(&state, &params), Err(Error::PoleCollision { i: 0, j: 1, .. })));
        let params = FlowParams::with_path(vec![c(0.5, 0.5), c(0.5, -0.5)]);
        assert!(integrate(&state, &params).is_ok());
    }

    #[test]
    fn commuting_family_is_constant() {
        let h = Sl2Element::h();
        let pts: Vec<_> = [1.0, 2.0, -0.5, -2.5]
            .iter()
            .map(|&x| OrbitPoint::new(h * x, None, c(x, 0.0)).unwrap())
            .collect();
        let cfg = Configuration::new(pts, Some(sampling::default_lambdas(3))).unwrap();
        let traj = integrate(&FlowState::new(cfg.clone(), 1).unwrap(), &FlowParams::with_path(vec![c(1.3, 0.2)]))
            .unwrap();
        for s in &traj.samples {
            assert_eq!(s.config.affine_parts(), cfg.affine_parts());
        }
        assert_eq!(traj.last().t, c(1.3, 0.2));
    }

    #[test]
    fn conservation_along_unit_path() {
        let mut rng = sampling::rng(84);
        for n in [3, 5] {
            let cfg = sampling::random_configuration(&mut rng, n).with_lambdas(spaced(n)).unwrap();
            let params = FlowParams { tol_local: 1e-12, ..FlowParams::with_path(vec![c(0.6, 0.8)]) };
            let traj = integrate(&FlowState::new(cfg.clone(), 0).unwrap(), &params).unwrap();
            assert!(traj.max_casimir_drift <= 1e-8 * traj.scale, "{}", traj.max_casimir_drift);
            assert!(traj.max_sum_drift <= 1e-8 * traj.scale);
            assert_eq!(traj.samples.len(), 11);
            let last = &traj.last().config;
            assert_eq!(last.lambdas().unwrap()[0], c(0.6, 0.8));
            assert!(last.points().iter().all(|p| p.quadric_residual() < 1e-9));
        }
    }

    #[test]
    fn hamiltonian_matches_trace_sum() {
        let mut rng = sampling::rng(85);
        let cfg = sampling::random_configuration(&mut rng, 3);
        let l = vec![c(0.3, 0.4), c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        let cfg = cfg.with_lambdas(l.clone()).unwrap();
        let m: Vec<_> = cfg.affine_parts().iter().map(|a| a.matrix()).collect();
        let tr = |a: usize, b: usize| -> C64 {
            (0..2).map(|r| (0..2).map(|s| m[a][r][s] * m[b][s][r]).sum::<C64>()).sum()
        };
        let brute: C64 = (1..4).map(|i| tr(i, 0) / (l[0] - l[i])).sum();
        let h = hamiltonian_k(&cfg, 0).unwrap();
        assert!((h - brute).norm() <= 1e-12 * (1.0 + brute.norm()));
        let g = sampling::random_group(&mut rng);
        assert!((hamiltonian_k(&cfg.conjugate(&g), 0).unwrap() - h).norm() <= 1e-10 * (1.0 + h.norm()));
        let t = invariants(&cfg);
        assert!((t.a[0][1] - tr(0, 1)).norm() < 1e-12 * (1.0 + t.max_modulus()));
    }

    #[test]
    fn flows_commute_on_small_boxes() {
        let mut rng = sampling::rng(86);
        let cfg = sampling::random_configuration(&mut rng, 3).with_lambdas(spaced(3)).unwrap();
        let params = |p: C64| FlowParams { tol_local: 1e-12, ..FlowParams::with_path(vec![p]) };
        let run = |cfg: &Configuration, k: usize, dt: C64| {
            let t = cfg.lambdas().unwrap()[k];
            integrate(&FlowState::new(cfg.clone(), k).unwrap(), &params(t + dt)).unwrap().last().config.clone()
        };
        let (k, m) = (1, 2);
        let dt = c(0.1, 0.0);
        let km = run(&run(&cfg, k, dt), m, dt);
        let mk = run(&run(&cfg, m, dt), k, dt);
        let diff = km
            .affine_parts()
            .iter()
            .zip(mk.affine_parts())
            .map(|(a, b)| (*a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-6 * cfg.scale(), "{diff}");
        // a genuinely moving flow
        let moved = run(&cfg, k, dt);
        assert!((moved.affine_parts()[0] - cfg.affine_parts()[0]).norm() > 1e-4);
    }

    #[test]
    fn divisor_directions_follow_the_flow() {
        // a nearby non-divisor point A = ε D behaves like the divisor direction
        let mut rng = sampling::rng(87);
        let cfg = sampling::random_configuration_kind(&mut rng, 3, sampling::ConfigKind::DivisorFactor)
            .with_lambdas(spaced(3))
            .unwrap();
        let d = cfg.points().iter().position(|p| p.is_divisor()).unwrap();
        let eps = 1e-7;
        let mut pts = cfg.points().to_vec();
        let shift = pts[d].projective() * eps;
        pts[d] = OrbitPoint::new(shift, None, C64::default()).unwrap();
        let other = (d + 1) % 4;
        pts[other] = sampling::random_orbit_point(&mut rng, pts[other].affine() - shift);
        let params = FlowParams { tol_local: 1e-12, ..FlowParams::with_path(vec![c(0.5, 0.0)]) };
        let near = Configuration::new_unchecked(pts, cfg.lambdas().ok().map(|l| l.to_vec()));
        let a = integrate(&FlowState::new(cfg, 0).unwrap(), &params).unwrap();
        let b = integrate(&FlowState::new(near, 0).unwrap(), &params).unwrap();
        let da = a.last().config.points()[d].projective();
        let db = b.last().config.points()[d].affine().normalized().unwrap();
        assert!((da - db).norm() < 1e-5, "{:?} {:?}", da, db);
    }
}
