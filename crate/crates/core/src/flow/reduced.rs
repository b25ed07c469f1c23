//! The reduced Hamiltonian system on the product of factor quadrics: each
//! factor carries canonical chart coordinates `(p, q)` with `ω = dp ∧ dq`,
//! and the Hamiltonian `Hk` is the polynomial `Σ a_ik / (λk - λi)` composed
//! with the section and the chart parametrizations.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::{integrate_unit, OdeSystem, StepStats};
use super::schlesinger::{check_path, integrate, path_segments, FlowParams, FlowState, Trajectory};
use crate::basis::{chart_select, score_chart, ChartSpec};
use crate::dual::{gradient, jvp, Scalar};
use crate::error::{Error, Result};
use crate::orbit::{
    chart_to_affine, from_chart, omega, preferred_chart, transition, ChartCoords, ChartId, OrbitTangent,
};
use crate::reduction::{check_lambdas, invariants, lift, lift_entries, reduce, trace_pair, Configuration, ReducedPoint};

/// Sign `s` in `dq/dt = s ∂H/∂p`, `dp/dt = -s ∂H/∂q`, fixed by
/// `hamiltonian_sign_calibration` in the tests.
pub const HAMILTONIAN_SIGN: f64 = 1.0;
/// Factor charts are switched once `|p|` exceeds this.
pub const RECHART_P: f64 = 2.0;
/// The accompanying chart is switched once its score drops below this.
pub const RECHART_SCORE: f64 = 1e-8;

/// A reduced point in factor chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedState {
    /// Casimirs, roots and accompanying chart; its coordinates are stale.
    template: ReducedPoint,
    charts: Vec<ChartId>,
    /// `(p, q)` per factor, interleaved.
    coords: Vec<C64>,
}

impl ReducedState {
    pub fn from_reduced(r: &ReducedPoint) -> Result<Self> {
        r.validate()?;
        let mut charts = Vec::with_capacity(r.n - 2);
        let mut coords = Vec::with_capacity(2 * (r.n - 2));
        for f in r.factors()? {
            let c = preferred_chart(&f)?;
            charts.push(c.chart);
            coords.extend([c.p, c.q]);
        }
        Ok(Self { template: r.clone(), charts, coords })
    }

    pub fn chart(&self) -> &ChartSpec {
        &self.template.chart
    }

    pub fn factor_charts(&self) -> &[ChartId] {
        &self.charts
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    fn slot_roots(&self) -> Vec<C64> {
        let n = self.template.n;
        self.template.chart.surviving_indices(n).iter().map(|&k| self.template.roots[k]).collect()
    }

    fn with_coords(&self, coords: &[C64]) -> ReducedPoint {
        let mut r = self.template.clone();
        for (s, (&chart, root)) in self.charts.iter().zip(self.slot_roots()).enumerate() {
            let pt = from_chart(ChartCoords { chart, p: coords[2 * s], q: coords[2 * s + 1] }, root);
            let a = pt.affine();
            r.q[s] = a.x1;
            r.qp[s] = a.x2;
            r.beta[s] = a.x3;
            r.directions[s] = pt.is_divisor().then(|| pt.projective());
        }
        r
    }

    pub fn to_reduced(&self) -> ReducedPoint {
        self.with_coords(&self.coords)
    }

    /// Affine entries of all `n + 1` matrices as functions of the chart
    /// coordinates.
    fn entries<T: Scalar>(&self, coords: &[T]) -> Vec<[T; 3]> {
        let roots = self.slot_roots();
        let factors: Vec<[T; 3]> = self
            .charts
            .iter()
            .enumerate()
            .map(|(s, &chart)| chart_to_affine(chart, coords[2 * s], coords[2 * s + 1], T::cst(roots[s])))
            .collect();
        let t = &self.template;
        lift_entries(t.n, &t.chart, t.a[t.chart.index_j], &factors)
    }

    fn hamiltonian<T: Scalar>(&self, coords: &[T], lambdas: &[C64], k: usize) -> T {
        let e = self.entries(coords);
        let mut h = T::zero();
        for i in 0..e.len() {
            if i != k {
                h = h + trace_pair(&e[i], &e[k]) * T::cst((lambdas[k] - lambdas[i]).inv());
            }
        }
        h
    }

    /// Switches every factor with `|p| > RECHART_P` to its other chart.
    fn rechart_factors(&mut self, coords: &mut [C64]) -> Result<usize> {
        let roots = self.slot_roots();
        let mut switched = 0;
        for s in 0..self.charts.len() {
            if coords[2 * s].norm() > RECHART_P {
                let c = ChartCoords { chart: self.charts[s], p: coords[2 * s], q: coords[2 * s + 1] };
                let t = transition(c, roots[s])?;
                self.charts[s] = t.chart;
                coords[2 * s] = t.p;
                coords[2 * s + 1] = t.q;
                switched += 1;
            }
        }
        Ok(switched)
    }
}

/// `Hk` at a reduced point, with `lambdas` giving all pole positions.
pub fn reduced_hamiltonian(r: &ReducedPoint, lambdas: &[C64], k: usize) -> Result<C64> {
    check_lambdas(lambdas, r.n + 1)?;
    let st = ReducedState::from_reduced(r)?;
    Ok(st.hamiltonian(&st.coords, lambdas, k))
}

/// Hamilton's equations for `Hk` in factor chart coordinates:
/// `(dp/dλk, dq/dλk)` per factor, interleaved.
pub fn reduced_rhs_signed(state: &ReducedState, coords: &[C64], lambdas: &[C64], k: usize, sign: f64) -> Vec<C64> {
    let (_, g) = gradient(|x| state.hamiltonian(x, lambdas, k), coords);
    let mut out = Vec::with_capacity(coords.len());
    for s in 0..coords.len() / 2 {
        out.push(-sign * g[2 * s + 1]);
        out.push(sign * g[2 * s]);
    }
    out
}

pub fn reduced_rhs(state: &ReducedState, lambdas: &[C64], k: usize) -> Result<Vec<C64>> {
    check_lambdas(lambdas, state.template.n + 1)?;
    Ok(reduced_rhs_signed(state, &state.coords, lambdas, k, HAMILTONIAN_SIGN))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSwitch {
    pub t: C64,
    pub from: ChartSpec,
    pub to: ChartSpec,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedTrajectory {
    pub samples: Vec<(C64, ReducedPoint)>,
    pub factor_switches: usize,
    pub chart_switches: Vec<ChartSwitch>,
    pub stats: StepStats,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedOptions {
    pub sign: f64,
    /// Allow switching the accompanying chart when it degenerates.
    pub rechart: bool,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        Self { sign: HAMILTONIAN_SIGN, rechart: true }
    }
}

struct ReducedSystem {
    state: ReducedState,
    lambdas: Vec<C64>,
    k: usize,
    segment: (C64, C64),
    opts: ReducedOptions,
    factor_switches: usize,
    chart_switches: Vec<ChartSwitch>,
    record: Vec<(f64, ReducedPoint)>,
}

impl ReducedSystem {
    fn lambdas_at(&self, s: f64) -> Vec<C64> {
        let (a, b) = self.segment;
        let mut l = self.lambdas.clone();
        l[self.k] = a + (b - a) * s;
        l
    }
}

impl OdeSystem for ReducedSystem {
    fn rhs(&self, s: f64, y: &[C64]) -> Result<Vec<C64>> {
        let (a, b) = self.segment;
        let l = self.lambdas_at(s);
        check_lambdas(&l, l.len())?;
        let v = reduced_rhs_signed(&self.state, y, &l, self.k, self.opts.sign);
        Ok(v.into_iter().map(|x| x * (b - a)).collect())
    }

    fn accepted(&mut self, s: f64, y: &mut [C64], checkpoint: Option<usize>) -> Result<()> {
        self.factor_switches += self.state.rechart_factors(y)?;
        if self.opts.rechart {
            let r = self.state.with_coords(y);
            let cfg = lift(&r)?;
            let score = score_chart(&cfg, &r.chart).unwrap_or(0.0);
            if score < RECHART_SCORE {
                let (chart, _) = chart_select(&cfg)?;
                let t = self.lambdas_at(s)[self.k];
                log::info!("accompanying chart switch at t = {t}: {:?} -> {:?}", r.chart, chart);
                self.chart_switches.push(ChartSwitch { t, from: r.chart, to: chart, score });
                let fresh = ReducedState::from_reduced(&reduce(&cfg, &chart)?)?;
                y.copy_from_slice(&fresh.coords);
                self.state = fresh;
            }
        }
        if checkpoint.is_some() {
            self.record.push((s, self.state.with_coords(y)));
        }
        Ok(())
    }
}

/// Integrates the reduced system while `λk` follows `params.t_path`,
/// sampling like [`integrate`].
pub fn integrate_reduced(
    r: &ReducedPoint,
    lambdas: &[C64],
    k: usize,
    params: &FlowParams,
    opts: ReducedOptions,
) -> Result<ReducedTrajectory> {
    params.validate()?;
    check_lambdas(lambdas, r.n + 1)?;
    if k > r.n {
        return Err(Error::InvalidParams(format!("time index {k} out of range")));
    }
    check_path(lambdas, k, &params.t_path)?;
    let state = ReducedState::from_reduced(r)?;
    let mut y = state.coords.clone();
    let t0 = lambdas[k];
    let mut sys = ReducedSystem {
        state,
        lambdas: lambdas.to_vec(),
        k,
        segment: (t0, t0),
        opts,
        factor_switches: 0,
        chart_switches: vec![],
        record: vec![],
    };
    let mut samples = vec![(t0, sys.state.to_reduced())];
    let mut ctl = params.step_control();
    let cps = params.checkpoints();
    let mut stats = StepStats::default();
    for (a, b) in path_segments(t0, &params.t_path) {
        sys.segment = (a, b);
        let st = integrate_unit(&mut sys, &mut y, &cps, &ctl)?;
        stats.accepted += st.accepted;
        stats.rejected += st.rejected;
        stats.evaluations += st.evaluations;
        stats.last_h = st.last_h;
        ctl.h_init = st.last_h.max(params.step_init * 1e-3);
        for (s, rp) in std::mem::take(&mut sys.record) {
            samples.push((a + (b - a) * s, rp));
        }
        sys.lambdas[k] = b;
    }
    Ok(ReducedTrajectory {
        samples,
        factor_switches: sys.factor_switches,
        chart_switches: sys.chart_switches,
        stats,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSample {
    pub t: C64,
    /// Distance of the reduced coordinates, when both curves share a chart.
    pub distance: Option<f64>,
    pub invariant_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowComparison {
    pub chart: ChartSpec,
    pub score: f64,
    pub sup_distance: f64,
    pub max_invariant_mismatch: f64,
    pub samples: Vec<ComparisonSample>,
    pub chart_switches: Vec<ChartSwitch>,
    pub max_casimir_drift: f64,
    pub max_sum_drift: f64,
}

/// Runs the full flow and reduces along it, runs the reduced flow from the
/// reduced initial point, and compares the two curves sample by sample.
pub fn compare_flows(config: &Configuration, k: usize, params: &FlowParams, opts: ReducedOptions) -> Result<FlowComparison> {
    let full = integrate(&FlowState::new(config.clone(), k)?, params)?;
    compare_with(&full, config, k, params, opts)
}

pub(crate) fn compare_with(
    full: &Trajectory,
    config: &Configuration,
    k: usize,
    params: &FlowParams,
    opts: ReducedOptions,
) -> Result<FlowComparison> {
    let (chart, score) = chart_select(config)?;
    let r0 = reduce(config, &chart)?;
    let red = integrate_reduced(&r0, config.lambdas()?, k, params, opts)?;
    let mut samples = Vec::with_capacity(full.samples.len());
    for (fs, (t, rp)) in full.samples.iter().zip(&red.samples) {
        debug_assert!((fs.t - t).norm() <= 1e-12 * (1.0 + t.norm()));
        let distance = if rp.chart == chart {
            reduce(&fs.config, &chart).ok().map(|rf| rf.distance(rp))
        } else {
            None
        };
        let mismatch = invariants(&lift(rp)?).relative_distance(&invariants(&fs.config));
        samples.push(ComparisonSample { t: *t, distance, invariant_mismatch: mismatch });
    }
    let sup_distance = samples.iter().filter_map(|s| s.distance).fold(0.0, f64::max);
    let max_invariant_mismatch = samples.iter().map(|s| s.invariant_mismatch).fold(0.0, f64::max);
    Ok(FlowComparison {
        chart,
        score,
        sup_distance,
        max_invariant_mismatch,
        samples,
        chart_switches: red.chart_switches,
        max_casimir_drift: full.max_casimir_drift,
        max_sum_drift: full.max_sum_drift,
    })
}

/// Compares the full flow against the reduced flow under both Hamiltonian
/// signs; returns `(sign, distance with +1, distance with -1)` where `sign`
/// is the one with the smaller distance.
pub fn calibrate_sign(config: &Configuration, k: usize, params: &FlowParams) -> Result<(f64, f64, f64)> {
    let full = integrate(&FlowState::new(config.clone(), k)?, params)?;
    let dist = |sign: f64| -> f64 {
        compare_with(&full, config, k, params, ReducedOptions { sign, rechart: false })
            .map(|c| c.sup_distance.max(c.max_invariant_mismatch))
            .unwrap_or(f64::INFINITY)
    };
    let (plus, minus) = (dist(1.0), dist(-1.0));
    Ok((if plus <= minus { 1.0 } else { -1.0 }, plus, minus))
}

/// Result of comparing the lifted form with the product form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormAgreement {
    /// `|Σ_{k=0}^{n} ω(k)(lifted u, lifted v) - Σ_s ωs(u, v)|`
    pub residual: f64,
    /// `|ω(0)|`, `|ω(i)|`, `|ω(j)|` on the lifted pair.
    pub special: [f64; 3],
    /// `max(1, max |individual terms|)`
    pub scale: f64,
}

/// Pushes the tangent pair `(u, v)` (chart tangents `(dp, dq)` per factor,
/// in the charts of `ReducedState::from_reduced(r)`) forward through the
/// section and compares the sum of the orbit forms of all `n + 1` points
/// with the product form on the factors.
pub fn form_pullback_check(r: &ReducedPoint, u: &[[C64; 2]], v: &[[C64; 2]]) -> Result<FormAgreement> {
    let st = ReducedState::from_reduced(r)?;
    let m = r.n - 2;
    if u.len() != m || v.len() != m {
        return Err(Error::InvalidReducedPoint(format!("expected {m} tangent components")));
    }
    let flat = |w: &[[C64; 2]]| -> Vec<C64> { w.iter().flat_map(|x| [x[0], x[1]]).collect() };
    let entries = |x: &[crate::dual::Dual]| st.entries(x).into_iter().flatten().collect::<Vec<_>>();
    let (_, du) = jvp(entries, &st.coords, &flat(u));
    let (_, dv) = jvp(entries, &st.coords, &flat(v));

    let cfg = lift(&st.to_reduced())?;
    let surviving = r.chart.surviving_indices(r.n);
    let mut total = C64::new(0.0, 0.0);
    let mut scale = 1.0f64;
    let mut special = [0.0; 3];
    for (k, pt) in cfg.points().iter().enumerate() {
        let w = if let (Some(s), true) = (surviving.iter().position(|&x| x == k), pt.is_divisor()) {
            let chart = st.charts[s];
            omega(
                pt,
                OrbitTangent::Chart { chart, dp: u[s][0], dq: u[s][1] },
                OrbitTangent::Chart { chart, dp: v[s][0], dq: v[s][1] },
            )?
        } else {
            let tu = [du[3 * k], du[3 * k + 1], du[3 * k + 2]];
            let tv = [dv[3 * k], dv[3 * k + 1], dv[3 * k + 2]];
            if tu.iter().chain(&tv).all(|x| x.norm() == 0.0) {
                C64::new(0.0, 0.0)
            } else {
                omega(pt, OrbitTangent::affine(tu), OrbitTangent::affine(tv))?
            }
        };
        scale = scale.max(w.norm());
        total += w;
        if k == 0 {
            special[0] = w.norm();
        } else if k == r.chart.index_i {
            special[1] = w.norm();
        } else if k == r.chart.index_j {
            special[2] = w.norm();
        }
    }
    let product: C64 = u.iter().zip(v).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).sum();
    scale = scale.max(product.norm());
    Ok(FormAgreement { residual: (total - product).norm(), special, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::OrbitPoint;
    use crate::sampling;
    use crate::sl2::Sl2Element;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn spaced(n: usize) -> Vec<C64> {
        (0..=n).map(|j| c(3.0 * j as f64, 0.0)).collect()
    }

    fn tangent<R: Rng>(rng: &mut R, m: usize) -> Vec<[C64; 2]> {
        (0..m).map(|_| [sampling::gaussian(rng), sampling::gaussian(rng)]).collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = sampling::rng(91);
        for n in [3, 4, 5] {
            let r = sampling::random_reduced_point(&mut rng, n, None, 0.0);
            let st = ReducedState::from_reduced(&r).unwrap();
            let l = spaced(n);
            let k = 1;
            let (_, g) = gradient(|x| st.hamiltonian(x, &l, k), &st.coords);
            let h = 1e-6;
            for m in 0..st.coords.len() {
                let mut xp = st.coords.clone();
                let mut xm = st.coords.clone();
                xp[m] += h;
                xm[m] -= h;
                let fd = (st.hamiltonian(&xp, &l, k) - st.hamiltonian(&xm, &l, k)) / (2.0 * h);
                assert!((fd - g[m]).norm() <= 1e-6 * (1.0 + g[m].norm()), "{fd} {}", g[m]);
            }
        }
    }

    #[test]
    fn hamiltonian_matches_configuration_value() {
        let mut rng = sampling::rng(92);
        let cfg = sampling::random_configuration(&mut rng, 4);
        let (chart, _) = chart_select(&cfg).unwrap();
        let r = reduce(&cfg, &chart).unwrap();
        for k in 0..=4 {
            let h = reduced_hamiltonian(&r, cfg.lambdas().unwrap(), k).unwrap();
            let full = super::super::schlesinger::hamiltonian_k(&cfg, k).unwrap();
            assert!((h - full).norm() <= 1e-9 * (1.0 + full.norm()));
        }
    }

    #[test]
    fn zero_factor_is_stationary() {
        // a factor whose matrix vanishes does not enter H: with q = 0 on the
        // divisor the q-velocity vanishes exactly
        let mut rng = sampling::rng(93);
        let r = sampling::random_reduced_point(&mut rng, 4, None, 1.0);
        let st = ReducedState::from_reduced(&r).unwrap();
        let v = reduced_rhs(&st, &spaced(4), 0).unwrap();
        assert_eq!(v[1], C64::default());
        assert_eq!(v[3], C64::default());
    }

    #[test]
    fn hamiltonian_sign_calibration() {
        let mut rng = sampling::rng(94);
        for n in [3, 4] {
            let cfg = sampling::random_configuration(&mut rng, n).with_lambdas(spaced(n)).unwrap();
            let params = FlowParams { tol_local: 1e-12, ..FlowParams::with_path(vec![c(0.3, 0.4)]) };
            let (sign, plus, minus) = calibrate_sign(&cfg, 0, &params).unwrap();
            assert_eq!(sign, HAMILTONIAN_SIGN, "{plus} {minus}");
            assert!(plus <= 1e-6 && minus > 1e-3, "{plus} {minus}");
        }
    }

    #[test]
    fn reduced_flow_matches_full_flow() {
        let mut rng = sampling::rng(95);
        for n in [3, 5] {
            let cfg = sampling::random_configuration(&mut rng, n).with_lambdas(spaced(n)).unwrap();
            let params = FlowParams { tol_local: 1e-12, ..FlowParams::with_path(vec![c(0.0, 0.5)]) };
            let cmp = compare_flows(&cfg, 1, &params, ReducedOptions::default()).unwrap();
            assert!(cmp.sup_distance <= 1e-6, "{}", cmp.sup_distance);
            assert!(cmp.max_invariant_mismatch <= 1e-6);
            assert!(cmp.samples.iter().all(|s| s.distance.is_some()));
        }
    }

    #[test]
    fn reduced_flow_with_divisor_factor() {
        let mut rng = sampling::rng(96);
        let cfg = sampling::random_configuration_kind(&mut rng, 4, sampling::ConfigKind::DivisorFactor)
            .with_lambdas(spaced(4))
            .unwrap();
        let params = FlowParams { tol_local: 1e-12, ..FlowParams::with_path(vec![c(0.4, 0.0)]) };
        let cmp = compare_flows(&cfg, 0, &params, ReducedOptions::default()).unwrap();
        assert!(cmp.sup_distance <= 1e-6, "{}", cmp.sup_distance);
    }

    #[test]
    fn factor_rechart_is_seamless() {
        let mut rng = sampling::rng(97);
        let r = sampling::random_reduced_point(&mut rng, 3, None, 0.0);
        let mut st = ReducedState::from_reduced(&r).unwrap();
        let mut y = st.coords.clone();
        y[0] = c(3.0, 1.0);
        let before = st.with_coords(&y);
        assert_eq!(st.rechart_factors(&mut y).unwrap(), 1);
        let after = st.with_coords(&y);
        assert!(before.distance(&after) < 1e-12);
    }

    #[test]
    fn form_pullback_agreement() {
        let mut rng = sampling::rng(98);
        for n in [3, 4, 5] {
            for _ in 0..50 {
                let r = sampling::random_reduced_point(&mut rng, n, None, 0.2);
                let u = tangent(&mut rng, n - 2);
                let v = tangent(&mut rng, n - 2);
                let f = form_pullback_check(&r, &u, &v).unwrap();
                assert!(f.residual <= 1e-8 * f.scale, "{f:?}");
                assert!(f.special.iter().all(|&x| x <= 1e-9 * f.scale), "{f:?}");
                let same = form_pullback_check(&r, &u, &u).unwrap();
                assert_eq!(same.residual, 0.0);
            }
        }
    }

    #[test]
    fn state_roundtrip() {
        let mut rng = sampling::rng(99);
        let r = sampling::random_reduced_point(&mut rng, 5, Some((1, 4)), 0.3);
        let st = ReducedState::from_reduced(&r).unwrap();
        assert!(st.to_reduced().distance(&r) < 1e-12);
        assert!(st.coords().iter().step_by(2).all(|p| p.norm() <= 1.0));
        let _ = OrbitPoint::new(Sl2Element::h(), None, c(1.0, 0.0)).unwrap();
    }
}
