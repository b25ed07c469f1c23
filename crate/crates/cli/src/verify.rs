//! Seeded property suites behind `verify`.

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use schlesinger_core::basis::{accompany, chart_condition, CHART_TOL};
use schlesinger_core::flow::{calibrate_sign, hamiltonian_k, integrate, reduced_hamiltonian, form_pullback_check};
use schlesinger_core::flow::{FlowParams, FlowState, HAMILTONIAN_SIGN};
use schlesinger_core::orbit::{chart_omega_check, from_chart, to_chart, transition, ChartCoords, ChartId};
use schlesinger_core::reduction::{normal_form_residual, reduce_with_basis};
use schlesinger_core::sampling::{self, ConfigKind, SampleRng};
use schlesinger_core::sl2::{bracket, eig_sigma, killing};
use schlesinger_core::{chart_select, invariants, lift, reduce};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub suite: &'static str,
    pub seed: u64,
    pub n_values: Vec<usize>,
    pub samples: usize,
    pub properties: Vec<PropertyResult>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

type Eval = fn(&mut SampleRng, usize) -> Vec<f64>;

struct Suite {
    name: &'static str,
    /// `(property, tolerance)`; `eval` returns one residual per property
    properties: &'static [(&'static str, f64)],
    /// Run on every `stride`-th sample only.
    stride: usize,
    eval: Eval,
}

const SUITES: &[Suite] = &[
    Suite { name: "sl2", properties: &[("eigen_relation", 1e-11), ("eigen_isotropy", 1e-10)], stride: 1, eval: sl2 },
    Suite { name: "basis", properties: &[("relations", 1e-9), ("rescaling", 1e-9)], stride: 1, eval: basis },
    Suite {
        name: "orbit",
        properties: &[("chart_roundtrip", 1e-10), ("transition", 1e-9), ("chart_omega", 1e-8)],
        stride: 1,
        eval: orbit,
    },
    Suite {
        name: "reduction",
        properties: &[
            ("chart_coverage", 0.0),
            ("normal_form", 1e-8),
            ("lift_reduce_invariants", 1e-8),
            ("gauge_invariance", 1e-8),
            ("hamiltonian_gauge", 1e-9),
        ],
        stride: 1,
        eval: reduction,
    },
    Suite {
        name: "section",
        properties: &[("reduce_lift", 1e-9), ("symplectic_restriction", 1e-8), ("special_forms", 1e-9)],
        stride: 1,
        eval: section,
    },
    Suite {
        name: "flow",
        properties: &[("casimir_drift", 1e-8), ("sum_drift", 1e-8), ("flow_commutation", 1e-6), ("hamiltonian_sign", 0.0)],
        stride: 10,
        eval: flow,
    },
];

fn sl2(rng: &mut SampleRng, _n: usize) -> Vec<f64> {
    loop {
        let a = sampling::random_sl2(rng);
        let b = sampling::random_sl2(rng);
        let root = sampling::random_root(rng, a.casimir());
        if let Ok(s) = eig_sigma(a, b, root) {
            let sn = s.norm();
            let eig = (bracket(a, s) - s * (2.0 * root)).norm() / sn;
            let iso = (killing(s, s).norm() / (sn * sn)).max(killing(a, s).norm() / (a.norm() * sn));
            return vec![eig, iso];
        }
    }
}

fn basis(rng: &mut SampleRng, _n: usize) -> Vec<f64> {
    loop {
        let dm = sampling::random_cone_direction(rng);
        let dp = sampling::random_cone_direction(rng);
        let an = sampling::random_sl2(rng);
        if !chart_condition(dm, dp, an, CHART_TOL) {
            continue;
        }
        let (Ok(b), Ok(b2)) = (accompany(dm, dp, an), accompany(dm * sampling::gaussian(rng), dp * sampling::gaussian(rng), an))
        else {
            return vec![f64::INFINITY; 2];
        };
        let rel = b.relation_residuals().into_iter().fold(0.0, f64::max);
        let scale = 1f64.max(b.sigma_minus.norm()).max(b.sigma_plus.norm()).max(b.sigma_3.norm());
        let d = (b2.sigma_minus - b.sigma_minus)
            .norm()
            .max((b2.sigma_plus - b.sigma_plus).norm())
            .max((b2.sigma_3 - b.sigma_3).norm());
        return vec![rel, d / scale];
    }
}

fn orbit(rng: &mut SampleRng, _n: usize) -> Vec<f64> {
    let chart = if rng.random::<bool>() { ChartId::Primary } else { ChartId::Secondary };
    let degenerate = rng.random::<f64>() < 0.2;
    let root = if degenerate { C64::default() } else { sampling::gaussian(rng) };
    let q = if degenerate && rng.random::<bool>() { C64::default() } else { sampling::gaussian(rng) };
    let c = ChartCoords { chart, p: sampling::gaussian(rng), q };
    let pt = from_chart(c, root);
    let scale = 1.0 + c.p.norm().max(c.q.norm());
    let round = to_chart(&pt, chart)
        .map(|b| (b.p - c.p).norm().max((b.q - c.q).norm()) / scale)
        .unwrap_or(f64::INFINITY);
    let trans = transition(c, root)
        .map(|t| {
            let o = from_chart(t, root);
            if pt.is_divisor() {
                (o.projective() - pt.projective()).norm()
            } else {
                (o.affine() - pt.affine()).norm() / (1.0 + pt.affine().norm())
            }
        })
        .unwrap_or(f64::INFINITY);
    let form = chart_omega_check(c, root).unwrap_or(f64::INFINITY);
    vec![round, trans, form]
}

fn random_kind(rng: &mut SampleRng) -> ConfigKind {
    match rng.random_range(0..8) {
        0 => ConfigKind::DivisorFactor,
        1 => ConfigKind::DivisorAtZero,
        2 => ConfigKind::NilpotentAtZero,
        _ => ConfigKind::Generic,
    }
}

fn reduction(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    let kind = random_kind(rng);
    let cfg = sampling::random_configuration_kind(rng, n, kind);
    let Ok((chart, _)) = chart_select(&cfg) else {
        return vec![1.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY];
    };
    let Ok((r, b)) = reduce_with_basis(&cfg, &chart) else {
        return vec![0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY];
    };
    let normal = normal_form_residual(&cfg, &chart, &b);
    let inv = lift(&r).map(|l| invariants(&l).relative_distance(&invariants(&cfg))).unwrap_or(f64::INFINITY);
    let g = sampling::random_group(rng);
    let gauged = cfg.conjugate(&g);
    let gauge = reduce(&gauged, &chart).map(|rg| rg.distance(&r)).unwrap_or(f64::INFINITY);
    let mut ham: f64 = 0.0;
    let lambdas = cfg.lambdas().expect("sampled with poles");
    for k in 0..=n {
        let (Ok(h), Ok(hg), Ok(hr)) = (hamiltonian_k(&cfg, k), hamiltonian_k(&gauged, k), reduced_hamiltonian(&r, lambdas, k))
        else {
            return vec![0.0, normal, inv, gauge, f64::INFINITY];
        };
        ham = ham.max((hg - h).norm().max((hr - h).norm()) / (1.0 + h.norm()));
    }
    vec![0.0, normal, inv, gauge, ham]
}

fn section(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    let i = rng.random_range(1..=n);
    let j = (i + rng.random_range(1..n) - 1) % n + 1;
    let r = sampling::random_reduced_point(rng, n, Some((i, j)), 0.2);
    let rl = lift(&r).and_then(|c| reduce(&c, &r.chart)).map(|b| b.distance(&r)).unwrap_or(f64::INFINITY);
    let mut tangent = || -> Vec<[C64; 2]> { (0..n - 2).map(|_| [sampling::gaussian(rng), sampling::gaussian(rng)]).collect() };
    let (u, v) = (tangent(), tangent());
    match form_pullback_check(&r, &u, &v) {
        Ok(f) => vec![rl, f.residual / f.scale, f.special.iter().fold(0.0, |m: f64, x| m.max(*x)) / f.scale],
        Err(_) => vec![rl, f64::INFINITY, f64::INFINITY],
    }
}

fn flow(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    let lambdas: Vec<C64> = (0..=n).map(|j| C64::new(3.0 * j as f64, 0.0)).collect();
    let cfg = sampling::random_configuration(rng, n).with_lambdas(lambdas).expect("distinct poles");
    let k = rng.random_range(0..=n);
    let t0 = cfg.lambdas().expect("poles")[k];
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let unit = FlowParams { tol_local: 1e-12, ..FlowParams::with_path(vec![t0 + C64::from_polar(1.0, angle)]) };
    let (cas, sum) = match integrate(&FlowState::new(cfg.clone(), k).expect("state"), &unit) {
        Ok(t) => (t.max_casimir_drift / t.scale, t.max_sum_drift / t.scale),
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    let half = FlowParams { t_path: vec![t0 + C64::from_polar(0.5, angle)], ..unit };
    let (dist, sign) = match calibrate_sign(&cfg, k, &half) {
        Ok((s, plus, _)) => (plus, if s == HAMILTONIAN_SIGN { 0.0 } else { 1.0 }),
        Err(_) => (f64::INFINITY, 1.0),
    };
    vec![cas, sum, dist, sign]
}

pub fn run(seed: u64, n_values: &[usize], samples: usize) -> RunReport {
    let mut jobs = Vec::new();
    for (si, suite) in SUITES.iter().enumerate() {
        for &n in n_values {
            for idx in (0..samples).step_by(suite.stride) {
                jobs.push((si, n, idx));
            }
        }
    }
    let results: Vec<(usize, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(si, n, idx)| {
            let mut rng = sampling::derived_rng(seed, &[si as u64, n as u64, idx as u64]);
            let vals = (SUITES[si].eval)(&mut rng, n);
            (si, vals.into_iter().map(|v| if v.is_nan() { f64::INFINITY } else { v }).collect())
        })
        .collect();

    let mut properties = Vec::new();
    for (si, suite) in SUITES.iter().enumerate() {
        for (pi, &(name, tolerance)) in suite.properties.iter().enumerate() {
            let vals: Vec<f64> = results.iter().filter(|(s, _)| *s == si).map(|(_, v)| v[pi]).collect();
            let max_residual = vals.iter().copied().fold(0.0, f64::max);
            properties.push(PropertyResult {
                suite: suite.name,
                name,
                samples: vals.len(),
                max_residual,
                tolerance,
                passed: max_residual <= tolerance,
            });
        }
    }
    let passed = properties.iter().all(|p| p.passed);
    RunReport { suite: "verify", seed, n_values: n_values.to_vec(), samples, properties, passed, wall_time_s: None }
}
