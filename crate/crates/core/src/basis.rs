//! Standard bases of sl(2,C) and the accompanying basis of a configuration.
//!
//! A standard basis `(σ₋, σ₊, σ₃)` has isotropic `σ±` orthogonal to `σ₃`,
//! `<σ₊, σ₋> = 1` and `[σ₊, σ₋] = σ₃`. The accompanying basis takes `σ₋`
//! along the `-2 r₀` eigenline of `ad A⁽⁰⁾`, `σ₊` along the `+2 rᵢ` eigenline
//! of `ad A⁽ⁱ⁾`, and normalizes `<σ₋, A⁽ʲ⁾> = 1`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::OrbitPoint;
use crate::reduction::Configuration;
use crate::sl2::{bracket, conjugate, eig_sigma, killing, GroupElement, Sl2Element};

/// Default relative threshold of the chart condition.
pub const CHART_TOL: f64 = 1e-9;
/// Relative size below which an eigen-direction counts as zero.
pub const DIRECTION_TOL: f64 = 1e-10;
/// Pairs scoring within this fraction of the best are tie-broken by index.
pub const TIE_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardBasis {
    pub sigma_minus: Sl2Element,
    pub sigma_plus: Sl2Element,
    pub sigma_3: Sl2Element,
}

impl StandardBasis {
    /// The matrix-unit basis `(E21, E12, diag(1,-1))`.
    pub fn canonical() -> Self {
        Self { sigma_minus: Sl2Element::e21(), sigma_plus: Sl2Element::e12(), sigma_3: Sl2Element::h() }
    }

    /// Residuals of the six defining relations, each relative to
    /// `max(1, max |σ|^2)`: the four isotropy/orthogonality pairings,
    /// `<σ₊,σ₋> - 1`, and `[σ₊,σ₋] - σ₃`.
    pub fn relation_residuals(&self) -> [f64; 6] {
        let (m, p, h) = (self.sigma_minus, self.sigma_plus, self.sigma_3);
        let scale = 1f64.max(m.norm().max(p.norm()).max(h.norm()).powi(2));
        [
            killing(m, m).norm() / scale,
            killing(p, p).norm() / scale,
            killing(m, h).norm() / scale,
            killing(p, h).norm() / scale,
            (killing(p, m) - 1.0).norm() / scale,
            (bracket(p, m) - h).norm() / scale,
        ]
    }

    /// Coordinates `(β, q, q')` of `a` in this basis, so that
    /// `a = β σ₃ + q σ₊ + q' σ₋`.
    pub fn coords(&self, a: Sl2Element) -> (C64, C64, C64) {
        (
            0.5 * killing(self.sigma_3, a),
            killing(self.sigma_minus, a),
            killing(self.sigma_plus, a),
        )
    }

    /// The element with coordinates `(β, q, q')`.
    pub fn element(&self, beta: C64, q: C64, qp: C64) -> Sl2Element {
        self.sigma_3.scale(beta) + self.sigma_plus.scale(q) + self.sigma_minus.scale(qp)
    }

    pub fn conjugate(&self, g: &GroupElement) -> Self {
        Self {
            sigma_minus: conjugate(g, self.sigma_minus),
            sigma_plus: conjugate(g, self.sigma_plus),
            sigma_3: conjugate(g, self.sigma_3),
        }
    }
}

/// Which indices play the distinguished roles of a chart. Index 0 always
/// supplies `σ₋`; `index_i` supplies `σ₊`; `index_j` fixes the scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    /// The chosen `sqrt(a₀₀/2)`; `σ₋` uses the opposite sign.
    pub root0: C64,
    pub index_i: usize,
    /// The chosen `sqrt(aᵢᵢ/2)`.
    pub root_i: C64,
    pub index_j: usize,
}

impl ChartSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let (i, j) = (self.index_i, self.index_j);
        if i == 0 || j == 0 || i == j || i > n || j > n {
            return Err(Error::InvalidReducedPoint(format!(
                "chart indices ({i}, {j}) must be distinct and in 1..={n}"
            )));
        }
        Ok(())
    }

    /// Indices outside `{0, i, j}` in increasing order.
    pub fn surviving_indices(&self, n: usize) -> Vec<usize> {
        (1..=n).filter(|&k| k != self.index_i && k != self.index_j).collect()
    }
}

/// A nonzero eigenvector of `ad A` with eigenvalue `2 · sign · root`.
///
/// On the blow-up divisor, and for nilpotent points (`root = 0`), the
/// eigenline is the direction of the point itself and `partner` is unused.
pub fn eig_direction(pt: &OrbitPoint, partner: Sl2Element, sign: i8) -> Result<Sl2Element> {
    if pt.is_divisor() {
        return Ok(pt.projective());
    }
    let a = pt.affine();
    if pt.root() == C64::new(0.0, 0.0) {
        return Ok(pt.projective());
    }
    let sigma = eig_sigma(a, partner, pt.root() * f64::from(sign))?;
    if direction_strength(a, partner, sigma) <= DIRECTION_TOL {
        return Err(Error::DegenerateDirection);
    }
    Ok(sigma)
}

// ‖σ‖ / (‖A‖² ‖B‖): σ is cubic in (A, A, B)
fn direction_strength(a: Sl2Element, b: Sl2Element, sigma: Sl2Element) -> f64 {
    let denom = a.norm().powi(2) * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        sigma.norm() / denom
    }
}

/// Eigen-direction for `target` with the partner chosen among the other
/// points to maximize `‖σ‖ / (‖A‖² ‖B‖)`. Returned with max-modulus 1.
pub fn select_direction(config: &Configuration, target: usize, sign: i8) -> Result<Sl2Element> {
    let pt = &config.points()[target];
    if pt.is_divisor() || pt.root() == C64::new(0.0, 0.0) {
        return eig_direction(pt, Sl2Element::ZERO, sign);
    }
    let a = pt.affine();
    let root = pt.root() * f64::from(sign);
    let mut best: Option<(f64, Sl2Element)> = None;
    for partner in config.partners(target) {
        let sigma = eig_sigma(a, partner, root)?;
        let strength = direction_strength(a, partner, sigma);
        if best.is_none_or(|(s, _)| strength > s) {
            best = Some((strength, sigma));
        }
    }
    match best {
        Some((s, sigma)) if s > DIRECTION_TOL => Ok(sigma.normalized().expect("nonzero")),
        _ => Err(Error::DegenerateDirection),
    }
}

/// Non-degeneracy of the accompanying basis:
/// `<σ⁻, σ⁺> != 0` and `<σ⁻, A⁽ʲ⁾> != 0`, both relative to `tol`.
pub fn chart_condition(dir_minus: Sl2Element, dir_plus: Sl2Element, a_n: Sl2Element, tol: f64) -> bool {
    let pa = killing(dir_minus, dir_plus).norm();
    let pb = killing(dir_minus, a_n).norm();
    pa > tol * dir_minus.norm() * dir_plus.norm() && pb > tol * dir_minus.norm() * a_n.norm().max(1.0)
}

/// The unique standard basis with `σ₋ ∥ dir_minus`, `σ₊ ∥ dir_plus`,
/// `<σ₋, a_n> = 1`.
pub fn accompany(dir_minus: Sl2Element, dir_plus: Sl2Element, a_n: Sl2Element) -> Result<StandardBasis> {
    if !chart_condition(dir_minus, dir_plus, a_n, CHART_TOL) {
        return Err(Error::ChartConditionViolated);
    }
    let mn = killing(dir_minus, a_n);
    let mp = killing(dir_minus, dir_plus);
    Ok(StandardBasis {
        sigma_minus: dir_minus.scale(mn.inv()),
        sigma_plus: dir_plus.scale(mn / mp),
        sigma_3: bracket(dir_plus, dir_minus).scale(mp.inv()),
    })
}

/// Robustness of a chart: the smaller of the two chart-condition pairings
/// with unit-normalized directions and `A⁽ʲ⁾` measured against the largest
/// point of the configuration.
pub fn chart_score(dir_minus: Sl2Element, dir_plus: Sl2Element, a_n: Sl2Element, config_scale: f64) -> f64 {
    let pa = killing(dir_minus, dir_plus).norm() / (dir_minus.norm() * dir_plus.norm());
    let pb = killing(dir_minus, a_n).norm() / (dir_minus.norm() * config_scale.max(f64::MIN_POSITIVE));
    pa.min(pb)
}

/// Robustness score of a given chart for a configuration.
pub fn score_chart(config: &Configuration, chart: &ChartSpec) -> Result<f64> {
    let dm = select_direction(config, 0, -1)?;
    let dp = select_direction(config, chart.index_i, 1)?;
    let a_n = config.points()[chart.index_j].affine();
    if !chart_condition(dm, dp, a_n, CHART_TOL) {
        return Err(Error::ChartConditionViolated);
    }
    Ok(chart_score(dm, dp, a_n, config.scale()))
}

/// Every admissible chart `(i, j)` with its robustness score.
pub fn admissible_charts(config: &Configuration) -> Vec<(ChartSpec, f64)> {
    let n = config.n();
    let Ok(dm) = select_direction(config, 0, -1) else {
        return Vec::new();
    };
    let scale = config.scale();
    let mut out = Vec::new();
    for i in 1..=n {
        let Ok(dp) = select_direction(config, i, 1) else {
            continue;
        };
        for j in (1..=n).filter(|&j| j != i) {
            let a_n = config.points()[j].affine();
            if chart_condition(dm, dp, a_n, CHART_TOL) {
                let spec = ChartSpec {
                    root0: config.points()[0].root(),
                    index_i: i,
                    root_i: config.points()[i].root(),
                    index_j: j,
                };
                out.push((spec, chart_score(dm, dp, a_n, scale)));
            }
        }
    }
    out
}

/// The most robust admissible chart; among pairs within 1% of the best
/// score the lexicographically smallest `(i, j)` wins.
pub fn chart_select(config: &Configuration) -> Result<(ChartSpec, f64)> {
    let all = admissible_charts(config);
    let best = all.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    all.into_iter()
        .filter(|(_, s)| *s >= best * (1.0 - TIE_FRACTION))
        .min_by_key(|(c, _)| (c.index_i, c.index_j))
        .ok_or(Error::NoChartFound)
}
