//! The primed coadjoint orbit: the quadric `X1 X2 + X3^2 = R^2/2`, or for
//! `R^2 = 0` the nilpotent cone with its vertex blown up.
//!
//! A point carries an affine part `A` and a projective direction `Ã` with
//! `A = x0 Ã`. Divisor points have `A = 0` and keep only the direction.
//!
//! Two charts cover each orbit:
//!
//! * primary:   `(p, q) = ((X3 - r) / X1, X1)`,
//! * secondary: `(p, q) = (X1 / (X3 - r), X2)`,
//!
//! where `r` is the chosen value of `sqrt(R^2/2)`. Both are inverted by
//! polynomials and both are oriented so that `dp ∧ dq` equals the orbit form
//! `dX3 ∧ d log X1`. The transition between them is
//! `(p, q) -> (1/p, -p (p q + 2 r))`, an involution.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::sl2::{check_root, conjugate, GroupElement, Sl2Element};

/// Relative tolerance of the quadric and cone constraints.
pub const QUADRIC_TOL: f64 = 1e-10;
/// Relative threshold below which a chart or form denominator is singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Relative tolerance of the tangency check.
pub const TANGENT_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    affine: Sl2Element,
    projective: Sl2Element,
    casimir: C64,
    root: C64,
}

fn cross_norm(a: Sl2Element, b: Sl2Element) -> f64 {
    [a.x1 * b.x2 - a.x2 * b.x1, a.x1 * b.x3 - a.x3 * b.x1, a.x2 * b.x3 - a.x3 * b.x2]
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

impl OrbitPoint {
    /// Validates and builds a point. A nonzero affine part fixes the
    /// direction; a zero affine part needs a direction on the cone.
    pub fn new(affine: Sl2Element, projective: Option<Sl2Element>, root: C64) -> Result<Self> {
        if affine.is_zero() {
            let dir = projective.ok_or(Error::MissingDirection)?;
            let dir = dir.normalized().ok_or(Error::MissingDirection)?;
            let residual = (dir.x1 * dir.x2 + dir.x3 * dir.x3).norm();
            if residual > QUADRIC_TOL {
                return Err(Error::ConeViolation { residual });
            }
            if root.norm() > QUADRIC_TOL {
                return Err(Error::RootMismatch { residual: root.norm_sqr() });
            }
            return Ok(Self { affine, projective: dir, casimir: ZERO, root });
        }
        check_root(affine, root)?;
        if let Some(dir) = projective {
            let residual = cross_norm(affine, dir) / (affine.norm() * dir.norm()).max(f64::MIN_POSITIVE);
            if residual > QUADRIC_TOL {
                return Err(Error::OffQuadric { residual });
            }
        }
        Ok(Self::from_affine_unchecked(affine, root))
    }

    pub(crate) fn from_affine_unchecked(affine: Sl2Element, root: C64) -> Self {
        Self {
            affine,
            projective: affine.normalized().unwrap_or(Sl2Element::ZERO),
            casimir: affine.casimir(),
            root,
        }
    }

    pub(crate) fn divisor_unchecked(direction: Sl2Element) -> Self {
        Self {
            affine: Sl2Element::ZERO,
            projective: direction.normalized().expect("nonzero direction"),
            casimir: ZERO,
            root: ZERO,
        }
    }

    pub fn affine(&self) -> Sl2Element {
        self.affine
    }

    /// The direction, normalized so its max-modulus component is 1.
    pub fn projective(&self) -> Sl2Element {
        self.projective
    }

    pub fn casimir(&self) -> C64 {
        self.casimir
    }

    pub fn root(&self) -> C64 {
        self.root
    }

    pub fn is_divisor(&self) -> bool {
        self.affine.is_zero()
    }

    /// `|X1 X2 + X3^2 - root^2|` relative to `max(1, |A|^2, |root|^2)`.
    pub fn quadric_residual(&self) -> f64 {
        let a = self.affine;
        let scale = 1f64.max(a.norm().powi(2)).max(self.root.norm_sqr());
        (a.x1 * a.x2 + a.x3 * a.x3 - self.root * self.root).norm() / scale
    }

    pub fn conjugate(&self, g: &GroupElement) -> Self {
        if self.is_divisor() {
            Self::divisor_unchecked(conjugate(g, self.projective))
        } else {
            Self::from_affine_unchecked(conjugate(g, self.affine), self.root)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartId {
    Primary,
    Secondary,
}

impl ChartId {
    pub fn other(self) -> Self {
        match self {
            ChartId::Primary => ChartId::Secondary,
            ChartId::Secondary => ChartId::Primary,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartCoords {
    pub chart: ChartId,
    pub p: C64,
    pub q: C64,
}

/// Affine entries `(X1, X2, X3)` of the chart parametrization.
pub fn chart_to_affine<T: Scalar>(chart: ChartId, p: T, q: T, root: T) -> [T; 3] {
    let two = T::real(2.0);
    match chart {
        ChartId::Primary => [q, -p * (p * q + two * root), p * q + root],
        ChartId::Secondary => [-p * (p * q + two * root), q, -(p * q) - root],
    }
}

fn ratio(num_a: C64, den_a: C64, num_b: C64, den_b: C64, scale: f64) -> Result<C64> {
    if den_a.norm().max(den_b.norm()) <= SINGULAR_TOL * scale {
        return Err(Error::ChartSingular);
    }
    Ok(if den_a.norm() >= den_b.norm() { num_a / den_a } else { num_b / den_b })
}

/// Chart coordinates of a point. Each chart coordinate `p` has two
/// algebraically equal expressions on the orbit; the better-conditioned one
/// is used.
pub fn to_chart(pt: &OrbitPoint, chart: ChartId) -> Result<ChartCoords> {
    if pt.is_divisor() {
        let x = pt.projective;
        let p = match chart {
            ChartId::Primary => ratio(x.x3, x.x1, -x.x2, x.x3, 1.0)?,
            ChartId::Secondary => ratio(x.x1, x.x3, -x.x3, x.x2, 1.0)?,
        };
        return Ok(ChartCoords { chart, p, q: ZERO });
    }
    let a = pt.affine;
    let r = pt.root;
    let scale = 1f64.max(a.norm()).max(r.norm());
    let (p, q) = match chart {
        ChartId::Primary => (ratio(a.x3 - r, a.x1, -a.x2, a.x3 + r, scale)?, a.x1),
        ChartId::Secondary => (ratio(a.x1, a.x3 - r, -(a.x3 + r), a.x2, scale)?, a.x2),
    };
    Ok(ChartCoords { chart, p, q })
}

/// The point with the given chart coordinates. At `root = 0, q = 0` the
/// point lies on the blow-up divisor with the limiting direction.
pub fn from_chart(c: ChartCoords, root: C64) -> OrbitPoint {
    if root == ZERO && c.q == ZERO {
        let one = C64::new(1.0, 0.0);
        let p = c.p;
        let dir = match c.chart {
            ChartId::Primary => Sl2Element::new(one, -p * p, p),
            ChartId::Secondary => Sl2Element::new(-p * p, one, -p),
        };
        return OrbitPoint::divisor_unchecked(dir);
    }
    let x = chart_to_affine(c.chart, c.p, c.q, root);
    OrbitPoint::from_affine_unchecked(Sl2Element::from_array(x), root)
}

/// Coordinates of the same point in the other chart; requires `p != 0`.
pub fn transition(c: ChartCoords, root: C64) -> Result<ChartCoords> {
    if c.p.norm() <= SINGULAR_TOL {
        return Err(Error::ChartSingular);
    }
    Ok(ChartCoords {
        chart: c.chart.other(),
        p: c.p.inv(),
        q: -c.p * (c.p * c.q + 2.0 * root),
    })
}

/// Jacobian of the transition, rows `(dp', dq')`, columns `(dp, dq)`.
pub fn transition_jacobian(c: ChartCoords, root: C64) -> [[C64; 2]; 2] {
    let p = c.p;
    [[-(p * p).inv(), ZERO], [-(2.0 * p * c.q + 2.0 * root), -p * p]]
}

/// Columns `∂/∂p`, `∂/∂q` of the chart parametrization as `(dX1, dX2, dX3)`.
pub fn chart_jacobian(c: ChartCoords, root: C64) -> ([C64; 3], [C64; 3]) {
    let (p, q, r) = (c.p, c.q, root);
    match c.chart {
        ChartId::Primary => ([ZERO, -2.0 * p * q - 2.0 * r, q], [C64::new(1.0, 0.0), -p * p, p]),
        ChartId::Secondary => ([-2.0 * p * q - 2.0 * r, ZERO, -q], [-p * p, C64::new(1.0, 0.0), -p]),
    }
}

/// A tangent vector: either a variation of the affine entries, or a
/// variation of chart coordinates (required on the blow-up divisor).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitTangent {
    Affine { d1: C64, d2: C64, d3: C64 },
    Chart { chart: ChartId, dp: C64, dq: C64 },
}

impl OrbitTangent {
    pub fn affine(d: [C64; 3]) -> Self {
        OrbitTangent::Affine { d1: d[0], d2: d[1], d3: d[2] }
    }

    pub fn conjugate(&self, g: &GroupElement) -> Self {
        match *self {
            OrbitTangent::Affine { d1, d2, d3 } => {
                Self::affine(conjugate(g, Sl2Element::new(d1, d2, d3)).to_array())
            }
            chart => chart,
        }
    }
}

/// The four displayed expressions of the orbit form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormRep {
    /// `dX3 ∧ d log X1`
    LogX1,
    /// `-dX3 ∧ d log X2`
    LogX2,
    /// `d(X2 / (r - X3)) ∧ dX1`
    RatioX1,
    /// `d(X1 / (r + X3)) ∧ dX2`
    RatioX2,
}

fn affine_tangent(pt: &OrbitPoint, t: OrbitTangent) -> Result<[C64; 3]> {
    match t {
        OrbitTangent::Affine { d1, d2, d3 } => {
            let a = pt.affine;
            let scale = 1f64.max(a.norm());
            let dn = d1.norm().max(d2.norm()).max(d3.norm());
            let residual = (a.x1 * d2 + a.x2 * d1 + 2.0 * a.x3 * d3).norm();
            if residual > TANGENT_TOL * scale * dn {
                return Err(Error::NotTangent { residual });
            }
            Ok([d1, d2, d3])
        }
        OrbitTangent::Chart { chart, dp, dq } => {
            let c = to_chart(pt, chart)?;
            let (jp, jq) = chart_jacobian(c, pt.root);
            Ok([0, 1, 2].map(|k| jp[k] * dp + jq[k] * dq))
        }
    }
}

fn wedge(a: (C64, C64), b: (C64, C64)) -> C64 {
    a.0 * b.1 - a.1 * b.0
}

/// Every representation of the form at `pt` whose denominator is
/// nonsingular, with its value on `(u, v)` and its denominator modulus.
pub fn omega_representations(
    pt: &OrbitPoint,
    u: OrbitTangent,
    v: OrbitTangent,
) -> Result<Vec<(FormRep, C64, f64)>> {
    let a = pt.affine;
    let r = pt.root;
    let u = affine_tangent(pt, u)?;
    let v = affine_tangent(pt, v)?;
    let scale = 1f64.max(a.norm()).max(r.norm());
    let mut out = Vec::with_capacity(4);
    let dens = [a.x1, a.x2, r - a.x3, r + a.x3];
    for (rep, den) in [FormRep::LogX1, FormRep::LogX2, FormRep::RatioX1, FormRep::RatioX2]
        .into_iter()
        .zip(dens)
    {
        if den.norm() <= SINGULAR_TOL * scale {
            continue;
        }
        let value = match rep {
            FormRep::LogX1 => wedge((u[2], u[0]), (v[2], v[0])) / den,
            FormRep::LogX2 => -wedge((u[2], u[1]), (v[2], v[1])) / den,
            FormRep::RatioX1 => {
                let df = |t: [C64; 3]| t[1] / den + a.x2 * t[2] / (den * den);
                wedge((df(u), u[0]), (df(v), v[0]))
            }
            FormRep::RatioX2 => {
                let df = |t: [C64; 3]| t[0] / den - a.x1 * t[2] / (den * den);
                wedge((df(u), u[1]), (df(v), v[1]))
            }
        };
        out.push((rep, value, den.norm() / scale));
    }
    Ok(out)
}

/// The orbit form `ω(u, v)`.
///
/// Off the divisor the best-conditioned affine representation is used.
/// On the divisor both tangents must be chart tangents and the form is
/// `dp ∧ dq`.
pub fn omega(pt: &OrbitPoint, u: OrbitTangent, v: OrbitTangent) -> Result<C64> {
    if let (
        OrbitTangent::Chart { chart: cu, dp: pu, dq: qu },
        OrbitTangent::Chart { chart: cv, dp: pv, dq: qv },
    ) = (u, v)
    {
        if pt.is_divisor() || cu == cv {
            let (pv, qv) = if cu == cv {
                (pv, qv)
            } else {
                let c = to_chart(pt, cv)?;
                if c.p.norm() <= SINGULAR_TOL {
                    return Err(Error::FormSingular);
                }
                let j = transition_jacobian(c, pt.root);
                (j[0][0] * pv + j[0][1] * qv, j[1][0] * pv + j[1][1] * qv)
            };
            return Ok(pu * qv - qu * pv);
        }
    }
    if pt.is_divisor() {
        return Err(Error::FormSingular);
    }
    omega_representations(pt, u, v)?
        .into_iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .map(|(_, value, _)| value)
        .ok_or(Error::FormSingular)
}

/// `|ω(∂/∂p, ∂/∂q) - 1|` with the chart tangents pushed forward through the
/// chart parametrization.
pub fn chart_omega_check(c: ChartCoords, root: C64) -> Result<f64> {
    let pt = from_chart(c, root);
    if pt.is_divisor() {
        let u = OrbitTangent::Chart { chart: c.chart, dp: C64::new(1.0, 0.0), dq: ZERO };
        let v = OrbitTangent::Chart { chart: c.chart, dp: ZERO, dq: C64::new(1.0, 0.0) };
        return Ok((omega(&pt, u, v)? - 1.0).norm());
    }
    let (jp, jq) = chart_jacobian(c, root);
    Ok((omega(&pt, OrbitTangent::affine(jp), OrbitTangent::affine(jq))? - 1.0).norm())
}

/// The chart in which `|p| <= 1`, i.e. the better-conditioned of the two.
pub fn preferred_chart(pt: &OrbitPoint) -> Result<ChartCoords> {
    match to_chart(pt, ChartId::Primary) {
        Ok(c) if c.p.norm() <= 1.0 => Ok(c),
        Ok(_) | Err(Error::ChartSingular) => to_chart(pt, ChartId::Secondary).or_else(|_| to_chart(pt, ChartId::Primary)),
        Err(e) => Err(e),
    }
}
