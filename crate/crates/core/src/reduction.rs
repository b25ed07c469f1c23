//! Configurations of `n + 1` orbit points with zero sum, the reduction to
//! coordinates `(βᵢ, qᵢ, q'ᵢ)` in the accompanying basis, and the polynomial
//! section that restores a full configuration in normal form.
//!
//! In the accompanying basis of a chart `(i, j)` the special matrices take
//! the normal form
//!
//! ```text
//! A(0) = [[r0, 0], [q'0, -r0]]    A(i) = [[ri, qi], [0, -ri]]
//! A(j) = [[βj, 1], [q'j, -βj]]
//! ```
//!
//! and are recovered from the remaining `n - 2` factors through
//!
//! ```text
//! qi  = -(qΣ + 1)
//! βj  = -(r0 + ri + βΣ)
//! q'j = -(βΣ + r0 + ri)^2 + ajj/2
//! q'0 = -(q'Σ - (βΣ + r0 + ri)^2 + ajj/2)
//! ```

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{accompany, select_direction, ChartSpec, StandardBasis};
use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::orbit::OrbitPoint;
use crate::sl2::{
    bracket, is_simultaneously_triangularizable, killing, GroupElement, Sl2Element, TRIANGULAR_TOL,
};

/// Relative tolerance of the zero-sum constraint.
pub const SUM_TOL: f64 = 1e-9;
/// Minimum relative separation of pole positions.
pub const LAMBDA_GAP_TOL: f64 = 1e-9;
/// Relative tolerance when validating reduced points produced numerically.
pub const REDUCED_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A point of the Schlesinger phase space: `n + 1` orbit points with
/// vanishing affine sum, optionally with pole positions attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    points: Vec<OrbitPoint>,
    lambdas: Option<Vec<C64>>,
}

impl Configuration {
    pub fn new(points: Vec<OrbitPoint>, lambdas: Option<Vec<C64>>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidConfiguration(format!(
                "need at least 4 points (n >= 3), got {}",
                points.len()
            )));
        }
        let cfg = Self { points, lambdas: None };
        let residual = cfg.sum_residual();
        if residual > SUM_TOL {
            return Err(Error::InvalidConfiguration(format!("affine sum is {residual:e}, not zero")));
        }
        match lambdas {
            Some(l) => cfg.with_lambdas(l),
            None => Ok(cfg),
        }
    }

    pub(crate) fn new_unchecked(points: Vec<OrbitPoint>, lambdas: Option<Vec<C64>>) -> Self {
        Self { points, lambdas }
    }

    pub fn with_lambdas(mut self, lambdas: Vec<C64>) -> Result<Self> {
        check_lambdas(&lambdas, self.points.len())?;
        self.lambdas = Some(lambdas);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.points.len() - 1
    }

    pub fn points(&self) -> &[OrbitPoint] {
        &self.points
    }

    pub fn lambdas(&self) -> Result<&[C64]> {
        self.lambdas.as_deref().ok_or(Error::MissingLambdas)
    }

    pub fn has_lambdas(&self) -> bool {
        self.lambdas.is_some()
    }

    pub fn affine_parts(&self) -> Vec<Sl2Element> {
        self.points.iter().map(|p| p.affine()).collect()
    }

    pub fn casimirs(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.casimir()).collect()
    }

    pub fn roots(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.root()).collect()
    }

    /// `max(1, max ‖A⁽ᵏ⁾‖)`.
    pub fn scale(&self) -> f64 {
        self.points.iter().map(|p| p.affine().norm()).fold(1.0, f64::max)
    }

    /// `‖Σ A⁽ᵏ⁾‖ / scale`.
    pub fn sum_residual(&self) -> f64 {
        self.points.iter().map(|p| p.affine()).sum::<Sl2Element>().norm() / self.scale()
    }

    /// Elements tested by the Restriction: affine parts, and the direction
    /// for points on the blow-up divisor.
    pub fn restriction_set(&self) -> Vec<Sl2Element> {
        self.points
            .iter()
            .map(|p| if p.is_divisor() { p.projective() } else { p.affine() })
            .collect()
    }

    /// Candidate partners for the eigen-direction of `target`.
    pub fn partners(&self, target: usize) -> Vec<Sl2Element> {
        self.restriction_set()
            .into_iter()
            .enumerate()
            .filter(|&(k, _)| k != target)
            .map(|(_, a)| a)
            .collect()
    }

    pub fn is_triangularizable(&self) -> bool {
        is_simultaneously_triangularizable(&self.restriction_set(), TRIANGULAR_TOL)
    }

    /// Simultaneous conjugation of every point.
    pub fn conjugate(&self, g: &GroupElement) -> Self {
        Self {
            points: self.points.iter().map(|p| p.conjugate(g)).collect(),
            lambdas: self.lambdas.clone(),
        }
    }
}

pub(crate) fn check_lambdas(lambdas: &[C64], len: usize) -> Result<()> {
    if lambdas.len() != len {
        return Err(Error::InvalidConfiguration(format!(
            "expected {len} pole positions, got {}",
            lambdas.len()
        )));
    }
    let scale = lambdas.iter().map(|l| l.norm()).fold(1.0, f64::max);
    for i in 0..len {
        for j in i + 1..len {
            let gap = (lambdas[i] - lambdas[j]).norm();
            if gap <= LAMBDA_GAP_TOL * scale {
                return Err(Error::PoleCollision { i, j, gap });
            }
        }
    }
    Ok(())
}

/// `a[i][j] = <A⁽ⁱ⁾, A⁽ʲ⁾>` and `f[i][j][k] = <[A⁽ⁱ⁾, A⁽ʲ⁾], A⁽ᵏ⁾>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantTable {
    pub a: Vec<Vec<C64>>,
    pub f: Vec<Vec<Vec<C64>>>,
}

impl InvariantTable {
    pub fn of(mats: &[Sl2Element]) -> Self {
        let m = mats.len();
        let a = (0..m).map(|i| (0..m).map(|j| killing(mats[i], mats[j])).collect()).collect();
        let f = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let b = bracket(mats[i], mats[j]);
                        (0..m).map(|k| killing(b, mats[k])).collect()
                    })
                    .collect()
            })
            .collect();
        Self { a, f }
    }

    pub fn max_modulus(&self) -> f64 {
        let am = self.a.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
        let fm = self.f.iter().flatten().flatten().map(|x| x.norm()).fold(0.0, f64::max);
        am.max(fm)
    }

    /// Largest entry-wise difference relative to `1 + max modulus`.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let scale = 1.0 + self.max_modulus().max(other.max_modulus());
        let da = self
            .a
            .iter()
            .flatten()
            .zip(other.a.iter().flatten())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let df = self
            .f
            .iter()
            .flatten()
            .flatten()
            .zip(other.f.iter().flatten().flatten())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        da.max(df) / scale
    }
}

pub fn invariants(config: &Configuration) -> InvariantTable {
    InvariantTable::of(&config.affine_parts())
}

/// Coordinates on the product of the `n - 2` non-special quadrics.
///
/// Slot `s` holds the point with original index `chart.surviving_indices(n)[s]`
/// as `(βₛ, qₛ, q'ₛ)`; for slots on the blow-up divisor the coordinates are
/// zero and `directions[s]` holds the direction as `(q, q', β)` components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub n: usize,
    pub beta: Vec<C64>,
    pub q: Vec<C64>,
    pub qp: Vec<C64>,
    pub directions: Vec<Option<Sl2Element>>,
    /// Casimirs `aₖₖ` for all `n + 1` indices.
    pub a: Vec<C64>,
    /// Chosen `sqrt(aₖₖ/2)` for all `n + 1` indices.
    pub roots: Vec<C64>,
    pub chart: ChartSpec,
}

impl ReducedPoint {
    /// Builds a reduced point from factor orbit points (expressed in the
    /// accompanying basis). Casimirs of the special indices follow from the
    /// chart roots and from `root_j`.
    pub fn from_factors(n: usize, factors: &[OrbitPoint], chart: ChartSpec, root_j: C64) -> Result<Self> {
        chart.validate(n)?;
        if factors.len() != n - 2 {
            return Err(Error::InvalidReducedPoint(format!("expected {} factors, got {}", n - 2, factors.len())));
        }
        let mut roots = vec![ZERO; n + 1];
        roots[0] = chart.root0;
        roots[chart.index_i] = chart.root_i;
        roots[chart.index_j] = root_j;
        for (&k, f) in chart.surviving_indices(n).iter().zip(factors) {
            roots[k] = f.root();
        }
        let a = roots.iter().map(|r| 2.0 * r * r).collect();
        let out = Self {
            n,
            beta: factors.iter().map(|f| f.affine().x3).collect(),
            q: factors.iter().map(|f| f.affine().x1).collect(),
            qp: factors.iter().map(|f| f.affine().x2).collect(),
            directions: factors.iter().map(|f| f.is_divisor().then(|| f.projective())).collect(),
            a,
            roots,
            chart,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 3 {
            return Err(Error::InvalidReducedPoint("n must be at least 3".into()));
        }
        self.chart.validate(n)?;
        let m = n - 2;
        if self.beta.len() != m || self.q.len() != m || self.qp.len() != m || self.directions.len() != m {
            return Err(Error::InvalidReducedPoint(format!("expected {m} factor coordinates")));
        }
        if self.a.len() != n + 1 || self.roots.len() != n + 1 {
            return Err(Error::InvalidReducedPoint(format!("expected {} casimirs and roots", n + 1)));
        }
        for (k, (a, r)) in self.a.iter().zip(&self.roots).enumerate() {
            let residual = (r * r - 0.5 * a).norm() / (1.0 + a.norm());
            if residual > REDUCED_TOL {
                return Err(Error::InvalidReducedPoint(format!("root {k} does not square to a/2")));
            }
        }
        if self.roots[0] != self.chart.root0 || self.roots[self.chart.index_i] != self.chart.root_i {
            return Err(Error::InvalidReducedPoint("chart roots disagree with the root list".into()));
        }
        for (s, f) in self.factors()?.iter().enumerate() {
            if f.quadric_residual() > REDUCED_TOL {
                return Err(Error::InvalidReducedPoint(format!("factor {s} is off its quadric")));
            }
        }
        Ok(())
    }

    /// Factor `s` as an orbit point in accompanying-basis coordinates.
    pub fn factor(&self, s: usize) -> Result<OrbitPoint> {
        let k = self.chart.surviving_indices(self.n)[s];
        let affine = Sl2Element::new(self.q[s], self.qp[s], self.beta[s]);
        if affine.is_zero() {
            let dir = self.directions[s].ok_or(Error::MissingDirection)?;
            OrbitPoint::new(affine, Some(dir), self.roots[k])
        } else {
            let scale = 1f64.max(affine.norm().powi(2)).max(self.roots[k].norm_sqr());
            let residual = (affine.x1 * affine.x2 + affine.x3 * affine.x3 - self.roots[k] * self.roots[k]).norm() / scale;
            if residual > REDUCED_TOL {
                return Err(Error::InvalidReducedPoint(format!("factor {s} is off its quadric ({residual:e})")));
            }
            Ok(OrbitPoint::from_affine_unchecked(affine, self.roots[k]))
        }
    }

    pub fn factors(&self) -> Result<Vec<OrbitPoint>> {
        (0..self.n - 2).map(|s| self.factor(s)).collect()
    }

    pub fn factor_entries(&self) -> Vec<[C64; 3]> {
        (0..self.n - 2).map(|s| [self.q[s], self.qp[s], self.beta[s]]).collect()
    }

    /// Component-wise distance relative to `1 + max modulus`.
    pub fn distance(&self, other: &Self) -> f64 {
        let all = |r: &Self| -> Vec<C64> { r.beta.iter().chain(&r.q).chain(&r.qp).copied().collect() };
        let (x, y) = (all(self), all(other));
        let scale = 1.0 + x.iter().chain(&y).map(|c| c.norm()).fold(0.0, f64::max);
        let coords = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let dirs = self
            .directions
            .iter()
            .zip(&other.directions)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => (*a - *b).norm(),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max);
        (coords / scale).max(dirs)
    }
}

/// Affine entries `(x1, x2, x3)` of all `n + 1` matrices of the section,
/// given the factor entries `(q, q', β)` of the surviving slots. Generic so
/// that it can be differentiated.
pub fn lift_entries<T: Scalar>(n: usize, chart: &ChartSpec, a_j: C64, factors: &[[T; 3]]) -> Vec<[T; 3]> {
    let zero = T::zero();
    let one = T::real(1.0);
    let r0 = T::cst(chart.root0);
    let ri = T::cst(chart.root_i);
    let half_aj = T::cst(a_j * 0.5);
    let mut beta_s = zero;
    let mut q_s = zero;
    let mut qp_s = zero;
    for f in factors {
        q_s = q_s + f[0];
        qp_s = qp_s + f[1];
        beta_s = beta_s + f[2];
    }
    let shift = beta_s + r0 + ri;
    let qp_j = half_aj - shift * shift;

    let mut out = vec![[zero; 3]; n + 1];
    out[0] = [zero, -(qp_s - shift * shift + half_aj), r0];
    out[chart.index_i] = [-(q_s + one), zero, ri];
    out[chart.index_j] = [one, qp_j, -shift];
    for (&k, f) in chart.surviving_indices(n).iter().zip(factors) {
        out[k] = *f;
    }
    out
}

/// `tr(AB)` on entry triples.
pub fn trace_pair<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    T::real(2.0) * a[2] * b[2] + a[0] * b[1] + a[1] * b[0]
}

/// The configuration (without pole positions) in normal form whose
/// reduction is `r`.
pub fn lift(r: &ReducedPoint) -> Result<Configuration> {
    r.validate()?;
    let n = r.n;
    let entries = lift_entries(n, &r.chart, r.a[r.chart.index_j], &r.factor_entries());
    let surviving = r.chart.surviving_indices(n);
    let mut points = Vec::with_capacity(n + 1);
    for (k, e) in entries.iter().enumerate() {
        let affine = Sl2Element::from_array(*e);
        let pt = if let Some(s) = surviving.iter().position(|&m| m == k) {
            r.factor(s)?
        } else if affine.is_zero() {
            // only A(0) and A(i) can vanish; their eigenlines are E21 and E12
            let dir = if k == 0 { Sl2Element::e21() } else { Sl2Element::e12() };
            OrbitPoint::new(affine, Some(dir), r.roots[k])?
        } else {
            OrbitPoint::new(affine, None, r.roots[k])?
        };
        points.push(pt);
    }
    Ok(Configuration::new_unchecked(points, None))
}

/// Reduces a configuration in the given chart, also returning the
/// accompanying basis.
pub fn reduce_with_basis(config: &Configuration, chart: &ChartSpec) -> Result<(ReducedPoint, StandardBasis)> {
    let n = config.n();
    chart.validate(n)?;
    if config.is_triangularizable() {
        return Err(Error::RestrictionViolated);
    }
    let pts = config.points();
    for (k, r) in [(0, chart.root0), (chart.index_i, chart.root_i)] {
        if pts[k].root() != r {
            return Err(Error::RootMismatch { residual: (pts[k].root() - r).norm() });
        }
    }
    let dm = select_direction(config, 0, -1)?;
    let dp = select_direction(config, chart.index_i, 1)?;
    let basis = accompany(dm, dp, pts[chart.index_j].affine())?;

    let surviving = chart.surviving_indices(n);
    let mut beta = Vec::with_capacity(n - 2);
    let mut q = Vec::with_capacity(n - 2);
    let mut qp = Vec::with_capacity(n - 2);
    let mut directions = Vec::with_capacity(n - 2);
    for &k in &surviving {
        let pt = &pts[k];
        if pt.is_divisor() {
            let (b, x1, x2) = basis.coords(pt.projective());
            beta.push(ZERO);
            q.push(ZERO);
            qp.push(ZERO);
            directions.push(Sl2Element::new(x1, x2, b).normalized());
        } else {
            let (b, x1, x2) = basis.coords(pt.affine());
            beta.push(b);
            q.push(x1);
            qp.push(x2);
            directions.push(None);
        }
    }
    let reduced = ReducedPoint {
        n,
        beta,
        q,
        qp,
        directions,
        a: config.casimirs(),
        roots: config.roots(),
        chart: *chart,
    };
    Ok((reduced, basis))
}

/// Coordinates `(βₛ, qₛ, q'ₛ)` of the non-special points in the
/// accompanying basis of `chart`.
pub fn reduce(config: &Configuration, chart: &ChartSpec) -> Result<ReducedPoint> {
    reduce_with_basis(config, chart).map(|(r, _)| r)
}

/// Largest deviation of the special matrices from their normal form,
/// relative to `max(1, scale)`: `A(0)` lower-triangular with diagonal `r0`,
/// `A(i)` upper-triangular with diagonal `ri`, `A(j)` with upper-right 1.
pub fn normal_form_residual(config: &Configuration, chart: &ChartSpec, basis: &StandardBasis) -> f64 {
    let pts = config.points();
    let (b0, q0, _) = basis.coords(pts[0].affine());
    let (bi, _, qpi) = basis.coords(pts[chart.index_i].affine());
    let (_, qj, _) = basis.coords(pts[chart.index_j].affine());
    let scale = config.scale();
    [q0, b0 - chart.root0, qpi, bi - chart.root_i, qj - 1.0]
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        / scale
}

/// `a_ij` as a polynomial in the raw factor entries `(q, q', β)`, with the
/// quadric constraints not imposed.
pub fn invariant_polynomial(n: usize, chart: &ChartSpec, a_j: C64, factors: &[[C64; 3]], i: usize, j: usize) -> C64 {
    let e = lift_entries(n, chart, a_j, factors);
    trace_pair(&e[i], &e[j])
}

/// The Hamiltonian building block `a_ij = tr A⁽ⁱ⁾A⁽ʲ⁾` at a reduced point.
pub fn hamiltonian_value(r: &ReducedPoint, i: usize, j: usize) -> C64 {
    invariant_polynomial(r.n, &r.chart, r.a[r.chart.index_j], &r.factor_entries(), i, j)
}

/// Coordinates on the conic of directions of a divisor point:
/// `<Ã, R1> : <Ã, R2> : <Ã, [R1, R2]>`, scaled so the max-modulus entry is 1.
pub fn nilpotent_divisor_coords(pt: &OrbitPoint, ref1: Sl2Element, ref2: Sl2Element) -> Result<[C64; 3]> {
    if pt.casimir() != ZERO {
        return Err(Error::NotOnDivisor);
    }
    let b = bracket(ref1, ref2);
    if b.norm() <= 1e-12 * ref1.norm() * ref2.norm() || b.is_zero() {
        return Err(Error::DegenerateReference);
    }
    let d = pt.projective();
    let v = Sl2Element::new(killing(d, ref1), killing(d, ref2), killing(d, b));
    Ok(v.normalized().ok_or(Error::DegenerateReference)?.to_array())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::chart_select;
    use crate::sampling;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The n = 3 normal-form fixture: zero factor on the divisor along E21,
    /// r0 = 1, r2 = 1, a33/2 = 4.
    fn fixture() -> ReducedPoint {
        let factor = OrbitPoint::new(Sl2Element::ZERO, Some(Sl2Element::e21()), ZERO).unwrap();
        let chart = ChartSpec { root0: c(1.0, 0.0), index_i: 2, root_i: c(1.0, 0.0), index_j: 3 };
        ReducedPoint::from_factors(3, &[factor], chart, c(2.0, 0.0)).unwrap()
    }

    // brute-force trace of explicit 2x2 products
    fn tr_mm(a: Sl2Element, b: Sl2Element) -> C64 {
        let (x, y) = (a.matrix(), b.matrix());
        (0..2).map(|i| (0..2).map(|k| x[i][k] * y[k][i]).sum::<C64>()).sum()
    }
    fn commutator(a: Sl2Element, b: Sl2Element) -> Sl2Element {
        let (x, y) = (a.matrix(), b.matrix());
        let m = |i: usize, j: usize| (0..2).map(|k| x[i][k] * y[k][j] - y[i][k] * x[k][j]).sum::<C64>();
        Sl2Element::new(m(0, 1), m(1, 0), m(0, 0))
    }

    #[test]
    fn lift_fixture() {
        let cfg = lift(&fixture()).unwrap();
        let m: Vec<_> = cfg.affine_parts();
        let s = |x1: f64, x2: f64, x3: f64| Sl2Element::new(c(x1, 0.0), c(x2, 0.0), c(x3, 0.0));
        assert_eq!(m[0], s(0.0, 0.0, 1.0));
        assert!(cfg.points()[1].is_divisor());
        assert_eq!(m[2], s(-1.0, 0.0, 1.0));
        assert_eq!(m[3], s(1.0, 0.0, -2.0));
        assert!(cfg.sum_residual() == 0.0);
        assert_eq!(m[3].det(), c(-4.0, 0.0));
        assert_eq!(hamiltonian_value(&fixture(), 0, 2), c(2.0, 0.0));
        assert_eq!(hamiltonian_value(&fixture(), 3, 3), fixture().a[3]);
    }

    #[test]
    fn reduce_fixture_reads_off_coordinates() {
        let r = fixture();
        let cfg = lift(&r).unwrap();
        assert!(!cfg.is_triangularizable());
        let back = reduce(&cfg, &r.chart).unwrap();
        assert_eq!(back.beta, vec![ZERO]);
        assert_eq!(back.q, vec![ZERO]);
        assert_eq!(back.qp, vec![ZERO]);
        assert_eq!(back.directions, vec![Some(Sl2Element::e21())]);
        assert!(back.distance(&r) == 0.0);
    }

    #[test]
    fn upper_triangular_fixture_violates_restriction() {
        let factor = OrbitPoint::new(Sl2Element::ZERO, Some(Sl2Element::e12()), ZERO).unwrap();
        let mut r = fixture();
        r.directions[0] = Some(factor.projective());
        let cfg = lift(&r).unwrap();
        assert!(cfg.is_triangularizable());
        assert_eq!(reduce(&cfg, &r.chart), Err(Error::RestrictionViolated));
    }

    #[test]
    fn invariants_examples() {
        let zero = OrbitPoint::new(Sl2Element::ZERO, Some(Sl2Element::e12()), ZERO).unwrap();
        let cfg = Configuration::new(vec![zero; 4], None).unwrap();
        let t = invariants(&cfg);
        assert!(t.max_modulus() == 0.0);

        let mut rng = sampling::rng(61);
        let a0 = Sl2Element::h();
        let a1 = Sl2Element::e12();
        let a2 = -(a0 + a1);
        let pts = vec![
            OrbitPoint::new(a0, None, c(1.0, 0.0)).unwrap(),
            OrbitPoint::new(a1, None, ZERO).unwrap(),
            sampling::random_orbit_point(&mut rng, a2),
            zero,
        ];
        let cfg = Configuration::new(pts, None).unwrap();
        assert_eq!(invariants(&cfg).a[0][1], ZERO);
    }

    #[test]
    fn invariants_match_brute_force() {
        let mut rng = sampling::rng(62);
        for n in 3..=5 {
            let cfg = sampling::random_configuration(&mut rng, n);
            let t = invariants(&cfg);
            let m = cfg.affine_parts();
            let scale = (1.0 + cfg.scale()).powi(3);
            for i in 0..=n {
                assert!((t.a[i][i] - cfg.points()[i].casimir()).norm() <= 1e-12 * scale);
                for j in 0..=n {
                    assert!((t.a[i][j] - tr_mm(m[i], m[j])).norm() <= 1e-12 * scale);
                    assert!((t.a[i][j] - t.a[j][i]).norm() <= 1e-12 * scale);
                    for k in 0..=n {
                        let f = tr_mm(commutator(m[i], m[j]), m[k]);
                        assert!((t.f[i][j][k] - f).norm() <= 1e-12 * scale);
                        assert!((t.f[i][j][k] + t.f[j][i][k]).norm() <= 1e-10 * scale);
                        assert!((t.f[i][j][k] - t.f[j][k][i]).norm() <= 1e-10 * scale);
                        assert!((t.f[i][j][k] + t.f[i][k][j]).norm() <= 1e-10 * scale);
                    }
                    assert_eq!(t.f[i][i][j], ZERO);
                }
            }
        }
    }

    #[test]
    fn lift_is_a_section() {
        let mut rng = sampling::rng(63);
        for n in 3..=6 {
            for _ in 0..50 {
                let r = sampling::random_reduced_point(&mut rng, n, None, 0.2);
                let cfg = lift(&r).unwrap();
                assert!(cfg.sum_residual() <= 1e-10);
                let aj = r.a[r.chart.index_j];
                let det = cfg.points()[r.chart.index_j].affine().det();
                assert!((det + 0.5 * aj).norm() <= 1e-10 * (1.0 + aj.norm()) * cfg.scale().powi(2));
                for (k, p) in cfg.points().iter().enumerate() {
                    assert!(p.quadric_residual() <= 1e-10, "{k}");
                    assert!((p.casimir() - r.a[k]).norm() <= 1e-9 * (1.0 + r.a[k].norm()) * cfg.scale().powi(2));
                }
                let back = reduce(&cfg, &r.chart).unwrap();
                assert!(back.distance(&r) <= 1e-9, "{}", back.distance(&r));
            }
        }
    }

    #[test]
    fn reduce_is_gauge_invariant_and_normal_form_holds() {
        let mut rng = sampling::rng(64);
        for n in [3, 4, 5] {
            for _ in 0..50 {
                let cfg = sampling::random_configuration(&mut rng, n);
                let (chart, _) = chart_select(&cfg).unwrap();
                let (r, basis) = reduce_with_basis(&cfg, &chart).unwrap();
                assert!(normal_form_residual(&cfg, &chart, &basis) <= 1e-8);
                for _ in 0..5 {
                    let g = sampling::random_group(&mut rng);
                    let rg = reduce(&cfg.conjugate(&g), &chart).unwrap();
                    assert!(rg.distance(&r) <= 1e-8, "{}", rg.distance(&r));
                }
                let back = lift(&r).unwrap();
                assert!(invariants(&back).relative_distance(&invariants(&cfg)) <= 1e-8);
            }
        }
    }

    #[test]
    fn hamiltonian_value_is_gauge_invariant() {
        let mut rng = sampling::rng(65);
        let cfg = sampling::random_configuration(&mut rng, 4);
        let (chart, _) = chart_select(&cfg).unwrap();
        let r = reduce(&cfg, &chart).unwrap();
        let t = invariants(&cfg.conjugate(&sampling::random_group(&mut rng)));
        for i in 0..=4 {
            for j in 0..=4 {
                let h = hamiltonian_value(&r, i, j);
                assert!((h - t.a[i][j]).norm() <= 1e-9 * (1.0 + t.max_modulus()));
            }
        }
    }

    #[test]
    fn divisor_coords_examples() {
        let pt = OrbitPoint::new(Sl2Element::ZERO, Some(Sl2Element::e12()), ZERO).unwrap();
        let v = nilpotent_divisor_coords(&pt, Sl2Element::h(), Sl2Element::e21()).unwrap();
        // (0 : 1 : -2)
        assert_eq!(v, [ZERO, c(-0.5, 0.0), c(1.0, 0.0)]);
        let scaled = OrbitPoint::new(Sl2Element::ZERO, Some(Sl2Element::e12().scale(c(-3.0, 2.0))), ZERO).unwrap();
        assert_eq!(nilpotent_divisor_coords(&scaled, Sl2Element::h(), Sl2Element::e21()).unwrap(), v);
        assert_eq!(
            nilpotent_divisor_coords(&pt, Sl2Element::h(), Sl2Element::h().scale(c(2.0, 0.0))),
            Err(Error::DegenerateReference)
        );
        let off = OrbitPoint::new(Sl2Element::h(), None, c(1.0, 0.0)).unwrap();
        assert_eq!(nilpotent_divisor_coords(&off, Sl2Element::h(), Sl2Element::e21()), Err(Error::NotOnDivisor));
    }

    #[test]
    fn divisor_coords_lie_on_conic() {
        // the dual coordinates c_k = <Ã, e_k> satisfy c^T G^{-1} c = 0 where
        // G is the Gram matrix of e = (R1, R2, [R1, R2])
        let mut rng = sampling::rng(66);
        for _ in 0..200 {
            let pt = sampling::divisor_point(&mut rng);
            let (r1, r2) = (sampling::random_sl2(&mut rng), sampling::random_sl2(&mut rng));
            let v = nilpotent_divisor_coords(&pt, r1, r2).unwrap();
            let e = [r1, r2, bracket(r1, r2)];
            let g: Vec<Vec<C64>> = (0..3).map(|i| (0..3).map(|j| tr_mm(e[i], e[j])).collect()).collect();
            // adjugate of the symmetric Gram matrix
            let cof = |i: usize, j: usize| {
                let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
                let s: Vec<usize> = (0..3).filter(|&k| k != j).collect();
                let m = g[r[0]][s[0]] * g[r[1]][s[1]] - g[r[0]][s[1]] * g[r[1]][s[0]];
                if (i + j) % 2 == 0 { m } else { -m }
            };
            let mut quad = ZERO;
            let mut scale = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    let t = v[i] * cof(j, i) * v[j];
                    quad += t;
                    scale = scale.max(t.norm());
                }
            }
            assert!(quad.norm() <= 1e-10 * (1.0 + scale));
        }
    }

    #[test]
    fn configuration_validation() {
        let mut rng = sampling::rng(67);
        let cfg = sampling::random_configuration(&mut rng, 3);
        let mut pts = cfg.points().to_vec();
        let stray = sampling::random_sl2(&mut rng);
        pts[1] = sampling::random_orbit_point(&mut rng, stray);
        assert!(matches!(Configuration::new(pts, None), Err(Error::InvalidConfiguration(_))));
        let dup = vec![ZERO, c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        assert!(matches!(
            Configuration::new(cfg.points().to_vec(), Some(dup)),
            Err(Error::PoleCollision { i: 1, j: 2, .. })
        ));
        assert_eq!(cfg.clone().with_lambdas(vec![ZERO; 2]).is_err(), true);
    }
}
