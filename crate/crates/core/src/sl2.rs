//! Traceless 2×2 complex matrices.
//!
//! An element is stored by its three free entries
//!
//! ```text
//!     [[x3,  x1],
//!      [x2, -x3]]
//! ```
//!
//! so tracelessness holds by construction. The trace form
//! `<A, B> = tr(AB)` identifies sl(2,C) with its dual; `<A, A> = -2 det A`
//! is the Casimir of the coadjoint orbit through `A`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking a caller-supplied square root.
pub const ROOT_TOL: f64 = 1e-10;
/// Default relative tolerance of the common-eigenvector test.
pub const TRIANGULAR_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sl2Element {
    pub x1: C64,
    pub x2: C64,
    pub x3: C64,
}

impl fmt::Debug for Sl2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sl2[x1={}, x2={}, x3={}]", self.x1, self.x2, self.x3)
    }
}

impl Sl2Element {
    pub const ZERO: Sl2Element = Sl2Element { x1: ZERO, x2: ZERO, x3: ZERO };

    pub const fn new(x1: C64, x2: C64, x3: C64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn from_array(v: [C64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [C64; 3] {
        [self.x1, self.x2, self.x3]
    }

    /// `diag(1, -1)`.
    pub fn h() -> Self {
        Self::new(ZERO, ZERO, ONE)
    }

    /// Upper-right matrix unit.
    pub fn e12() -> Self {
        Self::new(ONE, ZERO, ZERO)
    }

    /// Lower-left matrix unit.
    pub fn e21() -> Self {
        Self::new(ZERO, ONE, ZERO)
    }

    /// Entries in row-major order `[[a, b], [c, d]]`.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        [[self.x3, self.x1], [self.x2, -self.x3]]
    }

    /// Max-modulus norm of the three stored components.
    pub fn norm(self) -> f64 {
        self.x1.norm().max(self.x2.norm()).max(self.x3.norm())
    }

    pub fn is_zero(self) -> bool {
        self.x1 == ZERO && self.x2 == ZERO && self.x3 == ZERO
    }

    pub fn scale(self, c: C64) -> Self {
        Self::new(self.x1 * c, self.x2 * c, self.x3 * c)
    }

    pub fn det(self) -> C64 {
        -(self.x3 * self.x3 + self.x1 * self.x2)
    }

    pub fn casimir(self) -> C64 {
        killing(self, self)
    }

    /// Rescales so the max-modulus component is exactly 1.
    /// Returns `None` for the zero element.
    pub fn normalized(self) -> Option<Self> {
        let comps = self.to_array();
        let pivot = comps
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(ZERO);
        if pivot == ZERO {
            return None;
        }
        let mut out = self.scale(pivot.inv());
        // pin the pivot to exactly one
        for (slot, c) in [&mut out.x1, &mut out.x2, &mut out.x3].into_iter().zip(comps) {
            if c == pivot {
                *slot = ONE;
                break;
            }
        }
        Some(out)
    }
}

impl Add for Sl2Element {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl AddAssign for Sl2Element {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Sl2Element {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }
}

impl Neg for Sl2Element {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2, -self.x3)
    }
}

impl Mul<C64> for Sl2Element {
    type Output = Self;
    fn mul(self, c: C64) -> Self {
        self.scale(c)
    }
}

impl Mul<f64> for Sl2Element {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }
}

impl std::iter::Sum for Sl2Element {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |acc, a| acc + a)
    }
}

/// The Killing (trace) product `tr(ab)`.
pub fn killing(a: Sl2Element, b: Sl2Element) -> C64 {
    2.0 * a.x3 * b.x3 + a.x1 * b.x2 + a.x2 * b.x1
}

/// The commutator `ab - ba`.
pub fn bracket(a: Sl2Element, b: Sl2Element) -> Sl2Element {
    Sl2Element::new(
        2.0 * (a.x3 * b.x1 - a.x1 * b.x3),
        2.0 * (a.x2 * b.x3 - a.x3 * b.x2),
        a.x1 * b.x2 - a.x2 * b.x1,
    )
}

/// An element of SL(2,C).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub g11: C64,
    pub g12: C64,
    pub g21: C64,
    pub g22: C64,
}

impl GroupElement {
    pub const DET_TOL: f64 = 1e-12;

    pub fn new(g11: C64, g12: C64, g21: C64, g22: C64) -> Result<Self> {
        let residual = (g11 * g22 - g12 * g21 - ONE).norm();
        if residual > Self::DET_TOL {
            return Err(Error::NotUnimodular { residual });
        }
        Ok(Self { g11, g12, g21, g22 })
    }

    pub fn identity() -> Self {
        Self { g11: ONE, g12: ZERO, g21: ZERO, g22: ONE }
    }

    /// Inverse through the adjugate; exact because det = 1.
    pub fn inverse(&self) -> Self {
        Self { g11: self.g22, g12: -self.g12, g21: -self.g21, g22: self.g11 }
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self {
            g11: self.g11 * o.g11 + self.g12 * o.g21,
            g12: self.g11 * o.g12 + self.g12 * o.g22,
            g21: self.g21 * o.g11 + self.g22 * o.g21,
            g22: self.g21 * o.g12 + self.g22 * o.g22,
        }
    }

    /// Applies the matrix to a vector of C².
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [self.g11 * v[0] + self.g12 * v[1], self.g21 * v[0] + self.g22 * v[1]]
    }
}

/// `g a g^{-1}`.
pub fn conjugate(g: &GroupElement, a: Sl2Element) -> Sl2Element {
    let [[a11, a12], [a21, _]] = a.matrix();
    let (p, q, r, s) = (g.g11, g.g12, g.g21, g.g22);
    // g a
    let m11 = p * a11 + q * a21;
    let m12 = p * a12 - q * a11;
    let m21 = r * a11 + s * a21;
    let m22 = r * a12 - s * a11;
    // (g a) adj(g), adj(g) = [[s, -q], [-r, p]]
    let x3 = m11 * s - m12 * r;
    let x1 = -m11 * q + m12 * p;
    let x2 = m21 * s - m22 * r;
    Sl2Element::new(x1, x2, x3)
}

/// Checks `root^2 = <a,a>/2` relative to `max(1, |a|^2)`.
pub fn check_root(a: Sl2Element, root: C64) -> Result<()> {
    let scale = 1f64.max(a.norm().powi(2)).max(root.norm_sqr());
    let residual = (root * root - 0.5 * a.casimir()).norm() / scale;
    if residual > ROOT_TOL {
        return Err(Error::RootMismatch { residual });
    }
    Ok(())
}

/// Eigenvector of `ad_a` built from a partner `b`:
/// `<a,a> b - <a,b> a + root [a,b]`, which satisfies `[a, σ] = 2 root σ`.
///
/// `root` is the caller's branch of `sqrt(<a,a>/2)`; its sign selects the
/// eigenvalue.
pub fn eig_sigma(a: Sl2Element, b: Sl2Element, root: C64) -> Result<Sl2Element> {
    check_root(a, root)?;
    Ok(b.scale(a.casimir()) - a.scale(killing(a, b)) + bracket(a, b).scale(root))
}

fn eigenvectors(a: Sl2Element) -> Vec<[C64; 2]> {
    let mu = (a.x3 * a.x3 + a.x1 * a.x2).sqrt();
    let mut out = Vec::with_capacity(2);
    for lambda in [mu, -mu] {
        let v = [a.x1, lambda - a.x3];
        let w = [lambda + a.x3, a.x2];
        let nv = v[0].norm().max(v[1].norm());
        let nw = w[0].norm().max(w[1].norm());
        out.push(if nv >= nw { v } else { w });
    }
    out
}

fn is_eigenvector(b: Sl2Element, v: [C64; 2], tol: f64) -> bool {
    let [[b11, b12], [b21, b22]] = b.matrix();
    let bv = [b11 * v[0] + b12 * v[1], b21 * v[0] + b22 * v[1]];
    let cross = bv[0] * v[1] - bv[1] * v[0];
    let vn = v[0].norm().max(v[1].norm());
    cross.norm() <= tol * b.norm() * vn * vn
}

/// Whether all elements share a common eigenvector in C².
///
/// Elements whose norm is below `tol` times the largest norm count as zero.
/// Candidate eigenvectors are taken from the largest element.
pub fn is_simultaneously_triangularizable(set: &[Sl2Element], tol: f64) -> bool {
    let max_norm = set.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return true;
    }
    let pivot = set
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("nonempty");
    let others: Vec<Sl2Element> =
        set.iter().copied().filter(|b| b.norm() > tol * max_norm).collect();
    eigenvectors(pivot)
        .into_iter()
        .any(|v| others.iter().all(|&b| is_eigenvector(b, v, tol)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // brute-force 2x2 matrix arithmetic, independent of the closed forms above
    type M = [[C64; 2]; 2];
    fn mm(a: M, b: M) -> M {
        let mut o = [[C64::default(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    o[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        o
    }
    fn from_m(m: M) -> Sl2Element {
        Sl2Element::new(m[0][1], m[1][0], m[0][0])
    }
    fn commutator(a: M, b: M) -> M {
        let ab = mm(a, b);
        let ba = mm(b, a);
        [[ab[0][0] - ba[0][0], ab[0][1] - ba[0][1]], [ab[1][0] - ba[1][0], ab[1][1] - ba[1][1]]]
    }

    fn sample(seed: u64) -> Vec<Sl2Element> {
        let mut rng = crate::sampling::rng(seed);
        (0..4).map(|_| crate::sampling::random_sl2(&mut rng)).collect()
    }

    #[test]
    fn killing_examples() {
        assert_eq!(killing(Sl2Element::h(), Sl2Element::h()), c(2.0, 0.0));
        assert_eq!(killing(Sl2Element::e12(), Sl2Element::e21()), c(1.0, 0.0));
        for s in 0..100 {
            let a = sample(s)[0];
            assert!((killing(a, a) + 2.0 * a.det()).norm() < 1e-12 * a.norm().powi(2).max(1.0));
        }
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(bracket(Sl2Element::e12(), Sl2Element::e21()), Sl2Element::h());
        let a = sample(3)[0];
        assert!(bracket(a, a).is_zero());
    }

    #[test]
    fn bracket_matches_matrix_commutator_and_jacobi() {
        for s in 0..200 {
            let v = sample(s);
            let (a, b, cc) = (v[0], v[1], v[2]);
            let direct = from_m(commutator(a.matrix(), b.matrix()));
            assert!((bracket(a, b) - direct).norm() < 1e-13 * (a.norm() * b.norm()).max(1.0));
            let am = a.matrix();
            let bm = b.matrix();
            let cm = c_m(cc);
            let j1 = commutator(am, commutator(bm, cm));
            let j2 = commutator(bm, commutator(cm, am));
            let j3 = commutator(cm, commutator(am, bm));
            let jac = from_m(j1) + from_m(j2) + from_m(j3);
            let scale = (a.norm() * b.norm() * cc.norm()).max(1.0);
            assert!(jac.norm() <= 1e-13 * scale);
            let jac2 = bracket(a, bracket(b, cc)) + bracket(b, bracket(cc, a)) + bracket(cc, bracket(a, b));
            assert!(jac2.norm() <= 1e-13 * scale);
        }
    }

    fn c_m(a: Sl2Element) -> M {
        a.matrix()
    }

    #[test]
    fn killing_is_symmetric_and_bilinear() {
        let mut rng = crate::sampling::rng(11);
        for s in 0..200 {
            let v = sample(1000 + s);
            let (a, b, cc) = (v[0], v[1], v[2]);
            let (al, be) = (crate::sampling::gaussian(&mut rng), crate::sampling::gaussian(&mut rng));
            let scale = (a.norm().max(b.norm()).max(cc.norm()).max(1.0)).powi(2)
                * (al.norm().max(be.norm()).max(1.0));
            assert!((killing(a, b) - killing(b, a)).norm() <= 1e-12 * scale);
            let lhs = killing(a.scale(al) + b.scale(be), cc);
            let rhs = al * killing(a, cc) + be * killing(b, cc);
            assert!((lhs - rhs).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn conjugation() {
        let a = sample(5)[0];
        assert_eq!(conjugate(&GroupElement::identity(), a), a);
        let mut rng = crate::sampling::rng(77);
        for s in 0..200 {
            let v = sample(2000 + s);
            let (a, b) = (v[0], v[1]);
            let g = crate::sampling::random_group(&mut rng);
            // direct matrix oracle
            let gm = [[g.g11, g.g12], [g.g21, g.g22]];
            let gi = g.inverse();
            let gim = [[gi.g11, gi.g12], [gi.g21, gi.g22]];
            let direct = from_m(mm(mm(gm, a.matrix()), gim));
            let ga = conjugate(&g, a);
            let gb = conjugate(&g, b);
            let gn = g.g11.norm().max(g.g12.norm()).max(g.g21.norm()).max(g.g22.norm());
            let scale = (a.norm().max(b.norm()).max(1.0)).powi(2) * gn.powi(4);
            assert!((ga - direct).norm() <= 1e-11 * scale);
            assert!((killing(ga, gb) - killing(a, b)).norm() <= 1e-11 * scale);
            let lhs = conjugate(&g, bracket(a, b));
            let rhs = bracket(ga, gb);
            assert!((lhs - rhs).norm() <= 1e-11 * scale * gn.powi(2));
        }
    }

    #[test]
    fn group_element_rejects_non_unimodular() {
        assert!(matches!(
            GroupElement::new(c(2.0, 0.0), C64::default(), C64::default(), c(1.0, 0.0)),
            Err(Error::NotUnimodular { .. })
        ));
    }

    #[test]
    fn eig_sigma_examples() {
        let s = eig_sigma(Sl2Element::h(), Sl2Element::e12(), c(1.0, 0.0)).unwrap();
        assert_eq!(s, Sl2Element::e12().scale(c(4.0, 0.0)));
        assert_eq!(bracket(Sl2Element::h(), s), s.scale(c(2.0, 0.0)));

        let s = eig_sigma(Sl2Element::e12(), Sl2Element::e21(), C64::default()).unwrap();
        assert_eq!(s, -Sl2Element::e12());
        assert!(bracket(Sl2Element::e12(), s).is_zero());

        assert!(matches!(
            eig_sigma(Sl2Element::h(), Sl2Element::e12(), c(2.0, 0.0)),
            Err(Error::RootMismatch { .. })
        ));
    }

    #[test]
    fn eig_sigma_properties() {
        let mut rng = crate::sampling::rng(5);
        for s in 0..300 {
            let v = sample(3000 + s);
            let (a, b, b2) = (v[0], v[1], v[2]);
            let root = crate::sampling::random_root(&mut rng, a.casimir());
            let sigma = eig_sigma(a, b, root).unwrap();
            let res = bracket(a, sigma) - sigma.scale(2.0 * root);
            assert!(res.norm() <= 1e-11 * sigma.norm().max(1.0) * a.norm().max(1.0));
            let scale = (a.norm().max(1.0) * sigma.norm().max(1.0)).max(sigma.norm().powi(2));
            assert!(killing(sigma, sigma).norm() <= 1e-10 * scale);
            assert!(killing(a, sigma).norm() <= 1e-10 * scale);
            assert!(sigma.norm() > 0.0);
            // one-dimensional eigenspace: two partners give parallel vectors
            let s2 = eig_sigma(a, b2, root).unwrap();
            let cross = [
                sigma.x1 * s2.x2 - sigma.x2 * s2.x1,
                sigma.x1 * s2.x3 - sigma.x3 * s2.x1,
                sigma.x2 * s2.x3 - sigma.x3 * s2.x2,
            ];
            let cs = (sigma.norm() * s2.norm()).max(1.0);
            assert!(cross.iter().all(|x| x.norm() <= 1e-10 * cs));
        }
    }

    #[test]
    fn triangularizability() {
        let (e, f, h) = (Sl2Element::e12(), Sl2Element::e21(), Sl2Element::h());
        assert!(is_simultaneously_triangularizable(&[e, h], TRIANGULAR_TOL));
        assert!(!is_simultaneously_triangularizable(&[e, f], TRIANGULAR_TOL));
        assert!(is_simultaneously_triangularizable(&[Sl2Element::ZERO], TRIANGULAR_TOL));
        for s in 0..50 {
            let v = sample(4000 + s);
            assert!(is_simultaneously_triangularizable(&[v[0], -v[0]], TRIANGULAR_TOL));
            assert!(is_simultaneously_triangularizable(&[v[0], Sl2Element::ZERO], TRIANGULAR_TOL));
            assert!(!is_simultaneously_triangularizable(&v[..2], TRIANGULAR_TOL));
            // a conjugated upper-triangular family stays triangularizable
            let mut rng = crate::sampling::rng(s);
            let g = crate::sampling::random_group(&mut rng);
            let fam: Vec<_> = v
                .iter()
                .map(|a| conjugate(&g, Sl2Element::new(a.x1, C64::default(), a.x3)))
                .collect();
            assert!(is_simultaneously_triangularizable(&fam, 1e-8));
        }
    }

    #[test]
    fn normalized_pins_pivot() {
        let a = Sl2Element::new(c(0.5, 0.0), c(0.0, -2.0), c(1.0, 1.0));
        let n = a.normalized().unwrap();
        assert_eq!(n.x2, c(1.0, 0.0));
        assert!(Sl2Element::ZERO.normalized().is_none());
    }
}
