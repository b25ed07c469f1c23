//! Seeded random generation of algebra elements, orbit points,
//! configurations and reduced points.
//!
//! Entries are i.i.d. complex Gaussians with unit variance. Configurations
//! draw indices `1..=n` at random and let index 0 balance the sum; draws that
//! are simultaneously triangularizable are rejected.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::ChartSpec;
use crate::orbit::{from_chart, ChartCoords, ChartId, OrbitPoint};
use crate::reduction::{Configuration, ReducedPoint};
use crate::sl2::{GroupElement, Sl2Element};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream from a base seed and a tag path.
pub fn derived_rng(seed: u64, tags: &[u64]) -> SampleRng {
    // splitmix64 chain
    let mut z = seed;
    for &t in tags {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    ChaCha8Rng::seed_from_u64(z)
}

/// Complex Gaussian with unit variance.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> Sl2Element {
    Sl2Element::new(gaussian(rng), gaussian(rng), gaussian(rng))
}

/// A random branch of `sqrt(casimir/2)`.
pub fn random_root<R: Rng + ?Sized>(rng: &mut R, casimir: C64) -> C64 {
    let r = (casimir * 0.5).sqrt();
    if rng.random::<bool>() {
        r
    } else {
        -r
    }
}

/// Random SL(2,C) element `M / sqrt(det M)` with `M = I + G/2`,
/// rejecting draws with `|det M| < 0.2`.
pub fn random_group<R: Rng + ?Sized>(rng: &mut R) -> GroupElement {
    loop {
        let one = C64::new(1.0, 0.0);
        let m = [
            one + gaussian(rng) * 0.5,
            gaussian(rng) * 0.5,
            gaussian(rng) * 0.5,
            one + gaussian(rng) * 0.5,
        ];
        let det = m[0] * m[3] - m[1] * m[2];
        if det.norm() < 0.2 {
            continue;
        }
        let s = det.sqrt().inv();
        if let Ok(g) = GroupElement::new(m[0] * s, m[1] * s, m[2] * s, m[3] * s) {
            return g;
        }
    }
}

/// A random point of the nilpotent cone `x1 x2 + x3^2 = 0`.
pub fn random_cone_direction<R: Rng + ?Sized>(rng: &mut R) -> Sl2Element {
    // (u, v) -> [[uv, -u^2], [v^2, -uv]] is nilpotent
    let (u, v) = (gaussian(rng), gaussian(rng));
    Sl2Element::new(-u * u, v * v, u * v)
}

/// A random orbit point with a random root branch.
pub fn random_orbit_point<R: Rng + ?Sized>(rng: &mut R, affine: Sl2Element) -> OrbitPoint {
    let root = random_root(rng, affine.casimir());
    OrbitPoint::new(affine, None, root).expect("sampled point is valid")
}

pub fn divisor_point<R: Rng + ?Sized>(rng: &mut R) -> OrbitPoint {
    OrbitPoint::new(Sl2Element::ZERO, Some(random_cone_direction(rng)), C64::default())
        .expect("cone direction")
}

/// Pole positions `lambda_j = j` for `j = 0..=n`.
pub fn default_lambdas(n: usize) -> Vec<C64> {
    (0..=n).map(|j| C64::new(j as f64, 0.0)).collect()
}

/// Kinds of configurations produced by [`random_configuration_kind`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigKind {
    Generic,
    /// One of the indices `1..=n` sits on the blow-up divisor.
    DivisorFactor,
    /// Index 0 sits on the blow-up divisor.
    DivisorAtZero,
    /// Index 0 is nilpotent and nonzero.
    NilpotentAtZero,
}

/// A generic random configuration with `n + 1` points.
pub fn random_configuration<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Configuration {
    random_configuration_kind(rng, n, ConfigKind::Generic)
}

pub fn random_configuration_kind<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    kind: ConfigKind,
) -> Configuration {
    assert!(n >= 3);
    loop {
        let mut points: Vec<Option<OrbitPoint>> = vec![None; n + 1];
        let mut affine = vec![Sl2Element::ZERO; n + 1];
        match kind {
            ConfigKind::Generic => {
                for a in affine.iter_mut().skip(1) {
                    *a = random_sl2(rng);
                }
            }
            ConfigKind::DivisorFactor => {
                let d = rng.random_range(1..=n);
                for (k, a) in affine.iter_mut().enumerate().skip(1) {
                    if k != d {
                        *a = random_sl2(rng);
                    }
                }
                points[d] = Some(divisor_point(rng));
            }
            ConfigKind::DivisorAtZero => {
                for a in affine.iter_mut().skip(2) {
                    *a = random_sl2(rng);
                }
                affine[1] = -affine.iter().skip(2).copied().sum::<Sl2Element>();
                points[0] = Some(divisor_point(rng));
            }
            ConfigKind::NilpotentAtZero => {
                affine[0] = random_cone_direction(rng);
                for a in affine.iter_mut().skip(2) {
                    *a = random_sl2(rng);
                }
                affine[1] = -affine.iter().enumerate().filter(|(k, _)| *k != 1).map(|(_, a)| *a).sum::<Sl2Element>();
                points[0] = Some(
                    OrbitPoint::new(affine[0], None, C64::default()).expect("nilpotent point"),
                );
            }
        }
        if points[0].is_none() {
            affine[0] = -affine.iter().skip(1).copied().sum::<Sl2Element>();
        }
        let points: Vec<OrbitPoint> = points
            .into_iter()
            .zip(affine)
            .map(|(p, a)| p.unwrap_or_else(|| random_orbit_point(rng, a)))
            .collect();
        if let Ok(cfg) = Configuration::new(points, Some(default_lambdas(n))) {
            if !cfg.is_triangularizable() {
                return cfg;
            }
        }
    }
}

/// A random point of a factor quadric, drawn through a random chart.
/// With `divisor = true` the point lies on the blow-up divisor.
pub fn random_factor<R: Rng + ?Sized>(rng: &mut R, divisor: bool) -> OrbitPoint {
    if divisor {
        let chart = if rng.random::<bool>() { ChartId::Primary } else { ChartId::Secondary };
        return from_chart(ChartCoords { chart, p: gaussian(rng), q: C64::default() }, C64::default());
    }
    let root = gaussian(rng);
    let chart = if rng.random::<bool>() { ChartId::Primary } else { ChartId::Secondary };
    from_chart(ChartCoords { chart, p: gaussian(rng), q: gaussian(rng) }, root)
}

/// A random reduced point. `chart` picks the special indices; when `None`
/// the roles `(n-1, n)` are used.
pub fn random_reduced_point<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    chart: Option<(usize, usize)>,
    divisor_probability: f64,
) -> ReducedPoint {
    let (i, j) = chart.unwrap_or((n - 1, n));
    let factors: Vec<OrbitPoint> = (0..n - 2)
        .map(|_| {
            let divisor = rng.random::<f64>() < divisor_probability;
            random_factor(rng, divisor)
        })
        .collect();
    let root0 = gaussian(rng);
    let root_i = gaussian(rng);
    let a_j = gaussian(rng) * 2.0;
    let root_j = random_root(rng, a_j);
    let spec = ChartSpec { root0, index_i: i, root_i, index_j: j };
    ReducedPoint::from_factors(n, &factors, spec, root_j).expect("sampled reduced point is valid")
}
