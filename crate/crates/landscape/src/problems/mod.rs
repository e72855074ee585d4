//! Seeded, transformed instances of classic test-function classes.
//!
//! An instance is `f(x) = g(R (x - x_opt)) + f_opt` where `g` is one of the
//! [`functions::BaseFunction`] formulas (global minimum 0 at the origin),
//! `R` is a seeded random rotation (identity for the separable classes),
//! `x_opt` lies in the interior box `[-4, 4]^D` and `f_opt` is a uniform
//! value offset in `[-100, 100]`. The same `(class, dimension, seed)` triple
//! always reproduces a bit-identical instance.

mod functions;

pub use functions::{BaseFunction, PeakSet};

use crate::seeding::derive_rng;
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Default search-space box.
pub const DEFAULT_LO: f64 = -5.0;
/// Default search-space box.
pub const DEFAULT_HI: f64 = 5.0;
/// Optima are drawn from this centered sub-box so they stay interior.
const OPT_BOX: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown function class id {0}")]
    UnknownClass(u32),
    #[error("dimension must be at least 1")]
    InvalidDimension,
    #[error("dimension mismatch: instance is {expected}-D, point is {got}-D")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Catalog entry for one test-function class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionClass {
    pub id: u32,
    pub name: &'static str,
    /// Separable classes keep the identity rotation.
    pub separable: bool,
    /// Human-readable statement of the base formula.
    pub formula: &'static str,
}

const SUITE: &[FunctionClass] = &[
    FunctionClass { id: 1, name: "Sphere", separable: true, formula: "sum z_i^2" },
    FunctionClass { id: 2, name: "Ellipsoid", separable: true, formula: "sum 10^(6(i-1)/(D-1)) z_i^2" },
    FunctionClass { id: 3, name: "Rastrigin", separable: true, formula: "10(D - sum cos 2 pi z_i) + sum z_i^2" },
    FunctionClass { id: 4, name: "Rosenbrock", separable: false, formula: "sum 100((z_i+1)^2 - (z_{i+1}+1))^2 + z_i^2" },
    FunctionClass { id: 5, name: "Ackley", separable: false, formula: "20 - 20 exp(-0.2 sqrt(mean z^2)) + e - exp(mean cos 2 pi z)" },
    FunctionClass { id: 6, name: "Griewank", separable: false, formula: "sum z^2/4000 - prod cos(z_i/sqrt(i)) + 1" },
    FunctionClass { id: 7, name: "Schwefel", separable: false, formula: "sum_i (sum_{j<=i} z_j)^2" },
    FunctionClass { id: 8, name: "Weierstrass", separable: false, formula: "sum_i sum_k 0.5^k cos(2 pi 3^k (z_i + 0.5)), origin-centered" },
    FunctionClass { id: 9, name: "SchafferF7", separable: false, formula: "(mean_i sqrt(s_i)(1 + sin^2 50 s_i^0.2))^2, s_i = sqrt(z_i^2 + z_{i+1}^2)" },
    FunctionClass { id: 10, name: "DifferentPowers", separable: false, formula: "sqrt(sum |z_i|^(2 + 4(i-1)/(D-1)))" },
    FunctionClass { id: 11, name: "LinearSlope", separable: false, formula: "sum 10^((i-1)/(D-1)) |z_i|" },
    FunctionClass { id: 12, name: "GallagherPeaks", separable: false, formula: "10 - max_i w_i exp(-q_i |z - c_i|^2 / 2D), 21 seeded peaks" },
    FunctionClass { id: 13, name: "SharpRidge", separable: false, formula: "z_1^2 + 100 sqrt(sum_{i>1} z_i^2)" },
    FunctionClass { id: 14, name: "BentCigar", separable: false, formula: "z_1^2 + 10^6 sum_{i>1} z_i^2" },
    FunctionClass { id: 15, name: "Discus", separable: false, formula: "10^6 z_1^2 + sum_{i>1} z_i^2" },
    FunctionClass { id: 16, name: "Katsuura", separable: false, formula: "prod_i (1 + i sum_j |2^j z_i - round(2^j z_i)|/2^j)^(10/D^1.2) - 1" },
    FunctionClass { id: 17, name: "AttractiveSector", separable: false, formula: "sum (s_i z_i)^2, s_i = 100 if z_i > 0 else 1" },
    FunctionClass { id: 18, name: "StepEllipsoid", separable: false, formula: "sum 10^(2(i-1)/(D-1)) (round(2 z_i)/2)^2 + 1e-4 sum z_i^2" },
    FunctionClass { id: 19, name: "GriewankRosenbrock", separable: false, formula: "sum_i gw(rb(z_i, z_{i+1})), cyclic pairs" },
    FunctionClass { id: 20, name: "Levy", separable: false, formula: "sin^2(pi w_1) + sum (w_i-1)^2 (1 + 10 sin^2(pi w_i + 1)) + ..., w = 1 + z/4" },
    FunctionClass { id: 21, name: "Zakharov", separable: false, formula: "sum z^2 + (sum 0.5 i z_i)^2 + (sum 0.5 i z_i)^4" },
    FunctionClass { id: 22, name: "HappyCat", separable: false, formula: "||z-1|^2 - D|^0.25 + (0.5 |z-1|^2 + sum(z_i - 1))/D + 0.5" },
    FunctionClass { id: 23, name: "Alpine", separable: false, formula: "sum |z_i sin z_i + 0.1 z_i|" },
    FunctionClass { id: 24, name: "BuecheRastrigin", separable: true, formula: "Rastrigin over asymmetrically scaled coordinates" },
];

/// The stable, ordered function-class catalog. Ids are contiguous from 1.
pub fn suite_list() -> &'static [FunctionClass] {
    SUITE
}

/// Looks up a class by id.
pub fn class_by_id(id: u32) -> Result<&'static FunctionClass, ProblemError> {
    SUITE
        .get(id.wrapping_sub(1) as usize)
        .ok_or(ProblemError::UnknownClass(id))
}

/// A random orthogonal `D x D` matrix: QR of a seeded Gaussian matrix with
/// the Q columns sign-corrected by the diagonal of R. Row-major storage.
pub fn random_rotation(dim: usize, seed: u64) -> Result<Vec<f64>, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::InvalidDimension);
    }
    let mut rng = derive_rng("rotation", &[dim as u64, seed]);
    let entries: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
    let m = nalgebra::DMatrix::from_row_slice(dim, dim, &entries);
    let (q, r) = m.qr().unpack();
    let mut rot = vec![0.0; dim * dim];
    for col in 0..dim {
        let flip = r[(col, col)] < 0.0;
        for row in 0..dim {
            let v = q[(row, col)];
            rot[row * dim + col] = if flip { -v } else { v };
        }
    }
    Ok(rot)
}

fn identity_matrix(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

/// Objective value of one evaluation together with its error gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    /// Raw objective value `f(x)`.
    pub value: f64,
    /// `max(0, value - f_opt)`; the clamp absorbs sub-ulp rounding at the
    /// optimum, never real defects (see the `error_is_nonnegative` test).
    pub error: f64,
}

/// One seeded, shifted, rotated instance of a function class.
///
/// Immutable after construction; evaluation needs no interior mutability,
/// so instances can be shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub class_id: u32,
    pub dim: usize,
    pub seed: u64,
    pub x_opt: Vec<f64>,
    /// Row-major `dim x dim` orthogonal matrix.
    pub rotation: Vec<f64>,
    pub f_opt: f64,
    /// Per-coordinate bounds, default `[-5, 5]`.
    pub bounds: Vec<(f64, f64)>,
    base: BaseFunction,
    /// `base.eval_raw(0)`, subtracted so `f(x_opt) = f_opt` bit-exactly.
    base_offset: f64,
}

/// Builds the seeded instance for `(class_id, dim, seed)`.
pub fn make_instance(class_id: u32, dim: usize, seed: u64) -> Result<ProblemInstance, ProblemError> {
    let class = class_by_id(class_id)?;
    if dim == 0 {
        return Err(ProblemError::InvalidDimension);
    }
    let mut rng = derive_rng("instance", &[class_id as u64, dim as u64, seed]);
    let x_opt: Vec<f64> = (0..dim).map(|_| rng.random_range(-OPT_BOX..=OPT_BOX)).collect();
    let f_opt: f64 = rng.random_range(-100.0..=100.0);
    let rot_seed: u64 = rng.random();
    let rotation = if class.separable {
        identity_matrix(dim)
    } else {
        random_rotation(dim, rot_seed)?
    };
    let base = build_base(class_id, dim, &mut rng);
    let base_offset = base.eval_raw(&vec![0.0; dim]);
    Ok(ProblemInstance {
        class_id,
        dim,
        seed,
        x_opt,
        rotation,
        f_opt,
        bounds: vec![(DEFAULT_LO, DEFAULT_HI); dim],
        base,
        base_offset,
    })
}

fn build_base(class_id: u32, dim: usize, rng: &mut impl Rng) -> BaseFunction {
    match class_id {
        1 => BaseFunction::Sphere,
        2 => BaseFunction::Ellipsoid,
        3 => BaseFunction::Rastrigin,
        4 => BaseFunction::Rosenbrock,
        5 => BaseFunction::Ackley,
        6 => BaseFunction::Griewank,
        7 => BaseFunction::SchwefelDoubleSum,
        8 => BaseFunction::Weierstrass,
        9 => BaseFunction::SchafferF7,
        10 => BaseFunction::DifferentPowers,
        11 => BaseFunction::LinearSlope,
        12 => {
            // Peak 0 is the global optimum: height exactly 10 at the origin.
            // The 20 lesser peaks are strictly below 10, so the minimum value
            // stays 0 and the clamp in Fitness never hides a deeper basin.
            let mut weights = vec![10.0];
            let mut centers = vec![vec![0.0; dim]];
            let mut widths = vec![rng.random_range(0.5..=4.5)];
            for _ in 0..20 {
                weights.push(rng.random_range(1.0..=9.5));
                centers.push((0..dim).map(|_| rng.random_range(-4.5..=4.5)).collect());
                widths.push(rng.random_range(0.5..=4.5));
            }
            BaseFunction::GallagherPeaks(PeakSet { weights, centers, widths })
        }
        13 => BaseFunction::SharpRidge,
        14 => BaseFunction::BentCigar,
        15 => BaseFunction::Discus,
        16 => BaseFunction::Katsuura,
        17 => BaseFunction::AttractiveSector,
        18 => BaseFunction::StepEllipsoid,
        19 => BaseFunction::GriewankRosenbrock,
        20 => BaseFunction::Levy,
        21 => BaseFunction::Zakharov,
        22 => BaseFunction::HappyCat,
        23 => BaseFunction::Alpine,
        24 => BaseFunction::BuecheRastrigin,
        _ => unreachable!("class ids validated by class_by_id"),
    }
}

impl ProblemInstance {
    /// Evaluates the objective at `x`. Out-of-bounds points are allowed
    /// (repair is the optimizers' job); only the dimension is checked.
    pub fn evaluate(&self, x: &[f64]) -> Result<Fitness, ProblemError> {
        if x.len() != self.dim {
            return Err(ProblemError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut z = vec![0.0; self.dim];
        let value = self.evaluate_into(x, &mut z);
        Ok(self.fitness_of(value))
    }

    /// Allocation-free evaluation for hot loops. `z_scratch` is resized as
    /// needed; the caller guarantees `x.len() == self.dim`.
    pub fn evaluate_into(&self, x: &[f64], z_scratch: &mut Vec<f64>) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        z_scratch.resize(self.dim, 0.0);
        for (i, zi) in z_scratch.iter_mut().enumerate() {
            let row = &self.rotation[i * self.dim..(i + 1) * self.dim];
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += row[j] * (x[j] - self.x_opt[j]);
            }
            *zi = acc;
        }
        (self.base.eval_raw(z_scratch) - self.base_offset) + self.f_opt
    }

    /// Wraps a raw objective value in a [`Fitness`].
    pub fn fitness_of(&self, value: f64) -> Fitness {
        Fitness { value, error: (value - self.f_opt).max(0.0) }
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        InstanceDescriptor { class_id: self.class_id, dim: self.dim, seed: self.seed }
    }
}

/// The text record placed in dataset manifests: shift, rotation and offset
/// are always re-derived from the seed, never serialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstanceDescriptor {
    pub class_id: u32,
    pub dim: usize,
    pub seed: u64,
}

impl InstanceDescriptor {
    pub fn instantiate(&self) -> Result<ProblemInstance, ProblemError> {
        make_instance(self.class_id, self.dim, self.seed)
    }
}

impl fmt::Display for InstanceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.class_id, self.dim, self.seed)
    }
}

impl FromStr for InstanceDescriptor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split_whitespace();
        let class_id = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("bad instance descriptor {s:?}"))?;
        let dim = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("bad instance descriptor {s:?}"))?;
        let seed = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("bad instance descriptor {s:?}"))?;
        if it.next().is_some() {
            return Err(format!("trailing tokens in instance descriptor {s:?}"));
        }
        Ok(InstanceDescriptor { class_id, dim, seed })
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn suite_starts_with_sphere_and_is_ordered() {
        let suite = suite_list();
        assert_eq!(suite[0].id, 1);
        assert_eq!(suite[0].name, "Sphere");
        assert!(suite.len() >= 12);
        for pair in suite.windows(2) {
            assert!(pair[0].id < pair[1].id);
        }
        assert_eq!(suite.last().unwrap().id as usize, suite.len());
    }

    #[test]
    fn rotation_is_deterministic_and_orthogonal() {
        let a = random_rotation(10, 42).unwrap();
        let b = random_rotation(10, 42).unwrap();
        assert_eq!(a, b);

        // max |R^T R - I|
        let d = 10;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut dot = 0.0;
                for k in 0..d {
                    dot += a[k * d + i] * a[k * d + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        assert!(worst < 1e-10, "orthogonality defect {worst}");
    }

    #[test]
    fn rotation_1d_is_sign() {
        for seed in 0..20 {
            let r = random_rotation(1, seed).unwrap();
            assert_eq!(r.len(), 1);
            assert!((r[0].abs() - 1.0).abs() < 1e-12, "got {}", r[0]);
        }
    }

    #[test]
    fn rotation_rejects_zero_dim() {
        assert!(matches!(random_rotation(0, 1), Err(ProblemError::InvalidDimension)));
    }

    #[test]
    fn optimum_evaluates_to_f_opt() {
        for class in suite_list() {
            for dim in [2usize, 10] {
                let inst = make_instance(class.id, dim, 7).unwrap();
                let fit = inst.evaluate(&inst.x_opt).unwrap();
                let tol = 1e-12 * inst.f_opt.abs().max(1.0);
                assert!(
                    (fit.value - inst.f_opt).abs() <= tol,
                    "{} (d={dim}): value {} vs f_opt {}",
                    class.name,
                    fit.value,
                    inst.f_opt
                );
                assert!(fit.error <= tol);
            }
        }
    }

    #[test]
    fn instances_are_deterministic() {
        let a = make_instance(4, 10, 99).unwrap();
        let b = make_instance(4, 10, 99).unwrap();
        assert_eq!(a.x_opt, b.x_opt);
        assert_eq!(a.rotation, b.rotation);
        assert_eq!(a.f_opt, b.f_opt);

        let mut rng = derive_rng("determinism-probe", &[0]);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
            let fa = a.evaluate(&x).unwrap();
            let fb = b.evaluate(&x).unwrap();
            assert_eq!(fa.value.to_bits(), fb.value.to_bits());
        }
    }

    #[test]
    fn unknown_class_is_rejected() {
        assert!(matches!(make_instance(0, 2, 1), Err(ProblemError::UnknownClass(0))));
        assert!(matches!(make_instance(25, 2, 1), Err(ProblemError::UnknownClass(25))));
        assert!(matches!(make_instance(1, 0, 1), Err(ProblemError::InvalidDimension)));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let inst = make_instance(1, 3, 1).unwrap();
        assert!(matches!(
            inst.evaluate(&[0.0, 0.0]),
            Err(ProblemError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn sphere_value_at_known_radius() {
        // Separable sphere: f(x) = |x - x_opt|^2 + f_opt.
        let inst = make_instance(1, 2, 3).unwrap();
        let x = [inst.x_opt[0] + 2.0, inst.x_opt[1]];
        let fit = inst.evaluate(&x).unwrap();
        assert!((fit.value - (inst.f_opt + 4.0)).abs() < 1e-9);
        assert!((fit.error - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rastrigin_unit_offset_through_rotation_pullback() {
        // x = x_opt + R^T e_1 puts z = e_1, where the formula gives exactly
        // 10 (1 - cos 2 pi) + 1 = 1 above the optimum.
        let inst = make_instance(3, 10, 5).unwrap();
        let d = inst.dim;
        let mut x = inst.x_opt.clone();
        for j in 0..d {
            x[j] += inst.rotation[j * d]; // column 0 of R = R^T e_1
        }
        let fit = inst.evaluate(&x).unwrap();
        assert!((fit.error - 1.0).abs() < 1e-9, "error {}", fit.error);
    }

    #[test]
    fn rosenbrock_optimum_location() {
        let inst = make_instance(4, 2, 11).unwrap();
        let fit = inst.evaluate(&inst.x_opt).unwrap();
        assert!(fit.error <= 1e-12 * inst.f_opt.abs().max(1.0));
        // The valley floor away from the optimum is strictly above it.
        let mut x = inst.x_opt.clone();
        x[0] += 0.5;
        assert!(inst.evaluate(&x).unwrap().error > 0.0);
    }

    #[test]
    fn sphere_is_rotation_invariant() {
        // Machinery check: evaluating a sphere with an explicit rotation and
        // with the identity agrees at matched pullback points.
        let ident = make_instance(1, 6, 13).unwrap();
        let mut rotated = ident.clone();
        rotated.rotation = random_rotation(6, 77).unwrap();

        let mut rng = derive_rng("rot-invariance", &[0]);
        for _ in 0..100 {
            let u: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            // identity instance at x_opt + u  vs  rotated at x_opt + R^T u
            let x_id: Vec<f64> = ident.x_opt.iter().zip(&u).map(|(a, b)| a + b).collect();
            let mut x_rot = rotated.x_opt.clone();
            for j in 0..6 {
                for i in 0..6 {
                    x_rot[j] += rotated.rotation[i * 6 + j] * u[i];
                }
            }
            let a = ident.evaluate(&x_id).unwrap().value;
            let b = rotated.evaluate(&x_rot).unwrap().value;
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn error_is_nonnegative_across_suite() {
        // The clamp in fitness_of may only ever absorb rounding noise; any
        // real dip below f_opt is a formula defect this test would catch.
        let mut rng = derive_rng("nonneg-probe", &[1]);
        for class in suite_list() {
            let inst = make_instance(class.id, 10, 21).unwrap();
            let mut scratch = Vec::new();
            for _ in 0..500 {
                let x: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
                let raw = inst.evaluate_into(&x, &mut scratch) - inst.f_opt;
                assert!(raw >= -1e-9, "{}: raw error {raw}", class.name);
            }
        }
    }

    #[test]
    fn x_opt_is_interior() {
        for class in suite_list() {
            let inst = make_instance(class.id, 5, 2).unwrap();
            for (v, (lo, hi)) in inst.x_opt.iter().zip(&inst.bounds) {
                assert!(*v >= lo + 0.5 && *v <= hi - 0.5);
            }
            assert!(inst.f_opt.abs() <= 100.0);
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let d = InstanceDescriptor { class_id: 12, dim: 10, seed: 4711 };
        let parsed: InstanceDescriptor = d.to_string().parse().unwrap();
        assert_eq!(parsed, d);
        assert!("12 x 3".parse::<InstanceDescriptor>().is_err());
        assert!("1 2 3 4".parse::<InstanceDescriptor>().is_err());
    }
}
