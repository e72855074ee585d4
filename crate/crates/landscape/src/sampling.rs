//! Shared sample coordinates, fitness vectors and 2-D landscape images.
//!
//! One [`SampleMatrix`] is built per dataset and reused for every instance,
//! so two images differ only through the objective values, never through the
//! coordinates. Fitness vectors are min-max normalized to `[0, 1]` and
//! reshaped row-major into a square raster.

use crate::problems::{ProblemError, ProblemInstance};
use crate::seeding::{derive_rng, sha256_hex};
use rand::Rng;
use rayon::prelude::*;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("sample count {0} is not a perfect square")]
    NotPerfectSquare(usize),
    #[error("grid mode needs N = k^D; no integer k satisfies {n} = k^{dim}")]
    GridShape { n: usize, dim: usize },
    #[error("dimension must be at least 1")]
    InvalidDimension,
    #[error("bounds must satisfy lo < hi")]
    InvalidBounds,
    #[error("non-finite fitness value {value} at sample {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("vector length {0} is not a perfect square")]
    NonSquareLength(usize),
    #[error("image side must be at least 2, got {0}")]
    SideTooSmall(usize),
    #[error("image pixel {index} out of range: {value}")]
    PixelOutOfRange { index: usize, value: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("image file {path}: {reason}")]
    ImageFormat { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// How sample coordinates are laid out over the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// `k x k x ...` lattice including the bound endpoints, row-major with
    /// axis 0 slowest. Requires `N = k^D`; practically used for `D = 2` where
    /// the reshaped vector is a true landscape raster.
    Grid,
    /// Seeded i.i.d. uniform draws.
    UniformRandom,
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleMode::Grid => write!(f, "grid"),
            SampleMode::UniformRandom => write!(f, "random"),
        }
    }
}

impl FromStr for SampleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(SampleMode::Grid),
            "random" => Ok(SampleMode::UniformRandom),
            other => Err(format!("unknown sample mode {other:?} (grid|random)")),
        }
    }
}

/// The `N x D` coordinate set shared by every instance of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub n: usize,
    pub dim: usize,
    pub mode: SampleMode,
    pub seed: u64,
    pub bounds: Vec<(f64, f64)>,
    /// Row-major, `n * dim` entries.
    coords: Vec<f64>,
}

fn integer_root(n: usize, p: usize) -> Option<usize> {
    if p == 1 {
        return Some(n);
    }
    let mut k = (n as f64).powf(1.0 / p as f64).round() as usize;
    // Guard against float drift around the true root.
    while k > 1 && k.pow(p as u32) > n {
        k -= 1;
    }
    while (k + 1).pow(p as u32) <= n {
        k += 1;
    }
    (k.pow(p as u32) == n).then_some(k)
}

/// Integer square root if `n` is a perfect square.
pub fn perfect_square_side(n: usize) -> Option<usize> {
    integer_root(n, 2).filter(|&s| s >= 2)
}

/// Builds the shared coordinate set.
///
/// Grid mode lays a `k^D` lattice over the bounds (endpoints included,
/// lexicographic order, axis 0 slowest); random mode draws i.i.d. uniform
/// rows from a seeded generator. `n` must be a perfect square in both modes
/// so the fitness vector reshapes into a square image.
pub fn make_sample_matrix(
    n: usize,
    dim: usize,
    bounds: &[(f64, f64)],
    mode: SampleMode,
    seed: u64,
) -> Result<SampleMatrix, SamplingError> {
    if dim == 0 {
        return Err(SamplingError::InvalidDimension);
    }
    if bounds.len() != dim || bounds.iter().any(|(lo, hi)| lo >= hi) {
        return Err(SamplingError::InvalidBounds);
    }
    if perfect_square_side(n).is_none() {
        return Err(SamplingError::NotPerfectSquare(n));
    }
    let mut coords = vec![0.0; n * dim];
    match mode {
        SampleMode::Grid => {
            let k = integer_root(n, dim).ok_or(SamplingError::GridShape { n, dim })?;
            if k < 2 {
                return Err(SamplingError::GridShape { n, dim });
            }
            for row in 0..n {
                let mut rem = row;
                // axis 0 slowest: decode mixed-radix digits from the end
                for axis in (0..dim).rev() {
                    let idx = rem % k;
                    rem /= k;
                    let (lo, hi) = bounds[axis];
                    coords[row * dim + axis] = lo + (hi - lo) * idx as f64 / (k - 1) as f64;
                }
            }
        }
        SampleMode::UniformRandom => {
            let mut rng = derive_rng("sample-matrix", &[n as u64, dim as u64, seed]);
            for row in 0..n {
                for axis in 0..dim {
                    let (lo, hi) = bounds[axis];
                    coords[row * dim + axis] = lo + (hi - lo) * rng.random::<f64>();
                }
            }
        }
    }
    Ok(SampleMatrix { n, dim, mode, seed, bounds: bounds.to_vec(), coords })
}

impl SampleMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// SHA-256 over the raw little-endian coordinate bytes; recorded in
    /// dataset manifests to prove all images share one coordinate set.
    pub fn content_hash(&self) -> String {
        let mut bytes = Vec::with_capacity(self.coords.len() * 8 + 16);
        bytes.extend_from_slice(&(self.n as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for v in &self.coords {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        sha256_hex(&bytes)
    }
}

/// Raw objective values of one instance over a [`SampleMatrix`], in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessVector {
    pub class_id: u32,
    pub instance_seed: u64,
    pub values: Vec<f64>,
}

/// Evaluates every sample row on `inst`, preserving row order. Rows are
/// evaluated in parallel; the output ordering matches the matrix.
pub fn fitness_vector(
    inst: &ProblemInstance,
    sm: &SampleMatrix,
) -> Result<FitnessVector, SamplingError> {
    if sm.dim != inst.dim {
        return Err(ProblemError::DimensionMismatch { expected: inst.dim, got: sm.dim }.into());
    }
    let values: Vec<f64> = (0..sm.n)
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| inst.evaluate_into(sm.row(i), scratch))
        .collect();
    Ok(FitnessVector { class_id: inst.class_id, instance_seed: inst.seed, values })
}

/// Min-max normalization to `[0, 1]`: `(v - min) / (max - min)`, with the
/// degenerate all-equal vector mapping to all zeros.
pub fn normalize(fv: &FitnessVector) -> Result<Vec<f64>, SamplingError> {
    normalize_values(&fv.values)
}

/// [`normalize`] on a bare slice.
pub fn normalize_values(values: &[f64]) -> Result<Vec<f64>, SamplingError> {
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(SamplingError::NonFinite { index, value });
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![0.0; values.len()]);
    }
    let range = max - min;
    Ok(values.iter().map(|v| (v - min) / range).collect())
}

/// An `s x s` grid of normalized fitness values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeImage {
    pub side: usize,
    /// Row-major, `side * side` pixels.
    pub pixels: Vec<f64>,
}

impl LandscapeImage {
    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }
}

/// Row-major reshape of a normalized vector into a square image. The pixel
/// multiset equals the input values exactly.
pub fn to_image(values: &[f64]) -> Result<LandscapeImage, SamplingError> {
    let side = integer_root(values.len(), 2).ok_or(SamplingError::NonSquareLength(values.len()))?;
    Ok(LandscapeImage { side, pixels: values.to_vec() })
}

/// Bilinear resize with half-pixel centers. `target_side == side` is the
/// bit-exact identity; constants are preserved exactly because the lerp is
/// written as `a + t (b - a)`.
pub fn resize_image(img: &LandscapeImage, target_side: usize) -> Result<LandscapeImage, SamplingError> {
    if img.side < 2 {
        return Err(SamplingError::SideTooSmall(img.side));
    }
    if target_side < 2 {
        return Err(SamplingError::SideTooSmall(target_side));
    }
    let s = img.side;
    let t = target_side;
    let scale = s as f64 / t as f64;
    let mut pixels = vec![0.0; t * t];
    let sample_axis = |out_idx: usize| -> (usize, usize, f64) {
        let pos = ((out_idx as f64 + 0.5) * scale - 0.5).clamp(0.0, (s - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(s - 1);
        (lo, hi, pos - lo as f64)
    };
    for r in 0..t {
        let (r0, r1, fr) = sample_axis(r);
        for c in 0..t {
            let (c0, c1, fc) = sample_axis(c);
            let lerp = |a: f64, b: f64, w: f64| a + w * (b - a);
            let top = lerp(img.pixel(r0, c0), img.pixel(r0, c1), fc);
            let bottom = lerp(img.pixel(r1, c0), img.pixel(r1, c1), fc);
            pixels[r * t + c] = lerp(top, bottom, fr).clamp(0.0, 1.0);
        }
    }
    Ok(LandscapeImage { side: t, pixels })
}

const IMAGE_MAGIC: &[u8; 4] = b"LSIM";
const IMAGE_VERSION: u16 = 1;

/// Writes the image in the `.lsim` format: magic `LSIM`, version `u16`,
/// side `u16`, then `side^2` little-endian `f32` pixels. Stored pixels are
/// the artifact of record; in-memory `f64` values are rounded once here.
pub fn write_image(img: &LandscapeImage, path: &Path) -> Result<(), SamplingError> {
    let mut buf = Vec::with_capacity(8 + img.pixels.len() * 4);
    buf.extend_from_slice(IMAGE_MAGIC);
    buf.extend_from_slice(&IMAGE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(img.side as u16).to_le_bytes());
    for &p in &img.pixels {
        buf.extend_from_slice(&(p as f32).to_le_bytes());
    }
    let io_err = |source| SamplingError::Io { path: path.display().to_string(), source };
    let tmp = path.with_extension("lsim.tmp");
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(&buf).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// Reads a `.lsim` file back into a (f32-precision) [`LandscapeImage`].
pub fn read_image(path: &Path) -> Result<LandscapeImage, SamplingError> {
    let fmt_err = |reason: String| SamplingError::ImageFormat {
        path: path.display().to_string(),
        reason,
    };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| SamplingError::Io { path: path.display().to_string(), source })?;
    if bytes.len() < 8 {
        return Err(fmt_err("truncated header".into()));
    }
    if &bytes[0..4] != IMAGE_MAGIC {
        return Err(fmt_err("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != IMAGE_VERSION {
        return Err(fmt_err(format!("unsupported version {version}")));
    }
    let side = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let expected = 8 + side * side * 4;
    if bytes.len() != expected {
        return Err(fmt_err(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut pixels = Vec::with_capacity(side * side);
    for (i, chunk) in bytes[8..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
        if !(0.0..=1.0).contains(&v) {
            return Err(SamplingError::PixelOutOfRange { index: i, value: v });
        }
        pixels.push(v);
    }
    Ok(LandscapeImage { side, pixels })
}

/// Comparison helper for the stored-artifact contract: true when every pixel
/// pair is within `ulps` f32 steps after the storage rounding.
pub fn images_match_stored(a: &LandscapeImage, b: &LandscapeImage, ulps: u32) -> bool {
    if a.side != b.side {
        return false;
    }
    a.pixels.iter().zip(&b.pixels).all(|(&x, &y)| {
        let (xb, yb) = ((x as f32).to_bits() as i64, (y as f32).to_bits() as i64);
        (xb - yb).unsigned_abs() <= ulps as u64
    })
}
