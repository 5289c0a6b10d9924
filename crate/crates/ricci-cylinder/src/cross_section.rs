//! Spectral data of a flat torus cross section.
//!
//! Fields on `T^d` are expanded in the real Fourier basis. A harmonic is a
//! frequency vector `k` together with a phase; `k` is kept canonical (first
//! nonzero entry positive) so every real Fourier function has exactly one
//! label. Harmonics are L²-normalized: `1/√vol` for `k = 0`, `√(2/vol)`
//! otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusCrossSection {
    pub dim: usize,
    pub side_lengths: Vec<f64>,
    pub freq_cutoff: u32,
}

impl TorusCrossSection {
    pub fn new(side_lengths: Vec<f64>, freq_cutoff: u32) -> Result<Self> {
        let cs = TorusCrossSection { dim: side_lengths.len(), side_lengths, freq_cutoff };
        cs.validate()?;
        Ok(cs)
    }

    pub fn cube(dim: usize, length: f64, freq_cutoff: u32) -> Result<Self> {
        Self::new(vec![length; dim], freq_cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.side_lengths.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "dim {} does not match {} side lengths",
                self.dim,
                self.side_lengths.len()
            )));
        }
        if let Some(l) = self.side_lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidInput(format!("side length {l} must be positive")));
        }
        if self.freq_cutoff == 0 {
            return Err(Error::InvalidInput("freq_cutoff must be >= 1".into()));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.side_lengths.iter().product()
    }

    pub fn omega(&self, k: &[i32]) -> Vec<f64> {
        omega(&self.side_lengths, k)
    }

    pub fn eigenvalue(&self, k: &[i32]) -> f64 {
        eigenvalue(&self.side_lengths, k)
    }

    /// Smallest positive eigenvalue, attained at a unit frequency vector.
    pub fn mu1(&self) -> f64 {
        self.side_lengths
            .iter()
            .map(|l| (2.0 * PI / l).powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// Canonical frequency vectors with `|k_j| <= freq_cutoff`, zero first.
    pub fn frequencies(&self) -> Vec<Vec<i32>> {
        let c = self.freq_cutoff as i32;
        let mut out = Vec::new();
        let mut k = vec![-c; self.dim];
        loop {
            if is_canonical(&k) {
                out.push(k.clone());
            }
            let mut j = 0;
            loop {
                if j == self.dim {
                    return out;
                }
                if k[j] < c {
                    k[j] += 1;
                    break;
                }
                k[j] = -c;
                j += 1;
            }
        }
    }

    /// Every real Fourier harmonic within the cutoff.
    pub fn harmonics(&self) -> Vec<Harmonic> {
        let mut out = Vec::new();
        for k in self.frequencies() {
            let zero = k.iter().all(|&x| x == 0);
            out.push(Harmonic { freq: k.clone(), phase: Phase::Cos });
            if !zero {
                out.push(Harmonic { freq: k, phase: Phase::Sin });
            }
        }
        out
    }
}

pub fn omega(lengths: &[f64], k: &[i32]) -> Vec<f64> {
    k.iter().zip(lengths).map(|(&kj, l)| 2.0 * PI * kj as f64 / l).collect()
}

pub fn eigenvalue(lengths: &[f64], k: &[i32]) -> f64 {
    omega(lengths, k).iter().map(|w| w * w).sum()
}

fn is_canonical(k: &[i32]) -> bool {
    match k.iter().find(|&&x| x != 0) {
        None => true,
        Some(&x) => x > 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

/// A normalized real Fourier function on the torus.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Harmonic {
    pub freq: Vec<i32>,
    pub phase: Phase,
}

impl Harmonic {
    pub fn constant(dim: usize) -> Self {
        Harmonic { freq: vec![0; dim], phase: Phase::Cos }
    }

    /// Canonicalizes `(k, phase)`; returns the label and the sign relating
    /// the two functions, or `None` for the identically zero `sin(0)`.
    pub fn canonical(freq: Vec<i32>, phase: Phase) -> Option<(Harmonic, f64)> {
        if freq.iter().all(|&x| x == 0) {
            return (phase == Phase::Cos).then(|| (Harmonic { freq, phase }, 1.0));
        }
        if is_canonical(&freq) {
            return Some((Harmonic { freq, phase }, 1.0));
        }
        let neg: Vec<i32> = freq.iter().map(|x| -x).collect();
        let sign = if phase == Phase::Sin { -1.0 } else { 1.0 };
        Some((Harmonic { freq: neg, phase }, sign))
    }

    pub fn dim(&self) -> usize {
        self.freq.len()
    }

    pub fn is_constant(&self) -> bool {
        self.freq.iter().all(|&x| x == 0)
    }

    pub fn eigenvalue(&self, lengths: &[f64]) -> f64 {
        eigenvalue(lengths, &self.freq)
    }

    pub fn normalization(&self, lengths: &[f64]) -> f64 {
        let vol: f64 = lengths.iter().product();
        if self.is_constant() {
            1.0 / vol.sqrt()
        } else {
            (2.0 / vol).sqrt()
        }
    }

    pub fn value(&self, lengths: &[f64], x: &[f64]) -> f64 {
        let theta: f64 = omega(lengths, &self.freq).iter().zip(x).map(|(w, xi)| w * xi).sum();
        let trig = match self.phase {
            Phase::Cos => theta.cos(),
            Phase::Sin => theta.sin(),
        };
        self.normalization(lengths) * trig
    }

    /// The partner harmonic and factors with `∂_j self = factor_j * partner`.
    pub fn gradient(&self, lengths: &[f64]) -> (Harmonic, Vec<f64>) {
        let w = omega(lengths, &self.freq);
        if self.is_constant() {
            return (self.clone(), vec![0.0; w.len()]);
        }
        match self.phase {
            Phase::Cos => (
                Harmonic { freq: self.freq.clone(), phase: Phase::Sin },
                w.iter().map(|x| -x).collect(),
            ),
            Phase::Sin => (Harmonic { freq: self.freq.clone(), phase: Phase::Cos }, w),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    Scalar,
    CoclosedOneForm,
    HarmonicOneForm,
    TTTensor,
    PureTrace,
}

impl ModeKind {
    pub fn tensor_rank(&self) -> usize {
        match self {
            ModeKind::Scalar => 0,
            ModeKind::CoclosedOneForm | ModeKind::HarmonicOneForm => 1,
            ModeKind::TTTensor | ModeKind::PureTrace => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Scalar,
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl Polarization {
    fn flat(&self) -> Vec<f64> {
        match self {
            Polarization::Scalar => vec![1.0],
            Polarization::Vector(v) => v.clone(),
            Polarization::Matrix(m) => m.iter().flatten().copied().collect(),
        }
    }
}

/// One eigen-object on the cross section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub kind: ModeKind,
    pub freq: Vec<i32>,
    pub eigenvalue: f64,
    pub polarization: Polarization,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl Mode {
    pub fn harmonic(&self) -> Harmonic {
        Harmonic { freq: self.freq.clone(), phase: self.phase }
    }

    /// Pointwise value; `x` is wrapped into the fundamental domain.
    pub fn value(&self, lengths: &[f64], x: &[f64]) -> TensorValue {
        let xw: Vec<f64> = x.iter().zip(lengths).map(|(xi, l)| xi.rem_euclid(*l)).collect();
        let f = self.harmonic().value(lengths, &xw);
        match &self.polarization {
            Polarization::Scalar => TensorValue::Scalar(f),
            Polarization::Vector(v) => TensorValue::Vector(v.iter().map(|c| c * f).collect()),
            Polarization::Matrix(m) => {
                TensorValue::Matrix(m.iter().map(|row| row.iter().map(|c| c * f).collect()).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub modes: Vec<Mode>,
    pub mu1: f64,
}

/// All modes of the requested kind with `|k_j| <= freq_cutoff`.
pub fn build_spectrum(cs: &TorusCrossSection, kind: ModeKind) -> Result<Spectrum> {
    cs.validate()?;
    let d = cs.dim;
    let mut modes = Vec::new();
    let mut push = |k: &[i32], phase: Phase, polarization: Polarization| {
        modes.push(Mode {
            kind,
            freq: k.to_vec(),
            eigenvalue: cs.eigenvalue(k),
            polarization,
            phase,
        });
    };
    for k in cs.frequencies() {
        let zero = k.iter().all(|&x| x == 0);
        let phases: &[Phase] = if zero { &[Phase::Cos] } else { &[Phase::Cos, Phase::Sin] };
        let w = cs.omega(&k);
        let pols: Vec<Polarization> = match kind {
            ModeKind::Scalar => vec![Polarization::Scalar],
            ModeKind::HarmonicOneForm if zero => {
                (0..d).map(|j| Polarization::Vector(unit(d, j))).collect()
            }
            ModeKind::HarmonicOneForm => Vec::new(),
            ModeKind::CoclosedOneForm if zero => Vec::new(),
            ModeKind::CoclosedOneForm => {
                orthogonal_complement(&w).into_iter().map(Polarization::Vector).collect()
            }
            ModeKind::TTTensor => tt_polarizations(&w).into_iter().map(Polarization::Matrix).collect(),
            ModeKind::PureTrace => {
                let s = 1.0 / (d as f64).sqrt();
                let m = (0..d).map(|i| (0..d).map(|j| if i == j { s } else { 0.0 }).collect()).collect();
                vec![Polarization::Matrix(m)]
            }
        };
        for &ph in phases {
            for p in &pols {
                push(&k, ph, p.clone());
            }
        }
    }
    modes.sort_by(|a, b| {
        a.eigenvalue
            .total_cmp(&b.eigenvalue)
            .then_with(|| a.freq.cmp(&b.freq))
            .then_with(|| {
                let (fa, fb) = (a.polarization.flat(), b.polarization.flat());
                fa.iter()
                    .zip(&fb)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| a.phase.cmp(&b.phase))
    });
    Ok(Spectrum { modes, mu1: cs.mu1() })
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[j] = 1.0;
    v
}

/// Orthonormal basis of `w^⊥` (all of `R^d` when `w = 0`), by Gram–Schmidt
/// over the standard basis.
pub fn orthogonal_complement(w: &[f64]) -> Vec<Vec<f64>> {
    let d = w.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut seed: Vec<Vec<f64>> = Vec::new();
    if wn > 0.0 {
        seed.push(w.iter().map(|x| x / wn).collect());
    }
    let skip = seed.len();
    for j in 0..d {
        let mut v = unit(d, j);
        for b in seed.iter() {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            seed.push(v);
        }
        if seed.len() == d {
            break;
        }
    }
    basis.extend(seed.into_iter().skip(skip));
    basis
}

/// Orthonormal (Frobenius) basis of symmetric traceless matrices `P` with `P w = 0`.
pub fn tt_polarizations(w: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let d = w.len();
    let e = orthogonal_complement(w);
    let m = e.len();
    let mut small: Vec<Vec<Vec<f64>>> = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let mut c = vec![vec![0.0; m]; m];
            c[a][b] = std::f64::consts::FRAC_1_SQRT_2;
            c[b][a] = std::f64::consts::FRAC_1_SQRT_2;
            small.push(c);
        }
    }
    for j in 1..m {
        let s = 1.0 / ((j * (j + 1)) as f64).sqrt();
        let mut c = vec![vec![0.0; m]; m];
        for (i, row) in c.iter_mut().enumerate().take(j) {
            row[i] = s;
        }
        c[j][j] = -(j as f64) * s;
        small.push(c);
    }
    small
        .into_iter()
        .map(|c| {
            let mut p = vec![vec![0.0; d]; d];
            for a in 0..m {
                for b in 0..m {
                    if c[a][b] == 0.0 {
                        continue;
                    }
                    for i in 0..d {
                        for j in 0..d {
                            p[i][j] += c[a][b] * e[a][i] * e[b][j];
                        }
                    }
                }
            }
            p
        })
        .collect()
}

/// Image of a mode under a pointwise cross-section operator: a harmonic
/// times a constant coefficient tensor (flattened).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageTerm {
    pub harmonic: Harmonic,
    pub coefficients: Vec<f64>,
}

impl ImageTerm {
    pub fn is_zero(&self, tol: f64) -> bool {
        self.coefficients.iter().all(|c| c.abs() <= tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseImages {
    pub laplacian_eigenvalue: f64,
    /// `δ_N` of the mode; `None` for scalars.
    pub divergence_image: Option<ImageTerm>,
    /// Trace of the mode; `None` below rank 2.
    pub trace_image: Option<ImageTerm>,
}

pub fn pointwise_operators(m: &Mode, cs: &TorusCrossSection) -> PointwiseImages {
    let (partner, grad) = m.harmonic().gradient(&cs.side_lengths);
    let divergence_image = match &m.polarization {
        Polarization::Scalar => None,
        Polarization::Vector(v) => Some(ImageTerm {
            harmonic: partner.clone(),
            coefficients: vec![-v.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>()],
        }),
        Polarization::Matrix(p) => Some(ImageTerm {
            harmonic: partner.clone(),
            coefficients: (0..cs.dim)
                .map(|i| -(0..cs.dim).map(|j| p[j][i] * grad[j]).sum::<f64>())
                .collect(),
        }),
    };
    let trace_image = match &m.polarization {
        Polarization::Matrix(p) => Some(ImageTerm {
            harmonic: m.harmonic(),
            coefficients: vec![(0..cs.dim).map(|i| p[i][i]).sum()],
        }),
        _ => None,
    };
    PointwiseImages { laplacian_eigenvalue: m.eigenvalue, divergence_image, trace_image }
}

/// L² inner product of two modes over `N` by the trapezoidal rule on an
/// `n^d` grid, exact for trigonometric polynomials of degree below `n`.
pub fn mode_inner_product(a: &Mode, b: &Mode, cs: &TorusCrossSection, n: usize) -> f64 {
    let d = cs.dim;
    let total = n.pow(d as u32);
    let cell: f64 = cs.side_lengths.iter().map(|l| l / n as f64).product();
    let mut acc = 0.0;
    let mut x = vec![0.0; d];
    for idx in 0..total {
        let mut rem = idx;
        for j in 0..d {
            x[j] = (rem % n) as f64 * cs.side_lengths[j] / n as f64;
            rem /= n;
        }
        acc += dot_values(&a.value(&cs.side_lengths, &x), &b.value(&cs.side_lengths, &x));
    }
    acc * cell
}

fn dot_values(a: &TensorValue, b: &TensorValue) -> f64 {
    match (a, b) {
        (TensorValue::Scalar(x), TensorValue::Scalar(y)) => x * y,
        (TensorValue::Vector(x), TensorValue::Vector(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
        (TensorValue::Matrix(x), TensorValue::Matrix(y)) => x
            .iter()
            .flatten()
            .zip(y.iter().flatten())
            .map(|(p, q)| p * q)
            .sum(),
        _ => 0.0,
    }
}
