//! Finite-difference discretization of the cylinder operators on
//! `[a, b] × T^d` lattices, independent of the spectral machinery.
//!
//! The radial direction samples both endpoints; tangential directions are
//! periodic with `n_x[j]` nodes per period. Sign conventions match
//! [`crate::expansion`]. Second derivatives along one axis use direct
//! stencils, mixed ones are compositions of first-derivative stencils.

use nalgebra::DMatrix;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{sym_index, sym_pair, FieldRank, ModeExpansion};

/// Largest number of scalar entries any single allocation may hold.
pub const MEMORY_LIMIT: usize = 200_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_range: (f64, f64),
    pub n_r: usize,
    pub n_x: Vec<usize>,
    pub lengths: Vec<f64>,
}

impl GridSpec {
    pub fn new(r_range: (f64, f64), n_r: usize, n_x: Vec<usize>, lengths: Vec<f64>) -> Result<Self> {
        let s = GridSpec { r_range, n_r, n_x, lengths };
        s.validate()?;
        Ok(s)
    }

    /// Same tangential count in every direction.
    pub fn uniform(r_range: (f64, f64), n_r: usize, n_x: usize, lengths: &[f64]) -> Result<Self> {
        Self::new(r_range, n_r, vec![n_x; lengths.len()], lengths.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.r_range;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!("bad radial range [{a}, {b}]")));
        }
        if self.n_x.len() != self.lengths.len() || self.lengths.is_empty() {
            return Err(Error::InvalidInput("n_x and lengths must match the torus dimension".into()));
        }
        if self.n_r < 8 || self.n_x.iter().any(|&n| n < 8) {
            return Err(Error::InvalidInput("every direction needs at least 8 samples".into()));
        }
        if self.lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidInput("side lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn n(&self) -> usize {
        self.dim() + 1
    }

    pub fn dr(&self) -> f64 {
        (self.r_range.1 - self.r_range.0) / (self.n_r - 1) as f64
    }

    pub fn dx(&self, j: usize) -> f64 {
        self.lengths[j] / self.n_x[j] as f64
    }

    /// Spacing along coordinate `axis`, 0 being `r`.
    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.dr()
        } else {
            self.dx(axis - 1)
        }
    }

    /// Largest spacing over all directions.
    pub fn grid_size(&self) -> f64 {
        (0..self.n()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn slab(&self) -> usize {
        self.n_x.iter().product()
    }

    pub fn num_points(&self) -> usize {
        self.n_r * self.slab()
    }

    pub fn r(&self, ir: usize) -> f64 {
        self.r_range.0 + ir as f64 * self.dr()
    }

    /// Tangential coordinates of the flat slab index `ix`.
    pub fn x(&self, mut ix: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                let i = ix % self.n_x[j];
                ix /= self.n_x[j];
                i as f64 * self.dx(j)
            })
            .collect()
    }

    /// Same lattice with every count doubled in resolution.
    pub fn refined(&self) -> Self {
        GridSpec {
            r_range: self.r_range,
            n_r: 2 * (self.n_r - 1) + 1,
            n_x: self.n_x.iter().map(|n| 2 * n).collect(),
            lengths: self.lengths.clone(),
        }
    }

    fn guard(&self, arrays: usize) -> Result<()> {
        let entries = self.num_points().saturating_mul(arrays);
        if entries > MEMORY_LIMIT {
            return Err(Error::MemoryGuard { entries, limit: MEMORY_LIMIT });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// One-sided stencils near `a` and `b`.
    OneSided,
    /// Nodes without a full centered stencil are set to NaN.
    InteriorRestricted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilConfig {
    pub order: u8,
    pub boundary: Boundary,
}

impl Default for StencilConfig {
    fn default() -> Self {
        StencilConfig { order: 2, boundary: Boundary::OneSided }
    }
}

impl StencilConfig {
    pub fn order4() -> Self {
        StencilConfig { order: 4, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.order != 2 && self.order != 4 {
            return Err(Error::InvalidInput(format!("stencil order must be 2 or 4, got {}", self.order)));
        }
        Ok(())
    }

    fn half_width(&self) -> usize {
        usize::from(self.order / 2)
    }
}

/// Sampled tensor field, stored component-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub spec: GridSpec,
    pub rank: FieldRank,
    /// `comps[c][ir * slab + ix]`.
    pub comps: Vec<Vec<f64>>,
}

impl GridField {
    pub fn zeros(spec: &GridSpec, rank: FieldRank) -> Result<Self> {
        spec.validate()?;
        let nc = rank.components(spec.n());
        spec.guard(nc)?;
        Ok(GridField { spec: spec.clone(), rank, comps: vec![vec![0.0; spec.num_points()]; nc] })
    }

    pub fn from_fn(spec: &GridSpec, rank: FieldRank, f: impl Fn(f64, &[f64]) -> Vec<f64> + Sync) -> Result<Self> {
        let mut out = Self::zeros(spec, rank)?;
        let slab = spec.slab();
        let pts: Vec<Vec<f64>> = (0..spec.num_points())
            .map(|p| f(spec.r(p / slab), &spec.x(p % slab)))
            .collect();
        for (p, v) in pts.into_iter().enumerate() {
            for (c, x) in v.into_iter().enumerate() {
                out.comps[c][p] = x;
            }
        }
        Ok(out)
    }

    /// The flat metric `dr² + g_N`.
    pub fn flat_metric(spec: &GridSpec) -> Result<Self> {
        let mut g = Self::zeros(spec, FieldRank::Sym2)?;
        let n = spec.n();
        for a in 0..n {
            g.comps[sym_index(n, a, a)].fill(1.0);
        }
        Ok(g)
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    fn like(&self, rank: FieldRank) -> Self {
        let nc = rank.components(self.spec.n());
        GridField { spec: self.spec.clone(), rank, comps: vec![vec![0.0; self.spec.num_points()]; nc] }
    }

    fn check_rank(&self, want: FieldRank) -> Result<()> {
        if self.rank != want {
            return Err(Error::RankMismatch { expected: format!("{want:?}"), got: format!("{:?}", self.rank) });
        }
        Ok(())
    }

    fn check_same(&self, o: &GridField) -> Result<()> {
        if self.spec != o.spec || self.rank != o.rank {
            return Err(Error::InvalidInput("fields live on different grids or ranks".into()));
        }
        Ok(())
    }

    pub fn add_scaled(&self, o: &GridField, s: f64) -> Result<Self> {
        self.check_same(o)?;
        let mut out = self.clone();
        for (u, v) in out.comps.iter_mut().zip(&o.comps) {
            for (x, y) in u.iter_mut().zip(v) {
                *x += s * y;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, o: &GridField) -> Result<Self> {
        self.add_scaled(o, -1.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.comps.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    fn weight(&self, c: usize) -> f64 {
        match self.rank {
            FieldRank::Sym2 => {
                let (a, b) = sym_pair(self.spec.n(), c);
                if a == b {
                    1.0
                } else {
                    2.0
                }
            }
            _ => 1.0,
        }
    }

    /// Pointwise Frobenius norm at flat index `p`.
    pub fn norm_at(&self, p: usize) -> f64 {
        (0..self.num_components())
            .map(|c| self.weight(c) * self.comps[c][p] * self.comps[c][p])
            .sum::<f64>()
            .sqrt()
    }

    /// Sup of the pointwise norm over radial nodes `band..n_r - band`.
    pub fn sup_band(&self, band: usize) -> f64 {
        let slab = self.spec.slab();
        let lo = band.min(self.spec.n_r / 2);
        let hi = self.spec.n_r.saturating_sub(band).max(lo + 1);
        (lo * slab..hi * slab).map(|p| self.norm_at(p)).fold(0.0, f64::max)
    }

    /// Sup over the interior band `[a + 5Δr, b - 5Δr]`.
    pub fn interior_sup(&self) -> f64 {
        self.sup_band(5)
    }

    pub fn sup(&self) -> f64 {
        self.sup_band(0)
    }

    /// `∫∫ ⟨self, o⟩` by the trapezoidal rule in `r` and the periodic rule in `x`.
    pub fn inner(&self, o: &GridField) -> Result<f64> {
        self.check_same(o)?;
        let s = &self.spec;
        let slab = s.slab();
        let cell: f64 = (0..s.dim()).map(|j| s.dx(j)).product::<f64>() * s.dr();
        let mut acc = 0.0;
        for c in 0..self.num_components() {
            let w = self.weight(c);
            for ir in 0..s.n_r {
                let end = if ir == 0 || ir == s.n_r - 1 { 0.5 } else { 1.0 };
                let row: f64 = (0..slab).map(|ix| self.comps[c][ir * slab + ix] * o.comps[c][ir * slab + ix]).sum();
                acc += w * end * row;
            }
        }
        Ok(acc * cell)
    }
}

/// Pointwise evaluation of an expansion on the lattice.
pub fn sample(h: &ModeExpansion, spec: &GridSpec) -> Result<GridField> {
    if h.lengths() != spec.lengths.as_slice() {
        return Err(Error::InvalidInput("expansion and grid have different side lengths".into()));
    }
    let mut out = GridField::zeros(spec, h.rank())?;
    let slab = spec.slab();
    let xs: Vec<Vec<f64>> = (0..slab).map(|ix| spec.x(ix)).collect();
    for (harm, profiles) in h.entries() {
        let hv: Vec<f64> = xs.iter().map(|x| harm.value(&spec.lengths, x)).collect();
        for (c, p) in profiles.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let pv: Vec<f64> = (0..spec.n_r).map(|ir| p.eval(spec.r(ir))).collect();
            let dst = &mut out.comps[c];
            for (ir, &pr) in pv.iter().enumerate() {
                for (ix, &x) in hv.iter().enumerate() {
                    dst[ir * slab + ix] += pr * x;
                }
            }
        }
    }
    Ok(out)
}

const C1_O2: [f64; 3] = [-0.5, 0.0, 0.5];
const C1_O4: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const C2_O2: [f64; 3] = [1.0, -2.0, 1.0];
const C2_O4: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

// one-sided stencils at the first nodes; row i holds node i of the boundary
const B1_O2: [&[f64]; 1] = [&[-1.5, 2.0, -0.5]];
const B1_O4: [&[f64]; 2] = [
    &[-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
    &[-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0],
];
const B2_O2: [&[f64]; 1] = [&[2.0, -5.0, 4.0, -1.0]];
const B2_O4: [&[f64]; 2] = [
    &[15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0],
    &[5.0 / 6.0, -1.25, -1.0 / 3.0, 7.0 / 6.0, -0.5, 1.0 / 12.0],
];

fn stencils(order: u8, deriv: u8) -> (&'static [f64], &'static [&'static [f64]]) {
    match (order, deriv) {
        (2, 1) => (&C1_O2, &B1_O2),
        (4, 1) => (&C1_O4, &B1_O4),
        (2, _) => (&C2_O2, &B2_O2),
        _ => (&C2_O4, &B2_O4),
    }
}

/// `∂_axis^deriv` of one scalar array, `deriv ∈ {1, 2}`.
fn diff(data: &[f64], spec: &GridSpec, axis: usize, deriv: u8, cfg: &StencilConfig) -> Vec<f64> {
    let (centered, bnd) = stencils(cfg.order, deriv);
    let hw = cfg.half_width();
    let h = spec.spacing(axis).powi(i32::from(deriv));
    let slab = spec.slab();
    let n_r = spec.n_r;
    let mut out = vec![0.0; data.len()];
    let odd = deriv % 2 == 1;
    let row = |ir: usize, dst: &mut [f64]| {
        if axis == 0 {
            let (coef, base, sign): (&[f64], isize, f64) = if ir >= hw && ir + hw < n_r {
                (centered, ir as isize - hw as isize, 1.0)
            } else if cfg.boundary == Boundary::InteriorRestricted {
                dst.fill(f64::NAN);
                return;
            } else if ir < hw {
                (bnd[ir], 0, 1.0)
            } else {
                // mirrored stencil at the far end
                let k = n_r - 1 - ir;
                (bnd[k], n_r as isize - 1, if odd { -1.0 } else { 1.0 })
            };
            let mirrored = ir >= hw && ir + hw >= n_r;
            for (ix, d) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, w) in coef.iter().enumerate() {
                    let j = if mirrored { base - k as isize } else { base + k as isize } as usize;
                    acc += w * data[j * slab + ix];
                }
                *d = sign * acc / h;
            }
        } else {
            let j = axis - 1;
            let stride: usize = spec.n_x[..j].iter().product();
            let m = spec.n_x[j];
            for (ix, d) in dst.iter_mut().enumerate() {
                let i = (ix / stride) % m;
                let rest = ix - i * stride;
                let mut acc = 0.0;
                for (k, w) in centered.iter().enumerate() {
                    let ii = (i + m + k - hw) % m;
                    acc += w * data[ir * slab + rest + ii * stride];
                }
                *d = acc / h;
            }
        }
    };
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(slab).enumerate().for_each(|(ir, dst)| row(ir, dst));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(slab).enumerate().for_each(|(ir, dst)| row(ir, dst));
    out
}

fn d1(data: &[f64], spec: &GridSpec, a: usize, cfg: &StencilConfig) -> Vec<f64> {
    diff(data, spec, a, 1, cfg)
}

/// `∂_a ∂_b`, direct on the diagonal.
fn d2(data: &[f64], spec: &GridSpec, a: usize, b: usize, cfg: &StencilConfig) -> Vec<f64> {
    if a == b {
        diff(data, spec, a, 2, cfg)
    } else {
        d1(&d1(data, spec, a, cfg), spec, b, cfg)
    }
}

fn axpy(dst: &mut [f64], s: f64, x: &[f64]) {
    for (d, v) in dst.iter_mut().zip(x) {
        *d += s * v;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FdOp {
    Divergence,
    SymGrad,
    RoughLaplacian,
    TraceHessian,
    LinearizedRicci,
    Lichnerowicz,
    /// `δ sym_grad` on 1-forms, i.e. `(d*d + 2dd*)`.
    Hodge,
}

pub fn fd_operator(op: FdOp, f: &GridField, cfg: &StencilConfig) -> Result<GridField> {
    cfg.validate()?;
    match op {
        FdOp::Divergence => divergence(f, cfg),
        FdOp::SymGrad => sym_grad(f, cfg),
        FdOp::RoughLaplacian => Ok(rough_laplacian(f, cfg)),
        FdOp::TraceHessian => {
            let s = match f.rank {
                FieldRank::Sym2 => trace(f)?,
                FieldRank::Scalar => f.clone(),
                FieldRank::OneForm => {
                    return Err(Error::RankMismatch { expected: "Scalar or Sym2".into(), got: "OneForm".into() })
                }
            };
            hessian(&s, cfg)
        }
        FdOp::LinearizedRicci => {
            f.check_rank(FieldRank::Sym2)?;
            let lap = rough_laplacian(f, cfg);
            let b = sym_grad(&divergence(f, cfg)?, cfg)?;
            let c = hessian(&trace(f)?, cfg)?;
            lap.sub(&b)?.sub(&c)
        }
        FdOp::Lichnerowicz => lichnerowicz(f, &GridField::flat_metric(&f.spec)?, cfg),
        FdOp::Hodge => hodge(f, cfg),
    }
}

pub fn trace(f: &GridField) -> Result<GridField> {
    f.check_rank(FieldRank::Sym2)?;
    let n = f.spec.n();
    let mut out = f.like(FieldRank::Scalar);
    for a in 0..n {
        let src = &f.comps[sym_index(n, a, a)];
        axpy(&mut out.comps[0], 1.0, src);
    }
    Ok(out)
}

fn divergence(f: &GridField, cfg: &StencilConfig) -> Result<GridField> {
    let n = f.spec.n();
    match f.rank {
        FieldRank::Scalar => Err(Error::RankMismatch { expected: "OneForm or Sym2".into(), got: "Scalar".into() }),
        FieldRank::OneForm => {
            let mut out = f.like(FieldRank::Scalar);
            for a in 0..n {
                axpy(&mut out.comps[0], -1.0, &d1(&f.comps[a], &f.spec, a, cfg));
            }
            Ok(out)
        }
        FieldRank::Sym2 => {
            let mut out = f.like(FieldRank::OneForm);
            for a in 0..n {
                for b in 0..n {
                    let d = d1(&f.comps[sym_index(n, a, b)], &f.spec, a, cfg);
                    axpy(&mut out.comps[b], -1.0, &d);
                }
            }
            Ok(out)
        }
    }
}

fn sym_grad(f: &GridField, cfg: &StencilConfig) -> Result<GridField> {
    f.check_rank(FieldRank::OneForm)?;
    let n = f.spec.n();
    let mut out = f.like(FieldRank::Sym2);
    for a in 0..n {
        for b in 0..n {
            // (a, b) and (b, a) share a packed slot, so the diagonal is hit once
            let d = d1(&f.comps[b], &f.spec, a, cfg);
            let w = if a == b { 2.0 } else { 1.0 };
            axpy(&mut out.comps[sym_index(n, a, b)], w, &d);
        }
    }
    Ok(out)
}

/// `-Σ_a ∂_a² X_b - ∂_b Σ_a ∂_a X_a`, the expanded form of `δ sym_grad X`.
fn hodge(f: &GridField, cfg: &StencilConfig) -> Result<GridField> {
    f.check_rank(FieldRank::OneForm)?;
    let n = f.spec.n();
    let mut out = rough_laplacian(f, cfg);
    for b in 0..n {
        for a in 0..n {
            let d = d2(&f.comps[a], &f.spec, b, a, cfg);
            axpy(&mut out.comps[b], -1.0, &d);
        }
    }
    Ok(out)
}

fn rough_laplacian(f: &GridField, cfg: &StencilConfig) -> GridField {
    let mut out = f.like(f.rank);
    for (c, src) in f.comps.iter().enumerate() {
        for a in 0..f.spec.n() {
            axpy(&mut out.comps[c], -1.0, &d2(src, &f.spec, a, a, cfg));
        }
    }
    out
}

fn hessian(s: &GridField, cfg: &StencilConfig) -> Result<GridField> {
    s.check_rank(FieldRank::Scalar)?;
    let n = s.spec.n();
    let mut out = s.like(FieldRank::Sym2);
    for a in 0..n {
        for b in a..n {
            out.comps[sym_index(n, a, b)] = d2(&s.comps[0], &s.spec, a, b, cfg);
        }
    }
    Ok(out)
}

/// Pointwise inverse of a metric field, with positive definiteness checked.
fn inverse_metric(g: &GridField) -> Result<GridField> {
    let n = g.spec.n();
    let mut inv = g.like(FieldRank::Sym2);
    for p in 0..g.spec.num_points() {
        let m = DMatrix::from_fn(n, n, |a, b| g.comps[sym_index(n, a, b)][p]);
        let ch = m.cholesky().ok_or(Error::NonPositiveDefinite { node: p })?;
        let mi = ch.inverse();
        for a in 0..n {
            for b in a..n {
                inv.comps[sym_index(n, a, b)][p] = mi[(a, b)];
            }
        }
    }
    Ok(inv)
}

/// Christoffel symbols `Γ^k_ij`, indexed `[k][sym_index(i, j)]`.
fn christoffel(g: &GridField, ginv: &GridField, cfg: &StencilConfig) -> Vec<Vec<Vec<f64>>> {
    let n = g.spec.n();
    let s = &g.spec;
    let np = s.num_points();
    let m = n * (n + 1) / 2;
    // dg[l][ij] = ∂_l g_ij
    let dg: Vec<Vec<Vec<f64>>> = (0..n).map(|l| (0..m).map(|c| d1(&g.comps[c], s, l, cfg)).collect()).collect();
    let mut gamma = vec![vec![vec![0.0; np]; m]; n];
    for i in 0..n {
        for j in i..n {
            let ij = sym_index(n, i, j);
            for l in 0..n {
                // first kind Γ_{l,ij}
                let a = &dg[i][sym_index(n, j, l)];
                let b = &dg[j][sym_index(n, i, l)];
                let c = &dg[l][ij];
                for k in 0..n {
                    let gi = &ginv.comps[sym_index(n, k, l)];
                    let dst = &mut gamma[k][ij];
                    for p in 0..np {
                        dst[p] += 0.5 * gi[p] * (a[p] + b[p] - c[p]);
                    }
                }
            }
        }
    }
    gamma
}

/// Full Ricci tensor of a metric sampled on the lattice.
pub fn nonlinear_ricci(g: &GridField, cfg: &StencilConfig) -> Result<GridField> {
    cfg.validate()?;
    g.check_rank(FieldRank::Sym2)?;
    let n = g.spec.n();
    let m = n * (n + 1) / 2;
    g.spec.guard(3 * n * m + 2 * m + n)?;
    let s = &g.spec;
    let np = s.num_points();
    let ginv = inverse_metric(g)?;
    let gamma = christoffel(g, &ginv, cfg);
    let mut out = g.like(FieldRank::Sym2);
    // V_i = Γ^k_ik
    let v: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut acc = vec![0.0; np];
            for k in 0..n {
                axpy(&mut acc, 1.0, &gamma[k][sym_index(n, i, k)]);
            }
            acc
        })
        .collect();
    for i in 0..n {
        for j in i..n {
            let ij = sym_index(n, i, j);
            let dst = &mut out.comps[ij];
            for k in 0..n {
                axpy(dst, 1.0, &d1(&gamma[k][ij], s, k, cfg));
            }
            axpy(dst, -1.0, &d1(&v[i], s, j, cfg));
            for p in 0..np {
                let mut q = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        q += gamma[k][sym_index(n, k, l)][p] * gamma[l][ij][p]
                            - gamma[k][sym_index(n, j, l)][p] * gamma[l][sym_index(n, i, k)][p];
                    }
                }
                dst[p] += q;
            }
        }
    }
    Ok(out)
}

/// Lowered Riemann tensor `R_abcd = g_ae R^e_bcd` with
/// `R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb`,
/// so that `Ric_bd = R^a_bad`. Indexed `a + n(b + n(c + n d))`.
pub fn riemann(g: &GridField, cfg: &StencilConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    g.check_rank(FieldRank::Sym2)?;
    let n = g.spec.n();
    let m = n * (n + 1) / 2;
    g.spec.guard(2 * n * n * m + n.pow(4) + 2 * m)?;
    let s = &g.spec;
    let np = s.num_points();
    let ginv = inverse_metric(g)?;
    let gamma = christoffel(g, &ginv, cfg);
    // dgam[c][a][db] = ∂_c Γ^a_db
    let dgam: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
        .map(|c| (0..n).map(|a| (0..m).map(|db| d1(&gamma[a][db], s, c, cfg)).collect()).collect())
        .collect();
    let mut up = vec![vec![0.0; np]; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let dst = &mut up[a + n * (b + n * (c + n * d))];
                    let x = &dgam[c][a][sym_index(n, d, b)];
                    let y = &dgam[d][a][sym_index(n, c, b)];
                    for p in 0..np {
                        let mut q = x[p] - y[p];
                        for e in 0..n {
                            q += gamma[a][sym_index(n, c, e)][p] * gamma[e][sym_index(n, d, b)][p]
                                - gamma[a][sym_index(n, d, e)][p] * gamma[e][sym_index(n, c, b)][p];
                        }
                        dst[p] = q;
                    }
                }
            }
        }
    }
    let mut low = vec![vec![0.0; np]; n.pow(4)];
    for a in 0..n {
        for e in 0..n {
            let ge = &g.comps[sym_index(n, a, e)];
            for rest in 0..n.pow(3) {
                let src = &up[e + n * rest];
                let dst = &mut low[a + n * rest];
                for p in 0..np {
                    dst[p] += ge[p] * src[p];
                }
            }
        }
    }
    Ok(low)
}

/// `Δ_L h = ∇*∇h + Ric∘h + h∘Ric - 2 R̊h`, `(R̊h)_ij = R_ikjl h^kl`, with the
/// curvature terms computed by finite differences of `background`. The rough
/// Laplacian uses flat coordinates, so `background` must be a constant metric.
pub fn lichnerowicz(h: &GridField, background: &GridField, cfg: &StencilConfig) -> Result<GridField> {
    h.check_rank(FieldRank::Sym2)?;
    h.check_same(background)?;
    let n = h.spec.n();
    let np = h.spec.num_points();
    let rm = riemann(background, cfg)?;
    let ginv = inverse_metric(background)?;
    let idx = |a: usize, b: usize, c: usize, d: usize| a + n * (b + n * (c + n * d));
    let comp = |f: &GridField, a: usize, b: usize, p: usize| f.comps[sym_index(n, a, b)][p];
    let mut out = rough_laplacian(h, cfg);
    for i in 0..n {
        for j in i..n {
            let dst = &mut out.comps[sym_index(n, i, j)];
            for p in 0..np {
                // h^kl and Ric_i^k from the background
                let mut q = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        let mut hup = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                hup += comp(&ginv, k, a, p) * comp(&ginv, l, b, p) * comp(h, a, b, p);
                            }
                        }
                        q -= 2.0 * rm[idx(i, k, j, l)][p] * hup;
                    }
                }
                for k in 0..n {
                    let mut ric_ik = 0.0;
                    let mut ric_jk = 0.0;
                    for a in 0..n {
                        for c in 0..n {
                            // Ric_bd = g^{ac} R_cbad
                            ric_ik += comp(&ginv, a, c, p) * rm[idx(c, i, a, k)][p];
                            ric_jk += comp(&ginv, a, c, p) * rm[idx(c, j, a, k)][p];
                        }
                    }
                    for l in 0..n {
                        q += ric_ik * comp(&ginv, k, l, p) * comp(h, l, j, p)
                            + ric_jk * comp(&ginv, k, l, p) * comp(h, i, l, p);
                    }
                }
                dst[p] += q;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderScan {
    pub epsilons: Vec<f64>,
    /// Interior sup of `Ric(ḡ + εh) - ε L(h)` per `ε`.
    pub remainders: Vec<f64>,
    pub slope: f64,
    /// `ε_min` times the interior sup of the discretization error in the
    /// linear term, when an exact linear term was supplied.
    pub fd_error: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Remainder of the linearization about the flat metric along `h`.
///
/// `L(h)` is the first variation of Ricci, half of
/// [`FdOp::LinearizedRicci`]. Pass `exact_linear` to use a sampled exact
/// first variation instead of the finite-difference one; the scan then also
/// reports the discretization error of the nonlinear operator's linear part.
pub fn quadratic_remainder_scan(
    h: &GridField,
    epsilons: &[f64],
    exact_linear: Option<&GridField>,
    cfg: &StencilConfig,
) -> Result<RemainderScan> {
    h.check_rank(FieldRank::Sym2)?;
    if epsilons.is_empty() || epsilons.windows(2).any(|w| !(w[0] > w[1])) || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput("epsilons must be positive and strictly decreasing".into()));
    }
    let g0 = GridField::flat_metric(&h.spec)?;
    let lin = match exact_linear {
        Some(l) => {
            l.check_same(h)?;
            l.clone()
        }
        None => fd_operator(FdOp::LinearizedRicci, h, cfg)?.scale(0.5),
    };
    let mut remainders = Vec::with_capacity(epsilons.len());
    for &e in epsilons {
        let ric = nonlinear_ricci(&g0.add_scaled(h, e)?, cfg)?;
        remainders.push(ric.add_scaled(&lin, -e)?.interior_sup());
    }
    let fd_error = match exact_linear {
        Some(l) => {
            let eta = 1e-5;
            let plus = nonlinear_ricci(&g0.add_scaled(h, eta)?, cfg)?;
            let minus = nonlinear_ricci(&g0.add_scaled(h, -eta)?, cfg)?;
            let fd_lin = plus.sub(&minus)?.scale(0.5 / eta);
            Some(epsilons[epsilons.len() - 1] * fd_lin.sub(l)?.interior_sup())
        }
        None => None,
    };
    let slope = if remainders.iter().all(|r| *r > 0.0) && epsilons.len() > 1 {
        log_log_slope(epsilons, &remainders)
    } else {
        f64::NAN
    };
    Ok(RemainderScan { epsilons: epsilons.to_vec(), remainders, slope, fd_error })
}
