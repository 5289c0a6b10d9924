//! Symbolic fields on the flat cylinder `R × T^d`.
//!
//! A field is a finite map from torus harmonics to per-component radial
//! profiles. Coordinates are `(r, x_1, …, x_d)` with index 0 the radial one.
//! Symmetric 2-tensors store the upper triangle, row-major.
//!
//! Sign conventions, fixed once for the whole crate:
//!
//! * `δω = -Σ_a ∂_a ω_a`, `(δh)_b = -Σ_a ∂_a h_ab`
//! * `sym_grad(ω)_ab = ∂_a ω_b + ∂_b ω_a`, the Lie derivative `L_X g` for `X = ω♯`
//! * `∇*∇ = -Σ_a ∂_a²` componentwise
//! * `linearized_ricci(h) = ∇*∇h - sym_grad(δh) - ∇² tr h`, twice the first
//!   variation of the Ricci tensor, which annihilates every `L_X g`

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cross_section::{Harmonic, Mode, Polarization};
use crate::error::{Error, Result};
use crate::profile::{RadialProfile, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldRank {
    Scalar,
    OneForm,
    Sym2,
}

impl FieldRank {
    pub fn components(self, n: usize) -> usize {
        match self {
            FieldRank::Scalar => 1,
            FieldRank::OneForm => n,
            FieldRank::Sym2 => n * (n + 1) / 2,
        }
    }
}

/// Packed index of `(a, b)` in an upper-triangular `n × n` layout.
pub fn sym_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

/// Inverse of [`sym_index`].
pub fn sym_pair(n: usize, idx: usize) -> (usize, usize) {
    let mut k = idx;
    for a in 0..n {
        let row = n - a;
        if k < row {
            return (a, a + k);
        }
        k -= row;
    }
    panic!("packed index {idx} out of range for n = {n}");
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ExpansionRepr", into = "ExpansionRepr")]
pub struct ModeExpansion {
    lengths: Vec<f64>,
    rank: FieldRank,
    comps: BTreeMap<Harmonic, Vec<RadialProfile>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct ExpansionRepr {
    lengths: Vec<f64>,
    rank: FieldRank,
    entries: Vec<ExpansionEntry>,
}

#[derive(Clone, Serialize, Deserialize)]
struct ExpansionEntry {
    harmonic: Harmonic,
    components: Vec<RadialProfile>,
}

impl From<ExpansionRepr> for ModeExpansion {
    fn from(r: ExpansionRepr) -> Self {
        let mut e = ModeExpansion::zero(&r.lengths, r.rank);
        for ent in r.entries {
            for (c, p) in ent.components.iter().enumerate() {
                e.add_to(&ent.harmonic, c, p);
            }
        }
        e
    }
}

impl From<ModeExpansion> for ExpansionRepr {
    fn from(e: ModeExpansion) -> Self {
        ExpansionRepr {
            lengths: e.lengths,
            rank: e.rank,
            entries: e
                .comps
                .into_iter()
                .map(|(harmonic, components)| ExpansionEntry { harmonic, components })
                .collect(),
        }
    }
}

impl ModeExpansion {
    pub fn zero(lengths: &[f64], rank: FieldRank) -> Self {
        ModeExpansion { lengths: lengths.to_vec(), rank, comps: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    /// Number of cylinder coordinates, `d + 1`.
    pub fn n(&self) -> usize {
        self.lengths.len() + 1
    }

    pub fn rank(&self) -> FieldRank {
        self.rank
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn num_components(&self) -> usize {
        self.rank.components(self.n())
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Harmonic, &Vec<RadialProfile>)> {
        self.comps.iter()
    }

    pub fn harmonics(&self) -> impl Iterator<Item = &Harmonic> {
        self.comps.keys()
    }

    pub fn component(&self, h: &Harmonic, c: usize) -> RadialProfile {
        self.comps.get(h).map(|v| v[c].clone()).unwrap_or_default()
    }

    /// Component `(a, b)` of a symmetric 2-tensor.
    pub fn sym_component(&self, h: &Harmonic, a: usize, b: usize) -> RadialProfile {
        self.component(h, sym_index(self.n(), a, b))
    }

    pub fn add_to(&mut self, h: &Harmonic, c: usize, p: &RadialProfile) {
        if p.is_zero() {
            return;
        }
        let nc = self.num_components();
        let entry = self.comps.entry(h.clone()).or_insert_with(|| vec![RadialProfile::zero(); nc]);
        entry[c] += p;
        if entry.iter().all(|q| q.is_zero()) {
            self.comps.remove(h);
        }
    }

    pub fn add_sym(&mut self, h: &Harmonic, a: usize, b: usize, p: &RadialProfile) {
        let i = sym_index(self.n(), a, b);
        self.add_to(h, i, p);
    }

    pub fn check_rank(&self, want: FieldRank) -> Result<()> {
        if self.rank != want {
            return Err(Error::RankMismatch {
                expected: format!("{want:?}"),
                got: format!("{:?}", self.rank),
            });
        }
        Ok(())
    }

    fn check_compatible(&self, o: &ModeExpansion) -> Result<()> {
        if self.lengths != o.lengths {
            return Err(Error::InvalidInput("fields live on different tori".into()));
        }
        o.check_rank(self.rank)
    }

    /// A single harmonic with one nonzero component.
    pub fn single(lengths: &[f64], rank: FieldRank, h: Harmonic, c: usize, p: RadialProfile) -> Self {
        let mut e = Self::zero(lengths, rank);
        e.add_to(&h, c, &p);
        e
    }

    /// `profile(r) * mode(x)` lifted to the cylinder; 1-forms and tensors
    /// are purely tangential.
    pub fn from_mode(mode: &Mode, profile: &RadialProfile, lengths: &[f64]) -> Self {
        let h = mode.harmonic();
        match &mode.polarization {
            Polarization::Scalar => Self::single(lengths, FieldRank::Scalar, h, 0, profile.clone()),
            Polarization::Vector(v) => {
                let mut e = Self::zero(lengths, FieldRank::OneForm);
                for (j, c) in v.iter().enumerate() {
                    if *c != 0.0 {
                        e.add_to(&h, j + 1, &profile.scale(*c));
                    }
                }
                e
            }
            Polarization::Matrix(m) => {
                let mut e = Self::zero(lengths, FieldRank::Sym2);
                for (i, row) in m.iter().enumerate() {
                    for (j, c) in row.iter().enumerate().skip(i) {
                        if *c != 0.0 {
                            e.add_sym(&h, i + 1, j + 1, &profile.scale(*c));
                        }
                    }
                }
                e
            }
        }
    }

    pub fn map_profiles(&self, f: impl Fn(&RadialProfile) -> RadialProfile) -> Self {
        let mut out = Self::zero(&self.lengths, self.rank);
        for (h, v) in &self.comps {
            for (c, p) in v.iter().enumerate() {
                out.add_to(h, c, &f(p));
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_profiles(|p| p.scale(s))
    }

    pub fn mul_profile(&self, q: &RadialProfile) -> Self {
        self.map_profiles(|p| p.product(q))
    }

    pub fn restrict(&self, w: Window) -> Self {
        self.map_profiles(|p| p.restrict(w))
    }

    pub fn chop(&self, tol: f64) -> Self {
        let m = self.max_coeff();
        self.map_profiles(|p| {
            RadialProfile::from_terms(p.terms().iter().copied().filter(|t| t.coeff.abs() > tol * m))
        })
    }

    pub fn try_add(&self, o: &ModeExpansion) -> Result<Self> {
        self.check_compatible(o)?;
        let mut out = self.clone();
        for (h, v) in &o.comps {
            for (c, p) in v.iter().enumerate() {
                out.add_to(h, c, p);
            }
        }
        Ok(out)
    }

    /// Sum of compatible fields; panics on mismatched rank or torus.
    pub fn add(&self, o: &ModeExpansion) -> Self {
        self.try_add(o).expect("incompatible expansions")
    }

    pub fn sub(&self, o: &ModeExpansion) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn max_coeff(&self) -> f64 {
        self.comps.values().flatten().fold(0.0, |m, p| m.max(p.max_coeff()))
    }

    /// `∂_a` applied componentwise.
    pub fn partial(&self, a: usize) -> Self {
        let mut out = Self::zero(&self.lengths, self.rank);
        for (h, v) in &self.comps {
            if a == 0 {
                for (c, p) in v.iter().enumerate() {
                    out.add_to(h, c, &p.derivative());
                }
            } else {
                let (partner, f) = h.gradient(&self.lengths);
                let fj = f[a - 1];
                if fj == 0.0 {
                    continue;
                }
                for (c, p) in v.iter().enumerate() {
                    out.add_to(&partner, c, &p.scale(fj));
                }
            }
        }
        out
    }

    fn partials(&self) -> Vec<ModeExpansion> {
        (0..self.n()).map(|a| self.partial(a)).collect()
    }

    pub fn gradient(&self) -> Result<Self> {
        self.check_rank(FieldRank::Scalar)?;
        let mut out = Self::zero(&self.lengths, FieldRank::OneForm);
        for (a, da) in self.partials().iter().enumerate() {
            for (h, v) in &da.comps {
                out.add_to(h, a, &v[0]);
            }
        }
        Ok(out)
    }

    pub fn hessian(&self) -> Result<Self> {
        self.check_rank(FieldRank::Scalar)?;
        let n = self.n();
        let mut out = Self::zero(&self.lengths, FieldRank::Sym2);
        let first = self.partials();
        for a in 0..n {
            for b in a..n {
                let dab = first[a].partial(b);
                for (h, v) in &dab.comps {
                    out.add_sym(h, a, b, &v[0]);
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> Result<Self> {
        self.check_rank(FieldRank::Sym2)?;
        let n = self.n();
        let mut out = Self::zero(&self.lengths, FieldRank::Scalar);
        for (h, v) in &self.comps {
            for a in 0..n {
                out.add_to(h, 0, &v[sym_index(n, a, a)]);
            }
        }
        Ok(out)
    }

    /// Divergence with the sign convention `δ = -Σ ∂_a ι_{e_a}`.
    pub fn divergence(&self) -> Result<Self> {
        let n = self.n();
        match self.rank {
            FieldRank::Scalar => Err(Error::RankMismatch {
                expected: "OneForm or Sym2".into(),
                got: "Scalar".into(),
            }),
            FieldRank::OneForm => {
                let mut out = Self::zero(&self.lengths, FieldRank::Scalar);
                for (a, da) in self.partials().iter().enumerate() {
                    for (h, v) in &da.comps {
                        out.add_to(h, 0, &-&v[a]);
                    }
                }
                Ok(out)
            }
            FieldRank::Sym2 => {
                let mut out = Self::zero(&self.lengths, FieldRank::OneForm);
                for (a, da) in self.partials().iter().enumerate() {
                    for (h, v) in &da.comps {
                        for b in 0..n {
                            out.add_to(h, b, &-&v[sym_index(n, a, b)]);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `∂_a ω_b + ∂_b ω_a`, i.e. `L_X g` for the dual vector field.
    pub fn sym_grad(&self) -> Result<Self> {
        self.check_rank(FieldRank::OneForm)?;
        let n = self.n();
        let mut out = Self::zero(&self.lengths, FieldRank::Sym2);
        for (a, da) in self.partials().iter().enumerate() {
            for (h, v) in &da.comps {
                for b in 0..n {
                    // ∂_a ω_b lands in (a, b); on the diagonal both terms coincide.
                    if a == b {
                        out.add_sym(h, a, a, &v[a].scale(2.0));
                    } else {
                        out.add_sym(h, a, b, &v[b]);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `∇*∇ = -Σ ∂_a²`, exact per harmonic: `-P'' + μP`.
    pub fn rough_laplacian(&self) -> Self {
        let mut out = Self::zero(&self.lengths, self.rank);
        for (h, v) in &self.comps {
            let mu = h.eigenvalue(&self.lengths);
            for (c, p) in v.iter().enumerate() {
                out.add_to(h, c, &(&p.scale(mu) - &p.nth_derivative(2)));
            }
        }
        out
    }

    pub fn linearized_ricci(&self) -> Result<Self> {
        self.check_rank(FieldRank::Sym2)?;
        let a = self.rough_laplacian();
        let b = self.divergence()?.sym_grad()?;
        let c = self.trace()?.hessian()?;
        Ok(a.sub(&b).sub(&c))
    }

    /// `δ(L_X g) = (d*d + 2dd*)X` on 1-forms.
    pub fn hodge_operator(&self) -> Result<Self> {
        self.check_rank(FieldRank::OneForm)?;
        self.sym_grad()?.divergence()
    }

    /// `ι_{∂_r} h`, the 1-form `h_{0b}`.
    pub fn interior_r(&self) -> Result<Self> {
        self.check_rank(FieldRank::Sym2)?;
        let n = self.n();
        let mut out = Self::zero(&self.lengths, FieldRank::OneForm);
        for (h, v) in &self.comps {
            for b in 0..n {
                out.add_to(h, b, &v[sym_index(n, 0, b)]);
            }
        }
        Ok(out)
    }

    /// Restriction to the constant harmonic.
    pub fn zero_frequency(&self) -> Self {
        let mut out = Self::zero(&self.lengths, self.rank);
        let h0 = Harmonic::constant(self.dim());
        if let Some(v) = self.comps.get(&h0) {
            for (c, p) in v.iter().enumerate() {
                out.add_to(&h0, c, p);
            }
        }
        out
    }

    /// Everything except the constant harmonic.
    pub fn nonzero_frequency(&self) -> Self {
        self.sub(&self.zero_frequency())
    }

    /// Weight of a packed component in the pointwise Frobenius norm.
    pub fn component_weight(&self, c: usize) -> f64 {
        match self.rank {
            FieldRank::Sym2 => {
                let (a, b) = sym_pair(self.n(), c);
                if a == b {
                    1.0
                } else {
                    2.0
                }
            }
            _ => 1.0,
        }
    }

    /// Packed component values at `(r, x)`.
    pub fn eval(&self, r: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_components()];
        for (h, v) in &self.comps {
            let hv = h.value(&self.lengths, x);
            if hv == 0.0 {
                continue;
            }
            for (c, p) in v.iter().enumerate() {
                out[c] += hv * p.eval(r);
            }
        }
        out
    }

    /// `∫_N |h|²(r, ·)` by orthonormality of the harmonics.
    pub fn slice_norm_sq(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for v in self.comps.values() {
            for (c, p) in v.iter().enumerate() {
                let x = p.eval(r);
                acc += self.component_weight(c) * x * x;
            }
        }
        acc
    }

    /// Upper bound for the pointwise Frobenius norm at radius `r`.
    pub fn pointwise_bound(&self, r: f64) -> f64 {
        self.pointwise_bound_weighted(r, 0.0)
    }

    /// Pointwise bound of `e^{w r}|h|` computed without overflow.
    pub fn pointwise_bound_weighted(&self, r: f64, w: f64) -> f64 {
        let mut acc = 0.0;
        for (h, v) in &self.comps {
            let amp = h.normalization(&self.lengths);
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(c, p)| {
                    let x = p.eval_weighted(r, w);
                    self.component_weight(c) * x * x
                })
                .sum();
            acc += amp * s.sqrt();
        }
        acc
    }

    /// Sampled sup of [`pointwise_bound`](Self::pointwise_bound) on `[a, b]`.
    pub fn sup_bound(&self, a: f64, b: f64, n: usize) -> f64 {
        let n = n.max(1);
        (0..=n)
            .map(|i| self.pointwise_bound(a + (b - a) * i as f64 / n as f64))
            .fold(0.0, f64::max)
    }
}
