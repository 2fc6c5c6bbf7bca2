//! The split map `U : phase·F₁F̂F₂Ω ↦ phase·F₁Ω ⊗ F₂Ω ⊗ F̂Ω` as a relabeling.
//!
//! `U` is never materialized. A vector in canonical form is carried by its
//! [`TensorLabel`], and the claims about `U` are checked through exact
//! pairings: the isometry `⟨η₁, η₂⟩ = ⟨Uη₁, Uη₂⟩`, the product identity for ω,
//! and the action of operators localized in `Λ₁` or `Λ₂ᶜ`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonicalize, CanonicalError, CanonicalForm, Scaffold};
use crate::lattice::{plaquette_bonds, star_bonds, Bond, DualPath, Path, Plaquette, Region, Vertex, Window};
use crate::pauli::{plaquette_op, star_op, string_from_dual_path, string_from_path, PauliOp, Phase};
use crate::vacuum::{inner, omega, states_equal, ExcitationVector, GaussianRational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("{0} is not supported in the required region")]
    Membership(String),
    #[error("label does not belong to this scaffold: {0}")]
    ScaffoldMismatch(String),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

/// `phase · left Ω ⊗ middle Ω ⊗ right Ω`, the image of `phase·F₁F̂F₂Ω`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorLabel {
    /// `F₁`, supported in `Λ₁`.
    pub left: PauliOp,
    /// `F₂`, supported in `Λ₂ᶜ`.
    pub middle: PauliOp,
    /// `F̂ ∈ 𝔉₀`.
    pub right: PauliOp,
    pub label: BTreeSet<usize>,
    pub phase: Phase,
}

impl From<CanonicalForm> for TensorLabel {
    fn from(f: CanonicalForm) -> Self {
        TensorLabel { left: f.f1, middle: f.f2, right: f.fhat, label: f.label, phase: f.phase }
    }
}

impl TensorLabel {
    pub fn vacuum() -> Self {
        CanonicalForm::vacuum().into()
    }

    /// The operator `phase · F₁ F̂ F₂`.
    pub fn operator(&self) -> PauliOp {
        self.left.multiply(&self.right).multiply(&self.middle).scaled(self.phase)
    }

    /// The preimage `η = phase·F₁F̂F₂Ω` as an excitation vector.
    pub fn vector(&self) -> ExcitationVector {
        ExcitationVector::from_op(self.operator())
    }

    pub fn check(&self, g: &Scaffold) -> Result<(), SplitError> {
        let (r1, _, r2) = g.regions();
        if !self.left.supported_in(|b| r1.contains(b)) {
            return Err(SplitError::Membership(format!("left factor {}", self.left)));
        }
        if !self.middle.supported_in(|b| r2.contains(b)) {
            return Err(SplitError::Membership(format!("middle factor {}", self.middle)));
        }
        if self.label.iter().any(|&i| i >= g.len()) || g.group_element(&self.label) != self.right {
            return Err(SplitError::ScaffoldMismatch(format!("{}", self.right)));
        }
        Ok(())
    }
}

/// `⟨Uη₁, Uη₂⟩ = conj(p₁) p₂ ω(F₁†F₁′) ω(F₂†F₂′) ω(F̂†F̂′)`.
pub fn tensor_inner(g: &Scaffold, t1: &TensorLabel, t2: &TensorLabel) -> Result<GaussianRational, SplitError> {
    t1.check(g)?;
    t2.check(g)?;
    let factor = |a: &PauliOp, b: &PauliOp| omega(&a.adjoint().multiply(b));
    let phases = &GaussianRational::from(t1.phase.conj()) * &GaussianRational::from(t2.phase);
    Ok(&(&(&phases * &factor(&t1.left, &t2.left)) * &factor(&t1.middle, &t2.middle)) * &factor(&t1.right, &t2.right))
}

/// A random walk of at most `len` steps using only bonds of `region ∩ w`.
pub fn random_region_walk<R: Rng>(region: &Region, w: &Window, len: usize, rng: &mut R) -> Path {
    let starts: Vec<Vertex> = w
        .vertices()
        .into_iter()
        .filter(|v| star_bonds(*v).iter().any(|b| w.contains_bond(b) && region.contains(b)))
        .collect();
    let mut cur = starts[rng.random_range(0..starts.len())];
    let mut out = vec![cur];
    for _ in 0..len {
        let steps: Vec<Vertex> = star_bonds(cur)
            .iter()
            .filter(|b| w.contains_bond(b) && region.contains(b))
            .map(|b| b.other_end(cur))
            .collect();
        cur = steps[rng.random_range(0..steps.len())];
        out.push(cur);
    }
    Path::new(out).expect("walk steps are adjacent")
}

/// A random dual walk crossing only bonds of `region` between window plaquettes.
pub fn random_region_dual_walk<R: Rng>(region: &Region, w: &Window, len: usize, rng: &mut R) -> DualPath {
    let step_options = |p: Plaquette| -> Vec<Plaquette> {
        plaquette_bonds(p)
            .iter()
            .filter(|b| region.contains(b))
            .flat_map(|b| b.plaquettes())
            .filter(|q| *q != p && w.contains_plaquette(*q))
            .collect()
    };
    let starts: Vec<Plaquette> = w.plaquettes().into_iter().filter(|p| !step_options(*p).is_empty()).collect();
    let mut cur = starts[rng.random_range(0..starts.len())];
    let mut out = vec![cur];
    for _ in 0..len {
        let steps = step_options(cur);
        cur = steps[rng.random_range(0..steps.len())];
        out.push(cur);
    }
    DualPath::new(out).expect("walk steps are adjacent")
}

/// Product of up to `max_strings` random strings and dual strings in `region`.
pub fn random_region_product<R: Rng>(
    region: &Region,
    w: &Window,
    max_strings: usize,
    max_len: usize,
    rng: &mut R,
) -> PauliOp {
    let k = rng.random_range(0..=max_strings);
    let mut op = PauliOp::identity();
    for _ in 0..k {
        let len = rng.random_range(1..=max_len);
        let s = if rng.random_bool(0.5) {
            string_from_path(&random_region_walk(region, w, len, rng))
        } else {
            string_from_dual_path(&random_region_dual_walk(region, w, len, rng))
        };
        op = op.multiply(&s);
    }
    op
}

fn random_phase<R: Rng>(rng: &mut R) -> Phase {
    Phase::from(rng.random_range(0..4u8))
}

/// A random label over the scaffold: strings on both sides, a random subset of Γ.
pub fn random_tensor_label<R: Rng>(g: &Scaffold, rng: &mut R) -> TensorLabel {
    let (r1, _, r2) = g.regions();
    let label: BTreeSet<usize> = (0..g.len()).filter(|_| rng.random_bool(0.5)).collect();
    TensorLabel {
        left: random_region_product(&r1, &g.window, 3, 6, rng),
        middle: random_region_product(&r2, &g.window, 3, 6, rng),
        right: g.group_element(&label),
        label,
        phase: random_phase(rng),
    }
}

fn stabilizers_in(region: &Region, w: &Window) -> Vec<PauliOp> {
    let stars = w
        .interior_vertices()
        .into_iter()
        .filter(|v| star_bonds(*v).iter().all(|b| region.contains(b)))
        .map(star_op);
    let plaqs = w
        .plaquettes()
        .into_iter()
        .filter(|p| plaquette_bonds(*p).iter().all(|b| region.contains(b)))
        .map(plaquette_op);
    stars.chain(plaqs).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Independent,
    /// Second label differs from the first by stabilizers inside `Λ₁` and `Λ₂ᶜ`.
    StabilizerPerturbed,
    /// Second label differs from the first in one Γ string.
    GammaPerturbed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsometryViolation {
    pub kind: PairKind,
    pub first: TensorLabel,
    pub second: TensorLabel,
    pub inner: GaussianRational,
    pub tensor_inner: GaussianRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub samples: usize,
    pub nonzero_pairings: usize,
    pub violations: Vec<IsometryViolation>,
}

/// Seeded pairs of canonical-form vectors, each compared as
/// `inner(η₁, η₂) = tensor_inner(Uη₁, Uη₂)`.
pub fn verify_isometry(g: &Scaffold, samples: usize, seed: u64) -> Result<IsometryReport, SplitError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (r1, _, r2) = g.regions();
    let stab1 = stabilizers_in(&r1, &g.window);
    let stab2 = stabilizers_in(&r2, &g.window);
    let mut pairs = Vec::with_capacity(samples);
    for k in 0..samples {
        let first = random_tensor_label(g, &mut rng);
        let kind = [PairKind::Independent, PairKind::StabilizerPerturbed, PairKind::GammaPerturbed][k % 3];
        let second = match kind {
            PairKind::Independent => random_tensor_label(g, &mut rng),
            PairKind::StabilizerPerturbed => {
                let mut t = first.clone();
                for _ in 0..3 {
                    if !stab1.is_empty() {
                        t.left = t.left.multiply(&stab1[rng.random_range(0..stab1.len())]).unsigned();
                    }
                    if !stab2.is_empty() {
                        t.middle = stab2[rng.random_range(0..stab2.len())].multiply(&t.middle).unsigned();
                    }
                }
                t.phase = random_phase(&mut rng);
                t
            }
            PairKind::GammaPerturbed => {
                let mut t = first.clone();
                let i = rng.random_range(0..g.len());
                if !t.label.remove(&i) {
                    t.label.insert(i);
                }
                t.right = g.group_element(&t.label);
                t
            }
        };
        pairs.push((kind, first, second));
    }
    let checked: Vec<(bool, bool, IsometryViolation)> = pairs
        .into_par_iter()
        .map(|(kind, first, second)| {
            let lhs = inner(&first.vector(), &second.vector());
            let rhs = tensor_inner(g, &first, &second)?;
            let ok = lhs == rhs;
            let nonzero = !lhs.is_zero();
            Ok((ok, nonzero, IsometryViolation { kind, first, second, inner: lhs, tensor_inner: rhs }))
        })
        .collect::<Result<_, SplitError>>()?;
    let nonzero_pairings = checked.iter().filter(|(_, nz, _)| *nz).count();
    let violations = checked.into_iter().filter(|(ok, _, _)| !ok).map(|(_, _, v)| v).collect();
    Ok(IsometryReport { samples, nonzero_pairings, violations })
}

/// `ω(F₁F₂) = ω(F₁)ω(F₂)` for `F₁` in `Λ₁` and `F₂` in `Λ₂ᶜ`.
pub fn verify_factorization(f1: &PauliOp, f2: &PauliOp, g: &Scaffold) -> Result<bool, SplitError> {
    let (r1, _, r2) = g.regions();
    if !f1.supported_in(|b| r1.contains(b)) {
        return Err(SplitError::Membership(format!("{f1}")));
    }
    if !f2.supported_in(|b| r2.contains(b)) {
        return Err(SplitError::Membership(format!("{f2}")));
    }
    Ok(omega(&f1.multiply(f2)) == &omega(f1) * &omega(f2))
}

/// Elementary operators of a region inside `w`: the identity, single-bond X
/// and Z, every plaquette loop and every star dual loop.
pub fn elementary_family(region: &Region, w: &Window) -> Vec<PauliOp> {
    let mut out = vec![PauliOp::identity()];
    let bonds: Vec<Bond> = w.bonds().into_iter().filter(|b| region.contains(b)).collect();
    out.extend(bonds.iter().map(|b| PauliOp::z_string([*b])));
    out.extend(bonds.iter().map(|b| PauliOp::x_string([*b])));
    out.extend(stabilizers_in(region, w));
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub pairs: usize,
    pub nonzero: usize,
    pub failures: Vec<(PauliOp, PauliOp)>,
}

/// Exhaustive factorization check over all pairs of elementary operators.
pub fn exhaustive_factorization(g: &Scaffold, w: &Window) -> Result<FactorizationReport, SplitError> {
    let (r1, _, r2) = g.regions();
    let fam1 = elementary_family(&r1, w);
    let fam2 = elementary_family(&r2, w);
    let results: Vec<(bool, bool, PauliOp, PauliOp)> = fam1
        .par_iter()
        .flat_map_iter(|a| fam2.iter().map(move |b| (a, b)))
        .map(|(a, b)| {
            let ok = verify_factorization(a, b, g)?;
            Ok((ok, !omega(&a.multiply(b)).is_zero(), a.clone(), b.clone()))
        })
        .collect::<Result<_, SplitError>>()?;
    Ok(FactorizationReport {
        pairs: results.len(),
        nonzero: results.iter().filter(|r| r.1).count(),
        failures: results.into_iter().filter(|r| !r.0).map(|r| (r.2, r.3)).collect(),
    })
}

/// Certificate that `U X U*` acts on one tensor factor only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugationCertificate {
    pub image: TensorLabel,
    /// `f1′Ω = α₁·(expected left)Ω`, likewise for the middle and right factors.
    pub alphas: [Option<Phase>; 3],
    pub passed: bool,
}

fn conjugation_certificate(
    image: CanonicalForm,
    left: &PauliOp,
    middle: &PauliOp,
    right: &PauliOp,
    phase: Phase,
) -> ConjugationCertificate {
    let a1 = states_equal(&image.f1, left);
    let a2 = states_equal(&image.f2, middle);
    let a3 = states_equal(&image.fhat, right);
    let sign_only = image.fhat.unsigned() == right.unsigned() && a3.is_some_and(Phase::is_real);
    let passed = sign_only
        && match (a1, a2, a3) {
            (Some(x), Some(y), Some(z)) => image.phase * x * y * z == phase,
            _ => false,
        };
    ConjugationCertificate { image: image.into(), alphas: [a1, a2, a3], passed }
}

/// `U A U* (Uη) = A F₁Ω ⊗ F₂Ω ⊗ F̂Ω` for `A` in `Λ₁`.
pub fn conjugation_check(a: &PauliOp, t: &TensorLabel, g: &Scaffold) -> Result<ConjugationCertificate, SplitError> {
    t.check(g)?;
    let (r1, _, _) = g.regions();
    if !a.supported_in(|b| r1.contains(b)) {
        return Err(SplitError::Membership(format!("{a}")));
    }
    let image = canonicalize(&a.multiply(&t.operator()), g)?;
    Ok(conjugation_certificate(image, &a.multiply(&t.left), &t.middle, &t.right, t.phase))
}

/// `U B U* (Uη) = F₁Ω ⊗ B F₂Ω ⊗ F̂Ω` for `B` in `Λ₂ᶜ`.
pub fn mirror_conjugation_check(
    b: &PauliOp,
    t: &TensorLabel,
    g: &Scaffold,
) -> Result<ConjugationCertificate, SplitError> {
    t.check(g)?;
    let (_, _, r2) = g.regions();
    if !b.supported_in(|x| r2.contains(x)) {
        return Err(SplitError::Membership(format!("{b}")));
    }
    let image = canonicalize(&b.multiply(&t.operator()), g)?;
    Ok(conjugation_certificate(image, &t.left, &b.multiply(&t.middle), &t.right, t.phase))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub samples: usize,
    pub failures: Vec<ConjugationCertificate>,
}

/// Seeded `(A, t)` pairs; `mirror` selects operators in `Λ₂ᶜ` instead of `Λ₁`.
pub fn conjugation_suite(g: &Scaffold, samples: usize, seed: u64, mirror: bool) -> Result<ConjugationReport, SplitError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (r1, _, r2) = g.regions();
    let region = if mirror { r2 } else { r1 };
    let stabs = stabilizers_in(&region, &g.window);
    let inputs: Vec<(PauliOp, TensorLabel)> = (0..samples)
        .map(|_| {
            let mut a = random_region_product(&region, &g.window, 3, 6, &mut rng).scaled(random_phase(&mut rng));
            if !stabs.is_empty() && rng.random_bool(0.5) {
                a = a.multiply(&stabs[rng.random_range(0..stabs.len())]);
            }
            (a, random_tensor_label(g, &mut rng))
        })
        .collect();
    let certs: Vec<ConjugationCertificate> = inputs
        .par_iter()
        .map(|(a, t)| if mirror { mirror_conjugation_check(a, t, g) } else { conjugation_check(a, t, g) })
        .collect::<Result<_, SplitError>>()?;
    Ok(ConjugationReport { samples, failures: certs.into_iter().filter(|c| !c.passed).collect() })
}
