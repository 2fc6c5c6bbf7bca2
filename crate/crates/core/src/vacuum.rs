//! The ground-state functional ω and exact inner products of excitation vectors.
//!
//! ω is the unique state with `ω(A_s) = ω(B_p) = 1` for every star and
//! plaquette. Each stabilizer then fixes Ω, so for a Pauli operator
//! `P = i^λ X(a) Z(b)`:
//!
//! * if some star anticommutes with `P` (b has an odd vertex), then
//!   `ω(P) = ω(P A_s) = -ω(A_s P) = -ω(P)`, hence `ω(P) = 0`; likewise for a
//!   plaquette when `a` is not a dual cycle;
//! * otherwise `X(a)` is a product of stars and `Z(b)` a product of
//!   plaquettes (the fillings are unique on the plane and carry no phase), so
//!   `ω(P) = i^λ`.
//!
//! Vectors `Σ c_k P_k Ω` are never embedded anywhere; all comparisons go
//! through `⟨PΩ, QΩ⟩ = ω(P† Q)`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num::{BigInt, BigRational, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::lattice::Window;
use crate::oracle;
use crate::pauli::{is_cycle, is_dual_cycle, plaquette_op, star_op, PauliOp, Phase};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VacuumError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("window has {0} bonds; at most {1} are supported")]
    WindowTooLarge(usize, usize),
}

/// `re + i·im` with exact rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        GaussianRational { re: rational(re), im: rational(im) }
    }

    pub fn zero() -> Self {
        Self::from_ints(0, 0)
    }

    pub fn one() -> Self {
        Self::from_ints(1, 0)
    }

    pub fn i() -> Self {
        Self::from_ints(0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        Some(GaussianRational { re: &self.re / &n, im: -&self.im / &n })
    }

    /// The phase this number equals, if it is one of `±1, ±i`.
    pub fn as_phase(&self) -> Option<Phase> {
        [Phase::ONE, Phase::I, Phase::MINUS_ONE, Phase::MINUS_I]
            .into_iter()
            .find(|p| *self == GaussianRational::from(*p))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        use num::ToPrimitive;
        (self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

impl From<Phase> for GaussianRational {
    fn from(p: Phase) -> Self {
        let (re, im) = p.to_complex();
        GaussianRational::from_ints(re, im)
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Add for GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: GaussianRational) -> GaussianRational {
        &self + &o
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, o: &GaussianRational) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Sub for GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: GaussianRational) -> GaussianRational {
        &self - &o
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Mul for GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: GaussianRational) -> GaussianRational {
        &self * &o
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re, im: -self.im }
    }
}

fn fmt_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|e| e.to_string())?;
            let q = BigInt::from_str(q.trim()).map_err(|e| e.to_string())?;
            if q.is_zero() {
                return Err("zero denominator".into());
            }
            Ok(BigRational::new(p, q))
        }
        None => BigInt::from_str(s).map(BigRational::from_integer).map_err(|e| e.to_string()),
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            _ if self.im.is_negative() => write!(f, "{}-{}i", self.re, -self.im.clone()),
            _ => write!(f, "{}+{}i", self.re, self.im),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianRepr {
    re: String,
    im: String,
}

impl Serialize for GaussianRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GaussianRepr { re: fmt_rational(&self.re), im: fmt_rational(&self.im) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = GaussianRepr::deserialize(d)?;
        let re = parse_rational(&r.re).map_err(serde::de::Error::custom)?;
        let im = parse_rational(&r.im).map_err(serde::de::Error::custom)?;
        Ok(GaussianRational { re, im })
    }
}

/// `ω(P)` as a phase, or `None` when it vanishes.
pub fn omega_phase(p: &PauliOp) -> Option<Phase> {
    (is_dual_cycle(&p.x) && is_cycle(&p.z)).then_some(p.lambda)
}

pub fn omega(p: &PauliOp) -> GaussianRational {
    omega_phase(p).map_or_else(GaussianRational::zero, GaussianRational::from)
}

/// `Σ c_k P_k Ω`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcitationVector {
    pub terms: Vec<(GaussianRational, PauliOp)>,
}

impl ExcitationVector {
    pub fn zero() -> Self {
        ExcitationVector::default()
    }

    pub fn vacuum() -> Self {
        Self::from_op(PauliOp::identity())
    }

    pub fn from_op(p: PauliOp) -> Self {
        ExcitationVector { terms: vec![(GaussianRational::one(), p)] }
    }

    pub fn term(c: GaussianRational, p: PauliOp) -> Self {
        ExcitationVector { terms: vec![(c, p)] }
    }

    pub fn push(&mut self, c: GaussianRational, p: PauliOp) {
        self.terms.push((c, p));
    }

    pub fn scaled(&self, c: &GaussianRational) -> Self {
        ExcitationVector { terms: self.terms.iter().map(|(d, p)| (c * d, p.clone())).collect() }
    }

    pub fn plus(&self, other: &ExcitationVector) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        ExcitationVector { terms }
    }

    pub fn minus(&self, other: &ExcitationVector) -> Self {
        self.plus(&other.scaled(&GaussianRational::from_ints(-1, 0)))
    }

    /// `A · Σ c_k P_k Ω = Σ c_k (A P_k) Ω`.
    pub fn left_multiplied(&self, a: &PauliOp) -> Self {
        ExcitationVector { terms: self.terms.iter().map(|(c, p)| (c.clone(), a.multiply(p))).collect() }
    }
}

/// `⟨u, v⟩`, antilinear in `u`.
pub fn inner(u: &ExcitationVector, v: &ExcitationVector) -> GaussianRational {
    let mut acc = GaussianRational::zero();
    for (c, p) in &u.terms {
        let pd = p.adjoint();
        for (d, q) in &v.terms {
            if let Some(ph) = omega_phase(&pd.multiply(q)) {
                acc += &(&(&c.conj() * d) * &GaussianRational::from(ph));
            }
        }
    }
    acc
}

pub fn norm_sqr(u: &ExcitationVector) -> BigRational {
    inner(u, u).re
}

/// Equality in the GNS space: `‖u - v‖² = 0`.
pub fn vectors_equal(u: &ExcitationVector, v: &ExcitationVector) -> bool {
    norm_sqr(&u.minus(v)).is_zero()
}

/// `Some(c)` iff `PΩ = c·QΩ`.
///
/// Both vectors have unit norm, so `c = ⟨QΩ, PΩ⟩ = ω(Q† P)` whenever this
/// has modulus one, and the vectors are orthogonal otherwise.
pub fn states_equal(p: &PauliOp, q: &PauliOp) -> Option<Phase> {
    omega_phase(&q.adjoint().multiply(p))
}

/// Stabilizer absorption: `ω(XY) = ω(YX) = ω(Y)` for `X` a
/// self-adjoint Pauli operator with `ω(X) = 1`.
pub fn absorption_check(x: &PauliOp, y: &PauliOp) -> Result<bool, VacuumError> {
    if omega_phase(x) != Some(Phase::ONE) {
        return Err(VacuumError::Precondition(format!("ω(X) ≠ 1 for X = {x}")));
    }
    if !x.is_self_adjoint() || x.multiply(x) != PauliOp::identity() {
        return Err(VacuumError::Precondition(format!("X = {x} is not a self-adjoint involution")));
    }
    let w = omega(y);
    Ok(omega(&x.multiply(y)) == w && omega(&y.multiply(x)) == w)
}

/// Gram matrix of `{P_k Ω}` with its exact rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GramSummary {
    pub matrix: Vec<Vec<GaussianRational>>,
    pub rank: usize,
    pub basis_indices: Vec<usize>,
}

pub fn gram(ops: &[PauliOp]) -> GramSummary {
    let adj: Vec<PauliOp> = ops.iter().map(PauliOp::adjoint).collect();
    let matrix: Vec<Vec<GaussianRational>> = adj
        .par_iter()
        .map(|pd| ops.iter().map(|q| omega(&pd.multiply(q))).collect())
        .collect();
    let basis_indices = pivot_columns(&matrix);
    GramSummary { rank: basis_indices.len(), basis_indices, matrix }
}

/// Pivot columns of a matrix by fraction-free (Bareiss) elimination.
///
/// For a Gram matrix the pivot columns index a maximal linearly independent
/// subfamily of the underlying vectors.
pub fn pivot_columns(m: &[Vec<GaussianRational>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut a: Vec<Vec<GaussianRational>> = m.to_vec();
    let mut prev = GaussianRational::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pr);
        let prev_inv = prev.inv().expect("pivots are non-zero");
        let (head, tail) = a.split_at_mut(r + 1);
        let pivot_row = &head[r];
        let pivot = pivot_row[c].clone();
        tail.par_iter_mut().for_each(|row| {
            let factor = row[c].clone();
            for j in c..cols {
                let v = if factor.is_zero() {
                    &pivot * &row[j]
                } else {
                    &(&pivot * &row[j]) - &(&factor * &pivot_row[j])
                };
                row[j] = &v * &prev_inv;
            }
        });
        prev = pivot;
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Exact positive-semidefiniteness of a Hermitian matrix by symmetric
/// elimination: every pivot must be a non-negative real, and a zero pivot
/// must have a zero row.
pub fn is_positive_semidefinite(m: &[Vec<GaussianRational>]) -> bool {
    let n = m.len();
    let mut a = m.to_vec();
    for k in 0..n {
        let pivot = a[k][k].clone();
        if !pivot.is_real() || pivot.re.is_negative() {
            return false;
        }
        if pivot.is_zero() {
            if a[k].iter().any(|v| !v.is_zero()) {
                return false;
            }
            continue;
        }
        let inv = pivot.inv().expect("non-zero pivot");
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] * &inv;
            for j in k..n {
                let d = &f * &a[k][j];
                a[i][j] = &a[i][j] - &d;
            }
        }
    }
    true
}

/// Single-site generators acting strictly inside `w`: X on bonds between two
/// window plaquettes, Z on bonds between two interior vertices, every window
/// plaquette and every interior star.
///
/// Every product of these has all its charges and fluxes at interior
/// vertices and window plaquettes, where the finite-window ground state
/// obeys the same stabilizer conditions as Ω.
pub fn interior_generators(w: &Window) -> Vec<PauliOp> {
    let mut out = Vec::new();
    for b in w.bonds() {
        if b.plaquettes().iter().all(|p| w.contains_plaquette(*p)) {
            out.push(PauliOp::x_string([b]));
        }
    }
    for b in w.bonds() {
        let (p, q) = b.endpoints();
        if w.is_interior(p) && w.is_interior(q) {
            out.push(PauliOp::z_string([b]));
        }
    }
    out.extend(w.plaquettes().into_iter().map(plaquette_op));
    out.extend(w.interior_vertices().into_iter().map(star_op));
    out
}

/// All ordered products `g_{i₁} ⋯ g_{i_k}` with `i₁ < … < i_k`, `k ≤ max_factors`.
pub fn bounded_products(generators: &[PauliOp], max_factors: usize) -> Vec<PauliOp> {
    let mut out = vec![PauliOp::identity()];
    let mut frontier: Vec<(usize, PauliOp)> = vec![(0, PauliOp::identity())];
    for _ in 0..max_factors {
        let mut next = Vec::new();
        for (start, p) in &frontier {
            for (i, g) in generators.iter().enumerate().skip(*start) {
                next.push((i + 1, p.multiply(g)));
            }
        }
        out.extend(next.iter().map(|(_, p)| p.clone()));
        frontier = next;
    }
    out
}

/// Largest window the census accepts (the dense comparison needs `2^n` amplitudes).
pub const CENSUS_MAX_BONDS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCensus {
    pub window: Window,
    pub generators: usize,
    pub max_factors: usize,
    pub products: usize,
    pub achieved_rank: usize,
    pub ambient_dim: usize,
}

/// Rank of the products of at most `max_factors` interior generators,
/// alongside the dense cyclic-subspace dimension of the same family.
pub fn span_density_census(w: &Window, max_factors: usize) -> Result<SpanCensus, VacuumError> {
    let n = w.bond_count();
    if n > CENSUS_MAX_BONDS {
        return Err(VacuumError::WindowTooLarge(n, CENSUS_MAX_BONDS));
    }
    let gens = interior_generators(w);
    let products = bounded_products(&gens, max_factors);
    let achieved_rank = gram(&products).rank;
    let ambient_dim = oracle::cyclic_dimension(w, &gens, max_factors)
        .map_err(|e| VacuumError::Precondition(e.to_string()))?;
    Ok(SpanCensus {
        window: *w,
        generators: gens.len(),
        max_factors,
        products: products.len(),
        achieved_rank,
        ambient_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{path_between, Bond, Plaquette, Region, Vertex};
    use crate::pauli::{string_from_dual_path, string_from_path};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn w() -> Window {
        Window::new(-3, 3, -3, 3).unwrap()
    }

    fn arb_op() -> impl Strategy<Value = PauliOp> {
        let bonds = w().bonds();
        let n = bonds.len();
        (0u8..4, proptest::collection::vec(0u8..8, 2 * n)).prop_map(move |(l, bits)| {
            // sparse supports so that ω is non-zero reasonably often
            let x = bonds.iter().zip(&bits[..n]).filter(|(_, &k)| k == 0).map(|(b, _)| *b);
            let z = bonds.iter().zip(&bits[n..]).filter(|(_, &k)| k == 0).map(|(b, _)| *b);
            PauliOp::new(Phase::from(l), x.collect(), z.collect())
        })
    }

    fn arb_stabilizer() -> impl Strategy<Value = PauliOp> {
        let (verts, plaqs) = (w().vertices(), w().plaquettes());
        proptest::collection::vec((0..verts.len(), any::<bool>()), 0..6).prop_map(move |picks| {
            picks.iter().fold(PauliOp::identity(), |acc, &(i, star)| {
                let g = if star { star_op(verts[i]) } else { plaquette_op(plaqs[i % plaqs.len()]) };
                acc.multiply(&g)
            })
        })
    }

    fn arb_vector() -> impl Strategy<Value = ExcitationVector> {
        proptest::collection::vec((-3i64..=3, -3i64..=3, prop_oneof![arb_op(), arb_stabilizer()]), 0..4).prop_map(
            |ts| ExcitationVector {
                terms: ts.into_iter().map(|(a, b, p)| (GaussianRational::from_ints(a, b), p)).collect(),
            },
        )
    }

    fn gr(re: i64, im: i64) -> GaussianRational {
        GaussianRational::from_ints(re, im)
    }

    #[test]
    fn omega_on_stabilizers_and_strings() {
        assert_eq!(omega(&PauliOp::identity()), gr(1, 0));
        assert_eq!(omega(&star_op(Vertex::new(0, 0))), gr(1, 0));
        assert_eq!(omega(&plaquette_op(Plaquette::new(0, 0))), gr(1, 0));
        assert_eq!(omega(&PauliOp::z_string([Bond::east(0, 0)])), gr(0, 0));
        let ring = [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1), (0, 0)];
        let l = crate::lattice::Path::new(ring.iter().map(|&(x, y)| Vertex::new(x, y)).collect()).unwrap();
        assert!(l.is_closed());
        assert_eq!(omega(&string_from_path(&l)), gr(1, 0));
    }

    #[test]
    fn same_endpoint_strings() {
        let (v1, v2) = (Vertex::new(-2, -1), Vertex::new(1, 2));
        let a = string_from_path(&path_between(v1, v2, &Region::All, &w()).unwrap());
        let detour = Region::FiniteSet {
            bonds: w().bonds().into_iter().filter(|b| !a.z.contains(b)).collect(),
        };
        let b = string_from_path(&path_between(v1, v2, &detour, &w()).unwrap());
        assert_ne!(a, b);
        let (ua, ub) = (ExcitationVector::from_op(a.clone()), ExcitationVector::from_op(b.clone()));
        assert_eq!(inner(&ua, &ub), gr(1, 0));
        assert_eq!(states_equal(&a, &b), Some(Phase::ONE));
        assert_eq!(gram(&[a, b]).rank, 1);
        assert_eq!(inner(&ExcitationVector::vacuum(), &ExcitationVector::vacuum()), gr(1, 0));
    }

    #[test]
    fn states_equal_basics() {
        let p = PauliOp::x_string([Bond::north(1, 1)]).scaled(Phase::I);
        assert_eq!(states_equal(&p, &p), Some(Phase::ONE));
        assert_eq!(states_equal(&p.scaled(Phase::MINUS_I), &p), Some(Phase::MINUS_I));
        let z = PauliOp::z_string([Bond::east(-1, -2)]);
        assert_eq!(states_equal(&z, &p), None);
    }

    #[test]
    fn four_syndrome_classes() {
        let z = string_from_path(&path_between(Vertex::new(-2, -2), Vertex::new(-2, 1), &Region::All, &w()).unwrap());
        let d = crate::lattice::dual_path_between(Plaquette::new(0, 0), Plaquette::new(2, 1), &Region::All, &w())
            .unwrap();
        let x = string_from_dual_path(&d);
        let g = gram(&[PauliOp::identity(), z.clone(), x.clone(), z.multiply(&x)]);
        assert_eq!(g.rank, 4);
        assert_eq!(g.basis_indices, vec![0, 1, 2, 3]);
        assert_eq!(gram(&[PauliOp::identity()]).rank, 1);
        assert!(is_positive_semidefinite(&g.matrix));
    }

    #[test]
    fn absorption_examples_and_precondition() {
        let s = star_op(Vertex::new(0, 0));
        let y = PauliOp::z_string([Bond::east(0, 0), Bond::north(1, 0)]).scaled(Phase::I);
        assert_eq!(absorption_check(&s, &y), Ok(true));
        assert_eq!(absorption_check(&PauliOp::identity(), &y), Ok(true));
        assert!(absorption_check(&PauliOp::z_string([Bond::east(0, 0)]), &y).is_err());
        assert!(absorption_check(&s.scaled(Phase::MINUS_ONE), &y).is_err());
    }

    #[test]
    fn pivot_columns_on_known_matrices() {
        let m = vec![vec![gr(1, 0), gr(0, 1)], vec![gr(0, -1), gr(1, 0)]];
        assert_eq!(pivot_columns(&m), vec![0]);
        let id = vec![vec![gr(2, 0), gr(0, 0)], vec![gr(0, 0), gr(3, 0)]];
        assert_eq!(pivot_columns(&id), vec![0, 1]);
        let neg = vec![vec![gr(-1, 0)]];
        assert!(!is_positive_semidefinite(&neg));
        assert_eq!(pivot_columns(&[]), Vec::<usize>::new());
    }

    #[test]
    fn serde_rational_strings() {
        let g = GaussianRational::new(BigRational::new(3.into(), 6.into()), rational(-2));
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"re":"1/2","im":"-2/1"}"#);
        assert_eq!(serde_json::from_str::<GaussianRational>(&s).unwrap(), g);
        assert_eq!(serde_json::from_str::<GaussianRational>(r#"{"re":"4","im":"0"}"#).unwrap(), gr(4, 0));
    }

    #[test]
    fn single_bond_algebra_census() {
        let b = Bond::east(0, 0);
        let (x, z) = (PauliOp::x_string([b]), PauliOp::z_string([b]));
        let ops = bounded_products(&[z, x], 2);
        assert_eq!(ops.len(), 4);
        assert_eq!(gram(&ops).rank, 4);
        assert_eq!(gram(&bounded_products(&[], 3)).rank, 1);
    }

    #[test]
    fn census_rejects_large_window() {
        assert!(matches!(
            span_density_census(&Window::new(0, 5, 0, 5).unwrap(), 2),
            Err(VacuumError::WindowTooLarge(60, _))
        ));
    }

    #[test]
    fn interior_generators_on_three_by_three() {
        let gens = interior_generators(&Window::new(0, 2, 0, 2).unwrap());
        // 4 inner X bonds, no interior-interior bond, 4 plaquettes, 1 star
        assert_eq!(gens.len(), 9);
    }

    proptest! {
        #[test]
        fn omega_is_bounded_and_normalized(p in arb_op()) {
            let w = omega(&p);
            prop_assert!(w.is_zero() || w.as_phase().is_some());
        }

        #[test]
        fn stabilizers_are_absorbed(s in arb_stabilizer(), p in arb_op()) {
            // s may carry no phase, so it is a self-adjoint involution with ω = 1
            prop_assert_eq!(omega(&s), gr(1, 0));
            prop_assert_eq!(omega(&s.multiply(&p)), omega(&p));
            prop_assert_eq!(omega(&p.multiply(&s)), omega(&p));
            prop_assert_eq!(absorption_check(&s, &p), Ok(true));
        }

        #[test]
        fn inner_is_hermitian_and_cauchy_schwarz(u in arb_vector(), v in arb_vector()) {
            let uv = inner(&u, &v);
            prop_assert_eq!(uv.conj(), inner(&v, &u));
            let (uu, vv) = (inner(&u, &u), inner(&v, &v));
            prop_assert!(uu.is_real() && !uu.re.is_negative());
            prop_assert!(uv.norm_sqr() <= &uu.re * &vv.re);
        }

        #[test]
        fn gram_is_psd(ops in proptest::collection::vec(prop_oneof![arb_op(), arb_stabilizer()], 1..7)) {
            let g = gram(&ops);
            prop_assert!(is_positive_semidefinite(&g.matrix));
            let distinct: BTreeSet<_> = ops.iter().map(|p| p.syndrome()).collect();
            prop_assert_eq!(g.rank, distinct.len());
        }

        #[test]
        fn path_independence(x1 in -3i64..=3, y1 in -3i64..=3, x2 in -3i64..=3, y2 in -3i64..=3, cut in 0usize..40) {
            let (v1, v2) = (Vertex::new(x1, y1), Vertex::new(x2, y2));
            let a = path_between(v1, v2, &Region::All, &w()).unwrap();
            let mut bonds: BTreeSet<_> = w().bonds().into_iter().collect();
            if let Some(b) = a.bonds().get(cut % a.len().max(1)) {
                bonds.remove(b);
            }
            if let Ok(b) = path_between(v1, v2, &Region::FiniteSet { bonds }, &w()) {
                prop_assert_eq!(states_equal(&string_from_path(&a), &string_from_path(&b)), Some(Phase::ONE));
            }
        }
    }
}
