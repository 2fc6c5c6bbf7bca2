//! Finitely supported Pauli operators `i^λ X(a) Z(b)` on the bonds of ℤ².
//!
//! Products are kept in X-before-Z normal order; moving `Z(b)` past `X(a)`
//! costs `(-1)^{|a ∩ b|}`, which is the only source of phase in the algebra.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{plaquette_bonds, star_bonds, Bond, DualPath, Orientation, Path, Plaquette, Vertex, Window};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("bond set is not a cycle: odd degree at {0}")]
    NotACycle(Vertex),
    #[error("bond set is not a dual cycle: odd overlap with {0}")]
    NotADualCycle(Plaquette),
    #[error("path is not closed")]
    NotClosed,
}

/// A power of `i`, stored as the exponent mod 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "u8", into = "u8")]
pub struct Phase(u8);

impl From<u8> for Phase {
    fn from(k: u8) -> Self {
        Phase(k % 4)
    }
}

impl From<Phase> for u8 {
    fn from(p: Phase) -> Self {
        p.0
    }
}

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    /// `(re, im)` of `i^k`.
    pub fn to_complex(self) -> (i64, i64) {
        match self.0 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        }
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        self * Phase::MINUS_ONE
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// `i^λ X(a) Z(b)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliOp {
    pub lambda: Phase,
    #[serde(rename = "x_support")]
    pub x: BTreeSet<Bond>,
    #[serde(rename = "z_support")]
    pub z: BTreeSet<Bond>,
}

fn symmetric_difference(a: &BTreeSet<Bond>, b: &BTreeSet<Bond>) -> BTreeSet<Bond> {
    a.symmetric_difference(b).copied().collect()
}

fn overlap(a: &BTreeSet<Bond>, b: &BTreeSet<Bond>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|x| large.contains(x)).count()
}

impl PauliOp {
    pub fn identity() -> Self {
        PauliOp::default()
    }

    pub fn new(lambda: Phase, x: BTreeSet<Bond>, z: BTreeSet<Bond>) -> Self {
        PauliOp { lambda, x, z }
    }

    pub fn x_string(x: impl IntoIterator<Item = Bond>) -> Self {
        PauliOp { lambda: Phase::ONE, x: x.into_iter().collect(), z: BTreeSet::new() }
    }

    pub fn z_string(z: impl IntoIterator<Item = Bond>) -> Self {
        PauliOp { lambda: Phase::ONE, x: BTreeSet::new(), z: z.into_iter().collect() }
    }

    pub fn scalar(lambda: Phase) -> Self {
        PauliOp { lambda, ..PauliOp::default() }
    }

    /// Same supports, phase multiplied by `p`.
    pub fn scaled(&self, p: Phase) -> Self {
        PauliOp { lambda: self.lambda * p, ..self.clone() }
    }

    /// The operator with its phase reset to `+1`.
    pub fn unsigned(&self) -> Self {
        PauliOp { lambda: Phase::ONE, ..self.clone() }
    }

    pub fn is_scalar(&self) -> bool {
        self.x.is_empty() && self.z.is_empty()
    }

    pub fn multiply(&self, q: &PauliOp) -> PauliOp {
        let swap = 2 * overlap(&self.z, &q.x) as i64;
        PauliOp {
            lambda: self.lambda * q.lambda * Phase::from_exponent(swap),
            x: symmetric_difference(&self.x, &q.x),
            z: symmetric_difference(&self.z, &q.z),
        }
    }

    pub fn adjoint(&self) -> PauliOp {
        let sign = Phase::from_exponent(2 * overlap(&self.x, &self.z) as i64);
        PauliOp { lambda: self.lambda.conj() * sign, x: self.x.clone(), z: self.z.clone() }
    }

    pub fn commutes(&self, q: &PauliOp) -> bool {
        (overlap(&self.x, &q.z) + overlap(&self.z, &q.x)) % 2 == 0
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.lambda.exponent() as usize % 2 == overlap(&self.x, &self.z) % 2
    }

    /// All bonds on which the operator acts non-trivially.
    pub fn support(&self) -> BTreeSet<Bond> {
        self.x.union(&self.z).copied().collect()
    }

    pub fn supported_in(&self, mut pred: impl FnMut(&Bond) -> bool) -> bool {
        self.x.iter().chain(self.z.iter()).all(|b| pred(b))
    }

    pub fn syndrome(&self) -> Syndrome {
        syndrome(self)
    }
}

impl Mul for &PauliOp {
    type Output = PauliOp;
    fn mul(self, rhs: &PauliOp) -> PauliOp {
        self.multiply(rhs)
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.lambda)?;
        if !self.x.is_empty() {
            let s: Vec<_> = self.x.iter().map(|b| b.to_string()).collect();
            write!(f, " X[{}]", s.join(" "))?;
        }
        if !self.z.is_empty() {
            let s: Vec<_> = self.z.iter().map(|b| b.to_string()).collect();
            write!(f, " Z[{}]", s.join(" "))?;
        }
        Ok(())
    }
}

pub fn multiply(p: &PauliOp, q: &PauliOp) -> PauliOp {
    p.multiply(q)
}

pub fn adjoint(p: &PauliOp) -> PauliOp {
    p.adjoint()
}

pub fn commutes(p: &PauliOp, q: &PauliOp) -> bool {
    p.commutes(q)
}

/// Ordered product `ops[0] · ops[1] · …`.
pub fn product<'a>(ops: impl IntoIterator<Item = &'a PauliOp>) -> PauliOp {
    ops.into_iter().fold(PauliOp::identity(), |acc, p| acc.multiply(p))
}

pub fn string_from_path(xi: &Path) -> PauliOp {
    PauliOp::z_string(xi.bond_set())
}

pub fn string_from_dual_path(xi: &DualPath) -> PauliOp {
    PauliOp::x_string(xi.crossed_set())
}

pub fn star_op(s: Vertex) -> PauliOp {
    PauliOp::x_string(star_bonds(s))
}

pub fn plaquette_op(p: Plaquette) -> PauliOp {
    PauliOp::z_string(plaquette_bonds(p))
}

/// Charges (odd Z-degree vertices) and fluxes (odd X-overlap plaquettes).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Syndrome {
    pub charges: BTreeSet<Vertex>,
    pub fluxes: BTreeSet<Plaquette>,
}

impl Syndrome {
    pub fn is_trivial(&self) -> bool {
        self.charges.is_empty() && self.fluxes.is_empty()
    }

    pub fn symmetric_difference(&self, other: &Syndrome) -> Syndrome {
        Syndrome {
            charges: self.charges.symmetric_difference(&other.charges).copied().collect(),
            fluxes: self.fluxes.symmetric_difference(&other.fluxes).copied().collect(),
        }
    }
}

fn odd_vertices(b: &BTreeSet<Bond>) -> BTreeSet<Vertex> {
    let mut out = BTreeSet::new();
    for bond in b {
        let (p, q) = bond.endpoints();
        for v in [p, q] {
            if !out.remove(&v) {
                out.insert(v);
            }
        }
    }
    out
}

fn odd_plaquettes(a: &BTreeSet<Bond>) -> BTreeSet<Plaquette> {
    let mut out = BTreeSet::new();
    for bond in a {
        for p in bond.plaquettes() {
            if !out.remove(&p) {
                out.insert(p);
            }
        }
    }
    out
}

pub fn syndrome(p: &PauliOp) -> Syndrome {
    Syndrome { charges: odd_vertices(&p.z), fluxes: odd_plaquettes(&p.x) }
}

/// Every vertex has even degree in `b`.
pub fn is_cycle(b: &BTreeSet<Bond>) -> bool {
    odd_vertices(b).is_empty()
}

/// Every plaquette meets `a` in an even number of bonds.
pub fn is_dual_cycle(a: &BTreeSet<Bond>) -> bool {
    odd_plaquettes(a).is_empty()
}

/// The finite plaquette set whose boundary is the cycle `b`.
///
/// Plaquette `(x, y)` is included iff an odd number of the East bonds
/// `E@(x, y')`, `y' ≤ y`, lie in `b`.
pub fn express_as_plaquette_sum(b: &BTreeSet<Bond>) -> Result<BTreeSet<Plaquette>, PauliError> {
    if let Some(v) = odd_vertices(b).into_iter().next() {
        return Err(PauliError::NotACycle(v));
    }
    let mut columns: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for bond in b.iter().filter(|b| b.orientation == Orientation::East) {
        columns.entry(bond.base.x).or_default().push(bond.base.y);
    }
    let mut out = BTreeSet::new();
    for (x, mut ys) in columns {
        ys.sort_unstable();
        for pair in ys.chunks(2) {
            for y in pair[0]..pair[1] {
                out.insert(Plaquette::new(x, y));
            }
        }
    }
    Ok(out)
}

/// The finite star set whose X-product is the dual cycle `a`.
///
/// Star `(x, y)` is included iff an odd number of the East bonds
/// `E@(x', y)`, `x' < x`, lie in `a`.
pub fn express_as_star_sum(a: &BTreeSet<Bond>) -> Result<BTreeSet<Vertex>, PauliError> {
    if let Some(p) = odd_plaquettes(a).into_iter().next() {
        return Err(PauliError::NotADualCycle(p));
    }
    let mut rows: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for bond in a.iter().filter(|b| b.orientation == Orientation::East) {
        rows.entry(bond.base.y).or_default().push(bond.base.x);
    }
    let mut out = BTreeSet::new();
    for (y, mut xs) in rows {
        xs.sort_unstable();
        for pair in xs.chunks(2) {
            for x in pair[0]..pair[1] {
                out.insert(Vertex::new(x + 1, y));
            }
        }
    }
    Ok(out)
}

/// `|bonds(loop) ∩ crossed(dual_loop)| mod 2`; zero for any two closed loops.
pub fn intersection_parity(loop_: &Path, dual_loop: &DualPath) -> Result<u8, PauliError> {
    if !loop_.is_closed() || !dual_loop.is_closed() {
        return Err(PauliError::NotClosed);
    }
    Ok((overlap(&loop_.bond_set(), &dual_loop.crossed_set()) % 2) as u8)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    pub coefficient: i64,
    pub op: PauliOp,
}

/// `-A_s` for every star and `-B_p` for every plaquette fully inside `w`.
pub fn local_hamiltonian_terms(w: &Window) -> Vec<HamiltonianTerm> {
    let stars = w.interior_vertices().into_iter().map(star_op);
    let plaqs = w.plaquettes().into_iter().map(plaquette_op);
    stars.chain(plaqs).map(|op| HamiltonianTerm { coefficient: -1, op }).collect()
}
