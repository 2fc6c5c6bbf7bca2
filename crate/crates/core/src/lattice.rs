//! Exact integer geometry of the square lattice, its dual, and cone regions.
//!
//! Vertices are lattice points, bonds are unit edges, plaquettes are unit
//! squares named by their lower-left corner. A [`Cone`] is given by an apex
//! and two primitive integer ray directions; its bond set is every bond whose
//! open segment meets the open sector between the rays. All predicates are
//! decided with integer cross products and exact rationals.
//!
//! Infinite objects are never materialized: every enumeration is relative to
//! a finite [`Window`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num::rational::Ratio;
use num::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("ray direction must be non-zero")]
    ZeroDirection,
    #[error("cone directions ({0},{1}) and ({2},{3}) must satisfy cross(d1, d2) > 0")]
    DegenerateCone(i64, i64, i64, i64),
    #[error("window must satisfy xmin < xmax and ymin < ymax")]
    EmptyWindow,
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(Vertex, Vertex),
    #[error("plaquettes {0} and {1} do not share a bond")]
    NotDualAdjacent(Plaquette, Plaquette),
    #[error("no route from {from} to {to} inside the region and window")]
    Unreachable { from: String, to: String },
    #[error("inner cone is not contained in the outer cone: bond {0} is in the inner cone only")]
    NotNested(Bond),
}

/// A lattice point. Ordered by `(y, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    pub const fn new(x: i64, y: i64) -> Self {
        Vertex { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Vertex::new(self.x + dx, self.y + dy)
    }
}

impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "E")]
    East,
    #[serde(rename = "N")]
    North,
}

/// A unit edge from `base` to `base + (1,0)` (East) or `base + (0,1)` (North).
///
/// Ordered lexicographically on `(y, x, orientation)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "BondRepr", into = "BondRepr")]
pub struct Bond {
    pub base: Vertex,
    pub orientation: Orientation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BondRepr {
    x: i64,
    y: i64,
    dir: Orientation,
}

impl From<BondRepr> for Bond {
    fn from(r: BondRepr) -> Self {
        Bond { base: Vertex::new(r.x, r.y), orientation: r.dir }
    }
}

impl From<Bond> for BondRepr {
    fn from(b: Bond) -> Self {
        BondRepr { x: b.base.x, y: b.base.y, dir: b.orientation }
    }
}

impl Bond {
    pub const fn east(x: i64, y: i64) -> Self {
        Bond { base: Vertex::new(x, y), orientation: Orientation::East }
    }

    pub const fn north(x: i64, y: i64) -> Self {
        Bond { base: Vertex::new(x, y), orientation: Orientation::North }
    }

    /// The bond joining two adjacent vertices, if they are adjacent.
    pub fn between(u: Vertex, v: Vertex) -> Option<Bond> {
        let (lo, hi) = if (u.x, u.y) <= (v.x, v.y) { (u, v) } else { (v, u) };
        match (hi.x - lo.x, hi.y - lo.y) {
            (1, 0) => Some(Bond::east(lo.x, lo.y)),
            (0, 1) => Some(Bond::north(lo.x, lo.y)),
            _ => None,
        }
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        let tip = match self.orientation {
            Orientation::East => self.base.offset(1, 0),
            Orientation::North => self.base.offset(0, 1),
        };
        (self.base, tip)
    }

    pub fn other_end(&self, v: Vertex) -> Vertex {
        let (a, b) = self.endpoints();
        if v == a {
            b
        } else {
            a
        }
    }

    /// The two plaquettes sharing this bond.
    pub fn plaquettes(&self) -> [Plaquette; 2] {
        let Vertex { x, y } = self.base;
        match self.orientation {
            Orientation::East => [Plaquette::new(x, y - 1), Plaquette::new(x, y)],
            Orientation::North => [Plaquette::new(x - 1, y), Plaquette::new(x, y)],
        }
    }
}

impl fmt::Display for Bond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = match self.orientation {
            Orientation::East => 'E',
            Orientation::North => 'N',
        };
        write!(f, "{}@{}", o, self.base)
    }
}

/// The unit square with lower-left corner `anchor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Plaquette {
    pub anchor: Vertex,
}

impl Plaquette {
    pub const fn new(x: i64, y: i64) -> Self {
        Plaquette { anchor: Vertex::new(x, y) }
    }

    /// The bond shared with `other`, if the two plaquettes are adjacent.
    pub fn shared_bond(&self, other: &Plaquette) -> Option<Bond> {
        let (a, b) = (self.anchor, other.anchor);
        match (b.x - a.x, b.y - a.y) {
            (1, 0) => Some(Bond::north(b.x, b.y)),
            (-1, 0) => Some(Bond::north(a.x, a.y)),
            (0, 1) => Some(Bond::east(b.x, b.y)),
            (0, -1) => Some(Bond::east(a.x, a.y)),
            _ => None,
        }
    }

    pub fn center_twice(&self) -> (i64, i64) {
        (2 * self.anchor.x + 1, 2 * self.anchor.y + 1)
    }
}

impl fmt::Display for Plaquette {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.anchor)
    }
}

/// A star or a plaquette; the two kinds of stabilizer sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Site {
    Star { vertex: Vertex },
    Plaquette { plaquette: Plaquette },
}

impl Site {
    pub fn bonds(&self) -> [Bond; 4] {
        match self {
            Site::Star { vertex } => star_bonds(*vertex),
            Site::Plaquette { plaquette } => plaquette_bonds(*plaquette),
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Star { vertex } => write!(f, "star{vertex}"),
            Site::Plaquette { plaquette } => write!(f, "{plaquette}"),
        }
    }
}

/// The four bonds incident to `v`, in bond order.
pub fn star_bonds(v: Vertex) -> [Bond; 4] {
    let mut b = [
        Bond::east(v.x, v.y),
        Bond::east(v.x - 1, v.y),
        Bond::north(v.x, v.y),
        Bond::north(v.x, v.y - 1),
    ];
    b.sort();
    b
}

/// The four bonds enclosing `p`, in bond order.
pub fn plaquette_bonds(p: Plaquette) -> [Bond; 4] {
    let Vertex { x, y } = p.anchor;
    let mut b = [Bond::east(x, y), Bond::north(x + 1, y), Bond::east(x, y + 1), Bond::north(x, y)];
    b.sort();
    b
}

/// A lattice path given by its vertex sequence.
///
/// A single vertex (or no vertex) is the empty path. Closed iff it has at
/// least one edge and starts where it ends.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    vertices: Vec<Vertex>,
}

impl Path {
    pub fn new(vertices: Vec<Vertex>) -> Result<Self, LatticeError> {
        for w in vertices.windows(2) {
            if Bond::between(w[0], w[1]).is_none() {
                return Err(LatticeError::NotAdjacent(w[0], w[1]));
            }
        }
        Ok(Path { vertices })
    }

    pub fn empty_at(v: Vertex) -> Self {
        Path { vertices: vec![v] }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> Option<Vertex> {
        self.vertices.first().copied()
    }

    pub fn end(&self) -> Option<Vertex> {
        self.vertices.last().copied()
    }

    pub fn is_closed(&self) -> bool {
        self.len() > 0 && self.vertices.first() == self.vertices.last()
    }

    /// Bonds in traversal order (with repetitions).
    pub fn bonds(&self) -> Vec<Bond> {
        self.vertices
            .windows(2)
            .map(|w| Bond::between(w[0], w[1]).expect("validated on construction"))
            .collect()
    }

    /// Bonds traversed an odd number of times; the support of the string operator.
    pub fn bond_set(&self) -> BTreeSet<Bond> {
        odd_set(self.bonds())
    }

    pub fn reversed(&self) -> Path {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Path { vertices }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn join(&self, other: &Path) -> Result<Path, LatticeError> {
        match (self.end(), other.start()) {
            (Some(a), Some(b)) if a == b => {
                let mut vertices = self.vertices.clone();
                vertices.extend_from_slice(&other.vertices[1..]);
                Ok(Path { vertices })
            }
            (Some(a), Some(b)) => Err(LatticeError::NotAdjacent(a, b)),
            _ => Ok(if self.vertices.is_empty() { other.clone() } else { self.clone() }),
        }
    }
}

/// A path on the dual lattice, given by its plaquette sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualPath {
    plaquettes: Vec<Plaquette>,
}

impl DualPath {
    pub fn new(plaquettes: Vec<Plaquette>) -> Result<Self, LatticeError> {
        for w in plaquettes.windows(2) {
            if w[0].shared_bond(&w[1]).is_none() {
                return Err(LatticeError::NotDualAdjacent(w[0], w[1]));
            }
        }
        Ok(DualPath { plaquettes })
    }

    pub fn empty_at(p: Plaquette) -> Self {
        DualPath { plaquettes: vec![p] }
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    pub fn len(&self) -> usize {
        self.plaquettes.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> Option<Plaquette> {
        self.plaquettes.first().copied()
    }

    pub fn end(&self) -> Option<Plaquette> {
        self.plaquettes.last().copied()
    }

    pub fn is_closed(&self) -> bool {
        self.len() > 0 && self.plaquettes.first() == self.plaquettes.last()
    }

    /// Crossed bonds in traversal order, one per step.
    pub fn crossed_bonds(&self) -> Vec<Bond> {
        self.plaquettes
            .windows(2)
            .map(|w| w[0].shared_bond(&w[1]).expect("validated on construction"))
            .collect()
    }

    /// Bonds crossed an odd number of times.
    pub fn crossed_set(&self) -> BTreeSet<Bond> {
        odd_set(self.crossed_bonds())
    }

    pub fn reversed(&self) -> DualPath {
        let mut plaquettes = self.plaquettes.clone();
        plaquettes.reverse();
        DualPath { plaquettes }
    }

    pub fn join(&self, other: &DualPath) -> Result<DualPath, LatticeError> {
        match (self.end(), other.start()) {
            (Some(a), Some(b)) if a == b => {
                let mut plaquettes = self.plaquettes.clone();
                plaquettes.extend_from_slice(&other.plaquettes[1..]);
                Ok(DualPath { plaquettes })
            }
            (Some(a), Some(b)) => Err(LatticeError::NotDualAdjacent(a, b)),
            _ => Ok(if self.plaquettes.is_empty() { other.clone() } else { self.clone() }),
        }
    }
}

fn odd_set(items: impl IntoIterator<Item = Bond>) -> BTreeSet<Bond> {
    let mut set = BTreeSet::new();
    for b in items {
        if !set.remove(&b) {
            set.insert(b);
        }
    }
    set
}

#[inline]
fn cross(a: (i128, i128), b: (i128, i128)) -> i128 {
    a.0 * b.1 - a.1 * b.0
}

#[inline]
fn dot(a: (i128, i128), b: (i128, i128)) -> i128 {
    a.0 * b.0 + a.1 * b.1
}

fn rel(v: Vertex, origin: Vertex) -> (i128, i128) {
    ((v.x - origin.x) as i128, (v.y - origin.y) as i128)
}

fn wide(d: (i64, i64)) -> (i128, i128) {
    (d.0 as i128, d.1 as i128)
}

type Q = Ratio<i128>;

/// The open sub-interval of (0,1) on which `a + t (b - a)` is positive.
fn positive_interval(a: i128, b: i128) -> Option<(Q, Q)> {
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);
    match (a > 0, b > 0) {
        (true, true) => Some((zero, one)),
        (false, false) => None,
        (true, false) => Some((zero, Q::new(a, a - b))),
        (false, true) => Some((Q::new(a, a - b), one)),
    }
}

/// Whether the open segment `p0 p1` meets the open sector
/// `{apex + α d1 + β d2 : α, β > 0}` (requires `cross(d1, d2) > 0`).
///
/// Both sector conditions are linear along the segment, so each holds on an
/// open sub-interval of (0,1); the segment meets the sector iff the two
/// intervals overlap.
pub fn sector_meets_open_segment(
    apex: Vertex,
    d1: (i64, i64),
    d2: (i64, i64),
    p0: Vertex,
    p1: Vertex,
) -> bool {
    let (d1, d2) = (wide(d1), wide(d2));
    let (r0, r1) = (rel(p0, apex), rel(p1, apex));
    let i1 = positive_interval(cross(d1, r0), cross(d1, r1));
    let i2 = positive_interval(cross(r0, d2), cross(r1, d2));
    match (i1, i2) {
        (Some((lo1, hi1)), Some((lo2, hi2))) => lo1.max(lo2) < hi1.min(hi2),
        _ => false,
    }
}

/// A cone: the bonds meeting the open sector spanned by two rays from `apex`.
///
/// Directions are stored reduced to primitive vectors, with `cross(d1, d2) > 0`
/// (counterclockwise from `d1` to `d2`, opening angle strictly between 0 and π).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ConeRepr", into = "ConeRepr")]
pub struct Cone {
    apex: Vertex,
    d1: (i64, i64),
    d2: (i64, i64),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeRepr {
    apex: Vertex,
    d1: [i64; 2],
    d2: [i64; 2],
}

impl TryFrom<ConeRepr> for Cone {
    type Error = LatticeError;
    fn try_from(r: ConeRepr) -> Result<Self, Self::Error> {
        Cone::new(r.apex, (r.d1[0], r.d1[1]), (r.d2[0], r.d2[1]))
    }
}

impl From<Cone> for ConeRepr {
    fn from(c: Cone) -> Self {
        ConeRepr { apex: c.apex, d1: [c.d1.0, c.d1.1], d2: [c.d2.0, c.d2.1] }
    }
}

fn primitive(d: (i64, i64)) -> Result<(i64, i64), LatticeError> {
    let g = d.0.gcd(&d.1);
    if g == 0 {
        return Err(LatticeError::ZeroDirection);
    }
    Ok((d.0 / g, d.1 / g))
}

impl Cone {
    pub fn new(apex: Vertex, d1: (i64, i64), d2: (i64, i64)) -> Result<Self, LatticeError> {
        let (p1, p2) = (primitive(d1)?, primitive(d2)?);
        if cross(wide(p1), wide(p2)) <= 0 {
            return Err(LatticeError::DegenerateCone(d1.0, d1.1, d2.0, d2.1));
        }
        Ok(Cone { apex, d1: p1, d2: p2 })
    }

    pub fn apex(&self) -> Vertex {
        self.apex
    }

    pub fn d1(&self) -> (i64, i64) {
        self.d1
    }

    pub fn d2(&self) -> (i64, i64) {
        self.d2
    }

    /// The same cone translated by `(dx, dy)`.
    pub fn translated(&self, dx: i64, dy: i64) -> Cone {
        Cone { apex: self.apex.offset(dx, dy), ..*self }
    }

    pub fn contains_bond(&self, b: &Bond) -> bool {
        let (p0, p1) = b.endpoints();
        sector_meets_open_segment(self.apex, self.d1, self.d2, p0, p1)
    }

    /// Whether `v` lies in the closed sector.
    pub fn closed_sector_contains(&self, v: Vertex) -> bool {
        let r = rel(v, self.apex);
        cross(wide(self.d1), r) >= 0 && cross(r, wide(self.d2)) >= 0
    }

    pub fn open_sector_contains(&self, v: Vertex) -> bool {
        let r = rel(v, self.apex);
        cross(wide(self.d1), r) > 0 && cross(r, wide(self.d2)) > 0
    }

    pub fn on_ray(&self, v: Vertex) -> bool {
        let r = rel(v, self.apex);
        let on = |d: (i128, i128)| cross(d, r) == 0 && dot(d, r) >= 0;
        on(wide(self.d1)) || on(wide(self.d2))
    }

    pub fn is_boundary_vertex(&self, v: Vertex) -> bool {
        self.on_ray(v)
            || (!self.closed_sector_contains(v) && star_bonds(v).iter().any(|b| self.contains_bond(b)))
    }

    pub fn is_boundary_plaquette(&self, p: Plaquette) -> bool {
        let n = plaquette_bonds(p).iter().filter(|b| self.contains_bond(b)).count();
        n > 0 && n < 4
    }
}

/// A finite rectangle of vertices `[xmin, xmax] × [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct Window {
    pub xmin: i64,
    pub xmax: i64,
    pub ymin: i64,
    pub ymax: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowRepr {
    xmin: i64,
    xmax: i64,
    ymin: i64,
    ymax: i64,
}

impl TryFrom<WindowRepr> for Window {
    type Error = LatticeError;
    fn try_from(r: WindowRepr) -> Result<Self, Self::Error> {
        Window::new(r.xmin, r.xmax, r.ymin, r.ymax)
    }
}

impl From<Window> for WindowRepr {
    fn from(w: Window) -> Self {
        WindowRepr { xmin: w.xmin, xmax: w.xmax, ymin: w.ymin, ymax: w.ymax }
    }
}

impl Window {
    pub fn new(xmin: i64, xmax: i64, ymin: i64, ymax: i64) -> Result<Self, LatticeError> {
        if xmin >= xmax || ymin >= ymax {
            return Err(LatticeError::EmptyWindow);
        }
        Ok(Window { xmin, xmax, ymin, ymax })
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        (self.xmin..=self.xmax).contains(&v.x) && (self.ymin..=self.ymax).contains(&v.y)
    }

    pub fn contains_bond(&self, b: &Bond) -> bool {
        let (p, q) = b.endpoints();
        self.contains_vertex(p) && self.contains_vertex(q)
    }

    /// Whether all four bonds of `p` lie in the window.
    pub fn contains_plaquette(&self, p: Plaquette) -> bool {
        (self.xmin..self.xmax).contains(&p.anchor.x) && (self.ymin..self.ymax).contains(&p.anchor.y)
    }

    /// Whether all four star bonds of `v` lie in the window.
    pub fn is_interior(&self, v: Vertex) -> bool {
        v.x > self.xmin && v.x < self.xmax && v.y > self.ymin && v.y < self.ymax
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let mut out = Vec::new();
        for y in self.ymin..=self.ymax {
            for x in self.xmin..=self.xmax {
                out.push(Vertex::new(x, y));
            }
        }
        out
    }

    pub fn interior_vertices(&self) -> Vec<Vertex> {
        self.vertices().into_iter().filter(|v| self.is_interior(*v)).collect()
    }

    pub fn bonds(&self) -> Vec<Bond> {
        let mut out = Vec::new();
        for y in self.ymin..=self.ymax {
            for x in self.xmin..=self.xmax {
                if x < self.xmax {
                    out.push(Bond::east(x, y));
                }
                if y < self.ymax {
                    out.push(Bond::north(x, y));
                }
            }
        }
        out
    }

    pub fn bond_count(&self) -> usize {
        let (nx, ny) = ((self.xmax - self.xmin) as usize, (self.ymax - self.ymin) as usize);
        nx * (ny + 1) + (nx + 1) * ny
    }

    pub fn plaquettes(&self) -> Vec<Plaquette> {
        let mut out = Vec::new();
        for y in self.ymin..self.ymax {
            for x in self.xmin..self.xmax {
                out.push(Plaquette::new(x, y));
            }
        }
        out
    }

    /// The window with `k` rows and columns removed on every side.
    pub fn shrink(&self, k: i64) -> Option<Window> {
        Window::new(self.xmin + k, self.xmax - k, self.ymin + k, self.ymax - k).ok()
    }
}

/// A bond region, decided exactly per bond.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Cone { cone: Cone },
    Complement { cone: Cone },
    /// `B \ (inner ∪ outer^c)`, the gap between nested cones.
    Gap { inner: Cone, outer: Cone },
    FiniteSet { bonds: BTreeSet<Bond> },
    All,
}

impl Region {
    pub fn contains(&self, b: &Bond) -> bool {
        match self {
            Region::Cone { cone } => cone.contains_bond(b),
            Region::Complement { cone } => !cone.contains_bond(b),
            Region::Gap { inner, outer } => outer.contains_bond(b) && !inner.contains_bond(b),
            Region::FiniteSet { bonds } => bonds.contains(b),
            Region::All => true,
        }
    }

    pub fn contains_site(&self, s: &Site) -> bool {
        s.bonds().iter().all(|b| self.contains(b))
    }
}

pub fn boundary_vertices(c: &Cone, w: &Window) -> BTreeSet<Vertex> {
    w.vertices().into_iter().filter(|v| c.is_boundary_vertex(*v)).collect()
}

pub fn boundary_plaquettes(c: &Cone, w: &Window) -> BTreeSet<Plaquette> {
    w.plaquettes().into_iter().filter(|p| c.is_boundary_plaquette(*p)).collect()
}

/// Stars whose four bonds all lie in `r ∩ w`.
pub fn stars_in_region(r: &Region, w: &Window) -> BTreeSet<Vertex> {
    w.interior_vertices()
        .into_iter()
        .filter(|v| star_bonds(*v).iter().all(|b| r.contains(b)))
        .collect()
}

/// Plaquettes whose four bonds all lie in `r ∩ w`.
pub fn plaquettes_in_region(r: &Region, w: &Window) -> BTreeSet<Plaquette> {
    w.plaquettes()
        .into_iter()
        .filter(|p| plaquette_bonds(*p).iter().all(|b| r.contains(b)))
        .collect()
}

/// Result of the distal-separation test `Λ₁ ≪ Λ₂`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Separation {
    Separated,
    /// A site whose bonds lie in `Λ₁ ∪ Λ₂ᶜ` but meet both parts.
    NotSeparated { witness: Site },
    Undetermined { reason: String },
}

impl Separation {
    pub fn is_separated(&self) -> bool {
        matches!(self, Separation::Separated)
    }
}

/// Margin (in lattice units) between the window edge and the region where the
/// tail criterion takes over.
pub const TAIL_MARGIN: i64 = 3;

/// Decide `c1 ≪ c2`: every star or plaquette whose bonds all lie in
/// `Λ₁ ∪ Λ₂ᶜ` lies entirely in one of the two parts.
///
/// Sites inside `w` are checked exhaustively. The answer is `Separated` only
/// if, in addition, the tail criterion certifies the part of the plane
/// outside `w` (see [`tail_certificate`]); otherwise `Undetermined`.
pub fn is_distally_separated(c1: &Cone, c2: &Cone, w: &Window) -> Result<Separation, LatticeError> {
    for b in w.bonds() {
        if c1.contains_bond(&b) && !c2.contains_bond(&b) {
            return Err(LatticeError::NotNested(b));
        }
    }
    let sites = w
        .interior_vertices()
        .into_iter()
        .map(|vertex| Site::Star { vertex })
        .chain(w.plaquettes().into_iter().map(|plaquette| Site::Plaquette { plaquette }));
    for site in sites {
        if straddles(site.bonds(), |b| c1.contains_bond(b), |b| !c2.contains_bond(b)) {
            return Ok(Separation::NotSeparated { witness: site });
        }
    }
    match tail_certificate(c1, c2, w) {
        Ok(()) => Ok(Separation::Separated),
        Err(reason) => Ok(Separation::Undetermined { reason }),
    }
}

fn straddles(bonds: [Bond; 4], inner: impl Fn(&Bond) -> bool, outer: impl Fn(&Bond) -> bool) -> bool {
    let all_in_union = bonds.iter().all(|b| inner(b) || outer(b));
    all_in_union && bonds.iter().any(&inner) && bonds.iter().any(&outer)
}

#[derive(Clone, Copy, Debug)]
struct Ray {
    origin: Vertex,
    dir: (i64, i64),
}

impl Ray {
    /// Parameter at which the ray leaves the closed rectangle `w` (origin inside).
    fn exit(&self, w: &Window) -> Q {
        let mut best: Option<Q> = None;
        let axes = [
            (self.dir.0, self.origin.x, w.xmin, w.xmax),
            (self.dir.1, self.origin.y, w.ymin, w.ymax),
        ];
        for (d, o, lo, hi) in axes {
            if d == 0 {
                continue;
            }
            let bound = if d > 0 { hi } else { lo };
            let t = Q::new((bound - o) as i128, d as i128);
            best = Some(best.map_or(t, |b| b.min(t)));
        }
        best.expect("ray direction is non-zero")
    }

    /// Signed offset `cross(line.dir, p - line.origin)` along the ray: `(value at t=0, rate)`.
    fn offset_from(&self, line: &Ray) -> (i128, i128) {
        let v = wide(line.dir);
        (cross(v, rel(self.origin, line.origin)), cross(v, wide(self.dir)))
    }
}

fn rays(c: &Cone) -> [Ray; 2] {
    [Ray { origin: c.apex, dir: c.d1 }, Ray { origin: c.apex, dir: c.d2 }]
}

/// Sufficient condition for the absence of `≪`-witnesses outside `w`.
///
/// Let `w'` be `w` shrunk by [`TAIL_MARGIN`]. Requirements:
/// 1. both apexes lie in `w'`;
/// 2. for each pair of corresponding rays (first with first, second with
///    second): if parallel, the translation-periodic strip between them has
///    no witness (checked exactly on one period); otherwise the inner ray
///    moves away from the outer boundary line and is farther than 2 from it
///    where it leaves `w'`;
/// 3. every ray is farther than 4 from the line of each non-corresponding
///    ray where it leaves `w'`, and keeps moving away from it.
///
/// A witness is a star or plaquette (diameter at most 2) meeting both `Λ₁`
/// and `Λ₂ᶜ`; outside `w'` such a site could only sit between corresponding
/// rays, which 2 and 3 exclude.
pub fn tail_certificate(c1: &Cone, c2: &Cone, w: &Window) -> Result<(), String> {
    let inner = w
        .shrink(TAIL_MARGIN)
        .ok_or_else(|| format!("window too small for tail margin {TAIL_MARGIN}"))?;
    for c in [c1, c2] {
        if !inner.contains_vertex(c.apex) {
            return Err(format!("apex {} outside the shrunken window", c.apex));
        }
    }
    let r1 = rays(c1);
    let r2 = rays(c2);
    for i in 0..2 {
        // Interior of the outer cone is on the left of its first ray and on
        // the right of its second ray.
        let side: i128 = if i == 0 { 1 } else { -1 };
        if r1[i].dir == r2[i].dir {
            periodic_strip_check(&r1[i], &r2[i], side)?;
        } else {
            let t = r1[i].exit(&inner);
            let (g0, rate) = r1[i].offset_from(&r2[i]);
            let g = Q::from_integer(g0) + t * Q::from_integer(rate);
            let len2 = dot(wide(r2[i].dir), wide(r2[i].dir));
            let g = g * Q::from_integer(side);
            if side * rate < 0 || g <= Q::from_integer(0) || g * g <= Q::from_integer(4 * len2) {
                return Err(format!("ray {} of the inner cone approaches the outer boundary", i + 1));
            }
        }
    }
    let all = [(r1[0], 0usize), (r1[1], 1), (r2[0], 0), (r2[1], 1)];
    for (ray, i) in all {
        for (line, j) in all {
            if i == j {
                continue;
            }
            let t = ray.exit(&inner);
            let (g0, rate) = ray.offset_from(&line);
            let g = Q::from_integer(g0) + t * Q::from_integer(rate);
            let len2 = dot(wide(line.dir), wide(line.dir));
            let moving_away = rate == 0 || (g > Q::from_integer(0)) == (rate > 0);
            if !moving_away || g * g <= Q::from_integer(16 * len2) {
                return Err(format!(
                    "rays from {} and {} are not separated outside the window",
                    ray.origin, line.origin
                ));
            }
        }
    }
    Ok(())
}

/// Exact check of one period of the strip between two parallel rays, modelled
/// as half-planes.
fn periodic_strip_check(inner: &Ray, outer: &Ray, side: i128) -> Result<(), String> {
    let u = wide(inner.dir);
    let h_inner = |q: Vertex| side * cross(u, rel(q, inner.origin));
    let h_outer = |q: Vertex| side * cross(u, rel(q, outer.origin));
    let width = side * cross(u, rel(inner.origin, outer.origin));
    if width < 0 {
        return Err("cones are not nested beyond the window".to_string());
    }
    let in_inner = |b: &Bond| {
        let (p, q) = b.endpoints();
        h_inner(p).max(h_inner(q)) > 0
    };
    let in_outer_c = |b: &Bond| {
        let (p, q) = b.endpoints();
        h_outer(p).max(h_outer(q)) <= 0
    };
    let period = dot(u, u);
    let norm1 = (u.0.abs() + u.1.abs()) as i64;
    let radius = norm1 + width as i64 + 4;
    let a = inner.origin;
    for y in a.y - radius..=a.y + radius {
        for x in a.x - radius..=a.x + radius {
            let q = Vertex::new(x, y);
            let along = dot(rel(q, a), u);
            if along < 0 || along >= period {
                continue;
            }
            for site in [Site::Star { vertex: q }, Site::Plaquette { plaquette: Plaquette { anchor: q } }] {
                if straddles(site.bonds(), in_inner, in_outer_c) {
                    return Err(format!("periodic strip witness near {site}"));
                }
            }
        }
    }
    Ok(())
}

/// Breadth-first search over window vertices using bonds of `r`, stopping at
/// the first vertex satisfying `target`. Neighbours are explored in bond order.
pub fn path_to_any(
    from: Vertex,
    target: impl Fn(Vertex) -> bool,
    r: &Region,
    w: &Window,
) -> Option<Path> {
    if !w.contains_vertex(from) {
        return None;
    }
    let mut parent: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    parent.insert(from, from);
    while let Some(v) = queue.pop_front() {
        if target(v) {
            let mut vertices = vec![v];
            let mut cur = v;
            while cur != from {
                cur = parent[&cur];
                vertices.push(cur);
            }
            vertices.reverse();
            return Some(Path { vertices });
        }
        for b in star_bonds(v) {
            if !w.contains_bond(&b) || !r.contains(&b) {
                continue;
            }
            let u = b.other_end(v);
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(u) {
                e.insert(v);
                queue.push_back(u);
            }
        }
    }
    None
}

/// Shortest path from `v1` to `v2` using only bonds of `r ∩ w`.
pub fn path_between(v1: Vertex, v2: Vertex, r: &Region, w: &Window) -> Result<Path, LatticeError> {
    path_to_any(v1, |v| v == v2, r, w).ok_or_else(|| LatticeError::Unreachable {
        from: v1.to_string(),
        to: v2.to_string(),
    })
}

/// Breadth-first search over window plaquettes, crossing only bonds of `r`.
pub fn dual_path_to_any(
    from: Plaquette,
    target: impl Fn(Plaquette) -> bool,
    r: &Region,
    w: &Window,
) -> Option<DualPath> {
    if !w.contains_plaquette(from) {
        return None;
    }
    let mut parent: BTreeMap<Plaquette, Plaquette> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    parent.insert(from, from);
    while let Some(p) = queue.pop_front() {
        if target(p) {
            let mut plaquettes = vec![p];
            let mut cur = p;
            while cur != from {
                cur = parent[&cur];
                plaquettes.push(cur);
            }
            plaquettes.reverse();
            return Some(DualPath { plaquettes });
        }
        for b in plaquette_bonds(p) {
            if !r.contains(&b) {
                continue;
            }
            let [a, c] = b.plaquettes();
            let q = if a == p { c } else { a };
            if !w.contains_plaquette(q) {
                continue;
            }
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(q) {
                e.insert(p);
                queue.push_back(q);
            }
        }
    }
    None
}

/// Shortest dual path from `p1` to `p2` crossing only bonds of `r`, within `w`.
pub fn dual_path_between(
    p1: Plaquette,
    p2: Plaquette,
    r: &Region,
    w: &Window,
) -> Result<DualPath, LatticeError> {
    dual_path_to_any(p1, |p| p == p2, r, w).ok_or_else(|| LatticeError::Unreachable {
        from: p1.to_string(),
        to: p2.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quadrant() -> Cone {
        Cone::new(Vertex::new(0, 0), (1, 0), (0, 1)).unwrap()
    }

    /// Outer cone bounded by y = ±x, inner cone with
    /// parallel edges and apex one unit higher.
    fn diagonal_pair() -> (Cone, Cone) {
        let outer = Cone::new(Vertex::new(0, 0), (1, 1), (-1, 1)).unwrap();
        (outer.translated(0, 1), outer)
    }

    #[test]
    fn star_of_origin() {
        let s: BTreeSet<_> = star_bonds(Vertex::new(0, 0)).into_iter().collect();
        let expect: BTreeSet<_> =
            [Bond::east(0, 0), Bond::east(-1, 0), Bond::north(0, 0), Bond::north(0, -1)].into();
        assert_eq!(s, expect);
    }

    #[test]
    fn plaquette_at_origin() {
        let s: BTreeSet<_> = plaquette_bonds(Plaquette::new(0, 0)).into_iter().collect();
        let expect: BTreeSet<_> =
            [Bond::east(0, 0), Bond::north(1, 0), Bond::east(0, 1), Bond::north(0, 0)].into();
        assert_eq!(s, expect);
        // closed loop of length 4
        let loop_ = Path::new(vec![
            Vertex::new(0, 0),
            Vertex::new(1, 0),
            Vertex::new(1, 1),
            Vertex::new(0, 1),
            Vertex::new(0, 0),
        ])
        .unwrap();
        assert!(loop_.is_closed());
        assert_eq!(loop_.bond_set(), expect);
    }

    #[test]
    fn star_plaquette_overlap_is_zero_or_two() {
        let w = Window::new(0, 5, 0, 5).unwrap();
        for v in w.vertices() {
            let s: BTreeSet<_> = star_bonds(v).into_iter().collect();
            for p in w.plaquettes() {
                let n = plaquette_bonds(p).iter().filter(|b| s.contains(b)).count();
                assert!(n == 0 || n == 2, "{v} {p} overlap {n}");
            }
        }
    }

    #[test]
    fn adjacent_plaquettes_share_one_bond() {
        let w = Window::new(0, 5, 0, 5).unwrap();
        for p in w.plaquettes() {
            for q in w.plaquettes() {
                let a: BTreeSet<_> = plaquette_bonds(p).into_iter().collect();
                let n = plaquette_bonds(q).iter().filter(|b| a.contains(b)).count();
                let adjacent = p.shared_bond(&q).is_some();
                if p == q {
                    assert_eq!(n, 4);
                } else if adjacent {
                    assert_eq!(n, 1);
                } else {
                    assert_eq!(n, 0);
                }
            }
        }
    }

    #[test]
    fn bond_plaquettes_contain_bond() {
        for b in Window::new(-2, 2, -2, 2).unwrap().bonds() {
            for p in b.plaquettes() {
                assert!(plaquette_bonds(p).contains(&b));
            }
        }
    }

    #[test]
    fn quadrant_membership() {
        let c = quadrant();
        assert!(c.contains_bond(&Bond::east(1, 1)));
        assert!(!c.contains_bond(&Bond::east(1, 0)));
        assert!(c.contains_bond(&Bond::north(1, 0)));
        assert!(!c.contains_bond(&Bond::north(0, 0)));
        assert!(!c.contains_bond(&Bond::east(-1, 1)));
    }

    #[test]
    fn cone_rejects_degenerate_directions() {
        let o = Vertex::new(0, 0);
        assert!(Cone::new(o, (1, 0), (2, 0)).is_err());
        assert!(Cone::new(o, (1, 0), (-1, 0)).is_err());
        assert!(Cone::new(o, (0, 1), (1, 0)).is_err());
        assert_eq!(Cone::new(o, (0, 0), (1, 0)), Err(LatticeError::ZeroDirection));
        let c = Cone::new(o, (2, 2), (-3, 3)).unwrap();
        assert_eq!((c.d1(), c.d2()), ((1, 1), (-1, 1)));
    }

    #[test]
    fn boundary_vertex_examples() {
        let c = quadrant();
        assert!(c.is_boundary_vertex(Vertex::new(3, 0)));
        assert!(c.is_boundary_vertex(Vertex::new(0, 0)));
        assert!(!c.is_boundary_vertex(Vertex::new(2, 2)));
        assert!(!c.is_boundary_vertex(Vertex::new(-3, -3)));
    }

    #[test]
    fn boundary_plaquette_extremes() {
        let c = quadrant();
        // all four bonds inside
        assert!(!c.is_boundary_plaquette(Plaquette::new(2, 2)));
        // no bond inside
        assert!(!c.is_boundary_plaquette(Plaquette::new(-3, -3)));
        // some inside
        assert!(c.is_boundary_plaquette(Plaquette::new(0, 0)));
    }

    #[test]
    fn three_by_three_census() {
        let w = Window::new(0, 2, 0, 2).unwrap();
        assert_eq!(w.bond_count(), 12);
        assert_eq!(w.bonds().len(), 12);
        assert_eq!(stars_in_region(&Region::All, &w).len(), 1);
        assert_eq!(plaquettes_in_region(&Region::All, &w).len(), 4);
        let w17 = Window::new(0, 3, 0, 2).unwrap();
        assert_eq!(w17.bond_count(), 17);
    }

    #[test]
    fn finite_star_region() {
        let v = Vertex::new(0, 0);
        let w = Window::new(-3, 3, -3, 3).unwrap();
        let r = Region::FiniteSet { bonds: star_bonds(v).into_iter().collect() };
        assert_eq!(stars_in_region(&r, &w), BTreeSet::from([v]));
        assert!(plaquettes_in_region(&r, &w).is_empty());
    }

    #[test]
    fn cone_and_complement_stars_are_disjoint() {
        let c = Cone::new(Vertex::new(0, 0), (2, 1), (-1, 2)).unwrap();
        let w = Window::new(-5, 5, -5, 5).unwrap();
        let a = stars_in_region(&Region::Cone { cone: c }, &w);
        let b = stars_in_region(&Region::Complement { cone: c }, &w);
        let all = stars_in_region(&Region::All, &w);
        assert!(a.is_disjoint(&b));
        assert!(a.union(&b).all(|v| all.contains(v)));
    }

    #[test]
    fn parallel_diagonal_pair_is_separated() {
        let (inner, outer) = diagonal_pair();
        let w = Window::new(-10, 10, -6, 14).unwrap();
        assert_eq!(is_distally_separated(&inner, &outer, &w).unwrap(), Separation::Separated);
    }

    #[test]
    fn equal_cones_are_not_separated() {
        let (_, outer) = diagonal_pair();
        let w = Window::new(-8, 8, -4, 12).unwrap();
        match is_distally_separated(&outer, &outer, &w).unwrap() {
            Separation::NotSeparated { witness } => {
                let bonds = witness.bonds();
                assert!(bonds.iter().any(|b| outer.contains_bond(b)));
                assert!(bonds.iter().any(|b| !outer.contains_bond(b)));
            }
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn apexes_outside_window_are_undetermined() {
        // The gap pinches near the apexes, which lie far below the window.
        let outer = Cone::new(Vertex::new(0, 0), (1, 2), (-1, 2)).unwrap();
        let inner = Cone::new(Vertex::new(0, 1), (1, 2), (-1, 2)).unwrap();
        let w = Window::new(-2, 2, 30, 34).unwrap();
        assert!(matches!(
            is_distally_separated(&inner, &outer, &w).unwrap(),
            Separation::Undetermined { .. }
        ));
    }

    #[test]
    fn non_nested_is_error() {
        let (inner, outer) = diagonal_pair();
        let w = Window::new(-6, 6, -2, 10).unwrap();
        assert!(matches!(is_distally_separated(&outer, &inner, &w), Err(LatticeError::NotNested(_))));
    }

    #[test]
    fn empty_and_adjacent_paths() {
        let w = Window::new(-3, 3, -3, 3).unwrap();
        let v = Vertex::new(1, 1);
        let p = path_between(v, v, &Region::All, &w).unwrap();
        assert!(p.is_empty());
        let q = path_between(v, Vertex::new(2, 1), &Region::All, &w).unwrap();
        assert_eq!(q.bonds(), vec![Bond::east(1, 1)]);
    }

    #[test]
    fn excluded_strip_is_unreachable() {
        let w = Window::new(-3, 3, -3, 3).unwrap();
        // remove every bond touching the column x = 0
        let bonds = w
            .bonds()
            .into_iter()
            .filter(|b| {
                let (p, q) = b.endpoints();
                p.x != 0 && q.x != 0
            })
            .collect();
        let r = Region::FiniteSet { bonds };
        let err = path_between(Vertex::new(-2, 0), Vertex::new(2, 0), &r, &w).unwrap_err();
        assert!(matches!(err, LatticeError::Unreachable { .. }));
        let p0 = Plaquette::new(-2, 0);
        let dr = Region::FiniteSet { bonds: BTreeSet::new() };
        assert!(dual_path_between(p0, Plaquette::new(1, 0), &dr, &w).is_err());
    }

    #[test]
    fn dual_path_crossings() {
        let w = Window::new(-3, 3, -3, 3).unwrap();
        let d = dual_path_between(Plaquette::new(0, 0), Plaquette::new(2, 0), &Region::All, &w).unwrap();
        assert_eq!(d.crossed_bonds(), vec![Bond::north(1, 0), Bond::north(2, 0)]);
    }

    #[test]
    fn bfs_is_deterministic_and_lexicographic() {
        let w = Window::new(-3, 3, -3, 3).unwrap();
        let a = path_between(Vertex::new(0, 0), Vertex::new(1, 1), &Region::All, &w).unwrap();
        let b = path_between(Vertex::new(0, 0), Vertex::new(1, 1), &Region::All, &w).unwrap();
        assert_eq!(a, b);
        // first explored neighbour of (0,0) is (0,-1) (bond N@(0,-1)), then (-1,0), (1,0), (0,1)
        assert_eq!(a.vertices()[1], Vertex::new(1, 0));
    }

    proptest! {
        #[test]
        fn membership_is_scale_invariant(
            ax in -4i64..4, ay in -4i64..4,
            d1 in (-3i64..=3, -3i64..=3), d2 in (-3i64..=3, -3i64..=3),
            k in 1i64..6, bx in -6i64..6, by in -6i64..6, north: bool,
        ) {
            prop_assume!(d1.0 * d2.1 - d1.1 * d2.0 > 0);
            let apex = Vertex::new(ax, ay);
            let b = if north { Bond::north(bx, by) } else { Bond::east(bx, by) };
            let (p0, p1) = b.endpoints();
            let base = sector_meets_open_segment(apex, d1, d2, p0, p1);
            let scaled = sector_meets_open_segment(apex, (k * d1.0, k * d1.1), (k * d2.0, k * d2.1), p0, p1);
            prop_assert_eq!(base, scaled);
            let c = Cone::new(apex, d1, d2).unwrap();
            let ck = Cone::new(apex, (k * d1.0, k * d1.1), (k * d2.0, k * d2.1)).unwrap();
            prop_assert_eq!(c, ck);
            prop_assert_eq!(c.contains_bond(&b), base);
        }
    }

    #[test]
    fn boundary_census_by_brute_force() {
        let w = Window::new(-5, 5, -5, 5).unwrap();
        for c in [quadrant(), diagonal_pair().1, Cone::new(Vertex::new(1, 0), (2, 1), (-1, 2)).unwrap()] {
            for v in w.interior_vertices() {
                let n = star_bonds(v).iter().filter(|b| c.contains_bond(b)).count();
                let mixed = n > 0 && n < 4;
                assert!(!mixed || c.is_boundary_vertex(v), "{v}");
            }
            for p in w.plaquettes() {
                let n = plaquette_bonds(p).iter().filter(|b| c.contains_bond(b)).count();
                assert_eq!(c.is_boundary_plaquette(p), n > 0 && n < 4);
            }
        }
    }

    #[test]
    fn serde_shapes() {
        let c = quadrant();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"apex":{"x":0,"y":0},"d1":[1,0],"d2":[0,1]}"#);
        let back: Cone = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"apex":{"x":0,"y":0},"d1":[1,0],"d2":[1,0]}"#;
        assert!(serde_json::from_str::<Cone>(bad).is_err());
        let b = serde_json::to_string(&Bond::north(2, -1)).unwrap();
        assert_eq!(b, r#"{"x":2,"y":-1,"dir":"N"}"#);
        assert!(serde_json::from_str::<Window>(r#"{"xmin":1,"xmax":1,"ymin":0,"ymax":2}"#).is_err());
    }
}
