//! Canonical forms `phase · F₁ F̂ F₂ Ω` relative to a nested cone pair.
//!
//! The gap `Λ₀ = Λ₂ \ Λ₁` carries a fixed scaffold Γ of connector strings.
//! Every site of the lattice falls in one of three classes:
//!
//! * class 1: touches a bond of `Λ₁`;
//! * class 2: touches a bond of `Λ₂ᶜ` (and none of `Λ₁`);
//! * class 0: all four bonds lie in `Λ₀`; within the window these are the
//!   interior labels `I`.
//!
//! A vector `PΩ` depends on `P` only through its syndrome and an overall
//! phase, so a canonical form is found by routing excitations: class-0
//! charges are moved onto the scaffold, the parity of what must cross the gap
//! is carried by `ξ₁ᵇ` / `ξ₂ᵇ`, and the rest is paired up inside `Λ₁` or
//! `Λ₂ᶜ`. The remainder `Q† P` is then a stabilizer product, and its phase is
//! the phase of the form.

use std::collections::{BTreeMap, BTreeSet};

use num::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{
    dual_path_to_any, is_distally_separated, path_to_any, plaquette_bonds, star_bonds, Bond, Cone, DualPath,
    LatticeError, Path, Plaquette, Region, Separation, Site, Vertex, Window,
};
use crate::pauli::{
    express_as_plaquette_sum, express_as_star_sum, plaquette_op, product, star_op, string_from_dual_path,
    string_from_path, PauliOp, Phase, Syndrome,
};
use crate::vacuum::{inner, states_equal, ExcitationVector, GaussianRational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("cones are not distally separated on the window: {0:?}")]
    NotSeparated(Separation),
    #[error("site {0} touches both the inner cone and the outer complement")]
    ContactSite(Site),
    #[error("no route through the gap: {0}")]
    NoGapRoute(String),
    #[error("cannot route excitation: {0}")]
    NotRoutable(String),
    #[error("operator acts on bond {0} outside the window")]
    OutsideWindow(Bond),
    #[error("scaffold group has 2^{0} elements, above the cap {1}")]
    CapExceeded(usize, usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal certificate failed: {0}")]
    Certificate(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Which part of the nested pair a site belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteClass {
    Inner,
    Outer,
    Gap,
}

/// What a scaffold string connects.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum GammaRole {
    /// Primal string across the gap, from `∂Λ₁` to `∂Λ₂`.
    ChargeBridge,
    /// Dual string across the gap.
    FluxBridge,
    /// The string attached to an interior vertex: to `∂Λ₁` for the anchor,
    /// to the anchor otherwise.
    Vertex { vertex: Vertex },
    Plaquette { plaquette: Plaquette },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "path", rename_all = "snake_case")]
pub enum Route {
    Primal(Path),
    Dual(DualPath),
}

impl Route {
    pub fn op(&self) -> PauliOp {
        match self {
            Route::Primal(p) => string_from_path(p),
            Route::Dual(d) => string_from_dual_path(d),
        }
    }

    pub fn bonds(&self) -> BTreeSet<Bond> {
        match self {
            Route::Primal(p) => p.bond_set(),
            Route::Dual(d) => d.crossed_set(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaElement {
    pub role: GammaRole,
    pub route: Route,
}

/// Endpoint preference used when the construction has a free choice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    #[default]
    Smallest,
    Largest,
}

/// The scaffold Γ for a nested pair `Λ₁ ⊂ Λ₂` on a window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scaffold {
    pub inner: Cone,
    pub outer: Cone,
    pub window: Window,
    pub preference: Preference,
    pub interior_vertices: Vec<Vertex>,
    pub interior_plaquettes: Vec<Plaquette>,
    pub anchor_vertex: Option<Vertex>,
    pub anchor_plaquette: Option<Plaquette>,
    /// Γ in its fixed order: the two bridges, then the vertex anchor string,
    /// the plaquette anchor string, the other vertex strings, the other
    /// plaquette strings.
    pub elements: Vec<GammaElement>,
}

pub fn inner_region(c1: &Cone) -> Region {
    Region::Cone { cone: *c1 }
}

pub fn outer_complement(c2: &Cone) -> Region {
    Region::Complement { cone: *c2 }
}

pub fn gap_region(c1: &Cone, c2: &Cone) -> Region {
    Region::Gap { inner: *c1, outer: *c2 }
}

fn classify_bonds(bonds: [Bond; 4], c1: &Cone, c2: &Cone) -> SiteClass {
    if bonds.iter().any(|b| c1.contains_bond(b)) {
        SiteClass::Inner
    } else if bonds.iter().any(|b| !c2.contains_bond(b)) {
        SiteClass::Outer
    } else {
        SiteClass::Gap
    }
}

fn pick<T: Copy>(items: &[T], pref: Preference) -> Option<T> {
    match pref {
        Preference::Smallest => items.first().copied(),
        Preference::Largest => items.last().copied(),
    }
}

fn ordered<T: Clone>(items: &[T], pref: Preference) -> Vec<T> {
    let mut v = items.to_vec();
    if pref == Preference::Largest {
        v.reverse();
    }
    v
}

impl Scaffold {
    pub fn vertex_class(&self, v: Vertex) -> SiteClass {
        classify_bonds(star_bonds(v), &self.inner, &self.outer)
    }

    pub fn plaquette_class(&self, p: Plaquette) -> SiteClass {
        classify_bonds(plaquette_bonds(p), &self.inner, &self.outer)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn ops(&self) -> Vec<PauliOp> {
        self.elements.iter().map(|e| e.route.op()).collect()
    }

    pub fn index_of(&self, role: &GammaRole) -> Option<usize> {
        self.elements.iter().position(|e| &e.role == role)
    }

    /// Ordered product of the Γ strings selected by `label` (indices ascending).
    pub fn group_element(&self, label: &BTreeSet<usize>) -> PauliOp {
        let ops: Vec<PauliOp> = label.iter().map(|&i| self.elements[i].route.op()).collect();
        product(ops.iter())
    }

    pub fn regions(&self) -> (Region, Region, Region) {
        (inner_region(&self.inner), gap_region(&self.inner, &self.outer), outer_complement(&self.outer))
    }
}

/// Build Γ with the smallest admissible endpoints and anchors.
pub fn build_scaffold(c1: &Cone, c2: &Cone, w: &Window) -> Result<Scaffold, CanonicalError> {
    build_scaffold_with(c1, c2, w, Preference::Smallest)
}

pub fn build_scaffold_with(c1: &Cone, c2: &Cone, w: &Window, pref: Preference) -> Result<Scaffold, CanonicalError> {
    match is_distally_separated(c1, c2, w)? {
        Separation::Separated => {}
        other => return Err(CanonicalError::NotSeparated(other)),
    }
    let vclass = |v: Vertex| classify_bonds(star_bonds(v), c1, c2);
    let pclass = |p: Plaquette| classify_bonds(plaquette_bonds(p), c1, c2);
    let touches_both = |bonds: [Bond; 4]| {
        bonds.iter().any(|b| c1.contains_bond(b)) && bonds.iter().any(|b| !c2.contains_bond(b))
    };
    for v in w.vertices() {
        if touches_both(star_bonds(v)) {
            return Err(CanonicalError::ContactSite(Site::Star { vertex: v }));
        }
    }
    for p in w.plaquettes() {
        if touches_both(plaquette_bonds(p)) {
            return Err(CanonicalError::ContactSite(Site::Plaquette { plaquette: p }));
        }
    }
    let gap = gap_region(c1, c2);

    let starts: Vec<Vertex> = w
        .vertices()
        .into_iter()
        .filter(|v| vclass(*v) == SiteClass::Inner && c1.is_boundary_vertex(*v))
        .collect();
    let xi1b = ordered(&starts, pref)
        .into_iter()
        .find_map(|s| path_to_any(s, |u| vclass(u) == SiteClass::Outer, &gap, w))
        .ok_or_else(|| CanonicalError::NoGapRoute("no gap path from the inner to the outer boundary".into()))?;
    let pstarts: Vec<Plaquette> = w
        .plaquettes()
        .into_iter()
        .filter(|p| pclass(*p) == SiteClass::Inner && c1.is_boundary_plaquette(*p))
        .collect();
    let xi2b = ordered(&pstarts, pref)
        .into_iter()
        .find_map(|s| dual_path_to_any(s, |q| pclass(q) == SiteClass::Outer, &gap, w))
        .ok_or_else(|| CanonicalError::NoGapRoute("no gap dual path from the inner to the outer boundary".into()))?;

    let iv: Vec<Vertex> = w.interior_vertices().into_iter().filter(|v| vclass(*v) == SiteClass::Gap).collect();
    let ip: Vec<Plaquette> = w.plaquettes().into_iter().filter(|p| pclass(*p) == SiteClass::Gap).collect();
    let av = pick(&iv, pref);
    let ap = pick(&ip, pref);

    let mut elements = vec![
        GammaElement { role: GammaRole::ChargeBridge, route: Route::Primal(xi1b) },
        GammaElement { role: GammaRole::FluxBridge, route: Route::Dual(xi2b) },
    ];
    if let Some(v) = av {
        let path = path_to_any(v, |u| vclass(u) == SiteClass::Inner, &gap, w)
            .ok_or_else(|| CanonicalError::NoGapRoute(format!("anchor vertex {v} cannot reach the inner cone")))?;
        elements.push(GammaElement { role: GammaRole::Vertex { vertex: v }, route: Route::Primal(path) });
    }
    if let Some(p) = ap {
        let path = dual_path_to_any(p, |q| pclass(q) == SiteClass::Inner, &gap, w)
            .ok_or_else(|| CanonicalError::NoGapRoute(format!("anchor plaquette {p} cannot reach the inner cone")))?;
        elements.push(GammaElement { role: GammaRole::Plaquette { plaquette: p }, route: Route::Dual(path) });
    }
    for &v in &iv {
        let anchor = av.expect("I contains a vertex");
        if v == anchor {
            continue;
        }
        let path = path_to_any(v, |u| u == anchor, &gap, w)
            .ok_or_else(|| CanonicalError::NoGapRoute(format!("{v} cannot reach anchor {anchor}")))?;
        elements.push(GammaElement { role: GammaRole::Vertex { vertex: v }, route: Route::Primal(path) });
    }
    for &p in &ip {
        let anchor = ap.expect("I contains a plaquette");
        if p == anchor {
            continue;
        }
        let path = dual_path_to_any(p, |q| q == anchor, &gap, w)
            .ok_or_else(|| CanonicalError::NoGapRoute(format!("{p} cannot reach anchor {anchor}")))?;
        elements.push(GammaElement { role: GammaRole::Plaquette { plaquette: p }, route: Route::Dual(path) });
    }
    Ok(Scaffold {
        inner: *c1,
        outer: *c2,
        window: *w,
        preference: pref,
        interior_vertices: iv,
        interior_plaquettes: ip,
        anchor_vertex: av,
        anchor_plaquette: ap,
        elements,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct F0Element {
    pub label: BTreeSet<usize>,
    pub op: PauliOp,
}

/// All `2^|Γ|` subset products of the scaffold strings.
pub fn f0_group_elements(g: &Scaffold, cap: usize) -> Result<Vec<F0Element>, CanonicalError> {
    let n = g.len();
    if n >= usize::BITS as usize || (1usize << n) > cap {
        return Err(CanonicalError::CapExceeded(n, cap));
    }
    Ok((0..1usize << n)
        .map(|mask| {
            let label: BTreeSet<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            F0Element { op: g.group_element(&label), label }
        })
        .collect())
}

pub const DEFAULT_F0_CAP: usize = 1 << 12;

/// `dim span 𝔉₀ Ω`, as the exact rank of the Gram matrix of the group.
pub fn h0_dimension(g: &Scaffold) -> Result<usize, CanonicalError> {
    let ops: Vec<PauliOp> = f0_group_elements(g, DEFAULT_F0_CAP)?.into_iter().map(|e| e.op).collect();
    Ok(crate::vacuum::gram(&ops).rank)
}

/// `phase · f1 · fhat · f2`, with `fhat` the Γ-product selected by `label`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub phase: Phase,
    pub f1: PauliOp,
    pub fhat: PauliOp,
    pub label: BTreeSet<usize>,
    pub f2: PauliOp,
}

impl CanonicalForm {
    pub fn vacuum() -> Self {
        CanonicalForm {
            phase: Phase::ONE,
            f1: PauliOp::identity(),
            fhat: PauliOp::identity(),
            label: BTreeSet::new(),
            f2: PauliOp::identity(),
        }
    }

    /// The operator `phase · f1 · fhat · f2`.
    pub fn full(&self) -> PauliOp {
        self.f1.multiply(&self.fhat).multiply(&self.f2).scaled(self.phase)
    }
}

/// How excitations are routed; every choice yields a valid form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Routing {
    /// Split off the parts of `P` inside `Λ₁` and `Λ₂ᶜ` before routing.
    pub peel: bool,
    /// Pair excitations starting from the largest site instead of the smallest.
    pub reverse: bool,
}

impl Routing {
    pub const STANDARD: Routing = Routing { peel: true, reverse: false };
    pub const ALTERNATE: Routing = Routing { peel: false, reverse: true };
}

fn restrict(p: &PauliOp, region: &Region) -> PauliOp {
    PauliOp::new(
        Phase::ONE,
        p.x.iter().filter(|b| region.contains(b)).copied().collect(),
        p.z.iter().filter(|b| region.contains(b)).copied().collect(),
    )
}

/// Pair up `sites` with strings inside `region ∩ w`.
fn pair_charges(
    sites: &BTreeSet<Vertex>,
    region: &Region,
    w: &Window,
    reverse: bool,
) -> Result<Vec<Path>, CanonicalError> {
    let mut left = sites.clone();
    let mut out = Vec::new();
    while let Some(&s) = if reverse { left.iter().next_back() } else { left.iter().next() } {
        left.remove(&s);
        let path = path_to_any(s, |u| left.contains(&u), region, w)
            .ok_or_else(|| CanonicalError::NotRoutable(format!("charge at {s} has no partner in {region:?}")))?;
        left.remove(&path.end().expect("non-empty"));
        out.push(path);
    }
    Ok(out)
}

fn pair_fluxes(
    sites: &BTreeSet<Plaquette>,
    region: &Region,
    w: &Window,
    reverse: bool,
) -> Result<Vec<DualPath>, CanonicalError> {
    let mut left = sites.clone();
    let mut out = Vec::new();
    while let Some(&s) = if reverse { left.iter().next_back() } else { left.iter().next() } {
        left.remove(&s);
        let path = dual_path_to_any(s, |q| left.contains(&q), region, w)
            .ok_or_else(|| CanonicalError::NotRoutable(format!("flux at {s} has no partner in {region:?}")))?;
        left.remove(&path.end().expect("non-empty"));
        out.push(path);
    }
    Ok(out)
}

/// Strings in `region` whose product has syndrome `syn`.
pub fn pairing_operator(syn: &Syndrome, region: &Region, w: &Window, reverse: bool) -> Result<PauliOp, CanonicalError> {
    let z: Vec<PauliOp> = pair_charges(&syn.charges, region, w, reverse)?.iter().map(string_from_path).collect();
    let x: Vec<PauliOp> = pair_fluxes(&syn.fluxes, region, w, reverse)?.iter().map(string_from_dual_path).collect();
    Ok(product(z.iter()).multiply(&product(x.iter())))
}

fn toggle(label: &mut BTreeSet<usize>, i: usize) {
    if !label.remove(&i) {
        label.insert(i);
    }
}

/// Γ label for a syndrome: absorbs gap excitations and fixes the parity of
/// what has to cross to the outer side.
fn route_label(g: &Scaffold, syn: &Syndrome) -> Result<BTreeSet<usize>, CanonicalError> {
    let mut label = BTreeSet::new();
    let c0: Vec<Vertex> = syn.charges.iter().copied().filter(|v| g.vertex_class(*v) == SiteClass::Gap).collect();
    for &c in &c0 {
        if Some(c) == g.anchor_vertex {
            continue;
        }
        let i = g
            .index_of(&GammaRole::Vertex { vertex: c })
            .ok_or_else(|| CanonicalError::NotRoutable(format!("gap charge at {c} lies outside the window interior")))?;
        toggle(&mut label, i);
    }
    if c0.len() % 2 == 1 {
        let v = g.anchor_vertex.expect("a gap charge implies an anchor");
        toggle(&mut label, g.index_of(&GammaRole::Vertex { vertex: v }).expect("anchor string"));
    }
    let f0: Vec<Plaquette> = syn.fluxes.iter().copied().filter(|p| g.plaquette_class(*p) == SiteClass::Gap).collect();
    for &p in &f0 {
        if Some(p) == g.anchor_plaquette {
            continue;
        }
        let i = g
            .index_of(&GammaRole::Plaquette { plaquette: p })
            .ok_or_else(|| CanonicalError::NotRoutable(format!("gap flux at {p} lies outside the window interior")))?;
        toggle(&mut label, i);
    }
    if f0.len() % 2 == 1 {
        let p = g.anchor_plaquette.expect("a gap flux implies an anchor");
        toggle(&mut label, g.index_of(&GammaRole::Plaquette { plaquette: p }).expect("anchor string"));
    }
    let residual = syn.symmetric_difference(&g.group_element(&label).syndrome());
    let outer_charges = residual.charges.iter().filter(|v| g.vertex_class(**v) == SiteClass::Outer).count();
    let outer_fluxes = residual.fluxes.iter().filter(|p| g.plaquette_class(**p) == SiteClass::Outer).count();
    if outer_charges % 2 == 1 {
        toggle(&mut label, 0);
    }
    if outer_fluxes % 2 == 1 {
        toggle(&mut label, 1);
    }
    Ok(label)
}

fn split_by_class(g: &Scaffold, syn: &Syndrome) -> Result<(Syndrome, Syndrome), CanonicalError> {
    let mut inner = Syndrome::default();
    let mut outer = Syndrome::default();
    for &v in &syn.charges {
        match g.vertex_class(v) {
            SiteClass::Inner => inner.charges.insert(v),
            SiteClass::Outer => outer.charges.insert(v),
            SiteClass::Gap => return Err(CanonicalError::Certificate(format!("gap charge {v} left after routing"))),
        };
    }
    for &p in &syn.fluxes {
        match g.plaquette_class(p) {
            SiteClass::Inner => inner.fluxes.insert(p),
            SiteClass::Outer => outer.fluxes.insert(p),
            SiteClass::Gap => return Err(CanonicalError::Certificate(format!("gap flux {p} left after routing"))),
        };
    }
    Ok((inner, outer))
}

/// Canonical form of `PΩ` with the standard routing.
pub fn canonicalize(p: &PauliOp, g: &Scaffold) -> Result<CanonicalForm, CanonicalError> {
    canonicalize_with(p, g, Routing::STANDARD)
}

pub fn canonicalize_with(p: &PauliOp, g: &Scaffold, routing: Routing) -> Result<CanonicalForm, CanonicalError> {
    if let Some(b) = p.support().into_iter().find(|b| !g.window.contains_bond(b)) {
        return Err(CanonicalError::OutsideWindow(b));
    }
    let (r1, r0, r2) = g.regions();
    let (p1, p2, rest) = if routing.peel {
        (restrict(p, &r1), restrict(p, &r2), restrict(p, &r0))
    } else {
        (PauliOp::identity(), PauliOp::identity(), p.unsigned())
    };
    let syn = rest.syndrome();
    let label = route_label(g, &syn)?;
    let fhat = g.group_element(&label);
    let residual = syn.symmetric_difference(&fhat.syndrome());
    let (s1, s2) = split_by_class(g, &residual)?;
    let g1 = pairing_operator(&s1, &r1, &g.window, routing.reverse)?;
    let g2 = pairing_operator(&s2, &r2, &g.window, routing.reverse)?;
    let f1 = p1.multiply(&g1).unsigned();
    let f2 = g2.multiply(&p2).unsigned();
    let q = f1.multiply(&fhat).multiply(&f2);
    let remainder = q.adjoint().multiply(p);
    express_as_star_sum(&remainder.x)
        .and_then(|_| express_as_plaquette_sum(&remainder.z))
        .map_err(|e| CanonicalError::Certificate(format!("remainder is not a stabilizer product: {e}")))?;
    Ok(CanonicalForm { phase: remainder.lambda, f1, fhat, label, f2 })
}

/// Check all defining properties of a canonical form of `p`.
pub fn verify_canonical(p: &PauliOp, g: &Scaffold, form: &CanonicalForm) -> Result<(), String> {
    let (r1, _, r2) = g.regions();
    if !form.f1.supported_in(|b| r1.contains(b)) {
        return Err(format!("f1 = {} leaves the inner cone", form.f1));
    }
    if !form.f2.supported_in(|b| r2.contains(b)) {
        return Err(format!("f2 = {} enters the outer cone", form.f2));
    }
    if form.label.iter().any(|&i| i >= g.len()) || g.group_element(&form.label) != form.fhat {
        return Err(format!("fhat = {} is not the Γ-product of its label", form.fhat));
    }
    match states_equal(p, &form.full()) {
        Some(Phase::ONE) => Ok(()),
        other => Err(format!("state certificate {other:?} instead of +1")),
    }
}

/// `fhat = ±fhat'` for two forms of the same vector over the same scaffold.
pub fn canonical_uniqueness_check(a: &CanonicalForm, b: &CanonicalForm) -> Result<bool, CanonicalError> {
    if states_equal(&a.full(), &b.full()) != Some(Phase::ONE) {
        return Err(CanonicalError::Precondition("the two forms represent different vectors".into()));
    }
    Ok(a.fhat.unsigned() == b.fhat.unsigned() && (a.fhat.lambda * b.fhat.lambda.conj()).is_real())
}

/// Scaffold-independent content of `fhat`: its excitations at gap sites and
/// the parities of its excitations on the outer side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapSignature {
    pub charges: BTreeSet<Vertex>,
    pub fluxes: BTreeSet<Plaquette>,
    pub outer_charge_parity: bool,
    pub outer_flux_parity: bool,
}

pub fn gap_signature(form: &CanonicalForm, g: &Scaffold) -> GapSignature {
    let syn = form.fhat.syndrome();
    GapSignature {
        charges: syn.charges.iter().copied().filter(|v| g.vertex_class(*v) == SiteClass::Gap).collect(),
        fluxes: syn.fluxes.iter().copied().filter(|p| g.plaquette_class(*p) == SiteClass::Gap).collect(),
        outer_charge_parity: syn.charges.iter().filter(|v| g.vertex_class(**v) == SiteClass::Outer).count() % 2 == 1,
        outer_flux_parity: syn.fluxes.iter().filter(|p| g.plaquette_class(**p) == SiteClass::Outer).count() % 2 == 1,
    }
}

/// Move a string lying outside `Λ` with endpoints on `∂Λ` to one inside `Λ`
/// with the same endpoints.
pub fn pull_in(route: &Route, c: &Cone, w: &Window) -> Result<Route, CanonicalError> {
    let inside = Region::Cone { cone: *c };
    if route.bonds().iter().all(|b| inside.contains(b)) {
        return Ok(route.clone());
    }
    match route {
        Route::Primal(p) => {
            let (s, e) = (p.start().expect("non-empty"), p.end().expect("non-empty"));
            for v in [s, e] {
                if !c.is_boundary_vertex(v) {
                    return Err(CanonicalError::Precondition(format!("endpoint {v} is not a boundary vertex")));
                }
            }
            let q = crate::lattice::path_between(s, e, &inside, w)?;
            Ok(Route::Primal(q))
        }
        Route::Dual(d) => {
            let (s, e) = (d.start().expect("non-empty"), d.end().expect("non-empty"));
            for p in [s, e] {
                if !c.is_boundary_plaquette(p) {
                    return Err(CanonicalError::Precondition(format!("endpoint {p} is not a boundary plaquette")));
                }
            }
            let q = crate::lattice::dual_path_between(s, e, &inside, w)?;
            Ok(Route::Dual(q))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ClassifyOutcome {
    /// A stabilizer inside `Λᶜ` that anticommutes with the input.
    Witness { stabilizer: PauliOp, site: Site },
    /// A `Λ`-supported operator with `input·Ω = phase·rep·Ω`.
    InRepresentative { rep: PauliOp, phase: Phase, pulled: Vec<Route> },
}

/// Decide whether a product of strings in `Λᶜ` is detected by a stabilizer in
/// `Λᶜ`, or else represent its vector by an operator inside `Λ`.
///
/// Excitations sitting at stars or plaquettes contained in `Λᶜ` give a
/// witness. Otherwise every excitation sits on `∂Λ`; they are paired by
/// strings in `Λᶜ`, and each string is pulled into `Λ`.
pub fn classify_excitation(p: &PauliOp, c: &Cone, w: &Window) -> Result<ClassifyOutcome, CanonicalError> {
    let outside = Region::Complement { cone: *c };
    if let Some(b) = p.support().into_iter().find(|b| !outside.contains(b)) {
        return Err(CanonicalError::Precondition(format!("bond {b} of the input lies in the cone")));
    }
    let syn = p.syndrome();
    for &v in &syn.charges {
        if star_bonds(v).iter().all(|b| outside.contains(b)) {
            return Ok(ClassifyOutcome::Witness { stabilizer: star_op(v), site: Site::Star { vertex: v } });
        }
    }
    for &q in &syn.fluxes {
        if plaquette_bonds(q).iter().all(|b| outside.contains(b)) {
            return Ok(ClassifyOutcome::Witness {
                stabilizer: plaquette_op(q),
                site: Site::Plaquette { plaquette: q },
            });
        }
    }
    let mut pulled = Vec::new();
    for path in pair_charges(&syn.charges, &outside, w, false)? {
        pulled.push(pull_in(&Route::Primal(path), c, w)?);
    }
    for path in pair_fluxes(&syn.fluxes, &outside, w, false)? {
        pulled.push(pull_in(&Route::Dual(path), c, w)?);
    }
    let ops: Vec<PauliOp> = pulled.iter().map(Route::op).collect();
    let rep = product(ops.iter());
    let phase = states_equal(p, &rep)
        .ok_or_else(|| CanonicalError::Certificate("pulled-in representative differs in syndrome".into()))?;
    Ok(ClassifyOutcome::InRepresentative { rep, phase, pulled })
}

pub fn verify_outcome(p: &PauliOp, c: &Cone, outcome: &ClassifyOutcome) -> bool {
    match outcome {
        ClassifyOutcome::Witness { stabilizer, site } => {
            site.bonds().iter().all(|b| !c.contains_bond(b))
                && *stabilizer == site_op(site)
                && !stabilizer.commutes(p)
        }
        ClassifyOutcome::InRepresentative { rep, phase, .. } => {
            rep.supported_in(|b| c.contains_bond(b)) && states_equal(p, rep) == Some(*phase)
        }
    }
}

fn site_op(s: &Site) -> PauliOp {
    match s {
        Site::Star { vertex } => star_op(*vertex),
        Site::Plaquette { plaquette } => plaquette_op(*plaquette),
    }
}

/// `AΩ + iBΩ = λPΩ` with `A` (resp. `B`) a real combination of self-adjoint
/// operators inside (resp. outside) the cone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseDecomposition {
    pub a: ExcitationVector,
    pub b: ExcitationVector,
}

fn first_anticommuting_stabilizer(p: &PauliOp, c: &Cone, w: &Window) -> Option<PauliOp> {
    let inside = Region::Cone { cone: *c };
    let stars = w.interior_vertices().into_iter().map(|vertex| Site::Star { vertex });
    let plaqs = w.plaquettes().into_iter().map(|plaquette| Site::Plaquette { plaquette });
    stars
        .chain(plaqs)
        .filter(|s| inside.contains_site(s))
        .map(|s| site_op(&s))
        .find(|t| !t.commutes(p))
}

fn real(x: &num::BigRational) -> GaussianRational {
    GaussianRational::new(x.clone(), num::BigRational::zero())
}

/// The `Λᶜ` mirror of `P`: `c·M` with `M` a product of strings outside the
/// cone and `PΩ = c·MΩ`.
pub fn mirror(p: &PauliOp, c: &Cone, w: &Window) -> Result<PauliOp, CanonicalError> {
    let outside = Region::Complement { cone: *c };
    let m = pairing_operator(&p.syndrome(), &outside, w, false)?;
    let ph = states_equal(p, &m).ok_or_else(|| CanonicalError::Certificate("mirror syndrome mismatch".into()))?;
    Ok(m.scaled(ph))
}

pub fn dense_decompose(
    lambda: &GaussianRational,
    p: &PauliOp,
    c: &Cone,
    w: &Window,
) -> Result<DenseDecomposition, CanonicalError> {
    if !p.supported_in(|b| c.contains_bond(b)) {
        return Err(CanonicalError::Precondition(format!("{p} is not supported in the cone")));
    }
    let (alpha, beta) = (&lambda.re, &lambda.im);
    let mut a = ExcitationVector::zero();
    let mut b = ExcitationVector::zero();
    let anti = first_anticommuting_stabilizer(p, c, w);
    let neg = |x: &num::BigRational| real(&-x.clone());
    if p.is_self_adjoint() {
        a.push(real(alpha), p.clone());
        if !beta.is_zero() {
            match &anti {
                Some(t) => a.push(neg(beta), t.multiply(p).scaled(Phase::I)),
                None => b.push(real(beta), mirror(p, c, w)?),
            }
        }
    } else {
        a.push(real(beta), p.scaled(Phase::I));
        if !alpha.is_zero() {
            match &anti {
                Some(t) => a.push(neg(alpha), t.multiply(p)),
                None => b.push(real(alpha), mirror(p, c, w)?.scaled(Phase::MINUS_I)),
            }
        }
    }
    a.terms.retain(|(k, _)| !k.is_zero());
    b.terms.retain(|(k, _)| !k.is_zero());
    Ok(DenseDecomposition { a, b })
}

/// Every term real and self-adjoint, supports on the correct side, and
/// `‖A + iB − λP‖² = 0` exactly.
pub fn verify_decomposition(d: &DenseDecomposition, lambda: &GaussianRational, p: &PauliOp, c: &Cone) -> bool {
    let terms_ok = |v: &ExcitationVector, inside: bool| {
        v.terms.iter().all(|(k, op)| {
            k.is_real() && op.is_self_adjoint() && op.supported_in(|b| c.contains_bond(b) == inside)
        })
    };
    let lhs = d.a.plus(&d.b.scaled(&GaussianRational::i()));
    let rhs = ExcitationVector::term(lambda.clone(), p.clone());
    let diff = lhs.minus(&rhs);
    terms_ok(&d.a, true) && terms_ok(&d.b, false) && inner(&diff, &diff).is_zero()
}

/// Random products of up to `max_strings` random-walk strings inside `w`.
pub fn random_string_product<R: rand::Rng>(w: &Window, max_strings: usize, max_len: usize, rng: &mut R) -> PauliOp {
    let k = rng.random_range(1..=max_strings);
    let mut op = PauliOp::identity();
    for _ in 0..k {
        let len = rng.random_range(1..=max_len);
        let s = if rng.random_bool(0.5) {
            Route::Primal(random_walk(w, len, rng))
        } else {
            Route::Dual(random_dual_walk(w, len, rng))
        };
        op = op.multiply(&s.op());
    }
    op
}

pub fn random_walk<R: rand::Rng>(w: &Window, len: usize, rng: &mut R) -> Path {
    let verts = w.vertices();
    let mut cur = verts[rng.random_range(0..verts.len())];
    let mut out = vec![cur];
    for _ in 0..len {
        let steps: Vec<Vertex> = star_bonds(cur)
            .iter()
            .filter(|b| w.contains_bond(b))
            .map(|b| b.other_end(cur))
            .collect();
        cur = steps[rng.random_range(0..steps.len())];
        out.push(cur);
    }
    Path::new(out).expect("walk steps are adjacent")
}

pub fn random_dual_walk<R: rand::Rng>(w: &Window, len: usize, rng: &mut R) -> DualPath {
    let plaqs = w.plaquettes();
    let mut cur = plaqs[rng.random_range(0..plaqs.len())];
    let mut out = vec![cur];
    for _ in 0..len {
        let steps: Vec<Plaquette> = plaquette_bonds(cur)
            .iter()
            .flat_map(|b| b.plaquettes())
            .filter(|q| *q != cur && w.contains_plaquette(*q))
            .collect();
        cur = steps[rng.random_range(0..steps.len())];
        out.push(cur);
    }
    DualPath::new(out).expect("walk steps are adjacent")
}

/// Number of distinct syndromes among the `2^|Γ|` group elements.
pub fn syndrome_class_count(g: &Scaffold) -> usize {
    let ops = g.ops();
    let n = ops.len();
    let syns: Vec<Syndrome> = ops.iter().map(PauliOp::syndrome).collect();
    let mut seen: BTreeMap<Syndrome, ()> = BTreeMap::new();
    for mask in 0..1usize << n {
        let s = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .fold(Syndrome::default(), |acc, i| acc.symmetric_difference(&syns[i]));
        seen.insert(s, ());
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vacuum::vectors_equal;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn diagonal_pair() -> (Cone, Cone, Window) {
        let outer = Cone::new(Vertex::new(0, 0), (1, 1), (-1, 1)).unwrap();
        (outer.translated(0, 1), outer, Window::new(-8, 8, -5, 11).unwrap())
    }

    /// Parallel edges with apexes three apart: a gap with interior sites.
    fn wide_pair() -> (Cone, Cone, Window) {
        let outer = Cone::new(Vertex::new(0, 0), (1, 1), (-1, 1)).unwrap();
        (outer.translated(0, 3), outer, Window::new(-9, 9, -5, 13).unwrap())
    }

    #[test]
    fn diagonal_pair_scaffold() {
        let (c1, c2, w) = diagonal_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        assert!(g.interior_vertices.is_empty() && g.interior_plaquettes.is_empty());
        assert_eq!(g.len(), 2);
        match &g.elements[0].route {
            Route::Primal(p) => assert_eq!(p.bonds(), vec![Bond::north(0, 0)]),
            other => panic!("{other:?}"),
        }
        assert_eq!(h0_dimension(&g).unwrap(), 4);
        assert_eq!(build_scaffold(&c1, &c2, &w).unwrap(), g);
    }

    #[test]
    fn scaffold_strings_lie_in_the_gap() {
        for (c1, c2, w) in [diagonal_pair(), wide_pair()] {
            let g = build_scaffold(&c1, &c2, &w).unwrap();
            let gap = gap_region(&c1, &c2);
            for e in &g.elements {
                assert!(e.route.bonds().iter().all(|b| gap.contains(b) && w.contains_bond(b)));
            }
        }
    }

    #[test]
    fn wide_gap_has_interior_labels() {
        let (c1, c2, w) = wide_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        let n_i = g.interior_vertices.len() + g.interior_plaquettes.len();
        assert!(n_i > 0);
        assert_eq!(g.len(), 2 + n_i);
        for v in &g.interior_vertices {
            let k = g.elements.iter().filter(|e| e.role == GammaRole::Vertex { vertex: *v }).count();
            assert_eq!(k, 1);
        }
    }

    #[test]
    fn equal_cones_are_rejected() {
        let (_, c2, w) = diagonal_pair();
        assert!(matches!(build_scaffold(&c2, &c2, &w), Err(CanonicalError::NotSeparated(_))));
    }

    #[test]
    fn group_elements() {
        let (c1, c2, w) = diagonal_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        let els = f0_group_elements(&g, 16).unwrap();
        assert_eq!(els.len(), 4);
        assert!(els[0].op.is_scalar());
        for a in &els {
            for b in &els {
                let ab = a.op.multiply(&b.op);
                assert!(els.iter().any(|e| e.op.unsigned() == ab.unsigned()));
            }
        }
        assert!(matches!(f0_group_elements(&g, 3), Err(CanonicalError::CapExceeded(2, 3))));
    }

    #[test]
    fn inner_only_operator_is_its_own_form() {
        let (c1, c2, w) = diagonal_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        let p = string_from_path(&Path::new(vec![Vertex::new(0, 2), Vertex::new(0, 3), Vertex::new(1, 3)]).unwrap());
        assert!(p.supported_in(|b| c1.contains_bond(b)));
        let f = canonicalize(&p, &g).unwrap();
        assert_eq!(f, CanonicalForm { f1: p.clone(), ..CanonicalForm::vacuum() });
    }

    #[test]
    fn gap_to_inner_string_uses_anchor_strings() {
        let (c1, c2, w) = wide_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        let v = *g.interior_vertices.last().unwrap();
        assert_ne!(Some(v), g.anchor_vertex);
        let target = Vertex::new(0, 6);
        assert_eq!(g.vertex_class(target), SiteClass::Inner);
        let xi = crate::lattice::path_between(v, target, &Region::All, &w).unwrap();
        let p = string_from_path(&xi);
        let f = canonicalize(&p, &g).unwrap();
        let iv = g.index_of(&GammaRole::Vertex { vertex: v }).unwrap();
        let ia = g.index_of(&GammaRole::Vertex { vertex: g.anchor_vertex.unwrap() }).unwrap();
        assert_eq!(f.label, BTreeSet::from([iv, ia]));
        assert!(f.f2.is_scalar());
        verify_canonical(&p, &g, &f).unwrap();
    }

    #[test]
    fn random_products_round_trip() {
        let (c1, c2, w) = wide_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        let alt = build_scaffold_with(&c1, &c2, &w, Preference::Largest).unwrap();
        let inner_w = w.shrink(1).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        for _ in 0..60 {
            let p = random_string_product(&inner_w, 3, 8, &mut rng);
            let f = canonicalize(&p, &g).unwrap();
            verify_canonical(&p, &g, &f).unwrap();
            let f_alt = canonicalize_with(&p, &g, Routing::ALTERNATE).unwrap();
            verify_canonical(&p, &g, &f_alt).unwrap();
            assert!(canonical_uniqueness_check(&f, &f_alt).unwrap());
            let f_other = canonicalize(&p, &alt).unwrap();
            verify_canonical(&p, &alt, &f_other).unwrap();
            assert_eq!(gap_signature(&f, &g), gap_signature(&f_other, &alt));
        }
    }

    #[test]
    fn uniqueness_precondition() {
        let (c1, c2, w) = wide_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        let a = canonicalize(&PauliOp::identity(), &g).unwrap();
        assert!(canonical_uniqueness_check(&a, &a).unwrap());
        let v = g.interior_vertices[0];
        let b = canonicalize(&string_from_path(&Path::new(vec![v, v.offset(1, 0)]).unwrap()), &g).unwrap();
        assert!(canonical_uniqueness_check(&a, &b).is_err());
    }

    fn quadrant() -> (Cone, Window) {
        (Cone::new(Vertex::new(0, 0), (1, 0), (0, 1)).unwrap(), Window::new(-5, 5, -5, 5).unwrap())
    }

    #[test]
    fn pull_in_examples() {
        let (c, w) = quadrant();
        // from p(0,0) down and around to p(2,0), crossing only bonds outside the quadrant
        let outside = DualPath::new(vec![Plaquette::new(0, 0), Plaquette::new(0, -1), Plaquette::new(1, -1), Plaquette::new(2, -1), Plaquette::new(2, 0)]).unwrap();
        assert!(outside.crossed_set().iter().all(|b| !c.contains_bond(b)));
        let r = pull_in(&Route::Dual(outside.clone()), &c, &w).unwrap();
        assert!(r.bonds().iter().all(|b| c.contains_bond(b)));
        assert_eq!(states_equal(&Route::Dual(outside).op(), &r.op()), Some(Phase::ONE));

        let inside = Route::Primal(Path::new(vec![Vertex::new(1, 1), Vertex::new(2, 1)]).unwrap());
        assert_eq!(pull_in(&inside, &c, &w).unwrap(), inside);
        let bad = Route::Primal(Path::new(vec![Vertex::new(-3, -3), Vertex::new(-2, -3)]).unwrap());
        assert!(matches!(pull_in(&bad, &c, &w), Err(CanonicalError::Precondition(_))));
    }

    #[test]
    fn classify_examples() {
        let (c, w) = quadrant();
        let deep = string_from_dual_path(&DualPath::new(vec![Plaquette::new(-3, -3), Plaquette::new(-2, -3)]).unwrap());
        match classify_excitation(&deep, &c, &w).unwrap() {
            ClassifyOutcome::Witness { site, .. } => {
                assert_eq!(site, Site::Plaquette { plaquette: Plaquette::new(-3, -3) })
            }
            other => panic!("{other:?}"),
        }
        // endpoints (1,0) and (3,0) sit on the ray and touch the cone
        let below = [(1, 0), (1, -1), (2, -1), (3, -1), (3, 0)];
        let edge = string_from_path(&Path::new(below.iter().map(|&(x, y)| Vertex::new(x, y)).collect()).unwrap());
        let out = classify_excitation(&edge, &c, &w).unwrap();
        assert!(matches!(out, ClassifyOutcome::InRepresentative { phase, .. } if phase.is_real()));
        assert!(verify_outcome(&edge, &c, &out));
        let stab = plaquette_op(Plaquette::new(-2, -2)).multiply(&plaquette_op(Plaquette::new(-3, -2)));
        match classify_excitation(&stab, &c, &w).unwrap() {
            ClassifyOutcome::InRepresentative { rep, phase, .. } => {
                assert!(rep.is_scalar());
                assert_eq!(phase, Phase::ONE);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dense_decomposition_examples() {
        let (c, w) = quadrant();
        let p = string_from_path(&Path::new(vec![Vertex::new(2, 2), Vertex::new(3, 2)]).unwrap());
        let one = GaussianRational::one();
        let d = dense_decompose(&one, &p, &c, &w).unwrap();
        assert_eq!(d.a.terms, vec![(one.clone(), p.clone())]);
        assert!(d.b.terms.is_empty());
        let i = GaussianRational::i();
        let d = dense_decompose(&i, &p, &c, &w).unwrap();
        assert!(d.b.terms.is_empty());
        assert!(verify_decomposition(&d, &i, &p, &c));
        assert!(vectors_equal(&d.a, &ExcitationVector::term(i.clone(), p.clone())));
        // boundary-only excitations: both charges on the x-axis ray
        let q = string_from_path(&Path::new(vec![Vertex::new(1, 0), Vertex::new(1, 1), Vertex::new(2, 1), Vertex::new(2, 0)]).unwrap());
        let d = dense_decompose(&i, &q, &c, &w).unwrap();
        assert!(d.a.terms.is_empty());
        assert_eq!(d.b.terms.len(), 1);
        assert!(verify_decomposition(&d, &i, &q, &c));
        let mixed = GaussianRational::from_ints(1, 1);
        assert!(verify_decomposition(&dense_decompose(&mixed, &q, &c, &w).unwrap(), &mixed, &q, &c));
    }

    #[test]
    fn syndrome_classes_match_rank() {
        let (c1, c2, w) = wide_pair();
        let g = build_scaffold(&c1, &c2, &w).unwrap();
        if g.len() <= 12 {
            assert_eq!(h0_dimension(&g).unwrap(), syndrome_class_count(&g));
        }
    }

    #[test]
    fn two_interior_sites() {
        let outer = Cone::new(Vertex::new(0, 0), (1, 3), (-1, 3)).unwrap();
        let g = build_scaffold(&outer.translated(0, 3), &outer, &Window::new(-9, 9, -5, 13).unwrap()).unwrap();
        assert_eq!(g.interior_vertices.len() + g.interior_plaquettes.len(), 2);
        assert_eq!(g.len(), 4);
        assert_eq!(h0_dimension(&g).unwrap(), 16);
        assert_eq!(syndrome_class_count(&g), 16);
    }

    #[test]
    fn empty_scaffold_has_dimension_one() {
        let (c1, c2, w) = diagonal_pair();
        let mut g = build_scaffold(&c1, &c2, &w).unwrap();
        g.elements.clear();
        assert_eq!(h0_dimension(&g).unwrap(), 1);
        assert_eq!(syndrome_class_count(&g), 1);
    }
}
