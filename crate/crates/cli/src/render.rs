//! Deterministic SVG drawings of windows, cones, scaffolds and canonical forms.
//!
//! All coordinates are integers (one lattice unit is [`UNIT`] pixels), so the
//! output is byte-identical for identical inputs.

use std::fmt::Write as _;

use clap::ValueEnum;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use toric_core::canonical::{canonicalize, random_string_product, GammaRole, Route, Scaffold, SiteClass};
use toric_core::lattice::{plaquette_bonds, star_bonds, Bond, Cone, Orientation, Plaquette, Vertex, Window};
use toric_core::pauli::PauliOp;

use crate::config::Config;

pub const UNIT: i64 = 40;
const MARGIN: i64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Drawing {
    Lattice,
    Cones,
    Scaffold,
    CanonicalForm,
}

impl Drawing {
    pub fn file_name(self) -> &'static str {
        match self {
            Drawing::Lattice => "lattice.svg",
            Drawing::Cones => "cones.svg",
            Drawing::Scaffold => "scaffold.svg",
            Drawing::CanonicalForm => "canonical-form.svg",
        }
    }
}

struct Canvas {
    w: Window,
    body: String,
}

impl Canvas {
    fn new(w: Window) -> Self {
        Canvas { w, body: String::new() }
    }

    fn px(&self, x2: i64) -> i64 {
        MARGIN + (x2 - 2 * self.w.xmin) * UNIT / 2
    }

    fn py(&self, y2: i64) -> i64 {
        MARGIN + (2 * self.w.ymax - y2) * UNIT / 2
    }

    /// Pixel position of a point given in half-units.
    fn at(&self, (x2, y2): (i64, i64)) -> (i64, i64) {
        (self.px(x2), self.py(y2))
    }

    fn line(&mut self, class: &str, a: (i64, i64), b: (i64, i64), style: &str) {
        let (a, b) = (self.at(a), self.at(b));
        writeln!(self.body, r#"<line class="{class}" x1="{}" y1="{}" x2="{}" y2="{}" {style}/>"#, a.0, a.1, b.0, b.1)
            .expect("string write");
    }

    fn bond(&mut self, class: &str, b: &Bond, style: &str) {
        let (u, v) = b.endpoints();
        self.line(class, (2 * u.x, 2 * u.y), (2 * v.x, 2 * v.y), style);
    }

    /// The dual segment crossing `b`, between its two plaquette centres.
    fn dual_bond(&mut self, class: &str, b: &Bond, style: &str) {
        let [p, q] = b.plaquettes();
        self.line(class, p.center_twice(), q.center_twice(), style);
    }

    fn polyline(&mut self, class: &str, points: &[(i64, i64)], style: &str) {
        let pts: Vec<String> = points
            .iter()
            .map(|p| {
                let (x, y) = self.at(*p);
                format!("{x},{y}")
            })
            .collect();
        writeln!(self.body, r#"<polyline class="{class}" points="{}" fill="none" {style}/>"#, pts.join(" "))
            .expect("string write");
    }

    fn circle(&mut self, class: &str, c: (i64, i64), r: i64, style: &str) {
        let (x, y) = self.at(c);
        writeln!(self.body, r#"<circle class="{class}" cx="{x}" cy="{y}" r="{r}" {style}/>"#).expect("string write");
    }

    fn square(&mut self, class: &str, c: (i64, i64), half: i64, style: &str) {
        let (x, y) = self.at(c);
        let side = 2 * half;
        writeln!(
            self.body,
            r#"<rect class="{class}" x="{}" y="{}" width="{side}" height="{side}" {style}/>"#,
            x - half,
            y - half
        )
        .expect("string write");
    }

    fn title(&mut self, text: &str) {
        writeln!(self.body, r#"<text x="{MARGIN}" y="{}" font-size="14" font-family="monospace">{text}</text>"#, MARGIN - 12)
            .expect("string write");
    }

    fn finish(self) -> String {
        let width = 2 * MARGIN + (self.w.xmax - self.w.xmin) * UNIT;
        let height = 2 * MARGIN + (self.w.ymax - self.w.ymin) * UNIT;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
             <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

const THIN: &str = r##"stroke="#bbbbbb" stroke-width="1""##;
const BOLD: &str = r##"stroke="#000000" stroke-width="4""##;

fn center(w: &Window) -> Vertex {
    Vertex::new((w.xmin + w.xmax - 1) / 2, (w.ymin + w.ymax - 1) / 2)
}

/// One dashed star and one thick plaquette on the window.
pub fn lattice(w: &Window) -> String {
    let mut c = Canvas::new(*w);
    let s = center(w);
    let p = Plaquette::new(s.x + 1, s.y + 1);
    let star = star_bonds(s);
    let plaq = plaquette_bonds(p);
    for b in w.bonds() {
        if star.contains(&b) {
            c.bond("bond star", &b, r##"stroke="#000000" stroke-width="2" stroke-dasharray="6,4""##);
        } else if plaq.contains(&b) && w.contains_plaquette(p) {
            c.bond("bond plaquette", &b, BOLD);
        } else {
            c.bond("bond", &b, THIN);
        }
    }
    c.title(&format!("star at {s}, plaquette at {p}"));
    c.finish()
}

/// Point where the ray from `apex` along `d` leaves the window, in half-units.
fn ray_exit(w: &Window, apex: Vertex, d: (i64, i64)) -> (i64, i64) {
    let bound = |a: i64, d: i64, lo: i64, hi: i64| -> Option<(i64, i64)> {
        match d.signum() {
            1 => Some((hi - a, d)),
            -1 => Some((a - lo, -d)),
            _ => None,
        }
    };
    let limits = [bound(apex.x, d.0, w.xmin, w.xmax), bound(apex.y, d.1, w.ymin, w.ymax)];
    let (num, den) = limits
        .into_iter()
        .flatten()
        .min_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)))
        .expect("non-zero direction");
    let num = num.max(0);
    (2 * apex.x + 2 * d.0 * num / den, 2 * apex.y + 2 * d.1 * num / den)
}

fn rays(c: &mut Canvas, cone: &Cone, class: &str, colour: &str) {
    let a = cone.apex();
    let w = c.w;
    for d in [cone.d1(), cone.d2()] {
        if w.contains_vertex(a) {
            let style = format!(r#"stroke="{colour}" stroke-width="1" stroke-dasharray="2,3""#);
            c.line(class, (2 * a.x, 2 * a.y), ray_exit(&w, a, d), &style);
        }
    }
}

/// Bonds of the cone drawn bold, the bounding rays dotted.
pub fn cones(w: &Window, cone: &Cone) -> String {
    let mut c = Canvas::new(*w);
    for b in w.bonds() {
        if cone.contains_bond(&b) {
            c.bond("bond in-cone", &b, BOLD);
        } else {
            c.bond("bond", &b, THIN);
        }
    }
    rays(&mut c, cone, "ray", "#d62728");
    c.title(&format!("cone at {} along ({},{}) and ({},{})", cone.apex(), cone.d1().0, cone.d1().1, cone.d2().0, cone.d2().1));
    c.finish()
}

fn region_backdrop(c: &mut Canvas, g: &Scaffold) {
    for b in g.window.bonds() {
        let (class, colour) = if g.inner.contains_bond(&b) {
            ("bond inner", "#9ecae1")
        } else if g.outer.contains_bond(&b) {
            ("bond gap", "#dddddd")
        } else {
            ("bond outer", "#fdd0a2")
        };
        c.bond(class, &b, &format!(r#"stroke="{colour}" stroke-width="2""#));
    }
}

fn route_points(route: &Route) -> (bool, Vec<(i64, i64)>) {
    match route {
        Route::Primal(p) => (true, p.vertices().iter().map(|v| (2 * v.x, 2 * v.y)).collect()),
        Route::Dual(d) => (false, d.plaquettes().iter().map(Plaquette::center_twice).collect()),
    }
}

/// Region backdrop with the Γ strings: primal strings solid, dual strings dashed.
pub fn scaffold(g: &Scaffold) -> String {
    let mut c = Canvas::new(g.window);
    region_backdrop(&mut c, g);
    for e in &g.elements {
        let (primal, pts) = route_points(&e.route);
        let colour = match e.role {
            GammaRole::ChargeBridge | GammaRole::FluxBridge => "#2ca02c",
            _ => "#9467bd",
        };
        if primal {
            c.polyline("gamma primal", &pts, &format!(r#"stroke="{colour}" stroke-width="3""#));
        } else {
            c.polyline("gamma dual", &pts, &format!(r#"stroke="{colour}" stroke-width="3" stroke-dasharray="5,3""#));
        }
    }
    if let Some(v) = g.anchor_vertex {
        c.circle("anchor", (2 * v.x, 2 * v.y), 5, r##"fill="#9467bd""##);
    }
    if let Some(p) = g.anchor_plaquette {
        c.square("anchor", p.center_twice(), 5, r##"fill="#9467bd""##);
    }
    rays(&mut c, &g.inner, "ray inner", "#1f77b4");
    rays(&mut c, &g.outer, "ray outer", "#ff7f0e");
    c.title(&format!("scaffold: {} strings", g.len()));
    c.finish()
}

fn draw_factor(c: &mut Canvas, op: &PauliOp, class: &str, colour: &str) {
    for b in &op.z {
        c.bond(&format!("{class} z"), b, &format!(r#"stroke="{colour}" stroke-width="4""#));
    }
    for b in &op.x {
        c.dual_bond(&format!("{class} x"), b, &format!(r#"stroke="{colour}" stroke-width="4" stroke-dasharray="4,2""#));
    }
}

/// The three factors of the canonical form of `p`, with its excitations.
pub fn canonical_form(g: &Scaffold, p: &PauliOp) -> anyhow::Result<String> {
    let f = canonicalize(p, g)?;
    let mut c = Canvas::new(g.window);
    region_backdrop(&mut c, g);
    draw_factor(&mut c, &f.f1, "f1", "#1f77b4");
    draw_factor(&mut c, &f.fhat, "fhat", "#9467bd");
    draw_factor(&mut c, &f.f2, "f2", "#ff7f0e");
    let syn = p.syndrome();
    for v in &syn.charges {
        let fill = if g.vertex_class(*v) == SiteClass::Gap { "#d62728" } else { "#000000" };
        c.circle("charge", (2 * v.x, 2 * v.y), 5, &format!(r#"fill="{fill}""#));
    }
    for q in &syn.fluxes {
        let fill = if g.plaquette_class(*q) == SiteClass::Gap { "#d62728" } else { "#000000" };
        c.square("flux", q.center_twice(), 5, &format!(r#"fill="{fill}""#));
    }
    c.title(&format!("phase {} · f1 · fhat{:?} · f2", f.phase, f.label));
    Ok(c.finish())
}

/// The operator drawn by `canonical-form`: the configured one, or a seeded product.
pub fn default_operator(config: &Config) -> PauliOp {
    config.operator.clone().unwrap_or_else(|| {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
        random_string_product(&config.window.shrink(1).expect("validated"), 3, 8, &mut rng)
    })
}

pub fn render(config: &Config, what: Drawing) -> anyhow::Result<String> {
    match what {
        Drawing::Lattice => Ok(lattice(&config.window)),
        Drawing::Cones => Ok(cones(&config.window, &config.lambda)),
        Drawing::Scaffold | Drawing::CanonicalForm => {
            let g = toric_core::canonical::build_scaffold(&config.lambda1, &config.lambda2, &config.window)?;
            if what == Drawing::Scaffold {
                Ok(scaffold(&g))
            } else {
                canonical_form(&g, &default_operator(config))
            }
        }
    }
}

/// Bonds drawn as `<line>` elements whose class attribute is exactly `class`.
pub fn bonds_with_class(svg: &str, class: &str, w: &Window) -> Vec<Bond> {
    let needle = format!("class=\"{class}\"");
    let mut out = Vec::new();
    for line in svg.lines().filter(|l| l.starts_with("<line") && l.contains(&needle)) {
        let attr = |name: &str| -> i64 {
            let key = format!(" {name}=\"");
            let start = line.find(&key).expect("attribute") + key.len();
            let end = start + line[start..].find('"').expect("closing quote");
            line[start..end].parse().expect("integer")
        };
        let x = (attr("x1").min(attr("x2")) - MARGIN) / UNIT + w.xmin;
        let y = w.ymax - (attr("y1").max(attr("y2")) - MARGIN) / UNIT;
        let o = if attr("y1") == attr("y2") { Orientation::East } else { Orientation::North };
        out.push(match o {
            Orientation::East => Bond::east(x, y),
            Orientation::North => Bond::north(x, y),
        });
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use toric_core::lattice::Vertex;

    #[test]
    fn lattice_has_one_dashed_star_and_one_thick_plaquette() {
        let w = Window::new(0, 5, 0, 5).unwrap();
        let svg = lattice(&w);
        let star = bonds_with_class(&svg, "bond star", &w);
        let plaq = bonds_with_class(&svg, "bond plaquette", &w);
        assert_eq!(star.len(), 4);
        assert_eq!(plaq.len(), 4);
        let s = center(&w);
        assert_eq!(star, star_bonds(s).to_vec());
        assert_eq!(plaq, plaquette_bonds(Plaquette::new(s.x + 1, s.y + 1)).to_vec());
        assert_eq!(svg.matches("stroke-dasharray").count(), 4);
        assert_eq!(bonds_with_class(&svg, "bond", &w).len() + 8, w.bond_count());
    }

    #[test]
    fn bold_census_matches_membership() {
        let w = Window::new(-6, 6, -2, 8).unwrap();
        let cone = Cone::new(Vertex::new(0, 0), (1, 1), (-1, 1)).unwrap();
        let svg = cones(&w, &cone);
        let bold = bonds_with_class(&svg, "bond in-cone", &w);
        let exact: Vec<Bond> = w.bonds().into_iter().filter(|b| cone.contains_bond(b)).collect();
        assert_eq!(bold, exact);
        assert_eq!(svg.matches("class=\"ray\"").count(), 2);
    }

    #[test]
    fn ray_exits_on_the_boundary() {
        let w = Window::new(-6, 6, -2, 8).unwrap();
        assert_eq!(ray_exit(&w, Vertex::new(0, 0), (1, 1)), (12, 12));
        assert_eq!(ray_exit(&w, Vertex::new(0, 0), (-1, 2)), (-8, 16));
        assert_eq!(ray_exit(&w, Vertex::new(0, 0), (1, 0)), (12, 0));
    }

    #[test]
    fn renders_are_deterministic() {
        let c = Config::default();
        for d in [Drawing::Lattice, Drawing::Cones, Drawing::Scaffold, Drawing::CanonicalForm] {
            let a = render(&c, d).unwrap();
            assert_eq!(a, render(&c, d).unwrap());
            assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        }
    }

    #[test]
    fn scaffold_shows_both_bridges() {
        let svg = render(&Config::default(), Drawing::Scaffold).unwrap();
        assert_eq!(svg.matches("class=\"gamma primal\"").count(), 1);
        assert_eq!(svg.matches("class=\"gamma dual\"").count(), 1);
    }

    #[test]
    fn equal_cones_cannot_be_drawn_as_a_scaffold() {
        let c = Config { lambda1: Config::default().lambda2, ..Config::default() };
        assert!(render(&c, Drawing::Scaffold).is_err());
    }
}
