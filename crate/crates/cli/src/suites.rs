//! The verification suites behind `toric run`.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde_json::{json, Value};

use toric_core::canonical::{
    build_scaffold, build_scaffold_with, canonical_uniqueness_check, canonicalize, canonicalize_with,
    classify_excitation, dense_decompose, gap_signature, h0_dimension, random_string_product,
    syndrome_class_count, verify_canonical, verify_decomposition, verify_outcome, CanonicalError, ClassifyOutcome,
    Preference, Routing, Scaffold, DEFAULT_F0_CAP,
};
use toric_core::lattice::{is_distally_separated, star_bonds, Bond, Region, Separation, Window};
use toric_core::oracle::{build_ground_state, cross_validate, rasterized_census};
use toric_core::pauli::{plaquette_op, star_op, PauliOp, Phase};
use toric_core::split::{conjugation_suite, exhaustive_factorization, random_region_product, verify_isometry};
use toric_core::vacuum::{span_density_census, GaussianRational};

use crate::config::{Config, Suite};
use crate::report::{Report, Status, SuiteReport};

/// Run the selected suites on a worker pool of the configured size.
pub fn run(config: &Config, timings: bool) -> anyhow::Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let suites = config
        .selected_suites()
        .into_iter()
        .map(|s| {
            let start = Instant::now();
            let mut r = pool.install(|| run_suite(s, config));
            if timings {
                r.wall_time = Some(start.elapsed().as_secs_f64());
            }
            r
        })
        .collect();
    Ok(Report::new(config.seed, config.trials, suites))
}

pub fn run_suite(suite: Suite, config: &Config) -> SuiteReport {
    let mut r = SuiteReport::new(suite.name());
    match suite {
        Suite::Geometry => geometry(config, &mut r),
        Suite::OmegaOracle => omega_oracle(config, &mut r),
        Suite::Canonical => canonical(config, &mut r),
        Suite::Classify => classify(config, &mut r),
        Suite::DenseDecompose => dense(config, &mut r),
        Suite::Split => split(config, &mut r),
        Suite::H0 => h0(config, &mut r),
    }
    r
}

fn suite_seed(config: &Config, suite: Suite) -> u64 {
    let k = Suite::ALL.iter().position(|s| *s == suite).expect("listed") as u64;
    config.seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn error_certificate(e: impl ToString) -> Value {
    json!({ "error": e.to_string() })
}

/// The scaffold for the configured pair, or the reason there is none.
pub fn scaffold_for(config: &Config, r: &mut SuiteReport) -> Option<Scaffold> {
    match build_scaffold(&config.lambda1, &config.lambda2, &config.window) {
        Ok(g) => Some(g),
        Err(CanonicalError::NotSeparated(Separation::NotSeparated { witness })) => {
            r.fail(json!({ "separated": false, "witness": witness }));
            None
        }
        Err(CanonicalError::NotSeparated(Separation::Undetermined { reason })) => {
            r.undetermined(json!({ "separated": "undetermined", "reason": reason }));
            None
        }
        Err(e) => {
            r.fail(error_certificate(e));
            None
        }
    }
}

fn geometry(config: &Config, r: &mut SuiteReport) {
    match is_distally_separated(&config.lambda1, &config.lambda2, &config.window) {
        Ok(Separation::Separated) => {
            r.count("separation", "separated");
        }
        Ok(Separation::NotSeparated { witness }) => {
            r.count("separation", "not_separated");
            r.fail(json!({ "separated": false, "witness": witness }));
        }
        Ok(Separation::Undetermined { reason }) => {
            r.count("separation", "undetermined");
            r.undetermined(json!({ "separated": "undetermined", "reason": reason }));
        }
        Err(e) => {
            r.count("separation", "not_nested");
            r.fail(error_certificate(e));
        }
    }
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for (name, cone) in [("lambda1", config.lambda1), ("lambda2", config.lambda2), ("lambda", config.lambda)] {
        let exact: BTreeSet<Bond> = config.window.bonds().into_iter().filter(|b| cone.contains_bond(b)).collect();
        let raster: BTreeSet<Bond> = rasterized_census(&cone, &config.window).into_iter().collect();
        checked += config.window.bond_count();
        let diff: Vec<Bond> = exact.symmetric_difference(&raster).copied().collect();
        mismatches += diff.len();
        if let Some(b) = diff.first() {
            r.fail(json!({ "cone": name, "bond": b, "exact": exact.contains(b) }));
        }
    }
    r.count("census_bonds", checked).count("census_mismatches", mismatches);
}

fn omega_oracle(config: &Config, r: &mut SuiteReport) {
    let w = config.oracle_window;
    match cross_validate(&w, config.trials, suite_seed(config, Suite::OmegaOracle)) {
        Ok(report) => {
            r.count("operators", report.trials)
                .count("failures", report.failures.len())
                .count("max_abs_deviation", report.max_abs_deviation);
            if let Some(f) = report.failures.first() {
                r.fail(serde_json::to_value(f).expect("serializes"));
            }
        }
        Err(e) => {
            r.fail(error_certificate(e));
            return;
        }
    }
    let psi = match build_ground_state(&w) {
        Ok(psi) => psi,
        Err(e) => {
            r.fail(error_certificate(e));
            return;
        }
    };
    let terms: Vec<PauliOp> =
        w.interior_vertices().into_iter().map(star_op).chain(w.plaquettes().into_iter().map(plaquette_op)).collect();
    for t in &terms {
        let e = psi.expectation(t).expect("window operator");
        if (e - 1.0).norm() >= 1e-9 {
            r.fail(json!({ "term": t, "expectation": [e.re, e.im] }));
        }
    }
    let energy = psi.energy().expect("window operator");
    let target = -(terms.len() as f64);
    if (energy - target).abs() >= 1e-8 {
        r.fail(json!({ "energy": energy, "expected": target }));
    }
    r.count("stabilizer_terms", terms.len()).count("ground_energy", energy);
    match span_density_census(&config.census_window, config.census_factors) {
        Ok(c) => {
            r.count("census_products", c.products)
                .count("census_rank", c.achieved_rank)
                .count("census_dimension", c.ambient_dim);
            if c.achieved_rank != c.ambient_dim {
                r.fail(json!({ "census": c }));
            }
        }
        Err(e) => {
            r.fail(error_certificate(e));
        }
    }
}

fn canonical_check(p: &PauliOp, g: &Scaffold, alt: &Scaffold) -> Result<(), String> {
    let f = canonicalize(p, g).map_err(|e| e.to_string())?;
    verify_canonical(p, g, &f)?;
    let f_alt = canonicalize_with(p, g, Routing::ALTERNATE).map_err(|e| e.to_string())?;
    verify_canonical(p, g, &f_alt)?;
    if !canonical_uniqueness_check(&f, &f_alt).map_err(|e| e.to_string())? {
        return Err(format!("fhat {} and {} differ by more than a sign", f.fhat, f_alt.fhat));
    }
    let f_other = canonicalize(p, alt).map_err(|e| e.to_string())?;
    verify_canonical(p, alt, &f_other)?;
    if gap_signature(&f, g) != gap_signature(&f_other, alt) {
        return Err("gap excitations differ between the two scaffolds".into());
    }
    Ok(())
}

fn canonical(config: &Config, r: &mut SuiteReport) {
    let Some(g) = scaffold_for(config, r) else { return };
    let alt = match build_scaffold_with(&config.lambda1, &config.lambda2, &config.window, Preference::Largest) {
        Ok(alt) => alt,
        Err(e) => {
            r.fail(error_certificate(e));
            return;
        }
    };
    let inner_w = config.window.shrink(1).expect("validated");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(suite_seed(config, Suite::Canonical));
    let ops: Vec<PauliOp> = (0..config.trials).map(|_| random_string_product(&inner_w, 4, 8, &mut rng)).collect();
    let failures: Vec<(usize, String)> = ops
        .par_iter()
        .enumerate()
        .filter_map(|(i, p)| canonical_check(p, &g, &alt).err().map(|e| (i, e)))
        .collect();
    r.count("gamma_size", g.len()).count("products", ops.len()).count("failures", failures.len());
    if let Some((i, e)) = failures.first() {
        r.fail(json!({ "operator": ops[*i], "error": e }));
    }
}

/// Random operators supported in `region`, drawn inside the shrunken window.
fn region_samples(config: &Config, region: &Region, suite: Suite) -> Vec<PauliOp> {
    let w = config.window.shrink(1).expect("validated");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(suite_seed(config, suite));
    (0..config.trials)
        .map(|_| {
            let phase = Phase::from(rng.random_range(0..4u8));
            random_region_product(region, &w, 4, 6, &mut rng).scaled(phase)
        })
        .collect()
}

fn region_meets_window(region: &Region, w: &Window) -> bool {
    w.interior_vertices()
        .into_iter()
        .any(|v| star_bonds(v).iter().any(|b| region.contains(b)))
}

fn classify(config: &Config, r: &mut SuiteReport) {
    let c = config.lambda;
    let outside = Region::Complement { cone: c };
    if !region_meets_window(&outside, &config.window.shrink(1).expect("validated")) {
        r.fail(error_certificate("the window has no bonds outside the cone"));
        return;
    }
    let ops = region_samples(config, &outside, Suite::Classify);
    let results: Vec<Result<bool, Value>> = ops
        .par_iter()
        .map(|p| match classify_excitation(p, &c, &config.window) {
            Ok(o) if verify_outcome(p, &c, &o) => Ok(matches!(o, ClassifyOutcome::Witness { .. })),
            Ok(o) => Err(json!({ "operator": p, "outcome": o })),
            Err(e) => Err(json!({ "operator": p, "error": e.to_string() })),
        })
        .collect();
    let witnesses = results.iter().filter(|x| matches!(x, Ok(true))).count();
    let representatives = results.iter().filter(|x| matches!(x, Ok(false))).count();
    let failures: Vec<Value> = results.into_iter().filter_map(Result::err).collect();
    r.count("operators", ops.len())
        .count("witnesses", witnesses)
        .count("representatives", representatives)
        .count("failures", failures.len());
    if let Some(f) = failures.into_iter().next() {
        r.fail(f);
    }
}

fn dense(config: &Config, r: &mut SuiteReport) {
    let c = config.lambda;
    let inside = Region::Cone { cone: c };
    if !region_meets_window(&inside, &config.window.shrink(1).expect("validated")) {
        r.fail(error_certificate("the window has no bonds inside the cone"));
        return;
    }
    let ops = region_samples(config, &inside, Suite::DenseDecompose);
    let lambdas = [GaussianRational::one(), GaussianRational::i(), GaussianRational::from_ints(1, 1)];
    let failures: Vec<Value> = ops
        .par_iter()
        .flat_map_iter(|p| {
            lambdas.iter().filter_map(move |l| match dense_decompose(l, p, &c, &config.window) {
                Ok(d) if verify_decomposition(&d, l, p, &c) => None,
                Ok(d) => Some(json!({ "operator": p, "lambda": l, "decomposition": d })),
                Err(e) => Some(json!({ "operator": p, "lambda": l, "error": e.to_string() })),
            })
        })
        .collect();
    r.count("operators", ops.len()).count("certificates", ops.len() * lambdas.len()).count("failures", failures.len());
    if let Some(f) = failures.into_iter().next() {
        r.fail(f);
    }
}

fn split(config: &Config, r: &mut SuiteReport) {
    let Some(g) = scaffold_for(config, r) else { return };
    let seed = suite_seed(config, Suite::Split);
    match verify_isometry(&g, config.trials, seed) {
        Ok(iso) => {
            r.count("isometry_pairs", iso.samples)
                .count("isometry_nonzero", iso.nonzero_pairings)
                .count("isometry_violations", iso.violations.len());
            if let Some(v) = iso.violations.first() {
                r.fail(json!({ "check": "isometry", "violation": v }));
            }
        }
        Err(e) => {
            r.fail(error_certificate(e));
        }
    }
    match exhaustive_factorization(&g, &g.window) {
        Ok(fac) => {
            r.count("factorization_pairs", fac.pairs)
                .count("factorization_nonzero", fac.nonzero)
                .count("factorization_failures", fac.failures.len());
            if let Some((a, b)) = fac.failures.first() {
                r.fail(json!({ "check": "factorization", "left": a, "right": b }));
            }
        }
        Err(e) => {
            r.fail(error_certificate(e));
        }
    }
    for (name, mirror, offset) in [("conjugation", false, 1), ("mirror_conjugation", true, 2)] {
        match conjugation_suite(&g, config.trials, seed.wrapping_add(offset), mirror) {
            Ok(c) => {
                r.count(&format!("{name}_pairs"), c.samples).count(&format!("{name}_failures"), c.failures.len());
                if let Some(f) = c.failures.first() {
                    r.fail(json!({ "check": name, "certificate": f }));
                }
            }
            Err(e) => {
                r.fail(error_certificate(e));
            }
        }
    }
}

/// The h0 section: scaffold, group size, dimension and syndrome-class count.
pub fn h0_section(config: &Config) -> SuiteReport {
    let mut r = SuiteReport::new(Suite::H0.name());
    h0(config, &mut r);
    r
}

fn h0(config: &Config, r: &mut SuiteReport) {
    let Some(g) = scaffold_for(config, r) else { return };
    let roles: Vec<Value> = g
        .elements
        .iter()
        .map(|e| json!({ "role": e.role, "bonds": e.route.bonds().len() }))
        .collect();
    r.count("scaffold", roles)
        .count("gamma_size", g.len())
        .count("interior_sites", g.interior_vertices.len() + g.interior_plaquettes.len());
    if g.len() >= 64 || (1u64 << g.len()) as usize > DEFAULT_F0_CAP {
        r.count("f0_size", format!("2^{}", g.len()));
        r.undetermined(json!({ "reason": format!("|Γ| = {} exceeds the enumeration cap {DEFAULT_F0_CAP}", g.len()) }));
        return;
    }
    r.count("f0_size", 1u64 << g.len());
    match h0_dimension(&g) {
        Ok(d) => {
            let classes = syndrome_class_count(&g);
            r.count("h0_dimension", d).count("syndrome_classes", classes);
            if d != classes {
                r.fail(json!({ "h0_dimension": d, "syndrome_classes": classes }));
            }
        }
        Err(e) => {
            r.fail(error_certificate(e));
        }
    }
}

pub fn exit_code(report: &Report) -> u8 {
    match report.status {
        Status::Pass => 0,
        _ => 1,
    }
}
