//! Dense state-vector cross-check of ω on a finite window.
//!
//! The window's bonds, in bond order, index the bits of a Z-basis label; bit
//! `k` set means bond `k` is flipped. Operators act bit by bit here and the
//! symbolic ω is only ever called as the thing being checked.
//!
//! Memory: `2^n` complex doubles, so 64 MiB at the ceiling of 22 bonds.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Bond, Cone, Window};
use crate::pauli::{local_hamiltonian_terms, plaquette_op, star_op, PauliOp, Phase};
use crate::vacuum::{interior_generators, omega, GaussianRational};

pub const MAX_BONDS: usize = 22;
pub const ORACLE_TOLERANCE: f64 = 1e-9;
pub const SVD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("window has {0} bonds; the dense oracle supports at most {MAX_BONDS}")]
    WindowTooLarge(usize),
    #[error("operator acts on bond {0}, outside the window")]
    OutsideWindow(Bond),
}

#[derive(Clone, Debug)]
pub struct DenseState {
    window: Window,
    index: BTreeMap<Bond, usize>,
    amplitudes: Vec<Complex64>,
}

fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl DenseState {
    pub fn n(&self) -> usize {
        self.index.len()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn mask(&self, bonds: &std::collections::BTreeSet<Bond>) -> Result<u64, OracleError> {
        let mut m = 0u64;
        for b in bonds {
            let k = self.index.get(b).ok_or(OracleError::OutsideWindow(*b))?;
            m |= 1 << k;
        }
        Ok(m)
    }

    /// `P ψ` with `P = i^λ X(a) Z(b)`: Z signs by bit parity, then X flips bits.
    pub fn apply_pauli(&self, p: &PauliOp) -> Result<DenseState, OracleError> {
        let (xm, zm) = (self.mask(&p.x)?, self.mask(&p.z)?);
        let phase = i_pow(p.lambda.exponent());
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let sign = if ((i as u64) & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[(i as u64 ^ xm) as usize] = phase * sign * a;
        }
        Ok(DenseState { window: self.window, index: self.index.clone(), amplitudes: out })
    }

    pub fn inner(&self, other: &DenseState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, p: &PauliOp) -> Result<Complex64, OracleError> {
        Ok(self.inner(&self.apply_pauli(p)?))
    }

    /// `⟨ψ|H_w|ψ⟩` for the window Hamiltonian `-Σ A_s - Σ B_p`.
    pub fn energy(&self) -> Result<f64, OracleError> {
        let mut e = 0.0;
        for t in local_hamiltonian_terms(&self.window) {
            e += t.coefficient as f64 * self.expectation(&t.op)?.re;
        }
        Ok(e)
    }
}

/// The normalized `∏_s (1 + A_s)/2 |0…0⟩` over interior stars `s`.
pub fn build_ground_state(w: &Window) -> Result<DenseState, OracleError> {
    let bonds = w.bonds();
    if bonds.len() > MAX_BONDS {
        return Err(OracleError::WindowTooLarge(bonds.len()));
    }
    let index: BTreeMap<Bond, usize> = bonds.iter().enumerate().map(|(k, b)| (*b, k)).collect();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << bonds.len()];
    amps[0] = Complex64::new(1.0, 0.0);
    for v in w.interior_vertices() {
        let xm: u64 = crate::lattice::star_bonds(v).iter().map(|b| 1u64 << index[b]).sum();
        let mut next = amps.clone();
        for (i, a) in amps.iter().enumerate() {
            next[(i as u64 ^ xm) as usize] += a;
        }
        amps = next.into_iter().map(|a| a * 0.5).collect();
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok(DenseState { window: *w, index, amplitudes: amps })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFailure {
    pub op: PauliOp,
    pub omega: GaussianRational,
    pub expectation: [f64; 2],
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub window: Window,
    pub trials: usize,
    pub max_abs_deviation: f64,
    pub failures: Vec<OracleFailure>,
}

impl CrossValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compare `omega_fn` against the dense expectation for each operator.
pub fn compare_ops(
    psi: &DenseState,
    ops: &[PauliOp],
    omega_fn: impl Fn(&PauliOp) -> GaussianRational + Sync,
) -> Result<CrossValidationReport, OracleError> {
    let rows: Vec<(PauliOp, GaussianRational, Complex64)> = ops
        .par_iter()
        .map(|p| Ok((p.clone(), omega_fn(p), psi.expectation(p)?)))
        .collect::<Result<_, OracleError>>()?;
    let mut max_dev: f64 = 0.0;
    let mut failures = Vec::new();
    for (op, w, e) in rows {
        let (re, im) = w.to_f64();
        let dev = (Complex64::new(re, im) - e).norm();
        max_dev = max_dev.max(dev);
        if !(dev < ORACLE_TOLERANCE) {
            failures.push(OracleFailure { op, omega: w, expectation: [e.re, e.im], deviation: dev });
        }
    }
    Ok(CrossValidationReport { window: psi.window, trials: ops.len(), max_abs_deviation: max_dev, failures })
}

/// Random products of interior generators with a random overall phase.
///
/// Every such operator has its charges at interior vertices and its fluxes at
/// window plaquettes. Half of the samples are pure stabilizer products so that
/// non-zero values of ω are well represented.
pub fn random_interior_ops(w: &Window, count: usize, seed: u64) -> Vec<PauliOp> {
    let gens = interior_generators(w);
    let stabs: Vec<PauliOp> = w
        .interior_vertices()
        .into_iter()
        .map(star_op)
        .chain(w.plaquettes().into_iter().map(plaquette_op))
        .collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let pool = if rng.random_bool(0.5) { &stabs } else { &gens };
            let mut p = PauliOp::scalar(Phase::from(rng.random_range(0..4u8)));
            for g in pool {
                if rng.random_bool(0.5) {
                    p = p.multiply(g);
                }
            }
            p
        })
        .collect()
}

/// All products of at most `k` stars and plaquettes of the window.
pub fn stabilizer_products(w: &Window, k: usize) -> Vec<PauliOp> {
    let stabs: Vec<PauliOp> = w
        .interior_vertices()
        .into_iter()
        .map(star_op)
        .chain(w.plaquettes().into_iter().map(plaquette_op))
        .collect();
    crate::vacuum::bounded_products(&stabs, k)
}

pub fn cross_validate(w: &Window, trials: usize, seed: u64) -> Result<CrossValidationReport, OracleError> {
    cross_validate_against(w, trials, seed, omega)
}

/// As [`cross_validate`], with a substitute for ω (used as a negative control).
pub fn cross_validate_against(
    w: &Window,
    trials: usize,
    seed: u64,
    omega_fn: impl Fn(&PauliOp) -> GaussianRational + Sync,
) -> Result<CrossValidationReport, OracleError> {
    let psi = build_ground_state(w)?;
    compare_ops(&psi, &random_interior_ops(w, trials, seed), omega_fn)
}

/// Numerical rank of `{g_{i₁} ⋯ g_{i_k} ψ : i₁ < … < i_k, k ≤ max_factors}`.
pub fn cyclic_dimension(w: &Window, generators: &[PauliOp], max_factors: usize) -> Result<usize, OracleError> {
    let psi = build_ground_state(w)?;
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_factors {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l| l + 1);
            for i in start..generators.len() {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        subsets.extend(next.iter().cloned());
        frontier = next;
    }
    let columns: Vec<Vec<Complex64>> = subsets
        .par_iter()
        .map(|s| {
            let mut v = psi.clone();
            for &i in s.iter().rev() {
                v = v.apply_pauli(&generators[i])?;
            }
            Ok(v.amplitudes)
        })
        .collect::<Result<_, OracleError>>()?;
    let dim = psi.amplitudes.len();
    let m = DMatrix::from_fn(dim, columns.len(), |r, c| columns[c][r]);
    let svd = m.svd(false, false);
    Ok(svd.singular_values.iter().filter(|&&s| s > SVD_TOLERANCE).count())
}

/// Sample resolution for [`rasterized_contains`].
pub const RASTER_SAMPLES: i128 = 4096;

/// Cone membership by sampling: the bond is in the cone when one of the
/// points `p0 + (j/N)(p1 - p0)`, `0 < j < N`, satisfies both strict sector
/// inequalities. Exact for directions with entries below `√N / 2`.
pub fn rasterized_contains(c: &Cone, b: &Bond, samples: i128) -> bool {
    let (p0, p1) = b.endpoints();
    let (ax, ay) = (c.apex().x as i128, c.apex().y as i128);
    let (d1, d2) = (c.d1(), c.d2());
    let (d1, d2) = ((d1.0 as i128, d1.1 as i128), (d2.0 as i128, d2.1 as i128));
    let (x0, y0) = ((p0.x as i128 - ax) * samples, (p0.y as i128 - ay) * samples);
    let (dx, dy) = ((p1.x - p0.x) as i128, (p1.y - p0.y) as i128);
    (1..samples).any(|j| {
        let (x, y) = (x0 + j * dx, y0 + j * dy);
        d1.0 * y - d1.1 * x > 0 && x * d2.1 - y * d2.0 > 0
    })
}

/// Bonds of `w` in the cone according to the sampling test.
pub fn rasterized_census(c: &Cone, w: &Window) -> Vec<Bond> {
    w.bonds().into_iter().filter(|b| rasterized_contains(c, b, RASTER_SAMPLES)).collect()
}
