//! The testable privacy property.
//!
//! For any fixed desired set, a node's query matrix is the random mask
//! plus a deterministic offset, so the map `U -> Q^i` is a translation —
//! a bijection on the space of `d x m*alpha` matrices. The query a node
//! sees is therefore uniformly distributed whatever the desired records
//! are, and carries no information about them. [`privacy_bijection_check`]
//! verifies the bijection literally at tiny parameters and structurally
//! (query minus offset returns the mask) at scale.

use std::collections::HashSet;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::field::PrimeField;
use crate::linalg::Mat;
use crate::mpir::pattern::RetrievalPattern;
use crate::{Error, Result};

/// Enumerating more query matrices than this is refused.
pub const DEFAULT_ENUMERATION_GUARD: u128 = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub enum PrivacyMode {
    /// Enumerate every mask matrix and every desired set; feasible only
    /// when `q^(d*m*alpha)` stays at or below the guard.
    Exhaustive { guard: u128 },
    /// Sample (seed, desired set) pairs and verify `Q - offset = U`.
    Sampled { trials: usize, seed: u64 },
}

/// Check that `U -> Q^node` is a bijection for every possible desired
/// set of size `p` drawn from `m` records.
pub fn privacy_bijection_check(
    pattern: &RetrievalPattern,
    node: usize,
    m: usize,
    field: PrimeField,
    mode: PrivacyMode,
) -> Result<bool> {
    let p = pattern.p();
    match mode {
        PrivacyMode::Exhaustive { guard } => {
            for desired in (0..m).combinations(p.max(1).min(m)) {
                // p = 0 has exactly one (empty) desired set.
                let desired = if p == 0 { vec![] } else { desired };
                let offset = pattern.offset(node, &desired, m, field);
                let ok = translation_is_bijective(
                    |u| u.add(&offset),
                    field,
                    pattern.d(),
                    m * pattern.alpha(),
                    guard,
                )?;
                if !ok {
                    return Ok(false);
                }
                if p == 0 {
                    break;
                }
            }
            Ok(true)
        }
        PrivacyMode::Sampled { trials, seed } => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            for _ in 0..trials {
                let mut all: Vec<usize> = (0..m).collect();
                let mut desired = Vec::with_capacity(p);
                for _ in 0..p {
                    desired.push(all.swap_remove(rng.gen_range(0..all.len())));
                }
                desired.sort_unstable();
                let offset = pattern.offset(node, &desired, m, field);
                let u = Mat::from_fn(field, pattern.d(), m * pattern.alpha(), |_, _| {
                    field.sample_uniform(&mut rng)
                });
                let q = u.add(&offset);
                if q.sub(&offset) != u {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Enumerate every matrix in the domain and check the image covers the
/// whole space. Split out so tests can feed it a corrupted query builder
/// as a negative control.
fn translation_is_bijective(
    build: impl Fn(&Mat) -> Mat,
    field: PrimeField,
    rows: usize,
    cols: usize,
    guard: u128,
) -> Result<bool> {
    let q = field.modulus() as u128;
    let cells = rows * cols;
    let mut space: u128 = 1;
    for _ in 0..cells {
        space = space.checked_mul(q).filter(|&s| s <= guard).ok_or(
            Error::EnumerationTooLarge {
                space: u128::MAX,
                guard,
            },
        )?;
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(space as usize);
    let mut counter = vec![0u64; cells];
    loop {
        let u = Mat::from_fn(field, rows, cols, |i, j| field.element(counter[i * cols + j]));
        let image = build(&u);
        let flat: Vec<u64> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| image.get(i, j).value())
            .collect();
        if !seen.insert(flat) {
            return Ok(false); // collision: not injective
        }
        // odometer step
        let mut pos = 0;
        loop {
            if pos == cells {
                let complete = seen.len() as u128 == space;
                return Ok(complete);
            }
            counter[pos] += 1;
            if counter[pos] < field.modulus() {
                break;
            }
            counter[pos] = 0;
            pos += 1;
        }
    }
}
