//! Product-matrix MSR and MBR regenerating codes.
//!
//! A record of `record_len` symbols is packed into a structured `r x alpha`
//! message matrix `M` and encoded as `C = Psi * M`, where `Psi` is an
//! `n x r` encoding matrix every `r` rows of which are invertible. Row `i`
//! of `C` is node `i`'s share. The structure of `M` (symmetric blocks)
//! is what makes two things possible with plain linear algebra:
//!
//! * recovery of the record from any `k` node rows, and
//! * exact repair of a failed node from single-symbol projections
//!   contributed by any `r` helper nodes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::field::{next_prime_above, FieldElement, PrimeField};
use crate::linalg::Mat;
use crate::{Error, Result};

/// Which extreme of the storage/repair-bandwidth trade-off the code sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeFamily {
    /// Minimum storage: `alpha = k-1`, `r = 2k-2`.
    Msr,
    /// Minimum repair bandwidth: `alpha = r`.
    Mbr,
}

impl std::fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CodeFamily::Msr => write!(f, "MSR"),
            CodeFamily::Mbr => write!(f, "MBR"),
        }
    }
}

/// The full parameter tuple `(family, n, k, r, alpha, beta, record_len)`.
///
/// `record_len` is the number of free message symbols per record. Both
/// families use one downloaded symbol per helper per record (`beta = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub family: CodeFamily,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub alpha: usize,
    pub beta: usize,
    pub record_len: usize,
}

impl CodeParams {
    /// Derive MSR parameters from `k` and `n`; `r` is forced to `2k-2`.
    pub fn msr(k: usize, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("MSR requires k >= 2, got k = {k}")));
        }
        let r = 2 * k - 2;
        if n <= r {
            return Err(Error::InvalidParams(format!(
                "MSR requires n > r = 2k-2 = {r}, got n = {n}"
            )));
        }
        let p = CodeParams {
            family: CodeFamily::Msr,
            n,
            k,
            r,
            alpha: k - 1,
            beta: 1,
            record_len: k * (k - 1),
        };
        p.validate()?;
        Ok(p)
    }

    /// Derive MBR parameters from `k`, `r` and `n`; requires `k <= r < n`.
    pub fn mbr(k: usize, r: usize, n: usize) -> Result<Self> {
        if k < 1 || r < k {
            return Err(Error::InvalidParams(format!(
                "MBR requires 1 <= k <= r, got k = {k}, r = {r}"
            )));
        }
        if n <= r {
            return Err(Error::InvalidParams(format!(
                "MBR requires n > r, got n = {n}, r = {r}"
            )));
        }
        let p = CodeParams {
            family: CodeFamily::Mbr,
            n,
            k,
            r,
            alpha: r,
            beta: 1,
            // k(2r-k+1) is always even: either k is, or 2r-k+1 is.
            record_len: k * (2 * r - k + 1) / 2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Family-dispatching constructor. MSR ignores `r` (it is determined by
    /// `k`); MBR requires it.
    pub fn derive(family: CodeFamily, k: usize, r: Option<usize>, n: usize) -> Result<Self> {
        match family {
            CodeFamily::Msr => Self::msr(k, n),
            CodeFamily::Mbr => {
                let r = r.ok_or_else(|| {
                    Error::InvalidParams("MBR parameters need an explicit r".into())
                })?;
                Self::mbr(k, r, n)
            }
        }
    }

    /// Feasibility bound on the record size. Both families meet it with
    /// equality.
    pub fn capacity_bound(&self) -> usize {
        (0..self.k)
            .map(|i| self.alpha.min((self.r - i) * self.beta))
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if self.record_len > self.capacity_bound() {
            return Err(Error::InvalidParams(format!(
                "record_len {} exceeds the feasibility bound {}",
                self.record_len,
                self.capacity_bound()
            )));
        }
        Ok(())
    }

    /// Smallest modulus at which the default evaluation points `1..=n`
    /// yield a repair-capable encoding matrix: for MSR the powers
    /// `x^alpha` must be pairwise distinct (searched upward starting just
    /// above `n^2`), for MBR any prime above `n` works.
    pub fn default_modulus(&self) -> u64 {
        match self.family {
            CodeFamily::Mbr => next_prime_above(self.n as u64),
            CodeFamily::Msr => {
                let mut q = next_prime_above((self.n * self.n) as u64);
                loop {
                    let field = PrimeField::new(q).expect("next_prime_above returns primes");
                    let mut powers: Vec<u64> = (1..=self.n as u64)
                        .map(|x| field.element(x).pow(self.alpha as u64).value())
                        .collect();
                    powers.sort_unstable();
                    powers.dedup();
                    if powers.len() == self.n {
                        return q;
                    }
                    q = next_prime_above(q);
                }
            }
        }
    }
}

/// `(alpha, beta)` at the minimum-storage point for a record of `ell`
/// symbols.
pub fn msr_point(ell: usize, k: usize, r: usize) -> Result<(usize, usize)> {
    if k > r {
        return Err(Error::InvalidParams(format!("need k <= r, got k = {k}, r = {r}")));
    }
    let denom = k * (r - k + 1);
    if ell % k != 0 || ell % denom != 0 {
        return Err(Error::InvalidParams(format!(
            "ell = {ell} is not divisible by k = {k} and k(r-k+1) = {denom}"
        )));
    }
    Ok((ell / k, ell / denom))
}

/// `(alpha, beta)` at the minimum-bandwidth point for a record of `ell`
/// symbols.
pub fn mbr_point(ell: usize, k: usize, r: usize) -> Result<(usize, usize)> {
    if k > r {
        return Err(Error::InvalidParams(format!("need k <= r, got k = {k}, r = {r}")));
    }
    let denom = k * (2 * r - k + 1);
    if (2 * r * ell) % denom != 0 || (2 * ell) % denom != 0 {
        return Err(Error::InvalidParams(format!(
            "2*ell = {} is not divisible by k(2r-k+1) = {denom}",
            2 * ell
        )));
    }
    Ok((2 * r * ell / denom, 2 * ell / denom))
}

/// Family-specific decomposition of the encoding matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsiStructure {
    /// `Psi = [Phi  Lambda*Phi]` with `Phi` of width `alpha` and `Lambda`
    /// the per-node scalars.
    Msr { phi: Mat, lambda: Vec<FieldElement> },
    /// `Psi = [Phi  Delta]` with `Phi` of width `k`.
    Mbr { phi: Mat, delta: Mat },
}

/// An `n x r` encoding matrix together with its validated decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingMatrix {
    psi: Mat,
    structure: PsiStructure,
    repair_capable: bool,
}

/// Exhaustive subset checks are feasible up to this many nodes; beyond it
/// a fixed number of random subsets is sampled instead.
const EXHAUSTIVE_NODE_LIMIT: usize = 12;
const SAMPLED_SUBSETS: usize = 500;

impl EncodingMatrix {
    /// Build the standard encoding matrix for `params`: a Vandermonde
    /// matrix on the evaluation points `xs` (default `1..=n`). All
    /// construction conditions are checked; a repeated `Lambda` value only
    /// clears `repair_capable`, it does not fail the build.
    pub fn build(
        params: &CodeParams,
        field: PrimeField,
        xs: Option<&[FieldElement]>,
    ) -> Result<Self> {
        if field.modulus() <= params.n as u64 {
            return Err(Error::FieldTooSmall {
                q: field.modulus(),
                n: params.n,
            });
        }
        let default_xs: Vec<FieldElement>;
        let xs = match xs {
            Some(xs) => xs,
            None => {
                default_xs = (1..=params.n as u64).map(|x| field.element(x)).collect();
                &default_xs
            }
        };
        if xs.len() != params.n {
            return Err(Error::InvalidParams(format!(
                "need {} evaluation points, got {}",
                params.n,
                xs.len()
            )));
        }
        let psi = Mat::vandermonde(xs, params.r)?;
        Self::from_psi(params, psi)
    }

    /// Wrap an explicit `Psi`, decompose it per the family and run the
    /// construction condition checks. Used both by [`Self::build`] and
    /// when reloading a serialized store.
    pub fn from_psi(params: &CodeParams, psi: Mat) -> Result<Self> {
        assert_eq!(psi.rows(), params.n, "Psi must have n rows");
        assert_eq!(psi.cols(), params.r, "Psi must have r columns");
        check_submatrices_invertible(&psi, params.r, "any r rows of the encoding matrix")?;
        let structure = match params.family {
            CodeFamily::Msr => {
                let alpha = params.alpha;
                let phi = Mat::from_fn(psi.field(), params.n, alpha, |i, j| psi.get(i, j));
                check_submatrices_invertible(
                    &phi,
                    params.k - 1,
                    "any k-1 rows of the left block",
                )?;
                let mut lambda = Vec::with_capacity(params.n);
                for i in 0..params.n {
                    // lambda_i is the per-row scale between the two blocks:
                    // psi[i][alpha + j] = lambda_i * phi[i][j] for all j.
                    let j0 = (0..alpha)
                        .find(|&j| !phi.get(i, j).is_zero())
                        .ok_or_else(|| {
                            Error::EncodingCondition(format!("row {i} of the left block is zero"))
                        })?;
                    let l = psi.get(i, alpha + j0) * phi.get(i, j0).inv()?;
                    for j in 0..alpha {
                        if psi.get(i, alpha + j) != l * phi.get(i, j) {
                            return Err(Error::EncodingCondition(format!(
                                "row {i} does not factor as [phi  lambda*phi]"
                            )));
                        }
                    }
                    lambda.push(l);
                }
                PsiStructure::Msr { phi, lambda }
            }
            CodeFamily::Mbr => {
                let phi = Mat::from_fn(psi.field(), params.n, params.k, |i, j| psi.get(i, j));
                check_submatrices_invertible(&phi, params.k, "any k rows of the left block")?;
                let delta = Mat::from_fn(psi.field(), params.n, params.r - params.k, |i, j| {
                    psi.get(i, params.k + j)
                });
                PsiStructure::Mbr { phi, delta }
            }
        };
        let repair_capable = match &structure {
            PsiStructure::Msr { lambda, .. } => {
                let mut vals: Vec<u64> = lambda.iter().map(|l| l.value()).collect();
                vals.sort_unstable();
                vals.dedup();
                vals.len() == params.n
            }
            PsiStructure::Mbr { .. } => true,
        };
        Ok(EncodingMatrix {
            psi,
            structure,
            repair_capable,
        })
    }

    #[inline]
    pub fn psi(&self) -> &Mat {
        &self.psi
    }

    #[inline]
    pub fn structure(&self) -> &PsiStructure {
        &self.structure
    }

    /// False exactly when the per-node scalars of the MSR decomposition
    /// collide; encoding and retrieval still work, node repair refuses.
    #[inline]
    pub fn repair_capable(&self) -> bool {
        self.repair_capable
    }

    /// The vector a helper projects its stored row onto when node
    /// `failed` is being rebuilt.
    pub fn repair_target(&self, params: &CodeParams, failed: usize) -> Vec<FieldElement> {
        match &self.structure {
            PsiStructure::Msr { phi, .. } => phi.row(failed),
            PsiStructure::Mbr { .. } => self.psi.row(failed),
        }
    }
}

/// Verify that every `size`-row submatrix is invertible: exhaustively for
/// small n, on a fixed-seed random sample otherwise.
fn check_submatrices_invertible(m: &Mat, size: usize, what: &str) -> Result<()> {
    let n = m.rows();
    if size == 0 {
        return Ok(());
    }
    let check = |idx: &[usize]| -> Result<()> {
        if m.select_rows(idx).rank() < size {
            return Err(Error::EncodingCondition(format!(
                "{what} must be linearly independent; rows {idx:?} are not"
            )));
        }
        Ok(())
    };
    if n <= EXHAUSTIVE_NODE_LIMIT {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            check(&idx)?;
            // next combination in lexicographic order
            let mut i = size;
            while i > 0 {
                i -= 1;
                if idx[i] != i + n - size {
                    idx[i] += 1;
                    for j in i + 1..size {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    return Ok(());
                }
            }
        }
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(0xC0DE);
        let all: Vec<usize> = (0..n).collect();
        for _ in 0..SAMPLED_SUBSETS {
            let mut pick: Vec<usize> = all
                .choose_multiple(&mut rng, size)
                .copied()
                .collect();
            pick.sort_unstable();
            check(&pick)?;
        }
        Ok(())
    }
}

/// Where each free record symbol sits inside the `r x alpha` message
/// matrix; `None` marks the structurally-zero cells of the MBR layout.
pub(crate) fn message_entry_map(params: &CodeParams) -> Vec<Vec<Option<usize>>> {
    let (r, alpha, k) = (params.r, params.alpha, params.k);
    let mut grid = vec![vec![None; alpha]; r];
    let mut idx = 0;
    match params.family {
        CodeFamily::Msr => {
            // Two stacked symmetric alpha x alpha blocks, each filled in
            // its upper triangle row-major.
            for block in 0..2 {
                let base = block * alpha;
                for i in 0..alpha {
                    for j in i..alpha {
                        grid[base + i][j] = Some(idx);
                        grid[base + j][i] = Some(idx);
                        idx += 1;
                    }
                }
            }
        }
        CodeFamily::Mbr => {
            // Symmetric k x k upper-left block, then the k x (r-k) block
            // mirrored below it; the (r-k) x (r-k) corner stays zero.
            for i in 0..k {
                for j in i..k {
                    grid[i][j] = Some(idx);
                    grid[j][i] = Some(idx);
                    idx += 1;
                }
            }
            for i in 0..k {
                for j in 0..r - k {
                    grid[i][k + j] = Some(idx);
                    grid[k + j][i] = Some(idx);
                    idx += 1;
                }
            }
        }
    }
    debug_assert_eq!(idx, params.record_len);
    grid
}

/// A packed `r x alpha` message matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageMatrix {
    mat: Mat,
    family: CodeFamily,
}

impl MessageMatrix {
    #[inline]
    pub fn mat(&self) -> &Mat {
        &self.mat
    }
}

/// Pack a record of exactly `record_len` symbols into the structured
/// message matrix.
pub fn pack_message(record: &[FieldElement], params: &CodeParams) -> Result<MessageMatrix> {
    if record.len() != params.record_len {
        return Err(Error::WrongRecordLength {
            got: record.len(),
            want: params.record_len,
        });
    }
    let field = record[0].field();
    let grid = message_entry_map(params);
    let mat = Mat::from_fn(field, params.r, params.alpha, |i, j| match grid[i][j] {
        Some(s) => record[s],
        None => field.zero(),
    });
    Ok(MessageMatrix {
        mat,
        family: params.family,
    })
}

/// Invert [`pack_message`], verifying the symmetry structure on the way.
pub fn unpack_message(m: &MessageMatrix, params: &CodeParams) -> Result<Vec<FieldElement>> {
    assert_eq!(m.family, params.family, "message family mismatch");
    let mat = &m.mat;
    assert_eq!((mat.rows(), mat.cols()), (params.r, params.alpha));
    let grid = message_entry_map(params);
    let field = mat.field();
    let mut record = vec![field.zero(); params.record_len];
    let mut seen = vec![false; params.record_len];
    for i in 0..params.r {
        for j in 0..params.alpha {
            match grid[i][j] {
                Some(s) => {
                    if seen[s] {
                        if record[s] != mat.get(i, j) {
                            return Err(Error::InvalidParams(format!(
                                "message matrix is not symmetric at ({i},{j})"
                            )));
                        }
                    } else {
                        record[s] = mat.get(i, j);
                        seen[s] = true;
                    }
                }
                None => {
                    if !mat.get(i, j).is_zero() {
                        return Err(Error::InvalidParams(format!(
                            "message matrix has nonzero structural zero at ({i},{j})"
                        )));
                    }
                }
            }
        }
    }
    Ok(record)
}

/// `C = Psi * M`: row `i` of the result is node `i`'s share of the record.
pub fn encode(psi: &EncodingMatrix, m: &MessageMatrix) -> Mat {
    psi.psi.mat_mul(m.mat())
}

/// Rebuild a record from node shares.
///
/// Solves `Psi_sub * M = C_sub` in the `record_len` free message symbols
/// (`k*alpha` equations). Any `k` distinct node rows suffice when the
/// encoding matrix is fully within its construction conditions; a
/// rank-deficient system (possible when the MSR scalar-distinctness
/// condition is violated) is reported, never guessed.
pub fn recover(
    params: &CodeParams,
    psi: &EncodingMatrix,
    node_rows: &[(usize, Vec<FieldElement>)],
) -> Result<Vec<FieldElement>> {
    if node_rows.len() < params.k {
        return Err(Error::BadHelperSet(format!(
            "recovery needs at least k = {} node rows, got {}",
            params.k,
            node_rows.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for (i, row) in node_rows {
        if *i >= params.n {
            return Err(Error::NodeOutOfRange {
                node: *i,
                n: params.n,
            });
        }
        if !seen.insert(*i) {
            return Err(Error::BadHelperSet(format!("node {i} listed twice")));
        }
        if row.len() != params.alpha {
            return Err(Error::WrongRecordLength {
                got: row.len(),
                want: params.alpha,
            });
        }
    }
    let field = psi.psi().field();
    let grid = message_entry_map(params);
    let ell = params.record_len;
    let mut coeffs = Mat::zeros(field, node_rows.len() * params.alpha, ell);
    let mut rhs = Vec::with_capacity(node_rows.len() * params.alpha);
    for (eq_block, (i, row)) in node_rows.iter().enumerate() {
        for j in 0..params.alpha {
            let eq = eq_block * params.alpha + j;
            for h in 0..params.r {
                if let Some(s) = grid[h][j] {
                    let cur = coeffs.get(eq, s);
                    coeffs.set(eq, s, cur + psi.psi().get(*i, h));
                }
            }
            rhs.push(row[j]);
        }
    }
    coeffs.solve(&rhs)
}

/// The single symbol a helper contributes to a repair: its stored row
/// projected onto the target vector.
pub fn repair_projection(
    helper_row: &[FieldElement],
    target: &[FieldElement],
) -> FieldElement {
    assert_eq!(
        helper_row.len(),
        target.len(),
        "projection target length does not match the stored row"
    );
    let field = target[0].field();
    helper_row
        .iter()
        .zip(target)
        .fold(field.zero(), |acc, (&a, &b)| acc + a * b)
}

/// Rebuild the failed node's row of one record from `r` helper
/// projections (each produced by [`repair_projection`] against
/// [`EncodingMatrix::repair_target`]).
pub fn repair_reconstruct(
    params: &CodeParams,
    psi: &EncodingMatrix,
    failed: usize,
    projections: &[(usize, FieldElement)],
) -> Result<Vec<FieldElement>> {
    if !psi.repair_capable() {
        return Err(Error::RepairDisabled);
    }
    if failed >= params.n {
        return Err(Error::NodeOutOfRange {
            node: failed,
            n: params.n,
        });
    }
    if projections.len() != params.r {
        return Err(Error::BadHelperSet(format!(
            "repair needs exactly r = {} helpers, got {}",
            params.r,
            projections.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for (h, _) in projections {
        if *h >= params.n {
            return Err(Error::NodeOutOfRange {
                node: *h,
                n: params.n,
            });
        }
        if *h == failed {
            return Err(Error::BadHelperSet(format!(
                "failed node {failed} cannot help repair itself"
            )));
        }
        if !seen.insert(*h) {
            return Err(Error::BadHelperSet(format!("helper {h} listed twice")));
        }
    }
    let helpers: Vec<usize> = projections.iter().map(|(h, _)| *h).collect();
    let values: Vec<FieldElement> = projections.iter().map(|(_, v)| *v).collect();
    // The helper symbols stack to Psi_helpers * (M * t^T) with t the
    // repair target; the r x r helper submatrix is invertible.
    let sub = psi.psi().select_rows(&helpers);
    let mt = sub.solve(&values)?;
    match psi.structure() {
        PsiStructure::Msr { lambda, .. } => {
            // mt = [S1 phi_f^T ; S2 phi_f^T]; by symmetry of the blocks the
            // failed row is mt_top + lambda_f * mt_bottom.
            let alpha = params.alpha;
            let lf = lambda[failed];
            Ok((0..alpha).map(|j| mt[j] + lf * mt[alpha + j]).collect())
        }
        PsiStructure::Mbr { .. } => {
            // mt = M * psi_f^T; M is symmetric, so the failed row is mt.
            Ok(mt)
        }
    }
}
