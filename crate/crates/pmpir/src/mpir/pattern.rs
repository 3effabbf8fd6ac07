//! Retrieval patterns: the fixed assignment of (node, subquery) cells to
//! desired-record symbols.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::field::PrimeField;
use crate::linalg::Mat;
use crate::pmcode::{CodeFamily, CodeParams};
use crate::{Error, Result};

/// The three retrieval schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeId {
    /// MSR code, identity retrieval blocks, `d = alpha`, `n = pk + r`.
    MsrA,
    /// MSR code, cyclic-shift retrieval blocks, `d = k`,
    /// `n = (p+2)(k-1)`, requires `p <= 2k-2`. Fewer nodes and a lower
    /// storage overhead than [`SchemeId::MsrA`] at a higher download
    /// price.
    MsrB,
    /// MBR code, identity retrieval blocks, `d = alpha = r`, `n = pk + r`.
    Mbr,
}

impl SchemeId {
    pub fn family(&self) -> CodeFamily {
        match self {
            SchemeId::MsrA | SchemeId::MsrB => CodeFamily::Msr,
            SchemeId::Mbr => CodeFamily::Mbr,
        }
    }

    /// The node count the scheme's pattern needs for `p` desired records.
    pub fn node_count(&self, k: usize, r: usize, p: usize) -> usize {
        match self {
            SchemeId::MsrA | SchemeId::Mbr => p * k + r,
            SchemeId::MsrB => (p + 2) * (k - 1),
        }
    }

    /// Subqueries per node.
    pub fn subqueries(&self, params: &CodeParams) -> usize {
        match self {
            SchemeId::MsrA | SchemeId::Mbr => params.alpha,
            SchemeId::MsrB => params.k,
        }
    }

    /// Derive the code parameters this scheme uses for `(k, r, p)`; `r`
    /// is only consulted for the MBR scheme.
    pub fn derive_params(&self, k: usize, r: Option<usize>, p: usize) -> Result<CodeParams> {
        match self {
            SchemeId::MsrA | SchemeId::MsrB => {
                let n = self.node_count(k, 2 * k - 2, p);
                CodeParams::msr(k, n)
            }
            SchemeId::Mbr => {
                let r = r.unwrap_or(k);
                let n = self.node_count(k, r, p);
                CodeParams::mbr(k, r, n)
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "msr-a" => Ok(SchemeId::MsrA),
            "msr-b" => Ok(SchemeId::MsrB),
            "mbr" => Ok(SchemeId::Mbr),
            other => Err(Error::SchemeConstraint(format!(
                "unknown scheme `{other}` (expected msr-a, msr-b or mbr)"
            ))),
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchemeId::MsrA => write!(f, "msr-a"),
            SchemeId::MsrB => write!(f, "msr-b"),
            SchemeId::Mbr => write!(f, "mbr"),
        }
    }
}

/// For one (node, desired-slot) pair: row `t` of the binary block maps
/// subquery `t` to the retrieved column, or `None` when the row is zero.
type RowMap = Vec<Option<usize>>;

/// The scheme's fixed retrieval layout for `p` desired records.
///
/// `v` holds the nonzero binary blocks only; every absent (node, slot)
/// pair is the zero block. Each block has at most one 1 per row and per
/// column: a subquery retrieves at most one symbol per record per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalPattern {
    scheme: SchemeId,
    p: usize,
    d: usize,
    n: usize,
    k: usize,
    alpha: usize,
    v: BTreeMap<(usize, usize), RowMap>,
}

impl RetrievalPattern {
    /// Build the pattern for `scheme` on `params` with `p` desired
    /// records. `p = 0` is the degenerate no-retrieval pattern (every
    /// query is pure mask); for `p >= 1` the node count must match the
    /// scheme's formula exactly.
    pub fn new(scheme: SchemeId, params: &CodeParams, p: usize) -> Result<Self> {
        if params.family != scheme.family() {
            return Err(Error::SchemeConstraint(format!(
                "scheme {scheme} needs a {} code, got {}",
                scheme.family(),
                params.family
            )));
        }
        let (n, k, alpha) = (params.n, params.k, params.alpha);
        let d = scheme.subqueries(params);
        let mut v: BTreeMap<(usize, usize), RowMap> = BTreeMap::new();
        if p > 0 {
            if scheme == SchemeId::MsrB && p > 2 * k - 2 {
                return Err(Error::TooManyRecordsForCyclicScheme { p, max: 2 * k - 2 });
            }
            let want_n = scheme.node_count(k, params.r, p);
            if n != want_n {
                return Err(Error::SchemeConstraint(format!(
                    "scheme {scheme} with p = {p}, k = {k} needs n = {want_n}, got n = {n}"
                )));
            }
            match scheme {
                SchemeId::MsrA | SchemeId::Mbr => {
                    // Slot u's group of k nodes each carries the identity
                    // block: subquery t fetches column t.
                    for u in 0..p {
                        for j in 0..k {
                            v.insert((u * k + j, u), (0..d).map(Some).collect());
                        }
                    }
                }
                SchemeId::MsrB => {
                    // First node of the group: the (k-1)-identity over a
                    // zero row; each following node shifts all rows down
                    // cyclically by one.
                    for u in 0..p {
                        let mut rows: RowMap =
                            (0..d).map(|t| if t < k - 1 { Some(t) } else { None }).collect();
                        for j in 0..k {
                            v.insert((u * k + j, u), rows.clone());
                            rows = (0..d).map(|t| rows[(t + d - 1) % d]).collect();
                        }
                    }
                }
            }
        }
        let pattern = RetrievalPattern {
            scheme,
            p,
            d,
            n,
            k,
            alpha,
            v,
        };
        pattern.validate()?;
        Ok(pattern)
    }

    /// One 1 per row at most is guaranteed by the representation; check
    /// the per-column side and the column range.
    fn validate(&self) -> Result<()> {
        for ((node, slot), rows) in &self.v {
            let mut used = vec![false; self.alpha];
            for col in rows.iter().flatten() {
                if *col >= self.alpha || used[*col] {
                    return Err(Error::SchemeConstraint(format!(
                        "pattern block at node {node}, slot {slot} reuses column {col}"
                    )));
                }
                used[*col] = true;
            }
        }
        Ok(())
    }

    #[inline]
    pub fn scheme(&self) -> SchemeId {
        self.scheme
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Which column of slot `u`'s block node `i` retrieves in subquery
    /// `t`, if any.
    pub fn retrieves(&self, node: usize, slot: usize, t: usize) -> Option<usize> {
        self.v.get(&(node, slot)).and_then(|rows| rows[t])
    }

    /// All (slot, node, column) cells retrieved by subquery `t`.
    pub fn retrieval_cells(&self, t: usize) -> Vec<(usize, usize, usize)> {
        let mut cells = Vec::new();
        for ((node, slot), rows) in &self.v {
            if let Some(col) = rows[t] {
                cells.push((*slot, *node, col));
            }
        }
        cells.sort_by_key(|&(slot, node, _)| (node, slot));
        cells
    }

    /// The nodes whose subquery-`t` answer is pure interference; their
    /// `r = n - pk + <in-group blanks>` rows form the invertible system
    /// the decoder eliminates with.
    pub fn interference_rows(&self, t: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| (0..self.p).all(|u| self.retrieves(i, u, t).is_none()))
            .collect()
    }

    /// The k nodes storing desired slot `u`'s labelled symbols.
    pub fn group_nodes(&self, slot: usize) -> std::ops::Range<usize> {
        slot * self.k..(slot + 1) * self.k
    }

    /// The label table for slot `u`: cell (column b, node i) holds the
    /// subquery index that privately retrieves that symbol.
    pub fn label_table(&self, slot: usize) -> Vec<Vec<Option<usize>>> {
        let mut table = vec![vec![None; self.n]; self.alpha];
        for node in 0..self.n {
            for t in 0..self.d {
                if let Some(b) = self.retrieves(node, slot, t) {
                    table[b][node] = Some(t);
                }
            }
        }
        table
    }

    /// The binary block as a `d x alpha` matrix over `field`.
    pub fn v_matrix(&self, node: usize, slot: usize, field: PrimeField) -> Mat {
        let mut m = Mat::zeros(field, self.d, self.alpha);
        if let Some(rows) = self.v.get(&(node, slot)) {
            for (t, col) in rows.iter().enumerate() {
                if let Some(b) = col {
                    m.set(t, *b, field.one());
                }
            }
        }
        m
    }

    /// The deterministic query offset for `node` given the desired
    /// records: the sum over slots of the binary block pushed into the
    /// record's column range. A `d x m*alpha` matrix.
    pub fn offset(&self, node: usize, desired: &[usize], m: usize, field: PrimeField) -> Mat {
        assert_eq!(desired.len(), self.p, "desired set size must equal p");
        let mut out = Mat::zeros(field, self.d, m * self.alpha);
        for (u, &f) in desired.iter().enumerate() {
            assert!(f < m, "desired record out of range");
            if let Some(rows) = self.v.get(&(node, u)) {
                for (t, col) in rows.iter().enumerate() {
                    if let Some(b) = col {
                        let j = f * self.alpha + b;
                        out.set(t, j, out.get(t, j) + field.one());
                    }
                }
            }
        }
        out
    }

    /// Restrict to the first `d` subqueries. The result no longer matches
    /// the scheme's stated subquery count, so the structured decoder
    /// refuses it; it exists for driving [`super::decodability_oracle`]
    /// below the decodability bound.
    pub fn with_subqueries(&self, d: usize) -> Result<Self> {
        if d > self.d {
            return Err(Error::SchemeConstraint(format!(
                "cannot extend a pattern from {} to {d} subqueries",
                self.d
            )));
        }
        let mut out = self.clone();
        out.d = d;
        out.v = self
            .v
            .iter()
            .map(|(key, rows)| (*key, rows[..d].to_vec()))
            .collect();
        Ok(out)
    }
}
