//! Query generation and node answering.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dbstore::EncodedDatabase;
use crate::field::{FieldElement, PrimeField};
use crate::linalg::Mat;
use crate::mpir::pattern::RetrievalPattern;
use crate::{Error, Result};

/// One retrieval's worth of queries: the random mask `U`, the desired
/// records, and the per-node query matrices `Q^i = U + offset_i`.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    u: Mat,
    desired: Vec<usize>,
    queries: Vec<Mat>,
    pattern: RetrievalPattern,
    seed: u64,
    m: usize,
}

impl QueryPlan {
    #[inline]
    pub fn u_matrix(&self) -> &Mat {
        &self.u
    }

    /// Desired record indices, sorted ascending (0-based).
    #[inline]
    pub fn desired(&self) -> &[usize] {
        &self.desired
    }

    #[inline]
    pub fn query(&self, node: usize) -> &Mat {
        &self.queries[node]
    }

    #[inline]
    pub fn queries(&self) -> &[Mat] {
        &self.queries
    }

    #[inline]
    pub fn pattern(&self) -> &RetrievalPattern {
        &self.pattern
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }
}

/// Draw the mask and assemble every node's query matrix.
///
/// `desired` must hold exactly `pattern.p()` distinct record indices
/// below `m`; it is normalized to ascending order, which is also the
/// order [`super::decode`] returns records in.
pub fn gen_queries(
    pattern: &RetrievalPattern,
    desired: &[usize],
    m: usize,
    field: PrimeField,
    seed: u64,
) -> Result<QueryPlan> {
    if m == 0 {
        return Err(Error::BadDesiredSet("the store has no records".into()));
    }
    if desired.len() != pattern.p() {
        return Err(Error::BadDesiredSet(format!(
            "pattern retrieves p = {} records, got {} desired indices",
            pattern.p(),
            desired.len()
        )));
    }
    let mut desired = desired.to_vec();
    desired.sort_unstable();
    if desired.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadDesiredSet("desired indices must be distinct".into()));
    }
    if let Some(&max) = desired.last() {
        if max >= m {
            return Err(Error::BadDesiredSet(format!(
                "desired record {max} out of range (m = {m})"
            )));
        }
    }
    let d = pattern.d();
    let cols = m * pattern.alpha();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let u = Mat::from_fn(field, d, cols, |_, _| field.sample_uniform(&mut rng));
    let queries = (0..pattern.n())
        .map(|i| u.add(&pattern.offset(i, &desired, m, field)))
        .collect();
    Ok(QueryPlan {
        u,
        desired,
        queries,
        pattern: pattern.clone(),
        seed,
        m,
    })
}

/// A node's response: `A_i^T = Q^i C_i^T`, one symbol per subquery.
pub fn answer(node_row: &[FieldElement], query: &Mat) -> Vec<FieldElement> {
    query.mul_vec(node_row)
}

/// All nodes' answers plus the exact download counter.
#[derive(Debug, Clone)]
pub struct AnswerSet {
    answers: Vec<Vec<FieldElement>>,
    downloaded_symbols: u64,
}

impl AnswerSet {
    pub fn new(answers: Vec<Vec<FieldElement>>) -> Self {
        let downloaded_symbols = answers.iter().map(|a| a.len() as u64).sum();
        AnswerSet {
            answers,
            downloaded_symbols,
        }
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[FieldElement] {
        &self.answers[i]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.answers.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    #[inline]
    pub fn downloaded_symbols(&self) -> u64 {
        self.downloaded_symbols
    }
}

/// Ask every node in the store; a dead node fails the retrieval (the
/// schemes need all `n` answers).
pub fn collect_answers(edb: &EncodedDatabase, plan: &QueryPlan) -> Result<AnswerSet> {
    let answers: Vec<Vec<FieldElement>> = (0..edb.params().n)
        .map(|i| Ok(answer(edb.node_row(i)?, plan.query(i))))
        .collect::<Result<_>>()?;
    Ok(AnswerSet::new(answers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbstore::{Database, EncodedDatabase};
    use crate::mpir::SchemeId;
    use crate::pmcode::{CodeParams, EncodingMatrix};
    use crate::PrimeField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn setup() -> (CodeParams, PrimeField, RetrievalPattern) {
        let params = CodeParams::msr(3, 10).unwrap();
        let field = PrimeField::new(13).unwrap();
        let pattern = RetrievalPattern::new(SchemeId::MsrA, &params, 2).unwrap();
        (params, field, pattern)
    }

    #[test]
    fn tail_nodes_get_the_bare_mask() {
        let (_, field, pattern) = setup();
        let plan = gen_queries(&pattern, &[0, 1], 3, field, 42).unwrap();
        for i in 6..10 {
            assert_eq!(plan.query(i), plan.u_matrix(), "node {i} should see U");
        }
        for i in 0..6 {
            assert_ne!(plan.query(i), plan.u_matrix());
        }
    }

    #[test]
    fn offsets_land_in_the_desired_columns() {
        let (_, field, pattern) = setup();
        // Desired records 0 and 2 of m = 3: group 0 offsets go to columns
        // 0..2, group 1 offsets to columns 4..6.
        let plan = gen_queries(&pattern, &[2, 0], 3, field, 1).unwrap();
        assert_eq!(plan.desired(), &[0, 2]); // normalized order
        let diff0 = plan.query(0).sub(plan.u_matrix());
        assert_eq!(diff0.get(0, 0).value(), 1);
        assert_eq!(diff0.get(1, 1).value(), 1);
        let diff3 = plan.query(3).sub(plan.u_matrix());
        assert_eq!(diff3.get(0, 4).value(), 1);
        assert_eq!(diff3.get(1, 5).value(), 1);
    }

    #[test]
    fn degenerate_plan_is_all_mask() {
        let params = CodeParams::msr(3, 10).unwrap();
        let field = PrimeField::new(13).unwrap();
        let pattern = RetrievalPattern::new(SchemeId::MsrA, &params, 0).unwrap();
        let plan = gen_queries(&pattern, &[], 3, field, 9).unwrap();
        for i in 0..10 {
            assert_eq!(plan.query(i), plan.u_matrix());
        }
    }

    #[test]
    fn desired_set_validation() {
        let (_, field, pattern) = setup();
        assert!(gen_queries(&pattern, &[0], 3, field, 1).is_err());
        assert!(gen_queries(&pattern, &[0, 0], 3, field, 1).is_err());
        assert!(gen_queries(&pattern, &[0, 3], 3, field, 1).is_err());
    }

    #[test]
    fn fixed_seed_reproduces_plan() {
        let (_, field, pattern) = setup();
        let a = gen_queries(&pattern, &[0, 1], 3, field, 7).unwrap();
        let b = gen_queries(&pattern, &[0, 1], 3, field, 7).unwrap();
        assert_eq!(a.u_matrix(), b.u_matrix());
        assert_eq!(a.queries(), b.queries());
        let c = gen_queries(&pattern, &[0, 1], 3, field, 8).unwrap();
        assert_ne!(a.u_matrix(), c.u_matrix());
    }

    #[test]
    fn selector_query_reads_symbols_verbatim() {
        let field = PrimeField::new(13).unwrap();
        let row: Vec<_> = [5u64, 7, 11, 2, 0, 3].iter().map(|&v| field.element(v)).collect();
        // A pure selector matrix (rows of unit vectors) returns the
        // selected stored symbols.
        let mut sel = Mat::zeros(field, 2, 6);
        sel.set(0, 2, field.one());
        sel.set(1, 5, field.one());
        let got = answer(&row, &sel);
        assert_eq!(got[0].value(), 11);
        assert_eq!(got[1].value(), 3);
        // Zero node row answers zero.
        let zero_row = vec![field.zero(); 6];
        assert!(answer(&zero_row, &sel).iter().all(|v| v.is_zero()));
    }

    #[test]
    fn collect_counts_symbols_and_refuses_dead_nodes() {
        let (params, field, pattern) = setup();
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let raw: Vec<Vec<u64>> = (0..3)
            .map(|_| (0..6).map(|_| field.sample_uniform(&mut rng).value()).collect())
            .collect();
        let db = Database::new(field, &raw, 6).unwrap();
        let mut edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        let plan = gen_queries(&pattern, &[0, 1], 3, field, 5).unwrap();
        let answers = collect_answers(&edb, &plan).unwrap();
        assert_eq!(answers.downloaded_symbols(), 20); // d * n = 2 * 10
        edb.fail_node(4).unwrap();
        assert!(collect_answers(&edb, &plan).is_err());
    }
}
