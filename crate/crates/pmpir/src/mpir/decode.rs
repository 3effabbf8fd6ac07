//! The structured decoder: interference elimination plus record recovery.
//!
//! In subquery `t`, the nodes with no retrieval cell answer with pure
//! interference — inner products of the message rows with the mask row.
//! Those nodes' rows of the encoding matrix form an invertible `r x r`
//! system, so the `r` interference values can be solved for exactly and
//! subtracted from every other answer, exposing one labelled code symbol
//! per retrieving node. After all `d` subqueries, each desired record has
//! its complete rows at `k` nodes and is rebuilt with
//! [`crate::pmcode::recover`].

use std::collections::BTreeMap;

use crate::field::FieldElement;
use crate::pmcode::{self, CodeParams, EncodingMatrix};
use crate::{Error, Result};

use super::query::{AnswerSet, QueryPlan};

/// One privately retrieved code symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractedSymbol {
    /// Position in the desired list (0-based slot).
    pub slot: usize,
    pub node: usize,
    /// Column within the record's alpha-wide block.
    pub col: usize,
    pub value: FieldElement,
}

/// Solve for the `r` interference values of subquery `t` from the
/// interference-only rows.
pub fn interference_values(
    plan: &QueryPlan,
    answers: &AnswerSet,
    psi: &EncodingMatrix,
    params: &CodeParams,
    t: usize,
) -> Result<Vec<FieldElement>> {
    let rows = plan.pattern().interference_rows(t);
    if rows.len() != params.r {
        return Err(Error::SchemeConstraint(format!(
            "subquery {t} has {} interference rows, expected r = {}",
            rows.len(),
            params.r
        )));
    }
    let sub = psi.psi().select_rows(&rows);
    let rhs: Vec<FieldElement> = rows.iter().map(|&i| answers.node(i)[t]).collect();
    // The submatrix is invertible for any valid encoding matrix; a
    // failure here means the answers or the matrix are corrupt.
    sub.solve(&rhs)
}

/// Strip the interference from subquery `t`'s answers and return the
/// labelled code symbols it retrieves.
pub fn extract_subquery(
    plan: &QueryPlan,
    answers: &AnswerSet,
    psi: &EncodingMatrix,
    params: &CodeParams,
    t: usize,
) -> Result<Vec<ExtractedSymbol>> {
    let interference = interference_values(plan, answers, psi, params, t)?;
    let mut out = Vec::new();
    for (slot, node, col) in plan.pattern().retrieval_cells(t) {
        let masked = psi
            .psi()
            .row(node)
            .iter()
            .zip(&interference)
            .fold(psi.psi().field().zero(), |acc, (&a, &b)| acc + a * b);
        out.push(ExtractedSymbol {
            slot,
            node,
            col,
            value: answers.node(node)[t] - masked,
        });
    }
    Ok(out)
}

/// Decode every desired record from the full answer set. Records come
/// back in the plan's (ascending) desired order.
pub fn decode(
    plan: &QueryPlan,
    answers: &AnswerSet,
    psi: &EncodingMatrix,
    params: &CodeParams,
) -> Result<Vec<Vec<FieldElement>>> {
    if answers.len() != params.n {
        return Err(Error::SchemeConstraint(format!(
            "decode needs all n = {} answers, got {}",
            params.n,
            answers.len()
        )));
    }
    let pattern = plan.pattern();
    for i in 0..answers.len() {
        if answers.node(i).len() != pattern.d() {
            return Err(Error::SchemeConstraint(format!(
                "node {i} answered {} symbols, expected d = {}",
                answers.node(i).len(),
                pattern.d()
            )));
        }
    }
    // collected[slot][node][col] = symbol
    let mut collected: Vec<BTreeMap<usize, Vec<Option<FieldElement>>>> =
        vec![BTreeMap::new(); pattern.p()];
    for t in 0..pattern.d() {
        for sym in extract_subquery(plan, answers, psi, params, t)? {
            let row = collected[sym.slot]
                .entry(sym.node)
                .or_insert_with(|| vec![None; params.alpha]);
            row[sym.col] = Some(sym.value);
        }
    }
    let mut records = Vec::with_capacity(pattern.p());
    for (slot, per_node) in collected.into_iter().enumerate() {
        let mut rows = Vec::with_capacity(params.k);
        for node in pattern.group_nodes(slot) {
            let Some(cols) = per_node.get(&node) else {
                return Err(Error::SchemeConstraint(format!(
                    "slot {slot}: node {node} contributed no symbols"
                )));
            };
            let row: Option<Vec<FieldElement>> = cols.iter().copied().collect();
            let Some(row) = row else {
                return Err(Error::SchemeConstraint(format!(
                    "slot {slot}: node {node} is missing symbols"
                )));
            };
            rows.push((node, row));
        }
        records.push(pmcode::recover(params, psi, &rows)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbstore::{Database, EncodedDatabase};
    use crate::mpir::query::{collect_answers, gen_queries};
    use crate::mpir::{RetrievalPattern, SchemeId};
    use crate::pmcode::{CodeParams, EncodingMatrix};
    use crate::PrimeField;
    use itertools::Itertools;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn build(
        scheme: SchemeId,
        params: CodeParams,
        q: u64,
        m: usize,
        p: usize,
        seed: u64,
    ) -> (Database, EncodedDatabase, RetrievalPattern) {
        let field = PrimeField::new(q).unwrap();
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let raw: Vec<Vec<u64>> = (0..m)
            .map(|_| {
                (0..params.record_len)
                    .map(|_| field.sample_uniform(&mut rng).value())
                    .collect()
            })
            .collect();
        let db = Database::new(field, &raw, params.record_len).unwrap();
        let edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        let pattern = RetrievalPattern::new(scheme, &params, p).unwrap();
        (db, edb, pattern)
    }

    #[test]
    fn identity_scheme_round_trip() {
        let params = CodeParams::msr(3, 10).unwrap();
        let (db, edb, pattern) = build(SchemeId::MsrA, params, 13, 3, 2, 40);
        let plan = gen_queries(&pattern, &[0, 1], 3, edb.field(), 99).unwrap();
        let answers = collect_answers(&edb, &plan).unwrap();
        let records = decode(&plan, &answers, edb.psi(), &params).unwrap();
        assert_eq!(records[0], db.record(0));
        assert_eq!(records[1], db.record(1));
        assert_eq!(answers.downloaded_symbols(), 20);
    }

    #[test]
    fn identity_scheme_every_pair() {
        let params = CodeParams::msr(3, 10).unwrap();
        let (db, edb, pattern) = build(SchemeId::MsrA, params, 13, 4, 2, 41);
        for pair in (0..4usize).combinations(2) {
            let plan = gen_queries(&pattern, &pair, 4, edb.field(), 7).unwrap();
            let answers = collect_answers(&edb, &plan).unwrap();
            let records = decode(&plan, &answers, edb.psi(), &params).unwrap();
            assert_eq!(records[0], db.record(pair[0]));
            assert_eq!(records[1], db.record(pair[1]));
        }
    }

    #[test]
    fn cyclic_scheme_round_trip_and_extraction() {
        let params = CodeParams::msr(3, 8).unwrap();
        let (db, edb, pattern) = build(SchemeId::MsrB, params, 13, 3, 2, 42);
        let plan = gen_queries(&pattern, &[0, 1], 3, edb.field(), 5).unwrap();
        let answers = collect_answers(&edb, &plan).unwrap();
        assert_eq!(answers.downloaded_symbols(), 24); // d * n = 3 * 8
        // Subquery 0 must extract exactly the four cells
        // (slot 0: node 0 col 0, node 2 col 1; slot 1: node 3 col 0,
        // node 5 col 1), and they must equal the stored code symbols.
        let symbols = extract_subquery(&plan, &answers, edb.psi(), &params, 0).unwrap();
        let cells: Vec<(usize, usize, usize)> =
            symbols.iter().map(|s| (s.slot, s.node, s.col)).collect();
        assert_eq!(cells, vec![(0, 0, 0), (0, 2, 1), (1, 3, 0), (1, 5, 1)]);
        for s in &symbols {
            let share = edb.record_share(s.node, plan.desired()[s.slot]).unwrap();
            assert_eq!(s.value, share[s.col]);
        }
        let records = decode(&plan, &answers, edb.psi(), &params).unwrap();
        assert_eq!(records[0], db.record(0));
        assert_eq!(records[1], db.record(1));
    }

    #[test]
    fn mbr_scheme_all_pairs() {
        let params = CodeParams::mbr(2, 2, 6).unwrap();
        let (db, edb, pattern) = build(SchemeId::Mbr, params, 7, 4, 2, 43);
        for pair in (0..4usize).combinations(2) {
            let plan = gen_queries(&pattern, &pair, 4, edb.field(), 11).unwrap();
            let answers = collect_answers(&edb, &plan).unwrap();
            let records = decode(&plan, &answers, edb.psi(), &params).unwrap();
            assert_eq!(records[0], db.record(pair[0]));
            assert_eq!(records[1], db.record(pair[1]));
            assert_eq!(answers.downloaded_symbols(), 12); // d * n = 2 * 6
        }
    }

    #[test]
    fn all_zero_database_decodes_to_zero() {
        let params = CodeParams::msr(3, 10).unwrap();
        let field = PrimeField::new(13).unwrap();
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = Database::new(field, &vec![vec![0u64; 6]; 3], 6).unwrap();
        let edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        let pattern = RetrievalPattern::new(SchemeId::MsrA, &params, 2).unwrap();
        let plan = gen_queries(&pattern, &[1, 2], 3, field, 3).unwrap();
        let answers = collect_answers(&edb, &plan).unwrap();
        let records = decode(&plan, &answers, edb.psi(), &params).unwrap();
        assert!(records.iter().all(|r| r.iter().all(|v| v.is_zero())));
    }

    #[test]
    fn interference_matches_mask_inner_products() {
        // I^t_h must equal row h of the concatenated message matrix
        // dotted with mask row t.
        let params = CodeParams::msr(3, 10).unwrap();
        let (_, edb, pattern) = build(SchemeId::MsrA, params, 13, 3, 2, 44);
        let plan = gen_queries(&pattern, &[0, 1], 3, edb.field(), 21).unwrap();
        let answers = collect_answers(&edb, &plan).unwrap();
        let message = edb.message().unwrap();
        for t in 0..pattern.d() {
            let got = interference_values(&plan, &answers, edb.psi(), &params, t).unwrap();
            let mask_row = plan.u_matrix().row(t);
            for h in 0..params.r {
                let want = message
                    .row(h)
                    .iter()
                    .zip(&mask_row)
                    .fold(edb.field().zero(), |acc, (&a, &b)| acc + a * b);
                assert_eq!(got[h], want, "subquery {t}, interference row {h}");
            }
        }
    }

    #[test]
    fn missing_answers_are_rejected() {
        let params = CodeParams::msr(3, 10).unwrap();
        let (_, edb, pattern) = build(SchemeId::MsrA, params, 13, 3, 2, 45);
        let plan = gen_queries(&pattern, &[0, 1], 3, edb.field(), 1).unwrap();
        let answers = collect_answers(&edb, &plan).unwrap();
        let short = AnswerSet::new((0..9).map(|i| answers.node(i).to_vec()).collect());
        assert!(decode(&plan, &short, edb.psi(), &params).is_err());
    }
}
