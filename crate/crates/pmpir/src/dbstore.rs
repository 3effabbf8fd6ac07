//! The m-record encoded store.
//!
//! Every record is encoded with the same code and the per-record code
//! matrices are laid side by side, so node `i` holds `m * alpha` symbols:
//! its row of each record's code matrix. The store tracks per-node
//! liveness, injects failures, orchestrates projection-based repair and
//! round-trips through a small binary file format.
//!
//! # File format
//!
//! Little-endian throughout. The payload is
//!
//! ```text
//! magic   : 6 bytes  "PMPIR1"
//! header  : 9 x u64  family (0 = MSR, 1 = MBR), n, k, r, alpha, beta,
//!                    record_len, m, q
//! psi     : n*r x u64        encoding matrix, row-major
//! rows    : n*m*alpha x u64  node rows in index order (dead rows zeroed)
//! alive   : ceil(n/8) bytes  liveness bitmap, bit i = node i alive
//! ```
//!
//! followed by a CRC-32 (IEEE) of the payload as a trailing u32. The
//! plaintext message matrix is deliberately not written: a real store
//! would never hold it, and reloaded instances carry `message: None`.

use serde::{Deserialize, Serialize};

use crate::field::{FieldElement, PrimeField};
use crate::linalg::Mat;
use crate::pmcode::{self, CodeFamily, CodeParams, EncodingMatrix};
use crate::{Error, Result};

pub const MAGIC: &[u8; 6] = b"PMPIR1";

/// A plaintext database: `m >= 1` records of exactly `record_len` symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    field: PrimeField,
    records: Vec<Vec<FieldElement>>,
}

/// The JSON ingestion document: `{"q": 13, "records": [[1,2,...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatabaseJson {
    pub q: u64,
    pub records: Vec<Vec<u64>>,
}

impl DatabaseJson {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Database {
    /// Build from raw residues; every record must already be exactly
    /// `record_len` symbols.
    pub fn new(field: PrimeField, raw: &[Vec<u64>], record_len: usize) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidParams(
                "a database needs at least one record".into(),
            ));
        }
        for rec in raw {
            if rec.len() != record_len {
                return Err(Error::WrongRecordLength {
                    got: rec.len(),
                    want: record_len,
                });
            }
        }
        Ok(Database {
            field,
            records: raw
                .iter()
                .map(|rec| rec.iter().map(|&v| field.element(v)).collect())
                .collect(),
        })
    }

    /// Build from raw records of arbitrary length by striping each into
    /// `ceil(len / record_len)` zero-padded chunks, every chunk becoming
    /// an independent stored record.
    pub fn striped(field: PrimeField, raw: &[Vec<u64>], record_len: usize) -> Result<Self> {
        let mut chunks = Vec::new();
        for rec in raw {
            if rec.is_empty() {
                return Err(Error::WrongRecordLength {
                    got: 0,
                    want: record_len,
                });
            }
            for chunk in rec.chunks(record_len) {
                let mut padded = chunk.to_vec();
                padded.resize(record_len, 0);
                chunks.push(padded);
            }
        }
        Database::new(field, &chunks, record_len)
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.records.len()
    }

    #[inline]
    pub fn records(&self) -> &[Vec<FieldElement>] {
        &self.records
    }

    pub fn record(&self, j: usize) -> &[FieldElement] {
        &self.records[j]
    }
}

/// What a repair cost, in field symbols.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RepairReport {
    pub node: usize,
    pub helpers: Vec<usize>,
    /// Total symbols moved: m records x r helpers x beta.
    pub symbols_downloaded: u64,
    /// Per-helper contribution: beta symbols per record.
    pub per_helper: u64,
}

/// The encoded system: node rows, liveness, and (when built locally) the
/// concatenated message matrix kept for consistency checks.
#[derive(Debug, Clone)]
pub struct EncodedDatabase {
    params: CodeParams,
    psi: EncodingMatrix,
    node_rows: Vec<Vec<FieldElement>>,
    alive: Vec<bool>,
    message: Option<Mat>,
}

impl EncodedDatabase {
    /// Encode every record and lay the per-record rows side by side.
    pub fn ingest(db: &Database, params: &CodeParams, psi: EncodingMatrix) -> Result<Self> {
        if db.field().modulus() != psi.psi().field().modulus() {
            return Err(Error::InvalidParams(
                "database and encoding matrix use different fields".into(),
            ));
        }
        let field = db.field();
        let m = db.m();
        let (n, r, alpha) = (params.n, params.r, params.alpha);
        let mut node_rows = vec![Vec::with_capacity(m * alpha); n];
        let mut message = Mat::zeros(field, r, m * alpha);
        for (j, record) in db.records().iter().enumerate() {
            let packed = pmcode::pack_message(record, params)?;
            for h in 0..r {
                for b in 0..alpha {
                    message.set(h, j * alpha + b, packed.mat().get(h, b));
                }
            }
            let c = pmcode::encode(&psi, &packed);
            for (i, row) in node_rows.iter_mut().enumerate() {
                row.extend(c.row(i));
            }
        }
        let edb = EncodedDatabase {
            params: *params,
            psi,
            node_rows,
            alive: vec![true; n],
            message: Some(message),
        };
        edb.verify_storage()?;
        Ok(edb)
    }

    #[inline]
    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    #[inline]
    pub fn psi(&self) -> &EncodingMatrix {
        &self.psi
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.psi.psi().field()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.node_rows[0].len() / self.params.alpha
    }

    #[inline]
    pub fn is_alive(&self, node: usize) -> bool {
        self.alive[node]
    }

    pub fn alive_nodes(&self) -> Vec<usize> {
        (0..self.params.n).filter(|&i| self.alive[i]).collect()
    }

    /// Total symbols held by the system: n * m * alpha.
    pub fn stored_symbols(&self) -> u64 {
        (self.params.n * self.m() * self.params.alpha) as u64
    }

    /// The plaintext message matrix, present only on locally-built
    /// instances (it is never serialized).
    pub fn message(&self) -> Option<&Mat> {
        self.message.as_ref()
    }

    /// All `m * alpha` symbols of a node. Dead nodes error; they never
    /// serve silent zeros.
    pub fn node_row(&self, node: usize) -> Result<&[FieldElement]> {
        self.check_node(node)?;
        if !self.alive[node] {
            return Err(Error::NodeDead { node });
        }
        Ok(&self.node_rows[node])
    }

    /// Node `node`'s share of record `rec`: `alpha` symbols.
    pub fn record_share(&self, node: usize, rec: usize) -> Result<Vec<FieldElement>> {
        let row = self.node_row(node)?;
        let alpha = self.params.alpha;
        if rec >= self.m() {
            return Err(Error::BadDesiredSet(format!(
                "record {rec} out of range (m = {})",
                self.m()
            )));
        }
        Ok(row[rec * alpha..(rec + 1) * alpha].to_vec())
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.params.n {
            return Err(Error::NodeOutOfRange {
                node,
                n: self.params.n,
            });
        }
        Ok(())
    }

    /// Mark a node dead and zero its row.
    pub fn fail_node(&mut self, node: usize) -> Result<()> {
        self.check_node(node)?;
        if !self.alive[node] {
            return Err(Error::NodeDead { node });
        }
        self.alive[node] = false;
        let zero = self.field().zero();
        for v in self.node_rows[node].iter_mut() {
            *v = zero;
        }
        Ok(())
    }

    /// The default helper choice: the `r` lowest-index alive nodes other
    /// than `exclude`.
    pub fn default_helpers(&self, exclude: usize) -> Result<Vec<usize>> {
        let helpers: Vec<usize> = (0..self.params.n)
            .filter(|&i| i != exclude && self.alive[i])
            .take(self.params.r)
            .collect();
        if helpers.len() < self.params.r {
            return Err(Error::BadHelperSet(format!(
                "only {} alive helpers available, repair needs r = {}",
                helpers.len(),
                self.params.r
            )));
        }
        Ok(helpers)
    }

    /// Rebuild a dead node from `r` helpers, each contributing one
    /// projected symbol per record.
    pub fn repair_node(&mut self, node: usize, helpers: &[usize]) -> Result<RepairReport> {
        self.check_node(node)?;
        if self.alive[node] {
            return Err(Error::NodeAlive { node });
        }
        if !self.psi.repair_capable() {
            return Err(Error::RepairDisabled);
        }
        for &h in helpers {
            self.check_node(h)?;
            if !self.alive[h] {
                return Err(Error::NodeDead { node: h });
            }
        }
        let m = self.m();
        let alpha = self.params.alpha;
        let target = self.psi.repair_target(&self.params, node);
        let mut restored = Vec::with_capacity(m * alpha);
        for rec in 0..m {
            let projections: Vec<(usize, FieldElement)> = helpers
                .iter()
                .map(|&h| {
                    let share = self.record_share(h, rec)?;
                    Ok((h, pmcode::repair_projection(&share, &target)))
                })
                .collect::<Result<_>>()?;
            restored.extend(pmcode::repair_reconstruct(
                &self.params,
                &self.psi,
                node,
                &projections,
            )?);
        }
        self.node_rows[node] = restored;
        self.alive[node] = true;
        self.verify_storage()?;
        Ok(RepairReport {
            node,
            helpers: helpers.to_vec(),
            symbols_downloaded: (m * self.params.r * self.params.beta) as u64,
            per_helper: (m * self.params.beta) as u64,
        })
    }

    /// Check that every alive node's row equals its row of `Psi * M`.
    /// A no-op on reloaded instances, where the message is gone.
    pub fn verify_storage(&self) -> Result<()> {
        let Some(message) = &self.message else {
            return Ok(());
        };
        let expected = self.psi.psi().mat_mul(message);
        for i in 0..self.params.n {
            if !self.alive[i] {
                continue;
            }
            if self.node_rows[i] != expected.row(i) {
                return Err(Error::CheckFailed(format!(
                    "node {i} row diverges from the encoded message"
                )));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (n, alpha) = (self.params.n, self.params.alpha);
        let m = self.m();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let family = match self.params.family {
            CodeFamily::Msr => 0u64,
            CodeFamily::Mbr => 1u64,
        };
        for v in [
            family,
            self.params.n as u64,
            self.params.k as u64,
            self.params.r as u64,
            self.params.alpha as u64,
            self.params.beta as u64,
            self.params.record_len as u64,
            m as u64,
            self.field().modulus(),
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for i in 0..n {
            for j in 0..self.params.r {
                out.extend_from_slice(&self.psi.psi().get(i, j).value().to_le_bytes());
            }
        }
        for row in &self.node_rows {
            debug_assert_eq!(row.len(), m * alpha);
            for v in row {
                out.extend_from_slice(&v.value().to_le_bytes());
            }
        }
        let mut bitmap = vec![0u8; n.div_ceil(8)];
        for (i, &alive) in self.alive.iter().enumerate() {
            if alive {
                bitmap[i / 8] |= 1 << (i % 8);
            }
        }
        out.extend_from_slice(&bitmap);
        let crc = crc32(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader::new(bytes);
        let magic = rd.take(6)?;
        if magic != MAGIC {
            if &magic[..5] == b"PMPIR" {
                return Err(Error::VersionMismatch {
                    expected: String::from_utf8_lossy(MAGIC).into_owned(),
                    found: String::from_utf8_lossy(magic).into_owned(),
                });
            }
            return Err(Error::Parse {
                offset: 0,
                msg: "bad magic, not a storage file".into(),
            });
        }
        let family = match rd.u64()? {
            0 => CodeFamily::Msr,
            1 => CodeFamily::Mbr,
            other => {
                return Err(Error::Parse {
                    offset: rd.pos - 8,
                    msg: format!("unknown code family tag {other}"),
                })
            }
        };
        let n = rd.u64()? as usize;
        let k = rd.u64()? as usize;
        let r = rd.u64()? as usize;
        let alpha = rd.u64()? as usize;
        let beta = rd.u64()? as usize;
        let record_len = rd.u64()? as usize;
        let m = rd.u64()? as usize;
        let q = rd.u64()?;
        let field = PrimeField::new(q)?;
        let params = CodeParams::derive(family, k, Some(r), n)?;
        if (params.r, params.alpha, params.beta, params.record_len) != (r, alpha, beta, record_len)
        {
            return Err(Error::Parse {
                offset: 6,
                msg: "header parameters are inconsistent with the family".into(),
            });
        }
        if m == 0 {
            return Err(Error::Parse {
                offset: 6,
                msg: "store contains no records".into(),
            });
        }
        let mut psi = Mat::zeros(field, n, r);
        for i in 0..n {
            for j in 0..r {
                let v = rd.u64()?;
                if v >= q {
                    return Err(Error::Parse {
                        offset: rd.pos - 8,
                        msg: format!("symbol {v} is not a residue mod {q}"),
                    });
                }
                psi.set(i, j, field.element(v));
            }
        }
        let mut node_rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(m * alpha);
            for _ in 0..m * alpha {
                let v = rd.u64()?;
                if v >= q {
                    return Err(Error::Parse {
                        offset: rd.pos - 8,
                        msg: format!("symbol {v} is not a residue mod {q}"),
                    });
                }
                row.push(field.element(v));
            }
            node_rows.push(row);
        }
        let bitmap = rd.take(n.div_ceil(8))?.to_vec();
        let payload_len = rd.pos;
        let stored_crc = u32::from_le_bytes(rd.take(4)?.try_into().unwrap());
        rd.expect_end()?;
        let computed = crc32(&bytes[..payload_len]);
        if computed != stored_crc {
            return Err(Error::ChecksumMismatch {
                stored: stored_crc,
                computed,
            });
        }
        let alive: Vec<bool> = (0..n).map(|i| bitmap[i / 8] & (1 << (i % 8)) != 0).collect();
        let psi = EncodingMatrix::from_psi(&params, psi)?;
        Ok(EncodedDatabase {
            params,
            psi,
            node_rows,
            alive,
            message: None,
        })
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.bytes.len() {
            return Err(Error::Parse {
                offset: self.pos,
                msg: format!(
                    "truncated: need {len} more bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn expect_end(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Parse {
                offset: self.pos,
                msg: format!("{} trailing bytes", self.bytes.len() - self.pos),
            });
        }
        Ok(())
    }
}

/// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320).
pub fn crc32(bytes: &[u8]) -> u32 {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0u32; 256];
        for (i, e) in t.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { 0xEDB8_8320 ^ (c >> 1) } else { c >> 1 };
            }
            *e = c;
        }
        t
    });
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc = table[((crc ^ b as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    crc ^ 0xFFFF_FFFF
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn random_db(field: PrimeField, m: usize, ell: usize, seed: u64) -> Database {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let raw: Vec<Vec<u64>> = (0..m)
            .map(|_| (0..ell).map(|_| field.sample_uniform(&mut rng).value()).collect())
            .collect();
        Database::new(field, &raw, ell).unwrap()
    }

    fn example1_store(m: usize, seed: u64) -> (Database, EncodedDatabase) {
        let params = CodeParams::msr(3, 10).unwrap();
        let field = f(13);
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = random_db(field, m, params.record_len, seed);
        let edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        (db, edb)
    }

    #[test]
    fn crc32_known_answers() {
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b""), 0);
    }

    #[test]
    fn striping_pads_and_chunks() {
        let field = f(13);
        let db = Database::striped(field, &[vec![1, 2, 3, 4, 5, 6, 7], vec![8]], 3).unwrap();
        let vals: Vec<Vec<u64>> = db
            .records()
            .iter()
            .map(|r| r.iter().map(|e| e.value()).collect())
            .collect();
        assert_eq!(
            vals,
            vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 0, 0], vec![8, 0, 0]]
        );
    }

    #[test]
    fn ingest_single_record_reduces_to_encode() {
        let params = CodeParams::msr(3, 10).unwrap();
        let field = f(13);
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = random_db(field, 1, 6, 3);
        let edb = EncodedDatabase::ingest(&db, &params, psi.clone()).unwrap();
        let packed = pmcode::pack_message(db.record(0), &params).unwrap();
        let c = pmcode::encode(&psi, &packed);
        for i in 0..10 {
            assert_eq!(edb.node_row(i).unwrap(), &c.row(i)[..]);
        }
    }

    #[test]
    fn retrieval_groups_recover_every_record() {
        let (db, edb) = example1_store(3, 9);
        let params = *edb.params();
        for rec in 0..3 {
            // At q = 13 the scalar collisions break some subsets; these
            // are the groups retrieval actually uses.
            for sub in [[0usize, 1, 2], [3, 4, 5]] {
                let picked: Vec<_> = sub
                    .iter()
                    .map(|&i| (i, edb.record_share(i, rec).unwrap()))
                    .collect();
                assert_eq!(
                    pmcode::recover(&params, edb.psi(), &picked).unwrap(),
                    db.record(rec)
                );
            }
        }
    }

    #[test]
    fn dead_nodes_error_instead_of_serving_zeros() {
        let (_, mut edb) = example1_store(2, 4);
        edb.fail_node(3).unwrap();
        assert!(matches!(edb.node_row(3), Err(Error::NodeDead { node: 3 })));
        assert!(matches!(edb.record_share(3, 0), Err(Error::NodeDead { .. })));
        assert!(matches!(edb.fail_node(3), Err(Error::NodeDead { .. })));
        assert!(matches!(edb.fail_node(99), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn repair_restores_exact_row_and_counts_symbols() {
        let params = CodeParams::msr(3, 10).unwrap();
        let field = f(101);
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = random_db(field, 3, 6, 21);
        let mut edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        for node in 0..10 {
            let before = edb.node_row(node).unwrap().to_vec();
            edb.fail_node(node).unwrap();
            let helpers = edb.default_helpers(node).unwrap();
            let report = edb.repair_node(node, &helpers).unwrap();
            assert_eq!(edb.node_row(node).unwrap(), &before[..]);
            assert_eq!(report.symbols_downloaded, 12); // m * r = 3 * 4
            assert_eq!(report.per_helper, 3); // beta * m
        }
    }

    #[test]
    fn repair_rejects_bad_setups() {
        let params = CodeParams::msr(3, 10).unwrap();
        let field = f(101);
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = random_db(field, 2, 6, 5);
        let mut edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        // Repairing an alive node makes no sense.
        assert!(matches!(
            edb.repair_node(2, &[0, 1, 3, 4]),
            Err(Error::NodeAlive { .. })
        ));
        edb.fail_node(2).unwrap();
        // Too few helpers.
        assert!(edb.repair_node(2, &[0, 1, 3]).is_err());
        // A dead helper.
        edb.fail_node(5).unwrap();
        assert!(matches!(
            edb.repair_node(2, &[0, 1, 5, 6]),
            Err(Error::NodeDead { node: 5 })
        ));
    }

    #[test]
    fn two_failures_sequential_repair() {
        let params = CodeParams::mbr(2, 2, 6).unwrap();
        let field = f(7);
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = random_db(field, 2, 3, 12);
        let mut edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        let r0 = edb.node_row(0).unwrap().to_vec();
        let r1 = edb.node_row(1).unwrap().to_vec();
        edb.fail_node(0).unwrap();
        edb.fail_node(1).unwrap();
        // n - 2 = 4 >= r = 2 helpers remain.
        let h0 = edb.default_helpers(0).unwrap();
        edb.repair_node(0, &h0).unwrap();
        let h1 = edb.default_helpers(1).unwrap();
        edb.repair_node(1, &h1).unwrap();
        assert_eq!(edb.node_row(0).unwrap(), &r0[..]);
        assert_eq!(edb.node_row(1).unwrap(), &r1[..]);
        edb.verify_storage().unwrap();
    }

    #[test]
    fn insufficient_helpers_detected() {
        let params = CodeParams::mbr(2, 2, 3).unwrap();
        let field = f(5);
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = random_db(field, 1, 3, 1);
        let mut edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        edb.fail_node(0).unwrap();
        edb.fail_node(1).unwrap();
        assert!(matches!(edb.default_helpers(0), Err(Error::BadHelperSet(_))));
    }

    #[test]
    fn repair_refused_on_incapable_matrix() {
        let (_, mut edb) = example1_store(2, 8);
        assert!(!edb.psi().repair_capable());
        edb.fail_node(0).unwrap();
        let helpers = edb.default_helpers(0).unwrap();
        assert!(matches!(
            edb.repair_node(0, &helpers),
            Err(Error::RepairDisabled)
        ));
    }

    #[test]
    fn serialize_round_trip_is_identity() {
        let (_, mut edb) = example1_store(3, 30);
        edb.fail_node(7).unwrap();
        let bytes = edb.to_bytes();
        let back = EncodedDatabase::from_bytes(&bytes).unwrap();
        assert_eq!(back.params(), edb.params());
        assert_eq!(back.psi().psi(), edb.psi().psi());
        assert_eq!(back.alive, edb.alive);
        assert_eq!(back.node_rows, edb.node_rows);
        assert!(back.message().is_none());
        // Re-serializing the reload gives the same bytes.
        assert_eq!(back.to_bytes(), bytes);
        // Alive rows are readable, the dead one still errors.
        assert!(back.node_row(0).is_ok());
        assert!(matches!(back.node_row(7), Err(Error::NodeDead { .. })));
    }

    #[test]
    fn truncation_and_corruption_are_reported() {
        let (_, edb) = example1_store(2, 31);
        let bytes = edb.to_bytes();
        match EncodedDatabase::from_bytes(&bytes[..bytes.len() - 9]) {
            Err(Error::Parse { offset, .. }) => assert!(offset > 0),
            other => panic!("expected truncation error, got {other:?}"),
        }
        let mut flipped = bytes.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0x01;
        // Either an out-of-range symbol or a checksum mismatch, depending
        // on where the flip lands.
        assert!(EncodedDatabase::from_bytes(&flipped).is_err());
        let mut wrong_version = bytes.clone();
        wrong_version[5] = b'2';
        assert!(matches!(
            EncodedDatabase::from_bytes(&wrong_version),
            Err(Error::VersionMismatch { .. })
        ));
    }

    #[test]
    fn serialize_round_trips_after_failure_repair_cycles() {
        let params = CodeParams::mbr(2, 3, 8).unwrap();
        let field = f(11);
        let psi = EncodingMatrix::build(&params, field, None).unwrap();
        let db = random_db(field, 2, params.record_len, 77);
        let mut edb = EncodedDatabase::ingest(&db, &params, psi).unwrap();
        for node in [1usize, 4, 6] {
            edb.fail_node(node).unwrap();
            let helpers = edb.default_helpers(node).unwrap();
            edb.repair_node(node, &helpers).unwrap();
        }
        let back = EncodedDatabase::from_bytes(&edb.to_bytes()).unwrap();
        assert_eq!(back.node_rows, edb.node_rows);
        for sub in (0..8usize).combinations(2) {
            let picked: Vec<_> = sub
                .iter()
                .map(|&i| (i, back.record_share(i, 1).unwrap()))
                .collect();
            assert_eq!(
                pmcode::recover(back.params(), back.psi(), &picked).unwrap(),
                db.record(1)
            );
        }
    }
}
