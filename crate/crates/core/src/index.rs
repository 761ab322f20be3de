//! Fielded inverted index over subprofiles with Jelinek-Mercer language-model
//! scoring.
//!
//! A matching term `t` contributes
//! `qtf(t) · ln(1 + ((1 − λ)·tf/|d_f|) / (λ·cf_f(t)/|C_f|))`
//! to the field score; terms absent from the document contribute nothing, so
//! every score is non-negative. Field scores are combined by a weighted sum.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::profile::{ArticleFields, Subprofile, TermBag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Content,
    Keywords,
    Authors,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Content, Field::Keywords, Field::Authors];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Content => "content",
            Field::Keywords => "keywords",
            Field::Authors => "authors",
        }
    }
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "content" | "title_abstract" => Ok(Field::Content),
            "keywords" => Ok(Field::Keywords),
            "authors" => Ok(Field::Authors),
            _ => Err(Error::UnknownField(s.to_string())),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct TermEntry {
    cf: u64,
    postings: Vec<Posting>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct FieldIndex {
    terms: HashMap<String, TermEntry>,
    doc_len: Vec<u64>,
    total_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocEntry {
    pub doc_id: String,
    pub venue_id: String,
}

/// Immutable inverted index. Internal doc numbers follow doc_id order, so
/// postings sorted by number are sorted by doc_id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldedIndex {
    docs: Vec<DocEntry>,
    lookup: HashMap<String, u32>,
    fields: [FieldIndex; 3],
}

fn bag(p: &Subprofile, f: Field) -> &TermBag {
    match f {
        Field::Content => &p.content,
        Field::Keywords => &p.keywords,
        Field::Authors => &p.authors,
    }
}

impl FieldedIndex {
    pub fn build(profiles: &[Subprofile]) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidParam("cannot index zero profiles".into()));
        }
        let mut order: Vec<&Subprofile> = profiles.iter().collect();
        order.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = order.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(Error::DuplicateDoc(w[0].doc_id.clone()));
        }
        let docs: Vec<DocEntry> = order
            .iter()
            .map(|p| DocEntry {
                doc_id: p.doc_id.clone(),
                venue_id: p.venue_id.clone(),
            })
            .collect();
        let fields = Field::ALL.map(|f| {
            let mut fi = FieldIndex {
                doc_len: Vec::with_capacity(order.len()),
                ..FieldIndex::default()
            };
            for (doc, p) in order.iter().enumerate() {
                let mut len = 0u64;
                for (term, &tf) in bag(p, f) {
                    if tf == 0 {
                        continue;
                    }
                    let e = fi.terms.entry(term.clone()).or_default();
                    e.cf += u64::from(tf);
                    e.postings.push(Posting { doc: doc as u32, tf });
                    len += u64::from(tf);
                }
                fi.doc_len.push(len);
                fi.total_len += len;
            }
            fi
        });
        Ok(Self::assemble(docs, fields))
    }

    fn assemble(docs: Vec<DocEntry>, fields: [FieldIndex; 3]) -> Self {
        let lookup = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.clone(), i as u32))
            .collect();
        Self { docs, lookup, fields }
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn docs(&self) -> &[DocEntry] {
        &self.docs
    }

    pub fn doc_no(&self, doc_id: &str) -> Option<u32> {
        self.lookup.get(doc_id).copied()
    }

    pub fn doc_len(&self, field: Field, doc: u32) -> u64 {
        self.fields[field.slot()].doc_len[doc as usize]
    }

    /// |C_f|
    pub fn collection_len(&self, field: Field) -> u64 {
        self.fields[field.slot()].total_len
    }

    pub fn cf(&self, field: Field, term: &str) -> u64 {
        self.fields[field.slot()].terms.get(term).map_or(0, |e| e.cf)
    }

    pub fn postings(&self, field: Field, term: &str) -> &[Posting] {
        self.fields[field.slot()]
            .terms
            .get(term)
            .map_or(&[], |e| e.postings.as_slice())
    }

    pub fn n_terms(&self, field: Field) -> usize {
        self.fields[field.slot()].terms.len()
    }

    /// Terms of a field in lexicographic order.
    pub fn terms(&self, field: Field) -> Vec<&str> {
        let mut t: Vec<&str> = self.fields[field.slot()].terms.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }

    pub fn venue_of_doc(&self, doc: u32) -> &str {
        &self.docs[doc as usize].venue_id
    }

    pub fn stats(&self) -> IndexStats {
        let mut venues: Vec<&str> = self.docs.iter().map(|d| d.venue_id.as_str()).collect();
        venues.sort_unstable();
        venues.dedup();
        IndexStats {
            n_docs: self.docs.len(),
            n_venues: venues.len(),
            fields: Field::ALL.map(|f| {
                let fi = &self.fields[f.slot()];
                FieldStats {
                    field: f,
                    n_terms: fi.terms.len(),
                    n_postings: fi.terms.values().map(|e| e.postings.len()).sum(),
                    collection_len: fi.total_len,
                    empty_docs: fi.doc_len.iter().filter(|&&l| l == 0).count(),
                }
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldStats {
    pub field: Field,
    pub n_terms: usize,
    pub n_postings: usize,
    pub collection_len: u64,
    pub empty_docs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexStats {
    pub n_docs: usize,
    pub n_venues: usize,
    pub fields: [FieldStats; 3],
}

impl fmt::Display for IndexStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents\t{}", self.n_docs)?;
        writeln!(f, "venues\t{}", self.n_venues)?;
        for s in &self.fields {
            let avg = if self.n_docs == 0 {
                0.0
            } else {
                s.collection_len as f64 / self.n_docs as f64
            };
            writeln!(
                f,
                "{}\tterms={}\tpostings={}\ttokens={}\tavg_len={avg:.2}\tempty_docs={}",
                s.field, s.n_terms, s.n_postings, s.collection_len, s.empty_docs
            )?;
        }
        Ok(())
    }
}

/// Per-field query bags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    bags: [TermBag; 3],
}

impl Query {
    pub fn new(content: TermBag, keywords: TermBag, authors: TermBag) -> Result<Self> {
        let q = Self {
            bags: [content, keywords, authors],
        };
        if q.bags.iter().all(|b| b.is_empty()) {
            return Err(Error::InvalidParam("query has no terms in any field".into()));
        }
        Ok(q)
    }

    pub fn from_fields(fields: ArticleFields) -> Result<Self> {
        Self::new(fields.content, fields.keywords, fields.authors)
    }

    pub fn bag(&self, field: Field) -> &TermBag {
        &self.bags[field.slot()]
    }

    /// True when every field with positive weight is empty.
    pub fn is_empty_under(&self, weights: &FieldWeights) -> bool {
        Field::ALL
            .iter()
            .all(|&f| weights.get(f) == 0.0 || self.bag(f).is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldWeights {
    pub content: f64,
    pub keywords: f64,
    pub authors: f64,
}

impl FieldWeights {
    /// Title+abstract and keywords clauses.
    pub const CONTENT: Self = Self {
        content: 1.0,
        keywords: 1.0,
        authors: 0.0,
    };
    pub const AUTHORS: Self = Self {
        content: 0.0,
        keywords: 0.0,
        authors: 1.0,
    };
    /// Content and authorship clauses in one query.
    pub const ALL: Self = Self {
        content: 1.0,
        keywords: 1.0,
        authors: 1.0,
    };

    pub fn get(&self, f: Field) -> f64 {
        match f {
            Field::Content => self.content,
            Field::Keywords => self.keywords,
            Field::Authors => self.authors,
        }
    }

    fn validate(&self) -> Result<()> {
        for f in Field::ALL {
            let w = self.get(f);
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidParam(format!("weight for {f} must be >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub weights: FieldWeights,
    /// Jelinek-Mercer collection weight λ_s in (0, 1).
    pub lambda_s: f64,
    pub top_n: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            weights: FieldWeights::CONTENT,
            lambda_s: 0.1,
            top_n: 1000,
        }
    }
}

fn check_lambda(lambda_s: f64) -> Result<()> {
    if lambda_s > 0.0 && lambda_s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "lambda_s must be in (0, 1), got {lambda_s}"
        )))
    }
}

#[inline]
fn jm_term(qtf: u32, tf: u32, doc_len: u64, cf: u64, coll_len: u64, lambda_s: f64) -> f64 {
    let p_doc = f64::from(tf) / doc_len as f64;
    let p_coll = cf as f64 / coll_len as f64;
    f64::from(qtf) * (1.0 + ((1.0 - lambda_s) * p_doc) / (lambda_s * p_coll)).ln()
}

/// Field score of one document for a query bag.
pub fn score_lm_jm(
    index: &FieldedIndex,
    query_bag: &TermBag,
    doc_id: &str,
    field: Field,
    lambda_s: f64,
) -> Result<f64> {
    check_lambda(lambda_s)?;
    let doc = index
        .doc_no(doc_id)
        .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))?;
    let fi = &index.fields[field.slot()];
    let mut score = 0.0;
    for (term, &qtf) in query_bag {
        let Some(entry) = fi.terms.get(term) else { continue };
        if let Ok(pos) = entry.postings.binary_search_by_key(&doc, |p| p.doc) {
            let tf = entry.postings[pos].tf;
            score += jm_term(qtf, tf, fi.doc_len[doc as usize], entry.cf, fi.total_len, lambda_s);
        }
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
    /// 1-based.
    pub position: usize,
}

/// Descending-score document ranking; ties by ascending doc_id; only
/// positive scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub entries: Vec<RankedDoc>,
}

impl RankedList {
    /// Sorts `(doc_id, score)` pairs into a ranking, dropping non-positive
    /// scores and truncating to `top_n`.
    pub fn from_scores(mut scored: Vec<(String, f64)>, top_n: usize) -> Self {
        scored.retain(|(_, s)| *s > 0.0);
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(top_n);
        Self {
            entries: scored
                .into_iter()
                .enumerate()
                .map(|(i, (doc_id, score))| RankedDoc {
                    doc_id,
                    score,
                    position: i + 1,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Term-at-a-time scoring over the postings of every weighted field.
pub fn search(index: &FieldedIndex, query: &Query, params: &SearchParams) -> Result<RankedList> {
    check_lambda(params.lambda_s)?;
    params.weights.validate()?;
    if params.top_n == 0 {
        return Err(Error::InvalidParam("top_n must be >= 1".into()));
    }
    let n = index.n_docs();
    let mut acc = vec![[0.0f64; 3]; n];
    let mut touched = Vec::new();
    let mut seen = vec![false; n];
    for f in Field::ALL {
        if params.weights.get(f) == 0.0 {
            continue;
        }
        let fi = &index.fields[f.slot()];
        for (term, &qtf) in query.bag(f) {
            let Some(entry) = fi.terms.get(term) else { continue };
            for p in &entry.postings {
                let d = p.doc as usize;
                acc[d][f.slot()] += jm_term(qtf, p.tf, fi.doc_len[d], entry.cf, fi.total_len, params.lambda_s);
                if !seen[d] {
                    seen[d] = true;
                    touched.push(p.doc);
                }
            }
        }
    }
    touched.sort_unstable();
    let mut scored: Vec<(u32, f64)> = touched
        .into_iter()
        .map(|d| {
            let s = Field::ALL
                .iter()
                .map(|&f| params.weights.get(f) * acc[d as usize][f.slot()])
                .sum::<f64>();
            (d, s)
        })
        .filter(|&(_, s)| s > 0.0)
        .collect();
    let cmp = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if scored.len() > params.top_n {
        scored.select_nth_unstable_by(params.top_n - 1, cmp);
        scored.truncate(params.top_n);
    }
    scored.sort_by(cmp);
    Ok(RankedList {
        entries: scored
            .into_iter()
            .enumerate()
            .map(|(i, (d, score))| RankedDoc {
                doc_id: index.docs[d as usize].doc_id.clone(),
                score,
                position: i + 1,
            })
            .collect(),
    })
}

// ---- persistence ---------------------------------------------------------

const MAGIC: &[u8; 4] = b"VRIX";
pub const FORMAT_VERSION: u16 = 1;

const STATS_FILE: &str = "stats.bin";
const DOCS_FILE: &str = "docs.bin";
const TERMS_FILE: &str = "terms.bin";
const POSTINGS_FILE: &str = "postings.bin";

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn header(&mut self, kind: u8) -> std::io::Result<()> {
        self.0.write_all(MAGIC)?;
        self.0.write_all(&FORMAT_VERSION.to_le_bytes())?;
        self.0.write_all(&[kind])
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len() as u32)?;
        self.0.write_all(s.as_bytes())
    }
}

struct In<'a> {
    buf: &'a [u8],
    path: &'a Path,
}

impl<'a> In<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::IndexFormat {
            path: self.path.to_path_buf(),
            reason: reason.into(),
        }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(self.err("unexpected end of file"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn header(&mut self, kind: u8) -> Result<()> {
        if self.take(4)? != MAGIC {
            return Err(self.err("bad magic"));
        }
        let v = u16::from_le_bytes(self.take(2)?.try_into().unwrap());
        if v != FORMAT_VERSION {
            return Err(self.err(format!("unsupported version {v} (expected {FORMAT_VERSION})")));
        }
        if self.take(1)?[0] != kind {
            return Err(self.err("wrong file kind"));
        }
        Ok(())
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.err("invalid utf-8"))
    }
    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(self.err("trailing bytes"))
        }
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut Out<BufWriter<File>>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = Out(BufWriter::new(file));
    body(&mut out)
        .and_then(|_| out.0.flush())
        .map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

impl FieldedIndex {
    /// Writes the terms dictionary, postings, doc table and stats into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join(STATS_FILE), |o| {
            o.header(0)?;
            o.u32(self.docs.len() as u32)?;
            for fi in &self.fields {
                o.u64(fi.total_len)?;
                o.u32(fi.terms.len() as u32)?;
            }
            Ok(())
        })?;
        write_file(&dir.join(DOCS_FILE), |o| {
            o.header(1)?;
            o.u32(self.docs.len() as u32)?;
            for (i, d) in self.docs.iter().enumerate() {
                o.str(&d.doc_id)?;
                o.str(&d.venue_id)?;
                for fi in &self.fields {
                    o.u64(fi.doc_len[i])?;
                }
            }
            Ok(())
        })?;
        let sorted: Vec<Vec<(&String, &TermEntry)>> = self
            .fields
            .iter()
            .map(|fi| {
                let mut v: Vec<_> = fi.terms.iter().collect();
                v.sort_by(|a, b| a.0.cmp(b.0));
                v
            })
            .collect();
        write_file(&dir.join(TERMS_FILE), |o| {
            o.header(2)?;
            for terms in &sorted {
                o.u32(terms.len() as u32)?;
                let mut offset = 0u64;
                for (term, e) in terms {
                    o.str(term)?;
                    o.u64(e.cf)?;
                    o.u32(e.postings.len() as u32)?;
                    o.u64(offset)?;
                    offset += e.postings.len() as u64;
                }
            }
            Ok(())
        })?;
        write_file(&dir.join(POSTINGS_FILE), |o| {
            o.header(3)?;
            for terms in &sorted {
                let total: usize = terms.iter().map(|(_, e)| e.postings.len()).sum();
                o.u64(total as u64)?;
                for (_, e) in terms {
                    for p in &e.postings {
                        o.u32(p.doc)?;
                        o.u32(p.tf)?;
                    }
                }
            }
            Ok(())
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let stats_path = dir.join(STATS_FILE);
        let stats_buf = read_file(&stats_path)?;
        let mut s = In {
            buf: &stats_buf,
            path: &stats_path,
        };
        s.header(0)?;
        let n_docs = s.u32()? as usize;
        let mut field_meta = [(0u64, 0usize); 3];
        for m in &mut field_meta {
            *m = (s.u64()?, s.u32()? as usize);
        }
        s.finish()?;

        let docs_path = dir.join(DOCS_FILE);
        let docs_buf = read_file(&docs_path)?;
        let mut d = In {
            buf: &docs_buf,
            path: &docs_path,
        };
        d.header(1)?;
        if d.u32()? as usize != n_docs {
            return Err(d.err("document count disagrees with stats"));
        }
        let mut docs = Vec::with_capacity(n_docs);
        let mut doc_len = [(); 3].map(|_| Vec::with_capacity(n_docs));
        for _ in 0..n_docs {
            docs.push(DocEntry {
                doc_id: d.str()?,
                venue_id: d.str()?,
            });
            for lens in &mut doc_len {
                lens.push(d.u64()?);
            }
        }
        d.finish()?;
        if docs.windows(2).any(|w| w[0].doc_id >= w[1].doc_id) {
            return Err(d.err("doc table not sorted by doc_id"));
        }

        let terms_path = dir.join(TERMS_FILE);
        let terms_buf = read_file(&terms_path)?;
        let mut t = In {
            buf: &terms_buf,
            path: &terms_path,
        };
        t.header(2)?;
        let postings_path = dir.join(POSTINGS_FILE);
        let postings_buf = read_file(&postings_path)?;
        let mut p = In {
            buf: &postings_buf,
            path: &postings_path,
        };
        p.header(3)?;

        let mut fields: [FieldIndex; 3] = Default::default();
        for (slot, fi) in fields.iter_mut().enumerate() {
            let (total_len, n_terms) = field_meta[slot];
            if t.u32()? as usize != n_terms {
                return Err(t.err("term count disagrees with stats"));
            }
            let mut dict = Vec::with_capacity(n_terms);
            for _ in 0..n_terms {
                let term = t.str()?;
                let cf = t.u64()?;
                let len = t.u32()? as usize;
                let offset = t.u64()?;
                dict.push((term, cf, len, offset));
            }
            let total = p.u64()?;
            let mut read = 0u64;
            for (term, cf, len, offset) in dict {
                if offset != read {
                    return Err(t.err(format!("postings offset mismatch for `{term}`")));
                }
                let mut postings = Vec::with_capacity(len);
                for _ in 0..len {
                    let doc = p.u32()?;
                    let tf = p.u32()?;
                    if doc as usize >= n_docs {
                        return Err(p.err("posting references unknown document"));
                    }
                    postings.push(Posting { doc, tf });
                }
                read += len as u64;
                fi.terms.insert(term, TermEntry { cf, postings });
            }
            if read != total {
                return Err(p.err("postings count mismatch"));
            }
            fi.doc_len = std::mem::take(&mut doc_len[slot]);
            fi.total_len = total_len;
        }
        t.finish()?;
        p.finish()?;
        Ok(Self::assemble(docs, fields))
    }
}

/// Rebuilds per-document field bags from the postings. Used to compare an
/// index against the profiles it came from.
pub fn document_bags(index: &FieldedIndex) -> BTreeMap<String, ArticleFields> {
    let mut out: BTreeMap<String, ArticleFields> = index
        .docs
        .iter()
        .map(|d| (d.doc_id.clone(), ArticleFields::default()))
        .collect();
    for f in Field::ALL {
        for (term, e) in &index.fields[f.slot()].terms {
            for p in &e.postings {
                let fields = out.get_mut(&index.docs[p.doc as usize].doc_id).unwrap();
                let bag = match f {
                    Field::Content => &mut fields.content,
                    Field::Keywords => &mut fields.keywords,
                    Field::Authors => &mut fields.authors,
                };
                bag.insert(term.clone(), p.tf);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::bag_of;

    fn doc(id: &str, venue: &str, content: &[(&str, u32)]) -> Subprofile {
        Subprofile {
            doc_id: id.into(),
            venue_id: venue.into(),
            cluster_id: None,
            content: content.iter().map(|&(t, n)| (t.to_string(), n)).collect(),
            keywords: TermBag::new(),
            authors: TermBag::new(),
            n_articles: 1,
        }
    }

    fn two_docs() -> FieldedIndex {
        FieldedIndex::build(&[doc("d1", "v1", &[("a", 2), ("b", 1)]), doc("d2", "v2", &[("b", 3)])]).unwrap()
    }

    #[test]
    fn collection_statistics() {
        let idx = two_docs();
        assert_eq!(idx.cf(Field::Content, "a"), 2);
        assert_eq!(idx.cf(Field::Content, "b"), 4);
        assert_eq!(idx.collection_len(Field::Content), 6);
        assert_eq!(idx.collection_len(Field::Authors), 0);
        assert_eq!(
            idx.postings(Field::Content, "b"),
            &[Posting { doc: 0, tf: 1 }, Posting { doc: 1, tf: 3 }]
        );
    }

    #[test]
    fn hand_evaluated_scores() {
        let idx = two_docs();
        let s = score_lm_jm(&idx, &bag_of(["a"]), "d1", Field::Content, 0.5).unwrap();
        assert!((s - 3f64.ln()).abs() < 1e-12);
        assert!((s - 1.0986).abs() < 1e-4);
        // |d2| = 3, P(b|C) = 4/6: 2·ln(1 + 1/(4/6)) = 2·ln(2.5)
        let s = score_lm_jm(&idx, &bag_of(["b", "b"]), "d2", Field::Content, 0.5).unwrap();
        assert!((s - 2.0 * 2.5f64.ln()).abs() < 1e-12);
        let s = score_lm_jm(&idx, &bag_of(["zzz"]), "d1", Field::Content, 0.5).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn three_quarter_doc_share() {
        // tf/|d| = 3/4 against P(b|C) = 8/12
        let idx = FieldedIndex::build(&[
            doc("d1", "v1", &[("a", 2), ("b", 4)]),
            doc("d2", "v2", &[("b", 3), ("c", 1)]),
            doc("d3", "v3", &[("b", 1), ("e", 1)]),
        ])
        .unwrap();
        let s = score_lm_jm(&idx, &bag_of(["a"]), "d1", Field::Content, 0.5).unwrap();
        assert!((s - 3f64.ln()).abs() < 1e-12);
        let s = score_lm_jm(&idx, &bag_of(["b", "b"]), "d2", Field::Content, 0.5).unwrap();
        assert!((s - 2.0 * 2.125f64.ln()).abs() < 1e-12);
        assert!((s - 1.5077).abs() < 5e-4);
    }

    #[test]
    fn scoring_errors() {
        let idx = two_docs();
        assert!(matches!(
            score_lm_jm(&idx, &bag_of(["a"]), "nope", Field::Content, 0.5),
            Err(Error::UnknownDoc(_))
        ));
        assert!(score_lm_jm(&idx, &bag_of(["a"]), "d1", Field::Content, 1.0).is_err());
        assert!(matches!("title".parse::<Field>(), Err(Error::UnknownField(_))));
    }

    #[test]
    fn empty_field_doc() {
        let idx = FieldedIndex::build(&[doc("d", "v", &[])]).unwrap();
        for f in Field::ALL {
            assert_eq!(idx.collection_len(f), 0);
            assert_eq!(idx.doc_len(f, 0), 0);
            assert_eq!(idx.n_terms(f), 0);
        }
    }

    #[test]
    fn duplicate_doc_rejected() {
        let r = FieldedIndex::build(&[doc("d", "v", &[("a", 1)]), doc("d", "w", &[("b", 1)])]);
        assert!(matches!(r, Err(Error::DuplicateDoc(_))));
        assert!(FieldedIndex::build(&[]).is_err());
    }

    #[test]
    fn search_orders_and_masks() {
        let idx = two_docs();
        let q = Query::new(bag_of(["b"]), TermBag::new(), TermBag::new()).unwrap();
        let params = SearchParams {
            lambda_s: 0.5,
            ..SearchParams::default()
        };
        let r = search(&idx, &q, &params).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.entries[0].doc_id, "d2");
        assert_eq!(r.entries[0].position, 1);
        let masked = SearchParams {
            weights: FieldWeights::AUTHORS,
            ..params
        };
        assert!(search(&idx, &q, &masked).unwrap().is_empty());
        let top1 = SearchParams { top_n: 1, ..params };
        assert_eq!(search(&idx, &q, &top1).unwrap().len(), 1);
    }

    #[test]
    fn ties_break_by_doc_id() {
        let idx = FieldedIndex::build(&[
            doc("z", "v1", &[("a", 1)]),
            doc("m", "v2", &[("a", 1)]),
            doc("b", "v3", &[("a", 1)]),
        ])
        .unwrap();
        let q = Query::new(bag_of(["a"]), TermBag::new(), TermBag::new()).unwrap();
        let r = search(&idx, &q, &SearchParams::default()).unwrap();
        let ids: Vec<&str> = r.entries.iter().map(|e| e.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "m", "z"]);
    }

    #[test]
    fn empty_query_rejected() {
        assert!(Query::new(TermBag::new(), TermBag::new(), TermBag::new()).is_err());
    }

    #[test]
    fn persistence_roundtrip_and_corruption() {
        let mut d1 = doc("d1", "v1", &[("a", 2), ("b", 1)]);
        d1.authors = bag_of(["0000-0001", "0000-0001"]);
        d1.keywords = bag_of(["cardio"]);
        let idx = FieldedIndex::build(&[d1, doc("d2", "v2", &[("b", 3)])]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        let back = FieldedIndex::load(dir.path()).unwrap();
        assert_eq!(back, idx);

        let p = dir.path().join(POSTINGS_FILE);
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] = b'X';
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(FieldedIndex::load(dir.path()), Err(Error::IndexFormat { .. })));
    }

    #[test]
    fn stats_text() {
        let text = two_docs().stats().to_string();
        assert!(text.contains("documents\t2"));
        assert!(text.contains("content\tterms=2\tpostings=3\ttokens=6"));
    }
}
