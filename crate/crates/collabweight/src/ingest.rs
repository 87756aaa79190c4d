//! Readers for the organization registry, the income classes and the
//! publication corpus.
//!
//! Malformed rows are rejected and counted rather than aborting the load; only
//! an unreadable file or a missing header column is fatal.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use collabweight_core::model::{dedup_preserving_order, is_country_code};
use collabweight_core::{
    classify_gni, Affiliation, Author, ClassTable, CountryClass, IncomeGroup, OrgRecord,
    OrgRegistry, Publication,
};
use serde::{Deserialize, Serialize};

/// At most this many rejected lines are kept verbatim in a report.
pub const SAMPLE_CAP: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: missing required column '{column}'")]
    MissingColumn { path: PathBuf, column: &'static str },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: read failed: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub records_read: u64,
    pub records_rejected: u64,
    pub unresolved_affiliation_count: u64,
    pub unknown_org_refs: u64,
    pub unknown_country_refs: u64,
    /// Non-fatal findings on accepted rows (e.g. GNI disagreeing with the income label).
    pub warnings: u64,
    pub sample_errors: Vec<SampleError>,
}

impl LoadReport {
    pub fn accepted(&self) -> u64 {
        self.records_read - self.records_rejected
    }

    fn reject(&mut self, line: u64, message: impl Into<String>) {
        self.records_rejected += 1;
        self.note(line, message);
    }

    fn note(&mut self, line: u64, message: impl Into<String>) {
        if self.sample_errors.len() < SAMPLE_CAP {
            self.sample_errors.push(SampleError {
                line,
                message: message.into(),
            });
        }
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Open {
        path: path.to_owned(),
        source,
    })
}

struct CsvTable<R> {
    reader: csv::Reader<R>,
    columns: Vec<Option<usize>>,
}

fn csv_table<R: Read>(
    input: R,
    path: &Path,
    required: &[&'static str],
    optional: &[&'static str],
) -> Result<CsvTable<R>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|source| IngestError::Csv {
            path: path.to_owned(),
            source,
        })?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut columns = Vec::new();
    for &name in required {
        match find(name) {
            Some(i) => columns.push(Some(i)),
            None => {
                return Err(IngestError::MissingColumn {
                    path: path.to_owned(),
                    column: name,
                })
            }
        }
    }
    columns.extend(optional.iter().map(|name| find(name)));
    Ok(CsvTable { reader, columns })
}

/// Load `org_id,name,country_code` rows.
pub fn load_orgs(path: &Path) -> Result<(OrgRegistry, LoadReport), IngestError> {
    read_orgs(open(path)?, path)
}

pub fn read_orgs<R: Read>(input: R, path: &Path) -> Result<(OrgRegistry, LoadReport), IngestError> {
    let mut table = csv_table(input, path, &["org_id", "name", "country_code"], &[])?;
    let mut registry = OrgRegistry::new();
    let mut report = LoadReport::default();
    for result in table.reader.records() {
        report.records_read += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.reject(line, e.to_string());
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| table.columns[i].and_then(|c| record.get(c)).map(str::trim);
        let (Some(org_id), Some(name), Some(country)) = (field(0), field(1), field(2)) else {
            report.reject(line, "row has too few fields");
            continue;
        };
        if org_id.is_empty() {
            report.reject(line, "empty org_id");
            continue;
        }
        if !is_country_code(country) {
            report.reject(line, format!("malformed country code '{country}'"));
            continue;
        }
        if registry.contains_key(org_id) {
            report.reject(line, format!("duplicate org_id '{org_id}'"));
            continue;
        }
        registry.insert(
            org_id.to_owned(),
            OrgRecord {
                org_id: org_id.to_owned(),
                name: name.to_owned(),
                country_code: country.to_owned(),
            },
        );
    }
    Ok((registry, report))
}

/// Load `country_code,country_name,income_group[,gni_per_capita]` rows.
pub fn load_classes(path: &Path) -> Result<(ClassTable, LoadReport), IngestError> {
    read_classes(open(path)?, path)
}

pub fn read_classes<R: Read>(input: R, path: &Path) -> Result<(ClassTable, LoadReport), IngestError> {
    let mut table = csv_table(
        input,
        path,
        &["country_code", "country_name", "income_group"],
        &["gni_per_capita"],
    )?;
    let mut classes = ClassTable::new();
    let mut report = LoadReport::default();
    for result in table.reader.records() {
        report.records_read += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                report.reject(line, e.to_string());
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| table.columns[i].and_then(|c| record.get(c)).map(str::trim);
        let (Some(code), Some(name), Some(label)) = (field(0), field(1), field(2)) else {
            report.reject(line, "row has too few fields");
            continue;
        };
        if !is_country_code(code) {
            report.reject(line, format!("malformed country code '{code}'"));
            continue;
        }
        let income_group = match IncomeGroup::parse(label) {
            Ok(g) => g,
            Err(e) => {
                report.reject(line, e.to_string());
                continue;
            }
        };
        let gni_per_capita = match field(3).filter(|s| !s.is_empty()) {
            None => None,
            Some(raw) => match raw.parse::<f64>().map(|v| (v, classify_gni(v))) {
                Ok((v, Ok(_))) => Some(v),
                Ok((_, Err(e))) => {
                    report.reject(line, e.to_string());
                    continue;
                }
                Err(_) => {
                    report.reject(line, format!("gni_per_capita '{raw}' is not a number"));
                    continue;
                }
            },
        };
        if classes.contains_key(code) {
            report.reject(line, format!("duplicate country_code '{code}'"));
            continue;
        }
        let class = CountryClass {
            country_code: code.to_owned(),
            country_name: name.to_owned(),
            income_group,
            gni_per_capita,
        };
        if !class.gni_consistent() {
            report.warnings += 1;
            report.note(
                line,
                format!(
                    "warning: GNI {} classifies as '{}' but row says '{}'",
                    gni_per_capita.unwrap_or_default(),
                    classify_gni(gni_per_capita.unwrap_or_default()).map_or("?", |g| g.label()),
                    income_group
                ),
            );
        }
        classes.insert(code.to_owned(), class);
    }
    Ok((classes, report))
}

#[derive(Deserialize)]
struct RawPublication {
    id: Option<String>,
    year: Option<i64>,
    authors: Option<Vec<RawAuthor>>,
    #[serde(default)]
    for_codes: Option<Vec<String>>,
    #[serde(default)]
    sdg_codes: Option<Vec<String>>,
    #[serde(default)]
    funder_org_ids: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct RawAuthor {
    #[serde(default)]
    affiliations: Option<Vec<Option<String>>>,
}

fn parse_line(line: &str) -> Result<Publication, String> {
    let raw: RawPublication = serde_json::from_str(line).map_err(|e| format!("invalid record: {e}"))?;
    let id = raw.id.ok_or("missing required field 'id'")?;
    if id.is_empty() {
        return Err("empty 'id'".into());
    }
    let year = raw.year.ok_or("missing required field 'year'")?;
    let year = i32::try_from(year).map_err(|_| format!("year {year} out of range"))?;
    let authors = raw
        .authors
        .ok_or("missing required field 'authors'")?
        .into_iter()
        .map(|a| {
            Author::new(
                a.affiliations
                    .unwrap_or_default()
                    .into_iter()
                    .map(|aff| match aff {
                        Some(id) if !id.is_empty() => Affiliation::Resolved(id),
                        _ => Affiliation::Unresolved,
                    })
                    .collect(),
            )
        })
        .collect();
    let tags = |v: Option<Vec<String>>| {
        let mut v = v.unwrap_or_default();
        dedup_preserving_order(&mut v);
        v
    };
    Ok(Publication {
        pub_id: id,
        year,
        authors,
        for_codes: tags(raw.for_codes),
        sdg_codes: tags(raw.sdg_codes),
        funder_org_ids: tags(raw.funder_org_ids),
    })
}

/// Streaming JSONL publication reader.
///
/// Yields accepted publications in file order and keeps the running
/// [`LoadReport`]. Duplicate ids after the first occurrence are rejected.
pub struct PublicationStream<R> {
    input: R,
    path: PathBuf,
    line_no: u64,
    buf: String,
    seen: HashSet<String>,
    report: LoadReport,
    error: Option<IngestError>,
}

impl<R: BufRead> PublicationStream<R> {
    pub fn new(input: R, path: impl Into<PathBuf>) -> Self {
        PublicationStream {
            input,
            path: path.into(),
            line_no: 0,
            buf: String::new(),
            seen: HashSet::new(),
            report: LoadReport::default(),
            error: None,
        }
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    /// Final report, or the I/O error that cut the stream short.
    pub fn finish(self) -> Result<LoadReport, IngestError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.report),
        }
    }
}

impl<R: BufRead> Iterator for PublicationStream<R> {
    type Item = Publication;

    fn next(&mut self) -> Option<Publication> {
        loop {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    self.error = Some(IngestError::Read {
                        path: self.path.clone(),
                        source,
                    });
                    return None;
                }
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            self.report.records_read += 1;
            match parse_line(line) {
                Ok(p) => {
                    if !self.seen.insert(p.pub_id.clone()) {
                        let msg = format!("duplicate publication id '{}'", p.pub_id);
                        self.report.reject(self.line_no, msg);
                        continue;
                    }
                    self.report.unresolved_affiliation_count += p
                        .authors
                        .iter()
                        .flat_map(|a| &a.affiliations)
                        .filter(|a| matches!(a, Affiliation::Unresolved))
                        .count() as u64;
                    return Some(p);
                }
                Err(msg) => self.report.reject(self.line_no, msg),
            }
        }
    }
}

pub fn load_publications(path: &Path) -> Result<PublicationStream<BufReader<File>>, IngestError> {
    Ok(PublicationStream::new(BufReader::new(open(path)?), path))
}

/// JSONL form of a publication, the inverse of the reader.
pub fn publication_json(p: &Publication) -> serde_json::Value {
    let authors: Vec<serde_json::Value> = p
        .authors
        .iter()
        .map(|a| {
            let affs: Vec<Option<&str>> = a.affiliations.iter().map(|x| x.org_id()).collect();
            serde_json::json!({ "affiliations": affs })
        })
        .collect();
    let mut v = serde_json::json!({ "id": p.pub_id, "year": p.year, "authors": authors });
    let obj = v.as_object_mut().expect("object");
    for (name, codes) in [
        ("for_codes", &p.for_codes),
        ("sdg_codes", &p.sdg_codes),
        ("funder_org_ids", &p.funder_org_ids),
    ] {
        if !codes.is_empty() {
            obj.insert(name.into(), serde_json::json!(codes));
        }
    }
    v
}
