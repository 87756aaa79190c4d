//! CSV and chord JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use collabweight_core::{AggregateTable, ChordData, ProportionTable, TopEntry};
use serde::Serialize;

pub const CSV_HEADER: [&str; 6] = [
    "group",
    "low_income",
    "lower_middle",
    "upper_middle",
    "high_income",
    "all_overseas",
];

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

/// One CSV line: group id, four income columns, overseas total.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub group: String,
    pub income: [f64; 4],
    pub all_overseas: f64,
}

impl CsvRow {
    pub fn from_table(table: &AggregateTable) -> Vec<CsvRow> {
        table
            .rows
            .iter()
            .map(|(k, r)| CsvRow {
                group: k.id().to_owned(),
                income: r.income,
                all_overseas: r.overseas_total,
            })
            .collect()
    }

    /// Shares in the income columns, absolute total in `all_overseas`.
    pub fn from_proportions(table: &ProportionTable) -> Vec<CsvRow> {
        table
            .rows
            .iter()
            .map(|(k, r)| CsvRow {
                group: k.id().to_owned(),
                income: r.shares,
                all_overseas: r.overseas_total,
            })
            .collect()
    }

    /// Ranked order is kept.
    pub fn from_top(entries: &[TopEntry]) -> Vec<CsvRow> {
        entries
            .iter()
            .map(|e| CsvRow {
                group: e.key.id().to_owned(),
                income: e.proportions.shares,
                all_overseas: e.proportions.overseas_total,
            })
            .collect()
    }
}

/// Write rows with six decimals under the fixed header, in the given order.
pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let mut fields = Vec::with_capacity(6);
        fields.push(row.group.clone());
        fields.extend(row.income.iter().map(|v| format!("{v:.6}")));
        fields.push(format!("{:.6}", row.all_overseas));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R, path: &Path) -> Result<Vec<CsvRow>, ExportError> {
    let mut r = csv::Reader::from_reader(input);
    let csv_err = |source| ExportError::Csv {
        path: path.to_owned(),
        source,
    };
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(ExportError::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!("unexpected header {:?}", header),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, ExportError> {
            rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| ExportError::Parse {
                path: path.to_owned(),
                line,
                message: format!("column {} is not a number", CSV_HEADER[i]),
            })
        };
        rows.push(CsvRow {
            group: rec.get(0).unwrap_or_default().to_owned(),
            income: [num(1)?, num(2)?, num(3)?, num(4)?],
            all_overseas: num(5)?,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct ChordJson<'a> {
    labels: &'a [&'static str; 4],
    matrix: &'a [[f64; 4]; 4],
    normalization: &'static str,
    bilateral_only: bool,
}

pub fn chord_json(chord: &ChordData) -> String {
    let doc = ChordJson {
        labels: &chord.labels,
        matrix: &chord.matrix,
        normalization: chord.normalization.as_str(),
        bilateral_only: ChordData::BILATERAL_ONLY,
    };
    serde_json::to_string(&doc).expect("chord data serializes")
}

/// Run `render` against `path`, or against stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, render: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), ExportError> {
    match path {
        Some(p) => {
            let io_err = |source| ExportError::Io {
                path: p.to_owned(),
                source,
            };
            let mut w = BufWriter::new(File::create(p).map_err(io_err)?);
            render(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            render(&mut lock).map_err(|source| ExportError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

pub fn write_csv_to(path: Option<&Path>, rows: &[CsvRow]) -> Result<(), ExportError> {
    write_output(path, |w| write_csv(w, rows).map_err(io::Error::other))
}

pub fn write_chord_to(path: &Path, chord: &ChordData) -> Result<(), ExportError> {
    write_output(Some(path), |w| {
        w.write_all(chord_json(chord).as_bytes())?;
        w.write_all(b"\n")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use collabweight_core::{GroupBy, GroupKey, IncomeGroup, Normalization, Row};

    fn render(rows: &[CsvRow]) -> String {
        let mut buf = Vec::new();
        write_csv(&mut buf, rows).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(
            render(&CsvRow::from_table(&AggregateTable::new(GroupBy::Country))),
            "group,low_income,lower_middle,upper_middle,high_income,all_overseas\n"
        );
    }

    #[test]
    fn one_row() {
        let mut t = AggregateTable::new(GroupBy::Income);
        t.rows.insert(
            GroupKey::Income(IncomeGroup::High),
            Row {
                income: [0.5, 0.0, 0.0, 0.0],
                overseas_total: 0.5,
            },
        );
        let text = render(&CsvRow::from_table(&t));
        assert_eq!(
            text,
            "group,low_income,lower_middle,upper_middle,high_income,all_overseas\n\
             High income,0.500000,0.000000,0.000000,0.000000,0.500000\n"
        );
        assert_eq!(text, render(&CsvRow::from_table(&t)));
    }

    #[test]
    fn awkward_group_ids_are_quoted() {
        let rows = vec![CsvRow {
            group: "Org, \"X\"".into(),
            income: [1.0, 0.0, 0.0, 0.0],
            all_overseas: 1.0,
        }];
        let text = render(&rows);
        assert!(text.contains("\"Org, \"\"X\"\"\""));
        let back = read_csv(text.as_bytes(), Path::new("t.csv")).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn chord_schema() {
        let chord = collabweight_core::export_chord(&AggregateTable::new(GroupBy::Income), Normalization::Raw).unwrap();
        let v: serde_json::Value = serde_json::from_str(&chord_json(&chord)).unwrap();
        assert_eq!(v["labels"][0], "Low income");
        assert_eq!(v["normalization"], "raw");
        assert_eq!(v["bilateral_only"], true);
        assert_eq!(v["matrix"].as_array().unwrap().len(), 4);
    }

    proptest::proptest! {
        #[test]
        fn csv_round_trip_within_print_precision(
            cells in proptest::collection::vec(proptest::array::uniform5(0.0f64..1e4), 0..20)
        ) {
            let rows: Vec<CsvRow> = cells.iter().enumerate().map(|(i, c)| CsvRow {
                group: format!("g{i:03}"),
                income: [c[0], c[1], c[2], c[3]],
                all_overseas: c[4],
            }).collect();
            let back = read_csv(render(&rows).as_bytes(), Path::new("t.csv")).unwrap();
            proptest::prop_assert_eq!(back.len(), rows.len());
            for (a, b) in rows.iter().zip(&back) {
                proptest::prop_assert_eq!(&a.group, &b.group);
                for g in 0..4 {
                    proptest::prop_assert!((a.income[g] - b.income[g]).abs() <= 1e-6);
                }
                proptest::prop_assert!((a.all_overseas - b.all_overseas).abs() <= 1e-6);
            }
        }
    }
}
