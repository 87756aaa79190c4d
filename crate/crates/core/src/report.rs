//! Presentation forms: row proportions, ranked listings and chord matrices.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::engine::{AggregateTable, GroupBy, GroupKey};
use crate::model::IncomeGroup;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportError {
    ZeroCount,
    NotIncomeGrouped(GroupBy),
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::ZeroCount => f.write_str("top-n listing needs n >= 1"),
            ReportError::NotIncomeGrouped(g) => {
                write!(f, "chord export needs a table grouped by income, got {g:?}")
            }
        }
    }
}

impl core::error::Error for ReportError {}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProportionRow {
    /// Share of the row total per source income group.
    pub shares: [f64; 4],
    pub overseas_total: f64,
}

impl ProportionRow {
    pub fn non_high(&self) -> f64 {
        self.shares[0] + self.shares[1] + self.shares[2]
    }

    pub fn low(&self) -> f64 {
        self.shares[IncomeGroup::Low.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProportionTable {
    pub group_by: GroupBy,
    pub rows: BTreeMap<GroupKey, ProportionRow>,
}

/// Divide each row by its total. Rows with a zero total are dropped.
pub fn normalize_rows(table: &AggregateTable) -> ProportionTable {
    let rows = table
        .rows
        .iter()
        .filter(|(_, row)| row.overseas_total > 0.0)
        .map(|(key, row)| {
            let mut shares = row.income;
            for s in &mut shares {
                *s /= row.overseas_total;
            }
            (
                key.clone(),
                ProportionRow {
                    shares,
                    overseas_total: row.overseas_total,
                },
            )
        })
        .collect();
    ProportionTable {
        group_by: table.group_by,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopOrder {
    /// Low + lower-middle + upper-middle share, descending.
    NonHighCumulative,
    /// Low-income share, descending.
    LowIncomeShare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopEntry {
    pub key: GroupKey,
    pub proportions: ProportionRow,
}

/// The `n` highest-ranked rows. Exact ties go to the smaller key.
pub fn top_n(table: &AggregateTable, n: usize, order: TopOrder) -> Result<Vec<TopEntry>, ReportError> {
    if n == 0 {
        return Err(ReportError::ZeroCount);
    }
    let score = |row: &ProportionRow| match order {
        TopOrder::NonHighCumulative => row.non_high(),
        TopOrder::LowIncomeShare => row.low(),
    };
    let mut entries: Vec<TopEntry> = normalize_rows(table)
        .rows
        .into_iter()
        .map(|(key, proportions)| TopEntry { key, proportions })
        .collect();
    entries.sort_by(|a, b| {
        score(&b.proportions)
            .total_cmp(&score(&a.proportions))
            .then_with(|| a.key.cmp(&b.key))
    });
    entries.truncate(n);
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    /// Each matrix row rescaled to sum to one (all-zero rows stay zero).
    Row,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::Row => "row",
        }
    }
}

/// Bilateral flows between income groups.
///
/// `matrix[s][t]` is the weight flowing from source income `s` to target
/// income `t`; labels run Low to High.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordData {
    pub labels: [&'static str; 4],
    pub matrix: [[f64; 4]; 4],
    pub normalization: Normalization,
}

impl ChordData {
    /// Chord data never represents links among three or more groups at once.
    pub const BILATERAL_ONLY: bool = true;
}

pub fn export_chord(table: &AggregateTable, normalization: Normalization) -> Result<ChordData, ReportError> {
    if table.group_by != GroupBy::Income {
        return Err(ReportError::NotIncomeGrouped(table.group_by));
    }
    let mut matrix = [[0.0f64; 4]; 4];
    for (key, row) in &table.rows {
        let GroupKey::Income(target) = key else {
            return Err(ReportError::NotIncomeGrouped(table.group_by));
        };
        // Table rows are target-keyed with source columns; the chord matrix is source-major.
        for source in IncomeGroup::ALL {
            matrix[source.index()][target.index()] = row.get(source);
        }
    }
    if normalization == Normalization::Row {
        for r in &mut matrix {
            let sum: f64 = r.iter().sum();
            if sum > 0.0 {
                r.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }
    Ok(ChordData {
        labels: IncomeGroup::ALL.map(IncomeGroup::label),
        matrix,
        normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Row;

    fn table(rows: &[(&str, [f64; 4])]) -> AggregateTable {
        let mut t = AggregateTable::new(GroupBy::Country);
        for (id, income) in rows {
            t.rows.insert(
                GroupKey::Tag((*id).into()),
                Row {
                    income: *income,
                    overseas_total: income.iter().sum(),
                },
            );
        }
        t
    }

    #[test]
    fn single_cell_row() {
        let p = normalize_rows(&table(&[("a", [0.5, 0.0, 0.0, 0.0])]));
        assert_eq!(p.rows[&GroupKey::Tag("a".into())].shares, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn quarter_split() {
        let p = normalize_rows(&table(&[("a", [1.0, 0.0, 0.0, 3.0])]));
        let row = p.rows[&GroupKey::Tag("a".into())];
        assert_eq!(row.shares, [0.25, 0.0, 0.0, 0.75]);
        assert_eq!(row.overseas_total, 4.0);
    }

    #[test]
    fn zero_rows_dropped() {
        let p = normalize_rows(&table(&[("a", [0.0; 4]), ("b", [1.0, 0.0, 0.0, 0.0])]));
        assert_eq!(p.rows.len(), 1);
    }

    #[test]
    fn top_orders_by_share() {
        let t = table(&[("a", [0.4, 0.0, 0.0, 0.6]), ("b", [0.0, 0.6, 0.0, 0.4])]);
        let top = top_n(&t, 12, TopOrder::NonHighCumulative).unwrap();
        assert_eq!(top[0].key.id(), "b");
        assert_eq!(top.len(), 2);
        let by_low = top_n(&t, 1, TopOrder::LowIncomeShare).unwrap();
        assert_eq!(by_low.len(), 1);
        assert_eq!(by_low[0].key.id(), "a");
    }

    #[test]
    fn ties_go_to_smaller_key() {
        let t = table(&[("z", [1.0, 0.0, 0.0, 1.0]), ("m", [1.0, 0.0, 0.0, 1.0])]);
        let top = top_n(&t, 2, TopOrder::NonHighCumulative).unwrap();
        assert_eq!(top[0].key.id(), "m");
        assert_eq!(top[1].key.id(), "z");
    }

    #[test]
    fn zero_n_rejected() {
        assert_eq!(top_n(&table(&[]), 0, TopOrder::LowIncomeShare), Err(ReportError::ZeroCount));
    }

    #[test]
    fn chord_of_empty_table_is_zero() {
        let c = export_chord(&AggregateTable::new(GroupBy::Income), Normalization::Row).unwrap();
        assert_eq!(c.matrix, [[0.0; 4]; 4]);
        assert_eq!(c.labels[0], "Low income");
        assert_eq!(c.labels[3], "High income");
    }

    #[test]
    fn chord_needs_income_grouping() {
        assert!(matches!(
            export_chord(&table(&[]), Normalization::Raw),
            Err(ReportError::NotIncomeGrouped(GroupBy::Country))
        ));
    }

    #[test]
    fn chord_is_source_major() {
        let mut t = AggregateTable::new(GroupBy::Income);
        // Target Low row receives 2.0 from High sources.
        t.rows.insert(
            GroupKey::Income(IncomeGroup::Low),
            Row {
                income: [0.0, 0.0, 0.0, 2.0],
                overseas_total: 2.0,
            },
        );
        let c = export_chord(&t, Normalization::Raw).unwrap();
        assert_eq!(c.matrix[3][0], 2.0);
        assert_eq!(c.matrix[0][3], 0.0);
    }

    proptest::proptest! {
        #[test]
        fn top_k_is_prefix(rows in proptest::collection::vec(proptest::array::uniform4(0u8..4), 0..20), k in 1usize..25) {
            let owned: Vec<(alloc::string::String, [f64; 4])> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| (alloc::format!("k{i:02}"), r.map(f64::from)))
                .collect();
            let borrowed: Vec<(&str, [f64; 4])> = owned.iter().map(|(k, r)| (k.as_str(), *r)).collect();
            let t = table(&borrowed);
            for order in [TopOrder::NonHighCumulative, TopOrder::LowIncomeShare] {
                let all = top_n(&t, usize::MAX, order).unwrap();
                let some = top_n(&t, k, order).unwrap();
                proptest::prop_assert_eq!(&all[..some.len()], &some[..]);
                proptest::prop_assert_eq!(some.len(), k.min(all.len()));
            }
        }

        #[test]
        fn normalizing_normalized_is_identity(rows in proptest::collection::vec(proptest::array::uniform4(0.0f64..10.0), 1..10)) {
            let owned: Vec<(alloc::string::String, [f64; 4])> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| (alloc::format!("k{i}"), *r))
                .collect();
            let borrowed: Vec<(&str, [f64; 4])> = owned.iter().map(|(k, r)| (k.as_str(), *r)).collect();
            let once = normalize_rows(&table(&borrowed));
            let mut rescaled = AggregateTable::new(GroupBy::Country);
            for (k, r) in &once.rows {
                rescaled.rows.insert(k.clone(), Row { income: r.shares, overseas_total: 1.0 });
            }
            let twice = normalize_rows(&rescaled);
            for (k, r) in &once.rows {
                let r2 = twice.rows[k];
                for g in 0..4 {
                    proptest::prop_assert!((r.shares[g] - r2.shares[g]).abs() <= 1e-12);
                }
            }
        }
    }
}
