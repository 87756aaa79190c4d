//! Fractionally weighted international collaboration statistics.
//!
//! Publications carry ordered authors with ordered affiliations. Each resolved
//! affiliation is joined to an organization registry and from there to a
//! country income classification. [`engine`] enumerates weighted links between
//! organizations in different countries and folds them into grouped tables,
//! [`oracle`] is a brute-force reference for the same computation, and
//! [`report`] turns tables into proportions, rankings and chord matrices.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod engine;
pub mod model;
pub mod oracle;
pub mod report;

pub use engine::{
    aggregate, enumerate_exposures, AggregateTable, AnalysisSpec, Aggregator, Context, GroupBy,
    GroupKey, MergeError, PartialAggregate, Row, SkipCounts, SpecError,
};
pub use model::{
    classify_gni, Affiliation, Author, ClassTable, CountryClass, ExposureRecord, GniError,
    IncomeGroup, OrgRecord, OrgRegistry, Publication, UnknownIncomeLabel,
};
pub use oracle::{oracle_aggregate, oracle_exposures};
pub use report::{
    export_chord, normalize_rows, top_n, ChordData, Normalization, ProportionRow, ProportionTable,
    ReportError, TopEntry, TopOrder,
};
