//! Domain types shared by the engine, the oracle and the report layer.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// World Bank income classification. Ordered from poorest to richest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IncomeGroup {
    Low,
    LowerMiddle,
    UpperMiddle,
    High,
}

impl IncomeGroup {
    pub const ALL: [IncomeGroup; 4] = [
        IncomeGroup::Low,
        IncomeGroup::LowerMiddle,
        IncomeGroup::UpperMiddle,
        IncomeGroup::High,
    ];

    /// Column position in the four-way income partition.
    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn label(self) -> &'static str {
        match self {
            IncomeGroup::Low => "Low income",
            IncomeGroup::LowerMiddle => "Lower middle income",
            IncomeGroup::UpperMiddle => "Upper middle income",
            IncomeGroup::High => "High income",
        }
    }

    /// Exact, case-sensitive inverse of [`IncomeGroup::label`].
    pub fn parse(label: &str) -> Result<Self, UnknownIncomeLabel> {
        IncomeGroup::ALL
            .into_iter()
            .find(|g| g.label() == label)
            .ok_or_else(|| UnknownIncomeLabel(label.into()))
    }
}

impl fmt::Display for IncomeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IncomeGroup {
    type Err = UnknownIncomeLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IncomeGroup::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownIncomeLabel(pub String);

impl fmt::Display for UnknownIncomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown income group label '{}'", self.0)
    }
}

impl core::error::Error for UnknownIncomeLabel {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GniError {
    Negative(f64),
    NotFinite,
}

impl fmt::Display for GniError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GniError::Negative(v) => write!(f, "GNI per capita must be non-negative, got {v}"),
            GniError::NotFinite => f.write_str("GNI per capita must be a finite number"),
        }
    }
}

impl core::error::Error for GniError {}

/// Upper edges (inclusive) of the Low, LowerMiddle and UpperMiddle brackets, in USD.
///
/// Brackets are published with integer edges; anything in the gap between an
/// upper edge and the next lower edge stays in the lower bracket.
pub const LOW_MAX: f64 = 1045.0;
pub const LOWER_MIDDLE_MAX: f64 = 4095.0;
pub const UPPER_MIDDLE_MAX: f64 = 12695.0;

/// Map GNI per capita (USD) to its income group.
pub fn classify_gni(gni: f64) -> Result<IncomeGroup, GniError> {
    if !gni.is_finite() {
        return Err(GniError::NotFinite);
    }
    if gni < 0.0 {
        return Err(GniError::Negative(gni));
    }
    // Gap values such as 1045.5 or 4095.5 fall through to the lower bracket.
    Ok(if gni < LOW_MAX + 1.0 {
        IncomeGroup::Low
    } else if gni < LOWER_MIDDLE_MAX + 1.0 {
        IncomeGroup::LowerMiddle
    } else if gni < UPPER_MIDDLE_MAX + 1.0 {
        IncomeGroup::UpperMiddle
    } else {
        IncomeGroup::High
    })
}

/// Returns true for a two-letter uppercase ASCII country code.
pub fn is_country_code(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_uppercase())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryClass {
    pub country_code: String,
    pub country_name: String,
    pub income_group: IncomeGroup,
    pub gni_per_capita: Option<f64>,
}

impl CountryClass {
    /// `true` unless a GNI figure is present and disagrees with the income group.
    pub fn gni_consistent(&self) -> bool {
        match self.gni_per_capita {
            Some(gni) => classify_gni(gni) == Ok(self.income_group),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrgRecord {
    pub org_id: String,
    pub name: String,
    pub country_code: String,
}

/// Organization registry keyed by org id.
pub type OrgRegistry = BTreeMap<String, OrgRecord>;

/// Income classification keyed by country code.
pub type ClassTable = BTreeMap<String, CountryClass>;

/// One listed affiliation of an author.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Affiliation {
    Resolved(String),
    /// Listed on the paper but not mapped to any registry id. Counts toward the
    /// author's affiliation total, never produces a collaboration link.
    Unresolved,
}

impl Affiliation {
    pub fn org_id(&self) -> Option<&str> {
        match self {
            Affiliation::Resolved(id) => Some(id),
            Affiliation::Unresolved => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Author {
    pub affiliations: Vec<Affiliation>,
}

impl Author {
    pub fn new(affiliations: Vec<Affiliation>) -> Self {
        Author { affiliations }
    }

    /// Convenience constructor from resolved org ids.
    pub fn at<I, S>(orgs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Author {
            affiliations: orgs.into_iter().map(|s| Affiliation::Resolved(s.into())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Publication {
    pub pub_id: String,
    pub year: i32,
    pub authors: Vec<Author>,
    pub for_codes: Vec<String>,
    pub sdg_codes: Vec<String>,
    pub funder_org_ids: Vec<String>,
}

impl Publication {
    pub fn new(pub_id: impl Into<String>, year: i32, authors: Vec<Author>) -> Self {
        Publication {
            pub_id: pub_id.into(),
            year,
            authors,
            ..Default::default()
        }
    }
}

/// Drop repeated entries, keeping the first occurrence of each.
pub fn dedup_preserving_order(codes: &mut Vec<String>) {
    let mut seen = alloc::collections::BTreeSet::new();
    codes.retain(|c| seen.insert(c.clone()));
}

/// One deduplicated weighted link from a (source author, source affiliation)
/// on a publication to a distinct organization in another country.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureRecord {
    pub pub_id: String,
    pub source_author_index: usize,
    pub source_affiliation_index: usize,
    pub source_org_id: String,
    pub source_country: String,
    pub source_income: IncomeGroup,
    pub target_org_id: String,
    pub target_name: String,
    pub target_country: String,
    pub target_income: IncomeGroup,
    pub weight: f64,
}

impl ExposureRecord {
    /// Canonical ordering key, also the dedup key.
    pub fn canonical_key(&self) -> (&str, usize, usize, &str) {
        (
            &self.pub_id,
            self.source_author_index,
            self.source_affiliation_index,
            &self.target_org_id,
        )
    }
}

/// Sort records into canonical (pub, author, affiliation, target org) order.
pub fn sort_canonical(records: &mut [ExposureRecord]) {
    records.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
}
