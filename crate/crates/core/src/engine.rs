//! Exposure enumeration and grouped aggregation.
//!
//! Each resolved (author, affiliation) on a publication is linked to every
//! distinct organization on the same publication that sits in a different
//! country, with weight `1 / (authors * listed affiliations of that author)`.
//! Links are then folded into per-group rows whose four columns partition the
//! weight by the *source* side's income group.
//!
//! The distinct foreign-organization set is computed once per publication, so
//! the cost is linear in (author-affiliations x distinct orgs) rather than
//! quadratic in author-affiliations.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{
    ClassTable, CountryClass, ExposureRecord, IncomeGroup, OrgRecord, OrgRegistry, Publication,
};

/// What each output row is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupBy {
    /// Target income group.
    Income,
    /// Target country.
    Country,
    /// Target organization.
    Institution,
    /// Field-of-research codes on the publication.
    ForCode,
    /// Sustainable development goal codes on the publication.
    SdgCode,
    /// Funder organizations on the publication.
    Funder,
}

impl GroupBy {
    pub const ALL: [GroupBy; 6] = [
        GroupBy::Income,
        GroupBy::Country,
        GroupBy::Institution,
        GroupBy::ForCode,
        GroupBy::SdgCode,
        GroupBy::Funder,
    ];

    /// Grouping on an attribute of the target organization rather than the publication.
    pub fn is_target_side(self) -> bool {
        matches!(self, GroupBy::Income | GroupBy::Country | GroupBy::Institution)
    }

    fn tags(self, publication: &Publication) -> &[String] {
        match self {
            GroupBy::ForCode => &publication.for_codes,
            GroupBy::SdgCode => &publication.sdg_codes,
            GroupBy::Funder => &publication.funder_org_ids,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    InvertedYears { year_min: i32, year_max: i32 },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::InvertedYears { year_min, year_max } => {
                write!(f, "year range {year_min}:{year_max} is inverted")
            }
        }
    }
}

impl core::error::Error for SpecError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisSpec {
    year_min: i32,
    year_max: i32,
    /// Keep only links whose target is in this income group.
    pub perspective: Option<IncomeGroup>,
    pub group_by: GroupBy,
    /// Publications with more authors than this are skipped entirely.
    pub max_authors: Option<usize>,
}

impl AnalysisSpec {
    pub fn new(year_min: i32, year_max: i32, group_by: GroupBy) -> Result<Self, SpecError> {
        if year_min > year_max {
            return Err(SpecError::InvertedYears { year_min, year_max });
        }
        Ok(AnalysisSpec {
            year_min,
            year_max,
            perspective: None,
            group_by,
            max_authors: None,
        })
    }

    pub fn with_perspective(mut self, perspective: Option<IncomeGroup>) -> Self {
        self.perspective = perspective;
        self
    }

    pub fn with_max_authors(mut self, max_authors: Option<usize>) -> Self {
        self.max_authors = max_authors;
        self
    }

    pub fn year_min(&self) -> i32 {
        self.year_min
    }

    pub fn year_max(&self) -> i32 {
        self.year_max
    }

    /// Year window and author cap.
    pub fn admits(&self, publication: &Publication) -> bool {
        (self.year_min..=self.year_max).contains(&publication.year)
            && self.max_authors.map_or(true, |cap| publication.authors.len() <= cap)
    }
}

/// Output row identity. Ordering is the row order of every export.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupKey {
    Income(IncomeGroup),
    Country {
        code: String,
        name: String,
        income: IncomeGroup,
    },
    Institution {
        org_id: String,
        name: String,
        country: String,
        income: IncomeGroup,
    },
    /// FoR, SDG or funder code.
    Tag(String),
}

impl GroupKey {
    pub fn id(&self) -> &str {
        match self {
            GroupKey::Income(g) => g.label(),
            GroupKey::Country { code, .. } => code,
            GroupKey::Institution { org_id, .. } => org_id,
            GroupKey::Tag(t) => t,
        }
    }

    pub fn for_target(group_by: GroupBy, org: &OrgRecord, class: &CountryClass) -> Option<Self> {
        Some(match group_by {
            GroupBy::Income => GroupKey::Income(class.income_group),
            GroupBy::Country => GroupKey::Country {
                code: class.country_code.clone(),
                name: class.country_name.clone(),
                income: class.income_group,
            },
            GroupBy::Institution => GroupKey::Institution {
                org_id: org.org_id.clone(),
                name: org.name.clone(),
                country: org.country_code.clone(),
                income: class.income_group,
            },
            _ => return None,
        })
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Weight sums for one group: one column per source income group plus the total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Row {
    pub income: [f64; 4],
    pub overseas_total: f64,
}

impl Row {
    pub fn get(&self, group: IncomeGroup) -> f64 {
        self.income[group.index()]
    }

    fn add(&mut self, other: &Row) {
        for (a, b) in self.income.iter_mut().zip(other.income) {
            *a += b;
        }
        self.overseas_total += other.overseas_total;
    }

    /// |sum of columns - total| relative to max(1, total).
    pub fn partition_error(&self) -> f64 {
        let sum: f64 = self.income.iter().sum();
        abs(sum - self.overseas_total) / self.overseas_total.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable {
    pub group_by: GroupBy,
    pub rows: BTreeMap<GroupKey, Row>,
}

impl AggregateTable {
    pub fn new(group_by: GroupBy) -> Self {
        AggregateTable {
            group_by,
            rows: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, key: &GroupKey) -> Option<&Row> {
        self.rows.get(key)
    }

    /// Largest absolute cell difference against `other`; a row missing on one
    /// side counts as zeros.
    pub fn max_abs_diff(&self, other: &AggregateTable) -> f64 {
        let zero = Row::default();
        let mut worst = 0.0f64;
        let keys = self.rows.keys().chain(other.rows.keys());
        for key in keys {
            let a = self.rows.get(key).unwrap_or(&zero);
            let b = other.rows.get(key).unwrap_or(&zero);
            for g in 0..4 {
                worst = worst.max(abs(a.income[g] - b.income[g]));
            }
            worst = worst.max(abs(a.overseas_total - b.overseas_total));
        }
        worst
    }

    /// Largest relative cell difference, `|a - b| / max(|a|, |b|)`, zero when both are zero.
    pub fn max_rel_diff(&self, other: &AggregateTable) -> f64 {
        let zero = Row::default();
        let mut worst = 0.0f64;
        for key in self.rows.keys().chain(other.rows.keys()) {
            let a = self.rows.get(key).unwrap_or(&zero);
            let b = other.rows.get(key).unwrap_or(&zero);
            let cells = a
                .income
                .iter()
                .zip(b.income.iter())
                .chain(core::iter::once((&a.overseas_total, &b.overseas_total)));
            for (x, y) in cells {
                let scale = abs(*x).max(abs(*y));
                if scale > 0.0 {
                    worst = worst.max(abs(x - y) / scale);
                }
            }
        }
        worst
    }
}

/// Counters for references the join had to drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SkipCounts {
    /// Affiliation occurrences naming an org id absent from the registry.
    pub unknown_org: u64,
    /// Affiliation occurrences whose org's country has no income class.
    pub unknown_country: u64,
    /// Publications in the year window dropped by the author cap.
    pub over_author_cap: u64,
    /// Publications in the year window that were processed.
    pub publications: u64,
}

impl SkipCounts {
    fn add(&mut self, other: &SkipCounts) {
        self.unknown_org += other.unknown_org;
        self.unknown_country += other.unknown_country;
        self.over_author_cap += other.over_author_cap;
        self.publications += other.publications;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeError {
    pub left: AnalysisSpec,
    pub right: AnalysisSpec,
}

impl fmt::Display for MergeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cannot merge aggregates built under different analysis specs ({:?} vs {:?})",
            self.left, self.right
        )
    }
}

impl core::error::Error for MergeError {}

/// A mergeable fragment of an aggregation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialAggregate {
    pub spec: AnalysisSpec,
    pub table: AggregateTable,
    pub skips: SkipCounts,
}

impl PartialAggregate {
    pub fn empty(spec: AnalysisSpec) -> Self {
        PartialAggregate {
            table: AggregateTable::new(spec.group_by),
            spec,
            skips: SkipCounts::default(),
        }
    }

    /// Cell-wise sum of two fragments built under the same spec.
    pub fn merge(mut self, other: PartialAggregate) -> Result<Self, MergeError> {
        if self.spec != other.spec {
            return Err(MergeError {
                left: self.spec,
                right: other.spec,
            });
        }
        for (key, row) in other.table.rows {
            self.table.rows.entry(key).or_default().add(&row);
        }
        self.skips.add(&other.skips);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy)]
struct OrgInfo<'a> {
    /// Position in org-id order.
    index: u32,
    country: u32,
    income: IncomeGroup,
    org: &'a OrgRecord,
}

/// Read-only join index over the organization registry and income classes.
#[derive(Debug)]
pub struct Context<'a> {
    registry: &'a OrgRegistry,
    orgs: BTreeMap<&'a str, OrgInfo<'a>>,
    org_list: Vec<OrgInfo<'a>>,
    countries: Vec<&'a CountryClass>,
}

enum Resolved<'a> {
    Known(OrgInfo<'a>),
    UnknownOrg,
    UnknownCountry,
}

impl<'a> Context<'a> {
    pub fn new(registry: &'a OrgRegistry, classes: &'a ClassTable) -> Self {
        let country_index: BTreeMap<&str, u32> = classes
            .keys()
            .enumerate()
            .map(|(i, code)| (code.as_str(), i as u32))
            .collect();
        let countries: Vec<&CountryClass> = classes.values().collect();
        let mut orgs = BTreeMap::new();
        let mut org_list = Vec::new();
        // Orgs in unclassified countries are left out of the index.
        for (id, org) in registry {
            if let Some(&country) = country_index.get(org.country_code.as_str()) {
                let info = OrgInfo {
                    index: org_list.len() as u32,
                    country,
                    income: countries[country as usize].income_group,
                    org,
                };
                org_list.push(info);
                orgs.insert(id.as_str(), info);
            }
        }
        Context {
            registry,
            orgs,
            org_list,
            countries,
        }
    }

    fn resolve(&self, id: &str) -> Resolved<'a> {
        match self.orgs.get(id) {
            Some(info) => Resolved::Known(*info),
            None if self.registry.contains_key(id) => Resolved::UnknownCountry,
            None => Resolved::UnknownOrg,
        }
    }

    fn org(&self, index: u32) -> OrgInfo<'a> {
        self.org_list[index as usize]
    }

    fn country(&self, index: u32) -> &'a CountryClass {
        self.countries[index as usize]
    }
}

/// One resolved source (author, affiliation) on a publication.
#[derive(Debug, Clone, Copy)]
struct Source {
    author: usize,
    affiliation: usize,
    /// Listed affiliations of the author, resolved or not.
    listed: u32,
    org: u32,
    country: u32,
    income: IncomeGroup,
}

/// Per-publication join state: resolved sources and the sorted distinct org set.
struct PubJoin {
    sources: Vec<Source>,
    /// Distinct org indices, ascending (org-id order).
    targets: Vec<u32>,
    skips: SkipCounts,
}

fn join_publication(publication: &Publication, ctx: &Context<'_>) -> PubJoin {
    let mut sources = Vec::new();
    let mut skips = SkipCounts::default();
    for (i, author) in publication.authors.iter().enumerate() {
        let listed = author.affiliations.len() as u32;
        for (j, aff) in author.affiliations.iter().enumerate() {
            let Some(id) = aff.org_id() else { continue };
            match ctx.resolve(id) {
                Resolved::Known(info) => sources.push(Source {
                    author: i,
                    affiliation: j,
                    listed,
                    org: info.index,
                    country: info.country,
                    income: info.income,
                }),
                Resolved::UnknownOrg => skips.unknown_org += 1,
                Resolved::UnknownCountry => skips.unknown_country += 1,
            }
        }
    }
    let mut targets: Vec<u32> = sources.iter().map(|s| s.org).collect();
    targets.sort_unstable();
    targets.dedup();
    PubJoin {
        sources,
        targets,
        skips,
    }
}

/// All deduplicated exposure records of one publication, in canonical order.
///
/// Returns the skip counters for unresolvable references alongside.
pub fn enumerate_exposures(
    publication: &Publication,
    ctx: &Context<'_>,
) -> (Vec<ExposureRecord>, SkipCounts) {
    let join = join_publication(publication, ctx);
    let n_authors = publication.authors.len() as u64;
    let mut out = Vec::new();
    for src in &join.sources {
        let weight = 1.0 / ((n_authors * src.listed as u64) as f64);
        let source = ctx.org(src.org);
        let source_class = ctx.country(src.country);
        for &t in &join.targets {
            let target = ctx.org(t);
            if target.country == src.country {
                continue;
            }
            let target_class = ctx.country(target.country);
            out.push(ExposureRecord {
                pub_id: publication.pub_id.clone(),
                source_author_index: src.author,
                source_affiliation_index: src.affiliation,
                source_org_id: source.org.org_id.clone(),
                source_country: source_class.country_code.clone(),
                source_income: src.income,
                target_org_id: target.org.org_id.clone(),
                target_name: target.org.name.clone(),
                target_country: target_class.country_code.clone(),
                target_income: target.income,
                weight,
            });
        }
    }
    (out, join.skips)
}

/// Integer link counts for one output bucket, keyed by (source income, listed affiliations).
///
/// Converting to weights only after counting keeps a publication's
/// contribution independent of author order.
#[derive(Default)]
struct BucketCounts {
    cells: Vec<((IncomeGroup, u32), u64)>,
}

impl BucketCounts {
    fn add(&mut self, income: IncomeGroup, listed: u32, count: u64) {
        let key = (income, listed);
        match self.cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, c)) => *c += count,
            None => self.cells.push((key, count)),
        }
    }

    fn to_row(&mut self, n_authors: u64) -> Row {
        self.cells.sort_unstable_by_key(|(k, _)| *k);
        let mut row = Row::default();
        let mut by_listed: Vec<(u32, u64)> = Vec::new();
        for &((income, listed), count) in &self.cells {
            row.income[income.index()] += count as f64 / (n_authors * listed as u64) as f64;
            match by_listed.iter_mut().find(|(l, _)| *l == listed) {
                Some((_, c)) => *c += count,
                None => by_listed.push((listed, count)),
            }
        }
        by_listed.sort_unstable();
        for (listed, count) in by_listed {
            row.overseas_total += count as f64 / (n_authors * listed as u64) as f64;
        }
        row
    }
}

/// Dense accumulation state for one aggregation run.
///
/// Rows are held by integer id while folding and turned into [`GroupKey`]s by
/// [`Aggregator::finish`].
pub struct Aggregator<'c, 'a> {
    ctx: &'c Context<'a>,
    spec: AnalysisSpec,
    rows: Vec<Option<Row>>,
    tag_ids: BTreeMap<String, u32>,
    skips: SkipCounts,
    // Scratch reused across publications.
    source_mass: Vec<((u32, IncomeGroup, u32), u64)>,
    buckets: Vec<(u32, BucketCounts)>,
}

impl<'c, 'a> Aggregator<'c, 'a> {
    pub fn new(ctx: &'c Context<'a>, spec: AnalysisSpec) -> Self {
        let dense = match spec.group_by {
            GroupBy::Income => 4,
            GroupBy::Country => ctx.countries.len(),
            GroupBy::Institution => ctx.org_list.len(),
            _ => 0,
        };
        Aggregator {
            ctx,
            spec,
            rows: vec![None; dense],
            tag_ids: BTreeMap::new(),
            skips: SkipCounts::default(),
            source_mass: Vec::new(),
            buckets: Vec::new(),
        }
    }

    pub fn spec(&self) -> &AnalysisSpec {
        &self.spec
    }

    pub fn push(&mut self, publication: &Publication) {
        if !(self.spec.year_min..=self.spec.year_max).contains(&publication.year) {
            return;
        }
        if self.spec.max_authors.is_some_and(|cap| publication.authors.len() > cap) {
            self.skips.over_author_cap += 1;
            return;
        }
        self.skips.publications += 1;
        let join = join_publication(publication, self.ctx);
        self.skips.add(&join.skips);
        if join.targets.len() < 2 {
            return;
        }

        // Source links collapse to counts per (country, income, listed).
        self.source_mass.clear();
        for s in &join.sources {
            let key = (s.country, s.income, s.listed);
            match self.source_mass.iter_mut().find(|(k, _)| *k == key) {
                Some((_, c)) => *c += 1,
                None => self.source_mass.push((key, 1)),
            }
        }

        let group_by = self.spec.group_by;
        self.buckets.clear();
        for &t in &join.targets {
            let target = self.ctx.org(t);
            if self.spec.perspective.is_some_and(|p| p != target.income) {
                continue;
            }
            let bucket_id = match group_by {
                GroupBy::Income => target.income.index() as u32,
                GroupBy::Country => target.country,
                GroupBy::Institution => t,
                _ => 0,
            };
            let pos = match self.buckets.iter().position(|(id, _)| *id == bucket_id) {
                Some(p) => p,
                None => {
                    self.buckets.push((bucket_id, BucketCounts::default()));
                    self.buckets.len() - 1
                }
            };
            let bucket = &mut self.buckets[pos].1;
            for &((country, income, listed), count) in &self.source_mass {
                if country != target.country {
                    bucket.add(income, listed, count);
                }
            }
        }

        let n_authors = publication.authors.len() as u64;
        if group_by.is_target_side() {
            for (id, bucket) in &mut self.buckets {
                if bucket.cells.is_empty() {
                    continue;
                }
                let row = bucket.to_row(n_authors);
                self.rows[*id as usize].get_or_insert_with(Row::default).add(&row);
            }
        } else if let Some((_, bucket)) = self.buckets.first_mut() {
            if bucket.cells.is_empty() {
                return;
            }
            let row = bucket.to_row(n_authors);
            let mut tags: Vec<&String> = group_by.tags(publication).iter().collect();
            tags.sort_unstable();
            tags.dedup();
            for tag in tags {
                let id = match self.tag_ids.get(tag.as_str()) {
                    Some(&id) => id,
                    None => {
                        let id = self.rows.len() as u32;
                        self.tag_ids.insert(tag.clone(), id);
                        self.rows.push(None);
                        id
                    }
                };
                self.rows[id as usize].get_or_insert_with(Row::default).add(&row);
            }
        }
    }

    pub fn finish(self) -> PartialAggregate {
        let group_by = self.spec.group_by;
        let mut table = AggregateTable::new(group_by);
        match group_by {
            GroupBy::Income | GroupBy::Country | GroupBy::Institution => {
                for (id, row) in self.rows.into_iter().enumerate() {
                    let Some(row) = row else { continue };
                    let key = match group_by {
                        GroupBy::Income => GroupKey::Income(IncomeGroup::ALL[id]),
                        GroupBy::Country => {
                            let class = self.ctx.country(id as u32);
                            GroupKey::Country {
                                code: class.country_code.clone(),
                                name: class.country_name.clone(),
                                income: class.income_group,
                            }
                        }
                        _ => {
                            let info = self.ctx.org(id as u32);
                            let class = self.ctx.country(info.country);
                            GroupKey::for_target(GroupBy::Institution, info.org, class)
                                .expect("institution key")
                        }
                    };
                    table.rows.insert(key, row);
                }
            }
            _ => {
                for (tag, id) in self.tag_ids {
                    if let Some(row) = self.rows[id as usize] {
                        table.rows.insert(GroupKey::Tag(tag), row);
                    }
                }
            }
        }
        PartialAggregate {
            spec: self.spec,
            table,
            skips: self.skips,
        }
    }
}

/// Single-pass aggregation over a publication stream.
pub fn aggregate<'p, I>(publications: I, spec: &AnalysisSpec, ctx: &Context<'_>) -> PartialAggregate
where
    I: IntoIterator<Item = &'p Publication>,
{
    let mut agg = Aggregator::new(ctx, spec.clone());
    for p in publications {
        agg.push(p);
    }
    agg.finish()
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}
