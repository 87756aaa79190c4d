//! Brute-force reference implementation.
//!
//! A direct transcription of the self-join: every (author, affiliation) pair is
//! crossed with every (author, affiliation) pair of the same publication, the
//! foreign/different-org predicate is applied, and the projection is made
//! distinct. Quadratic per publication and meant for small slices only; it
//! shares no enumeration code with [`crate::engine`] so that the two can be
//! checked against each other.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::{AggregateTable, AnalysisSpec, GroupBy, GroupKey, PartialAggregate, Row};
use crate::model::{
    sort_canonical, ClassTable, CountryClass, ExposureRecord, OrgRecord, OrgRegistry, Publication,
};

fn join<'a>(
    id: &str,
    registry: &'a OrgRegistry,
    classes: &'a ClassTable,
) -> Option<(&'a OrgRecord, &'a CountryClass)> {
    let org = registry.get(id)?;
    let class = classes.get(&org.country_code)?;
    Some((org, class))
}

/// Exposure records of one publication in canonical order.
pub fn oracle_exposures(
    publication: &Publication,
    registry: &OrgRegistry,
    classes: &ClassTable,
) -> Vec<ExposureRecord> {
    let number_authors = publication.authors.len();
    // Keyed by the distinct projection (authorder, affilorder, target org).
    let mut distinct: BTreeMap<(usize, usize, String), ExposureRecord> = BTreeMap::new();
    for (authorder, a1) in publication.authors.iter().enumerate() {
        for (affilorder, aff1) in a1.affiliations.iter().enumerate() {
            for a2 in &publication.authors {
                for aff2 in &a2.affiliations {
                    let (Some(id1), Some(id2)) = (aff1.org_id(), aff2.org_id()) else {
                        continue;
                    };
                    let Some((g1, wb)) = join(id1, registry, classes) else {
                        continue;
                    };
                    let Some((g2, wb2)) = join(id2, registry, classes) else {
                        continue;
                    };
                    if g1.country_code == g2.country_code || g1.org_id == g2.org_id {
                        continue;
                    }
                    let denominator = number_authors * a1.affiliations.len();
                    let record = ExposureRecord {
                        pub_id: publication.pub_id.clone(),
                        source_author_index: authorder,
                        source_affiliation_index: affilorder,
                        source_org_id: g1.org_id.clone(),
                        source_country: g1.country_code.clone(),
                        source_income: wb.income_group,
                        target_org_id: g2.org_id.clone(),
                        target_name: g2.name.clone(),
                        target_country: g2.country_code.clone(),
                        target_income: wb2.income_group,
                        weight: 1.0 / denominator as f64,
                    };
                    distinct
                        .entry((authorder, affilorder, g2.org_id.clone()))
                        .or_insert(record);
                }
            }
        }
    }
    let mut out: Vec<ExposureRecord> = distinct.into_values().collect();
    sort_canonical(&mut out);
    out
}

/// Materialize every record of the corpus, sort canonically, then group and
/// sum left to right.
pub fn oracle_aggregate<'p, I>(
    publications: I,
    spec: &AnalysisSpec,
    registry: &OrgRegistry,
    classes: &ClassTable,
) -> PartialAggregate
where
    I: IntoIterator<Item = &'p Publication>,
{
    let mut result = PartialAggregate::empty(spec.clone());
    let mut records: Vec<(ExposureRecord, &'p Publication)> = Vec::new();
    for p in publications {
        if p.year < spec.year_min() || p.year > spec.year_max() {
            continue;
        }
        if let Some(cap) = spec.max_authors {
            if p.authors.len() > cap {
                result.skips.over_author_cap += 1;
                continue;
            }
        }
        result.skips.publications += 1;
        for author in &p.authors {
            for id in author.affiliations.iter().filter_map(|a| a.org_id()) {
                match registry.get(id) {
                    None => result.skips.unknown_org += 1,
                    Some(org) if !classes.contains_key(&org.country_code) => {
                        result.skips.unknown_country += 1
                    }
                    Some(_) => {}
                }
            }
        }
        for r in oracle_exposures(p, registry, classes) {
            if spec.perspective.map_or(true, |want| r.target_income == want) {
                records.push((r, p));
            }
        }
    }
    records.sort_by(|a, b| a.0.canonical_key().cmp(&b.0.canonical_key()));

    let mut table = AggregateTable::new(spec.group_by);
    for (r, p) in &records {
        let keys: Vec<GroupKey> = match spec.group_by {
            GroupBy::Income | GroupBy::Country | GroupBy::Institution => {
                let org = &registry[&r.target_org_id];
                let class = &classes[&r.target_country];
                GroupKey::for_target(spec.group_by, org, class).into_iter().collect()
            }
            GroupBy::ForCode => tag_keys(&p.for_codes),
            GroupBy::SdgCode => tag_keys(&p.sdg_codes),
            GroupBy::Funder => tag_keys(&p.funder_org_ids),
        };
        for key in keys {
            let row: &mut Row = table.rows.entry(key).or_default();
            row.income[r.source_income.index()] += r.weight;
            row.overseas_total += r.weight;
        }
    }
    result.table = table;
    result
}

fn tag_keys(codes: &[String]) -> Vec<GroupKey> {
    codes
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|c| GroupKey::Tag(c.clone()))
        .collect()
}
