//! Seeded synthetic corpora for testing and benchmarking.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use collabweight_core::{
    Affiliation, Author, ClassTable, CountryClass, IncomeGroup, OrgRecord, OrgRegistry, Publication,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::publication_json;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub publications: usize,
    /// Authors per publication are 1 + Binomial(2 * (mean - 1), 0.5).
    pub mean_authors: f64,
    /// Affiliations per author are 1 + Bernoulli(mean - 1).
    pub mean_affiliations: f64,
    pub orgs: usize,
    pub countries: usize,
    /// Chance that a listed affiliation is left unresolved.
    pub unresolved_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            publications: 100_000,
            mean_authors: 5.0,
            mean_affiliations: 1.3,
            orgs: 500,
            countries: 60,
            unresolved_rate: 0.02,
            seed: 2021,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub registry: OrgRegistry,
    pub classes: ClassTable,
    pub publications: Vec<Publication>,
}

/// `AA`, `AB`, ... in order; enough for 676 countries.
pub fn country_code(i: usize) -> String {
    let a = (b'A' + (i / 26 % 26) as u8) as char;
    let b = (b'A' + (i % 26) as u8) as char;
    format!("{a}{b}")
}

fn gni_for(income: IncomeGroup, rng: &mut impl Rng) -> f64 {
    let (lo, hi): (f64, f64) = match income {
        IncomeGroup::Low => (300.0, 1045.0),
        IncomeGroup::LowerMiddle => (1046.0, 4095.0),
        IncomeGroup::UpperMiddle => (4096.0, 12695.0),
        IncomeGroup::High => (12696.0, 90000.0),
    };
    rng.gen_range(lo..=hi).round()
}

const INCOME_CYCLE: [IncomeGroup; 4] = [
    IncomeGroup::High,
    IncomeGroup::UpperMiddle,
    IncomeGroup::LowerMiddle,
    IncomeGroup::Low,
];

/// Generate a corpus. Every income group is present once `countries >= 4`.
pub fn generate(cfg: &SynthConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let countries = cfg.countries.max(1);
    let mut classes = ClassTable::new();
    let mut incomes = Vec::with_capacity(countries);
    for i in 0..countries {
        let income = INCOME_CYCLE[i % 4];
        let code = country_code(i);
        incomes.push(income);
        classes.insert(
            code.clone(),
            CountryClass {
                country_code: code,
                country_name: format!("Country {i}"),
                income_group: income,
                gni_per_capita: Some(gni_for(income, &mut rng)),
            },
        );
    }

    let n_orgs = cfg.orgs.max(1);
    let mut by_country: Vec<Vec<String>> = vec![Vec::new(); countries];
    let mut registry = OrgRegistry::new();
    for i in 0..n_orgs {
        let country = if i < countries { i } else { rng.gen_range(0..countries) };
        let id = format!("grid.{:05}.{}", 1000 + i, i % 10);
        by_country[country].push(id.clone());
        registry.insert(
            id.clone(),
            OrgRecord {
                org_id: id,
                name: format!("Institute {i}"),
                country_code: country_code(country),
            },
        );
    }
    let staffed: Vec<usize> = (0..countries).filter(|&c| !by_country[c].is_empty()).collect();
    // Teams lean toward richer countries.
    let country_weight = |c: usize| match incomes[c] {
        IncomeGroup::High => 4,
        IncomeGroup::UpperMiddle | IncomeGroup::LowerMiddle => 2,
        IncomeGroup::Low => 1,
    };
    let funders: Vec<String> = registry.keys().take(12).cloned().collect();

    let coin_trials = ((cfg.mean_authors - 1.0).max(0.0) * 2.0).round() as u32;
    let extra_aff = (cfg.mean_affiliations - 1.0).clamp(0.0, 1.0);
    let for_pool: Vec<String> = (1..=22).map(|i| format!("{i:02}")).collect();
    let sdg_pool: Vec<String> = (1..=17).map(|i| i.to_string()).collect();
    let pick = |pool: &[String], max: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
        let k = rng.gen_range(0..=max);
        let mut v: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
        v.sort();
        v
    };
    let mut publications = Vec::with_capacity(cfg.publications);
    for p in 0..cfg.publications {
        let n_authors = 1 + (0..coin_trials).filter(|_| rng.gen_bool(0.5)).count();
        let n_team = rng.gen_range(1..=3usize);
        let team: Vec<usize> = (0..n_team)
            .map(|_| *staffed.choose_weighted(&mut rng, |&c| country_weight(c)).expect("countries"))
            .collect();
        let authors = (0..n_authors)
            .map(|_| {
                let n_aff = 1 + usize::from(rng.gen_bool(extra_aff));
                Author::new(
                    (0..n_aff)
                        .map(|_| {
                            if rng.gen_bool(cfg.unresolved_rate) {
                                Affiliation::Unresolved
                            } else {
                                let c = team[rng.gen_range(0..team.len())];
                                let orgs = &by_country[c];
                                Affiliation::Resolved(orgs[rng.gen_range(0..orgs.len())].clone())
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        publications.push(Publication {
            pub_id: format!("pub.{p:07}"),
            year: rng.gen_range(2008..=2022),
            authors,
            for_codes: pick(&for_pool, 2, &mut rng),
            sdg_codes: pick(&sdg_pool, 2, &mut rng),
            funder_org_ids: pick(&funders, 1, &mut rng),
        });
    }
    Corpus {
        registry,
        classes,
        publications,
    }
}

/// A small randomized corpus: up to 50 publications, 8 authors each, 3
/// affiliations per author (possibly none), 12 orgs over 6 classified
/// countries covering every income group. Dangling org ids, an org in an
/// unclassified country and unresolved affiliations are mixed in.
pub fn random_small_corpus(seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let incomes = [
        IncomeGroup::Low,
        IncomeGroup::LowerMiddle,
        IncomeGroup::UpperMiddle,
        IncomeGroup::High,
        IncomeGroup::High,
        IncomeGroup::Low,
    ];
    let classes: ClassTable = incomes
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let code = country_code(i);
            (
                code.clone(),
                CountryClass {
                    country_code: code,
                    country_name: format!("Country {i}"),
                    income_group: g,
                    gni_per_capita: None,
                },
            )
        })
        .collect();
    let n_orgs = rng.gen_range(1..=11usize);
    let mut registry: OrgRegistry = (0..n_orgs)
        .map(|i| {
            let id = format!("o{i:02}");
            let country = country_code(rng.gen_range(0..incomes.len()));
            (
                id.clone(),
                OrgRecord {
                    org_id: id,
                    name: format!("Org {i}"),
                    country_code: country,
                },
            )
        })
        .collect();
    registry.insert(
        "oZZ".into(),
        OrgRecord {
            org_id: "oZZ".into(),
            name: "Unclassified".into(),
            country_code: "ZZ".into(),
        },
    );

    let n_pubs = rng.gen_range(0..=50usize);
    let publications = (0..n_pubs)
        .map(|p| {
            let authors = (0..rng.gen_range(0..=8usize))
                .map(|_| {
                    Author::new(
                        (0..rng.gen_range(0..=3usize))
                            .map(|_| match rng.gen_range(0..20) {
                                0 => Affiliation::Unresolved,
                                1 => Affiliation::Resolved("dangling".into()),
                                2 => Affiliation::Resolved("oZZ".into()),
                                _ => Affiliation::Resolved(format!("o{:02}", rng.gen_range(0..n_orgs))),
                            })
                            .collect(),
                    )
                })
                .collect();
            let year = rng.gen_range(2008..=2022);
            let mut codes = |pool: &[&str]| -> Vec<String> {
                pool.iter().filter(|_| rng.gen_bool(0.4)).map(|s| s.to_string()).collect()
            };
            Publication {
                pub_id: format!("p{p:03}"),
                year,
                authors,
                for_codes: codes(&["0101", "0202", "1103"]),
                sdg_codes: codes(&["1", "3", "5", "13"]),
                funder_org_ids: codes(&["o00", "o01", "fund"]),
            }
        })
        .collect();
    Corpus {
        registry,
        classes,
        publications,
    }
}

/// Paths of a corpus written to disk.
#[derive(Debug, Clone)]
pub struct CorpusFiles {
    pub pubs: PathBuf,
    pub orgs: PathBuf,
    pub classes: PathBuf,
}

impl CorpusFiles {
    pub fn in_dir(dir: &Path) -> Self {
        CorpusFiles {
            pubs: dir.join("pubs.jsonl"),
            orgs: dir.join("orgs.csv"),
            classes: dir.join("classes.csv"),
        }
    }
}

pub fn write_corpus(corpus: &Corpus, dir: &Path) -> io::Result<CorpusFiles> {
    std::fs::create_dir_all(dir)?;
    let files = CorpusFiles::in_dir(dir);

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&files.orgs)?;
    w.write_record(["org_id", "name", "country_code"])?;
    for org in corpus.registry.values() {
        w.write_record([&org.org_id, &org.name, &org.country_code])?;
    }
    w.flush()?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&files.classes)?;
    w.write_record(["country_code", "country_name", "income_group", "gni_per_capita"])?;
    for c in corpus.classes.values() {
        let gni = c.gni_per_capita.map(|g| g.to_string()).unwrap_or_default();
        w.write_record([
            c.country_code.as_str(),
            c.country_name.as_str(),
            c.income_group.label(),
            gni.as_str(),
        ])?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(&files.pubs)?);
    for p in &corpus.publications {
        serde_json::to_writer(&mut w, &publication_json(p))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use collabweight_core::classify_gni;

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = SynthConfig {
            publications: 200,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg).publications, generate(&cfg).publications);
        assert_eq!(random_small_corpus(7).publications, random_small_corpus(7).publications);
    }

    #[test]
    fn shape_matches_config() {
        let c = generate(&SynthConfig {
            publications: 20_000,
            ..SynthConfig::default()
        });
        assert_eq!(c.registry.len(), 500);
        assert_eq!(c.classes.len(), 60);
        let authors: usize = c.publications.iter().map(|p| p.authors.len()).sum();
        let mean_authors = authors as f64 / c.publications.len() as f64;
        assert!((mean_authors - 5.0).abs() < 0.1, "{mean_authors}");
        let affs: usize = c
            .publications
            .iter()
            .flat_map(|p| &p.authors)
            .map(|a| a.affiliations.len())
            .sum();
        let mean_affs = affs as f64 / authors as f64;
        assert!((mean_affs - 1.3).abs() < 0.02, "{mean_affs}");
        for class in c.classes.values() {
            assert!(class.gni_consistent(), "{class:?}");
            assert!(classify_gni(class.gni_per_capita.unwrap()).is_ok());
        }
        for g in IncomeGroup::ALL {
            assert!(c.classes.values().any(|x| x.income_group == g));
        }
    }
}
