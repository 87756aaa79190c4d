#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use collabweight::ingest::{load_classes, load_orgs, load_publications};
use collabweight::synth::{Corpus, CorpusFiles};

pub fn fixture(name: &str) -> CorpusFiles {
    CorpusFiles::in_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name))
}

pub fn load(files: &CorpusFiles) -> Corpus {
    let (registry, _) = load_orgs(&files.orgs).unwrap();
    let (classes, _) = load_classes(&files.classes).unwrap();
    let mut stream = load_publications(&files.pubs).unwrap();
    let publications = stream.by_ref().collect();
    stream.finish().unwrap();
    Corpus {
        registry,
        classes,
        publications,
    }
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_collabweight"))
}

/// Run the CLI with the three corpus inputs prepended after the subcommand.
pub fn run_on(files: &CorpusFiles, sub: &str, args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.arg(sub)
        .arg("--pubs")
        .arg(&files.pubs)
        .arg("--orgs")
        .arg(&files.orgs)
        .arg("--classes")
        .arg(&files.classes)
        .args(args);
    cmd.output().expect("spawn collabweight")
}

pub fn out_path(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}
