use std::fs;
use std::path::PathBuf;

use cpar_core::syntax::{parse_program, SourceProgram};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_source(name: &str) -> String {
    let path = fixture_dir().join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

pub fn fixture(name: &str) -> SourceProgram {
    parse_program(&fixture_source(name)).unwrap_or_else(|e| panic!("parsing {name}: {e}"))
}

/// Every `.cpar` file in the fixture corpus, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .filter_map(|entry| {
            let path = entry.expect("dir entry").path();
            let name = path.file_name()?.to_str()?.to_string();
            name.ends_with(".cpar")
                .then(|| (name, fs::read_to_string(&path).expect("fixture source")))
        })
        .collect();
    files.sort();
    files
}

/// The fixture names matched by a prefix, sorted.
pub fn corpus_with_prefix(prefix: &str) -> Vec<(String, SourceProgram)> {
    corpus()
        .into_iter()
        .filter(|(name, _)| name.starts_with(prefix))
        .map(|(name, src)| {
            let prog = parse_program(&src).unwrap_or_else(|e| panic!("parsing {name}: {e}"));
            (name, prog)
        })
        .collect()
}
