//! File helpers: contextual readers and atomic writes (temp + rename).

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::Path;

use anyhow::{Context, Result};

use emobow::corpus::{read_labeled_docs, LabeledSet};
use emobow::lexicon::Lexicon;
use emobow::textnorm::TokenSeq;

pub fn open_reader(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

/// Write via a temp file in the target directory, then rename into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            fs::create_dir_all(p).with_context(|| format!("cannot create {}", p.display()))?;
            p
        }
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    Lexicon::parse(open_reader(path)?)
        .with_context(|| format!("parsing lexicon {}", path.display()))
}

pub fn load_docs(path: &Path) -> Result<LabeledSet<TokenSeq>> {
    read_labeled_docs(open_reader(path)?)
        .with_context(|| format!("reading cache {}", path.display()))
}
