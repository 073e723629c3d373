//! Chains as JSON lines, one retained record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::samplers::ChainRecord;

pub struct ChainWriter<W: Write> {
    out: W,
}

impl ChainWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(ChainWriter::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> ChainWriter<W> {
    pub fn new(out: W) -> Self {
        ChainWriter { out }
    }

    pub fn write(&mut self, record: &ChainRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn read_chain<R: BufRead>(input: R) -> Result<Vec<ChainRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_chain(path: &Path) -> Result<Vec<ChainRecord>> {
    read_chain(BufReader::new(File::open(path)?))
}
