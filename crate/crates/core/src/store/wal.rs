use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{StoreError, StoredRecord};
use crate::catalog::{Language, RecordId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub(crate) enum WalOp {
    Put(StoredRecord),
    Delete { id: RecordId },
    Clear,
    Languages { languages: Vec<Language> },
}

#[derive(Serialize, Deserialize)]
struct Batch {
    ops: Vec<WalOp>,
}

pub(crate) struct Wal {
    path: PathBuf,
    file: File,
}

impl Wal {
    /// Opens for appending and returns every committed op. A torn final
    /// line (crash mid-append) is truncated away.
    pub(crate) fn open(path: &Path) -> Result<(Wal, Vec<WalOp>), StoreError> {
        let mut file = OpenOptions::new().create(true).truncate(false).read(true).write(true).open(path)?;
        let (ops, good_len) = replay(&mut file)?;
        file.set_len(good_len)?;
        file.seek(SeekFrom::End(0))?;
        Ok((Wal { path: path.to_path_buf(), file }, ops))
    }

    pub(crate) fn read(path: &Path) -> Result<Vec<WalOp>, StoreError> {
        match File::open(path) {
            Ok(mut f) => Ok(replay(&mut f)?.0),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub(crate) fn append(&mut self, ops: &[WalOp]) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(&BatchRef { ops })?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }

    /// Atomically replaces the log with a single batch.
    pub(crate) fn rewrite(&mut self, ops: &[WalOp]) -> Result<(), StoreError> {
        let tmp = self.path.with_extension("wal.tmp");
        {
            let mut f = File::create(&tmp)?;
            let mut line = serde_json::to_string(&BatchRef { ops })?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &self.path)?;
        let mut file = OpenOptions::new().read(true).write(true).open(&self.path)?;
        file.seek(SeekFrom::End(0))?;
        self.file = file;
        Ok(())
    }
}

#[derive(Serialize)]
struct BatchRef<'a> {
    ops: &'a [WalOp],
}

fn replay(file: &mut File) -> Result<(Vec<WalOp>, u64), StoreError> {
    file.seek(SeekFrom::Start(0))?;
    let mut reader = BufReader::new(file);
    let mut ops = Vec::new();
    let mut good_len = 0u64;
    let mut line_no = 0usize;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        // An unterminated last line never finished committing.
        if buf.last() != Some(&b'\n') {
            break;
        }
        match serde_json::from_slice::<Batch>(&buf) {
            Ok(batch) => {
                ops.extend(batch.ops);
                good_len += n as u64;
            }
            Err(e) => return Err(StoreError::Corrupt { line: line_no, message: e.to_string() }),
        }
    }
    Ok((ops, good_len))
}
