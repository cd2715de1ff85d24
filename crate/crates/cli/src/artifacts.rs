//! Output files, written together at the end of a run.

use std::fs;
use std::path::PathBuf;

use crate::failure::Failure;

#[derive(Debug, Default)]
pub struct Artifacts {
    pending: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.pending.push((path, bytes.into()));
    }

    /// Writes every file through a temporary sibling; on any failure the
    /// files already written are removed.
    pub fn commit(self) -> Result<(), Failure> {
        let mut written: Vec<PathBuf> = Vec::new();
        for (path, bytes) in &self.pending {
            let tmp = path.with_extension("partial");
            let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
            if let Err(e) = res {
                let _ = fs::remove_file(&tmp);
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(Failure::io(format!("cannot write {}: {e}", path.display())));
            }
            written.push(path.clone());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_commit_removes_earlier_files() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("a.json");
        let bad = dir.path().join("missing").join("b.json");
        let mut a = Artifacts::default();
        a.add(good.clone(), "{}");
        a.add(bad, "{}");
        assert!(a.commit().is_err());
        assert!(!good.exists());
    }
}
