//! Node persistence layer.
//!
//! Every durable artifact — chain files, Raft state, wallets, channel
//! artifacts — is written through [`Vfs`]. The simulator uses [`MemVfs`] so
//! crash injection can drop a node's volatile state while its "disk"
//! survives; the CLI uses [`DiskVfs`] rooted at the workspace directory so
//! the same files appear on the real filesystem in their bit-exact formats.
//!
//! Paths are `/`-separated regardless of host platform.

use std::collections::BTreeMap;
use std::io;
use std::path::PathBuf;

pub trait Vfs {
    fn read(&self, path: &str) -> Option<Vec<u8>>;
    fn write(&mut self, path: &str, bytes: &[u8]);
    fn append(&mut self, path: &str, bytes: &[u8]);
    fn remove(&mut self, path: &str);
    fn exists(&self, path: &str) -> bool {
        self.read(path).is_some()
    }
    /// All stored paths under `prefix`, sorted.
    fn list(&self, prefix: &str) -> Vec<String>;
}

/// In-memory store keyed by path. The default backend for simulations.
#[derive(Debug, Clone, Default)]
pub struct MemVfs {
    files: BTreeMap<String, Vec<u8>>,
}

impl MemVfs {
    pub fn new() -> MemVfs {
        MemVfs::default()
    }
}

impl Vfs for MemVfs {
    fn read(&self, path: &str) -> Option<Vec<u8>> {
        self.files.get(path).cloned()
    }

    fn write(&mut self, path: &str, bytes: &[u8]) {
        self.files.insert(path.to_string(), bytes.to_vec());
    }

    fn append(&mut self, path: &str, bytes: &[u8]) {
        self.files.entry(path.to_string()).or_default().extend_from_slice(bytes);
    }

    fn remove(&mut self, path: &str) {
        self.files.remove(path);
    }

    fn list(&self, prefix: &str) -> Vec<String> {
        self.files
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect()
    }
}

/// Directory-rooted store writing real files.
#[derive(Debug)]
pub struct DiskVfs {
    root: PathBuf,
}

impl DiskVfs {
    pub fn new(root: impl Into<PathBuf>) -> io::Result<DiskVfs> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(DiskVfs { root })
    }

    pub fn root(&self) -> &std::path::Path {
        &self.root
    }

    fn resolve(&self, path: &str) -> PathBuf {
        let mut p = self.root.clone();
        for part in path.split('/').filter(|s| !s.is_empty() && *s != "..") {
            p.push(part);
        }
        p
    }
}

impl Vfs for DiskVfs {
    fn read(&self, path: &str) -> Option<Vec<u8>> {
        std::fs::read(self.resolve(path)).ok()
    }

    fn write(&mut self, path: &str, bytes: &[u8]) {
        let p = self.resolve(path);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).expect("create parent directory");
        }
        std::fs::write(&p, bytes).expect("write file");
    }

    fn append(&mut self, path: &str, bytes: &[u8]) {
        use std::io::Write;
        let p = self.resolve(path);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).expect("create parent directory");
        }
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&p)
            .expect("open file for append");
        f.write_all(bytes).expect("append to file");
    }

    fn remove(&mut self, path: &str) {
        let _ = std::fs::remove_file(self.resolve(path));
    }

    fn list(&self, prefix: &str) -> Vec<String> {
        fn walk(dir: &std::path::Path, rel: &str, out: &mut Vec<String>) {
            let Ok(entries) = std::fs::read_dir(dir) else {
                return;
            };
            for entry in entries.flatten() {
                let name = entry.file_name().to_string_lossy().into_owned();
                let child = if rel.is_empty() {
                    name.clone()
                } else {
                    format!("{rel}/{name}")
                };
                let path = entry.path();
                if path.is_dir() {
                    walk(&path, &child, out);
                } else {
                    out.push(child);
                }
            }
        }
        let mut all = Vec::new();
        walk(&self.root, "", &mut all);
        all.retain(|p| p.starts_with(prefix));
        all.sort();
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mem_vfs_round_trip() {
        let mut v = MemVfs::new();
        v.write("a/b", b"one");
        v.append("a/b", b"two");
        assert_eq!(v.read("a/b").unwrap(), b"onetwo");
        assert_eq!(v.list("a/"), vec!["a/b".to_string()]);
        v.remove("a/b");
        assert!(!v.exists("a/b"));
    }

    #[test]
    fn disk_vfs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut v = DiskVfs::new(dir.path()).unwrap();
        v.write("x/y/z", b"abc");
        v.append("x/y/z", b"def");
        assert_eq!(v.read("x/y/z").unwrap(), b"abcdef");
        assert_eq!(v.list("x/"), vec!["x/y/z".to_string()]);
    }
}
