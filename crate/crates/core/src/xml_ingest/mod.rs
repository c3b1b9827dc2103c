//! XML ingestion: documents to node trees, and partitioned collection scans
//! with optional child-path pushdown.

pub mod reader;

use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::xdm::node::STANDALONE_PARTITION;
use crate::xdm::{Node, TreeBuilder};
use reader::{Event, XmlError, XmlReader};

/// One input file and its place in document order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentHandle {
    pub partition: u32,
    pub path: PathBuf,
    pub doc_seq: u32,
}

impl DocumentHandle {
    fn uri(&self) -> Arc<str> {
        Arc::from(self.path.to_string_lossy().as_ref())
    }
}

fn parse_error(path: &Path, e: XmlError) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        offset: e.offset,
        message: e.message,
    }
}

/// Builds the complete tree of one document. Pre-order numbers start at 0
/// for the document node and count attributes right after their element.
pub fn parse_document<R: Read>(src: R, handle: &DocumentHandle) -> Result<Node> {
    build_document(src, handle).map_err(|e| parse_error(&handle.path, e))
}

fn build_document<R: Read>(src: R, handle: &DocumentHandle) -> std::result::Result<Node, XmlError> {
    let mut r = XmlReader::new(src);
    let mut b = TreeBuilder::new(handle.partition, handle.doc_seq, Some(handle.uri()));
    b.start_document(0);
    let mut pre = 1u32;
    loop {
        match r.next_event()? {
            Event::Start { name, attrs } => {
                b.start_element(name.clone(), pre);
                pre += 1;
                for (an, av) in attrs {
                    b.attribute(an.clone(), av, pre);
                    pre += 1;
                }
            }
            Event::End => b.end(),
            Event::Text(t) => {
                b.text(t, pre);
                pre += 1;
            }
            Event::Comment(c) => {
                b.comment(c, pre);
                pre += 1;
            }
            Event::Pi { target, data } => {
                b.processing_instruction(target.clone(), data, pre);
                pre += 1;
            }
            Event::Eof => break,
        }
    }
    Ok(b.finish().root())
}

/// Parses a document held in memory; used for fixtures and tests.
pub fn parse_str(xml: &str, partition: u32, doc_seq: u32) -> Result<Node> {
    let handle = DocumentHandle {
        partition,
        doc_seq,
        path: PathBuf::from("<memory>"),
    };
    parse_document(xml.as_bytes(), &handle)
}

/// Streams the nodes reached from the document node by a list of child
/// element steps. Each match is cut out as its own small tree carrying the
/// pre-order numbers it has in the full document, so nothing outside the
/// current match is kept in memory.
pub struct PathScanner<R> {
    reader: XmlReader<R>,
    steps: Arc<[Arc<str>]>,
    partition: u32,
    doc_seq: u32,
    uri: Arc<str>,
    pre: u32,
    open_depth: usize,
    matched_depth: usize,
    done: bool,
}

impl<R: Read> PathScanner<R> {
    pub fn new(src: R, handle: &DocumentHandle, steps: Arc<[Arc<str>]>) -> Self {
        assert!(!steps.is_empty(), "path scan needs at least one step");
        PathScanner {
            reader: XmlReader::new(src),
            steps,
            partition: handle.partition,
            doc_seq: handle.doc_seq,
            uri: handle.uri(),
            pre: 1,
            open_depth: 0,
            matched_depth: 0,
            done: false,
        }
    }

    pub fn next_match(&mut self) -> std::result::Result<Option<Node>, XmlError> {
        if self.done {
            return Ok(None);
        }
        loop {
            let (name, attrs) = match self.reader.next_event()? {
                Event::Start { name, attrs } => (name, attrs),
                Event::End => {
                    if self.matched_depth == self.open_depth {
                        self.matched_depth -= 1;
                    }
                    self.open_depth -= 1;
                    continue;
                }
                Event::Text(_) | Event::Comment(_) | Event::Pi { .. } => {
                    self.pre += 1;
                    continue;
                }
                Event::Eof => {
                    self.done = true;
                    return Ok(None);
                }
            };
            let d = self.open_depth;
            let hit = self.matched_depth == d && d < self.steps.len() && **name == *self.steps[d];
            if hit && d + 1 == self.steps.len() {
                let mut b = TreeBuilder::new(self.partition, self.doc_seq, Some(self.uri.clone()));
                b.start_element(name.clone(), self.pre);
                self.pre += 1;
                for (an, av) in attrs {
                    b.attribute(an.clone(), av, self.pre);
                    self.pre += 1;
                }
                return self.capture(b).map(Some);
            }
            self.pre += 1 + attrs.len() as u32;
            self.open_depth += 1;
            if hit {
                self.matched_depth += 1;
            }
        }
    }

    fn capture(&mut self, mut b: TreeBuilder) -> std::result::Result<Node, XmlError> {
        while b.depth() > 0 {
            match self.reader.next_event()? {
                Event::Start { name, attrs } => {
                    b.start_element(name.clone(), self.pre);
                    self.pre += 1;
                    for (an, av) in attrs {
                        b.attribute(an.clone(), av, self.pre);
                        self.pre += 1;
                    }
                }
                Event::End => b.end(),
                Event::Text(t) => {
                    b.text(t, self.pre);
                    self.pre += 1;
                }
                Event::Comment(c) => {
                    b.comment(c, self.pre);
                    self.pre += 1;
                }
                Event::Pi { target, data } => {
                    b.processing_instruction(target.clone(), data, self.pre);
                    self.pre += 1;
                }
                Event::Eof => unreachable!("reader reports unclosed elements"),
            }
        }
        Ok(b.finish().root())
    }
}

/// Partition count plus the directories each partition reads. A partition
/// may own several directories or none.
#[derive(Clone, Debug)]
pub struct PartitionSpec {
    roots: Vec<Vec<PathBuf>>,
    /// Where `doc()` and non-partitioned paths resolve.
    data_root: PathBuf,
}

impl PartitionSpec {
    pub fn new(data_root: impl Into<PathBuf>, roots: Vec<Vec<PathBuf>>) -> Self {
        assert!(!roots.is_empty(), "at least one partition");
        PartitionSpec {
            roots,
            data_root: data_root.into(),
        }
    }

    /// Lays `partitions` workers over a data root. Subdirectories named
    /// `part-*` are dealt out in contiguous runs; without any, the root
    /// itself belongs to partition 0.
    pub fn from_data_root(root: impl Into<PathBuf>, partitions: usize) -> Result<Self> {
        let root = root.into();
        assert!(partitions >= 1);
        let mut parts = Vec::new();
        if root.is_dir() {
            let rd = std::fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
            for entry in rd {
                let entry = entry.map_err(|e| Error::io(&root, e))?;
                let name = entry.file_name();
                if name.to_string_lossy().starts_with("part-") && entry.path().is_dir() {
                    parts.push(entry.path());
                }
            }
        }
        parts.sort();
        let mut roots = vec![Vec::new(); partitions];
        if parts.is_empty() {
            roots[0].push(root.clone());
        } else {
            let k = parts.len();
            for (p, slot) in roots.iter_mut().enumerate() {
                *slot = parts[p * k / partitions..(p + 1) * k / partitions].to_vec();
            }
        }
        Ok(PartitionSpec {
            roots,
            data_root: root,
        })
    }

    pub fn partition_count(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self, partition: usize) -> &[PathBuf] {
        &self.roots[partition]
    }

    pub fn data_root(&self) -> &Path {
        &self.data_root
    }

    /// The same directories regrouped into a single partition.
    pub fn merged(&self) -> PartitionSpec {
        PartitionSpec {
            roots: vec![self.roots.concat()],
            data_root: self.data_root.clone(),
        }
    }

    /// Files of a collection read by one partition, in path order. A
    /// collection written `/name` is the `name` subdirectory of each of the
    /// partition's roots; any other string is a directory read whole by
    /// partition 0.
    pub fn collection_files(&self, partition: usize, collection: &str) -> Result<Vec<DocumentHandle>> {
        let dirs: Vec<PathBuf> = match collection.strip_prefix('/') {
            Some(rel) => self.roots[partition].iter().map(|r| r.join(rel)).collect(),
            None if partition == 0 => vec![PathBuf::from(collection)],
            None => Vec::new(),
        };
        let mut files = Vec::new();
        for dir in dirs {
            let rd = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
            for entry in rd {
                let entry = entry.map_err(|e| Error::io(&dir, e))?;
                let path = entry.path();
                if path.extension().is_some_and(|x| x == "xml") && path.is_file() {
                    files.push(path);
                }
            }
        }
        files.sort();
        Ok(files
            .into_iter()
            .enumerate()
            .map(|(i, path)| DocumentHandle {
                partition: partition as u32,
                path,
                doc_seq: i as u32,
            })
            .collect())
    }

    /// Total bytes of a collection over all partitions; a size estimate for
    /// choosing join sides.
    pub fn collection_bytes(&self, collection: &str) -> u64 {
        (0..self.partition_count())
            .filter_map(|p| self.collection_files(p, collection).ok())
            .flatten()
            .filter_map(|h| std::fs::metadata(&h.path).ok())
            .map(|m| m.len())
            .sum()
    }

    /// Resolves a `doc()` argument. Leading `/` means under the data root;
    /// relative names are tried under the data root first.
    pub fn resolve_doc(&self, name: &str) -> DocumentHandle {
        let under_root = self.data_root.join(name.trim_start_matches('/'));
        let path = if under_root.exists() || name.starts_with('/') {
            under_root
        } else {
            PathBuf::from(name)
        };
        let mut h = rustc_hash::FxHasher::default();
        path.hash(&mut h);
        DocumentHandle {
            partition: STANDALONE_PARTITION,
            doc_seq: h.finish() as u32,
            path,
        }
    }
}

fn open(handle: &DocumentHandle) -> Result<File> {
    File::open(&handle.path).map_err(|e| Error::io(&handle.path, e))
}

pub fn load_document(handle: &DocumentHandle) -> Result<Node> {
    parse_document(open(handle)?, handle)
}

/// Whole documents of one partition's share of a collection, one at a time.
pub struct CollectionScan {
    files: std::vec::IntoIter<DocumentHandle>,
}

impl Iterator for CollectionScan {
    type Item = Result<Node>;

    fn next(&mut self) -> Option<Result<Node>> {
        self.files.next().map(|h| load_document(&h))
    }
}

pub fn scan_collection(spec: &PartitionSpec, partition: usize, collection: &str) -> Result<CollectionScan> {
    Ok(CollectionScan {
        files: spec.collection_files(partition, collection)?.into_iter(),
    })
}

/// Nodes matched by a child path in each of a partition's files.
pub struct PathScan {
    files: std::vec::IntoIter<DocumentHandle>,
    steps: Arc<[Arc<str>]>,
    current: Option<(PathBuf, PathScanner<File>)>,
}

impl Iterator for PathScan {
    type Item = Result<Node>;

    fn next(&mut self) -> Option<Result<Node>> {
        loop {
            if let Some((path, scanner)) = &mut self.current {
                match scanner.next_match() {
                    Ok(Some(n)) => return Some(Ok(n)),
                    Ok(None) => self.current = None,
                    Err(e) => {
                        let err = parse_error(path, e);
                        self.current = None;
                        return Some(Err(err));
                    }
                }
            }
            let h = self.files.next()?;
            match open(&h) {
                Ok(f) => self.current = Some((h.path.clone(), PathScanner::new(f, &h, self.steps.clone()))),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn scan_collection_with_path(
    spec: &PartitionSpec,
    partition: usize,
    collection: &str,
    steps: &[Arc<str>],
) -> Result<PathScan> {
    Ok(PathScan {
        files: spec.collection_files(partition, collection)?.into_iter(),
        steps: steps.iter().cloned().collect(),
        current: None,
    })
}
