//! Versioned binary snapshots of an encoded dataset, so repeat runs skip
//! parsing, encoding, and node ordering.

use std::io::{Read, Write};
use std::path::Path;

use super::dataset::GraphDataset;
use super::dictionary::Dictionary;
use super::StorageError;
use std::sync::Arc;

const MAGIC: &[u8; 6] = b"TJSNAP";
const VERSION: u16 = 1;

fn io_err(path: &Path, e: std::io::Error) -> StorageError {
    StorageError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

struct Writer<W: Write> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.out.write_all(&[v])
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }
    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len() as u32)?;
        self.out.write_all(s.as_bytes())
    }
}

struct Reader<R: Read> {
    inp: R,
}

impl<R: Read> Reader<R> {
    fn u8(&mut self) -> std::io::Result<u8> {
        let mut b = [0u8; 1];
        self.inp.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn u32(&mut self) -> std::io::Result<u32> {
        let mut b = [0u8; 4];
        self.inp.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self) -> std::io::Result<u64> {
        let mut b = [0u8; 8];
        self.inp.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
    fn str(&mut self) -> Result<String, StorageError> {
        let len = self.u32().map_err(plain_io)? as usize;
        if len > (1 << 30) {
            return Err(StorageError::BadSnapshot("string length out of range".into()));
        }
        let mut buf = vec![0u8; len];
        self.inp.read_exact(&mut buf).map_err(plain_io)?;
        String::from_utf8(buf).map_err(|_| StorageError::BadSnapshot("invalid utf-8".into()))
    }
}

fn plain_io(e: std::io::Error) -> StorageError {
    StorageError::Io {
        path: "<snapshot>".into(),
        source: e,
    }
}

pub fn write_snapshot(path: &Path, dataset: &GraphDataset) -> Result<(), StorageError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = Writer {
        out: std::io::BufWriter::new(file),
    };
    (|| -> std::io::Result<()> {
        w.out.write_all(MAGIC)?;
        w.out.write_all(&VERSION.to_le_bytes())?;
        w.str(&dataset.ordering_name)?;
        w.u8(dataset.pruned as u8)?;
        w.u32(dataset.dict.len() as u32)?;
        for v in dataset.dict.values() {
            w.str(v)?;
        }
        w.u64(dataset.edges.len() as u64)?;
        for &(s, d) in &dataset.edges {
            w.u32(s)?;
            w.u32(d)?;
        }
        match &dataset.annotations {
            Some(a) => {
                w.u8(1)?;
                for &v in a {
                    w.u64(v.to_bits())?;
                }
            }
            None => w.u8(0)?,
        }
        w.out.flush()
    })()
    .map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<GraphDataset, StorageError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = Reader {
        inp: std::io::BufReader::new(file),
    };
    let mut magic = [0u8; 6];
    r.inp.read_exact(&mut magic).map_err(plain_io)?;
    if &magic != MAGIC {
        return Err(StorageError::BadSnapshot("bad magic".into()));
    }
    let mut ver = [0u8; 2];
    r.inp.read_exact(&mut ver).map_err(plain_io)?;
    if u16::from_le_bytes(ver) != VERSION {
        return Err(StorageError::BadSnapshot(format!(
            "unsupported version {}",
            u16::from_le_bytes(ver)
        )));
    }
    let ordering_name = r.str()?;
    let pruned = r.u8().map_err(plain_io)? != 0;
    let dict_len = r.u32().map_err(plain_io)?;
    let mut dict = Dictionary::new();
    for _ in 0..dict_len {
        dict.intern(&r.str()?)?;
    }
    let edge_count = r.u64().map_err(plain_io)? as usize;
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let s = r.u32().map_err(plain_io)?;
        let d = r.u32().map_err(plain_io)?;
        edges.push((s, d));
    }
    let annotations = if r.u8().map_err(plain_io)? != 0 {
        let mut a = Vec::with_capacity(edge_count);
        for _ in 0..edge_count {
            a.push(f64::from_bits(r.u64().map_err(plain_io)?));
        }
        Some(a)
    } else {
        None
    };
    Ok(GraphDataset {
        dict: Arc::new(dict),
        edges,
        annotations,
        ordering_name,
        pruned,
    })
}
