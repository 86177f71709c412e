//! Model container.
//!
//! ```text
//! magic        8 bytes   "HIVENET\0"
//! version      u32 LE    currently 1
//! topo_len     u32 LE
//! topology     topo_len bytes of UTF-8 JSON (inputs, nodes, outputs, seed)
//! n_records    u32 LE
//! per record:
//!   name_len   u32 LE, name (UTF-8, "<node>.<param>")
//!   ndim       u32 LE, dims as u64 LE
//!   values     prod(dims) × f64 LE
//! ```
//!
//! Records cover trainable parameters and batchnorm running statistics, in
//! node order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::graph::{NetworkGraph, Topology};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HIVENET\0";
pub const FORMAT_VERSION: u32 = 1;

fn wio(e: std::io::Error) -> Error {
    Error::Format(format!("model stream: {e}"))
}

pub fn write_model<W: Write>(net: &NetworkGraph, mut w: W) -> Result<()> {
    let topo = serde_json::to_vec(net.topology()).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MAGIC).map_err(wio)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(wio)?;
    w.write_all(&(topo.len() as u32).to_le_bytes()).map_err(wio)?;
    w.write_all(&topo).map_err(wio)?;
    let records = net.state_records();
    w.write_all(&(records.len() as u32).to_le_bytes()).map_err(wio)?;
    for (name, t) in records {
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(wio)?;
        w.write_all(name.as_bytes()).map_err(wio)?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes()).map_err(wio)?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes()).map_err(wio)?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes()).map_err(wio)?;
        }
    }
    w.flush().map_err(wio)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(wio)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_model<R: Read>(mut r: R) -> Result<NetworkGraph> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(wio)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Version(format!(
            "model format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let len = read_u32(&mut r)? as usize;
    let mut topo = vec![0u8; len];
    r.read_exact(&mut topo).map_err(wio)?;
    let topology: Topology = serde_json::from_slice(&topo).map_err(|e| Error::Format(format!("topology: {e}")))?;
    let mut net = NetworkGraph::from_topology(topology)?;
    let expected = net.state_records().len();
    let n = read_u32(&mut r)? as usize;
    if n != expected {
        return Err(Error::Format(format!("{n} records, graph needs {expected}")));
    }
    for _ in 0..n {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(wio)?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
        let ndim = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(wio)?;
            shape.push(u64::from_le_bytes(b) as usize);
        }
        let count: usize = shape.iter().product();
        let mut raw = vec![0u8; count * 8];
        r.read_exact(&mut raw).map_err(wio)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::new(shape, data)?;
        let slot = net
            .state_record_mut(&name)
            .ok_or_else(|| Error::Format(format!("unknown record '{name}'")))?;
        if slot.shape() != t.shape() {
            return Err(Error::Format(format!(
                "record '{name}' has shape {:?}, graph expects {:?}",
                t.shape(),
                slot.shape()
            )));
        }
        *slot = t;
    }
    Ok(net)
}

pub fn save_model(net: &NetworkGraph, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(net, BufWriter::new(f))
}

pub fn load_model(path: &Path) -> Result<NetworkGraph> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(f))
}
