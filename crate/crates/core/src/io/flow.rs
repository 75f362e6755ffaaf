//! `TFFL` flow files: magic, `u32` version, `u32` width, `u32` height, then
//! `width * height` little-endian `f32` `(u, v)` pairs in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::binary::{ByteReader, ByteWriter};
use crate::types::FlowField;

pub const FLOW_MAGIC: &[u8; 4] = b"TFFL";

pub fn encode_flow(flow: &FlowField) -> Vec<u8> {
    let mut w = ByteWriter::with_magic(FLOW_MAGIC);
    w.u32(flow.width());
    w.u32(flow.height());
    for [u, v] in flow.vectors() {
        w.f32(*u);
        w.f32(*v);
    }
    w.into_bytes()
}

pub fn decode_flow(bytes: &[u8], path: &Path) -> Result<FlowField> {
    let mut r = ByteReader::new(bytes, path);
    r.header(FLOW_MAGIC)?;
    let width = r.u32("width")?;
    let height = r.u32("height")?;
    let count = width as usize * height as usize;
    r.require(count * 8, "flow vectors")?;
    let vectors = (0..count)
        .map(|_| Ok([r.f32("u")?, r.f32("v")?]))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    FlowField::new(width, height, vectors).map_err(|e| Error::data(path, "payload", e.to_string()))
}

pub fn write_flow(path: &Path, flow: &FlowField) -> Result<()> {
    fs::write(path, encode_flow(flow)).map_err(|e| Error::io(path, e))
}

pub fn read_flow(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flow(&bytes, path)
}
