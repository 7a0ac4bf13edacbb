//! Binary model container.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SOMK"
//!      4     4  format version, u32 LE (currently 1)
//!      8     1  topology kind (0 rectangular, 1 hexagonal)
//!      9     1  feature metric (0 cosine, 1 euclidean, 2 manhattan, 3 chebyshev)
//!     10     1  neighborhood kernel (0 gaussian, 1 mexican hat, 2 bubble, 3 triangle)
//!     11     1  reserved, 0
//!     12     4  rows, u32 LE
//!     16     4  cols, u32 LE
//!     20     4  dim, u32 LE
//!     24     -  rows * cols * dim weights, f64 LE, row-major neuron order
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::SomModel;
use crate::error::{Result, SomError};
use crate::grid::{GridTopology, TopologyKind};
use crate::kernels::{FeatureDistance, NeighborhoodKernel};

pub const MAGIC: [u8; 4] = *b"SOMK";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub fn write_model<W: Write>(model: &SomModel, mut w: W) -> Result<()> {
    let u32_field = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| SomError::Validation(format!("{what} {v} does not fit the model format")))
    };
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.push(match model.topo.kind() {
        TopologyKind::Rectangular => 0,
        TopologyKind::Hexagonal => 1,
    });
    header.push(model.metric.code());
    header.push(model.kernel.code());
    header.push(0);
    header.extend_from_slice(&u32_field(model.topo.rows(), "rows")?.to_le_bytes());
    header.extend_from_slice(&u32_field(model.topo.cols(), "cols")?.to_le_bytes());
    header.extend_from_slice(&u32_field(model.dim, "dim")?.to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(model.weights.len() * 8);
    for v in &model.weights {
        body.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn save(model: &SomModel, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_model(model, std::io::BufWriter::new(file))
}

pub fn read_model<R: Read>(mut r: R) -> Result<SomModel> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn load(path: impl AsRef<Path>) -> Result<SomModel> {
    read_model(std::fs::File::open(path)?)
}

fn parse_err(offset: usize, message: impl Into<String>) -> SomError {
    SomError::Parse {
        offset,
        message: message.into(),
    }
}

fn decode(bytes: &[u8]) -> Result<SomModel> {
    if bytes.len() < HEADER_LEN {
        return Err(parse_err(bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if bytes[0..4] != MAGIC {
        return Err(parse_err(0, "bad magic, not a model file"));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4-byte slice"));
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(SomError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let kind = match bytes[8] {
        0 => TopologyKind::Rectangular,
        1 => TopologyKind::Hexagonal,
        other => return Err(parse_err(8, format!("unknown topology code {other}"))),
    };
    let metric = FeatureDistance::from_code(bytes[9]).ok_or_else(|| parse_err(9, format!("unknown metric code {}", bytes[9])))?;
    let kernel =
        NeighborhoodKernel::from_code(bytes[10]).ok_or_else(|| parse_err(10, format!("unknown kernel code {}", bytes[10])))?;
    if bytes[11] != 0 {
        return Err(parse_err(11, "reserved byte must be zero"));
    }
    let (rows, cols, dim) = (u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize);
    if rows == 0 || cols == 0 || dim == 0 {
        return Err(SomError::Validation(format!("degenerate header {rows}x{cols}x{dim}")));
    }
    let topo = GridTopology::new(kind, rows, cols)?;
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(dim))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| SomError::Validation("header dimensions overflow".into()))?;
    if payload.len() != expected {
        let row_bytes = rows * cols * 8;
        if !payload.is_empty() && payload.len() % row_bytes == 0 {
            // A whole codebook of a different width.
            return Err(SomError::Validation(format!(
                "header declares dim {dim} but payload holds {} values per neuron",
                payload.len() / row_bytes
            )));
        }
        return Err(parse_err(
            bytes.len(),
            format!("payload is {} bytes, expected {expected}", payload.len()),
        ));
    }
    let weights: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
        return Err(SomError::Validation(format!(
            "non-finite weight at byte {}",
            HEADER_LEN + pos * 8
        )));
    }
    Ok(SomModel::new(topo, dim, weights)?.with_metric(metric).with_kernel(kernel))
}
