//! Binary containers for models (`.mod`) and data cubes (`.fwd`), content
//! hashing, and small CSV helpers.
//!
//! Layout of both containers: an 8-byte magic, the JSON header length as a
//! little-endian `u64`, the UTF-8 JSON header, then the little-endian
//! 64-bit float payload. Model payloads are `[field][x][z]` (z fastest);
//! cube payloads are `[frequency][source][receiver]` with interleaved
//! real and imaginary parts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::survey::{Acquisition, DataCube, NoiseRecord};

pub const MODEL_MAGIC: &[u8; 8] = b"LSFWIMOD";
pub const CUBE_MAGIC: &[u8; 8] = b"LSFWIFWD";
const VERSION: u32 = 1;

/// One named grid field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInfo {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub grid: Grid2D,
    pub fields: Vec<(FieldInfo, Vec<f64>)>,
    /// Free-form provenance (salt value, RBF lattice, generator settings, ...).
    pub attributes: serde_json::Map<String, serde_json::Value>,
}

impl ModelFile {
    pub fn new(grid: Grid2D) -> Self {
        Self { grid, fields: Vec::new(), attributes: serde_json::Map::new() }
    }

    pub fn with_field(mut self, name: &str, unit: &str, values: Vec<f64>) -> Self {
        self.fields.push((FieldInfo { name: name.into(), unit: unit.into() }, values));
        self
    }

    pub fn with_attribute(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.attributes.insert(key.into(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|(f, _)| f.name == name).map(|(_, v)| v.as_slice())
    }

    /// The named field, or an error listing the available ones.
    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.field(name).ok_or_else(|| {
            let names: Vec<&str> = self.fields.iter().map(|(f, _)| f.name.as_str()).collect();
            Error::Format(format!("model file has no field '{name}' (available: {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelHeader {
    format: String,
    version: u32,
    dtype: String,
    shape: [usize; 3],
    axis_order: [String; 3],
    grid: Grid2D,
    fields: Vec<FieldInfo>,
    #[serde(default)]
    attributes: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Weighting {
    kind: String,
    peak: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CubeHeader {
    format: String,
    version: u32,
    dtype: String,
    shape: [usize; 3],
    axis_order: [String; 3],
    acquisition: Acquisition,
    weighting: Weighting,
    noise: Option<NoiseRecord>,
}

fn write_container<W: Write>(mut w: W, magic: &[u8; 8], header: &[u8], payload: impl Iterator<Item = f64>) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(header)?;
    for v in payload {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_container<R: Read>(mut r: R, magic: &[u8; 8], what: &str) -> Result<(Vec<u8>, Vec<f64>)> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m).map_err(|_| Error::Format(format!("{what}: file too short")))?;
    if &m != magic {
        return Err(Error::Format(format!("{what}: bad magic {:?}", String::from_utf8_lossy(&m))));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| Error::Format(format!("{what}: truncated header length")))?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 30 {
        return Err(Error::Format(format!("{what}: header length {len} is implausible")));
    }
    let mut header = vec![0u8; len];
    r.read_exact(&mut header).map_err(|_| Error::Format(format!("{what}: truncated header")))?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.len() % 8 != 0 {
        return Err(Error::Format(format!("{what}: payload is not a whole number of 8-byte values")));
    }
    let values = rest.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((header, values))
}

pub fn write_model_to<W: Write>(w: W, model: &ModelFile) -> Result<()> {
    let n = model.grid.len();
    for (f, v) in &model.fields {
        if v.len() != n {
            return Err(Error::Format(format!("field '{}' has {} values, grid has {n}", f.name, v.len())));
        }
    }
    let header = ModelHeader {
        format: "lsfwi-model".into(),
        version: VERSION,
        dtype: "<f8".into(),
        shape: [model.fields.len(), model.grid.nx, model.grid.nz],
        axis_order: ["field".into(), "x".into(), "z".into()],
        grid: model.grid,
        fields: model.fields.iter().map(|(f, _)| f.clone()).collect(),
        attributes: model.attributes.clone(),
    };
    let bytes = serde_json::to_vec(&header)?;
    write_container(w, MODEL_MAGIC, &bytes, model.fields.iter().flat_map(|(_, v)| v.iter().copied()))
}

pub fn read_model_from<R: Read>(r: R) -> Result<ModelFile> {
    let (header, values) = read_container(r, MODEL_MAGIC, "model file")?;
    let h: ModelHeader = serde_json::from_slice(&header)?;
    if h.dtype != "<f8" || h.version != VERSION {
        return Err(Error::Format(format!("unsupported model dtype {} / version {}", h.dtype, h.version)));
    }
    h.grid.validate()?;
    if h.shape != [h.fields.len(), h.grid.nx, h.grid.nz] {
        return Err(Error::Format("model header shape disagrees with grid and field list".into()));
    }
    let n = h.grid.len();
    if values.len() != n * h.fields.len() {
        return Err(Error::Format(format!("model payload has {} values, expected {}", values.len(), n * h.fields.len())));
    }
    let fields = h.fields.into_iter().zip(values.chunks(n.max(1))).map(|(f, v)| (f, v.to_vec())).collect();
    Ok(ModelFile { grid: h.grid, fields, attributes: h.attributes })
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    write_model_to(BufWriter::new(File::create(path)?), model)
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    read_model_from(BufReader::new(File::open(path)?))
}

pub fn write_cube_to<W: Write>(w: W, cube: &DataCube) -> Result<()> {
    let shape = cube.shape();
    if cube.values.len() != shape.iter().product::<usize>() {
        return Err(Error::Format("cube values do not match its acquisition".into()));
    }
    let header = CubeHeader {
        format: "lsfwi-data".into(),
        version: VERSION,
        dtype: "<c16".into(),
        shape,
        axis_order: ["frequency".into(), "source".into(), "receiver".into()],
        acquisition: cube.acquisition.clone(),
        weighting: Weighting {
            kind: if cube.acquisition.ricker_peak.is_some() { "ricker" } else { "none" }.into(),
            peak: cube.acquisition.ricker_peak,
        },
        noise: cube.noise,
    };
    let bytes = serde_json::to_vec(&header)?;
    write_container(w, CUBE_MAGIC, &bytes, cube.values.iter().flat_map(|c| [c.re, c.im]))
}

pub fn read_cube_from<R: Read>(r: R) -> Result<DataCube> {
    let (header, values) = read_container(r, CUBE_MAGIC, "data file")?;
    let h: CubeHeader = serde_json::from_slice(&header)?;
    if h.dtype != "<c16" || h.version != VERSION {
        return Err(Error::Format(format!("unsupported data dtype {} / version {}", h.dtype, h.version)));
    }
    if h.weighting.peak != h.acquisition.ricker_peak {
        return Err(Error::Format("weighting block disagrees with acquisition".into()));
    }
    let expected = [h.acquisition.n_frequencies(), h.acquisition.n_sources(), h.acquisition.n_receivers()];
    if h.shape != expected || values.len() != 2 * expected.iter().product::<usize>() {
        return Err(Error::Format("data payload does not match the acquisition shape".into()));
    }
    let values = values.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(DataCube { acquisition: h.acquisition, values, noise: h.noise })
}

pub fn write_cube(path: &Path, cube: &DataCube) -> Result<()> {
    write_cube_to(BufWriter::new(File::create(path)?), cube)
}

pub fn read_cube(path: &Path) -> Result<DataCube> {
    read_cube_from(BufReader::new(File::open(path)?))
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Writes a plain vector (for instance RBF weights) as a one-column CSV.
pub fn write_vector_csv(path: &Path, name: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    w.write_record(["index", name]).map_err(|e| Error::Format(e.to_string()))?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")]).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let v = rec.get(1).ok_or_else(|| Error::Format("missing value column".into()))?;
        out.push(v.parse::<f64>().map_err(|e| Error::Format(format!("bad number '{v}': {e}")))?);
    }
    Ok(out)
}
