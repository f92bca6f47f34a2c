//! MetaImage (`.mhd` + raw, or single-file `.mha`) volumes.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::volume::{GridGeometry, LabelVolume, ScalarVolume, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementType {
    UInt8,
    Int16,
    UInt16,
    Float32,
    Float64,
}

impl ElementType {
    pub fn met_name(&self) -> &'static str {
        match self {
            ElementType::UInt8 => "MET_UCHAR",
            ElementType::Int16 => "MET_SHORT",
            ElementType::UInt16 => "MET_USHORT",
            ElementType::Float32 => "MET_FLOAT",
            ElementType::Float64 => "MET_DOUBLE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "MET_UCHAR" => ElementType::UInt8,
            "MET_SHORT" => ElementType::Int16,
            "MET_USHORT" => ElementType::UInt16,
            "MET_FLOAT" => ElementType::Float32,
            "MET_DOUBLE" => ElementType::Float64,
            _ => return None,
        })
    }

    pub fn size(&self) -> usize {
        match self {
            ElementType::UInt8 => 1,
            ElementType::Int16 | ElementType::UInt16 => 2,
            ElementType::Float32 => 4,
            ElementType::Float64 => 8,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, ElementType::UInt8 | ElementType::Int16 | ElementType::UInt16)
    }

    fn range(&self) -> (f64, f64) {
        match self {
            ElementType::UInt8 => (0.0, u8::MAX as f64),
            ElementType::Int16 => (i16::MIN as f64, i16::MAX as f64),
            ElementType::UInt16 => (0.0, u16::MAX as f64),
            ElementType::Float32 => (f32::MIN as f64, f32::MAX as f64),
            ElementType::Float64 => (f64::MIN, f64::MAX),
        }
    }

    fn decode(&self, b: &[u8], msb: bool) -> f64 {
        macro_rules! get {
            ($t:ty, $n:expr) => {{
                let a: [u8; $n] = b.try_into().expect("element width");
                (if msb { <$t>::from_be_bytes(a) } else { <$t>::from_le_bytes(a) }) as f64
            }};
        }
        match self {
            ElementType::UInt8 => b[0] as f64,
            ElementType::Int16 => get!(i16, 2),
            ElementType::UInt16 => get!(u16, 2),
            ElementType::Float32 => get!(f32, 4),
            ElementType::Float64 => get!(f64, 8),
        }
    }

    fn encode(&self, v: f64, out: &mut Vec<u8>) {
        match self {
            ElementType::UInt8 => out.push(v as u8),
            ElementType::Int16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            ElementType::UInt16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
            ElementType::Float32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            ElementType::Float64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
}

/// Parsed header.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeHeader {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub element_type: ElementType,
    pub channels: usize,
    pub msb: bool,
    /// `LOCAL` or a path relative to the header.
    pub data_file: String,
    /// Bytes to skip at the start of the payload; `None` means the payload
    /// is the tail of the data file (`HeaderSize = -1`).
    pub header_size: Option<u64>,
}

impl VolumeHeader {
    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(&self.dims, &self.spacing, &self.origin)
    }

    fn payload_bytes(&self) -> u64 {
        self.dims.iter().product::<usize>() as u64 * self.channels as u64 * self.element_type.size() as u64
    }
}

/// A volume as stored: one channel or several.
#[derive(Clone, Debug, PartialEq)]
pub enum Image {
    Scalar(ScalarVolume),
    Field(VectorField),
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

/// Splits the header off `bytes`; returns the header and the byte offset
/// right after the `ElementDataFile` line.
fn parse_header(path: &Path, bytes: &[u8]) -> Result<(VolumeHeader, usize)> {
    let mut keys: HashMap<String, (usize, String)> = HashMap::new();
    let mut pos = 0;
    let mut line_no = 0;
    let mut end = None;
    while pos < bytes.len() {
        let stop = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |k| pos + k);
        line_no += 1;
        let line = std::str::from_utf8(&bytes[pos..stop])
            .map_err(|_| parse_err(path, line_no, "header is not text"))?
            .trim();
        pos = (stop + 1).min(bytes.len());
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, line_no, format!("expected `key = value`, got `{line}`")))?;
        let k = k.trim().to_string();
        let last = k == "ElementDataFile";
        keys.insert(k, (line_no, v.trim().to_string()));
        if last {
            end = Some(pos);
            break;
        }
    }
    let end = end.ok_or_else(|| Error::MissingKey { path: path.to_path_buf(), key: "ElementDataFile".into() })?;
    let get = |k: &str| keys.get(k);
    let require = |k: &str| get(k).ok_or_else(|| Error::MissingKey { path: path.to_path_buf(), key: k.into() });
    let numbers = |k: &str, n: usize| -> Result<Option<Vec<f64>>> {
        let Some((line, v)) = get(k) else { return Ok(None) };
        let xs: Vec<f64> = v
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(path, *line, format!("`{k}` holds a non-number `{t}`"))))
            .collect::<Result<_>>()?;
        if xs.len() != n {
            return Err(parse_err(path, *line, format!("`{k}` needs {n} values, got {}", xs.len())));
        }
        Ok(Some(xs))
    };
    let boolean = |k: &str| -> Result<Option<bool>> {
        match get(k) {
            None => Ok(None),
            Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                "true" | "1" => Ok(Some(true)),
                "false" | "0" => Ok(Some(false)),
                _ => Err(parse_err(path, *line, format!("`{k}` must be True or False"))),
            },
        }
    };

    let (nd_line, nd) = require("NDims")?;
    let ndim: usize = nd.parse().map_err(|_| parse_err(path, *nd_line, "NDims must be an integer"))?;
    if !(2..=3).contains(&ndim) {
        return Err(parse_err(path, *nd_line, format!("only 2-D and 3-D images are supported, got {ndim}")));
    }
    require("DimSize")?;
    let dims_f = numbers("DimSize", ndim)?.expect("present");
    if dims_f.iter().any(|d| d.fract() != 0.0 || *d < 1.0) {
        return Err(parse_err(path, keys["DimSize"].0, "DimSize must hold positive integers"));
    }
    let dims: Vec<usize> = dims_f.iter().map(|d| *d as usize).collect();
    let spacing = match numbers("ElementSpacing", ndim)? {
        Some(s) => s,
        None => numbers("ElementSize", ndim)?.unwrap_or_else(|| vec![1.0; ndim]),
    };
    let origin = match numbers("Offset", ndim)? {
        Some(o) => o,
        None => match numbers("Origin", ndim)? {
            Some(o) => o,
            None => numbers("Position", ndim)?.unwrap_or_else(|| vec![0.0; ndim]),
        },
    };
    let (_, et) = require("ElementType")?;
    let element_type = ElementType::parse(et).ok_or_else(|| Error::UnsupportedElementType(et.clone()))?;
    let channels = match get("ElementNumberOfChannels") {
        Some((line, v)) => match v.parse::<usize>() {
            Ok(c) if c >= 1 => c,
            _ => return Err(parse_err(path, *line, "ElementNumberOfChannels must be a positive integer")),
        },
        None => 1,
    };
    let msb = match boolean("BinaryDataByteOrderMSB")? {
        Some(b) => b,
        None => boolean("ElementByteOrderMSB")?.unwrap_or(false),
    };
    if boolean("CompressedData")?.unwrap_or(false) {
        return Err(parse_err(path, keys["CompressedData"].0, "compressed payloads are not supported"));
    }
    if let Some(false) = boolean("BinaryData")? {
        return Err(parse_err(path, keys["BinaryData"].0, "ASCII payloads are not supported"));
    }
    let header_size = match get("HeaderSize") {
        None => Some(0),
        Some((line, v)) => match v.parse::<i64>() {
            Ok(-1) => None,
            Ok(n) if n >= 0 => Some(n as u64),
            _ => return Err(parse_err(path, *line, "HeaderSize must be -1 or a byte count")),
        },
    };
    let (df_line, data_file) = require("ElementDataFile")?;
    if data_file.is_empty() || data_file.starts_with("LIST") || data_file.contains('%') {
        return Err(parse_err(path, *df_line, "only a single data file or LOCAL is supported"));
    }
    let header = VolumeHeader {
        dims,
        spacing,
        origin,
        element_type,
        channels,
        msb,
        data_file: data_file.clone(),
        header_size,
    };
    header.geometry()?;
    Ok((header, end))
}

/// Reads only the header of `path`.
pub fn read_header(path: &Path) -> Result<VolumeHeader> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_header(path, &bytes)?.0)
}

fn read_payload(path: &Path) -> Result<(VolumeHeader, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (h, end) = parse_header(path, &bytes)?;
    let (data, data_path): (Vec<u8>, PathBuf) = if h.data_file == "LOCAL" {
        (bytes[end..].to_vec(), path.to_path_buf())
    } else {
        let p = path.parent().unwrap_or(Path::new(".")).join(&h.data_file);
        (fs::read(&p).map_err(|e| Error::io(&p, e))?, p)
    };
    let expected = h.payload_bytes();
    let start = match h.header_size {
        Some(n) => n,
        None => (data.len() as u64).saturating_sub(expected),
    };
    let actual = (data.len() as u64).saturating_sub(start);
    if actual != expected {
        return Err(Error::SizeMismatch { path: data_path, expected, actual });
    }
    let w = h.element_type.size();
    let values = data[start as usize..].chunks_exact(w).map(|b| h.element_type.decode(b, h.msb)).collect::<Vec<_>>();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse { path: data_path, line: 0, msg: "payload holds non-finite values".into() });
    }
    Ok((h, values))
}

/// Reads a volume; several channels yield a vector field.
pub fn read_metaimage(path: &Path) -> Result<Image> {
    let (h, values) = read_payload(path)?;
    let g = h.geometry()?;
    if h.channels == 1 {
        return Ok(Image::Scalar(ScalarVolume::new(g, values)?));
    }
    let n = g.len();
    let components = (0..h.channels).map(|c| (0..n).map(|i| values[i * h.channels + c]).collect()).collect();
    Ok(Image::Field(VectorField::new(g, components)?))
}

pub fn read_scalar(path: &Path) -> Result<ScalarVolume> {
    match read_metaimage(path)? {
        Image::Scalar(v) => Ok(v),
        Image::Field(f) => Err(Error::GeometryMismatch(format!(
            "{}: expected one channel, found {}",
            path.display(),
            f.n_components()
        ))),
    }
}

pub fn read_field(path: &Path) -> Result<VectorField> {
    match read_metaimage(path)? {
        Image::Field(f) => Ok(f),
        Image::Scalar(_) => Err(Error::GeometryMismatch(format!("{}: expected a vector field", path.display()))),
    }
}

/// Reads an integer single-channel volume as labels.
pub fn read_labels(path: &Path) -> Result<LabelVolume> {
    let (h, values) = read_payload(path)?;
    if !h.element_type.is_integer() || h.channels != 1 {
        return Err(Error::UnsupportedElementType(format!(
            "{} with {} channels cannot hold labels",
            h.element_type.met_name(),
            h.channels
        )));
    }
    if values.iter().any(|v| *v < 0.0) {
        return Err(Error::Parse { path: path.to_path_buf(), line: 0, msg: "labels must be non-negative".into() });
    }
    LabelVolume::new(h.geometry()?, values.into_iter().map(|v| v as u32).collect())
}

fn fmt_list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_volume(path: &Path, g: &GridGeometry, channels: &[&[f64]], et: ElementType) -> Result<()> {
    let (lo, hi) = et.range();
    for c in channels {
        if let Some(v) = c.iter().find(|v| **v < lo || **v > hi || (et.is_integer() && v.fract() != 0.0)) {
            return Err(Error::Parameter(format!("value {v} cannot be stored as {}", et.met_name())));
        }
    }
    let local = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mha"));
    let raw_name = match path.file_stem() {
        Some(s) if !local => format!("{}.raw", s.to_string_lossy()),
        _ => "LOCAL".to_string(),
    };
    let mut header = String::new();
    header += "ObjectType = Image\n";
    header += &format!("NDims = {}\n", g.ndim());
    header += "BinaryData = True\n";
    header += "BinaryDataByteOrderMSB = False\n";
    header += "CompressedData = False\n";
    header += &format!("Offset = {}\n", fmt_list(g.origin()));
    header += &format!("ElementSpacing = {}\n", fmt_list(g.spacing()));
    header += &format!("DimSize = {}\n", fmt_list(g.dims()));
    header += &format!("ElementNumberOfChannels = {}\n", channels.len());
    header += &format!("ElementType = {}\n", et.met_name());
    header += &format!("ElementDataFile = {raw_name}\n");
    let mut data = Vec::with_capacity(g.len() * channels.len() * et.size());
    for i in 0..g.len() {
        for c in channels {
            et.encode(c[i], &mut data);
        }
    }
    if local {
        let mut bytes = header.into_bytes();
        bytes.extend_from_slice(&data);
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    } else {
        fs::write(path, header).map_err(|e| Error::io(path, e))?;
        let raw = path.with_file_name(&raw_name);
        fs::write(&raw, data).map_err(|e| Error::io(&raw, e))
    }
}

pub fn write_scalar(path: &Path, v: &ScalarVolume, et: ElementType) -> Result<()> {
    write_volume(path, v.geometry(), &[v.values()], et)
}

/// Writes the field with its components interleaved per voxel.
pub fn write_field(path: &Path, f: &VectorField, et: ElementType) -> Result<()> {
    let channels: Vec<&[f64]> = f.components().iter().map(|c| c.as_slice()).collect();
    write_volume(path, f.geometry(), &channels, et)
}

/// Writes labels with the narrowest unsigned type that holds them.
pub fn write_labels(path: &Path, l: &LabelVolume) -> Result<()> {
    let max = l.labels().iter().copied().max().unwrap_or(0);
    let et = if max <= u8::MAX as u32 {
        ElementType::UInt8
    } else if max <= u16::MAX as u32 {
        ElementType::UInt16
    } else {
        return Err(Error::Parameter(format!("label {max} does not fit in 16 bits")));
    };
    let values: Vec<f64> = l.labels().iter().map(|&x| x as f64).collect();
    write_volume(path, l.geometry(), &[&values], et)
}
