//! Weight files: one JSON header line, then every parameter array in
//! declaration order (per layer: weights, then bias) as little-endian
//! `f32` (float models) or `i32` raw fixed-point values.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use polyrx_core::rfnet::{FixedFormat, FloatParams, ModelParams, Params, RfnetArch, RfnetModel};
use serde::{Deserialize, Serialize};

pub const FLOAT_FORMAT: &str = "float32";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightHeader {
    pub conv_filters: Vec<usize>,
    pub filter_size: usize,
    pub dense: Vec<usize>,
    pub input_w: usize,
    pub input_h: usize,
    pub n_classes: usize,
    pub format: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_names: Vec<String>,
}

impl WeightHeader {
    pub fn arch(&self) -> RfnetArch {
        RfnetArch {
            conv_filters: self.conv_filters.clone(),
            filter_size: self.filter_size,
            dense: self.dense.clone(),
            input_w: self.input_w,
            input_h: self.input_h,
            n_classes: self.n_classes,
        }
    }
}

/// A model plus the class names it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFile {
    pub model: RfnetModel,
    pub class_names: Vec<String>,
}

/// Rounds every parameter to the nearest `f32`, which is what a float
/// weight file stores.
pub fn round_to_f32(p: &FloatParams) -> FloatParams {
    p.map(|v| v as f32 as f64)
}

pub fn encode(model: &RfnetModel, class_names: &[String]) -> Result<Vec<u8>> {
    let a = &model.arch;
    let format = match &model.params {
        ModelParams::Float(_) => FLOAT_FORMAT.to_string(),
        ModelParams::Fixed { format, .. } => format.to_string(),
    };
    let header = WeightHeader {
        conv_filters: a.conv_filters.clone(),
        filter_size: a.filter_size,
        dense: a.dense.clone(),
        input_w: a.input_w,
        input_h: a.input_h,
        n_classes: a.n_classes,
        format,
        class_names: class_names.to_vec(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    match &model.params {
        ModelParams::Float(p) => {
            for t in p.tensors() {
                for &v in t {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
        ModelParams::Fixed { params, .. } => {
            for t in params.tensors() {
                for &v in t {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<WeightFile> {
    let Some(nl) = bytes.iter().position(|&b| b == b'\n') else {
        bail!("weight file has no header line");
    };
    let header: WeightHeader = serde_json::from_slice(&bytes[..nl]).context("parsing weight header")?;
    let arch = header.arch();
    arch.validate()?;
    let body = &bytes[nl + 1..];
    let shapes: Vec<usize> = Params::filled(&arch, 0u8).tensors().iter().map(|t| t.len()).collect();
    let total: usize = shapes.iter().sum();
    ensure!(
        body.len() == total * 4,
        "weight body has {} bytes, architecture needs {}",
        body.len(),
        total * 4
    );
    let words: Vec<[u8; 4]> = body.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
    let split = |values: Vec<[u8; 4]>| -> Vec<Vec<[u8; 4]>> {
        let mut rest = values.as_slice();
        shapes
            .iter()
            .map(|&n| {
                let (head, tail) = rest.split_at(n);
                rest = tail;
                head.to_vec()
            })
            .collect()
    };
    let params = if header.format == FLOAT_FORMAT {
        let tensors: Vec<Vec<f64>> = split(words)
            .into_iter()
            .map(|t| t.into_iter().map(|b| f32::from_le_bytes(b) as f64).collect())
            .collect();
        ModelParams::Float(Params::from_tensors(&arch, &tensors, 0.0)?)
    } else {
        let format: FixedFormat = header
            .format
            .parse()
            .with_context(|| format!("unknown weight format {:?}", header.format))?;
        let tensors: Vec<Vec<i32>> = split(words)
            .into_iter()
            .map(|t| t.into_iter().map(i32::from_le_bytes).collect())
            .collect();
        ModelParams::Fixed {
            params: Params::from_tensors(&arch, &tensors, 0)?,
            format,
        }
    };
    Ok(WeightFile {
        model: RfnetModel::new(arch, params)?,
        class_names: header.class_names,
    })
}

pub fn save(path: &Path, model: &RfnetModel, class_names: &[String]) -> Result<()> {
    fs::write(path, encode(model, class_names)?).with_context(|| format!("writing {}", path.display()))
}

pub fn load(path: &Path) -> Result<WeightFile> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode(&bytes).with_context(|| format!("decoding {}", path.display()))
}
