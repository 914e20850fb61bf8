use std::path::Path;

use serde::{Deserialize, Serialize};

use super::multiclass::MulticlassSvmModel;
use super::scaler::ScalerParams;
use super::smo::BinarySvmModel;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelFileRef<'a> {
    version: u32,
    class_names: &'a [String],
    scaler: &'a ScalerParams,
    binaries: &'a [BinarySvmModel],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    class_names: Vec<String>,
    scaler: ScalerParams,
    binaries: Vec<BinarySvmModel>,
}

pub fn model_to_json(m: &MulticlassSvmModel) -> Result<String> {
    let doc = ModelFileRef {
        version: MODEL_VERSION,
        class_names: &m.class_names,
        scaler: &m.scaler,
        binaries: &m.binaries,
    };
    let mut s = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Persistence(format!("serializing model: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json(text: &str) -> Result<MulticlassSvmModel> {
    let probe: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Persistence(format!("model file is not valid JSON: {e}")))?;
    match probe.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(MODEL_VERSION) => {}
        Some(v) => {
            return Err(Error::Persistence(format!(
                "model version {v} is not supported (expected {MODEL_VERSION})"
            )))
        }
        None => return Err(Error::Persistence("model file lacks a version".into())),
    }
    let file: ModelFile = serde_json::from_value(probe)
        .map_err(|e| Error::Persistence(format!("model schema: {e}")))?;
    debug_assert_eq!(file.version, MODEL_VERSION);
    let model = MulticlassSvmModel {
        scaler: file.scaler,
        class_names: file.class_names,
        binaries: file.binaries,
    };
    validate(&model)?;
    Ok(model)
}

fn validate(m: &MulticlassSvmModel) -> Result<()> {
    let bad = |msg: String| Err(Error::Persistence(msg));
    if m.class_names.len() < 2 || m.binaries.len() != m.class_names.len() {
        return bad(format!(
            "{} classes but {} binary machines",
            m.class_names.len(),
            m.binaries.len()
        ));
    }
    let dim = m.scaler.dim();
    if m.scaler.sds.len() != dim || m.scaler.flags.len() != dim {
        return bad("scaler vectors differ in length".into());
    }
    if m.scaler.sds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return bad("scaler standard deviations must be positive".into());
    }
    for (name, b) in m.class_names.iter().zip(&m.binaries) {
        if b.dual_coefs.len() != b.support_vectors.len() {
            return bad(format!("machine `{name}` has mismatched coefficient count"));
        }
        if b.support_vectors.iter().any(|sv| sv.len() != dim) {
            return bad(format!(
                "machine `{name}` has support vectors of the wrong dimension"
            ));
        }
        b.kernel
            .validate()
            .map_err(|e| Error::Persistence(format!("machine `{name}`: {e}")))?;
    }
    Ok(())
}

pub fn save_model(m: &MulticlassSvmModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(m)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MulticlassSvmModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
