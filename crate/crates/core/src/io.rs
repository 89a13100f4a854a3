//! JSON documents for architectures and parameters.
//!
//! Architectures look like `{"M": 2, "H": 4, "layers": [{"R": 3, "S": 1,
//! "D": 2, "shared": true}]}`; unknown fields are rejected and `shared`
//! defaults to `true`. Parameter documents store each filter's weights
//! (flattened as `[d][j][i]`) and biases (`[j][i]`); exact values are `"p/q"`
//! strings and float values plain numbers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::network::{Filter, LayerParams, LayerSpec, NetworkParams, NetworkSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchDocument {
    #[serde(rename = "M")]
    pub rep_channels: usize,
    #[serde(rename = "H")]
    pub width: usize,
    pub layers: Vec<LayerSpec>,
}

impl ArchDocument {
    pub fn from_spec(spec: &NetworkSpec) -> Self {
        Self { rep_channels: spec.rep_channels(), width: spec.width(), layers: spec.layers().to_vec() }
    }

    pub fn to_spec(&self) -> Result<NetworkSpec> {
        NetworkSpec::new(self.width, self.rep_channels, self.layers.clone())
    }
}

pub fn parse_arch(text: &str) -> Result<NetworkSpec> {
    let doc: ArchDocument = serde_json::from_str(text)?;
    doc.to_spec()
}

pub fn read_arch(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    parse_arch(&std::fs::read_to_string(path)?)
}

pub fn arch_to_string(spec: &NetworkSpec) -> String {
    serde_json::to_string_pretty(&ArchDocument::from_spec(spec)).expect("architecture serializes")
}

pub fn params_to_json<T: Scalar>(params: &NetworkParams<T>) -> Value {
    let layers: Vec<Value> = params
        .layers()
        .iter()
        .map(|layer| {
            let filters: Vec<Value> = layer
                .filters()
                .iter()
                .map(|f| {
                    json!({
                        "weights": f.weights().iter().map(Scalar::to_json).collect::<Vec<_>>(),
                        "biases": f.biases().iter().map(Scalar::to_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json!({
                "spec": layer.spec(),
                "in_channels": layer.in_channels(),
                "out_size": layer.out_size(),
                "filters": filters,
            })
        })
        .collect();
    json!({ "mode": T::MODE, "layers": layers })
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, at: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::Document(format!("{at}: missing field `{key}`")))
}

fn as_object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::Document(format!("{at}: expected an object")))
}

fn as_usize(v: &Value, at: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::Document(format!("{at}: expected a non-negative integer")))
}

fn scalars<T: Scalar>(v: &Value, at: &str) -> Result<Vec<T>> {
    v.as_array()
        .ok_or_else(|| Error::Document(format!("{at}: expected an array")))?
        .iter()
        .enumerate()
        .map(|(k, x)| T::from_json(x).map_err(|e| Error::Document(format!("{at}[{k}]: {e}"))))
        .collect()
}

/// Reads a parameter document in either scalar mode; the `mode` field is
/// informational.
pub fn params_from_json<T: Scalar>(doc: &Value) -> Result<NetworkParams<T>> {
    let root = as_object(doc, "params")?;
    let layers = field(root, "layers", "params")?
        .as_array()
        .ok_or_else(|| Error::Document("params.layers: expected an array".into()))?;
    let mut out = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let at = format!("layers[{l}]");
        let obj = as_object(layer, &at)?;
        let spec: LayerSpec = serde_json::from_value(field(obj, "spec", &at)?.clone())
            .map_err(|e| Error::Document(format!("{at}.spec: {e}")))?;
        let in_channels = as_usize(field(obj, "in_channels", &at)?, &format!("{at}.in_channels"))?;
        let out_size = as_usize(field(obj, "out_size", &at)?, &format!("{at}.out_size"))?;
        let filters = field(obj, "filters", &at)?
            .as_array()
            .ok_or_else(|| Error::Document(format!("{at}.filters: expected an array")))?
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let fat = format!("{at}.filters[{k}]");
                let fobj = as_object(f, &fat)?;
                let w = scalars(field(fobj, "weights", &fat)?, &format!("{fat}.weights"))?;
                let b = scalars(field(fobj, "biases", &fat)?, &format!("{fat}.biases"))?;
                Filter::new(in_channels, spec.receptive, w, b).map_err(|e| Error::Document(format!("{fat}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(LayerParams::new(spec, in_channels, out_size, filters)?);
    }
    Ok(NetworkParams::new(out))
}

pub fn read_params<T: Scalar>(path: impl AsRef<Path>) -> Result<NetworkParams<T>> {
    let text = std::fs::read_to_string(path)?;
    params_from_json(&serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{claim3_params, claim3_spec, ConstructionConfig};
    use crate::grid::PartitionKind;
    use crate::scalar::Rational;

    #[test]
    fn arch_round_trip_and_defaults() {
        let spec = parse_arch(r#"{"M": 2, "H": 4, "layers": [{"R": 3, "S": 1, "D": 2}, {"R": 4, "S": 4, "D": 1, "shared": false}]}"#)
            .unwrap();
        assert!(spec.layers()[0].shared);
        assert!(!spec.layers()[1].shared);
        assert_eq!(parse_arch(&arch_to_string(&spec)).unwrap(), spec);
    }

    #[test]
    fn arch_rejects_bad_documents() {
        let unknown = parse_arch(r#"{"M": 2, "H": 4, "layers": [{"R": 3, "S": 1, "D": 2, "pad": 1}]}"#);
        assert!(unknown.unwrap_err().to_string().contains("pad"));
        assert!(parse_arch(r#"{"M": 2, "H": 4, "layers": []}"#).is_err());
        let err = parse_arch("{\"M\": 2,\n \"H\": x}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn params_round_trip_in_both_modes() {
        let cfg = ConstructionConfig::new(4, 2, 3, 2, 2, PartitionKind::LeftRight).unwrap();
        let cfg = cfg.with_alpha(Rational::from_ratio(3, 4)).unwrap();
        let params = claim3_params(&cfg, &claim3_spec(&cfg).unwrap()).unwrap();
        let doc = params_to_json(&params);
        assert_eq!(doc["mode"], "exact");
        assert_eq!(params_from_json::<Rational>(&doc).unwrap(), params);
        let floats = params.to_f64();
        let doc = params_to_json(&floats);
        assert_eq!(params_from_json::<f64>(&doc).unwrap(), floats);
        // exact documents also load in float mode
        assert_eq!(params_from_json::<f64>(&params_to_json(&params)).unwrap(), floats);
    }

    #[test]
    fn params_errors_name_the_location() {
        let doc = json!({"layers": [{"spec": {"R": 1, "S": 1, "D": 1}, "in_channels": 1, "out_size": 1,
            "filters": [{"weights": ["1/0"], "biases": ["1"]}]}]});
        let err = params_from_json::<Rational>(&doc).unwrap_err().to_string();
        assert!(err.contains("layers[0].filters[0].weights[0]"), "{err}");
    }
}
