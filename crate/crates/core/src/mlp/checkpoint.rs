//! JSON checkpoints:
//!
//! ```text
//! {"activation": "relu",
//!  "layers": [{"in": 4, "out": 8, "weights": [[..], ..], "bias": [..]}, ..],
//!  "frame": {"input_center": [[..]], "output_center": [[..]], "scale": 0.01}}
//! ```
//!
//! `frame` is optional. Floats are written in shortest round-trip form, so a
//! save/load cycle is bit-exact.

use std::path::Path;

use serde_json::{json, Map, Value};

use super::{Frame, Layer, MlpModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub fn to_checkpoint_json(model: &MlpModel) -> Value {
    let layers: Vec<Value> = model
        .layers
        .iter()
        .map(|l| {
            let rows: Vec<&[f64]> = (0..l.out_dim).map(|r| l.row(r)).collect();
            json!({"in": l.in_dim, "out": l.out_dim, "weights": rows, "bias": l.bias})
        })
        .collect();
    let mut root = Map::new();
    root.insert("activation".into(), json!("relu"));
    root.insert("layers".into(), Value::Array(layers));
    if let Some(f) = &model.frame {
        root.insert("frame".into(), serde_json::to_value(f).expect("frame serializes"));
    }
    Value::Object(root)
}

pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&to_checkpoint_json(model)).expect("json serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MlpModel> {
    let text = std::fs::read_to_string(path)?;
    parse_checkpoint(&text)
}

pub fn parse_checkpoint(text: &str) -> Result<MlpModel> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::schema("$", e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| Error::schema("$", "expected object"))?;
    match obj.get("activation") {
        Some(Value::String(s)) if s == "relu" => {}
        Some(_) => return Err(Error::schema("activation", "only \"relu\" is supported")),
        None => return Err(Error::schema("activation", "missing")),
    }
    let layers = obj
        .get("layers")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::schema("layers", "expected array"))?;
    let layers = layers
        .iter()
        .enumerate()
        .map(|(i, v)| parse_layer(v, &format!("layers[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let frame = match obj.get("frame") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_frame(v)?),
    };
    MlpModel::new(layers, frame)
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "missing"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::schema(path, "expected non-negative integer"))
}

fn as_f64_vec(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| Error::schema(path, "expected array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .ok_or_else(|| Error::schema(format!("{path}[{i}]"), "expected number"))
        })
        .collect()
}

fn as_rows(v: &Value, rows: usize, cols: usize, path: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected array of rows"))?;
    if arr.len() != rows {
        return Err(Error::schema(path, format!("expected {rows} rows, got {}", arr.len())));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for (r, row) in arr.iter().enumerate() {
        let p = format!("{path}[{r}]");
        let vals = as_f64_vec(row, &p)?;
        if vals.len() != cols {
            return Err(Error::schema(p, format!("expected {cols} entries, got {}", vals.len())));
        }
        out.extend(vals);
    }
    Ok(out)
}

fn parse_layer(v: &Value, path: &str) -> Result<Layer> {
    let in_dim = as_usize(field(v, "in", path)?, &format!("{path}.in"))?;
    let out_dim = as_usize(field(v, "out", path)?, &format!("{path}.out"))?;
    let weights = as_rows(field(v, "weights", path)?, out_dim, in_dim, &format!("{path}.weights"))?;
    let bias = as_f64_vec(field(v, "bias", path)?, &format!("{path}.bias"))?;
    if bias.len() != out_dim {
        return Err(Error::schema(
            format!("{path}.bias"),
            format!("expected {out_dim} entries, got {}", bias.len()),
        ));
    }
    Ok(Layer {
        in_dim,
        out_dim,
        weights,
        bias,
    })
}

fn parse_square(v: &Value, path: &str) -> Result<Matrix> {
    let n = v
        .as_array()
        .map(Vec::len)
        .ok_or_else(|| Error::schema(path, "expected array of rows"))?;
    Matrix::from_flat(n, as_rows(v, n, n, path)?).map_err(|e| Error::schema(path, e.to_string()))
}

fn parse_frame(v: &Value) -> Result<Frame> {
    let ic = parse_square(field(v, "input_center", "frame")?, "frame.input_center")?;
    let oc = parse_square(field(v, "output_center", "frame")?, "frame.output_center")?;
    let scale = field(v, "scale", "frame")?
        .as_f64()
        .ok_or_else(|| Error::schema("frame.scale", "expected number"))?;
    Frame::new(ic, oc, scale).map_err(|e| Error::schema("frame", e.to_string()))
}

/// The reference 4-8-4 inversion network for the box of half-width 0.01
/// around `[[2,2],[2,3]]`, in its normalized coordinate frame.
pub fn reference_model() -> MlpModel {
    parse_checkpoint(REFERENCE_CHECKPOINT).expect("bundled checkpoint is valid")
}

pub const REFERENCE_CHECKPOINT: &str = include_str!("../../assets/reference_4x8x4.json");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = MlpModel::init(&[4, 7, 3, 4], None, &mut stream_rng(3, 0)).unwrap();
        let back = parse_checkpoint(&to_checkpoint_json(&m).to_string()).unwrap();
        assert_eq!(back, m);
        let framed = reference_model();
        assert_eq!(
            parse_checkpoint(&to_checkpoint_json(&framed).to_string()).unwrap(),
            framed
        );
    }

    #[test]
    fn schema_errors_carry_paths() {
        let bad = r#"{"activation":"relu","layers":[{"in":2,"out":2,"weights":[[1,2],[3,"x"]],"bias":[0,0]}]}"#;
        match parse_checkpoint(bad) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "layers[0].weights[1][1]"),
            other => panic!("{other:?}"),
        }
        let chain = r#"{"activation":"relu","layers":[
            {"in":2,"out":3,"weights":[[1,2],[3,4],[5,6]],"bias":[0,0,0]},
            {"in":2,"out":2,"weights":[[1,2],[3,4]],"bias":[0,0]}]}"#;
        match parse_checkpoint(chain) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "layers[1].in"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_checkpoint("{}"), Err(Error::Schema { .. })));
        assert!(matches!(parse_checkpoint("not json"), Err(Error::Schema { .. })));
    }
}
