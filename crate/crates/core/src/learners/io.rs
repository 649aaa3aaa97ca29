use std::fmt::Write as _;
use std::path::Path;

use super::{LearnError, LinearModel, MlpModel, Model};

const MAGIC: &str = "xcorpus-model v1";

fn push_array(out: &mut String, name: &str, values: &[f64]) {
    let _ = write!(out, "{name} {}", values.len());
    for v in values {
        let _ = write!(out, " {v:.16e}");
    }
    out.push('\n');
}

/// Flat text form. Floats use 17 significant digits, so parsing restores
/// every parameter bit for bit.
pub fn serialize_model(model: &Model, descriptor: &str) -> String {
    let mut out = format!("{MAGIC}\ndescriptor {descriptor}\n");
    match model {
        Model::Logistic(m) => {
            out.push_str("family logreg\n");
            let _ = writeln!(out, "l2 {:.16e}", m.l2);
            push_array(&mut out, "weights", &m.weights);
            push_array(&mut out, "bias", &[m.bias]);
        }
        Model::Mlp(m) => {
            out.push_str("family mlp\n");
            let _ = writeln!(out, "l2 {:.16e}", m.l2);
            let _ = writeln!(out, "input_dim {}", m.input_dim);
            let _ = writeln!(out, "hidden {}", m.hidden);
            let _ = writeln!(out, "seed {}", m.seed);
            push_array(&mut out, "w1", &m.w1);
            push_array(&mut out, "b1", &m.b1);
            push_array(&mut out, "w2", &m.w2);
            push_array(&mut out, "b2", &[m.b2]);
        }
    }
    out
}

struct Fields<'a> {
    lines: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Result<&'a str, LearnError> {
        self.lines
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| LearnError::ModelFormat(format!("missing field {key}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, LearnError> {
        self.get(key)?.trim().parse().map_err(|_| LearnError::ModelFormat(format!("bad value for {key}")))
    }

    fn array(&self, key: &str) -> Result<Vec<f64>, LearnError> {
        let mut it = self.get(key)?.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| LearnError::ModelFormat(format!("bad length for {key}")))?;
        let values: Vec<f64> = it
            .map(|s| s.parse().map_err(|_| LearnError::ModelFormat(format!("bad number in {key}"))))
            .collect::<Result<_, _>>()?;
        if values.len() != n {
            return Err(LearnError::ModelFormat(format!("{key}: expected {n} values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NotFinite(key.to_string()));
        }
        Ok(values)
    }
}

/// Inverse of [`serialize_model`]; returns the model and its descriptor name.
pub fn parse_model(text: &str) -> Result<(Model, String), LearnError> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(LearnError::ModelFormat("missing header".into()));
    }
    let fields = Fields { lines: lines.filter_map(|l| l.split_once(' ')).collect() };
    let descriptor = fields.get("descriptor")?.to_string();
    let l2: f64 = fields.parse("l2")?;
    let model = match fields.get("family")? {
        "logreg" => {
            let bias = fields.array("bias")?;
            if bias.len() != 1 {
                return Err(LearnError::ModelFormat("bias must hold one value".into()));
            }
            Model::Logistic(LinearModel { weights: fields.array("weights")?, bias: bias[0], l2 })
        }
        "mlp" => {
            let input_dim: usize = fields.parse("input_dim")?;
            let hidden: usize = fields.parse("hidden")?;
            let m = MlpModel {
                input_dim,
                hidden,
                w1: fields.array("w1")?,
                b1: fields.array("b1")?,
                w2: fields.array("w2")?,
                b2: *fields.array("b2")?.first().ok_or_else(|| LearnError::ModelFormat("empty b2".into()))?,
                l2,
                seed: fields.parse("seed")?,
            };
            if hidden == 0 || m.w1.len() != hidden * input_dim || m.b1.len() != hidden || m.w2.len() != hidden {
                return Err(LearnError::ModelFormat("mlp shapes disagree".into()));
            }
            Model::Mlp(m)
        }
        other => return Err(LearnError::ModelFormat(format!("unknown family {other}"))),
    };
    Ok((model, descriptor))
}

pub fn save_model(model: &Model, descriptor: &str, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, serialize_model(model, descriptor))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Model, String), LearnError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| LearnError::ModelFormat(format!("{}: {e}", path.as_ref().display())))?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_round_trip_is_exact() {
        let m = Model::Logistic(LinearModel { weights: vec![0.1, -1.0 / 3.0, 1e-300, 12345.678901234567], bias: std::f64::consts::PI, l2: 1e-3 });
        let (back, d) = parse_model(&serialize_model(&m, "compact")).unwrap();
        assert_eq!(back, m);
        assert_eq!(d, "compact");
    }

    #[test]
    fn mlp_round_trip_via_file() {
        let m = Model::Mlp(MlpModel::init(5, 3, 1e-4, 42));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        save_model(&m, "brute", &path).unwrap();
        assert_eq!(load_model(&path).unwrap().0, m);
    }

    #[test]
    fn corrupt_text_rejected() {
        assert!(parse_model("hello").is_err());
        let m = Model::Logistic(LinearModel { weights: vec![1.0, 2.0], bias: 0.0, l2: 0.0 });
        let text = serialize_model(&m, "x").replace("weights 2", "weights 3");
        assert!(matches!(parse_model(&text), Err(LearnError::ModelFormat(_))));
    }
}
