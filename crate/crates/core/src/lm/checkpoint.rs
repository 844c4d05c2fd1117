use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::ModelShape;
use super::train::LanguageModel;
use super::vocab::Vocab;
use crate::abstraction::Level;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "langrep-lm";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    version: u32,
    level: Level,
    shape: ModelShape,
    vocab: Vec<String>,
    languages: Vec<String>,
    config: TrainConfig,
    params: Vec<f64>,
}

/// Serializes a model to JSON. Floats round-trip exactly.
pub fn save_model(model: &LanguageModel) -> Result<String> {
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        level: model.level,
        shape: model.shape(),
        vocab: model.vocab.symbols().to_vec(),
        languages: model.languages.clone(),
        config: model.config.clone(),
        params: model.params.clone(),
    };
    serde_json::to_string(&ck).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn load_model(text: &str) -> Result<LanguageModel> {
    let ck: Checkpoint =
        serde_json::from_str(text).map_err(|e| Error::Serialization(format!("model checkpoint: {e}")))?;
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported checkpoint {} v{}",
            ck.format, ck.version
        )));
    }
    let vocab = Vocab::from_full_list(ck.vocab)?;
    LanguageModel::from_parts(vocab, ck.languages, ck.level, ck.config, ck.shape, ck.params)
}

/// Language vectors as CSV `lang,v1,...,vk`.
pub fn vectors_csv(model: &LanguageModel) -> String {
    let k = model.shape().lang_dim;
    let mut out = String::from("lang");
    for i in 1..=k {
        out.push_str(&format!(",v{i}"));
    }
    out.push('\n');
    for (lang, v) in model.languages.iter().zip(model.language_vectors()) {
        out.push_str(lang);
        for x in v {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    out
}

/// Parses [`vectors_csv`] output into `(languages, vectors)`.
pub fn parse_vectors_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty vectors file"))?;
    let width = header.split(',').count();
    if width < 2 || !header.starts_with("lang,") {
        return Err(Error::parse(1, "expected header lang,v1,...,vk"));
    }
    let mut langs = Vec::new();
    let mut vecs = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::parse(i + 1, format!("expected {width} fields, found {}", fields.len())));
        }
        let v = fields[1..]
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse_at(i + 1, c + 2, format!("not a number: {f}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        langs.push(fields[0].to_string());
        vecs.push(v);
    }
    Ok((langs, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::SymbolSequence;

    fn model() -> LanguageModel {
        let seqs = vec![
            SymbolSequence::new("a", Level::Pos, vec!["N".into(), "V".into()]).unwrap(),
            SymbolSequence::new("b", Level::Pos, vec!["V".into()]).unwrap(),
        ];
        let cfg = TrainConfig { lang_dim: 2, symbol_dim: 3, hidden_dim: 4, ..TrainConfig::default() };
        LanguageModel::for_corpus(&seqs, cfg).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = model();
        let back = load_model(&save_model(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_truncated_params() {
        let m = model();
        let mut v: serde_json::Value = serde_json::from_str(&save_model(&m).unwrap()).unwrap();
        v["params"].as_array_mut().unwrap().pop();
        assert!(load_model(&v.to_string()).is_err());
    }

    #[test]
    fn vectors_round_trip() {
        let m = model();
        let (langs, vecs) = parse_vectors_csv(&vectors_csv(&m)).unwrap();
        assert_eq!(langs, m.languages());
        assert_eq!(vecs, m.language_vectors());
    }
}
