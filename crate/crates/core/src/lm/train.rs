use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::model::{
    check_finite, final_distribution, sequence_loss, Layout, ModelShape, ParamBlock, Workspace,
};
use super::vocab::{Vocab, EOS_ID};
use crate::abstraction::{Level, SymbolSequence};
use crate::distances::cosine_distance_matrix;
use crate::error::{Error, Result};
use crate::matrix::DistanceMatrix;

/// Smallest denominator used when turning gradient differences into
/// relative errors, so coordinates with vanishing gradients do not blow up.
pub const GRAD_CHECK_FLOOR: f64 = 1e-5;

/// Coordinates sampled by [`grad_check`].
pub const GRAD_CHECK_COORDINATES: usize = 100;

/// One training window: a language index and aligned input/target ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub lang: usize,
    pub inputs: Vec<usize>,
    pub targets: Vec<usize>,
}

/// A multilingual LSTM language model with one learned vector per language.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageModel {
    pub(crate) layout: Layout,
    pub(crate) params: Vec<f64>,
    pub(crate) vocab: Vocab,
    pub(crate) languages: Vec<String>,
    pub(crate) level: Level,
    pub(crate) config: TrainConfig,
}

/// Languages in order of first appearance.
fn languages_of(sequences: &[SymbolSequence]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in sequences {
        if !out.contains(&s.language) {
            out.push(s.language.clone());
        }
    }
    out
}

impl LanguageModel {
    /// Freshly initialized model for the given inventory.
    pub fn new(vocab: Vocab, languages: Vec<String>, level: Level, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if languages.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "training needs at least two languages, found {}",
                languages.len()
            )));
        }
        let shape = ModelShape {
            vocab: vocab.len(),
            languages: languages.len(),
            symbol_dim: config.symbol_dim,
            lang_dim: config.lang_dim,
            hidden: config.hidden_dim,
            lang_all_layers: config.lang_all_layers,
        };
        let layout = Layout::new(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = layout.init(&mut rng, config.lang_init_std);
        Ok(LanguageModel { layout, params, vocab, languages, level, config })
    }

    /// Model whose vocabulary and language inventory are read off `sequences`.
    pub fn for_corpus(sequences: &[SymbolSequence], config: TrainConfig) -> Result<Self> {
        let first = sequences
            .first()
            .ok_or_else(|| Error::InvalidArgument("no training sequences".into()))?;
        let level = first.level;
        if let Some(s) = sequences.iter().find(|s| s.level != level) {
            return Err(Error::InvalidArgument(format!(
                "mixed abstraction levels: {level} and {}",
                s.level
            )));
        }
        let min_count = if level == Level::Raw { config.raw_min_count.max(1) } else { 1 };
        let vocab = Vocab::build(sequences, min_count);
        Self::new(vocab, languages_of(sequences), level, config)
    }

    pub(crate) fn from_parts(
        vocab: Vocab,
        languages: Vec<String>,
        level: Level,
        config: TrainConfig,
        shape: ModelShape,
        params: Vec<f64>,
    ) -> Result<Self> {
        let layout = Layout::new(shape);
        if shape.vocab != vocab.len() || shape.languages != languages.len() {
            return Err(Error::Validation("model shape disagrees with vocabulary or languages".into()));
        }
        if params.len() != layout.len() {
            return Err(Error::Validation(format!(
                "expected {} parameters, found {}",
                layout.len(),
                params.len()
            )));
        }
        check_finite(&params)?;
        Ok(LanguageModel { layout, params, vocab, languages, level, config })
    }

    pub fn shape(&self) -> ModelShape {
        self.layout.shape
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn block(&self, block: ParamBlock) -> &[f64] {
        &self.params[self.layout.range(block)]
    }

    pub fn block_mut(&mut self, block: ParamBlock) -> &mut [f64] {
        let r = self.layout.range(block);
        &mut self.params[r]
    }

    pub fn language_index(&self, language: &str) -> Option<usize> {
        self.languages.iter().position(|l| l == language)
    }

    pub fn language_vector(&self, language: &str) -> Option<&[f64]> {
        let i = self.language_index(language)?;
        let k = self.layout.shape.lang_dim;
        Some(&self.block(ParamBlock::LanguageEmbedding)[i * k..(i + 1) * k])
    }

    /// Language vectors in model order.
    pub fn language_vectors(&self) -> Vec<Vec<f64>> {
        let k = self.layout.shape.lang_dim;
        self.block(ParamBlock::LanguageEmbedding)
            .chunks_exact(k)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Frames each sequence as inputs `[</s>, s...]` and targets
    /// `[s..., </s>]`, cut into windows of at most `seq_len` steps.
    pub fn encode(&self, sequences: &[SymbolSequence]) -> Result<Vec<Example>> {
        let lang_ids: HashMap<&str, usize> =
            self.languages.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let window = self.config.seq_len;
        let mut out = Vec::new();
        for s in sequences {
            if s.level != self.level {
                return Err(Error::InvalidArgument(format!(
                    "sequence at level {} given to a {} model",
                    s.level, self.level
                )));
            }
            let lang = *lang_ids
                .get(s.language.as_str())
                .ok_or_else(|| Error::InvalidArgument(format!("unknown language {}", s.language)))?;
            let ids: Vec<usize> = s.symbols().iter().map(|x| self.vocab.id(x)).collect();
            let mut inputs = Vec::with_capacity(ids.len() + 1);
            inputs.push(EOS_ID);
            inputs.extend_from_slice(&ids);
            let mut targets = ids;
            targets.push(EOS_ID);
            for (i, t) in inputs.chunks(window).zip(targets.chunks(window)) {
                out.push(Example { lang, inputs: i.to_vec(), targets: t.to_vec() });
            }
        }
        Ok(out)
    }

    /// Mean per-token negative log-likelihood.
    pub fn mean_loss(&self, examples: &[Example]) -> f64 {
        let mut ws = Workspace::new();
        let tokens: usize = examples.iter().map(|e| e.targets.len()).sum();
        let total: f64 = examples
            .iter()
            .map(|e| sequence_loss(&self.layout, &self.params, e.lang, &e.inputs, &e.targets, &mut ws, None))
            .sum();
        total / tokens.max(1) as f64
    }

    /// Mean per-token loss and its gradient.
    pub fn loss_and_gradient(&self, examples: &[Example]) -> (f64, Vec<f64>) {
        let mut ws = Workspace::new();
        let mut grad = vec![0.0; self.layout.len()];
        let loss = self.accumulate(examples.iter(), &mut ws, &mut grad);
        (loss, grad)
    }

    fn accumulate<'a>(
        &self,
        examples: impl Iterator<Item = &'a Example> + Clone,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> f64 {
        let tokens: usize = examples.clone().map(|e| e.targets.len()).sum();
        let scale = 1.0 / tokens.max(1) as f64;
        let mut loss = 0.0;
        for e in examples {
            loss += sequence_loss(
                &self.layout,
                &self.params,
                e.lang,
                &e.inputs,
                &e.targets,
                ws,
                Some((grad, scale)),
            );
        }
        loss * scale
    }

    /// Next-symbol distribution for `language` after `prefix`, starting
    /// from a zero state with `</s>` as the first input.
    pub fn next_distribution(&self, language: &str, prefix: &[String]) -> Result<Vec<f64>> {
        let lang = self
            .language_index(language)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown language {language}")))?;
        let mut inputs = vec![EOS_ID];
        inputs.extend(prefix.iter().map(|s| self.vocab.id(s)));
        let mut ws = Workspace::new();
        Ok(final_distribution(&self.layout, &self.params, lang, &inputs, &mut ws))
    }
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: LanguageModel,
    /// Mean per-token loss before training and after every epoch.
    pub loss_curve: Vec<f64>,
}

/// Trains a fresh model on `sequences` with mini-batch SGD, global-norm
/// clipping and a seeded per-epoch shuffle.
pub fn train(sequences: &[SymbolSequence], config: &TrainConfig) -> Result<TrainedModel> {
    let model = LanguageModel::for_corpus(sequences, config.clone())?;
    train_model(model, sequences)
}

/// Continues training `model` on `sequences` for `config.epochs` epochs.
pub fn train_model(mut model: LanguageModel, sequences: &[SymbolSequence]) -> Result<TrainedModel> {
    let examples = model.encode(sequences)?;
    if examples.is_empty() {
        return Err(Error::InvalidArgument("no training sequences".into()));
    }
    let cfg = model.config.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut ws = Workspace::new();
    let mut grad = vec![0.0; model.layout.len()];
    let mut loss_curve = vec![model.mean_loss(&examples)];

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.accumulate(batch.iter().map(|&i| &examples[i]), &mut ws, &mut grad);
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::Numerical(format!("non-finite gradient in epoch {}", epoch + 1)));
            }
            let step = if norm > cfg.clip_norm {
                cfg.learning_rate * cfg.clip_norm / norm
            } else {
                cfg.learning_rate
            };
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= step * g;
            }
        }
        let loss = model.mean_loss(&examples);
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("loss became non-finite in epoch {}", epoch + 1)));
        }
        loss_curve.push(loss);
    }
    check_finite(&model.params)?;
    Ok(TrainedModel { model, loss_curve })
}

/// Largest relative error between analytic and central-difference
/// gradients of the mean loss over `GRAD_CHECK_COORDINATES` seeded
/// parameter coordinates.
pub fn grad_check(model: &LanguageModel, examples: &[Example], epsilon: f64, seed: u64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if examples.is_empty() {
        return Err(Error::InvalidArgument("gradient check needs at least one example".into()));
    }
    let (_, grad) = model.loss_and_gradient(examples);
    let n = model.params.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = index::sample(&mut rng, n, GRAD_CHECK_COORDINATES.min(n));
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in coords.iter() {
        let orig = model.params[i];
        probe.params[i] = orig + epsilon;
        let up = probe.mean_loss(examples);
        probe.params[i] = orig - epsilon;
        let down = probe.mean_loss(examples);
        probe.params[i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let denom = grad[i].abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        worst = worst.max((numeric - grad[i]).abs() / denom);
    }
    Ok(worst)
}

/// Cosine distances between the learned language vectors.
pub fn embedding_distance(model: &LanguageModel) -> Result<DistanceMatrix> {
    cosine_distance_matrix(
        &format!("embedding_{}", model.level),
        model.languages.clone(),
        &model.language_vectors(),
    )
}
