use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};

use langrep::abstraction::{
    abstract_bracketed, abstract_treebank, lexicon_from, AbstractionOptions, Level, SymbolSequence,
};
use langrep::causal::{export_dot, ic_star, CiTestConfig, SampleTable, PAIR_DEPENDENCE_CAVEAT};
use langrep::clustering::{
    baseline_csv, random_tree_baseline, tree_distance, ward_cluster_vectors, TreeDistanceMode,
};
use langrep::corpus::{
    emit_newick, parse_bracketed, parse_conllu, parse_coordinates, parse_newick, BracketTree,
    CorpusManifest, Treebank,
};
use langrep::distances::{
    cosine_distance_matrix, genetic_distance, geo_distance, struct_vectors_tsv, structural_distance,
    structural_vector,
};
use langrep::lm::{parse_vectors_csv, save_model, train, vectors_csv};
use langrep::matrix::{format_sig, DistanceMatrix};
use langrep::stats::correlation_table;
use langrep::synthetic::{SyntheticConfig, SyntheticCorpus};
use langrep::tree::DendroTree;

use crate::failure::{ConfigError, MissingArtifact};
use crate::meta::record_stage;
use crate::LevelArgs;

pub struct Context {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

/// The loaded manifest plus the effective seed.
struct Run<'a> {
    ctx: &'a Context,
    manifest: CorpusManifest,
    manifest_toml: String,
    seed: u64,
}

impl<'a> Run<'a> {
    fn load(ctx: &'a Context) -> Result<Self> {
        let path = ctx
            .config
            .as_ref()
            .ok_or_else(|| ConfigError("--config <manifest.toml> is required".into()))?;
        if !path.exists() {
            return Err(ConfigError(format!("manifest {} does not exist", path.display())).into());
        }
        let manifest =
            CorpusManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))?;
        let seed = ctx.seed.unwrap_or(manifest.seed);
        let manifest_toml = manifest.to_toml()?;
        Ok(Run { ctx, manifest, manifest_toml, seed })
    }

    fn out(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.ctx.out.join(rel)
    }

    fn record(&self, stage: &str, args: Vec<String>) -> Result<()> {
        let config = self
            .ctx
            .config
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        record_stage(&self.ctx.out, &config, self.seed, stage, &self.manifest_toml, args)
    }

    fn treebanks(&self) -> Result<Vec<Treebank>> {
        let mut out = Vec::new();
        for lang in &self.manifest.languages {
            let Some(rel) = self.manifest.conllu.get(lang) else {
                continue;
            };
            let path = self.manifest.resolve(rel);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            out.push(parse_conllu(&text, lang).with_context(|| format!("parsing {}", path.display()))?);
        }
        Ok(out)
    }

    fn bracketed(&self) -> Result<BTreeMap<String, Vec<BracketTree>>> {
        let mut out = BTreeMap::new();
        for (lang, rel) in &self.manifest.bracketed {
            let path = self.manifest.resolve(rel);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let trees = parse_bracketed(&text).with_context(|| format!("parsing {}", path.display()))?;
            out.insert(lang.clone(), trees);
        }
        Ok(out)
    }

    fn gold_tree(&self) -> Result<DendroTree> {
        let rel = self
            .manifest
            .gold_tree
            .as_ref()
            .ok_or_else(|| ConfigError("manifest names no gold_tree".into()))?;
        let path = self.manifest.resolve(rel);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(parse_newick(&text).with_context(|| format!("parsing {}", path.display()))?)
    }

    /// Gold tree restricted to the manifest languages it covers; the
    /// uncovered languages are reported.
    fn restricted_gold(&self) -> Result<DendroTree> {
        let gold = self.gold_tree()?;
        let leaves = gold.leaf_set();
        let keep: BTreeSet<String> = self
            .manifest
            .languages
            .iter()
            .filter(|l| leaves.contains(*l))
            .cloned()
            .collect();
        let excluded: Vec<&str> = self
            .manifest
            .languages
            .iter()
            .filter(|l| !keep.contains(*l))
            .map(String::as_str)
            .collect();
        if !excluded.is_empty() {
            eprintln!("note: gold tree lacks {}; excluded from genetic comparisons", excluded.join(", "));
        }
        if keep.len() < 2 {
            return Err(ConfigError("gold tree covers fewer than two manifest languages".into()).into());
        }
        Ok(gold.restrict(&keep)?)
    }

    /// Requested levels, or every level the inputs support.
    fn levels(&self, args: &LevelArgs, for_abstract: bool) -> Result<Vec<Level>> {
        if args.levels.is_empty() {
            let has_brackets = !self.manifest.bracketed.is_empty();
            let mut out: Vec<Level> = Level::ALL
                .into_iter()
                .filter(|l| *l != Level::Phrase || has_brackets)
                .collect();
            if !for_abstract {
                out.retain(|l| self.out(abstract_dir(*l)).exists());
            }
            return Ok(out);
        }
        let out = parse_levels(args)?;
        for &level in &out {
            if level == Level::Phrase && self.manifest.bracketed.is_empty() && for_abstract {
                return Err(ConfigError(
                    "level phrase needs bracketed trees: add a [bracketed] table to the manifest \
                     mapping each language to a PTB-style file, or drop --level phrase"
                        .into(),
                )
                .into());
            }
        }
        Ok(out)
    }
}

fn parse_levels(args: &LevelArgs) -> Result<Vec<Level>> {
    let mut out = Vec::new();
    for name in &args.levels {
        let level: Level = name
            .parse()
            .map_err(|e: langrep::Error| ConfigError(e.to_string()))?;
        if !out.contains(&level) {
            out.push(level);
        }
    }
    Ok(out)
}

fn abstract_dir(level: Level) -> PathBuf {
    PathBuf::from("abstract").join(level.name())
}

fn train_dir(level: Level) -> PathBuf {
    PathBuf::from("train").join(level.name())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn require(path: &Path, hint: &str) -> Result<String> {
    if !path.exists() {
        return Err(MissingArtifact { path: path.to_path_buf(), hint: hint.to_string() }.into());
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn level_args(levels: &[Level]) -> Vec<String> {
    levels.iter().map(|l| format!("--level={l}")).collect()
}

pub fn abstract_cmd(ctx: &Context, args: &LevelArgs) -> Result<()> {
    let run = Run::load(ctx)?;
    let levels = run.levels(args, true)?;
    let treebanks = run.treebanks()?;
    let bracketed = if levels.contains(&Level::Phrase) { run.bracketed()? } else { BTreeMap::new() };
    let mut opts = AbstractionOptions { func_upos: run.manifest.func_upos_set(), ..Default::default() };
    for level in &levels {
        let dir = run.out(abstract_dir(*level));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        let mut written = 0;
        for lang in &run.manifest.languages {
            let seqs: Vec<SymbolSequence> = if *level == Level::Phrase {
                let Some(trees) = bracketed.get(lang) else {
                    continue;
                };
                opts.lexicon = treebanks
                    .iter()
                    .find(|t| &t.language == lang)
                    .map(lexicon_from)
                    .unwrap_or_default();
                abstract_bracketed(lang, trees, &opts)?
            } else {
                let Some(tb) = treebanks.iter().find(|t| &t.language == lang) else {
                    continue;
                };
                abstract_treebank(tb, *level, &opts)?
            };
            let text: String = seqs.iter().map(|s| format!("{}\n", s.symbols().join(" "))).collect();
            write(&dir.join(format!("{lang}.txt")), &text)?;
            written += 1;
        }
        eprintln!("abstract: {level} for {written} languages");
    }
    run.record("abstract", level_args(&levels))
}

fn read_sequences(run: &Run, level: Level) -> Result<Vec<SymbolSequence>> {
    let dir = run.out(abstract_dir(level));
    if !dir.exists() {
        return Err(MissingArtifact {
            path: dir,
            hint: format!("run `langrep abstract --level {level}` first"),
        }
        .into());
    }
    let mut seqs = Vec::new();
    for lang in &run.manifest.languages {
        let path = dir.join(format!("{lang}.txt"));
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let symbols = line.split_whitespace().map(String::from).collect();
            seqs.push(SymbolSequence::new(lang.clone(), level, symbols)?);
        }
    }
    Ok(seqs)
}

pub fn train_cmd(ctx: &Context, args: &LevelArgs) -> Result<()> {
    let run = Run::load(ctx)?;
    let levels = run.levels(args, false)?;
    if levels.is_empty() {
        return Err(MissingArtifact {
            path: run.out("abstract"),
            hint: "run `langrep abstract` first".into(),
        }
        .into());
    }
    let mut cfg = run.manifest.train.clone();
    cfg.seed = run.seed;
    for level in &levels {
        let seqs = read_sequences(&run, *level)?;
        let trained = train(&seqs, &cfg).with_context(|| format!("training the {level} model"))?;
        let dir = run.out(train_dir(*level));
        write(&dir.join("model.json"), &save_model(&trained.model)?)?;
        write(&dir.join("vectors.csv"), &vectors_csv(&trained.model))?;
        let mut loss = String::from("epoch,loss\n");
        for (i, l) in trained.loss_curve.iter().enumerate() {
            loss.push_str(&format!("{i},{}\n", format_sig(*l, 9)));
        }
        write(&dir.join("loss.csv"), &loss)?;
        eprintln!(
            "train: {level} loss {} -> {}",
            format_sig(trained.loss_curve[0], 4),
            format_sig(*trained.loss_curve.last().expect("non-empty"), 4)
        );
    }
    run.record("train", level_args(&levels))
}

fn load_vectors(run: &Run, level: Level) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = run.out(train_dir(level)).join("vectors.csv");
    let text = require(&path, &format!("run `langrep train --level {level}` first"))?;
    Ok(parse_vectors_csv(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn trained_levels(run: &Run) -> Vec<Level> {
    Level::ALL
        .into_iter()
        .filter(|l| run.out(train_dir(*l)).join("vectors.csv").exists())
        .collect()
}

pub fn distances_cmd(ctx: &Context) -> Result<()> {
    let run = Run::load(ctx)?;
    let dir = run.out("distances");
    let langs = run.manifest.languages.clone();

    let gold = run.restricted_gold()?;
    let gold_langs: Vec<String> = langs.iter().filter(|l| gold.leaf_set().contains(*l)).cloned().collect();
    let genetic = genetic_distance(&gold, &gold_langs)?;
    write(&dir.join("genetic.csv"), &genetic.to_csv())?;

    if let Some(rel) = &run.manifest.coordinates {
        let path = run.manifest.resolve(rel);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let table = parse_coordinates(&text).with_context(|| format!("parsing {}", path.display()))?;
        run.manifest.check_coverage(
            "coordinates",
            table.iter().map(|(l, _)| l),
            &run.manifest.missing.coordinates,
        )?;
        let geo_langs: Vec<String> = langs.iter().filter(|l| table.get(l).is_some()).cloned().collect();
        write(&dir.join("geo.csv"), &geo_distance(&table, &geo_langs)?.to_csv())?;
    }

    let vectors = run
        .treebanks()?
        .iter()
        .map(structural_vector)
        .collect::<langrep::Result<Vec<_>>>()?;
    write(&dir.join("structural.csv"), &structural_distance(&vectors)?.to_csv())?;
    write(&dir.join("structural.tsv"), &struct_vectors_tsv(&vectors))?;

    let levels = trained_levels(&run);
    if levels.is_empty() {
        eprintln!("note: no trained levels; embedding distances skipped");
    }
    for level in levels {
        let (l, v) = load_vectors(&run, level)?;
        let m = cosine_distance_matrix(level.name(), l, &v)?;
        write(&dir.join(format!("embedding_{level}.csv")), &m.to_csv())?;
    }
    run.record("distances", Vec::new())
}

pub fn cluster_cmd(ctx: &Context, args: &LevelArgs) -> Result<()> {
    let run = Run::load(ctx)?;
    let levels = if args.levels.is_empty() {
        let found = trained_levels(&run);
        if found.is_empty() {
            return Err(MissingArtifact {
                path: run.out(train_dir(Level::Pos)).join("vectors.csv"),
                hint: "no trained model found; run `langrep train` first".into(),
            }
            .into());
        }
        found
    } else {
        parse_levels(args)?
    };
    for level in &levels {
        let (langs, vecs) = load_vectors(&run, *level)?;
        let tree = ward_cluster_vectors(langs, &vecs)?;
        write(&run.out("cluster").join(format!("{level}.nwk")), &format!("{}\n", emit_newick(&tree)))?;
    }
    run.record("cluster", level_args(&levels))
}

pub fn tree_dist_cmd(ctx: &Context) -> Result<()> {
    let run = Run::load(ctx)?;
    let gold = run.restricted_gold()?;
    let mut out = String::from("level,raw,normalized\n");
    let mut any = false;
    for level in Level::ALL {
        let path = run.out("cluster").join(format!("{level}.nwk"));
        if !path.exists() {
            continue;
        }
        any = true;
        let tree = parse_newick(&fs::read_to_string(&path)?)?;
        let common: BTreeSet<String> = tree.leaf_set().intersection(&gold.leaf_set()).cloned().collect();
        if common.len() < 2 {
            return Err(ConfigError(format!("{} shares fewer than two leaves with the gold tree", path.display())).into());
        }
        let (g, t) = (gold.restrict(&common)?, tree.restrict(&common)?);
        out.push_str(&format!(
            "{level},{},{}\n",
            format_sig(tree_distance(&g, &t, TreeDistanceMode::Raw)?, 9),
            format_sig(tree_distance(&g, &t, TreeDistanceMode::Normalized)?, 9)
        ));
    }
    if !any {
        return Err(MissingArtifact {
            path: run.out("cluster"),
            hint: "run `langrep cluster` first".into(),
        }
        .into());
    }
    write(&run.out("tree-dist").join("scores.csv"), &out)?;
    run.record("tree-dist", Vec::new())
}

pub fn baseline_cmd(ctx: &Context, trials: Option<usize>) -> Result<()> {
    let run = Run::load(ctx)?;
    let gold = run.restricted_gold()?;
    let trials = trials.unwrap_or(run.manifest.analysis.baseline_trials);
    let b = random_tree_baseline(&gold, trials, run.seed)?;
    let dir = run.out("baseline");
    write(&dir.join("samples.csv"), &baseline_csv(&b))?;
    write(
        &dir.join("summary.csv"),
        &format!(
            "trials,mean,std,p05\n{trials},{},{},{}\n",
            format_sig(b.mean, 9),
            format_sig(b.std, 9),
            format_sig(b.quantile(0.05), 9)
        ),
    )?;
    run.record("baseline", vec![format!("--trials={trials}")])
}

/// Distance matrices of the run, restricted to their common languages.
fn load_matrices(run: &Run) -> Result<Vec<DistanceMatrix>> {
    let dir = run.out("distances");
    let mut names = vec!["genetic".to_string(), "geo".into(), "structural".into()];
    names.extend(Level::ALL.iter().map(|l| format!("embedding_{l}")));
    let mut out = Vec::new();
    for name in names {
        let path = dir.join(format!("{name}.csv"));
        if !path.exists() {
            continue;
        }
        let label = name.strip_prefix("embedding_").unwrap_or(&name).to_string();
        let text = fs::read_to_string(&path)?;
        out.push(DistanceMatrix::from_csv(label, &text).with_context(|| format!("parsing {}", path.display()))?);
    }
    if out.is_empty() {
        return Err(MissingArtifact {
            path: dir.join("genetic.csv"),
            hint: "run `langrep distances` first".into(),
        }
        .into());
    }
    let common: Vec<String> = out[0]
        .languages()
        .iter()
        .filter(|l| out.iter().all(|m| m.index_of(l).is_some()))
        .cloned()
        .collect();
    let all: BTreeSet<&String> = out.iter().flat_map(|m| m.languages()).collect();
    if common.len() < all.len() {
        let dropped: Vec<&str> = all
            .iter()
            .filter(|l| !common.contains(l))
            .map(|l| l.as_str())
            .collect();
        eprintln!("note: {} not covered by every matrix; left out", dropped.join(", "));
    }
    if common.len() < 4 {
        return Err(ConfigError("fewer than four languages are shared by all distance matrices".into()).into());
    }
    out.iter().map(|m| Ok(m.select(&common)?)).collect()
}

pub fn correlate_cmd(ctx: &Context) -> Result<()> {
    let run = Run::load(ctx)?;
    let matrices = load_matrices(&run)?;
    let a = &run.manifest.analysis;
    let mantel = (a.mantel_permutations > 0).then_some((a.mantel_permutations, run.seed));
    let table = correlation_table(&matrices, a.alpha, mantel)?;
    let dir = run.out("correlate");
    write(&dir.join("correlations.csv"), &table.to_csv())?;
    write(&dir.join("heatmap.txt"), &table.heatmap())?;
    run.record("correlate", Vec::new())
}

pub fn causal_cmd(ctx: &Context) -> Result<()> {
    let run = Run::load(ctx)?;
    let matrices = load_matrices(&run)?;
    let a = &run.manifest.analysis;
    let mut chosen = Vec::new();
    for var in &a.causal_variables {
        match matrices.iter().find(|m| m.label() == var) {
            Some(m) => chosen.push(m.clone()),
            None => eprintln!("note: causal variable '{var}' has no distance matrix; skipped"),
        }
    }
    if chosen.len() < 2 {
        return Err(ConfigError("causal analysis needs at least two available variables".into()).into());
    }
    let table = SampleTable::from_matrices(&chosen)?;
    let cfg = CiTestConfig {
        alpha: a.alpha,
        max_condition_size: a.max_condition_size,
        ..CiTestConfig::default()
    };
    let graph = ic_star(&table, &cfg)?;
    let dir = run.out("causal");
    write(&dir.join("samples.csv"), &table.to_csv())?;
    write(&dir.join("graph.dot"), &format!("// {PAIR_DEPENDENCE_CAVEAT}\n{}", export_dot(&graph)))?;
    write(&dir.join("sepsets.csv"), &graph.sepsets_csv())?;
    run.record("causal", Vec::new())
}

pub fn pipeline_cmd(ctx: &Context, args: &LevelArgs) -> Result<()> {
    abstract_cmd(ctx, args)?;
    train_cmd(ctx, args)?;
    distances_cmd(ctx)?;
    cluster_cmd(ctx, args)?;
    tree_dist_cmd(ctx)?;
    baseline_cmd(ctx, None)?;
    correlate_cmd(ctx)?;
    causal_cmd(ctx)
}

pub fn synth_cmd(ctx: &Context, sentences: usize, epochs: usize) -> Result<()> {
    let seed = ctx.seed.unwrap_or(1);
    let corpus = SyntheticCorpus::generate(&SyntheticConfig {
        seed,
        sentences_per_language: sentences,
        ..Default::default()
    })?;
    let train = langrep::lm::TrainConfig { epochs, seed, ..langrep::lm::TrainConfig::desk() };
    corpus.write_fixture(&ctx.out, train, seed)?;
    eprintln!("synth: wrote {} languages to {}", corpus.languages.len(), ctx.out.display());
    Ok(())
}
