//! End-to-end acceptance criteria. Prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero when any criterion fails.
//!
//! Criterion 8 needs the Universal Dependencies 2.1 release unpacked
//! locally; point `LANGREP_UD21_DIR` at it to enable the check.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::Dag;
use langrep::abstraction::{abstract_bracketed, abstract_treebank, lexicon_from, AbstractionOptions};
use langrep::causal::{ic_star, CiTestConfig, SampleTable};
use langrep::clustering::{random_tree_baseline, tree_distance, ward_cluster, TreeDistanceMode};
use langrep::corpus::{parse_conllu, parse_newick, Treebank};
use langrep::distances::{
    cosine_distance, feature_census, genetic_distance, haversine_km, structural_distance, structural_vector,
};
use langrep::lm::{embedding_distance, grad_check, train, LanguageModel, TrainConfig};
use langrep::stats::{matrix_correlation, spearman};
use langrep::synthetic::{permuted_tree, SyntheticConfig, SyntheticCorpus};
use langrep::{Level, SymbolSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn exact_formulas() -> Outcome {
    let t0 = Instant::now();
    let gold = parse_newick("((A:1,B:1):1,C:2);").unwrap();
    let generated = parse_newick("((A:1,C:1):1,B:2);").unwrap();
    let hand = tree_distance(&gold, &generated, TreeDistanceMode::Raw).unwrap();
    let identical = [TreeDistanceMode::Raw, TreeDistanceMode::Normalized]
        .iter()
        .all(|&m| tree_distance(&gold, &gold, m).unwrap() == 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=10);
        let tree = common::random_tree(&mut rng, n);
        let pairs = tree.leaf_pair_distances();
        if common::path_oracle(&tree)
            .iter()
            .any(|((a, b), d)| (pairs.get(a, b).unwrap() - d).abs() > 1e-9)
        {
            mismatches += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        hand == 8.0 && identical && mismatches == 0 && secs < 10.0,
        format!("hand example {hand}, identical trees 0: {identical}, path-oracle mismatches {mismatches}/200, {secs:.2}s"),
    )
}

fn level_sequences(corpus: &SyntheticCorpus, languages: usize, level: Level) -> Vec<SymbolSequence> {
    let mut seqs = Vec::new();
    for lang in &corpus.languages[..languages] {
        let opts = AbstractionOptions { lexicon: lexicon_from(&lang.treebank), ..AbstractionOptions::default() };
        let s = if level == Level::Phrase {
            abstract_bracketed(&lang.code, &lang.bracketed, &opts).unwrap()
        } else {
            abstract_treebank(&lang.treebank, level, &opts).unwrap()
        };
        seqs.extend(s);
    }
    seqs
}

fn gradient_correctness() -> Outcome {
    let t0 = Instant::now();
    let corpus = SyntheticCorpus::generate(&SyntheticConfig { sentences_per_language: 4, ..SyntheticConfig::default() }).unwrap();
    let cfg = TrainConfig { lang_dim: 4, symbol_dim: 8, hidden_dim: 8, raw_min_count: 1, ..TrainConfig::desk() };
    let mut worst = Vec::new();
    for level in Level::ALL {
        let seqs = level_sequences(&corpus, 3, level);
        let model = LanguageModel::for_corpus(&seqs, cfg.clone()).unwrap();
        let examples = model.encode(&seqs).unwrap();
        worst.push((level, grad_check(&model, &examples, 1e-5, 7).unwrap()));
    }
    let secs = t0.elapsed().as_secs_f64();
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let detail: Vec<String> = worst.iter().map(|(l, e)| format!("{l} {e:.2e}")).collect();
    verdict(max < 1e-4 && secs < 60.0, format!("max relative error {} at eps 1e-5, {secs:.1}s", detail.join(", ")))
}

fn synthetic_recovery() -> Outcome {
    let t0 = Instant::now();
    let corpus = SyntheticCorpus::generate(&SyntheticConfig { sentences_per_language: 300, ..SyntheticConfig::default() }).unwrap();
    let seqs = level_sequences(&corpus, corpus.languages.len(), Level::Deprel);
    let cfg = TrainConfig { epochs: 20, ..TrainConfig::desk() };
    let model = train(&seqs, &cfg).unwrap().model;
    let train_secs = t0.elapsed().as_secs_f64();
    let tree = ward_cluster(&embedding_distance(&model).unwrap()).unwrap();
    let score = tree_distance(&corpus.gold, &tree, TreeDistanceMode::Normalized).unwrap();
    let baseline = random_tree_baseline(&corpus.gold, 1000, 1).unwrap();
    let p5 = baseline.quantile(0.05);
    verdict(
        score < p5 && train_secs <= 300.0,
        format!(
            "normalized distance {score:.4} vs random 5th percentile {p5:.4} (mean {:.4}), k=8 hidden=32, trained in {train_secs:.1}s",
            baseline.mean
        ),
    )
}

fn correlation_finding() -> Outcome {
    let t0 = Instant::now();
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 1..=20u64 {
        let corpus = SyntheticCorpus::generate(&SyntheticConfig { seed, sentences_per_language: 200, ..SyntheticConfig::default() }).unwrap();
        let seqs = level_sequences(&corpus, corpus.languages.len(), Level::Deprel);
        let model = train(&seqs, &TrainConfig { seed, epochs: 10, ..TrainConfig::desk() }).unwrap().model;
        let emb = embedding_distance(&model).unwrap();
        let vectors: Vec<_> = corpus.treebanks().iter().map(|tb| structural_vector(tb).unwrap()).collect();
        let structural = structural_distance(&vectors).unwrap();
        let decoupled = genetic_distance(&permuted_tree(&corpus.gold, seed + 100).unwrap(), &corpus.codes()).unwrap();
        let (rs, _) = matrix_correlation(&emb, &structural).unwrap();
        let (rg, _) = matrix_correlation(&emb, &decoupled).unwrap();
        if rs > rg {
            wins += 1;
        }
        rows.push(format!("{rs:.2}/{rg:.2}"));
    }
    verdict(
        wins >= 18,
        format!(
            "rho(emb,struct) > rho(emb,permuted genetic) in {wins}/20 runs [{}], {:.0}s",
            rows.join(" "),
            t0.elapsed().as_secs_f64()
        ),
    )
}

fn causal_oracle() -> Outcome {
    let cfg = CiTestConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, dag) in [
        ("chain", Dag::new(3, &[(0, 1), (1, 2)])),
        ("fork", Dag::new(3, &[(0, 1), (0, 2)])),
        ("collider", Dag::new(3, &[(0, 2), (1, 2)])),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let hits = (0..100)
            .filter(|_| {
                let g = ic_star(&dag.simulate(2000, &mut rng), &cfg).unwrap();
                common::skeleton_of(&g) == dag.oracle_skeleton() && g.colliders() == dag.v_structures()
            })
            .count();
        ok &= hits >= 95;
        parts.push(format!("{name} {hits}/100"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let runs = 1000;
    let empty = (0..runs)
        .filter(|_| {
            let cols = (0..3).map(|_| (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
            let t = SampleTable::new(vec!["x0".into(), "x1".into(), "x2".into()], cols).unwrap();
            ic_star(&t, &cfg).unwrap().edges().is_empty()
        })
        .count();
    ok &= empty * 100 >= runs * 99;
    parts.push(format!("independent empty {empty}/{runs}"));
    verdict(ok, parts.join(", "))
}

fn numeric_primitives() -> Outcome {
    let antipodal = haversine_km((0.0, 0.0), (0.0, 180.0));
    let poles = haversine_km((90.0, 0.0), (-90.0, 0.0));
    let (rho, _) = spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut agree = 0;
    let mut checked = 0;
    while checked < 50 {
        let sentences = (0..rng.gen_range(1..6)).map(|_| common::random_sentence(&mut rng)).collect();
        let tb = Treebank::new("xx", sentences).unwrap();
        let oracle = common::hand_count(&tb);
        if oracle.is_empty() {
            continue;
        }
        checked += 1;
        let v = structural_vector(&tb).unwrap();
        let got: BTreeMap<_, _> = v
            .features
            .iter()
            .map(|(k, f)| ((k.head_upos.clone(), k.dep_upos.clone(), k.deprel.clone(), k.dir.as_str()), *f))
            .collect();
        if got.len() == oracle.len() && oracle.iter().all(|(k, f)| (got[k] - f).abs() < 1e-15) {
            agree += 1;
        }
    }
    let same = cosine_distance(&[0.3, -1.2, 4.0], &[0.3, -1.2, 4.0]).unwrap();
    let orth = cosine_distance(&[1.0, 0.0, 2.0], &[0.0, 5.0, 0.0]).unwrap();
    verdict(
        (antipodal - 20015.1).abs() <= 0.1
            && (poles - 20015.1).abs() <= 0.1
            && rho == -0.5
            && agree == 50
            && same.abs() <= 1e-12
            && (orth - 1.0).abs() <= 1e-12,
        format!(
            "haversine {antipodal:.3}/{poles:.3} km, spearman {rho}, structural oracle {agree}/50, cosine {same:e}/{orth}"
        ),
    )
}

fn run_pipeline(out: &Path) -> Result<(), String> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic/manifest.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_langrep"))
        .args(["--config", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "pipeline"])
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&o.stderr).into_owned())
    }
}

fn report_files(dir: &Path, base: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            report_files(&path, base, out);
        } else if path.extension().is_some_and(|x| x == "csv" || x == "nwk" || x == "dot") {
            out.insert(path.strip_prefix(base).unwrap().to_path_buf(), fs::read(&path).unwrap());
        }
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if let Err(e) = run_pipeline(&a).and_then(|_| run_pipeline(&b)) {
        return Outcome::Fail(format!("pipeline failed: {e}"));
    }
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    report_files(&a, &a, &mut fa);
    report_files(&b, &b, &mut fb);
    let differing: Vec<String> = fa
        .keys()
        .chain(fb.keys())
        .filter(|k| fa.get(*k) != fb.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    verdict(
        differing.is_empty() && !fa.is_empty(),
        format!("{} CSV/Newick/DOT files compared, {} differ {:?}", fa.len(), differing.len(), differing),
    )
}

fn conllu_files(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            conllu_files(&path, out);
        } else if path.extension().is_some_and(|x| x == "conllu") {
            out.push(path);
        }
    }
}

fn ud_census() -> Outcome {
    let Some(dir) = std::env::var_os("LANGREP_UD21_DIR").map(PathBuf::from) else {
        return Outcome::Skip("LANGREP_UD21_DIR not set".into());
    };
    let mut files = Vec::new();
    conllu_files(&dir, &mut files);
    files.sort();
    if files.is_empty() {
        return Outcome::Skip(format!("no .conllu files under {}", dir.display()));
    }
    let mut vectors = Vec::new();
    let mut rejected = 0;
    for f in &files {
        let name = f.file_stem().unwrap().to_string_lossy().into_owned();
        match fs::read_to_string(f).map_err(|e| e.to_string()).and_then(|t| parse_conllu(&t, &name).map_err(|e| e.to_string())) {
            Ok(tb) => vectors.extend(structural_vector(&tb).ok()),
            Err(_) => rejected += 1,
        }
    }
    let census = feature_census(&vectors);
    let rel = (census as f64 - 8607.0).abs() / 8607.0;
    verdict(
        rel <= 0.05,
        format!("{census} link types from {} files ({rejected} rejected), {:.1}% from 8607", files.len(), 100.0 * rel),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exact-formula unit suite", exact_formulas),
        ("gradient correctness", gradient_correctness),
        ("synthetic phylogeny recovery", synthetic_recovery),
        ("structural correlation finding", correlation_finding),
        ("IC* oracle equivalence", causal_oracle),
        ("numeric primitives", numeric_primitives),
        ("pipeline determinism", determinism),
        ("UD 2.1 feature census", ud_census),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let line = match check() {
            Outcome::Pass(d) => format!("PASS {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                format!("FAIL {d}")
            }
            Outcome::Skip(d) => format!("SKIP {d}"),
        };
        println!("criterion {} ({name}): {line}", i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
