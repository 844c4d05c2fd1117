mod common;

use common::{skeleton_of, Dag};
use langrep::causal::{ci_test, export_dot, ic_star, CiTest, CiTestConfig, EdgeMark, MarkedPdag, SampleTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn noise(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn table(cols: Vec<Vec<f64>>) -> SampleTable {
    SampleTable::new((0..cols.len()).map(|i| format!("x{i}")).collect(), cols).unwrap()
}

fn matches_oracle(dag: &Dag, g: &MarkedPdag) -> bool {
    skeleton_of(g) == dag.oracle_skeleton() && g.colliders() == dag.v_structures()
}

#[test]
fn ci_null_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = Uniform::new(0.0, 1.0);
    let cfg = CiTestConfig::default();
    let runs = 200;
    let independent = (0..runs)
        .filter(|_| {
            let x: Vec<f64> = (0..2000).map(|_| u.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..2000).map(|_| u.sample(&mut rng)).collect();
            ci_test(&table(vec![x, y]), 0, 1, &[], &cfg).unwrap().independent
        })
        .count();
    assert!(independent * 100 >= runs * 99, "{independent}/{runs}");
}

#[test]
fn ci_collider_and_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = normals(&mut rng, 2000);
    let y = normals(&mut rng, 2000);
    let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let cfg = CiTestConfig::default();
    let t = table(vec![x.clone(), y, z]);
    assert!(ci_test(&t, 0, 1, &[2], &cfg).unwrap().p < 0.001);
    let same = ci_test(&table(vec![x.clone(), x]), 0, 1, &[], &cfg).unwrap();
    assert!(!same.independent && same.p < 1e-12);
}

#[test]
fn ci_rejects_oversized_conditioning() {
    let t = table(vec![vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 1.0, 4.0, 3.0], vec![0.0, 1.0, 0.0, 1.0]]);
    assert!(ci_test(&t, 0, 1, &[2], &CiTestConfig::default()).is_err());
    let bad = CiTestConfig { alpha: 1.5, ..CiTestConfig::default() };
    assert!(ci_test(&t, 0, 1, &[], &bad).is_err());
}

#[test]
fn chain_fork_collider_match_oracle() {
    let cfg = CiTestConfig::default();
    for (name, dag) in [
        ("chain", Dag::new(3, &[(0, 1), (1, 2)])),
        ("fork", Dag::new(3, &[(0, 1), (0, 2)])),
        ("collider", Dag::new(3, &[(0, 2), (1, 2)])),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let hits = (0..100)
            .filter(|_| matches_oracle(&dag, &ic_star(&dag.simulate(2000, &mut rng), &cfg).unwrap()))
            .count();
        assert!(hits >= 95, "{name}: {hits}/100");
    }
}

#[test]
fn chain_has_sepset_and_no_collider() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = normals(&mut rng, 2000);
    let b: Vec<f64> = a.iter().map(|v| v + noise(&mut rng)).collect();
    let c: Vec<f64> = b.iter().map(|v| v + noise(&mut rng)).collect();
    let g = ic_star(&table(vec![a, b, c]), &CiTestConfig::default()).unwrap();
    assert!(!g.is_adjacent(0, 2));
    assert_eq!(g.sepset(0, 2).unwrap().set, vec![1]);
    assert!(g.colliders().is_empty());
    assert!(g.edges().iter().all(|e| e.mark != EdgeMark::Spurious));
    assert_eq!(g.edges().len(), 2);
}

#[test]
fn independent_columns_give_empty_graph() {
    let cfg = CiTestConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let runs = 1000;
    let empty = (0..runs)
        .filter(|_| ic_star(&table((0..4).map(|_| normals(&mut rng, 2000)).collect()), &cfg).unwrap().edges().is_empty())
        .count();
    assert!(empty * 100 >= runs * 99, "{empty}/{runs}");
}

fn random_dag(rng: &mut ChaCha8Rng) -> Dag {
    let k = rng.gen_range(2..=5);
    let mut edges = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            if rng.gen_bool(0.4) {
                edges.push((a, b));
            }
        }
    }
    Dag::new(k, &edges)
}

/// Coefficients are drawn strongly faithful (every d-connected partial
/// correlation at least 0.1), and the Gaussian statistic matches the
/// generating model.
#[test]
fn skeleton_matches_oracle_on_small_structures() {
    let cfg = CiTestConfig { test: CiTest::Gaussian, ..CiTestConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut hits = 0;
    for _ in 0..100 {
        let dag = random_dag(&mut rng);
        let coef = dag.strongly_faithful_coefficients(0.1, &mut rng);
        let g = ic_star(&dag.simulate_with(&coef, 5000, &mut rng), &cfg).unwrap();
        if skeleton_of(&g) == dag.oracle_skeleton() {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..(1usize << items.len()))
        .map(|m| items.iter().enumerate().filter(|(i, _)| m & (1 << i) != 0).map(|(_, &v)| v).collect())
        .collect()
}

#[test]
fn sepsets_verified_post_hoc() {
    let cfg = CiTestConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let dag = random_dag(&mut rng);
        let t = dag.simulate(1000, &mut rng);
        let g = ic_star(&t, &cfg).unwrap();
        for a in 0..dag.k {
            for b in (a + 1)..dag.k {
                let others: Vec<usize> = (0..dag.k).filter(|&v| v != a && v != b).collect();
                if g.is_adjacent(a, b) {
                    assert!(g.sepset(a, b).is_none());
                    for z in subsets(&others) {
                        assert!(!ci_test(&t, a, b, &z, &cfg).unwrap().independent);
                    }
                } else {
                    let rec = g.sepset(a, b).expect("non-adjacent pair without sepset");
                    let out = ci_test(&t, a, b, &rec.set, &cfg).unwrap();
                    assert!(out.independent);
                    assert!((out.p - rec.p).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn row_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let dag = Dag::new(4, &[(0, 2), (1, 2), (2, 3)]);
    let t = dag.simulate(500, &mut rng);
    let mut order: Vec<usize> = (0..t.rows()).collect();
    order.shuffle(&mut rng);
    let cols = (0..4).map(|c| order.iter().map(|&r| t.column(c)[r]).collect()).collect();
    let shuffled = SampleTable::new(t.variables().to_vec(), cols).unwrap();
    let cfg = CiTestConfig::default();
    assert_eq!(ic_star(&t, &cfg).unwrap(), ic_star(&shuffled, &cfg).unwrap());
}

#[test]
fn marked_edge_renders_solid_arrow() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let a = normals(&mut rng, 2000);
    let b = normals(&mut rng, 2000);
    let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y + 0.5 * noise(&mut rng)).collect();
    let d: Vec<f64> = c.iter().map(|v| v + noise(&mut rng)).collect();
    let g = ic_star(&table(vec![a, b, c, d]), &CiTestConfig::default()).unwrap();
    let genuine: Vec<_> = g.edges().into_iter().filter(|e| e.mark == EdgeMark::Genuine).collect();
    assert_eq!(genuine.len(), 1);
    assert_eq!((genuine[0].from, genuine[0].to), (2, 3));
    let dot = export_dot(&g);
    let solid: Vec<&str> = dot.lines().filter(|l| l.contains("style=solid")).collect();
    assert_eq!(solid, vec!["  \"x2\" -> \"x3\" [style=solid, label=\"genuine\"];"]);
    assert_eq!(dot.matches(" -> ").count(), 3);
}
