use macnet::classify::{classify_edge, contribution_histogram};
use macnet::enrichment::{enrich, hypergeom_upper, GeneSetCollection};
use macnet::inference::{homogeneity_lrt, Method};
use macnet::network::{infer_network, AttributeDataset, InferConfig};
use macnet::numkernel::{corr_matrix, Matrix};
use macnet::similarity::{canonical_corr_homogeneous, equal_corr_blocks, equal_corr_closed_form};
use macnet::simulation::sample_mvn;
use num::{BigInt, BigRational, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn block(x: &Matrix, cols: std::ops::Range<usize>) -> Matrix {
    Matrix::from_fn(x.rows(), cols.len(), |s, a| x[(s, cols.start + a)])
}

fn corr2(r: f64) -> Matrix {
    Matrix::from_rows(&[[1.0, r], [r, 1.0]])
}

#[test]
fn three_nodes_recover_the_linked_pair() {
    let joint = Matrix::from_rows(&[
        [1.0, 0.2, 0.7, 0.1],
        [0.2, 1.0, 0.1, 0.6],
        [0.7, 0.1, 1.0, 0.2],
        [0.1, 0.6, 0.2, 1.0],
    ]);
    let x = sample_mvn(&joint, 80, 1).unwrap();
    let lone = sample_mvn(&corr2(0.2), 80, 2).unwrap();
    let data = AttributeDataset::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec!["x".into(), "y".into()],
        vec![block(&x, 0..2), block(&x, 2..4), lone],
    )
    .unwrap();
    let net = infer_network(&data, &InferConfig::new(Method::Cca, 0.05)).unwrap();
    assert_eq!(net.n_tests, 3);
    assert_eq!(net.edges.iter().map(|e| e.pair).collect::<Vec<_>>(), vec![(0, 1)]);
    let e = &net.edges[0];
    assert_eq!(e.df, Some(4));
    assert!((e.contrib.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn single_attribute_tests_rank_pairs_identically() {
    let n = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nodes = 8;
    let blocks: Vec<Matrix> = (0..nodes)
        .map(|v| sample_mvn(&Matrix::identity(1), n, 100 + v as u64).unwrap())
        .collect();
    // add shared signal of varying strength
    let base = sample_mvn(&Matrix::identity(1), n, 99).unwrap();
    let blocks: Vec<Matrix> = blocks
        .into_iter()
        .map(|b| {
            let w: f64 = rng.random_range(0.0..1.0);
            Matrix::from_fn(n, 1, |s, _| b[(s, 0)] + w * base[(s, 0)])
        })
        .collect();
    let data = AttributeDataset::new((0..nodes).map(|i| format!("v{i}")).collect(), vec!["x".into()], blocks).unwrap();
    let mut pearson = InferConfig::new(Method::Pearson, 0.999);
    pearson.homogeneity_check = false;
    let mut cca = InferConfig::new(Method::Cca, 0.999);
    cca.homogeneity_check = false;
    let a = infer_network(&data, &pearson).unwrap();
    let b = infer_network(&data, &cca).unwrap();
    assert_eq!(a.edges.len(), b.edges.len());
    let mut order_a: Vec<_> = a.edges.iter().map(|e| (e.p, e.pair)).collect();
    let mut order_b: Vec<_> = b.edges.iter().map(|e| (e.p, e.pair)).collect();
    order_a.sort_by(|x, y| x.0.total_cmp(&y.0));
    order_b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let pa: Vec<_> = order_a.iter().map(|x| x.1).collect();
    let pb: Vec<_> = order_b.iter().map(|x| x.1).collect();
    assert_eq!(pa, pb);
}

#[test]
fn homogeneity_lrt_size_and_power() {
    let (n, reps) = (500, 2000);
    let joint = Matrix::from_rows(&[
        [1.0, 0.4, 0.3, 0.1],
        [0.4, 1.0, 0.1, 0.2],
        [0.3, 0.1, 1.0, 0.4],
        [0.1, 0.2, 0.4, 1.0],
    ]);
    let mut rejected = 0;
    for rep in 0..reps {
        let x = sample_mvn(&joint, n, 10_000 + rep).unwrap();
        let t = homogeneity_lrt(&block(&x, 0..2), &block(&x, 2..4)).unwrap();
        assert_eq!(t.df, 2);
        if t.p < 0.05 {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / reps as f64;
    assert!((rate - 0.05).abs() <= 0.02, "size {rate}");

    let hetero = Matrix::from_rows(&[
        [1.0, 0.6, 0.3, 0.1],
        [0.6, 1.0, 0.1, 0.2],
        [0.3, 0.1, 1.0, 0.0],
        [0.1, 0.2, 0.0, 1.0],
    ]);
    let mut power = 0;
    for rep in 0..200 {
        let x = sample_mvn(&hetero, n, 50_000 + rep).unwrap();
        if homogeneity_lrt(&block(&x, 0..2), &block(&x, 2..4)).unwrap().p < 0.05 {
            power += 1;
        }
    }
    assert!(power >= 190, "power {power}/200");
}

#[test]
fn sample_mvn_matches_target_correlation() {
    let sigma = Matrix::from_rows(&[[1.0, 0.5, -0.2], [0.5, 1.0, 0.3], [-0.2, 0.3, 1.0]]);
    let x = sample_mvn(&sigma, 40_000, 3).unwrap();
    let c = corr_matrix(&x).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            assert!((c[(a, b)] - sigma[(a, b)]).abs() < 0.015);
        }
    }
    assert_eq!(sample_mvn(&sigma, 10, 3).unwrap(), sample_mvn(&sigma, 10, 3).unwrap());
}

#[test]
fn equal_correlation_closed_form_matches_solver() {
    for &(k, r, rho, b) in &[(2, 0.3, 0.4, 0.1), (3, 0.2, 0.5, 0.15), (5, 0.1, 0.3, 0.05), (4, -0.1, 0.2, -0.02)] {
        let (sm, sc) = equal_corr_blocks(k, r, rho, b);
        let numeric = canonical_corr_homogeneous(&sm, &sc).unwrap().rho_c;
        let closed = equal_corr_closed_form(k, r, rho, b).unwrap();
        assert!((numeric - closed).abs() < 1e-10, "k={k}: {numeric} vs {closed}");
    }
}

fn binom(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::from(1), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

#[test]
fn hypergeometric_large_universes_match_exact_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..300 {
        let universe = rng.random_range(60..400u64);
        let class = rng.random_range(1..universe);
        let set = rng.random_range(1..universe);
        let lo = (class + set).saturating_sub(universe);
        let overlap = rng.random_range(lo..=class.min(set));
        let num: BigInt = (overlap..=class.min(set))
            .map(|x| binom(set, x) * binom(universe - set, class - x))
            .sum();
        let exact = BigRational::new(num, binom(universe, class)).to_f64().unwrap();
        let got = hypergeom_upper(overlap as usize, class as usize, set as usize, universe as usize).unwrap();
        if exact > 1e-280 {
            assert!(((got - exact) / exact).abs() < 1e-10, "{overlap},{class},{set},{universe}: {got} vs {exact}");
        }
    }
}

#[test]
fn uniform_contributions_fill_histogram_evenly() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let edges: Vec<_> = (0..20_000)
        .map(|i| {
            let c: f64 = rng.random_range(0.0..1.0);
            classify_edge((i, i + 1), &[c, 1.0 - c], 0.25).unwrap()
        })
        .collect();
    let counts = contribution_histogram(&edges, 0, 50);
    assert_eq!(counts.iter().sum::<usize>(), 20_000);
    let expected = 20_000.0 / 50.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(49.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi2 {stat}, p {p}");
}

#[test]
fn enrichment_flags_the_concentrated_set() {
    let gmt = "immune\tdesc\tg1\tg2\tg3\tg4\tg5\n\
               metabolic\tdesc\tg6\tg7\tg8\tg9\tg10\n\
               ribosome\tdesc\tg11\tg12\tg13\tg14\tg15\tg16\tg17\tg18\tg19\tg20\n";
    let gsc = GeneSetCollection::parse_gmt(gmt, 20).unwrap();
    let mut assignments: Vec<(String, String)> = (1..=5).map(|i| (format!("g{i}"), "protein".into())).collect();
    assignments.extend((6..=20).map(|i| (format!("g{i}"), "mixed".to_string())));
    let report = enrich(&assignments, &gsc, 0.05, &[]).unwrap();
    let hit = report
        .results
        .iter()
        .find(|r| r.class_label == "protein" && r.set_name == "immune")
        .unwrap();
    assert_eq!(hit.overlap, 5);
    // C(5,5)C(15,0)/C(20,5)
    assert!((hit.p - 1.0 / 15504.0).abs() < 1e-18);
    assert!(hit.enriched);
    assert!(report.results.iter().filter(|r| r.enriched).all(|r| r.q <= 0.05));
    let without = enrich(&assignments, &gsc, 0.05, &["immune".into()]).unwrap();
    assert!(without.results.iter().all(|r| r.set_name != "immune"));
}
