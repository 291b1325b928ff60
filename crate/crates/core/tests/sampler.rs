use proptest::prelude::*;
use qhlab_core::models::ProcessModel;
use qhlab_core::sampler::*;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn wiener_terminal_variance() {
    let g = TimeGrid::unit(256).unwrap();
    let b = sample_paths(&ProcessModel::Wiener, g, 20_000, RngSpec::new(42)).unwrap();
    let v: f64 = b.paths().map(|p| p[256] * p[256]).sum::<f64>() / b.m as f64;
    assert!((v - 1.0).abs() <= 3.0 * (2.0f64 / 20_000.0).sqrt(), "{v}");
    assert!(b.paths().all(|p| p[0] == 0.0));
}

#[test]
fn fbm_increment_variance() {
    let g = TimeGrid::unit(256).unwrap();
    let model = ProcessModel::fbm(0.75).unwrap();
    let b = sample_paths(&model, g, 20_000, RngSpec::new(7)).unwrap();
    let sq: Vec<f64> = b.paths().map(|p| (p[256] - p[128]).powi(2)).collect();
    let mean = sq.iter().sum::<f64>() / sq.len() as f64;
    let sd = (sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (sq.len() - 1) as f64).sqrt();
    let se = sd / (sq.len() as f64).sqrt();
    assert!((mean - 0.5f64.powf(1.5)).abs() <= 3.0 * se, "{mean}");
}

#[test]
fn same_seed_is_bit_identical() {
    let g = TimeGrid::unit(64).unwrap();
    let model = ProcessModel::sub_fbm(0.6).unwrap();
    let a = sample_paths(&model, g, 300, RngSpec::new(5)).unwrap();
    let b = sample_paths(&model, g, 300, RngSpec::new(5)).unwrap();
    assert_eq!(a, b);
    let c = sample_paths(&model, g, 300, RngSpec::new(6)).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn thread_count_does_not_change_output() {
    let g = TimeGrid::unit(128).unwrap();
    let model = ProcessModel::fbm(0.7).unwrap();
    let reference = pool(1).install(|| sample_paths(&model, g, 500, RngSpec::new(11)).unwrap());
    for t in [4, 8] {
        let other = pool(t).install(|| sample_paths(&model, g, 500, RngSpec::new(11)).unwrap());
        assert_eq!(reference, other, "threads = {t}");
    }
}

#[test]
fn batch_prefix_is_stable() {
    // path j depends only on (seed, stream_index + j)
    let g = TimeGrid::unit(32).unwrap();
    let s = Sampler::new(&ProcessModel::Wiener, g).unwrap();
    let big = s.sample(200, RngSpec::new(3)).unwrap();
    let small = s.sample(70, RngSpec::new(3)).unwrap();
    assert_eq!(&big.values[..small.values.len()], &small.values[..]);
    let shifted = s.sample(10, RngSpec::with_stream(3, 65)).unwrap();
    assert_eq!(shifted.path(0), big.path(65));
}

#[test]
fn levinson_and_dense_routes_agree_pathwise() {
    let g = TimeGrid::unit(200).unwrap();
    for model in [ProcessModel::fbm(0.75).unwrap(), ProcessModel::fbm(0.3).unwrap(), ProcessModel::Wiener] {
        let lev = Sampler::with_strategy(&model, g, SamplingStrategy::Levinson).unwrap();
        let den = Sampler::with_strategy(&model, g, SamplingStrategy::Dense).unwrap();
        let a = lev.sample(20, RngSpec::new(9)).unwrap();
        let b = den.sample(20, RngSpec::new(9)).unwrap();
        let err = a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err < 1e-9, "{}: {err}", model.id());
    }
}

#[test]
fn window_grid_matches_increment_covariance() {
    // grid [0.5, 1]: paths hold X_t values, with nonzero start
    let g = TimeGrid::new(0.5, 0.5, 64).unwrap();
    let model = ProcessModel::fbm(0.75).unwrap();
    let b = sample_paths(&model, g, 20_000, RngSpec::new(21)).unwrap();
    let c00 = model.covariance(0.5, 0.5).unwrap();
    let v: f64 = b.paths().map(|p| p[0] * p[0]).sum::<f64>() / b.m as f64;
    assert!((v - c00).abs() <= 4.0 * (2.0 * c00 * c00 / b.m as f64).sqrt());
}

#[test]
fn empirical_covariance_within_four_standard_errors() {
    let g = TimeGrid::unit(64).unwrap();
    let m = 20_000;
    for model in [ProcessModel::fbm(0.75).unwrap(), ProcessModel::sub_fbm(0.7).unwrap(), ProcessModel::bi_fbm(0.6, 0.8).unwrap()] {
        let b = sample_paths(&model, g, m, RngSpec::new(99)).unwrap();
        for &(i, j) in &[(10usize, 20usize), (32, 64), (64, 64), (5, 60)] {
            let (ti, tj) = (g.time(i), g.time(j));
            let cij = model.covariance(ti, tj).unwrap();
            let cii = model.covariance(ti, ti).unwrap();
            let cjj = model.covariance(tj, tj).unwrap();
            let est: f64 = b.paths().map(|p| p[i] * p[j]).sum::<f64>() / m as f64;
            let se = ((cii * cjj + cij * cij) / m as f64).sqrt();
            assert!((est - cij).abs() <= 4.0 * se, "{} ({i},{j}): {est} vs {cij}", model.id());
        }
    }
}

#[test]
fn terminal_value_passes_ks() {
    let g = TimeGrid::unit(128).unwrap();
    for model in [ProcessModel::Wiener, ProcessModel::fbm(0.75).unwrap(), ProcessModel::sub_fbm(0.6).unwrap()] {
        let sd = model.covariance(1.0, 1.0).unwrap().sqrt();
        let b = sample_paths(&model, g, 10_000, RngSpec::new(1234)).unwrap();
        let z: Vec<f64> = b.paths().map(|p| p[128] / sd).collect();
        let d = ks_statistic_standard_normal(&z);
        assert!(d < ks_critical_value(z.len(), 0.001), "{}: D = {d}", model.id());
    }
}

#[test]
fn dump_roundtrip() {
    let g = TimeGrid::unit(16).unwrap();
    let b = sample_paths(&ProcessModel::fbm(0.6).unwrap(), g, 5, RngSpec::new(77)).unwrap();
    let mut buf = Vec::new();
    b.write_dump(&mut buf).unwrap();
    assert_eq!(&buf[..5], b"QHLX1");
    let (h, v) = PathBatch::read_dump(&buf[..]).unwrap();
    assert_eq!(h.model_id, b.model_id);
    assert_eq!((h.n, h.m, h.seed), (16, 5, 77));
    assert_eq!(v, b.values);
    assert!(PathBatch::read_dump(&b"QHLX0"[..]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn anchored_and_range_ordering(seed in any::<u64>(), i0 in 0usize..20, len in 0usize..40) {
        let g = TimeGrid::unit(64).unwrap();
        let b = sample_paths(&ProcessModel::fbm(0.4).unwrap(), g, 1, RngSpec::new(seed)).unwrap();
        let p = b.path(0);
        let i1 = (i0 + len).min(64);
        let a = path_statistic(p, i0, i1, StatKind::Anchored).unwrap();
        let r = path_statistic(p, i0, i1, StatKind::Range).unwrap();
        prop_assert!(a <= r + 1e-15);
        prop_assert!(r <= 2.0 * a + 1e-15);
    }

    #[test]
    fn statistic_ordering_on_arbitrary_sequences(v in proptest::collection::vec(-10.0f64..10.0, 1..50)) {
        let n = v.len() - 1;
        let a = path_statistic(&v, 0, n, StatKind::Anchored).unwrap();
        let r = path_statistic(&v, 0, n, StatKind::Range).unwrap();
        prop_assert!(a <= r && r <= 2.0 * a + 1e-12);
    }
}
