use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use txh::fitting::{
    fit, synthesize, DatasetKind, DatasetMeta, FitConfig, FitProblem, FreeParameter,
    SpectralDataset,
};
use txh::{enumerate_orientations, ModelParams};

fn labels() -> Vec<String> {
    enumerate_orientations()
        .frames
        .iter()
        .map(|f| f.label.clone())
        .collect()
}

fn stark(
    truth: &ModelParams,
    direction: [f64; 3],
    repeats: usize,
    sigma: f64,
    seed: u64,
) -> SpectralDataset {
    let fields: Vec<f64> = (1..=8)
        .flat_map(|k| std::iter::repeat_n(15e3 * k as f64, repeats))
        .collect();
    let meta = DatasetMeta {
        direction: Some(direction),
        ..DatasetMeta::default()
    };
    let mut ds =
        SpectralDataset::tagged_grid(DatasetKind::StarkSweep, meta, &fields, &labels(), sigma);
    synthesize(&mut ds, truth).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    ds.points
        .iter_mut()
        .for_each(|p| p.observed += noise.sample(&mut rng));
    ds
}

fn linear_free() -> Vec<FreeParameter> {
    vec![
        FreeParameter {
            name: "A_X".into(),
            start: 3000.0,
            lower: -1e4,
            upper: 1e4,
        },
        FreeParameter {
            name: "A_Y".into(),
            start: 7000.0,
            lower: -1e4,
            upper: 1e4,
        },
    ]
}

#[test]
fn sigma_shrinks_with_replication() {
    let truth = ModelParams::default();
    let single = fit(&FitProblem::new(
        vec![stark(&truth, [1.0, 1.0, 0.0], 1, 2e7, 1)],
        linear_free(),
        truth.clone(),
    )
    .unwrap())
    .unwrap();
    let quad = fit(&FitProblem::new(
        vec![stark(&truth, [1.0, 1.0, 0.0], 4, 2e7, 2)],
        linear_free(),
        truth.clone(),
    )
    .unwrap())
    .unwrap();
    for name in ["A_X", "A_Y"] {
        let ratio = quad.sigma(name).unwrap() / single.sigma(name).unwrap();
        // expected 1/sqrt(4) = 0.5, checked at 2x tolerance
        assert!((0.25..=1.0).contains(&ratio), "{name}: ratio {ratio}");
    }
}

#[test]
fn perturbing_truth_increases_objective() {
    let truth = ModelParams::default();
    let mut ds = stark(&truth, [0.0, 0.0, 1.0], 1, 1e7, 3);
    synthesize(&mut ds, &truth).unwrap();
    let pr = FitProblem::new(vec![ds], linear_free(), truth.clone()).unwrap();
    let f0 = pr.objective(&[truth.a_x, truth.a_y]).unwrap();
    assert!(f0 <= 1e-16);
    for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        assert!(pr.objective(&[truth.a_x + dx, truth.a_y + dy]).unwrap() > f0);
    }
}

#[test]
fn misalignment_is_recovered() {
    let truth = ModelParams::default();
    let d_theta = 1.6f64.to_radians();
    let meta = DatasetMeta {
        direction: Some([1.0, 1.0, 0.0]),
        ..DatasetMeta::default()
    };
    let fields: Vec<f64> = (1..=8).map(|k| 15e3 * k as f64).collect();
    let mut ds =
        SpectralDataset::tagged_grid(DatasetKind::StarkSweep, meta, &fields, &labels(), 1e6);
    // generate with the misaligned direction, then fit the angle back
    let n = txh::spectra::misaligned_direction(&[1.0, 1.0, 0.0], (d_theta, 0.0)).unwrap();
    ds.meta.direction = Some(n);
    synthesize(&mut ds, &truth).unwrap();
    ds.meta.direction = Some([1.0, 1.0, 0.0]);
    let free = vec![FreeParameter {
        name: "misalign_theta:0".into(),
        start: 0.5f64.to_radians(),
        lower: -0.2,
        upper: 0.2,
    }];
    let r = fit(&FitProblem::new(vec![ds], free, truth).unwrap()).unwrap();
    assert!(r.converged);
    assert!((r.value("misalign_theta:0").unwrap() - d_theta).abs() < 1e-9);
}

#[test]
fn multistart_keeps_best_seed() {
    let truth = ModelParams::default();
    let ds = stark(&truth, [1.0, 1.0, 0.0], 1, 1e7, 4);
    let pr = FitProblem::new(vec![ds], linear_free(), truth)
        .unwrap()
        .with_seeds(vec![vec![-3000.0, -7000.0], vec![3500.0, 7500.0]])
        .unwrap();
    let r = fit(&pr).unwrap();
    let single =
        fit(&FitProblem::new(pr.datasets.clone(), linear_free(), pr.base.clone()).unwrap())
            .unwrap();
    assert!(r.objective <= single.objective * (1.0 + 1e-12));
    // deterministic
    assert_eq!(fit(&pr).unwrap(), r);
}

#[test]
fn untagged_points_are_assigned() {
    let truth = ModelParams::default();
    let mut ds = stark(&truth, [1.0, 1.0, 0.0], 1, 1e6, 5);
    synthesize(&mut ds, &truth).unwrap();
    ds.points.iter_mut().for_each(|p| p.tag = None);
    let pr = FitProblem::new(vec![ds], linear_free(), truth.clone()).unwrap();
    assert!(pr.objective(&[truth.a_x, truth.a_y]).unwrap() < 1e-16);
    let a = pr.assignments(&[truth.a_x, truth.a_y]).unwrap();
    assert_eq!(a.len(), pr.n_points());
}

#[test]
fn config_round_trip_through_files() {
    let dir = std::env::temp_dir().join(format!("txh-fit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let truth = ModelParams::default();
    let ds = stark(&truth, [0.0, 0.0, 1.0], 1, 1e7, 6);
    ds.write_points(std::fs::File::create(dir.join("stark.csv")).unwrap())
        .unwrap();
    let cfg = r#"{
        "datasets": [{"kind": "stark_sweep", "path": "stark.csv", "meta": {"direction": [0, 0, 1]}}],
        "free": [{"name": "A_Y", "start": 7000.0, "lower": 0.0, "upper": 1e4}]
    }"#;
    let pr = FitConfig::from_json(cfg).unwrap().build(&dir, &[]).unwrap();
    let r = fit(&pr).unwrap();
    assert!(r.converged);
    assert!((r.value("A_Y").unwrap() - truth.a_y).abs() < 5.0 * r.sigma("A_Y").unwrap());
    std::fs::remove_dir_all(&dir).ok();
}
