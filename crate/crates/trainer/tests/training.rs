use intdist::oracle::entropy_bits;
use intdist::{DalapParams, Discrete, Family, Params, Support};
use intdist_train::{evaluate, initial_model, train, Checkpoint, Dataset, Loss, Split, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn constant_data(n: usize, with_feature: bool) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (names, rows) = if with_feature {
        (vec!["x".to_string()], (0..n).map(|_| vec![rng.random_range(-1.0..1.0)]).collect())
    } else {
        (vec![], vec![vec![]; n])
    };
    Dataset::with_random_split(names, rows, vec![7; n], 42).unwrap()
}

fn config_for(f: Family) -> TrainConfig {
    let mut c = TrainConfig::new(Loss::Nll(f));
    c.support = Support::NONNEG;
    if f == Family::Bitwise {
        c.bits = Some(4);
    }
    c
}

#[test]
fn constant_target_loss_decreases() {
    let data = constant_data(400, true);
    for f in Family::ALL {
        let mut c = config_for(f);
        c.learning_rates = vec![1e-3];
        c.epochs = 10;
        let out = train(&data, &c).unwrap();
        let l = &out.sweep[0].epoch_losses;
        assert_eq!(l.len(), 10, "{f}: {:?}", out.sweep[0].diverged);
        assert!(l.windows(2).all(|w| w[1] < w[0]), "{f}: {l:?}");
    }
}

#[test]
fn constant_target_dalap_becomes_certain() {
    let data = constant_data(500, true);
    let mut c = config_for(Family::Dalap);
    c.epochs = 200;
    let out = train(&data, &c).unwrap();
    let bits = out.metrics.test.bits.unwrap();
    assert!(bits <= 0.05, "test bits {bits}");
}

#[test]
fn linear_squared_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..2000).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let ys = rows.iter().map(|x| (3.0 * x[0] - 2.0 * x[1]).round() as i64).collect();
    let data = Dataset::with_random_split(vec!["x1".into(), "x2".into()], rows, ys, 42).unwrap();
    let mut c = TrainConfig::new(Loss::SquaredError);
    c.learning_rates = vec![3.4e-3, 1e-3];
    c.epochs = 60;
    let out = train(&data, &c).unwrap();
    assert!(out.metrics.test.bits.is_none());
    assert!(out.metrics.test.rmse <= 0.5, "rmse {}", out.metrics.test.rmse);
}

#[test]
fn recovers_dalap_entropy_without_features() {
    let truth = Params::Dalap(DalapParams::new(3.7, 0.3).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let ys: Vec<i64> = (0..10_000).map(|_| truth.sample(Support::Unbounded, &mut rng).unwrap()).collect();
    let data = Dataset::with_random_split(vec![], vec![vec![]; ys.len()], ys, 42).unwrap();
    let mut c = TrainConfig::new(Loss::Nll(Family::Dalap));
    c.epochs = 20;
    let out = train(&data, &c).unwrap();
    let h = entropy_bits(&truth, Support::Unbounded).unwrap();
    let bits = out.metrics.test.bits.unwrap();
    assert!((bits - h).abs() < 0.05, "bits {bits} vs entropy {h}");
}

#[test]
fn deterministic_under_seed() {
    let data = constant_data(300, true);
    let mut c = config_for(Family::DLogistic);
    c.k = 2;
    c.learning_rates = vec![3.4e-3, 1e-4];
    c.epochs = 5;
    let a = train(&data, &c).unwrap();
    let b = train(&data, &c).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.sweep, b.sweep);
    assert_eq!(a.model, b.model);
}

#[test]
fn divergence_is_recorded_per_rate() {
    let data = constant_data(200, true);
    let mut c = config_for(Family::DNormal);
    c.learning_rates = vec![1e300, 1e-3];
    c.epochs = 3;
    let out = train(&data, &c).unwrap();
    assert!(out.sweep[0].diverged.is_some());
    assert!(out.sweep[1].diverged.is_none());
    assert_eq!(out.selected_lr, 1e-3);
}

#[test]
fn evaluate_reference_cases() {
    // uniform 8-bit Bitwise on uniform targets
    let ys: Vec<i64> = (0..256).collect();
    let data = Dataset::with_random_split(vec![], vec![vec![]; 256], ys, 1).unwrap();
    let mut c = TrainConfig::new(Loss::Nll(Family::Bitwise));
    c.support = Support::bounded(0, 255).unwrap();
    let mut m = initial_model(&data, &c).unwrap();
    m.mlp.set_output_bias(&[0.0; 8]);
    let all: Vec<usize> = (0..256).collect();
    let r = evaluate(&m, &data, &all).unwrap();
    assert!((r.bits.unwrap() - 8.0).abs() < 1e-12);

    // near-deterministic Bitwise predicting 5 every time
    let data = Dataset::with_random_split(vec![], vec![vec![]; 20], vec![5; 20], 1).unwrap();
    c.support = Support::bounded(0, 7).unwrap();
    let mut m = initial_model(&data, &c).unwrap();
    m.mlp.set_output_bias(&[40.0, -40.0, 40.0]);
    let r = evaluate(&m, &data, &(0..20).collect::<Vec<_>>()).unwrap();
    assert!(r.bits.unwrap() < 1e-5);
    assert!(r.rmse < 1e-4);

    // Dalap located exactly on each target
    let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
    let ys: Vec<i64> = (0..30).collect();
    let data = Dataset::with_random_split(vec!["x".into()], xs, ys, 1).unwrap();
    let mut c = TrainConfig::new(Loss::Nll(Family::Dalap));
    c.hidden_dim = 1;
    let mut m = initial_model(&data, &c).unwrap();
    let (mean, scale) = (m.feature_mean[0], m.feature_scale[0]);
    // relu(x_std * scale + mean) = x for x >= 0; mu = hidden, gamma fixed
    m.mlp = intdist_train::Mlp::from_parts(1, 1, 2, vec![scale, mean, 1.0, 0.0, 0.0, -1.0]).unwrap();
    let r = evaluate(&m, &data, &(0..30).collect::<Vec<_>>()).unwrap();
    // standardization round trip leaves the locations within an ulp of the targets
    assert!(r.rmse < 1e-12, "rmse {}", r.rmse);
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random_range(0.0..3.0)]).collect();
    let ys = rows.iter().map(|x| (2.0 * x[0]).round() as i64 + rng.random_range(0..2)).collect();
    let data = Dataset::with_random_split(vec!["x".into()], rows, ys, 42).unwrap();
    let mut c = config_for(Family::DWeibull);
    c.learning_rates = vec![1e-3];
    c.epochs = 4;
    let out = train(&data, &c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    Checkpoint::from_outcome(&out, &c, "y", &data.feature_names).save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    let model = back.model().unwrap();
    assert_eq!(model, out.model);
    let test = evaluate(&model, &data, &data.indices(Split::Test)).unwrap();
    assert_eq!(test, out.metrics.test);
    assert_eq!(back.metrics, out.metrics);
}

#[test]
fn checkpoint_rejects_other_versions() {
    let data = constant_data(50, false);
    let mut c = config_for(Family::Dalap);
    c.learning_rates = vec![1e-3];
    c.epochs = 1;
    let out = train(&data, &c).unwrap();
    let mut ck = Checkpoint::from_outcome(&out, &c, "y", &[]);
    ck.schema_version = 99;
    assert!(ck.model().is_err());
    let mut ck = Checkpoint::from_outcome(&out, &c, "y", &[]);
    ck.weights.b2.pop();
    assert!(ck.model().is_err());
}
