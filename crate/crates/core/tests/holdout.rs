//! Held-out refits: the dropped unit's latent follows its conditional prior
//! and the unit's outcome never reaches the sampler.

use cveval::io::data::{bundled_galaxy, bundled_lipcancer, bundled_seeds};
use cveval::mcmc::{run_chains, run_holdout, ChainConfig, SampleStore};
use cveval::models::{CarModel, CarPrior, CarVariant, MixtureModel, MixturePrior, SeedsModel, SeedsPrior};

const BATCHES: usize = 25;

/// Mean of `x` and its batch-means standard error.
fn batch_mean(x: &[f64]) -> (f64, f64) {
    let size = x.len() / BATCHES;
    let means: Vec<f64> = x
        .chunks_exact(size)
        .take(BATCHES)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / BATCHES as f64;
    let v = means.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (m, (v / BATCHES as f64).sqrt())
}

fn assert_zero_mean(name: &str, residuals: &[f64]) {
    let (m, se) = batch_mean(residuals);
    assert!(m.abs() < 4.0 * se.max(1e-12), "{name}: mean residual {m} with se {se}");
}

fn config() -> ChainConfig {
    ChainConfig::desk().with_seed(41)
}

#[test]
fn mixture_held_out_label_follows_the_weights() {
    let model = MixtureModel::new(bundled_galaxy(), 3, MixturePrior::galaxy()).unwrap();
    let i = 40;
    let store = run_holdout(&model, i, &config()).unwrap();
    for k in 0..3 {
        let r: Vec<f64> = store
            .draws()
            .map(|d| f64::from(d.latent[i] as usize == k) - d.theta[6 + k])
            .collect();
        assert_zero_mean(&format!("component {k}"), &r);
    }
}

#[test]
fn car_held_out_latent_matches_its_conditional() {
    let d = bundled_lipcancer();
    let model = d.model(CarVariant::SpatialLinear, CarPrior::default()).unwrap();
    let i = 7;
    let store = run_holdout(&model, i, &config()).unwrap();
    let standardized: Vec<f64> = store
        .draws()
        .map(|d| {
            let p = model.params(d.theta);
            let (m, v) = model.conditional(i, d.latent, &p);
            (d.latent[i] - m) / v.sqrt()
        })
        .collect();
    assert_zero_mean("standardized residual", &standardized);
    let second: Vec<f64> = standardized.iter().map(|z| z * z - 1.0).collect();
    assert_zero_mean("squared residual", &second);
}

fn same_draws(a: &SampleStore, b: &SampleStore) -> bool {
    a.raw().len() == b.raw().len() && a.raw().iter().zip(b.raw()).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[test]
fn held_out_outcome_never_reaches_the_sampler() {
    let cfg = ChainConfig {
        n_adapt: 200,
        n_burn: 200,
        n_sample: 1000,
        ..config()
    };

    let y = bundled_galaxy();
    let mut absurd = y.clone();
    absurd[5] = 1e6;
    let a = MixtureModel::new(y, 3, MixturePrior::galaxy()).unwrap();
    let b = MixtureModel::new(absurd, 3, MixturePrior::galaxy()).unwrap();
    assert!(same_draws(
        &run_holdout(&a, 5, &cfg).unwrap(),
        &run_holdout(&b, 5, &cfg).unwrap()
    ));

    let d = bundled_lipcancer();
    let mut counts = d.y.clone();
    counts[3] = 1_000_000;
    let a = d.model(CarVariant::SpatialLinear, CarPrior::default()).unwrap();
    let b = CarModel::new(
        CarVariant::SpatialLinear,
        counts,
        a.covariate().to_vec(),
        a.structure().clone(),
        CarPrior::default(),
    )
    .unwrap();
    assert!(same_draws(
        &run_holdout(&a, 3, &cfg).unwrap(),
        &run_holdout(&b, 3, &cfg).unwrap()
    ));

    let plates = bundled_seeds();
    let mut odd = plates.clone();
    odd[2].r = odd[2].n;
    let a = SeedsModel::new(plates, SeedsPrior::default()).unwrap();
    let b = SeedsModel::new(odd, SeedsPrior::default()).unwrap();
    assert!(same_draws(
        &run_holdout(&a, 2, &cfg).unwrap(),
        &run_holdout(&b, 2, &cfg).unwrap()
    ));
}

#[test]
fn holding_out_an_empty_plate_changes_nothing() {
    let mut plates = bundled_seeds();
    plates[0].r = 0;
    plates[0].n = 0;
    let model = SeedsModel::new(plates, SeedsPrior::default()).unwrap();
    let full = run_chains(&model, &config()).unwrap();
    let held = run_holdout(&model, 0, &config().with_seed(42)).unwrap();
    for j in 0..full.n_theta() {
        let (ma, sa) = batch_mean(&full.theta_column(j));
        let (mb, sb) = batch_mean(&held.theta_column(j));
        let combined = (sa * sa + sb * sb).sqrt();
        assert!(
            (ma - mb).abs() < 4.0 * combined,
            "{}: {ma} vs {mb} (se {combined})",
            full.theta_names()[j]
        );
    }
}
