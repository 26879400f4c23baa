use std::time::Instant;

use samlp_core::lasso::select_features;
use samlp_core::model::space::{sample_configs, Family, ModelConfig, ParamSpace, ParamValue};
use samlp_core::model::{class_weights, train};
use samlp_core::synth::{generate_synthetic, SyntheticSpec};

fn corpus() -> samlp_core::features::FeatureMatrix {
    let spec = SyntheticSpec {
        n_datasets: 1,
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec).remove(0)
}

#[test]
#[ignore]
fn probe_selection() {
    let matrix = corpus();
    let start = Instant::now();
    let result = select_features(&matrix, 10, 5, 7).unwrap();
    println!(
        "selection on 1000x49: {:.2}s, kept {}",
        start.elapsed().as_secs_f64(),
        result.selected_indices.len()
    );
}

#[test]
#[ignore]
fn probe_single_fits() {
    let matrix = corpus();
    let weights = class_weights(&matrix.labels).unwrap();

    let mut gbt = ModelConfig {
        family: Family::Gbt,
        params: Default::default(),
        seed: 1,
    };
    for (k, v) in [
        ("max_depth", ParamValue::Int(10)),
        ("n_estimators", ParamValue::Int(500)),
        ("min_child_weight", ParamValue::Int(1)),
    ] {
        gbt.params.insert(k.into(), v);
    }
    for (k, v) in [
        ("learning_rate", 0.1),
        ("subsample", 1.0),
        ("colsample_bytree", 1.0),
        ("gamma", 0.0),
        ("reg_lambda", 1.0),
    ] {
        gbt.params.insert(k.into(), ParamValue::Float(v));
    }
    let start = Instant::now();
    train(&gbt, &matrix, &weights).unwrap();
    println!("gbt 500x10 on 1000x49: {:.2}s", start.elapsed().as_secs_f64());

    let mut rf = ModelConfig {
        family: Family::RandomForest,
        params: Default::default(),
        seed: 1,
    };
    for (k, v) in [
        ("n_trees", ParamValue::Int(500)),
        ("max_depth", ParamValue::Int(0)),
        ("min_samples_leaf", ParamValue::Int(1)),
        ("bootstrap", ParamValue::Int(1)),
    ] {
        rf.params.insert(k.into(), v);
    }
    rf.params
        .insert("max_features".into(), ParamValue::Text("sqrt".into()));
    let start = Instant::now();
    train(&rf, &matrix, &weights).unwrap();
    println!(
        "rf 500 trees on 1000x49: {:.2}s",
        start.elapsed().as_secs_f64()
    );

    let mut svm = ModelConfig {
        family: Family::Svm,
        params: Default::default(),
        seed: 1,
    };
    svm.params.insert("c".into(), ParamValue::Float(1.0));
    svm.params.insert("epochs".into(), ParamValue::Int(200));
    let start = Instant::now();
    train(&svm, &matrix, &weights).unwrap();
    println!("svm 200 epochs: {:.2}s", start.elapsed().as_secs_f64());
}

#[test]
#[ignore]
fn probe_config_sample_cost_model() {
    // Rough cost of the actual sampled grid: train every sampled config once
    // on a 560-row slice (one CV fold's training portion).
    let matrix = corpus();
    let idx: Vec<usize> = (0..560).collect();
    let fold = matrix.subset_rows(&idx);
    let weights = class_weights(&fold.labels).unwrap();
    let mut configs = Vec::new();
    for space in ParamSpace::all() {
        configs.extend(sample_configs(&space, 50, 99).0);
    }
    println!("sampled {} configs", configs.len());
    let start = Instant::now();
    let mut by_family = std::collections::BTreeMap::new();
    let mut worst: (f64, String) = (0.0, String::new());
    for config in configs.iter() {
        let t = Instant::now();
        train(config, &fold, &weights).unwrap();
        let dt = t.elapsed().as_secs_f64();
        *by_family.entry(format!("{:?}", config.family)).or_insert(0.0) += dt;
        if dt > worst.0 {
            worst = (dt, format!("{:?} {:?}", config.family, config.params));
        }
    }
    println!("by family: {by_family:?}");
    println!("worst: {:.3}s {}", worst.0, worst.1);
    println!(
        "all {} configs once on 560x49: {:.2}s",
        configs.len(),
        start.elapsed().as_secs_f64()
    );
}
