//! Self-check suite behind `spade verify`: oracle agreements and structural
//! identities, deterministic across runs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spade_core::detectors::{
    amf_score, brute_force_glrt, brute_force_glrt_gaussian, clairvoyant_gauss_score,
    clairvoyant_score, ec2spade_score, ec_amf_score, ec_ftmf_score, ftmf_score,
    gauss2spade_score, make_target_context,
};
use spade_core::sim::{run_trial, Scenario};
use spade_core::{eval, BackgroundModel};

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn fig1_fixture() -> (BackgroundModel, spade_core::TargetContext, Vec<DVector<f64>>) {
    let scenario = Scenario::fig1();
    let model = scenario.background().expect("preset model is valid");
    let ctx = make_target_context(&model, scenario.target_signature()).expect("preset target");
    let batch = model.sample(240, 31, 0);
    let pixels = batch
        .rows
        .into_iter()
        .enumerate()
        .map(|(i, z)| {
            if i % 2 == 0 {
                z
            } else {
                0.55 * z + 0.2 * ctx.target()
            }
        })
        .collect();
    (model, ctx, pixels)
}

fn check_rejector_identities() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = 3 + rng.gen_range(0..8);
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = &a * a.transpose() / d as f64 + DMatrix::identity(d, d);
        let mean = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let model = BackgroundModel::new(mean, cov, 4.0 + 10.0 * rng.gen::<f64>()).unwrap();
        let target = DVector::from_fn(d, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
        // Construction itself verifies Q = R^-1 - qq'; re-check Qt = 0 here.
        let ctx = match make_target_context(&model, target.clone()) {
            Ok(ctx) => ctx,
            Err(e) => {
                return CheckResult {
                    name: "rejector-identities",
                    pass: false,
                    detail: format!("construction failed: {e}"),
                }
            }
        };
        let qt = (ctx.rejector() * &target).amax()
            / (ctx.rejector().amax().max(1.0) * target.amax().max(1.0));
        worst = worst.max(qt);
    }
    CheckResult {
        name: "rejector-identities",
        pass: worst <= 1e-10,
        detail: format!("max scaled |Q t| = {worst:.3e} over 20 random models"),
    }
}

fn check_grid_oracle() -> CheckResult {
    let (model, ctx, pixels) = fig1_fixture();
    let mut worst: f64 = 0.0;
    for x in pixels.iter().take(12) {
        let est = ec2spade_score(&ctx, &model, x).unwrap();
        let oracle =
            brute_force_glrt(&ctx, &model, x, (-8.0, 8.0), (1e-3, 1.0), (201, 201)).unwrap();
        worst = worst.max((est.log_score - oracle.log_score).abs());
        let est = gauss2spade_score(&ctx, &model, x).unwrap();
        let oracle =
            brute_force_glrt_gaussian(&ctx, &model, x, (-8.0, 8.0), (1e-3, 1.0), (201, 201))
                .unwrap();
        worst = worst.max((est.log_score - oracle.log_score).abs());
    }
    CheckResult {
        name: "glrt-grid-oracle",
        pass: worst <= 1e-6,
        detail: format!("max |closed form - grid| = {worst:.3e} over 12 pixels"),
    }
}

fn check_gaussian_limit() -> CheckResult {
    let scenario = Scenario {
        nu: 1e8,
        ..Scenario::fig1()
    };
    let model = scenario.background().unwrap();
    let ctx = make_target_context(&model, scenario.target_signature()).unwrap();
    let batch = model.sample(200, 32, 0);
    let mut worst: f64 = 0.0;
    for (i, z) in batch.rows.iter().enumerate() {
        let x = if i % 2 == 0 {
            z.clone()
        } else {
            0.55 * z + 0.2 * ctx.target()
        };
        let pairs = [
            (
                ec2spade_score(&ctx, &model, &x).unwrap().log_score,
                gauss2spade_score(&ctx, &model, &x).unwrap().log_score,
            ),
            (
                ec_amf_score(&ctx, &model, &x).unwrap(),
                amf_score(&ctx, &x).unwrap(),
            ),
            (
                ec_ftmf_score(&ctx, &model, &x).unwrap(),
                ftmf_score(&ctx, &model, &x).unwrap(),
            ),
            (
                clairvoyant_score(&ctx, &model, &x, 0.2, 0.55).unwrap(),
                clairvoyant_gauss_score(&ctx, &model, &x, 0.2, 0.55).unwrap(),
            ),
        ];
        for (ec, gauss) in pairs {
            worst = worst.max((ec - gauss).abs() / ec.abs().max(gauss.abs()).max(1e-9));
        }
    }
    CheckResult {
        name: "gaussian-limit",
        pass: worst <= 1e-3,
        detail: format!("max relative gap at nu = 1e8: {worst:.3e} over 200 pixels"),
    }
}

fn check_auc_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst: f64 = 0.0;
    let mut invariant = true;
    for _ in 0..3 {
        let h0: Vec<f64> = (0..800)
            .map(|_| (rng.gen_range(-40..40) as f64) / 8.0)
            .collect();
        let h1: Vec<f64> = (0..700)
            .map(|_| (rng.gen_range(-32..48) as f64) / 8.0)
            .collect();
        let curve = eval::roc(&h0, &h1).unwrap();
        let mut wins = 0.0;
        for &s1 in &h1 {
            for &s0 in &h0 {
                if s1 > s0 {
                    wins += 1.0;
                } else if s1 == s0 {
                    wins += 0.5;
                }
            }
        }
        let oracle = wins / (h0.len() * h1.len()) as f64;
        worst = worst.max((curve.auc() - oracle).abs());

        let t0: Vec<f64> = h0.iter().map(|&s| (0.3 * s).exp()).collect();
        let t1: Vec<f64> = h1.iter().map(|&s| (0.3 * s).exp()).collect();
        let mapped = eval::roc(&t0, &t1).unwrap();
        invariant &= mapped.points() == curve.points();
    }
    CheckResult {
        name: "roc-auc-oracle",
        pass: worst <= 1e-12 && invariant,
        detail: format!(
            "max |trapezoid - pairwise| = {worst:.3e}; monotone-transform invariance: {invariant}"
        ),
    }
}

fn check_determinism() -> CheckResult {
    let scenario = Scenario {
        n_pairs: 256,
        n_trials: 1,
        ..Scenario::fig1()
    };
    let a = run_trial(&scenario, 0).unwrap();
    let b = run_trial(&scenario, 0).unwrap();
    let same = a
        .per_detector
        .iter()
        .zip(&b.per_detector)
        .all(|(x, y)| x.h0 == y.h0 && x.h1 == y.h1);
    CheckResult {
        name: "determinism",
        pass: same && a.fingerprint == b.fingerprint,
        detail: "repeated trial is bit-identical".to_string(),
    }
}

/// Runs every check and prints the pass/fail table; returns the exit code.
pub fn cmd_verify() -> i32 {
    let checks = [
        check_rejector_identities(),
        check_grid_oracle(),
        check_gaussian_limit(),
        check_auc_oracle(),
        check_determinism(),
    ];
    println!("{:<22} {:<6} detail", "check", "result");
    let mut all = true;
    for c in &checks {
        println!(
            "{:<22} {:<6} {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
        all &= c.pass;
    }
    if all {
        0
    } else {
        1
    }
}
