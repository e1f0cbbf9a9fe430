use std::fs;
use std::path::Path;

use npi_core::design::{build_design, ColumnLabel, EstimationSpec, Variant};
use npi_core::estimator::{estimate, estimate_design, fit_least_squares, normal_equations_solve};
use npi_core::ingest::{export_panel, write_canonical, CanonicalFileSet};
use npi_core::simgen::{simulate_linear_panel, simulate_sir_panel, LinearDgpConfig, SirDgpConfig};
use npi_core::{MobilityCategory, OutcomeKind, PolicyKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(noise_sd: f64) -> LinearDgpConfig {
    LinearDgpConfig {
        n_countries: 35,
        n_days: 100,
        gamma_time: (0..100).map(|t| 0.02 * t as f64).collect(),
        noise_sd,
        seed: 41,
        ..LinearDgpConfig::default()
    }
}

fn residential(variant: Variant) -> EstimationSpec {
    EstimationSpec::new(
        PolicyKind::SchoolClosure,
        OutcomeKind::MobilityDeviation(MobilityCategory::Residential),
        variant,
    )
}

fn shuffle_body(path: &Path, rng: &mut ChaCha8Rng) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].shuffle(rng);
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn ingest_order_does_not_matter() {
    let (data, _) = simulate_linear_panel(&small(0.1)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_canonical(
        tmp.path(),
        &data.schedules,
        &data.epi,
        &data.mobility,
        &data.covariates,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in ["policies.csv", "cases.csv", "mobility.csv", "covariates.csv"] {
        shuffle_body(&tmp.path().join(f), &mut rng);
    }
    let panel = CanonicalFileSet::load_dir(tmp.path())
        .unwrap()
        .build_panel()
        .unwrap();
    assert_eq!(panel, data.panel);

    let spec = residential(Variant::MultiEventIntensity);
    let a = estimate(&panel, &spec).unwrap();
    let b = estimate(&data.panel, &spec).unwrap();
    assert_eq!(a.coefficients, b.coefficients);
}

#[test]
fn exported_panel_reingests_identically() {
    let (data, _) = simulate_linear_panel(&small(0.3)).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    export_panel(&data.panel, &first).unwrap();
    let panel = CanonicalFileSet::load_dir(&first).unwrap().build_panel().unwrap();
    assert_eq!(panel, data.panel);

    let second = tmp.path().join("second");
    export_panel(&panel, &second).unwrap();
    for f in ["policies.csv", "cases.csv", "mobility.csv", "covariates.csv"] {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn custom_window_recovers_truth_without_noise() {
    let (lo, hi, reference) = (-8i64, 15i64, -1i64);
    let cfg = LinearDgpConfig {
        window_lo: lo,
        window_hi: hi,
        reference,
        true_alpha: (lo..=hi)
            .map(|j| if j < 0 { 0.0 } else { -0.1 - 0.01 * j as f64 })
            .collect(),
        true_beta: (lo..=hi).map(|j| 0.05 * j as f64).collect(),
        ..small(0.0)
    };
    let (data, truth) = simulate_linear_panel(&cfg).unwrap();
    let mut spec = residential(Variant::MultiEventIntensity);
    spec.window_lo = lo;
    spec.window_hi = hi;
    spec.reference = reference;
    let problem = build_design(&data.panel, &spec).unwrap();
    let result = estimate_design(&problem, &spec).unwrap();
    assert!(result.diagnostics.dropped_columns.is_empty());
    for (label, coef) in result.labels.iter().zip(&result.coefficients) {
        let expected = truth
            .expected_coefficient(label, &problem.reference_levels)
            .unwrap();
        assert!((coef - expected).abs() < 1e-6, "{label}: {coef} vs {expected}");
    }
    let at_ref = result.at(reference).unwrap();
    assert_eq!((at_ref.alpha, at_ref.se), (0.0, 0.0));
}

#[test]
fn qr_fit_agrees_with_library_oracle_on_panel_design() {
    let (data, _) = simulate_linear_panel(&small(0.5)).unwrap();
    let spec = residential(Variant::SingleEventIntensity);
    let problem = build_design(&data.panel, &spec).unwrap();
    let fit = fit_least_squares(&problem).unwrap();
    assert!(fit.dropped.is_empty());
    let oracle = normal_equations_solve(&problem).unwrap();
    for (a, b) in fit.coefficients.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn lone_policy_drops_empty_concurrent_columns() {
    let cfg = SirDgpConfig::staggered_single_policy(30, PolicyKind::StayAtHome, 0.5, 8);
    let (data, _) = simulate_sir_panel(&cfg).unwrap();
    let spec = EstimationSpec::new(
        PolicyKind::StayAtHome,
        OutcomeKind::CasesIhsMa3,
        Variant::MultiEventIntensity,
    );
    let result = estimate(&data.panel, &spec).unwrap();
    let expected: Vec<String> = spec
        .event_times()
        .map(|j| ColumnLabel::Concurrent(j).to_string())
        .collect();
    assert_eq!(result.diagnostics.dropped_columns, expected);
    assert!(result.estimates.iter().all(|e| e.beta.unwrap().is_nan()));
    assert!(result.estimates.iter().all(|e| e.alpha.is_finite()));

    let single = EstimationSpec {
        variant: Variant::SingleEventIntensity,
        ..spec
    };
    let other = estimate(&data.panel, &single).unwrap();
    for (a, b) in result.estimates.iter().zip(&other.estimates) {
        assert!((a.alpha - b.alpha).abs() < 1e-9 && (a.se - b.se).abs() < 1e-9);
    }
}

#[test]
fn dummy_variants_run_on_simulated_panel() {
    let (data, _) = simulate_linear_panel(&small(0.1)).unwrap();
    for variant in [Variant::SingleEventDummy, Variant::MultiEventDummy] {
        let result = estimate(&data.panel, &residential(variant)).unwrap();
        assert_eq!(result.estimates.len(), 56);
        assert_eq!(result.estimates[0].beta.is_some(), variant.is_multi());
        assert!(result
            .estimates
            .iter()
            .skip(1)
            .all(|e| e.se > 0.0 && e.ci_lo < e.alpha && e.alpha < e.ci_hi));
    }
}
