//! Acceptance suite: one test per built-in check, each printing its
//! one-line PASS/FAIL verdict (run with `--nocapture` to see them all).

use airbeam::selftest;

fn assert_check(result: selftest::CheckResult) {
    println!("{}", result.line());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn rate_mse_identity() {
    assert_check(selftest::rate_mse_identity());
}

#[test]
fn equalizer_optimality() {
    assert_check(selftest::equalizer_optimality());
}

#[test]
fn precoder_stationarity() {
    assert_check(selftest::precoder_stationarity());
}

#[test]
fn bcd_monotonicity() {
    assert_check(selftest::bcd_monotonicity());
}

#[test]
fn waterfilling_oracle() {
    assert_check(selftest::waterfilling_oracle());
}

#[test]
fn baseline_dominance() {
    assert_check(selftest::baseline_dominance());
}

#[test]
fn robust_csi_gain() {
    assert_check(selftest::robust_csi_gain());
}

#[test]
fn monte_carlo_consistency() {
    assert_check(selftest::monte_carlo_consistency());
}

#[test]
fn channel_statistics() {
    assert_check(selftest::channel_statistics());
}

#[test]
fn power_constraints() {
    assert_check(selftest::power_constraints());
}

#[test]
fn sweep_determinism() {
    assert_check(selftest::sweep_determinism());
}
