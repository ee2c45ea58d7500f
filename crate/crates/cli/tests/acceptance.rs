//! Acceptance gate. Each test prints one `criterion N: PASS|FAIL` line and
//! fails when its criterion does. Lines go straight to stderr so they show
//! without `--nocapture`.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use merminlab::mermin::{canonical_operator, lhv_max_bruteforce, CoefficientTable};
use merminlab::verify::{
    check_closed_form, check_determinism, check_lhv, check_noise_trend, check_sampled_soundness,
    check_sum_rule, check_table_consistency, check_table_one, check_theta_exact,
    check_theta_sampled, check_topology, Check, VerifyOptions,
};

const CLOSED_FORM_BUDGET: Duration = Duration::from_secs(5);
const LHV_BUDGET: Duration = Duration::from_secs(60);

fn report(criterion: u8, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion}: {verdict} ({detail})\n");
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn report_checks(criterion: u8, checks: &[Check]) {
    let passed = checks.iter().all(|c| c.passed);
    let detail: Vec<&str> = checks.iter().map(|c| c.summary.as_str()).collect();
    report(criterion, passed, &detail.join("; "));
}

#[test]
fn criterion_1_closed_form() {
    let start = Instant::now();
    let check = check_closed_form(&CoefficientTable::standard()).unwrap();
    let elapsed = start.elapsed();
    let within = elapsed < CLOSED_FORM_BUDGET;
    report(
        1,
        check.passed && within,
        &format!("{}; {:.2?} of {:?} budget", check.summary, elapsed, CLOSED_FORM_BUDGET),
    );
}

#[test]
fn criterion_2_table_one_maxima() {
    report_checks(2, &[check_table_one(&CoefficientTable::standard()).unwrap()]);
}

#[test]
fn criterion_3_sum_rule() {
    report_checks(3, &[check_sum_rule(&CoefficientTable::standard()).unwrap()]);
}

#[test]
fn criterion_4_lhv_bound() {
    let check = check_lhv(&CoefficientTable::standard()).unwrap();
    let expected = [2.0, 2.0, 4.0, 4.0, 8.0];
    let found: Vec<f64> = (0..5)
        .map(|i| check.data[i]["bruteforce"].as_f64().unwrap())
        .collect();

    let pair = canonical_operator(6).unwrap();
    let start = Instant::now();
    let six = lhv_max_bruteforce(&pair).unwrap();
    let elapsed = start.elapsed();

    report(
        4,
        check.passed && found == expected && six == 8.0 && elapsed < LHV_BUDGET,
        &format!("bounds {found:?}; n=6 search {elapsed:.2?} of {LHV_BUDGET:?} budget"),
    );
}

#[test]
fn criterion_5_recursion_matches_table() {
    report_checks(5, &[check_table_consistency(&CoefficientTable::standard()).unwrap()]);
}

#[test]
fn criterion_6_theta_radius() {
    let opts = VerifyOptions::default();
    report_checks(
        6,
        &[check_theta_exact().unwrap(), check_theta_sampled(&opts).unwrap()],
    );
}

#[test]
fn sampled_estimates_are_statistically_sound() {
    let check = check_sampled_soundness(&VerifyOptions::default()).unwrap();
    let verdict = if check.passed { "PASS" } else { "FAIL" };
    std::io::stderr()
        .write_all(format!("sampled soundness: {verdict}\n").as_bytes())
        .unwrap();
    assert!(check.passed, "{}", check.data);
}

#[test]
fn criterion_7_topology() {
    let check = check_topology().unwrap();
    let enumerated = check.data["three_qubit"]["enumerated"].as_u64().unwrap();
    let two: u64 = check.data["chain_counts"][0]["paths"].as_u64().unwrap();
    report(
        7,
        check.passed && two == 58,
        &format!(
            "{}; 3-qubit discrepancy {}",
            check.summary, check.data["three_qubit"]["discrepancy"]
        ),
    );
    assert!(enumerated > 0);
}

#[test]
fn criterion_8_noise_trend() {
    let check = check_noise_trend(&VerifyOptions::default()).unwrap();
    report_checks(8, &[check]);
}

fn merminlab(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_merminlab"))
        .args(args)
        .env_remove("MERMINLAB_SEED")
        .output()
        .expect("binary runs");
    out.stdout
}

#[test]
fn criterion_9_determinism() {
    let in_process = check_determinism(&VerifyOptions::default()).unwrap();

    let run_args = [
        "run", "--n", "3", "--seed", "17", "--shots", "1024", "--repeats", "5",
    ];
    let run_a = merminlab(&run_args);
    let run_b = merminlab(&run_args);
    let verify_a = merminlab(&["verify"]);
    let verify_b = merminlab(&["verify"]);

    let runs_equal = !run_a.is_empty() && run_a == run_b;
    let verifies_equal = !verify_a.is_empty() && verify_a == verify_b;
    report(
        9,
        in_process.passed && runs_equal && verifies_equal,
        &format!(
            "run outputs identical: {runs_equal}; verify outputs identical: {verifies_equal}"
        ),
    );
}
