use vote_harness_demo::{alpha, scores, vote};

#[test]
fn majority_of_three() {
    let out = vote("1 0 1\n0 0 1\n# comment\n\n1 1 1\n", "error_on_tie").unwrap();
    assert_eq!(out, "1  2/3\n0  1/3\n1  3/3\n");
}

#[test]
fn ties_follow_the_policy() {
    let grid = "1 0\n0 0\n";
    assert_eq!(vote(grid, "favor_positive").unwrap(), "1  1/2  tie\n0  0/2\n");
    assert_eq!(vote(grid, "favor_negative").unwrap(), "0  1/2  tie\n0  0/2\n");
    assert!(vote(grid, "error_on_tie").unwrap_err().contains("even"));
    let seeded = vote(grid, "seeded_random:42").unwrap();
    assert_eq!(seeded, vote(grid, "seeded_random:42").unwrap());
    assert!(seeded.lines().next().unwrap().ends_with("tie"));
}

#[test]
fn malformed_ballots_are_reported() {
    assert!(vote("", "").unwrap_err().contains("no ballots"));
    assert!(vote("1 0 1\n1 0\n", "").unwrap_err().contains("line 2"));
    assert!(vote("1 2 1\n", "").unwrap_err().contains("`2`"));
    assert!(vote("1\n", "coin_flip").unwrap_err().contains("unknown tie policy"));
}

#[test]
fn macro_scores_from_counts() {
    let v: serde_json::Value = serde_json::from_str(&scores(5, 3, 2, 10)).unwrap();
    // Positive class: P 5/8, R 5/7, F1 2/3. Negative class: P 10/12, R 10/13, F1 4/5.
    let close = |key: &str, want: f64| assert!((v[key].as_f64().unwrap() - want).abs() < 1e-12, "{key}");
    close("macro_precision", (5.0 / 8.0 + 10.0 / 12.0) / 2.0);
    close("macro_recall", (5.0 / 7.0 + 10.0 / 13.0) / 2.0);
    close("macro_f1", (2.0 / 3.0 + 4.0 / 5.0) / 2.0);
}

#[test]
fn empty_matrix_scores_zero() {
    let v: serde_json::Value = serde_json::from_str(&scores(0, 0, 0, 0)).unwrap();
    assert_eq!(v["macro_f1"].as_f64(), Some(0.0));
}

#[test]
fn alpha_worked_example() {
    let a = alpha("0 0\n0 1\n1 1\n1 1\n").unwrap();
    assert!((a - 8.0 / 15.0).abs() < 1e-12, "{a}");
}

#[test]
fn alpha_skips_missing_ratings() {
    let with_gap = alpha("0 0 .\n0 1 .\n1 1 .\n1 1 .\n. . 1\n").unwrap();
    assert!((with_gap - 8.0 / 15.0).abs() < 1e-12, "{with_gap}");
    assert!(alpha("0 0\n0\n").unwrap_err().contains("line 2"));
    assert!(alpha("0\n1\n").is_err());
}
