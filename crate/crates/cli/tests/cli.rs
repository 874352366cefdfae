use std::fmt::Write as _;
use std::process::Command;

fn pssc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pssc"))
}

fn write_toy_csv(path: &std::path::Path) {
    let mut text = String::new();
    for i in 0..40u64 {
        let class = i % 2;
        write!(text, "{class}").unwrap();
        for r in 0..8u64 {
            for c in 0..8u64 {
                let on = if class == 0 { r < 4 && c < 4 } else { r >= 4 && c >= 4 };
                let jitter = ((i * 31 + r * 17 + c * 7) * 2_654_435_761 % 1000) as f64 * 1e-4;
                write!(text, ",{}", if on { 0.9 + jitter } else { jitter }).unwrap();
            }
        }
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn cluster_writes_report_from_config_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_toy_csv(&csv);
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        format!(
            "dataset = csv\ncsv-path = {}\nj = 2\nl = 4\npad-size = 16\npca-dim = 10\nuse-poc = false\np-prime = 30\np = 8\nknn = 3\ntrials = 1\n",
            csv.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let status = pssc()
        .args(["cluster", "--config"])
        .arg(&config)
        .args(["--seed", "7", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["seeds"], serde_json::json!([7]));
    assert_eq!(report["config"]["p-prime"], 30);
    assert!(dir.path().join("report_assignments_seed7.csv").exists());
}

#[test]
fn missing_dataset_fails_with_stage_message() {
    let output = pssc()
        .args(["cluster", "--dataset", "mnist-test", "--data-dir", "/nonexistent", "--trials", "1"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("stage load"), "{stderr}");
}

#[test]
fn bad_flag_value_is_rejected() {
    let output = pssc().args(["cluster", "--trials", "many"]).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("--trials"));
}
