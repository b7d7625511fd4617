//! Black-box tests of the installed binary: exit codes, flags, stdout.

use std::path::Path;
use std::process::{Command, Output};

fn cashcast(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cashcast"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_fixture(dir: &Path) {
    let mut csv = String::from("date,amount\n");
    let mut date = chrono_lite_start();
    let mut day = 0usize;
    while day < 140 {
        let (y, m, d, weekday) = date;
        if weekday < 5 {
            // weekday effects plus day-of-month spikes, same shape the
            // library tests use
            let effects = [-3000.0, 200.0, 500.0, -200.0, 2500.0];
            let mut v = effects[weekday];
            if d == 8 {
                v += 30000.0;
            }
            if d == 24 {
                v -= 30000.0;
            }
            // deterministic jitter so the policy quantiles are distinct
            v += ((day * 37 % 11) as f64 - 5.0) * 10.0;
            csv.push_str(&format!("{y:04}-{m:02}-{d:02},{v}\n"));
            day += 1;
        }
        date = next_day(date);
    }
    std::fs::write(dir.join("flows.csv"), csv).unwrap();
    std::fs::write(
        dir.join("run.toml"),
        "input = \"flows.csv\"\nhorizon = 10\nrisk_levels = [0.1]\n\
         scenarios = [\"ml_q15_f2\"]\nsigma_scales = [0.0, 0.5]\nseed = 4\n",
    )
    .unwrap();
}

/// (year, month, day, weekday with Monday = 0) starting Monday 2015-06-01.
fn chrono_lite_start() -> (i32, u32, u32, usize) {
    (2015, 6, 1, 0)
}

fn next_day((y, m, d, w): (i32, u32, u32, usize)) -> (i32, u32, u32, usize) {
    let days_in_month = match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ => 28, // 2015 is not a leap year
    };
    let w = (w + 1) % 7;
    if d < days_in_month {
        (y, m, d + 1, w)
    } else if m < 12 {
        (y, m + 1, 1, w)
    } else {
        (y + 1, 1, 1, w)
    }
}

#[test]
fn missing_config_flag_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = cashcast(&["summarize"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--config"), "{stderr}");
}

#[test]
fn invalid_config_exits_nonzero_with_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "input = \"x.csv\"\ng_fraction = 2.0").unwrap();
    let out = cashcast(&["summarize", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("g_fraction"), "{stderr}");
}

#[test]
fn summarize_prints_the_artifact_path() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = cashcast(&["summarize", "--config", "run.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("summary.csv"), "{stdout}");
    assert!(dir.path().join("out/summary.csv").exists());
}

#[test]
fn out_and_seed_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = cashcast(
        &["summarize", "--config", "run.toml", "--out", "elsewhere", "--seed", "77"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("elsewhere/summary.csv")).unwrap();
    assert!(text.starts_with("# cashcast seed=77 config="), "{text}");
}

#[test]
fn sweep_plot_format_writes_the_svg() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = cashcast(
        &["sweep", "--config", "run.toml", "--format", "csv+plot"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/sweep.csv").exists());
    assert!(dir.path().join("out/sweep.svg").exists());
}

#[test]
fn unreadable_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "input = \"missing.csv\"").unwrap();
    let out = cashcast(&["cv", "--config", "run.toml"], dir.path());
    assert!(!out.status.success());
}
