use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    root().join("fixtures").join(rel).to_string_lossy().into_owned()
}

fn wcec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn fixtures_on_disk_match_the_generator() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wcec(&["gen-fixtures", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let on_disk = root().join("fixtures");
    assert_eq!(files_under(tmp.path()), files_under(&on_disk));
    for rel in files_under(tmp.path()) {
        let a = std::fs::read(tmp.path().join(&rel)).unwrap();
        let b = std::fs::read(on_disk.join(&rel)).unwrap();
        assert!(a == b, "{} differs; rerun `wcec gen-fixtures`", rel.display());
    }
}

const FUNCTIONS: [(&str, u64, &str, &str); 12] = [
    ("wifi_hw_deinit", 48, "0.3", "0.3099"),
    ("wifi_setup_interrupt", 178, "1.11", "1.149"),
    ("wifi_setup_rx", 1881, "11.8", "12.14"),
    ("wifi_hw_init", 49, "0.306", "0.3163"),
    ("wifi_transmit_packet", 335, "2.09", "2.163"),
    ("wifi_wait_for_tx", 52184, "326", "336.9"),
    ("wifi_process_tx_done", 157, "0.981", "1.014"),
    ("wifi_handle_rx", 12989, "81.2", "83.85"),
    ("wifi_process_timeout", 138, "0.862", "0.8909"),
    ("wifi_get_bssid", 94, "0.588", "0.6068"),
    ("wifi_mac_handle_rx", 68715, "429", "443.6"),
    ("wifi_interrupt_handler", 943, "5.89", "6.088"),
];

#[test]
fn analyze_renders_the_function_table_in_input_order() {
    let paths: Vec<String> = FUNCTIONS
        .iter()
        .map(|(n, ..)| fixture(&format!("functions/{n}.wcir")))
        .collect();
    let mut args = vec!["analyze"];
    args.extend(paths.iter().map(String::as_str));
    let o = wcec(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows.len(), 12);
    for (row, (name, cycles, us, uj)) in rows.iter().zip(FUNCTIONS) {
        assert_eq!(&row[..4], &[name, &cycles.to_string(), us, uj]);
    }
}

#[test]
fn single_objective_and_exit_codes() {
    let deinit = fixture("functions/wifi_hw_deinit.wcir");
    let o = wcec(&["analyze", "--objective", "wcet", &deinit]);
    assert_eq!(stdout(&o), "wifi_hw_deinit 48\n");
    let o = wcec(&["analyze", "--objective", "always-on", &deinit]);
    assert_eq!(stdout(&o), "wifi_hw_deinit 0.3099 uJ\n");
    let o = wcec(&["analyze", "--objective", "always-on", "--format", "lines", &deinit]);
    assert_eq!(stdout(&o), "wifi_hw_deinit 309870 pJ\n");

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.wcir");
    std::fs::write(&bad, "program p\nblock a cycles=1\nedge a b\nentry a\nexit a\n").unwrap();
    let o = wcec(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.wcir"));
    assert_eq!(wcec(&["analyze"]).status.code(), Some(2));
    assert_eq!(
        wcec(&["analyze", "--objective", "speed", &deinit]).status.code(),
        Some(2)
    );
    assert_eq!(wcec(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn line_format_is_deterministic() {
    let args = [
        "analyze",
        "--format",
        "lines",
        &fixture("tasks/tx_task.wcir"),
        &fixture("functions/wifi_handle_rx.wcir"),
    ];
    let a = wcec(&args);
    let b = wcec(&args);
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert!(out.starts_with("row tx_task 52615 328843.75 339662709.375 "), "{out}");
}

#[test]
fn explicit_model_files_match_the_default() {
    let p = fixture("tasks/tx_task.wcir");
    let default = wcec(&["analyze", &p]);
    let explicit = wcec(&[
        "analyze",
        "--device-graph",
        &fixture("device/esp32c3.dev"),
        "--platform",
        &fixture("device/esp32c3.platform"),
        &p,
    ]);
    assert_eq!(default.stdout, explicit.stdout);

    let tmp = tempfile::tempdir().unwrap();
    let slow = tmp.path().join("slow.platform");
    std::fs::write(&slow, "platform clock_hz=80000000 volts=3.3 cpu_ma=28\n").unwrap();
    let o = wcec(&[
        "analyze",
        "--objective",
        "wcet",
        "--platform",
        slow.to_str().unwrap(),
        &fixture("functions/wifi_hw_deinit.wcir"),
    ]);
    assert_eq!(stdout(&o), "wifi_hw_deinit 48\n");
}

#[test]
fn entry_state_override() {
    let p = fixture("functions/wifi_hw_deinit.wcir");
    let all = wcec(&["analyze", "--objective", "device-aware", "--format", "lines", &p]);
    let sleep = wcec(&[
        "analyze",
        "--objective",
        "device-aware",
        "--format",
        "lines",
        "--entry-states",
        "Sleep",
        &p,
    ]);
    assert_ne!(all.stdout, sleep.stdout);
    let bogus = wcec(&["analyze", "--entry-states", "Warp", &p]);
    assert_eq!(bogus.status.code(), Some(1));
}

#[test]
fn simulate_writes_a_trace_and_checks_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("tx.trace");
    let script = fixture("scripts/ack_max.script");
    let o = wcec(&[
        "simulate",
        "tx",
        "--script",
        &script,
        "--check-twins",
        "--check-bound",
        "32.15",
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert!(out.contains("outcome acked") && out.contains(" pass ") && out.contains("violations 0"));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.lines().any(|l| l.ends_with(" Transmitting")));
    assert!(text.contains("total_energy_pj "));

    let o = wcec(&["simulate", "tx", "--script", &script, "--check-bound", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    let o = wcec(&["simulate", "tx", "--script", "/does/not/exist"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(wcec(&["simulate", "tx"]).status.code(), Some(2));
}

#[test]
fn simulate_rx_burst_delivers_frames() {
    let o = wcec(&[
        "simulate",
        "rx",
        "--script",
        &fixture("scripts/rx_burst.script"),
        "--window-ns",
        "200000",
        "--check-twins",
    ]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert!(
        out.contains("delivered_frames 3") && out.contains("violations 0"),
        "{out}"
    );
}

#[test]
fn export_lp_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.lp");
    let b = tmp.path().join("b.lp");
    let p = fixture("functions/wifi_wait_for_tx.wcir");
    for out in [&a, &b] {
        let o = wcec(&[
            "export-lp",
            &p,
            "--objective",
            "device-aware",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.contains("Maximize") && text.contains("Generals") && text.trim_end().ends_with("End"));
    let o = wcec(&["export-lp", &p, "--objective", "fastest"]);
    assert_eq!(o.status.code(), Some(2));
}

fn report_value<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in\n{out}"))
}

#[test]
fn lifecycle_configs() {
    let o = wcec(&["lifecycle", &fixture("lifecycle/demo.toml")]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert_eq!(report_value(&out, "brownouts"), "0");
    assert!(report_value(&out, "completions").parse::<u64>().unwrap() >= 30);
    assert_eq!(report_value(&out, "min_completions_per_period"), "1");

    let out = stdout(&wcec(&["lifecycle", &fixture("lifecycle/zero_harvest.toml")]));
    assert_eq!(report_value(&out, "completions"), "0");
    assert_eq!(report_value(&out, "brownouts"), "0");

    let out = stdout(&wcec(&["lifecycle", &fixture("lifecycle/power_cut.toml")]));
    assert_eq!(report_value(&out, "brownouts"), "0");
    assert_eq!(report_value(&out, "starved"), "true");

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "horizon_ms = \"soon\"\n").unwrap();
    assert_eq!(wcec(&["lifecycle", bad.to_str().unwrap()]).status.code(), Some(1));
}
