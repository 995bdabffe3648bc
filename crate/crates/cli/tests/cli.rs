use paradarp::ingestion::{write_records, ColumnMapping};
use paradarp::synthetic::{synthetic_day, FIXTURE_SEED};
use paradarp::{Direction, RawTripRecord};
use serde_json::Value;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn paradarp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paradarp")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {} stderr {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn day_csv(dir: &Path) -> PathBuf {
    let path = dir.join("day.csv");
    write_records(&path, &synthetic_day(FIXTURE_SEED), &ColumnMapping::default()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_writes_one_file_per_period_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let csv = day_csv(dir.path());
    let out_dir = dir.path().join("inst");
    let out = paradarp(&["ingest", "--input", s(&csv), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["cleaning"]["kept"], 58);
    assert_eq!(v["instances"].as_array().unwrap().len(), 22);
    assert!(out_dir.join("0500_om.json").exists());
    assert!(out_dir.join("1600_um.json").exists());
}

#[test]
fn solve_period_of_a_log() {
    let dir = tempfile::tempdir().unwrap();
    let csv = day_csv(dir.path());
    let out =
        paradarp(&["solve", "--input", s(&csv), "--period", "6", "--model", "both", "--vehicles", "3", "--oracle"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["status"], "optimal");
        assert_eq!(r["orders"], 4);
        assert_eq!(r["period"], "06:00-07:00");
        assert_eq!(r["oracle"]["agrees"], true);
    }
    assert_eq!(rows[0]["model"], "operator");
    assert_eq!(rows[1]["model"], "user");
    let om = rows[0]["objective"].as_f64().unwrap();
    assert!((om - rows[0]["operating_time"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn solve_instance_file_with_exports() {
    let dir = tempfile::tempdir().unwrap();
    let csv = day_csv(dir.path());
    let out_dir = dir.path().join("inst");
    assert_eq!(code(&paradarp(&["ingest", "-i", s(&csv), "--out-dir", s(&out_dir), "--period", "15:00"])), 0);
    let lp = dir.path().join("m.lp");
    let mps = dir.path().join("m.mps");
    let inst = out_dir.join("1500_um.json");
    let out =
        paradarp(&["solve", "--instance", s(&inst), "--dump-lp", s(&lp), "--export-mps", s(&mps), "--output", "csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("name,period,orders,model,status"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("1500_um,,2,um,optimal,"), "{row}");
    assert!(std::fs::read_to_string(&lp).unwrap().contains("Subject To"));
    assert!(std::fs::read_to_string(&mps).unwrap().contains("ROWS"));

    let out = paradarp(&["solve", "--instance", s(&inst), "--model", "both", "--export-mps", s(&mps)]);
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("m_1500_um_om.mps").exists());
    assert!(dir.path().join("m_1500_um_um.mps").exists());
}

fn tight_trip() -> RawTripRecord {
    RawTripRecord {
        id: Some("t1".into()),
        date: Some("2019-07-15".into()),
        direction: Some(Direction::Inbound),
        scheduled_pickup: Some(480),
        scheduled_dropoff: Some(481),
        actual_pickup: Some(480),
        actual_dropoff: Some(500),
        appointment: Some(481),
        pickup_lat: Some(35.0),
        pickup_lon: Some(-80.0),
        dropoff_lat: Some(35.2),
        dropoff_lon: Some(-80.2),
        distance_km: Some(30.0),
        cost: Some(20.0),
        mobility_aid: Some(false),
    }
}

#[test]
fn infeasible_period_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tight.csv");
    write_records(&csv, &[tight_trip()], &ColumnMapping::default()).unwrap();
    let out = paradarp(&["solve", "-i", s(&csv), "--window", "0"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)[0]["status"], "infeasible");
}

#[test]
fn time_limit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = day_csv(dir.path());
    let out = paradarp(&["solve", "-i", s(&csv), "--period", "10", "--time-limit", "0.05"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let status = json(&out)[0]["status"].clone();
    assert!(status == "feasible" || status == "time_limit_no_solution", "{status}");
}

#[test]
fn input_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(code(&paradarp(&["solve", "-i", s(&missing)])), 4);
    assert_eq!(code(&paradarp(&["solve", "--period", "8"])), 4);
    assert_eq!(code(&paradarp(&["solve", "-i", s(&missing), "--period", "25"])), 4);
    let csv = day_csv(dir.path());
    assert_eq!(code(&paradarp(&["solve", "-i", s(&csv), "--period", "3"])), 4);
    assert_eq!(code(&paradarp(&["solve", "-i", s(&csv), "--interval", "7"])), 4);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    assert_eq!(code(&paradarp(&["solve", "--instance", s(&bad)])), 4);
    assert_eq!(code(&paradarp(&["--help"])), 0);
}

#[test]
fn report_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = day_csv(dir.path());
    let base = ["report", "-i", s(&csv), "--period", "6", "--jobs", "2"];
    let table = paradarp(&base);
    assert_eq!(code(&table), 0, "{}", String::from_utf8_lossy(&table.stderr));
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.contains("6 am - 7 am") && text.contains("Total") && text.contains("OM Vars"));

    let v = json(&paradarp(&[&base[..], &["--format", "json"]].concat()));
    let row = &v["evaluation"]["rows"][0];
    assert_eq!(row["orders"], 4);
    assert!(row["um_um"].as_f64().unwrap() <= row["um_raw"].as_f64().unwrap());

    let csv_out = paradarp(&[&base[..], &["--format", "csv"]].concat());
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let line = text.lines().nth(1).unwrap();
    let cells: Vec<&str> = line.split(',').collect();
    assert_eq!(cells[1], "4");
    assert_eq!(cells[3].parse::<f64>().unwrap(), row["um_um"].as_f64().unwrap());
}

/// Answers every distance-matrix request with a fixed duration.
fn mock_matrix_server(seconds: u32) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/matrix", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            let dests = request_line.split("destinations=").nth(1).unwrap_or("").split(['&', ' ']).next().unwrap();
            let count = dests.matches("%7C").count() + dests.matches('|').count() + 1;
            let element = format!(r#"{{"status":"OK","duration":{{"value":{seconds}}}}}"#);
            let body = format!(r#"{{"status":"OK","rows":[{{"elements":[{}]}}]}}"#, vec![element; count].join(","));
            let resp = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    url
}

#[test]
fn matrix_prefetch_fills_the_cache_once() {
    let dir = tempfile::tempdir().unwrap();
    let csv = day_csv(dir.path());
    let cache = dir.path().join("tt.json");
    let url = mock_matrix_server(600);
    let args = ["matrix", "-i", s(&csv), "--period", "5", "--tt-cache", s(&cache), "--endpoint", &url];
    let first = paradarp(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let v = json(&first);
    assert_eq!(v["cached_before"], 0);
    // Depot plus one pickup and one dropoff: 3 distinct points, 6 ordered pairs.
    assert_eq!(v["cached_after"], 6);
    assert!(v["requests_sent"].as_u64().unwrap() >= 1);

    let again = json(&paradarp(&args));
    assert_eq!(again["cached_before"], 6);
    assert_eq!(again["requests_sent"], 0);

    // The cached minutes now drive a solve without network access.
    let out = paradarp(&[
        "solve",
        "-i",
        s(&csv),
        "--period",
        "5",
        "--tt-cache",
        s(&cache),
        "--endpoint",
        "http://127.0.0.1:9/",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}
