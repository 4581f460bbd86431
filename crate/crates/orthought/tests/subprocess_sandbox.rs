//! The subprocess sandbox port against stub worker scripts.
#![cfg(unix)]

use std::path::Path;
use std::time::{Duration, Instant};

use orthought::{RunRequest, SubprocessSandbox};
use orthought_core::{DiagnosisKind, ExecStatus, ExecutionLimits, ReturnValue, SandboxPort, detect};

fn worker(script: &str) -> SubprocessSandbox {
    SubprocessSandbox::new(vec!["sh".into(), "-c".into(), script.into()])
}

fn limits(timeout_s: f64) -> ExecutionLimits {
    ExecutionLimits {
        timeout_s,
        ..ExecutionLimits::default()
    }
}

#[test]
fn request_goes_out_as_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let capture = dir.path().join("request.json");
    let sandbox =
        worker(r#"IFS= read -r line; printf '%s\n' "$line" > "$CAPTURE"; echo '{"status":"returned","returned":1}'"#)
            .with_env("CAPTURE", capture.to_string_lossy())
            .with_entry("solve_logistics");
    let l = ExecutionLimits {
        timeout_s: 12.5,
        memory_mb: 512,
        capture_limit_bytes: 2048,
    };
    sandbox.execute("def solve_logistics():\n    return 1\n", &l).unwrap();
    let text = std::fs::read_to_string(&capture).unwrap();
    assert_eq!(text.lines().count(), 1);
    let req: RunRequest = serde_json::from_str(&text).unwrap();
    assert_eq!(
        req,
        RunRequest {
            code: "def solve_logistics():\n    return 1\n".into(),
            entry: Some("solve_logistics".into()),
            timeout_s: 12.5,
            memory_mb: 512,
            capture_limit_bytes: 2048,
        }
    );
    let raw: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut keys: Vec<_> = raw.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["capture_limit_bytes", "code", "entry", "memory_mb", "timeout_s"]);
}

#[test]
fn last_line_is_the_response() {
    let sandbox = worker(
        r#"read -r line; echo 'Gurobi Optimizer version 11'; echo '{"status":"exception"}'; echo '{"status":"returned","returned":670003.8,"stdout":"Optimal","wall_time_s":0.4}'; echo"#,
    );
    let r = sandbox.execute("x", &limits(5.0)).unwrap();
    assert_eq!(r.status, ExecStatus::Returned);
    assert_eq!(r.returned_value, Some(ReturnValue::Number(670003.8)));
    assert_eq!(r.stdout, "Optimal");
    assert_eq!(r.wall_time_s, 0.4);
}

#[test]
fn statuses_map_to_diagnoses() {
    let cases = [
        (r#"{"status":"returned","returned":null}"#, DiagnosisKind::NoSolution),
        (
            r#"{"status":"exception","error_type":"GurobiError","traceback":"Traceback\nGurobiError: Model too large"}"#,
            DiagnosisKind::ExecutionError,
        ),
        (r#"{"status":"timeout","wall_time_s":2.0}"#, DiagnosisKind::Timeout),
        (
            r#"{"status":"protocol","stderr":"bad request"}"#,
            DiagnosisKind::Protocol,
        ),
    ];
    for (line, kind) in cases {
        let sandbox = worker(&format!("read -r line; printf '%s\\n' '{line}'"));
        let r = sandbox.execute("x", &limits(5.0)).unwrap();
        assert_eq!(detect(&r).kind, kind, "{line}");
    }
}

#[test]
fn garbage_and_silence_are_protocol_errors() {
    let r = worker("read -r line; echo 'not json'")
        .execute("x", &limits(5.0))
        .unwrap();
    assert_eq!(r.status, ExecStatus::ProtocolError);
    let r = worker("read -r line; echo oops >&2; exit 3")
        .execute("x", &limits(5.0))
        .unwrap();
    assert_eq!(r.status, ExecStatus::ProtocolError);
    let detail = r.traceback.unwrap_or_default() + &r.stderr;
    assert!(detail.contains("oops"), "{detail}");
}

#[test]
fn hung_worker_is_killed_at_the_host_deadline() {
    let sandbox = worker("read -r line; sleep 30").with_grace(Duration::from_millis(200));
    let started = Instant::now();
    let r = sandbox.execute("while True: pass", &limits(0.3)).unwrap();
    assert!(started.elapsed() < Duration::from_secs(5), "{:?}", started.elapsed());
    assert_eq!(r.status, ExecStatus::TimedOut);
    assert_eq!(detect(&r).kind, DiagnosisKind::Timeout);
}

fn alive(pid: i32) -> bool {
    match std::fs::read_to_string(format!("/proc/{pid}/stat")) {
        // A zombie has already been killed; it only awaits reaping.
        Ok(stat) => !stat.rsplit(')').next().unwrap_or("").trim_start().starts_with('Z'),
        Err(_) => false,
    }
}

#[test]
fn the_whole_process_group_is_killed() {
    if !Path::new("/proc/self/stat").exists() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let pidfile = dir.path().join("grandchild.pid");
    let sandbox = worker(r#"read -r line; sleep 30 & echo $! > "$PIDFILE"; wait"#)
        .with_env("PIDFILE", pidfile.to_string_lossy())
        .with_grace(Duration::from_millis(100));
    let r = sandbox.execute("x", &limits(0.2)).unwrap();
    assert_eq!(r.status, ExecStatus::TimedOut);
    let pid: i32 = std::fs::read_to_string(&pidfile).unwrap().trim().parse().unwrap();
    let deadline = Instant::now() + Duration::from_secs(2);
    while alive(pid) && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(20));
    }
    assert!(!alive(pid), "grandchild {pid} survived");
}

#[test]
fn command_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("worker.sh");
    std::fs::write(
        &script,
        "read -r line\necho '{\"status\":\"returned\",\"returned\":2.5}'\n",
    )
    .unwrap();
    // No other test in this binary reads the variable.
    unsafe { std::env::set_var(orthought::sandbox::ENV_SANDBOX_CMD, format!("sh  {}", script.display())) };
    let r = SubprocessSandbox::from_env().execute("x", &limits(5.0)).unwrap();
    unsafe { std::env::remove_var(orthought::sandbox::ENV_SANDBOX_CMD) };
    assert_eq!(r.returned_value, Some(ReturnValue::Number(2.5)));
}
