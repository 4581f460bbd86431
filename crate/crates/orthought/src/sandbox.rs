//! Subprocess sandbox port.
//!
//! One worker process per execution. The host writes a single JSON request
//! line to the worker's stdin and reads the worker's final stdout line as
//! the JSON response; anything printed before it is ignored. The host also
//! enforces its own deadline of `timeout_s` plus a grace period and kills
//! the worker's whole process group when it passes.

use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use orthought_core::{
    ExecStatus, ExecutionLimits, ExecutionReport, FakeSandbox, ReturnValue, SandboxPort, SandboxUnavailable,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const ENV_SANDBOX_CMD: &str = "ORTHOUGHT_SANDBOX_CMD";
pub const DEFAULT_SANDBOX_CMD: &str = "python3 -m orthought_sandbox";
pub const KILL_GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub code: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
    pub timeout_s: f64,
    pub memory_mb: u64,
    pub capture_limit_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResponse {
    pub status: String,
    /// Absent, `null`, or a number.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "present_or_null")]
    pub returned: Option<Value>,
    #[serde(default)]
    pub stdout: String,
    #[serde(default)]
    pub stderr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traceback: Option<String>,
    #[serde(default)]
    pub wall_time_s: f64,
}

/// Keeps an explicit `null` distinct from an absent field.
mod present_or_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(v: &Option<Value>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().unwrap_or(&Value::Null).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Value>, D::Error> {
        Value::deserialize(d).map(Some)
    }
}

impl RunResponse {
    /// Maps the wire response onto the report the Solve Agent diagnoses.
    pub fn into_report(self) -> ExecutionReport {
        let status = match self.status.as_str() {
            "returned" => ExecStatus::Returned,
            "exception" => ExecStatus::RaisedException,
            "timeout" => ExecStatus::TimedOut,
            "protocol" => ExecStatus::ProtocolError,
            other => {
                return ExecutionReport::protocol_error(format!("unknown worker status {other:?}"));
            }
        };
        let returned_value = match (status, &self.returned) {
            (ExecStatus::Returned, Some(Value::Null)) => Some(ReturnValue::Null),
            (ExecStatus::Returned, Some(Value::Number(n))) => n.as_f64().map(ReturnValue::Number),
            (ExecStatus::Returned, Some(other)) => {
                return ExecutionReport::protocol_error(format!("non-numeric return value {other}"));
            }
            _ => None,
        };
        let error_type = match status {
            ExecStatus::RaisedException => Some(self.error_type.unwrap_or_else(|| "Exception".into())),
            _ => self.error_type,
        };
        ExecutionReport {
            status,
            returned_value,
            stdout: self.stdout,
            stderr: self.stderr,
            error_type,
            traceback: self.traceback,
            wall_time_s: self.wall_time_s,
        }
    }
}

/// Launches `command` (program followed by its arguments) per execution.
#[derive(Debug, Clone)]
pub struct SubprocessSandbox {
    command: Vec<String>,
    env: Vec<(String, String)>,
    entry: Option<String>,
    grace: Duration,
}

impl SubprocessSandbox {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            env: Vec::new(),
            entry: None,
            grace: KILL_GRACE,
        }
    }

    /// `ORTHOUGHT_SANDBOX_CMD`, split on whitespace, or the default worker.
    pub fn from_env() -> Self {
        let cmd = std::env::var(ENV_SANDBOX_CMD).unwrap_or_else(|_| DEFAULT_SANDBOX_CMD.into());
        Self::new(cmd.split_whitespace().map(str::to_owned).collect())
    }

    pub fn with_env(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.env.push((key.into(), value.into()));
        self
    }

    pub fn with_entry(mut self, entry: impl Into<String>) -> Self {
        self.entry = Some(entry.into());
        self
    }

    pub fn with_grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    fn spawn(&self) -> Result<Child, SandboxUnavailable> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| SandboxUnavailable("empty sandbox command".into()))?;
        let mut cmd = Command::new(program);
        cmd.args(args)
            .envs(self.env.iter().map(|(k, v)| (k, v)))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        #[cfg(unix)]
        {
            use std::os::unix::process::CommandExt;
            cmd.process_group(0);
        }
        cmd.spawn()
            .map_err(|e| SandboxUnavailable(format!("cannot start {program:?}: {e}")))
    }
}

fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        // The worker leads its own process group; take the group down with it.
        let pgid = child.id() as libc::pid_t;
        unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
}

fn drain<R: Read + Send + 'static>(stream: Option<R>, cap: usize) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(s) = stream {
            let _ = s.take(cap as u64).read_to_end(&mut buf);
        }
        buf
    })
}

fn tail(text: &str, max_lines: usize) -> String {
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(max_lines)..].join("\n")
}

impl SandboxPort for SubprocessSandbox {
    fn execute(&self, code: &str, limits: &ExecutionLimits) -> Result<ExecutionReport, SandboxUnavailable> {
        let request = RunRequest {
            code: code.into(),
            entry: self.entry.clone(),
            timeout_s: limits.timeout_s,
            memory_mb: limits.memory_mb,
            capture_limit_bytes: limits.capture_limit_bytes,
        };
        let mut line = serde_json::to_string(&request).expect("request serializes");
        line.push('\n');

        let started = Instant::now();
        let mut child = self.spawn()?;
        if let Some(mut stdin) = child.stdin.take() {
            // A worker that exits without reading is reported through its response.
            let _ = stdin.write_all(line.as_bytes());
        }
        // The worker truncates its own captures; the host cap only bounds memory.
        let cap = (limits.capture_limit_bytes as usize).saturating_mul(4).max(1 << 20);
        let out = drain(child.stdout.take(), cap);
        let err = drain(child.stderr.take(), cap);

        let deadline = Duration::from_secs_f64(limits.timeout_s.max(0.0)) + self.grace;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break Some(status),
                Ok(None) if started.elapsed() >= deadline => {
                    kill_tree(&mut child);
                    let _ = child.wait();
                    break None;
                }
                Ok(None) => thread::sleep(Duration::from_millis(10)),
                Err(e) => return Err(SandboxUnavailable(format!("waiting on worker: {e}"))),
            }
        };
        let wall = started.elapsed().as_secs_f64();
        let stdout = String::from_utf8_lossy(&out.join().unwrap_or_default()).into_owned();
        let stderr = String::from_utf8_lossy(&err.join().unwrap_or_default()).into_owned();

        let Some(status) = status else {
            let mut report = ExecutionReport::timed_out(wall);
            report.stderr = tail(&stderr, 20);
            return Ok(report);
        };
        let last = stdout.lines().rev().find(|l| !l.trim().is_empty());
        let parsed = last.map(serde_json::from_str::<RunResponse>);
        Ok(match parsed {
            Some(Ok(resp)) => {
                let mut report = resp.into_report();
                if report.wall_time_s <= 0.0 {
                    report.wall_time_s = wall;
                }
                report
            }
            Some(Err(e)) => ExecutionReport::protocol_error(format!(
                "unparseable worker response ({e}); exit {status}; stderr:\n{}",
                tail(&stderr, 20)
            )),
            None => ExecutionReport::protocol_error(format!(
                "worker produced no response; exit {status}; stderr:\n{}",
                tail(&stderr, 20)
            )),
        })
    }
}

/// One scripted response for the in-process fake sandbox: programs whose
/// text contains `marker` get `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FakeRule {
    pub marker: String,
    pub report: ExecutionReport,
}

/// Builds a [`FakeSandbox`] from a JSON array of [`FakeRule`]s.
pub fn load_fake_rules(path: &std::path::Path) -> std::io::Result<FakeSandbox> {
    let rules: Vec<FakeRule> = serde_json::from_slice(&std::fs::read(path)?).map_err(std::io::Error::other)?;
    Ok(rules
        .into_iter()
        .fold(FakeSandbox::new(), |fake, r| fake.with_rule(r.marker, r.report)))
}
