//! In-process stand-in for the subprocess sandbox.
//!
//! Behavior is scripted two ways. Explicit rules map a code substring to a
//! canned report and are checked first, in insertion order. Otherwise the
//! code may carry a directive comment:
//!
//! ```text
//! # fake-sandbox: return 670003.8
//! # fake-sandbox: return None
//! # fake-sandbox: raise NameError: name 'x' is not defined
//! # fake-sandbox: timeout
//! # fake-sandbox: protocol garbled response
//! ```
//!
//! Code matching neither yields a protocol error.

use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::solve::{ExecutionLimits, ExecutionReport, SandboxPort, SandboxUnavailable};

pub const DIRECTIVE: &str = "# fake-sandbox:";

#[derive(Debug, Default)]
pub struct FakeSandbox {
    rules: Vec<(String, ExecutionReport)>,
    executions: AtomicUsize,
}

impl FakeSandbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_rule(mut self, marker: impl Into<String>, report: ExecutionReport) -> Self {
        self.rules.push((marker.into(), report));
        self
    }

    pub fn executions(&self) -> usize {
        self.executions.load(Ordering::SeqCst)
    }

    fn scripted(&self, code: &str, limits: &ExecutionLimits) -> ExecutionReport {
        if let Some((_, report)) = self.rules.iter().find(|(m, _)| code.contains(m.as_str())) {
            return report.clone();
        }
        code.lines()
            .find_map(|l| l.trim().strip_prefix(DIRECTIVE))
            .map(|d| parse_directive(d.trim(), limits))
            .unwrap_or_else(|| ExecutionReport::protocol_error("no scripted behavior for this code"))
    }
}

fn parse_directive(d: &str, limits: &ExecutionLimits) -> ExecutionReport {
    let (verb, arg) = d.split_once(char::is_whitespace).unwrap_or((d, ""));
    let arg = arg.trim();
    match verb {
        "return" if arg == "None" => ExecutionReport::returned_none(),
        "return" => match arg.parse::<f64>() {
            Ok(v) => ExecutionReport::returned(v),
            Err(_) => ExecutionReport::protocol_error(alloc::format!("bad fake return value {arg:?}")),
        },
        "raise" => {
            let error_type = arg.split(':').next().unwrap_or("Exception").trim();
            let traceback = alloc::format!(
                "Traceback (most recent call last):\n  File \"<generated>\", line 1, in <module>\n{arg}"
            );
            ExecutionReport::raised(error_type, traceback)
        }
        "timeout" => ExecutionReport::timed_out(limits.timeout_s),
        "protocol" => ExecutionReport::protocol_error(arg),
        _ => ExecutionReport::protocol_error(alloc::format!("unknown fake directive {verb:?}")),
    }
}

impl SandboxPort for FakeSandbox {
    fn execute(&self, code: &str, limits: &ExecutionLimits) -> Result<ExecutionReport, SandboxUnavailable> {
        self.executions.fetch_add(1, Ordering::SeqCst);
        Ok(self.scripted(code, limits))
    }
}
