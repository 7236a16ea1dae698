//! Differential execution of original and transformed programs.
//!
//! Both sources run in fresh namespaces inside one `python3` process. Every
//! call spec is applied to both; results are compared with `==` (falling back
//! to `repr`), raised exceptions by type name, and captured stdout verbatim.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::debug;

use crate::error::{Error, Result};

/// Environment variable naming the interpreter; defaults to `python3`.
pub const PYTHON_ENV: &str = "SMELLPROP_PYTHON";
pub const DEFAULT_TIMEOUT_SECS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallSpec {
    pub function: String,
    #[serde(default)]
    pub args: Vec<Value>,
    #[serde(default)]
    pub kwargs: BTreeMap<String, Value>,
}

impl CallSpec {
    pub fn new(function: impl Into<String>, args: Vec<Value>) -> Self {
        Self {
            function: function.into(),
            args,
            kwargs: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCase {
    pub id: String,
    pub original: String,
    pub transformed: String,
    pub calls: Vec<CallSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallOutcome {
    /// `repr` of the returned value, when the call returned.
    pub value: Option<String>,
    /// Exception type name, when the call raised.
    pub exception: Option<String>,
    pub stdout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallComparison {
    pub call: CallSpec,
    pub original: CallOutcome,
    pub transformed: CallOutcome,
    pub same: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub id: String,
    pub calls: Vec<CallComparison>,
}

impl EquivalenceReport {
    pub fn differences(&self) -> impl Iterator<Item = &CallComparison> {
        self.calls.iter().filter(|c| !c.same)
    }

    pub fn equivalent(&self) -> bool {
        self.calls.iter().all(|c| c.same)
    }
}

const DRIVER: &str = r#"
import contextlib, inspect, io, json, signal, sys

class HarnessTimeout(Exception):
    pass

def _alarm(signum, frame):
    raise HarnessTimeout()

signal.signal(signal.SIGALRM, _alarm)
request = json.load(sys.stdin)
timeout = request["timeout"]

def guarded(thunk):
    buf = io.StringIO()
    value, exc, ok = None, None, False
    signal.alarm(timeout)
    try:
        with contextlib.redirect_stdout(buf):
            value = thunk()
        ok = True
    except BaseException as e:
        exc = e
    finally:
        signal.alarm(0)
    return ok, value, exc, buf.getvalue()

def load(source):
    ns = {"__name__": "__sect__"}
    ok, _, exc, out = guarded(lambda: exec(compile(source, "<sect>", "exec"), ns))
    return ns, (None if ok else type(exc).__name__), out

def outcome(ok, value, exc, out):
    if ok:
        try:
            r = repr(value)
        except BaseException as e:
            r = "<unrepresentable %s>" % type(e).__name__
        return {"value": r, "exception": None, "stdout": out}
    return {"value": None, "exception": type(exc).__name__, "stdout": out}

def same(a, b, va, vb):
    if a["stdout"] != b["stdout"] or a["exception"] != b["exception"]:
        return False
    if a["exception"] is not None:
        return True
    try:
        if bool(va == vb):
            return True
    except BaseException:
        pass
    return a["value"] == b["value"]

reports = []
for case in request["cases"]:
    ns_o, err_o, out_o = load(case["original"])
    ns_t, err_t, out_t = load(case["transformed"])
    calls = []
    mod_o = {"value": None, "exception": err_o, "stdout": out_o}
    mod_t = {"value": None, "exception": err_t, "stdout": out_t}
    calls.append({"call": {"function": "<module>", "args": [], "kwargs": {}},
                  "original": mod_o, "transformed": mod_t,
                  "same": err_o == err_t and out_o == out_t})
    for spec in case["calls"]:
        fn = spec["function"]
        if fn not in ns_o or not callable(ns_o[fn]):
            print(json.dumps({"error": "%s: no callable `%s` in the original" % (case["id"], fn)}))
            sys.exit(0)
        try:
            inspect.signature(ns_o[fn]).bind(*spec["args"], **spec["kwargs"])
        except TypeError as e:
            print(json.dumps({"error": "%s: call spec does not fit `%s`: %s" % (case["id"], fn, e)}))
            sys.exit(0)
        results = []
        for ns in (ns_o, ns_t):
            args = json.loads(json.dumps(spec["args"]))
            kwargs = json.loads(json.dumps(spec["kwargs"]))
            f = ns.get(fn)
            if f is None:
                results.append((False, None, NameError(fn), ""))
            else:
                results.append(guarded(lambda: f(*args, **kwargs)))
        a, b = outcome(*results[0]), outcome(*results[1])
        calls.append({"call": spec, "original": a, "transformed": b,
                      "same": same(a, b, results[0][1], results[1][1])})
    reports.append({"id": case["id"], "calls": calls})
print(json.dumps({"reports": reports}))
"#;

fn interpreter() -> String {
    std::env::var(PYTHON_ENV).unwrap_or_else(|_| "python3".to_owned())
}

/// Runs every case in one interpreter process.
pub fn check_equivalence_batch(cases: &[EquivalenceCase], timeout_secs: u32) -> Result<Vec<EquivalenceReport>> {
    let request = serde_json::json!({ "timeout": timeout_secs.max(1), "cases": cases });
    let python = interpreter();
    debug!(python, cases = cases.len(), "running equivalence harness");
    let mut child = Command::new(&python)
        .args(["-I", "-c", DRIVER])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Harness(format!("cannot start `{python}`: {e}")))?;
    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        stdin
            .write_all(request.to_string().as_bytes())
            .map_err(|e| Error::Harness(format!("writing request: {e}")))?;
    }
    let out = child
        .wait_with_output()
        .map_err(|e| Error::Harness(format!("waiting for `{python}`: {e}")))?;
    if !out.status.success() {
        return Err(Error::Harness(format!(
            "`{python}` exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }

    #[derive(Deserialize)]
    struct Response {
        error: Option<String>,
        #[serde(default)]
        reports: Vec<EquivalenceReport>,
    }
    let resp: Response = serde_json::from_slice(&out.stdout)
        .map_err(|e| Error::Harness(format!("unreadable driver output: {e}")))?;
    match resp.error {
        Some(e) => Err(Error::Harness(e)),
        None => Ok(resp.reports),
    }
}

pub fn check_equivalence(case: &EquivalenceCase) -> Result<EquivalenceReport> {
    let mut reports = check_equivalence_batch(std::slice::from_ref(case), DEFAULT_TIMEOUT_SECS)?;
    reports
        .pop()
        .ok_or_else(|| Error::Harness("driver returned no report".into()))
}
