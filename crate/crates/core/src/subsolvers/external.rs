//! JSON-over-subprocess protocol for out-of-process subsolvers.
//!
//! One request per process: the caller writes a [`Request`] to the backend's
//! stdin, closes it, and reads a single [`Response`] from stdout. The
//! returned energy is advisory; the caller recomputes it locally.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, ExternalError, Result};
use crate::qubo::{Assignment, QuboModel};
use crate::zoning::FORMAT_VERSION;

use super::{solve, SolveResult, SubSolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub format_version: u32,
    pub num_vars: usize,
    pub linear: Vec<f64>,
    pub quadratic: Vec<(usize, usize, f64)>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub format_version: u32,
    pub assignment: Vec<u8>,
    #[serde(default)]
    pub energy: Option<f64>,
}

impl Request {
    pub fn from_model(model: &QuboModel) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            num_vars: model.num_vars(),
            linear: model.linear().to_vec(),
            quadratic: model.quadratic().iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
            constant: model.constant(),
        }
    }

    pub fn to_model(&self) -> Result<QuboModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported request format_version {}",
                self.format_version
            )));
        }
        if self.linear.len() != self.num_vars {
            return Err(Error::Invalid(format!(
                "num_vars is {} but linear has {} entries",
                self.num_vars,
                self.linear.len()
            )));
        }
        QuboModel::new(self.linear.clone(), &self.quadratic, self.constant)
    }
}

/// Solves `model` by spawning `config.params.external_command`.
pub fn solve_external(model: &QuboModel, config: &SubSolverConfig) -> Result<SolveResult> {
    let (program, args) = config
        .params
        .external_command
        .split_first()
        .ok_or(ExternalError::NoCommand)?;
    let request = serde_json::to_vec(&Request::from_model(model)).expect("request serializes");
    let stdout = run_backend(program, args, &request, config.params.external_timeout)?;
    let response = parse_response(&stdout, model.num_vars())?;
    let evaluations = 1;
    SolveResult::scored(model, response, evaluations)
}

fn parse_response(stdout: &[u8], num_vars: usize) -> Result<Assignment, ExternalError> {
    let response: Response = serde_json::from_slice(stdout).map_err(|e| ExternalError::Malformed(e.to_string()))?;
    if response.format_version != FORMAT_VERSION {
        return Err(ExternalError::Malformed(format!(
            "format_version {} (expected {FORMAT_VERSION})",
            response.format_version
        )));
    }
    if response.assignment.len() != num_vars {
        return Err(ExternalError::WrongLength {
            expected: num_vars,
            found: response.assignment.len(),
        });
    }
    if let Some(e) = response.energy {
        if !e.is_finite() {
            return Err(ExternalError::Malformed("energy is not finite".into()));
        }
    }
    Assignment::from_u8(&response.assignment).map_err(|e| ExternalError::Malformed(e.to_string()))
}

fn run_backend(program: &str, args: &[String], request: &[u8], timeout: Duration) -> Result<Vec<u8>, ExternalError> {
    let command_line = std::iter::once(program)
        .chain(args.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ");
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| ExternalError::Spawn {
            command: command_line,
            source,
        })?;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let mut stdout = child.stdout.take().expect("stdout piped");
    let mut stderr = child.stderr.take().expect("stderr piped");
    let request = request.to_vec();
    // stdin is fed from its own thread
    let writer = thread::spawn(move || stdin.write_all(&request));
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait().map_err(ExternalError::Pipe)? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ExternalError::Timeout(timeout));
            }
            None => thread::sleep(Duration::from_millis(2)),
        }
    };
    // the write result is ignored: backends may answer without reading all input
    let _ = writer.join();
    let out = reader
        .join()
        .expect("stdout reader panicked")
        .map_err(ExternalError::Pipe)?;
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(ExternalError::ExitStatus {
            status: status.to_string(),
            stderr: err.trim().to_string(),
        });
    }
    Ok(out)
}

/// Backend side of the protocol: reads one request, solves it in-process
/// with `config`, and writes one response.
pub fn serve(input: impl Read, mut output: impl Write, config: &SubSolverConfig) -> Result<()> {
    let request: Request =
        serde_json::from_reader(input).map_err(|e| Error::Invalid(format!("malformed request: {e}")))?;
    let model = request.to_model()?;
    let result = solve(&model, config, None)?;
    let response = Response {
        format_version: FORMAT_VERSION,
        assignment: result.assignment.to_u8(),
        energy: Some(result.energy),
    };
    serde_json::to_writer(&mut output, &response).expect("response serializes");
    output
        .write_all(b"\n")
        .and_then(|_| output.flush())
        .map_err(|e| Error::io("<stdout>", e))
}
