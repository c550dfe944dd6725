//! JSON-over-stdio contract shared by the synthesizer, embedder, flow-runner
//! and diff-proposer plugins.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

#[derive(Debug, thiserror::Error)]
pub enum ProcessError {
    #[error("failed to spawn `{cmd}`: {source}")]
    Spawn {
        cmd: String,
        #[source]
        source: std::io::Error,
    },
    #[error("`{cmd}` exited with status {code:?}: {stderr}")]
    Exit { cmd: String, code: Option<i32>, stdout: String, stderr: String },
    #[error("`{cmd}` produced invalid JSON: {source}")]
    Decode {
        cmd: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Raw result of one plugin invocation.
pub struct ProcessOutput {
    pub code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

/// Runs `cmd` through `sh -c`, writing `input` to its stdin.
pub fn run_shell(
    cmd: &str,
    input: &[u8],
    cwd: Option<&Path>,
    env: &[(&str, &str)],
) -> Result<ProcessOutput, ProcessError> {
    let mut command = Command::new("sh");
    command.arg("-c").arg(cmd).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    if let Some(dir) = cwd {
        command.current_dir(dir);
    }
    for (k, v) in env {
        command.env(k, v);
    }
    let mut child = command.spawn().map_err(|source| ProcessError::Spawn { cmd: cmd.to_string(), source })?;
    if let Some(mut stdin) = child.stdin.take() {
        // A plugin that exits without reading stdin closes the pipe; that is
        // reported through its exit status, not here.
        let _ = stdin.write_all(input);
    }
    let out = child.wait_with_output().map_err(|source| ProcessError::Spawn { cmd: cmd.to_string(), source })?;
    Ok(ProcessOutput {
        code: out.status.code(),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    })
}

/// Sends `request` as JSON and decodes a JSON response; any nonzero exit is an
/// error.
pub fn call_json<Req, Resp>(cmd: &str, request: &Req) -> Result<Resp, ProcessError>
where
    Req: serde::Serialize,
    Resp: serde::de::DeserializeOwned,
{
    let input = serde_json::to_vec(request).expect("serializable request");
    let out = run_shell(cmd, &input, None, &[])?;
    if out.code != Some(0) {
        return Err(ProcessError::Exit {
            cmd: cmd.to_string(),
            code: out.code,
            stdout: out.stdout,
            stderr: out.stderr,
        });
    }
    serde_json::from_str(&out.stdout).map_err(|source| ProcessError::Decode { cmd: cmd.to_string(), source })
}
