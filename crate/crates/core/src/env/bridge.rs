//! Client side of the line-delimited JSON protocol spoken by external game
//! servers (one request object per line on stdin, one response per line on
//! stdout, strictly in order).

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EnvError, Environment};
use crate::model::{EnvStepResult, Fingerprint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeRequest {
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_path: Option<String>,
    pub request_id: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BridgeResponse {
    pub request_id: Option<u64>,
    #[serde(default)]
    pub observation: Option<String>,
    #[serde(default)]
    pub reward: Option<i64>,
    #[serde(default)]
    pub score: Option<i64>,
    #[serde(default)]
    pub done: Option<bool>,
    #[serde(default)]
    pub valid_actions: Option<Vec<String>>,
    #[serde(default)]
    pub fingerprint: Option<String>,
    #[serde(default)]
    pub inventory: Option<String>,
    #[serde(default)]
    pub max_score: Option<i64>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub engine_version: Option<String>,
    #[serde(default)]
    pub error: Option<BridgeErrorBody>,
}

/// Game metadata reported by the `meta` operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeMeta {
    pub title: Option<String>,
    pub max_score: Option<i64>,
    pub engine_version: Option<String>,
}

/// Environment backed by a game server subprocess.
pub struct BridgeEnv {
    command: String,
    game_path: Option<PathBuf>,
    timeout: Duration,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    done: bool,
}

impl BridgeEnv {
    /// Starts `command` through `sh -c`.
    pub fn spawn(command: &str, game_path: Option<PathBuf>, timeout: Duration) -> Result<Self, EnvError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| EnvError::Startup(format!("cannot spawn {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(BridgeEnv {
            command: command.to_string(),
            game_path,
            timeout,
            child,
            stdin,
            lines: rx,
            next_id: 1,
            done: false,
        })
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    /// Sends one request and waits for its response.
    pub fn request(&mut self, op: &str, action: Option<&str>) -> Result<BridgeResponse, EnvError> {
        let req = BridgeRequest {
            op: op.to_string(),
            action: action.map(str::to_string),
            game_path: if op == "reset" {
                self.game_path.as_ref().map(|p| p.display().to_string())
            } else {
                None
            },
            request_id: self.next_id,
        };
        self.next_id += 1;
        let line = serde_json::to_string(&req).expect("request serializes");
        self.send_raw(&line)?;
        let resp = self.read_response()?;
        if resp.request_id != Some(req.request_id) {
            return Err(EnvError::Protocol(format!(
                "response id {:?} does not match request id {}",
                resp.request_id, req.request_id
            )));
        }
        Ok(resp)
    }

    /// Writes one raw line to the server (used for protocol tests).
    pub fn send_raw(&mut self, line: &str) -> Result<(), EnvError> {
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| EnvError::Unavailable(format!("bridge {:?} closed its input: {e}", self.command)))
    }

    /// Reads the next response line.
    pub fn read_response(&mut self) -> Result<BridgeResponse, EnvError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => serde_json::from_str(&line)
                .map_err(|e| EnvError::Protocol(format!("malformed response {line:?}: {e}"))),
            Ok(Err(e)) => Err(EnvError::Unavailable(format!("reading from bridge failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Err(EnvError::Unavailable(format!("bridge {:?} timed out after {:?}", self.command, self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(EnvError::Unavailable(format!("bridge {:?} exited", self.command)))
            }
        }
    }

    pub fn meta(&mut self) -> Result<BridgeMeta, EnvError> {
        let r = self.request("meta", None)?;
        if let Some(err) = r.error {
            return Err(EnvError::Protocol(format!("{}: {}", err.code, err.message)));
        }
        Ok(BridgeMeta { title: r.title, max_score: r.max_score, engine_version: r.engine_version })
    }

    fn to_result(resp: BridgeResponse) -> Result<EnvStepResult, EnvError> {
        let missing = |f: &str| EnvError::Protocol(format!("response missing field {f}"));
        Ok(EnvStepResult {
            observation: resp.observation.ok_or_else(|| missing("observation"))?,
            reward: resp.reward.unwrap_or(0),
            score: resp.score.ok_or_else(|| missing("score"))?,
            done: resp.done.unwrap_or(false),
            valid_actions: resp.valid_actions.unwrap_or_default(),
            fingerprint: Fingerprint::new(resp.fingerprint.ok_or_else(|| missing("fingerprint"))?),
            inventory: resp.inventory,
        })
    }
}

impl Drop for BridgeEnv {
    fn drop(&mut self) {
        self.kill();
    }
}

impl Environment for BridgeEnv {
    fn name(&self) -> String {
        format!("bridge:{}", self.command)
    }

    fn reset(&mut self, _seed: u64) -> Result<EnvStepResult, EnvError> {
        let r = self.request("reset", None)?;
        if let Some(err) = r.error {
            return Err(EnvError::Startup(format!("{}: {}", err.code, err.message)));
        }
        let result = Self::to_result(r)?;
        self.done = result.done;
        Ok(result)
    }

    fn step(&mut self, action: &str) -> Result<EnvStepResult, EnvError> {
        if self.done {
            return Err(EnvError::Protocol("step after episode end".into()));
        }
        let r = self.request("step", Some(action))?;
        if let Some(err) = r.error {
            return Err(EnvError::Protocol(format!("{}: {}", err.code, err.message)));
        }
        let result = Self::to_result(r)?;
        self.done = result.done;
        Ok(result)
    }

    fn fingerprint(&mut self) -> Result<Fingerprint, EnvError> {
        let r = self.request("fingerprint", None)?;
        if let Some(err) = r.error {
            return Err(EnvError::Protocol(format!("{}: {}", err.code, err.message)));
        }
        r.fingerprint.map(Fingerprint::new).ok_or_else(|| EnvError::Protocol("response missing fingerprint".into()))
    }
}
