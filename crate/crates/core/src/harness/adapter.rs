use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::NUM_FINE_LABELS;

pub const PROTOCOL_NAME: &str = "distortion-lab-adapter";
pub const PROTOCOL_VERSION: u32 = 1;

/// One stimulus sent to a model.
#[derive(Debug, Clone)]
pub struct StimulusRequest {
    pub trial_id: String,
    pub image_id: String,
    pub condition: String,
    /// Encoded stimulus; `None` when the adapter does not need pixels.
    pub png: Option<Vec<u8>>,
}

/// Source of 1000-class scores for stimuli.
pub trait ModelAdapter {
    fn kind(&self) -> &'static str;

    /// Whether requests must carry rendered stimuli.
    fn needs_pixels(&self) -> bool;

    /// One result per request, in request order.
    fn classify(&mut self, batch: &[StimulusRequest]) -> Vec<Result<Vec<f64>>>;
}

/// Checks that a score vector has 1000 finite nonnegative entries.
pub fn validate_scores(scores: Vec<f64>) -> Result<Vec<f64>> {
    if scores.len() != NUM_FINE_LABELS {
        return Err(Error::Adapter(format!("expected {NUM_FINE_LABELS} scores, got {}", scores.len())));
    }
    if let Some(v) = scores.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Adapter(format!("score {v} is negative or not finite")));
    }
    Ok(scores)
}

/// Serialisable description of an adapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterSpec {
    Precomputed {
        path: PathBuf,
    },
    ExternalProcess {
        command: String,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_in_flight() -> usize {
    8
}

impl AdapterSpec {
    pub fn open(&self) -> Result<Box<dyn ModelAdapter + Send>> {
        Ok(match self {
            AdapterSpec::Precomputed { path } => Box::new(PrecomputedAdapter::load(path)?),
            AdapterSpec::ExternalProcess { command, args, timeout_ms, max_in_flight } => {
                let mut cmd = Command::new(command);
                cmd.args(args);
                Box::new(ProcessAdapter::new(cmd, Duration::from_millis(*timeout_ms), *max_in_flight))
            }
        })
    }
}

/// Scores read from a CSV with columns `image_id,condition,score_0..score_999`.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedAdapter {
    scores: HashMap<(String, String), Vec<f64>>,
}

impl PrecomputedAdapter {
    pub fn from_reader<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers()?.clone();
        let ok = header.len() == NUM_FINE_LABELS + 2
            && &header[0] == "image_id"
            && &header[1] == "condition"
            && (0..NUM_FINE_LABELS).all(|i| header[i + 2] == format!("score_{i}"));
        if !ok {
            return Err(Error::parse("precomputed scores", "header must be image_id,condition,score_0..score_999"));
        }
        let mut scores = HashMap::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let values = rec
                .iter()
                .skip(2)
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse("precomputed scores", format!("row {}: {e}", line + 2)))?;
            let values = validate_scores(values).map_err(|e| Error::parse("precomputed scores", format!("row {}: {e}", line + 2)))?;
            let key = (rec[0].to_string(), rec[1].to_string());
            if scores.insert(key.clone(), values).is_some() {
                return Err(Error::parse("precomputed scores", format!("duplicate row for {key:?}")));
            }
        }
        Ok(PrecomputedAdapter { scores })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f)
    }

    pub fn insert(&mut self, image_id: impl Into<String>, condition: impl Into<String>, scores: Vec<f64>) -> Result<()> {
        self.scores.insert((image_id.into(), condition.into()), validate_scores(scores)?);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Writes rows in the precomputed-scores CSV format.
pub fn write_precomputed<W: Write>(out: W, rows: &[(String, String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["image_id".to_string(), "condition".to_string()];
    header.extend((0..NUM_FINE_LABELS).map(|i| format!("score_{i}")));
    w.write_record(&header)?;
    for (id, cond, scores) in rows {
        let mut rec = vec![id.clone(), cond.clone()];
        rec.extend(scores.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

impl ModelAdapter for PrecomputedAdapter {
    fn kind(&self) -> &'static str {
        "precomputed"
    }

    fn needs_pixels(&self) -> bool {
        false
    }

    fn classify(&mut self, batch: &[StimulusRequest]) -> Vec<Result<Vec<f64>>> {
        batch
            .iter()
            .map(|req| {
                self.scores
                    .get(&(req.image_id.clone(), req.condition.clone()))
                    .cloned()
                    .ok_or_else(|| Error::Adapter(format!("no precomputed scores for {} under {}", req.image_id, req.condition)))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    trial_id: &'a str,
    png_base64: String,
}

#[derive(Deserialize)]
struct WireResponse {
    trial_id: String,
    #[serde(default)]
    scores: Option<Vec<f64>>,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Deserialize)]
struct Handshake {
    protocol: String,
    version: u32,
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Model served by a child process speaking line-delimited JSON on stdin/stdout.
///
/// The process first prints `{"protocol":"distortion-lab-adapter","version":1}`, then
/// answers each `{"trial_id","png_base64"}` line with `{"trial_id","scores":[...]}`
/// (or `{"trial_id","error":"..."}`). Responses may arrive in any order. A timeout
/// fails the outstanding requests and restarts the process on the next call.
pub struct ProcessAdapter {
    command: Command,
    timeout: Duration,
    max_in_flight: usize,
    running: Option<Running>,
}

impl ProcessAdapter {
    pub fn new(command: Command, timeout: Duration, max_in_flight: usize) -> Self {
        ProcessAdapter { command, timeout, max_in_flight: max_in_flight.max(1), running: None }
    }

    fn start(&mut self) -> Result<&mut Running> {
        if self.running.is_none() {
            let mut child = self
                .command
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| Error::Adapter(format!("cannot start adapter process: {e}")))?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            let (tx, rx) = mpsc::channel();
            std::thread::spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            });
            let mut running = Running { child, stdin, lines: rx };
            let first = recv_line(&running.lines, self.timeout)?;
            let hs: Handshake = serde_json::from_str(&first).map_err(|e| Error::Adapter(format!("bad handshake {first:?}: {e}")))?;
            if hs.protocol != PROTOCOL_NAME || hs.version != PROTOCOL_VERSION {
                let _ = running.child.kill();
                return Err(Error::Adapter(format!("adapter speaks {} v{}, expected {PROTOCOL_NAME} v{PROTOCOL_VERSION}", hs.protocol, hs.version)));
            }
            self.running = Some(running);
        }
        Ok(self.running.as_mut().expect("just started"))
    }

    fn classify_window(&mut self, window: &[StimulusRequest]) -> Result<HashMap<String, Result<Vec<f64>>>> {
        let timeout = self.timeout;
        let running = self.start()?;
        for req in window {
            let png = req.png.as_deref().ok_or_else(|| Error::Adapter("process adapter needs rendered stimuli".into()))?;
            let line = serde_json::to_string(&WireRequest { trial_id: &req.trial_id, png_base64: base64::engine::general_purpose::STANDARD.encode(png) })?;
            writeln!(running.stdin, "{line}").map_err(|e| Error::Adapter(format!("write to adapter failed: {e}")))?;
        }
        running.stdin.flush().map_err(|e| Error::Adapter(format!("write to adapter failed: {e}")))?;
        let mut pending: HashSet<&str> = window.iter().map(|r| r.trial_id.as_str()).collect();
        let mut out = HashMap::new();
        let deadline = Instant::now() + timeout;
        while !pending.is_empty() {
            let left = deadline.saturating_duration_since(Instant::now());
            let line = recv_line(&running.lines, left)?;
            let resp: WireResponse = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("ignoring malformed adapter line {line:?}: {e}");
                    continue;
                }
            };
            if !pending.remove(resp.trial_id.as_str()) {
                log::warn!("ignoring response for unknown trial {}", resp.trial_id);
                continue;
            }
            let result = match (resp.scores, resp.error) {
                (_, Some(err)) => Err(Error::Adapter(err)),
                (Some(scores), None) => validate_scores(scores),
                (None, None) => Err(Error::Adapter("response carries neither scores nor error".into())),
            };
            out.insert(resp.trial_id, result);
        }
        Ok(out)
    }
}

fn recv_line(rx: &Receiver<std::io::Result<String>>, timeout: Duration) -> Result<String> {
    match rx.recv_timeout(timeout) {
        Ok(Ok(line)) => Ok(line),
        Ok(Err(e)) => Err(Error::Adapter(format!("reading adapter output failed: {e}"))),
        Err(RecvTimeoutError::Timeout) => Err(Error::Adapter(format!("adapter timed out after {timeout:?}"))),
        Err(RecvTimeoutError::Disconnected) => Err(Error::Adapter("adapter process closed its output".into())),
    }
}

impl ModelAdapter for ProcessAdapter {
    fn kind(&self) -> &'static str {
        "external_process"
    }

    fn needs_pixels(&self) -> bool {
        true
    }

    fn classify(&mut self, batch: &[StimulusRequest]) -> Vec<Result<Vec<f64>>> {
        let mut results = Vec::with_capacity(batch.len());
        for window in batch.chunks(self.max_in_flight) {
            match self.classify_window(window) {
                Ok(mut map) => {
                    for req in window {
                        results.push(map.remove(&req.trial_id).unwrap_or_else(|| Err(Error::Adapter("missing response".into()))));
                    }
                }
                Err(e) => {
                    log::warn!("adapter failure, restarting process: {e}");
                    self.running = None;
                    let msg = e.to_string();
                    results.extend(window.iter().map(|_| Err(Error::Adapter(msg.clone()))));
                }
            }
        }
        results
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: &str, image: &str, cond: &str) -> StimulusRequest {
        StimulusRequest { trial_id: id.into(), image_id: image.into(), condition: cond.into(), png: Some(vec![1, 2, 3]) }
    }

    #[test]
    fn precomputed_round_trip() {
        let mut s = vec![0.0; 1000];
        s[3] = 1.0;
        let mut buf = Vec::new();
        write_precomputed(&mut buf, &[("a".into(), "0.1".into(), s.clone())]).unwrap();
        let mut a = PrecomputedAdapter::from_reader(buf.as_slice()).unwrap();
        let out = a.classify(&[req("t1", "a", "0.1"), req("t2", "a", "0.2")]);
        assert_eq!(out[0].as_ref().unwrap(), &s);
        assert!(matches!(out[1], Err(Error::Adapter(_))));
    }

    #[test]
    fn precomputed_rejects_bad_files() {
        assert!(PrecomputedAdapter::from_reader("image_id,condition,score_0\na,b,1\n".as_bytes()).is_err());
        let mut s = vec![0.0; 1000];
        s[0] = -1.0;
        let mut buf = Vec::new();
        write_precomputed(&mut buf, &[("a".into(), "c".into(), s)]).unwrap();
        assert!(PrecomputedAdapter::from_reader(buf.as_slice()).is_err());
    }

    #[cfg(unix)]
    fn shell(script: &str) -> Command {
        let mut c = Command::new("sh");
        c.arg("-c").arg(script);
        c
    }

    #[cfg(unix)]
    const ECHO_ADAPTER: &str = r#"
S=$(seq -s, 1 1000)
echo '{"protocol":"distortion-lab-adapter","version":1}'
while IFS= read -r line; do
  id=$(printf '%s' "$line" | sed 's/.*"trial_id":"\([^"]*\)".*/\1/')
  printf '{"trial_id":"%s","scores":[%s]}\n' "$id" "$S"
done
"#;

    #[cfg(unix)]
    #[test]
    fn process_adapter_protocol() {
        let mut a = ProcessAdapter::new(shell(ECHO_ADAPTER), Duration::from_secs(10), 2);
        let out = a.classify(&[req("x1", "a", "c"), req("x2", "b", "c"), req("x3", "c", "c")]);
        for r in &out {
            let s = r.as_ref().unwrap();
            assert_eq!(s.len(), 1000);
            assert_eq!(s[999], 1000.0);
        }
    }

    #[cfg(unix)]
    #[test]
    fn process_adapter_failures_are_typed() {
        let mut a = ProcessAdapter::new(shell(r#"echo '{"protocol":"other","version":1}'; cat > /dev/null"#), Duration::from_secs(5), 1);
        assert!(a.classify(&[req("x", "a", "c")])[0].is_err());
        let mut a = ProcessAdapter::new(
            shell(r#"echo '{"protocol":"distortion-lab-adapter","version":1}'; sleep 5"#),
            Duration::from_millis(200),
            1,
        );
        let out = a.classify(&[req("x", "a", "c")]);
        assert!(out[0].as_ref().unwrap_err().to_string().contains("timed out"));
        let mut a = ProcessAdapter::new(
            shell(r#"echo '{"protocol":"distortion-lab-adapter","version":1}'; read l; echo '{"trial_id":"x","scores":[1,2]}'"#),
            Duration::from_secs(5),
            1,
        );
        assert!(a.classify(&[req("x", "a", "c")])[0].is_err());
    }
}
