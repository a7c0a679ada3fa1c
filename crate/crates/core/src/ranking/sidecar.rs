//! Client for an external scorer speaking line-delimited JSON over a byte
//! stream (TCP or a child process's stdio).

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::scorer::{Scorer, TrainConfig, TrainExample, TrainMode, TrainOutcome};
use super::RankError;

#[derive(Serialize)]
struct ScoreRequest<'a> {
    id: u64,
    op: &'static str,
    context: &'a str,
    candidates: &'a [String],
}

#[derive(Serialize)]
struct TrainRequest<'a> {
    id: u64,
    op: &'static str,
    mode: TrainMode,
    epochs: usize,
    batch_size: usize,
    examples: &'a [TrainExample],
}

/// One response line from the scorer.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Frame {
    pub id: u64,
    #[serde(default)]
    pub scores: Option<Vec<f64>>,
    #[serde(default)]
    pub status: Option<String>,
    #[serde(default)]
    pub final_loss: Option<f64>,
    #[serde(default)]
    pub error: Option<String>,
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
    /// Frames that arrived for other request ids.
    pending: HashMap<u64, Frame>,
}

pub struct SidecarScorer {
    name: String,
    conn: Mutex<Connection>,
    version: AtomicU64,
    child: Mutex<Option<Child>>,
}

impl SidecarScorer {
    pub fn from_streams(
        name: impl Into<String>,
        reader: Box<dyn BufRead + Send>,
        writer: Box<dyn Write + Send>,
    ) -> SidecarScorer {
        SidecarScorer {
            name: name.into(),
            conn: Mutex::new(Connection {
                reader,
                writer,
                next_id: 1,
                pending: HashMap::new(),
            }),
            version: AtomicU64::new(0),
            child: Mutex::new(None),
        }
    }

    pub fn connect<A: ToSocketAddrs + std::fmt::Display>(
        addr: A,
    ) -> Result<SidecarScorer, RankError> {
        let label = format!("sidecar tcp {addr}");
        let stream = TcpStream::connect(addr).map_err(|e| RankError::Transport {
            batch: 0,
            message: e.to_string(),
        })?;
        let read = stream.try_clone().map_err(|e| RankError::Transport {
            batch: 0,
            message: e.to_string(),
        })?;
        Ok(Self::from_streams(
            label,
            Box::new(BufReader::new(read)),
            Box::new(stream),
        ))
    }

    /// Starts `program` and talks to it over its stdin and stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<SidecarScorer, RankError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| RankError::Transport {
                batch: 0,
                message: format!("cannot start {program}: {e}"),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let s = Self::from_streams(
            format!("sidecar stdio {program}"),
            Box::new(BufReader::new(stdout)),
            Box::new(stdin),
        );
        *s.child.lock().unwrap() = Some(child);
        Ok(s)
    }

    /// Scores a trivial request to check that the peer speaks the protocol.
    pub fn handshake(&self) -> Result<(), RankError> {
        self.score("ping", &["pong".to_string()]).map(|_| ())
    }

    pub fn version(&self) -> u64 {
        self.version.load(Ordering::SeqCst)
    }

    fn call(&self, encode: impl FnOnce(u64) -> String) -> Result<Frame, RankError> {
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let id = conn.next_id;
        conn.next_id += 1;
        let transport = |message: String| RankError::Transport { batch: id, message };
        let mut line = encode(id);
        line.push('\n');
        conn.writer
            .write_all(line.as_bytes())
            .map_err(|e| transport(e.to_string()))?;
        conn.writer.flush().map_err(|e| transport(e.to_string()))?;
        loop {
            if let Some(frame) = conn.pending.remove(&id) {
                return Ok(frame);
            }
            let mut buf = String::new();
            let n = conn
                .reader
                .read_line(&mut buf)
                .map_err(|e| transport(e.to_string()))?;
            if n == 0 {
                return Err(transport("connection closed".into()));
            }
            if buf.trim().is_empty() {
                continue;
            }
            let frame: Frame = serde_json::from_str(buf.trim())
                .map_err(|e| transport(format!("bad frame: {e}")))?;
            if frame.id == id {
                return Ok(frame);
            }
            conn.pending.insert(frame.id, frame);
        }
    }
}

impl Scorer for SidecarScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, context: &str, candidates: &[String]) -> Result<Vec<f64>, RankError> {
        let frame = self.call(|id| {
            serde_json::to_string(&ScoreRequest {
                id,
                op: "score",
                context,
                candidates,
            })
            .expect("request serializes")
        })?;
        let batch = frame.id;
        if let Some(message) = frame.error {
            return Err(RankError::Remote { batch, message });
        }
        let scores = frame.scores.ok_or_else(|| RankError::Transport {
            batch,
            message: "frame has no scores".into(),
        })?;
        if scores.len() != candidates.len() {
            return Err(RankError::Transport {
                batch,
                message: format!(
                    "{} scores for {} candidates",
                    scores.len(),
                    candidates.len()
                ),
            });
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(RankError::Transport {
                batch,
                message: format!("score {bad} outside [0, 1]"),
            });
        }
        Ok(scores)
    }

    fn train(
        &self,
        config: &TrainConfig,
        examples: &[TrainExample],
    ) -> Result<TrainOutcome, RankError> {
        let frame = self.call(|id| {
            serde_json::to_string(&TrainRequest {
                id,
                op: "train",
                mode: config.mode,
                epochs: config.epochs,
                batch_size: config.batch_size,
                examples,
            })
            .expect("request serializes")
        })?;
        let batch = frame.id;
        if let Some(message) = frame.error {
            return Err(RankError::Remote { batch, message });
        }
        let (Some(status), Some(final_loss)) = (frame.status, frame.final_loss) else {
            return Err(RankError::Transport {
                batch,
                message: "train reply lacks status or final_loss".into(),
            });
        };
        let version = self.version.fetch_add(1, Ordering::SeqCst) + 1;
        Ok(TrainOutcome {
            status,
            final_loss,
            version,
        })
    }
}

impl Drop for SidecarScorer {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.lock().ok().and_then(|mut c| c.take()) {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn scripted(replies: &str) -> (SidecarScorer, std::sync::Arc<Mutex<Vec<u8>>>) {
        #[derive(Clone)]
        struct Sink(std::sync::Arc<Mutex<Vec<u8>>>);
        impl Write for Sink {
            fn write(&mut self, b: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(b);
                Ok(b.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let sent = std::sync::Arc::new(Mutex::new(Vec::new()));
        let s = SidecarScorer::from_streams(
            "test",
            Box::new(Cursor::new(replies.as_bytes().to_vec())),
            Box::new(Sink(sent.clone())),
        );
        (s, sent)
    }

    #[test]
    fn out_of_order_frames_are_correlated() {
        let (s, _) = scripted("{\"id\":2,\"scores\":[0.1]}\n{\"id\":1,\"scores\":[0.9,0.2]}\n");
        assert_eq!(
            s.score("c", &["a".into(), "b".into()]).unwrap(),
            vec![0.9, 0.2]
        );
        assert_eq!(s.score("c", &["a".into()]).unwrap(), vec![0.1]);
    }

    #[test]
    fn errors_carry_batch_id() {
        let (s, _) = scripted("{\"id\":1,\"error\":\"boom\"}\n{\"id\":2,\"scores\":[1.5]}\n");
        assert!(matches!(
            s.score("c", &["a".into()]),
            Err(RankError::Remote { batch: 1, .. })
        ));
        assert!(matches!(
            s.score("c", &["a".into()]),
            Err(RankError::Transport { batch: 2, .. })
        ));
        assert!(matches!(
            s.score("c", &["a".into()]),
            Err(RankError::Transport { batch: 3, .. })
        ));
    }

    #[test]
    fn train_request_shape() {
        let (s, sent) = scripted("{\"id\":1,\"status\":\"ok\",\"final_loss\":0.25}\n");
        let ex = [TrainExample::Pairwise {
            context: "c".into(),
            positive: "p".into(),
            negative: "n".into(),
        }];
        let out = s.train(&TrainConfig::default(), &ex).unwrap();
        assert_eq!(
            out,
            TrainOutcome {
                status: "ok".into(),
                final_loss: 0.25,
                version: 1
            }
        );
        let line = String::from_utf8(sent.lock().unwrap().clone()).unwrap();
        assert_eq!(
            line,
            "{\"id\":1,\"op\":\"train\",\"mode\":\"pairwise\",\"epochs\":10,\"batch_size\":5,\
             \"examples\":[{\"context\":\"c\",\"positive\":\"p\",\"negative\":\"n\"}]}\n"
        );
    }
}
