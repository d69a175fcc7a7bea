//! Out-of-process scorer speaking a line protocol over stdin/stdout.
//!
//! ```text
//! scorer → HELLO <range_lo> <range_hi>        once, at startup
//! client → SCORE <n>
//! client → <question_text>\t<spec_text>       n lines
//! scorer → <score>                            n lines
//! client → QUIT
//! ```
//!
//! Tabs and line breaks inside texts are sent as spaces.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::{ScoreRequest, Scorer, ScorerError};
use crate::labeling::sanitize;

#[derive(Debug, Clone)]
pub struct ExternalScorerConfig {
    /// Deadline for the handshake and for each batch.
    pub timeout: Duration,
    /// Reported by [`Scorer::name`].
    pub name: String,
}

impl Default for ExternalScorerConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            name: "external".to_owned(),
        }
    }
}

pub struct ExternalScorer {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    range: (f64, f64),
    config: ExternalScorerConfig,
}

impl std::fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("pid", &self.child.id())
            .field("range", &self.range)
            .field("name", &self.config.name)
            .finish()
    }
}

impl ExternalScorer {
    /// Starts `program args..` and waits for its `HELLO` line.
    pub fn spawn<S: AsRef<std::ffi::OsStr>>(
        program: &str,
        args: &[S],
        config: ExternalScorerConfig,
    ) -> Result<Self, ScorerError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(ScorerError::Spawn)?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut scorer = Self {
            child,
            stdin,
            lines: rx,
            range: (0.0, 0.0),
            config,
        };
        scorer.range = scorer.handshake()?;
        Ok(scorer)
    }

    /// Runs `command` through `sh -c`.
    pub fn spawn_shell(command: &str, config: ExternalScorerConfig) -> Result<Self, ScorerError> {
        Self::spawn("sh", &["-c", command], config)
    }

    /// Score range declared in the handshake.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    fn handshake(&mut self) -> Result<(f64, f64), ScorerError> {
        let line = match self.lines.recv_timeout(self.config.timeout) {
            Ok(line) => line?,
            Err(RecvTimeoutError::Timeout) => return Err(ScorerError::Timeout(self.config.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(ScorerError::Handshake("process exited before HELLO".into()))
            }
        };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || ScorerError::Handshake(format!("expected `HELLO lo hi`, got {line:?}"));
        if parts.len() != 3 || parts[0] != "HELLO" {
            return Err(bad());
        }
        let lo: f64 = parts[1].parse().map_err(|_| bad())?;
        let hi: f64 = parts[2].parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(bad());
        }
        Ok((lo, hi))
    }

    fn send(&mut self, batch: &[ScoreRequest<'_>]) -> Result<(), ScorerError> {
        let stdin = self.stdin.as_mut().ok_or(ScorerError::Closed)?;
        let mut msg = format!("SCORE {}\n", batch.len());
        for req in batch {
            msg.push_str(&sanitize(req.question_text));
            msg.push('\t');
            msg.push_str(&sanitize(req.spec_text));
            msg.push('\n');
        }
        stdin.write_all(msg.as_bytes())?;
        stdin.flush()?;
        Ok(())
    }

    fn parse_score(&self, line: &str) -> Result<f64, ScorerError> {
        let score: f64 = line.trim().parse().map_err(|_| ScorerError::MalformedResponse {
            line: line.to_owned(),
        })?;
        if !score.is_finite() {
            return Err(ScorerError::NonFinite);
        }
        let (lo, hi) = self.range;
        if score < lo || score > hi {
            return Err(ScorerError::OutOfRange { score, lo, hi });
        }
        Ok(score)
    }
}

impl Scorer for ExternalScorer {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn score_batch(&mut self, batch: &[ScoreRequest<'_>]) -> Result<Vec<Option<f64>>, ScorerError> {
        // Lines left over from the previous batch mean it over-answered.
        let mut extra = 0;
        while self.lines.try_recv().is_ok() {
            extra += 1;
        }
        if extra > 0 {
            return Err(ScorerError::CountMismatch {
                expected: 0,
                got: extra,
            });
        }
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        self.send(batch)?;

        let deadline = Instant::now() + self.config.timeout;
        let mut scores = Vec::with_capacity(batch.len());
        while scores.len() < batch.len() {
            let remaining = deadline.saturating_duration_since(Instant::now());
            let short = |got: usize| {
                if got > 0 {
                    ScorerError::CountMismatch {
                        expected: batch.len(),
                        got,
                    }
                } else {
                    ScorerError::Timeout(self.config.timeout)
                }
            };
            match self.lines.recv_timeout(remaining) {
                Ok(line) => scores.push(Some(self.parse_score(&line?)?)),
                Err(RecvTimeoutError::Timeout) => return Err(short(scores.len())),
                Err(RecvTimeoutError::Disconnected) if scores.is_empty() => {
                    return Err(ScorerError::Closed)
                }
                Err(RecvTimeoutError::Disconnected) => return Err(short(scores.len())),
            }
        }
        Ok(scores)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = stdin.write_all(b"QUIT\n");
            let _ = stdin.flush();
        }
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => break,
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
