//! Pluggable one-round transports carrying encoded worker summaries.
//!
//! Every transport moves exactly one encoded message per worker and returns
//! the number of messages that crossed, so callers can assert the one-round
//! property. Results are bitwise-identical across transports: workers are
//! pure functions of their shard, and the codec roundtrip is the identity.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::DataShard;

use super::codec::{decode_summary, encode_summary};
use super::{worker_run, PipelineConfig, WorkerSummary};

/// Message-passing backend for the worker/master exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    /// Workers run one after another on the calling thread.
    Serial,
    /// Worker threads send encoded bytes over channels.
    #[default]
    #[serde(rename = "inprocess")]
    InProcess,
    /// Worker threads stream encoded bytes over loopback TCP.
    Socket,
}

/// Runs every worker under the configured transport, returning summaries in
/// arrival order plus the count of messages that crossed.
pub fn exchange(shards: Vec<DataShard>, cfg: &PipelineConfig) -> Result<(Vec<WorkerSummary>, usize)> {
    match cfg.transport {
        TransportKind::Serial => exchange_serial(shards, cfg),
        TransportKind::InProcess => exchange_inprocess(shards, cfg),
        TransportKind::Socket => exchange_socket(shards, cfg),
    }
}

/// Picks the failure from the lowest worker id so error reporting does not
/// depend on scheduling.
fn first_failure(outcomes: &mut Vec<(u16, Result<Vec<u8>>)>) -> Result<Vec<Vec<u8>>> {
    outcomes.sort_by_key(|(id, _)| *id);
    let mut encoded = Vec::with_capacity(outcomes.len());
    for (_, outcome) in outcomes.drain(..) {
        encoded.push(outcome?);
    }
    Ok(encoded)
}

fn decode_all(encoded: Vec<Vec<u8>>) -> Result<Vec<WorkerSummary>> {
    let mut summaries = Vec::with_capacity(encoded.len());
    for bytes in encoded {
        let (summary, consumed) = decode_summary(&bytes)?;
        if consumed != bytes.len() {
            return Err(Error::Protocol(format!(
                "summary message carries {} trailing bytes",
                bytes.len() - consumed
            )));
        }
        summaries.push(summary);
    }
    Ok(summaries)
}

fn exchange_serial(shards: Vec<DataShard>, cfg: &PipelineConfig) -> Result<(Vec<WorkerSummary>, usize)> {
    let mut outcomes: Vec<(u16, Result<Vec<u8>>)> = shards
        .iter()
        .map(|shard| {
            (
                shard.worker_id(),
                worker_run(shard, cfg).map(|s| encode_summary(&s)),
            )
        })
        .collect();
    let encoded = first_failure(&mut outcomes)?;
    let count = encoded.len();
    Ok((decode_all(encoded)?, count))
}

fn exchange_inprocess(shards: Vec<DataShard>, cfg: &PipelineConfig) -> Result<(Vec<WorkerSummary>, usize)> {
    let m = shards.len();
    let (tx, rx) = mpsc::channel::<(u16, Result<Vec<u8>>)>();
    std::thread::scope(|scope| {
        for shard in &shards {
            let tx = tx.clone();
            scope.spawn(move || {
                let outcome = worker_run(shard, cfg).map(|s| encode_summary(&s));
                let _ = tx.send((shard.worker_id(), outcome));
            });
        }
        drop(tx);
        let mut outcomes = Vec::with_capacity(m);
        for _ in 0..m {
            let msg = rx
                .recv()
                .map_err(|_| Error::Transport("worker channel closed early".into()))?;
            outcomes.push(msg);
        }
        let encoded = first_failure(&mut outcomes)?;
        let count = encoded.len();
        Ok((decode_all(encoded)?, count))
    })
}

fn exchange_socket(shards: Vec<DataShard>, cfg: &PipelineConfig) -> Result<(Vec<WorkerSummary>, usize)> {
    let m = shards.len();
    let listener =
        TcpListener::bind("127.0.0.1:0").map_err(|e| Error::Transport(format!("bind: {e}")))?;
    let addr = listener
        .local_addr()
        .map_err(|e| Error::Transport(format!("local_addr: {e}")))?;

    std::thread::scope(|scope| {
        // A failed worker still connects and closes without writing, so the
        // master's accept loop always sees one connection per worker.
        let (err_tx, err_rx) = mpsc::channel::<(u16, Error)>();
        for shard in &shards {
            let err_tx = err_tx.clone();
            scope.spawn(move || {
                let outcome = worker_run(shard, cfg).map(|s| encode_summary(&s));
                let stream = TcpStream::connect(addr);
                match (outcome, stream) {
                    (Ok(bytes), Ok(mut stream)) => {
                        if let Err(e) = stream.write_all(&bytes) {
                            let _ = err_tx.send((
                                shard.worker_id(),
                                Error::Transport(format!("worker write: {e}")),
                            ));
                        }
                    }
                    (Err(err), Ok(_)) => {
                        let _ = err_tx.send((shard.worker_id(), err));
                    }
                    (_, Err(e)) => {
                        let _ = err_tx.send((
                            shard.worker_id(),
                            Error::Transport(format!("worker connect: {e}")),
                        ));
                    }
                }
            });
        }
        drop(err_tx);

        let mut payloads: Vec<Vec<u8>> = Vec::with_capacity(m);
        for _ in 0..m {
            let (mut stream, _) = listener
                .accept()
                .map_err(|e| Error::Transport(format!("accept: {e}")))?;
            let mut bytes = Vec::new();
            stream
                .read_to_end(&mut bytes)
                .map_err(|e| Error::Transport(format!("read: {e}")))?;
            if !bytes.is_empty() {
                payloads.push(bytes);
            }
        }

        if let Ok((worker_id, source)) = err_rx.recv() {
            let mut failures = vec![(worker_id, source)];
            while let Ok(f) = err_rx.recv() {
                failures.push(f);
            }
            failures.sort_by_key(|(id, _)| *id);
            let (_, source) = failures.swap_remove(0);
            return Err(source);
        }

        let count = payloads.len();
        let mut summaries = decode_all(payloads)?;
        summaries.sort_by_key(|s| s.worker_id());
        Ok((summaries, count))
    })
}
