//! Dispatcher: encode, fan out, collect the first quorum, locate, decode.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use tokio::net::TcpStream;
use tokio::sync::mpsc;
use tokio::task::JoinSet;

use super::frame::{decode_vector, read_frame, write_frame, Frame, MsgType, ReadOutcome};
use crate::codec::{BerrutCodec, CodingConfig, PredictionVector, QueryBatch};
use crate::error::{Error, Result};
use crate::locator::LocatorReport;
use crate::sim::locate_and_decode;

/// How long to wait and how many results to wait for.
///
/// Stragglers are never retried; the code's redundancy replaces retries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispatchPolicy {
    pub quorum: usize,
    pub deadline_ms: u64,
    /// Worker `i` is sent request id `first_request_id + i`.
    pub first_request_id: u64,
}

impl DispatchPolicy {
    pub const RETRY_COUNT: usize = 0;

    pub fn new(config: &CodingConfig, deadline_ms: u64) -> Result<Self> {
        if deadline_ms == 0 {
            return Err(Error::InvalidConfig("deadline must be positive".into()));
        }
        Ok(Self { quorum: config.quorum, deadline_ms, first_request_id: 0 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOutcome {
    pub decoded: Vec<PredictionVector>,
    /// Worker ids in arrival order, truncated at the quorum.
    pub returned: Vec<usize>,
    /// Milliseconds from fan-out to each returned response.
    pub latencies_ms: BTreeMap<usize, f64>,
    pub excluded: BTreeSet<usize>,
    pub locator: Option<LocatorReport>,
    pub predictions: BTreeMap<usize, PredictionVector>,
    /// Time at which the quorum completed.
    pub wall_clock_ms: f64,
    /// Workers that answered with an error frame or failed at the transport level.
    pub failed: BTreeSet<usize>,
}

/// Sends coded query `i` to `endpoints[i]`, decodes on the first
/// `policy.quorum` responses and abandons the rest.
pub async fn dispatch(
    batch: &QueryBatch,
    config: &CodingConfig,
    endpoints: &[String],
    policy: &DispatchPolicy,
) -> Result<DispatchOutcome> {
    if endpoints.len() != config.worker_count() {
        return Err(Error::InvalidConfig(format!(
            "{} endpoints given, {} workers required",
            endpoints.len(),
            config.worker_count()
        )));
    }
    if policy.quorum < config.quorum {
        return Err(Error::InvalidConfig(format!(
            "quorum {} is below the decoder's minimum {}",
            policy.quorum, config.quorum
        )));
    }
    let codec = BerrutCodec::new(*config)?;
    let coded = codec.encode(batch)?;

    let start = Instant::now();
    let deadline = start + Duration::from_millis(policy.deadline_ms);
    let (tx, mut rx) = mpsc::channel(endpoints.len());
    let mut tasks = JoinSet::new();
    for (id, endpoint) in endpoints.iter().enumerate() {
        let tx = tx.clone();
        let endpoint = endpoint.clone();
        let request = Frame::predict_request(policy.first_request_id + id as u64, &coded.coded[id]);
        tasks.spawn(async move {
            let result = request_prediction(&endpoint, request).await;
            let _ = tx.send((id, result, start.elapsed())).await;
        });
    }
    drop(tx);

    let mut returned = Vec::with_capacity(policy.quorum);
    let mut predictions = BTreeMap::new();
    let mut latencies_ms = BTreeMap::new();
    let mut failed = BTreeSet::new();
    let mut wall_clock_ms = 0.0;
    while returned.len() < policy.quorum {
        match tokio::time::timeout_at(deadline.into(), rx.recv()).await {
            Ok(Some((id, Ok(y), elapsed))) => {
                let ms = elapsed.as_secs_f64() * 1e3;
                returned.push(id);
                predictions.insert(id, y);
                latencies_ms.insert(id, ms);
                wall_clock_ms = ms;
            }
            Ok(Some((id, Err(_), _))) => {
                failed.insert(id);
            }
            // Every request finished or the deadline passed.
            Ok(None) | Err(_) => break,
        }
    }
    tasks.abort_all();

    if returned.len() < policy.quorum {
        let mut responsive = returned;
        responsive.sort_unstable();
        return Err(Error::QuorumNotReached { responsive, need: policy.quorum });
    }

    let (locator, decoded) = locate_and_decode(&codec, &predictions)?;
    let excluded = locator.as_ref().map(|r| r.located.clone()).unwrap_or_default();
    Ok(DispatchOutcome {
        decoded,
        returned,
        latencies_ms,
        excluded,
        locator,
        predictions,
        wall_clock_ms,
        failed,
    })
}

async fn request_prediction(endpoint: &str, request: Frame) -> Result<PredictionVector> {
    let mut stream = TcpStream::connect(endpoint).await?;
    stream.set_nodelay(true)?;
    write_frame(&mut stream, &request).await?;
    loop {
        match read_frame(&mut stream).await? {
            ReadOutcome::Frame(f) if f.request_id != request.request_id => continue,
            ReadOutcome::Frame(f) if f.msg_type == MsgType::PredictResp => {
                return Ok(PredictionVector(decode_vector(&f.payload)?));
            }
            ReadOutcome::Frame(f) if f.msg_type == MsgType::Error => {
                let (code, message) = f.error_parts()?;
                return Err(Error::Protocol(format!("worker error {code}: {message}")));
            }
            ReadOutcome::Frame(f) => {
                return Err(Error::Protocol(format!("unexpected {:?} reply", f.msg_type)));
            }
            ReadOutcome::Rejected { reason, .. } => return Err(Error::Protocol(reason)),
            ReadOutcome::Closed => return Err(Error::Transport("worker closed the connection".into())),
        }
    }
}
