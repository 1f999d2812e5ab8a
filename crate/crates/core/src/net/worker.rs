//! Worker service: answers PREDICT_REQ frames with the model's output.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use tokio::io::{AsyncRead, AsyncWrite};
use tokio::net::{TcpListener, TcpStream};
use tokio::task::JoinHandle;

use super::frame::{decode_vector, read_frame, write_frame, ErrorCode, Frame, MsgType, ReadOutcome};
use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::sim::Corruption;

/// Deliberate misbehavior, for demos and tests.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaultInjection {
    /// Sleep before every prediction response.
    pub delay_ms: u64,
    /// Corrupt every prediction with this noise level.
    pub byzantine_sigma: Option<f64>,
    /// Noise is drawn from `(noise_seed, request_id)`.
    pub noise_seed: u64,
    pub corruption: Corruption,
}

/// A worker running on a background task; stops when dropped.
#[derive(Debug)]
pub struct WorkerHandle {
    pub addr: SocketAddr,
    task: JoinHandle<()>,
}

impl WorkerHandle {
    pub fn abort(&self) {
        self.task.abort();
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// Binds `addr` and serves in the background. Use port 0 for an ephemeral port.
pub async fn spawn_worker(
    addr: &str,
    predictor: Arc<dyn Predictor>,
    faults: FaultInjection,
) -> Result<WorkerHandle> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let task = tokio::spawn(async move {
        let _ = serve_worker(listener, predictor, faults).await;
    });
    Ok(WorkerHandle { addr, task })
}

/// Accepts connections forever, one task per connection.
pub async fn serve_worker(
    listener: TcpListener,
    predictor: Arc<dyn Predictor>,
    faults: FaultInjection,
) -> Result<()> {
    loop {
        let (stream, _) = listener.accept().await?;
        stream.set_nodelay(true)?;
        let predictor = Arc::clone(&predictor);
        tokio::spawn(async move {
            let _ = serve_connection(stream, predictor.as_ref(), faults).await;
        });
    }
}

/// Handles frames on one connection until the peer closes it or the stream
/// loses framing.
pub async fn serve_connection<S>(mut stream: S, predictor: &dyn Predictor, faults: FaultInjection) -> Result<()>
where
    S: AsyncRead + AsyncWrite + Unpin,
{
    loop {
        let frame = match read_frame(&mut stream).await {
            Ok(ReadOutcome::Frame(frame)) => frame,
            Ok(ReadOutcome::Rejected { request_id, code, reason }) => {
                write_frame(&mut stream, &Frame::error(request_id, code, &reason)).await?;
                continue;
            }
            Ok(ReadOutcome::Closed) => return Ok(()),
            Err(err) => {
                // Framing is lost; report once and hang up.
                let _ = write_frame(&mut stream, &Frame::error(0, ErrorCode::Malformed, &err.to_string())).await;
                return Err(err);
            }
        };
        let reply = respond(&frame, predictor, &faults).await;
        write_frame(&mut stream, &reply).await?;
    }
}

async fn respond(frame: &Frame, predictor: &dyn Predictor, faults: &FaultInjection) -> Frame {
    let id = frame.request_id;
    match frame.msg_type {
        MsgType::Hello => Frame::hello(id),
        MsgType::Ping => Frame::new(MsgType::Ping, id, frame.payload.clone()),
        MsgType::PredictReq => {
            let query = match decode_vector(&frame.payload) {
                Ok(q) => q,
                Err(err) => return Frame::error(id, ErrorCode::Malformed, &err.to_string()),
            };
            let mut y = match predictor.predict(&query) {
                Ok(y) => y,
                Err(err @ Error::DimensionMismatch { .. }) => {
                    return Frame::error(id, ErrorCode::DimensionMismatch, &err.to_string())
                }
                Err(err) => return Frame::error(id, ErrorCode::Internal, &err.to_string()),
            };
            if faults.delay_ms > 0 {
                tokio::time::sleep(Duration::from_millis(faults.delay_ms)).await;
            }
            if let Some(sigma) = faults.byzantine_sigma {
                faults.corruption.apply(&mut y.0, faults.noise_seed, id, sigma);
            }
            Frame::predict_response(id, &y.0)
        }
        MsgType::PredictResp | MsgType::Error => Frame::error(
            id,
            ErrorCode::UnsupportedType,
            "workers accept HELLO, PING and PREDICT_REQ",
        ),
    }
}

/// Connects and performs the HELLO handshake.
pub async fn connect(addr: &str) -> Result<TcpStream> {
    let mut stream = TcpStream::connect(addr).await?;
    stream.set_nodelay(true)?;
    write_frame(&mut stream, &Frame::hello(0)).await?;
    match read_frame(&mut stream).await? {
        ReadOutcome::Frame(f) if f.msg_type == MsgType::Hello => Ok(stream),
        other => Err(Error::Protocol(format!("unexpected handshake reply {other:?}"))),
    }
}
