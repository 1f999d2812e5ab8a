//! Length-prefixed binary frames.
//!
//! Header layout, all integers little-endian:
//!
//! ```text
//! offset 0  magic       4 bytes  "AXIF"
//! offset 4  version     u8
//! offset 5  msg_type    u8
//! offset 6  request_id  u64
//! offset 14 payload_len u32
//! offset 18 payload
//! ```

use tokio::io::{AsyncRead, AsyncReadExt, AsyncWrite, AsyncWriteExt};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"AXIF";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
/// Frames announcing a longer payload are rejected without reading it.
pub const MAX_PAYLOAD: u32 = 16 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Hello = 1,
    PredictReq = 2,
    PredictResp = 3,
    Error = 4,
    Ping = 5,
}

impl MsgType {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => Self::Hello,
            2 => Self::PredictReq,
            3 => Self::PredictResp,
            4 => Self::Error,
            5 => Self::Ping,
            _ => return None,
        })
    }
}

/// Codes carried in the first two bytes of an ERROR payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum ErrorCode {
    Malformed = 1,
    DimensionMismatch = 2,
    UnsupportedType = 3,
    BadVersion = 4,
    Internal = 5,
}

impl ErrorCode {
    pub fn from_u16(v: u16) -> Option<Self> {
        Some(match v {
            1 => Self::Malformed,
            2 => Self::DimensionMismatch,
            3 => Self::UnsupportedType,
            4 => Self::BadVersion,
            5 => Self::Internal,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub version: u8,
    pub msg_type: MsgType,
    pub request_id: u64,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: MsgType, request_id: u64, payload: Vec<u8>) -> Self {
        Self { version: VERSION, msg_type, request_id, payload }
    }

    pub fn hello(request_id: u64) -> Self {
        Self::new(MsgType::Hello, request_id, vec![VERSION])
    }

    pub fn predict_request(request_id: u64, query: &[f64]) -> Self {
        Self::new(MsgType::PredictReq, request_id, encode_vector(query))
    }

    pub fn predict_response(request_id: u64, prediction: &[f64]) -> Self {
        Self::new(MsgType::PredictResp, request_id, encode_vector(prediction))
    }

    pub fn error(request_id: u64, code: ErrorCode, message: &str) -> Self {
        let mut payload = (code as u16).to_le_bytes().to_vec();
        payload.extend_from_slice(message.as_bytes());
        Self::new(MsgType::Error, request_id, payload)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(self.version);
        out.push(self.msg_type as u8);
        out.extend_from_slice(&self.request_id.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one complete frame from the front of `bytes`, returning it and
    /// the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Protocol(format!("truncated header: {} bytes", bytes.len())));
        }
        let header = parse_header(bytes[..HEADER_LEN].try_into().expect("header length"))?;
        let end = HEADER_LEN + header.payload_len as usize;
        if bytes.len() < end {
            return Err(Error::Protocol(format!(
                "truncated payload: {} of {} bytes",
                bytes.len() - HEADER_LEN,
                header.payload_len
            )));
        }
        let msg_type = header.checked_type()?;
        Ok((
            Self {
                version: header.version,
                msg_type,
                request_id: header.request_id,
                payload: bytes[HEADER_LEN..end].to_vec(),
            },
            end,
        ))
    }

    /// `(code, message)` of an ERROR frame.
    pub fn error_parts(&self) -> Result<(u16, String)> {
        if self.msg_type != MsgType::Error || self.payload.len() < 2 {
            return Err(Error::Protocol("not an error frame".into()));
        }
        let code = u16::from_le_bytes([self.payload[0], self.payload[1]]);
        Ok((code, String::from_utf8_lossy(&self.payload[2..]).into_owned()))
    }
}

/// A header whose magic checked out; version and type are not yet validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u8,
    pub msg_type: u8,
    pub request_id: u64,
    pub payload_len: u32,
}

impl Header {
    pub fn checked_type(&self) -> Result<MsgType> {
        if self.version != VERSION {
            return Err(Error::Protocol(format!("unsupported version {}", self.version)));
        }
        MsgType::from_u8(self.msg_type)
            .ok_or_else(|| Error::Protocol(format!("unknown message type {}", self.msg_type)))
    }
}

pub fn parse_header(bytes: &[u8; HEADER_LEN]) -> Result<Header> {
    if bytes[..4] != MAGIC {
        return Err(Error::Protocol(format!("bad magic {:02x?}", &bytes[..4])));
    }
    let header = Header {
        version: bytes[4],
        msg_type: bytes[5],
        request_id: u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes")),
        payload_len: u32::from_le_bytes(bytes[14..18].try_into().expect("4 bytes")),
    };
    if header.payload_len > MAX_PAYLOAD {
        return Err(Error::Protocol(format!("payload of {} bytes exceeds limit", header.payload_len)));
    }
    Ok(header)
}

/// `u32` count followed by that many `f64`.
pub fn encode_vector(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 8 * values.len());
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_vector(payload: &[u8]) -> Result<Vec<f64>> {
    if payload.len() < 4 {
        return Err(Error::Protocol("vector payload shorter than its length prefix".into()));
    }
    let n = u32::from_le_bytes(payload[..4].try_into().expect("4 bytes")) as usize;
    let body = &payload[4..];
    if body.len() != 8 * n {
        return Err(Error::Protocol(format!(
            "vector announces {n} values but carries {} bytes",
            body.len()
        )));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// Outcome of reading one frame off a stream.
#[derive(Debug)]
pub enum ReadOutcome {
    Frame(Frame),
    /// The header was intact but the frame cannot be accepted; the payload
    /// has been consumed, so the stream is still in sync.
    Rejected { request_id: u64, code: ErrorCode, reason: String },
    /// Clean end of stream between frames.
    Closed,
}

/// Reads one frame. Errors leave the stream out of sync and should end the
/// connection.
pub async fn read_frame<R: AsyncRead + Unpin>(reader: &mut R) -> Result<ReadOutcome> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let n = reader.read(&mut header[filled..]).await?;
        if n == 0 {
            return if filled == 0 {
                Ok(ReadOutcome::Closed)
            } else {
                Err(Error::Protocol("connection closed inside a header".into()))
            };
        }
        filled += n;
    }
    let parsed = parse_header(&header)?;
    let mut payload = vec![0u8; parsed.payload_len as usize];
    reader.read_exact(&mut payload).await?;
    Ok(match parsed.checked_type() {
        Ok(msg_type) => ReadOutcome::Frame(Frame {
            version: parsed.version,
            msg_type,
            request_id: parsed.request_id,
            payload,
        }),
        Err(err) => ReadOutcome::Rejected {
            request_id: parsed.request_id,
            code: if parsed.version != VERSION { ErrorCode::BadVersion } else { ErrorCode::UnsupportedType },
            reason: err.to_string(),
        },
    })
}

pub async fn write_frame<W: AsyncWrite + Unpin>(writer: &mut W, frame: &Frame) -> Result<()> {
    writer.write_all(&frame.to_bytes()).await?;
    writer.flush().await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn msg_type() -> impl Strategy<Value = MsgType> {
        prop_oneof![
            Just(MsgType::Hello),
            Just(MsgType::PredictReq),
            Just(MsgType::PredictResp),
            Just(MsgType::Error),
            Just(MsgType::Ping),
        ]
    }

    proptest! {
        #[test]
        fn bytes_round_trip(t in msg_type(), id in any::<u64>(), payload in proptest::collection::vec(any::<u8>(), 0..512)) {
            let frame = Frame::new(t, id, payload);
            let bytes = frame.to_bytes();
            let (back, used) = Frame::from_bytes(&bytes).unwrap();
            prop_assert_eq!(used, bytes.len());
            prop_assert_eq!(back, frame);
        }

        #[test]
        fn vectors_round_trip_bitwise(values in proptest::collection::vec(any::<f64>(), 0..64)) {
            let back = decode_vector(&encode_vector(&values)).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&values));
        }

        #[test]
        fn stream_round_trip(t in msg_type(), id in any::<u64>(), payload in proptest::collection::vec(any::<u8>(), 0..256)) {
            let frame = Frame::new(t, id, payload);
            let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
            let back = rt.block_on(async {
                let mut buf = Vec::new();
                write_frame(&mut buf, &frame).await.unwrap();
                read_frame(&mut buf.as_slice()).await.unwrap()
            });
            match back {
                ReadOutcome::Frame(f) => prop_assert_eq!(f, frame),
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }

    #[test]
    fn header_layout() {
        let bytes = Frame::new(MsgType::Ping, 0x0102030405060708, vec![9, 9]).to_bytes();
        assert_eq!(&bytes[..4], b"AXIF");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 5);
        assert_eq!(&bytes[6..14], &[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(&bytes[14..18], &[2, 0, 0, 0]);
        assert_eq!(bytes.len(), 20);
    }

    #[test]
    fn error_payload() {
        let f = Frame::error(3, ErrorCode::DimensionMismatch, "expected 64");
        assert_eq!(&f.payload[..2], &[2, 0]);
        assert_eq!(f.error_parts().unwrap(), (2, "expected 64".to_string()));
    }

    #[test]
    fn malformed_input_rejected() {
        let mut bytes = Frame::hello(1).to_bytes();
        assert!(Frame::from_bytes(&bytes[..10]).is_err());
        assert!(Frame::from_bytes(&bytes[..HEADER_LEN]).is_err());
        bytes[0] = b'X';
        assert!(Frame::from_bytes(&bytes).is_err());
        let mut unknown = Frame::hello(1).to_bytes();
        unknown[5] = 42;
        assert!(Frame::from_bytes(&unknown).is_err());
        let mut huge = Frame::hello(1).to_bytes();
        huge[14..18].copy_from_slice(&(MAX_PAYLOAD + 1).to_le_bytes());
        assert!(Frame::from_bytes(&huge).is_err());
        assert!(decode_vector(&[3, 0, 0, 0, 1, 2]).is_err());
    }

    #[tokio::test]
    async fn unknown_type_keeps_stream_in_sync() {
        let mut bad = Frame::new(MsgType::Ping, 7, vec![1, 2, 3]).to_bytes();
        bad[5] = 99;
        bad.extend(Frame::hello(8).to_bytes());
        let mut reader = bad.as_slice();
        match read_frame(&mut reader).await.unwrap() {
            ReadOutcome::Rejected { request_id, code, .. } => {
                assert_eq!(request_id, 7);
                assert_eq!(code, ErrorCode::UnsupportedType);
            }
            other => panic!("{other:?}"),
        }
        match read_frame(&mut reader).await.unwrap() {
            ReadOutcome::Frame(f) => assert_eq!(f, Frame::hello(8)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_frame(&mut reader).await.unwrap(), ReadOutcome::Closed));
    }
}
