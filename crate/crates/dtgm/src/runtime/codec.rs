//! Bit-exact little-endian wire format for worker/master messages.
//!
//! Header (28 bytes): magic `DTGM` | version u8 | msg_type u8 | worker_id u16
//! | d u32 | n u32 | pair_count u32 | payload_len u64. A SUMMARY payload is
//! d·d float64 (Θ̃ row-major), then pair_count records of (j u32, k u32,
//! sigma2 float64), then lambda_used float64. A MATRIX payload is n·d float64
//! row-major with pair_count 0.

use thiserror::Error;

use crate::error::{Error as CrateError, Result};
use crate::inference::PairVariance;
use crate::matrix::DenseMatrix;

use super::WorkerSummary;

pub const MAGIC: [u8; 4] = *b"DTGM";
pub const VERSION: u8 = 1;
pub const MSG_SUMMARY: u8 = 1;
pub const MSG_MATRIX: u8 = 2;
pub const HEADER_LEN: usize = 28;

/// Decode failures, one variant per protocol violation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad magic bytes {found:?}, expected {MAGIC:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported wire version {found}, expected {VERSION}")]
    UnsupportedVersion { found: u8 },

    #[error("unexpected message type {found}, expected {expected}")]
    UnexpectedMsgType { found: u8, expected: u8 },

    #[error("payload length mismatch: header declares {declared} bytes, fields imply {expected}")]
    LengthMismatch { declared: u64, expected: u64 },

    #[error("truncated message: needed {needed} bytes, got {available}")]
    Truncated { needed: usize, available: usize },
}

struct Header {
    msg_type: u8,
    worker_id: u16,
    d: u32,
    n: u32,
    pair_count: u32,
    payload_len: u64,
}

fn write_header(buf: &mut Vec<u8>, h: &Header) {
    buf.extend_from_slice(&MAGIC);
    buf.push(VERSION);
    buf.push(h.msg_type);
    buf.extend_from_slice(&h.worker_id.to_le_bytes());
    buf.extend_from_slice(&h.d.to_le_bytes());
    buf.extend_from_slice(&h.n.to_le_bytes());
    buf.extend_from_slice(&h.pair_count.to_le_bytes());
    buf.extend_from_slice(&h.payload_len.to_le_bytes());
}

fn read_header(bytes: &[u8], expected_type: u8) -> std::result::Result<Header, CodecError> {
    if bytes.len() < HEADER_LEN {
        return Err(CodecError::Truncated {
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(CodecError::BadMagic { found: magic });
    }
    if bytes[4] != VERSION {
        return Err(CodecError::UnsupportedVersion { found: bytes[4] });
    }
    if bytes[5] != expected_type {
        return Err(CodecError::UnexpectedMsgType {
            found: bytes[5],
            expected: expected_type,
        });
    }
    Ok(Header {
        msg_type: bytes[5],
        worker_id: u16::from_le_bytes(bytes[6..8].try_into().unwrap()),
        d: u32::from_le_bytes(bytes[8..12].try_into().unwrap()),
        n: u32::from_le_bytes(bytes[12..16].try_into().unwrap()),
        pair_count: u32::from_le_bytes(bytes[16..20].try_into().unwrap()),
        payload_len: u64::from_le_bytes(bytes[20..28].try_into().unwrap()),
    })
}

fn check_payload(bytes: &[u8], h: &Header, expected_len: u64) -> std::result::Result<(), CodecError> {
    if h.payload_len != expected_len {
        return Err(CodecError::LengthMismatch {
            declared: h.payload_len,
            expected: expected_len,
        });
    }
    let needed = HEADER_LEN + expected_len as usize;
    if bytes.len() < needed {
        return Err(CodecError::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    Ok(())
}

fn read_f64(bytes: &[u8], off: &mut usize) -> f64 {
    let v = f64::from_le_bytes(bytes[*off..*off + 8].try_into().unwrap());
    *off += 8;
    v
}

fn read_u32(bytes: &[u8], off: &mut usize) -> u32 {
    let v = u32::from_le_bytes(bytes[*off..*off + 4].try_into().unwrap());
    *off += 4;
    v
}

/// Total encoded size of a summary for the given dimensions.
pub fn summary_wire_len(d: usize, pair_count: usize) -> usize {
    HEADER_LEN + d * d * 8 + pair_count * 16 + 8
}

/// Encodes a worker summary as one self-describing message.
pub fn encode_summary(summary: &WorkerSummary) -> Vec<u8> {
    let d = summary.d();
    let pairs = summary.variances();
    let payload_len = (d * d * 8 + pairs.len() * 16 + 8) as u64;
    let mut buf = Vec::with_capacity(HEADER_LEN + payload_len as usize);
    write_header(
        &mut buf,
        &Header {
            msg_type: MSG_SUMMARY,
            worker_id: summary.worker_id(),
            d: d as u32,
            n: summary.n() as u32,
            pair_count: pairs.len() as u32,
            payload_len,
        },
    );
    for v in summary.theta_tilde().data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for pv in pairs {
        buf.extend_from_slice(&(pv.j() as u32).to_le_bytes());
        buf.extend_from_slice(&(pv.k() as u32).to_le_bytes());
        buf.extend_from_slice(&pv.sigma2().to_le_bytes());
    }
    buf.extend_from_slice(&summary.lambda_used().to_le_bytes());
    buf
}

/// Decodes one summary message, returning it with the bytes consumed.
pub fn decode_summary(bytes: &[u8]) -> Result<(WorkerSummary, usize)> {
    let h = read_header(bytes, MSG_SUMMARY)?;
    let d = h.d as usize;
    let pair_count = h.pair_count as usize;
    let expected = (d * d * 8 + pair_count * 16 + 8) as u64;
    check_payload(bytes, &h, expected)?;

    let mut off = HEADER_LEN;
    let mut data = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        data.push(read_f64(bytes, &mut off));
    }
    let theta_tilde = DenseMatrix::from_vec(d, d, data)?;
    let mut variances = Vec::with_capacity(pair_count);
    for _ in 0..pair_count {
        let j = read_u32(bytes, &mut off) as usize;
        let k = read_u32(bytes, &mut off) as usize;
        let sigma2 = read_f64(bytes, &mut off);
        if j >= d || k >= d {
            return Err(CrateError::Protocol(format!(
                "variance pair ({j}, {k}) out of range for d = {d}"
            )));
        }
        variances.push(PairVariance::new(
            j,
            k,
            sigma2,
            h.worker_id,
            h.n as usize,
        )?);
    }
    let lambda_used = read_f64(bytes, &mut off);
    let summary = WorkerSummary::new(
        h.worker_id,
        h.n as usize,
        d,
        theta_tilde,
        variances,
        lambda_used,
    )?;
    Ok((summary, off))
}

/// Encodes a data matrix (n×d observations) as one MATRIX message.
pub fn encode_matrix(x: &DenseMatrix) -> Vec<u8> {
    let payload_len = (x.rows() * x.cols() * 8) as u64;
    let mut buf = Vec::with_capacity(HEADER_LEN + payload_len as usize);
    write_header(
        &mut buf,
        &Header {
            msg_type: MSG_MATRIX,
            worker_id: 0,
            d: x.cols() as u32,
            n: x.rows() as u32,
            pair_count: 0,
            payload_len,
        },
    );
    for v in x.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

/// Decodes one MATRIX message.
pub fn decode_matrix(bytes: &[u8]) -> Result<(DenseMatrix, usize)> {
    let h = read_header(bytes, MSG_MATRIX)?;
    let (n, d) = (h.n as usize, h.d as usize);
    let expected = (n * d * 8) as u64;
    check_payload(bytes, &h, expected)?;
    if h.pair_count != 0 {
        return Err(CrateError::Protocol(format!(
            "matrix message carries pair_count {}",
            h.pair_count
        )));
    }
    let mut off = HEADER_LEN;
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        data.push(read_f64(bytes, &mut off));
    }
    Ok((DenseMatrix::from_vec(n, d, data)?, off))
}
