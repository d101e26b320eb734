use std::io::{BufRead, Write};

use super::frame::{encode_record, parse_record, RecordProblem};
use super::{EstimatedFrame, GatewayError};
use crate::body_model::{interpolate_pose, BodyPose, BodyShape};

/// Line-numbered record decoding with timestamp ordering, shared by the
/// replay and live transports.
#[derive(Debug, Default)]
pub(crate) struct RecordDecoder {
    line: usize,
    last_t: Option<f64>,
}

#[allow(clippy::large_enum_variant)]
pub(crate) enum Decoded {
    Blank,
    Frame(EstimatedFrame),
    Rejected(GatewayError),
}

impl RecordDecoder {
    pub(crate) fn decode(&mut self, raw: &str) -> Decoded {
        self.line += 1;
        let text = raw.trim_end_matches(['\n', '\r']);
        if text.trim().is_empty() {
            return Decoded::Blank;
        }
        let frame = match parse_record(text) {
            Ok(f) => f,
            Err(RecordProblem::Syntax(message)) => {
                return Decoded::Rejected(GatewayError::Parse { line: self.line, message })
            }
            Err(RecordProblem::Invalid(message)) => {
                return Decoded::Rejected(GatewayError::Validation { line: self.line, message })
            }
        };
        if let Some(prev) = self.last_t {
            if frame.timestamp < prev {
                return Decoded::Rejected(GatewayError::TimestampRegression {
                    line: self.line,
                    previous: prev,
                    found: frame.timestamp,
                });
            }
        }
        self.last_t = Some(frame.timestamp);
        Decoded::Frame(frame)
    }
}

/// Frames from a `.poselog` stream, in file order.
///
/// A bad record yields an error and reading continues with the next line;
/// I/O errors end the stream.
pub struct ReplayStream<R> {
    reader: R,
    decoder: RecordDecoder,
    buf: String,
    done: bool,
}

pub fn open_replay<R: BufRead>(reader: R) -> ReplayStream<R> {
    ReplayStream { reader, decoder: RecordDecoder::default(), buf: String::new(), done: false }
}

impl<R: BufRead> Iterator for ReplayStream<R> {
    type Item = Result<EstimatedFrame, GatewayError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => match self.decoder.decode(&self.buf) {
                    Decoded::Blank => continue,
                    Decoded::Frame(f) => return Some(Ok(f)),
                    Decoded::Rejected(e) => return Some(Err(e)),
                },
                Err(e) => {
                    self.done = true;
                    return Some(Err(GatewayError::Io(e)));
                }
            }
        }
        None
    }
}

/// Reads a whole `.poselog`, failing on the first bad record.
pub fn read_poselog<R: BufRead>(reader: R) -> Result<Vec<EstimatedFrame>, GatewayError> {
    open_replay(reader).collect()
}

pub fn write_poselog<'a, W: Write>(
    frames: impl IntoIterator<Item = &'a EstimatedFrame>,
    mut w: W,
) -> std::io::Result<()> {
    for f in frames {
        writeln!(w, "{}", encode_record(f))?;
    }
    w.flush()
}

/// A synthetic trainee moving linearly from `start` to `target`.
///
/// Frame `i` is at time `i * dt` with pose interpolated at `i / (frames - 1)`;
/// the last frame carries `target` exactly.
pub fn synthesize_convergence_replay(
    start: &BodyPose,
    target: &BodyPose,
    shape: &BodyShape,
    frames: usize,
    dt: f64,
) -> Result<Vec<EstimatedFrame>, GatewayError> {
    if frames < 2 {
        return Err(GatewayError::Synthesis(format!("need at least 2 frames, got {frames}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(GatewayError::Synthesis(format!("dt must be positive, got {dt}")));
    }
    (0..frames)
        .map(|i| {
            let t = i as f64 / (frames - 1) as f64;
            let pose = interpolate_pose(start, target, t).map_err(|e| GatewayError::Synthesis(e.to_string()))?;
            Ok(EstimatedFrame::new(i as f64 * dt, pose, *shape))
        })
        .collect()
}
