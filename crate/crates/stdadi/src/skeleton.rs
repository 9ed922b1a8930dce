//! Skeleton-sequence text format: parsing and writing.
//!
//! Layout (whitespace-separated):
//!
//! ```text
//! <frame count>
//! per frame:
//!   <body count>
//!   per body:
//!     <metadata line, ignored>
//!     <joint count>
//!     per joint: x y z [extra fields ignored]
//! ```
//!
//! Bodies beyond `max_bodies` are dropped in order of appearance within
//! the frame; frames with fewer bodies leave the remaining slots
//! zero-filled and marked absent.

use crate::error::{Error, Result};
use ndarray::{Array2, Array4};
use std::fmt::Write as _;
use std::io::BufRead;

/// Joint count used by the common 25-joint skeleton layout; parsing
/// accepts any consistent per-file joint count and falls back to this
/// when a file contains no bodies at all.
pub const DEFAULT_JOINT_COUNT: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct ParseOptions {
    /// Number of body slots in the output tensor.
    pub max_bodies: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { max_bodies: 2 }
    }
}

/// Dense skeleton sequence: positions shaped
/// `(frames, body_slots, joints, 3)` with a per-frame presence mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    frame_count: usize,
    joint_count: usize,
    body_slots: usize,
    body_count: usize,
    positions: Array4<f64>,
    body_present: Array2<bool>,
}

impl SkeletonSequence {
    /// Builds a sequence from raw parts, validating shapes, finiteness
    /// of present positions, and zero fill of absent slots.
    pub fn from_parts(positions: Array4<f64>, body_present: Array2<bool>) -> Result<Self> {
        let shape = positions.shape();
        let (frames, slots, joints, coords) = (shape[0], shape[1], shape[2], shape[3]);
        if coords != 3 {
            return Err(Error::ShapeMismatch(format!(
                "positions last axis must be 3, got {coords}"
            )));
        }
        if frames == 0 || joints == 0 {
            return Err(Error::ShapeMismatch(
                "need at least one frame and one joint".into(),
            ));
        }
        if body_present.shape() != [frames, slots] {
            return Err(Error::ShapeMismatch(format!(
                "presence mask {:?} does not match positions {:?}",
                body_present.shape(),
                shape
            )));
        }
        let mut body_count = 0usize;
        for f in 0..frames {
            let mut present = 0;
            for b in 0..slots {
                if body_present[[f, b]] {
                    present += 1;
                    for j in 0..joints {
                        for c in 0..3 {
                            if !positions[[f, b, j, c]].is_finite() {
                                return Err(Error::NonFiniteInput(format!(
                                    "position at frame {f}, body {b}, joint {j}"
                                )));
                            }
                        }
                    }
                }
            }
            body_count = body_count.max(present);
        }
        Ok(SkeletonSequence {
            frame_count: frames,
            joint_count: joints,
            body_slots: slots,
            body_count,
            positions,
            body_present,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    /// Number of body slots in the dense tensors.
    pub fn body_slots(&self) -> usize {
        self.body_slots
    }

    /// Maximum number of simultaneously present bodies.
    pub fn body_count(&self) -> usize {
        self.body_count
    }

    pub fn positions(&self) -> &Array4<f64> {
        &self.positions
    }

    pub fn body_present(&self) -> &Array2<bool> {
        &self.body_present
    }

    pub fn is_present(&self, frame: usize, body: usize) -> bool {
        self.body_present[[frame, body]]
    }

    /// Whether a body slot is present in any frame.
    pub fn body_used(&self, body: usize) -> bool {
        (0..self.frame_count).any(|f| self.body_present[[f, body]])
    }

    /// One joint's positions over all frames (absent frames contribute
    /// their zero fill).
    pub fn joint_positions(&self, body: usize, joint: usize) -> Vec<[f64; 3]> {
        (0..self.frame_count)
            .map(|f| {
                [
                    self.positions[[f, body, joint, 0]],
                    self.positions[[f, body, joint, 1]],
                    self.positions[[f, body, joint, 2]],
                ]
            })
            .collect()
    }
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        LineReader {
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        self.lines.next().map(|l| {
            self.line_no += 1;
            (self.line_no, l)
        })
    }
}

/// Parses the text format described in the module docs.
pub fn parse_skeleton_str(text: &str, opts: &ParseOptions) -> Result<SkeletonSequence> {
    if opts.max_bodies == 0 {
        return Err(Error::ShapeMismatch("max_bodies must be at least 1".into()));
    }
    let mut reader = LineReader::new(text);
    let (line, first) = reader
        .next_line()
        .ok_or_else(|| Error::Malformed {
            line: 1,
            message: "empty input, expected frame count".into(),
        })?;
    let declared: usize = parse_count(first, line, "frame count")?;
    if declared == 0 {
        return Err(Error::Malformed {
            line,
            message: "frame count must be at least 1".into(),
        });
    }

    let mut joint_count: Option<usize> = None;
    // (frame, slot) -> 25x3 positions
    let mut frames: Vec<Vec<Vec<[f64; 3]>>> = Vec::with_capacity(declared);
    for _ in 0..declared {
        let Some((line, raw)) = reader.next_line() else {
            return Err(Error::FrameCountMismatch {
                declared,
                found: frames.len(),
            });
        };
        let bodies_here: usize = parse_count(raw, line, "body count")?;
        let mut bodies: Vec<Vec<[f64; 3]>> = Vec::new();
        for b in 0..bodies_here {
            // metadata line, content ignored
            let Some((_, _meta)) = reader.next_line() else {
                return Err(Error::FrameCountMismatch {
                    declared,
                    found: frames.len(),
                });
            };
            let Some((line, raw)) = reader.next_line() else {
                return Err(Error::FrameCountMismatch {
                    declared,
                    found: frames.len(),
                });
            };
            let joints_here: usize = parse_count(raw, line, "joint count")?;
            match joint_count {
                None => {
                    if joints_here == 0 {
                        return Err(Error::Malformed {
                            line,
                            message: "joint count must be at least 1".into(),
                        });
                    }
                    joint_count = Some(joints_here);
                }
                Some(expected) if expected != joints_here => {
                    return Err(Error::Malformed {
                        line,
                        message: format!(
                            "inconsistent joint count: {joints_here}, expected {expected}"
                        ),
                    });
                }
                _ => {}
            }
            let mut joints = Vec::with_capacity(joints_here);
            for _ in 0..joints_here {
                let Some((line, raw)) = reader.next_line() else {
                    return Err(Error::FrameCountMismatch {
                        declared,
                        found: frames.len(),
                    });
                };
                joints.push(parse_joint_line(raw, line)?);
            }
            if b < opts.max_bodies {
                bodies.push(joints);
            }
        }
        frames.push(bodies);
    }
    // Trailing blank lines are fine; any other content means the header
    // undercounted the frames.
    while let Some((line, raw)) = reader.next_line() {
        if !raw.trim().is_empty() {
            let _ = line;
            return Err(Error::FrameCountMismatch {
                declared,
                found: declared + 1,
            });
        }
    }

    let joints = joint_count.unwrap_or(DEFAULT_JOINT_COUNT);
    let slots = opts.max_bodies;
    let mut positions = Array4::<f64>::zeros((declared, slots, joints, 3));
    let mut present = Array2::<bool>::from_elem((declared, slots), false);
    for (f, bodies) in frames.iter().enumerate() {
        for (b, body) in bodies.iter().enumerate() {
            present[[f, b]] = true;
            for (j, p) in body.iter().enumerate() {
                for c in 0..3 {
                    positions[[f, b, j, c]] = p[c];
                }
            }
        }
    }
    SkeletonSequence::from_parts(positions, present)
}

/// Parses from any buffered reader; the whole stream is read first so
/// line numbers in errors match the original input.
pub fn parse_skeleton_reader<R: BufRead>(mut r: R, opts: &ParseOptions) -> Result<SkeletonSequence> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_skeleton_str(&text, opts)
}

fn parse_count(raw: &str, line: usize, what: &str) -> Result<usize> {
    raw.trim().parse().map_err(|_| Error::Malformed {
        line,
        message: format!("expected {what}, got {raw:?}"),
    })
}

fn parse_joint_line(raw: &str, line: usize) -> Result<[f64; 3]> {
    let mut fields = raw.split_whitespace();
    let mut out = [0.0f64; 3];
    for v in out.iter_mut() {
        let tok = fields.next().ok_or_else(|| Error::Malformed {
            line,
            message: "joint line needs at least three coordinates".into(),
        })?;
        *v = tok.parse().map_err(|_| Error::Malformed {
            line,
            message: format!("bad coordinate {tok:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFiniteCoordinate { line });
        }
    }
    // remaining fields are ignored by design
    Ok(out)
}

/// Writes a sequence in the same text layout the parser accepts.
/// Present bodies are written in slot order; coordinates use the
/// shortest round-trip decimal form, so parse(write(s)) == s.
pub fn write_skeleton_string(seq: &SkeletonSequence) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", seq.frame_count());
    for f in 0..seq.frame_count() {
        let present: Vec<usize> = (0..seq.body_slots())
            .filter(|&b| seq.is_present(f, b))
            .collect();
        let _ = writeln!(out, "{}", present.len());
        for &b in &present {
            let _ = writeln!(out, "{b} 0 0 0 0 0 0 0 0 0");
            let _ = writeln!(out, "{}", seq.joint_count());
            for j in 0..seq.joint_count() {
                let p = seq.positions();
                let _ = writeln!(
                    out,
                    "{} {} {}",
                    p[[f, b, j, 0]],
                    p[[f, b, j, 1]],
                    p[[f, b, j, 2]]
                );
            }
        }
    }
    out
}
