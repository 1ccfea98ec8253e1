//! Coordinate extraction from free-form model answers.
//!
//! The answer is read line by line. Three line shapes matter:
//!
//! * frame headers, `Frame 51:` (markdown emphasis and bullets tolerated),
//! * named triples, `l_knee: (12.0, -3.5, 880.1)`,
//! * bare triples, `(12.0, -3.5, 880.1)`.
//!
//! Every other line is prose and is skipped, which lets the model describe
//! movements between coordinate lines. Named triples are matched to joints by
//! name; bare triples and unknown names fall back to their position within
//! the frame, read in traversal order.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{MotionSequence, Pose, DEFAULT_FPS};
use crate::skeleton::SkeletonSpec;

/// Byte range in the parsed text.
pub type Span = (usize, usize);

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum ParseError {
    #[error("fewer frames than requested (found {found} complete frames, expected {requested})")]
    FewerFramesThanRequested { found: usize, requested: usize, span: Span },
    #[error("a joint count mismatch in frame {frame} (found {found} joints, expected {expected})")]
    JointCountMismatch {
        frame: usize,
        found: usize,
        expected: usize,
        span: Span,
    },
    #[error("no parsable frames")]
    NoParsableFrames { span: Span },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::FewerFramesThanRequested { span, .. }
            | ParseError::JointCountMismatch { span, .. }
            | ParseError::NoParsableFrames { span } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedPrediction {
    pub sequence: MotionSequence,
    /// Source range of each returned frame.
    pub raw_spans: Vec<Span>,
    /// Header number of each returned frame, when the answer had one.
    pub frame_numbers: Vec<Option<usize>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub fps: f64,
    /// Numbered frames below this are skipped, e.g. restated observed frames.
    pub min_frame_number: Option<usize>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            fps: DEFAULT_FPS,
            min_frame_number: None,
        }
    }
}

const NUM: &str = r"[-+\u{2212}]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?";

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^[\s#>*_\-]*frame\s*#?\s*(\d+)\b[\s*_]*[:.)\-]?[\s*_]*(.*)$").unwrap())
}

fn triple_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"^[\s>*\-\u{{2022}}]*(?:(?:\d+[.)]\s+)?[*_`]*(?P<name>[A-Za-z][A-Za-z0-9_ ]*?)[*_`]*\s*[:=]\s*)?[\[(]\s*(?P<x>{NUM})\s*,\s*(?P<y>{NUM})\s*,\s*(?P<z>{NUM})\s*[\])][\s.,;]*$"
        ))
        .unwrap()
    })
}

fn number(s: &str) -> f64 {
    s.replace('\u{2212}', "-").parse().expect("regex admits only numbers")
}

#[derive(Debug)]
struct Triple {
    name: Option<String>,
    xyz: [f64; 3],
}

#[derive(Debug)]
struct Block {
    number: Option<usize>,
    span: Span,
    triples: Vec<Triple>,
}

fn parse_triple(line: &str) -> Option<Triple> {
    let c = triple_re().captures(line.trim_end())?;
    Some(Triple {
        name: c.name("name").map(|m| m.as_str().trim().to_string()),
        xyz: [number(&c["x"]), number(&c["y"]), number(&c["z"])],
    })
}

/// Splits the text into frame blocks. Without any header, triples are
/// grouped positionally, `joints` at a time.
fn scan(text: &str, joints: usize, warnings: &mut Vec<String>) -> Vec<Block> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut loose: Vec<(Span, Triple)> = Vec::new();
    let mut offset = 0;
    for raw in text.split_inclusive('\n') {
        let start = offset;
        offset += raw.len();
        let line = raw.trim_end_matches(['\n', '\r']);
        let end = start + line.len();
        if let Some(c) = header_re().captures(line) {
            let number = c[1].parse().ok();
            let mut block = Block {
                number,
                span: (start, end),
                triples: Vec::new(),
            };
            if let Some(t) = parse_triple(c.get(2).map_or("", |m| m.as_str())) {
                block.triples.push(t);
            }
            blocks.push(block);
            continue;
        }
        if let Some(t) = parse_triple(line) {
            match blocks.last_mut() {
                Some(b) => {
                    b.triples.push(t);
                    b.span.1 = end;
                }
                None => loose.push(((start, end), t)),
            }
        }
    }
    if blocks.is_empty() && !loose.is_empty() {
        warnings.push("no frame headers; grouped coordinates by joint count".into());
        for chunk in loose.chunks(joints.max(1)) {
            blocks.push(Block {
                number: None,
                span: (chunk[0].0 .0, chunk[chunk.len() - 1].0 .1),
                triples: Vec::new(),
            });
            let b = blocks.last_mut().expect("just pushed");
            b.triples.extend(chunk.iter().map(|(_, t)| Triple {
                name: t.name.clone(),
                xyz: t.xyz,
            }));
        }
    } else if !loose.is_empty() {
        warnings.push(format!(
            "ignored {} coordinate lines before the first frame header",
            loose.len()
        ));
    }
    blocks.retain(|b| !b.triples.is_empty());
    blocks
}

fn normalize_name(name: &str) -> String {
    name.trim().to_lowercase().replace([' ', '-'], "_")
}

/// Assigns a block's triples to joints. Returns the pose when every joint is
/// covered, otherwise the number of joints found.
fn assemble(block: &Block, ordinal: usize, skeleton: &SkeletonSpec, warnings: &mut Vec<String>) -> Result<Pose, usize> {
    let n = skeleton.joint_count();
    let mut slots: Vec<Option<[f64; 3]>> = vec![None; n];
    let label = block.number.unwrap_or(ordinal);
    for (pos, t) in block.triples.iter().enumerate() {
        let by_name = t.name.as_deref().and_then(|name| {
            let key = normalize_name(name);
            let hit = skeleton.joints().iter().position(|j| normalize_name(j) == key);
            if hit.is_none() {
                warnings.push(format!(
                    "frame {label}: unknown joint {name:?}, using position {}",
                    pos + 1
                ));
            }
            hit
        });
        let joint = match by_name {
            Some(j) => j,
            None if pos < n => skeleton.traversal()[pos],
            None => {
                warnings.push(format!("frame {label}: extra coordinate line {} ignored", pos + 1));
                continue;
            }
        };
        if slots[joint].is_some() {
            warnings.push(format!(
                "frame {label}: joint {:?} given twice, keeping the first",
                skeleton.joint_name(joint)
            ));
            continue;
        }
        slots[joint] = Some(t.xyz);
    }
    let found = slots.iter().filter(|s| s.is_some()).count();
    if found < n {
        return Err(found);
    }
    Pose::new(slots.into_iter().map(|s| s.expect("all filled")).collect()).map_err(|_| found)
}

/// Every complete frame in the text with its header number, in order.
/// Incomplete frames are dropped.
pub fn extract_frames(text: &str, skeleton: &SkeletonSpec) -> Vec<(Option<usize>, Pose)> {
    let mut warnings = Vec::new();
    scan(text, skeleton.joint_count(), &mut warnings)
        .iter()
        .enumerate()
        .filter_map(|(i, b)| assemble(b, i + 1, skeleton, &mut warnings).ok().map(|p| (b.number, p)))
        .collect()
}

pub fn parse_prediction(answer: &str, j: usize, skeleton: &SkeletonSpec) -> Result<ParsedPrediction, ParseError> {
    parse_prediction_with(answer, j, skeleton, &ParseOptions::default())
}

/// Returns the first `j` complete frames of the answer.
pub fn parse_prediction_with(
    answer: &str,
    j: usize,
    skeleton: &SkeletonSpec,
    options: &ParseOptions,
) -> Result<ParsedPrediction, ParseError> {
    let mut warnings = Vec::new();
    let blocks = scan(answer, skeleton.joint_count(), &mut warnings);
    let mut poses = Vec::with_capacity(j);
    let mut spans = Vec::with_capacity(j);
    let mut numbers = Vec::with_capacity(j);
    let mut first_incomplete: Option<ParseError> = None;
    let mut considered = 0usize;

    for (ordinal, block) in blocks.iter().enumerate() {
        if poses.len() == j {
            break;
        }
        if let (Some(min), Some(num)) = (options.min_frame_number, block.number) {
            if num < min {
                warnings.push(format!("skipped frame {num}, numbered before frame {min}"));
                continue;
            }
        }
        considered += 1;
        match assemble(block, ordinal + 1, skeleton, &mut warnings) {
            Ok(pose) => {
                poses.push(pose);
                spans.push(block.span);
                numbers.push(block.number);
            }
            Err(found) => {
                let frame = block.number.unwrap_or(ordinal + 1);
                warnings.push(format!(
                    "frame {frame}: incomplete ({found} of {} joints)",
                    skeleton.joint_count()
                ));
                first_incomplete.get_or_insert(ParseError::JointCountMismatch {
                    frame,
                    found,
                    expected: skeleton.joint_count(),
                    span: block.span,
                });
            }
        }
    }

    if poses.len() < j || j == 0 {
        if let Some(err) = first_incomplete {
            return Err(err);
        }
        if considered == 0 || poses.is_empty() {
            return Err(ParseError::NoParsableFrames {
                span: (0, answer.len()),
            });
        }
        return Err(ParseError::FewerFramesThanRequested {
            found: poses.len(),
            requested: j,
            span: (spans.last().map_or(0, |s| s.1), answer.len()),
        });
    }
    let sequence = MotionSequence::new(poses, options.fps).map_err(|_| ParseError::NoParsableFrames {
        span: (0, answer.len()),
    })?;
    Ok(ParsedPrediction {
        sequence,
        raw_spans: spans,
        frame_numbers: numbers,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::prompt::render_sequence;

    fn seq(frames: usize) -> MotionSequence {
        let poses = (0..frames)
            .map(|f| Pose::new((0..5).map(|k| [f as f64 * 1.5, -(k as f64), 100.25]).collect()).unwrap())
            .collect();
        MotionSequence::new(poses, 25.0).unwrap()
    }

    #[test]
    fn formatter_output_round_trips() {
        let sk = fixtures::toy_skeleton();
        let s = seq(3);
        let text = render_sequence(&s, 6, &sk, 2).unwrap();
        let p = parse_prediction(&text, 3, &sk).unwrap();
        assert_eq!(p.sequence, s);
        assert!(p.warnings.is_empty());
        assert_eq!(p.frame_numbers, vec![Some(6), Some(7), Some(8)]);
        assert_eq!(&text[p.raw_spans[0].0..p.raw_spans[0].0 + 8], "Frame 6:");
    }

    #[test]
    fn prose_between_joint_lines_is_ignored() {
        let sk = fixtures::toy_skeleton();
        let s = seq(2);
        let plain = render_sequence(&s, 6, &sk, 2).unwrap();
        let chatty: String = plain
            .lines()
            .map(|l| {
                if l.starts_with("Frame") {
                    format!("{l}\n")
                } else {
                    format!("The joint keeps moving forward at a steady pace (about 1.5 mm per frame).\n{l}\n")
                }
            })
            .collect();
        let a = parse_prediction(&plain, 2, &sk).unwrap();
        let b = parse_prediction(&chatty, 2, &sk).unwrap();
        assert_eq!(a.sequence, b.sequence);
        assert!(b.warnings.is_empty(), "{:?}", b.warnings);
    }

    #[test]
    fn missing_frame_reported() {
        let sk = fixtures::toy_skeleton();
        let text = render_sequence(&seq(2), 1, &sk, 1).unwrap();
        let err = parse_prediction(&text, 3, &sk).unwrap_err();
        assert!(matches!(
            err,
            ParseError::FewerFramesThanRequested {
                found: 2,
                requested: 3,
                ..
            }
        ));
    }

    #[test]
    fn incomplete_frame_reported() {
        let sk = fixtures::toy_skeleton();
        let text = render_sequence(&seq(2), 1, &sk, 1).unwrap();
        let cut: Vec<&str> = text.lines().filter(|l| !l.starts_with("r_foot")).collect();
        let err = parse_prediction(&cut.join("\n"), 2, &sk).unwrap_err();
        assert!(matches!(
            err,
            ParseError::JointCountMismatch {
                frame: 1,
                found: 4,
                expected: 5,
                ..
            }
        ));
        let (a, b) = err.span();
        assert!(cut.join("\n")[a..b].starts_with("Frame 1:"));
    }

    #[test]
    fn nothing_to_parse() {
        let sk = fixtures::toy_skeleton();
        let err = parse_prediction("I cannot help with that.", 1, &sk).unwrap_err();
        assert_eq!(err, ParseError::NoParsableFrames { span: (0, 24) });
    }

    #[test]
    fn markdown_and_bare_triples() {
        let sk = fixtures::toy_skeleton();
        let text = "**Frame 51:**\n- (1, 2, 3)\n- (4, 5, 6)\n- (7, 8, 9)\n- (1.5, 2, 3)\n- (0, 0, \u{2212}1)\n";
        let p = parse_prediction(text, 1, &sk).unwrap();
        let f = &p.sequence.frames()[0];
        assert_eq!(f.joint(0), [1.0, 2.0, 3.0]);
        assert_eq!(f.joint(4), [0.0, 0.0, -1.0]);
        assert_eq!(p.frame_numbers, vec![Some(51)]);
    }

    #[test]
    fn names_override_position() {
        let sk = fixtures::toy_skeleton();
        let text =
            "Frame 1:\nr_foot: (5, 5, 5)\nroot: (1, 1, 1)\nl_hand: (2, 2, 2)\nr_hand: (3, 3, 3)\nl_foot: (4, 4, 4)\n";
        let p = parse_prediction(text, 1, &sk).unwrap();
        let f = &p.sequence.frames()[0];
        assert_eq!(f.joint(sk.joint_index("r_foot").unwrap()), [5.0; 3]);
        assert_eq!(f.joint(sk.joint_index("root").unwrap()), [1.0; 3]);
    }

    #[test]
    fn unknown_name_falls_back_with_warning() {
        let sk = fixtures::toy_skeleton();
        let text =
            "Frame 1:\nhips: (1, 1, 1)\nl_hand: (2, 2, 2)\nr_hand: (3, 3, 3)\nl_foot: (4, 4, 4)\nr_foot: (5, 5, 5)\n";
        let p = parse_prediction(text, 1, &sk).unwrap();
        assert_eq!(p.sequence.frames()[0].joint(0), [1.0; 3]);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn headerless_answer_grouped_by_joint_count() {
        let sk = fixtures::toy_skeleton();
        let text = render_sequence(&seq(2), 1, &sk, 2)
            .unwrap()
            .replace("Frame 1:\n", "")
            .replace("Frame 2:\n", "");
        let p = parse_prediction(&text, 2, &sk).unwrap();
        assert_eq!(p.sequence, seq(2));
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn restated_observed_frames_skipped() {
        let sk = fixtures::toy_skeleton();
        let mut text = render_sequence(&seq(2), 4, &sk, 2).unwrap();
        text.push('\n');
        text.push_str(&render_sequence(&seq(3), 6, &sk, 2).unwrap());
        let opts = ParseOptions {
            min_frame_number: Some(6),
            ..Default::default()
        };
        let p = parse_prediction_with(&text, 3, &sk, &opts).unwrap();
        assert_eq!(p.frame_numbers, vec![Some(6), Some(7), Some(8)]);
        assert_eq!(p.sequence, seq(3));
    }

    #[test]
    fn partial_frame_before_complete_ones_is_skipped() {
        let sk = fixtures::toy_skeleton();
        let text = format!(
            "Frame 1:\nroot: (0, 0, 0)\n{}",
            render_sequence(&seq(1), 2, &sk, 1).unwrap()
        );
        let p = parse_prediction(&text, 1, &sk).unwrap();
        assert_eq!(p.frame_numbers, vec![Some(2)]);
        assert!(!p.warnings.is_empty());
    }
}
