//! On-disk state format:
//!
//! ```json
//! {"format_version": 1, "dims": [2, 2, 2], "amps": [[0.7071067811865476, 0.0], ...]}
//! ```
//!
//! Amplitudes are listed in mixed-radix order with subsystem 0 most
//! significant.

use std::fmt::Write as _;

use luequiv::statespace::{PureState, SubsystemDims};
use luequiv::Complex64;
use serde::Deserialize;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    format_version: u32,
    dims: Vec<usize>,
    amps: Vec<[f64; 2]>,
}

#[derive(Debug)]
pub enum LoadError {
    /// Malformed content (syntax, schema, version, length).
    Parse(String),
    /// Well-formed file describing an unsupported dimension vector.
    Dims(String),
}

/// Byte offset of a 1-based `(line, column)` position in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column).min(text.len())
}

pub fn parse(text: &str) -> Result<PureState, LoadError> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| {
        LoadError::Parse(format!(
            "invalid state file at byte {}: {e}",
            byte_offset(text, e.line(), e.column())
        ))
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(LoadError::Parse(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let dims = SubsystemDims::new(file.dims).map_err(|e| LoadError::Dims(e.to_string()))?;
    if dims.total() != file.amps.len() {
        return Err(LoadError::Parse(format!(
            "dims {dims} need {} amplitudes, file has {}",
            dims.total(),
            file.amps.len()
        )));
    }
    let amps = file
        .amps
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    PureState::new(dims, amps).map_err(|e| LoadError::Parse(e.to_string()))
}

/// Serializes with shortest round-trip float representations.
pub fn render(state: &PureState) -> String {
    let dims: Vec<String> = state
        .dims()
        .as_slice()
        .iter()
        .map(|d| d.to_string())
        .collect();
    let mut out = format!(
        "{{\n  \"format_version\": {FORMAT_VERSION},\n  \"dims\": [{}],\n  \"amps\": [\n",
        dims.join(", ")
    );
    let n = state.amplitudes().len();
    for (i, z) in state.amplitudes().iter().enumerate() {
        let sep = if i + 1 < n { "," } else { "" };
        let _ = writeln!(out, "    [{:?}, {:?}]{sep}", z.re, z.im);
    }
    out.push_str("  ]\n}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let ghz = PureState::ghz(SubsystemDims::new(vec![2, 2, 2]).unwrap()).unwrap();
        let back = parse(&render(&ghz)).unwrap();
        assert_eq!(back.amplitudes(), ghz.amplitudes());
        assert!(!back.was_renormalized());
    }

    #[test]
    fn truncation_reports_offset() {
        let text = render(&PureState::ghz(SubsystemDims::new(vec![2, 2, 2]).unwrap()).unwrap());
        let cut = &text[..40];
        match parse(cut) {
            Err(LoadError::Parse(msg)) => assert!(msg.contains("at byte 40"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            parse(r#"{"format_version": 2, "dims": [2, 2], "amps": [[1,0],[0,0],[0,0],[0,0]]}"#),
            Err(LoadError::Parse(_))
        ));
        assert!(matches!(
            parse(r#"{"format_version": 1, "dims": [2, 2], "amps": [[1,0]]}"#),
            Err(LoadError::Parse(_))
        ));
        assert!(matches!(
            parse(r#"{"format_version": 1, "dims": [2], "amps": [[1,0],[0,0]]}"#),
            Err(LoadError::Dims(_))
        ));
        assert!(matches!(
            parse(r#"{"format_version": 1, "dims": [2, 2], "amps": [[0,0],[0,0],[0,0],[0,0]]}"#),
            Err(LoadError::Parse(_))
        ));
        let p =
            parse(r#"{"format_version": 1, "dims": [2, 2], "amps": [[2,0],[0,0],[0,0],[0,0]]}"#)
                .unwrap();
        assert!(p.was_renormalized());
    }
}
