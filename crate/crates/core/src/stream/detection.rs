use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::BinaryClass;

/// One classified window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub device_id: String,
    pub t_start_ms: i64,
    pub t_end_ms: i64,
    pub p_fall: f64,
    pub class: BinaryClass,
    pub seq: u64,
    pub model_digest: String,
}

const MIN_SIGNIFICANT: usize = 6;

/// Shortest round-trip decimal, zero-padded to at least six significant
/// digits.
pub fn format_probability(p: f64) -> String {
    let mut s = p.to_string();
    let significant = s
        .bytes()
        .filter(u8::is_ascii_digit)
        .skip_while(|&b| b == b'0')
        .count();
    if significant < MIN_SIGNIFICANT {
        if !s.contains('.') {
            s.push('.');
        }
        // all-zero values count digits from the decimal point
        let have = if significant == 0 {
            s.split('.').nth(1).map_or(0, str::len)
        } else {
            significant
        };
        s.extend(std::iter::repeat_n(
            '0',
            MIN_SIGNIFICANT.saturating_sub(have),
        ));
    }
    s
}

impl Detection {
    /// The wire form: one JSON object with a fixed key order, no newline.
    pub fn to_json_line(&self) -> String {
        format!(
            "{{\"device_id\":{},\"t_start_ms\":{},\"t_end_ms\":{},\"p_fall\":{},\"class\":\"{}\",\"seq\":{},\"model_digest\":\"{}\"}}",
            serde_json::Value::String(self.device_id.clone()),
            self.t_start_ms,
            self.t_end_ms,
            format_probability(self.p_fall),
            self.class,
            self.seq,
            self.model_digest,
        )
    }
}

/// Writes one detection line and flushes.
pub fn emit_jsonl<W: Write + ?Sized>(detection: &Detection, out: &mut W) -> Result<()> {
    let mut line = detection.to_json_line();
    line.push('\n');
    out.write_all(line.as_bytes())?;
    out.flush()?;
    Ok(())
}
