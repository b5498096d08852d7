//! Deterministic machine-readable output.
//!
//! All floating-point values are printed with 17 significant digits so that
//! identical runs produce byte-identical JSON and CSV.

use serde::Serialize;
use std::io;

/// Fixed 17-significant-digit scientific formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct FixedFormatter;

impl serde_json::ser::Formatter for FixedFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", fmt_f64(value as f64))
    }
}

/// Serialize to JSON with pinned float formatting.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFormatter);
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    String::from_utf8(out).expect("serde_json emits utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: u32,
    }

    #[test]
    fn floats_have_17_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(-1.0 / 3.0), "-3.3333333333333331e-1");
    }

    #[test]
    fn json_output_is_deterministic() {
        let r = Row { a: 0.1 + 0.2, b: 7 };
        let one = to_json(&r);
        let two = to_json(&r);
        assert_eq!(one, two);
        assert_eq!(one, r#"{"a":3.0000000000000004e-1,"b":7}"#);
    }
}
