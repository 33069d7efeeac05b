//! Deterministic JSON output: keys sorted (serde_json's default map is a
//! BTreeMap) and floats printed with 17 significant digits so identical runs
//! produce byte-identical files.

use serde_json::ser::Formatter;
use serde_json::Value;
use std::io;

struct FixedFloat;

impl Formatter for FixedFloat {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloat);
    serde::Serialize::serialize(value, &mut ser).expect("JSON serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn complex_pair(c: num_complex::Complex64) -> Value {
    Value::Array(vec![json_f64(c.re), json_f64(c.im)])
}

pub fn json_f64(x: f64) -> Value {
    Value::Number(serde_json::Number::from_f64(x).unwrap_or_else(|| 0.into()))
}

pub fn vector_of_pairs(v: &nalgebra::DVector<num_complex::Complex64>) -> Value {
    Value::Array(v.iter().map(|c| complex_pair(*c)).collect())
}
