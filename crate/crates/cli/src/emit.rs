//! Deterministic artifact serialization: every number is written with 15
//! significant digits, trailing zeros trimmed, so identical computations
//! produce identical bytes. CSV is RFC-4180 with a header row and LF line
//! endings; JSON is emitted by hand to keep key order and float formatting
//! under our control.

/// 15-significant-digit decimal rendering.
///
/// Values with decimal exponent in `[-4, 15)` are written positionally,
/// everywhere else as `<mantissa>e<exp>`; both forms drop trailing zeros.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-4..15).contains(&exp) {
        let prec = (14 - exp).max(0) as usize;
        trim_decimal(format!("{x:.prec$}"))
    } else {
        let m = trim_decimal(mantissa.to_string());
        format!("{m}e{exp}")
    }
}

fn trim_decimal(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Header plus rows, comma separated, LF endings. Fields must not contain
/// commas, quotes or line breaks; every emitter here writes numbers and
/// short labels only.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::with_capacity(16 * (rows.len() + 1));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "ragged CSV row");
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// JSON value with insertion-ordered object keys.
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, Json::Arr(_) | Json::Obj(_))
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            // JSON has no literal for non-finite numbers; quote them so the
            // artifact stays parseable (they indicate an upstream bug).
            Json::Num(x) if !x.is_finite() => {
                out.push('"');
                out.push_str(&fmt_f64(*x));
                out.push('"');
            }
            Json::Num(x) => out.push_str(&fmt_f64(*x)),
            Json::Str(s) => {
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\r' => out.push_str("\\r"),
                        '\t' => out.push_str("\\t"),
                        c if (c as u32) < 0x20 => {
                            out.push_str(&format!("\\u{:04x}", c as u32));
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                } else if items.iter().all(Json::is_scalar) {
                    out.push('[');
                    for (i, item) in items.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        item.write(out, indent);
                    }
                    out.push(']');
                } else {
                    out.push_str("[\n");
                    for (i, item) in items.iter().enumerate() {
                        pad(out, indent + 1);
                        item.write(out, indent + 1);
                        if i + 1 < items.len() {
                            out.push(',');
                        }
                        out.push('\n');
                    }
                    pad(out, indent);
                    out.push(']');
                }
            }
            Json::Obj(pairs) => {
                if pairs.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (i, (key, value)) in pairs.iter().enumerate() {
                    pad(out, indent + 1);
                    out.push('"');
                    out.push_str(key);
                    out.push_str("\": ");
                    value.write(out, indent + 1);
                    if i + 1 < pairs.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}
