//! Structured key/value reports with a text and a JSON rendering.

use serde_json::Value;

/// Format with 12 significant digits; plain notation for moderate
/// magnitudes, exponent notation otherwise. Re-parsing and re-formatting
/// reproduces the same text.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mant), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Text(String),
    Num(f64),
    Bool(bool),
    Null,
    Map(Vec<(String, Node)>),
    List(Vec<Node>),
}

impl From<f64> for Node {
    fn from(v: f64) -> Self {
        Node::Num(v)
    }
}

impl From<bool> for Node {
    fn from(v: bool) -> Self {
        Node::Bool(v)
    }
}

impl From<&str> for Node {
    fn from(v: &str) -> Self {
        Node::Text(v.to_string())
    }
}

impl From<String> for Node {
    fn from(v: String) -> Self {
        Node::Text(v)
    }
}

impl From<u32> for Node {
    fn from(v: u32) -> Self {
        Node::Num(v as f64)
    }
}

impl<T: Into<Node>> From<Option<T>> for Node {
    fn from(v: Option<T>) -> Self {
        v.map_or(Node::Null, Into::into)
    }
}

/// Ordered map builder.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report(Vec<(String, Node)>);

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(mut self, key: &str, v: impl Into<Node>) -> Self {
        self.0.push((key.to_string(), v.into()));
        self
    }

    pub fn push(&mut self, key: &str, v: impl Into<Node>) {
        self.0.push((key.to_string(), v.into()));
    }

    pub fn node(self) -> Node {
        Node::Map(self.0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        write_map(&self.0, 0, &mut out);
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&json(&Node::Map(self.0.clone()))).unwrap();
        s.push('\n');
        s
    }
}

impl From<Report> for Node {
    fn from(r: Report) -> Self {
        r.node()
    }
}

fn scalar(n: &Node) -> Option<String> {
    match n {
        Node::Text(s) => Some(s.clone()),
        Node::Num(v) => Some(fmt_num(*v)),
        Node::Bool(b) => Some(b.to_string()),
        Node::Null => Some("none".into()),
        Node::Map(m) if m.is_empty() => Some("{}".into()),
        Node::List(l) if l.is_empty() => Some("[]".into()),
        _ => None,
    }
}

fn write_map(m: &[(String, Node)], indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    for (k, v) in m {
        match scalar(v) {
            Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
            None => {
                out.push_str(&format!("{pad}{k}:\n"));
                write_node(v, indent + 2, out);
            }
        }
    }
}

fn write_node(n: &Node, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match n {
        Node::Map(m) => write_map(m, indent, out),
        Node::List(items) => {
            for it in items {
                match scalar(it) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        write_node(it, indent + 2, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap())),
    }
}

fn json(n: &Node) -> Value {
    match n {
        Node::Text(s) => Value::String(s.clone()),
        Node::Num(v) => {
            let r: f64 = fmt_num(*v).parse().unwrap_or(f64::NAN);
            if r.fract() == 0.0 && r.abs() < 9.0e15 {
                return Value::Number((r as i64).into());
            }
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Node::Bool(b) => Value::Bool(*b),
        Node::Null => Value::Null,
        Node::Map(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), json(v))).collect()),
        Node::List(l) => Value::Array(l.iter().map(json).collect()),
    }
}
