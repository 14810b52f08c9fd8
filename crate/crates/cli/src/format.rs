//! Number formatting and table rendering.

/// `%g`-style rendering with six significant digits.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first so the exponent reflects carries like 999999.7 -> 1e6.
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if !(-4..6).contains(&exp) {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Full-precision, round-trippable rendering.
pub fn full(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Int(u64),
    Num(f64),
    Bool(bool),
}

impl Value {
    pub fn short(&self) -> String {
        match self {
            Value::Text(s) => s.clone(),
            Value::Int(i) => i.to_string(),
            Value::Num(x) => sig6(*x),
            Value::Bool(b) => b.to_string(),
        }
    }

    pub fn exact(&self) -> String {
        match self {
            Value::Num(x) => full(*x),
            other => other.short(),
        }
    }

    fn numeric(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Num(_))
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as u64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

/// A named table. `vertical` tables hold one record and render as
/// `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub vertical: bool,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            vertical: false,
        }
    }

    pub fn record(name: &str, fields: Vec<(&str, Value)>) -> Self {
        let (headers, row): (Vec<_>, Vec<_>) = fields.into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
        Table { name: name.into(), headers, rows: vec![row], vertical: true }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("[{}]\n", self.name);
        if self.vertical {
            let width = self.headers.iter().map(|h| h.len()).max().unwrap_or(0);
            for row in &self.rows {
                for (h, v) in self.headers.iter().zip(row) {
                    out.push_str(&format!("{h:<width$} = {}\n", v.short()));
                }
            }
            return out;
        }
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Value::short).collect()).collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.headers[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: Vec<(String, bool)>| {
            let parts: Vec<String> = items
                .into_iter()
                .zip(&widths)
                .map(|((s, right), &w)| if right { format!("{s:>w$}") } else { format!("{s:<w$}") })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let numeric: Vec<bool> = (0..self.headers.len())
            .map(|j| self.rows.first().is_some_and(|r| r[j].numeric()))
            .collect();
        out.push_str(&line(self.headers.iter().cloned().zip(numeric.iter().copied()).collect()));
        for row in cells {
            out.push_str(&line(row.into_iter().zip(numeric.iter().copied()).collect()));
        }
        out
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::exact))?;
        }
        w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }
}
