//! Structured command output. Every record carries the command name, the
//! parameters it resolved, a column-labeled series, and metadata; it
//! renders either as JSON or as CSV with commented headers. Floats are
//! printed with 17 significant digits so reruns diff byte for byte and
//! parsers recover the exact values.

use clap::ValueEnum;

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone)]
pub enum Field {
    Float(f64),
    Int(i64),
    Uint(u64),
    Text(String),
}

impl From<f64> for Field {
    fn from(x: f64) -> Field {
        Field::Float(x)
    }
}

impl From<i64> for Field {
    fn from(x: i64) -> Field {
        Field::Int(x)
    }
}

impl From<u64> for Field {
    fn from(x: u64) -> Field {
        Field::Uint(x)
    }
}

impl From<usize> for Field {
    fn from(x: usize) -> Field {
        Field::Uint(x as u64)
    }
}

impl From<&str> for Field {
    fn from(x: &str) -> Field {
        Field::Text(x.to_string())
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl Field {
    fn json(&self) -> String {
        match self {
            Field::Float(x) => fmt_float(*x),
            Field::Int(x) => x.to_string(),
            Field::Uint(x) => x.to_string(),
            Field::Text(s) => json_string(s),
        }
    }

    fn csv(&self) -> String {
        match self {
            Field::Float(x) => fmt_float(*x),
            Field::Int(x) => x.to_string(),
            Field::Uint(x) => x.to_string(),
            Field::Text(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Field::Float(x) => x.is_finite(),
            _ => true,
        }
    }
}

pub struct OutputRecord {
    pub command: String,
    pub parameters: Vec<(String, Field)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
    pub metadata: Vec<(String, Field)>,
}

impl OutputRecord {
    pub fn new(command: &str) -> Self {
        OutputRecord {
            command: command.to_string(),
            parameters: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Field>) {
        self.parameters.push((key.to_string(), value.into()));
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Field>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.columns = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn push_row(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Renders the record, refusing to emit any non-finite number.
    pub fn render(&self, format: Format) -> Result<String, String> {
        let all = self
            .parameters
            .iter()
            .chain(&self.metadata)
            .map(|(_, f)| f)
            .chain(self.rows.iter().flatten());
        for field in all {
            if !field.is_finite() {
                return Err("refusing to emit a non-finite number".into());
            }
        }
        Ok(match format {
            Format::Json => self.json(),
            Format::Csv => self.csv(),
        })
    }

    fn json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"command\": {},\n", json_string(&self.command)));
        out.push_str("  \"parameters\": {");
        for (k, (key, v)) in self.parameters.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("\n    {}: {}", json_string(key), v.json()));
        }
        out.push_str("\n  },\n");
        out.push_str("  \"series\": [");
        for (r, row) in self.rows.iter().enumerate() {
            if r > 0 {
                out.push(',');
            }
            out.push_str("\n    {");
            for (c, (name, v)) in self.columns.iter().zip(row).enumerate() {
                if c > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{}: {}", json_string(name), v.json()));
            }
            out.push('}');
        }
        out.push_str("\n  ],\n");
        out.push_str("  \"metadata\": {");
        for (k, (key, v)) in self.metadata.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("\n    {}: {}", json_string(key), v.json()));
        }
        out.push_str("\n  }\n}\n");
        out
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# command: {}\n", self.command));
        for (key, v) in self.parameters.iter().chain(&self.metadata) {
            out.push_str(&format!("# {}: {}\n", key, v.csv()));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Field::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
