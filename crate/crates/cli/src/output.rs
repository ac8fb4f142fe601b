//! CSV tables and their JSON mirrors.

use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 fields")
    }

    /// Same rows as the CSV, one object per row, values as written there.
    pub fn to_json(&self, command: &str, summary: &Value) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> =
                    self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), Value::String(v.clone()))).collect();
                Value::Object(m)
            })
            .collect();
        json!({ "command": command, "columns": self.columns, "rows": rows, "summary": summary })
    }
}

/// Shortest round-trip formatting; empty for a missing value.
pub fn fmt_f64(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_quotes() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,\"x,y\"\n");
        let j = t.to_json("cmd", &json!({}));
        assert_eq!(j["rows"][0]["b"], "x,y");
        assert_eq!(fmt_f64(Some(0.1)), "0.1");
        assert_eq!(fmt_f64(None), "");
    }
}
