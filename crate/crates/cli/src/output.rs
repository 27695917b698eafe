use std::fmt::Display;

/// What a subcommand produced: human-readable lines, the same facts as
/// `key<TAB>value` fields, and whether a domain violation was found.
#[derive(Debug, Default)]
pub struct Output {
    lines: Vec<String>,
    fields: Vec<(String, String)>,
    pub violation: bool,
}

impl Output {
    pub fn new() -> Self {
        Output::default()
    }

    /// A line shown in human mode only.
    pub fn line(&mut self, s: impl Into<String>) -> &mut Self {
        self.lines.push(s.into());
        self
    }

    /// A field shown in report mode only.
    pub fn field(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    /// A fact shown in both modes: as the line `value` and as a field.
    pub fn value(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        let v = value.to_string();
        self.lines.push(v.clone());
        self.fields.push((key.into(), v));
        self
    }

    /// A fact shown as `key: value` in human mode.
    pub fn labeled(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        let (k, v) = (key.into(), value.to_string());
        self.lines.push(format!("{k}: {v}"));
        self.fields.push((k, v));
        self
    }

    pub fn violation(&mut self, found: bool) -> &mut Self {
        self.violation |= found;
        self
    }

    pub fn render(&self, report: bool) -> String {
        let mut s = String::new();
        if report {
            for (k, v) in &self.fields {
                s.push_str(&format!("{k}\t{}\n", v.replace(['\t', '\n'], " ")));
            }
        } else {
            for l in &self.lines {
                s.push_str(l);
                s.push('\n');
            }
        }
        s
    }
}

/// A sorted, comma-separated list.
pub fn list<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    let mut v: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    v.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    v.join(",")
}

/// A comma-separated list in the given order.
pub fn seq<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}
