//! CSV dataset manifest with the fixed header
//! `id,path,label,generator,prompt_modality,split`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const MANIFEST_HEADER: &str = "id,path,label,generator,prompt_modality,split";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifestError {
    #[error("line 1: header must be `{MANIFEST_HEADER}`, found `{found}`")]
    HeaderMismatch { found: String },
    #[error("line {line}: expected 6 fields, found {found}")]
    FieldCount { line: u64, found: usize },
    #[error("line {line}: invalid {field} `{value}`")]
    BadValue { line: u64, field: &'static str, value: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: {reason}")]
    Invariant { line: u64, reason: String },
    #[error("line {line}: malformed CSV: {message}")]
    Csv { line: u64, message: String },
    #[error("test fraction {0} is outside (0, 1)")]
    BadTestFraction(f64),
}

macro_rules! text_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self { $(Self::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = ();
            fn from_str(s: &str) -> Result<Self, ()> {
                match s { $($text => Ok(Self::$variant),)+ _ => Err(()) }
            }
        }
    };
}

text_enum!(Label { Real => "real", Fake => "fake" });
text_enum!(PromptModality { T2V => "T2V", I2V => "I2V", V2V => "V2V", None => "NONE" });
text_enum!(Split { Train => "train", Test => "test" });

impl Label {
    pub fn is_fake(&self) -> bool {
        matches!(self, Label::Fake)
    }
}

impl PromptModality {
    pub const GENERATIVE: [PromptModality; 3] = [PromptModality::T2V, PromptModality::I2V, PromptModality::V2V];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub id: String,
    pub path: String,
    pub label: Label,
    pub generator: String,
    pub prompt_modality: PromptModality,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Sorted, deduplicated generator names of the fake rows.
    pub fn fake_generators(&self) -> Vec<String> {
        let mut g: Vec<String> = self
            .rows
            .iter()
            .filter(|r| r.label.is_fake())
            .map(|r| r.generator.clone())
            .collect();
        g.sort();
        g.dedup();
        g
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(MANIFEST_HEADER.split(',')).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.id.as_str(),
                r.path.as_str(),
                r.label.as_str(),
                r.generator.as_str(),
                r.prompt_modality.as_str(),
                r.split.as_str(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Checks id uniqueness and the real-row modality rule.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut seen = HashSet::new();
        for (i, r) in self.rows.iter().enumerate() {
            let line = i as u64 + 2;
            if !seen.insert(r.id.as_str()) {
                return Err(ManifestError::DuplicateId { line, id: r.id.clone() });
            }
            check_row(r, line)?;
        }
        Ok(())
    }
}

fn check_row(r: &ManifestRow, line: u64) -> Result<(), ManifestError> {
    if r.label == Label::Real && r.prompt_modality != PromptModality::None {
        return Err(ManifestError::Invariant {
            line,
            reason: format!("real row `{}` must have prompt_modality NONE, found {}", r.id, r.prompt_modality),
        });
    }
    if r.id.is_empty() {
        return Err(ManifestError::BadValue { line, field: "id", value: String::new() });
    }
    Ok(())
}

pub fn load_manifest(text: &str) -> Result<DatasetManifest, ManifestError> {
    let first = text.lines().next().unwrap_or("");
    let first = first.strip_suffix('\r').unwrap_or(first);
    if first != MANIFEST_HEADER {
        return Err(ManifestError::HeaderMismatch { found: first.to_string() });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| ManifestError::Csv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 6 {
            return Err(ManifestError::FieldCount { line, found: record.len() });
        }
        fn parse<T: FromStr>(line: u64, field: &'static str, value: &str) -> Result<T, ManifestError> {
            value
                .parse()
                .map_err(|_| ManifestError::BadValue { line, field, value: value.to_string() })
        }
        let row = ManifestRow {
            id: record[0].to_string(),
            path: record[1].to_string(),
            label: parse(line, "label", &record[2])?,
            generator: record[3].to_string(),
            prompt_modality: parse(line, "prompt_modality", &record[4])?,
            split: parse(line, "split", &record[5])?,
        };
        check_row(&row, line)?;
        if !seen.insert(row.id.clone()) {
            return Err(ManifestError::DuplicateId { line, id: row.id });
        }
        rows.push(row);
    }
    Ok(DatasetManifest { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ROWS: &str = "id,path,label,generator,prompt_modality,split\n\
        a,seq_a,real,real,NONE,train\n\
        b,seq_b,fake,flicker,V2V,test\n";

    #[test]
    fn parses_valid_rows() {
        let m = load_manifest(TWO_ROWS).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.rows[1].prompt_modality, PromptModality::V2V);
        assert_eq!(m.rows[1].split, Split::Test);
        assert_eq!(load_manifest(&m.to_csv()).unwrap(), m);
    }

    #[test]
    fn bad_label_cites_line() {
        let text = TWO_ROWS.replace("b,seq_b,fake", "b,seq_b,reel");
        assert_eq!(
            load_manifest(&text),
            Err(ManifestError::BadValue { line: 3, field: "label", value: "reel".into() })
        );
    }

    #[test]
    fn real_row_with_modality_is_rejected() {
        let text = TWO_ROWS.replace("real,real,NONE", "real,real,T2V");
        assert!(matches!(load_manifest(&text), Err(ManifestError::Invariant { line: 2, .. })));
    }

    #[test]
    fn header_and_duplicates() {
        assert!(matches!(
            load_manifest("id,path,label\n"),
            Err(ManifestError::HeaderMismatch { .. })
        ));
        let dup = format!("{TWO_ROWS}a,x,real,real,NONE,test\n");
        assert!(matches!(load_manifest(&dup), Err(ManifestError::DuplicateId { line: 4, .. })));
        let short = format!("{TWO_ROWS}c,x,real\n");
        assert!(matches!(load_manifest(&short), Err(ManifestError::FieldCount { line: 4, found: 3 })));
    }
}
