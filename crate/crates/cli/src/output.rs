//! Versioned CSV and JSON writers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const SCHEMA_LINE: &str = "# prodcredit-schema v1";

/// Shortest round-trip float text; exponent form outside `[1e-5, 1e16)`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A CSV file opened with the schema comment and header already written.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(name);
        let mut file = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        writeln!(file, "{SCHEMA_LINE}").map_err(io_err(&path))?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        writer
            .write_record(header)
            .map_err(|source| CliError::Csv {
                path: path.display().to_string(),
                source,
            })?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|source| CliError::Csv {
                path: self.path.display().to_string(),
                source,
            })
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(io_err(&self.path))?;
        Ok(self.path)
    }
}

/// Write `value` as pretty JSON with a trailing newline.
pub fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

/// Read `(t, s, f_p)` rows from a CSV with header `t,s,f_p`; `#` lines are
/// comments.
pub fn read_triples(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(io_err(path))?;
    let body: String = lines
        .iter()
        .filter(|l| !l.trim_start().starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|source| CliError::Csv {
            path: path.display().to_string(),
            source,
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["t", "s", "f_p"] {
        return Err(CliError::Config(format!(
            "{}: expected header 't,s,f_p', got '{}'",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|source| CliError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| {
                CliError::Config(format!(
                    "{}: data row {}: column {} is not a number",
                    path.display(),
                    k + 1,
                    header.get(i).unwrap_or("?")
                ))
            })
        };
        out.push((field(0)?, field(1)?, field(2)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_their_text() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(11.0), "11.0");
    }

    #[test]
    fn tables_start_with_the_schema_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::create(dir.path(), "x.csv", &["a", "b"]).unwrap();
        t.row([num(1.0), "two, quoted".to_string()]).unwrap();
        let path = t.finish().unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "# prodcredit-schema v1\na,b\n1.0,\"two, quoted\"\n");
    }

    #[test]
    fn triples_skip_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(
            &path,
            "# prodcredit-schema v1\nt,s,f_p\n0.0,0.0,0.02\n0.0,0.5,0.03\n",
        )
        .unwrap();
        assert_eq!(
            read_triples(&path).unwrap(),
            vec![(0.0, 0.0, 0.02), (0.0, 0.5, 0.03)]
        );
    }
}
