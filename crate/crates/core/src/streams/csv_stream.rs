use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, StringRecordsIntoIter, Trim};
use log::error;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{DataStream, Sample, StreamStats};

/// Label column selector. A name matching a header wins over an index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    #[default]
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) if s == "last" => Self::Last,
            Err(_) => Self::Name(s.to_owned()),
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Name(n) => f.write_str(n),
            Self::Index(i) => write!(f, "{i}"),
            Self::Last => f.write_str("last"),
        }
    }
}

impl LabelColumn {
    fn resolve(&self, headers: &StringRecord) -> Result<usize> {
        let by_name = |name: &str| headers.iter().position(|h| h == name);
        let found = match self {
            Self::Name(n) => by_name(n),
            Self::Index(i) => by_name(&i.to_string()).or((*i < headers.len()).then_some(*i)),
            Self::Last => by_name("last").or(headers.len().checked_sub(1)),
        };
        found.ok_or_else(|| Error::config("label-column", format!("no column `{self}` in the header")))
    }
}

#[derive(Debug, Clone)]
enum Column {
    Numeric,
    Nominal(HashMap<String, usize>),
}

#[derive(Debug, Clone)]
struct Schema {
    path: PathBuf,
    label: usize,
    columns: Vec<Column>,
    labels: HashMap<String, usize>,
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    Ok(ReaderBuilder::new().trim(Trim::All).from_path(path)?)
}

fn read_record(path: &Path, result: csv::Result<StringRecord>) -> Result<StringRecord> {
    result.map_err(|e| {
        let line = e.position().map_or(0, |p| p.line());
        parse_error(path, line, e.to_string())
    })
}

impl Schema {
    fn scan(path: &Path, label_column: &LabelColumn) -> Result<(Self, u64)> {
        let mut reader = open(path)?;
        let headers = reader.headers()?.clone();
        if headers.is_empty() {
            return Err(parse_error(path, 1, "empty header"));
        }
        let label = label_column.resolve(&headers)?;
        let mut columns: Option<Vec<Column>> = None;
        let mut label_order: Vec<String> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut rows = 0u64;
        for result in reader.records() {
            let record = read_record(path, result)?;
            let line = line_of(&record);
            let columns = columns.get_or_insert_with(|| {
                record
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != label)
                    .map(|(_, cell)| match cell.parse::<f64>() {
                        Ok(_) => Column::Numeric,
                        Err(_) => Column::Nominal(HashMap::new()),
                    })
                    .collect()
            });
            let cells = record.iter().enumerate().filter(|&(i, _)| i != label).map(|(_, c)| c);
            for (column, cell) in columns.iter_mut().zip(cells) {
                match column {
                    Column::Numeric => {
                        let v: f64 = cell
                            .parse()
                            .map_err(|_| parse_error(path, line, format!("`{cell}` is not a number")))?;
                        if !v.is_finite() {
                            return Err(parse_error(path, line, format!("`{cell}` is not finite")));
                        }
                    }
                    Column::Nominal(codes) => {
                        if cell.is_empty() {
                            return Err(parse_error(path, line, "empty nominal cell"));
                        }
                        let next = codes.len();
                        codes.entry(cell.to_owned()).or_insert(next);
                    }
                }
            }
            let value = &record[label];
            if value.is_empty() {
                return Err(parse_error(path, line, "empty label"));
            }
            if !seen.contains_key(value) {
                seen.insert(value.to_owned(), label_order.len());
                label_order.push(value.to_owned());
            }
            rows += 1;
        }
        let columns = columns.ok_or_else(|| parse_error(path, 2, "no data rows"))?;
        // numeric labels keep their natural order, anything else is coded by
        // first appearance
        let numeric: Option<Vec<f64>> = label_order.iter().map(|l| l.parse::<f64>().ok()).collect();
        if let Some(values) = numeric {
            let mut order: Vec<usize> = (0..label_order.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            label_order = order.into_iter().map(|i| label_order[i].clone()).collect();
        }
        let labels = label_order.into_iter().enumerate().map(|(i, l)| (l, i)).collect();
        Ok((
            Self {
                path: path.to_owned(),
                label,
                columns,
                labels,
            },
            rows,
        ))
    }

    fn encode(&self, record: &StringRecord) -> Result<Sample> {
        let line = line_of(record);
        let cells = record.iter().enumerate().filter(|&(i, _)| i != self.label).map(|(_, c)| c);
        let features = self
            .columns
            .iter()
            .zip(cells)
            .map(|(column, cell)| match column {
                Column::Numeric => cell
                    .parse::<f64>()
                    .map_err(|_| parse_error(&self.path, line, format!("`{cell}` is not a number"))),
                Column::Nominal(codes) => codes
                    .get(cell)
                    .map(|&c| c as f64)
                    .ok_or_else(|| parse_error(&self.path, line, format!("unknown level `{cell}`"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = *self
            .labels
            .get(&record[self.label])
            .ok_or_else(|| parse_error(&self.path, line, "unknown label"))?;
        Ok(Sample { features, label })
    }
}

enum Source {
    Memory(std::vec::IntoIter<Sample>),
    File(StringRecordsIntoIter<File>),
}

/// Samples read from a CSV file; see [`csv_stream`].
pub struct CsvStream {
    schema: Schema,
    source: Source,
}

/// Opens `path` as a labelled stream. A first pass fixes the schema: columns
/// whose first cell parses as a number are numeric, all others are coded by
/// first appearance. With a shuffle seed the file is held in memory and
/// permuted; otherwise rows stream from disk in file order.
pub fn csv_stream(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    shuffle_seed: Option<u64>,
) -> Result<(CsvStream, StreamStats)> {
    let path = path.as_ref();
    let (schema, rows) = Schema::scan(path, label_column)?;
    let stats = StreamStats {
        n_features: schema.columns.len(),
        n_classes: schema.labels.len(),
        n_emitted: rows,
    };
    let records = open(path)?.into_records();
    let source = match shuffle_seed {
        Some(seed) => {
            let mut samples = records
                .map(|r| schema.encode(&read_record(path, r)?))
                .collect::<Result<Vec<_>>>()?;
            samples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            Source::Memory(samples.into_iter())
        }
        None => Source::File(records),
    };
    Ok((CsvStream { schema, source }, stats))
}

impl Iterator for CsvStream {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        match &mut self.source {
            Source::Memory(it) => it.next(),
            Source::File(records) => {
                let result = records
                    .next()?
                    .map_err(Error::from)
                    .and_then(|r| self.schema.encode(&r));
                match result {
                    Ok(s) => Some(s),
                    Err(e) => {
                        error!("{e}");
                        None
                    }
                }
            }
        }
    }
}

impl DataStream for CsvStream {
    fn n_features(&self) -> usize {
        self.schema.columns.len()
    }

    fn n_classes(&self) -> usize {
        self.schema.labels.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn name(n: &str) -> LabelColumn {
        LabelColumn::Name(n.into())
    }

    #[test]
    fn file_order_without_shuffle() {
        let f = write("a,b,class\n1,2,x\n3,4,y\n5,6,x\n");
        let (stream, stats) = csv_stream(f.path(), &name("class"), None).unwrap();
        assert_eq!(
            stats,
            StreamStats {
                n_features: 2,
                n_classes: 2,
                n_emitted: 3
            }
        );
        let rows: Vec<_> = stream.collect();
        assert_eq!(rows[0], Sample { features: vec![1.0, 2.0], label: 0 });
        assert_eq!(rows[1], Sample { features: vec![3.0, 4.0], label: 1 });
        assert_eq!(rows[2].label, 0);
    }

    #[test]
    fn nominal_columns_coded_by_first_appearance() {
        let f = write("colour,size,y\nred,1.5,0\nblue,2,1\nred,3,1\ngreen,4,0\n");
        let (stream, _) = csv_stream(f.path(), &LabelColumn::Index(2), None).unwrap();
        let colours: Vec<f64> = stream.map(|s| s.features[0]).collect();
        assert_eq!(colours, vec![0.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn numeric_labels_keep_their_order() {
        let f = write("x,y\n1,1\n2,0\n3,2\n");
        let (stream, stats) = csv_stream(f.path(), &name("y"), None).unwrap();
        assert_eq!(stats.n_classes, 3);
        let labels: Vec<usize> = stream.map(|s| s.label).collect();
        assert_eq!(labels, vec![1, 0, 2]);
    }

    #[test]
    fn last_column_by_default() {
        let f = write("a,b,target\n1,2,u\n");
        let (mut stream, stats) = csv_stream(f.path(), &LabelColumn::default(), None).unwrap();
        assert_eq!(stats.n_features, 2);
        assert_eq!(stream.next().unwrap().features, vec![1.0, 2.0]);
    }

    #[test]
    fn label_column_in_the_middle() {
        let f = write("a,lab,b\n1,p,2\n");
        let (mut stream, _) = csv_stream(f.path(), &name("lab"), None).unwrap();
        assert_eq!(stream.next().unwrap().features, vec![1.0, 2.0]);
    }

    #[test]
    fn bad_cell_reports_line() {
        let f = write("a,class\n1,x\n2,y\noops,x\n");
        match csv_stream(f.path(), &name("class"), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let f = write("a,class\n1,x\n2\n");
        assert!(matches!(csv_stream(f.path(), &name("class"), None), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn missing_label_column() {
        let f = write("a,b\n1,2\n");
        match csv_stream(f.path(), &name("class"), None) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "label-column"),
            other => panic!("expected config error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn shuffle_is_seeded_permutation() {
        let body: String = (0..50).map(|i| format!("{i},{}\n", i % 2)).collect();
        let f = write(&format!("v,c\n{body}"));
        let read = |seed| {
            let (s, _) = csv_stream(f.path(), &name("c"), seed).unwrap();
            s.map(|s| s.features[0]).collect::<Vec<_>>()
        };
        let a = read(Some(1));
        assert_eq!(a, read(Some(1)));
        assert_ne!(a, read(Some(2)));
        let mut sorted = a.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, read(None));
    }
}
