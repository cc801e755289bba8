use std::io::Write;

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Writes `domain,group,label,f0..fk` rows for every example of every dataset.
pub fn write_dataset_csv<W: Write>(out: W, datasets: &[&Dataset]) -> Result<()> {
    let width = datasets.first().map_or(0, |d| d.schema().features.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["domain".to_string(), "group".into(), "label".into()];
    header.extend((0..width).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for d in datasets {
        if d.schema().features.len() != width {
            return Err(Error::Dimension(
                "datasets in one dump must share a schema".into(),
            ));
        }
        for e in d.examples() {
            let mut rec = vec![
                e.domain.to_string(),
                e.group.to_string(),
                e.label.to_string(),
            ];
            rec.extend(e.features.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<dataset dump>", e))
}

fn csv_err(e: csv::Error) -> Error {
    Error::io("<dataset dump>", std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticSpec};

    #[test]
    fn dump_has_header_and_one_row_per_example() {
        let (s, t) = gen_synthetic(&SyntheticSpec::default()).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &[&s, &t]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("domain,group,label,f0,f1"));
        assert_eq!(lines.count(), 4000);
        assert!(text.contains("\ntarget,"));
    }
}
