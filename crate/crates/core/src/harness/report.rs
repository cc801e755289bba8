use std::fs;
use std::path::{Path, PathBuf};

use super::results::{
    bound_cells, parse_bound_csv, parse_results_csv, result_cells, results_header, sort_rows,
    to_csv, BoundRow, ResultRow, BOUND_COLUMNS, KEY_COLUMNS,
};
use super::summary::{
    best_cells, best_header, best_over_weights, bound_plot, plot_cells, plot_tables, summarize,
    summary_cells, summary_header, PLOT_COLUMNS,
};
use crate::error::{Error, Result};

/// Tables produced by one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tables {
    pub results: Vec<ResultRow>,
    pub bound: Vec<BoundRow>,
}

/// Provenance written to `manifest.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub command: String,
    /// Settings, written with a `config.` prefix.
    pub config: Vec<(String, String)>,
}

pub const RESULTS_SCHEMA: u32 = 1;

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn write(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes every table as CSV plus `manifest.txt`, and returns the paths in
/// write order. With `timing`, per-run wall-clock seconds go to `timing.csv`,
/// the only output that differs between identical reruns.
pub fn emit_report(
    tables: &Tables,
    manifest: &Manifest,
    out_dir: &Path,
    timing: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if !tables.results.is_empty() {
        let mut rows = tables.results.clone();
        sort_rows(&mut rows);
        write(
            out_dir,
            "results.csv",
            &to_csv(&results_header(), rows.iter().map(result_cells)),
            &mut written,
        )?;
        let summary = summarize(&rows);
        write(
            out_dir,
            "summary.csv",
            &to_csv(&summary_header(), summary.iter().map(summary_cells)),
            &mut written,
        )?;
        let best = best_over_weights(&summary);
        if !best.is_empty() {
            write(
                out_dir,
                "best.csv",
                &to_csv(&best_header(), best.iter().map(best_cells)),
                &mut written,
            )?;
        }
        for (name, points) in plot_tables(&summary) {
            write(
                out_dir,
                &name,
                &to_csv(&strings(&PLOT_COLUMNS), points.iter().map(plot_cells)),
                &mut written,
            )?;
        }
        if timing {
            let mut header = strings(&KEY_COLUMNS);
            header.extend(["trial".into(), "runtime_secs".into()]);
            let bytes = to_csv(
                &header,
                rows.iter().map(|r| {
                    let mut c = result_cells(r);
                    c.truncate(KEY_COLUMNS.len() + 1);
                    c.push(r.runtime_secs.to_string());
                    c
                }),
            );
            write(out_dir, "timing.csv", &bytes, &mut written)?;
        }
    }
    if !tables.bound.is_empty() {
        let mut rows = tables.bound.clone();
        rows.sort_by(|a, b| a.c.total_cmp(&b.c).then(a.trial.cmp(&b.trial)));
        write(
            out_dir,
            "bound.csv",
            &to_csv(&strings(&BOUND_COLUMNS), rows.iter().map(bound_cells)),
            &mut written,
        )?;
        let points = bound_plot(&rows);
        write(
            out_dir,
            "plot_bound.csv",
            &to_csv(&strings(&PLOT_COLUMNS), points.iter().map(plot_cells)),
            &mut written,
        )?;
    }
    let mut text = format!(
        "tool = fairshift\nversion = {}\nresults_schema = {RESULTS_SCHEMA}\ncommand = {}\nseed_derivation = fnv1a-splitmix64(master, key, counter)\n",
        env!("CARGO_PKG_VERSION"),
        manifest.command
    );
    for (k, v) in &manifest.config {
        text.push_str(&format!("config.{k} = {v}\n"));
    }
    let names: Vec<String> = written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    text.push_str(&format!("files = {}\n", names.join(",")));
    write(out_dir, "manifest.txt", text.as_bytes(), &mut written)?;
    Ok(written)
}

/// Re-reads `results.csv` and `bound.csv` from `in_dir` (whichever exist) and
/// regenerates the derived tables into `out_dir`.
pub fn report_from_dir(in_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut tables = Tables::default();
    let results = in_dir.join("results.csv");
    let bound = in_dir.join("bound.csv");
    if results.exists() {
        let f = fs::File::open(&results).map_err(|e| Error::io(&results, e))?;
        tables.results =
            parse_results_csv(std::io::BufReader::new(f), &results.display().to_string())?;
    }
    if bound.exists() {
        let f = fs::File::open(&bound).map_err(|e| Error::io(&bound, e))?;
        tables.bound = parse_bound_csv(std::io::BufReader::new(f), &bound.display().to_string())?;
    }
    if tables.results.is_empty() && tables.bound.is_empty() {
        return Err(Error::Config(format!(
            "{} holds no results.csv or bound.csv rows",
            in_dir.display()
        )));
    }
    let manifest = Manifest {
        command: "report".into(),
        config: vec![("input".into(), in_dir.display().to_string())],
    };
    emit_report(&tables, &manifest, out_dir, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::results::ConfigKey;

    fn manifest() -> Manifest {
        Manifest {
            command: "test".into(),
            config: vec![("seed".into(), "1".into())],
        }
    }

    fn row(trial: usize, eop: f64) -> ResultRow {
        ResultRow {
            key: ConfigKey {
                experiment: "synthetic".into(),
                dataset: "synthetic".into(),
                source_attr: "group".into(),
                target_attr: "group".into(),
                arrangement: "linear".into(),
                weight: None,
                n_target: None,
                c: Some(0.0),
            },
            trial,
            seed: 3,
            metrics: [0.1, eop, 0.2, 0.3, 0.9, 0.8],
            runtime_secs: 0.25 * trial as f64,
        }
    }

    #[test]
    fn empty_tables_write_only_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&Tables::default(), &manifest(), dir.path(), false).unwrap();
        assert_eq!(files, vec![dir.path().join("manifest.txt")]);
        let text = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(text.contains("config.seed = 1"));
    }

    #[test]
    fn report_regenerates_identical_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let tables = Tables {
            results: vec![row(1, 0.5), row(0, 0.25)],
            bound: vec![BoundRow {
                c: 0.0,
                trial: 0,
                delta_s: 0.1,
                d_hat_00: 1.0,
                d_hat_10: 0.2,
                rhs: 0.7,
                delta_t_observed: 0.4,
            }],
        };
        emit_report(&tables, &manifest(), a.path(), true).unwrap();
        report_from_dir(a.path(), b.path()).unwrap();
        for name in [
            "results.csv",
            "summary.csv",
            "plot_synthetic.csv",
            "bound.csv",
            "plot_bound.csv",
        ] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
        assert!(a.path().join("timing.csv").exists());
        assert!(!b.path().join("timing.csv").exists());
    }

    #[test]
    fn unwritable_directory_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        match emit_report(&Tables::default(), &manifest(), &blocker.join("sub"), false) {
            Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
            other => panic!("{other:?}"),
        }
    }
}
