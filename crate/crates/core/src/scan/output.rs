//! CSV, gnuplot script and metadata files of a finished scan.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::{to_toml, Computed, ScanError, ScanSpec, ScanTable};

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub plot: PathBuf,
    pub meta: PathBuf,
    /// Single-point scans only.
    pub mean_field: Option<PathBuf>,
    /// Single-point scans only.
    pub input_output: Option<PathBuf>,
}

/// Creates `dir` if needed and proves a file can be created inside it.
pub(super) fn ensure_writable(dir: &Path) -> Result<(), ScanError> {
    let err = |source| ScanError::OutputDir {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(format!(".pbg-write-test-{}", std::process::id()));
    File::create(&probe).map_err(err)?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScanError + '_ {
    move |source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// CSV text. The first line is a `#` comment carrying `timestamp` when given;
/// everything after it depends only on the table. Two-axis scans get a blank
/// line after each block of the first axis.
pub fn format_csv(table: &ScanTable, timestamp: Option<u64>) -> String {
    let mut out = String::new();
    match timestamp {
        Some(t) => writeln!(out, "# generated unix={t}").unwrap(),
        None => writeln!(out, "# generated").unwrap(),
    }
    let mut header: Vec<String> = table.axes.clone();
    header.push("status".into());
    header.extend(table.observables.iter().map(|o| o.to_string()));
    writeln!(out, "{}", header.join(",")).unwrap();
    let mut previous: Option<f64> = None;
    for row in &table.rows {
        if table.axes.len() == 2 {
            if let Some(p) = previous {
                if p != row.coords[0] {
                    out.push('\n');
                }
            }
            previous = Some(row.coords[0]);
        }
        let mut cells: Vec<String> = row.coords.iter().map(|c| c.to_string()).collect();
        cells.push(row.status.to_string());
        if row.status == 0 {
            cells.extend(row.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        } else {
            cells.extend(std::iter::repeat_n(String::new(), table.observables.len()));
        }
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Gnuplot script that renders one PNG per observable from `<stem>.csv`.
pub fn format_plot(spec: &ScanSpec) -> String {
    let stem = &spec.output.stem;
    let axes = spec.axes();
    let mut out = String::new();
    writeln!(out, "# gnuplot script for {stem}.csv; run from the output directory").unwrap();
    writeln!(out, "set datafile separator \",\"").unwrap();
    writeln!(out, "set datafile commentschars \"#\"").unwrap();
    writeln!(out, "set terminal pngcairo size 900,650").unwrap();
    if !spec.output.title.is_empty() {
        writeln!(out, "set title {}", quote(&spec.output.title)).unwrap();
    }
    if axes.is_empty() {
        writeln!(out, "# single-point scan: nothing to plot").unwrap();
        return out;
    }
    let first_value_column = axes.len() + 2;
    writeln!(out, "set xlabel {}", quote(&axes[0].plot_label())).unwrap();
    if axes.len() == 2 {
        writeln!(out, "set ylabel {}", quote(&axes[1].plot_label())).unwrap();
        writeln!(out, "set view map").unwrap();
        writeln!(out, "set pm3d at b").unwrap();
        writeln!(out, "unset surface").unwrap();
    }
    for (k, o) in spec.scan.observables.iter().enumerate() {
        let col = first_value_column + k;
        let name = o.to_string().replace([':', '+'], "_");
        writeln!(out).unwrap();
        writeln!(out, "set output {}", quote(&format!("{stem}_{name}.png"))).unwrap();
        if axes.len() == 1 {
            writeln!(out, "set ylabel {}", quote(&o.describe())).unwrap();
            writeln!(
                out,
                "plot {} every ::1 using 1:{col} with lines title {}",
                quote(&format!("{stem}.csv")),
                quote(&o.to_string())
            )
            .unwrap();
        } else {
            writeln!(out, "set cblabel {}", quote(&o.describe())).unwrap();
            writeln!(
                out,
                "splot {} every ::1 using 1:2:{col} with pm3d title {}",
                quote(&format!("{stem}.csv")),
                quote(&o.to_string())
            )
            .unwrap();
        }
    }
    out
}

/// Resolved configuration followed by a commented summary; the file is itself
/// a valid config.
pub fn format_meta(spec: &ScanSpec, table: &ScanTable) -> String {
    let mut out = String::new();
    writeln!(out, "# resolved configuration").unwrap();
    out.push_str(&to_toml(spec));
    writeln!(out).unwrap();
    writeln!(out, "# points = {}", table.rows.len()).unwrap();
    writeln!(out, "# failed = {}", table.failures()).unwrap();
    for row in table.rows.iter().filter(|r| r.status != 0) {
        let coords: Vec<String> = row.coords.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "# failed point ({}) status {}: {}",
            coords.join(", "),
            row.status,
            row.message.as_deref().unwrap_or("")
        )
        .unwrap();
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<(), ScanError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_outputs(spec: &ScanSpec, computed: &Computed) -> Result<OutputFiles, ScanError> {
    let dir = &spec.output.dir;
    let stem = &spec.output.stem;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let csv = dir.join(format!("{stem}.csv"));
    write_file(&csv, &format_csv(&computed.table, Some(stamp)))?;
    let plot = dir.join(format!("{stem}.gp"));
    write_file(&plot, &format_plot(spec))?;
    let meta = dir.join(format!("{stem}.meta.txt"));
    write_file(&meta, &format_meta(spec, &computed.table))?;

    let mut files = OutputFiles {
        csv,
        plot,
        meta,
        mean_field: None,
        input_output: None,
    };
    if let Some(data) = &computed.single {
        let mf = dir.join(format!("{stem}.meanfield.csv"));
        let f = File::create(&mf).map_err(io_err(&mf))?;
        let mut w = BufWriter::new(f);
        data.mean_field.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&mf))?;
        let u = dir.join(format!("{stem}.u.csv"));
        let f = File::create(&u).map_err(io_err(&u))?;
        let mut w = BufWriter::new(f);
        data.u.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&u))?;
        files.mean_field = Some(mf);
        files.input_output = Some(u);
    }
    Ok(files)
}
