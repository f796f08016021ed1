//! Deterministic standalone SVG line plots from small CSV tables.
//!
//! The CSV layout is the one the experiment recipes emit: a header row, the
//! first column as the x axis, every further column one series. Non-finite
//! entries (`NaN` where a baseline failed) split their series into separate
//! segments instead of being bridged.

use std::path::Path;

use crate::{Error, Result};

/// One named line of `(x, y)` points, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 700.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 430.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn parse_field(raw: &str, path: &str, line: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("not a number: {raw:?}"),
    })
}

/// Read a plot table: the x-axis label and one series per data column.
pub fn read_xy_csv(path: &Path) -> Result<(String, Vec<Series>)> {
    let show = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: show.clone(),
            line: 1,
            msg: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: show.clone(),
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.len() < 2 {
        return Err(Error::Data(format!(
            "{show}: need an x column and at least one series column"
        )));
    }
    let x_label = headers[0].to_string();
    let mut series: Vec<Series> = headers
        .iter()
        .skip(1)
        .map(|name| Series {
            name: name.to_string(),
            points: Vec::new(),
        })
        .collect();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            path: show.clone(),
            line,
            msg: e.to_string(),
        })?;
        if row.len() != headers.len() {
            return Err(Error::Parse {
                path: show.clone(),
                line,
                msg: format!("expected {} fields, got {}", headers.len(), row.len()),
            });
        }
        let x = parse_field(&row[0], &show, line)?;
        for (j, s) in series.iter_mut().enumerate() {
            s.points.push((x, parse_field(&row[j + 1], &show, line)?));
        }
    }
    if series[0].points.is_empty() {
        return Err(Error::Data(format!("{show}: no data rows")));
    }
    Ok((x_label, series))
}

/// Five round-ish tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..5)
        .map(|i| lo + (hi - lo) * i as f64 / 4.0)
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

/// Render a line plot as standalone SVG text. Output depends only on the
/// inputs — equal inputs give byte-equal files.
pub fn line_plot_svg(x_label: &str, series: &[Series]) -> Result<String> {
    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter())
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if finite.is_empty() {
        return Err(Error::Data("nothing finite to plot".into()));
    }
    let (mut x_lo, mut x_hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let (mut y_lo, mut y_hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    if x_lo == x_hi {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_lo == y_hi {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let x_pad = 0.04 * (x_hi - x_lo);
    let y_pad = 0.06 * (y_hi - y_lo);
    let (x_lo, x_hi) = (x_lo - x_pad, x_hi + x_pad);
    let (y_lo, y_hi) = (y_lo - y_pad, y_hi + y_pad);
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (RIGHT - LEFT);
    let sy = |y: f64| BOTTOM - (y - y_lo) / (y_hi - y_lo) * (BOTTOM - TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // grid, ticks, labels
    for t in ticks(x_lo, x_hi) {
        let px = sx(t);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{TOP}\" x2=\"{px:.2}\" y2=\"{BOTTOM}\" stroke=\"#dddddd\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            BOTTOM + 18.0,
            fmt_tick(t)
        ));
    }
    for t in ticks(y_lo, y_hi) {
        let py = sy(t);
        svg.push_str(&format!(
            "<line x1=\"{LEFT}\" y1=\"{py:.2}\" x2=\"{RIGHT}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            LEFT - 8.0,
            py + 4.0,
            fmt_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333333\"/>\n",
        RIGHT - LEFT,
        BOTTOM - TOP
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 10.0,
        x_label
    ));

    // series: one polyline per finite run, a dot for isolated points
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                runs.last_mut().expect("non-empty by construction").push((x, y));
            } else if !runs.last().expect("non-empty").is_empty() {
                runs.push(Vec::new());
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            if run.len() == 1 {
                let (x, y) = run[0];
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            } else {
                let pts: Vec<String> = run
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                svg.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            }
        }
        // legend entry
        let ly = TOP + 16.0 + 18.0 * k as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            RIGHT - 150.0,
            RIGHT - 120.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            RIGHT - 112.0,
            ly + 4.0,
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// `plot` subcommand: CSV in, standalone SVG out.
pub fn cmd_plot(input: &Path, output: &Path) -> Result<()> {
    let (x_label, series) = read_xy_csv(input)?;
    let svg = line_plot_svg(&x_label, &series)?;
    std::fs::write(output, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, text: &str) {
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn each_series_column_becomes_a_polyline() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("curve.csv");
        write(
            &csv_path,
            "r,e_fci,e_model\n0.5,-1.0,-0.9\n1.0,-1.1,-1.05\n1.5,-1.05,-1.0\n",
        );
        let (x_label, series) = read_xy_csv(&csv_path).unwrap();
        assert_eq!(x_label, "r");
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].points.len(), 3);

        let svg = line_plot_svg(&x_label, &series).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">e_fci<"));
        assert!(svg.contains(">e_model<"));
        assert!(svg.contains(">r<"));
    }

    #[test]
    fn non_finite_points_split_a_series() {
        let series = [Series {
            name: "mp2".into(),
            points: vec![
                (0.5, -1.0),
                (1.0, -1.1),
                (1.5, f64::NAN),
                (2.0, -1.0),
                (2.5, -0.9),
            ],
        }];
        let svg = line_plot_svg("r", &series).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);

        let lonely = [Series {
            name: "x".into(),
            points: vec![(0.5, 1.0), (1.0, f64::NAN), (1.5, 2.0), (2.0, f64::NAN)],
        }];
        let svg = line_plot_svg("r", &lonely).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn empty_and_malformed_tables_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.csv");
        write(&empty, "r,value\n");
        assert!(matches!(read_xy_csv(&empty), Err(Error::Data(_))));

        let single = dir.path().join("one-col.csv");
        write(&single, "r\n1.0\n");
        assert!(matches!(read_xy_csv(&single), Err(Error::Data(_))));

        let junk = dir.path().join("junk.csv");
        write(&junk, "r,value\n1.0,fast\n");
        match read_xy_csv(&junk) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a parse error, got {other:?}"),
        }

        assert!(line_plot_svg("r", &[Series { name: "y".into(), points: vec![(f64::NAN, f64::NAN)] }]).is_err());
    }

    #[test]
    fn nan_entries_parse_and_plots_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("c.csv");
        write(&csv_path, "r,e_mp2\n1.0,-1.0\n2.0,NaN\n3.0,-0.9\n");
        let (label, series) = read_xy_csv(&csv_path).unwrap();
        assert!(series[0].points[1].1.is_nan());

        let out_a = dir.path().join("a.svg");
        let out_b = dir.path().join("b.svg");
        cmd_plot(&csv_path, &out_a).unwrap();
        cmd_plot(&csv_path, &out_b).unwrap();
        assert_eq!(
            std::fs::read(&out_a).unwrap(),
            std::fs::read(&out_b).unwrap()
        );
        assert_eq!(
            line_plot_svg(&label, &series).unwrap(),
            line_plot_svg(&label, &series).unwrap()
        );
    }
}
