//! Rate/quality report: CSV tables, run metadata and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coding::{Quantiser, ScanKind};
use crate::error::{Error, Result};
use crate::metrics::ssim_config;
use crate::quant::{qstep_from_qp, DeadzoneMode};
use crate::rdoq::lambda_schedule;

use super::ExperimentConfig;

/// One (clip, quantiser, QP) measurement. Field order is the CSV column
/// order; wall times go to a separate file so the main table is reproducible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub clip: String,
    pub chroma_format: String,
    pub bit_depth: u8,
    pub tb_size: usize,
    pub quantiser: Quantiser,
    pub qp: u8,
    pub frames: usize,
    /// Payload bits, excluding container header and length prefixes.
    pub bits: u64,
    pub bits_per_frame: f64,
    pub psnr_y: f64,
    pub psnr_cb: f64,
    pub psnr_cr: f64,
    pub psnr_yuv: f64,
    pub ssim_y: f64,
    pub ssim_cb: f64,
    pub ssim_cr: f64,
    pub ssim_yuv: f64,
    #[serde(skip)]
    pub encode_ms: f64,
    #[serde(skip)]
    pub decode_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub clip: String,
    pub quantiser: Quantiser,
    pub qp: u8,
    pub encode_ms: f64,
    pub decode_ms: f64,
}

/// FDPQ against RDOQ for one clip, averaged over the QPs both were run at.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub clip: String,
    /// Space-separated QPs that entered the mean.
    pub qps: String,
    pub rdoq_bits: u64,
    pub fdpq_bits: u64,
    /// Mean over QPs of `100 (fdpq - rdoq) / rdoq`.
    pub mean_delta_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMeta {
    pub tb_size: usize,
    pub deadzone: DeadzoneMode,
    pub scan: ScanKind,
    pub ssim: String,
    pub lambda: String,
    pub bits: String,
    pub qstep: Vec<(u8, f64)>,
    pub lambda_by_qp: Vec<(u8, f64)>,
}

impl RunMeta {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        Self {
            tb_size: cfg.tb_size,
            deadzone: cfg.deadzone,
            scan: cfg.scan,
            ssim: ssim_config(),
            lambda: "0.57 * 2^((QP-12)/3) in sample units, times the squared transform gain".into(),
            bits: "8 * frame payload bytes (no header, no length prefixes)".into(),
            qstep: cfg.qps.iter().map(|q| (q.value(), qstep_from_qp(*q))).collect(),
            lambda_by_qp: cfg.qps.iter().map(|q| (q.value(), lambda_schedule(*q))).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub meta: RunMeta,
}

impl RateReport {
    /// Recomputed from the data rows on every call.
    pub fn comparisons(&self) -> Vec<ComparisonRow> {
        let mut clips: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !clips.contains(&r.clip.as_str()) {
                clips.push(&r.clip);
            }
        }
        let mut out = Vec::new();
        for clip in clips {
            let of = |q: Quantiser| -> Vec<&RateRow> {
                self.rows
                    .iter()
                    .filter(|r| r.clip == clip && r.quantiser == q)
                    .collect()
            };
            let fdpq = of(Quantiser::Fdpq);
            let pairs: Vec<(&RateRow, &RateRow)> = of(Quantiser::Rdoq)
                .into_iter()
                .filter_map(|r| fdpq.iter().find(|f| f.qp == r.qp).map(|f| (r, *f)))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            let deltas: Vec<f64> = pairs
                .iter()
                .map(|(r, f)| 100.0 * (f.bits as f64 - r.bits as f64) / r.bits as f64)
                .collect();
            out.push(ComparisonRow {
                clip: clip.to_string(),
                qps: pairs
                    .iter()
                    .map(|(r, _)| r.qp.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                rdoq_bits: pairs.iter().map(|(r, _)| r.bits).sum(),
                fdpq_bits: pairs.iter().map(|(_, f)| f.bits).sum(),
                mean_delta_pct: deltas.iter().sum::<f64>() / deltas.len() as f64,
            });
        }
        out
    }

    pub fn timings(&self) -> Vec<TimingRow> {
        self.rows
            .iter()
            .map(|r| TimingRow {
                clip: r.clip.clone(),
                quantiser: r.quantiser,
                qp: r.qp,
                encode_ms: r.encode_ms,
                decode_ms: r.decode_ms,
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn comparisons_csv(&self) -> Result<String> {
        to_csv(&self.comparisons())
    }

    pub fn to_svg(&self) -> String {
        render_svg(&self.rows)
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

/// Writes the report under `dir`. CSV output is `report.csv`,
/// `comparison.csv`, `timings.csv` and `run.toml`; SVG output is
/// `report.svg`. An empty report is rejected before anything is written.
pub fn emit_report(report: &RateReport, dir: impl AsRef<Path>, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let dir = dir.as_ref();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Csv => {
                files.push((dir.join("report.csv"), report.to_csv()?));
                files.push((dir.join("comparison.csv"), report.comparisons_csv()?));
                files.push((dir.join("timings.csv"), to_csv(&report.timings())?));
                let meta = toml::to_string(&report.meta).map_err(|e| Error::Config(e.to_string()))?;
                files.push((dir.join("run.toml"), meta));
            }
            ReportFormat::Svg => files.push((dir.join("report.svg"), report.to_svg())),
        }
    }
    fs::create_dir_all(dir)?;
    for (path, body) in &files {
        fs::write(path, body)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 44.0;

fn colour(q: Quantiser) -> &'static str {
    match q {
        Quantiser::Urq => "#1f77b4",
        Quantiser::Rdoq => "#ff7f0e",
        Quantiser::Fdpq => "#2ca02c",
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

type Metric = (&'static str, &'static str, &'static str, fn(&RateRow) -> (f64, f64));

const METRICS: [Metric; 3] = [
    ("bits-vs-qp", "QP", "bits/frame", |r| (r.qp as f64, r.bits_per_frame)),
    ("psnr-vs-bits", "bits/frame", "PSNR YCbCr (dB)", |r| {
        (r.bits_per_frame, r.psnr_yuv)
    }),
    ("ssim-vs-bits", "bits/frame", "SSIM YCbCr", |r| {
        (r.bits_per_frame, r.ssim_yuv)
    }),
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One row of panels per clip; one polyline per (clip, quantiser, metric).
fn render_svg(rows: &[RateRow]) -> String {
    let mut clips: Vec<&str> = Vec::new();
    for r in rows {
        if !clips.contains(&r.clip.as_str()) {
            clips.push(&r.clip);
        }
    }
    let width = PANEL_W * METRICS.len() as f64;
    let height = PANEL_H * clips.len() as f64;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (ci, clip) in clips.iter().enumerate() {
        let clip_rows: Vec<&RateRow> = rows.iter().filter(|r| r.clip == *clip).collect();
        let mut quantisers: Vec<Quantiser> = Vec::new();
        for r in &clip_rows {
            if !quantisers.contains(&r.quantiser) {
                quantisers.push(r.quantiser);
            }
        }
        for (mi, (metric, xlabel, ylabel, f)) in METRICS.iter().enumerate() {
            let ox = mi as f64 * PANEL_W;
            let oy = ci as f64 * PANEL_H;
            let (x0, x1) = range(clip_rows.iter().map(|r| f(r).0));
            let (y0, y1) = range(clip_rows.iter().map(|r| f(r).1));
            let (pw, ph) = (PANEL_W - 1.6 * MARGIN, PANEL_H - 1.6 * MARGIN);
            let px = |x: f64| ox + MARGIN + (x - x0) / (x1 - x0) * pw;
            let py = |y: f64| oy + PANEL_H - MARGIN - (y - y0) / (y1 - y0) * ph;
            writeln!(
                s,
                r##"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#999"/>"##,
                ox + MARGIN,
                oy + PANEL_H - MARGIN - ph
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{} / {}</text>"#,
                ox + MARGIN,
                oy + PANEL_H - MARGIN - ph - 8.0,
                escape(clip),
                metric
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel} [{x0:.4} .. {x1:.4}]</text>"#,
                ox + MARGIN + pw / 2.0,
                oy + PANEL_H - MARGIN + 16.0
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" transform="rotate(-90 {:.1} {:.1})" text-anchor="middle">{ylabel} [{y0:.4} .. {y1:.4}]</text>"#,
                ox + 14.0,
                oy + PANEL_H - MARGIN - ph / 2.0,
                ox + 14.0,
                oy + PANEL_H - MARGIN - ph / 2.0
            )
            .unwrap();
            for (qi, q) in quantisers.iter().enumerate() {
                let mut pts: Vec<(f64, f64)> = clip_rows
                    .iter()
                    .filter(|r| r.quantiser == *q)
                    .map(|r| f(r))
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                writeln!(
                    s,
                    r#"<polyline data-clip="{}" data-quantiser="{}" data-metric="{metric}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                    escape(clip),
                    q.name(),
                    colour(*q),
                    points.join(" ")
                )
                .unwrap();
                writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" fill="{}">{}</text>"#,
                    ox + PANEL_W - 0.6 * MARGIN - 30.0,
                    oy + PANEL_H - MARGIN - ph + 12.0 + 12.0 * qi as f64,
                    colour(*q),
                    q.name()
                )
                .unwrap();
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(clip: &str, q: Quantiser, qp: u8, bits: u64) -> RateRow {
        RateRow {
            clip: clip.into(),
            chroma_format: "420".into(),
            bit_depth: 8,
            tb_size: 8,
            quantiser: q,
            qp,
            frames: 2,
            bits,
            bits_per_frame: bits as f64 / 2.0,
            psnr_y: 40.0 - qp as f64 / 2.0,
            psnr_cb: 42.0,
            psnr_cr: f64::INFINITY,
            psnr_yuv: 41.0 - qp as f64 / 3.0,
            ssim_y: 0.9,
            ssim_cb: 0.95,
            ssim_cr: 1.0,
            ssim_yuv: 0.95 - qp as f64 / 1000.0,
            encode_ms: 1.5,
            decode_ms: 0.5,
        }
    }

    fn report(rows: Vec<RateRow>) -> RateReport {
        RateReport {
            rows,
            meta: RunMeta::for_config(&ExperimentConfig::default()),
        }
    }

    #[test]
    fn comparison_is_mean_of_per_qp_deltas() {
        let r = report(vec![
            row("a", Quantiser::Rdoq, 22, 1000),
            row("a", Quantiser::Rdoq, 27, 500),
            row("a", Quantiser::Fdpq, 22, 900),
            row("a", Quantiser::Fdpq, 27, 400),
            row("b", Quantiser::Urq, 22, 10),
        ]);
        let c = r.comparisons();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].qps, "22 27");
        assert_eq!((c[0].rdoq_bits, c[0].fdpq_bits), (1500, 1300));
        assert!((c[0].mean_delta_pct - (-15.0)).abs() < 1e-12);
    }

    #[test]
    fn csv_shape() {
        let rows: Vec<RateRow> = (0..10).map(|i| row("a", Quantiser::Urq, 10 + i, 100)).collect();
        let csv = report(rows).to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(
            lines[0],
            "clip,chroma_format,bit_depth,tb_size,quantiser,qp,frames,bits,bits_per_frame,\
             psnr_y,psnr_cb,psnr_cr,psnr_yuv,ssim_y,ssim_cb,ssim_cr,ssim_yuv"
        );
        assert!(lines[1].starts_with("a,420,8,8,urq,10,2,100,50"));
    }

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out");
        let r = report(vec![]);
        assert!(matches!(
            emit_report(&r, &target, &[ReportFormat::Csv, ReportFormat::Svg]),
            Err(Error::EmptyReport)
        ));
        assert!(!target.exists());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let mut rows = Vec::new();
        for clip in ["a", "b"] {
            for q in [Quantiser::Urq, Quantiser::Fdpq] {
                for qp in [22, 27, 32] {
                    rows.push(row(clip, q, qp, 1000 / qp as u64));
                }
            }
        }
        let svg = report(rows).to_svg();
        assert_eq!(svg.matches("<polyline").count(), 2 * 2 * 3);
        assert_eq!(
            svg.matches(r#"data-clip="b" data-quantiser="fdpq" data-metric="ssim-vs-bits""#)
                .count(),
            1
        );
    }
}
