//! Quantiser sweeps over a clip suite: encode, decode, verify, measure.

mod report;
mod synth;
mod tables;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{decode_sequence, encode_sequence, Bitstream, CodecConfig, Quantiser, ScanKind};
use crate::error::{Error, Result};
use crate::media_io::{load_raw, write_raw, ChromaFormat, FrameSequence, SequenceFormat};
use crate::metrics::sequence_quality;
use crate::quant::{DeadzoneMode, Qp};
use crate::transform::TbSize;

pub use report::{emit_report, ComparisonRow, RateReport, RateRow, ReportFormat, RunMeta, TimingRow};
pub use synth::{generate, SyntheticKind};
pub use tables::{dump_tables, dump_weights};

pub const DEFAULT_QPS: [u8; 5] = [17, 22, 27, 32, 37];

/// One input clip: either a raw planar file or a generated pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma_format: ChromaFormat,
    /// Frames to generate, or the maximum number read from a raw file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl ClipSpec {
    pub fn synthetic(kind: SyntheticKind, chroma_format: ChromaFormat, bit_depth: u8) -> Self {
        Self {
            name: format!("{}-{}-{}bit", kind.name(), chroma_format.id_str(), bit_depth),
            synthetic: Some(kind),
            path: None,
            width: 72,
            height: 56,
            bit_depth,
            chroma_format,
            frames: Some(2),
            seed: 1,
        }
    }

    pub fn format(&self) -> Result<SequenceFormat> {
        SequenceFormat::new(self.width, self.height, self.bit_depth, self.chroma_format)
    }

    pub fn load(&self) -> Result<FrameSequence> {
        let format = self.format()?;
        match (&self.synthetic, &self.path) {
            (Some(kind), None) => generate(*kind, format, self.frames.unwrap_or(2), self.seed),
            (None, Some(path)) => {
                let mut seq = load_raw(path, format)?;
                if let Some(limit) = self.frames {
                    seq.frames.truncate(limit);
                }
                Ok(seq)
            }
            _ => Err(Error::Config(format!(
                "clip `{}` needs exactly one of `synthetic` or `path`",
                self.name
            ))),
        }
    }
}

/// The built-in suite: every pattern in every chroma format, 4:2:0 at 8 bits
/// and the others at 10 bits.
pub fn synthetic_suite() -> Vec<ClipSpec> {
    let formats = [
        (ChromaFormat::Yuv420, 8),
        (ChromaFormat::Yuv422, 10),
        (ChromaFormat::Yuv444, 10),
    ];
    SyntheticKind::ALL
        .into_iter()
        .flat_map(|kind| formats.map(|(cf, bd)| ClipSpec::synthetic(kind, cf, bd)))
        .collect()
}

fn default_tb_size() -> usize {
    8
}

fn default_qps() -> Vec<Qp> {
    DEFAULT_QPS
        .iter()
        .map(|&q| Qp::new(q as i64).expect("valid default"))
        .collect()
}

fn default_quantisers() -> Vec<Quantiser> {
    vec![Quantiser::Urq, Quantiser::Rdoq, Quantiser::Fdpq]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("pqlab-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "synthetic_suite")]
    pub clips: Vec<ClipSpec>,
    #[serde(default = "default_tb_size")]
    pub tb_size: usize,
    #[serde(default = "default_qps")]
    pub qps: Vec<Qp>,
    #[serde(default = "default_quantisers")]
    pub quantisers: Vec<Quantiser>,
    #[serde(default)]
    pub deadzone: DeadzoneMode,
    #[serde(default)]
    pub scan: ScanKind,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            clips: synthetic_suite(),
            tb_size: default_tb_size(),
            qps: default_qps(),
            quantisers: default_quantisers(),
            deadzone: DeadzoneMode::default(),
            scan: ScanKind::default(),
            output_dir: default_output_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses a config file; relative clip paths and the output directory are
    /// taken relative to the file's directory.
    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for clip in &mut cfg.clips {
            if let Some(p) = &clip.path {
                if p.is_relative() {
                    clip.path = Some(base.join(p));
                }
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        TbSize::new(self.tb_size).map_err(|_| Error::Config(format!("tb_size {} not in 4/8/16/32", self.tb_size)))?;
        if self.clips.is_empty() {
            return fail("no clips".into());
        }
        if self.quantisers.is_empty() {
            return fail("at least one quantiser is required".into());
        }
        if self.qps.is_empty() {
            return fail("at least one QP is required".into());
        }
        if self.qps.iter().collect::<HashSet<_>>().len() != self.qps.len() {
            return fail("duplicate QP".into());
        }
        if self.quantisers.iter().collect::<HashSet<_>>().len() != self.quantisers.len() {
            return fail("duplicate quantiser".into());
        }
        let mut names = HashSet::new();
        for clip in &self.clips {
            let ok = !clip.name.is_empty()
                && clip
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
            if !ok {
                return fail(format!("clip name `{}` must be non-empty [A-Za-z0-9._-]", clip.name));
            }
            if !names.insert(&clip.name) {
                return fail(format!("duplicate clip name `{}`", clip.name));
            }
            if clip.synthetic.is_some() == clip.path.is_some() {
                return fail(format!(
                    "clip `{}` needs exactly one of `synthetic` or `path`",
                    clip.name
                ));
            }
            clip.format()?;
        }
        Ok(())
    }

    pub fn tb(&self) -> TbSize {
        TbSize::new(self.tb_size).expect("validated")
    }
}

/// Bitstream and decoded reconstruction of one job.
#[derive(Clone, Debug)]
pub struct JobArtifact {
    pub clip: String,
    pub quantiser: Quantiser,
    pub qp: Qp,
    pub bitstream: Bitstream,
    pub recon: FrameSequence,
}

impl JobArtifact {
    pub fn stem(&self) -> String {
        format!("{}_{}_qp{:02}", self.clip, self.quantiser.name(), self.qp.value())
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: RateReport,
    pub artifacts: Vec<JobArtifact>,
}

impl ExperimentOutput {
    /// Writes `bitstreams/*.pqlb` and `recon/*.yuv` under `dir`.
    pub fn write_artifacts(&self, dir: impl AsRef<Path>) -> Result<()> {
        let bs_dir = dir.as_ref().join("bitstreams");
        let rec_dir = dir.as_ref().join("recon");
        fs::create_dir_all(&bs_dir)?;
        fs::create_dir_all(&rec_dir)?;
        for a in &self.artifacts {
            fs::write(bs_dir.join(format!("{}.pqlb", a.stem())), a.bitstream.to_bytes())?;
            write_raw(&a.recon, rec_dir.join(format!("{}.yuv", a.stem())))?;
        }
        Ok(())
    }
}

/// Fails unless the decoder reproduced the encoder's reconstruction exactly.
pub fn verify_closed_loop(encoder_recon: &FrameSequence, decoded: &FrameSequence, what: &str) -> Result<()> {
    if encoder_recon.frame_count() != decoded.frame_count() {
        return Err(Error::CodecIntegrity(format!("{what}: frame count differs")));
    }
    for (i, (a, b)) in encoder_recon.frames.iter().zip(&decoded.frames).enumerate() {
        for (c, (pa, pb)) in a.planes().into_iter().zip(b.planes()).enumerate() {
            if let Some(at) = pa.samples().iter().zip(pb.samples()).position(|(x, y)| x != y) {
                return Err(Error::CodecIntegrity(format!(
                    "{what}: frame {i} channel {c} sample {at} differs between encoder and decoder"
                )));
            }
        }
    }
    Ok(())
}

fn run_job(clip: &ClipSpec, seq: &FrameSequence, codec: CodecConfig) -> Result<(RateRow, JobArtifact)> {
    let what = format!("{} {} QP {}", clip.name, codec.quantiser.name(), codec.qp.value());
    let start = Instant::now();
    let encoded = encode_sequence(seq, &codec)?;
    let encode_time = start.elapsed();

    let bytes = encoded.bitstream.to_bytes();
    let start = Instant::now();
    let parsed = Bitstream::from_bytes(&bytes)?;
    let decoded = decode_sequence(&parsed)?;
    let decode_time = start.elapsed();
    verify_closed_loop(&encoded.recon, &decoded, &what)?;

    let quality = sequence_quality(seq, &decoded)?;
    let bits = 8 * parsed.payload_bytes() as u64;
    let frames = seq.frame_count();
    let row = RateRow {
        clip: clip.name.clone(),
        chroma_format: clip.chroma_format.id_str().to_string(),
        bit_depth: clip.bit_depth,
        tb_size: codec.tb_size.n(),
        quantiser: codec.quantiser,
        qp: codec.qp.value(),
        frames,
        bits,
        bits_per_frame: bits as f64 / frames as f64,
        psnr_y: quality.y.psnr_db,
        psnr_cb: quality.cb.psnr_db,
        psnr_cr: quality.cr.psnr_db,
        psnr_yuv: quality.combined_psnr(),
        ssim_y: quality.y.ssim,
        ssim_cb: quality.cb.ssim,
        ssim_cr: quality.cr.ssim,
        ssim_yuv: quality.combined_ssim(),
        encode_ms: encode_time.as_secs_f64() * 1e3,
        decode_ms: decode_time.as_secs_f64() * 1e3,
    };
    let artifact = JobArtifact {
        clip: clip.name.clone(),
        quantiser: codec.quantiser,
        qp: codec.qp,
        bitstream: parsed,
        recon: decoded,
    };
    Ok((row, artifact))
}

/// Runs every (clip, quantiser, QP) job. Jobs run in parallel; rows come
/// back in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let clips = config
        .clips
        .iter()
        .map(|c| c.load().map(|seq| (c, seq)))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (clip, seq) in &clips {
        if seq.frame_count() == 0 {
            return Err(Error::Config(format!("clip `{}` has no frames", clip.name)));
        }
        for &quantiser in &config.quantisers {
            for &qp in &config.qps {
                let codec = CodecConfig {
                    format: seq.format,
                    tb_size: config.tb(),
                    quantiser,
                    qp,
                    deadzone: config.deadzone,
                    scan: config.scan,
                };
                jobs.push((*clip, seq, codec));
            }
        }
    }
    let results = jobs
        .into_par_iter()
        .map(|(clip, seq, codec)| run_job(clip, seq, codec))
        .collect::<Result<Vec<_>>>()?;
    let (rows, artifacts) = results.into_iter().unzip();
    Ok(ExperimentOutput {
        report: RateReport {
            rows,
            meta: RunMeta::for_config(config),
        },
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(quantisers: Vec<Quantiser>, qps: &[i64]) -> ExperimentConfig {
        let mut clip = ClipSpec::synthetic(SyntheticKind::Texture, ChromaFormat::Yuv420, 8);
        clip.width = 32;
        clip.height = 24;
        ExperimentConfig {
            clips: vec![clip],
            qps: qps.iter().map(|&q| Qp::new(q).unwrap()).collect(),
            quantisers,
            ..Default::default()
        }
    }

    #[test]
    fn row_counts() {
        let one = run_experiment(&small(vec![Quantiser::Urq], &[22])).unwrap();
        assert_eq!(one.report.rows.len(), 1);
        assert!(one.report.comparisons().is_empty());

        let two = run_experiment(&small(vec![Quantiser::Rdoq, Quantiser::Fdpq], &[17, 22, 27, 32, 37])).unwrap();
        assert_eq!(two.report.rows.len(), 10);
        assert_eq!(two.report.comparisons().len(), 1);
        assert_eq!(two.artifacts.len(), 10);
    }

    #[test]
    fn rows_follow_config_order() {
        let out = run_experiment(&small(vec![Quantiser::Fdpq, Quantiser::Urq], &[32, 17])).unwrap();
        let order: Vec<_> = out.report.rows.iter().map(|r| (r.quantiser, r.qp)).collect();
        assert_eq!(
            order,
            vec![
                (Quantiser::Fdpq, 32),
                (Quantiser::Fdpq, 17),
                (Quantiser::Urq, 32),
                (Quantiser::Urq, 17)
            ]
        );
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        assert_eq!(ExperimentConfig::default().clips.len(), 12);
        let mut c = small(vec![], &[22]);
        assert!(c.validate().is_err());
        c.quantisers = vec![Quantiser::Urq];
        c.tb_size = 12;
        assert!(c.validate().is_err());
        c.tb_size = 16;
        c.clips[0].path = Some("x.yuv".into());
        assert!(c.validate().is_err());
        c.clips[0].path = None;
        c.clips.push(c.clips[0].clone());
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("qps = [52]").is_err());
        assert!(ExperimentConfig::from_toml_str("quantisers = []").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let text = r#"
            tb_size = 16
            qps = [22, 37]
            quantisers = ["rdoq", "fdpq"]
            deadzone = "half"
            output_dir = "out"

            [[clips]]
            name = "tex"
            synthetic = "texture"
            width = 64
            height = 32
            bit_depth = 10
            chroma_format = "422"
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.tb_size, 16);
        assert_eq!(cfg.deadzone, DeadzoneMode::Half);
        assert_eq!(cfg.scan, ScanKind::Diagonal);
        assert_eq!(cfg.clips[0].synthetic, Some(SyntheticKind::Texture));
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);

        let empty = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(empty, ExperimentConfig::default());
    }

    #[test]
    fn closed_loop_mismatch_is_an_integrity_error() {
        let clip = ClipSpec::synthetic(SyntheticKind::Noise, ChromaFormat::Yuv444, 8);
        let seq = clip.load().unwrap();
        let mut other = seq.clone();
        verify_closed_loop(&seq, &other, "same").unwrap();
        other.frames[1].cr.samples_mut()[7] ^= 1;
        assert!(matches!(
            verify_closed_loop(&seq, &other, "x"),
            Err(Error::CodecIntegrity(_))
        ));
    }
}
