//! `pqlab`: encode, decode, measure and sweep quantisers from the shell.

mod clip;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use pqlab::coding::{decode_sequence, encode_sequence, Bitstream, CodecConfig, Quantiser, ScanKind};
use pqlab::experiment::{dump_tables, dump_weights, emit_report, run_experiment, ExperimentConfig, ReportFormat};
use pqlab::media_io::{load_raw, write_raw, ChromaFormat, SequenceFormat};
use pqlab::metrics::{sequence_quality, ssim_map};
use pqlab::quant::{DeadzoneMode, Qp};
use pqlab::transform::TbSize;

use crate::clip::parse_clip;

/// Exit status categories.
const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_INTEGRITY: u8 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "pqlab",
    version,
    about = "Perceptual quantisation lab: integer transforms, URQ/RDOQ/FDPQ and a toy intra codec"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a raw planar YUV file.
    Encode(EncodeArgs),
    /// Decode a bitstream back to raw planar YUV.
    Decode(DecodeArgs),
    /// PSNR and SSIM between two raw files.
    Metrics(MetricsArgs),
    /// Sweep quantisers x QPs over a clip suite and write reports.
    Experiment(ExperimentArgs),
    /// Print the MF/SF table and the 4x4 and 8x8 weight maps.
    DumpTables,
    /// Print one weight map as CSV (x,y,d,w).
    DumpWeights {
        #[arg(long, short = 'n', default_value_t = 8)]
        size: usize,
    },
}

#[derive(Args, Debug)]
struct Geometry {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    bit_depth: u8,
    #[arg(long, default_value = "420")]
    chroma: ChromaFormat,
}

impl Geometry {
    fn format(&self) -> pqlab::Result<SequenceFormat> {
        SequenceFormat::new(self.width, self.height, self.bit_depth, self.chroma)
    }
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[command(flatten)]
    geometry: Geometry,
    #[arg(long, default_value_t = 8)]
    tb_size: usize,
    #[arg(long, default_value = "fdpq")]
    quantiser: Quantiser,
    #[arg(long, default_value_t = 27)]
    qp: i64,
    #[arg(long, default_value = "half")]
    deadzone: DeadzoneMode,
    #[arg(long, default_value = "diagonal")]
    scan: ScanKind,
    /// Also write the encoder's reconstruction.
    #[arg(long)]
    recon: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    geometry: Geometry,
    /// Write per-frame, per-channel SSIM maps as PGM into this directory.
    #[arg(long)]
    ssim_maps: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// TOML config; flags below override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Clip, as comma-separated key=value pairs, e.g.
    /// `name=a,path=a.yuv,width=64,height=32,bit_depth=8,chroma_format=420`
    /// or `name=t,synthetic=texture,width=72,height=56,bit_depth=10,chroma_format=444`.
    /// Repeatable; replaces the clip list.
    #[arg(long = "clip", value_name = "SPEC")]
    clips: Vec<String>,
    /// Luma transform size: 4, 8, 16 or 32.
    #[arg(long)]
    tb_size: Option<usize>,
    /// Comma-separated QPs, e.g. `22,27,32`.
    #[arg(long, value_delimiter = ',')]
    qps: Option<Vec<i64>>,
    /// Comma-separated subset of `urq,rdoq,fdpq`.
    #[arg(long, value_delimiter = ',')]
    quantisers: Option<Vec<Quantiser>>,
    /// `half` or `intra-third`.
    #[arg(long)]
    deadzone: Option<DeadzoneMode>,
    /// `diagonal`, `horizontal` or `vertical`.
    #[arg(long)]
    scan: Option<ScanKind>,
    /// Where reports and artifacts go.
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
    /// Skip writing bitstreams and reconstructions.
    #[arg(long)]
    no_artifacts: bool,
    /// Print the effective config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn qp(v: i64) -> anyhow::Result<Qp> {
    Ok(Qp::new(v)?)
}

fn encode(args: EncodeArgs) -> anyhow::Result<()> {
    let format = args.geometry.format()?;
    let cfg = CodecConfig {
        format,
        tb_size: TbSize::new(args.tb_size)?,
        quantiser: args.quantiser,
        qp: qp(args.qp)?,
        deadzone: args.deadzone,
        scan: args.scan,
    };
    let seq = load_raw(&args.input, format).with_context(|| format!("reading {}", args.input.display()))?;
    let encoded = encode_sequence(&seq, &cfg)?;
    fs::write(&args.output, encoded.bitstream.to_bytes())
        .with_context(|| format!("writing {}", args.output.display()))?;
    if let Some(path) = &args.recon {
        write_raw(&encoded.recon, path)?;
    }
    let q = sequence_quality(&seq, &encoded.recon)?;
    println!(
        "frames={} bits={} psnr_yuv={:.4} ssim_yuv={:.4}",
        seq.frame_count(),
        8 * encoded.bitstream.payload_bytes(),
        q.combined_psnr(),
        q.combined_ssim()
    );
    Ok(())
}

fn decode(args: DecodeArgs) -> anyhow::Result<()> {
    let bytes = fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let bs = Bitstream::from_bytes(&bytes)?;
    let seq = decode_sequence(&bs)?;
    write_raw(&seq, &args.output)?;
    let c = &bs.config;
    println!(
        "{}x{} {}-bit {} frames={} quantiser={} qp={} tb={}",
        c.format.width,
        c.format.height,
        c.format.bit_depth,
        c.format.chroma_format,
        seq.frame_count(),
        c.quantiser.name(),
        c.qp.value(),
        c.tb_size
    );
    Ok(())
}

fn metrics(args: MetricsArgs) -> anyhow::Result<()> {
    let format = args.geometry.format()?;
    let a = load_raw(&args.reference, format)?;
    let b = load_raw(&args.test, format)?;
    let q = sequence_quality(&a, &b)?;
    println!("channel,psnr_db,ssim");
    for (name, c) in ["y", "cb", "cr"].iter().zip(q.channels()) {
        println!("{name},{:.4},{:.6}", c.psnr_db, c.ssim);
    }
    println!("yuv,{:.4},{:.6}", q.combined_psnr(), q.combined_ssim());
    if let Some(dir) = &args.ssim_maps {
        fs::create_dir_all(dir)?;
        for (i, (fa, fb)) in a.frames.iter().zip(&b.frames).enumerate() {
            for (name, (pa, pb)) in ["y", "cb", "cr"].iter().zip(fa.planes().into_iter().zip(fb.planes())) {
                ssim_map(pa, pb)?.save_pgm(dir.join(format!("frame{i:03}_{name}.pgm")))?;
            }
        }
    }
    Ok(())
}

fn experiment_config(args: &ExperimentArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => ExperimentConfig::default(),
    };
    if !args.clips.is_empty() {
        cfg.clips = args.clips.iter().map(|s| parse_clip(s)).collect::<Result<_, _>>()?;
    }
    if let Some(n) = args.tb_size {
        cfg.tb_size = n;
    }
    if let Some(qps) = &args.qps {
        cfg.qps = qps.iter().map(|&v| qp(v)).collect::<anyhow::Result<_>>()?;
    }
    if let Some(q) = &args.quantisers {
        cfg.quantisers = q.clone();
    }
    if let Some(d) = args.deadzone {
        cfg.deadzone = d;
    }
    if let Some(s) = args.scan {
        cfg.scan = s;
    }
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let cfg = experiment_config(&args)?;
    if args.print_config {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    let out = run_experiment(&cfg)?;
    let dir: &Path = &cfg.output_dir;
    let files = emit_report(&out.report, dir, &[ReportFormat::Csv, ReportFormat::Svg])?;
    if !args.no_artifacts {
        out.write_artifacts(dir)?;
    }
    fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    for c in out.report.comparisons() {
        println!("{}: fdpq vs rdoq {:+.2}% (QPs {})", c.clip, c.mean_delta_pct, c.qps);
    }
    println!(
        "{} rows; wrote {}",
        out.report.rows.len(),
        files
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Metrics(a) => metrics(a),
        Command::Experiment(a) => experiment(a),
        Command::DumpTables => {
            print!("{}", dump_tables());
            Ok(())
        }
        Command::DumpWeights { size } => {
            let Ok(size) = TbSize::new(size) else {
                bail!(pqlab::Error::UnsupportedBlockSize(size));
            };
            print!("{}", dump_weights(size));
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use pqlab::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io(_) => EXIT_IO,
                E::Config(_) | E::InvalidQp(_) | E::UnsupportedBlockSize(_) => EXIT_USAGE,
                E::CodecIntegrity(_) => EXIT_INTEGRITY,
                E::EmptyReport => EXIT_OTHER,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_OTHER
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pqlab::experiment::{generate, SyntheticKind};

    fn status(args: &[&str]) -> u8 {
        let parsed = Cli::try_parse_from(std::iter::once("pqlab").chain(args.iter().copied()));
        match parsed.map_err(anyhow::Error::from).and_then(run) {
            Ok(()) => 0,
            Err(e) => exit_code(&e),
        }
    }

    fn file(dir: &tempfile::TempDir, name: &str) -> String {
        dir.path().join(name).to_str().unwrap().to_owned()
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn encode_decode_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let (input, stream, enc, dec, maps) = (
            file(&dir, "in.yuv"),
            file(&dir, "a.pqlb"),
            file(&dir, "enc.yuv"),
            file(&dir, "dec.yuv"),
            file(&dir, "maps"),
        );
        let format = SequenceFormat::new(40, 24, 10, ChromaFormat::Yuv422).unwrap();
        write_raw(&generate(SyntheticKind::Texture, format, 2, 3).unwrap(), &input).unwrap();
        let geo = [
            "--width",
            "40",
            "--height",
            "24",
            "--bit-depth",
            "10",
            "--chroma",
            "422",
        ];

        let mut args = vec!["encode", "-i", &input, "-o", &stream, "--qp", "32", "--tb-size", "16"];
        args.extend(["--quantiser", "rdoq", "--recon", &enc]);
        args.extend(geo);
        assert_eq!(status(&args), 0);
        assert_eq!(status(&["decode", "-i", &stream, "-o", &dec]), 0);
        assert_eq!(fs::read(&enc).unwrap(), fs::read(&dec).unwrap());

        let mut args = vec!["metrics", "--reference", &input, "--test", &dec, "--ssim-maps", &maps];
        args.extend(geo);
        assert_eq!(status(&args), 0);
        let mut pgms: Vec<String> = fs::read_dir(&maps)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        pgms.sort();
        assert_eq!(pgms.len(), 6);
        assert_eq!(pgms[0], "frame000_cb.pgm");
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let (missing, junk, short, out) = (
            file(&dir, "missing"),
            file(&dir, "junk.pqlb"),
            file(&dir, "short.yuv"),
            file(&dir, "out"),
        );
        assert_eq!(status(&["dump-weights", "-n", "5"]), EXIT_USAGE);
        assert_eq!(status(&["dump-weights", "-n", "4"]), 0);
        assert_eq!(status(&["decode", "-i", &missing, "-o", &out]), EXIT_IO);

        fs::write(&junk, b"PQLBnot a real stream").unwrap();
        assert_eq!(status(&["decode", "-i", &junk, "-o", &out]), EXIT_DATA);

        fs::write(&short, vec![0u8; 100]).unwrap();
        let encode = ["encode", "-i", &short, "-o", &out, "--width", "16", "--height", "16"];
        assert_eq!(status(&encode), EXIT_DATA);
        let mut bad_qp = encode.to_vec();
        bad_qp.extend(["--qp", "52"]);
        assert_eq!(status(&bad_qp), EXIT_USAGE);

        assert_eq!(
            status(&["experiment", "--clip", "name=x,width=16", "--no-artifacts"]),
            EXIT_USAGE
        );

        let err = anyhow::Error::from(pqlab::Error::CodecIntegrity("test".into()));
        assert_eq!(exit_code(&err), EXIT_INTEGRITY);
    }

    #[test]
    fn experiment_writes_reports_and_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let (out, again) = (file(&dir, "run"), file(&dir, "again"));
        let args = [
            "experiment",
            "--clip",
            "name=t,synthetic=texture,width=32,height=24,frames=1",
            "--clip",
            "name=g,synthetic=gradient,width=32,height=24,bit_depth=10,chroma=444,frames=1",
            "--qps",
            "22,37",
            "--quantisers",
            "rdoq,fdpq",
            "-o",
            &out,
        ];
        assert_eq!(status(&args), 0);
        let out = PathBuf::from(out);
        for f in [
            "report.csv",
            "comparison.csv",
            "timings.csv",
            "run.toml",
            "report.svg",
            "config.toml",
        ] {
            assert!(out.join(f).is_file(), "{f}");
        }
        let report = fs::read_to_string(out.join("report.csv")).unwrap();
        assert_eq!(report.lines().count(), 1 + 2 * 2 * 2);
        assert!(out.join("bitstreams/g_fdpq_qp37.pqlb").is_file());
        assert!(out.join("recon/t_rdoq_qp22.yuv").is_file());

        // The written config reproduces the run.
        let cfg = out.join("config.toml");
        assert_eq!(
            status(&[
                "experiment",
                "-c",
                cfg.to_str().unwrap(),
                "-o",
                &again,
                "--no-artifacts"
            ]),
            0
        );
        let again = PathBuf::from(again);
        assert_eq!(report, fs::read_to_string(again.join("report.csv")).unwrap());
        assert!(!again.join("bitstreams").exists());
    }

    #[test]
    fn flags_override_the_config() {
        let cli = Cli::try_parse_from([
            "pqlab",
            "experiment",
            "--tb-size",
            "16",
            "--qps",
            "30",
            "--deadzone",
            "intra-third",
        ])
        .unwrap();
        let Command::Experiment(args) = cli.command else {
            unreachable!()
        };
        let cfg = experiment_config(&args).unwrap();
        assert_eq!(cfg.tb_size, 16);
        assert_eq!(cfg.qps, vec![Qp::new(30).unwrap()]);
        assert_eq!(cfg.deadzone, DeadzoneMode::IntraThird);
        assert_eq!(cfg.clips.len(), 12);
    }
}
