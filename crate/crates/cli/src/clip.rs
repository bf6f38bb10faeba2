//! `--clip` specs: comma-separated `key=value` pairs.

use anyhow::{anyhow, bail, Context};
use pqlab::experiment::ClipSpec;

pub fn parse_clip(spec: &str) -> anyhow::Result<ClipSpec> {
    let mut clip = ClipSpec {
        name: String::new(),
        synthetic: None,
        path: None,
        width: 0,
        height: 0,
        bit_depth: 8,
        chroma_format: pqlab::media_io::ChromaFormat::Yuv420,
        frames: None,
        seed: 1,
    };
    let mut have_size = (false, false);
    for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!(pqlab::Error::Config(format!("clip field `{pair}` is not key=value"))))?;
        let bad = || pqlab::Error::Config(format!("bad value for clip field `{key}`: `{value}`"));
        match key.replace('-', "_").as_str() {
            "name" => clip.name = value.to_string(),
            "path" => clip.path = Some(value.into()),
            "synthetic" => clip.synthetic = Some(value.parse()?),
            "width" => {
                clip.width = value.parse().map_err(|_| bad())?;
                have_size.0 = true;
            }
            "height" => {
                clip.height = value.parse().map_err(|_| bad())?;
                have_size.1 = true;
            }
            "bit_depth" => clip.bit_depth = value.parse().map_err(|_| bad())?,
            "chroma" | "chroma_format" => clip.chroma_format = value.parse()?,
            "frames" => clip.frames = Some(value.parse().map_err(|_| bad())?),
            "seed" => clip.seed = value.parse().map_err(|_| bad())?,
            other => bail!(pqlab::Error::Config(format!("unknown clip field `{other}`"))),
        }
    }
    if clip.name.is_empty() || !(have_size.0 && have_size.1) {
        bail!(pqlab::Error::Config(format!(
            "clip `{spec}` needs name, width and height"
        )));
    }
    clip.format().with_context(|| format!("clip `{}`", clip.name))?;
    Ok(clip)
}
