//! Fixture corpora: a user image directory or the deterministic synthetic set.

use std::path::{Path, PathBuf};

use wmbench::image::{encode_png, load_image};
use wmbench::synth::synth_image;
use wmbench::watermark::{watermark_delta, WatermarkKey, WatermarkScheme};
use wmbench::Image;

use crate::error::{CliError, Result};
use crate::output::write_atomic;

#[derive(Debug, Clone)]
pub struct Corpus {
    pub ids: Vec<String>,
    pub images: Vec<Image>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn take(mut self, n: usize) -> Self {
        self.ids.truncate(n);
        self.images.truncate(n);
        self
    }

    /// Split into the first `n` images and the rest.
    pub fn split_at(&self, n: usize) -> (Corpus, Corpus) {
        let n = n.min(self.len());
        (
            Corpus { ids: self.ids[..n].to_vec(), images: self.images[..n].to_vec() },
            Corpus { ids: self.ids[n..].to_vec(), images: self.images[n..].to_vec() },
        )
    }
}

pub fn synth_id(i: usize) -> String {
    format!("synth_{i:04}")
}

/// `n` synthetic images; image `i` is seeded from `(seed, "synth", i)`.
pub fn synth_corpus(n: usize, seed: u64, size: usize, channels: usize) -> Result<Corpus> {
    let images = wmbench::synth::synth_corpus(n, seed, size, channels)?;
    Ok(Corpus { ids: (0..n).map(synth_id).collect(), images })
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "pgm" | "ppm" | "pnm")
    )
}

/// Image files in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Load every image in `dir` (at most `limit`); ids are file stems. All
/// decode problems are collected and reported together.
pub fn load_dir(dir: &Path, limit: Option<usize>) -> Result<Corpus> {
    let mut paths = list_images(dir)?;
    if let Some(n) = limit {
        paths.truncate(n);
    }
    if paths.is_empty() {
        return Err(CliError::invalid("input_dir", format!("{} holds no PNG/PGM/PPM images", dir.display())));
    }
    let mut ids = Vec::new();
    let mut images = Vec::new();
    let mut errs = Vec::new();
    for p in &paths {
        match load_image(p) {
            Ok(img) => {
                ids.push(p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
                images.push(img);
            }
            Err(e) => errs.push(format!("input_dir: {}: {e}", p.display())),
        }
    }
    if !errs.is_empty() {
        return Err(CliError::Invalid(errs));
    }
    Ok(Corpus { ids, images })
}

/// Reject images too small to carry a full key under any of `schemes`.
/// Each distinct image shape is probed once with a blank image.
pub fn check_capacity(corpus: &Corpus, schemes: &[WatermarkScheme], key: &WatermarkKey) -> Result<()> {
    let mut seen = std::collections::BTreeMap::new();
    for (id, img) in corpus.ids.iter().zip(&corpus.images) {
        seen.entry((img.width(), img.height(), img.channels())).or_insert(id);
    }
    let mut errs = Vec::new();
    for (&(w, h, c), id) in &seen {
        let blank = Image::filled(w, h, c, 0.5)?;
        for s in schemes {
            if let Err(e) = watermark_delta(&blank, key, s) {
                errs.push(format!("{id} ({w}x{h}) under {}: {e}", s.kind.name()));
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(errs))
    }
}

/// Reject images whose sides are not multiples of `multiple`.
pub fn check_dims(corpus: &Corpus, multiple: usize) -> Result<()> {
    let errs: Vec<String> = corpus
        .ids
        .iter()
        .zip(&corpus.images)
        .filter(|(_, img)| img.width() % multiple != 0 || img.height() % multiple != 0)
        .map(|(id, img)| {
            format!(
                "{id}: {}x{} is not a multiple of {multiple} (strict dimensions)",
                img.width(),
                img.height()
            )
        })
        .collect();
    if errs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(errs))
    }
}

/// Colour layout of generated fixture images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum SynthKind {
    #[default]
    Gray,
    Rgb,
}

impl SynthKind {
    pub fn channels(self) -> usize {
        match self {
            SynthKind::Gray => 1,
            SynthKind::Rgb => 3,
        }
    }
}

/// Write `n` synthetic 256×256 images (`synth_0000.png`, ...) into `outdir`.
pub fn synth_dataset(kind: SynthKind, n: usize, seed: u64, outdir: &Path) -> Result<Vec<PathBuf>> {
    if n == 0 {
        return Err(CliError::invalid("n", "must be >= 1"));
    }
    let channels = kind.channels();
    std::fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    let size = wmbench::synth::DEFAULT_SIZE;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let img = synth_image(wmbench::rng::derive_indexed(seed, "synth", i as u64), size, size, channels)?;
        let path = outdir.join(format!("{}.png", synth_id(i)));
        write_atomic(&path, &encode_png(&img)?)?;
        out.push(path);
    }
    Ok(out)
}
