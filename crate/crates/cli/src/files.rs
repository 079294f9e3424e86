use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use strobe_core::bitio::{self, Format, MAGIC};
use strobe_core::BitBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InFormat {
    /// Packed if the file starts with the header magic, else ascii
    Auto,
    Packed,
    Ascii,
    StsRaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Packed,
    Ascii,
    StsRaw,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Packed => Format::Packed,
            OutFormat::Ascii => Format::Ascii,
            OutFormat::StsRaw => Format::StsRaw,
        }
    }
}

pub fn read(path: &Path, format: InFormat, lenient: bool) -> Result<BitBuffer> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let lenient = lenient || format == InFormat::Auto;
    let format = match format {
        InFormat::Auto if bytes.starts_with(&MAGIC) => Format::Packed,
        InFormat::Auto | InFormat::Ascii => Format::Ascii,
        InFormat::Packed => Format::Packed,
        InFormat::StsRaw => Format::StsRaw,
    };
    bitio::read_bits(&bytes, format, lenient).with_context(|| format!("parsing {}", path.display()))
}

pub fn write(path: &Path, bits: &BitBuffer, format: OutFormat) -> Result<()> {
    let bytes = bitio::write_bits(bits, format.into())?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
