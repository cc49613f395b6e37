use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use histpack::container;
use histpack::histogram_pack::TableCompressor;
use histpack::image_io::{self, HdrImage, ImageFormat, PixelType, RawLayout, ReadOptions};
use histpack::lossless_backend::BackendId;
use histpack::pipeline::{self, EncodeParams};
use histpack::residual::ColorTransform;
use histpack::{Error, ErrorClass};

mod report;

#[derive(Parser, Debug)]
#[command(
    name = "histpack",
    version,
    about = "Lossless HDR images inside ordinary JPEG files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode an HDR image into a container
    Encode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        image: ImageArgs,
        #[command(flatten)]
        codec: CodecArgs,
        /// Print the stats report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Decode a container back to the original HDR image
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Output format; guessed from the output extension if omitted
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Check that a container decodes to the given original
    Verify {
        original: PathBuf,
        container: PathBuf,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Drop the extension layer, leaving a plain JPEG
    Strip {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Describe a container's structure
    Inspect {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Encode in memory and report sizes and histogram sparseness
    Stats {
        input: PathBuf,
        #[command(flatten)]
        image: ImageArgs,
        #[command(flatten)]
        codec: CodecArgs,
        /// Also append a CSV row to this file
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Encode at a grid of qualities and report bitrates as CSV
    Sweep {
        input: PathBuf,
        #[command(flatten)]
        image: ImageArgs,
        #[command(flatten)]
        codec: CodecArgs,
        /// Comma-separated qualities [default: 0,10,...,100]
        #[arg(long, value_delimiter = ',')]
        qualities: Option<Vec<u8>>,
        /// Comma-separated backends [default: the --backend value]
        #[arg(long, value_enum, value_delimiter = ',')]
        backends: Option<Vec<BackendArg>>,
        /// Write CSV here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ImageArgs {
    /// Input format; guessed from extension or magic bytes if omitted
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Accept NaN samples in PFM input
    #[arg(long)]
    allow_nan: bool,
    #[arg(long, help_heading = "Raw input")]
    width: Option<u32>,
    #[arg(long, help_heading = "Raw input")]
    height: Option<u32>,
    #[arg(long, default_value_t = 3, help_heading = "Raw input")]
    channels: u8,
    #[arg(long, value_enum, default_value_t = PixelArg::Int, help_heading = "Raw input")]
    pixel_type: PixelArg,
    #[arg(long, default_value_t = 16, help_heading = "Raw input")]
    bit_depth: u8,
}

#[derive(Args, Debug)]
struct CodecArgs {
    /// Base-layer JPEG quality, 0-100
    #[arg(long, default_value_t = pipeline::DEFAULT_QUALITY, value_parser = clap::value_parser!(u8).range(0..=100))]
    q: u8,
    #[arg(long, value_enum, default_value_t = BackendArg::Medrice)]
    backend: BackendArg,
    /// Residual color transform
    #[arg(long, value_enum, default_value_t = ColorArg::Rct)]
    color: ColorArg,
    /// Unpacking table compressor
    #[arg(long, value_enum, default_value_t = TablesArg::Deflate)]
    tables: TablesArg,
    /// Skip the decode-and-compare after encoding
    #[arg(long)]
    no_verify: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Pfm,
    Ppm,
    Pgm,
    Raw,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PixelArg {
    Half,
    Int,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BackendArg {
    Store,
    Medrice,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ColorArg {
    Identity,
    Rct,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TablesArg {
    Deflate,
    Bzip2,
}

impl From<BackendArg> for BackendId {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Store => BackendId::Store,
            BackendArg::Medrice => BackendId::MedRice,
        }
    }
}

impl CodecArgs {
    fn params(&self) -> EncodeParams {
        EncodeParams {
            quality: self.q,
            backend: self.backend.into(),
            transform: match self.color {
                ColorArg::Identity => ColorTransform::Identity,
                ColorArg::Rct => ColorTransform::ReversibleYCbCr,
            },
            table_compressor: match self.tables {
                TablesArg::Deflate => TableCompressor::Deflate,
                TablesArg::Bzip2 => TableCompressor::Bzip2,
            },
            verify: !self.no_verify,
        }
    }
}

impl ImageArgs {
    fn read(&self, path: &Path) -> Result<HdrImage> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let format = match self.format {
            Some(FormatArg::Raw) => {
                let (Some(width), Some(height)) = (self.width, self.height) else {
                    bail!(Error::InvalidArgument(
                        "raw input needs --width and --height".into()
                    ));
                };
                ImageFormat::Raw(RawLayout {
                    width,
                    height,
                    channels: self.channels,
                    pixel_type: match self.pixel_type {
                        PixelArg::Half => PixelType::HalfFloat,
                        PixelArg::Int => PixelType::Integer,
                    },
                    bit_depth: self.bit_depth,
                })
            }
            Some(f) => headered(f),
            None => ImageFormat::from_extension(path)
                .or_else(|| ImageFormat::from_magic(&bytes))
                .ok_or_else(|| {
                    Error::ImageFormat(format!("cannot tell the format of {}", path.display()))
                })?,
        };
        let opts = ReadOptions {
            allow_nan: self.allow_nan,
        };
        image_io::decode_image(&bytes, format, opts)
            .with_context(|| format!("reading {}", path.display()))
    }
}

fn headered(f: FormatArg) -> ImageFormat {
    match f {
        FormatArg::Pfm => ImageFormat::Pfm,
        FormatArg::Ppm => ImageFormat::Ppm16,
        FormatArg::Pgm => ImageFormat::Pgm16,
        FormatArg::Raw => unreachable!("raw handled by caller"),
    }
}

/// Picks an output format for a decoded image.
fn output_format(img: &HdrImage, path: &Path, format: Option<FormatArg>) -> Result<ImageFormat> {
    let raw = || {
        ImageFormat::Raw(RawLayout {
            width: img.width(),
            height: img.height(),
            channels: 3,
            pixel_type: img.pixel_type(),
            bit_depth: img.bit_depth(),
        })
    };
    Ok(match format {
        Some(FormatArg::Raw) => raw(),
        Some(f) => headered(f),
        None => match ImageFormat::from_extension(path) {
            Some(f) => f,
            None if img.pixel_type() == PixelType::HalfFloat => ImageFormat::Pfm,
            None => ImageFormat::Ppm16,
        },
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode {
            input,
            output,
            image,
            codec,
            json,
        } => {
            let img = image.read(&input)?;
            let (file, stats) = pipeline::encode(&img, &codec.params())?;
            write(&output, &file)?;
            if json {
                println!("{}", report::stats_json(&stats)?);
            } else {
                println!("{}", report::stats_summary(&stats));
            }
        }
        Command::Decode {
            input,
            output,
            format,
        } => {
            let img = pipeline::decode(&read(&input)?)?;
            let format = output_format(&img, &output, format)?;
            write(&output, &image_io::encode_image(&img, format)?)?;
        }
        Command::Verify {
            original,
            container,
            image,
        } => {
            let img = image.read(&original)?;
            pipeline::verify(&img, &read(&container)?)?;
            println!(
                "ok: {} decodes to {}",
                container.display(),
                original.display()
            );
        }
        Command::Strip { input, output } => {
            write(&output, &container::strip_extension(&read(&input)?)?)?;
        }
        Command::Inspect { input, json } => {
            let info = report::inspect(&read(&input)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&info)?);
            } else {
                print!("{}", report::inspect_text(&info));
            }
        }
        Command::Stats {
            input,
            image,
            codec,
            csv,
        } => {
            let img = image.read(&input)?;
            let (_, stats) = pipeline::encode(&img, &codec.params())?;
            if let Some(path) = csv {
                report::append_stats_csv(&path, &input, &stats)?;
            }
            println!("{}", report::stats_json(&stats)?);
        }
        Command::Sweep {
            input,
            image,
            codec,
            qualities,
            backends,
            csv,
        } => {
            let img = image.read(&input)?;
            let qualities = qualities.unwrap_or_else(pipeline::default_qualities);
            if let Some(q) = qualities.iter().find(|&&q| q > 100) {
                bail!(Error::InvalidArgument(format!(
                    "quality {q} is outside 0..=100"
                )));
            }
            let backends: Vec<BackendId> = backends
                .unwrap_or_else(|| vec![codec.backend])
                .into_iter()
                .map(Into::into)
                .collect();
            let rows = pipeline::sweep(&img, &qualities, &backends, &codec.params())?;
            match csv {
                Some(path) => report::write_sweep_csv(fs::File::create(&path)?, &rows)?,
                None => report::write_sweep_csv(std::io::stdout().lock(), &rows)?,
            }
        }
    }
    Ok(())
}

/// Exit status for a failure, chosen by the first codec error in the chain.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e.class() {
                ErrorClass::Io => 3,
                ErrorClass::Input => 4,
                ErrorClass::Codestream => 5,
                ErrorClass::Verification => 6,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("histpack: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
