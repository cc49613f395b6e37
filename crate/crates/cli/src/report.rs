//! Text, JSON and CSV renderings of codec reports.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::Result;
use histpack::base_layer::jpeg::markers::{header_segments, APP11};
use histpack::container::{self, Extension, CHUNK_TAG};
use histpack::pipeline::{StatsReport, SweepRow};
use serde::Serialize;
use serde_json::json;

pub fn stats_json(s: &StatsReport) -> Result<String> {
    let mut v = serde_json::to_value(s)?;
    let obj = v.as_object_mut().expect("struct serializes to an object");
    obj.insert("base_bpp".into(), json!(s.base_bpp()));
    obj.insert("extension_bpp".into(), json!(s.extension_bpp()));
    obj.insert("table_bpp".into(), json!(s.table_bpp()));
    obj.insert("overhead_bpp".into(), json!(s.overhead_bpp()));
    obj.insert("total_bpp".into(), json!(s.total_bpp()));
    obj.insert("table_overhead_pct".into(), json!(s.table_overhead_pct()));
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn stats_summary(s: &StatsReport) -> String {
    format!(
        "{}x{} q={} total {:.4} bpp (base {:.4}, extension {:.4}, tables {:.4}, overhead {:.4}); tables {:.3}% of file",
        s.width,
        s.height,
        s.quality,
        s.total_bpp(),
        s.base_bpp(),
        s.extension_bpp(),
        s.table_bpp(),
        s.overhead_bpp(),
        s.table_overhead_pct()
    )
}

#[derive(Serialize)]
struct StatsRow<'a> {
    input: &'a str,
    width: u32,
    height: u32,
    quality: u8,
    backend: String,
    transform: String,
    base_bytes: usize,
    plane_bytes: usize,
    table_bytes: usize,
    overhead_bytes: usize,
    total_bytes: usize,
    base_bpp: f64,
    extension_bpp: f64,
    table_bpp: f64,
    total_bpp: f64,
    table_overhead_pct: f64,
    alpha_before_0: f64,
    alpha_before_1: f64,
    alpha_before_2: f64,
    alpha_after_0: f64,
    alpha_after_1: f64,
    alpha_after_2: f64,
}

/// Appends one row, writing the header first if the file is new or empty.
pub fn append_stats_csv(path: &Path, input: &Path, s: &StatsReport) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let fresh = file.metadata()?.len() == 0;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    let before = |c: usize| s.components[c].before.alpha;
    let after = |c: usize| s.components[c].after.alpha;
    w.serialize(StatsRow {
        input: &input.to_string_lossy(),
        width: s.width,
        height: s.height,
        quality: s.quality,
        backend: format!("{:?}", s.backend),
        transform: format!("{:?}", s.transform),
        base_bytes: s.base_bytes,
        plane_bytes: s.plane_bytes,
        table_bytes: s.table_bytes,
        overhead_bytes: s.overhead_bytes,
        total_bytes: s.total_bytes,
        base_bpp: s.base_bpp(),
        extension_bpp: s.extension_bpp(),
        table_bpp: s.table_bpp(),
        total_bpp: s.total_bpp(),
        table_overhead_pct: s.table_overhead_pct(),
        alpha_before_0: before(0),
        alpha_before_1: before(1),
        alpha_before_2: before(2),
        alpha_after_0: after(0),
        alpha_after_1: after(1),
        alpha_after_2: after(2),
    })?;
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(out: impl Write, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct PartInfo {
    name: String,
    bytes: usize,
}

#[derive(Serialize)]
pub struct Inspection {
    file_bytes: usize,
    base_bytes: usize,
    chunks: usize,
    extension_bytes: usize,
    pixel_type: String,
    bit_depth: u8,
    width: u32,
    height: u32,
    quality: u8,
    transform: String,
    backend: String,
    table_compressor: String,
    image_crc: String,
    parts: Vec<PartInfo>,
}

pub fn inspect(file: &[u8]) -> Result<Inspection> {
    let payload = container::extension_payload(file)?;
    let ext = Extension::from_bytes(&payload)?;
    let chunks = header_segments(file)?
        .iter()
        .filter(|s| s.marker == APP11 && s.payload(file).starts_with(&CHUNK_TAG))
        .count();
    let base_bytes = container::strip_extension(file)?.len();
    let h = ext.header;
    let mut parts = vec![PartInfo {
        name: "curve".into(),
        bytes: ext.curve.to_bytes().len(),
    }];
    for (c, t) in ext.tables.iter().enumerate() {
        parts.push(PartInfo {
            name: format!("table{c}"),
            bytes: t.len(),
        });
    }
    for (c, p) in ext.planes.iter().enumerate() {
        parts.push(PartInfo {
            name: format!("plane{c} ({} bits/sample)", p.bits_per_sample),
            bytes: p.to_bytes().len(),
        });
    }
    Ok(Inspection {
        file_bytes: file.len(),
        base_bytes,
        chunks,
        extension_bytes: payload.len(),
        pixel_type: format!("{:?}", h.pixel_type),
        bit_depth: h.bit_depth,
        width: h.width,
        height: h.height,
        quality: h.quality,
        transform: format!("{:?}", h.transform),
        backend: format!("{:?}", h.backend),
        table_compressor: format!("{:?}", h.table_compressor),
        image_crc: format!("{:08x}", h.image_crc),
        parts,
    })
}

pub fn inspect_text(i: &Inspection) -> String {
    let mut s = format!(
        "image      {}x{} {} {}-bit\n\
         base       {} bytes, quality {}\n\
         extension  {} bytes in {} APP11 chunks\n\
         coding     {} / {} / tables {}\n\
         image crc  {}\n",
        i.width,
        i.height,
        i.pixel_type,
        i.bit_depth,
        i.base_bytes,
        i.quality,
        i.extension_bytes,
        i.chunks,
        i.transform,
        i.backend,
        i.table_compressor,
        i.image_crc,
    );
    for p in &i.parts {
        s.push_str(&format!("  {:<28} {:>10}\n", p.name, p.bytes));
    }
    s.push_str(&format!("total      {} bytes\n", i.file_bytes));
    s
}
