use super::color::ycbcr_to_rgb;
use super::dct;
use super::huffman::DecodeTable;
use super::markers::*;
use super::tables::ZIGZAG;
use crate::error::{Error, Result};
use crate::image_io::LdrImage;

const WHAT: &str = "jpeg";

#[derive(Debug, Clone, Copy)]
struct Component {
    id: u8,
    quant: usize,
    dc: usize,
    ac: usize,
}

#[derive(Default)]
struct Tables {
    quant: [Option<[u16; 64]>; 4],
    dc: [Option<DecodeTable>; 4],
    ac: [Option<DecodeTable>; 4],
}

fn parse_dqt(p: &[u8], tables: &mut Tables) -> Result<()> {
    let mut i = 0;
    while i < p.len() {
        let (precision, id) = (p[i] >> 4, (p[i] & 15) as usize);
        if precision != 0 || id > 3 {
            return Err(Error::corrupt(
                WHAT,
                "only 8-bit quantization tables 0..=3 are supported",
            ));
        }
        let body = p
            .get(i + 1..i + 65)
            .ok_or(Error::Truncated("DQT segment"))?;
        let mut table = [0u16; 64];
        for (k, &z) in ZIGZAG.iter().enumerate() {
            table[z] = u16::from(body[k]);
        }
        if table.contains(&0) {
            return Err(Error::corrupt(WHAT, "zero quantizer"));
        }
        tables.quant[id] = Some(table);
        i += 65;
    }
    Ok(())
}

fn parse_dht(p: &[u8], tables: &mut Tables) -> Result<()> {
    let mut i = 0;
    while i < p.len() {
        let (class, id) = (p[i] >> 4, (p[i] & 15) as usize);
        if class > 1 || id > 3 {
            return Err(Error::corrupt(WHAT, "bad huffman table class or id"));
        }
        let bits: [u8; 16] = p
            .get(i + 1..i + 17)
            .ok_or(Error::Truncated("DHT segment"))?
            .try_into()
            .expect("16 bytes");
        let count: usize = bits.iter().map(|&b| b as usize).sum();
        let values = p
            .get(i + 17..i + 17 + count)
            .ok_or(Error::Truncated("DHT segment"))?;
        let table = DecodeTable::new(&bits, values)?;
        if class == 0 {
            tables.dc[id] = Some(table);
        } else {
            tables.ac[id] = Some(table);
        }
        i += 17 + count;
    }
    Ok(())
}

struct Frame {
    width: usize,
    height: usize,
    components: [Component; 3],
}

fn parse_sof(p: &[u8]) -> Result<Frame> {
    if p.len() != 15 {
        return Err(Error::corrupt(
            WHAT,
            "SOF0 must describe exactly three components",
        ));
    }
    if p[0] != 8 {
        return Err(Error::corrupt(WHAT, "sample precision must be 8"));
    }
    let height = usize::from(u16::from_be_bytes([p[1], p[2]]));
    let width = usize::from(u16::from_be_bytes([p[3], p[4]]));
    if width == 0 || height == 0 || p[5] != 3 {
        return Err(Error::corrupt(WHAT, "unsupported frame geometry"));
    }
    let mut components = [Component {
        id: 0,
        quant: 0,
        dc: 0,
        ac: 0,
    }; 3];
    for (c, comp) in components.iter_mut().enumerate() {
        let s = &p[6 + 3 * c..9 + 3 * c];
        if s[1] != 0x11 {
            return Err(Error::corrupt(WHAT, "only 4:4:4 sampling is supported"));
        }
        if s[2] > 3 {
            return Err(Error::corrupt(WHAT, "bad quantization table id"));
        }
        comp.id = s[0];
        comp.quant = usize::from(s[2]);
    }
    Ok(Frame {
        width,
        height,
        components,
    })
}

fn parse_sos(p: &[u8], frame: &mut Frame) -> Result<()> {
    if p.len() != 10 || p[0] != 3 {
        return Err(Error::corrupt(
            WHAT,
            "scan must be interleaved over three components",
        ));
    }
    for (c, comp) in frame.components.iter_mut().enumerate() {
        let (id, tables) = (p[1 + 2 * c], p[2 + 2 * c]);
        if id != comp.id {
            return Err(Error::corrupt(
                WHAT,
                "scan component order differs from frame",
            ));
        }
        comp.dc = usize::from(tables >> 4);
        comp.ac = usize::from(tables & 15);
        if comp.dc > 3 || comp.ac > 3 {
            return Err(Error::corrupt(WHAT, "bad huffman table selector"));
        }
    }
    if p[7] != 0 || p[8] != 63 || p[9] != 0 {
        return Err(Error::corrupt(WHAT, "not a sequential baseline scan"));
    }
    Ok(())
}

/// Bit reader over entropy-coded data. Stuffed 0xFF00 pairs yield 0xFF;
/// any other marker ends the data, and reading past it is an error.
struct EntropyReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u32,
    nbits: u32,
}

impl<'a> EntropyReader<'a> {
    fn bit(&mut self) -> Result<u32> {
        if self.nbits == 0 {
            let b = *self
                .data
                .get(self.pos)
                .ok_or(Error::Truncated("entropy-coded data"))?;
            if b == 0xFF {
                match self.data.get(self.pos + 1) {
                    Some(0x00) => self.pos += 2,
                    _ => return Err(Error::Truncated("entropy-coded data")),
                }
            } else {
                self.pos += 1;
            }
            self.acc = u32::from(b);
            self.nbits = 8;
        }
        self.nbits -= 1;
        Ok((self.acc >> self.nbits) & 1)
    }

    fn bits(&mut self, count: u32) -> Result<u32> {
        let mut v = 0;
        for _ in 0..count {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    fn receive_extend(&mut self, size: u32) -> Result<i32> {
        if size == 0 {
            return Ok(0);
        }
        let v = self.bits(size)? as i32;
        Ok(if v < 1 << (size - 1) {
            v - (1 << size) + 1
        } else {
            v
        })
    }

    /// Consumes an RSTn marker at a restart boundary.
    fn restart(&mut self, expected: u8) -> Result<()> {
        self.nbits = 0;
        match self.data.get(self.pos..self.pos + 2) {
            Some([0xFF, m]) if *m == RST0 + expected => {
                self.pos += 2;
                Ok(())
            }
            _ => Err(Error::corrupt(WHAT, "missing restart marker")),
        }
    }
}

/// Length of the entropy-coded segment starting at `data[0]`: up to the
/// first marker that is neither a stuffed 0xFF00 nor RSTn.
fn scan_length(data: &[u8]) -> usize {
    let mut i = 0;
    while i + 1 < data.len() {
        if data[i] == 0xFF {
            let m = data[i + 1];
            if m != 0x00 && !(RST0..=RST7).contains(&m) {
                return i;
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    data.len()
}

fn decode_block(
    r: &mut EntropyReader,
    dc: &DecodeTable,
    ac: &DecodeTable,
    pred: &mut i32,
    quant: &[u16; 64],
) -> Result<[u8; 64]> {
    let mut coef = [0i32; 64];
    let t = u32::from(dc.decode(|| r.bit())?);
    if t > 11 {
        return Err(Error::corrupt(WHAT, "DC difference category above 11"));
    }
    *pred += r.receive_extend(t)?;
    coef[0] = *pred * i32::from(quant[0]);

    let mut k = 1;
    while k < 64 {
        let rs = ac.decode(|| r.bit())?;
        let (run, size) = (usize::from(rs >> 4), u32::from(rs & 15));
        if size == 0 {
            if run != 15 {
                break;
            }
            k += 16;
            continue;
        }
        if size > 10 {
            return Err(Error::corrupt(WHAT, "AC category above 10"));
        }
        k += run;
        if k > 63 {
            return Err(Error::corrupt(WHAT, "coefficient index past 63"));
        }
        let z = ZIGZAG[k];
        coef[z] = r.receive_extend(size)? * i32::from(quant[z]);
        k += 1;
    }
    if k > 64 {
        return Err(Error::corrupt(WHAT, "zero run past end of block"));
    }
    Ok(dct::inverse(&coef))
}

pub(super) fn decode(data: &[u8]) -> Result<LdrImage> {
    let segments = header_segments(data)?;
    let mut tables = Tables::default();
    let mut frame: Option<Frame> = None;
    let mut restart_interval = 0usize;

    for seg in &segments {
        let p = seg.payload(data);
        match seg.marker {
            DQT => parse_dqt(p, &mut tables)?,
            DHT => parse_dht(p, &mut tables)?,
            SOF0 => {
                if frame.is_some() {
                    return Err(Error::corrupt(WHAT, "duplicate SOF"));
                }
                frame = Some(parse_sof(p)?);
            }
            DRI => {
                if p.len() != 2 {
                    return Err(Error::corrupt(WHAT, "bad DRI length"));
                }
                restart_interval = usize::from(u16::from_be_bytes([p[0], p[1]]));
            }
            SOS => {}
            0xE0..=0xEF | COM => {}
            0xC1..=0xCF => {
                return Err(Error::Unsupported {
                    what: "jpeg frame type",
                    id: seg.marker,
                })
            }
            m => return Err(Error::corrupt(WHAT, format!("unexpected marker 0x{m:02X}"))),
        }
    }
    let mut frame = frame.ok_or_else(|| Error::corrupt(WHAT, "no SOF0 before SOS"))?;
    let sos = segments.last().expect("walker ends at SOS");
    parse_sos(sos.payload(data), &mut frame)?;

    let mut quants = [[0u16; 64]; 3];
    let mut dcs = Vec::with_capacity(3);
    let mut acs = Vec::with_capacity(3);
    for (c, comp) in frame.components.iter().enumerate() {
        quants[c] = tables.quant[comp.quant]
            .ok_or_else(|| Error::corrupt(WHAT, "missing quantization table"))?;
        dcs.push(
            tables.dc[comp.dc]
                .as_ref()
                .ok_or_else(|| Error::corrupt(WHAT, "missing DC table"))?,
        );
        acs.push(
            tables.ac[comp.ac]
                .as_ref()
                .ok_or_else(|| Error::corrupt(WHAT, "missing AC table"))?,
        );
    }

    let scan = &data[sos.end..];
    let scan_len = scan_length(scan);
    let (w, h) = (frame.width, frame.height);
    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    let mcus = bw * bh;
    // Every block needs at least one DC and one AC code bit.
    if scan_len.saturating_mul(8) < mcus * 6 {
        return Err(Error::Truncated("entropy-coded data"));
    }
    let rest = &scan[scan_len..];
    if rest.len() < 2 || rest[..2] != [0xFF, EOI] {
        return Err(Error::corrupt(
            WHAT,
            "entropy-coded data not followed by EOI",
        ));
    }

    let n = w * h;
    let mut ycc = [vec![0u8; n], vec![0u8; n], vec![0u8; n]];
    let mut reader = EntropyReader {
        data: &scan[..scan_len],
        pos: 0,
        acc: 0,
        nbits: 0,
    };
    let mut preds = [0i32; 3];
    let mut next_rst = 0u8;
    for mcu in 0..mcus {
        if restart_interval > 0 && mcu > 0 && mcu % restart_interval == 0 {
            reader.restart(next_rst)?;
            next_rst = (next_rst + 1) & 7;
            preds = [0; 3];
        }
        let (bx, by) = ((mcu % bw) * 8, (mcu / bw) * 8);
        for c in 0..3 {
            let block = decode_block(&mut reader, dcs[c], acs[c], &mut preds[c], &quants[c])?;
            for y in 0..8.min(h - by) {
                let row = (by + y) * w + bx;
                let cols = 8.min(w - bx);
                ycc[c][row..row + cols].copy_from_slice(&block[y * 8..y * 8 + cols]);
            }
        }
    }

    let mut rgb = [vec![0u8; n], vec![0u8; n], vec![0u8; n]];
    for i in 0..n {
        let (r, g, b) = ycbcr_to_rgb(ycc[0][i], ycc[1][i], ycc[2][i]);
        rgb[0][i] = r;
        rgb[1][i] = g;
        rgb[2][i] = b;
    }
    LdrImage::new(w as u32, h as u32, rgb)
}

#[cfg(test)]
mod tests {
    use super::super::encoder;
    use super::*;

    fn sample() -> Vec<u8> {
        let n = 20 * 11;
        let planes =
            std::array::from_fn(|c| (0..n).map(|i| ((i * (c + 3) * 7) % 256) as u8).collect());
        encoder::encode(&LdrImage::new(20, 11, planes).unwrap(), 60)
    }

    #[test]
    fn ignores_application_segments() {
        let bytes = sample();
        let reference = decode(&bytes).unwrap();
        let mut with_app = bytes[..2].to_vec();
        with_app.extend_from_slice(&[0xFF, APP11, 0x00, 0x06, b'a', b'b', b'c', b'd']);
        with_app.extend_from_slice(&[0xFF, COM, 0x00, 0x03, b'x']);
        with_app.extend_from_slice(&bytes[2..]);
        assert_eq!(decode(&with_app).unwrap(), reference);
    }

    #[test]
    fn truncation_is_an_error() {
        let bytes = sample();
        for cut in 0..bytes.len() - 1 {
            assert!(decode(&bytes[..cut]).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn tolerates_trailing_bytes_after_eoi() {
        let mut bytes = sample();
        let reference = decode(&bytes).unwrap();
        bytes.extend_from_slice(b"junk");
        assert_eq!(decode(&bytes).unwrap(), reference);
    }

    #[test]
    fn rejects_progressive_frames() {
        let mut bytes = sample();
        let segs = header_segments(&bytes).unwrap();
        let sof = segs.iter().find(|s| s.marker == SOF0).unwrap();
        bytes[sof.start + 1] = 0xC2;
        assert!(matches!(decode(&bytes), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn restart_interval_without_markers_is_rejected() {
        let bytes = sample();
        let mut with_dri = bytes[..2].to_vec();
        with_dri.extend_from_slice(&[0xFF, DRI, 0x00, 0x04, 0x00, 0x00]);
        with_dri.extend_from_slice(&bytes[2..]);
        assert!(decode(&with_dri).is_ok());
        with_dri[7] = 1;
        assert!(decode(&with_dri).is_err());
    }
}
