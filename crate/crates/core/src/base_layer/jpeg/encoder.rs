use super::color::rgb_to_ycbcr;
use super::dct::forward_quantize;
use super::huffman::EncodeTable;
use super::markers::*;
use super::tables::*;
use crate::image_io::LdrImage;

// Largest magnitude the standard AC tables can code (category 10).
const AC_LIMIT: i32 = 1023;

struct EntropyWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl EntropyWriter {
    fn put(&mut self, code: u32, size: u32) {
        if size == 0 {
            return;
        }
        self.acc = (self.acc << size) | (code & ((1 << size) - 1));
        self.nbits += size;
        while self.nbits >= 8 {
            self.nbits -= 8;
            let byte = (self.acc >> self.nbits) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00);
            }
        }
        self.acc &= (1 << self.nbits) - 1;
    }

    /// Pads the final byte with one bits.
    fn flush(&mut self) {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad);
        }
    }
}

fn category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

fn put_value(w: &mut EntropyWriter, table: &EncodeTable, symbol: u8, v: i32, size: u32) {
    let (code, len) = table.get(symbol);
    w.put(u32::from(code), u32::from(len));
    let bits = if v < 0 { v - 1 } else { v };
    w.put(bits as u32, size);
}

fn encode_block(
    w: &mut EntropyWriter,
    coef: &[i32; 64],
    pred: &mut i32,
    dc: &EncodeTable,
    ac: &EncodeTable,
) {
    let diff = coef[0] - *pred;
    *pred = coef[0];
    let s = category(diff);
    put_value(w, dc, s as u8, diff, s);

    let mut run = 0;
    for &z in &ZIGZAG[1..] {
        let v = coef[z].clamp(-AC_LIMIT, AC_LIMIT);
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let (code, len) = ac.get(0xF0);
            w.put(u32::from(code), u32::from(len));
            run -= 16;
        }
        let s = category(v);
        put_value(w, ac, ((run << 4) | s) as u8, v, s);
        run = 0;
    }
    if run > 0 {
        let (code, len) = ac.get(0x00);
        w.put(u32::from(code), u32::from(len));
    }
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn write_headers(out: &mut Vec<u8>, width: u16, height: u16, quant: &[[u16; 64]; 2]) {
    out.extend_from_slice(&[0xFF, SOI]);
    segment(out, APP0, b"JFIF\0\x01\x01\x00\x00\x01\x00\x01\x00\x00");

    let mut dqt = Vec::with_capacity(130);
    for (id, table) in quant.iter().enumerate() {
        dqt.push(id as u8);
        dqt.extend(ZIGZAG.iter().map(|&z| table[z] as u8));
    }
    segment(out, DQT, &dqt);

    let mut sof = vec![8];
    sof.extend_from_slice(&height.to_be_bytes());
    sof.extend_from_slice(&width.to_be_bytes());
    sof.extend_from_slice(&[3, 1, 0x11, 0, 2, 0x11, 1, 3, 0x11, 1]);
    segment(out, SOF0, &sof);

    let mut dht = Vec::new();
    for (class_id, bits, values) in [
        (0x00u8, &DC_LUMA_BITS, &DC_VALUES[..]),
        (0x10, &AC_LUMA_BITS, &AC_LUMA_VALUES[..]),
        (0x01, &DC_CHROMA_BITS, &DC_VALUES[..]),
        (0x11, &AC_CHROMA_BITS, &AC_CHROMA_VALUES[..]),
    ] {
        dht.push(class_id);
        dht.extend_from_slice(bits);
        dht.extend_from_slice(values);
    }
    segment(out, DHT, &dht);

    segment(out, SOS, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);
}

pub(super) fn encode(ldr: &LdrImage, quality: u8) -> Vec<u8> {
    let w = ldr.width() as usize;
    let h = ldr.height() as usize;
    let n = w * h;

    let mut ycc = [vec![0u8; n], vec![0u8; n], vec![0u8; n]];
    for i in 0..n {
        let (y, cb, cr) = rgb_to_ycbcr(ldr.plane(0)[i], ldr.plane(1)[i], ldr.plane(2)[i]);
        ycc[0][i] = y;
        ycc[1][i] = cb;
        ycc[2][i] = cr;
    }

    let quant = [
        scaled_quant(&LUMA_QUANT, quality),
        scaled_quant(&CHROMA_QUANT, quality),
    ];
    let dc = [
        EncodeTable::new(&DC_LUMA_BITS, &DC_VALUES),
        EncodeTable::new(&DC_CHROMA_BITS, &DC_VALUES),
    ];
    let ac = [
        EncodeTable::new(&AC_LUMA_BITS, &AC_LUMA_VALUES),
        EncodeTable::new(&AC_CHROMA_BITS, &AC_CHROMA_VALUES),
    ];

    let mut out = Vec::with_capacity(n / 2 + 1024);
    write_headers(&mut out, w as u16, h as u16, &quant);

    let mut ew = EntropyWriter {
        out,
        acc: 0,
        nbits: 0,
    };
    let mut preds = [0i32; 3];
    let mut block = [0i32; 64];
    for by in (0..h).step_by(8) {
        for bx in (0..w).step_by(8) {
            for c in 0..3 {
                for y in 0..8 {
                    let sy = (by + y).min(h - 1);
                    for x in 0..8 {
                        let sx = (bx + x).min(w - 1);
                        block[y * 8 + x] = i32::from(ycc[c][sy * w + sx]) - 128;
                    }
                }
                let t = usize::from(c > 0);
                let coef = forward_quantize(&block, &quant[t]);
                encode_block(&mut ew, &coef, &mut preds[c], &dc[t], &ac[t]);
            }
        }
    }
    ew.flush();
    let mut out = ew.out;
    out.extend_from_slice(&[0xFF, EOI]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories() {
        assert_eq!(category(0), 0);
        assert_eq!(category(1), 1);
        assert_eq!(category(-1), 1);
        assert_eq!(category(-3), 2);
        assert_eq!(category(1023), 10);
        assert_eq!(category(-2047), 11);
    }

    #[test]
    fn stuffs_ff_bytes() {
        let mut w = EntropyWriter {
            out: Vec::new(),
            acc: 0,
            nbits: 0,
        };
        w.put(0xFF, 8);
        w.put(0b1, 1);
        w.flush();
        assert_eq!(w.out, [0xFF, 0x00, 0xFF, 0x00]);
    }

    #[test]
    fn segment_order() {
        let img = LdrImage::new(1, 1, [vec![1], vec![2], vec![3]]).unwrap();
        let bytes = encode(&img, 80);
        let segs = header_segments(&bytes).unwrap();
        let order: Vec<u8> = segs.iter().map(|s| s.marker).collect();
        assert_eq!(order, [APP0, DQT, SOF0, DHT, SOS]);
    }
}
