//! Deliberately plain baseline JPEG decoder used as a test oracle. It
//! builds Huffman codes by canonical enumeration, decodes bit by bit, and
//! evaluates the inverse transform as a direct quadruple sum over the
//! codec's published integer basis. APPn and COM segments are skipped, as
//! any legacy reader would.

use std::collections::HashMap;

use histpack::base_layer::jpeg::tables::DCT_BASIS;
use histpack::image_io::LdrImage;

fn zigzag_order() -> [usize; 64] {
    let mut order = [0; 64];
    let mut k = 0;
    for s in 0..15usize {
        let cells: Vec<(usize, usize)> = (0..=s)
            .filter(|&i| i < 8 && s - i < 8)
            .map(|i| (i, s - i))
            .collect();
        // odd diagonals run top-right to bottom-left
        let iter: Box<dyn Iterator<Item = &(usize, usize)>> = if s % 2 == 0 {
            Box::new(cells.iter().rev())
        } else {
            Box::new(cells.iter())
        };
        for &(row, col) in iter {
            order[k] = row * 8 + col;
            k += 1;
        }
    }
    order
}

type Huff = HashMap<(u8, u16), u8>;

fn canonical(bits: &[u8], values: &[u8]) -> Huff {
    let mut map = HashMap::new();
    let mut code = 0u16;
    let mut v = 0;
    for len in 1..=16u8 {
        for _ in 0..bits[len as usize - 1] {
            map.insert((len, code), values[v]);
            v += 1;
            code += 1;
        }
        code <<= 1;
    }
    map
}

struct Bits<'a> {
    data: &'a [u8],
    pos: usize,
    byte: u8,
    left: u8,
}

impl Bits<'_> {
    fn bit(&mut self) -> Result<u16, String> {
        if self.left == 0 {
            let b = *self.data.get(self.pos).ok_or("scan truncated")?;
            if b == 0xFF {
                match self.data.get(self.pos + 1) {
                    Some(0x00) => self.pos += 1,
                    _ => return Err("marker inside entropy data".into()),
                }
            }
            self.pos += 1;
            self.byte = b;
            self.left = 8;
        }
        self.left -= 1;
        Ok(u16::from(self.byte >> self.left & 1))
    }

    fn bits(&mut self, n: u8) -> Result<i32, String> {
        let mut v = 0;
        for _ in 0..n {
            v = v << 1 | i32::from(self.bit()?);
        }
        Ok(v)
    }

    fn symbol(&mut self, h: &Huff) -> Result<u8, String> {
        let mut code = 0u16;
        for len in 1..=16u8 {
            code = code << 1 | self.bit()?;
            if let Some(&s) = h.get(&(len, code)) {
                return Ok(s);
            }
        }
        Err("bad huffman code".into())
    }

    fn restart(&mut self, n: u16) -> Result<(), String> {
        self.left = 0;
        let expect = 0xD0 + (n % 8) as u8;
        if self.data.get(self.pos) != Some(&0xFF) || self.data.get(self.pos + 1) != Some(&expect) {
            return Err("missing restart marker".into());
        }
        self.pos += 2;
        Ok(())
    }
}

fn extend(v: i32, s: u8) -> i32 {
    if s == 0 {
        0
    } else if v < 1 << (s - 1) {
        v - (1 << s) + 1
    } else {
        v
    }
}

fn idct(coef: &[i32; 64]) -> [u8; 64] {
    let mut out = [0u8; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut sum = 0i64;
            for v in 0..8 {
                for u in 0..8 {
                    sum += DCT_BASIS[x][u] * DCT_BASIS[y][v] * i64::from(coef[v * 8 + u]);
                }
            }
            out[y * 8 + x] = (((sum + (1 << 27)) >> 28) + 128).clamp(0, 255) as u8;
        }
    }
    out
}

fn to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let (y, cb, cr) = (i32::from(y), i32::from(cb) - 128, i32::from(cr) - 128);
    [
        y + ((91881 * cr + 32768) >> 16),
        y + ((-22554 * cb - 46802 * cr + 32768) >> 16),
        y + ((116130 * cb + 32768) >> 16),
    ]
    .map(|v| v.clamp(0, 255) as u8)
}

pub fn decode(data: &[u8]) -> Result<LdrImage, String> {
    let zz = zigzag_order();
    let mut qt: HashMap<u8, [i32; 64]> = HashMap::new();
    let mut dc: HashMap<u8, Huff> = HashMap::new();
    let mut ac: HashMap<u8, Huff> = HashMap::new();
    let mut frame: Option<(usize, usize, Vec<(u8, u8)>)> = None;
    let mut restart_interval = 0u16;
    let sos: &[u8];
    let mut i = 2;
    if data.get(..2) != Some(&[0xFF, 0xD8]) {
        return Err("no SOI".into());
    }
    loop {
        let seg = data.get(i..i + 4).ok_or("truncated header")?;
        if seg[0] != 0xFF {
            return Err("expected marker".into());
        }
        let m = seg[1];
        let len = usize::from(seg[2]) << 8 | usize::from(seg[3]);
        let p = data.get(i + 4..i + 2 + len).ok_or("truncated segment")?;
        i += 2 + len;
        match m {
            0xDB => {
                for t in p.chunks(65) {
                    let mut q = [0; 64];
                    for k in 0..64 {
                        q[zz[k]] = i32::from(t[1 + k]);
                    }
                    qt.insert(t[0] & 15, q);
                }
            }
            0xC4 => {
                let mut r = p;
                while !r.is_empty() {
                    let (class, id) = (r[0] >> 4, r[0] & 15);
                    let bits = &r[1..17];
                    let n: usize = bits.iter().map(|&b| usize::from(b)).sum();
                    let h = canonical(bits, &r[17..17 + n]);
                    if class == 0 {
                        dc.insert(id, h)
                    } else {
                        ac.insert(id, h)
                    };
                    r = &r[17 + n..];
                }
            }
            0xC0 => {
                let h = usize::from(p[1]) << 8 | usize::from(p[2]);
                let w = usize::from(p[3]) << 8 | usize::from(p[4]);
                let comps = (0..usize::from(p[5]))
                    .map(|c| (p[6 + 3 * c], p[8 + 3 * c]))
                    .collect();
                frame = Some((w, h, comps));
            }
            0xDD => restart_interval = u16::from(p[0]) << 8 | u16::from(p[1]),
            0xDA => {
                sos = p;
                break;
            }
            0xE0..=0xEF | 0xFE => {}
            _ => return Err(format!("unexpected marker {m:02X}")),
        }
    }
    let (w, h, comps) = frame.ok_or("no frame")?;
    let selectors: Vec<(u8, u8)> = (0..usize::from(sos[0]))
        .map(|c| (sos[2 + 2 * c] >> 4, sos[2 + 2 * c] & 15))
        .collect();

    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    let mut planes = vec![vec![0u8; w * h]; 3];
    let mut bits = Bits {
        data,
        pos: i,
        byte: 0,
        left: 0,
    };
    let mut pred = [0i32; 3];
    let mut mcu = 0u32;
    let mut restarts = 0u16;
    for by in 0..bh {
        for bx in 0..bw {
            if restart_interval > 0 && mcu > 0 && mcu % u32::from(restart_interval) == 0 {
                bits.restart(restarts)?;
                restarts += 1;
                pred = [0; 3];
            }
            mcu += 1;
            for c in 0..3 {
                let (td, ta) = selectors[c];
                let q = qt.get(&comps[c].1).ok_or("missing quant table")?;
                let s = bits.symbol(dc.get(&td).ok_or("missing dc table")?)?;
                pred[c] += extend(bits.bits(s)?, s);
                let mut zcoef = [0i32; 64];
                zcoef[0] = pred[c];
                let mut k = 1;
                while k < 64 {
                    let rs = bits.symbol(ac.get(&ta).ok_or("missing ac table")?)?;
                    let (run, size) = (rs >> 4, rs & 15);
                    if size == 0 {
                        if run == 15 {
                            k += 16;
                            continue;
                        }
                        break;
                    }
                    k += usize::from(run);
                    if k > 63 {
                        return Err("coefficient overrun".into());
                    }
                    zcoef[k] = extend(bits.bits(size)?, size);
                    k += 1;
                }
                let mut coef = [0i32; 64];
                for k in 0..64 {
                    coef[zz[k]] = zcoef[k] * q[zz[k]];
                }
                let px = idct(&coef);
                for y in 0..8 {
                    for x in 0..8 {
                        let (gx, gy) = (bx * 8 + x, by * 8 + y);
                        if gx < w && gy < h {
                            planes[c][gy * w + gx] = px[y * 8 + x];
                        }
                    }
                }
            }
        }
    }
    let mut rgb: [Vec<u8>; 3] = Default::default();
    for p in 0..w * h {
        let v = to_rgb(planes[0][p], planes[1][p], planes[2][p]);
        for c in 0..3 {
            rgb[c].push(v[c]);
        }
    }
    LdrImage::new(w as u32, h as u32, rgb).map_err(|e| e.to_string())
}
