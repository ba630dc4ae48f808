//! Baseline JFIF container parsing.

use crate::error::{malformed, unsupported, Error, Result};
use crate::jpeg::huffman::{HuffmanDecoder, HuffmanSpec};
use crate::jpeg::tables::ZIGZAG;

/// 64 quantizer entries in zigzag order, as stored in DQT.
pub type QuantTable = [u16; 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComponentInfo {
    pub id: u8,
    pub h: u8,
    pub v: u8,
    pub quant_id: u8,
    pub dc_id: u8,
    pub ac_id: u8,
}

/// Quantization and Huffman tables plus the per-component bindings of a 4:2:0 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingTables {
    pub quant: [Option<QuantTable>; 4],
    pub dc: [Option<HuffmanSpec>; 4],
    pub ac: [Option<HuffmanSpec>; 4],
    /// Y, Cb, Cr.
    pub components: [ComponentInfo; 3],
}

/// Per-component decoders and natural-order quantizers, ready for block decoding.
#[derive(Debug, Clone)]
pub struct ComponentDecoders {
    pub dc: [HuffmanDecoder; 3],
    pub ac: [HuffmanDecoder; 3],
    pub quant: [[u16; 64]; 3],
}

impl CodingTables {
    /// Checks that every component references defined, valid tables.
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.components.iter().enumerate() {
            let q = self.quant.get(c.quant_id as usize).and_then(Option::as_ref);
            let dc = self.dc.get(c.dc_id as usize).and_then(Option::as_ref);
            let ac = self.ac.get(c.ac_id as usize).and_then(Option::as_ref);
            match (q, dc, ac) {
                (Some(_), Some(dc), Some(ac)) => {
                    dc.validate()
                        .map_err(|e| malformed(format!("DC table: {e}")))?;
                    ac.validate()
                        .map_err(|e| malformed(format!("AC table: {e}")))?;
                }
                _ => {
                    return Err(malformed(format!(
                        "component {i} references an undefined table"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn decoders(&self) -> Result<ComponentDecoders> {
        self.validate()?;
        let build = |which: &[Option<HuffmanSpec>; 4], id: u8| {
            HuffmanDecoder::new(which[id as usize].as_ref().expect("validated"))
        };
        let c = &self.components;
        Ok(ComponentDecoders {
            dc: [
                build(&self.dc, c[0].dc_id)?,
                build(&self.dc, c[1].dc_id)?,
                build(&self.dc, c[2].dc_id)?,
            ],
            ac: [
                build(&self.ac, c[0].ac_id)?,
                build(&self.ac, c[1].ac_id)?,
                build(&self.ac, c[2].ac_id)?,
            ],
            quant: [
                self.quant_natural(0),
                self.quant_natural(1),
                self.quant_natural(2),
            ],
        })
    }

    /// Natural-order quantizer for component `comp` (0 = Y, 1 = Cb, 2 = Cr).
    pub fn quant_natural(&self, comp: usize) -> [u16; 64] {
        let zz = self.quant[self.components[comp].quant_id as usize].expect("validated");
        let mut out = [0u16; 64];
        for (k, &q) in zz.iter().enumerate() {
            out[ZIGZAG[k]] = q;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedJpeg {
    pub width: u32,
    pub height: u32,
    pub tables: CodingTables,
    /// Entropy-coded segment, byte stuffing intact.
    pub scan_data: Vec<u8>,
}

impl ParsedJpeg {
    pub fn mcu_cols(&self) -> u32 {
        self.width.div_ceil(16)
    }

    pub fn mcu_rows(&self) -> u32 {
        self.height.div_ceil(16)
    }

    pub fn mcu_count(&self) -> usize {
        self.mcu_cols() as usize * self.mcu_rows() as usize
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u8(&mut self) -> Result<u8> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| malformed("unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok((self.u8()? as u16) << 8 | self.u8()? as u16)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| malformed("segment runs past end of data"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn done(&self) -> bool {
        self.pos >= self.data.len()
    }
}

struct FrameHeader {
    width: u32,
    height: u32,
    components: [ComponentInfo; 3],
}

pub fn parse_jpeg(bytes: &[u8]) -> Result<ParsedJpeg> {
    if bytes.len() < 2 || bytes[0] != 0xFF || bytes[1] != 0xD8 {
        return Err(malformed("missing SOI marker"));
    }
    let mut cur = Cursor {
        data: bytes,
        pos: 2,
    };
    let mut quant: [Option<QuantTable>; 4] = [None; 4];
    let mut dc: [Option<HuffmanSpec>; 4] = Default::default();
    let mut ac: [Option<HuffmanSpec>; 4] = Default::default();
    let mut frame: Option<FrameHeader> = None;

    loop {
        let marker = next_marker(&mut cur)?;
        match marker {
            0xD8 => return Err(malformed("duplicate SOI")),
            0xD9 => return Err(malformed("EOI before any scan")),
            0x01 | 0xD0..=0xD7 => return Err(malformed("restart or TEM marker outside a scan")),
            _ => {}
        }
        let len = cur.u16()? as usize;
        if len < 2 {
            return Err(malformed("segment length below 2"));
        }
        let body = cur.take(len - 2)?;
        match marker {
            0xC0 => {
                if frame.is_some() {
                    return Err(malformed("duplicate SOF"));
                }
                frame = Some(parse_sof(body)?);
            }
            0xC1 => return Err(unsupported("extended sequential (SOF1) frames")),
            0xC2 | 0xC6 | 0xCA | 0xCE => return Err(unsupported("progressive JPEG")),
            0xC3 | 0xC7 | 0xCB | 0xCF => return Err(unsupported("lossless JPEG")),
            0xC5 => return Err(unsupported("hierarchical JPEG")),
            0xC9 | 0xCC | 0xCD => return Err(unsupported("arithmetic coding")),
            0xC4 => parse_dht(body, &mut dc, &mut ac)?,
            0xDB => parse_dqt(body, &mut quant)?,
            0xDD => {
                if body.len() != 2 {
                    return Err(malformed("DRI length"));
                }
                if body != [0, 0] {
                    return Err(unsupported("restart intervals"));
                }
            }
            0xDC => return Err(unsupported("DNL-defined height")),
            0xDA => {
                let frame = frame.ok_or_else(|| malformed("SOS before SOF"))?;
                let components = parse_sos(body, frame.components)?;
                let start = cur.pos;
                let end = scan_end(bytes, start)?;
                let scan_data = bytes[start..end].to_vec();
                cur.pos = end;
                match next_marker(&mut cur)? {
                    0xD9 => {}
                    m => {
                        return Err(unsupported(format!(
                            "marker {m:#04x} after the first scan (multi-scan files)"
                        )))
                    }
                }
                let tables = CodingTables {
                    quant,
                    dc,
                    ac,
                    components,
                };
                tables.validate()?;
                return Ok(ParsedJpeg {
                    width: frame.width,
                    height: frame.height,
                    tables,
                    scan_data,
                });
            }
            // APPn, COM and everything else with a length field is skipped.
            _ => {}
        }
        if cur.done() {
            return Err(malformed("no scan found"));
        }
    }
}

fn next_marker(cur: &mut Cursor<'_>) -> Result<u8> {
    if cur.u8()? != 0xFF {
        return Err(malformed(format!(
            "expected marker at byte {}",
            cur.pos - 1
        )));
    }
    loop {
        match cur.u8()? {
            0xFF => continue,
            0x00 => return Err(malformed("stuffed zero where a marker was expected")),
            m => return Ok(m),
        }
    }
}

fn scan_end(bytes: &[u8], start: usize) -> Result<usize> {
    let mut i = start;
    while i + 1 < bytes.len() {
        if bytes[i] == 0xFF {
            match bytes[i + 1] {
                0x00 => i += 2,
                0xD0..=0xD7 => return Err(unsupported("restart markers inside the scan")),
                _ => return Ok(i),
            }
        } else {
            i += 1;
        }
    }
    Err(malformed("scan data is not terminated by a marker"))
}

fn parse_sof(body: &[u8]) -> Result<FrameHeader> {
    let mut c = Cursor { data: body, pos: 0 };
    let precision = c.u8()?;
    let height = c.u16()? as u32;
    let width = c.u16()? as u32;
    let nf = c.u8()?;
    if precision != 8 {
        return Err(unsupported(format!("{precision}-bit sample precision")));
    }
    if height == 0 {
        return Err(unsupported("DNL-defined height"));
    }
    if width == 0 {
        return Err(malformed("zero width"));
    }
    if nf != 3 {
        return Err(unsupported(format!(
            "{nf} components (only YCbCr 4:2:0 is handled)"
        )));
    }
    let mut comps = [ComponentInfo {
        id: 0,
        h: 0,
        v: 0,
        quant_id: 0,
        dc_id: 0,
        ac_id: 0,
    }; 3];
    for comp in comps.iter_mut() {
        comp.id = c.u8()?;
        let hv = c.u8()?;
        comp.h = hv >> 4;
        comp.v = hv & 15;
        comp.quant_id = c.u8()?;
        if comp.quant_id > 3 {
            return Err(malformed("quant table id above 3"));
        }
    }
    if !c.done() {
        return Err(malformed("SOF length mismatch"));
    }
    let sampling: Vec<(u8, u8)> = comps.iter().map(|c| (c.h, c.v)).collect();
    if sampling != [(2, 2), (1, 1), (1, 1)] {
        return Err(unsupported(format!(
            "chroma sampling {sampling:?} (only 4:2:0)"
        )));
    }
    if comps[0].id == comps[1].id || comps[0].id == comps[2].id || comps[1].id == comps[2].id {
        return Err(malformed("duplicate component ids"));
    }
    Ok(FrameHeader {
        width,
        height,
        components: comps,
    })
}

fn parse_sos(body: &[u8], mut comps: [ComponentInfo; 3]) -> Result<[ComponentInfo; 3]> {
    let mut c = Cursor { data: body, pos: 0 };
    let ns = c.u8()?;
    if ns != 3 {
        return Err(unsupported("non-interleaved scans"));
    }
    for comp in comps.iter_mut() {
        let id = c.u8()?;
        if id != comp.id {
            return Err(malformed("scan component order differs from frame"));
        }
        let t = c.u8()?;
        comp.dc_id = t >> 4;
        comp.ac_id = t & 15;
        if comp.dc_id > 3 || comp.ac_id > 3 {
            return Err(malformed("huffman table id above 3"));
        }
    }
    let (ss, se, a) = (c.u8()?, c.u8()?, c.u8()?);
    if ss != 0 || se != 63 || a != 0 {
        return Err(unsupported(
            "spectral selection or successive approximation",
        ));
    }
    if !c.done() {
        return Err(malformed("SOS length mismatch"));
    }
    Ok(comps)
}

fn parse_dqt(body: &[u8], quant: &mut [Option<QuantTable>; 4]) -> Result<()> {
    let mut c = Cursor { data: body, pos: 0 };
    while !c.done() {
        let pt = c.u8()?;
        let (precision, id) = (pt >> 4, (pt & 15) as usize);
        if id > 3 {
            return Err(malformed("quant table id above 3"));
        }
        let mut table = [0u16; 64];
        for q in table.iter_mut() {
            *q = match precision {
                0 => c.u8()? as u16,
                1 => c.u16()?,
                _ => return Err(malformed("quant table precision")),
            };
            if *q == 0 {
                return Err(malformed("zero quantizer"));
            }
        }
        store_once(&mut quant[id], table, "DQT")?;
    }
    Ok(())
}

fn parse_dht(
    body: &[u8],
    dc: &mut [Option<HuffmanSpec>; 4],
    ac: &mut [Option<HuffmanSpec>; 4],
) -> Result<()> {
    let mut c = Cursor { data: body, pos: 0 };
    while !c.done() {
        let tc_th = c.u8()?;
        let (class, id) = (tc_th >> 4, (tc_th & 15) as usize);
        if class > 1 || id > 3 {
            return Err(malformed("huffman table class or id"));
        }
        let mut counts = [0u8; 16];
        for n in counts.iter_mut() {
            *n = c.u8()?;
        }
        let total: usize = counts.iter().map(|&n| n as usize).sum();
        let spec = HuffmanSpec::new(counts, c.take(total)?);
        spec.validate().map_err(|e| malformed(e.to_string()))?;
        let slot = if class == 0 { &mut dc[id] } else { &mut ac[id] };
        store_once(slot, spec, "DHT")?;
    }
    Ok(())
}

fn store_once<T: PartialEq>(slot: &mut Option<T>, value: T, what: &str) -> Result<()> {
    match slot {
        Some(existing) if *existing != value => Err(Error::MalformedStream(format!(
            "{what} redefines a table inconsistently"
        ))),
        _ => {
            *slot = Some(value);
            Ok(())
        }
    }
}
