//! `.ratex` / `.ratexm` binary layouts. All integers are little-endian.
//!
//! `.ratex` (one texture):
//!
//! ```text
//! off  size  field
//!   0     4  magic "RTEX"
//!   4     2  version (1)
//!   6     2  flags (0)
//!   8     4  width
//!  12     4  height
//!  16     2  texture id (13 bits used)
//!  18     2  reserved (0)
//!  20     4  mcu count
//!  24     8  source entropy bits
//!  32     1  quant table mask (bit i = table i present), then 64 x u16 per table, zigzag
//!   .     1  DC huffman mask, then per table: 16 count bytes + symbols
//!   .     1  AC huffman mask, same encoding
//!   .    18  3 x component (id, h, v, quant id, dc id, ac id)
//!   .     4  index byte length
//!   .     4  entropy blob byte length
//!   .     .  index: per group u32 absolute + up to 8 x u16 relative
//!   .     .  entropy blob
//!   .     4  CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! `.ratexm` (mip chain): magic "RTXM", version u16, level count u16, then per level
//! `u64 offset, u64 length` (offsets from file start), a CRC-32 of the bytes so far,
//! then the level containers back to back.

use crate::error::{Error, Result};
use crate::jpeg::huffman::HuffmanSpec;
use crate::jpeg::parse::{CodingTables, ComponentInfo};
use crate::transcode::{
    IndexGroup, IndexTable, MipChain, RaTexture, GROUP_LEN, MAX_MCUS, MIP_LEVELS,
};

pub const TEXTURE_MAGIC: &[u8; 4] = b"RTEX";
pub const CHAIN_MAGIC: &[u8; 4] = b"RTXM";
pub const FORMAT_VERSION: u16 = 1;

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptContainer(msg.into())
}

pub fn serialize_texture(tex: &RaTexture) -> Vec<u8> {
    let mut out = Vec::with_capacity(tex.entropy_blob.len() + 1024);
    out.extend_from_slice(TEXTURE_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&tex.width.to_le_bytes());
    out.extend_from_slice(&tex.height.to_le_bytes());
    out.extend_from_slice(&tex.texture_id.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(tex.mcu_count() as u32).to_le_bytes());
    out.extend_from_slice(&tex.source_bits.to_le_bytes());
    write_tables(&mut out, &tex.tables);

    let index = serialize_index(&tex.index);
    out.extend_from_slice(&(index.len() as u32).to_le_bytes());
    out.extend_from_slice(&(tex.entropy_blob.len() as u32).to_le_bytes());
    out.extend_from_slice(&index);
    out.extend_from_slice(&tex.entropy_blob);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn write_tables(out: &mut Vec<u8>, t: &CodingTables) {
    let mask = |present: [bool; 4]| {
        present
            .iter()
            .enumerate()
            .fold(0u8, |m, (i, &p)| m | ((p as u8) << i))
    };
    out.push(mask(t.quant.each_ref().map(Option::is_some)));
    for q in t.quant.iter().flatten() {
        for v in q {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for specs in [&t.dc, &t.ac] {
        out.push(mask(specs.each_ref().map(Option::is_some)));
        for s in specs.iter().flatten() {
            out.extend_from_slice(&s.counts);
            out.extend_from_slice(&s.symbols);
        }
    }
    for c in &t.components {
        out.extend_from_slice(&[c.id, c.h, c.v, c.quant_id, c.dc_id, c.ac_id]);
    }
}

fn serialize_index(index: &IndexTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(index.bit_size() as usize / 8);
    for (g, group) in index.groups.iter().enumerate() {
        out.extend_from_slice(&group.absolute.to_le_bytes());
        for rel in &group.relative[..index.relatives_in_group(g)] {
            out.extend_from_slice(&rel.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| corrupt("truncated"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn check_crc(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 4 {
        return Err(corrupt("truncated"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(corrupt("checksum mismatch"));
    }
    Ok(body)
}

fn check_version(found: u16) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

pub fn deserialize_texture(bytes: &[u8]) -> Result<RaTexture> {
    if bytes.len() < 6 || &bytes[..4] != TEXTURE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    check_version(u16::from_le_bytes([bytes[4], bytes[5]]))?;
    let body = check_crc(bytes)?;
    let mut r = Reader { data: body, pos: 6 };
    let _flags = r.u16()?;
    let width = r.u32()?;
    let height = r.u32()?;
    let texture_id = r.u16()?;
    let _reserved = r.u16()?;
    let mcu_count = r.u32()? as usize;
    let source_bits = r.u64()?;
    if width == 0
        || height == 0
        || (width.div_ceil(16) as usize * height.div_ceil(16) as usize) != mcu_count
    {
        return Err(corrupt("dimensions disagree with MCU count"));
    }
    if mcu_count > MAX_MCUS {
        return Err(corrupt("MCU count exceeds 16-bit ids"));
    }
    let tables = read_tables(&mut r)?;
    let index_len = r.u32()? as usize;
    let blob_len = r.u32()? as usize;
    let index = read_index(r.take(index_len)?, mcu_count)?;
    let blob = r.take(blob_len)?.to_vec();
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    RaTexture::from_parts(width, height, texture_id, tables, index, blob, source_bits)
        .map_err(|e| corrupt(e.to_string()))
}

fn read_tables(r: &mut Reader<'_>) -> Result<CodingTables> {
    let mut quant = [None; 4];
    let mask = r.u8()?;
    for (i, q) in quant.iter_mut().enumerate() {
        if mask & (1 << i) != 0 {
            let mut t = [0u16; 64];
            for v in t.iter_mut() {
                *v = r.u16()?;
            }
            *q = Some(t);
        }
    }
    let mut read_specs = || -> Result<[Option<HuffmanSpec>; 4]> {
        let mut specs: [Option<HuffmanSpec>; 4] = Default::default();
        let mask = r.u8()?;
        for (i, s) in specs.iter_mut().enumerate() {
            if mask & (1 << i) != 0 {
                let counts: [u8; 16] = r.take(16)?.try_into().unwrap();
                let total = counts.iter().map(|&c| c as usize).sum();
                *s = Some(HuffmanSpec::new(counts, r.take(total)?));
            }
        }
        Ok(specs)
    };
    let dc = read_specs()?;
    let ac = read_specs()?;
    let mut components = [ComponentInfo {
        id: 0,
        h: 0,
        v: 0,
        quant_id: 0,
        dc_id: 0,
        ac_id: 0,
    }; 3];
    for c in components.iter_mut() {
        let b = r.take(6)?;
        *c = ComponentInfo {
            id: b[0],
            h: b[1],
            v: b[2],
            quant_id: b[3],
            dc_id: b[4],
            ac_id: b[5],
        };
    }
    let tables = CodingTables {
        quant,
        dc,
        ac,
        components,
    };
    tables.validate().map_err(|e| corrupt(e.to_string()))?;
    Ok(tables)
}

fn read_index(bytes: &[u8], mcu_count: usize) -> Result<IndexTable> {
    let mut r = Reader {
        data: bytes,
        pos: 0,
    };
    let n_groups = mcu_count.div_ceil(GROUP_LEN);
    let mut table = IndexTable {
        groups: Vec::with_capacity(n_groups),
        mcu_count,
    };
    for g in 0..n_groups {
        let mut group = IndexGroup {
            absolute: r.u32()?,
            ..Default::default()
        };
        for rel in group
            .relative
            .iter_mut()
            .take((mcu_count - g * GROUP_LEN).min(GROUP_LEN) - 1)
        {
            *rel = r.u16()?;
        }
        table.groups.push(group);
    }
    if r.pos != bytes.len() {
        return Err(corrupt("index length mismatch"));
    }
    Ok(table)
}

pub fn serialize_chain(chain: &MipChain) -> Vec<u8> {
    let levels: Vec<Vec<u8>> = chain.levels.iter().map(serialize_texture).collect();
    let header_len = 4 + 2 + 2 + 16 * levels.len() + 4;
    let mut out = Vec::with_capacity(header_len + levels.iter().map(Vec::len).sum::<usize>());
    out.extend_from_slice(CHAIN_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(levels.len() as u16).to_le_bytes());
    let mut offset = header_len as u64;
    for l in &levels {
        out.extend_from_slice(&offset.to_le_bytes());
        out.extend_from_slice(&(l.len() as u64).to_le_bytes());
        offset += l.len() as u64;
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    for l in levels {
        out.extend_from_slice(&l);
    }
    out
}

pub fn deserialize_chain(bytes: &[u8]) -> Result<MipChain> {
    if bytes.len() < 8 || &bytes[..4] != CHAIN_MAGIC {
        return Err(corrupt("bad magic"));
    }
    check_version(u16::from_le_bytes([bytes[4], bytes[5]]))?;
    let mut r = Reader {
        data: bytes,
        pos: 6,
    };
    let count = r.u16()? as usize;
    if count == 0 || count > MIP_LEVELS {
        return Err(corrupt(format!("{count} mip levels")));
    }
    let mut dir = Vec::with_capacity(count);
    for _ in 0..count {
        dir.push((r.u64()?, r.u64()?));
    }
    let dir_end = r.pos;
    let crc = r.u32()?;
    if crc32fast::hash(&bytes[..dir_end]) != crc {
        return Err(corrupt("directory checksum mismatch"));
    }
    let levels = dir
        .into_iter()
        .map(|(off, len)| {
            let start = usize::try_from(off).map_err(|_| corrupt("offset"))?;
            let end = start
                .checked_add(len as usize)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| corrupt("truncated level"))?;
            deserialize_texture(&bytes[start..end])
        })
        .collect::<Result<Vec<_>>>()?;
    let id = levels[0].texture_id;
    if levels.iter().any(|l| l.texture_id != id) {
        return Err(corrupt("levels disagree on texture id"));
    }
    Ok(MipChain { levels })
}
