//! Conversion of baseline JPEG scans into the random-access texture container.
//!
//! Each MCU becomes a byte-aligned segment:
//!
//! ```text
//! | Y1 DC (12) | Cb DC (12) | Cr DC (12) | Y1 ACs | Y2 DC-diff+ACs | Y3 .. | Y4 .. | Cb ACs | Cr ACs | 1-pad |
//! ```
//!
//! The three DCs whose JPEG predictors reach into the previous MCU are stored as
//! absolute 12-bit two's-complement values; every other bit is copied verbatim from
//! the source scan. Segments are addressed through an [`IndexTable`].

pub mod format;
pub mod index;
pub mod mip;
pub mod overhead;

pub use format::{deserialize_chain, deserialize_texture, serialize_chain, serialize_texture};
pub use index::{IndexGroup, IndexTable, GROUP_LEN};
pub use mip::{build_mip_chain, build_mip_chain_from_jpeg, mip_dims, MipChain, MIP_LEVELS};
pub use overhead::{compute_overhead, OverheadReport};

use crate::error::{malformed, Error, Result};
use crate::jpeg::bits::{unstuff, BitReader, BitWriter};
use crate::jpeg::huffman::HuffmanDecoder;
use crate::jpeg::parse::{CodingTables, ComponentDecoders, ParsedJpeg};
use crate::jpeg::scan::{extend, DC_MAX, DC_MIN, DU_COMPONENT, MAX_AC_SIZE, MAX_DC_SIZE};

/// Bits of the absolute DC header at the start of each segment.
pub const DC_HEADER_BITS: u32 = 36;
pub const MAX_TEXTURE_ID: u16 = (1 << 13) - 1;
pub const MAX_MCUS: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct RaTexture {
    pub width: u32,
    pub height: u32,
    pub mcu_cols: u32,
    pub mcu_rows: u32,
    pub texture_id: u16,
    pub tables: CodingTables,
    pub index: IndexTable,
    pub entropy_blob: Vec<u8>,
    /// Bits the source JPEG spent on MCU data (unstuffed, final fill bits excluded).
    pub source_bits: u64,
    decoders: ComponentDecoders,
}

impl PartialEq for RaTexture {
    fn eq(&self, o: &Self) -> bool {
        self.width == o.width
            && self.height == o.height
            && self.mcu_cols == o.mcu_cols
            && self.mcu_rows == o.mcu_rows
            && self.texture_id == o.texture_id
            && self.tables == o.tables
            && self.index == o.index
            && self.entropy_blob == o.entropy_blob
            && self.source_bits == o.source_bits
    }
}

impl RaTexture {
    /// Assembles a texture from parts, checking the container invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        width: u32,
        height: u32,
        texture_id: u16,
        tables: CodingTables,
        index: IndexTable,
        entropy_blob: Vec<u8>,
        source_bits: u64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("zero-sized texture".into()));
        }
        if texture_id > MAX_TEXTURE_ID {
            return Err(Error::InvalidArgument(format!(
                "texture id {texture_id} exceeds 13 bits"
            )));
        }
        let (mcu_cols, mcu_rows) = (width.div_ceil(16), height.div_ceil(16));
        let n = mcu_cols as usize * mcu_rows as usize;
        if n > MAX_MCUS {
            return Err(Error::TooManyMcus(n));
        }
        if index.mcu_count != n || index.groups.len() != n.div_ceil(GROUP_LEN) {
            return Err(Error::InvalidArgument(format!(
                "index covers {} MCUs, texture has {n}",
                index.mcu_count
            )));
        }
        let mut prev: Option<u32> = None;
        for m in 0..n {
            let off = index.offset(m);
            if off as usize >= entropy_blob.len() || prev.is_some_and(|p| off <= p) {
                return Err(Error::InvalidArgument(format!(
                    "offset of MCU {m} is out of order or out of bounds"
                )));
            }
            prev = Some(off);
        }
        let decoders = tables.decoders()?;
        Ok(Self {
            width,
            height,
            mcu_cols,
            mcu_rows,
            texture_id,
            tables,
            index,
            entropy_blob,
            source_bits,
            decoders,
        })
    }

    pub fn mcu_count(&self) -> usize {
        self.index.mcu_count
    }

    pub fn decoders(&self) -> &ComponentDecoders {
        &self.decoders
    }

    /// Bytes of MCU `m`'s segment, padding included.
    pub fn segment(&self, m: usize) -> &[u8] {
        let start = self.index.offset(m) as usize;
        let end = if m + 1 < self.mcu_count() {
            self.index.offset(m + 1) as usize
        } else {
            self.entropy_blob.len()
        };
        &self.entropy_blob[start..end]
    }
}

/// Bit spans of one data unit inside the (unstuffed) source scan.
struct DuSpan {
    dc_start: u64,
    ac_start: u64,
    end: u64,
    dc_diff: i32,
}

fn walk_du(r: &mut BitReader<'_>, dc: &HuffmanDecoder, ac: &HuffmanDecoder) -> Result<DuSpan> {
    let dc_start = r.position();
    let size = dc.next_symbol_sequential(r)?;
    if size > MAX_DC_SIZE {
        return Err(malformed(format!("DC magnitude category {size}")));
    }
    let dc_diff = extend(r.read_bits(size as u32)?, size);
    let ac_start = r.position();
    let mut k = 1usize;
    while k < 64 {
        let rs = ac.next_symbol_sequential(r)?;
        let (run, size) = ((rs >> 4) as usize, rs & 15);
        if size == 0 {
            if run == 15 {
                k += 16;
                if k > 64 {
                    return Err(malformed("zero run past coefficient 63"));
                }
                continue;
            }
            break;
        }
        k += run;
        if k > 63 || size > MAX_AC_SIZE {
            return Err(malformed("AC coefficient out of range"));
        }
        r.consume(size as u32)?;
        k += 1;
    }
    Ok(DuSpan {
        dc_start,
        ac_start,
        end: r.position(),
        dc_diff,
    })
}

#[inline]
fn write_dc12(w: &mut BitWriter, v: i32) {
    w.write_bits((v as u32) & 0xFFF, 12);
}

/// Re-encodes a parsed JPEG into a random-access texture.
pub fn transcode(parsed: &ParsedJpeg, texture_id: u16) -> Result<RaTexture> {
    let n = parsed.mcu_count();
    if n > MAX_MCUS {
        return Err(Error::TooManyMcus(n));
    }
    if texture_id > MAX_TEXTURE_ID {
        return Err(Error::InvalidArgument(format!(
            "texture id {texture_id} exceeds 13 bits"
        )));
    }
    let decs = parsed.tables.decoders()?;
    let plain = unstuff(&parsed.scan_data);
    let mut r = BitReader::plain(&plain);
    let mut w = BitWriter::plain();
    let mut offsets = Vec::with_capacity(n);
    let mut pred = [0i32; 3];

    for m in 0..n {
        let spans: Vec<DuSpan> = (0..6)
            .map(|du| {
                let c = DU_COMPONENT[du];
                walk_du(&mut r, &decs.dc[c], &decs.ac[c])
            })
            .collect::<Result<_>>()?;
        let mut abs = [0i32; 6];
        for (du, s) in spans.iter().enumerate() {
            let c = DU_COMPONENT[du];
            pred[c] += s.dc_diff;
            if !(DC_MIN..=DC_MAX).contains(&pred[c]) {
                return Err(Error::DcRangeError {
                    mcu: m,
                    value: pred[c],
                });
            }
            abs[du] = pred[c];
        }
        let offset = u32::try_from(w.byte_len())
            .map_err(|_| Error::InvalidArgument("entropy blob exceeds 4 GiB".into()))?;
        offsets.push(offset);
        write_dc12(&mut w, abs[0]);
        write_dc12(&mut w, abs[4]);
        write_dc12(&mut w, abs[5]);
        w.copy_bits(&plain, spans[0].ac_start, spans[0].end - spans[0].ac_start);
        w.copy_bits(&plain, spans[1].dc_start, spans[3].end - spans[1].dc_start);
        w.copy_bits(&plain, spans[4].ac_start, spans[4].end - spans[4].ac_start);
        w.copy_bits(&plain, spans[5].ac_start, spans[5].end - spans[5].ac_start);
        w.align();
    }
    let source_bits = r.position();
    let index = IndexTable::from_offsets(&offsets)?;
    RaTexture::from_parts(
        parsed.width,
        parsed.height,
        texture_id,
        parsed.tables.clone(),
        index,
        w.into_bytes(),
        source_bits,
    )
}
