//! Hierarchical MCU offset table: per group of nine MCUs one absolute 32-bit byte
//! offset followed by eight 16-bit offsets relative to it.

use crate::error::{Error, Result};

pub const GROUP_LEN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IndexGroup {
    pub absolute: u32,
    /// Offsets of the group's MCUs 1..=8 relative to `absolute`; unused tail entries are 0.
    pub relative: [u16; GROUP_LEN - 1],
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexTable {
    pub groups: Vec<IndexGroup>,
    pub mcu_count: usize,
}

impl IndexTable {
    /// Builds the table from absolute byte offsets in MCU order.
    pub fn from_offsets(offsets: &[u32]) -> Result<Self> {
        let mut groups = Vec::with_capacity(offsets.len().div_ceil(GROUP_LEN));
        for (g, chunk) in offsets.chunks(GROUP_LEN).enumerate() {
            let absolute = chunk[0];
            let mut relative = [0u16; GROUP_LEN - 1];
            for (slot, &off) in relative.iter_mut().zip(&chunk[1..]) {
                let span = (off - absolute) as usize;
                *slot =
                    u16::try_from(span).map_err(|_| Error::GroupSpanOverflow { group: g, span })?;
            }
            groups.push(IndexGroup { absolute, relative });
        }
        Ok(Self {
            groups,
            mcu_count: offsets.len(),
        })
    }

    #[inline]
    pub fn offset(&self, mcu: usize) -> u32 {
        let g = &self.groups[mcu / GROUP_LEN];
        match mcu % GROUP_LEN {
            0 => g.absolute,
            r => g.absolute + g.relative[r - 1] as u32,
        }
    }

    /// Number of 16-bit relative entries actually stored in group `g`.
    pub fn relatives_in_group(&self, g: usize) -> usize {
        (self.mcu_count - g * GROUP_LEN).min(GROUP_LEN) - 1
    }

    /// Stored size: 32 bits per group plus 16 bits per non-leading MCU.
    pub fn bit_size(&self) -> u64 {
        32 * self.groups.len() as u64 + 16 * (self.mcu_count - self.groups.len()) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_mcus_cost_160_bits() {
        let offs: Vec<u32> = (0..9).map(|i| i * 10).collect();
        let t = IndexTable::from_offsets(&offs).unwrap();
        assert_eq!(t.groups.len(), 1);
        assert_eq!(t.bit_size(), 32 + 16 * 8);
        for (i, &o) in offs.iter().enumerate() {
            assert_eq!(t.offset(i), o);
        }
    }

    #[test]
    fn partial_group() {
        let offs: Vec<u32> = (0..12).map(|i| 1000 + i * 700).collect();
        let t = IndexTable::from_offsets(&offs).unwrap();
        assert_eq!(t.groups.len(), 2);
        assert_eq!(t.relatives_in_group(1), 2);
        assert_eq!(t.bit_size(), 2 * 32 + 10 * 16);
        assert!((0..12).all(|i| t.offset(i) == offs[i]));
    }

    #[test]
    fn span_overflow_detected() {
        let offs = [0u32, 10, 70_000];
        match IndexTable::from_offsets(&offs) {
            Err(Error::GroupSpanOverflow {
                group: 0,
                span: 70_000,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        // The next group starts a fresh absolute offset.
        let offs: Vec<u32> = (0..18).map(|i| i * 8000).collect();
        assert!(IndexTable::from_offsets(&offs).is_ok());
    }
}
