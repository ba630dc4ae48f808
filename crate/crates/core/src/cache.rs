//! Frame-coherent texture block cache.
//!
//! An open-addressed hash table (linear probing, 2x capacity slots) maps packed
//! [`CacheKey`]s to entries in a fixed pool of decoded [`PixelBlock`]s. During a frame
//! the mark pass reserves keys concurrently via compare-and-swap, the decode pass
//! publishes blocks, and the resolve pass looks them up. [`BlockCache::end_frame_evict`]
//! runs exclusively between frames: entries not marked visible are dropped and their
//! blocks returned to the pool, and the visibility of survivors is cleared.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::PixelBlock;

pub const DEFAULT_CAPACITY: usize = 65_536;

/// 32-bit key: bits 0-15 MCU id, 16-28 texture id, 29-31 mip level.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey(pub u32);

impl std::fmt::Debug for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "CacheKey(tex {} mip {} mcu {})",
            self.texture_id(),
            self.mip(),
            self.mcu()
        )
    }
}

impl CacheKey {
    #[inline]
    pub fn new(mcu: u16, texture_id: u16, mip: u8) -> Self {
        debug_assert!(texture_id < 1 << 13 && mip < 8);
        Self(mcu as u32 | ((texture_id as u32 & 0x1FFF) << 16) | ((mip as u32 & 7) << 29))
    }

    pub fn try_new(mcu: u32, texture_id: u32, mip: u32) -> Result<Self> {
        if mcu >= 1 << 16 || texture_id >= 1 << 13 || mip >= 8 {
            return Err(Error::InvalidArgument(format!(
                "key fields out of range: mcu {mcu}, texture {texture_id}, mip {mip}"
            )));
        }
        Ok(Self::new(mcu as u16, texture_id as u16, mip as u8))
    }

    #[inline]
    pub fn mcu(self) -> u16 {
        self.0 as u16
    }

    #[inline]
    pub fn texture_id(self) -> u16 {
        ((self.0 >> 16) & 0x1FFF) as u16
    }

    #[inline]
    pub fn mip(self) -> u8 {
        (self.0 >> 29) as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reservation {
    /// The caller owns decoding this key for the current frame.
    NewlyReserved,
    AlreadyPresent,
}

const EMPTY: u64 = 0;
const RESERVED: u64 = 1;
const PUBLISHING: u64 = 2;
const READY: u64 = 3;

#[inline]
fn word(state: u64, key: CacheKey) -> u64 {
    state << 32 | key.0 as u64
}

#[inline]
fn state_of(w: u64) -> u64 {
    w >> 32
}

#[inline]
fn key_of(w: u64) -> u32 {
    w as u32
}

struct Slot {
    word: AtomicU64,
    visible: AtomicBool,
    handle: AtomicU32,
}

impl Slot {
    fn empty() -> Self {
        Self {
            word: AtomicU64::new(EMPTY),
            visible: AtomicBool::new(false),
            handle: AtomicU32::new(0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub capacity: usize,
    pub resident: usize,
    pub reserved: usize,
    pub free_blocks: usize,
    pub evictions_total: u64,
    pub last_evicted: usize,
}

pub struct BlockCache {
    capacity: usize,
    mask: usize,
    shift: u32,
    slots: Box<[Slot]>,
    pool: Box<[UnsafeCell<PixelBlock>]>,
    free: Mutex<Vec<u32>>,
    /// Reserved + publishing + ready entries; never exceeds `capacity`.
    claims: AtomicUsize,
    evictions_total: u64,
    last_evicted: usize,
}

// SAFETY: a pool block is written only by `publish`, which first takes sole ownership
// of the slot (CAS Reserved -> Publishing) and of a handle popped from the free list,
// and then releases the block by storing Ready with Release ordering. Readers reach a
// block only through a Ready slot observed with Acquire ordering, and handles return
// to the free list only in `end_frame_evict`/`clear`, which take `&mut self`, so no
// reference handed out by `lookup` can alias a block that is being written.
unsafe impl Sync for BlockCache {}

impl std::fmt::Debug for BlockCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockCache")
            .field("stats", &self.stats())
            .finish()
    }
}

impl BlockCache {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        let n_slots = (capacity * 2).next_power_of_two();
        let slots: Box<[Slot]> = (0..n_slots).map(|_| Slot::empty()).collect();
        let pool: Box<[UnsafeCell<PixelBlock>]> = (0..capacity)
            .map(|_| UnsafeCell::new(PixelBlock::default()))
            .collect();
        let free = (0..capacity as u32).rev().collect();
        Self {
            capacity,
            mask: n_slots - 1,
            shift: 64 - n_slots.trailing_zeros(),
            slots,
            pool,
            free: Mutex::new(free),
            claims: AtomicUsize::new(0),
            evictions_total: 0,
            last_evicted: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    fn home(&self, key: CacheKey) -> usize {
        if self.shift >= 64 {
            return 0;
        }
        ((key.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> self.shift) as usize
    }

    fn try_claim(&self) -> bool {
        self.claims
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |c| {
                (c < self.capacity).then_some(c + 1)
            })
            .is_ok()
    }

    /// Reserves `key` for decoding, or flags an existing entry as visible this frame.
    pub fn reserve_or_mark(&self, key: CacheKey) -> Result<Reservation> {
        let mut i = self.home(key);
        for _ in 0..self.slots.len() {
            let slot = &self.slots[i];
            let w = slot.word.load(Ordering::Acquire);
            if state_of(w) == EMPTY {
                if !self.try_claim() {
                    return Err(Error::CacheFull {
                        capacity: self.capacity,
                    });
                }
                match slot.word.compare_exchange(
                    EMPTY,
                    word(RESERVED, key),
                    Ordering::AcqRel,
                    Ordering::Acquire,
                ) {
                    Ok(_) => {
                        slot.visible.store(true, Ordering::Relaxed);
                        return Ok(Reservation::NewlyReserved);
                    }
                    Err(actual) => {
                        self.claims.fetch_sub(1, Ordering::AcqRel);
                        if key_of(actual) == key.0 {
                            slot.visible.store(true, Ordering::Relaxed);
                            return Ok(Reservation::AlreadyPresent);
                        }
                    }
                }
            } else if key_of(w) == key.0 {
                slot.visible.store(true, Ordering::Relaxed);
                return Ok(Reservation::AlreadyPresent);
            }
            i = (i + 1) & self.mask;
        }
        Err(Error::CacheFull {
            capacity: self.capacity,
        })
    }

    fn find(&self, key: CacheKey) -> Option<&Slot> {
        let mut i = self.home(key);
        for _ in 0..self.slots.len() {
            let slot = &self.slots[i];
            let w = slot.word.load(Ordering::Acquire);
            if state_of(w) == EMPTY {
                return None;
            }
            if key_of(w) == key.0 {
                return Some(slot);
            }
            i = (i + 1) & self.mask;
        }
        None
    }

    /// Stores the decoded block of a reserved key, making it visible to lookups.
    pub fn publish(&self, key: CacheKey, block: PixelBlock) -> Result<()> {
        let slot = self
            .find(key)
            .ok_or_else(|| Error::InvalidState(format!("publish of unreserved {key:?}")))?;
        slot.word
            .compare_exchange(
                word(RESERVED, key),
                word(PUBLISHING, key),
                Ordering::AcqRel,
                Ordering::Acquire,
            )
            .map_err(|_| {
                Error::InvalidState(format!(
                    "publish of {key:?}, which is not in the reserved state"
                ))
            })?;
        let handle = self
            .free
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .pop()
            .expect("claims never exceed the pool size");
        // SAFETY: `handle` was just popped from the free list and this thread holds the
        // slot in the Publishing state, so no other reference to this block exists.
        unsafe {
            *self.pool[handle as usize].get() = block;
        }
        slot.handle.store(handle, Ordering::Relaxed);
        slot.word.store(word(READY, key), Ordering::Release);
        Ok(())
    }

    /// Returns the block of a Ready entry; Reserved or absent keys miss.
    #[inline]
    pub fn lookup(&self, key: CacheKey) -> Option<&PixelBlock> {
        self.lookup_entry(key).map(|(_, b)| b)
    }

    /// Like [`lookup`](Self::lookup), also returning the pool handle.
    pub fn lookup_entry(&self, key: CacheKey) -> Option<(u32, &PixelBlock)> {
        let slot = self.find(key)?;
        if state_of(slot.word.load(Ordering::Acquire)) != READY {
            return None;
        }
        let handle = slot.handle.load(Ordering::Relaxed);
        // SAFETY: see the `Sync` impl; a Ready handle is not written until `&mut self`.
        Some((handle, unsafe { &*self.pool[handle as usize].get() }))
    }

    pub fn contains(&self, key: CacheKey) -> bool {
        self.find(key).is_some()
    }

    pub fn is_visible(&self, key: CacheKey) -> Option<bool> {
        self.find(key).map(|s| s.visible.load(Ordering::Relaxed))
    }

    /// Evicts entries not marked visible this frame and clears the flag on survivors.
    /// Returns the number of evicted blocks.
    pub fn end_frame_evict(&mut self) -> Result<usize> {
        let mut survivors = Vec::new();
        let mut evicted_handles = Vec::new();
        for slot in self.slots.iter_mut() {
            let w = *slot.word.get_mut();
            match state_of(w) {
                EMPTY => {}
                READY => {
                    let h = *slot.handle.get_mut();
                    if *slot.visible.get_mut() {
                        survivors.push((key_of(w), h));
                    } else {
                        evicted_handles.push(h);
                    }
                }
                _ => {
                    return Err(Error::InvalidState(format!(
                        "{:?} is still reserved at frame end",
                        CacheKey(key_of(w))
                    )))
                }
            }
        }
        for slot in self.slots.iter_mut() {
            *slot.word.get_mut() = EMPTY;
            *slot.visible.get_mut() = false;
        }
        for &(k, h) in &survivors {
            let mut i = self.home(CacheKey(k));
            while *self.slots[i].word.get_mut() != EMPTY {
                i = (i + 1) & self.mask;
            }
            let slot = &mut self.slots[i];
            *slot.word.get_mut() = word(READY, CacheKey(k));
            *slot.handle.get_mut() = h;
        }
        let evicted = evicted_handles.len();
        self.free
            .get_mut()
            .unwrap_or_else(|e| e.into_inner())
            .extend(evicted_handles);
        *self.claims.get_mut() = survivors.len();
        self.evictions_total += evicted as u64;
        self.last_evicted = evicted;
        Ok(evicted)
    }

    /// Drops every entry regardless of state.
    pub fn clear(&mut self) {
        for slot in self.slots.iter_mut() {
            *slot = Slot::empty();
        }
        *self.free.get_mut().unwrap_or_else(|e| e.into_inner()) =
            (0..self.capacity as u32).rev().collect();
        *self.claims.get_mut() = 0;
    }

    /// Keys of all entries in any non-empty state, sorted.
    pub fn resident_keys(&self) -> Vec<CacheKey> {
        let mut keys: Vec<CacheKey> = self
            .slots
            .iter()
            .map(|s| s.word.load(Ordering::Acquire))
            .filter(|&w| state_of(w) != EMPTY)
            .map(|w| CacheKey(key_of(w)))
            .collect();
        keys.sort_unstable();
        keys
    }

    pub fn stats(&self) -> CacheStats {
        let mut resident = 0;
        let mut reserved = 0;
        for s in self.slots.iter() {
            match state_of(s.word.load(Ordering::Acquire)) {
                READY => resident += 1,
                RESERVED | PUBLISHING => reserved += 1,
                _ => {}
            }
        }
        CacheStats {
            capacity: self.capacity,
            resident,
            reserved,
            free_blocks: self.capacity - self.claims.load(Ordering::Acquire),
            evictions_total: self.evictions_total,
            last_evicted: self.last_evicted,
        }
    }

    /// Physical length of the free list (blocks not handed to a published entry).
    pub fn free_list_len(&self) -> usize {
        self.free.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn block(v: u8) -> PixelBlock {
        PixelBlock([v; 768])
    }

    fn conserved(c: &BlockCache) -> bool {
        let s = c.stats();
        s.resident + s.reserved + s.free_blocks == c.capacity()
    }

    #[test]
    fn reserve_is_idempotent() {
        let c = BlockCache::new(4);
        let k = CacheKey::new(3, 1, 0);
        assert_eq!(c.reserve_or_mark(k).unwrap(), Reservation::NewlyReserved);
        assert_eq!(c.reserve_or_mark(k).unwrap(), Reservation::AlreadyPresent);
        assert!(c.lookup(k).is_none(), "reserved entries miss");
        assert!(conserved(&c));
    }

    #[test]
    fn capacity_one_is_full_after_one_key() {
        let c = BlockCache::new(1);
        assert_eq!(
            c.reserve_or_mark(CacheKey::new(0, 0, 0)).unwrap(),
            Reservation::NewlyReserved
        );
        assert!(matches!(
            c.reserve_or_mark(CacheKey::new(1, 0, 0)),
            Err(Error::CacheFull { capacity: 1 })
        ));
    }

    #[test]
    fn publish_then_lookup() {
        let c = BlockCache::new(8);
        let k = CacheKey::new(9, 2, 1);
        c.reserve_or_mark(k).unwrap();
        c.publish(k, block(7)).unwrap();
        assert_eq!(c.lookup(k).unwrap().0[0], 7);
        assert!(matches!(
            c.publish(k, block(8)),
            Err(Error::InvalidState(_))
        ));
        assert!(matches!(
            c.publish(CacheKey::new(1, 1, 1), block(1)),
            Err(Error::InvalidState(_))
        ));
        assert!(c.lookup(CacheKey::new(1, 1, 1)).is_none());
    }

    #[test]
    fn eviction_follows_visibility() {
        let mut c = BlockCache::new(8);
        let (a, b) = (CacheKey::new(1, 0, 0), CacheKey::new(2, 0, 0));
        for k in [a, b] {
            c.reserve_or_mark(k).unwrap();
            c.publish(k, block(1)).unwrap();
        }
        assert_eq!(c.end_frame_evict().unwrap(), 0);
        assert_eq!(c.is_visible(a), Some(false));
        // Next frame only `a` is seen.
        assert_eq!(c.reserve_or_mark(a).unwrap(), Reservation::AlreadyPresent);
        assert_eq!(c.end_frame_evict().unwrap(), 1);
        assert!(c.lookup(a).is_some());
        assert!(c.lookup(b).is_none());
        assert!(conserved(&c));
        // Nothing seen: everything goes, the pool is whole again.
        c.end_frame_evict().unwrap();
        assert_eq!(c.stats().free_blocks, 8);
        assert_eq!(c.free_list_len(), 8);
    }

    #[test]
    fn reserved_entries_block_frame_end() {
        let mut c = BlockCache::new(2);
        c.reserve_or_mark(CacheKey::new(0, 0, 0)).unwrap();
        assert!(matches!(c.end_frame_evict(), Err(Error::InvalidState(_))));
    }

    #[test]
    fn key_with_all_bits_set_is_usable() {
        let c = BlockCache::new(2);
        let k = CacheKey::new(u16::MAX, 8191, 7);
        assert_eq!(k.0, u32::MAX);
        assert_eq!(c.reserve_or_mark(k).unwrap(), Reservation::NewlyReserved);
        c.publish(k, block(3)).unwrap();
        assert!(c.lookup(k).is_some());
    }

    #[test]
    fn concurrent_reservations_dedupe() {
        let c = BlockCache::new(2048);
        let newly = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for t in 0..10 {
                let (c, newly) = (&c, &newly);
                s.spawn(move || {
                    for i in 0..1000u32 {
                        let k = CacheKey::new(((i * 7 + t * 13) % 1000) as u16, 5, 2);
                        if c.reserve_or_mark(k).unwrap() == Reservation::NewlyReserved {
                            newly.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                });
            }
        });
        assert_eq!(newly.load(Ordering::Relaxed), 1000);
        assert_eq!(c.stats().reserved, 1000);
        assert!(conserved(&c));
        let free_before = c.free_list_len();
        std::thread::scope(|s| {
            for t in 0..4u32 {
                let c = &c;
                s.spawn(move || {
                    for i in (t..1000).step_by(4) {
                        c.publish(CacheKey::new(i as u16, 5, 2), block(i as u8))
                            .unwrap();
                    }
                });
            }
        });
        assert_eq!(free_before - c.free_list_len(), 1000);
        assert_eq!(
            c.lookup(CacheKey::new(999, 5, 2)).unwrap().0[5],
            (999u32 % 256) as u8
        );
        assert!(conserved(&c));
    }

    proptest! {
        #[test]
        fn key_packing_is_bijective(mcu: u16, tex in 0u16..8192, mip in 0u8..8) {
            let k = CacheKey::new(mcu, tex, mip);
            prop_assert_eq!((k.mcu(), k.texture_id(), k.mip()), (mcu, tex, mip));
            prop_assert_eq!(CacheKey::try_new(mcu as u32, tex as u32, mip as u32).unwrap(), k);
        }

        #[test]
        fn frames_preserve_invariants(frames in prop::collection::vec(prop::collection::vec(0u16..200, 0..120), 1..6)) {
            let mut c = BlockCache::new(150);
            for keys in frames {
                let mut seen = HashSet::new();
                for m in keys {
                    let k = CacheKey::new(m, 1, 0);
                    match c.reserve_or_mark(k) {
                        Ok(Reservation::NewlyReserved) => { prop_assert!(seen.insert(k)); c.publish(k, block(m as u8)).unwrap(); }
                        Ok(Reservation::AlreadyPresent) => { seen.insert(k); }
                        Err(Error::CacheFull { .. }) => {}
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    }
                    prop_assert!(conserved(&c));
                }
                let resident = c.resident_keys();
                let unique: HashSet<_> = resident.iter().collect();
                prop_assert_eq!(unique.len(), resident.len());
                c.end_frame_evict().unwrap();
                prop_assert!(conserved(&c));
                prop_assert_eq!(c.free_list_len(), c.stats().free_blocks);
                for k in c.resident_keys() {
                    prop_assert_eq!(c.is_visible(k), Some(false));
                    prop_assert!(seen.contains(&k));
                }
            }
        }
    }
}
