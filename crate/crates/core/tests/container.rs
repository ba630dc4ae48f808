mod common;

use common::{fixture, synthetic_image};
use jpegtex::jpeg::{encode_baseline, parse_jpeg};
use jpegtex::mcu::decode_mcu;
use jpegtex::transcode::format::{FORMAT_VERSION, TEXTURE_MAGIC};
use jpegtex::transcode::mip::downscale_box;
use jpegtex::transcode::{
    build_mip_chain, build_mip_chain_from_jpeg, deserialize_chain, deserialize_texture, mip_dims,
    serialize_chain, serialize_texture, transcode, RaTexture, MIP_LEVELS,
};
use jpegtex::{Error, RgbImage};
use proptest::prelude::*;

fn sample() -> RaTexture {
    transcode(
        &parse_jpeg(&fixture("libjpeg_200x120_q80.jpg")).unwrap(),
        4242,
    )
    .unwrap()
}

fn fix_crc(bytes: &mut [u8]) {
    let n = bytes.len() - 4;
    let crc = crc32fast::hash(&bytes[..n]);
    bytes[n..].copy_from_slice(&crc.to_le_bytes());
}

#[test]
fn texture_round_trips_bit_exactly() {
    let tex = sample();
    let bytes = serialize_texture(&tex);
    assert_eq!(&bytes[..4], TEXTURE_MAGIC);
    let back = deserialize_texture(&bytes).unwrap();
    assert_eq!(back, tex);
    assert_eq!(serialize_texture(&back), bytes);
    for m in 0..tex.mcu_count() {
        assert_eq!(decode_mcu(&back, m).unwrap(), decode_mcu(&tex, m).unwrap());
    }
}

#[test]
fn bad_magic_is_corrupt() {
    let mut bytes = serialize_texture(&sample());
    bytes[0] = b'X';
    assert!(matches!(
        deserialize_texture(&bytes),
        Err(Error::CorruptContainer(_))
    ));
    assert!(matches!(
        deserialize_texture(b"RT"),
        Err(Error::CorruptContainer(_))
    ));
}

#[test]
fn version_is_checked_before_the_checksum() {
    let mut bytes = serialize_texture(&sample());
    bytes[4..6].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    match deserialize_texture(&bytes) {
        Err(Error::VersionMismatch { found, expected }) => {
            assert_eq!((found, expected), (FORMAT_VERSION + 1, FORMAT_VERSION));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn any_flipped_bit_fails_the_checksum() {
    let bytes = serialize_texture(&sample());
    for pos in (6..bytes.len()).step_by(97) {
        let mut b = bytes.clone();
        b[pos] ^= 0x10;
        assert!(
            matches!(deserialize_texture(&b), Err(Error::CorruptContainer(_))),
            "byte {pos}"
        );
    }
}

#[test]
fn every_truncation_is_rejected() {
    let bytes = serialize_texture(&sample());
    for len in (0..bytes.len()).step_by(13) {
        assert!(deserialize_texture(&bytes[..len]).is_err(), "length {len}");
    }
}

#[test]
fn consistent_but_wrong_dimensions_are_rejected() {
    let mut bytes = serialize_texture(&sample());
    bytes[8..12].copy_from_slice(&400u32.to_le_bytes());
    fix_crc(&mut bytes);
    assert!(matches!(
        deserialize_texture(&bytes),
        Err(Error::CorruptContainer(_))
    ));
}

#[test]
fn trailing_bytes_are_rejected() {
    let mut bytes = serialize_texture(&sample());
    let crc_at = bytes.len() - 4;
    bytes.insert(crc_at, 0);
    fix_crc(&mut bytes);
    assert!(matches!(
        deserialize_texture(&bytes),
        Err(Error::CorruptContainer(_))
    ));
}

#[test]
fn mip_levels_halve_down_to_16() {
    assert_eq!(mip_dims(1024, 1024, 0), (1024, 1024));
    assert_eq!(mip_dims(1024, 1024, 3), (128, 128));
    assert_eq!(mip_dims(1024, 1024, 7), (16, 16));
    assert_eq!(mip_dims(200, 120, 3), (25, 16));
    assert_eq!(mip_dims(200, 120, 7), (16, 16));
}

#[test]
fn box_downscale_averages_2x2() {
    let img = synthetic_image(64, 32, 3);
    let half = downscale_box(&img, 32, 16);
    for y in 0..16 {
        for x in 0..32 {
            for c in 0..3 {
                let s: u32 = [(0, 0), (1, 0), (0, 1), (1, 1)]
                    .iter()
                    .map(|&(dx, dy)| img.get(2 * x + dx, 2 * y + dy)[c] as u32)
                    .sum();
                assert_eq!(half.get(x, y)[c] as u32, (s + 2) / 4, "({x},{y})");
            }
        }
    }
}

#[test]
fn chain_round_trips_and_keeps_the_source_scan() {
    let bytes = fixture("libjpeg_256x256_q80.jpg");
    let parsed = parse_jpeg(&bytes).unwrap();
    let chain = build_mip_chain_from_jpeg(&parsed, 80, 9).unwrap();
    assert_eq!(chain.levels.len(), MIP_LEVELS);
    assert_eq!(chain.levels[0], transcode(&parsed, 9).unwrap());
    for (k, l) in chain.levels.iter().enumerate() {
        assert_eq!((l.width, l.height), mip_dims(256, 256, k));
        assert_eq!(l.texture_id, 9);
    }
    let ser = serialize_chain(&chain);
    assert_eq!(deserialize_chain(&ser).unwrap(), chain);

    let mut bad = ser.clone();
    bad[9] ^= 1;
    assert!(matches!(
        deserialize_chain(&bad),
        Err(Error::CorruptContainer(_))
    ));
    let last = ser.len() - 1;
    let mut bad = ser.clone();
    bad[last] ^= 1;
    assert!(matches!(
        deserialize_chain(&bad),
        Err(Error::CorruptContainer(_))
    ));
    assert!(deserialize_chain(&ser[..ser.len() - 100]).is_err());
    let mut bad = ser;
    bad[4] = 9;
    assert!(matches!(
        deserialize_chain(&bad),
        Err(Error::VersionMismatch { .. })
    ));
}

#[test]
fn tiny_images_cannot_form_chains() {
    let img = RgbImage::new(8, 64);
    assert!(matches!(
        build_mip_chain(&img, 80, 0),
        Err(Error::InvalidArgument(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn round_trip_any_texture(w in 1u32..120, h in 1u32..120, q in 1u8..=100, id in 0u16..8192, seed: u64) {
        let bytes = encode_baseline(&synthetic_image(w, h, seed), q).unwrap();
        let tex = transcode(&parse_jpeg(&bytes).unwrap(), id).unwrap();
        prop_assert_eq!(deserialize_texture(&serialize_texture(&tex)).unwrap(), tex);
    }

    #[test]
    fn garbage_never_panics(data in proptest::collection::vec(any::<u8>(), 0..600), keep_header: bool) {
        let mut bytes = data;
        if keep_header && bytes.len() >= 6 {
            bytes[..4].copy_from_slice(TEXTURE_MAGIC);
            bytes[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
            fix_crc(&mut bytes);
        }
        let _ = deserialize_texture(&bytes);
        let _ = deserialize_chain(&bytes);
    }
}
