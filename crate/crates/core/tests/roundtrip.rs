//! Byte-exact persistence of images, masks and network weights.

use docrestore::nn::{build_color_net, build_text_net, decode_weights, encode_weights, load_weights, save_weights, Network};
use docrestore::pnm::{decode_pnm, encode_mask, encode_pgm, encode_ppm, read_color, read_mask, write_mask, write_ppm};
use docrestore::{BinaryMask, ColorImage, Error, GrayImage};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gray_pnm_round_trip(w in 1usize..40, h in 1usize..40, seed in any::<u8>()) {
        let bytes: Vec<u8> = (0..w * h).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
        let img = GrayImage::from_u8(w, h, &bytes).unwrap();
        let encoded = encode_pgm(&img);
        let back = decode_pnm(&encoded).unwrap().into_gray();
        prop_assert_eq!(back.to_u8(), bytes);
        prop_assert_eq!(encode_pgm(&back), encoded);
    }

    #[test]
    fn colour_pnm_round_trip(w in 1usize..30, h in 1usize..30, seed in any::<u8>()) {
        let bytes: Vec<u8> = (0..3 * w * h).map(|i| (i as u8).wrapping_mul(57).wrapping_add(seed)).collect();
        let img = ColorImage::from_u8(w, h, &bytes).unwrap();
        let encoded = encode_ppm(&img);
        let back = decode_pnm(&encoded).unwrap().into_color();
        prop_assert_eq!(back.to_u8(), bytes);
        prop_assert_eq!(encode_ppm(&back), encoded);
    }

    #[test]
    fn mask_pnm_round_trip(w in 1usize..30, h in 1usize..30, seed in any::<u64>()) {
        let mut r = docrestore_testkit::rng(seed);
        let m = docrestore_testkit::random_mask(w, h, 0.4, &mut r);
        let back = BinaryMask::from_gray(&decode_pnm(&encode_mask(&m)).unwrap().into_gray());
        prop_assert_eq!(back, m);
    }

    #[test]
    fn truncated_pnm_reports_offset(cut in 0usize..40) {
        let img = GrayImage::from_u8(5, 4, &[7; 20]).unwrap();
        let bytes = encode_pgm(&img);
        prop_assume!(cut < bytes.len());
        match decode_pnm(&bytes[..cut]) {
            Err(Error::Pnm { offset, .. }) => prop_assert!(offset <= cut),
            other => prop_assert!(false, "expected a parse error, got {:?}", other.map(|_| ())),
        }
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = ColorImage::from_u8(2, 2, &[0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255]).unwrap();
    write_ppm(&img, dir.path().join("a.ppm")).unwrap();
    assert_eq!(read_color(dir.path().join("a.ppm")).unwrap(), img);
    let m = BinaryMask::from_fn(4, 3, |x, y| (x + y) % 2 == 0).unwrap();
    write_mask(&m, dir.path().join("m.pgm")).unwrap();
    assert_eq!(read_mask(dir.path().join("m.pgm")).unwrap(), m);
}

#[test]
fn weights_round_trip_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, spec) in [(1, build_text_net()), (2, build_color_net(3))] {
        let net = Network::<f64>::init(spec.clone(), seed).unwrap();
        let bytes = encode_weights(&net);
        let back: Network<f64> = decode_weights(&spec, &bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode_weights(&back), bytes);
        let path = dir.path().join(format!("net{seed}.bin"));
        save_weights(&net, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
        assert_eq!(load_weights::<f64>(&spec, &path).unwrap(), net);
    }
}

#[test]
fn f32_weights_survive_the_f64_file() {
    let spec = build_text_net();
    let net = Network::<f32>::init(spec.clone(), 3).unwrap();
    let back: Network<f32> = decode_weights(&spec, &encode_weights(&net)).unwrap();
    assert_eq!(back, net);
}

#[test]
fn weights_for_another_architecture_are_rejected() {
    let net = Network::<f64>::init(build_text_net(), 1).unwrap();
    assert!(decode_weights::<f64>(&build_color_net(3), &encode_weights(&net)).is_err());
}
