use hddpg_core::armsim::{ArmConfig, ArmEnv, Frame};
use hddpg_core::imitation::*;
use hddpg_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env() -> ArmEnv {
    ArmEnv::new(ArmConfig::default()).unwrap()
}

fn median3(f: &Frame) -> Vec<f64> {
    let (h, w) = (f.height(), f.width());
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let mut win = Vec::with_capacity(9);
            for rr in r.saturating_sub(1)..(r + 2).min(h) {
                for cc in c.saturating_sub(1)..(c + 2).min(w) {
                    win.push(f.get(rr, cc));
                }
            }
            win.sort_by(f64::total_cmp);
            out[r * w + c] = win[win.len() / 2];
        }
    }
    out
}

/// Locates a single dark disc: median filter against impulse noise, threshold
/// halfway between the image median and its darkest value, one erosion pass,
/// then the ink centroid rounded to a pixel.
fn marker_centroid(f: &Frame) -> (usize, usize) {
    let (h, w) = (f.height(), f.width());
    let smooth = median3(f);
    let mut sorted = smooth.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = 0.5 * (sorted[sorted.len() / 2] + sorted[0]);
    let ink: Vec<bool> = smooth.iter().map(|&v| v < threshold).collect();
    let inside = |r: usize, c: usize| r > 0 && c > 0 && r + 1 < h && c + 1 < w;
    let (mut sr, mut sc, mut n) = (0.0, 0.0, 0.0);
    for r in 0..h {
        for c in 0..w {
            let kept = inside(r, c)
                && (r - 1..=r + 1).all(|rr| (c - 1..=c + 1).all(|cc| ink[rr * w + cc]));
            if kept {
                sr += r as f64;
                sc += c as f64;
                n += 1.0;
            }
        }
    }
    assert!(n > 0.0, "no marker found");
    ((sr / n).round() as usize, (sc / n).round() as usize)
}

fn band(p: usize) -> usize {
    5 * p / 64
}

#[test]
fn augmentation_never_moves_the_marker_cell() {
    let env = env();
    let cam = env.camera();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000u64 {
        let (r, c) = (rng.random_range(6..58), rng.random_range(6..58));
        let clean = env.render_hand(cam.pixel_to_workspace(r, c)).unwrap();
        let cfg = if i % 2 == 0 {
            AugmentConfig::all_defaults()
        } else {
            AugmentConfig::random_subset(&mut rng)
        };
        let noisy = augment(&clean, &cfg, rng.random()).unwrap();
        let (mr, mc) = marker_centroid(&noisy);
        let truth = GridCell::new(band(r), band(c)).unwrap();
        let found = GridCell::new(band(mr), band(mc)).unwrap();
        assert_eq!(found, truth, "sample {i}: marker at ({r},{c}), oracle ({mr},{mc}), {cfg:?}");
        assert_eq!(cell_of_pixel(r, c, 64, 64).unwrap(), truth);
    }
}

#[test]
fn top_row_fourth_column_pixel() {
    let cell = cell_of_pixel(0, 40, 64, 64).unwrap();
    assert_eq!((cell.row(), cell.col()), (0, 3));
    let mut logits = vec![0.0; 25];
    logits[3] = 1.0;
    assert_eq!(decode_onehot(&logits).unwrap(), cell);
    for i in 0..25 {
        let cell = GridCell::from_index(i).unwrap();
        assert_eq!(decode_onehot(encode_onehot(cell).data()).unwrap(), cell);
    }
}

#[test]
fn dataset_labels_match_marker_pixels() {
    let data = build_dataset(&env(), 2, &[Subject::Hand, Subject::Robot], 3).unwrap();
    assert_eq!(data.len(), 2 * 2 * 25);
    for lf in &data {
        assert_eq!(cell_of_pixel(lf.marker_px.0, lf.marker_px.1, 64, 64).unwrap(), lf.label);
    }
    for subject in [Subject::Hand, Subject::Robot] {
        let mut hist = [0usize; 25];
        data.iter().filter(|f| f.subject == subject).for_each(|f| hist[f.label.index()] += 1);
        assert!(hist.iter().all(|&n| n == 2));
    }
}

#[test]
fn manifest_round_trip_and_rejects_garbage() {
    let entries: Vec<ManifestEntry> = GridCell::all()
        .enumerate()
        .map(|(i, label)| ManifestEntry {
            path: format!("frames/{i:04}.pgm"),
            subject: if i % 2 == 0 { Subject::Hand } else { Subject::Robot },
            label,
            marker_px: (label.row() * 13, label.col() * 13 + 1),
        })
        .collect();
    let mut buf = Vec::new();
    write_manifest(&mut buf, &entries).unwrap();
    assert_eq!(read_manifest(&buf[..]).unwrap(), entries);
    for bad in ["a.pgm hand 0 0", "a.pgm cat 0 0 1 1", "a.pgm hand 5 0 1 1", "a.pgm hand x 0 1 1", "a.pgm hand 0 0 1"] {
        assert!(matches!(read_manifest(bad.as_bytes()), Err(Error::Format(_))), "{bad}");
    }
}

#[test]
fn weights_round_trip_through_the_container() {
    let arch = ImitationArch::default();
    let net = ImitationNet::new(arch, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let mut buf = Vec::new();
    net.write_to(&mut buf).unwrap();
    let back = ImitationNet::read_from(arch, &mut &buf[..]).unwrap();
    assert_eq!(back.params, net.params);
    let frame = env().render_hand(hddpg_core::armsim::Point2::new(0.3, 0.6)).unwrap();
    assert_eq!(back.logits(&frame).unwrap(), net.logits(&frame).unwrap());
    assert!(ImitationNet::read_from(ImitationArch { hidden: 64, ..arch }, &mut &buf[..]).is_err());
    assert!(ImitationNet::read_from(arch, &mut &buf[..buf.len() / 2]).is_err());
}

proptest! {
    #[test]
    fn augmented_pixels_stay_in_unit_range(seed in any::<u64>(), r in 0usize..64, c in 0usize..64) {
        let env = env();
        let frame = env.render_hand(env.camera().pixel_to_workspace(r, c)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = AugmentConfig::random_subset(&mut rng);
        let out = augment(&frame, &cfg, seed).unwrap();
        prop_assert!(out.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert_eq!(augment(&frame, &cfg, seed).unwrap(), out);
    }

    #[test]
    fn every_pixel_maps_to_its_band(r in 0usize..64, c in 0usize..64) {
        let cell = cell_of_pixel(r, c, 64, 64).unwrap();
        prop_assert_eq!((cell.row(), cell.col()), (5 * r / 64, 5 * c / 64));
    }
}
