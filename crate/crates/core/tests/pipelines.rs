mod common;

use std::f64::consts::TAU;

use common::{correlation, max_abs_diff, off_boundary, scaled_rmse};
use osmosis::synthetic::{
    apply_gains, central_rect_mask, grid_tiles, random_field, textured_ground_truth,
};
use osmosis::{
    balance_mosaic, fuse, remove_shadow, ChannelKind, LabelMap, MultiChannelImage, PipelineParams,
    Rescale, ScalarField, SchemeConfig,
};

fn gray(f: &ScalarField) -> MultiChannelImage {
    MultiChannelImage::gray(f.clone())
}

fn channel(img: &MultiChannelImage) -> &ScalarField {
    &img.channels()[0]
}

/// A texture whose values repeat across every line `x = 32k - 1/2` and
/// `y = 32k - 1/2`, so faces on those lines join equal pixels.
fn seam_symmetric_truth(w: usize, h: usize) -> ScalarField {
    let wave = |t: usize| (TAU * (t as f64 - 31.5) / 32.0).cos();
    ScalarField::from_fn(w, h, |x, y| {
        120.0 + 30.0 * wave(x) + 20.0 * wave(y) + 10.0 * wave(x) * wave(y)
    })
    .unwrap()
}

fn block_mask(w: usize, h: usize) -> LabelMap {
    LabelMap::from_fn(w, h, |x, y| {
        u32::from((32..96).contains(&x) && (32..96).contains(&y))
    })
    .unwrap()
}

#[test]
fn shadow_is_removed() {
    let truth = textured_ground_truth(128, 128, 7);
    let mask = central_rect_mask(128, 128, 0.4);
    let shadowed = apply_gains(&truth, &mask, &[1.0, 0.4]);
    let out = remove_shadow(&gray(&shadowed), &mask, &PipelineParams::default()).unwrap();
    assert!(out.reports[0].converged);
    let (c, err) = scaled_rmse(channel(&out.image), &truth, &off_boundary(&mask, 2));
    assert!(err <= 0.02, "relative RMSE {err}");
    assert!(c > 0.0);
}

#[test]
fn empty_mask_and_single_tile_are_identities() {
    let img = gray(&textured_ground_truth(64, 48, 1));
    let p = PipelineParams::default();
    let zeros = LabelMap::uniform(64, 48, 0).unwrap();
    let out = remove_shadow(&img, &zeros, &p).unwrap();
    assert!(max_abs_diff(channel(&out.image).values(), channel(&img).values()) <= 1e-9 * 255.0);
    let out = balance_mosaic(&img, &zeros, &p).unwrap();
    assert!(max_abs_diff(channel(&out.image).values(), channel(&img).values()) <= 1e-9 * 255.0);
    let out = fuse(&img, &img, &p).unwrap();
    assert!(max_abs_diff(channel(&out.image).values(), channel(&img).values()) <= 1e-9 * 255.0);
}

#[test]
fn unit_shadow_and_equal_gains_are_identities() {
    let truth = seam_symmetric_truth(128, 128);
    let p = PipelineParams::default();

    let mask = block_mask(128, 128);
    let img = gray(&apply_gains(&truth, &mask, &[1.0, 1.0]));
    let out = remove_shadow(&img, &mask, &p).unwrap();
    assert!(channel(&out.image).max_abs_diff(&truth) <= 1e-6 * truth.max());

    let tiles = grid_tiles(128, 128, 4, 4);
    let img = gray(&apply_gains(&truth, &tiles, &[1.3; 16]));
    let out = balance_mosaic(&img, &tiles, &p).unwrap();
    assert!(channel(&out.image).max_abs_diff(channel(&img)) <= 1e-6 * channel(&img).max());
}

#[test]
fn mosaic_is_balanced() {
    let truth = textured_ground_truth(128, 128, 11);
    let tiles = grid_tiles(128, 128, 2, 2);
    let img = gray(&apply_gains(&truth, &tiles, &[0.8, 1.0, 1.2, 1.5]));
    let out = balance_mosaic(&img, &tiles, &PipelineParams::default()).unwrap();
    let keep = off_boundary(&tiles, 2);
    let (_, err) = scaled_rmse(channel(&out.image), &truth, &keep);
    assert!(err <= 0.02, "relative RMSE {err}");
    for t in 0..4 {
        let sel: Vec<bool> = tiles
            .labels()
            .iter()
            .zip(&keep)
            .map(|(&l, &k)| k && l == t)
            .collect();
        let r = correlation(channel(&out.image).values(), truth.values(), &sel);
        assert!(r >= 0.999, "tile {t}: correlation {r}");
    }
}

#[test]
fn constant_init_takes_the_guide_structure() {
    let guide = textured_ground_truth(64, 64, 3);
    let init = ScalarField::constant(64, 64, 80.0).unwrap();
    let p = PipelineParams {
        scheme: SchemeConfig::mos(1000.0)
            .with_steady_tol(1e-13)
            .with_max_steps(20_000),
        ..PipelineParams::default()
    };
    let out = fuse(&gray(&init), &gray(&guide), &p).unwrap();
    // The working images are offset-shifted; the rescaling happens there.
    let o = p.offset;
    let k = (init.mean() + o) / (guide.mean() + o);
    let want = guide.map(|g| k * (g + o) - o).unwrap();
    assert!(channel(&out.image).max_abs_diff(&want) <= 1e-6 * want.max());
}

#[test]
fn constant_guide_diffuses_to_the_mean() {
    let init = random_field(48, 40, 0.0, 255.0, 8);
    let guide = ScalarField::constant(48, 40, 17.0).unwrap();
    let p = PipelineParams {
        scheme: SchemeConfig::mos(1000.0)
            .with_steady_tol(1e-13)
            .with_max_steps(20_000),
        ..PipelineParams::default()
    };
    let out = fuse(&gray(&init), &gray(&guide), &p).unwrap();
    let u = channel(&out.image);
    assert!(u.max() - u.min() <= 1e-6 * init.mean());
    assert!((u.mean() - init.mean()).abs() <= 1e-9 * init.mean());
}

#[test]
fn single_channel_guide_is_broadcast() {
    let (w, h) = (40, 30);
    let guide = gray(&textured_ground_truth(w, h, 2));
    let init = MultiChannelImage::new(
        (0..3)
            .map(|c| ScalarField::constant(w, h, 50.0 + 40.0 * c as f64).unwrap())
            .collect(),
        ChannelKind::Rgb,
    )
    .unwrap();
    let p = PipelineParams {
        scheme: SchemeConfig::mos(1000.0)
            .with_steady_tol(1e-13)
            .with_max_steps(20_000),
        ..PipelineParams::default()
    };
    let out = fuse(&init, &guide, &p).unwrap();
    assert_eq!(out.image.channel_count(), 3);
    for (c, ch) in out.image.channels().iter().enumerate() {
        assert!((ch.mean() - (50.0 + 40.0 * c as f64)).abs() <= 1e-8 * ch.mean());
    }
}

#[test]
fn pipelines_conserve_working_mass() {
    let truth = textured_ground_truth(96, 80, 4);
    let tiles = grid_tiles(96, 80, 3, 2);
    let img = gray(&apply_gains(
        &truth,
        &tiles,
        &[0.7, 1.0, 1.1, 0.9, 1.4, 1.2],
    ));
    let p = PipelineParams {
        rescale: Rescale::Clamp {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        },
        ..PipelineParams::default()
    };
    let out = balance_mosaic(&img, &tiles, &p).unwrap();
    assert!(out.reports[0].max_relative_mass_drift() <= 1e-8);
    let before = channel(&img).total_mass();
    let after = channel(&out.image).total_mass();
    assert!(
        (after - before).abs()
            <= 1e-8 * (before + img.dims().0 as f64 * img.dims().1 as f64 * p.offset)
    );
}

#[test]
fn pipelines_commute_with_scaling() {
    let truth = textured_ground_truth(64, 64, 9);
    let mask = central_rect_mask(64, 64, 0.5);
    let tiles = grid_tiles(64, 64, 2, 2);
    let shadowed = apply_gains(&truth, &mask, &[1.0, 0.5]);
    let mosaic = apply_gains(&truth, &tiles, &[0.8, 1.0, 1.2, 1.5]);
    let base = PipelineParams::default();
    for c in [0.01, 3.0, 250.0] {
        // The offset is part of the input's value scale.
        let scaled = PipelineParams {
            offset: c * base.offset,
            ..base
        };
        let a = remove_shadow(&gray(&shadowed), &mask, &base).unwrap();
        let b = remove_shadow(&gray(&shadowed.scaled(c).unwrap()), &mask, &scaled).unwrap();
        let want = channel(&a.image).scaled(c).unwrap();
        assert!(channel(&b.image).max_abs_diff(&want) <= 1e-8 * want.max());

        let a = balance_mosaic(&gray(&mosaic), &tiles, &base).unwrap();
        let b = balance_mosaic(&gray(&mosaic.scaled(c).unwrap()), &tiles, &scaled).unwrap();
        let want = channel(&a.image).scaled(c).unwrap();
        assert!(channel(&b.image).max_abs_diff(&want) <= 1e-8 * want.max());
    }
}

#[test]
fn pipelines_reject_mismatched_inputs() {
    let img = gray(&textured_ground_truth(32, 32, 1));
    let p = PipelineParams::default();
    assert!(remove_shadow(&img, &LabelMap::uniform(32, 31, 0).unwrap(), &p).is_err());
    assert!(remove_shadow(&img, &LabelMap::uniform(32, 32, 3).unwrap(), &p).is_err());
    assert!(balance_mosaic(&img, &LabelMap::uniform(31, 32, 0).unwrap(), &p).is_err());
    assert!(fuse(&img, &gray(&textured_ground_truth(32, 30, 1)), &p).is_err());
    let bad = PipelineParams { offset: 0.0, ..p };
    assert!(remove_shadow(&img, &LabelMap::uniform(32, 32, 0).unwrap(), &bad).is_err());
}
