"""Regenerates the committed fixtures. Needs Pillow, numpy and scikit-image.

JPEGs come from libjpeg through Pillow so the decoder is exercised on streams it did
not produce itself. Metric values come from scikit-image and are frozen in
metrics.json.
"""
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

OUT = Path(__file__).parent


def save_jpeg(img, name, quality, **kw):
    kw.setdefault("subsampling", 2)
    img.save(OUT / name, "JPEG", quality=quality, **kw)


def luma(a):
    a = a.astype(np.float64)
    return 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]


def ssim(a, b):
    return structural_similarity(
        luma(a), luma(b), gaussian_weights=True, sigma=1.5, use_sample_covariance=False, data_range=255
    )


def main():
    natural = Image.fromarray(data.astronaut()).crop((96, 32, 352, 288))
    natural.save(OUT / "natural.png")

    for q in (50, 70, 80, 90):
        save_jpeg(natural, f"libjpeg_256x256_q{q}.jpg", q)
    save_jpeg(natural.crop((0, 0, 200, 120)), "libjpeg_200x120_q80.jpg", 80)
    save_jpeg(natural.crop((40, 40, 104, 88)), "libjpeg_64x48_q90.jpg", 90)
    save_jpeg(natural.crop((100, 100, 116, 116)), "libjpeg_16x16_q50.jpg", 50)
    save_jpeg(natural.crop((0, 0, 33, 17)), "libjpeg_33x17_q70.jpg", 70)

    save_jpeg(natural, "reject_progressive.jpg", 80, progressive=True)
    save_jpeg(natural, "reject_444.jpg", 80, subsampling=0)
    save_jpeg(natural.convert("L"), "reject_gray.jpg", 80, subsampling=-1)
    buf = io.BytesIO()
    natural.save(buf, "JPEG", quality=80, subsampling=2)
    (OUT / "reject_restart.jpg").write_bytes(add_restart_marker_segment(buf.getvalue()))

    a = np.asarray(natural)
    rng = np.random.default_rng(7)
    noisy = np.clip(a.astype(np.int16) + rng.integers(-12, 13, a.shape), 0, 255).astype(np.uint8)
    Image.fromarray(noisy).save(OUT / "natural_noisy.png")
    inverted = 255 - a
    Image.fromarray(inverted).save(OUT / "natural_inverted.png")

    metrics = {
        "noisy": {
            "psnr": peak_signal_noise_ratio(a, noisy, data_range=255),
            "ssim": ssim(a, noisy),
        },
        "inverted": {
            "psnr": peak_signal_noise_ratio(a, inverted, data_range=255),
            "ssim": ssim(a, inverted),
        },
    }
    (OUT / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")


def add_restart_marker_segment(jpeg):
    """Inserts a DRI segment with a non-zero interval right after SOI."""
    dri = bytes([0xFF, 0xDD, 0x00, 0x04, 0x00, 0x04])
    return jpeg[:2] + dri + jpeg[2:]


if __name__ == "__main__":
    main()
