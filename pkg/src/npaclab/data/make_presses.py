"""Regenerate the bundled demo press models.

Transmittance curves are smooth logistic absorption bands; depths are
tuned so the CMYK press tolerates per-channel density drifts in
[0.85, 1.15] within the calibration loop's reach (worst-case solid-patch
shift stays under ~2.4 dE2000), while the 8-ink press carries strong
black and red channels for side-by-side K/R patterns.

Run as ``python3 -m npaclab.data.make_presses`` to rewrite the JSON files
in place (deterministic, no RNG).
"""

import numpy as np

from ..colorimetry import WAVELENGTHS
from ..neugebauer import InkSet, YNParams
from ..press import PressModel


def _sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def _band(lo, hi, softness=18.0):
    """Smooth absorption bump, ~1 inside [lo, hi] and ~0 outside."""
    wl = WAVELENGTHS
    return _sig((wl - lo) / softness) * _sig((hi - wl) / softness)


def _substrate():
    # bright coated paper with a mild UV-side droop
    return 0.96 - 0.10 * np.exp(-0.5 * ((WAVELENGTHS - 380.0) / 45.0) ** 2)


def _clip_t(t):
    return np.clip(t, 1e-4, 1.0)


def demo_cmyk() -> PressModel:
    curves = {
        "cyan": 1 - np.maximum(0.85 * _band(580, 780), 0.25 * _band(500, 580)),
        "magenta": 1 - np.maximum(0.85 * _band(465, 545), 0.50 * _band(500, 595)),
        "yellow": 1 - 0.82 * _band(330, 500),
        "black": np.full_like(WAVELENGTHS, 1 - 0.45),
    }
    inkset = InkSet(tuple(curves), levels=2)
    return PressModel(
        inkset=inkset,
        substrate=_substrate(),
        transmittances=np.stack([_clip_t(curves[n]) for n in inkset.names]),
        dot_gain=0.10,
        noise_sigma=0.001,
        yn=YNParams(2.0),
        press_id="demo_cmyk",
    )


def demo_8ink() -> PressModel:
    # the black is a blue-shade black (slight 430 nm transmission leak):
    # side-by-side K/R patterns then reach dark violet-reds that no pair of
    # independently screened K/R coverages can reproduce, because screen
    # overlap always trades the leak's blue against substrate white
    black = 0.045 + 0.15 * np.exp(-0.5 * ((WAVELENGTHS - 430.0) / 32.0) ** 2)
    curves = {
        "cyan": 1 - np.maximum(0.88 * _band(580, 780), 0.30 * _band(500, 580)),
        "magenta": 1 - np.maximum(0.88 * _band(465, 545), 0.60 * _band(500, 595)),
        "yellow": 1 - 0.88 * _band(330, 500),
        "black": black,
        "red": 1 - 0.94 * _band(330, 600, softness=8),
        "green": 1 - np.maximum(0.85 * _band(330, 485), 0.85 * _band(585, 780)),
        "blue": 1 - 0.85 * _band(490, 780),
        "orange": 1 - 0.88 * _band(330, 545),
    }
    inkset = InkSet(tuple(curves), levels=2)
    return PressModel(
        inkset=inkset,
        substrate=_substrate(),
        transmittances=np.stack([_clip_t(curves[n]) for n in inkset.names]),
        dot_gain=0.10,
        noise_sigma=0.001,
        yn=YNParams(2.0),
        press_id="demo_8ink",
    )


DEMOS = {"cmyk": demo_cmyk, "8ink": demo_8ink}


def main():
    from importlib import resources

    base = resources.files("npaclab.data").joinpath("presses")
    for name, factory in DEMOS.items():
        press = factory()
        path = str(base.joinpath(f"demo_{name}.json"))
        press.save(path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
