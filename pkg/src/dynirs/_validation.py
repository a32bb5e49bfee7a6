"""Input checks shared by the estimator and the functional API."""

from __future__ import annotations

import numpy as np

from .channel import ChannelSet

_SHAPES = {
    "bu": ("M", "L"), "bi": ("N", "L"), "br": ("Q", "L"), "ru": ("M", "Q"),
    "ri": ("N", "Q"), "rt": ("K", "Q"), "iu": ("M", "N"), "it": ("K", "N"),
    "ir": ("Q", "N"), "tr": ("Q", "K"), "tu": ("M", "K"), "bt": ("K", "L"),
}


def check_channel_set(channels, config=None) -> ChannelSet:
    """Verify link shapes agree with each other (and with ``config`` if given) and are finite."""
    if not isinstance(channels, ChannelSet):
        raise TypeError(f"expected a ChannelSet, got {type(channels).__name__}")
    dims = channels.dims
    if config is not None:
        want = {"L": config.num_bs_antennas, "M": config.num_ue_antennas,
                "Q": config.num_radar_antennas, "N": config.num_irs_elements}
        for key, val in want.items():
            if dims[key] != val:
                raise ValueError(f"channel set has {key}={dims[key]}, config expects {val}")
    for name, (r, c) in _SHAPES.items():
        mat = channels[name]
        if mat.shape != (dims[r], dims[c]):
            raise ValueError(f"link {name} has shape {mat.shape}, expected ({dims[r]}, {dims[c]})")
        if not np.all(np.isfinite(mat)):
            raise ValueError(f"link {name} contains NaN or Inf")
    return channels


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
