"""Narrowband MIMO channel synthesis: steering vectors, pathloss, Rician mixing
and the target reflection-point links."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ._random import complex_normal
from .config import ScenarioConfig
from .scenario import Layout

REFERENCE_DISTANCE = 1.0

# Forward links in generation order; the position in this tuple is the
# substream index of the link, so append only.
LINK_IDS = ("bu", "bi", "br", "ru", "ri", "rt", "iu", "it", "tu", "bt")


def pathloss(distance: float, alpha: float, wavelength: float) -> float:
    """Linear power gain ``C0 * (D / D0)**-alpha`` with ``C0 = (lambda / (4 pi D0))**2``."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    c0 = (wavelength / (4.0 * math.pi * REFERENCE_DISTANCE)) ** 2
    return c0 * (distance / REFERENCE_DISTANCE) ** (-alpha)


def steering(count: int, theta: float, spacing: float = 0.5) -> np.ndarray:
    """ULA response ``exp(-j 2 pi spacing k sin(theta))``, k = 0..count-1."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0 < spacing <= 0.5:
        raise ValueError("spacing must lie in (0, 0.5] wavelengths")
    k = np.arange(count)
    return np.exp(-2j * np.pi * spacing * k * np.sin(theta))


def los_component(rx_count, tx_count, theta_rx, theta_tx, spacing_rx=0.5, spacing_tx=0.5):
    """Rank-one LoS matrix ``conj(a_rx) a_tx^T`` of shape (rx_count, tx_count)."""
    a_rx = steering(rx_count, theta_rx, spacing_rx)
    a_tx = steering(tx_count, theta_tx, spacing_tx)
    return np.outer(a_rx.conj(), a_tx)


@dataclass(frozen=True)
class LinkFadingSpec:
    kappa: float
    pathloss: float
    rx_count: int
    tx_count: int
    rx_angle: float = 0.0
    tx_angle: float = 0.0
    element_spacing_rx: float = 0.5
    element_spacing_tx: float = 0.5
    convention: str = "amplitude"

    def __post_init__(self):
        if not self.pathloss > 0:
            raise ValueError("pathloss must be positive")
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")

    @property
    def amplitude(self) -> float:
        return amplitude_scale(self.pathloss, self.convention)


def amplitude_scale(beta: float, convention: str = "amplitude") -> float:
    """Factor multiplying the unit-gain channel.

    ``amplitude`` applies the pathloss to the matrix entries as written
    (``H = beta * (...)``); ``sqrt_power`` uses ``sqrt(beta)``.
    """
    if convention == "amplitude":
        return beta
    if convention == "sqrt_power":
        return math.sqrt(beta)
    raise ValueError(f"unknown pathloss convention {convention!r}")


def nlos_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """i.i.d. CN(0, 1) matrix, one child stream per row.

    Growing ``rows`` or ``cols`` extends the matrix without changing the
    existing entries.
    """
    out = np.empty((rows, cols), dtype=complex)
    for r, child in enumerate(rng.spawn(rows)):
        out[r] = complex_normal(child, cols)
    return out


def rician_mix(los, amplitude, kappa, rng):
    if math.isinf(kappa):
        return amplitude * los
    h_nlos = nlos_matrix(rng, *los.shape)
    return amplitude * (math.sqrt(kappa / (kappa + 1)) * los + math.sqrt(1 / (kappa + 1)) * h_nlos)


def rician_channel(spec: LinkFadingSpec, rng: np.random.Generator) -> np.ndarray:
    """``beta sqrt(k/(k+1)) H_LoS + beta sqrt(1/(k+1)) H_NLoS``; ``kappa=inf`` is pure LoS."""
    los = los_component(spec.rx_count, spec.tx_count, spec.rx_angle, spec.tx_angle,
                        spec.element_spacing_rx, spec.element_spacing_tx)
    return rician_mix(los, spec.amplitude, spec.kappa, rng)


def target_link(points, array_count, theta, beta, rng, *, spacing=0.5, kappa=math.inf,
                convention="amplitude", phases=None):
    """Channel from an array to ``points`` co-located scatterers, shape (points, array_count).

    Row k is ``sqrt(amp) * exp(j psi_k) * a(theta)^T`` with psi_k uniform on
    [0, 2 pi); the target reflection coefficient is not included.  Pass
    ``phases`` to fix psi.
    """
    if points < 1:
        raise ValueError("need at least one reflection point")
    phase_rng, fading_rng = rng.spawn(2)
    if phases is None:
        phases = 2.0 * np.pi * phase_rng.random(points)
    phases = np.asarray(phases, dtype=float)
    los = np.exp(1j * phases)[:, None] * steering(array_count, theta, spacing)[None, :]
    return rician_mix(los, math.sqrt(amplitude_scale(beta, convention)), kappa, fading_rng)


@dataclass(frozen=True)
class ChannelSet:
    """All channel matrices of one realization; ``xy`` is the link from x to y.

    b=BS, u=UE, i=IRS, r=radar, t=target.  ``ir`` and ``tr`` are the
    transposes of ``ri`` and ``rt``.
    """

    bu: np.ndarray  # M x L
    bi: np.ndarray  # N x L
    br: np.ndarray  # Q x L
    ru: np.ndarray  # M x Q
    ri: np.ndarray  # N x Q
    rt: np.ndarray  # K x Q
    iu: np.ndarray  # M x N
    it: np.ndarray  # K x N
    ir: np.ndarray  # Q x N
    tr: np.ndarray  # Q x K
    tu: np.ndarray  # M x K
    bt: np.ndarray  # K x L

    @property
    def dims(self) -> dict[str, int]:
        m, l = self.bu.shape
        return {"L": l, "M": m, "Q": self.br.shape[0], "N": self.bi.shape[0], "K": self.rt.shape[0]}

    @property
    def K(self) -> int:
        return self.rt.shape[0]

    def __getitem__(self, key):
        if isinstance(key, tuple):
            key = "".join(key)
        return getattr(self, key)

    def links(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **links) -> "ChannelSet":
        """Copy with some links swapped; reverse links follow ``ri``/``rt``."""
        if "ri" in links:
            links.setdefault("ir", links["ri"].T)
        if "rt" in links:
            links.setdefault("tr", links["rt"].T)
        return replace(self, **links)

    @classmethod
    def from_forward(cls, **links) -> "ChannelSet":
        return cls(ir=links["ri"].T, tr=links["rt"].T, **links)


def draw_target_count(config: ScenarioConfig, rng: np.random.Generator) -> int:
    return int(rng.integers(config.points_min, config.points_max, endpoint=True))


def build_channel_set(layout: Layout, config: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """Synthesize every link for one realization.

    ``rng`` should be a fresh generator; one child stream is spawned for
    the reflection-point count and one per entry of :data:`LINK_IDS`.
    """
    count_rng, *link_rngs = rng.spawn(1 + len(LINK_IDS))
    streams = dict(zip(LINK_IDS, link_rngs))
    k = draw_target_count(config, count_rng)
    L, M, Q, N = (config.num_bs_antennas, config.num_ue_antennas,
                  config.num_radar_antennas, config.num_irs_elements)
    size = {"b": L, "u": M, "r": Q, "i": N}
    spacing = {"b": 0.5, "u": 0.5, "r": 0.5, "i": config.irs_spacing}
    node = {"b": "bs", "u": "ue", "r": "radar", "i": "irs", "t": "target"}
    wl, alpha, conv = config.wavelength, config.pathloss_exponent, config.pathloss_convention

    def beta(x, y):
        return pathloss(layout.distance(node[x], node[y]), alpha, wl)

    def array_link(x, y, kappa):
        spec = LinkFadingSpec(
            kappa=kappa, pathloss=beta(x, y), rx_count=size[y], tx_count=size[x],
            rx_angle=layout.angle(node[y], node[x]), tx_angle=layout.angle(node[x], node[y]),
            element_spacing_rx=spacing[y], element_spacing_tx=spacing[x], convention=conv,
        )
        return rician_channel(spec, streams[x + y])

    def to_target(x, link):
        return target_link(k, size[x], layout.angle(node[x], "target"), beta(x, "t"), streams[link],
                           spacing=spacing[x], kappa=config.kappa_target, convention=conv)

    return ChannelSet.from_forward(
        bu=array_link("b", "u", config.kappa_direct),
        br=array_link("b", "r", config.kappa_direct),
        ru=array_link("r", "u", config.kappa_direct),
        bi=array_link("b", "i", config.kappa_irs),
        ri=array_link("r", "i", config.kappa_irs),
        iu=array_link("i", "u", config.kappa_irs),
        rt=to_target("r", "rt"),
        it=to_target("i", "it"),
        bt=to_target("b", "bt"),
        tu=to_target("u", "tu").T,
    )


# -- channel dump -------------------------------------------------------------
#
# Layout: the ASCII line ``DYNIRS-CHANNELS 1\n``, then per link a JSON header
# line {"link": .., "rows": .., "cols": ..} followed by rows*cols*2
# little-endian float64 values (row-major, re/im interleaved).

_MAGIC = b"DYNIRS-CHANNELS 1\n"


def dump_channels(channels: ChannelSet, fp) -> None:
    fp.write(_MAGIC)
    for name, mat in channels.links().items():
        rows, cols = mat.shape
        fp.write(json.dumps({"link": name, "rows": rows, "cols": cols}).encode() + b"\n")
        flat = np.ascontiguousarray(mat, dtype="<c16").view("<f8").ravel()
        fp.write(flat.tobytes())


def load_channels(fp) -> ChannelSet:
    if fp.readline() != _MAGIC:
        raise ValueError("not a channel dump")
    links = {}
    for _ in fields(ChannelSet):
        header = json.loads(fp.readline())
        rows, cols = header["rows"], header["cols"]
        raw = fp.read(rows * cols * 16)
        if len(raw) != rows * cols * 16:
            raise ValueError(f"truncated data for link {header['link']}")
        vals = np.frombuffer(raw, dtype="<f8")
        links[header["link"]] = (vals[0::2] + 1j * vals[1::2]).reshape(rows, cols)
    return ChannelSet(**links)

