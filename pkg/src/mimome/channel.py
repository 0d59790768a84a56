"""Rayleigh channel ensemble: seeded sampling and derived channel matrices.

Draws of the legitimate channel ``H`` (n_r x n_t) and the eavesdropper
channel ``G`` (n_e x n_t) have i.i.d. circularly-symmetric complex Gaussian
entries with per-entry variances ``sigma_h2`` and ``sigma_g2``.  Sampling is
counter-based (Philox keyed by seed and a per-matrix tag), so regenerating
with the same ``(spec, seed, count)`` is bit-identical and any draw can be
re-derived independently of the others.

Also provides the same-marginal replacement of ``H`` (top rows of ``H``
stacked over a rescaled copy of ``G``), which has the same distribution as
``H`` whenever ``n_r >= n_e``, and eigenvalue sampling for complex Wishart
matrices used by the alternate capacity form.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import cmatrix
from .errors import ConstraintError

__all__ = [
    "ChannelSpec",
    "SampleSet",
    "sample",
    "same_marginal_h",
    "wishart_eigen_samples",
    "save_samples",
    "load_samples",
]

_U64_MASK = (1 << 64) - 1

# Per-matrix stream tags ('H', 'G', 'W') keying independent Philox streams.
_TAG_LEGIT = 0x48
_TAG_EVE = 0x47
_TAG_WISHART = 0x57

_CACHE_MAGIC = b"MIMOSMP1"
_CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<8sIIIIddqQ")


@dataclass(frozen=True)
class ChannelSpec:
    """Antenna counts and per-entry channel variances of the fading ensemble.

    Attributes
    ----------
    n_t, n_r, n_e : int
        Transmit, legitimate-receiver and eavesdropper antenna counts.
    sigma_h2, sigma_g2 : float
        Per-entry variances of the legitimate and eavesdropper channels.
        ``sigma_g2`` must be positive (a zero-variance eavesdropper channel
        is the degenerate no-eavesdropper case and is not modeled).
    """

    n_t: int
    n_r: int
    n_e: int
    sigma_h2: float
    sigma_g2: float

    def __post_init__(self):
        for name in ("n_t", "n_r", "n_e"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be an integer >= 1")
        if not self.sigma_h2 >= 0.0:
            raise ValueError("sigma_h2 must be >= 0")
        if not self.sigma_g2 > 0.0:
            raise ValueError("sigma_g2 must be > 0")

    @property
    def sigma_h(self):
        return float(np.sqrt(self.sigma_h2))

    @property
    def sigma_g(self):
        return float(np.sqrt(self.sigma_g2))

    @property
    def variance_ratio(self):
        """``sigma_h2 / sigma_g2``."""
        return self.sigma_h2 / self.sigma_g2


@dataclass(frozen=True)
class SampleSet:
    """A fixed, seeded collection of ``(H, G)`` channel realizations.

    Arrays are read-only; ``h`` has shape ``(count, n_r, n_t)`` and ``g``
    has shape ``(count, n_e, n_t)``.  Instances built by :func:`sample`
    regenerate bit-identically from ``(spec, seed, count)``.
    """

    spec: ChannelSpec
    seed: int
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        if self.h.ndim != 3 or self.h.shape[1:] != (self.spec.n_r, self.spec.n_t):
            raise ValueError("H draws have the wrong shape for the channel spec")
        if self.g.ndim != 3 or self.g.shape[1:] != (self.spec.n_e, self.spec.n_t):
            raise ValueError("G draws have the wrong shape for the channel spec")
        if self.h.shape[0] != self.g.shape[0]:
            raise ValueError("H and G must hold the same number of draws")

    @property
    def count(self):
        return self.h.shape[0]

    def draw(self, k):
        """The ``k``-th ``(H, G)`` pair."""
        return self.h[k], self.g[k]


def _stream(seed, tag):
    key = [int(seed) & _U64_MASK, tag]
    return np.random.Generator(np.random.Philox(key=key))


def _complex_normal(seed, tag, shape, variance):
    # (re + i*im)/sqrt(2) scaled by sigma gives per-entry variance sigma^2.
    gen = _stream(seed, tag)
    z = gen.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(variance / 2.0)


def sample(spec, count, seed):
    """Draw ``count`` seeded ``(H, G)`` pairs from the Rayleigh ensemble.

    Parameters
    ----------
    spec : ChannelSpec
    count : int
        Number of draws, >= 1.
    seed : int
        64-bit stream seed; identical ``(spec, seed, count)`` reproduces
        bit-identical draws, and a longer run extends a shorter one.

    Returns
    -------
    SampleSet
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    h = _complex_normal(seed, _TAG_LEGIT, (count, spec.n_r, spec.n_t), spec.sigma_h2)
    g = _complex_normal(seed, _TAG_EVE, (count, spec.n_e, spec.n_t), spec.sigma_g2)
    h.setflags(write=False)
    g.setflags(write=False)
    return SampleSet(spec=spec, seed=int(seed), h=h, g=g)


def same_marginal_h(h, g, spec):
    """Same-marginal replacement of ``H``: top rows of ``H`` over scaled ``G``.

    Stacks the top ``n_r - n_e`` rows of ``h`` above
    ``(sigma_h / sigma_g) * g``.  The result has the same distribution as
    ``h`` while sharing its bottom block with the eavesdropper channel,
    which is what couples the two log-determinant terms of the secrecy
    functional.  Accepts a single draw ``(n_r, n_t)`` or a stack
    ``(count, n_r, n_t)`` (with matching ``g``).

    Raises
    ------
    ConstraintError
        When ``n_r < n_e``; the construction splits the legitimate channel
        into an ``n_e``-row block plus a remainder, so it needs
        ``n_r >= n_e``.
    """
    if spec.n_r < spec.n_e:
        raise ConstraintError(
            "same-marginal construction requires n_r >= n_e "
            f"(got n_r={spec.n_r}, n_e={spec.n_e})"
        )
    h = np.asarray(h)
    g = np.asarray(g)
    scale = np.sqrt(spec.sigma_h2 / spec.sigma_g2)
    top = h[..., : spec.n_r - spec.n_e, :]
    return np.concatenate([top, scale * g], axis=-2)


def wishart_eigen_samples(n_t, dim, count, seed):
    """Eigenvalues of ``X X^H`` with ``X`` a dim-by-n_t i.i.d. CN(0, 1) matrix.

    Returns an array of shape ``(count, dim)`` with ascending eigenvalues
    per draw, sampled with the same counter-based scheme as :func:`sample`.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if n_t < 1 or dim < 1:
        raise ValueError("n_t and dim must be >= 1")
    x = _complex_normal(seed, _TAG_WISHART, (count, dim, n_t), 1.0)
    w = cmatrix.hermitize(np.einsum("kij,klj->kil", x, np.conj(x)))
    return np.linalg.eigvalsh(w)


def save_samples(samples, path):
    """Write a :class:`SampleSet` to a binary cache file.

    Layout: a fixed header (magic, version, antenna counts, variances,
    seed, count) followed by the ``H`` then ``G`` entries as little-endian
    float64 interleaved (re, im) pairs.  Round trips are bit-exact.
    """
    spec = samples.spec
    seed = samples.seed
    if not -(1 << 63) <= seed < (1 << 63):
        raise ValueError("cache format stores the seed as a signed 64-bit integer")
    header = _CACHE_HEADER.pack(
        _CACHE_MAGIC,
        _CACHE_VERSION,
        spec.n_t,
        spec.n_r,
        spec.n_e,
        spec.sigma_h2,
        spec.sigma_g2,
        seed,
        samples.count,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(samples.h).astype("<c16", copy=False).tobytes())
        fh.write(np.ascontiguousarray(samples.g).astype("<c16", copy=False).tobytes())


def load_samples(path):
    """Read a :class:`SampleSet` written by :func:`save_samples`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _CACHE_HEADER.size:
        raise ValueError("sample cache is truncated")
    magic, version, n_t, n_r, n_e, sigma_h2, sigma_g2, seed, count = _CACHE_HEADER.unpack(
        raw[: _CACHE_HEADER.size]
    )
    if magic != _CACHE_MAGIC:
        raise ValueError("not a channel sample cache file")
    if version != _CACHE_VERSION:
        raise ValueError(f"unsupported sample cache version {version}")
    spec = ChannelSpec(int(n_t), int(n_r), int(n_e), float(sigma_h2), float(sigma_g2))
    n_h = count * n_r * n_t
    n_g = count * n_e * n_t
    body = np.frombuffer(raw, dtype="<c16", offset=_CACHE_HEADER.size)
    if body.size != n_h + n_g:
        raise ValueError("sample cache payload size does not match its header")
    h = body[:n_h].astype(np.complex128).reshape(count, n_r, n_t)
    g = body[n_h:].astype(np.complex128).reshape(count, n_e, n_t)
    h.setflags(write=False)
    g.setflags(write=False)
    return SampleSet(spec=spec, seed=int(seed), h=h, g=g)
