"""Physical link parameters and the equivalent signal-dependent Gaussian channel.

The channel output in normalized symbol units is::

    Y = X + Z * sqrt(sigma_ele2 + (X + beta)**2 * sigma_rin2),   Z ~ N(0, 1)

where ``sigma_ele2`` is thermal noise referred through the TIA gain and
``sigma_rin2`` is the laser RIN integrated over the electrical bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .constellation import (
    Constellation,
    oma_dbm_to_watts,
    solve_bias,
    solve_eta,
)

#: Electrical bandwidth per PAM order [Hz].
PRESET_BANDWIDTH_HZ = {4: 68e9, 6: 52e9, 8: 45e9}


@dataclass(frozen=True)
class LinkParams:
    """Unamplified IM-DD link. Defaults reproduce the reference PAM-4 setup.

    ``rin_db_hz = -inf`` switches RIN off.
    """

    rin_db_hz: float = -140.0
    er_db: float = 5.0
    length_km: float = 2.0
    alpha_db_km: float = 0.35
    responsivity_a_w: float = 0.5
    thermal_asd: float = 18e-12
    bandwidth_hz: float = 68e9

    def __post_init__(self):
        for name in ("er_db", "responsivity_a_w", "bandwidth_hz"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value!r}")
        for name in ("length_km", "alpha_db_km", "thermal_asd"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value!r}")
        if math.isnan(self.rin_db_hz) or self.rin_db_hz == math.inf:
            raise ValueError(f"rin_db_hz must be finite or -inf, got {self.rin_db_hz!r}")

    @classmethod
    def for_order(cls, order, **overrides):
        """Reference parameters with the bandwidth used for PAM-``order``."""
        if order not in PRESET_BANDWIDTH_HZ:
            raise ValueError(f"no reference bandwidth for PAM-{order}")
        return cls(**{"bandwidth_hz": PRESET_BANDWIDTH_HZ[order], **overrides})

    def replace(self, **changes):
        return replace(self, **changes)

    def without_rin(self):
        return replace(self, rin_db_hz=-math.inf)

    def to_dict(self):
        doc = asdict(self)
        if math.isinf(self.rin_db_hz):
            doc["rin_db_hz"] = None
        return doc

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise KeyError(", ".join(sorted(unknown)))
        kwargs = dict(doc)
        if "rin_db_hz" in kwargs:
            kwargs["rin_db_hz"] = _parse_rin(kwargs["rin_db_hz"])
        return cls(**{k: float(v) for k, v in kwargs.items()})


def _parse_rin(value):
    if value is None or (isinstance(value, str) and value.strip().lower() in ("off", "-inf")):
        return -math.inf
    return float(value)


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Equivalent channel seen by the detector for one operating point."""

    sigma_ele2: float
    sigma_rin2: float
    beta: float
    constellation: Constellation
    cond_sigma: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.sigma_ele2 < 0 or self.sigma_rin2 < 0:
            raise ValueError("noise variances must be non-negative")
        x = self.constellation.points
        var = self.sigma_ele2 + (x + self.beta) ** 2 * self.sigma_rin2
        sigma = np.sqrt(var)
        sigma.setflags(write=False)
        object.__setattr__(self, "cond_sigma", sigma)

    @property
    def points(self):
        return self.constellation.points

    @property
    def probs(self):
        return self.constellation.probs

    @property
    def order(self):
        return self.constellation.order

    @property
    def cond_var(self):
        return self.cond_sigma**2

    def cond_variance(self, i):
        return cond_variance(self, i)

    def with_constellation(self, constellation):
        return ChannelModel(self.sigma_ele2, self.sigma_rin2, self.beta, constellation)

    def scaled_noise(self, factor):
        """Both variance terms multiplied by ``factor``."""
        return ChannelModel(
            self.sigma_ele2 * factor, self.sigma_rin2 * factor, self.beta, self.constellation
        )

    def __repr__(self):
        return (
            f"ChannelModel(sigma_ele2={self.sigma_ele2!r}, sigma_rin2={self.sigma_rin2!r}, "
            f"beta={self.beta!r}, M={self.order})"
        )


def fiber_loss(params):
    """Linear power transmission ``10**(-alpha L / 10)``."""
    return 10.0 ** (-params.alpha_db_km * params.length_km / 10.0)


def tia_gain(params, eta):
    """TIA gain [Ohm] that undoes responsivity, fiber loss and E/O scaling."""
    if not eta > 0:
        raise ValueError(f"eta must be > 0, got {eta!r}")
    return 1.0 / (params.responsivity_a_w * fiber_loss(params) * eta)


def rin_variance(params):
    if math.isinf(params.rin_db_hz):
        return 0.0
    return 10.0 ** (params.rin_db_hz / 10.0) * params.bandwidth_hz


def build_channel(params, c, oma_dbm):
    """Equivalent channel for constellation ``c`` at an OMA of ``oma_dbm``."""
    eta = solve_eta(oma_dbm_to_watts(oma_dbm), c)
    beta = solve_bias(params.er_db, c)
    gain = tia_gain(params, eta)
    sigma_ele2 = gain**2 * params.thermal_asd**2 * params.bandwidth_hz
    return ChannelModel(sigma_ele2, rin_variance(params), beta, c)


def cond_variance(m, i):
    if not 0 <= i < m.order:
        raise IndexError(f"symbol index {i} out of range for M={m.order}")
    x = m.points[i]
    return m.sigma_ele2 + (x + m.beta) ** 2 * m.sigma_rin2
