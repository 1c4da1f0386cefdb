"""Multi-hop relay throughput with AF/DF relaying, full/half duplex and
parallel beams."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DomainError
from .linkbudget import LinkScenario, clear_sky


class Relaying(enum.Enum):
    AF = "AF"
    DF = "DF"


class Duplex(enum.Enum):
    FULL = "full"
    HALF = "half"


@dataclass(frozen=True)
class RelayChain:
    """Ordered hops from source to destination.

    ``self_interference_db`` is residual self-interference power relative to
    the thermal noise floor at each full-duplex receiver; ``-inf`` means
    perfect cancellation. Parallel beams are assumed non-interfering.
    """

    hops: tuple
    relaying: Relaying = Relaying.DF
    duplex: Duplex = Duplex.FULL
    self_interference_db: float = -math.inf
    parallel_beams: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hops", tuple(self.hops))
        object.__setattr__(self, "relaying", Relaying(self.relaying))
        object.__setattr__(self, "duplex", Duplex(self.duplex))
        if not self.hops:
            raise DomainError("relay chain needs at least one hop")
        if self.parallel_beams < 1:
            raise DomainError("parallel_beams must be >= 1")
        if math.isnan(self.self_interference_db):
            raise DomainError("self-interference level must be a number")

    @property
    def span_m(self) -> float:
        return sum(h.distance_m for h in self.hops)


def af_end_to_end_snr(snrs) -> float:
    """End-to-end linear SNR of an amplify-and-forward chain.

    Uses γ = (Π(1 + 1/γ_i) - 1)^-1, which for two hops equals
    γ1·γ2/(γ1 + γ2 + 1). Infinite hop SNRs drop out.
    """
    g = np.asarray(list(snrs), dtype=float)
    if g.size == 0:
        raise DomainError("need at least one hop SNR")
    if np.any(g <= 0):
        raise DomainError("hop SNRs must be positive")
    log_prod = float(np.sum(np.log1p(1.0 / g)))  # 1/inf -> 0
    return math.inf if log_prod == 0.0 else 1.0 / math.expm1(log_prod)


def hop_snr_db(hop: LinkScenario, self_interference_db: float = -math.inf) -> float:
    """Receive SINR (dB) of one hop with self-interference added to the noise."""
    rx = clear_sky(hop)[2]
    si = 0.0 if self_interference_db == -math.inf else 10.0 ** (self_interference_db / 10.0)
    if math.isinf(si):
        return -math.inf
    return rx - hop.noise_floor_dbm - 10.0 * math.log10(1.0 + si)


@dataclass
class ChainThroughput:
    throughput_bps: float
    bottleneck: int
    hop_snr_db: list = field(default_factory=list)
    diagnostic: str = ""

    def to_dict(self) -> dict:
        return {"throughput_bps": self.throughput_bps,
                "throughput_gbps": self.throughput_bps / 1e9,
                "bottleneck_hop": self.bottleneck,
                "hop_snr_db": self.hop_snr_db,
                "diagnostic": self.diagnostic}


def chain_throughput(chain: RelayChain, bandwidth_hz: float | None = None) -> ChainThroughput:
    """Aggregate throughput (bit/s) of the chain over all parallel beams.

    DF rate is set by the weakest hop; AF rate by the composite SNR.
    Half duplex shares time among the hops (factor 1/N). The bottleneck is
    the hop with the lowest SINR. A hop whose clear-sky power falls below
    its receiver threshold makes the chain infeasible (throughput 0).
    """
    bw = chain.hops[0].bandwidth_hz if bandwidth_hz is None else bandwidth_hz
    si = chain.self_interference_db if chain.duplex is Duplex.FULL else -math.inf
    snr_db = [hop_snr_db(h, si) for h in chain.hops]
    bottleneck = int(np.argmin(snr_db))
    for i, h in enumerate(chain.hops):
        if clear_sky(h)[2] < h.threshold_dbm:
            return ChainThroughput(0.0, i, snr_db, f"hop {i} received power below threshold")
    lin = [10.0 ** (s / 10.0) for s in snr_db]
    if chain.relaying is Relaying.DF:
        spectral = min(math.log2(1.0 + g) for g in lin)
    else:
        spectral = math.log2(1.0 + af_end_to_end_snr(lin)) if min(lin) > 0 else 0.0
    if chain.duplex is Duplex.HALF:
        spectral /= len(chain.hops)
    return ChainThroughput(spectral * bw * chain.parallel_beams, bottleneck, snr_db)


def si_sensitivity(chain: RelayChain, si_sweep_db) -> list[tuple[float, float]]:
    """(si_db, throughput_bps) for each self-interference level."""
    if chain.duplex is not Duplex.FULL:
        raise DomainError("self-interference sweep applies to full-duplex chains only")
    return [(float(si), chain_throughput(replace(chain, self_interference_db=float(si))).throughput_bps)
            for si in si_sweep_db]


def single_link_rate(hop: LinkScenario) -> float:
    """Shannon rate (bit/s) of one hop on its own."""
    return chain_throughput(RelayChain((hop,))).throughput_bps


def multibeam_chain(hop: LinkScenario, n_hops: int = 2, beams: int = 3,
                    relaying=Relaying.DF, duplex=Duplex.FULL,
                    self_interference_db: float = -math.inf) -> RelayChain:
    """Disjoint multi-hop beam paths (three two-hop paths by default), each hop as long as ``hop``.

    One reading of the multi-beam full-duplex relay topology: every path
    spans n_hops × the single-link distance and the beams run in parallel.
    """
    return RelayChain(tuple([hop] * n_hops), relaying, duplex, self_interference_db, beams)
