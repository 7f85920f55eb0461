"""Seeded synthetic flow generator for demos and tests.

Botnet flows differ from normal traffic mainly in source TTL, source bytes
and source window size, echoing the features that rank highest on real
botnet captures. A share of normal hosts shares two of those three traits,
so only their conjunction separates the classes; per-feature independent
models misjudge the look-alikes.
"""

from __future__ import annotations

from datetime import timedelta

import numpy as np

from .dataset import LabeledDataset, build_matrix
from .flowcore import EPOCH, NUMERIC_FEATURES, FlowRecord, LabelClass

_NORMAL_WINDOWS = (8192, 14600, 29200, 64240, 65535)
_BASE_TIME = EPOCH + timedelta(days=16000)


def _flow(rng: np.random.Generator, botnet: bool, index: int) -> FlowRecord:
    if botnet or rng.random() < 0.15:
        s_ttl = 128 - int(rng.integers(0, 4))
        src_win = 16384
        src_pkts = int(rng.integers(2, 6))
        src_bytes = int(rng.integers(180, 420))
        dst_pkts = int(rng.integers(1, 4))
        dst_bytes = int(rng.integers(60, 300))
        dur = float(rng.uniform(0.0, 2.0))
        dport = 6667 if rng.random() < 0.7 else 80
        src, dst = f"147.32.84.{165 + index % 10}", f"91.{index % 200}.{index % 7}.10"
        if not botnet:
            # look-alike host: shares two of the three bot traits
            odd = int(rng.integers(0, 3))
            if odd == 0:
                s_ttl = (64 if rng.random() < 0.6 else 128) - int(rng.integers(4, 21))
            elif odd == 1:
                src_win = int(rng.choice(_NORMAL_WINDOWS))
            else:
                src_bytes = int(rng.integers(600, 5000))
            src, dst = f"10.1.{index % 50}.{index % 250 + 1}", f"172.16.{index % 30}.{index % 90 + 1}"
    else:
        initial = 64 if rng.random() < 0.6 else 128
        s_ttl = initial - int(rng.integers(0, 21))
        src_win = int(rng.choice(_NORMAL_WINDOWS))
        src_pkts = int(rng.integers(1, 200))
        src_bytes = int(np.clip(rng.lognormal(7.0, 1.6), 60 * src_pkts, 1500 * src_pkts))
        dst_pkts = int(rng.integers(0, 300))
        dst_bytes = int(np.clip(rng.lognormal(8.0, 2.0), 60 * dst_pkts, 1500 * dst_pkts))
        dur = float(rng.exponential(20.0))
        dport = int(rng.choice((80, 443, 53, 22, 25)))
        src, dst = f"10.0.{index % 50}.{index % 250 + 1}", f"172.16.{index % 30}.{index % 90 + 1}"
    d_ttl = (64 if rng.random() < 0.5 else 128) - int(rng.integers(0, 21))
    syn_ack = float(rng.uniform(0.001, 0.2))
    ack_dat = float(rng.uniform(0.0, 0.1))
    tot_pkts = src_pkts + dst_pkts
    tot_bytes = src_bytes + dst_bytes
    s_app = max(0, src_bytes - 40 * src_pkts)
    d_app = max(0, dst_bytes - 40 * dst_pkts)
    start = _BASE_TIME + timedelta(seconds=index * 0.05)
    rate = tot_pkts / dur if dur > 0 else 0.0
    return FlowRecord(
        src_addr=src, dst_addr=dst, proto="tcp", sport=int(rng.integers(1024, 65536)), dport=dport,
        state="FIN", s_tos=0, d_tos=0, src_win=src_win, dst_win=int(rng.choice(_NORMAL_WINDOWS)),
        s_hops=128 - s_ttl if s_ttl > 64 else 64 - s_ttl, d_hops=128 - d_ttl if d_ttl > 64 else 64 - d_ttl,
        start_time=start, last_time=start + timedelta(seconds=dur), s_ttl=s_ttl, d_ttl=d_ttl,
        tcp_rtt=syn_ack + ack_dat, syn_ack=syn_ack, ack_dat=ack_dat, src_pkts=src_pkts,
        dst_pkts=dst_pkts, tot_pkts=tot_pkts, src_bytes=src_bytes, dst_bytes=dst_bytes,
        tot_bytes=tot_bytes, s_app_bytes=s_app, d_app_bytes=d_app, tot_app_bytes=s_app + d_app,
        dur=dur, rate=rate, src_rate=src_pkts / dur if dur > 0 else 0.0,
        dst_rate=dst_pkts / dur if dur > 0 else 0.0,
        label=(LabelClass.BOTNET if botnet else LabelClass.NORMAL).value,
    )


def synthetic_flows(n: int = 20000, botnet_fraction: float = 0.05, seed: int = 0) -> list[FlowRecord]:
    """``n`` flows, exactly ``round(n * botnet_fraction)`` of them Botnet,
    in a seeded random order."""
    rng = np.random.default_rng(seed)
    n_bot = int(round(n * botnet_fraction))
    is_bot = np.zeros(n, dtype=bool)
    is_bot[rng.choice(n, n_bot, replace=False)] = True
    return [_flow(rng, bool(b), i) for i, b in enumerate(is_bot)]


def synthetic_dataset(n: int = 20000, botnet_fraction: float = 0.05, seed: int = 0,
                      features=NUMERIC_FEATURES) -> LabeledDataset:
    return build_matrix(synthetic_flows(n, botnet_fraction, seed), features,
                        provenance=f"synthetic(n={n}, botnet={botnet_fraction}, seed={seed})")
