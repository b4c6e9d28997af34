"""Plot-ready CSV reports derived from an RGGR snapshot."""

from __future__ import annotations

import csv
import io

from .benchmarks import DiscretizedBox, decode_bin, shubert
from .experiment import fmt
from .rggr import Rggr, top_k_weights

HEATMAP_HEADER = ["column", "rank", "from_node", "to_node", "weight"]
SLICE_HEADER = ["pair_rank", "x1_bin", "x2_bin", "x3_bin", "x1", "x2", "x3", "value"]


def emit_heatmap(rggr: Rggr, k: int = 5, box: DiscretizedBox | None = None) -> str:
    """Top-``k`` edges per column; with ``box``, also the decoded endpoint values."""
    if box is not None and tuple(box.bins) != rggr.space.alphabet_sizes:
        raise ValueError("box does not match the snapshot's alphabet sizes")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEATMAP_HEADER + (["from_value", "to_value"] if box is not None else []))
    if k == 0:
        return buf.getvalue()
    for col, edges in enumerate(top_k_weights(rggr, k)):
        for rank, (i, j, weight) in enumerate(edges, start=1):
            row = [col, rank, i, j, fmt(weight)]
            if box is not None:
                row += [fmt(decode_bin(i, box, col)), fmt(decode_bin(j, box, col + 1))]
            w.writerow(row)
    return buf.getvalue()


def emit_fixed_slice(rggr: Rggr, box: DiscretizedBox, top_pairs: int = 5) -> str:
    """Sweep x3 over every bin for each of the heaviest (x1, x2) edges."""
    if rggr.space.num_loci != 3 or box.dims != 3:
        raise ValueError("fixed slices need a 3-locus snapshot and a 3-D box")
    if tuple(box.bins) != rggr.space.alphabet_sizes:
        raise ValueError("box does not match the snapshot's alphabet sizes")
    if top_pairs < 1:
        raise ValueError("top_pairs must be >= 1")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SLICE_HEADER)
    for rank, (i, j, _) in enumerate(top_k_weights(rggr, top_pairs)[0], start=1):
        x1, x2 = decode_bin(i, box, 0), decode_bin(j, box, 1)
        for b in range(box.bins[2]):
            x3 = decode_bin(b, box, 2)
            w.writerow([rank, i, j, b, fmt(x1), fmt(x2), fmt(x3), fmt(shubert([x1, x2, x3]))])
    return buf.getvalue()
