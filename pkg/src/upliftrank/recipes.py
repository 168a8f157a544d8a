"""Documented preprocessing recipes for public campaign datasets.

These convert vendor CSVs into the plain (y, t, features) layout the
loader expects. Only the e-mail merchandising dataset has a fully
reproducible recipe; subsampled datasets depend on the user's own sample
file.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import IngestionError

HILLSTROM_FEATURES = ["recency", "history_segment", "history", "mens",
                      "womens", "zip_code", "newbie", "channel"]


def prepare_hillstrom(raw_csv, out_csv, response_column: str = "visit"):
    """Reduce the e-mail merchandising file to a two-arm uplift dataset.

    Keeps the control arm and the women's-merchandise campaign arm (the
    men's arm is dropped), sets ``t`` to campaign membership and ``y`` to
    the chosen response column. Returns the number of rows written;
    42,693 for the published file.
    """
    raw_csv, out_csv = Path(raw_csv), Path(out_csv)
    with open(raw_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "segment" not in reader.fieldnames:
            raise IngestionError(f"{raw_csv}: expected a 'segment' column")
        missing = [c for c in HILLSTROM_FEATURES + [response_column]
                   if c not in reader.fieldnames]
        if missing:
            raise IngestionError(
                f"{raw_csv}: missing columns: {', '.join(missing)}")
        kept = 0
        with open(out_csv, "w", newline="") as out:
            writer = csv.writer(out)
            writer.writerow(["y", "t"] + HILLSTROM_FEATURES)
            for row in reader:
                segment = row["segment"].strip()
                if segment == "Mens E-Mail":
                    continue
                t = 1 if segment == "Womens E-Mail" else 0
                writer.writerow([row[response_column], t]
                                + [row[c] for c in HILLSTROM_FEATURES])
                kept += 1
    return kept
