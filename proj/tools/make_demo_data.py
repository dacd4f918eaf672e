#!/usr/bin/env python3
"""Writes the synthetic demo panel under tests/fixtures/demo/.

Twenty IT-sector tickers, quarterly signals 2016Q1-2020Q4 and month-end
prices through 2021-03. All values are synthetic; the forward quarterly
return loads on the cross-sectional rank of ROE / PE plus noise. A handful
of cells are blanked to exercise missing-data handling.
"""
import calendar
import csv
import math
import pathlib
import random

TICKERS = ["AAPL", "AKAM", "AMD", "ANET", "ANSS", "APH", "CDNS", "CDW", "CTSH", "ENPH",
           "EPAM", "FFIV", "FSLR", "FTNT", "GEN", "GLW", "IBM", "INTC", "IT", "JNPR"]
SIGNALS = ["P/E", "P/B", "ROA", "ROE", "FCF", "P/CF", "EV/EBITDA", "GM", "NM", "SPS"]
LEVEL = {"P/E": 25, "P/B": 6, "ROA": 8, "ROE": 18, "FCF": 4, "P/CF": 15,
         "EV/EBITDA": 14, "GM": 45, "NM": 12, "SPS": 30}


def month_ends(first_year, first_month, count):
    out = []
    y, m = first_year, first_month
    for _ in range(count):
        out.append(f"{y:04d}-{m:02d}-{calendar.monthrange(y, m)[1]:02d}")
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def main():
    rng = random.Random(20160331)
    out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "demo"
    out.mkdir(parents=True, exist_ok=True)

    months = month_ends(2016, 1, 63)          # 2016-01 .. 2021-03
    quarters = [d for d in months[:60] if int(d[5:7]) % 3 == 0]

    base = {t: {s: LEVEL[s] * math.exp(rng.gauss(0, 0.35)) for s in SIGNALS} for t in TICKERS}
    values = {}
    for t in TICKERS:
        for q in quarters:
            values[(t, q)] = {s: base[t][s] * math.exp(rng.gauss(0, 0.12)) for s in SIGNALS}

    # quarterly forward return = premium on rank(ROE/PE) + noise, spread
    # evenly over the quarter's three months
    monthly = {t: {} for t in TICKERS}
    for qi, q in enumerate(quarters):
        score = {t: values[(t, q)]["ROE"] / values[(t, q)]["P/E"] for t in TICKERS}
        order = sorted(TICKERS, key=lambda t: score[t])
        for r, t in enumerate(order):
            fwd = 0.04 * (r / (len(TICKERS) - 1) - 0.5) + 0.01 + rng.gauss(0, 0.03)
            start = months.index(q)
            for k in range(1, 4):
                monthly[t][months[start + k]] = (1 + fwd) ** (1 / 3) * math.exp(rng.gauss(0, 0.002))

    with open(out / "prices.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", "date", "adj_close"])
        for t in TICKERS:
            px = 50 + 100 * rng.random()
            for d in months:
                px *= monthly[t].get(d, math.exp(rng.gauss(0.005, 0.02)))
                w.writerow([t, d, f"{px:.4f}"])

    blanks = {("CDW", quarters[5], "ROA"), ("GEN", quarters[11], "P/B"), ("IT", quarters[2], "NM")}
    with open(out / "signals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", "date"] + SIGNALS)
        for t in TICKERS:
            for q in quarters:
                row = [t, q]
                for s in SIGNALS:
                    row.append("" if (t, q, s) in blanks else f"{values[(t, q)][s]:.4f}")
                w.writerow(row)


if __name__ == "__main__":
    main()
