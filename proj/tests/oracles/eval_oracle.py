"""Independent recomputation of the eval tables from a corpus and score CSVs.

Bias terms use the closed form of an intercept-plus-indicators regression
(group mean differences with a pooled residual variance), not a solver.

Usage: eval_oracle.py CORPUS SCORE_DIR OUT_DIR
"""
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

from scipy import stats

ASPECTS = ["title_intro", "argument_development", "source_use", "conclusion", "vocabulary",
           "syntax", "orthography", "punctuation", "structuring"]


def f6(x):
    s = "%.6f" % float(x)
    return "0.000000" if s == "-0.000000" else s


def stars(p):
    return "***" if p < 0.001 else "**" if p < 0.01 else "*" if p < 0.05 else ""


def main(corpus_path, score_dir, out_dir):
    records = [json.loads(l) for l in open(corpus_path, encoding="utf-8") if l.strip()]
    scores = {}
    for path in sorted(Path(score_dir).glob("*.csv")):
        with open(path, encoding="utf-8") as f:
            for row in csv.DictReader(f):
                sheet = scores.setdefault(row["source"], {}).setdefault(row["essay_id"], {})
                sheet[row["aspect"]] = int(row["score"]) if row["score"] != "" else None

    table1 = ["cohort,source,n_essays,incomplete,bias,se,t,p,stars,mae_total,in_range_pct"]
    fig2 = ["cohort,aspect,source,mae,accuracy,human_mad"]
    for grade in sorted({r["grade"] for r in records}):
        rs = [r for r in records if r["grade"] == grade]
        n = len(rs)

        def sheet(src, r):
            s = scores[src].get(r["id"], {})
            return [s.get(a) for a in ASPECTS]

        sources = [s for s in sorted(scores) if any(v is not None for r in rs for v in sheet(s, r))]
        complete = {s: [r for r in rs if all(v is not None for v in sheet(s, r))] for s in sources}
        human = [sum(r["scores_g1"].values()) for r in rs] + [sum(r["scores_g2"].values()) for r in rs]
        h_mean = Fraction(sum(human), len(human))
        groups = {s: [sum(sheet(s, r)) for r in complete[s]] for s in sources if complete[s]}
        ssr = sum((Fraction(v) - h_mean) ** 2 for v in human)
        for s, vals in groups.items():
            m = Fraction(sum(vals), len(vals))
            ssr += sum((Fraction(v) - m) ** 2 for v in vals)
        n_obs = len(human) + sum(len(v) for v in groups.values())
        dof = n_obs - 1 - len(groups)
        s2 = float(ssr) / dof
        table1.append(f"{grade},human_average,{n},0,{f6(h_mean)},{f6(math.sqrt(s2 / len(human)))},,,,,")

        for s in sources:
            incomplete = n - len(complete[s])
            row = f"{grade},{s},{n},{incomplete},"
            if s in groups:
                vals = groups[s]
                b = Fraction(sum(vals), len(vals)) - h_mean
                se = math.sqrt(s2 * (1 / len(human) + 1 / len(vals)))
                t = float(b) / se
                p = 2 * stats.t.sf(abs(t), dof)
                row += f"{f6(b)},{f6(se)},{f6(t)},{'%.3e' % p},{stars(p)},"
                mae = Fraction(sum(abs(Fraction(sum(sheet(s, r))) - Fraction(sum(r["scores_g1"].values()) +
                                                                             sum(r["scores_g2"].values()), 2))
                                   for r in complete[s]), len(complete[s]))
                inside = 0
                for r in complete[s]:
                    lo = sum(min(r["scores_g1"][a], r["scores_g2"][a]) for a in ASPECTS)
                    hi = sum(max(r["scores_g1"][a], r["scores_g2"][a]) for a in ASPECTS)
                    inside += lo <= sum(sheet(s, r)) <= hi
                row += f"{f6(mae)},{f6(Fraction(100 * inside, len(complete[s])))}"
            else:
                row += ",,,,,,"
            table1.append(row)

        for i, a in enumerate(ASPECTS):
            mad = Fraction(0)
            for r in rs:
                c = Fraction(r["scores_g1"][a] + r["scores_g2"][a], 2)
                mad += abs(r["scores_g1"][a] - c) + abs(r["scores_g2"][a] - c)
            mad /= 2 * n
            for s in sources:
                pairs = [(sheet(s, r)[i], Fraction(r["scores_g1"][a] + r["scores_g2"][a], 2)) for r in rs]
                pairs = [(v, c) for v, c in pairs if v is not None]
                if pairs:
                    m = sum(abs(v - c) for v, c in pairs) / len(pairs)
                    cells = f"{f6(m)},{f6((1 - m / 3) * 100)}"
                else:
                    cells = ","
                fig2.append(f"{grade},{a},{s},{cells},{f6(mad)}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table1.csv").write_text("\n".join(table1) + "\n", encoding="utf-8")
    (out / "fig2.csv").write_text("\n".join(fig2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main(*sys.argv[1:4])
