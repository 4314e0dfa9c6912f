#!/usr/bin/env python3
"""Builds the end-to-end pipeline fixture and its expected reports.

Everything expected is computed here from first principles (vote counting,
confusion tallies, pair-enumeration alpha) and rendered independently of
the Rust code. Re-running rewrites the fixture deterministically.
"""
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
SUBTASKS = ["toxic", "engaging", "fact_claiming"]
COLUMNS = ["Sub1_Toxic", "Sub2_Engaging", "Sub3_FactClaiming"]
N = 300
RUNS = [(1, [1, 3, 4, 5, 6]), (2, [1, 2, 3, 4, 5, 6, 8]), (3, [1, 2, 3, 4, 5, 6, 7, 8, 9])]
# Per-model flip probability; model 10 always predicts 0.
ERROR = {1: 0.22, 2: 0.26, 3: 0.27, 4: 0.21, 5: 0.20, 6: 0.16, 7: 0.19, 8: 0.24, 9: 0.23}
POSITIVE_RATE = [0.35, 0.27, 0.34]
WORDS = ["Das", "ist", "doch", "wirklich", "unglaublich", "Quelle", "Meinung", "Politik", "heute", "Fakten"]


def write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def make_gold(rng):
    rows = []
    for i in range(N):
        cid = f"c{i:04d}"
        text = " ".join(rng.choice(WORDS) for _ in range(rng.randint(4, 9))) + f" #{i}"
        labels = [1 if rng.random() < p else 0 for p in POSITIVE_RATE]
        rows.append((cid, text, labels))
    return rows


def make_predictions(rng, gold):
    preds = {}
    for model in range(1, 11):
        for s in range(3):
            out = {}
            for cid, _, labels in gold:
                if model == 10:
                    label = 0
                else:
                    label = labels[s] ^ (1 if rng.random() < ERROR[model] else 0)
                # Odd models ship scores consistent with the 0.5 threshold.
                if model % 2 == 1:
                    score = round(rng.uniform(0.5, 1.0) if label else rng.uniform(0.0, 0.4999), 4)
                else:
                    score = None
                out[cid] = (label, score)
            preds[(model, s)] = out
    return preds


def fmt(x):
    s = f"{x:.4f}"
    if s.startswith("0."):
        return s[1:]
    if s.startswith("-0."):
        return "-" + s[2:]
    return s


def scores(pred, gold):
    tp = sum(1 for p, g in zip(pred, gold) if p == 1 and g == 1)
    fp = sum(1 for p, g in zip(pred, gold) if p == 1 and g == 0)
    fn = sum(1 for p, g in zip(pred, gold) if p == 0 and g == 1)
    tn = sum(1 for p, g in zip(pred, gold) if p == 0 and g == 0)

    def div(a, b):
        return a / b if b else 0.0

    def prf(tp_, fp_, fn_):
        p, r = div(tp_, tp_ + fp_), div(tp_, tp_ + fn_)
        return p, r, div(2 * p * r, p + r)

    p1, r1, f1 = prf(tp, fp, fn)
    p0, r0, f0 = prf(tn, fn, fp)
    return {
        "confusion": {"tp": tp, "fp": fp, "fn": fn, "tn": tn},
        "class_0": [p0, r0, f0],
        "class_1": [p1, r1, f1],
        "macro_precision": (p0 + p1) / 2,
        "macro_recall": (r0 + r1) / 2,
        "macro_f1": (f0 + f1) / 2,
    }


def alpha(units):
    """Nominal alpha by enumerating ordered rating pairs within each unit."""
    o = {(a, b): 0.0 for a in (0, 1) for b in (0, 1)}
    for ratings in units:
        m = len(ratings)
        if m < 2:
            continue
        for i in range(m):
            for j in range(m):
                if i != j:
                    o[(ratings[i], ratings[j])] += 1.0 / (m - 1)
    n0 = o[(0, 0)] + o[(0, 1)]
    n1 = o[(1, 0)] + o[(1, 1)]
    n = n0 + n1
    d_o = (o[(0, 1)] + o[(1, 0)]) / n
    d_e = 2 * n0 * n1 / (n * (n - 1))
    return 1 - d_o / d_e


def table(rows):
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(r)).rstrip())
    return "\n".join(lines) + "\n"


def render_run(subtask_index, run_id, members, result, agreement):
    name = SUBTASKS[subtask_index]
    rows = [
        ["Run", "Ensemble", "macro P_test", "macro R_test", "macro F1_test"],
        [str(run_id), ",".join(map(str, members)), fmt(result["macro_precision"]), fmt(result["macro_recall"]),
         fmt(result["macro_f1"])],
    ]
    text = f"Ensemble result for subtask {subtask_index + 1} ({name})\n\n" + table(rows)
    text += f"\nrun {run_id}: member agreement (Krippendorff's alpha) {fmt(agreement)}\n"
    return text


def write_config():
    parts = [
        "# End-to-end fixture: ten stored prediction files per subtask, three runs.\n"
        'output_dir = "out"\nevaluate_on = "test"\nreport_formats = ["table", "json"]\n\n'
        '[data]\ntest = "test.tsv"\n\n[translation]\nenabled = false\n'
    ]
    for m in range(1, 11):
        files = ", ".join(f'{s} = "predictions/model{m:02d}_{s}.tsv"' for s in SUBTASKS)
        parts.append(f"[[models]]\nid = {m}\npredictions = {{ {files} }}\n")
    for run_id, members in RUNS:
        parts.append(f'[[runs]]\nid = {run_id}\nmembers = {members}\ntie_policy = "error_on_tie"\n')
    write(os.path.join(HERE, "config.toml"), "\n".join(parts))


def main():
    write_config()
    rng = random.Random(20210901)
    gold = make_gold(rng)
    preds = make_predictions(rng, gold)

    header = "comment_id\tcomment_text\t" + "\t".join(COLUMNS) + "\n"
    body = "".join(f"{cid}\t{text}\t" + "\t".join(map(str, labels)) + "\n" for cid, text, labels in gold)
    write(os.path.join(HERE, "test.tsv"), header + body)

    for (model, s), out in preds.items():
        lines = [f"#format=predictions/1\tmodel_id={model}\tsubtask={SUBTASKS[s]}\tprovenance=synthetic model {model}"]
        for cid in sorted(out):
            label, score = out[cid]
            lines.append(f"{cid}\t{label}" + ("" if score is None else f"\t{score}"))
        write(os.path.join(HERE, "predictions", f"model{model:02d}_{SUBTASKS[s]}.tsv"), "\n".join(lines) + "\n")

    expected = {}
    ids = sorted(cid for cid, _, _ in gold)
    gold_by_id = {cid: labels for cid, _, labels in gold}
    for s in range(3):
        for run_id, members in RUNS:
            ballots = [[preds[(m, s)][cid][0] for m in members] for cid in ids]
            decision = [1 if sum(b) > len(b) / 2 else 0 for b in ballots]
            truth = [gold_by_id[cid][s] for cid in ids]
            result = scores(decision, truth)
            result["member_alpha"] = alpha(ballots)
            result["positives"] = sum(decision)
            expected[f"{SUBTASKS[s]}/run{run_id}"] = result
            write(os.path.join(HERE, "expected", SUBTASKS[s], f"run{run_id}.txt"),
                  render_run(s, run_id, members, result, result["member_alpha"]))
    for model in range(1, 11):
        for s in range(3):
            pred = [preds[(model, s)][cid][0] for cid in ids]
            truth = [gold_by_id[cid][s] for cid in ids]
            expected[f"{SUBTASKS[s]}/model{model:02d}"] = scores(pred, truth)
    write(os.path.join(HERE, "expected", "scores.json"), json.dumps(expected, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
