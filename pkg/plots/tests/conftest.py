"""Golden artifact fixtures, written fresh per session from literal data."""

import json
import struct

import numpy as np
import pytest


@pytest.fixture(scope="session")
def golden_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("golden")
    rng = np.random.default_rng(1234)

    # attention export: 12 frames, weights normalized to one
    alpha = rng.uniform(0.2, 1.0, size=12)
    alpha /= alpha.sum()
    lines = ["frame_time_s,alpha,mean_weight"]
    for t, a in enumerate(alpha):
        lines.append(f"{(t + 1) * 0.01:.9g},{a:.9g},{1 / 12:.9g}")
    (root / "alpha.csv").write_text("\n".join(lines) + "\n")

    # waveform envelope: a decaying sine, 40 points
    t = np.arange(40) * 0.005
    amp = np.sin(2 * np.pi * 11 * t) * np.exp(-t * 4.0)
    lines = ["time_s,amplitude"]
    lines += [f"{ti:.9g},{ai:.9g}" for ti, ai in zip(t, amp)]
    (root / "wave.csv").write_text("\n".join(lines) + "\n")

    # feature sidecar: 8 files with two mean-feature columns
    lines = ["path,speaker_id,score,label,duration_s,n_rows,n_cols,f0,f1"]
    for i in range(8):
        lines.append(f"u{i}.feat,S{i % 3},{10 * i},{i % 3},"
                     f"{1.5 + 0.4 * i:.9g},{100 + i},2,"
                     f"{rng.normal():.9g},{rng.normal():.9g}")
    (root / "features.csv").write_text("\n".join(lines) + "\n")

    # modulation container: 5 windows x (23 x 8) energies
    values = rng.uniform(0.0, 2.0, size=(5, 184)).astype("<f4")
    blob = (b"ISPCFEAT".ljust(16, b"\0")
            + struct.pack("<III", 1, values.shape[0], values.shape[1])
            + values.tobytes())
    (root / "utt.modspec.feat").write_bytes(blob)

    # two condition reports
    for name, accs in (("report-a.json", [0.90, 0.95, 0.85]),
                       ("report-b.json", [0.70, 0.75, 0.80])):
        accs = np.array(accs)
        (root / name).write_text(json.dumps({
            "condition": name.split(".")[0].replace("report-", "cond-"),
            "seed": 0,
            "n_runs": len(accs),
            "accuracies": accs.tolist(),
            "mean_accuracy": float(accs.mean()),
            "std_accuracy": float(accs.std()),
        }, indent=2))

    return root
