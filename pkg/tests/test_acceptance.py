"""Acceptance gate: one test per release criterion, at its stated tolerance.

Each criterion appears as exactly one test method, so a verbose run prints
one pass/fail line per criterion. Oracles here are written from scratch
(scalar recurrence loops, bound-pattern enumeration for the SVM dual,
closed-form filterbank geometry) and share no code with the checked paths.

The end-to-end ordering test uses the full 600-utterance corpus but a
reduced network and schedule so the whole gate fits the runtime budget;
the reductions are listed next to the constants below.
"""

import itertools
import math
import time

import numpy as np
import pytest

from speechlevel.audio import Waveform, synth_corpus
from speechlevel.cli import main
from speechlevel.errors import DataError
from speechlevel.experiment import read_manifest, run_condition
from speechlevel.features import (log_mel, lhmr, lp_residual_kurtosis,
                                  modulation_spectrum, modulation_windows,
                                  pitch_track, MOD_CENTERS_HZ)
from speechlevel.neuralnet import (NetConfig, TrainConfig, grad_check,
                                   init_model)
from speechlevel.neuralnet.backprop import loss_and_grad
from speechlevel.neuralnet.model import SequenceModel, attention_weights, forward
from speechlevel.svm import dual_objective, rbf_kernel, svm_train_binary
from speechlevel.experiment.data import bin_score

SR = 16_000


# ---------------------------------------------------------------------------
# independent oracles

def _scalar_probs(model, x, t_valid):
    """Forward pass for one utterance with explicit per-unit python loops."""
    cfg, p = model.config, model.params
    nd1, nl = cfg.n_dense1, cfg.n_lstm

    def sig(v):
        if v >= 0.0:
            return 1.0 / (1.0 + math.exp(-v))
        e = math.exp(v)
        return e / (1.0 + e)

    hs = []
    h = [0.0] * nl
    c = [0.0] * nl
    for t in range(t_valid):
        a1 = []
        for j in range(nd1):
            s = float(p["dense1_b"][j])
            for i in range(cfg.n_input):
                s += float(x[t, i]) * float(p["dense1_w"][i, j])
            a1.append(max(s, 0.0))
        z = []
        for j in range(4 * nl):
            s = float(p["lstm_b"][j])
            for i in range(nd1):
                s += a1[i] * float(p["lstm_wx"][i, j])
            for i in range(nl):
                s += h[i] * float(p["lstm_uh"][i, j])
            z.append(s)
        nh, nc = [], []
        for j in range(nl):
            cj = sig(z[nl + j]) * c[j] + sig(z[j]) * math.tanh(z[3 * nl + j])
            nc.append(cj)
            nh.append(sig(z[2 * nl + j]) * math.tanh(cj))
        h, c = nh, nc
        hs.append(h)

    if cfg.pooling == "last":
        pooled = hs[-1]
    elif cfg.pooling == "mean":
        pooled = [sum(hv[j] for hv in hs) / len(hs) for j in range(nl)]
    else:
        scores = [sum(hv[j] * float(p["attn_u"][j]) for j in range(nl))
                  for hv in hs]
        top = max(scores)
        es = [math.exp(s - top) for s in scores]
        tot = sum(es)
        weights = [e / tot for e in es]
        pooled = [sum(weights[t] * hs[t][j] for t in range(len(hs)))
                  for j in range(nl)]

    d2 = []
    for j in range(cfg.n_dense2):
        s = float(p["dense2_b"][j])
        for i in range(nl):
            s += pooled[i] * float(p["dense2_w"][i, j])
        d2.append(max(s, 0.0))
    logits = []
    for k in range(cfg.n_classes):
        s = float(p["out_b"][k])
        for i in range(cfg.n_dense2):
            s += d2[i] * float(p["out_w"][i, k])
        logits.append(s)
    top = max(logits)
    es = [math.exp(v - top) for v in logits]
    tot = sum(es)
    return np.array([e / tot for e in es])


def _best_dual_value(kernel, y, c):
    """Exact maximum of the SVM dual by enumerating bound patterns.

    Every alpha is either at 0, at C, or strictly inside; for each of the
    3^n patterns the free block solves a small linear system with the
    equality constraint adjoined, infeasible candidates are discarded, and
    the best feasible objective wins. Exact for the sizes used here.
    """
    n = len(y)
    q = kernel * np.outer(y, y)
    best = 0.0                              # alpha = 0 is always feasible
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pat = np.array(pattern)
        free = pat == 2
        alpha = np.where(pat == 1, float(c), 0.0)
        if free.any():
            nf = int(free.sum())
            m = np.zeros((nf + 1, nf + 1))
            m[:nf, :nf] = q[np.ix_(free, free)]
            m[:nf, nf] = y[free]
            m[nf, :nf] = y[free]
            rhs = np.zeros(nf + 1)
            rhs[:nf] = 1.0 - q[np.ix_(free, ~free)] @ alpha[~free]
            rhs[nf] = -float(y[~free] @ alpha[~free])
            try:
                sol = np.linalg.solve(m, rhs)
            except np.linalg.LinAlgError:
                continue
            af = sol[:nf]
            if np.any(af <= 0.0) or np.any(af >= c):
                continue
            alpha[free] = af
        if abs(float(y @ alpha)) > 1e-7:
            continue
        value = float(alpha.sum() - 0.5 * alpha @ q @ alpha)
        best = max(best, value)
    return best


def _mel_band_nearest(freq_hz, n_filters, sample_rate=SR):
    """Index of the triangular filter whose center is closest to freq_hz."""
    def to_mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    pts = np.linspace(to_mel(0.0), to_mel(sample_rate / 2.0), n_filters + 2)
    centers = np.array([to_hz(m) for m in pts[1:-1]])
    return int(np.argmin(np.abs(centers - freq_hz)))


def _mod_filter_containing(freq_hz):
    """Index of the modulation filter whose log-domain cell holds freq_hz."""
    logc = np.log(np.array(MOD_CENTERS_HZ))
    edges = (logc[:-1] + logc[1:]) / 2.0
    return int(np.searchsorted(edges, math.log(freq_hz)))


def _am_noise(rng, mod_hz, seconds=3.0, depth=0.9):
    n = int(seconds * SR)
    t = np.arange(n) / SR
    carrier = rng.standard_normal(n)
    sig = carrier * (1.0 + depth * np.sin(2 * np.pi * mod_hz * t))
    return Waveform(0.1 * sig / np.max(np.abs(sig)), SR)


def _am_tone(mod_hz, carrier_hz=1000.0, seconds=3.0, depth=0.8):
    n = int(seconds * SR)
    t = np.arange(n) / SR
    sig = np.sin(2 * np.pi * carrier_hz * t) * (1.0 + depth * np.sin(2 * np.pi * mod_hz * t))
    return Waveform(0.3 * sig / np.max(np.abs(sig)), SR)


def _tiny_config(rng, pooling):
    return NetConfig(input_len=int(rng.integers(5, 10)),
                     n_input=int(rng.integers(3, 7)),
                     n_dense1=int(rng.integers(3, 7)),
                     n_lstm=int(rng.integers(3, 8)),
                     n_dense2=int(rng.integers(3, 7)),
                     n_classes=3, pooling=pooling, dropout=0.0)


# ---------------------------------------------------------------------------
# end-to-end protocol
#
# Reduced from the command-line defaults so the whole block fits the
# runtime budget on one core: shorter padded length (4 s instead of 7),
# 32 LSTM units instead of 128, a smaller second dense layer, 25 epochs
# with batches of 8 (the small training set needs small batches to get
# enough optimizer steps per epoch), and 5 repeats per trained row
# instead of 20. Structure, features, splits, and pooling variants are
# the full pipeline. The attention-weighted SVM rows train one network
# per repeat and stay outside this budget; they are exercised in
# test_experiment.py and test_cli.py instead.

E2E_NET = NetConfig(input_len=400, n_input=32, n_dense1=32, n_lstm=32,
                    n_dense2=32, n_classes=3, pooling="attention",
                    dropout=0.33)
E2E_TRAIN = TrainConfig(learning_rate=1e-3, batch_size=8, max_epochs=25,
                        clip_norm=5.0)
E2E_RUNS = 5
E2E_CONDITIONS = ("lstm-attn", "lstm-mean", "lstm-basic", "lstm-basic-vad",
                  "svm-mfcc", "svm-modspec", "svm-falk")


@pytest.fixture(scope="module")
def e2e_reports(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    t0 = time.time()
    synth_corpus(root, n_speakers=4, utt_per_speaker=50, seed=0)
    manifest = str(root / "manifest.csv")
    reports = {}
    for name in E2E_CONDITIONS:
        n_runs = E2E_RUNS if name.startswith("lstm") else 1
        reports[name] = run_condition(name, manifest, seed=0, n_runs=n_runs,
                                      net_cfg=E2E_NET, train_cfg=E2E_TRAIN)
    return reports, time.time() - t0


# ---------------------------------------------------------------------------
# the gate

class TestAcceptance:
    def test_gradients_match_finite_differences(self):
        t0 = time.time()
        cfg_base = dict(input_len=7, n_input=5, n_dense1=6, n_lstm=4,
                        n_dense2=5, n_classes=3, dropout=0.0)
        worst = 0.0
        for pooling in ("last", "mean", "attention"):
            for seed in range(5):
                cfg = NetConfig(pooling=pooling, **cfg_base)
                model = init_model(cfg, seed=seed)
                rng = np.random.default_rng(1000 + seed)
                x = rng.standard_normal((3, cfg.input_len, cfg.n_input))
                valid = np.array([7, 5, 3])
                labels = rng.integers(0, 3, size=3)
                err = grad_check(model, x, valid, labels)
                assert err < 1e-4, f"{pooling} seed {seed}: {err:.3e}"
                worst = max(worst, err)
        elapsed = time.time() - t0
        assert elapsed < 60.0
        print(f"\ngradient check: worst relative error {worst:.3e} "
              f"in {elapsed:.1f} s")

    def test_padding_extension_changes_nothing(self):
        rng = np.random.default_rng(7)
        poolings = ("last", "mean", "attention")
        for pair in range(100):
            cfg = _tiny_config(rng, poolings[pair % 3])
            model = init_model(cfg, seed=pair)
            t = int(rng.integers(2, cfg.input_len + 1))
            x = rng.standard_normal((1, t, cfg.n_input))
            x_pad = np.concatenate(
                [x, rng.standard_normal((1, 50, cfg.n_input))], axis=1)
            label = np.array([int(rng.integers(0, 3))])
            valid = np.array([t])
            _, cache = forward(model, x, valid, want_cache=True)
            _, cache_pad = forward(model, x_pad, valid, want_cache=True)
            assert np.array_equal(cache["logits"], cache_pad["logits"])
            _, g = loss_and_grad(model, x, valid, label)
            _, g_pad = loss_and_grad(model, x_pad, valid, label)
            for key in g:
                assert np.max(np.abs(g[key] - g_pad[key])) < 1e-12, key
        print("\npadding: 100 model/utterance pairs, logits bit-equal, "
              "gradient shift < 1e-12")

    def test_pooling_identities(self):
        rng = np.random.default_rng(21)
        base = dict(input_len=9, n_input=4, n_dense1=5, n_lstm=6,
                    n_dense2=5, n_classes=3, dropout=0.0)
        x = rng.standard_normal((4, 9, 4))
        valid = np.array([9, 6, 3, 1])

        # zero attention vector collapses to mean pooling
        m_attn = init_model(NetConfig(pooling="attention", **base), seed=3)
        m_mean = SequenceModel(NetConfig(pooling="mean", **base),
                               {k: v.copy() for k, v in m_attn.params.items()
                                if k != "attn_u"})
        m_attn.params["attn_u"][:] = 0.0
        pa, _ = forward(m_attn, x, valid)
        pm, _ = forward(m_mean, x, valid)
        assert np.max(np.abs(pa - pm)) <= 1e-12

        # a single frame makes all three heads identical
        x1 = rng.standard_normal((5, 1, 4))
        m_attn = init_model(NetConfig(pooling="attention", **base), seed=4)
        outs = []
        for pooling in ("last", "mean", "attention"):
            m = SequenceModel(
                NetConfig(pooling=pooling, **base),
                {k: v.copy() for k, v in m_attn.params.items()
                 if pooling == "attention" or k != "attn_u"})
            probs, _ = forward(m, x1, np.ones(5, dtype=int))
            outs.append(probs)
        assert np.max(np.abs(outs[0] - outs[1])) <= 1e-12
        assert np.max(np.abs(outs[0] - outs[2])) <= 1e-12

        # attention weights always sum to one
        m = init_model(NetConfig(pooling="attention", **base), seed=5)
        m.params["attn_u"][:] = rng.standard_normal(6)
        for alphas in attention_weights(m, x, valid):
            assert abs(alphas.sum() - 1.0) <= 1e-9
        print("\npooling identities: zero-vector, single-frame, "
              "weight normalization all hold")

    def test_forward_matches_scalar_recurrence(self):
        rng = np.random.default_rng(2024)
        poolings = ("last", "mean", "attention")
        worst = 0.0
        for trial in range(20):
            cfg = _tiny_config(rng, poolings[trial % 3])
            model = init_model(cfg, seed=100 + trial)
            for key in model.params:
                model.params[key] += 0.1 * rng.standard_normal(
                    model.params[key].shape)
            t = int(rng.integers(2, cfg.input_len + 1))
            x = rng.standard_normal((t, cfg.n_input))
            probs, _ = forward(model, x[None], np.array([t]))
            ref = _scalar_probs(model, x, t)
            worst = max(worst, float(np.max(np.abs(probs[0] - ref))))
        assert worst <= 1e-12
        print(f"\nscalar recurrence oracle: worst deviation {worst:.2e} "
              "over 20 configurations")

    def test_dsp_golden_signals(self):
        t0 = time.time()
        rng = np.random.default_rng(99)

        # pure tone lands in the mel band whose center is nearest
        n = SR
        tone = Waveform(0.3 * np.sin(2 * np.pi * 1000.0 * np.arange(n) / SR),
                        SR)
        lm = log_mel(tone, normalize=False)
        got_band = int(np.argmax(lm.values.mean(axis=0)))
        want_band = _mel_band_nearest(1000.0, lm.values.shape[1])
        assert got_band == want_band

        # 4 Hz amplitude modulation peaks in the filter containing 4 Hz
        energies, _ = modulation_windows(_am_tone(4.0))
        profile = energies.mean(axis=(0, 1))
        assert int(np.argmax(profile)) == _mod_filter_containing(4.0)

        # slow modulation scores higher than fast on the low-to-high ratio
        slow = lhmr(modulation_spectrum(_am_noise(rng, 2.0)))
        fast = lhmr(modulation_spectrum(_am_noise(rng, 20.0)))
        assert slow > fast

        # 150 Hz pulse train tracks at 150 Hz
        period = SR / 150.0
        pulses = np.zeros(2 * SR)
        pulses[(np.arange(int(2 * SR / period)) * period).astype(int)] = 1.0
        track = pitch_track(Waveform(0.5 * pulses, SR))
        f0 = np.median(track.f0_hz[track.voiced])
        assert abs(f0 - 150.0) <= 2.0

        # white Gaussian noise leaves a mesokurtic prediction residual
        vals = [lp_residual_kurtosis(
            Waveform(0.1 * np.random.default_rng(s).standard_normal(2 * SR),
                     SR)) for s in range(10)]
        assert abs(float(np.mean(vals)) - 3.0) <= 0.2

        elapsed = time.time() - t0
        assert elapsed < 120.0
        print(f"\ngolden signals: mel band {got_band}, modulation argmax ok, "
              f"lhmr {slow:.2f} > {fast:.2f}, f0 {f0:.2f} Hz, "
              f"kurtosis {np.mean(vals):.3f} ({elapsed:.1f} s)")

    def test_score_bin_boundaries(self):
        table = {0: 0, 33: 0, 34: 1, 66: 1, 67: 2, 100: 2}
        for score, label in table.items():
            assert bin_score(score) == label, score
        for bad in (-1, 101, 33.5):
            with pytest.raises(DataError):
                bin_score(bad)
        print("\nbinning: all six boundary scores map correctly")

    def test_smo_matches_dual_enumeration(self):
        rng = np.random.default_rng(500)
        worst = 0.0
        for trial in range(20):
            n = int(rng.integers(3, 7))
            x = rng.standard_normal((n, int(rng.integers(2, 5))))
            y = np.ones(n)
            y[rng.permutation(n)[:int(rng.integers(1, n))]] = -1.0
            c = float(rng.choice([0.5, 1.0, 10.0]))
            gamma = float(rng.choice([0.3, 1.0, 2.0]))
            kernel = rbf_kernel(x, x, gamma)
            _, alpha, obj = svm_train_binary(x, y, c, gamma, tol=1e-9)
            assert abs(obj - dual_objective(kernel, y, alpha)) < 1e-9
            target = _best_dual_value(kernel, y, c)
            gap = abs(obj - target)
            assert gap <= 1e-6, f"trial {trial}: gap {gap:.2e}"
            worst = max(worst, gap)
        print(f"\nsequential optimizer vs dual enumeration: "
              f"worst gap {worst:.2e} over 20 instances")

    def test_accuracy_ordering_end_to_end(self, e2e_reports):
        reports, elapsed = e2e_reports
        mean = {name: rep.mean_accuracy for name, rep in reports.items()}
        lines = [f"{name}: {mean[name]:.4f}" for name in sorted(mean)]
        print("\nend-to-end mean test accuracy\n  " + "\n  ".join(lines))
        print(f"  wall time {elapsed / 60.0:.1f} min")
        basic, basic_vad = mean["lstm-basic"], mean["lstm-basic-vad"]
        print(f"  voice-activity trimming moves the basic model "
              f"{basic:.4f} -> {basic_vad:.4f} (reported, not asserted)")
        best_svm = max(v for k, v in mean.items() if k.startswith("svm"))
        assert mean["lstm-attn"] >= mean["lstm-mean"]
        assert mean["lstm-mean"] >= mean["lstm-basic"]
        assert mean["lstm-attn"] >= best_svm
        assert mean["lstm-attn"] >= 0.85
        assert elapsed < 1800.0

    def test_every_stage_is_byte_stable(self, small_corpus, tmp_path, capsys):
        manifest = small_corpus / "manifest.csv"

        def tree_bytes(root):
            return {p.relative_to(root): p.read_bytes()
                    for p in sorted(root.rglob("*")) if p.is_file()}

        # corpus synthesis
        for d in ("gen_a", "gen_b"):
            synth_corpus(tmp_path / d, n_speakers=1, utt_per_speaker=2,
                         seed=77)
        assert tree_bytes(tmp_path / "gen_a") == tree_bytes(tmp_path / "gen_b")

        # feature extraction, detection, splitting, training, evaluation
        stages = {
            "feats": ["featurize", "--manifest", manifest, "--feature",
                      "logmel"],
            "vad": ["vad", "--manifest", manifest],
            "split": ["split", "--manifest", manifest],
        }
        for stage, argv in stages.items():
            outs = []
            for d in ("a", "b"):
                out = tmp_path / f"{stage}_{d}"
                if stage == "split":
                    out = out.with_suffix(".json")
                assert main([str(a) for a in argv + ["--out", out,
                                                     "--seed", "5"]]) == 0
                outs.append(tree_bytes(out) if out.is_dir()
                            else out.read_bytes())
            assert outs[0] == outs[1], stage

        cfg = tmp_path / "tiny.cfg"
        cfg.write_text("input_len = 200\nn_lstm = 6\nn_dense1 = 6\n"
                       "n_dense2 = 6\npooling = attention\ndropout = 0.33\n"
                       "max_epochs = 2\nbatch_size = 8\nseed = 3\n")
        evals = []
        for d in ("a", "b"):
            ckpt = tmp_path / f"model_{d}.ckpt"
            assert main(["train", "--config", str(cfg), "--manifest",
                         str(manifest), "--out", str(ckpt)]) == 0
            capsys.readouterr()
            assert main(["evaluate", "--model", str(ckpt), "--manifest",
                         str(manifest), "--partition", "test",
                         "--seed", "3"]) == 0
            out = capsys.readouterr().out
            payload = out.split("# end resolved-config\n", 1)[1]
            evals.append((ckpt.read_bytes(), payload))
        assert evals[0] == evals[1]

        reports = []
        for d in ("a", "b"):
            out = tmp_path / f"cond_{d}"
            assert main(["run-condition", "--condition", "svm-mfcc",
                         "--manifest", str(manifest), "--out", str(out),
                         "--seed", "2"]) == 0
            reports.append(tree_bytes(out))
        assert reports[0] == reports[1]
        print("\ndeterminism: synthesis, features, detection, splits, "
              "training, evaluation, condition reports all byte-stable")
