"""End-to-end commands: simulate, preprocess, train, eval, report.

Directory contracts:

* simulate  -> ``<data>/{campaign.json, manifest.jsonl, weather.csv, tx.tns, frames/}``
* preprocess -> ``<features>/{preprocess.json, manifest.jsonl, features/, clutter/}``
* train     -> ``<ckpt>/{checkpoint.json, params/, adam/, train_log.csv}``
* eval      -> ``<report>/{summary.json, predictions.csv, confusion_*.csv|pgm, cdf_*.csv}``
"""

import json
import logging
from pathlib import Path

import numpy as np

from . import tensorio
from .chansim import sample_campaign
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .clutter import fit_clutter_basis, load_basis, remove_clutter, save_basis
from .config import campaign_spec, channel_model, class_bins, radio_config, substream
from .csi import estimate_csi, zero_pad
from .dataset import (
    METRICS,
    build_batches,
    class_weights,
    day_of,
    entries_for,
    epoch_batches,
    label_values,
    pair_labels,
    read_weather_csv,
    select_calibration_day,
)
from .features import FeatureTensor, apply_norm, assemble_features, fit_norm_stats
from .metrics import metric_report, write_cdf_csv, write_confusion_csv, write_matrix_csv, write_pgm
from .nn import AdamState, CnnModel, adam_step, backward, predict_class, predict_value
from .ofdm import POLARIZATIONS, OfdmFrame, RadioConfig
from .radar import crop_window, periodogram

log = logging.getLogger(__name__)


def _dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------------
def cmd_simulate(cfg: dict, out_dir, seed: int, progress=None):
    return sample_campaign(
        radio_config(cfg), campaign_spec(cfg), substream(seed, "simulate"), out_dir, channel_model(cfg), progress
    )


# ----------------------------------------------------------------------------
# preprocess
# ----------------------------------------------------------------------------
def _load_dataset(data_dir):
    data = Path(data_dir)
    meta = json.loads((data / "campaign.json").read_text())
    radio = RadioConfig.from_dict(meta["radio"])
    tx = OfdmFrame(tensorio.read_tensor(data / "tx.tns"), "rho1")
    manifest = tensorio.read_manifest(data / "manifest.jsonl")
    return radio, tx, manifest


def _padded_csi(rx2, tx, fid):
    return [zero_pad(estimate_csi(OfdmFrame(rx2[i], pol), tx, fid)) for i, pol in enumerate(POLARIZATIONS)]


def frame_periodograms(rx2, tx, radio, n_prime, m_prime, bases=None, fid=-1):
    """Co- and cross-polar periodograms of one stacked (2, N, M) RX frame."""
    out = []
    for csi in _padded_csi(rx2, tx, fid):
        if bases is not None:
            csi = remove_clutter(csi, bases[csi.polarization_pair])
        out.append(periodogram(csi, n_prime, m_prime, radio))
    return out


def _evenly(ids, k):
    if len(ids) <= k:
        return list(ids)
    pick = np.unique(np.round(np.linspace(0, len(ids) - 1, k)).astype(int))
    return [ids[i] for i in pick]


def crop_for(cfg, radio):
    c = cfg["crop"]
    return crop_window(radio, c["max_range_m"], c["max_abs_speed_mps"], c.get("n_prime"), c.get("m_prime"))


def cmd_preprocess(cfg: dict, data_dir, out_dir, weather_csv=None, progress=None) -> dict:
    """CSI -> zero padding -> clutter removal -> periodograms -> 4-channel features per sample.

    Each sample is cleaned with a basis fitted on the clearest earlier day.
    Samples without an earlier day (or without a label) are excluded and
    listed in ``preprocess.json``.
    """
    data = Path(data_dir)
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    (out / "clutter").mkdir(parents=True, exist_ok=True)
    radio, tx, manifest = _load_dataset(data)
    n_prime, m_prime = crop_for(cfg, radio)
    ccfg = cfg["clutter"]

    weather = Path(weather_csv) if weather_csv else data / "weather.csv"
    excluded = []
    if weather.is_file():
        res = pair_labels(manifest, read_weather_csv(weather), cfg["pairing"]["max_gap_s"])
        manifest = res.manifest
        excluded += [{"frame_id": f, "reason": r} for f, r in res.excluded]
    labelled = tensorio.DatasetManifest(e for e in manifest if e.label is not None)
    excluded += [{"frame_id": e.frame_id, "reason": "no label"} for e in manifest if e.label is None]
    by_id = labelled.by_id()

    bases_by_day = {}
    cal_for_day = {}
    for d in sorted({day_of(e.timestamp) for e in labelled}):
        try:
            cal_ids = select_calibration_day(labelled, d)
        except LookupError:
            cal_for_day[d] = None
            continue
        cal_day = day_of(by_id[cal_ids[0]].timestamp)
        cal_for_day[d] = cal_day
        if cal_day in bases_by_day:
            continue
        snaps = {pair: [] for pair in ("rho1_rho1", "rho1_rho2")}
        used = _evenly(cal_ids, int(ccfg["max_snapshots"]))
        for fid in used:
            rx2 = tensorio.read_tensor(data / by_id[fid].tensor_path)
            for csi in _padded_csi(rx2, tx, fid):
                snaps[csi.polarization_pair].append(csi)
        bases = {}
        for pair, lst in snaps.items():
            b = fit_clutter_basis(lst, ccfg["energy_fraction"], ccfg.get("max_rank"), source=f"day{cal_day}")
            save_basis(b, out / "clutter" / f"day{cal_day}_{pair}")
            bases[pair] = b
        bases_by_day[cal_day] = (bases, used)

    feats = tensorio.DatasetManifest()
    todo = list(labelled)
    for i, e in enumerate(todo):
        d = day_of(e.timestamp)
        cal_day = cal_for_day[d]
        if cal_day is None:
            excluded.append({"frame_id": e.frame_id, "reason": f"no calibration day before day {d}"})
            continue
        rx2 = tensorio.read_tensor(data / e.tensor_path)
        p11, p12 = frame_periodograms(rx2, tx, radio, n_prime, m_prime, bases_by_day[cal_day][0], e.frame_id)
        f = assemble_features(p11, p12, dtype=np.float32)
        rel = f"features/{e.frame_id:06d}.tns"
        tensorio.write_tensor(out / rel, f.values)
        extra = {k: v for k, v in e.extra.items() if k in ("stratum", "pairing_gap")}
        extra["source_path"] = e.tensor_path
        extra["calibration_day"] = cal_day
        feats.append(tensorio.ManifestEntry(e.frame_id, e.timestamp, rel, e.label, e.scenario, extra))
        if progress is not None:
            progress(i + 1, len(todo))
    tensorio.write_manifest(out / "manifest.jsonl", feats)
    prov = {
        "radio": radio.to_dict(),
        "n_prime": n_prime,
        "m_prime": m_prime,
        "clutter": {
            f"day{d}": {
                "calibration_frames": used,
                "rank": {pair: b.rank for pair, b in bases.items()},
                "captured_energy": {pair: b.metadata["captured_energy"] for pair, b in bases.items()},
            }
            for d, (bases, used) in sorted(bases_by_day.items())
        },
        "calibration_day_for": {str(k): v for k, v in sorted(cal_for_day.items())},
        "excluded": sorted(excluded, key=lambda x: x["frame_id"]),
        "n_features": len(feats),
    }
    _dump_json(out / "preprocess.json", prov)
    for x in excluded:
        log.info("frame %d excluded: %s", x["frame_id"], x["reason"])
    return prov


# ----------------------------------------------------------------------------
# train
# ----------------------------------------------------------------------------
def _load_features(features_dir, entries, dtype=np.float64):
    root = Path(features_dir)
    return np.stack([tensorio.read_tensor(root / e.tensor_path).astype(dtype) for e in entries])


def _heads(task, bins):
    if task == "classification":
        return [(m, bins.n_classes(m)) for m in METRICS]
    if task == "regression":
        return [(m, 1) for m in METRICS]
    raise ValueError(f"unknown task {task!r}")


def cmd_train(cfg: dict, features_dir, out_dir, task: str, seed: int, epochs=None, progress=None) -> Checkpoint:
    features_dir = Path(features_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tcfg = cfg["train"]
    bins = class_bins(cfg)
    manifest = tensorio.read_manifest(features_dir / "manifest.jsonl")
    plan = build_batches(
        manifest, substream(seed, "split"), tcfg["n_rain"], tcfg["n_no_rain"], tcfg["train_fraction"]
    )
    dtype = np.dtype(tcfg["dtype"])
    train = entries_for(manifest, plan.train_ids)
    raw = _load_features(features_dir, train)
    stats = fit_norm_stats(FeatureTensor(x) for x in raw)
    X = np.stack([apply_norm(FeatureTensor(x), stats).values for x in raw]).astype(dtype)
    del raw
    row = {fid: i for i, fid in enumerate(plan.train_ids)}

    n_prime, m_prime = X.shape[1], X.shape[2]
    model = CnnModel(n_prime, m_prime, _heads(task, bins), X.shape[3], dtype, substream(seed, "init"))
    adam = AdamState.for_params(
        model.params, lr=tcfg["lr"], beta1=tcfg["beta1"], beta2=tcfg["beta2"], eps=tcfg["eps"]
    )

    target_stats, weights = {}, {}
    if task == "classification":
        targets = bins.labels(train)
        if tcfg.get("class_weighting", "inverse_frequency") == "inverse_frequency":
            weights = class_weights(targets, bins)
    else:
        vals = label_values(train)
        targets = {}
        for m, v in vals.items():
            mu, sd = float(v.mean()), float(v.std())
            sd = sd if sd > 0 else 1.0
            target_stats[m] = {"mean": mu, "std": sd}
            targets[m] = (v - mu) / sd

    n_epochs = int(tcfg["epochs"] if epochs is None else epochs)
    log_lines = ["epoch,batch,loss"]
    for ep in range(n_epochs):
        batches = epoch_batches(plan, ep)
        for bi, batch in enumerate(batches):
            idx = np.array([row[f] for f in batch])
            lab = {m: t[idx] for m, t in targets.items()}
            loss, grads = backward(model, X[idx], lab, task, weights or None)
            adam_step(adam, model.params, grads)
            log_lines.append(f"{ep},{bi},{loss!r}")
        if progress is not None:
            progress(ep + 1, n_epochs, float(loss))
    (out / "train_log.csv").write_text("\n".join(log_lines) + "\n")

    ckpt = Checkpoint(
        task=task,
        model=model,
        adam=adam,
        norm_stats=stats,
        class_bins=bins,
        target_stats=target_stats,
        class_weights=weights,
        extra={
            "seed": int(seed),
            "epochs": n_epochs,
            "split": {"train": list(plan.train_ids), "test": list(plan.test_ids)},
            "n_train_batches": len(plan.train_batches),
            "n_test_batches": len(plan.test_batches),
            "batch": {"n_rain": plan.n_rain, "n_no_rain": plan.n_no_rain},
        },
    )
    save_checkpoint(ckpt, out)
    return ckpt


# ----------------------------------------------------------------------------
# eval
# ----------------------------------------------------------------------------
def predict(ckpt: Checkpoint, raw_features: np.ndarray, chunk: int = 100):
    """Class indices and (regression) values per head for unnormalised features."""
    model = ckpt.model
    outs = {m: [] for m in model.head_names}
    for s in range(0, len(raw_features), chunk):
        x = np.stack([apply_norm(FeatureTensor(f), ckpt.norm_stats).values for f in raw_features[s : s + chunk]])
        o = model.forward(x.astype(model.dtype))
        for m in outs:
            outs[m].append(o[m])
    outs = {m: np.concatenate(v) for m, v in outs.items()}
    if ckpt.task == "classification":
        return predict_class(outs), None
    vals = predict_value(outs)
    vals = {m: v * ckpt.target_stats[m]["std"] + ckpt.target_stats[m]["mean"] for m, v in vals.items()}
    cls = {m: ckpt.class_bins.to_class(m, v) for m, v in vals.items()}
    return cls, vals


def cmd_eval(checkpoint_dir, features_dir, out_dir, ids=None):
    from .metrics import EvalReport

    features_dir = Path(features_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = load_checkpoint(checkpoint_dir)
    manifest = tensorio.read_manifest(features_dir / "manifest.jsonl")
    ids = ckpt.extra["split"]["test"] if ids is None else ids
    entries = entries_for(manifest, ids)
    raw = _load_features(features_dir, entries)
    pred_cls, pred_val = predict(ckpt, raw)
    true_cls = ckpt.class_bins.labels(entries)
    true_val = label_values(entries)

    report = EvalReport(ckpt.task)
    for m in METRICS:
        C = ckpt.class_bins.n_classes(m)
        if pred_val is None:
            r = metric_report(m, C, true_cls[m], pred_cls[m])
        else:
            r = metric_report(m, C, true_cls[m], pred_cls[m], true_val[m], pred_val[m])
            write_cdf_csv(out / f"cdf_{m}.csv", r.errors)
        write_confusion_csv(out / f"confusion_{m}.csv", r.confusion, r.class_counts)
        write_pgm(out / f"confusion_{m}.pgm", r.confusion, 0.0, 1.0, cell=32)
        report.metrics[m] = r

    lines = ["frame_id," + ",".join(f"true_{m},pred_{m}" for m in METRICS)]
    for i, e in enumerate(entries):
        cells = []
        for m in METRICS:
            if pred_val is None:
                cells += [str(int(true_cls[m][i])), str(int(pred_cls[m][i]))]
            else:
                cells += [repr(float(true_val[m][i])), repr(float(pred_val[m][i]))]
        lines.append(f"{e.frame_id}," + ",".join(cells))
    (out / "predictions.csv").write_text("\n".join(lines) + "\n")
    _dump_json(out / "summary.json", report.summary())
    return report


# ----------------------------------------------------------------------------
# report
# ----------------------------------------------------------------------------
def cmd_report_periodogram(cfg: dict, data_dir, sample_id: int, out_dir, features_dir=None) -> dict:
    """Render |P|^2 in dB (range x speed) for both polarization pairs as PGM + CSV."""
    data = Path(data_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    radio, tx, manifest = _load_dataset(data)
    idx = manifest.by_id()
    if sample_id not in idx:
        raise KeyError(f"sample {sample_id} not in {data / 'manifest.jsonl'}")
    e = idx[sample_id]
    bases = None
    if features_dir is not None:
        prov = json.loads((Path(features_dir) / "preprocess.json").read_text())
        n_prime, m_prime = prov["n_prime"], prov["m_prime"]
        cal = prov["calibration_day_for"].get(str(day_of(e.timestamp)))
        if cal is not None:
            bases = {
                pair: load_basis(Path(features_dir) / "clutter" / f"day{cal}_{pair}")
                for pair in ("rho1_rho1", "rho1_rho2")
            }
    else:
        n_prime, m_prime = crop_for(cfg, radio)
    rx2 = tensorio.read_tensor(data / e.tensor_path)
    written = {}
    for p in frame_periodograms(rx2, tx, radio, n_prime, m_prime, bases, sample_id):
        db = p.power_db()
        stem = out / f"periodogram_{sample_id:06d}_{p.polarization_pair}"
        hi = float(db.max())
        write_pgm(stem.with_suffix(".pgm"), db, hi - 60.0, hi)
        write_matrix_csv(stem.with_suffix(".csv"), db, p.range_axis(), p.speed_axis())
        written[p.polarization_pair] = str(stem)
    return {"sample_id": sample_id, "clutter_removed": bases is not None, "files": written}
