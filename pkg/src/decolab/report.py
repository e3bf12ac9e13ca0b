"""Report records and their text and JSON renderings."""

from __future__ import annotations

import hashlib
import json
from collections.abc import Mapping

import numpy as np

from . import __version__
from . import vnalgebra as va
from .circuit import HistoryDistribution

TRIVIAL = "⋆"
PROB_FORMAT = "%.12g"
_AXES = {"X": np.array([1.0, 0, 0]), "Y": np.array([0, 1.0, 0]), "Z": np.array([0, 0, 1.0])}
_KETS = {
    "|0⟩": np.array([1, 0]),
    "|1⟩": np.array([0, 1]),
    "|+⟩": np.array([1, 1]) / np.sqrt(2),
    "|−⟩": np.array([1, -1]) / np.sqrt(2),
    "|+i⟩": np.array([1, 1j]) / np.sqrt(2),
    "|−i⟩": np.array([1, -1j]) / np.sqrt(2),
}


def fmt_prob(p: float) -> str:
    return PROB_FORMAT % (0.0 if abs(p) < 5e-13 else p)


def fingerprint(alg: va.OperatorAlgebra) -> str:
    """Basis-independent hash of the span projector, rounded to 8 decimals."""
    v = alg.basis.reshape(alg.dim, -1)
    proj = v.T @ np.conj(v)
    parts = np.round(np.concatenate([proj.real.ravel(), proj.imag.ravel()]), 8) + 0.0
    return hashlib.sha256(parts.tobytes()).hexdigest()[:16]


def _bloch(h: np.ndarray) -> np.ndarray:
    return np.array([np.trace(h @ p).real for p in (
        np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]]))])


def algebra_label(alg: va.OperatorAlgebra) -> str:
    """Short name: ⋆, ⟨Z⟩-style for two-dimensional qubit algebras, else the block shape."""
    d = alg.ambient_dim
    if alg.is_trivial():
        return TRIVIAL
    if alg.is_full():
        return f"L(C^{d})"
    if d == 2 and alg.dim == 2:
        herm = [h - np.trace(h) / 2 * np.eye(2) for h in alg.hermitian_basis]
        h = max(herm, key=lambda x: np.linalg.norm(x))
        n = _bloch(h)
        n = n / np.linalg.norm(n)
        for name, axis in _AXES.items():
            if np.linalg.norm(np.abs(n) - axis) < 1e-9:
                return f"⟨{name}⟩"
        n = n * np.sign(n[np.argmax(np.abs(n) > 1e-9)])
        return "⟨n·σ⟩ n=(" + ", ".join("%.6f" % (x + 0.0) for x in n) + ")"
    blocks = va.block_structure(alg).dims()
    return " ⊕ ".join(f"L(C^{l})⊗I_{r}" for l, r in blocks)


def event_label(projector: np.ndarray) -> str:
    p = np.asarray(projector)
    if p.shape == (2, 2) and abs(np.trace(p).real - 1) < 1e-9:
        for name, ket in _KETS.items():
            if np.linalg.norm(p - np.outer(ket, np.conj(ket))) < 1e-9:
                return name
    rank = int(round(np.trace(p).real))
    return f"rank-{rank}"


def algebra_summary(alg: va.OperatorAlgebra, seed: int = 0) -> dict:
    bs = va.block_structure(alg, seed)
    return {
        "label": algebra_label(alg),
        "dim": alg.dim,
        "blocks": [[l, r] for l, r in bs.dims()],
        "fingerprint": fingerprint(alg),
    }


def events_summary(dec: va.SubspaceDecomposition) -> list[str]:
    return [event_label(p) for p in dec.projectors]


def system_summary(analysis, seed: int = 0) -> dict:
    out = {}
    for direction in ("up", "down"):
        out[direction] = {
            kind: algebra_summary(getattr(analysis, f"{direction}_{kind}"), seed) for kind in ("pacc", "acc", "dec")
        }
        out[direction]["events"] = events_summary(getattr(analysis, f"{direction}_events"))
    return out


def history_rows(hd: HistoryDistribution) -> tuple[list[str], list[dict]]:
    names = hd.nontrivial()
    idx = [hd.index(n) for n in names]
    others = tuple(i for i in range(len(hd.variables)) if i not in idx)
    table = hd.table.sum(axis=others) if others else hd.table
    rows = []
    for key in np.ndindex(*table.shape):
        rows.append({"history": dict(zip(names, (int(k) for k in key))), "probability": fmt_prob(float(table[key]))})
    return names, rows


def base_report(command: str, digest: str, seed: int) -> dict:
    return {"tool": "decolab", "version": __version__, "command": command, "input_digest": digest, "seed": seed}


def emit(report: Mapping, fmt: str = "text") -> bytes:
    if fmt == "structured":
        return (json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    return (render_text(report) + "\n").encode("utf-8")


def _kv(d: Mapping, keys) -> str:
    return "  ".join(f"{k}={d[k]}" for k in keys if k in d)


def render_text(report: Mapping) -> str:
    lines = [f"decolab {report['version']}  {report['command']}  input {report['input_digest'][:16]}  seed {report['seed']}"]
    if "channel" in report:
        ch = report["channel"]
        lines.append(f"channel  in {ch['in_split']}  out {ch['out_split']}")
    for key in ("acc", "pacc", "dec", "rob", "rotating_frame_robust"):
        if key in report:
            a = report[key]
            lines.append(f"{key:<22} {a['label']:<12} dim {a['dim']:<3} blocks {a['blocks']}")
    if "events" in report:
        lines.append("events  " + "  ".join(report["events"]))
    if "influences" in report:
        lines.append("influences")
        for k in sorted(report["influences"]):
            lines.append(f"  {k:<28} {report['influences'][k]}")
    if "control_form" in report:
        cf = report["control_form"]
        lines.append("control form  " + ("absent" if cf is None else f"{len(cf['basis'])} branches"))
    if "systems" in report:
        lines.append(f"{'system':<10} {'up dec':<14} {'e events':<16} {'down dec':<14} {'f events':<16}")
        for name, s in report["systems"].items():
            lines.append(
                f"{name:<10} {s['up']['dec']['label']:<14} {' '.join(s['up']['events']):<16} "
                f"{s['down']['dec']['label']:<14} {' '.join(s['down']['events']):<16}"
            )
    if "histories" in report:
        h = report["histories"]
        lines.append("histories over " + (", ".join(h["variables"]) or "(no nontrivial events)"))
        for row in h["rows"]:
            lines.append("  " + " ".join(f"{k}={v}" for k, v in row["history"].items()) + f"  {row['probability']}")
        lines.append(f"  total {h['total']}")
    if "consistency" in report:
        c = report["consistency"]
        lines.append("consistency " + ("passed" if c["passed"] else "FAILED " + ", ".join(c["violations"])))
    if "oracle" in report:
        o = report["oracle"]
        lines.append("broken-wire oracle " + ("passed" if o["passed"] else "FAILED " + ", ".join(o["failures"])))
    if "probability" in report:
        lines.append(f"probability {_kv(report, ['assignment'])}  {report['probability']}")
    if "conditional" in report:
        c = report["conditional"]
        lines.append(f"Prob({', '.join(c['targets'])} | {c['given']})")
        for k in sorted(c["distribution"]):
            lines.append(f"  {k}  {c['distribution'][k]}")
    if "sieve" in report:
        lines.append(f"{'state':<14} {'max loss':>14}  zero  pacc  <eps")
        for r in report["sieve"]:
            lines.append(f"{r['state']:<14} {r['max_loss']:>14}  {str(r['zero_loss']):<5} {str(r['in_pacc']):<5} {r['below_epsilon']}")
    if "valid" in report:
        lines.append(f"valid {report['kind']} document" + (f"  {report['summary']}" if report.get("summary") else ""))
    return "\n".join(lines)
