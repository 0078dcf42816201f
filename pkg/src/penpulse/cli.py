"""Command-line front end.

Subcommands::

    penpulse extract  --input accel.csv --scale 0.000244 --out-dir out/
    penpulse validate --input accel.csv --reference ecg.csv --scale ... --out-dir out/
    penpulse sweep    --input accel.csv --reference ecg.csv --scale ... --grid 0.5:5:0.25
    penpulse synth    --out-dir out/ --seed 3 --hr-bpm 72

Every numeric flag can also come from a ``--config`` file of ``key=value``
lines (keys are flag names without the leading dashes); flags given on the
command line win.  Failures exit with a code from :class:`ExitCode` and a
JSON error document on standard error.
"""

from __future__ import annotations

import argparse
import enum
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import beats as beats_mod
from . import dsp, ingest, synth, tune, validate
from .errors import (
    AlignmentError,
    ConfigError,
    DetectionError,
    ParseError,
    PenpulseError,
    StatisticError,
    StructuralError,
    SweepError,
    UsageError,
)


class ExitCode(enum.IntEnum):
    SUCCESS = 0
    CONFIG_ERROR = 2
    IO_ERROR = 3
    DETECTION_ERROR = 4
    ALIGNMENT_ERROR = 5
    SWEEP_ERROR = 6


_ERROR_CODES = [
    (ConfigError, ExitCode.CONFIG_ERROR, "config_error"),
    (UsageError, ExitCode.CONFIG_ERROR, "config_error"),
    (ParseError, ExitCode.IO_ERROR, "io_error"),
    (StructuralError, ExitCode.IO_ERROR, "io_error"),
    (OSError, ExitCode.IO_ERROR, "io_error"),
    (DetectionError, ExitCode.DETECTION_ERROR, "detection_error"),
    (AlignmentError, ExitCode.ALIGNMENT_ERROR, "alignment_error"),
    (StatisticError, ExitCode.ALIGNMENT_ERROR, "alignment_error"),
    (SweepError, ExitCode.SWEEP_ERROR, "sweep_error"),
]

DEFAULTS = {
    "sample_rate_hz": 100.0,
    "cutoff_hz": 2.0,
    "order": 4,
    "filter_mode": "zero_phase",
    "refractory_s": 0.33,
    "prominence": 0.5,
    "tolerance_s": 0.5,
    "offset_mode": "none",
    "seed": 0,
    "preset": "default",
    "duration_s": 300.0,
    "hr_bpm": 72.0,
}

_TYPES = {
    "input": str, "reference": str, "out_dir": str, "grid": str,
    "scale": float, "sample_rate_hz": float, "cutoff_hz": float, "order": int,
    "filter_mode": str, "refractory_s": float, "prominence": float,
    "tolerance_s": float, "offset_mode": str, "seed": int, "preset": str,
    "duration_s": float, "hr_bpm": float, "hrv_std_s": float,
    "noise_std_g": float, "motion_amplitude_g": float, "dropout": float,
    "debug_dumps": "bool", "reference_as_candidate": "bool",
}


@dataclass
class RunConfig:
    subcommand: str
    input: str | None = None
    reference: str | None = None
    out_dir: str = "."
    scale: ingest.ScaleSpec | None = None
    sample_rate_hz: float = 100.0
    filter: dsp.FilterSpec = field(default_factory=dsp.FilterSpec)
    detector: beats_mod.DetectorSpec = field(default_factory=beats_mod.DetectorSpec)
    alignment: validate.AlignmentSpec = field(default_factory=validate.AlignmentSpec)
    sweep_spec: tune.SweepSpec | None = None
    synth_spec: synth.SynthSpec | None = None
    counts_to_g_out: float = synth.DEFAULT_COUNTS_TO_G
    debug_dumps: bool = False
    reference_as_candidate: bool = False


def parse_grid(text):
    """``lo:hi:step`` (inclusive) or a comma-separated list of cutoffs."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ConfigError("grid step must be positive")
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(float(v) for v in np.round(lo + step * np.arange(n), 10))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"cannot parse grid {text!r}") from None


def read_config_file(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (p.strip() for p in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in _TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _coerce(key, value):
    kind = _TYPES[key]
    if isinstance(value, str):
        if kind == "bool":
            return value.lower() in ("1", "true", "yes", "on")
        try:
            return kind(value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="penpulse", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file supplying any flag below")
        p.add_argument("--out-dir", help="directory for outputs (default: current)")
        p.add_argument("--seed", type=int)

    def pipeline(p, need_reference):
        p.add_argument("--input", help="accelerometer CSV (t,ax,ay,az)")
        if need_reference:
            p.add_argument("--reference", help="reference beats (beat_time_s or rr_ms)")
        p.add_argument("--scale", type=float, help="g per raw count (required)")
        p.add_argument("--sample-rate-hz", type=float)
        p.add_argument("--cutoff-hz", type=float)
        p.add_argument("--order", type=int)
        p.add_argument("--filter-mode", choices=dsp.FILTER_MODES)
        p.add_argument("--refractory-s", type=float)
        p.add_argument("--prominence", type=float, help="prominence factor times robust spread")
        p.add_argument("--tolerance-s", type=float)
        p.add_argument("--offset-mode", choices=validate.OFFSET_MODES)
        p.add_argument("--debug-dumps", action="store_true", default=None)

    p = sub.add_parser("extract", help="detect beats and summarize heart rate")
    common(p)
    pipeline(p, need_reference=False)

    p = sub.add_parser("validate", help="compare detected beats with a reference")
    common(p)
    pipeline(p, need_reference=True)
    p.add_argument(
        "--reference-as-candidate",
        action="store_true",
        default=None,
        help="skip the accelerometer and validate the reference against itself",
    )

    p = sub.add_parser("sweep", help="scan low-pass cutoffs against a reference")
    common(p)
    pipeline(p, need_reference=True)
    p.add_argument("--grid", help="lo:hi:step or comma list (default 0.5:5.0:0.25)")

    p = sub.add_parser("synth", help="write a synthetic accelerometer trace and its truth beats")
    common(p)
    p.add_argument("--preset", choices=sorted(synth.PRESETS))
    p.add_argument("--hr-bpm", type=float)
    p.add_argument("--duration-s", type=float)
    p.add_argument("--sample-rate-hz", type=float)
    p.add_argument("--hrv-std-s", type=float)
    p.add_argument("--noise-std-g", type=float)
    p.add_argument("--motion-amplitude-g", type=float)
    p.add_argument("--dropout", type=float, help="fraction of pulses removed from the signal")
    p.add_argument("--scale", type=float, help=f"g per count when writing (default {synth.DEFAULT_COUNTS_TO_G})")
    return parser


def resolve(args):
    """Merge flags over the config file over defaults into a :class:`RunConfig`."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key, v in vars(args).items():
        if key in _TYPES and v is not None:
            values[key] = v
    values = {k: _coerce(k, v) for k, v in values.items()}

    def get(key):
        return values.get(key, DEFAULTS.get(key))

    cmd = args.subcommand
    cfg = RunConfig(cmd, out_dir=get("out_dir") or ".")
    cfg.sample_rate_hz = get("sample_rate_hz")

    if cmd == "synth":
        fields = {"seed": get("seed"), "mean_hr_bpm": get("hr_bpm"), "duration_s": get("duration_s"),
                  "sample_rate_hz": get("sample_rate_hz")}
        for key, name in (("hrv_std_s", "hrv_std_s"), ("noise_std_g", "noise_std_g"),
                          ("motion_amplitude_g", "writing_motion_amplitude_g"), ("dropout", "dropout_fraction")):
            if key in values:
                fields[name] = values[key]
        cfg.synth_spec = synth.preset(get("preset"), **fields)
        if "scale" in values:
            cfg.counts_to_g_out = ingest.ScaleSpec(values["scale"]).counts_to_g
        return cfg

    if not get("input") and not (cmd == "validate" and get("reference_as_candidate")):
        raise ConfigError(f"{cmd} requires --input")
    if cmd in ("validate", "sweep") and not get("reference"):
        raise ConfigError(f"{cmd} requires --reference")
    cfg.input = get("input")
    cfg.reference = get("reference")
    cfg.reference_as_candidate = bool(get("reference_as_candidate"))
    cfg.debug_dumps = bool(get("debug_dumps"))
    if "scale" not in values and not cfg.reference_as_candidate:
        raise ConfigError("--scale (g per count) is required; it has no default")
    if "scale" in values:
        cfg.scale = ingest.ScaleSpec(values["scale"])

    cfg.filter = dsp.FilterSpec(get("order"), get("cutoff_hz"), get("filter_mode"))
    if cfg.filter.cutoff_hz >= cfg.sample_rate_hz / 2:
        raise ConfigError(f"cutoff {cfg.filter.cutoff_hz} Hz is not below Nyquist")
    cfg.detector = beats_mod.DetectorSpec(get("refractory_s"), get("prominence"))
    cfg.alignment = validate.AlignmentSpec(get("tolerance_s"), get("offset_mode"))
    if cmd == "sweep":
        grid = parse_grid(values["grid"]) if "grid" in values else tune.default_grid()
        cfg.sweep_spec = tune.SweepSpec(grid, cfg.detector, cfg.alignment, cfg.filter.mode)
        cfg.sweep_spec.check_sample_rate(cfg.sample_rate_hz)
    return cfg


def _load_magnitude(cfg):
    raw = ingest.parse_accel_csv(cfg.input, cfg.sample_rate_hz)
    return dsp.magnitude(ingest.rescale(raw, cfg.scale))


def _extract_beats(cfg, outputs):
    mag = _load_magnitude(cfg)
    realization = dsp.design_butterworth(cfg.filter, mag.sample_rate_hz)
    filtered = dsp.apply_filter(mag, realization, cfg.filter.mode)
    found = beats_mod.detect_beats(filtered, cfg.detector)
    if cfg.debug_dumps:
        outputs["magnitude.csv"] = dsp.signal_csv(mag)
        outputs["filtered.csv"] = dsp.signal_csv(filtered)
        outputs["filter_response.csv"] = dsp.response_csv(realization)
    outputs["beats.csv"] = beats_mod.beats_csv(found)
    outputs["dt.csv"] = beats_mod.dt_csv(found)
    return found


def _json(doc):
    return json.dumps(doc, indent=2) + "\n"


def run_extract(cfg):
    outputs = {}
    found = _extract_beats(cfg, outputs)
    summary = beats_mod.summarize(found).to_dict()
    outputs["summary.json"] = _json(summary)
    return outputs, summary


def run_validate(cfg):
    outputs = {}
    reference = ingest.parse_reference(cfg.reference)
    if cfg.reference_as_candidate:
        candidate = beats_mod.BeatSeries(reference.beat_times)
    else:
        candidate = _extract_beats(cfg, outputs)
    report = validate.build_report(reference, candidate, cfg.alignment)
    matched = validate.align(reference, candidate, cfg.alignment)
    outputs["report.json"] = _json(report.to_dict())
    outputs["pairs.csv"] = validate.pairs_csv(matched)
    outputs["boxplot.csv"] = validate.boxplot_csv(reference.rr_intervals, candidate.intervals_s)
    return outputs, report.to_dict()


def run_sweep(cfg):
    reference = ingest.parse_reference(cfg.reference)
    result = tune.sweep(_load_magnitude(cfg), reference, cfg.sweep_spec)
    outputs = {"sweep.csv": tune.sweep_csv(result), "sweep.json": _json(result.to_dict())}
    return outputs, {"best_cutoff_hz": result.best_cutoff_hz}


def run_synth(cfg):
    generated = synth.generate(cfg.synth_spec)
    trace = ingest.to_counts(generated.trace, ingest.ScaleSpec(cfg.counts_to_g_out))
    outputs = {
        "accel.csv": ingest.accel_csv(trace),
        "reference.csv": ingest.reference_csv(generated.truth_beats),
        # lets the generated pair be read back with `--config run.conf`
        "run.conf": f"scale={cfg.counts_to_g_out!r}\nsample-rate-hz={float(cfg.synth_spec.sample_rate_hz)!r}\n",
    }
    rr = generated.truth_rr
    info = {
        "beats": len(generated.truth_beats),
        "truth_mean_hr_bpm": 60.0 / float(np.mean(rr)) if len(rr) else None,
        "dropped_beats": len(generated.dropped_beats),
    }
    return outputs, info


RUNNERS = {"extract": run_extract, "validate": run_validate, "sweep": run_sweep, "synth": run_synth}


def _write_outputs(out_dir, outputs):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in outputs.items():
        with open(out / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def error_document(exc):
    for cls, code, kind in _ERROR_CODES:
        if isinstance(exc, cls):
            return code, {"error": kind, "exit_code": int(code), "message": str(exc)}
    raise exc


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        # outputs are assembled in memory so a failure leaves nothing behind
        outputs, info = RUNNERS[cfg.subcommand](cfg)
        _write_outputs(cfg.out_dir, outputs)
    except (PenpulseError, OSError) as exc:
        code, doc = error_document(exc)
        print(json.dumps(doc), file=sys.stderr)
        return int(code)
    print(json.dumps(info))
    return int(ExitCode.SUCCESS)


if __name__ == "__main__":
    sys.exit(main())
