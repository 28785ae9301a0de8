"""Experiment orchestration behind the CLI subcommands.

Every experiment is a list of independent evaluation jobs. Jobs run on a
bounded process pool; since all error draws are keyed by coordinates,
results do not depend on the number of workers or the schedule.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from undervolt.dataflow import ArrayConfig, ErrorModel, finish_layer, reference_matmul, run_layer
from undervolt.energy import EnergyParams, layer_energy, savings, ted_energy_curve
from undervolt.errmodel import (
    VoltageErrorProfile,
    apply_process_variation,
    chip_sample,
    default_layer_profiles,
    default_profile,
    format_profiles,
    load_profiles,
)
from undervolt.harness import report as rpt
from undervolt.harness.config import Config
from undervolt.harness.errors import DataError, InvariantError
from undervolt.harness.idx import load_images, load_labels
from undervolt.harness.model import Model, load_model, reference_images, reference_labels, reference_manifest
from undervolt.policies import PolicyConfig, PolicyKind
from undervolt.qarith import QTensor, quantize
from undervolt.tuner import Measurement, TunerInput, characterize_profiles, format_assignment, tune_per_layer

log = logging.getLogger(__name__)


# --- workload --------------------------------------------------------------


@dataclass(frozen=True)
class Workload:
    model: Model
    pixels: np.ndarray  # (count, 784) uint8
    labels: np.ndarray
    validation: np.ndarray  # dataset indices
    test: np.ndarray


def make_splits(count: int, validation: int, test: int, seed: int):
    if validation + test > count:
        raise DataError(f"dataset has {count} images; splits need {validation} + {test}")
    perm = np.random.default_rng(seed).permutation(count)
    return np.sort(perm[:validation]), np.sort(perm[validation : validation + test])


def load_workload(cfg: Config) -> Workload:
    model = load_model(cfg.model or reference_manifest())
    images = load_images(cfg.dataset.images or reference_images())
    labels = load_labels(cfg.dataset.labels or reference_labels())
    if len(images) != len(labels):
        raise DataError(f"{len(images)} images but {len(labels)} labels")
    pixels = images.reshape(len(images), -1)
    if pixels.shape[1] != model.dims[0]:
        raise DataError(f"images have {pixels.shape[1]} pixels; model expects {model.dims[0]} inputs")
    val, test = make_splits(len(labels), cfg.splits.validation, cfg.splits.test, cfg.splits.seed)
    return Workload(model, pixels, labels, val, test)


def injected_profiles(cfg: Config, n_layers: int) -> tuple[VoltageErrorProfile, ...]:
    """Ground-truth per-layer profiles the simulated chip exhibits."""
    if cfg.errors.profile:
        return tuple(load_profiles(cfg.errors.profile).resolve(n_layers))
    return tuple(default_layer_profiles(n_layers, cfg.errors.spread))


def energy_params(cfg: Config) -> EnergyParams:
    e = cfg.energy
    return EnergyParams(e.e_mac_nominal, e.razor_overhead, cfg.policy.R, e.zero_skip_cost)


# --- evaluation ------------------------------------------------------------


@dataclass(frozen=True)
class EvalSpec:
    label: str
    policy: PolicyKind
    r_layers: tuple[float, ...]
    profiles: tuple[VoltageErrorProfile, ...] | None
    split: str = "test"
    zero_skip: bool = False
    flat_p: float | None = None
    R: int = 1
    limit: int | None = None


@dataclass
class RunReport:
    label: str
    policy: str
    zero_skip: bool
    split: str
    samples: int
    n: int
    seed: int
    r: list
    layers: list
    accuracy: float
    total_energy: float
    total_cycles: int
    baseline_energy: float
    savings: float
    predictions: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "policy": self.policy,
            "zero_skip": self.zero_skip,
            "split": self.split,
            "samples": self.samples,
            "n": self.n,
            "seed": self.seed,
            "r": list(self.r),
            "layers": self.layers,
            "aggregate": {
                "accuracy": self.accuracy,
                "total_energy": self.total_energy,
                "total_cycles": self.total_cycles,
                "baseline": "golden r=1.0, no zero-skip, no razor",
                "baseline_energy": self.baseline_energy,
                "savings": self.savings,
                "errors": sum(l["errors"] for l in self.layers),
                "dropped": sum(l["dropped"] for l in self.layers),
            },
        }


def quantize_inputs(model: Model, pixels: np.ndarray) -> QTensor:
    return quantize(pixels.T.astype(np.float64) / 255.0, model.layers[0].input_scale)


def run_network(model: Model, pixels, ids, config: ArrayConfig, r_layers, error_model: ErrorModel):
    a = quantize_inputs(model, pixels)
    stats = []
    for li, layer in enumerate(model.layers):
        a, st = run_layer(layer, a, config, r_layers[li], error_model, li, ids)
        stats.append(st)
    return a, stats


def oracle_forward(model: Model, pixels) -> np.ndarray:
    """Direct quantized matmul through the whole network; returns logits."""
    a = quantize_inputs(model, pixels)
    for layer in model.layers:
        a = finish_layer(layer, reference_matmul(layer, a))
    return a


def evaluate(work: Workload, cfg: Config, spec: EvalSpec) -> RunReport:
    ids = work.validation if spec.split == "validation" else work.test
    if spec.limit is not None:
        ids = ids[: spec.limit]
    array = ArrayConfig(cfg.array.n, spec.zero_skip, PolicyConfig(spec.policy, spec.R), cfg.array.batch)
    em = ErrorModel(spec.profiles, cfg.seed, spec.flat_p)
    logits, stats = run_network(work.model, work.pixels[ids], ids, array, spec.r_layers, em)
    pred = np.argmax(logits, axis=0)
    params = energy_params(cfg)
    layers, total_e, base_e = [], 0.0, 0.0
    for st in stats:
        e = layer_energy(st, st.r, params, spec.policy)
        base = (st.executed + st.skipped + st.dropped) * params.e_mac_nominal
        total_e += e
        base_e += base
        layers.append({**st.as_dict(), "energy": e, "baseline_energy": base})
    rep = RunReport(
        label=spec.label,
        policy=spec.policy.label,
        zero_skip=spec.zero_skip,
        split=spec.split,
        samples=len(ids),
        n=cfg.array.n,
        seed=cfg.seed,
        r=list(spec.r_layers),
        layers=layers,
        accuracy=float(np.mean(pred == work.labels[ids])),
        total_energy=total_e,
        total_cycles=sum(st.cycles for st in stats),
        baseline_energy=base_e,
        savings=savings(total_e, base_e),
        predictions=pred,
    )
    check_report(rep)
    return rep


def check_report(rep: RunReport):
    if abs(sum(l["energy"] for l in rep.layers) - rep.total_energy) > 1e-9 * max(1.0, rep.total_energy):
        raise InvariantError("total energy differs from the per-layer sum")
    if sum(l["cycles"] for l in rep.layers) != rep.total_cycles:
        raise InvariantError("total cycles differ from the per-layer sum")
    if not 0.0 <= rep.accuracy <= 1.0:
        raise InvariantError("accuracy outside [0, 1]")


# Jobs fork from the parent, which holds the workload here.
_JOB_STATE: tuple | None = None


def _run_job(spec: EvalSpec) -> RunReport:
    work, cfg = _JOB_STATE
    return evaluate(work, cfg, spec)


def run_jobs(work: Workload, cfg: Config, specs: Sequence[EvalSpec]) -> list[RunReport]:
    global _JOB_STATE
    _JOB_STATE = (work, cfg)
    try:
        if cfg.workers == 1 or len(specs) == 1:
            return [_run_job(s) for s in specs]
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx) as pool:
            return list(pool.map(_run_job, specs))
    finally:
        _JOB_STATE = None


def flat(r: float, n_layers: int) -> tuple[float, ...]:
    return tuple(float(r) for _ in range(n_layers))


# --- experiments -----------------------------------------------------------


@dataclass
class Outcome:
    """What a subcommand produced: the report document plus tables and figures."""

    command: str
    report: dict
    tables: dict = field(default_factory=dict)  # filename -> (header, rows, comment)
    figures: list = field(default_factory=list)  # (plot function name, kwargs)


# Execution settings that must not influence report contents.
_RUNTIME_KEYS = ("workers", "output_dir", "plots")


def _base_report(command: str, cfg: Config) -> dict:
    settings = {k: v for k, v in cfg.to_dict().items() if k not in _RUNTIME_KEYS}
    return {"command": command, "config": settings, "seed": cfg.seed}


def golden(cfg: Config, work: Workload | None = None) -> Outcome:
    work = work or load_workload(cfg)
    L = len(work.model)
    (rep,) = run_jobs(work, cfg, [EvalSpec("golden", PolicyKind.GOLDEN, flat(1.0, L), None)])
    oracle_pred = np.argmax(oracle_forward(work.model, work.pixels[work.test]), axis=0)
    if not np.array_equal(oracle_pred, rep.predictions):
        raise InvariantError("golden run disagrees with the direct quantized matmul oracle")
    oracle_acc = float(np.mean(oracle_pred == work.labels[work.test]))
    doc = _base_report("golden", cfg)
    doc["run"] = rep.as_dict()
    doc["oracle_accuracy"] = oracle_acc
    return Outcome("golden", doc)


def _mean_p(rep: RunReport) -> float:
    slots = sum(l["executed"] for l in rep.layers)
    if not slots:
        return 0.0
    return sum(l["p"] * l["executed"] for l in rep.layers) / slots


def sweep(cfg: Config, work: Workload | None = None) -> Outcome:
    work = work or load_workload(cfg)
    L = len(work.model)
    profiles = injected_profiles(cfg, L)
    policies = [PolicyKind.parse(p) for p in cfg.sweep.policies]
    specs = [EvalSpec("golden", PolicyKind.GOLDEN, flat(1.0, L), None)]
    for pol in policies:
        for r in cfg.voltage.grid:
            specs.append(EvalSpec(f"{pol.label}@r={r:g}", pol, flat(r, L), profiles, R=cfg.policy.R))
    p_specs = [
        EvalSpec(f"{pol.label}@p={p:g}", pol, flat(1.0, L), None, flat_p=p, R=cfg.policy.R)
        for pol in policies
        for p in cfg.sweep.p_grid
    ]
    reps = run_jobs(work, cfg, specs + p_specs)
    golden_rep, r_reps, p_reps = reps[0], reps[1 : len(specs)], reps[len(specs) :]

    rows = [("golden", 1.0, 0.0, golden_rep.accuracy, golden_rep.total_energy, golden_rep.savings)]
    rows += [
        (rep.policy, rep.r[0], _mean_p(rep), rep.accuracy, rep.total_energy, rep.savings) for rep in r_reps
    ]
    p_rows = [
        (rep.policy, rep.layers[0]["p"], rep.accuracy, rep.accuracy - golden_rep.accuracy,
         sum(l["errors"] for l in rep.layers), sum(l["dropped"] for l in rep.layers))
        for rep in p_reps
    ]
    m = cfg.array.n ** 2
    fallback = profiles[-1] if cfg.errors.profile else default_profile()
    params = energy_params(cfg)
    curves = {R: ted_energy_curve(fallback, m=m, R=R, params=params) for R in sorted({1, 5, cfg.policy.R})}
    ted_rows = [(R, *row) for R, curve in curves.items() for row in curve]

    doc = _base_report("sweep", cfg)
    doc["golden"] = golden_rep.as_dict()
    doc["runs"] = [rep.as_dict() for rep in r_reps + p_reps]
    doc["ted_curve"] = {"m": m, "best_savings": {str(R): max(row[-1] for row in c) for R, c in curves.items()}}
    out = Outcome("sweep", doc)
    out.tables["sweep.csv"] = (("policy", "r", "p", "accuracy", "energy", "savings"), rows, None)
    if p_rows:
        out.tables["sweep_p.csv"] = (("policy", "p", "accuracy", "accuracy_delta", "errors", "dropped"), p_rows, None)
    out.tables["ted_curve.csv"] = (("R", "r", "p", "global_rate", "energy", "savings"), ted_rows, f"m={m}")
    out.figures.append(("plot_sweep", {"rows": rows, "golden_accuracy": golden_rep.accuracy}))
    out.figures.append(("plot_ted_curve", {"curves": curves, "m": m}))
    return out


def characterize(cfg: Config, work: Workload, profiles) -> tuple[list[VoltageErrorProfile], list[Measurement]]:
    """Measure per-layer error rates on the validation split at every grid ratio."""
    L = len(work.model)
    grid = sorted(cfg.voltage.grid, reverse=True)
    specs = [EvalSpec(f"measure@r={r:g}", PolicyKind.TED, flat(r, L), tuple(profiles), split="validation") for r in grid]
    reps = dict(zip(grid, run_jobs(work, cfg, specs)))

    def measure(r):
        rep = reps[r]
        return Measurement(r, tuple(l["errors"] for l in rep.layers), tuple(l["executed"] for l in rep.layers))

    return characterize_profiles(measure, grid)


def _tuner_input(cfg: Config, profiles, p_total: float) -> TunerInput:
    return TunerInput(p_total, cfg.voltage.r_min, tuple(profiles), tuple(cfg.voltage.grid))


def _profile_rows(measured, meas):
    rows = []
    for layer, prof in enumerate(measured):
        for m in meas:
            rows.append((layer, m.r, prof(m.r), m.errors[layer], m.executed[layer]))
    return rows


def _budget_rows(results, reps):
    return [
        (res.p_total, res.p_used, rep.accuracy, rep.total_energy, rep.savings, *res.r_star)
        for res, rep in zip(results, reps)
    ]


def tune(cfg: Config, work: Workload | None = None) -> Outcome:
    work = work or load_workload(cfg)
    L = len(work.model)
    truth = injected_profiles(cfg, L)
    measured, meas = characterize(cfg, work, truth)
    results = [tune_per_layer(_tuner_input(cfg, measured, pt)) for pt in cfg.voltage.p_total_grid]
    specs = [EvalSpec("golden", PolicyKind.GOLDEN, flat(1.0, L), None)]
    specs += [EvalSpec(f"dynamic@p_total={res.p_total:g}", PolicyKind.TEDROP, res.r_star, truth) for res in results]
    reps = run_jobs(work, cfg, specs)
    golden_rep, reps = reps[0], reps[1:]

    doc = _base_report("tune", cfg)
    doc["golden"] = golden_rep.as_dict()
    doc["runs"] = [rep.as_dict() for rep in reps]
    out = Outcome("tune", doc)
    r_cols = tuple(f"r_{j}" for j in range(L))
    out.tables["profiles.csv"] = (("layer_id", "r", "p", "errors", "executed"), _profile_rows(measured, meas), None)
    out.tables["budget.csv"] = (
        ("p_total", "p_used", "accuracy", "energy", "savings") + r_cols, _budget_rows(results, reps), None
    )
    out.tables["tuned.csv"] = (
        ("p_total", "layer_id", "r_star", "p_at_r_star"),
        [(res.p_total, j, r, p) for res in results for j, (r, p) in enumerate(zip(res.r_star, res.p_star))],
        f"r_min={cfg.voltage.r_min:g}",
    )
    out.figures.append(("plot_profiles", {"measured": measured, "truth": truth, "grid": cfg.voltage.grid}))
    out.figures.append(("plot_budget", {"rows": _budget_rows(results, reps), "golden_accuracy": golden_rep.accuracy}))
    return out


@dataclass
class Selection:
    result: object
    validation: RunReport
    golden_validation: RunReport
    candidates: list
    measured: list
    meas: list


def select_design(cfg: Config, work: Workload) -> Selection:
    """Lowest-energy dynamic design point whose validation accuracy loss is below the threshold."""
    L = len(work.model)
    truth = injected_profiles(cfg, L)
    measured, meas = characterize(cfg, work, truth)
    results = [tune_per_layer(_tuner_input(cfg, measured, pt)) for pt in cfg.voltage.p_total_grid]
    specs = [EvalSpec("golden", PolicyKind.GOLDEN, flat(1.0, L), None, split="validation")]
    specs += [
        EvalSpec(f"dynamic@p_total={res.p_total:g}", PolicyKind.TEDROP, res.r_star, truth, split="validation")
        for res in results
    ]
    reps = run_jobs(work, cfg, specs)
    golden_val, reps = reps[0], reps[1:]
    ok = [
        (rep.total_energy, i)
        for i, rep in enumerate(reps)
        if golden_val.accuracy - rep.accuracy < cfg.select.max_loss
    ]
    if not ok:
        # The nominal assignment loses nothing, so this only happens with max_loss = 0.
        best = 0
    else:
        best = min(ok)[1]
    return Selection(results[best], reps[best], golden_val, list(zip(results, reps)), measured, meas)


def select(cfg: Config, work: Workload | None = None) -> Outcome:
    work = work or load_workload(cfg)
    L = len(work.model)
    truth = injected_profiles(cfg, L)
    sel = select_design(cfg, work)
    res = sel.result
    golden_test, chosen_test = run_jobs(
        work,
        cfg,
        [
            EvalSpec("golden", PolicyKind.GOLDEN, flat(1.0, L), None),
            EvalSpec(f"dynamic@p_total={res.p_total:g}", PolicyKind.TEDROP, res.r_star, truth),
        ],
    )
    doc = _base_report("select", cfg)
    doc["selected"] = {
        "p_total": res.p_total,
        "r_star": list(res.r_star),
        "p_star": list(res.p_star),
        "validation_accuracy": sel.validation.accuracy,
        "validation_golden_accuracy": sel.golden_validation.accuracy,
        "validation_savings": sel.validation.savings,
        "test_accuracy": chosen_test.accuracy,
        "test_golden_accuracy": golden_test.accuracy,
        "test_accuracy_loss": golden_test.accuracy - chosen_test.accuracy,
        "test_savings": chosen_test.savings,
    }
    doc["golden"] = golden_test.as_dict()
    doc["run"] = chosen_test.as_dict()
    doc["validation_runs"] = [rep.as_dict() for _, rep in sel.candidates]
    out = Outcome("select", doc)
    r_cols = tuple(f"r_{j}" for j in range(L))
    results, reps = zip(*sel.candidates)
    out.tables["budget.csv"] = (
        ("p_total", "p_used", "accuracy", "energy", "savings") + r_cols, _budget_rows(results, reps), "validation split"
    )
    out.tables["tuned.csv"] = (
        ("layer_id", "r_star", "p_at_r_star"),
        [(j, r, p) for j, (r, p) in enumerate(zip(res.r_star, res.p_star))],
        f"p_total={res.p_total:.6g} r_min={res.r_min:.6g}",
    )
    out.tables["profiles.csv"] = (("layer_id", "r", "p", "errors", "executed"), _profile_rows(sel.measured, sel.meas), None)
    out.figures.append(("plot_budget", {"rows": _budget_rows(results, reps), "golden_accuracy": sel.golden_validation.accuracy}))
    return out


def chip_seed(seed: int, chip: int) -> int:
    return int(np.random.SeedSequence([seed, chip]).generate_state(1, np.uint64)[0])


def variation(cfg: Config, work: Workload | None = None) -> Outcome:
    """Repeat the configured design point (voltage.p_total) over sampled chips.

    Each chip's per-layer profiles are the injected ones with a Gaussian delay
    factor applied; the chip is tuned on its own profiles (ideal per-chip
    characterization) and evaluated on the first ``variation.samples`` test images.
    """
    work = work or load_workload(cfg)
    L = len(work.model)
    truth = injected_profiles(cfg, L)
    pt, limit, sigma = cfg.voltage.p_total, cfg.variation.samples, cfg.variation.sigma
    chips = [(None, 1.0, truth)]
    for c in range(cfg.variation.chips):
        s = chip_seed(cfg.seed, c)
        chips.append((c, chip_sample(sigma, s).factor, tuple(apply_process_variation(p, sigma, s) for p in truth)))
    results = [tune_per_layer(_tuner_input(cfg, profs, pt)) for _, _, profs in chips]
    specs = [
        EvalSpec("nominal" if c is None else f"chip{c}", PolicyKind.TEDROP, res.r_star, profs, limit=limit)
        for (c, _, profs), res in zip(chips, results)
    ]
    reps = run_jobs(work, cfg, specs)
    nominal, chip_reps = reps[0], reps[1:]
    sav = np.array([r.savings for r in chip_reps])
    acc = np.array([r.accuracy for r in chip_reps])
    doc = _base_report("variation", cfg)
    doc["nominal"] = nominal.as_dict()
    doc["summary"] = {
        "chips": len(chip_reps),
        "sigma": sigma,
        "p_total": pt,
        "nominal_savings": nominal.savings,
        "mean_savings": float(sav.mean()),
        "std_savings": float(sav.std()),
        "mean_accuracy": float(acc.mean()),
        "nominal_accuracy": nominal.accuracy,
        "mean_factor": float(np.mean([f for c, f, _ in chips[1:]])),
    }
    doc["chips"] = [
        {"chip": c, "factor": f, "r_star": list(res.r_star), "accuracy": rep.accuracy, "savings": rep.savings}
        for (c, f, _), res, rep in zip(chips[1:], results[1:], chip_reps)
    ]
    out = Outcome("variation", doc)
    r_cols = tuple(f"r_{j}" for j in range(L))
    rows = [
        (-1 if c is None else c, f, rep.accuracy, rep.total_energy, rep.savings, *res.r_star)
        for (c, f, _), res, rep in zip(chips, results, reps)
    ]
    out.tables["variation.csv"] = (("chip", "factor", "accuracy", "energy", "savings") + r_cols, rows, "chip -1 is the nominal chip")
    out.figures.append(("plot_variation", {"savings": sav.tolist(), "nominal": nominal.savings}))
    return out


COMPARE_LABELS = {
    "A": "base",
    "B": "base+dynamic",
    "C": "zero-skip",
    "D": "zero-skip+dynamic",
}


def compare(cfg: Config, work: Workload | None = None) -> Outcome:
    """Baseline, dynamic undervolting, Zero-Skip and both, on the test split."""
    work = work or load_workload(cfg)
    L = len(work.model)
    truth = injected_profiles(cfg, L)
    sel = select_design(cfg, work)
    r_star = sel.result.r_star
    specs = [
        EvalSpec("A", PolicyKind.GOLDEN, flat(1.0, L), None),
        EvalSpec("B", PolicyKind.TEDROP, r_star, truth),
        EvalSpec("C", PolicyKind.GOLDEN, flat(1.0, L), None, zero_skip=True),
        EvalSpec("D", PolicyKind.TEDROP, r_star, truth, zero_skip=True),
    ]
    a, b, c, d = reps = run_jobs(work, cfg, specs)
    summary = {
        "p_total": sel.result.p_total,
        "r_star": list(r_star),
        "accuracy": {rep.label: rep.accuracy for rep in reps},
        "energy": {rep.label: rep.total_energy for rep in reps},
        "savings_vs_base": {rep.label: savings(rep.total_energy, a.total_energy) for rep in reps},
        "savings_B_over_A": savings(b.total_energy, a.total_energy),
        "savings_D_over_C": savings(d.total_energy, c.total_energy),
    }
    doc = _base_report("compare", cfg)
    doc["summary"] = summary
    doc["runs"] = [rep.as_dict() for rep in reps]
    out = Outcome("compare", doc)
    rows = []
    for rep in reps:
        for layer in rep.layers:
            base = a.layers[layer["layer"]]["energy"]
            rows.append((rep.label, COMPARE_LABELS[rep.label], layer["layer"], layer["energy"], savings(layer["energy"], base)))
        rows.append((rep.label, COMPARE_LABELS[rep.label], "total", rep.total_energy, savings(rep.total_energy, a.total_energy)))
    out.tables["compare.csv"] = (("config", "name", "layer", "energy", "savings_vs_base"), rows, None)
    out.figures.append(("plot_compare", {"reps": [(rep.label, [l["energy"] for l in rep.layers]) for rep in reps]}))
    return out


COMMANDS = {
    "golden": golden,
    "sweep": sweep,
    "tune": tune,
    "select": select,
    "variation": variation,
    "compare": compare,
}


def run_experiment(command: str, cfg: Config, work: Workload | None = None, write: bool = True) -> Outcome:
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    outcome = COMMANDS[command](cfg, work)
    if write:
        write_outputs(outcome, cfg)
    return outcome


def write_outputs(outcome: Outcome, cfg: Config):
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rpt.write_json(out_dir / "report.json", outcome.report)
    for name, (header, rows, comment) in outcome.tables.items():
        rpt.write_csv(out_dir / name, header, rows, comment)
    if cfg.plots and outcome.figures:
        from undervolt.harness import figures

        for name, kwargs in outcome.figures:
            getattr(figures, name)(out_dir=out_dir, **kwargs)
