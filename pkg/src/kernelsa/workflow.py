"""The sequential sensitivity loop, simulator adapters, and persistence.

``run`` drives evaluate -> fit -> analytic indices -> stopping criterion ->
propose batch, flushing the design and trace to disk every iteration so an
interrupted run can resume from the files alone. All randomness is derived
per iteration from the run seed, so a resumed run and an uninterrupted run
produce identical outputs.

File layout in the output directory: ``design.csv`` (iteration, stage,
coordinates, response), ``trace.csv`` (iteration, N, S_i, ST_i, nu_i,
criterion values), ``report.json`` (final indices plus run metadata),
and figures rendered from the CSVs.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic, design, stopping, surrogate
from .benchmarks import get_benchmark
from .core import (
    DesignData,
    EvaluationError,
    FitError,
    InputSpace,
    IterationRecord,
    SensitivityReport,
    StoppingTrace,
    denormalize,
)

INFILL_METHODS = ("lola", "density")
CRITERIA = ("mean", "max")

DESIGN_FILE = "design.csv"
TRACE_FILE = "trace.csv"
REPORT_FILE = "report.json"

# spawn_key roles for per-iteration child seeds
_ROLE_DESIGN, _ROLE_FIT, _ROLE_CV = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    """Everything a sequential run needs; validated on construction.

    Exactly one of ``simulator`` (builtin benchmark name) or ``command``
    (external executable speaking the line protocol) must be set. The
    stopping ``threshold`` has no default on purpose: it is application
    specific and must be chosen by the user.
    """

    space: InputSpace
    simulator: str | None = None
    command: str | None = None
    kernel: str = "matern32"
    mode: str = "interpolating"
    ard: bool | None = None
    gamma: float | None = None
    n0: int | None = None
    batch: int = 10
    budget: int = 300
    infill: str = "lola"
    family: str = "sobol_main"
    criterion: str = "mean"
    threshold: float = 0.0
    folds: int = 5
    consecutive: int = 2
    quad_order: int = 64
    seed: int = 0
    outdir: str = "."
    timeout: float = 3600.0
    plots: bool = True
    interactions: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        d = self.space.d
        if (self.simulator is None) == (self.command is None):
            raise ValueError("set exactly one of simulator (builtin) or command (external)")
        if self.simulator is not None:
            bench = get_benchmark(self.simulator)
            if bench.space.d != d:
                raise ValueError(
                    f"benchmark {self.simulator!r} has {bench.space.d} inputs, space has {d}"
                )
        if self.n0 is None:
            object.__setattr__(self, "n0", max(10, 2 * (d + 1)))
        if self.n0 < d + 2:
            raise ValueError(f"n0 must be at least d + 2 = {d + 2}, got {self.n0}")
        if self.batch < 1:
            raise ValueError("batch must be at least 1")
        if self.budget < self.n0:
            raise ValueError(f"budget {self.budget} is below the initial size {self.n0}")
        if self.threshold <= 0.0:
            raise ValueError("a positive stopping threshold is required")
        if self.infill not in INFILL_METHODS:
            raise ValueError(f"infill must be one of {INFILL_METHODS}, got {self.infill!r}")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.family not in stopping.CRITERION_FAMILIES:
            raise ValueError(
                f"family must be one of {stopping.CRITERION_FAMILIES}, got {self.family!r}"
            )
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.consecutive < 1:
            raise ValueError("consecutive must be at least 1")
        if self.interactions is not None:
            inter = tuple(tuple(int(i) for i in group) for group in self.interactions)
            for group in inter:
                if len(group) < 2 or len(set(group)) != len(group):
                    raise ValueError(f"interaction groups need >= 2 distinct dims, got {group}")
                if min(group) < 0 or max(group) >= d:
                    raise ValueError(f"interaction dims out of range in {group}")
            object.__setattr__(self, "interactions", inter)


def child_seed(seed: int, iteration: int, role: int) -> int:
    """Deterministic per-(iteration, role) seed derived from the run seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(iteration, role))
    return int(ss.generate_state(1)[0])


def _fmt(value: float) -> str:
    # shortest decimal form that round-trips the exact double
    return repr(float(value))


def external_simulator_eval(command, points, timeout: float = 3600.0) -> np.ndarray:
    """Evaluate a batch through an external executable.

    Protocol: one point per line on the child's stdin, coordinates in original
    units separated by single commas ('.' decimal separator, UTF-8, newline
    terminated), stdin closed after the batch; the child prints one response
    per line in order and exits 0. Anything else raises
    :class:`EvaluationError` with the child's raw output attached.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    payload = "".join(",".join(_fmt(v) for v in row) + "\n" for row in points)
    try:
        proc = subprocess.run(
            argv,
            input=payload.encode("utf-8"),
            capture_output=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise EvaluationError(
            f"simulator {argv[0]!r} timed out after {timeout} s on a {n}-point batch"
        ) from exc
    except OSError as exc:
        raise EvaluationError(f"could not start simulator {argv[0]!r}: {exc}") from exc
    stdout = proc.stdout.decode("utf-8", errors="replace")
    stderr = proc.stderr.decode("utf-8", errors="replace")
    if proc.returncode != 0:
        err = EvaluationError(
            f"simulator exited with status {proc.returncode}; stderr tail: "
            + stderr[-2000:]
        )
        err.child_output = stdout + stderr
        raise err
    lines = [line for line in stdout.splitlines() if line.strip()]
    if len(lines) != n:
        err = EvaluationError(f"expected {n} response lines, got {len(lines)}")
        err.child_output = stdout + stderr
        raise err
    responses = np.empty(n)
    for i, line in enumerate(lines):
        try:
            responses[i] = float(line.strip())
        except ValueError:
            err = EvaluationError(f"malformed response line {i + 1}: {line.strip()!r}")
            err.child_output = stdout + stderr
            raise err from None
        if not np.isfinite(responses[i]):
            err = EvaluationError(f"non-finite response on line {i + 1}: {line.strip()!r}")
            err.child_output = stdout + stderr
            raise err
    return responses


def _make_evaluator(config: RunConfig):
    if config.command is not None:
        def evaluate(pts_norm: np.ndarray) -> np.ndarray:
            physical = denormalize(config.space, pts_norm)
            return external_simulator_eval(config.command, physical, timeout=config.timeout)

        return evaluate
    f = get_benchmark(config.simulator).unit_function()

    def evaluate(pts_norm: np.ndarray) -> np.ndarray:
        values = np.asarray(f(pts_norm), dtype=float)
        if not np.all(np.isfinite(values)):
            raise EvaluationError("builtin simulator returned a non-finite value")
        return values

    return evaluate


# ---------------------------------------------------------------------------
# persistence


def _design_header(space: InputSpace) -> str:
    return ",".join(["iteration", "stage", *space.names, "response"])


def _append_design_rows(path: Path, space: InputSpace, iteration: int, stage: str,
                        points: np.ndarray, responses: np.ndarray) -> None:
    new_file = not path.exists()
    with path.open("a", encoding="utf-8", newline="\n") as fh:
        if new_file:
            fh.write(_design_header(space) + "\n")
        for row, y in zip(points, responses):
            fh.write(f"{iteration},{stage}," + ",".join(_fmt(v) for v in row)
                     + f",{_fmt(y)}\n")


def read_design_csv(path, space: InputSpace | None = None):
    """Load a flushed design file.

    Returns (points, responses, iterations, stages). Accepts both files
    written by :func:`run` and bare tables whose header is coordinate names
    followed by ``response``.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise EvaluationError(f"design file {path} is empty")
    header = lines[0].split(",")
    tagged = header[:2] == ["iteration", "stage"]
    coord_names = header[2:-1] if tagged else header[:-1]
    if header[-1] != "response":
        raise EvaluationError(f"design file {path} must end with a 'response' column")
    if space is not None and len(coord_names) != space.d:
        raise EvaluationError(
            f"design file has {len(coord_names)} coordinates, expected {space.d}"
        )
    points, responses, iterations, stages = [], [], [], []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise EvaluationError(f"{path}:{ln}: expected {len(header)} cells, got {len(cells)}")
        if tagged:
            iterations.append(int(cells[0]))
            stages.append(cells[1])
            cells = cells[2:]
        else:
            iterations.append(0)
            stages.append("loaded")
        points.append([float(c) for c in cells[:-1]])
        responses.append(float(cells[-1]))
    return (
        np.asarray(points, dtype=float),
        np.asarray(responses, dtype=float),
        np.asarray(iterations, dtype=int),
        stages,
    )


def _trace_header(d: int) -> str:
    cols = ["iteration", "N"]
    cols += [f"S_{i + 1}" for i in range(d)]
    cols += [f"ST_{i + 1}" for i in range(d)]
    cols += [f"nu_{i + 1}" for i in range(d)]
    cols += ["criterion_mean", "criterion_max", "criterion_max_undivided"]
    return ",".join(cols)


def _append_trace_row(path: Path, d: int, iteration: int, n: int,
                      report: SensitivityReport, cv: stopping.IndexCvResult) -> None:
    new_file = not path.exists()
    values = [
        *report.main, *report.total, *report.dgsm,
        cv.mean, cv.max, cv.max_undivided,
    ]
    with path.open("a", encoding="utf-8", newline="\n") as fh:
        if new_file:
            fh.write(_trace_header(d) + "\n")
        fh.write(f"{iteration},{n}," + ",".join(_fmt(v) for v in values) + "\n")


def read_trace_csv(path):
    """Load a trace file into a list of per-iteration dict rows."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split(",")
        row = {}
        for key, cell in zip(header, cells):
            row[key] = int(cell) if key in ("iteration", "N") else float(cell)
        rows.append(row)
    return rows


def _trace_from_rows(rows) -> StoppingTrace:
    records = []
    for row in rows:
        records.append(
            IterationRecord(
                sample_count=row["N"],
                criterion_values={
                    "mean": row["criterion_mean"],
                    "max": row["criterion_max"],
                    "max_undivided": row["criterion_max_undivided"],
                },
            )
        )
    return StoppingTrace(tuple(records))


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _report_payload(config: RunConfig, report: SensitivityReport,
                    trace: StoppingTrace, stopped: str, n: int, info: dict) -> dict:
    payload = {
        "simulator": config.simulator if config.simulator else config.command,
        "kernel": config.kernel,
        "mode": config.mode,
        "seed": config.seed,
        "n0": config.n0,
        "batch": config.batch,
        "budget": config.budget,
        "infill": config.infill,
        "family": config.family,
        "criterion": config.criterion,
        "threshold": config.threshold,
        "folds": config.folds,
        "quad_order": config.quad_order,
        "space": {
            "names": list(config.space.names),
            "lower": config.space.lower.tolist(),
            "upper": config.space.upper.tolist(),
        },
        "samples": n,
        "iterations": len(trace),
        "stopped": stopped,
        "theta": info["theta"],
        "gamma": info["gamma"],
        "total_variance": report.total_variance,
        "main": report.main,
        "total": report.total,
        "dgsm": report.dgsm,
        "dgsm_bound": report.dgsm_bound,
        "dgsm_scale": report.dgsm_scale,
        "sample_counts": [r.sample_count for r in trace],
        "criterion_trace": {
            key: [r.criterion_values[key] for r in trace]
            for key in ("mean", "max", "max_undivided")
        },
    }
    if report.interactions:
        payload["interactions"] = {
            "+".join(str(i + 1) for i in dims): value
            for dims, value in report.interactions.items()
        }
    return _jsonable(payload)


def _write_report(path: Path, payload: dict) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# the loop


def _fit_iteration(data: DesignData, config: RunConfig, seed: int):
    try:
        return surrogate.fit(
            data,
            kernel=config.kernel,
            mode=config.mode,
            gamma=config.gamma,
            ard=config.ard,
            seed=seed,
            return_info=True,
        )
    except FitError:
        # one retry on a stiffer diagonal before giving up
        return surrogate.fit(
            data,
            kernel=config.kernel,
            mode=config.mode,
            gamma=config.gamma,
            ard=config.ard,
            seed=seed,
            return_info=True,
            jitter_start=surrogate.JITTER_MAX_FACTOR,
            jitter_max=1e2,
        )


def _indices_for_iteration(data: DesignData, config: RunConfig, iteration: int):
    model, info = _fit_iteration(data, config, child_seed(config.seed, iteration, _ROLE_FIT))
    table = analytic.build_integral_table(
        model, quad_order=config.quad_order, self_check=iteration == 0
    )
    report = analytic.full_report(
        model, table, space=config.space, interactions=config.interactions
    )
    cv = stopping.index_cv(
        data,
        k=config.folds,
        family=config.family,
        kernel=config.kernel,
        mode=config.mode,
        theta=info["theta"],
        gamma=info["gamma"],
        ard=config.ard,
        quad_order=config.quad_order,
        seed=child_seed(config.seed, iteration, _ROLE_CV),
    )
    return model, info, report, cv


def _propose_points(data: DesignData, config: RunConfig, iteration: int, k: int) -> np.ndarray:
    seed = child_seed(config.seed, iteration, _ROLE_DESIGN)
    if config.infill == "lola":
        return design.lola_voronoi_batch(data, k, seed=seed).points
    return design.density_batch(data, k, seed=seed).points


def run(config: RunConfig, resume: bool = False):
    """Run the sequential loop to convergence or budget.

    Returns (final report, stopping trace, final design). With ``resume`` the
    flushed ``design.csv``/``trace.csv`` in the output directory are loaded
    and the loop continues where it stopped; criterion history replayed from
    the trace file omits per-fold index vectors.
    """
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    design_path = outdir / DESIGN_FILE
    trace_path = outdir / TRACE_FILE
    report_path = outdir / REPORT_FILE

    evaluator = _make_evaluator(config)
    space = config.space

    data: DesignData | None = None
    trace = StoppingTrace()
    evaluated_iters = 0
    if resume and design_path.exists():
        points, responses, iters, stages = read_design_csv(design_path, space)
        data = DesignData(space, points, responses, tuple(stages))
        evaluated_iters = int(iters.max()) + 1
        if trace_path.exists():
            trace = _trace_from_rows(read_trace_csv(trace_path))
        if len(trace) > evaluated_iters:
            raise EvaluationError("trace file has more iterations than the design file")
    else:
        for stale in (design_path, trace_path, report_path):
            stale.unlink(missing_ok=True)

    report = model = info = None
    stopped = "running"
    iteration = 0
    while True:
        if iteration >= evaluated_iters:
            # grow the design for this iteration and flush it before fitting
            if iteration == 0:
                pts_norm = design.initial_lhs(
                    space.d, config.n0, seed=child_seed(config.seed, 0, _ROLE_DESIGN)
                )
                stage = "initial"
            else:
                k = min(config.batch, config.budget - data.n)
                pts_norm = _propose_points(data, config, iteration, k)
                stage = f"batch-{iteration}"
            responses = evaluator(pts_norm)
            physical = denormalize(space, pts_norm)
            if data is None:
                data = DesignData(space, physical, responses, (stage,) * len(responses))
            else:
                data = data.extended(physical, responses, stage)
            _append_design_rows(design_path, space, iteration, stage, physical, responses)
            evaluated_iters = iteration + 1

        if iteration >= len(trace):
            model, info, report, cv = _indices_for_iteration(data, config, iteration)
            record = IterationRecord(
                sample_count=data.n,
                criterion_values={
                    "mean": cv.mean,
                    "max": cv.max,
                    "max_undivided": cv.max_undivided,
                },
                fold_indices={config.family: cv.fold_indices},
            )
            trace = trace.with_record(record)
            _append_trace_row(trace_path, space.d, iteration, data.n, report, cv)
            _write_report(
                report_path,
                _report_payload(config, report, trace, "running", data.n, info),
            )

        history = [r.criterion_values[config.criterion] for r in trace]
        if stopping.consecutive_below(history, config.threshold, config.consecutive):
            stopped = "criterion"
            break
        if data.n >= config.budget:
            stopped = "budget"
            break
        iteration += 1

    if report is None:
        # resumed into an already-finished run: recompute the final indices
        model, info, report, _ = _indices_for_iteration(data, config, len(trace) - 1)
    _write_report(
        report_path, _report_payload(config, report, trace, stopped, data.n, info)
    )
    if config.plots:
        from . import plots

        plots.render_run_figures(outdir, space.d)
    return report, trace, data


def analyze(
    design_path,
    space: InputSpace,
    *,
    kernel: str = "matern32",
    mode: str = "interpolating",
    gamma: float | None = None,
    ard: bool | None = None,
    quad_order: int = 64,
    seed: int = 0,
    interactions: tuple[tuple[int, ...], ...] | None = None,
    outdir=None,
    plots: bool = True,
):
    """Indices from an existing design file, with no new sampling.

    Writes ``report.json`` (and an index figure) next to the design file or
    into ``outdir``; returns (report, model).
    """
    design_path = Path(design_path)
    points, responses, _, stages = read_design_csv(design_path, space)
    data = DesignData(space, points, responses, tuple(stages))
    model, info = surrogate.fit(
        data, kernel=kernel, mode=mode, gamma=gamma, ard=ard, seed=seed, return_info=True
    )
    table = analytic.build_integral_table(model, quad_order=quad_order, self_check=True)
    report = analytic.full_report(model, table, space=space, interactions=interactions)
    out = Path(outdir) if outdir is not None else design_path.parent
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "design_file": design_path.name,
        "kernel": kernel,
        "mode": mode,
        "seed": seed,
        "quad_order": quad_order,
        "samples": data.n,
        "space": {
            "names": list(space.names),
            "lower": space.lower.tolist(),
            "upper": space.upper.tolist(),
        },
        "theta": info["theta"],
        "gamma": info["gamma"],
        "total_variance": report.total_variance,
        "main": report.main,
        "total": report.total,
        "dgsm": report.dgsm,
        "dgsm_bound": report.dgsm_bound,
        "dgsm_scale": report.dgsm_scale,
    }
    if report.interactions:
        payload["interactions"] = {
            "+".join(str(i + 1) for i in dims): value
            for dims, value in report.interactions.items()
        }
    _write_report(out / REPORT_FILE, _jsonable(payload))
    if plots:
        from . import plots as plots_mod

        plots_mod.render_indices_figure(report, space, out / "indices.png")
    return report, model
