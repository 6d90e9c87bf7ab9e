"""Command-line entry point.

Every command that writes an artifact also writes ``<artifact>.manifest.json``
(or ``manifest.json`` inside an output directory) with the arguments, seed,
tool version, file digests and wall time.  Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .ansatz import FORMS, NONUNITARY, UNITARY, AnsatzSpec, CoreKind, build_ansatz, rewritten_core
from .burgers import CENTRAL, GAUSSIAN, PAPER_CONFIGS, SIN, UPWIND, BurgersConfig, encode_state, evolve
from .circuit import Circuit, count_idle, dumps, loads, schedule_asap
from .noise import (
    NoiseParams,
    budget_closed_form,
    budget_from_schedule,
    fidelity_lower_bound,
    lambda_total,
    sweep_grid,
    sweep_lines,
    write_lines_csv,
    write_rows,
)
from .rewrite import PLUS_X, ZERO_Z, rewrite_deferred, rewrite_ladder
from .simulator import StateVector, channel_equivalent
from .training import LBFGS, OPTIMIZERS, TrainConfig, layer_sweep, train

TABLE1_WIDTHS = (4, 5, 10, 50)


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    arguments: dict[str, Any]
    seed: int | None
    tool_version: str = __version__
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "arguments": self.arguments,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_time": self.wall_time,
        }


def sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


def write_manifest(args: argparse.Namespace, out: Path, outputs: list[Path], inputs: list[Path], t0: float) -> Path:
    arguments = {k: v for k, v in vars(args).items() if k != "handler"}
    m = RunManifest(
        command=" ".join(str(x) for x in (args.command, getattr(args, "what", None)) if x),
        arguments=arguments,
        seed=args.seed,
        inputs={str(p): sha256(p) for p in inputs},
        outputs={str(p): sha256(p) for p in outputs},
        wall_time=time.perf_counter() - t0,
    )
    path = _manifest_path(out)
    path.write_text(json.dumps(m.to_dict(), indent=2, default=str) + "\n")
    return path


def _write_json(path: Path | None, data: Any) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _read_circuit(path: str) -> Circuit:
    return loads(Path(path).read_text())


def _read_state(path: str) -> StateVector:
    return StateVector.from_dict(json.loads(Path(path).read_text()))


def _require_out(args: argparse.Namespace) -> Path:
    if args.out is None:
        raise UsageError(f"{args.command} needs --out")
    return Path(args.out)


# -- commands -----------------------------------------------------------------


def cmd_ansatz(args: argparse.Namespace) -> int:
    out = _require_out(args)
    t0 = time.perf_counter()
    circ = build_ansatz(AnsatzSpec(args.qubits, args.layers, args.core, args.rotation, args.form))
    out.write_text(dumps(circ) + "\n")
    write_manifest(args, out, [out], [], t0)
    return 0


def cmd_rewrite(args: argparse.Namespace) -> int:
    out = _require_out(args)
    t0 = time.perf_counter()
    circ = _read_circuit(args.input)
    variant = {"plus-x": PLUS_X, "zero-z": ZERO_Z, "auto": None}[args.variant]
    result, report = rewrite_ladder(circ, variant, args.keep_ends)
    if args.deferred:
        result, dep = rewrite_deferred(result)
        report.events.extend(dep.events)
        report.cx_depth = dep.cx_depth
    out.write_text(dumps(result) + "\n")
    outputs = [out]
    if args.report:
        rp = Path(args.report)
        _write_json(rp, report.to_dict())
        outputs.append(rp)
    write_manifest(args, out, outputs, [Path(args.input)], t0)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    a, b = _read_circuit(args.a), _read_circuit(args.b)
    rep = channel_equivalent(a, b, args.trials, args.seed or 0)
    out = Path(args.out) if args.out else None
    _write_json(out, rep.to_dict())
    if out is not None:
        write_manifest(args, out, [out], [Path(args.a), Path(args.b)], t0)
    return 0 if rep.equivalent else 1


def _noise_from(args: argparse.Namespace) -> NoiseParams:
    base = NoiseParams.paper_convention(args.p_idle, args.p_cx)
    extra = {k: getattr(args, k) for k in ("p_meas", "p_in", "p_x", "p_con") if getattr(args, k) is not None}
    return NoiseParams(**{**base.__dict__, **extra})


def cmd_budget(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    inputs = []
    if args.circuit:
        circ = _read_circuit(args.circuit)
        budget = budget_from_schedule(circ)
        inputs.append(Path(args.circuit))
        source = "schedule"
    else:
        budget = budget_closed_form(args.core, args.form, args.qubits)
        source = "closed-form"
    noise = _noise_from(args)
    lam = lambda_total(budget, noise)
    data = {"source": source, "budget": budget.as_dict(), "lambda_total": lam, "fidelity_bound": fidelity_lower_bound(lam)}
    out = Path(args.out) if args.out else None
    _write_json(out, data)
    if out is not None:
        write_manifest(args, out, [out], inputs, t0)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _require_out(args)
    t0 = time.perf_counter()
    if args.what == "grid":
        sweep_grid(args.core, args.qubits, resolution=args.resolution).write_csv(out)
    else:
        write_lines_csv(out, sweep_lines(args.core, args.n_max))
    write_manifest(args, out, [out], [], t0)
    return 0


def cmd_burgers(args: argparse.Namespace) -> int:
    out = _require_out(args)
    t0 = time.perf_counter()
    cfg = BurgersConfig(nu=args.nu, t_final=args.t, qubits=args.qubits, init=args.init, scheme=args.scheme)
    state = encode_state(evolve(cfg))
    _write_json(out, state.to_dict())
    write_manifest(args, out, [out], [], t0)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    out = _require_out(args)
    t0 = time.perf_counter()
    target = _read_state(args.target)
    spec = AnsatzSpec(target.n, args.layers, args.core, args.rotation, args.form)
    seed = 0 if args.seed is None else args.seed
    res = train(TrainConfig(spec, target, args.iters, args.restarts, seed, args.optimizer))
    _write_json(out, res.to_dict())
    write_manifest(args, out, [out], [Path(args.target)], t0)
    return 0


def _table1(path: Path) -> None:
    header = ("core", "form", "n", "cx_depth", "t_idle", "n_cx", "n_meas", "n_in", "n_con", "scheduled_cx_depth", "scheduled_t_idle")
    rows = []
    for core in CoreKind:
        for form in (UNITARY, NONUNITARY):
            for n in TABLE1_WIDTHS:
                b = budget_closed_form(core, form, n)
                sched = schedule_asap(rewritten_core(core, n, form))
                rows.append((int(core), form, n, *b.as_dict().values(), sched.cx_depth, count_idle(sched)))
    write_rows(path, header, rows)


def _table2(outdir: Path, args: argparse.Namespace) -> list[Path]:
    files = []
    cols = {}
    seed = 0 if args.seed is None else args.seed
    for name, cfg in PAPER_CONFIGS.items():
        state_path = outdir / f"{name}.json"
        state = encode_state(evolve(cfg))
        _write_json(state_path, state.to_dict())
        files.append(state_path)
        spec = AnsatzSpec(cfg.qubits, 1, 1, "Y", NONUNITARY)
        cols[name] = dict(layer_sweep(TrainConfig(spec, state, args.iters, args.restarts, seed, LBFGS), range(1, 6)))
    path = outdir / "table2.csv"
    write_rows(path, ("layers", *cols), ((L, *(cols[k][L] for k in cols)) for L in range(1, 6)))
    return files + [path]


def cmd_reproduce(args: argparse.Namespace) -> int:
    outdir = Path(args.out or f"reproduce_{args.what}")
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files: list[Path] = []
    if args.what == "fig3":
        grid, lines = outdir / "fig3_grid.csv", outdir / "fig3_lines.csv"
        sweep_grid(1, 50, resolution=args.resolution).write_csv(grid)
        write_lines_csv(lines, sweep_lines(1, 200))
        files = [grid, lines]
    elif args.what == "fig5":
        for core in (2, 3):
            p = outdir / f"fig5_core{core}_lines.csv"
            write_lines_csv(p, sweep_lines(core, 200))
            files.append(p)
    elif args.what == "table1":
        p = outdir / "table1.csv"
        _table1(p)
        files = [p]
    else:
        files = _table2(outdir, args)
    write_manifest(args, outdir, files, [], t0)
    return 0


# -- parser -------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    # SUPPRESS lets the options appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    return p


def _add_noise_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p-idle", type=float, default=1e-4)
    p.add_argument("--p-cx", type=float, default=1e-3)
    p.add_argument("--p-meas", type=float)
    p.add_argument("--p-in", type=float)
    p.add_argument("--p-x", type=float)
    p.add_argument("--p-con", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="shallow-ansatz", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--threads", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ansatz", parents=[common], help="build an ansatz circuit")
    p.add_argument("what", choices=["build"])
    p.add_argument("--core", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--form", choices=FORMS, default=UNITARY)
    p.add_argument("--rotation", choices=["Y", "XYZ"], default="Y")
    p.set_defaults(handler=cmd_ansatz)

    p = sub.add_parser("rewrite", parents=[common], help="replace ladder CX gates by measurement-based ones")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--variant", choices=["auto", "plus-x", "zero-z"], default="auto")
    p.add_argument("--keep-ends", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--deferred", action="store_true")
    p.add_argument("--report")
    p.set_defaults(handler=cmd_rewrite)

    p = sub.add_parser("verify", parents=[common], help="check channel equivalence of two circuits")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("budget", parents=[common], help="error budget and fidelity bound")
    p.add_argument("--core", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--form", choices=[UNITARY, NONUNITARY], default=UNITARY)
    p.add_argument("--qubits", type=int, default=50)
    p.add_argument("--circuit", help="count an explicit circuit instead of using the closed form")
    _add_noise_args(p)
    p.set_defaults(handler=cmd_budget)

    p = sub.add_parser("sweep", parents=[common], help="fidelity-difference sweeps")
    p.add_argument("what", choices=["grid", "lines"])
    p.add_argument("--core", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--qubits", type=int, default=50)
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--n-max", type=int, default=200)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("burgers", parents=[common], help="solve Burgers' equation and encode the result")
    p.add_argument("--init", choices=[GAUSSIAN, SIN], default=GAUSSIAN)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--scheme", choices=[CENTRAL, UPWIND], default=CENTRAL)
    p.set_defaults(handler=cmd_burgers)

    p = sub.add_parser("train", parents=[common], help="fit an ansatz to a target state")
    p.add_argument("--target", required=True)
    p.add_argument("--core", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--form", choices=FORMS, default=NONUNITARY)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--rotation", choices=["Y", "XYZ"], default="Y")
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--optimizer", choices=OPTIMIZERS, default=LBFGS)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("reproduce", parents=[common], help="regenerate a figure or table")
    p.add_argument("what", choices=["fig3", "fig5", "table1", "table2"])
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--restarts", type=int, default=5)
    p.set_defaults(handler=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be positive")
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
