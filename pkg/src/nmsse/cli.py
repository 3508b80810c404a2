"""Command-line front end.

Subcommands map onto the driven-TLA study: ``run-enlarged`` produces the
exact reference Bloch curves, ``run-sse`` the perturbative-hierarchy
ensemble curves, ``run-postmarkovian`` the first-order post-Markovian
(YDGS) ensemble, ``run-markov`` the plain Lindblad reference, ``compare``
differences two Bloch CSVs on a shared grid, and ``noise-check`` /
``markov-check`` are self-diagnostics (ostensible-noise correlations and
the large-kappa Markov limit).

CSV contract: header ``t,x,y,z,sx,sy,sz`` (reference runs write zeros for
the stderr columns), values in scientific notation with 12 significant
digits, comma separated, LF line endings.  ``compare`` writes
``t,dx,dy,dz``.  Exit codes: 0 ok, 2 config error, 3 numeric failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import noise
from .config import (RunConfig, build_kernel, build_model, build_provider,
                     build_stepper, initial_ket, parse_config)
from .enlarged import EnlargedSpace, evolve_enlarged, lindblad_reference_markov
from .ensemble import compare as compare_series
from .ensemble import run_ensemble
from .errors import (CapacityError, ConfigError, EnsembleFailureError,
                     GridMismatchError, KernelError, TrajectoryFailureError,
                     TruncationError, UnsupportedOrderError)
from .kernel import alpha_eval, beta_eval, markov_rate
from .linalg import bloch_series
from .sse import StepperConfig

_CONFIG_FIELDS = tuple(RunConfig.__dataclass_fields__)


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def _add_run_flags(parser: argparse.ArgumentParser, exclude: tuple[str, ...] = ()) -> None:
    parser.add_argument("-c", "--config", dest="config_path", metavar="FILE",
                        help="flat key=value config file")
    for name in _CONFIG_FIELDS:
        if name in exclude:
            continue
        if name == "output":
            parser.add_argument("-o", "--output", dest="output", metavar="PATH",
                                help="output CSV (default: stdout)")
        else:
            parser.add_argument("--" + name.replace("_", "-"), dest=name,
                                metavar="V")


def _config_of(args: argparse.Namespace,
               defaults: dict[str, str] | None = None) -> RunConfig:
    overrides = {name: getattr(args, name) for name in _CONFIG_FIELDS
                 if getattr(args, name, None) is not None}
    return parse_config(getattr(args, "config_path", None), overrides, defaults)


# ---------------------------------------------------------------------------
# CSV contract


def emit_csv(path: str, header: str, columns: list[np.ndarray]) -> None:
    lines = [header]
    for row in zip(*columns):
        lines.append(",".join(f"{v:.11e}" for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def read_bloch_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        for col in ("t", "x", "y", "z"):
            if col not in header:
                raise ConfigError(f"{path}: missing column {col!r}")
        idx = [header.index(c) for c in ("t", "x", "y", "z")]
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, idx[0]], data[:, idx[1:]]


def _emit_bloch(path: str, times: np.ndarray, bloch: np.ndarray,
                stderr: np.ndarray | None) -> None:
    se = np.zeros_like(bloch) if stderr is None else stderr
    emit_csv(path, "t,x,y,z,sx,sy,sz",
             [times, bloch[:, 0], bloch[:, 1], bloch[:, 2],
              se[:, 0], se[:, 1], se[:, 2]])


def _reference_stepper(cfg: RunConfig) -> StepperConfig:
    """Reference-solver stepper recording on the SSE grid dt*record_stride."""
    record_dt = cfg.dt * cfg.record_stride
    stride = record_dt / cfg.enlarged_dt
    if abs(stride - round(stride)) > 1e-9 * max(1.0, abs(stride)) or round(stride) < 1:
        raise ConfigError(
            "key 'enlarged_dt': dt*record_stride must be an integer multiple "
            f"of enlarged_dt (got {record_dt} / {cfg.enlarged_dt})")
    return StepperConfig(t_final=cfg.t_final, dt=cfg.enlarged_dt, scheme="rk4",
                         record_stride=int(round(stride)))


# ---------------------------------------------------------------------------
# subcommands


def _run_sse_like(args: argparse.Namespace,
                  defaults: dict[str, str] | None = None) -> int:
    cfg = _config_of(args, defaults)
    model, kernel = build_model(cfg), build_kernel(cfg)
    stepper = build_stepper(cfg)
    provider = build_provider(cfg, model, kernel, stepper)
    res = run_ensemble(model, kernel, provider, stepper, cfg.seed, cfg.ntraj,
                       initial_ket(), variant=cfg.variant,
                       unravelling=cfg.unravelling)
    _emit_bloch(cfg.output, res.times, res.mean_bloch, res.stderr)
    _info(f"{cfg.method} {cfg.unravelling} order={cfg.order} "
          f"variant={cfg.variant}: N={res.n_completed} ok, {res.n_failed} "
          f"failed, max norm drift {res.norm_drift_max:.2e}, "
          f"{res.runtime:.1f} s" + (f" -> {cfg.output}" if cfg.output else ""))
    return 0


def _cmd_run_sse(args: argparse.Namespace) -> int:
    return _run_sse_like(args)


def _cmd_run_postmarkovian(args: argparse.Namespace) -> int:
    return _run_sse_like(args, defaults={"method": "ydgs"})


def _cmd_run_enlarged(args: argparse.Namespace) -> int:
    cfg = _config_of(args)
    model, kernel = build_model(cfg), build_kernel(cfg)
    stepper = _reference_stepper(cfg)
    t0 = time.perf_counter()
    space = EnlargedSpace(model=model, kernel=kernel, n_max=cfg.nmax)
    times, rhos = evolve_enlarged(space, initial_ket(), stepper)
    _emit_bloch(cfg.output, times, bloch_series(rhos), None)
    _info(f"enlarged nmax={cfg.nmax} dim={space.dim}: "
          f"{time.perf_counter() - t0:.1f} s"
          + (f" -> {cfg.output}" if cfg.output else ""))
    return 0


def _cmd_run_markov(args: argparse.Namespace) -> int:
    cfg = _config_of(args)
    model, kernel = build_model(cfg), build_kernel(cfg)
    gamma = markov_rate(kernel)
    times, rhos = lindblad_reference_markov(model, gamma, initial_ket(),
                                            _reference_stepper(cfg))
    _emit_bloch(cfg.output, times, bloch_series(rhos), None)
    _info(f"markov reference gamma_total={gamma:.6g}"
          + (f" -> {cfg.output}" if cfg.output else ""))
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    times_a, bloch_a = read_bloch_csv(args.csv_a)
    times_b, bloch_b = read_bloch_csv(args.csv_b)
    metrics = compare_series(times_a, bloch_a, times_b, bloch_b)
    emit_csv(args.output or "", "t,dx,dy,dz",
             [metrics.times, metrics.diffs[:, 0], metrics.diffs[:, 1],
              metrics.diffs[:, 2]])
    _info(f"time-averaged L1 {metrics.time_avg_l1:.6e}, "
          f"sup-norm {metrics.sup_norm:.6e}")
    return 0


def _cmd_noise_check(args: argparse.Namespace) -> int:
    cfg = _config_of(args)
    kernel, mode = build_kernel(cfg), cfg.unravelling
    if mode == "quadrature":
        kernel.require_quadrature()
    npaths = cfg.ntraj
    dt = cfg.dt * cfg.record_stride
    nsteps = max(int(round(cfg.t_final / dt)), 4)

    # One reserved Philox stream; paths advance together (vectorized), so the
    # report is a pure function of (config, seed).
    rng = np.random.Generator(np.random.Philox(
        key=np.array([cfg.seed, 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)))
    j = kernel.n_components
    w = noise.stationary_std(kernel, mode) * noise.complex_normals(rng, (npaths, j))
    zs = np.empty((nsteps + 1, npaths), dtype=complex)
    zs[0] = noise.emit(w, mode)
    dec, inc = noise.decay_factors(kernel, dt), noise.increment_std(kernel, dt, mode)
    for k in range(1, nsteps + 1):
        w = w * dec + inc * noise.complex_normals(rng, (npaths, j))
        zs[k] = noise.emit(w, mode)

    if mode == "quadrature" and np.max(np.abs(zs.imag)) != 0.0:
        _info("FAIL: quadrature noise is not exactly real")
        return 3

    pairs = [(int(round(f_t * nsteps)), int(round(f_s * nsteps)))
             for f_t, f_s in ((0.1, 0.1), (0.2, 0.1), (0.4, 0.2), (0.6, 0.3),
                              (1.0, 0.5))]
    worst = 0.0
    print("kind,t,s,target_re,target_im,est_re,est_im,sigma_dev")
    for i, k in pairs:
        t_i, t_k = i * dt, k * dt
        if mode == "coherent":
            checks = [("alpha", zs[i] * np.conj(zs[k]), alpha_eval(kernel, t_i - t_k)),
                      ("pseudo", zs[i] * zs[k], 0.0)]
        else:
            checks = [("beta", zs[i] * zs[k], beta_eval(kernel, t_i - t_k))]
        for kind, samples, target in checks:
            est = samples.mean()
            se_re = max(samples.real.std(ddof=1), 1e-300) / np.sqrt(npaths)
            se_im = max(samples.imag.std(ddof=1), 1e-300) / np.sqrt(npaths)
            dev = max(abs(est.real - np.real(target)) / se_re,
                      abs(est.imag - np.imag(target)) / se_im)
            worst = max(worst, dev)
            print(f"{kind},{t_i:.6g},{t_k:.6g},{np.real(target):.6e},"
                  f"{np.imag(target):.6e},{est.real:.6e},{est.imag:.6e},{dev:.2f}")
    _info(f"{npaths} paths, worst deviation {worst:.2f} sigma (gate 5)")
    return 0 if worst <= 5.0 else 3


def _cmd_markov_check(args: argparse.Namespace) -> int:
    # Default kernel kappa=100 at fixed gamma=1 (A = gamma*kappa/4).
    cfg = _config_of(args, defaults={"kernel": "25,100,0"})
    model, kernel = build_model(cfg), build_kernel(cfg)
    stepper = _reference_stepper(cfg)
    space = EnlargedSpace(model=model, kernel=kernel, n_max=cfg.nmax)
    times, rhos = evolve_enlarged(space, initial_ket(), stepper)
    times_ref, rhos_ref = lindblad_reference_markov(model, markov_rate(kernel),
                                                    initial_ket(), stepper)
    metrics = compare_series(times, bloch_series(rhos),
                             times_ref, bloch_series(rhos_ref))
    ok = metrics.sup_norm <= 0.05
    print(f"kappa={kernel.kappas.max():g} enlarged vs markov reference: "
          f"Bloch sup-norm {metrics.sup_norm:.4f} (gate 0.05) "
          f"{'OK' if ok else 'FAIL'}")
    return 0 if ok else 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmsse",
        description="Non-Markovian stochastic Schrödinger equation toolkit "
                    "(defaults: driven TLA, gamma=kappa=1, chi=5, delta=3, "
                    "from |e>).")
    sub = parser.add_subparsers(dest="command", required=True)

    specs = [
        ("run-sse", _cmd_run_sse, (),
         "trajectory-ensemble Bloch curves (perturbative or ydgs)"),
        ("run-enlarged", _cmd_run_enlarged, (),
         "exact reference via enlarged system (pseudomodes)"),
        ("run-markov", _cmd_run_markov, (),
         "plain Lindblad reference at the kernel's Markov rate"),
        ("run-postmarkovian", _cmd_run_postmarkovian, ("method",),
         "first-order post-Markovian (YDGS) ensemble"),
        ("noise-check", _cmd_noise_check, (),
         "validate ostensible-noise correlations against the kernel"),
        ("markov-check", _cmd_markov_check, (),
         "validate the large-kappa limit against the Lindblad reference"),
    ]
    for name, func, exclude, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        _add_run_flags(p, exclude=exclude)
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="pointwise difference of two Bloch CSVs")
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    p.add_argument("-o", "--output", dest="output", metavar="PATH",
                   help="difference CSV (default: stdout)")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GridMismatchError, KernelError, UnsupportedOrderError,
            CapacityError) as exc:
        _info(f"config error: {exc}")
        return 2
    except (TruncationError, TrajectoryFailureError, EnsembleFailureError) as exc:
        _info(f"numeric failure: {exc}")
        return 3
    except OSError as exc:
        _info(f"io error: {exc}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
