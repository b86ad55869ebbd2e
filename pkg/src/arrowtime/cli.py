"""Command-line interface.

Subcommands: analytic | rollout | train | eval | jko | selftest. Every run
writes a JSON manifest with the fully resolved configuration so it can be
reproduced exactly; tabular outputs are CSV with a header row.

Exit codes: 0 success, 2 configuration error, 3 numerical self-test failure.
The environment variable ARROWTIME_SEED is the seed fallback when no --seed
is given.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, analysis, chains, jko
from . import model as nn
from . import rewards, sampling, training
from .envs import EnvConfig, make_env


class ConfigError(Exception):
    pass


def _seed_fallback(seed):
    if seed is not None:
        return int(seed)
    env = os.environ.get("ARROWTIME_SEED")
    return int(env) if env else 0


def _coerce(field: dataclasses.Field, raw: str):
    text = raw.strip()
    tp = field.type
    if tp in ("int", int):
        return int(text)
    if tp in ("float", float):
        return float(text)
    if tp in ("tuple", tuple):
        return tuple(type(field.default[0])(x) if field.default else float(x)
                     for x in text.split())
    if "None" in str(tp) or field.default is None:
        if text.lower() in ("none", ""):
            return None
        if "int" in str(tp):
            return int(text)
        if "float" in str(tp):
            return float(text)
        return text
    return text


def _apply_section(obj, section: dict):
    fields = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in section.items():
        if key not in fields:
            raise ConfigError(f"unknown option {key!r} for {type(obj).__name__}")
        try:
            setattr(obj, key, _coerce(fields[key], value))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({err})")
    return obj


def load_sections(path, overrides):
    """INI sections plus --set section.key=value overrides, as nested dicts."""
    sections: dict[str, dict[str, str]] = {}
    if path:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for name in parser.sections():
            sections[name] = dict(parser.items(name))
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, option = key.strip().split(".", 1)
        sections.setdefault(section, {})[option.strip()] = value.strip()
    return sections


def build_train_config(sections, env_kind=None, seed=None) -> training.TrainConfig:
    env_section = dict(sections.get("env", {}))
    if env_kind:
        env_section.setdefault("kind", env_kind)
    kind = env_section.get("kind")
    if kind is None:
        raise ConfigError("no environment kind configured (set [env] kind or --env)")
    config = training.default_config(kind)
    env_section["kind"] = kind
    _apply_section(config.env, env_section)
    train_section = dict(sections.get("train", {}))
    _apply_section(config, train_section)
    if seed is not None:
        config.seed = int(seed)
    elif "seed" not in train_section:
        config.seed = _seed_fallback(None)
    return config


def _config_dict(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _config_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def write_manifest(out_dir: Path, subcommand: str, config, seed, artifacts, started):
    manifest = {
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config": config,
        "artifacts": {k: str(v) for k, v in artifacts.items()},
        "duration_seconds": round(time.monotonic() - started, 3),
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- analytic

def _dense_traj_check(chain, params, h):
    """Independent dense route: explicit matrix powers + pseudoinverse."""
    t = chain.transition
    powers = [np.eye(chain.n)]
    for _ in range(chain.horizon):
        powers.append(powers[-1] @ t)
    v = np.array([chain.initial @ (powers[k + 1] - powers[k]) for k in range(chain.horizon)])
    a = v.T @ v + params.omega * np.eye(chain.n)
    b = chain.initial @ (powers[chain.horizon] - np.eye(chain.n)) / params.lam
    h_dense = np.linalg.pinv(a, rcond=1e-10) @ b
    return float(np.max(np.abs(h - h_dense)))


def _two_state_template(chain):
    if chain.n != 2:
        return None
    t = chain.transition
    if not np.allclose(t[0], t[1], atol=1e-12):
        return None
    if not np.allclose(chain.initial, [0.5, 0.5], atol=1e-12):
        return None
    return float(t[0, 1])


def _path_template(chain):
    expected = chains.four_state_chain(chain.horizon)
    if chain.n == 4 and np.array_equal(chain.transition, expected.transition) \
            and np.array_equal(chain.initial, expected.initial):
        return True
    return None


def cmd_analytic(args):
    if args.bundled is not None:
        ref = resources.files("arrowtime.data") / f"example{args.bundled}.chain"
        text = ref.read_text()
        source = f"bundled example {args.bundled}"
    else:
        if args.chain_file is None:
            raise ConfigError("provide a chain file or --bundled N")
        text = Path(args.chain_file).read_text()
        source = args.chain_file
    chain, params = chains.parse_chain_file(text)
    if args.lam is not None:
        params = chains.SolverParams(lam=args.lam, omega=params.omega)
    if args.omega is not None:
        params = chains.SolverParams(lam=params.lam, omega=args.omega)

    h_l2 = chains.solve_l2(chain, params)
    h_tr = chains.solve_traj_reg(chain, params)
    report = {
        "source": source,
        "n": chain.n,
        "horizon": chain.horizon,
        "lambda": params.lam,
        "omega": params.omega,
        "h_l2": h_l2.tolist(),
        "objective_l2": chains.objective_value(chain, h_l2, params, chains.L2),
        "h_trajectory": h_tr.tolist(),
        "objective_trajectory": chains.objective_value(chain, h_tr, params, chains.TRAJECTORY),
        "checks": {},
    }
    dense_err = _dense_traj_check(chain, params, h_tr)
    report["checks"]["dense_pseudoinverse_max_abs_diff"] = dense_err
    alpha = _two_state_template(chain)
    if alpha is not None:
        gamma = chains.two_state_gamma(alpha, params.lam)
        gamma_tr = chains.two_state_gamma_traj(alpha, params.lam, params.omega)
        report["checks"]["two_state_closed_form"] = {
            "alpha": alpha,
            "gamma": gamma,
            "gamma_traj": gamma_tr,
            "l2_max_abs_err": float(np.max(np.abs(h_l2 - np.array([-gamma, gamma])))),
            "traj_max_abs_err": float(np.max(np.abs(h_tr - np.array([-gamma_tr, gamma_tr])))),
        }
    if _path_template(chain) and chain.horizon >= 3:
        ref_l2 = np.array([-1.0, 0.0, 0.0, 1.0]) / params.lam
        report["checks"]["path_chain_closed_form"] = {
            "l2_max_abs_err": float(np.max(np.abs(h_l2 - ref_l2))),
        }
        if params.omega == 0.0:
            direction = np.array([-3.0, -1.0, 1.0, 3.0])
            cos = float(h_tr @ direction / (np.linalg.norm(h_tr) * np.linalg.norm(direction)))
            report["checks"]["path_chain_closed_form"]["traj_cosine_with_(-3,-1,1,3)"] = cos

    print(f"chain: {source}  n={chain.n} horizon={chain.horizon} "
          f"lambda={params.lam:g} omega={params.omega:g}")
    print(f"h (l2 regularizer):         {h_l2.tolist()}")
    print(f"objective (l2):             {report['objective_l2']!r}")
    print(f"h (trajectory regularizer): {h_tr.tolist()}")
    print(f"objective (trajectory):     {report['objective_trajectory']!r}")
    print(f"dense-oracle max abs diff:  {dense_err:.3e}")
    for name, check in report["checks"].items():
        if isinstance(check, dict):
            print(f"check {name}: " + " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                                               for k, v in check.items()))
    if args.out:
        out = _out_dir(args)
        with open(out / "analytic.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


# ---------------------------------------------------------------- rollout

def cmd_rollout(args):
    started = time.monotonic()
    sections = load_sections(args.config, args.set)
    env_section = dict(sections.get("env", {}))
    if args.env:
        env_section["kind"] = args.env
    if "kind" not in env_section:
        raise ConfigError("no environment kind configured")
    env_config = _apply_section(EnvConfig(kind=env_section["kind"]), env_section)
    seed = _seed_fallback(args.seed)
    env_config.episode_len = args.n
    env = make_env(env_config)
    buffer = sampling.fill_buffer(env, args.m, args.n, seed, threads=args.threads)
    out = _out_dir(args)
    csv_path = out / "trajectories.csv"
    sampling.save_trajectories(buffer, csv_path, out / "trajectories.json")
    write_manifest(out, "rollout",
                   {"env": _config_dict(env_config), "m": args.m, "n": args.n,
                    "threads": args.threads},
                   seed, {"trajectories": csv_path}, started)
    print(f"wrote {buffer.m} trajectories of {buffer.n} steps to {csv_path}")
    return 0


# ---------------------------------------------------------------- train

def cmd_train(args):
    started = time.monotonic()
    sections = load_sections(args.config, args.set)
    config = build_train_config(sections, env_kind=args.env, seed=args.seed)
    init_model = nn.load_checkpoint(args.init_from) if args.init_from else None
    model, log, _ = training.train(config, init_model=init_model)
    out = _out_dir(args)
    ckpt = out / "checkpoint.txt"
    nn.save_checkpoint(model, ckpt)
    log_path = out / "trainlog.csv"
    log.save_csv(log_path)
    write_manifest(out, "train", _config_dict(config), config.seed,
                   {"checkpoint": ckpt, "trainlog": log_path}, started)
    final_dh = log.heldout_mean_dh[-1] if log.heldout_mean_dh else float("nan")
    print(f"trained {config.env.kind}: {len(log.iterations)} evals, "
          f"final held-out mean dh = {final_dh:.6g}")
    print(f"checkpoint: {ckpt}")
    return 0


# ---------------------------------------------------------------- eval

def _env_for_eval(args, csv_path):
    kind = args.env
    if kind is None:
        sibling = Path(csv_path).with_suffix(".json")
        if sibling.exists():
            with open(sibling) as fh:
                kind = json.load(fh).get("env_kind")
    if kind is None:
        raise ConfigError("environment kind unknown; pass --env")
    base_kind, _, aug = kind.partition("+")
    config = EnvConfig(kind=base_kind, augment=aug or None)
    return make_env(config)


def cmd_eval(args):
    started = time.monotonic()
    buffer = sampling.load_trajectories(args.trajectories)
    env = _env_for_eval(args, args.trajectories)
    model = nn.load_checkpoint(args.checkpoint)
    if model.input_dim != buffer.dim:
        raise ConfigError(f"checkpoint expects dimension {model.input_dim}, "
                          f"trajectories have {buffer.dim}")
    shaping = rewards.RewardShapingConfig(
        beta=args.beta, sigma=args.sigma, step_threshold=args.step_threshold,
        momentum=args.momentum)
    out = _out_dir(args)
    eval_path = out / "eval.csv"
    with open(eval_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "t", "h", "eta", "reward", "safety",
                         "curiosity", "intrinsic"])
        for k in range(buffer.m):
            states = buffer.states[k] * args.input_scale
            h, dh = training.evaluate_along_trajectory(model, states)
            intrinsic = rewards.tomato_intrinsic(dh, shaping.momentum)
            writer.writerow([k, 0, repr(float(h[0])), "", "", "", "", ""])
            for t in range(1, buffer.n + 1):
                e = float(dh[t - 1])
                r = 0.0
                if hasattr(env, "task_reward"):
                    r = env.task_reward(buffer.states[k, t - 1], buffer.states[k, t])
                writer.writerow([
                    k, t, repr(float(h[t])), repr(e), repr(r),
                    repr(rewards.safety_reward(r, e, shaping)),
                    repr(rewards.curiosity_reward(e)),
                    repr(float(intrinsic[t - 1])),
                ])
    artifacts = {"eval": eval_path}
    if args.hist:
        ts = sorted({int(x) for x in args.hist.split(",")})
        bad = [t for t in ts if not 0 <= t <= buffer.n]
        if bad:
            raise ConfigError(f"--hist time-steps out of range: {bad}")
        hist_path = out / "hist.csv"
        with open(hist_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "episode", "h"])
            for t in ts:
                h_t = nn.forward(model, buffer.states[:, t, :] * args.input_scale)
                for k, value in enumerate(h_t):
                    writer.writerow([t, k, repr(float(value))])
        artifacts["hist"] = hist_path
    write_manifest(out, "eval",
                   {"checkpoint": args.checkpoint, "trajectories": args.trajectories,
                    "env_kind": env.kind, "beta": args.beta, "sigma": args.sigma,
                    "step_threshold": args.step_threshold, "momentum": args.momentum,
                    "input_scale": args.input_scale, "hist": args.hist},
                   None, artifacts, started)
    print(f"wrote per-step evaluation for {buffer.m} trajectories to {eval_path}")
    return 0


# ---------------------------------------------------------------- jko

def _entropy_selftest(n: int, tol: float = 0.02):
    rng = np.random.default_rng(7)
    gauss = rng.standard_normal((n, 2))
    uniform = rng.random((n, 2))
    est_g = jko.kl_entropy(gauss)
    est_u = jko.kl_entropy(uniform)
    truth_g = np.log(2.0 * np.pi * np.e)
    checks = [
        ("entropy gaussian", est_g, truth_g, abs(est_g - truth_g) <= tol),
        ("entropy uniform", est_u, 0.0, abs(est_u) <= tol),
    ]
    return checks


def cmd_jko(args):
    started = time.monotonic()
    if args.entropy_selftest:
        for name, est, truth, ok in _entropy_selftest(args.entropy_n):
            status = "PASS" if ok else "FAIL"
            print(f"{status} {name}: estimate {est:.4f} vs {truth:.4f}")
            if not ok:
                return 3

    sections = load_sections(args.config, args.set)
    config = build_train_config(sections, env_kind="ou", seed=args.seed)
    jko_section = sections.get("jko", {})
    k = int(jko_section.get("k", 3))
    beta_inv = float(jko_section.get("beta_inv", jko.DEFAULT_BETA_INV))
    replicates = int(jko_section.get("replicates", 20))

    model, log, buffer = training.train(config)
    ensemble = jko.DensityEnsemble.from_buffer(buffer)
    series = jko.functional_series(ensemble, jko.elliptic_potential, model,
                                   beta_inv=beta_inv, k=k)
    ses = jko.increment_standard_errors(ensemble, jko.elliptic_potential,
                                        beta_inv=beta_inv, k=k,
                                        replicates=replicates, seed=config.seed)
    increments = np.diff(series.free_energy)
    violations = int(np.sum(increments > 3.0 * ses))
    pearson = float(np.corrcoef(series.fitted, series.free_energy)[0, 1])

    out = _out_dir(args)
    csv_path = out / "jko.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "energy", "entropy", "free_energy", "h_functional", "fitted"])
        for t in range(len(series.free_energy)):
            writer.writerow([t] + [repr(float(x)) for x in
                                   (series.energy[t], series.entropy[t], series.free_energy[t],
                                    series.h_functional[t], series.fitted[t])])
    summary = {"w": series.w, "b": series.b, "pearson_r": pearson,
               "f_increase_violations": violations, "steps": int(len(increments))}
    write_manifest(out, "jko",
                   {"train": _config_dict(config), "k": k, "beta_inv": beta_inv,
                    "replicates": replicates},
                   config.seed, {"series": csv_path}, started)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"w={series.w:.6g} b={series.b:.6g} pearson_r={pearson:.4f} "
          f"violations={violations}/{len(increments)}")
    return 0


# ---------------------------------------------------------------- selftest

def cmd_selftest(args):
    failures = 0

    def report(name, ok, detail):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1

    # chain closed forms
    for alpha in (0.5, 0.75, 1.0):
        chain = chains.two_state_chain(alpha)
        params = chains.SolverParams(lam=1.0, omega=0.5)
        gamma = chains.two_state_gamma(alpha, params.lam)
        err_l2 = float(np.max(np.abs(chains.solve_l2(chain, params) - [-gamma, gamma])))
        gamma_tr = chains.two_state_gamma_traj(alpha, params.lam, params.omega)
        err_tr = float(np.max(np.abs(chains.solve_traj_reg(chain, params) - [-gamma_tr, gamma_tr])))
        report(f"two-state alpha={alpha}", err_l2 < 1e-10 and err_tr < 1e-8,
               f"l2 err {err_l2:.2e}, traj err {err_tr:.2e}")
    chain = chains.four_state_chain()
    params = chains.SolverParams(lam=0.5, omega=0.0)
    h = chains.solve_traj_reg(chain, params)
    direction = np.array([-3.0, -1.0, 1.0, 3.0])
    cos = float(h @ direction / (np.linalg.norm(h) * np.linalg.norm(direction)))
    report("four-state path", cos > 1.0 - 1e-10, f"cosine {cos:.12f}")

    # gradient check on a few small random models
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10):
        model = nn.init_mlp(5, [7, 6], rng.integers(2 ** 31))
        s0 = rng.standard_normal((4, 5))
        s1 = rng.standard_normal((4, 5))
        _, grads = nn.loss_and_grad(model, s0, s1, 0.3, nn.TRAJECTORY_REG)
        analytic = nn.grads_vector(grads)
        vec = nn.params_vector(model)
        fd = np.empty_like(vec)
        eps = 1e-4
        for i in range(vec.size):
            probe = vec.copy()
            probe[i] = vec[i] + eps
            nn.set_params_vector(model, probe)
            up, _ = nn.loss_and_grad(model, s0, s1, 0.3, nn.TRAJECTORY_REG)
            probe[i] = vec[i] - eps
            nn.set_params_vector(model, probe)
            down, _ = nn.loss_and_grad(model, s0, s1, 0.3, nn.TRAJECTORY_REG)
            fd[i] = (up - down) / (2.0 * eps)
        nn.set_params_vector(model, vec)
        rel = np.abs(analytic - fd) / np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(fd)))
        worst = max(worst, float(rel.max()))
    report("gradient finite differences", worst < 1e-4, f"max rel err {worst:.2e}")

    # entropy closed forms
    for name, est, truth, ok in _entropy_selftest(args.entropy_n):
        report(name, ok, f"estimate {est:.4f} vs {truth:.4f}")

    print(f"{failures} failure(s)")
    return 3 if failures else 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arrowtime",
                                     description="Arrows of time for Markov decision processes")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="exact potentials for a finite chain file")
    p.add_argument("chain_file", nargs="?", help="plain-text chain spec")
    p.add_argument("--bundled", type=int, choices=(1, 2, 3, 4),
                   help="use a bundled example chain instead of a file")
    p.add_argument("--lambda", dest="lam", type=float, help="override lambda")
    p.add_argument("--omega", type=float, help="override omega")
    p.add_argument("--out", help="directory for analytic.json")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("rollout", help="collect random-policy trajectories")
    p.add_argument("--env", help="environment kind")
    p.add_argument("--config", help="INI config with an [env] section")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p.add_argument("--m", type=int, required=True, help="number of trajectories")
    p.add_argument("--n", type=int, required=True, help="transitions per trajectory")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("train", help="train the potential network")
    p.add_argument("--env", help="environment kind (starts from its defaults)")
    p.add_argument("--config", help="INI config with [env]/[train] sections")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p.add_argument("--seed", type=int)
    p.add_argument("--init-from", help="checkpoint to initialize from")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="per-step potentials and shaped rewards")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--trajectories", required=True, help="trajectory CSV dump")
    p.add_argument("--env", help="environment kind (default: trajectory manifest)")
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--sigma", choices=(rewards.IDENTITY, rewards.STEP),
                   default=rewards.IDENTITY)
    p.add_argument("--step-threshold", type=float)
    p.add_argument("--momentum", type=float, default=0.95)
    p.add_argument("--input-scale", type=float, default=1.0)
    p.add_argument("--hist", help="comma-separated time-steps for an h histogram dump")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("jko", help="free-energy comparison on the OU ensemble")
    p.add_argument("--config", help="INI config with [env]/[train]/[jko] sections")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p.add_argument("--seed", type=int)
    p.add_argument("--entropy-selftest", action="store_true",
                   help="check the entropy estimator against closed forms first")
    p.add_argument("--entropy-n", type=int, default=100000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_jko)

    p = sub.add_parser("selftest", help="numerical self-checks (exit 3 on failure)")
    p.add_argument("--entropy-n", type=int, default=100000)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
