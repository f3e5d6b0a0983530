"""Command-line front end.

Subcommands: ``spectral`` (dump J/S/F/BCF or the S(x) comparison tables),
``fit-bcf`` (exponential fit to JSON), ``run`` (scenario runner),
``counterterm`` (counterterm effectiveness study), ``adiabatic`` (cutoff
ladder at fixed |S(0)|), ``asymptotic`` (long-time plateau and coupling
sweep).  A plain ``key = value`` config file can preload any long-form
option; explicit flags win.  The worker-pool size is controlled only by
the ENTBATH_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from entbath.bcf_fit import fit_bcf, fit_report
from entbath.experiments import (
    MethodSpec,
    NonStationaryTail,
    ScenarioConfig,
    adiabatic_scan,
    adiabatic_spectral_gate,
    asymptotic_concurrence,
    asymptotic_sweep_slope,
    counterterm_study,
    environment_tables,
    run_scenario,
    spectral_tables,
)
from entbath.spectral import SpectralParams


def _read_config_file(path: str) -> dict:
    """Parse 'key = value' lines; '#' starts a comment."""
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"config line not of form key = value: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _add_env_args(p):
    g = p.add_mutually_exclusive_group(required=False)
    g.add_argument("--alpha", type=float, default=None,
                   help="bare coupling strength")
    g.add_argument("--alpha-tilde", type=float, default=None,
                   help="rescaled coupling alpha (omega_c/omega_A)^(1-s)")
    p.add_argument("--s", type=float, default=1.0,
                   help="spectral exponent in (0, 1]")
    p.add_argument("--omega-c", type=float, default=10.0,
                   help="cutoff frequency in units of omega_A")


def _spectral_params(args) -> SpectralParams:
    if (args.alpha is None) == (args.alpha_tilde is None):
        raise SystemExit("give exactly one of --alpha / --alpha-tilde")
    if args.alpha is not None:
        return SpectralParams(alpha=args.alpha, s=args.s, omega_c=args.omega_c)
    return SpectralParams.from_rescaled(args.alpha_tilde, args.s, args.omega_c)


def _scenario_from_args(args, scenario: str, methods) -> ScenarioConfig:
    return ScenarioConfig(
        scenario=scenario,
        s=args.s, omega_c=args.omega_c,
        alpha=args.alpha, alpha_tilde=args.alpha_tilde,
        detuning=args.detuning,
        include_counterterm=getattr(args, "counterterm", False),
        methods=methods,
        initial_state=args.initial_state,
        t_end_rescaled=args.t_end_rescaled,
        n_times=args.n_times,
        out_dir=args.out,
        seed=args.seed,
        n_samples=args.n_samples,
        k_max=args.k_max,
        fit_terms=args.fit_terms,
        ladder=args.ladder,
        rtol=args.rtol,
    )


def _add_scenario_args(p):
    _add_env_args(p)
    p.add_argument("--detuning", type=float, default=1.0,
                   help="omega_B / omega_A")
    p.add_argument("--initial-state", default="uu",
                   choices=["uu", "ud", "du", "dd"])
    p.add_argument("--t-end-rescaled", type=float, default=1.0,
                   help="grid end in units alpha_tilde * t * omega_A")
    p.add_argument("--n-times", type=int, default=201)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--n-samples", type=int, default=2000)
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--fit-terms", type=int, default=5)
    p.add_argument("--ladder", action="store_true",
                   help="run the k_max-1 / half-samples convergence ladder")
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--out", default=None, help="output directory")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="entbath",
        description="two qubits in a common (sub-)Ohmic environment")
    parser.add_argument("--config", default=None,
                        help="key = value file preloading long-form options")
    sub = parser.add_subparsers(dest="command", required=True)

    p_spec = sub.add_parser("spectral", help="dump environment tables as CSV")
    _add_env_args(p_spec)
    p_spec.add_argument("--table", choices=["functions", "sx"],
                        default="functions",
                        help="functions: J/S/F/BCF; sx: S(x) exact vs "
                             "expansion vs quadrature")
    p_spec.add_argument("--s-values", default="0.1,0.3,0.5,0.7,1.0",
                        help="comma list for the sx table")
    p_spec.add_argument("--out", default=None, help="output CSV path")

    p_fit = sub.add_parser("fit-bcf", help="fit the BCF by decaying exponentials")
    _add_env_args(p_fit)
    p_fit.add_argument("--n-terms", type=int, default=5)
    p_fit.add_argument("--t-max", type=float, default=None)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", default=None, help="output JSON path")

    p_run = sub.add_parser("run", help="run one scenario")
    _add_scenario_args(p_run)
    p_run.add_argument("--methods", default="hops,qome",
                       help="comma list, each 'name' or 'name:part+part' "
                            "(e.g. prwa:dissipator)")
    p_run.add_argument("--counterterm", action="store_true",
                       help="include the counterterm in the Hamiltonian")
    p_run.add_argument("--scenario", default="run")

    p_ct = sub.add_parser("counterterm", help="counterterm study across s")
    _add_scenario_args(p_ct)
    p_ct.add_argument("--s-values", default="0.3,1.0")
    p_ct.add_argument("--scenario", default="counterterm")

    p_ad = sub.add_parser("adiabatic", help="cutoff ladder at fixed |S(0)|")
    _add_scenario_args(p_ad)
    p_ad.add_argument("--s0", type=float, default=0.03,
                      help="|S(0)| / omega_A held fixed along the ladder")
    p_ad.add_argument("--omega-c-ladder", default="10,100,1000")
    p_ad.add_argument("--spectral-only", action="store_true",
                      help="only the fast scaling gate, no dynamics")
    p_ad.add_argument("--scenario", default="adiabatic")

    p_as = sub.add_parser("asymptotic", help="long-time plateau / coupling sweep")
    _add_scenario_args(p_as)
    p_as.add_argument("--alpha-tilde-sweep", default="2e-2,6.32e-2,2e-1")
    p_as.add_argument("--window", type=float, default=0.25)
    p_as.add_argument("--methods", default="hops")
    p_as.add_argument("--scenario", default="asymptotic")

    # config file provides defaults for any long option
    if argv is None:
        argv = sys.argv[1:]
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        file_values = _read_config_file(pre.config)
        for p in (p_spec, p_fit, p_run, p_ct, p_ad, p_as):
            known = {a.dest for a in p._actions}
            p.set_defaults(**{k: v for k, v in file_values.items()
                              if k in known})
    args = parser.parse_args(argv)

    if args.command == "spectral":
        return _cmd_spectral(args)
    if args.command == "fit-bcf":
        return _cmd_fit_bcf(args)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "counterterm":
        return _cmd_counterterm(args)
    if args.command == "adiabatic":
        return _cmd_adiabatic(args)
    if args.command == "asymptotic":
        return _cmd_asymptotic(args)
    raise AssertionError("unreachable")


def _cmd_spectral(args) -> int:
    if args.table == "sx":
        s_values = [float(x) for x in str(args.s_values).split(",")]
        alpha = args.alpha if args.alpha is not None else 0.1
        ps = [SpectralParams(alpha=alpha, s=s, omega_c=args.omega_c)
              for s in s_values]
        text = spectral_tables(ps, out_path=args.out)
    else:
        p = _spectral_params(args)
        text = environment_tables(p, out_path=args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.out}")
    return 0


def _cmd_fit_bcf(args) -> int:
    import hashlib

    from entbath.bcf_fit import eval_fit
    from entbath.spectral import bcf_exact

    p = _spectral_params(args)
    fit = fit_bcf(p, n_terms=args.n_terms, t_max=args.t_max, seed=args.seed)
    rep = fit_report(fit, p)
    doc = fit.to_json(p)
    if args.out:
        out = Path(args.out)
        out.write_text(doc)
        # per-tau profile for plotting, with a hashed metadata sidecar
        tau = np.concatenate([[0.0], np.geomspace(1e-4 * fit.t_max,
                                                  fit.t_max, 400)])
        exact = bcf_exact(p, tau)
        approx = eval_fit(fit, tau)
        lines = ["tau,bcf_re,bcf_im,fit_re,fit_im,abs_err"]
        for i in range(len(tau)):
            lines.append(",".join(f"{v:.17g}" for v in (
                tau[i], exact[i].real, exact[i].imag, approx[i].real,
                approx[i].imag, abs(approx[i] - exact[i]))))
        profile = out.with_suffix(".profile.csv")
        profile.write_text("\n".join(lines) + "\n", encoding="utf-8")
        cfg_hash = hashlib.sha256(doc.encode()).hexdigest()[:16]
        profile.with_suffix(".meta.json").write_text(json.dumps({
            "config_hash": cfg_hash, "alpha": p.alpha, "s": p.s,
            "omega_c": p.omega_c, "n_terms": args.n_terms,
            "norm_scale": fit.norm_scale,
            "max_abs_err": fit.max_abs_err}, indent=2) + "\n")
        print(f"wrote {args.out} and {profile}")
    else:
        print(doc)
    print(f"max abs err {fit.max_abs_err:.3e} "
          f"(normalized {fit.max_abs_err / fit.norm_scale:.3e}), "
          f"tracking horizon tau* = {rep.tau_star:.4g} "
          f"of t_max = {fit.t_max:.4g}")
    return 0


def _parse_methods(text: str):
    return tuple(MethodSpec.parse(tok) for tok in str(text).split(",") if tok)


def _cmd_run(args) -> int:
    cfg = _scenario_from_args(args, args.scenario, _parse_methods(args.methods))
    rec = run_scenario(cfg)
    for a_b, v in rec.metrics["pairwise_sup_dc"].items():
        print(f"sup|dc| {a_b}: {v:.4f}")
    for label, v in rec.metrics["hs_error_vs_reference"].items():
        print(f"HS error vs hops {label}: max {v['max']:.4f} mean {v['mean']:.4f}")
    if cfg.out_dir:
        print(f"outputs in {cfg.out_dir}")
    return 0


def _cmd_counterterm(args) -> int:
    s_values = tuple(float(x) for x in str(args.s_values).split(","))
    base = _scenario_from_args(args, args.scenario, (MethodSpec("hops"),))
    table = counterterm_study(base, s_values=s_values)
    for s, row in table.items():
        print(f"s = {s}: D = {row['D']:.4f}")
    if len(s_values) == 2:
        lo, hi = min(s_values), max(s_values)
        print(f"D({lo}) / D({hi}) = {table[lo]['D'] / table[hi]['D']:.2f}")
    return 0


def _cmd_adiabatic(args) -> int:
    import hashlib

    ladder = tuple(float(x) for x in str(args.omega_c_ladder).split(","))
    if args.spectral_only:
        gate = adiabatic_spectral_gate(args.s, args.s0, ladder)
        gate["config_hash"] = hashlib.sha256(json.dumps(
            {"s": args.s, "s0": args.s0, "ladder": ladder},
            sort_keys=True).encode()).hexdigest()[:16]
        text = json.dumps(gate, indent=2)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / "adiabatic_gate.json").write_text(text + "\n")
            print(f"wrote {args.out}/adiabatic_gate.json")
        else:
            print(text)
        return 0
    base = _scenario_from_args(args, args.scenario, (MethodSpec("hops"),))
    result = adiabatic_scan(base, s0_over_omega_a=args.s0,
                            omega_c_ladder=ladder)
    print(json.dumps(result["gate"], indent=2))
    for wc, row in result["rungs"].items():
        print(f"omega_c = {wc}: D = {row['D']:.4f}, "
              f"unitary-only peak = {row['unitary_only_peak']:.4f}")
    return 0


def _cmd_asymptotic(args) -> int:
    sweep = [float(x) for x in str(args.alpha_tilde_sweep).split(",")]
    methods = _parse_methods(args.methods)
    c_infs = []
    for at in sweep:
        cfg = _scenario_from_args(args, f"{args.scenario}_at{at}", methods)
        cfg = ScenarioConfig(**{**cfg.__dict__, "alpha": None,
                                "alpha_tilde": at,
                                "out_dir": (f"{args.out}/at{at}"
                                            if args.out else None)})
        rec = run_scenario(cfg)
        label = methods[0].label
        try:
            res = asymptotic_concurrence(rec.t, rec.concurrence[label],
                                         window=args.window)
        except NonStationaryTail as exc:
            raise SystemExit(f"alpha_tilde={at}: {exc}")
        c_infs.append(res["c_inf"])
        print(f"alpha_tilde = {at}: c_inf = {res['c_inf']:.5f} "
              f"(drift {res['drift']:.2e})")
    if len(sweep) >= 2 and all(c > 0 for c in c_infs):
        print(f"log-log slope: {asymptotic_sweep_slope(sweep, c_infs):.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
