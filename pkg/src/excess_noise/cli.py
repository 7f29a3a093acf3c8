"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 a validation check failed.
"""

import argparse
import json
import sys
from pathlib import Path

from .config import parse_config
from .errors import ConfigError, ExcessNoiseError, NumericalError, ResolutionError
from .runner import rows_to_csv, run_solve, run_sweep, run_validate, sweep_rows
from .scenarios import SELFTEST_SEED, selftest_json

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


def _load(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read config: {exc}") from None
    return parse_config(text)


def _parse_values(text):
    if text is None or not text.strip():
        return []
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("--values", f"not a comma-separated list of numbers: {text!r}") from None


def _emit(text, out):
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _single_row_csv(output):
    rep, res = output["report"], output["residuals"]
    row = {
        "value": "",
        **{k: rep[k] for k in ("K", "K_tilde", "ratio", "ratio_excess", "Omega", "lambda", "gamma")},
        **{k: res[k] for k in ("biorthogonality", "completeness", "norm_N2", "norm_N2_bar")},
        "config_hash": output["provenance"]["config_hash"],
    }
    return rows_to_csv([row])


def _format(output, fmt):
    if fmt == "csv":
        return _single_row_csv(output)
    return json.dumps(output, indent=2, sort_keys=True)


def build_parser():
    parser = argparse.ArgumentParser(prog="excess-noise", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="json"):
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=fmt_default)

    common(sub.add_parser("solve", help="solve one scenario"))
    sw = sub.add_parser("sweep", help="sweep one numeric config field")
    common(sw, "csv")
    sw.add_argument("--param", required=True, help="dotted path, e.g. loss.strength")
    sw.add_argument("--values", required=True, help="comma-separated values")
    common(sub.add_parser("validate", help="solve and check noise dynamics"))
    st = sub.add_parser("selftest", help="run built-in invariant checks")
    st.add_argument("--out")
    st.add_argument("--seed", type=int, default=SELFTEST_SEED)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            text = selftest_json(args.seed)
            _emit(text, args.out)
            return EXIT_OK if json.loads(text)["passed"] else EXIT_CHECK
        cfg = _load(args.config)
        if args.command == "solve":
            _emit(_format(run_solve(cfg), args.format), args.out)
            return EXIT_OK
        if args.command == "sweep":
            values = _parse_values(args.values)
            if args.format == "json":
                _emit(json.dumps(sweep_rows(cfg, args.param, values), indent=2, sort_keys=True), args.out)
            else:
                _emit(run_sweep(cfg, args.param, values), args.out)
            return EXIT_OK
        output = run_validate(cfg)
        _emit(_format(output, args.format), args.out)
        return EXIT_CHECK if output["dynamics"]["status"] == "fail" else EXIT_OK
    except (ConfigError, ResolutionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ExcessNoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
