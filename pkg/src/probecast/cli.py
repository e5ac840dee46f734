"""Command-line entry point wiring the whole workflow together.

Subcommands: probe, profile, collect, train, search, predict, eval, synth,
load, kernel, balance. Every randomized subcommand takes a --seed and is
byte-reproducible for identical inputs and seeds. A JSON config file given
with --config supplies defaults for any flag of the invoked subcommand;
explicit flags win.
"""

import argparse
import json
import logging
import sys

from .errors import ProbecastError

log = logging.getLogger("probecast")


def _add_probe_size_flags(p):
    p.add_argument("--workers", type=int, default=None,
                   help="CPU/memory probe worker threads (default: logical CPUs)")
    p.add_argument("--disk-workers", type=int, default=None,
                   help="disk probe worker threads (default: 4)")
    p.add_argument("--mem-array-bytes", type=int, default=None)
    p.add_argument("--mem-stride-bytes", type=int, default=None)
    p.add_argument("--disk-file-bytes", type=int, default=None)
    p.add_argument("--disk-page-bytes", type=int, default=None)
    p.add_argument("--disk-path", default=None, help="probe file path")


def _profile_settings(args):
    from .profiler import ProfileSettings
    defaults = ProfileSettings()
    return ProfileSettings(
        workers=args.workers,
        disk_workers=args.disk_workers,
        mem_array_bytes=args.mem_array_bytes or defaults.mem_array_bytes,
        mem_stride_bytes=args.mem_stride_bytes or defaults.mem_stride_bytes,
        disk_file_bytes=args.disk_file_bytes or defaults.disk_file_bytes,
        disk_page_bytes=args.disk_page_bytes or defaults.disk_page_bytes,
        disk_path=args.disk_path or defaults.disk_path,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probecast",
        description="Contention probes, execution-time prediction and "
                    "contention-aware load-balancing simulation.")
    parser.add_argument("--config", default=None,
                        help="JSON file of default flag values per subcommand")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="run one micro-benchmark")
    p.add_argument("--kind", required=True, choices=["cpu", "mem", "disk"])
    p.add_argument("--duration", type=float, required=True, help="seconds")
    _add_probe_size_flags(p)

    p = sub.add_parser("profile", help="run all three probes sequentially")
    p.add_argument("--window", type=float, default=3.0, help="seconds per probe")
    _add_probe_size_flags(p)

    p = sub.add_parser("collect", help="collect training tuples for a target command")
    p.add_argument("--window", type=float, default=3.0)
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--data", required=True, help="dataset CSV to append to")
    p.add_argument("--pause", type=float, default=0.0,
                   help="seconds between iterations (default 0)")
    _add_probe_size_flags(p)
    p.add_argument("target", nargs=argparse.REMAINDER,
                   help="target command after '--', e.g. -- mybench --size 3")

    p = sub.add_parser("train", help="train a model on a dataset CSV")
    p.add_argument("--model", required=True,
                   choices=["elasticnet", "lasso", "ridge", "sgd", "svr", "mlp"])
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=None, help="linear trainers")
    p.add_argument("--svr-epsilon", type=float, default=0.1)
    p.add_argument("--svr-c", type=float, default=1000.0)
    p.add_argument("--layers", default=None,
                   help="MLP neurons per layer, comma separated (e.g. 8,8)")
    p.add_argument("--epochs", type=int, default=500)

    p = sub.add_parser("search", help="search NN structures on a dataset")
    p.add_argument("--method", required=True, choices=["random", "bayes", "tpe"])
    p.add_argument("--data", required=True)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--out", required=True, help="search record CSV to write")

    p = sub.add_parser("predict", help="profile now and predict with a model")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--window", type=float, default=3.0)
    p.add_argument("--from-counters", default=None, metavar="CPU,MEM,DISK",
                   help="skip profiling and predict for these counter values")
    _add_probe_size_flags(p)

    p = sub.add_parser("eval", help="evaluate a model file on a dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=["all", "train", "test"], default="all",
                   help="which 4-of-5 side to evaluate (default: all rows)")

    p = sub.add_parser("synth", help="generate a synthetic ground-truth dataset")
    p.add_argument("--oracle", choices=["poly2", "exp"], default="poly2")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)

    p = sub.add_parser("load", help="run a background load injector")
    p.add_argument("--kind", required=True, choices=["cpu", "mem", "disk"])
    p.add_argument("--intensity", type=int, default=1, help="worker count")
    p.add_argument("--duration", type=float, required=True, help="seconds")

    p = sub.add_parser("kernel", help="run the contention-sensitive target kernel")
    p.add_argument("--work-units", type=int, required=True)
    p.add_argument("--array-bytes", type=int, default=None)

    p = sub.add_parser("balance", help="simulate load-balancing policies")
    p.add_argument("--scenario", required=True,
                   help="scenario JSON, or 'builtin:asymmetric'")
    p.add_argument("--policy", default=None,
                   choices=["alternate", "queue", "predictive"],
                   help="override the scenario's policy")
    p.add_argument("--seed", type=int, default=None, help="override workload seed")
    p.add_argument("--out", default=None, help="write report CSV here")

    return parser


def _apply_config(parser, argv):
    """Fold --config file values in as subcommand defaults."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    try:
        path = argv[i + 1]
    except IndexError:
        return argv
    with open(path, "r", encoding="utf-8") as f:
        conf = json.load(f)
    command = next((a for a in argv if not a.startswith("-") and a != path), None)
    extra = []
    for flag, value in conf.get(command, {}).items():
        flag = "--" + flag.replace("_", "-").lstrip("-")
        if flag not in argv:
            extra += [flag, str(value)]
    head = argv[:i] + argv[i + 2:]
    cmd_at = head.index(command)
    return head[:cmd_at + 1] + extra + head[cmd_at + 1:]


def dispatch(argv) -> int:
    parser = build_parser()
    argv = list(argv)
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run(args)
    except ProbecastError as exc:
        print(f"probecast: error: {exc}", file=sys.stderr)
        return 1


def _run(args) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    if args.command == "probe":
        from .probes import run_probe
        config = _profile_settings(args).probe_config(_kind(args.kind), args.duration)
        r = run_probe(config)
        print(f"{r.kind.value},{len(r.per_worker_counts)},{r.count},{r.elapsed!r}")
        return 0

    if args.command == "profile":
        from .dataset import format_seconds
        from .profiler import profile
        v = profile(args.window, _profile_settings(args))
        print(",".join([format_seconds(v.taken_at), format_seconds(v.window),
                        str(v.c_cpu), str(v.c_mem), str(v.c_disk)]))
        return 0

    if args.command == "collect":
        from .profiler import collect_campaign
        target = [a for a in args.target if a != "--"]
        if not target:
            print("probecast: error: no target command given after --", file=sys.stderr)
            return 2
        stored = collect_campaign(target, args.window, args.iterations,
                                  args.data, _profile_settings(args), pause=args.pause)
        print(stored)
        return 0 if stored > 0 else 1

    if args.command == "train":
        return _cmd_train(args)

    if args.command == "search":
        return _cmd_search(args)

    if args.command == "predict":
        from .modelio import load_model, predict
        from .profiler import profile
        pm = load_model(args.model)
        if args.from_counters:
            counters = tuple(float(v) for v in args.from_counters.split(","))
        else:
            counters = profile(args.window, _profile_settings(args)).as_tuple()
        print(repr(predict(pm, counters)))
        return 0

    if args.command == "eval":
        from .dataset import as_arrays, load, split_4of5
        from .metrics import ape_batch, report_csv, summarize
        from .modelio import load_model, predict_batch
        pm = load_model(args.model)
        ds = load(args.data)
        indices = None
        if args.split != "all":
            s = split_4of5(ds)
            indices = s.train_indices if args.split == "train" else s.test_indices
        X, y = as_arrays(ds, indices)
        summary = summarize(ape_batch(y, predict_batch(pm, X)))
        sys.stdout.write(report_csv([(f"{pm.kind}-{args.split}", summary)]))
        return 0

    if args.command == "synth":
        from .dataset import save
        from .synthlab import default_exp_spec, default_poly2_spec, gen_synth_dataset
        make = default_poly2_spec if args.oracle == "poly2" else default_exp_spec
        spec = make(n=args.n, noise_sigma=args.noise, seed=args.seed)
        save(gen_synth_dataset(spec), args.out)
        print(f"{args.out}: {args.n} samples ({args.oracle} oracle, seed {args.seed})")
        return 0

    if args.command == "load":
        import time as _time
        from .synthlab import LoadSpec, start_load
        kind = {"cpu": "cpu_hog", "mem": "mem_stream", "disk": "disk_read"}[args.kind]
        handle = start_load(LoadSpec(kind=kind, intensity=args.intensity,
                                     duration=args.duration))
        try:
            _time.sleep(args.duration)
        finally:
            handle.stop()
        return 0

    if args.command == "kernel":
        from .synthlab import KERNEL_ARRAY_BYTES, run_target_kernel
        elapsed = run_target_kernel(
            args.work_units, array_bytes=args.array_bytes or KERNEL_ARRAY_BYTES)
        print(repr(elapsed))
        return 0

    if args.command == "balance":
        return _cmd_balance(args)

    raise AssertionError(f"unhandled command {args.command!r}")  # pragma: no cover


def _kind(name):
    from .probes import ProbeKind
    return ProbeKind(name)


def _cmd_train(args) -> int:
    from .dataset import as_arrays, load, split_4of5
    from .metrics import ape_batch, report_csv, summarize
    from .modelio import predict_batch, save_model, wrap_model

    ds = load(args.data)
    s = split_4of5(ds)
    X_train, y_train = as_arrays(ds, s.train_indices)
    X_test, y_test = as_arrays(ds, s.test_indices)

    if args.model in ("elasticnet", "lasso", "ridge", "sgd"):
        from .linear import default_hyperparameters, train_linear
        hp = default_hyperparameters(args.model)
        if args.alpha is not None:
            from dataclasses import replace
            hp = replace(hp, alpha=args.alpha)
        model = train_linear(args.model, X_train, y_train, hp, seed=args.seed)
    elif args.model == "svr":
        from .svr import train_svr
        model = train_svr(X_train, y_train, C=args.svr_c, epsilon=args.svr_epsilon)
    else:
        from .mlp import NNConfig, TrainOptions, train_mlp
        neurons = [int(v) for v in (args.layers or "16,16").split(",")]
        model = train_mlp(X_train, y_train, NNConfig.of(neurons),
                          TrainOptions(seed=args.seed, epochs=args.epochs))

    pm = wrap_model(model, n_samples=len(y_train))
    save_model(pm, args.out)
    rows = [(f"{args.model}-train",
             summarize(ape_batch(y_train, predict_batch(pm, X_train))))]
    if len(y_test):
        rows.append((f"{args.model}-test",
                     summarize(ape_batch(y_test, predict_batch(pm, X_test)))))
    sys.stdout.write(report_csv(rows))
    return 0


def _cmd_search(args) -> int:
    from .dataset import as_arrays, load, split_4of5
    from .hypersearch import (
        SearchSpace, bayes_opt, make_mlp_objective, random_search, tpe_search)
    from .mlp import TrainOptions

    ds = load(args.data)
    s = split_4of5(ds)
    X, y = as_arrays(ds, s.train_indices)
    objective = make_mlp_objective(
        X, y, seed=args.seed, options=TrainOptions(epochs=args.epochs))
    space = SearchSpace()
    searcher = {"random": random_search, "bayes": bayes_opt, "tpe": tpe_search}[args.method]
    record = searcher(space, args.budget, objective, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        f.write(record.to_csv())
    best = record.best_config
    print(f"best: layers={best.hidden_layers} "
          f"neurons={','.join(str(n) for n in best.neurons_per_layer)} "
          f"score={record.best_score!r}")
    return 0


def _cmd_balance(args) -> int:
    from .balancer import (
        DEFAULT_PROFILING_COST, POLICIES, asymmetric_scenario, gen_workload,
        load_scenario, report_csv, simulate)

    if args.scenario == "builtin:asymmetric":
        traces = asymmetric_scenario()
        policy, seed, high_load = "predictive", 0, True
        cost = DEFAULT_PROFILING_COST
    else:
        traces, policy, seed, high_load, cost = load_scenario(args.scenario)
    if args.policy:
        policy = args.policy
    if args.seed is not None:
        seed = args.seed

    workload = gen_workload(seed, high_load=high_load)
    report = simulate(workload, traces, policy, profiling_cost=cost)
    text = report_csv(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    print(f"{policy}: mean_turnaround={report.mean_turnaround:.1f}s "
          f"mean_execution={report.mean_execution:.1f}s "
          f"requests={len(report.per_request)}")
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
