"""Time the compiled trial kernel against the pure-Python loop.

    python benchmarks/bench_backends.py [--T 2000] [--trials 4] [--repeat 3]

Both kernels play the same trials, so the script also confirms the final
regrets agree exactly before reporting rounds per second.
"""
import argparse
import time

from devlab import _backend
from devlab.engine import SimConfig, run_trial
from devlab.policies import PolicySpec

POLICIES = {
    "straightforward": PolicySpec.straightforward(),
    "ternary": PolicySpec.ternary(),
    "myopic": PolicySpec.myopic(),
    "eve": None,
}


def time_backend(config, backend, repeat):
    best = float("inf")
    finals = None
    for _ in range(repeat):
        start = time.perf_counter()
        finals = [run_trial(config, i, backend).total_regret for i in range(config.trials)]
        best = min(best, time.perf_counter() - start)
    return best, finals


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=2000)
    ap.add_argument("--trials", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _backend.compiled_available():
        raise SystemExit("compiled kernel not built; run `pip install -e .` first")
    rounds = args.T * args.trials
    print(f"{'policy':<16}{'python r/s':>14}{'compiled r/s':>16}{'speedup':>10}  match")
    for name, policy in POLICIES.items():
        policy = policy or PolicySpec.eve(args.T)
        config = SimConfig(policy, horizon=args.T, trials=args.trials)
        t_py, f_py = time_backend(config, "python", args.repeat)
        t_c, f_c = time_backend(config, "compiled", args.repeat)
        print(f"{name:<16}{rounds / t_py:>14.0f}{rounds / t_c:>16.0f}{t_py / t_c:>9.0f}x  {f_py == f_c}")


if __name__ == "__main__":
    main()
