"""Benchmark program generators and a small measurement harness.

Six families, generated at desk scale as .nd source text:

* ``runway``     -- a vehicle with nondeterministic speed crossing n
                    locations while n noisy position measurements are
                    observed; asks whether it ends on the runway.
* ``coupon_prob``/``coupon_ndet`` -- collect N coupons in N rounds
                    drawing two per round, observed distinct; the ndet
                    variant picks one of three differently-skewed bowls
                    per round.
* ``network``    -- packets hop through a load-balanced pair of servers,
                    one lossy, with a nondeterministic protocol choice.
* ``bayes_net``  -- a small survey-style Bayesian network; size 1 makes
                    the parentless nodes nondeterministic.
* ``threesat``   -- random 3-CNF over probabilistic and nondeterministic
                    variables.

Timings are wall clock and collected per phase; reports are plain data.
"""

import random
import time
from concurrent.futures import ProcessPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field

from .checker import InferOptions, infer
from .errors import NdError
from .frontend import compile_source
from .syntax import render_typed_value

FAMILIES = ("runway", "coupon_prob", "coupon_ndet", "network", "bayes_net", "threesat")


@dataclass(frozen=True)
class BenchmarkSpec:
    family: str
    size: tuple = ()
    seed: int = 0


@dataclass
class BenchReport:
    spec: BenchmarkSpec
    status: str = "ok"  # "ok" | "TO" | "error"
    results: dict = field(default_factory=dict)  # rendered value -> probability
    compile_time: float = 0.0
    check_time: float = 0.0
    total_time: float = 0.0
    add_size: int = 0
    mdp_states_pre: int = 0
    mdp_states_post: int = 0
    message: str = ""


def _require(cond, message):
    if not cond:
        raise NdError("unsupported size: " + message)


def generate(spec: BenchmarkSpec) -> str:
    """Source text for a benchmark instance; deterministic given the seed."""
    if spec.family == "runway":
        (n,) = spec.size
        return _runway(n)
    if spec.family == "coupon_prob":
        (n,) = spec.size
        return _coupon(n, nondet=False)
    if spec.family == "coupon_ndet":
        (n,) = spec.size
        return _coupon(n, nondet=True)
    if spec.family == "network":
        (rounds,) = spec.size
        return _network(rounds)
    if spec.family == "bayes_net":
        nondet = bool(spec.size[0]) if spec.size else False
        return _bayes_net(nondet)
    if spec.family == "threesat":
        nvars, nclauses, ndet_percent = spec.size
        return _threesat(nvars, nclauses, ndet_percent, spec.seed)
    raise NdError("unknown benchmark family %r" % spec.family)


def _runway(n: int) -> str:
    _require(2 <= n <= 12, "runway needs 2 <= n <= 12")
    lines = [
        "fun move(pos: int): int {",
        "  let m = if nflip() then flip(0.75) else flip(0.5) in",
        "  if m && pos != %d then pos+1 else pos" % (n - 1),
        "}",
        "",
        "fun step(pos: int, obs: int): int {",
        "  let new_pos = move(pos) in",
        "  let mes = if flip(0.9) then new_pos else uniform(0, %d) in" % n,
        "  let o = observe(mes == obs) in",
        "  new_pos",
        "}",
        "",
    ]
    prev = "0"
    for i in range(n):
        lines.append("let p%d = step(%s, %d) in" % (i + 1, prev, i))
        prev = "p%d" % (i + 1)
    lines.append("%s == 1" % prev)
    return "\n".join(lines) + "\n"


def _coupon(n: int, nondet: bool) -> str:
    _require(2 <= n <= 12, "coupon collector needs 2 <= N <= 12")
    half = n // 2
    lines = []
    if nondet:
        lines += [
            "fun draw(bowl: int): int {",
            "  let low = if bowl == 0 then flip(1/2)",
            "            else if bowl == 1 then flip(1/4) else flip(3/4) in",
            "  if low then uniform(0, %d) else uniform(%d, %d)" % (half, half, n),
            "}",
            "",
        ]
    for r in range(n):
        if nondet:
            lines.append("let bowl%d = choose(0, 3) in" % r)
            lines.append("let c%da = draw(bowl%d) in" % (r, r))
            lines.append("let c%db = draw(bowl%d) in" % (r, r))
        else:
            lines.append("let c%da = uniform(0, %d) in" % (r, n))
            lines.append("let c%db = uniform(0, %d) in" % (r, n))
        lines.append("let o%d = observe(!(c%da == c%db)) in" % (r, r, r))
        for i in range(n):
            prev = "false" if r == 0 else "h%d_%d" % (r - 1, i)
            lines.append(
                "let h%d_%d = %s || c%da == %d || c%db == %d in"
                % (r, i, prev, r, i, r, i)
            )
    last = " && ".join("h%d_%d" % (n - 1, i) for i in range(n))
    lines.append(last)
    return "\n".join(lines) + "\n"


def _network(rounds: int) -> str:
    _require(1 <= rounds <= 200, "network needs 1 <= rounds <= 200")
    lines = [
        "fun hop(alive: Bool): Bool {",
        "  let proto = choose(0, 3) in",
        "  let via_lossy = flip(0.5) in",
        "  let dropped = if via_lossy then",
        "      (if proto == 0 then flip(0.001)",
        "       else if proto == 1 then flip(0.002) else flip(0.004))",
        "    else false in",
        "  alive && !dropped",
        "}",
        "",
    ]
    prev = "true"
    for i in range(rounds):
        lines.append("let a%d = hop(%s) in" % (i + 1, prev))
        prev = "a%d" % (i + 1)
    lines.append(prev)
    return "\n".join(lines) + "\n"


def _bayes_net(nondet: bool) -> str:
    age = "choose(0, 3)" if nondet else \
        "if flip(0.3) then 0 else if flip(3/7) then 1 else 2"
    sex = "nflip()" if nondet else "flip(0.55)"
    return "\n".join([
        "let age = %s in" % age,
        "let sex = %s in" % sex,
        "let edu = if age == 0 then flip(0.75)",
        "          else if age == 1 then flip(0.72) else flip(0.88) in",
        "let work = if edu then flip(0.96) else flip(0.92) in",
        "let city = flip(0.25) in",
        "let o = observe(work || city) in",
        "let transport = if work then",
        "    (if city then (if flip(0.58) then 0 else if flip(24/42) then 1 else 2)",
        "     else (if flip(0.48) then 0 else if flip(42/52) then 1 else 2))",
        "  else",
        "    (if city then (if flip(0.56) then 0 else if flip(36/44) then 1 else 2)",
        "     else (if flip(0.7) then 0 else if flip(21/30) then 1 else 2)) in",
        "transport == 0",
    ]) + "\n"


def _threesat(nvars: int, nclauses: int, ndet_percent: int, seed: int) -> str:
    _require(3 <= nvars <= 40, "threesat needs 3 <= vars <= 40")
    _require(1 <= nclauses <= 200, "threesat needs 1 <= clauses <= 200")
    _require(0 <= ndet_percent <= 100, "ndet share is a percentage")
    rng = random.Random(seed)
    n_ndet = round(nvars * ndet_percent / 100)
    lines = []
    for i in range(nvars):
        rhs = "nflip()" if i < n_ndet else "flip(1/2)"
        lines.append("let x%d = %s in" % (i, rhs))
    clause_texts = []
    for _ in range(nclauses):
        vs = rng.sample(range(nvars), 3)
        lits = [
            ("x%d" % v) if rng.random() < 0.5 else ("!x%d" % v) for v in vs
        ]
        clause_texts.append("(%s || %s || %s)" % tuple(lits))
    for i, text in enumerate(clause_texts):
        prev = "true" if i == 0 else "f%d" % (i - 1)
        lines.append("let f%d = %s && %s in" % (i, prev, text))
    lines.append("f%d" % (nclauses - 1))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- #
# Harness.

def _run_source(source: str, tol: float, compress: bool):
    t0 = time.perf_counter()
    program = compile_source(source)
    result = infer(program, "all", InferOptions(tol=tol, compress=compress))
    total = time.perf_counter() - t0
    rendered = {}
    compile_time = check_time = 0.0
    add_size = pre = post = 0
    for r in result.results:
        key = render_typed_value(r.value, result.surface_result_ty)
        rendered[key] = r.probability
        times = r.stats["times"]
        compile_time += times["reduce"] + times["compile"] + times["guard"] + times["lift"]
        check_time += times["compress"] + times["check"]
        add_size += r.stats["add_nodes"]
        pre += r.stats["mdp_states_pre"]
        post += r.stats["mdp_states_post"]
    return {
        "results": rendered,
        "compile_time": compile_time,
        "check_time": check_time,
        "total_time": total,
        "add_size": add_size,
        "mdp_states_pre": pre,
        "mdp_states_post": post,
    }


def run_bench(specs, tol: float = 1e-6, compress: bool = True,
              timeout: float = None) -> list:
    """Run infer over each spec; a timed-out run yields a TO row, the
    sweep continues.  Runs are sequential for timing fidelity."""
    reports = []
    for spec in specs:
        report = BenchReport(spec)
        try:
            source = generate(spec)
            if timeout is None:
                payload = _run_source(source, tol, compress)
            else:
                with ProcessPoolExecutor(max_workers=1) as pool:
                    future = pool.submit(_run_source, source, tol, compress)
                    try:
                        payload = future.result(timeout=timeout)
                    except FutureTimeout:
                        for proc in pool._processes.values():
                            proc.terminate()
                        report.status = "TO"
                        reports.append(report)
                        continue
            report.results = payload["results"]
            report.compile_time = payload["compile_time"]
            report.check_time = payload["check_time"]
            report.total_time = payload["total_time"]
            report.add_size = payload["add_size"]
            report.mdp_states_pre = payload["mdp_states_pre"]
            report.mdp_states_post = payload["mdp_states_post"]
        except NdError as exc:
            report.status = "error"
            report.message = str(exc)
        reports.append(report)
    return reports


def render_reports(reports) -> str:
    header = ("benchmark", "status", "comp. ms", "check ms", "ADD", "MDP pre",
              "MDP post", "result")
    rows = [header]
    for r in reports:
        name = r.spec.family
        if r.spec.size:
            name += "-" + "x".join(str(s) for s in r.spec.size)
        if r.status != "ok":
            rows.append((name, r.status, "-", "-", "-", "-", "-", r.message))
            continue
        result = ", ".join(
            "%s: %.6f" % (k, v) for k, v in sorted(r.results.items())
        )
        rows.append((
            name, r.status,
            "%.1f" % (r.compile_time * 1e3), "%.1f" % (r.check_time * 1e3),
            str(r.add_size), str(r.mdp_states_pre), str(r.mdp_states_post),
            result,
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"
