"""Per-criterion outcomes of the acceptance suite, printed at the end of
the pytest run."""

TITLES = {
    1: "navigation: 13 transitions, valid, under 60 s",
    2: "piano: 12 transitions, valid, under 120 s, nothing at horizon 11",
    3: "phagocytosis: 9 transitions, valid, under 120 s",
    4: "translation size: n(n+3)/2 unfolded, 2 element + 4 ordering in array mode",
    5: "translations agree with the evaluator, depth <= 3, traces <= 4, under 5 min",
    6: "builtin calculi coherent, cardinal table equals the grid oracle",
    7: "GAC sound and order independent on 200 random stores",
    8: "solve_all on the RCC8 triangle equals brute force",
}

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)


def lines() -> list[str]:
    out = []
    for n, title in TITLES.items():
        ok, detail = RESULTS.get(n, (False, "not run"))
        out.append(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
    return out
