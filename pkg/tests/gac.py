"""Generalised arc consistency checks of the propagation engine against the
brute-force fixpoint in :mod:`oracles`."""

from __future__ import annotations

import random

from qualsim.csp import Domain, ExtensionalBinary, ExtensionalTernary, Store

from oracles import all_solutions, random_network, supported_values


def _store_from(domains, cons, order):
    s = Store()
    vs = [s.new_var(Domain.int_set(d)) for d in domains]
    for k in order:
        scope, allowed = cons[k]
        if len(scope) == 2:
            s.post(ExtensionalBinary(vs[scope[0]], vs[scope[1]], allowed))
        else:
            s.post(ExtensionalTernary(*[vs[i] for i in scope], allowed))
    return s, vs


def check_gac_properties(seed: int, permutations: int = 10) -> bool:
    """Soundness against the brute-force fixpoint plus order independence."""
    rng = random.Random(seed)
    n_vars = rng.randint(2, 4)
    domains, cons = random_network(rng, n_vars, rng.randint(2, 8), rng.randint(1, 4))
    expected = supported_values(domains, cons)
    wiped = any(not d for d in expected)
    solutions = all_solutions(domains, cons)
    results = set()
    for _ in range(permutations):
        order = list(range(len(cons)))
        rng.shuffle(order)
        s, vs = _store_from(domains, cons, order)
        ok = s.propagate()
        if not ok:
            if not wiped:
                return False
            results.add(None)
            continue
        doms = [set(s.values(v)) for v in vs]
        # no value occurring in some solution may be removed
        for sol in solutions:
            if any(sol[i] not in doms[i] for i in range(n_vars)):
                return False
        results.add(tuple(frozenset(d) for d in doms))
        if doms != expected:
            return False
    return len(results) == 1
