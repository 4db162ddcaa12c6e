"""Scripted step models for driving the decoders with constructed log-probabilities."""

import math
from dataclasses import dataclass

import numpy as np

START, EOS, EOA = 0, 1, 2
A, B, C, D, E = 3, 4, 5, 6, 7
NEG = -50.0


@dataclass
class Plan:
    state: int
    selected: tuple
    stop: bool = False
    label: int = 1


class Scripted:
    """Step model whose log-probabilities are a function of the whole token history."""

    start_id, eos_id, eoa_id = START, EOS, EOA

    def __init__(self, table, V=8, phrases=((A,),), plans=((0,),), max_plans=2):
        self.table, self.V, self.phrases = table, V, list(phrases)
        self.plans, self.max_plans = plans, max_plans

    def start(self):
        return 0, ()

    def plan(self, pstate, used):
        sel = self.plans[pstate] if pstate < len(self.plans) else ()
        return Plan(pstate + 1, tuple(m for m in sel if m not in used), stop=pstate >= self.max_plans)

    def step(self, hist, prev, plan):
        hist = hist + ((prev,) if prev != START else ())
        lp = np.full(self.V, NEG)
        for tok, p in self.table(hist).items():
            lp[tok] = math.log(p) if p > 0 else -np.inf
        return hist, lp


def coverage_table(hist):
    if hist == ():
        return {A: 0.3, C: 0.6, B: 0.1}
    if hist == (C,):
        return {EOS: 0.9, B: 0.1}
    if hist == (A,):
        return {EOS: 0.4, B: 0.6}
    if hist == (A, B):
        return {}
    if hist[-1] == EOS:
        return {D: 0.7, E: 0.3}
    return {EOA: 0.99, D: 0.01}


def random_table(seed, V, loopy):
    def table(hist):
        rng = np.random.default_rng([seed, len(hist), *hist[-3:]])
        logits = rng.standard_normal(V) * 2.0
        if loopy and hist:
            logits[3 + (hist[-1] + 1) % 3] += 6.0  # pull towards a short cycle
        logits[START] = -np.inf
        logits[EOA] -= 3.0
        p = np.exp(logits - logits.max())
        p /= p.sum()
        return {t: max(float(q), 1e-300) for t, q in enumerate(p) if t != START}

    return table
