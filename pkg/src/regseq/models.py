"""Built-in representations and compilers: digit transducers, esthetic-number
automata, Pascal's rhombus row counts, digit sums, Stern-Brocot, and the
generic shifted-recurrence compiler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

from gmpy2 import mpq

from .exact import identity, mat_vec, zeros
from .linrep import LinRep, Mode, make_linrep


class IncompleteTransducer(ValueError):
    """A (state, digit) pair has no transition or more than one."""


class WindowInsufficient(ValueError):
    """The shifted-recurrence window does not close under the digit maps."""


@dataclass
class Transducer:
    """Complete deterministic subsequential transducer on digits 0..q-1.

    States are numbered 1..d with state 1 initial; ``transitions[(j, r)]``
    is the pair (target state, output label), ``final[j]`` the final output
    written when halting in state j.
    """

    q: int
    n_states: int
    transitions: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)

    def validate(self) -> "Transducer":
        for j in range(1, self.n_states + 1):
            for r in range(self.q):
                if (j, r) not in self.transitions:
                    raise IncompleteTransducer(f"no transition from state {j} on digit {r}")
            if j not in self.final:
                raise IncompleteTransducer(f"state {j} has no final output")
        for (j, r), (t, _) in self.transitions.items():
            if not (1 <= j <= self.n_states and 1 <= t <= self.n_states):
                raise IncompleteTransducer(f"transition {j} --{r}--> {t} out of range")
            if not 0 <= r < self.q:
                raise IncompleteTransducer(f"digit {r} out of range")
        return self

    def run(self, n: int) -> mpq:
        """Sum of output labels on the q-ary expansion of n, plus final output."""
        state = 1
        total = mpq(0)
        m = n
        while m:
            m, r = divmod(m, self.q)
            state, out = self.transitions[(state, r)]
            total += out
        return total + self.final[state]


def parse_transducer(text: str) -> Transducer:
    """Line-based format::

        states 2
        digits 2
        1 --0/0--> 1
        1 --1/1--> 2
        2 --0/0--> 1
        2 --1/0--> 2
        final 1 0
        final 2 1/2

    Blank lines and ``#`` comments are ignored.
    """
    n_states = q = None
    transitions = {}
    final = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "states":
            n_states = int(parts[1])
        elif parts[0] == "digits":
            q = int(parts[1])
        elif parts[0] == "final":
            final[int(parts[1])] = mpq(parts[2])
        elif "--" in line and "-->" in line:
            src, rest = line.split("--", 1)
            label, dst = rest.split("-->", 1)
            r, out = label.strip().split("/", 1)
            key = (int(src.strip()), int(r))
            if key in transitions:
                raise IncompleteTransducer(f"line {lineno}: duplicate transition {key}")
            transitions[key] = (int(dst.strip()), mpq(out))
        else:
            raise IncompleteTransducer(f"line {lineno}: cannot parse {raw!r}")
    if n_states is None or q is None:
        raise IncompleteTransducer("missing 'states' or 'digits' header")
    return Transducer(q=q, n_states=n_states, transitions=transitions,
                      final=final).validate()


def transducer_to_linrep(t: Transducer) -> LinRep:
    """Sequence-mode representation of the output sum, dimension d+2.

    The state vector is (T_1(n), ..., T_d(n), 1, [n=0]); the digit-0 matrix
    carries correction entries so that the recursion holds at n = r = 0 too.
    """
    t.validate()
    d = t.n_states
    matrices = []
    for r in range(t.q):
        a = [[mpq(0)] * (d + 2) for _ in range(d + 2)]
        for j in range(1, d + 1):
            tgt, out = t.transitions[(j, r)]
            a[j - 1][tgt - 1] = mpq(1)
            a[j - 1][d] = out
            if r == 0:
                a[j - 1][d + 1] = t.final[j] - t.final[tgt] - out
        a[d][d] = mpq(1)
        if r == 0:
            a[d + 1][d + 1] = mpq(1)
        matrices.append(a)
    left = [mpq(0)] * (d + 2)
    left[0] = mpq(1)
    initial = [t.final[j] for j in range(1, d + 1)] + [mpq(1), mpq(1)]
    return make_linrep(t.q, matrices, left, initial, Mode.SEQUENCE)


def transducer_period(t: Transducer) -> int:
    """Final period: lcm of the cycle-length gcds of the final components."""
    t.validate()
    succ = {j: sorted({t.transitions[(j, r)][0] for r in range(t.q)})
            for j in range(1, t.n_states + 1)}
    comps = _strongly_connected_components(succ)
    comp_of = {}
    for idx, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = idx
    period = 1
    for idx, comp in enumerate(comps):
        is_final = all(comp_of[w] == idx for v in comp for w in succ[v])
        if not is_final:
            continue
        period = period * _component_period(comp, succ) // gcd(
            period, _component_period(comp, succ))
    return period


def _strongly_connected_components(succ: dict) -> list[list[int]]:
    """Tarjan's algorithm, iterative."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = [0]
    for root in succ:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def _component_period(comp: list[int], succ: dict) -> int:
    """gcd of cycle lengths inside a strongly connected component."""
    comp_set = set(comp)
    start = comp[0]
    level = {start: 0}
    queue = [start]
    g = 0
    while queue:
        v = queue.pop()
        for w in succ[v]:
            if w not in comp_set:
                continue
            if w in level:
                g = gcd(g, level[v] + 1 - level[w])
            else:
                level[w] = level[v] + 1
                queue.append(w)
    # multi-edges within the component also close cycles seen above
    return abs(g) if g else 1


# -- paper models ------------------------------------------------------------------


def sum_of_digits(q: int = 2) -> LinRep:
    """Digit-sum sequence: v(n) = (s(n), 1), s(qn+r) = s(n) + r."""
    matrices = []
    for r in range(q):
        matrices.append([[1, r], [0, 1]])
    return make_linrep(q, matrices, [1, 0], [0, 1], Mode.SEQUENCE)


def esthetic(q: int) -> LinRep:
    """Indicator of integers whose adjacent q-ary digits differ by exactly 1.

    Automaton transition matrices of dimension q+1 (states 0..q-1 and the
    initial state); matrix-product mode since A_0 v0 = 0 != v0.
    """
    if q < 2:
        raise ValueError("q must be at least 2")
    d = q + 1
    matrices = []
    for r in range(q):
        a = [[mpq(0)] * d for _ in range(d)]
        if r - 1 >= 0:
            a[r - 1][r] = mpq(1)
        if r + 1 <= q - 1:
            a[r + 1][r] = mpq(1)
        a[q][r] = mpq(1)
        matrices.append(a)
    left = [mpq(0)] * d
    left[q] = mpq(1)
    initial = [mpq(1)] * d
    initial[0] = mpq(0)
    return make_linrep(q, matrices, left, initial, Mode.MATRIX_PRODUCT)


def pascal_rhombus() -> LinRep:
    """Odd entries per row of Pascal's rhombus: v(n) = (x(n), x(n+1), y(n+1), z(n), z(n+1))."""
    a0 = [
        [1, 0, 0, 1, 0],
        [0, 0, 1, 0, 0],
        [0, 1, 0, 1, 0],
        [2, 0, 0, 0, 0],
        [0, 0, 2, 0, 0],
    ]
    a1 = [
        [0, 0, 1, 0, 0],
        [0, 1, 0, 0, 1],
        [1, 0, 0, 0, 1],
        [0, 0, 2, 0, 0],
        [0, 2, 0, 0, 0],
    ]
    return make_linrep(2, [a0, a1], [1, 0, 0, 0, 0], [0, 1, 1, 0, 2], Mode.SEQUENCE)


def stern_brocot() -> LinRep:
    """Stern-Brocot: x(2n) = x(n), x(2n+1) = x(n) + x(n+1); v = (x(n), x(n+1), x(n+2))."""
    a0 = [[1, 0, 0], [1, 1, 0], [0, 1, 0]]
    a1 = [[1, 1, 0], [0, 1, 0], [0, 1, 1]]
    return make_linrep(2, [a0, a1], [1, 0, 0], [0, 1, 1], Mode.SEQUENCE)


def shift_rule_to_linrep(q: int, lo: int, hi: int, coeffs: dict,
                         initial_terms=None) -> LinRep:
    """Compile x(qn+r) = sum_{lo<=k<=hi} c[r,k] x(n+k) into a representation.

    ``coeffs[(r, k)]`` are the rational coefficients; absent keys are zero.
    The window is v(n) = (x(n+lo'), ..., x(n+u')) with lo' = floor(q lo/(q-1))
    and u' = ceil(q hi/(q-1)); when lo' < 0 the components are permuted so
    that x(n) comes first (indices below zero read as zero).

    ``initial_terms`` supplies x(0), x(1), ...; if omitted, the initial vector
    is derived from the fixed-vector condition v(0) = A_0 v(0), which must
    pin it down up to scale (first nonzero component normalized to 1).
    """
    if not (lo <= 0 <= hi):
        raise WindowInsufficient("need lo <= 0 <= hi")
    lo_p = (q * lo) // (q - 1)
    hi_p = -((-q * hi) // (q - 1))
    width = hi_p - lo_p + 1
    offsets = list(range(lo_p, hi_p + 1))
    matrices = []
    for r in range(q):
        a = [[mpq(0)] * width for _ in range(width)]
        for i, j in enumerate(offsets):
            # component i of v(qn+r) is x(q n + r + j) = x(q(n + m) + r2)
            m, r2 = divmod(r + j, q)
            for k in range(lo, hi + 1):
                c = mpq(coeffs.get((r2, k), 0))
                if not c:
                    continue
                kk = m + k
                if not lo_p <= kk <= hi_p:
                    raise WindowInsufficient(
                        f"needed x(n{kk:+d}) outside the window [{lo_p}, {hi_p}]")
                a[i][kk - lo_p] += c
        matrices.append(a)
    if initial_terms is not None:
        x = {k: mpq(v) for k, v in enumerate(initial_terms)}
        initial = [x.get(j, mpq(0)) if j >= 0 else mpq(0) for j in offsets]
    else:
        initial = _fixed_vector(matrices[0], width)
    left = [mpq(0)] * width
    left[offsets.index(0)] = mpq(1)
    if lo_p < 0:
        # permute x(n) to the front
        perm = [offsets.index(0)] + [i for i in range(width) if offsets[i] != 0]
        matrices = [
            [[a[pi][pj] for pj in perm] for pi in perm] for a in matrices
        ]
        initial = [initial[p] for p in perm]
        left = [mpq(0)] * width
        left[0] = mpq(1)
    return make_linrep(q, matrices, left, initial, Mode.SEQUENCE)


def _fixed_vector(a0, width: int) -> list:
    """Solve v = A_0 v; requires a one-dimensional fixed space."""
    from .exact import mat, mat_sub, identity as ident, rank as exact_rank

    m = mat_sub(mat(a0), ident(width))
    if exact_rank(m) != width - 1:
        raise WindowInsufficient(
            "initial terms required: the fixed space of A_0 is not one-dimensional")
    # kernel vector by elimination
    rows = [list(r) for r in m]
    # reduce
    pivots = []
    rr = 0
    for c in range(width):
        piv = next((i for i in range(rr, width) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rr], rows[piv] = rows[piv], rows[rr]
        inv = 1 / rows[rr][c]
        rows[rr] = [x * inv for x in rows[rr]]
        for i in range(width):
            if i != rr and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rr])]
        pivots.append(c)
        rr += 1
    free = next(c for c in range(width) if c not in pivots)
    v = [mpq(0)] * width
    v[free] = mpq(1)
    for i, c in enumerate(pivots):
        v[c] = -rows[i][free]
    lead = next(x for x in v if x)
    return [x / lead for x in v]
