"""Exact linear programming over the rationals.

Decides feasibility of systems of linear equalities and (possibly
strict) inequalities with rational coefficients, producing exact
rational witness points.  Equalities are eliminated first by
Gauss-Jordan reduction; the remaining inequality system goes through
Fourier-Motzkin elimination when it is small and through a two-phase
simplex with Bland's rule (no cycling, hence guaranteed termination)
otherwise.  Strict inequalities are handled natively by elimination and
via an auxiliary margin variable in the simplex.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

from . import config

_FM_MAX_VARS = 6
_FM_MAX_CONSTRAINTS = 4000

# A constraint is (coeffs, rhs, strict) meaning coeffs . x >= rhs,
# with > instead of >= when strict is True.


class _EliminationBlowUp(Exception):
    """Internal: Fourier-Motzkin grew too large; retry with simplex."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _dot(coeffs, point) -> Fraction:
    return sum((c * p for c, p in zip(coeffs, point)), start=Fraction(0))


# ---------------------------------------------------------------------------
# equality elimination


def _affine_forms(n_vars, eqs):
    """Gauss-Jordan elimination of ``coeffs . x == rhs`` equalities.

    Returns ``None`` when the equalities are inconsistent, else a pair
    ``(free, forms)`` where ``free`` lists the free variable indices and
    ``forms[v] = (const, coeffs_over_free)`` expresses each original
    variable as an affine function of the free ones.
    """
    rows = [[_frac(c) for c in coeffs] + [_frac(rhs)] for coeffs, rhs in eqs]
    pivot_of_col: dict[int, int] = {}
    r = 0
    for col in range(n_vars):
        pivot_row = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        piv = rows[r][col]
        rows[r] = [x / piv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivot_of_col[col] = r
        r += 1
    for i in range(r, len(rows)):
        if rows[i][n_vars] != 0:
            return None
    free = [v for v in range(n_vars) if v not in pivot_of_col]
    pos_of_free = {v: k for k, v in enumerate(free)}
    forms = []
    for v in range(n_vars):
        if v in pos_of_free:
            vec = [Fraction(0)] * len(free)
            vec[pos_of_free[v]] = Fraction(1)
            forms.append((Fraction(0), tuple(vec)))
        else:
            row = rows[pivot_of_col[v]]
            vec = [-row[f] for f in free]
            forms.append((row[n_vars], tuple(vec)))
    return free, forms


def _substitute(constraint, forms, n_free):
    """Rewrite a constraint over the original variables in terms of the
    free variables using the affine forms."""
    coeffs, rhs, strict = constraint
    const = Fraction(0)
    vec = [Fraction(0)] * n_free
    for c, (f_const, f_vec) in zip(coeffs, forms):
        if c == 0:
            continue
        c = _frac(c)
        const += c * f_const
        for k, fv in enumerate(f_vec):
            if fv != 0:
                vec[k] += c * fv
    return tuple(vec), _frac(rhs) - const, strict


# ---------------------------------------------------------------------------
# Fourier-Motzkin elimination


def _canonical_key(coeffs):
    """Positive rescaling of ``coeffs`` to a primitive integer tuple, plus
    the scale factor applied."""
    mult = lcm(*(c.denominator for c in coeffs)) if coeffs else 1
    ints = [c.numerator * (mult // c.denominator) for c in coeffs]
    g = gcd(*ints) if ints else 0
    if g:
        ints = [x // g for x in ints]
        scale = Fraction(mult, g)
    else:
        scale = Fraction(mult)
    return tuple(ints), scale


def _clean(cons):
    """Drop constant constraints (or report infeasibility) and deduplicate
    parallel constraints, keeping the strongest of each direction.

    Returns ``None`` for an infeasible constant constraint, else a list.
    """
    strongest: dict[tuple, tuple] = {}
    for coeffs, rhs, strict in cons:
        if all(c == 0 for c in coeffs):
            if rhs > 0 or (strict and rhs == 0):
                return None
            continue
        key, scale = _canonical_key(coeffs)
        cand = (rhs * scale, strict)
        cur = strongest.get(key)
        if cur is None or (cand[0], cand[1]) > (cur[0], cur[1]):
            strongest[key] = cand
    return [
        (tuple(Fraction(c) for c in key), rhs, strict)
        for key, (rhs, strict) in strongest.items()
    ]


def _fm_solve(vars_left, cons):
    """Recursive Fourier-Motzkin; returns a ``{var: value}`` witness over
    ``vars_left`` or ``None``."""
    cleaned = _clean(cons)
    if cleaned is None:
        return None
    if not vars_left:
        return {}
    # eliminate the variable generating the fewest pairings
    def cost(v):
        pos = sum(1 for c, _, _ in cleaned if c[v] > 0)
        neg = sum(1 for c, _, _ in cleaned if c[v] < 0)
        return pos * neg
    target = min(vars_left, key=cost)
    lowers, uppers, rest = [], [], []
    for con in cleaned:
        a = con[0][target]
        (lowers if a > 0 else uppers if a < 0 else rest).append(con)
    combos = []
    for cl, rl, sl in lowers:
        for cu, ru, su in uppers:
            al, au = cl[target], cu[target]
            # positive combination cancelling the target variable
            coeffs = tuple((-au) * x + al * y for x, y in zip(cl, cu))
            combos.append((coeffs, (-au) * rl + al * ru, sl or su))
    config.charge(len(combos) + 1, "elimination steps")
    if len(rest) + len(combos) > _FM_MAX_CONSTRAINTS:
        raise _EliminationBlowUp
    sub = _fm_solve([v for v in vars_left if v != target], rest + combos)
    if sub is None:
        return None

    def bound(con):
        coeffs, rhs, strict = con
        a = coeffs[target]
        others = sum(
            (coeffs[v] * sub[v] for v in sub if coeffs[v] != 0), start=Fraction(0)
        )
        return (rhs - others) / a, strict

    lo = hi = None
    lo_strict = hi_strict = False
    for con in lowers:
        val, strict = bound(con)
        if lo is None or val > lo:
            lo, lo_strict = val, strict
        elif val == lo:
            lo_strict = lo_strict or strict
    for con in uppers:
        val, strict = bound(con)
        if hi is None or val < hi:
            hi, hi_strict = val, strict
        elif val == hi:
            hi_strict = hi_strict or strict
    if lo is None and hi is None:
        value = Fraction(0)
    elif hi is None:
        value = lo + 1
    elif lo is None:
        value = hi - 1
    elif lo < hi:
        value = (lo + hi) / 2
    else:
        assert lo == hi and not lo_strict and not hi_strict
        value = lo
    sub[target] = value
    return sub


def _feasible_by_elimination(n_free, cons):
    witness = _fm_solve(list(range(n_free)), [c for c in cons])
    if witness is None:
        return None
    return tuple(witness.get(v, Fraction(0)) for v in range(n_free))


# ---------------------------------------------------------------------------
# two-phase simplex (dictionary form, Bland's rule)


class _Dictionary:
    """Slack-form tableau: basic[i] = b[i] - sum_j a[i][j] * nonbasic[j]."""

    def __init__(self, num_structural, rows):
        # rows: list of (coeffs over structural vars, rhs) meaning
        # coeffs . y <= rhs with y >= 0
        self.nonbasic = list(range(num_structural))
        self.basic = [num_structural + i for i in range(len(rows))]
        self.a = [[_frac(c) for c in coeffs] for coeffs, _ in rows]
        self.b = [_frac(rhs) for _, rhs in rows]
        self.obj = [Fraction(0)] * num_structural
        self.obj_const = Fraction(0)

    def set_objective(self, coeffs_by_var: dict[int, Fraction]):
        """Install maximize sum(coeffs_by_var[v] * x_v), substituting
        current dictionary rows for basic variables."""
        self.obj = [Fraction(0)] * len(self.nonbasic)
        self.obj_const = Fraction(0)
        for var, coeff in coeffs_by_var.items():
            if coeff == 0:
                continue
            if var in self.nonbasic:
                self.obj[self.nonbasic.index(var)] += coeff
            else:
                i = self.basic.index(var)
                self.obj_const += coeff * self.b[i]
                for j in range(len(self.nonbasic)):
                    self.obj[j] -= coeff * self.a[i][j]

    def pivot(self, row, col):
        config.charge(1, "simplex pivots")
        piv = self.a[row][col]
        assert piv != 0
        enter, leave = self.nonbasic[col], self.basic[row]
        # solve row for the entering variable
        new_row = [x / piv for x in self.a[row]]
        new_row[col] = Fraction(1) / piv
        new_b = self.b[row] / piv
        for i in range(len(self.a)):
            if i == row:
                continue
            f = self.a[i][col]
            if f == 0:
                continue
            self.b[i] -= f * new_b
            old = self.a[i]
            self.a[i] = [x - f * y for x, y in zip(old, new_row)]
            self.a[i][col] = -f * new_row[col]
        f = self.obj[col]
        if f != 0:
            self.obj_const += f * new_b
            self.obj = [x - f * y for x, y in zip(self.obj, new_row)]
            self.obj[col] = -f * new_row[col]
        self.a[row], self.b[row] = new_row, new_b
        self.basic[row], self.nonbasic[col] = enter, leave

    def optimize(self):
        """Bland's rule; returns "optimal" or "unbounded"."""
        while True:
            candidates = [j for j in range(len(self.obj)) if self.obj[j] > 0]
            if not candidates:
                return "optimal"
            col = min(candidates, key=lambda j: self.nonbasic[j])
            best = None
            for i in range(len(self.a)):
                if self.a[i][col] > 0:
                    ratio = self.b[i] / self.a[i][col]
                    key = (ratio, self.basic[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], col)

    def value_of(self, var) -> Fraction:
        if var in self.basic:
            return self.b[self.basic.index(var)]
        return Fraction(0)


def _simplex_feasible_le(num_vars, rows, strict_margin_var=None):
    """Feasibility of coeffs . y <= rhs, y >= 0.  When
    ``strict_margin_var`` is given, maximize that variable and require a
    positive optimum.  Returns values for the structural vars or None."""
    dic = _Dictionary(num_vars, rows)
    if dic.b and min(dic.b) < 0:
        # phase 1: auxiliary variable x0 enters every row with coefficient -1
        x0 = num_vars + len(rows)
        for row in dic.a:
            row.append(Fraction(-1))
        dic.nonbasic.append(x0)
        dic.set_objective({x0: Fraction(-1)})
        worst = min(range(len(dic.b)), key=lambda i: dic.b[i])
        dic.pivot(worst, dic.nonbasic.index(x0))
        status = dic.optimize()
        assert status == "optimal"  # aux objective is bounded above by 0
        if dic.obj_const != 0:
            return None
        if x0 in dic.basic:
            i = dic.basic.index(x0)
            assert dic.b[i] == 0
            col = next((j for j in range(len(dic.nonbasic)) if dic.a[i][j] != 0), None)
            if col is None:
                # vacuous row
                del dic.a[i], dic.b[i], dic.basic[i]
            else:
                dic.pivot(i, col)
        col = dic.nonbasic.index(x0)
        del dic.nonbasic[col]
        for row in dic.a:
            del row[col]
        del dic.obj[col]
    if strict_margin_var is not None:
        dic.set_objective({strict_margin_var: Fraction(1)})
        status = dic.optimize()
        assert status == "optimal"  # the margin is capped by an explicit row
        if dic.obj_const <= 0:
            return None
    else:
        dic.set_objective({})
    return tuple(dic.value_of(v) for v in range(num_vars))


def _feasible_by_simplex(n_free, cons):
    """Route a free-variable inequality system through the simplex."""
    has_strict = any(s for _, _, s in cons)
    # y layout: x_v = y[2v] - y[2v+1]; optional margin variable at 2*n_free
    num_vars = 2 * n_free + (1 if has_strict else 0)
    margin = 2 * n_free if has_strict else None
    rows = []
    for coeffs, rhs, strict in cons:
        row = [Fraction(0)] * num_vars
        for v, c in enumerate(coeffs):
            row[2 * v] = -_frac(c)
            row[2 * v + 1] = _frac(c)
        if strict:
            row[margin] = Fraction(1)
        rows.append((row, -_frac(rhs)))
    if has_strict:
        cap = [Fraction(0)] * num_vars
        cap[margin] = Fraction(1)
        rows.append((cap, Fraction(1)))
    values = _simplex_feasible_le(num_vars, rows, strict_margin_var=margin)
    if values is None:
        return None
    return tuple(values[2 * v] - values[2 * v + 1] for v in range(n_free))


# ---------------------------------------------------------------------------
# public interface


def feasible(n_vars, eq=(), ge=(), gt=()):
    """Witness point for a mixed system of linear constraints, or ``None``.

    Each constraint is ``(coeffs, rhs)`` over ``n_vars`` unrestricted
    rational variables: ``eq`` meaning ``==``, ``ge`` meaning ``>=``,
    ``gt`` meaning ``>``.
    """
    elim = _affine_forms(n_vars, eq)
    if elim is None:
        return None
    free, forms = elim
    cons = [_substitute((c, r, False), forms, len(free)) for c, r in ge]
    cons += [_substitute((c, r, True), forms, len(free)) for c, r in gt]
    if not free:
        reduced = None if _clean(cons) is None else ()
    elif len(free) <= _FM_MAX_VARS:
        try:
            reduced = _feasible_by_elimination(len(free), cons)
        except _EliminationBlowUp:
            reduced = _feasible_by_simplex(len(free), cons)
    else:
        reduced = _feasible_by_simplex(len(free), cons)
    if reduced is None:
        return None
    witness = tuple(
        const + _dot(vec, reduced) for const, vec in forms
    )
    for coeffs, rhs in eq:
        assert _dot(coeffs, witness) == _frac(rhs)
    for coeffs, rhs in ge:
        assert _dot(coeffs, witness) >= _frac(rhs)
    for coeffs, rhs in gt:
        assert _dot(coeffs, witness) > _frac(rhs)
    return witness
