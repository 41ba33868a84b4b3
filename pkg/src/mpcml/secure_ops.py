"""Fixed-point secure computation on top of the SPDZ engine.

A "secure fixed" value is an AuthShare whose centered lift, divided by 2^f,
is the real value; FixedOps binds the engine to one FixedPointParams and
implements:

  * probabilistic truncation (dealer pairs for the standard shift-by-f,
    bit-built masks for other shifts),
  * multiplication / inner products with a single end truncation,
  * comparison (ltz) and bit decomposition via masked opening plus a
    borrow ripple over shared bits (bit ANDs use square pairs),
  * normalization to [0.5, 1) with a secret exponent (MSB one-hot),
  * Newton-Raphson reciprocal and inverse square root, either seeded from
    normalization or, when the caller can bound the input publicly, from a
    scaled affine guess (no bit machinery),
  * the clipped-linear activation and Maclaurin-polynomial logistic
    approximations.

Range discipline is static: callers guarantee decoded magnitudes fit
2^(k-f); overflow of secret values is not detectable at runtime.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .engine import SpdzEngine
from .errors import ConfigurationError, ProtocolError
from .fixedpoint import FixedPointParams, fx_decode, fx_encode
from .shares import AuthShare

# Maclaurin coefficients of the logistic function 1/(1+e^-u): the constant
# term plus odd powers (even coefficients beyond the constant vanish).
LOGISTIC_SERIES = {
    0: Fraction(1, 2),
    1: Fraction(1, 4),
    3: Fraction(-1, 48),
    5: Fraction(1, 480),
    7: Fraction(-17, 80640),
    9: Fraction(31, 1451520),
}

TAYLOR_DEGREES = (2, 5, 7, 10)


def default_newton_iters(f: int) -> int:
    return math.ceil(math.log2(f)) + 2


class FixedOps:
    def __init__(self, engine: SpdzEngine, params: FixedPointParams):
        if 2 * params.k + params.s + 2 > engine.field.bit_length:
            raise ConfigurationError("field too small for fixed-point params")
        self.engine = engine
        self.params = params
        self.field = engine.field

    # ----- encode / input / open -------------------------------------------------

    def const(self, x: float) -> AuthShare:
        return self.engine.public_share(fx_encode(x, self.params, self.field))

    def encode(self, x: float) -> int:
        return fx_encode(x, self.params, self.field)

    def decode(self, raw: int) -> float:
        return fx_decode(raw, self.params, self.field)

    def input_reals(self, owner: int, xs=None, count: int | None = None) -> list[AuthShare]:
        if xs is not None:
            raws = [self.encode(float(x)) for x in xs]
            count = len(raws)
        else:
            raws = None
            if count is None:
                raise ProtocolError("non-owners must pass the input count")
        return self.engine.input_values(owner, raws, count)

    def open_reals(self, shares: list[AuthShare], check: bool = False) -> list[float]:
        opened = (
            self.engine.open_and_check(shares) if check else self.engine.open_shares(shares)
        )
        return [self.decode(v) for v in opened]

    # ----- truncation -----------------------------------------------------------

    def trunc_batch(
        self,
        shares: list[AuthShare],
        shift: int | None = None,
        bound_bits: int | None = None,
        signed: bool = True,
    ) -> list[AuthShare]:
        """Probabilistic division by 2^shift; error at most one output ULP.

        Values must satisfy |lift| < 2^bound_bits.  The standard case
        (shift=f, bound=k+f) consumes one dealer TruncPair per element;
        other shifts assemble the mask from shared random bits.
        """
        if not shares:
            return []
        params = self.params
        m = params.f if shift is None else shift
        bound = params.k + params.f if bound_bits is None else bound_bits
        if bound + params.s + 2 > self.field.bit_length:
            raise ConfigurationError("truncation bound exceeds field headroom")
        engine = self.engine
        p = self.field.p

        if m == params.f and bound == params.k + params.f:
            pairs = engine.material.trunc_pairs.take(len(shares))
        else:
            pairs = []
            nbits = bound + params.s
            for _ in shares:
                bits = engine.material.bits.take(nbits)
                r_full = bits[0]
                for i in range(1, nbits):
                    r_full = r_full + bits[i].scale(1 << i)
                r_top = bits[m]
                for i in range(m + 1, nbits):
                    r_top = r_top + bits[i].scale(1 << (i - m))
                pairs.append((r_full, r_top))

        shift_const = (1 << bound) if signed else 0
        masked = [
            engine.add_public(s + pair[0], shift_const) for s, pair in zip(shares, pairs)
        ]
        opened = engine.open_shares(masked)
        out = []
        post = (1 << (bound - m)) if signed else 0
        for c, pair in zip(opened, pairs):
            c_top = c >> m
            res = engine.add_public(-pair[1], (c_top - post) % p)
            out.append(res)
        return out

    # ----- products ----------------------------------------------------------------

    def mul_batch(self, xs, ys, trunc: bool = True) -> list[AuthShare]:
        prods = self.engine.mul_shares(xs, ys)
        return self.trunc_batch(prods) if trunc else prods

    def mul(self, x: AuthShare, y: AuthShare, trunc: bool = True) -> AuthShare:
        return self.mul_batch([x], [y], trunc=trunc)[0]

    def square_batch(self, xs, trunc: bool = True) -> list[AuthShare]:
        sq = self.engine.square_shares(xs)
        return self.trunc_batch(sq) if trunc else sq

    def square(self, x: AuthShare, trunc: bool = True) -> AuthShare:
        return self.square_batch([x], trunc=trunc)[0]

    def inner_many(self, pairs: list[tuple[list, list]]) -> list[AuthShare]:
        """Dot products, each truncated once at the end; all Beaver openings
        share one round, all truncations share another."""
        xs_flat, ys_flat, sizes = [], [], []
        for xs, ys in pairs:
            if len(xs) != len(ys):
                raise ProtocolError("inner product length mismatch")
            xs_flat.extend(xs)
            ys_flat.extend(ys)
            sizes.append(len(xs))
        prods = self.engine.mul_shares(xs_flat, ys_flat)
        sums, off = [], 0
        zero = self.engine.public_share(0)
        for n in sizes:
            if n == 0:
                sums.append(None)
            else:
                acc = prods[off]
                for i in range(off + 1, off + n):
                    acc = acc + prods[i]
                sums.append(acc)
            off += n
        nonzero = [s for s in sums if s is not None]
        truncated = iter(self.trunc_batch(nonzero))
        return [zero if s is None else next(truncated) for s in sums]

    def inner(self, xs, ys) -> AuthShare:
        return self.inner_many([(xs, ys)])[0]

    def matvec(self, rows: list[list[AuthShare]], v: list[AuthShare]) -> list[AuthShare]:
        return self.inner_many([(row, v) for row in rows])

    def scale_public_batch(self, xs, c: float) -> list[AuthShare]:
        """Multiply by a public real: integer scaling plus one truncation."""
        raw = self.encode(c)
        scaled = [x.scale(raw) for x in xs]
        return self.trunc_batch(scaled)

    def scale_public(self, x: AuthShare, c: float) -> AuthShare:
        return self.scale_public_batch([x], c)[0]

    # ----- bit machinery -------------------------------------------------------------

    def _bit_and_batch(self, xs, ys) -> list[AuthShare]:
        """AND of shared bits via one square pair each: xy = ((x+y)^2-(x+y))/2."""
        sums = [x + y for x, y in zip(xs, ys)]
        sq = self.engine.square_shares(sums)
        inv2 = self.field.inv2
        return [(s2 - s).scale(inv2) for s2, s in zip(sq, sums)]

    def _bit_xor_batch(self, xs, ys) -> list[AuthShare]:
        ands = self._bit_and_batch(xs, ys)
        return [x + y - a.scale(2) for x, y, a in zip(xs, ys, ands)]

    def _masked_open(self, shares: list[AuthShare], m: int) -> tuple[list[int], list[list[AuthShare]]]:
        """Open x + r with r built from m+s shared random bits.

        Returns the public sums and each element's low m mask bits."""
        s_bits = self.params.s
        nbits = m + s_bits
        engine = self.engine
        masked, low_bits = [], []
        for x in shares:
            bits = engine.material.bits.take(nbits)
            r = bits[0]
            for i in range(1, nbits):
                r = r + bits[i].scale(1 << i)
            masked.append(x + r)
            low_bits.append(bits[:m])
        opened = engine.open_shares(masked)
        return opened, low_bits

    def _borrow_ripple(
        self, opened: list[int], low_bits: list[list[AuthShare]], m: int, want_bits: bool
    ):
        """Borrow chain of (c - r) mod 2^m for a batch, one AND round per
        position.  Returns all result bits (want_bits) or just the top bit."""
        zero = self.engine.public_share(0)
        one_minus = lambda b: self.engine.add_public(-b, 1)
        n = len(opened)
        borrows = [zero] * n
        if want_bits:
            collected: list[list[AuthShare]] = [[] for _ in range(n)]
        for i in range(m):
            # g = r_i & ~c_i, prop = (c_i == r_i); both affine given public c_i.
            if want_bits:
                for e in range(n):
                    c_i = (opened[e] >> i) & 1
                    r_i = low_bits[e][i]
                    t = one_minus(r_i) if c_i else r_i  # c_i xor r_i
                    collected[e].append((t, borrows[e]))
            if i == m - 1:
                break
            props, gens = [], []
            for e in range(n):
                c_i = (opened[e] >> i) & 1
                r_i = low_bits[e][i]
                if c_i:
                    props.append(r_i)
                    gens.append(zero)
                else:
                    props.append(one_minus(r_i))
                    gens.append(r_i)
            carried = self._bit_and_batch(props, borrows)
            borrows = [g + pc for g, pc in zip(gens, carried)]
        if not want_bits:
            tops, bots = [], []
            for e in range(n):
                c_i = (opened[e] >> (m - 1)) & 1
                r_i = low_bits[e][m - 1]
                tops.append(one_minus(r_i) if c_i else r_i)
                bots.append(borrows[e])
            return self._bit_xor_batch(tops, bots)
        # One batched XOR round for every position of every element.
        flat_t = [t for elem in collected for (t, _) in elem]
        flat_b = [b for elem in collected for (_, b) in elem]
        flat_bits = self._bit_xor_batch(flat_t, flat_b)
        out, off = [], 0
        for _ in range(n):
            out.append(flat_bits[off : off + m])
            off += m
        return out

    def ltz_batch(self, xs: list[AuthShare]) -> list[AuthShare]:
        """Secret sign bits (1 iff x < 0, 0 at x = 0).

        Requires |lift(x)| < 2^(k-1).  Exact; consumes k+s random bits per
        element and one square pair per ripple step.
        """
        if not xs:
            return []
        k = self.params.k
        shifted = [self.engine.add_public(x, 1 << (k - 1)) for x in xs]
        opened, low_bits = self._masked_open(shifted, k)
        top = self._borrow_ripple(opened, low_bits, k, want_bits=False)
        # top bit of x + 2^(k-1) is 1 exactly when x >= 0
        return [self.engine.add_public(-b, 1) for b in top]

    def ltz(self, x: AuthShare) -> AuthShare:
        return self.ltz_batch([x])[0]

    def bitdec_batch(self, xs: list[AuthShare], m: int) -> list[list[AuthShare]]:
        """Shared bits of non-negative values < 2^m (low to high)."""
        opened, low_bits = self._masked_open(xs, m)
        return self._borrow_ripple(opened, low_bits, m, want_bits=True)

    # ----- normalization ------------------------------------------------------------

    def _msb_onehot(self, x: AuthShare) -> list[AuthShare]:
        """One-hot vector z with z[j] = 1 iff the MSB of lift(x) is bit j.
        Requires 0 < lift(x) < 2^k."""
        k = self.params.k
        bits = self.bitdec_batch([x], k)[0]
        # Suffix ORs from the top: o_j = b_j | o_{j+1}.
        suffix = [None] * k
        suffix[k - 1] = bits[k - 1]
        for j in range(k - 2, -1, -1):
            b, o = bits[j], suffix[j + 1]
            suffix[j] = b + o - self._bit_and_batch([b], [o])[0]
        onehot = []
        for j in range(k):
            if j == k - 1:
                onehot.append(suffix[j])
            else:
                onehot.append(suffix[j] - suffix[j + 1])
        return onehot

    def normalize(self, x: AuthShare) -> tuple[AuthShare, AuthShare]:
        """Write x = mantissa * 2^e with mantissa in [0.5, 1).

        Returns (mantissa as secure fixed, e as secret integer shares).
        Statistical leakage of the masked openings is <= 2^-s.
        """
        params = self.params
        k, f = params.k, params.f
        onehot = self._msb_onehot(x)
        mantissa, _ = self._normalized_mantissa(x, onehot)
        exp = self.engine.public_share(0)
        for j, z in enumerate(onehot):
            e_j = j + 1 - f
            if e_j:
                exp = exp + z.scale(e_j % self.field.p)
        return mantissa, exp

    def _normalized_mantissa(self, x: AuthShare, onehot) -> tuple[AuthShare, AuthShare]:
        """Scale x up so its MSB sits at bit k-1, then shift down into a
        [0.5, 1) fixed-point mantissa.  Returns (mantissa, scaled_raw)."""
        k, f = self.params.k, self.params.f
        v = self.engine.public_share(0)
        for j, z in enumerate(onehot):
            v = v + z.scale(1 << (k - 1 - j))
        w = self.engine.mul_shares([x], [v])[0]
        mantissa = self.trunc_batch([w], shift=k - f, bound_bits=k, signed=False)[0]
        return mantissa, w

    # ----- Newton iterations ----------------------------------------------------------

    def _affine_guess(self, kind: str, lo: float, hi: float) -> tuple[float, float, float]:
        """Scaled secant guess y0 = a - b*z for 1/z or 1/sqrt(z) on [lo, hi].

        Returns (a, b, e0) with e0 the initial Newton error bound; e0 < 1
        guarantees convergence, smaller is faster.
        """
        if not (0 < lo < hi):
            raise ConfigurationError("bounds must satisfy 0 < lo < hi")
        g = (lambda z: 1.0 / z) if kind == "recip" else (lambda z: z**-0.5)
        b = -(g(hi) - g(lo)) / (hi - lo)
        a = g(lo) + b * lo
        # Symmetrize the Newton error e = 1 - z*y0 (resp. 1 - z*y0^2) by a
        # multiplicative rescale; sampling is fine, everything is public.
        zs = [lo + (hi - lo) * t / 64.0 for t in range(65)]
        if kind == "recip":
            vals = [z * (a - b * z) for z in zs]
        else:
            vals = [z * (a - b * z) ** 2 for z in zs]
        m_lo, m_hi = min(vals), max(vals)
        if kind == "recip":
            theta = 2.0 / (m_lo + m_hi)
            e0 = (m_hi - m_lo) / (m_hi + m_lo)
        else:
            theta = (2.0 / (m_lo + m_hi)) ** 0.5
            e0 = (m_hi - m_lo) / (m_hi + m_lo)
        return a * theta, b * theta, e0

    def _affine_eval(self, z: AuthShare, a: float, b: float) -> AuthShare:
        """a - b*z as a secure fixed value (one truncation).

        The constant joins the raw product at 2^(2f) scale so a single
        truncation lands everything back on 2^f.
        """
        f = self.params.f
        b_enc = self.encode(b)
        a_enc2 = self.field.from_signed(round(a * (1 << (2 * f))))
        t = self.engine.add_public(z.scale((-b_enc) % self.field.p), a_enc2)
        return self.trunc_batch([t])[0]

    def _newton_iters(self, e0: float, extra_bits: int = 1) -> int:
        """Iterations needed to push an initial relative error e0 below
        2^-f, assuming quadratic convergence."""
        f = self.params.f
        if e0 <= 0:
            return default_newton_iters(f)
        need = f + extra_bits
        have = -math.log2(min(e0, 0.999999))
        t = 0
        while have < need and t < 64:
            have *= 2
            t += 1
        return max(t, 1)

    def reciprocal(
        self,
        x: AuthShare,
        bounds: tuple[float, float] | None = None,
        iterations: int | None = None,
    ) -> AuthShare:
        """1/x for x > 0 by Newton's method, y' = 2y - x*y^2.

        With public bounds the initial guess is affine in x and no bit
        machinery is used; otherwise x is normalized first.
        """
        params = self.params
        if bounds is not None:
            lo, hi = bounds
            a, b, e0 = self._affine_guess("recip", lo, hi)
            z = x
            unnorm = None
        else:
            onehot = self._msb_onehot(x)
            z, _ = self._normalized_mantissa(x, onehot)
            a, b, e0 = self._affine_guess("recip", 0.5, 1.0 + params.resolution)
            # 1/x = (1/mantissa) * 2^-e; 2^-e = 2^(2f-1-j) as a raw constant.
            unnorm = self.engine.public_share(0)
            for j, zj in enumerate(onehot):
                shift = 2 * params.f - 1 - j
                if shift < 0:
                    raise ConfigurationError("reciprocal input exceeds 2^f; rescale first")
                unnorm = unnorm + zj.scale(1 << shift)
        iters = iterations if iterations is not None else self._newton_iters(e0)
        y = self._affine_eval(z, a, b)
        for _ in range(iters):
            y2 = self.square(y)
            t = self.mul(z, y2)
            y = y + y - t
        if unnorm is None:
            return y
        prod = self.engine.mul_shares([y], [unnorm])[0]
        return self.trunc_batch([prod])[0]

    def invsqrt_and_sqrt(
        self,
        x: AuthShare,
        bounds: tuple[float, float] | None = None,
        iterations: int | None = None,
    ) -> tuple[AuthShare, AuthShare]:
        """(1/sqrt(x), sqrt(x)) for x > 0.

        Division-free iteration y' = y*(3 - x*y^2)/2 targeting 1/sqrt(x);
        sqrt comes back as x*y.  Same bounded/normalized seeding as
        reciprocal.
        """
        params = self.params
        f = params.f
        if bounds is not None:
            a, b, e0 = self._affine_guess("rsqrt", bounds[0], bounds[1])
            z = x
            unnorm = None
        else:
            onehot = self._msb_onehot(x)
            z, _ = self._normalized_mantissa(x, onehot)
            a, b, e0 = self._affine_guess("rsqrt", 0.5, 1.0 + params.resolution)
            # 1/sqrt(x) = (1/sqrt(m)) * 2^(-e/2); with e = 2h + par:
            # constant per MSB index j: 2^(f-h) * (1/sqrt(2))^par.
            unnorm = self.engine.public_share(0)
            inv_sqrt2 = 0.5**0.5
            for j, zj in enumerate(onehot):
                e_j = j + 1 - f
                h = e_j >> 1
                par = e_j - 2 * h
                c = round((2.0 ** (f - h)) * (inv_sqrt2 if par else 1.0))
                if c <= 0 or c >= 1 << (2 * params.k):
                    raise ConfigurationError("invsqrt unnormalization constant out of range")
                unnorm = unnorm + zj.scale(c)
        iters = iterations if iterations is not None else self._newton_iters(e0)
        y = self._affine_eval(z, a, b)
        three = self.encode(3.0)
        for _ in range(iters):
            y2 = self.square(y)
            t = self.mul(z, y2)
            u = self.engine.add_public(-t, three)
            w = self.engine.mul_shares([y], [u])[0]
            # divide the raw product by 2^(f+1): the *0.5 comes free
            y = self.trunc_batch([w], shift=f + 1, bound_bits=params.k + f + 1)[0]
        if unnorm is not None:
            prod = self.engine.mul_shares([y], [unnorm])[0]
            y = self.trunc_batch([prod])[0]
        root = self.mul(x, y)
        return y, root

    def sqrt(self, x: AuthShare, bounds=None, iterations=None) -> AuthShare:
        return self.invsqrt_and_sqrt(x, bounds, iterations)[1]

    # ----- activations --------------------------------------------------------------

    def piecewise_logistic_batch(self, us: list[AuthShare]) -> list[AuthShare]:
        """Clipped-linear logistic stand-in: 0 below -0.5, u+0.5 between,
        1 above 0.5; branch-free via two sign bits."""
        if not us:
            return []
        n = len(us)
        half = self.encode(0.5)
        lo_args = [self.engine.add_public(u, half) for u in us]  # u + 0.5
        hi_args = [self.engine.add_public(-u, half) for u in us]  # 0.5 - u
        bits = self.ltz_batch(lo_args + hi_args)
        b_lo, b_hi = bits[:n], bits[n:]
        one = self.engine.add_public
        not_lo = [one(-b, 1) for b in b_lo]
        not_hi = [one(-b, 1) for b in b_hi]
        # inner = (1-b_hi)*(u+0.5) + b_hi  (bit times value: no truncation)
        scale_f = 1 << self.params.f
        mids = self.engine.mul_shares(not_hi, lo_args)
        inner = [m + b.scale(scale_f) for m, b in zip(mids, b_hi)]
        return self.engine.mul_shares(not_lo, inner)

    def logistic_poly_batch(self, us: list[AuthShare], degree: int) -> list[AuthShare]:
        """Maclaurin approximation of the logistic function by Horner in u^2."""
        if degree not in TAYLOR_DEGREES:
            raise ConfigurationError(f"supported polynomial degrees: {TAYLOR_DEGREES}")
        if not us:
            return []
        odd = [i for i in sorted(LOGISTIC_SERIES) if 0 < i <= degree]
        coeffs = {i: self._encode_fraction(LOGISTIC_SERIES[i]) for i in odd}
        c0 = self._encode_fraction(LOGISTIC_SERIES[0])
        u2 = self.square_batch(us)
        # acc = c_top; acc = acc*u2 + c  (highest odd power first)
        top = odd[-1]
        acc = [self.engine.public_share(coeffs[top])] * len(us)
        for i in reversed(odd[:-1]):
            acc = self.mul_batch(acc, u2)
            acc = [self.engine.add_public(a, coeffs[i]) for a in acc]
        tail = self.mul_batch(acc, us)
        return [self.engine.add_public(t, c0) for t in tail]

    def _encode_fraction(self, q: Fraction) -> int:
        scaled = q * (1 << self.params.f)
        m = int(scaled) if scaled >= 0 else -int(-scaled)
        frac = scaled - m
        if frac >= Fraction(1, 2):
            m += 1
        elif frac <= Fraction(-1, 2):
            m -= 1
        return self.field.from_signed(m)
