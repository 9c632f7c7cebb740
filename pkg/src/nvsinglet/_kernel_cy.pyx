# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of _kernel_py: adaptive DP45 Lindblad/MCWF integrators.

The Hamiltonian terms, jump operators and the static drift are applied in a
hand-rolled CSR representation: every operator in this project is a sparse
tensor product, so the right-hand side costs O(nnz * n) instead of O(n^3).
Semantics (tableau, error norm, controller, jump handling) mirror the pure
Python module; the two backends agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, fmax, fmin, sin, sqrt

cnp.import_array()

ctypedef double complex cplx


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# CSR packing

cdef class _CSRSet:
    """A stack of same-shape sparse matrices in one flat CSR arena."""
    cdef cnp.int64_t[::1] rowptr      # (k, i) -> rowptr[k*(n+1)+i]
    cdef cnp.int64_t[::1] cols
    cdef cplx[::1] vals
    cdef int k, n

    def __init__(self, stack):
        stack = np.asarray(stack, dtype=complex)
        k = stack.shape[0]
        n = stack.shape[1] if stack.ndim == 3 else 0
        rowptr = np.zeros(max(k * (n + 1), 1), dtype=np.int64)
        cols_l, vals_l = [], []
        nnz = 0
        for m in range(k):
            for i in range(n):
                rowptr[m * (n + 1) + i] = nnz
                row = stack[m, i]
                nz = np.nonzero(row)[0]
                cols_l.append(nz)
                vals_l.append(row[nz])
                nnz += len(nz)
            rowptr[m * (n + 1) + n] = nnz
        self.rowptr = rowptr
        self.cols = (np.concatenate(cols_l) if cols_l else np.zeros(0, np.int64)).astype(np.int64)
        self.vals = (np.concatenate(vals_l) if vals_l else np.zeros(0, complex)).astype(complex)
        self.k = k
        self.n = n


cdef inline void _row_axpy(double vr, double vi, double* xd, double* od, int n) noexcept nogil:
    # complex AXPY over a row, in real arithmetic so the compiler vectorizes
    cdef int j
    cdef double xr, xi
    for j in range(n):
        xr = xd[2 * j]
        xi = xd[2 * j + 1]
        od[2 * j] += vr * xr - vi * xi
        od[2 * j + 1] += vr * xi + vi * xr


cdef inline void _csr_mm_acc(_CSRSet s, int m, cplx coeff, cplx* x, cplx* out) noexcept nogil:
    # out += coeff * (S_m @ x) for dense x, out of shape (n, n), row-major
    cdef cnp.int64_t p, p0, p1
    cdef int i, col, n = s.n
    cdef cplx v
    for i in range(n):
        p0 = s.rowptr[m * (n + 1) + i]
        p1 = s.rowptr[m * (n + 1) + i + 1]
        for p in range(p0, p1):
            col = <int> s.cols[p]
            v = coeff * s.vals[p]
            _row_axpy(v.real, v.imag, <double*> (x + col * n), <double*> (out + i * n), n)


cdef inline void _csr_mv_acc(_CSRSet s, int m, cplx coeff, cplx* x, cplx* out) noexcept nogil:
    # out += coeff * (S_m @ x) for a column vector x
    cdef cnp.int64_t p, p0, p1
    cdef int i, n = s.n
    cdef cplx acc
    for i in range(n):
        p0 = s.rowptr[m * (n + 1) + i]
        p1 = s.rowptr[m * (n + 1) + i + 1]
        acc = 0
        for p in range(p0, p1):
            acc = acc + s.vals[p] * x[s.cols[p]]
        out[i] = out[i] + coeff * acc


cdef inline void _col_axpy(double vr, double vi, double* xd, double* od, int n) noexcept nogil:
    # column version: stride 2n doubles between consecutive elements
    cdef int i
    cdef double xr, xi
    for i in range(n):
        xr = xd[2 * n * i]
        xi = xd[2 * n * i + 1]
        od[2 * n * i] += vr * xr - vi * xi
        od[2 * n * i + 1] += vr * xi + vi * xr


cdef inline void _csr_right_dag_acc(_CSRSet s, int m, cplx* x, cplx* out) noexcept nogil:
    # out += x @ (S_m)^dagger : out[:, j] += conj(v) * x[:, l] for entries (j, l, v)
    cdef cnp.int64_t p, p0, p1
    cdef int j, l, n = s.n
    cdef cplx v
    for j in range(n):
        p0 = s.rowptr[m * (n + 1) + j]
        p1 = s.rowptr[m * (n + 1) + j + 1]
        for p in range(p0, p1):
            l = <int> s.cols[p]
            v = s.vals[p].conjugate()
            _col_axpy(v.real, v.imag, <double*> (x + l), <double*> (out + j), n)


cdef inline void _csr_right_acc(_CSRSet s, int m, cplx coeff, cplx* x, cplx* out) noexcept nogil:
    # out += coeff * (x @ S_m) : out[:, c] += coeff * v * x[:, r] for entries (r, c, v)
    cdef cnp.int64_t p, p0, p1
    cdef int r, c, n = s.n
    cdef cplx v
    for r in range(n):
        p0 = s.rowptr[m * (n + 1) + r]
        p1 = s.rowptr[m * (n + 1) + r + 1]
        for p in range(p0, p1):
            c = <int> s.cols[p]
            v = coeff * s.vals[p]
            _col_axpy(v.real, v.imag, <double*> (x + r), <double*> (out + c), n)


# ---------------------------------------------------------------------------
# problems (right-hand sides)

cdef class _Problem:
    cdef int size                      # flattened state length
    cdef void rhs(self, double t, cplx* y, cplx* out) noexcept nogil:
        pass


cdef class _MEProblem(_Problem):
    cdef _CSRSet hs, d0, jumps
    cdef double[::1] omegas
    cdef int n
    cdef cplx* work                    # P buffer (n*n) then S buffer (n*n)
    cdef cplx[::1] _wbuf

    def __init__(self, omegas, hmats, jumps, d0):
        self.omegas = np.ascontiguousarray(omegas, dtype=float)
        self.hs = _CSRSet(hmats)
        self.jumps = _CSRSet(jumps)
        self.d0 = _CSRSet(d0[None, :, :])
        self.n = d0.shape[0]
        self.size = self.n * self.n
        self._wbuf = np.zeros(2 * self.size, dtype=complex)
        self.work = &self._wbuf[0]

    cdef void rhs(self, double t, cplx* y, cplx* out) noexcept nogil:
        # literal commutator: hermitizing shortcuts would leave the
        # anti-Hermitian rounding sector undamped and unstable
        cdef int n = self.n, i, k
        cdef cplx* p = self.work
        cdef cplx* s = self.work + n * n
        cdef cplx c
        cdef double w
        for i in range(n * n):
            p[i] = 0
        # P = H(t) rho - rho H(t)
        for k in range(self.hs.k):
            w = self.omegas[k]
            c = cos(w * t) + 1j * sin(w * t)
            _csr_mm_acc(self.hs, k, c, y, p)
            _csr_right_acc(self.hs, k, -c, y, p)
        for i in range(n * n):
            out[i] = -1j * p[i]
        # out += D0 rho + rho D0
        _csr_mm_acc(self.d0, 0, 1.0 + 0j, y, out)
        _csr_right_acc(self.d0, 0, 1.0 + 0j, y, out)
        # out += sum_m L rho L^dagger
        for k in range(self.jumps.k):
            for i in range(n * n):
                s[i] = 0
            _csr_mm_acc(self.jumps, k, 1.0 + 0j, y, s)
            _csr_right_dag_acc(self.jumps, k, s, out)


cdef class _PsiProblem(_Problem):
    cdef _CSRSet hs, d0
    cdef double[::1] omegas
    cdef int n

    def __init__(self, omegas, hmats, d0):
        self.omegas = np.ascontiguousarray(omegas, dtype=float)
        self.hs = _CSRSet(hmats)
        self.d0 = _CSRSet(d0[None, :, :])
        self.n = d0.shape[0]
        self.size = self.n

    cdef void rhs(self, double t, cplx* y, cplx* out) noexcept nogil:
        cdef int n = self.n, i, k
        cdef cplx c
        cdef double w
        for i in range(n):
            out[i] = 0
        _csr_mv_acc(self.d0, 0, 1.0 + 0j, y, out)
        for k in range(self.hs.k):
            w = self.omegas[k]
            c = -1j * (cos(w * t) + 1j * sin(w * t))
            _csr_mv_acc(self.hs, k, c, y, out)


# ---------------------------------------------------------------------------
# DP45 stepping

cdef double _SAFETY = 0.9
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 5.0

cdef double _C2 = 1.0 / 5, _C3 = 3.0 / 10, _C4 = 4.0 / 5, _C5 = 8.0 / 9
cdef double _A21 = 1.0 / 5
cdef double _A31 = 3.0 / 40, _A32 = 9.0 / 40
cdef double _A41 = 44.0 / 45, _A42 = -56.0 / 15, _A43 = 32.0 / 9
cdef double _A51 = 19372.0 / 6561, _A52 = -25360.0 / 2187, _A53 = 64448.0 / 6561, _A54 = -212.0 / 729
cdef double _A61 = 9017.0 / 3168, _A62 = -355.0 / 33, _A63 = 46732.0 / 5247, _A64 = 49.0 / 176, _A65 = -5103.0 / 18656
cdef double _B1 = 35.0 / 384, _B3 = 500.0 / 1113, _B4 = 125.0 / 192, _B5 = -2187.0 / 6784, _B6 = 11.0 / 84
cdef double _E1 = 71.0 / 57600, _E3 = -71.0 / 16695, _E4 = 71.0 / 1920, _E5 = -17253.0 / 339200, _E6 = 22.0 / 525, _E7 = -1.0 / 40


cdef class _Stepper:
    cdef _Problem prob
    cdef public double t, h, rtol, atol, min_h, last_err, t_end, h_max
    cdef public long n_steps, n_rejected, max_steps
    cdef cplx[::1] y, f0, k2, k3, k4, k5, k6, k7, ytmp, ycand
    cdef int size

    def __init__(self, _Problem prob, double t0, y0, double rtol, double atol,
                 double omega_max, double t_end, long max_steps,
                 double h_max=np.inf):
        cdef int size = prob.size
        self.prob = prob
        self.size = size
        self.t = t0
        self.rtol = rtol
        self.atol = atol
        self.t_end = t_end
        self.max_steps = max_steps
        self.h_max = h_max
        self.n_steps = 0
        self.n_rejected = 0
        self.min_h = np.inf
        self.last_err = 1.0
        self.y = np.ascontiguousarray(y0, dtype=complex).reshape(-1).copy()
        self.f0 = np.zeros(size, dtype=complex)
        self.k2 = np.zeros(size, dtype=complex)
        self.k3 = np.zeros(size, dtype=complex)
        self.k4 = np.zeros(size, dtype=complex)
        self.k5 = np.zeros(size, dtype=complex)
        self.k6 = np.zeros(size, dtype=complex)
        self.k7 = np.zeros(size, dtype=complex)
        self.ytmp = np.zeros(size, dtype=complex)
        self.ycand = np.zeros(size, dtype=complex)
        with nogil:
            prob.rhs(t0, &self.y[0], &self.f0[0])
        self._init_h(omega_max)

    def _init_h(self, double omega_max):
        y0 = np.asarray(self.y)
        f0 = np.asarray(self.f0)
        scale = self.atol + self.rtol * np.abs(y0)
        d0 = float(np.sqrt(np.mean(np.abs(y0 / scale) ** 2)))
        d1 = float(np.sqrt(np.mean(np.abs(f0 / scale) ** 2)))
        h = 0.01 * d0 / d1 if d0 > 1e-8 and d1 > 1e-8 else 1e-6
        if omega_max > 0:
            h = min(h, 0.1 / omega_max)
        self.h = min(h, self.t_end - self.t, self.h_max)

    cdef double _stages_err(self, double h) noexcept nogil:
        """Run all stages from (t, y, f0) into ycand/k7; return the error norm."""
        cdef int i, sz = self.size, szd = 2 * self.size
        cdef double t0 = self.t
        cdef cplx* y = &self.y[0]
        cdef cplx* yc = &self.ycand[0]
        # stage combinations use real coefficients only: run them on
        # real-viewed buffers so the compiler vectorizes them
        cdef double* yd = <double*> &self.y[0]
        cdef double* k1 = <double*> &self.f0[0]
        cdef double* k2 = <double*> &self.k2[0]
        cdef double* k3 = <double*> &self.k3[0]
        cdef double* k4 = <double*> &self.k4[0]
        cdef double* k5 = <double*> &self.k5[0]
        cdef double* k6 = <double*> &self.k6[0]
        cdef double* k7 = <double*> &self.k7[0]
        cdef double* yt = <double*> &self.ytmp[0]
        cdef double* ycd = <double*> &self.ycand[0]
        cdef double err_acc = 0.0, sc, er, ei, e2
        cdef cplx e

        for i in range(szd):
            yt[i] = yd[i] + h * _A21 * k1[i]
        self.prob.rhs(t0 + _C2 * h, &self.ytmp[0], &self.k2[0])
        for i in range(szd):
            yt[i] = yd[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        self.prob.rhs(t0 + _C3 * h, &self.ytmp[0], &self.k3[0])
        for i in range(szd):
            yt[i] = yd[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        self.prob.rhs(t0 + _C4 * h, &self.ytmp[0], &self.k4[0])
        for i in range(szd):
            yt[i] = yd[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        self.prob.rhs(t0 + _C5 * h, &self.ytmp[0], &self.k5[0])
        for i in range(szd):
            yt[i] = yd[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
        self.prob.rhs(t0 + h, &self.ytmp[0], &self.k6[0])
        for i in range(szd):
            ycd[i] = yd[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
        self.prob.rhs(t0 + h, &self.ycand[0], &self.k7[0])
        for i in range(sz):
            er = h * (_E1 * k1[2 * i] + _E3 * k3[2 * i] + _E4 * k4[2 * i]
                      + _E5 * k5[2 * i] + _E6 * k6[2 * i] + _E7 * k7[2 * i])
            ei = h * (_E1 * k1[2 * i + 1] + _E3 * k3[2 * i + 1] + _E4 * k4[2 * i + 1]
                      + _E5 * k5[2 * i + 1] + _E6 * k6[2 * i + 1] + _E7 * k7[2 * i + 1])
            sc = self.atol + self.rtol * fmax(_cabs(y[i]), _cabs(yc[i]))
            e2 = (er * er + ei * ei) / (sc * sc)
            err_acc += e2
        return sqrt(err_acc / sz)

    cdef bint attempt(self, double h) except? -1:
        cdef double enorm
        cdef int i
        with nogil:
            enorm = self._stages_err(h)
        if enorm <= 1.0:
            self.t += h
            for i in range(self.size):
                self.y[i] = self.ycand[i]
                self.f0[i] = self.k7[i]
            self.n_steps += 1
            self.last_err = enorm
            if h < self.min_h:
                self.min_h = h
            return True
        self.n_rejected += 1
        cdef double factor = fmax(_MIN_FACTOR, _SAFETY * enorm ** -0.2)
        self.h = h * fmin(1.0, factor)
        if self.h < 1e-14 * fmax(1.0, fabs(self.t_end)):
            raise SolverError("step size underflow (stiffness)")
        return False

    cdef void grow(self):
        if self.last_err == 0.0:
            self.h *= _MAX_FACTOR
        else:
            self.h *= fmin(_MAX_FACTOR, fmax(_MIN_FACTOR, _SAFETY * self.last_err ** -0.2))
        self.h = fmin(self.h, self.h_max)

    cdef void check_budget(self) except *:
        if self.n_steps + self.n_rejected > self.max_steps:
            raise SolverError("step budget exhausted")

    cdef void step_to(self, double t_target) except *:
        cdef double h
        cdef bint clamped
        while self.t < t_target - 1e-14 * fmax(1.0, fabs(t_target)):
            h = fmin(self.h, t_target - self.t)
            clamped = h < self.h
            if self.attempt(h) and not clamped:
                self.grow()
            self.check_budget()
        self.t = t_target


cdef inline double _cabs(cplx z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


# ---------------------------------------------------------------------------
# public entry points (signatures mirror _kernel_py)


def _h_stability_cap(hmats, jumps):
    # spectral bound on the generator; keeps h inside the RK stability region
    hnorm = sum(float(np.linalg.norm(m)) for m in hmats)
    jnorm = sum(float(np.linalg.norm(L)) ** 2 for L in jumps)
    bound = 2.0 * hnorm + 2.0 * jnorm
    return 2.5 / bound if bound > 0 else np.inf


def _sample_obs_matrix(obs_num, obs_den, rho):
    out = np.empty(len(obs_num))
    tr = np.trace(rho).real
    for i in range(len(obs_num)):
        num = float(np.einsum("ij,ji->", obs_num[i], rho).real)
        den = float(np.einsum("ij,ji->", obs_den[i], rho).real) if obs_den is not None else tr
        out[i] = num / den if den != 0.0 else np.nan
    return out


def evolve_me(omegas, hmats, jumps, rho0, t_grid, double rtol, double atol,
              obs_num, obs_den, snapshot_idx=(), long max_steps=50_000_000):
    omegas = np.ascontiguousarray(omegas, dtype=float)
    hmats = np.ascontiguousarray(hmats, dtype=complex)
    jumps = np.ascontiguousarray(jumps, dtype=complex)
    n = rho0.shape[0]
    d0 = np.zeros((n, n), dtype=complex)
    for L in jumps:
        d0 -= 0.5 * (L.conj().T @ L)
    prob = _MEProblem(omegas, hmats, jumps, d0)
    omega_max = float(np.max(np.abs(omegas))) if len(omegas) else 0.0
    grid = np.ascontiguousarray(t_grid, dtype=float)
    cdef _Stepper st = _Stepper(prob, grid[0], np.asarray(rho0, dtype=complex).reshape(-1),
                                rtol, atol, omega_max, grid[-1], max_steps,
                                _h_stability_cap(hmats, jumps))
    obs = np.empty((len(grid), len(obs_num)))
    snaps = {}
    tr0 = np.trace(rho0).real
    snapshot_idx = set(int(i) for i in snapshot_idx)
    for gi in range(len(grid)):
        if gi > 0:
            st.step_to(grid[gi])
        rho = np.asarray(st.y).reshape(n, n)
        obs[gi] = _sample_obs_matrix(obs_num, obs_den, rho)
        if gi in snapshot_idx:
            snaps[gi] = rho.copy()
    rho_f = np.asarray(st.y).reshape(n, n).copy()
    return {
        "obs": obs,
        "snapshots": snaps,
        "state_final": rho_f,
        "n_steps": st.n_steps,
        "n_rejected": st.n_rejected,
        "min_h": st.min_h,
        "trace_drift": abs(np.trace(rho_f).real - tr0),
    }


def evolve_mcwf(omegas, hmats, jumps, psi0, t_grid, double rtol, double atol,
                obs_num, obs_den, rng, snapshot_idx=(), double jump_time_tol=1e-10,
                long max_steps=50_000_000):
    omegas = np.ascontiguousarray(omegas, dtype=float)
    hmats = np.ascontiguousarray(hmats, dtype=complex)
    jumps_arr = np.ascontiguousarray(jumps, dtype=complex)
    n = psi0.shape[0]
    d0 = np.zeros((n, n), dtype=complex)
    ldl = []
    for L in jumps_arr:
        m = L.conj().T @ L
        ldl.append(m)
        d0 -= 0.5 * m
    prob = _PsiProblem(omegas, hmats, d0)
    omega_max = float(np.max(np.abs(omegas))) if len(omegas) else 0.0
    grid = np.ascontiguousarray(t_grid, dtype=float)
    cdef _Stepper st = _Stepper(prob, grid[0], np.asarray(psi0, dtype=complex),
                                rtol, atol, omega_max, grid[-1], max_steps,
                                _h_stability_cap(hmats, jumps_arr))
    obs = np.empty((len(grid), len(obs_num), 2))
    snaps = {}
    snapshot_idx = set(int(i) for i in snapshot_idx)
    threshold = rng.random()
    jump_times = []

    cdef double h, lo, hi, mid
    cdef bint clamped
    cdef int i

    y_prev = np.empty(n, dtype=complex)
    f_prev = np.empty(n, dtype=complex)

    for gi in range(len(grid)):
        if gi > 0:
            t_target = grid[gi]
            while st.t < t_target - 1e-14 * max(1.0, abs(t_target)):
                t_prev = st.t
                np.copyto(y_prev, np.asarray(st.y))
                np.copyto(f_prev, np.asarray(st.f0))
                h = min(st.h, t_target - st.t)
                clamped = h < st.h
                if not st.attempt(h):
                    st.check_budget()
                    continue
                if not clamped:
                    st.grow()
                st.check_budget()
                ycur = np.asarray(st.y)
                if float(np.real(ycur.conj() @ ycur)) >= threshold:
                    continue
                # bisect the norm crossing inside (t_prev, t_prev + h]
                st.t = t_prev
                np.copyto(np.asarray(st.y), y_prev)
                np.copyto(np.asarray(st.f0), f_prev)
                lo, hi = 0.0, h
                y_hi = ycur.copy()
                while hi - lo > jump_time_tol:
                    mid = 0.5 * (lo + hi)
                    with nogil:
                        st._stages_err(mid)
                    y_mid = np.asarray(st.ycand)
                    if float(np.real(y_mid.conj() @ y_mid)) >= threshold:
                        lo = mid
                    else:
                        hi = mid
                        y_hi = y_mid.copy()
                t_jump = t_prev + hi
                weights = np.array([float(np.real(y_hi.conj() @ (m @ y_hi))) for m in ldl])
                wsum = float(weights.sum())
                if wsum <= 0.0:
                    raise SolverError("zero-norm state at jump time")
                u = rng.random() * wsum
                mchan = min(int(np.searchsorted(np.cumsum(weights), u, side="right")),
                            len(ldl) - 1)
                y_new = jumps_arr[mchan] @ y_hi
                nrm = float(np.linalg.norm(y_new))
                if nrm == 0.0:
                    raise SolverError("zero-norm state after jump")
                y_new /= nrm
                st.t = t_jump
                np.copyto(np.asarray(st.y), y_new)
                fnew = np.zeros(n, dtype=complex)
                _rhs_py(prob, t_jump, y_new, fnew)
                np.copyto(np.asarray(st.f0), fnew)
                jump_times.append(t_jump)
                threshold = rng.random()
            st.t = t_target
        psi = np.asarray(st.y)
        obs[gi] = _sample_obs_psi_arrays(obs_num, obs_den, psi)
        if gi in snapshot_idx:
            y = psi / np.linalg.norm(psi)
            snaps[gi] = np.outer(y, y.conj())
    return {
        "obs": obs,
        "snapshots": snaps,
        "state_final": np.asarray(st.y).copy(),
        "n_steps": st.n_steps,
        "n_rejected": st.n_rejected,
        "min_h": st.min_h,
        "n_jumps": len(jump_times),
        "jump_times": np.array(jump_times),
    }


def _rhs_py(_Problem prob, double t, y, out):
    cdef cplx[::1] yv = np.ascontiguousarray(y, dtype=complex)
    cdef cplx[::1] ov = out
    with nogil:
        prob.rhs(t, &yv[0], &ov[0])


def _sample_obs_psi_arrays(obs_num, obs_den, psi):
    # norm-normalized (numerator, denominator) pairs; averaged by the driver
    out = np.empty((len(obs_num), 2))
    nrm = float(np.real(psi.conj() @ psi))
    for i in range(len(obs_num)):
        num = float(np.real(psi.conj() @ (obs_num[i] @ psi)))
        den = float(np.real(psi.conj() @ (obs_den[i] @ psi))) if obs_den is not None else nrm
        out[i, 0] = num / nrm
        out[i, 1] = den / nrm
    return out
