# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled feasibility kernel; hot twin of _fas_core_py.

The comparison expressions must stay aligned with the numpy fallback so both
backends produce identical rule outcomes on identical inputs. The band logic
is spelled out inline in both scan loops; keep the copies in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor

COMPILED = True

cdef long long _COORD_LIMIT = 1 << 20


cdef inline long long _pack(long long ci, long long cj, long long ck) nogil:
    return ((ci + _COORD_LIMIT) << 42) | ((cj + _COORD_LIMIT) << 21) | (ck + _COORD_LIMIT)


cdef inline Py_ssize_t _lower_bound_i64(const long long* arr, Py_ssize_t n, long long v) nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _lower_bound_f64(const double* arr, Py_ssize_t n, double v) nogil:
    # first index with arr[i] >= v
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _upper_bound_f64(const double* arr, Py_ssize_t n, double v) nogil:
    # first index with arr[i] > v
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def feasibility_grid(
    double[:, ::1] points,
    long long[::1] keys,
    long long[::1] starts,
    double cell,
    double[:, ::1] anchors,
    double[:, :, ::1] rotations,
    double[::1] offsets,
    double[::1] widths,
    double half_h,
    double half_l,
    double t_f,
    double b_d,
    bint brute=False,
):
    cdef Py_ssize_t n_c = anchors.shape[0]
    cdef Py_ssize_t n_d = offsets.shape[0]
    cdef Py_ssize_t n_w = widths.shape[0]
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t n_keys = keys.shape[0]

    out_arr = np.zeros((n_c, n_d, n_w), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    wtf_arr = np.empty(n_w, dtype=np.float64)
    cdef double[::1] wtf_mv = wtf_arr
    grasp_min_arr = np.empty(n_d, dtype=np.int64)
    base_min_arr = np.empty(n_d, dtype=np.int64)
    fing_diff_arr = np.empty(n_d * (n_w + 1), dtype=np.int64)
    cdef long long[::1] grasp_min = grasp_min_arr
    cdef long long[::1] base_min = base_min_arr
    cdef long long[::1] fing_diff = fing_diff_arr
    lut_arr = np.empty((256, 3), dtype=np.int64)
    cdef long long[:, ::1] lut = lut_arr

    if n_c == 0 or n_d == 0 or n_w == 0:
        return out_arr

    cdef double two_tf = 2.0 * t_f
    cdef double base_lo = -half_l - b_d
    cdef double neg_half_l = -half_l
    cdef double x_reach = 0.5 * widths[n_w - 1] + t_f
    cdef double lo_z = offsets[0] - half_l - b_d
    cdef double hi_z = offsets[n_d - 1] + half_l
    cdef double half_cell = 0.5 * cell
    cdef double inv_cell = 1.0 / cell
    cdef double max_wtf = widths[n_w - 1] + two_tf
    cdef double bin_w = max_wtf / 256.0
    cdef double inv_bin = 256.0 / max_wtf

    cdef const double* pts = NULL
    cdef const double* off_p = &offsets[0]
    cdef const double* w_p = &widths[0]
    cdef const double* wtf_p = &wtf_mv[0]
    cdef const double* row
    cdef const long long* keys_p = NULL
    cdef long long* gmin_p = &grasp_min[0]
    cdef long long* bmin_p = &base_min[0]
    cdef long long* fdiff_p = &fing_diff[0]

    cdef Py_ssize_t c, d, w, t, i, j, k, pos, t_lo, t_hi
    cdef Py_ssize_t iw_g, lo_f, hi_f, abin
    cdef double blo, bhi, thr
    cdef bint resolved, unsafe
    cdef double ax, ay, az
    cdef double r0, r1, r2, r3, r4, r5, r6, r7, r8
    cdef double mid_z, hx, hy, hz
    cdef double cx, cy, cz, rx, ry, rz
    cdef double mx, my, mz, bx, by, bz
    cdef double vcz, dproj
    cdef double dx, dyy, dz, qx, qy, qz, zz, two_ax
    cdef double zspan, base_x, base_y, base_z, t1, t2, ox, oy
    cdef double k_lo_f, k_hi_f, cz_cells
    cdef double inv_r6c, inv_r7c, inv_r8c
    cdef long long vi_lo, vi_hi, vj_lo, vj_hi, vk_lo, vk_hi, key
    cdef long long k_lo, k_hi
    cdef long long run
    cdef bint collision

    if n_pts > 0:
        pts = &points[0, 0]
    if n_keys > 0:
        keys_p = &keys[0]

    with nogil:
        for w in range(n_w):
            wtf_mv[w] = widths[w] + two_tf
        # bins of the 2|x| axis whose neighborhood holds no width threshold
        # resolve to fixed index triples; others fall back to exact searches
        for i in range(256):
            blo = (i - 1) * bin_w
            bhi = (i + 2) * bin_w
            unsafe = False
            for w in range(n_w):
                thr = widths[w]
                if blo <= thr <= bhi:
                    unsafe = True
                    break
                thr = wtf_mv[w]
                if blo <= thr <= bhi:
                    unsafe = True
                    break
            if unsafe:
                lut[i, 0] = -1
            else:
                thr = (i + 0.5) * bin_w
                lut[i, 0] = _lower_bound_f64(w_p, n_w, thr)
                lut[i, 1] = _upper_bound_f64(w_p, n_w, thr) - 1
                lut[i, 2] = _lower_bound_f64(wtf_p, n_w, thr)
        mid_z = 0.5 * (lo_z + hi_z)
        hx = x_reach
        hy = half_h
        hz = 0.5 * (hi_z - lo_z)

        for c in range(n_c):
            ax = anchors[c, 0]
            ay = anchors[c, 1]
            az = anchors[c, 2]
            r0 = rotations[c, 0, 0]; r1 = rotations[c, 0, 1]; r2 = rotations[c, 0, 2]
            r3 = rotations[c, 1, 0]; r4 = rotations[c, 1, 1]; r5 = rotations[c, 1, 2]
            r6 = rotations[c, 2, 0]; r7 = rotations[c, 2, 1]; r8 = rotations[c, 2, 2]
            for d in range(n_d):
                gmin_p[d] = n_w
                bmin_p[d] = n_w
            for d in range(n_d * (n_w + 1)):
                fdiff_p[d] = 0

            if brute:
                row = pts
                for t in range(n_pts):
                    dx = row[0] - ax
                    dyy = row[1] - ay
                    dz = row[2] - az
                    row += 3
                    qy = dx * r1 + dyy * r4 + dz * r7
                    if qy > half_h or qy < -half_h:
                        continue
                    qz = dx * r2 + dyy * r5 + dz * r8
                    if qz < lo_z or qz > hi_z:
                        continue
                    qx = dx * r0 + dyy * r3 + dz * r6
                    two_ax = 2.0 * fabs(qx)
                    if two_ax > max_wtf:
                        continue
                    # band updates (keep in sync with the indexed copy below)
                    abin = <Py_ssize_t> (two_ax * inv_bin)
                    if abin > 255: abin = 255
                    if lut[abin, 0] >= 0:
                        iw_g = lut[abin, 0]
                        hi_f = lut[abin, 1]
                        lo_f = lut[abin, 2]
                        resolved = True
                    else:
                        resolved = False
                        iw_g = 0; lo_f = 0; hi_f = -1
                    for d in range(n_d):
                        zz = qz - off_p[d]
                        if fabs(zz) <= half_l:
                            if not resolved:
                                iw_g = _lower_bound_f64(w_p, n_w, two_ax)
                                hi_f = _upper_bound_f64(w_p, n_w, two_ax) - 1
                                lo_f = _lower_bound_f64(wtf_p, n_w, two_ax)
                                resolved = True
                            if iw_g < gmin_p[d]:
                                gmin_p[d] = iw_g
                            if lo_f <= hi_f:
                                fdiff_p[d * (n_w + 1) + lo_f] += 1
                                fdiff_p[d * (n_w + 1) + hi_f + 1] -= 1
                        if zz >= base_lo and zz <= neg_half_l:
                            if not resolved:
                                iw_g = _lower_bound_f64(w_p, n_w, two_ax)
                                hi_f = _upper_bound_f64(w_p, n_w, two_ax) - 1
                                lo_f = _lower_bound_f64(wtf_p, n_w, two_ax)
                                resolved = True
                            if lo_f < bmin_p[d]:
                                bmin_p[d] = lo_f
            elif n_keys > 0:
                # world AABB of the union of all boxes over offsets/widths
                cx = ax + r2 * mid_z
                cy = ay + r5 * mid_z
                cz = az + r8 * mid_z
                rx = fabs(r0) * hx + fabs(r1) * hy + fabs(r2) * hz + 1e-9
                ry = fabs(r3) * hx + fabs(r4) * hy + fabs(r5) * hz + 1e-9
                rz = fabs(r6) * hx + fabs(r7) * hy + fabs(r8) * hz + 1e-9
                vi_lo = <long long> floor((cx - rx) * inv_cell)
                vi_hi = <long long> floor((cx + rx) * inv_cell)
                vj_lo = <long long> floor((cy - ry) * inv_cell)
                vj_hi = <long long> floor((cy + ry) * inv_cell)
                vk_lo = <long long> floor((cz - rz) * inv_cell)
                vk_hi = <long long> floor((cz + rz) * inv_cell)
                if vi_lo < -_COORD_LIMIT: vi_lo = -_COORD_LIMIT
                if vj_lo < -_COORD_LIMIT: vj_lo = -_COORD_LIMIT
                if vk_lo < -_COORD_LIMIT: vk_lo = -_COORD_LIMIT
                if vi_hi > _COORD_LIMIT - 1: vi_hi = _COORD_LIMIT - 1
                if vj_hi > _COORD_LIMIT - 1: vj_hi = _COORD_LIMIT - 1
                if vk_hi > _COORD_LIMIT - 1: vk_hi = _COORD_LIMIT - 1
                # per-axis cell support radius: a voxel whose center projects
                # beyond the box extent plus this margin holds no point that
                # can land inside any gripper box
                mx = (fabs(r0) + fabs(r3) + fabs(r6)) * half_cell + 1e-9
                my = (fabs(r1) + fabs(r4) + fabs(r7)) * half_cell + 1e-9
                mz = (fabs(r2) + fabs(r5) + fabs(r8)) * half_cell + 1e-9
                bx = hx + mx
                by = hy + my
                bz = hz + mz
                zspan = rz + cell
                cz_cells = cz * inv_cell
                inv_r6c = 1.0 / (r6 * cell) if fabs(r6) > 1e-9 else 0.0
                inv_r7c = 1.0 / (r7 * cell) if fabs(r7) > 1e-9 else 0.0
                inv_r8c = 1.0 / (r8 * cell) if fabs(r8) > 1e-9 else 0.0
                for i in range(vi_lo, vi_hi + 1):
                    ox = (i + 0.5) * cell - cx
                    for j in range(vj_lo, vj_hi + 1):
                        oy = (j + 0.5) * cell - cy
                        # narrow the k range per gripper axis; columns fully
                        # outside a projected extent drop without voxel visits
                        base_y = ox * r1 + oy * r4
                        if fabs(base_y) > by + fabs(r7) * zspan:
                            continue
                        base_x = ox * r0 + oy * r3
                        if fabs(base_x) > bx + fabs(r6) * zspan:
                            continue
                        base_z = ox * r2 + oy * r5
                        if fabs(base_z) > bz + fabs(r8) * zspan:
                            continue
                        k_lo = vk_lo
                        k_hi = vk_hi
                        if fabs(r7) > 1e-9:
                            t1 = (-by - base_y) * inv_r7c
                            t2 = (by - base_y) * inv_r7c
                            if t1 > t2:
                                t1, t2 = t2, t1
                            k_lo_f = t1 + cz_cells - 1.5
                            k_hi_f = t2 + cz_cells + 0.5
                            if k_lo_f > <double> k_lo:
                                k_lo = <long long> floor(k_lo_f)
                            if k_hi_f < <double> k_hi:
                                k_hi = <long long> floor(k_hi_f) + 1
                        if fabs(r6) > 1e-9:
                            t1 = (-bx - base_x) * inv_r6c
                            t2 = (bx - base_x) * inv_r6c
                            if t1 > t2:
                                t1, t2 = t2, t1
                            k_lo_f = t1 + cz_cells - 1.5
                            k_hi_f = t2 + cz_cells + 0.5
                            if k_lo_f > <double> k_lo:
                                k_lo = <long long> floor(k_lo_f)
                            if k_hi_f < <double> k_hi:
                                k_hi = <long long> floor(k_hi_f) + 1
                        if fabs(r8) > 1e-9:
                            t1 = (-bz - base_z) * inv_r8c
                            t2 = (bz - base_z) * inv_r8c
                            if t1 > t2:
                                t1, t2 = t2, t1
                            k_lo_f = t1 + cz_cells - 1.5
                            k_hi_f = t2 + cz_cells + 0.5
                            if k_lo_f > <double> k_lo:
                                k_lo = <long long> floor(k_lo_f)
                            if k_hi_f < <double> k_hi:
                                k_hi = <long long> floor(k_hi_f) + 1
                        for k in range(k_lo, k_hi + 1):
                            vcz = (k + 0.5) * cell - cz
                            dproj = base_y + vcz * r7
                            if dproj > by or dproj < -by:
                                continue
                            dproj = base_x + vcz * r6
                            if dproj > bx or dproj < -bx:
                                continue
                            dproj = base_z + vcz * r8
                            if dproj > bz or dproj < -bz:
                                continue
                            key = _pack(i, j, k)
                            pos = _lower_bound_i64(keys_p, n_keys, key)
                            if pos >= n_keys or keys_p[pos] != key:
                                continue
                            t_lo = starts[pos]
                            t_hi = starts[pos + 1]
                            row = pts + 3 * t_lo
                            for t in range(t_lo, t_hi):
                                dx = row[0] - ax
                                dyy = row[1] - ay
                                dz = row[2] - az
                                row += 3
                                qy = dx * r1 + dyy * r4 + dz * r7
                                if qy > half_h or qy < -half_h:
                                    continue
                                qz = dx * r2 + dyy * r5 + dz * r8
                                if qz < lo_z or qz > hi_z:
                                    continue
                                qx = dx * r0 + dyy * r3 + dz * r6
                                two_ax = 2.0 * fabs(qx)
                                if two_ax > max_wtf:
                                    continue
                                # band updates (same as the brute copy)
                                abin = <Py_ssize_t> (two_ax * inv_bin)
                                if abin > 255: abin = 255
                                if lut[abin, 0] >= 0:
                                    iw_g = lut[abin, 0]
                                    hi_f = lut[abin, 1]
                                    lo_f = lut[abin, 2]
                                    resolved = True
                                else:
                                    resolved = False
                                    iw_g = 0; lo_f = 0; hi_f = -1
                                for d in range(n_d):
                                    zz = qz - off_p[d]
                                    if fabs(zz) <= half_l:
                                        if not resolved:
                                            iw_g = _lower_bound_f64(w_p, n_w, two_ax)
                                            hi_f = _upper_bound_f64(w_p, n_w, two_ax) - 1
                                            lo_f = _lower_bound_f64(wtf_p, n_w, two_ax)
                                            resolved = True
                                        if iw_g < gmin_p[d]:
                                            gmin_p[d] = iw_g
                                        if lo_f <= hi_f:
                                            fdiff_p[d * (n_w + 1) + lo_f] += 1
                                            fdiff_p[d * (n_w + 1) + hi_f + 1] -= 1
                                    if zz >= base_lo and zz <= neg_half_l:
                                        if not resolved:
                                            iw_g = _lower_bound_f64(w_p, n_w, two_ax)
                                            hi_f = _upper_bound_f64(w_p, n_w, two_ax) - 1
                                            lo_f = _lower_bound_f64(wtf_p, n_w, two_ax)
                                            resolved = True
                                        if lo_f < bmin_p[d]:
                                            bmin_p[d] = lo_f

            for d in range(n_d):
                run = 0
                for w in range(n_w):
                    run += fdiff_p[d * (n_w + 1) + w]
                    collision = run > 0 or w >= bmin_p[d]
                    if (not collision) and w >= gmin_p[d]:
                        out[c, d, w] = 1
    return out_arr
