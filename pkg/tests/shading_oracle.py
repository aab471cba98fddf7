"""Independent per-pixel shading reference for renderer tests.

Pure scalar loops that re-derive footprint, normal, and shading per pixel in
float32; shares only the scene/light definitions with the library. Written to
follow the same operation order so results must agree bit for bit.
"""

import numpy as np

from videorelight.data.scenes import primitive_center

F32 = np.float32


def shade_pixel(scene, light, k, row, col):
    x = F32(col) + F32(0.5)
    y = F32(row) + F32(0.5)
    albedo = None
    normal = None
    covered = False
    for prim in scene.primitives:  # last covering primitive is on top
        cx, cy = primitive_center(prim, k, scene.frames)
        cx32, cy32 = F32(cx), F32(cy)
        dx = x - cx32
        dy = cy32 - y  # y-up
        if prim.kind == "box":
            sx = F32(prim.size)
            sy = F32(prim.size) * F32(prim.aspect)
            if abs(dx) <= sx and abs(dy) <= sy:
                albedo = [F32(a) for a in prim.albedo]
                normal = (F32(0), F32(0), F32(1))
                covered = True
        elif prim.kind == "disk":
            r = F32(prim.size)
            u = dx / r
            v = dy / r
            q2 = u * u + v * v
            if q2 <= F32(1):
                nz = np.sqrt(np.maximum(F32(1) - q2, F32(0)))
                albedo = [F32(a) for a in prim.albedo]
                normal = (u, v, nz)
                covered = True
        elif prim.kind == "blob":
            wc, ws = F32(prim.wobble_cos), F32(prim.wobble_sin)
            wob = F32(prim.wobble)
            r = F32(prim.size)
            dxr = wc * dx - ws * dy
            dyr = ws * dx + wc * dy
            rho2 = dxr * dxr + dyr * dyr
            rho = np.sqrt(rho2)
            if rho2 > 0:
                s = dyr / rho
                c = dxr / rho
                sin3 = s * (c * c * F32(3) - s * s)
                reff = r * (F32(1) + wob * sin3)
                if rho <= reff:
                    u = dx / reff
                    v = dy / reff
                    q2 = u * u + v * v
                    nz = np.sqrt(np.maximum(F32(1) - q2, F32(0)))
                    albedo = [F32(a) for a in prim.albedo]
                    normal = (u, v, nz)
                    covered = True
            else:
                albedo = [F32(a) for a in prim.albedo]
                normal = (F32(0), F32(0), F32(1))
                covered = True
        else:
            raise AssertionError(f"unknown kind {prim.kind}")
    if albedo is None:
        xn = x / F32(scene.width)
        yn = y / F32(scene.height)
        albedo = []
        for ch in range(3):
            a = (F32(scene.background_base[ch]) + F32(scene.background_gx[ch]) * xn) \
                + F32(scene.background_gy[ch]) * yn
            albedo.append(np.clip(a, F32(0), F32(1)))
        normal = (F32(0), F32(0), F32(1))
    d = light.direction_traj[k]
    lx, ly, lz = F32(d[0]), F32(d[1]), F32(d[2])
    nl = normal[0] * lx + normal[1] * ly + normal[2] * lz
    term = F32(light.ambient) + F32(light.intensity) * np.maximum(nl, F32(0))
    out = np.empty(3, dtype=F32)
    for ch in range(3):
        out[ch] = np.clip(albedo[ch] * F32(light.color[ch]) * term, F32(0), F32(1))
    return out, covered


def render_frame_bruteforce(scene, light, k):
    video = np.empty((scene.height, scene.width, 3), dtype=F32)
    mask = np.empty((scene.height, scene.width), dtype=F32)
    for row in range(scene.height):
        for col in range(scene.width):
            px, covered = shade_pixel(scene, light, k, row, col)
            video[row, col] = px
            mask[row, col] = F32(1) if covered else F32(0)
    return video, mask
