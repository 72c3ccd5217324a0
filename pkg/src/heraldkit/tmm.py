"""Coherent transfer-matrix solver for 1D layer stacks.

Conventions: time dependence exp(-i w t), so absorbing media have Im(n) > 0.
Layer j is described by forward/backward amplitudes (v_j, w_j) at its front
interface; per-layer absorbance is the drop of the normal Poynting flux
across the layer, which makes R + T + sum(A) = 1 an identity.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .materials import OpticalMaterial, refractive_index, resolve


class StackError(ValueError):
    pass


@dataclass(frozen=True)
class Layer:
    material: str | OpticalMaterial
    thickness_nm: float
    label: str = ""

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return self.material if isinstance(self.material, str) else self.material.name


@dataclass(frozen=True)
class LayerStack1D:
    incidence: str | OpticalMaterial
    layers: tuple[Layer, ...]
    exit: str | OpticalMaterial
    wavelength_nm: float
    angle_deg: float = 0.0
    polarization: str = "s"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for lay in self.layers:
            if not lay.thickness_nm > 0:
                raise StackError(f"layer {lay.name}: thickness must be > 0")
        if self.polarization not in ("s", "p"):
            raise StackError("polarization must be 's' or 'p'")

    def indices(self) -> np.ndarray:
        mats = [self.incidence, *(l.material for l in self.layers), self.exit]
        return np.array([refractive_index(resolve(m), self.wavelength_nm) for m in mats], dtype=complex)

    def thicknesses(self) -> np.ndarray:
        return np.array([math.inf, *(l.thickness_nm for l in self.layers), math.inf])

    def reversed(self) -> "LayerStack1D":
        return replace(self, incidence=self.exit, exit=self.incidence, layers=tuple(reversed(self.layers)))

    def with_thickness(self, label: str, thickness_nm: float) -> "LayerStack1D":
        hit = False
        new = []
        for lay in self.layers:
            if lay.name == label:
                lay, hit = replace(lay, thickness_nm=thickness_nm), True
            new.append(lay)
        if not hit:
            raise StackError(f"no layer named {label!r}")
        return replace(self, layers=tuple(new))


@dataclass
class StackResponse:
    R: float
    T: float
    A: np.ndarray  # per finite layer
    labels: tuple[str, ...] = ()
    r: complex = 0j
    t: complex = 0j

    def absorbance(self, label: str) -> float:
        return float(self.A[self.labels.index(label)])


def _forward_cos(n: complex, sin_theta: complex) -> complex:
    # pick the branch that propagates or decays away from the interface
    cos_t = cmath.sqrt(1 - sin_theta**2)
    nc = n * cos_t
    if abs(nc.imag) > 1e-13 * max(1.0, abs(nc)):
        forward = nc.imag > 0
    else:
        forward = nc.real > 0
    return cos_t if forward else -cos_t


def _fresnel(pol, n1, n2, c1, c2):
    if pol == "s":
        den = n1 * c1 + n2 * c2
        return (n1 * c1 - n2 * c2) / den, 2 * n1 * c1 / den
    den = n2 * c1 + n1 * c2
    return (n2 * c1 - n1 * c2) / den, 2 * n1 * c1 / den


def _flux(pol, n, cos_t, v, w, n0, c0):
    # normal Poynting flux of the field (v forward, w backward), relative to
    # a unit-amplitude incident wave in medium 0
    if pol == "s":
        return (n * cos_t * np.conj(v + w) * (v - w)).real / (n0 * c0).real
    return (n * np.conj(cos_t) * (v + w) * np.conj(v - w)).real / (n0 * np.conj(c0)).real


def solve_stack(stack: LayerStack1D) -> StackResponse:
    n = stack.indices()
    d = stack.thicknesses()
    if abs(n[0].imag) > 0:
        raise StackError("incidence medium must be lossless for a well-defined reflectance")
    pol = stack.polarization
    sin0 = n[0].real * math.sin(math.radians(stack.angle_deg))
    cos = np.array([_forward_cos(nj, sin0 / nj) for nj in n])
    kz = 2 * np.pi * n * cos / stack.wavelength_nm
    N = len(n)

    r_if = np.empty(N - 1, complex)
    t_if = np.empty(N - 1, complex)
    for j in range(N - 1):
        r_if[j], t_if[j] = _fresnel(pol, n[j], n[j + 1], cos[j], cos[j + 1])

    # layer matrices M_j maps (v, w) at the front of layer j+1 to layer j
    mats = []
    total = np.array([[1, r_if[0]], [r_if[0], 1]], complex) / t_if[0]
    for j in range(1, N - 1):
        delta = kz[j] * d[j]
        prop = np.array([[cmath.exp(-1j * delta), 0], [0, cmath.exp(1j * delta)]])
        m = prop @ np.array([[1, r_if[j]], [r_if[j], 1]]) / t_if[j]
        mats.append(m)
        total = total @ m
    r = total[1, 0] / total[0, 0]
    t = 1 / total[0, 0]

    vw = [None] * N
    vw[N - 1] = np.array([t, 0j])
    for j in range(N - 2, 0, -1):
        vw[j] = mats[j - 1] @ vw[j + 1]

    R = abs(r) ** 2
    T = _flux(pol, n[-1], cos[-1], t, 0j, n[0], cos[0]) if N > 1 else 1.0
    # flux entering each finite layer, and leaving it
    fluxes = [1.0 - R]
    for j in range(1, N - 1):
        v, w = vw[j]
        delta = kz[j] * d[j]
        fluxes.append(_flux(pol, n[j], cos[j], v * cmath.exp(1j * delta), w * cmath.exp(-1j * delta), n[0], cos[0]))
    A = np.array(fluxes[:-1], float) - np.array(fluxes[1:], float)
    if N > 2:
        # the last layer hands its flux to the exit medium: close on T exactly
        A[-1] = fluxes[-2] - T
    labels = tuple(l.name for l in stack.layers)
    return StackResponse(float(R), float(T), A, labels, complex(r), complex(t))


def effective_medium(w_nm: float, pitch_nm: float, t_nm: float, wire_index: complex, host_index: complex,
                     polarization: str = "parallel", wavelength_nm: float | None = None) -> complex:
    """Zeroth-order homogenisation of a subwavelength wire grating.

    ``polarization`` is the orientation of E relative to the wires.  Returns
    the principal square root of the averaged permittivity.
    """
    if pitch_nm <= 0:
        raise StackError("wire pitch must be > 0")
    if not 0 <= w_nm <= pitch_nm:
        raise StackError("wire width must lie in [0, pitch]")
    if not t_nm > 0:
        raise StackError("wire thickness must be > 0")
    if wavelength_nm is not None and pitch_nm > wavelength_nm / (4 * complex(host_index).real):
        warnings.warn("wire pitch exceeds a quarter wavelength in the host; homogenisation is crude",
                      stacklevel=2)
    f = w_nm / pitch_nm
    ew, eh = complex(wire_index) ** 2, complex(host_index) ** 2
    if polarization == "parallel":
        eps = f * ew + (1 - f) * eh
    elif polarization == "perpendicular":
        if f == 1.0:
            eps = ew
        elif f == 0.0:
            eps = eh
        else:
            eps = 1.0 / (f / ew + (1 - f) / eh)
    else:
        raise StackError("polarization must be 'parallel' or 'perpendicular'")
    return cmath.sqrt(eps)


@dataclass(frozen=True)
class SnspdStackSpec:
    """Cavity-coupled detector stack, dimensions in nm unless noted."""
    t_AR: float = 275.0
    t_NbN: float = 5.5
    w_NbN: float = 100.0
    P_S: float = 200.0
    t_c: float = 230.0
    t_r2: float = 200.0
    nanowire_index: complex = complex(5.23, 5.82)
    detector_length_um: float = 10.0
    detector_offset_um: float = 0.0
    ar_material: str = "Al2O3"
    cavity_material: str = "SiO2"
    mirror_material: str = "Au"
    substrate_material: str = "Si"

    def __post_init__(self):
        if not 0 < self.w_NbN <= self.P_S:
            raise StackError("need 0 < w_NbN <= P_S")
        for name in ("t_AR", "t_NbN", "t_c", "t_r2", "detector_length_um"):
            if not getattr(self, name) > 0:
                raise StackError(f"{name} must be > 0")

    @property
    def total_thickness_nm(self) -> float:
        return self.t_AR + self.t_NbN + self.t_c + self.t_r2

    def nanowire_material(self, wavelength_nm: float, polarization: str = "parallel") -> OpticalMaterial:
        host = refractive_index(resolve(self.cavity_material), wavelength_nm)
        n_eff = effective_medium(self.w_NbN, self.P_S, self.t_NbN, self.nanowire_index, host,
                                 polarization, wavelength_nm)
        return OpticalMaterial.constant("NbN-eff", n_eff, wavelength_nm)


def snspd_layer_stack(spec: SnspdStackSpec, wavelength_nm: float = 1560.0, exit="vacuum",
                      polarization: str = "s", angle_deg: float = 0.0) -> LayerStack1D:
    """Substrate-side illuminated detector: AR / wires / cavity / mirror."""
    # s-polarisation at normal incidence is taken as E parallel to the wires
    wire_pol = "parallel" if polarization == "s" else "perpendicular"
    layers = (
        Layer(spec.ar_material, spec.t_AR, "AR"),
        Layer(spec.nanowire_material(wavelength_nm, wire_pol), spec.t_NbN, "NbN"),
        Layer(spec.cavity_material, spec.t_c, "cavity"),
        Layer(spec.mirror_material, spec.t_r2, "mirror"),
    )
    return LayerStack1D(spec.substrate_material, layers, exit, wavelength_nm, angle_deg, polarization)


@dataclass
class CavityMap:
    t_c_nm: np.ndarray
    t_AR_nm: np.ndarray
    R: np.ndarray
    T: np.ndarray
    A_NbN: np.ndarray
    A_Au: np.ndarray

    @property
    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(np.argmax(self.A_NbN), self.A_NbN.shape)
        return float(self.t_c_nm[i]), float(self.t_AR_nm[j])

    @property
    def max(self) -> float:
        return float(self.A_NbN.max())

    def rows(self):
        for i, tc in enumerate(self.t_c_nm):
            for j, ta in enumerate(self.t_AR_nm):
                yield (float(tc), float(ta), float(self.R[i, j]), float(self.T[i, j]),
                       float(self.A_NbN[i, j]), float(self.A_Au[i, j]))


def cavity_sweep(base: LayerStack1D, t_c_nm: Sequence[float], t_AR_nm: Sequence[float],
                 absorber: str = "NbN", cavity: str = "cavity", ar: str = "AR",
                 mirror: str = "mirror") -> CavityMap:
    t_c_nm = np.asarray(t_c_nm, float)
    t_AR_nm = np.asarray(t_AR_nm, float)
    if np.any(t_c_nm <= 0) or np.any(t_AR_nm <= 0):
        raise StackError("sweep thicknesses must be positive")
    shape = (t_c_nm.size, t_AR_nm.size)
    R, T, A, Aau = (np.zeros(shape) for _ in range(4))
    for i, tc in enumerate(t_c_nm):
        s1 = base.with_thickness(cavity, tc)
        for j, ta in enumerate(t_AR_nm):
            resp = solve_stack(s1.with_thickness(ar, ta))
            R[i, j], T[i, j] = resp.R, resp.T
            A[i, j] = resp.absorbance(absorber)
            Aau[i, j] = resp.absorbance(mirror) if mirror in resp.labels else 0.0
    return CavityMap(t_c_nm, t_AR_nm, R, T, A, Aau)


@dataclass
class CrossCheck:
    tmm: StackResponse
    fdtd: "object"
    dR: float
    dT: float
    dA: np.ndarray
    tolerance: float = 0.02

    @property
    def max_delta(self) -> float:
        return float(max(self.dR, self.dT, *np.abs(self.dA))) if self.dA.size else max(self.dR, self.dT)

    @property
    def passed(self) -> bool:
        return self.max_delta < self.tolerance


def fdtd_cross_check(stack: LayerStack1D, **fdtd_kwargs) -> CrossCheck:
    """Solve ``stack`` with both the matrix method and the fine 1D FDTD."""
    from .fdtd.fdtd1d import solve_stack_fdtd

    ref = solve_stack(stack)
    fd = solve_stack_fdtd(stack, **fdtd_kwargs)
    return CrossCheck(ref, fd, abs(ref.R - fd.R), abs(ref.T - fd.T), np.abs(ref.A - fd.A))
