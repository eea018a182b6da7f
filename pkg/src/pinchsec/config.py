"""Physical constants, geometry, and feasibility rules for pinching-antenna layouts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 2.998e8  # m/s
DEFAULT_N_EFF = 1.44      # effective refractive index of the dielectric waveguide
DEFAULT_NOISE_DBM = -90.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """All physical and optimization constants. Distances in meters, powers in watts."""

    f_c: float          # carrier frequency [Hz]
    c: float            # speed of light [m/s]
    lam: float          # free-space wavelength [m]
    k0: float           # free-space wavenumber [rad/m]
    n_eff: float        # effective refractive index
    lambda_g: float     # guided wavelength [m]
    k_g: float          # guided wavenumber [rad/m]
    eta: float          # channel constant c^2 / (16 pi^2 f_c^2) [m^2]
    h: float            # deployment height [m]
    D_x: float          # region side length along x [m]
    D_y: float          # region side length along y [m]
    M: int              # number of waveguides
    N: int              # PAs per waveguide
    delta_min: float    # minimum inter-PA spacing [m], lambda/2
    Q: int              # grid resolution for element-wise placement search
    P_t: float          # transmit power budget [W]
    G: int              # number of multicast groups

    def grid(self) -> np.ndarray:
        """Uniform Q-point candidate grid {0, D_x/(Q-1), ..., D_x}."""
        return np.linspace(0.0, self.D_x, self.Q)


def make_config(
    f_c: float,
    h: float,
    D_x: float,
    D_y: float,
    M: int,
    N: int,
    Q: int,
    P_t: float,
    G: int,
    n_eff: float = DEFAULT_N_EFF,
    c: float = SPEED_OF_LIGHT,
) -> SystemConfig:
    """Build a SystemConfig with all derived constants populated."""
    for name, val in [("f_c", f_c), ("h", h), ("D_x", D_x), ("D_y", D_y), ("P_t", P_t), ("n_eff", n_eff)]:
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    if M < 1 or N < 1 or G < 1:
        raise ValueError(f"M, N, G must be >= 1, got M={M}, N={N}, G={G}")
    if M < G:
        raise ValueError(f"need M >= G, got M={M}, G={G}")
    if Q < 2:
        raise ValueError(f"need Q >= 2, got Q={Q}")

    lam = c / f_c
    k0 = 2.0 * math.pi / lam
    lambda_g = lam / n_eff
    k_g = 2.0 * math.pi / lambda_g
    eta = c**2 / (16.0 * math.pi**2 * f_c**2)
    return SystemConfig(
        f_c=f_c, c=c, lam=lam, k0=k0, n_eff=n_eff, lambda_g=lambda_g, k_g=k_g,
        eta=eta, h=h, D_x=D_x, D_y=D_y, M=M, N=N, delta_min=lam / 2.0, Q=Q,
        P_t=P_t, G=G,
    )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PinchingLayout:
    """PA x-coordinates (M x N, row m = waveguide m) plus waveguide y-coordinates."""

    x: np.ndarray   # (M, N) PA x-coordinates [m]
    y: np.ndarray   # (M,) waveguide y-coordinates [m]
    h: float        # deployment height [m]

    def __post_init__(self):
        object.__setattr__(self, "x", _readonly(self.x))
        object.__setattr__(self, "y", _readonly(self.y))
        if self.x.ndim != 2 or self.y.ndim != 1 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"inconsistent layout shapes x={self.x.shape}, y={self.y.shape}")

    def positions(self) -> np.ndarray:
        """All PA positions as an (M, N, 3) array."""
        M, N = self.x.shape
        pos = np.empty((M, N, 3))
        pos[:, :, 0] = self.x
        pos[:, :, 1] = self.y[:, None]
        pos[:, :, 2] = self.h
        return pos

    def replace_element(self, m: int, n: int, x_new: float) -> "PinchingLayout":
        x = self.x.copy()
        x[m, n] = x_new
        return PinchingLayout(x=x, y=self.y.copy(), h=self.h)


def waveguide_y_coords(cfg: SystemConfig) -> np.ndarray:
    """Uniform spacing d_y = D_y/(M-1); a single waveguide sits centered at D_y/2."""
    if cfg.M == 1:
        return np.array([cfg.D_y / 2.0])
    return np.arange(cfg.M) * cfg.D_y / (cfg.M - 1)


def validate_layout(layout: PinchingLayout, cfg: SystemConfig) -> list[str]:
    """Return every violated placement constraint; empty list iff feasible.

    Dimension mismatch is an error (raised), distinct from infeasibility.
    """
    M, N = layout.x.shape
    if (M, N) != (cfg.M, cfg.N):
        raise ValueError(f"layout is {M}x{N}, config expects {cfg.M}x{cfg.N}")
    violations = []
    for m in range(M):
        row = layout.x[m]
        if row[0] < 0.0:
            violations.append(f"x[{m},0]={row[0]:.6g} below 0")
        if row[-1] > cfg.D_x:
            violations.append(f"x[{m},{N - 1}]={row[-1]:.6g} above D_x={cfg.D_x:.6g}")
        for n in range(1, N):
            gap = row[n] - row[n - 1]
            if gap <= 0.0:
                violations.append(f"x[{m},{n}]={row[n]:.6g} not strictly above x[{m},{n - 1}]={row[n - 1]:.6g}")
            elif gap < cfg.delta_min * (1.0 - 1e-12):
                violations.append(
                    f"spacing x[{m},{n}]-x[{m},{n - 1}]={gap:.6g} below delta_min={cfg.delta_min:.6g}"
                )
    return violations


def random_feasible_layout(cfg: SystemConfig, seed) -> PinchingLayout:
    """Draw a feasible layout uniformly from spacing-feasible Q-grid placements.

    Deterministic given seed. Raises if N PAs at delta_min spacing cannot fit in D_x.
    """
    if (cfg.N - 1) * cfg.delta_min > cfg.D_x:
        raise ValueError(
            f"infeasible geometry: {cfg.N} PAs at spacing {cfg.delta_min:.6g} need "
            f"{(cfg.N - 1) * cfg.delta_min:.6g} m > D_x={cfg.D_x:.6g}"
        )
    rng = np.random.default_rng(seed)
    grid = cfg.grid()
    step = grid[1] - grid[0]
    # minimum index gap whose physical spacing is >= delta_min
    gap = max(1, math.ceil(cfg.delta_min / step - 1e-9))
    # shifted-index trick: sorted indices with pairwise gap >= `gap` map bijectively
    # to sorted distinct indices in a shrunk range
    n_free = cfg.Q - (cfg.N - 1) * gap
    if n_free < cfg.N:
        raise ValueError(
            f"grid too coarse: Q={cfg.Q} points cannot host {cfg.N} PAs at spacing {cfg.delta_min:.6g}"
        )
    x = np.empty((cfg.M, cfg.N))
    for m in range(cfg.M):
        base = np.sort(rng.choice(n_free, size=cfg.N, replace=False))
        idx = base + gap * np.arange(cfg.N)
        x[m] = grid[idx]
    return PinchingLayout(x=x, y=waveguide_y_coords(cfg), h=cfg.h)


@dataclass(frozen=True)
class Scenario:
    """Receiver geometry: Bobs partitioned into G groups plus external Eves.

    Positions are (x, y, 0) on the ground plane; noise powers in watts.
    """

    bob_pos: np.ndarray     # (K, 3)
    bob_group: np.ndarray   # (K,) int, values in [0, G)
    bob_noise: np.ndarray   # (K,) W
    eve_pos: np.ndarray     # (L, 3), possibly empty
    eve_noise: np.ndarray   # (L,) W
    G: int

    def __post_init__(self):
        object.__setattr__(self, "bob_pos", _readonly(np.atleast_2d(self.bob_pos)))
        object.__setattr__(self, "bob_group", _readonly(np.asarray(self.bob_group, dtype=int)).astype(int))
        object.__setattr__(self, "bob_noise", _readonly(self.bob_noise))
        object.__setattr__(self, "eve_pos", _readonly(np.asarray(self.eve_pos, dtype=float).reshape(-1, 3)))
        object.__setattr__(self, "eve_noise", _readonly(self.eve_noise))
        if np.any(self.bob_noise <= 0) or np.any(self.eve_noise <= 0):
            raise ValueError("noise powers must be positive")
        if self.K == 0:
            raise ValueError("scenario needs at least one Bob")
        groups = set(int(g) for g in self.bob_group)
        if not groups <= set(range(self.G)):
            raise ValueError(f"bob_group values {groups} outside [0, {self.G})")
        if groups != set(range(self.G)):
            raise ValueError("every group must contain at least one Bob")

    @property
    def K(self) -> int:
        return self.bob_pos.shape[0]

    @property
    def L(self) -> int:
        return self.eve_pos.shape[0]

    def group_members(self, g: int) -> np.ndarray:
        return np.flatnonzero(self.bob_group == g)

    def check_positions(self, cfg: SystemConfig) -> list[str]:
        bad = []
        for tag, pos in [("bob", self.bob_pos), ("eve", self.eve_pos)]:
            for i, p in enumerate(pos):
                if not (0 <= p[0] <= cfg.D_x and 0 <= p[1] <= cfg.D_y and p[2] == 0.0):
                    bad.append(f"{tag}[{i}] at {p} outside [0,{cfg.D_x}]x[0,{cfg.D_y}]x{{0}}")
        return bad
