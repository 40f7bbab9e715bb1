"""Delay-Doppler grid geometry.

A DD frame lives on the fundamental region [0, tau_p) x [0, nu_p) sampled on
an M x N information lattice with spacing (tau_p/M, nu_p/N).  The crystalline
condition tau_p * nu_p = 1 ties the two periods together, so bandwidth and
duration follow as B = M * nu_p and T = N * tau_p.
"""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class DDGrid:
    """M x N delay-Doppler sampling grid with periods (tau_p, nu_p)."""

    M: int
    N: int
    nu_p: float
    tau_p: float = field(default=0.0)

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError(f"grid needs M, N >= 1, got M={self.M}, N={self.N}")
        if self.nu_p <= 0:
            raise ValueError(f"nu_p must be positive, got {self.nu_p}")
        if self.tau_p == 0.0:
            object.__setattr__(self, "tau_p", 1.0 / self.nu_p)
        # crystalline condition: the DD periods must multiply to exactly one
        if abs(self.tau_p * self.nu_p - 1.0) > 1e-12:
            raise ValueError(
                f"tau_p * nu_p = {self.tau_p * self.nu_p!r} violates the "
                "crystalline condition tau_p * nu_p = 1"
            )

    @property
    def MN(self) -> int:
        return self.M * self.N

    @property
    def B(self) -> float:
        """Bandwidth in Hz (M Doppler periods)."""
        return self.M * self.nu_p

    @property
    def T(self) -> float:
        """Frame duration in seconds (N delay periods)."""
        return self.N * self.tau_p

    @property
    def delay_bin(self) -> float:
        """Delay resolution tau_p / M = 1/B in seconds."""
        return self.tau_p / self.M

    @property
    def doppler_bin(self) -> float:
        """Doppler resolution nu_p / N = 1/T in Hz."""
        return self.nu_p / self.N
