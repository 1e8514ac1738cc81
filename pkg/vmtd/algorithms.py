"""
Names of the learning algorithms and the structural facts shared by the
analysis, prediction and control modules (which auxiliary parameters an
algorithm carries, which baseline a variance-minimizing variant reduces to).
"""

import enum

from .exceptions import ConfigError


def _parse(enum_class, name):
    if isinstance(name, enum_class):
        return name
    key = str(name).strip().lower().replace("-", "").replace("_", "")
    for member in enum_class:
        if key == member.value.lower() or key in member.aliases:
            return member
    choices = ", ".join(member.value for member in enum_class)
    raise ConfigError(
        "Unknown algorithm %r; expected one of: %s" % (name, choices)
    )


class Algorithm(str, enum.Enum):
    """
    Linear policy-evaluation algorithms.
    """

    TD = "TD"
    TDC = "TDC"
    ETD = "ETD"
    VMTD = "VMTD"
    VMTDC = "VMTDC"
    VMETD = "VMETD"

    @property
    def aliases(self):
        return {"td0"} if self is Algorithm.TD else set()

    @property
    def variance_minimizing(self) -> bool:
        return self.value.startswith("VM")

    @property
    def uses_correction(self) -> bool:
        """
        True when the algorithm keeps the secondary weights ``u``.
        """
        return self in (Algorithm.TDC, Algorithm.VMTDC)

    @property
    def emphatic(self) -> bool:
        """
        True when the algorithm keeps the follow-on trace ``F``.
        """
        return self in (Algorithm.ETD, Algorithm.VMETD)

    @property
    def base(self) -> "Algorithm":
        if self.variance_minimizing:
            return Algorithm(self.value[2:])
        return self

    @classmethod
    def parse(cls, name) -> "Algorithm":
        return _parse(cls, name)


class ControlAlgorithm(str, enum.Enum):
    """
    Action-value control algorithms. GQ, EQ and their VM variants are the
    control counterparts of TDC, ETD, VMTDC and VMETD.
    """

    SARSA = "Sarsa"
    Q = "Q"
    GQ = "GQ"
    EQ = "EQ"
    VMSARSA = "VMSarsa"
    VMQ = "VMQ"
    VMGQ = "VMGQ"
    VMEQ = "VMEQ"

    @property
    def aliases(self):
        if self is ControlAlgorithm.Q:
            return {"qlearning"}
        if self is ControlAlgorithm.VMQ:
            return {"vmqlearning"}
        return set()

    @property
    def variance_minimizing(self) -> bool:
        return self.value.startswith("VM")

    @property
    def base(self) -> "ControlAlgorithm":
        if self.variance_minimizing:
            return ControlAlgorithm(self.value[2:])
        return self

    @property
    def on_policy_target(self) -> bool:
        """
        Sarsa variants bootstrap from the sampled next action; every other
        algorithm bootstraps from the greedy next action.
        """
        return self.base is ControlAlgorithm.SARSA

    @property
    def prediction_counterpart(self) -> Algorithm:
        family = {
            ControlAlgorithm.SARSA: Algorithm.TD,
            ControlAlgorithm.Q: Algorithm.TD,
            ControlAlgorithm.GQ: Algorithm.TDC,
            ControlAlgorithm.EQ: Algorithm.ETD,
        }[self.base]
        if self.variance_minimizing:
            return Algorithm("VM" + family.value)
        return family

    @classmethod
    def parse(cls, name) -> "ControlAlgorithm":
        return _parse(cls, name)
