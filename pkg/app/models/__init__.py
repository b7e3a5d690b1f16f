from .bounds import BoundQuery, BoundReport
from .family import FamilyKind, HashFamilyDescriptor, Seed
from .report import InstanceRecord, InstanceSpec, SuiteStatus, VerifyReport
from .states import CqState, HashedState, PureStateVector

__all__ = [
    "BoundQuery",
    "BoundReport",
    "CqState",
    "FamilyKind",
    "HashFamilyDescriptor",
    "HashedState",
    "InstanceRecord",
    "InstanceSpec",
    "PureStateVector",
    "Seed",
    "SuiteStatus",
    "VerifyReport",
]
