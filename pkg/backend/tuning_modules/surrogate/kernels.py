"""
Covariance kernels over encoded configuration vectors
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import SpaceError
from ..models.space_models import EncodedVector, EncodingLayout


class KernelVariant(str, Enum):
    RBF = "rbf"
    MATERN52 = "matern52"
    HAMMING = "hamming"
    PRODUCT = "product"


class KernelFamily(str, Enum):
    """Kernel structures used by the GP-based optimizers"""
    RBF = "rbf"          # one RBF over every column
    MIXED = "mixed"      # Matérn-5/2 on numeric columns x Hamming on categorical columns


@dataclass(frozen=True)
class Kernel:
    """k(θ, θ'); leaf variants act on `columns`, products multiply components."""

    variant: KernelVariant
    lengthscales: np.ndarray = field(default_factory=lambda: np.ones(0))
    signal_variance: float = 1.0
    columns: Tuple[int, ...] = ()
    components: Tuple["Kernel", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lengthscales", np.asarray(self.lengthscales, dtype=float).ravel())
        object.__setattr__(self, "columns", tuple(int(c) for c in self.columns))
        if self.variant == KernelVariant.PRODUCT:
            seen: set = set()
            for comp in self.components:
                overlap = seen.intersection(comp.active_columns())
                if overlap:
                    raise ValueError(f"product components overlap on columns {sorted(overlap)}")
                seen.update(comp.active_columns())
            return
        if len(self.lengthscales) != len(self.columns):
            raise ValueError(
                f"{self.variant.value} kernel has {len(self.columns)} columns but {len(self.lengthscales)} lengthscales"
            )
        if np.any(self.lengthscales <= 0):
            raise ValueError("lengthscales must be positive")
        if self.signal_variance <= 0:
            raise ValueError("signal variance must be positive")

    def active_columns(self) -> Tuple[int, ...]:
        if self.variant == KernelVariant.PRODUCT:
            return tuple(c for comp in self.components for c in comp.active_columns())
        return self.columns

    @property
    def prior_variance(self) -> float:
        """k(q, q) for these stationary kernels."""
        if self.variant == KernelVariant.PRODUCT:
            return float(np.prod([c.prior_variance for c in self.components]))
        return float(self.signal_variance)

    def with_params(self, signal_variance: float, lengthscales: Sequence[float]) -> "Kernel":
        """Copy with one signal variance and one isotropic lengthscale per leaf component."""
        if self.variant != KernelVariant.PRODUCT:
            return replace(
                self,
                signal_variance=float(signal_variance),
                lengthscales=np.full(len(self.columns), float(lengthscales[0])),
            )
        comps = []
        for i, comp in enumerate(self.components):
            s2 = float(signal_variance) if i == 0 else 1.0
            comps.append(comp.with_params(s2, [lengthscales[i]]))
        return replace(self, components=tuple(comps))

    @property
    def n_lengthscale_groups(self) -> int:
        return len(self.components) if self.variant == KernelVariant.PRODUCT else 1


def rbf_kernel(columns: Sequence[int], lengthscale: Union[float, Sequence[float]] = 1.0,
               signal_variance: float = 1.0) -> Kernel:
    return Kernel(KernelVariant.RBF, np.broadcast_to(lengthscale, (len(columns),)), signal_variance, tuple(columns))


def matern52_kernel(columns: Sequence[int], lengthscale: Union[float, Sequence[float]] = 1.0,
                    signal_variance: float = 1.0) -> Kernel:
    return Kernel(KernelVariant.MATERN52, np.broadcast_to(lengthscale, (len(columns),)), signal_variance, tuple(columns))


def hamming_kernel(columns: Sequence[int], lengthscale: Union[float, Sequence[float]] = 1.0,
                   signal_variance: float = 1.0) -> Kernel:
    return Kernel(KernelVariant.HAMMING, np.broadcast_to(lengthscale, (len(columns),)), signal_variance, tuple(columns))


def product_kernel(components: Sequence[Kernel]) -> Kernel:
    return Kernel(KernelVariant.PRODUCT, components=tuple(components))


def kernel_for_layout(family: KernelFamily, layout: EncodingLayout, lengthscale: float = 0.5) -> Kernel:
    """Default-parameter kernel of a family for an encoding layout"""
    columns = list(range(layout.width))
    if KernelFamily(family) == KernelFamily.RBF:
        return rbf_kernel(columns, lengthscale)
    cat_mask = layout.categorical_mask
    numeric_cols = [c for c in columns if not cat_mask[c]]
    cat_cols = [c for c in columns if cat_mask[c]]
    if not cat_cols:
        return matern52_kernel(numeric_cols, lengthscale)
    if not numeric_cols:
        return hamming_kernel(cat_cols, 1.0)
    return product_kernel([matern52_kernel(numeric_cols, lengthscale), hamming_kernel(cat_cols, 1.0)])


def kernel_matrix(k: Kernel, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Covariance matrix K_ij = k(A_i, B_j)"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise SpaceError(f"kernel inputs have {A.shape[1]} and {B.shape[1]} columns")
    if k.variant == KernelVariant.PRODUCT:
        K = np.ones((A.shape[0], B.shape[0]))
        for comp in k.components:
            K *= kernel_matrix(comp, A, B)
        return K

    cols = list(k.columns)
    if cols and max(cols) >= A.shape[1]:
        raise SpaceError(f"kernel column {max(cols)} outside input width {A.shape[1]}")
    if not cols:
        return np.full((A.shape[0], B.shape[0]), k.signal_variance)

    if k.variant == KernelVariant.HAMMING:
        mismatch = np.zeros((A.shape[0], B.shape[0]))
        for col, ell in zip(cols, k.lengthscales):
            mismatch += (A[:, col][:, None] != B[:, col][None, :]) / ell
        return k.signal_variance * np.exp(-mismatch)

    As = A[:, cols] / k.lengthscales
    Bs = B[:, cols] / k.lengthscales
    sq = cdist(As, Bs, metric="sqeuclidean")
    if k.variant == KernelVariant.RBF:
        return k.signal_variance * np.exp(-0.5 * sq)
    r = np.sqrt(np.maximum(sq, 0.0))
    s5r = np.sqrt(5.0) * r
    return k.signal_variance * (1.0 + s5r + (5.0 / 3.0) * sq) * np.exp(-s5r)


def kernel_eval(k: Kernel, a: Union[EncodedVector, np.ndarray], b: Union[EncodedVector, np.ndarray]) -> float:
    """k(a, b) for two encoded vectors"""
    if isinstance(a, EncodedVector) and isinstance(b, EncodedVector) and a.layout != b.layout:
        raise SpaceError("kernel arguments have different encoding layouts")
    va = a.coords if isinstance(a, EncodedVector) else np.asarray(a, dtype=float)
    vb = b.coords if isinstance(b, EncodedVector) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise SpaceError(f"kernel arguments have shapes {va.shape} and {vb.shape}")
    return float(kernel_matrix(k, va[None, :], vb[None, :])[0, 0])


def kernel_diag(k: Kernel, Q: np.ndarray) -> np.ndarray:
    return np.full(np.atleast_2d(Q).shape[0], k.prior_variance)

