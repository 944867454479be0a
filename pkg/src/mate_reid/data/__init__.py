from .cost import annotation_cost
from .io import load_dataset, save_dataset
from .synthetic import generate_synthetic
from .transform import ics_transform

__all__ = [
    "annotation_cost",
    "generate_synthetic",
    "ics_transform",
    "load_dataset",
    "save_dataset",
]
