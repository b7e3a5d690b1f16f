from . import gf2poly, hash_families, lhl_bounds, qinfo, qmat

__all__ = ["gf2poly", "hash_families", "lhl_bounds", "qinfo", "qmat"]
